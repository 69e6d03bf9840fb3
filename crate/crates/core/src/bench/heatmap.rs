/// Value at the 99th percentile (nearest rank) of `values`, 0 when empty.
pub fn percentile_99(values: &[u32]) -> u32 {
    if values.is_empty() {
        return 0;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let rank = (0.99 * v.len() as f64).ceil() as usize;
    v[rank.clamp(1, v.len()) - 1]
}

/// Linear blue-to-red ramp; `value >= max` is pure red.
pub fn ramp(value: u32, max: u32) -> [u8; 3] {
    let s = if max == 0 {
        if value > 0 {
            1.0
        } else {
            0.0
        }
    } else {
        (value as f64 / max as f64).min(1.0)
    };
    let r = (255.0 * s).round() as u8;
    [r, 0, 255 - r]
}

/// Binary PPM (P6) of per-pixel counts, row-major from the top-left.
pub fn encode_ppm(counts: &[u32], width: u32, height: u32, max: u32) -> Vec<u8> {
    assert_eq!(counts.len(), (width * height) as usize, "pixel count mismatch");
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(counts.len() * 3);
    for &c in counts {
        out.extend_from_slice(&ramp(c, max));
    }
    out
}
