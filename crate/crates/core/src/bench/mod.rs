//! Benchmark harness: build once, convert per mode, trace identical primary
//! and GI ray sets through every variant, report SAH and iteration counts.

mod camera;
mod config;
mod heatmap;
mod report;

pub use camera::{canonical_cameras, gen_gi_rays, gen_primary_rays, CameraConfig};
pub use config::{BenchConfig, ModeSelection, SceneSource};
pub use heatmap::{encode_ppm, percentile_99, ramp};
pub use report::{RunMeta, RunReport, SweepTable, VariantReport, CSV_HEADER};

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use crate::bvh::{sah_cost, BuildConfig, WideBvh};
use crate::convert::{convert, ConversionConfig, ConversionMode, DobbAnnotation};
use crate::error::Result;
use crate::geom::Ray;
use crate::rotation::RotationSet;
use crate::scene::{gen_axis_aligned_grid, gen_hairball, load_obj, HairballParams, Scene};
use crate::traverse::batch_trace;

pub fn mode_name(mode: Option<ConversionMode>) -> &'static str {
    match mode {
        None => "aabb",
        Some(ConversionMode::Heuristic) => "heuristic",
        Some(ConversionMode::BruteForce) => "brute",
    }
}

pub fn load_scene(source: &SceneSource, seed: u64) -> Result<Scene> {
    match source {
        SceneSource::Hairball { strands, segments } => gen_hairball(&HairballParams {
            seed,
            strands: *strands,
            segments_per_strand: *segments,
            ..HairballParams::default()
        }),
        SceneSource::Grid { count } => gen_axis_aligned_grid(seed, *count),
        SceneSource::Obj { path } => load_obj(path),
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub report: RunReport,
    pub csv: String,
    /// `(file name, PPM bytes)` per variant and camera.
    pub heatmaps: Vec<(String, Vec<u8>)>,
}

impl BenchOutput {
    /// Writes `report.csv`, `report.json` and the heatmaps into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.csv"), &self.csv)?;
        let json = serde_json::to_string_pretty(&self.report).expect("report serializes");
        std::fs::write(dir.join("report.json"), json)?;
        for (name, bytes) in &self.heatmaps {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

/// Builds, converts and traces according to `cfg`.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchOutput> {
    cfg.validate()?;
    let scene = load_scene(&cfg.scene, cfg.seed)?;
    let tree = WideBvh::build(
        &scene,
        &BuildConfig {
            width: cfg.width,
            ..BuildConfig::default()
        },
    )?;
    let set = Arc::new(RotationSet::new(cfg.axes, cfg.m)?);

    let cameras = if cfg.cameras.is_empty() {
        canonical_cameras(&scene.bounds, cfg.resolution[0], cfg.resolution[1], cfg.vfov)
    } else {
        cfg.cameras.clone()
    };
    let per_camera: Vec<Vec<Ray>> = cameras.iter().map(gen_primary_rays).collect::<Result<_>>()?;
    let primary: Vec<Ray> = per_camera.concat();

    let mut variants: Vec<(Option<ConversionMode>, Option<DobbAnnotation>, f64)> = vec![(None, None, 0.0)];
    for mode in cfg.mode.modes() {
        let start = Instant::now();
        let ann = convert(
            &tree,
            set.clone(),
            &ConversionConfig {
                alpha: cfg.alpha,
                max_levels_from_leaf: cfg.max_levels,
                mode,
            },
        )?;
        variants.push((Some(mode), Some(ann), start.elapsed().as_secs_f64() * 1e3));
    }

    let base_primary = batch_trace(&tree, None, &primary)?;
    let gi = if cfg.gi {
        gen_gi_rays(&tree.triangles, &scene.bounds, &primary, &base_primary.hits, cfg.seed)
    } else {
        Vec::new()
    };

    let mut reports = Vec::new();
    let mut counts: Vec<Vec<u32>> = Vec::new();
    for (mode, ann, millis) in &variants {
        let p = if ann.is_none() {
            base_primary.clone()
        } else {
            batch_trace(&tree, ann.as_ref(), &primary)?
        };
        let g = batch_trace(&tree, ann.as_ref(), &gi)?;
        reports.push(VariantReport {
            variant: mode_name(*mode).to_string(),
            sah: sah_cost(&tree, ann.as_ref()),
            annotated_nodes: ann.as_ref().map_or(0, |a| a.annotated_count()),
            interior_nodes: tree.nodes.len(),
            primary: p.aggregate,
            gi: g.aggregate,
            build_millis: *millis,
        });
        counts.push(p.stats.iter().map(|s| s.iterations).collect());
    }

    let mut heatmaps = Vec::new();
    if cfg.heatmaps {
        let pooled: Vec<u32> = counts.concat();
        let scale = percentile_99(&pooled);
        for (v, c) in reports.iter().zip(&counts) {
            let mut offset = 0;
            for (k, cam) in cameras.iter().enumerate() {
                let n = (cam.width * cam.height) as usize;
                heatmaps.push((
                    format!("heatmap_{}_cam{k}.ppm", v.variant),
                    encode_ppm(&c[offset..offset + n], cam.width, cam.height, scale),
                ));
                offset += n;
            }
        }
    }

    let report = RunReport {
        meta: RunMeta {
            scene: cfg.scene.name(),
            triangles: scene.len(),
            width: cfg.width,
            rotations: set.len(),
            alpha: cfg.alpha,
            mode: format!("{:?}", cfg.mode).to_lowercase(),
            seed: cfg.seed,
            max_levels: cfg.max_levels,
        },
        variants: reports,
    };
    let csv = report.to_csv();
    Ok(BenchOutput { report, csv, heatmaps })
}

/// Brute-force SAH of `tree` for every rotation set `(axes, m)`.
pub fn sweep_rotation_sets(tree: &WideBvh, axis_counts: &[usize], m_values: &[u32]) -> Result<SweepTable> {
    let mut sah = Vec::with_capacity(axis_counts.len());
    for &axes in axis_counts {
        let mut row = Vec::with_capacity(m_values.len());
        for &m in m_values {
            let set = Arc::new(RotationSet::new(axes, m)?);
            let ann = convert(
                tree,
                set,
                &ConversionConfig {
                    mode: ConversionMode::BruteForce,
                    ..ConversionConfig::default()
                },
            )?;
            row.push(sah_cost(tree, Some(&ann)));
        }
        sah.push(row);
    }
    Ok(SweepTable {
        axis_counts: axis_counts.to_vec(),
        m_values: m_values.to_vec(),
        sah,
        baseline_sah: sah_cost(tree, None),
    })
}
