use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::traverse::BatchAggregate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub scene: String,
    pub triangles: usize,
    pub width: usize,
    pub rotations: usize,
    pub alpha: f64,
    pub mode: String,
    pub seed: u64,
    pub max_levels: Option<u32>,
}

/// Measurements of one tree variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    /// `aabb`, `heuristic` or `brute`.
    pub variant: String,
    pub sah: f64,
    pub annotated_nodes: usize,
    pub interior_nodes: usize,
    pub primary: BatchAggregate,
    pub gi: BatchAggregate,
    /// Conversion time; informational and left out of the CSV.
    pub build_millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub meta: RunMeta,
    /// The AABB baseline comes first.
    pub variants: Vec<VariantReport>,
}

pub const CSV_HEADER: &str = "scene,triangles,width,rotations,alpha,seed,variant,annotated_nodes,interior_nodes,sah,sah_ratio,ray_kind,ray_count,hits,max_iters,avg_iters,max_iters_ratio,avg_iters_ratio";

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        a / b
    }
}

impl RunReport {
    pub fn baseline(&self) -> &VariantReport {
        &self.variants[0]
    }

    pub fn variant(&self, name: &str) -> Option<&VariantReport> {
        self.variants.iter().find(|v| v.variant == name)
    }

    /// One row per variant and ray kind. Floats use the shortest
    /// representation that round-trips; ratios are against the baseline row
    /// of the same ray kind.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        let base = self.baseline();
        let m = &self.meta;
        for v in &self.variants {
            for (kind, agg, base_agg) in [("primary", &v.primary, &base.primary), ("gi", &v.gi, &base.gi)] {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    m.scene,
                    m.triangles,
                    m.width,
                    m.rotations,
                    m.alpha,
                    m.seed,
                    v.variant,
                    v.annotated_nodes,
                    v.interior_nodes,
                    v.sah,
                    ratio(v.sah, base.sah),
                    kind,
                    agg.rays,
                    agg.hits,
                    agg.max_iterations,
                    agg.mean_iterations,
                    ratio(agg.max_iterations as f64, base_agg.max_iterations as f64),
                    ratio(agg.mean_iterations, base_agg.mean_iterations),
                )
                .expect("writing to a String cannot fail");
            }
        }
        out
    }
}

/// Brute-force SAH per (axes, m) cell of a rotation-set sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis_counts: Vec<usize>,
    pub m_values: Vec<u32>,
    /// `sah[i][j]` for `axis_counts[i]`, `m_values[j]`.
    pub sah: Vec<Vec<f64>>,
    pub baseline_sah: f64,
}

impl SweepTable {
    pub fn get(&self, axes: usize, m: u32) -> Option<f64> {
        let i = self.axis_counts.iter().position(|&a| a == axes)?;
        let j = self.m_values.iter().position(|&x| x == m)?;
        Some(self.sah[i][j])
    }

    /// Rows are axis counts, columns angle subdivisions.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axes\\m");
        for m in &self.m_values {
            write!(out, ",{m}").unwrap();
        }
        out.push('\n');
        for (a, row) in self.axis_counts.iter().zip(&self.sah) {
            write!(out, "{a}").unwrap();
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        writeln!(out, "aabb,{}", self.baseline_sah).unwrap();
        out
    }
}
