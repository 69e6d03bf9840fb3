use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::camera::CameraConfig;
use crate::convert::ConversionMode;
use crate::error::{Error, Result};

/// Which variants a run measures. The AABB baseline is always traced since
/// every ratio is taken against it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    Aabb,
    Heuristic,
    Brute,
    All,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<ConversionMode> {
        match self {
            ModeSelection::Aabb => vec![],
            ModeSelection::Heuristic => vec![ConversionMode::Heuristic],
            ModeSelection::Brute => vec![ConversionMode::BruteForce],
            ModeSelection::All => vec![ConversionMode::Heuristic, ConversionMode::BruteForce],
        }
    }
}

impl std::str::FromStr for ModeSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aabb" => Ok(ModeSelection::Aabb),
            "heuristic" => Ok(ModeSelection::Heuristic),
            "brute" => Ok(ModeSelection::Brute),
            "all" => Ok(ModeSelection::All),
            _ => Err(Error::Config(format!("unknown mode `{s}` (aabb, heuristic, brute, all)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SceneSource {
    Hairball {
        #[serde(default = "default_strands")]
        strands: u32,
        #[serde(default = "default_segments")]
        segments: u32,
    },
    Grid {
        #[serde(default = "default_cubes")]
        count: u32,
    },
    Obj {
        path: PathBuf,
    },
}

fn default_strands() -> u32 {
    1000
}

fn default_segments() -> u32 {
    8
}

fn default_cubes() -> u32 {
    1000
}

impl SceneSource {
    /// Parses the `--scene` flag: `hairball`, `grid` or a path to an OBJ file.
    pub fn from_flag(s: &str) -> SceneSource {
        match s {
            "hairball" => SceneSource::Hairball {
                strands: default_strands(),
                segments: default_segments(),
            },
            "grid" => SceneSource::Grid { count: default_cubes() },
            path => SceneSource::Obj { path: path.into() },
        }
    }

    pub fn name(&self) -> String {
        match self {
            SceneSource::Hairball { .. } => "hairball".into(),
            SceneSource::Grid { .. } => "grid".into(),
            SceneSource::Obj { path } => path
                .file_stem()
                .map_or_else(|| "obj".into(), |s| s.to_string_lossy().into_owned()),
        }
    }
}

/// Benchmark configuration file (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub scene: SceneSource,
    /// Node width N.
    pub width: usize,
    pub alpha: f64,
    pub mode: ModeSelection,
    /// Rotation set axes (3..=13) and angle subdivision m.
    pub axes: usize,
    pub m: u32,
    pub max_levels: Option<u32>,
    /// Seeds the synthetic scene and the GI rays.
    pub seed: u64,
    /// Resolution of the canonical cameras.
    pub resolution: [u32; 2],
    pub vfov: f32,
    /// Explicit cameras replace the canonical ones.
    pub cameras: Vec<CameraConfig>,
    pub gi: bool,
    pub heatmaps: bool,
    pub out: PathBuf,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            scene: SceneSource::from_flag("hairball"),
            width: 8,
            alpha: 1.0,
            mode: ModeSelection::All,
            axes: 13,
            m: 4,
            max_levels: None,
            seed: 42,
            resolution: [256, 256],
            vfov: 45.0,
            cameras: Vec::new(),
            gi: true,
            heatmaps: true,
            out: PathBuf::from("bench_out"),
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: BenchConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if ![2, 4, 6, 8].contains(&self.width) {
            return Err(Error::Config(format!("width must be 2, 4, 6 or 8, got {}", self.width)));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(3..=13).contains(&self.axes) {
            return Err(Error::Config(format!("axes must be in 3..=13, got {}", self.axes)));
        }
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if self.resolution[0] == 0 || self.resolution[1] == 0 {
            return Err(Error::Config("resolution must be positive".into()));
        }
        for c in &self.cameras {
            c.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_file() {
        let cfg = BenchConfig::from_toml(
            r#"
            alpha = 0.95
            mode = "brute"
            [scene]
            kind = "grid"
            count = 27
            "#,
        )
        .unwrap();
        assert_eq!(cfg.alpha, 0.95);
        assert_eq!(cfg.mode, ModeSelection::Brute);
        assert_eq!(cfg.scene, SceneSource::Grid { count: 27 });
        assert_eq!(cfg.width, 8);
    }

    #[test]
    fn round_trips() {
        let cfg = BenchConfig::default();
        assert_eq!(BenchConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(BenchConfig::from_toml("width = 5").is_err());
        assert!(BenchConfig::from_toml("alpha = -1.0").is_err());
        assert!(BenchConfig::from_toml("bogus = 1").is_err());
    }
}
