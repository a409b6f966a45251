//! Run configuration: TOML surface, validation with field paths, and
//! conversion into the in-memory types the pipeline consumes. The shipped
//! defaults reproduce the reference experiment; an empty file parses to
//! exactly those defaults.

use crate::error::{Error, Result};
use crate::fem::Support;
use crate::geometry::{CrackSet, ProbingLine, SlabGeometry};
use crate::monitor::{MonitorConfig, SweepSettings};
use crate::profile::{snapped_range, DetectParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryBlock {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Translation from reference to user coordinates.
    pub shift: [f64; 2],
    pub target_elements: usize,
}

impl Default for GeometryBlock {
    fn default() -> Self {
        GeometryBlock { a: 8.0, b: 0.4, c: 0.2, shift: [-4.0, -0.2], target_elements: 30720 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CracksBlock {
    /// Un-welded intervals on the interface, user frame.
    pub intervals: Vec<[f64; 2]>,
    pub width: f64,
}

impl Default for CracksBlock {
    fn default() -> Self {
        CracksBlock {
            intervals: vec![[-4.0, -1.5], [-1.0, 1.0], [1.5, 4.0]],
            width: 0.04,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingBlock {
    pub kind: String,
    /// Corner exclusion of the injected current, in arclength units.
    pub exclusion: f64,
    pub support: Support,
}

impl Default for ForcingBlock {
    fn default() -> Self {
        ForcingBlock { kind: "sin3".into(), exclusion: 0.0, support: Support::Horizontal }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeBlock {
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_step: f64,
    pub xi1_min: f64,
    pub xi1_max: f64,
    pub xi1_step: f64,
    /// Standoff height min(cap, max(|xi1|/divisor, floor)), user frame.
    pub standoff_divisor: f64,
    pub standoff_floor: f64,
    pub standoff_cap: f64,
    /// Partial-boundary depth below the interface; full boundary if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Crack-depth bound used for the partial-boundary admissibility check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_bound: Option<f64>,
}

impl Default for ProbeBlock {
    fn default() -> Self {
        ProbeBlock {
            tau_min: 1.0,
            tau_max: 5.0,
            tau_step: 0.1,
            xi1_min: -4.0,
            xi1_max: 4.0,
            xi1_step: 0.05,
            standoff_divisor: 2.5,
            standoff_floor: 0.5,
            standoff_cap: 2.0,
            delta: None,
            m_bound: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseBlock {
    pub enabled: bool,
    /// Relative noise level on the simulated trace.
    pub level: f64,
    pub seed: u64,
    /// Standoff floor used instead of the probe-block floor when enabled.
    pub standoff_floor: f64,
}

impl Default for NoiseBlock {
    fn default() -> Self {
        NoiseBlock { enabled: false, level: 2e-4, seed: 0, standoff_floor: 0.75 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitorBlock {
    pub pressure_points: Vec<f64>,
    pub gap_threshold: f64,
    pub left_step: f64,
    pub right_step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<[f64; 2]>>,
    pub max_rounds: usize,
}

impl Default for MonitorBlock {
    fn default() -> Self {
        MonitorBlock {
            pressure_points: vec![-1.25, 1.25],
            gap_threshold: 1.5,
            left_step: 0.25,
            right_step: 0.2,
            schedule: None,
            max_rounds: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: String,
    pub formats: Vec<String>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: "runs".into(), formats: vec!["csv".into(), "json".into(), "svg".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryBlock,
    pub cracks: CracksBlock,
    pub forcing: ForcingBlock,
    pub probe: ProbeBlock,
    pub noise: NoiseBlock,
    pub monitor: MonitorBlock,
    pub output: OutputBlock,
}

fn bad(path: &str, msg: impl AsRef<str>) -> Error {
    Error::Config(format!("{path}: {}", msg.as_ref()))
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if !(g.a > 0.0) {
            return Err(bad("geometry.a", format!("slab width must be positive, got {}", g.a)));
        }
        if !(g.b > 0.0) {
            return Err(bad("geometry.b", format!("slab height must be positive, got {}", g.b)));
        }
        if !(g.c > 0.0 && g.c < g.b) {
            return Err(bad(
                "geometry.c",
                format!("interface height must satisfy 0 < c < b, got c={} with b={}", g.c, g.b),
            ));
        }
        if g.target_elements < 1000 {
            return Err(bad(
                "geometry.target_elements",
                format!("need at least 1000 elements, got {}", g.target_elements),
            ));
        }
        let span = [g.shift[0], g.a + g.shift[0]];
        if !(self.cracks.width > 0.0) {
            return Err(bad("cracks.width", "crack width must be positive"));
        }
        for (i, iv) in self.cracks.intervals.iter().enumerate() {
            if !(iv[0] < iv[1]) {
                return Err(bad(
                    format!("cracks.intervals[{i}]").as_str(),
                    format!("interval [{}, {}] is empty or inverted", iv[0], iv[1]),
                ));
            }
            if iv[0] < span[0] - 1e-12 || iv[1] > span[1] + 1e-12 {
                return Err(bad(
                    format!("cracks.intervals[{i}]").as_str(),
                    format!(
                        "interval [{}, {}] leaves the slab span [{}, {}]",
                        iv[0], iv[1], span[0], span[1]
                    ),
                ));
            }
        }
        if self.forcing.kind != "sin3" {
            return Err(bad(
                "forcing.kind",
                format!("unsupported forcing kind '{}', expected 'sin3'", self.forcing.kind),
            ));
        }
        if self.forcing.exclusion < 0.0 || 2.0 * self.forcing.exclusion >= g.a {
            return Err(bad(
                "forcing.exclusion",
                format!("corner exclusion must lie in [0, a/2), got {}", self.forcing.exclusion),
            ));
        }
        let p = &self.probe;
        if !(p.tau_step > 0.0) || !(p.tau_min < p.tau_max) {
            return Err(bad("probe.tau_step", "tau grid needs tau_min < tau_max and a positive step"));
        }
        if ((p.tau_max - p.tau_min) / p.tau_step).round() as usize + 1 < 3 {
            return Err(bad("probe.tau_step", "tau grid needs at least 3 points for the slope fit"));
        }
        if !(p.xi1_step > 0.0) || !(p.xi1_min <= p.xi1_max) {
            return Err(bad("probe.xi1_step", "xi1 grid needs xi1_min <= xi1_max and a positive step"));
        }
        if p.xi1_min < span[0] - 1e-12 || p.xi1_max > span[1] + 1e-12 {
            return Err(bad(
                "probe.xi1_min",
                format!(
                    "sweep range [{}, {}] leaves the slab span [{}, {}]",
                    p.xi1_min, p.xi1_max, span[0], span[1]
                ),
            ));
        }
        if !(p.standoff_divisor > 0.0) {
            return Err(bad("probe.standoff_divisor", "standoff divisor must be positive"));
        }
        if !(p.standoff_floor > 0.0) || !(p.standoff_cap >= p.standoff_floor) {
            return Err(bad(
                "probe.standoff_floor",
                "standoff needs 0 < floor <= cap",
            ));
        }
        if let Some(d) = p.delta {
            if !(d > 0.0) {
                return Err(bad("probe.delta", "partial-boundary depth must be positive"));
            }
        }
        if let Some(m) = p.m_bound {
            if !(m > 0.0) {
                return Err(bad("probe.m_bound", "crack-depth bound must be positive"));
            }
        }
        if self.noise.level < 0.0 {
            return Err(bad("noise.level", "noise level must be nonnegative"));
        }
        if !(self.noise.standoff_floor > 0.0) {
            return Err(bad("noise.standoff_floor", "standoff floor must be positive"));
        }
        let geom = self.slab()?;
        self.monitor_config()
            .validate(&geom)
            .map_err(|e| bad("monitor", e.to_string()))?;
        for f in &self.output.formats {
            if !matches!(f.as_str(), "csv" | "json" | "svg") {
                return Err(bad(
                    "output.formats",
                    format!("unknown format '{f}', expected csv, json, or svg"),
                ));
            }
        }
        Ok(())
    }

    pub fn slab(&self) -> Result<SlabGeometry> {
        SlabGeometry::new(self.geometry.a, self.geometry.b, self.geometry.c, self.geometry.shift)
    }

    /// Interface height in user coordinates.
    pub fn line_height(&self) -> f64 {
        self.geometry.c + self.geometry.shift[1]
    }

    pub fn crack_set(&self) -> Result<CrackSet> {
        CrackSet::new(self.cracks.intervals.clone(), self.line_height())
    }

    /// Probing line; the noisy standoff floor applies when noise is on.
    pub fn probing_line(&self) -> ProbingLine {
        let floor = if self.noise.enabled {
            self.noise.standoff_floor
        } else {
            self.probe.standoff_floor
        };
        ProbingLine {
            divisor: self.probe.standoff_divisor,
            floor,
            cap: self.probe.standoff_cap,
        }
    }

    pub fn tau_grid(&self) -> Result<Vec<f64>> {
        snapped_range(self.probe.tau_min, self.probe.tau_max, self.probe.tau_step)
    }

    pub fn xi1_grid(&self) -> Result<Vec<f64>> {
        snapped_range(self.probe.xi1_min, self.probe.xi1_max, self.probe.xi1_step)
    }

    pub fn sweep_settings(&self) -> Result<SweepSettings> {
        Ok(SweepSettings {
            line: self.probing_line(),
            xi1_grid: self.xi1_grid()?,
            tau_grid: self.tau_grid()?,
            target_elements: self.geometry.target_elements,
            crack_width: self.cracks.width,
            exclusion: self.forcing.exclusion,
            support: self.forcing.support,
            detect: DetectParams::default(),
            noise_level: if self.noise.enabled { self.noise.level } else { 0.0 },
            noise_seed: self.noise.seed,
        })
    }

    pub fn monitor_config(&self) -> MonitorConfig {
        MonitorConfig {
            pressure_points: self.monitor.pressure_points.clone(),
            gap_threshold: self.monitor.gap_threshold,
            left_step: self.monitor.left_step,
            right_step: self.monitor.right_step,
            schedule: self.monitor.schedule.clone(),
            max_rounds: self.monitor.max_rounds,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Hash of the canonical serialization: semantically equal configs
    /// (e.g. empty file vs. spelled-out defaults) hash identically.
    pub fn sha256(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_toml().as_bytes());
        format!("{:x}", h.finalize())
    }
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_path() -> std::path::PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../reference.toml")
    }

    #[test]
    fn empty_file_is_the_reference_config() {
        let empty = parse_config_str("").unwrap();
        assert_eq!(empty, RunConfig::default());
        let shipped = parse_config(&reference_path()).unwrap();
        assert_eq!(shipped, empty);
        assert_eq!(shipped.sha256(), empty.sha256());
    }

    #[test]
    fn reference_grids_have_the_documented_shape() {
        let cfg = RunConfig::default();
        let tau = cfg.tau_grid().unwrap();
        assert_eq!(tau.len(), 41);
        assert!((tau[1] - tau[0] - 0.1).abs() < 1e-12);
        assert_eq!(cfg.xi1_grid().unwrap().len(), 161);
        let line = cfg.probing_line();
        assert_eq!(line.height(0.0), 0.5);
        assert_eq!(line.height(-4.0), 1.6);
    }

    #[test]
    fn noise_toggles_the_standoff_floor() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.sweep_settings().unwrap().noise_level, 0.0);
        cfg.noise.enabled = true;
        let s = cfg.sweep_settings().unwrap();
        assert_eq!(s.noise_level, 2e-4);
        assert_eq!(s.line.floor, 0.75);
    }

    #[test]
    fn round_trip_is_idempotent() {
        let mut cfg = RunConfig::default();
        cfg.probe.delta = Some(0.15);
        cfg.probe.m_bound = Some(0.25);
        cfg.monitor.schedule = Some(vec![[0.1, 0.2], [0.3, 0.4]]);
        cfg.noise.enabled = true;
        let text = cfg.to_toml();
        let back = parse_config_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn degenerate_interface_is_rejected_by_field_path() {
        let err = parse_config_str("[geometry]\nc = 0.4\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("geometry.c"), "{msg}");
        assert_eq!(err.kind(), "config");
    }

    #[test]
    fn syntax_and_unknown_keys_are_line_anchored() {
        let err = parse_config_str("[probe]\ntau_step =\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_config_str("[probe]\ntau_stepp = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn semantic_violations_name_their_field() {
        let cases = [
            ("[geometry]\ntarget_elements = 10\n", "geometry.target_elements"),
            ("[cracks]\nintervals = [[2.0, 1.0]]\n", "cracks.intervals[0]"),
            ("[cracks]\nintervals = [[-9.0, 1.0]]\n", "cracks.intervals[0]"),
            ("[forcing]\nkind = \"delta\"\n", "forcing.kind"),
            ("[probe]\ntau_step = -0.1\n", "probe.tau_step"),
            ("[probe]\nxi1_max = 11.0\n", "probe.xi1_min"),
            ("[probe]\ndelta = 0.0\n", "probe.delta"),
            ("[noise]\nlevel = -1.0\n", "noise.level"),
            ("[monitor]\nmax_rounds = 0\n", "monitor"),
            ("[monitor]\npressure_points = [9.0]\n", "monitor"),
            ("[output]\nformats = [\"pdf\"]\n", "output.formats"),
        ];
        for (text, path) in cases {
            let err = parse_config_str(text).unwrap_err();
            assert!(err.to_string().contains(path), "{text} -> {err}");
        }
    }

    #[test]
    fn hash_distinguishes_semantic_changes() {
        let base = RunConfig::default();
        let mut other = base.clone();
        other.geometry.target_elements = 7680;
        assert_ne!(base.sha256(), other.sha256());
        assert_eq!(base.sha256().len(), 64);
    }
}
