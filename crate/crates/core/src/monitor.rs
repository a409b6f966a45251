//! Weld-monitoring loop: probe the current crack state, grow the welded
//! gap around each pressure point on a schedule, and stop once the
//! detected gap length clears the threshold.

use crate::error::{Error, Result};
use crate::fem::{neumann_sin3, solve_neumann, Support};
use crate::geometry::{CrackSet, ProbingLine, SlabGeometry};
use crate::mesh::build_mesh;
use crate::probe::add_noise_stream;
use crate::profile::{detect_tips, sweep_profile, DetectParams, Profile};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Forward-problem and sweep parameters shared by every probing round.
#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub line: ProbingLine,
    /// Lateral sweep positions, user frame.
    pub xi1_grid: Vec<f64>,
    pub tau_grid: Vec<f64>,
    pub target_elements: usize,
    pub crack_width: f64,
    /// Corner exclusion of the injected current.
    pub exclusion: f64,
    pub support: Support,
    pub detect: DetectParams,
    /// Relative noise level on the simulated trace; 0 disables noise.
    pub noise_level: f64,
    pub noise_seed: u64,
}

/// Monitoring policy: where to press, how fast the weld grows, when to
/// declare success.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonitorConfig {
    /// Pressure point positions, user frame, probed in order.
    pub pressure_points: Vec<f64>,
    pub gap_threshold: f64,
    /// Default per-round growth of the joined region.
    pub left_step: f64,
    pub right_step: f64,
    /// Optional per-round override of (left, right) growth; rounds past
    /// the end fall back to the default steps.
    pub schedule: Option<Vec<[f64; 2]>>,
    /// Maximum probing rounds per pressure point.
    pub max_rounds: usize,
}

impl MonitorConfig {
    pub fn validate(&self, geom: &SlabGeometry) -> Result<()> {
        if self.gap_threshold < 0.0 {
            return Err(Error::Monitor("gap threshold must be nonnegative".into()));
        }
        if self.left_step < 0.0 || self.right_step < 0.0 {
            return Err(Error::Monitor("growth steps must be nonnegative".into()));
        }
        if let Some(sched) = &self.schedule {
            if sched.iter().any(|s| s[0] < 0.0 || s[1] < 0.0) {
                return Err(Error::Monitor("growth steps must be nonnegative".into()));
            }
        }
        if self.max_rounds == 0 {
            return Err(Error::Monitor("need at least one probing round".into()));
        }
        let lo = geom.origin_shift[0];
        let hi = geom.a + geom.origin_shift[0];
        for &p in &self.pressure_points {
            if p <= lo || p >= hi {
                return Err(Error::Monitor(format!(
                    "pressure point {p} outside the open slab ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }

    fn step(&self, round: usize) -> [f64; 2] {
        self.schedule
            .as_ref()
            .and_then(|s| s.get(round))
            .copied()
            .unwrap_or([self.left_step, self.right_step])
    }
}

/// Grows the joined interval containing `x_star` by the given steps. The
/// burned region is removed from every crack interval; fully consumed
/// neighbors vanish and the gap merges through them.
pub fn evolve_gap(
    cracks: &CrackSet,
    geom: &SlabGeometry,
    x_star: f64,
    left_step: f64,
    right_step: f64,
) -> Result<CrackSet> {
    let lo = geom.origin_shift[0];
    let hi = geom.a + geom.origin_shift[0];
    let joined = cracks.joined_span(lo, hi);
    let host = joined
        .iter()
        .find(|iv| iv[0] <= x_star && x_star <= iv[1])
        .ok_or_else(|| {
            Error::Monitor(format!(
                "pressure point {x_star} lies inside a crack; weld not joined there"
            ))
        })?;
    let burn = [(host[0] - left_step).max(lo), (host[1] + right_step).min(hi)];
    let mut pieces = Vec::new();
    for iv in cracks.intervals() {
        // keep whatever part of the crack survives outside the burn
        if iv[1] <= burn[0] || iv[0] >= burn[1] {
            pieces.push(*iv);
            continue;
        }
        if iv[0] < burn[0] {
            pieces.push([iv[0], burn[0]]);
        }
        if iv[1] > burn[1] {
            pieces.push([burn[1], iv[1]]);
        }
    }
    pieces.retain(|iv| iv[1] - iv[0] > 1e-12);
    CrackSet::new(pieces, cracks.line_height)
}

/// Per-round decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Continue,
    Success,
    Failure,
}

/// One probing round of one pressure point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    /// Crack intervals at probing time, user frame.
    pub cracks: Vec<[f64; 2]>,
    pub x_left: Option<f64>,
    pub x_right: Option<f64>,
    /// Detected gap length when both sides were found.
    pub gap: Option<f64>,
    pub decision: Decision,
    /// Canonical relative path of this round's profile artifact.
    pub artifact: String,
    #[serde(skip)]
    pub profile: Option<Profile>,
}

/// Verdict for one pressure point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PointOutcome {
    Success { round: usize },
    Failure,
    Aborted { error: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointRun {
    pub x_star: f64,
    pub rounds: Vec<RoundRecord>,
    pub outcome: PointOutcome,
}

/// Full log of a monitoring run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonitorLog {
    pub points: Vec<PointRun>,
    /// Crack intervals left behind after the last round, user frame.
    pub final_cracks: Vec<[f64; 2]>,
}

fn probe_state(
    geom: &SlabGeometry,
    state: &CrackSet,
    settings: &SweepSettings,
    point_idx: usize,
    round: usize,
) -> Result<Profile> {
    let mesh = Arc::new(build_mesh(
        geom,
        state,
        settings.crack_width,
        settings.target_elements,
    )?);
    let g = neumann_sin3(&mesh, settings.exclusion, settings.support)?;
    let mut cauchy = solve_neumann(&mesh, &g)?;
    if settings.noise_level > 0.0 {
        let stream = ((point_idx as u64) << 32) | round as u64;
        cauchy = add_noise_stream(&cauchy, settings.noise_level, settings.noise_seed, stream)?;
    }
    sweep_profile(&cauchy, &settings.line, &settings.xi1_grid, &settings.tau_grid)
}

fn run_point(
    geom: &SlabGeometry,
    state: &mut CrackSet,
    settings: &SweepSettings,
    cfg: &MonitorConfig,
    point_idx: usize,
    x_star: f64,
) -> PointRun {
    let mut rounds = Vec::new();
    for round in 0..cfg.max_rounds {
        let profile = match probe_state(geom, state, settings, point_idx, round) {
            Ok(p) => p,
            Err(e) => {
                return PointRun {
                    x_star,
                    rounds,
                    outcome: PointOutcome::Aborted { error: e.to_string() },
                }
            }
        };
        let est = detect_tips(&profile, x_star, &settings.detect);
        let gap = match (est.x_left, est.x_right) {
            (Some(l), Some(r)) => Some(r - l),
            _ => None,
        };
        let success = gap.map_or(false, |g| g >= cfg.gap_threshold);
        let last = round + 1 == cfg.max_rounds;
        let decision = if success {
            Decision::Success
        } else if last {
            Decision::Failure
        } else {
            Decision::Continue
        };
        rounds.push(RoundRecord {
            round,
            cracks: state.intervals().to_vec(),
            x_left: est.x_left,
            x_right: est.x_right,
            gap,
            decision,
            artifact: format!("point{point_idx}/round{round}/profile.csv"),
            profile: Some(profile),
        });
        if success {
            return PointRun {
                x_star,
                rounds,
                outcome: PointOutcome::Success { round },
            };
        }
        if last {
            return PointRun { x_star, rounds, outcome: PointOutcome::Failure };
        }
        let step = cfg.step(round);
        match evolve_gap(state, geom, x_star, step[0], step[1]) {
            Ok(next) => *state = next,
            Err(e) => {
                return PointRun {
                    x_star,
                    rounds,
                    outcome: PointOutcome::Aborted { error: e.to_string() },
                }
            }
        }
    }
    unreachable!("loop returns on success, failure, or abort")
}

/// Runs the monitoring loop over every pressure point in order. The crack
/// state carries over from one point to the next; a failure at one point
/// aborts only that point.
pub fn run_monitor(
    geom: &SlabGeometry,
    initial: &CrackSet,
    settings: &SweepSettings,
    cfg: &MonitorConfig,
) -> Result<MonitorLog> {
    cfg.validate(geom)?;
    if settings.xi1_grid.is_empty() || settings.tau_grid.len() < 3 {
        return Err(Error::Monitor("sweep grids too small".into()));
    }
    let mut state = initial.clone();
    let mut points = Vec::new();
    for (idx, &x_star) in cfg.pressure_points.iter().enumerate() {
        points.push(run_point(geom, &mut state, settings, cfg, idx, x_star));
    }
    Ok(MonitorLog { points, final_cracks: state.intervals().to_vec() })
}

/// Re-probes every crack state recorded in a log and rebuilds the
/// decisions. With the same settings and seed this reproduces the log
/// byte-for-byte (modulo the unserialized profile payloads).
pub fn replay(
    log: &MonitorLog,
    geom: &SlabGeometry,
    settings: &SweepSettings,
    cfg: &MonitorConfig,
) -> Result<MonitorLog> {
    let mut points = Vec::new();
    for (idx, pt) in log.points.iter().enumerate() {
        let mut rounds = Vec::new();
        let mut outcome = PointOutcome::Failure;
        let line_height = geom.to_user([0.0, geom.c])[1];
        for rec in &pt.rounds {
            let state = CrackSet::new(rec.cracks.clone(), line_height)?;
            let profile = probe_state(geom, &state, settings, idx, rec.round)?;
            let est = detect_tips(&profile, pt.x_star, &settings.detect);
            let gap = match (est.x_left, est.x_right) {
                (Some(l), Some(r)) => Some(r - l),
                _ => None,
            };
            let success = gap.map_or(false, |g| g >= cfg.gap_threshold);
            let decision = if success {
                Decision::Success
            } else if rec.round + 1 == cfg.max_rounds {
                Decision::Failure
            } else {
                Decision::Continue
            };
            rounds.push(RoundRecord {
                round: rec.round,
                cracks: rec.cracks.clone(),
                x_left: est.x_left,
                x_right: est.x_right,
                gap,
                decision,
                artifact: rec.artifact.clone(),
                profile: Some(profile),
            });
            if success {
                outcome = PointOutcome::Success { round: rec.round };
                break;
            }
        }
        if matches!(outcome, PointOutcome::Failure) {
            if let PointOutcome::Aborted { error } = &pt.outcome {
                outcome = PointOutcome::Aborted { error: error.clone() };
            }
        }
        points.push(PointRun { x_star: pt.x_star, rounds, outcome });
    }
    Ok(MonitorLog { points, final_cracks: log.final_cracks.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::snapped_range;

    fn reference_cracks() -> CrackSet {
        CrackSet::new(vec![[-4.0, -1.5], [-1.0, 1.0], [1.5, 4.0]], 0.0).unwrap()
    }

    fn assert_intervals_close(got: &[[f64; 2]], want: &[[f64; 2]]) {
        assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
        for (g, w) in got.iter().zip(want) {
            assert!(
                (g[0] - w[0]).abs() < 1e-12 && (g[1] - w[1]).abs() < 1e-12,
                "{got:?} vs {want:?}"
            );
        }
    }

    fn quick_settings(target: usize) -> SweepSettings {
        SweepSettings {
            line: ProbingLine::default(),
            xi1_grid: snapped_range(-4.0, 4.0, 0.05).unwrap(),
            tau_grid: snapped_range(1.0, 5.0, 0.1).unwrap(),
            target_elements: target,
            crack_width: 0.04,
            exclusion: 0.0,
            support: Support::Horizontal,
            detect: DetectParams::default(),
            noise_level: 0.0,
            noise_seed: 0,
        }
    }

    #[test]
    fn evolution_matches_the_published_stages() {
        let geom = SlabGeometry::reference();
        let cracks = reference_cracks();
        let evolved = evolve_gap(&cracks, &geom, -1.25, 0.25, 0.2).unwrap();
        assert_intervals_close(
            evolved.intervals(),
            &[[-4.0, -1.75], [-0.8, 1.0], [1.5, 4.0]],
        );
        let identity = evolve_gap(&cracks, &geom, -1.25, 0.0, 0.0).unwrap();
        assert_eq!(identity.intervals(), cracks.intervals());
    }

    #[test]
    fn evolution_consumes_thin_neighbors() {
        let geom = SlabGeometry::reference();
        let cracks = CrackSet::new(
            vec![[-4.0, -1.5], [-1.45, -1.4], [-1.0, 1.0], [1.5, 4.0]],
            0.0,
        )
        .unwrap();
        let evolved = evolve_gap(&cracks, &geom, -1.2, 0.1, 0.0).unwrap();
        assert_intervals_close(
            evolved.intervals(),
            &[[-4.0, -1.5], [-1.0, 1.0], [1.5, 4.0]],
        );
        // growth is clipped at the slab edge
        let wide = evolve_gap(&cracks, &geom, -1.2, 10.0, 10.0).unwrap();
        assert_eq!(wide.intervals(), &[] as &[[f64; 2]]);
    }

    #[test]
    fn evolution_rejects_pressure_on_a_crack() {
        let geom = SlabGeometry::reference();
        let err = evolve_gap(&reference_cracks(), &geom, -2.0, 0.1, 0.1).unwrap_err();
        assert_eq!(err.kind(), "monitor");
    }

    #[test]
    fn config_validation_catches_bad_inputs() {
        let geom = SlabGeometry::reference();
        let base = MonitorConfig {
            pressure_points: vec![-1.25],
            gap_threshold: 1.5,
            left_step: 0.25,
            right_step: 0.2,
            schedule: None,
            max_rounds: 8,
        };
        assert!(base.validate(&geom).is_ok());
        let mut bad = base.clone();
        bad.pressure_points = vec![4.5];
        assert!(bad.validate(&geom).is_err());
        let mut bad = base.clone();
        bad.left_step = -0.1;
        assert!(bad.validate(&geom).is_err());
        let mut bad = base.clone();
        bad.max_rounds = 0;
        assert!(bad.validate(&geom).is_err());
    }

    #[test]
    fn stationary_weld_fails_after_max_rounds() {
        let geom = SlabGeometry::reference();
        let cfg = MonitorConfig {
            pressure_points: vec![-1.25],
            gap_threshold: 10.0,
            left_step: 0.0,
            right_step: 0.0,
            schedule: None,
            max_rounds: 3,
        };
        let log = run_monitor(&geom, &reference_cracks(), &quick_settings(1920), &cfg)
            .unwrap();
        let pt = &log.points[0];
        assert_eq!(pt.rounds.len(), 3);
        assert_eq!(pt.outcome, PointOutcome::Failure);
        assert_eq!(pt.rounds[2].decision, Decision::Failure);
        for r in &pt.rounds {
            assert_eq!(r.cracks, reference_cracks().intervals());
        }
    }

    #[test]
    fn zero_threshold_succeeds_immediately() {
        let geom = SlabGeometry::reference();
        let cfg = MonitorConfig {
            pressure_points: vec![-1.25],
            gap_threshold: 0.0,
            left_step: 0.25,
            right_step: 0.2,
            schedule: None,
            max_rounds: 8,
        };
        let log = run_monitor(&geom, &reference_cracks(), &quick_settings(30720), &cfg)
            .unwrap();
        let pt = &log.points[0];
        assert_eq!(pt.outcome, PointOutcome::Success { round: 0 });
        assert_eq!(pt.rounds.len(), 1);
        assert!(pt.rounds[0].gap.unwrap() >= 0.0);
        // no evolution happened
        assert_eq!(log.final_cracks, reference_cracks().intervals());
    }

    #[test]
    fn replay_reproduces_the_log_byte_for_byte() {
        let geom = SlabGeometry::reference();
        let cfg = MonitorConfig {
            pressure_points: vec![-1.25],
            gap_threshold: 1.5,
            left_step: 0.25,
            right_step: 0.2,
            schedule: None,
            max_rounds: 2,
        };
        let mut settings = quick_settings(1920);
        settings.noise_level = 2e-4;
        settings.noise_seed = 3;
        let log = run_monitor(&geom, &reference_cracks(), &settings, &cfg).unwrap();
        let again = run_monitor(&geom, &reference_cracks(), &settings, &cfg).unwrap();
        let a = serde_json::to_string(&log).unwrap();
        assert_eq!(a, serde_json::to_string(&again).unwrap());
        let replayed = replay(&log, &geom, &settings, &cfg).unwrap();
        assert_eq!(a, serde_json::to_string(&replayed).unwrap());
    }

    #[test]
    fn aborted_point_does_not_poison_the_next() {
        let geom = SlabGeometry::reference();
        // first pressure point sits on a crack: the evolve step aborts it;
        // the second point still runs on the untouched state
        let cfg = MonitorConfig {
            pressure_points: vec![-2.0, -1.25],
            gap_threshold: 10.0,
            left_step: 0.1,
            right_step: 0.1,
            schedule: None,
            max_rounds: 2,
        };
        let log = run_monitor(&geom, &reference_cracks(), &quick_settings(1920), &cfg)
            .unwrap();
        assert_eq!(log.points.len(), 2);
        assert!(matches!(log.points[0].outcome, PointOutcome::Aborted { .. }));
        assert_eq!(log.points[0].rounds.len(), 1);
        let second = &log.points[1];
        assert_eq!(second.outcome, PointOutcome::Failure);
        assert_eq!(second.rounds[0].cracks, reference_cracks().intervals());
        assert_intervals_close(
            &second.rounds[1].cracks,
            &[[-4.0, -1.6], [-0.9, 1.0], [1.5, 4.0]],
        );
    }

    #[test]
    fn schedule_overrides_default_steps() {
        let cfg = MonitorConfig {
            pressure_points: vec![-1.25],
            gap_threshold: 1.5,
            left_step: 0.25,
            right_step: 0.2,
            schedule: Some(vec![[0.0, 0.0], [0.5, 0.3]]),
            max_rounds: 8,
        };
        assert_eq!(cfg.step(0), [0.0, 0.0]);
        assert_eq!(cfg.step(1), [0.5, 0.3]);
        assert_eq!(cfg.step(2), [0.25, 0.2]);
    }
}
