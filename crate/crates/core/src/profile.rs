//! Probing sweep along the standoff line: regress log|I| against tau at
//! each lateral position, assemble the slope profile, and read crack tips
//! off its prominent local maxima.

use crate::error::{Error, Result};
use crate::fem::CauchyData;
use crate::geometry::{probe_point_slab, ProbingLine};
use crate::probe::{indicator, IndicatorSamples, ProbeConfig};
use rayon::prelude::*;

/// Uniform grid from `lo` to `hi` inclusive, snapped to a 1e-9 lattice so
/// positions compare cleanly across runs.
pub fn snapped_range(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if step <= 0.0 || hi < lo {
        return Err(Error::Profile(format!("bad grid [{lo}, {hi}] step {step}")));
    }
    let n = ((hi - lo) / step).round() as usize;
    Ok((0..=n)
        .map(|k| {
            let x = if k == n { hi } else { lo + k as f64 * step };
            (x * 1e9).round() / 1e9
        })
        .collect())
}

/// Ordinary least squares of log|I| on tau over the valid samples.
#[derive(Debug, Clone, Copy)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1.0 when the response is constant.
    pub r2: f64,
    pub n_valid: usize,
}

pub fn slope_estimate(samples: &IndicatorSamples) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = samples
        .tau
        .iter()
        .zip(&samples.log_mags)
        .zip(&samples.valid)
        .filter(|&(_, &v)| v)
        .map(|((&t, &lm), _)| (t, lm))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Profile(format!(
            "only {} valid indicator samples, need at least 3",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Profile("degenerate tau grid".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts
        .iter()
        .map(|p| {
            let e = p.1 - (slope * p.0 + intercept);
            e * e
        })
        .sum();
    let sst: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    Ok(SlopeFit { slope, intercept, r2, n_valid: pts.len() })
}

/// Slope profile over a lateral sweep.
#[derive(Debug, Clone)]
pub struct Profile {
    /// Lateral positions, user frame.
    pub xi1_grid: Vec<f64>,
    /// Fitted decay slope of log|I| at each position.
    pub phi: Vec<f64>,
    /// Regression quality at each position.
    pub r2: Vec<f64>,
    pub line: ProbingLine,
}

/// Sweeps the probing line: one indicator decay fit per lateral position.
pub fn sweep_profile(
    cauchy: &CauchyData,
    line: &ProbingLine,
    xi1_grid: &[f64],
    tau_grid: &[f64],
) -> Result<Profile> {
    if xi1_grid.is_empty() {
        return Err(Error::Profile("empty lateral grid".into()));
    }
    let geom = &cauchy.mesh.geom;
    let fits: Result<Vec<SlopeFit>> = xi1_grid
        .par_iter()
        .map(|&x1| {
            let xi = probe_point_slab(x1, line, geom)?;
            let cfg = ProbeConfig::new(xi, tau_grid.to_vec());
            slope_estimate(&indicator(cauchy, &cfg)?)
        })
        .collect();
    let fits = fits?;
    Ok(Profile {
        xi1_grid: xi1_grid.to_vec(),
        phi: fits.iter().map(|f| f.slope).collect(),
        r2: fits.iter().map(|f| f.r2).collect(),
        line: line.clone(),
    })
}

/// Detection thresholds for reading tips off the profile.
#[derive(Debug, Clone, Copy)]
pub struct DetectParams {
    /// Positions with a regression fit below this are dropped first.
    pub r2_min: f64,
    /// Minimal topographic prominence, as a fraction of the profile range.
    pub prominence_frac: f64,
    /// Half-width of the search window around the reference position.
    pub window: f64,
}

impl Default for DetectParams {
    fn default() -> Self {
        DetectParams { r2_min: 0.90, prominence_frac: 0.07, window: 1.2 }
    }
}

/// One prominent local maximum of the profile.
#[derive(Debug, Clone, Copy)]
pub struct ProfileMaximum {
    pub x: f64,
    pub phi: f64,
    pub prominence: f64,
}

/// Bracketing tip estimates around a reference position.
#[derive(Debug, Clone)]
pub struct TipEstimate {
    pub x_star: f64,
    /// Nearest prominent maximum left of `x_star`, if any.
    pub x_left: Option<f64>,
    /// Nearest prominent maximum right of `x_star`, if any.
    pub x_right: Option<f64>,
    /// Every prominent maximum over the sweep, window-unfiltered.
    pub maxima: Vec<ProfileMaximum>,
}

/// Strict interior local maxima with topographic prominence at least
/// `prominence_frac` times the range of `ys`. The prominence of a peak is
/// its height over the higher of the two saddles separating it from
/// higher ground (or over the global minimum on open sides).
pub(crate) fn local_maxima(xs: &[f64], ys: &[f64], prominence_frac: f64) -> Vec<ProfileMaximum> {
    let mut out = Vec::new();
    if ys.len() < 3 {
        return out;
    }
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    for i in 1..ys.len() - 1 {
        if !(ys[i] > ys[i - 1] && ys[i] > ys[i + 1]) {
            continue;
        }
        let side_key = |iter: &mut dyn Iterator<Item = usize>| -> Option<f64> {
            let mut min = ys[i];
            for j in iter {
                min = min.min(ys[j]);
                if ys[j] > ys[i] {
                    return Some(min);
                }
            }
            None
        };
        let lkey = side_key(&mut (0..i).rev());
        let rkey = side_key(&mut (i + 1..ys.len()));
        let prominence = match (lkey, rkey) {
            (None, None) => ys[i] - lo,
            (None, Some(r)) => ys[i] - r,
            (Some(l), None) => ys[i] - l,
            (Some(l), Some(r)) => ys[i] - l.max(r),
        };
        if prominence >= prominence_frac * range {
            out.push(ProfileMaximum { x: xs[i], phi: ys[i], prominence });
        }
    }
    out
}

/// Reads the crack-tip bracket around `x_star`: compress to well-fitted
/// positions, find prominent maxima, keep those within the window, and
/// take the innermost on each side.
/// All prominent local maxima of the profile after dropping poorly fitted
/// positions; the detection window is not applied.
pub fn profile_maxima(profile: &Profile, params: &DetectParams) -> Vec<ProfileMaximum> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for ((&x, &p), &r) in profile
        .xi1_grid
        .iter()
        .zip(&profile.phi)
        .zip(&profile.r2)
    {
        if r >= params.r2_min {
            xs.push(x);
            ys.push(p);
        }
    }
    local_maxima(&xs, &ys, params.prominence_frac)
}

pub fn detect_tips(profile: &Profile, x_star: f64, params: &DetectParams) -> TipEstimate {
    let maxima = profile_maxima(profile, params);
    let windowed: Vec<&ProfileMaximum> = maxima
        .iter()
        .filter(|m| (m.x - x_star).abs() <= params.window + 1e-9)
        .collect();
    let x_left = windowed
        .iter()
        .filter(|m| m.x < x_star)
        .map(|m| m.x)
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))));
    let x_right = windowed
        .iter()
        .filter(|m| m.x > x_star)
        .map(|m| m.x)
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.min(x))));
    TipEstimate { x_star, x_left, x_right, maxima }
}
