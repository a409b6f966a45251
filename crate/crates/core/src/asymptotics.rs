//! Desk-scale numerical verification of the decay analysis behind the
//! indicator: the closed-form large-`tau` limit of the scaled tip integral
//! `I_n(tau)`, and the interior/exterior decay dichotomy of the probing
//! exponential. Everything here is independent of the finite element
//! pipeline and serves as its cross-check.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Parameters of one tip-integral verification case.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleCase {
    /// Order of the tip expansion term, `n >= 1`.
    pub n: u32,
    /// Disc radius `s0 > 0`.
    pub s0: f64,
    /// Angle in `(-pi/2, pi/2)`.
    pub alpha: f64,
    /// Integration upper limit; defaults to half the contour bound
    /// `s0 (1 + sin alpha) / cos alpha`.
    pub eta_prime: Option<f64>,
    /// Evaluation points for convergence checks, increasing.
    pub tau_list: Vec<f64>,
}

impl OracleCase {
    pub fn new(n: u32, s0: f64, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("tip-integral order n must be >= 1".into()));
        }
        if !(s0 > 0.0) {
            return Err(Error::Config(format!("disc radius must be positive, got {s0}")));
        }
        if !(alpha > -PI / 2.0 && alpha < PI / 2.0) {
            return Err(Error::Config(format!(
                "alpha must lie strictly inside (-pi/2, pi/2), got {alpha}"
            )));
        }
        Ok(OracleCase {
            n,
            s0,
            alpha,
            eta_prime: None,
            tau_list: vec![8.0, 16.0, 32.0, 64.0, 100.0],
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta_prime
            .unwrap_or(0.5 * self.s0 * (1.0 + self.alpha.sin()) / self.alpha.cos())
    }

    fn z_bar(&self) -> Complex64 {
        Complex64::new(-self.alpha.cos(), -(1.0 + self.alpha.sin()))
    }
}

/// `e^{-tau/(2 s0)} I_n(tau)` with an absolute error estimate. The raw
/// integral grows like `e^{tau/(2 s0)}`, so the scale factor is folded into
/// the integrand exponent to keep everything representable.
#[derive(Debug, Clone, Copy)]
pub struct ScaledTipIntegral {
    pub value: Complex64,
    pub abs_err: f64,
}

const SCALED_TOL: f64 = 1e-12;

fn scaled_integrand(case: &OracleCase, tau: f64, r: f64) -> Complex64 {
    let den = Complex64::new(r, 0.0) - case.s0 * case.z_bar();
    let pow = r.powf((2.0 * case.n as f64 - 1.0) / 2.0);
    let expo = Complex64::i() * tau / den - tau / (2.0 * case.s0);
    pow / (den * den) * expo.exp()
}

/// Adaptive Gauss-Kronrod quadrature of the scaled oscillatory integrand to
/// absolute tolerance `1e-12` (equivalently `1e-12 * e^{tau/(2 s0)}` on the
/// raw integral).
pub fn tip_integral(case: &OracleCase, tau: f64) -> Result<ScaledTipIntegral> {
    let eta = case.eta();
    if eta == 0.0 {
        return Ok(ScaledTipIntegral { value: Complex64::new(0.0, 0.0), abs_err: 0.0 });
    }
    if !(eta > 0.0) {
        return Err(Error::Config(format!("integration limit must be >= 0, got {eta}")));
    }
    let f = |r: f64| scaled_integrand(case, tau, r);
    let (value, abs_err) = adaptive_gk(&f, 0.0, eta, SCALED_TOL)?;
    Ok(ScaledTipIntegral { value, abs_err })
}

/// Same integral by composite fixed-order Gauss-Legendre with interval
/// doubling until two successive refinements agree; the independent check
/// on the adaptive rule.
pub fn tip_integral_fixed(case: &OracleCase, tau: f64, tol: f64) -> Result<ScaledTipIntegral> {
    let eta = case.eta();
    if eta == 0.0 {
        return Ok(ScaledTipIntegral { value: Complex64::new(0.0, 0.0), abs_err: 0.0 });
    }
    let f = |r: f64| scaled_integrand(case, tau, r);
    let rule = GaussLegendre::new(20);
    let mut m = 4;
    let mut prev = composite_gl(&f, 0.0, eta, &rule, m);
    loop {
        m *= 2;
        let cur = composite_gl(&f, 0.0, eta, &rule, m);
        let diff = (cur - prev).norm();
        if diff < tol {
            return Ok(ScaledTipIntegral { value: cur, abs_err: diff });
        }
        if m > 1 << 16 {
            return Err(Error::QuadratureTolerance { achieved: diff, requested: tol });
        }
        prev = cur;
    }
}

/// Closed-form limit of `tau^{(2n+1)/2} e^{-tau/(2 s0)}
/// e^{-i tau cos(alpha) / (2 s0 (1+sin(alpha)))} I_n(tau)`.
pub fn tip_integral_limit(case: &OracleCase) -> Complex64 {
    let n = case.n as f64;
    let sa = case.alpha.sin();
    let mag = case.s0.powf(2.0 * n - 1.0)
        * (2.0 * (1.0 + sa)).powf((2.0 * n - 1.0) / 2.0)
        * gamma_half_odd(case.n);
    let phase = Complex64::from_polar(1.0, (2.0 * n - 1.0) * case.alpha / 2.0);
    -Complex64::i() * mag * phase
}

/// `Gamma((2n+1)/2) = (2n-1)!! sqrt(pi) / 2^n` for integer `n >= 1`.
fn gamma_half_odd(n: u32) -> f64 {
    let mut df = 1.0;
    let mut k = 2 * n as i64 - 1;
    while k > 1 {
        df *= k as f64;
        k -= 2;
    }
    df * PI.sqrt() / 2f64.powi(n as i32)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceEntry {
    pub tau: f64,
    /// `|ratio - 1|` where ratio is the scaled quadrature value over the
    /// closed-form limit.
    pub deviation: f64,
    pub quad_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub case: OracleCase,
    pub entries: Vec<ConvergenceEntry>,
    /// Log-log fitted decay rate of the deviation in `tau`.
    pub fitted_rate: f64,
    /// Deviation at the largest `tau` below 0.02.
    pub pass: bool,
}

/// Evaluates the scaled tip integral along `case.tau_list` and compares
/// against the closed-form limit.
pub fn verify_limit(case: &OracleCase) -> Result<ConvergenceReport> {
    let limit = tip_integral_limit(case);
    let mut entries = Vec::with_capacity(case.tau_list.len());
    for &tau in &case.tau_list {
        let q = tip_integral(case, tau)?;
        let rot = Complex64::from_polar(
            1.0,
            -tau * case.alpha.cos() / (2.0 * case.s0 * (1.0 + case.alpha.sin())),
        );
        let ratio = tau.powf((2.0 * case.n as f64 + 1.0) / 2.0) * rot * q.value / limit;
        entries.push(ConvergenceEntry {
            tau,
            deviation: (ratio - Complex64::new(1.0, 0.0)).norm(),
            quad_err: q.abs_err,
        });
    }
    let fitted_rate = loglog_slope(
        entries.iter().map(|e| (e.tau, e.deviation)).collect::<Vec<_>>().as_slice(),
    );
    let pass = entries.last().map(|e| e.deviation < 0.02).unwrap_or(false);
    Ok(ConvergenceReport { case: case.clone(), entries, fitted_rate, pass })
}

fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let data: Vec<(f64, f64)> = pts
        .iter()
        .filter(|(_, d)| *d > 0.0)
        .map(|(t, d)| (t.ln(), d.ln()))
        .collect();
    if data.len() < 2 {
        return f64::NAN;
    }
    let n = data.len() as f64;
    let mx = data.iter().map(|p| p.0).sum::<f64>() / n;
    let my = data.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = data.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = data.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Exact exponential rate of `e^{-tau/(2s)} v_tau` at `x`: positive inside
/// the disc of radius `s` tangent to `xi` from below, negative outside.
pub fn decay_rate(x: [f64; 2], xi: [f64; 2], s: f64) -> f64 {
    let d = [x[0] - xi[0], x[1] - xi[1]];
    let r2 = d[0] * d[0] + d[1] * d[1];
    -d[1] / r2 - 1.0 / (2.0 * s)
}

#[derive(Debug, Clone, Serialize)]
pub struct DichotomyReport {
    pub inside_correct: usize,
    pub inside_total: usize,
    pub outside_correct: usize,
    pub outside_total: usize,
}

impl DichotomyReport {
    pub fn all_correct(&self) -> bool {
        self.inside_correct == self.inside_total && self.outside_correct == self.outside_total
    }
}

/// Checks the sign of the exact decay rate on points strictly inside and
/// strictly outside the probing disc; points on the circle are rejected.
pub fn verify_decay_dichotomy(
    s: f64,
    xi: [f64; 2],
    inside: &[[f64; 2]],
    outside: &[[f64; 2]],
) -> Result<DichotomyReport> {
    let center = [xi[0], xi[1] - s];
    for &x in inside.iter().chain(outside.iter()) {
        let d = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt();
        if (d - s).abs() < 1e-12 {
            return Err(Error::Probe(format!(
                "point ({}, {}) lies on the probing circle",
                x[0], x[1]
            )));
        }
    }
    let count = |pts: &[[f64; 2]], want_positive: bool| {
        pts.iter()
            .filter(|&&x| (decay_rate(x, xi, s) > 0.0) == want_positive)
            .count()
    };
    Ok(DichotomyReport {
        inside_correct: count(inside, true),
        inside_total: inside.len(),
        outside_correct: count(outside, false),
        outside_total: outside.len(),
    })
}

// 15-point Kronrod extension of 7-point Gauss, positive abscissae.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kron = Complex64::new(0.0, 0.0);
    let mut gauss = Complex64::new(0.0, 0.0);
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let (fl, fr) = if x == 0.0 {
            let v = f(mid);
            (v, Complex64::new(0.0, 0.0))
        } else {
            (f(mid - half * x), f(mid + half * x))
        };
        let s = fl + fr;
        kron += wk * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * half, ((kron - gauss) * half).norm())
}

pub(crate) fn adaptive_gk<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<(Complex64, f64)> {
    fn rec<F: Fn(f64) -> Complex64>(
        f: &F,
        a: f64,
        b: f64,
        tol: f64,
        depth: u32,
        total_err: &mut f64,
    ) -> Complex64 {
        let (val, err) = gk15(f, a, b);
        if err <= tol || depth >= 48 {
            *total_err += err;
            return val;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1, total_err)
            + rec(f, m, b, 0.5 * tol, depth + 1, total_err)
    }
    let mut total_err = 0.0;
    let val = rec(f, a, b, tol, 0, &mut total_err);
    if total_err > tol * 4.0 {
        return Err(Error::QuadratureTolerance { achieved: total_err, requested: tol });
    }
    Ok((val, total_err))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence.
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn composite_gl<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    rule: &GaussLegendre,
    m: usize,
) -> Complex64 {
    let h = (b - a) / m as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..m {
        let lo = a + k as f64 * h;
        let half = 0.5 * h;
        let mid = lo + half;
        for (&x, &w) in rule.nodes.iter().zip(rule.weights.iter()) {
            acc += w * f(mid + half * x);
        }
    }
    acc * (0.5 * h)
}
