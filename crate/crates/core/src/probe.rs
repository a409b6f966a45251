//! Kelvin-type probing of the Cauchy data: the complex test potential, its
//! edge-wise normal derivatives, and the boundary indicator whose decay rate
//! in tau encodes the distance from the probing disc to the crack set.

use crate::error::{Error, Result};
use crate::fem::{CauchyData, CrackJump};
use crate::mesh::Side;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// v_tau(x; xi) = exp(-tau (d2 + i d1) / |d|^2) with d = x - xi.
pub fn v_tau(tau: f64, xi: [f64; 2], x: [f64; 2]) -> Result<Complex64> {
    let d = [x[0] - xi[0], x[1] - xi[1]];
    let r2 = d[0] * d[0] + d[1] * d[1];
    if r2 == 0.0 {
        return Err(Error::Probe("v_tau evaluated at its singularity".into()));
    }
    Ok((Complex64::new(d[1], d[0]) * (-tau / r2)).exp())
}

/// d v_tau / d x2, the closed form used along the crack line and (up to
/// sign) on the horizontal edges.
pub fn dv_dx2(tau: f64, xi: [f64; 2], x: [f64; 2]) -> Result<Complex64> {
    let d = [x[0] - xi[0], x[1] - xi[1]];
    let r2 = d[0] * d[0] + d[1] * d[1];
    if r2 == 0.0 {
        return Err(Error::Probe("dv_dx2 evaluated at its singularity".into()));
    }
    let z = Complex64::new(d[0], -d[1]);
    let v = (Complex64::new(d[1], d[0]) * (-tau / r2)).exp();
    Ok(-tau * z * z / (r2 * r2) * v)
}

fn dv_dx1(tau: f64, xi: [f64; 2], x: [f64; 2]) -> Result<Complex64> {
    let d = [x[0] - xi[0], x[1] - xi[1]];
    let r2 = d[0] * d[0] + d[1] * d[1];
    if r2 == 0.0 {
        return Err(Error::Probe("dv_dx1 evaluated at its singularity".into()));
    }
    let z = Complex64::new(d[1], d[0]);
    let v = (z * (-tau / r2)).exp();
    Ok(Complex64::new(0.0, -tau) * z * z / (r2 * r2) * v)
}

/// Outward normal derivative of v_tau on the tagged edge of the a x b
/// rectangle. Rejects points that do not lie on that edge.
pub fn dv_dnu(
    tau: f64,
    xi: [f64; 2],
    x: [f64; 2],
    side: Side,
    a: f64,
    b: f64,
) -> Result<Complex64> {
    let tol = 1e-9;
    let on = match side {
        Side::Bottom => x[1].abs() < tol,
        Side::Top => (x[1] - b).abs() < tol,
        Side::Left => x[0].abs() < tol,
        Side::Right => (x[0] - a).abs() < tol,
        Side::Cavity => false,
    };
    if !on {
        return Err(Error::Probe(format!(
            "point ({}, {}) is not on the {} edge",
            x[0],
            x[1],
            side.label()
        )));
    }
    match side {
        Side::Bottom => Ok(-dv_dx2(tau, xi, x)?),
        Side::Top => dv_dx2(tau, xi, x),
        Side::Left => Ok(-dv_dx1(tau, xi, x)?),
        Side::Right => dv_dx1(tau, xi, x),
        Side::Cavity => unreachable!(),
    }
}

/// One probing point and the tau grid to sweep.
#[derive(Debug, Clone)]
pub struct ProbeConfig {
    /// Probing disc contact point, in the slab frame; must lie
    /// outside the closed slab.
    pub xi: [f64; 2],
    pub tau_grid: Vec<f64>,
    /// Depth of the partial boundary (only for `indicator_partial`).
    pub delta: Option<f64>,
    /// A priori bound on sup s over the sweep, used to check the partial
    /// boundary admissibility condition.
    pub m_bound: Option<f64>,
}

impl ProbeConfig {
    pub fn new(xi: [f64; 2], tau_grid: Vec<f64>) -> Self {
        ProbeConfig { xi, tau_grid, delta: None, m_bound: None }
    }
}

/// Indicator values over a tau grid at one probing point.
#[derive(Debug, Clone)]
pub struct IndicatorSamples {
    pub xi: [f64; 2],
    pub tau: Vec<f64>,
    pub values: Vec<Complex64>,
    pub log_mags: Vec<f64>,
    /// Per-tau flag: false when |I| fell below the cancellation floor.
    pub valid: Vec<bool>,
    /// False when a partial-boundary admissibility condition failed.
    pub trusted: bool,
}

fn check_xi_outside(cauchy: &CauchyData, xi: [f64; 2]) -> Result<()> {
    let g = &cauchy.mesh.geom;
    let inside = xi[0] >= -1e-12
        && xi[0] <= g.a + 1e-12
        && xi[1] >= -1e-12
        && xi[1] <= g.b + 1e-12;
    if inside {
        return Err(Error::Probe(format!(
            "probing point ({}, {}) lies inside the closed slab",
            xi[0], xi[1]
        )));
    }
    Ok(())
}

/// Neumaier-compensated sum; the error stays O(eps) in the term count.
fn compensated_sum<I: Iterator<Item = f64>>(it: I) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for x in it {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

fn indicator_over<F: Fn([f64; 2]) -> bool>(
    cauchy: &CauchyData,
    cfg: &ProbeConfig,
    keep: F,
    trusted: bool,
) -> Result<IndicatorSamples> {
    check_xi_outside(cauchy, cfg.xi)?;
    let mesh = &cauchy.mesh;
    let geom = &mesh.geom;

    // re-center the trace so additive gauge constants drop out; the sum is
    // compensated, otherwise a large constant leaves an O(eps n |C|)
    // residue that the small-|I| tail amplifies
    let w = mesh.boundary_weights(|e| e.side != Side::Cavity);
    let wsum = compensated_sum(w.iter().copied());
    let mean = compensated_sum(w.iter().zip(&cauchy.u).map(|(w, u)| w * u)) / wsum;

    struct Sample {
        x: [f64; 2],
        weight: f64,
        g: f64,
        u: f64,
        side: Side,
    }
    let mut samples = Vec::new();
    let mut total_len = 0.0;
    for e in mesh.outer_edges() {
        let p0 = mesh.nodes[e.nodes[0]];
        let p1 = mesh.nodes[e.nodes[1]];
        if !(keep(p0) && keep(p1)) {
            continue;
        }
        let l = mesh.edge_length(e);
        total_len += l;
        for &n in &e.nodes {
            samples.push(Sample {
                x: mesh.nodes[n],
                weight: l / 2.0,
                g: cauchy.g.values[n],
                u: cauchy.u[n] - mean,
                side: e.side,
            });
        }
    }
    if samples.is_empty() {
        return Err(Error::Probe("empty integration boundary".into()));
    }

    let mut values = Vec::with_capacity(cfg.tau_grid.len());
    let mut log_mags = Vec::with_capacity(cfg.tau_grid.len());
    let mut valid = Vec::with_capacity(cfg.tau_grid.len());
    for &tau in &cfg.tau_grid {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut scale = 0.0f64;
        for s in &samples {
            let v = v_tau(tau, cfg.xi, s.x)?;
            let dv = dv_dnu(tau, cfg.xi, s.x, s.side, geom.a, geom.b)?;
            acc += s.weight * (s.g * v - s.u * dv);
            scale = scale.max((s.g * v).norm());
        }
        if !acc.re.is_finite() || !acc.im.is_finite() {
            return Err(Error::Probe(format!("indicator overflow at tau {tau}")));
        }
        let floor = 1e-14 * total_len * scale;
        let mag = acc.norm();
        values.push(acc);
        log_mags.push(mag.ln());
        valid.push(mag >= floor && mag > 0.0);
    }
    Ok(IndicatorSamples {
        xi: cfg.xi,
        tau: cfg.tau_grid.clone(),
        values,
        log_mags,
        valid,
        trusted,
    })
}

/// Boundary indicator over the whole outer boundary.
pub fn indicator(cauchy: &CauchyData, cfg: &ProbeConfig) -> Result<IndicatorSamples> {
    indicator_over(cauchy, cfg, |_| true, true)
}

/// Boundary indicator restricted to the upper partial boundary
/// `{x2 > c - delta}`. The admissibility condition
/// `delta > c - (b + eps - 2M)` (with eps the standoff of the probing
/// point above the top edge and M the configured bound on sup s) is
/// checked when M is given; failure only clears the `trusted` flag.
pub fn indicator_partial(cauchy: &CauchyData, cfg: &ProbeConfig) -> Result<IndicatorSamples> {
    let delta = cfg
        .delta
        .ok_or_else(|| Error::Probe("indicator_partial needs a delta".into()))?;
    let geom = &cauchy.mesh.geom;
    let cut = geom.c - delta;
    let trusted = match cfg.m_bound {
        Some(m) => {
            let eps = cfg.xi[1] - geom.b;
            delta > geom.c - (geom.b + eps - 2.0 * m)
        }
        None => true,
    };
    indicator_over(cauchy, cfg, |p| p[1] > cut - 1e-12, trusted)
}

/// Indicator through the crack-jump representation: the integral of
/// -(u+ - u-) dv/dx2 along the crack line, one trapezoid per interval.
pub fn indicator_from_jump(
    jumps: &[CrackJump],
    line_height: f64,
    xi: [f64; 2],
    tau: f64,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for cj in jumps {
        if cj.stations.len() < 2 {
            return Err(Error::Probe("crack jump with fewer than 2 stations".into()));
        }
        for k in 0..cj.stations.len() - 1 {
            let (x0, x1) = (cj.stations[k], cj.stations[k + 1]);
            let f0 = cj.jump[k] * dv_dx2(tau, xi, [x0, line_height])?;
            let f1 = cj.jump[k + 1] * dv_dx2(tau, xi, [x1, line_height])?;
            acc -= 0.5 * (x1 - x0) * (f0 + f1);
        }
    }
    Ok(acc)
}

/// Adds i.i.d. Gaussian noise of standard deviation `level * max|u|` (the
/// max over outer-boundary nodes) to the boundary trace, then restores the
/// zero boundary mean. Deterministic in (seed, stream).
pub fn add_noise_stream(
    cauchy: &CauchyData,
    level: f64,
    seed: u64,
    stream: u64,
) -> Result<CauchyData> {
    if level < 0.0 {
        return Err(Error::Probe("noise level must be nonnegative".into()));
    }
    let mut out = cauchy.clone();
    if level == 0.0 {
        return Ok(out);
    }
    let mesh = &cauchy.mesh;
    let outer = mesh.outer_nodes();
    let umax = outer
        .iter()
        .map(|&n| cauchy.u[n].abs())
        .fold(0.0f64, f64::max);
    let sigma = level * umax;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::Probe(format!("bad noise distribution: {e}")))?;
    for &n in &outer {
        out.u[n] += normal.sample(&mut rng);
    }
    let w = mesh.boundary_weights(|e| e.side != Side::Cavity);
    let wsum: f64 = w.iter().sum();
    let mean: f64 = w.iter().zip(&out.u).map(|(w, u)| w * u).sum::<f64>() / wsum;
    for v in &mut out.u {
        *v -= mean;
    }
    out.normalization += mean;
    Ok(out)
}

/// `add_noise_stream` on the default stream.
pub fn add_noise(cauchy: &CauchyData, level: f64, seed: u64) -> Result<CauchyData> {
    add_noise_stream(cauchy, level, seed, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{crack_jump, neumann_sin3, solve_neumann, Support};
    use crate::geometry::{s_sigma_analytic, CrackSet, SlabGeometry};
    use crate::mesh::build_mesh;
    use rand::Rng;
    use std::sync::Arc;

    fn tau_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|k| lo + k as f64 * step).collect()
    }

    fn reference_cauchy(target: usize) -> CauchyData {
        let geom = SlabGeometry::reference();
        let cracks =
            CrackSet::new(vec![[-4.0, -1.5], [-1.0, 1.0], [1.5, 4.0]], 0.0).unwrap();
        let mesh = Arc::new(build_mesh(&geom, &cracks, 0.04, target).unwrap());
        let g = neumann_sin3(&mesh, 0.0, Support::Horizontal).unwrap();
        solve_neumann(&mesh, &g).unwrap()
    }

    #[test]
    fn v_tau_basics() {
        assert_eq!(v_tau(0.0, [3.0, 7.0], [1.0, 1.0]).unwrap(), Complex64::new(1.0, 0.0));
        assert!(v_tau(1.0, [2.0, 3.0], [2.0, 3.0]).is_err());
        // inside the probing disc the normalized potential grows ...
        let s = 1.0;
        let inside = [0.0, -1.0];
        let tau = 3.0;
        let grow = (v_tau(tau, [0.0, 0.0], inside).unwrap().norm().ln()) - tau / (2.0 * s);
        assert!((grow - tau / 2.0).abs() < 1e-12);
        // ... and outside it decays
        let outside = [2.0, 0.0];
        let dec = (v_tau(tau, [0.0, 0.0], outside).unwrap().norm().ln()) - tau / (2.0 * s);
        assert!((dec + tau / 2.0).abs() < 1e-12);
    }

    #[test]
    fn normal_derivatives_match_finite_differences() {
        let xi = [3.0, 1.1];
        let (a, b) = (8.0, 0.4);
        let h = 1e-6;
        let tau = 2.3;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let t: f64 = rng.gen::<f64>();
            let (x, side, nu) = match rng.gen_range(0..4u8) {
                0 => ([t * a, 0.0], Side::Bottom, [0.0, -1.0]),
                1 => ([t * a, b], Side::Top, [0.0, 1.0]),
                2 => ([0.0, t * b], Side::Left, [-1.0, 0.0]),
                _ => ([a, t * b], Side::Right, [1.0, 0.0]),
            };
            let exact = dv_dnu(tau, xi, x, side, a, b).unwrap();
            let fp = v_tau(tau, xi, [x[0] + h * nu[0], x[1] + h * nu[1]]).unwrap();
            let fm = v_tau(tau, xi, [x[0] - h * nu[0], x[1] - h * nu[1]]).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                (exact - fd).norm() < 1e-7 * (1.0 + exact.norm()),
                "{side:?} at {x:?}: {exact} vs {fd}"
            );
        }
        assert!(dv_dnu(tau, xi, [1.0, 0.2], Side::Top, a, b).is_err());
        assert!(dv_dnu(tau, xi, [1.0, b], Side::Top, a, b).is_ok());
    }

    #[test]
    fn tau_zero_reduces_to_flux_integral() {
        let cauchy = reference_cauchy(7680);
        let cfg = ProbeConfig::new([4.0, 1.8], vec![0.0]);
        let ind = indicator(&cauchy, &cfg).unwrap();
        assert!(ind.values[0].norm() < 1e-12);
    }

    #[test]
    fn zero_data_gives_zero_indicator() {
        let cauchy = reference_cauchy(7680);
        let mut zero = cauchy.clone();
        zero.g.values.iter_mut().for_each(|v| *v = 0.0);
        zero.u.iter_mut().for_each(|v| *v = 0.0);
        let cfg = ProbeConfig::new([4.0, 1.8], tau_grid(1.0, 5.0, 0.5));
        let ind = indicator(&zero, &cfg).unwrap();
        assert!(ind.values.iter().all(|v| v.norm() == 0.0));
        assert!(ind.valid.iter().all(|&v| !v));
    }

    #[test]
    fn rejects_probing_point_inside_slab() {
        let cauchy = reference_cauchy(7680);
        let cfg = ProbeConfig::new([4.0, 0.3], vec![1.0]);
        assert!(indicator(&cauchy, &cfg).is_err());
    }

    #[test]
    fn gauge_invariance_under_trace_shift() {
        let cauchy = reference_cauchy(7680);
        let cfg = ProbeConfig::new([4.0, 1.8], tau_grid(1.0, 5.0, 1.0));
        let base = indicator(&cauchy, &cfg).unwrap();
        for shift in [1.0, -1e3] {
            let mut moved = cauchy.clone();
            for v in &mut moved.u {
                *v += shift;
            }
            let got = indicator(&moved, &cfg).unwrap();
            for (a, b) in base.values.iter().zip(&got.values) {
                assert!(
                    (a - b).norm() <= 1e-10 * a.norm(),
                    "shift {shift}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn indicator_finite_over_tau_range() {
        let cauchy = reference_cauchy(7680);
        let cfg = ProbeConfig::new([2.0, 1.3], tau_grid(1.0, 5.0, 0.1));
        let ind = indicator(&cauchy, &cfg).unwrap();
        for (lm, v) in ind.log_mags.iter().zip(&ind.values) {
            assert!(v.re.is_finite() && v.im.is_finite());
            assert!(lm.is_finite());
        }
        assert!(ind.valid.iter().all(|&v| v));
    }

    #[test]
    fn partial_boundary_with_large_delta_is_exact_restriction() {
        let cauchy = reference_cauchy(7680);
        let mut cfg = ProbeConfig::new([4.0, 1.8], tau_grid(1.0, 5.0, 0.5));
        cfg.delta = Some(1.0);
        cfg.m_bound = Some(0.9);
        let full = indicator(&cauchy, &cfg).unwrap();
        let part = indicator_partial(&cauchy, &cfg).unwrap();
        assert!(part.trusted);
        for (a, b) in full.values.iter().zip(&part.values) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn partial_boundary_discrepancy_decays_fast() {
        let cauchy = reference_cauchy(30720);
        let geom = cauchy.mesh.geom.clone();
        let cracks = CrackSet::new(vec![[-4.0, -1.5], [-1.0, 1.0], [1.5, 4.0]], 0.0).unwrap();
        let xi_user = [0.0, 0.5];
        let xi = geom.to_slab(xi_user);
        let s = s_sigma_analytic(xi_user, &cracks).unwrap();
        let taus = tau_grid(1.0, 5.0, 0.1);
        let mut cfg = ProbeConfig::new(xi, taus.clone());
        cfg.delta = Some(0.15);
        cfg.m_bound = Some(s);
        let full = indicator(&cauchy, &cfg).unwrap();
        let part = indicator_partial(&cauchy, &cfg).unwrap();
        assert!(part.trusted);
        // e^{-tau/(2s)} |I - I_delta| falls faster than tau^{-3}
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for ((&tau, a), b) in taus.iter().zip(&full.values).zip(&part.values) {
            let y = ((a - b).norm().ln() - tau / (2.0 * s)).max(-700.0);
            let x = tau.ln();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let n = taus.len() as f64;
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!(slope < -3.0, "log-log decay exponent {slope}");
    }

    #[test]
    fn top_edge_alone_suffices_under_one_sided_forcing() {
        let geom = SlabGeometry::reference();
        let cracks =
            CrackSet::new(vec![[-4.0, -1.5], [-1.0, 1.0], [1.5, 4.0]], 0.0).unwrap();
        let mesh = Arc::new(build_mesh(&geom, &cracks, 0.04, 30720).unwrap());
        let g = neumann_sin3(&mesh, 0.0, Support::TopOnly).unwrap();
        let cauchy = solve_neumann(&mesh, &g).unwrap();
        for xi1_user in [-1.25, 1.25] {
            let xi = geom.to_slab([xi1_user, 0.5]);
            let mut cfg = ProbeConfig::new(xi, tau_grid(1.0, 5.0, 0.1));
            cfg.delta = Some(geom.c - geom.b + 1e-6);
            let full = indicator(&cauchy, &cfg).unwrap();
            let top = indicator_partial(&cauchy, &cfg).unwrap();
            let peak = full.values.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
            for (a, b) in full.values.iter().zip(&top.values) {
                assert!(
                    (a - b).norm() <= 0.01 * peak,
                    "discrepancy {} vs peak {peak}",
                    (a - b).norm()
                );
            }
        }
    }

    #[test]
    fn jump_representation_matches_boundary_indicator() {
        let cauchy = reference_cauchy(30720);
        let geom = cauchy.mesh.geom.clone();
        let jumps = crack_jump(&cauchy, 81).unwrap();
        let xi = geom.to_slab([1.25, 0.5]);
        let cfg = ProbeConfig::new(xi, tau_grid(1.0, 3.0, 0.25));
        let ind = indicator(&cauchy, &cfg).unwrap();
        for (&tau, v) in cfg.tau_grid.iter().zip(&ind.values) {
            let j = indicator_from_jump(&jumps, geom.c, xi, tau).unwrap();
            assert!(
                (j - v).norm() < 0.05 * v.norm(),
                "tau {tau}: jump {j} vs boundary {v}"
            );
        }
    }

    #[test]
    fn jump_representation_zero_for_zero_jump() {
        let jumps = vec![CrackJump {
            interval: [1.0, 3.0],
            stations: vec![1.0, 2.0, 3.0],
            jump: vec![0.0; 3],
        }];
        let v = indicator_from_jump(&jumps, 0.2, [2.0, 1.5], 2.0).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn synthetic_root_jump_recovers_slope() {
        // semi-analytic oracle: a pure 2 sqrt(r) jump from the near tip,
        // integrated adaptively, must decay at rate 1/(2s) in tau
        let (tip, len, dx, h): (f64, f64, f64, f64) = (-1.0, 2.0, 0.30, 0.90);
        let xi = [tip - dx, h];
        let s = (dx * dx + h * h) / (2.0 * h);
        let taus = tau_grid(2.0, 5.0, 0.1);
        let mut pts = Vec::new();
        for &tau in &taus {
            // substituting x = tip + t^2 removes the root singularity
            let f = |t: f64| 4.0 * t * t * dv_dx2(tau, xi, [tip + t * t, 0.0]).unwrap();
            let scale = crate::asymptotics::adaptive_gk(
                &f,
                0.0,
                len.sqrt(),
                f64::INFINITY,
            )
            .unwrap()
            .0
            .norm();
            let (val, _) =
                crate::asymptotics::adaptive_gk(&f, 0.0, len.sqrt(), 1e-10 * scale).unwrap();
            pts.push((tau, val.norm().ln()));
        }
        let n = pts.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(x, y) in &pts {
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let target = 1.0 / (2.0 * s);
        let rel = (slope - target) / target;
        assert!(rel.abs() < 0.10, "slope {slope} vs {target} (rel {rel})");
    }

    #[test]
    fn decay_dichotomy_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 20 {
            let xi = [rng.gen_range(-2.0..2.0), rng.gen_range(0.5..2.0)];
            let s: f64 = rng.gen_range(0.2..1.5);
            let center = [xi[0], xi[1] - s];
            let r: f64 = rng.gen_range(0.05..2.5 * s);
            if (r - s).abs() < 1e-3 {
                continue;
            }
            let ang = rng.gen_range(0.0..std::f64::consts::TAU);
            let x = [center[0] + r * ang.cos(), center[1] + r * ang.sin()];
            if (x[0] - xi[0]).abs() < 1e-9 && (x[1] - xi[1]).abs() < 1e-9 {
                continue;
            }
            // d/dtau log|e^{-tau/(2s)} v_tau| is constant in tau
            let rate = {
                let d = [x[0] - xi[0], x[1] - xi[1]];
                -d[1] / (d[0] * d[0] + d[1] * d[1]) - 1.0 / (2.0 * s)
            };
            if r < s {
                assert!(rate > 0.0, "inside point decays: r={r} s={s}");
            } else {
                assert!(rate < 0.0, "outside point grows: r={r} s={s}");
            }
            checked += 1;
        }
    }

    #[test]
    fn noise_is_reproducible_and_scaled() {
        let cauchy = reference_cauchy(30720);
        let id = add_noise(&cauchy, 0.0, 7).unwrap();
        assert_eq!(id.u, cauchy.u);
        let n1 = add_noise(&cauchy, 2e-4, 7).unwrap();
        let n2 = add_noise(&cauchy, 2e-4, 7).unwrap();
        assert_eq!(n1.u, n2.u);
        let n3 = add_noise(&cauchy, 2e-4, 8).unwrap();
        assert_ne!(n1.u, n3.u);
        let n4 = add_noise_stream(&cauchy, 2e-4, 7, 1).unwrap();
        assert_ne!(n1.u, n4.u);

        let outer = cauchy.mesh.outer_nodes();
        assert!(outer.len() >= 1000);
        let umax = outer
            .iter()
            .map(|&n| cauchy.u[n].abs())
            .fold(0.0f64, f64::max);
        // undo the re-centering shift before measuring the sample std
        let shift = n1.normalization - cauchy.normalization;
        let diffs: Vec<f64> = outer
            .iter()
            .map(|&n| n1.u[n] + shift - cauchy.u[n])
            .collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
            / (diffs.len() - 1) as f64;
        let sd = var.sqrt();
        let want = 2e-4 * umax;
        assert!(
            (sd - want).abs() < 0.1 * want,
            "sample sd {sd} vs target {want}"
        );
        // interior nodes carry no noise beyond the recentering shift
        let mut is_outer = vec![false; cauchy.u.len()];
        for &n in &outer {
            is_outer[n] = true;
        }
        for n in 0..cauchy.u.len() {
            if !is_outer[n] {
                assert!((n1.u[n] + shift - cauchy.u[n]).abs() < 1e-15);
            }
        }
        // trace mean restored
        assert!(n1.trace_mean().abs() < 1e-12 * umax);
    }
}
