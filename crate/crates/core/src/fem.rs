//! Piecewise-linear finite elements for the pure Neumann problem on the
//! cracked slab. The column-major node numbering keeps the stiffness matrix
//! inside a narrow band, so a dense banded Cholesky factorization is both
//! simple and fast at the mesh sizes used here.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Side};
use std::sync::Arc;

/// Where the injected current lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    /// Whole outer boundary.
    Full,
    /// Top edge only (one-sided measurement condition).
    TopOnly,
    /// Top and bottom edges, corners excluded (the standard configuration).
    Horizontal,
}

/// Injected boundary flux, sampled at mesh nodes.
#[derive(Debug, Clone)]
pub struct NeumannData {
    pub values: Vec<f64>,
    pub support: Vec<bool>,
}

impl NeumannData {
    /// Composite-trapezoid boundary integral of g over the outer boundary.
    pub fn boundary_integral(&self, mesh: &Mesh) -> f64 {
        let w = mesh.boundary_weights(|e| e.side != Side::Cavity);
        w.iter().zip(&self.values).map(|(w, g)| w * g).sum()
    }
}

/// g = sin(3 theta) with theta the arclength angle over the supported part
/// of the boundary, projected to discrete mean zero. For `Horizontal` the
/// chain runs along the bottom edge left to right, then the top edge right
/// to left (the counterclockwise restriction); arclength continues across
/// the jump without adding the gap. Nodes within `exclusion` of the lateral
/// edges are excluded from the support.
pub fn neumann_sin3(mesh: &Mesh, exclusion: f64, support: Support) -> Result<NeumannData> {
    let a = mesh.geom.a;
    if exclusion < 0.0 || exclusion >= a / 2.0 {
        return Err(Error::Solver(format!(
            "corner exclusion {exclusion} must lie in [0, {})",
            a / 2.0
        )));
    }
    let tol = 1e-9;
    let mut values = vec![0.0; mesh.nodes.len()];
    let mut mask = vec![false; mesh.nodes.len()];

    let side_nodes = |side: Side, ascending: bool| -> Vec<usize> {
        let mut ns: Vec<usize> = {
            let mut seen = vec![false; mesh.nodes.len()];
            let mut v = Vec::new();
            for e in mesh.outer_edges().filter(|e| e.side == side) {
                for &n in &e.nodes {
                    if !seen[n] {
                        seen[n] = true;
                        v.push(n);
                    }
                }
            }
            v
        };
        ns.sort_by(|&m, &n| mesh.nodes[m][0].total_cmp(&mesh.nodes[n][0]));
        if !ascending {
            ns.reverse();
        }
        ns
    };

    let chain: Vec<usize> = match support {
        Support::Horizontal => {
            let mut c = side_nodes(Side::Bottom, true);
            c.extend(side_nodes(Side::Top, false));
            c
        }
        Support::TopOnly => side_nodes(Side::Top, true),
        Support::Full => {
            // outer loop order; arclength is the loop parameter
            let mut c: Vec<usize> = Vec::new();
            let outer_end = mesh.loop_starts.get(1).copied().unwrap_or(mesh.boundary.len());
            for e in &mesh.boundary[..outer_end] {
                if e.side != Side::Cavity {
                    c.push(e.nodes[0]);
                }
            }
            c
        }
    };

    let mut svals: Vec<(usize, f64)> = Vec::new();
    match support {
        Support::Full => {
            let outer_end = mesh.loop_starts.get(1).copied().unwrap_or(mesh.boundary.len());
            let total: f64 = mesh.boundary[..outer_end]
                .iter()
                .map(|e| mesh.edge_length(e))
                .sum();
            for &n in &chain {
                svals.push((n, mesh.arclength[n]));
            }
            if total <= 0.0 {
                return Err(Error::Solver("empty boundary".into()));
            }
            for (n, s) in &svals {
                values[*n] = (3.0 * (2.0 * std::f64::consts::PI * s / total)).sin();
                mask[*n] = true;
            }
        }
        _ => {
            let ok = |n: usize| {
                let x = mesh.nodes[n][0];
                x > exclusion + tol && x < a - exclusion - tol
            };
            let mut s = 0.0;
            let mut prev: Option<usize> = None;
            for &n in &chain {
                if !ok(n) {
                    prev = None;
                    continue;
                }
                if let Some(p) = prev {
                    if (mesh.nodes[n][1] - mesh.nodes[p][1]).powi(2) < tol {
                        s += (mesh.nodes[n][0] - mesh.nodes[p][0]).abs();
                    }
                }
                svals.push((n, s));
                prev = Some(n);
            }
            let total = s;
            if total <= 0.0 {
                return Err(Error::Solver("empty forcing support".into()));
            }
            for (n, sv) in &svals {
                values[*n] = (3.0 * (2.0 * std::f64::consts::PI * sv / total)).sin();
                mask[*n] = true;
            }
        }
    }

    // weighted mean over the support, with the full outer trapezoid weights
    let w = mesh.boundary_weights(|e| e.side != Side::Cavity);
    let (mut num, mut den) = (0.0, 0.0);
    for n in 0..values.len() {
        if mask[n] {
            num += values[n] * w[n];
            den += w[n];
        }
    }
    let mean = num / den;
    for n in 0..values.len() {
        if mask[n] {
            values[n] -= mean;
        }
    }
    Ok(NeumannData { values, support: mask })
}

/// Flux of the harmonic field x1: +1 on the right edge, -1 on the left,
/// zero on top and bottom. Corner nodal values are chosen so the lumped
/// load reproduces the exact consistent load, making the discrete solution
/// equal to x1 up to a constant.
pub fn neumann_linear_x1(mesh: &Mesh) -> NeumannData {
    let n = mesh.nodes.len();
    let mut load = vec![0.0; n];
    let mut values = vec![0.0; n];
    let mut mask = vec![false; n];
    for e in mesh.outer_edges() {
        let sgn = match e.side {
            Side::Left => -1.0,
            Side::Right => 1.0,
            _ => continue,
        };
        let l = mesh.edge_length(e);
        for &nd in &e.nodes {
            load[nd] += sgn * l / 2.0;
            mask[nd] = true;
        }
    }
    let w = mesh.boundary_weights(|e| e.side != Side::Cavity);
    for i in 0..n {
        if mask[i] {
            values[i] = load[i] / w[i];
        }
    }
    NeumannData { values, support: mask }
}

/// Symmetric banded matrix, lower triangle stored row-wise:
/// `d[i*(bw+1)+k] = A[i][i-k]` for `k = 0..=min(i, bw)`.
#[derive(Clone)]
struct Banded {
    n: usize,
    bw: usize,
    d: Vec<f64>,
}

impl Banded {
    fn zeros(n: usize, bw: usize) -> Self {
        Banded { n, bw, d: vec![0.0; n * (bw + 1)] }
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        debug_assert!(i >= j && i - j <= self.bw);
        &mut self.d[i * (self.bw + 1) + (i - j)]
    }

    fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        if i >= j {
            *self.at(i, j) += v;
        }
    }

    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        let w = self.bw + 1;
        for i in 0..self.n {
            let kmax = self.bw.min(i);
            y[i] += self.d[i * w] * x[i];
            for k in 1..=kmax {
                let v = self.d[i * w + k];
                y[i] += v * x[i - k];
                y[i - k] += v * x[i];
            }
        }
        y
    }

    /// In-place banded Cholesky, A = L L^T with L in the same layout.
    fn cholesky(mut self) -> Result<Banded> {
        let w = self.bw + 1;
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            for j in j0..=i {
                let mut sum = self.d[i * w + (i - j)];
                let k0 = j0.max(j.saturating_sub(self.bw));
                for k in k0..j {
                    sum -= self.d[i * w + (i - k)] * self.d[j * w + (j - k)];
                }
                if i == j {
                    if sum <= 0.0 {
                        return Err(Error::Solver(format!(
                            "matrix not positive definite at row {i}"
                        )));
                    }
                    self.d[i * w] = sum.sqrt();
                } else {
                    self.d[i * w + (i - j)] = sum / self.d[j * w];
                }
            }
        }
        Ok(self)
    }

    /// Solves L L^T x = b for a factor produced by `cholesky`.
    fn solve_chol(&self, b: &[f64]) -> Vec<f64> {
        let w = self.bw + 1;
        let mut x = b.to_vec();
        for i in 0..self.n {
            let mut s = x[i];
            for k in 1..=self.bw.min(i) {
                s -= self.d[i * w + k] * x[i - k];
            }
            x[i] = s / self.d[i * w];
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            let jmax = (i + self.bw).min(self.n - 1);
            for j in i + 1..=jmax {
                s -= self.d[j * w + (j - i)] * x[j];
            }
            x[i] = s / self.d[i * w];
        }
        x
    }
}

/// Solved Cauchy pair: the injected flux and the (boundary-mean-free)
/// potential over the whole mesh.
#[derive(Debug, Clone)]
pub struct CauchyData {
    pub mesh: Arc<Mesh>,
    pub g: NeumannData,
    /// Full nodal field, shifted so the outer-boundary trace integral is 0.
    pub u: Vec<f64>,
    /// Constant subtracted to enforce the zero-mean trace.
    pub normalization: f64,
    /// Relative residual of the linear solve against the unpinned system.
    pub residual: f64,
}

/// Assembled stiffness with a reusable factorization; solve many fluxes on
/// one mesh without re-assembling.
pub struct NeumannSolver {
    pub mesh: Arc<Mesh>,
    stiffness: Banded,
    factor: Banded,
    weights: Vec<f64>,
}

impl NeumannSolver {
    pub fn new(mesh: Arc<Mesh>) -> Result<Self> {
        let n = mesh.nodes.len();
        let bw = mesh
            .triangles
            .iter()
            .flat_map(|t| [t[0].abs_diff(t[1]), t[1].abs_diff(t[2]), t[0].abs_diff(t[2])])
            .max()
            .ok_or_else(|| Error::Solver("empty mesh".into()))?;
        let mut k = Banded::zeros(n, bw);
        for t in &mesh.triangles {
            let p = [mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]];
            let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
            let bb = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
            let cc = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
            for r in 0..3 {
                for s in 0..3 {
                    let v = (bb[r] * bb[s] + cc[r] * cc[s]) / (2.0 * area2);
                    k.add_sym(t[r], t[s], v);
                }
            }
        }
        // pin node 0 symmetrically: zero its row and column, unit diagonal
        let mut pinned = k.clone();
        pinned.d[0] = 1.0;
        for i in 1..=bw.min(n - 1) {
            pinned.d[i * (bw + 1) + i] = 0.0;
        }
        let factor = pinned.cholesky()?;
        let weights = mesh.boundary_weights(|e| e.side != Side::Cavity);
        Ok(NeumannSolver { mesh, stiffness: k, factor, weights })
    }

    /// Energy u^T K u of a nodal field against the unpinned stiffness.
    pub fn energy(&self, u: &[f64]) -> f64 {
        self.stiffness
            .matvec(u)
            .iter()
            .zip(u)
            .map(|(ku, u)| ku * u)
            .sum()
    }

    pub fn solve(&self, g: &NeumannData) -> Result<CauchyData> {
        let n = self.mesh.nodes.len();
        if g.values.len() != n {
            return Err(Error::Solver("flux sampled on a different mesh".into()));
        }
        let b: Vec<f64> = (0..n).map(|i| self.weights[i] * g.values[i]).collect();
        let scale: f64 = b.iter().map(|v| v.abs()).sum();
        if scale == 0.0 {
            return Ok(CauchyData {
                mesh: self.mesh.clone(),
                g: g.clone(),
                u: vec![0.0; n],
                normalization: 0.0,
                residual: 0.0,
            });
        }
        let total: f64 = b.iter().sum();
        if total.abs() > 1e-10 * scale {
            return Err(Error::Solver(format!(
                "flux is not mean-free: boundary integral {total:.3e} vs scale {scale:.3e}"
            )));
        }
        let mut b_pin = b.clone();
        b_pin[0] = 0.0;
        let mut u = self.factor.solve_chol(&b_pin);
        // one refinement step; keeps the residual tight on large meshes
        let mut corr: Vec<f64> = self
            .stiffness
            .matvec(&u)
            .iter()
            .zip(&b)
            .map(|(ku, b)| b - ku)
            .collect();
        corr[0] = 0.0;
        let delta = self.factor.solve_chol(&corr);
        for (u, d) in u.iter_mut().zip(&delta) {
            *u += d;
        }
        // residual of the solved (pinned) system; with u[0] = 0 its rows
        // past the first coincide with the unpinned rows
        let r = self.stiffness.matvec(&u);
        let rnorm: f64 = r
            .iter()
            .zip(&b)
            .skip(1)
            .map(|(r, b)| (r - b) * (r - b))
            .sum::<f64>()
            .sqrt();
        let bnorm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let residual = rnorm / bnorm;
        if residual > 1e-10 {
            return Err(Error::Solver(format!(
                "linear solve residual {residual:.3e} exceeds 1e-10"
            )));
        }
        // the pinned row is linearly dependent on the rest for mean-free
        // loads; its defect is pure assembly roundoff and stays small
        if (r[0] - b[0]).abs() > 1e-8 * bnorm {
            return Err(Error::Solver(format!(
                "pinned-row defect {:.3e} exceeds 1e-8 of the load",
                (r[0] - b[0]).abs()
            )));
        }
        let wsum: f64 = self.weights.iter().sum();
        let mean: f64 = self
            .weights
            .iter()
            .zip(&u)
            .map(|(w, u)| w * u)
            .sum::<f64>()
            / wsum;
        for v in &mut u {
            *v -= mean;
        }
        Ok(CauchyData {
            mesh: self.mesh.clone(),
            g: g.clone(),
            u,
            normalization: mean,
            residual,
        })
    }
}

/// One-shot assemble-factor-solve.
pub fn solve_neumann(mesh: &Arc<Mesh>, g: &NeumannData) -> Result<CauchyData> {
    NeumannSolver::new(mesh.clone())?.solve(g)
}

impl CauchyData {
    /// Trapezoid-weighted boundary mean of the trace (should be ~0).
    pub fn trace_mean(&self) -> f64 {
        let w = self.mesh.boundary_weights(|e| e.side != Side::Cavity);
        let wsum: f64 = w.iter().sum();
        w.iter().zip(&self.u).map(|(w, u)| w * u).sum::<f64>() / wsum
    }
}

/// Potential jump across one crack cavity, sampled at uniform stations.
#[derive(Debug, Clone)]
pub struct CrackJump {
    /// Crack interval in the slab frame.
    pub interval: [f64; 2],
    pub stations: Vec<f64>,
    /// Upper-face trace minus lower-face trace at each station.
    pub jump: Vec<f64>,
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(i) => ys[i],
        Err(0) => ys[0],
        Err(i) if i == xs.len() => ys[xs.len() - 1],
        Err(i) => {
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] + t * (ys[i] - ys[i - 1])
        }
    }
}

/// Samples u+ - u- along every crack cavity at `stations` matched x1
/// stations per interval (linear interpolation along each face).
pub fn crack_jump(cauchy: &CauchyData, stations: usize) -> Result<Vec<CrackJump>> {
    if stations < 2 {
        return Err(Error::Solver("need at least 2 jump stations".into()));
    }
    let mesh = &cauchy.mesh;
    let tol = 1e-9;
    let mut out = Vec::with_capacity(mesh.cavities.len());
    for rect in &mesh.cavities {
        let [p, q, ylo, yhi] = *rect;
        let face = |yc: f64| -> (Vec<f64>, Vec<f64>) {
            let mut ns: Vec<usize> = {
                let mut seen = vec![false; mesh.nodes.len()];
                let mut v = Vec::new();
                for e in mesh.cavity_edges() {
                    for &n in &e.nodes {
                        let [x, y] = mesh.nodes[n];
                        if !seen[n] && (y - yc).abs() < tol && x >= p - tol && x <= q + tol {
                            seen[n] = true;
                            v.push(n);
                        }
                    }
                }
                v
            };
            ns.sort_by(|&m, &n| mesh.nodes[m][0].total_cmp(&mesh.nodes[n][0]));
            (
                ns.iter().map(|&n| mesh.nodes[n][0]).collect(),
                ns.iter().map(|&n| cauchy.u[n]).collect(),
            )
        };
        let (xt, ut) = face(yhi);
        let (xb, ub) = face(ylo);
        let paired = xt.len() >= 2
            && xb.len() >= 2
            && (xt[0] - p).abs() < tol
            && (xt[xt.len() - 1] - q).abs() < tol
            && (xb[0] - p).abs() < tol
            && (xb[xb.len() - 1] - q).abs() < tol;
        if !paired {
            return Err(Error::Solver(format!(
                "cavity faces over [{p}, {q}] cannot be paired"
            )));
        }
        let h = (q - p) / (stations - 1) as f64;
        let st: Vec<f64> = (0..stations)
            .map(|k| if k == stations - 1 { q } else { p + k as f64 * h })
            .collect();
        let jump: Vec<f64> = st
            .iter()
            .map(|&x| interp(&xt, &ut, x) - interp(&xb, &ub, x))
            .collect();
        out.push(CrackJump { interval: [p, q], stations: st, jump });
    }
    Ok(out)
}
