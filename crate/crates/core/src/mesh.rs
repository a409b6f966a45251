//! Structured triangulation of the slab with cracks cut out as thin
//! rectangular cavities centered on the interface line.
//!
//! The generator lays a near-square background grid over the rectangle,
//! inserts mandatory lines at crack tips and around the interface (two
//! graded layers), removes every cell whose center falls inside a cavity,
//! and splits the remaining cells along a fixed diagonal. Node numbering is
//! column-major so the stiffness matrix stays banded.

use crate::error::{Error, Result};
use crate::geometry::{CrackSet, SlabGeometry};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
    Cavity,
}

impl Side {
    /// Outward unit normal; cavity faces vary per edge and return None.
    pub fn normal(self) -> Option<[f64; 2]> {
        match self {
            Side::Bottom => Some([0.0, -1.0]),
            Side::Right => Some([1.0, 0.0]),
            Side::Top => Some([0.0, 1.0]),
            Side::Left => Some([-1.0, 0.0]),
            Side::Cavity => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Side::Bottom => "bottom",
            Side::Right => "right",
            Side::Top => "top",
            Side::Left => "left",
            Side::Cavity => "cavity",
        }
    }

    pub fn from_label(s: &str) -> Option<Side> {
        Some(match s {
            "bottom" => Side::Bottom,
            "right" => Side::Right,
            "top" => Side::Top,
            "left" => Side::Left,
            "cavity" => Side::Cavity,
            _ => return None,
        })
    }
}

/// Directed boundary edge with the domain on its left; outer loops run
/// counterclockwise, cavity hole loops clockwise.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub side: Side,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub geom: SlabGeometry,
    /// Node coordinates in the slab frame [0,a]x[0,b].
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// All boundary edges ordered into closed loops (outer loop first).
    pub boundary: Vec<BoundaryEdge>,
    /// Start index of each loop within `boundary`.
    pub loop_starts: Vec<usize>,
    /// Cumulative boundary arclength per node (NaN on interior nodes);
    /// restarts at 0 on each loop.
    pub arclength: Vec<f64>,
    /// Cavity rectangles (x_lo, x_hi, y_lo, y_hi) in slab frame.
    pub cavities: Vec<[f64; 4]>,
    pub crack_width: f64,
    pub target_elements: usize,
}

impl Mesh {
    pub fn outer_edges(&self) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary.iter().filter(|e| e.side != Side::Cavity)
    }

    pub fn cavity_edges(&self) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary.iter().filter(|e| e.side == Side::Cavity)
    }

    pub fn cavity_count(&self) -> usize {
        self.cavities.len()
    }

    /// Trapezoid weights of the composite boundary rule over the selected
    /// edges: half the total incident edge length per node.
    pub fn boundary_weights<F: Fn(&BoundaryEdge) -> bool>(&self, keep: F) -> Vec<f64> {
        let mut w = vec![0.0; self.nodes.len()];
        for e in self.boundary.iter().filter(|e| keep(e)) {
            let l = self.edge_length(e);
            w[e.nodes[0]] += l / 2.0;
            w[e.nodes[1]] += l / 2.0;
        }
        w
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let p = self.nodes[e.nodes[0]];
        let q = self.nodes[e.nodes[1]];
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    }

    /// Nodes on outer edges, each counted once.
    pub fn outer_nodes(&self) -> Vec<usize> {
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        for e in self.outer_edges() {
            for &n in &e.nodes {
                if !seen[n] {
                    seen[n] = true;
                    out.push(n);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn merged_lines(uniform: &[f64], mandatory: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut lines: Vec<f64> = uniform
        .iter()
        .filter(|&&u| mandatory.iter().all(|&m| (u - m).abs() > tol))
        .chain(mandatory.iter())
        .copied()
        .collect();
    lines.sort_by(f64::total_cmp);
    lines.dedup();
    for w in lines.windows(2) {
        if w[1] - w[0] < 1e-9 {
            return Err(Error::Mesh(format!(
                "degenerate grid line spacing {} near {}",
                w[1] - w[0],
                w[0]
            )));
        }
    }
    Ok(lines)
}

fn uniform_lines(hi: f64, n: usize) -> Vec<f64> {
    let step = hi / n as f64;
    let mut v: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
    v[n] = hi;
    v
}

/// Builds the triangulation. Cracks are given in the user frame of `geom`
/// and modeled as rectangles of height `crack_width` centered on the
/// interface line.
pub fn build_mesh(
    geom: &SlabGeometry,
    cracks: &CrackSet,
    crack_width: f64,
    target_elements: usize,
) -> Result<Mesh> {
    let (a, b, c) = (geom.a, geom.b, geom.c);
    let w = crack_width;
    if target_elements < 1000 {
        return Err(Error::Mesh(format!(
            "target element count {target_elements} below the minimum 1000"
        )));
    }
    if !(w > 0.0) || w / 2.0 >= c.min(b - c) {
        return Err(Error::Mesh(format!(
            "crack width {w} must be positive and keep the cavity away from the slab faces \
             (limit {})",
            2.0 * c.min(b - c)
        )));
    }
    let line_slab = cracks.line_height - geom.origin_shift[1];
    if !cracks.intervals().is_empty() && (line_slab - c).abs() > 1e-12 {
        return Err(Error::Mesh(format!(
            "crack line height {} does not match the geometry interface at {}",
            cracks.line_height,
            geom.to_user([0.0, c])[1]
        )));
    }
    let cracks_slab: Vec<[f64; 2]> = cracks
        .intervals()
        .iter()
        .map(|iv| [iv[0] - geom.origin_shift[0], iv[1] - geom.origin_shift[0]])
        .collect();
    for iv in &cracks_slab {
        if iv[0] < -1e-12 || iv[1] > a + 1e-12 {
            return Err(Error::Mesh(format!(
                "crack interval [{}, {}] (slab frame) leaves the slab [0, {a}]",
                iv[0], iv[1]
            )));
        }
    }

    let nquad = target_elements as f64 / 2.0;
    let ny = (nquad / (a / b)).sqrt().round() as usize;
    let ny = ny.max(4);
    let nx = (nquad / ny as f64).round() as usize;

    let mut mx: Vec<f64> = vec![0.0, a];
    for iv in &cracks_slab {
        for &t in iv {
            mx.push(t);
            if 0.0 < t && t < a {
                mx.push((t - w / 2.0).max(0.0));
                mx.push((t + w / 2.0).min(a));
                mx.push((t - 1.5 * w).max(0.0));
                mx.push((t + 1.5 * w).min(a));
            }
        }
    }
    let mut my: Vec<f64> = vec![0.0, b];
    if !cracks_slab.is_empty() {
        my.extend([c - w / 2.0, c, c + w / 2.0, c - w, c + w, c - 2.0 * w, c + 2.0 * w]);
    }
    mx.sort_by(f64::total_cmp);
    mx.dedup();
    my.sort_by(f64::total_cmp);
    my.dedup();
    let xs = merged_lines(&uniform_lines(a, nx), &mx, w / 3.0)?;
    let ys = merged_lines(&uniform_lines(b, ny), &my, w / 3.0)?;
    let (nxc, nyc) = (xs.len() - 1, ys.len() - 1);

    let cavities: Vec<[f64; 4]> = cracks_slab
        .iter()
        .map(|iv| [iv[0], iv[1], c - w / 2.0, c + w / 2.0])
        .collect();
    let in_cavity = |xc: f64, yc: f64| {
        cavities
            .iter()
            .any(|r| r[0] < xc && xc < r[1] && r[2] < yc && yc < r[3])
    };

    let idx = |i: usize, j: usize| i * (nyc + 1) + j;
    let mut used = vec![false; (nxc + 1) * (nyc + 1)];
    let mut cells: Vec<(usize, usize)> = Vec::new();
    for i in 0..nxc {
        for j in 0..nyc {
            let xc = (xs[i] + xs[i + 1]) / 2.0;
            let yc = (ys[j] + ys[j + 1]) / 2.0;
            if in_cavity(xc, yc) {
                continue;
            }
            cells.push((i, j));
            for (di, dj) in [(0, 0), (1, 0), (1, 1), (0, 1)] {
                used[idx(i + di, j + dj)] = true;
            }
        }
    }
    let mut node_id = vec![usize::MAX; (nxc + 1) * (nyc + 1)];
    let mut nodes = Vec::new();
    for i in 0..=nxc {
        for j in 0..=nyc {
            if used[idx(i, j)] {
                node_id[idx(i, j)] = nodes.len();
                nodes.push([xs[i], ys[j]]);
            }
        }
    }
    let mut triangles = Vec::with_capacity(2 * cells.len());
    for (i, j) in cells {
        let n00 = node_id[idx(i, j)];
        let n10 = node_id[idx(i + 1, j)];
        let n11 = node_id[idx(i + 1, j + 1)];
        let n01 = node_id[idx(i, j + 1)];
        triangles.push([n00, n10, n11]);
        triangles.push([n00, n11, n01]);
    }
    if triangles.is_empty() {
        return Err(Error::Mesh("empty triangulation".into()));
    }
    for t in &triangles {
        let p = [nodes[t[0]], nodes[t[1]], nodes[t[2]]];
        let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        if area2 <= 0.0 {
            return Err(Error::Mesh("non-positive triangle area".into()));
        }
    }

    let (boundary, loop_starts, arclength) =
        trace_boundary(&nodes, &triangles, a, b)?;

    Ok(Mesh {
        geom: geom.clone(),
        nodes,
        triangles,
        boundary,
        loop_starts,
        arclength,
        cavities,
        crack_width: w,
        target_elements,
    })
}

/// Extracts boundary edges (each undirected edge used by exactly one
/// triangle), orients them with the domain on the left, tags them by the
/// rectangle side they lie on, and orders them into closed loops with the
/// outer loop first, started at the bottom-left corner.
fn trace_boundary(
    nodes: &[[f64; 2]],
    triangles: &[[usize; 3]],
    a: f64,
    b: f64,
) -> Result<(Vec<BoundaryEdge>, Vec<usize>, Vec<f64>)> {
    let mut count: HashMap<(usize, usize), (u32, [usize; 2])> = HashMap::new();
    for t in triangles {
        for k in 0..3 {
            let (n1, n2) = (t[k], t[(k + 1) % 3]);
            let key = (n1.min(n2), n1.max(n2));
            let entry = count.entry(key).or_insert((0, [n1, n2]));
            entry.0 += 1;
        }
    }
    let tol = 1e-9;
    let tag = |e: [usize; 2]| -> BoundaryEdge {
        let p = nodes[e[0]];
        let q = nodes[e[1]];
        let side = if p[1].abs() < tol && q[1].abs() < tol {
            Side::Bottom
        } else if (p[1] - b).abs() < tol && (q[1] - b).abs() < tol {
            Side::Top
        } else if p[0].abs() < tol && q[0].abs() < tol {
            Side::Left
        } else if (p[0] - a).abs() < tol && (q[0] - a).abs() < tol {
            Side::Right
        } else {
            Side::Cavity
        };
        BoundaryEdge { nodes: e, side }
    };
    let mut next: HashMap<usize, BoundaryEdge> = HashMap::new();
    for (_, (c, dir)) in count {
        if c == 1 {
            let e = tag(dir);
            if next.insert(dir[0], e).is_some() {
                return Err(Error::Mesh(format!(
                    "non-manifold boundary at node {}",
                    dir[0]
                )));
            }
        }
    }
    let n_edges = next.len();

    // outer loop starts at the bottom-left corner (0,0), which always exists
    let start = nodes
        .iter()
        .position(|p| p[0].abs() < tol && p[1].abs() < tol)
        .ok_or_else(|| Error::Mesh("missing bottom-left corner node".into()))?;

    let mut boundary = Vec::with_capacity(n_edges);
    let mut loop_starts = Vec::new();
    let mut arclength = vec![f64::NAN; nodes.len()];
    let walk = |from: usize,
                    next: &mut HashMap<usize, BoundaryEdge>,
                    boundary: &mut Vec<BoundaryEdge>,
                    arclength: &mut Vec<f64>|
     -> Result<()> {
        let mut s = 0.0;
        let mut cur = from;
        arclength[cur] = 0.0;
        loop {
            let e = next.remove(&cur).ok_or_else(|| {
                Error::Mesh(format!("boundary loop broken at node {cur}"))
            })?;
            let p = nodes[e.nodes[0]];
            let q = nodes[e.nodes[1]];
            s += ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
            cur = e.nodes[1];
            boundary.push(e);
            if cur == from {
                return Ok(());
            }
            arclength[cur] = s;
        }
    };
    loop_starts.push(0);
    walk(start, &mut next, &mut boundary, &mut arclength)?;
    while !next.is_empty() {
        // deterministic pick: smallest (x, y) among remaining loop nodes
        let from = *next
            .keys()
            .min_by(|&&m, &&n| {
                nodes[m][0]
                    .total_cmp(&nodes[n][0])
                    .then(nodes[m][1].total_cmp(&nodes[n][1]))
            })
            .unwrap();
        loop_starts.push(boundary.len());
        walk(from, &mut next, &mut boundary, &mut arclength)?;
    }
    Ok((boundary, loop_starts, arclength))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_state() -> (SlabGeometry, CrackSet) {
        let geom = SlabGeometry::reference();
        let cracks =
            CrackSet::new(vec![[-4.0, -1.5], [-1.0, 1.0], [1.5, 4.0]], 0.0).unwrap();
        (geom, cracks)
    }

    fn loop_signed_area2(mesh: &Mesh, lo: usize, hi: usize) -> f64 {
        mesh.boundary[lo..hi]
            .iter()
            .map(|e| {
                let p = mesh.nodes[e.nodes[0]];
                let q = mesh.nodes[e.nodes[1]];
                p[0] * q[1] - q[0] * p[1]
            })
            .sum()
    }

    #[test]
    fn reference_mesh_shape() {
        let (geom, cracks) = reference_state();
        let mesh = build_mesh(&geom, &cracks, 0.04, 30720).unwrap();
        let n = mesh.triangles.len() as f64;
        assert!(
            (n - 30720.0).abs() / 30720.0 < 0.25,
            "element count {n} not within 25% of target"
        );
        assert_eq!(mesh.cavity_count(), 3);
        // cavities resolved with at least 2 element layers across the width
        let c = geom.c;
        let mut inner_y: Vec<f64> = mesh
            .nodes
            .iter()
            .map(|p| p[1])
            .filter(|&y| y > c - 0.02 - 1e-12 && y < c + 0.02 + 1e-12)
            .collect();
        inner_y.sort_by(f64::total_cmp);
        inner_y.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        assert!(inner_y.len() >= 3, "cavity layers {inner_y:?}");
    }

    #[test]
    fn four_intervals_make_four_holes() {
        let geom = SlabGeometry::reference();
        let cracks = CrackSet::new(
            vec![[-3.5, -2.5], [-1.5, -0.5], [0.5, 1.5], [2.5, 3.5]],
            0.0,
        )
        .unwrap();
        let mesh = build_mesh(&geom, &cracks, 0.04, 30720).unwrap();
        assert_eq!(mesh.cavity_count(), 4);
        // all four cavities are interior, so each adds a separate closed loop
        assert_eq!(mesh.loop_starts.len(), 5);
    }

    #[test]
    fn no_triangle_in_cavity() {
        let (geom, cracks) = reference_state();
        let mesh = build_mesh(&geom, &cracks, 0.04, 7680).unwrap();
        for t in &mesh.triangles {
            let cx = (mesh.nodes[t[0]][0] + mesh.nodes[t[1]][0] + mesh.nodes[t[2]][0]) / 3.0;
            let cy = (mesh.nodes[t[0]][1] + mesh.nodes[t[1]][1] + mesh.nodes[t[2]][1]) / 3.0;
            for r in &mesh.cavities {
                assert!(
                    !(r[0] + 1e-12 < cx && cx < r[1] - 1e-12 && r[2] + 1e-12 < cy && cy < r[3] - 1e-12),
                    "triangle centroid ({cx}, {cy}) inside cavity {r:?}"
                );
            }
        }
    }

    #[test]
    fn boundary_loops_closed_and_oriented() {
        let (geom, cracks) = reference_state();
        let mesh = build_mesh(&geom, &cracks, 0.04, 7680).unwrap();
        let mut bounds = mesh.loop_starts.clone();
        bounds.push(mesh.boundary.len());
        for (k, pair) in bounds.windows(2).enumerate() {
            let (lo, hi) = (pair[0], pair[1]);
            for w in mesh.boundary[lo..hi].windows(2) {
                assert_eq!(w[0].nodes[1], w[1].nodes[0]);
            }
            assert_eq!(
                mesh.boundary[hi - 1].nodes[1],
                mesh.boundary[lo].nodes[0],
                "loop {k} does not close"
            );
            let area2 = loop_signed_area2(&mesh, lo, hi);
            if k == 0 {
                assert!(area2 > 0.0, "outer loop not counterclockwise");
            } else {
                assert!(area2 < 0.0, "hole loop {k} not clockwise");
            }
        }
        // arclength increases along the outer loop
        let outer_end = bounds[1];
        let mut prev = -1.0;
        for e in &mesh.boundary[..outer_end - 1] {
            let s = mesh.arclength[e.nodes[1]];
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn empty_crackset_is_simply_connected() {
        let geom = SlabGeometry::reference();
        let cracks = CrackSet::empty(0.0);
        let mesh = build_mesh(&geom, &cracks, 0.04, 30720).unwrap();
        assert_eq!(mesh.cavity_count(), 0);
        assert_eq!(mesh.cavity_edges().count(), 0);
        assert_eq!(mesh.loop_starts.len(), 1);
        let n = mesh.triangles.len() as f64;
        assert!((n - 30720.0).abs() / 30720.0 < 0.25);
    }

    #[test]
    fn near_full_span_crack_stays_connected() {
        let geom = SlabGeometry::reference();
        let cracks = CrackSet::new(vec![[-3.95, 3.95]], 0.0).unwrap();
        let mesh = build_mesh(&geom, &cracks, 0.04, 7680).unwrap();
        // union-find over triangles sharing nodes
        let mut parent: Vec<usize> = (0..mesh.nodes.len()).collect();
        fn find(p: &mut Vec<usize>, i: usize) -> usize {
            let mut i = i;
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for t in &mesh.triangles {
            for k in 1..3 {
                let (a, b) = (find(&mut parent, t[0]), find(&mut parent, t[k]));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let root = find(&mut parent, 0);
        for i in 0..mesh.nodes.len() {
            assert_eq!(find(&mut parent, i), root, "mesh disconnected at node {i}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let (geom, cracks) = reference_state();
        assert!(build_mesh(&geom, &cracks, 0.04, 500).is_err());
        assert!(build_mesh(&geom, &cracks, 0.5, 30720).is_err());
        assert!(build_mesh(&geom, &cracks, -0.04, 30720).is_err());
        let shifted = CrackSet::new(vec![[-1.0, 1.0]], 0.1).unwrap();
        assert!(build_mesh(&geom, &shifted, 0.04, 30720).is_err());
        let outside = CrackSet::new(vec![[-5.0, -3.0]], 0.0).unwrap();
        assert!(build_mesh(&geom, &outside, 0.04, 30720).is_err());
    }

    #[test]
    fn column_major_numbering_keeps_band_small() {
        let (geom, cracks) = reference_state();
        let mesh = build_mesh(&geom, &cracks, 0.04, 30720).unwrap();
        let mut ys: Vec<f64> = mesh.nodes.iter().map(|p| p[1]).collect();
        ys.sort_by(f64::total_cmp);
        ys.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let band_bound = 2 * (ys.len() + 2);
        let band = mesh
            .triangles
            .iter()
            .flat_map(|t| {
                [
                    t[0].abs_diff(t[1]),
                    t[1].abs_diff(t[2]),
                    t[0].abs_diff(t[2]),
                ]
            })
            .max()
            .unwrap();
        assert!(band <= band_bound, "bandwidth {band} exceeds {band_bound}");
    }
}
