//! Slab geometry, crack sets, the probing line, and the support radius
//! `s_sigma` that encodes the distance from a probe point to the crack set.
//!
//! Internal coordinates are the reference frame `[0,a] x [0,b]`; the user
//! frame differs by a pure translation (`origin_shift`) and is applied only
//! at I/O boundaries.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Rectangular two-slab conductor with a horizontal interface line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlabGeometry {
    /// Slab width.
    pub a: f64,
    /// Slab height.
    pub b: f64,
    /// Height of the interface (crack) line, `0 < c < b`.
    pub c: f64,
    /// Translation from reference coordinates to user coordinates.
    pub origin_shift: [f64; 2],
}

impl SlabGeometry {
    pub fn new(a: f64, b: f64, c: f64, origin_shift: [f64; 2]) -> Result<Self> {
        if !(a > 0.0) || !(b > 0.0) {
            return Err(Error::Geometry(format!(
                "slab dimensions must be positive, got a={a}, b={b}"
            )));
        }
        if !(c > 0.0 && c < b) {
            return Err(Error::Geometry(format!(
                "interface height must satisfy 0 < c < b, got c={c}, b={b}"
            )));
        }
        Ok(SlabGeometry { a, b, c, origin_shift })
    }

    /// The 8 x 0.4 slab with interface at 0.2, presented as
    /// `[-4,4] x [-0.2,0.2]` with the interface on the user x-axis.
    pub fn reference() -> Self {
        SlabGeometry { a: 8.0, b: 0.4, c: 0.2, origin_shift: [-4.0, -0.2] }
    }

    pub fn to_user(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0] + self.origin_shift[0], p[1] + self.origin_shift[1]]
    }

    pub fn to_slab(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0] - self.origin_shift[0], p[1] - self.origin_shift[1]]
    }
}

/// Union of closed intervals on the interface line (the un-welded part).
///
/// Intervals are kept strictly increasing and non-touching; overlapping or
/// touching input intervals are merged and the merge is flagged so callers
/// can warn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrackSet {
    intervals: Vec<[f64; 2]>,
    pub line_height: f64,
    merged: bool,
}

impl CrackSet {
    pub fn new(mut intervals: Vec<[f64; 2]>, line_height: f64) -> Result<Self> {
        for iv in &intervals {
            if !(iv[0] < iv[1]) {
                return Err(Error::Geometry(format!(
                    "crack interval [{}, {}] is empty or inverted",
                    iv[0], iv[1]
                )));
            }
        }
        intervals.sort_by(|p, q| p[0].total_cmp(&q[0]));
        let mut merged = false;
        let mut out: Vec<[f64; 2]> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match out.last_mut() {
                Some(last) if iv[0] <= last[1] => {
                    last[1] = last[1].max(iv[1]);
                    merged = true;
                }
                _ => out.push(iv),
            }
        }
        Ok(CrackSet { intervals: out, line_height, merged })
    }

    pub fn empty(line_height: f64) -> Self {
        CrackSet { intervals: Vec::new(), line_height, merged: false }
    }

    pub fn intervals(&self) -> &[[f64; 2]] {
        &self.intervals
    }

    /// Whether overlapping or touching intervals were merged at construction.
    pub fn merged_on_construction(&self) -> bool {
        self.merged
    }

    /// Endpoints of all intervals in increasing order.
    pub fn tips(&self) -> Vec<f64> {
        self.intervals.iter().flat_map(|iv| [iv[0], iv[1]]).collect()
    }

    /// Welded (joined) intervals: the complement within `[0, a]`.
    pub fn joined(&self, a: f64) -> Vec<[f64; 2]> {
        self.joined_span(0.0, a)
    }

    /// Welded (joined) intervals within an arbitrary span.
    pub fn joined_span(&self, span_lo: f64, span_hi: f64) -> Vec<[f64; 2]> {
        let mut out = Vec::new();
        let mut lo = span_lo;
        for iv in &self.intervals {
            if iv[0] > lo {
                out.push([lo, iv[0]]);
            }
            lo = lo.max(iv[1]);
        }
        if lo < span_hi {
            out.push([lo, span_hi]);
        }
        out
    }

    /// True when the crack set reaches both lateral slab edges, the
    /// configuration the tip-detection theory assumes. Interior crack sets
    /// are permitted but should be flagged by callers.
    pub fn pinned_to_edges(&self, a: f64) -> bool {
        match (self.intervals.first(), self.intervals.last()) {
            (Some(f), Some(l)) => f[0] <= 0.0 + 1e-12 && l[1] >= a - 1e-12,
            _ => false,
        }
    }
}

/// Horizontal probing locus above the slab: `xi2(xi1) = min(cap,
/// max(|xi1|/divisor, floor))` in user coordinates (height above the
/// interface line).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbingLine {
    pub divisor: f64,
    pub floor: f64,
    pub cap: f64,
}

impl Default for ProbingLine {
    fn default() -> Self {
        ProbingLine { divisor: 2.5, floor: 0.5, cap: 2.0 }
    }
}

impl ProbingLine {
    pub fn with_floor(floor: f64) -> Self {
        ProbingLine { floor, ..Default::default() }
    }

    /// Height of the probing line above the interface at `xi1` (user frame).
    pub fn height(&self, xi1: f64) -> f64 {
        self.cap.min((xi1.abs() / self.divisor).max(self.floor))
    }
}

/// Probe point on the probing line, in user coordinates.
pub fn probe_point(xi1: f64, line: &ProbingLine) -> [f64; 2] {
    [xi1, line.height(xi1)]
}

/// Probe point on the probing line, in slab coordinates. The point
/// must lie strictly outside the slab, which holds whenever
/// `line.floor > b - c`.
pub fn probe_point_slab(xi1_user: f64, line: &ProbingLine, geom: &SlabGeometry) -> Result<[f64; 2]> {
    let h = line.height(xi1_user);
    if geom.c + h <= geom.b {
        return Err(Error::Geometry(format!(
            "probing line at xi1={xi1_user} has height {h} which does not clear the slab top \
             (need > {})",
            geom.b - geom.c
        )));
    }
    Ok([xi1_user - geom.origin_shift[0], geom.c + h])
}

/// Radius of the largest disc tangent to `xi` from below that avoids the
/// crack set: the minimum over intervals of `(dx^2 + h^2) / (2h)` where
/// `h = xi2 - c` and `dx` is the horizontal distance from `xi1` to the
/// interval.
pub fn s_sigma_analytic(xi: [f64; 2], cracks: &CrackSet) -> Result<f64> {
    let h = xi[1] - cracks.line_height;
    if h <= 0.0 {
        return Err(Error::Geometry(format!(
            "probe point must lie above the interface line (xi2={} <= c={})",
            xi[1], cracks.line_height
        )));
    }
    if cracks.intervals.is_empty() {
        return Err(Error::Geometry("support radius undefined for an empty crack set".into()));
    }
    let mut best = f64::INFINITY;
    for iv in &cracks.intervals {
        let t = xi[0].clamp(iv[0], iv[1]);
        let dx = xi[0] - t;
        best = best.min((dx * dx + h * h) / (2.0 * h));
    }
    Ok(best)
}

/// Whether the critical disc of radius `s_sigma(xi)` touches the crack set
/// at exactly one interval endpoint; returns the index of that endpoint in
/// `cracks.tips()` ordering. `None` when the contact is a segment
/// (projection inside a crack) or two equidistant tips (joined-interval
/// midpoint).
pub fn single_tip_contact(xi: [f64; 2], cracks: &CrackSet) -> Result<Option<usize>> {
    let s = s_sigma_analytic(xi, cracks)?;
    let h = xi[1] - cracks.line_height;
    let eps = 1e-12 * (1.0 + s);
    // Collect every interval's contact: a segment when the projection is
    // strictly interior, otherwise the nearest endpoint.
    let mut tip_hits: Vec<usize> = Vec::new();
    for (k, iv) in cracks.intervals.iter().enumerate() {
        let t = xi[0].clamp(iv[0], iv[1]);
        let dx = xi[0] - t;
        let f = (dx * dx + h * h) / (2.0 * h);
        if (f - s).abs() > eps {
            continue;
        }
        if t > iv[0] && t < iv[1] {
            // tangent along the segment interior
            return Ok(None);
        }
        let j = 2 * k + usize::from(t == iv[1]);
        tip_hits.push(j);
    }
    // A projection landing exactly on an endpoint still touches only that
    // point, so it counts as a tip contact.
    match tip_hits.as_slice() {
        [j] => Ok(Some(*j)),
        _ => Ok(None),
    }
}

/// Brute-force largest-empty-disc radius, independent of the closed form:
/// bisection on `s` with the crack set sampled at `samples` points
/// (interval endpoints always included).
pub fn s_sigma_bruteforce(xi: [f64; 2], cracks: &CrackSet, samples: usize) -> Result<f64> {
    let h = xi[1] - cracks.line_height;
    if h <= 0.0 {
        return Err(Error::Geometry("probe point must lie above the interface line".into()));
    }
    if cracks.intervals.is_empty() {
        return Err(Error::Geometry("support radius undefined for an empty crack set".into()));
    }
    let total: f64 = cracks.intervals.iter().map(|iv| iv[1] - iv[0]).sum();
    let mut pts: Vec<f64> = Vec::with_capacity(samples + 2 * cracks.intervals.len());
    for iv in &cracks.intervals {
        let n = ((iv[1] - iv[0]) / total * samples as f64).ceil() as usize;
        for i in 0..=n {
            pts.push(iv[0] + (iv[1] - iv[0]) * i as f64 / n as f64);
        }
    }
    let c = cracks.line_height;
    let clear = |s: f64| -> bool {
        let cx = xi[0];
        let cy = xi[1] - s;
        pts.iter().all(|&t| {
            let dx = cx - t;
            let dy = cy - c;
            dx * dx + dy * dy >= s * s
        })
    };
    // grow until the disc hits the sampled set, then bisect
    let mut hi = h / 2.0;
    while clear(hi) {
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::Geometry("empty-disc search diverged".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if clear(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
