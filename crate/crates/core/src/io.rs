//! Artifact persistence: CSV for tabular numerics, JSON for structured
//! logs, a plain-text mesh dump. Every artifact embeds the config hash and
//! the seed in `#`-comment lines so a run can be tied back to its inputs.
//! Floats are written with the shortest representation that round-trips.

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fem::CauchyData;
use crate::mesh::Mesh;
use crate::monitor::MonitorLog;
use crate::probe::IndicatorSamples;
use crate::profile::Profile;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Provenance stamp shared by all artifacts of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub config_sha256: String,
    pub seed: u64,
}

impl ArtifactMeta {
    pub fn of(cfg: &RunConfig) -> Self {
        ArtifactMeta { config_sha256: cfg.sha256(), seed: cfg.noise.seed }
    }

    fn comment_header(&self) -> String {
        format!("# config_sha256 = {}\n# seed = {}\n", self.config_sha256, self.seed)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Boundary Cauchy data in outer-loop order, user-frame coordinates.
pub fn write_cauchy_csv(path: &Path, cauchy: &CauchyData, meta: &ArtifactMeta) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(meta.comment_header().as_bytes())?;
    writeln!(w, "arclength,x1,x2,g,u")?;
    let mesh = &cauchy.mesh;
    for e in mesh.outer_edges() {
        let n = e.nodes[0];
        let p = mesh.geom.to_user(mesh.nodes[n]);
        writeln!(
            w,
            "{},{},{},{},{}",
            mesh.arclength[n], p[0], p[1], cauchy.g.values[n], cauchy.u[n]
        )?;
    }
    w.flush()?;
    Ok(())
}

/// One probe point's indicator samples over the tau grid.
pub fn write_indicator_csv(
    path: &Path,
    samples: &IndicatorSamples,
    meta: &ArtifactMeta,
) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(meta.comment_header().as_bytes())?;
    let xi = samples.xi;
    writeln!(w, "# xi_slab = {}, {}", xi[0], xi[1])?;
    writeln!(w, "tau,re,im,log_mag,valid")?;
    for (i, &tau) in samples.tau.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{}",
            tau,
            samples.values[i].re,
            samples.values[i].im,
            samples.log_mags[i],
            samples.valid[i] as u8
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Full profile sweep; `maxima` marks detected local maxima positions.
pub fn write_profile_csv(
    path: &Path,
    profile: &Profile,
    maxima: &[f64],
    meta: &ArtifactMeta,
) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(meta.comment_header().as_bytes())?;
    writeln!(w, "xi1,phi,r2,is_max")?;
    for (i, &x) in profile.xi1_grid.iter().enumerate() {
        let is_max = maxima.iter().any(|&m| (m - x).abs() < 1e-9);
        writeln!(w, "{},{},{},{}", x, profile.phi[i], profile.r2[i], is_max as u8)?;
    }
    w.flush()?;
    Ok(())
}

/// Profile sweep as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub xi1: Vec<f64>,
    pub phi: Vec<f64>,
    pub r2: Vec<f64>,
    pub is_max: Vec<bool>,
}

pub fn read_profile_csv(path: &Path) -> Result<ProfileTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = ProfileTable { xi1: Vec::new(), phi: Vec::new(), r2: Vec::new(), is_max: Vec::new() };
    for rec in rdr.deserialize() {
        let (xi1, phi, r2, is_max): (f64, f64, f64, u8) = rec?;
        out.xi1.push(xi1);
        out.phi.push(phi);
        out.r2.push(r2);
        out.is_max.push(is_max != 0);
    }
    if out.xi1.is_empty() {
        return Err(Error::Config(format!("{}: no profile rows", path.display())));
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct StampedLog {
    config_sha256: String,
    seed: u64,
    log: MonitorLog,
}

pub fn write_monitor_log(path: &Path, log: &MonitorLog, meta: &ArtifactMeta) -> Result<()> {
    let stamped = StampedLog {
        config_sha256: meta.config_sha256.clone(),
        seed: meta.seed,
        log: log.clone(),
    };
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &stamped)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_monitor_log(path: &Path) -> Result<(MonitorLog, ArtifactMeta)> {
    let file = File::open(path)?;
    let stamped: StampedLog = serde_json::from_reader(file)?;
    Ok((
        stamped.log,
        ArtifactMeta { config_sha256: stamped.config_sha256, seed: stamped.seed },
    ))
}

/// Plain-text mesh dump: node coordinates (user frame) and triangles.
pub fn write_mesh_text(path: &Path, mesh: &Mesh, meta: &ArtifactMeta) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(meta.comment_header().as_bytes())?;
    writeln!(w, "nodes {}", mesh.nodes.len())?;
    for n in &mesh.nodes {
        let p = mesh.geom.to_user(*n);
        writeln!(w, "{} {}", p[0], p[1])?;
    }
    writeln!(w, "triangles {}", mesh.triangles.len())?;
    for t in &mesh.triangles {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a mesh dump back; returns user-frame nodes and triangles.
pub fn read_mesh_text(path: &Path) -> Result<(Vec<[f64; 2]>, Vec<[usize; 3]>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#'));
    let bad = |what: &str| Error::Config(format!("{}: malformed mesh dump ({what})", path.display()));
    let head = lines.next().ok_or_else(|| bad("missing node header"))?;
    let n: usize = head
        .strip_prefix("nodes ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| bad("bad node header"))?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let line = lines.next().ok_or_else(|| bad("truncated node list"))?;
        let mut it = line.split_whitespace().map(|v| v.parse::<f64>());
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(x)), Some(Ok(y)), None) => nodes.push([x, y]),
            _ => return Err(bad("bad node line")),
        }
    }
    let head = lines.next().ok_or_else(|| bad("missing triangle header"))?;
    let m: usize = head
        .strip_prefix("triangles ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| bad("bad triangle header"))?;
    let mut triangles = Vec::with_capacity(m);
    for _ in 0..m {
        let line = lines.next().ok_or_else(|| bad("truncated triangle list"))?;
        let mut it = line.split_whitespace().map(|v| v.parse::<usize>());
        match (it.next(), it.next(), it.next(), it.next()) {
            (Some(Ok(a)), Some(Ok(b)), Some(Ok(c)), None) => {
                if a >= n || b >= n || c >= n {
                    return Err(bad("triangle index out of range"));
                }
                triangles.push([a, b, c]);
            }
            _ => return Err(bad("bad triangle line")),
        }
    }
    Ok((nodes, triangles))
}
