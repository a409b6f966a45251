//! Command-line surface: forward solves, probing sweeps, the monitoring
//! loop, the decay-limit oracle, and SVG re-rendering. Runtime failures
//! print one machine-readable JSON line to stderr and exit nonzero.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::sync::Arc;
use weldprobe::asymptotics::{verify_limit, OracleCase};
use weldprobe::fem::{neumann_sin3, solve_neumann};
use weldprobe::io::{
    read_profile_csv, write_cauchy_csv, write_indicator_csv, write_mesh_text,
    write_monitor_log, write_profile_csv, ArtifactMeta, ProfileTable,
};
use weldprobe::mesh::build_mesh;
use weldprobe::plot::profile_svg;
use weldprobe::probe::{add_noise, indicator, indicator_partial, ProbeConfig};
use weldprobe::profile::{profile_maxima, snapped_range, sweep_profile};
use weldprobe::{monitor, CauchyData, RunConfig};

#[derive(Parser)]
#[command(name = "weldprobe", version, about = "Crack probing and weld monitoring on a slab conductor")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the forward problem; emit the mesh and the boundary data CSV.
    Solve(SolveArgs),
    /// Indicator samples at one lateral position, or a full sweep profile.
    Probe(ProbeArgs),
    /// Run the weld-monitoring loop; emit the JSON log and round artifacts.
    Monitor(MonitorArgs),
    /// Check the closed-form tip-integral limit for one parameter case.
    Oracle(OracleArgs),
    /// Re-render the profile SVG from an existing profile CSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Config file (TOML); built-in reference defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the config's output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Enable noise at this relative level (0 disables).
    #[arg(long)]
    noise: Option<f64>,
    /// Rayon worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Lateral probe position (user frame); sweeps the whole line if omitted.
    #[arg(long, allow_negative_numbers = true)]
    xi1: Option<f64>,
    /// Override the tau grid as min:step:max.
    #[arg(long)]
    tau: Option<String>,
    /// Partial-boundary depth below the interface.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct MonitorArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct OracleArgs {
    /// Order of the tip expansion term.
    #[arg(long)]
    n: u32,
    /// Disc radius.
    #[arg(long)]
    s0: f64,
    /// Contact angle in (-pi/2, pi/2).
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    /// Integration upper limit override.
    #[arg(long, allow_negative_numbers = true)]
    eta_prime: Option<f64>,
    /// Comma-separated evaluation points (default 8,16,32,64,100).
    #[arg(long)]
    tau: Option<String>,
    /// Also write the report JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Profile CSV produced by `probe` or `monitor`.
    #[arg(long)]
    input: PathBuf,
    /// Output SVG path (default: input with .svg extension).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated true tip positions to overlay.
    #[arg(long, allow_hyphen_values = true)]
    tips: Option<String>,
    #[arg(long, default_value = "decay-slope profile")]
    title: String,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        let kind = e
            .downcast_ref::<weldprobe::Error>()
            .map(|c| c.kind())
            .unwrap_or("cli");
        eprintln!(
            "{}",
            serde_json::json!({ "error": format!("{e:#}"), "kind": kind })
        );
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Solve(a) => solve_cmd(a),
        Cmd::Probe(a) => probe_cmd(a),
        Cmd::Monitor(a) => monitor_cmd(a),
        Cmd::Oracle(a) => oracle_cmd(a),
        Cmd::Plot(a) => plot_cmd(a),
    }
}

fn setup(common: &CommonArgs) -> Result<(RunConfig, PathBuf)> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("thread pool already initialized")?;
    }
    let mut cfg = match &common.config {
        Some(path) => weldprobe::parse_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.noise.seed = seed;
    }
    if let Some(level) = common.noise {
        if level < 0.0 {
            bail!(weldprobe::Error::Config(
                "noise level must be nonnegative".into()
            ));
        }
        cfg.noise.enabled = level > 0.0;
        cfg.noise.level = level;
    }
    cfg.validate()?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    Ok((cfg, out))
}

/// Mesh, solve, and (when enabled) perturb the trace.
fn forward(cfg: &RunConfig) -> Result<CauchyData> {
    let geom = cfg.slab()?;
    let cracks = cfg.crack_set()?;
    let mesh = Arc::new(build_mesh(
        &geom,
        &cracks,
        cfg.cracks.width,
        cfg.geometry.target_elements,
    )?);
    let g = neumann_sin3(&mesh, cfg.forcing.exclusion, cfg.forcing.support)?;
    let mut cauchy = solve_neumann(&mesh, &g)?;
    if cfg.noise.enabled && cfg.noise.level > 0.0 {
        cauchy = add_noise(&cauchy, cfg.noise.level, cfg.noise.seed)?;
    }
    Ok(cauchy)
}

fn solve_cmd(a: SolveArgs) -> Result<()> {
    let (cfg, out) = setup(&a.common)?;
    let meta = ArtifactMeta::of(&cfg);
    let cauchy = forward(&cfg)?;
    let mesh_path = out.join("mesh.txt");
    let cauchy_path = out.join("cauchy.csv");
    write_mesh_text(&mesh_path, &cauchy.mesh, &meta)?;
    write_cauchy_csv(&cauchy_path, &cauchy, &meta)?;
    println!("wrote {}", mesh_path.display());
    println!("wrote {}", cauchy_path.display());
    println!(
        "nodes {} triangles {} residual {:.3e}",
        cauchy.mesh.nodes.len(),
        cauchy.mesh.triangles.len(),
        cauchy.residual
    );
    Ok(())
}

fn probe_cmd(a: ProbeArgs) -> Result<()> {
    let (mut cfg, out) = setup(&a.common)?;
    if let Some(d) = a.delta {
        cfg.probe.delta = Some(d);
        cfg.validate()?;
    }
    if let Some(range) = &a.tau {
        let (min, step, max) = parse_range(range)?;
        cfg.probe.tau_min = min;
        cfg.probe.tau_step = step;
        cfg.probe.tau_max = max;
        cfg.validate()?;
    }
    let meta = ArtifactMeta::of(&cfg);
    let cauchy = forward(&cfg)?;
    let geom = cfg.slab()?;
    let line = cfg.probing_line();
    match a.xi1 {
        Some(xi1) => {
            let xi = weldprobe::geometry::probe_point_slab(xi1, &line, &geom)?;
            let mut probe = ProbeConfig::new(xi, cfg.tau_grid()?);
            probe.delta = cfg.probe.delta;
            probe.m_bound = cfg.probe.m_bound;
            let samples = if probe.delta.is_some() {
                indicator_partial(&cauchy, &probe)?
            } else {
                indicator(&cauchy, &probe)?
            };
            let path = out.join("indicator.csv");
            write_indicator_csv(&path, &samples, &meta)?;
            println!("wrote {}", path.display());
        }
        None => {
            let profile = sweep_profile(&cauchy, &line, &cfg.xi1_grid()?, &cfg.tau_grid()?)?;
            let maxima = profile_maxima(&profile, &weldprobe::DetectParams::default());
            let max_xs: Vec<f64> = maxima.iter().map(|m| m.x).collect();
            let csv_path = out.join("profile.csv");
            write_profile_csv(&csv_path, &profile, &max_xs, &meta)?;
            println!("wrote {}", csv_path.display());
            if cfg.output.formats.iter().any(|f| f == "svg") {
                let table = read_profile_csv(&csv_path)?;
                let tips = cfg.crack_set()?.tips();
                let svg_path = out.join("profile.svg");
                std::fs::write(&svg_path, profile_svg(&table, &tips, "decay-slope profile"))?;
                println!("wrote {}", svg_path.display());
            }
            for m in &maxima {
                println!("maximum at {} (slope {:.4}, prominence {:.4})", m.x, m.phi, m.prominence);
            }
        }
    }
    Ok(())
}

fn monitor_cmd(a: MonitorArgs) -> Result<()> {
    let (cfg, out) = setup(&a.common)?;
    let meta = ArtifactMeta::of(&cfg);
    let geom = cfg.slab()?;
    let cracks = cfg.crack_set()?;
    let settings = cfg.sweep_settings()?;
    let mc = cfg.monitor_config();
    let log = monitor::run_monitor(&geom, &cracks, &settings, &mc)?;
    let want_svg = cfg.output.formats.iter().any(|f| f == "svg");
    for pt in &log.points {
        for rec in &pt.rounds {
            let Some(profile) = &rec.profile else { continue };
            let maxima = profile_maxima(profile, &settings.detect);
            let max_xs: Vec<f64> = maxima.iter().map(|m| m.x).collect();
            let csv_path = out.join(&rec.artifact);
            write_profile_csv(&csv_path, profile, &max_xs, &meta)?;
            if want_svg {
                let table = read_profile_csv(&csv_path)?;
                let tips: Vec<f64> = rec.cracks.iter().flat_map(|iv| [iv[0], iv[1]]).collect();
                let title = format!("point {} round {}", pt.x_star, rec.round);
                std::fs::write(
                    csv_path.with_extension("svg"),
                    profile_svg(&table, &tips, &title),
                )?;
            }
        }
    }
    let log_path = out.join("monitor.json");
    write_monitor_log(&log_path, &log, &meta)?;
    println!("wrote {}", log_path.display());
    for pt in &log.points {
        println!(
            "point {}: {}",
            pt.x_star,
            serde_json::to_string(&pt.outcome)?
        );
    }
    Ok(())
}

fn oracle_cmd(a: OracleArgs) -> Result<()> {
    let mut case = OracleCase::new(a.n, a.s0, a.alpha)?;
    case.eta_prime = a.eta_prime;
    if let Some(list) = &a.tau {
        let mut taus = Vec::new();
        for part in list.split(',') {
            taus.push(
                part.trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad tau value '{part}'"))?,
            );
        }
        if taus.is_empty() {
            bail!(weldprobe::Error::Config("tau list is empty".into()));
        }
        case.tau_list = taus;
    }
    let report = verify_limit(&case)?;
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(path) = &a.out {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        std::fs::write(path, text + "\n")?;
    }
    Ok(())
}

fn plot_cmd(a: PlotArgs) -> Result<()> {
    let table: ProfileTable = read_profile_csv(&a.input)?;
    let tips = match &a.tips {
        Some(list) => {
            let mut out = Vec::new();
            for part in list.split(',') {
                out.push(
                    part.trim()
                        .parse::<f64>()
                        .with_context(|| format!("bad tip value '{part}'"))?,
                );
            }
            out
        }
        None => Vec::new(),
    };
    let out = a.out.unwrap_or_else(|| a.input.with_extension("svg"));
    std::fs::write(&out, profile_svg(&table, &tips, &a.title))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn parse_range(arg: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = arg.split(':').collect();
    let [min, step, max] = parts.as_slice() else {
        bail!(weldprobe::Error::Config(format!(
            "range '{arg}' must be min:step:max"
        )));
    };
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .with_context(|| format!("bad number '{s}' in range '{arg}'"))
    };
    let (min, step, max) = (parse(min)?, parse(step)?, parse(max)?);
    snapped_range(min, max, step)?;
    Ok((min, step, max))
}
