//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid input or config, 3 when a run
//! fails at runtime (integration failure, escape, I/O). Failures print one
//! machine-readable line `error: <field>: <message>` on stderr.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::analytic::{f_gamma, width_curve};
use crate::config::{load_raw, Config, PotentialKind, RawConfig};
use crate::error::{Error, Result};
use crate::greenfn::{
    composite_solution, compute_b, compute_q, growth_rate, normalize_noise, solve_classical, GreenFunction,
};
use crate::langevin::{integrate, run_ensemble, EnsembleSpec, IntegratorSpec, PointSampler};
use crate::noise::{band_average, periodogram, NoiseModel, NoisePath, NoiseSource, SpectrumMode, SpectrumSpec};
use crate::output::{self, Meta};
use crate::potential::Potential;
use crate::state::TimeGrid;
use crate::wigner::{evaluate_grid, TransportSpec, CONVENTION};

#[derive(Debug, Parser)]
#[command(name = "thermal-langevin", version, about = "Langevin dynamics in a thermal bath")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Run configuration (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `ensemble.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Output file (directory for `semiclassical`); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory, or an ensemble when `ensemble.n_traj > 1`.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate the harmonic fluctuation width `f_γ(ωt)`.
    Width {
        #[command(flatten)]
        common: Common,
        /// Comma-separated values of `γω`.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        gammas: Vec<f64>,
        /// Largest `ωt`.
        #[arg(long, default_value_t = 30.0)]
        tmax: f64,
        /// Number of `ωt` rows.
        #[arg(long, default_value_t = 601)]
        points: usize,
        /// Add Monte Carlo columns from a harmonic ensemble per `γ`.
        #[arg(long)]
        mc: bool,
    },
    /// Transport a Gaussian packet and tabulate `W(x, p; t)` on a grid.
    Wigner {
        #[command(flatten)]
        common: Common,
        /// `xmin:xmax:nx,pmin:pmax:np`.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Evaluation time measured from the start of the run.
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        /// Noise paths averaged per grid point.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Draw one noise path and its band-averaged periodogram.
    Noise {
        #[command(flatten)]
        common: Common,
        /// white, flat, truncated[:order] or coth.
        #[arg(long, default_value = "white")]
        spec: String,
        /// Number of steps.
        #[arg(long, default_value_t = 4096)]
        n: usize,
        /// Periodogram bands.
        #[arg(long, default_value_t = 32)]
        bands: usize,
        /// Spectrum CSV; defaults to `<out>.spectrum.csv`. Skipped when
        /// writing the path to stdout without this flag.
        #[arg(long)]
        spectrum: Option<PathBuf>,
    },
    /// Orbit, Green function, `A`, `B`, `Q` and the composite solution
    /// compared with a direct run on the same noise path.
    Semiclassical {
        #[command(flatten)]
        common: Common,
    },
}

/// Parses `std::env::args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let (field, message) = describe(&e);
            eprintln!("error: {field}: {message}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        e if e.is_runtime() => 3,
        Error::Io(_) | Error::Csv(_) => 3,
        Error::Trajectory { .. } => 3,
        _ => 2,
    }
}

fn describe(e: &Error) -> (String, String) {
    match e {
        Error::Validation { field, message } => (field.clone(), message.clone()),
        Error::Parse { line, message } => ("config".into(), format!("line {line}: {message}")),
        Error::Domain { .. } => ("potential".into(), e.to_string()),
        Error::Unsupported(m) => ("unsupported".into(), m.clone()),
        Error::GridMismatch(m) => ("grid".into(), m.clone()),
        Error::Integration { .. } => ("integration".into(), e.to_string()),
        Error::Runaway { .. } => ("runaway".into(), e.to_string()),
        Error::Trajectory { .. } => ("trajectory".into(), e.to_string()),
        Error::Escape { .. } => ("escape".into(), e.to_string()),
        Error::Io(err) => ("io".into(), err.to_string()),
        Error::Csv(err) => ("csv".into(), err.to_string()),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common } => cmd_simulate(&common),
        Command::Width {
            common,
            gammas,
            tmax,
            points,
            mc,
        } => cmd_width(&common, &gammas, tmax, points, mc),
        Command::Wigner {
            common,
            grid,
            time,
            samples,
        } => cmd_wigner(&common, grid.as_deref(), time, samples),
        Command::Noise {
            common,
            spec,
            n,
            bands,
            spectrum,
        } => cmd_noise(&common, &spec, n, bands, spectrum.as_deref()),
        Command::Semiclassical { common } => cmd_semiclassical(&common),
    }
}

fn load(common: &Common) -> Result<Config> {
    let mut raw = match &common.config {
        Some(path) => load_raw(path)?,
        None => RawConfig::default(),
    };
    if let Some(seed) = common.seed {
        raw.set("ensemble.seed", seed.to_string());
    }
    if common.workers == 0 {
        return Err(Error::validation("workers", "must be >= 1"));
    }
    Config::from_raw(&raw)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn base_meta(cfg: &Config) -> Meta {
    Meta::new()
        .with("seed", cfg.seed)
        .with("dt", cfg.integrator.dt)
        .with("n_traj", cfg.n_traj)
        .with("scheme", cfg.integrator.scheme.label())
        .with("noise", cfg.noise.label())
        .with("potential", cfg.potential_kind.label())
}

fn noise_path(cfg: &Config, dims: usize, stream: u64) -> Result<NoisePath> {
    let n = cfg.integrator.n_steps;
    let dt = cfg.integrator.dt;
    let source = NoiseSource::new(&cfg.noise, &cfg.params, n, dt, dims)?;
    let mut path = NoisePath::zeros(0.0, dt, n, dims);
    source.fill(cfg.seed, stream, &mut path.increments);
    path.seed = cfg.seed;
    path.stream = stream;
    Ok(path)
}

fn cmd_simulate(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let started = Instant::now();
    let meta = base_meta(&cfg);
    let out = open_out(common.out.as_deref())?;
    if cfg.n_traj == 1 && cfg.packet.is_none() {
        let path = noise_path(&cfg, cfg.initial.dims(), 0)?;
        let traj = integrate(&cfg.params, &cfg.potential, &cfg.initial, &path, &cfg.integrator)?;
        output::write_trajectory(out, &meta, &traj)?;
        let last = traj.last();
        eprintln!(
            "simulate: 1 trajectory, t = {}, x = {:?}, p = {:?}, {:.3} s",
            traj.time(traj.len() - 1),
            last.x,
            last.p,
            started.elapsed().as_secs_f64()
        );
        return Ok(());
    }
    let ens = EnsembleSpec::new(cfg.n_traj, cfg.seed)
        .with_workers(common.workers)
        .with_record_every(cfg.record_every)
        .with_failure(cfg.failure);
    let point = PointSampler(cfg.initial.clone());
    let result = match &cfg.packet {
        Some(packet) => run_ensemble(&cfg.params, &cfg.potential, packet, &cfg.noise, &cfg.integrator, &ens)?,
        None => run_ensemble(&cfg.params, &cfg.potential, &point, &cfg.noise, &cfg.integrator, &ens)?,
    };
    output::write_moments(out, &meta, &result.moments)?;
    let secs = started.elapsed().as_secs_f64();
    let m = &result.moments;
    let k = m.len() - 1;
    for i in 0..m.dims {
        let r = m.row(k, i);
        eprintln!(
            "simulate: t = {} component {}: mean x = {}, mean p = {}, var x = {} ± {}, var p = {}",
            m.times[k],
            i + 1,
            r.mean_x,
            r.mean_p,
            r.var_x,
            r.se_var_x,
            r.var_p
        );
    }
    eprintln!(
        "simulate: {} trajectories, {} failed, {:.3} s, {:.0} trajectories/s",
        m.n_samples,
        result.failures.len(),
        secs,
        cfg.n_traj as f64 / secs.max(1e-9)
    );
    for f in &result.failures {
        eprintln!("simulate: trajectory {} skipped: {}", f.index, f.message);
    }
    Ok(())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

fn cmd_width(common: &Common, gammas: &[f64], tmax: f64, points: usize, mc: bool) -> Result<()> {
    if !(tmax.is_finite() && tmax > 0.0) {
        return Err(Error::validation("tmax", format!("must be > 0, got {tmax}")));
    }
    if points == 0 {
        return Err(Error::validation("points", "must be >= 1"));
    }
    if !mc {
        let grid: Vec<f64> = (1..=points).map(|k| tmax * k as f64 / points as f64).collect();
        let curve = width_curve(gammas, &grid)?;
        let meta = Meta::new().with("tmax", tmax).with("points", points);
        return output::write_width_curve(open_out(common.out.as_deref())?, &meta, &curve);
    }

    let cfg = load(common)?;
    let omega = match cfg.potential_kind {
        PotentialKind::Harmonic { omega } => omega,
        PotentialKind::Free => 1.0,
        _ => return Err(Error::validation("potential.kind", "--mc needs a harmonic or free config")),
    };
    let w = cfg.params.noise_strength();
    if w <= 0.0 {
        return Err(Error::validation("w", "--mc needs a positive noise strength"));
    }
    let mass = cfg.params.mass();
    let dt = cfg.integrator.dt;
    let n_steps = (tmax / omega / dt).round() as usize;
    let every = (n_steps / points).max(1);
    let integrator = IntegratorSpec { n_steps, ..cfg.integrator };
    let potential = Potential::harmonic(mass, omega);
    let unit = w / (2.0 * mass * mass * omega);
    // the curve is for a packet started at a point
    let sampler = PointSampler(cfg.initial.clone());
    let ens = EnsembleSpec::new(cfg.n_traj, cfg.seed)
        .with_workers(common.workers)
        .with_record_every(every)
        .with_failure(cfg.failure);
    let mut omega_t = Vec::new();
    let mut mc_cols = Vec::new();
    let started = Instant::now();
    for &g in gammas {
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::validation("gammas", format!("must be >= 0, got {g}")));
        }
        let params = cfg.params.with_gamma(g / omega)?;
        let res = run_ensemble(&params, &potential, &sampler, &NoiseModel::White, &integrator, &ens)?;
        omega_t = res.moments.times.iter().map(|t| omega * t).collect();
        let var: Vec<f64> = res.moments.var_x(0).iter().map(|v| v / unit).collect();
        let se: Vec<f64> = res.moments.se_var_x(0).iter().map(|v| v / unit).collect();
        mc_cols.push((var, se));
    }
    let meta = base_meta(&cfg).with("omega", omega).with("w", w).with("mass", mass);
    let mut wr = csv::Writer::from_writer({
        let mut out = open_out(common.out.as_deref())?;
        writeln!(out, "{meta}")?;
        out
    });
    let mut header = vec!["omega_t".to_string()];
    header.extend(gammas.iter().map(|g| format!("f_gamma_{g}")));
    header.extend(gammas.iter().map(|g| format!("mc_f_gamma_{g}")));
    header.extend(gammas.iter().map(|g| format!("se_f_gamma_{g}")));
    wr.write_record(&header)?;
    // the width grid is strictly positive, so the start row is dropped
    for (k, &wt) in omega_t.iter().enumerate().filter(|(_, &wt)| wt > 0.0) {
        let mut row = vec![wt.to_string()];
        row.extend(gammas.iter().map(|&g| f_gamma(g, wt).to_string()));
        row.extend(mc_cols.iter().map(|(v, _)| v[k].to_string()));
        row.extend(mc_cols.iter().map(|(_, s)| s[k].to_string()));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    eprintln!(
        "width: {} gammas x {} trajectories in {:.3} s",
        gammas.len(),
        cfg.n_traj,
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn parse_axis(s: &str, name: &str) -> Result<Vec<f64>> {
    let bad = || Error::validation("grid", format!("{name} axis must be lo:hi:n, got `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !(lo.is_finite() && hi.is_finite()) || (n > 1 && hi <= lo) {
        return Err(bad());
    }
    Ok(linspace(lo, hi, n))
}

fn cmd_wigner(common: &Common, grid: Option<&str>, time: f64, samples: usize) -> Result<()> {
    let cfg = load(common)?;
    let packet = cfg
        .packet
        .ok_or_else(|| Error::validation("packet.sigma", "wigner needs a Gaussian packet in the config"))?;
    if !(time.is_finite() && time >= 0.0) {
        return Err(Error::validation("time", format!("must be >= 0, got {time}")));
    }
    let n_steps = (time / cfg.integrator.dt).ceil() as usize;
    let dt = if n_steps == 0 { cfg.integrator.dt } else { time / n_steps as f64 };
    let integrator = IntegratorSpec {
        dt,
        n_steps,
        ..cfg.integrator
    };
    let (xs, ps) = match grid {
        Some(g) => {
            let (gx, gp) = g
                .split_once(',')
                .ok_or_else(|| Error::validation("grid", "expected xmin:xmax:nx,pmin:pmax:np"))?;
            (parse_axis(gx, "x")?, parse_axis(gp, "p")?)
        }
        None => {
            let m = cfg.params.mass();
            let spread_x = packet.position_sd() + packet.momentum_sd() * time / m
                + (cfg.params.noise_strength() * time.powi(3)).sqrt() / m;
            let spread_p = packet.momentum_sd() + (cfg.params.noise_strength() * time).sqrt();
            let cx = packet.xbar + packet.k * time / m;
            (
                linspace(cx - 5.0 * spread_x, cx + 5.0 * spread_x, 41),
                linspace(packet.k - 5.0 * spread_p, packet.k + 5.0 * spread_p, 41),
            )
        }
    };
    let spec = TransportSpec::new(integrator, samples, cfg.seed)
        .with_noise(cfg.noise)
        .with_workers(common.workers);
    let started = Instant::now();
    let result = evaluate_grid(&packet, &xs, &ps, &cfg.params, &cfg.potential, &spec)?;
    let meta = base_meta(&cfg)
        .with("t", result.t)
        .with("n_samples", samples)
        .with("convention", CONVENTION);
    output::write_wigner_grid(open_out(common.out.as_deref())?, &meta, &result)?;
    eprintln!(
        "wigner: {}x{} grid at t = {}, normalization {:.5}, {:.3} s",
        xs.len(),
        ps.len(),
        result.t,
        result.normalization(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn parse_spec(s: &str) -> Result<NoiseModel> {
    let (kind, arg) = match s.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (s, None),
    };
    let mode = match (kind, arg) {
        ("white", None) => return Ok(NoiseModel::White),
        ("flat", None) => SpectrumMode::Flat,
        ("coth", None) => SpectrumMode::FullCoth,
        ("truncated", None) => SpectrumMode::Truncated(1),
        ("truncated", Some(a)) => SpectrumMode::Truncated(
            a.parse()
                .map_err(|_| Error::validation("spec", format!("bad truncation order `{a}`")))?,
        ),
        _ => {
            return Err(Error::validation(
                "spec",
                format!("unknown spectrum `{s}` (white, flat, truncated[:order], coth)"),
            ))
        }
    };
    Ok(NoiseModel::Spectral { mode, cutoff: None })
}

fn cmd_noise(common: &Common, spec: &str, n: usize, bands: usize, spectrum: Option<&Path>) -> Result<()> {
    let mut cfg = load(common)?;
    if n == 0 {
        return Err(Error::validation("n", "must be >= 1"));
    }
    if bands == 0 {
        return Err(Error::validation("bands", "must be >= 1"));
    }
    let config_cutoff = match cfg.noise {
        NoiseModel::Spectral { cutoff, .. } => cutoff,
        NoiseModel::White => None,
    };
    cfg.noise = parse_spec(spec)?;
    if let NoiseModel::Spectral { cutoff, .. } = &mut cfg.noise {
        *cutoff = config_cutoff;
    }
    cfg.integrator.n_steps = n;
    let path = noise_path(&cfg, 1, 0)?;
    let dt = path.dt;
    let meta = base_meta(&cfg).with("n", n).with("stream", 0);
    output::write_noise(open_out(common.out.as_deref())?, &meta, &path)?;

    let table = periodogram(&path.increments, dt);
    let target_table: Vec<(f64, f64)> = match cfg.noise {
        NoiseModel::White => table.iter().map(|&(w, _)| (w, cfg.params.noise_strength())).collect(),
        NoiseModel::Spectral { mode, cutoff } => {
            let mut s = SpectrumSpec::new(cfg.params, mode);
            s.cutoff = cutoff;
            let wc = s.cutoff_for(dt)?;
            table
                .iter()
                .map(|&(w, _)| Ok((w, if w <= wc { s.density(w)? } else { 0.0 })))
                .collect::<Result<_>>()?
        }
    };
    let est = band_average(&table, bands);
    let target: Vec<f64> = band_average(&target_table, bands).iter().map(|b| b.power).collect();
    let spectrum_path = spectrum.map(Path::to_path_buf).or_else(|| {
        common.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".spectrum.csv");
            PathBuf::from(s)
        })
    });
    if let Some(sp) = spectrum_path {
        output::write_spectrum(open_out(Some(&sp))?, &meta, &est, &target)?;
    }
    let worst = est
        .iter()
        .zip(&target)
        .filter(|(_, t)| **t > 0.0)
        .map(|(e, t)| (e.power / t - 1.0).abs())
        .fold(0.0, f64::max);
    eprintln!(
        "noise: {} steps of {}, {} bands, largest relative band deviation {:.4}",
        n,
        cfg.noise.label(),
        est.len(),
        worst
    );
    Ok(())
}

fn cmd_semiclassical(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let dir = common
        .out
        .clone()
        .ok_or_else(|| Error::validation("out", "semiclassical writes a directory of CSVs; pass --out <dir>"))?;
    if cfg.initial.dims() != 1 {
        return Err(Error::validation("initial.x", "semiclassical expansion is one-dimensional"));
    }
    std::fs::create_dir_all(&dir)?;
    let started = Instant::now();
    let grid = TimeGrid::new(0.0, cfg.integrator.dt, cfg.integrator.n_steps)?;
    let (x_a, p) = (cfg.initial.x[0], cfg.initial.p[0]);
    let orbit = solve_classical(&cfg.params, &cfg.potential, x_a, p, &grid)?;
    let green = GreenFunction::from_orbit(&orbit)?;
    let diss = compute_b(&green, &orbit, cfg.coeffs)?;
    let path = noise_path(&cfg, 1, 0)?;
    let silent = path.increments.iter().all(|&v| v == 0.0);
    let q = if silent {
        vec![0.0; orbit.x.len()]
    } else {
        let s = cfg.scale.resolve(&cfg.params)?;
        compute_q(&green, &normalize_noise(&path, s)?, cfg.params.mass())?
    };
    let composite = composite_solution(&orbit, &diss, (!silent).then_some(q.as_slice()), &cfg.params, cfg.scale)?;
    let direct = integrate(&cfg.params, &cfg.potential, &cfg.initial, &path, &cfg.integrator)?;
    let growth = growth_rate(&green);

    let meta = base_meta(&cfg);
    let t = orbit.times();
    output::write_orbit(File::create(dir.join("orbit.csv"))?, &meta, &orbit)?;
    output::write_green(File::create(dir.join("green.csv"))?, &meta, &green)?;
    output::write_series(File::create(dir.join("series.csv"))?, &meta, &t, &diss.a, &diss.b, &q)?;
    let mut wr = csv::Writer::from_writer({
        let mut f = BufWriter::new(File::create(dir.join("comparison.csv"))?);
        writeln!(f, "{meta}")?;
        f
    });
    wr.write_record(["t", "x_cl", "x_composite", "x_direct"])?;
    let mut sq = 0.0;
    for k in 0..t.len() {
        let xd = direct.states[k].x[0];
        sq += (composite[k] - xd).powi(2);
        wr.write_record([t[k], orbit.x[k], composite[k], xd].map(|v| v.to_string()))?;
    }
    wr.flush()?;
    let rms = (sq / t.len() as f64).sqrt();
    let amp = orbit.amplitude();
    eprintln!(
        "semiclassical: growth rate {:.6} ± {:.6} (95% CI [{:.6}, {:.6}], {} points{})",
        growth.rate,
        growth.stderr,
        growth.ci95.0,
        growth.ci95.1,
        growth.n_points,
        if growth.degenerate { ", degenerate" } else { "" }
    );
    eprintln!(
        "semiclassical: RMS composite vs direct {:.3e} = {:.4} of amplitude {:.4}; {} masked B points; {:.3} s",
        rms,
        if amp > 0.0 { rms / amp } else { f64::NAN },
        amp,
        diss.masked_count(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}
