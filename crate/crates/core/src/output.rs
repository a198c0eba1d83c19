//! Self-describing CSV output.
//!
//! Every file starts with one comment line
//!
//! ```text
//! # meta: seed=42 dt=0.001 n_traj=1000 scheme=split convention=backward-argument
//! ```
//!
//! followed by a header row and data. Floats are written in Rust's
//! shortest round-trip form, so equal results give byte-identical files.

use std::fmt;
use std::io::{BufRead, Read, Write};

use crate::analytic::WidthCurve;
use crate::error::{Error, Result};
use crate::greenfn::{ClassicalOrbit, GreenFunction};
use crate::langevin::EnsembleMoments;
use crate::noise::{BandEstimate, NoiseKind, NoisePath};
use crate::state::Trajectory;
use crate::wigner::WignerGrid;

const META_PREFIX: &str = "# meta:";

/// Ordered `key=value` pairs of the `# meta:` line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Meta {
    pub pairs: Vec<(String, String)>,
}

impl Meta {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl fmt::Display) -> Self {
        let value = value.to_string().replace(char::is_whitespace, "_");
        self.pairs.push((key.to_string(), value));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Parses a `# meta:` line; `None` if the line is something else.
    pub fn parse_line(line: &str) -> Option<Self> {
        let rest = line.trim().strip_prefix(META_PREFIX)?;
        let pairs = rest
            .split_whitespace()
            .filter_map(|kv| kv.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Some(Self { pairs })
    }
}

impl fmt::Display for Meta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(META_PREFIX)?;
        for (k, v) in &self.pairs {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

fn start<W: Write>(mut out: W, meta: &Meta) -> Result<csv::Writer<W>> {
    writeln!(out, "{meta}")?;
    Ok(csv::Writer::from_writer(out))
}

fn row(values: impl IntoIterator<Item = f64>) -> Vec<String> {
    values.into_iter().map(|v| v.to_string()).collect()
}

fn indexed(names: &[&str], dims: usize) -> Vec<String> {
    names
        .iter()
        .flat_map(|n| (1..=dims).map(move |i| format!("{n}_{i}")))
        .collect()
}

/// `t,x_1..,p_1..[,intgradv_1..]`.
pub fn write_trajectory<W: Write>(out: W, meta: &Meta, traj: &Trajectory) -> Result<()> {
    let d = traj.dims();
    let acc = traj.accumulated_grad_v.as_ref();
    let mut w = start(out, meta)?;
    let mut header = vec!["t".to_string()];
    header.extend(indexed(&["x", "p"], d));
    if acc.is_some() {
        header.extend(indexed(&["intgradv"], d));
    }
    w.write_record(&header)?;
    for (k, s) in traj.states.iter().enumerate() {
        let mut r = vec![traj.time(k)];
        r.extend(&s.x);
        r.extend(&s.p);
        if let Some(acc) = acc {
            r.extend(&acc[k]);
        }
        w.write_record(row(r))?;
    }
    w.flush()?;
    Ok(())
}

/// `t,mean_x,mean_p,var_x,var_p,cov_xp,se_var_x`, with `_<i>` suffixes
/// when there is more than one dimension.
pub fn write_moments<W: Write>(out: W, meta: &Meta, m: &EnsembleMoments) -> Result<()> {
    const COLS: [&str; 6] = ["mean_x", "mean_p", "var_x", "var_p", "cov_xp", "se_var_x"];
    let mut w = start(out, meta)?;
    let mut header = vec!["t".to_string()];
    if m.dims == 1 {
        header.extend(COLS.iter().map(|s| s.to_string()));
    } else {
        for i in 1..=m.dims {
            header.extend(COLS.iter().map(|s| format!("{s}_{i}")));
        }
    }
    w.write_record(&header)?;
    for (k, &t) in m.times.iter().enumerate() {
        let mut r = vec![t];
        for i in 0..m.dims {
            let e = m.row(k, i);
            r.extend([e.mean_x, e.mean_p, e.var_x, e.var_p, e.cov_xp, e.se_var_x]);
        }
        w.write_record(row(r))?;
    }
    w.flush()?;
    Ok(())
}

/// `t,deta_1..`: one row per step, `t` at the start of the step.
pub fn write_noise<W: Write>(out: W, meta: &Meta, path: &NoisePath) -> Result<()> {
    let mut w = start(out, meta)?;
    let mut header = vec!["t".to_string()];
    header.extend(indexed(&["deta"], path.dims));
    w.write_record(&header)?;
    for k in 0..path.n_steps() {
        let mut r = vec![path.t0 + k as f64 * path.dt];
        r.extend(path.step(k));
        w.write_record(row(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a path written by [`write_noise`].
///
/// `dt`, `t0`, `seed` and `stream` come from the meta line when present;
/// otherwise `dt` is taken from the first two rows.
pub fn read_noise<R: BufRead>(mut input: R) -> Result<NoisePath> {
    let mut first = String::new();
    input.read_line(&mut first)?;
    let meta = Meta::parse_line(&first).unwrap_or_default();
    let mut rd = csv::ReaderBuilder::new().from_reader(if meta.pairs.is_empty() && !first.starts_with('#') {
        Box::new(std::io::Cursor::new(first.clone()).chain(input)) as Box<dyn Read>
    } else {
        Box::new(input)
    });
    let header = rd.headers()?.clone();
    let dims = header.len().saturating_sub(1);
    if dims == 0 || &header[0] != "t" {
        return Err(Error::Parse {
            line: 2,
            message: "expected header t,deta_1,..".into(),
        });
    }
    let mut times = Vec::new();
    let mut increments = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 3;
        let num = |s: &str| {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("not a number: `{s}`"),
            })
        };
        times.push(num(&rec[0])?);
        for j in 1..=dims {
            increments.push(num(rec.get(j).unwrap_or(""))?);
        }
    }
    let meta_f64 = |k: &str| meta.get(k).and_then(|v| v.parse::<f64>().ok());
    let meta_u64 = |k: &str| meta.get(k).and_then(|v| v.parse::<u64>().ok());
    let dt = match meta_f64("dt") {
        Some(dt) => dt,
        None if times.len() >= 2 => times[1] - times[0],
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "no dt in meta line and fewer than two rows".into(),
            })
        }
    };
    Ok(NoisePath {
        t0: meta_f64("t0").or(times.first().copied()).unwrap_or(0.0),
        dt,
        dims,
        increments,
        kind: NoiseKind::White,
        seed: meta_u64("seed").unwrap_or(0),
        stream: meta_u64("stream").unwrap_or(0),
    })
}

/// `t,xcl,vcl,omega2`.
pub fn write_orbit<W: Write>(out: W, meta: &Meta, orbit: &ClassicalOrbit) -> Result<()> {
    let mut w = start(out, meta)?;
    w.write_record(["t", "xcl", "vcl", "omega2"])?;
    for k in 0..orbit.x.len() {
        w.write_record(row([orbit.time(k), orbit.x[k], orbit.v[k], orbit.omega2[k]]))?;
    }
    w.flush()?;
    Ok(())
}

/// `t,xi1,xi2,wronskian`.
pub fn write_green<W: Write>(out: W, meta: &Meta, green: &GreenFunction) -> Result<()> {
    let wr = green.wronskian();
    let mut w = start(out, meta)?;
    w.write_record(["t", "xi1", "xi2", "wronskian"])?;
    for k in 0..green.xi1.len() {
        w.write_record(row([green.time(k), green.xi1[k], green.xi2[k], wr[k]]))?;
    }
    w.flush()?;
    Ok(())
}

/// `t,A,B_masked,Q`; masked entries of `B` are written as `NaN`.
pub fn write_series<W: Write>(out: W, meta: &Meta, t: &[f64], a: &[f64], b_masked: &[f64], q: &[f64]) -> Result<()> {
    let n = t.len();
    if a.len() != n || b_masked.len() != n || q.len() != n {
        return Err(Error::GridMismatch(format!(
            "series lengths t={n} A={} B={} Q={}",
            a.len(),
            b_masked.len(),
            q.len()
        )));
    }
    let mut w = start(out, meta)?;
    w.write_record(["t", "A", "B_masked", "Q"])?;
    for k in 0..n {
        w.write_record(row([t[k], a[k], b_masked[k], q[k]]))?;
    }
    w.flush()?;
    Ok(())
}

/// `x,p,value,stderr`, x-major.
pub fn write_wigner_grid<W: Write>(out: W, meta: &Meta, grid: &WignerGrid) -> Result<()> {
    let mut w = start(out, meta)?;
    w.write_record(["x", "p", "value", "stderr"])?;
    for e in &grid.estimates {
        w.write_record(row([e.x[0], e.p[0], e.value, e.stderr]))?;
    }
    w.flush()?;
    Ok(())
}

/// `omega_t,f_gamma_<γ>..`.
pub fn write_width_curve<W: Write>(mut out: W, meta: &Meta, curve: &WidthCurve) -> Result<()> {
    writeln!(out, "{meta}")?;
    curve.write_csv(out)
}

/// `omega,power,s_omega,n_bins` for band-averaged periodogram rows.
pub fn write_spectrum<W: Write>(out: W, meta: &Meta, bands: &[BandEstimate], target: &[f64]) -> Result<()> {
    if bands.len() != target.len() {
        return Err(Error::GridMismatch(format!(
            "{} bands but {} target values",
            bands.len(),
            target.len()
        )));
    }
    let mut w = start(out, meta)?;
    w.write_record(["omega", "power", "s_omega", "n_bins"])?;
    for (b, s) in bands.iter().zip(target) {
        let mut r = row([b.omega, b.power, *s]);
        r.push(b.n_bins.to_string());
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::white_path;
    use crate::params::PhysicalParams;
    use crate::state::PhaseState;

    #[test]
    fn meta_line_round_trip() {
        let m = Meta::new().with("seed", 42).with("dt", 0.001).with("scheme", "split");
        let s = m.to_string();
        assert_eq!(s, "# meta: seed=42 dt=0.001 scheme=split");
        assert_eq!(Meta::parse_line(&s).unwrap(), m);
        assert!(Meta::parse_line("t,x").is_none());
    }

    #[test]
    fn noise_round_trip() {
        let params = PhysicalParams::from_noise_strength(1.0, 0.1, 0.7, 1.0, 1.0).unwrap();
        let mut path = white_path(&params, 200, 0.01, 2, 5, 3).unwrap();
        path.t0 = 0.5;
        let meta = Meta::new()
            .with("seed", path.seed)
            .with("stream", path.stream)
            .with("dt", path.dt)
            .with("t0", path.t0);
        let mut buf = Vec::new();
        write_noise(&mut buf, &meta, &path).unwrap();
        let back = read_noise(buf.as_slice()).unwrap();
        assert_eq!(back, path);
    }

    #[test]
    fn noise_without_meta_infers_dt() {
        let text = "t,deta_1\n0,0.5\n0.25,-1\n0.5,2\n";
        let p = read_noise(text.as_bytes()).unwrap();
        assert_eq!((p.dt, p.dims, p.n_steps()), (0.25, 1, 3));
        assert_eq!(p.increments, vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn trajectory_columns() {
        let traj = Trajectory {
            t0: 0.0,
            dt: 0.5,
            states: vec![PhaseState::new(vec![1.0, 2.0], vec![3.0, 4.0]).unwrap(); 2],
            accumulated_grad_v: Some(vec![vec![0.0, 0.0], vec![0.1, 0.2]]),
        };
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &Meta::new().with("seed", 1), &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# meta: seed=1");
        assert_eq!(lines[1], "t,x_1,x_2,p_1,p_2,intgradv_1,intgradv_2");
        assert_eq!(lines[3], "0.5,1,2,3,4,0.1,0.2");
    }

    #[test]
    fn series_length_checked() {
        let r = write_series(Vec::new(), &Meta::new(), &[0.0, 1.0], &[0.0], &[0.0, 0.0], &[0.0, 0.0]);
        assert!(matches!(r, Err(Error::GridMismatch(_))));
    }
}
