//! CSV tables and the `RESULT` summary line.
//!
//! Reals are written in shortest round-trip exponent form, so identical
//! numerics give byte-identical files.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use sldg_core::lab::{ErrorReport, MomentCheck, TailRow};
use sldg_core::ldg::Trajectory;
use sldg_core::DgField;

use crate::CliError;

pub fn real(x: f64) -> String {
    format!("{x:e}")
}

fn table<I, R>(file: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let wrap = |source| CliError::Csv {
        path: file.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(file).map_err(wrap)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(row).map_err(wrap)?;
    }
    w.flush().map_err(|e| CliError::io(file, e))
}

/// Output directory with a record of every file written into it.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        let p = self.root.join(name);
        self.written.push(p.clone());
        p
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let p = self.path(name);
        fs::write(&p, body).map_err(|e| CliError::io(&p, e))
    }

    /// `{n, t, charge, linres}`, plus `{rel_drift, step_drift}` when
    /// `drift` is set.
    pub fn trajectory(&mut self, name: &str, traj: &Trajectory, drift: bool) -> Result<(), CliError> {
        let p = self.path(name);
        let mut header = vec!["n", "t", "charge", "linres"];
        if drift {
            header.extend(["rel_drift", "step_drift"]);
        }
        let c0 = traj.charges[0];
        let rel = |x: f64| if c0 == 0.0 { 0.0 } else { x / c0 };
        let rows = traj.charges.iter().enumerate().map(|(n, &q)| {
            let mut row = vec![
                n.to_string(),
                real(n as f64 * traj.dt),
                real(q),
                real(traj.residuals[n]),
            ];
            if drift {
                let step = if n == 0 { 0.0 } else { (q - traj.charges[n - 1]).abs() };
                row.push(real(rel((q - c0).abs())));
                row.push(real(rel(step)));
            }
            row
        });
        table(&p, &header, rows)
    }

    /// `{cell, mode, re, im}` of the Legendre coefficients.
    pub fn field(&mut self, name: &str, u: &DgField) -> Result<(), CliError> {
        let p = self.path(name);
        let b = u.modes();
        let rows = u
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| vec![(i / b).to_string(), (i % b).to_string(), real(c.re), real(c.im)]);
        table(&p, &["cell", "mode", "re", "im"], rows)
    }

    /// `{experiment, resolution, h, dt, M, ms_error, stderr, slope,
    /// slope_lo, slope_hi}`; the fit columns repeat on every row and are
    /// empty when the study had too few resolutions.
    pub fn report(&mut self, name: &str, r: &ErrorReport) -> Result<(), CliError> {
        let p = self.path(name);
        let fit = |f: fn(&sldg_core::lab::OrderFit) -> f64| r.fit.as_ref().map(f).map(real).unwrap_or_default();
        let rows = r.rows.iter().map(|row| {
            vec![
                r.experiment.clone(),
                row.resolution.to_string(),
                real(row.h),
                real(row.dt),
                row.error.samples.to_string(),
                real(row.error.rms),
                real(row.error.stderr),
                fit(|f| f.slope),
                fit(|f| f.slope_lo()),
                fit(|f| f.slope_hi()),
            ]
        });
        table(
            &p,
            &["experiment", "resolution", "h", "dt", "M", "ms_error", "stderr", "slope", "slope_lo", "slope_hi"],
            rows,
        )
    }

    /// `{resolution, h, dt, bound_ratio}` for rows that carry a ratio.
    pub fn bounds(&mut self, name: &str, r: &ErrorReport) -> Result<(), CliError> {
        let p = self.path(name);
        let rows = r.rows.iter().filter_map(|row| {
            row.bound_ratio
                .map(|b| vec![row.resolution.to_string(), real(row.h), real(row.dt), real(b)])
        });
        table(&p, &["resolution", "h", "dt", "bound_ratio"], rows)
    }

    /// `{dt, kappa, tail_moment, dt_sq, h1_moment}`.
    pub fn tail_table(&mut self, name: &str, rows: &[TailRow]) -> Result<(), CliError> {
        let p = self.path(name);
        let rows = rows
            .iter()
            .map(|r| vec![real(r.dt), real(r.kappa), real(r.tail_moment), real(r.dt * r.dt), real(r.h1_moment)]);
        table(&p, &["dt", "kappa", "tail_moment", "dt_sq", "h1_moment"], rows)
    }

    /// `{n, t, mean_h1_sq}`.
    pub fn moments(&mut self, name: &str, m: &MomentCheck, dt: f64) -> Result<(), CliError> {
        let p = self.path(name);
        let rows = m
            .mean_h1_sq
            .iter()
            .enumerate()
            .map(|(n, v)| vec![n.to_string(), real(n as f64 * dt), real(*v)]);
        table(&p, &["n", "t", "mean_h1_sq"], rows)
    }
}

/// Ordered `key=value` pairs rendered as the final `RESULT` line.
#[derive(Debug, Default, Clone)]
pub struct Summary {
    pairs: Vec<(String, String)>,
}

impl Summary {
    pub fn push(&mut self, key: &str, value: impl Display) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    pub fn real(&mut self, key: &str, value: f64) {
        self.push(key, real(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn line(&self) -> String {
        let mut s = String::from("RESULT");
        for (k, v) in &self.pairs {
            s.push(' ');
            s.push_str(k);
            s.push('=');
            s.push_str(v);
        }
        s
    }

    /// Parses a `RESULT` line back into pairs.
    pub fn parse(line: &str) -> Option<Self> {
        let rest = line.strip_prefix("RESULT")?;
        let pairs = rest
            .split_whitespace()
            .map(|kv| kv.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
            .collect::<Option<Vec<_>>>()?;
        Some(Self { pairs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1e-300, 3.0, -2.5e17, f64::MIN_POSITIVE] {
            assert_eq!(real(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn summary_round_trip() {
        let mut s = Summary::default();
        s.push("cmd", "charge");
        s.real("drift", 1.5e-13);
        let parsed = Summary::parse(&s.line()).unwrap();
        assert_eq!(parsed.get("drift"), Some("1.5e-13"));
        assert_eq!(parsed.line(), s.line());
    }
}
