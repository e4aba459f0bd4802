//! CSV and JSON manifest output.
//!
//! Floats are written with 17 significant digits so that identical runs give
//! byte-identical files and values round-trip exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::correlator::CorrelatorCurve;
use crate::dynamics::{BlochTrajectory, EnsembleTrajectory, SzCurve};
use crate::error::Result;
use crate::floquet::GapPoint;
use crate::noise::NoiseRealization;
use crate::spectrum::LineshapeCurve;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a header row and data rows, comma separated.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[String]>,
{
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.as_ref().join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per switch event: `t_switch, channel`.
pub fn write_noise_csv(path: &Path, real: &NoiseRealization) -> Result<()> {
    let rows = real.channels().iter().enumerate().flat_map(|(c, ch)| {
        ch.switch_times()
            .iter()
            .map(move |&t| vec![fmt_f64(t), c.to_string()])
    });
    write_csv(path, &["t_switch", "channel"], rows)
}

pub fn write_gap_scan_csv(path: &Path, scan: &[GapPoint]) -> Result<()> {
    let rows = scan.iter().map(|p| {
        vec![
            fmt_f64(p.omega),
            fmt_f64(p.gap),
            p.order.to_string(),
            p.converged.to_string(),
        ]
    });
    write_csv(path, &["omega", "gap", "N", "converged"], rows)
}

pub fn write_bloch_csv(path: &Path, traj: &BlochTrajectory) -> Result<()> {
    let rows = traj
        .t
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| vec![fmt_f64(*t), fmt_f64(s.x), fmt_f64(s.y), fmt_f64(s.z)]);
    write_csv(path, &["t", "Sx", "Sy", "Sz"], rows)
}

pub fn write_ensemble_csv(path: &Path, traj: &EnsembleTrajectory) -> Result<()> {
    let rows = (0..traj.t.len()).map(|i| {
        vec![
            fmt_f64(traj.t[i]),
            fmt_f64(traj.mean_sz[i]),
            fmt_f64(traj.stderr[i]),
            traj.n.to_string(),
        ]
    });
    write_csv(path, &["t", "Sz_mean", "Sz_stderr", "n"], rows)
}

pub fn write_sz_csv(path: &Path, curve: &SzCurve) -> Result<()> {
    let rows = curve
        .t
        .iter()
        .zip(&curve.sz)
        .map(|(t, s)| vec![fmt_f64(*t), fmt_f64(*s)]);
    write_csv(path, &["t", "Sz"], rows)
}

pub fn write_correlator_csv(path: &Path, curve: &CorrelatorCurve) -> Result<()> {
    let rows = (0..curve.t.len()).map(|i| {
        vec![
            fmt_f64(curve.t[i]),
            fmt_f64(curve.k[i]),
            curve
                .stderr
                .as_ref()
                .map(|e| fmt_f64(e[i]))
                .unwrap_or_default(),
            curve.branch.to_string(),
        ]
    });
    write_csv(path, &["T", "K", "K_stderr", "branch"], rows)
}

/// Several curves stacked in one file: `delta, I_norm, method, beta, valid`.
pub fn write_lineshape_csv(path: &Path, curves: &[LineshapeCurve]) -> Result<()> {
    let rows = curves.iter().flat_map(|c| {
        (0..c.delta.len()).map(move |i| {
            vec![
                fmt_f64(c.delta[i]),
                fmt_f64(c.values[i]),
                c.method.to_string(),
                fmt_f64(c.beta),
                c.valid[i].is_ok().to_string(),
            ]
        })
    });
    write_csv(path, &["delta", "I_norm", "method", "beta", "valid"], rows)
}

/// Record of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub beta_convention: Option<String>,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::BlochVector;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn bloch_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let traj = BlochTrajectory {
            t: vec![0.0, 0.5],
            states: vec![BlochVector::up(), BlochVector { x: 0.6, y: 0.0, z: 0.8 }],
        };
        write_bloch_csv(&path, &traj).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,Sx,Sy,Sz");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2].split(',').nth(3).unwrap().parse::<f64>().unwrap(), 0.8);
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = RunManifest {
            tool_version: "0.1.0".into(),
            subcommand: "spectrum".into(),
            parameters: serde_json::json!({"beta": 0.5}),
            seed: Some(3),
            beta_convention: Some("appendix".into()),
            outputs: vec!["a.csv".into()],
            wall_clock_seconds: 0.25,
        };
        m.write(&path).unwrap();
        assert_eq!(RunManifest::read(&path).unwrap(), m);
    }
}
