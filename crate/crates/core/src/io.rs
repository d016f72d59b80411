// Copyright 2026 The dicke-pulse Authors
// SPDX-License-Identifier: Apache-2.0

//! CSV and JSON result files.
//!
//! Every float is written as `{:.16e}` (17 significant digits, `.` decimal
//! point), which parses back to the identical `f64`.
//!
//! | file               | header                               |
//! |--------------------|--------------------------------------|
//! | `pulse.csv`        | `t,u_x,u_z` (left endpoint of each interval) |
//! | `history.csv`      | `iter,objective,lambda,accepted`     |
//! | `fidelity_map.csv` | `xi,zeta,fidelity`                   |
//! | moments            | `a,i,j,re,im`                        |
//! | `summary.json`     | see [`RunSummary`]                   |

use std::path::Path;

use serde::Serialize;

use crate::dynamics::ControlPulse;
use crate::ensemble::{FidelityMap, RunSummary};
use crate::error::{Error, Result};
use crate::moments::MomentState;
use crate::optimizer::HistoryEntry;

pub const PULSE_HEADER: [&str; 3] = ["t", "u_x", "u_z"];
pub const HISTORY_HEADER: [&str; 4] = ["iter", "objective", "lambda", "accepted"];
pub const FIDELITY_HEADER: [&str; 3] = ["xi", "zeta", "fidelity"];
pub const MOMENT_HEADER: [&str; 5] = ["a", "i", "j", "re", "im"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_text<const W: usize>(
    header: [&str; W],
    rows: impl Iterator<Item = [String; W]>,
) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn pulse_csv(pulse: &ControlPulse) -> Result<String> {
    csv_text(
        PULSE_HEADER,
        (0..pulse.len()).map(|k| {
            [
                fmt_f64(k as f64 * pulse.dt),
                fmt_f64(pulse.ux[k]),
                fmt_f64(pulse.uz[k]),
            ]
        }),
    )
}

/// Reads a pulse file and checks it against the expected grid: exactly
/// `steps` rows whose times are `k dt` to within `1e-9` relative to `T`.
pub fn parse_pulse_csv(text: &str, dt: f64, steps: usize) -> Result<ControlPulse> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::PulseFormat(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != PULSE_HEADER {
        return Err(Error::PulseFormat(format!(
            "expected header `t,u_x,u_z`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let horizon = dt * steps as f64;
    let mut ux = Vec::with_capacity(steps);
    let mut uz = Vec::with_capacity(steps);
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| Error::PulseFormat(format!("row {row}: {e}")))?;
        let field = |c: usize| -> Result<f64> {
            let raw = rec.get(c).unwrap_or("");
            raw.parse::<f64>().map_err(|_| {
                Error::PulseFormat(format!(
                    "row {row}: bad number {raw:?} in column {}",
                    PULSE_HEADER[c]
                ))
            })
        };
        let t = field(0)?;
        if (t - k as f64 * dt).abs() > 1e-9 * horizon.max(1.0) {
            return Err(Error::PulseFormat(format!(
                "row {row}: time {t} does not match k dt = {}",
                k as f64 * dt
            )));
        }
        ux.push(field(1)?);
        uz.push(field(2)?);
    }
    if ux.len() != steps {
        return Err(Error::PulseFormat(format!(
            "pulse has {} samples, configuration expects T/dt = {steps}",
            ux.len()
        )));
    }
    ControlPulse::new(ux, uz, dt)
}

pub fn history_csv(history: &[HistoryEntry]) -> Result<String> {
    csv_text(
        HISTORY_HEADER,
        history.iter().map(|h| {
            [
                h.iter.to_string(),
                fmt_f64(h.objective),
                fmt_f64(h.lambda),
                (h.accepted as u8).to_string(),
            ]
        }),
    )
}

pub fn fidelity_map_csv(map: &FidelityMap) -> Result<String> {
    csv_text(
        FIDELITY_HEADER,
        map.cells()
            .map(|(p, f)| [fmt_f64(p.xi), fmt_f64(p.zeta), fmt_f64(f)]),
    )
}

pub fn moments_csv(m: &MomentState) -> Result<String> {
    let rows = (0..m.levels()).flat_map(move |a| {
        (0..=m.order_xi()).flat_map(move |i| {
            (0..=m.order_zeta()).map(move |j| {
                let v = m.get(a, i, j);
                [
                    a.to_string(),
                    i.to_string(),
                    j.to_string(),
                    fmt_f64(v.re),
                    fmt_f64(v.im),
                ]
            })
        })
    });
    csv_text(MOMENT_HEADER, rows)
}

pub fn json_text<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn summary_json(summary: &RunSummary) -> Result<String> {
    json_text(summary)
}

pub fn parse_summary_json(text: &str) -> Result<RunSummary> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("writing {}: {e}", path.display()),
        ))
    })
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("reading {}: {e}", path.display()),
        ))
    })
}
