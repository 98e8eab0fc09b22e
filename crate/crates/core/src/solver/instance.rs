//! Plain-text dump format for a single sector instance.
//!
//! ```text
//! # sector instance
//! subcarriers 2
//! users 2
//! subcarrier_bw 3.3333333333333336e7
//! power_budget 1.25
//! min_rate 1e9
//! max_rate 5e10
//! gain 0 9e2 8e1
//! gain 1 1.5e2 7e2
//! ```
//!
//! One `gain` record per subcarrier lists `γ[n][k]` for every user. Blank
//! lines and `#` comments are ignored; floats are written in shortest
//! round-trip form.

use std::fmt::Write as _;

use super::SectorProblem;
use crate::channel::LinkGains;
use crate::{Error, Result};

pub fn dump(problem: &SectorProblem) -> String {
    let mut out = String::from("# sector instance\n");
    let _ = writeln!(out, "subcarriers {}", problem.subcarriers());
    let _ = writeln!(out, "users {}", problem.users());
    let _ = writeln!(out, "subcarrier_bw {:e}", problem.subcarrier_bw);
    let _ = writeln!(out, "power_budget {:e}", problem.power_budget);
    let _ = writeln!(out, "min_rate {:e}", problem.min_rate);
    let _ = writeln!(out, "max_rate {:e}", problem.max_rate);
    for n in 0..problem.subcarriers() {
        let _ = write!(out, "gain {n}");
        for k in 0..problem.users() {
            let _ = write!(out, " {:e}", problem.gains.get(n, k));
        }
        out.push('\n');
    }
    out
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        what: format!("instance line {line}"),
        message: message.into(),
    }
}

pub fn load(text: &str) -> Result<SectorProblem> {
    let mut subcarriers = None;
    let mut users = None;
    let mut scalars: [Option<f64>; 4] = [None; 4];
    let mut rows: Vec<Option<Vec<f64>>> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let key = fields.next().expect("nonempty line");
        let number = |s: Option<&str>| -> Result<f64> {
            s.ok_or_else(|| bad(line_no, "missing value"))?
                .parse::<f64>()
                .map_err(|e| bad(line_no, e.to_string()))
        };
        let count = |s: Option<&str>| -> Result<usize> {
            s.ok_or_else(|| bad(line_no, "missing value"))?
                .parse::<usize>()
                .map_err(|e| bad(line_no, e.to_string()))
        };
        match key {
            "subcarriers" => {
                let n = count(fields.next())?;
                rows.resize(n, None);
                subcarriers = Some(n);
            }
            "users" => users = Some(count(fields.next())?),
            "subcarrier_bw" => scalars[0] = Some(number(fields.next())?),
            "power_budget" => scalars[1] = Some(number(fields.next())?),
            "min_rate" => scalars[2] = Some(number(fields.next())?),
            "max_rate" => scalars[3] = Some(number(fields.next())?),
            "gain" => {
                let nc = subcarriers.ok_or_else(|| bad(line_no, "gain before subcarriers"))?;
                let n = count(fields.next())?;
                if n >= nc {
                    return Err(bad(line_no, format!("subcarrier {n} out of range")));
                }
                let values = fields
                    .map(|f| f.parse::<f64>().map_err(|e| bad(line_no, e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                if rows[n].replace(values).is_some() {
                    return Err(bad(line_no, format!("duplicate gain record for subcarrier {n}")));
                }
            }
            other => return Err(bad(line_no, format!("unknown record `{other}`"))),
        }
    }

    let nc = subcarriers.ok_or_else(|| bad(0, "missing `subcarriers`"))?;
    let ks = users.ok_or_else(|| bad(0, "missing `users`"))?;
    let names = ["subcarrier_bw", "power_budget", "min_rate", "max_rate"];
    let mut values = [0.0; 4];
    for (slot, (value, name)) in values.iter_mut().zip(scalars.iter().zip(names)) {
        *slot = value.ok_or_else(|| bad(0, format!("missing `{name}`")))?;
    }
    let gains = if ks == 0 {
        LinkGains::empty(nc)
    } else {
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(n, r)| {
                let r = r.ok_or_else(|| bad(0, format!("missing gain record for subcarrier {n}")))?;
                if r.len() != ks {
                    return Err(bad(0, format!("subcarrier {n} lists {} gains, expected {ks}", r.len())));
                }
                Ok(r)
            })
            .collect::<Result<Vec<_>>>()?;
        LinkGains::from_rows(&rows)?
    };
    SectorProblem::new(gains, values[1], values[2], values[3], values[0])
}
