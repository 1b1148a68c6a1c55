//! Sample and chain CSV files.
//!
//! Sample files have the header `time,event` with `event` 1 for a failure
//! and 0 for a censored observation.

use std::io::{BufRead, Write};

use crate::bayes::PosteriorDraws;
use crate::error::{Error, Result};
use crate::format::fmt_g6;
use crate::model::{CensoredSample, Event, Observation};

pub fn write_sample_csv<W: Write>(sample: &CensoredSample, mut out: W) -> Result<()> {
    writeln!(out, "time,event")?;
    for o in sample.observations() {
        let flag = if o.is_failure() { 1 } else { 0 };
        writeln!(out, "{},{flag}", fmt_g6(o.time))?;
    }
    Ok(())
}

/// Reads a sample file. Rows may be in any order; they are sorted by time.
/// Errors carry the 1-based line number.
pub fn read_sample_csv<R: BufRead>(input: R) -> Result<CensoredSample> {
    let mut lines = input.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((i, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break (i + 1, line);
                }
            }
            None => return Err(Error::Parse { line: 1, message: "empty file".into() }),
        }
    };
    let cols: Vec<String> = header.1.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
    if cols != ["time", "event"] {
        return Err(Error::Parse {
            line: header.0,
            message: format!("expected header 'time,event', found '{}'", header.1.trim()),
        });
    }
    let mut observations = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: lineno, message };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(parse_err(format!("expected 2 fields, found {}", fields.len())));
        }
        let time: f64 = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("invalid time '{}'", fields[0])))?;
        if !(time.is_finite() && time >= 0.0) {
            return Err(parse_err(format!("time must be finite and >= 0, got {time}")));
        }
        let event = match fields[1] {
            "1" => Event::Failure,
            "0" => Event::Censored,
            other => return Err(parse_err(format!("event must be 0 or 1, got '{other}'"))),
        };
        observations.push(Observation { time, event });
    }
    CensoredSample::from_unsorted(observations)
}

/// Chain export: `iteration,eta0,eta1,beta,accepted`.
pub fn write_chain_csv<W: Write>(draws: &PosteriorDraws, mut out: W) -> Result<()> {
    writeln!(out, "iteration,eta0,eta1,beta,accepted")?;
    for d in &draws.draws {
        writeln!(
            out,
            "{},{},{},{},{}",
            d.iteration,
            fmt_g6(d.params.eta0()),
            fmt_g6(d.params.eta1()),
            fmt_g6(d.params.beta()),
            u8::from(d.accepted)
        )?;
    }
    Ok(())
}
