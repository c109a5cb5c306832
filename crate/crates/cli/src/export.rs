//! CSV exports.

use anyhow::{Context, Result};
use osig_core::sim::TrajectoryRecord;
use std::io::Write;

/// Float with 12 significant digits, plain notation when reasonable.
pub fn fmt12(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.11e}")
    }
}

pub fn writer(out: Option<&std::path::Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::Writer::from_writer(sink))
}

pub fn write_rows(out: Option<&std::path::Path>, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = writer(out)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|v| fmt12(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// One CSV row per (rollout, step).
pub fn trajectories(records: &[TrajectoryRecord], out: Option<&std::path::Path>) -> Result<()> {
    let dim = records.first().map(|r| r.states[0].len()).unwrap_or(0);
    let mut header: Vec<String> = vec!["seed".into(), "type".into(), "k".into(), "t".into()];
    header.extend((0..dim).map(|d| format!("x{d}")));
    header.extend(["u", "v", "p0", "running", "payoff"].map(String::from));
    let mut w = writer(out)?;
    w.write_record(&header)?;
    for r in records {
        for k in 0..r.states.len() {
            let mut row = vec![r.seed.to_string(), r.realized_type.to_string(), k.to_string(), fmt12(r.times[k])];
            row.extend(r.states[k].iter().map(|v| fmt12(*v)));
            let opt = |v: Option<String>| v.unwrap_or_default();
            row.push(opt(r.u.get(k).map(|u| u.to_string())));
            row.push(opt(r.v.get(k).map(|v| v.to_string())));
            row.push(opt(r.beliefs.get(k).map(|b| fmt12(b[0]))));
            row.push(opt(r.running.get(k).map(|v| fmt12(*v))));
            row.push(fmt12(r.payoff));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(-0.125), "-0.125");
        assert_eq!(fmt12(2.0), "2");
        assert_eq!(fmt12(123456.789), "123456.789");
        assert_eq!(fmt12(1.5e-9), "1.50000000000e-9");
        assert_eq!(fmt12(0.0), "0");
    }
}
