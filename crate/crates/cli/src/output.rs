//! CSV, meta and comparison report writers.
//!
//! Floats are written as `{:.16e}`, which round-trips every `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::runner::{fmt, Pair, Run, Verdict};
use crate::CliError;

/// Purity column convention: `Tr ρ² = 1/N + 2‖r‖²/N²`.
const PURITY_SCALE: f64 = 2.0;

pub fn trajectory_csv(run: &Run, n: usize) -> String {
    let t = &run.trajectory;
    let d = t.dim();
    let mut out = String::from("t");
    for k in 1..=d {
        write!(out, ",r{k}").unwrap();
    }
    out.push_str(",purity");
    if t.stderr.is_some() {
        for k in 1..=d {
            write!(out, ",se{k}").unwrap();
        }
    }
    out.push('\n');
    for (i, (time, r)) in t.times.iter().zip(&t.bloch).enumerate() {
        out.push_str(&fmt(*time));
        for x in r.components().iter() {
            write!(out, ",{}", fmt(*x)).unwrap();
        }
        write!(out, ",{}", fmt(r.purity(n, PURITY_SCALE))).unwrap();
        if let Some(se) = &t.stderr {
            for x in se[i].iter() {
                write!(out, ",{}", fmt(*x)).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

/// One `[method]` section per run with its settings and invariant extremes.
pub fn meta_text(name: &str, n: usize, runs: &[Run]) -> String {
    let mut out = String::new();
    writeln!(out, "scenario = {name}").unwrap();
    writeln!(out, "dimension = {n}").unwrap();
    for run in runs {
        let t = &run.trajectory;
        let m = &t.meta;
        writeln!(out, "\n[{}]", run.method).unwrap();
        writeln!(out, "kernel = {}", m.method.as_str()).unwrap();
        let opt = |out: &mut String, key: &str, v: Option<String>| {
            if let Some(v) = v {
                writeln!(out, "{key} = {v}").unwrap();
            }
        };
        opt(&mut out, "dt", m.dt.map(fmt));
        opt(&mut out, "order", m.order.map(|o| o.to_string()));
        opt(&mut out, "tail_bound", m.tail_bound.map(fmt));
        opt(
            &mut out,
            "step_halving_deviation",
            m.step_halving_deviation.map(fmt),
        );
        if m.step_halving_deviation.is_some() {
            writeln!(out, "accuracy_warning = {}", m.accuracy_warning).unwrap();
        }
        opt(
            &mut out,
            "trajectories",
            m.trajectories.map(|x| x.to_string()),
        );
        opt(&mut out, "seed", m.seed.map(|x| x.to_string()));
        let norms = t.bloch.iter().map(|r| r.norm_squared().sqrt());
        let purities: Vec<f64> = t.bloch.iter().map(|r| r.purity(n, PURITY_SCALE)).collect();
        writeln!(out, "max_bloch_norm = {}", fmt(norms.fold(0.0, f64::max))).unwrap();
        writeln!(
            out,
            "min_purity = {}",
            fmt(purities.iter().copied().fold(f64::INFINITY, f64::min))
        )
        .unwrap();
        writeln!(
            out,
            "max_purity = {}",
            fmt(purities.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        )
        .unwrap();
        for (k, v) in &run.notes {
            writeln!(out, "{k} = {v}").unwrap();
        }
    }
    out
}

fn pair_name(p: &Pair) -> String {
    format!("{}_vs_{}", p.a, p.b)
}

pub fn compare_csv(times: &[f64], pairs: &[Pair]) -> String {
    let mut out = String::from("t");
    for p in pairs {
        write!(out, ",{}", pair_name(p)).unwrap();
        if p.sigmas.is_some() {
            write!(out, ",{}_se", pair_name(p)).unwrap();
        }
    }
    out.push('\n');
    for (i, t) in times.iter().enumerate() {
        out.push_str(&fmt(*t));
        for p in pairs {
            write!(out, ",{}", fmt(p.deviation[i])).unwrap();
            if let Some(s) = &p.sigmas {
                write!(out, ",{}", fmt(s[i])).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

/// One line per pair: verdict, name, worst deviation and the threshold.
pub fn compare_report(pairs: &[Pair]) -> String {
    let mut out = String::new();
    for p in pairs {
        let worst = p.deviation.iter().copied().fold(0.0, f64::max);
        write!(
            out,
            "{} {} max_abs={worst:.3e}",
            p.verdict.as_str(),
            pair_name(p)
        )
        .unwrap();
        if let Some(s) = &p.sigmas {
            let z = s.iter().copied().fold(0.0, f64::max);
            write!(out, " max_se_multiple={z:.3}").unwrap();
        }
        match (p.threshold, p.sigmas.is_some()) {
            (Some(t), true) => write!(out, " threshold={t}se").unwrap(),
            (Some(t), false) => write!(out, " threshold={t:.3e}").unwrap(),
            (None, _) => out.push_str(" threshold=none"),
        }
        out.push('\n');
    }
    let failed = pairs.iter().filter(|p| p.verdict == Verdict::Fail).count();
    writeln!(out, "{}", if failed == 0 { "PASS" } else { "FAIL" }).unwrap();
    out
}

pub fn write(dir: &Path, file: String, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(file);
    fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}
