//! CSV file formats and the experiment configuration format.
//!
//! All numeric output uses 17 significant digits so files round-trip
//! bit-exactly through `f64`.
//!
//! * Rough-path format: a header line `d,N,T`, then one line per step k
//!   with `t_{k-1}, t_k`, the d level-1 values, the d² level-2 values
//!   (row-major) and the d³ level-3 values (p-major, then q, then r).
//! * Path sample format: header `t,x1,...,xd`, one line per grid point.
//! * Controlled-path export: header `t, Y(...), Ydag(...), Ydagdag(...)`,
//!   flattened row-major, one line per grid point.
//! * ARP format: a `d,e,N,T` header followed by one `[component]` section
//!   per stored component with one line per step.
//! * Experiment config: flat `key = value` text; keys
//!   m,n,d,e,H,T,N,beta,p,epsilons,samples,seed,system,delta_mode.
//!   Unknown keys are rejected.
//! * Results: `epsilon,delta,estimate,stderr,samples_used,exploded`.

use std::fmt::Write as _;
use std::path::Path;

use crate::anisotropic::AnisotropicRP;
use crate::controlled::ControlledPath;
use crate::drivers::SamplePath;
use crate::error::Error;
use crate::roughpath::GridRoughPath;
use crate::slowfast::{DeltaMode, EpsilonRow, ExperimentConfig};
use crate::tensor::Tensor3;
use crate::Result;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.trim()
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("bad float '{}'", tok.trim()) })
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.trim()
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("bad integer '{}'", tok.trim()) })
}

/// Serialises a rough path in the per-step CSV format.
pub fn rough_path_to_csv(rp: &GridRoughPath) -> String {
    let d = rp.dim();
    let times = rp.times();
    let t_final = *times.last().unwrap();
    let mut out = String::new();
    let _ = writeln!(out, "{},{},{}", d, rp.n_steps(), fmt(t_final));
    for k in 0..rp.n_steps() {
        let s = rp.step(k);
        let mut fields = vec![fmt(times[k]), fmt(times[k + 1])];
        fields.extend(s.level1.iter().map(|v| fmt(*v)));
        fields.extend(s.level2.iter().map(|v| fmt(*v)));
        fields.extend(s.level3.iter().map(|v| fmt(*v)));
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

/// Parses the rough-path CSV format.
pub fn rough_path_from_csv(text: &str) -> Result<GridRoughPath> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (ln, header) = lines
        .next()
        .ok_or(Error::Parse { line: 0, message: "empty file".into() })?;
    let head: Vec<&str> = header.split(',').collect();
    if head.len() != 3 {
        return Err(Error::Parse { line: ln + 1, message: "header must be d,N,T".into() });
    }
    let d = parse_usize(head[0], ln + 1)?;
    let n = parse_usize(head[1], ln + 1)?;
    let _t_final = parse_f64(head[2], ln + 1)?;
    let want = 2 + d + d * d + d * d * d;
    let mut times: Vec<f64> = Vec::with_capacity(n + 1);
    let mut steps = Vec::with_capacity(n);
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != want {
            return Err(Error::Parse {
                line: ln + 1,
                message: format!("expected {want} fields, found {}", toks.len()),
            });
        }
        let t0 = parse_f64(toks[0], ln + 1)?;
        let t1 = parse_f64(toks[1], ln + 1)?;
        if times.is_empty() {
            times.push(t0);
        }
        times.push(t1);
        let mut vals = Vec::with_capacity(want - 2);
        for tok in &toks[2..] {
            vals.push(parse_f64(tok, ln + 1)?);
        }
        let level1 = vals[..d].to_vec();
        let level2 = vals[d..d + d * d].to_vec();
        let level3 = vals[d + d * d..].to_vec();
        steps.push(Tensor3::from_levels(d, level1, level2, level3)?);
    }
    if steps.len() != n {
        return Err(Error::Parse { line: 0, message: format!("expected {n} steps, found {}", steps.len()) });
    }
    GridRoughPath::from_steps(times, steps)
}

/// Serialises a sample path with header `t,x1,...,xd`.
pub fn sample_path_to_csv(path: &SamplePath) -> String {
    let mut out = String::new();
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=path.dim).map(|i| format!("x{i}")))
        .collect();
    let _ = writeln!(out, "{}", header.join(","));
    for (t, v) in path.times.iter().zip(&path.values) {
        let mut fields = vec![fmt(*t)];
        fields.extend(v.iter().map(|x| fmt(*x)));
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

/// Parses a sample-path CSV (header `t,x1,...,xd`).
pub fn sample_path_from_csv(text: &str) -> Result<SamplePath> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (ln, header) = lines
        .next()
        .ok_or(Error::Parse { line: 0, message: "empty file".into() })?;
    let cols = header.split(',').count();
    if cols < 2 || !header.trim_start().starts_with('t') {
        return Err(Error::Parse { line: ln + 1, message: "header must be t,x1,...,xd".into() });
    }
    let dim = cols - 1;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != cols {
            return Err(Error::Parse {
                line: ln + 1,
                message: format!("expected {cols} fields, found {}", toks.len()),
            });
        }
        times.push(parse_f64(toks[0], ln + 1)?);
        let mut row = Vec::with_capacity(dim);
        for tok in &toks[1..] {
            row.push(parse_f64(tok, ln + 1)?);
        }
        values.push(row);
    }
    Ok(SamplePath { dim, times, values })
}

/// Controlled-path export: `t, Y(...), Ydag(...), Ydagdag(...)` flattened.
pub fn controlled_path_to_csv(cp: &ControlledPath) -> String {
    let d = cp.reference().dim();
    let w = cp.target_dim();
    let mut out = String::new();
    let mut header = vec!["t".to_string()];
    header.extend((0..w).map(|a| format!("Y{a}")));
    header.extend((0..w).flat_map(|a| (0..d).map(move |p| format!("Ydag{a}_{p}"))));
    header.extend((0..w).flat_map(|a| (0..d * d).map(move |pq| format!("Ydagdag{a}_{pq}"))));
    let _ = writeln!(out, "{}", header.join(","));
    let times = cp.times();
    for k in 0..=cp.n_steps() {
        let mut fields = vec![fmt(times[k])];
        fields.extend(cp.y(k).iter().map(|v| fmt(*v)));
        fields.extend(cp.ydag(k).iter().map(|v| fmt(*v)));
        fields.extend(cp.ydagdag(k).iter().map(|v| fmt(*v)));
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

/// ARP export: `d,e,N,T` header, then one `[component]` section per
/// component (`b1`, `b2`, `b3`, `w1`, `w2`, `ibw`, `iwb`), one line of
/// comma-separated values per step.
pub fn arp_to_csv(arp: &AnisotropicRP) -> String {
    let times = arp.times();
    let n = arp.n_steps();
    let mut out = String::new();
    let _ = writeln!(out, "{},{},{},{}", arp.d, arp.e, n, fmt(*times.last().unwrap()));
    let section = |name: &str, rows: Vec<Vec<f64>>, out: &mut String| {
        let _ = writeln!(out, "[{name}]");
        for row in rows {
            let fields: Vec<String> = row.iter().map(|v| fmt(*v)).collect();
            let _ = writeln!(out, "{}", fields.join(","));
        }
    };
    let steps: Vec<_> = (0..n).map(|k| arp.increment(k, k + 1).unwrap()).collect();
    section("b1", steps.iter().map(|s| s.b.level1.clone()).collect(), &mut out);
    section("b2", steps.iter().map(|s| s.b.level2.clone()).collect(), &mut out);
    section("b3", steps.iter().map(|s| s.b.level3.clone()).collect(), &mut out);
    section("w1", steps.iter().map(|s| s.w1.clone()).collect(), &mut out);
    section("w2", steps.iter().map(|s| s.w2.clone()).collect(), &mut out);
    section("ibw", steps.iter().map(|s| s.ibw.clone()).collect(), &mut out);
    section("iwb", steps.iter().map(|s| s.iwb.clone()).collect(), &mut out);
    out
}

/// Results CSV with header `epsilon,delta,estimate,stderr,samples_used,exploded`.
pub fn results_to_csv(rows: &[EpsilonRow]) -> String {
    let mut out = String::from("epsilon,delta,estimate,stderr,samples_used,exploded\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt(r.epsilon),
            fmt(r.delta),
            fmt(r.estimate),
            fmt(r.stderr),
            r.samples_used,
            r.exploded
        );
    }
    out
}

/// Parses the flat `key = value` experiment configuration. Unknown keys are
/// rejected; all keys except `delta_mode` (default: the proof schedule) are
/// required.
pub fn experiment_config_from_str(text: &str) -> Result<ExperimentConfig> {
    let mut m = None;
    let mut n = None;
    let mut d = None;
    let mut e = None;
    let mut hurst = None;
    let mut t_final = None;
    let mut n_base = None;
    let mut beta = None;
    let mut p = None;
    let mut epsilons: Option<Vec<f64>> = None;
    let mut samples = None;
    let mut seed = None;
    let mut system = None;
    let mut delta_mode = DeltaMode::Proof;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ln = idx + 1;
        let (key, value) = line
            .split_once('=')
            .ok_or(Error::Parse { line: ln, message: "expected key = value".into() })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "m" => m = Some(parse_usize(value, ln)?),
            "n" => n = Some(parse_usize(value, ln)?),
            "d" => d = Some(parse_usize(value, ln)?),
            "e" => e = Some(parse_usize(value, ln)?),
            "H" => hurst = Some(parse_f64(value, ln)?),
            "T" => t_final = Some(parse_f64(value, ln)?),
            "N" => n_base = Some(parse_usize(value, ln)?),
            "beta" => beta = Some(parse_f64(value, ln)?),
            "p" => p = Some(parse_f64(value, ln)?),
            "epsilons" => {
                let mut vals = Vec::new();
                for tok in value.split(',') {
                    vals.push(parse_f64(tok, ln)?);
                }
                epsilons = Some(vals);
            }
            "samples" => samples = Some(parse_usize(value, ln)?),
            "seed" => {
                seed = Some(value.parse::<u64>().map_err(|_| Error::Parse {
                    line: ln,
                    message: format!("bad seed '{value}'"),
                })?)
            }
            "system" => system = Some(value.to_string()),
            "delta_mode" => {
                delta_mode = if value == "proof" {
                    DeltaMode::Proof
                } else {
                    DeltaMode::Fixed(parse_f64(value, ln)?)
                };
            }
            other => {
                return Err(Error::Parse { line: ln, message: format!("unknown key '{other}'") });
            }
        }
    }
    let missing = |name: &str| Error::Parse { line: 0, message: format!("missing key '{name}'") };
    Ok(ExperimentConfig {
        m: m.ok_or_else(|| missing("m"))?,
        n: n.ok_or_else(|| missing("n"))?,
        d: d.ok_or_else(|| missing("d"))?,
        e: e.ok_or_else(|| missing("e"))?,
        hurst: hurst.ok_or_else(|| missing("H"))?,
        t_final: t_final.ok_or_else(|| missing("T"))?,
        n_base: n_base.ok_or_else(|| missing("N"))?,
        beta: beta.ok_or_else(|| missing("beta"))?,
        p: p.ok_or_else(|| missing("p"))?,
        epsilons: epsilons.ok_or_else(|| missing("epsilons"))?,
        samples: samples.ok_or_else(|| missing("samples"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
        system: system.ok_or_else(|| missing("system"))?,
        delta_mode,
    })
}

pub fn read_to_string(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(std::fs::write(path, contents)?)
}
