//! Text forms of weights, step functions and sweep lists.
//!
//! Weights:
//!
//! ```text
//! weight  := const:c=F
//!          | bump:delta=F[,a=F][,b=F]            (a=-1, b=1)
//!          | power:beta=F[,center=F][,scale=F]   (center=0, scale=1)
//!          | gauss:delta=F[,center=F][,width=F]  (center=0, width=1)
//!          | logtail:a=F,b=F,delta=F
//!          | prod:[weight;weight;...]
//! ```
//!
//! Step functions are `x0,x1,...,xn;v1,...,vn`: breakpoints, then one value
//! per piece. Lists are `a,b,c` or `lo:hi:logK` / `lo:hi:linK` for `K`
//! points spaced logarithmically or linearly, both ends included.

use krein::czkit::StepFunction;
use krein::weights::WeightSpec;
use krein::{KreinError, Result};
use std::collections::HashMap;

fn bad(msg: impl Into<String>) -> KreinError {
    KreinError::BadSpec(msg.into())
}

fn num(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| bad(format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(bad(format!("not finite: {s:?}")));
    }
    Ok(v)
}

fn params(body: &str, allowed: &[&str]) -> Result<HashMap<String, f64>> {
    let mut out = HashMap::new();
    if body.trim().is_empty() {
        return Ok(out);
    }
    for item in body.split(',') {
        let (k, v) = item.split_once('=').ok_or_else(|| bad(format!("expected key=value, got {item:?}")))?;
        let k = k.trim();
        if !allowed.contains(&k) {
            return Err(bad(format!("unknown parameter {k:?}")));
        }
        if out.insert(k.to_string(), num(v)?).is_some() {
            return Err(bad(format!("repeated parameter {k:?}")));
        }
    }
    Ok(out)
}

fn need(m: &HashMap<String, f64>, k: &str) -> Result<f64> {
    m.get(k).copied().ok_or_else(|| bad(format!("missing parameter {k:?}")))
}

/// Splits on `;` outside brackets.
fn split_top(s: &str) -> Result<Vec<&str>> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in s.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err(bad("unbalanced brackets"));
                }
            }
            ';' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(bad("unbalanced brackets"));
    }
    parts.push(&s[start..]);
    Ok(parts)
}

pub fn parse_weight(s: &str) -> Result<WeightSpec> {
    let s = s.trim();
    let (kind, body) = s.split_once(':').ok_or_else(|| bad(format!("expected kind:params, got {s:?}")))?;
    match kind.trim() {
        "const" => {
            let m = params(body, &["c"])?;
            Ok(WeightSpec::Const { c: need(&m, "c")? })
        }
        "bump" => {
            let m = params(body, &["delta", "a", "b"])?;
            Ok(WeightSpec::Bump { delta: need(&m, "delta")?, a: *m.get("a").unwrap_or(&-1.0), b: *m.get("b").unwrap_or(&1.0) })
        }
        "power" => {
            let m = params(body, &["beta", "center", "scale"])?;
            Ok(WeightSpec::Power {
                beta: need(&m, "beta")?,
                center: *m.get("center").unwrap_or(&0.0),
                scale: *m.get("scale").unwrap_or(&1.0),
            })
        }
        "gauss" => {
            let m = params(body, &["delta", "center", "width"])?;
            Ok(WeightSpec::Gauss {
                delta: need(&m, "delta")?,
                center: *m.get("center").unwrap_or(&0.0),
                width: *m.get("width").unwrap_or(&1.0),
            })
        }
        "logtail" => {
            let m = params(body, &["a", "b", "delta"])?;
            Ok(WeightSpec::LogTail { a: need(&m, "a")?, b: need(&m, "b")?, delta: need(&m, "delta")? })
        }
        "prod" => {
            let inner = body.trim().strip_prefix('[').and_then(|b| b.strip_suffix(']')).ok_or_else(|| bad("prod needs [..]"))?;
            let factors = split_top(inner)?.into_iter().map(parse_weight).collect::<Result<Vec<_>>>()?;
            if factors.is_empty() {
                return Err(bad("empty product"));
            }
            Ok(WeightSpec::Product(factors))
        }
        other => Err(bad(format!("unknown weight kind {other:?}"))),
    }
}

/// Inverse of [`parse_weight`].
pub fn format_weight(w: &WeightSpec) -> String {
    match w {
        WeightSpec::Const { c } => format!("const:c={c}"),
        WeightSpec::Bump { delta, a, b } => format!("bump:delta={delta},a={a},b={b}"),
        WeightSpec::Power { beta, center, scale } => format!("power:beta={beta},center={center},scale={scale}"),
        WeightSpec::Gauss { delta, center, width } => format!("gauss:delta={delta},center={center},width={width}"),
        WeightSpec::LogTail { a, b, delta } => format!("logtail:a={a},b={b},delta={delta}"),
        WeightSpec::Product(v) => format!("prod:[{}]", v.iter().map(format_weight).collect::<Vec<_>>().join(";")),
    }
}

pub fn parse_step(s: &str) -> Result<StepFunction> {
    let (b, v) = s.split_once(';').ok_or_else(|| bad("step function needs breaks;values"))?;
    let breaks = b.split(',').map(num).collect::<Result<Vec<_>>>()?;
    let values = if v.trim().is_empty() { Vec::new() } else { v.split(',').map(num).collect::<Result<Vec<_>>>()? };
    StepFunction::new(breaks, values)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [single] => single.split(',').map(num).collect(),
        [lo, hi, mode] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let (log, k) = if let Some(k) = mode.strip_prefix("log") {
                (true, k)
            } else if let Some(k) = mode.strip_prefix("lin") {
                (false, k)
            } else {
                return Err(bad(format!("unknown spacing {mode:?}")));
            };
            let k: usize = k.parse().map_err(|_| bad(format!("bad point count in {mode:?}")))?;
            if k < 2 || (log && !(lo > 0.0 && hi > 0.0)) {
                return Err(bad(format!("bad range {s:?}")));
            }
            Ok((0..k)
                .map(|i| {
                    let t = i as f64 / (k - 1) as f64;
                    if log { (lo.ln() + t * (hi.ln() - lo.ln())).exp() } else { lo + t * (hi - lo) }
                })
                .collect())
        }
        _ => Err(bad(format!("bad list {s:?}"))),
    }
}
