//! File formats.
//!
//! Matrix JSON: `{"rows": r, "cols": c, "entries": [[re, im], ...]}` in
//! row-major order. Plan JSON: `{"n", "m", "factors": [{"size", "base_row",
//! "columns", "block"}], "phases"}` with 1-based `base_row` and `columns`.
//! Floats are written with 17 significant digits so every value round-trips
//! exactly.
//!
//! Sweep CSV: `#`-prefixed metadata lines, then
//! `n,m,sigma,fq_mean,fq_stderr,fu_mean,fu_stderr,samples`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::decompose::{DecompositionPlan, Factor};
use crate::error::{Error, Result};
use crate::linalg::{Complex, ComplexMatrix};
use crate::robustness::SweepResult;

fn raw_f64(x: f64) -> Result<Box<RawValue>> {
    if !x.is_finite() {
        return Err(Error::Format(format!("cannot serialize non-finite value {x}")));
    }
    Ok(RawValue::from_string(format!("{x:.16e}"))?)
}

#[derive(Serialize)]
struct MatrixOut {
    rows: usize,
    cols: usize,
    entries: Vec<[Box<RawValue>; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixIn {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl MatrixOut {
    fn new(a: &ComplexMatrix) -> Result<Self> {
        let entries = a
            .as_slice()
            .iter()
            .map(|z| Ok([raw_f64(z.re)?, raw_f64(z.im)?]))
            .collect::<Result<_>>()?;
        Ok(Self {
            rows: a.rows(),
            cols: a.cols(),
            entries,
        })
    }
}

impl MatrixIn {
    fn into_matrix(self) -> Result<ComplexMatrix> {
        let data = self.entries.iter().map(|&[re, im]| Complex::new(re, im)).collect();
        ComplexMatrix::from_vec(self.rows, self.cols, data)
    }
}

pub fn matrix_to_json(a: &ComplexMatrix) -> Result<String> {
    let mut s = serde_json::to_string(&MatrixOut::new(a)?)?;
    s.push('\n');
    Ok(s)
}

pub fn matrix_from_json(s: &str) -> Result<ComplexMatrix> {
    serde_json::from_str::<MatrixIn>(s)?.into_matrix()
}

#[derive(Serialize)]
struct FactorOut {
    size: usize,
    base_row: usize,
    columns: Vec<usize>,
    block: MatrixOut,
}

#[derive(Serialize)]
struct PlanOut {
    n: usize,
    m: usize,
    factors: Vec<FactorOut>,
    phases: Vec<Box<RawValue>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorIn {
    size: usize,
    base_row: usize,
    columns: Vec<usize>,
    block: MatrixIn,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanIn {
    n: usize,
    m: usize,
    factors: Vec<FactorIn>,
    phases: Vec<f64>,
}

pub fn plan_to_json(plan: &DecompositionPlan) -> Result<String> {
    let factors = plan
        .factors()
        .iter()
        .map(|f| {
            Ok(FactorOut {
                size: f.size(),
                base_row: f.base_row() + 1,
                columns: f.columns().iter().map(|c| c + 1).collect(),
                block: MatrixOut::new(f.block())?,
            })
        })
        .collect::<Result<_>>()?;
    let out = PlanOut {
        n: plan.n(),
        m: plan.m(),
        factors,
        phases: plan.phases().iter().map(|&p| raw_f64(p)).collect::<Result<_>>()?,
    };
    let mut s = serde_json::to_string(&out)?;
    s.push('\n');
    Ok(s)
}

/// Parses and validates a plan; every factor and plan invariant is checked.
pub fn plan_from_json(s: &str) -> Result<DecompositionPlan> {
    let input: PlanIn = serde_json::from_str(s)?;
    let factors = input
        .factors
        .into_iter()
        .enumerate()
        .map(|(k, f)| {
            if f.columns.len() != f.size {
                return Err(Error::InvalidPlan(format!(
                    "factor {k}: size {} but {} columns",
                    f.size,
                    f.columns.len()
                )));
            }
            if f.base_row == 0 || f.columns.contains(&0) {
                return Err(Error::InvalidPlan(format!("factor {k}: indices are 1-based")));
            }
            let block = f.block.into_matrix()?;
            Factor::new(f.base_row - 1, f.columns.iter().map(|c| c - 1).collect(), block)
                .map_err(|e| Error::InvalidPlan(format!("factor {k}: {e}")))
        })
        .collect::<Result<_>>()?;
    DecompositionPlan::new(input.n, input.m, factors, input.phases)
}

/// Decimal with 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}

pub const SWEEP_CSV_HEADER: &str = "n,m,sigma,fq_mean,fq_stderr,fu_mean,fu_stderr,samples";

/// CSV text: each metadata line prefixed with `# `, then header and rows.
/// `samples` counts F_U samples.
pub fn sweep_to_csv(metadata: &[String], rows: &[SweepResult]) -> String {
    let mut s = String::new();
    for line in metadata {
        let _ = writeln!(s, "# {line}");
    }
    s.push_str(SWEEP_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.m,
            format_sig12(r.sigma),
            format_sig12(r.fq.mean),
            format_sig12(r.fq.std_error),
            format_sig12(r.fu.mean),
            format_sig12(r.fu.std_error),
            r.fu.samples
        );
    }
    s
}
