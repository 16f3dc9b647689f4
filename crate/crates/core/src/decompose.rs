//! Tetris-style factorization of an `n x n` unitary into embedded `m x m`
//! unitary blocks followed by per-mode phases.
//!
//! Starting from `W = U`, the sweep clears rows bottom-up. For the lowest row
//! `i` that still has entries left of the diagonal, it takes the first `m`
//! non-zero columns at or left of the diagonal, triangularizes the `m x m`
//! window ending at row `i` with an RQ decomposition, and applies the
//! resulting unitary to those columns of `W`. When fewer than `m` columns
//! remain, a smaller remainder block of size `m'` is used. Once `W` is upper
//! triangular it is diagonal, and
//!
//! ```text
//! U = D * Q_N^dagger * ... * Q_1^dagger,   D = diag(exp(i phi))
//! ```
//!
//! All row and column indices are 0-based in memory; the plan file format
//! uses 1-based indices.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{rq_decompose, unitarity, Complex, ComplexMatrix};
use crate::robustness::fidelity;

/// Tolerance on a factor block's unitarity defect.
pub const BLOCK_UNITARITY_TOL: f64 = 1e-10;

/// Tolerance on the input unitarity defect accepted by [`decompose`].
pub const INPUT_UNITARITY_TOL: f64 = 1e-8;

/// One `m' x m'` unitary acting on modes `columns`, produced while clearing
/// row `base_row`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    base_row: usize,
    columns: Vec<usize>,
    block: ComplexMatrix,
}

impl Factor {
    /// Checks the structural invariants: at least two strictly ascending
    /// columns, last column not right of `base_row`, enough rows above
    /// `base_row` for the window, and a unitary block of matching size.
    pub fn new(base_row: usize, columns: Vec<usize>, block: ComplexMatrix) -> Result<Self> {
        let size = columns.len();
        if size < 2 {
            return Err(Error::InvalidPlan(format!(
                "factor needs at least 2 columns, got {size}"
            )));
        }
        if columns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPlan(format!(
                "factor columns must be strictly ascending: {columns:?}"
            )));
        }
        if columns[size - 1] > base_row {
            return Err(Error::InvalidPlan(format!(
                "factor column {} lies right of base row {base_row}",
                columns[size - 1]
            )));
        }
        if base_row + 1 < size {
            return Err(Error::InvalidPlan(format!(
                "base row {base_row} too small for a block of size {size}"
            )));
        }
        if block.rows() != size || block.cols() != size {
            return Err(Error::InvalidPlan(format!(
                "block is {}x{} but factor has {size} columns",
                block.rows(),
                block.cols()
            )));
        }
        let report = unitarity(&block, BLOCK_UNITARITY_TOL)?;
        if !report.is_unitary {
            return Err(Error::InvalidPlan(format!(
                "factor block is not unitary (defect {:.3e})",
                report.defect
            )));
        }
        Ok(Self {
            base_row,
            columns,
            block,
        })
    }

    /// Block dimension `m'`.
    pub fn size(&self) -> usize {
        self.columns.len()
    }

    pub fn base_row(&self) -> usize {
        self.base_row
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn block(&self) -> &ComplexMatrix {
        &self.block
    }
}

/// The identity of size `n` with `f`'s block written at `f.columns x f.columns`.
pub fn embed_factor(f: &Factor, n: usize) -> Result<ComplexMatrix> {
    let last = f.columns[f.size() - 1];
    if last >= n {
        return Err(Error::DimensionMismatch(format!(
            "factor column {last} does not fit in {n} modes"
        )));
    }
    let mut out = ComplexMatrix::identity(n);
    for (k, &jk) in f.columns.iter().enumerate() {
        for (l, &jl) in f.columns.iter().enumerate() {
            out[(jk, jl)] = f.block[(k, l)];
        }
    }
    Ok(out)
}

/// Ordered factors `Q_1 .. Q_N` plus the phases of the final diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionPlan {
    n: usize,
    m: usize,
    factors: Vec<Factor>,
    phases: Vec<f64>,
}

impl DecompositionPlan {
    pub fn new(n: usize, m: usize, factors: Vec<Factor>, phases: Vec<f64>) -> Result<Self> {
        let bound = factor_count_bound(n, m)?;
        if phases.len() != n {
            return Err(Error::InvalidPlan(format!(
                "expected {n} phases, got {}",
                phases.len()
            )));
        }
        if let Some(p) = phases.iter().find(|p| !(p.is_finite() && **p > -PI && **p <= PI)) {
            return Err(Error::InvalidPlan(format!("phase {p} outside (-pi, pi]")));
        }
        if factors.len() > bound {
            return Err(Error::InvalidPlan(format!(
                "{} factors exceed the bound {bound} for n={n}, m={m}",
                factors.len()
            )));
        }
        for f in &factors {
            if f.size() > m {
                return Err(Error::InvalidPlan(format!(
                    "factor of size {} exceeds block size {m}",
                    f.size()
                )));
            }
            if f.base_row >= n {
                return Err(Error::InvalidPlan(format!(
                    "factor base row {} outside {n} modes",
                    f.base_row
                )));
            }
        }
        Ok(Self {
            n,
            m,
            factors,
            phases,
        })
    }

    /// A plan with no factors and all phases zero; reconstructs to the identity.
    pub fn identity(n: usize, m: usize) -> Result<Self> {
        Self::new(n, m, Vec::new(), vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Requested block size.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn diagonal(&self) -> Vec<Complex> {
        self.phases.iter().map(|&p| Complex::from_polar(1.0, p)).collect()
    }
}

/// Bookkeeping gathered during a sweep.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTrace {
    /// Net change in the number of below-diagonal zeros of `W`, per factor.
    pub zeros_created: Vec<isize>,
    /// Below-diagonal zeros above the base row that a later factor turned
    /// non-zero again.
    pub refills: usize,
}

impl SweepTrace {
    pub fn total_zeros_created(&self) -> isize {
        self.zeros_created.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub plan: DecompositionPlan,
    pub trace: SweepTrace,
}

/// Default non-zero threshold: `1e-9 * max|u| * n`.
pub fn default_tolerance(u: &ComplexMatrix) -> f64 {
    1e-9 * u.max_abs() * u.rows() as f64
}

/// Decomposes `u` into blocks of size at most `m`. `tol` is the threshold
/// below which an entry of the working matrix counts as zero; `None` uses
/// [`default_tolerance`].
pub fn decompose(u: &ComplexMatrix, m: usize, tol: Option<f64>) -> Result<DecompositionPlan> {
    decompose_traced(u, m, tol).map(|d| d.plan)
}

pub fn decompose_traced(u: &ComplexMatrix, m: usize, tol: Option<f64>) -> Result<Decomposition> {
    if !u.is_square() {
        return Err(Error::NotSquare {
            rows: u.rows(),
            cols: u.cols(),
        });
    }
    let n = u.rows();
    let bound = factor_count_bound(n, m)?;
    let report = unitarity(u, INPUT_UNITARITY_TOL)?;
    if !report.is_unitary {
        return Err(Error::NotUnitary {
            defect: report.defect,
            tol: INPUT_UNITARITY_TOL,
        });
    }
    let tol = tol.unwrap_or_else(|| default_tolerance(u));
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be finite and >= 0")));
    }

    let budget = 2 * bound;
    let nonzero = |z: Complex| z.norm() > tol;
    let mut w = u.clone();
    let mut factors = Vec::new();
    let mut trace = SweepTrace::default();
    let mut i = n - 1;

    loop {
        while i >= 1 && (0..i).all(|j| !nonzero(w[(i, j)])) {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        if factors.len() >= budget {
            return Err(Error::BudgetExhausted { budget });
        }

        // The diagonal always participates so the row's remaining weight
        // lands on it even when w[i, i] is numerically zero.
        let columns: Vec<usize> = (0..i)
            .filter(|&j| nonzero(w[(i, j)]))
            .chain(std::iter::once(i))
            .take(m)
            .collect();
        let size = columns.len();
        let rows: Vec<usize> = (i + 1 - size..=i).collect();
        let window = w.select(&rows, &columns);
        let (_, q) = rq_decompose(&window)?;

        let before: Vec<Vec<bool>> = columns
            .iter()
            .map(|&c| (c + 1..n).map(|l| nonzero(w[(l, c)])).collect())
            .collect();

        w.right_apply_block(&columns, &q);

        check_block_zeros(&w, i, &columns, tol)?;
        check_rows_below(&w, i, &columns, tol)?;

        let mut delta = 0isize;
        for (&c, was) in columns.iter().zip(&before) {
            for (l, &was_nonzero) in (c + 1..n).zip(was) {
                let is_nonzero = nonzero(w[(l, c)]);
                match (was_nonzero, is_nonzero) {
                    (true, false) => delta += 1,
                    (false, true) => {
                        delta -= 1;
                        trace.refills += 1;
                        log::debug!("refill at ({l}, {c}) while clearing row {i}");
                    }
                    _ => {}
                }
            }
        }
        trace.zeros_created.push(delta);
        factors.push(Factor::new(i, columns, q)?);
    }

    let phases = extract_phases(&w, tol, report.defect)?;
    let plan = DecompositionPlan::new(n, m, factors, phases)?;
    Ok(Decomposition { plan, trace })
}

/// After clearing a window ending at `base_row`, the strictly lower triangle
/// of the window must vanish.
fn check_block_zeros(w: &ComplexMatrix, base_row: usize, columns: &[usize], tol: f64) -> Result<()> {
    let size = columns.len();
    for (k, &c) in columns.iter().enumerate() {
        for l in base_row + 2 + k - size..=base_row {
            let v = w[(l, c)].norm();
            if v > tol {
                return Err(Error::InvariantViolation(format!(
                    "entry ({l}, {c}) = {v:.3e} not cleared by block at row {base_row}"
                )));
            }
        }
    }
    Ok(())
}

/// Rows below `base_row` must stay zero in the touched columns.
fn check_rows_below(w: &ComplexMatrix, base_row: usize, columns: &[usize], tol: f64) -> Result<()> {
    for l in base_row + 1..w.rows() {
        for &c in columns {
            let v = w[(l, c)].norm();
            if v > tol {
                return Err(Error::InvariantViolation(format!(
                    "entry ({l}, {c}) = {v:.3e} below base row {base_row} was disturbed"
                )));
            }
        }
    }
    Ok(())
}

fn extract_phases(w: &ComplexMatrix, tol: f64, input_defect: f64) -> Result<Vec<f64>> {
    let n = w.rows();
    let diag_tol = 10.0 * (tol + input_defect).sqrt() + 1e-12;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                let dev = (w[(i, i)].norm() - 1.0).abs();
                if dev > diag_tol {
                    return Err(Error::InvariantViolation(format!(
                        "diagonal entry {i} has modulus off by {dev:.3e}"
                    )));
                }
            } else if w[(i, j)].norm() > diag_tol {
                return Err(Error::InvariantViolation(format!(
                    "residual entry ({i}, {j}) = {:.3e} after sweep",
                    w[(i, j)].norm()
                )));
            }
        }
    }
    Ok((0..n).map(|i| normalize_phase(w[(i, i)].arg())).collect())
}

/// Maps an angle into `(-pi, pi]`.
pub fn normalize_phase(p: f64) -> f64 {
    let r = p.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// `D * Q_N^dagger * ... * Q_1^dagger`.
pub fn reconstruct(plan: &DecompositionPlan) -> ComplexMatrix {
    let mut out = ComplexMatrix::from_diagonal(&plan.diagonal());
    for f in plan.factors.iter().rev() {
        out.right_apply_block_dagger(&f.columns, &f.block);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationReport {
    pub max_error: f64,
    pub fidelity: f64,
    pub factor_count: usize,
    pub bound: usize,
    pub bound_satisfied: bool,
    /// `max_error <= tol`.
    pub within_tolerance: bool,
}

pub fn verify(plan: &DecompositionPlan, u: &ComplexMatrix, tol: f64) -> Result<VerificationReport> {
    if u.rows() != plan.n || u.cols() != plan.n {
        return Err(Error::DimensionMismatch(format!(
            "plan has {} modes but matrix is {}x{}",
            plan.n,
            u.rows(),
            u.cols()
        )));
    }
    let rebuilt = reconstruct(plan);
    let max_error = rebuilt.max_abs_diff(u)?;
    let bound = factor_count_bound(plan.n, plan.m)?;
    Ok(VerificationReport {
        max_error,
        fidelity: fidelity(u, &rebuilt)?,
        factor_count: plan.factors.len(),
        bound,
        bound_satisfied: plan.factors.len() <= bound,
        within_tolerance: max_error <= tol,
    })
}

/// Upper bound on the number of factors used for an `n x n` unitary and
/// block size `m`: `floor(n(n-1) / (m(m-1))) + n - 1`, or exactly
/// `n(n-1)/2` for `m = 2` where no remainder blocks occur.
pub fn factor_count_bound(n: usize, m: usize) -> Result<usize> {
    if m < 2 || m > n {
        return Err(Error::InvalidArgument(format!(
            "block size m={m} must satisfy 2 <= m <= n={n}"
        )));
    }
    let pairs = n * (n - 1);
    Ok(if m == 2 {
        pairs / 2
    } else {
        pairs / (m * (m - 1)) + n - 1
    })
}

/// Linear cost of an `m`-block mesh against the 2x2 mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostComparison {
    pub n: usize,
    pub m: usize,
    pub count_m: usize,
    pub cost_m: f64,
    pub cost_2: f64,
    pub advantageous: bool,
}

pub fn cost_compare(n: usize, m: usize, c_m: f64, c_2: f64, count_m: usize) -> Result<CostComparison> {
    for (name, c) in [("c_m", c_m), ("c_2", c_2)] {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {c}")));
        }
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    let cost_m = c_m * count_m as f64;
    let cost_2 = c_2 * (n * (n - 1) / 2) as f64;
    Ok(CostComparison {
        n,
        m,
        count_m,
        cost_m,
        cost_2,
        advantageous: cost_m < cost_2,
    })
}
