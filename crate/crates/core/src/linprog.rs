//! Dense revised simplex for equality-form linear programs
//!
//! ```text
//! minimize cᵀx  subject to  A x = b,  x >= 0
//! ```
//!
//! Two phases with artificial variables, an explicit basis inverse updated by
//! elementary row operations and refactored periodically. Pricing is
//! Dantzig's rule over a rotating partial window; after a run of degenerate
//! pivots the solver switches to Bland's rule until it makes progress again,
//! which rules out cycling. All choices are deterministic functions of the
//! input.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Matrix};

#[derive(Debug, Clone)]
pub struct LpProblem {
    /// `m x v` constraint matrix.
    pub constraint_matrix: Matrix,
    pub rhs: Vec<f64>,
    pub objective: Vec<f64>,
}

impl LpProblem {
    pub fn new(constraint_matrix: Matrix, rhs: Vec<f64>, objective: Vec<f64>) -> Result<Self> {
        let p = LpProblem {
            constraint_matrix,
            rhs,
            objective,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        let (m, v) = (self.constraint_matrix.rows(), self.constraint_matrix.cols());
        if self.rhs.len() != m || self.objective.len() != v {
            return Err(Error::usage(format!(
                "LP dimensions inconsistent: A is {m}x{v}, rhs has {}, objective has {}",
                self.rhs.len(),
                self.objective.len()
            )));
        }
        if !self.constraint_matrix.is_finite()
            || self.rhs.iter().chain(&self.objective).any(|x| !x.is_finite())
        {
            return Err(Error::numeric("LP data contains non-finite values"));
        }
        Ok(())
    }

    /// Debug dump: the matrix text format followed by `rhs` and `objective`
    /// records on one line each.
    pub fn to_text(&self) -> String {
        use crate::linalg::text::{format_f64, write_matrix};
        let join = |v: &[f64]| v.iter().map(|&x| format_f64(x)).collect::<Vec<_>>().join(" ");
        format!(
            "{}rhs {}\nobjective {}\n",
            write_matrix(&self.constraint_matrix),
            join(&self.rhs),
            join(&self.objective)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub point: Option<Vec<f64>>,
    pub objective_value: Option<f64>,
    /// Optimal dual prices `y` with `Aᵀy <= c` (within tolerance).
    pub dual_point: Option<Vec<f64>>,
    /// Structural variables of the final basis, by row position. Rows whose
    /// basic variable is an artificial left on a redundant row hold `None`.
    pub basis: Option<Vec<Option<usize>>>,
    pub iterations: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, iterations: usize) -> Self {
        LpSolution {
            status,
            point: None,
            objective_value: None,
            dual_point: None,
            basis: None,
            iterations,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    /// Defaults to `50 * (m + v)`.
    pub max_iterations: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            feas_tol: 1e-9,
            gap_tol: 1e-8,
            max_iterations: None,
        }
    }
}

/// Borrowed column-major view of a constraint matrix.
#[derive(Clone, Copy)]
pub(crate) struct Columns<'a> {
    pub m: usize,
    pub v: usize,
    pub data: &'a [f64],
}

impl<'a> Columns<'a> {
    #[inline]
    fn col(&self, j: usize) -> &'a [f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }
}

pub fn solve_lp(p: &LpProblem, opts: &LpOptions) -> Result<LpSolution> {
    p.validate()?;
    let data = p.constraint_matrix.to_col_major();
    let cols = Columns {
        m: p.constraint_matrix.rows(),
        v: p.constraint_matrix.cols(),
        data: &data,
    };
    solve_columns(cols, &p.rhs, &p.objective, opts)
}

const REFACTOR_EVERY: usize = 50;
const DEGENERATE_RUN_FOR_BLAND: usize = 40;
const REDUCED_COST_TOL: f64 = 1e-10;

pub(crate) fn solve_columns(a: Columns<'_>, b: &[f64], c: &[f64], opts: &LpOptions) -> Result<LpSolution> {
    let m = a.m;
    let v = a.v;
    debug_assert_eq!(a.data.len(), m * v);
    let max_iter = opts.max_iterations.unwrap_or(50 * (m + v));
    if m == 0 {
        // no constraints: optimal at 0 unless some cost is negative
        if c.iter().any(|&cj| cj < 0.0) {
            return Ok(LpSolution::without_point(LpStatus::Unbounded, 0));
        }
        return Ok(LpSolution {
            status: LpStatus::Optimal,
            point: Some(vec![0.0; v]),
            objective_value: Some(0.0),
            dual_point: Some(vec![]),
            basis: Some(vec![]),
            iterations: 0,
        });
    }
    let mut s = Simplex::new(a, b, c, max_iter);
    s.run(opts)
}

struct Simplex<'a> {
    a: Columns<'a>,
    m: usize,
    v: usize,
    sign: Vec<f64>,
    /// sign-adjusted right-hand side, non-negative
    b: Vec<f64>,
    b_orig: &'a [f64],
    c: &'a [f64],
    /// variable index per row; indices >= v are artificials
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
    max_iter: usize,
    since_refactor: usize,
    price_start: usize,
    /// Columns whose entering step had no usable pivot since the last pivot.
    rejected: Vec<bool>,
    any_rejected: bool,
    degenerate_run: usize,
    bland: bool,
}

enum Phase {
    One,
    Two,
}

enum StepOutcome {
    Optimal,
    Unbounded,
    Pivoted,
    /// Entering column skipped: its negative reduced cost is rounding noise.
    Skipped,
}

impl<'a> Simplex<'a> {
    fn new(a: Columns<'a>, b: &'a [f64], c: &'a [f64], max_iter: usize) -> Self {
        let m = a.m;
        let v = a.v;
        let sign: Vec<f64> = b.iter().map(|&x| if x < 0.0 { -1.0 } else { 1.0 }).collect();
        let bs: Vec<f64> = b.iter().zip(&sign).map(|(x, s)| x * s).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut is_basic = vec![false; v + m];
        for flag in is_basic.iter_mut().skip(v) {
            *flag = true;
        }
        Simplex {
            a,
            m,
            v,
            sign,
            xb: bs.clone(),
            b: bs,
            b_orig: b,
            c,
            basis: (v..v + m).collect(),
            is_basic,
            binv,
            iterations: 0,
            max_iter,
            since_refactor: 0,
            price_start: 0,
            rejected: vec![false; v],
            any_rejected: false,
            degenerate_run: 0,
            bland: false,
        }
    }

    fn cost(&self, phase: &Phase, j: usize) -> f64 {
        match phase {
            Phase::One => {
                if j >= self.v {
                    1.0
                } else {
                    0.0
                }
            }
            Phase::Two => {
                if j >= self.v {
                    0.0
                } else {
                    self.c[j]
                }
            }
        }
    }

    /// Column `j` of the sign-adjusted system, written into `out`.
    fn column(&self, j: usize, out: &mut [f64]) {
        if j >= self.v {
            out.iter_mut().for_each(|x| *x = 0.0);
            out[j - self.v] = 1.0;
        } else {
            for ((o, &aij), &s) in out.iter_mut().zip(self.a.col(j)).zip(&self.sign) {
                *o = aij * s;
            }
        }
    }

    /// `alpha = B⁻¹ a_j`
    fn ftran(&self, j: usize, alpha: &mut [f64]) {
        let m = self.m;
        if j >= self.v {
            let k = j - self.v;
            for r in 0..m {
                alpha[r] = self.binv[r * m + k];
            }
            return;
        }
        let mut col = vec![0.0; m];
        self.column(j, &mut col);
        for r in 0..m {
            alpha[r] = dot(&self.binv[r * m..(r + 1) * m], &col);
        }
    }

    /// Dual prices in the original row signs: `y_orig = sign ⊙ (c_Bᵀ B⁻¹)`.
    fn duals(&self, phase: &Phase) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for r in 0..m {
            let cb = self.cost(phase, self.basis[r]);
            if cb != 0.0 {
                for (yi, &bri) in y.iter_mut().zip(&self.binv[r * m..(r + 1) * m]) {
                    *yi += cb * bri;
                }
            }
        }
        for (yi, s) in y.iter_mut().zip(&self.sign) {
            *yi *= s;
        }
        y
    }

    /// Entering structural variable, or `None` when the basis is optimal.
    fn price(&mut self, phase: &Phase, y_orig: &[f64]) -> Option<usize> {
        let v = self.v;
        let tol = REDUCED_COST_TOL;
        if self.bland {
            return (0..v).find(|&j| {
                !self.is_basic[j] && !self.rejected[j] && self.cost(phase, j) - dot(y_orig, self.a.col(j)) < -tol
            });
        }
        let window = (v / 8).max(64).min(v);
        let mut best: Option<(usize, f64)> = None;
        let mut scanned = 0;
        let mut j = self.price_start % v;
        while scanned < v {
            if !self.is_basic[j] && !self.rejected[j] {
                let d = self.cost(phase, j) - dot(y_orig, self.a.col(j));
                if d < -tol && best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
            scanned += 1;
            j += 1;
            if j == v {
                j = 0;
            }
            if scanned >= window && best.is_some() {
                break;
            }
        }
        self.price_start = j;
        best.map(|(j, _)| j)
    }

    fn ratio_test(&self, alpha: &[f64]) -> Option<usize> {
        let amax = norm_inf(alpha);
        let piv_tol = (1e-9 * amax).max(1e-11);
        let mut best: Option<(usize, f64)> = None;
        for (r, &ar) in alpha.iter().enumerate() {
            if ar <= piv_tol {
                continue;
            }
            let theta = self.xb[r].max(0.0) / ar;
            match best {
                None => best = Some((r, theta)),
                Some((br, bt)) => {
                    let tie = (theta - bt).abs() <= 1e-12 * (1.0 + bt.abs());
                    let better = if tie {
                        if self.bland {
                            self.basis[r] < self.basis[br]
                        } else {
                            ar > alpha[br]
                        }
                    } else {
                        theta < bt
                    };
                    if better {
                        best = Some((r, theta));
                    }
                }
            }
        }
        best.map(|(r, _)| r)
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let ar = alpha[r];
        let theta = self.xb[r].max(0.0) / ar;
        for i in 0..m {
            if i != r {
                self.xb[i] -= theta * alpha[i];
            }
        }
        self.xb[r] = theta;
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (row_r, after) = rest.split_at_mut(m);
        row_r.iter_mut().for_each(|x| *x /= ar);
        for (i, row) in before.chunks_mut(m).enumerate() {
            let f = alpha[i];
            if f != 0.0 {
                for (x, &p) in row.iter_mut().zip(row_r.iter()) {
                    *x -= f * p;
                }
            }
        }
        for (k, row) in after.chunks_mut(m).enumerate() {
            let f = alpha[r + 1 + k];
            if f != 0.0 {
                for (x, &p) in row.iter_mut().zip(row_r.iter()) {
                    *x -= f * p;
                }
            }
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
        self.iterations += 1;
        self.since_refactor += 1;
        if theta <= 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run >= DEGENERATE_RUN_FOR_BLAND {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
    }

    /// Recomputes `B⁻¹` by Gauss–Jordan elimination and `x_B = B⁻¹ b`.
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut bm = vec![0.0; m * m];
        let mut col = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            self.column(j, &mut col);
            for i in 0..m {
                bm[i * m + r] = col[i];
            }
        }
        let inv = invert(&mut bm, m)
            .ok_or_else(|| Error::numeric("simplex basis became singular"))?;
        self.binv = inv;
        for r in 0..m {
            self.xb[r] = dot(&self.binv[r * m..(r + 1) * m], &self.b);
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn step(&mut self, phase: &Phase) -> Result<StepOutcome> {
        if self.iterations >= self.max_iter {
            return Err(Error::SolverStall {
                iterations: self.iterations,
            });
        }
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        let y = self.duals(phase);
        let Some(q) = self.price(phase, &y) else {
            return Ok(StepOutcome::Optimal);
        };
        let mut alpha = vec![0.0; self.m];
        self.ftran(q, &mut alpha);
        let Some(r) = self.ratio_test(&alpha) else {
            // phase 1 is bounded below, and positive entries under the pivot
            // tolerance make the ray doubtful; either way the column is skipped
            let amax = norm_inf(&alpha);
            let doubtful = alpha.iter().any(|&a| a > 1e-14 * amax.max(1.0));
            if matches!(phase, Phase::One) || doubtful {
                self.rejected[q] = true;
                self.any_rejected = true;
                return Ok(StepOutcome::Skipped);
            }
            return Ok(StepOutcome::Unbounded);
        };
        if self.any_rejected {
            self.rejected.iter_mut().for_each(|r| *r = false);
            self.any_rejected = false;
        }
        self.pivot(r, q, &alpha);
        Ok(StepOutcome::Pivoted)
    }

    fn iterate(&mut self, phase: &Phase) -> Result<StepOutcome> {
        loop {
            match self.step(phase)? {
                StepOutcome::Pivoted | StepOutcome::Skipped => continue,
                other => return Ok(other),
            }
        }
    }

    /// Pivots basic artificials out wherever a structural column allows it.
    fn drive_out_artificials(&mut self) -> Result<()> {
        let m = self.m;
        let mut col = vec![0.0; m];
        for r in 0..m {
            if self.basis[r] < self.v {
                continue;
            }
            let row = &self.binv[r * m..(r + 1) * m];
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.v {
                if self.is_basic[j] {
                    continue;
                }
                self.column(j, &mut col);
                let rho = dot(row, &col).abs();
                if rho > 1e-9 && best.is_none_or(|(_, b)| rho > b) {
                    best = Some((j, rho));
                }
            }
            if let Some((j, _)) = best {
                let mut alpha = vec![0.0; m];
                self.ftran(j, &mut alpha);
                // degenerate pivot: the artificial sits at (near) zero
                let ar = alpha[r];
                let theta = self.xb[r] / ar;
                for i in 0..m {
                    if i != r {
                        self.xb[i] -= theta * alpha[i];
                    }
                }
                self.xb[r] = theta;
                let saved = self.xb.clone();
                self.pivot_matrix_only(r, j, &alpha);
                self.xb = saved;
            }
        }
        self.refactor()
    }

    fn pivot_matrix_only(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let ar = alpha[r];
        let row_r: Vec<f64> = self.binv[r * m..(r + 1) * m].iter().map(|x| x / ar).collect();
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = alpha[i];
            if f != 0.0 {
                for (x, &p) in self.binv[i * m..(i + 1) * m].iter_mut().zip(&row_r) {
                    *x -= f * p;
                }
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&row_r);
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
        self.iterations += 1;
        self.since_refactor += 1;
    }

    fn run(&mut self, opts: &LpOptions) -> Result<LpSolution> {
        let bnorm = norm_inf(self.b_orig);
        // phase 1: minimize the sum of artificials
        match self.iterate(&Phase::One)? {
            StepOutcome::Optimal => {}
            _ => return Err(Error::numeric("phase 1 reported an unbounded ray")),
        }
        self.refactor()?;
        let infeas: f64 = self
            .basis
            .iter()
            .zip(&self.xb)
            .filter(|(&j, _)| j >= self.v)
            .map(|(_, &x)| x.max(0.0))
            .sum();
        if infeas > opts.feas_tol * (1.0 + bnorm) {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, self.iterations));
        }
        if self.basis.iter().any(|&j| j >= self.v) {
            self.drive_out_artificials()?;
        }
        self.bland = false;
        self.degenerate_run = 0;
        self.rejected.iter_mut().for_each(|r| *r = false);
        self.any_rejected = false;

        for attempt in 0..3 {
            match self.iterate(&Phase::Two)? {
                StepOutcome::Unbounded => {
                    return Ok(LpSolution::without_point(LpStatus::Unbounded, self.iterations))
                }
                StepOutcome::Pivoted | StepOutcome::Skipped => unreachable!(),
                StepOutcome::Optimal => {}
            }
            self.refactor()?;
            if let Some(sol) = self.extract(opts, bnorm) {
                return Ok(sol);
            }
            log::debug!("simplex: tolerance check failed after refactor (attempt {attempt})");
        }
        Err(Error::numeric(
            "simplex: optimal basis does not meet feasibility/gap tolerances",
        ))
    }

    fn extract(&mut self, opts: &LpOptions, bnorm: f64) -> Option<LpSolution> {
        let v = self.v;
        let mut x = vec![0.0; v];
        for (&j, &xj) in self.basis.iter().zip(&self.xb) {
            if j < v {
                if xj < -opts.feas_tol * (1.0 + bnorm) {
                    return None;
                }
                x[j] = xj.max(0.0);
            }
        }
        // primal residual on the original data
        let mut resid = self.b_orig.to_vec();
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                for (ri, &aij) in resid.iter_mut().zip(self.a.col(j)) {
                    *ri -= aij * xj;
                }
            }
        }
        if norm_inf(&resid) > opts.feas_tol * (1.0 + bnorm) {
            return None;
        }
        let y = self.duals(&Phase::Two);
        // every structural reduced cost must be non-negative at the optimum
        if (0..v).any(|j| self.c[j] - dot(&y, self.a.col(j)) < -1e3 * REDUCED_COST_TOL) {
            return None;
        }
        let primal = dot(self.c, &x);
        let dual = dot(self.b_orig, &y);
        if (primal - dual).abs() > opts.gap_tol * (1.0 + primal.abs()) {
            return None;
        }
        let basis = self
            .basis
            .iter()
            .map(|&j| if j < v { Some(j) } else { None })
            .collect();
        Some(LpSolution {
            status: LpStatus::Optimal,
            point: Some(x),
            objective_value: Some(primal),
            dual_point: Some(y),
            basis: Some(basis),
            iterations: self.iterations,
        })
    }
}

/// In-place Gauss–Jordan inverse of a row-major `m x m` matrix with partial
/// pivoting. Returns `None` when the matrix is numerically singular.
pub(crate) fn invert(a: &mut [f64], m: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(1e-300);
    for k in 0..m {
        let (p, pv) = (k..m)
            .map(|i| (i, a[i * m + k].abs()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pv <= 1e-14 * scale {
            return None;
        }
        if p != k {
            for j in 0..m {
                a.swap(k * m + j, p * m + j);
                inv.swap(k * m + j, p * m + j);
            }
        }
        let d = a[k * m + k];
        for j in 0..m {
            a[k * m + j] /= d;
            inv[k * m + j] /= d;
        }
        for i in 0..m {
            if i == k {
                continue;
            }
            let f = a[i * m + k];
            if f == 0.0 {
                continue;
            }
            for j in 0..m {
                a[i * m + j] -= f * a[k * m + j];
                inv[i * m + j] -= f * inv[k * m + j];
            }
        }
    }
    Some(inv)
}
