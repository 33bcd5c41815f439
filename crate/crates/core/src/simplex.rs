//! Bounded-variable two-phase revised simplex with a dense basis inverse.
//!
//! Variables live between (possibly infinite) bounds, rows are converted to
//! equalities with slack columns, and infeasible starts get artificial columns
//! minimized in phase 1. Pricing is Dantzig (most negative reduced cost) and
//! switches permanently to Bland's rule the first time a basis repeats, which
//! guarantees termination on degenerate problems. Everything is deterministic:
//! ties break on the smallest column index.

use crate::lp::{LpStandardForm, RowSense, StartBasis};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimplexError {
    #[error("numerical failure in simplex: {0}")]
    Numerical(String),
    #[error("malformed LP: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Bound/row feasibility tolerance.
    pub feas_tol: f64,
    /// Reduced-cost optimality tolerance.
    pub opt_tol: f64,
    /// Smallest acceptable pivot magnitude.
    pub pivot_tol: f64,
    /// Hard iteration cap; 0 picks one from the problem size.
    pub max_iters: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { feas_tol: 1e-7, opt_tol: 1e-7, pivot_tol: 1e-9, max_iters: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexSolution {
    pub status: SimplexStatus,
    /// Max-sense objective. NaN when infeasible, +inf when unbounded.
    pub objective: f64,
    /// Structural column values; meaningful only when `Optimal`.
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Largest row/bound residual of the reported point.
    pub max_violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VStat {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Worker<'a> {
    opts: &'a SimplexOptions,
    m: usize,
    n_struct: usize,
    /// Total columns including slacks and artificials.
    n: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    slack_of_row: Vec<Option<usize>>,
    first_artificial: usize,

    basis: Vec<usize>,
    vstat: Vec<VStat>,
    /// Row-major basis inverse: `binv[slot * m + row]`.
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
    bland: bool,
    seen_bases: HashSet<u64>,
}

/// Solves a maximization LP. The objective in the result is max-sense.
pub fn solve(lp: &LpStandardForm, opts: &SimplexOptions) -> Result<SimplexSolution, SimplexError> {
    lp.validate().map_err(SimplexError::Malformed)?;
    let mut w = Worker::new(lp, opts);

    if !w.try_hint_start(lp) {
        w.artificial_start();
    }

    if w.n > w.first_artificial {
        // Phase 1: minimize the sum of artificial values.
        let saved_cost = std::mem::take(&mut w.cost);
        w.cost = vec![0.0; w.n];
        for j in w.first_artificial..w.n {
            w.cost[j] = 1.0;
        }
        w.run_phase(true)?;
        let infeas: f64 = (w.first_artificial..w.n).map(|j| w.value_of(j)).sum();
        let scale = 1.0 + w.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeas > opts.feas_tol * scale * 10.0 {
            return Ok(SimplexSolution {
                status: SimplexStatus::Infeasible,
                objective: f64::NAN,
                x: vec![0.0; w.n_struct],
                iterations: w.iterations,
                max_violation: infeas,
            });
        }
        w.drive_out_artificials();
        for j in w.first_artificial..w.n {
            w.lower[j] = 0.0;
            w.upper[j] = 0.0;
        }
        w.cost = saved_cost;
        w.cost.resize(w.n, 0.0);
        w.recompute_xb();
    }

    match w.run_phase(false)? {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded => {
            return Ok(SimplexSolution {
                status: SimplexStatus::Unbounded,
                objective: f64::INFINITY,
                x: vec![0.0; w.n_struct],
                iterations: w.iterations,
                max_violation: 0.0,
            });
        }
    }

    w.recompute_xb();
    let x: Vec<f64> = (0..w.n_struct).map(|j| w.value_of(j)).collect();
    let objective =
        lp.objective_offset + x.iter().zip(&lp.objective).map(|(v, c)| v * c).sum::<f64>();
    let max_violation = residual(lp, &x);
    Ok(SimplexSolution {
        status: SimplexStatus::Optimal,
        objective,
        x,
        iterations: w.iterations,
        max_violation,
    })
}

/// Largest constraint/bound residual of a candidate point.
pub fn residual(lp: &LpStandardForm, x: &[f64]) -> f64 {
    let m = lp.rows.len();
    let mut lhs = vec![0.0; m];
    for (j, col) in lp.cols.iter().enumerate() {
        for &(i, v) in col {
            lhs[i] += v * x[j];
        }
    }
    let mut worst = 0.0f64;
    for (i, spec) in lp.rows.iter().enumerate() {
        let gap = match spec.sense {
            RowSense::Eq => (lhs[i] - spec.rhs).abs(),
            RowSense::Le => (lhs[i] - spec.rhs).max(0.0),
            RowSense::Ge => (spec.rhs - lhs[i]).max(0.0),
        };
        worst = worst.max(gap);
    }
    for (j, &v) in x.iter().enumerate() {
        worst = worst.max(lp.lower[j] - v).max(v - lp.upper[j]);
    }
    worst
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl<'a> Worker<'a> {
    fn new(lp: &LpStandardForm, opts: &'a SimplexOptions) -> Self {
        let m = lp.rows.len();
        let n_struct = lp.cols.len();
        let mut cols = lp.cols.clone();
        let mut cost: Vec<f64> = lp.objective.iter().map(|c| -c).collect();
        let mut lower = lp.lower.clone();
        let mut upper = lp.upper.clone();
        let mut slack_of_row = vec![None; m];
        for (i, spec) in lp.rows.iter().enumerate() {
            let coef = match spec.sense {
                RowSense::Eq => continue,
                RowSense::Le => 1.0,
                RowSense::Ge => -1.0,
            };
            slack_of_row[i] = Some(cols.len());
            cols.push(vec![(i, coef)]);
            cost.push(0.0);
            lower.push(0.0);
            upper.push(f64::INFINITY);
        }
        let n = cols.len();
        let rhs: Vec<f64> = lp.rows.iter().map(|r| r.rhs).collect();
        Self {
            opts,
            m,
            n_struct,
            n,
            cols,
            cost,
            lower,
            upper,
            rhs,
            slack_of_row,
            first_artificial: n,
            basis: Vec::new(),
            vstat: Vec::new(),
            binv: Vec::new(),
            xb: Vec::new(),
            iterations: 0,
            bland: false,
            seen_bases: HashSet::new(),
        }
    }

    fn default_stat(&self, j: usize) -> VStat {
        if self.lower[j].is_finite() {
            VStat::AtLower
        } else if self.upper[j].is_finite() {
            VStat::AtUpper
        } else {
            // Free column: rest it at zero, encoded as a lower bound of zero
            // for status purposes only (its bound stays -inf).
            VStat::AtLower
        }
    }

    fn value_of(&self, j: usize) -> f64 {
        match self.vstat[j] {
            VStat::Basic(slot) => self.xb[slot],
            VStat::AtLower => {
                if self.lower[j].is_finite() {
                    self.lower[j]
                } else {
                    0.0
                }
            }
            VStat::AtUpper => self.upper[j],
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.vstat[j] {
            VStat::Basic(_) => unreachable!("nonbasic_value on basic column"),
            _ => self.value_of(j),
        }
    }

    /// Effective rhs after shifting nonbasic columns to their bound values.
    fn effective_rhs(&self) -> Vec<f64> {
        let mut b = self.rhs.clone();
        for j in 0..self.n {
            if matches!(self.vstat[j], VStat::Basic(_)) {
                continue;
            }
            let v = self.nonbasic_value(j);
            if v != 0.0 {
                for &(i, a) in &self.cols[j] {
                    b[i] -= a * v;
                }
            }
        }
        b
    }

    fn recompute_xb(&mut self) {
        let b = self.effective_rhs();
        let m = self.m;
        for slot in 0..m {
            let row = &self.binv[slot * m..(slot + 1) * m];
            self.xb[slot] = row.iter().zip(&b).map(|(a, c)| a * c).sum();
        }
    }

    /// Tries the builder-provided basis hint. Returns false when it does not
    /// triangularize or its solution violates bounds.
    fn try_hint_start(&mut self, lp: &LpStandardForm) -> bool {
        let hint = match &lp.basis_hint {
            Some(h) => h,
            None => return false,
        };
        let m = self.m;
        let mut chosen: Vec<usize> = Vec::with_capacity(m);
        let mut used = vec![false; self.n];
        for (i, h) in hint.iter().enumerate() {
            let j = match h {
                StartBasis::Column(j) => *j,
                StartBasis::RowSlack => match self.slack_of_row[i] {
                    Some(j) => j,
                    None => return false,
                },
            };
            if j >= self.n || used[j] {
                return false;
            }
            used[j] = true;
            chosen.push(j);
        }

        // Restrict rows to the chosen columns and look for a triangular order.
        let mut row_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for &j in &chosen {
            for &(i, v) in &self.cols[j] {
                row_entries[i].push((j, v));
            }
        }
        let mut col_alive = vec![false; self.n];
        for &j in &chosen {
            col_alive[j] = true;
        }
        let mut row_count: Vec<usize> = row_entries.iter().map(|r| r.len()).collect();
        let mut row_alive = vec![true; m];
        let mut queue: Vec<usize> = (0..m).filter(|&i| row_count[i] == 1).collect();
        let mut order: Vec<(usize, usize, f64)> = Vec::with_capacity(m);
        while let Some(r) = queue.pop() {
            if !row_alive[r] || row_count[r] != 1 {
                continue;
            }
            let &(c, coef) =
                row_entries[r].iter().find(|(c, _)| col_alive[*c]).expect("counted entry exists");
            if coef.abs() < self.opts.pivot_tol {
                return false;
            }
            order.push((r, c, coef));
            row_alive[r] = false;
            col_alive[c] = false;
            for &(i, _) in &self.cols[c] {
                if row_alive[i] {
                    row_count[i] -= 1;
                    if row_count[i] == 1 {
                        queue.push(i);
                    }
                }
            }
        }
        if order.len() != m {
            return false;
        }

        // Assign slots in elimination order and invert by forward substitution.
        self.basis = order.iter().map(|&(_, c, _)| c).collect();
        self.vstat = (0..self.n).map(|j| self.default_stat(j)).collect();
        let mut slot_of_col = vec![usize::MAX; self.n];
        for (slot, &(_, c, _)) in order.iter().enumerate() {
            self.vstat[c] = VStat::Basic(slot);
            slot_of_col[c] = slot;
        }
        self.binv = vec![0.0; m * m];
        let mut x = vec![0.0; m];
        for k in 0..m {
            for v in x.iter_mut() {
                *v = 0.0;
            }
            for &(r, c, coef) in &order {
                let mut acc = if r == k { 1.0 } else { 0.0 };
                for &(c2, v2) in &row_entries[r] {
                    if c2 != c {
                        acc -= v2 * x[slot_of_col[c2]];
                    }
                }
                x[slot_of_col[c]] = acc / coef;
            }
            for slot in 0..m {
                self.binv[slot * m + k] = x[slot];
            }
        }
        self.xb = vec![0.0; m];
        self.recompute_xb();

        let scale = 1.0 + self.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let tol = self.opts.feas_tol * scale;
        for slot in 0..m {
            let j = self.basis[slot];
            if self.xb[slot] < self.lower[j] - tol || self.xb[slot] > self.upper[j] + tol {
                return false;
            }
        }
        true
    }

    /// Classic start: slacks where they are feasible, signed artificials elsewhere.
    fn artificial_start(&mut self) {
        let m = self.m;
        self.vstat = (0..self.n).map(|j| self.default_stat(j)).collect();
        let mut resid = self.rhs.clone();
        for j in 0..self.n {
            let v = self.nonbasic_value(j);
            if v != 0.0 {
                for &(i, a) in &self.cols[j] {
                    resid[i] -= a * v;
                }
            }
        }
        self.basis = vec![0; m];
        self.binv = vec![0.0; m * m];
        self.xb = vec![0.0; m];
        for i in 0..m {
            let slack_ok = match self.slack_of_row[i] {
                Some(js) => {
                    let coef = self.cols[js][0].1;
                    let v = resid[i] / coef;
                    if v >= 0.0 {
                        self.basis[i] = js;
                        self.vstat[js] = VStat::Basic(i);
                        self.binv[i * m + i] = 1.0 / coef;
                        self.xb[i] = v;
                        true
                    } else {
                        false
                    }
                }
                None => false,
            };
            if !slack_ok {
                let sign = if resid[i] >= 0.0 { 1.0 } else { -1.0 };
                let j = self.n;
                self.cols.push(vec![(i, sign)]);
                self.cost.push(0.0);
                self.lower.push(0.0);
                self.upper.push(f64::INFINITY);
                self.vstat.push(VStat::Basic(i));
                self.n += 1;
                self.basis[i] = j;
                self.binv[i * m + i] = sign;
                self.xb[i] = resid[i].abs();
            }
        }
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for slot in 0..m {
            let c = self.cost[self.basis[slot]];
            if c != 0.0 {
                let row = &self.binv[slot * m..(slot + 1) * m];
                for (yi, bi) in y.iter_mut().zip(row) {
                    *yi += c * bi;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.cost[j];
        for &(i, v) in &self.cols[j] {
            d -= y[i] * v;
        }
        d
    }

    fn basis_signature(&self) -> u64 {
        let mut sorted: Vec<usize> = self.basis.clone();
        sorted.sort_unstable();
        let mut h: u64 = 0xcbf29ce484222325;
        for v in sorted {
            h ^= v as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }

    fn run_phase(&mut self, phase1: bool) -> Result<PhaseEnd, SimplexError> {
        let max_iters = if self.opts.max_iters > 0 {
            self.opts.max_iters
        } else {
            1000 + 60 * (self.m + self.n)
        };
        let mut since_resync = 0usize;
        loop {
            if self.iterations >= max_iters {
                return Err(SimplexError::Numerical(format!(
                    "iteration limit {max_iters} reached"
                )));
            }
            if since_resync >= 64 {
                self.recompute_xb();
                since_resync = 0;
            }

            let y = self.duals();
            let mut entering: Option<(usize, f64, f64)> = None; // (col, |d|, dir)
            for j in 0..self.n {
                if matches!(self.vstat[j], VStat::Basic(_)) || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = self.reduced_cost(j, &y);
                let free = !self.lower[j].is_finite() && !self.upper[j].is_finite();
                let dir = match self.vstat[j] {
                    VStat::AtLower if d < -self.opts.opt_tol => 1.0,
                    VStat::AtLower if free && d > self.opts.opt_tol => -1.0,
                    VStat::AtUpper if d > self.opts.opt_tol => -1.0,
                    _ => continue,
                };
                if self.bland {
                    entering = Some((j, d.abs(), dir));
                    break;
                }
                match entering {
                    Some((_, best, _)) if d.abs() <= best => {}
                    _ => entering = Some((j, d.abs(), dir)),
                }
            }
            let (j_in, _, dir) = match entering {
                Some(e) => e,
                None => return Ok(PhaseEnd::Optimal),
            };

            // Direction through the basis.
            let m = self.m;
            let mut w = vec![0.0; m];
            for slot in 0..m {
                let row = &self.binv[slot * m..(slot + 1) * m];
                let mut acc = 0.0;
                for &(i, v) in &self.cols[j_in] {
                    acc += row[i] * v;
                }
                w[slot] = acc;
            }

            // Ratio test over basic columns plus the entering column's own range.
            let range = self.upper[j_in] - self.lower[j_in];
            let mut t_best = if range.is_finite() { range } else { f64::INFINITY };
            let mut leave: Option<usize> = None;
            for slot in 0..m {
                let wd = w[slot] * dir;
                let jb = self.basis[slot];
                let t = if wd > self.opts.pivot_tol {
                    if !self.lower[jb].is_finite() {
                        continue;
                    }
                    (self.xb[slot] - self.lower[jb]) / wd
                } else if wd < -self.opts.pivot_tol {
                    if !self.upper[jb].is_finite() {
                        continue;
                    }
                    (self.xb[slot] - self.upper[jb]) / wd
                } else {
                    continue;
                };
                let t = t.max(0.0);
                let better = match leave {
                    None => t < t_best,
                    Some(cur) => {
                        t < t_best - 1e-12 || ((t - t_best).abs() <= 1e-12 && jb < self.basis[cur])
                    }
                };
                if better {
                    t_best = t;
                    leave = Some(slot);
                }
            }

            if !t_best.is_finite() {
                if phase1 {
                    return Err(SimplexError::Numerical(
                        "phase-1 objective unbounded below".into(),
                    ));
                }
                return Ok(PhaseEnd::Unbounded);
            }

            match leave {
                None => {
                    // Bound flip: the entering column runs to its other bound.
                    for slot in 0..m {
                        self.xb[slot] -= dir * t_best * w[slot];
                    }
                    self.vstat[j_in] = match self.vstat[j_in] {
                        VStat::AtLower => VStat::AtUpper,
                        VStat::AtUpper => VStat::AtLower,
                        VStat::Basic(_) => unreachable!(),
                    };
                }
                Some(r) => {
                    let piv = w[r];
                    if piv.abs() < self.opts.pivot_tol {
                        return Err(SimplexError::Numerical(format!(
                            "pivot {piv:.3e} below tolerance"
                        )));
                    }
                    let j_out = self.basis[r];
                    if j_out >= self.first_artificial {
                        // Artificials never come back once they leave the basis.
                        self.lower[j_out] = 0.0;
                        self.upper[j_out] = 0.0;
                        self.vstat[j_out] = VStat::AtLower;
                    } else {
                        self.vstat[j_out] =
                            if w[r] * dir > 0.0 { VStat::AtLower } else { VStat::AtUpper };
                    }
                    let enter_val = self.nonbasic_value(j_in) + dir * t_best;
                    for slot in 0..m {
                        if slot != r {
                            self.xb[slot] -= dir * t_best * w[slot];
                        }
                    }
                    self.xb[r] = enter_val;

                    // Product-form update of the inverse.
                    let (head, tail) = self.binv.split_at_mut(r * m);
                    let (prow, rest) = tail.split_at_mut(m);
                    for v in prow.iter_mut() {
                        *v /= piv;
                    }
                    for (slot, chunk) in head.chunks_exact_mut(m).enumerate() {
                        let f = w[slot];
                        if f != 0.0 {
                            for (c, p) in chunk.iter_mut().zip(prow.iter()) {
                                *c -= f * p;
                            }
                        }
                    }
                    for (off, chunk) in rest.chunks_exact_mut(m).enumerate() {
                        let f = w[r + 1 + off];
                        if f != 0.0 {
                            for (c, p) in chunk.iter_mut().zip(prow.iter()) {
                                *c -= f * p;
                            }
                        }
                    }

                    self.basis[r] = j_in;
                    self.vstat[j_in] = VStat::Basic(r);
                    if !self.bland && !self.seen_bases.insert(self.basis_signature()) {
                        self.bland = true;
                    }
                }
            }
            self.iterations += 1;
            since_resync += 1;
        }
    }

    /// After phase 1, pivot remaining artificials out of the basis where possible.
    fn drive_out_artificials(&mut self) {
        let m = self.m;
        for slot in 0..m {
            if self.basis[slot] < self.first_artificial {
                continue;
            }
            let row: Vec<f64> = self.binv[slot * m..(slot + 1) * m].to_vec();
            let mut found = None;
            for j in 0..self.first_artificial {
                if matches!(self.vstat[j], VStat::Basic(_)) || self.lower[j] == self.upper[j] {
                    continue;
                }
                let mut e = 0.0;
                for &(i, v) in &self.cols[j] {
                    e += row[i] * v;
                }
                if e.abs() > 1e-7 {
                    found = Some(j);
                    break;
                }
            }
            let j_in = match found {
                Some(j) => j,
                None => continue, // redundant row; artificial stays pinned at zero
            };
            let mut w = vec![0.0; m];
            for s in 0..m {
                let r = &self.binv[s * m..(s + 1) * m];
                let mut acc = 0.0;
                for &(i, v) in &self.cols[j_in] {
                    acc += r[i] * v;
                }
                w[s] = acc;
            }
            let piv = w[slot];
            let j_out = self.basis[slot];
            self.vstat[j_out] = VStat::AtLower;
            let enter_val = self.nonbasic_value(j_in);
            self.xb[slot] = enter_val;
            let (pre, rest) = self.binv.split_at_mut(slot * m);
            let (prow, post) = rest.split_at_mut(m);
            for v in prow.iter_mut() {
                *v /= piv;
            }
            for (s, chunk) in pre.chunks_exact_mut(m).enumerate() {
                let f = w[s];
                if f != 0.0 {
                    for (c, p) in chunk.iter_mut().zip(prow.iter()) {
                        *c -= f * p;
                    }
                }
            }
            for (off, chunk) in post.chunks_exact_mut(m).enumerate() {
                let f = w[slot + 1 + off];
                if f != 0.0 {
                    for (c, p) in chunk.iter_mut().zip(prow.iter()) {
                        *c -= f * p;
                    }
                }
            }
            self.basis[slot] = j_in;
            self.vstat[j_in] = VStat::Basic(slot);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{ColLabel, RowLabel, RowSpec};

    type TestRow = (Vec<(usize, f64)>, RowSense, f64);

    fn lp(objective: Vec<f64>, bounds: Vec<(f64, f64)>, rows: Vec<TestRow>) -> LpStandardForm {
        let n = objective.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut specs = Vec::new();
        for (i, (coeffs, sense, rhs)) in rows.into_iter().enumerate() {
            for (j, v) in coeffs {
                cols[j].push((i, v));
            }
            specs.push(RowSpec { label: RowLabel::Balance { t: i, scenario: 0 }, sense, rhs });
        }
        LpStandardForm {
            objective,
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
            cols,
            rows: specs,
            col_labels: (0..n).map(|j| ColLabel::Aux(format!("x{j}"))).collect(),
            objective_offset: 0.0,
            basis_hint: None,
        }
    }

    #[test]
    fn single_bound_max() {
        // max x s.t. x <= 5, x >= 0
        let p =
            lp(vec![1.0], vec![(0.0, f64::INFINITY)], vec![(vec![(0, 1.0)], RowSense::Le, 5.0)]);
        let s = solve(&p, &SimplexOptions::default()).unwrap();
        assert_eq!(s.status, SimplexStatus::Optimal);
        assert!((s.objective - 5.0).abs() < 1e-9);
        assert!((s.x[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn three_constraint_max() {
        // max 2x0 + x1 + x2; classic instance with optimum 5.
        let p = lp(
            vec![2.0, 1.0, 1.0],
            vec![(0.0, f64::INFINITY); 3],
            vec![
                (vec![(0, 2.0), (1, 2.0), (2, -1.0)], RowSense::Le, 6.0),
                (vec![(0, 2.0), (2, 4.0)], RowSense::Le, 4.0),
                (vec![(0, -4.0), (1, 3.0), (2, -1.0)], RowSense::Le, 1.0),
            ],
        );
        let s = solve(&p, &SimplexOptions::default()).unwrap();
        assert_eq!(s.status, SimplexStatus::Optimal);
        assert!((s.objective - 5.0).abs() < 1e-8, "objective {}", s.objective);
    }

    #[test]
    fn two_variable_max() {
        // max x0 + 2x1 with three resource rows; optimum 9.
        let p = lp(
            vec![1.0, 2.0],
            vec![(0.0, f64::INFINITY); 2],
            vec![
                (vec![(0, 1.0), (1, 1.0)], RowSense::Le, 6.0),
                (vec![(0, 1.0), (1, 3.0)], RowSense::Le, 12.0),
                (vec![(0, 2.0), (1, 1.0)], RowSense::Le, 10.0),
            ],
        );
        let s = solve(&p, &SimplexOptions::default()).unwrap();
        assert!((s.objective - 9.0).abs() < 1e-8);
    }

    #[test]
    fn unbounded_ray_detected() {
        let p = lp(
            vec![2.0, 1.0],
            vec![(0.0, f64::INFINITY); 2],
            vec![
                (vec![(0, 1.0), (1, -2.0)], RowSense::Le, 4.0),
                (vec![(0, -1.0), (1, 1.0)], RowSense::Le, 2.0),
            ],
        );
        let s = solve(&p, &SimplexOptions::default()).unwrap();
        assert_eq!(s.status, SimplexStatus::Unbounded);
        assert!(s.objective.is_infinite());
    }

    #[test]
    fn contradictory_rows_infeasible() {
        let p = lp(
            vec![1.0],
            vec![(0.0, f64::INFINITY)],
            vec![(vec![(0, 1.0)], RowSense::Ge, 3.0), (vec![(0, 1.0)], RowSense::Le, 1.0)],
        );
        let s = solve(&p, &SimplexOptions::default()).unwrap();
        assert_eq!(s.status, SimplexStatus::Infeasible);
        assert!(s.objective.is_nan());
    }

    #[test]
    fn equality_with_bounded_vars() {
        // max 3x0 + x1 s.t. x0 + x1 = 4, x0 <= 2.5, x1 <= 3 -> x0=2.5, x1=1.5
        let p = lp(
            vec![3.0, 1.0],
            vec![(0.0, 2.5), (0.0, 3.0)],
            vec![(vec![(0, 1.0), (1, 1.0)], RowSense::Eq, 4.0)],
        );
        let s = solve(&p, &SimplexOptions::default()).unwrap();
        assert_eq!(s.status, SimplexStatus::Optimal);
        assert!((s.objective - 9.0).abs() < 1e-8);
        assert!((s.x[0] - 2.5).abs() < 1e-8);
        assert!((s.x[1] - 1.5).abs() < 1e-8);
    }

    #[test]
    fn negative_lower_bounds() {
        // max x0 with x0 in [-3, -1]
        let p = lp(vec![1.0], vec![(-3.0, -1.0)], vec![(vec![(0, 1.0)], RowSense::Le, 10.0)]);
        let s = solve(&p, &SimplexOptions::default()).unwrap();
        assert!((s.objective + 1.0).abs() < 1e-9);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Beale's classic cycling LP (min form); Dantzig pricing cycles without
        // the repeated-basis Bland switch. Optimum of the max form is 0.05.
        let p = lp(
            vec![0.75, -150.0, 0.02, -6.0],
            vec![(0.0, f64::INFINITY); 4],
            vec![
                (vec![(0, 0.25), (1, -60.0), (2, -1.0 / 25.0), (3, 9.0)], RowSense::Le, 0.0),
                (vec![(0, 0.5), (1, -90.0), (2, -1.0 / 50.0), (3, 3.0)], RowSense::Le, 0.0),
                (vec![(2, 1.0)], RowSense::Le, 1.0),
            ],
        );
        let s = solve(&p, &SimplexOptions::default()).unwrap();
        assert_eq!(s.status, SimplexStatus::Optimal);
        assert!((s.objective - 0.05).abs() < 1e-9, "objective {}", s.objective);
    }

    #[test]
    fn deterministic_replay() {
        let p = lp(
            vec![1.0, 2.0, -1.0],
            vec![(0.0, 4.0), (0.0, f64::INFINITY), (-2.0, 2.0)],
            vec![
                (vec![(0, 1.0), (1, 2.0), (2, 1.0)], RowSense::Le, 14.0),
                (vec![(0, 3.0), (1, -1.0), (2, -2.0)], RowSense::Ge, -3.0),
                (vec![(0, 1.0), (1, -1.0), (2, 1.0)], RowSense::Eq, 2.0),
            ],
        );
        let a = solve(&p, &SimplexOptions::default()).unwrap();
        let b = solve(&p, &SimplexOptions::default()).unwrap();
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.iterations, b.iterations);
        for (u, v) in a.x.iter().zip(&b.x) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn reported_point_is_feasible() {
        let p = lp(
            vec![5.0, 4.0],
            vec![(0.0, f64::INFINITY); 2],
            vec![
                (vec![(0, 6.0), (1, 4.0)], RowSense::Le, 24.0),
                (vec![(0, 1.0), (1, 2.0)], RowSense::Le, 6.0),
            ],
        );
        let s = solve(&p, &SimplexOptions::default()).unwrap();
        assert!(s.max_violation <= 1e-9);
        assert!((s.objective - 21.0).abs() < 1e-8);
    }
}
