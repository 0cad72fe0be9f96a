//! Bounded primal simplex over a generic basis factorization.
//!
//! Every row gets a slack `s_i` with `a_i·x + s_i = b_i`; the slack bounds
//! encode the row sense. Phase 1 minimizes the sum of bound violations of the
//! basic variables, so any starting basis works.

use super::dense::DenseInverse;
use super::factor::{BasisFactor, Singular};
use super::lu::SparseLu;
use super::{dual_certificate, Basis, LinearProgram, LpError, LpSolution, LpStatus, Sense, VarStatus};

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    /// `None` picks a limit from the problem size.
    pub max_iterations: Option<usize>,
    /// Degenerate pivots in a row before switching to Bland's rule.
    pub degenerate_streak: usize,
    /// Backend choice: `None` uses the dense inverse on small problems.
    pub force_sparse: Option<bool>,
    /// Widen every finite bound by a tiny deterministic amount while
    /// optimizing, then restore the bounds and clean up. Breaks the stalling
    /// that degenerate vertices cause.
    pub perturb: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: None,
            degenerate_streak: 50,
            force_sparse: None,
            perturb: true,
        }
    }
}

const DENSE_MAX_VARS: usize = 2000;
const DENSE_MAX_ROWS: usize = 15;
const RETRIES: usize = 3;
/// Relative size of the bound perturbation.
const PERTURB: f64 = 1e-7;

pub(crate) fn solve(lp: &LinearProgram, opts: &SolverOptions, warm: Option<&Basis>) -> Result<LpSolution, LpError> {
    let sparse = opts
        .force_sparse
        .unwrap_or(lp.num_vars() > DENSE_MAX_VARS || lp.num_rows() > DENSE_MAX_ROWS);
    let mut last = None;
    for attempt in 0..RETRIES {
        let warm = if attempt == 0 { warm } else { None };
        let bland = attempt > 0;
        let out = if sparse {
            Simplex::<SparseLu>::new(lp, opts, bland).run(warm)
        } else {
            Simplex::<DenseInverse>::new(lp, opts, bland).run(warm)
        };
        match out {
            Err(LpError::NumericalFailure(msg)) => last = Some(msg),
            other => return other,
        }
    }
    Err(LpError::NumericalFailure(last.unwrap_or_default()))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum State {
    Basic,
    Lower,
    Upper,
    Free,
}

struct Simplex<'a, F: BasisFactor> {
    lp: &'a LinearProgram,
    opts: &'a SolverOptions,
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    /// Row-wise copy of the constraint matrix, for pivot rows.
    row_start: Vec<usize>,
    row_col: Vec<usize>,
    row_val: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    /// Unperturbed bounds while a perturbation is active.
    saved_bounds: Option<(Vec<f64>, Vec<f64>)>,
    b: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    factor: Option<F>,
    iterations: usize,
    always_bland: bool,
}

enum Step {
    Flip,
    Pivot { pos: usize, to: State },
    Unbounded,
}

impl<'a, F: BasisFactor> Simplex<'a, F> {
    fn new(lp: &'a LinearProgram, opts: &'a SolverOptions, always_bland: bool) -> Self {
        let m = lp.num_rows();
        let n = lp.num_vars();
        let mut counts = vec![0usize; n + 1];
        for row in &lp.rows {
            for &(j, _) in &row.coeffs {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let nnz = col_start[n];
        let mut col_row = vec![0; nnz];
        let mut col_val = vec![0.0; nnz];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                col_row[fill[j]] = i;
                col_val[fill[j]] = a;
                fill[j] += 1;
            }
        }
        let mut cost = lp.objective.clone();
        let mut lo = lp.lower.clone();
        let mut up = lp.upper.clone();
        for row in &lp.rows {
            cost.push(0.0);
            let (l, u) = match row.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo.push(l);
            up.push(u);
        }
        let b = lp.rows.iter().map(|r| r.rhs).collect();
        let mut row_start = Vec::with_capacity(m + 1);
        let mut row_col = Vec::with_capacity(nnz);
        let mut row_val = Vec::with_capacity(nnz);
        row_start.push(0);
        for row in &lp.rows {
            for &(j, a) in &row.coeffs {
                row_col.push(j);
                row_val.push(a);
            }
            row_start.push(row_col.len());
        }
        Self {
            lp,
            opts,
            m,
            n,
            col_start,
            col_row,
            col_val,
            row_start,
            row_col,
            row_val,
            cost,
            lo,
            up,
            saved_bounds: None,
            b,
            x: vec![0.0; n + m],
            state: vec![State::Lower; n + m],
            basis: Vec::new(),
            factor: None,
            iterations: 0,
            always_bland,
        }
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1]).map(|t| (self.col_row[t], self.col_val[t])).collect()
        } else {
            vec![(j - self.n, 1.0)]
        }
    }

    fn dot_column(&self, j: usize, v: &[f64]) -> f64 {
        if j < self.n {
            (self.col_start[j]..self.col_start[j + 1]).map(|t| self.col_val[t] * v[self.col_row[t]]).sum()
        } else {
            v[j - self.n]
        }
    }

    fn nonbasic_state(&self, j: usize, preferred: State) -> State {
        let (l, u) = (self.lo[j], self.up[j]);
        match preferred {
            State::Upper if u.is_finite() => State::Upper,
            State::Lower if l.is_finite() => State::Lower,
            _ if l.is_finite() => State::Lower,
            _ if u.is_finite() => State::Upper,
            _ => State::Free,
        }
    }

    fn place_nonbasic(&mut self, j: usize, s: State) {
        self.state[j] = s;
        self.x[j] = match s {
            State::Lower => self.lo[j],
            State::Upper => self.up[j],
            _ => 0.0,
        };
    }

    fn init_basis(&mut self, warm: Option<&Basis>) {
        let (m, n) = (self.m, self.n);
        let mut states = vec![State::Lower; n + m];
        let mut basic = Vec::new();
        let mut used_warm = false;
        if let Some(w) = warm {
            let conv = |s: VarStatus| match s {
                VarStatus::Basic => State::Basic,
                VarStatus::AtLower => State::Lower,
                VarStatus::AtUpper => State::Upper,
                VarStatus::Free => State::Free,
            };
            for j in 0..n {
                states[j] = w.vars.get(j).copied().map_or(State::Lower, conv);
            }
            for i in 0..m {
                states[n + i] = w.rows.get(i).copied().map_or(State::Basic, conv);
            }
            basic = (0..n + m).filter(|&j| states[j] == State::Basic).collect();
            used_warm = basic.len() == m;
        }
        if !used_warm {
            for s in states.iter_mut().take(n) {
                *s = State::Lower;
            }
            for s in states.iter_mut().skip(n) {
                *s = State::Basic;
            }
            basic = (n..n + m).collect();
        }
        for j in 0..n + m {
            if states[j] == State::Basic {
                self.state[j] = State::Basic;
            } else {
                let s = self.nonbasic_state(j, states[j]);
                self.place_nonbasic(j, s);
            }
        }
        self.basis = basic;
    }

    /// Factorizes the current basis, swapping in slacks for dependent columns.
    fn refactor(&mut self) -> Result<(), LpError> {
        for _ in 0..=self.m {
            let cols: Vec<Vec<(usize, f64)>> = self.basis.iter().map(|&j| self.column(j)).collect();
            match F::factor(self.m, &cols) {
                Ok(f) => {
                    self.factor = Some(f);
                    self.recompute_basics();
                    return Ok(());
                }
                Err(Singular { positions, rows }) => {
                    for (&p, &r) in positions.iter().zip(&rows) {
                        let out = self.basis[p];
                        let slack = self.n + r;
                        let s = self.nonbasic_state(out, State::Lower);
                        self.place_nonbasic(out, s);
                        self.basis[p] = slack;
                        self.state[slack] = State::Basic;
                    }
                }
            }
        }
        Err(LpError::NumericalFailure("basis repair did not converge".into()))
    }

    fn recompute_basics(&mut self) {
        let mut rhs = self.b.clone();
        for j in 0..self.n + self.m {
            if self.state[j] == State::Basic || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            if j < self.n {
                for t in self.col_start[j]..self.col_start[j + 1] {
                    rhs[self.col_row[t]] -= self.col_val[t] * xj;
                }
            } else {
                rhs[j - self.n] -= xj;
            }
        }
        let f = self.factor.as_ref().expect("factor present");
        f.ftran(&mut rhs);
        for (p, &j) in self.basis.iter().enumerate() {
            self.x[j] = rhs[p];
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let tol = self.opts.feas_tol;
        if self.x[j] < self.lo[j] - tol {
            -1.0
        } else if self.x[j] > self.up[j] + tol {
            1.0
        } else {
            0.0
        }
    }

    fn max_iterations(&self) -> usize {
        self.opts
            .max_iterations
            .unwrap_or_else(|| (50 * (self.m + self.n)).max(20_000))
    }

    /// Simplex multipliers for the phase-1 or phase-2 costs of the basics.
    fn multipliers(&self, phase1: bool) -> Vec<f64> {
        let mut y: Vec<f64> = self
            .basis
            .iter()
            .map(|&j| if phase1 { self.infeasibility(j) } else { self.cost[j] })
            .collect();
        self.factor.as_ref().unwrap().btran(&mut y);
        y
    }

    fn eligible(&self, j: usize, d: f64) -> bool {
        match self.state[j] {
            State::Lower => d < -self.opts.opt_tol,
            State::Upper => d > self.opts.opt_tol,
            State::Free => d.abs() > self.opts.opt_tol,
            State::Basic => false,
        }
    }

    fn movable(&self, j: usize) -> bool {
        self.state[j] != State::Basic && self.lo[j] != self.up[j]
    }

    /// Phase-2 reduced costs of every nonbasic variable from scratch.
    fn price_all(&self, d: &mut [f64]) {
        let y = self.multipliers(false);
        for (j, dj) in d.iter_mut().enumerate() {
            *dj = if self.state[j] == State::Basic { 0.0 } else { self.cost[j] - self.dot_column(j, &y) };
        }
    }

    /// Pivot row `e_posᵀ B⁻¹ A` over all columns, accumulated sparsely into
    /// `row`; the touched indices land in `touched`.
    fn pivot_row(&self, pos: usize, row: &mut [f64], mark: &mut [bool], rho: &mut Vec<f64>, touched: &mut Vec<usize>) {
        rho.clear();
        rho.resize(self.m, 0.0);
        rho[pos] = 1.0;
        self.factor.as_ref().unwrap().btran(rho);
        touched.clear();
        for (i, &r) in rho.iter().enumerate() {
            if r.abs() <= 1e-14 {
                continue;
            }
            for t in self.row_start[i]..self.row_start[i + 1] {
                let j = self.row_col[t];
                if !mark[j] {
                    mark[j] = true;
                    touched.push(j);
                }
                row[j] += r * self.row_val[t];
            }
            let j = self.n + i;
            if !mark[j] {
                mark[j] = true;
                touched.push(j);
            }
            row[j] += r;
        }
    }

    fn perturb(&mut self) {
        self.saved_bounds = Some((self.lo.clone(), self.up.clone()));
        let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
        for j in 0..self.n + self.m {
            // splitmix64 stream; fixed so solves stay reproducible
            h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = h;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            let u = (z >> 11) as f64 / (1u64 << 53) as f64;
            let (l, up) = (self.lo[j], self.up[j]);
            if l == up {
                continue;
            }
            let delta = PERTURB * (1.0 + u);
            if l.is_finite() {
                self.lo[j] = l - delta * (1.0 + l.abs());
            }
            if up.is_finite() {
                self.up[j] = up + delta * (1.0 + up.abs());
            }
        }
    }

    /// Restores the original bounds and moves nonbasics back onto them.
    fn unperturb(&mut self) {
        let Some((lo, up)) = self.saved_bounds.take() else { return };
        self.lo = lo;
        self.up = up;
        for j in 0..self.n + self.m {
            if self.state[j] != State::Basic {
                let s = self.nonbasic_state(j, self.state[j]);
                self.place_nonbasic(j, s);
            }
        }
        self.recompute_basics();
    }

    fn run(mut self, warm: Option<&Basis>) -> Result<LpSolution, LpError> {
        if self.opts.perturb && !self.always_bland {
            self.perturb();
        }
        self.init_basis(warm);
        self.refactor()?;
        let total = self.n + self.m;
        let mut streak = 0usize;
        let mut bland = self.always_bland;
        let limit = self.max_iterations();
        // phase-2 state: reduced costs kept current across pivots, devex weights
        let mut d = vec![0.0; total];
        let mut weight = vec![1.0; total];
        let mut priced = false;
        let mut row = vec![0.0; total];
        let mut mark = vec![false; total];
        let mut w = Vec::with_capacity(self.m);
        let mut cands = Vec::new();
        let mut touched = Vec::new();
        let mut rho = Vec::with_capacity(self.m);
        loop {
            if self.iterations >= limit {
                return Err(LpError::IterationLimit(limit));
            }
            if self.factor.as_ref().is_some_and(|f| f.wants_refactor()) {
                self.refactor()?;
                priced = false;
            }
            let phase1 = self.basis.iter().any(|&j| self.infeasibility(j) != 0.0);
            let mut y = Vec::new();
            let mut enter: Option<(usize, f64)> = None;
            if phase1 {
                priced = false;
                y = self.multipliers(true);
                for j in 0..total {
                    if !self.movable(j) {
                        continue;
                    }
                    let dj = -self.dot_column(j, &y);
                    if !self.eligible(j, dj) {
                        continue;
                    }
                    if bland {
                        enter = Some((j, dj));
                        break;
                    }
                    if enter.is_none_or(|(_, bd)| dj.abs() > bd.abs()) {
                        enter = Some((j, dj));
                    }
                }
            } else {
                if !priced {
                    self.price_all(&mut d);
                    weight.fill(1.0);
                    priced = true;
                }
                let mut best = 0.0;
                for j in 0..total {
                    if !self.movable(j) || !self.eligible(j, d[j]) {
                        continue;
                    }
                    if bland {
                        enter = Some((j, d[j]));
                        break;
                    }
                    let score = d[j] * d[j] / weight[j];
                    if score > best {
                        best = score;
                        enter = Some((j, d[j]));
                    }
                }
            }
            let Some((q, dq)) = enter else {
                if self.factor.as_ref().unwrap().updates_since_factor() > 0 {
                    self.refactor()?;
                    priced = false;
                    continue;
                }
                if self.saved_bounds.is_some() {
                    // an infeasible widened problem means the original is too
                    if !phase1 {
                        self.unperturb();
                        priced = false;
                        continue;
                    }
                    self.unperturb();
                }
                let status = if phase1 { LpStatus::Infeasible } else { LpStatus::Optimal };
                return Ok(self.finish(status, &y));
            };
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };
            w.clear();
            w.resize(self.m, 0.0);
            if q < self.n {
                for t in self.col_start[q]..self.col_start[q + 1] {
                    w[self.col_row[t]] += self.col_val[t];
                }
            } else {
                w[q - self.n] = 1.0;
            }
            self.factor.as_ref().unwrap().ftran(&mut w);
            let (theta, step) = self.ratio_test(q, dir, &w, phase1, bland, &mut cands);
            match step {
                Step::Unbounded => {
                    if phase1 {
                        return Err(LpError::NumericalFailure("unbounded phase-1 direction".into()));
                    }
                    if self.factor.as_ref().unwrap().updates_since_factor() > 0 {
                        self.refactor()?;
                        priced = false;
                        continue;
                    }
                    self.unperturb();
                    let y = self.multipliers(false);
                    return Ok(self.finish(LpStatus::Unbounded, &y));
                }
                Step::Flip => {
                    self.apply_step(q, dir, theta, &w);
                    self.state[q] = if self.state[q] == State::Lower { State::Upper } else { State::Lower };
                    self.x[q] = if self.state[q] == State::Lower { self.lo[q] } else { self.up[q] };
                }
                Step::Pivot { pos, to } => {
                    let alpha = w[pos];
                    if alpha.abs() < self.opts.pivot_tol {
                        return Err(LpError::NumericalFailure("pivot below tolerance".into()));
                    }
                    if priced {
                        self.pivot_row(pos, &mut row, &mut mark, &mut rho, &mut touched);
                        let ratio = dq / alpha;
                        let wq = weight[q];
                        for &j in &touched {
                            let a = row[j];
                            row[j] = 0.0;
                            mark[j] = false;
                            if j == q || self.state[j] == State::Basic || a == 0.0 {
                                continue;
                            }
                            d[j] -= ratio * a;
                            let r = a / alpha;
                            weight[j] = weight[j].max(r * r * wq);
                        }
                        let out = self.basis[pos];
                        d[out] = -ratio;
                        weight[out] = (wq / (alpha * alpha)).max(1.0);
                        d[q] = 0.0;
                    }
                    self.apply_step(q, dir, theta, &w);
                    let out = self.basis[pos];
                    self.place_nonbasic(out, to);
                    self.state[q] = State::Basic;
                    self.basis[pos] = q;
                    self.factor.as_mut().unwrap().update(pos, &w);
                }
            }
            self.iterations += 1;
            if theta <= 1e-12 {
                streak += 1;
                if streak >= self.opts.degenerate_streak {
                    bland = true;
                }
            } else {
                streak = 0;
                bland = self.always_bland;
            }
        }
    }

    fn apply_step(&mut self, q: usize, dir: f64, theta: f64, w: &[f64]) {
        if theta == 0.0 {
            return;
        }
        self.x[q] += dir * theta;
        for (p, &j) in self.basis.iter().enumerate() {
            if w[p] != 0.0 {
                self.x[j] -= theta * dir * w[p];
            }
        }
    }

    /// Harris two-pass ratio test; in phase 1, infeasible basics block at the
    /// bound they currently violate.
    fn ratio_test(
        &self,
        q: usize,
        dir: f64,
        w: &[f64],
        phase1: bool,
        bland: bool,
        cands: &mut Vec<(usize, f64, f64, State)>,
    ) -> (f64, Step) {
        let tol = self.opts.feas_tol;
        let ptol = self.opts.pivot_tol;
        let harris = if bland { 0.0 } else { 0.1 * tol };
        // candidates: (pos, exact distance, |alpha|, target state)
        cands.clear();
        for (p, &j) in self.basis.iter().enumerate() {
            let alpha = dir * w[p];
            if alpha.abs() <= ptol {
                continue;
            }
            let xj = self.x[j];
            let (l, u) = (self.lo[j], self.up[j]);
            let below = xj < l - tol;
            let above = xj > u + tol;
            if alpha > 0.0 {
                // decreasing
                if above && phase1 {
                    cands.push((p, xj - u, alpha, State::Upper));
                } else if !below && l.is_finite() {
                    cands.push((p, xj - l, alpha, State::Lower));
                }
            } else {
                // increasing
                if below && phase1 {
                    cands.push((p, l - xj, -alpha, State::Lower));
                } else if !above && u.is_finite() {
                    cands.push((p, u - xj, -alpha, State::Upper));
                }
            }
        }
        let flip = self.up[q] - self.lo[q];
        if cands.is_empty() {
            if flip.is_finite() {
                return (flip, Step::Flip);
            }
            return (f64::INFINITY, Step::Unbounded);
        }
        let choice = if bland {
            let min = cands.iter().map(|c| c.1.max(0.0) / c.2).fold(f64::INFINITY, f64::min);
            cands
                .iter()
                .filter(|c| c.1.max(0.0) / c.2 <= min + 1e-12)
                .min_by_key(|c| self.basis[c.0])
                .copied()
                .unwrap()
        } else {
            let bound = cands.iter().map(|c| (c.1 + harris) / c.2).fold(f64::INFINITY, f64::min);
            cands
                .iter()
                .filter(|c| c.1 / c.2 <= bound)
                .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0)))
                .copied()
                .unwrap()
        };
        let theta = (choice.1 / choice.2).max(0.0);
        if flip.is_finite() && flip <= theta {
            return (flip, Step::Flip);
        }
        (theta, Step::Pivot { pos: choice.0, to: choice.3 })
    }

    fn finish(mut self, status: LpStatus, phase_duals: &[f64]) -> LpSolution {
        let (n, m) = (self.n, self.m);
        for j in 0..n + m {
            match self.state[j] {
                State::Lower => self.x[j] = self.lo[j],
                State::Upper => self.x[j] = self.up[j],
                _ => {}
            }
        }
        let duals: Vec<f64> = if status == LpStatus::Optimal {
            let mut y: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
            self.factor.as_ref().unwrap().btran(&mut y);
            y
        } else {
            phase_duals.to_vec()
        };
        let x: Vec<f64> = self.x[..n].to_vec();
        let reduced: Vec<f64> = (0..n).map(|j| self.cost[j] - self.dot_column(j, &duals)).collect();
        let objective = self.lp.evaluate(&x);
        let primal_residual = self.lp.primal_residual(&x);
        let (dual_objective, cs_residual) = if status == LpStatus::Optimal {
            dual_certificate(self.lp, &x, &duals, &reduced, self.opts.opt_tol)
        } else {
            (f64::NAN, f64::NAN)
        };
        let conv = |s: State| match s {
            State::Basic => VarStatus::Basic,
            State::Lower => VarStatus::AtLower,
            State::Upper => VarStatus::AtUpper,
            State::Free => VarStatus::Free,
        };
        let basis = Basis {
            vars: self.state[..n].iter().map(|&s| conv(s)).collect(),
            rows: self.state[n..].iter().map(|&s| conv(s)).collect(),
        };
        LpSolution {
            status,
            x,
            duals,
            reduced_costs: reduced,
            objective,
            dual_objective,
            primal_residual,
            cs_residual,
            iterations: self.iterations,
            basis,
        }
    }
}
