//! Dense-tableau bounded-variable simplex.
//!
//! Every row `i` of the model gets a logical variable `r_i` so the system
//! reads `A x - r = 0`, with the row sense folded into the bounds of `r_i`.
//! All variables then carry simple bounds and the tableau stores
//! `B⁻¹ [A | -I]`. The engine runs a composite two-phase primal simplex
//! (phase one minimizes the sum of bound violations of the basic
//! variables) and a dual simplex used to re-optimize after bound changes
//! during branch-and-bound.

use super::model::{ConstraintSense, MilpModel, ObjectiveSense, ToleranceConfig};

const PIVOT_TOL: f64 = 1e-7;
/// Pivot rows with entries beyond this trigger a refactorization.
const GROWTH_LIMIT: f64 = 1e9;
const REFACTOR_EVERY: usize = 1000;
const DROP_TOL: f64 = 1e-14;
const DEGENERATE_STEP: f64 = 1e-12;
const BLAND_AFTER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable held at zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
    Failure,
}

pub(crate) struct SimplexEngine {
    m: usize,
    n: usize,
    n_struct: usize,
    a: Vec<f64>,
    /// Original structural rows, kept for refactorization and residual checks.
    rows: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    d: Vec<f64>,
    d_valid: bool,
    basis: Vec<usize>,
    state: Vec<State>,
    ftol: f64,
    otol: f64,
    iteration_limit: usize,
    /// Objective multiplier: +1 for minimize, -1 for maximize (engine always minimizes).
    sign: f64,
    /// Internal costs are divided by the largest |c_j| so the optimality
    /// tolerance means the same thing for every objective scale.
    cost_scale: f64,
    /// Structural `j` is stored as `x_j / col_scale[j]`.
    col_scale: Vec<f64>,
    obj_constant: f64,
    pub(crate) iterations: usize,
    pivots_since_refactor: usize,
    unstable: bool,
}

impl SimplexEngine {
    pub(crate) fn new(model: &MilpModel, tol: &ToleranceConfig) -> Self {
        let m = model.constraints.len();
        let n_struct = model.variables.len();
        let n = n_struct + m;
        let sign = match model.sense {
            ObjectiveSense::Minimize => 1.0,
            ObjectiveSense::Maximize => -1.0,
        };

        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for v in &model.variables {
            lo.push(v.lower);
            hi.push(v.upper);
        }
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        for c in &model.constraints {
            let (l, h) = match c.sense {
                ConstraintSense::Le => (f64::NEG_INFINITY, c.rhs),
                ConstraintSense::Ge => (c.rhs, f64::INFINITY),
                ConstraintSense::Eq => (c.rhs, c.rhs),
            };
            // power-of-two equilibration keeps the scaled data exact
            let rmax = c.terms.iter().fold(0.0f64, |m, &(_, coef)| m.max(coef.abs()));
            let scale = if rmax > 0.0 && rmax.is_finite() { (-rmax.log2().round()).exp2() } else { 1.0 };
            lo.push(l * scale);
            hi.push(h * scale);
            rows.push(c.terms.iter().map(|&(v, coef)| (v.0, coef * scale)).collect());
        }

        // column equilibration after the rows, again by powers of two
        let mut cmax_col = vec![0.0f64; n_struct];
        for row in &rows {
            for &(j, c) in row {
                cmax_col[j] = cmax_col[j].max(c.abs());
            }
        }
        let col_scale: Vec<f64> = cmax_col
            .iter()
            .map(|&c| if c > 0.0 && c.is_finite() { (-c.log2().round()).clamp(-30.0, 30.0).exp2() } else { 1.0 })
            .collect();
        for row in &mut rows {
            for (j, c) in row.iter_mut() {
                *c *= col_scale[*j];
            }
        }
        for j in 0..n_struct {
            lo[j] /= col_scale[j];
            hi[j] /= col_scale[j];
        }

        let mut cost = vec![0.0; n];
        for &(v, c) in &model.objective.terms {
            cost[v.0] += sign * c * col_scale[v.0];
        }
        let cmax = cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let cost_scale = if cmax > 0.0 && cmax.is_finite() { 1.0 / cmax } else { 1.0 };
        cost.iter_mut().for_each(|c| *c *= cost_scale);

        let mut engine = Self {
            m,
            n,
            n_struct,
            a: vec![0.0; m * n],
            rows,
            lo,
            hi,
            cost,
            x: vec![0.0; n],
            d: vec![0.0; n],
            d_valid: false,
            basis: Vec::new(),
            state: vec![State::Lower; n],
            ftol: tol.feasibility_tol,
            otol: tol.optimality_tol,
            iteration_limit: tol.iteration_limit,
            sign,
            cost_scale,
            col_scale,
            obj_constant: model.objective.constant,
            iterations: 0,
            pivots_since_refactor: 0,
            unstable: false,
        };
        engine.slack_basis();
        engine
    }

    /// Reset to the all-logical basis with structurals at a finite bound.
    fn slack_basis(&mut self) {
        let (m, n, ns) = (self.m, self.n, self.n_struct);
        self.a.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, c) in row {
                self.a[i * n + j] = -c;
            }
            self.a[i * n + ns + i] = 1.0;
        }
        self.basis = (ns..n).collect();
        for j in 0..ns {
            let (s, v) = Self::resting_place(self.lo[j], self.hi[j]);
            self.state[j] = s;
            self.x[j] = v;
        }
        for i in 0..m {
            self.state[ns + i] = State::Basic;
        }
        self.recompute_basic_values();
        self.d_valid = false;
        self.pivots_since_refactor = 0;
    }

    fn resting_place(lo: f64, hi: f64) -> (State, f64) {
        if lo.is_finite() {
            (State::Lower, lo)
        } else if hi.is_finite() {
            (State::Upper, hi)
        } else {
            (State::Zero, 0.0)
        }
    }

    fn recompute_basic_values(&mut self) {
        let n = self.n;
        let mut xb = vec![0.0; self.m];
        for j in 0..n {
            if self.state[j] == State::Basic || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            for (i, v) in xb.iter_mut().enumerate() {
                let a = self.a[i * n + j];
                if a != 0.0 {
                    *v -= a * xj;
                }
            }
        }
        for (i, &b) in self.basis.iter().enumerate() {
            self.x[b] = xb[i];
        }
    }

    fn compute_reduced_costs(&mut self) {
        let n = self.n;
        self.d.copy_from_slice(&self.cost);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = self.cost[b];
            if cb == 0.0 {
                continue;
            }
            let row = &self.a[i * n..(i + 1) * n];
            for (dj, &aij) in self.d.iter_mut().zip(row) {
                if aij != 0.0 {
                    *dj -= cb * aij;
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
        self.d_valid = true;
    }

    /// Gauss-Jordan pivot on `(r, q)`; updates tableau and reduced costs.
    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.n;
        let piv = self.a[r * n + q];
        let inv = 1.0 / piv;
        let mut nz: Vec<(usize, f64)> = Vec::new();
        {
            let row = &mut self.a[r * n..(r + 1) * n];
            for (j, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        if v.abs() > GROWTH_LIMIT {
                            self.unstable = true;
                        }
                        nz.push((j, *v));
                    }
                }
            }
            row[q] = 1.0;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * n + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * n..(i + 1) * n];
            for &(j, v) in &nz {
                let nv = row[j] - f * v;
                row[j] = if nv.abs() < DROP_TOL { 0.0 } else { nv };
            }
            row[q] = 0.0;
        }
        let f = self.d[q];
        if f != 0.0 {
            for &(j, v) in &nz {
                self.d[j] -= f * v;
            }
        }
        self.d[q] = 0.0;

        let leaving = self.basis[r];
        self.basis[r] = q;
        self.state[q] = State::Basic;
        // Caller overwrites the leaving state with the bound it stops at.
        if self.state[leaving] == State::Basic {
            self.state[leaving] = State::Lower;
        }
        self.iterations += 1;
        self.pivots_since_refactor += 1;
    }

    fn tol_for(&self, bound: f64) -> f64 {
        self.ftol * (1.0 + bound.abs()).min(1e3)
    }

    fn below(&self, j: usize) -> bool {
        self.x[j] < self.lo[j] - self.tol_for(self.lo[j])
    }

    fn above(&self, j: usize) -> bool {
        self.x[j] > self.hi[j] + self.tol_for(self.hi[j])
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lo[j] == self.hi[j]
    }

    /// Shift nonbasic `j` to `value`, propagating to the basic variables.
    fn move_nonbasic(&mut self, j: usize, value: f64) {
        let delta = value - self.x[j];
        self.x[j] = value;
        if delta == 0.0 {
            return;
        }
        let n = self.n;
        for i in 0..self.m {
            let a = self.a[i * n + j];
            if a != 0.0 {
                let b = self.basis[i];
                self.x[b] -= a * delta;
            }
        }
    }

    /// Change the bounds of a structural variable, keeping the basis.
    pub(crate) fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        let (lo, hi) = (lo / self.col_scale[j], hi / self.col_scale[j]);
        self.lo[j] = lo;
        self.hi[j] = hi;
        match self.state[j] {
            State::Basic => {}
            State::Lower if lo.is_finite() => self.move_nonbasic(j, lo),
            State::Upper if hi.is_finite() => self.move_nonbasic(j, hi),
            _ => {
                let (s, v) = Self::resting_place(lo, hi);
                self.state[j] = s;
                self.move_nonbasic(j, v);
            }
        }
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.n {
            let dir = match self.state[j] {
                State::Basic => continue,
                _ if self.is_fixed(j) => continue,
                State::Lower if self.d[j] < -self.otol => 1.0,
                State::Upper if self.d[j] > self.otol => -1.0,
                State::Zero if self.d[j].abs() > self.otol => -self.d[j].signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            let score = self.d[j].abs();
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    /// Primal simplex from the current basis. Phase one runs while any basic
    /// variable violates its bounds.
    pub(crate) fn primal(&mut self) -> LpOutcome {
        let (m, n) = (self.m, self.n);
        let mut phase_one = true;
        let mut infeas_cost = vec![0.0; m];
        let mut degenerate = 0usize;
        let mut bland = false;
        let start = self.iterations;

        loop {
            if self.iterations - start > self.iteration_limit {
                return LpOutcome::Failure;
            }
            if self.unstable || self.pivots_since_refactor > REFACTOR_EVERY {
                if !self.refactor() {
                    return LpOutcome::Failure;
                }
                if !phase_one {
                    // a drifted basis may have lost primal feasibility
                    phase_one = true;
                }
            }
            if phase_one {
                let mut any = false;
                for r in 0..m {
                    let b = self.basis[r];
                    infeas_cost[r] = if self.below(b) {
                        any = true;
                        -1.0
                    } else if self.above(b) {
                        any = true;
                        1.0
                    } else {
                        0.0
                    };
                }
                if !any {
                    phase_one = false;
                    self.compute_reduced_costs();
                    degenerate = 0;
                    bland = false;
                    continue;
                }
                self.d.iter_mut().for_each(|v| *v = 0.0);
                for r in 0..m {
                    let c = infeas_cost[r];
                    if c == 0.0 {
                        continue;
                    }
                    let row = &self.a[r * n..(r + 1) * n];
                    for (dj, &arj) in self.d.iter_mut().zip(row) {
                        if arj != 0.0 {
                            *dj -= c * arj;
                        }
                    }
                }
                for &b in &self.basis {
                    self.d[b] = 0.0;
                }
                self.d_valid = false;
            } else if !self.d_valid {
                self.compute_reduced_costs();
            }

            let Some((q, dir)) = self.choose_entering(bland) else {
                return if phase_one { LpOutcome::Infeasible } else { LpOutcome::Optimal };
            };

            // Ratio test, two passes (Harris): relaxed bound first, then the
            // largest pivot among rows within the relaxed step.
            let flip = self.hi[q] - self.lo[q];
            let mut relaxed = f64::INFINITY;
            let mut limits: Vec<(usize, f64, f64, f64)> = Vec::new(); // row, exact step, |alpha|, target
            for r in 0..m {
                let alpha = self.a[r * n + q];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let g = -dir * alpha;
                let b = self.basis[r];
                let v = self.x[b];
                let (target, dist) = if g > 0.0 {
                    if phase_one && self.below(b) {
                        (self.lo[b], self.lo[b] - v)
                    } else if phase_one && self.above(b) {
                        continue;
                    } else if self.hi[b].is_finite() {
                        (self.hi[b], self.hi[b] - v)
                    } else {
                        continue;
                    }
                } else if phase_one && self.above(b) {
                    (self.hi[b], v - self.hi[b])
                } else if phase_one && self.below(b) {
                    continue;
                } else if self.lo[b].is_finite() {
                    (self.lo[b], v - self.lo[b])
                } else {
                    continue;
                };
                let rate = g.abs();
                let exact = dist.max(0.0) / rate;
                let loose = (dist.max(0.0) + self.tol_for(target)) / rate;
                relaxed = relaxed.min(loose);
                limits.push((r, exact, rate, target));
            }

            let mut chosen: Option<(usize, f64, f64)> = None; // row, step, target
            let mut chosen_key = (f64::NEG_INFINITY, usize::MAX);
            for &(r, exact, rate, target) in &limits {
                if exact > relaxed {
                    continue;
                }
                let key = if bland {
                    (0.0, self.basis[r])
                } else {
                    (rate, self.basis[r])
                };
                let better = if bland {
                    key.1 < chosen_key.1
                } else {
                    key.0 > chosen_key.0 || (key.0 == chosen_key.0 && key.1 < chosen_key.1)
                };
                if chosen.is_none() || better {
                    chosen = Some((r, exact, target));
                    chosen_key = key;
                }
            }

            let step_to_row = chosen.map(|c| c.1).unwrap_or(f64::INFINITY);
            if flip.is_finite() && flip <= step_to_row {
                // bound flip, no basis change
                let new_val = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                self.state[q] = if dir > 0.0 { State::Upper } else { State::Lower };
                self.move_nonbasic(q, new_val);
                self.iterations += 1;
                degenerate = 0;
                bland = false;
                continue;
            }
            let Some((r, step, target)) = chosen else {
                return if phase_one { LpOutcome::Failure } else { LpOutcome::Unbounded };
            };

            let delta = dir * step;
            self.x[q] += delta;
            for i in 0..m {
                let alpha = self.a[i * n + q];
                if alpha != 0.0 {
                    let b = self.basis[i];
                    self.x[b] -= alpha * delta;
                }
            }
            let leaving = self.basis[r];
            self.x[leaving] = target;
            self.pivot(r, q);
            self.state[leaving] = if target == self.hi[leaving] && target != self.lo[leaving] {
                State::Upper
            } else {
                State::Lower
            };

            if step < DEGENERATE_STEP {
                degenerate += 1;
                if degenerate > BLAND_AFTER {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
        }
    }

    /// Dual simplex; requires a dual-feasible basis.
    fn dual(&mut self) -> LpOutcome {
        let (m, n) = (self.m, self.n);
        let start = self.iterations;
        loop {
            if self.iterations - start > self.iteration_limit {
                return LpOutcome::Failure;
            }
            if self.unstable && !self.refactor() {
                return LpOutcome::Failure;
            }
            // leaving row: largest bound violation, lowest row on ties
            let mut leave: Option<(usize, bool, f64)> = None;
            let mut worst = 0.0;
            for r in 0..m {
                let b = self.basis[r];
                let (viol, below) = if self.below(b) {
                    (self.lo[b] - self.x[b], true)
                } else if self.above(b) {
                    (self.x[b] - self.hi[b], false)
                } else {
                    continue;
                };
                if viol > worst {
                    worst = viol;
                    leave = Some((r, below, viol));
                }
            }
            let Some((r, below, _)) = leave else {
                return LpOutcome::Optimal;
            };
            let row = &self.a[r * n..(r + 1) * n];

            // entering column: x_B(r) moves by -alpha * dx_j
            let mut relaxed = f64::INFINITY;
            let mut cands: Vec<(usize, f64, f64)> = Vec::new(); // j, ratio, |alpha|
            for j in 0..n {
                let alpha = row[j];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let st = self.state[j];
                if st == State::Basic || self.is_fixed(j) {
                    continue;
                }
                let eligible = match (st, below) {
                    (State::Lower, true) => alpha < 0.0,
                    (State::Upper, true) => alpha > 0.0,
                    (State::Lower, false) => alpha > 0.0,
                    (State::Upper, false) => alpha < 0.0,
                    (State::Zero, _) => true,
                    (State::Basic, _) => false,
                };
                if !eligible {
                    continue;
                }
                let dj = match st {
                    State::Lower => self.d[j].max(0.0),
                    State::Upper => (-self.d[j]).max(0.0),
                    _ => self.d[j].abs(),
                };
                let rate = alpha.abs();
                relaxed = relaxed.min((dj + self.otol) / rate);
                cands.push((j, dj / rate, rate));
            }
            let mut entering: Option<(usize, f64)> = None;
            for &(j, ratio, rate) in &cands {
                if ratio > relaxed {
                    continue;
                }
                match entering {
                    Some((_, best)) if rate <= best => {}
                    _ => entering = Some((j, rate)),
                }
            }
            let Some((q, _)) = entering else {
                return LpOutcome::Infeasible;
            };

            let leaving = self.basis[r];
            let target = if below { self.lo[leaving] } else { self.hi[leaving] };
            let alpha_rq = self.a[r * n + q];
            let dq = (self.x[leaving] - target) / alpha_rq;
            self.x[q] += dq;
            for i in 0..m {
                let alpha = self.a[i * n + q];
                if alpha != 0.0 {
                    let b = self.basis[i];
                    self.x[b] -= alpha * dq;
                }
            }
            self.x[leaving] = target;
            self.pivot(r, q);
            self.state[leaving] = if below { State::Lower } else { State::Upper };
            if self.is_fixed(leaving) {
                self.state[leaving] = State::Lower;
            }
        }
    }

    /// Re-optimize after bound changes: restore dual feasibility by bound
    /// flips, run the dual simplex, then finish with the primal method.
    pub(crate) fn reoptimize(&mut self) -> LpOutcome {
        if self.pivots_since_refactor > 4 * self.m.max(50) && !self.refactor() {
            self.slack_basis();
        }
        if !self.d_valid {
            self.compute_reduced_costs();
        }
        let mut dual_ok = true;
        for j in 0..self.n {
            let st = self.state[j];
            if st == State::Basic {
                continue;
            }
            if self.is_fixed(j) {
                if self.x[j] != self.lo[j] {
                    self.move_nonbasic(j, self.lo[j]);
                }
                continue;
            }
            let dj = self.d[j];
            match st {
                State::Lower if dj < -self.otol => {
                    if self.hi[j].is_finite() {
                        self.state[j] = State::Upper;
                        self.move_nonbasic(j, self.hi[j]);
                    } else {
                        dual_ok = false;
                    }
                }
                State::Upper if dj > self.otol => {
                    if self.lo[j].is_finite() {
                        self.state[j] = State::Lower;
                        self.move_nonbasic(j, self.lo[j]);
                    } else {
                        dual_ok = false;
                    }
                }
                State::Zero if dj.abs() > self.otol => dual_ok = false,
                _ => {}
            }
        }
        if dual_ok {
            match self.dual() {
                LpOutcome::Infeasible => return LpOutcome::Infeasible,
                LpOutcome::Optimal | LpOutcome::Failure | LpOutcome::Unbounded => {}
            }
        }
        self.primal()
    }

    /// Rebuild `B⁻¹[A | -I]` from the original rows for the current basis.
    /// Returns false when the basis is numerically singular.
    pub(crate) fn refactor(&mut self) -> bool {
        let (m, n, ns) = (self.m, self.n, self.n_struct);
        let mut a = vec![0.0; m * n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, c) in row {
                a[i * n + j] = c;
            }
            a[i * n + ns + i] = -1.0;
        }
        let old_basis = self.basis.clone();
        std::mem::swap(&mut self.a, &mut a);
        let mut assigned = vec![false; m];
        let mut new_basis = vec![usize::MAX; m];
        let saved_d = std::mem::take(&mut self.d);
        self.d = vec![0.0; n];
        for &col in &old_basis {
            let mut best = None;
            let mut best_abs = 1e-9;
            for i in 0..m {
                if assigned[i] {
                    continue;
                }
                let v = self.a[i * n + col].abs();
                if v > best_abs {
                    best_abs = v;
                    best = Some(i);
                }
            }
            let Some(p) = best else {
                self.a = a;
                self.d = saved_d;
                self.basis = old_basis;
                return false;
            };
            assigned[p] = true;
            new_basis[p] = col;
            self.pivot_plain(p, col);
        }
        self.basis = new_basis;
        for &b in &self.basis {
            self.state[b] = State::Basic;
        }
        self.recompute_basic_values();
        self.compute_reduced_costs();
        self.pivots_since_refactor = 0;
        self.unstable = false;
        true
    }

    fn pivot_plain(&mut self, r: usize, q: usize) {
        let n = self.n;
        let inv = 1.0 / self.a[r * n + q];
        let mut nz = Vec::new();
        for j in 0..n {
            let v = &mut self.a[r * n + j];
            if *v != 0.0 {
                *v *= inv;
                nz.push((j, *v));
            }
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * n + q];
            if f == 0.0 {
                continue;
            }
            for &(j, v) in &nz {
                self.a[i * n + j] -= f * v;
            }
            self.a[i * n + q] = 0.0;
        }
    }

    /// Largest violation of `A x = r` measured against the original rows,
    /// relative to the magnitude of each row's terms.
    pub(crate) fn row_residual(&self) -> f64 {
        let ns = self.n_struct;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let (act, mag) = row.iter().fold((0.0, 0.0), |(a, m), &(j, c)| {
                    let v = c * self.x[j];
                    (a + v, m + v.abs())
                });
                (act - self.x[ns + i]).abs() / (1.0 + mag)
            })
            .fold(0.0, f64::max)
    }

    /// Largest bound violation over all variables, in units of the
    /// per-bound feasibility tolerance.
    pub(crate) fn bound_violation(&self) -> f64 {
        (0..self.n)
            .map(|j| {
                let below = (self.lo[j] - self.x[j]) / self.tol_for(self.lo[j]);
                let above = (self.x[j] - self.hi[j]) / self.tol_for(self.hi[j]);
                below.max(above).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    pub(crate) fn values(&self) -> Vec<f64> {
        self.x[..self.n_struct].iter().zip(&self.col_scale).map(|(x, s)| x * s).collect()
    }

    /// Objective in the model's own sense, including its constant.
    pub(crate) fn objective(&self) -> f64 {
        let internal: f64 = (0..self.n_struct).map(|j| self.cost[j] * self.x[j]).sum();
        self.sign * internal / self.cost_scale + self.obj_constant
    }

    /// Row duals `y = c_B B⁻¹` read off the logical columns, and reduced
    /// costs of every column recomputed from the original rows.
    fn duals(&self) -> (Vec<f64>, Vec<f64>) {
        let (m, n, ns) = (self.m, self.n, self.n_struct);
        let mut y = vec![0.0; m];
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = self.cost[b];
            if cb == 0.0 {
                continue;
            }
            for (i, yi) in y.iter_mut().enumerate() {
                *yi -= cb * self.a[r * n + ns + i];
            }
        }
        let mut d = self.cost.clone();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, c) in row {
                d[j] -= y[i] * c;
            }
        }
        d[ns..].copy_from_slice(&y);
        (y, d)
    }

    /// Objective of the bounded dual for the final basis, summing `d_j x_j`
    /// over nonbasic columns. Returned in the model's sense.
    pub(crate) fn dual_objective(&self) -> f64 {
        let (_, d) = self.duals();
        let total: f64 = (0..self.n).filter(|&j| self.state[j] != State::Basic).map(|j| d[j] * self.x[j]).sum();
        self.sign * total / self.cost_scale + self.obj_constant
    }

    /// Largest reduced cost with the wrong sign for its nonbasic state, in
    /// scaled cost units.
    pub(crate) fn dual_infeasibility(&self) -> f64 {
        let (_, d) = self.duals();
        (0..self.n)
            .filter(|&j| self.state[j] != State::Basic && !self.is_fixed(j))
            .map(|j| match self.state[j] {
                State::Lower => (-d[j]).max(0.0),
                State::Upper => d[j].max(0.0),
                _ => d[j].abs(),
            })
            .fold(0.0, f64::max)
    }
}
