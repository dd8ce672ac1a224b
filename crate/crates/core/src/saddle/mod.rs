//! Max over primal points of the infimum over the dual family.
//!
//! The inner infimum is solved exactly per primal point (see [`inner`]). The
//! outer maximization of the resulting concave function runs away-step
//! Frank-Wolfe over the program's linear system with a derivative line
//! search; its duality gap is the stopping rule.

pub mod inner;

use serde::{Deserialize, Serialize};

use crate::error::{NswError, Result};
use crate::matroid::Matroid;
use crate::relaxation::{
    agent_sums, feasible, log_objective, Constraint, DualPoint, FractionalSolution, ProgramSpec,
};
pub use inner::{Blocker, InnerOutcome, InnerSolver};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Frank-Wolfe iterations.
    pub outer_iters: usize,
    /// Coordinate/Newton passes per inner solve.
    pub inner_iters: usize,
    /// Bisection steps per line search.
    pub line_search_iters: usize,
    /// Target duality gap in log units.
    pub tol: f64,
    /// Recorded for reproducibility; the solver itself is deterministic.
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            outer_iters: 2000,
            inner_iters: 500,
            line_search_iters: 40,
            tol: 1e-4,
            seed: 0,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(NswError::input(format!(
                "tol = {} must be positive",
                self.tol
            )));
        }
        if self.outer_iters == 0 || self.inner_iters == 0 || self.line_search_iters == 0 {
            return Err(NswError::input("iteration counts must be at least 1"));
        }
        Ok(())
    }

    fn push_tol(&self) -> f64 {
        self.tol / 10.0
    }
}

/// Result of [`inner_inf`].
#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub dual: DualPoint,
    /// Log objective at `dual`, within `cfg.tol` of the infimum; `-inf` when
    /// the infimum is unbounded below.
    pub value: f64,
    pub blocker: Option<Blocker>,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub value_log: f64,
    pub best_log: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub solution: FractionalSolution,
    pub dual: DualPoint,
    pub value_log: f64,
    pub value_product: f64,
    pub value_nsw: f64,
    pub trace: Vec<TracePoint>,
    /// Frank-Wolfe gap at the returned point (upper bound on the remaining
    /// improvement, up to the inner tolerance).
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: Vec<String>,
}

/// Infimum of the log objective over the dual family at a fixed primal point.
pub fn inner_inf(
    program: &ProgramSpec,
    sol: &FractionalSolution,
    cfg: &SolveConfig,
) -> Result<InnerResult> {
    cfg.validate()?;
    let a = program.coefficient_matrix(sol);
    let out = InnerSolver::new().solve(&a, program.m, cfg.inner_iters, cfg.push_tol());
    Ok(inner_result(out))
}

/// Infimum for the product polynomial with coefficient matrix `a` directly.
pub fn inner_inf_matrix(a: &[Vec<f64>], cfg: &SolveConfig) -> Result<InnerResult> {
    cfg.validate()?;
    let m = a.first().map_or(0, Vec::len);
    if a.iter().any(|r| r.len() != m) {
        return Err(NswError::input("coefficient matrix rows differ in length"));
    }
    if let Some(v) = a.iter().flatten().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(NswError::input(format!(
            "coefficient {v} must be finite and nonnegative"
        )));
    }
    let out = InnerSolver::new().solve(a, m, cfg.inner_iters, cfg.push_tol());
    Ok(inner_result(out))
}

fn inner_result(out: InnerOutcome) -> InnerResult {
    InnerResult {
        dual: DualPoint { log_y: out.log_y },
        value: out.value,
        blocker: out.blocker,
        converged: out.converged,
    }
}

/// `d/d values[v]` of the log objective: `weight * y_j / (agent's inner sum)`
/// summed over the variable's terms. At an optimal dual this is a
/// supergradient of the inner value.
pub fn primal_supergradient(
    program: &ProgramSpec,
    sol: &FractionalSolution,
    dual: &DualPoint,
) -> Result<Vec<f64>> {
    let sums = agent_sums(program, sol, dual);
    if let Some(i) = sums.iter().position(|s| !(*s > 0.0)) {
        return Err(NswError::input(format!(
            "agent {i} has a nonpositive inner sum"
        )));
    }
    let mut g = vec![0.0; program.vars.len()];
    for t in &program.objective {
        g[t.var] += t.weight * dual.log_y[t.item].exp() / sums[t.agent];
    }
    Ok(g)
}

/// Variables that must be zero because they load a loop of some polytope matroid.
fn forced_zero(program: &ProgramSpec) -> Vec<bool> {
    let mut zero = vec![false; program.vars.len()];
    for c in &program.constraints {
        if let Constraint::Polytope {
            matroid,
            aggregates,
            ..
        } = c
        {
            let mat: &Matroid = &program.matroids[*matroid];
            for (e, vars) in aggregates.iter().enumerate() {
                if mat.rank(&[e]).unwrap_or(0) == 0 {
                    for &v in vars {
                        zero[v] = true;
                    }
                }
            }
        }
    }
    zero
}

/// Uniform start `alpha * min(1/n, 1/m)` on every variable not pinned at
/// zero, with the largest feasible `alpha` found by bisection.
pub fn initial_point(program: &ProgramSpec) -> FractionalSolution {
    let zero = forced_zero(program);
    let base = 1.0 / (program.n.max(program.m).max(1)) as f64;
    let point = |alpha: f64| {
        let mut s = FractionalSolution::new(
            zero.iter()
                .map(|&z| if z { 0.0 } else { alpha * base })
                .collect(),
        );
        s.feasibility_tol = 1e-12;
        s
    };
    if feasible(program, &point(1.0)).is_ok() {
        return FractionalSolution::new(point(1.0).values);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(program, &point(mid)).is_ok() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    FractionalSolution::new(point(lo).values)
}

struct Evaluator<'a> {
    program: &'a ProgramSpec,
    solver: InnerSolver,
    cfg: &'a SolveConfig,
}

struct Eval {
    value: f64,
    dual: DualPoint,
    grad: Option<Vec<f64>>,
}

impl Evaluator<'_> {
    fn eval(&mut self, x: &[f64]) -> Eval {
        let sol = FractionalSolution::new(x.to_vec());
        let a = self.program.coefficient_matrix(&sol);
        let out = self.solver.solve(
            &a,
            self.program.m,
            self.cfg.inner_iters,
            self.cfg.push_tol(),
        );
        let dual = DualPoint { log_y: out.log_y };
        let grad = if out.value.is_finite() {
            primal_supergradient(self.program, &sol, &dual).ok()
        } else {
            None
        };
        Eval {
            value: out.value,
            dual,
            grad,
        }
    }
}

/// Upper bound on the maximum from two supergradient inequalities
/// `V(y) <= v_k + g_k.(y - x_k)`: minimize over the mixing weight the LP
/// maximum of their convex combination. The bound is convex and piecewise
/// linear in the weight, so a ternary search suffices.
fn bundle_bound(
    program: &ProgramSpec,
    a: (f64, &[f64], &[f64]),
    b: (f64, &[f64], &[f64]),
) -> Result<f64> {
    let bound = |lam: f64| -> Result<f64> {
        let g: Vec<f64> =
            a.2.iter()
                .zip(b.2)
                .map(|(p, q)| lam * p + (1.0 - lam) * q)
                .collect();
        let s = program.lp_maximize(&g)?;
        Ok(lam * (a.0 + dot(a.2, &s) - dot(a.2, a.1))
            + (1.0 - lam) * (b.0 + dot(b.2, &s) - dot(b.2, b.1)))
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut best = bound(0.0)?.min(bound(1.0)?);
    for _ in 0..30 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        let (f1, f2) = (bound(m1)?, bound(m2)?);
        best = best.min(f1).min(f2);
        if f1 <= f2 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    Ok(best)
}

/// Mix `point` into the convex combination with weight `gamma`.
fn add_atom(atoms: &mut Vec<(Vec<f64>, f64)>, point: &[f64], gamma: f64) {
    for atom in atoms.iter_mut() {
        atom.1 *= 1.0 - gamma;
    }
    match atoms
        .iter_mut()
        .find(|(a, _)| a.iter().zip(point).all(|(p, q)| (p - q).abs() < 1e-9))
    {
        Some(atom) => atom.1 += gamma,
        None => atoms.push((point.to_vec(), gamma)),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn zero_result(program: &ProgramSpec, solution: FractionalSolution, diag: String) -> SolveResult {
    SolveResult {
        solution,
        dual: DualPoint::zeros(program.m),
        value_log: f64::NEG_INFINITY,
        value_product: 0.0,
        value_nsw: 0.0,
        trace: Vec::new(),
        gap: 0.0,
        iterations: 0,
        converged: true,
        diagnostics: vec![diag],
    }
}

/// Solve the relaxation to duality gap `cfg.tol`.
pub fn solve(program: &ProgramSpec, cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let n = program.n;
    let degenerate = program.degenerate_agents();
    if !degenerate.is_empty() {
        return Ok(zero_result(
            program,
            FractionalSolution::zeros(program),
            format!("agents {degenerate:?} have only zero weights; product value is 0"),
        ));
    }
    let start = initial_point(program);
    let ones = FractionalSolution::new(vec![1.0; program.vars.len()]);
    let mut ev = Evaluator {
        program,
        solver: InnerSolver::with_cap(program.coefficient_matrix(&ones)),
        cfg,
    };
    let mut cur = ev.eval(&start.values);
    if !cur.value.is_finite() {
        let a = program.coefficient_matrix(&start);
        let why = match InnerSolver::new().solve(&a, program.m, 1, 0.0).blocker {
            Some(Blocker::ZeroRow { agent }) => format!("agent {agent} can receive no valued item"),
            Some(Blocker::Hall { agents }) => {
                format!("agents {agents:?} compete for fewer valued items than their number")
            }
            None => "inner infimum is unbounded".to_string(),
        };
        return Ok(zero_result(
            program,
            start,
            format!("{why}; product value is 0"),
        ));
    }

    let mut x = start.values.clone();
    let mut atoms: Vec<(Vec<f64>, f64)> = vec![(x.clone(), 1.0)];
    let mut trace = Vec::new();
    let mut best = cur.value;
    let mut best_state = (x.clone(), cur.dual.clone());
    let mut gap = f64::INFINITY;
    let mut converged = false;
    let mut stalls = 0;
    let mut upper = f64::INFINITY;
    let mut prev: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut diagnostics = Vec::new();

    for it in 0..cfg.outer_iters {
        iterations = it + 1;
        let grad = cur.grad.clone().expect("finite value has a gradient");
        let s = program.lp_maximize(&grad)?;
        upper = upper.min(cur.value + dot(&grad, &s) - dot(&grad, &x));
        if stalls > 0 {
            if let Some((v, px, pg)) = &prev {
                let b = bundle_bound(program, (cur.value, &x, &grad), (*v, px, pg))?;
                upper = upper.min(b);
            }
        }
        gap = upper - best;
        trace.push(TracePoint {
            iteration: it,
            value_log: cur.value,
            best_log: best,
            gap,
        });
        if gap <= cfg.tol {
            converged = true;
            break;
        }
        prev = Some((cur.value, x.clone(), grad.clone()));
        let (away_idx, away_val) = atoms
            .iter()
            .enumerate()
            .map(|(k, (a, _))| (k, dot(&grad, a)))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        let fw_gap = dot(&grad, &s) - dot(&grad, &x);
        let away_gap = dot(&grad, &x) - away_val;
        let (dir, gamma_max, toward) = if fw_gap >= away_gap || atoms.len() == 1 {
            let d: Vec<f64> = s.iter().zip(&x).map(|(a, b)| a - b).collect();
            (d, 1.0, true)
        } else {
            let lam = atoms[away_idx].1;
            let d: Vec<f64> = x
                .iter()
                .zip(&atoms[away_idx].0)
                .map(|(a, b)| a - b)
                .collect();
            (d, lam / (1.0 - lam), false)
        };

        // bisection on the directional derivative
        let slope0 = dot(&grad, &dir);
        let at = |g: f64| -> Vec<f64> {
            x.iter()
                .zip(&dir)
                .map(|(a, d)| (a + g * d).clamp(0.0, 1.0))
                .collect()
        };
        let mut lo = 0.0;
        let mut lo_eval: Option<Eval> = None;
        let mut lo_slope = slope0;
        let mut hi = gamma_max;
        let end = ev.eval(&at(hi));
        let end_slope = end
            .grad
            .as_ref()
            .map_or(f64::NEG_INFINITY, |g| dot(g, &dir));
        if end.value.is_finite() && end_slope >= 0.0 && end.value >= cur.value {
            lo = hi;
            lo_eval = Some(end);
        } else {
            for _ in 0..cfg.line_search_iters {
                if lo > 0.0 && (hi - lo) * lo_slope.max(0.0) < 1e-3 * cfg.tol {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let e = ev.eval(&at(mid));
                let sl = e.grad.as_ref().map_or(f64::NEG_INFINITY, |g| dot(g, &dir));
                if e.value.is_finite() && sl > 0.0 {
                    lo = mid;
                    lo_slope = sl;
                    lo_eval = Some(e);
                } else {
                    hi = mid;
                }
            }
        }
        let Some(next) = lo_eval.filter(|e| e.value >= cur.value) else {
            // No ascent along a supergradient direction: the dual optimum is
            // not unique here. Nudge towards the interior start, where it is,
            // and take the supergradient there.
            stalls += 1;
            if stalls > 4 {
                diagnostics.push(format!(
                    "line search stalled at iteration {it} with gap {gap:.3e}"
                ));
                break;
            }
            let eps = 1e-6 * 10f64.powi(stalls - 1);
            for (xv, sv) in x.iter_mut().zip(&start.values) {
                *xv = (1.0 - eps) * *xv + eps * sv;
            }
            add_atom(&mut atoms, &start.values, eps);
            cur = ev.eval(&x);
            if !cur.value.is_finite() {
                diagnostics.push(format!("interior nudge lost finiteness at iteration {it}"));
                break;
            }
            continue;
        };
        stalls = 0;
        let gamma = lo;
        x = at(gamma);
        if toward {
            add_atom(&mut atoms, &s, gamma);
        } else {
            for atom in atoms.iter_mut() {
                atom.1 *= 1.0 + gamma;
            }
            atoms[away_idx].1 -= gamma;
        }
        atoms.retain(|(_, w)| *w > 1e-12);
        cur = next;
        if cur.value > best {
            best = cur.value;
            best_state = (x.clone(), cur.dual.clone());
        }
    }
    if !converged && diagnostics.is_empty() {
        diagnostics.push(format!("outer budget exhausted with gap {gap:.3e}"));
    }

    if cur.value >= best {
        best_state = (x, cur.dual);
    }
    let solution = FractionalSolution::new(best_state.0);
    let dual = best_state.1;
    let value_log = log_objective(program, &solution, &dual);
    Ok(SolveResult {
        value_product: value_log.exp(),
        value_nsw: (value_log / n as f64).exp(),
        solution,
        dual,
        value_log,
        trace,
        gap,
        iterations,
        converged,
        diagnostics,
    })
}
