//! Inner infimum over the dual family for a fixed coefficient matrix.
//!
//! For `a >= 0` (agents by items) the value
//! `inf { sum_i log sum_j a_ij exp(u_j) : the n smallest u_j sum to >= 0 }`
//! equals `min_{mu >= 0} D(mu)` with
//! `D(mu) = sum_i log sum_j a_ij exp(-mu_j) + sum_j mu_j`,
//! restricted to edges that lie in some matching saturating every agent.
//! The minimizer is recovered as `u = c - mu`, `c = sum(mu) / n`.

use crate::relaxation::smallest_n_sum;

/// Why the infimum is `-inf`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Blocker {
    /// The agent's coefficients are all zero.
    ZeroRow { agent: usize },
    /// These agents jointly see fewer items than there are of them.
    Hall { agents: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct InnerOutcome {
    pub log_y: Vec<f64>,
    /// Objective at `log_y`; `-inf` when blocked.
    pub value: f64,
    /// Entropy lower bound certified by the final multipliers, when they
    /// satisfy the column capacities; `-inf` otherwise.
    pub lower_bound: f64,
    pub blocker: Option<Blocker>,
    pub converged: bool,
    pub sweeps: usize,
}

/// Support structure of a coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
struct Structure {
    support: Vec<Vec<bool>>,
    allowed: Vec<Vec<bool>>,
    /// Row sets `A` with `|N(A)| = |A|`, each cutting off some forbidden edge.
    tight: Vec<(Vec<usize>, Vec<usize>)>,
    blocker: Option<Blocker>,
}

/// Maximum matching of rows into columns on `adj`; `col_of[i]` per row.
fn max_matching(adj: &[Vec<bool>], m: usize) -> (usize, Vec<Option<usize>>, Vec<Option<usize>>) {
    fn augment(
        i: usize,
        adj: &[Vec<bool>],
        seen: &mut [bool],
        col_of: &mut [Option<usize>],
        row_of: &mut [Option<usize>],
    ) -> bool {
        for j in 0..seen.len() {
            if adj[i][j] && !seen[j] {
                seen[j] = true;
                if row_of[j].is_none_or(|r| augment(r, adj, seen, col_of, row_of)) {
                    col_of[i] = Some(j);
                    row_of[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    let n = adj.len();
    let mut col_of = vec![None; n];
    let mut row_of = vec![None; m];
    let mut size = 0;
    for i in 0..n {
        let mut seen = vec![false; m];
        if augment(i, adj, &mut seen, &mut col_of, &mut row_of) {
            size += 1;
        }
    }
    (size, col_of, row_of)
}

/// Rows reachable by alternating paths from an unmatched row, and the
/// columns they see. The rows form a Hall violator.
fn hall_violator(
    adj: &[Vec<bool>],
    col_of: &[Option<usize>],
    row_of: &[Option<usize>],
) -> (Vec<usize>, Vec<usize>) {
    let n = adj.len();
    let m = row_of.len();
    let start = (0..n)
        .find(|&i| col_of[i].is_none())
        .expect("some row is unmatched");
    let mut row_seen = vec![false; n];
    let mut col_seen = vec![false; m];
    let mut stack = vec![start];
    row_seen[start] = true;
    while let Some(i) = stack.pop() {
        for j in 0..m {
            if adj[i][j] && !col_seen[j] {
                col_seen[j] = true;
                if let Some(r) = row_of[j] {
                    if !row_seen[r] {
                        row_seen[r] = true;
                        stack.push(r);
                    }
                }
            }
        }
    }
    (
        (0..n).filter(|&i| row_seen[i]).collect(),
        (0..m).filter(|&j| col_seen[j]).collect(),
    )
}

fn analyse(a: &[Vec<f64>], m: usize) -> Structure {
    let n = a.len();
    let support: Vec<Vec<bool>> = a
        .iter()
        .map(|r| r.iter().map(|&v| v > 0.0).collect())
        .collect();
    let mut out = Structure {
        support: support.clone(),
        allowed: support.clone(),
        tight: Vec::new(),
        blocker: None,
    };
    if let Some(i) = (0..n).find(|&i| !support[i].iter().any(|&s| s)) {
        out.blocker = Some(Blocker::ZeroRow { agent: i });
        return out;
    }
    let (size, col_of, row_of) = max_matching(&support, m);
    if size < n {
        let (rows, _) = hall_violator(&support, &col_of, &row_of);
        out.blocker = Some(Blocker::Hall { agents: rows });
        return out;
    }
    for i in 0..n {
        for j in 0..m {
            if !support[i][j] || col_of[i] == Some(j) {
                continue;
            }
            // can the other rows be matched without row i and column j?
            let mut adj = support.clone();
            adj[i].iter_mut().for_each(|s| *s = false);
            for row in adj.iter_mut() {
                row[j] = false;
            }
            let (sz, c2, r2) = max_matching(&adj, m);
            if sz < n - 1 {
                out.allowed[i][j] = false;
                // the violator avoids row i, which is unmatched by construction
                let mut c2 = c2;
                c2[i] = Some(usize::MAX);
                let (rows, _) = hall_violator(&adj, &c2, &r2);
                let mut cols: Vec<usize> = (0..m)
                    .filter(|&c| rows.iter().any(|&r| support[r][c]))
                    .collect();
                cols.sort_unstable();
                if !out.tight.iter().any(|(r, _)| *r == rows) {
                    out.tight.push((rows, cols));
                }
            }
        }
    }
    out
}

/// Reusable solver keeping the last support structure and multipliers.
#[derive(Debug, Clone, Default)]
pub struct InnerSolver {
    cache: Option<Structure>,
    mu: Vec<f64>,
    cap: Option<Vec<Vec<f64>>>,
}

const RESIDUAL_TOL: f64 = 1e-12;
const CD_SWEEPS: usize = 30;

impl InnerSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Measure the push-out excess against `cap` instead of `a`. With `cap`
    /// the largest coefficients the caller can produce, the excess bounds the
    /// error of supergradients taken at the returned point.
    pub fn with_cap(cap: Vec<Vec<f64>>) -> Self {
        InnerSolver {
            cap: Some(cap),
            ..Self::default()
        }
    }

    fn structure(&mut self, a: &[Vec<f64>], m: usize) -> &Structure {
        let fresh = match &self.cache {
            Some(s) => {
                s.support.len() != a.len()
                    || s.support.iter().zip(a).any(|(sr, ar)| {
                        sr.len() != m || sr.iter().zip(ar).any(|(&s, &v)| s != (v > 0.0))
                    })
            }
            None => true,
        };
        if fresh {
            self.cache = Some(analyse(a, m));
        }
        self.cache.as_ref().unwrap()
    }

    /// Solve for `a` (rows = agents). `push_tol` bounds the extra objective
    /// contributed by edges outside every saturating matching.
    pub fn solve(
        &mut self,
        a: &[Vec<f64>],
        m: usize,
        max_iters: usize,
        push_tol: f64,
    ) -> InnerOutcome {
        let n = a.len();
        let st = self.structure(a, m).clone();
        if let Some(b) = st.blocker {
            return InnerOutcome {
                log_y: vec![0.0; m],
                value: f64::NEG_INFINITY,
                lower_bound: f64::NEG_INFINITY,
                blocker: Some(b),
                converged: true,
                sweeps: 0,
            };
        }
        let b: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| if st.allowed[i][j] { a[i][j] } else { 0.0 })
                    .collect()
            })
            .collect();
        let active: Vec<usize> = (0..m).filter(|&j| (0..n).any(|i| b[i][j] > 0.0)).collect();
        if self.mu.len() != m {
            self.mu = vec![0.0; m];
        }
        let mut mu = std::mem::take(&mut self.mu);
        for j in 0..m {
            if !active.contains(&j) || !mu[j].is_finite() || mu[j] < 0.0 {
                mu[j] = 0.0;
            }
        }

        let mut iters = 0;
        let mut residual = column_residual(&b, &mu, &active);
        while residual > RESIDUAL_TOL && iters < max_iters {
            if iters < CD_SWEEPS || !newton_step(&b, &mut mu, &active) {
                cd_sweep(&b, &mut mu, &active);
            }
            iters += 1;
            residual = column_residual(&b, &mu, &active);
        }
        let converged = residual <= RESIDUAL_TOL;

        let c = mu.iter().sum::<f64>() / n as f64;
        let mut u: Vec<f64> = mu.iter().map(|&x| c - x).collect();
        let lower_bound = entropy_bound(&b, &mu);

        if !st.tight.is_empty() {
            let mut dir = vec![0.0; m];
            for (rows, cols) in &st.tight {
                let share = rows.len() as f64 / n as f64;
                for (j, d) in dir.iter_mut().enumerate() {
                    *d += share - if cols.contains(&j) { 1.0 } else { 0.0 };
                }
            }
            let base = objective(&b, &u);
            let cap = self.cap.as_deref().unwrap_or(a);
            let mut t = 1.0;
            for _ in 0..200 {
                let cand: Vec<f64> = u.iter().zip(&dir).map(|(x, d)| x + t * d).collect();
                let excess = forbidden_excess(a, &b, cap, &cand);
                if excess <= push_tol && objective(&b, &cand) <= base + push_tol {
                    u = cand;
                    break;
                }
                t *= 2.0;
            }
        }
        let s = smallest_n_sum(&u, n);
        if s < 0.0 {
            let shift = -s / n as f64;
            u.iter_mut().for_each(|x| *x += shift);
            // guard against the sum landing a rounding error below zero
            while smallest_n_sum(&u, n) < 0.0 {
                u.iter_mut()
                    .for_each(|x| *x += f64::EPSILON * (1.0 + x.abs()));
            }
        }
        let value = objective(a, &u);
        self.mu = mu;
        InnerOutcome {
            log_y: u,
            value,
            lower_bound,
            blocker: None,
            converged,
            sweeps: iters,
        }
    }
}

/// `sum_i sum_j cap_ij exp(u_j) / Z_i` over the edges of `a` dropped from `b`,
/// with `Z_i` the row sums of `b`.
fn forbidden_excess(a: &[Vec<f64>], b: &[Vec<f64>], cap: &[Vec<f64>], u: &[f64]) -> f64 {
    let mut total = 0.0;
    for ((ar, br), cr) in a.iter().zip(b).zip(cap) {
        let z: f64 = br.iter().zip(u).map(|(&x, &uj)| x * uj.exp()).sum();
        let extra: f64 = (0..u.len())
            .filter(|&j| ar[j] > 0.0 && br[j] == 0.0)
            .map(|j| cr[j].max(ar[j]) * u[j].exp())
            .sum();
        total += extra / z;
    }
    total
}

/// `sum_i log sum_j a_ij exp(u_j)`.
pub fn objective(a: &[Vec<f64>], u: &[f64]) -> f64 {
    let mut total = 0.0;
    for row in a {
        let s: f64 = row.iter().zip(u).map(|(&x, &uj)| x * uj.exp()).sum();
        if !(s > 0.0) {
            return f64::NEG_INFINITY;
        }
        total += s.ln();
    }
    total
}

fn row_sums(b: &[Vec<f64>], mu: &[f64]) -> Vec<f64> {
    b.iter()
        .map(|row| row.iter().zip(mu).map(|(&x, &m)| x * (-m).exp()).sum())
        .collect()
}

/// Column loads `c_j = sum_i b_ij exp(-mu_j) / s_i`.
fn column_loads(b: &[Vec<f64>], mu: &[f64]) -> Vec<f64> {
    let s = row_sums(b, mu);
    let m = mu.len();
    (0..m)
        .map(|j| {
            let t = (-mu[j]).exp();
            b.iter().zip(&s).map(|(row, &si)| row[j] * t / si).sum()
        })
        .collect()
}

/// KKT residual of `min D(mu)` over `mu >= 0`.
fn column_residual(b: &[Vec<f64>], mu: &[f64], active: &[usize]) -> f64 {
    let c = column_loads(b, mu);
    active
        .iter()
        .map(|&j| {
            if mu[j] > 0.0 {
                (c[j] - 1.0).abs()
            } else {
                (c[j] - 1.0).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

fn dual_value(b: &[Vec<f64>], mu: &[f64]) -> f64 {
    row_sums(b, mu).iter().map(|s| s.ln()).sum::<f64>() + mu.iter().sum::<f64>()
}

/// Entropy of the row distributions induced by `mu`, a lower bound on the
/// infimum whenever every column load is at most one.
fn entropy_bound(b: &[Vec<f64>], mu: &[f64]) -> f64 {
    let c = column_loads(b, mu);
    if c.iter().any(|&cj| cj > 1.0 + 1e-12) {
        return f64::NEG_INFINITY;
    }
    let slack: f64 = mu.iter().zip(&c).map(|(&m, &cj)| m * (1.0 - cj)).sum();
    dual_value(b, mu) - slack
}

/// One cyclic pass of exact coordinate minimization.
fn cd_sweep(b: &[Vec<f64>], mu: &mut [f64], active: &[usize]) {
    for &j in active {
        // s_i without column j
        let rest: Vec<f64> = b
            .iter()
            .map(|row| {
                row.iter()
                    .zip(mu.iter())
                    .enumerate()
                    .filter(|&(k, _)| k != j)
                    .map(|(_, (&x, &m))| x * (-m).exp())
                    .sum()
            })
            .collect();
        let g = |t: f64| -> f64 {
            b.iter()
                .zip(&rest)
                .map(|(row, &s)| {
                    let bt = row[j] * t;
                    if bt > 0.0 {
                        bt / (s + bt)
                    } else {
                        0.0
                    }
                })
                .sum()
        };
        if g(1.0) <= 1.0 {
            mu[j] = 0.0;
            continue;
        }
        // g(t) <= t * sum b_ij / s_i gives a lower bracket
        let slope: f64 = b
            .iter()
            .zip(&rest)
            .filter(|(row, _)| row[j] > 0.0)
            .map(|(row, &s)| if s > 0.0 { row[j] / s } else { f64::INFINITY })
            .sum();
        if !slope.is_finite() {
            // a row sees only column j; other rows on j are forbidden edges,
            // so the column is effectively pinned
            mu[j] = 0.0;
            continue;
        }
        let mut lo = (0.5 / slope).min(0.5).ln();
        let mut hi = 0.0f64;
        while g(lo.exp()) >= 1.0 {
            hi = lo;
            lo *= 2.0;
        }
        let mut tau = 0.5 * (lo + hi);
        for _ in 0..100 {
            let t = tau.exp();
            let val = g(t) - 1.0;
            if val.abs() < 1e-15 {
                break;
            }
            if val > 0.0 {
                hi = tau;
            } else {
                lo = tau;
            }
            let deriv: f64 = b
                .iter()
                .zip(&rest)
                .map(|(row, &s)| {
                    let bt = row[j] * t;
                    if bt > 0.0 {
                        bt * s / ((s + bt) * (s + bt))
                    } else {
                        0.0
                    }
                })
                .sum();
            let newton = tau - val / deriv;
            tau = if deriv > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 {
                break;
            }
        }
        mu[j] = (-tau).max(0.0);
    }
}

/// Projected Newton step on the free coordinates; false if no decrease.
fn newton_step(b: &[Vec<f64>], mu: &mut [f64], active: &[usize]) -> bool {
    let s = row_sums(b, mu);
    let c = column_loads(b, mu);
    let free: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&j| mu[j] > 0.0 || c[j] > 1.0)
        .collect();
    if free.is_empty() {
        return false;
    }
    let k = free.len();
    // Hessian of sum_i log s_i on the free block: diag(c) - sum_i p_i p_i^T
    let mut h = vec![vec![0.0; k]; k];
    for (row, &si) in b.iter().zip(&s) {
        let p: Vec<f64> = free.iter().map(|&j| row[j] * (-mu[j]).exp() / si).collect();
        for x in 0..k {
            for y in 0..k {
                h[x][y] -= p[x] * p[y];
            }
        }
    }
    let trace: f64 = free.iter().map(|&j| c[j]).sum();
    for (x, &j) in free.iter().enumerate() {
        h[x][x] += c[j] + 1e-12 * trace.max(1e-300);
    }
    let grad: Vec<f64> = free.iter().map(|&j| 1.0 - c[j]).collect();
    let Some(step) = solve_spd(h, grad.iter().map(|g| -g).collect()) else {
        return false;
    };
    let before = dual_value(b, mu);
    let mut alpha = 1.0;
    for _ in 0..40 {
        let mut cand = mu.to_vec();
        for (x, &j) in free.iter().enumerate() {
            cand[j] = (mu[j] + alpha * step[x]).max(0.0);
        }
        let after = dual_value(b, &cand);
        if after.is_finite() && after <= before {
            mu.copy_from_slice(&cand);
            return after < before || alpha == 1.0;
        }
        alpha *= 0.5;
    }
    false
}

/// Cholesky solve of a symmetric positive definite system.
fn solve_spd(mut h: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let k = rhs.len();
    for col in 0..k {
        let mut d = h[col][col];
        for p in 0..col {
            d -= h[col][p] * h[col][p];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        h[col][col] = d;
        for row in col + 1..k {
            let mut v = h[row][col];
            for p in 0..col {
                v -= h[row][p] * h[col][p];
            }
            h[row][col] = v / d;
        }
    }
    for row in 0..k {
        for p in 0..row {
            rhs[row] -= h[row][p] * rhs[p];
        }
        rhs[row] /= h[row][row];
    }
    for row in (0..k).rev() {
        for p in row + 1..k {
            rhs[row] -= h[p][row] * rhs[p];
        }
        rhs[row] /= h[row][row];
    }
    Some(rhs)
}
