//! Exact and statistical oracles: brute-force optimum, distinct-tuple sums,
//! the Gurvits-type coefficient bound, Monte-Carlo products, the coverage
//! expectation and the constrained-mapping counter.

use serde::{Deserialize, Serialize};

use crate::error::{NswError, Result};
use crate::instance::Instance;
use crate::relaxation::{FractionalSolution, ProgramSpec};
use crate::rng::SampleKey;
use crate::rounding::{Allocation, Procedure, Rounder};
use crate::saddle::{inner_inf_matrix, SolveConfig};
use crate::stats::mc_mean;
use crate::valuation::ValuationSpec;

pub use crate::rounding::nsw_value;
pub use crate::stats::MCEstimate;

/// Cap on enumerated configurations for the brute-force oracles.
pub const ENUMERATION_CAP: u128 = 10_000_000;
/// Largest row count for [`distinct_tuple_sum`].
pub const DISTINCT_ROW_CAP: usize = 12;
/// Smallest sample count accepted by [`mc_expected_product`].
pub const MIN_SAMPLES: u64 = 10_000;

fn checked_pow(base: u128, exp: usize, what: &'static str) -> Result<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
        if acc > ENUMERATION_CAP {
            return Err(NswError::size(what, acc, ENUMERATION_CAP));
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub allocation: Allocation,
    pub product: f64,
    pub nsw: f64,
}

/// Exact maximizer of the product over all item-to-agent-or-nobody maps.
/// Items are decided in index order, agents `0..n` before "nobody"; the first
/// maximizer in that order wins.
pub fn brute_force_opt(instance: &Instance) -> Result<OptResult> {
    let (n, m) = (instance.n, instance.m);
    checked_pow(n as u128 + 1, m, "allocations (n+1)^m")?;
    let tables: Vec<Vec<f64>> = instance
        .valuations()
        .iter()
        .map(|v| v.value_table())
        .collect::<Result<_>>()?;

    struct Search<'a> {
        n: usize,
        m: usize,
        tables: &'a [Vec<f64>],
        masks: Vec<usize>,
        owner: Vec<Option<usize>>,
        best: f64,
        best_owner: Vec<Option<usize>>,
    }
    impl Search<'_> {
        fn go(&mut self, j: usize) {
            if j == self.m {
                let p: f64 = (0..self.n).map(|i| self.tables[i][self.masks[i]]).product();
                if p > self.best {
                    self.best = p;
                    self.best_owner.clone_from(&self.owner);
                }
                return;
            }
            for i in 0..self.n {
                self.masks[i] |= 1 << j;
                self.owner[j] = Some(i);
                self.go(j + 1);
                self.masks[i] &= !(1 << j);
            }
            self.owner[j] = None;
            self.go(j + 1);
        }
    }
    let mut s = Search {
        n,
        m,
        tables: &tables,
        masks: vec![0; n],
        owner: vec![None; m],
        best: f64::NEG_INFINITY,
        best_owner: vec![None; m],
    };
    s.go(0);
    let allocation = Allocation {
        owner: s.best_owner,
    };
    let (product, nsw) = nsw_value(instance, &allocation)?;
    Ok(OptResult {
        allocation,
        product,
        nsw,
    })
}

/// Sum over injective `(j_1..j_n)` of `prod_i m[i][j_i]`, by a DP over row
/// subsets that scans the columns once.
pub fn distinct_tuple_sum(m: &[Vec<f64>]) -> Result<f64> {
    let n = m.len();
    if n > DISTINCT_ROW_CAP {
        return Err(NswError::size(
            "rows for distinct-tuple sum",
            n as u128,
            DISTINCT_ROW_CAP as u128,
        ));
    }
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        return Err(NswError::input("matrix rows differ in length"));
    }
    let full = (1usize << n) - 1;
    let mut dp = vec![0.0; full + 1];
    dp[0] = 1.0;
    for j in 0..cols {
        for mask in (0..full).rev() {
            if dp[mask] == 0.0 {
                continue;
            }
            for (i, row) in m.iter().enumerate() {
                if mask & (1 << i) == 0 {
                    dp[mask | 1 << i] += dp[mask] * row[j];
                }
            }
        }
    }
    Ok(dp[full])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GurvitsReport {
    /// Mass of the square-free degree-`n` coefficients.
    pub coeff_sum: f64,
    /// Infimum of `prod_i sum_j m_ij y_j` over `y^S >= 1`, `|S| = n`.
    pub inf_value: f64,
    /// `coeff_sum / inf_value`; `None` when the infimum is 0.
    pub ratio: Option<f64>,
    /// `e^{-n}`.
    pub bound: f64,
    pub holds: bool,
}

/// Compare the coefficient mass with `e^{-n}` times the infimum.
pub fn gurvits_check(m: &[Vec<f64>], cfg: &SolveConfig) -> Result<GurvitsReport> {
    let n = m.len();
    if n == 0 {
        return Err(NswError::input("matrix has no rows"));
    }
    let bound = (-(n as f64)).exp();
    if m.iter().any(|r| r.iter().all(|&v| v == 0.0)) {
        return Ok(GurvitsReport {
            coeff_sum: 0.0,
            inf_value: 0.0,
            ratio: None,
            bound,
            holds: true,
        });
    }
    let coeff_sum = distinct_tuple_sum(m)?;
    let inf_value = inner_inf_matrix(m, cfg)?.value.exp();
    let ratio = (inf_value > 0.0).then(|| coeff_sum / inf_value);
    Ok(GurvitsReport {
        coeff_sum,
        inf_value,
        ratio,
        bound,
        holds: coeff_sum >= bound * inf_value * (1.0 - 1e-6),
    })
}

/// Mean realized product over `samples` seeded runs of `procedure`.
pub fn mc_expected_product(
    instance: &Instance,
    program: &ProgramSpec,
    sol: &FractionalSolution,
    procedure: Procedure,
    samples: u64,
    seed: u64,
) -> Result<MCEstimate> {
    if samples < MIN_SAMPLES {
        return Err(NswError::input(format!(
            "{samples} samples; at least {MIN_SAMPLES} are needed"
        )));
    }
    let rounder = Rounder::new(instance, program, sol, procedure)?;
    Ok(mc_mean(samples, |s| {
        rounder.sample(SampleKey::new(seed, s)).product_value
    }))
}

/// Exact `E[prod_i v_i]` under procedure 0 for coverage agents, as the sum
/// over element tuples `(e_1..e_n)` and item maps `sigma` (agent or nobody)
/// such that every `e_i` is covered by an item mapped to `i`, weighted by
/// `prod_j Pr[sigma(j)]`. `x` holds the item marginals `x_ij`.
pub fn expected_product_coverage(instance: &Instance, x: &[Vec<f64>]) -> Result<f64> {
    let (n, m) = (instance.n, instance.m);
    if x.len() != n || x.iter().any(|r| r.len() != m) {
        return Err(NswError::input("marginal matrix must be n x m"));
    }
    let mut covers: Vec<Vec<Vec<usize>>> = Vec::with_capacity(n);
    let mut sizes = Vec::with_capacity(n);
    for i in 0..n {
        let ValuationSpec::Coverage {
            universe_size,
            covers: c,
        } = instance.valuation(i).spec()
        else {
            return Err(NswError::input(format!(
                "agent {i} does not have a coverage valuation"
            )));
        };
        covers.push(c.clone());
        sizes.push(*universe_size);
    }
    let maps = checked_pow(n as u128 + 1, m, "item maps (n+1)^m")?;
    let tuples: u128 = sizes.iter().map(|&s| s as u128).product();
    if maps.saturating_mul(tuples) > ENUMERATION_CAP {
        return Err(NswError::size(
            "item maps times element tuples",
            maps.saturating_mul(tuples),
            ENUMERATION_CAP,
        ));
    }
    for j in 0..m {
        let col: f64 = (0..n).map(|i| x[i][j]).sum();
        if col > 1.0 + 1e-9 || (0..n).any(|i| !(x[i][j] >= 0.0)) {
            return Err(NswError::input(format!("item {j} has invalid marginals")));
        }
    }

    // every map with its probability
    let mut sigmas: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut sigma = vec![0usize; m];
    loop {
        let p: f64 = (0..m)
            .map(|j| {
                if sigma[j] < n {
                    x[sigma[j]][j]
                } else {
                    (1.0 - (0..n).map(|i| x[i][j]).sum::<f64>()).max(0.0)
                }
            })
            .product();
        if p > 0.0 {
            sigmas.push((sigma.clone(), p));
        }
        let mut t = 0;
        while t < m && sigma[t] == n {
            sigma[t] = 0;
            t += 1;
        }
        if t == m {
            break;
        }
        sigma[t] += 1;
    }

    let mut total = 0.0;
    let mut tuple = vec![0usize; n];
    if sizes.contains(&0) {
        return Ok(0.0);
    }
    loop {
        for (sigma, p) in &sigmas {
            let ok =
                (0..n).all(|i| (0..m).any(|j| sigma[j] == i && covers[i][j].contains(&tuple[i])));
            if ok {
                total += p;
            }
        }
        let mut t = 0;
        while t < n && tuple[t] + 1 == sizes[t] {
            tuple[t] = 0;
            t += 1;
        }
        if t == n {
            break;
        }
        tuple[t] += 1;
    }
    Ok(total)
}

/// Input of [`count_constrained_mappings`]: maps `sigma: A -> B` with
/// `|A| = weights.len()` and `|B| = weights[0].len()`; `blocks` are disjoint
/// subsets of `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingProblem {
    pub weights: Vec<Vec<f64>>,
    pub blocks: Vec<Vec<usize>>,
    /// One chosen element per block; `None` sums over every choice.
    pub choices: Option<Vec<usize>>,
}

impl MappingProblem {
    pub fn validate(&self) -> Result<(usize, usize)> {
        let a = self.weights.len();
        let b = self.weights.first().map_or(0, Vec::len);
        if self.weights.iter().any(|r| r.len() != b) {
            return Err(NswError::input("weight rows differ in length"));
        }
        let mut seen = vec![false; b];
        for (k, block) in self.blocks.iter().enumerate() {
            for &e in block {
                if e >= b {
                    return Err(NswError::input(format!(
                        "block {k} contains {e}, outside B"
                    )));
                }
                if std::mem::replace(&mut seen[e], true) {
                    return Err(NswError::input(format!(
                        "element {e} appears in two blocks"
                    )));
                }
            }
        }
        if let Some(c) = &self.choices {
            if c.len() != self.blocks.len() {
                return Err(NswError::input("need exactly one choice per block"));
            }
            for (k, e) in c.iter().enumerate() {
                if !self.blocks[k].contains(e) {
                    return Err(NswError::input(format!("choice {e} is not in block {k}")));
                }
            }
        }
        let maps = checked_pow(b as u128, a, "mappings |B|^|A|")?;
        let choices: u128 = self.blocks.iter().map(|bl| bl.len() as u128).product();
        if maps.saturating_mul(choices) > ENUMERATION_CAP {
            return Err(NswError::size(
                "mappings times choices",
                maps.saturating_mul(choices),
                ENUMERATION_CAP,
            ));
        }
        Ok((a, b))
    }
}

/// Sum over maps `sigma` whose image contains every chosen element of
/// `prod_a W[a][sigma(a)]`; with no fixed choice, also summed over all
/// choices.
pub fn count_constrained_mappings(problem: &MappingProblem) -> Result<f64> {
    let (a, b) = problem.validate()?;
    let all_choices: Vec<Vec<usize>> = match &problem.choices {
        Some(c) => vec![c.clone()],
        None => {
            let mut out = vec![Vec::new()];
            for block in &problem.blocks {
                out = out
                    .into_iter()
                    .flat_map(|prefix| {
                        block.iter().map(move |&e| {
                            let mut p = prefix.clone();
                            p.push(e);
                            p
                        })
                    })
                    .collect();
            }
            out
        }
    };
    if b == 0 {
        // only the empty map exists when A is empty
        return Ok(if a == 0 && problem.blocks.is_empty() {
            1.0
        } else {
            0.0
        });
    }
    let mut total = 0.0;
    let mut sigma = vec![0usize; a];
    let mut hit = vec![false; b];
    loop {
        let w: f64 = (0..a).map(|k| problem.weights[k][sigma[k]]).product();
        if w != 0.0 {
            hit.iter_mut().for_each(|h| *h = false);
            for &t in &sigma {
                hit[t] = true;
            }
            for c in &all_choices {
                if c.iter().all(|&e| hit[e]) {
                    total += w;
                }
            }
        }
        let mut t = 0;
        while t < a && sigma[t] + 1 == b {
            sigma[t] = 0;
            t += 1;
        }
        if t == a {
            break;
        }
        sigma[t] += 1;
    }
    Ok(total)
}
