//! Contention resolution schemes over matroids and their Monte-Carlo harness.
//!
//! A scheme sees the random active set `R(x)` (each element independently
//! with probability `x_e`) and returns an independent subset of it. Exact
//! schemes: the rank-1 rule, per-block rank-1/quota rules on partition
//! matroids, and random `r`-subsets on uniform matroids. Every other matroid
//! falls back to greedy in a random order, whose constant is measured only.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NswError, Result};
use crate::matroid::{Matroid, MatroidKind, MatroidSpec, PolytopeCheck};
use crate::rng::{stream, Purpose};
use crate::stats::{mc_mean, MCEstimate};

/// Tolerance for `x` in `b * P(M)`.
pub const POLYTOPE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rank1Exact,
    PartitionExact,
    UniformQuota,
    RandomOrderGreedy,
}

impl Scheme {
    /// The exact scheme for `matroid` when one exists, else greedy.
    pub fn for_matroid(matroid: &Matroid) -> Result<Scheme> {
        if matroid.rank(&(0..matroid.ground_size()).collect::<Vec<_>>())? <= 1 {
            return Ok(Scheme::Rank1Exact);
        }
        Ok(match matroid.kind() {
            MatroidKind::Uniform { .. } => Scheme::UniformQuota,
            _ if matroid.partition_blocks().is_some() => Scheme::PartitionExact,
            _ => Scheme::RandomOrderGreedy,
        })
    }

    pub fn is_exact(self) -> bool {
        self != Scheme::RandomOrderGreedy
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Rank1Exact => "rank1_exact",
            Scheme::PartitionExact => "partition_exact",
            Scheme::UniformQuota => "uniform_quota",
            Scheme::RandomOrderGreedy => "random_order_greedy",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = NswError;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "rank1_exact" | "rank1" => Scheme::Rank1Exact,
            "partition_exact" | "partition" => Scheme::PartitionExact,
            "uniform_quota" | "uniform" => Scheme::UniformQuota,
            "random_order_greedy" | "greedy" => Scheme::RandomOrderGreedy,
            _ => return Err(NswError::input(format!("unknown scheme `{s}`"))),
        })
    }
}

/// Serializable scheme description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrsSpec {
    pub matroid: MatroidSpec,
    pub x: Vec<f64>,
    pub b: f64,
    pub scheme: Scheme,
}

impl CrsSpec {
    pub fn build(&self) -> Result<Crs> {
        Crs::new(self.matroid.build()?, self.x.clone(), self.b, self.scheme)
    }
}

#[derive(Debug, Clone)]
enum Plan {
    Rank1,
    /// Per block: its elements and capacity.
    Blocks(Vec<(Vec<usize>, usize)>),
    Quota(usize),
    Greedy,
}

/// A validated scheme ready to resolve active sets.
#[derive(Debug, Clone)]
pub struct Crs {
    matroid: Matroid,
    x: Vec<f64>,
    b: f64,
    scheme: Scheme,
    plan: Plan,
}

impl Crs {
    pub fn new(matroid: Matroid, x: Vec<f64>, b: f64, scheme: Scheme) -> Result<Crs> {
        let ground = matroid.ground_size();
        if x.len() != ground {
            return Err(NswError::input(format!(
                "marginals have {} entries, ground set has {ground}",
                x.len()
            )));
        }
        if let PolytopeCheck::Violated { set, excess } =
            matroid.polytope_check(&x, b, POLYTOPE_TOL)?
        {
            return Err(NswError::input(format!(
                "marginals leave {b} * P(M): set {set:?} exceeds its bound by {excess:.3e}"
            )));
        }
        let all: Vec<usize> = (0..ground).collect();
        let plan = match scheme {
            Scheme::Rank1Exact => {
                if matroid.rank(&all)? > 1 {
                    return Err(NswError::input(
                        "rank1_exact needs a matroid of rank at most 1",
                    ));
                }
                Plan::Rank1
            }
            Scheme::PartitionExact => {
                let (blocks, caps) = matroid
                    .partition_blocks()
                    .ok_or_else(|| NswError::input("partition_exact needs a partition matroid"))?;
                Plan::Blocks(blocks.into_iter().zip(caps).collect())
            }
            Scheme::UniformQuota => match matroid.kind() {
                MatroidKind::Uniform { rank: 1 } => Plan::Rank1,
                MatroidKind::Uniform { rank } => Plan::Quota(rank),
                _ => return Err(NswError::input("uniform_quota needs a uniform matroid")),
            },
            Scheme::RandomOrderGreedy => Plan::Greedy,
        };
        Ok(Crs {
            matroid,
            x,
            b,
            scheme,
            plan,
        })
    }

    /// Exact scheme where available, else greedy.
    pub fn auto(matroid: Matroid, x: Vec<f64>, b: f64) -> Result<Crs> {
        let scheme = Scheme::for_matroid(&matroid)?;
        Crs::new(matroid, x, b, scheme)
    }

    pub fn matroid(&self) -> &Matroid {
        &self.matroid
    }

    pub fn marginals(&self) -> &[f64] {
        &self.x
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    fn check_active(&self, active: &[usize]) -> Result<Vec<usize>> {
        let mut a = active.to_vec();
        a.sort_unstable();
        a.dedup();
        for &e in &a {
            if e >= self.x.len() {
                return Err(NswError::input(format!(
                    "active element {e} outside the ground set"
                )));
            }
            if !(self.x[e] > 0.0) {
                return Err(NswError::input(format!(
                    "active element {e} has marginal 0"
                )));
            }
        }
        Ok(a)
    }

    /// Independent subset of `active`, sorted. The number of draws taken from
    /// `rng` depends only on the scheme and the ground size.
    pub fn resolve<R: Rng + ?Sized>(&self, active: &[usize], rng: &mut R) -> Result<Vec<usize>> {
        let a = self.check_active(active)?;
        Ok(self.resolve_unchecked(&a, rng))
    }

    /// [`Crs::resolve`] for a sorted, duplicate-free, supported active set.
    pub(crate) fn resolve_unchecked<R: Rng + ?Sized>(
        &self,
        a: &[usize],
        rng: &mut R,
    ) -> Vec<usize> {
        let mut out = match &self.plan {
            Plan::Rank1 => {
                let u: f64 = rng.gen();
                rank1_pick(&self.x, a, u).into_iter().collect()
            }
            Plan::Blocks(blocks) => {
                let pri = priorities(self.x.len(), rng);
                let mut out = Vec::new();
                for (block, cap) in blocks {
                    let u: f64 = rng.gen();
                    let inside: Vec<usize> = a
                        .iter()
                        .copied()
                        .filter(|e| block.binary_search(e).is_ok())
                        .collect();
                    match *cap {
                        0 => {}
                        1 => {
                            let xs: Vec<f64> = block.iter().map(|&e| self.x[e]).collect();
                            let local: Vec<usize> = inside
                                .iter()
                                .map(|e| block.binary_search(e).unwrap())
                                .collect();
                            out.extend(rank1_pick(&xs, &local, u).map(|k| block[k]));
                        }
                        c => out.extend(lowest(&inside, &pri, c)),
                    }
                }
                out
            }
            Plan::Quota(r) => {
                let pri = priorities(self.x.len(), rng);
                lowest(a, &pri, *r)
            }
            Plan::Greedy => {
                let pri = priorities(self.x.len(), rng);
                let mut order = a.to_vec();
                order.sort_by(|p, q| pri[*p].total_cmp(&pri[*q]));
                let mut chosen: Vec<usize> = Vec::new();
                for e in order {
                    chosen.push(e);
                    if !self.matroid.is_independent(&chosen).unwrap_or(false) {
                        chosen.pop();
                    }
                }
                chosen
            }
        };
        out.sort_unstable();
        out
    }

    /// Closed-form probability that `element` survives when `active` is the
    /// realized set; `None` for greedy.
    pub fn survival_probability(&self, element: usize, active: &[usize]) -> Result<Option<f64>> {
        let a = self.check_active(active)?;
        if a.binary_search(&element).is_err() {
            return Ok(Some(0.0));
        }
        Ok(match &self.plan {
            Plan::Rank1 => Some(rank1_prob(&self.x, &a, element)),
            Plan::Blocks(blocks) => {
                let (block, cap) = blocks
                    .iter()
                    .find(|(b, _)| b.binary_search(&element).is_ok())
                    .expect("every element lies in a block");
                let inside: Vec<usize> = a
                    .iter()
                    .copied()
                    .filter(|e| block.binary_search(e).is_ok())
                    .collect();
                Some(match *cap {
                    0 => 0.0,
                    1 => {
                        let xs: Vec<f64> = block.iter().map(|&e| self.x[e]).collect();
                        let local: Vec<usize> = inside
                            .iter()
                            .map(|e| block.binary_search(e).unwrap())
                            .collect();
                        rank1_prob(&xs, &local, block.binary_search(&element).unwrap())
                    }
                    c => (c as f64 / inside.len() as f64).min(1.0),
                })
            }
            Plan::Quota(r) => Some((*r as f64 / a.len() as f64).min(1.0)),
            Plan::Greedy => None,
        })
    }
}

fn priorities<R: Rng + ?Sized>(ground: usize, rng: &mut R) -> Vec<f64> {
    (0..ground).map(|_| rng.gen()).collect()
}

/// The `k` elements of `a` with the smallest priorities.
fn lowest(a: &[usize], pri: &[f64], k: usize) -> Vec<usize> {
    let mut v = a.to_vec();
    v.sort_by(|p, q| pri[*p].total_cmp(&pri[*q]));
    v.truncate(k);
    v
}

/// Selection weights of the rank-1 rule on active set `a` (sorted): a single
/// active element always wins; otherwise `i` wins with probability
/// `(sum_{k in A-i} x_k / (|A|-1) + sum_{k not in A} x_k / |A|) / sum_k x_k`.
fn rank1_prob(x: &[f64], a: &[usize], i: usize) -> f64 {
    if a.len() <= 1 {
        return if a == [i] { 1.0 } else { 0.0 };
    }
    let total: f64 = x.iter().sum();
    let inside: f64 = a.iter().map(|&k| x[k]).sum();
    let outside = total - inside;
    let size = a.len() as f64;
    ((inside - x[i]) / (size - 1.0) + outside / size) / total
}

fn rank1_pick(x: &[f64], a: &[usize], u: f64) -> Option<usize> {
    match a.len() {
        0 => None,
        1 => Some(a[0]),
        _ => {
            let mut acc = 0.0;
            for &i in a {
                acc += rank1_prob(x, a, i);
                if u < acc {
                    return Some(i);
                }
            }
            a.last().copied()
        }
    }
}

/// Draw `R(x)` with `element` forced in.
fn conditioned_active<R: Rng + ?Sized>(x: &[f64], element: usize, rng: &mut R) -> Vec<usize> {
    (0..x.len())
        .filter(|&k| {
            let u: f64 = rng.gen();
            k == element || u < x[k]
        })
        .collect()
}

/// `Pr[element survives | element in R(x)]`, sampling `R(x)` with the element
/// conditioned in.
pub fn estimate_marginal(crs: &Crs, element: usize, samples: u64, seed: u64) -> Result<MCEstimate> {
    if element >= crs.x.len() || !(crs.x[element] > 0.0) {
        return Err(NswError::input(format!(
            "element {element} needs a positive marginal"
        )));
    }
    Ok(mc_mean(samples, |s| {
        let mut rng = stream(seed, s, Purpose::Estimator, element as u64);
        let active = conditioned_active(&crs.x, element, &mut rng);
        let out = crs.resolve_unchecked(&active, &mut rng);
        f64::from(u8::from(out.binary_search(&element).is_ok()))
    }))
}

/// Exact conditional marginal of an exact scheme, by enumerating every
/// active set (ground size at most 16).
pub fn exact_marginal(crs: &Crs, element: usize) -> Result<Option<f64>> {
    let g = crs.x.len();
    if g > 16 {
        return Err(NswError::size(
            "ground set for exact marginals",
            g as u128,
            16,
        ));
    }
    if !crs.scheme.is_exact() {
        return Ok(None);
    }
    let support: Vec<usize> = (0..g).filter(|&k| k != element && crs.x[k] > 0.0).collect();
    let mut total = 0.0;
    for mask in 0u32..(1 << support.len()) {
        let mut p = 1.0;
        let mut active = vec![element];
        for (t, &k) in support.iter().enumerate() {
            if mask & (1 << t) != 0 {
                p *= crs.x[k];
                active.push(k);
            } else {
                p *= 1.0 - crs.x[k];
            }
        }
        active.sort_unstable();
        total += p * crs.survival_probability(element, &active)?.unwrap_or(0.0);
    }
    Ok(Some(total))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneViolation {
    pub element: usize,
    pub smaller: Vec<usize>,
    pub larger: Vec<usize>,
    /// Survival estimate on the smaller set minus the larger one.
    pub difference: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub scheme: Scheme,
    pub exhaustive: bool,
    pub pairs: usize,
    /// Pairs whose shared-seed difference is below zero by more than three
    /// standard errors, or whose closed-form probabilities decrease.
    pub violations: Vec<MonotoneViolation>,
}

impl MonotoneReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Largest ground set for exhaustive nested-pair enumeration.
pub const MONOTONE_EXHAUSTIVE_CAP: usize = 10;

/// Check `Pr[i in pi(A1)] >= Pr[i in pi(A2)]` for `i in A1 ⊆ A2 ⊆ support`.
/// On grounds up to [`MONOTONE_EXHAUSTIVE_CAP`] every nested pair is checked,
/// otherwise `pairs` random pairs. Each pair is estimated with `trials`
/// shared-seed runs; exact schemes are also checked in closed form.
pub fn check_monotone(crs: &Crs, trials: u64, pairs: usize, seed: u64) -> Result<MonotoneReport> {
    let support: Vec<usize> = (0..crs.x.len()).filter(|&k| crs.x[k] > 0.0).collect();
    let exhaustive = crs.x.len() <= MONOTONE_EXHAUSTIVE_CAP;
    let mut list: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
    if exhaustive {
        for &i in &support {
            let others: Vec<usize> = support.iter().copied().filter(|&k| k != i).collect();
            // each other element is out, in A2 only, or in both
            let mut code = vec![0u8; others.len()];
            loop {
                let mut s = vec![i];
                let mut l = vec![i];
                for (t, &k) in others.iter().enumerate() {
                    if code[t] >= 1 {
                        l.push(k);
                    }
                    if code[t] == 2 {
                        s.push(k);
                    }
                }
                s.sort_unstable();
                l.sort_unstable();
                list.push((i, s, l));
                let mut t = 0;
                while t < code.len() && code[t] == 2 {
                    code[t] = 0;
                    t += 1;
                }
                if t == code.len() {
                    break;
                }
                code[t] += 1;
            }
        }
    } else {
        let mut rng = stream(seed, u64::MAX, Purpose::Estimator, 0);
        for _ in 0..pairs {
            if support.is_empty() {
                break;
            }
            let i = support[rng.gen_range(0..support.len())];
            let mut s = vec![i];
            let mut l = vec![i];
            for &k in support.iter().filter(|&&k| k != i) {
                let u: f64 = rng.gen();
                if u < 1.0 / 3.0 {
                    s.push(k);
                    l.push(k);
                } else if u < 2.0 / 3.0 {
                    l.push(k);
                }
            }
            s.sort_unstable();
            l.sort_unstable();
            list.push((i, s, l));
        }
    }

    let mut violations = Vec::new();
    for (p, (i, s, l)) in list.iter().enumerate() {
        if let (Some(ps), Some(pl)) = (
            crs.survival_probability(*i, s)?,
            crs.survival_probability(*i, l)?,
        ) {
            if ps < pl - 1e-12 {
                violations.push(MonotoneViolation {
                    element: *i,
                    smaller: s.clone(),
                    larger: l.clone(),
                    difference: ps - pl,
                    stderr: 0.0,
                });
                continue;
            }
        }
        if s == l || trials == 0 {
            continue;
        }
        let est = mc_mean(trials, |t| {
            let key = (p as u64) << 32 | t;
            let mut r1 = stream(seed, key, Purpose::Estimator, 1);
            let mut r2 = stream(seed, key, Purpose::Estimator, 1);
            let a = crs.resolve_unchecked(s, &mut r1).binary_search(i).is_ok();
            let b = crs.resolve_unchecked(l, &mut r2).binary_search(i).is_ok();
            f64::from(u8::from(a)) - f64::from(u8::from(b))
        });
        if est.ci_upper < 0.0 {
            violations.push(MonotoneViolation {
                element: *i,
                smaller: s.clone(),
                larger: l.clone(),
                difference: est.mean,
                stderr: est.stderr,
            });
        }
    }
    Ok(MonotoneReport {
        scheme: crs.scheme,
        exhaustive,
        pairs: list.len(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn uniform(g: usize, r: usize) -> Matroid {
        MatroidSpec::Uniform {
            ground_size: g,
            rank: r,
        }
        .build()
        .unwrap()
    }

    fn triangle() -> Matroid {
        MatroidSpec::Graphic {
            vertex_count: 3,
            edges: vec![(0, 1), (1, 2), (0, 2)],
        }
        .build()
        .unwrap()
    }

    #[test]
    fn rank1_unconditional_probability() {
        let crs = Crs::new(uniform(2, 1), vec![0.5, 0.5], 1.0, Scheme::Rank1Exact).unwrap();
        // Pr[0 selected] = sum over active sets containing 0
        let p = 0.25 * crs.survival_probability(0, &[0, 1]).unwrap().unwrap()
            + 0.25 * crs.survival_probability(0, &[0]).unwrap().unwrap();
        assert!((p - 0.375).abs() < 1e-15);
        assert!((exact_marginal(&crs, 0).unwrap().unwrap() - 0.75).abs() < 1e-15);
        let mut rng = stream(1, 0, Purpose::Estimator, 0);
        for _ in 0..100 {
            let out = crs.resolve(&[0, 1], &mut rng).unwrap();
            assert_eq!(out.len(), 1);
        }
    }

    #[test]
    fn rank1_matches_closed_form_marginals() {
        // x_i / sum(x) * (1 - prod(1 - x_k)) for every element
        let x = vec![0.2, 0.3, 0.1, 0.25];
        let crs = Crs::new(uniform(4, 1), x.clone(), 1.0, Scheme::Rank1Exact).unwrap();
        let total: f64 = x.iter().sum();
        let none: f64 = x.iter().map(|v| 1.0 - v).product();
        for i in 0..4 {
            let cond = exact_marginal(&crs, i).unwrap().unwrap();
            assert!((cond * x[i] - x[i] / total * (1.0 - none)).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_and_small_active_sets() {
        let mut rng = stream(1, 0, Purpose::Estimator, 0);
        for crs in [
            Crs::new(uniform(3, 1), vec![0.3; 3], 1.0, Scheme::Rank1Exact).unwrap(),
            Crs::new(uniform(5, 2), vec![0.4; 5], 1.0, Scheme::UniformQuota).unwrap(),
            Crs::new(
                triangle(),
                vec![1.0 / 3.0; 3],
                1.0,
                Scheme::RandomOrderGreedy,
            )
            .unwrap(),
        ] {
            assert!(crs.resolve(&[], &mut rng).unwrap().is_empty());
        }
        let crs = Crs::new(uniform(5, 2), vec![0.4; 5], 1.0, Scheme::UniformQuota).unwrap();
        assert_eq!(crs.resolve(&[1, 3], &mut rng).unwrap(), vec![1, 3]);
    }

    #[test]
    fn validation_errors() {
        assert!(Crs::new(uniform(2, 1), vec![0.7, 0.7], 1.0, Scheme::Rank1Exact).is_err());
        assert!(Crs::new(uniform(3, 2), vec![0.5; 3], 1.0, Scheme::Rank1Exact).is_err());
        assert!(Crs::new(triangle(), vec![0.3; 3], 1.0, Scheme::UniformQuota).is_err());
        assert!(Crs::new(triangle(), vec![0.3; 3], 1.0, Scheme::PartitionExact).is_err());
        let crs = Crs::new(uniform(2, 1), vec![0.5, 0.0], 1.0, Scheme::Rank1Exact).unwrap();
        let mut rng = stream(1, 0, Purpose::Estimator, 0);
        assert!(crs.resolve(&[1], &mut rng).is_err());
    }

    #[test]
    fn outputs_are_independent_and_deterministic() {
        let part = MatroidSpec::Partition {
            blocks: vec![vec![0, 1, 2], vec![3, 4]],
            capacities: vec![2, 1],
        }
        .build()
        .unwrap();
        let schemes = [
            Crs::new(
                part,
                vec![0.6, 0.7, 0.7, 0.5, 0.5],
                1.0,
                Scheme::PartitionExact,
            )
            .unwrap(),
            Crs::new(uniform(5, 2), vec![0.4; 5], 1.0, Scheme::UniformQuota).unwrap(),
            Crs::new(
                triangle(),
                vec![2.0 / 3.0; 3],
                1.0,
                Scheme::RandomOrderGreedy,
            )
            .unwrap(),
        ];
        for crs in &schemes {
            let g = crs.marginals().len();
            for s in 0..2000u64 {
                let mut rng = stream(9, s, Purpose::Estimator, 0);
                let active: Vec<usize> = (0..g)
                    .filter(|&k| rng.gen::<f64>() < crs.marginals()[k])
                    .collect();
                let mut r1 = stream(9, s, Purpose::ItemCrs, 0);
                let mut r2 = stream(9, s, Purpose::ItemCrs, 0);
                let out = crs.resolve(&active, &mut r1).unwrap();
                assert_eq!(out, crs.resolve(&active, &mut r2).unwrap());
                assert!(out.iter().all(|e| active.contains(e)));
                assert!(crs.matroid().is_independent(&out).unwrap());
            }
        }
    }

    #[test]
    fn single_element_always_survives() {
        let crs = Crs::new(uniform(1, 1), vec![0.3], 1.0, Scheme::Rank1Exact).unwrap();
        let e = estimate_marginal(&crs, 0, 10_000, 4).unwrap();
        assert_eq!(e.mean, 1.0);
    }

    #[test]
    fn estimates_match_exact_marginals() {
        let crs = Crs::new(uniform(2, 1), vec![0.5, 0.5], 1.0, Scheme::Rank1Exact).unwrap();
        let e = estimate_marginal(&crs, 0, 100_000, 5).unwrap();
        assert!(e.covers(0.75), "{e:?}");
        let crs = Crs::new(uniform(5, 2), vec![0.4; 5], 1.0, Scheme::UniformQuota).unwrap();
        let e = estimate_marginal(&crs, 2, 100_000, 6).unwrap();
        assert!(e.covers(exact_marginal(&crs, 2).unwrap().unwrap()), "{e:?}");
    }

    #[test]
    fn greedy_on_triangle_is_balanced() {
        let crs = Crs::new(
            triangle(),
            vec![1.0 / 3.0; 3],
            1.0,
            Scheme::RandomOrderGreedy,
        )
        .unwrap();
        let e = estimate_marginal(&crs, 0, 20_000, 7).unwrap();
        assert!(e.mean >= 1.0 - (-1.0f64).exp() - 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn monotone_checks() {
        let crs = Crs::new(uniform(4, 1), vec![0.25; 4], 1.0, Scheme::Rank1Exact).unwrap();
        let r = check_monotone(&crs, 2000, 0, 1).unwrap();
        assert!(r.exhaustive && r.passed(), "{r:?}");
        assert_eq!(r.pairs, 4 * 27);
        let crs = Crs::new(uniform(5, 2), vec![0.4; 5], 1.0, Scheme::UniformQuota).unwrap();
        assert!(check_monotone(&crs, 2000, 0, 2).unwrap().passed());
    }

    #[test]
    fn equal_sets_give_equal_survival() {
        let crs = Crs::new(uniform(3, 1), vec![0.3; 3], 1.0, Scheme::Rank1Exact).unwrap();
        let a = crs.survival_probability(0, &[0, 2]).unwrap();
        assert_eq!(a, crs.survival_probability(0, &[0, 2]).unwrap());
    }
}
