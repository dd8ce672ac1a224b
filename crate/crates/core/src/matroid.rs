//! Matroid oracles: independence, rank, greedy weighted rank and exhaustive
//! matroid-polytope membership.
//!
//! A [`MatroidSpec`] is the serializable description; [`Matroid`] is the
//! validated oracle built from it. Oracles are immutable after construction
//! (the lazily built rank table sits behind a `OnceLock`), so they can be
//! shared freely across threads.

use std::collections::HashSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{NswError, Result};

/// Largest ground set for which explicit independence families are accepted.
pub const EXPLICIT_GROUND_CAP: usize = 16;
/// Largest ground set for exhaustive polytope membership.
pub const POLYTOPE_GROUND_CAP: usize = 20;

/// Serializable description of a matroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatroidSpec {
    Uniform {
        ground_size: usize,
        rank: usize,
    },
    Partition {
        blocks: Vec<Vec<usize>>,
        capacities: Vec<usize>,
    },
    /// Ground element `e` is the edge `edges[e]`; independent sets are forests.
    Graphic {
        vertex_count: usize,
        edges: Vec<(usize, usize)>,
    },
    Explicit {
        ground_size: usize,
        independent_sets: Vec<Vec<usize>>,
    },
}

impl MatroidSpec {
    /// The free matroid on `ground_size` elements.
    pub fn free(ground_size: usize) -> Self {
        MatroidSpec::Uniform {
            ground_size,
            rank: ground_size,
        }
    }

    pub fn ground_size(&self) -> usize {
        match self {
            MatroidSpec::Uniform { ground_size, .. }
            | MatroidSpec::Explicit { ground_size, .. } => *ground_size,
            MatroidSpec::Partition { blocks, .. } => blocks.iter().map(Vec::len).sum(),
            MatroidSpec::Graphic { edges, .. } => edges.len(),
        }
    }

    /// Validate and build the oracle.
    pub fn build(&self) -> Result<Matroid> {
        Matroid::new(self)
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Uniform {
        rank: usize,
    },
    Partition {
        block_of: Vec<usize>,
        capacities: Vec<usize>,
    },
    Graphic {
        vertex_count: usize,
        edges: Vec<(usize, usize)>,
    },
    Explicit {
        family: HashSet<u64>,
    },
    /// Each element is a parallel copy of `base_of[e]` in `base`.
    Parallel {
        base: Box<Matroid>,
        base_of: Vec<usize>,
    },
}

/// The most violated set of an additive matroid is, per block, the prefix of
/// the block's coordinates in decreasing order with the largest excess.
fn additive_polytope_check(
    point: &[f64],
    b: f64,
    tol: f64,
    blocks: &[(Vec<usize>, usize)],
) -> PolytopeCheck {
    let mut set = Vec::new();
    let mut excess = 0.0;
    for (block, cap) in blocks {
        let mut order = block.clone();
        order.sort_by(|p, q| point[*q].total_cmp(&point[*p]));
        let (mut sum, mut best, mut best_len) = (0.0, 0.0, 0);
        for (k, &e) in order.iter().enumerate() {
            sum += point[e];
            let ex = sum - b * (k + 1).min(*cap) as f64;
            if ex > best {
                best = ex;
                best_len = k + 1;
            }
        }
        excess += best;
        set.extend_from_slice(&order[..best_len]);
    }
    if excess > tol {
        set.sort_unstable();
        PolytopeCheck::Violated { set, excess }
    } else {
        PolytopeCheck::Ok
    }
}

/// Coarse classification used to pick contention resolution schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatroidKind {
    Uniform {
        rank: usize,
    },
    Partition,
    Graphic,
    Explicit,
    /// Parallel extension of a free matroid, i.e. a partition matroid with
    /// unit capacities on the parallel classes.
    ParallelOfFree,
    Parallel,
}

/// Validated matroid oracle.
#[derive(Debug)]
pub struct Matroid {
    ground: usize,
    repr: Repr,
    rank_table: OnceLock<Vec<u8>>,
}

impl Clone for Matroid {
    fn clone(&self) -> Self {
        Matroid {
            ground: self.ground,
            repr: self.repr.clone(),
            rank_table: OnceLock::new(),
        }
    }
}

/// Outcome of [`Matroid::polytope_check`].
#[derive(Debug, Clone, PartialEq)]
pub enum PolytopeCheck {
    Ok,
    /// `set` maximizes `sum(point[S]) - b * rank(S)`; `excess` is that maximum.
    Violated {
        set: Vec<usize>,
        excess: f64,
    },
}

impl PolytopeCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, PolytopeCheck::Ok)
    }
}

impl Matroid {
    pub fn new(spec: &MatroidSpec) -> Result<Self> {
        let ground = spec.ground_size();
        let repr = match spec {
            MatroidSpec::Uniform { rank, .. } => Repr::Uniform { rank: *rank },
            MatroidSpec::Partition { blocks, capacities } => {
                if blocks.len() != capacities.len() {
                    return Err(NswError::input(format!(
                        "partition matroid has {} blocks but {} capacities",
                        blocks.len(),
                        capacities.len()
                    )));
                }
                let mut block_of = vec![usize::MAX; ground];
                for (b, block) in blocks.iter().enumerate() {
                    for &e in block {
                        if e >= ground {
                            return Err(NswError::input(format!(
                                "partition block {b} contains element {e} outside ground set of size {ground}"
                            )));
                        }
                        if block_of[e] != usize::MAX {
                            return Err(NswError::input(format!(
                                "element {e} appears in more than one partition block"
                            )));
                        }
                        block_of[e] = b;
                    }
                }
                Repr::Partition {
                    block_of,
                    capacities: capacities.clone(),
                }
            }
            MatroidSpec::Graphic {
                vertex_count,
                edges,
            } => {
                if let Some((e, _)) = edges
                    .iter()
                    .enumerate()
                    .find(|(_, &(a, b))| a >= *vertex_count || b >= *vertex_count)
                {
                    return Err(NswError::input(format!(
                        "graphic matroid edge {e} references a vertex >= {vertex_count}"
                    )));
                }
                Repr::Graphic {
                    vertex_count: *vertex_count,
                    edges: edges.clone(),
                }
            }
            MatroidSpec::Explicit {
                independent_sets, ..
            } => {
                if ground > EXPLICIT_GROUND_CAP {
                    return Err(NswError::size(
                        "explicit matroid ground set",
                        ground as u128,
                        EXPLICIT_GROUND_CAP as u128,
                    ));
                }
                let mut family = HashSet::with_capacity(independent_sets.len());
                for (k, set) in independent_sets.iter().enumerate() {
                    let mut mask = 0u64;
                    for &e in set {
                        if e >= ground {
                            return Err(NswError::input(format!(
                                "independent set {k} contains element {e} outside ground set of size {ground}"
                            )));
                        }
                        if mask & (1 << e) != 0 {
                            return Err(NswError::input(format!(
                                "independent set {k} lists element {e} twice"
                            )));
                        }
                        mask |= 1 << e;
                    }
                    family.insert(mask);
                }
                check_axioms(&family)?;
                Repr::Explicit { family }
            }
        };
        Ok(Matroid {
            ground,
            repr,
            rank_table: OnceLock::new(),
        })
    }

    /// Matroid on `base_of.len()` elements where element `e` is a parallel
    /// copy of `base_of[e]`: a set is independent iff its images are
    /// distinct and independent in `base`.
    pub fn parallel_extension(base: &Matroid, base_of: Vec<usize>) -> Result<Self> {
        if let Some(&e) = base_of.iter().find(|&&e| e >= base.ground) {
            return Err(NswError::input(format!(
                "parallel extension maps onto element {e} outside base ground set"
            )));
        }
        Ok(Matroid {
            ground: base_of.len(),
            repr: Repr::Parallel {
                base: Box::new(base.clone()),
                base_of,
            },
            rank_table: OnceLock::new(),
        })
    }

    pub fn ground_size(&self) -> usize {
        self.ground
    }

    pub fn kind(&self) -> MatroidKind {
        match &self.repr {
            Repr::Uniform { rank } => MatroidKind::Uniform { rank: *rank },
            Repr::Partition { .. } => MatroidKind::Partition,
            Repr::Graphic { .. } => MatroidKind::Graphic,
            Repr::Explicit { .. } => MatroidKind::Explicit,
            Repr::Parallel { base, .. } => match base.repr {
                Repr::Uniform { rank } if rank >= base.ground => MatroidKind::ParallelOfFree,
                _ => MatroidKind::Parallel,
            },
        }
    }

    /// Blocks and capacities when the matroid is a partition matroid
    /// (including parallel extensions of free matroids).
    pub fn partition_blocks(&self) -> Option<(Vec<Vec<usize>>, Vec<usize>)> {
        match &self.repr {
            Repr::Partition {
                block_of,
                capacities,
            } => {
                let mut blocks = vec![Vec::new(); capacities.len()];
                for (e, &b) in block_of.iter().enumerate() {
                    blocks[b].push(e);
                }
                Some((blocks, capacities.clone()))
            }
            Repr::Parallel { base, base_of } if self.kind() == MatroidKind::ParallelOfFree => {
                let mut blocks = vec![Vec::new(); base.ground];
                for (e, &b) in base_of.iter().enumerate() {
                    blocks[b].push(e);
                }
                Some((blocks, vec![1; base.ground]))
            }
            _ => None,
        }
    }

    fn normalize(&self, set: &[usize]) -> Result<Vec<usize>> {
        let mut s = set.to_vec();
        s.sort_unstable();
        s.dedup();
        if let Some(&e) = s.last() {
            if e >= self.ground {
                return Err(NswError::input(format!(
                    "element {e} outside ground set of size {}",
                    self.ground
                )));
            }
        }
        Ok(s)
    }

    /// Independence of a set of distinct, in-range elements.
    fn independent_unchecked(&self, set: &[usize]) -> bool {
        match &self.repr {
            Repr::Uniform { rank } => set.len() <= *rank,
            Repr::Partition {
                block_of,
                capacities,
            } => {
                let mut used = vec![0usize; capacities.len()];
                set.iter().all(|&e| {
                    let b = block_of[e];
                    used[b] += 1;
                    used[b] <= capacities[b]
                })
            }
            Repr::Graphic {
                vertex_count,
                edges,
            } => {
                let mut dsu = Dsu::new(*vertex_count);
                set.iter().all(|&e| {
                    let (a, b) = edges[e];
                    dsu.union(a, b)
                })
            }
            Repr::Explicit { family } => {
                let mask = set.iter().fold(0u64, |m, &e| m | (1 << e));
                family.contains(&mask)
            }
            Repr::Parallel { base, base_of } => {
                let mut image: Vec<usize> = set.iter().map(|&e| base_of[e]).collect();
                image.sort_unstable();
                let before = image.len();
                image.dedup();
                image.len() == before && base.independent_unchecked(&image)
            }
        }
    }

    pub fn is_independent(&self, set: &[usize]) -> Result<bool> {
        let s = self.normalize(set)?;
        Ok(self.independent_unchecked(&s))
    }

    /// Size of a maximum independent subset, by greedy in ascending index order.
    pub fn rank(&self, set: &[usize]) -> Result<usize> {
        let s = self.normalize(set)?;
        Ok(self.greedy_basis(s.into_iter()).len())
    }

    fn greedy_basis(&self, order: impl Iterator<Item = usize>) -> Vec<usize> {
        let mut basis = Vec::new();
        for e in order {
            basis.push(e);
            if !self.independent_unchecked(&basis) {
                basis.pop();
            }
        }
        basis
    }

    /// Maximum-weight independent subset of `set`: greedy in decreasing
    /// weight, ties by ascending index. Zero-weight elements are skipped.
    pub fn max_weight_independent(&self, weights: &[f64], set: &[usize]) -> Result<Vec<usize>> {
        self.check_weights(weights)?;
        let mut s = self.normalize(set)?;
        s.retain(|&e| weights[e] > 0.0);
        s.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
        Ok(self.greedy_basis(s.into_iter()))
    }

    pub fn weighted_rank(&self, weights: &[f64], set: &[usize]) -> Result<f64> {
        let basis = self.max_weight_independent(weights, set)?;
        Ok(basis.iter().map(|&e| weights[e]).sum())
    }

    fn check_weights(&self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.ground {
            return Err(NswError::input(format!(
                "expected {} weights, got {}",
                self.ground,
                weights.len()
            )));
        }
        if let Some((e, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(NswError::input(format!(
                "weight of element {e} is {w}; weights must be finite and nonnegative"
            )));
        }
        Ok(())
    }

    /// Rank of every subset of the ground set, indexed by bitmask.
    ///
    /// Built once with the basis recurrence: a maximal independent subset of
    /// `S - e` extended by `e` when that stays independent is maximal in `S`.
    pub fn rank_table(&self) -> Result<&[u8]> {
        if self.ground > POLYTOPE_GROUND_CAP {
            return Err(NswError::size(
                "matroid ground set for exhaustive enumeration",
                self.ground as u128,
                POLYTOPE_GROUND_CAP as u128,
            ));
        }
        Ok(self.rank_table.get_or_init(|| {
            let size = 1usize << self.ground;
            let mut basis = vec![0u32; size];
            let mut rank = vec![0u8; size];
            let mut buf = Vec::with_capacity(self.ground);
            for mask in 1..size {
                let e = mask.trailing_zeros() as usize;
                let rest = mask & (mask - 1);
                let candidate = basis[rest] | (1 << e);
                buf.clear();
                buf.extend((0..self.ground).filter(|&k| candidate & (1 << k) != 0));
                if self.independent_unchecked(&buf) {
                    basis[mask] = candidate;
                    rank[mask] = rank[rest] + 1;
                } else {
                    basis[mask] = basis[rest];
                    rank[mask] = rank[rest];
                }
            }
            rank
        }))
    }

    /// Blocks and capacities when the rank is additive over blocks with
    /// `rank(S ∩ B) = min(|S ∩ B|, cap)`: uniform and partition matroids.
    fn additive_blocks(&self) -> Option<Vec<(Vec<usize>, usize)>> {
        if let Repr::Uniform { rank } = self.repr {
            return Some(vec![((0..self.ground).collect(), rank)]);
        }
        self.partition_blocks()
            .map(|(b, c)| b.into_iter().zip(c).collect())
    }

    /// Membership of `point` in `b * P(M)`. Uniform and partition matroids
    /// are checked block-wise through sorted prefixes; every other matroid
    /// over all subsets.
    pub fn polytope_check(&self, point: &[f64], b: f64, tol: f64) -> Result<PolytopeCheck> {
        if point.len() != self.ground {
            return Err(NswError::input(format!(
                "point has {} coordinates, ground set has {}",
                point.len(),
                self.ground
            )));
        }
        if !(b > 0.0 && b <= 1.0) {
            return Err(NswError::input(format!("scale b = {b} must lie in (0, 1]")));
        }
        if let Some((e, v)) = point
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < -tol)
        {
            return Err(NswError::input(format!(
                "coordinate {e} is {v}; points must be nonnegative"
            )));
        }
        if let Some(blocks) = self.additive_blocks() {
            return Ok(additive_polytope_check(point, b, tol, &blocks));
        }
        let ranks = self.rank_table()?;
        let mut best: Option<(usize, f64)> = None;
        for (mask, &r) in ranks.iter().enumerate().skip(1) {
            let mut sum = 0.0;
            let mut m = mask;
            while m != 0 {
                let e = m.trailing_zeros() as usize;
                sum += point[e];
                m &= m - 1;
            }
            let excess = sum - b * r as f64;
            if excess > tol && best.is_none_or(|(_, x)| excess > x) {
                best = Some((mask, excess));
            }
        }
        Ok(match best {
            None => PolytopeCheck::Ok,
            Some((mask, excess)) => PolytopeCheck::Violated {
                set: (0..self.ground).filter(|&e| mask & (1 << e) != 0).collect(),
                excess,
            },
        })
    }

    /// Nonempty flats (closed sets) with their ranks. The inequalities
    /// `sum(x[F]) <= rank(F)` over flats, with `x >= 0`, describe `P(M)`.
    pub fn flats(&self) -> Result<Vec<(Vec<usize>, usize)>> {
        let ranks = self.rank_table()?;
        let full = (1usize << self.ground) - 1;
        let mut out = Vec::new();
        for mask in 1..=full {
            let r = ranks[mask];
            let closed = (0..self.ground)
                .filter(|&e| mask & (1 << e) == 0)
                .all(|e| ranks[mask | (1 << e)] > r);
            if closed {
                let set = (0..self.ground).filter(|&e| mask & (1 << e) != 0).collect();
                out.push((set, r as usize));
            }
        }
        Ok(out)
    }
}

fn check_axioms(family: &HashSet<u64>) -> Result<()> {
    if !family.contains(&0) {
        return Err(NswError::Axiom(
            "family does not contain the empty set".into(),
        ));
    }
    for &set in family {
        let mut m = set;
        while m != 0 {
            let bit = m & m.wrapping_neg();
            if !family.contains(&(set & !bit)) {
                return Err(NswError::Axiom(format!(
                    "family is not downward closed: {} is independent but {} is not",
                    fmt_mask(set),
                    fmt_mask(set & !bit)
                )));
            }
            m &= m - 1;
        }
    }
    // With heredity, exchange between sets whose sizes differ by one suffices.
    let max_size = family.iter().map(|s| s.count_ones()).max().unwrap_or(0);
    let mut by_size: Vec<Vec<u64>> = vec![Vec::new(); max_size as usize + 1];
    for &s in family {
        by_size[s.count_ones() as usize].push(s);
    }
    for k in 0..max_size as usize {
        for &small in &by_size[k] {
            for &large in &by_size[k + 1] {
                let mut diff = large & !small;
                let mut ok = false;
                while diff != 0 {
                    let bit = diff & diff.wrapping_neg();
                    if family.contains(&(small | bit)) {
                        ok = true;
                        break;
                    }
                    diff &= diff - 1;
                }
                if !ok {
                    return Err(NswError::Axiom(format!(
                        "exchange property fails for {} and {}",
                        fmt_mask(small),
                        fmt_mask(large)
                    )));
                }
            }
        }
    }
    Ok(())
}

fn fmt_mask(mask: u64) -> String {
    let items: Vec<String> = (0..64)
        .filter(|e| mask & (1 << e) != 0)
        .map(|e| e.to_string())
        .collect();
    format!("{{{}}}", items.join(","))
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}
