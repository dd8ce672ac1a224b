//! The four valuation classes and their exact evaluation on item sets.

use serde::{Deserialize, Serialize};

use crate::error::{NswError, Result};
use crate::matroid::{Matroid, MatroidSpec};

/// Matching valuations are evaluated by exhaustive search over edge subsets.
pub const MATCHING_EDGE_CAP: usize = 20;
/// Largest item count for exhaustive monotonicity/submodularity checks.
pub const EXHAUSTIVE_ITEM_CAP: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankTerm {
    pub matroid: MatroidSpec,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchingEdge {
    pub item: usize,
    pub right: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperedge {
    pub item: usize,
    /// One vertex per part `T_1..T_{k-1}`.
    pub vertices: Vec<usize>,
    pub weight: f64,
}

/// Serializable valuation of one agent over the items `0..m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValuationSpec {
    WeightedMatroidRank {
        matroid: MatroidSpec,
        weights: Vec<f64>,
    },
    /// Nonnegative combination of weighted rank functions; the combination
    /// coefficients are folded into the term weights.
    SumOfWeightedRanks { terms: Vec<RankTerm> },
    /// `v(S) = |union of covers[j] for j in S|`.
    Coverage {
        universe_size: usize,
        covers: Vec<Vec<usize>>,
    },
    BipartiteMatchingMatroid {
        right_vertices: usize,
        edges: Vec<MatchingEdge>,
        right_matroid: MatroidSpec,
    },
    KPartiteMatching {
        k: usize,
        part_sizes: Vec<usize>,
        hyperedges: Vec<Hyperedge>,
        part_matroids: Vec<MatroidSpec>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValuationClass {
    WeightedMatroidRank,
    SumOfWeightedRanks,
    Coverage,
    BipartiteMatchingMatroid,
    KPartiteMatching,
}

impl ValuationSpec {
    pub fn class(&self) -> ValuationClass {
        match self {
            ValuationSpec::WeightedMatroidRank { .. } => ValuationClass::WeightedMatroidRank,
            ValuationSpec::SumOfWeightedRanks { .. } => ValuationClass::SumOfWeightedRanks,
            ValuationSpec::Coverage { .. } => ValuationClass::Coverage,
            ValuationSpec::BipartiteMatchingMatroid { .. } => {
                ValuationClass::BipartiteMatchingMatroid
            }
            ValuationSpec::KPartiteMatching { .. } => ValuationClass::KPartiteMatching,
        }
    }

    /// Rewrite a coverage valuation as a sum of rank-1 weighted rank
    /// functions, one per universe element `e`, weighted by the indicator of
    /// the items whose cover contains `e`.
    pub fn coverage_to_rank_sum(&self) -> Result<ValuationSpec> {
        let ValuationSpec::Coverage {
            universe_size,
            covers,
        } = self
        else {
            return Err(NswError::input(
                "coverage_to_rank_sum needs a coverage valuation",
            ));
        };
        let m = covers.len();
        let terms = (0..*universe_size)
            .map(|e| RankTerm {
                matroid: MatroidSpec::Uniform {
                    ground_size: m,
                    rank: 1,
                },
                weights: covers
                    .iter()
                    .map(|c| if c.contains(&e) { 1.0 } else { 0.0 })
                    .collect(),
            })
            .collect();
        Ok(ValuationSpec::SumOfWeightedRanks { terms })
    }

    /// Validate against `m` items and build the matroid oracles.
    pub fn build(&self, m: usize) -> Result<Valuation> {
        Valuation::new(self.clone(), m)
    }
}

#[derive(Debug, Clone)]
enum Built {
    Rank(Vec<(Matroid, Vec<f64>)>),
    Coverage,
    Matching(Matroid),
    KMatching(Vec<Matroid>),
}

/// Validated valuation with its matroid oracles.
#[derive(Debug, Clone)]
pub struct Valuation {
    spec: ValuationSpec,
    items: usize,
    built: Built,
}

fn check_weight(w: f64, path: &str) -> Result<()> {
    if w.is_finite() && w >= 0.0 {
        Ok(())
    } else {
        Err(NswError::Schema {
            path: path.to_string(),
            message: format!("weight {w} must be finite and nonnegative"),
        })
    }
}

fn build_rank_term(
    matroid: &MatroidSpec,
    weights: &[f64],
    m: usize,
    path: &str,
) -> Result<(Matroid, Vec<f64>)> {
    if matroid.ground_size() != m {
        return Err(NswError::Schema {
            path: format!("{path}/matroid"),
            message: format!(
                "matroid ground set has {} elements but there are {m} items",
                matroid.ground_size()
            ),
        });
    }
    if weights.len() != m {
        return Err(NswError::Schema {
            path: format!("{path}/weights"),
            message: format!("expected {m} weights, got {}", weights.len()),
        });
    }
    for (j, &w) in weights.iter().enumerate() {
        check_weight(w, &format!("{path}/weights/{j}"))?;
    }
    let built = matroid
        .build()
        .map_err(|e| e.at(&format!("{path}/matroid")))?;
    Ok((built, weights.to_vec()))
}

impl Valuation {
    pub fn new(spec: ValuationSpec, m: usize) -> Result<Self> {
        let built = match &spec {
            ValuationSpec::WeightedMatroidRank { matroid, weights } => {
                Built::Rank(vec![build_rank_term(matroid, weights, m, "")?])
            }
            ValuationSpec::SumOfWeightedRanks { terms } => Built::Rank(
                terms
                    .iter()
                    .enumerate()
                    .map(|(t, term)| {
                        build_rank_term(&term.matroid, &term.weights, m, &format!("/terms/{t}"))
                    })
                    .collect::<Result<_>>()?,
            ),
            ValuationSpec::Coverage {
                universe_size,
                covers,
            } => {
                if covers.len() != m {
                    return Err(NswError::Schema {
                        path: "/covers".into(),
                        message: format!("expected one cover per item ({m}), got {}", covers.len()),
                    });
                }
                for (j, c) in covers.iter().enumerate() {
                    if let Some(p) = c.iter().position(|&e| e >= *universe_size) {
                        return Err(NswError::Schema {
                            path: format!("/covers/{j}/{p}"),
                            message: format!(
                                "element {} outside universe of size {universe_size}",
                                c[p]
                            ),
                        });
                    }
                }
                Built::Coverage
            }
            ValuationSpec::BipartiteMatchingMatroid {
                right_vertices,
                edges,
                right_matroid,
            } => {
                for (t, e) in edges.iter().enumerate() {
                    if e.item >= m {
                        return Err(NswError::Schema {
                            path: format!("/edges/{t}/item"),
                            message: format!("item {} out of range (m = {m})", e.item),
                        });
                    }
                    if e.right >= *right_vertices {
                        return Err(NswError::Schema {
                            path: format!("/edges/{t}/right"),
                            message: format!(
                                "right vertex {} out of range ({right_vertices})",
                                e.right
                            ),
                        });
                    }
                    check_weight(e.weight, &format!("/edges/{t}/weight"))?;
                }
                if right_matroid.ground_size() != *right_vertices {
                    return Err(NswError::Schema {
                        path: "/right_matroid".into(),
                        message: format!(
                            "matroid ground set has {} elements, expected {right_vertices}",
                            right_matroid.ground_size()
                        ),
                    });
                }
                Built::Matching(right_matroid.build().map_err(|e| e.at("/right_matroid"))?)
            }
            ValuationSpec::KPartiteMatching {
                k,
                part_sizes,
                hyperedges,
                part_matroids,
            } => {
                if *k < 3 {
                    return Err(NswError::Schema {
                        path: "/k".into(),
                        message: format!("k = {k} must be at least 3"),
                    });
                }
                if part_sizes.len() != k - 1 {
                    return Err(NswError::Schema {
                        path: "/part_sizes".into(),
                        message: format!("expected {} part sizes, got {}", k - 1, part_sizes.len()),
                    });
                }
                if part_matroids.len() != k - 1 {
                    return Err(NswError::Schema {
                        path: "/part_matroids".into(),
                        message: format!(
                            "expected {} part matroids, got {}",
                            k - 1,
                            part_matroids.len()
                        ),
                    });
                }
                for (t, h) in hyperedges.iter().enumerate() {
                    if h.item >= m {
                        return Err(NswError::Schema {
                            path: format!("/hyperedges/{t}/item"),
                            message: format!("item {} out of range (m = {m})", h.item),
                        });
                    }
                    if h.vertices.len() != k - 1 {
                        return Err(NswError::Schema {
                            path: format!("/hyperedges/{t}/vertices"),
                            message: format!(
                                "hyperedge needs exactly one vertex in each of {} parts",
                                k - 1
                            ),
                        });
                    }
                    for (l, &v) in h.vertices.iter().enumerate() {
                        if v >= part_sizes[l] {
                            return Err(NswError::Schema {
                                path: format!("/hyperedges/{t}/vertices/{l}"),
                                message: format!(
                                    "vertex {v} outside part of size {}",
                                    part_sizes[l]
                                ),
                            });
                        }
                    }
                    check_weight(h.weight, &format!("/hyperedges/{t}/weight"))?;
                }
                let mut built = Vec::with_capacity(k - 1);
                for (l, pm) in part_matroids.iter().enumerate() {
                    if pm.ground_size() != part_sizes[l] {
                        return Err(NswError::Schema {
                            path: format!("/part_matroids/{l}"),
                            message: format!(
                                "matroid ground set has {} elements, part has {}",
                                pm.ground_size(),
                                part_sizes[l]
                            ),
                        });
                    }
                    built.push(
                        pm.build()
                            .map_err(|e| e.at(&format!("/part_matroids/{l}")))?,
                    );
                }
                Built::KMatching(built)
            }
        };
        Ok(Valuation {
            spec,
            items: m,
            built,
        })
    }

    pub fn spec(&self) -> &ValuationSpec {
        &self.spec
    }

    pub fn items(&self) -> usize {
        self.items
    }

    /// Rank terms `(matroid, weights)` for the rank-based classes.
    pub fn rank_terms(&self) -> Option<&[(Matroid, Vec<f64>)]> {
        match &self.built {
            Built::Rank(t) => Some(t),
            _ => None,
        }
    }

    pub fn right_matroid(&self) -> Option<&Matroid> {
        match &self.built {
            Built::Matching(m) => Some(m),
            _ => None,
        }
    }

    pub fn part_matroids(&self) -> Option<&[Matroid]> {
        match &self.built {
            Built::KMatching(m) => Some(m),
            _ => None,
        }
    }

    fn item_mask(&self, set: &[usize]) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.items];
        for &j in set {
            if j >= self.items {
                return Err(NswError::input(format!(
                    "item {j} out of range (m = {})",
                    self.items
                )));
            }
            mask[j] = true;
        }
        Ok(mask)
    }

    /// Exact value of the item set `set`.
    pub fn evaluate(&self, set: &[usize]) -> Result<f64> {
        let in_set = self.item_mask(set)?;
        match (&self.spec, &self.built) {
            (_, Built::Rank(terms)) => {
                let items: Vec<usize> = (0..self.items).filter(|&j| in_set[j]).collect();
                let mut total = 0.0;
                for (m, w) in terms {
                    total += m.weighted_rank(w, &items)?;
                }
                Ok(total)
            }
            (
                ValuationSpec::Coverage {
                    universe_size,
                    covers,
                },
                _,
            ) => {
                let mut covered = vec![false; *universe_size];
                for (j, c) in covers.iter().enumerate() {
                    if in_set[j] {
                        for &e in c {
                            covered[e] = true;
                        }
                    }
                }
                Ok(covered.iter().filter(|&&c| c).count() as f64)
            }
            (
                ValuationSpec::BipartiteMatchingMatroid {
                    right_vertices,
                    edges,
                    ..
                },
                Built::Matching(matroid),
            ) => {
                let usable: Vec<(usize, Vec<(usize, usize)>, f64)> = edges
                    .iter()
                    .filter(|e| in_set[e.item] && e.weight > 0.0)
                    .map(|e| (e.item, vec![(0, e.right)], e.weight))
                    .collect();
                let parts = [(matroid, *right_vertices)];
                Ok(best_matching(&usable, &parts, self.items)?.0)
            }
            (
                ValuationSpec::KPartiteMatching {
                    part_sizes,
                    hyperedges,
                    ..
                },
                Built::KMatching(matroids),
            ) => {
                let usable: Vec<(usize, Vec<(usize, usize)>, f64)> = hyperedges
                    .iter()
                    .filter(|h| in_set[h.item] && h.weight > 0.0)
                    .map(|h| {
                        (
                            h.item,
                            h.vertices.iter().copied().enumerate().collect(),
                            h.weight,
                        )
                    })
                    .collect();
                let parts: Vec<(&Matroid, usize)> =
                    matroids.iter().zip(part_sizes.iter().copied()).collect();
                Ok(best_matching(&usable, &parts, self.items)?.0)
            }
            _ => unreachable!("valuation spec and built oracle disagree"),
        }
    }

    /// Indices (into `edges` or `hyperedges`) of a maximum-weight matching
    /// using only items of `set`. `None` for the non-matching classes.
    pub fn matching_witness(&self, set: &[usize]) -> Result<Option<Vec<usize>>> {
        let in_set = self.item_mask(set)?;
        let (usable, idx, parts): (Vec<_>, Vec<usize>, Vec<(&Matroid, usize)>) =
            match (&self.spec, &self.built) {
                (
                    ValuationSpec::BipartiteMatchingMatroid {
                        right_vertices,
                        edges,
                        ..
                    },
                    Built::Matching(matroid),
                ) => {
                    let idx: Vec<usize> = (0..edges.len())
                        .filter(|&t| in_set[edges[t].item] && edges[t].weight > 0.0)
                        .collect();
                    let usable = idx
                        .iter()
                        .map(|&t| (edges[t].item, vec![(0, edges[t].right)], edges[t].weight))
                        .collect();
                    (usable, idx, vec![(matroid, *right_vertices)])
                }
                (
                    ValuationSpec::KPartiteMatching {
                        part_sizes,
                        hyperedges,
                        ..
                    },
                    Built::KMatching(matroids),
                ) => {
                    let idx: Vec<usize> = (0..hyperedges.len())
                        .filter(|&t| in_set[hyperedges[t].item] && hyperedges[t].weight > 0.0)
                        .collect();
                    let usable = idx
                        .iter()
                        .map(|&t| {
                            let h = &hyperedges[t];
                            (
                                h.item,
                                h.vertices.iter().copied().enumerate().collect(),
                                h.weight,
                            )
                        })
                        .collect();
                    (
                        usable,
                        idx,
                        matroids.iter().zip(part_sizes.iter().copied()).collect(),
                    )
                }
                _ => return Ok(None),
            };
        let (_, chosen) = best_matching(&usable, &parts, self.items)?;
        Ok(Some(chosen.into_iter().map(|c| idx[c]).collect()))
    }

    /// Values of all `2^m` item subsets, indexed by bitmask.
    pub fn value_table(&self) -> Result<Vec<f64>> {
        const TABLE_CAP: usize = 24;
        if self.items > TABLE_CAP {
            return Err(NswError::size(
                "item count for value table",
                self.items as u128,
                TABLE_CAP as u128,
            ));
        }
        (0..1usize << self.items)
            .map(|mask| {
                let set: Vec<usize> = (0..self.items).filter(|j| mask & (1 << j) != 0).collect();
                self.evaluate(&set)
            })
            .collect()
    }
}

/// Maximum total weight of a set of (hyper)edges with distinct items and, in
/// every part, distinct vertices forming an independent set of that part's
/// matroid. Each edge is `(item, [(part, vertex)], weight)`.
fn best_matching(
    edges: &[(usize, Vec<(usize, usize)>, f64)],
    parts: &[(&Matroid, usize)],
    items: usize,
) -> Result<(f64, Vec<usize>)> {
    if edges.len() > MATCHING_EDGE_CAP {
        return Err(NswError::size(
            "usable matching edges",
            edges.len() as u128,
            MATCHING_EDGE_CAP as u128,
        ));
    }
    struct Search<'a> {
        edges: &'a [(usize, Vec<(usize, usize)>, f64)],
        parts: &'a [(&'a Matroid, usize)],
        item_used: Vec<bool>,
        chosen: Vec<Vec<usize>>,
        picked: Vec<usize>,
        suffix: Vec<f64>,
        best: f64,
        best_set: Vec<usize>,
    }
    impl Search<'_> {
        fn go(&mut self, idx: usize, acc: f64) {
            if acc > self.best {
                self.best = acc;
                self.best_set.clone_from(&self.picked);
            }
            if idx == self.edges.len() || acc + self.suffix[idx] <= self.best {
                return;
            }
            let (item, verts, w) = &self.edges[idx];
            if !self.item_used[*item] {
                let fits = verts.iter().all(|&(p, v)| {
                    if self.chosen[p].contains(&v) {
                        return false;
                    }
                    self.chosen[p].push(v);
                    let ok = self.parts[p]
                        .0
                        .is_independent(&self.chosen[p])
                        .unwrap_or(false);
                    self.chosen[p].pop();
                    ok
                });
                if fits {
                    self.item_used[*item] = true;
                    for &(p, v) in verts {
                        self.chosen[p].push(v);
                    }
                    self.picked.push(idx);
                    self.go(idx + 1, acc + w);
                    self.picked.pop();
                    for &(p, _) in verts {
                        self.chosen[p].pop();
                    }
                    self.item_used[*item] = false;
                }
            }
            self.go(idx + 1, acc);
        }
    }
    let mut suffix = vec![0.0; edges.len() + 1];
    for i in (0..edges.len()).rev() {
        suffix[i] = suffix[i + 1] + edges[i].2;
    }
    let mut s = Search {
        edges,
        parts,
        item_used: vec![false; items],
        chosen: vec![Vec::new(); parts.len()],
        picked: Vec::new(),
        suffix,
        best: 0.0,
        best_set: Vec::new(),
    };
    s.go(0, 0.0);
    Ok((s.best, s.best_set))
}

/// A counterexample found by [`check_monotone_submodular`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Witness {
    /// `v(set + element) < v(set)`.
    NotMonotone { set: Vec<usize>, element: usize },
    /// `v(small + e) - v(small) < v(large + e) - v(large)` with `small ⊆ large`.
    NotSubmodular {
        small: Vec<usize>,
        large: Vec<usize>,
        element: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeReport {
    pub monotone: bool,
    pub submodular: bool,
    pub witness: Option<Witness>,
}

fn mask_items(mask: usize, m: usize) -> Vec<usize> {
    (0..m).filter(|j| mask & (1 << j) != 0).collect()
}

/// Exhaustive monotonicity and submodularity check over all `S ⊆ T`, `e ∉ T`.
pub fn check_monotone_submodular(valuation: &Valuation, m: usize) -> Result<ShapeReport> {
    if m > EXHAUSTIVE_ITEM_CAP {
        return Err(NswError::size(
            "item count for exhaustive check",
            m as u128,
            EXHAUSTIVE_ITEM_CAP as u128,
        ));
    }
    if m != valuation.items() {
        return Err(NswError::input(format!(
            "valuation is over {} items, check requested for {m}",
            valuation.items()
        )));
    }
    const TOL: f64 = 1e-9;
    let f = valuation.value_table()?;
    let full = (1usize << m) - 1;
    let mut report = ShapeReport {
        monotone: true,
        submodular: true,
        witness: None,
    };
    for s in 0..=full {
        for e in (0..m).filter(|e| s & (1 << e) == 0) {
            if f[s | (1 << e)] < f[s] - TOL {
                report.monotone = false;
                report.witness.get_or_insert(Witness::NotMonotone {
                    set: mask_items(s, m),
                    element: e,
                });
                break;
            }
        }
        if !report.monotone {
            break;
        }
    }
    'outer: for t in 0..=full {
        let outside: Vec<usize> = (0..m).filter(|e| t & (1 << e) == 0).collect();
        if outside.is_empty() {
            continue;
        }
        // every submask s of t
        let mut s = t;
        loop {
            for &e in &outside {
                let small_gain = f[s | (1 << e)] - f[s];
                let large_gain = f[t | (1 << e)] - f[t];
                if small_gain < large_gain - TOL {
                    report.submodular = false;
                    if report.witness.is_none() {
                        report.witness = Some(Witness::NotSubmodular {
                            small: mask_items(s, m),
                            large: mask_items(t, m),
                            element: e,
                        });
                    }
                    break 'outer;
                }
            }
            if s == 0 {
                break;
            }
            s = (s - 1) & t;
        }
    }
    Ok(report)
}
