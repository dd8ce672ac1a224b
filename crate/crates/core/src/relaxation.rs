//! The concave-convex relaxation programs as explicit variable and
//! constraint structures.

use std::fmt;
use std::sync::OnceLock;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{NswError, Result};
use crate::instance::Instance;
use crate::matroid::{Matroid, PolytopeCheck};
use crate::valuation::{ValuationClass, ValuationSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProgramKind {
    /// Weighted matroid rank valuations: `x_i` in the agent's matroid polytope.
    P1,
    /// Sums of weighted rank functions with per-term `z_ijk <= x_ij`.
    SumRanks,
    /// Bipartite matching with a matroid on the right side.
    Matching,
    /// k-partite hypergraph matching with a matroid on every part.
    KMatching,
    /// Coverage with per-element fractions `x_ije <= x_ij`.
    CoverageP1pp,
}

impl fmt::Display for ProgramKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProgramKind::P1 => "P1",
            ProgramKind::SumRanks => "SumRanks",
            ProgramKind::Matching => "Matching",
            ProgramKind::KMatching => "KMatching",
            ProgramKind::CoverageP1pp => "CoverageP1pp",
        };
        f.write_str(s)
    }
}

/// What a program variable stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    /// `x_ij`.
    Assign { item: usize },
    /// `z_ijk` of rank term `term`.
    RankTerm { item: usize, term: usize },
    /// `z_{i,j,k}` for the agent's edge `edge = (item, right)`.
    Edge {
        edge: usize,
        item: usize,
        right: usize,
    },
    /// `z_e` for the agent's hyperedge `edge`.
    Hyperedge { edge: usize, item: usize },
    /// `x_ije`: the share of item `item` covering element `element`.
    Cover { item: usize, element: usize },
}

impl VarRole {
    pub fn item(&self) -> usize {
        match *self {
            VarRole::Assign { item }
            | VarRole::RankTerm { item, .. }
            | VarRole::Edge { item, .. }
            | VarRole::Hyperedge { item, .. }
            | VarRole::Cover { item, .. } => item,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarInfo {
    pub agent: usize,
    pub role: VarRole,
}

/// `weight * values[var] * y_item` inside agent `agent`'s factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjTerm {
    pub agent: usize,
    pub var: usize,
    pub item: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// The vector `u_e = sum(values[aggregates[e]])` lies in `P(matroids[matroid])`.
    Polytope {
        agent: usize,
        matroid: usize,
        aggregates: Vec<Vec<usize>>,
        label: String,
    },
    /// `sum(values[vars]) <= 1` over everything touching `item`.
    ItemSum { item: usize, vars: Vec<usize> },
    /// `values[lhs] <= values[rhs]`.
    Coupling { lhs: usize, rhs: usize },
    /// `sum(values[vars]) <= 1` for one agent-side aggregate.
    UnitSum {
        agent: usize,
        vars: Vec<usize>,
        label: String,
    },
}

/// One `<=` row of the materialized linear system.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// The feasible region as explicit `<=` rows plus the box `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub vars: usize,
    pub rows: Vec<Row>,
}

#[derive(Debug)]
pub struct ProgramSpec {
    pub kind: ProgramKind,
    pub n: usize,
    pub m: usize,
    pub vars: Vec<VarInfo>,
    pub objective: Vec<ObjTerm>,
    pub constraints: Vec<Constraint>,
    /// Matroids referenced by polytope constraints.
    pub matroids: Vec<Matroid>,
    /// Per agent, indices into `objective`.
    pub agent_terms: Vec<Vec<usize>>,
    /// Per agent and item, the `x_ij` variable where the layout has one.
    assign: Vec<Vec<Option<usize>>>,
    system: OnceLock<Result<LinearSystem>>,
}

impl Clone for ProgramSpec {
    fn clone(&self) -> Self {
        ProgramSpec {
            kind: self.kind,
            n: self.n,
            m: self.m,
            vars: self.vars.clone(),
            objective: self.objective.clone(),
            constraints: self.constraints.clone(),
            matroids: self.matroids.clone(),
            agent_terms: self.agent_terms.clone(),
            assign: self.assign.clone(),
            system: OnceLock::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalSolution {
    pub values: Vec<f64>,
    pub feasibility_tol: f64,
}

impl FractionalSolution {
    pub fn new(values: Vec<f64>) -> Self {
        FractionalSolution {
            values,
            feasibility_tol: 1e-7,
        }
    }

    pub fn zeros(program: &ProgramSpec) -> Self {
        FractionalSolution::new(vec![0.0; program.vars.len()])
    }
}

/// Log-coordinates `u_j = log y_j` of a dual point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub log_y: Vec<f64>,
}

impl DualPoint {
    pub fn zeros(m: usize) -> Self {
        DualPoint {
            log_y: vec![0.0; m],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: usize,
    pub description: String,
    /// Amount by which the constraint is exceeded.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Ok,
    Violations(Vec<Violation>),
}

impl Feasibility {
    pub fn is_ok(&self) -> bool {
        matches!(self, Feasibility::Ok)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DualSeparation {
    Ok,
    /// The `n` smallest coordinates and their (negative) sum.
    Violated {
        set: Vec<usize>,
        sum: f64,
    },
}

/// Program kind selected by the agents' valuation classes.
pub fn program_kind(classes: &[ValuationClass]) -> Result<ProgramKind> {
    use ValuationClass::*;
    let all = |c: ValuationClass| classes.iter().all(|&x| x == c);
    if all(WeightedMatroidRank) {
        Ok(ProgramKind::P1)
    } else if all(Coverage) {
        Ok(ProgramKind::CoverageP1pp)
    } else if all(BipartiteMatchingMatroid) {
        Ok(ProgramKind::Matching)
    } else if all(KPartiteMatching) {
        Ok(ProgramKind::KMatching)
    } else if classes
        .iter()
        .all(|c| matches!(c, WeightedMatroidRank | SumOfWeightedRanks | Coverage))
    {
        Ok(ProgramKind::SumRanks)
    } else {
        Err(NswError::input(format!(
            "unsupported mix of valuation classes {classes:?}; matching classes cannot be combined with others"
        )))
    }
}

/// Build the program selected by the instance's valuation classes.
pub fn build_program(instance: &Instance) -> Result<ProgramSpec> {
    build_program_as(instance, program_kind(&instance.classes())?)
}

/// Rank terms of an agent for the sum-of-ranks layout (coverage is converted).
fn rank_terms_of(spec: &ValuationSpec, m: usize) -> Result<Vec<(Matroid, Vec<f64>)>> {
    let spec = match spec {
        ValuationSpec::Coverage { .. } => spec.coverage_to_rank_sum()?,
        other => other.clone(),
    };
    let v = spec.build(m)?;
    v.rank_terms()
        .map(|t| t.to_vec())
        .ok_or_else(|| NswError::input("valuation has no rank-term form"))
}

/// Build a specific program kind. `SumRanks` accepts every rank-based and
/// coverage instance; the other kinds need the matching class throughout.
pub fn build_program_as(instance: &Instance, kind: ProgramKind) -> Result<ProgramSpec> {
    let (n, m) = (instance.n, instance.m);
    let mut p = ProgramSpec {
        kind,
        n,
        m,
        vars: Vec::new(),
        objective: Vec::new(),
        constraints: Vec::new(),
        matroids: Vec::new(),
        agent_terms: vec![Vec::new(); n],
        assign: vec![vec![None; m]; n],
        system: OnceLock::new(),
    };
    let wrong = |i: usize| {
        NswError::input(format!(
            "agent {i} has a {:?} valuation, which the {kind} program does not accept",
            instance.valuation(i).spec().class()
        ))
    };
    let mut item_vars: Vec<Vec<usize>> = vec![Vec::new(); m];
    let add_var = |p: &mut ProgramSpec, agent: usize, role: VarRole| {
        p.vars.push(VarInfo { agent, role });
        p.vars.len() - 1
    };
    let add_term = |p: &mut ProgramSpec, agent: usize, var: usize, item: usize, weight: f64| {
        p.objective.push(ObjTerm {
            agent,
            var,
            item,
            weight,
        });
        let t = p.objective.len() - 1;
        p.agent_terms[agent].push(t);
    };

    // x_ij block for the layouts that have one
    if matches!(
        kind,
        ProgramKind::P1 | ProgramKind::SumRanks | ProgramKind::CoverageP1pp
    ) {
        for i in 0..n {
            for j in 0..m {
                let v = add_var(&mut p, i, VarRole::Assign { item: j });
                p.assign[i][j] = Some(v);
                item_vars[j].push(v);
            }
        }
    }

    match kind {
        ProgramKind::P1 => {
            for i in 0..n {
                let val = instance.valuation(i);
                let terms = match val.spec() {
                    ValuationSpec::WeightedMatroidRank { .. } => val.rank_terms().unwrap(),
                    _ => return Err(wrong(i)),
                };
                let (matroid, weights) = &terms[0];
                for j in 0..m {
                    let v = p.assign[i][j].unwrap();
                    add_term(&mut p, i, v, j, weights[j]);
                }
                p.matroids.push(matroid.clone());
                p.constraints.push(Constraint::Polytope {
                    agent: i,
                    matroid: p.matroids.len() - 1,
                    aggregates: (0..m).map(|j| vec![p.assign[i][j].unwrap()]).collect(),
                    label: format!("x_{i} in P(M_{i})"),
                });
            }
        }
        ProgramKind::SumRanks => {
            for i in 0..n {
                let spec = instance.valuation(i).spec();
                if !matches!(
                    spec.class(),
                    ValuationClass::WeightedMatroidRank
                        | ValuationClass::SumOfWeightedRanks
                        | ValuationClass::Coverage
                ) {
                    return Err(wrong(i));
                }
                for (k, (matroid, weights)) in rank_terms_of(spec, m)?.into_iter().enumerate() {
                    let mut z = Vec::with_capacity(m);
                    for j in 0..m {
                        let v = add_var(&mut p, i, VarRole::RankTerm { item: j, term: k });
                        add_term(&mut p, i, v, j, weights[j]);
                        z.push(v);
                    }
                    p.matroids.push(matroid);
                    p.constraints.push(Constraint::Polytope {
                        agent: i,
                        matroid: p.matroids.len() - 1,
                        aggregates: z.iter().map(|&v| vec![v]).collect(),
                        label: format!("z_{i}*{k} in P(M_{i}{k})"),
                    });
                    for (j, &v) in z.iter().enumerate() {
                        p.constraints.push(Constraint::Coupling {
                            lhs: v,
                            rhs: p.assign[i][j].unwrap(),
                        });
                    }
                }
            }
        }
        ProgramKind::CoverageP1pp => {
            for i in 0..n {
                let ValuationSpec::Coverage {
                    universe_size,
                    covers,
                } = instance.valuation(i).spec()
                else {
                    return Err(wrong(i));
                };
                for e in 0..*universe_size {
                    let mut block = Vec::new();
                    for (j, c) in covers.iter().enumerate() {
                        if c.contains(&e) {
                            let v = add_var(
                                &mut p,
                                i,
                                VarRole::Cover {
                                    item: j,
                                    element: e,
                                },
                            );
                            add_term(&mut p, i, v, j, 1.0);
                            block.push((j, v));
                        }
                    }
                    if !block.is_empty() {
                        p.constraints.push(Constraint::UnitSum {
                            agent: i,
                            vars: block.iter().map(|&(_, v)| v).collect(),
                            label: format!("sum_j x_{i}j{e} <= 1"),
                        });
                    }
                    for (j, v) in block {
                        p.constraints.push(Constraint::Coupling {
                            lhs: v,
                            rhs: p.assign[i][j].unwrap(),
                        });
                    }
                }
            }
        }
        ProgramKind::Matching => {
            for i in 0..n {
                let val = instance.valuation(i);
                let ValuationSpec::BipartiteMatchingMatroid {
                    right_vertices,
                    edges,
                    ..
                } = val.spec()
                else {
                    return Err(wrong(i));
                };
                let mut at_right = vec![Vec::new(); *right_vertices];
                for (t, e) in edges.iter().enumerate() {
                    let v = add_var(
                        &mut p,
                        i,
                        VarRole::Edge {
                            edge: t,
                            item: e.item,
                            right: e.right,
                        },
                    );
                    add_term(&mut p, i, v, e.item, e.weight);
                    item_vars[e.item].push(v);
                    at_right[e.right].push(v);
                }
                for (k, vars) in at_right.iter().enumerate() {
                    if !vars.is_empty() {
                        p.constraints.push(Constraint::UnitSum {
                            agent: i,
                            vars: vars.clone(),
                            label: format!("u_{i},{k} <= 1"),
                        });
                    }
                }
                p.matroids.push(val.right_matroid().unwrap().clone());
                p.constraints.push(Constraint::Polytope {
                    agent: i,
                    matroid: p.matroids.len() - 1,
                    aggregates: at_right,
                    label: format!("u_{i} in P(M_{i})"),
                });
            }
        }
        ProgramKind::KMatching => {
            let mut k_seen = None;
            for i in 0..n {
                let val = instance.valuation(i);
                let ValuationSpec::KPartiteMatching {
                    k,
                    part_sizes,
                    hyperedges,
                    ..
                } = val.spec()
                else {
                    return Err(wrong(i));
                };
                if *k_seen.get_or_insert(*k) != *k {
                    return Err(NswError::input("k-partite agents must share the same k"));
                }
                let mut at_vertex: Vec<Vec<Vec<usize>>> =
                    part_sizes.iter().map(|&s| vec![Vec::new(); s]).collect();
                for (t, h) in hyperedges.iter().enumerate() {
                    let v = add_var(
                        &mut p,
                        i,
                        VarRole::Hyperedge {
                            edge: t,
                            item: h.item,
                        },
                    );
                    add_term(&mut p, i, v, h.item, h.weight);
                    item_vars[h.item].push(v);
                    for (l, &vert) in h.vertices.iter().enumerate() {
                        at_vertex[l][vert].push(v);
                    }
                }
                for (l, (agg, matroid)) in at_vertex
                    .into_iter()
                    .zip(val.part_matroids().unwrap())
                    .enumerate()
                {
                    for (vert, vars) in agg.iter().enumerate() {
                        if !vars.is_empty() {
                            p.constraints.push(Constraint::UnitSum {
                                agent: i,
                                vars: vars.clone(),
                                label: format!("u^{i},{}_{vert} <= 1", l + 1),
                            });
                        }
                    }
                    p.matroids.push(matroid.clone());
                    p.constraints.push(Constraint::Polytope {
                        agent: i,
                        matroid: p.matroids.len() - 1,
                        aggregates: agg,
                        label: format!("u^{i},{} in P(M_{i},{})", l + 1, l + 1),
                    });
                }
            }
        }
    }

    for (j, vars) in item_vars.into_iter().enumerate() {
        p.constraints.push(Constraint::ItemSum { item: j, vars });
    }
    Ok(p)
}

impl ProgramSpec {
    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn count_constraints(&self, pred: impl Fn(&Constraint) -> bool) -> usize {
        self.constraints.iter().filter(|c| pred(c)).count()
    }

    pub fn assign_var(&self, agent: usize, item: usize) -> Option<usize> {
        self.assign[agent][item]
    }

    /// Agents none of whose objective terms has positive weight.
    pub fn degenerate_agents(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| {
                self.agent_terms[i]
                    .iter()
                    .all(|&t| self.objective[t].weight <= 0.0)
            })
            .collect()
    }

    /// `a_ij = sum of weight * value` over the agent's terms on item `j`.
    pub fn coefficient_matrix(&self, sol: &FractionalSolution) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.m]; self.n];
        for t in &self.objective {
            a[t.agent][t.item] += t.weight * sol.values[t.var];
        }
        a
    }

    /// Probability-like marginal of agent `i` on item `j`: `x_ij`, or the
    /// total edge mass on item `j` for the matching layouts.
    pub fn item_marginals(&self, sol: &FractionalSolution) -> Vec<Vec<f64>> {
        let mut x = vec![vec![0.0; self.m]; self.n];
        match self.kind {
            ProgramKind::P1 | ProgramKind::SumRanks | ProgramKind::CoverageP1pp => {
                for (i, row) in x.iter_mut().enumerate() {
                    for (j, xij) in row.iter_mut().enumerate() {
                        *xij = sol.values[self.assign[i][j].unwrap()];
                    }
                }
            }
            ProgramKind::Matching | ProgramKind::KMatching => {
                for (v, info) in self.vars.iter().enumerate() {
                    x[info.agent][info.role.item()] += sol.values[v];
                }
            }
        }
        x
    }

    /// Integral solution induced by an allocation, following the validity
    /// constructions: each agent keeps an optimal independent structure
    /// inside its bundle. Its objective at `u = 0` is the product of values.
    pub fn integral_solution(
        &self,
        instance: &Instance,
        owner: &[Option<usize>],
    ) -> Result<FractionalSolution> {
        if owner.len() != self.m {
            return Err(NswError::input(
                "allocation length differs from the item count",
            ));
        }
        let mut values = vec![0.0; self.vars.len()];
        let bundles: Vec<Vec<usize>> = (0..self.n)
            .map(|i| (0..self.m).filter(|&j| owner[j] == Some(i)).collect())
            .collect();
        match self.kind {
            ProgramKind::P1 => {
                for i in 0..self.n {
                    let (matroid, weights) = &instance.valuation(i).rank_terms().unwrap()[0];
                    for j in matroid.max_weight_independent(weights, &bundles[i])? {
                        values[self.assign[i][j].unwrap()] = 1.0;
                    }
                }
            }
            ProgramKind::SumRanks => {
                for i in 0..self.n {
                    for &j in &bundles[i] {
                        values[self.assign[i][j].unwrap()] = 1.0;
                    }
                    let terms = rank_terms_of(instance.valuation(i).spec(), self.m)?;
                    for (k, (matroid, weights)) in terms.iter().enumerate() {
                        let chosen = matroid.max_weight_independent(weights, &bundles[i])?;
                        for (v, info) in self.vars.iter().enumerate() {
                            if let (true, VarRole::RankTerm { item, term }) =
                                (info.agent == i, info.role)
                            {
                                if term == k && chosen.contains(&item) {
                                    values[v] = 1.0;
                                }
                            }
                        }
                    }
                }
            }
            ProgramKind::CoverageP1pp => {
                for i in 0..self.n {
                    for &j in &bundles[i] {
                        values[self.assign[i][j].unwrap()] = 1.0;
                    }
                    let mut covered = std::collections::HashSet::new();
                    for (v, info) in self.vars.iter().enumerate() {
                        if let (true, VarRole::Cover { item, element }) =
                            (info.agent == i, info.role)
                        {
                            if owner[item] == Some(i) && covered.insert(element) {
                                values[v] = 1.0;
                            }
                        }
                    }
                }
            }
            ProgramKind::Matching | ProgramKind::KMatching => {
                for i in 0..self.n {
                    let chosen = instance
                        .valuation(i)
                        .matching_witness(&bundles[i])?
                        .unwrap_or_default();
                    for (v, info) in self.vars.iter().enumerate() {
                        if let (
                            true,
                            VarRole::Edge { edge, .. } | VarRole::Hyperedge { edge, .. },
                        ) = (info.agent == i, info.role)
                        {
                            if chosen.contains(&edge) {
                                values[v] = 1.0;
                            }
                        }
                    }
                }
            }
        }
        Ok(FractionalSolution::new(values))
    }

    /// The feasible region as `<=` rows over flats of each polytope matroid,
    /// plus the box `[0, 1]` on every variable.
    pub fn linear_system(&self) -> Result<&LinearSystem> {
        self.system
            .get_or_init(|| {
                let mut rows = Vec::new();
                for c in &self.constraints {
                    match c {
                        Constraint::Polytope {
                            matroid,
                            aggregates,
                            ..
                        } => {
                            for (flat, r) in self.matroids[*matroid].flats()? {
                                let coeffs: Vec<(usize, f64)> = flat
                                    .iter()
                                    .flat_map(|&e| aggregates[e].iter().map(|&v| (v, 1.0)))
                                    .collect();
                                if !coeffs.is_empty() {
                                    rows.push(Row {
                                        coeffs,
                                        rhs: r as f64,
                                    });
                                }
                            }
                        }
                        Constraint::ItemSum { vars, .. } | Constraint::UnitSum { vars, .. } => {
                            if !vars.is_empty() {
                                rows.push(Row {
                                    coeffs: vars.iter().map(|&v| (v, 1.0)).collect(),
                                    rhs: 1.0,
                                });
                            }
                        }
                        Constraint::Coupling { lhs, rhs } => rows.push(Row {
                            coeffs: vec![(*lhs, 1.0), (*rhs, -1.0)],
                            rhs: 0.0,
                        }),
                    }
                }
                Ok(LinearSystem {
                    vars: self.vars.len(),
                    rows,
                })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// A vertex of the feasible region maximizing `c . x`.
    pub fn lp_maximize(&self, c: &[f64]) -> Result<Vec<f64>> {
        let sys = self.linear_system()?;
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = c.iter().map(|&ci| lp.add_var(ci, (0.0, 1.0))).collect();
        for row in &sys.rows {
            let expr: Vec<_> = row.coeffs.iter().map(|&(v, a)| (vars[v], a)).collect();
            lp.add_constraint(expr.as_slice(), ComparisonOp::Le, row.rhs);
        }
        let sol = lp
            .solve()
            .map_err(|e| NswError::Infeasible(format!("linear oracle failed: {e}")))?
            .into_solution()
            .map_err(|_| NswError::Infeasible("linear oracle was interrupted".into()))?;
        Ok(vars
            .iter()
            .map(|&v| sol.var_value(v).clamp(0.0, 1.0))
            .collect())
    }
}

/// Per-agent inner sums `sum_terms weight * value * exp(u_item)`.
pub fn agent_sums(program: &ProgramSpec, sol: &FractionalSolution, dual: &DualPoint) -> Vec<f64> {
    let mut s = vec![0.0; program.n];
    for t in &program.objective {
        s[t.agent] += t.weight * sol.values[t.var] * dual.log_y[t.item].exp();
    }
    s
}

/// `sum_i log(sum_terms weight * value * y_item)`, or `-inf` when some
/// agent's sum is not positive.
pub fn log_objective(program: &ProgramSpec, sol: &FractionalSolution, dual: &DualPoint) -> f64 {
    let mut total = 0.0;
    for s in agent_sums(program, sol, dual) {
        if !(s > 0.0) {
            return f64::NEG_INFINITY;
        }
        total += s.ln();
    }
    total
}

/// Check every constraint within `sol.feasibility_tol`.
pub fn feasible(program: &ProgramSpec, sol: &FractionalSolution) -> Feasibility {
    let tol = sol.feasibility_tol;
    let mut out = Vec::new();
    if sol.values.len() != program.vars.len() {
        out.push(Violation {
            constraint: usize::MAX,
            description: format!(
                "solution has {} values, program has {} variables",
                sol.values.len(),
                program.vars.len()
            ),
            excess: f64::INFINITY,
        });
        return Feasibility::Violations(out);
    }
    for (v, &x) in sol.values.iter().enumerate() {
        if !x.is_finite() || x < -tol || x > 1.0 + tol {
            out.push(Violation {
                constraint: usize::MAX,
                description: format!("variable {v} = {x} outside [0, 1]"),
                excess: if x < 0.0 { -x } else { x - 1.0 },
            });
        }
    }
    let sum = |vars: &[usize]| vars.iter().map(|&v| sol.values[v]).sum::<f64>();
    for (idx, c) in program.constraints.iter().enumerate() {
        match c {
            Constraint::Polytope {
                matroid,
                aggregates,
                label,
                ..
            } => {
                let point: Vec<f64> = aggregates.iter().map(|a| sum(a).max(0.0)).collect();
                match program.matroids[*matroid].polytope_check(&point, 1.0, tol) {
                    Ok(PolytopeCheck::Ok) => {}
                    Ok(PolytopeCheck::Violated { set, excess }) => out.push(Violation {
                        constraint: idx,
                        description: format!("{label}: set {set:?} exceeds its rank"),
                        excess,
                    }),
                    Err(e) => out.push(Violation {
                        constraint: idx,
                        description: format!("{label}: {e}"),
                        excess: f64::INFINITY,
                    }),
                }
            }
            Constraint::ItemSum { item, vars } => {
                let s = sum(vars);
                if s > 1.0 + tol {
                    out.push(Violation {
                        constraint: idx,
                        description: format!("item {item} assigned {s} > 1"),
                        excess: s - 1.0,
                    });
                }
            }
            Constraint::UnitSum { vars, label, .. } => {
                let s = sum(vars);
                if s > 1.0 + tol {
                    out.push(Violation {
                        constraint: idx,
                        description: format!("{label}: sum is {s}"),
                        excess: s - 1.0,
                    });
                }
            }
            Constraint::Coupling { lhs, rhs } => {
                let d = sol.values[*lhs] - sol.values[*rhs];
                if d > tol {
                    out.push(Violation {
                        constraint: idx,
                        description: format!(
                            "coupling: variable {lhs} = {} exceeds variable {rhs} = {}",
                            sol.values[*lhs], sol.values[*rhs]
                        ),
                        excess: d,
                    });
                }
            }
        }
    }
    if out.is_empty() {
        Feasibility::Ok
    } else {
        Feasibility::Violations(out)
    }
}

/// Indices of the `n` smallest coordinates, ties broken by index.
pub fn smallest_n(log_y: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..log_y.len()).collect();
    idx.sort_by(|&a, &b| log_y[a].total_cmp(&log_y[b]).then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

/// Sum of the `n` smallest coordinates.
pub fn smallest_n_sum(log_y: &[f64], n: usize) -> f64 {
    smallest_n(log_y, n).iter().map(|&j| log_y[j]).sum()
}

/// `y^S >= 1` for every `n`-subset `S` holds iff the `n` smallest log
/// coordinates sum to at least zero.
pub fn dual_separation(dual: &DualPoint, n: usize) -> Result<DualSeparation> {
    let m = dual.log_y.len();
    if m < n {
        return Err(NswError::input(format!(
            "dual has {m} coordinates, fewer than n = {n}"
        )));
    }
    let mut set = smallest_n(&dual.log_y, n);
    let sum: f64 = set.iter().map(|&j| dual.log_y[j]).sum();
    if sum < 0.0 {
        set.sort_unstable();
        Ok(DualSeparation::Violated { set, sum })
    } else {
        Ok(DualSeparation::Ok)
    }
}
