//! Rounding procedures 0-4 and the coupled 0/2 construction.
//!
//! Every procedure works on per-agent *units*: items for procedures 0-2,
//! the agent's edges for 3 and hyperedges for 4. A sample draws `X` (unit
//! active), `Y` (unit won its item's rank-1 scheme) and `Z` (unit survived the
//! agent's own scheme) from streams keyed by role, so procedures 1 and 2 and
//! the coupled procedure 0 see the same randomness under the same key.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contention::{Crs, Scheme};
use crate::error::{NswError, Result};
use crate::instance::Instance;
use crate::matroid::{Matroid, MatroidSpec};
use crate::relaxation::{
    feasible, Feasibility, FractionalSolution, ProgramKind, ProgramSpec, VarRole,
};
use crate::rng::{Purpose, SampleKey};
use crate::valuation::ValuationSpec;

/// Column sums and entries may exceed their bounds by this much.
pub const MARGINAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Procedure {
    P0,
    P1,
    P2,
    P3,
    P4,
}

impl Procedure {
    pub const ALL: [Procedure; 5] = [
        Procedure::P0,
        Procedure::P1,
        Procedure::P2,
        Procedure::P3,
        Procedure::P4,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    /// Procedures applicable to a program kind.
    pub fn supported(kind: ProgramKind) -> Vec<Procedure> {
        let mut v = vec![Procedure::P0, Procedure::P2];
        match kind {
            ProgramKind::P1 => v.insert(1, Procedure::P1),
            ProgramKind::Matching => v.push(Procedure::P3),
            ProgramKind::KMatching => v.push(Procedure::P4),
            ProgramKind::SumRanks | ProgramKind::CoverageP1pp => {}
        }
        v
    }
}

impl std::fmt::Display for Procedure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.id())
    }
}

impl std::str::FromStr for Procedure {
    type Err = NswError;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim_start_matches(['p', 'P']);
        Ok(match t {
            "0" => Procedure::P0,
            "1" => Procedure::P1,
            "2" => Procedure::P2,
            "3" => Procedure::P3,
            "4" => Procedure::P4,
            _ => {
                return Err(NswError::input(format!(
                    "unknown procedure `{s}`; expected 0-4"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    /// Owner of every item, if any.
    pub owner: Vec<Option<usize>>,
}

impl Allocation {
    pub fn empty(m: usize) -> Self {
        Allocation {
            owner: vec![None; m],
        }
    }

    pub fn bundle(&self, agent: usize) -> Vec<usize> {
        (0..self.owner.len())
            .filter(|&j| self.owner[j] == Some(agent))
            .collect()
    }

    pub fn bundles(&self, n: usize) -> Vec<Vec<usize>> {
        let mut b = vec![Vec::new(); n];
        for (j, o) in self.owner.iter().enumerate() {
            if let Some(i) = *o {
                b[i].push(j);
            }
        }
        b
    }

    /// Every owner is a valid agent index.
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.owner.len() != m {
            return Err(NswError::input(format!(
                "allocation lists {} items, instance has {m}",
                self.owner.len()
            )));
        }
        if let Some((j, i)) = self
            .owner
            .iter()
            .enumerate()
            .find_map(|(j, o)| o.filter(|&i| i >= n).map(|i| (j, i)))
        {
            return Err(NswError::input(format!(
                "item {j} goes to agent {i}, but n = {n}"
            )));
        }
        Ok(())
    }
}

/// Product and geometric-mean value of an allocation.
pub fn nsw_value(instance: &Instance, alloc: &Allocation) -> Result<(f64, f64)> {
    alloc.validate(instance.n, instance.m)?;
    let mut product = 1.0;
    for (i, bundle) in alloc.bundles(instance.n).iter().enumerate() {
        product *= instance.valuation(i).evaluate(bundle)?;
    }
    Ok((product, product.powf(1.0 / instance.n as f64)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundingTrace {
    pub procedure: Procedure,
    /// Per agent and unit: the Bernoulli draw (for procedure 0, assignment).
    pub x: Vec<Vec<bool>>,
    /// Unit won its item's scheme.
    pub y: Vec<Vec<bool>>,
    /// Unit survived the agent's scheme (all parts for procedure 4).
    pub z: Vec<Vec<bool>>,
    pub allocation: Allocation,
    pub product_value: f64,
    pub nsw_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unit {
    pub item: usize,
    /// Probability of the Bernoulli draw.
    pub p: f64,
}

/// Validated rounding setup for one instance, solution and procedure.
#[derive(Debug, Clone)]
pub struct Rounder<'a> {
    instance: &'a Instance,
    procedure: Procedure,
    /// Item marginals `x_ij` (edge mass per item for matching layouts).
    x: Vec<Vec<f64>>,
    units: Vec<Vec<Unit>>,
    /// Per item: its `(agent, unit)` members and their rank-1 scheme.
    items: Vec<(Vec<(usize, usize)>, Option<Crs>)>,
    /// Per agent: one scheme per part over the agent's units.
    agent_crs: Vec<Vec<Crs>>,
    scale: f64,
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Per-agent parts of procedure 4 and the scale `b = 1/(k-1)`.
fn part_scale(instance: &Instance) -> f64 {
    match instance.valuation(0).spec() {
        ValuationSpec::KPartiteMatching { k, .. } => 1.0 / (*k as f64 - 1.0),
        _ => 1.0,
    }
}

impl<'a> Rounder<'a> {
    pub fn new(
        instance: &'a Instance,
        program: &ProgramSpec,
        sol: &FractionalSolution,
        procedure: Procedure,
    ) -> Result<Self> {
        if program.n != instance.n || program.m != instance.m {
            return Err(NswError::input("program and instance dimensions differ"));
        }
        if sol.values.len() != program.vars.len() {
            return Err(NswError::input(format!(
                "solution has {} values, program has {} variables",
                sol.values.len(),
                program.vars.len()
            )));
        }
        if !Procedure::supported(program.kind).contains(&procedure) {
            return Err(NswError::input(format!(
                "procedure {procedure} does not apply to the {} program",
                program.kind
            )));
        }
        let (n, m) = (instance.n, instance.m);
        let x = program.item_marginals(sol);
        for (i, row) in x.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !(v.is_finite() && v >= -MARGINAL_TOL && v <= 1.0 + MARGINAL_TOL) {
                    return Err(NswError::input(format!(
                        "marginal x[{i}][{j}] = {v} outside [0, 1]"
                    )));
                }
            }
        }
        for j in 0..m {
            let col: f64 = x.iter().map(|r| r[j]).sum();
            if col > 1.0 + MARGINAL_TOL {
                return Err(NswError::input(format!(
                    "item {j} has total marginal {col} > 1"
                )));
            }
        }
        let x: Vec<Vec<f64>> = x
            .iter()
            .map(|r| r.iter().map(|&v| clamp01(v)).collect())
            .collect();
        if matches!(procedure, Procedure::P1 | Procedure::P3 | Procedure::P4) {
            let mut s = sol.clone();
            s.feasibility_tol = s.feasibility_tol.max(MARGINAL_TOL);
            if let Feasibility::Violations(v) = feasible(program, &s) {
                return Err(NswError::input(format!(
                    "solution is infeasible: {}",
                    v.iter()
                        .map(|v| v.description.clone())
                        .collect::<Vec<_>>()
                        .join("; ")
                )));
            }
        }

        let scale = if procedure == Procedure::P4 {
            part_scale(instance)
        } else {
            1.0
        };
        let mut units: Vec<Vec<Unit>> = vec![Vec::new(); n];
        // per agent, the program variable behind each unit
        let mut unit_var: Vec<Vec<usize>> = vec![Vec::new(); n];
        match procedure {
            Procedure::P0 | Procedure::P1 | Procedure::P2 => {
                for i in 0..n {
                    units[i] = (0..m)
                        .map(|j| Unit {
                            item: j,
                            p: x[i][j],
                        })
                        .collect();
                }
            }
            Procedure::P3 | Procedure::P4 => {
                for (v, info) in program.vars.iter().enumerate() {
                    let item = info.role.item();
                    units[info.agent].push(Unit {
                        item,
                        p: clamp01(sol.values[v]) * scale,
                    });
                    unit_var[info.agent].push(v);
                }
            }
        }

        let mut members: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
        for (i, us) in units.iter().enumerate() {
            for (u, unit) in us.iter().enumerate() {
                members[unit.item].push((i, u));
            }
        }
        let mut items = Vec::with_capacity(m);
        for mem in members {
            let crs = if mem.is_empty() {
                None
            } else {
                let p: Vec<f64> = mem.iter().map(|&(i, u)| units[i][u].p).collect();
                let total: f64 = p.iter().sum();
                // absorb round-off so the rank-1 polytope check passes
                let p = if total > 1.0 {
                    p.iter().map(|v| v / total).collect()
                } else {
                    p
                };
                let matroid = MatroidSpec::Uniform {
                    ground_size: mem.len(),
                    rank: 1,
                }
                .build()?;
                Some(Crs::new(matroid, p, 1.0, Scheme::Rank1Exact)?)
            };
            items.push((mem, crs));
        }

        let mut agent_crs: Vec<Vec<Crs>> = vec![Vec::new(); n];
        match procedure {
            Procedure::P1 => {
                for i in 0..n {
                    let (matroid, _) = &instance
                        .valuation(i)
                        .rank_terms()
                        .expect("P1 program has rank terms")[0];
                    agent_crs[i].push(Crs::auto(matroid.clone(), x[i].clone(), 1.0)?);
                }
            }
            Procedure::P3 => {
                for i in 0..n {
                    let base_of: Vec<usize> = unit_var[i]
                        .iter()
                        .map(|&v| match program.vars[v].role {
                            VarRole::Edge { right, .. } => right,
                            _ => unreachable!("matching program has edge variables"),
                        })
                        .collect();
                    let right = instance
                        .valuation(i)
                        .right_matroid()
                        .expect("matching valuation");
                    let ext = Matroid::parallel_extension(right, base_of)?;
                    let p: Vec<f64> = units[i].iter().map(|u| u.p).collect();
                    agent_crs[i].push(Crs::auto(ext, p, 1.0)?);
                }
            }
            Procedure::P4 => {
                for i in 0..n {
                    let ValuationSpec::KPartiteMatching { hyperedges, .. } =
                        instance.valuation(i).spec()
                    else {
                        unreachable!("k-matching program has k-partite agents")
                    };
                    let parts = instance
                        .valuation(i)
                        .part_matroids()
                        .expect("k-partite valuation");
                    let p: Vec<f64> = units[i].iter().map(|u| u.p).collect();
                    for (l, part) in parts.iter().enumerate() {
                        let base_of: Vec<usize> = unit_var[i]
                            .iter()
                            .map(|&v| match program.vars[v].role {
                                VarRole::Hyperedge { edge, .. } => hyperedges[edge].vertices[l],
                                _ => unreachable!("k-matching program has hyperedge variables"),
                            })
                            .collect();
                        let ext = Matroid::parallel_extension(part, base_of)?;
                        agent_crs[i].push(Crs::auto(ext, p.clone(), scale)?);
                    }
                }
            }
            Procedure::P0 | Procedure::P2 => {}
        }

        Ok(Rounder {
            instance,
            procedure,
            x,
            units,
            items,
            agent_crs,
            scale,
        })
    }

    pub fn procedure(&self) -> Procedure {
        self.procedure
    }

    /// Scale applied to the solution before the Bernoulli draws (`1/(k-1)`
    /// for procedure 4, else 1).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn marginals(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn units(&self) -> &[Vec<Unit>] {
        &self.units
    }

    /// Agent-side schemes in use, per agent and part.
    pub fn agent_schemes(&self) -> Vec<Vec<Scheme>> {
        self.agent_crs
            .iter()
            .map(|v| v.iter().map(Crs::scheme).collect())
            .collect()
    }

    fn finish(
        &self,
        x: Vec<Vec<bool>>,
        y: Vec<Vec<bool>>,
        z: Vec<Vec<bool>>,
        allocation: Allocation,
    ) -> RoundingTrace {
        let (product_value, nsw_value) =
            nsw_value(self.instance, &allocation).expect("allocation is well formed");
        RoundingTrace {
            procedure: self.procedure,
            x,
            y,
            z,
            allocation,
            product_value,
            nsw_value,
        }
    }

    fn round0(&self, key: SampleKey) -> RoundingTrace {
        let (n, m) = (self.instance.n, self.instance.m);
        let mut alloc = Allocation::empty(m);
        let mut x = vec![vec![false; m]; n];
        for j in 0..m {
            let u: f64 = key.rng(Purpose::Assign, j).gen();
            let mut acc = 0.0;
            for i in 0..n {
                acc += self.x[i][j];
                if u < acc {
                    alloc.owner[j] = Some(i);
                    x[i][j] = true;
                    break;
                }
            }
        }
        self.finish(x.clone(), x.clone(), x, alloc)
    }

    fn draw_x(&self, key: SampleKey) -> Vec<Vec<bool>> {
        self.units
            .iter()
            .enumerate()
            .map(|(i, us)| {
                let mut rng = key.rng(Purpose::Bernoulli, i);
                us.iter().map(|u| rng.gen::<f64>() < u.p).collect()
            })
            .collect()
    }

    /// Per item, the winning `(agent, unit)` of its rank-1 scheme.
    fn item_winners(&self, key: SampleKey, x: &[Vec<bool>]) -> Vec<Option<(usize, usize)>> {
        self.items
            .iter()
            .enumerate()
            .map(|(j, (mem, crs))| {
                let crs = crs.as_ref()?;
                let active: Vec<usize> =
                    (0..mem.len()).filter(|&k| x[mem[k].0][mem[k].1]).collect();
                let out = crs.resolve_unchecked(&active, &mut key.rng(Purpose::ItemCrs, j));
                out.first().map(|&k| mem[k])
            })
            .collect()
    }

    /// One rounding sample under `key`.
    pub fn sample(&self, key: SampleKey) -> RoundingTrace {
        if self.procedure == Procedure::P0 {
            return self.round0(key);
        }
        let n = self.instance.n;
        let x = self.draw_x(key);
        let winners = self.item_winners(key, &x);
        let mut y: Vec<Vec<bool>> = self.units.iter().map(|u| vec![false; u.len()]).collect();
        for &(i, u) in winners.iter().flatten() {
            y[i][u] = true;
        }
        let z: Vec<Vec<bool>> = if self.procedure == Procedure::P2 {
            x.clone()
        } else {
            (0..n)
                .map(|i| {
                    let active: Vec<usize> = (0..x[i].len()).filter(|&u| x[i][u]).collect();
                    let parts = self.agent_crs[i].len();
                    let mut keep = vec![true; x[i].len()];
                    for (l, crs) in self.agent_crs[i].iter().enumerate() {
                        let mut rng = key.rng(Purpose::AgentCrs, i * parts + l);
                        let out = crs.resolve_unchecked(&active, &mut rng);
                        for (u, k) in keep.iter_mut().enumerate() {
                            *k &= out.binary_search(&u).is_ok();
                        }
                    }
                    keep
                })
                .collect()
        };
        let mut alloc = Allocation::empty(self.instance.m);
        for (j, w) in winners.iter().enumerate() {
            if let Some((i, u)) = *w {
                if z[i][u] {
                    alloc.owner[j] = Some(i);
                }
            }
        }
        self.finish(x, y, z, alloc)
    }

    /// Procedure 2 and a procedure-0 sample built from it: items nobody drew
    /// are handed out again with the residual probabilities, so every agent's
    /// procedure-0 bundle contains its procedure-2 bundle. Needs a
    /// procedure-2 rounder.
    pub fn coupled(&self, key: SampleKey) -> Result<(RoundingTrace, RoundingTrace)> {
        if self.procedure != Procedure::P2 {
            return Err(NswError::input(
                "coupled rounding needs a procedure 2 rounder",
            ));
        }
        let (n, m) = (self.instance.n, self.instance.m);
        let trace2 = self.sample(key);
        let mut alloc = trace2.allocation.clone();
        for j in 0..m {
            if (0..n).any(|i| trace2.x[i][j]) {
                continue;
            }
            let none: f64 = (0..n).map(|i| 1.0 - self.x[i][j]).product();
            let total: f64 = (0..n).map(|i| self.x[i][j]).sum();
            if !(none > 0.0 && total > 0.0) {
                continue;
            }
            let u: f64 = key.rng(Purpose::Redistribute, j).gen();
            let mut acc = 0.0;
            for i in 0..n {
                // x_ij minus the probability that i already won the item
                let won = self.x[i][j] / total * (1.0 - none);
                acc += (self.x[i][j] - won).max(0.0) / none;
                if u < acc {
                    alloc.owner[j] = Some(i);
                    break;
                }
            }
        }
        let mut x0 = vec![vec![false; m]; n];
        for (j, o) in alloc.owner.iter().enumerate() {
            if let Some(i) = *o {
                x0[i][j] = true;
            }
        }
        let trace0 = RoundingTrace {
            procedure: Procedure::P0,
            ..self.finish(x0.clone(), x0.clone(), x0, alloc)
        };
        Ok((trace0, trace2))
    }
}

/// One sample of `procedure` under `key`.
pub fn round(
    instance: &Instance,
    program: &ProgramSpec,
    sol: &FractionalSolution,
    procedure: Procedure,
    key: SampleKey,
) -> Result<RoundingTrace> {
    Ok(Rounder::new(instance, program, sol, procedure)?.sample(key))
}

/// Coupled procedure-0 and procedure-2 samples under `key`.
pub fn coupled_round(
    instance: &Instance,
    program: &ProgramSpec,
    sol: &FractionalSolution,
    key: SampleKey,
) -> Result<(RoundingTrace, RoundingTrace)> {
    Rounder::new(instance, program, sol, Procedure::P2)?.coupled(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate, Family, GenParams, Metadata};
    use crate::relaxation::build_program;
    use crate::valuation::{Hyperedge, MatchingEdge};

    fn additive(weights: Vec<Vec<f64>>) -> Instance {
        let m = weights[0].len();
        let n = weights.len();
        let vals = weights
            .into_iter()
            .map(|w| ValuationSpec::WeightedMatroidRank {
                matroid: MatroidSpec::free(m),
                weights: w,
            })
            .collect();
        Instance::new(Metadata::default(), n, m, vals).unwrap()
    }

    fn assign(p: &ProgramSpec, x: &[Vec<f64>]) -> FractionalSolution {
        let mut v = vec![0.0; p.vars.len()];
        for (i, row) in x.iter().enumerate() {
            for (j, &xij) in row.iter().enumerate() {
                v[p.assign_var(i, j).unwrap()] = xij;
            }
        }
        FractionalSolution::new(v)
    }

    #[test]
    fn integral_diagonal_is_deterministic() {
        let inst = additive(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let p = build_program(&inst).unwrap();
        let sol = assign(&p, &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        for proc_ in [Procedure::P0, Procedure::P1, Procedure::P2] {
            let r = Rounder::new(&inst, &p, &sol, proc_).unwrap();
            for s in 0..50 {
                let t = r.sample(SampleKey::new(3, s));
                assert_eq!(t.allocation.owner, vec![Some(0), Some(1)]);
                assert_eq!(t.product_value, 1.0);
            }
        }
        let r = Rounder::new(&inst, &p, &sol, Procedure::P2).unwrap();
        let (t0, t2) = r.coupled(SampleKey::new(1, 1)).unwrap();
        assert_eq!(t0.allocation, t2.allocation);
    }

    #[test]
    fn zero_solution_gives_empty_allocation() {
        let inst = additive(vec![vec![1.0, 2.0], vec![3.0, 1.0]]);
        let p = build_program(&inst).unwrap();
        let sol = FractionalSolution::zeros(&p);
        for proc_ in [Procedure::P0, Procedure::P1, Procedure::P2] {
            let t = round(&inst, &p, &sol, proc_, SampleKey::new(0, 0)).unwrap();
            assert_eq!(t.allocation, Allocation::empty(2));
            assert_eq!(t.product_value, 0.0);
        }
    }

    #[test]
    fn oversubscribed_column_is_rejected() {
        let inst = additive(vec![vec![1.0, 2.0], vec![3.0, 1.0]]);
        let p = build_program(&inst).unwrap();
        let sol = assign(&p, &[vec![0.7, 0.0], vec![0.7, 0.0]]);
        assert!(Rounder::new(&inst, &p, &sol, Procedure::P0).is_err());
        assert!(Rounder::new(&inst, &p, &sol, Procedure::P3).is_err());
    }

    #[test]
    fn half_columns_split_evenly() {
        let inst = additive(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        let p = build_program(&inst).unwrap();
        let sol = assign(&p, &[vec![0.5, 0.5], vec![0.5, 0.5]]);
        let r = Rounder::new(&inst, &p, &sol, Procedure::P0).unwrap();
        let k = 20_000;
        let mut to0 = 0;
        for s in 0..k {
            let t = r.sample(SampleKey::new(2, s));
            assert!(t.allocation.owner.iter().all(Option::is_some));
            to0 += usize::from(t.allocation.owner[0] == Some(0));
        }
        let f = to0 as f64 / k as f64;
        assert!(
            (f - 0.5).abs() < 3.0 * (0.25 / k as f64).sqrt() + 1e-3,
            "{f}"
        );
    }

    #[test]
    fn domination_chain_on_shared_keys() {
        for seed in 0..4 {
            let inst = generate(Family::Rank, 2, 4, seed, &GenParams::default()).unwrap();
            let p = build_program(&inst).unwrap();
            let sol = crate::saddle::solve(&p, &Default::default())
                .unwrap()
                .solution;
            let r1 = Rounder::new(&inst, &p, &sol, Procedure::P1).unwrap();
            let r2 = Rounder::new(&inst, &p, &sol, Procedure::P2).unwrap();
            for s in 0..500 {
                let key = SampleKey::new(seed, s);
                let t1 = r1.sample(key);
                let (t0, t2) = r2.coupled(key).unwrap();
                assert_eq!(t2, r2.sample(key));
                for i in 0..2 {
                    let (b1, b2, b0) = (
                        t1.allocation.bundle(i),
                        t2.allocation.bundle(i),
                        t0.allocation.bundle(i),
                    );
                    assert!(b1.iter().all(|j| b2.contains(j)));
                    assert!(b2.iter().all(|j| b0.contains(j)));
                    let (m, _) = &inst.valuation(i).rank_terms().unwrap()[0];
                    assert!(m.is_independent(&b1).unwrap());
                }
                for (i, row) in t1.y.iter().enumerate() {
                    for (u, &yv) in row.iter().enumerate() {
                        assert!(!(yv && t1.z[i][u]) || t1.x[i][u]);
                    }
                }
            }
        }
    }

    #[test]
    fn matching_edges_on_one_item_never_both_survive() {
        let val = |w: f64| ValuationSpec::BipartiteMatchingMatroid {
            right_vertices: 1,
            edges: vec![MatchingEdge {
                item: 0,
                right: 0,
                weight: w,
            }],
            right_matroid: MatroidSpec::free(1),
        };
        let inst = Instance::new(Metadata::default(), 2, 1, vec![val(1.0), val(2.0)]).unwrap();
        let p = build_program(&inst).unwrap();
        let sol = FractionalSolution::new(vec![0.5, 0.5]);
        let r = Rounder::new(&inst, &p, &sol, Procedure::P3).unwrap();
        for s in 0..2000 {
            let t = r.sample(SampleKey::new(5, s));
            let winners = t.y.iter().flatten().filter(|&&v| v).count();
            assert!(winners <= 1);
        }
        // a single edge at z = 1 is always allocated
        let inst1 = Instance::new(Metadata::default(), 1, 1, vec![val(1.0)]).unwrap();
        let p1 = build_program(&inst1).unwrap();
        let r = Rounder::new(
            &inst1,
            &p1,
            &FractionalSolution::new(vec![1.0]),
            Procedure::P3,
        )
        .unwrap();
        for s in 0..100 {
            assert_eq!(
                r.sample(SampleKey::new(1, s)).allocation.owner,
                vec![Some(0)]
            );
        }
    }

    #[test]
    fn matching_values_cover_surviving_edges() {
        for seed in 0..4 {
            let inst = generate(Family::Matching, 2, 4, seed, &GenParams::default()).unwrap();
            let p = build_program(&inst).unwrap();
            let sol = crate::saddle::solve(&p, &Default::default())
                .unwrap()
                .solution;
            let r = Rounder::new(&inst, &p, &sol, Procedure::P3).unwrap();
            for s in 0..300 {
                let t = r.sample(SampleKey::new(seed, s));
                for i in 0..2 {
                    let ValuationSpec::BipartiteMatchingMatroid { edges, .. } =
                        inst.valuation(i).spec()
                    else {
                        unreachable!()
                    };
                    let vars: Vec<usize> = (0..p.vars.len())
                        .filter(|&v| p.vars[v].agent == i)
                        .collect();
                    let w: f64 = (0..vars.len())
                        .filter(|&u| t.y[i][u] && t.z[i][u])
                        .map(|u| match p.vars[vars[u]].role {
                            VarRole::Edge { edge, .. } => edges[edge].weight,
                            _ => unreachable!(),
                        })
                        .sum();
                    let v = inst.valuation(i).evaluate(&t.allocation.bundle(i)).unwrap();
                    assert!(v >= w - 1e-9, "{v} < {w}");
                }
            }
        }
    }

    #[test]
    fn single_hyperedge_survives_sometimes() {
        let spec = ValuationSpec::KPartiteMatching {
            k: 3,
            part_sizes: vec![1, 1],
            hyperedges: vec![Hyperedge {
                item: 0,
                vertices: vec![0, 0],
                weight: 1.0,
            }],
            part_matroids: vec![MatroidSpec::free(1), MatroidSpec::free(1)],
        };
        let inst = Instance::new(Metadata::default(), 1, 1, vec![spec]).unwrap();
        let p = build_program(&inst).unwrap();
        let sol = FractionalSolution::new(vec![1.0]);
        let r = Rounder::new(&inst, &p, &sol, Procedure::P4).unwrap();
        assert_eq!(r.scale(), 0.5);
        let k = 4000;
        let hits = (0..k)
            .filter(|&s| r.sample(SampleKey::new(8, s)).allocation.owner[0] == Some(0))
            .count();
        // no contention anywhere: survival equals the scaled draw probability
        let f = hits as f64 / k as f64;
        assert!((f - 0.5).abs() < 3.0 * (0.25 / k as f64).sqrt(), "{f}");
        let t = round(
            &inst,
            &p,
            &FractionalSolution::new(vec![0.0]),
            Procedure::P4,
            SampleKey::new(0, 0),
        )
        .unwrap();
        assert_eq!(t.allocation, Allocation::empty(1));
    }

    #[test]
    fn unsupported_procedure_is_rejected() {
        let inst = generate(Family::Coverage, 2, 3, 1, &GenParams::default()).unwrap();
        let p = build_program(&inst).unwrap();
        let sol = FractionalSolution::zeros(&p);
        assert!(Rounder::new(&inst, &p, &sol, Procedure::P1).is_err());
        assert!(Rounder::new(&inst, &p, &sol, Procedure::P0).is_ok());
    }

    #[test]
    fn procedure_ids_parse() {
        assert_eq!("p3".parse::<Procedure>().unwrap(), Procedure::P3);
        assert_eq!("0".parse::<Procedure>().unwrap(), Procedure::P0);
        assert!("5".parse::<Procedure>().is_err());
    }

    #[test]
    fn nsw_examples() {
        let inst = additive(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let a = Allocation {
            owner: vec![Some(0), Some(1)],
        };
        assert_eq!(nsw_value(&inst, &a).unwrap(), (1.0, 1.0));
        let a = Allocation {
            owner: vec![Some(0), Some(0)],
        };
        assert_eq!(nsw_value(&inst, &a).unwrap().0, 0.0);
        let one = additive(vec![vec![2.0, 3.0]]);
        let (p, w) = nsw_value(
            &one,
            &Allocation {
                owner: vec![Some(0), None],
            },
        )
        .unwrap();
        assert_eq!(p, w);
    }
}
