//! End-to-end pipeline: build, solve, round, check, report.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    brute_force_opt, expected_product_coverage, mc_expected_product, ENUMERATION_CAP,
};
use crate::error::{NswError, Result};
use crate::instance::Instance;
use crate::relaxation::{build_program, dual_separation, DualSeparation, ProgramKind};
use crate::rounding::{Procedure, Rounder};
use crate::saddle::{solve, SolveConfig, SolveResult};
use crate::stats::MCEstimate;

/// Relative slack allowed between the relaxation value and the optimum.
pub const VALIDITY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub solve: SolveConfig,
    pub samples: u64,
    pub seed: u64,
    /// Procedures to run; `None` picks the ones matching the program kind.
    pub procedures: Option<Vec<Procedure>>,
    /// Compare against the exact optimum when enumeration fits the cap.
    pub brute_force: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            solve: SolveConfig::default(),
            samples: 100_000,
            seed: 0,
            procedures: None,
            brute_force: true,
        }
    }
}

/// Procedures run by default for a program kind.
pub fn default_procedures(kind: ProgramKind) -> Vec<Procedure> {
    match kind {
        ProgramKind::P1 => vec![Procedure::P1],
        ProgramKind::SumRanks => vec![Procedure::P2],
        ProgramKind::CoverageP1pp => vec![Procedure::P0, Procedure::P2],
        ProgramKind::Matching => vec![Procedure::P3],
        ProgramKind::KMatching => vec![Procedure::P4],
    }
}

/// Guaranteed ratio of expected product to relaxation product, if any.
/// `k` is the hypergraph dimension for procedure 4.
pub fn procedure_factor(procedure: Procedure, n: usize, k: usize) -> Option<f64> {
    let e = std::f64::consts::E;
    match procedure {
        Procedure::P0 => None,
        Procedure::P1 | Procedure::P2 | Procedure::P3 => {
            Some((e.recip() * (1.0 - e.recip()).powi(2)).powi(n as i32))
        }
        Procedure::P4 => Some((e * e * k as f64).recip().powi(n as i32)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Vacuous,
}

impl std::fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Vacuous => "vacuous",
        })
    }
}

/// `value >= bound` style check; `slack = value - bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub slack: f64,
    pub status: CheckStatus,
    pub note: Option<String>,
}

impl BoundCheck {
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        let status = if value >= bound {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        BoundCheck {
            name: name.into(),
            value,
            bound,
            slack: value - bound,
            status,
            note: None,
        }
    }

    pub fn vacuous(name: impl Into<String>, note: &str) -> Self {
        BoundCheck {
            name: name.into(),
            value: 0.0,
            bound: 0.0,
            slack: 0.0,
            status: CheckStatus::Vacuous,
            note: Some(note.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub value_log: f64,
    pub value_product: f64,
    pub value_nsw: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: Vec<String>,
}

impl From<&SolveResult> for SolverSummary {
    fn from(s: &SolveResult) -> Self {
        SolverSummary {
            value_log: s.value_log,
            value_product: s.value_product,
            value_nsw: s.value_nsw,
            gap: s.gap,
            iterations: s.iterations,
            converged: s.converged,
            diagnostics: s.diagnostics.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcedureReport {
    pub procedure: Procedure,
    pub estimate: MCEstimate,
    /// Product-level factor against the relaxation value, when one applies.
    pub factor: Option<f64>,
    /// Scale applied to the solution before the draws.
    pub scale: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub solve_secs: f64,
    pub opt_secs: f64,
    pub rounding_secs: Vec<f64>,
    pub total_secs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub instance_digest: String,
    pub instance_name: String,
    pub n: usize,
    pub m: usize,
    pub program_kind: ProgramKind,
    pub seed: u64,
    pub samples: u64,
    pub solver: SolverSummary,
    pub opt_product: Option<f64>,
    pub procedures: Vec<ProcedureReport>,
    pub checks: Vec<BoundCheck>,
    pub notes: Vec<String>,
    pub timings: Timings,
}

// Wall-clock timings differ between identical runs.
impl PartialEq for RunReport {
    fn eq(&self, o: &Self) -> bool {
        self.instance_digest == o.instance_digest
            && self.instance_name == o.instance_name
            && self.n == o.n
            && self.m == o.m
            && self.program_kind == o.program_kind
            && self.seed == o.seed
            && self.samples == o.samples
            && self.solver == o.solver
            && self.opt_product == o.opt_product
            && self.procedures == o.procedures
            && self.checks == o.checks
            && self.notes == o.notes
    }
}

impl RunReport {
    /// True when no check failed.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "instance {} ({}) digest {}",
            self.instance_name, self.program_kind, self.instance_digest
        );
        let _ = writeln!(
            s,
            "  agents {}  items {}  seed {}  samples {}",
            self.n, self.m, self.seed, self.samples
        );
        let v = &self.solver;
        let _ = writeln!(
            s,
            "relaxation: product {:.6}  nsw {:.6}  gap {:.2e}  iterations {}  converged {}",
            v.value_product, v.value_nsw, v.gap, v.iterations, v.converged
        );
        for d in &v.diagnostics {
            let _ = writeln!(s, "  solver: {d}");
        }
        if let Some(opt) = self.opt_product {
            let _ = writeln!(s, "optimum product {opt:.6}");
        }
        for p in &self.procedures {
            let e = &p.estimate;
            let _ = write!(
                s,
                "procedure {}: mean {:.6}  stderr {:.2e}  band [{:.6}, {:.6}]",
                p.procedure, e.mean, e.stderr, e.ci_lower, e.ci_upper
            );
            if let Some(f) = p.factor {
                let _ = write!(s, "  factor {f:.6}");
            }
            s.push('\n');
        }
        for c in &self.checks {
            let _ = write!(
                s,
                "[{}] {}: value {:.6} bound {:.6} slack {:+.3e}",
                c.status, c.name, c.value, c.bound, c.slack
            );
            if let Some(n) = &c.note {
                let _ = write!(s, " ({n})");
            }
            s.push('\n');
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        let _ = writeln!(
            s,
            "overall: {}",
            if self.passed() { "pass" } else { "fail" }
        );
        s
    }

    /// One row per procedure estimate and per check. Timings are left out so
    /// that repeated runs produce identical files.
    pub fn to_csv(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row<'a> {
            record: &'a str,
            name: String,
            value: f64,
            bound: Option<f64>,
            slack: Option<f64>,
            status: Option<CheckStatus>,
            stderr: Option<f64>,
            ci_lower: Option<f64>,
            ci_upper: Option<f64>,
            samples: Option<u64>,
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut put = |r: Row| w.serialize(r).map_err(|e| NswError::Io(e.to_string()));
        put(Row {
            record: "relaxation",
            name: self.program_kind.to_string(),
            value: self.solver.value_product,
            bound: None,
            slack: None,
            status: None,
            stderr: None,
            ci_lower: None,
            ci_upper: None,
            samples: None,
        })?;
        if let Some(opt) = self.opt_product {
            put(Row {
                record: "optimum",
                name: "brute_force".into(),
                value: opt,
                bound: None,
                slack: None,
                status: None,
                stderr: None,
                ci_lower: None,
                ci_upper: None,
                samples: None,
            })?;
        }
        for p in &self.procedures {
            let e = &p.estimate;
            put(Row {
                record: "estimate",
                name: format!("procedure_{}", p.procedure),
                value: e.mean,
                bound: p.factor,
                slack: None,
                status: None,
                stderr: Some(e.stderr),
                ci_lower: Some(e.ci_lower),
                ci_upper: Some(e.ci_upper),
                samples: Some(e.samples),
            })?;
        }
        for c in &self.checks {
            put(Row {
                record: "check",
                name: c.name.clone(),
                value: c.value,
                bound: Some(c.bound),
                slack: Some(c.slack),
                status: Some(c.status),
                stderr: None,
                ci_lower: None,
                ci_upper: None,
                samples: None,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| NswError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// CSV table of checks: name, value, bound, slack, status, note.
pub fn checks_csv(checks: &[BoundCheck]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in checks {
        w.serialize(c).map_err(|e| NswError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| NswError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Check the ratio of a lower confidence bound against `factor * relax`.
/// Procedure 4 may fall back to the point estimate when the band is too wide.
fn factor_check(p: Procedure, e: &MCEstimate, factor: f64, relax: f64) -> BoundCheck {
    let name = format!("procedure_{p}_factor");
    if relax <= 0.0 {
        return BoundCheck::vacuous(name, "relaxation value is 0");
    }
    let bound = factor * relax;
    let mut c = BoundCheck::at_least(name, e.ci_lower, bound);
    if c.status == CheckStatus::Fail
        && p == Procedure::P4
        && e.mean >= bound
        && e.ci_lower >= 0.5 * bound
    {
        c.status = CheckStatus::Pass;
        c.note =
            Some("degraded: point estimate meets the bound, band lower end within half".into());
    }
    c
}

/// Build the program, solve it, round with each procedure and check bounds.
pub fn run_pipeline(instance: &Instance, config: &PipelineConfig) -> Result<RunReport> {
    let t0 = Instant::now();
    let program = build_program(instance)?;
    let kind = program.kind;
    let procedures = config
        .procedures
        .clone()
        .unwrap_or_else(|| default_procedures(kind));
    let supported = Procedure::supported(kind);
    if let Some(p) = procedures.iter().find(|p| !supported.contains(p)) {
        return Err(NswError::input(format!(
            "procedure {p} does not apply to {kind} programs"
        )));
    }

    let ts = Instant::now();
    let sol = solve(&program, &config.solve)?;
    let solve_secs = ts.elapsed().as_secs_f64();
    let relax = sol.value_product;
    let mut checks = Vec::new();
    let mut notes = Vec::new();

    if instance.m < instance.n {
        checks.push(BoundCheck::vacuous(
            "dual_feasible",
            "fewer items than agents",
        ));
    } else {
        match dual_separation(&sol.dual, instance.n)? {
            DualSeparation::Ok => checks.push(BoundCheck::at_least("dual_feasible", 0.0, 0.0)),
            DualSeparation::Violated { set, sum } => {
                let mut c = BoundCheck::at_least("dual_feasible", sum, 0.0);
                c.note = Some(format!("coordinates {set:?} sum below 0"));
                checks.push(c);
            }
        }
    }

    let to = Instant::now();
    let mut opt_product = None;
    if config.brute_force {
        match brute_force_opt(instance) {
            Ok(opt) => {
                let floor = opt.product - VALIDITY_TOL * (1.0 + opt.product);
                checks.push(BoundCheck::at_least("relaxation_vs_optimum", relax, floor));
                opt_product = Some(opt.product);
            }
            Err(NswError::UnsupportedSize { actual, .. }) => notes.push(format!(
                "optimum skipped: {actual} allocations exceed the cap {ENUMERATION_CAP}"
            )),
            Err(e) => return Err(e),
        }
    }
    let opt_secs = to.elapsed().as_secs_f64();

    let mut reports = Vec::new();
    let mut rounding_secs = Vec::new();
    for &p in &procedures {
        let tr = Instant::now();
        let rounder = Rounder::new(instance, &program, &sol.solution, p)?;
        let scale = rounder.scale();
        let k = if p == Procedure::P4 {
            (1.0 + 1.0 / scale).round() as usize
        } else {
            0
        };
        let estimate = mc_expected_product(
            instance,
            &program,
            &sol.solution,
            p,
            config.samples,
            config.seed,
        )?;
        let factor = procedure_factor(p, instance.n, k);
        if let Some(f) = factor {
            checks.push(factor_check(p, &estimate, f, relax));
        }
        if p == Procedure::P0 && kind == ProgramKind::CoverageP1pp {
            let closed = expected_product_coverage(instance, rounder.marginals())?;
            let diff = (estimate.mean - closed).abs();
            let band = 3.0 * estimate.stderr + 1e-12 * (1.0 + closed);
            let mut c = BoundCheck::at_least("coverage_closed_form", band, diff);
            c.value = closed;
            c.bound = estimate.mean;
            c.note = Some(format!("|difference| {diff:.3e} against band {band:.3e}"));
            checks.push(c);
        }
        if p == Procedure::P4 {
            notes.push(format!("procedure 4 draws at scale {scale:.6} (k = {k})"));
        }
        reports.push(ProcedureReport {
            procedure: p,
            estimate,
            factor,
            scale,
        });
        rounding_secs.push(tr.elapsed().as_secs_f64());
    }
    if relax <= 0.0 {
        notes.push("relaxation product is 0; ratio checks are vacuous".into());
    }

    Ok(RunReport {
        instance_digest: instance.digest(),
        instance_name: instance.metadata.name.clone(),
        n: instance.n,
        m: instance.m,
        program_kind: kind,
        seed: config.seed,
        samples: config.samples,
        solver: SolverSummary::from(&sol),
        opt_product,
        procedures: reports,
        checks,
        notes,
        timings: Timings {
            solve_secs,
            opt_secs,
            rounding_secs,
            total_secs: t0.elapsed().as_secs_f64(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate, Family, GenParams, Metadata};
    use crate::matroid::MatroidSpec;
    use crate::valuation::ValuationSpec;

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

    fn quick() -> PipelineConfig {
        PipelineConfig {
            samples: 10_000,
            seed: 3,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn identity_two_by_two() {
        let inst = additive(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let r = run_pipeline(&inst, &quick()).unwrap();
        assert!((r.solver.value_product - 1.0).abs() < 1e-3);
        assert_eq!(r.opt_product, Some(1.0));
        assert!(
            r.checks.iter().all(|c| c.status == CheckStatus::Pass),
            "{}",
            r.to_text()
        );
        assert!((r.procedures[0].estimate.mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_item_two_agents_is_vacuous() {
        let inst = additive(vec![vec![1.0], vec![1.0]]);
        let r = run_pipeline(&inst, &quick()).unwrap();
        assert_eq!(r.solver.value_product, 0.0);
        assert!(r.passed());
        let f = r
            .checks
            .iter()
            .find(|c| c.name.ends_with("_factor"))
            .unwrap();
        assert_eq!(f.status, CheckStatus::Vacuous);
        assert!(r.notes.iter().any(|n| n.contains("vacuous")));
    }

    #[test]
    fn repeated_runs_agree() {
        let inst = generate(Family::Rank, 2, 4, 11, &GenParams::default()).unwrap();
        let a = run_pipeline(&inst, &quick()).unwrap();
        let b = run_pipeline(&inst, &quick()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    }

    #[test]
    fn coverage_runs_closed_form() {
        let inst = generate(Family::Coverage, 2, 3, 1, &GenParams::default()).unwrap();
        let r = run_pipeline(&inst, &quick()).unwrap();
        assert!(r.checks.iter().any(|c| c.name == "coverage_closed_form"));
        assert!(r.passed(), "{}", r.to_text());
    }

    #[test]
    fn unsupported_procedure_is_rejected() {
        let inst = additive(vec![vec![1.0, 2.0]]);
        let cfg = PipelineConfig {
            procedures: Some(vec![Procedure::P4]),
            ..quick()
        };
        assert!(run_pipeline(&inst, &cfg).is_err());
    }

    #[test]
    fn factors() {
        let f1 = procedure_factor(Procedure::P1, 2, 0).unwrap();
        assert!((f1 - 0.021607).abs() < 1e-6);
        let f4 = procedure_factor(Procedure::P4, 2, 3).unwrap();
        assert!((f4 - 0.002035).abs() < 1e-6);
        assert!(procedure_factor(Procedure::P0, 2, 0).is_none());
    }
}
