use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nswlab::analysis::MIN_SAMPLES;
use nswlab::contention::{check_monotone, estimate_marginal, MONOTONE_EXHAUSTIVE_CAP};
use nswlab::instance::MatroidFamily;
use nswlab::report::checks_csv;
use nswlab::rng::{stream, Purpose, SampleKey};
use nswlab::valuation::check_monotone_submodular;
use nswlab::{
    build_program, brute_force_opt, count_constrained_mappings, dual_separation, generate, gurvits_check,
    parse_instance, round, run_pipeline, solve, BoundCheck, CheckStatus, Crs, CrsSpec, Family, GenParams,
    Instance, MappingProblem, NswError, PipelineConfig, Procedure, SolveConfig,
};
use rand::Rng;

#[derive(Parser)]
#[command(name = "nswlab", version, about = "Nash social welfare relaxations, rounding and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random instance.
    Gen(GenArgs),
    /// Solve the relaxation of an instance.
    Solve(SolveArgs),
    /// Round the solved relaxation and estimate the expected product.
    Round(RunArgs),
    /// Check the relaxation against the exact optimum and the valuations' shape.
    Verify(VerifyArgs),
    /// Check balancedness and monotonicity of contention resolution schemes.
    CrsCheck(CrsArgs),
    /// Compare distinct-tuple coefficient mass with the product infimum.
    GurvitsCheck(GurvitsArgs),
    /// Count weighted constrained mappings.
    CountMappings(CountArgs),
    /// Build, solve, round and check in one run.
    Pipeline(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Rank,
    Sumrank,
    Coverage,
    Matching,
    Kmatching,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatroidArg {
    Uniform,
    Partition,
    Graphic,
    Free,
    Mixed,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "mixed")]
    matroids: MatroidArg,
    /// Hypergraph dimension for kmatching.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Vertices per part for kmatching.
    #[arg(long, default_value_t = 2)]
    part_size: usize,
    /// Rank terms per agent for sumrank.
    #[arg(long, default_value_t = 2)]
    terms: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Write the solution as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Rounding procedure; defaults to the one matching the program.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=4))]
    procedure: Option<u8>,
    /// CSV report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Skip the brute-force optimum.
    #[arg(long)]
    no_opt: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CrsArgs {
    /// Scheme description (matroid, x, b, scheme) as JSON.
    #[arg(long, conflicts_with = "instance")]
    spec: Option<PathBuf>,
    /// Check the agents' schemes at the solved relaxation point.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Balancedness parameter used with --instance.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Shared-seed runs per nested pair in the monotonicity check.
    #[arg(long, default_value_t = 4_000)]
    trials: u64,
    /// Random pairs on grounds too large for exhaustive enumeration.
    #[arg(long, default_value_t = 200)]
    pairs: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GurvitsArgs {
    /// JSON matrix (array of rows); without it random matrices are drawn.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 3)]
    rows: usize,
    #[arg(long, default_value_t = 5)]
    cols: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CountArgs {
    /// Mapping problem (weights, blocks, choices) as JSON.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve_config(tol: f64, seed: u64) -> SolveConfig {
    SolveConfig {
        tol,
        seed,
        ..SolveConfig::default()
    }
}

fn print_checks(checks: &[BoundCheck]) {
    for c in checks {
        print!(
            "[{}] {}: value {:.6} bound {:.6} slack {:+.3e}",
            c.status, c.name, c.value, c.bound, c.slack
        );
        if let Some(n) = &c.note {
            print!(" ({n})");
        }
        println!();
    }
}

fn finish_checks(checks: &[BoundCheck], out: Option<&Path>) -> Result<bool> {
    print_checks(checks);
    if let Some(p) = out {
        fs::write(p, checks_csv(checks)?).with_context(|| format!("writing {}", p.display()))?;
    }
    let ok = checks.iter().all(|c| c.status != CheckStatus::Fail);
    println!("overall: {}", if ok { "pass" } else { "fail" });
    Ok(ok)
}

fn cmd_gen(a: GenArgs) -> Result<bool> {
    let family = match a.family {
        FamilyArg::Rank => Family::Rank,
        FamilyArg::Sumrank => Family::SumRank,
        FamilyArg::Coverage => Family::Coverage,
        FamilyArg::Matching => Family::Matching,
        FamilyArg::Kmatching => Family::KMatching,
    };
    let matroids = match a.matroids {
        MatroidArg::Uniform => MatroidFamily::Uniform,
        MatroidArg::Partition => MatroidFamily::Partition,
        MatroidArg::Graphic => MatroidFamily::Graphic,
        MatroidArg::Free => MatroidFamily::Free,
        MatroidArg::Mixed => MatroidFamily::Mixed,
    };
    let params = GenParams {
        matroids,
        k: a.k,
        part_size: a.part_size,
        terms: a.terms,
        ..GenParams::default()
    };
    let inst = generate(family, a.n, a.m, a.seed, &params)?;
    emit(a.out.as_deref(), &(inst.to_json() + "\n"))?;
    Ok(true)
}

fn cmd_solve(a: SolveArgs) -> Result<bool> {
    let inst = read_instance(&a.instance)?;
    let program = build_program(&inst)?;
    let res = solve(&program, &solve_config(a.tol, 0))?;
    println!(
        "{} program: product {:.6}  nsw {:.6}  log {:.6}  gap {:.2e}  iterations {}  converged {}",
        program.kind, res.value_product, res.value_nsw, res.value_log, res.gap, res.iterations, res.converged
    );
    for d in &res.diagnostics {
        println!("  {d}");
    }
    if let Some(p) = &a.out {
        let doc = serde_json::json!({
            "program_kind": program.kind,
            "values": res.solution.values,
            "marginals": program.item_marginals(&res.solution),
            "log_y": res.dual.log_y,
            "value_log": res.value_log,
            "value_product": res.value_product,
            "gap": res.gap,
            "converged": res.converged,
        });
        fs::write(p, serde_json::to_string_pretty(&doc)? + "\n")?;
    }
    Ok(true)
}

fn cmd_run(a: RunArgs, pipeline: bool) -> Result<bool> {
    let inst = read_instance(&a.instance)?;
    let procedure = a.procedure.map(|p| Procedure::ALL[p as usize]);
    let cfg = PipelineConfig {
        solve: solve_config(a.tol, a.seed),
        samples: a.samples,
        seed: a.seed,
        procedures: procedure.map(|p| vec![p]),
        brute_force: pipeline && !a.no_opt,
    };
    let report = run_pipeline(&inst, &cfg)?;
    print!("{}", report.to_text());
    if !pipeline {
        let program = build_program(&inst)?;
        let sol = solve(&program, &cfg.solve)?;
        for p in &report.procedures {
            let t = round(&inst, &program, &sol.solution, p.procedure, SampleKey::new(a.seed, 0))?;
            println!(
                "sample 0 of procedure {}: bundles {:?} product {:.6}",
                p.procedure,
                t.allocation.bundles(inst.n),
                t.product_value
            );
        }
    }
    if let Some(p) = &a.out {
        fs::write(p, report.to_csv()?).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &a.json {
        fs::write(p, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(report.passed())
}

fn cmd_verify(a: VerifyArgs) -> Result<bool> {
    let inst = read_instance(&a.instance)?;
    let program = build_program(&inst)?;
    let sol = solve(&program, &solve_config(a.tol, 0))?;
    let mut checks = Vec::new();
    for (i, v) in inst.valuations().iter().enumerate() {
        let name = format!("agent_{i}_monotone_submodular");
        match check_monotone_submodular(v, inst.m) {
            Ok(r) => {
                let ok = r.monotone && r.submodular;
                let mut c = BoundCheck::at_least(name, if ok { 0.0 } else { -1.0 }, 0.0);
                if let Some(w) = r.witness {
                    c.note = Some(format!("{w:?}"));
                }
                checks.push(c);
            }
            Err(NswError::UnsupportedSize { .. }) => {
                checks.push(BoundCheck::vacuous(name, "too many items for exhaustive check"))
            }
            Err(e) => return Err(e.into()),
        }
    }
    if inst.m >= inst.n {
        let c = match dual_separation(&sol.dual, inst.n)? {
            nswlab::relaxation::DualSeparation::Ok => BoundCheck::at_least("dual_feasible", 0.0, 0.0),
            nswlab::relaxation::DualSeparation::Violated { sum, .. } => {
                BoundCheck::at_least("dual_feasible", sum, 0.0)
            }
        };
        checks.push(c);
    }
    match brute_force_opt(&inst) {
        Ok(opt) => {
            let floor = opt.product - nswlab::report::VALIDITY_TOL * (1.0 + opt.product);
            let mut c = BoundCheck::at_least("relaxation_vs_optimum", sol.value_product, floor);
            c.note = Some(format!("optimum {:.6} bundles {:?}", opt.product, opt.allocation.bundles(inst.n)));
            checks.push(c);
        }
        Err(NswError::UnsupportedSize { .. }) => {
            checks.push(BoundCheck::vacuous("relaxation_vs_optimum", "too many allocations to enumerate"))
        }
        Err(e) => return Err(e.into()),
    }
    finish_checks(&checks, a.out.as_deref())
}

fn crs_checks(crs: &Crs, label: &str, a: &CrsArgs, checks: &mut Vec<BoundCheck>) -> Result<()> {
    let b = crs.b();
    let target = (1.0 - (-b).exp()) / b;
    let exact = crs.scheme().is_exact();
    println!("{label}: scheme {} b {b}", crs.scheme());
    for (e, &x) in crs.marginals().iter().enumerate() {
        if x <= 0.0 {
            continue;
        }
        let est = estimate_marginal(crs, e, a.samples, a.seed)?;
        let name = format!("{label}_element_{e}_balance");
        if exact {
            checks.push(BoundCheck::at_least(name, est.mean + 3.0 * est.stderr, target));
        } else {
            let mut c = BoundCheck::vacuous(name, "greedy scheme carries no balance guarantee");
            c.value = est.mean;
            c.bound = target;
            checks.push(c);
        }
    }
    let ground = crs.marginals().len();
    if exact && ground <= MONOTONE_EXHAUSTIVE_CAP {
        let r = check_monotone(crs, a.trials, a.pairs, a.seed)?;
        let mut c = BoundCheck::at_least(
            format!("{label}_monotone"),
            0.0 - r.violations.len() as f64,
            0.0,
        );
        c.note = Some(format!("{} nested pairs, exhaustive {}", r.pairs, r.exhaustive));
        checks.push(c);
    }
    Ok(())
}

fn cmd_crs(a: CrsArgs) -> Result<bool> {
    let mut checks = Vec::new();
    if let Some(p) = &a.spec {
        let spec: CrsSpec = read_json(p)?;
        crs_checks(&spec.build()?, "spec", &a, &mut checks)?;
    } else if let Some(p) = &a.instance {
        let inst = read_instance(p)?;
        let program = build_program(&inst)?;
        let sol = solve(&program, &solve_config(a.tol, a.seed))?;
        let x = program.item_marginals(&sol.solution);
        for i in 0..inst.n {
            let Some([(matroid, _)]) = inst.valuation(i).rank_terms() else {
                println!("agent {i}: not a single matroid rank valuation, skipped");
                continue;
            };
            let xi: Vec<f64> = x[i].iter().map(|v| a.b * v).collect();
            let crs = Crs::auto(matroid.clone(), xi, a.b)?;
            crs_checks(&crs, &format!("agent_{i}"), &a, &mut checks)?;
        }
    } else {
        bail!("crs-check needs --spec or --instance");
    }
    finish_checks(&checks, a.out.as_deref())
}

fn cmd_gurvits(a: GurvitsArgs) -> Result<bool> {
    let cfg = SolveConfig {
        tol: a.tol,
        ..SolveConfig::default()
    };
    let matrices: Vec<Vec<Vec<f64>>> = match &a.matrix {
        Some(p) => vec![read_json(p)?],
        None => (0..a.count as u64)
            .map(|t| {
                let mut rng = stream(a.seed, t, Purpose::Generator, 0);
                (0..a.rows)
                    .map(|_| (0..a.cols).map(|_| rng.gen_range(0.0..1.0)).collect())
                    .collect()
            })
            .collect(),
    };
    let mut checks = Vec::new();
    for (t, m) in matrices.iter().enumerate() {
        let r = gurvits_check(m, &cfg)?;
        let name = format!("matrix_{t}");
        if r.inf_value <= 0.0 {
            checks.push(BoundCheck::vacuous(name, "infimum is 0"));
        } else {
            let mut c = BoundCheck::at_least(name, r.coeff_sum, r.bound * r.inf_value * (1.0 - 1e-6));
            c.note = r.ratio.map(|q| format!("ratio {q:.6} against e^-n {:.6}", r.bound));
            checks.push(c);
        }
    }
    finish_checks(&checks, a.out.as_deref())
}

fn cmd_count(a: CountArgs) -> Result<bool> {
    let problem: MappingProblem = read_json(&a.input)?;
    let count = count_constrained_mappings(&problem)?;
    emit(a.out.as_deref(), &format!("{count}\n"))?;
    Ok(true)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("NSWLAB_THREADS") {
        let n: usize = v.parse().with_context(|| format!("NSWLAB_THREADS={v:?} is not a count"))?;
        if n == 0 {
            bail!("NSWLAB_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Round(a) => {
            if a.samples < MIN_SAMPLES {
                bail!("--samples must be at least {MIN_SAMPLES}");
            }
            cmd_run(a, false)
        }
        Command::Verify(a) => cmd_verify(a),
        Command::CrsCheck(a) => cmd_crs(a),
        Command::GurvitsCheck(a) => cmd_gurvits(a),
        Command::CountMappings(a) => cmd_count(a),
        Command::Pipeline(a) => cmd_run(a, true),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
