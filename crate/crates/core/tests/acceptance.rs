//! Acceptance run: one PASS/FAIL line per criterion. Oracles used here are
//! written independently of the library routines they check.

use std::process::ExitCode;
use std::time::Instant;

use nswlab::analysis::ENUMERATION_CAP;
use nswlab::contention::{check_monotone, estimate_marginal};
use nswlab::instance::{random_matroid, MatroidFamily};
use nswlab::rng::SampleKey;
use nswlab::stats::{mc_mean_vec, MCEstimate};
use nswlab::valuation::check_monotone_submodular;
use nswlab::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const E: f64 = std::f64::consts::E;
const SOLVE_TOL: f64 = 1e-4;
// relaxation may undershoot the optimum by at most this much, relative
const VALIDITY_TOL: f64 = 1e-3;
const GURVITS_SLACK: f64 = 1e-6;
const GRID_TOL: f64 = 1e-3;
const MIDPOINT_TOL: f64 = 1e-8;
const CRS_SAMPLES: u64 = 100_000;
const ROUND_SAMPLES: u64 = 100_000;
const P4_MAX_SAMPLES: u64 = 1_000_000;
const CHAIN_SAMPLES: u64 = 10_000;
// marginals within 1e-6 of 0 or 1 draw constant samples with zero stderr
const MARGINAL_FLOOR: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn cfg() -> SolveConfig {
    SolveConfig {
        tol: SOLVE_TOL,
        ..SolveConfig::default()
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- oracles

/// Max product over all (n+1)^m item maps, valuing bundles with `evaluate`.
fn naive_opt(inst: &Instance) -> f64 {
    let (n, m) = (inst.n, inst.m);
    let mut best: f64 = 0.0;
    for code in 0..(n + 1).pow(m as u32) {
        let mut c = code;
        let mut sets = vec![Vec::new(); n];
        for j in 0..m {
            if c % (n + 1) < n {
                sets[c % (n + 1)].push(j);
            }
            c /= n + 1;
        }
        let p: f64 = (0..n).map(|i| inst.valuation(i).evaluate(&sets[i]).unwrap()).product();
        best = best.max(p);
    }
    best
}

/// Sum over injective tuples by plain recursion.
fn naive_distinct(a: &[Vec<f64>]) -> f64 {
    fn go(a: &[Vec<f64>], i: usize, used: &mut Vec<bool>) -> f64 {
        if i == a.len() {
            return 1.0;
        }
        let mut s = 0.0;
        for j in 0..used.len() {
            if !used[j] && a[i][j] != 0.0 {
                used[j] = true;
                s += a[i][j] * go(a, i + 1, used);
                used[j] = false;
            }
        }
        s
    }
    let m = a.first().map_or(0, Vec::len);
    go(a, 0, &mut vec![false; m])
}

/// Infimum of `prod_i sum_j a_ij y_j` over `y^S >= 1`, `|S| = n`, by grid
/// search. Shifting `u = log y` by `t` adds `n t` to the log objective, so
/// minimizing `F(u) - (sum of n smallest u)` with `u_0 = 0` covers the
/// boundary of the feasible set.
fn grid_inf(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let m = a[0].len();
    let g = |u: &[f64]| {
        let f: f64 = a
            .iter()
            .map(|r| r.iter().zip(u).map(|(w, ui)| w * ui.exp()).sum::<f64>().ln())
            .sum();
        let mut s = u.to_vec();
        s.sort_by(f64::total_cmp);
        f - s[..n].iter().sum::<f64>()
    };
    let free = m - 1;
    let mut center = vec![0.0; free];
    let (mut radius, mut step) = (8.0f64, 0.1f64);
    let mut best = f64::INFINITY;
    for _ in 0..5 {
        let k = (2.0 * radius / step).round() as i64;
        let mut idx = vec![0i64; free];
        let mut best_pt = center.clone();
        loop {
            let pt: Vec<f64> = (0..free).map(|d| center[d] - radius + idx[d] as f64 * step).collect();
            let mut u = vec![0.0];
            u.extend(&pt);
            let v = g(&u);
            if v < best {
                best = v;
                best_pt = pt;
            }
            let mut d = 0;
            while d < free && idx[d] == k {
                idx[d] = 0;
                d += 1;
            }
            if d == free {
                break;
            }
            idx[d] += 1;
        }
        center = best_pt;
        radius = 2.0 * step;
        step /= 10.0;
    }
    best.exp()
}

/// Exhaustive (monotone, submodular) from `evaluate`.
fn naive_shape(v: &Valuation, m: usize) -> (bool, bool) {
    let val = |mask: usize| v.evaluate(&(0..m).filter(|j| mask >> j & 1 == 1).collect::<Vec<_>>()).unwrap();
    let table: Vec<f64> = (0..1usize << m).map(val).collect();
    let eps = 1e-9;
    let (mut monotone, mut submodular) = (true, true);
    for t in 0..1usize << m {
        for e in 0..m {
            if t >> e & 1 == 1 {
                continue;
            }
            let gain_t = table[t | 1 << e] - table[t];
            monotone &= gain_t >= -eps;
            // every subset of t
            let mut s = t;
            loop {
                submodular &= table[s | 1 << e] - table[s] >= gain_t - eps;
                if s == 0 {
                    break;
                }
                s = (s - 1) & t;
            }
        }
    }
    (monotone, submodular)
}

/// Inclusion-exclusion over the chosen elements that the image misses.
fn mappings_ie(w: &[Vec<f64>], chosen: &[usize]) -> f64 {
    let b = w[0].len();
    let mut total = 0.0;
    for mask in 0u32..1 << chosen.len() {
        let banned: Vec<usize> = (0..chosen.len()).filter(|t| mask >> t & 1 == 1).map(|t| chosen[t]).collect();
        let prod: f64 = w
            .iter()
            .map(|r| (0..b).filter(|e| !banned.contains(e)).map(|e| r[e]).sum::<f64>())
            .product();
        total += if banned.len() % 2 == 0 { prod } else { -prod };
    }
    total
}

/// Rank instance with small integer weights, so optimal fractional points
/// are frequent.
fn tied_rank_instance(n: usize, m: usize, seed: u64) -> Instance {
    let mut r = rng(seed);
    let vals = (0..n)
        .map(|_| ValuationSpec::WeightedMatroidRank {
            matroid: random_matroid(&mut r, m, MatroidFamily::Mixed),
            weights: (0..m).map(|_| r.gen_range(1..=2) as f64).collect(),
        })
        .collect();
    Instance::new(Metadata::default(), n, m, vals).unwrap()
}

fn fractional(x: &[f64]) -> bool {
    x.iter().any(|v| *v > 1e-6 && *v < 1.0 - 1e-6)
}

/// The first `count` tied rank instances, in seed order from `base`, whose
/// solved relaxation is fractional; integral points round trivially.
fn fractional_rank_instances(count: usize, base: u64) -> Vec<(Instance, ProgramSpec, SolveResult)> {
    let mut out = Vec::new();
    for s in base..base + 1000 {
        let inst = tied_rank_instance(2, 3 + (s % 4) as usize, s);
        let program = build_program(&inst).unwrap();
        let sol = solve(&program, &cfg()).unwrap();
        if fractional(&sol.solution.values) {
            out.push((inst, program, sol));
            if out.len() == count {
                break;
            }
        }
    }
    out
}

/// Random point of `b * P(M)`, scaled so some constraint is nearly tight.
fn point_in(mat: &Matroid, b: f64, r: &mut ChaCha8Rng) -> Vec<f64> {
    let g = mat.ground_size();
    let w: Vec<f64> = (0..g).map(|_| r.gen_range(0.05..1.0)).collect();
    let (mut lo, mut hi) = (0.0, 1.0 / w.iter().cloned().fold(0.0, f64::max));
    for _ in 0..60 {
        let mid = (lo + hi) / 2.0;
        let x: Vec<f64> = w.iter().map(|v| v * mid).collect();
        if mat.polytope_check(&x, b, 0.0).unwrap().is_ok() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    w.iter().map(|v| v * lo).collect()
}

// ---------------------------------------------------------------- criteria

fn c1_validity() -> Outcome {
    let start = Instant::now();
    let fams = [
        (Family::Rank, "P1"),
        (Family::SumRank, "SumRanks"),
        (Family::Matching, "Matching"),
        (Family::KMatching, "KMatching"),
        (Family::Coverage, "CoverageP1pp"),
    ];
    let mats = [MatroidFamily::Uniform, MatroidFamily::Partition, MatroidFamily::Graphic];
    let mut pass = true;
    let mut parts = Vec::new();
    for (fam, label) in fams {
        let (mut done, mut worst, mut seed) = (0, f64::INFINITY, 0u64);
        while done < 50 && seed < 500 {
            let n = 2 + (seed % 2) as usize;
            let m = 3 + (seed % 4) as usize;
            let params = GenParams {
                matroids: mats[(seed / 2 % 3) as usize],
                ..GenParams::default()
            };
            seed += 1;
            let Ok(inst) = generate(fam, n, m, seed, &params) else { continue };
            let program = build_program(&inst).unwrap();
            let relax = solve(&program, &cfg()).unwrap().value_product;
            let opt = naive_opt(&inst);
            let slack = relax - (opt - VALIDITY_TOL * (1.0 + opt));
            worst = worst.min(slack / (1.0 + opt));
            if slack < 0.0 {
                pass = false;
                println!("  c1 {label} seed {seed}: relaxation {relax} below optimum {opt}");
            }
            done += 1;
        }
        pass &= done >= 50;
        parts.push(format!("{label} {done} inst, min rel slack {worst:.2e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 600.0;
    Outcome {
        pass,
        detail: format!("{}; {secs:.1}s of 600s", parts.join("; ")),
    }
}

fn c2_gurvits() -> Outcome {
    let mut r = rng(2);
    let (mut fails, mut certified, mut worst_ratio, mut grid_err) = (0, 0, f64::INFINITY, 0.0f64);
    for t in 0..100 {
        let n = r.gen_range(1..=4);
        let m = r.gen_range(n..=8);
        let zero = if m > 3 { 0.15 } else { 0.0 };
        let a: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| if r.gen_bool(zero) { 0.0 } else { r.gen_range(0.05..1.0) })
                    .collect()
            })
            .collect();
        let rep = gurvits_check(&a, &SolveConfig { tol: 1e-7, ..cfg() }).unwrap();
        let coeff = naive_distinct(&a);
        let ok = (coeff - rep.coeff_sum).abs() <= 1e-12 * (1.0 + coeff)
            && coeff >= (-(n as f64)).exp() * rep.inf_value * (1.0 - GURVITS_SLACK);
        if !ok {
            fails += 1;
            println!("  c2 matrix {t}: coeff {coeff} inf {} ", rep.inf_value);
        }
        if rep.inf_value > 0.0 {
            worst_ratio = worst_ratio.min(coeff / rep.inf_value / (-(n as f64)).exp());
        }
        if m <= 3 {
            let g = grid_inf(&a);
            let err = (g - rep.inf_value).abs() / (1.0 + g);
            grid_err = grid_err.max(err);
            certified += 1;
            if err > GRID_TOL {
                fails += 1;
                println!("  c2 matrix {t}: grid {g} solver {}", rep.inf_value);
            }
        }
    }
    Outcome {
        pass: fails == 0 && certified > 0,
        detail: format!(
            "100 matrices, {fails} failures, min ratio to e^-n {worst_ratio:.3}; {certified} grid certificates, max rel err {grid_err:.1e}"
        ),
    }
}

fn c3_concave_convex() -> Outcome {
    let fams = [Family::Rank, Family::SumRank, Family::Coverage, Family::Matching, Family::KMatching];
    let mut r = rng(3);
    let (mut tests, mut cav_fail, mut vex_fail) = (0, 0, 0);
    let (mut cav_worst, mut vex_worst) = (f64::INFINITY, f64::INFINITY);
    for p in 0..20u64 {
        let inst = generate(fams[p as usize % 5], 2 + (p % 2) as usize, 4, 100 + p, &GenParams::default()).unwrap();
        let program = build_program(&inst).unwrap();
        let nv = program.var_count();
        let point = |r: &mut ChaCha8Rng| -> FractionalSolution {
            let mut x = vec![0.0; nv];
            let k = 3;
            for _ in 0..k {
                let c: Vec<f64> = (0..nv).map(|_| r.gen_range(-0.2..1.0)).collect();
                let v = program.lp_maximize(&c).unwrap();
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += vi / k as f64;
                }
            }
            FractionalSolution::new(x)
        };
        for _ in 0..50 {
            tests += 1;
            let dual = DualPoint {
                log_y: (0..inst.m).map(|_| r.gen_range(-2.0..2.0)).collect(),
            };
            let (x1, x2) = (point(&mut r), point(&mut r));
            let xm = FractionalSolution::new(x1.values.iter().zip(&x2.values).map(|(a, b)| (a + b) / 2.0).collect());
            let (g1, g2, gm) = (
                log_objective(&program, &x1, &dual),
                log_objective(&program, &x2, &dual),
                log_objective(&program, &xm, &dual),
            );
            let d = gm - (g1 + g2) / 2.0;
            if d.is_finite() {
                cav_worst = cav_worst.min(d);
            }
            if d < -MIDPOINT_TOL {
                cav_fail += 1;
            }

            let x = point(&mut r);
            let u1: Vec<f64> = (0..inst.m).map(|_| r.gen_range(-3.0..3.0)).collect();
            let u2: Vec<f64> = (0..inst.m).map(|_| r.gen_range(-3.0..3.0)).collect();
            let um: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| (a + b) / 2.0).collect();
            let h = |u: Vec<f64>| log_objective(&program, &x, &DualPoint { log_y: u });
            let (h1, h2, hm) = (h(u1), h(u2), h(um));
            let d = (h1 + h2) / 2.0 - hm;
            if d.is_finite() {
                vex_worst = vex_worst.min(d);
            }
            if d < -MIDPOINT_TOL {
                vex_fail += 1;
            }
        }
    }
    Outcome {
        pass: cav_fail == 0 && vex_fail == 0 && tests == 1000,
        detail: format!(
            "{tests} tests each; concavity failures {cav_fail} (min margin {cav_worst:.1e}), convexity failures {vex_fail} (min margin {vex_worst:.1e})"
        ),
    }
}

fn crs_cases(r: &mut ChaCha8Rng) -> Vec<(Scheme, MatroidSpec)> {
    let mut out = Vec::new();
    for g in 2..=5 {
        out.push((Scheme::Rank1Exact, MatroidSpec::Uniform { ground_size: g, rank: 1 }));
        out.push((Scheme::UniformQuota, MatroidSpec::Uniform { ground_size: g, rank: r.gen_range(1..=g) }));
        out.push((Scheme::PartitionExact, random_matroid(r, g, MatroidFamily::Partition)));
    }
    out
}

fn c4_balance() -> Outcome {
    let mut r = rng(4);
    let mut fails = 0;
    let mut worst = [f64::INFINITY; 2];
    let mut count = 0;
    for (bi, b) in [1.0, 0.5].into_iter().enumerate() {
        let target = (1.0 - (-b as f64).exp()) / b;
        for (t, (scheme, spec)) in crs_cases(&mut r).into_iter().enumerate() {
            let mat = spec.build().unwrap();
            let x = point_in(&mat, b, &mut r);
            let crs = Crs::new(mat, x, b, scheme).unwrap();
            for e in 0..crs.marginals().len() {
                let est = estimate_marginal(&crs, e, CRS_SAMPLES, 40 + t as u64).unwrap();
                count += 1;
                worst[bi] = worst[bi].min(est.mean + 3.0 * est.stderr - target);
                if est.mean < target - 3.0 * est.stderr {
                    fails += 1;
                    println!("  c4 b={b} {scheme} element {e}: {} < {target}", est.mean);
                }
            }
        }
    }
    let crs = Crs::new(MatroidSpec::Uniform { ground_size: 2, rank: 1 }.build().unwrap(), vec![0.5, 0.5], 1.0, Scheme::Rank1Exact).unwrap();
    let est = estimate_marginal(&crs, 0, CRS_SAMPLES, 7).unwrap();
    let analytic = est.covers(0.75);
    Outcome {
        pass: fails == 0 && analytic,
        detail: format!(
            "{count} marginals, {fails} below bound; min margin {:.4} at b=1 (bound 0.6321), {:.4} at b=1/2 (bound 0.7869); rank1 (0.5,0.5) estimate {:.4} +- {:.4} vs 0.75",
            worst[0], worst[1], est.mean, 3.0 * est.stderr
        ),
    }
}

fn c5_monotone() -> Outcome {
    let mut r = rng(5);
    let (mut viol, mut pairs, mut schemes) = (0, 0, 0);
    for g in [3, 4, 5, 6] {
        for (scheme, spec) in [
            (Scheme::Rank1Exact, MatroidSpec::Uniform { ground_size: g, rank: 1 }),
            (Scheme::UniformQuota, MatroidSpec::Uniform { ground_size: g, rank: 2 }),
            (Scheme::PartitionExact, random_matroid(&mut r, g, MatroidFamily::Partition)),
        ] {
            let mat = spec.build().unwrap();
            let x = point_in(&mat, 1.0, &mut r);
            let crs = Crs::new(mat, x, 1.0, scheme).unwrap();
            let rep = check_monotone(&crs, 4_000, 0, 50 + g as u64).unwrap();
            assert!(rep.exhaustive);
            schemes += 1;
            pairs += rep.pairs;
            viol += rep.violations.len();
            for v in &rep.violations {
                println!("  c5 {scheme} ground {g}: {v:?}");
            }
        }
    }
    Outcome {
        pass: viol == 0,
        detail: format!("{schemes} schemes, {pairs} nested pairs, {viol} significant violations"),
    }
}

fn c6_factor_p1() -> Outcome {
    let factor = (E.recip() * (1.0 - E.recip()).powi(2)).powi(2);
    let (mut fails, mut worst) = (0, f64::INFINITY);
    let cases = fractional_rank_instances(10, 600);
    for (s, (inst, program, sol)) in cases.iter().enumerate() {
        let s = s as u64;
        let (inst, program) = (inst, program);
        let est = mc_expected_product(&inst, &program, &sol.solution, Procedure::P1, ROUND_SAMPLES, s).unwrap();
        let bound = factor * sol.value_product;
        if sol.value_product > 0.0 {
            worst = worst.min(est.ci_lower / sol.value_product);
        }
        if est.ci_lower < bound {
            fails += 1;
            println!("  c6 instance {s}: ci_lower {} < {bound}", est.ci_lower);
        }
    }
    Outcome {
        pass: fails == 0 && cases.len() == 10,
        detail: format!(
            "{} fractional instances, {fails} below; min ci_lower/relaxation {worst:.4} vs product factor {factor:.6}; NSW-level factor {:.5}",
            cases.len(),
            E.recip() * (1.0 - E.recip()).powi(2)
        ),
    }
}

fn c7_chain() -> Outcome {
    let (mut broken, mut total, mut off, mut cells) = (0u64, 0u64, 0, 0);
    for (s, (inst, program, sol)) in fractional_rank_instances(4, 700).into_iter().enumerate() {
        let s = s as u64;
        let sol = sol.solution;
        let r1 = Rounder::new(&inst, &program, &sol, Procedure::P1).unwrap();
        let r2 = Rounder::new(&inst, &program, &sol, Procedure::P2).unwrap();
        let seed = 70 + s;
        for k in 0..CHAIN_SAMPLES {
            let key = SampleKey::new(seed, k);
            let t1 = r1.sample(key);
            let (t0, t2) = r2.coupled(key).unwrap();
            total += 1;
            let ok = (0..inst.n).all(|i| {
                let (b1, b2, b0) = (t1.allocation.bundle(i), t2.allocation.bundle(i), t0.allocation.bundle(i));
                b1.iter().all(|j| b2.contains(j)) && b2.iter().all(|j| b0.contains(j))
            });
            broken += !ok as u64;
        }
        let x = program.item_marginals(&sol);
        let (n, m) = (inst.n, inst.m);
        let est: Vec<MCEstimate> = mc_mean_vec(CHAIN_SAMPLES, n * m, |k| {
            let (t0, _) = r2.coupled(SampleKey::new(seed, k)).unwrap();
            (0..n * m).map(|c| (t0.allocation.owner[c % m] == Some(c / m)) as u8 as f64).collect()
        });
        for (c, e) in est.iter().enumerate() {
            cells += 1;
            let target = x[c / m][c % m];
            if (e.mean - target).abs() > 3.0 * e.stderr + MARGINAL_FLOOR {
                off += 1;
                println!("  c7 instance {s} cell {c}: {} vs x {target}", e.mean);
            }
        }
    }
    Outcome {
        pass: broken == 0 && off == 0,
        detail: format!(
            "{total} coupled samples, {broken} chain breaks; {cells} procedure-0 marginals, {off} outside 3 stderr"
        ),
    }
}

fn c8_coverage() -> Outcome {
    let (mut off, mut worst) = (0, 0.0f64);
    for s in 0..10u64 {
        let inst = generate(Family::Coverage, 2, 3, 800 + s, &GenParams::default()).unwrap();
        let program = build_program(&inst).unwrap();
        let sol = solve(&program, &cfg()).unwrap().solution;
        let x = program.item_marginals(&sol);
        let closed = expected_product_coverage(&inst, &x).unwrap();
        let est = mc_expected_product(&inst, &program, &sol, Procedure::P0, ROUND_SAMPLES, s).unwrap();
        let dev = (est.mean - closed).abs();
        if est.stderr > 0.0 {
            worst = worst.max(dev / est.stderr);
        }
        if dev > 3.0 * est.stderr + 1e-12 * (1.0 + closed) {
            off += 1;
            println!("  c8 instance {s}: closed {closed} mc {} +- {}", est.mean, est.stderr);
        }
    }
    Outcome {
        pass: off == 0,
        detail: format!("10 instances, {off} outside 3 stderr, max |dev|/stderr {worst:.2}"),
    }
}

fn c9_factor_p4() -> Outcome {
    let factor = (E * E * 3.0).recip().powi(2);
    let (mut fails, mut degraded, mut worst, mut frac) = (0, 0, f64::INFINITY, 0);
    let params = GenParams {
        k: 3,
        part_size: 2,
        ..GenParams::default()
    };
    for s in 0..5u64 {
        let inst = generate(Family::KMatching, 2, 3, 900 + s, &params).unwrap();
        let program = build_program(&inst).unwrap();
        let sol = solve(&program, &cfg()).unwrap();
        let bound = factor * sol.value_product;
        frac += fractional(&sol.solution.values) as usize;
        let mut samples = ROUND_SAMPLES;
        let est = loop {
            let est = mc_expected_product(&inst, &program, &sol.solution, Procedure::P4, samples, s).unwrap();
            if est.ci_lower >= bound || samples >= P4_MAX_SAMPLES {
                break est;
            }
            samples = P4_MAX_SAMPLES;
        };
        if sol.value_product > 0.0 {
            worst = worst.min(est.ci_lower / sol.value_product);
        }
        if est.ci_lower < bound {
            if est.mean >= bound && est.ci_lower >= 0.5 * bound {
                degraded += 1;
                println!("  c9 instance {s}: degraded criterion used (mean {} ci_lower {} bound {bound})", est.mean, est.ci_lower);
            } else {
                fails += 1;
                println!("  c9 instance {s}: ci_lower {} < {bound}", est.ci_lower);
            }
        }
    }
    Outcome {
        pass: fails == 0,
        detail: format!(
            "5 instances ({frac} fractional), {fails} below, {degraded} degraded; min ci_lower/relaxation {worst:.4} vs factor {factor:.6}"
        ),
    }
}

fn c10_oracles() -> Outcome {
    let mut r = rng(10);
    let mut bad = Vec::new();
    for t in 0..100 {
        let n = r.gen_range(1..=4);
        let m = r.gen_range(1..=6);
        let a: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| r.gen_range(0..4) as f64).collect()).collect();
        if distinct_tuple_sum(&a).unwrap() != naive_distinct(&a) {
            bad.push(format!("distinct {t}"));
        }
    }
    for t in 0..100 {
        let na = r.gen_range(1..=4);
        let nb = r.gen_range(1..=5);
        let w: Vec<Vec<f64>> = (0..na).map(|_| (0..nb).map(|_| r.gen_range(0..3) as f64).collect()).collect();
        let mut elems: Vec<usize> = (0..nb).collect();
        rand::seq::SliceRandom::shuffle(elems.as_mut_slice(), &mut r);
        let nblocks = r.gen_range(0..=nb.min(3));
        let mut blocks = vec![Vec::new(); nblocks];
        for (k, e) in elems.into_iter().enumerate() {
            if nblocks > 0 && (k < nblocks || r.gen_bool(0.5)) {
                blocks[k % nblocks].push(e);
            }
        }
        // sum of inclusion-exclusion over every choice tuple
        let mut choices = vec![Vec::new()];
        for bl in &blocks {
            choices = choices
                .into_iter()
                .flat_map(|p: Vec<usize>| {
                    bl.iter().map(move |&e| {
                        let mut q = p.clone();
                        q.push(e);
                        q
                    })
                })
                .collect();
        }
        let expected: f64 = choices.iter().map(|c| mappings_ie(&w, c)).sum();
        let fixed = choices[r.gen_range(0..choices.len())].clone();
        let p_all = MappingProblem { weights: w.clone(), blocks: blocks.clone(), choices: None };
        let p_one = MappingProblem { weights: w.clone(), blocks, choices: Some(fixed.clone()) };
        if count_constrained_mappings(&p_all).unwrap() != expected
            || count_constrained_mappings(&p_one).unwrap() != mappings_ie(&w, &fixed)
        {
            bad.push(format!("mappings {t}"));
        }
    }
    let fams = [Family::Rank, Family::SumRank, Family::Coverage, Family::Matching, Family::KMatching];
    // hypergraph matchings with k >= 3 are not submodular in general, so
    // only the checker's agreement and monotonicity are required there
    let (mut checked, mut kpartite_non_sub) = (0, 0);
    for t in 0..100u64 {
        let m = 2 + (t % 5) as usize;
        let inst = generate(fams[t as usize % 5], 1 + (t % 3) as usize, m, 1000 + t, &GenParams::default()).unwrap();
        for v in inst.valuations() {
            checked += 1;
            let lib = check_monotone_submodular(v, m).unwrap();
            let (mono, sub) = naive_shape(v, m);
            let kpartite = v.spec().class() == ValuationClass::KPartiteMatching;
            if lib.monotone != mono || lib.submodular != sub {
                bad.push(format!("shape {t}: checker disagrees with oracle"));
            } else if !mono || (!sub && !kpartite) {
                bad.push(format!("shape {t}: {:?} fails", v.spec().class()));
            } else if !sub {
                kpartite_non_sub += 1;
            }
        }
    }
    for b in &bad {
        println!("  c10 mismatch: {b}");
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!(
            "100 distinct-tuple sums, 100 mapping counts (free and fixed choice), {checked} valuations from 100 instances; {} mismatches; {kpartite_non_sub} k-partite valuations non-submodular (checker agrees)",
            bad.len()
        ),
    }
}

fn main() -> ExitCode {
    assert!(ENUMERATION_CAP >= 4u128.pow(6));
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("relaxation validity", c1_validity),
        ("coefficient mass vs infimum", c2_gurvits),
        ("concave in x, convex in log y", c3_concave_convex),
        ("scheme balancedness", c4_balance),
        ("scheme monotonicity", c5_monotone),
        ("procedure 1 factor at n=2", c6_factor_p1),
        ("domination chain", c7_chain),
        ("coverage closed form", c8_coverage),
        ("procedure 4 factor, k=3, n=2", c9_factor_p4),
        ("oracle exactness", c10_oracles),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = f();
        println!(
            "criterion {:>2} {} {name}: {} [{:.1}s]",
            k + 1,
            if out.pass { "PASS" } else { "FAIL" },
            out.detail,
            t.elapsed().as_secs_f64()
        );
        failed += !out.pass as usize;
    }
    println!("acceptance: {} of 10 criteria pass", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
