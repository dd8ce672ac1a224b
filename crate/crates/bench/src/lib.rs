//! Benchmark fixtures shared by the criterion targets.

use nswlab::{build_program, generate, solve, Family, FractionalSolution, GenParams, Instance, ProgramSpec, SolveConfig};

/// A seeded instance with its program and solved point.
pub struct Fixture {
    pub instance: Instance,
    pub program: ProgramSpec,
    pub solution: FractionalSolution,
}

pub fn fixture(family: Family, n: usize, m: usize, seed: u64) -> Fixture {
    let instance = generate(family, n, m, seed, &GenParams::default()).expect("fixture generates");
    let program = build_program(&instance).expect("fixture builds");
    let solution = solve(&program, &SolveConfig::default()).expect("fixture solves").solution;
    Fixture {
        instance,
        program,
        solution,
    }
}

/// Dense matrix with entries in (0, 1], deterministic in `seed`.
pub fn matrix(rows: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((s >> 11) as f64 / (1u64 << 53) as f64).max(1e-3)
                })
                .collect()
        })
        .collect()
}
