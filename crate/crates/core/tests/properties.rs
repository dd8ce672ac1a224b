use nswlab::instance::{random_matroid, MatroidFamily};
use nswlab::rng::SampleKey;
use nswlab::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::Rank),
        Just(Family::SumRank),
        Just(Family::Coverage),
        Just(Family::Matching),
        Just(Family::KMatching),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn documents_round_trip_byte_exact(fam in family(), n in 1usize..4, m in 1usize..6, seed in 0u64..1000) {
        let inst = generate(fam, n, m, seed, &GenParams::default()).unwrap();
        let text = inst.to_json();
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn solutions_are_feasible_and_dual_separates(fam in family(), n in 1usize..4, m in 2usize..6, seed in 0u64..1000) {
        let inst = generate(fam, n, m, seed, &GenParams::default()).unwrap();
        let program = build_program(&inst).unwrap();
        let res = solve(&program, &SolveConfig::default()).unwrap();
        prop_assert!(feasible(&program, &res.solution).is_ok());
        prop_assert!(res.value_product >= 0.0);
        if m >= n && res.value_product > 0.0 {
            prop_assert_eq!(dual_separation(&res.dual, n).unwrap(), nswlab::relaxation::DualSeparation::Ok);
        }
    }

    #[test]
    fn rounded_allocations_are_valid(fam in family(), seed in 0u64..1000, key in 0u64..1000) {
        let inst = generate(fam, 2, 4, seed, &GenParams::default()).unwrap();
        let program = build_program(&inst).unwrap();
        let res = solve(&program, &SolveConfig::default()).unwrap();
        for p in Procedure::supported(program.kind) {
            let t = round(&inst, &program, &res.solution, p, SampleKey::new(seed, key)).unwrap();
            prop_assert!(t.allocation.validate(inst.n, inst.m).is_ok());
            let (prod, _) = nsw_value(&inst, &t.allocation).unwrap();
            prop_assert!((prod - t.product_value).abs() <= 1e-9 * (1.0 + prod));
            if p == Procedure::P1 {
                for i in 0..inst.n {
                    let (mat, _) = &inst.valuation(i).rank_terms().unwrap()[0];
                    prop_assert!(mat.is_independent(&t.allocation.bundle(i)).unwrap());
                }
            }
        }
    }

    #[test]
    fn crs_output_is_independent_subset(g in 2usize..7, seed in 0u64..1000) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_matroid(&mut r, g, MatroidFamily::Mixed);
        let mat = spec.build().unwrap();
        let x: Vec<f64> = (0..g).map(|_| r.gen_range(0.0..1.0) / g as f64).collect();
        let crs = Crs::auto(mat.clone(), x, 1.0).unwrap();
        for t in 0..20u64 {
            let active: Vec<usize> = (0..g).filter(|_| r.gen_bool(0.6)).collect();
            let mut rr = ChaCha8Rng::seed_from_u64(seed ^ t);
            let out = crs.resolve(&active, &mut rr).unwrap();
            prop_assert!(out.iter().all(|e| active.contains(e)));
            prop_assert!(mat.is_independent(&out).unwrap());
        }
    }
}
