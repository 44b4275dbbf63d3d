use nsk_core::consistency::{battery, capillary_pairings};
use nsk_core::mesh::{GridField, Mesh, State};
use nsk_core::model::FluidParams;
use nsk_oracles::suite::{equivalence_suite, random_state, SUITE_MESHES};
use nsk_oracles::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

#[test]
fn kernels_agree_with_oracles() {
    let outcomes = equivalence_suite(&SUITE_MESHES, 200, &OracleTolerance::default()).unwrap();
    for o in &outcomes {
        println!(
            "{:<40} cases {:>5} worst/allowed {:.3e} worst rel {:.3e}",
            o.name, o.cases, o.worst, o.worst_rel
        );
    }
    assert!(outcomes.iter().all(|o| o.passed()));
}

#[test]
fn s_terms_of_constant_density_vanish() {
    let mesh = Mesh::<f64>::new(8, 8).unwrap();
    let rho = GridField::constant(mesh, 0.7);
    let p = FluidParams::new(1.0, 2.0, 0.0, 0.2).unwrap();
    let phi = GridField::sample(mesh, |x, y| (TAU * x).sin() * (TAU * y).cos());
    assert_eq!(oracle_s_terms(&rho, &phi, &phi, &p).unwrap(), 0.0);
}

#[test]
fn s_terms_match_kernel_on_smooth_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mesh = Mesh::<f64>::new(8, 8).unwrap();
    let p = FluidParams::new(1.0, 2.0, 0.0, 0.05).unwrap();
    let tests = battery(2, 1.0);
    for _ in 0..20 {
        let (a, b) = (rng.gen_range(0.05..0.3), rng.gen_range(0.0..1.0));
        let rho = GridField::sample(mesh, |x, y| {
            1.0 + a * (TAU * (x + b)).sin() * (TAU * y).cos()
        });
        let phi = tests[rng.gen_range(0..tests.len())];
        let (px, py) = phi.sample_vector(mesh, 0.4);
        let (ka, kb) = capillary_pairings(&rho, &px, &py, &p).unwrap();
        let ob = oracle_s_terms(&rho, &px, &py, &p).unwrap();
        let oa = oracle_original_pairing(&rho, &px, &py, &p).unwrap();
        assert!((kb - ob).abs() <= 1e-13 * (1.0 + kb.abs()), "{kb} vs {ob}");
        assert!((oa - ob).abs() <= 1e-12 * (1.0 + oa.abs()));
        assert!((ka - oa).abs() <= 1e-12 * (1.0 + oa.abs()));
    }
}

#[test]
fn oracle_rhs_integrates_to_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mesh = Mesh::new(8, 16).unwrap();
    let s: State<f64> = random_state(mesh, &mut rng);
    let p = FluidParams::new(1.0, 2.0, 0.05, 0.01).unwrap();
    let rhs = oracle_rhs(&s, &p).unwrap();
    for f in [&rhs.drho_dt, &rhs.dmx_dt, &rhs.dmy_dt] {
        let sum: f64 = f.values().iter().sum();
        assert!(sum.abs() / 128.0 <= 1e-10 * (1.0 + f.max_abs()));
    }
}

#[test]
fn kernels_agree_on_non_dyadic_meshes() {
    let outcomes =
        equivalence_suite(&[(5, 7), (6, 10), (12, 9)], 50, &OracleTolerance::default()).unwrap();
    for o in &outcomes {
        println!(
            "{:<40} cases {:>5} worst/allowed {:.3e} worst rel {:.3e}",
            o.name, o.cases, o.worst, o.worst_rel
        );
    }
    assert!(outcomes.iter().all(|o| o.passed()));
}
