//! Randomized kernel-versus-oracle comparison.

use nsk_core::consistency::capillary_pairings;
use nsk_core::diagnostics::{relative_energy, TrigReference};
use nsk_core::mesh::{GridField, Mesh, State};
use nsk_core::model::{discrete_total_energy, FluidParams};
use nsk_core::operators::{diff, laplacian, Axis, DiffKind};
use nsk_core::scheme::{capillary_force, lambda_max, rhs_continuity, rhs_full};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::*;

/// Meshes of the full randomized suite.
pub const SUITE_MESHES: [(usize, usize); 4] = [(4, 4), (8, 8), (8, 16), (16, 16)];

/// Worst disagreement of one kernel over all cases. `worst` is the largest
/// ratio of the observed difference to the allowed one, so it passes at `<= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub worst: f64,
    /// Largest difference relative to the value scale.
    pub worst_rel: f64,
}

impl CheckOutcome {
    fn new(name: &'static str) -> Self {
        CheckOutcome {
            name,
            cases: 0,
            worst: 0.0,
            worst_rel: 0.0,
        }
    }

    pub fn passed(&self) -> bool {
        self.cases > 0 && self.worst <= 1.0
    }

    fn record(&mut self, diff: f64, scale: f64, tol: &OracleTolerance) {
        self.cases += 1;
        let allowed = tol.abs + tol.rel * scale;
        self.worst = self.worst.max(diff / allowed);
        self.worst_rel = self
            .worst_rel
            .max(if scale > 0.0 { diff / scale } else { diff });
    }

    fn field(&mut self, a: &GridField<f64>, b: &GridField<f64>, tol: &OracleTolerance) {
        let scale = a.max_abs().max(b.max_abs());
        self.record(max_abs_diff(a, b), scale, tol);
    }

    fn scalar(&mut self, a: f64, b: f64, tol: &OracleTolerance) {
        self.record((a - b).abs(), a.abs().max(b.abs()), tol);
    }
}

/// Density in `[0.5, 2]`, velocity components in `[-1, 1]`.
pub fn random_state(mesh: Mesh<f64>, rng: &mut ChaCha8Rng) -> State<f64> {
    let rho = GridField::from_fn(mesh, |_, _| rng.gen_range(0.5..2.0));
    let u = GridField::from_fn(mesh, |_, _| rng.gen_range(-1.0..1.0));
    let v = GridField::from_fn(mesh, |_, _| rng.gen_range(-1.0..1.0));
    State::new(rho.clone(), &rho * &u, &rho * &v).expect("same mesh")
}

pub fn random_params(rng: &mut ChaCha8Rng) -> FluidParams<f64> {
    FluidParams::new(
        rng.gen_range(0.2..2.0),
        rng.gen_range(1.2..3.0),
        rng.gen_range(0.0..0.1),
        rng.gen_range(1e-4..0.05),
    )
    .expect("parameters drawn inside the valid range")
}

fn random_reference(rng: &mut ChaCha8Rng) -> TrigReference<f64> {
    TrigReference {
        rho_mean: rng.gen_range(0.8..1.5),
        rho_amp: rng.gen_range(0.0..0.3),
        kx: rng.gen_range(1..3),
        ky: rng.gen_range(1..3),
        u_mean: rng.gen_range(-0.5..0.5),
        v_mean: rng.gen_range(-0.5..0.5),
        u_amp: rng.gen_range(0.0..0.5),
    }
}

/// Compares every kernel against its oracle on `seeds` random cases per mesh.
pub fn equivalence_suite(
    meshes: &[(usize, usize)],
    seeds: u64,
    tol: &OracleTolerance,
) -> OracleResult<Vec<CheckOutcome>> {
    let mut diffs = CheckOutcome::new("diff (all axes and kinds)");
    let mut lap = CheckOutcome::new("laplacian");
    let mut cap = CheckOutcome::new("capillary_force");
    let mut cont = CheckOutcome::new("rhs_continuity");
    let mut full = CheckOutcome::new("rhs_full");
    let mut energy = CheckOutcome::new("discrete_total_energy");
    let mut rel = CheckOutcome::new("relative_energy");
    let mut s_terms = CheckOutcome::new("S-term integral vs kernel");
    let mut identity = CheckOutcome::new("S-term integral vs original pairing");
    let s_tol = OracleTolerance {
        rel: 1e-13,
        abs: 1e-13,
    };

    for &(m, n) in meshes {
        let mesh = Mesh::new(m, n)?;
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((m as u64) << 32) ^ ((n as u64) << 48));
            let s = random_state(mesh, &mut rng);
            let p = random_params(&mut rng);

            for axis in [Axis::X, Axis::Y] {
                for kind in [DiffKind::Forward, DiffKind::Backward, DiffKind::Central] {
                    diffs.field(
                        &diff(&s.rho, axis, kind),
                        &oracle_diff(&s.rho, axis, kind)?,
                        tol,
                    );
                }
            }
            lap.field(&laplacian(&s.rho), &oracle_laplacian(&s.rho)?, tol);

            let (kx, ky) = capillary_force(&s.rho, &p);
            let (ox, oy) = oracle_capillary(&s.rho, &p)?;
            cap.field(&kx, &ox, tol);
            cap.field(&ky, &oy, tol);

            let lam = lambda_max(&s, &p)?;
            cont.field(
                &rhs_continuity(&s, &p, lam),
                &oracle_rhs_continuity(&s, lam)?,
                tol,
            );

            let a = rhs_full(&s, &p)?;
            let b = oracle_rhs(&s, &p)?;
            full.field(&a.drho_dt, &b.drho_dt, tol);
            full.field(&a.dmx_dt, &b.dmx_dt, tol);
            full.field(&a.dmy_dt, &b.dmy_dt, tol);

            energy.scalar(discrete_total_energy(&s, &p)?, oracle_energy(&s, &p)?, tol);

            let reference = random_reference(&mut rng);
            let t = rng.gen_range(0.0..1.0);
            rel.scalar(
                relative_energy(&s, &reference, &p, t)?,
                oracle_relative_energy(&s, &reference, &p, t)?,
                tol,
            );

            let phi_x = GridField::from_fn(mesh, |_, _| rng.gen_range(-1.0..1.0));
            let phi_y = GridField::from_fn(mesh, |_, _| rng.gen_range(-1.0..1.0));
            let (ka, kb) = capillary_pairings(&s.rho, &phi_x, &phi_y, &p)?;
            let ob = oracle_s_terms(&s.rho, &phi_x, &phi_y, &p)?;
            let oa = oracle_original_pairing(&s.rho, &phi_x, &phi_y, &p)?;
            s_terms.record((kb - ob).abs(), 1.0 + kb.abs(), &s_tol);
            identity.record((oa - ob).abs(), 1.0 + oa.abs(), tol);
            identity.record((ka - oa).abs(), 1.0 + oa.abs(), tol);
        }
    }
    Ok(vec![
        diffs, lap, cap, cont, full, energy, rel, s_terms, identity,
    ])
}
