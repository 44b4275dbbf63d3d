//! Property suite behind `nsk verify`, and the benchmark fixtures it runs.

use nsk_core::consistency::capillary_pairings;
use nsk_core::diagnostics::{energy_rate_and_bound, totals};
use nsk_core::mesh::{GridField, Mesh, State};
use nsk_core::model::{discrete_total_energy, FluidParams};
use nsk_core::operators::{
    diff, inner_product, laplacian, norm_sq, second_difference, Axis, DiffKind,
};
use nsk_core::scheme::{lambda_max, rhs_full};
use nsk_core::timeloop::{integrate, TimeControls, Trajectory};
use nsk_core::Result;
use nsk_oracles::suite::{equivalence_suite, random_params, random_state};
use nsk_oracles::{OracleError, OracleTolerance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{project_initial, InitialCondition, RELATIVE_RHO_FLOOR};

pub const SBP_TOLERANCE: f64 = 1e-13;
pub const CONSERVATION_TOLERANCE: f64 = 1e-12;
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-12;
pub const DISSIPATION_TOLERANCE: f64 = 1e-9;
pub const ENERGY_RECORD_TOLERANCE: f64 = 1e-8;

/// Worst case of one property. `worst` is the largest observed defect
/// divided by the allowed one.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub worst: f64,
    pub detail: String,
}

impl SuiteReport {
    fn new(name: impl Into<String>) -> Self {
        SuiteReport {
            name: name.into(),
            cases: 0,
            worst: 0.0,
            detail: String::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.cases > 0 && self.worst <= 1.0
    }

    fn record(&mut self, defect: f64, allowed: f64) {
        self.cases += 1;
        let r = defect / allowed;
        self.worst = if r.is_nan() {
            f64::INFINITY
        } else {
            self.worst.max(r)
        };
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let mut s = format!(
            "{verdict} {}: {} cases, worst defect {:.3e} of allowed",
            self.name, self.cases, self.worst
        );
        if !self.detail.is_empty() {
            s.push_str("; ");
            s.push_str(&self.detail);
        }
        s
    }
}

fn rng_for(seed: u64, m: usize, n: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ ((m as u64) << 32) ^ ((n as u64) << 48))
}

fn random_field(mesh: Mesh<f64>, rng: &mut ChaCha8Rng) -> GridField<f64> {
    GridField::from_fn(mesh, |_, _| rng.gen_range(-1.0..1.0))
}

fn norm(f: &GridField<f64>) -> f64 {
    norm_sq(f).sqrt()
}

fn rel_field(a: &GridField<f64>, b: &GridField<f64>) -> f64 {
    let scale = a.max_abs().max(b.max_abs());
    let d = (a - b).max_abs();
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

/// The five operator identity families on `fields` random pairs per mesh.
pub fn sbp_identities(meshes: &[(usize, usize)], fields: usize, seed: u64) -> Result<SuiteReport> {
    let mut families = [
        ("summation by parts", 0.0f64),
        ("central antisymmetry", 0.0),
        ("laplacian symmetry and negativity", 0.0),
        ("one-sided vs central", 0.0),
        ("mixed differences commute", 0.0),
    ];
    let mut out = SuiteReport::new("SBP identities");
    for &(m, n) in meshes {
        let mesh = Mesh::new(m, n)?;
        let mut rng = rng_for(seed, m, n);
        for _ in 0..fields {
            let f = random_field(mesh, &mut rng);
            let g = random_field(mesh, &mut rng);
            let mut worst = [0.0f64; 5];
            for axis in [Axis::X, Axis::Y] {
                let fp = diff(&f, axis, DiffKind::Forward);
                let fm = diff(&f, axis, DiffKind::Backward);
                let fc = diff(&f, axis, DiffKind::Central);
                let gm = diff(&g, axis, DiffKind::Backward);
                let gc = diff(&g, axis, DiffKind::Central);

                let d = inner_product(&fp, &g)? + inner_product(&f, &gm)?;
                worst[0] = worst[0].max(d.abs() / (norm(&fp) * norm(&g) + norm(&f) * norm(&gm)));
                let d = inner_product(&fc, &g)? + inner_product(&f, &gc)?;
                worst[1] = worst[1].max(d.abs() / (norm(&fc) * norm(&g) + norm(&f) * norm(&gc)));

                let mean = (&fp + &fm).scale(0.5);
                worst[3] = worst[3].max(rel_field(&fc, &mean));
                let h = if axis == Axis::X {
                    mesh.hx()
                } else {
                    mesh.hy()
                };
                let one_sided = &fp - &fc;
                let half = second_difference(&f, axis).scale(0.5 * h);
                worst[3] = worst[3].max((&one_sided - &half).max_abs() / fp.max_abs());
            }
            let (lf, lg) = (laplacian(&f), laplacian(&g));
            let d = inner_product(&lf, &g)? - inner_product(&f, &lg)?;
            worst[2] = worst[2].max(d.abs() / (norm(&lf) * norm(&g) + norm(&f) * norm(&lg)));
            let grad = norm_sq(&diff(&f, Axis::X, DiffKind::Forward))
                + norm_sq(&diff(&f, Axis::Y, DiffKind::Forward));
            let d = inner_product(&lf, &f)? + grad;
            worst[2] = worst[2].max(d.abs() / grad);

            let a = diff(
                &diff(&f, Axis::X, DiffKind::Backward),
                Axis::Y,
                DiffKind::Forward,
            );
            let b = diff(
                &diff(&f, Axis::Y, DiffKind::Forward),
                Axis::X,
                DiffKind::Backward,
            );
            worst[4] = worst[4].max(rel_field(&a, &b));

            for (fam, w) in families.iter_mut().zip(worst) {
                fam.1 = fam.1.max(w);
                out.record(w, SBP_TOLERANCE);
            }
        }
    }
    out.detail = families
        .iter()
        .map(|(name, w)| format!("{name} {w:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(out)
}

/// Integrals of the three right-hand-side components on random states,
/// against `1e-12 (1 + max |component|)`.
pub fn rhs_conservation(
    meshes: &[(usize, usize)],
    states: usize,
    seed: u64,
) -> Result<SuiteReport> {
    let mut out = SuiteReport::new("conservation (random states)");
    let mut worst_integral = 0.0f64;
    for &(m, n) in meshes {
        let mesh = Mesh::new(m, n)?;
        let mut rng = rng_for(seed, m, n);
        for _ in 0..states {
            let s = random_state(mesh, &mut rng);
            let p = random_params(&mut rng);
            let rhs = rhs_full(&s, &p)?;
            let (a, b, c) = rhs.totals();
            for (total, f) in [(a, &rhs.drho_dt), (b, &rhs.dmx_dt), (c, &rhs.dmy_dt)] {
                worst_integral = worst_integral.max(total.abs());
                out.cases += 1;
                out.worst = out
                    .worst
                    .max(total.abs() / (CONSERVATION_TOLERANCE * (1.0 + f.max_abs())));
            }
        }
    }
    out.detail = format!("largest |integral| {worst_integral:.2e}");
    Ok(out)
}

/// Totals at the last record against the first. Momentum uses the initial
/// mass as its scale when the initial momentum is smaller.
pub fn trajectory_conservation(runs: &[FixtureRun]) -> SuiteReport {
    let mut out = SuiteReport::new("conservation (trajectories)");
    let mut worst_rel = 0.0f64;
    for run in runs {
        let (Some(first), Some(last)) = (run.trajectory.states.first(), run.trajectory.last())
        else {
            continue;
        };
        let (m0, px0, py0) = totals(first);
        let (m1, px1, py1) = totals(last);
        for (q0, q1, scale) in [
            (m0, m1, m0),
            (px0, px1, px0.abs().max(m0)),
            (py0, py1, py0.abs().max(m0)),
        ] {
            let rel = (q1 - q0).abs() / scale;
            worst_rel = worst_rel.max(rel);
            out.record(rel, CONSERVATION_TOLERANCE);
        }
    }
    out.detail = format!(
        "{} trajectories, largest relative drift {worst_rel:.2e}",
        runs.len()
    );
    out
}

/// `|A - B| <= 1e-12 (1 + |A|)` for random densities and test fields.
pub fn capillary_decomposition(
    meshes: &[(usize, usize)],
    pairs: usize,
    seed: u64,
) -> Result<SuiteReport> {
    let mut out = SuiteReport::new("capillary decomposition");
    let mut worst_abs = 0.0f64;
    for &(m, n) in meshes {
        let mesh = Mesh::new(m, n)?;
        let mut rng = rng_for(seed ^ 0x5eed, m, n);
        for _ in 0..pairs {
            let s = random_state(mesh, &mut rng);
            let p = random_params(&mut rng);
            let phi_x = random_field(mesh, &mut rng);
            let phi_y = random_field(mesh, &mut rng);
            let (a, b) = capillary_pairings(&s.rho, &phi_x, &phi_y, &p)?;
            worst_abs = worst_abs.max((a - b).abs());
            out.record((a - b).abs(), DECOMPOSITION_TOLERANCE * (1.0 + a.abs()));
        }
    }
    out.detail = format!("largest |A - B| {worst_abs:.2e}");
    Ok(out)
}

/// Chain-rule energy rate against the dissipation bound on random states.
pub fn energy_random(meshes: &[(usize, usize)], states: usize, seed: u64) -> Result<SuiteReport> {
    let mut out = SuiteReport::new("energy inequality (random states)");
    let mut margin = f64::INFINITY;
    for &(m, n) in meshes {
        let mesh = Mesh::new(m, n)?;
        let mut rng = rng_for(seed ^ 0xe4e7, m, n);
        for _ in 0..states {
            let s = random_state(mesh, &mut rng);
            let p = random_params(&mut rng);
            let lam = lambda_max(&s, &p)?;
            let rhs = rhs_full(&s, &p)?;
            let (rate, bound) = energy_rate_and_bound(&s, &rhs, &p, lam)?;
            let e = discrete_total_energy(&s, &p)?;
            let allowed = DISSIPATION_TOLERANCE * (1.0 + e.abs());
            margin = margin.min(bound - rate);
            out.record((rate - bound).max(0.0), allowed);
        }
    }
    out.detail = format!("smallest bound - rate {margin:.2e}");
    Ok(out)
}

/// Dissipation bound and recorded-energy monotonicity at every record.
pub fn energy_trajectories(runs: &[FixtureRun]) -> SuiteReport {
    let mut out = SuiteReport::new("energy inequality (trajectories)");
    let mut growth = 0.0f64;
    for run in runs {
        let rows = &run.trajectory.diagnostics;
        let Some(e0) = rows.first().map(|r| r.energy) else {
            continue;
        };
        for r in rows {
            out.record(
                (r.de_dt - r.dissipation_bound).max(0.0),
                DISSIPATION_TOLERANCE * (1.0 + r.energy.abs()),
            );
        }
        for w in rows.windows(2) {
            let inc = w[1].energy - w[0].energy;
            growth = growth.max(inc);
            out.record(inc.max(0.0), ENERGY_RECORD_TOLERANCE * (1.0 + e0.abs()));
        }
    }
    out.detail = format!("largest recorded energy increase {growth:.2e}");
    out
}

/// Kernel-versus-oracle agreement folded into one report.
pub fn oracle_equivalence(
    meshes: &[(usize, usize)],
    seeds: u64,
) -> Result<SuiteReport, OracleError> {
    let checks = equivalence_suite(meshes, seeds, &OracleTolerance::default())?;
    let mut out = SuiteReport::new("oracle equivalence");
    for c in &checks {
        out.cases += c.cases;
        out.worst = out.worst.max(c.worst);
    }
    let failing: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.name)
        .collect();
    let worst_rel = checks.iter().map(|c| c.worst_rel).fold(0.0, f64::max);
    out.detail = if failing.is_empty() {
        format!(
            "{} kernels, largest relative difference {worst_rel:.2e}",
            checks.len()
        )
    } else {
        format!("failing: {}", failing.join(", "))
    };
    Ok(out)
}

/// A named initial condition with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub initial: InitialCondition,
    pub params: FluidParams<f64>,
    pub t_end: f64,
}

#[derive(Clone, Debug)]
pub struct FixtureRun {
    pub name: &'static str,
    pub mesh: (usize, usize),
    pub params: FluidParams<f64>,
    pub trajectory: Trajectory<f64>,
}

fn fixture_params(
    a: f64,
    gamma: f64,
    mu: f64,
    kappa: f64,
    initial: &InitialCondition,
) -> FluidParams<f64> {
    FluidParams::new(a, gamma, mu, kappa)
        .and_then(|p| p.with_rho_floor(RELATIVE_RHO_FLOOR * initial.density_lower_bound()))
        .expect("fixture parameters are valid")
}

/// `rho = 1 + 0.1 sin(2 pi x) sin(2 pi y)` at rest with `mu = 0.01`,
/// `kappa = 1e-3`, `a = 1`, `gamma = 2` up to `t = 0.05`.
pub fn smooth_bump() -> Fixture {
    let initial = InitialCondition::SineBump {
        rho_mean: 1.0,
        amplitude: 0.1,
        kx: 1,
        ky: 1,
        u: 0.0,
        v: 0.0,
    };
    Fixture {
        name: "smooth bump",
        params: fixture_params(1.0, 2.0, 0.01, 1e-3, &initial),
        initial,
        t_end: 0.05,
    }
}

/// The smooth bump, a drifting anisotropic mode, and two counter-streaming
/// inviscid layers.
pub fn benchmark_fixtures() -> Vec<Fixture> {
    let drifting = InitialCondition::SineBump {
        rho_mean: 1.0,
        amplitude: 0.2,
        kx: 2,
        ky: 1,
        u: 0.5,
        v: -0.3,
    };
    let streaming = InitialCondition::Composite {
        parts: vec![
            InitialCondition::SineBump {
                rho_mean: 0.5,
                amplitude: 0.2,
                kx: 1,
                ky: 1,
                u: 0.5,
                v: 0.0,
            },
            InitialCondition::SineBump {
                rho_mean: 0.5,
                amplitude: -0.2,
                kx: 1,
                ky: 1,
                u: -0.5,
                v: 0.1,
            },
        ],
    };
    vec![
        smooth_bump(),
        Fixture {
            name: "drifting mode",
            params: fixture_params(1.0, 1.4, 0.02, 5e-4, &drifting),
            initial: drifting,
            t_end: 0.05,
        },
        Fixture {
            name: "counter-streaming layers",
            params: fixture_params(1.0, 2.0, 0.0, 1e-3, &streaming),
            initial: streaming,
            t_end: 0.05,
        },
    ]
}

impl Fixture {
    pub fn initial_state(&self, mesh: Mesh<f64>) -> Result<State<f64>> {
        project_initial(&self.initial, mesh)
    }

    /// Integrates on `mesh` recording every `record_every` steps.
    pub fn run(&self, mesh: (usize, usize), cfl: f64, record_every: usize) -> Result<FixtureRun> {
        let s0 = self.initial_state(Mesh::new(mesh.0, mesh.1)?)?;
        let controls = TimeControls::new(self.t_end)?
            .with_cfl(cfl)?
            .with_record_every(record_every)?;
        Ok(FixtureRun {
            name: self.name,
            mesh,
            params: self.params,
            trajectory: integrate(&s0, &self.params, &controls)?,
        })
    }
}

/// Sizes of a verify pass.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyScope {
    pub meshes: Vec<(usize, usize)>,
    pub random_cases: usize,
    pub trajectory_meshes: Vec<(usize, usize)>,
    pub seed: u64,
}

impl VerifyScope {
    /// 8x8 fixtures only.
    pub fn quick() -> Self {
        VerifyScope {
            meshes: vec![(8, 8)],
            random_cases: 20,
            trajectory_meshes: vec![(8, 8)],
            seed: 7,
        }
    }

    pub fn full() -> Self {
        VerifyScope {
            meshes: vec![(4, 4), (8, 8), (8, 16), (16, 16)],
            random_cases: 100,
            trajectory_meshes: vec![(16, 16), (32, 32)],
            seed: 7,
        }
    }
}

/// Runs the benchmark fixtures on every trajectory mesh.
pub fn fixture_runs(meshes: &[(usize, usize)]) -> Result<Vec<FixtureRun>> {
    let mut runs = Vec::new();
    for f in benchmark_fixtures() {
        for &mesh in meshes {
            runs.push(f.run(mesh, TimeControls::<f64>::DEFAULT_CFL, 1)?);
        }
    }
    Ok(runs)
}

/// Every suite, in a fixed order.
pub fn run_verify(scope: &VerifyScope) -> Result<Vec<SuiteReport>, OracleError> {
    let runs = fixture_runs(&scope.trajectory_meshes)?;
    let n = scope.random_cases;
    Ok(vec![
        sbp_identities(&scope.meshes, n, scope.seed)?,
        rhs_conservation(&scope.meshes, n, scope.seed)?,
        trajectory_conservation(&runs),
        capillary_decomposition(&scope.meshes, n, scope.seed)?,
        energy_random(&scope.meshes, n, scope.seed)?,
        energy_trajectories(&runs),
        oracle_equivalence(&scope.meshes, n as u64)?,
    ])
}
