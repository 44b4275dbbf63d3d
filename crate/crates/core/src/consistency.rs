//! Weak-form consistency residuals, the summation-by-parts form of the
//! capillary pairing, mesh restriction and the refinement study.

use crate::error::{NskError, Result};
use crate::mesh::{GridField, Mesh, State};
use crate::model::FluidParams;
use crate::operators::{
    dxb, dxc, dxf, dyb, dyc, dyf, integral, l1_norm, laplacian, norm_sq, shifted, Axis,
};
use crate::real::{compensated_sum, Real};
use crate::scheme::rhs_full;
use crate::timeloop::{integrate, TimeControls, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Sin,
    Cos,
}

/// Nonzero slot of a vector test function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    X,
    Y,
}

/// `theta(t) f_x(2 pi kx x) f_y(2 pi ky y)` with `theta = sin^2(pi t / T)`.
/// As a vector field it sits in the slot given by `component`; scalar
/// residuals ignore the component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestFunction<T> {
    pub kx: u32,
    pub ky: u32,
    pub phase_x: Phase,
    pub phase_y: Phase,
    pub component: Component,
    pub t_end: T,
}

fn mode<T: Real>(k: u32, phase: Phase, x: T) -> [T; 3] {
    let a = T::TAU() * T::lit(k as f64);
    let (s, c) = (a * x).sin_cos();
    match phase {
        Phase::Sin => [s, a * c, -a * a * s],
        Phase::Cos => [c, -a * s, -a * a * c],
    }
}

impl<T: Real> TestFunction<T> {
    pub fn scalar(kx: u32, ky: u32, phase_x: Phase, phase_y: Phase, t_end: T) -> Self {
        TestFunction {
            kx,
            ky,
            phase_x,
            phase_y,
            component: Component::X,
            t_end,
        }
    }

    pub fn with_component(mut self, component: Component) -> Self {
        self.component = component;
        self
    }

    /// Whether the spatial profile vanishes identically.
    pub fn is_zero(&self) -> bool {
        (self.kx == 0 && self.phase_x == Phase::Sin) || (self.ky == 0 && self.phase_y == Phase::Sin)
    }

    pub fn envelope(&self, t: T) -> T {
        let s = (T::PI() * t / self.t_end).sin();
        s * s
    }

    pub fn envelope_dt(&self, t: T) -> T {
        T::PI() / self.t_end * (T::TAU() * t / self.t_end).sin()
    }

    /// Spatial profile with its derivatives: `[f, fx, fy, fxx, fxy, fyy]`.
    pub fn profile(&self, x: T, y: T) -> [T; 6] {
        let [a, ad, add] = mode(self.kx, self.phase_x, x);
        let [b, bd, bdd] = mode(self.ky, self.phase_y, y);
        [a * b, ad * b, a * bd, add * b, ad * bd, a * bdd]
    }

    pub fn value(&self, x: T, y: T, t: T) -> T {
        self.envelope(t) * self.profile(x, y)[0]
    }

    /// `(phi_x, phi_y)` of the vector test function at cell centres.
    pub fn sample_vector(&self, mesh: Mesh<T>, t: T) -> (GridField<T>, GridField<T>) {
        let f = GridField::sample(mesh, |x, y| self.value(x, y, t));
        let z = GridField::zeros(mesh);
        match self.component {
            Component::X => (f, z),
            Component::Y => (z, f),
        }
    }
}

/// All nonzero modes with `kx, ky <= kmax`, both phases per axis and both
/// components.
pub fn battery<T: Real>(kmax: u32, t_end: T) -> Vec<TestFunction<T>> {
    let mut out = Vec::new();
    for component in [Component::X, Component::Y] {
        for kx in 0..=kmax {
            for ky in 0..=kmax {
                for px in [Phase::Sin, Phase::Cos] {
                    for py in [Phase::Sin, Phase::Cos] {
                        let f =
                            TestFunction::scalar(kx, ky, px, py, t_end).with_component(component);
                        if !f.is_zero() {
                            out.push(f);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Records whose relative `L1` jump exceeds `max_record_jump` make the time
/// quadrature unreliable and are rejected.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualSettings<T> {
    pub max_record_jump: T,
}

impl<T: Real> Default for ResidualSettings<T> {
    fn default() -> Self {
        ResidualSettings {
            max_record_jump: T::lit(0.05),
        }
    }
}

fn state_l1<T: Real>(s: &State<T>) -> T {
    l1_norm(&s.rho) + l1_norm(&s.mx) + l1_norm(&s.my)
}

fn state_l1_diff<T: Real>(a: &State<T>, b: &State<T>) -> T {
    l1_norm(&(&a.rho - &b.rho)) + l1_norm(&(&a.mx - &b.mx)) + l1_norm(&(&a.my - &b.my))
}

fn check_density<T: Real>(traj: &Trajectory<T>, settings: &ResidualSettings<T>) -> Result<()> {
    if traj.is_empty() {
        return Err(NskError::EmptyTrajectory);
    }
    for (k, w) in traj.states.windows(2).enumerate() {
        let jump = state_l1_diff(&w[0], &w[1]) / state_l1(&w[0]).max(T::min_positive_value());
        if jump > settings.max_record_jump {
            return Err(NskError::TrajectoryTooSparse {
                index: k,
                jump: jump.as_f64(),
                limit: settings.max_record_jump.as_f64(),
            });
        }
    }
    Ok(())
}

fn dot<T: Real>(a: &GridField<T>, b: &GridField<T>) -> T {
    let cells = T::lit(a.values().len() as f64);
    compensated_sum(a.values().iter().zip(b.values()).map(|(&x, &y)| x * y)) / cells
}

// Sampled spatial profile `[f, fx, fy, fxx, fxy, fyy]`.
struct Profile<T>([GridField<T>; 6]);

impl<T: Real> Profile<T> {
    fn new(phi: &TestFunction<T>, mesh: Mesh<T>) -> Self {
        let all = GridField::from_fn(mesh, |_, _| T::zero());
        let mut fields: [GridField<T>; 6] = std::array::from_fn(|_| all.clone());
        let mut vals: Vec<[T; 6]> = Vec::with_capacity(mesh.len());
        for j in 0..mesh.n() {
            for i in 0..mesh.m() {
                let (x, y) = mesh.cell_center(i, j);
                vals.push(phi.profile(x, y));
            }
        }
        for (c, f) in fields.iter_mut().enumerate() {
            *f = GridField::new(mesh, vals.iter().map(|v| v[c]).collect())
                .expect("profile sized to mesh");
        }
        Profile(fields)
    }
}

// Fields of one record needed by the residuals. `q` is the momentum flux
// tensor `rho u u + p I - mu Dc u + kappa (Dc rho Dc rho + |Dc rho|^2 / 2 I)`
// and `w = kappa rho Dc rho`.
struct RecordFields<T> {
    rho: GridField<T>,
    m: [GridField<T>; 2],
    q: [[GridField<T>; 2]; 2],
    w: [GridField<T>; 2],
}

impl<T: Real> RecordFields<T> {
    fn new(s: &State<T>, params: &FluidParams<T>) -> Result<Self> {
        let (u, v) = s.velocity()?;
        let mesh = *s.mesh();
        let half = T::lit(0.5);
        let (gx, gy) = (dxc(&s.rho), dyc(&s.rho));
        let grads = [[dxc(&u), dyc(&u)], [dxc(&v), dyc(&v)]];
        let vel = [&u, &v];
        let g = [&gx, &gy];
        let q = std::array::from_fn(|c| {
            std::array::from_fn(|b| {
                GridField::from_fn(mesh, |i, j| {
                    let r = s.rho.at(i, j);
                    let iso = if b == c {
                        params.pressure_unchecked(r)
                            + half * params.kappa * (gx.at(i, j).powi(2) + gy.at(i, j).powi(2))
                    } else {
                        T::zero()
                    };
                    r * vel[c].at(i, j) * vel[b].at(i, j) + iso - params.mu * grads[c][b].at(i, j)
                        + params.kappa * g[c].at(i, j) * g[b].at(i, j)
                })
            })
        });
        let w = [
            s.rho.zip_map(&gx, |r, d| params.kappa * r * d),
            s.rho.zip_map(&gy, |r, d| params.kappa * r * d),
        ];
        Ok(RecordFields {
            rho: s.rho.clone(),
            m: [s.mx.clone(), s.my.clone()],
            q,
            w,
        })
    }
}

// Per-record scalars for one test function, without the envelope:
// `pair = integral U . profile`, `flux = spatial weak-form term`,
// `rate = integral dU/dt . profile` (the latter only when available).
#[derive(Clone, Copy, Debug)]
struct RecordIntegrals<T> {
    pair: T,
    flux: T,
    rate: T,
}

fn mass_integrals<T: Real>(
    f: &RecordFields<T>,
    drho: Option<&GridField<T>>,
    p: &Profile<T>,
) -> RecordIntegrals<T> {
    let [prof, px, py, ..] = &p.0;
    RecordIntegrals {
        pair: dot(&f.rho, prof),
        flux: dot(&f.m[0], px) + dot(&f.m[1], py),
        rate: drho.map_or(T::zero(), |d| dot(d, prof)),
    }
}

fn momentum_integrals<T: Real>(
    f: &RecordFields<T>,
    dm: Option<[&GridField<T>; 2]>,
    p: &Profile<T>,
    component: Component,
) -> RecordIntegrals<T> {
    let [prof, px, py, pxx, pxy, pyy] = &p.0;
    let c = match component {
        Component::X => 0,
        Component::Y => 1,
    };
    // grad div of (phi, 0) is (phi_xx, phi_xy); of (0, phi) it is (phi_xy, phi_yy).
    let (gd_x, gd_y) = if c == 0 { (pxx, pxy) } else { (pxy, pyy) };
    RecordIntegrals {
        pair: dot(&f.m[c], prof),
        flux: dot(&f.q[c][0], px) + dot(&f.q[c][1], py) + dot(&f.w[0], gd_x) + dot(&f.w[1], gd_y),
        rate: dm.map_or(T::zero(), |d| dot(d[c], prof)),
    }
}

// Signed residual from per-record scalars: the time derivative is paired
// through exact envelope increments, the spatial term by the trapezoid rule.
fn signed_from<T: Real>(times: &[T], phi: &TestFunction<T>, rec: &[RecordIntegrals<T>]) -> T {
    let half = T::lit(0.5);
    let terms = times.windows(2).zip(rec.windows(2)).map(|(t, r)| {
        let (th0, th1) = (phi.envelope(t[0]), phi.envelope(t[1]));
        half * (r[0].pair + r[1].pair) * (th1 - th0)
            + half * (t[1] - t[0]) * (th0 * r[0].flux + th1 * r[1].flux)
    });
    compensated_sum(terms)
}

// `integral_t |r(t)|`, `r = theta (flux - rate)`, by the trapezoid rule over the
// records selected by `stride` (the last record always included).
fn sliced_from<T: Real>(
    times: &[T],
    phi: &TestFunction<T>,
    rec: &[RecordIntegrals<T>],
    stride: usize,
) -> T {
    let mut idx: Vec<usize> = (0..times.len()).step_by(stride).collect();
    if idx.last() != Some(&(times.len() - 1)) {
        idx.push(times.len() - 1);
    }
    let r = |k: usize| (phi.envelope(times[k]) * (rec[k].flux - rec[k].rate)).abs();
    let half = T::lit(0.5);
    compensated_sum(
        idx.windows(2)
            .map(|w| half * (times[w[1]] - times[w[0]]) * (r(w[0]) + r(w[1]))),
    )
}

fn record_fields<T: Real>(
    traj: &Trajectory<T>,
    params: &FluidParams<T>,
) -> Result<Vec<RecordFields<T>>> {
    traj.states
        .iter()
        .map(|s| RecordFields::new(s, params))
        .collect()
}

/// Signed mass residual
/// `int_0^T int rho d_t phi + rho u . grad phi` for the scalar test function.
pub fn weak_residual_mass<T: Real>(
    traj: &Trajectory<T>,
    phi: &TestFunction<T>,
    settings: &ResidualSettings<T>,
) -> Result<T> {
    check_density(traj, settings)?;
    let mesh = *traj.states[0].mesh();
    let prof = Profile::new(phi, mesh);
    let rec: Vec<_> = traj
        .states
        .iter()
        .map(|s| RecordIntegrals {
            pair: dot(&s.rho, &prof.0[0]),
            flux: dot(&s.mx, &prof.0[1]) + dot(&s.my, &prof.0[2]),
            rate: T::zero(),
        })
        .collect();
    Ok(signed_from(&traj.times, phi, &rec))
}

/// Signed momentum residual for the vector test function `phi`.
pub fn weak_residual_momentum<T: Real>(
    traj: &Trajectory<T>,
    phi: &TestFunction<T>,
    params: &FluidParams<T>,
    settings: &ResidualSettings<T>,
) -> Result<T> {
    check_density(traj, settings)?;
    let mesh = *traj.states[0].mesh();
    let prof = Profile::new(phi, mesh);
    let fields = record_fields(traj, params)?;
    let rec: Vec<_> = fields
        .iter()
        .map(|f| momentum_integrals(f, None, &prof, phi.component))
        .collect();
    Ok(signed_from(&traj.times, phi, &rec))
}

/// Residuals aggregated over a test battery.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatteryResiduals<T> {
    /// Max over the battery of `|signed mass residual|`.
    pub r1_signed: T,
    pub r2_signed: T,
    /// Max over the battery of `int_0^T |r(t)| dt`, with `r` the instantaneous
    /// defect obtained from the scheme's time derivative.
    pub r1_sliced: T,
    pub r2_sliced: T,
    /// Relative change of the sliced statistics when every other record is
    /// dropped; an estimate of the time-quadrature error.
    pub r1_quadrature: T,
    pub r2_quadrature: T,
}

/// Evaluates all residuals of `traj` over `tests`. The sliced variants pair
/// the defect pointwise in time against the right-hand side at each record.
pub fn battery_residuals<T: Real>(
    traj: &Trajectory<T>,
    tests: &[TestFunction<T>],
    params: &FluidParams<T>,
    settings: &ResidualSettings<T>,
) -> Result<BatteryResiduals<T>> {
    check_density(traj, settings)?;
    let mesh = *traj.states[0].mesh();
    let fields = record_fields(traj, params)?;
    let rates = traj
        .states
        .iter()
        .map(|s| rhs_full(s, params))
        .collect::<Result<Vec<_>>>()?;

    let mut out = BatteryResiduals {
        r1_signed: T::zero(),
        r2_signed: T::zero(),
        r1_sliced: T::zero(),
        r2_sliced: T::zero(),
        r1_quadrature: T::zero(),
        r2_quadrature: T::zero(),
    };
    let (mut r1_half, mut r2_half) = (T::zero(), T::zero());
    let times = &traj.times;
    for phi in tests {
        let prof = Profile::new(phi, mesh);
        let rec2: Vec<_> = fields
            .iter()
            .zip(&rates)
            .map(|(f, d)| momentum_integrals(f, Some([&d.dmx_dt, &d.dmy_dt]), &prof, phi.component))
            .collect();
        out.r2_signed = out.r2_signed.max(signed_from(times, phi, &rec2).abs());
        out.r2_sliced = out.r2_sliced.max(sliced_from(times, phi, &rec2, 1));
        r2_half = r2_half.max(sliced_from(times, phi, &rec2, 2));
        if phi.component == Component::X {
            let rec1: Vec<_> = fields
                .iter()
                .zip(&rates)
                .map(|(f, d)| mass_integrals(f, Some(&d.drho_dt), &prof))
                .collect();
            out.r1_signed = out.r1_signed.max(signed_from(times, phi, &rec1).abs());
            out.r1_sliced = out.r1_sliced.max(sliced_from(times, phi, &rec1, 1));
            r1_half = r1_half.max(sliced_from(times, phi, &rec1, 2));
        }
    }
    let rel = |full: T, half: T| {
        if full > T::zero() {
            (full - half).abs() / full
        } else {
            T::zero()
        }
    };
    out.r1_quadrature = rel(out.r1_sliced, r1_half);
    out.r2_quadrature = rel(out.r2_sliced, r2_half);
    Ok(out)
}

/// `(A, B)`: the capillary terms paired with the test field in the form the
/// scheme produces them, and `kappa integral (S1 + S2 + S3)` after discrete
/// integration by parts. The two agree to round-off.
pub fn capillary_pairings<T: Real>(
    rho: &GridField<T>,
    phi_x: &GridField<T>,
    phi_y: &GridField<T>,
    params: &FluidParams<T>,
) -> Result<(T, T)> {
    rho.mesh().check_same(phi_x.mesh())?;
    rho.mesh().check_same(phi_y.mesh())?;
    Ok((
        original_pairing(rho, phi_x, phi_y, params.kappa),
        s_terms(rho, phi_x, phi_y, params.kappa),
    ))
}

/// `|A - B|` for the superposition of `tests` at time `t`.
pub fn capillary_decomposition_defect<T: Real>(
    rho: &GridField<T>,
    tests: &[TestFunction<T>],
    params: &FluidParams<T>,
    t: T,
) -> T {
    let mesh = *rho.mesh();
    let (mut px, mut py) = (GridField::zeros(mesh), GridField::zeros(mesh));
    for phi in tests {
        let (a, b) = phi.sample_vector(mesh, t);
        px = px + a;
        py = py + b;
    }
    let a = original_pairing(rho, &px, &py, params.kappa);
    let b = s_terms(rho, &px, &py, params.kappa);
    (a - b).abs()
}

fn original_pairing<T: Real>(
    rho: &GridField<T>,
    px: &GridField<T>,
    py: &GridField<T>,
    kappa: T,
) -> T {
    let half = T::lit(0.5);
    let lap = laplacian(rho);
    let (sx, sy) = (shifted(rho, Axis::X, 1), shifted(rho, Axis::Y, 1));
    let (lx, ly) = (shifted(&lap, Axis::X, 1), shifted(&lap, Axis::Y, 1));
    let (fxx, fyy, fyx, fxy) = (dxf(px), dyf(py), dyf(px), dxf(py));
    let (rxp, ryp) = (dxf(rho), dyf(rho));
    let (rxm, rym) = (dxb(rho), dyb(rho));
    let (sxym, syxm) = (dyb(&sx), dxb(&sy));
    let (rxc, ryc) = (dxc(rho), dyc(rho));
    let density = GridField::from_fn(*rho.mesh(), |i, j| {
        let r = rho.at(i, j);
        let l = lap.at(i, j);
        (r * lx.at(i, j) + sx.at(i, j) * l) * half * fxx.at(i, j)
            + (r * ly.at(i, j) + sy.at(i, j) * l) * half * fyy.at(i, j)
            - half * ryp.at(i, j).powi(2) * fyy.at(i, j)
            - half * rxp.at(i, j).powi(2) * fxx.at(i, j)
            + half * rym.at(i, j) * sxym.at(i, j) * fxx.at(i, j)
            + half * rxm.at(i, j) * syxm.at(i, j) * fyy.at(i, j)
            - rxc.at(i, j) * ryp.at(i, j) * fyx.at(i, j)
            - ryc.at(i, j) * rxp.at(i, j) * fxy.at(i, j)
    });
    -kappa * integral(&density)
}

fn s_terms<T: Real>(rho: &GridField<T>, px: &GridField<T>, py: &GridField<T>, kappa: T) -> T {
    let half = T::lit(0.5);
    let (sx, sy) = (shifted(rho, Axis::X, 1), shifted(rho, Axis::Y, 1));
    let (fxx, fyy) = (dxf(px), dyf(py));
    let (rxp, ryp) = (dxf(rho), dyf(rho));
    let (rxm, rym) = (dxb(rho), dyb(rho));
    let (rxc, ryc) = (dxc(rho), dyc(rho));
    let (sxym, syxm) = (dyb(&sx), dxb(&sy));

    // S1
    let mix_x = dyb(&fxx);
    let mix_y = dxb(&fyy);
    let dd_x = dxb(&fxx);
    let dd_y = dyb(&fyy);
    // S2 shifted factors
    let fxx_s = shifted(&fxx, Axis::Y, -1);
    let fyy_s = shifted(&fyy, Axis::X, -1);
    // S3
    let (cxx, cyy) = (dxc(px), dyc(py));
    let (fyx, fxy) = (dyf(px), dxf(py));

    let density = GridField::from_fn(*rho.mesh(), |i, j| {
        let r = rho.at(i, j);
        let s1 = (r * sxym.at(i, j) + sx.at(i, j) * rym.at(i, j)) * half * mix_x.at(i, j)
            + (r * syxm.at(i, j) + sy.at(i, j) * rxm.at(i, j)) * half * mix_y.at(i, j)
            + r * rxc.at(i, j) * dd_x.at(i, j)
            + r * ryc.at(i, j) * dd_y.at(i, j);
        let s2 = half * rxp.at(i, j).powi(2) * fxx.at(i, j)
            + half * ryp.at(i, j).powi(2) * fyy.at(i, j)
            - half * rym.at(i, j) * sxym.at(i, j) * fxx.at(i, j)
            - half * rxm.at(i, j) * syxm.at(i, j) * fyy.at(i, j)
            + rym.at(i, j) * sxym.at(i, j) * fxx_s.at(i, j)
            + rxm.at(i, j) * syxm.at(i, j) * fyy_s.at(i, j);
        let s3 = rxp.at(i, j) * rxm.at(i, j) * cxx.at(i, j)
            + ryp.at(i, j) * rym.at(i, j) * cyy.at(i, j)
            + rxc.at(i, j) * ryp.at(i, j) * fyx.at(i, j)
            + ryc.at(i, j) * rxp.at(i, j) * fxy.at(i, j);
        s1 + s2 + s3
    });
    kappa * integral(&density)
}

/// `(max_k |D+ rho_k|_L2, (h sum_k dt_k |Lap rho_k|^2)^(1/2))` over the
/// records, the time sum by the trapezoid rule.
pub fn apriori_monitor<T: Real>(traj: &Trajectory<T>) -> (T, T) {
    let mut grad = T::zero();
    let mut laps = Vec::with_capacity(traj.len());
    for s in &traj.states {
        grad = grad.max((norm_sq(&dxf(&s.rho)) + norm_sq(&dyf(&s.rho))).sqrt());
        laps.push(norm_sq(&laplacian(&s.rho)));
    }
    let half = T::lit(0.5);
    let time_sum = compensated_sum(
        traj.times
            .windows(2)
            .zip(laps.windows(2))
            .map(|(t, l)| half * (t[1] - t[0]) * (l[0] + l[1])),
    );
    let h = traj.states.first().map_or(T::zero(), |s| s.mesh().h());
    (grad, (h * time_sum).sqrt())
}

fn factor(fine: usize, coarse: usize) -> Option<usize> {
    if fine == coarse {
        Some(1)
    } else if fine == 2 * coarse {
        Some(2)
    } else {
        None
    }
}

/// Exact cell averages of a fine field on a mesh coarser by a factor of 1 or
/// 2 per axis. Coarse cell `k` covers fine cell `2k` and half of each
/// neighbour, so a halved axis uses the weights `(1/4, 1/2, 1/4)`.
pub fn restrict<T: Real>(field: &GridField<T>, coarse: Mesh<T>) -> Result<GridField<T>> {
    let fine = *field.mesh();
    let (fx, fy) = match (factor(fine.m(), coarse.m()), factor(fine.n(), coarse.n())) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(NskError::MeshMismatch(
                fine.m(),
                fine.n(),
                coarse.m(),
                coarse.n(),
            ))
        }
    };
    let w1 = [(0isize, T::one())];
    let w2 = [(-1isize, T::lit(0.25)), (0, T::lit(0.5)), (1, T::lit(0.25))];
    let wx: &[(isize, T)] = if fx == 1 { &w1 } else { &w2 };
    let wy: &[(isize, T)] = if fy == 1 { &w1 } else { &w2 };
    Ok(GridField::from_fn(coarse, |i, j| {
        let (ci, cj) = ((i * fx) as isize, (j * fy) as isize);
        let mut acc = T::zero();
        for &(oy, ay) in wy {
            for &(ox, ax) in wx {
                acc = acc + ax * ay * field.get(ci + ox, cj + oy);
            }
        }
        acc
    }))
}

pub fn restrict_state<T: Real>(state: &State<T>, coarse: Mesh<T>) -> Result<State<T>> {
    State::new(
        restrict(&state.rho, coarse)?,
        restrict(&state.mx, coarse)?,
        restrict(&state.my, coarse)?,
    )
}

/// `(|R rho_fine - rho_coarse|_L1, |R m_fine - m_coarse|_L1)` with the
/// momentum norm summed over both components.
pub fn cauchy_errors<T: Real>(fine: &State<T>, coarse: &State<T>) -> Result<(T, T)> {
    let r = restrict_state(fine, *coarse.mesh())?;
    Ok((
        l1_norm(&(&r.rho - &coarse.rho)),
        l1_norm(&(&r.mx - &coarse.mx)) + l1_norm(&(&r.my - &coarse.my)),
    ))
}

/// Initial data that can be built on any mesh.
pub trait InitialData<T: Real>: Sync {
    fn build(&self, mesh: Mesh<T>) -> Result<State<T>>;
}

impl<T: Real, F: Fn(Mesh<T>) -> Result<State<T>> + Sync> InitialData<T> for F {
    fn build(&self, mesh: Mesh<T>) -> Result<State<T>> {
        self(mesh)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StudySettings<T> {
    pub battery_kmax: u32,
    pub residual: ResidualSettings<T>,
    /// Run the levels on separate threads.
    pub parallel: bool,
}

impl<T: Real> Default for StudySettings<T> {
    fn default() -> Self {
        StudySettings {
            battery_kmax: 2,
            residual: ResidualSettings::default(),
            parallel: true,
        }
    }
}

/// Per-level measurements of a refinement study. Pairwise columns
/// (`cauchy_*`, `order_*`) have one entry per consecutive pair of levels.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport<T> {
    pub levels: Vec<(usize, usize)>,
    pub h: Vec<T>,
    pub residual_r1: Vec<T>,
    pub residual_r2: Vec<T>,
    pub residual_r1_signed: Vec<T>,
    pub residual_r2_signed: Vec<T>,
    pub quadrature_r1: Vec<T>,
    pub quadrature_r2: Vec<T>,
    pub lambda_h: Vec<T>,
    pub apriori_grad: Vec<T>,
    pub apriori_lap: Vec<T>,
    pub steps: Vec<usize>,
    pub cauchy_rho: Vec<T>,
    pub cauchy_m: Vec<T>,
    pub order_r1: Vec<T>,
    pub order_r2: Vec<T>,
    pub order_cauchy_rho: Vec<T>,
    pub order_cauchy_m: Vec<T>,
}

/// `log2(v_k / v_{k+1})` for consecutive entries.
pub fn observed_orders<T: Real>(values: &[T]) -> Vec<T> {
    values.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn strictly_decreasing<T: Real>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

impl<T: Real> ConvergenceReport<T> {
    pub fn residuals_decrease(&self) -> bool {
        strictly_decreasing(&self.residual_r1) && strictly_decreasing(&self.residual_r2)
    }

    pub fn lambda_h_decreases(&self) -> bool {
        strictly_decreasing(&self.lambda_h)
    }

    pub fn apriori_lap_decreases(&self) -> bool {
        strictly_decreasing(&self.apriori_lap)
    }

    pub fn min_order(orders: &[T]) -> T {
        orders.iter().copied().fold(T::infinity(), T::min)
    }

    /// Smallest ratio of consecutive Cauchy errors, over both fields.
    pub fn min_cauchy_ratio(&self) -> T {
        self.cauchy_rho
            .windows(2)
            .chain(self.cauchy_m.windows(2))
            .map(|w| w[0] / w[1])
            .fold(T::infinity(), T::min)
    }
}

struct LevelResult<T> {
    residuals: BatteryResiduals<T>,
    lambda_h: T,
    apriori: (T, T),
    steps: usize,
    last: State<T>,
}

fn run_level<T: Real>(
    problem: &dyn InitialData<T>,
    params: &FluidParams<T>,
    controls: &TimeControls<T>,
    settings: &StudySettings<T>,
    (m, n): (usize, usize),
) -> Result<LevelResult<T>> {
    let wrap = |e: NskError| NskError::Level {
        m,
        n,
        source: Box::new(e),
    };
    let go = || -> Result<LevelResult<T>> {
        let mesh = Mesh::new(m, n)?;
        let initial = problem.build(mesh)?;
        let traj = integrate(&initial, params, controls)?;
        let tests = battery(settings.battery_kmax, traj.t_end());
        let residuals = battery_residuals(&traj, &tests, params, &settings.residual)?;
        Ok(LevelResult {
            residuals,
            lambda_h: traj.lambda_max_observed * mesh.h(),
            apriori: apriori_monitor(&traj),
            steps: traj.steps,
            last: traj
                .states
                .last()
                .cloned()
                .ok_or(NskError::EmptyTrajectory)?,
        })
    };
    go().map_err(wrap)
}

/// Runs `problem` on each level (coarse to fine, each axis doubling or
/// fixed) and collects residuals, Cauchy errors and monitors.
pub fn refinement_study<T: Real>(
    problem: &dyn InitialData<T>,
    params: &FluidParams<T>,
    controls: &TimeControls<T>,
    levels: &[(usize, usize)],
    settings: &StudySettings<T>,
) -> Result<ConvergenceReport<T>> {
    if levels.len() < 2 {
        return Err(NskError::InvalidParam(
            "a study needs at least two levels".into(),
        ));
    }
    for w in levels.windows(2) {
        let (a, b) = (w[0], w[1]);
        let nested = factor(b.0, a.0).is_some() && factor(b.1, a.1).is_some() && b != a;
        if !nested {
            return Err(NskError::InvalidParam(format!(
                "levels {}x{} and {}x{} are not nested by a factor of 2",
                a.0, a.1, b.0, b.1
            )));
        }
    }
    let results: Vec<Result<LevelResult<T>>> = if settings.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = levels
                .iter()
                .map(|&lv| scope.spawn(move || run_level(problem, params, controls, settings, lv)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("level thread panicked"))
                .collect()
        })
    } else {
        levels
            .iter()
            .map(|&lv| run_level(problem, params, controls, settings, lv))
            .collect()
    };
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut cauchy_rho = Vec::new();
    let mut cauchy_m = Vec::new();
    for w in results.windows(2) {
        let (r, m) = cauchy_errors(&w[1].last, &w[0].last)?;
        cauchy_rho.push(r);
        cauchy_m.push(m);
    }
    let col = |f: &dyn Fn(&LevelResult<T>) -> T| results.iter().map(f).collect::<Vec<T>>();
    let residual_r1 = col(&|r| r.residuals.r1_sliced);
    let residual_r2 = col(&|r| r.residuals.r2_sliced);
    Ok(ConvergenceReport {
        levels: levels.to_vec(),
        h: results.iter().map(|r| r.last.mesh().h()).collect(),
        order_r1: observed_orders(&residual_r1),
        order_r2: observed_orders(&residual_r2),
        order_cauchy_rho: observed_orders(&cauchy_rho),
        order_cauchy_m: observed_orders(&cauchy_m),
        residual_r1,
        residual_r2,
        residual_r1_signed: col(&|r| r.residuals.r1_signed),
        residual_r2_signed: col(&|r| r.residuals.r2_signed),
        quadrature_r1: col(&|r| r.residuals.r1_quadrature),
        quadrature_r2: col(&|r| r.residuals.r2_quadrature),
        lambda_h: col(&|r| r.lambda_h),
        apriori_grad: col(&|r| r.apriori.0),
        apriori_lap: col(&|r| r.apriori.1),
        steps: results.iter().map(|r| r.steps).collect(),
        cauchy_rho,
        cauchy_m,
    })
}
