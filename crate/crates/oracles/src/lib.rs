//! Naive per-cell reference formulas for the `nsk-core` kernels.
//!
//! Every stencil is written out with explicit periodic index arithmetic and
//! summed without compensation. Nothing here shares code with the kernels it
//! checks, and everything is restricted to small meshes.

use nsk_core::diagnostics::SmoothReference;
use nsk_core::mesh::{GridField, Mesh, State};
use nsk_core::model::FluidParams;
use nsk_core::operators::{Axis, DiffKind};
use nsk_core::scheme::SchemeRhs;
use nsk_core::NskError;

pub mod suite;

/// Largest mesh extent the oracles accept.
pub const MAX_EXTENT: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("oracle mesh {m}x{n} exceeds {limit}x{limit}")]
    MeshTooLarge { m: usize, n: usize, limit: usize },
    #[error(transparent)]
    Core(#[from] NskError),
}

pub type OracleResult<T> = Result<T, OracleError>;

/// Agreement thresholds: `|a - b| <= abs + rel * scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleTolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for OracleTolerance {
    fn default() -> Self {
        OracleTolerance {
            rel: 1e-12,
            abs: 1e-13,
        }
    }
}

impl OracleTolerance {
    pub fn new(rel: f64, abs: f64) -> Option<Self> {
        (rel > 0.0 && abs > 0.0).then_some(OracleTolerance { rel, abs })
    }

    pub fn scalars_agree(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.abs + self.rel * a.abs().max(b.abs())
    }

    /// Fields agree cellwise relative to the larger of their sup norms.
    pub fn fields_agree(&self, a: &GridField<f64>, b: &GridField<f64>) -> bool {
        let scale = a.max_abs().max(b.max_abs());
        max_abs_diff(a, b) <= self.abs + self.rel * scale
    }
}

pub fn max_abs_diff(a: &GridField<f64>, b: &GridField<f64>) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

fn check(mesh: &Mesh<f64>) -> OracleResult<()> {
    if mesh.m() > MAX_EXTENT || mesh.n() > MAX_EXTENT {
        return Err(OracleError::MeshTooLarge {
            m: mesh.m(),
            n: mesh.n(),
            limit: MAX_EXTENT,
        });
    }
    Ok(())
}

// Periodic read with explicit wrap-around.
fn v(f: &GridField<f64>, i: isize, j: isize) -> f64 {
    let m = f.mesh().m() as isize;
    let n = f.mesh().n() as isize;
    let ii = ((i % m) + m) % m;
    let jj = ((j % n) + n) % n;
    f.values()[(ii + m * jj) as usize]
}

fn build(mesh: Mesh<f64>, cell: impl Fn(isize, isize) -> f64) -> GridField<f64> {
    let mut out = Vec::new();
    for j in 0..mesh.n() as isize {
        for i in 0..mesh.m() as isize {
            out.push(cell(i, j));
        }
    }
    GridField::new(mesh, out).expect("one value per cell")
}

fn naive_mean(f: &GridField<f64>) -> f64 {
    let mut s = 0.0;
    for x in f.values() {
        s += x;
    }
    s / f.values().len() as f64
}

pub fn oracle_diff(f: &GridField<f64>, axis: Axis, kind: DiffKind) -> OracleResult<GridField<f64>> {
    check(f.mesh())?;
    let (hx, hy) = (f.mesh().hx(), f.mesh().hy());
    Ok(build(*f.mesh(), |i, j| match (axis, kind) {
        (Axis::X, DiffKind::Forward) => (v(f, i + 1, j) - v(f, i, j)) / hx,
        (Axis::X, DiffKind::Backward) => (v(f, i, j) - v(f, i - 1, j)) / hx,
        (Axis::X, DiffKind::Central) => (v(f, i + 1, j) - v(f, i - 1, j)) / (2.0 * hx),
        (Axis::Y, DiffKind::Forward) => (v(f, i, j + 1) - v(f, i, j)) / hy,
        (Axis::Y, DiffKind::Backward) => (v(f, i, j) - v(f, i, j - 1)) / hy,
        (Axis::Y, DiffKind::Central) => (v(f, i, j + 1) - v(f, i, j - 1)) / (2.0 * hy),
    }))
}

fn lap_at(f: &GridField<f64>, i: isize, j: isize) -> f64 {
    let (hx, hy) = (f.mesh().hx(), f.mesh().hy());
    (v(f, i + 1, j) - 2.0 * v(f, i, j) + v(f, i - 1, j)) / (hx * hx)
        + (v(f, i, j + 1) - 2.0 * v(f, i, j) + v(f, i, j - 1)) / (hy * hy)
}

pub fn oracle_laplacian(f: &GridField<f64>) -> OracleResult<GridField<f64>> {
    check(f.mesh())?;
    Ok(build(*f.mesh(), |i, j| lap_at(f, i, j)))
}

// Korteweg x-bracket at (i, j), every shift spelled out.
fn bracket_x(r: &GridField<f64>, i: isize, j: isize) -> f64 {
    let (hx, hy) = (r.mesh().hx(), r.mesh().hy());
    let l = |a, b| lap_at(r, a, b);
    let p = |a, b| v(r, a, b);

    let prod = |a: isize| (p(a, j) * l(a + 1, j) + p(a + 1, j) * l(a, j)) / 2.0;
    let first = (prod(i) - prod(i - 1)) / hx;

    let gsq = |a: isize| ((p(a + 1, j) - p(a, j)) / hx).powi(2);
    let second = 0.5 * (gsq(i) - gsq(i - 1)) / hx;

    let cross = |a: isize| ((p(a + 1, j) - p(a + 1, j - 1)) / hy) * ((p(a, j) - p(a, j - 1)) / hy);
    let third = 0.5 * (cross(i) - cross(i - 1)) / hx;

    let mixed =
        |b: isize| ((p(i + 1, b) - p(i - 1, b)) / (2.0 * hx)) * ((p(i, b + 1) - p(i, b)) / hy);
    let fourth = (mixed(j) - mixed(j - 1)) / hy;

    first - second + third - fourth
}

fn bracket_y(r: &GridField<f64>, i: isize, j: isize) -> f64 {
    let (hx, hy) = (r.mesh().hx(), r.mesh().hy());
    let l = |a, b| lap_at(r, a, b);
    let p = |a, b| v(r, a, b);

    let prod = |b: isize| (p(i, b) * l(i, b + 1) + p(i, b + 1) * l(i, b)) / 2.0;
    let first = (prod(j) - prod(j - 1)) / hy;

    let gsq = |b: isize| ((p(i, b + 1) - p(i, b)) / hy).powi(2);
    let second = 0.5 * (gsq(j) - gsq(j - 1)) / hy;

    let cross = |b: isize| ((p(i, b + 1) - p(i - 1, b + 1)) / hx) * ((p(i, b) - p(i - 1, b)) / hx);
    let third = 0.5 * (cross(j) - cross(j - 1)) / hy;

    let mixed =
        |a: isize| ((p(a, j + 1) - p(a, j - 1)) / (2.0 * hy)) * ((p(a + 1, j) - p(a, j)) / hx);
    let fourth = (mixed(i) - mixed(i - 1)) / hx;

    first - second + third - fourth
}

/// `(K_x, K_y)`, the Korteweg force entering the momentum rates.
pub fn oracle_capillary(
    rho: &GridField<f64>,
    params: &FluidParams<f64>,
) -> OracleResult<(GridField<f64>, GridField<f64>)> {
    check(rho.mesh())?;
    let k = params.kappa;
    Ok((
        build(*rho.mesh(), |i, j| k * bracket_x(rho, i, j)),
        build(*rho.mesh(), |i, j| k * bracket_y(rho, i, j)),
    ))
}

pub fn oracle_lambda(state: &State<f64>, params: &FluidParams<f64>) -> OracleResult<f64> {
    check(state.mesh())?;
    let mut top = f64::NEG_INFINITY;
    for k in 0..state.mesh().len() {
        let r = state.rho.values()[k];
        let (u, w) = (state.mx.values()[k] / r, state.my.values()[k] / r);
        let c = (params.a * params.gamma * r.powf(params.gamma - 1.0)).sqrt();
        top = top.max((u * u + w * w).sqrt() + c);
    }
    Ok((0.5 * top).max(params.delta))
}

pub fn oracle_rhs_continuity(state: &State<f64>, lam: f64) -> OracleResult<GridField<f64>> {
    check(state.mesh())?;
    let mesh = *state.mesh();
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let h = hx.max(hy);
    Ok(build(mesh, |i, j| {
        -(v(&state.mx, i + 1, j) - v(&state.mx, i - 1, j)) / (2.0 * hx)
            - (v(&state.my, i, j + 1) - v(&state.my, i, j - 1)) / (2.0 * hy)
            + h * lam * lap_at(&state.rho, i, j)
    }))
}

/// Full right-hand side with `lambda` computed from `state`.
pub fn oracle_rhs(state: &State<f64>, params: &FluidParams<f64>) -> OracleResult<SchemeRhs<f64>> {
    check(state.mesh())?;
    let lam = oracle_lambda(state, params)?;
    let mesh = *state.mesh();
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let h = hx.max(hy);
    let (r, mx, my) = (&state.rho, &state.mx, &state.my);
    let u = |i, j| v(mx, i, j) / v(r, i, j);
    let w = |i, j| v(my, i, j) / v(r, i, j);
    let p = |i, j| params.a * v(r, i, j).powf(params.gamma);
    let lap_of = |g: &dyn Fn(isize, isize) -> f64, i: isize, j: isize| {
        (g(i + 1, j) - 2.0 * g(i, j) + g(i - 1, j)) / (hx * hx)
            + (g(i, j + 1) - 2.0 * g(i, j) + g(i, j - 1)) / (hy * hy)
    };

    let dmx = build(mesh, |i, j| {
        let fx = |a, b| v(mx, a, b) * u(a, b);
        let fy = |a, b| v(mx, a, b) * w(a, b);
        -(fx(i + 1, j) - fx(i - 1, j)) / (2.0 * hx)
            - (fy(i, j + 1) - fy(i, j - 1)) / (2.0 * hy)
            - (p(i + 1, j) - p(i - 1, j)) / (2.0 * hx)
            + params.mu * lap_of(&u, i, j)
            + h * lam * lap_at(mx, i, j)
            + params.kappa * bracket_x(r, i, j)
    });
    let dmy = build(mesh, |i, j| {
        let fx = |a, b| v(my, a, b) * u(a, b);
        let fy = |a, b| v(my, a, b) * w(a, b);
        -(fx(i + 1, j) - fx(i - 1, j)) / (2.0 * hx)
            - (fy(i, j + 1) - fy(i, j - 1)) / (2.0 * hy)
            - (p(i, j + 1) - p(i, j - 1)) / (2.0 * hy)
            + params.mu * lap_of(&w, i, j)
            + h * lam * lap_at(my, i, j)
            + params.kappa * bracket_y(r, i, j)
    });
    Ok(SchemeRhs {
        drho_dt: oracle_rhs_continuity(state, lam)?,
        dmx_dt: dmx,
        dmy_dt: dmy,
    })
}

pub fn oracle_energy(state: &State<f64>, params: &FluidParams<f64>) -> OracleResult<f64> {
    check(state.mesh())?;
    let mesh = *state.mesh();
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let (r, mx, my) = (&state.rho, &state.mx, &state.my);
    let e = build(mesh, |i, j| {
        let d = v(r, i, j);
        let kinetic = 0.5 * (v(mx, i, j).powi(2) + v(my, i, j).powi(2)) / d;
        let internal = params.a * d.powf(params.gamma) / (params.gamma - 1.0);
        let gx = (v(r, i + 1, j) - d) / hx;
        let gy = (v(r, i, j + 1) - d) / hy;
        kinetic + internal + 0.5 * params.kappa * (gx * gx + gy * gy)
    });
    Ok(naive_mean(&e))
}

pub fn oracle_relative_energy(
    state: &State<f64>,
    reference: &dyn SmoothReference<f64>,
    params: &FluidParams<f64>,
    t: f64,
) -> OracleResult<f64> {
    check(state.mesh())?;
    let mesh = *state.mesh();
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let (r, mx, my) = (&state.rho, &state.mx, &state.my);
    let big_p = |d: f64| params.a * d.powf(params.gamma) / (params.gamma - 1.0);
    let dp = |d: f64| params.a * params.gamma * d.powf(params.gamma - 1.0) / (params.gamma - 1.0);
    let k = params.kappa;
    let e = build(mesh, |i, j| {
        let (x, y) = (i as f64 * hx, j as f64 * hy);
        let d = v(r, i, j);
        let (u, w) = (v(mx, i, j) / d, v(my, i, j) / d);
        let gx = (v(r, i + 1, j) - v(r, i - 1, j)) / (2.0 * hx);
        let gy = (v(r, i, j + 1) - v(r, i, j - 1)) / (2.0 * hy);
        let dr = reference.rho(x, y, t);
        let (ur, wr) = reference.velocity(x, y, t);
        let (gxr, gyr) = reference.grad_rho(x, y, t);
        let lr = reference.lap_rho(x, y, t);
        let here = big_p(d) + 0.5 * d * (u * u + w * w) + 0.5 * k * (gx * gx + gy * gy);
        let there = big_p(dr) + 0.5 * dr * (ur * ur + wr * wr) + 0.5 * k * (gxr * gxr + gyr * gyr);
        let lin_rho = (dp(dr) - 0.5 * (ur * ur + wr * wr) - k * lr) * (d - dr);
        let lin_m = ur * (d * u - dr * ur) + wr * (d * w - dr * wr);
        here - there - lin_rho - lin_m
    });
    Ok(naive_mean(&e))
}

/// `kappa integral (S1 + S2 + S3)`.
pub fn oracle_s_terms(
    rho: &GridField<f64>,
    phi_x: &GridField<f64>,
    phi_y: &GridField<f64>,
    params: &FluidParams<f64>,
) -> OracleResult<f64> {
    check(rho.mesh())?;
    let mesh = *rho.mesh();
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let r = |i, j| v(rho, i, j);
    let fx = |i, j| v(phi_x, i, j);
    let fy = |i, j| v(phi_y, i, j);
    // D+x phi_x and D+y phi_y at arbitrary cells.
    let ax = |i: isize, j: isize| (fx(i + 1, j) - fx(i, j)) / hx;
    let ay = |i: isize, j: isize| (fy(i, j + 1) - fy(i, j)) / hy;

    let density = build(mesh, |i, j| {
        let dxm = (r(i, j) - r(i - 1, j)) / hx;
        let dym = (r(i, j) - r(i, j - 1)) / hy;
        let dxp = (r(i + 1, j) - r(i, j)) / hx;
        let dyp = (r(i, j + 1) - r(i, j)) / hy;
        let dxc = (r(i + 1, j) - r(i - 1, j)) / (2.0 * hx);
        let dyc = (r(i, j + 1) - r(i, j - 1)) / (2.0 * hy);
        // D-y of rho(. + hx ex), D-x of rho(. + hy ey).
        let sx_dym = (r(i + 1, j) - r(i + 1, j - 1)) / hy;
        let sy_dxm = (r(i, j + 1) - r(i - 1, j + 1)) / hx;

        let mix_x = (ax(i, j) - ax(i, j - 1)) / hy;
        let mix_y = (ay(i, j) - ay(i - 1, j)) / hx;
        let dd_x = (ax(i, j) - ax(i - 1, j)) / hx;
        let dd_y = (ay(i, j) - ay(i, j - 1)) / hy;
        let s1 = (r(i, j) * sx_dym + r(i + 1, j) * dym) / 2.0 * mix_x
            + (r(i, j) * sy_dxm + r(i, j + 1) * dxm) / 2.0 * mix_y
            + r(i, j) * dxc * dd_x
            + r(i, j) * dyc * dd_y;

        let s2 = 0.5 * dxp * dxp * ax(i, j) + 0.5 * dyp * dyp * ay(i, j)
            - 0.5 * dym * sx_dym * ax(i, j)
            - 0.5 * dxm * sy_dxm * ay(i, j)
            + dym * sx_dym * ax(i, j - 1)
            + dxm * sy_dxm * ay(i - 1, j);

        let cx = (fx(i + 1, j) - fx(i - 1, j)) / (2.0 * hx);
        let cy = (fy(i, j + 1) - fy(i, j - 1)) / (2.0 * hy);
        let fyx = (fx(i, j + 1) - fx(i, j)) / hy;
        let fxy = (fy(i + 1, j) - fy(i, j)) / hx;
        let s3 = dxp * dxm * cx + dyp * dym * cy + dxc * dyp * fyx + dyc * dxp * fxy;
        s1 + s2 + s3
    });
    Ok(params.kappa * naive_mean(&density))
}

/// The capillary terms of the scheme paired with `(phi_x, phi_y)` through
/// forward differences of the test field.
pub fn oracle_original_pairing(
    rho: &GridField<f64>,
    phi_x: &GridField<f64>,
    phi_y: &GridField<f64>,
    params: &FluidParams<f64>,
) -> OracleResult<f64> {
    check(rho.mesh())?;
    let mesh = *rho.mesh();
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let r = |i, j| v(rho, i, j);
    let l = |i, j| lap_at(rho, i, j);
    let density = build(mesh, |i, j| {
        let fxx = (v(phi_x, i + 1, j) - v(phi_x, i, j)) / hx;
        let fyy = (v(phi_y, i, j + 1) - v(phi_y, i, j)) / hy;
        let fyx = (v(phi_x, i, j + 1) - v(phi_x, i, j)) / hy;
        let fxy = (v(phi_y, i + 1, j) - v(phi_y, i, j)) / hx;
        let dxp = (r(i + 1, j) - r(i, j)) / hx;
        let dyp = (r(i, j + 1) - r(i, j)) / hy;
        let dxm = (r(i, j) - r(i - 1, j)) / hx;
        let dym = (r(i, j) - r(i, j - 1)) / hy;
        let dxc = (r(i + 1, j) - r(i - 1, j)) / (2.0 * hx);
        let dyc = (r(i, j + 1) - r(i, j - 1)) / (2.0 * hy);
        let sx_dym = (r(i + 1, j) - r(i + 1, j - 1)) / hy;
        let sy_dxm = (r(i, j + 1) - r(i - 1, j + 1)) / hx;
        (r(i, j) * l(i + 1, j) + r(i + 1, j) * l(i, j)) / 2.0 * fxx
            + (r(i, j) * l(i, j + 1) + r(i, j + 1) * l(i, j)) / 2.0 * fyy
            - 0.5 * dyp * dyp * fyy
            - 0.5 * dxp * dxp * fxx
            + 0.5 * dym * sx_dym * fxx
            + 0.5 * dxm * sy_dxm * fyy
            - dxc * dyp * fyx
            - dyc * dxp * fxy
    });
    Ok(-params.kappa * naive_mean(&density))
}
