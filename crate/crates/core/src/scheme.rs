//! Semi-discrete right-hand side of the finite-volume NSK scheme.
//!
//! The scheme is written as `-d/dt U = F(U)`; everything here stores the
//! time derivative `+d/dt U = -F(U)`. Every term is a periodic difference of
//! a cell-valued flux, so each component integrates to zero.

use crate::error::{NskError, Result};
use crate::mesh::{GridField, State};
use crate::model::FluidParams;
use crate::operators::{dxb, dxc, dxf, dyb, dyc, dyf, integral, laplacian, shifted, Axis};
use crate::real::Real;

/// `d/dt` of `(rho, rho u, rho v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeRhs<T> {
    pub drho_dt: GridField<T>,
    pub dmx_dt: GridField<T>,
    pub dmy_dt: GridField<T>,
}

impl<T: Real> SchemeRhs<T> {
    /// Integrals of the three components; all vanish up to round-off.
    pub fn totals(&self) -> (T, T, T) {
        (
            integral(&self.drho_dt),
            integral(&self.dmx_dt),
            integral(&self.dmy_dt),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.drho_dt.is_finite() && self.dmx_dt.is_finite() && self.dmy_dt.is_finite()
    }

    /// Views the derivative as a state-shaped increment.
    pub fn as_state(&self) -> State<T> {
        State {
            rho: self.drho_dt.clone(),
            mx: self.dmx_dt.clone(),
            my: self.dmy_dt.clone(),
        }
    }
}

/// Artificial-dissipation speed
/// `max(1/2 max_cells(|u| + sqrt(p'(rho))), delta)`.
pub fn lambda_max<T: Real>(state: &State<T>, params: &FluidParams<T>) -> Result<T> {
    let (u, v) = state.velocity()?;
    let mut top = T::neg_infinity();
    for k in 0..state.mesh().len() {
        let (a, b) = (u.values()[k], v.values()[k]);
        let c = params
            .pressure_derivative_unchecked(state.rho.values()[k])
            .sqrt();
        top = top.max((a * a + b * b).sqrt() + c);
    }
    Ok((T::lit(0.5) * top).max(params.delta))
}

/// Continuity component: `-(Dc_x(rho u) + Dc_y(rho v)) + h lam Lap(rho)`.
pub fn rhs_continuity<T: Real>(state: &State<T>, _params: &FluidParams<T>, lam: T) -> GridField<T> {
    let hl = state.mesh().h() * lam;
    let conv = dxc(&state.mx) + dyc(&state.my);
    laplacian(&state.rho).zip_map(&conv, |l, c| hl * l - c)
}

/// Korteweg force `(K_x, K_y)`, i.e. `kappa` times the conservative capillary
/// brackets. It enters `d/dt (rho u, rho v)` with a plus sign.
pub fn capillary_force<T: Real>(
    rho: &GridField<T>,
    params: &FluidParams<T>,
) -> (GridField<T>, GridField<T>) {
    let lap = laplacian(rho);
    (
        capillary_bracket(rho, &lap, Axis::X).scale(params.kappa),
        capillary_bracket(rho, &lap, Axis::Y).scale(params.kappa),
    )
}

// x-bracket:
//   D-x[(rho Lap rho(+x) + rho(+x) Lap rho) / 2] - 1/2 D-x[(D+x rho)^2]
//   + 1/2 D-x[D-y rho(+x) D-y rho] - D-y[Dc_x rho D+y rho]
// the y-bracket swaps the axes.
fn capillary_bracket<T: Real>(rho: &GridField<T>, lap: &GridField<T>, axis: Axis) -> GridField<T> {
    type Op<T> = fn(&GridField<T>) -> GridField<T>;
    type Ops<T> = (Op<T>, Op<T>, Op<T>, Op<T>, Op<T>);
    let (back_a, fwd_a, cen_a, back_b, fwd_b): Ops<T> = match axis {
        Axis::X => (dxb, dxf, dxc, dyb, dyf),
        Axis::Y => (dyb, dyf, dyc, dxb, dxf),
    };
    let half = T::lit(0.5);
    let rho_p = shifted(rho, axis, 1);
    let lap_p = shifted(lap, axis, 1);

    let product = (rho * &lap_p + &rho_p * lap).scale(half);
    let grad_sq = fwd_a(rho).map(|g| g * g);
    let cross = back_b(&rho_p) * back_b(rho);
    let mixed = cen_a(rho) * fwd_b(rho);

    let first = back_a(&product);
    let second = back_a(&grad_sq).scale(half);
    let third = back_a(&cross).scale(half);
    let fourth = back_b(&mixed);
    GridField::from_fn(*rho.mesh(), |i, j| {
        first.at(i, j) - second.at(i, j) + third.at(i, j) - fourth.at(i, j)
    })
}

/// Momentum components for a given `lam`, with the velocity precomputed.
fn rhs_momentum<T: Real>(
    state: &State<T>,
    u: &GridField<T>,
    v: &GridField<T>,
    params: &FluidParams<T>,
    lam: T,
) -> (GridField<T>, GridField<T>) {
    let hl = state.mesh().h() * lam;
    let p = state.rho.map(|r| params.pressure_unchecked(r));
    let (kx, ky) = capillary_force(&state.rho, params);

    let flux_uu = &state.mx * u;
    let flux_uv = &state.mx * v;
    let flux_vv = &state.my * v;
    let flux_vu = &state.my * u;

    let mut dmx = -(dxc(&flux_uu) + dyc(&flux_uv) + dxc(&p));
    let mut dmy = -(dyc(&flux_vv) + dxc(&flux_vu) + dyc(&p));
    if params.mu > T::zero() {
        dmx = dmx.axpy(params.mu, &laplacian(u));
        dmy = dmy.axpy(params.mu, &laplacian(v));
    }
    dmx = dmx.axpy(hl, &laplacian(&state.mx)) + kx;
    dmy = dmy.axpy(hl, &laplacian(&state.my)) + ky;
    (dmx, dmy)
}

/// Full right-hand side with `lambda` recomputed from `state`.
pub fn rhs_full<T: Real>(state: &State<T>, params: &FluidParams<T>) -> Result<SchemeRhs<T>> {
    state.check_positivity(params.rho_floor)?;
    let lam = lambda_max(state, params)?;
    rhs_with_lambda(state, params, lam)
}

/// Right-hand side with a caller-supplied (frozen) `lam`.
pub fn rhs_with_lambda<T: Real>(
    state: &State<T>,
    params: &FluidParams<T>,
    lam: T,
) -> Result<SchemeRhs<T>> {
    state.check_positivity(params.rho_floor)?;
    let (u, v) = state.velocity()?;
    let drho_dt = rhs_continuity(state, params, lam);
    let (dmx_dt, dmy_dt) = rhs_momentum(state, &u, &v, params, lam);
    let rhs = SchemeRhs {
        drho_dt,
        dmx_dt,
        dmy_dt,
    };
    if !rhs.is_finite() {
        return Err(NskError::NonFinite("rhs_full"));
    }
    Ok(rhs)
}
