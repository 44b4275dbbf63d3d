//! Conserved totals, the energy balance, uniform-bound monitors and the
//! relative energy against a smooth reference.

use crate::error::Result;
use crate::mesh::{GridField, State};
use crate::model::{discrete_total_energy, FluidParams};
use crate::operators::{dxc, dxf, dyc, dyf, integral, laplacian, norm_sq};
use crate::real::Real;
use crate::scheme::{lambda_max, rhs_with_lambda, SchemeRhs};

/// One record of a trajectory. Field order is the CSV column order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRow<T> {
    pub t: T,
    pub mass: T,
    pub mom_x: T,
    pub mom_y: T,
    pub energy: T,
    /// Chain-rule `dE/dt` of the semi-discrete flow.
    pub de_dt: T,
    /// `-mu |D+ u|^2 - kappa lam h |Lap rho|^2`.
    pub dissipation_bound: T,
    pub min_density: T,
    pub lambda: T,
    /// `|Dc rho|_L2`.
    pub grad_rho_l2: T,
    /// `|u|_L2`.
    pub u_l2: T,
}

impl<T: Real> DiagnosticsRow<T> {
    pub const COLUMNS: [&'static str; 11] = [
        "t",
        "mass",
        "mom_x",
        "mom_y",
        "energy",
        "dE_dt",
        "dissipation_bound",
        "min_density",
        "lambda",
        "grad_rho_l2",
        "u_l2",
    ];

    pub fn values(&self) -> [T; 11] {
        [
            self.t,
            self.mass,
            self.mom_x,
            self.mom_y,
            self.energy,
            self.de_dt,
            self.dissipation_bound,
            self.min_density,
            self.lambda,
            self.grad_rho_l2,
            self.u_l2,
        ]
    }

    /// Whether `dE/dt <= bound + tol (1 + |E|)`.
    pub fn dissipation_holds(&self, tol: T) -> bool {
        self.de_dt <= self.dissipation_bound + tol * (T::one() + self.energy.abs())
    }
}

/// `(integral rho, integral mx, integral my)`.
pub fn totals<T: Real>(state: &State<T>) -> (T, T, T) {
    (
        integral(&state.rho),
        integral(&state.mx),
        integral(&state.my),
    )
}

/// Chain-rule energy rate of `rhs` at `state` and the dissipation bound for
/// the same `lam`.
pub fn energy_rate_and_bound<T: Real>(
    state: &State<T>,
    rhs: &SchemeRhs<T>,
    params: &FluidParams<T>,
    lam: T,
) -> Result<(T, T)> {
    let mesh = state.mesh();
    for f in [&rhs.drho_dt, &rhs.dmx_dt, &rhs.dmy_dt] {
        mesh.check_same(f.mesh())?;
    }
    let (u, v) = state.velocity()?;
    let half = T::lit(0.5);
    let (gx, gy) = (dxf(&state.rho), dyf(&state.rho));
    let (rx, ry) = (dxf(&rhs.drho_dt), dyf(&rhs.drho_dt));
    let density = GridField::from_fn(*mesh, |i, j| {
        let r = state.rho.at(i, j);
        let (a, b) = (u.at(i, j), v.at(i, j));
        let coef = params.potential_derivative_unchecked(r) - half * (a * a + b * b);
        coef * rhs.drho_dt.at(i, j)
            + a * rhs.dmx_dt.at(i, j)
            + b * rhs.dmy_dt.at(i, j)
            + params.kappa * (gx.at(i, j) * rx.at(i, j) + gy.at(i, j) * ry.at(i, j))
    });
    let rate = integral(&density);

    let grad_u = norm_sq(&dxf(&u)) + norm_sq(&dyf(&u)) + norm_sq(&dxf(&v)) + norm_sq(&dyf(&v));
    let lap = norm_sq(&laplacian(&state.rho));
    let bound = -params.mu * grad_u - params.kappa * lam * mesh.h() * lap;
    Ok((rate, bound))
}

/// Full diagnostics of `state` at time `t`.
pub fn diagnostics_row<T: Real>(
    t: T,
    state: &State<T>,
    params: &FluidParams<T>,
) -> Result<DiagnosticsRow<T>> {
    let lam = lambda_max(state, params)?;
    let rhs = rhs_with_lambda(state, params, lam)?;
    diagnostics_row_with(t, state, &rhs, params, lam)
}

pub(crate) fn diagnostics_row_with<T: Real>(
    t: T,
    state: &State<T>,
    rhs: &SchemeRhs<T>,
    params: &FluidParams<T>,
    lam: T,
) -> Result<DiagnosticsRow<T>> {
    let (mass, mom_x, mom_y) = totals(state);
    let energy = discrete_total_energy(state, params)?;
    let (de_dt, dissipation_bound) = energy_rate_and_bound(state, rhs, params, lam)?;
    let (u, v) = state.velocity()?;
    let rho = &state.rho;
    Ok(DiagnosticsRow {
        t,
        mass,
        mom_x,
        mom_y,
        energy,
        de_dt,
        dissipation_bound,
        min_density: rho.min(),
        lambda: lam,
        grad_rho_l2: (norm_sq(&dxc(rho)) + norm_sq(&dyc(rho))).sqrt(),
        u_l2: (norm_sq(&u) + norm_sq(&v)).sqrt(),
    })
}

/// Norms bounded by the initial energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaNorms<T> {
    /// `|u|_L2^2`.
    pub u_sq: T,
    /// `integral rho^gamma`.
    pub rho_gamma: T,
    /// `|D+ rho|_L2^2`.
    pub grad_sq: T,
    pub min_density: T,
}

pub fn lemma_norms<T: Real>(state: &State<T>, params: &FluidParams<T>) -> Result<LemmaNorms<T>> {
    let (u, v) = state.velocity()?;
    let rho = &state.rho;
    Ok(LemmaNorms {
        u_sq: norm_sq(&u) + norm_sq(&v),
        rho_gamma: integral(&rho.map(|r| r.powf(params.gamma))),
        grad_sq: norm_sq(&dxf(rho)) + norm_sq(&dyf(rho)),
        min_density: rho.min(),
    })
}

/// Upper bounds for [`LemmaNorms`] from the initial energy `e0`:
/// `2 e0 / min rho`, `(gamma - 1) e0 / a` and `2 e0 / kappa` (infinite for
/// `kappa = 0`).
pub fn lemma_bounds<T: Real>(e0: T, min_density: T, params: &FluidParams<T>) -> LemmaNorms<T> {
    let two = T::lit(2.0);
    let grad = if params.kappa > T::zero() {
        two * e0 / params.kappa
    } else {
        T::infinity()
    };
    LemmaNorms {
        u_sq: two * e0 / min_density,
        rho_gamma: (params.gamma - T::one()) * e0 / params.a,
        grad_sq: grad,
        min_density,
    }
}

/// Checks every monitored norm of `state` against the bounds from `e0`.
/// Returns the name of the first violated bound.
pub fn check_lemma_bounds<T: Real>(
    state: &State<T>,
    e0: T,
    params: &FluidParams<T>,
) -> Result<Option<&'static str>> {
    let n = lemma_norms(state, params)?;
    let b = lemma_bounds(e0, n.min_density, params);
    Ok(if n.u_sq > b.u_sq {
        Some("velocity L2")
    } else if n.rho_gamma > b.rho_gamma {
        Some("density L^gamma")
    } else if n.grad_sq > b.grad_sq {
        Some("density gradient L2")
    } else {
        None
    })
}

/// Smooth reference pair `(rho, u)` on the torus, possibly time dependent.
pub trait SmoothReference<T: Real> {
    fn rho(&self, x: T, y: T, t: T) -> T;
    fn grad_rho(&self, x: T, y: T, t: T) -> (T, T);
    fn lap_rho(&self, x: T, y: T, t: T) -> T;
    fn velocity(&self, x: T, y: T, t: T) -> (T, T);
    /// `[[du/dx, du/dy], [dv/dx, dv/dy]]`.
    fn grad_velocity(&self, x: T, y: T, t: T) -> [[T; 2]; 2];
}

/// Steady trigonometric reference
/// `rho = rho_mean + rho_amp sin(2 pi kx x) sin(2 pi ky y)`,
/// `u = u_mean + u_amp sin(2 pi y)`, `v = v_mean + u_amp sin(2 pi x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigReference<T> {
    pub rho_mean: T,
    pub rho_amp: T,
    pub kx: u32,
    pub ky: u32,
    pub u_mean: T,
    pub v_mean: T,
    pub u_amp: T,
}

impl<T: Real> TrigReference<T> {
    pub fn constant(rho: T, u: T, v: T) -> Self {
        TrigReference {
            rho_mean: rho,
            rho_amp: T::zero(),
            kx: 1,
            ky: 1,
            u_mean: u,
            v_mean: v,
            u_amp: T::zero(),
        }
    }

    fn waves(&self) -> (T, T) {
        let tau = T::TAU();
        (tau * T::lit(self.kx as f64), tau * T::lit(self.ky as f64))
    }
}

impl<T: Real> SmoothReference<T> for TrigReference<T> {
    fn rho(&self, x: T, y: T, _t: T) -> T {
        let (a, b) = self.waves();
        self.rho_mean + self.rho_amp * (a * x).sin() * (b * y).sin()
    }

    fn grad_rho(&self, x: T, y: T, _t: T) -> (T, T) {
        let (a, b) = self.waves();
        (
            self.rho_amp * a * (a * x).cos() * (b * y).sin(),
            self.rho_amp * b * (a * x).sin() * (b * y).cos(),
        )
    }

    fn lap_rho(&self, x: T, y: T, _t: T) -> T {
        let (a, b) = self.waves();
        -(a * a + b * b) * self.rho_amp * (a * x).sin() * (b * y).sin()
    }

    fn velocity(&self, x: T, y: T, _t: T) -> (T, T) {
        let tau = T::TAU();
        (
            self.u_mean + self.u_amp * (tau * y).sin(),
            self.v_mean + self.u_amp * (tau * x).sin(),
        )
    }

    fn grad_velocity(&self, x: T, y: T, _t: T) -> [[T; 2]; 2] {
        let tau = T::TAU();
        let z = T::zero();
        [
            [z, self.u_amp * tau * (tau * y).cos()],
            [self.u_amp * tau * (tau * x).cos(), z],
        ]
    }
}

/// Integral of the relative energy density of `state` with respect to `reference`
/// at time `t`. The numerical density gradient is the central difference.
pub fn relative_energy<T: Real, R: SmoothReference<T> + ?Sized>(
    state: &State<T>,
    reference: &R,
    params: &FluidParams<T>,
    t: T,
) -> Result<T> {
    state.check_positivity(T::zero())?;
    let (u, v) = state.velocity()?;
    let mesh = *state.mesh();
    let (gx, gy) = (dxc(&state.rho), dyc(&state.rho));
    let half = T::lit(0.5);
    let kappa = params.kappa;
    let density = GridField::from_fn(mesh, |i, j| {
        let (x, y) = mesh.cell_center(i, j);
        let r = state.rho.at(i, j);
        let (a, b) = (u.at(i, j), v.at(i, j));
        let (p, q) = (gx.at(i, j), gy.at(i, j));

        let rr = reference.rho(x, y, t);
        let (ra, rb) = reference.velocity(x, y, t);
        let (rp, rq) = reference.grad_rho(x, y, t);
        let rlap = reference.lap_rho(x, y, t);

        let e = params.potential_unchecked(r)
            + half * r * (a * a + b * b)
            + half * kappa * (p * p + q * q);
        let e_ref = params.potential_unchecked(rr)
            + half * rr * (ra * ra + rb * rb)
            + half * kappa * (rp * rp + rq * rq);
        let dens_coef =
            params.potential_derivative_unchecked(rr) - half * (ra * ra + rb * rb) - kappa * rlap;
        e - e_ref - dens_coef * (r - rr) - ra * (r * a - rr * ra) - rb * (r * b - rr * rb)
    });
    Ok(integral(&density))
}
