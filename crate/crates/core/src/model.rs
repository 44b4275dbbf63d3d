//! Constitutive relations and the discrete NSK energy.

use crate::error::{NskError, Result};
use crate::mesh::State;
use crate::operators::{dxf, dyf, integral};
use crate::real::Real;

/// Physical and scheme constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidParams<T> {
    /// Pressure coefficient in `p = a rho^gamma`.
    pub a: T,
    /// Polytropic exponent, `> 1`.
    pub gamma: T,
    /// Viscosity; zero gives the Euler-Korteweg system.
    pub mu: T,
    /// Capillarity.
    pub kappa: T,
    /// Lower bound for the artificial-dissipation speed.
    pub delta: T,
    /// Densities at or below this abort the right-hand-side evaluation.
    pub rho_floor: T,
}

impl<T: Real> FluidParams<T> {
    pub const DEFAULT_DELTA: f64 = 1e-8;
    pub const DEFAULT_RHO_FLOOR: f64 = 1e-12;

    /// Validated parameters with default `delta` and `rho_floor`.
    pub fn new(a: T, gamma: T, mu: T, kappa: T) -> Result<Self> {
        FluidParams {
            a,
            gamma,
            mu,
            kappa,
            delta: T::lit(Self::DEFAULT_DELTA),
            rho_floor: T::lit(Self::DEFAULT_RHO_FLOOR),
        }
        .validated()
    }

    pub fn with_delta(mut self, delta: T) -> Result<Self> {
        self.delta = delta;
        self.validated()
    }

    pub fn with_rho_floor(mut self, floor: T) -> Result<Self> {
        self.rho_floor = floor;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let bad = |msg: &str| Err(NskError::InvalidParam(msg.to_string()));
        let finite = [
            self.a,
            self.gamma,
            self.mu,
            self.kappa,
            self.delta,
            self.rho_floor,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return bad("parameters must be finite");
        }
        if self.a <= T::zero() {
            return bad("a must be positive");
        }
        if self.gamma <= T::one() {
            return bad("gamma must exceed 1");
        }
        if self.mu < T::zero() {
            return bad("mu must be non-negative");
        }
        if self.kappa <= T::zero() {
            return bad("kappa must be positive");
        }
        if self.delta <= T::zero() {
            return bad("delta must be positive");
        }
        if self.rho_floor <= T::zero() {
            return bad("rho_floor must be positive");
        }
        Ok(self)
    }

    #[inline]
    fn check(what: &'static str, rho: T) -> Result<()> {
        if rho > T::zero() {
            Ok(())
        } else {
            Err(NskError::Domain {
                what,
                value: rho.as_f64(),
            })
        }
    }

    /// `p(rho) = a rho^gamma`.
    pub fn pressure(&self, rho: T) -> Result<T> {
        Self::check("pressure", rho)?;
        Ok(self.pressure_unchecked(rho))
    }

    /// `p'(rho) = a gamma rho^(gamma - 1)`.
    pub fn pressure_derivative(&self, rho: T) -> Result<T> {
        Self::check("pressure_derivative", rho)?;
        Ok(self.pressure_derivative_unchecked(rho))
    }

    /// Pressure potential `P(rho) = a rho^gamma / (gamma - 1)`, the solution of
    /// `P'(rho) rho - P(rho) = p(rho)` with `P(0) = 0`.
    pub fn potential(&self, rho: T) -> Result<T> {
        Self::check("potential", rho)?;
        Ok(self.potential_unchecked(rho))
    }

    /// `P'(rho) = a gamma rho^(gamma - 1) / (gamma - 1)`.
    pub fn potential_derivative(&self, rho: T) -> Result<T> {
        Self::check("potential_derivative", rho)?;
        Ok(self.potential_derivative_unchecked(rho))
    }

    #[inline]
    pub(crate) fn pressure_unchecked(&self, rho: T) -> T {
        self.a * rho.powf(self.gamma)
    }

    #[inline]
    pub(crate) fn pressure_derivative_unchecked(&self, rho: T) -> T {
        self.a * self.gamma * rho.powf(self.gamma - T::one())
    }

    #[inline]
    pub(crate) fn potential_unchecked(&self, rho: T) -> T {
        self.a * rho.powf(self.gamma) / (self.gamma - T::one())
    }

    #[inline]
    pub(crate) fn potential_derivative_unchecked(&self, rho: T) -> T {
        self.a * self.gamma * rho.powf(self.gamma - T::one()) / (self.gamma - T::one())
    }
}

/// Discrete total energy: integral of `rho |u|^2 / 2 + P(rho) + kappa/2 |D+ rho|^2`.
pub fn discrete_total_energy<T: Real>(state: &State<T>, params: &FluidParams<T>) -> Result<T> {
    let (u, v) = state.velocity()?;
    let half = T::lit(0.5);
    let gx = dxf(&state.rho);
    let gy = dyf(&state.rho);
    let density = crate::mesh::GridField::from_fn(*state.mesh(), |i, j| {
        let r = state.rho.at(i, j);
        let (ui, vi) = (u.at(i, j), v.at(i, j));
        let (a, b) = (gx.at(i, j), gy.at(i, j));
        half * r * (ui * ui + vi * vi)
            + params.potential_unchecked(r)
            + half * params.kappa * (a * a + b * b)
    });
    Ok(integral(&density))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{project_to_cell_averages, GridField, Mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn params(a: f64, gamma: f64) -> FluidParams<f64> {
        FluidParams::new(a, gamma, 0.0, 1e-3).unwrap()
    }

    #[test]
    fn pressure_values() {
        assert_eq!(params(1.0, 2.0).pressure(3.0).unwrap(), 9.0);
        assert_eq!(params(0.5, 1.4).pressure(1.0).unwrap(), 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = params(rng.gen_range(0.01..10.0), rng.gen_range(1.001..5.0));
            assert!(p.pressure(2.0).unwrap() > p.pressure(1.0).unwrap());
        }
        assert!(matches!(
            params(1.0, 2.0).pressure(0.0),
            Err(NskError::Domain { .. })
        ));
    }

    #[test]
    fn pressure_derivative_values() {
        let p = params(1.0, 2.0);
        assert_eq!(p.pressure_derivative(1.0).unwrap(), 2.0);
        assert!((p.pressure_derivative(1.1).unwrap() - 2.2).abs() < 1e-15);
        let q = params(0.7, 1.4);
        let (r, e) = (1.7, 1e-5);
        let fd = (q.pressure(r + e).unwrap() - q.pressure(r - e).unwrap()) / (2.0 * e);
        assert!((fd - q.pressure_derivative(r).unwrap()).abs() < 1e-9);
        assert!(p.pressure_derivative(-1.0).is_err());
    }

    #[test]
    fn potential_satisfies_defining_relation() {
        let p = params(1.0, 2.0);
        assert!((p.potential(2.0).unwrap() - 4.0).abs() < 1e-15);
        assert!((p.potential(1.0).unwrap() - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let q = params(rng.gen_range(0.1..5.0), rng.gen_range(1.05..4.0));
            let r: f64 = rng.gen_range(0.1..10.0);
            let pr = q.pressure(r).unwrap();
            // analytic derivative
            let lhs = q.potential_derivative(r).unwrap() * r - q.potential(r).unwrap();
            assert!((lhs - pr).abs() <= 1e-12 * pr);
            // finite-difference derivative
            let e = 1e-6 * r;
            let fd = (q.potential(r + e).unwrap() - q.potential(r - e).unwrap()) / (2.0 * e);
            assert!((fd * r - q.potential(r).unwrap() - pr).abs() <= 1e-7 * pr);
        }
    }

    #[test]
    fn potential_is_convex() {
        let q = params(1.3, 1.4);
        let h = 1e-3;
        let mut r = 0.05;
        while r < 10.0 {
            let d2 = q.potential(r + h).unwrap() - 2.0 * q.potential(r).unwrap()
                + q.potential(r - h).unwrap();
            assert!(d2 > 0.0, "second difference {d2} at {r}");
            r += 0.05;
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(FluidParams::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(FluidParams::new(0.0, 2.0, 0.0, 1.0).is_err());
        assert!(FluidParams::new(1.0, 2.0, -1.0, 1.0).is_err());
        assert!(FluidParams::new(1.0, 2.0, 0.0, 0.0).is_err());
        let p = FluidParams::new(1.0, 2.0, 0.0, 1.0).unwrap();
        assert!(p.with_delta(0.0).is_err());
        assert!(p.with_rho_floor(-1.0).is_err());
        match FluidParams::new(1.0, 1.0, 0.0, 1.0) {
            Err(NskError::InvalidParam(msg)) => assert_eq!(msg, "gamma must exceed 1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn energy_of_constant_states() {
        let mesh = Mesh::<f64>::new(6, 5).unwrap();
        let p = params(1.0, 2.0);
        let s = State::constant(mesh, 1.0, 0.0, 0.0);
        assert!((discrete_total_energy(&s, &p).unwrap() - 1.0).abs() < 1e-15);
        for kappa in [1e-3, 1.0, 50.0] {
            let q = FluidParams::new(1.0, 2.0, 0.0, kappa).unwrap();
            let s = State::constant(mesh, 2.0, 1.0, 0.0);
            assert!((discrete_total_energy(&s, &q).unwrap() - 5.0).abs() < 1e-14);
        }
    }

    #[test]
    fn energy_matches_direct_sum() {
        let mesh = Mesh::<f64>::new(16, 16).unwrap();
        let p = FluidParams::new(1.0, 2.0, 0.0, 0.3).unwrap();
        let rho = GridField::from_fn(mesh, |i, _| 1.0 + 0.1 * (2.0 * PI * i as f64 / 16.0).sin());
        let s = State::new(rho, GridField::zeros(mesh), GridField::zeros(mesh)).unwrap();
        let mut sum = 0.0;
        for j in 0..16isize {
            for i in 0..16isize {
                let r = s.rho.get(i, j);
                let gx = (s.rho.get(i + 1, j) - r) * 16.0;
                let gy = (s.rho.get(i, j + 1) - r) * 16.0;
                sum += r * r + 0.15 * (gx * gx + gy * gy);
            }
        }
        let want = sum / 256.0;
        let got = discrete_total_energy(&s, &p).unwrap();
        assert!((got - want).abs() <= 1e-13 * want);
    }

    #[test]
    fn energy_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mesh = Mesh::<f64>::new(8, 8).unwrap();
        for _ in 0..50 {
            let p = params(rng.gen_range(0.1..3.0), rng.gen_range(1.1..3.0));
            let rho = GridField::from_fn(mesh, |_, _| rng.gen_range(0.1..3.0));
            let mx = GridField::from_fn(mesh, |_, _| rng.gen_range(-2.0..2.0));
            let my = GridField::from_fn(mesh, |_, _| rng.gen_range(-2.0..2.0));
            let s = State::new(rho, mx, my).unwrap();
            assert!(discrete_total_energy(&s, &p).unwrap() >= 0.0);
        }
    }

    // Smooth pair: rho = 1 + 0.2 sin(2 pi x) cos(2 pi y), u = (0.3 cos(2 pi y), 0.1).
    fn continuum_energy(p: &FluidParams<f64>) -> f64 {
        // tensor Gauss on a 64x64 grid of panels, far finer than any test mesh
        let (nodes, weights) = (
            [-0.6f64.sqrt() / 2.0, 0.0, 0.6f64.sqrt() / 2.0],
            [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
        );
        let panels = 64;
        let hq = 1.0 / panels as f64;
        let tp = 2.0 * PI;
        let mut sum = 0.0;
        for pj in 0..panels {
            for pi in 0..panels {
                for (qy, wy) in nodes.iter().zip(weights) {
                    for (qx, wx) in nodes.iter().zip(weights) {
                        let x = (pi as f64 + 0.5 + qx) * hq;
                        let y = (pj as f64 + 0.5 + qy) * hq;
                        let r = 1.0 + 0.2 * (tp * x).sin() * (tp * y).cos();
                        let rx = 0.2 * tp * (tp * x).cos() * (tp * y).cos();
                        let ry = -0.2 * tp * (tp * x).sin() * (tp * y).sin();
                        let u = 0.3 * (tp * y).cos();
                        let v = 0.1;
                        let e = p.potential(r).unwrap()
                            + 0.5 * r * (u * u + v * v)
                            + 0.5 * p.kappa * (rx * rx + ry * ry);
                        sum += wx * wy * e;
                    }
                }
            }
        }
        sum * hq * hq
    }

    #[test]
    fn discrete_energy_converges_to_continuum() {
        let p = FluidParams::new(1.0, 1.4, 0.0, 0.05).unwrap();
        let exact = continuum_energy(&p);
        let tp = 2.0 * PI;
        let mut errs = Vec::new();
        for m in [16, 32, 64] {
            let mesh = Mesh::<f64>::new(m, m).unwrap();
            let rho =
                project_to_cell_averages(|x, y| 1.0 + 0.2 * (tp * x).sin() * (tp * y).cos(), mesh);
            let u = project_to_cell_averages(|_, y| 0.3 * (tp * y).cos(), mesh);
            let v = GridField::constant(mesh, 0.1);
            let s = State::new(rho.clone(), &rho * &u, &rho * &v).unwrap();
            errs.push((discrete_total_energy(&s, &p).unwrap() - exact).abs());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[2] < 1e-3 * exact);
    }
}
