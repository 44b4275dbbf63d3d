//! Explicit SSP-RK3 time stepping with stability-limited step size and
//! trajectory recording.

use std::cmp::Ordering;

use crate::diagnostics::{diagnostics_row_with, DiagnosticsRow};
use crate::error::{NskError, Result};
use crate::mesh::State;
use crate::model::FluidParams;
use crate::real::Real;
use crate::scheme::{lambda_max, rhs_with_lambda, SchemeRhs};

/// Safety divisors of the three step-size limits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityConstants<T> {
    pub convective: T,
    pub viscous: T,
    pub dispersive: T,
}

impl<T: Real> Default for StabilityConstants<T> {
    fn default() -> Self {
        StabilityConstants {
            convective: T::lit(2.0),
            viscous: T::lit(8.0),
            dispersive: T::lit(8.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeControls<T> {
    /// Safety factor in `(0, 1]`.
    pub cfl: T,
    pub t_end: T,
    /// Steps between records.
    pub record_every: usize,
    pub max_steps: usize,
    /// Evaluate `lambda` once per step instead of once per stage.
    pub freeze_lambda: bool,
    pub stability: StabilityConstants<T>,
    /// Allowed growth of recorded energy between records, relative to `1 + E0`.
    pub energy_tolerance: T,
    /// Allowed excess of `dE/dt` over the dissipation bound, relative to `1 + |E|`.
    pub dissipation_tolerance: T,
}

impl<T: Real> TimeControls<T> {
    pub const DEFAULT_CFL: f64 = 0.4;
    pub const DEFAULT_RECORD_EVERY: usize = 10;
    pub const DEFAULT_MAX_STEPS: usize = 10_000_000;

    pub fn new(t_end: T) -> Result<Self> {
        TimeControls {
            cfl: T::lit(Self::DEFAULT_CFL),
            t_end,
            record_every: Self::DEFAULT_RECORD_EVERY,
            max_steps: Self::DEFAULT_MAX_STEPS,
            freeze_lambda: false,
            stability: StabilityConstants::default(),
            energy_tolerance: T::lit(1e-8),
            dissipation_tolerance: T::lit(1e-9),
        }
        .validated()
    }

    pub fn with_cfl(mut self, cfl: T) -> Result<Self> {
        self.cfl = cfl;
        self.validated()
    }

    pub fn with_record_every(mut self, every: usize) -> Result<Self> {
        self.record_every = every;
        self.validated()
    }

    pub fn with_max_steps(mut self, steps: usize) -> Result<Self> {
        self.max_steps = steps;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let bad = |msg: &str| Err(NskError::InvalidParam(msg.to_string()));
        if !(self.cfl > T::zero() && self.cfl <= T::one()) {
            return bad("cfl must lie in (0, 1]");
        }
        if !(self.t_end > T::zero() && self.t_end.is_finite()) {
            return bad("t_end must be positive");
        }
        if self.record_every == 0 {
            return bad("record_every must be positive");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        let s = self.stability;
        if !(s.convective > T::zero() && s.viscous > T::zero() && s.dispersive > T::zero()) {
            return bad("stability constants must be positive");
        }
        if !(self.energy_tolerance >= T::zero() && self.dissipation_tolerance >= T::zero()) {
            return bad("tolerances must be nonnegative");
        }
        Ok(self)
    }
}

/// Recorded states, their times and diagnostics.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<State<T>>,
    pub diagnostics: Vec<DiagnosticsRow<T>>,
    /// Steps taken.
    pub steps: usize,
    /// Largest `lambda` seen at the start of any step.
    pub lambda_max_observed: T,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&State<T>> {
        self.states.last()
    }

    pub fn t_end(&self) -> T {
        self.times.last().copied().unwrap_or_else(T::zero)
    }

    /// Largest increase of the recorded energy between consecutive records.
    pub fn max_energy_increase(&self) -> T {
        self.diagnostics
            .windows(2)
            .fold(T::zero(), |acc, w| acc.max(w[1].energy - w[0].energy))
    }
}

/// Step-size limit
/// `cfl min(h/(2 lam), h^2/(8 (mu/rho_min + lam h)), rho_min h^3/(8 kappa rho_max))`.
pub fn stable_dt<T: Real>(state: &State<T>, params: &FluidParams<T>, cfl: T) -> Result<T> {
    stable_dt_with(state, params, cfl, &StabilityConstants::default())
}

pub fn stable_dt_with<T: Real>(
    state: &State<T>,
    params: &FluidParams<T>,
    cfl: T,
    constants: &StabilityConstants<T>,
) -> Result<T> {
    if !(cfl > T::zero() && cfl <= T::one()) {
        return Err(NskError::InvalidParam("cfl must lie in (0, 1]".into()));
    }
    state.check_positivity(params.rho_floor)?;
    let lam = lambda_max(state, params)?;
    Ok(cfl * limit(state, params, lam, constants))
}

fn limit<T: Real>(
    state: &State<T>,
    params: &FluidParams<T>,
    lam: T,
    c: &StabilityConstants<T>,
) -> T {
    let mesh = state.mesh();
    let h = mesh.h_min();
    let (rmin, rmax) = (state.rho.min(), state.rho.max());
    let convective = h / (c.convective * lam);
    let viscous = h * h / (c.viscous * (params.mu / rmin + lam * mesh.h()));
    let dispersive = if params.kappa > T::zero() {
        rmin * h * h * h / (c.dispersive * params.kappa * rmax)
    } else {
        T::infinity()
    };
    convective.min(viscous).min(dispersive)
}

/// One SSP-RK3 step with `lambda` recomputed at every stage.
pub fn step_ssprk3<T: Real>(state: &State<T>, dt: T, params: &FluidParams<T>) -> Result<State<T>> {
    step_with(state, dt, params, None)
}

/// One SSP-RK3 step; `lambda` is frozen at the given value when `Some`.
pub fn step_with<T: Real>(
    state: &State<T>,
    dt: T,
    params: &FluidParams<T>,
    frozen: Option<T>,
) -> Result<State<T>> {
    if !(dt > T::zero() && dt.is_finite()) {
        return Err(NskError::InvalidParam(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let rhs = |s: &State<T>| -> Result<SchemeRhs<T>> {
        s.check_positivity(params.rho_floor)?;
        let lam = match frozen {
            Some(l) => l,
            None => lambda_max(s, params)?,
        };
        rhs_with_lambda(s, params, lam)
    };
    let staged = |stage: u8| {
        move |e: NskError| NskError::Stage {
            stage,
            source: Box::new(e),
        }
    };
    let third = T::one() / T::lit(3.0);
    let quarter = T::lit(0.25);

    let f0 = rhs(state).map_err(staged(1))?;
    let s1 = state.combine(T::one(), &f0.as_state(), dt);
    let f1 = rhs(&s1).map_err(staged(2))?;
    let s2 = state.combine(
        T::one() - quarter,
        &s1.combine(T::one(), &f1.as_state(), dt),
        quarter,
    );
    let f2 = rhs(&s2).map_err(staged(3))?;
    let out = state.combine(
        third,
        &s2.combine(T::one(), &f2.as_state(), dt),
        T::one() - third,
    );
    out.check_positivity(params.rho_floor).map_err(staged(3))?;
    if !out.is_finite() {
        return Err(staged(3)(NskError::NonFinite("ssp-rk3 update")));
    }
    Ok(out)
}

/// Integrates from `t = 0` to `controls.t_end`, recording every
/// `record_every` steps and at both ends.
pub fn integrate<T: Real>(
    initial: &State<T>,
    params: &FluidParams<T>,
    controls: &TimeControls<T>,
) -> Result<Trajectory<T>> {
    let controls = controls.validated()?;
    let params = params.validated()?;
    let at = |t: T| {
        move |e: NskError| NskError::AtTime {
            t: t.as_f64(),
            source: Box::new(e),
        }
    };

    let zero = T::zero();
    initial
        .check_positivity(params.rho_floor)
        .map_err(at(zero))?;
    let mut lam = lambda_max(initial, &params).map_err(at(zero))?;
    let mut rhs = rhs_with_lambda(initial, &params, lam).map_err(at(zero))?;
    let row0 = diagnostics_row_with(zero, initial, &rhs, &params, lam).map_err(at(zero))?;
    if !row0.energy.is_finite() {
        return Err(at(zero)(NskError::NonFinite("initial energy")));
    }
    check_dissipation(&row0, &controls)?;
    let e0 = row0.energy;
    let growth = controls.energy_tolerance * (T::one() + e0.abs());

    let mut traj = Trajectory {
        times: vec![zero],
        states: vec![initial.clone()],
        diagnostics: vec![row0],
        steps: 0,
        lambda_max_observed: lam,
    };
    let mut state = initial.clone();
    let mut t = zero;
    let mut steps = 0usize;
    while t < controls.t_end {
        if steps == controls.max_steps {
            return Err(NskError::StepBudget {
                max_steps: controls.max_steps,
                t: t.as_f64(),
            });
        }
        let dt_stable = controls.cfl * limit(&state, &params, lam, &controls.stability);
        let remaining = controls.t_end - t;
        let last = dt_stable >= remaining;
        let dt = if last { remaining } else { dt_stable };
        let frozen = controls.freeze_lambda.then_some(lam);
        state = step_with(&state, dt, &params, frozen).map_err(at(t))?;
        t = if last { controls.t_end } else { t + dt };
        steps += 1;

        state.check_positivity(params.rho_floor).map_err(at(t))?;
        lam = lambda_max(&state, &params).map_err(at(t))?;
        traj.lambda_max_observed = traj.lambda_max_observed.max(lam);

        if steps.is_multiple_of(controls.record_every) || last {
            rhs = rhs_with_lambda(&state, &params, lam).map_err(at(t))?;
            let row = diagnostics_row_with(t, &state, &rhs, &params, lam).map_err(at(t))?;
            let previous = traj.diagnostics.last().map(|r| r.energy).unwrap_or(e0);
            // NaN energy also fails here.
            if matches!(
                row.energy.partial_cmp(&(previous + growth)),
                None | Some(Ordering::Greater)
            ) {
                return Err(NskError::EnergyGrowth {
                    t: t.as_f64(),
                    previous: previous.as_f64(),
                    current: row.energy.as_f64(),
                });
            }
            check_dissipation(&row, &controls)?;
            traj.times.push(t);
            traj.states.push(state.clone());
            traj.diagnostics.push(row);
        }
    }
    traj.steps = steps;
    Ok(traj)
}

fn check_dissipation<T: Real>(row: &DiagnosticsRow<T>, controls: &TimeControls<T>) -> Result<()> {
    if row.dissipation_holds(controls.dissipation_tolerance) {
        Ok(())
    } else {
        Err(NskError::DissipationViolated {
            t: row.t.as_f64(),
            rate: row.de_dt.as_f64(),
            bound: row.dissipation_bound.as_f64(),
        })
    }
}
