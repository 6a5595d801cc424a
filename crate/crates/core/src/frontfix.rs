//! Front-fixing solver on `y ∈ [0, 1]`.
//!
//! Each step moves the front with the kinetic law, freezes the geometry
//! `L = s - a` and the speed `s_t` at the new level, and solves the profile
//! equation
//!
//! ```text
//! ũ_t - k/L² ũ_yy - y s_t/L ũ_y = f
//! ```
//!
//! with backward Euler, centered diffusion and upwind advection. Both
//! boundary conditions enter through ghost nodes. The y = 1 condition is
//! linear and stays in the last row; the y = 0 condition is nonlinear in
//! the single boundary value. That value is found by scalar Newton after
//! rows 1..M are eliminated by superposition: `u = w + u_0 z`.
//!
//! The resulting matrices are M-matrices, so the discrete solution stays
//! within the comparison bounds without clipping.

use crate::error::{Error, Result};
use crate::landau::{to_fixed_with, FixedProfile, PhysicalProfile};
use crate::model::{validate_assumptions, InitialProfile, ProblemInstance};
use crate::result::{
    is_snapshot_step, step_count, Coupling, Mutation, RunResult, SchemeConfig, Snapshot,
    SolverKind,
};
use crate::tridiag::Tridiagonal;

/// Upper bound on front/profile sweeps in iterated coupling.
pub const MAX_COUPLING_SWEEPS: usize = 25;
/// Convergence threshold on the front position between sweeps.
pub const COUPLING_TOL: f64 = 1e-12;
/// Fraction of the initial gap `s0 - a` the front may travel per step.
pub const FRONT_STEP_FRACTION: f64 = 1e-2;

/// How often (in steps) the tridiagonal residual is sampled.
const RESIDUAL_SAMPLE_EVERY: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub s: f64,
    /// Speed used over the most recent step.
    pub s_t: f64,
    pub profile: FixedProfile,
}

/// Initial fixed-domain profile `ũ0(y) = u0((1 - y) a + y s0)`.
pub fn initial_profile(instance: &ProblemInstance, intervals: usize) -> Result<FixedProfile> {
    let a = instance.params.a;
    let s0 = instance.init.s0();
    match instance.init.u0() {
        InitialProfile::Samples { values } => to_fixed_with(
            &PhysicalProfile {
                values: values.clone(),
                s: s0,
            },
            a,
            intervals,
        ),
        closed => {
            if !(s0 > a) {
                return Err(Error::DegenerateDomain { a, s: s0 });
            }
            FixedProfile::new(
                (0..=intervals)
                    .map(|j| closed.eval_fraction(j as f64 / intervals as f64))
                    .collect(),
            )
        }
    }
}

/// Initial state at `t = 0`.
pub fn initial_state(instance: &ProblemInstance, cfg: &SchemeConfig) -> Result<SolverState> {
    let profile = initial_profile(instance, cfg.intervals)?;
    let s = instance.init.s0();
    let mut s_t = instance.front_speed(profile.values()[cfg.intervals], s);
    if let Some(f) = &cfg.forcing {
        s_t += f.front_law(0.0);
    }
    Ok(SolverState {
        t: 0.0,
        s,
        s_t,
        profile,
    })
}

/// Per-step outcome beyond the new state.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepInfo {
    pub newton_iterations: usize,
    pub bisection_fallback: bool,
    pub coupling_sweeps: usize,
    /// Relative residual of the last linear solve, when sampled.
    pub linear_residual: Option<f64>,
}

/// Reusable buffers for one run.
pub struct FrontFixStepper<'a> {
    instance: &'a ProblemInstance,
    cfg: &'a SchemeConfig,
    matrix: Tridiagonal,
    rhs: Vec<f64>,
    unit: Vec<f64>,
    w: Vec<f64>,
    z: Vec<f64>,
    scratch: Vec<f64>,
    next: Vec<f64>,
}

impl<'a> FrontFixStepper<'a> {
    pub fn new(instance: &'a ProblemInstance, cfg: &'a SchemeConfig) -> Self {
        let m = cfg.intervals;
        Self {
            instance,
            cfg,
            matrix: Tridiagonal::zeros(m),
            rhs: vec![0.0; m],
            unit: vec![0.0; m],
            w: vec![0.0; m],
            z: vec![0.0; m],
            scratch: Vec::with_capacity(m),
            next: vec![0.0; m + 1],
        }
    }

    /// Advances `state` by `dt`.
    pub fn step(&mut self, state: &mut SolverState, dt: f64, check_residual: bool) -> Result<StepInfo> {
        let inst = self.instance;
        let a = inst.params.a;
        let m = self.cfg.intervals;
        let t_new = state.t + dt;
        let forcing = self.cfg.forcing.clone();
        let law_source = |t: f64| forcing.as_ref().map_or(0.0, |f| f.front_law(t));

        let old = state.profile.values();
        let explicit_speed = inst.front_speed(old[m], state.s) + law_source(state.t);
        let mut s_new = state.s + dt * explicit_speed;
        if !(s_new > a) {
            return Err(Error::FrontCollapse { t: t_new, s: s_new, a });
        }
        let mut speed = explicit_speed;
        let mut info = StepInfo::default();

        match self.cfg.coupling {
            Coupling::ExplicitFront => {
                info = self.solve_profile(old, s_new - a, speed, t_new, dt, check_residual)?;
            }
            Coupling::IteratedCoupling => {
                for sweep in 1..=MAX_COUPLING_SWEEPS {
                    speed = (s_new - state.s) / dt;
                    let sweep_info =
                        self.solve_profile(old, s_new - a, speed, t_new, dt, check_residual)?;
                    info.newton_iterations = info.newton_iterations.max(sweep_info.newton_iterations);
                    info.bisection_fallback |= sweep_info.bisection_fallback;
                    info.linear_residual = sweep_info.linear_residual;
                    info.coupling_sweeps = sweep;
                    let s_next = state.s
                        + dt * (inst.front_speed(self.next[m], s_new) + law_source(t_new));
                    if !(s_next > a) {
                        return Err(Error::FrontCollapse { t: t_new, s: s_next, a });
                    }
                    let change = (s_next - s_new).abs();
                    s_new = s_next;
                    if change < COUPLING_TOL {
                        break;
                    }
                }
                speed = (s_new - state.s) / dt;
            }
        }

        state.t = t_new;
        state.s = s_new;
        state.s_t = speed;
        state.profile = FixedProfile::new(self.next.clone())?;
        Ok(info)
    }

    /// Solves for the profile at `t_new` with frozen geometry; result in `self.next`.
    fn solve_profile(
        &mut self,
        old: &[f64],
        len: f64,
        speed: f64,
        t_new: f64,
        dt: f64,
        check_residual: bool,
    ) -> Result<StepInfo> {
        let inst = self.instance;
        let p = &inst.params;
        let m = self.cfg.intervals;
        let dy = 1.0 / m as f64;
        let diff = p.k / (len * len) / (dy * dy);
        let inv_dt = 1.0 / dt;
        let sign = match self.cfg.mutation {
            Some(Mutation::FlipAdvection) => -1.0,
            None => 1.0,
        };
        let forcing = self.cfg.forcing.as_deref();
        let source = |y: f64| forcing.map_or(0.0, |f| f.interior(t_new, y));

        // rows 1..=m of the full system, stored at index j - 1
        for j in 1..m {
            let y = j as f64 * dy;
            let c = sign * y * speed / len / dy;
            let i = j - 1;
            self.matrix.lower[i] = -diff;
            self.matrix.upper[i] = -diff;
            self.matrix.diag[i] = inv_dt + 2.0 * diff + c.abs();
            if c >= 0.0 {
                self.matrix.upper[i] -= c;
            } else {
                self.matrix.lower[i] += c;
            }
            self.rhs[i] = old[j] * inv_dt + source(y);
        }
        let front_flux = forcing.map_or(0.0, |f| f.front_flux(t_new));
        let ghost = 2.0 / (len * dy) + sign * speed / p.k;
        let i = m - 1;
        self.matrix.lower[i] = -2.0 * diff;
        self.matrix.upper[i] = 0.0;
        self.matrix.diag[i] = inv_dt + 2.0 * diff + ghost * speed;
        self.rhs[i] = old[m] * inv_dt + source(1.0) - ghost * front_flux;
        if m == 1 {
            return Err(Error::Scheme("need at least two intervals".into()));
        }

        // u_0 enters row 1 only
        let couple = self.matrix.lower[0];
        self.matrix.lower[0] = 0.0;
        self.unit.fill(0.0);
        self.unit[0] = -couple;
        self.matrix.solve_into(&self.rhs, &mut self.w, &mut self.scratch);
        self.matrix.solve_into(&self.unit, &mut self.z, &mut self.scratch);

        // scalar boundary equation at y = 0
        let h = inst.moisture.eval(t_new);
        let henry = p.henry;
        let left_flux = forcing.map_or(0.0, |f| f.left_flux(t_new));
        let flux_gain = 2.0 / (len * dy);
        let lin = inv_dt + 2.0 * diff - 2.0 * diff * self.z[0];
        let rhs0 = old[0] * inv_dt + source(0.0) + 2.0 * diff * self.w[0];
        let residual = |u0: f64| lin * u0 - flux_gain * (inst.beta.eval(h - henry * u0) + left_flux) - rhs0;
        let slope = |u0: f64| lin + flux_gain * henry * inst.beta.derivative(h - henry * u0);

        let tol = self.cfg.boundary_newton_tol;
        let mut u0 = old[0];
        let mut info = StepInfo::default();
        let mut converged = false;
        let mut last_step;
        for it in 1..=self.cfg.boundary_newton_max_iter {
            let delta = residual(u0) / slope(u0);
            u0 -= delta;
            info.newton_iterations = it;
            last_step = delta.abs();
            if last_step <= tol * u0.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged || !u0.is_finite() {
            // β ∈ [0, k0] brackets the root of the increasing residual
            info.bisection_fallback = true;
            let k0 = inst.beta.plateau();
            let mut lo = (rhs0 + flux_gain * left_flux) / lin;
            let mut hi = (rhs0 + flux_gain * (left_flux + k0)) / lin;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if residual(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= tol * mid.abs().max(1.0) {
                    break;
                }
            }
            u0 = 0.5 * (lo + hi);
            last_step = hi - lo;
            if !(u0.is_finite() && last_step <= tol * u0.abs().max(1.0)) {
                return Err(Error::BoundarySolve {
                    t: t_new,
                    residual: last_step,
                });
            }
        }

        self.next[0] = u0;
        for j in 1..=m {
            self.next[j] = self.w[j - 1] + u0 * self.z[j - 1];
        }

        if check_residual {
            // full system residual with u_0 moved back into row 1
            let mut rhs = self.rhs.clone();
            rhs[0] -= couple * u0;
            info.linear_residual = Some(self.matrix.relative_residual(&self.next[1..], &rhs));
        }
        Ok(info)
    }
}

/// One step from `state`, allocating fresh buffers.
pub fn step(state: &SolverState, cfg: &SchemeConfig, instance: &ProblemInstance) -> Result<SolverState> {
    let a = instance.params.a;
    if !(state.s > a) {
        return Err(Error::DegenerateDomain { a, s: state.s });
    }
    if state.profile.intervals() != cfg.intervals {
        return Err(Error::Scheme(format!(
            "profile has {} intervals, config {}",
            state.profile.intervals(),
            cfg.intervals
        )));
    }
    let mut stepper = FrontFixStepper::new(instance, cfg);
    let mut next = state.clone();
    stepper.step(&mut next, cfg.dt, false)?;
    Ok(next)
}

/// Largest step that moves the front by at most 1% of the initial gap.
pub fn dt_cap(instance: &ProblemInstance) -> f64 {
    let speed = instance.speed_max();
    if speed > 0.0 {
        FRONT_STEP_FRACTION * (instance.init.s0() - instance.params.a) / speed
    } else {
        f64::INFINITY
    }
}

/// Validates the instance and runs to `T`.
pub fn run(instance: &ProblemInstance, cfg: &SchemeConfig) -> Result<RunResult> {
    let report = validate_assumptions(instance);
    if !report.all_pass() {
        return Err(Error::InvalidInstance(report));
    }
    simulate(instance, cfg)
}

/// Runs to `T` without checking the standing assumptions. Used for forced
/// (manufactured) problems and deliberately out-of-range experiments.
pub fn simulate(instance: &ProblemInstance, cfg: &SchemeConfig) -> Result<RunResult> {
    let horizon = instance.params.horizon;
    cfg.validate(horizon)?;
    let (steps, dt) = step_count(horizon, cfg.dt.min(dt_cap(instance)));
    let m = cfg.intervals;

    let mut state = initial_state(instance, cfg)?;
    let mut out = RunResult::with_capacity(SolverKind::Frontfix, m, dt, cfg.stride, steps);
    record(&mut out, instance, &state, 0, cfg.stride, steps);

    let mut stepper = FrontFixStepper::new(instance, cfg);
    for n in 1..=steps {
        let sample = n % RESIDUAL_SAMPLE_EVERY == 0 || n == steps;
        let info = stepper
            .step(&mut state, dt, sample)
            .map_err(|e| e.at_time(n as f64 * dt))?;
        // land exactly on the grid of time levels
        state.t = if n == steps { horizon } else { n as f64 * dt };
        let d = &mut out.diagnostics;
        d.max_newton_iterations = d.max_newton_iterations.max(info.newton_iterations);
        d.max_coupling_sweeps = d.max_coupling_sweeps.max(info.coupling_sweeps);
        d.bisection_fallbacks += info.bisection_fallback as usize;
        if let Some(r) = info.linear_residual {
            d.max_linear_residual = d.max_linear_residual.max(r);
        }
        record(&mut out, instance, &state, n, cfg.stride, steps);
    }
    Ok(out)
}

pub(crate) fn record(
    out: &mut RunResult,
    instance: &ProblemInstance,
    state: &SolverState,
    step: usize,
    stride: usize,
    last: usize,
) {
    let v = state.profile.values();
    let m = v.len() - 1;
    out.times.push(state.t);
    out.fronts.push(state.s);
    out.speeds.push(state.s_t);
    out.u_at_a.push(v[0]);
    out.u_at_s.push(v[m]);
    out.inflow.push(instance.inflow(state.t, v[0]));
    if is_snapshot_step(step, stride, last) {
        out.snapshots.push(Snapshot {
            step,
            t: state.t,
            s: state.s,
            values: v.to_vec(),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_ramp, InitialData, ModelParams, MoistureHistory};

    fn instance(h: f64, u0: Option<f64>, a0: f64) -> ProblemInstance {
        let phi = make_ramp(2.0, 1.0).unwrap();
        let s0 = 1.5;
        let value = u0.unwrap_or(phi.eval(s0));
        ProblemInstance {
            params: ModelParams {
                a: 1.0,
                a0,
                henry: 1.0,
                k: 1.0,
                horizon: 1.0,
            },
            beta: make_ramp(1.0, 1.0).unwrap(),
            init: InitialData::new(s0, InitialProfile::Constant { value }, &phi, 1.0).unwrap(),
            phi,
            moisture: MoistureHistory::constant(h, 1.0).unwrap(),
        }
    }

    #[test]
    fn stationary_step_is_a_fixed_point() {
        let inst = instance(0.84375, None, 1.0);
        let cfg = SchemeConfig::new(50, 1e-3);
        let s0 = initial_state(&inst, &cfg).unwrap();
        let s1 = step(&s0, &cfg, &inst).unwrap();
        assert_eq!(s1.s, s0.s);
        for (a, b) in s1.profile.values().iter().zip(s0.profile.values()) {
            assert!((a - b).abs() <= 1e-13);
        }
    }

    #[test]
    fn explicit_front_arithmetic() {
        // φ(s0) = 0.5 at s0 = r_φ / 2; profile value at the front 0.8
        let phi = make_ramp(2.0, 1.0).unwrap();
        let mut inst = instance(1.2, Some(0.8), 1.0);
        inst.init = InitialData::new(1.0, InitialProfile::Constant { value: 0.8 }, &phi, 0.5).unwrap();
        inst.params.a = 0.5;
        assert_eq!(phi.eval(1.0), 0.5);
        let cfg = SchemeConfig::new(16, 0.01);
        let st = initial_state(&inst, &cfg).unwrap();
        let next = step(&st, &cfg, &inst).unwrap();
        assert!((next.s - (1.0 + 0.003)).abs() < 1e-15);
    }

    #[test]
    fn zero_moisture_has_no_inflow_and_recedes() {
        // u0 rising to φ(s0) at the front: diffusion pulls u(s) below φ(s)
        let mut inst = instance(0.0, None, 1.0);
        let right = inst.phi.eval(1.5);
        inst.init = InitialData::new(1.5, InitialProfile::Affine { left: 0.6, right }, &inst.phi, 1.0)
            .unwrap();
        let cfg = SchemeConfig::new(40, 1e-3);
        let mut st = initial_state(&inst, &cfg).unwrap();
        let mut stepper = FrontFixStepper::new(&inst, &cfg);
        let mut prev = st.s;
        for _ in 0..200 {
            stepper.step(&mut st, 1e-3, false).unwrap();
            assert_eq!(inst.inflow(st.t, st.profile.values()[0]), 0.0);
            assert!(st.s <= prev + 1e-15);
            prev = st.s;
        }
        assert!(st.s < 1.5);
    }

    #[test]
    fn front_collapse_is_reported() {
        let inst = instance(1.2, Some(0.6), 1.0);
        let cfg = SchemeConfig::new(16, 0.01);
        let mut st = initial_state(&inst, &cfg).unwrap();
        st.s = 1.0 + 1e-6;
        st.profile = FixedProfile::new(vec![0.0; 17]).unwrap();
        assert!(matches!(step(&st, &cfg, &inst), Err(Error::FrontCollapse { .. })));
    }

    #[test]
    fn run_rejects_invalid_instance() {
        let inst = instance(0.84375, None, 1.0);
        let cfg = SchemeConfig::new(16, 0.01);
        assert!(matches!(run(&inst, &cfg), Err(Error::InvalidInstance(_))));
    }

    #[test]
    fn linear_solves_are_accurate() {
        let inst = instance(1.2, None, 1.0);
        let cfg = SchemeConfig::new(100, 1e-4);
        let r = run(&inst, &cfg).unwrap();
        assert!(r.diagnostics.max_linear_residual <= 1e-12, "{:?}", r.diagnostics);
        assert!(r.diagnostics.max_linear_residual > 0.0);
        assert_eq!(r.diagnostics.bisection_fallbacks, 0);
    }

    #[test]
    fn run_is_deterministic() {
        let inst = instance(1.2, Some(0.7), 1.0);
        let cfg = SchemeConfig::new(64, 1e-3).with_stride(7);
        let a = run(&inst, &cfg).unwrap();
        let b = run(&inst, &cfg).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.times.len(), 1001);
        assert_eq!(*a.times.last().unwrap(), 1.0);
        // 0, 7, ..., 994, plus the final step
        assert_eq!(a.snapshots.len(), 143 + 1);
        a.check_shape().unwrap();
    }
}
