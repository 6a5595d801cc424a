//! Front-tracking cross-check solver in the physical variables.
//!
//! Integrates `u_t = k u_zz` on a uniform grid over `[a, s(t)]` with forward
//! Euler, closes both ends with one-sided second-order flux conditions, and
//! re-interpolates linearly onto the new grid after each front move. It
//! shares no discretization with the front-fixing solver.

use crate::error::{Error, Result};
use crate::landau::{interp_uniform, PhysicalProfile};
use crate::model::{validate_assumptions, InitialProfile, ProblemInstance};
use crate::result::{is_snapshot_step, step_count, RunResult, SchemeConfig, Snapshot, SolverKind};

/// Explicit diffusion number bound `k dt / Δz²`.
pub const DIFFUSION_NUMBER: f64 = 0.4;
/// Sub-step count per outer step beyond which the configuration is rejected.
pub const MAX_SUBSTEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedState {
    pub t: f64,
    pub profile: PhysicalProfile,
}

impl TrackedState {
    pub fn s(&self) -> f64 {
        self.profile.s
    }
}

pub fn initial_tracked(instance: &ProblemInstance, intervals: usize) -> Result<TrackedState> {
    let a = instance.params.a;
    let s0 = instance.init.s0();
    if !(s0 > a) {
        return Err(Error::DegenerateDomain { a, s: s0 });
    }
    let u0 = instance.init.u0();
    let values = match u0 {
        InitialProfile::Samples { values } => (0..=intervals)
            .map(|j| interp_uniform(values, j as f64 / intervals as f64))
            .collect(),
        closed => (0..=intervals)
            .map(|j| closed.eval_fraction(j as f64 / intervals as f64))
            .collect(),
    };
    Ok(TrackedState {
        t: 0.0,
        profile: PhysicalProfile { values, s: s0 },
    })
}

/// Buffers and counters for one oracle run.
pub struct OracleStepper<'a> {
    instance: &'a ProblemInstance,
    newton_tol: f64,
    newton_max_iter: usize,
    work: Vec<f64>,
    pub max_substeps: usize,
    pub max_newton_iterations: usize,
    pub bisection_fallbacks: usize,
}

impl<'a> OracleStepper<'a> {
    pub fn new(instance: &'a ProblemInstance, cfg: &SchemeConfig) -> Self {
        Self {
            instance,
            newton_tol: cfg.boundary_newton_tol,
            newton_max_iter: cfg.boundary_newton_max_iter,
            work: Vec::new(),
            max_substeps: 0,
            max_newton_iterations: 0,
            bisection_fallbacks: 0,
        }
    }

    /// Advances by `dt` with as many explicit sub-steps as stability needs.
    /// Returns the front speed of the last sub-step.
    pub fn step(&mut self, state: &mut TrackedState, dt: f64) -> Result<f64> {
        let a = self.instance.params.a;
        let k = self.instance.params.k;
        let m = state.profile.intervals();
        let dz = (state.s() - a) / m as f64;
        let needed = (dt * k / (DIFFUSION_NUMBER * dz * dz)).ceil();
        if !(needed <= MAX_SUBSTEPS as f64) {
            return Err(Error::Scheme(format!(
                "explicit stability needs {needed} sub-steps per step (limit {MAX_SUBSTEPS})"
            )));
        }
        let subs = (needed as usize).max(1);
        self.max_substeps = self.max_substeps.max(subs);
        let tau = dt / subs as f64;
        let t0 = state.t;
        let mut speed = 0.0;
        for i in 0..subs {
            speed = self.substep(state, tau, t0 + (i + 1) as f64 * tau)?;
        }
        state.t = t0 + dt;
        Ok(speed)
    }

    fn substep(&mut self, state: &mut TrackedState, tau: f64, t_new: f64) -> Result<f64> {
        let inst = self.instance;
        let p = &inst.params;
        let a = p.a;
        let s = state.s();
        let u = &mut state.profile.values;
        let m = u.len() - 1;
        let dz = (s - a) / m as f64;

        // kinetic front law with the current front value
        let speed = inst.front_speed(u[m], s);
        let s_new = s + tau * speed;
        if !(s_new > a) {
            return Err(Error::FrontCollapse { t: t_new, s: s_new, a });
        }

        // interior diffusion on the current grid
        let lambda = p.k * tau / (dz * dz);
        self.work.clear();
        self.work.extend_from_slice(u);
        for j in 1..m {
            u[j] = self.work[j] + lambda * (self.work[j + 1] - 2.0 * self.work[j] + self.work[j - 1]);
        }

        // z = s: -k u_z = u s_t with a one-sided second-order derivative
        let g = p.k / (2.0 * dz);
        let denom = 3.0 * g + speed;
        if !(denom > 0.0) {
            return Err(Error::Scheme("front flux condition is singular; refine the grid".into()));
        }
        u[m] = g * (4.0 * u[m - 1] - u[m - 2]) / denom;

        // z = a: -k u_z = β(h - H u), nonlinear in u(a)
        let h = inst.moisture.eval(t_new);
        let henry = p.henry;
        let known = g * (4.0 * u[1] - u[2]);
        let residual = |v: f64| 3.0 * g * v - known - inst.beta.eval(h - henry * v);
        let slope = |v: f64| 3.0 * g + henry * inst.beta.derivative(h - henry * v);
        let mut v = u[0];
        let mut converged = false;
        for it in 1..=self.newton_max_iter {
            let d = residual(v) / slope(v);
            v -= d;
            self.max_newton_iterations = self.max_newton_iterations.max(it);
            if d.abs() <= self.newton_tol * v.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged || !v.is_finite() {
            self.bisection_fallbacks += 1;
            let mut lo = known / (3.0 * g);
            let mut hi = (known + inst.beta.plateau()) / (3.0 * g);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if residual(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= self.newton_tol * mid.abs().max(1.0) {
                    break;
                }
            }
            v = 0.5 * (lo + hi);
            if !(v.is_finite() && hi - lo <= self.newton_tol * v.abs().max(1.0)) {
                return Err(Error::BoundarySolve {
                    t: t_new,
                    residual: hi - lo,
                });
            }
        }
        u[0] = v;

        // remesh onto [a, s_new]; beyond the old front the front value is held
        self.work.clear();
        self.work.extend_from_slice(u);
        let ratio = (s_new - a) / (s - a);
        for (j, out) in u.iter_mut().enumerate().skip(1) {
            *out = interp_uniform(&self.work, j as f64 / m as f64 * ratio);
        }
        state.profile.s = s_new;
        Ok(speed)
    }
}

/// One outer step from `state`.
pub fn oracle_step(
    state: &TrackedState,
    cfg: &SchemeConfig,
    instance: &ProblemInstance,
) -> Result<TrackedState> {
    let mut next = state.clone();
    OracleStepper::new(instance, cfg).step(&mut next, cfg.dt)?;
    Ok(next)
}

/// Validates the instance and runs the oracle to `T`.
pub fn run_oracle(instance: &ProblemInstance, cfg: &SchemeConfig) -> Result<RunResult> {
    let report = validate_assumptions(instance);
    if !report.all_pass() {
        return Err(Error::InvalidInstance(report));
    }
    simulate_oracle(instance, cfg)
}

/// Oracle run without the assumption gate.
pub fn simulate_oracle(instance: &ProblemInstance, cfg: &SchemeConfig) -> Result<RunResult> {
    let horizon = instance.params.horizon;
    cfg.validate(horizon)?;
    if cfg.forcing.is_some() {
        return Err(Error::Scheme("the oracle does not support manufactured forcing".into()));
    }
    let (steps, dt) = step_count(horizon, cfg.dt.min(crate::frontfix::dt_cap(instance)));
    let m = cfg.intervals;
    let mut state = initial_tracked(instance, m)?;
    let mut out = RunResult::with_capacity(SolverKind::Oracle, m, dt, cfg.stride, steps);
    let initial_speed = instance.front_speed(state.profile.values[m], state.s());
    push(&mut out, instance, &state, initial_speed, 0, cfg.stride, steps);

    let mut stepper = OracleStepper::new(instance, cfg);
    for n in 1..=steps {
        let speed = stepper
            .step(&mut state, dt)
            .map_err(|e| e.at_time(n as f64 * dt))?;
        state.t = if n == steps { horizon } else { n as f64 * dt };
        push(&mut out, instance, &state, speed, n, cfg.stride, steps);
    }
    out.diagnostics.max_substeps = stepper.max_substeps;
    out.diagnostics.max_newton_iterations = stepper.max_newton_iterations;
    out.diagnostics.bisection_fallbacks = stepper.bisection_fallbacks;
    Ok(out)
}

fn push(
    out: &mut RunResult,
    instance: &ProblemInstance,
    state: &TrackedState,
    speed: f64,
    step: usize,
    stride: usize,
    last: usize,
) {
    let v = &state.profile.values;
    let m = v.len() - 1;
    out.times.push(state.t);
    out.fronts.push(state.s());
    out.speeds.push(speed);
    out.u_at_a.push(v[0]);
    out.u_at_s.push(v[m]);
    out.inflow.push(instance.inflow(state.t, v[0]));
    if is_snapshot_step(step, stride, last) {
        // uniform physical nodes over [a, s] are the fixed nodes y_j = j / M
        out.snapshots.push(Snapshot {
            step,
            t: state.t,
            s: state.s(),
            values: v.clone(),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_ramp, InitialData, ModelParams, MoistureHistory};
    use crate::verify::integral_identity_residual;

    const PHI_S0: f64 = 0.84375;

    fn instance(h: f64, u0: InitialProfile) -> ProblemInstance {
        let phi = make_ramp(2.0, 1.0).unwrap();
        ProblemInstance {
            params: ModelParams {
                a: 1.0,
                a0: 1.0,
                henry: 1.0,
                k: 1.0,
                horizon: 1.0,
            },
            beta: make_ramp(1.0, 1.0).unwrap(),
            init: InitialData::new(1.5, u0, &phi, 1.0).unwrap(),
            phi,
            moisture: MoistureHistory::constant(h, 1.0).unwrap(),
        }
    }

    fn stationary() -> ProblemInstance {
        instance(PHI_S0, InitialProfile::Constant { value: PHI_S0 })
    }

    #[test]
    fn stationary_step_is_a_fixed_point() {
        let inst = stationary();
        let cfg = SchemeConfig::new(50, 1e-3);
        let s0 = initial_tracked(&inst, 50).unwrap();
        let s1 = oracle_step(&s0, &cfg, &inst).unwrap();
        assert!((s1.s() - s0.s()).abs() <= 1e-12);
        for (a, b) in s1.profile.values.iter().zip(&s0.profile.values) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn stationary_run_keeps_the_front() {
        // the equilibrium instance fails the compatibility check, so no gate
        let r = simulate_oracle(&stationary(), &SchemeConfig::new(50, 1e-3)).unwrap();
        assert_eq!(r.times.len(), 1001);
        assert!(r.fronts.iter().all(|s| (s - 1.5).abs() <= 1e-10));
    }

    #[test]
    fn dry_run_recedes_monotonically() {
        let inst = instance(0.0, InitialProfile::Affine { left: 0.7, right: PHI_S0 });
        let r = simulate_oracle(&inst, &SchemeConfig::new(50, 1e-3)).unwrap();
        assert!(r.inflow.iter().all(|&q| q == 0.0));
        assert_eq!(r.speeds[0], 0.0);
        for w in r.fronts[1..].windows(2) {
            assert!(w[1] <= w[0], "front advanced: {} -> {}", w[0], w[1]);
        }
        assert!(r.final_front() < 1.5 - 1e-3);
        // without inflow the mass is conserved up to the discretization error
        assert!(integral_identity_residual(&r, 1.0).abs() < 1e-3);
    }

    #[test]
    fn growth_stays_below_the_bound() {
        let inst = instance(1.2, InitialProfile::Constant { value: PHI_S0 });
        let r = run_oracle(&inst, &SchemeConfig::new(50, 1e-3)).unwrap();
        assert!(r.final_front() > 1.5);
        let bound = inst.front_max();
        assert!(r.fronts.iter().all(|&s| s <= bound));
        assert!(r.diagnostics.max_substeps >= 1);
    }

    #[test]
    fn mass_identity_residual_shrinks_under_refinement() {
        let inst = instance(1.2, InitialProfile::Constant { value: PHI_S0 });
        // coarser pairs are still pre-asymptotic (ratio 1.4 at M = 25)
        let res: Vec<f64> = [(100, 1e-3, 20), (200, 5e-4, 40), (400, 2.5e-4, 80)]
            .iter()
            .map(|&(m, dt, stride)| {
                let cfg = SchemeConfig::new(m, dt).with_stride(stride);
                integral_identity_residual(&simulate_oracle(&inst, &cfg).unwrap(), 1.0).abs()
            })
            .collect();
        assert!(res[0] / res[1] >= 1.7 && res[1] / res[2] >= 1.7, "{res:?}");
    }

    #[test]
    fn too_many_substeps_is_a_scheme_error() {
        let inst = instance(1.2, InitialProfile::Constant { value: PHI_S0 });
        let err = simulate_oracle(&inst, &SchemeConfig::new(20_000, 1e-3)).unwrap_err();
        assert!(matches!(err, Error::Scheme(ref m) if m.contains("sub-steps")), "{err}");
    }

    #[test]
    fn invalid_instance_is_gated() {
        let inst = stationary();
        assert!(matches!(
            run_oracle(&inst, &SchemeConfig::new(50, 1e-3)),
            Err(Error::InvalidInstance(_))
        ));
    }
}
