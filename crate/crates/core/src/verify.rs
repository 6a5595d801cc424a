//! Audits a [`RunResult`] against the proven bounds and discrete residuals of
//! the defining equations.
//!
//! Each check reads a distinct part of the result so a fault in one record
//! is attributed to one check:
//!
//! | check                 | reads                                |
//! |-----------------------|--------------------------------------|
//! | `check_bounds`        | snapshots, `u_at_a`, `u_at_s`        |
//! | `check_front_lower`   | `fronts`                             |
//! | `check_front_upper`   | `fronts`                             |
//! | `check_front_speed`   | `speeds`                             |
//! | `check_mass_balance`  | snapshots, `inflow`                  |
//! | `check_residuals`     | snapshots                            |
//!
//! Checks never mutate the result.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::landau::interp_uniform;
use crate::model::{compute_sstar, ProblemInstance};
use crate::result::{RunResult, Snapshot, SolverKind};

/// Bound tolerance for the implicit front-fixing scheme.
pub const FRONTFIX_BOUND_TOL: f64 = 1e-8;
/// Bound tolerance for the explicit remeshed oracle.
pub const ORACLE_BOUND_TOL: f64 = 1e-6;
/// Tolerance on `s >= s*`.
pub const FRONT_LOWER_TOL: f64 = 1e-6;
/// Tolerance on the front growth and speed bounds.
pub const FRONT_EXACT_TOL: f64 = 1e-10;
/// Largest accepted mass-balance residual per snapshot interval, as a
/// fraction of the maximal inflow `k0 Δt`.
pub const MASS_RATE_TOL: f64 = 1e-2;
/// Largest accepted normalized equation residual.
pub const RESIDUAL_TOL: f64 = 0.1;
/// Minimal residual reduction per joint halving of `(dt, Δy)`.
pub const REFINEMENT_RATIO: f64 = 1.7;
/// Multiple of machine epsilon below which a stencil output is rounding noise.
pub const ROUNDING_FACTOR: f64 = 64.0;
/// Largest relative change of the maximal energy between refinement levels.
pub const ENERGY_STABILITY_TOL: f64 = 0.1;
/// Residuals are sampled on snapshot intervals starting after this fraction
/// of the horizon, away from the initial layer.
pub const RESIDUAL_WINDOW_START: f64 = 0.25;

pub const CHECK_NAMES: [&str; 6] = [
    "check_bounds",
    "check_front_lower",
    "check_front_upper",
    "check_front_speed",
    "check_mass_balance",
    "check_residuals",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub bounds: f64,
    pub front_lower: f64,
    pub front_upper: f64,
    pub speed: f64,
    pub mass_rate: f64,
    pub residual: f64,
}

impl Tolerances {
    pub fn for_solver(kind: SolverKind) -> Self {
        let (bounds, front) = match kind {
            SolverKind::Frontfix => (FRONTFIX_BOUND_TOL, FRONT_EXACT_TOL),
            SolverKind::Oracle => (ORACLE_BOUND_TOL, ORACLE_BOUND_TOL),
        };
        Self {
            bounds,
            front_lower: FRONT_LOWER_TOL,
            front_upper: front,
            speed: front,
            mass_rate: MASS_RATE_TOL,
            residual: RESIDUAL_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerificationThresholds {
    /// `φ⁻¹(φ(a) + δ)`.
    pub sstar: f64,
    /// `a0 |h|∞ H⁻¹ T + s0`.
    pub front_max: f64,
    /// `φ(a)`.
    pub umin: f64,
    /// `|h|∞ / H`.
    pub umax: f64,
    /// `a0 |h|∞ / H`.
    pub speed_max: f64,
    pub tolerances: Tolerances,
}

impl VerificationThresholds {
    pub fn from_instance(instance: &ProblemInstance, solver: SolverKind) -> Result<Self> {
        let a = instance.params.a;
        let sstar = compute_sstar(&instance.phi, a, instance.init.delta())?;
        Ok(Self {
            sstar,
            front_max: instance.front_max(),
            umin: instance.u_min(),
            umax: instance.u_max(),
            speed_max: instance.speed_max(),
            tolerances: Tolerances::for_solver(solver),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub pass: bool,
    /// Largest violation (zero when every sample is inside its bound), or the
    /// measured statistic for residual-type checks.
    pub worst_violation: f64,
    pub time_of_worst: f64,
    pub location_of_worst: String,
    pub tolerance: f64,
}

impl CheckRecord {
    fn bound(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            pass: true,
            worst_violation: 0.0,
            time_of_worst: 0.0,
            location_of_worst: String::new(),
            tolerance,
        }
    }

    fn offer(&mut self, violation: f64, t: f64, location: impl FnOnce() -> String) {
        if violation > self.worst_violation || violation.is_nan() {
            self.worst_violation = violation;
            self.time_of_worst = t;
            self.location_of_worst = location();
        }
    }

    fn finish(mut self) -> Self {
        self.pass = self.worst_violation <= self.tolerance;
        self
    }
}

impl fmt::Display for CheckRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<22} {}  worst={:e} tol={:e} t={} at={}",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.worst_violation,
            self.tolerance,
            self.time_of_worst,
            if self.location_of_worst.is_empty() {
                "-"
            } else {
                &self.location_of_worst
            }
        )
    }
}

/// Lower and upper comparison bounds over every stored sample.
pub fn check_bounds(result: &RunResult, th: &VerificationThresholds) -> CheckRecord {
    let mut rec = CheckRecord::bound("check_bounds", th.tolerances.bounds);
    let excursion = |v: f64| (th.umin - v).max(v - th.umax).max(0.0);
    for snap in &result.snapshots {
        let m = snap.values.len() - 1;
        for (j, &v) in snap.values.iter().enumerate() {
            rec.offer(excursion(v), snap.t, || {
                format!("snapshot step {} y={}", snap.step, j as f64 / m as f64)
            });
        }
    }
    for (i, (&ua, &us)) in result.u_at_a.iter().zip(&result.u_at_s).enumerate() {
        let t = result.times[i];
        rec.offer(excursion(ua), t, || format!("u_at_a step {i}"));
        rec.offer(excursion(us), t, || format!("u_at_s step {i}"));
    }
    rec.finish()
}

/// `s ≥ s*`, `s ≤ a0|h|∞H⁻¹T + s0` and `|s_t| ≤ a0|h|∞H⁻¹` over the trajectory.
pub fn check_front_bounds(result: &RunResult, th: &VerificationThresholds) -> [CheckRecord; 3] {
    let tol = &th.tolerances;
    let mut lower = CheckRecord::bound("check_front_lower", tol.front_lower);
    let mut upper = CheckRecord::bound("check_front_upper", tol.front_upper);
    let mut speed = CheckRecord::bound("check_front_speed", tol.speed);
    for (i, &s) in result.fronts.iter().enumerate() {
        let t = result.times[i];
        lower.offer((th.sstar - s).max(0.0), t, || format!("step {i} s={s}"));
        upper.offer((s - th.front_max).max(0.0), t, || format!("step {i} s={s}"));
    }
    for (i, &v) in result.speeds.iter().enumerate() {
        speed.offer((v.abs() - th.speed_max).max(0.0), result.times[i], || {
            format!("step {i} s_t={v}")
        });
    }
    [lower.finish(), upper.finish(), speed.finish()]
}

/// `∫_a^s u dz` of a snapshot by the trapezoid rule.
pub fn snapshot_mass(snap: &Snapshot, a: f64) -> f64 {
    let v = &snap.values;
    let m = v.len() - 1;
    let inner: f64 = v[1..m].iter().sum();
    (snap.s - a) * (inner + 0.5 * (v[0] + v[m])) / m as f64
}

/// Per snapshot interval: `(t_end, M(t_end) - M(t_start) - ∫ inflow dt)`,
/// with the recorded inflow integrated by the trapezoid rule.
pub fn mass_balance_residuals(result: &RunResult, a: f64) -> Vec<(f64, f64)> {
    result
        .snapshots
        .windows(2)
        .map(|w| {
            let (p, q) = (&w[0], &w[1]);
            let mut inflow = 0.0;
            for k in p.step..q.step {
                inflow += 0.5 * (result.times[k + 1] - result.times[k])
                    * (result.inflow[k] + result.inflow[k + 1]);
            }
            (q.t, snapshot_mass(q, a) - snapshot_mass(p, a) - inflow)
        })
        .collect()
}

/// Worst absolute mass-balance residual over snapshot intervals.
pub fn worst_mass_residual(result: &RunResult, a: f64) -> f64 {
    mass_balance_residuals(result, a)
        .into_iter()
        .fold(0.0, |m, (_, r)| m.max(r.abs()))
}

/// Residual of the integral identity over the whole recorded run:
/// `M(T) - M(0) - ∫_0^T inflow dt`, summed from the snapshot intervals.
pub fn integral_identity_residual(result: &RunResult, a: f64) -> f64 {
    mass_balance_residuals(result, a).iter().map(|&(_, r)| r).sum()
}

/// Audits `d/dt ∫ u dz = β(h - H u(a))` between consecutive snapshots. The
/// residual of each interval is normalized by the largest possible inflow
/// `k0 Δt` over it.
pub fn check_mass_balance(
    result: &RunResult,
    instance: &ProblemInstance,
    th: &VerificationThresholds,
) -> CheckRecord {
    let mut rec = CheckRecord::bound("check_mass_balance", th.tolerances.mass_rate);
    let k0 = instance.beta.plateau();
    let a = instance.params.a;
    let mut start = 0.0;
    for (t, r) in mass_balance_residuals(result, a) {
        let normalized = r.abs() / (k0 * (t - start));
        rec.offer(normalized, t, || format!("interval ({start}, {t}] residual={r:e}"));
        start = t;
    }
    rec.finish()
}

/// Maximal residuals of one audit pass, split by equation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    /// Interior heat equation residual (absolute).
    pub interior: f64,
    /// Flux condition at `z = a` (absolute).
    pub left_flux: f64,
    /// Flux condition at the front (absolute).
    pub front_flux: f64,
    /// Kinetic front law (absolute).
    pub front_law: f64,
    /// Interior residual normalized by the size of the equation's terms.
    pub interior_normalized: f64,
    /// Largest boundary residual relative to the a priori size of its terms
    /// (`k0`, `umax` times the speed bound, the speed bound).
    pub boundary_normalized: f64,
    pub time_of_worst: f64,
    pub location_of_worst: String,
    pub intervals_sampled: usize,
}

/// Residuals of the field equation, both flux conditions and the front law
/// on snapshot pairs, written in the fixed coordinates where they are
/// pointwise equivalent to the physical ones. Time derivatives are centered
/// on the interval midpoint; space derivatives are second-order.
pub fn residual_summary(result: &RunResult, instance: &ProblemInstance) -> ResidualSummary {
    let p = &instance.params;
    let a = p.a;
    let horizon = *result.times.last().unwrap_or(&0.0);
    let t_start = RESIDUAL_WINDOW_START * horizon;
    let pairs: Vec<_> = result.snapshots.windows(2).collect();
    let mut chosen: Vec<_> = pairs.iter().filter(|w| w[0].t >= t_start).collect();
    if chosen.is_empty() {
        chosen.extend(pairs.last());
    }

    let mut out = ResidualSummary::default();
    let mut interior_scale = 0.0_f64;
    let mut interior_floor = 0.0_f64;
    let mut boundary_floor = 0.0_f64;
    let mut worst_interior_at = (0.0, String::new());
    let mut boundary = [0.0_f64; 3];
    // a priori sizes: largest inflow, largest carried flux, largest speed
    let boundary_scale = [
        instance.beta.plateau(),
        instance.u_max() * instance.speed_max(),
        instance.speed_max(),
    ];
    for w in chosen {
        out.intervals_sampled += 1;
        let (p0, p1) = (&w[0], &w[1]);
        let dt = p1.t - p0.t;
        let m = p1.values.len() - 1;
        let dy = 1.0 / m as f64;
        let (l0, l1) = (p0.s - a, p1.s - a);
        let l = 0.5 * (l0 + l1);
        let speed = (p1.s - p0.s) / dt;
        let t_mid = 0.5 * (p0.t + p1.t);
        let mid = |j: usize| 0.5 * (p0.values[j] + p1.values[j]);
        let u_abs = p0.values.iter().chain(&p1.values).fold(0.0_f64, |m, v| m.max(v.abs()));
        let l_min = l0.min(l1);
        interior_floor = interior_floor
            .max(ROUNDING_FACTOR * f64::EPSILON * u_abs * (p.k / (l_min * l_min * dy * dy) + 1.0 / dt));
        boundary_floor =
            boundary_floor.max(ROUNDING_FACTOR * f64::EPSILON * u_abs * (p.k / (l_min * dy) + 1.0 / dt));

        for j in 1..m {
            let y = j as f64 * dy;
            let ut = (p1.values[j] - p0.values[j]) / dt;
            let uyy = |v: &[f64]| (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (dy * dy);
            let uy = |v: &[f64]| (v[j + 1] - v[j - 1]) / (2.0 * dy);
            let diffusion = 0.5 * (p.k / (l0 * l0) * uyy(&p0.values) + p.k / (l1 * l1) * uyy(&p1.values));
            let advection = y * speed / l * 0.5 * (uy(&p0.values) + uy(&p1.values));
            let r = (ut - diffusion - advection).abs();
            interior_scale = interior_scale.max(ut.abs() + diffusion.abs() + advection.abs());
            if r > out.interior {
                out.interior = r;
                worst_interior_at = (t_mid, format!("interior y={y}"));
            }
        }

        // one-sided second-order derivatives at both ends
        let d_left = |v: &[f64]| (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dy);
        let d_right = |v: &[f64]| (3.0 * v[m] - 4.0 * v[m - 1] + v[m - 2]) / (2.0 * dy);
        let flux_left = 0.5 * (-p.k / l0 * d_left(&p0.values) - p.k / l1 * d_left(&p1.values));
        let inflow = instance.inflow(t_mid, mid(0));
        let flux_right = 0.5 * (-p.k / l0 * d_right(&p0.values) - p.k / l1 * d_right(&p1.values));
        let carried = mid(m) * speed;
        let s_mid = 0.5 * (p0.s + p1.s);
        let law = instance.front_speed(mid(m), s_mid);
        let rs = [
            (flux_left - inflow).abs(),
            (flux_right - carried).abs(),
            (speed - law).abs(),
        ];
        for i in 0..3 {
            boundary[i] = boundary[i].max(rs[i]);
        }
    }
    out.left_flux = boundary[0];
    out.front_flux = boundary[1];
    out.front_law = boundary[2];
    out.interior_normalized = normalized(out.interior, interior_scale, interior_floor);
    out.boundary_normalized = (0..3)
        .map(|i| normalized(boundary[i], boundary_scale[i], boundary_floor))
        .fold(0.0, f64::max);
    out.time_of_worst = worst_interior_at.0;
    out.location_of_worst = worst_interior_at.1;
    out
}

/// `r / scale`, or zero when `r` is at the rounding level `floor` of the
/// stencil that produced it.
fn normalized(r: f64, scale: f64, floor: f64) -> f64 {
    if r <= floor {
        0.0
    } else {
        r / scale.max(floor)
    }
}

/// Single-run residual audit: both normalized residuals must be at most the
/// residual tolerance.
pub fn check_residuals(
    result: &RunResult,
    instance: &ProblemInstance,
    th: &VerificationThresholds,
) -> CheckRecord {
    let summary = residual_summary(result, instance);
    let worst = summary.interior_normalized.max(summary.boundary_normalized);
    CheckRecord {
        name: "check_residuals".into(),
        pass: worst <= th.tolerances.residual,
        worst_violation: worst,
        time_of_worst: summary.time_of_worst,
        location_of_worst: format!(
            "{} (interior {:e}, flux a {:e}, flux s {:e}, law {:e})",
            summary.location_of_worst,
            summary.interior,
            summary.left_flux,
            summary.front_flux,
            summary.front_law
        ),
        tolerance: th.tolerances.residual,
    }
}

/// Residual reduction between a run and its `(2M, dt/2)` refinement.
/// Passes when the interior residual shrinks by at least [`REFINEMENT_RATIO`]
/// or both levels are already exact.
pub fn check_residual_scaling(
    coarse: &RunResult,
    fine: &RunResult,
    instance: &ProblemInstance,
) -> CheckRecord {
    let rc = residual_summary(coarse, instance);
    let rf = residual_summary(fine, instance);
    let exact = rc.interior_normalized == 0.0 && rf.interior_normalized == 0.0;
    let ratio = if exact { f64::INFINITY } else { rc.interior / rf.interior };
    CheckRecord {
        name: "check_residual_scaling".into(),
        pass: exact || ratio >= REFINEMENT_RATIO,
        worst_violation: ratio,
        time_of_worst: rf.time_of_worst,
        location_of_worst: format!("coarse {:e} fine {:e}", rc.interior, rf.interior),
        tolerance: REFINEMENT_RATIO,
    }
}

/// Discrete energy `Σ Δt ‖u_t‖² + ‖u_z‖²` at each snapshot, in physical variables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub max: f64,
}

pub fn energy_diagnostic(result: &RunResult, instance: &ProblemInstance) -> EnergyTrace {
    let a = instance.params.a;
    let mut trace = EnergyTrace::default();
    let mut accumulated = 0.0;
    let mut previous: Option<&Snapshot> = None;
    let mut shifted = Vec::new();
    for snap in &result.snapshots {
        let m = snap.values.len() - 1;
        let dy = 1.0 / m as f64;
        let len = snap.s - a;
        if let Some(prev) = previous {
            let dt = snap.t - prev.t;
            // previous profile at the current physical nodes
            let ratio = len / (prev.s - a);
            shifted.clear();
            shifted.extend((0..=m).map(|j| interp_uniform(&prev.values, j as f64 * dy * ratio)));
            let sq: Vec<f64> = snap
                .values
                .iter()
                .zip(&shifted)
                .map(|(u, v)| ((u - v) / dt).powi(2))
                .collect();
            accumulated += dt * len * dy * trapezoid_sum(&sq);
        }
        let grad: f64 = snap
            .values
            .windows(2)
            .map(|w| ((w[1] - w[0]) / (len * dy)).powi(2) * len * dy)
            .sum();
        let e = accumulated + grad;
        trace.times.push(snap.t);
        trace.values.push(e);
        trace.max = trace.max.max(e);
        previous = Some(snap);
    }
    trace
}

fn trapezoid_sum(v: &[f64]) -> f64 {
    let m = v.len() - 1;
    v[1..m].iter().sum::<f64>() + 0.5 * (v[0] + v[m])
}

/// Relative change of the maximal energy between two refinement levels.
pub fn energy_variation(coarse: &EnergyTrace, fine: &EnergyTrace) -> f64 {
    let scale = coarse.max.abs().max(fine.max.abs());
    if scale == 0.0 {
        0.0
    } else {
        (coarse.max - fine.max).abs() / scale
    }
}

pub fn check_energy_stability(coarse: &EnergyTrace, fine: &EnergyTrace) -> CheckRecord {
    let variation = energy_variation(coarse, fine);
    CheckRecord {
        name: "check_energy_stability".into(),
        pass: variation <= ENERGY_STABILITY_TOL,
        worst_violation: variation,
        time_of_worst: 0.0,
        location_of_worst: format!("max coarse {} fine {}", coarse.max, fine.max),
        tolerance: ENERGY_STABILITY_TOL,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub solver: SolverKind,
    pub thresholds: VerificationThresholds,
    pub checks: Vec<CheckRecord>,
    pub energy: EnergyTrace,
    pub overall_pass: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect()
    }

    /// Largest excursion outside the solution bounds.
    pub fn worst_bound_excursion(&self) -> f64 {
        self.check("check_bounds").map_or(0.0, |c| c.worst_violation)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out.push_str(&format!(
            "{:<22} {}  max={:e}\n",
            "energy (diagnostic)", "INFO", self.energy.max
        ));
        out.push_str(&format!(
            "{:<22} {}\n",
            "overall",
            if self.overall_pass { "PASS" } else { "FAIL" }
        ));
        out
    }
}

/// Runs every single-run check.
pub fn verify_run(
    result: &RunResult,
    instance: &ProblemInstance,
    th: &VerificationThresholds,
) -> VerificationReport {
    let mut checks = Vec::with_capacity(CHECK_NAMES.len());
    checks.push(check_bounds(result, th));
    checks.extend(check_front_bounds(result, th));
    checks.push(check_mass_balance(result, instance, th));
    checks.push(check_residuals(result, instance, th));
    let overall_pass = checks.iter().all(|c| c.pass);
    VerificationReport {
        solver: result.solver,
        thresholds: *th,
        checks,
        energy: energy_diagnostic(result, instance),
        overall_pass,
    }
}

/// Convenience: thresholds from the instance and the result's solver kind.
pub fn verify(result: &RunResult, instance: &ProblemInstance) -> Result<VerificationReport> {
    let th = VerificationThresholds::from_instance(instance, result.solver)?;
    Ok(verify_run(result, instance, &th))
}

/// Copy of `result` that keeps only the snapshots taken at one of `times`.
pub fn restrict_snapshots(result: &RunResult, times: &[f64]) -> RunResult {
    let horizon = result.times.last().copied().unwrap_or(1.0).abs().max(1.0);
    let mut out = result.clone();
    out.snapshots
        .retain(|snap| times.iter().any(|&t| (snap.t - t).abs() <= 1e-9 * horizon));
    out
}

/// Energy stability on the snapshot times both runs share, so that both
/// difference quotients in time span the same intervals.
pub fn check_energy_refinement(
    coarse: &RunResult,
    fine: &RunResult,
    instance: &ProblemInstance,
) -> CheckRecord {
    let coarse_times: Vec<f64> = coarse.snapshots.iter().map(|s| s.t).collect();
    let fine = restrict_snapshots(fine, &coarse_times);
    let shared: Vec<f64> = fine.snapshots.iter().map(|s| s.t).collect();
    let coarse = restrict_snapshots(coarse, &shared);
    check_energy_stability(
        &energy_diagnostic(&coarse, instance),
        &energy_diagnostic(&fine, instance),
    )
}

/// Checks that need a run and its `(2M, dt/2)` refinement. Both runs should
/// use the same snapshot stride in steps, so that the snapshot spacing halves
/// along with the step.
pub fn verify_refinement(
    coarse: &RunResult,
    fine: &RunResult,
    instance: &ProblemInstance,
) -> Vec<CheckRecord> {
    vec![
        check_residual_scaling(coarse, fine, instance),
        check_energy_refinement(coarse, fine, instance),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontfix::simulate;
    use crate::model::{make_ramp, InitialData, InitialProfile, ModelParams, MoistureHistory};
    use crate::result::{Mutation, SchemeConfig};
    use sha2::{Digest, Sha256};

    const PHI_S0: f64 = 0.84375;

    fn instance(a0: f64, horizon: f64, h: f64, u0: InitialProfile) -> ProblemInstance {
        let phi = make_ramp(2.0, 1.0).unwrap();
        ProblemInstance {
            params: ModelParams {
                a: 1.0,
                a0,
                henry: 1.0,
                k: 1.0,
                horizon,
            },
            beta: make_ramp(1.0, 1.0).unwrap(),
            init: InitialData::new(1.5, u0, &phi, 1.0).unwrap(),
            phi,
            moisture: MoistureHistory::constant(h, horizon).unwrap(),
        }
    }

    fn canonical() -> ProblemInstance {
        instance(1.0, 1.0, 1.2, InitialProfile::Constant { value: PHI_S0 })
    }

    fn stationary() -> ProblemInstance {
        instance(1.0, 1.0, PHI_S0, InitialProfile::Constant { value: PHI_S0 })
    }

    fn run(inst: &ProblemInstance, m: usize, dt: f64, stride: usize) -> RunResult {
        simulate(inst, &SchemeConfig::new(m, dt).with_stride(stride)).unwrap()
    }

    fn digest(r: &RunResult) -> Vec<u8> {
        Sha256::digest(serde_json::to_vec(r).unwrap()).to_vec()
    }

    #[test]
    fn thresholds_are_ordered() {
        let inst = instance(1.0, 1.0, 1.2, InitialProfile::Constant { value: 0.7 });
        let th = VerificationThresholds::from_instance(&inst, SolverKind::Frontfix).unwrap();
        assert!(1.0 < th.sstar && th.sstar <= 1.5 && 1.5 < th.front_max);
        assert!(th.umin < th.umax);
        assert_eq!(th.umin, 0.5);
        assert!((th.umax - 1.2).abs() < 1e-15);
        assert!((th.speed_max - 1.2).abs() < 1e-15);
        assert!((th.front_max - 2.7).abs() < 1e-15);
        // δ = 0.2, so s* solves φ(s*) = 0.7
        assert!((inst.phi.eval(th.sstar) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn front_bound_is_a_product() {
        let base = canonical();
        let other = instance(2.0, 0.5, 1.2, InitialProfile::Constant { value: PHI_S0 });
        let a = VerificationThresholds::from_instance(&base, SolverKind::Frontfix).unwrap();
        let b = VerificationThresholds::from_instance(&other, SolverKind::Frontfix).unwrap();
        assert_eq!(a.front_max, b.front_max);
        assert_eq!(2.0 * a.speed_max, b.speed_max);
    }

    #[test]
    fn stationary_run_is_clean() {
        let inst = stationary();
        let r = run(&inst, 200, 1e-4, 100);
        let th = VerificationThresholds::from_instance(&inst, SolverKind::Frontfix).unwrap();
        assert!((th.sstar - 1.5).abs() <= 1e-11);
        let bounds = check_bounds(&r, &th);
        assert!(bounds.pass);
        // u0 = φ(s0) = umax here, so only rounding can show up
        assert!(bounds.worst_violation <= 1e-13, "{bounds}");
        let [lower, upper, speed] = check_front_bounds(&r, &th);
        assert!(lower.pass && upper.pass && speed.pass);
        assert!(worst_mass_residual(&r, 1.0) <= 1e-12);
        let res = residual_summary(&r, &inst);
        assert!(res.left_flux <= 1e-11, "{res:?}");
        assert!(res.front_flux <= 1e-11, "{res:?}");
        assert!(res.front_law <= 1e-11, "{res:?}");
        assert!(res.interior <= 1e-9, "{res:?}");
        assert!(check_residuals(&r, &inst, &th).pass);
        // u_t ≡ 0 and a flat profile: no energy at all
        let e = energy_diagnostic(&r, &inst);
        assert!(e.values.iter().all(|&v| v <= 1e-20), "{:?}", e.max);
    }

    #[test]
    fn canonical_run_passes_every_check() {
        let inst = canonical();
        let r = run(&inst, 200, 1e-4, 100);
        let report = verify(&r, &inst).unwrap();
        assert!(report.overall_pass, "{}", report.summary());
        assert!(report.worst_bound_excursion() <= 1e-8);
        assert!(report.energy.max > 0.0);
        assert_eq!(report.energy.values.len(), r.snapshots.len());
    }

    #[test]
    fn report_is_complete_and_consistent() {
        let inst = canonical();
        let mut r = run(&inst, 50, 1e-3, 10);
        let report = verify(&r, &inst).unwrap();
        let names: Vec<_> = report.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, CHECK_NAMES);
        assert_eq!(report.overall_pass, report.checks.iter().all(|c| c.pass));

        r.speeds[7] = 10.0;
        let report = verify(&r, &inst).unwrap();
        assert!(!report.overall_pass);
        assert_eq!(report.failing(), ["check_front_speed"]);
        assert_eq!(report.summary().lines().count(), CHECK_NAMES.len() + 2);
        let json: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert_eq!(json["checks"].as_array().unwrap().len(), CHECK_NAMES.len());
        assert_eq!(json["overall_pass"], false);
    }

    #[test]
    fn verification_is_read_only() {
        let inst = canonical();
        let coarse = run(&inst, 25, 2e-3, 10);
        let fine = run(&inst, 50, 1e-3, 10);
        let before = (digest(&coarse), digest(&fine));
        let _ = verify(&fine, &inst).unwrap();
        let _ = verify_refinement(&coarse, &fine, &inst);
        let _ = mass_balance_residuals(&fine, 1.0);
        assert_eq!(before, (digest(&coarse), digest(&fine)));
    }

    #[test]
    fn corrupted_sample_is_located() {
        let inst = canonical();
        let mut r = run(&inst, 50, 1e-3, 100);
        let th = VerificationThresholds::from_instance(&inst, SolverKind::Frontfix).unwrap();
        r.snapshots[3].values[17] = th.umax + 1.0;
        let rec = check_bounds(&r, &th);
        assert!(!rec.pass);
        assert!((rec.worst_violation - 1.0).abs() < 1e-12);
        assert_eq!(rec.time_of_worst, r.snapshots[3].t);
        assert!(rec.location_of_worst.contains("y=0.34"), "{}", rec.location_of_worst);
        assert!(rec.to_string().contains("FAIL"));
    }

    #[test]
    fn dry_run_conserves_mass_to_second_order() {
        // h ≡ 0 fails the compatibility check; the solver runs ungated
        let inst = instance(1.0, 1.0, 0.0, InitialProfile::Affine { left: 0.7, right: PHI_S0 });
        let res: Vec<f64> = [(50, 4e-4, 25), (100, 2e-4, 50), (200, 1e-4, 100)]
            .iter()
            .map(|&(m, dt, stride)| {
                let r = run(&inst, m, dt, stride);
                assert!(r.inflow.iter().all(|&q| q == 0.0));
                integral_identity_residual(&r, 1.0).abs()
            })
            .collect();
        assert!(res[0] / res[1] >= 1.7 && res[1] / res[2] >= 1.7, "{res:?}");
        assert!(res[2] < 1e-5, "{res:?}");
    }

    #[test]
    fn residuals_scale_with_refinement() {
        let inst = canonical();
        let coarse = run(&inst, 100, 2e-4, 100);
        let fine = run(&inst, 200, 1e-4, 100);
        let checks = verify_refinement(&coarse, &fine, &inst);
        assert!(checks.iter().all(|c| c.pass), "{checks:?}");
        assert!(checks[0].worst_violation >= REFINEMENT_RATIO);
    }

    #[test]
    fn flipped_advection_breaks_the_scaling() {
        let inst = canonical();
        let mutated = |m, dt| {
            let mut cfg = SchemeConfig::new(m, dt).with_stride(100);
            cfg.mutation = Some(Mutation::FlipAdvection);
            simulate(&inst, &cfg).unwrap()
        };
        let rec = check_residual_scaling(&mutated(100, 2e-4), &mutated(200, 1e-4), &inst);
        assert!(!rec.pass);
        assert!(rec.worst_violation < 1.2, "{rec}");
    }

    #[test]
    fn energy_comparison_uses_shared_times() {
        let inst = canonical();
        let coarse = run(&inst, 100, 2e-4, 100);
        let fine = run(&inst, 200, 1e-4, 100);
        let kept = restrict_snapshots(&fine, &coarse.snapshots.iter().map(|s| s.t).collect::<Vec<_>>());
        assert_eq!(kept.snapshots.len(), coarse.snapshots.len());
        let rec = check_energy_refinement(&coarse, &fine, &inst);
        assert!(rec.pass && rec.worst_violation < 0.02, "{rec}");
    }
}
