//! Model data: scalar parameters, the two saturating coefficient ramps,
//! the boundary moisture signal, initial data, and the assumption checks
//! that gate a run.
//!
//! Everything here is immutable after construction and `Sync`, so a single
//! [`ProblemInstance`] can be shared between parallel sweep workers.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance of the bisection used to invert the breaking ramp.
pub const INVERSE_TOL: f64 = 1e-12;

/// Scalar constants of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    /// Position of the pore edge.
    pub a: f64,
    /// Front-law rate constant.
    pub a0: f64,
    /// Henry-type constant `H`.
    pub henry: f64,
    /// Diffusion constant.
    pub k: f64,
    /// Time horizon `T`.
    pub horizon: f64,
}

impl ModelParams {
    fn all_positive(&self) -> Vec<(&'static str, f64)> {
        [
            ("a", self.a),
            ("a0", self.a0),
            ("H", self.henry),
            ("k", self.k),
            ("T", self.horizon),
        ]
        .into_iter()
        .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
        .collect()
    }
}

/// C¹ ramp that vanishes for nonpositive input, rises strictly on
/// `(0, r_threshold)` along the cubic smoothstep and is constant afterwards.
///
/// Used both for the adsorption function β (plateau `k0`) and the breaking
/// function φ (plateau `c0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RampFunction {
    r_threshold: f64,
    plateau: f64,
}

/// Builds the canonical smoothstep ramp `plateau * (3x² - 2x³)`, `x = r / r_threshold`.
pub fn make_ramp(r_threshold: f64, plateau: f64) -> Result<RampFunction> {
    RampFunction::new(r_threshold, plateau)
}

impl RampFunction {
    pub fn new(r_threshold: f64, plateau: f64) -> Result<Self> {
        if !(r_threshold.is_finite() && r_threshold > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ramp threshold must be positive, got {r_threshold}"
            )));
        }
        if !(plateau.is_finite() && plateau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ramp plateau must be positive, got {plateau}"
            )));
        }
        Ok(Self {
            r_threshold,
            plateau,
        })
    }

    pub fn r_threshold(&self) -> f64 {
        self.r_threshold
    }

    pub fn plateau(&self) -> f64 {
        self.plateau
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= self.r_threshold {
            self.plateau
        } else {
            let xi = x / self.r_threshold;
            self.plateau * xi * xi * (3.0 - 2.0 * xi)
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= self.r_threshold {
            0.0
        } else {
            let xi = x / self.r_threshold;
            6.0 * self.plateau / self.r_threshold * xi * (1.0 - xi)
        }
    }

    /// `sup φ'` over the real line, attained at the midpoint of the ramp.
    pub fn derivative_sup(&self) -> f64 {
        1.5 * self.plateau / self.r_threshold
    }

    /// Smallest `x` in `[lo, r_threshold]` with `eval(x) = target`, by bisection.
    ///
    /// Requires `eval(lo) <= target <= plateau`.
    pub fn inverse_from(&self, lo: f64, target: f64) -> Result<f64> {
        if !(target <= self.plateau) || !target.is_finite() {
            return Err(Error::NoInverse {
                target,
                plateau: self.plateau,
            });
        }
        let mut lo = lo;
        let mut hi = self.r_threshold;
        if lo >= hi || self.eval(lo) > target {
            return Err(Error::NoInverse {
                target,
                plateau: self.plateau,
            });
        }
        // eval(lo) <= target <= eval(hi) throughout
        while hi - lo > INVERSE_TOL {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Boundary moisture representations with an exactly known supremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MoistureKind {
    Constant {
        value: f64,
    },
    /// Linear from `start` at `t = 0` to `end` at `t = T`.
    Linear {
        start: f64,
        end: f64,
    },
    /// `offset + amplitude * sin(omega * t + phase)`.
    Sine {
        offset: f64,
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Piecewise-linear table; held constant outside the sampled range.
    Table {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoistureHistory {
    kind: MoistureKind,
    horizon: f64,
    sup_norm: f64,
    inf_value: f64,
}

impl MoistureHistory {
    pub fn new(kind: MoistureKind, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "moisture horizon must be positive, got {horizon}"
            )));
        }
        let finite = |xs: &[f64]| xs.iter().all(|v| v.is_finite());
        let (sup, inf) = match &kind {
            MoistureKind::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidParameter("non-finite moisture".into()));
                }
                (value.abs(), *value)
            }
            MoistureKind::Linear { start, end } => {
                if !finite(&[*start, *end]) {
                    return Err(Error::InvalidParameter("non-finite moisture".into()));
                }
                (start.abs().max(end.abs()), start.min(*end))
            }
            MoistureKind::Sine {
                offset,
                amplitude,
                omega,
                phase,
            } => {
                if !finite(&[*offset, *amplitude, *omega, *phase]) {
                    return Err(Error::InvalidParameter("non-finite moisture".into()));
                }
                let f = |t: f64| offset + amplitude * (omega * t + phase).sin();
                let mut hi = f(0.0).max(f(horizon));
                let mut lo = f(0.0).min(f(horizon));
                // sin reaches +1 at pi/2 + 2n pi and -1 at -pi/2 + 2n pi
                let (peak, trough) = if *amplitude >= 0.0 {
                    (0.5 * PI, -0.5 * PI)
                } else {
                    (-0.5 * PI, 0.5 * PI)
                };
                if hits_phase(*omega, *phase, horizon, peak) {
                    hi = offset + amplitude.abs();
                }
                if hits_phase(*omega, *phase, horizon, trough) {
                    lo = offset - amplitude.abs();
                }
                (hi.abs().max(lo.abs()), lo)
            }
            MoistureKind::Table { times, values } => {
                if times.len() != values.len() || times.len() < 2 {
                    return Err(Error::InvalidParameter(
                        "moisture table needs matching times/values with at least two rows".into(),
                    ));
                }
                if !finite(times) || !finite(values) {
                    return Err(Error::InvalidParameter("non-finite moisture table".into()));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidParameter(
                        "moisture table times must be strictly increasing".into(),
                    ));
                }
                if times[0] > 0.0 || *times.last().unwrap() < horizon {
                    return Err(Error::InvalidParameter(format!(
                        "moisture table must cover [0, {horizon}]"
                    )));
                }
                let sup = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let inf = values.iter().copied().fold(f64::INFINITY, f64::min);
                (sup, inf)
            }
        };
        Ok(Self {
            kind,
            horizon,
            sup_norm: sup,
            inf_value: inf,
        })
    }

    pub fn constant(value: f64, horizon: f64) -> Result<Self> {
        Self::new(MoistureKind::Constant { value }, horizon)
    }

    pub fn kind(&self) -> &MoistureKind {
        &self.kind
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `|h|_{L∞(0,T)}`.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// Smallest value attained on `[0, T]`.
    pub fn inf_value(&self) -> f64 {
        self.inf_value
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            MoistureKind::Constant { value } => *value,
            MoistureKind::Linear { start, end } => start + (end - start) * (t / self.horizon),
            MoistureKind::Sine {
                offset,
                amplitude,
                omega,
                phase,
            } => offset + amplitude * (omega * t + phase).sin(),
            MoistureKind::Table { times, values } => interp_table(times, values, t),
        }
    }

    /// Time derivative; one-sided (right) at table nodes.
    pub fn eval_derivative(&self, t: f64) -> f64 {
        match &self.kind {
            MoistureKind::Constant { .. } => 0.0,
            MoistureKind::Linear { start, end } => (end - start) / self.horizon,
            MoistureKind::Sine {
                amplitude,
                omega,
                phase,
                ..
            } => amplitude * omega * (omega * t + phase).cos(),
            MoistureKind::Table { times, values } => {
                if t < times[0] || t >= times[times.len() - 1] {
                    return 0.0;
                }
                let i = times.partition_point(|&x| x <= t) - 1;
                (values[i + 1] - values[i]) / (times[i + 1] - times[i])
            }
        }
    }
}

/// True when `omega * t + phase = target (mod 2 pi)` for some `t` in `[0, horizon]`.
fn hits_phase(omega: f64, phase: f64, horizon: f64, target: f64) -> bool {
    if omega == 0.0 {
        return ((phase - target) / (2.0 * PI)).fract().abs() < 1e-15;
    }
    let (lo, hi) = if omega > 0.0 {
        (phase, omega * horizon + phase)
    } else {
        (omega * horizon + phase, phase)
    };
    let n = ((lo - target) / (2.0 * PI)).ceil();
    target + 2.0 * PI * n <= hi
}

fn interp_table(times: &[f64], values: &[f64], t: f64) -> f64 {
    if t <= times[0] {
        return values[0];
    }
    let last = times.len() - 1;
    if t >= times[last] {
        return values[last];
    }
    let i = times.partition_point(|&x| x <= t) - 1;
    let w = (t - times[i]) / (times[i + 1] - times[i]);
    values[i] + w * (values[i + 1] - values[i])
}

/// Initial water-content profile on `[a, s0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialProfile {
    Constant { value: f64 },
    /// Linear from `left` at `z = a` to `right` at `z = s0`.
    Affine { left: f64, right: f64 },
    /// Samples on a uniform grid over `[a, s0]`, linearly interpolated.
    Samples { values: Vec<f64> },
}

impl InitialProfile {
    /// Value at fractional position `y = (z - a) / (s0 - a)` in `[0, 1]`.
    pub fn eval_fraction(&self, y: f64) -> f64 {
        match self {
            InitialProfile::Constant { value } => *value,
            InitialProfile::Affine { left, right } => left + (right - left) * y,
            InitialProfile::Samples { values } => {
                let n = values.len() - 1;
                let x = (y.clamp(0.0, 1.0)) * n as f64;
                let i = (x.floor() as usize).min(n - 1);
                let w = x - i as f64;
                if w == 0.0 {
                    values[i]
                } else {
                    values[i] + w * (values[i + 1] - values[i])
                }
            }
        }
    }

    /// Infimum over `[a, s0]`; linear pieces attain it at nodes.
    pub fn min_value(&self) -> f64 {
        match self {
            InitialProfile::Constant { value } => *value,
            InitialProfile::Affine { left, right } => left.min(*right),
            InitialProfile::Samples { values } => {
                values.iter().copied().fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            InitialProfile::Constant { value } => *value,
            InitialProfile::Affine { left, right } => left.max(*right),
            InitialProfile::Samples { values } => {
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialData {
    s0: f64,
    u0: InitialProfile,
    delta: f64,
}

impl InitialData {
    /// Builds initial data and caches `δ = inf (u0 - φ(a))`. The margin may
    /// be nonpositive here; [`validate_assumptions`] reports that.
    pub fn new(s0: f64, u0: InitialProfile, phi: &RampFunction, a: f64) -> Result<Self> {
        if !s0.is_finite() {
            return Err(Error::InvalidParameter("s0 must be finite".into()));
        }
        match &u0 {
            InitialProfile::Constant { value } if !value.is_finite() => {
                return Err(Error::InvalidParameter("non-finite u0".into()))
            }
            InitialProfile::Affine { left, right } if !(left.is_finite() && right.is_finite()) => {
                return Err(Error::InvalidParameter("non-finite u0".into()))
            }
            InitialProfile::Samples { values } => {
                if values.len() < 2 {
                    return Err(Error::InvalidParameter(
                        "sampled u0 needs at least two samples".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter("non-finite u0 sample".into()));
                }
            }
            _ => {}
        }
        let delta = u0.min_value() - phi.eval(a);
        Ok(Self { s0, u0, delta })
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn u0(&self) -> &InitialProfile {
        &self.u0
    }

    /// Cached `inf (u0 - φ(a))`.
    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Initial margin `δ = inf_{[a, s0]} (u0 - φ(a))`.
pub fn compute_delta(init: &InitialData, phi: &RampFunction, a: f64) -> Result<f64> {
    let delta = init.u0.min_value() - phi.eval(a);
    if delta > 0.0 {
        Ok(delta)
    } else {
        Err(Error::AssumptionViolation(format!(
            "initial margin delta = {delta} is not positive"
        )))
    }
}

/// Lower front bound `s* = φ⁻¹(φ(a) + δ)`, inverted on `[a, r_φ]`.
pub fn compute_sstar(phi: &RampFunction, a: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::AssumptionViolation(format!(
            "delta must be positive, got {delta}"
        )));
    }
    phi.inverse_from(a, phi.eval(a) + delta)
}

/// A complete problem: parameters, coefficient ramps, moisture signal and initial data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemInstance {
    pub params: ModelParams,
    /// Adsorption function (plateau `k0` at `r_β`).
    pub beta: RampFunction,
    /// Breaking function (plateau `c0` at `r_φ`).
    pub phi: RampFunction,
    pub moisture: MoistureHistory,
    pub init: InitialData,
}

impl ProblemInstance {
    /// Lower solution bound `φ(a)`.
    pub fn u_min(&self) -> f64 {
        self.phi.eval(self.params.a)
    }

    /// Upper solution bound `|h|∞ / H`.
    pub fn u_max(&self) -> f64 {
        self.moisture.sup_norm() / self.params.henry
    }

    /// Front speed bound `a0 |h|∞ / H`.
    pub fn speed_max(&self) -> f64 {
        self.params.a0 * self.u_max()
    }

    /// Front growth bound `a0 |h|∞ H⁻¹ T + s0`.
    pub fn front_max(&self) -> f64 {
        self.speed_max() * self.params.horizon + self.init.s0
    }

    /// Inflow `β(h(t) - H u(a))`.
    #[inline]
    pub fn inflow(&self, t: f64, u_at_a: f64) -> f64 {
        self.beta
            .eval(self.moisture.eval(t) - self.params.henry * u_at_a)
    }

    /// Front law `a0 (u(s) - φ(s))`.
    #[inline]
    pub fn front_speed(&self, u_at_s: f64, s: f64) -> f64 {
        self.params.a0 * (u_at_s - self.phi.eval(s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationCheck {
    pub name: String,
    pub pass: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&ValidationCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidationCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<18} {}  {}",
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.message
            )?;
        }
        Ok(())
    }
}

/// Names of the checks, in report order.
pub const VALIDATION_CHECKS: [&str; 6] = ["A1", "A2", "A3", "A4", "A4_compatibility", "A5"];

/// Checks every standing assumption on the instance. Never fails: each
/// violated condition becomes a failing entry in the report.
pub fn validate_assumptions(instance: &ProblemInstance) -> ValidationReport {
    let mut checks = Vec::with_capacity(VALIDATION_CHECKS.len());
    let mut push = |name: &str, pass: bool, message: String| {
        checks.push(ValidationCheck {
            name: name.to_string(),
            pass,
            message,
        })
    };
    let p = &instance.params;

    let bad = p.all_positive();
    push(
        "A1",
        bad.is_empty(),
        if bad.is_empty() {
            "a, a0, H, k, T all positive".into()
        } else {
            format!("not positive: {bad:?}")
        },
    );

    let h = &instance.moisture;
    let covers = h.horizon() >= p.horizon;
    let nonneg = h.inf_value() >= 0.0;
    push(
        "A2",
        covers && nonneg,
        format!(
            "inf h = {}, |h|inf = {}, moisture horizon {} vs T {}",
            h.inf_value(),
            h.sup_norm(),
            h.horizon(),
            p.horizon
        ),
    );

    // Ramps are C¹ with a strictly increasing interior by construction;
    // the constructor already rejected nonpositive thresholds and plateaus.
    push(
        "A3",
        instance.beta.r_threshold() > 0.0 && instance.beta.plateau() > 0.0,
        format!(
            "beta: r_beta = {}, k0 = {}",
            instance.beta.r_threshold(),
            instance.beta.plateau()
        ),
    );
    push(
        "A4",
        instance.phi.r_threshold() > 0.0 && instance.phi.plateau() > 0.0,
        format!(
            "phi: r_phi = {}, c0 = {}, c_phi = {}",
            instance.phi.r_threshold(),
            instance.phi.plateau(),
            instance.phi.derivative_sup()
        ),
    );

    let c0 = instance.phi.plateau();
    let twice_phi_a = 2.0 * instance.phi.eval(p.a);
    let u_max = instance.u_max();
    let compat = c0 <= twice_phi_a && c0 <= u_max;
    push(
        "A4_compatibility",
        compat,
        format!("c0 = {c0} vs 2 phi(a) = {twice_phi_a}, |h|inf/H = {u_max}"),
    );

    let s0 = instance.init.s0();
    let r_phi = instance.phi.r_threshold();
    let phi_a = instance.phi.eval(p.a);
    let phi_s0 = instance.phi.eval(s0);
    let u0 = instance.init.u0();
    let geometry = p.a < s0 && s0 < r_phi;
    let lower = u0.min_value() > phi_a;
    let upper = u0.max_value() <= phi_s0;
    let mut msg = format!(
        "a = {}, s0 = {s0}, r_phi = {r_phi}; u0 in [{}, {}] vs (phi(a), phi(s0)] = ({phi_a}, {phi_s0}]",
        p.a,
        u0.min_value(),
        u0.max_value()
    );
    if !geometry {
        msg.push_str("; need a < s0 < r_phi");
    }
    if !lower {
        msg.push_str("; u0 must exceed phi(a) strictly");
    }
    if !upper {
        msg.push_str("; u0 must not exceed phi(s0)");
    }
    push("A5", geometry && lower && upper, msg);

    ValidationReport { checks }
}
