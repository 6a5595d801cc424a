//! Per-run trajectories shared by both solvers, plus their CSV and JSON forms.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Frontfix,
    Oracle,
}

impl SolverKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Frontfix => "frontfix",
            SolverKind::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frontfix" => Ok(SolverKind::Frontfix),
            "oracle" => Ok(SolverKind::Oracle),
            other => Err(Error::Config(format!("unknown solver `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// Front advanced with the previous profile, then the profile is solved.
    #[default]
    ExplicitFront,
    /// Front and profile iterated to a joint fixed point each step.
    IteratedCoupling,
}

/// Manufactured source terms. The defaults are all zero.
///
/// The solver solves
/// `ũ_t - k/(s-a)² ũ_yy - y s_t/(s-a) ũ_y = interior(t, y)`,
/// `-k/(s-a) ũ_y(0) = β(h - Hũ(0)) + left_flux(t)`,
/// `-k/(s-a) ũ_y(1) = ũ(1) s_t + front_flux(t)`,
/// `s_t = a0 (ũ(1) - φ(s)) + front_law(t)`.
pub trait Forcing: Send + Sync {
    fn interior(&self, t: f64, y: f64) -> f64;
    fn left_flux(&self, t: f64) -> f64;
    fn front_flux(&self, t: f64) -> f64;
    fn front_law(&self, t: f64) -> f64;
}

#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Flips the sign of the grid-motion advection term. Used only to
    /// check that the verifier notices a wrong equation.
    FlipAdvection,
}

/// Discretization settings shared by both solvers.
#[derive(Clone)]
pub struct SchemeConfig {
    /// Number of spatial intervals `M`.
    pub intervals: usize,
    pub dt: f64,
    pub boundary_newton_tol: f64,
    pub boundary_newton_max_iter: usize,
    pub coupling: Coupling,
    /// Profile snapshot decimation in steps.
    pub stride: usize,
    pub forcing: Option<Arc<dyn Forcing>>,
    #[doc(hidden)]
    pub mutation: Option<Mutation>,
}

impl std::fmt::Debug for SchemeConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SchemeConfig")
            .field("intervals", &self.intervals)
            .field("dt", &self.dt)
            .field("boundary_newton_tol", &self.boundary_newton_tol)
            .field("boundary_newton_max_iter", &self.boundary_newton_max_iter)
            .field("coupling", &self.coupling)
            .field("stride", &self.stride)
            .field("forcing", &self.forcing.is_some())
            .field("mutation", &self.mutation)
            .finish()
    }
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            intervals: 200,
            dt: 1e-4,
            boundary_newton_tol: 1e-12,
            boundary_newton_max_iter: 50,
            coupling: Coupling::ExplicitFront,
            stride: 100,
            forcing: None,
            mutation: None,
        }
    }
}

impl SchemeConfig {
    pub fn new(intervals: usize, dt: f64) -> Self {
        Self {
            intervals,
            dt,
            ..Self::default()
        }
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_forcing(mut self, forcing: Arc<dyn Forcing>) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn validate(&self, horizon: f64) -> Result<()> {
        if self.intervals < crate::landau::MIN_INTERVALS {
            return Err(Error::Scheme(format!(
                "need at least {} intervals, got {}",
                crate::landau::MIN_INTERVALS,
                self.intervals
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Scheme(format!("dt must be positive, got {}", self.dt)));
        }
        if self.dt > horizon {
            return Err(Error::Scheme(format!(
                "dt = {} exceeds the horizon {horizon}",
                self.dt
            )));
        }
        if self.stride == 0 {
            return Err(Error::Scheme("snapshot stride must be at least 1".into()));
        }
        if !(self.boundary_newton_tol > 0.0) || self.boundary_newton_max_iter == 0 {
            return Err(Error::Scheme("invalid boundary Newton settings".into()));
        }
        Ok(())
    }
}

/// A stored profile: `ũ` on the uniform fixed grid at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub s: f64,
    pub values: Vec<f64>,
}

/// Solver-side health numbers; not part of any bound.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    /// Largest sampled relative residual of the tridiagonal solves.
    pub max_linear_residual: f64,
    pub max_newton_iterations: usize,
    pub bisection_fallbacks: usize,
    pub max_coupling_sweeps: usize,
    /// Largest explicit sub-step count per outer step (oracle only).
    pub max_substeps: usize,
}

/// Full trajectory of one run. Time series have one entry per time level
/// `t_0 = 0, ..., t_N = T`; profiles are stored every `stride` steps and at
/// the final step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub solver: SolverKind,
    pub intervals: usize,
    /// Effective time step.
    pub dt: f64,
    pub stride: usize,
    pub times: Vec<f64>,
    pub fronts: Vec<f64>,
    /// Front speed; entry `n > 0` is the speed that carried the front over
    /// the step ending at `t_n`.
    pub speeds: Vec<f64>,
    pub u_at_a: Vec<f64>,
    pub u_at_s: Vec<f64>,
    /// `β(h(t_n) - H ũ(t_n, 0))`.
    pub inflow: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: RunDiagnostics,
}

impl RunResult {
    pub(crate) fn with_capacity(
        solver: SolverKind,
        intervals: usize,
        dt: f64,
        stride: usize,
        steps: usize,
    ) -> Self {
        let cap = steps + 1;
        Self {
            solver,
            intervals,
            dt,
            stride,
            times: Vec::with_capacity(cap),
            fronts: Vec::with_capacity(cap),
            speeds: Vec::with_capacity(cap),
            u_at_a: Vec::with_capacity(cap),
            u_at_s: Vec::with_capacity(cap),
            inflow: Vec::with_capacity(cap),
            snapshots: Vec::new(),
            diagnostics: RunDiagnostics::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_front(&self) -> f64 {
        *self.fronts.last().expect("empty run")
    }

    pub fn final_profile(&self) -> &Snapshot {
        self.snapshots.last().expect("run without snapshots")
    }

    /// Checks the shape invariants: equal lengths, strictly increasing times
    /// starting at zero, snapshots inside the step range.
    pub fn check_shape(&self) -> Result<()> {
        let n = self.times.len();
        let lens = [
            self.fronts.len(),
            self.speeds.len(),
            self.u_at_a.len(),
            self.u_at_s.len(),
            self.inflow.len(),
        ];
        if n == 0 || lens.iter().any(|&l| l != n) {
            return Err(Error::InvalidParameter(format!(
                "time series lengths differ: times {n}, others {lens:?}"
            )));
        }
        if self.times[0] != 0.0 || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "times must start at 0 and increase strictly".into(),
            ));
        }
        if self.snapshots.is_empty()
            || self
                .snapshots
                .iter()
                .any(|s| s.step >= n || s.values.len() != self.intervals + 1)
        {
            return Err(Error::InvalidParameter("malformed snapshots".into()));
        }
        Ok(())
    }

    /// CSV time series with columns `t,s,s_t,u_at_a,u_at_s,inflow_flux`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.len());
        out.push_str("t,s,s_t,u_at_a,u_at_s,inflow_flux\n");
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.times[i],
                self.fronts[i],
                self.speeds[i],
                self.u_at_a[i],
                self.u_at_s[i],
                self.inflow[i]
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: RunResult = serde_json::from_str(text)?;
        r.check_shape()?;
        Ok(r)
    }
}

/// Number of steps and effective step so that `n * dt_eff = horizon` with
/// `dt_eff <= dt`.
pub(crate) fn step_count(horizon: f64, dt: f64) -> (usize, f64) {
    let n = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    (n, horizon / n as f64)
}

/// Snapshot predicate shared by the solvers.
pub(crate) fn is_snapshot_step(step: usize, stride: usize, last: usize) -> bool {
    step.is_multiple_of(stride) || step == last
}
