//! Grid-refinement studies for the front-fixing solver.
//!
//! Level `l` runs at `(M 2^l, dt / 2^l)`. [`self_convergence`] measures each
//! level against the finest one; [`run_mms`] measures every level against a
//! manufactured exact pair.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontfix::simulate;
use crate::model::ProblemInstance;
use crate::result::{Coupling, Forcing, RunResult, SchemeConfig};

pub const MIN_LEVELS: usize = 3;
/// Errors at or below this are reported as exact.
pub const EXACT_TOL: f64 = 1e-12;
/// Minimal front order in self-convergence.
pub const SELF_FRONT_MIN_ORDER: f64 = 0.8;
/// Accepted profile order range in self-convergence.
pub const SELF_PROFILE_ORDER: (f64, f64) = (0.8, 2.2);
/// Minimal error ratio per refinement against a manufactured pair.
pub const MMS_MIN_RATIO: f64 = 1.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyMode {
    #[serde(rename = "self")]
    SelfConvergence,
    Mms,
}

impl StudyMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            StudyMode::SelfConvergence => "self",
            StudyMode::Mms => "mms",
        }
    }
}

impl std::str::FromStr for StudyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "self" => Ok(StudyMode::SelfConvergence),
            "mms" => Ok(StudyMode::Mms),
            other => Err(Error::Config(format!("unknown convergence mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLevel {
    pub level: usize,
    pub intervals: usize,
    pub dt: f64,
    /// Discrete L² error of `ũ(T)`.
    pub profile_error: f64,
    /// `|s(T) - s_ref(T)|`.
    pub front_error: f64,
    /// Error ratio against the previous level, if both errors are inexact.
    pub profile_ratio: Option<f64>,
    pub front_ratio: Option<f64>,
}

impl ConvergenceLevel {
    pub fn profile_order(&self) -> Option<f64> {
        self.profile_ratio.map(f64::log2)
    }

    pub fn front_order(&self) -> Option<f64> {
        self.front_ratio.map(f64::log2)
    }

    pub fn exact(&self) -> bool {
        self.profile_error <= EXACT_TOL && self.front_error <= EXACT_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub mode: StudyMode,
    pub coupling: Coupling,
    pub levels: Vec<ConvergenceLevel>,
    pub pass: bool,
}

impl ConvergenceTable {
    fn new(mode: StudyMode, coupling: Coupling, mut levels: Vec<ConvergenceLevel>) -> Self {
        for i in 1..levels.len() {
            let (prev, cur) = (&levels[i - 1], &levels[i]);
            let ratio = |p: f64, c: f64| (p > EXACT_TOL && c > EXACT_TOL).then(|| p / c);
            let pr = ratio(prev.profile_error, cur.profile_error);
            let fr = ratio(prev.front_error, cur.front_error);
            levels[i].profile_ratio = pr;
            levels[i].front_ratio = fr;
        }
        let pass = match mode {
            StudyMode::SelfConvergence => levels.iter().all(|l| {
                let front_ok = l.front_error <= EXACT_TOL
                    || l.front_order().is_none_or(|o| o >= SELF_FRONT_MIN_ORDER);
                let profile_ok = l.profile_error <= EXACT_TOL
                    || l.profile_order().is_none_or(|o| {
                        (SELF_PROFILE_ORDER.0..=SELF_PROFILE_ORDER.1).contains(&o)
                    });
                front_ok && profile_ok
            }),
            StudyMode::Mms => levels.iter().all(|l| {
                let ok = |e: f64, r: Option<f64>| e <= EXACT_TOL || r.is_none_or(|r| r >= MMS_MIN_RATIO);
                ok(l.profile_error, l.profile_ratio) && ok(l.front_error, l.front_ratio)
            }),
        };
        Self {
            mode,
            coupling,
            levels,
            pass,
        }
    }

    /// CSV with one row per level; empty cells where a ratio is undefined.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "level,intervals,dt,profile_error,front_error,profile_ratio,front_ratio,profile_order,front_order,exact\n",
        );
        let cell = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for l in &self.levels {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                l.level,
                l.intervals,
                l.dt,
                l.profile_error,
                l.front_error,
                cell(l.profile_ratio),
                cell(l.front_ratio),
                cell(l.profile_order()),
                cell(l.front_order()),
                l.exact()
            );
        }
        out
    }
}

fn level_config(base: &SchemeConfig, level: usize) -> SchemeConfig {
    let f = 1usize << level;
    let mut cfg = base.clone();
    cfg.intervals = base.intervals * f;
    cfg.dt = base.dt / f as f64;
    cfg.stride = usize::MAX;
    cfg
}

fn check_levels(levels: usize) -> Result<()> {
    if levels < MIN_LEVELS {
        return Err(Error::InvalidParameter(format!(
            "a convergence study needs at least {MIN_LEVELS} levels, got {levels}"
        )));
    }
    if levels > 12 {
        return Err(Error::InvalidParameter(format!("{levels} levels is too many")));
    }
    Ok(())
}

fn run_levels(instance: &ProblemInstance, base: &SchemeConfig, levels: usize) -> Result<Vec<RunResult>> {
    (0..levels)
        .into_par_iter()
        .map(|l| simulate(instance, &level_config(base, l)))
        .collect()
}

/// Discrete L² norm of `f(y_j)` on a uniform grid with `m` intervals.
fn l2_on_grid(m: usize, f: impl Fn(usize, f64) -> f64) -> f64 {
    let dy = 1.0 / m as f64;
    let sum: f64 = (0..=m)
        .map(|j| {
            let w = if j == 0 || j == m { 0.5 } else { 1.0 };
            w * f(j, j as f64 * dy).powi(2)
        })
        .sum();
    (sum * dy).sqrt()
}

/// Runs `levels` refinements and measures each against the finest one, on the
/// coarsest grid.
pub fn self_convergence(
    instance: &ProblemInstance,
    base_cfg: &SchemeConfig,
    levels: usize,
) -> Result<ConvergenceTable> {
    check_levels(levels)?;
    base_cfg.validate(instance.params.horizon)?;
    let runs = run_levels(instance, base_cfg, levels)?;
    let finest = runs.last().expect("levels >= 3");
    let fine_values = &finest.final_profile().values;
    let fine_step = 1usize << (levels - 1);
    let m = base_cfg.intervals;
    let rows = runs[..levels - 1]
        .iter()
        .enumerate()
        .map(|(l, r)| {
            let values = &r.final_profile().values;
            let step = 1usize << l;
            ConvergenceLevel {
                level: l,
                intervals: r.intervals,
                dt: r.dt,
                profile_error: l2_on_grid(m, |j, _| values[j * step] - fine_values[j * fine_step]),
                front_error: (r.final_front() - finest.final_front()).abs(),
                profile_ratio: None,
                front_ratio: None,
            }
        })
        .collect();
    Ok(ConvergenceTable::new(
        StudyMode::SelfConvergence,
        base_cfg.coupling,
        rows,
    ))
}

/// Manufactured pair `s(t) = s0 + rate t`, `ũ(t, y) = c + amplitude t y²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedPair {
    pub s0: f64,
    pub rate: f64,
    pub c: f64,
    pub amplitude: f64,
}

impl ManufacturedPair {
    pub fn s(&self, t: f64) -> f64 {
        self.s0 + self.rate * t
    }

    pub fn u(&self, t: f64, y: f64) -> f64 {
        self.c + self.amplitude * t * y * y
    }
}

/// Source terms that make a [`ManufacturedPair`] solve the forced system.
#[derive(Debug, Clone)]
pub struct ManufacturedForcing {
    pair: ManufacturedPair,
    instance: ProblemInstance,
}

impl ManufacturedForcing {
    pub fn new(pair: ManufacturedPair, instance: &ProblemInstance) -> Self {
        Self {
            pair,
            instance: instance.clone(),
        }
    }

    fn len(&self, t: f64) -> f64 {
        self.pair.s(t) - self.instance.params.a
    }
}

impl Forcing for ManufacturedForcing {
    fn interior(&self, t: f64, y: f64) -> f64 {
        let q = &self.pair;
        let l = self.len(t);
        let k = self.instance.params.k;
        let u_t = q.amplitude * y * y;
        let u_y = 2.0 * q.amplitude * t * y;
        let u_yy = 2.0 * q.amplitude * t;
        u_t - k / (l * l) * u_yy - y * q.rate / l * u_y
    }

    fn left_flux(&self, t: f64) -> f64 {
        // ũ_y(t, 0) = 0
        -self.instance.inflow(t, self.pair.u(t, 0.0))
    }

    fn front_flux(&self, t: f64) -> f64 {
        let q = &self.pair;
        let k = self.instance.params.k;
        -k / self.len(t) * 2.0 * q.amplitude * t - q.u(t, 1.0) * q.rate
    }

    fn front_law(&self, t: f64) -> f64 {
        let q = &self.pair;
        q.rate - self.instance.front_speed(q.u(t, 1.0), q.s(t))
    }
}

/// Instance whose initial data matches the manufactured pair at `t = 0`.
pub fn manufactured_instance(base: &ProblemInstance, pair: &ManufacturedPair) -> Result<ProblemInstance> {
    let mut inst = base.clone();
    inst.init = crate::model::InitialData::new(
        pair.s0,
        crate::model::InitialProfile::Constant { value: pair.c },
        &inst.phi,
        inst.params.a,
    )?;
    Ok(inst)
}

/// Refinement study against a manufactured exact pair. The instance supplies
/// the coefficients; its initial data is replaced by the pair at `t = 0`.
pub fn run_mms(
    instance: &ProblemInstance,
    cfg: &SchemeConfig,
    pair: &ManufacturedPair,
    levels: usize,
) -> Result<ConvergenceTable> {
    check_levels(levels)?;
    let horizon = instance.params.horizon;
    if !(pair.s(horizon).min(pair.s0) > instance.params.a) {
        return Err(Error::InvalidParameter(
            "the manufactured front must stay to the right of a".into(),
        ));
    }
    let inst = manufactured_instance(instance, pair)?;
    let forced = cfg
        .clone()
        .with_forcing(Arc::new(ManufacturedForcing::new(*pair, &inst)));
    forced.validate(horizon)?;
    let runs = run_levels(&inst, &forced, levels)?;
    let rows = runs
        .iter()
        .enumerate()
        .map(|(l, r)| {
            let values = &r.final_profile().values;
            let t = *r.times.last().expect("nonempty run");
            ConvergenceLevel {
                level: l,
                intervals: r.intervals,
                dt: r.dt,
                profile_error: l2_on_grid(r.intervals, |j, y| values[j] - pair.u(t, y)),
                front_error: (r.final_front() - pair.s(t)).abs(),
                profile_ratio: None,
                front_ratio: None,
            }
        })
        .collect();
    Ok(ConvergenceTable::new(StudyMode::Mms, cfg.coupling, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_ramp, InitialData, InitialProfile, ModelParams, MoistureHistory};
    use crate::verify::energy_diagnostic;

    const PHI_S0: f64 = 0.84375;

    fn instance(h: f64) -> ProblemInstance {
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
            init: InitialData::new(1.5, InitialProfile::Constant { value: PHI_S0 }, &phi, 1.0)
                .unwrap(),
            phi,
            moisture: MoistureHistory::constant(h, 1.0).unwrap(),
        }
    }

    fn pair(rate: f64, amplitude: f64) -> ManufacturedPair {
        ManufacturedPair {
            s0: 1.5,
            rate,
            c: PHI_S0,
            amplitude,
        }
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in [StudyMode::SelfConvergence, StudyMode::Mms] {
            assert_eq!(mode.as_str().parse::<StudyMode>().unwrap(), mode);
        }
        assert!(matches!("fast".parse::<StudyMode>(), Err(Error::Config(_))));
    }

    #[test]
    fn too_few_levels_are_rejected() {
        let inst = instance(1.2);
        let cfg = SchemeConfig::new(20, 1e-3);
        assert!(matches!(self_convergence(&inst, &cfg, 2), Err(Error::InvalidParameter(_))));
        assert!(matches!(run_mms(&inst, &cfg, &pair(0.1, 1.0), 2), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn manufactured_forcing_matches_hand_values() {
        let inst = instance(1.2);
        let q = pair(0.1, 1.0);
        let f = ManufacturedForcing::new(q, &inst);
        // t = 1, y = 0.5: L = 0.6, ũ_t = 0.25, ũ_y = 1, ũ_yy = 2
        let expected = 0.25 - 2.0 / 0.36 - 0.5 * 0.1 / 0.6;
        assert!((f.interior(1.0, 0.5) - expected).abs() < 1e-12);
        let front = -2.0 / 0.6 - (PHI_S0 + 1.0) * 0.1;
        assert!((f.front_flux(1.0) - front).abs() < 1e-12);
        let law = 0.1 - (PHI_S0 + 1.0 - inst.phi.eval(1.6));
        assert!((f.front_law(1.0) - law).abs() < 1e-12);
    }

    #[test]
    fn constant_pair_is_reproduced_exactly() {
        let inst = instance(1.2);
        let q = pair(0.0, 0.0);
        let f = ManufacturedForcing::new(q, &inst);
        assert_eq!(f.interior(0.3, 0.7), 0.0);
        assert_eq!(f.front_flux(0.3), 0.0);
        assert_eq!(f.front_law(0.3), 0.0);
        let cfg = SchemeConfig::new(20, 4e-3).with_coupling(Coupling::IteratedCoupling);
        let table = run_mms(&inst, &cfg, &q, 3).unwrap();
        assert!(table.pass);
        assert!(table.levels.iter().all(ConvergenceLevel::exact), "{}", table.to_csv());

        let forced = cfg.with_stride(25).with_forcing(Arc::new(f));
        let r = simulate(&manufactured_instance(&inst, &q).unwrap(), &forced).unwrap();
        let e = energy_diagnostic(&r, &inst);
        assert!(e.values.iter().all(|&v| (v - e.values[0]).abs() <= 1e-20));
    }

    #[test]
    fn mms_ratios_reach_first_order() {
        let inst = instance(1.2);
        let cfg = SchemeConfig::new(20, 4e-3).with_coupling(Coupling::IteratedCoupling);
        let table = run_mms(&inst, &cfg, &pair(0.1, 1.0), 3).unwrap();
        assert!(table.pass, "{}", table.to_csv());
        assert_eq!(table.coupling, Coupling::IteratedCoupling);
        for l in &table.levels[1..] {
            assert!(l.profile_ratio.unwrap() >= MMS_MIN_RATIO);
            assert!(l.front_ratio.unwrap() >= MMS_MIN_RATIO);
        }
    }

    #[test]
    fn front_must_stay_right_of_a() {
        let inst = instance(1.2);
        let cfg = SchemeConfig::new(20, 4e-3);
        assert!(matches!(
            run_mms(&inst, &cfg, &pair(-0.6, 0.0), 3),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn stationary_self_convergence_is_exact() {
        let table = self_convergence(&instance(PHI_S0), &SchemeConfig::new(25, 1e-3), 3).unwrap();
        assert!(table.pass);
        assert_eq!(table.levels.len(), 2);
        assert!(table.levels.iter().all(ConvergenceLevel::exact), "{}", table.to_csv());
        assert!(table.to_csv().lines().skip(1).all(|l| l.ends_with(",true")));
    }

    #[test]
    fn canonical_self_convergence_passes() {
        let table = self_convergence(&instance(1.2), &SchemeConfig::new(25, 1e-3), 3).unwrap();
        assert!(table.pass, "{}", table.to_csv());
        let csv = table.to_csv();
        assert!(csv.starts_with("level,intervals,dt,profile_error,front_error,"));
        assert_eq!(csv.lines().count(), 3);
        let order = table.levels[1].front_order().unwrap();
        assert!(order >= SELF_FRONT_MIN_ORDER, "{csv}");
    }
}
