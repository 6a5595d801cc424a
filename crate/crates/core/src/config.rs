//! TOML problem files.
//!
//! ```toml
//! [params]
//! a = 1.0
//! a0 = 1.0
//! H = 1.0
//! k = 1.0
//! T = 1.0
//!
//! [beta]            # adsorption ramp
//! r_threshold = 1.0
//! plateau = 1.0
//!
//! [phi]             # breaking ramp
//! r_threshold = 2.0
//! plateau = 1.0
//!
//! [moisture]        # constant | linear | sine | table
//! kind = "constant"
//! value = 1.2
//!
//! [init]            # constant | affine | samples | equilibrium
//! kind = "constant"
//! s0 = 1.5
//! value = 0.84375
//!
//! [scheme]          # optional
//! intervals = 200
//! dt = 1e-4
//! coupling = "explicit-front"   # or "iterated-coupling"
//! stride = 100
//! newton_tol = 1e-12
//! newton_max_iter = 50
//!
//! [oracle]          # optional resolution override for `compare`
//! intervals = 200
//! dt = 1e-4
//!
//! [mms]             # optional manufactured pair for `convergence --mode mms`
//! rate = 0.1
//! amplitude = 1.0
//! c = 0.84375       # defaults to phi(s0)
//! ```
//!
//! Moisture kinds take `value`; `start`, `end` (value at `T`); `offset`,
//! `amplitude`, `omega`, `phase`; or `times`, `values`. Initial kinds take
//! `value`; `left`, `right`; `values` (uniform samples over `[a, s0]`); or
//! nothing (`equilibrium` sets `u0 ≡ φ(s0)`).

use std::path::Path;

use serde::Deserialize;

use crate::convergence::ManufacturedPair;
use crate::error::{Error, Result};
use crate::model::{
    make_ramp, InitialData, InitialProfile, ModelParams, MoistureHistory, MoistureKind,
    ProblemInstance,
};
use crate::result::{Coupling, SchemeConfig};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    params: RawParams,
    beta: RawRamp,
    phi: RawRamp,
    moisture: MoistureKind,
    init: RawInit,
    scheme: Option<RawScheme>,
    oracle: Option<RawOracle>,
    mms: Option<RawMms>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    a: f64,
    a0: f64,
    #[serde(rename = "H")]
    henry: f64,
    k: f64,
    #[serde(rename = "T")]
    horizon: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRamp {
    r_threshold: f64,
    plateau: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawInit {
    Constant { s0: f64, value: f64 },
    Affine { s0: f64, left: f64, right: f64 },
    Samples { s0: f64, values: Vec<f64> },
    Equilibrium { s0: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheme {
    intervals: Option<usize>,
    dt: Option<f64>,
    coupling: Option<Coupling>,
    stride: Option<usize>,
    newton_tol: Option<f64>,
    newton_max_iter: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOracle {
    intervals: Option<usize>,
    dt: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMms {
    rate: Option<f64>,
    amplitude: Option<f64>,
    c: Option<f64>,
}

/// A parsed problem file together with its verbatim text.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub text: String,
    pub instance: ProblemInstance,
    pub scheme: SchemeConfig,
    /// Resolution for the oracle in comparisons; equal to `scheme` unless
    /// overridden.
    pub oracle_scheme: SchemeConfig,
    pub manufactured: ManufacturedPair,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let config_err = |e: Error| Error::Config(e.to_string());

        let p = raw.params;
        let params = ModelParams {
            a: p.a,
            a0: p.a0,
            henry: p.henry,
            k: p.k,
            horizon: p.horizon,
        };
        let beta = make_ramp(raw.beta.r_threshold, raw.beta.plateau)
            .map_err(|e| Error::Config(format!("[beta] {e}")))?;
        let phi = make_ramp(raw.phi.r_threshold, raw.phi.plateau)
            .map_err(|e| Error::Config(format!("[phi] {e}")))?;
        let moisture = MoistureHistory::new(raw.moisture, params.horizon)
            .map_err(|e| Error::Config(format!("[moisture] {e}")))?;
        let (s0, u0) = match raw.init {
            RawInit::Constant { s0, value } => (s0, InitialProfile::Constant { value }),
            RawInit::Affine { s0, left, right } => (s0, InitialProfile::Affine { left, right }),
            RawInit::Samples { s0, values } => (s0, InitialProfile::Samples { values }),
            RawInit::Equilibrium { s0 } => (
                s0,
                InitialProfile::Constant {
                    value: phi.eval(s0),
                },
            ),
        };
        let init = InitialData::new(s0, u0, &phi, params.a)
            .map_err(|e| Error::Config(format!("[init] {e}")))?;
        let instance = ProblemInstance {
            params,
            beta,
            phi,
            moisture,
            init,
        };

        let mut scheme = SchemeConfig::default();
        if let Some(s) = raw.scheme {
            scheme.intervals = s.intervals.unwrap_or(scheme.intervals);
            scheme.dt = s.dt.unwrap_or(scheme.dt);
            scheme.coupling = s.coupling.unwrap_or(scheme.coupling);
            scheme.stride = s.stride.unwrap_or(scheme.stride);
            scheme.boundary_newton_tol = s.newton_tol.unwrap_or(scheme.boundary_newton_tol);
            scheme.boundary_newton_max_iter =
                s.newton_max_iter.unwrap_or(scheme.boundary_newton_max_iter);
        }
        if params.horizon > 0.0 {
            scheme.validate(params.horizon).map_err(config_err)?;
        }
        let mut oracle_scheme = scheme.clone();
        if let Some(o) = raw.oracle {
            oracle_scheme.intervals = o.intervals.unwrap_or(oracle_scheme.intervals);
            oracle_scheme.dt = o.dt.unwrap_or(oracle_scheme.dt);
            if params.horizon > 0.0 {
                oracle_scheme.validate(params.horizon).map_err(config_err)?;
            }
        }

        let mms = raw.mms.unwrap_or(RawMms {
            rate: None,
            amplitude: None,
            c: None,
        });
        let manufactured = ManufacturedPair {
            s0,
            rate: mms.rate.unwrap_or(0.1),
            c: mms.c.unwrap_or_else(|| instance.phi.eval(s0)),
            amplitude: mms.amplitude.unwrap_or(1.0),
        };

        Ok(Self {
            text: text.to_string(),
            instance,
            scheme,
            oracle_scheme,
            manufactured,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Sets the value at a dotted path such as `params.a0`. Intermediate tables
/// must exist.
pub fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let mut parts = path.split('.').peekable();
    let mut cur = table;
    while let Some(key) = parts.next() {
        if parts.peek().is_none() {
            cur.insert(key.to_string(), value);
            return Ok(());
        }
        cur = cur
            .get_mut(key)
            .and_then(toml::Value::as_table_mut)
            .ok_or_else(|| Error::Config(format!("`{path}`: no table `{key}`")))?;
    }
    Err(Error::Config("empty parameter path".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANONICAL: &str = r#"
[params]
a = 1.0
a0 = 1.0
H = 1.0
k = 1.0
T = 1.0

[beta]
r_threshold = 1.0
plateau = 1.0

[phi]
r_threshold = 2.0
plateau = 1.0

[moisture]
kind = "constant"
value = 1.2

[init]
kind = "constant"
s0 = 1.5
value = 0.84375
"#;

    #[test]
    fn parses_canonical() {
        let c = RunConfig::parse(CANONICAL).unwrap();
        assert_eq!(c.instance.params.a0, 1.0);
        assert_eq!(c.instance.moisture.sup_norm(), 1.2);
        assert_eq!(c.instance.init.s0(), 1.5);
        assert_eq!(c.scheme.intervals, 200);
        assert_eq!(c.scheme.dt, 1e-4);
        assert_eq!(c.oracle_scheme.intervals, 200);
        assert_eq!(c.manufactured.c, 0.84375);
        assert_eq!(c.text, CANONICAL);
        assert!(crate::model::validate_assumptions(&c.instance).all_pass());
    }

    #[test]
    fn equilibrium_init_and_scheme_overrides() {
        let text = CANONICAL
            .replace("kind = \"constant\"\ns0 = 1.5\nvalue = 0.84375", "kind = \"equilibrium\"\ns0 = 1.5")
            + "\n[scheme]\nintervals = 50\ncoupling = \"iterated-coupling\"\n[oracle]\ndt = 2e-4\n";
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(c.instance.init.u0(), &InitialProfile::Constant { value: 0.84375 });
        assert_eq!(c.scheme.intervals, 50);
        assert_eq!(c.scheme.coupling, Coupling::IteratedCoupling);
        assert_eq!(c.oracle_scheme.intervals, 50);
        assert_eq!(c.oracle_scheme.dt, 2e-4);
    }

    #[test]
    fn moisture_kinds() {
        for (body, sup) in [
            ("kind = \"linear\"\nstart = 1.0\nend = 0.0", 1.0),
            ("kind = \"sine\"\noffset = 1.0\namplitude = 0.5\nomega = 6.283185307179586", 1.5),
            ("kind = \"table\"\ntimes = [0.0, 0.5, 1.0]\nvalues = [1.0, 2.0, 1.5]", 2.0),
        ] {
            let text = CANONICAL.replace("kind = \"constant\"\nvalue = 1.2", body);
            let c = RunConfig::parse(&text).unwrap();
            assert!((c.instance.moisture.sup_norm() - sup).abs() < 1e-12, "{body}");
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(RunConfig::parse("[params]\na = 1"), Err(Error::Config(_))));
        let typo = CANONICAL.replace("a0 = 1.0", "a_0 = 1.0");
        assert!(matches!(RunConfig::parse(&typo), Err(Error::Config(_))));
        let bad_ramp = CANONICAL.replace("r_threshold = 1.0", "r_threshold = -1.0");
        assert!(matches!(RunConfig::parse(&bad_ramp), Err(Error::Config(_))));
        let bad_scheme = format!("{CANONICAL}\n[scheme]\nintervals = 4\n");
        assert!(matches!(RunConfig::parse(&bad_scheme), Err(Error::Config(_))));
        let short_table = CANONICAL.replace(
            "kind = \"constant\"\nvalue = 1.2",
            "kind = \"table\"\ntimes = [0.0, 0.5]\nvalues = [1.0, 1.0]",
        );
        assert!(matches!(RunConfig::parse(&short_table), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_physics_still_parses() {
        // A4 compatibility is a validation matter, not a parse error
        let text = CANONICAL.replace("r_threshold = 2.0", "r_threshold = 2.5");
        let c = RunConfig::parse(&text).unwrap();
        let report = crate::model::validate_assumptions(&c.instance);
        assert!(!report.check("A4_compatibility").unwrap().pass);
    }

    #[test]
    fn set_path_edits_nested_values() {
        let mut table: toml::Table = toml::from_str(CANONICAL).unwrap();
        set_path(&mut table, "params.a0", toml::Value::Float(2.0)).unwrap();
        assert!(set_path(&mut table, "nothing.x", toml::Value::Float(2.0)).is_err());
        let c = RunConfig::parse(&toml::to_string(&table).unwrap()).unwrap();
        assert_eq!(c.instance.params.a0, 2.0);
    }
}
