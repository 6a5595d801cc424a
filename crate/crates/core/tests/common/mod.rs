#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use swellfront::{
    make_ramp, InitialData, InitialProfile, ModelParams, MoistureHistory, MoistureKind,
    ProblemInstance,
};

pub const CANONICAL_TOML: &str = r#"
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

[scheme]
intervals = 200
dt = 1e-4
stride = 100
"#;

/// φ(1.5) for the ramp with threshold 2 and plateau 1.
pub const PHI_S0: f64 = 0.84375;

pub struct Spec {
    pub a0: f64,
    pub henry: f64,
    pub k: f64,
    pub c0: f64,
    pub s0: f64,
    pub moisture: MoistureKind,
    pub u0: InitialProfile,
    pub horizon: f64,
}

impl Default for Spec {
    fn default() -> Self {
        Self {
            a0: 1.0,
            henry: 1.0,
            k: 1.0,
            c0: 1.0,
            s0: 1.5,
            moisture: MoistureKind::Constant { value: 1.2 },
            u0: InitialProfile::Constant { value: PHI_S0 },
            horizon: 1.0,
        }
    }
}

impl Spec {
    pub fn build(&self) -> ProblemInstance {
        let phi = make_ramp(2.0, self.c0).unwrap();
        ProblemInstance {
            params: ModelParams {
                a: 1.0,
                a0: self.a0,
                henry: self.henry,
                k: self.k,
                horizon: self.horizon,
            },
            beta: make_ramp(1.0, 1.0).unwrap(),
            init: InitialData::new(self.s0, self.u0.clone(), &phi, 1.0).unwrap(),
            phi,
            moisture: MoistureHistory::new(self.moisture.clone(), self.horizon).unwrap(),
        }
    }
}

pub fn canonical() -> ProblemInstance {
    Spec::default().build()
}

/// `h ≡ H φ(s0)`, `u0 ≡ φ(s0)`.
pub fn stationary() -> ProblemInstance {
    Spec {
        moisture: MoistureKind::Constant { value: PHI_S0 },
        ..Spec::default()
    }
    .build()
}

/// Zero inflow after a short wet start, affine `u0` rising to `φ(s0)`.
pub fn receding() -> ProblemInstance {
    Spec {
        moisture: MoistureKind::Table {
            times: vec![0.0, 0.02, 1.0],
            values: vec![1.2, 0.0, 0.0],
        },
        u0: InitialProfile::Affine { left: 0.7, right: PHI_S0 },
        ..Spec::default()
    }
    .build()
}

/// Valid instances varying a0, H, k, c0, s0, the moisture shape and u0,
/// several with receding fronts.
pub fn battery() -> Vec<(String, ProblemInstance)> {
    use InitialProfile as U;
    use MoistureKind as M;
    let lin = |start: f64, end: f64| M::Linear { start, end };
    let cases: Vec<(&str, Spec)> = vec![
        ("canonical", Spec::default()),
        ("a0=0.5", Spec { a0: 0.5, ..Spec::default() }),
        ("a0=2", Spec { a0: 2.0, ..Spec::default() }),
        ("a0=4", Spec { a0: 4.0, ..Spec::default() }),
        ("H=0.8", Spec { henry: 0.8, ..Spec::default() }),
        ("H=1.1,h=1.5", Spec { henry: 1.1, moisture: M::Constant { value: 1.5 }, ..Spec::default() }),
        ("k=0.5", Spec { k: 0.5, ..Spec::default() }),
        ("k=2", Spec { k: 2.0, ..Spec::default() }),
        ("h=2", Spec { moisture: M::Constant { value: 2.0 }, ..Spec::default() }),
        ("h linear up", Spec { moisture: lin(0.0, 1.5), ..Spec::default() }),
        ("h linear down", Spec { moisture: lin(1.2, 0.0), ..Spec::default() }),
        (
            "h sine",
            Spec {
                moisture: M::Sine { offset: 0.9, amplitude: 0.4, omega: 12.0, phase: 0.0 },
                ..Spec::default()
            },
        ),
        (
            "h table pulse",
            Spec {
                moisture: M::Table { times: vec![0.0, 0.3, 0.4, 1.0], values: vec![0.2, 0.2, 1.4, 0.6] },
                ..Spec::default()
            },
        ),
        ("u0=0.6", Spec { u0: U::Constant { value: 0.6 }, ..Spec::default() }),
        ("u0 affine", Spec { u0: U::Affine { left: 0.55, right: 0.8 }, ..Spec::default() }),
        ("u0 decreasing", Spec { u0: U::Affine { left: 0.84, right: 0.6 }, ..Spec::default() }),
        (
            "u0 samples",
            Spec { u0: U::Samples { values: vec![0.6, 0.8, 0.7, 0.84375] }, ..Spec::default() },
        ),
        ("c0=0.8", Spec { c0: 0.8, u0: U::Constant { value: 0.6 }, ..Spec::default() }),
        ("s0=1.2", Spec { s0: 1.2, u0: U::Constant { value: 0.6 }, ..Spec::default() }),
        ("s0=1.8", Spec { s0: 1.8, u0: U::Constant { value: 0.9 }, ..Spec::default() }),
        (
            "receding dry",
            Spec {
                moisture: M::Table { times: vec![0.0, 0.02, 1.0], values: vec![1.2, 0.0, 0.0] },
                u0: U::Affine { left: 0.7, right: PHI_S0 },
                ..Spec::default()
            },
        ),
        (
            "receding dry a0=2 k=0.5",
            Spec {
                a0: 2.0,
                k: 0.5,
                moisture: M::Table { times: vec![0.0, 0.01, 1.0], values: vec![1.0, 0.0, 0.0] },
                u0: U::Affine { left: 0.6, right: 0.8 },
                ..Spec::default()
            },
        ),
        (
            "receding late wetting",
            Spec {
                moisture: M::Table { times: vec![0.0, 0.05, 0.8, 1.0], values: vec![1.0, 0.0, 0.0, 1.0] },
                u0: U::Constant { value: 0.6 },
                ..Spec::default()
            },
        ),
        (
            "receding H=0.8 k=2",
            Spec {
                henry: 0.8,
                k: 2.0,
                moisture: lin(0.9, 0.0),
                u0: U::Affine { left: 0.65, right: 0.75 },
                ..Spec::default()
            },
        ),
    ];
    cases
        .into_iter()
        .map(|(name, spec)| (name.to_string(), spec.build()))
        .collect()
}

/// Every file under `dir` (recursively) except those named `skip`, keyed by
/// relative path.
pub fn tree_contents(dir: &Path, skip: &str) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, skip: &str, out: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, skip, out);
            } else if p.file_name().unwrap() != skip {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, skip, &mut out);
    out
}
