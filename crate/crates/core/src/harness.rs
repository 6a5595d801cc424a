//! Orchestration behind the `swellfront` command line tool: run directories
//! with hashed manifests, solver comparison, sweeps, convergence tables and
//! plot data.
//!
//! Every command returns a process exit code:
//!
//! | code | meaning                                                    |
//! |------|------------------------------------------------------------|
//! | 0    | success                                                    |
//! | 1    | verification, comparison, convergence or sweep failure     |
//! | 2    | usage or config error (unreadable, malformed, bad scheme)  |
//! | 3    | the instance violates a standing assumption                |
//! | 4    | the solver failed (front collapse, boundary solve, ...)    |
//! | 5    | run directory incomplete or tampered (hash mismatch)       |
//!
//! `SWELLFRONT_SEED` is reserved and ignored: nothing here is random.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{set_path, RunConfig};
use crate::convergence::{run_mms, self_convergence, ConvergenceTable, StudyMode};
use crate::error::{Error, Result};
use crate::frontfix;
use crate::landau::{interp_uniform, to_physical, FixedProfile};
use crate::model::validate_assumptions;
use crate::oracle;
use crate::result::{Coupling, RunResult, SolverKind};
use crate::verify::{verify, VerificationReport, VerificationThresholds};

pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const INVALID: i32 = 3;
    pub const SOLVER: i32 = 4;
    pub const TAMPERED: i32 = 5;
}

pub const CONFIG_FILE: &str = "config.toml";
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const RESULT_FILE: &str = "result.json";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";
/// Wall-clock record, kept apart from the manifest so that manifests stay
/// byte-identical across repeated runs.
pub const TIMING_FILE: &str = "timing.json";
pub const SWEEP_INDEX_FILE: &str = "sweep_index.csv";
pub const DEFAULT_SWEEP_CAP: usize = 10_000;
/// Cross-solver front distance allowed, as a fraction of `s0 - a`.
pub const EQUIVALENCE_FRACTION: f64 = 0.01;

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Io(_) | Error::Json(_) => exit::USAGE,
        Error::InvalidInstance(_) | Error::AssumptionViolation(_) | Error::NoInverse { .. } => {
            exit::INVALID
        }
        Error::FrontCollapse { .. }
        | Error::BoundarySolve { .. }
        | Error::Scheme(_)
        | Error::DegenerateDomain { .. } => exit::SOLVER,
        Error::Integrity(_) => exit::TAMPERED,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub pass: bool,
    pub worst_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub overall_pass: bool,
    pub checks: Vec<CheckSummary>,
}

impl From<&VerificationReport> for VerificationSummary {
    fn from(r: &VerificationReport) -> Self {
        Self {
            overall_pass: r.overall_pass,
            checks: r
                .checks
                .iter()
                .map(|c| CheckSummary {
                    name: c.name.clone(),
                    pass: c.pass,
                    worst_violation: c.worst_violation,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub solver: SolverKind,
    pub stride: usize,
    pub allow_invalid: bool,
    /// Problem file, verbatim.
    pub config: String,
    pub outputs: Vec<OutputEntry>,
    /// Absent when the thresholds are undefined for the instance.
    pub verification: Option<VerificationSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub solver: SolverKind,
    pub stride: Option<usize>,
    /// Skip the assumption gate.
    pub allow_invalid: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            solver: SolverKind::Frontfix,
            stride: None,
            allow_invalid: false,
        }
    }
}

/// Runs the chosen solver on a parsed problem file.
pub fn execute(cfg: &RunConfig, opts: &RunOptions) -> Result<RunResult> {
    if !opts.allow_invalid {
        let report = validate_assumptions(&cfg.instance);
        if !report.all_pass() {
            return Err(Error::InvalidInstance(report));
        }
    }
    let mut scheme = cfg.scheme.clone();
    if let Some(stride) = opts.stride {
        scheme.stride = stride;
    }
    match opts.solver {
        SolverKind::Frontfix => frontfix::simulate(&cfg.instance, &scheme),
        SolverKind::Oracle => oracle::simulate_oracle(&cfg.instance, &scheme),
    }
}

/// Writes the artifacts of one run and its manifest into `dir`.
pub fn write_run_dir(
    dir: &Path,
    cfg: &RunConfig,
    result: &RunResult,
    allow_invalid: bool,
) -> Result<(RunManifest, Option<VerificationReport>)> {
    fs::create_dir_all(dir)?;
    let report = verify(result, &cfg.instance).ok();
    let files: Vec<(&str, Vec<u8>)> = vec![
        (CONFIG_FILE, cfg.text.clone().into_bytes()),
        (TIMESERIES_FILE, result.to_csv().into_bytes()),
        (RESULT_FILE, result.to_json()?.into_bytes()),
        (
            REPORT_FILE,
            match &report {
                Some(r) => r.to_json()?,
                None => "null".to_string(),
            }
            .into_bytes(),
        ),
    ];
    let mut outputs = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        fs::write(dir.join(name), &bytes)?;
        outputs.push(OutputEntry {
            path: name.to_string(),
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        solver: result.solver,
        stride: result.stride,
        allow_invalid,
        config: cfg.text.clone(),
        outputs,
        verification: report.as_ref().map(VerificationSummary::from),
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok((manifest, report))
}

/// Loads a run directory after checking every recorded hash.
pub fn read_run_dir(dir: &Path) -> Result<(RunManifest, RunConfig, RunResult)> {
    let integrity = |msg: String| Error::Integrity(format!("{}: {msg}", dir.display()));
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))
        .map_err(|e| integrity(format!("cannot read {MANIFEST_FILE}: {e}")))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| integrity(format!("malformed {MANIFEST_FILE}: {e}")))?;
    for required in [CONFIG_FILE, TIMESERIES_FILE, RESULT_FILE] {
        if !manifest.outputs.iter().any(|o| o.path == required) {
            return Err(integrity(format!("manifest does not list {required}")));
        }
    }
    for entry in &manifest.outputs {
        if entry.path.contains(['/', '\\']) || entry.path.starts_with('.') {
            return Err(integrity(format!("unexpected output path {}", entry.path)));
        }
        let bytes = fs::read(dir.join(&entry.path))
            .map_err(|e| integrity(format!("cannot read {}: {e}", entry.path)))?;
        let actual = sha256_hex(&bytes);
        if actual != entry.sha256 {
            return Err(integrity(format!(
                "hash mismatch for {}: manifest {}, file {actual}",
                entry.path, entry.sha256
            )));
        }
    }
    let config_text = fs::read_to_string(dir.join(CONFIG_FILE))?;
    if config_text != manifest.config {
        return Err(integrity(format!("{CONFIG_FILE} differs from the manifest echo")));
    }
    let cfg = RunConfig::parse(&config_text)?;
    let result = RunResult::from_json(&fs::read_to_string(dir.join(RESULT_FILE))?)
        .map_err(|e| integrity(format!("{RESULT_FILE}: {e}")))?;
    Ok((manifest, cfg, result))
}

fn report_error(err: &mut dyn Write, e: &Error) -> i32 {
    let _ = writeln!(err, "error: {e}");
    exit_code(e)
}

pub fn cmd_run(
    config: &Path,
    out_dir: &Path,
    opts: &RunOptions,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => return report_error(err, &e),
    };
    let start = Instant::now();
    let result = match execute(&cfg, opts) {
        Ok(r) => r,
        Err(e) => return report_error(err, &e),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let report = match write_run_dir(out_dir, &cfg, &result, opts.allow_invalid) {
        Ok((_, report)) => report,
        Err(e) => return report_error(err, &e),
    };
    let timing = serde_json::json!({ "wall_clock_seconds": elapsed });
    if let Err(e) = fs::write(out_dir.join(TIMING_FILE), timing.to_string()) {
        return report_error(err, &e.into());
    }
    let (excursion, status) = match &report {
        Some(r) => (
            r.worst_bound_excursion().to_string(),
            if r.overall_pass { "pass" } else { "fail" },
        ),
        None => ("n/a".into(), "n/a"),
    };
    let _ = writeln!(
        out,
        "solver={} final_s={} worst_bound_excursion={} verification={} wall_clock_s={:.3} out={}",
        result.solver.as_str(),
        result.final_front(),
        excursion,
        status,
        elapsed,
        out_dir.display()
    );
    exit::OK
}

pub fn cmd_verify(run_dir: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (_, cfg, result) = match read_run_dir(run_dir) {
        Ok(x) => x,
        Err(e) => return report_error(err, &e),
    };
    let report = match verify(&result, &cfg.instance) {
        Ok(r) => r,
        Err(e) => return report_error(err, &e),
    };
    let _ = write!(out, "{}", report.summary());
    let json = match report.to_json() {
        Ok(j) => j,
        Err(e) => return report_error(err, &e),
    };
    if let Err(e) = fs::write(run_dir.join("verification.json"), json) {
        return report_error(err, &e.into());
    }
    if report.overall_pass {
        exit::OK
    } else {
        let _ = writeln!(err, "failing checks: {}", report.failing().join(", "));
        exit::FAILED
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    /// `max_t |s_frontfix(t) - s_oracle(t)|`, with the oracle interpolated
    /// linearly in time onto the front-fixing levels.
    pub front_distance: f64,
    /// Discrete L² distance of the final `ũ` on the front-fixing grid.
    pub profile_distance: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub warning: Option<String>,
}

fn interp_in_time(times: &[f64], values: &[f64], t: f64) -> f64 {
    let n = times.len() - 1;
    if t <= times[0] {
        return values[0];
    }
    if t >= times[n] {
        return values[n];
    }
    let i = times.partition_point(|&x| x <= t) - 1;
    let w = (t - times[i]) / (times[i + 1] - times[i]);
    values[i] + w * (values[i + 1] - values[i])
}

pub fn compare_runs(frontfix: &RunResult, oracle: &RunResult, s0_gap: f64) -> Comparison {
    let front_distance = frontfix
        .times
        .iter()
        .zip(&frontfix.fronts)
        .map(|(&t, &s)| (s - interp_in_time(&oracle.times, &oracle.fronts, t)).abs())
        .fold(0.0, f64::max);
    let ff = &frontfix.final_profile().values;
    let or = &oracle.final_profile().values;
    let m = ff.len() - 1;
    let sum: f64 = (0..=m)
        .map(|j| {
            let w = if j == 0 || j == m { 0.5 } else { 1.0 };
            let y = j as f64 / m as f64;
            w * (ff[j] - interp_uniform(or, y)).powi(2)
        })
        .sum();
    let tolerance = EQUIVALENCE_FRACTION * s0_gap;
    let warning = (frontfix.intervals != oracle.intervals
        || (frontfix.dt - oracle.dt).abs() > 1e-12 * frontfix.dt)
        .then(|| {
            format!(
                "resolutions differ: frontfix M={} dt={}, oracle M={} dt={}",
                frontfix.intervals, frontfix.dt, oracle.intervals, oracle.dt
            )
        });
    Comparison {
        front_distance,
        profile_distance: (sum / m as f64).sqrt(),
        tolerance,
        pass: front_distance <= tolerance,
        warning,
    }
}

/// Runs both solvers on the problem file and compares them.
pub fn compare(cfg: &RunConfig, allow_invalid: bool) -> Result<Comparison> {
    if !allow_invalid {
        let report = validate_assumptions(&cfg.instance);
        if !report.all_pass() {
            return Err(Error::InvalidInstance(report));
        }
    }
    let (ff, or) = rayon::join(
        || frontfix::simulate(&cfg.instance, &cfg.scheme),
        || oracle::simulate_oracle(&cfg.instance, &cfg.oracle_scheme),
    );
    let gap = cfg.instance.init.s0() - cfg.instance.params.a;
    Ok(compare_runs(&ff?, &or?, gap))
}

pub fn cmd_compare(
    config: &Path,
    allow_invalid: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => return report_error(err, &e),
    };
    if cfg.scheme.intervals != cfg.oracle_scheme.intervals || cfg.scheme.dt != cfg.oracle_scheme.dt {
        let _ = writeln!(
            err,
            "warning: mismatched resolutions (frontfix M={} dt={}, oracle M={} dt={}); comparing anyway",
            cfg.scheme.intervals, cfg.scheme.dt, cfg.oracle_scheme.intervals, cfg.oracle_scheme.dt
        );
    }
    let c = match compare(&cfg, allow_invalid) {
        Ok(c) => c,
        Err(e) => return report_error(err, &e),
    };
    let _ = writeln!(
        out,
        "front_distance={} profile_l2_distance={} tolerance={} {}",
        c.front_distance,
        c.profile_distance,
        c.tolerance,
        if c.pass { "PASS" } else { "FAIL" }
    );
    if c.pass {
        exit::OK
    } else {
        exit::FAILED
    }
}

/// Runs a convergence study on the problem file. The manufactured mode
/// always uses iterated coupling.
pub fn convergence(
    cfg: &RunConfig,
    levels: usize,
    mode: StudyMode,
    allow_invalid: bool,
) -> Result<ConvergenceTable> {
    match mode {
        StudyMode::SelfConvergence => {
            if !allow_invalid {
                let report = validate_assumptions(&cfg.instance);
                if !report.all_pass() {
                    return Err(Error::InvalidInstance(report));
                }
            }
            self_convergence(&cfg.instance, &cfg.scheme, levels)
        }
        StudyMode::Mms => {
            let scheme = cfg.scheme.clone().with_coupling(Coupling::IteratedCoupling);
            run_mms(&cfg.instance, &scheme, &cfg.manufactured, levels)
        }
    }
}

pub fn cmd_convergence(
    config: &Path,
    levels: usize,
    mode: StudyMode,
    csv_out: Option<&Path>,
    allow_invalid: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    if levels < crate::convergence::MIN_LEVELS {
        let _ = writeln!(
            err,
            "error: --levels must be at least {}",
            crate::convergence::MIN_LEVELS
        );
        return exit::USAGE;
    }
    let cfg = match RunConfig::load(config) {
        Ok(c) => c,
        Err(e) => return report_error(err, &e),
    };
    let table = match convergence(&cfg, levels, mode, allow_invalid) {
        Ok(t) => t,
        Err(e) => return report_error(err, &e),
    };
    let csv = table.to_csv();
    match csv_out {
        Some(path) => {
            if let Err(e) = fs::write(path, &csv) {
                return report_error(err, &e.into());
            }
        }
        None => {
            let _ = write!(out, "{csv}");
        }
    }
    let _ = writeln!(
        err,
        "convergence mode={} levels={levels} {}",
        mode.as_str(),
        if table.pass { "PASS" } else { "FAIL" }
    );
    if table.pass {
        exit::OK
    } else {
        exit::FAILED
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// Dotted path into the problem file, e.g. `params.a0`.
    pub path: String,
    pub values: Vec<toml::Value>,
}

fn default_width() -> usize {
    1
}

fn default_cap() -> usize {
    DEFAULT_SWEEP_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Base problem file, relative to the spec file.
    pub base: PathBuf,
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default)]
    pub solver: Option<SolverKind>,
    pub axis: Vec<SweepAxis>,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if spec.width == 0 {
            return Err(Error::Config("sweep width must be at least 1".into()));
        }
        if spec.axis.iter().any(|a| a.values.is_empty()) {
            return Err(Error::Config("every sweep axis needs at least one value".into()));
        }
        let size = spec.size();
        if size.is_none_or(|n| n > spec.cap) {
            return Err(Error::Config(format!(
                "sweep has {} cells, above the cap of {}",
                size.map_or("too many".to_string(), |n| n.to_string()),
                spec.cap
            )));
        }
        Ok(spec)
    }

    /// Number of cells, or `None` on overflow.
    pub fn size(&self) -> Option<usize> {
        self.axis
            .iter()
            .try_fold(1usize, |n, a| n.checked_mul(a.values.len()))
    }

    /// Value indices of cell `i`; the last axis varies fastest.
    pub fn cell(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axis.len()];
        for (k, axis) in self.axis.iter().enumerate().rev() {
            idx[k] = i % axis.values.len();
            i /= axis.values.len();
        }
        idx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Pass,
    Fail,
    InvalidInput,
    SolverError,
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellStatus::Pass => "pass",
            CellStatus::Fail => "fail",
            CellStatus::InvalidInput => "invalid-input",
            CellStatus::SolverError => "solver-error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub dir: String,
    pub values: Vec<String>,
    pub status: CellStatus,
    pub final_s: Option<f64>,
    pub worst: Vec<(String, f64)>,
    pub message: String,
}

fn value_cell(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn run_cell(
    spec: &SweepSpec,
    base: &toml::Table,
    index: usize,
    out_dir: &Path,
    solver: SolverKind,
) -> SweepRow {
    let idx = spec.cell(index);
    let dir = format!("cell_{index:05}");
    let cell_dir = out_dir.join(&dir);
    let mut row = SweepRow {
        index,
        dir: dir.clone(),
        values: idx
            .iter()
            .zip(&spec.axis)
            .map(|(&i, a)| value_cell(&a.values[i]))
            .collect(),
        status: CellStatus::InvalidInput,
        final_s: None,
        worst: Vec::new(),
        message: String::new(),
    };
    let mut table = base.clone();
    let mut text = String::new();
    let mut setup = || -> Result<RunConfig> {
        for (&i, axis) in idx.iter().zip(&spec.axis) {
            set_path(&mut table, &axis.path, axis.values[i].clone())?;
        }
        text = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
        RunConfig::parse(&text)
    };
    let parsed = setup();
    if let Err(e) = fs::create_dir_all(&cell_dir).and_then(|_| fs::write(cell_dir.join(CONFIG_FILE), &text)) {
        row.message = e.to_string();
        return row;
    }
    let cfg = match parsed {
        Ok(c) => c,
        Err(e) => {
            row.message = e.to_string();
            return row;
        }
    };
    let opts = RunOptions {
        solver,
        stride: None,
        allow_invalid: false,
    };
    let result = match execute(&cfg, &opts) {
        Ok(r) => r,
        Err(e) => {
            row.status = if exit_code(&e) == exit::INVALID {
                CellStatus::InvalidInput
            } else {
                CellStatus::SolverError
            };
            row.message = e.to_string().replace('\n', "; ");
            return row;
        }
    };
    row.final_s = Some(result.final_front());
    match write_run_dir(&cell_dir, &cfg, &result, false) {
        Ok((_, Some(report))) => {
            row.status = if report.overall_pass {
                CellStatus::Pass
            } else {
                CellStatus::Fail
            };
            row.worst = report
                .checks
                .iter()
                .map(|c| (c.name.clone(), c.worst_violation))
                .collect();
            row.message = report.failing().join(" ");
        }
        Ok((_, None)) => {
            row.status = CellStatus::Fail;
            row.message = "verification thresholds undefined".into();
        }
        Err(e) => {
            row.status = CellStatus::SolverError;
            row.message = e.to_string();
        }
    }
    row
}

/// Sweep index CSV, one row per cell in cell order.
pub fn sweep_index_csv(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let mut out = String::from("index,dir");
    for a in &spec.axis {
        out.push(',');
        out.push_str(&csv_escape(&a.path));
    }
    out.push_str(",status,final_s");
    for name in crate::verify::CHECK_NAMES {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",message\n");
    for r in rows {
        let _ = write!(out, "{},{}", r.index, r.dir);
        for v in &r.values {
            out.push(',');
            out.push_str(&csv_escape(v));
        }
        let _ = write!(
            out,
            ",{},{}",
            r.status.as_str(),
            r.final_s.map_or(String::new(), |s| s.to_string())
        );
        for name in crate::verify::CHECK_NAMES {
            out.push(',');
            if let Some((_, w)) = r.worst.iter().find(|(n, _)| n == name) {
                out.push_str(&w.to_string());
            }
        }
        out.push(',');
        out.push_str(&csv_escape(&r.message));
        out.push('\n');
    }
    out
}

/// Runs every cell of a sweep with at most `width` concurrent runs and writes
/// the index once all cells have finished.
pub fn sweep(spec_path: &Path, out_dir: &Path, width: Option<usize>) -> Result<(SweepSpec, Vec<SweepRow>)> {
    let text = fs::read_to_string(spec_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", spec_path.display())))?;
    let mut spec = SweepSpec::parse(&text)?;
    if let Some(w) = width {
        if w == 0 {
            return Err(Error::Config("--width must be at least 1".into()));
        }
        spec.width = w;
    }
    let base_path = spec_path.parent().unwrap_or(Path::new(".")).join(&spec.base);
    let base_text = fs::read_to_string(&base_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", base_path.display())))?;
    let base: toml::Table =
        toml::from_str(&base_text).map_err(|e| Error::Config(format!("{}: {e}", base_path.display())))?;
    let solver = spec.solver.unwrap_or(SolverKind::Frontfix);
    fs::create_dir_all(out_dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.width)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let n = spec.size().unwrap_or(0);
    let rows: Vec<SweepRow> = pool.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| run_cell(&spec, &base, i, out_dir, solver))
            .collect()
    });
    fs::write(out_dir.join(SWEEP_INDEX_FILE), sweep_index_csv(&spec, &rows))?;
    Ok((spec, rows))
}

pub fn cmd_sweep(
    spec_path: &Path,
    out_dir: &Path,
    width: Option<usize>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let (_, rows) = match sweep(spec_path, out_dir, width) {
        Ok(x) => x,
        Err(e) => return report_error(err, &e),
    };
    let passed = rows.iter().filter(|r| r.status == CellStatus::Pass).count();
    let _ = writeln!(
        out,
        "sweep: {passed}/{} cells pass, index {}",
        rows.len(),
        out_dir.join(SWEEP_INDEX_FILE).display()
    );
    for r in rows.iter().filter(|r| r.status != CellStatus::Pass) {
        let _ = writeln!(err, "cell {} {}: {}", r.index, r.status.as_str(), r.message);
    }
    if passed == rows.len() {
        exit::OK
    } else {
        exit::FAILED
    }
}

pub const PLOT_FRONT_FILE: &str = "plot_front.csv";
pub const PLOT_BOUNDARY_FILE: &str = "plot_boundary.csv";
pub const PLOT_PROFILES_FILE: &str = "plot_profiles.csv";

/// Writes plot-ready CSV files for a run: the front with its two reference
/// lines, both boundary values with the solution bounds, and every stored
/// profile mapped back to physical coordinates.
pub fn plotdata(cfg: &RunConfig, result: &RunResult, dir: &Path) -> Result<()> {
    let inst = &cfg.instance;
    let a = inst.params.a;
    let th = VerificationThresholds::from_instance(inst, result.solver).ok();
    let sstar = th.map_or(String::new(), |t| t.sstar.to_string());

    let mut front = String::from("t,s,s_star,front_max\n");
    let mut boundary = String::from("t,u_at_a,u_at_s,u_min,u_max\n");
    for i in 0..result.len() {
        let _ = writeln!(
            front,
            "{},{},{},{}",
            result.times[i],
            result.fronts[i],
            sstar,
            inst.front_max()
        );
        let _ = writeln!(
            boundary,
            "{},{},{},{},{}",
            result.times[i],
            result.u_at_a[i],
            result.u_at_s[i],
            inst.u_min(),
            inst.u_max()
        );
    }
    let mut profiles = String::from("step,t,s,z,u\n");
    for snap in &result.snapshots {
        let fixed = FixedProfile::new(snap.values.clone())?;
        let phys = to_physical(&fixed, snap.s, a)?;
        for (z, u) in phys.nodes(a).zip(&phys.values) {
            let _ = writeln!(profiles, "{},{},{},{},{}", snap.step, snap.t, snap.s, z, u);
        }
    }
    fs::create_dir_all(dir)?;
    fs::write(dir.join(PLOT_FRONT_FILE), front)?;
    fs::write(dir.join(PLOT_BOUNDARY_FILE), boundary)?;
    fs::write(dir.join(PLOT_PROFILES_FILE), profiles)?;
    Ok(())
}

pub fn cmd_plotdata(
    run_dir: &Path,
    out_dir: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let (_, cfg, result) = match read_run_dir(run_dir) {
        Ok(x) => x,
        Err(e) => return report_error(err, &e),
    };
    let dir = out_dir.unwrap_or(run_dir);
    if let Err(e) = plotdata(&cfg, &result, dir) {
        return report_error(err, &e);
    }
    let _ = writeln!(
        out,
        "wrote {PLOT_FRONT_FILE}, {PLOT_BOUNDARY_FILE}, {PLOT_PROFILES_FILE} to {}",
        dir.display()
    );
    exit::OK
}
