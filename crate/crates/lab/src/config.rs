use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::cli::{Command, EstimatorChoice, Format, Mode, Options};
use crate::error::{LabError, LabResult};

pub const MAX_N: usize = 20;
pub const MAX_GRID_POINTS: usize = 100_000;

/// Inclusive grid `lo, lo + step, …, hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl PhiRange {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.lo + i as f64 * self.step).collect()
    }

    fn validate(&self) -> Result<(), String> {
        if ![self.lo, self.hi, self.step].iter().all(|v| v.is_finite()) {
            return Err("values must be finite".into());
        }
        if self.step <= 0.0 {
            return Err(format!("step must be positive (got {})", self.step));
        }
        if self.lo > self.hi {
            return Err(format!("LO {} exceeds HI {}", self.lo, self.hi));
        }
        if (self.hi - self.lo) / self.step >= MAX_GRID_POINTS as f64 {
            return Err(format!("more than {MAX_GRID_POINTS} grid points"));
        }
        Ok(())
    }
}

impl FromStr for PhiRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, step] = parts.as_slice() else {
            return Err(format!("expected LO:HI:STEP, got {s:?}"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        Ok(PhiRange {
            lo: num(lo)?,
            hi: num(hi)?,
            step: num(step)?,
        })
    }
}

impl fmt::Display for PhiRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.step)
    }
}

impl Serialize for PhiRange {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub gamma_deg: Option<f64>,
    pub phi_deg_range: Option<String>,
    pub n_list: Option<Vec<usize>>,
    pub target_aw: Option<f64>,
    pub trials: Option<usize>,
    pub photons: Option<u64>,
    pub mode: Option<Vec<Mode>>,
    pub strict_weakness: Option<bool>,
    pub weakness_threshold: Option<f64>,
    pub estimator: Option<EstimatorChoice>,
    pub cases: Option<usize>,
    pub fault: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|m| LabError::Config(format!("{}: {m}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

/// Fully resolved settings. `n_list = None` leaves the choice of `N` to the
/// command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub seed: u64,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
    pub gamma_deg: f64,
    pub phi_deg_range: PhiRange,
    pub n_list: Option<Vec<usize>>,
    pub target_aw: Option<f64>,
    pub trials: usize,
    pub photons: u64,
    pub mode: Vec<Mode>,
    pub strict_weakness: bool,
    pub weakness_threshold: f64,
    pub estimator: EstimatorChoice,
    pub cases: usize,
    pub fault: Option<f64>,
}

impl Settings {
    /// Built-in defaults for `command`.
    pub fn defaults(command: Command) -> Self {
        let estimate = command == Command::Estimate;
        Settings {
            seed: 42,
            out: None,
            format: Format::Csv,
            gamma_deg: if estimate { 0.001f64.to_degrees() } else { 1.0 },
            phi_deg_range: PhiRange {
                lo: 45.5,
                hi: 55.0,
                step: 0.5,
            },
            n_list: None,
            target_aw: estimate.then_some(100.0),
            trials: if estimate { 10_000 } else { 0 },
            photons: 200_000_000,
            mode: if estimate {
                vec![Mode::Iterative, Mode::Independent]
            } else {
                vec![Mode::Iterative]
            },
            strict_weakness: false,
            weakness_threshold: wva_core::metrology::DEFAULT_WEAKNESS_THRESHOLD,
            estimator: EstimatorChoice::Exact,
            cases: 1000,
            fault: None,
        }
    }
}

fn field_error(field: &str, source: Source, msg: impl fmt::Display) -> LabError {
    LabError::Config(format!("{field} ({source}): {msg}"))
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Flag,
    File,
    Default,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Flag => "command line",
            Source::File => "config file",
            Source::Default => "default",
        })
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> (T, Source) {
    match (flag, file) {
        (Some(v), _) => (v, Source::Flag),
        (None, Some(v)) => (v, Source::File),
        (None, None) => (default, Source::Default),
    }
}

fn pick_opt<T>(flag: Option<T>, file: Option<T>) -> (Option<T>, Source) {
    match (flag, file) {
        (Some(v), _) => (Some(v), Source::Flag),
        (None, v) => (v, Source::File),
    }
}

/// Merges flags over file keys over defaults, then validates.
pub fn resolve(command: Command, opts: &Options, file: FileConfig) -> LabResult<Settings> {
    let d = Settings::defaults(command);
    let (seed, _) = pick(opts.seed, file.seed, d.seed);
    let (out, _) = pick_opt(opts.out.clone(), file.out);
    let (format, _) = pick(opts.format, file.format, d.format);

    let (gamma_deg, src) = pick(opts.gamma_deg, file.gamma_deg, d.gamma_deg);
    if !(gamma_deg.is_finite() && (-90.0..=90.0).contains(&gamma_deg)) {
        return Err(field_error(
            "gamma_deg",
            src,
            format!("must lie in [-90, 90] (got {gamma_deg})"),
        ));
    }

    let file_range = match file.phi_deg_range {
        Some(s) => Some(
            s.parse::<PhiRange>()
                .map_err(|m| field_error("phi_deg_range", Source::File, m))?,
        ),
        None => None,
    };
    let (phi_deg_range, src) = pick(opts.phi_deg_range, file_range, d.phi_deg_range);
    phi_deg_range
        .validate()
        .map_err(|m| field_error("phi_deg_range", src, m))?;

    let (n_list, src) = pick_opt(opts.n_list.clone(), file.n_list);
    if let Some(ns) = &n_list {
        if ns.is_empty() {
            return Err(field_error("n_list", src, "must not be empty"));
        }
        if let Some(bad) = ns.iter().find(|n| !(1..=MAX_N).contains(*n)) {
            return Err(field_error(
                "n_list",
                src,
                format!("N must lie in [1, {MAX_N}] (got {bad})"),
            ));
        }
    }

    let (target_aw, src) = match pick_opt(opts.target_aw, file.target_aw) {
        (None, _) => (d.target_aw, Source::Default),
        picked => picked,
    };
    if let Some(aw) = target_aw {
        if !(aw.is_finite() && aw > 0.0) {
            return Err(field_error(
                "target_aw",
                src,
                format!("must be positive and finite (got {aw})"),
            ));
        }
    }

    let (trials, _) = pick(opts.trials, file.trials, d.trials);

    let (photons, src) = pick(opts.photons, file.photons, d.photons);
    if photons == 0 {
        return Err(field_error("photons", src, "must be at least 1"));
    }

    let (mode, src) = pick(opts.mode.clone(), file.mode, d.mode);
    if mode.is_empty() {
        return Err(field_error("mode", src, "must not be empty"));
    }

    let strict_weakness = opts.strict_weakness || file.strict_weakness.unwrap_or(false);
    let (weakness_threshold, src) = pick(
        opts.weakness_threshold,
        file.weakness_threshold,
        d.weakness_threshold,
    );
    if !(weakness_threshold.is_finite() && weakness_threshold > 0.0) {
        return Err(field_error(
            "weakness_threshold",
            src,
            format!("must be positive (got {weakness_threshold})"),
        ));
    }

    let (estimator, _) = pick(opts.estimator, file.estimator, d.estimator);

    let (cases, src) = pick(opts.cases, file.cases, d.cases);
    if cases == 0 {
        return Err(field_error("cases", src, "must be at least 1"));
    }

    let (fault, src) = pick_opt(opts.fault, file.fault);
    if fault.is_some_and(|f| !f.is_finite()) {
        return Err(field_error("fault", src, "must be finite"));
    }

    Ok(Settings {
        seed,
        out,
        format,
        gamma_deg,
        phi_deg_range,
        n_list,
        target_aw,
        trials,
        photons,
        mode,
        strict_weakness,
        weakness_threshold,
        estimator,
        cases,
        fault,
    })
}
