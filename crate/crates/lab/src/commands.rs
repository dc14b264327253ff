use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use wva_core::equivalence::{check_case, random_case, CaseOutcome, EquivalenceReport};
use wva_core::metrology::{
    EstimatorMode, ScalingConfig, ScalingMode, ScalingPlan, ScalingResult, TrialSettings,
};
use wva_core::photonic::{
    amplified_settings, equivalence_grid, readout_closed_form, simulate_apparatus, to_instance,
    ApparatusConfig,
};
use wva_core::protocols::{approximate_probability, check_weakness_condition, run_first_order};
use wva_core::qcore::{fidelity, PauliAxis};
use wva_core::{run_exact, Observable, WvaInstance};

use crate::cli::{EstimatorChoice, Mode};
use crate::config::Settings;
use crate::error::{LabError, LabResult};

/// Smallest trial count accepted for slope fitting.
pub const MIN_ESTIMATE_TRIALS: usize = 100;
/// Agreement required between the apparatus model and the abstract model.
pub const APPARATUS_TOLERANCE: f64 = 1e-10;

impl Mode {
    pub fn scaling_mode(self) -> ScalingMode {
        match self {
            Mode::Iterative => ScalingMode::Iterative,
            Mode::Entangled => ScalingMode::Entangled,
            Mode::Independent => ScalingMode::IndependentRepeats,
        }
    }
}

impl EstimatorChoice {
    fn mode(self) -> EstimatorMode {
        match self {
            EstimatorChoice::Exact => EstimatorMode::ExactInversion,
            EstimatorChoice::Linear => EstimatorMode::Linear,
        }
    }
}

fn designed_target(aw: f64) -> Complex64 {
    Complex64::new(0.0, -aw)
}

fn sigma_y() -> Observable {
    Observable::pauli(PauliAxis::Y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub phi_deg: f64,
    pub n: usize,
    pub gamma_deg: f64,
    pub probability: f64,
    pub sigma_z_exact: f64,
    pub sigma_z_first_order: f64,
    pub weak_value_im: f64,
}

/// Apparatus readout over the post-selection grid, `N` outermost.
pub fn sweep(s: &Settings) -> LabResult<Vec<SweepRow>> {
    let ns = s.n_list.clone().unwrap_or_else(|| vec![1, 4]);
    let phis = s.phi_deg_range.points();
    if let Some(p) = phis
        .iter()
        .find(|p| (2.0 * p.to_radians()).cos().abs() < 1e-12)
    {
        return Err(LabError::Config(format!(
            "phi_deg_range: grid point {p} is orthogonal post-selection, where the weak value diverges"
        )));
    }
    let mut rows = Vec::with_capacity(ns.len() * phis.len());
    for &n in &ns {
        for &phi in &phis {
            let cfg = ApparatusConfig {
                n_interactions: n,
                gamma: s.gamma_deg,
                post_angle: phi,
            };
            let exact = simulate_apparatus(&cfg)?;
            let first = run_first_order(&to_instance(&cfg)?)?;
            rows.push(SweepRow {
                phi_deg: phi,
                n,
                gamma_deg: s.gamma_deg,
                probability: exact.probability,
                sigma_z_exact: exact.sigma_z_expect,
                sigma_z_first_order: first.sigma_z_expect,
                weak_value_im: exact.weak_value.map_or(f64::NAN, |w| w.im),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub mode: Mode,
    pub n: usize,
    pub phi_deg: Option<f64>,
    pub weak_value_abs: f64,
    pub probability_exact: f64,
    pub probability_weak_approx: f64,
    pub heisenberg_reference: f64,
    pub rmse_rad: Option<f64>,
    pub rmse_stderr_rad: Option<f64>,
    pub crb_rad: Option<f64>,
}

fn check_weakness(s: &Settings, inst: &WvaInstance) -> LabResult<()> {
    if !s.strict_weakness {
        return Ok(());
    }
    let aw = inst.effective_weak_value()?;
    let r = check_weakness_condition(
        inst.observable(),
        inst.shot_interactions(),
        aw,
        inst.gamma(),
        s.weakness_threshold,
    );
    if r.satisfied {
        return Ok(());
    }
    let mut failing = Vec::new();
    if r.ratio_amp > s.weakness_threshold {
        failing.push(format!("max|N lambda|/|A_w| = {:.4}", r.ratio_amp));
    }
    if r.ratio_gamma > s.weakness_threshold {
        failing.push(format!("|gamma A_w| = {:.4}", r.ratio_gamma));
    }
    Err(LabError::Weakness(format!(
        "N = {}: {} exceeds threshold {}",
        inst.n_interactions(),
        failing.join(" and "),
        s.weakness_threshold
    )))
}

/// Runs every trial of a plan on the current rayon pool.
pub fn run_plan(plan: &ScalingPlan) -> LabResult<ScalingResult> {
    let trials = plan.settings().trials;
    let flat: Vec<wva_core::Result<f64>> = (0..plan.points().len() * trials)
        .into_par_iter()
        .map(|k| plan.run_trial(k / trials, k % trials))
        .collect();
    let estimates = flat
        .chunks(trials)
        .map(|chunk| {
            chunk
                .iter()
                .cloned()
                .collect::<wva_core::Result<Vec<f64>>>()
        })
        .collect::<wva_core::Result<Vec<_>>>()?;
    Ok(plan.summarize(&estimates))
}

/// Detection probability against `N` for the apparatus settings (no
/// `target_aw`) or for designed states with `|A_w| = target_aw`.
pub fn scaling(s: &Settings) -> LabResult<Vec<ScalingRow>> {
    let gamma = s.gamma_deg.to_radians();
    let mut rows = Vec::new();
    for &mode in &s.mode {
        // (N, φ) and the instance per point, plus the N = 1 reference instance
        let (points, reference): (Vec<(Option<f64>, WvaInstance)>, WvaInstance) = match s.target_aw
        {
            None => {
                if mode != Mode::Iterative {
                    return Err(LabError::Config(
                        "mode: the apparatus settings realize the iterative scheme; pass --target-aw for other modes".into(),
                    ));
                }
                let table = amplified_settings();
                let lookup = |n: usize| -> LabResult<ApparatusConfig> {
                    let (_, phi) = table.iter().find(|(m, _)| *m == n).ok_or_else(|| {
                        LabError::Config(format!(
                            "n_list: no apparatus setting for N = {n} (available: 1..=4)"
                        ))
                    })?;
                    Ok(ApparatusConfig {
                        n_interactions: n,
                        gamma: s.gamma_deg,
                        post_angle: *phi,
                    })
                };
                let ns = s
                    .n_list
                    .clone()
                    .unwrap_or_else(|| table.iter().map(|p| p.0).collect());
                let pts = ns
                    .iter()
                    .map(|&n| {
                        let cfg = lookup(n)?;
                        Ok((Some(cfg.post_angle), to_instance(&cfg)?))
                    })
                    .collect::<LabResult<Vec<_>>>()?;
                (pts, to_instance(&lookup(1)?)?)
            }
            Some(aw) => {
                let scenario = mode.scaling_mode().scenario();
                let design = |n: usize| {
                    WvaInstance::designed(scenario, sigma_y(), n, gamma, designed_target(aw))
                };
                let ns = s.n_list.clone().unwrap_or_else(|| (1..=8).collect());
                let pts = ns
                    .iter()
                    .map(|&n| Ok((None, design(n)?)))
                    .collect::<LabResult<Vec<_>>>()?;
                (pts, design(1)?)
            }
        };
        for (_, inst) in &points {
            check_weakness(s, inst)?;
        }
        let p1 = run_exact(&reference)?.probability;
        let mc = match s.trials {
            0 => None,
            t => {
                let settings = TrialSettings {
                    mode: mode.scaling_mode(),
                    gamma_true: gamma,
                    trials: t,
                    photons_per_trial: s.photons,
                    seed: s.seed,
                    estimator: s.estimator.mode(),
                };
                let plan = ScalingPlan::from_instances(
                    settings,
                    points.iter().map(|p| p.1.clone()).collect(),
                )?;
                Some(run_plan(&plan)?)
            }
        };
        for (i, (phi, inst)) in points.iter().enumerate() {
            let n = inst.n_interactions();
            let aw = inst.effective_weak_value()?;
            let mc_point = mc.as_ref().map(|r| r.per_n[i]);
            rows.push(ScalingRow {
                mode,
                n,
                phi_deg: *phi,
                weak_value_abs: aw.norm(),
                probability_exact: run_exact(inst)?.probability,
                probability_weak_approx: approximate_probability(
                    inst.observable(),
                    inst.shot_interactions(),
                    aw,
                ),
                heisenberg_reference: p1 * (n * n) as f64,
                rmse_rad: mc_point.map(|p| p.rmse),
                rmse_stderr_rad: mc_point.map(|p| p.rmse_stderr),
                crb_rad: mc_point.map(|p| p.crb),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub mode: Mode,
    pub n: usize,
    pub rmse_rad: f64,
    pub rmse_stderr_rad: f64,
    pub crb_rad: f64,
    pub rmse_over_crb: f64,
    pub mean_estimate_rad: f64,
    pub probability: f64,
    pub fisher: f64,
    pub fitted_slope: f64,
    pub slope_stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeEstimate {
    pub mode: Mode,
    pub fitted_slope: f64,
    pub slope_stderr: Option<f64>,
    pub rows: Vec<EstimateRow>,
}

/// Monte Carlo estimation for each mode with a log-log slope fit.
pub fn estimate(s: &Settings) -> LabResult<Vec<ModeEstimate>> {
    let ns = s.n_list.clone().unwrap_or_else(|| (1..=8).collect());
    let trials = s.trials;
    if trials < MIN_ESTIMATE_TRIALS {
        return Err(LabError::Insufficient(format!(
            "trials = {trials}; slope fitting needs at least {MIN_ESTIMATE_TRIALS}"
        )));
    }
    let mut distinct = ns.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(LabError::Insufficient(
            "a log-log slope needs at least two distinct values of N".into(),
        ));
    }
    let aw = s
        .target_aw
        .ok_or_else(|| LabError::Config("target_aw: required for estimation".into()))?;
    s.mode
        .iter()
        .map(|&mode| {
            let plan = ScalingPlan::new(ScalingConfig {
                mode: mode.scaling_mode(),
                observable: sigma_y(),
                gamma_true: s.gamma_deg.to_radians(),
                target_aw: designed_target(aw),
                ns: ns.clone(),
                trials,
                photons_per_trial: s.photons,
                seed: s.seed,
                strict_weakness: s.strict_weakness.then_some(s.weakness_threshold),
                estimator: s.estimator.mode(),
            })?;
            let result = run_plan(&plan)?;
            let slope = result
                .fitted_slope
                .ok_or_else(|| LabError::Insufficient("slope fit is rank-deficient".into()))?;
            let rows = result
                .per_n
                .iter()
                .map(|p| EstimateRow {
                    mode,
                    n: p.n,
                    rmse_rad: p.rmse,
                    rmse_stderr_rad: p.rmse_stderr,
                    crb_rad: p.crb,
                    rmse_over_crb: p.rmse / p.crb,
                    mean_estimate_rad: p.mean_estimate,
                    probability: p.probability,
                    fisher: p.fisher,
                    fitted_slope: slope,
                    slope_stderr: result.slope_stderr,
                })
                .collect();
            Ok(ModeEstimate {
                mode,
                fitted_slope: slope,
                slope_stderr: result.slope_stderr,
                rows,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseRecord {
    pub index: u64,
    pub offset: f64,
    pub bloch: [f64; 3],
    pub n: usize,
    pub gamma_rad: f64,
    pub target_re: f64,
    pub target_im: f64,
    pub infidelity: f64,
    pub delta_p: f64,
}

impl From<&CaseOutcome> for CaseRecord {
    fn from(o: &CaseOutcome) -> Self {
        CaseRecord {
            index: o.case.index,
            offset: o.case.offset,
            bloch: o.case.bloch,
            n: o.case.n,
            gamma_rad: o.case.gamma,
            target_re: o.case.target.re,
            target_im: o.case.target.im,
            infidelity: o.infidelity,
            delta_p: o.delta_p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceSummary {
    pub cases: usize,
    pub max_infidelity: f64,
    pub max_delta_p: f64,
    pub passed: bool,
    pub worst: Option<CaseRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApparatusPoint {
    pub n: usize,
    pub gamma_deg: f64,
    pub phi_deg: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApparatusSummary {
    pub points: usize,
    pub max_probability_deviation: f64,
    pub max_sigma_z_deviation: f64,
    pub max_closed_form_deviation: f64,
    pub max_infidelity: f64,
    pub passed: bool,
    pub worst: Option<ApparatusPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub equivalence: EquivalenceSummary,
    pub apparatus: ApparatusSummary,
    pub passed: bool,
}

fn apparatus_check() -> LabResult<ApparatusSummary> {
    let grid = equivalence_grid();
    let devs = grid
        .par_iter()
        .map(|cfg| {
            let app = simulate_apparatus(cfg)?;
            let closed = readout_closed_form(cfg)?;
            let exact = run_exact(&to_instance(cfg)?)?;
            let out = wva_core::photonic::propagate(
                &wva_core::photonic::apparatus_elements(cfg)?,
                vec![[Complex64::new(1.0, 0.0), Complex64::default()]],
            );
            let meter = wva_core::StateVector::from_slice(&[out[1][1], out[1][0]])?.normalized()?;
            Ok([
                (app.probability - exact.probability).abs(),
                (app.sigma_z_expect - exact.sigma_z_expect).abs(),
                (app.probability - closed.probability)
                    .abs()
                    .max((app.sigma_z_expect - closed.sigma_z_expect).abs()),
                1.0 - fidelity(&meter, &exact.normalized_meter)?,
            ])
        })
        .collect::<wva_core::Result<Vec<[f64; 4]>>>()?;
    let col = |k: usize| devs.iter().map(|d| d[k]).fold(0.0, f64::max);
    let worst = devs
        .iter()
        .zip(&grid)
        .map(|(d, c)| (d.iter().cloned().fold(0.0, f64::max), c))
        .fold(None::<(f64, &ApparatusConfig)>, |w, x| match w {
            Some(w) if w.0 >= x.0 => Some(w),
            _ => Some(x),
        })
        .map(|(dev, c)| ApparatusPoint {
            n: c.n_interactions,
            gamma_deg: c.gamma,
            phi_deg: c.post_angle,
            deviation: dev,
        });
    let max_dev = (0..4).map(col).fold(0.0, f64::max);
    Ok(ApparatusSummary {
        points: grid.len(),
        max_probability_deviation: col(0),
        max_sigma_z_deviation: col(1),
        max_closed_form_deviation: col(2),
        max_infidelity: col(3),
        passed: max_dev <= APPARATUS_TOLERANCE,
        worst,
    })
}

/// Randomized entangled/iterative equivalence plus the apparatus grid.
pub fn verify(s: &Settings) -> LabResult<VerifyReport> {
    let ns = s.n_list.clone().unwrap_or_default();
    let outcomes = (0..s.cases as u64)
        .into_par_iter()
        .map(|i| check_case(&random_case(s.seed, i, &ns), s.fault))
        .collect::<wva_core::Result<Vec<_>>>()?;
    let report = EquivalenceReport::from_outcomes(&outcomes);
    let equivalence = EquivalenceSummary {
        cases: report.cases,
        max_infidelity: report.max_infidelity,
        max_delta_p: report.max_delta_p,
        passed: report.passed(),
        worst: report.worst.as_ref().map(CaseRecord::from),
    };
    let apparatus = apparatus_check()?;
    let passed = equivalence.passed && apparatus.passed;
    Ok(VerifyReport {
        equivalence,
        apparatus,
        passed,
    })
}
