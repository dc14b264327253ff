//! Fisher information, Cramér–Rao bounds, photon-counting simulation,
//! estimation of the coupling, and precision-scaling experiments.
//!
//! Resource accounting for scaling runs: one trial of `IndependentRepeats`
//! post-selects `N` single-interaction shots, while one trial of `Iterative`
//! or `Entangled` is a single shot carrying `N` interactions. Every shot
//! sends `photons_per_trial` photons.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent f64 math shadows it when std is linked
use num_traits::Float;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::error::{Error, Result};
use crate::protocols::{
    check_weakness_condition, run_exact, spectral_meter, Observable, Scenario, WvaInstance,
};
use crate::qcore::{inner, Amplitude, StateVector};
use crate::stream::{stream, TrialRng};

/// Default central-difference step for numeric QFI, radians.
pub const DEFAULT_FD_STEP: f64 = 1e-4;
/// Tolerance of the bracketed inversion, radians.
pub const ESTIMATE_TOLERANCE: f64 = 1e-12;
/// Threshold used for strict weakness checks when none is given.
pub const DEFAULT_WEAKNESS_THRESHOLD: f64 = 0.25;

const QFI_NEGATIVE_SLACK: f64 = 1e-8;
const QFI_STABILITY: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QfiMethod {
    Analytic4Aw2,
    NumericDerivative,
}

/// Fisher information per detected photon, rad⁻².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiResult {
    pub value: f64,
    pub method: QfiMethod,
}

/// Quantum Fisher information of a pure-state family by central
/// differences: `4⟨∂M|∂M⟩ − 4|⟨∂M|M⟩|²`.
///
/// The result at `step` is cross-checked against `step / 2`; a relative
/// change above 1% is reported as [`Error::UnstableDerivative`].
pub fn qfi_numeric<F>(family: F, gamma0: f64, step: f64) -> Result<QfiResult>
where
    F: Fn(f64) -> Result<StateVector>,
{
    if !(step > 0.0) || !step.is_finite() || !gamma0.is_finite() {
        return Err(Error::InvalidArgument("step must be positive and finite"));
    }
    let center = family(gamma0)?;
    if !center.is_normalized() {
        return Err(Error::Unnormalized(center.norm_sqr()));
    }
    let at = |h: f64| -> Result<f64> {
        let plus = family(gamma0 + h)?;
        let minus = family(gamma0 - h)?;
        let d = plus.sub(&minus)?.scaled(Complex64::new(0.5 / h, 0.0));
        Ok(4.0 * (d.norm_sqr() - inner(&d, &center)?.norm_sqr()))
    };
    let coarse = at(step)?;
    let fine = at(0.5 * step)?;
    if coarse < -QFI_NEGATIVE_SLACK
        || fine < -QFI_NEGATIVE_SLACK
        || (coarse - fine).abs() > QFI_STABILITY * fine.abs() + QFI_NEGATIVE_SLACK
    {
        return Err(Error::UnstableDerivative { coarse, fine });
    }
    Ok(QfiResult {
        value: coarse.max(0.0),
        method: QfiMethod::NumericDerivative,
    })
}

/// `4|A_w|²`, the weak-regime QFI of `|+x⟩ + iγA_w|−x⟩`.
pub fn qfi_weak_approx(aw: Amplitude) -> QfiResult {
    QfiResult {
        value: 4.0 * aw.norm_sqr(),
        method: QfiMethod::Analytic4Aw2,
    }
}

/// QFI of the exact normalized meter of `inst` at its own `γ`.
pub fn meter_qfi(inst: &WvaInstance) -> Result<QfiResult> {
    qfi_numeric(
        |g| Ok(run_exact(&inst.with_gamma(g))?.normalized_meter),
        inst.gamma(),
        DEFAULT_FD_STEP,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbResult {
    /// Radians.
    pub bound: f64,
    pub scenario: Scenario,
    pub n_interactions: usize,
    pub trials: u64,
}

/// `1/√(trials·P·I)`.
///
/// For `Independent` the `trials` count already includes the `N`
/// repetitions; for `Entangled`/`Iterative` `P` is the `N`-interaction
/// post-selection probability of a single shot.
pub fn crb(
    scenario: Scenario,
    n_interactions: usize,
    probability: f64,
    fisher: f64,
    trials: u64,
) -> Result<CrbResult> {
    if !(probability > 0.0 && probability <= 1.0) {
        return Err(Error::InvalidArgument("probability must lie in (0, 1]"));
    }
    if !(fisher > 0.0) || !fisher.is_finite() {
        return Err(Error::InvalidArgument(
            "Fisher information must be positive",
        ));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required"));
    }
    Ok(CrbResult {
        bound: 1.0 / (trials as f64 * probability * fisher).sqrt(),
        scenario,
        n_interactions,
        trials,
    })
}

/// Weak-regime single-shot limit `1/(N(λ_max − λ_min))`.
pub fn heisenberg_bound(a: &Observable, n: usize) -> f64 {
    1.0 / (n as f64 * a.spread())
}

/// Detector counts at the two readout ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CountRecord {
    pub n1: u64,
    pub n2: u64,
    pub n_input: u64,
    pub seed: u64,
}

impl CountRecord {
    pub fn detected(&self) -> u64 {
        self.n1 + self.n2
    }

    /// `(n₁ − n₂)/(n₁ + n₂)`, or `None` without detections.
    pub fn sigma_z(&self) -> Option<f64> {
        let d = self.detected();
        (d > 0).then(|| (self.n1 as f64 - self.n2 as f64) / d as f64)
    }
}

/// Number of photons entering the apparatus per shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhotonSource {
    Fixed(u64),
    /// Poisson-distributed with the given mean.
    Poissonian(f64),
}

/// Draws one shot: detections ~ Bin(n_input, P), then D₁ ~ Bin(detected,
/// (1 + ⟨σ_z⟩)/2).
pub fn sample_counts(
    rng: &mut TrialRng,
    sigma_z_expect: f64,
    probability: f64,
    source: PhotonSource,
) -> Result<(u64, u64, u64)> {
    if !(sigma_z_expect.abs() <= 1.0) {
        return Err(Error::InvalidArgument("|sigma_z| must not exceed 1"));
    }
    if !(0.0..=1.0).contains(&probability) {
        return Err(Error::InvalidArgument("probability must lie in [0, 1]"));
    }
    let n_input = match source {
        PhotonSource::Fixed(n) => n,
        PhotonSource::Poissonian(mean) => {
            let d =
                Poisson::new(mean).map_err(|_| Error::InvalidArgument("invalid Poisson mean"))?;
            d.sample(rng) as u64
        }
    };
    let detected = Binomial::new(n_input, probability)
        .map_err(|_| Error::InvalidArgument("invalid detection probability"))?
        .sample(rng);
    let up = (0.5 * (1.0 + sigma_z_expect)).clamp(0.0, 1.0);
    let n1 = Binomial::new(detected, up)
        .map_err(|_| Error::InvalidArgument("invalid port probability"))?
        .sample(rng);
    Ok((n1, detected - n1, n_input))
}

/// Simulated counts for `n_input` photons; identical for identical seeds.
pub fn simulate_counts(
    sigma_z_expect: f64,
    probability: f64,
    n_input: u64,
    seed: u64,
) -> Result<CountRecord> {
    if n_input == 0 {
        return Err(Error::InvalidArgument("n_input must be at least 1"));
    }
    let mut rng = stream(seed, 0);
    let (n1, n2, n_input) = sample_counts(
        &mut rng,
        sigma_z_expect,
        probability,
        PhotonSource::Fixed(n_input),
    )?;
    Ok(CountRecord {
        n1,
        n2,
        n_input,
        seed,
    })
}

/// Exact `⟨σ_z⟩_m(γ)` and `P(γ)` of a fixed instance, evaluated from the
/// generator's spectral weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutCurve {
    spectrum: Vec<(f64, Amplitude)>,
    meter: StateVector,
}

impl ReadoutCurve {
    pub fn new(inst: &WvaInstance) -> Result<Self> {
        Ok(ReadoutCurve {
            spectrum: inst.generator_spectrum()?,
            meter: inst.meter_init().clone(),
        })
    }

    fn branches(&self, gamma: f64) -> (f64, f64) {
        let raw = spectral_meter(&self.spectrum, &self.meter, gamma);
        (raw[0].norm_sqr(), raw[1].norm_sqr())
    }

    pub fn probability(&self, gamma: f64) -> f64 {
        let (up, down) = self.branches(gamma);
        up + down
    }

    pub fn sigma_z(&self, gamma: f64) -> f64 {
        let (up, down) = self.branches(gamma);
        if up + down > 0.0 {
            (up - down) / (up + down)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimatorMode {
    /// Bracketed inversion of the exact readout curve.
    #[default]
    ExactInversion,
    /// `γ̂ = ⟨σ_z⟩ / (−2 Im⟨G⟩_w)`, the first-order readout inverted.
    Linear,
}

/// Estimator of `γ` from the readout ratio of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    curve: ReadoutCurve,
    mode: EstimatorMode,
    bracket: f64,
    range: (f64, f64),
    linear_slope: f64,
}

impl Estimator {
    /// Prepares the inversion for `inst`'s states and observable (its own
    /// `γ` is ignored). The bracket `[−b, b]` extends to the first extremum
    /// of the readout curve, inside which the curve is monotone.
    pub fn new(inst: &WvaInstance, mode: EstimatorMode) -> Result<Self> {
        let curve = ReadoutCurve::new(inst)?;
        let aw = inst.effective_weak_value()?;
        let linear_slope = -2.0 * aw.im;
        if linear_slope == 0.0 {
            return Err(Error::InvalidArgument(
                "readout is insensitive to gamma (Im A_w = 0)",
            ));
        }
        let step = 0.01 / aw.norm().max(1.0);
        let sign = linear_slope.signum();
        let mut prev = 0.0;
        let mut bracket = 0.0;
        for k in 1..=100_000 {
            let g = k as f64 * step;
            let s = sign * curve.sigma_z(g);
            if s <= prev {
                break;
            }
            prev = s;
            bracket = g;
        }
        if bracket == 0.0 {
            return Err(Error::InvalidArgument(
                "readout curve is not monotone near gamma = 0",
            ));
        }
        let (a, b) = (curve.sigma_z(-bracket), curve.sigma_z(bracket));
        Ok(Estimator {
            curve,
            mode,
            bracket,
            range: (a.min(b), a.max(b)),
            linear_slope,
        })
    }

    pub fn curve(&self) -> &ReadoutCurve {
        &self.curve
    }

    /// Half-width of the monotone bracket, radians.
    pub fn bracket(&self) -> f64 {
        self.bracket
    }

    pub fn estimate(&self, counts: &CountRecord) -> Result<f64> {
        let observed = counts.sigma_z().ok_or(Error::NoDetections)?;
        self.invert(observed)
    }

    /// Coupling for which the model readout equals `observed`.
    pub fn invert(&self, observed: f64) -> Result<f64> {
        if self.mode == EstimatorMode::Linear {
            return Ok(observed / self.linear_slope);
        }
        let (low, high) = self.range;
        if observed < low || observed > high {
            return Err(Error::OutOfRange {
                observed,
                low,
                high,
            });
        }
        let increasing = self.linear_slope > 0.0;
        let (mut lo, mut hi) = (-self.bracket, self.bracket);
        while hi - lo > ESTIMATE_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if (self.curve.sigma_z(mid) < observed) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Estimate `γ` by inverting the exact readout of `inst`.
pub fn estimate_gamma(counts: &CountRecord, inst: &WvaInstance) -> Result<f64> {
    Estimator::new(inst, EstimatorMode::ExactInversion)?.estimate(counts)
}

pub fn estimate_gamma_with(
    counts: &CountRecord,
    inst: &WvaInstance,
    mode: EstimatorMode,
) -> Result<f64> {
    Estimator::new(inst, mode)?.estimate(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalingMode {
    IndependentRepeats,
    Iterative,
    Entangled,
}

impl ScalingMode {
    pub fn scenario(self) -> Scenario {
        match self {
            ScalingMode::IndependentRepeats => Scenario::Independent,
            ScalingMode::Iterative => Scenario::Iterative,
            ScalingMode::Entangled => Scenario::Entangled,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConfig {
    pub mode: ScalingMode,
    pub observable: Observable,
    /// Radians.
    pub gamma_true: f64,
    pub target_aw: Amplitude,
    pub ns: Vec<usize>,
    pub trials: usize,
    pub photons_per_trial: u64,
    pub seed: u64,
    /// Reject any `N` failing the weakness check at this threshold.
    pub strict_weakness: Option<f64>,
    pub estimator: EstimatorMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub n: usize,
    pub rmse: f64,
    pub rmse_stderr: f64,
    pub crb: f64,
    pub mean_estimate: f64,
    /// Exact single-shot post-selection probability at `gamma_true`.
    pub probability: f64,
    /// QFI of the exact normalized meter at `gamma_true`.
    pub fisher: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    pub mode: ScalingMode,
    pub per_n: Vec<ScalingPoint>,
    /// Least-squares slope of `ln RMSE` against `ln N`; `None` with fewer
    /// than two distinct `N`.
    pub fitted_slope: Option<f64>,
    /// `None` when the fit has no residual degrees of freedom.
    pub slope_stderr: Option<f64>,
}

/// Everything a trial needs for one value of `N`.
#[derive(Debug, Clone)]
pub struct PlanPoint {
    pub n: usize,
    pub instance: WvaInstance,
    pub estimator: Estimator,
    pub shots_per_trial: usize,
    pub probability: f64,
    pub sigma_z: f64,
    pub fisher: f64,
    pub crb: CrbResult,
}

/// Monte Carlo settings shared by every point of a plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSettings {
    pub mode: ScalingMode,
    /// Radians.
    pub gamma_true: f64,
    pub trials: usize,
    pub photons_per_trial: u64,
    pub seed: u64,
    pub estimator: EstimatorMode,
}

/// Precomputed scaling experiment; trials can run in any order or in
/// parallel and are reduced with [`ScalingPlan::summarize`].
#[derive(Debug, Clone)]
pub struct ScalingPlan {
    settings: TrialSettings,
    points: Vec<PlanPoint>,
}

impl ScalingPlan {
    pub fn new(config: ScalingConfig) -> Result<Self> {
        let scenario = config.mode.scenario();
        let instances = config
            .ns
            .iter()
            .map(|&n| {
                let instance = WvaInstance::designed(
                    scenario,
                    config.observable.clone(),
                    n,
                    config.gamma_true,
                    config.target_aw,
                )?;
                if let Some(threshold) = config.strict_weakness {
                    let report = check_weakness_condition(
                        &config.observable,
                        instance.shot_interactions(),
                        config.target_aw,
                        config.gamma_true,
                        threshold,
                    );
                    if !report.satisfied {
                        return Err(Error::WeaknessViolated {
                            n,
                            ratio_amp: report.ratio_amp,
                            ratio_gamma: report.ratio_gamma,
                        });
                    }
                }
                Ok(instance)
            })
            .collect::<Result<Vec<_>>>()?;
        let settings = TrialSettings {
            mode: config.mode,
            gamma_true: config.gamma_true,
            trials: config.trials,
            photons_per_trial: config.photons_per_trial,
            seed: config.seed,
            estimator: config.estimator,
        };
        ScalingPlan::from_instances(settings, instances)
    }

    /// Plan over arbitrary instances, one per point; each is evaluated at
    /// `settings.gamma_true` and `N` is taken from the instance.
    pub fn from_instances(settings: TrialSettings, instances: Vec<WvaInstance>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::InvalidArgument("at least one N is required"));
        }
        if settings.trials == 0 || settings.photons_per_trial == 0 {
            return Err(Error::InvalidArgument(
                "trials and photons must be positive",
            ));
        }
        let points = instances
            .into_iter()
            .map(|inst| {
                let instance = inst.with_gamma(settings.gamma_true);
                let n = instance.n_interactions();
                let meter = run_exact(&instance)?;
                let fisher = meter_qfi(&instance)?.value;
                let shots_per_trial = match settings.mode {
                    ScalingMode::IndependentRepeats => n,
                    _ => 1,
                };
                let crb = crb(
                    instance.scenario(),
                    n,
                    meter.probability,
                    fisher,
                    shots_per_trial as u64 * settings.photons_per_trial,
                )?;
                Ok(PlanPoint {
                    n,
                    estimator: Estimator::new(&instance, settings.estimator)?,
                    instance,
                    shots_per_trial,
                    probability: meter.probability,
                    sigma_z: meter.sigma_z_expect,
                    fisher,
                    crb,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScalingPlan { settings, points })
    }

    pub fn settings(&self) -> &TrialSettings {
        &self.settings
    }

    pub fn points(&self) -> &[PlanPoint] {
        &self.points
    }

    /// Stream index of a trial; unique across the whole experiment.
    pub fn trial_index(&self, point: usize, trial: usize) -> u64 {
        (point * self.settings.trials + trial) as u64
    }

    /// Simulates trial `trial` at point `point` and returns `γ̂`.
    pub fn run_trial(&self, point: usize, trial: usize) -> Result<f64> {
        let p = &self.points[point];
        let seed = self.settings.seed;
        let mut rng = stream(seed, self.trial_index(point, trial));
        let source = PhotonSource::Fixed(self.settings.photons_per_trial);
        let mut total = CountRecord {
            n1: 0,
            n2: 0,
            n_input: 0,
            seed,
        };
        for _ in 0..p.shots_per_trial {
            let (n1, n2, n_input) = sample_counts(&mut rng, p.sigma_z, p.probability, source)?;
            total.n1 += n1;
            total.n2 += n2;
            total.n_input += n_input;
        }
        p.estimator.estimate(&total)
    }

    /// Reduces per-point estimates, each in trial order.
    pub fn summarize(&self, estimates: &[Vec<f64>]) -> ScalingResult {
        let gamma = self.settings.gamma_true;
        let per_n: Vec<ScalingPoint> = self
            .points
            .iter()
            .zip(estimates)
            .map(|(p, est)| {
                let t = est.len() as f64;
                let sq: Vec<f64> = est.iter().map(|e| (e - gamma) * (e - gamma)).collect();
                let mse = sq.iter().sum::<f64>() / t;
                let rmse = mse.sqrt();
                let var = if est.len() > 1 {
                    sq.iter().map(|s| (s - mse) * (s - mse)).sum::<f64>() / (t - 1.0)
                } else {
                    0.0
                };
                let rmse_stderr = if rmse > 0.0 {
                    (var / t).sqrt() / (2.0 * rmse)
                } else {
                    0.0
                };
                ScalingPoint {
                    n: p.n,
                    rmse,
                    rmse_stderr,
                    crb: p.crb.bound,
                    mean_estimate: est.iter().sum::<f64>() / t,
                    probability: p.probability,
                    fisher: p.fisher,
                }
            })
            .collect();
        let fit = fit_log_slope(
            &per_n
                .iter()
                .map(|p| (p.n as f64, p.rmse))
                .collect::<Vec<_>>(),
        );
        ScalingResult {
            mode: self.settings.mode,
            per_n,
            fitted_slope: fit.map(|f| f.0),
            slope_stderr: fit.and_then(|f| f.1),
        }
    }
}

/// Runs every trial sequentially.
pub fn scaling_experiment(config: ScalingConfig) -> Result<ScalingResult> {
    let plan = ScalingPlan::new(config)?;
    let estimates = (0..plan.points.len())
        .map(|p| {
            (0..plan.settings.trials)
                .map(|t| plan.run_trial(p, t))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(plan.summarize(&estimates))
}

/// Ordinary least squares of `ln y` on `ln x`: `(slope, stderr)`.
pub fn fit_log_slope(points: &[(f64, f64)]) -> Option<(f64, Option<f64>)> {
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let k = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let stderr = (points.len() > 2).then(|| {
        let ssr: f64 = logs
            .iter()
            .map(|p| {
                let r = p.1 - (my + slope * (p.0 - mx));
                r * r
            })
            .sum();
        (ssr / (k - 2.0) / sxx).sqrt()
    });
    Some((slope, stderr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::run_first_order;
    use crate::qcore::{apply, eigenstate, su2_exponential, PauliAxis, Sign};
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Amplitude {
        Complex64::new(re, im)
    }

    fn first_order_family(aw: Amplitude) -> impl Fn(f64) -> Result<StateVector> {
        move |g| {
            let plus = eigenstate(PauliAxis::X, Sign::Plus);
            let minus = eigenstate(PauliAxis::X, Sign::Minus);
            plus.add(&minus.scaled(c(0.0, g) * aw))?.normalized()
        }
    }

    #[test]
    fn qfi_of_constant_family_is_zero() {
        let q = qfi_numeric(
            |_| Ok(eigenstate(PauliAxis::X, Sign::Plus)),
            0.3,
            DEFAULT_FD_STEP,
        )
        .unwrap();
        assert_eq!(q.value, 0.0);
        assert_eq!(q.method, QfiMethod::NumericDerivative);
    }

    #[test]
    fn qfi_of_first_order_family() {
        let aw = c(0.0, 10.0);
        let q = qfi_numeric(first_order_family(aw), 0.001, DEFAULT_FD_STEP).unwrap();
        let x = 0.001f64.powi(2) * aw.norm_sqr();
        assert!((q.value / (400.0 / ((1.0 + x) * (1.0 + x))) - 1.0).abs() < 1e-5);
        assert!(qfi_weak_approx(aw).value - q.value < 8.1 * x * aw.norm_sqr());
    }

    #[test]
    fn qfi_of_phase_generator_is_four_variance() {
        let fam = |g: f64| {
            apply(
                &su2_exponential(PauliAxis::Z, g),
                &eigenstate(PauliAxis::X, Sign::Plus),
            )
        };
        let q = qfi_numeric(fam, 0.2, DEFAULT_FD_STEP).unwrap();
        assert_abs_diff_eq!(q.value, 4.0, epsilon = 1e-7);
    }

    #[test]
    fn qfi_ignores_gamma_dependent_global_phase() {
        let aw = c(0.0, 10.0);
        let base = qfi_numeric(first_order_family(aw), 0.001, DEFAULT_FD_STEP)
            .unwrap()
            .value;
        let fam = first_order_family(aw);
        let phased = qfi_numeric(
            |g| Ok(fam(g)?.scaled(Complex64::from_polar(1.0, 37.0 * g))),
            0.001,
            DEFAULT_FD_STEP,
        )
        .unwrap()
        .value;
        assert!((phased - base).abs() / base < 1e-3);
    }

    #[test]
    fn qfi_flags_unusable_steps() {
        let wiggle = |g: f64| {
            let theta = 1e-6 * (1e7 * g).sin();
            apply(
                &su2_exponential(PauliAxis::Z, theta),
                &eigenstate(PauliAxis::X, Sign::Plus),
            )
        };
        let err = qfi_numeric(wiggle, 0.0, DEFAULT_FD_STEP).unwrap_err();
        assert!(matches!(err, Error::UnstableDerivative { .. }), "{err:?}");
        assert!(qfi_numeric(wiggle, 0.0, 0.0).is_err());
    }

    #[test]
    fn weak_qfi_examples() {
        assert_eq!(qfi_weak_approx(c(0.0, 0.0)).value, 0.0);
        assert_abs_diff_eq!(qfi_weak_approx(c(0.0, 11.43)).value, 522.6, epsilon = 0.05);
    }

    #[test]
    fn crb_examples() {
        let y = Observable::pauli(PauliAxis::Y);
        let aw = c(0.0, 11.5);
        let ideal_p = crate::protocols::approximate_probability(&y, 4, aw);
        let b = crb(
            Scenario::Iterative,
            4,
            ideal_p,
            qfi_weak_approx(aw).value,
            1,
        )
        .unwrap();
        assert_abs_diff_eq!(b.bound, 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(heisenberg_bound(&y, 4), 0.125, epsilon = 0.0);
        let ind = crb(Scenario::Independent, 1, 0.007896, 522.6, 1000).unwrap();
        assert_abs_diff_eq!(ind.bound, 0.01557, epsilon = 1e-5);
        let p1 = crate::protocols::approximate_probability(&y, 1, aw);
        let i1 = crb(Scenario::Independent, 1, p1, 529.0, 1).unwrap().bound;
        let t1 = crb(Scenario::Iterative, 1, p1, 529.0, 1).unwrap().bound;
        assert_eq!(i1, t1);
    }

    #[test]
    fn crb_rejects_bad_inputs_and_is_monotone() {
        assert!(crb(Scenario::Iterative, 1, 0.0, 1.0, 1).is_err());
        assert!(crb(Scenario::Iterative, 1, 1.5, 1.0, 1).is_err());
        assert!(crb(Scenario::Iterative, 1, 0.5, 0.0, 1).is_err());
        assert!(crb(Scenario::Iterative, 1, 0.5, 1.0, 0).is_err());
        let b = |p: f64, i: f64, t: u64| crb(Scenario::Iterative, 1, p, i, t).unwrap().bound;
        assert!(b(0.1, 10.0, 2) < b(0.1, 10.0, 1));
        assert!(b(0.2, 10.0, 1) < b(0.1, 10.0, 1));
        assert!(b(0.1, 20.0, 1) < b(0.1, 10.0, 1));
    }

    #[test]
    fn symmetric_counts_concentrate() {
        let r = simulate_counts(0.0, 1.0, 1_000_000, 99).unwrap();
        assert_eq!(r.detected(), 1_000_000);
        assert!((r.n1 as f64 - r.n2 as f64).abs() / 1e6 < 0.005);
    }

    #[test]
    fn counts_are_seed_deterministic() {
        let a = simulate_counts(0.3, 0.01, 5_000_000, 1234).unwrap();
        assert_eq!(a, simulate_counts(0.3, 0.01, 5_000_000, 1234).unwrap());
        assert_ne!(a, simulate_counts(0.3, 0.01, 5_000_000, 1235).unwrap());
        assert!(a.n1 + a.n2 <= a.n_input);
    }

    #[test]
    fn counts_ratio_within_binomial_error() {
        let s = 0.38;
        let mut inside = 0;
        let mut sum = 0.0;
        for seed in 0..1000 {
            let r = simulate_counts(s, 0.05, 200_000, seed).unwrap();
            let ratio = r.sigma_z().unwrap();
            sum += ratio;
            if (ratio - s).abs() <= 3.0 / (r.detected() as f64).sqrt() {
                inside += 1;
            }
        }
        assert!(inside >= 990, "{inside}");
        // mean over seeds within 3 standard errors
        let se = ((1.0 - s * s) / 10_000.0).sqrt() / (1000f64).sqrt();
        assert!((sum / 1000.0 - s).abs() < 3.0 * se);
    }

    #[test]
    fn poissonian_source_varies_input() {
        let mut rng = stream(5, 0);
        let a = sample_counts(&mut rng, 0.0, 0.5, PhotonSource::Poissonian(1e4)).unwrap();
        let b = sample_counts(&mut rng, 0.0, 0.5, PhotonSource::Poissonian(1e4)).unwrap();
        assert_ne!(a.2, b.2);
        assert!((a.2 as f64 - 1e4).abs() < 600.0);
    }

    #[test]
    fn readout_curve_matches_run_exact() {
        let a = Observable::from_bloch(0.3, [0.2, 0.9, -0.1]).unwrap();
        for scenario in [
            Scenario::Independent,
            Scenario::Iterative,
            Scenario::Entangled,
        ] {
            let inst = WvaInstance::designed(scenario, a.clone(), 3, 0.0, c(0.0, -20.0)).unwrap();
            let curve = ReadoutCurve::new(&inst).unwrap();
            for g in [-0.05, -0.003, 0.0, 0.01, 0.04] {
                let m = run_exact(&inst.with_gamma(g)).unwrap();
                assert_abs_diff_eq!(curve.probability(g), m.probability, epsilon = 1e-14);
                assert_abs_diff_eq!(curve.sigma_z(g), m.sigma_z_expect, epsilon = 1e-12);
            }
        }
    }

    fn photonic_like(n: usize, aw: f64) -> WvaInstance {
        WvaInstance::designed(
            Scenario::Iterative,
            Observable::pauli(PauliAxis::Y),
            n,
            0.0,
            c(0.0, -aw),
        )
        .unwrap()
    }

    #[test]
    fn balanced_counts_estimate_zero() {
        let inst = photonic_like(2, 11.5);
        let counts = CountRecord {
            n1: 500,
            n2: 500,
            n_input: 100_000,
            seed: 0,
        };
        assert_abs_diff_eq!(
            estimate_gamma(&counts, &inst).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let none = CountRecord {
            n1: 0,
            n2: 0,
            n_input: 10,
            seed: 0,
        };
        assert_eq!(
            estimate_gamma(&none, &inst).unwrap_err(),
            Error::NoDetections
        );
    }

    #[test]
    fn estimator_inverts_exact_curve() {
        let inst = photonic_like(1, 11.43);
        let est = Estimator::new(&inst, EstimatorMode::ExactInversion).unwrap();
        for g in [-0.02, 0.001, 1f64.to_radians(), 0.03] {
            let s = est.curve().sigma_z(g);
            assert_abs_diff_eq!(est.invert(s).unwrap(), g, epsilon = 2e-12);
        }
        assert!(matches!(est.invert(1.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn estimate_from_large_count_sample() {
        let g = 1f64.to_radians();
        let inst = photonic_like(1, 11.43).with_gamma(g);
        let m = run_exact(&inst).unwrap();
        let counts = simulate_counts(m.sigma_z_expect, m.probability, 100_000_000, 2024).unwrap();
        let est = estimate_gamma(&counts, &inst).unwrap();
        assert!(
            (est - g).abs() < 0.02f64.to_radians(),
            "{}",
            est.to_degrees()
        );
    }

    #[test]
    fn linear_inversion_is_biased_low() {
        let g = 1f64.to_radians();
        let phi0 = 47.5f64.to_radians();
        let inst = photonic_like(1, (2.0 * phi0).tan().abs()).with_gamma(g);
        let exact = run_exact(&inst).unwrap().sigma_z_expect;
        let lin = Estimator::new(&inst, EstimatorMode::Linear)
            .unwrap()
            .invert(exact)
            .unwrap();
        let ex = Estimator::new(&inst, EstimatorMode::ExactInversion)
            .unwrap()
            .invert(exact)
            .unwrap();
        assert_abs_diff_eq!(ex, g, epsilon = 1e-11);
        let linear_readout = 2.0 * g * (2.0 * phi0).tan().abs();
        assert_abs_diff_eq!(lin / g, exact / linear_readout, epsilon = 1e-12);
        assert!(
            (1.0 - lin / g - 0.04).abs() < 0.01,
            "bias {}",
            1.0 - lin / g
        );
        let fo = run_first_order(&inst).unwrap().sigma_z_expect;
        let x = g * (2.0 * phi0).tan();
        assert_abs_diff_eq!(fo, linear_readout / (1.0 + x * x), epsilon = 1e-12);
    }

    #[test]
    fn fit_log_slope_recovers_power_law() {
        let pts: Vec<(f64, f64)> = (1..=8).map(|n| (n as f64, 3.0 / (n as f64))).collect();
        let (s, se) = fit_log_slope(&pts).unwrap();
        assert_abs_diff_eq!(s, -1.0, epsilon = 1e-12);
        assert!(se.unwrap() < 1e-12);
        assert!(fit_log_slope(&[(1.0, 2.0)]).is_none());
        assert!(fit_log_slope(&[(2.0, 2.0), (2.0, 3.0)]).is_none());
        assert_eq!(fit_log_slope(&[(1.0, 2.0), (2.0, 1.0)]).unwrap().1, None);
    }

    fn small_config(mode: ScalingMode, ns: Vec<usize>) -> ScalingConfig {
        ScalingConfig {
            mode,
            observable: Observable::pauli(PauliAxis::Y),
            gamma_true: 0.001,
            target_aw: c(0.0, -100.0),
            ns,
            trials: 400,
            photons_per_trial: 200_000_000,
            seed: 11,
            strict_weakness: None,
            estimator: EstimatorMode::ExactInversion,
        }
    }

    #[test]
    fn single_n_protocols_coincide() {
        let it = scaling_experiment(small_config(ScalingMode::Iterative, vec![1])).unwrap();
        let ind =
            scaling_experiment(small_config(ScalingMode::IndependentRepeats, vec![1])).unwrap();
        assert_eq!(it.fitted_slope, None);
        let (a, b) = (it.per_n[0], ind.per_n[0]);
        let combined = (a.rmse_stderr.powi(2) + b.rmse_stderr.powi(2)).sqrt();
        assert!((a.rmse - b.rmse).abs() <= 3.0 * combined);
        assert_abs_diff_eq!(a.crb, b.crb, epsilon = 1e-15);
    }

    #[test]
    fn strict_mode_rejects_strong_coupling() {
        let mut cfg = small_config(ScalingMode::Iterative, vec![1, 2]);
        cfg.gamma_true = 0.01;
        cfg.strict_weakness = Some(DEFAULT_WEAKNESS_THRESHOLD);
        assert!(matches!(
            ScalingPlan::new(cfg).unwrap_err(),
            Error::WeaknessViolated { n: 1, .. }
        ));
    }

    #[test]
    fn scaling_is_deterministic_and_order_independent() {
        let cfg = small_config(ScalingMode::Entangled, vec![1, 3]);
        let plan = ScalingPlan::new(cfg.clone()).unwrap();
        let forward: Vec<Vec<f64>> = (0..2)
            .map(|p| {
                (0..cfg.trials)
                    .map(|t| plan.run_trial(p, t).unwrap())
                    .collect()
            })
            .collect();
        let mut backward = vec![vec![0.0; cfg.trials]; 2];
        for p in (0..2).rev() {
            for t in (0..cfg.trials).rev() {
                backward[p][t] = plan.run_trial(p, t).unwrap();
            }
        }
        assert_eq!(forward, backward);
        assert_eq!(plan.summarize(&forward), scaling_experiment(cfg).unwrap());
    }

    #[test]
    fn meter_qfi_tracks_weak_approximation() {
        let inst = photonic_like(2, 100.0).with_gamma(1e-5);
        let q = meter_qfi(&inst).unwrap().value;
        assert!((q / 40_000.0 - 1.0).abs() < 1e-3, "{q}");
    }
}
