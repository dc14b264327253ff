//! Randomized check that entangled and iterative schemes produce the same
//! post-selected meter.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent f64 math shadows it when std is linked
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::protocols::{run_exact, Observable, Scenario, WvaInstance};
use crate::qcore::{fidelity, Amplitude, StateVector};
use crate::stream::{stream, TrialRng};

pub const FIDELITY_TOLERANCE: f64 = 1e-10;
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// One randomly drawn instance, in plain numbers so it can be printed and
/// replayed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceCase {
    pub index: u64,
    pub offset: f64,
    pub bloch: [f64; 3],
    pub n: usize,
    /// Radians.
    pub gamma: f64,
    pub target: Amplitude,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseOutcome {
    pub case: EquivalenceCase,
    pub infidelity: f64,
    pub delta_p: f64,
}

impl CaseOutcome {
    fn badness(&self) -> f64 {
        (self.infidelity / FIDELITY_TOLERANCE).max(self.delta_p / PROBABILITY_TOLERANCE)
    }

    pub fn passed(&self) -> bool {
        self.infidelity <= FIDELITY_TOLERANCE && self.delta_p <= PROBABILITY_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub cases: usize,
    pub max_infidelity: f64,
    pub max_delta_p: f64,
    /// Case furthest outside (or closest to) the tolerances.
    pub worst: Option<CaseOutcome>,
}

impl EquivalenceReport {
    /// Reduction over outcomes in case order.
    pub fn from_outcomes(outcomes: &[CaseOutcome]) -> Self {
        let worst = outcomes
            .iter()
            .copied()
            .fold(None::<CaseOutcome>, |w, o| match w {
                Some(w) if w.badness() >= o.badness() => Some(w),
                _ => Some(o),
            });
        EquivalenceReport {
            cases: outcomes.len(),
            max_infidelity: outcomes.iter().map(|o| o.infidelity).fold(0.0, f64::max),
            max_delta_p: outcomes.iter().map(|o| o.delta_p).fold(0.0, f64::max),
            worst,
        }
    }

    pub fn passed(&self) -> bool {
        self.max_infidelity <= FIDELITY_TOLERANCE && self.max_delta_p <= PROBABILITY_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceConfig {
    pub cases: usize,
    pub seed: u64,
    /// Candidate `N`; empty means uniform over `1..=8`.
    pub ns: Vec<usize>,
    /// Size of a deliberate perturbation of the entangled post-selection
    /// state, used as a negative control.
    pub fault: Option<f64>,
}

impl Default for EquivalenceConfig {
    fn default() -> Self {
        EquivalenceConfig {
            cases: 1000,
            seed: 42,
            ns: Vec::new(),
            fault: None,
        }
    }
}

fn uniform(rng: &mut TrialRng, lo: f64, hi: f64) -> f64 {
    Uniform::new_inclusive(lo, hi)
        .expect("finite bounds")
        .sample(rng)
}

/// Draws case `index` of the stream keyed by `seed`.
pub fn random_case(seed: u64, index: u64, ns: &[usize]) -> EquivalenceCase {
    let mut rng = stream(seed, index);
    let offset = uniform(&mut rng, -1.0, 1.0);
    let radius = uniform(&mut rng, 0.2, 2.0);
    let dir: [f64; 3] = core::array::from_fn(|_| StandardNormal.sample(&mut rng));
    let len = dir
        .iter()
        .map(|d| d * d)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let n = if ns.is_empty() {
        Uniform::new_inclusive(1usize, 8)
            .expect("valid range")
            .sample(&mut rng)
    } else {
        ns[Uniform::new(0, ns.len())
            .expect("nonempty")
            .sample(&mut rng)]
    };
    let gamma = uniform(&mut rng, -0.1, 0.1);
    let magnitude = uniform(&mut rng, 5.0, 50.0);
    let phase = uniform(&mut rng, 0.0, core::f64::consts::TAU);
    EquivalenceCase {
        index,
        offset,
        bloch: dir.map(|d| radius * d / len),
        n,
        gamma,
        target: Complex64::from_polar(magnitude, phase),
    }
}

/// Runs both schemes for one case. With `fault = Some(ε)` the entangled
/// post-selection state is displaced by `ε` along a fixed direction.
pub fn check_case(case: &EquivalenceCase, fault: Option<f64>) -> Result<CaseOutcome> {
    let a = Observable::from_bloch(case.offset, case.bloch)?;
    let iterative = WvaInstance::designed(
        Scenario::Iterative,
        a.clone(),
        case.n,
        case.gamma,
        case.target,
    )?;
    let mut entangled =
        WvaInstance::designed(Scenario::Entangled, a, case.n, case.gamma, case.target)?;
    if let Some(eps) = fault {
        if !eps.is_finite() {
            return Err(Error::InvalidArgument("fault size must be finite"));
        }
        let post = entangled.system_post();
        let kick = StateVector::basis(case.n, post.dim() - 1).scaled(Complex64::new(0.0, eps));
        entangled = entangled.with_post_selection(post.add(&kick)?.normalized()?)?;
    }
    let it = run_exact(&iterative)?;
    let en = run_exact(&entangled)?;
    Ok(CaseOutcome {
        case: *case,
        infidelity: 1.0 - fidelity(&it.normalized_meter, &en.normalized_meter)?,
        delta_p: (it.probability - en.probability).abs(),
    })
}

/// Sequential run over all cases.
pub fn run_equivalence(config: &EquivalenceConfig) -> Result<EquivalenceReport> {
    let outcomes = (0..config.cases as u64)
        .map(|i| check_case(&random_case(config.seed, i, &config.ns), config.fault))
        .collect::<Result<Vec<_>>>()?;
    Ok(EquivalenceReport::from_outcomes(&outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn cases_respect_ranges_and_replay() {
        for i in 0..200 {
            let c = random_case(9, i, &[]);
            let r = c.bloch.iter().map(|b| b * b).sum::<f64>().sqrt();
            assert!((0.2..=2.0 + 1e-12).contains(&r));
            assert!((1..=8).contains(&c.n));
            assert!(c.gamma.abs() <= 0.1 && (-1.0..=1.0).contains(&c.offset));
            assert!((5.0 - 1e-12..=50.0 + 1e-12).contains(&c.target.norm()));
            assert_eq!(c, random_case(9, i, &[]));
        }
        assert!((0..50).all(|i| random_case(1, i, &[3]).n == 3));
    }

    #[test]
    fn default_suite_passes() {
        let report = run_equivalence(&EquivalenceConfig {
            cases: 200,
            ..Default::default()
        })
        .unwrap();
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.cases, 200);
    }

    #[test]
    fn single_qubit_cases_agree_to_rounding() {
        let cfg = EquivalenceConfig {
            cases: 50,
            ns: vec![1],
            ..Default::default()
        };
        let report = run_equivalence(&cfg).unwrap();
        assert!(
            report.max_infidelity < 1e-14 && report.max_delta_p < 1e-15,
            "{report:?}"
        );
    }

    #[test]
    fn injected_fault_is_detected() {
        let cfg = EquivalenceConfig {
            cases: 20,
            fault: Some(1e-3),
            ..Default::default()
        };
        let report = run_equivalence(&cfg).unwrap();
        assert!(!report.passed());
        assert!(!report.worst.unwrap().passed());
    }
}
