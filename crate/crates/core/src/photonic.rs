//! Jones-calculus model of the single-photon iterative apparatus.
//!
//! Polarization is the system qubit (`|H⟩` is index 0) and the two spatial
//! paths of the beam displacer interferometer form the meter (`+z` is the
//! upper path). The photon is prepared in `|H⟩` over both paths, each path
//! gets a pair of half-wave plates realizing `exp(±iNγσ_y)`, and the
//! post-selection block routes the wanted polarization of both paths into
//! one output path. A polarizing beam splitter then reads `σ_z` of the
//! meter: `V` exits at D₁ (upper path, `+z`), `H` at D₂.
//!
//! Angles are in degrees at this interface and radians inside.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent f64 math shadows it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::protocols::{Observable, Scenario, WvaInstance};
use crate::qcore::{
    apply, eigenstate, inner, pauli, Amplitude, OperatorMatrix, PauliAxis, Sign, StateVector, ONE,
};

/// Readouts with a post-selection probability below this are rejected.
pub const MIN_READOUT_PROBABILITY: f64 = 1e-15;

/// Fast-axis angle of a wave plate, in `[0°, 180°)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveplateSetting(f64);

impl WaveplateSetting {
    pub fn degrees(angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::NonFinite);
        }
        let r = angle % 180.0;
        let a = if r < 0.0 { r + 180.0 } else { r };
        Ok(WaveplateSetting(if a >= 180.0 { 0.0 } else { a }))
    }

    pub fn angle(self) -> f64 {
        self.0
    }
}

/// `(sin, cos)` of an angle in degrees, exact at multiples of 45°.
fn sin_cos_deg(angle: f64) -> (f64, f64) {
    let r = angle % 360.0;
    if r % 45.0 == 0.0 {
        const S: f64 = core::f64::consts::FRAC_1_SQRT_2;
        let table = [
            (0.0, 1.0),
            (S, S),
            (1.0, 0.0),
            (S, -S),
            (0.0, -1.0),
            (-S, -S),
            (-1.0, 0.0),
            (-S, S),
        ];
        return table[((r / 45.0) as i64).rem_euclid(8) as usize];
    }
    angle.to_radians().sin_cos()
}

/// `[[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]]` in the `H/V` basis.
pub fn hwp(setting: WaveplateSetting) -> OperatorMatrix {
    let (s, c) = sin_cos_deg(2.0 * setting.0);
    let r = |x: f64| Complex64::new(x, 0.0);
    OperatorMatrix::from_rows([[r(c), r(s)], [r(s), r(-c)]]).expect("2x2 matrix")
}

/// Plate at `θ` followed by a plate at `0°`, which is `exp(2iθσ_y)`.
pub fn conditional_rotation(theta_deg: f64) -> Result<OperatorMatrix> {
    hwp(WaveplateSetting::degrees(0.0)?).matmul(&hwp(WaveplateSetting::degrees(theta_deg)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApparatusConfig {
    pub n_interactions: usize,
    /// Degrees.
    pub gamma: f64,
    /// Degrees.
    pub post_angle: f64,
}

impl ApparatusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_interactions == 0 {
            return Err(Error::InvalidArgument("n_interactions must be at least 1"));
        }
        if !self.gamma.is_finite() || !self.post_angle.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutPrediction {
    pub sigma_z_expect: f64,
    pub probability: f64,
    /// `⟨Nσ_y⟩_w`; `None` at orthogonal post-selection.
    pub weak_value: Option<Amplitude>,
}

/// `(|+y⟩ + e^{4iφ}|−y⟩)/√2`, linear polarization at `2φ` up to phase.
pub fn build_postselection(post_angle: f64) -> StateVector {
    let plus = eigenstate(PauliAxis::Y, Sign::Plus);
    let minus = eigenstate(PauliAxis::Y, Sign::Minus);
    let phase = Complex64::from_polar(
        core::f64::consts::FRAC_1_SQRT_2,
        4.0 * post_angle.to_radians(),
    );
    plus.scaled(Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0))
        .add(&minus.scaled(phase))
        .expect("same space")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpticalElement {
    Hwp {
        path: usize,
        setting: WaveplateSetting,
    },
    /// Shifts vertical polarization down by one path.
    BeamDisplacer,
}

/// Polarization amplitudes `[H, V]` per spatial path.
pub type PathState = Vec<[Amplitude; 2]>;

pub fn propagate(elements: &[OpticalElement], input: PathState) -> PathState {
    elements.iter().fold(input, |mut state, el| {
        match *el {
            OpticalElement::Hwp { path, setting } => {
                if let Some(p) = state.get_mut(path) {
                    let m = hwp(setting);
                    *p = [
                        m[(0, 0)] * p[0] + m[(0, 1)] * p[1],
                        m[(1, 0)] * p[0] + m[(1, 1)] * p[1],
                    ];
                }
            }
            OpticalElement::BeamDisplacer => {
                let mut out = vec![[Amplitude::default(); 2]; state.len() + 1];
                for (k, p) in state.iter().enumerate() {
                    out[k][0] += p[0];
                    out[k + 1][1] += p[1];
                }
                state = out;
            }
        }
        state
    })
}

fn plate(path: usize, angle: f64) -> Result<OpticalElement> {
    Ok(OpticalElement::Hwp {
        path,
        setting: WaveplateSetting::degrees(angle)?,
    })
}

/// Preparation of `|H⟩ ⊗ (|upper⟩ + |lower⟩)/√2` from `|H⟩` in path 0.
pub fn preparation_elements() -> Result<Vec<OpticalElement>> {
    Ok(vec![
        plate(0, 22.5)?,
        OpticalElement::BeamDisplacer,
        plate(1, 45.0)?,
    ])
}

/// Path-conditioned `exp(±iNγσ_y)`, each as an angled plate and a `0°` plate.
pub fn interaction_elements(cfg: &ApparatusConfig) -> Result<Vec<OpticalElement>> {
    let half = 0.5 * cfg.n_interactions as f64 * cfg.gamma;
    Ok(vec![
        plate(0, half)?,
        plate(1, -half)?,
        plate(0, 0.0)?,
        plate(1, 0.0)?,
    ])
}

/// Routes polarization `2φ` of both paths into path 1: `V` from the upper
/// path and `H` from the lower path.
pub fn postselection_elements(post_angle: f64) -> Result<Vec<OpticalElement>> {
    Ok(vec![
        plate(0, post_angle)?,
        plate(1, post_angle)?,
        plate(0, 45.0)?,
        OpticalElement::BeamDisplacer,
    ])
}

pub fn apparatus_elements(cfg: &ApparatusConfig) -> Result<Vec<OpticalElement>> {
    let mut all = preparation_elements()?;
    all.extend(interaction_elements(cfg)?);
    all.extend(postselection_elements(cfg.post_angle)?);
    Ok(all)
}

fn jones(v: [Amplitude; 2]) -> StateVector {
    StateVector::from_slice(&v).expect("2-vector")
}

fn readout(d1: f64, d2: f64) -> Result<(f64, f64)> {
    let probability = d1 + d2;
    if !(probability >= MIN_READOUT_PROBABILITY) {
        return Err(Error::DivergentReadout(probability));
    }
    Ok(((d1 - d2) / probability, probability))
}

/// Element-by-element propagation of one photon through the apparatus.
pub fn simulate_apparatus(cfg: &ApparatusConfig) -> Result<ReadoutPrediction> {
    cfg.validate()?;
    let out = propagate(&apparatus_elements(cfg)?, vec![[ONE, Amplitude::default()]]);
    let kept = out[1];
    let (sigma_z_expect, probability) = readout(kept[1].norm_sqr(), kept[0].norm_sqr())?;

    // system states as the optics define them
    let prepared = propagate(&preparation_elements()?, vec![[ONE, Amplitude::default()]]);
    let psi = jones(prepared[0]).normalized()?;
    let upper_post = postselection_elements(cfg.post_angle)?
        .into_iter()
        .filter(|e| matches!(e, OpticalElement::Hwp { path: 0, .. }))
        .try_fold(OperatorMatrix::identity(1), |acc, e| match e {
            OpticalElement::Hwp { setting, .. } => hwp(setting).matmul(&acc),
            OpticalElement::BeamDisplacer => Ok(acc),
        })?;
    let phi = apply(&upper_post.adjoint(), &jones([Amplitude::default(), ONE]))?;
    let overlap = inner(&phi, &psi)?;
    let weak_value = (overlap.norm() >= 1e-12).then(|| {
        let num = inner(&phi, &apply(&pauli(PauliAxis::Y), &psi).expect("qubit")).expect("qubit");
        num / overlap * cfg.n_interactions as f64
    });
    Ok(ReadoutPrediction {
        sigma_z_expect,
        probability,
        weak_value,
    })
}

/// Exact readout from the post-selection amplitudes
/// `a± ∝ cos(2φ ± Nγ)`.
pub fn readout_closed_form(cfg: &ApparatusConfig) -> Result<ReadoutPrediction> {
    cfg.validate()?;
    let phi = cfg.post_angle.to_radians();
    let ng = cfg.n_interactions as f64 * cfg.gamma.to_radians();
    let d1 = 0.5 * (2.0 * phi + ng).cos().powi(2);
    let d2 = 0.5 * (2.0 * phi - ng).cos().powi(2);
    let (sigma_z_expect, probability) = readout(d1, d2)?;
    let c = (2.0 * phi).cos();
    let weak_value = (c.abs() >= 1e-12)
        .then(|| Complex64::new(0.0, cfg.n_interactions as f64 * (2.0 * phi).sin() / c));
    Ok(ReadoutPrediction {
        sigma_z_expect,
        probability,
        weak_value,
    })
}

/// Abstract iterative instance equivalent to the apparatus.
pub fn to_instance(cfg: &ApparatusConfig) -> Result<WvaInstance> {
    cfg.validate()?;
    WvaInstance::new(
        Scenario::Iterative,
        Observable::pauli(PauliAxis::Y),
        cfg.n_interactions,
        cfg.gamma.to_radians(),
        eigenstate(PauliAxis::Z, Sign::Plus),
        build_postselection(cfg.post_angle),
        eigenstate(PauliAxis::X, Sign::Plus),
    )
}

/// Amplification factor shared by the experimental settings.
pub const TARGET_AMPLIFICATION: f64 = 11.5;

/// `(N, φ)` pairs holding `|N tan 2φ|` near 11.5.
pub fn amplified_settings() -> Vec<(usize, f64)> {
    vec![(1, 47.5), (2, 50.0), (3, 52.3), (4, 54.6)]
}

/// `|N tan 2φ|` for one setting.
pub fn amplification(n: usize, post_angle: f64) -> f64 {
    (n as f64 * (2.0 * post_angle.to_radians()).tan()).abs()
}

/// Configurations of the apparatus/abstract comparison grid: `N = 1..=5`,
/// five couplings over `[−3°, 3°]`, four post-selection angles over
/// `[40°, 50°]`.
pub fn equivalence_grid() -> Vec<ApparatusConfig> {
    let lin = |lo: f64, hi: f64, k: usize, i: usize| lo + (hi - lo) * i as f64 / (k - 1) as f64;
    let mut grid = Vec::with_capacity(100);
    for n in 1..=5 {
        for g in 0..5 {
            for p in 0..4 {
                grid.push(ApparatusConfig {
                    n_interactions: n,
                    gamma: lin(-3.0, 3.0, 5, g),
                    post_angle: lin(40.0, 50.0, 4, p),
                });
            }
        }
    }
    grid
}
