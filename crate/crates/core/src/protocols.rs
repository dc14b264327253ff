//! The three weak-value-amplification scenarios.
//!
//! A system (one qubit, or `N` qubits for the entangled scheme) couples to a
//! single meter qubit through `exp(iγ G ⊗ σ_z)`, where the generator `G` is
//!
//! * `A` for one independent interaction,
//! * `N·A` for `N` iterative interactions with the same system qubit,
//! * `Σ_k A_k` for one interaction with each qubit of an entangled system.
//!
//! The system is then projected onto a post-selection state and the
//! unnormalized meter state is kept. Everything here is exact; the
//! first-order expansions are provided separately for comparison.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
#[allow(unused_imports)] // inherent f64 math shadows it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::qcore::{
    apply, apply_on, eigenstate, inner, pauli, tensor_power, Amplitude, OperatorMatrix, PauliAxis,
    Sign, Space, StateVector, Tensor, I, ZERO,
};

/// Floor on `|⟨φ|ψ⟩|` below which the weak value is undefined.
pub const DEFAULT_OVERLAP_FLOOR: f64 = 1e-12;
/// Largest entangled system the builders will construct.
pub const MAX_ENTANGLED_QUBITS: usize = 20;
/// Entangled runs up to this size use the full state-vector simulation.
pub const DENSE_ENTANGLED_LIMIT: usize = 12;
/// Post-selection probabilities below this are treated as zero.
pub const MIN_PROBABILITY: f64 = 1e-300;

const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// A two-level Hermitian observable with its spectral decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: OperatorMatrix,
    lambda_max: f64,
    lambda_min: f64,
    eigvec_max: StateVector,
    eigvec_min: StateVector,
    // A = offset·I + radius·(n·σ)
    offset: f64,
    radius: f64,
}

impl Observable {
    pub fn new(matrix: OperatorMatrix) -> Result<Self> {
        if matrix.space() != Space::qubits(1) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: matrix.dim(),
            });
        }
        if !matrix.is_hermitian(HERMITIAN_TOLERANCE) {
            return Err(Error::NotHermitian(HERMITIAN_TOLERANCE));
        }
        let offset = 0.5 * (matrix[(0, 0)].re + matrix[(1, 1)].re);
        let az = 0.5 * (matrix[(0, 0)].re - matrix[(1, 1)].re);
        let ax = matrix[(0, 1)].re;
        let ay = -matrix[(0, 1)].im;
        let transverse = ax.hypot(ay);
        let radius = transverse.hypot(az);
        if radius <= f64::EPSILON * offset.abs().max(1.0) {
            return Err(Error::DegenerateObservable(offset));
        }
        // Bloch angles of the λ_max eigenvector
        let half_polar = 0.5 * transverse.atan2(az);
        let azimuth = Complex64::from_polar(1.0, ay.atan2(ax));
        let (s, c) = half_polar.sin_cos();
        let eigvec_max =
            StateVector::new(vec![Complex64::new(c, 0.0), azimuth * s])?.with_canonical_phase();
        let eigvec_min =
            StateVector::new(vec![Complex64::new(s, 0.0), -azimuth * c])?.with_canonical_phase();
        Ok(Observable {
            matrix,
            lambda_max: offset + radius,
            lambda_min: offset - radius,
            eigvec_max,
            eigvec_min,
            offset,
            radius,
        })
    }

    pub fn pauli(axis: PauliAxis) -> Self {
        Observable::new(pauli(axis)).expect("Pauli matrices are non-degenerate")
    }

    /// `offset·I + bloch·σ`.
    pub fn from_bloch(offset: f64, bloch: [f64; 3]) -> Result<Self> {
        let m = OperatorMatrix::identity(1).scaled(Complex64::new(offset, 0.0));
        let m = PauliAxis::ALL
            .iter()
            .zip(bloch)
            .try_fold(m, |acc, (&axis, b)| {
                acc.add(&pauli(axis).scaled(Complex64::new(b, 0.0)))
            })?;
        Observable::new(m)
    }

    pub fn matrix(&self) -> &OperatorMatrix {
        &self.matrix
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn eigvec_max(&self) -> &StateVector {
        &self.eigvec_max
    }

    pub fn eigvec_min(&self) -> &StateVector {
        &self.eigvec_min
    }

    /// `λ_max − λ_min`.
    pub fn spread(&self) -> f64 {
        self.lambda_max - self.lambda_min
    }

    /// `exp(iθA) = e^{iθa₀}(cos(θr)·I + i·sin(θr)·n·σ)`.
    pub fn exp_i(&self, theta: f64) -> OperatorMatrix {
        let (s, c) = (theta * self.radius).sin_cos();
        let traceless = self
            .matrix
            .add(&OperatorMatrix::identity(1).scaled(Complex64::new(-self.offset, 0.0)))
            .expect("2x2")
            .scaled(Complex64::new(0.0, s / self.radius));
        OperatorMatrix::identity(1)
            .scaled(Complex64::new(c, 0.0))
            .add(&traceless)
            .expect("2x2")
            .scaled(Complex64::from_polar(1.0, theta * self.offset))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Independent,
    Entangled,
    Iterative,
}

/// A fully specified measurement scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct WvaInstance {
    scenario: Scenario,
    observable: Observable,
    n_interactions: usize,
    gamma: f64,
    system_init: StateVector,
    system_post: StateVector,
    meter_init: StateVector,
}

impl WvaInstance {
    /// `n_interactions` is the repetition count for `Independent` (the
    /// evolution itself is a single interaction), the number of coupling
    /// rounds for `Iterative`, and the number of system qubits for
    /// `Entangled`. `gamma` is in radians.
    pub fn new(
        scenario: Scenario,
        observable: Observable,
        n_interactions: usize,
        gamma: f64,
        system_init: StateVector,
        system_post: StateVector,
        meter_init: StateVector,
    ) -> Result<Self> {
        if n_interactions == 0 {
            return Err(Error::InvalidInstance(
                "at least one interaction is required",
            ));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidInstance("gamma must be finite"));
        }
        let system_qubits = match scenario {
            Scenario::Entangled => n_interactions,
            Scenario::Independent | Scenario::Iterative => 1,
        };
        for s in [&system_init, &system_post] {
            if s.space().n_qubits() != system_qubits {
                return Err(Error::DimensionMismatch {
                    expected: 1 << system_qubits,
                    found: s.dim(),
                });
            }
        }
        if meter_init.space() != Space::qubits(1) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: meter_init.dim(),
            });
        }
        for s in [&system_init, &system_post, &meter_init] {
            if !s.is_normalized() {
                return Err(Error::Unnormalized(s.norm_sqr()));
            }
        }
        Ok(WvaInstance {
            scenario,
            observable,
            n_interactions,
            gamma,
            system_init,
            system_post,
            meter_init,
        })
    }

    /// Instance whose states come from the builders so that the effective
    /// (N-fold) weak value equals `target`, with the meter in `|+x⟩`.
    pub fn designed(
        scenario: Scenario,
        observable: Observable,
        n_interactions: usize,
        gamma: f64,
        target: Amplitude,
    ) -> Result<Self> {
        let (psi, phi) = match scenario {
            Scenario::Independent => build_iterative_states(&observable, 1, target)?,
            Scenario::Iterative => build_iterative_states(&observable, n_interactions, target)?,
            Scenario::Entangled => build_entangled_states(&observable, n_interactions, target)?,
        };
        WvaInstance::new(
            scenario,
            observable,
            n_interactions,
            gamma,
            psi,
            phi,
            eigenstate(PauliAxis::X, Sign::Plus),
        )
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        WvaInstance {
            gamma,
            ..self.clone()
        }
    }

    pub fn with_post_selection(&self, system_post: StateVector) -> Result<Self> {
        WvaInstance::new(
            self.scenario,
            self.observable.clone(),
            self.n_interactions,
            self.gamma,
            self.system_init.clone(),
            system_post,
            self.meter_init.clone(),
        )
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn n_interactions(&self) -> usize {
        self.n_interactions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn system_init(&self) -> &StateVector {
        &self.system_init
    }

    pub fn system_post(&self) -> &StateVector {
        &self.system_post
    }

    pub fn meter_init(&self) -> &StateVector {
        &self.meter_init
    }

    /// Interactions in a single post-selected shot.
    pub fn shot_interactions(&self) -> usize {
        match self.scenario {
            Scenario::Independent => 1,
            _ => self.n_interactions,
        }
    }

    /// `G|ψ⟩` for the scenario's generator.
    fn generator_applied(&self) -> Result<StateVector> {
        let a = self.observable.matrix();
        match self.scenario {
            Scenario::Independent => apply(a, &self.system_init),
            Scenario::Iterative => Ok(apply(a, &self.system_init)?
                .scaled(Complex64::new(self.n_interactions as f64, 0.0))),
            Scenario::Entangled => (0..self.n_interactions)
                .try_fold(StateVector::zeros(self.n_interactions), |acc, k| {
                    acc.add(&apply_on(a, &[k], &self.system_init)?)
                }),
        }
    }

    /// Weak value of the generator: `⟨A⟩_w`, `⟨NA⟩_w` or `⟨Σ_k A_k⟩_w`.
    pub fn effective_weak_value(&self) -> Result<Amplitude> {
        let overlap = self.overlap()?;
        if overlap.norm() < DEFAULT_OVERLAP_FLOOR {
            return Err(Error::OrthogonalPostSelection(overlap.norm()));
        }
        Ok(inner(&self.system_post, &self.generator_applied()?)? / overlap)
    }

    /// `⟨φ|ψ⟩`.
    pub fn overlap(&self) -> Result<Amplitude> {
        inner(&self.system_post, &self.system_init)
    }

    /// Spectral weights `(g, ⟨φ|Π_g|ψ⟩)` of the generator between the
    /// pre- and post-selection states.
    pub fn generator_spectrum(&self) -> Result<Vec<(f64, Amplitude)>> {
        let (lmax, lmin) = (self.observable.lambda_max, self.observable.lambda_min);
        let qubits = self.system_init.space().n_qubits();
        // rotate both states into the product eigenbasis of A
        let to_eigen =
            OperatorMatrix::outer(&StateVector::basis(1, 0), &self.observable.eigvec_max)?.add(
                &OperatorMatrix::outer(&StateVector::basis(1, 1), &self.observable.eigvec_min)?,
            )?;
        let rotate = |v: &StateVector| -> Result<StateVector> {
            (0..qubits).try_fold(v.clone(), |acc, k| apply_on(&to_eigen, &[k], &acc))
        };
        let psi = rotate(&self.system_init)?;
        let phi = rotate(&self.system_post)?;
        let mut weights = vec![ZERO; qubits + 1];
        for (b, (p, q)) in phi.amplitudes().iter().zip(psi.amplitudes()).enumerate() {
            weights[b.count_ones() as usize] += p.conj() * q;
        }
        let scale = match self.scenario {
            Scenario::Iterative => self.n_interactions as f64,
            _ => 1.0,
        };
        Ok(weights
            .into_iter()
            .enumerate()
            .map(|(j, w)| (scale * ((qubits - j) as f64 * lmax + j as f64 * lmin), w))
            .collect())
    }
}

/// Post-selected meter and the quantities read from it.
#[derive(Debug, Clone, PartialEq)]
pub struct PostSelectedMeter {
    pub raw_meter: StateVector,
    pub probability: f64,
    pub normalized_meter: StateVector,
    pub sigma_z_expect: f64,
    pub sigma_y_expect: f64,
    /// `⟨−x|M⟩ / ⟨+x|M⟩ / (iγ)`; the `γ → 0` limit at `γ = 0`, and `None`
    /// when the `|+x⟩` amplitude vanishes.
    pub effective_weak_value: Option<Amplitude>,
}

impl PostSelectedMeter {
    fn from_raw(raw_meter: StateVector, inst: &WvaInstance) -> Result<Self> {
        let probability = raw_meter.norm_sqr();
        if !(probability >= MIN_PROBABILITY) {
            return Err(Error::ZeroProbability(probability));
        }
        let normalized_meter = raw_meter.normalized()?;
        let (a, b) = (normalized_meter[0], normalized_meter[1]);
        let sigma_z_expect = (a.norm_sqr() - b.norm_sqr()).clamp(-1.0, 1.0);
        let sigma_y_expect = (2.0 * (a.conj() * b).im).clamp(-1.0, 1.0);
        let effective_weak_value = if inst.gamma == 0.0 {
            Some(inst.effective_weak_value()?)
        } else {
            let plus = (raw_meter[0] + raw_meter[1]) * FRAC_1_SQRT_2;
            let minus = (raw_meter[0] - raw_meter[1]) * FRAC_1_SQRT_2;
            (plus.norm() >= MIN_PROBABILITY).then(|| minus / plus / (I * inst.gamma))
        };
        Ok(PostSelectedMeter {
            raw_meter,
            probability,
            normalized_meter,
            sigma_z_expect,
            sigma_y_expect,
            effective_weak_value,
        })
    }
}

/// Diagnostic ratios of the weak-interaction regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeaknessReport {
    /// `max |Nλ| / |A_w|`
    pub ratio_amp: f64,
    /// `|γ·A_w|`
    pub ratio_gamma: f64,
    pub satisfied: bool,
}

/// `⟨φ|A|ψ⟩ / ⟨φ|ψ⟩` for single-qubit states.
pub fn weak_value(a: &Observable, psi: &StateVector, phi: &StateVector) -> Result<Amplitude> {
    weak_value_with_floor(a, psi, phi, DEFAULT_OVERLAP_FLOOR)
}

pub fn weak_value_with_floor(
    a: &Observable,
    psi: &StateVector,
    phi: &StateVector,
    floor: f64,
) -> Result<Amplitude> {
    let overlap = inner(phi, psi)?;
    if overlap.norm() < floor {
        return Err(Error::OrthogonalPostSelection(overlap.norm()));
    }
    Ok(inner(phi, &apply(a.matrix(), psi)?)? / overlap)
}

/// Coefficients `(c_max, c_min)` of the post-selection branches before
/// renormalization.
fn post_selection_coefficients(
    a: &Observable,
    n: usize,
    target: Amplitude,
) -> Result<(Amplitude, Amplitude)> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1"));
    }
    if target == ZERO || !target.re.is_finite() || !target.im.is_finite() {
        return Err(Error::ZeroTarget);
    }
    if a.spread() <= 0.0 {
        return Err(Error::DegenerateObservable(a.lambda_max));
    }
    let n = n as f64;
    let scale = FRAC_1_SQRT_2 / target.norm();
    let t = target.conj();
    Ok((
        (t - n * a.lambda_min) * scale,
        -(t - n * a.lambda_max) * scale,
    ))
}

/// Pre- and post-selection states for `n` iterative interactions. The
/// post-selection state is renormalized; the pair realizes
/// `⟨A⟩_w = target / n` exactly, so `⟨nA⟩_w = target`.
pub fn build_iterative_states(
    a: &Observable,
    n: usize,
    target: Amplitude,
) -> Result<(StateVector, StateVector)> {
    let (c_max, c_min) = post_selection_coefficients(a, n, target)?;
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let psi = a.eigvec_max.scaled(h).add(&a.eigvec_min.scaled(h))?;
    let phi = a
        .eigvec_max
        .scaled(c_max)
        .add(&a.eigvec_min.scaled(c_min))?
        .normalized()?;
    Ok((psi, phi))
}

/// GHZ-type pre-selection over `n` system qubits and the matching
/// post-selection superposition of the two product branches.
pub fn build_entangled_states(
    a: &Observable,
    n: usize,
    target: Amplitude,
) -> Result<(StateVector, StateVector)> {
    build_entangled_states_with_limit(a, n, target, MAX_ENTANGLED_QUBITS)
}

pub fn build_entangled_states_with_limit(
    a: &Observable,
    n: usize,
    target: Amplitude,
    limit: usize,
) -> Result<(StateVector, StateVector)> {
    if n > limit {
        return Err(Error::SizeLimit {
            requested: n,
            limit,
        });
    }
    let (c_max, c_min) = post_selection_coefficients(a, n, target)?;
    let all_max = tensor_power(&a.eigvec_max, n);
    let all_min = tensor_power(&a.eigvec_min, n);
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let psi = all_max.scaled(h).add(&all_min.scaled(h))?;
    let phi = all_max
        .scaled(c_max)
        .add(&all_min.scaled(c_min))?
        .normalized()?;
    Ok((psi, phi))
}

/// `exp(iθ A ⊗ σ_z) = exp(iθA) ⊗ |+z⟩⟨+z| + exp(−iθA) ⊗ |−z⟩⟨−z|`.
pub fn interaction_unitary(a: &Observable, theta: f64) -> OperatorMatrix {
    let up = OperatorMatrix::projector(&StateVector::basis(1, 0));
    let down = OperatorMatrix::projector(&StateVector::basis(1, 1));
    a.exp_i(theta)
        .tensor(&up)
        .add(&a.exp_i(-theta).tensor(&down))
        .expect("4x4")
}

/// Evolution route for the entangled scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntangledRoute {
    /// Dense up to `DENSE_ENTANGLED_LIMIT` qubits, spectral beyond.
    Auto,
    /// One two-qubit gate per system qubit on the full `2^(N+1)` vector.
    Dense,
    /// Phases on the generator eigenspaces; exact for any states.
    Spectral,
}

/// Exact post-selected meter.
pub fn run_exact(inst: &WvaInstance) -> Result<PostSelectedMeter> {
    run_exact_with(inst, EntangledRoute::Auto)
}

pub fn run_exact_with(inst: &WvaInstance, route: EntangledRoute) -> Result<PostSelectedMeter> {
    let raw = match inst.scenario {
        Scenario::Independent | Scenario::Iterative => {
            let theta = inst.gamma * inst.shot_interactions() as f64;
            let joint = inst.system_init.tensor(&inst.meter_init);
            project_system(
                &apply(&interaction_unitary(&inst.observable, theta), &joint)?,
                &inst.system_post,
            )?
        }
        Scenario::Entangled => {
            let dense = match route {
                EntangledRoute::Auto => inst.n_interactions <= DENSE_ENTANGLED_LIMIT,
                EntangledRoute::Dense => true,
                EntangledRoute::Spectral => false,
            };
            if dense {
                let gate = interaction_unitary(&inst.observable, inst.gamma);
                let meter = inst.n_interactions;
                let joint = (0..inst.n_interactions)
                    .try_fold(inst.system_init.tensor(&inst.meter_init), |acc, k| {
                        apply_on(&gate, &[k, meter], &acc)
                    })?;
                project_system(&joint, &inst.system_post)?
            } else {
                spectral_meter(&inst.generator_spectrum()?, &inst.meter_init, inst.gamma)
            }
        }
    };
    PostSelectedMeter::from_raw(raw, inst)
}

/// Raw meter `(m₊ Σ w e^{iγg}, m₋ Σ w e^{−iγg})` from generator weights.
pub fn spectral_meter(
    spectrum: &[(f64, Amplitude)],
    meter: &StateVector,
    gamma: f64,
) -> StateVector {
    let branch = |sign: f64| -> Amplitude {
        spectrum
            .iter()
            .map(|&(g, w)| w * Complex64::from_polar(1.0, sign * gamma * g))
            .sum()
    };
    StateVector::from_parts(
        Space::qubits(1),
        vec![meter[0] * branch(1.0), meter[1] * branch(-1.0)],
    )
}

/// `⟨φ|_sys ⊗ I_meter` applied to a system⊗meter vector.
fn project_system(joint: &StateVector, post: &StateVector) -> Result<StateVector> {
    let meter_dim = joint.dim() / post.dim();
    if meter_dim * post.dim() != joint.dim() {
        return Err(Error::DimensionMismatch {
            expected: post.dim() * 2,
            found: joint.dim(),
        });
    }
    let mut out = vec![ZERO; meter_dim];
    for (s, p) in post.amplitudes().iter().enumerate() {
        let pc = p.conj();
        for (m, o) in out.iter_mut().enumerate() {
            *o += pc * joint[s * meter_dim + m];
        }
    }
    StateVector::new(out)
}

/// First-order meter `⟨φ|ψ⟩(|m⟩ + iγ⟨G⟩_w σ_z|m⟩)`. Its squared norm is the
/// approximate post-selection probability.
pub fn run_first_order(inst: &WvaInstance) -> Result<PostSelectedMeter> {
    let overlap = inst.overlap()?;
    let aw = inst.effective_weak_value()?;
    let m = &inst.meter_init;
    let kick = apply(&pauli(PauliAxis::Z), m)?.scaled(I * inst.gamma * aw);
    let raw = m.add(&kick)?.scaled(overlap);
    PostSelectedMeter::from_raw(raw, inst)
}

/// Checks `|Nλ| ≪ |A_w| ≪ 1/|γ|` with both ratios bounded by `threshold`.
pub fn check_weakness_condition(
    a: &Observable,
    n: usize,
    aw: Amplitude,
    gamma: f64,
    threshold: f64,
) -> WeaknessReport {
    let extreme = (n as f64 * a.lambda_max)
        .abs()
        .max((n as f64 * a.lambda_min).abs());
    let ratio_amp = if aw == ZERO {
        f64::INFINITY
    } else {
        extreme / aw.norm()
    };
    let ratio_gamma = (gamma * aw.norm()).abs();
    WeaknessReport {
        ratio_amp,
        ratio_gamma,
        satisfied: ratio_amp <= threshold && ratio_gamma <= threshold,
    }
}

/// Weak-regime estimate `N²(λ_max − λ_min)² / (4|A_w|²)` of the
/// post-selection probability.
pub fn approximate_probability(a: &Observable, n: usize, aw: Amplitude) -> f64 {
    let n = n as f64;
    n * n * a.spread() * a.spread() / (4.0 * aw.norm_sqr())
}

/// `|⟨φ|ψ⟩|²` of an instance.
pub fn overlap_probability(inst: &WvaInstance) -> Result<f64> {
    Ok(inst.overlap()?.norm_sqr())
}
