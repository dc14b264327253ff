//! Dense complex linear algebra over small qubit spaces.
//!
//! Every space is a tensor product of two-level factors. Subsystems are
//! flattened left to right: the first factor is the most significant bit of
//! the basis index. Protocol code always places system qubits first and the
//! meter last.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;
#[allow(unused_imports)] // inherent f64 math shadows it when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

/// Complex amplitude type used throughout the crate.
pub type Amplitude = Complex64;

pub(crate) const ZERO: Amplitude = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Amplitude = Complex64::new(1.0, 0.0);
pub(crate) const I: Amplitude = Complex64::new(0.0, 1.0);

/// Tolerance on ‖v‖² for a state to count as normalized.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// A tensor product of `qubits` two-level subsystems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Space {
    qubits: usize,
}

impl Space {
    pub const fn qubits(n: usize) -> Self {
        Space { qubits: n }
    }

    pub fn from_dim(dim: usize) -> Result<Self> {
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::NotQubitSpace(dim));
        }
        Ok(Space {
            qubits: dim.trailing_zeros() as usize,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    /// Concatenation of the two factor lists.
    pub fn join(&self, other: &Space) -> Space {
        Space::qubits(self.qubits + other.qubits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub const ALL: [PauliAxis; 3] = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Complex amplitude vector over a qubit space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: Space,
    amps: Vec<Amplitude>,
}

impl StateVector {
    /// Wraps raw amplitudes; the length must be a power of two and every
    /// entry finite. No normalization is applied.
    pub fn new(amps: Vec<Amplitude>) -> Result<Self> {
        let space = Space::from_dim(amps.len())?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(StateVector { space, amps })
    }

    pub fn from_slice(amps: &[Amplitude]) -> Result<Self> {
        Self::new(amps.to_vec())
    }

    /// Computational basis vector `|index⟩` on `qubits` qubits.
    pub fn basis(qubits: usize, index: usize) -> Self {
        let space = Space::qubits(qubits);
        let mut amps = vec![ZERO; space.dim()];
        amps[index] = ONE;
        StateVector { space, amps }
    }

    pub fn zeros(qubits: usize) -> Self {
        let space = Space::qubits(qubits);
        StateVector {
            space,
            amps: vec![ZERO; space.dim()],
        }
    }

    pub(crate) fn from_parts(space: Space, amps: Vec<Amplitude>) -> Self {
        debug_assert_eq!(space.dim(), amps.len());
        StateVector { space, amps }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Amplitude> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE
    }

    /// Returns `self / ‖self‖`.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Unnormalized(n * n));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, c: Amplitude) -> Self {
        StateVector {
            space: self.space,
            amps: self.amps.iter().map(|a| a * c).collect(),
        }
    }

    pub fn add(&self, other: &StateVector) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(StateVector {
            space: self.space,
            amps: self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &StateVector) -> Result<Self> {
        self.add(&other.scaled(-ONE))
    }

    /// Multiplies by the unit phase that makes the first nonzero amplitude
    /// real and positive.
    pub fn with_canonical_phase(&self) -> Self {
        match self.amps.iter().find(|a| a.norm() > 1e-15) {
            Some(first) => self.scaled(first.conj() / first.norm()),
            None => self.clone(),
        }
    }
}

impl Index<usize> for StateVector {
    type Output = Amplitude;

    fn index(&self, i: usize) -> &Amplitude {
        &self.amps[i]
    }
}

/// Square complex matrix acting on a qubit space, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    space: Space,
    entries: Vec<Amplitude>,
}

impl OperatorMatrix {
    /// Builds from row-major entries; `entries.len()` must be `d*d` with `d`
    /// a power of two.
    pub fn new(entries: Vec<Amplitude>) -> Result<Self> {
        let d = (entries.len() as f64).sqrt().round() as usize;
        if d * d != entries.len() {
            return Err(Error::InvalidArgument(
                "operator entries do not form a square matrix",
            ));
        }
        let space = Space::from_dim(d)?;
        if entries
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(OperatorMatrix { space, entries })
    }

    pub fn from_rows<const D: usize>(rows: [[Amplitude; D]; D]) -> Result<Self> {
        Self::new(rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn identity(qubits: usize) -> Self {
        let space = Space::qubits(qubits);
        let d = space.dim();
        let mut entries = vec![ZERO; d * d];
        for i in 0..d {
            entries[i * d + i] = ONE;
        }
        OperatorMatrix { space, entries }
    }

    pub fn zeros(qubits: usize) -> Self {
        let space = Space::qubits(qubits);
        let d = space.dim();
        OperatorMatrix {
            space,
            entries: vec![ZERO; d * d],
        }
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: &StateVector, b: &StateVector) -> Result<Self> {
        check_dim(a.dim(), b.dim())?;
        let d = a.dim();
        let mut entries = Vec::with_capacity(d * d);
        for ai in a.amplitudes() {
            for bj in b.amplitudes() {
                entries.push(ai * bj.conj());
            }
        }
        Ok(OperatorMatrix {
            space: a.space(),
            entries,
        })
    }

    pub fn projector(v: &StateVector) -> Self {
        Self::outer(v, v).expect("same vector")
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn entries(&self) -> &[Amplitude] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim();
        let mut entries = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                entries[c * d + r] = self.entries[r * d + c].conj();
            }
        }
        OperatorMatrix {
            space: self.space,
            entries,
        }
    }

    /// Matrix product `self · rhs`.
    pub fn matmul(&self, rhs: &OperatorMatrix) -> Result<Self> {
        check_dim(self.dim(), rhs.dim())?;
        let d = self.dim();
        let mut entries = vec![ZERO; d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.entries[r * d + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..d {
                    entries[r * d + c] += a * rhs.entries[k * d + c];
                }
            }
        }
        Ok(OperatorMatrix {
            space: self.space,
            entries,
        })
    }

    pub fn add(&self, rhs: &OperatorMatrix) -> Result<Self> {
        check_dim(self.dim(), rhs.dim())?;
        Ok(OperatorMatrix {
            space: self.space,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn scaled(&self, c: Amplitude) -> Self {
        OperatorMatrix {
            space: self.space,
            entries: self.entries.iter().map(|a| a * c).collect(),
        }
    }

    pub fn trace(&self) -> Amplitude {
        let d = self.dim();
        (0..d).map(|i| self.entries[i * d + i]).sum()
    }

    /// Largest entrywise modulus of `self − rhs`.
    pub fn max_abs_diff(&self, rhs: &OperatorMatrix) -> Result<f64> {
        check_dim(self.dim(), rhs.dim())?;
        Ok(self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()).is_ok_and(|d| d <= tol)
    }

    /// `U†U = I` entrywise within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let qubits = self.space.n_qubits();
        self.adjoint()
            .matmul(self)
            .and_then(|p| p.max_abs_diff(&OperatorMatrix::identity(qubits)))
            .is_ok_and(|d| d <= tol)
    }
}

impl Index<(usize, usize)> for OperatorMatrix {
    type Output = Amplitude;

    fn index(&self, (r, c): (usize, usize)) -> &Amplitude {
        &self.entries[r * self.dim() + c]
    }
}

impl IndexMut<(usize, usize)> for OperatorMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Amplitude {
        let d = self.dim();
        &mut self.entries[r * d + c]
    }
}

/// Kronecker product with space labels concatenated left to right.
pub trait Tensor: Sized {
    fn tensor(&self, rhs: &Self) -> Self;
}

impl Tensor for StateVector {
    fn tensor(&self, rhs: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * rhs.dim());
        for a in &self.amps {
            for b in &rhs.amps {
                amps.push(a * b);
            }
        }
        StateVector {
            space: self.space.join(&rhs.space),
            amps,
        }
    }
}

impl Tensor for OperatorMatrix {
    fn tensor(&self, rhs: &Self) -> Self {
        let (da, db) = (self.dim(), rhs.dim());
        let d = da * db;
        let mut entries = vec![ZERO; d * d];
        for ra in 0..da {
            for ca in 0..da {
                let a = self.entries[ra * da + ca];
                if a == ZERO {
                    continue;
                }
                for rb in 0..db {
                    for cb in 0..db {
                        entries[(ra * db + rb) * d + ca * db + cb] = a * rhs.entries[rb * db + cb];
                    }
                }
            }
        }
        OperatorMatrix {
            space: self.space.join(&rhs.space),
            entries,
        }
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

/// `|v⟩^{⊗n}`; `n = 0` gives the one-dimensional unit vector.
pub fn tensor_power(v: &StateVector, n: usize) -> StateVector {
    (0..n).fold(StateVector::basis(0, 0), |acc, _| acc.tensor(v))
}

pub fn pauli(axis: PauliAxis) -> OperatorMatrix {
    let rows = match axis {
        PauliAxis::X => [[ZERO, ONE], [ONE, ZERO]],
        PauliAxis::Y => [[ZERO, -I], [I, ZERO]],
        PauliAxis::Z => [[ONE, ZERO], [ZERO, -ONE]],
    };
    OperatorMatrix::from_rows(rows).expect("2x2")
}

/// Normalized eigenvector of `pauli(axis)` with eigenvalue `sign`, first
/// nonzero amplitude real positive.
pub fn eigenstate(axis: PauliAxis, sign: Sign) -> StateVector {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let s = sign.value();
    let amps = match (axis, sign) {
        (PauliAxis::Z, Sign::Plus) => [ONE, ZERO],
        (PauliAxis::Z, Sign::Minus) => [ZERO, ONE],
        (PauliAxis::X, _) => [h, h * s],
        (PauliAxis::Y, _) => [h, I * h * s],
    };
    StateVector::from_parts(Space::qubits(1), amps.to_vec())
}

/// `exp(iθσ) = cos θ · I + i sin θ · σ`.
pub fn su2_exponential(axis: PauliAxis, theta: f64) -> OperatorMatrix {
    let (s, c) = theta.sin_cos();
    OperatorMatrix::identity(1)
        .scaled(Complex64::new(c, 0.0))
        .add(&pauli(axis).scaled(Complex64::new(0.0, s)))
        .expect("2x2")
}

pub fn apply(u: &OperatorMatrix, v: &StateVector) -> Result<StateVector> {
    check_dim(u.dim(), v.dim())?;
    let d = v.dim();
    let amps = (0..d)
        .map(|r| {
            u.entries[r * d..(r + 1) * d]
                .iter()
                .zip(&v.amps)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect();
    Ok(StateVector::from_parts(v.space, amps))
}

/// Applies a `2^t`-dimensional operator to the listed qubits of `v`
/// (qubit 0 is the leftmost factor). `targets[0]` is the most significant
/// qubit of the operator's own basis.
pub fn apply_on(op: &OperatorMatrix, targets: &[usize], v: &StateVector) -> Result<StateVector> {
    let n = v.space.n_qubits();
    if op.space.n_qubits() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: 1 << targets.len(),
            found: op.dim(),
        });
    }
    if targets.iter().any(|&t| t >= n) {
        return Err(Error::InvalidArgument("target qubit out of range"));
    }
    for (i, t) in targets.iter().enumerate() {
        if targets[i + 1..].contains(t) {
            return Err(Error::InvalidArgument("repeated target qubit"));
        }
    }
    let masks: Vec<usize> = targets.iter().map(|&t| 1 << (n - 1 - t)).collect();
    let all: usize = masks.iter().sum();
    let k = op.dim();
    // offsets[j] is the index shift for operator basis state j
    let offsets: Vec<usize> = (0..k)
        .map(|j| {
            masks
                .iter()
                .enumerate()
                .filter(|(b, _)| j >> (targets.len() - 1 - b) & 1 == 1)
                .map(|(_, m)| m)
                .sum()
        })
        .collect();
    let mut out = v.amps.clone();
    let mut gathered = vec![ZERO; k];
    for base in (0..v.dim()).filter(|i| i & all == 0) {
        for (g, off) in gathered.iter_mut().zip(&offsets) {
            *g = v.amps[base + off];
        }
        for (r, off) in offsets.iter().enumerate() {
            out[base + off] = op.entries[r * k..(r + 1) * k]
                .iter()
                .zip(&gathered)
                .map(|(a, b)| a * b)
                .sum();
        }
    }
    Ok(StateVector::from_parts(v.space, out))
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<Amplitude> {
    check_dim(a.dim(), b.dim())?;
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

/// `|⟨a|b⟩|²` for normalized inputs, clamped to `[0, 1]`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    for v in [a, b] {
        if !v.is_normalized() {
            return Err(Error::Unnormalized(v.norm_sqr()));
        }
    }
    Ok(inner(a, b)?.norm_sqr().clamp(0.0, 1.0))
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
