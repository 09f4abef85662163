//! Real-amplitude qubit kernel.
//!
//! All states live on the x–z great circle of the Bloch sphere, so a single
//! angle describes a measurement axis and two real amplitudes describe a
//! pure state. Amplitudes are written in the Z eigenbasis `{|z+⟩, |z−⟩}`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::atomic::{AtomicBool, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Bit, QkdError, Result};

/// Tolerance used for normalisation and basis equality.
pub const EPS: f64 = 1e-12;

static BORN_MUTATION: AtomicBool = AtomicBool::new(false);

/// Negative-control hook: when enabled, [`outcome_prob`] rounds every
/// probability to 0 or 1 (measurement no longer disturbs states). Only the
/// verify battery's mutation check should touch this.
#[doc(hidden)]
pub fn set_born_rule_mutation(enabled: bool) {
    BORN_MUTATION.store(enabled, Ordering::SeqCst);
}

#[doc(hidden)]
pub fn born_rule_mutated() -> bool {
    BORN_MUTATION.load(Ordering::Relaxed)
}

/// Measurement/encoding axis, as an angle from the z-axis in `[0, π)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Basis {
    theta: f64,
}

impl Basis {
    pub const Z: Basis = Basis { theta: 0.0 };
    pub const X: Basis = Basis {
        theta: std::f64::consts::FRAC_PI_2,
    };

    /// Builds a basis from any finite angle, reduced modulo π.
    ///
    /// Reduction shifts the axis by a multiple of π, which swaps the roles of
    /// the `+` and `−` eigenstates for odd multiples; bit labels always
    /// follow the reduced angle.
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(QkdError::param("theta", "must be finite"));
        }
        let mut t = theta.rem_euclid(PI);
        if t >= PI - EPS * 0.5 {
            t = 0.0;
        }
        Ok(Basis { theta: t })
    }

    /// `0 ↦ Z`, `1 ↦ X`, the basis-sequence convention.
    pub fn from_bit(bit: Bit) -> Self {
        if bit == 0 {
            Basis::Z
        } else {
            Basis::X
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Inverse of [`Basis::from_bit`] for Z and X; `None` for other axes.
    pub fn as_bit(&self) -> Option<Bit> {
        if *self == Basis::Z {
            Some(0)
        } else if *self == Basis::X {
            Some(1)
        } else {
            None
        }
    }

    /// Amplitudes of the eigenstate labelled `bit`.
    fn eigen(&self, bit: Bit) -> (f64, f64) {
        let (s, c) = (self.theta / 2.0).sin_cos();
        if bit == 0 {
            (c, s)
        } else {
            (-s, c)
        }
    }
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        (self.theta - other.theta).abs() < EPS
    }
}

/// Pure single-qubit state with real amplitudes in the Z eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    a_plus: f64,
    a_minus: f64,
}

impl QubitState {
    /// Normalises `(a_plus, a_minus)`; rejects the zero vector.
    pub fn new(a_plus: f64, a_minus: f64) -> Result<Self> {
        let norm = a_plus.hypot(a_minus);
        if !norm.is_finite() || norm < EPS {
            return Err(QkdError::param("amplitudes", "cannot normalise a zero vector"));
        }
        Ok(QubitState {
            a_plus: a_plus / norm,
            a_minus: a_minus / norm,
        })
    }

    pub fn amplitudes(&self) -> (f64, f64) {
        (self.a_plus, self.a_minus)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a_plus * self.a_plus + self.a_minus * self.a_minus
    }

    pub fn inner(&self, other: &QubitState) -> f64 {
        self.a_plus * other.a_plus + self.a_minus * other.a_minus
    }

    /// Equal up to a global sign, within `tol`.
    pub fn same_ray(&self, other: &QubitState, tol: f64) -> bool {
        (self.inner(other).abs() - 1.0).abs() <= tol
    }

    fn projector(&self) -> [[f64; 2]; 2] {
        let (a, b) = (self.a_plus, self.a_minus);
        [[a * a, a * b], [a * b, b * b]]
    }
}

/// Eigenstate of spin measurement along `basis` with eigenvalue `+` for bit
/// 0 and `−` for bit 1.
pub fn make_state(basis: Basis, bit: Bit) -> QubitState {
    debug_assert!(bit <= 1, "bit must be 0 or 1");
    let (a_plus, a_minus) = basis.eigen(bit);
    QubitState { a_plus, a_minus }
}

/// Born probability `|⟨basis, bit | state⟩|²`.
pub fn outcome_prob(state: &QubitState, basis: Basis, bit: Bit) -> f64 {
    let amp = make_state(basis, bit).inner(state);
    let p = (amp * amp).clamp(0.0, 1.0);
    if born_rule_mutated() {
        let p0 = make_state(basis, 0).inner(state).powi(2);
        let sharp0 = if p0 >= 0.5 - EPS { 1.0 } else { 0.0 };
        return if bit == 0 { sharp0 } else { 1.0 - sharp0 };
    }
    p
}

/// Projective measurement. Consumes exactly one `f64` draw from `rng`.
pub fn measure<R: Rng + ?Sized>(state: &QubitState, basis: Basis, rng: &mut R) -> (Bit, QubitState) {
    let p0 = outcome_prob(state, basis, 0);
    let u: f64 = rng.random();
    let bit = if u < p0 { 0 } else { 1 };
    (bit, make_state(basis, bit))
}

/// 2×2 real symmetric density operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityOp {
    m: [[f64; 2]; 2],
}

impl DensityOp {
    /// Validates trace, symmetry and positivity.
    pub fn from_matrix(m: [[f64; 2]; 2]) -> Result<Self> {
        let trace = m[0][0] + m[1][1];
        if (trace - 1.0).abs() > EPS {
            return Err(QkdError::param("density", format!("trace {trace} != 1")));
        }
        if (m[0][1] - m[1][0]).abs() > EPS {
            return Err(QkdError::param("density", "matrix is not symmetric"));
        }
        let rho = DensityOp { m };
        let (lo, _) = rho.eigenvalues();
        if lo < -EPS {
            return Err(QkdError::param("density", format!("negative eigenvalue {lo}")));
        }
        Ok(rho)
    }

    pub fn half_identity() -> Self {
        DensityOp {
            m: [[0.5, 0.0], [0.0, 0.5]],
        }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_tr = 0.5 * (self.m[0][0] + self.m[1][1]);
        let half_diff = 0.5 * (self.m[0][0] - self.m[1][1]);
        let r = half_diff.hypot(self.m[0][1]);
        (half_tr - r, half_tr + r)
    }

    /// `tr(ρ Π)` for the projector onto the `bit` eigenstate of `basis`.
    pub fn outcome_prob(&self, basis: Basis, bit: Bit) -> f64 {
        let (a, b) = basis.eigen(bit);
        a * a * self.m[0][0] + 2.0 * a * b * self.m[0][1] + b * b * self.m[1][1]
    }
}

/// `Σ wᵢ |ψᵢ⟩⟨ψᵢ|`. Weights must be non-negative and sum to 1 within 1e-9.
pub fn density_of_ensemble(members: &[(QubitState, f64)]) -> Result<DensityOp> {
    if members.is_empty() {
        return Err(QkdError::InvalidWeights("empty ensemble".into()));
    }
    if let Some((_, w)) = members.iter().find(|(_, w)| *w < 0.0 || !w.is_finite()) {
        return Err(QkdError::InvalidWeights(format!("weight {w} is negative or not finite")));
    }
    let total: f64 = members.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(QkdError::InvalidWeights(format!("weights sum to {total}")));
    }
    let mut m = [[0.0; 2]; 2];
    for (state, w) in members {
        let p = state.projector();
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] += w * p[i][j];
            }
        }
    }
    Ok(DensityOp { m })
}

/// Max entrywise difference within `tol`.
pub fn density_equal(a: &DensityOp, b: &DensityOp, tol: f64) -> bool {
    a.m.iter()
        .flatten()
        .zip(b.m.iter().flatten())
        .all(|(x, y)| (x - y).abs() <= tol)
}

/// Which particle of a [`BellPair`] is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    One,
    Two,
}

/// Two-qubit state over `{|z+z+⟩, |z+z−⟩, |z−z+⟩, |z−z−⟩}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellPair {
    coeffs: [f64; 4],
}

impl BellPair {
    pub fn coeffs(&self) -> [f64; 4] {
        self.coeffs
    }

    fn c(&self, first: usize, second: usize) -> f64 {
        self.coeffs[2 * first + second]
    }

    /// Reduced density operator of one particle (partial trace over the other).
    pub fn reduced_density(&self, site: Site) -> DensityOp {
        let m = std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                (0..2)
                    .map(|k| match site {
                        Site::One => self.c(i, k) * self.c(j, k),
                        Site::Two => self.c(k, i) * self.c(k, j),
                    })
                    .sum()
            })
        });
        DensityOp { m }
    }
}

/// `(|z+z+⟩ − |z−z−⟩)/√2`, the entangled source state used in the
/// no-signaling argument.
///
/// This is the Φ⁻ Bell state rather than the textbook singlet. Expanded in
/// the X basis it equals `(|x+x−⟩ + |x−x+⟩)/√2`, so Z outcomes are equal
/// and X outcomes are opposite. Either way each particle alone is `½I`.
pub fn make_bell_pair() -> BellPair {
    BellPair {
        coeffs: [FRAC_1_SQRT_2, 0.0, 0.0, -FRAC_1_SQRT_2],
    }
}

/// Measures one particle of `pair` and returns the outcome together with
/// the conditional state of the other particle.
pub fn measure_pair<R: Rng + ?Sized>(
    pair: &BellPair,
    site: Site,
    basis: Basis,
    rng: &mut R,
) -> (Bit, QubitState) {
    // Unnormalised remainder of the other particle for outcome `bit`.
    let remainder = |bit: Bit| -> (f64, f64) {
        let (e0, e1) = basis.eigen(bit);
        match site {
            Site::One => (
                e0 * pair.c(0, 0) + e1 * pair.c(1, 0),
                e0 * pair.c(0, 1) + e1 * pair.c(1, 1),
            ),
            Site::Two => (
                e0 * pair.c(0, 0) + e1 * pair.c(0, 1),
                e0 * pair.c(1, 0) + e1 * pair.c(1, 1),
            ),
        }
    };
    let r0 = remainder(0);
    let mut p0 = r0.0 * r0.0 + r0.1 * r0.1;
    if born_rule_mutated() {
        p0 = if p0 >= 0.5 - EPS { 1.0 } else { 0.0 };
    }
    let u: f64 = rng.random();
    let bit = if u < p0 { 0 } else { 1 };
    let (a, b) = remainder(bit);
    let state = QubitState::new(a, b).expect("outcome with non-zero probability");
    (bit, state)
}
