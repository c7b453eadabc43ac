//! Exact scalar and 2x2 algebra for the atomic side of the test: Ramsey
//! rotations, displaced dichotomic measurements, and coherent-state overlaps.
//!
//! The atomic basis is ordered (|e>, |g>) everywhere. A measurement setting
//! is a rotation label `zeta = -(theta/2) e^{-i phi}`; the rotation itself is
//! [`atomic_displacement`] and the rotated dichotomic observable is
//! [`displaced_gamma`].

use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QcoreError {
    #[error("theta = {0} outside [0, pi]")]
    ThetaOutOfRange(f64),
    #[error("phi = {0} outside [0, 2 pi)")]
    PhiOutOfRange(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// Rotation angles (theta, phi) parameterizing an atomic measurement setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationAngles {
    theta: f64,
    phi: f64,
}

impl RotationAngles {
    pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

    pub fn new(theta: f64, phi: f64) -> Result<Self, QcoreError> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(QcoreError::NonFinite("rotation angles"));
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(QcoreError::ThetaOutOfRange(theta));
        }
        if !(0.0..Self::TWO_PI).contains(&phi) {
            return Err(QcoreError::PhiOutOfRange(phi));
        }
        Ok(Self { theta, phi })
    }

    /// Clamps theta into [0, pi] and wraps phi into [0, 2 pi).
    pub fn wrapped(theta: f64, phi: f64) -> Self {
        let theta = theta.clamp(0.0, std::f64::consts::PI);
        let mut phi = phi.rem_euclid(Self::TWO_PI);
        if phi >= Self::TWO_PI {
            phi = 0.0;
        }
        Self { theta, phi }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// 2x2 complex operator on the (|e>, |g>) basis, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomOperator(pub [[C64; 2]; 2]);

impl AtomOperator {
    pub fn identity() -> Self {
        Self([[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ]])
    }

    /// Bare dichotomic measurement: +1 on |e>, -1 on |g>.
    pub fn gamma() -> Self {
        Self([[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [
            C64::new(0.0, 0.0),
            C64::new(-1.0, 0.0),
        ]])
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self(out)
    }

    pub fn adjoint(&self) -> Self {
        let a = &self.0;
        Self([[a[0][0].conj(), a[1][0].conj()], [
            a[0][1].conj(),
            a[1][1].conj(),
        ]])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Max entrywise absolute deviation from another operator.
    pub fn max_dev(&self, rhs: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.0[i][j] - rhs.0[i][j]).norm());
            }
        }
        m
    }

    /// Deviation from unitarity, max |(U U^dag - I)_{ij}|.
    pub fn unitarity_dev(&self) -> f64 {
        self.mul(&self.adjoint()).max_dev(&Self::identity())
    }
}

/// Rotation label zeta(theta, phi) = -(theta/2) e^{-i phi}.
pub fn zeta_from_angles(angles: RotationAngles) -> C64 {
    let half = 0.5 * angles.theta();
    -half * C64::new(0.0, -angles.phi()).exp()
}

/// Single-qubit rotation exp[zeta sigma_+ - zeta^* sigma_-] as an explicit
/// 2x2 matrix. The zeta = 0 limit is the identity.
pub fn atomic_displacement(zeta: C64) -> AtomOperator {
    let m = zeta.norm();
    if m == 0.0 {
        return AtomOperator::identity();
    }
    let (s, c) = m.sin_cos();
    let phase = zeta / m;
    AtomOperator([[C64::new(c, 0.0), phase * s], [
        -phase.conj() * s,
        C64::new(c, 0.0),
    ]])
}

/// Displaced dichotomic measurement D(zeta) Gamma D^dag(zeta); Hermitian with
/// eigenvalues exactly {+1, -1}.
pub fn displaced_gamma(zeta: C64) -> AtomOperator {
    let d = atomic_displacement(zeta);
    d.mul(&AtomOperator::gamma()).mul(&d.adjoint())
}

/// Overlap <mu|nu> = exp(-|mu|^2/2 - |nu|^2/2 + conj(mu) nu).
pub fn coherent_overlap(mu: C64, nu: C64) -> C64 {
    (mu.conj() * nu - 0.5 * (mu.norm_sqr() + nu.norm_sqr())).exp()
}
