//! Closed-form correlation functions for the three field-measurement
//! families (displaced on/off with detector loss, displaced parity, and the
//! indirect probe-atom readout) plus the CHSH combination.
//!
//! Atom settings are passed as rotation angles (theta, phi); the relative
//! field phase is Phi = arg(beta) - arg(alpha) with arg(0) taken as 0.
//!
//! Note on parameterization: the on/off closed form uses half-angle
//! trigonometry in (theta, phi) and corresponds to the displaced dichotomic
//! atomic measurement with rotation label given by [`onoff_atom_rotation`],
//! not with zeta(theta, phi) directly. The parity and indirect forms use the
//! plain zeta(theta, phi) convention. The simulator equivalence tests pin
//! both conventions down.

use num_complex::Complex64 as C64;

use crate::qcore::RotationAngles;

/// Settings of a displaced on/off measurement: atom rotation, field
/// displacement, detector efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnOffSetting {
    pub angles: RotationAngles,
    pub beta: C64,
    pub eta: f64,
}

impl OnOffSetting {
    pub fn new(angles: RotationAngles, beta: C64, eta: f64) -> Option<Self> {
        (0.0..=1.0).contains(&eta).then_some(Self { angles, beta, eta })
    }
}

/// Settings of the indirect probe-atom measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndirectSetting {
    pub angles: RotationAngles,
    pub beta: C64,
    pub t: f64,
    pub chi: f64,
}

impl IndirectSetting {
    pub fn new(angles: RotationAngles, beta: C64, t: f64, chi: f64) -> Option<Self> {
        (t >= 0.0 && chi > 0.0).then_some(Self { angles, beta, t, chi })
    }
}

/// The four measurement settings entering a CHSH combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSettings<A, B> {
    pub a: A,
    pub a_prime: A,
    pub b: B,
    pub b_prime: B,
}

fn rel_phase(alpha: C64, beta: C64) -> f64 {
    let arg = |z: C64| if z.norm_sqr() == 0.0 { 0.0 } else { z.arg() };
    arg(beta) - arg(alpha)
}

/// Correlation of the displaced atomic measurement with the displaced on/off
/// photodetection at efficiency eta.
pub fn corr_onoff(alpha: C64, s: &OnOffSetting) -> f64 {
    let am = alpha.norm();
    let bm = s.beta.norm();
    let phi_rel = rel_phase(alpha, s.beta);
    let (theta, phi) = (s.angles.theta(), s.angles.phi());
    let eta = s.eta;
    let se = eta.sqrt();

    let cross = 2.0 * am * bm * se;
    let base = -bm * bm - am * am * eta;
    let half = 0.5 * theta;
    (-(base - cross * phi_rel.cos()).exp() + (base + cross * phi_rel.cos()).exp())
        .mul_add(half.cos(), 0.0)
        + (-2.0 * am * am).exp() * phi.cos() * half.sin()
        - 2.0
            * (-2.0 * am * am - bm * bm + am * am * eta).exp()
            * (phi - cross * phi_rel.sin()).cos()
            * half.sin()
}

/// Correlation of the displaced atomic measurement with the displaced
/// photon-number parity measurement.
pub fn corr_parity(alpha: C64, angles: RotationAngles, beta: C64) -> f64 {
    let am = alpha.norm();
    let bm = beta.norm();
    let phi_rel = rel_phase(alpha, beta);
    let (theta, phi) = (angles.theta(), angles.phi());
    (-2.0 * bm * bm).exp() * theta.sin() * (4.0 * am * bm * phi_rel.sin() - phi).cos()
        + (-2.0 * (am * am + bm * bm)).exp()
            * theta.cos()
            * (4.0 * am * bm * phi_rel.cos()).sinh()
}

/// Correlation of the displaced atomic measurement with the indirect
/// probe-atom readout after interaction time t; reduces to [`corr_parity`]
/// at t = pi/(2 chi) and is periodic in 2 chi t with period 2 pi.
pub fn corr_indirect(alpha: C64, s: &IndirectSetting) -> f64 {
    let am = alpha.norm();
    let bm = s.beta.norm();
    let phi_rel = rel_phase(alpha, s.beta);
    let (theta, phi) = (s.angles.theta(), s.angles.phi());
    let (s2, c2) = (2.0 * s.chi * s.t).sin_cos();

    let sum = am * am + bm * bm;
    let diff = am * am - bm * bm;
    let cross_c = 2.0 * am * bm * phi_rel.cos();
    let cross_s = 2.0 * am * bm * phi_rel.sin();

    let t1 = 0.5
        * theta.cos()
        * ((sum - cross_c) * (c2 - 1.0)).exp()
        * ((sum - cross_c) * s2).cos();
    let t2 = -0.5
        * theta.cos()
        * ((sum + cross_c) * (c2 - 1.0)).exp()
        * ((sum + cross_c) * s2).cos();
    let t3 = 0.5
        * theta.sin()
        * (-sum - diff * c2 - cross_s * s2).exp()
        * (phi - diff * s2 + cross_s * (c2 - 1.0)).cos();
    let t4 = 0.5
        * theta.sin()
        * (-sum - diff * c2 + cross_s * s2).exp()
        * (phi + diff * s2 + cross_s * (c2 - 1.0)).cos();
    t1 + t2 + t3 + t4
}

/// |E(a,b) + E(a',b) + E(a,b') - E(a',b')|.
pub fn bell_chsh<A, B>(e: impl Fn(&A, &B) -> f64, s: &ChshSettings<A, B>) -> f64 {
    (e(&s.a, &s.b) + e(&s.a_prime, &s.b) + e(&s.a, &s.b_prime) - e(&s.a_prime, &s.b_prime)).abs()
}

/// Rotation label of the atomic measurement that reproduces the on/off
/// closed form at angles (theta, phi): its Bloch direction is
/// (sin(theta/2) cos phi, sin(theta/2) sin phi, -cos(theta/2)),
/// i.e. a displaced dichotomic measurement with half-angle pi/2 - theta/4.
pub fn onoff_atom_rotation(angles: RotationAngles) -> C64 {
    let half = 0.5 * (std::f64::consts::PI - 0.5 * angles.theta());
    -half * C64::new(0.0, -angles.phi()).exp()
}
