//! Equivalence checks between the closed-form correlators and the
//! Fock-space simulator, packaged for the `oracle-check` subcommand.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bell_core::correlators::{
    corr_indirect, corr_onoff, corr_parity, onoff_atom_rotation, IndirectSetting, OnOffSetting,
};
use bell_core::fockspace::{
    apply_detector_loss, build_entangled_state, choose_truncation, indirect_joint_expectation,
    joint_expectation, measurement_projectors, MeasurementKind, PhaseConvention,
};
use bell_core::qcore::{displaced_gamma, zeta_from_angles, RotationAngles};

pub struct SuiteOutcome {
    pub name: &'static str,
    pub max_dev: f64,
    pub tol: f64,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.max_dev <= self.tol
    }
}

fn angle_grid(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 0..n {
        let theta = std::f64::consts::PI * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            out.push((theta, phi));
        }
    }
    out
}

/// Displaced on/off closed form against the lossy-state simulator.
pub fn onoff_suite(angles_per_axis: usize) -> SuiteOutcome {
    let dim = choose_truncation(1.5, 1e-12);
    let betas = [C64::new(0.6, 0.0), C64::new(-0.4, 0.9), C64::new(0.0, -1.2)];
    let mut max_dev = 0.0f64;
    for &(theta, phi) in &angle_grid(angles_per_axis) {
        let angles = RotationAngles::wrapped(theta, phi);
        for alpha in [C64::new(0.7, 0.0), C64::new(1.1, 0.7)] {
            for eta in [1.0, 0.6] {
                let rho = build_entangled_state(alpha, dim, PhaseConvention::Direct).unwrap();
                let lossy = apply_detector_loss(&rho, eta).unwrap();
                let atom = displaced_gamma(onoff_atom_rotation(angles));
                for beta in betas {
                    let field = measurement_projectors(MeasurementKind::OnOff, beta, dim);
                    let simulated = joint_expectation(&lossy, &atom, &field).unwrap();
                    let closed = corr_onoff(alpha, &OnOffSetting { angles, beta, eta });
                    max_dev = max_dev.max((simulated - closed).abs());
                }
            }
        }
    }
    SuiteOutcome { name: "on/off closed form vs simulator", max_dev, tol: 1e-7 }
}

/// Displaced parity closed form against the simulator.
pub fn parity_suite(angles_per_axis: usize) -> SuiteOutcome {
    let dim = choose_truncation(1.5, 1e-12);
    let betas = [C64::new(0.3, 0.0), C64::new(0.0, 0.8), C64::new(-0.7, 0.5)];
    let mut max_dev = 0.0f64;
    for &(theta, phi) in &angle_grid(angles_per_axis) {
        let angles = RotationAngles::wrapped(theta, phi);
        for alpha in [C64::new(0.7, 0.0), C64::new(1.1, 0.7)] {
            let rho = build_entangled_state(alpha, dim, PhaseConvention::Direct).unwrap();
            let atom = displaced_gamma(zeta_from_angles(angles));
            for beta in betas {
                let field = measurement_projectors(MeasurementKind::Parity, beta, dim);
                let simulated = joint_expectation(&rho, &atom, &field).unwrap();
                let closed = corr_parity(alpha, angles, beta);
                max_dev = max_dev.max((simulated - closed).abs());
            }
        }
    }
    SuiteOutcome { name: "parity closed form vs simulator", max_dev, tol: 1e-7 }
}

/// Indirect closed form at the quarter dispersive period against the parity
/// closed form, on random settings.
pub fn indirect_identity_suite(samples: usize, seed: u64) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_dev = 0.0f64;
    for _ in 0..samples {
        let theta = rng.gen_range(0.0..std::f64::consts::PI);
        let phi = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        let angles = RotationAngles::wrapped(theta, phi);
        let alpha = C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let beta = C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let chi = rng.gen_range(0.2..4.0);
        let t = std::f64::consts::FRAC_PI_2 / chi;
        let s = IndirectSetting { angles, beta, t, chi };
        max_dev = max_dev.max((corr_indirect(alpha, &s) - corr_parity(alpha, angles, beta)).abs());
    }
    SuiteOutcome { name: "indirect at quarter period vs parity", max_dev, tol: 1e-12 }
}

/// Full probe-atom sequence in the simulator against the parity closed form.
pub fn probe_sequence_suite() -> SuiteOutcome {
    let chi = 1.0;
    let t = std::f64::consts::FRAC_PI_2;
    let dim = choose_truncation(2.0, 1e-12);
    let cases = [
        (std::f64::consts::FRAC_PI_2, 0.0, C64::new(0.7, 0.0), C64::new(0.0, 0.2)),
        (1.9, 2.5, C64::new(0.5, 0.3), C64::new(-0.4, 0.1)),
        (0.7, 5.1, C64::new(1.0, 0.0), C64::new(0.3, 0.3)),
        (2.6, 0.9, C64::new(0.9, -0.5), C64::new(0.5, -0.6)),
    ];
    let mut max_dev = 0.0f64;
    for (theta, phi, alpha, beta) in cases {
        let angles = RotationAngles::wrapped(theta, phi);
        let simulated = indirect_joint_expectation(alpha, angles, beta, chi, t, dim).unwrap();
        let closed = corr_parity(alpha, angles, beta);
        max_dev = max_dev.max((simulated - closed).abs());
    }
    SuiteOutcome { name: "probe sequence vs parity", max_dev, tol: 1e-6 }
}
