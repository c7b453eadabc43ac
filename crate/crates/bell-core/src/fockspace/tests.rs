use super::*;
use crate::qcore;
use std::f64::consts::FRAC_PI_2;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

// independent tail summation: smallest N0 with sum_{n >= N0} p_n < tol
fn poisson_tail_cut(lambda: f64, tol: f64) -> usize {
    if lambda == 0.0 {
        return 0;
    }
    let top = (lambda as usize + 200).max(400);
    let mut p = (-lambda).exp();
    let mut probs = vec![p];
    for n in 1..=top {
        p *= lambda / n as f64;
        probs.push(p);
    }
    let mut tail = 0.0;
    let mut cut = probs.len();
    for k in (0..probs.len()).rev() {
        tail += probs[k];
        if tail >= tol {
            cut = k + 1;
            break;
        }
        cut = k;
    }
    cut
}

#[test]
fn truncation_vacuum_is_buffer_only() {
    assert_eq!(choose_truncation(0.0, 1e-12), TRUNCATION_BUFFER);
}

#[test]
fn truncation_matches_direct_summation() {
    for (m, tol) in [(1.0, 1e-12), (0.5, 1e-10), (1.5, 1e-12), (2.0, 1e-12)] {
        let expect = poisson_tail_cut(m * m, tol) + TRUNCATION_BUFFER;
        assert_eq!(choose_truncation(m, tol), expect, "m={m} tol={tol}");
    }
}

#[test]
fn truncation_monotone_in_magnitude() {
    assert!(choose_truncation(2.0, 1e-12) >= choose_truncation(1.0, 1e-12));
}

#[test]
fn coherent_vacuum() {
    let v = coherent_fock(c(0.0, 0.0), 8).unwrap();
    assert!((v.amplitudes()[0] - c(1.0, 0.0)).norm() < 1e-15);
    assert!(v.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
}

#[test]
fn coherent_poisson_mean() {
    let n = choose_truncation(1.0, 1e-12);
    let v = coherent_fock(c(1.0, 0.0), n).unwrap();
    assert!((v.mean_photon_number() - 1.0).abs() < 1e-9);
}

#[test]
fn coherent_inner_product_matches_overlap() {
    let n = choose_truncation(1.0, 1e-12);
    let plus = coherent_fock(c(1.0, 0.0), n).unwrap();
    let minus = coherent_fock(c(-1.0, 0.0), n).unwrap();
    let by_fock = plus.inner(&minus);
    let closed = qcore::coherent_overlap(c(1.0, 0.0), c(-1.0, 0.0));
    assert!((by_fock - closed).norm() < 1e-9);
    assert!((by_fock.re - (-2.0f64).exp()).abs() < 1e-9);
}

#[test]
fn coherent_rejects_undersized_space() {
    assert!(matches!(
        coherent_fock(c(3.0, 0.0), 6),
        Err(FockError::TruncationTooSmall { .. })
    ));
}

#[test]
fn displacement_zero_is_identity() {
    let d = displacement_matrix(c(0.0, 0.0), 12);
    assert!(d.max_abs_diff(&CMat::identity(12)) < 1e-14);
}

#[test]
fn displacement_generates_coherent_states() {
    for beta in [c(0.5, 0.0), c(-1.0, 0.7), c(0.0, 2.0), c(1.3, -1.2)] {
        let n = choose_truncation(beta.norm(), 1e-12);
        let d = displacement_matrix(beta, n);
        let from_vacuum = d.matvec(FockVector::vacuum(n).amplitudes());
        let expect = coherent_fock(beta, n).unwrap();
        let dev = from_vacuum
            .iter()
            .zip(expect.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(dev < 1e-8, "beta={beta} dev={dev:.2e}");
    }
}

#[test]
fn displacement_unitary_on_inner_block() {
    let beta = c(1.1, -0.9);
    let n = choose_truncation(beta.norm(), 1e-12);
    let d = displacement_matrix(beta, n);
    let gram = d.mul(&d.adjoint());
    let eye = CMat::identity(n);
    let mut dev = 0.0f64;
    for i in 0..n - TRUNCATION_BUFFER {
        for j in 0..n - TRUNCATION_BUFFER {
            dev = dev.max((gram[(i, j)] - eye[(i, j)]).norm());
        }
    }
    assert!(dev < 1e-8);
}

#[test]
fn parity_expectations() {
    let n = choose_truncation(1.0, 1e-12);
    let parity = measurement_projectors(MeasurementKind::Parity, c(0.0, 0.0), n);
    let vac = DensityMatrix::from_pure(vec![n], FockVector::vacuum(n).amplitudes());
    assert!((expectation(&vac, &parity).unwrap() - 1.0).abs() < 1e-12);

    let coh = coherent_fock(c(1.0, 0.0), n).unwrap();
    let rho = DensityMatrix::from_pure(vec![n], coh.amplitudes());
    let expect = (-2.0f64).exp();
    assert!((expectation(&rho, &parity).unwrap() - expect).abs() < 1e-8);
}

#[test]
fn onoff_expectation_on_coherent() {
    for bmag in [0.4, 1.0, 1.7] {
        let n = choose_truncation(bmag, 1e-12);
        let onoff = measurement_projectors(MeasurementKind::OnOff, c(0.0, 0.0), n);
        let coh = coherent_fock(c(bmag, 0.0), n).unwrap();
        let rho = DensityMatrix::from_pure(vec![n], coh.amplitudes());
        let expect = 1.0 - 2.0 * (-bmag * bmag).exp();
        assert!((expectation(&rho, &onoff).unwrap() - expect).abs() < 1e-8);
    }
}

#[test]
fn displaced_projectors_keep_dichotomic_spectrum() {
    let n = choose_truncation(1.5, 1e-12);
    for kind in [MeasurementKind::OnOff, MeasurementKind::Parity] {
        let m = measurement_projectors(kind, c(0.6, -0.8), n);
        assert!(m.max_abs_diff(&m.adjoint()) < 1e-10);
        let eig = m.hermitian_eigenvalues();
        for v in eig {
            assert!(
                (v.abs() - 1.0).abs() < 1e-8,
                "{kind:?} eigenvalue {v} away from +-1"
            );
        }
    }
}

#[test]
fn entangled_state_at_zero_alpha_is_product() {
    let rho = build_entangled_state(c(0.0, 0.0), 12, PhaseConvention::Direct).unwrap();
    // (|e> + |g>)(<e| + <g|)/2 (x) |0><0|
    for (i, j, want) in [
        (0usize, 0usize, 0.5),
        (0, 12, 0.5),
        (12, 0, 0.5),
        (12, 12, 0.5),
    ] {
        assert!((rho.entry(i, j) - c(want, 0.0)).norm() < 1e-12);
    }
    assert!((rho.trace() - c(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn entangled_state_trace_and_coherence() {
    let alpha = c(0.664, 0.0);
    let n = choose_truncation(0.664, 1e-12);
    let rho = build_entangled_state(alpha, n, PhaseConvention::Direct).unwrap();
    assert!((rho.trace() - c(1.0, 0.0)).norm() < 1e-9);
    assert!(rho.hermiticity_dev() < 1e-12);

    let atom = rho.partial_trace(1);
    let expect = qcore::coherent_overlap(alpha, -alpha) * 0.5;
    assert!((atom.entry(0, 1) - expect).norm() < 1e-8);
}

#[test]
fn preparation_sequence_reproduces_direct_state() {
    let n = choose_truncation(0.8, 1e-12);
    let direct = build_entangled_state(c(0.8, 0.0), n, PhaseConvention::Direct).unwrap();
    let sequenced = build_entangled_state(c(0.8, 0.0), n, PhaseConvention::Sequenced).unwrap();
    assert!(direct.max_abs_diff(&sequenced) < 1e-9);
}

#[test]
fn detector_loss_matches_beam_splitter_mixture() {
    let alpha = c(1.0, 0.0);
    let n = choose_truncation(1.0, 1e-12);
    let rho = build_entangled_state(alpha, n, PhaseConvention::Direct).unwrap();

    for eta in [1.0, 0.5, 0.0, 0.37] {
        let lossy = apply_detector_loss(&rho, eta).unwrap();
        assert!((lossy.trace() - c(1.0, 0.0)).norm() < 1e-9, "eta={eta}");

        // expected mixed state with scaled labels and damped cross terms
        let w = (-2.0 * (1.0 - eta) * alpha.norm_sqr()).exp();
        let se = eta.sqrt();
        let plus = coherent_fock(alpha * se, n).unwrap();
        let minus = coherent_fock(-alpha * se, n).unwrap();
        let mut v_e = vec![c(0.0, 0.0); 2 * n];
        let mut v_g = vec![c(0.0, 0.0); 2 * n];
        v_e[..n].copy_from_slice(plus.amplitudes());
        v_g[n..].copy_from_slice(minus.amplitudes());
        let mut expect = CMat::outer(&v_e, &v_e);
        expect.axpy(c(1.0, 0.0), &CMat::outer(&v_g, &v_g));
        expect.axpy(c(w, 0.0), &CMat::outer(&v_e, &v_g));
        expect.axpy(c(w, 0.0), &CMat::outer(&v_g, &v_e));
        let expect = expect.scale(c(0.5, 0.0));
        let dev = lossy.matrix().max_abs_diff(&expect);
        assert!(dev < 1e-8, "eta={eta} dev={dev:.2e}");
    }
}

#[test]
fn detector_loss_eta_one_is_identity_map() {
    let rho = build_entangled_state(c(0.7, 0.3), 24, PhaseConvention::Direct).unwrap();
    let lossy = apply_detector_loss(&rho, 1.0).unwrap();
    assert!(lossy.max_abs_diff(&rho) < 1e-10);
}

#[test]
fn detector_loss_rejects_bad_eta() {
    let rho = build_entangled_state(c(0.2, 0.0), 12, PhaseConvention::Direct).unwrap();
    assert!(matches!(
        apply_detector_loss(&rho, 1.2),
        Err(FockError::InvalidEta(_))
    ));
    assert!(matches!(
        apply_detector_loss(&rho, -0.1),
        Err(FockError::InvalidEta(_))
    ));
}

#[test]
fn dispersive_identity_at_zero_time() {
    let u = dispersive_propagator(1.0, 0.0, 9);
    assert!(u.max_abs_diff(&CMat::identity(18)) < 1e-15);
}

#[test]
fn dispersive_rotates_ground_branch_label() {
    let alpha = c(0.9, 0.2);
    let n = choose_truncation(alpha.norm(), 1e-12);
    let chi = 1.0;
    let t = 0.77;
    let mut psi = vec![c(0.0, 0.0); 2 * n];
    psi[n..].copy_from_slice(coherent_fock(alpha, n).unwrap().amplitudes());
    let rho = DensityMatrix::from_pure(vec![2, n], &psi);
    let evolved = rho.conjugated(&dispersive_propagator(chi, t, n));

    let rotated = coherent_fock(alpha * c(0.0, chi * t).exp(), n).unwrap();
    let mut expect = vec![c(0.0, 0.0); 2 * n];
    expect[n..].copy_from_slice(rotated.amplitudes());
    assert!(evolved.fidelity_with_pure(&expect) > 1.0 - 1e-8);
}

#[test]
fn dispersive_rotates_excited_branch_label() {
    let alpha = c(0.8, -0.4);
    let n = choose_truncation(alpha.norm(), 1e-12);
    let chi = 1.0;
    let t = FRAC_PI_2;
    let mut psi = vec![c(0.0, 0.0); 2 * n];
    psi[..n].copy_from_slice(coherent_fock(alpha, n).unwrap().amplitudes());
    let rho = DensityMatrix::from_pure(vec![2, n], &psi);
    let evolved = rho.conjugated(&dispersive_propagator(chi, t, n));

    // |e>|alpha> -> e^{-i pi/2} |e>|alpha e^{-i pi/2}>; density forgets the
    // global phase
    let rotated = coherent_fock(alpha * c(0.0, -chi * t).exp(), n).unwrap();
    let mut expect = vec![c(0.0, 0.0); 2 * n];
    expect[..n].copy_from_slice(rotated.amplitudes());
    assert!(evolved.fidelity_with_pure(&expect) > 1.0 - 1e-8);
}

#[test]
fn lindblad_zero_rates_is_identity() {
    let rho = build_entangled_state(c(0.6, 0.0), 20, PhaseConvention::Direct).unwrap();
    let out = lindblad_evolve(&rho, 0.0, 0.0, 0.0, 1.0, 200).unwrap();
    assert!(out.max_abs_diff(&rho) < 1e-10);
}

#[test]
fn lindblad_pure_dissipation_shrinks_coherent_label() {
    let alpha = c(1.0, 0.0);
    let n = choose_truncation(1.0, 1e-12);
    let kappa = 0.35;
    let t = 1.2;
    let mut psi = vec![c(0.0, 0.0); 2 * n];
    psi[n..].copy_from_slice(coherent_fock(alpha, n).unwrap().amplitudes());
    let rho = DensityMatrix::from_pure(vec![2, n], &psi);
    let out = lindblad_evolve_checked(&rho, kappa, 0.0, 0.0, t, 600).unwrap();

    let shrunk = coherent_fock(alpha * (-kappa * t).exp(), n).unwrap();
    let mut expect = vec![c(0.0, 0.0); 2 * n];
    expect[n..].copy_from_slice(shrunk.amplitudes());
    assert!(out.fidelity_with_pure(&expect) > 1.0 - 1e-6);
    assert!((out.trace() - c(1.0, 0.0)).norm() < 1e-8);
}

#[test]
fn lindblad_emission_decays_excited_population() {
    let n = 6;
    let gamma = 0.8;
    let t = 0.9;
    let mut psi = vec![c(0.0, 0.0); 2 * n];
    psi[0] = c(1.0, 0.0); // |e, 0>
    let rho = DensityMatrix::from_pure(vec![2, n], &psi);
    let out = lindblad_evolve_checked(&rho, 0.0, gamma, 0.0, t, 400).unwrap();

    let pop_e: f64 = (0..n).map(|k| out.entry(k, k).re).sum();
    assert!((pop_e - (-2.0 * gamma * t).exp()).abs() < 1e-7);
    assert!((out.trace() - c(1.0, 0.0)).norm() < 1e-8);
}

#[test]
fn lindblad_preserves_hermiticity_trace_positivity() {
    let alpha = c(0.8, 0.3);
    let n = choose_truncation(1.0, 1e-12);
    let rho = build_entangled_state(alpha, n, PhaseConvention::Direct).unwrap();
    let out = lindblad_evolve_checked(&rho, 0.05, 0.02, 1.0, FRAC_PI_2, 400).unwrap();
    assert!(out.hermiticity_dev() < 1e-9);
    assert!((out.trace() - c(1.0, 0.0)).norm() < 1e-8);
    assert!(out.min_eigenvalue() > -1e-7);
}

#[test]
fn lindblad_rejects_bad_inputs() {
    let rho = build_entangled_state(c(0.3, 0.0), 12, PhaseConvention::Direct).unwrap();
    assert!(lindblad_evolve(&rho, -0.1, 0.0, 0.0, 1.0, 10).is_err());
    assert!(lindblad_evolve(&rho, 0.0, -0.1, 0.0, 1.0, 10).is_err());
    assert!(lindblad_evolve(&rho, 0.0, 0.0, 0.0, -1.0, 10).is_err());
}

#[test]
fn expectation_identity_is_trace() {
    let rho = build_entangled_state(c(0.5, 0.0), 16, PhaseConvention::Direct).unwrap();
    let v = expectation(&rho, &CMat::identity(32)).unwrap();
    assert!((v - 1.0).abs() < 1e-10);
}

#[test]
fn expectation_rejects_non_hermitian_pairing() {
    let n = choose_truncation(0.9, 1e-12);
    let alpha = c(0.6, 0.6); // <a> = alpha has a genuine imaginary part
    let rho = DensityMatrix::from_pure(vec![n], coherent_fock(alpha, n).unwrap().amplitudes());
    // annihilation operator is not an observable
    let a = annihilation(n);
    assert!(matches!(
        expectation(&rho, &a),
        Err(FockError::NonHermitian(_))
    ));
}

#[test]
fn spontaneous_emission_grows_vacuum_from_excited_coherent() {
    // gamma-only evolution feeds |g> keeping the field intact
    let alpha = c(0.7, 0.0);
    let n = choose_truncation(0.7, 1e-12);
    let gamma = 0.6;
    let t = 0.8;
    let mut psi = vec![c(0.0, 0.0); 2 * n];
    psi[..n].copy_from_slice(coherent_fock(alpha, n).unwrap().amplitudes());
    let rho = DensityMatrix::from_pure(vec![2, n], &psi);
    let out = lindblad_evolve_checked(&rho, 0.0, gamma, 0.0, t, 400).unwrap();
    let pop_e: f64 = (0..n).map(|k| out.entry(k, k).re).sum();
    let pop_g: f64 = (0..n).map(|k| out.entry(n + k, n + k).re).sum();
    assert!((pop_e - (-2.0 * gamma * t).exp()).abs() < 1e-7);
    assert!((pop_e + pop_g - 1.0).abs() < 1e-8);
    // field inside the g block is still |alpha><alpha|
    let g_block_00 = out.entry(n, n).re;
    let expect = (1.0 - (-2.0 * gamma * t).exp()) * (-alpha.norm_sqr()).exp();
    assert!((g_block_00 - expect).abs() < 1e-7);
}
