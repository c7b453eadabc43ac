//! Acceptance suite: one test per shipped guarantee, each printing a
//! pass/fail line. Every tolerance is pinned here, in code.
//!
//! Run with `cargo test -p bell-cli --test acceptance -- --nocapture`.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

use bell_core::bellopt::{
    maximize_bell, scan_alpha, Family, OptimizerConfig, ScanPoint,
};
use bell_core::correlators::{
    corr_indirect, corr_onoff, corr_parity, onoff_atom_rotation, IndirectSetting, OnOffSetting,
};
use bell_core::decoherence::{
    bell_at_optimal_settings, final_correlation, interact_block, Block, BlockEvolution,
    CoherentDyad, DecoherenceParams, Timeline,
};
use bell_core::fockspace::{
    apply_detector_loss, build_entangled_state, choose_truncation, coherent_fock,
    joint_expectation, lindblad_evolve, measurement_projectors, DensityMatrix, MeasurementKind,
    PhaseConvention,
};
use bell_core::fockspace::linalg::CMat;
use bell_core::locality::{
    max_waveguide_diameter, min_travel_times, LocalityInputs, SPEED_OF_LIGHT,
};
use bell_core::qcore::{displaced_gamma, zeta_from_angles, RotationAngles};

const TSIRELSON: f64 = 2.8284271247461903; // 2 sqrt(2)

fn pass(n: u32, what: &str) {
    println!("criterion {n:2}: PASS  {what}");
}

// ---------------------------------------------------------------- 1 ------

#[test]
fn criterion_01_closed_forms_match_simulator() {
    let dim = choose_truncation(3.0, 1e-12);
    let thetas: Vec<f64> = (0..5).map(|i| PI * i as f64 / 4.0).collect();
    let phis: Vec<f64> = (0..5).map(|i| 2.0 * PI * i as f64 / 5.0).collect();
    let betas: Vec<C64> = [(0.0, 0.0), (0.375, 1.1), (0.75, 3.6), (1.125, 5.0), (1.5, 2.2)]
        .iter()
        .map(|(m, p)| C64::from_polar(*m, *p))
        .collect();
    let alphas: Vec<C64> = [(0.5, 0.0), (1.0, 2.3), (1.5, 4.0)]
        .iter()
        .map(|(m, p)| C64::from_polar(*m, *p))
        .collect();
    let etas = [0.0, 0.5, 1.0];

    let mut max_onoff = 0.0f64;
    let mut max_parity = 0.0f64;
    for &alpha in &alphas {
        let rho = build_entangled_state(alpha, dim, PhaseConvention::Direct).unwrap();
        for &eta in &etas {
            let lossy = apply_detector_loss(&rho, eta).unwrap();
            for &beta in &betas {
                let onoff_proj = measurement_projectors(MeasurementKind::OnOff, beta, dim);
                for &theta in &thetas {
                    for &phi in &phis {
                        let angles = RotationAngles::wrapped(theta, phi);
                        let atom = displaced_gamma(onoff_atom_rotation(angles));
                        let simulated = joint_expectation(&lossy, &atom, &onoff_proj).unwrap();
                        let closed = corr_onoff(alpha, &OnOffSetting { angles, beta, eta });
                        max_onoff = max_onoff.max((simulated - closed).abs());
                    }
                }
            }
        }
        for &beta in &betas {
            let parity_proj = measurement_projectors(MeasurementKind::Parity, beta, dim);
            for &theta in &thetas {
                for &phi in &phis {
                    let angles = RotationAngles::wrapped(theta, phi);
                    let atom = displaced_gamma(zeta_from_angles(angles));
                    let simulated = joint_expectation(&rho, &atom, &parity_proj).unwrap();
                    let closed = corr_parity(alpha, angles, beta);
                    max_parity = max_parity.max((simulated - closed).abs());
                }
            }
        }
    }
    assert!(max_onoff < 1e-7, "on/off vs simulator max dev {max_onoff:.3e}");
    assert!(max_parity < 1e-7, "parity vs simulator max dev {max_parity:.3e}");

    // indirect readout at the quarter dispersive period is the parity form
    let mut rng = ChaCha8Rng::seed_from_u64(20240817);
    let mut max_ident = 0.0f64;
    for _ in 0..10_000 {
        let angles = RotationAngles::wrapped(
            rng.gen_range(0.0..PI),
            rng.gen_range(0.0..2.0 * PI),
        );
        let alpha = C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let beta = C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let chi = rng.gen_range(0.2..4.0);
        let s = IndirectSetting { angles, beta, t: FRAC_PI_2 / chi, chi };
        max_ident =
            max_ident.max((corr_indirect(alpha, &s) - corr_parity(alpha, angles, beta)).abs());
    }
    assert!(max_ident < 1e-12, "indirect-parity identity max dev {max_ident:.3e}");
    pass(
        1,
        &format!(
            "closed forms vs simulator: on/off {max_onoff:.1e}, parity {max_parity:.1e}, \
             indirect identity {max_ident:.1e}"
        ),
    );
}

// ---------------------------------------------------------------- 2 ------

fn onoff_peak(eta: f64, seed: u64) -> (f64, f64) {
    let alphas: Vec<f64> = (0..=64).map(|k| 0.60 + 0.0025 * k as f64).collect();
    let cfg = OptimizerConfig { restarts: 4, seed, tol: 1e-8, max_iters: 400 };
    let pts = scan_alpha(|a| Family::OnOff { alpha: a, eta }, &alphas, &cfg, false);
    let best = pts
        .iter()
        .max_by(|x, y| x.result.best_value.total_cmp(&y.result.best_value))
        .unwrap();
    (best.alpha, best.result.best_value)
}

#[test]
fn criterion_02_onoff_optima() {
    for (eta, b_ref, a_ref) in [(1.0, 2.61, 0.664), (0.8, 2.39, 0.673), (0.6, 2.14, 0.692)] {
        let (a, b) = onoff_peak(eta, 42);
        assert!(
            (b - b_ref).abs() <= 0.02,
            "eta={eta}: peak B {b:.4} outside {b_ref} +- 0.02"
        );
        assert!(
            (a - a_ref).abs() <= 0.01,
            "eta={eta}: peak alpha {a:.4} outside {a_ref} +- 0.01"
        );
    }
    pass(2, "on/off maxima 2.61@0.664 (eta 1), 2.39@0.673 (0.8), 2.14@0.692 (0.6)");
}

// ---------------------------------------------------------------- 3 ------

#[test]
fn criterion_03_efficiency_threshold() {
    // at eta = 0.5 the optimized Bell function sits on the classical bound
    let alphas: Vec<f64> = (1..=30).map(|k| 0.05 * k as f64).collect();
    let cfg = OptimizerConfig { restarts: 6, seed: 5, tol: 1e-8, max_iters: 400 };
    let pts = scan_alpha(|a| Family::OnOff { alpha: a, eta: 0.5 }, &alphas, &cfg, false);
    for p in &pts {
        assert!(
            (p.result.best_value - 2.0).abs() <= 2e-3,
            "eta=0.5 alpha={}: B = {}",
            p.alpha,
            p.result.best_value
        );
    }

    // strictly above the bound already at eta = 0.55
    let (_, b55) = onoff_peak(0.55, 61);
    assert!(b55 > 2.0 + 1e-3, "eta=0.55 peak {b55}");

    // the optimizing amplitude stays inside (0.66, 0.71) wherever the
    // optimum is identifiable (the eta = 0.5 curve is flat at 2, so its
    // argmax carries no information)
    for eta in [0.55, 0.6, 0.7, 0.8, 0.9, 1.0] {
        let (a, _) = onoff_peak(eta, 77);
        assert!(
            (0.66..0.71).contains(&a),
            "eta={eta}: optimal alpha {a:.4} outside (0.66, 0.71)"
        );
    }
    pass(3, "eta=0.5 pinned to 2 within 2e-3; violation from 0.55; argmax in (0.66, 0.71)");
}

// ---------------------------------------------------------------- 4 ------

fn parity_scan(restricted: bool) -> Vec<ScanPoint> {
    let alphas: Vec<f64> = (1..=30).map(|k| 0.05 * k as f64).collect();
    let cfg = OptimizerConfig { restarts: 8, seed: 9, tol: 1e-8, max_iters: 400 };
    scan_alpha(
        |a| {
            if restricted {
                Family::ParityRealZeta { alpha: a }
            } else {
                Family::Parity { alpha: a }
            }
        },
        &alphas,
        &cfg,
        true,
    )
}

#[test]
fn criterion_04_parity_family() {
    let full = parity_scan(false);
    for w in full.windows(2) {
        assert!(
            w[1].result.best_value >= w[0].result.best_value - 1e-9,
            "parity curve dipped at alpha {}",
            w[1].alpha
        );
    }
    for p in &full {
        assert!(p.result.best_value > 2.0, "no violation at alpha {}", p.alpha);
        assert!(p.result.best_value <= TSIRELSON + 1e-9);
    }
    let last = full.last().unwrap();
    assert!(last.result.best_value >= 2.7, "B(1.5) = {}", last.result.best_value);

    let restricted = parity_scan(true);
    let mut max_gap = 0.0f64;
    for (r, f) in restricted.iter().zip(&full) {
        assert!(
            r.result.best_value <= f.result.best_value + 1e-6,
            "restricted curve above unrestricted at alpha {}",
            r.alpha
        );
        max_gap = max_gap.max(f.result.best_value - r.result.best_value);
    }
    assert!(max_gap > 1e-3, "restricted curve never strictly lower (gap {max_gap:.1e})");
    pass(4, "parity violates for every alpha, rises to >= 2.7, respects the quantum bound");
}

// ---------------------------------------------------------------- 5 ------

#[test]
fn criterion_05_analytic_blocks_vs_runge_kutta() {
    let chi = 1.0;
    let p = DecoherenceParams::new(0.02, 0.0, 0.01, 0.0, chi).unwrap();
    let t = FRAC_PI_2;
    let alpha = C64::new(0.5, 0.0);
    let dim = 44;

    let field = coherent_fock(alpha, dim).unwrap();
    let mut psi = vec![C64::new(0.0, 0.0); 2 * dim];
    for n in 0..dim {
        psi[n] = 0.5f64.sqrt() * field.amplitudes()[n];
        psi[dim + n] = 0.5f64.sqrt() * field.amplitudes()[n];
    }
    let rho0 = DensityMatrix::from_pure(vec![2, dim], &psi);
    let coarse = lindblad_evolve(&rho0, p.kappa, p.gammac, chi, t, 3000).unwrap();
    let reference = lindblad_evolve(&rho0, p.kappa, p.gammac, chi, t, 6000).unwrap();
    let step_dev = coarse.max_abs_diff(&reference);
    assert!(step_dev < 2e-7, "integrator not converged: {step_dev:.3e}");

    let mut analytic = CMat::zeros(2 * dim);
    let add_dyad = |mat: &mut CMat, ai: usize, aj: usize, d: &CoherentDyad| {
        let mv = coherent_fock(d.mu, dim).unwrap();
        let nv = coherent_fock(d.nu, dim).unwrap();
        for n in 0..dim {
            for m in 0..dim {
                mat[(ai * dim + n, aj * dim + m)] +=
                    d.weight * mv.amplitudes()[n] * nv.amplitudes()[m].conj();
            }
        }
    };
    let half = CoherentDyad::new(C64::new(0.5, 0.0), alpha, alpha);
    for (block, ai, aj) in [(Block::Ee, 0, 0), (Block::Eg, 0, 1), (Block::Ge, 1, 0)] {
        let BlockEvolution::Dyad(d) = interact_block(block, &half, &p, t) else { panic!() };
        add_dyad(&mut analytic, ai, aj, &d);
    }
    let BlockEvolution::WithFeeding { homogeneous, feeding } =
        interact_block(Block::Gg, &half, &p, t)
    else {
        panic!()
    };
    add_dyad(&mut analytic, 1, 1, &homogeneous);
    // integrate the feeding term on a fixed composite rule; doubling the
    // panel count moves nothing at the tolerance of interest
    let (nodes, weights) = bell_core::decoherence::quad::gauss_legendre(15);
    for panels in [8] {
        let width = feeding.upper() / panels as f64;
        for k in 0..panels {
            let mid = (k as f64 + 0.5) * width;
            for (x, w) in nodes.iter().zip(&weights) {
                let mut d = feeding.dyad_at(mid + 0.5 * width * x);
                d.weight *= 0.5 * width * w;
                add_dyad(&mut analytic, 1, 1, &d);
            }
        }
    }

    let dev = reference.matrix().max_abs_diff(&analytic);
    assert!(dev < 1e-6, "analytic vs RK4 deviation {dev:.3e}");
    pass(5, &format!("analytic block solutions match RK4 to {dev:.1e} (tol 1e-6)"));
}

// ---------------------------------------------------------------- 6 ------

#[test]
fn criterion_06_zero_decoherence_reduction() {
    let chi = 1.0;
    let p = DecoherenceParams::zero_rates(chi);
    let tl = Timeline::new(0.07, 0.11, FRAC_PI_2 / chi, 2.3, 1.9, 0.02, 250.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(606060);
    let mut max_dev = 0.0f64;
    for _ in 0..100 {
        let alpha = C64::new(rng.gen_range(0.0..1.5), 0.0);
        let beta = C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let phi = rng.gen_range(0.0..2.0 * PI);
        let got = final_correlation(phi, beta, &p, &tl, alpha).unwrap();
        let ideal = corr_indirect(
            alpha,
            &IndirectSetting {
                angles: RotationAngles::wrapped(FRAC_PI_2, phi),
                beta,
                t: tl.t3,
                chi,
            },
        );
        max_dev = max_dev.max((got - ideal).abs());
    }
    assert!(max_dev < 1e-8, "zero-rate reduction max dev {max_dev:.3e}");
    pass(6, &format!("zero-rate sequence equals the ideal correlation to {max_dev:.1e}"));
}

// ---------------------------------------------------------------- 7 ------

#[test]
fn criterion_07_bell_violation_vs_separation() {
    let p = DecoherenceParams::rydberg_microwave_defaults();
    let separations = [0.1, 0.5, 1.0, 2.0, 5.0];
    let mut optimized = Vec::new();
    for (row, &l) in separations.iter().enumerate() {
        let tl = Timeline::rydberg_microwave_defaults(l);
        // analytic-settings sweep locates the best amplitude
        let mut best = (0.0f64, 0.0f64);
        for k in 2..=30 {
            let a = 0.1 * k as f64;
            let b = bell_at_optimal_settings(a, &p, &tl).unwrap();
            if b > best.1 {
                best = (a, b);
            }
        }
        // free optimization over all settings from there
        let family = Family::Decohered { alpha: best.0, params: p, timeline: tl };
        let cfg = OptimizerConfig {
            restarts: 3,
            seed: 70 + row as u64,
            tol: 1e-8,
            max_iters: 250,
        };
        let r = maximize_bell(&family, &cfg);
        assert!(
            r.best_value >= best.1 - 1e-6,
            "optimizer below analytic settings at l={l}"
        );
        optimized.push(r.best_value);
    }
    assert!(
        (optimized[0] - 2.7).abs() <= 0.05,
        "B at 0.1 m = {} outside 2.7 +- 0.05",
        optimized[0]
    );
    assert!(optimized[3] > 2.0, "no violation at 2 m: {}", optimized[3]);
    for w in optimized.windows(2) {
        assert!(w[1] < w[0], "Bell value not strictly decreasing in separation: {optimized:?}");
    }
    pass(
        7,
        &format!(
            "separation sweep: B = {:.3} at 0.1 m, {:.3} at 2 m, strictly decreasing",
            optimized[0], optimized[3]
        ),
    );
}

// ---------------------------------------------------------------- 8 ------

#[test]
fn criterion_08_locality_minima() {
    let tl = Timeline::new(80.0e-6, 166.5e-6, 27.1e-6, 0.0, 0.0, 20.0e-6, 250.0).unwrap();
    let inputs = LocalityInputs::new(tl).unwrap();

    let with_t6 = min_travel_times(&inputs, true).unwrap();
    assert!((with_t6.t4 - 236.0).abs() / 236.0 < 1e-3, "t4 = {}", with_t6.t4);
    assert!((with_t6.t5 - 96.8e-6).abs() / 96.8e-6 < 1e-3, "t5 = {}", with_t6.t5);

    // separation from the inequalities as stated, against its own derivation
    let derived_l = tl.v * (with_t6.t4 + with_t6.t5);
    assert!((with_t6.l - derived_l).abs() / derived_l < 1e-12);
    assert!((with_t6.l - 59.0e3).abs() / 59.0e3 < 5e-3, "l = {}", with_t6.l);

    // the published 52.99 km corresponds to dropping the detection time
    let without_t6 = min_travel_times(&inputs, false).unwrap();
    assert!(
        (without_t6.l - 52.99e3).abs() / 52.99e3 < 5e-3,
        "l (no detection) = {}",
        without_t6.l
    );

    let omega0 = 2.0 * PI * 51.1e9;
    let d = max_waveguide_diameter(omega0, SPEED_OF_LIGHT);
    assert!((d - 3.44e-3).abs() <= 0.01e-3, "diameter = {d}");
    pass(
        8,
        &format!(
            "transit minima t4 = {:.1} s, t5 = {:.1} us; separations {:.1}/{:.1} km; \
             waveguide {:.2} mm",
            with_t6.t4,
            with_t6.t5 * 1e6,
            with_t6.l / 1e3,
            without_t6.l / 1e3,
            d * 1e3
        ),
    );
}

// ---------------------------------------------------------------- 9 ------

fn violation_threshold(gammap: f64) -> (f64, f64) {
    let base = DecoherenceParams::rydberg_microwave_defaults();
    // the published contour was evaluated at the quoted transit minima
    let tl = Timeline::new(80.0e-6, 166.5e-6, 27.1e-6, 236.0, 96.8e-6, 20.0e-6, 250.0).unwrap();
    let storage: Vec<f64> = (0..20).map(|i| 200.0 + 1800.0 * i as f64 / 19.0).collect();
    let alphas: Vec<f64> = (1..=20).map(|i| 0.05 * i as f64).collect();

    let best_over = |t_c: f64, grid: &[f64]| -> (f64, f64) {
        let p = DecoherenceParams { kappa: 1.0 / (2.0 * t_c), gammap, ..base };
        let mut best = (0.0f64, 0.0f64);
        for &a in grid {
            let b = bell_at_optimal_settings(a, &p, &tl).unwrap();
            if b > best.1 {
                best = (a, b);
            }
        }
        best
    };

    let mut bracket = None;
    let mut prev = storage[0];
    for &t_c in &storage {
        if best_over(t_c, &alphas).1 > 2.0 {
            bracket = Some((prev, t_c));
            break;
        }
        prev = t_c;
    }
    let (mut lo, mut hi) = bracket.expect("no violation anywhere on the contour grid");
    for _ in 0..30 {
        if hi - lo < 1e-4 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if best_over(mid, &alphas).1 > 2.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let fine: Vec<f64> = (1..=200).map(|i| 0.005 * i as f64).collect();
    let (alpha_at, _) = best_over(hi * 1.0001, &fine);
    (hi, alpha_at)
}

#[test]
fn criterion_09_storage_time_thresholds() {
    let (tc, alpha) = violation_threshold(1.0 / (2.0 * 2000.0));
    assert!((tc - 1160.0).abs() <= 116.0, "threshold {tc} s outside 1160 +- 10%");
    assert!((alpha - 0.47).abs() <= 0.05, "threshold alpha {alpha}");

    let (tc_inf, alpha_inf) = violation_threshold(0.0);
    assert!((tc_inf - 590.0).abs() <= 59.0, "threshold {tc_inf} s outside 590 +- 10%");
    assert!((alpha_inf - 0.3).abs() <= 0.05, "threshold alpha {alpha_inf}");
    pass(
        9,
        &format!(
            "violation thresholds: T_C = {tc:.0} s at alpha {alpha:.3} (t_atom 2000 s); \
             {tc_inf:.0} s at {alpha_inf:.3} (full inhibition)"
        ),
    );
}

// --------------------------------------------------------------- 10 ------

#[test]
fn criterion_10_byte_identical_outputs() {
    let run = |dir: &std::path::Path| {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_bell-cli"))
            .args([
                "scan",
                "--family",
                "parity",
                "--alpha-start",
                "0.25",
                "--alpha-stop",
                "1.0",
                "--alpha-step",
                "0.25",
                "--restarts",
                "6",
                "--seed",
                "314159",
                "--out",
                dir.to_str().unwrap(),
            ])
            .output()
            .expect("binary runs");
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(dir.join("scan_parity.csv")).unwrap()
    };
    let base = std::env::temp_dir().join(format!("bell-acceptance-{}", std::process::id()));
    let (dir_a, dir_b) = (base.join("a"), base.join("b"));
    std::fs::create_dir_all(&dir_a).unwrap();
    std::fs::create_dir_all(&dir_b).unwrap();
    let first = run(&dir_a);
    let second = run(&dir_b);
    assert_eq!(first, second, "CSV outputs differ between identical runs");
    let _ = std::fs::remove_dir_all(&base);
    pass(10, "repeated runs with one seed emit byte-identical CSV");
}
