//! Maximization of CHSH Bell functions over measurement settings: projected
//! multi-start gradient ascent with central-difference gradients, plus the
//! bracketed-bisection solvers for the optimal displacement magnitudes.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::correlators::{corr_indirect, corr_onoff, corr_parity, IndirectSetting, OnOffSetting};
use crate::decoherence::{DecoheredCorrelation, DecoherenceParams, Timeline};
use crate::qcore::RotationAngles;

use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Debug, Error)]
pub enum BellOptError {
    #[error("no sign change for {context} scanning (0, {hi}] at step {step}")]
    NoBracket { context: &'static str, hi: f64, step: f64 },
}

/// Multi-start optimizer configuration. The seed fixes every random restart;
/// identical configs give bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 64, seed: 0, tol: 1e-8, max_iters: 400 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best_value: f64,
    pub argmax: Vec<f64>,
    pub restarts_used: usize,
    pub converged: bool,
}

/// Correlation family whose Bell function is being maximized. Settings are
/// packed as flat vectors; see the variant docs for the order.
#[derive(Debug, Clone)]
pub enum Family {
    /// Displaced on/off measurements at detector efficiency eta;
    /// settings [theta, phi, theta', phi', Re b, Im b, Re b', Im b'].
    OnOff { alpha: f64, eta: f64 },
    /// Displaced parity measurements; same 8 settings as `OnOff`.
    Parity { alpha: f64 },
    /// Parity with the atomic rotation labels restricted to the real axis;
    /// settings [zeta, zeta', Re b, Im b, Re b', Im b'] with zeta in
    /// [-pi/2, pi/2].
    ParityRealZeta { alpha: f64 },
    /// Indirect probe-atom measurements with free interaction times;
    /// settings [theta, phi, theta', phi', Re b, Im b, Re b', Im b', t, t'].
    Indirect { alpha: f64, chi: f64 },
    /// Full decohered sequence (atom rotations pinned to pi/2 pulses);
    /// settings [phi, phi', Re b, Im b, Re b', Im b'].
    Decohered {
        alpha: f64,
        params: DecoherenceParams,
        timeline: Timeline,
    },
}

impl Family {
    pub fn dims(&self) -> usize {
        match self {
            Family::OnOff { .. } | Family::Parity { .. } => 8,
            Family::ParityRealZeta { .. } => 6,
            Family::Indirect { .. } => 10,
            Family::Decohered { .. } => 6,
        }
    }

    fn field_box(alpha: f64) -> f64 {
        3.0f64.max(3.0 * alpha)
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let two_pi = 2.0 * PI;
        match self {
            Family::OnOff { alpha, .. } | Family::Parity { alpha } => {
                let l = Self::field_box(*alpha);
                (
                    vec![0.0, 0.0, 0.0, 0.0, -l, -l, -l, -l],
                    vec![PI, two_pi, PI, two_pi, l, l, l, l],
                )
            }
            Family::ParityRealZeta { alpha } => {
                let l = Self::field_box(*alpha);
                (
                    vec![-FRAC_PI_2, -FRAC_PI_2, -l, -l, -l, -l],
                    vec![FRAC_PI_2, FRAC_PI_2, l, l, l, l],
                )
            }
            Family::Indirect { alpha, chi } => {
                let l = Self::field_box(*alpha);
                let tmax = PI / chi;
                (
                    vec![0.0, 0.0, 0.0, 0.0, -l, -l, -l, -l, 0.0, 0.0],
                    vec![PI, two_pi, PI, two_pi, l, l, l, l, tmax, tmax],
                )
            }
            Family::Decohered { alpha, .. } => {
                let l = Self::field_box(*alpha);
                (
                    vec![0.0, 0.0, -l, -l, -l, -l],
                    vec![two_pi, two_pi, l, l, l, l],
                )
            }
        }
    }

    /// CHSH Bell value at packed settings x.
    pub fn bell_value(&self, x: &[f64]) -> f64 {
        match self {
            Family::OnOff { alpha, eta } => {
                let a = C64::new(*alpha, 0.0);
                let e = |theta: f64, phi: f64, b: C64| {
                    corr_onoff(
                        a,
                        &OnOffSetting {
                            angles: RotationAngles::wrapped(theta, phi),
                            beta: b,
                            eta: *eta,
                        },
                    )
                };
                let b1 = C64::new(x[4], x[5]);
                let b2 = C64::new(x[6], x[7]);
                (e(x[0], x[1], b1) + e(x[2], x[3], b1) + e(x[0], x[1], b2) - e(x[2], x[3], b2))
                    .abs()
            }
            Family::Parity { alpha } => {
                let a = C64::new(*alpha, 0.0);
                let e = |theta: f64, phi: f64, b: C64| {
                    corr_parity(a, RotationAngles::wrapped(theta, phi), b)
                };
                let b1 = C64::new(x[4], x[5]);
                let b2 = C64::new(x[6], x[7]);
                (e(x[0], x[1], b1) + e(x[2], x[3], b1) + e(x[0], x[1], b2) - e(x[2], x[3], b2))
                    .abs()
            }
            Family::ParityRealZeta { alpha } => {
                let a = C64::new(*alpha, 0.0);
                let e = |zeta: f64, b: C64| {
                    let theta = 2.0 * zeta.abs();
                    let phi = if zeta > 0.0 { PI } else { 0.0 };
                    corr_parity(a, RotationAngles::wrapped(theta, phi), b)
                };
                let b1 = C64::new(x[2], x[3]);
                let b2 = C64::new(x[4], x[5]);
                (e(x[0], b1) + e(x[1], b1) + e(x[0], b2) - e(x[1], b2)).abs()
            }
            Family::Indirect { alpha, chi } => {
                let a = C64::new(*alpha, 0.0);
                let e = |theta: f64, phi: f64, b: C64, t: f64| {
                    corr_indirect(
                        a,
                        &IndirectSetting {
                            angles: RotationAngles::wrapped(theta, phi),
                            beta: b,
                            t: t.max(0.0),
                            chi: *chi,
                        },
                    )
                };
                let b1 = C64::new(x[4], x[5]);
                let b2 = C64::new(x[6], x[7]);
                (e(x[0], x[1], b1, x[8]) + e(x[2], x[3], b1, x[8]) + e(x[0], x[1], b2, x[9])
                    - e(x[2], x[3], b2, x[9]))
                .abs()
            }
            Family::Decohered { alpha, params, timeline } => {
                let a = C64::new(*alpha, 0.0);
                let b1 = C64::new(x[2], x[3]);
                let b2 = C64::new(x[4], x[5]);
                let (Ok(c1), Ok(c2)) = (
                    DecoheredCorrelation::new(a, b1, params, timeline),
                    DecoheredCorrelation::new(a, b2, params, timeline),
                ) else {
                    return -1.0;
                };
                (c1.eval(x[0]) + c1.eval(x[1]) + c2.eval(x[0]) - c2.eval(x[1])).abs()
            }
        }
    }

    /// Settings from the closed-form optimality conditions, used as a warm
    /// start when available.
    pub fn analytic_start(&self) -> Option<Vec<f64>> {
        match self {
            Family::OnOff { alpha, eta } => {
                let b = solve_beta_onoff(*alpha, *eta).ok()?;
                Some(vec![PI, PI, 0.0, 0.0, b, 0.0, -b, 0.0])
            }
            Family::Parity { alpha } => {
                let b = solve_beta_parity(*alpha);
                Some(vec![FRAC_PI_2, 0.0, FRAC_PI_2, FRAC_PI_2, 0.0, b, 0.0, -b])
            }
            Family::ParityRealZeta { .. } => None,
            Family::Indirect { alpha, chi } => {
                let b = solve_beta_parity(*alpha);
                let t = FRAC_PI_2 / chi;
                Some(vec![FRAC_PI_2, 0.0, FRAC_PI_2, FRAC_PI_2, 0.0, b, 0.0, -b, t, t])
            }
            Family::Decohered { alpha, params, timeline } => {
                let b = crate::decoherence::solve_beta_decoh(
                    *alpha,
                    params.kappa,
                    timeline.t3,
                    timeline.t4,
                );
                Some(vec![0.0, FRAC_PI_2, 0.0, b, 0.0, -b])
            }
        }
    }
}

fn clamp_to(lo: &[f64], hi: &[f64], x: &mut [f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

const FD_STEP: f64 = 1e-5;

fn central_gradient(f: &impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + FD_STEP;
        let up = f(&probe);
        probe[i] = x[i] - FD_STEP;
        let down = f(&probe);
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * FD_STEP);
    }
    g
}

/// Projected gradient ascent with backtracking line search from one start.
fn ascend(
    f: &impl Fn(&[f64]) -> f64,
    start: &[f64],
    lo: &[f64],
    hi: &[f64],
    tol: f64,
    max_iters: usize,
) -> (f64, Vec<f64>, bool) {
    let mut x = start.to_vec();
    clamp_to(lo, hi, &mut x);
    let mut fx = f(&x);
    for _ in 0..max_iters {
        let g = central_gradient(f, &x);
        let mut gnorm: f64 = 0.0;
        let mut gsq = 0.0;
        for i in 0..x.len() {
            let blocked = (x[i] >= hi[i] && g[i] > 0.0) || (x[i] <= lo[i] && g[i] < 0.0);
            let gi = if blocked { 0.0 } else { g[i] };
            gnorm = gnorm.max(gi.abs());
            gsq += gi * gi;
        }
        if gnorm < tol * (1.0 + fx.abs()) {
            return (fx, x, true);
        }
        let mut step = 0.5 / (1.0 + gnorm);
        let mut improved = false;
        for _ in 0..45 {
            let mut xn = x.clone();
            for i in 0..x.len() {
                let blocked = (x[i] >= hi[i] && g[i] > 0.0) || (x[i] <= lo[i] && g[i] < 0.0);
                if !blocked {
                    xn[i] += step * g[i];
                }
            }
            clamp_to(lo, hi, &mut xn);
            let fnew = f(&xn);
            if fnew > fx + 1e-4 * step * gsq {
                x = xn;
                fx = fnew;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            // line search exhausted at finite-difference noise level
            return (fx, x, true);
        }
    }
    (fx, x, false)
}

fn better(a: &(f64, Vec<f64>, bool), b: &(f64, Vec<f64>, bool)) -> bool {
    if a.0 != b.0 {
        return a.0 > b.0;
    }
    // tie-break on the lexicographically smaller settings vector
    for (x, y) in a.1.iter().zip(b.1.iter()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

fn run_starts(
    family: &Family,
    starts: Vec<Vec<f64>>,
    config: &OptimizerConfig,
) -> OptimizationResult {
    let (lo, hi) = family.bounds();
    let f = |x: &[f64]| family.bell_value(x);
    let outcomes: Vec<(f64, Vec<f64>, bool)> = starts
        .par_iter()
        .map(|s| ascend(&f, s, &lo, &hi, config.tol, config.max_iters))
        .collect();
    let restarts_used = outcomes.len();
    let best = outcomes
        .into_iter()
        .reduce(|a, b| if better(&a, &b) { a } else { b })
        .expect("at least one start");
    OptimizationResult {
        best_value: best.0,
        argmax: best.1,
        restarts_used,
        converged: best.2,
    }
}

fn random_starts(family: &Family, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let (lo, hi) = family.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..family.dims())
                .map(|i| rng.gen_range(lo[i]..=hi[i]))
                .collect()
        })
        .collect()
}

/// Maximize the Bell function of `family` by multi-start projected ascent.
/// The analytic-settings start (when the family has one) is always included
/// on top of `config.restarts` random starts.
pub fn maximize_bell(family: &Family, config: &OptimizerConfig) -> OptimizationResult {
    maximize_bell_with_starts(family, config, &[])
}

/// Like [`maximize_bell`] with extra caller-provided warm starts.
pub fn maximize_bell_with_starts(
    family: &Family,
    config: &OptimizerConfig,
    warm: &[Vec<f64>],
) -> OptimizationResult {
    let mut starts = Vec::with_capacity(config.restarts + warm.len() + 1);
    if let Some(s) = family.analytic_start() {
        starts.push(s);
    }
    starts.extend(warm.iter().cloned());
    starts.extend(random_starts(family, config.restarts, config.seed));
    run_starts(family, starts, config)
}

/// One row of an amplitude scan.
#[derive(Debug, Clone)]
pub struct ScanPoint {
    pub alpha: f64,
    pub result: OptimizationResult,
    /// Set when the best value dropped noticeably below the previous grid
    /// point inside a region expected to be monotone (an optimizer dropout,
    /// not physics).
    pub dropout: bool,
}

/// Optimize over a grid of amplitudes, warm-starting each point from the
/// previous argmax.
pub fn scan_alpha(
    make_family: impl Fn(f64) -> Family,
    alphas: &[f64],
    config: &OptimizerConfig,
    known_monotone: bool,
) -> Vec<ScanPoint> {
    let mut out: Vec<ScanPoint> = Vec::with_capacity(alphas.len());
    let mut warm: Vec<Vec<f64>> = Vec::new();
    for (i, &alpha) in alphas.iter().enumerate() {
        let family = make_family(alpha);
        let cfg = OptimizerConfig {
            seed: config.seed.wrapping_add(i as u64),
            ..*config
        };
        let result = maximize_bell_with_starts(&family, &cfg, &warm);
        warm = vec![result.argmax.clone()];
        let dropout = known_monotone
            && out
                .last()
                .is_some_and(|prev| result.best_value < prev.result.best_value - 0.05);
        out.push(ScanPoint { alpha, result, dropout });
    }
    out
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-15 * (1.0 + hi.abs()) {
            return mid;
        }
        let fmid = f(mid);
        if (fmid >= 0.0) == (flo >= 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Displacement magnitude optimizing the on/off Bell function at efficiency
/// eta: the positive root of
/// 2 b e^{2(eta-1) a^2} = e^{-2 a b sqrt(eta)} (b + a sqrt(eta))
///                      - e^{ 2 a b sqrt(eta)} (b - a sqrt(eta)),
/// found by a sign-change scan at step 1e-3 followed by bisection.
pub fn solve_beta_onoff(alpha_mag: f64, eta: f64) -> Result<f64, BellOptError> {
    assert!(alpha_mag >= 0.0 && (0.0..=1.0).contains(&eta));
    if alpha_mag == 0.0 || eta == 0.0 {
        return Ok(0.0);
    }
    let se = eta.sqrt();
    let f = |b: f64| {
        2.0 * b * (2.0 * (eta - 1.0) * alpha_mag * alpha_mag).exp()
            - (-2.0 * alpha_mag * b * se).exp() * (b + alpha_mag * se)
            + (2.0 * alpha_mag * b * se).exp() * (b - alpha_mag * se)
    };
    let step = 1e-3;
    let hi = 5.0;
    let mut prev = step;
    let mut fprev = f(prev);
    let mut b = prev + step;
    while b <= hi {
        let fb = f(b);
        if (fb >= 0.0) != (fprev >= 0.0) {
            return Ok(bisect(f, prev, b));
        }
        prev = b;
        fprev = fb;
        b += step;
    }
    Err(BellOptError::NoBracket { context: "on/off displacement root", hi, step })
}

/// Displacement magnitude optimizing the parity Bell function: the root of
/// (a - b)/(a + b) = tan(4 a b) nearest zero, scanned outward from 0+ at
/// step min(1e-3, pi/(40 a)) and bisected. Returns 0 at a = 0.
pub fn solve_beta_parity(alpha_mag: f64) -> f64 {
    assert!(alpha_mag >= 0.0);
    if alpha_mag == 0.0 {
        return 0.0;
    }
    let f = |b: f64| (alpha_mag - b) / (alpha_mag + b) - (4.0 * alpha_mag * b).tan();
    let step = 1e-3f64.min(PI / (40.0 * alpha_mag));
    let hi = PI / (8.0 * alpha_mag) - 1e-12;
    let mut prev = step * 1e-6;
    let mut fprev = f(prev);
    let mut b = step;
    loop {
        let b_eff = b.min(hi);
        let fb = f(b_eff);
        if (fb >= 0.0) != (fprev >= 0.0) {
            return bisect(f, prev, b_eff);
        }
        if b >= hi {
            // tan sweeps past the left side before its singularity; only
            // reachable through rounding at extreme magnitudes
            return hi;
        }
        prev = b_eff;
        fprev = fb;
        b += step;
    }
}
