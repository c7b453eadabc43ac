//! Analytic decoherence pipeline for the staged atom-A / field / atom-B
//! sequence: spontaneous-emission and cavity-dissipation maps on coherent
//! dyads, the exact superoperator solutions of the dispersive master
//! equation per atomic block, and the closed-form correlation function of
//! the full sequence including the feeding integrals.
//!
//! Everything acts on [`CoherentDyad`]s (weighted |mu><nu| between coherent
//! states), which are closed under all maps used here; the Fock-space
//! Runge-Kutta integrator provides the independent cross-check.

pub mod quad;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::qcore::AtomOperator;
use quad::{adaptive_gauss, QuadError};

#[derive(Debug, Error)]
pub enum DecoherenceError {
    #[error("invalid parameter: {0}")]
    InvalidParams(&'static str),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Physical rates of the cavity-atom system. `kappa` is the cavity field
/// dissipation rate, `gamma0` free-space spontaneous emission, `gammac`
/// emission inside the main cavity, `gammap` emission inside the long
/// cylindrical cavity, and `chi` the dispersive coupling in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceParams {
    pub kappa: f64,
    pub gamma0: f64,
    pub gammac: f64,
    pub gammap: f64,
    pub chi: f64,
}

impl DecoherenceParams {
    pub fn new(
        kappa: f64,
        gamma0: f64,
        gammac: f64,
        gammap: f64,
        chi: f64,
    ) -> Result<Self, DecoherenceError> {
        if kappa < 0.0 || gamma0 < 0.0 || gammac < 0.0 || gammap < 0.0 || chi < 0.0 {
            return Err(DecoherenceError::InvalidParams("rates must be nonnegative"));
        }
        Ok(Self { kappa, gamma0, gammac, gammap, chi })
    }

    pub fn zero_rates(chi: f64) -> Self {
        Self { kappa: 0.0, gamma0: 0.0, gammac: 0.0, gammap: 0.0, chi }
    }

    /// Rates of the circular-Rydberg microwave-cavity setup used by the
    /// bundled configs: photon storage time 0.13 s (kappa = 1/(2 T_C)),
    /// free-space atomic lifetime 36 ms (gamma0 = 1/(2 T_0)), in-cavity
    /// emission 4.08 Hz, and chi = Omega^2/(4 delta) for Omega = 2 pi 49 kHz,
    /// delta = 2 pi 65 kHz. The cylindrical-cavity rate defaults to gamma0
    /// (no inhibition).
    pub fn rydberg_microwave_defaults() -> Self {
        let gamma0 = 1.0 / (2.0 * 0.036);
        let omega = 2.0 * std::f64::consts::PI * 49.0e3;
        let delta = 2.0 * std::f64::consts::PI * 65.0e3;
        Self {
            kappa: 1.0 / (2.0 * 0.13),
            gamma0,
            gammac: 4.08,
            gammap: gamma0,
            chi: omega * omega / (4.0 * delta),
        }
    }

    /// kappa + i chi, the complex decay constant of the excited block.
    pub fn r(&self) -> C64 {
        C64::new(self.kappa, self.chi)
    }
}

/// Segment durations of the measurement sequence and the atomic velocity.
/// t1: half transit of a Ramsey zone; t2: half transit of Ramsey zone plus
/// main cavity outside the waist; t3: main-cavity waist transit (the
/// dispersive interaction time); t4: cylinder transit before the field
/// displacement; t5: cylinder transit after it; t6: detector dwell time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timeline {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
    pub t6: f64,
    pub v: f64,
}

impl Timeline {
    pub fn new(
        t1: f64,
        t2: f64,
        t3: f64,
        t4: f64,
        t5: f64,
        t6: f64,
        v: f64,
    ) -> Result<Self, DecoherenceError> {
        let tl = Self { t1, t2, t3, t4, t5, t6, v };
        if [t1, t2, t3, t4, t5, t6, v].iter().any(|x| *x < 0.0) {
            return Err(DecoherenceError::InvalidParams("durations must be nonnegative"));
        }
        Ok(tl)
    }

    /// Party separation l = v (t4 + t5).
    pub fn separation(&self) -> f64 {
        self.v * (self.t4 + self.t5)
    }

    /// Segment durations of the Rydberg-atom sequence (t1 = 80 us,
    /// t2 = 166.5 us, t3 = 27.1 us, t6 = 20 us, v = 250 m/s) with the
    /// cylinder transit split evenly around the displacement:
    /// t4 = t5 = l/(2v).
    pub fn rydberg_microwave_defaults(separation: f64) -> Self {
        let v = 250.0;
        let half = separation / (2.0 * v);
        Self {
            t1: 80.0e-6,
            t2: 166.5e-6,
            t3: 27.1e-6,
            t4: half,
            t5: half,
            t6: 20.0e-6,
            v,
        }
    }

    /// Same segments but with t5 pinned (e.g. to the locality-loophole
    /// minimum) and t4 = l/v - t5 absorbing the rest of the cylinder.
    pub fn with_pinned_t5(separation: f64, t5: f64) -> Self {
        let v = 250.0;
        Self {
            t1: 80.0e-6,
            t2: 166.5e-6,
            t3: 27.1e-6,
            t4: separation / v - t5,
            t5,
            t6: 20.0e-6,
            v,
        }
    }
}

/// Weighted outer product weight |mu><nu| of (normalized) coherent states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentDyad {
    pub weight: C64,
    pub mu: C64,
    pub nu: C64,
}

impl CoherentDyad {
    pub fn new(weight: C64, mu: C64, nu: C64) -> Self {
        Self { weight, mu, nu }
    }

    /// Tr[w |mu><nu|] = w <nu|mu>.
    pub fn trace(&self) -> C64 {
        self.weight * crate::qcore::coherent_overlap(self.nu, self.mu)
    }
}

/// Spontaneous-emission map on a 2x2 atomic density matrix for time t:
/// ee decays at 2 gamma, coherences at gamma, gg collects the lost
/// population. Trace-preserving by construction.
pub fn spont_emission_map(rho: &AtomOperator, gamma: f64, t: f64) -> AtomOperator {
    let e2 = (-2.0 * gamma * t).exp();
    let e1 = (-gamma * t).exp();
    let m = &rho.0;
    AtomOperator([
        [m[0][0] * e2, m[0][1] * e1],
        [m[1][0] * e1, m[1][1] - m[0][0] * (e2 - 1.0)],
    ])
}

/// Cavity-dissipation map on a coherent dyad for time t: labels shrink by
/// e^{-kappa t} and the weight picks up the decoherence factor
/// exp[-(|mu|^2 + |nu|^2 - 2 conj(nu) mu)(1 - e^{-2 kappa t})/2].
pub fn dissipate_dyad(d: &CoherentDyad, kappa: f64, t: f64) -> CoherentDyad {
    let decay = (-kappa * t).exp();
    let loss = 1.0 - (-2.0 * kappa * t).exp();
    let exponent =
        -0.5 * loss * C64::new(d.mu.norm_sqr() + d.nu.norm_sqr(), 0.0) + loss * d.nu.conj() * d.mu;
    CoherentDyad {
        weight: d.weight * exponent.exp(),
        mu: d.mu * decay,
        nu: d.nu * decay,
    }
}

/// Theta(kappa, chi, mu, nu, t) = -(|mu|^2 + |nu|^2)(1 - e^{-2 kappa t})/2
/// plus (kappa/r)(1 - e^{-2 r t}) conj(nu) mu with r = kappa + i chi;
/// identically zero at kappa = 0.
pub fn theta_fn(kappa: f64, chi: f64, mu: C64, nu: C64, t: f64) -> C64 {
    if kappa == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let r = C64::new(kappa, chi);
    let sq = -0.5 * (mu.norm_sqr() + nu.norm_sqr()) * (1.0 - (-2.0 * kappa * t).exp());
    C64::new(sq, 0.0) + (kappa / r) * (C64::new(1.0, 0.0) - (-2.0 * r * t).exp()) * nu.conj() * mu
}

/// Atomic dyad block of the joint atom-field density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Ee,
    Eg,
    Ge,
    Gg,
}

/// Ground-block feeding term 2 gamma int_0^t e^{-2 gamma s} (evolved ee
/// dyad at s, propagated through the ground-block flow to t) ds, kept
/// symbolic until integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedingIntegral {
    scale: C64,
    two_gamma: f64,
    mu: C64,
    nu: C64,
    kappa: f64,
    chi: f64,
    t: f64,
}

impl FeedingIntegral {
    pub fn upper(&self) -> f64 {
        self.t
    }

    /// The dyad under the integral at emission time s in [0, t]: the label
    /// keeps dissipating after the jump and its dispersive phase unwinds,
    /// ending at mu e^{-kappa t} e^{i chi (t - 2s)}.
    pub fn dyad_at(&self, s: f64) -> CoherentDyad {
        let phase = (-self.kappa * self.t) * C64::new(1.0, 0.0)
            + C64::new(0.0, self.chi * (self.t - 2.0 * s));
        let factor = phase.exp();
        CoherentDyad {
            weight: self.scale * (-self.two_gamma * s).exp(),
            mu: self.mu * factor,
            nu: self.nu * factor,
        }
    }

    /// Total transferred weight, 2 gamma int_0^t e^{-2 gamma s} ds times the
    /// common Theta factor (already folded into the per-node weights).
    pub fn weight_scale(&self) -> C64 {
        self.scale
    }
}

/// Result of evolving one atomic block: the transformed dyad, plus the
/// feeding integral for the ground-ground block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockEvolution {
    Dyad(CoherentDyad),
    WithFeeding {
        homogeneous: CoherentDyad,
        feeding: FeedingIntegral,
    },
}

impl BlockEvolution {
    pub fn dyad(&self) -> &CoherentDyad {
        match self {
            BlockEvolution::Dyad(d) => d,
            BlockEvolution::WithFeeding { homogeneous, .. } => homogeneous,
        }
    }
}

/// Exact solution of the dispersive master equation restricted to one atomic
/// block, acting on a coherent dyad for time t. Uses kappa, gammac and chi
/// from `p`. The ee/eg/ge blocks evolve into single dyads; gg additionally
/// collects population fed from ee, returned as a quadrature descriptor.
pub fn interact_block(
    block: Block,
    d: &CoherentDyad,
    p: &DecoherenceParams,
    t: f64,
) -> BlockEvolution {
    let r = p.r();
    let gamma = p.gammac;
    let decay_e = (-r * t).exp();
    let decay_g = (-r.conj() * t).exp();
    match block {
        Block::Ee => BlockEvolution::Dyad(CoherentDyad {
            weight: d.weight
                * (C64::new(-2.0 * gamma * t, 0.0) + theta_fn(p.kappa, 0.0, d.mu, d.nu, t)).exp(),
            mu: d.mu * decay_e,
            nu: d.nu * decay_e,
        }),
        Block::Eg => BlockEvolution::Dyad(CoherentDyad {
            weight: d.weight
                * (C64::new(-gamma * t, -p.chi * t) + theta_fn(p.kappa, p.chi, d.mu, d.nu, t))
                    .exp(),
            mu: d.mu * decay_e,
            nu: d.nu * decay_g,
        }),
        Block::Ge => BlockEvolution::Dyad(CoherentDyad {
            weight: d.weight
                * (C64::new(-gamma * t, p.chi * t) + theta_fn(p.kappa, -p.chi, d.mu, d.nu, t))
                    .exp(),
            mu: d.mu * decay_g,
            nu: d.nu * decay_e,
        }),
        Block::Gg => {
            let homogeneous = CoherentDyad {
                weight: d.weight * theta_fn(p.kappa, 0.0, d.mu, d.nu, t).exp(),
                mu: d.mu * decay_g,
                nu: d.nu * decay_g,
            };
            let feeding = FeedingIntegral {
                scale: d.weight * 2.0 * gamma * theta_fn(p.kappa, 0.0, d.mu, d.nu, t).exp(),
                two_gamma: 2.0 * gamma,
                mu: d.mu,
                nu: d.nu,
                kappa: p.kappa,
                chi: p.chi,
                t,
            };
            BlockEvolution::WithFeeding { homogeneous, feeding }
        }
    }
}

/// Atom-A density matrix after emission for t1, the first Ramsey pulse, and
/// emission for t2 (all at gamma0).
pub fn prepare_atom_a(p: &DecoherenceParams, t1: f64, t2: f64) -> AtomOperator {
    let g = p.gamma0;
    let e2t2 = (-2.0 * g * t2).exp();
    let e1t2 = (-g * t2).exp();
    let coh = C64::new(0.0, -0.5) + C64::new(0.0, (-2.0 * g * t1).exp());
    AtomOperator([
        [C64::new(0.5 * e2t2, 0.0), coh * e1t2],
        [coh.conj() * e1t2, C64::new(1.0 - 0.5 * e2t2, 0.0)],
    ])
}

// --- probe-atom trace kernels -------------------------------------------

/// The four entries of the traced probe-atom operator for a field dyad
/// (mu, nu) interacting with the prepared probe atom for t3.
#[derive(Debug, Clone, Copy)]
pub struct MhoEntries {
    pub ee: C64,
    pub eg: C64,
    pub ge: C64,
    pub gg: C64,
}

fn mho_entries(
    mu: C64,
    nu: C64,
    p: &DecoherenceParams,
    tl: &Timeline,
) -> Result<MhoEntries, QuadError> {
    let g0 = p.gamma0;
    let gc = p.gammac;
    let chi = p.chi;
    let t3 = tl.t3;
    let k2 = (-2.0 * p.kappa * t3).exp();
    let sq = mu.norm_sqr() + nu.norm_sqr();
    let numu = nu.conj() * mu;

    // overlap exponents of the traced dyads; the cross term carries the
    // residual dispersive phase of the block
    let overlap = |rot: C64| (C64::new(-0.5 * sq, 0.0) + numu * rot) * k2;

    let prep_diag = 0.5 * (-2.0 * g0 * tl.t2).exp();
    let prep_coh = C64::new(0.0, -0.5) + C64::new(0.0, (-2.0 * g0 * tl.t1).exp());

    let ee = prep_diag
        * (C64::new(-2.0 * gc * t3, 0.0)
            + theta_fn(p.kappa, 0.0, mu, nu, t3)
            + overlap(C64::new(1.0, 0.0)))
        .exp();
    let eg = prep_coh
        * (C64::new(-g0 * tl.t2 - gc * t3, -chi * t3)
            + theta_fn(p.kappa, chi, mu, nu, t3)
            + overlap(C64::new(0.0, -2.0 * chi * t3).exp()))
        .exp();
    let ge = prep_coh.conj()
        * (C64::new(-g0 * tl.t2 - gc * t3, chi * t3)
            + theta_fn(p.kappa, -chi, mu, nu, t3)
            + overlap(C64::new(0.0, 2.0 * chi * t3).exp()))
        .exp();

    let homog = (1.0 - prep_diag)
        * (theta_fn(p.kappa, 0.0, mu, nu, t3) + overlap(C64::new(1.0, 0.0))).exp();
    let fed = if gc == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        let kappa = p.kappa;
        let integral = adaptive_gauss(
            |s| {
                let ks = (-2.0 * kappa * s).exp();
                let ov = (C64::new(-0.5 * sq, 0.0) + numu) * ks;
                (C64::new(-2.0 * g0 * tl.t2 - 2.0 * gc * s, 0.0)
                    + theta_fn(kappa, 0.0, mu, nu, s)
                    + ov)
                    .exp()
            },
            0.0,
            t3,
        )?;
        integral.value * gc
    };
    let gg = homog + fed;
    Ok(MhoEntries { ee, eg, ge, gg })
}

/// xi(mu, nu): probe-side readout weight combining populations and
/// coherences of the traced probe operator.
fn xi_b(mu: C64, nu: C64, p: &DecoherenceParams, tl: &Timeline) -> Result<C64, QuadError> {
    let m = mho_entries(mu, nu, p, tl)?;
    let pop_weight = (-2.0 * p.gamma0 * tl.t1).exp() - 1.0;
    let coh_weight = (-p.gamma0 * tl.t5 - 2.0 * p.gamma0 * tl.t1).exp();
    Ok((m.ee + m.gg) * pop_weight + (m.eg + m.ge) * coh_weight)
}

// --- full-sequence correlation -------------------------------------------

/// Correlation function of the full decohered sequence, precomputed for one
/// field setting beta so that the atom-A Ramsey phase can be swept cheaply.
#[derive(Debug, Clone, Copy)]
pub struct DecoheredCorrelation {
    offset: f64,
    z0: C64,
    xi12: C64,
    xi21: C64,
}

impl DecoheredCorrelation {
    pub fn new(
        alpha: C64,
        beta: C64,
        p: &DecoherenceParams,
        tl: &Timeline,
    ) -> Result<Self, DecoherenceError> {
        if tl.t5 < tl.t3 {
            return Err(DecoherenceError::InvalidParams(
                "t5 must cover the probe interaction window (t5 >= t3)",
            ));
        }
        let r = p.r();
        let ia = C64::new(0.0, 1.0) * alpha;
        let (t1, t2, t3, t4, t5) = (tl.t1, tl.t2, tl.t3, tl.t4, tl.t5);
        let (g0, gc, gp) = (p.gamma0, p.gammac, p.gammap);

        let lambda1 = ia * (-r * t3 - p.kappa * t4).exp() - beta;
        let lambda2 = ia * (-r.conj() * t3 - p.kappa * t4).exp() - beta;

        let xi11 = xi_b(lambda1, lambda1, p, tl)?;
        let xi12 = xi_b(lambda1, lambda2, p, tl)?;
        let xi21 = xi_b(lambda2, lambda1, p, tl)?;
        let xi22 = xi_b(lambda2, lambda2, p, tl)?;

        let pop1 = (-2.0 * g0 * t1).exp() - 1.0;
        let term1 = 0.5
            * (-2.0 * g0 * t2 - 2.0 * gc * t3 - 2.0 * gp * t4).exp()
            * pop1
            * (1.0 - (-2.0 * gp * t3).exp() + (-2.0 * gp * t5).exp())
            * xi11;

        let z0 = (C64::new(0.0, -0.5) + C64::new(0.0, (-2.0 * g0 * t1).exp()))
            * ((C64::new(-g0 * (t2 + 2.0 * t1) - gc * t3 - gp * (t4 + t5), -p.chi * t3))
                + theta_fn(p.kappa, p.chi, ia, ia, t3)
                + theta_fn(
                    p.kappa,
                    0.0,
                    ia * (-r * t3).exp(),
                    ia * (-r.conj() * t3).exp(),
                    t4,
                )
                + C64::new(
                    0.0,
                    -2.0 * (-p.kappa * (t4 + t3)).exp()
                        * (p.chi * t3).sin()
                        * (alpha.conj() * beta).im,
                ))
            .exp();

        let fed_cavity = if gc == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            let integral = adaptive_gauss(
                |s| {
                    let lam = ia * (-r * s - C64::new(p.kappa * t4, 0.0)).exp() - beta;
                    let w = (-2.0 * g0 * t2 - 2.0 * gc * s).exp();
                    w * xi_b(lam, lam, p, tl).unwrap_or(C64::new(f64::NAN, 0.0))
                },
                0.0,
                t3,
            )?;
            integral.value * gc
        };
        let fed_cylinder = if gp == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            let integral = adaptive_gauss(
                |s| {
                    let lam = ia * (-r * t3 - C64::new(p.kappa * s, 0.0)).exp() - beta;
                    let w = (-2.0 * g0 * t2 - 2.0 * gc * t3 - 2.0 * gp * s).exp();
                    w * xi_b(lam, lam, p, tl).unwrap_or(C64::new(f64::NAN, 0.0))
                },
                0.0,
                t4,
            )?;
            integral.value * gp
        };

        let gg_part =
            pop1 * ((1.0 - 0.5 * (-2.0 * g0 * t2).exp()) * xi22 + fed_cavity + fed_cylinder);

        let offset = term1 + gg_part;
        debug_assert!(
            offset.im.abs() < 1e-9 * (1.0 + offset.re.abs()),
            "imaginary residue {} in offset",
            offset.im
        );
        if !offset.re.is_finite() {
            return Err(DecoherenceError::InvalidParams("non-finite correlation offset"));
        }
        Ok(Self { offset: offset.re, z0, xi12, xi21 })
    }

    /// Correlation at atom-A Ramsey phase phi.
    pub fn eval(&self, phi: f64) -> f64 {
        let z = self.z0 * C64::new(0.0, phi).exp();
        let v = z * self.xi12 + z.conj() * self.xi21;
        self.offset + v.re
    }
}

/// Closed-form correlation of the decohered sequence at atom-A phase `phi`
/// and field displacement `beta`.
pub fn final_correlation(
    phi: f64,
    beta: C64,
    p: &DecoherenceParams,
    tl: &Timeline,
    alpha: C64,
) -> Result<f64, DecoherenceError> {
    Ok(DecoheredCorrelation::new(alpha, beta, p, tl)?.eval(phi))
}

/// Optimal displacement magnitude under dissipation: the root of
/// (a - b)/(a + b) = tan(4 a b) nearest zero with a = alpha
/// e^{-kappa (t3 + t4)}.
pub fn solve_beta_decoh(alpha_mag: f64, kappa: f64, t3: f64, t4: f64) -> f64 {
    crate::bellopt::solve_beta_parity(alpha_mag * (-kappa * (t3 + t4)).exp())
}

/// Bell value of the decohered sequence at the closed-form optimality
/// settings: Ramsey phases 0 and pi/2, displacements +-i |beta| with |beta|
/// from [`solve_beta_decoh`].
pub fn bell_at_optimal_settings(
    alpha_mag: f64,
    p: &DecoherenceParams,
    tl: &Timeline,
) -> Result<f64, DecoherenceError> {
    let alpha = C64::new(alpha_mag, 0.0);
    let b = solve_beta_decoh(alpha_mag, p.kappa, tl.t3, tl.t4);
    let plus = DecoheredCorrelation::new(alpha, C64::new(0.0, b), p, tl)?;
    let minus = DecoheredCorrelation::new(alpha, C64::new(0.0, -b), p, tl)?;
    let half_pi = std::f64::consts::FRAC_PI_2;
    Ok((plus.eval(0.0) + plus.eval(half_pi) + minus.eval(0.0) - minus.eval(half_pi)).abs())
}

// --- two-atom mixture ------------------------------------------------------

/// One atomic-A block of the traced two-atom state: a list of field dyad
/// arguments feeding the probe-atom kernel, plus feeding-integral
/// descriptors.
#[derive(Debug, Clone)]
pub struct MixtureBlock {
    pub dyads: Vec<CoherentDyad>,
    pub integrals: Vec<OmegaIntegral>,
}

/// Quadrature descriptor for a fed population term: weight
/// weight_scale e^{-decay_rate s} at field label label(s), with mu = nu.
#[derive(Debug, Clone, Copy)]
pub struct OmegaIntegral {
    pub upper: f64,
    pub weight_scale: C64,
    pub decay_rate: f64,
    pub kind: FeedKind,
}

/// Where the emission happened: inside the main cavity during the first
/// interaction (label spirals with r), or inside the cylinder while the
/// field only dissipates.
#[derive(Debug, Clone, Copy)]
pub enum FeedKind {
    MainCavity { label0: C64, r: C64, beta: C64 },
    Cylinder { label0: C64, kappa: f64, beta: C64 },
}

impl OmegaIntegral {
    pub fn sample(&self, s: f64) -> CoherentDyad {
        let label = match self.kind {
            FeedKind::MainCavity { label0, r, beta } => label0 * (-r * s).exp() - beta,
            FeedKind::Cylinder { label0, kappa, beta } => label0 * (-kappa * s).exp() - beta,
        };
        CoherentDyad {
            weight: self.weight_scale * (-self.decay_rate * s).exp(),
            mu: label,
            nu: label,
        }
    }
}

/// The two-atom state right before the final Ramsey pulses, organized by
/// atom-A dyad blocks; field labels are the arguments fed to the probe
/// kernel after the displacement by -beta.
#[derive(Debug, Clone)]
pub struct AtomFieldMixture {
    pub ee: MixtureBlock,
    pub eg: MixtureBlock,
    pub ge: MixtureBlock,
    pub gg: MixtureBlock,
}

/// Builds the staged-evolution mixture for state amplitude alpha and field
/// displacement beta.
pub fn pipeline_state(
    alpha: C64,
    beta: C64,
    p: &DecoherenceParams,
    tl: &Timeline,
) -> AtomFieldMixture {
    let r = p.r();
    let ia = C64::new(0.0, 1.0) * alpha;
    let (t1, t2, t3, t4) = (tl.t1, tl.t2, tl.t3, tl.t4);
    let (g0, gc, gp) = (p.gamma0, p.gammac, p.gammap);

    let lambda1 = ia * (-r * t3 - p.kappa * t4).exp() - beta;
    let lambda2 = ia * (-r.conj() * t3 - p.kappa * t4).exp() - beta;

    let prep_coh = C64::new(0.0, -0.5) + C64::new(0.0, (-2.0 * g0 * t1).exp());
    let disp_phase = C64::new(
        0.0,
        -2.0 * (-p.kappa * (t4 + t3)).exp() * (p.chi * t3).sin() * (alpha.conj() * beta).im,
    );

    let ee_weight = 0.5 * (-2.0 * g0 * t2 - 2.0 * gc * t3 - 2.0 * gp * (t4 + t3)).exp();
    let eg_weight = prep_coh
        * ((C64::new(-g0 * t2 - gc * t3 - gp * (t4 + t3), -p.chi * t3))
            + theta_fn(p.kappa, p.chi, ia, ia, t3)
            + theta_fn(p.kappa, 0.0, ia * (-r * t3).exp(), ia * (-r.conj() * t3).exp(), t4)
            + disp_phase)
            .exp();
    let ge_weight = prep_coh.conj()
        * ((C64::new(-g0 * t2 - gc * t3 - gp * (t4 + t3), p.chi * t3))
            + theta_fn(p.kappa, -p.chi, ia, ia, t3)
            + theta_fn(p.kappa, 0.0, ia * (-r.conj() * t3).exp(), ia * (-r * t3).exp(), t4)
            - disp_phase)
            .exp();

    let gg_main = C64::new(1.0 - 0.5 * (-2.0 * g0 * t2).exp(), 0.0);
    let gg_flip = 0.5
        * (-2.0 * g0 * t2 - 2.0 * gc * t3 - 2.0 * gp * t4).exp()
        * (1.0 - (-2.0 * gp * t3).exp());

    let fed_cavity = OmegaIntegral {
        upper: t3,
        weight_scale: C64::new(2.0 * gc * 0.5 * (-2.0 * g0 * t2).exp(), 0.0),
        decay_rate: 2.0 * gc,
        kind: FeedKind::MainCavity { label0: ia * (-p.kappa * t4).exp(), r, beta },
    };
    let fed_cylinder = OmegaIntegral {
        upper: t4,
        weight_scale: C64::new(2.0 * gp * 0.5 * (-2.0 * g0 * t2 - 2.0 * gc * t3).exp(), 0.0),
        decay_rate: 2.0 * gp,
        kind: FeedKind::Cylinder { label0: ia * (-r * t3).exp(), kappa: p.kappa, beta },
    };

    AtomFieldMixture {
        ee: MixtureBlock {
            dyads: vec![CoherentDyad::new(C64::new(ee_weight, 0.0), lambda1, lambda1)],
            integrals: vec![],
        },
        eg: MixtureBlock {
            dyads: vec![CoherentDyad::new(eg_weight, lambda1, lambda2)],
            integrals: vec![],
        },
        ge: MixtureBlock {
            dyads: vec![CoherentDyad::new(ge_weight, lambda2, lambda1)],
            integrals: vec![],
        },
        gg: MixtureBlock {
            dyads: vec![
                CoherentDyad::new(gg_main, lambda2, lambda2),
                CoherentDyad::new(C64::new(gg_flip, 0.0), lambda1, lambda1),
            ],
            integrals: vec![fed_cavity, fed_cylinder],
        },
    }
}

impl AtomFieldMixture {
    /// Total trace: diagonal atom-A blocks against the probe-population
    /// kernel. Equals 1 for any physical parameter set, up to quadrature
    /// accuracy.
    pub fn trace(&self, p: &DecoherenceParams, tl: &Timeline) -> Result<f64, DecoherenceError> {
        let mut acc = C64::new(0.0, 0.0);
        for block in [&self.ee, &self.gg] {
            for d in &block.dyads {
                let m = mho_entries(d.mu, d.nu, p, tl)?;
                acc += d.weight * (m.ee + m.gg);
            }
            for integral in &block.integrals {
                if integral.weight_scale.norm() == 0.0 {
                    continue;
                }
                let v = adaptive_gauss(
                    |s| {
                        let d = integral.sample(s);
                        match mho_entries(d.mu, d.nu, p, tl) {
                            Ok(m) => d.weight * (m.ee + m.gg),
                            Err(_) => C64::new(f64::NAN, 0.0),
                        }
                    },
                    0.0,
                    integral.upper,
                )?;
                acc += v.value;
            }
        }
        Ok(acc.re)
    }
}
