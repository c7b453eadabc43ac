//! Timing and separation constraints that close the locality loophole: the
//! light-cone inequalities of the measurement sequence, the minimal cylinder
//! transit times, and the cutoff diameter of the emission-inhibiting
//! waveguide.

use thiserror::Error;

use crate::decoherence::Timeline;

pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

#[derive(Debug, Error)]
pub enum LocalityError {
    #[error("invalid inputs: {0}")]
    InvalidInputs(&'static str),
    #[error("no feasible transit times: {0}")]
    Infeasible(&'static str),
}

/// Timeline plus signal speed for the light-cone constraints.
#[derive(Debug, Clone, Copy)]
pub struct LocalityInputs {
    pub tl: Timeline,
    pub c: f64,
}

impl LocalityInputs {
    pub fn new(tl: Timeline) -> Result<Self, LocalityError> {
        let s = Self { tl, c: SPEED_OF_LIGHT };
        if tl.v <= 0.0 || tl.v >= s.c {
            return Err(LocalityError::InvalidInputs("need 0 < v < c"));
        }
        Ok(s)
    }
}

/// Minimal transit times and the implied separation.
#[derive(Debug, Clone, Copy)]
pub struct LocalitySolution {
    pub t4: f64,
    pub t5: f64,
    /// Separation l = v (t4 + t5) in meters.
    pub l: f64,
    /// Slack of the two light-cone inequalities at the solution, in meters.
    pub residuals: [f64; 2],
}

/// Single-location form of the locality conditions: with the field
/// measurement preceding the atomic one by T, both
/// d >= c (T + t_A) and d >= c (t_C - T) must hold.
pub fn check_locality_simple(d: f64, t_lead: f64, t_atom: f64, t_field: f64, c: f64) -> bool {
    d >= c * (t_lead + t_atom) && d >= c * (t_field - t_lead)
}

/// The two spatially-resolved light-cone constraints in meters (>= 0 when
/// satisfied). With `include_t6` false, the detector dwell time is dropped
/// from both constraints.
fn constraints(tl: &Timeline, c: f64, t4: f64, t5: f64, include_t6: bool) -> [f64; 2] {
    let t6 = if include_t6 { tl.t6 } else { 0.0 };
    let f1 = tl.v * (0.5 * tl.t3 + t4 + t5 + tl.t1 + t6) - c * (t5 + tl.t1 + t6);
    let a = 0.5 * tl.t3 + tl.t2 + tl.t1 + t6;
    let x = 0.5 * tl.t3 + t4 + t5;
    let f2 = tl.v * (a * a + x * x).sqrt() - c * (tl.t3 + tl.t2 + tl.t1 + t6 - t5);
    [f1, f2]
}

/// t4 making the first constraint tight at given t5.
fn t4_on_first_boundary(tl: &Timeline, c: f64, t5: f64, include_t6: bool) -> f64 {
    let t6 = if include_t6 { tl.t6 } else { 0.0 };
    (c / tl.v) * (t5 + tl.t1 + t6) - 0.5 * tl.t3 - t5 - tl.t1 - t6
}

/// Minimal (t4, t5) for which both light-cone inequalities hold, found by
/// solving the two equalities simultaneously: damped Newton on the pair,
/// falling back to elimination of t4 plus bisection in t5.
pub fn min_travel_times(
    inputs: &LocalityInputs,
    include_t6: bool,
) -> Result<LocalitySolution, LocalityError> {
    let tl = &inputs.tl;
    let c = inputs.c;
    let t6 = if include_t6 { tl.t6 } else { 0.0 };
    let t_field = tl.t3 + tl.t2 + tl.t1 + t6;

    // Newton iteration on F(t4, t5) = constraints
    let mut t5 = 0.5 * (t_field - tl.t1 - t6);
    let mut t4 = t4_on_first_boundary(tl, c, t5, include_t6);
    let mut newton_ok = false;
    for _ in 0..200 {
        let f = constraints(tl, c, t4, t5, include_t6);
        // residuals in meters; 1e-9 m pins t5 to well below picoseconds
        if f[0].abs() < 1e-9 && f[1].abs() < 1e-9 {
            newton_ok = true;
            break;
        }
        let h4 = 1e-6 * (1.0 + t4.abs());
        let h5 = 1e-9 * (1.0 + t5.abs());
        let f4 = constraints(tl, c, t4 + h4, t5, include_t6);
        let f5 = constraints(tl, c, t4, t5 + h5, include_t6);
        let j = [
            [(f4[0] - f[0]) / h4, (f5[0] - f[0]) / h5],
            [(f4[1] - f[1]) / h4, (f5[1] - f[1]) / h5],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-30 {
            break;
        }
        let d4 = (f[0] * j[1][1] - f[1] * j[0][1]) / det;
        let d5 = (f[1] * j[0][0] - f[0] * j[1][0]) / det;
        // damping keeps t5 inside its physical bracket
        let mut scale: f64 = 1.0;
        while scale > 1e-6 && (t5 - scale * d5 <= 0.0 || t5 - scale * d5 >= t_field) {
            scale *= 0.5;
        }
        t4 -= scale * d4;
        t5 -= scale * d5;
    }

    if !newton_ok {
        // eliminate t4 through the first equality, bisect the second in t5
        let g = |t5: f64| {
            let t4 = t4_on_first_boundary(tl, c, t5, include_t6);
            constraints(tl, c, t4, t5, include_t6)[1]
        };
        let (mut lo, mut hi) = (1e-12, t_field - 1e-12);
        let (glo, ghi) = (g(lo), g(hi));
        if glo.signum() == ghi.signum() {
            return Err(LocalityError::Infeasible("no bracket for the second constraint"));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (g(mid) >= 0.0) == (ghi >= 0.0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        t5 = 0.5 * (lo + hi);
        t4 = t4_on_first_boundary(tl, c, t5, include_t6);
    }

    if t4 <= 0.0 || t5 <= 0.0 {
        return Err(LocalityError::Infeasible("negative transit time at the boundary"));
    }
    // land on the feasible side: both constraints grow with t4
    for _ in 0..4 {
        let f = constraints(tl, c, t4, t5, include_t6);
        let worst = f[0].min(f[1]);
        if worst >= 0.0 {
            break;
        }
        t4 += 2.0 * (-worst) / tl.v;
    }
    let residuals = constraints(tl, c, t4, t5, include_t6);
    Ok(LocalitySolution {
        t4,
        t5,
        l: separation_distance(tl.v, t4, t5),
        residuals,
    })
}

/// l = v (t4 + t5).
pub fn separation_distance(v: f64, t4: f64, t5: f64) -> f64 {
    v * (t4 + t5)
}

/// Largest cylinder diameter that still inhibits spontaneous emission at
/// transition frequency omega0 (rad/s): twice the cutoff radius
/// 1.8412 c / omega0 of the lowest transverse mode.
pub fn max_waveguide_diameter(omega0: f64, c: f64) -> f64 {
    assert!(omega0 > 0.0);
    2.0 * 1.8412 * c / omega0
}
