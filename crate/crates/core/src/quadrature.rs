//! Double-exponential (exp-sinh) quadrature on the half line.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// Result of a converged integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadEstimate {
    pub value: Complex64,
    /// Difference between the last two refinement levels.
    pub error: f64,
    pub evaluations: usize,
}

/// Integration failure carrying the best estimate reached.
#[derive(Debug, Clone, Copy)]
pub struct QuadFailure {
    pub best: QuadEstimate,
}

const TAU_MIN: f64 = -6.6;
const TAU_MAX: f64 = 6.6;

/// Integrates `f` over `[0, inf)` with the substitution `y = scale * exp(pi/2 sinh tau)`.
///
/// The step is halved until two successive levels agree to `tol` relative to the
/// result (or absolutely when the result is below `abs_floor`).
pub fn exp_sinh<F>(
    f: F,
    scale: f64,
    tol: f64,
    abs_floor: f64,
    max_level: u32,
) -> Result<QuadEstimate, QuadFailure>
where
    F: Fn(f64) -> Complex64,
{
    let mut evaluations = 0usize;
    let mut node = |tau: f64| -> Option<Complex64> {
        let sh = tau.sinh();
        let y = scale * (FRAC_PI_2 * sh).exp();
        if !(y > 0.0) || !y.is_finite() {
            return None;
        }
        evaluations += 1;
        let w = FRAC_PI_2 * tau.cosh() * y;
        let v = f(y) * w;
        if v.re.is_finite() && v.im.is_finite() {
            Some(v)
        } else {
            None
        }
    };

    // level 0: integer nodes, walking outwards from tau = 0 in both directions
    let mut sum = Complex64::new(0.0, 0.0);
    let h0 = 1.0;
    let mut k = 0i64;
    loop {
        let tau = k as f64 * h0;
        if tau > TAU_MAX {
            break;
        }
        if let Some(v) = node(tau) {
            sum += v;
        }
        k += 1;
    }
    k = -1;
    loop {
        let tau = k as f64 * h0;
        if tau < TAU_MIN {
            break;
        }
        if let Some(v) = node(tau) {
            sum += v;
        }
        k -= 1;
    }
    let mut estimate = sum * h0;
    let mut error = f64::INFINITY;
    let mut h = h0;

    for level in 1..=max_level {
        h *= 0.5;
        // new nodes are the odd multiples of h
        let mut fresh = Complex64::new(0.0, 0.0);
        let n_max = (TAU_MAX / h).floor() as i64;
        let mut j = 1i64;
        while j <= n_max {
            let tau = j as f64 * h;
            let mut add = Complex64::new(0.0, 0.0);
            if let Some(v) = node(tau) {
                add += v;
            }
            if let Some(v) = node(-tau) {
                add += v;
            }
            fresh += add;
            j += 2;
        }
        sum += fresh;
        let next = sum * h;
        error = (next - estimate).norm();
        estimate = next;
        let target = (tol * estimate.norm()).max(abs_floor);
        if level >= 3 && error <= target {
            return Ok(QuadEstimate {
                value: estimate,
                error,
                evaluations,
            });
        }
    }
    Err(QuadFailure {
        best: QuadEstimate {
            value: estimate,
            error,
            evaluations,
        },
    })
}
