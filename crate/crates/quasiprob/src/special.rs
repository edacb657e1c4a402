//! Hermite and associated Laguerre machinery.
//!
//! Physicists' convention throughout: `H_{n+1} = 2x H_n - 2n H_{n-1}` with
//! generating function `e^{-t^2 + 2tx} = sum_k H_k(x) t^k / k!`. The
//! oscillator eigenfunctions `psi_n(x) = e^{-x^2/2} H_n(x) / sqrt(2^n sqrt(pi) n!)`
//! are evaluated by a normalized recurrence so no factorial ever
//! materializes. Stated envelopes (`n <= 200`, `|x| <= 10`) keep every
//! intermediate finite in binary64.

use num_complex::Complex64;
use thiserror::Error;

use crate::integrate::{self, QuadratureError};

/// Largest polynomial order inside the stability envelope.
pub const MAX_ORDER: usize = 200;
/// Largest |x| inside the stability envelope for `hermite`/`hermite_function`.
pub const MAX_ARG: f64 = 10.0;
/// Envelope for the quadrature route: order cap.
pub const MAX_INTEGRAL_ORDER: usize = 30;
/// Envelope for the quadrature route: |x| cap.
pub const MAX_INTEGRAL_ARG: f64 = 5.0;
/// Half-width of the fixed quadrature domain for the integral form; the
/// Gaussian weight is below 1e-35 at the edges.
const INTEGRAL_HALF_WIDTH: f64 = 9.0;

#[derive(Debug, Error)]
pub enum SpecialFnError {
    #[error("order n={n} outside stability envelope (n <= {max})")]
    OrderOutOfRange { n: usize, max: usize },
    #[error("argument {x} outside stability envelope (|x| <= {max})")]
    ArgOutOfRange { x: f64, max: f64 },
    #[error("laguerre superscript k={k} below -n for n={n}")]
    SuperscriptOutOfRange { n: usize, k: i64 },
    #[error("quadrature left imaginary residue {residue:.3e} above {limit:.3e}")]
    ImaginaryResidue { residue: f64, limit: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Physicists' Hermite polynomial `H_n(x)` by the three-term recurrence.
pub fn hermite(n: usize, x: f64) -> Result<f64, SpecialFnError> {
    if n > MAX_ORDER {
        return Err(SpecialFnError::OrderOutOfRange { n, max: MAX_ORDER });
    }
    if x.abs() > MAX_ARG {
        return Err(SpecialFnError::ArgOutOfRange { x, max: MAX_ARG });
    }
    let mut h0 = 1.0;
    if n == 0 {
        return Ok(h0);
    }
    let mut h1 = 2.0 * x;
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    Ok(h1)
}

/// `H_n(x)` through the integral form
/// `(2^n / sqrt(pi)) * int (x + it)^n e^{-t^2} dt`,
/// evaluated by the reference quadrature over `t in [-9, 9]`. The imaginary
/// residue must cancel below 1e-10 or the quadrature is reported as failed.
pub fn hermite_integral(n: usize, x: f64) -> Result<f64, SpecialFnError> {
    if n > MAX_INTEGRAL_ORDER {
        return Err(SpecialFnError::OrderOutOfRange { n, max: MAX_INTEGRAL_ORDER });
    }
    if x.abs() > MAX_INTEGRAL_ARG {
        return Err(SpecialFnError::ArgOutOfRange { x, max: MAX_INTEGRAL_ARG });
    }
    // The integrand peaks at |x + it|^n e^{-t^2} evaluated at t^2 =
    // max(0, n/2 - x^2); heavy cancellation among oscillating samples of
    // that size puts the reachable accuracy at ~1e-15 of the peak, so the
    // convergence target scales with it.
    let t_sq = (0.5 * n as f64 - x * x).max(0.0);
    let peak = (x * x + t_sq).powf(0.5 * n as f64) * (-t_sq).exp();
    let tol = (2e-13 * peak).max(1e-12);
    let r = integrate::integrate_1d(
        |t| Complex64::new(x, t).powu(n as u32) * (-t * t).exp(),
        -INTEGRAL_HALF_WIDTH,
        INTEGRAL_HALF_WIDTH,
        tol,
    )?;
    let scale = 2f64.powi(n as i32) / std::f64::consts::PI.sqrt();
    let value = r.value * scale;
    // The imaginary part is odd in t and cancels pairwise on the symmetric
    // rule; what is left is rounding noise proportional to the integrand
    // peak. The 1e-10 floor applies in the small-order regime.
    let limit = (1e-15 * peak * scale).max(1e-10);
    let residue = value.im.abs();
    if residue > limit {
        return Err(SpecialFnError::ImaginaryResidue { residue, limit });
    }
    Ok(value.re)
}

/// Harmonic-oscillator eigenfunction `psi_n(x)`, by the normalized recurrence
/// `psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}`.
pub fn hermite_function(n: usize, x: f64) -> Result<f64, SpecialFnError> {
    if n > MAX_ORDER {
        return Err(SpecialFnError::OrderOutOfRange { n, max: MAX_ORDER });
    }
    if x.abs() > MAX_ARG {
        return Err(SpecialFnError::ArgOutOfRange { x, max: MAX_ARG });
    }
    Ok(hermite_function_seq(x, n + 1)[n])
}

/// All of `psi_0(x) .. psi_{count-1}(x)` in one recurrence pass. Callers that
/// assemble wavefunctions from Fock amplitudes use this to stay O(count).
pub fn hermite_function_seq(x: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let psi0 = (-0.5 * x * x).exp() / std::f64::consts::PI.powf(0.25);
    out.push(psi0);
    if count == 1 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * psi0);
    for n in 1..count - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Partial sum `sum_{k=0}^{K} H_k(x) t^k / k!` of the generating function;
/// converges to `e^{-t^2 + 2tx}` as K grows.
pub fn generating_partial(t: f64, x: f64, kmax: usize) -> Result<f64, SpecialFnError> {
    if kmax > MAX_ORDER {
        return Err(SpecialFnError::OrderOutOfRange { n: kmax, max: MAX_ORDER });
    }
    if t.abs() > 1.0 {
        return Err(SpecialFnError::ArgOutOfRange { x: t, max: 1.0 });
    }
    if x.abs() > 5.0 {
        return Err(SpecialFnError::ArgOutOfRange { x, max: 5.0 });
    }
    // Track H_k by recurrence and t^k/k! by a running ratio; the ratio may
    // underflow harmlessly once the tail is far below any tolerance in use.
    let mut sum = 0.0;
    let mut h0 = 1.0;
    let mut h1 = 2.0 * x;
    let mut ratio = 1.0; // t^k / k!
    for k in 0..=kmax {
        let h = match k {
            0 => 1.0,
            1 => h1,
            _ => {
                let h2 = 2.0 * x * h1 - 2.0 * (k as f64 - 1.0) * h0;
                h0 = h1;
                h1 = h2;
                h2
            }
        };
        sum += h * ratio;
        ratio *= t / (k as f64 + 1.0);
    }
    Ok(sum)
}

/// Associated Laguerre polynomial `L_n^{(k)}(x)` by the stable three-term
/// recurrence in n. Negative superscripts down to `k = -n` are mapped through
/// `L_n^{(-m)}(x) = ((n-m)!/n!) (-x)^m L_{n-m}^{(m)}(x)`.
pub fn laguerre(n: usize, k: i64, x: f64) -> Result<f64, SpecialFnError> {
    if n > MAX_ORDER {
        return Err(SpecialFnError::OrderOutOfRange { n, max: MAX_ORDER });
    }
    if k < -(n as i64) {
        return Err(SpecialFnError::SuperscriptOutOfRange { n, k });
    }
    if x < 0.0 {
        return Err(SpecialFnError::ArgOutOfRange { x, max: 0.0 });
    }
    if k < 0 {
        let m = (-k) as usize;
        let mut factor = 1.0;
        for j in 0..m {
            factor /= (n - j) as f64;
        }
        return Ok(factor * (-x).powi(m as i32) * laguerre_nonneg(n - m, m, x));
    }
    Ok(laguerre_nonneg(n, k as usize, x))
}

fn laguerre_nonneg(n: usize, k: usize, x: f64) -> f64 {
    let kf = k as f64;
    let mut l0 = 1.0;
    if n == 0 {
        return l0;
    }
    let mut l1 = 1.0 + kf - x;
    for m in 1..n {
        let mf = m as f64;
        let l2 = ((2.0 * mf + 1.0 + kf - x) * l1 - (mf + kf) * l0) / (mf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}
