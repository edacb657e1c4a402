//! Reference quadrature and series engines.
//!
//! Deterministic panel-doubling Gauss–Legendre rules for complex integrands
//! in one and two dimensions, plus a tail-bounded series summer. These back
//! the derived test values, the calibration fits and the verification suite,
//! and deliberately never call the evaluators they are used to check.

use num_complex::Complex64;
use std::sync::OnceLock;
use thiserror::Error;

/// Nodes per panel. Fixed so that repeated runs use identical schedules.
const PANEL_NODES: usize = 16;

/// Hard cap on panel doublings before giving up.
const MAX_DOUBLINGS: usize = 20;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("requested tolerance {tol:.3e} below supported floor 1e-13")]
    ToleranceTooTight { tol: f64 },
    #[error("quadrature did not converge after {doublings} doublings; last estimate {value}, last difference {difference:.3e}, {evaluations} evaluations")]
    NonConvergence {
        doublings: usize,
        value: Complex64,
        difference: f64,
        evaluations: usize,
    },
    #[error("series still above tolerance after {max_terms} terms (last term magnitude {last:.3e}); divergence suspected")]
    DivergenceSuspected { max_terms: usize, last: f64 },
    #[error("invalid integration bounds [{a}, {b}]")]
    InvalidBounds { a: f64, b: f64 },
}

/// Outcome of an adaptive quadrature: value, the last inter-refinement
/// difference as the error estimate, and the number of integrand calls.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Gauss–Legendre nodes and weights on [-1, 1], computed once by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        // Newton iterations; the initial guess is already close.
        for _ in 0..64 {
            let (p, dp) = legendre_with_derivative(n, x);
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // Ascending order is more natural for panel assembly.
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    CACHE.get_or_init(|| gauss_legendre(PANEL_NODES))
}

/// Composite Gauss–Legendre rule: `panels` equal panels of 16 nodes over
/// [a, b], returned as flat (abscissa, weight) pairs in ascending order.
pub fn panel_rule(a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let (nodes, weights) = gl16();
    let width = (b - a) / panels as f64;
    let half = 0.5 * width;
    let mut xs = Vec::with_capacity(panels * PANEL_NODES);
    let mut ws = Vec::with_capacity(panels * PANEL_NODES);
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * width;
        for (x, w) in nodes.iter().zip(weights) {
            xs.push(mid + half * x);
            ws.push(half * w);
        }
    }
    (xs, ws)
}

/// Integrate a complex-valued function over [a, b], doubling the panel count
/// until successive estimates differ by less than `tol`.
pub fn integrate_1d<F>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> Complex64,
{
    if tol < 1e-13 {
        return Err(QuadratureError::ToleranceTooTight { tol });
    }
    if !a.is_finite() || !b.is_finite() || a >= b {
        return Err(QuadratureError::InvalidBounds { a, b });
    }
    let mut panels = 1usize;
    let mut evaluations = 0usize;
    let mut prev: Option<Complex64> = None;
    let mut last_diff = f64::INFINITY;
    for doubling in 0..=MAX_DOUBLINGS {
        let (xs, ws) = panel_rule(a, b, panels);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in xs.iter().zip(&ws) {
            acc += f(*x) * *w;
        }
        evaluations += xs.len();
        if let Some(p) = prev {
            last_diff = (acc - p).norm();
            if last_diff < tol {
                return Ok(QuadratureResult {
                    value: acc,
                    error_estimate: last_diff,
                    evaluations,
                });
            }
        }
        prev = Some(acc);
        if doubling == MAX_DOUBLINGS {
            return Err(QuadratureError::NonConvergence {
                doublings: doubling,
                value: acc,
                difference: last_diff,
                evaluations,
            });
        }
        panels *= 2;
    }
    unreachable!()
}

/// Axis-aligned rectangle for 2-D quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Rectangle {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rectangle {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self { x_min, x_max, y_min, y_max }
    }

    pub fn centered_square(half_width: f64) -> Self {
        Self::new(-half_width, half_width, -half_width, half_width)
    }
}

/// Tensor-product extension of [`integrate_1d`]: both axes share one panel
/// count which doubles until successive estimates differ by less than `tol`.
pub fn integrate_2d<F>(f: F, domain: Rectangle, tol: f64) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64, f64) -> Complex64,
{
    if tol < 1e-13 {
        return Err(QuadratureError::ToleranceTooTight { tol });
    }
    if domain.x_min >= domain.x_max || domain.y_min >= domain.y_max {
        return Err(QuadratureError::InvalidBounds {
            a: domain.x_min,
            b: domain.x_max,
        });
    }
    let mut panels = 1usize;
    let mut evaluations = 0usize;
    let mut prev: Option<Complex64> = None;
    let mut last_diff = f64::INFINITY;
    for doubling in 0..=MAX_DOUBLINGS {
        let (xs, wxs) = panel_rule(domain.x_min, domain.x_max, panels);
        let (ys, wys) = panel_rule(domain.y_min, domain.y_max, panels);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, wx) in xs.iter().zip(&wxs) {
            let mut row = Complex64::new(0.0, 0.0);
            for (y, wy) in ys.iter().zip(&wys) {
                row += f(*x, *y) * *wy;
            }
            acc += row * *wx;
        }
        evaluations += xs.len() * ys.len();
        if let Some(p) = prev {
            last_diff = (acc - p).norm();
            if last_diff < tol {
                return Ok(QuadratureResult {
                    value: acc,
                    error_estimate: last_diff,
                    evaluations,
                });
            }
        }
        prev = Some(acc);
        if doubling == MAX_DOUBLINGS || xs.len() > 1 << 14 {
            return Err(QuadratureError::NonConvergence {
                doublings: doubling,
                value: acc,
                difference: last_diff,
                evaluations,
            });
        }
        panels *= 2;
    }
    unreachable!()
}

/// Sum `term(0) + term(1) + ...` until five consecutive terms are each below
/// `tol` in magnitude.
pub fn series_sum<F>(term: F, tol: f64, max_terms: usize) -> Result<Complex64, QuadratureError>
where
    F: Fn(usize) -> Complex64,
{
    let mut acc = Complex64::new(0.0, 0.0);
    let mut small_run = 0usize;
    let mut last = f64::INFINITY;
    for k in 0..max_terms {
        let t = term(k);
        acc += t;
        last = t.norm();
        if last < tol {
            small_run += 1;
            if small_run == 5 {
                return Ok(acc);
            }
        } else {
            small_run = 0;
        }
    }
    Err(QuadratureError::DivergenceSuspected { max_terms, last })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_integral() {
        let r = integrate_1d(|x| Complex64::new((-x * x).exp(), 0.0), -8.0, 8.0, 1e-12).unwrap();
        assert!((r.value.re - PI.sqrt()).abs() < 1e-10);
        assert!(r.value.im.abs() < 1e-14);
    }

    #[test]
    fn complex_exponential() {
        let r = integrate_1d(|x| Complex64::new(0.0, x).exp(), 0.0, PI, 1e-13).unwrap();
        assert!((r.value - Complex64::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn hermite_function_normalization() {
        let r = integrate_1d(
            |x| {
                let v = crate::special::hermite_function(2, x).unwrap();
                Complex64::new(v * v, 0.0)
            },
            -10.0,
            10.0,
            1e-11,
        )
        .unwrap();
        assert!((r.value.re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_2d() {
        let r = integrate_2d(
            |x, y| Complex64::new((-(x * x + y * y)).exp(), 0.0),
            Rectangle::centered_square(8.0),
            1e-10,
        )
        .unwrap();
        assert!((r.value.re - PI).abs() < 1e-9);
    }

    #[test]
    fn unit_square() {
        let r = integrate_2d(
            |_, _| Complex64::new(1.0, 0.0),
            Rectangle::new(0.0, 1.0, 0.0, 1.0),
            1e-13,
        )
        .unwrap();
        assert!((r.value.re - 1.0).abs() < 1e-14);
        assert!(r.value.im.abs() < 1e-14);
    }

    #[test]
    fn error_estimate_bounds_true_error() {
        let r = integrate_1d(|x| Complex64::new((-x * x).exp(), 0.0), -8.0, 8.0, 1e-10).unwrap();
        let truth = PI.sqrt();
        assert!((r.value.re - truth).abs() <= r.error_estimate.max(1e-15));
    }

    #[test]
    fn deterministic_repeat() {
        let run = || {
            integrate_1d(|x| Complex64::new((x.sin() * (-x * x / 4.0).exp()).cos(), 0.0), -3.0, 5.0, 1e-11)
                .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.value, b.value);
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn geometric_series() {
        let s = series_sum(|k| Complex64::new(0.5f64.powi(k as i32), 0.0), 1e-12, 200).unwrap();
        assert!((s.re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_series() {
        let s = series_sum(
            |k| {
                let mut t = Complex64::new(1.0, 0.0);
                for j in 1..=k {
                    t *= 0.3 / j as f64;
                }
                t
            },
            1e-14,
            200,
        )
        .unwrap();
        assert!((s.re - 0.3f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn series_divergence_flagged() {
        let err = series_sum(|_| Complex64::new(1.0, 0.0), 1e-12, 50);
        assert!(matches!(err, Err(QuadratureError::DivergenceSuspected { .. })));
    }

    #[test]
    fn tolerance_floor_enforced() {
        let err = integrate_1d(|_| Complex64::new(1.0, 0.0), 0.0, 1.0, 1e-14);
        assert!(matches!(err, Err(QuadratureError::ToleranceTooTight { .. })));
    }
}
