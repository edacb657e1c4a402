//! Analytic Glauber–Sudarshan P representations.
//!
//! Only states whose P is a regular function or a delta train are supported:
//! delta atoms (coherent states), an isotropic Gaussian
//! `P(alpha) = (1/pi nbar) e^{-|alpha - mean|^2 / nbar}` (displaced thermal),
//! and normalized weighted delta sums. The forward map
//! `rho = int P(alpha) |alpha><alpha| d^2 alpha` is evaluated analytically;
//! P is never reconstructed from rho.
//!
//! The Kirkwood–Rihaczek function follows from P through
//! `K(q,p) = c_P (e^{-(q^2+p^2)/2 - iqp}/sqrt2)
//!            int d^2 a P(a) e^{(a*^2 - a^2)/2 - |a|^2} e^{sqrt2 (q a + i p a*)}`,
//! with the single constant `c_P` fitted on the vacuum delta; delta atoms
//! sift through the integral with no quadrature at all.

use num_complex::Complex64;
use thiserror::Error;

use crate::dist::{cached_calibration, DistError};
use crate::fock::{displacement, make_state, DensityOperator, FockError, PhasePoint, StateSpec};
use crate::grid::{DistributionGrid, GridError, GridMetadata, GridSpec};
use crate::integrate::panel_rule;

#[derive(Debug, Error)]
pub enum PrepError {
    #[error("invalid P representation: {0}")]
    InvalidRepresentation(String),
    #[error("quadrature domain insufficient: {0}")]
    Domain(String),
    #[error("truncation inadequate: {0}")]
    Truncation(String),
    #[error("malformed serialized P representation: {0}")]
    Serialization(String),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// One weighted coherent atom of a delta-sum P.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PAtom {
    pub weight: Complex64,
    pub alpha: Complex64,
}

/// A regular P representation.
#[derive(Debug, Clone, PartialEq)]
pub enum PRepresentation {
    Delta { alpha: Complex64 },
    Gaussian { mean: Complex64, nbar: f64 },
    DeltaSum { atoms: Vec<PAtom> },
}

impl PRepresentation {
    pub fn delta(alpha: Complex64) -> Self {
        Self::Delta { alpha }
    }

    pub fn gaussian(mean: Complex64, nbar: f64) -> Result<Self, PrepError> {
        if !(nbar > 0.0) || !nbar.is_finite() {
            return Err(PrepError::InvalidRepresentation(format!(
                "gaussian P needs nbar > 0, got {nbar}"
            )));
        }
        Ok(Self::Gaussian { mean, nbar })
    }

    pub fn delta_sum(atoms: Vec<PAtom>) -> Result<Self, PrepError> {
        let total: Complex64 = atoms.iter().map(|a| a.weight).sum();
        if (total - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(PrepError::InvalidRepresentation(format!(
                "delta-sum weights must sum to 1 within 1e-12, got {total}"
            )));
        }
        Ok(Self::DeltaSum { atoms })
    }

    /// The regular P representation of a named state, when one exists.
    /// Cat states (and other non-classical pure states) have none.
    pub fn for_state(spec: &StateSpec) -> Option<Self> {
        match spec {
            StateSpec::Fock(0) => Some(Self::Delta { alpha: Complex64::new(0.0, 0.0) }),
            StateSpec::Coherent(a) => Some(Self::Delta { alpha: *a }),
            StateSpec::Thermal(nbar) if *nbar > 0.0 => {
                Some(Self::Gaussian { mean: Complex64::new(0.0, 0.0), nbar: *nbar })
            }
            _ => None,
        }
    }

    /// JSON mirror of the variant fields.
    pub fn to_json(&self) -> String {
        fn c(z: Complex64) -> String {
            format!("[{:.16e}, {:.16e}]", z.re, z.im)
        }
        match self {
            Self::Delta { alpha } => format!("{{\"variant\": \"delta\", \"alpha\": {}}}", c(*alpha)),
            Self::Gaussian { mean, nbar } => format!(
                "{{\"variant\": \"gaussian\", \"mean\": {}, \"nbar\": {:.16e}}}",
                c(*mean),
                nbar
            ),
            Self::DeltaSum { atoms } => {
                let body: Vec<String> = atoms
                    .iter()
                    .map(|a| format!("{{\"weight\": {}, \"alpha\": {}}}", c(a.weight), c(a.alpha)))
                    .collect();
                format!("{{\"variant\": \"delta-sum\", \"atoms\": [{}]}}", body.join(", "))
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self, PrepError> {
        #[derive(serde::Deserialize)]
        struct AtomDto {
            weight: [f64; 2],
            alpha: [f64; 2],
        }
        #[derive(serde::Deserialize)]
        struct Dto {
            variant: String,
            alpha: Option<[f64; 2]>,
            mean: Option<[f64; 2]>,
            nbar: Option<f64>,
            atoms: Option<Vec<AtomDto>>,
        }
        let dto: Dto = serde_json::from_str(text).map_err(|e| PrepError::Serialization(e.to_string()))?;
        match dto.variant.as_str() {
            "delta" => {
                let a = dto.alpha.ok_or_else(|| PrepError::Serialization("delta needs alpha".into()))?;
                Ok(Self::Delta { alpha: Complex64::new(a[0], a[1]) })
            }
            "gaussian" => {
                let m = dto.mean.ok_or_else(|| PrepError::Serialization("gaussian needs mean".into()))?;
                let nbar = dto.nbar.ok_or_else(|| PrepError::Serialization("gaussian needs nbar".into()))?;
                Self::gaussian(Complex64::new(m[0], m[1]), nbar)
            }
            "delta-sum" => {
                let atoms = dto.atoms.ok_or_else(|| PrepError::Serialization("delta-sum needs atoms".into()))?;
                Self::delta_sum(
                    atoms
                        .into_iter()
                        .map(|a| PAtom {
                            weight: Complex64::new(a.weight[0], a.weight[1]),
                            alpha: Complex64::new(a.alpha[0], a.alpha[1]),
                        })
                        .collect(),
                )
            }
            other => Err(PrepError::Serialization(format!("unknown variant {other:?}"))),
        }
    }
}

/// `rho = int P(alpha) |alpha><alpha| d^2 alpha`, evaluated analytically:
/// deltas sift to coherent projectors, the Gaussian integrates to the
/// (displaced) thermal Fock matrix.
pub fn density_from_p(p: &PRepresentation, dim: usize) -> Result<DensityOperator, PrepError> {
    match p {
        PRepresentation::Delta { alpha } => Ok(make_state(&StateSpec::Coherent(*alpha), dim)?),
        PRepresentation::Gaussian { mean, nbar } => {
            if !(*nbar > 0.0) {
                return Err(PrepError::InvalidRepresentation(format!("nbar must be positive, got {nbar}")));
            }
            let thermal = make_state(&StateSpec::Thermal(*nbar), dim)?;
            if mean.norm() == 0.0 {
                return Ok(thermal);
            }
            let d = displacement(*mean, dim)?;
            let m = d.matrix() * thermal.matrix() * d.matrix().adjoint();
            DensityOperator::new(m).map_err(|e| match e {
                FockError::TraceRange { trace } => PrepError::Truncation(format!(
                    "displaced thermal state lost mass to the truncation (trace {trace}); increase dim"
                )),
                other => PrepError::Fock(other),
            })
        }
        PRepresentation::DeltaSum { atoms } => {
            let mut m = nalgebra::DMatrix::<Complex64>::zeros(dim, dim);
            for atom in atoms {
                let rho_k = make_state(&StateSpec::Coherent(atom.alpha), dim)?;
                m += rho_k.matrix() * atom.weight;
            }
            DensityOperator::new(m).map_err(PrepError::Fock)
        }
    }
}

/// Integrand factor of the P-to-K transform at phase-space point (q, p):
/// `e^{(a*^2 - a^2)/2 - |a|^2 + sqrt2 (q a + i p a*)}`.
fn transform_factor(alpha: Complex64, q: f64, p: f64) -> Complex64 {
    let s2 = std::f64::consts::SQRT_2;
    let exponent = (alpha.conj() * alpha.conj() - alpha * alpha) * 0.5
        - alpha.norm_sqr()
        + (alpha * q + alpha.conj() * Complex64::new(0.0, p)) * s2;
    exponent.exp()
}

fn prefactor(q: f64, p: f64) -> Complex64 {
    Complex64::new(-0.5 * (q * q + p * p), -q * p).exp() / std::f64::consts::SQRT_2
}

/// Uncalibrated P-route value. Delta variants sift; the Gaussian variant is
/// integrated on a panel-doubled Gauss–Legendre tensor over mean ± 8 sqrt(nbar).
pub fn kr_from_p_raw(p_rep: &PRepresentation, pt: PhasePoint) -> Result<Complex64, PrepError> {
    let (q, p) = (pt.q(), pt.p());
    let pre = prefactor(q, p);
    match p_rep {
        PRepresentation::Delta { alpha } => Ok(pre * transform_factor(*alpha, q, p)),
        PRepresentation::DeltaSum { atoms } => {
            let sum: Complex64 = atoms.iter().map(|a| a.weight * transform_factor(a.alpha, q, p)).sum();
            Ok(pre * sum)
        }
        PRepresentation::Gaussian { mean, nbar } => {
            let integral = gaussian_transform(*mean, *nbar, &[(q, p)])?[0];
            Ok(pre * integral)
        }
    }
}

/// Shared Gaussian-variant quadrature for one or many output points. The
/// sample tensor (P times the point-independent Gaussian factor) is built
/// once; each output point applies separable exponential kernels.
fn gaussian_transform(mean: Complex64, nbar: f64, points: &[(f64, f64)]) -> Result<Vec<Complex64>, PrepError> {
    let s2 = std::f64::consts::SQRT_2;
    let extent = 8.0 * nbar.sqrt();
    let (x0, x1) = (mean.re - extent, mean.re + extent);
    let (y0, y1) = (mean.im - extent, mean.im + extent);
    let max_out = points
        .iter()
        .map(|&(q, p)| q.abs().max(p.abs()))
        .fold(0.0, f64::max);
    // The output kernel grows like e^{sqrt2 max_out |alpha|}; the Gaussian
    // must have died off by the boundary despite that growth.
    let norm = 1.0 / (std::f64::consts::PI * nbar);
    let boundary = (-extent * extent / nbar + s2 * max_out * extent).exp() * norm;
    if boundary > 1e-12 {
        return Err(PrepError::Domain(format!(
            "gaussian P tail {boundary:.3e} at the quadrature boundary for outputs up to {max_out}; \
             the mean ± 8 sqrt(nbar) window is insufficient"
        )));
    }
    let mut panels = (2.0 * extent).ceil().max(4.0) as usize;
    let mut prev: Option<Vec<Complex64>> = None;
    for _ in 0..4 {
        let (xs, wx) = panel_rule(x0, x1, panels);
        let (ys, wy) = panel_rule(y0, y1, panels);
        // h(alpha) = P(alpha) e^{(a*^2-a^2)/2 - |a|^2}, point-independent.
        let h: Vec<Complex64> = xs
            .iter()
            .flat_map(|&x| {
                ys.iter().map(move |&y| {
                    let alpha = Complex64::new(x, y);
                    let d = alpha - mean;
                    let pval = norm * (-d.norm_sqr() / nbar).exp();
                    Complex64::new(-(x * x + y * y), -2.0 * x * y).exp() * pval
                })
            })
            .collect();
        let ny = ys.len();
        let out: Vec<Complex64> = points
            .iter()
            .map(|&(q, p)| {
                // e^{sqrt2 (q a + i p a*)} = e^{sqrt2 x (q + ip)} e^{sqrt2 y (p + iq)}
                let ax: Vec<Complex64> = xs
                    .iter()
                    .zip(&wx)
                    .map(|(&x, &w)| (Complex64::new(q, p) * (s2 * x)).exp() * w)
                    .collect();
                let ay: Vec<Complex64> = ys
                    .iter()
                    .zip(&wy)
                    .map(|(&y, &w)| (Complex64::new(p, q) * (s2 * y)).exp() * w)
                    .collect();
                let mut acc = Complex64::new(0.0, 0.0);
                for (ix, kx) in ax.iter().enumerate() {
                    let mut row = Complex64::new(0.0, 0.0);
                    let base = ix * ny;
                    for (iy, ky) in ay.iter().enumerate() {
                        row += h[base + iy] * ky;
                    }
                    acc += row * kx;
                }
                acc
            })
            .collect();
        if let Some(p0) = prev {
            let worst = out.iter().zip(&p0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if worst < 1e-9 {
                return Ok(out);
            }
        }
        prev = Some(out);
        panels *= 2;
    }
    Err(PrepError::Domain("gaussian P quadrature did not stabilize under panel doubling".into()))
}

/// Calibrated Kirkwood–Rihaczek value from a P representation.
pub fn kr_from_p(p_rep: &PRepresentation, pt: PhasePoint) -> Result<Complex64, PrepError> {
    let cal = cached_calibration("kr-p")?;
    Ok(kr_from_p_raw(p_rep, pt)? * cal.constant)
}

/// Grid variant of [`kr_from_p`].
pub fn kr_from_p_grid(p_rep: &PRepresentation, spec: GridSpec) -> Result<DistributionGrid, PrepError> {
    let cal = cached_calibration("kr-p")?;
    let qs = spec.q.values();
    let ps = spec.p.values();
    let values: Vec<Complex64> = match p_rep {
        PRepresentation::Gaussian { mean, nbar } => {
            let pts: Vec<(f64, f64)> = qs
                .iter()
                .flat_map(|&q| ps.iter().map(move |&p| (q, p)))
                .collect();
            let integrals = gaussian_transform(*mean, *nbar, &pts)?;
            pts.iter()
                .zip(integrals)
                .map(|(&(q, p), i)| prefactor(q, p) * i * cal.constant)
                .collect()
        }
        _ => {
            let mut v = Vec::with_capacity(qs.len() * ps.len());
            for &q in &qs {
                for &p in &ps {
                    v.push(kr_from_p_raw(p_rep, PhasePoint::from_qp(q, p))? * cal.constant);
                }
            }
            v
        }
    };
    Ok(DistributionGrid::new(
        spec,
        values,
        GridMetadata {
            state: String::new(),
            route: "kr-p".into(),
            dim: 0,
            calibration: Some(cal.constant),
            timestamp: None,
        },
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::kr_direct;
    use std::f64::consts::PI;

    fn pt(q: f64, p: f64) -> PhasePoint {
        PhasePoint::from_qp(q, p)
    }

    #[test]
    fn delta_zero_sifts_to_vacuum_projector() {
        let rho = density_from_p(&PRepresentation::delta(Complex64::new(0.0, 0.0)), 16).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-14);
        for n in 1..16 {
            assert!(rho.matrix()[(n, n)].norm() < 1e-20);
        }
    }

    #[test]
    fn gaussian_reconstructs_thermal() {
        let rho = density_from_p(
            &PRepresentation::gaussian(Complex64::new(0.0, 0.0), 1.0).unwrap(),
            64,
        )
        .unwrap();
        // Geometric law from the Fock-space factory is the oracle.
        assert!((rho.matrix()[(0, 0)].re - 0.5).abs() < 1e-10);
        let oracle = make_state(&StateSpec::Thermal(1.0), 64).unwrap();
        let mut worst = 0.0f64;
        for i in 0..64 {
            for j in 0..64 {
                worst = worst.max((rho.matrix()[(i, j)] - oracle.matrix()[(i, j)]).norm());
            }
        }
        assert!(worst < 1e-12);
    }

    #[test]
    fn delta_sum_is_classical_mixture() {
        let alpha = Complex64::new(0.9, 0.2);
        let p = PRepresentation::delta_sum(vec![
            PAtom { weight: Complex64::new(0.5, 0.0), alpha },
            PAtom { weight: Complex64::new(0.5, 0.0), alpha: -alpha },
        ])
        .unwrap();
        let rho = density_from_p(&p, 48).unwrap();
        let plus = make_state(&StateSpec::Coherent(alpha), 48).unwrap();
        let minus = make_state(&StateSpec::Coherent(-alpha), 48).unwrap();
        let mut worst = 0.0f64;
        for i in 0..48 {
            for j in 0..48 {
                let mix = (plus.matrix()[(i, j)] + minus.matrix()[(i, j)]) * 0.5;
                worst = worst.max((rho.matrix()[(i, j)] - mix).norm());
            }
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn invalid_representations_rejected() {
        assert!(PRepresentation::gaussian(Complex64::new(0.0, 0.0), 0.0).is_err());
        assert!(PRepresentation::gaussian(Complex64::new(0.0, 0.0), -0.5).is_err());
        assert!(PRepresentation::delta_sum(vec![PAtom {
            weight: Complex64::new(0.7, 0.0),
            alpha: Complex64::new(1.0, 0.0)
        }])
        .is_err());
    }

    #[test]
    fn delta_raw_value_at_origin() {
        // Sifting at alpha = 0: integrand 1, prefactor e^0/sqrt2.
        let raw = kr_from_p_raw(&PRepresentation::delta(Complex64::new(0.0, 0.0)), pt(0.0, 0.0)).unwrap();
        assert!((raw - Complex64::new(1.0 / 2f64.sqrt(), 0.0)).norm() < 1e-15, "{raw}");
    }

    #[test]
    fn delta_calibrated_matches_direct_on_grid() {
        let p = PRepresentation::delta(Complex64::new(0.0, 0.0));
        let rho = make_state(&StateSpec::Fock(0), 64).unwrap();
        let spec = GridSpec::square(-3.0, 3.0, 13).unwrap();
        let grid = kr_from_p_grid(&p, spec).unwrap();
        let reference = crate::dist::kr_direct_grid(&rho, spec).unwrap();
        let worst = grid.max_abs_diff(&reference);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn gaussian_calibrated_matches_direct_thermal() {
        let p = PRepresentation::gaussian(Complex64::new(0.0, 0.0), 0.5).unwrap();
        let rho = make_state(&StateSpec::Thermal(0.5), 64).unwrap();
        let k = kr_from_p(&p, pt(0.8, -0.3)).unwrap();
        let reference = kr_direct(&rho, pt(0.8, -0.3)).unwrap();
        assert!((k - reference).norm() < 1e-6, "{k} vs {reference}");
    }

    #[test]
    fn calibration_constant_variant_independent() {
        let on_delta = crate::dist::calibrate("kr-p", &StateSpec::Fock(0), 64).unwrap();
        let on_gaussian = crate::dist::calibrate("kr-p", &StateSpec::Thermal(0.5), 64).unwrap();
        let on_displaced = crate::dist::calibrate("kr-p", &StateSpec::Coherent(Complex64::new(1.0, 0.0)), 64).unwrap();
        for cal in [&on_gaussian, &on_displaced] {
            let rel = (cal.constant - on_delta.constant).norm() / on_delta.constant.norm();
            assert!(rel < 1e-6, "{}: spread {rel}", cal.reference);
        }
        // The fit lands on 1/pi.
        assert!((on_delta.constant.re - 1.0 / PI).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let reps = [
            PRepresentation::delta(Complex64::new(0.3, -0.4)),
            PRepresentation::gaussian(Complex64::new(0.1, 0.0), 0.7).unwrap(),
            PRepresentation::delta_sum(vec![
                PAtom { weight: Complex64::new(0.25, 0.0), alpha: Complex64::new(1.0, 0.0) },
                PAtom { weight: Complex64::new(0.75, 0.0), alpha: Complex64::new(-0.5, 0.2) },
            ])
            .unwrap(),
        ];
        for r in &reps {
            let back = PRepresentation::from_json(&r.to_json()).unwrap();
            assert_eq!(*r, back);
        }
    }
}
