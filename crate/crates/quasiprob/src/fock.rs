//! Truncated Fock-space linear algebra.
//!
//! States and operators of a single bosonic mode live in the span of
//! `|0> .. |N-1>`. Everything here is a dense complex matrix or vector;
//! constructors validate their type invariants (normalization tails,
//! Hermiticity, positivity) at build time. All values are immutable after
//! construction and safe to share across threads.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::fmt;
use thiserror::Error;

use crate::special::hermite_function_seq;

/// Default tail-mass tolerance enforced by state constructors.
pub const EPS_TAIL: f64 = 1e-10;
/// Default admissible |X| for position eigenstates.
pub const POSITION_RANGE: f64 = 8.0;
/// Entrywise Hermiticity tolerance for density operators.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Lower bound on the smallest eigenvalue of a valid density operator.
pub const PSD_TOL: f64 = -1e-10;
/// Fraction of trailing components whose relative weight flags a position
/// eigenstate as under-resolved by the truncation.
const POSITION_TAIL_FRACTION_LIMIT: f64 = 0.2;

pub type C64 = Complex64;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("dimension {dim} below minimum {min}")]
    InvalidDimension { dim: usize, min: usize },
    #[error("invalid state specification: {0}")]
    InvalidSpec(String),
    #[error("truncation inadequate: {detail}{}", min_dim.map(|d| format!("; minimal adequate dim is {d}")).unwrap_or_default())]
    Truncation { detail: String, min_dim: Option<usize> },
    #[error("non-finite entries in operator input")]
    NonFinite,
    #[error("position argument {x} outside configured range |X| <= {max}")]
    PositionRange { x: f64, max: f64 },
    #[error("matrix not Hermitian: max entrywise deviation {max_dev:.3e}")]
    NotHermitian { max_dev: f64 },
    #[error("trace {trace} outside [1 - {eps:.1e}, 1 + 1e-12]", eps = EPS_TAIL)]
    TraceRange { trace: f64 },
    #[error("matrix not positive semidefinite: smallest eigenvalue {min_eig:.3e}")]
    NotPositive { min_eig: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("malformed serialized operator: {0}")]
    Serialization(String),
}

/// A complex amplitude column over the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedVector {
    dim: usize,
    amps: DVector<C64>,
}

impl TruncatedVector {
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, FockError> {
        if amps.is_empty() {
            return Err(FockError::InvalidDimension { dim: 0, min: 1 });
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(FockError::NonFinite);
        }
        Ok(Self { dim: amps.len(), amps: DVector::from_vec(amps) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitude(&self, n: usize) -> C64 {
        self.amps[n]
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// 1 - sum |c_n|^2; the mass the truncation failed to capture for a
    /// normalized construction.
    pub fn tail_mass(&self) -> f64 {
        (1.0 - self.norm_sqr()).max(0.0)
    }
}

/// A general N x N complex matrix over the Fock basis: ladder operators,
/// parity, displacements and exponentials thereof. May be non-unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    dim: usize,
    matrix: DMatrix<C64>,
    underflow: bool,
}

impl FockOperator {
    pub fn from_matrix(matrix: DMatrix<C64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "operator must be square");
        Self { dim: matrix.nrows(), matrix, underflow: false }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Set when a constructor detected that a scale factor underflowed
    /// binary64 (e.g. `e^{-|beta|^2/2}` for extreme displacements).
    pub fn underflow(&self) -> bool {
        self.underflow
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix(self.matrix.adjoint())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, FockError> {
        if self.dim != other.dim {
            return Err(FockError::DimensionMismatch { left: self.dim, right: other.dim });
        }
        Ok(Self::from_matrix(&self.matrix * &other.matrix))
    }

    pub fn apply(&self, v: &TruncatedVector) -> Result<TruncatedVector, FockError> {
        if self.dim != v.dim {
            return Err(FockError::DimensionMismatch { left: self.dim, right: v.dim });
        }
        Ok(TruncatedVector { dim: self.dim, amps: &self.matrix * &v.amps })
    }
}

/// A density operator: Hermitian, unit trace within the truncation tail,
/// positive semidefinite. The spectral decomposition is computed once at
/// construction (it both backs the positivity check and feeds the
/// wavefunction-based evaluators).
#[derive(Debug, Clone)]
pub struct DensityOperator {
    dim: usize,
    matrix: DMatrix<C64>,
    eigvals: Vec<f64>,
    eigvecs: DMatrix<C64>,
}

impl DensityOperator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self, FockError> {
        let dim = matrix.nrows();
        if dim == 0 || matrix.ncols() != dim {
            return Err(FockError::InvalidDimension { dim, min: 1 });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(FockError::NonFinite);
        }
        let mut max_dev = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                let dev = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                max_dev = max_dev.max(dev);
            }
        }
        if max_dev > HERMITICITY_TOL {
            return Err(FockError::NotHermitian { max_dev });
        }
        let tr: C64 = (0..dim).map(|i| matrix[(i, i)]).sum();
        if tr.im.abs() > 1e-12 || tr.re < 1.0 - EPS_TAIL || tr.re > 1.0 + 1e-12 {
            return Err(FockError::TraceRange { trace: tr.re });
        }
        let eig = nalgebra::SymmetricEigen::new(matrix.clone());
        let eigvals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let min_eig = eigvals.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < PSD_TOL {
            return Err(FockError::NotPositive { min_eig });
        }
        Ok(Self { dim, matrix, eigvals, eigvecs: eig.eigenvectors })
    }

    pub fn from_pure(v: &TruncatedVector) -> Result<Self, FockError> {
        let tail = v.tail_mass();
        if tail > EPS_TAIL {
            return Err(FockError::Truncation {
                detail: format!("pure-state tail mass {tail:.3e} above {EPS_TAIL:.1e}"),
                min_dim: None,
            });
        }
        let m = &v.amps * v.amps.adjoint();
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.matrix[(i, i)].re).sum()
    }

    /// Spectral pairs with |eigenvalue| above `cutoff`, largest first.
    pub fn eigenpairs(&self, cutoff: f64) -> Vec<(f64, DVector<C64>)> {
        let mut pairs: Vec<(f64, DVector<C64>)> = self
            .eigvals
            .iter()
            .enumerate()
            .filter(|(_, l)| l.abs() > cutoff)
            .map(|(k, l)| (*l, self.eigvecs.column(k).into_owned()))
            .collect();
        pairs.sort_by(|a, b| b.0.abs().partial_cmp(&a.0.abs()).unwrap());
        pairs
    }

    /// Zero-padded embedding into a larger space; used by convergence checks
    /// that re-evaluate non-unitary sandwiches at doubled truncation.
    pub fn embedded_matrix(&self, dim: usize) -> DMatrix<C64> {
        assert!(dim >= self.dim);
        let mut m = DMatrix::zeros(dim, dim);
        m.view_mut((0, 0), (self.dim, self.dim)).copy_from(&self.matrix);
        m
    }

    /// Serialize as `{"dim": N, "matrix": [[[re,im],...],...]}` with numbers
    /// printed to 17 significant digits so binary64 values survive a
    /// round-trip bit-identically.
    pub fn to_json(&self) -> String {
        let mut s = String::with_capacity(self.dim * self.dim * 48);
        s.push_str("{\"dim\": ");
        s.push_str(&self.dim.to_string());
        s.push_str(", \"matrix\": [");
        for i in 0..self.dim {
            if i > 0 {
                s.push_str(", ");
            }
            s.push('[');
            for j in 0..self.dim {
                if j > 0 {
                    s.push_str(", ");
                }
                let z = self.matrix[(i, j)];
                s.push_str(&format!("[{:.16e}, {:.16e}]", z.re, z.im));
            }
            s.push(']');
        }
        s.push_str("]}");
        s
    }

    pub fn from_json(text: &str) -> Result<Self, FockError> {
        #[derive(serde::Deserialize)]
        struct Dto {
            dim: usize,
            matrix: Vec<Vec<[f64; 2]>>,
        }
        let dto: Dto = serde_json::from_str(text)
            .map_err(|e| FockError::Serialization(e.to_string()))?;
        if dto.matrix.len() != dto.dim || dto.matrix.iter().any(|r| r.len() != dto.dim) {
            return Err(FockError::Serialization(format!(
                "matrix shape does not match dim {}",
                dto.dim
            )));
        }
        let m = DMatrix::from_fn(dto.dim, dto.dim, |i, j| {
            C64::new(dto.matrix[i][j][0], dto.matrix[i][j][1])
        });
        Self::new(m)
    }
}

/// A phase-space point. `q` and `p` are stored; the complex label
/// `beta = (q + ip)/sqrt(2)` is always derived so the two representations
/// can never disagree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    q: f64,
    p: f64,
}

impl PhasePoint {
    pub fn from_qp(q: f64, p: f64) -> Self {
        Self { q, p }
    }

    pub fn from_beta(beta: C64) -> Self {
        Self { q: std::f64::consts::SQRT_2 * beta.re, p: std::f64::consts::SQRT_2 * beta.im }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn beta(&self) -> C64 {
        C64::new(self.q / std::f64::consts::SQRT_2, self.p / std::f64::consts::SQRT_2)
    }
}

/// Test-state family understood by [`make_state`].
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Fock(usize),
    Coherent(C64),
    Thermal(f64),
    Squeezed { r: f64, phi: f64 },
    Cat { alpha: C64, phase: f64 },
}

fn fmt_real(x: f64) -> String {
    // Shortest round-trip form keeps canonical spec strings readable.
    format!("{x}")
}

fn fmt_complex(z: C64) -> String {
    if z.im == 0.0 {
        fmt_real(z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", fmt_real(z.re), fmt_real(-z.im))
    } else {
        format!("{}+{}i", fmt_real(z.re), fmt_real(z.im))
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Fock(0) => write!(f, "vacuum"),
            StateSpec::Fock(n) => write!(f, "fock:{n}"),
            StateSpec::Coherent(a) => write!(f, "coherent:{}", fmt_complex(*a)),
            StateSpec::Thermal(nbar) => write!(f, "thermal:{}", fmt_real(*nbar)),
            StateSpec::Squeezed { r, phi } => write!(f, "squeezed:{},{}", fmt_real(*r), fmt_real(*phi)),
            StateSpec::Cat { alpha, phase } => write!(f, "cat:{},{}", fmt_complex(*alpha), fmt_real(*phase)),
        }
    }
}

/// Lowering and raising operators: `<n|a|n+1> = sqrt(n+1)`.
pub fn ladder(dim: usize) -> Result<(FockOperator, FockOperator), FockError> {
    if dim < 2 {
        return Err(FockError::InvalidDimension { dim, min: 2 });
    }
    let mut lower = DMatrix::zeros(dim, dim);
    for n in 0..dim - 1 {
        lower[(n, n + 1)] = C64::new(((n + 1) as f64).sqrt(), 0.0);
    }
    let raise = lower.adjoint();
    Ok((FockOperator::from_matrix(lower), FockOperator::from_matrix(raise)))
}

/// Parity `(-1)^{a^dagger a}`: diagonal entries `(-1)^n`.
pub fn parity(dim: usize) -> Result<FockOperator, FockError> {
    if dim < 1 {
        return Err(FockError::InvalidDimension { dim, min: 1 });
    }
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            C64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(FockOperator::from_matrix(m))
}

/// Glauber displacement operator `D(beta) = e^{beta a^dagger - beta* a}` by
/// its closed-form matrix elements
/// `<m|D|n> = sqrt(n!/m!) beta^{m-n} e^{-|beta|^2/2} L_n^{(m-n)}(|beta|^2)`
/// for `m >= n` (mirror with `-beta*` below the diagonal is transposed).
/// Numerically stable near the truncation edge, unlike truncated Taylor
/// products of the factorized form, which serve as the test oracle.
pub fn displacement(beta: C64, dim: usize) -> Result<FockOperator, FockError> {
    if dim < 2 {
        return Err(FockError::InvalidDimension { dim, min: 2 });
    }
    if !beta.re.is_finite() || !beta.im.is_finite() {
        return Err(FockError::NonFinite);
    }
    let x = beta.norm_sqr();
    let gauss = (-0.5 * x).exp();
    let underflow = gauss == 0.0 && x > 0.0;
    let mut m = DMatrix::zeros(dim, dim);
    for d in 0..dim {
        // sqrt(n!/(n+d)!) running prefactor, seeded with 1/sqrt(d!).
        let mut pref = 1.0f64;
        for j in 1..=d {
            pref /= (j as f64).sqrt();
        }
        let below = beta.powu(d as u32);
        let above = (-beta.conj()).powu(d as u32);
        // L_n^{(d)}(x) recurrence over n.
        let mut l_prev = 0.0f64;
        let mut l = 1.0f64;
        for n in 0..dim - d {
            let amp = gauss * pref * l;
            m[(n + d, n)] = below * amp;
            if d > 0 {
                m[(n, n + d)] = above * amp;
            }
            pref *= ((n + 1) as f64 / (n + 1 + d) as f64).sqrt();
            let l_next = (((2 * n + 1 + d) as f64 - x) * l - (n + d) as f64 * l_prev)
                / (n + 1) as f64;
            l_prev = l;
            l = l_next;
        }
    }
    Ok(FockOperator { dim, matrix: m, underflow })
}

/// Matrix exponential by scaling-and-squaring with a Taylor core. The scale
/// keeps the 1-norm of the scaled matrix at or below 1/4, the series is cut
/// at relative 1e-16, and the result is squared back; accurate to about
/// 1e-13 in operator max-norm on the sizes used here.
pub fn expm(op: &FockOperator) -> Result<FockOperator, FockError> {
    let a = &op.matrix;
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(FockError::NonFinite);
    }
    let n = op.dim;
    let norm = one_norm(a);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil().max(0.0) as u32 } else { 0 };
    let scale = C64::new(0.5f64.powi(squarings as i32), 0.0);
    let b = a * scale;
    let mut sum: DMatrix<C64> = DMatrix::identity(n, n);
    let mut term: DMatrix<C64> = DMatrix::identity(n, n);
    for k in 1..=120u32 {
        term = &term * &b / C64::new(k as f64, 0.0);
        sum += &term;
        if one_norm(&term) <= 1e-16 * one_norm(&sum).max(1.0) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(FockOperator::from_matrix(sum))
}

fn one_norm(m: &DMatrix<C64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// How a position eigenstate is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositionRoute {
    /// Components `c_n = psi_n(X)`; the canonical route.
    Hermite,
    /// `(e^{-X^2/2}/pi^{1/4}) e^{-a^dag^2/2 + sqrt(2) X a^dag} |0>`; exists
    /// to validate the operator-applied-to-vacuum form. The exponential is
    /// triangular, so components below the truncation edge are exact.
    DisplacedVacuum,
}

/// Truncated position eigenstate `|X>`.
pub fn position_eigenstate(x: f64, dim: usize, route: PositionRoute) -> Result<TruncatedVector, FockError> {
    if dim < 2 {
        return Err(FockError::InvalidDimension { dim, min: 2 });
    }
    if x.abs() > POSITION_RANGE {
        return Err(FockError::PositionRange { x, max: POSITION_RANGE });
    }
    let amps: Vec<C64> = match route {
        PositionRoute::Hermite => hermite_function_seq(x, dim)
            .into_iter()
            .map(|v| C64::new(v, 0.0))
            .collect(),
        PositionRoute::DisplacedVacuum => {
            let (_, raise) = ladder(dim)?;
            let r = raise.matrix();
            let gen = r * r * C64::new(-0.5, 0.0) + r * C64::new(std::f64::consts::SQRT_2 * x, 0.0);
            let e = expm(&FockOperator::from_matrix(gen))?;
            let scale = (-0.5 * x * x).exp() / std::f64::consts::PI.powf(0.25);
            (0..dim).map(|n| e.matrix()[(n, 0)] * scale).collect()
        }
    };
    let v = TruncatedVector::from_amplitudes(amps)?;
    // Position eigenstates are not normalizable; what the truncation must
    // provide is that the trailing components carry negligible relative
    // weight. The last 10% of components act as the tail window.
    let total = v.norm_sqr();
    let start = ((0.9 * dim as f64).ceil() as usize).min(dim - 1);
    let tail: f64 = (start..dim).map(|n| v.amps[n].norm_sqr()).sum();
    if total > 0.0 && tail / total > POSITION_TAIL_FRACTION_LIMIT {
        return Err(FockError::Truncation {
            detail: format!(
                "position eigenstate X={x}: trailing 10% of components hold {:.2}% of the weight",
                100.0 * tail / total
            ),
            min_dim: None,
        });
    }
    Ok(v)
}

/// Coherent-state amplitude vector `c_n = e^{-|alpha|^2/2} alpha^n / sqrt(n!)`.
pub fn coherent_vector(alpha: C64, dim: usize) -> TruncatedVector {
    let mut amps = Vec::with_capacity(dim);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        amps.push(c);
        c *= alpha / ((n + 1) as f64).sqrt();
    }
    TruncatedVector { dim, amps: DVector::from_vec(amps) }
}

fn coherent_tail(alpha: C64, dim: usize) -> (f64, Option<usize>) {
    // Walk the amplitude recursion out to find the captured mass and the
    // smallest dim that would meet EPS_TAIL.
    let mut c = (-0.5 * alpha.norm_sqr()).exp();
    let mut cum = 0.0;
    let mut tail_at_dim = 1.0;
    let mut min_dim = None;
    for n in 0..8192usize {
        cum += c * c;
        if n + 1 == dim {
            tail_at_dim = (1.0 - cum).max(0.0);
        }
        if min_dim.is_none() && 1.0 - cum <= EPS_TAIL {
            min_dim = Some(n + 1);
            if n + 1 >= dim {
                break;
            }
        }
        c *= alpha.norm() / ((n + 1) as f64).sqrt();
    }
    (tail_at_dim, min_dim)
}

fn squeezed_amps(r: f64, phi: f64, count: usize) -> Vec<C64> {
    // Squeezed vacuum: only even components,
    // c_{2k} = sqrt(sech r) (-e^{i phi} tanh r)^k sqrt((2k)!)/(2^k k!).
    let mut amps = vec![C64::new(0.0, 0.0); count];
    let mut g = C64::new(1.0 / r.cosh().sqrt(), 0.0);
    let z = -C64::new(0.0, phi).exp() * r.tanh();
    let mut k = 0usize;
    while 2 * k < count {
        amps[2 * k] = g;
        let kf = k as f64;
        g *= z * ((2.0 * kf + 1.0) * (2.0 * kf + 2.0)).sqrt() / (2.0 * (kf + 1.0));
        k += 1;
    }
    amps
}

/// Normalized density operator for one of the named test states. Pure specs
/// become rank-1 projectors from the amplitude vector; thermal states are
/// diagonal by the geometric law.
pub fn make_state(spec: &StateSpec, dim: usize) -> Result<DensityOperator, FockError> {
    if dim < 2 {
        return Err(FockError::InvalidDimension { dim, min: 2 });
    }
    match spec {
        StateSpec::Fock(n) => {
            if *n >= dim {
                return Err(FockError::InvalidSpec(format!(
                    "fock({n}) does not fit in dim {dim}; need dim >= {}",
                    n + 1
                )));
            }
            let mut m = DMatrix::zeros(dim, dim);
            m[(*n, *n)] = C64::new(1.0, 0.0);
            DensityOperator::new(m)
        }
        StateSpec::Coherent(alpha) => {
            let (tail, min_dim) = coherent_tail(*alpha, dim);
            if tail > EPS_TAIL {
                return Err(FockError::Truncation {
                    detail: format!("coherent({}) tail mass {tail:.3e} at dim {dim}", fmt_complex(*alpha)),
                    min_dim,
                });
            }
            DensityOperator::from_pure(&coherent_vector(*alpha, dim))
        }
        StateSpec::Thermal(nbar) => {
            if *nbar < 0.0 || !nbar.is_finite() {
                return Err(FockError::InvalidSpec(format!("thermal mean occupation must satisfy nbar >= 0, got {nbar}")));
            }
            let ratio = nbar / (1.0 + nbar);
            let tail = ratio.powi(dim as i32);
            if tail > EPS_TAIL {
                let min_dim = (EPS_TAIL.ln() / ratio.ln()).ceil() as usize;
                return Err(FockError::Truncation {
                    detail: format!("thermal({nbar}) tail mass {tail:.3e} at dim {dim}"),
                    min_dim: Some(min_dim),
                });
            }
            let mut m = DMatrix::zeros(dim, dim);
            let mut p = 1.0 / (1.0 + nbar);
            for n in 0..dim {
                m[(n, n)] = C64::new(p, 0.0);
                p *= ratio;
            }
            DensityOperator::new(m)
        }
        StateSpec::Squeezed { r, phi } => {
            if !r.is_finite() || !phi.is_finite() {
                return Err(FockError::InvalidSpec("squeezed parameters must be finite".into()));
            }
            let probe = squeezed_amps(*r, *phi, 4 * dim + 64);
            let total: f64 = probe.iter().map(|c| c.norm_sqr()).sum();
            let cum: f64 = probe.iter().take(dim).map(|c| c.norm_sqr()).sum();
            let tail = (total - cum).max(0.0) + (1.0 - total).max(0.0);
            if tail > EPS_TAIL {
                let mut cum2 = 0.0;
                let mut min_dim = None;
                for (n, c) in probe.iter().enumerate() {
                    cum2 += c.norm_sqr();
                    if 1.0 - cum2 <= EPS_TAIL {
                        min_dim = Some(n + 1);
                        break;
                    }
                }
                return Err(FockError::Truncation {
                    detail: format!("squeezed({r},{phi}) tail mass {tail:.3e} at dim {dim}"),
                    min_dim,
                });
            }
            DensityOperator::from_pure(&TruncatedVector::from_amplitudes(
                probe.into_iter().take(dim).collect(),
            )?)
        }
        StateSpec::Cat { alpha, phase } => {
            let plus = coherent_vector(*alpha, dim);
            let minus = coherent_vector(-*alpha, dim);
            let ph = C64::new(0.0, *phase).exp();
            let raw: Vec<C64> = (0..dim).map(|n| plus.amps[n] + ph * minus.amps[n]).collect();
            let norm_sqr: f64 = raw.iter().map(|c| c.norm_sqr()).sum();
            // Exact normalization of the untruncated superposition.
            let overlap = (-2.0 * alpha.norm_sqr()).exp();
            let exact = 2.0 * (1.0 + (ph * overlap).re);
            let tail = ((exact - norm_sqr) / exact).max(0.0);
            if tail > EPS_TAIL {
                let (_, min_dim) = coherent_tail(*alpha, dim);
                return Err(FockError::Truncation {
                    detail: format!("cat({},{}) tail mass {tail:.3e} at dim {dim}", fmt_complex(*alpha), phase),
                    min_dim,
                });
            }
            let scale = C64::new(1.0 / norm_sqr.sqrt(), 0.0);
            DensityOperator::from_pure(&TruncatedVector::from_amplitudes(
                raw.into_iter().map(|c| c * scale).collect(),
            )?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn ladder_smallest() {
        let (lower, raise) = ladder(2).unwrap();
        assert_eq!(lower.matrix()[(0, 1)], c(1.0, 0.0));
        assert_eq!(lower.matrix()[(0, 0)], c(0.0, 0.0));
        assert_eq!(lower.matrix()[(1, 0)], c(0.0, 0.0));
        assert_eq!(lower.matrix()[(1, 1)], c(0.0, 0.0));
        assert_eq!(raise.matrix(), &lower.matrix().adjoint());
        assert!(matches!(ladder(1), Err(FockError::InvalidDimension { .. })));
    }

    #[test]
    fn ladder_entries_and_number_operator() {
        let (lower, raise) = ladder(8).unwrap();
        assert_eq!(lower.matrix()[(3, 4)], c(2.0, 0.0));
        let num = raise.mul(&lower).unwrap();
        // Exact up to the rounding of sqrt(n)*sqrt(n).
        for i in 0..8 {
            for j in 0..8 {
                let expect = if i == j { c(i as f64, 0.0) } else { c(0.0, 0.0) };
                assert!((num.matrix()[(i, j)] - expect).norm() <= 4.0 * f64::EPSILON * (i as f64).max(1.0));
            }
        }
    }

    #[test]
    fn parity_diag_and_involution() {
        let p = parity(4).unwrap();
        for (i, sign) in [1.0, -1.0, 1.0, -1.0].iter().enumerate() {
            assert_eq!(p.matrix()[(i, i)], c(*sign, 0.0));
        }
        let sq = p.mul(&p).unwrap();
        assert_eq!(sq.matrix(), &DMatrix::<C64>::identity(4, 4));
    }

    #[test]
    fn parity_between_mirrored_position_eigenstates() {
        // <(-X)|P|X> equals the squared norm of |X>; oracle is the Hermite
        // symmetry psi_n(-X) = (-1)^n psi_n(X) summed directly.
        let dim = 64;
        let x = 0.7;
        let left = position_eigenstate(-x, dim, PositionRoute::Hermite).unwrap();
        let right = position_eigenstate(x, dim, PositionRoute::Hermite).unwrap();
        let p = parity(dim).unwrap();
        let pr = p.apply(&right).unwrap();
        let bracket: C64 = (0..dim).map(|n| left.amplitude(n).conj() * pr.amplitude(n)).sum();
        let oracle: f64 = (0..dim).map(|n| right.amplitude(n).norm_sqr()).sum();
        assert_abs_diff_eq!(bracket.re, oracle, epsilon = 1e-8);
        assert!(bracket.im.abs() < 1e-12);
    }

    #[test]
    fn displacement_zero_is_identity() {
        let d = displacement(c(0.0, 0.0), 6).unwrap();
        assert_eq!(d.matrix(), &DMatrix::<C64>::identity(6, 6));
        assert!(!d.underflow());
    }

    /// Oracle: the factorized product
    /// `e^{-|b|^2/2} expm(b a^dag) expm(-b* a)` built from truncated Taylor
    /// exponentials.
    fn displacement_factorized(beta: C64, dim: usize) -> FockOperator {
        let (lower, raise) = ladder(dim).unwrap();
        let up = expm(&FockOperator::from_matrix(raise.matrix() * beta)).unwrap();
        let down = expm(&FockOperator::from_matrix(lower.matrix() * -beta.conj())).unwrap();
        let mut prod = up.mul(&down).unwrap();
        let scale = c((-0.5 * beta.norm_sqr()).exp(), 0.0);
        prod = FockOperator::from_matrix(prod.matrix() * scale);
        prod
    }

    #[test]
    fn displacement_vacuum_elements() {
        let d = displacement(c(1.0, 0.0), 64).unwrap();
        let oracle = displacement_factorized(c(1.0, 0.0), 64);
        let expect = (-0.5f64).exp();
        assert_abs_diff_eq!(d.matrix()[(0, 0)].re, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle.matrix()[(0, 0)].re, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(d.matrix()[(1, 0)].re, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle.matrix()[(1, 0)].re, expect, epsilon = 1e-12);
    }

    #[test]
    fn displacement_matches_factorized_oracle() {
        for &beta in &[c(0.7, -0.4), c(1.5, 0.9), c(-0.3, 1.1)] {
            let d = displacement(beta, 64).unwrap();
            let o = displacement_factorized(beta, 64);
            // Compare on the leading block where the truncated product is
            // itself accurate.
            let mut worst = 0.0f64;
            for i in 0..32 {
                for j in 0..32 {
                    worst = worst.max((d.matrix()[(i, j)] - o.matrix()[(i, j)]).norm());
                }
            }
            assert!(worst < 1e-9, "beta={beta}: {worst}");
        }
    }

    #[test]
    fn displacement_element_via_laguerre_vs_factorized() {
        let d = displacement(c(1.0, 0.0), 64).unwrap();
        let o = displacement_factorized(c(1.0, 0.0), 64);
        assert!((d.matrix()[(2, 2)] - o.matrix()[(2, 2)]).norm() < 1e-9);
    }

    #[test]
    fn displacement_underflow_flagged() {
        let d = displacement(c(40.0, 0.0), 8).unwrap();
        assert!(d.underflow());
    }

    #[test]
    fn displacement_unitary_on_leading_block() {
        // A displaced |n> spreads over n + |beta|^2 +- |beta| sqrt(4n+2)
        // photon numbers, so unitarity of the truncated matrix can only hold
        // on columns whose spread stays inside the space: at dim 64 and
        // |beta| = 2 the mass lost beyond the truncation is ~5e-11 for
        // n = 24 but already ~1e-4 at n = 31. The 3*dim/8 block is the
        // largest that meets 1e-8 with margin.
        let dim = 64;
        for &beta in &[c(0.5, 0.5), c(2.0, 0.0), c(0.0, -2.0)] {
            let d = displacement(beta, dim).unwrap();
            let prod = d.adjoint().mul(&d).unwrap();
            let block = 3 * dim / 8;
            let mut worst = 0.0f64;
            for i in 0..block {
                for j in 0..block {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((prod.matrix()[(i, j)] - c(expect, 0.0)).norm());
                }
            }
            assert!(worst < 1e-8, "beta={beta}: unitarity tail {worst}");
        }
    }

    #[test]
    fn displacement_group_property() {
        let dim = 64;
        let beta = c(1.2, -0.7);
        let prod = displacement(beta, dim).unwrap().mul(&displacement(-beta, dim).unwrap()).unwrap();
        let block = 3 * dim / 8;
        let mut worst = 0.0f64;
        for i in 0..block {
            for j in 0..block {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod.matrix()[(i, j)] - c(expect, 0.0)).norm());
            }
        }
        assert!(worst < 1e-8);
    }

    #[test]
    fn displaced_vacuum_is_coherent() {
        let dim = 64;
        for &alpha in &[c(1.0, 0.5), c(-0.8, 1.2), c(2.0, 0.0)] {
            let d = displacement(alpha, dim).unwrap();
            let vac = TruncatedVector::from_amplitudes(
                std::iter::once(c(1.0, 0.0)).chain(std::iter::repeat(c(0.0, 0.0))).take(dim).collect(),
            )
            .unwrap();
            let displaced = d.apply(&vac).unwrap();
            let coh = coherent_vector(alpha, dim);
            let worst = (0..dim)
                .map(|n| (displaced.amplitude(n) - coh.amplitude(n)).norm())
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-10, "alpha={alpha}: {worst}");
        }
    }

    #[test]
    fn parity_conjugation_of_displacement() {
        let dim = 64;
        let beta = c(0.9, 0.6);
        let p = parity(dim).unwrap();
        let lhs = p.mul(&displacement(beta, dim).unwrap()).unwrap().mul(&p).unwrap();
        let rhs = displacement(-beta, dim).unwrap();
        let block = 3 * dim / 4;
        let mut worst = 0.0f64;
        for i in 0..block {
            for j in 0..block {
                worst = worst.max((lhs.matrix()[(i, j)] - rhs.matrix()[(i, j)]).norm());
            }
        }
        assert!(worst < 1e-8);
    }

    #[test]
    fn expm_trivial_cases() {
        let z = FockOperator::from_matrix(DMatrix::zeros(3, 3));
        assert_eq!(expm(&z).unwrap().matrix(), &DMatrix::<C64>::identity(3, 3));

        let d = FockOperator::from_matrix(DMatrix::from_diagonal(&DVector::from_vec(vec![
            c(1.0, 0.0),
            c(2.0, 0.0),
        ])));
        let e = expm(&d).unwrap();
        assert_abs_diff_eq!(e.matrix()[(0, 0)].re, 1f64.exp(), epsilon = 1e-13);
        assert_abs_diff_eq!(e.matrix()[(1, 1)].re, 2f64.exp(), epsilon = 5e-13);
        assert!(e.matrix()[(0, 1)].norm() < 1e-15);

        let mut nil = DMatrix::zeros(2, 2);
        nil[(1, 0)] = c(3.5, -1.0);
        let e = expm(&FockOperator::from_matrix(nil)).unwrap();
        assert_eq!(e.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(e.matrix()[(1, 1)], c(1.0, 0.0));
        assert!((e.matrix()[(1, 0)] - c(3.5, -1.0)).norm() < 1e-14);
        assert_eq!(e.matrix()[(0, 1)], c(0.0, 0.0));
    }

    #[test]
    fn expm_rejects_non_finite() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = c(f64::NAN, 0.0);
        assert!(matches!(expm(&FockOperator::from_matrix(m)), Err(FockError::NonFinite)));
    }

    #[test]
    fn position_eigenstate_components() {
        let v = position_eigenstate(0.0, 32, PositionRoute::Hermite).unwrap();
        assert_eq!(v.amplitude(1), c(0.0, 0.0));
        assert_abs_diff_eq!(v.amplitude(0).re, 0.7511255444649425, epsilon = 1e-12);
    }

    #[test]
    fn position_eigenstate_routes_agree() {
        let dim = 64;
        let a = position_eigenstate(1.0, dim, PositionRoute::Hermite).unwrap();
        let b = position_eigenstate(1.0, dim, PositionRoute::DisplacedVacuum).unwrap();
        let worst = (0..dim)
            .map(|n| (a.amplitude(n) - b.amplitude(n)).norm())
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-10, "route disagreement {worst}");
    }

    #[test]
    fn position_eigenstate_range_and_truncation_errors() {
        assert!(matches!(
            position_eigenstate(9.0, 64, PositionRoute::Hermite),
            Err(FockError::PositionRange { .. })
        ));
        assert!(matches!(
            position_eigenstate(6.0, 8, PositionRoute::Hermite),
            Err(FockError::Truncation { .. })
        ));
    }

    #[test]
    fn make_state_fock() {
        let rho = make_state(&StateSpec::Fock(0), 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == 0 && j == 0 { 1.0 } else { 0.0 };
                assert_eq!(rho.matrix()[(i, j)], c(expect, 0.0));
            }
        }
        assert!(matches!(make_state(&StateSpec::Fock(7), 4), Err(FockError::InvalidSpec(_))));
    }

    #[test]
    fn make_state_coherent_amplitude() {
        let rho = make_state(&StateSpec::Coherent(c(1.0, 0.0)), 64).unwrap();
        // c_2 = e^{-1/2}/sqrt(2); oracle is the direct series
        // e^{-|a|^2/2} a^n / sqrt(n!).
        let oracle = (-0.5f64).exp() / 2f64.sqrt();
        let c2 = rho.matrix()[(2, 0)].re / rho.matrix()[(0, 0)].re.sqrt();
        assert_abs_diff_eq!(c2, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle, 0.4288819424803531, epsilon = 1e-12);
    }

    #[test]
    fn make_state_thermal_geometric() {
        let rho = make_state(&StateSpec::Thermal(1.0), 64).unwrap();
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.matrix()[(3, 3)].re, 0.0625, epsilon = 1e-12);
        assert!(matches!(make_state(&StateSpec::Thermal(-1.0), 16), Err(FockError::InvalidSpec(_))));
    }

    #[test]
    fn make_state_truncation_reports_minimal_dim() {
        let err = make_state(&StateSpec::Coherent(c(3.0, 0.0)), 8).unwrap_err();
        match err {
            FockError::Truncation { min_dim: Some(d), .. } => {
                assert!(d > 8);
                assert!(make_state(&StateSpec::Coherent(c(3.0, 0.0)), d).is_ok());
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn make_state_invariants_hold() {
        let dim = 64;
        let specs = [
            StateSpec::Fock(3),
            StateSpec::Coherent(c(1.0, 0.5)),
            StateSpec::Thermal(0.5),
            StateSpec::Squeezed { r: 0.4, phi: 0.0 },
            StateSpec::Cat { alpha: c(1.5, 0.0), phase: 0.0 },
        ];
        for spec in &specs {
            let rho = make_state(spec, dim).unwrap();
            let tr = rho.trace();
            assert!(tr > 1.0 - EPS_TAIL && tr < 1.0 + 1e-12, "{spec}: trace {tr}");
            let min_eig = rho
                .eigenpairs(0.0)
                .iter()
                .map(|(l, _)| *l)
                .fold(f64::INFINITY, f64::min);
            assert!(min_eig > PSD_TOL, "{spec}: min eigenvalue {min_eig}");
        }
    }

    #[test]
    fn density_json_round_trip_is_bit_identical() {
        let rho = make_state(&StateSpec::Coherent(c(0.8, -0.3)), 16).unwrap();
        let text = rho.to_json();
        let back = DensityOperator::from_json(&text).unwrap();
        assert_eq!(rho.dim(), back.dim());
        for i in 0..16 {
            for j in 0..16 {
                let a = rho.matrix()[(i, j)];
                let b = back.matrix()[(i, j)];
                assert_eq!(a.re.to_bits(), b.re.to_bits());
                assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }

    #[test]
    fn density_operator_rejects_bad_input() {
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 0)] = c(1.0, 0.0);
        m[(0, 1)] = c(0.5, 0.0);
        assert!(matches!(DensityOperator::new(m), Err(FockError::NotHermitian { .. })));

        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 0)] = c(0.5, 0.0);
        assert!(matches!(DensityOperator::new(m), Err(FockError::TraceRange { .. })));

        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 0)] = c(1.5, 0.0);
        m[(1, 1)] = c(-0.5, 0.0);
        assert!(matches!(DensityOperator::new(m), Err(FockError::NotPositive { .. })));
    }

    #[test]
    fn phase_point_representations_interconvert_exactly() {
        let pt = PhasePoint::from_qp(1.25, -0.75);
        let beta = pt.beta();
        assert_eq!(beta.re, 1.25 / std::f64::consts::SQRT_2);
        assert_eq!(beta.im, -0.75 / std::f64::consts::SQRT_2);
        let back = PhasePoint::from_beta(beta);
        assert!((back.q() - 1.25).abs() < 1e-15);
        assert!((back.p() + 0.75).abs() < 1e-15);
    }
}
