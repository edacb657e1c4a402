//! Finite-difference machinery for the derivative-shift identity check.
//!
//! The identity under test relates even-order t-derivatives of the Hermite
//! generating partial sum to the index-shifted partial sum. Fourth-order
//! central stencils at step 1e-3 destroy about twelve decimal digits in the
//! numerator, which plain binary64 cannot spare, so the polynomial is
//! evaluated in compensated double-double arithmetic inside the stencil.
//! A cross-check pins the double-double evaluator to the production
//! `generating_partial` at the stencil abscissas.

/// Unevaluated double-double value `hi + lo`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

impl Dd {
    pub fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        Self { hi, lo }
    }

    pub fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Self { hi, lo }
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(Self { hi: -o.hi, lo: -o.lo })
    }

    pub fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Self { hi, lo }
    }

    pub fn scale(self, c: f64) -> Self {
        self.mul(Self::from(c))
    }

    pub fn div(self, o: Self) -> Self {
        let q0 = self.hi / o.hi;
        let r1 = self.sub(o.scale(q0));
        let q1 = r1.hi / o.hi;
        let r2 = r1.sub(o.scale(q1));
        let q2 = r2.hi / o.hi;
        let (hi, lo) = quick_two_sum(q0, q1 + q2);
        Self { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Horner evaluation of a polynomial with binary64 coefficients at a
/// double-double abscissa.
pub(crate) fn poly_eval_dd(coeffs: &[f64], t: Dd) -> Dd {
    let mut acc = Dd::from(0.0);
    for &c in coeffs.iter().rev() {
        acc = acc.mul(t).add(Dd::from(c));
    }
    acc
}

/// Coefficients `H_k(x)/k!` of the generating partial sum up to `kmax`.
pub(crate) fn generating_coeffs(x: f64, kmax: usize) -> Vec<f64> {
    let mut coeffs = Vec::with_capacity(kmax + 1);
    let mut h0 = 1.0f64;
    let mut h1 = 2.0 * x;
    let mut factorial = 1.0f64;
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
        if k > 0 {
            factorial *= k as f64;
        }
        coeffs.push(h / factorial);
    }
    coeffs
}

/// Richardson-extrapolated central finite difference of order `2n`
/// (n = 1 or 2) of the polynomial at `t`, with base step `h`.
pub(crate) fn central_derivative_2n(coeffs: &[f64], t: f64, n: usize, h: f64) -> f64 {
    let stencil = |hh: f64| -> Dd {
        let f = |offset: f64| poly_eval_dd(coeffs, Dd::sum(t, offset));
        let h2 = Dd::from(hh).mul(Dd::from(hh));
        match n {
            1 => f(hh)
                .add(f(-hh))
                .sub(f(0.0).scale(2.0))
                .div(h2),
            2 => {
                let num = f(-2.0 * hh)
                    .add(f(2.0 * hh))
                    .sub(f(-hh).scale(4.0))
                    .sub(f(hh).scale(4.0))
                    .add(f(0.0).scale(6.0));
                num.div(h2.mul(h2))
            }
            _ => unreachable!("only 2nd and 4th derivatives are required"),
        }
    };
    let coarse = stencil(h);
    let fine = stencil(0.5 * h);
    fine.scale(4.0).sub(coarse).scale(1.0 / 3.0).to_f64()
}

/// The index-shifted partial sum `sum_{k<=kmax-2n} H_{k+2n}(x) t^k / k!`.
pub(crate) fn shifted_partial(x: f64, t: f64, kmax: usize, n: usize) -> f64 {
    let shift = 2 * n;
    // H values up to kmax by recurrence.
    let mut h = Vec::with_capacity(kmax + 1);
    h.push(1.0);
    if kmax >= 1 {
        h.push(2.0 * x);
    }
    for k in 2..=kmax {
        let v = 2.0 * x * h[k - 1] - 2.0 * (k as f64 - 1.0) * h[k - 2];
        h.push(v);
    }
    let mut acc = 0.0;
    let mut ratio = 1.0; // t^k / k!
    for k in 0..=kmax - shift {
        acc += h[k + shift] * ratio;
        ratio *= t / (k as f64 + 1.0);
    }
    acc
}
