//! q-exponentials, δ-deformed basic hypergeometric series and the r-order
//! q-trigonometric functions.

use num_complex::Complex64;

use crate::error::{QError, QResult};
use crate::qcore::{ln_q_binomial, ln_q_factorial, q_number, q_pochhammer, Extent, QBase, Tolerance};
use crate::series::{c2, sum_ratio, LogVal, Scalar, SeriesEval};

/// Coefficients of a truncated power series in `x^{stride·m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    pub coeffs: Vec<f64>,
    pub stride: u32,
    pub truncation_order: usize,
    pub tail_bound: f64,
}

impl TruncatedSeries {
    /// Builds a series from coefficients, bounding the dropped tail at `radius`
    /// by the next coefficient with a geometric majorant.
    pub fn from_coeff_fn(stride: u32, order: usize, radius: f64, coeff: impl Fn(usize) -> f64) -> Self {
        let coeffs: Vec<f64> = (0..=order).map(&coeff).collect();
        let next = coeff(order + 1).abs() * radius.powi((stride as usize * (order + 1)) as i32);
        let after = coeff(order + 2).abs() * radius.powi((stride as usize * (order + 2)) as i32);
        let rho = if next > 0.0 { after / next } else { 0.0 };
        let tail_bound = if rho < 1.0 { next / (1.0 - rho) } else { f64::INFINITY };
        TruncatedSeries {
            coeffs,
            stride,
            truncation_order: order,
            tail_bound,
        }
    }

    pub fn eval<T: Scalar>(&self, x: T) -> T {
        let xs = x.powu(self.stride);
        let mut acc = T::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc * xs + T::from_real(c);
        }
        acc
    }
}

/// Parameters of the series
/// `Σ_k (Q^δ)^{C(k,2)} ∏(a_i)_k^Q / ∏(b_j)_k^Q · z^k / [k]_Q!`.
///
/// Parameters are exponents: `(λ)_k^Q = (Q^λ; Q)_k/(1-Q)^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperSpec {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
    pub delta: f64,
    pub base: f64,
}

impl HyperSpec {
    pub fn new(numerator: Vec<f64>, denominator: Vec<f64>, delta: f64, base: f64) -> QResult<Self> {
        if !(base > 0.0 && base < 1.0) {
            return Err(QError::InvalidParameter(format!("series base must lie in (0,1), got {base}")));
        }
        let terminating = numerator.iter().any(|&a| a <= 0.0 && a == a.round());
        if !(delta >= 0.0 || (terminating && delta.is_finite())) {
            return Err(QError::InvalidParameter(format!(
                "delta must be nonnegative for a non-terminating series, got {delta}"
            )));
        }
        if delta == 0.0 && numerator.len() > denominator.len() && !terminating {
            return Err(QError::InvalidParameter(
                "series without damping needs fewer numerator than denominator+1 parameters".into(),
            ));
        }
        Ok(HyperSpec {
            numerator,
            denominator,
            delta,
            base,
        })
    }
}

/// δ-deformed hypergeometric series in the reduced argument `z`.
pub fn phi_delta<T: Scalar>(spec: &HyperSpec, z: T, tol: &Tolerance) -> QResult<SeriesEval<T>> {
    let b = spec.base;
    sum_ratio(
        "phi_delta series",
        T::one(),
        |k| {
            let kf = (k - 1) as f64;
            let mut num = 1.0;
            for &a in &spec.numerator {
                num *= q_number(a + kf, b);
            }
            if num == 0.0 || num.abs() < 1e-300 {
                return Ok(None);
            }
            let mut den = q_number(k as f64, b);
            for &bj in &spec.denominator {
                let f = q_number(bj + kf, b);
                if f.abs() < 1e-15 {
                    return Err(QError::DegenerateDenominator(format!(
                        "(b)_k vanishes for b = {bj} at k = {k}"
                    )));
                }
                den *= f;
            }
            Ok(Some(z * (b.powf(spec.delta * kf) * num / den)))
        },
        tol,
    )
}

/// `e_q(x) = Σ x^n/[n]_q!` (series route, radius `1/(1-q)`).
pub fn e_q_series<T: Scalar>(x: T, q: f64, tol: &Tolerance) -> QResult<SeriesEval<T>> {
    if x.modulus() * (1.0 - q) >= 1.0 {
        return Err(QError::Radius(format!("|x| >= 1/(1-q) for e_q series, q = {q}")));
    }
    sum_ratio("e_q series", T::one(), |n| Ok(Some(x * (1.0 / q_number(n as f64, q)))), tol)
}

/// `e_q(x) = 1/((1-q)x; q)_∞` (product route).
pub fn e_q_product<T: Scalar>(x: T, q: f64) -> QResult<T> {
    let p = q_pochhammer(x * (1.0 - q), q, Extent::Infinite)?.value;
    if p.modulus() < 1e-300 {
        return Err(QError::Radius(format!("e_q has a pole at this argument, q = {q}")));
    }
    Ok(p.recip())
}

/// `e_q(x)`, using the series inside half the radius and the product beyond.
pub fn e_q<T: Scalar>(x: T, q: f64, tol: &Tolerance) -> QResult<T> {
    if x.modulus() * (1.0 - q) < 0.5 {
        Ok(e_q_series(x, q, tol)?.value)
    } else {
        e_q_product(x, q)
    }
}

/// `e_q(x, δ) = Σ q^{δC(n,2)} x^n/[n]_q!`.
pub fn e_q_delta<T: Scalar>(x: T, q: f64, delta: f64, tol: &Tolerance) -> QResult<SeriesEval<T>> {
    if delta == 0.0 {
        return e_q_series(x, q, tol);
    }
    sum_ratio(
        "e_q(x, delta) series",
        T::one(),
        |n| Ok(Some(x * (q.powf(delta * (n - 1) as f64) / q_number(n as f64, q)))),
        tol,
    )
}

/// `E_q(x) = Σ q^{C(n,2)} x^n/[n]_q!`.
pub fn big_e_q<T: Scalar>(x: T, q: f64, tol: &Tolerance) -> QResult<T> {
    Ok(e_q_delta(x, q, 1.0, tol)?.value)
}

/// `E_q(x) = (-(1-q)x; q)_∞`.
pub fn big_e_q_product<T: Scalar>(x: T, q: f64) -> QResult<T> {
    Ok(q_pochhammer(-(x * (1.0 - q)), q, Extent::Infinite)?.value)
}

/// `b_{rm}(x) = (q^δ)^{rC(m,2)} x^{rm}/[rm]_q!`.
pub fn b_rm(m: u64, x: f64, base: &QBase) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let rm = base.r as u64 * m;
    let ln = base.delta * base.rf() * c2(m as i64) * base.q.ln() - ln_q_factorial(rm, base.q);
    LogVal::from_ln(ln, 1.0).value() * x.powi(rm as i32)
}

/// `cos_r(x) = Σ (-1)^m b_{rm}(x)`.
pub fn cos_r<T: Scalar>(x: T, base: &QBase, tol: &Tolerance) -> QResult<SeriesEval<T>> {
    let r = base.r as usize;
    let q = base.q;
    let xr = x.powu(base.r);
    sum_ratio(
        "cos_r series",
        T::one(),
        |m| {
            let lo = r * (m - 1) + 1;
            let den: f64 = (lo..=r * m).map(|j| q_number(j as f64, q)).product();
            let c = -q.powf(base.delta * base.rf() * (m - 1) as f64) / den;
            Ok(Some(xr * c))
        },
        tol,
    )
}

/// `sin_{r,l}(x) = Σ (-1)^m (q^δ)^{rC(m,2)} x^{rm+r-l}/[rm+r-l]_q!`.
pub fn sin_rl<T: Scalar>(x: T, l: u32, base: &QBase, tol: &Tolerance) -> QResult<SeriesEval<T>> {
    if l < 1 || l >= base.r {
        return Err(QError::Domain(format!("sin order l must be in 1..{}, got {l}", base.r - 1)));
    }
    let r = base.r as usize;
    let q = base.q;
    let p0 = (base.r - l) as u64;
    let first = x.powu(p0 as u32) * (1.0 / crate::qcore::q_factorial(p0, q));
    let xr = x.powu(base.r);
    sum_ratio(
        "sin_r series",
        first,
        |m| {
            let lo = r * (m - 1) + p0 as usize + 1;
            let den: f64 = (lo..=r * m + p0 as usize).map(|j| q_number(j as f64, q)).product();
            let c = -q.powf(base.delta * base.rf() * (m - 1) as f64) / den;
            Ok(Some(xr * c))
        },
        tol,
    )
}

/// Closed form `D_q^l cos_r(x) = -q^{-δ(r-l)} sin_{r,l}(q^δ x)` for `1 ≤ l ≤ r`.
pub fn dq_cos_r(l: u32, x: f64, base: &QBase, tol: &Tolerance) -> QResult<f64> {
    if l == 0 {
        return Ok(cos_r(x, base, tol)?.value);
    }
    if l > base.r {
        return Err(QError::Domain(format!("derivative order {l} exceeds r = {}", base.r)));
    }
    let qd = base.q.powf(base.delta);
    let inner = if l == base.r {
        cos_r(qd * x, base, tol)?.value
    } else {
        sin_rl(qd * x, l, base, tol)?.value
    };
    Ok(-base.q.powf(-base.delta * (base.r - l) as f64) * inner)
}

/// Closed form `D_q^{l-m} sin_{r,m} = sin_{r,l}` (with `sin_{r,r} = cos_r`) for `m ≤ l ≤ r`.
pub fn dq_sin_rl(m: u32, l: u32, x: f64, base: &QBase, tol: &Tolerance) -> QResult<f64> {
    if m < 1 || m > l || l > base.r {
        return Err(QError::Domain(format!("need 1 <= m <= l <= r, got m={m}, l={l}")));
    }
    if l == base.r {
        Ok(cos_r(x, base, tol)?.value)
    } else {
        Ok(sin_rl(x, l, base, tol)?.value)
    }
}

/// `cos_r(x; rδ)` through `(1/r) Σ_k e_q(μ w_k x q^{-δ(r-1)/2}; δ)`,
/// `μ = e^{iπ/r}`, `w_k = e^{2iπ(k-1)/r}`.
pub fn cos_r_by_exponentials(x: f64, base: &QBase, tol: &Tolerance) -> QResult<f64> {
    let r = base.rf();
    let shift = base.q.powf(-base.delta * (r - 1.0) / 2.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..base.r {
        let ang = std::f64::consts::PI / r + 2.0 * std::f64::consts::PI * k as f64 / r;
        let z = Complex64::from_polar(x * shift, ang);
        acc += e_q_delta(z, base.q, base.delta, tol)?.value;
    }
    Ok(acc.re / r)
}

/// Relative rounding level assumed for a stencil sum `Σ c_s f_s`
/// against `Σ |c_s f_s|`.
pub const STENCIL_NOISE: f64 = 1e-14;

/// Double-sum side of the product formula for `cos_r(x) cos_r(y)`.
///
/// The formula is symmetric in `(x, y)`; the sum is formed with the smaller
/// modulus in the coefficient slot, where the stencil is best conditioned.
pub fn cos_product(x: f64, y: f64, base: &QBase, tol: &Tolerance) -> QResult<SeriesEval<f64>> {
    let (x, y) = if x.abs() <= y.abs() { (x, y) } else { (y, x) };
    if y == 0.0 {
        return Err(QError::Domain("cos_product needs a nonzero argument".into()));
    }
    cos_product_ordered(x, y, base, tol)
}

/// The product-formula double sum in the given argument order.
pub fn cos_product_ordered(x: f64, y: f64, base: &QBase, tol: &Tolerance) -> QResult<SeriesEval<f64>> {
    if y == 0.0 {
        return Err(QError::Domain("cos_product at y = 0".into()));
    }
    let q = base.q;
    let lq = q.ln();
    let r = base.r as i64;
    let d = base.delta;
    let ratio = x / y;
    let mut sum = 0.0f64;
    let mut run = 0;
    let mut prev = 0.0f64;
    for k in 0..=tol.max_terms as i64 {
        let rk = r * k;
        // (-1)^{rk} (x/y)^{rk}
        let sign_k = if rk % 2 == 0 || ratio < 0.0 { 1.0 } else { -1.0 };
        let ln_pre = if k == 0 {
            0.0
        } else {
            d * (rk * k) as f64 * lq - rk as f64 * (1.0 - q).ln() - ln_q_factorial(rk as u64, q)
                - c2(rk) * lq
                + rk as f64 * ratio.abs().ln()
        };
        let mut inner = 0.0f64;
        let mut bound = 0.0f64;
        for s in 0..=rk {
            let c = LogVal::from_ln(
                ln_pre + c2(s) * lq + ln_q_binomial(rk as u64, s as u64, q),
                if s % 2 == 0 { sign_k } else { -sign_k },
            )
            .value();
            let arg = y * q.powf((rk - s) as f64 - d * k as f64);
            let v = c * cos_r(arg, base, tol)?.value;
            inner += v;
            bound += v.abs();
        }
        let noise = STENCIL_NOISE * bound;
        let thresh = tol.abs_tol.max(tol.rel_tol * sum.abs());
        if k > 0 && noise > thresh && inner.abs() <= noise {
            // Rounding now dominates the term; later terms only add noise.
            return Ok(SeriesEval {
                value: sum,
                terms: k as usize,
                tail_bound: noise.max(prev),
            });
        }
        sum += inner;
        if !sum.is_finite() {
            return Err(QError::nonconv("cos_product outer sum", k as usize));
        }
        if k > 0 && inner.abs() <= thresh {
            run += 1;
            if run >= crate::series::STOP_RUN {
                return Ok(SeriesEval {
                    value: sum,
                    terms: k as usize + 1,
                    tail_bound: inner.abs().max(prev),
                });
            }
        } else {
            run = 0;
        }
        prev = inner.abs();
    }
    Err(QError::nonconv("cos_product outer sum", tol.max_terms))
}

/// Truncated `cos_r` series in `x^r`.
pub fn cos_r_series(base: &QBase, order: usize, radius: f64) -> TruncatedSeries {
    TruncatedSeries::from_coeff_fn(base.r, order, radius, |m| {
        let s = if m % 2 == 0 { 1.0 } else { -1.0 };
        s * b_rm(m as u64, 1.0, base)
    })
}
