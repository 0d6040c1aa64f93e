//! q-numbers, q-Pochhammer symbols, q-factorials, q-binomials, q-Gamma and q-Beta.

use crate::error::{QError, QResult};
use crate::series::{LogVal, Scalar};

/// Factors of an infinite product closer to 1 than this are dropped.
pub const PRODUCT_EPS: f64 = 1e-17;
/// Hard cap on the number of factors of an infinite product.
pub const MAX_FACTORS: usize = 10_000;

/// The parameter bundle `(q, r, δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QBase {
    pub q: f64,
    pub r: u32,
    pub delta: f64,
}

impl QBase {
    pub fn new(q: f64, r: u32, delta: f64) -> QResult<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(QError::InvalidParameter(format!("q must lie in (0,1), got {q}")));
        }
        if r < 2 {
            return Err(QError::InvalidParameter(format!("r must be at least 2, got {r}")));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(QError::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        Ok(QBase { q, r, delta })
    }

    /// The base `Q = q^r`.
    pub fn big_q(&self) -> f64 {
        self.q.powi(self.r as i32)
    }

    /// `(r)_q = 1 + q + … + q^{r-1}`.
    pub fn r_q(&self) -> f64 {
        q_number(self.r as f64, self.q)
    }

    pub fn rf(&self) -> f64 {
        self.r as f64
    }
}

/// Multi-index `α = (α_1, …, α_{r-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector {
    alpha: Vec<f64>,
    abs_alpha: f64,
}

impl AlphaVector {
    /// Builds an index vector, enforcing `α_k ≥ -1 + k/r`.
    pub fn new(alpha: Vec<f64>, r: u32) -> QResult<Self> {
        if alpha.len() + 1 != r as usize {
            return Err(QError::InvalidParameter(format!(
                "alpha must have r-1 = {} entries, got {}",
                r as usize - 1,
                alpha.len()
            )));
        }
        for (i, &a) in alpha.iter().enumerate() {
            let k = (i + 1) as f64;
            let bound = -1.0 + k / r as f64;
            if !a.is_finite() || a < bound - 1e-14 {
                return Err(QError::InvalidParameter(format!(
                    "alpha[{}] < -1 + {}/r",
                    i + 1,
                    i + 1
                )));
            }
        }
        let abs_alpha = alpha.iter().sum();
        Ok(AlphaVector { alpha, abs_alpha })
    }

    /// The index `α_k = -1 + k/r` at which `j_α` reduces to `cos_r`.
    pub fn cos_collapse(r: u32) -> Self {
        let alpha = (1..r).map(|k| -1.0 + k as f64 / r as f64).collect();
        AlphaVector::new(alpha, r).expect("boundary index is admissible")
    }

    pub fn values(&self) -> &[f64] {
        &self.alpha
    }

    pub fn abs_alpha(&self) -> f64 {
        self.abs_alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// True when every `α_k > -1 + k/r` strictly.
    pub fn is_interior(&self, r: u32) -> bool {
        self.alpha
            .iter()
            .enumerate()
            .all(|(i, &a)| a > -1.0 + (i + 1) as f64 / r as f64)
    }

    /// `α + p` componentwise.
    pub fn shifted(&self, p: &[f64], r: u32) -> QResult<Self> {
        if p.len() != self.alpha.len() {
            return Err(QError::InvalidParameter("shift length must equal r-1".into()));
        }
        AlphaVector::new(self.alpha.iter().zip(p).map(|(a, b)| a + b).collect(), r)
    }
}

/// Stopping controls for series and lattice sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_tol: 1e-17,
            rel_tol: 1e-16,
            max_terms: 10_000,
        }
    }
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_terms: usize) -> QResult<Self> {
        if !(abs_tol >= 0.0 && rel_tol >= 0.0) || (abs_tol == 0.0 && rel_tol == 0.0) {
            return Err(QError::InvalidParameter(
                "one of abs_tol, rel_tol must be positive".into(),
            ));
        }
        if max_terms == 0 {
            return Err(QError::InvalidParameter("max_terms must be positive".into()));
        }
        Ok(Tolerance {
            abs_tol,
            rel_tol,
            max_terms,
        })
    }
}

/// Length of a Pochhammer product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extent {
    Finite(u64),
    Infinite,
}

/// An evaluated product together with the number of factors used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Product<T> {
    pub value: T,
    pub factors: usize,
}

/// `(λ)_q = (1 - q^λ)/(1 - q)`.
pub fn q_number(lambda: f64, q: f64) -> f64 {
    -(lambda * q.ln()).exp_m1() / (1.0 - q)
}

/// `(a; q)_n`, truncating the infinite product once `|a q^k| < 1e-17`.
pub fn q_pochhammer<T: Scalar>(a: T, q: f64, n: Extent) -> QResult<Product<T>> {
    let mut p = T::one();
    let mut aq = a;
    match n {
        Extent::Finite(n) => {
            for _ in 0..n {
                p = p * (T::one() - aq);
                aq = aq * q;
            }
            Ok(Product {
                value: p,
                factors: n as usize,
            })
        }
        Extent::Infinite => {
            for k in 0..MAX_FACTORS {
                if aq.modulus() < PRODUCT_EPS {
                    return Ok(Product { value: p, factors: k });
                }
                p = p * (T::one() - aq);
                aq = aq * q;
            }
            Err(QError::nonconv("infinite q-Pochhammer product", MAX_FACTORS))
        }
    }
}

/// Real `(a; q)_n` shortcut.
pub fn qpoch(a: f64, q: f64, n: u64) -> f64 {
    let mut p = 1.0;
    let mut aq = a;
    for _ in 0..n {
        p *= 1.0 - aq;
        aq *= q;
    }
    p
}

/// Real `(a; q)_∞` stored in log form; exact zero when a factor vanishes.
pub fn ln_qpoch_inf(a: f64, q: f64) -> LogVal {
    let mut ln = 0.0;
    let mut sign = 1.0;
    let mut aq = a;
    for _ in 0..MAX_FACTORS {
        if aq.abs() < PRODUCT_EPS {
            break;
        }
        if aq == 1.0 {
            return LogVal::ZERO;
        }
        if aq > 1.0 {
            sign = -sign;
            ln += (aq - 1.0).ln();
        } else {
            ln += (-aq).ln_1p();
        }
        aq *= q;
    }
    LogVal::from_ln(ln, sign)
}

/// Real `(a; q)_∞`.
pub fn qpoch_inf(a: f64, q: f64) -> f64 {
    ln_qpoch_inf(a, q).value()
}

/// `(a + b)_q^n = ∏_{j<n} (a + q^j b)`.
pub fn q_shifted_power(a: f64, b: f64, q: f64, n: u64) -> f64 {
    let mut p = 1.0;
    let mut bq = b;
    for _ in 0..n {
        p *= a + bq;
        bq *= q;
    }
    p
}

/// `(1 + a)_q^t = (1 + a)_q^∞ / (1 + q^t a)_q^∞` for real `t`.
pub fn q_shifted_power_real(a: f64, t: f64, q: f64) -> QResult<f64> {
    let num = ln_qpoch_inf(-a, q);
    let den = ln_qpoch_inf(-a * q.powf(t), q);
    if den.is_zero() {
        return Err(QError::DivisionByZero(format!(
            "(1 + q^(t+j) a) vanishes for a = {a}, t = {t}"
        )));
    }
    Ok(num.div(den).value())
}

/// `[n]_q! = ∏_{m=1}^n (m)_q`.
pub fn q_factorial(n: u64, q: f64) -> f64 {
    (1..=n).map(|m| q_number(m as f64, q)).product()
}

/// `ln [n]_q!`.
pub fn ln_q_factorial(n: u64, q: f64) -> f64 {
    (1..=n).map(|m| q_number(m as f64, q).ln()).sum()
}

/// Gaussian binomial coefficient.
pub fn q_binomial_coeff(n: i64, k: i64, q: f64) -> QResult<f64> {
    if k < 0 || k > n {
        return Err(QError::Domain(format!("q-binomial needs 0 <= k <= n, got n={n}, k={k}")));
    }
    Ok(ln_q_binomial(n as u64, k as u64, q).exp())
}

/// `ln [n over k]_q` for `0 ≤ k ≤ n`.
pub fn ln_q_binomial(n: u64, k: u64, q: f64) -> f64 {
    let k = k.min(n - k);
    (1..=k)
        .map(|j| {
            let num = -(((n - k + j) as f64) * q.ln()).exp_m1();
            let den = -((j as f64) * q.ln()).exp_m1();
            (num / den).ln()
        })
        .sum()
}

/// `(λ)_n^q = (q^λ; q)_n / (1 - q)^n = ∏_{j<n} (λ + j)_q`.
pub fn q_rising(lambda: f64, n: u64, q: f64) -> f64 {
    (0..n).map(|j| q_number(lambda + j as f64, q)).product()
}

fn gamma_pole(t: f64) -> bool {
    t <= 0.0 && t == t.round()
}

/// `ln |Γ_q(t)|` together with the sign of `Γ_q(t)`.
pub fn ln_q_gamma(t: f64, q: f64) -> QResult<LogVal> {
    if gamma_pole(t) {
        return Err(QError::Pole(t));
    }
    let num = ln_qpoch_inf(q, q);
    let den = ln_qpoch_inf(q.powf(t), q);
    if den.is_zero() {
        return Err(QError::Pole(t));
    }
    Ok(num.div(den).scale_ln((1.0 - t) * (1.0 - q).ln()))
}

/// `Γ_q(t) = (q; q)_∞ / (q^t; q)_∞ · (1 - q)^{1-t}`.
pub fn q_gamma(t: f64, q: f64) -> QResult<f64> {
    Ok(ln_q_gamma(t, q)?.value())
}

/// `β_q(t, s) = Γ_q(t) Γ_q(s) / Γ_q(t + s)`.
pub fn q_beta(t: f64, s: f64, q: f64) -> QResult<f64> {
    if !(t > 0.0 && s > 0.0) {
        return Err(QError::Domain(format!("q_beta needs t, s > 0, got ({t}, {s})")));
    }
    Ok(ln_q_gamma(t, q)?
        .mul(ln_q_gamma(s, q)?)
        .div(ln_q_gamma(t + s, q)?)
        .value())
}

/// `d_{rn} = α_{rn}/α_{r(n-1)} = (r)_q^r (n)_Q ∏ (α_i + n)_Q`.
pub fn d_ratio(base: &QBase, alpha: &AlphaVector, n: u64) -> f64 {
    let big_q = base.big_q();
    let nf = n as f64;
    base.r_q().powi(base.r as i32)
        * q_number(nf, big_q)
        * alpha
            .values()
            .iter()
            .map(|a| q_number(a + nf, big_q))
            .product::<f64>()
}

/// `ln α_{rn,α,q}`.
pub fn ln_alpha_norm(base: &QBase, alpha: &AlphaVector, n: u64) -> f64 {
    (1..=n).map(|m| d_ratio(base, alpha, m).ln()).sum()
}

/// `α_{rn,α,q} = (r)_q^{rn} [n]_{q^r}! ∏ (α_i + 1)_n^{q^r}`.
pub fn alpha_norm(base: &QBase, alpha: &AlphaVector, n: u64) -> f64 {
    ln_alpha_norm(base, alpha, n).exp()
}
