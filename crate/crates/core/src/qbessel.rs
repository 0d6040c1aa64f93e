//! The r-order q-Bessel operator, its normalized eigenfunction `j_α`, and the
//! Mehler and Sonine q-integral representations.

use crate::error::{QError, QResult};
use crate::qcalc::{jackson_multi, IntegrationReport, LatticeFunction};
use crate::qcore::{
    d_ratio, ln_q_binomial, ln_q_factorial, ln_q_gamma, ln_qpoch_inf, q_number, q_rising,
    AlphaVector, QBase, Tolerance,
};
use crate::qspecial::{cos_r, phi_delta, HyperSpec, TruncatedSeries};
use crate::series::{c2, sum_ratio, sum_terms, LogVal, Scalar, SeriesEval};
use crate::stencil::{OperatorShape, PowerStencil};

/// Normalizers are precomputed up to this index.
pub const NORM_CACHE: usize = 256;

/// A Bessel family: base, index and cached `ln α_{rn,α,q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselSpec {
    base: QBase,
    alpha: AlphaVector,
    ln_norms: Vec<f64>,
}

impl BesselSpec {
    pub fn new(base: QBase, alpha: AlphaVector) -> QResult<Self> {
        if alpha.len() + 1 != base.r as usize {
            return Err(QError::InvalidParameter(format!(
                "alpha has {} entries but r = {}",
                alpha.len(),
                base.r
            )));
        }
        let mut ln_norms = Vec::with_capacity(NORM_CACHE + 1);
        ln_norms.push(0.0);
        for n in 1..=NORM_CACHE as u64 {
            let prev = ln_norms[n as usize - 1];
            ln_norms.push(prev + d_ratio(&base, &alpha, n).ln());
        }
        Ok(BesselSpec {
            base,
            alpha,
            ln_norms,
        })
    }

    /// The family with `α_k = -1 + k/r`, for which `j_α = cos_r`.
    pub fn cos_collapse(base: QBase) -> Self {
        BesselSpec::new(base, AlphaVector::cos_collapse(base.r)).expect("valid collapse index")
    }

    pub fn base(&self) -> &QBase {
        &self.base
    }

    pub fn alpha(&self) -> &AlphaVector {
        &self.alpha
    }

    /// Same family with `α + p`.
    pub fn shifted(&self, p: &[f64]) -> QResult<Self> {
        BesselSpec::new(self.base, self.alpha.shifted(p, self.base.r)?)
    }

    /// Same index with a different `δ`.
    pub fn with_delta(&self, delta: f64) -> QResult<Self> {
        BesselSpec::new(QBase::new(self.base.q, self.base.r, delta)?, self.alpha.clone())
    }

    /// `ln α_{rn,α,q}`.
    pub fn ln_alpha_norm(&self, n: u64) -> f64 {
        if (n as usize) < self.ln_norms.len() {
            self.ln_norms[n as usize]
        } else {
            let mut v = *self.ln_norms.last().unwrap();
            for m in self.ln_norms.len() as u64..=n {
                v += d_ratio(&self.base, &self.alpha, m).ln();
            }
            v
        }
    }

    pub fn alpha_norm(&self, n: u64) -> f64 {
        self.ln_alpha_norm(n).exp()
    }

    /// `d_{rn} = α_{rn}/α_{r(n-1)}`.
    pub fn d_ratio(&self, n: u64) -> f64 {
        d_ratio(&self.base, &self.alpha, n)
    }

    /// `Q = q^r`.
    pub fn big_q(&self) -> f64 {
        self.base.big_q()
    }

    /// `ln b_{rn,α}(1)`.
    pub fn ln_b_coeff(&self, n: u64) -> f64 {
        self.base.delta * c2(n as i64) * self.big_q().ln() - self.ln_alpha_norm(n)
    }

    /// The operator shape of `B_{r,δ}` for the stencil machinery.
    pub fn operator_shape(&self) -> OperatorShape {
        OperatorShape::bessel(self.base.q, self.base.r, self.base.delta, self.alpha.values())
    }
}

/// Shift `p` of the Sonine representation.
#[derive(Debug, Clone, PartialEq)]
pub struct SonineShift {
    p: Vec<f64>,
}

impl SonineShift {
    pub fn new(p: Vec<f64>) -> QResult<Self> {
        if let Some(i) = p.iter().position(|&v| !(v >= 1.0)) {
            return Err(QError::InvalidParameter(format!("p[{}] must be >= 1", i + 1)));
        }
        Ok(SonineShift { p })
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }
}

/// `b_{rn,α}(x) = Q^{δC(n,2)} x^{rn}/α_{rn,α,q}`.
pub fn b_rn_alpha(spec: &BesselSpec, n: u64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let rn = spec.base.r as u64 * n;
    if x == 0.0 {
        return 0.0;
    }
    let lv = LogVal::new(x).powi_ln(rn as i32).scale_ln(spec.ln_b_coeff(n));
    lv.value()
}

/// `j_α(z) = Σ (-1)^n b_{rn,α}(z)`.
pub fn j_alpha<T: Scalar>(spec: &BesselSpec, z: T, tol: &Tolerance) -> QResult<SeriesEval<T>> {
    let zr = z.powu(spec.base.r);
    let big_q = spec.big_q();
    let delta = spec.base.delta;
    sum_ratio(
        "j_alpha series",
        T::one(),
        |n| {
            let c = -big_q.powf(delta * (n - 1) as f64) / spec.d_ratio(n as u64);
            Ok(Some(zr * c))
        },
        tol,
    )
}

/// `j_α` through the δ-deformed series in base `Q` with denominator exponents
/// `α_i + 1` and reduced argument `-z^r/(r)_q^r`.
pub fn j_alpha_phi<T: Scalar>(spec: &BesselSpec, z: T, tol: &Tolerance) -> QResult<SeriesEval<T>> {
    let h = HyperSpec::new(
        vec![],
        spec.alpha.values().iter().map(|a| a + 1.0).collect(),
        spec.base.delta,
        spec.big_q(),
    )?;
    let w = -(z.powu(spec.base.r) * (1.0 / spec.base.r_q().powi(spec.base.r as i32)));
    phi_delta(&h, w, tol)
}

/// Truncated `j_α` series in `x^r`.
pub fn j_alpha_series(spec: &BesselSpec, order: usize, radius: f64) -> TruncatedSeries {
    TruncatedSeries::from_coeff_fn(spec.base.r, order, radius, |n| {
        let s = if n % 2 == 0 { 1.0 } else { -1.0 };
        s * spec.ln_b_coeff(n as u64).exp()
    })
}

/// `B_{r,δ} f(x)` applied literally: `D_q`, then the `r-1` first-order factors
/// `a_i x D_q + b_i` (`a_i = q^{rα_i+1}`, `b_i = (rα_i+1)_q`), division by
/// `x^{r-1}`, all at the shifted point `q^{-δ} x`.
pub fn apply_b(spec: &BesselSpec, f: &dyn LatticeFunction, x: f64) -> QResult<f64> {
    if x == 0.0 {
        return Err(QError::Domain("Bessel operator at x = 0".into()));
    }
    let q = spec.base.q;
    let r = spec.base.r as usize;
    let xs = q.powf(-spec.base.delta) * x;
    // values of the current function at xs q^j
    let mut vals: Vec<f64> = (0..=r).map(|j| f.eval(xs * q.powi(j as i32))).collect();
    // D_q
    vals = (0..r)
        .map(|j| {
            let p = xs * q.powi(j as i32);
            (vals[j + 1] - vals[j]) / ((q - 1.0) * p)
        })
        .collect();
    let rf = spec.base.rf();
    for &a in spec.alpha.values().iter().rev() {
        let ai = q.powf(rf * a + 1.0);
        let bi = q_number(rf * a + 1.0, q);
        let len = vals.len();
        vals = (0..len - 1)
            .map(|j| ai * (vals[j + 1] - vals[j]) / (q - 1.0) + bi * vals[j])
            .collect();
    }
    Ok(vals[0] / xs.powi(r as i32 - 1))
}

/// `B_{r,δ}^n f(x)` through the closed-form lattice stencil.
pub fn apply_b_power(spec: &BesselSpec, f: &dyn LatticeFunction, x: f64, n: u32) -> QResult<f64> {
    if n == 0 {
        return Ok(f.eval(x));
    }
    spec.operator_shape().power(n).apply(f, x)
}

/// Stencil for `B_{r,δ}^n`.
pub fn b_power_stencil(spec: &BesselSpec, n: u32) -> PowerStencil {
    spec.operator_shape().power(n)
}

/// The `r = 2` operator written out:
/// `Λ_{q^δ}^{-1}[ q^{2α+1} D_q^2 u + (2α+1)_q x^{-1} D_q u ]`.
pub fn apply_b2_reduced(spec: &BesselSpec, f: &dyn LatticeFunction, x: f64) -> QResult<f64> {
    if spec.base.r != 2 {
        return Err(QError::InvalidParameter("reduced form needs r = 2".into()));
    }
    let q = spec.base.q;
    let a = spec.alpha.values()[0];
    let y = q.powf(-spec.base.delta) * x;
    let d1 = |t: f64| (f.eval(q * t) - f.eval(t)) / ((q - 1.0) * t);
    let d2 = (d1(q * y) - d1(y)) / ((q - 1.0) * y);
    Ok(q.powf(2.0 * a + 1.0) * d2 + q_number(2.0 * a + 1.0, q) * d1(y) / y)
}

/// The `r = 3` operator expanded in powers of `D_q`:
/// `Λ_{q^δ}^{-1}[ c_3 D_q^3 u + c_2 x^{-1} D_q^2 u + c_1 x^{-2} D_q u ]` with
/// `c_3 = q^{3α_1+3α_2+3}`,
/// `c_2 = q^{3α_1+1}(3α_2+1)_q + q^{3α_2+1}(3α_1+1)_q + q^{3α_1+3α_2+2}`,
/// `c_1 = (3α_1+1)_q (3α_2+1)_q`.
pub fn apply_b3_reduced(spec: &BesselSpec, f: &dyn LatticeFunction, x: f64) -> QResult<f64> {
    if spec.base.r != 3 {
        return Err(QError::InvalidParameter("reduced form needs r = 3".into()));
    }
    let q = spec.base.q;
    let (a1, a2) = (spec.alpha.values()[0], spec.alpha.values()[1]);
    let y = q.powf(-spec.base.delta) * x;
    let d1 = |t: f64| (f.eval(q * t) - f.eval(t)) / ((q - 1.0) * t);
    let d2 = |t: f64| (d1(q * t) - d1(t)) / ((q - 1.0) * t);
    let d3 = (d2(q * y) - d2(y)) / ((q - 1.0) * y);
    let e1 = 3.0 * a1 + 1.0;
    let e2 = 3.0 * a2 + 1.0;
    let c3 = q.powf(e1 + e2 + 1.0);
    let c2 = q.powf(e1) * q_number(e2, q) + q.powf(e2) * q_number(e1, q) + q.powf(e1 + e2);
    let c1 = q_number(e1, q) * q_number(e2, q);
    Ok(c3 * d3 + c2 * d2(y) / y + c1 * d1(y) / (y * y))
}

/// Closed form `D_q j_α(x) = -(x/(r)_q)^{r-1} / ∏(α_i+1)_Q · j_{α+1}(q^δ x)`.
pub fn dq_j_alpha(spec: &BesselSpec, x: f64, tol: &Tolerance) -> QResult<f64> {
    dq_j_alpha_iterated(spec, x, 1, tol).map(|v| v * x.powi(spec.base.r as i32 - 1))
}

/// `{x^{-(r-1)} D_q}^n j_α(x) = (-1)^n (q^δ)^{rC(n,2)} / ((r)_q^{(r-1)n} ∏(α_i+1)_n^Q)
/// · j_{α+n}(q^{δn} x)`.
pub fn dq_j_alpha_iterated(spec: &BesselSpec, x: f64, n: u32, tol: &Tolerance) -> QResult<f64> {
    let b = spec.base;
    let big_q = spec.big_q();
    let shifted = spec.shifted(&vec![n as f64; b.r as usize - 1])?;
    let mut c = b.q.powf(b.delta * b.rf() * c2(n as i64))
        / b.r_q().powi(((b.r - 1) * n) as i32);
    for &a in spec.alpha.values() {
        c /= q_rising(a + 1.0, n as u64, big_q);
    }
    if n % 2 == 1 {
        c = -c;
    }
    Ok(c * j_alpha(&shifted, b.q.powf(b.delta * n as f64) * x, tol)?.value)
}

/// Term-wise `D_q^n` of `Σ_m (-1)^m e^{ln_coeff(m)} x^{rm}`.
pub(crate) fn dqn_power_series(
    what: &str,
    r: u32,
    q: f64,
    n: u32,
    x: f64,
    ln_coeff: impl Fn(u64) -> f64,
    tol: &Tolerance,
) -> QResult<SeriesEval<f64>> {
    let m0 = (n as u64).div_ceil(r as u64);
    sum_terms(
        what,
        3,
        |i| {
            let m = m0 + i as u64;
            let p = r as u64 * m;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let ln = ln_coeff(m) + ln_q_factorial(p, q) - ln_q_factorial(p - n as u64, q);
            let e = (p - n as u64) as i32;
            if e == 0 {
                return Ok(sign * ln.exp());
            }
            if x == 0.0 {
                return Ok(0.0);
            }
            Ok(LogVal::from_ln(ln, sign).mul(LogVal::new(x).powi_ln(e)).value())
        },
        tol,
    )
}

/// `D_q^n j_α(x)` from the series.
pub fn dqn_j_alpha(spec: &BesselSpec, n: u32, x: f64, tol: &Tolerance) -> QResult<f64> {
    if n == 0 {
        return Ok(j_alpha(spec, x, tol)?.value);
    }
    Ok(dqn_power_series("D_q^n j_alpha", spec.base.r, spec.base.q, n, x, |m| spec.ln_b_coeff(m), tol)?.value)
}

/// `D_q^n cos_r(x)` from the series.
pub fn dqn_cos_r(base: &QBase, n: u32, x: f64, tol: &Tolerance) -> QResult<f64> {
    if n == 0 {
        return Ok(cos_r(x, base, tol)?.value);
    }
    let q = base.q;
    let rf = base.rf();
    Ok(dqn_power_series(
        "D_q^n cos_r",
        base.r,
        q,
        n,
        x,
        |m| base.delta * rf * c2(m as i64) * q.ln() - ln_q_factorial(base.r as u64 * m, q),
        tol,
    )?
    .value)
}

/// `(1 - Q t^r)_Q^β = (Q t^r; Q)_∞ / (Q^{β+1} t^r; Q)_∞`.
fn ln_weight_factor(big_q: f64, t: f64, r: u32, beta: f64) -> LogVal {
    let tr = t.powi(r as i32);
    ln_qpoch_inf(big_q * tr, big_q).div(ln_qpoch_inf(big_q.powf(beta + 1.0) * tr, big_q))
}

fn require_interior(spec: &BesselSpec) -> QResult<()> {
    if !spec.alpha.is_interior(spec.base.r) {
        return Err(QError::InvalidParameter(
            "integral representations need alpha_k > -1 + k/r strictly".into(),
        ));
    }
    Ok(())
}

/// `W_α(t) = ∏ (1 - Q t_i^r)_Q^{α_i - i/r} t_i^{i-1}`.
pub fn weight_w(spec: &BesselSpec, t: &[f64]) -> QResult<f64> {
    let r = spec.base.r;
    if t.len() + 1 != r as usize {
        return Err(QError::InvalidParameter("weight needs r-1 variables".into()));
    }
    let big_q = spec.big_q();
    let mut acc = LogVal::ONE;
    for (k, (&a, &ti)) in spec.alpha.values().iter().zip(t).enumerate() {
        let i = (k + 1) as f64;
        acc = acc
            .mul(ln_weight_factor(big_q, ti, r, a - i / r as f64))
            .mul(LogVal::new(ti).powi_ln(k as i32));
    }
    Ok(acc.value())
}

/// `C_{r,α} = (r)_q^{r-1} ∏ Γ_Q(α_i+1) / (Γ_Q(i/r) Γ_Q(α_i - i/r + 1))`.
pub fn mehler_constant(spec: &BesselSpec) -> QResult<f64> {
    let big_q = spec.big_q();
    let r = spec.base.r;
    let mut acc = LogVal::new(spec.base.r_q().powi(r as i32 - 1));
    for (k, &a) in spec.alpha.values().iter().enumerate() {
        let i = (k + 1) as f64 / r as f64;
        acc = acc
            .mul(ln_q_gamma(a + 1.0, big_q)?)
            .div(ln_q_gamma(i, big_q)?)
            .div(ln_q_gamma(a - i + 1.0, big_q)?);
    }
    Ok(acc.value())
}

/// Jackson weights `(1 - q) q^j g(q^j)` on `[0, 1]`, truncated at `depth`.
fn lattice_weights(q: f64, depth: usize, g: impl Fn(f64) -> f64) -> Vec<f64> {
    (0..depth)
        .map(|j| {
            let t = q.powi(j as i32);
            (1.0 - q) * t * g(t)
        })
        .collect()
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn depth_for(q: f64, tol: &Tolerance) -> usize {
    let eps = tol.abs_tol.max(1e-17);
    (((eps * (1.0 - q)).ln() / q.ln()).ceil() as usize).clamp(8, tol.max_terms)
}

/// `∫ ∏ w_i(t_i) g(z t_1⋯t_{r-1}) d_qt` for separable weights, reduced to one
/// sum over the total lattice exponent.
fn separable_product_integral(
    q: f64,
    weights: &[Vec<f64>],
    z: f64,
    g: impl Fn(f64) -> QResult<f64>,
) -> QResult<IntegrationReport> {
    let mut total = vec![1.0];
    for w in weights {
        total = convolve(&total, w);
    }
    let mut value = 0.0;
    let mut edge = 0.0f64;
    let n = total.len();
    for (s, &w) in total.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let v = w * g(z * q.powi(s as i32))?;
        value += v;
        if s + weights.len() >= n {
            edge = edge.max(v.abs());
        }
    }
    Ok(IntegrationReport {
        value,
        terms_used: n,
        tail_estimate: edge * q / (1.0 - q),
    })
}

/// Mehler-type integral `C_{r,α} ∫_{[0,1]^{r-1}} W_α(t) cos_r(z t_1⋯t_{r-1}) d_qt`.
pub fn mehler_j(spec: &BesselSpec, z: f64, tol: &Tolerance) -> QResult<IntegrationReport> {
    require_interior(spec)?;
    let b = spec.base;
    let big_q = spec.big_q();
    let depth = depth_for(b.q, tol);
    let weights: Vec<Vec<f64>> = spec
        .alpha
        .values()
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let i = (k + 1) as f64;
            lattice_weights(b.q, depth, |t| {
                ln_weight_factor(big_q, t, b.r, a - i / b.rf())
                    .mul(LogVal::new(t).powi_ln(k as i32))
                    .value()
            })
        })
        .collect();
    let c = mehler_constant(spec)?;
    let rep = separable_product_integral(b.q, &weights, z, |u| Ok(cos_r(u, &b, tol)?.value))?;
    Ok(IntegrationReport {
        value: c * rep.value,
        terms_used: rep.terms_used,
        tail_estimate: c * rep.tail_estimate,
    })
}

/// Mehler integral through the generic iterated Jackson sum (reference route).
pub fn mehler_j_nested(spec: &BesselSpec, z: f64, tol: &Tolerance) -> QResult<IntegrationReport> {
    require_interior(spec)?;
    let b = spec.base;
    let c = mehler_constant(spec)?;
    let f = |t: &[f64]| {
        let w = weight_w(spec, t).unwrap_or(f64::NAN);
        let prod: f64 = t.iter().product();
        w * cos_r(z * prod, &b, tol).map(|s| s.value).unwrap_or(f64::NAN)
    };
    let rep = jackson_multi(&f, b.r as usize - 1, b.q, tol)?;
    Ok(IntegrationReport {
        value: c * rep.value,
        terms_used: rep.terms_used,
        tail_estimate: c * rep.tail_estimate,
    })
}

/// Closed form of `∫_0^1 t^{rm+i-1} (1 - Q t^r)_Q^{α_i - i/r} d_qt`.
pub fn mehler_moment(spec: &BesselSpec, i: usize, m: u64) -> QResult<f64> {
    let r = spec.base.r as f64;
    let big_q = spec.big_q();
    let a = spec.alpha.values()[i - 1];
    let x = i as f64 / r;
    Ok(ln_q_gamma(m as f64 + x, big_q)?
        .mul(ln_q_gamma(a - x + 1.0, big_q)?)
        .div(ln_q_gamma(a + m as f64 + 1.0, big_q)?)
        .value()
        / spec.base.r_q())
}

/// `V_p(t) = ∏ (1 - Q t_i^r)_Q^{p_i - 1} t_i^{r(α_i - i/r + 1)} t_i^{i-1}`.
pub fn weight_v(spec: &BesselSpec, shift: &SonineShift, t: &[f64]) -> QResult<f64> {
    let r = spec.base.r;
    if t.len() + 1 != r as usize || shift.p.len() + 1 != r as usize {
        return Err(QError::InvalidParameter("weight needs r-1 variables".into()));
    }
    let big_q = spec.big_q();
    let mut acc = LogVal::ONE;
    for (k, ((&a, &p), &ti)) in spec.alpha.values().iter().zip(&shift.p).zip(t).enumerate() {
        let i = (k + 1) as f64;
        let e = r as f64 * (a - i / r as f64 + 1.0) + i - 1.0;
        acc = acc
            .mul(ln_weight_factor(big_q, ti, r, p - 1.0))
            .scale_ln(e * ti.ln());
    }
    Ok(acc.value())
}

/// `D_{r,α,p} = (r)_q^{r-1} ∏ Γ_Q(α_i+p_i+1) / (Γ_Q(p_i) Γ_Q(α_i+1))`.
pub fn sonine_constant(spec: &BesselSpec, shift: &SonineShift) -> QResult<f64> {
    let big_q = spec.big_q();
    let mut acc = LogVal::new(spec.base.r_q().powi(spec.base.r as i32 - 1));
    for (&a, &p) in spec.alpha.values().iter().zip(&shift.p) {
        acc = acc
            .mul(ln_q_gamma(a + p + 1.0, big_q)?)
            .div(ln_q_gamma(p, big_q)?)
            .div(ln_q_gamma(a + 1.0, big_q)?);
    }
    Ok(acc.value())
}

/// Closed form of `∫_0^1 t^{rm} t^{rα_i + r - 1} (1 - Q t^r)_Q^{p_i - 1} d_qt`.
pub fn sonine_moment(spec: &BesselSpec, shift: &SonineShift, i: usize, m: u64) -> QResult<f64> {
    let big_q = spec.big_q();
    let a = spec.alpha.values()[i - 1];
    let p = shift.p[i - 1];
    Ok(ln_q_gamma(m as f64 + a + 1.0, big_q)?
        .mul(ln_q_gamma(p, big_q)?)
        .div(ln_q_gamma(m as f64 + a + p + 1.0, big_q)?)
        .value()
        / spec.base.r_q())
}

/// Sonine-type integral `D_{r,α,p} ∫ V_p(t) j_α(z t_1⋯t_{r-1}) d_qt`, equal to `j_{α+p}(z)`.
pub fn sonine_j(
    spec: &BesselSpec,
    shift: &SonineShift,
    z: f64,
    tol: &Tolerance,
) -> QResult<IntegrationReport> {
    if shift.p.len() + 1 != spec.base.r as usize {
        return Err(QError::InvalidParameter("shift needs r-1 entries".into()));
    }
    let b = spec.base;
    let big_q = spec.big_q();
    let depth = depth_for(b.q, tol);
    let weights: Vec<Vec<f64>> = spec
        .alpha
        .values()
        .iter()
        .zip(&shift.p)
        .enumerate()
        .map(|(k, (&a, &p))| {
            let i = (k + 1) as f64;
            let e = b.rf() * (a - i / b.rf() + 1.0) + i - 1.0;
            lattice_weights(b.q, depth, |t| {
                ln_weight_factor(big_q, t, b.r, p - 1.0)
                    .scale_ln(e * t.ln())
                    .value()
            })
        })
        .collect();
    let c = sonine_constant(spec, shift)?;
    let rep = separable_product_integral(b.q, &weights, z, |u| Ok(j_alpha(spec, u, tol)?.value))?;
    Ok(IntegrationReport {
        value: c * rep.value,
        terms_used: rep.terms_used,
        tail_estimate: c * rep.tail_estimate,
    })
}

/// Both sides of the derivative bound
/// `|D_q^n j_α(x)| ≤ ∏ Γ_Q(α_i+1)Γ_Q((n+i)/r) / (Γ_Q(i/r)Γ_Q(α_i+1+n/r)) · sup_k |D_q^n cos_r(x q^k)|`.
///
/// The supremum runs over the lattice points `x q^k`, `k ≥ 0`, reached by the
/// Mehler integral.
pub fn dqn_j_bound(spec: &BesselSpec, n: u32, x: f64, tol: &Tolerance) -> QResult<(f64, f64)> {
    require_interior(spec)?;
    if n >= 1 && x == 0.0 {
        return Err(QError::Domain("derivative bound needs x != 0 for n >= 1".into()));
    }
    let b = spec.base;
    let big_q = spec.big_q();
    let r = b.rf();
    let lhs = dqn_j_alpha(spec, n, x, tol)?.abs();
    let mut factor = LogVal::ONE;
    for (k, &a) in spec.alpha.values().iter().enumerate() {
        let i = (k + 1) as f64;
        factor = factor
            .mul(ln_q_gamma(a + 1.0, big_q)?)
            .mul(ln_q_gamma((n as f64 + i) / r, big_q)?)
            .div(ln_q_gamma(i / r, big_q)?)
            .div(ln_q_gamma(a + 1.0 + n as f64 / r, big_q)?);
    }
    let mut sup = 0.0f64;
    let mut k = 0;
    loop {
        let xk = x * b.q.powi(k);
        sup = sup.max(dqn_cos_r(&b, n, xk, tol)?.abs());
        if xk.abs() < 1e-12 || k > 4000 {
            break;
        }
        k += 1;
    }
    if x == 0.0 {
        sup = sup.max(dqn_cos_r(&b, n, 0.0, tol)?.abs());
    }
    Ok((lhs, factor.value() * sup))
}

/// Largest value of `b_{rn,α}(1) / ((Q^{-|α|/r})^n (e/(n (r)_q))^{rn+|α|})`
/// over `1 ≤ n ≤ n_max`: the measured constant of the growth bound.
pub fn growth_constant(spec: &BesselSpec, n_max: u64) -> f64 {
    let b = spec.base;
    let big_q = spec.big_q();
    let abs_a = spec.alpha.abs_alpha();
    (1..=n_max)
        .map(|n| {
            let nf = n as f64;
            let ln_bound = -abs_a / b.rf() * nf * big_q.ln()
                + (b.rf() * nf + abs_a) * (1.0 - (nf * b.r_q()).ln());
            (spec.ln_b_coeff(n) - ln_bound).exp()
        })
        .fold(0.0, f64::max)
}

/// `ln [n over k]_q` re-exported for callers assembling stencils.
pub fn ln_gauss_binomial(n: u64, k: u64, q: f64) -> f64 {
    ln_q_binomial(n, k, q)
}
