//! Heat polynomials, the fundamental solution of `B_{r,δ} u = D_{q^r,t} u`,
//! the solver built on `T^α`, and expansions in heat polynomials.

use crate::error::{QError, QResult};
use crate::qbessel::{apply_b, j_alpha, BesselSpec};
use crate::qcalc::{jackson_0_inf, IntegrationReport, LatticeFunction, Window};
use crate::qcore::{ln_q_factorial, ln_q_gamma, q_number, q_rising, Tolerance};
use crate::qspecial::{e_q, e_q_product, phi_delta, HyperSpec};
use crate::series::{c2, sum_terms, LogVal, SeriesEval};
use num_complex::Complex64;
use std::cell::RefCell;

/// Nominal infinite strip radii are reported as this value.
pub const STRIP_CAP: f64 = 1e12;

/// A Bessel family together with the distinguished index `k` of the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatPolySpec {
    spec: BesselSpec,
    k_index: usize,
    d_cache: Vec<f64>,
}

impl HeatPolySpec {
    pub fn new(spec: BesselSpec, k_index: usize) -> QResult<Self> {
        let r = spec.base().r as usize;
        if k_index < 1 || k_index >= r {
            return Err(QError::InvalidParameter(format!(
                "k_index must lie in 1..{}, got {k_index}",
                r - 1
            )));
        }
        let d_cache = (0..=64).map(|n| if n == 0 { 1.0 } else { spec.d_ratio(n) }).collect();
        Ok(HeatPolySpec {
            spec,
            k_index,
            d_cache,
        })
    }

    pub fn spec(&self) -> &BesselSpec {
        &self.spec
    }

    pub fn k_index(&self) -> usize {
        self.k_index
    }

    /// `α_k`.
    pub fn alpha_k(&self) -> f64 {
        self.spec.alpha().values()[self.k_index - 1]
    }

    /// `d_{rn} = α_{rn}/α_{r(n-1)}`.
    pub fn d_ratio(&self, n: u64) -> f64 {
        match self.d_cache.get(n as usize) {
            Some(&d) => d,
            None => self.spec.d_ratio(n),
        }
    }

    fn q_big(&self) -> f64 {
        self.spec.big_q()
    }

    fn r(&self) -> u32 {
        self.spec.base().r
    }

    fn delta(&self) -> f64 {
        self.spec.base().delta
    }

    fn r_q(&self) -> f64 {
        self.spec.base().r_q()
    }
}

fn signed_pow(x: f64, e: u64) -> LogVal {
    if e == 0 {
        LogVal::ONE
    } else {
        LogVal::new(x).powi_ln(e as i32)
    }
}

/// `p_n^α(x,t) = Σ_k (Q^δ)^{C(n-k,2)} x^{r(n-k)} t^k/[k]_Q! · α_{rn}/α_{r(n-k)}`.
pub fn heat_poly(h: &HeatPolySpec, n: u64, x: f64, t: f64) -> f64 {
    let big_q = h.q_big();
    let lq = big_q.ln();
    let r = h.r() as u64;
    let ln_an = h.spec.ln_alpha_norm(n);
    (0..=n)
        .map(|k| {
            let j = n - k;
            let xs = signed_pow(x, r * j);
            let ts = signed_pow(t, k);
            if xs.is_zero() || ts.is_zero() {
                return 0.0;
            }
            xs.mul(ts)
                .scale_ln(h.delta() * c2(j as i64) * lq - ln_q_factorial(k, big_q) + ln_an - h.spec.ln_alpha_norm(j))
                .value()
        })
        .sum()
}

/// `p_n^α` through the terminating δ-deformed series
/// `α_{rn}/[n]_Q! t^n Σ_k (Q^{δ-1})^{C(k,2)} (-n)_k/∏(α_i+1)_k · z^k/[k]_Q!`,
/// `z = -Q^n x^r/((r)_q^r t)`.
pub fn heat_poly_phi(h: &HeatPolySpec, n: u64, x: f64, t: f64, tol: &Tolerance) -> QResult<f64> {
    if t == 0.0 {
        return Err(QError::Domain("hypergeometric form needs t != 0".into()));
    }
    let big_q = h.q_big();
    let r = h.r();
    let hs = HyperSpec::new(
        vec![-(n as f64)],
        h.spec.alpha().values().iter().map(|a| a + 1.0).collect(),
        h.delta() - 1.0,
        big_q,
    )?;
    let z = -big_q.powi(n as i32) * x.powi(r as i32) / (h.r_q().powi(r as i32) * t);
    let s = phi_delta(&hs, z, tol)?.value;
    let pre = LogVal::ONE
        .scale_ln(h.spec.ln_alpha_norm(n) - ln_q_factorial(n, big_q))
        .mul(signed_pow(t, n));
    Ok(pre.value() * s)
}

/// Both sides of the generating function, truncated at `n_terms`:
/// `e_Q(-z^r t) j_α(xz)` and `Σ_{n<n_terms} (-1)^n z^{rn}/α_{rn} p_n^α(x,t)`.
pub fn heat_gen_check(
    h: &HeatPolySpec,
    z: f64,
    x: f64,
    t: f64,
    n_terms: u64,
    tol: &Tolerance,
) -> QResult<(f64, f64)> {
    let big_q = h.q_big();
    let r = h.r();
    let w = z.powi(r as i32) * t;
    if w.abs() * (1.0 - big_q) >= 1.0 {
        return Err(QError::Radius(format!(
            "|z^r t| = {} exceeds the radius 1/(1-q^r) = {}",
            w.abs(),
            1.0 / (1.0 - big_q)
        )));
    }
    let lhs = e_q(-w, big_q, tol)? * j_alpha(&h.spec, x * z, tol)?.value;
    let rhs = (0..n_terms)
        .map(|n| {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let c = signed_pow(z, r as u64 * n).scale_ln(-h.spec.ln_alpha_norm(n));
            sign * c.value() * heat_poly(h, n, x, t)
        })
        .sum();
    Ok((lhs, rhs))
}

/// Taylor coefficients in `w = z^r` of `e_Q(-wt) j_α(x w^{1/r})`, `n < count`,
/// extracted by a discrete Cauchy integral on `|w| = ρ`.
pub fn gen_coefficients(
    h: &HeatPolySpec,
    x: f64,
    t: f64,
    count: usize,
    tol: &Tolerance,
) -> QResult<Vec<f64>> {
    let big_q = h.q_big();
    let r = h.r();
    let rho = if t == 0.0 { 2.0 } else { (0.5 / ((1.0 - big_q) * t.abs())).min(2.0) };
    let m = (4 * count).max(64);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); count];
    for k in 0..m {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
        let w = Complex64::from_polar(rho, theta);
        let z = Complex64::from_polar(rho.powf(1.0 / r as f64), theta / r as f64);
        let e = e_q_product(-w * t, big_q)?;
        let j = j_alpha(&h.spec, z * x, tol)?.value;
        let f = e * j;
        for (n, c) in coeffs.iter_mut().enumerate() {
            *c += f * Complex64::from_polar(rho.powi(-(n as i32)), -theta * n as f64);
        }
    }
    Ok(coeffs.into_iter().map(|c| c.re / m as f64).collect())
}

/// `I(α_k+1; Q) = ∫_0^∞ e_Q(-x) x^{α_k} d_Qx`.
pub fn i_integral(h: &HeatPolySpec, tol: &Tolerance) -> QResult<IntegrationReport> {
    let big_q = h.q_big();
    let a = h.alpha_k();
    if !(a > -1.0) {
        return Err(QError::InvalidParameter("I needs alpha_k > -1".into()));
    }
    let f = |x: f64| e_q_product(-x, big_q).unwrap_or(f64::NAN) * x.powf(a);
    jackson_0_inf(&f, big_q, tol)
}

/// `H_Q(α_k+1) = I(α_k+1; Q)/Γ_Q(α_k+1)`.
pub fn h_norm(h: &HeatPolySpec, tol: &Tolerance) -> QResult<f64> {
    let i = i_integral(h, tol)?.value;
    Ok(i / ln_q_gamma(h.alpha_k() + 1.0, h.q_big())?.value())
}

/// `∫_0^∞ e_Q(-c x^r) c^n x^{rn} x^{rα_k+r-1} d_qx`, summed on the lattice.
pub fn moment_integral(h: &HeatPolySpec, n: u32, c: f64, tol: &Tolerance) -> QResult<IntegrationReport> {
    let big_q = h.q_big();
    let r = h.r() as f64;
    let a = h.alpha_k();
    let f = |x: f64| {
        let xr = x.powf(r);
        e_q_product(-c * xr, big_q).unwrap_or(f64::NAN)
            * (n as f64 * (c * xr).ln() + (r * a + r - 1.0) * x.ln()).exp()
    };
    jackson_0_inf(&f, h.spec.base().q, tol)
}

/// Closed form of the moment integral:
/// `Q^{-n(α_k+1)-C(n,2)} (α_k+1)_n^Q I(α_k+1; Q)/(c^{α_k+1} (r)_q)`.
pub fn moment_closed(h: &HeatPolySpec, n: u32, c: f64, tol: &Tolerance) -> QResult<f64> {
    let big_q = h.q_big();
    let a = h.alpha_k() + 1.0;
    let i = i_integral(h, tol)?.value;
    Ok(big_q.powf(-(n as f64) * a - c2(n as i64)) * q_rising(a, n as u64, big_q) * i
        / (c.powf(a) * h.r_q()))
}

/// `dη(y) = y^{rα_k+r-1}/((r)_q^{α_k} Γ_Q(α_k+1)) d_qy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaMeasure {
    pub k_index: usize,
    pub normalization: f64,
    exponent: f64,
}

impl EtaMeasure {
    pub fn new(h: &HeatPolySpec) -> QResult<Self> {
        let a = h.alpha_k();
        let normalization = h.r_q().powf(a) * ln_q_gamma(a + 1.0, h.q_big())?.value();
        Ok(EtaMeasure {
            k_index: h.k_index,
            normalization,
            exponent: h.r() as f64 * a + h.r() as f64 - 1.0,
        })
    }

    /// Density against `d_qy`.
    pub fn density(&self, y: f64) -> f64 {
        y.powf(self.exponent) / self.normalization
    }
}

fn kernel_checks(h: &HeatPolySpec, t: f64) -> QResult<()> {
    if !(h.delta() > 1.0) {
        return Err(QError::InvalidParameter("the heat kernel needs delta > 1".into()));
    }
    if !(t > 0.0) {
        return Err(QError::Domain(format!("the heat kernel needs t > 0, got {t}")));
    }
    Ok(())
}

/// Prefactor `H_Q(α_k+1)/(t (r)_q)^{α_k+1}`.
fn kernel_prefactor(h: &HeatPolySpec, t: f64, tol: &Tolerance) -> QResult<f64> {
    Ok(h_norm(h, tol)? / (t * h.r_q()).powf(h.alpha_k() + 1.0))
}

/// `K_{α_k}(x,t)` through the δ-deformed series with empty numerator list,
/// denominators `α_i+1` (`i ≠ k`) and argument `-x^r Q^{-(α_k+1)}/((r)_q^r t)`.
pub fn kernel_k(h: &HeatPolySpec, x: f64, t: f64, tol: &Tolerance) -> QResult<SeriesEval<f64>> {
    kernel_checks(h, t)?;
    let big_q = h.q_big();
    let r = h.r();
    let den = h
        .spec
        .alpha()
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| i + 1 != h.k_index)
        .map(|(_, a)| a + 1.0)
        .collect();
    let hs = HyperSpec::new(vec![], den, h.delta() - 1.0, big_q)?;
    let z = -x.powi(r as i32) * big_q.powf(-(h.alpha_k() + 1.0)) / (h.r_q().powi(r as i32) * t);
    let pre = kernel_prefactor(h, t, tol)?;
    Ok(phi_delta(&hs, z, tol)?.map(|v| pre * v))
}

/// `K_{α_k}(x,t)` from the explicit series
/// `Σ (-1)^n (q^δ)^{rC(n,2)} Q^{-(α_k+1)n-C(n,2)} x^{rn} t^{-n}/((r)_q^{rn} [n]_Q! ∏_{i≠k}(α_i+1)_n^Q)`.
pub fn kernel_k_series(h: &HeatPolySpec, x: f64, t: f64, tol: &Tolerance) -> QResult<SeriesEval<f64>> {
    kernel_checks(h, t)?;
    let b = h.spec.base();
    let big_q = h.q_big();
    let a = h.alpha_k() + 1.0;
    let r = b.r as u64;
    let pre = kernel_prefactor(h, t, tol)?;
    let others: Vec<f64> = h
        .spec
        .alpha()
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| i + 1 != h.k_index)
        .map(|(_, a)| a + 1.0)
        .collect();
    let s = sum_terms(
        "heat kernel series",
        3,
        |n| {
            let nn = n as u64;
            let mut ln = b.delta * b.rf() * c2(n as i64) * b.q.ln()
                - (a * n as f64 + c2(n as i64)) * big_q.ln()
                - (r * nn) as f64 * h.r_q().ln()
                - ln_q_factorial(nn, big_q);
            for &o in &others {
                ln -= q_rising(o, nn, big_q).ln();
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            Ok(signed_pow(x, r * nn)
                .mul(LogVal::new(t).powi_ln(-(n as i32)))
                .scale_ln(ln)
                .value()
                * sign)
        },
        tol,
    )?;
    Ok(s.map(|v| pre * v))
}

/// `K_{α_k}(x,t) = ∫_0^∞ e_Q(-t y^r) j_α(xy) dη(y)` summed on the lattice.
pub fn kernel_k_integral(h: &HeatPolySpec, x: f64, t: f64, tol: &Tolerance) -> QResult<IntegrationReport> {
    kernel_checks(h, t)?;
    let big_q = h.q_big();
    let r = h.r() as i32;
    let eta = EtaMeasure::new(h)?;
    let f = |y: f64| {
        let e = e_q_product(-t * y.powi(r), big_q).unwrap_or(f64::NAN);
        if e == 0.0 {
            return 0.0;
        }
        e * j_alpha(&h.spec, x * y, tol).map(|s| s.value).unwrap_or(f64::NAN) * eta.density(y)
    };
    jackson_0_inf(&f, h.spec.base().q, tol)
}

/// `κ_N(t)` with `K(·,t) = Σ_N κ_N(t) b_{rN,α}`:
/// `κ_N = H/(t(r)_q)^{α_k+1} (-1)^N Q^{-(α_k+1)N - C(N,2)} (α_k+1)_N^Q t^{-N}`.
fn kernel_coeffs(h: &HeatPolySpec, t: f64, count: usize, tol: &Tolerance) -> QResult<Vec<LogVal>> {
    let big_q = h.q_big();
    let a = h.alpha_k() + 1.0;
    let pre = LogVal::new(kernel_prefactor(h, t, tol)?);
    let mut out = Vec::with_capacity(count);
    let mut acc = pre;
    for n in 0..count {
        if n > 0 {
            let m = (n - 1) as f64;
            let step = -big_q.powf(-a - m) * q_number(a + m, big_q) / t;
            acc = acc.mul(LogVal::new(step));
        }
        out.push(acc);
    }
    Ok(out)
}

/// `T^α_y K(·,t)(x) = Σ_N κ_N(t) Σ_{m+j=N} b_{rj,α}(y) b_{rm,α}(x)`, using
/// `B^j b_{rN,α} = b_{r(N-j),α}`.
///
/// The double series converges for every `x, y` when `δ > 2` and diverges
/// otherwise unless `x` or `y` vanishes.
pub fn translated_kernel(h: &HeatPolySpec, y: f64, x: f64, t: f64, tol: &Tolerance) -> QResult<SeriesEval<f64>> {
    kernel_checks(h, t)?;
    if h.delta() <= 2.0 && x != 0.0 && y != 0.0 {
        // the diagonal terms behave like Q^{(δ/2 - 1) N^2 / 2}
        return Err(QError::nonconv("translated heat kernel (diverges for delta <= 2)", 0));
    }
    let cap = tol.max_terms.min(400);
    let kap = kernel_coeffs(h, t, cap, tol)?;
    let r = h.r() as u64;
    let ln_b = |n: u64, u: f64| -> LogVal {
        if n == 0 {
            LogVal::ONE
        } else {
            signed_pow(u, r * n).scale_ln(h.spec.ln_b_coeff(n))
        }
    };
    let bx: Vec<LogVal> = (0..cap as u64).map(|n| ln_b(n, x)).collect();
    let by: Vec<LogVal> = (0..cap as u64).map(|n| ln_b(n, y)).collect();
    let mut peak = 0.0f64;
    let s = sum_terms(
        "translated heat kernel",
        3,
        |n| {
            if n >= cap {
                return Err(QError::nonconv("translated heat kernel", cap));
            }
            let inner: f64 = (0..=n).map(|j| bx[n - j].mul(by[j]).value()).sum();
            let v = kap[n].mul(LogVal::new(inner)).value();
            peak = peak.max(v.abs());
            Ok(v)
        },
        tol,
    )?;
    let noise = 1e-15 * peak;
    Ok(SeriesEval {
        value: s.value,
        terms: s.terms,
        tail_bound: s.tail_bound + noise,
    })
}

/// Solution of problem (II):
/// `u(x,t) = ∫_0^∞ T^α_y K(·,t)(x) f(y) d_qy`.
pub fn solve_heat(
    h: &HeatPolySpec,
    f: &dyn LatticeFunction,
    x: f64,
    t: f64,
    tol: &Tolerance,
) -> QResult<SeriesEval<f64>> {
    kernel_checks(h, t)?;
    let err = RefCell::new(None);
    let tail = RefCell::new(0.0f64);
    let g = Forward {
        f,
        g: |y: f64| match translated_kernel(h, y, x, t, tol) {
            Ok(s) => {
                *tail.borrow_mut() += s.tail_bound * y.abs();
                s.value
            }
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
    };
    let rep = jackson_0_inf(&g, h.spec.base().q, tol);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    let rep = rep?;
    let q = h.spec.base().q;
    Ok(SeriesEval {
        value: rep.value,
        terms: rep.terms_used,
        tail_bound: rep.tail_estimate + (1.0 - q) * tail.into_inner(),
    })
}

/// `f · g` keeping the window and support of `f`.
struct Forward<'a, G: Fn(f64) -> f64> {
    f: &'a dyn LatticeFunction,
    g: G,
}

impl<G: Fn(f64) -> f64> LatticeFunction for Forward<'_, G> {
    fn eval(&self, x: f64) -> f64 {
        let v = self.f.eval(x);
        if v == 0.0 {
            0.0
        } else {
            v * (self.g)(x)
        }
    }
    fn window(&self) -> Option<Window> {
        self.f.window()
    }
    fn support(&self) -> Option<(f64, Vec<i64>)> {
        self.f.support()
    }
}

/// `D_{Q,t} u = (u(Qt) - u(t))/((Q - 1) t)`.
pub fn dq_t(u: impl Fn(f64) -> QResult<f64>, t: f64, big_q: f64) -> QResult<f64> {
    Ok((u(big_q * t)? - u(t)?) / ((big_q - 1.0) * t))
}

/// `B_{r,δ,x} u - D_{Q,t} u` for a function of `(x, t)`.
pub fn heat_residual(
    h: &HeatPolySpec,
    u: &dyn Fn(f64, f64) -> QResult<f64>,
    x: f64,
    t: f64,
) -> QResult<f64> {
    let err = RefCell::new(None);
    let ux = |y: f64| match u(y, t) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let bx = apply_b(&h.spec, &ux, x)?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    let dt = dq_t(|s| u(x, s), t, h.q_big())?;
    Ok(bx - dt)
}

/// `R^δ_{α,q}(x) = Σ (Q^{δ-1})^{C(n,2)} x^{rn}/((r)_q^{rn} ∏(α_i+1)_n^Q)`.
pub fn r_function(h: &HeatPolySpec, x: f64, tol: &Tolerance) -> QResult<SeriesEval<f64>> {
    let delta = h.delta();
    if delta < 1.0 {
        return Err(QError::InvalidParameter("R needs delta >= 1".into()));
    }
    let big_q = h.q_big();
    let r = h.r();
    let z = x.abs().powi(r as i32) / h.r_q().powi(r as i32);
    if delta == 1.0 && z * (1.0 - big_q).powi(r as i32 - 1) >= 1.0 {
        return Err(QError::Radius(format!(
            "R at delta = 1 needs |x|^r (1-q^r)^(r-1)/(r)_q^r < 1, got {}",
            z * (1.0 - big_q).powi(r as i32 - 1)
        )));
    }
    let hs = HyperSpec::new(
        vec![1.0],
        h.spec.alpha().values().iter().map(|a| a + 1.0).collect(),
        delta - 1.0,
        big_q,
    )?;
    phi_delta(&hs, z, tol)
}

/// Both sides of
/// `p_n(|x|,|t|)/α_{rn} ≤ s^n/[n]_Q! (1+|t|/s)^n R^δ(|x|/s^{1/r})`.
pub fn bound_lemma13(
    h: &HeatPolySpec,
    n: u64,
    x: f64,
    t: f64,
    s: f64,
    tol: &Tolerance,
) -> QResult<(f64, f64)> {
    if !(s > 0.0) {
        return Err(QError::InvalidParameter("s must be positive".into()));
    }
    let big_q = h.q_big();
    let lhs = heat_poly(h, n, x.abs(), t.abs()) / h.spec.alpha_norm(n);
    let rv = r_function(h, x.abs() / s.powf(1.0 / h.r() as f64), tol)?.value;
    let rhs = LogVal::new(s)
        .powi_ln(n as i32)
        .mul(LogVal::new(1.0 + t.abs() / s).powi_ln(n as i32))
        .scale_ln(-ln_q_factorial(n, big_q))
        .value()
        * rv;
    Ok((lhs, rhs))
}

/// Both sides of `p_n(x,t) ≥ α_{rn}/[n]_Q! t^n`.
pub fn bound_lemma14(h: &HeatPolySpec, n: u64, x: f64, t: f64) -> (f64, f64) {
    let lhs = heat_poly(h, n, x, t);
    let rhs = signed_pow(t, n)
        .scale_ln(h.spec.ln_alpha_norm(n) - ln_q_factorial(n, h.q_big()))
        .value();
    (lhs, rhs)
}

/// Value of `Σ a_n p_n` and of the derived series `Σ d_{rn} a_n p_{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionValue {
    pub value: f64,
    /// `Σ_{n≥1} d_{rn} a_n p_{n-1}(x,t)`, which equals both `B_x u` and `D_{Q,t} u`.
    pub derived: f64,
    /// Geometric ratio of the last two nonzero terms.
    pub ratio: f64,
    pub terms: usize,
}

/// `u(x,t) = Σ a_n p_n^α(x,t)` over the supplied coefficients.
///
/// Fails with the index of the first term where the trailing terms stop
/// decaying.
pub fn expand_direct(h: &HeatPolySpec, coeffs: &[f64], x: f64, t: f64) -> QResult<ExpansionValue> {
    let mut value = 0.0;
    let mut derived = 0.0;
    let mut mags = Vec::with_capacity(coeffs.len());
    for (n, &a) in coeffs.iter().enumerate() {
        if a == 0.0 {
            mags.push(0.0);
            continue;
        }
        let v = a * heat_poly(h, n as u64, x, t);
        value += v;
        mags.push(v.abs());
        if n >= 1 {
            derived += h.d_ratio(n as u64) * a * heat_poly(h, n as u64 - 1, x, t);
        }
        if !value.is_finite() || !derived.is_finite() {
            return Err(QError::NonConvergence {
                what: format!("heat expansion overflows at index {n}"),
                terms: n + 1,
            });
        }
    }
    let nz: Vec<(usize, f64)> = mags.iter().copied().enumerate().filter(|(_, m)| *m > 0.0).collect();
    let ratio = match nz.len() {
        0 | 1 => 0.0,
        k => {
            let (i1, m1) = nz[k - 2];
            let (i2, m2) = nz[k - 1];
            (m2 / m1).powf(1.0 / (i2 - i1) as f64)
        }
    };
    if nz.len() >= 4 {
        let tail = &nz[nz.len() - 3..];
        let scale = value.abs().max(f64::MIN_POSITIVE);
        if tail.iter().any(|(_, m)| *m > 1e-8 * scale) && ratio >= 1.0 {
            return Err(QError::NonConvergence {
                what: format!("heat expansion terms stop decaying at index {}", tail[0].0),
                terms: coeffs.len(),
            });
        }
    }
    Ok(ExpansionValue {
        value,
        derived,
        ratio,
        terms: coeffs.len(),
    })
}

/// Origin of a heat state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Direct,
    /// Entire initial datum of order `rho` and type `sigma`; `m` is the
    /// measured constant of the coefficient bound.
    Entire { rho: f64, sigma: f64, m: f64 },
}

/// Coefficients of a heat-polynomial expansion and its strip of validity `|t| < strip_radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatState {
    pub coeffs: Vec<f64>,
    pub strip_radius: f64,
    pub provenance: Provenance,
}

impl HeatState {
    pub fn direct(coeffs: Vec<f64>, strip_radius: f64) -> QResult<Self> {
        if coeffs.iter().any(|a| *a != 0.0) && !(strip_radius > 0.0) {
            return Err(QError::InvalidParameter("strip radius must be positive".into()));
        }
        Ok(HeatState {
            coeffs,
            strip_radius: strip_radius.min(STRIP_CAP),
            provenance: Provenance::Direct,
        })
    }

    /// `u(x,t)`; `t` must lie inside the strip.
    pub fn eval(&self, h: &HeatPolySpec, x: f64, t: f64) -> QResult<ExpansionValue> {
        if t.abs() >= self.strip_radius {
            return Err(QError::Domain(format!(
                "|t| = {} is outside the strip |t| < {}",
                t.abs(),
                self.strip_radius
            )));
        }
        expand_direct(h, &self.coeffs, x, t)
    }

    /// `u(x,0) = Σ a_n (Q^δ)^{C(n,2)} x^{rn}`.
    pub fn initial(&self, h: &HeatPolySpec, x: f64) -> f64 {
        let big_q = h.q_big();
        let r = h.r() as u64;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(n, a)| {
                a * signed_pow(x, r * n as u64)
                    .scale_ln(h.delta() * c2(n as i64) * big_q.ln())
                    .value()
            })
            .sum()
    }
}

/// Heat coefficients `a_n = c_n/(Q^δ)^{C(n,2)}` of the initial datum `Σ c_n x^{rn}`.
pub fn coeffs_from_initial(h: &HeatPolySpec, c: &[f64]) -> Vec<f64> {
    let lq = h.q_big().ln();
    c.iter()
        .enumerate()
        .map(|(n, &v)| v * (-h.delta() * c2(n as i64) * lq).exp())
        .collect()
}

/// Expansion of an entire datum of order `rho < r/(r-1)` and type `sigma`;
/// the strip is `|t| < 1/(σρ)^{r/ρ}`.
pub fn expand_entire(h: &HeatPolySpec, coeffs: Vec<f64>, rho: f64, sigma: f64) -> QResult<HeatState> {
    let r = h.r() as f64;
    let limit = r / (r - 1.0);
    if !(rho > 0.0 && rho < limit) {
        return Err(QError::OrderOutOfRange(format!(
            "order rho = {rho} must lie in (0, {limit})"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(QError::InvalidParameter(format!("type sigma = {sigma} must be positive and finite")));
    }
    let m = coeffs
        .iter()
        .enumerate()
        .map(|(n, a)| {
            if n == 0 {
                a.abs()
            } else {
                let nf = n as f64;
                let ln_bound = r * nf / rho * (std::f64::consts::E * sigma * rho / (r * nf)).ln();
                (a.abs().ln() - ln_bound).exp()
            }
        })
        .fold(0.0, f64::max);
    let constant = coeffs.iter().skip(1).all(|a| *a == 0.0);
    let strip_radius = if constant {
        STRIP_CAP
    } else {
        (1.0 / (sigma * rho).powf(r / rho)).min(STRIP_CAP)
    };
    Ok(HeatState {
        coeffs,
        strip_radius,
        provenance: Provenance::Entire { rho, sigma, m },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcalc::LatticeAtoms;
    use crate::qcore::{AlphaVector, QBase};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn hspec(q: f64, r: u32, delta: f64, alpha: &[f64], k: usize) -> HeatPolySpec {
        let s = BesselSpec::new(
            QBase::new(q, r, delta).unwrap(),
            AlphaVector::new(alpha.to_vec(), r).unwrap(),
        )
        .unwrap();
        HeatPolySpec::new(s, k).unwrap()
    }

    #[test]
    fn heat_poly_special_values() {
        let h = hspec(0.5, 2, 1.0, &[0.5], 1);
        assert_eq!(heat_poly(&h, 0, 0.7, 0.3), 1.0);
        let big_q = 0.25f64;
        for n in 0..6u64 {
            let v = heat_poly(&h, n, 0.0, 0.6);
            let e = h.spec().alpha_norm(n) * 0.6f64.powi(n as i32) / crate::qcore::q_factorial(n, big_q);
            assert!((v - e).abs() < 1e-13 * e);
            let v = heat_poly(&h, n, 0.8, 0.0);
            let e = big_q.powf(c2(n as i64)) * 0.8f64.powi(2 * n as i32);
            assert!((v - e).abs() < 1e-13 * e);
        }
        assert!(HeatPolySpec::new(h.spec().clone(), 2).is_err());
    }

    #[test]
    fn heat_poly_routes_agree() {
        let t = tol();
        for (r, alpha, delta) in [(2u32, vec![0.5], 1.0), (3, vec![0.2, 0.7], 2.0), (3, vec![0.0, 0.4], 1.0)] {
            let h = hspec(0.5, r, delta, &alpha, 1);
            for n in 0..=8 {
                for (x, tt) in [(0.5, 0.3), (1.0, 1.0), (1.3, -0.4)] {
                    let a = heat_poly(&h, n, x, tt);
                    let b = heat_poly_phi(&h, n, x, tt, &t).unwrap();
                    assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300), "r={r} n={n} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn heat_poly_solves_heat_equation() {
        for (r, alpha, delta) in [(2u32, vec![0.5], 1.0), (3, vec![0.2, 0.7], 3.0)] {
            let h = hspec(0.5, r, delta, &alpha, 1);
            for n in 0..=8u64 {
                let u = |x: f64, s: f64| Ok(heat_poly(&h, n, x, s));
                for (x, tt) in [(0.5, 0.25), (1.0, 1.0)] {
                    let res = heat_residual(&h, &u, x, tt).unwrap();
                    let scale = heat_poly(&h, n, x, tt).abs().max(1.0);
                    assert!(res.abs() <= 1e-8 * scale, "r={r} n={n} {res}");
                }
            }
        }
    }

    #[test]
    fn generating_function() {
        let t = tol();
        let h = hspec(0.5, 2, 1.0, &[0.3], 1);
        let (l, r) = heat_gen_check(&h, 0.0, 0.4, 0.4, 4, &t).unwrap();
        assert_eq!((l, r), (1.0, 1.0));
        let (l, r) = heat_gen_check(&h, 0.4, 0.4, 0.4, 16, &t).unwrap();
        assert!((l - r).abs() < 1e-9, "{l} {r}");
        assert!(matches!(heat_gen_check(&h, 2.0, 0.4, 1.0, 16, &t), Err(QError::Radius(_))));
        let c = gen_coefficients(&h, 0.7, 0.4, 11, &t).unwrap();
        for (n, cn) in c.iter().enumerate() {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let e = sign * heat_poly(&h, n as u64, 0.7, 0.4) / h.spec().alpha_norm(n as u64);
            assert!((cn - e).abs() < 1e-9 * e.abs().max(1e-6), "n={n} {cn} {e}");
        }
    }

    #[test]
    fn moment_identity() {
        let t = tol();
        for (q, r, a) in [(0.5, 2u32, 0.5), (0.6, 3, 0.3)] {
            let alpha = vec![a; r as usize - 1];
            let h = hspec(q, r, 2.0, &alpha, 1);
            let big_q = h.spec().big_q();
            for c in [big_q, 1.0, 1.0 / big_q] {
                for n in 0..=6 {
                    let lhs = moment_integral(&h, n, c, &t).unwrap().value;
                    let rhs = moment_closed(&h, n, c, &t).unwrap();
                    assert!((lhs - rhs).abs() < 1e-9 * rhs, "q={q} c={c} n={n} {lhs} {rhs}");
                }
            }
        }
    }

    #[test]
    fn moment_identity_off_the_coarse_lattice() {
        let t = tol();
        let h = hspec(0.5, 2, 2.0, &[0.5], 1);
        let lhs = moment_integral(&h, 1, 0.5, &t).unwrap().value;
        let rhs = moment_closed(&h, 1, 0.5, &t).unwrap();
        assert!((lhs - rhs).abs() > 1e-6 * rhs);
    }

    #[test]
    fn i_and_h() {
        let t = tol();
        let h = hspec(0.5, 2, 2.0, &[0.0], 1);
        let i = i_integral(&h, &t).unwrap().value;
        assert!((h_norm(&h, &t).unwrap() - i).abs() < 1e-14);
        let f = |x: f64| e_q_product(-x, 0.25).unwrap();
        let mut direct = 0.0;
        for k in -200..400 {
            let x = 0.25f64.powi(k);
            direct += 0.75 * x * f(x);
        }
        assert!((i - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn kernel_routes_agree() {
        let t = tol();
        for (r, alpha, delta) in [(2u32, vec![0.5], 2.0), (3, vec![0.2, 0.6], 2.0), (3, vec![0.2, 0.6], 3.0)] {
            for k in 1..r as usize {
                let h = hspec(0.5, r, delta, &alpha, k);
                for x in [0.0, 0.5, 1.0] {
                    let tt = 1.0;
                    let a = kernel_k(&h, x, tt, &t).unwrap().value;
                    let b = kernel_k_series(&h, x, tt, &t).unwrap().value;
                    let c = kernel_k_integral(&h, x, tt, &t).unwrap().value;
                    assert!((a - b).abs() < 1e-12 * a.abs(), "{a} {b}");
                    assert!((a - c).abs() < 1e-7 * a.abs(), "r={r} k={k} x={x} {a} {c}");
                }
            }
        }
        let h = hspec(0.5, 2, 2.0, &[0.5], 1);
        let k0 = kernel_k(&h, 0.0, 1.0, &t).unwrap().value;
        let k1 = kernel_k(&h, 0.0, 0.5, &t).unwrap().value;
        assert!((k0 / k1 - 0.5f64.powf(1.5)).abs() < 1e-13);
        assert!(kernel_k(&h, 0.5, 0.0, &t).is_err());
        let h1 = hspec(0.5, 2, 1.0, &[0.5], 1);
        assert!(kernel_k(&h1, 0.5, 1.0, &t).is_err());
    }

    #[test]
    fn kernel_solves_heat_equation() {
        let t = tol();
        for (r, alpha, delta) in [(2u32, vec![0.5], 2.0), (3, vec![0.2, 0.6], 3.0)] {
            let h = hspec(0.5, r, delta, &alpha, 1);
            let u = |x: f64, s: f64| Ok(kernel_k(&h, x, s, &t)?.value);
            for x in [0.25, 0.5, 1.0] {
                for tt in [1.0, h.spec().big_q()] {
                    let res = heat_residual(&h, &u, x, tt).unwrap();
                    let scale = kernel_k(&h, x, tt, &t).unwrap().value.abs().max(1.0);
                    assert!(res.abs() <= 1e-5 * scale, "r={r} x={x} t={tt} {res}");
                }
            }
        }
    }

    #[test]
    fn translated_kernel_is_symmetric_and_reduces() {
        let t = tol();
        let h = hspec(0.5, 2, 3.0, &[0.5], 1);
        let a = translated_kernel(&h, 0.5, 0.25, 1.0, &t).unwrap().value;
        let b = translated_kernel(&h, 0.25, 0.5, 1.0, &t).unwrap().value;
        assert!((a - b).abs() < 1e-14 * a.abs());
        let k = kernel_k(&h, 0.5, 1.0, &t).unwrap().value;
        let z = translated_kernel(&h, 0.0, 0.5, 1.0, &t).unwrap().value;
        assert!((k - z).abs() < 1e-12 * k.abs());
        let h2 = hspec(0.5, 2, 1.5, &[0.5], 1);
        assert!(matches!(
            translated_kernel(&h2, 0.5, 0.25, 1.0, &t),
            Err(QError::NonConvergence { .. })
        ));
        assert!(translated_kernel(&h2, 0.0, 0.25, 1.0, &t).is_ok());
    }

    #[test]
    fn solver_residuals() {
        let t = tol();
        for (r, alpha) in [(2u32, vec![0.5]), (3, vec![0.2, 0.6])] {
            let h = hspec(0.5, r, 3.0, &alpha, 1);
            let atom = LatticeAtoms::new(0.5, [(1, 1.0)]);
            let smooth = LatticeAtoms::new(0.5, (0..8).map(|k| {
                let y = 0.5f64.powi(k);
                (k as i64, y * y * (-y).exp())
            }));
            let zero = LatticeAtoms::new(0.5, []);
            assert_eq!(solve_heat(&h, &zero, 0.5, 1.0, &t).unwrap().value, 0.0);
            let direct = translated_kernel(&h, 0.5, 0.25, 1.0, &t).unwrap().value * 0.5 * 0.5;
            let v = solve_heat(&h, &atom, 0.25, 1.0, &t).unwrap().value;
            assert!((v - direct).abs() < 1e-14 * direct.abs());
            for f in [&atom, &smooth] {
                let u = |x: f64, s: f64| Ok(solve_heat(&h, f, x, s, &t)?.value);
                for x in [0.25, 0.5, 1.0] {
                    for tt in [1.0, h.spec().big_q()] {
                        let res = heat_residual(&h, &u, x, tt).unwrap();
                        let scale = u(x, tt).unwrap().abs().max(1.0);
                        assert!(res.abs() <= 1e-5 * scale, "r={r} x={x} t={tt} {res}");
                    }
                }
            }
        }
    }

    #[test]
    fn solver_does_not_approach_initial_data() {
        let t = tol();
        let h = hspec(0.5, 2, 3.0, &[0.5], 1);
        let f = LatticeAtoms::new(0.5, (0..10).map(|k| {
            let y = 0.5f64.powi(k);
            (k as i64, y * y * (-y).exp())
        }));
        let x = 0.5;
        let mut prev = 0.0;
        for m in 0..4 {
            let v = solve_heat(&h, &f, x, 0.25f64.powi(m), &t).unwrap();
            assert!(v.tail_bound < 1e-12 * v.value.abs());
            assert!(v.value.abs() > prev);
            prev = v.value.abs();
        }
        assert!(prev > 1e6 * f.eval(x));
    }

    #[test]
    fn r_function_properties() {
        let t = tol();
        let h = hspec(0.5, 2, 1.0, &[0.5], 1);
        assert_eq!(r_function(&h, 0.0, &t).unwrap().value, 1.0);
        let mut prev = 1.0;
        for x in [0.25, 0.5, 1.0, 1.5] {
            let v = r_function(&h, x, &t).unwrap().value;
            assert!(v > prev);
            prev = v;
        }
        let mut direct = 0.0;
        for n in 0..200u64 {
            let mut den = 1.5f64.powi(2 * n as i32);
            den *= q_rising(1.5, n, 0.25);
            direct += 1.0 / den;
        }
        assert!((r_function(&h, 1.0, &t).unwrap().value - direct).abs() < 1e-13 * direct);
        let h2 = hspec(0.5, 2, 2.0, &[0.5], 1);
        assert!(r_function(&h2, 1.0, &t).unwrap().value <= direct);
        assert!(matches!(r_function(&h, 10.0, &t), Err(QError::Radius(_))));
    }

    #[test]
    fn lemma_bounds() {
        let t = tol();
        let h = hspec(0.5, 2, 1.0, &[0.5], 1);
        let (l, r) = bound_lemma13(&h, 0, 1.0, 0.5, 1.0, &t).unwrap();
        assert_eq!(l, 1.0);
        assert!(r >= 1.0);
        let (l, r) = bound_lemma13(&h, 4, 1.0, 0.5, 1.0, &t).unwrap();
        assert!(l <= r);
        let (l, r) = bound_lemma14(&h, 3, 0.0, 0.5);
        assert!((l - r).abs() <= 1e-15 * r);
        let h3 = hspec(0.6, 3, 1.0, &[0.2, 0.5], 1);
        let (l, r) = bound_lemma14(&h3, 3, 0.5, 0.5);
        assert!(l >= r);
        assert_eq!(bound_lemma14(&h3, 0, 0.5, 0.5), (1.0, 1.0));
    }

    #[test]
    fn expansions() {
        let t = tol();
        let h = hspec(0.5, 2, 1.0, &[0.3], 1);
        let v = expand_direct(&h, &[1.0], 0.7, 0.4).unwrap();
        assert_eq!(v.value, 1.0);
        let z = 0.8f64;
        let coeffs: Vec<f64> = (0..30u64)
            .map(|n| {
                let s = if n % 2 == 0 { 1.0 } else { -1.0 };
                s * z.powi(2 * n as i32) / h.spec().alpha_norm(n)
            })
            .collect();
        let (x, tt) = (0.7, 0.4);
        let v = expand_direct(&h, &coeffs, x, tt).unwrap();
        let e = e_q(-z * z * tt, 0.25, &t).unwrap() * j_alpha(h.spec(), x * z, &t).unwrap().value;
        assert!((v.value - e).abs() < 1e-12);
        assert!(v.ratio < 1.0);
        let u = |xx: f64, s: f64| Ok(expand_direct(&h, &coeffs, xx, s)?.value);
        let dt = dq_t(|s| u(x, s), tt, 0.25).unwrap();
        assert!((dt - v.derived).abs() < 1e-10);
        let bad: Vec<f64> = (0..30).map(|n| 10f64.powi(n)).collect();
        assert!(expand_direct(&h, &bad, 1.0, 1.0).is_err());
    }

    #[test]
    fn entire_states() {
        let h = hspec(0.5, 2, 1.0, &[0.3], 1);
        let st = expand_entire(&h, vec![1.0], 1.0, 1.0).unwrap();
        assert_eq!(st.strip_radius, STRIP_CAP);
        assert!(matches!(expand_entire(&h, vec![1.0], 2.0, 1.0), Err(QError::OrderOutOfRange(_))));
        let sigma = 0.5;
        let rho = 1.0;
        let c: Vec<f64> = (0..25).map(|n| 1.0 / crate::qcore::q_factorial(2 * n, 1.0 - 1e-12).max(1.0)).collect();
        let a = coeffs_from_initial(&h, &c);
        let st = expand_entire(&h, a, rho, sigma).unwrap();
        assert!((st.strip_radius - 1.0 / (sigma * rho).powf(2.0 / rho)).abs() < 1e-12);
        for x in [0.25f64, 0.5, 1.0] {
            let f: f64 = c.iter().enumerate().map(|(n, cn)| cn * x.powi(2 * n as i32)).sum();
            let u0 = st.eval(&h, x, 0.0).unwrap().value;
            assert!((u0 - f).abs() < 1e-7 * f.abs());
            assert!((st.initial(&h, x) - f).abs() < 1e-12 * f.abs());
        }
        assert!(st.eval(&h, 0.5, 10.0).is_err());
    }
}
