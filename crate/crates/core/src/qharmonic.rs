//! q-Fourier transforms, the translation operators `τ_{x,q^δ}` and
//! `T^α_{x,q^δ}`, their lattice transposes and the two convolution products.

use crate::error::{QError, QResult};
use crate::qbessel::{j_alpha, BesselSpec};
use crate::qcalc::{jackson_0_inf, lattice_exponent, IntegrationReport, LatticeAtoms, LatticeFunction, Window};
use crate::qcore::{ln_q_binomial, ln_q_factorial, QBase, Tolerance};
use crate::qspecial::{cos_r, STENCIL_NOISE};
use crate::series::{c2, LogVal, STOP_RUN};
use crate::stencil::{OperatorShape, PowerStencil};
use std::cell::RefCell;
use std::collections::BTreeMap;

/// Default truncation of the translation series.
pub const DEFAULT_N_MAX: u32 = 24;

/// Series length used by the default plans: `DEFAULT_N_MAX`, raised to
/// `8/(1-q)` for bases close to 1 and capped at 200.
pub fn default_n_max(q: f64) -> u32 {
    (8.0 / (1.0 - q)).ceil().clamp(DEFAULT_N_MAX as f64, 200.0) as u32
}

/// Value of a transform at a lattice point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformResult {
    pub value: f64,
    pub lambda: f64,
    pub report: IntegrationReport,
}

/// `f · g` forwarding the window and support of `f`.
struct Weighted<'a, G: Fn(f64) -> f64> {
    f: &'a dyn LatticeFunction,
    g: G,
}

impl<G: Fn(f64) -> f64> LatticeFunction for Weighted<'_, G> {
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

fn check_lambda(lambda: f64, q: f64) -> QResult<()> {
    if lambda == 0.0 || lattice_exponent(lambda.abs(), q).is_some() {
        Ok(())
    } else {
        Err(QError::Domain(format!("lambda = {lambda} is not a lattice point")))
    }
}

/// `F_{q^δ}(f)(λ) = ∫_0^∞ f(t) j_α(λt) d_qt`.
pub fn fourier(
    spec: &BesselSpec,
    f: &dyn LatticeFunction,
    lambda: f64,
    tol: &Tolerance,
) -> QResult<TransformResult> {
    let q = spec.base().q;
    check_lambda(lambda, q)?;
    let kernel = |t: f64| j_alpha(spec, lambda * t, tol).map(|s| s.value).unwrap_or(f64::NAN);
    let report = jackson_0_inf(&Weighted { f, g: kernel }, q, tol)?;
    finish(lambda, report)
}

/// `F_{0,q^δ}(f)(λ) = ∫_0^∞ f(t) cos_r(λt) d_qt`.
pub fn fourier0(
    base: &QBase,
    f: &dyn LatticeFunction,
    lambda: f64,
    tol: &Tolerance,
) -> QResult<TransformResult> {
    check_lambda(lambda, base.q)?;
    let kernel = |t: f64| cos_r(lambda * t, base, tol).map(|s| s.value).unwrap_or(f64::NAN);
    let report = jackson_0_inf(&Weighted { f, g: kernel }, base.q, tol)?;
    finish(lambda, report)
}

fn finish(lambda: f64, report: IntegrationReport) -> QResult<TransformResult> {
    if !report.value.is_finite() {
        return Err(QError::nonconv("Fourier integral", report.terms_used));
    }
    Ok(TransformResult {
        value: report.value,
        lambda,
        report,
    })
}

/// `(Λ_{q^δ}^{-1} D_q^r)^n f(x)` as the closed finite sum
/// `q^{-C(rn,2)} (q^{δr})^{-C(n,2)} / ((1-q)^{rn} (q^{-δn}x)^{rn})
/// Σ_k (-1)^k [rn, k]_q q^{C(rn-k,2)} f(q^{k-δn} x)`.
pub fn lambda_dqr_n(base: &QBase, f: &dyn LatticeFunction, x: f64, n: u32) -> QResult<f64> {
    if n == 0 {
        return Ok(f.eval(x));
    }
    if x == 0.0 {
        return Err(QError::Domain("difference operator at x = 0".into()));
    }
    let q = base.q;
    let lq = q.ln();
    let rn = (base.r * n) as u64;
    let shift = q.powf(-base.delta * n as f64);
    let pre = LogVal::from_ln(
        -c2(rn as i64) * lq - base.delta * base.rf() * c2(n as i64) * lq - rn as f64 * (1.0 - q).ln(),
        1.0,
    )
    .mul(LogVal::new(shift * x).powi_ln(-(rn as i32)));
    let mut sum = 0.0;
    for k in 0..=rn {
        let fv = f.eval(q.powi(k as i32) * shift * x);
        if fv == 0.0 {
            continue;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let c = LogVal::from_ln(ln_q_binomial(rn, k, q) + c2((rn - k) as i64) * lq, sign);
        sum += pre.mul(c).mul(LogVal::new(fv)).value();
    }
    Ok(sum)
}

/// Which operator a translation series uses.
#[derive(Debug, Clone, PartialEq)]
pub enum TranslationKind {
    /// `τ`, built on `Λ_{q^δ}^{-1} D_q^r` and `b_{rn}`.
    Tau(QBase),
    /// `T^α`, built on `B_{r,δ}` and `b_{rn,α}`.
    Bessel(BesselSpec),
}

/// Placement of the two arguments in `Σ b_n(u) Op^n f(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranslationOrder {
    /// `u` is the argument of smaller modulus; uses the symmetry in `(x, y)`.
    Auto,
    /// Literal definition: `u = y`, `v = x` for `τ_x f(y)`;
    /// `u = x`, `v = y` for `T^α_x f(y)`.
    Given,
}

/// Truncated translation series with cached operator-power stencils.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationPlan {
    pub kind: TranslationKind,
    pub n_max: u32,
    pub order: TranslationOrder,
    stencils: Vec<PowerStencil>,
}

/// Value of a translation together with its convergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationValue {
    pub value: f64,
    pub terms: usize,
    /// Last kept term plus the round-off bound of the kept terms. Terms below
    /// their own round-off level are dropped.
    pub tail: f64,
}

impl TranslationPlan {
    pub fn new(kind: TranslationKind, n_max: u32, order: TranslationOrder) -> QResult<Self> {
        if n_max < 1 {
            return Err(QError::InvalidParameter("n_max must be at least 1".into()));
        }
        let shape = match &kind {
            TranslationKind::Tau(b) => OperatorShape::lambda_dqr(b.q, b.r, b.delta),
            TranslationKind::Bessel(s) => s.operator_shape(),
        };
        let mut stencils = Vec::with_capacity(n_max as usize + 1);
        let mut acc = PowerStencil::identity(&shape);
        stencils.push(acc.clone());
        for _ in 0..n_max {
            acc.push_factor(&shape);
            stencils.push(acc.clone());
        }
        Ok(TranslationPlan {
            kind,
            n_max,
            order,
            stencils,
        })
    }

    pub fn tau(base: QBase) -> Self {
        TranslationPlan::new(TranslationKind::Tau(base), default_n_max(base.q), TranslationOrder::Auto)
            .expect("default plan")
    }

    pub fn bessel(spec: BesselSpec) -> Self {
        let n_max = default_n_max(spec.base().q);
        TranslationPlan::new(TranslationKind::Bessel(spec), n_max, TranslationOrder::Auto)
            .expect("default plan")
    }

    pub fn base(&self) -> QBase {
        match &self.kind {
            TranslationKind::Tau(b) => *b,
            TranslationKind::Bessel(s) => *s.base(),
        }
    }

    /// Stencil of `Op^n`.
    pub fn stencil(&self, n: u32) -> &PowerStencil {
        &self.stencils[n as usize]
    }

    /// `ln b_n(1)` of the series coefficient.
    fn ln_b(&self, n: u32) -> f64 {
        match &self.kind {
            TranslationKind::Tau(b) => {
                b.delta * b.rf() * c2(n as i64) * b.q.ln() - ln_q_factorial((b.r * n) as u64, b.q)
            }
            TranslationKind::Bessel(s) => s.ln_b_coeff(n as u64),
        }
    }

    /// `b_n(u)` in log form.
    pub fn coeff(&self, n: u32, u: f64) -> LogVal {
        if n == 0 {
            return LogVal::ONE;
        }
        let r = self.base().r;
        LogVal::new(u).powi_ln((r * n) as i32).scale_ln(self.ln_b(n))
    }

    /// `Σ_n b_n(u) Op^n f(v)` with the adaptive stop.
    pub fn series(&self, f: &dyn LatticeFunction, u: f64, v: f64, tol: &Tolerance) -> QResult<TranslationValue> {
        let mut sum = f.eval(v);
        if u == 0.0 {
            return Ok(TranslationValue {
                value: sum,
                terms: 1,
                tail: 0.0,
            });
        }
        let mut run = 0;
        let mut noise = 0.0;
        let mut last = 0.0f64;
        for n in 1..=self.n_max {
            let (t, abs) = self.stencils[n as usize].apply_scaled(f, v, self.coeff(n, u))?;
            if abs == 0.0 {
                continue;
            }
            let floor = tol.abs_tol.max(tol.rel_tol * sum.abs());
            if t.abs() <= STENCIL_NOISE * abs {
                run += 1;
            } else {
                sum += t;
                noise += f64::EPSILON * abs;
                last = t.abs();
                if t.abs() <= floor {
                    run += 1;
                } else {
                    run = 0;
                }
            }
            if run >= STOP_RUN {
                return Ok(TranslationValue {
                    value: sum,
                    terms: n as usize + 1,
                    tail: last + noise,
                });
            }
        }
        Err(QError::nonconv(
            "translation series",
            self.n_max as usize + 1,
        ))
        .or_else(|e| {
            if last <= 1e-12 * sum.abs().max(1.0) {
                Ok(TranslationValue {
                    value: sum,
                    terms: self.n_max as usize + 1,
                    tail: last + noise,
                })
            } else {
                Err(e)
            }
        })
    }

    /// Translation at `(x, y)` honoring the plan's ordering.
    pub fn translate(&self, f: &dyn LatticeFunction, x: f64, y: f64, tol: &Tolerance) -> QResult<TranslationValue> {
        let (u, v) = match (self.order, &self.kind) {
            (TranslationOrder::Auto, _) => {
                if x.abs() <= y.abs() {
                    (x, y)
                } else {
                    (y, x)
                }
            }
            (TranslationOrder::Given, TranslationKind::Tau(_)) => (y, x),
            (TranslationOrder::Given, TranslationKind::Bessel(_)) => (x, y),
        };
        self.series(f, u, v, tol)
    }
}

/// `τ_{x,q^δ}(f)(y) = Σ b_{rn}(y) (Λ_{q^δ}^{-1} D_q^r)^n f(x)`.
pub fn translate_tau(
    plan: &TranslationPlan,
    f: &dyn LatticeFunction,
    x: f64,
    y: f64,
    tol: &Tolerance,
) -> QResult<TranslationValue> {
    if !matches!(plan.kind, TranslationKind::Tau(_)) {
        return Err(QError::InvalidParameter("plan is not a tau plan".into()));
    }
    plan.translate(f, x, y, tol)
}

/// `T^α_{x,q^δ}(f)(y) = Σ b_{rn,α}(x) B_{r,δ}^n f(y)`.
pub fn translate_t_alpha(
    plan: &TranslationPlan,
    f: &dyn LatticeFunction,
    x: f64,
    y: f64,
    tol: &Tolerance,
) -> QResult<TranslationValue> {
    if !matches!(plan.kind, TranslationKind::Bessel(_)) {
        return Err(QError::InvalidParameter("plan is not a Bessel plan".into()));
    }
    plan.translate(f, x, y, tol)
}

/// The lattice transpose of the translation at `x`: the atom function `h` with
/// `∫ h g d_qy = ∫ f(y) (τ_x g)(y) d_qy` for every `g`.
///
/// With `τ_x g(y) = Σ b_n(y) Op^n g(x)`, `h` carries the moments
/// `∫ f b_n d_qy` onto the stencil points of `Op^n` at `x`. Needs `x` on the
/// lattice and an integer `δ`.
pub fn transpose(
    plan: &TranslationPlan,
    f: &dyn LatticeFunction,
    x: f64,
    tol: &Tolerance,
) -> QResult<LatticeAtoms> {
    let base = plan.base();
    let q = base.q;
    if base.delta.fract() != 0.0 {
        return Err(QError::Domain("transpose needs an integer delta".into()));
    }
    let kx = lattice_exponent(x, q)
        .ok_or_else(|| QError::Domain(format!("x = {x} is not a positive lattice point")))?;
    let d = base.delta as i64;
    let mut acc: BTreeMap<i64, f64> = BTreeMap::new();
    let mut run = 0;
    let mut total = 0.0f64;
    for n in 0..=plan.n_max {
        let moment = jackson_0_inf(&Weighted { f, g: |y: f64| plan.coeff(n, y).value() }, q, tol)?.value;
        if moment == 0.0 {
            run += 1;
            if run >= STOP_RUN {
                break;
            }
            continue;
        }
        let st = plan.stencil(n);
        let xs = LogVal::new(x).powi_ln(-((base.r * n) as i32));
        let mut size = 0.0;
        for k in 0..=st.order() {
            let e = kx + k as i64 - d * n as i64;
            let p = q.powi(e as i32);
            let c = st.coeff(k).mul(xs).mul(LogVal::new(moment)).value();
            size += c.abs();
            *acc.entry(e).or_insert(0.0) += c / ((1.0 - q) * p);
        }
        total += size;
        if size <= tol.abs_tol.max(tol.rel_tol * total) {
            run += 1;
            if run >= STOP_RUN {
                break;
            }
        } else {
            run = 0;
        }
    }
    acc.retain(|_, v| *v != 0.0);
    Ok(LatticeAtoms::new(q, acc))
}

/// `f ⋆_{q^δ} g(x) = ∫_0^∞ f(y) τ_x g(y) d_qy`.
pub fn convolve0(
    plan: &TranslationPlan,
    f: &dyn LatticeFunction,
    g: &dyn LatticeFunction,
    x: f64,
    tol: &Tolerance,
) -> QResult<f64> {
    convolve_with(plan, f, g, x, tol)
}

/// `f ⋆_{q^δ} g(x) = ∫_0^∞ (ᵗτ_x f)(y) g(y) d_qy`.
pub fn convolve0_transposed(
    plan: &TranslationPlan,
    f: &dyn LatticeFunction,
    g: &dyn LatticeFunction,
    x: f64,
    tol: &Tolerance,
) -> QResult<f64> {
    let h = transpose(plan, f, x, tol)?;
    let gh = Weighted { f: &h, g: |t: f64| g.eval(t) };
    Ok(jackson_0_inf(&gh, plan.base().q, tol)?.value)
}

/// `f ⋆_{α,q^δ} g(y) = ∫_0^∞ f(x) T^α_y g(x) d_qx`.
pub fn convolve_alpha(
    plan: &TranslationPlan,
    f: &dyn LatticeFunction,
    g: &dyn LatticeFunction,
    y: f64,
    tol: &Tolerance,
) -> QResult<f64> {
    if !matches!(plan.kind, TranslationKind::Bessel(_)) {
        return Err(QError::InvalidParameter("plan is not a Bessel plan".into()));
    }
    convolve_with(plan, f, g, y, tol)
}

fn convolve_with(
    plan: &TranslationPlan,
    f: &dyn LatticeFunction,
    g: &dyn LatticeFunction,
    x: f64,
    tol: &Tolerance,
) -> QResult<f64> {
    let err = RefCell::new(None);
    let value = {
        let tr = |y: f64| match plan.translate(g, x, y, tol) {
            Ok(v) => v.value,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        let w = Weighted { f, g: tr };
        jackson_0_inf(&w, plan.base().q, tol)
    };
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(value?.value)
}
