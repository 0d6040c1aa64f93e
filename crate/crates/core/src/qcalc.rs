//! q-derivatives, shifts and Jackson integrals on the geometric lattice.

use std::collections::BTreeMap;

use crate::error::{QError, QResult};
use crate::qcore::{ln_q_binomial, Tolerance};
use crate::series::{c2, LogVal, STOP_RUN};

/// Exponent bounds `[k_min, k_max]` of the lattice points `q^k` in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub k_min: i64,
    pub k_max: i64,
}

impl Window {
    pub const DEFAULT: Window = Window {
        k_min: -60,
        k_max: 200,
    };

    pub fn new(k_min: i64, k_max: i64) -> QResult<Self> {
        if k_min > k_max {
            return Err(QError::InvalidParameter(format!(
                "empty window [{k_min}, {k_max}]"
            )));
        }
        Ok(Window { k_min, k_max })
    }
}

impl Default for Window {
    fn default() -> Self {
        Window::DEFAULT
    }
}

/// Symmetry class under multiplication by the r-th roots of unity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    REven,
    ROdd(u32),
    None,
}

/// A real function sampled on the lattice `{q^k}`.
pub trait LatticeFunction {
    fn eval(&self, x: f64) -> f64;

    /// Hard window for improper sums; `None` lets the integrator adapt.
    fn window(&self) -> Option<Window> {
        None
    }

    fn parity(&self) -> Parity {
        Parity::None
    }

    /// Finite support as `(q, exponents)` when the function is a lattice atom sum.
    fn support(&self) -> Option<(f64, Vec<i64>)> {
        None
    }
}

impl<F: Fn(f64) -> f64> LatticeFunction for F {
    fn eval(&self, x: f64) -> f64 {
        self(x)
    }
}

/// A closure carrying an explicit window and parity tag.
pub struct FnLattice<F> {
    pub f: F,
    pub window: Option<Window>,
    pub parity: Parity,
}

impl<F: Fn(f64) -> f64> FnLattice<F> {
    pub fn new(f: F) -> Self {
        FnLattice {
            f,
            window: None,
            parity: Parity::None,
        }
    }

    pub fn with_window(mut self, w: Window) -> Self {
        self.window = Some(w);
        self
    }

    pub fn with_parity(mut self, p: Parity) -> Self {
        self.parity = p;
        self
    }
}

impl<F: Fn(f64) -> f64> LatticeFunction for FnLattice<F> {
    fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn window(&self) -> Option<Window> {
        self.window
    }
    fn parity(&self) -> Parity {
        self.parity
    }
}

/// A finitely supported function on `{q^k}`: value `v_k` at `q^k`, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeAtoms {
    pub q: f64,
    pub values: BTreeMap<i64, f64>,
}

impl LatticeAtoms {
    pub fn new(q: f64, values: impl IntoIterator<Item = (i64, f64)>) -> Self {
        LatticeAtoms {
            q,
            values: values.into_iter().collect(),
        }
    }

    /// Lattice exponent of `x` when `x` is within 1e-9 (relative) of some `q^k`.
    pub fn exponent_of(&self, x: f64) -> Option<i64> {
        lattice_exponent(x, self.q)
    }

    pub fn point(&self, k: i64) -> f64 {
        self.q.powi(k as i32)
    }
}

/// Lattice exponent `k` with `x ≈ q^k`, if any.
pub fn lattice_exponent(x: f64, q: f64) -> Option<i64> {
    if !(x > 0.0) {
        return None;
    }
    let k = (x.ln() / q.ln()).round();
    if (k.abs()) > 1e6 {
        return None;
    }
    let p = q.powi(k as i32);
    if (x - p).abs() <= 1e-9 * p {
        Some(k as i64)
    } else {
        None
    }
}

impl LatticeFunction for LatticeAtoms {
    fn eval(&self, x: f64) -> f64 {
        self.exponent_of(x)
            .and_then(|k| self.values.get(&k).copied())
            .unwrap_or(0.0)
    }

    fn support(&self) -> Option<(f64, Vec<i64>)> {
        Some((self.q, self.values.keys().copied().collect()))
    }
}

/// Result of a Jackson integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationReport {
    pub value: f64,
    pub terms_used: usize,
    pub tail_estimate: f64,
}

/// `D_q f(x) = (f(qx) - f(x)) / ((q - 1) x)`.
pub fn q_derivative(f: &dyn LatticeFunction, x: f64, q: f64) -> QResult<f64> {
    if x == 0.0 {
        return Err(QError::Domain("q-derivative at x = 0".into()));
    }
    Ok((f.eval(q * x) - f.eval(x)) / ((q - 1.0) * x))
}

/// Weights `w_k` with `D_q^n f(x) = Σ_k w_k f(q^k x)`.
pub fn q_derivative_stencil(x: f64, q: f64, n: u32) -> Vec<f64> {
    let nn = n as i64;
    let ln_pre = -c2(nn) * q.ln() - (n as f64) * ((1.0 - q).ln() + x.abs().ln());
    let pre_sign = if x < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
    (0..=nn)
        .map(|k| {
            let sign = if k % 2 == 0 { pre_sign } else { -pre_sign };
            let ln = ln_pre + ln_q_binomial(n as u64, k as u64, q) + c2(nn - k) * q.ln();
            LogVal::from_ln(ln, sign).value()
        })
        .collect()
}

/// n-th q-derivative through the q-binomial stencil.
pub fn q_derivative_n(f: &dyn LatticeFunction, x: f64, q: f64, n: u32) -> QResult<f64> {
    if n == 0 {
        return Ok(f.eval(x));
    }
    if x == 0.0 {
        return Err(QError::Domain("q-derivative at x = 0".into()));
    }
    let w = q_derivative_stencil(x, q, n);
    Ok(w
        .iter()
        .enumerate()
        .map(|(k, wk)| wk * f.eval(q.powi(k as i32) * x))
        .sum())
}

/// q-Leibniz rule `Σ_k [n over k]_q (D_q^{n-k} f)(q^k x) (D_q^k g)(x)`.
pub fn q_leibniz(
    f: &dyn LatticeFunction,
    g: &dyn LatticeFunction,
    x: f64,
    q: f64,
    n: u32,
) -> QResult<f64> {
    if x == 0.0 {
        return Err(QError::Domain("q-derivative at x = 0".into()));
    }
    let mut s = 0.0;
    for k in 0..=n {
        let c = ln_q_binomial(n as u64, k as u64, q).exp();
        s += c * q_derivative_n(f, q.powi(k as i32) * x, q, n - k)? * q_derivative_n(g, x, q, k)?;
    }
    Ok(s)
}

/// Direction of a lattice shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftDirection {
    Forward,
    Inverse,
}

/// `Λ_{q^δ} f(x) = f(q^δ x)` or `Λ_{q^δ}^{-1} f(x) = f(q^{-δ} x)`.
pub fn shift(f: &dyn LatticeFunction, x: f64, q: f64, delta: f64, dir: ShiftDirection) -> f64 {
    let s = match dir {
        ShiftDirection::Forward => q.powf(delta),
        ShiftDirection::Inverse => q.powf(-delta),
    };
    f.eval(s * x)
}

/// Running one-directional lattice sum with the geometric tail majorant.
struct LatticeSum {
    sum: f64,
    run: usize,
    prev: f64,
    terms: usize,
    tail: f64,
}

impl LatticeSum {
    fn new() -> Self {
        LatticeSum {
            sum: 0.0,
            run: 0,
            prev: 0.0,
            terms: 0,
            tail: f64::INFINITY,
        }
    }

    /// Adds a term; returns true once the tail is below tolerance.
    fn push(&mut self, t: f64, q: f64, tol: &Tolerance) -> QResult<bool> {
        self.sum += t;
        self.terms += 1;
        if !self.sum.is_finite() {
            return Err(QError::nonconv("Jackson integral", self.terms));
        }
        let a = t.abs();
        let rho = if self.prev > 0.0 { a / self.prev } else { q };
        let tail = if a == 0.0 {
            0.0
        } else if rho < 1.0 {
            (a / (1.0 - q)).max(a * rho / (1.0 - rho))
        } else {
            f64::INFINITY
        };
        self.prev = a;
        self.tail = tail;
        if tail <= tol.abs_tol.max(tol.rel_tol * self.sum.abs()) {
            self.run += 1;
        } else {
            self.run = 0;
        }
        Ok(self.run >= STOP_RUN)
    }
}

/// `∫_0^a f d_qx = (1 - q) Σ_{j≥0} a q^j f(a q^j)`.
pub fn jackson_0_a(
    f: &dyn LatticeFunction,
    a: f64,
    q: f64,
    tol: &Tolerance,
) -> QResult<IntegrationReport> {
    if !(a >= 0.0) {
        return Err(QError::Domain(format!("upper limit must be nonnegative, got {a}")));
    }
    if a == 0.0 {
        return Ok(IntegrationReport {
            value: 0.0,
            terms_used: 0,
            tail_estimate: 0.0,
        });
    }
    let mut acc = LatticeSum::new();
    let mut x = a;
    for _ in 0..tol.max_terms {
        if acc.push((1.0 - q) * x * f.eval(x), q, tol)? {
            return Ok(IntegrationReport {
                value: acc.sum,
                terms_used: acc.terms,
                tail_estimate: acc.tail,
            });
        }
        x *= q;
    }
    Err(QError::nonconv("Jackson integral on [0, a]", tol.max_terms))
}

/// `∫_{aq}^∞ f d_qt = (1 - q) Σ_{k≥0} a q^{-k} f(a q^{-k})`.
pub fn jackson_aq_inf(
    f: &dyn LatticeFunction,
    a: f64,
    q: f64,
    tol: &Tolerance,
) -> QResult<IntegrationReport> {
    if !(a > 0.0) {
        return Err(QError::Domain(format!("lower point must be positive, got {a}")));
    }
    let mut acc = LatticeSum::new();
    let mut x = a;
    for _ in 0..tol.max_terms {
        if acc.push((1.0 - q) * x * f.eval(x), q, tol)? {
            return Ok(IntegrationReport {
                value: acc.sum,
                terms_used: acc.terms,
                tail_estimate: acc.tail,
            });
        }
        x /= q;
        if !x.is_finite() {
            break;
        }
    }
    Err(QError::nonconv("Jackson integral on [aq, ∞)", acc.terms))
}

/// `∫_0^∞ f d_qt = (1 - q) Σ_{k∈ℤ} q^k f(q^k)`.
///
/// Atom functions are summed exactly over their support. Otherwise the sum
/// runs from `k = 0` downward to 0 and upward to ∞, each side stopping on its
/// tail estimate or failing at the function's window edge.
pub fn jackson_0_inf(
    f: &dyn LatticeFunction,
    q: f64,
    tol: &Tolerance,
) -> QResult<IntegrationReport> {
    if let Some((qs, ks)) = f.support() {
        if (qs - q).abs() <= 1e-14 * q {
            let value = ks
                .iter()
                .map(|&k| {
                    let x = q.powi(k as i32);
                    (1.0 - q) * x * f.eval(x)
                })
                .sum();
            return Ok(IntegrationReport {
                value,
                terms_used: ks.len(),
                tail_estimate: 0.0,
            });
        }
    }
    let window = f.window();
    let limit = tol.max_terms as i64;
    let (k_lo, k_hi) = match window {
        Some(w) => (w.k_min, w.k_max),
        None => (-limit, limit),
    };

    let mut down = LatticeSum::new();
    let mut down_done = false;
    let mut k = 0i64.clamp(k_lo, k_hi);
    let start = k;
    while k <= k_hi {
        let x = q.powi(k as i32);
        if down.push((1.0 - q) * x * f.eval(x), q, tol)? {
            down_done = true;
            break;
        }
        k += 1;
    }
    if !down_done && down.tail > tol.abs_tol.max(tol.rel_tol * down.sum.abs()) {
        return Err(QError::nonconv("Jackson integral on [0, ∞) near 0", down.terms));
    }

    let mut up = LatticeSum::new();
    let mut up_done = false;
    let mut k = start - 1;
    while k >= k_lo {
        let x = q.powi(k as i32);
        if !x.is_finite() {
            break;
        }
        let t = (1.0 - q) * x * f.eval(x);
        if up.push(t, 1.0 / q.max(f64::MIN_POSITIVE), tol).unwrap_or(false) {
            up_done = true;
            break;
        }
        if !up.sum.is_finite() {
            break;
        }
        k -= 1;
    }
    let up_tail = if up.terms == 0 { 0.0 } else { up.tail };
    if !up_done && up_tail > tol.abs_tol.max(tol.rel_tol * (down.sum + up.sum).abs()) {
        return Err(QError::nonconv("Jackson integral on [0, ∞) near ∞", up.terms));
    }
    Ok(IntegrationReport {
        value: down.sum + up.sum,
        terms_used: down.terms + up.terms,
        tail_estimate: down.tail + up_tail,
    })
}

/// Number of lattice levels per axis for the multi-dimensional integral.
fn multi_depth(q: f64, tol: &Tolerance) -> usize {
    let eps = tol.abs_tol.max(1e-17);
    (((eps * (1.0 - q)).ln() / q.ln()).ceil() as usize).clamp(1, tol.max_terms)
}

/// Iterated Jackson integral over `[0,1]^n`:
/// `(1 - q)^n Σ q^{i_1+…+i_n} f(q^{i_1}, …, q^{i_n})`.
pub fn jackson_multi(
    f: &dyn Fn(&[f64]) -> f64,
    dims: usize,
    q: f64,
    tol: &Tolerance,
) -> QResult<IntegrationReport> {
    if dims == 0 {
        return Ok(IntegrationReport {
            value: f(&[]),
            terms_used: 1,
            tail_estimate: 0.0,
        });
    }
    let depth = multi_depth(q, tol);
    let pts: Vec<f64> = (0..depth).map(|i| q.powi(i as i32)).collect();
    let mut idx = vec![0usize; dims];
    let mut t = vec![1.0; dims];
    let mut sum = 0.0;
    let mut edge = 0.0;
    let mut count = 0usize;
    loop {
        let w: f64 = idx.iter().map(|&i| pts[i]).product();
        let v = w * f(&t);
        sum += v;
        count += 1;
        if idx.iter().any(|&i| i + 1 == depth) {
            edge += v.abs();
        }
        let mut d = 0;
        loop {
            if d == dims {
                let scale = (1.0 - q).powi(dims as i32);
                let value = scale * sum;
                if !value.is_finite() {
                    return Err(QError::nonconv("iterated Jackson integral", count));
                }
                return Ok(IntegrationReport {
                    value,
                    terms_used: count,
                    tail_estimate: scale * edge * q / (1.0 - q),
                });
            }
            idx[d] += 1;
            if idx[d] < depth {
                t[d] = pts[idx[d]];
                break;
            }
            idx[d] = 0;
            t[d] = 1.0;
            d += 1;
        }
    }
}

/// The single-argument reading `(1 - q)^n Σ q^{i_1+…+i_n} f(q^{i_1+…+i_n})`,
/// collapsed to `(1 - q)^n Σ_s C(s+n-1, n-1) q^s f(q^s)`.
pub fn jackson_multi_diagonal(
    f: &dyn Fn(f64) -> f64,
    dims: usize,
    q: f64,
    tol: &Tolerance,
) -> QResult<IntegrationReport> {
    let scale = (1.0 - q).powi(dims as i32);
    let mut acc = LatticeSum::new();
    let mut mult = 1.0f64;
    for s in 0..tol.max_terms {
        if s > 0 && dims > 1 {
            mult *= (s + dims - 1) as f64 / s as f64;
        }
        let x = q.powi(s as i32);
        if acc.push(scale * mult * x * f(x), q, tol)? {
            return Ok(IntegrationReport {
                value: acc.sum,
                terms_used: acc.terms,
                tail_estimate: acc.tail,
            });
        }
    }
    Err(QError::nonconv("diagonal Jackson integral", tol.max_terms))
}

/// `∫_a^b f d_qx = ∫_0^b - ∫_0^a`.
pub fn jackson_generic(
    f: &dyn LatticeFunction,
    a: f64,
    b: f64,
    q: f64,
    tol: &Tolerance,
) -> QResult<IntegrationReport> {
    if !(0.0 <= a && a <= b) {
        return Err(QError::Domain(format!("need 0 <= a <= b, got a={a}, b={b}")));
    }
    if a == b {
        return Ok(IntegrationReport {
            value: 0.0,
            terms_used: 0,
            tail_estimate: 0.0,
        });
    }
    let hi = jackson_0_a(f, b, q, tol)?;
    let lo = jackson_0_a(f, a, q, tol)?;
    Ok(IntegrationReport {
        value: hi.value - lo.value,
        terms_used: hi.terms_used + lo.terms_used,
        tail_estimate: hi.tail_estimate + lo.tail_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{q_beta, q_factorial, q_number, q_shifted_power_real};

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn derivative_examples() {
        assert!(close(q_derivative(&|x: f64| x * x, 1.0, 0.5).unwrap(), 1.5, 1e-15));
        assert_eq!(q_derivative(&|_x: f64| 3.0, 0.7, 0.5).unwrap(), 0.0);
        let v = q_derivative(&|x: f64| x.powi(5), 0.5, 0.9).unwrap();
        let oracle = (0.45f64.powi(5) - 0.5f64.powi(5)) / (-0.1 * 0.5);
        assert!(close(v, oracle, 1e-13));
        assert!(close(v, q_number(5.0, 0.9) * 0.5f64.powi(4), 1e-12));
        assert!(q_derivative(&|x: f64| x, 0.0, 0.5).is_err());
    }

    #[test]
    fn nth_derivative_examples() {
        let v = q_derivative_n(&|x: f64| x.powi(3), 1.0, 0.5, 3).unwrap();
        assert!(close(v, 2.625, 1e-13));
        assert_eq!(q_derivative_n(&|x: f64| x + 4.0, 2.0, 0.5, 0).unwrap(), 6.0);
        assert!(q_derivative_n(&|x: f64| x, 0.0, 0.5, 2).is_err());
    }

    fn composed(f: &dyn Fn(f64) -> f64, x: f64, q: f64, n: u32) -> f64 {
        if n == 0 {
            f(x)
        } else {
            (composed(f, q * x, q, n - 1) - composed(f, x, q, n - 1)) / ((q - 1.0) * x)
        }
    }

    #[test]
    fn nth_derivative_matches_composition() {
        let q: f64 = 0.5;
        // e_q(a x) with a = 0.9/(1-q) through its product form
        let eq = |x: f64| {
            let mut p = 1.0;
            for j in 0..200 {
                p *= 1.0 - 0.9 * x * q.powi(j);
            }
            1.0 / p
        };
        for n in 0..=5u32 {
            let a = q_derivative_n(&eq, 1.0, q, n).unwrap();
            let b = composed(&eq, 1.0, q, n);
            let exact = 1.8f64.powi(n as i32) * eq(1.0);
            assert!(close(a, exact, 1e-10), "n={n} {a} {exact}");
            assert!(close(a, b, 1e-10), "n={n} {a} {b}");
            let poly = |x: f64| (0..=8).map(|k| (k as f64 + 1.0) * x.powi(k)).sum::<f64>();
            let a = q_derivative_n(&poly, 0.8, 0.7, n).unwrap();
            let b = composed(&poly, 0.8, 0.7, n);
            assert!(close(a, b, 1e-10), "poly n={n}");
        }
    }

    #[test]
    fn negative_argument_stencil() {
        let f = |x: f64| x.powi(3);
        let v = q_derivative_n(&f, -1.0, 0.5, 1).unwrap();
        assert!(close(v, q_number(3.0, 0.5), 1e-14));
        let v = q_derivative_n(&f, -1.0, 0.5, 2).unwrap();
        assert!(close(v, -q_number(3.0, 0.5) * q_number(2.0, 0.5), 1e-13));
    }

    #[test]
    fn leibniz_examples() {
        let id = |x: f64| x;
        assert!(close(q_leibniz(&id, &id, 1.0, 0.5, 1).unwrap(), 1.5, 1e-14));
        let c = |_x: f64| 2.5;
        let f = |x: f64| x.powi(4);
        let a = q_leibniz(&f, &c, 0.7, 0.5, 2).unwrap();
        let b = 2.5 * q_derivative_n(&f, 0.7, 0.5, 2).unwrap();
        assert!(close(a, b, 1e-12));
        let f = |x: f64| x * x;
        let g = |x: f64| x.powi(3);
        let a = q_leibniz(&f, &g, 0.5, 0.9, 2).unwrap();
        let b = q_derivative_n(&|x: f64| x.powi(5), 0.5, 0.9, 2).unwrap();
        assert!(close(a, b, 1e-10));
    }

    #[test]
    fn shift_examples() {
        let q: f64 = 0.5;
        let id = |x: f64| x;
        assert!(close(shift(&id, 1.0, q, 1.0, ShiftDirection::Inverse), 2.0, 1e-15));
        assert_eq!(shift(&id, 0.3, q, 0.0, ShiftDirection::Forward), 0.3);
        let cube = |x: f64| x.powi(3);
        assert!(close(
            shift(&cube, q * q, q, 2.0, ShiftDirection::Forward),
            q.powi(12),
            1e-14
        ));
    }

    #[test]
    fn shift_commutation() {
        let q: f64 = 0.6;
        let f = |x: f64| x.powi(3) - 2.0 * x + 1.0;
        for k in -2..4 {
            let x = q.powi(k);
            let lam = |y: f64| f(q * y);
            let lhs = q_derivative(&lam, x, q).unwrap();
            let rhs = q * q_derivative(&f, q * x, q).unwrap();
            assert!(close(lhs, rhs, 1e-12));
            let lam_inv = |y: f64| f(y / q);
            let lhs = q_derivative(&lam_inv, x, q).unwrap();
            let rhs = q_derivative(&f, x / q, q).unwrap() / q;
            assert!(close(lhs, rhs, 1e-12));
        }
    }

    #[test]
    fn jackson_finite_examples() {
        let tol = Tolerance::default();
        let one = |_x: f64| 1.0;
        assert!(close(jackson_0_a(&one, 1.0, 0.5, &tol).unwrap().value, 1.0, 1e-15));
        let lin = |x: f64| x;
        assert!(close(jackson_0_a(&lin, 1.0, 0.5, &tol).unwrap().value, 2.0 / 3.0, 1e-15));
        let r = jackson_0_a(&lin, 1.0, 0.5, &tol).unwrap();
        assert!(r.tail_estimate <= tol.abs_tol.max(tol.rel_tol * r.value));
    }

    #[test]
    fn jackson_beta_matches_gamma_ratio() {
        let tol = Tolerance::default();
        for &q in &[0.3, 0.5, 0.9] {
            for &t in &[0.5, 1.0, 1.5, 2.0] {
                for &s in &[0.5, 1.0, 1.5, 2.0] {
                    let f = move |x: f64| {
                        x.powf(t - 1.0) * q_shifted_power_real(-q * x, s - 1.0, q).unwrap()
                    };
                    let j = jackson_0_a(&f, 1.0, q, &tol).unwrap();
                    let b = q_beta(t, s, q).unwrap();
                    assert!(close(j.value, b, 1e-10), "q={q} t={t} s={s}");
                }
            }
        }
    }

    #[test]
    fn jackson_improper_examples() {
        let tol = Tolerance::default();
        let inv_sq = |x: f64| 1.0 / (x * x);
        let r = jackson_aq_inf(&inv_sq, 1.0, 0.5, &tol).unwrap();
        assert!(close(r.value, 1.0, 1e-14));
        let zero = |_x: f64| 0.0;
        assert_eq!(jackson_aq_inf(&zero, 1.0, 0.5, &tol).unwrap().value, 0.0);
        assert_eq!(jackson_0_inf(&zero, 0.5, &tol).unwrap().value, 0.0);
        let atom = LatticeAtoms::new(0.5, [(3, 2.0)]);
        let r = jackson_0_inf(&atom, 0.5, &tol).unwrap();
        assert!(close(r.value, 0.5 * 0.125 * 2.0, 1e-15));
    }

    #[test]
    fn jackson_improper_gamma() {
        // ∫_0^∞ x^{t-1} E_q(-q x) d_q x = Γ_q(t) on the lattice {q^k}
        let tol = Tolerance::default();
        let q: f64 = 0.5;
        let f = |x: f64| {
            let mut p = 1.0;
            for j in 0..200 {
                p *= 1.0 - (1.0 - q) * q * x * q.powi(j);
            }
            x.powf(0.5) * p
        };
        let r = jackson_0_inf(&f, q, &tol).unwrap();
        let g = crate::qcore::q_gamma(1.5, q).unwrap();
        assert!(close(r.value, g, 1e-12), "{} vs {}", r.value, g);
    }

    #[test]
    fn jackson_0_inf_window_failure() {
        let tol = Tolerance::default();
        let f = FnLattice::new(|x: f64| (-x).exp()).with_window(Window::new(-3, 5).unwrap());
        assert!(matches!(
            jackson_0_inf(&f, 0.5, &tol),
            Err(QError::NonConvergence { .. })
        ));
    }

    #[test]
    fn multi_integral_examples() {
        let tol = Tolerance::default();
        let r = jackson_multi(&|_t: &[f64]| 1.0, 2, 0.5, &tol).unwrap();
        assert!(close(r.value, 1.0, 1e-12));
        let g = |x: f64| x * x + 1.0;
        let h = |x: f64| (x + 0.5).sqrt();
        let sep = jackson_multi(&|t: &[f64]| g(t[0]) * h(t[1]), 2, 0.6, &tol).unwrap();
        let a = jackson_0_a(&g, 1.0, 0.6, &tol).unwrap().value;
        let b = jackson_0_a(&h, 1.0, 0.6, &tol).unwrap().value;
        assert!(close(sep.value, a * b, 1e-12));
    }

    #[test]
    fn diagonal_reading_differs() {
        let tol = Tolerance::default();
        let d = jackson_multi_diagonal(&|_x| 1.0, 2, 0.5, &tol).unwrap();
        assert!(close(d.value, 1.0, 1e-12));
        let d = jackson_multi_diagonal(&|x| x, 2, 0.5, &tol).unwrap();
        let it = jackson_multi(&|t: &[f64]| t[0], 2, 0.5, &tol).unwrap();
        assert!((d.value - it.value).abs() > 1e-3);
    }

    #[test]
    fn generic_interval() {
        let tol = Tolerance::default();
        let id = |x: f64| x;
        assert_eq!(jackson_generic(&id, 0.4, 0.4, 0.5, &tol).unwrap().value, 0.0);
        let one = |_x: f64| 1.0;
        assert!(close(jackson_generic(&one, 0.0, 1.0, 0.5, &tol).unwrap().value, 1.0, 1e-15));
        let v = jackson_generic(&id, 0.5, 1.0, 0.5, &tol).unwrap().value;
        // ∫_0^1 x - ∫_0^q x = (1-q^2)/(1+q) on the lattice through 1
        assert!(close(v, 0.5 * 1.0 * 1.0, 1e-14));
        assert!(jackson_generic(&id, 1.0, 0.5, 0.5, &tol).is_err());
    }

    #[test]
    fn atoms_lookup() {
        let a = LatticeAtoms::new(0.5, [(0, 1.0), (2, -3.0)]);
        assert_eq!(a.eval(1.0), 1.0);
        assert_eq!(a.eval(0.25), -3.0);
        assert_eq!(a.eval(0.3), 0.0);
        assert_eq!(lattice_exponent(8.0, 0.5), Some(-3));
        assert!(q_factorial(0, 0.5) == 1.0);
    }
}
