//! Summation kernels shared by every series in the crate.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{QError, QResult};
use crate::qcore::Tolerance;

/// Field of values a series may be evaluated over.
pub trait Scalar:
    Copy
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn powu(self, n: u32) -> Self;
    fn recip(self) -> Self;
    fn finite(self) -> bool {
        self.modulus().is_finite()
    }
    fn zero() -> Self {
        Self::from_real(0.0)
    }
    fn one() -> Self {
        Self::from_real(1.0)
    }
}

impl Scalar for f64 {
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn powu(self, n: u32) -> Self {
        self.powi(n as i32)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
}

impl Scalar for Complex64 {
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn powu(self, n: u32) -> Self {
        Complex64::powu(&self, n)
    }
    fn recip(self) -> Self {
        self.inv()
    }
}

/// Value of a truncated series with its bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEval<T> {
    pub value: T,
    pub terms: usize,
    pub tail_bound: f64,
}

impl<T: Scalar> SeriesEval<T> {
    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> SeriesEval<U> {
        SeriesEval {
            value: f(self.value),
            terms: self.terms,
            tail_bound: self.tail_bound,
        }
    }
}

/// Number of consecutive negligible terms required before stopping.
pub const STOP_RUN: usize = 3;

fn negligible(term: f64, sum: f64, tol: &Tolerance) -> bool {
    term <= tol.abs_tol.max(tol.rel_tol * sum)
}

fn tail_from(last: f64, prev: f64) -> f64 {
    if last == 0.0 {
        return 0.0;
    }
    let rho = if prev > 0.0 { last / prev } else { 1.0 };
    if rho < 1.0 {
        last * rho / (1.0 - rho)
    } else {
        last
    }
}

/// Sums `first + Σ_{m≥1} t_m` with `t_m = t_{m-1} · ratio(m)`.
///
/// `ratio` returns `None` when the series terminates after the previous term.
pub fn sum_ratio<T: Scalar>(
    what: &str,
    first: T,
    mut ratio: impl FnMut(usize) -> QResult<Option<T>>,
    tol: &Tolerance,
) -> QResult<SeriesEval<T>> {
    let mut sum = first;
    let mut term = first;
    let mut prev_mod = first.modulus();
    let mut run = 0usize;
    let mut m = 0usize;
    loop {
        m += 1;
        if m > tol.max_terms {
            return Err(QError::nonconv(what, tol.max_terms));
        }
        let rho = match ratio(m)? {
            Some(rho) => rho,
            None => {
                return Ok(SeriesEval {
                    value: sum,
                    terms: m,
                    tail_bound: 0.0,
                })
            }
        };
        term = term * rho;
        sum = sum + term;
        if !sum.finite() || !term.finite() {
            return Err(QError::nonconv(what, m));
        }
        let tm = term.modulus();
        if tm == 0.0 && rho.modulus() == 0.0 {
            return Ok(SeriesEval {
                value: sum,
                terms: m + 1,
                tail_bound: 0.0,
            });
        }
        if negligible(tm, sum.modulus(), tol) {
            run += 1;
            if run >= STOP_RUN {
                return Ok(SeriesEval {
                    value: sum,
                    terms: m + 1,
                    tail_bound: tail_from(tm, prev_mod),
                });
            }
        } else {
            run = 0;
        }
        prev_mod = tm;
    }
}

/// A real number stored as `sign · exp(ln)`; `sign == 0` encodes zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogVal {
    pub ln: f64,
    pub sign: f64,
}

impl LogVal {
    pub const ZERO: LogVal = LogVal {
        ln: f64::NEG_INFINITY,
        sign: 0.0,
    };
    pub const ONE: LogVal = LogVal { ln: 0.0, sign: 1.0 };

    pub fn new(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogVal {
                ln: x.abs().ln(),
                sign: x.signum(),
            }
        }
    }

    pub fn from_ln(ln: f64, sign: f64) -> Self {
        if sign == 0.0 {
            Self::ZERO
        } else {
            LogVal { ln, sign }
        }
    }

    pub fn value(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln.exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0.0
    }

    pub fn mul(self, o: LogVal) -> LogVal {
        LogVal::from_ln(self.ln + o.ln, self.sign * o.sign)
    }

    pub fn div(self, o: LogVal) -> LogVal {
        LogVal::from_ln(self.ln - o.ln, self.sign * o.sign)
    }

    pub fn scale_ln(self, ln: f64) -> LogVal {
        LogVal::from_ln(self.ln + ln, self.sign)
    }

    pub fn neg(self) -> LogVal {
        LogVal::from_ln(self.ln, -self.sign)
    }

    /// Sum of two values of the same sign (no cancellation).
    pub fn add_same_sign(self, o: LogVal) -> LogVal {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        debug_assert!(self.sign == o.sign);
        let (hi, lo) = if self.ln >= o.ln { (self, o) } else { (o, self) };
        LogVal::from_ln(hi.ln + (lo.ln - hi.ln).exp().ln_1p(), hi.sign)
    }
}

/// Sums explicitly generated terms `Σ_{m≥0} term(m)`, stopping on a run of
/// negligible terms once `m ≥ min_terms`.
pub fn sum_terms(
    what: &str,
    min_terms: usize,
    mut term: impl FnMut(usize) -> QResult<f64>,
    tol: &Tolerance,
) -> QResult<SeriesEval<f64>> {
    let mut sum = 0.0;
    let mut run = 0usize;
    let mut prev = 0.0f64;
    for m in 0..=tol.max_terms {
        let t = term(m)?;
        sum += t;
        if !sum.is_finite() {
            return Err(QError::nonconv(what, m + 1));
        }
        let tm = t.abs();
        if m >= min_terms && negligible(tm, sum.abs(), tol) {
            run += 1;
            if run >= STOP_RUN {
                return Ok(SeriesEval {
                    value: sum,
                    terms: m + 1,
                    tail_bound: tail_from(tm, prev),
                });
            }
        } else {
            run = 0;
        }
        prev = tm;
    }
    Err(QError::nonconv(what, tol.max_terms))
}

/// Binomial coefficient C(n, 2) as a float.
pub fn c2(n: i64) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_ratio_series() {
        let tol = Tolerance::default();
        let s = sum_ratio("geo", 1.0, |_| Ok(Some(0.5)), &tol).unwrap();
        assert!((s.value - 2.0).abs() < 1e-15);
        assert!(s.tail_bound < 1e-15);
    }

    #[test]
    fn exponential_ratio_series() {
        let tol = Tolerance::default();
        let s = sum_ratio("exp", 1.0, |m| Ok(Some(1.0 / m as f64)), &tol).unwrap();
        assert!((s.value - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn terminating_series() {
        let tol = Tolerance::default();
        let s = sum_ratio("fin", 1.0, |m| Ok(if m < 3 { Some(2.0) } else { None }), &tol).unwrap();
        assert_eq!(s.value, 1.0 + 2.0 + 4.0);
        assert_eq!(s.tail_bound, 0.0);
    }

    #[test]
    fn divergent_series_reports_nonconvergence() {
        let tol = Tolerance {
            max_terms: 50,
            ..Tolerance::default()
        };
        assert!(matches!(
            sum_ratio("div", 1.0, |_| Ok(Some(1.0)), &tol),
            Err(QError::NonConvergence { .. })
        ));
    }

    #[test]
    fn logval_roundtrip() {
        for x in [-3.5, 1e-200, 7.0, 0.0] {
            assert!((LogVal::new(x).value() - x).abs() <= 1e-13 * x.abs());
        }
        let s = LogVal::new(2.0).add_same_sign(LogVal::new(3.0));
        assert!((s.value() - 5.0).abs() < 1e-14);
        let p = LogVal::new(-2.0).mul(LogVal::new(4.0));
        assert!((p.value() + 8.0).abs() < 1e-14);
    }
}
