//! Lattice stencils for powers of first-order-in-`E` difference operators.
//!
//! Both `Λ_{q^δ}^{-1} D_q^r` and the Bessel operator have the shape
//! `q^{δr} x^{-r} E^{-δ} κ ∏_j (E - ρ_j)` with `E f(x) = f(qx)` and positive
//! roots `ρ_j`. Moving the powers of `x` to the left gives
//!
//! `Op^n = K_n x^{-rn} E^{-nδ} ∏_{m<n} ∏_j (E - q^{rm} ρ_j)`,
//! `K_n = (q^{δr} κ)^n q^{r(δ-r)C(n,2)}`.
//!
//! The expanded coefficients are signed elementary symmetric functions of
//! positive numbers, so they are accumulated in log form without cancellation.

use crate::error::{QError, QResult};
use crate::qcalc::LatticeFunction;
use crate::series::{c2, LogVal};

/// Description of a single operator `q^{δr} x^{-r} E^{-δ} κ ∏(E - ρ_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorShape {
    pub q: f64,
    pub r: u32,
    pub delta: f64,
    pub kappa: LogVal,
    pub roots: Vec<f64>,
}

impl OperatorShape {
    /// `Λ_{q^δ}^{-1} D_q^r`.
    pub fn lambda_dqr(q: f64, r: u32, delta: f64) -> Self {
        let rf = r as f64;
        let kappa = LogVal::from_ln(
            -c2(r as i64) * q.ln() - rf * (1.0 - q).ln(),
            if r % 2 == 0 { 1.0 } else { -1.0 },
        );
        OperatorShape {
            q,
            r,
            delta,
            kappa,
            roots: (0..r).map(|j| q.powi(j as i32)).collect(),
        }
    }

    /// The Bessel operator with index `α`.
    pub fn bessel(q: f64, r: u32, delta: f64, alpha: &[f64]) -> Self {
        let rf = r as f64;
        let lq = q.ln();
        let l1q = (1.0 - q).ln();
        // κ = (q - 1)^{-1} ∏ a_i / (q (q - 1)), a_i = q^{rα_i + 1}
        let mut ln = -l1q;
        for &a in alpha {
            ln += (rf * a + 1.0) * lq - lq - l1q;
        }
        let kappa = LogVal::from_ln(ln, if r % 2 == 0 { 1.0 } else { -1.0 });
        let mut roots = vec![1.0];
        roots.extend(alpha.iter().map(|&a| q.powf(-rf * a)));
        OperatorShape {
            q,
            r,
            delta,
            kappa,
            roots,
        }
    }

    /// Stencil of the n-th power.
    pub fn power(&self, n: u32) -> PowerStencil {
        let mut acc = PowerStencil::identity(self);
        for _ in 0..n {
            acc.push_factor(self);
        }
        acc
    }
}

/// `Op^n f(x) = x^{-rn} Σ_k c_k f(q^{k - nδ} x)` with `c_k = K_n e'_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerStencil {
    pub n: u32,
    pub r: u32,
    pub q: f64,
    pub delta: f64,
    /// Elementary symmetric functions `e_j` of the accumulated roots.
    esym: Vec<LogVal>,
    ln_k: LogVal,
}

impl PowerStencil {
    pub fn identity(shape: &OperatorShape) -> Self {
        PowerStencil {
            n: 0,
            r: shape.r,
            q: shape.q,
            delta: shape.delta,
            esym: vec![LogVal::ONE],
            ln_k: LogVal::ONE,
        }
    }

    /// Multiplies by one more factor, turning `Op^n` into `Op^{n+1}`.
    pub fn push_factor(&mut self, shape: &OperatorShape) {
        let q = shape.q;
        let m = self.n as i64;
        let scale = q.powi((shape.r as i64 * m) as i32);
        for &rho in &shape.roots {
            let root = LogVal::new(rho * scale);
            self.esym.push(LogVal::ZERO);
            for j in (1..self.esym.len()).rev() {
                let add = self.esym[j - 1].mul(root);
                self.esym[j] = self.esym[j].add_same_sign(add);
            }
        }
        let rf = shape.r as f64;
        // K_{n+1}/K_n = q^{δr} κ q^{r(δ-r) n}
        let step = shape
            .kappa
            .scale_ln((shape.delta * rf + rf * (shape.delta - rf) * m as f64) * q.ln());
        self.ln_k = self.ln_k.mul(step);
        self.n += 1;
    }

    /// Number of stencil points minus one.
    pub fn order(&self) -> usize {
        self.esym.len() - 1
    }

    /// Log-form coefficient of `f(q^{k - nδ} x)` before the `x^{-rn}` factor.
    pub fn coeff(&self, k: usize) -> LogVal {
        let big_n = self.order();
        let e = self.esym[big_n - k];
        let sign = if (big_n - k) % 2 == 0 { 1.0 } else { -1.0 };
        self.ln_k.mul(LogVal::from_ln(e.ln, sign * e.sign))
    }

    /// Lattice points `q^{k - nδ} x`, `k = 0..=rn`.
    pub fn points(&self, x: f64) -> Vec<f64> {
        let nd = self.n as f64 * self.delta;
        (0..=self.order())
            .map(|k| self.q.powf(k as f64 - nd) * x)
            .collect()
    }

    /// Applies the stencil with an extra log-form multiplier; returns the value
    /// and the sum of the absolute values of the summands.
    pub fn apply_scaled(
        &self,
        f: &dyn LatticeFunction,
        x: f64,
        mult: LogVal,
    ) -> QResult<(f64, f64)> {
        if x == 0.0 {
            return Err(QError::Domain("difference stencil at x = 0".into()));
        }
        let rn = (self.r * self.n) as i32;
        let xs = LogVal::new(x).powi_ln(-rn);
        let m = mult.mul(xs);
        let mut sum = 0.0;
        let mut abs = 0.0;
        for (k, p) in self.points(x).into_iter().enumerate() {
            let fv = f.eval(p);
            if fv == 0.0 {
                continue;
            }
            let v = m.mul(self.coeff(k)).mul(LogVal::new(fv)).value();
            sum += v;
            abs += v.abs();
        }
        if !sum.is_finite() {
            return Err(QError::nonconv("difference stencil", self.order() + 1));
        }
        Ok((sum, abs))
    }

    pub fn apply(&self, f: &dyn LatticeFunction, x: f64) -> QResult<f64> {
        Ok(self.apply_scaled(f, x, LogVal::ONE)?.0)
    }
}

impl LogVal {
    /// `self^n` for integer `n`.
    pub fn powi_ln(self, n: i32) -> LogVal {
        if n == 0 {
            return LogVal::ONE;
        }
        let sign = if n % 2 == 0 { 1.0 } else { self.sign };
        LogVal::from_ln(self.ln * n as f64, sign)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcalc::q_derivative_n;

    #[test]
    fn single_lambda_dqr_matches_difference_quotients() {
        let q: f64 = 0.6;
        for r in 2..=4u32 {
            for delta in [1.0, 2.0] {
                let shape = OperatorShape::lambda_dqr(q, r, delta);
                let st = shape.power(1);
                let f = |x: f64| (x * 0.7).sin() + x.powi(5);
                for x in [0.3, 1.0, 1.7] {
                    let a = st.apply(&f, x).unwrap();
                    let b = q_derivative_n(&f, q.powf(-delta) * x, q, r).unwrap();
                    assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "r={r} d={delta} x={x}");
                }
            }
        }
    }

    #[test]
    fn power_is_composition() {
        let q: f64 = 0.5;
        let shape = OperatorShape::lambda_dqr(q, 2, 1.0);
        let one = shape.power(1);
        let two = shape.power(2);
        let f = |x: f64| x.powi(7) - x.powi(4) + 2.0;
        let g = |x: f64| one.apply(&f, x).unwrap();
        let x = 0.8;
        let a = two.apply(&f, x).unwrap();
        let b = one.apply(&g, x).unwrap();
        assert!((a - b).abs() < 1e-9 * b.abs());
    }

    #[test]
    fn monomials_are_lowered() {
        // Op x^p = q^{δr} κ ∏(q^p - ρ) q^{-δp} x^{p-r}
        let q: f64 = 0.7;
        let shape = OperatorShape::bessel(q, 3, 1.0, &[0.2, 0.5]);
        let st = shape.power(1);
        let p = 6;
        let f = |x: f64| x.powi(p);
        let x: f64 = 0.9;
        let mut expect = q.powf(3.0) * shape.kappa.value() * q.powi(-p) * x.powi(p - 3);
        for &rho in &shape.roots {
            expect *= q.powi(p) - rho;
        }
        let got = st.apply(&f, x).unwrap();
        assert!((got - expect).abs() < 1e-12 * expect.abs());
    }
}
