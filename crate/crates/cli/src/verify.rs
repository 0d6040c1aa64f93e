use std::cell::RefCell;

use clap::ValueEnum;
use qbessel_core::qbessel::*;
use qbessel_core::qcalc::{jackson_0_a, q_derivative_stencil, LatticeAtoms, LatticeFunction};
use qbessel_core::qcore::*;
use qbessel_core::qharmonic::*;
use qbessel_core::qheat::*;
use qbessel_core::qspecial::*;
use qbessel_core::series::{c2, LogVal};
use qbessel_core::QResult;

use crate::config::RunConfig;
use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Gamma,
    Duplication,
    Binomial,
    Trig,
    Product,
    BesselEigen,
    Mehler,
    Sonine,
    Translation,
    Convolution,
    Heatpoly,
    Genfunc,
    Kernel,
    Bounds,
    All,
}

impl Suite {
    fn name(self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

/// Largest observed deviation of one check against its threshold.
pub struct Check {
    pub label: String,
    pub worst: f64,
    pub threshold: f64,
    pub error: Option<String>,
}

impl Check {
    fn new(label: impl Into<String>, threshold: f64) -> Self {
        Check {
            label: label.into(),
            worst: 0.0,
            threshold,
            error: None,
        }
    }

    fn dev(&mut self, d: f64) {
        if d.is_nan() {
            self.worst = f64::INFINITY;
        } else {
            self.worst = self.worst.max(d);
        }
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.worst <= self.threshold
    }

    pub fn line(&self, suite: &str) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        match &self.error {
            Some(e) => format!("{verdict} {suite}/{}: {e}", self.label),
            None => format!(
                "{verdict} {suite}/{}: max dev {:.3e} (threshold {:.1e})",
                self.label, self.worst, self.threshold
            ),
        }
    }
}

fn run(label: impl Into<String>, threshold: f64, body: impl FnOnce(&mut Check) -> QResult<()>) -> Check {
    let mut c = Check::new(label, threshold);
    if let Err(e) = body(&mut c) {
        c.error = Some(e.to_string());
    }
    c
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn scaled(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// `D_q^n f(x)` by differences, with the rounding level of the stencil sum.
fn dq_with_noise(f: &dyn LatticeFunction, x: f64, q: f64, n: u32) -> (f64, f64) {
    let mut sum = 0.0;
    let mut abs = 0.0;
    for (k, w) in q_derivative_stencil(x, q, n).into_iter().enumerate() {
        let v = w * f.eval(q.powi(k as i32) * x);
        sum += v;
        abs += v.abs();
    }
    (sum, 8.0 * f64::EPSILON * abs)
}

/// `|B u - D_t u|` relative to the larger of `|u|`, `|D_t u|` and 1.
fn heat_defect(h: &HeatPolySpec, u: &dyn Fn(f64, f64) -> QResult<f64>, x: f64, t: f64) -> QResult<f64> {
    let res = heat_residual(h, u, x, t)?;
    let dt = dq_t(|s| u(x, s), t, h.spec().big_q())?;
    Ok(res.abs() / u(x, t)?.abs().max(dt.abs()).max(1.0))
}

/// Runs `suite` and returns the report lines and whether every check passed.
pub fn verify(cfg: &RunConfig, suite: Suite) -> CliResult<(Vec<String>, bool)> {
    let suites: Vec<Suite> = if suite == Suite::All {
        Suite::value_variants().iter().copied().filter(|&s| s != Suite::All).collect()
    } else {
        vec![suite]
    };
    let mut lines = Vec::new();
    let mut ok = true;
    for s in suites {
        for c in checks(cfg, s)? {
            ok &= c.passed();
            lines.push(c.line(&s.name()));
        }
    }
    Ok((lines, ok))
}

fn checks(cfg: &RunConfig, suite: Suite) -> CliResult<Vec<Check>> {
    let t = cfg.tol;
    let tol = &t;
    let base = cfg.base;
    let (q, r, delta) = (base.q, base.r, base.delta);
    let lattice: Vec<f64> = (-1..=3).map(|k| q.powi(k)).collect();
    Ok(match suite {
        Suite::Gamma => vec![
            run("recurrence", 1e-12, |c| {
                for x in [0.3, 0.7, 1.5, 2.5, 4.2] {
                    c.dev(rel(q_gamma(x + 1.0, q)?, q_number(x, q) * q_gamma(x, q)?));
                }
                Ok(())
            }),
            run("beta integral", 1e-10, |c| {
                for a in [0.5, 1.0, 2.0] {
                    for b in [0.5, 1.0, 2.0] {
                        let f = |x: f64| x.powf(a - 1.0) * qpoch_inf(q * x, q) / qpoch_inf(q.powf(b) * x, q);
                        c.dev(rel(jackson_0_a(&f, 1.0, q, tol)?.value, q_beta(a, b, q)?));
                    }
                }
                Ok(())
            }),
        ],
        Suite::Duplication => vec![run("gamma product", 1e-10, |c| {
            let big_q = q.powi(r as i32);
            for n in 0..=10u64 {
                let mut d = -ln_q_factorial(r as u64 * n, q) + ln_q_factorial(n, big_q)
                    + (r as u64 * n) as f64 * q_number(r as f64, q).ln();
                for i in 1..r {
                    let x = i as f64 / r as f64;
                    d += ln_q_gamma(n as f64 + x, big_q)?.ln - ln_q_gamma(x, big_q)?.ln;
                }
                c.dev(d.exp_m1().abs());
            }
            Ok(())
        })],
        Suite::Binomial => vec![
            run("pascal", 1e-12, |c| {
                for n in 2..=20i64 {
                    for k in 1..n {
                        let lhs = q_binomial_coeff(n, k, q)?;
                        let rhs = q_binomial_coeff(n - 1, k - 1, q)? + q.powi(k as i32) * q_binomial_coeff(n - 1, k, q)?;
                        c.dev(rel(rhs, lhs));
                    }
                }
                Ok(())
            }),
            run("gauss product", 1e-12, |c| {
                for n in 0..=12i64 {
                    for x in [0.5, 2.0] {
                        let prod: f64 = (0..n).map(|k| 1.0 + q.powi(k as i32) * x).product();
                        let mut sum = 0.0;
                        for k in 0..=n {
                            sum += q.powf(c2(k)) * q_binomial_coeff(n, k, q)? * x.powi(k as i32);
                        }
                        c.dev(rel(sum, prod));
                    }
                }
                Ok(())
            }),
        ],
        Suite::Trig => vec![
            run("eigen-system", 1e-8, |c| {
                for lam in [q * q, q, 1.0] {
                    let u = |x: f64| cos_r(lam * x, &base, tol).map(|s| s.value).unwrap_or(f64::NAN);
                    for &x in &lattice {
                        let (lhs, noise) = dq_with_noise(&u, q.powf(-delta) * x, q, r);
                        let rhs = -lam.powi(r as i32) * u(x);
                        c.dev(((lhs - rhs).abs() - noise).max(0.0) / rhs.abs().max(1.0));
                    }
                }
                Ok(())
            }),
            run("derivative chain", 1e-8, |c| {
                let cf = |x: f64| cos_r(x, &base, tol).map(|s| s.value).unwrap_or(f64::NAN);
                for &x in &lattice {
                    for l in 1..=r {
                        let (d, noise) = dq_with_noise(&cf, x, q, l);
                        c.dev(((dq_cos_r(l, x, &base, tol)? - d).abs() - noise).max(0.0) / d.abs().max(1.0));
                    }
                    for m in 1..r {
                        let sf = |y: f64| sin_rl(y, m, &base, tol).map(|s| s.value).unwrap_or(f64::NAN);
                        for l in m..=r {
                            let (d, noise) = dq_with_noise(&sf, x, q, l - m);
                            c.dev(((dq_sin_rl(m, l, x, &base, tol)? - d).abs() - noise).max(0.0) / d.abs().max(1.0));
                        }
                    }
                }
                Ok(())
            }),
        ],
        Suite::Product => vec![run("product formula beyond tail (delta = 1)", 1e-8, |c| {
            let b1 = QBase::new(q, r, 1.0)?;
            let pts = [q * q, q, 1.0];
            for &x in &pts {
                for &y in &pts {
                    let e = cos_r(x, &b1, tol)?.value * cos_r(y, &b1, tol)?.value;
                    let p = cos_product(x, y, &b1, tol)?;
                    c.dev(((p.value - e).abs() - p.tail_bound).max(0.0) / e.abs());
                }
            }
            Ok(())
        })],
        Suite::BesselEigen => {
            let s = cfg.spec()?;
            let mut v = vec![run("eigen-equation", 1e-8, |c| {
                for lam in [q, 1.0] {
                    let f = |x: f64| j_alpha(&s, lam * x, tol).map(|v| v.value).unwrap_or(f64::NAN);
                    for k in 0..=3 {
                        let x = q.powi(k);
                        c.dev(scaled(apply_b(&s, &f, x)?, -lam.powi(r as i32) * f(x)));
                    }
                }
                Ok(())
            })];
            v.push(run("stencil power", 1e-10, |c| {
                let f = |x: f64| 1.0 + x.powi(3) - 0.5 * x.powi(7) + x.powi(11);
                let st = b_power_stencil(&s, 2);
                for x in [0.4, 1.0] {
                    let once = |y: f64| apply_b(&s, &f, y).unwrap_or(f64::NAN);
                    let (a, abs) = st.apply_scaled(&f, x, LogVal::ONE)?;
                    let b = apply_b(&s, &once, x)?;
                    c.dev(((a - b).abs() - 1e-13 * abs).max(0.0) / b.abs().max(1.0));
                }
                Ok(())
            }));
            if r == 2 || r == 3 {
                v.push(run("reduced form", 1e-12, |c| {
                    let f = |x: f64| 1.0 + x - 2.0 * x.powi(2) + x.powi(3) + 3.0 * x.powi(9);
                    for x in [0.3, 0.75, 1.0, 1.6] {
                        let red = if r == 2 { apply_b2_reduced(&s, &f, x)? } else { apply_b3_reduced(&s, &f, x)? };
                        c.dev(scaled(red, apply_b(&s, &f, x)?));
                    }
                    Ok(())
                }));
            }
            v
        }
        Suite::Mehler => {
            let s = cfg.spec()?;
            vec![run("series vs integral", 1e-8, |c| {
                for z in [0.25, 0.5, 1.0] {
                    c.dev(rel(mehler_j(&s, z, tol)?.value, j_alpha(&s, z, tol)?.value));
                }
                Ok(())
            })]
        }
        Suite::Sonine => {
            let s = cfg.spec()?;
            vec![run("shifted series vs integral", 1e-8, |c| {
                for p in [1.0, 1.5] {
                    let shift = vec![p; r as usize - 1];
                    let target = s.shifted(&shift)?;
                    let sh = SonineShift::new(shift)?;
                    for z in [0.25, 0.5, 1.0] {
                        c.dev(rel(sonine_j(&s, &sh, z, tol)?.value, j_alpha(&target, z, tol)?.value));
                    }
                }
                Ok(())
            })]
        }
        Suite::Translation => {
            let s = cfg.spec()?;
            let pts: Vec<f64> = (0..=3).map(|k| q.powi(k)).collect();
            vec![
                run("tau multiplication beyond tail", 1e-7, |c| {
                    let plan = TranslationPlan::tau(base);
                    for lam in [q, 1.0] {
                        let f = |x: f64| cos_r(lam * x, &base, tol).map(|v| v.value).unwrap_or(f64::NAN);
                        for &x in &pts {
                            for &y in &pts {
                                let v = translate_tau(&plan, &f, x, y, tol)?;
                                c.dev(((v.value - f(x) * f(y)).abs() - v.tail).max(0.0));
                            }
                        }
                    }
                    Ok(())
                }),
                run("T^alpha multiplication beyond tail", 1e-7, |c| {
                    let plan = TranslationPlan::bessel(s.clone());
                    for lam in [q, 1.0] {
                        let f = |x: f64| j_alpha(&s, lam * x, tol).map(|v| v.value).unwrap_or(f64::NAN);
                        for &x in &pts {
                            for &y in &pts {
                                let v = translate_t_alpha(&plan, &f, x, y, tol)?;
                                c.dev(((v.value - f(x) * f(y)).abs() - v.tail).max(0.0));
                            }
                        }
                    }
                    Ok(())
                }),
            ]
        }
        Suite::Convolution => vec![run("Fourier of convolution (r = 2, delta = 1)", 1e-6, |c| {
            let base = QBase::new(q, 2, 1.0)?;
            let plan = TranslationPlan::tau(base);
            let f = LatticeAtoms::new(q, [(0, 1.0), (1, -0.5), (2, 0.25)]);
            let g = LatticeAtoms::new(q, [(1, 2.0), (3, 1.0)]);
            let err = RefCell::new(None);
            let conv = |x: f64| {
                convolve0(&plan, &f, &g, x, tol).unwrap_or_else(|e| {
                    err.borrow_mut().get_or_insert(e);
                    f64::NAN
                })
            };
            for lam in [q, 1.0, 1.0 / q] {
                let lhs = fourier0(&base, &conv, lam, tol);
                if let Some(e) = err.borrow_mut().take() {
                    return Err(e);
                }
                let lhs = lhs?.value;
                let rhs = fourier0(&base, &f, lam, tol)?.value * fourier0(&base, &g, lam, tol)?.value;
                c.dev(scaled(lhs, rhs));
            }
            Ok(())
        })],
        Suite::Heatpoly => {
            let h = cfg.heat_spec()?;
            vec![
                run("finite sum vs phi", 1e-10, |c| {
                    for n in 0..=8 {
                        for (x, s) in [(0.5, 0.25), (1.0, 1.0), (1.2, -0.3)] {
                            c.dev(rel(heat_poly_phi(&h, n, x, s, tol)?, heat_poly(&h, n, x, s)));
                        }
                    }
                    Ok(())
                }),
                run("heat equation", 1e-8, |c| {
                    for n in 0..=8 {
                        let u = |x: f64, s: f64| Ok(heat_poly(&h, n, x, s));
                        for (x, s) in [(0.5, 0.25), (1.0, 1.0)] {
                            c.dev(heat_defect(&h, &u, x, s)?);
                        }
                    }
                    Ok(())
                }),
            ]
        }
        Suite::Genfunc => {
            let h = cfg.heat_spec()?;
            vec![run("generating coefficients", 1e-9, |c| {
                for (x, s) in [(0.4, 0.4), (1.0, 0.5)] {
                    for (n, cn) in gen_coefficients(&h, x, s, 11, tol)?.iter().enumerate() {
                        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                        c.dev((cn - sign * heat_poly(&h, n as u64, x, s) / h.spec().alpha_norm(n as u64)).abs());
                    }
                }
                Ok(())
            })]
        }
        Suite::Kernel => {
            let kd = if delta > 1.0 { delta } else { 2.0 };
            let sd = if delta > 2.0 { delta } else { 3.0 };
            let hk = HeatPolySpec::new(cfg.spec()?.with_delta(kd)?, cfg.k_index)?;
            let hs = HeatPolySpec::new(cfg.spec()?.with_delta(sd)?, cfg.k_index)?;
            let big_q = q.powi(r as i32);
            vec![
                run(format!("closed form vs integral (delta = {kd})"), 1e-7, |c| {
                    for x in [0.0, 0.5, 1.0] {
                        for s in [1.0 / big_q, 1.0, big_q] {
                            c.dev(rel(kernel_k_integral(&hk, x, s, tol)?.value, kernel_k(&hk, x, s, tol)?.value));
                        }
                    }
                    Ok(())
                }),
                run(format!("kernel heat equation (delta = {kd})"), 1e-5, |c| {
                    let u = |x: f64, s: f64| Ok(kernel_k(&hk, x, s, tol)?.value);
                    for x in [0.25, 0.5, 1.0] {
                        c.dev(heat_defect(&hk, &u, x, 1.0)?);
                    }
                    Ok(())
                }),
                run(format!("solver heat equation (delta = {sd})"), 1e-5, |c| {
                    let f = LatticeAtoms::new(q, (0..8).map(|k| {
                        let y = q.powi(k);
                        (k as i64, y * y * (-y).exp())
                    }));
                    let u = |x: f64, s: f64| Ok(solve_heat(&hs, &f, x, s, tol)?.value);
                    for x in [0.25, 0.5, 1.0] {
                        c.dev(heat_defect(&hs, &u, x, 1.0)?);
                    }
                    Ok(())
                }),
            ]
        }
        Suite::Bounds => {
            let bd = delta.max(1.0);
            let h = HeatPolySpec::new(cfg.spec()?.with_delta(bd)?, cfg.k_index)?;
            let s = cfg.spec()?.with_delta(bd)?;
            let s1 = s.with_delta(1.0)?;
            vec![
                run(format!("heat polynomial upper bound (delta = {bd})"), 1e-10, |c| {
                    for n in 0..=10 {
                        for x in [0.0, 0.5, 1.0] {
                            for (tt, sv) in [(0.25, 0.5), (0.5, 1.0), (1.0, 2.0)] {
                                match bound_lemma13(&h, n, x, tt, sv, tol) {
                                    Ok((l, rr)) => c.dev((l - rr).max(0.0) / rr),
                                    Err(qbessel_core::QError::Radius(_)) => {}
                                    Err(e) => return Err(e),
                                }
                            }
                        }
                    }
                    Ok(())
                }),
                run("heat polynomial lower bound", 1e-13, |c| {
                    for n in 0..=10 {
                        for x in [0.0, 0.5, 1.0] {
                            let (l, rr) = bound_lemma14(&h, n, x, 0.5);
                            c.dev((rr - l).max(0.0) / rr.abs().max(f64::MIN_POSITIVE));
                        }
                    }
                    Ok(())
                }),
                run(format!("coefficient bound at x = 1 (delta = {bd})"), 1e-12, |c| {
                    let big_q = q.powi(r as i32);
                    for n in 0..=12u64 {
                        let a = b_rn_alpha(&s, n, 1.0);
                        let b = b_rn_alpha(&s1, n, 1.0);
                        let mut den = q_number(r as f64, q).powi((r as u64 * n) as i32) * q_rising(1.0, n, big_q);
                        for &al in s.alpha().values() {
                            den *= q_rising(al + 1.0, n, big_q);
                        }
                        c.dev(rel(b, big_q.powf(c2(n as i64)) / den));
                        c.dev((a - b).max(0.0) / b);
                    }
                    Ok(())
                }),
            ]
        }
        Suite::All => unreachable!("expanded by verify"),
    })
}
