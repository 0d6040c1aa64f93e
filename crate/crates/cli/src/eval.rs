use clap::{Args, ValueEnum};
use qbessel_core::qbessel::j_alpha;
use qbessel_core::qheat::{heat_poly, kernel_k, r_function};
use qbessel_core::qspecial::{cos_r, e_q, e_q_delta, phi_delta, sin_rl, HyperSpec};
use qbessel_core::QError;

use crate::config::{parse_list, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    #[value(name = "jalpha")]
    JAlpha,
    #[value(name = "cosr")]
    CosR,
    #[value(name = "sinrl")]
    SinRl,
    #[value(name = "heatpoly")]
    HeatPoly,
    #[value(name = "kernel")]
    Kernel,
    #[value(name = "Rfunc")]
    RFunc,
    #[value(name = "eq")]
    SmallE,
    #[value(name = "Eq")]
    BigE,
    #[value(name = "phi")]
    Phi,
}

impl Target {
    pub fn uses_time(self) -> bool {
        matches!(self, Target::HeatPoly | Target::Kernel)
    }
}

/// Target-specific parameters.
#[derive(Debug, Clone, Default, Args)]
pub struct TargetArgs {
    /// Order l of sin_{r,l}.
    #[arg(long, default_value_t = 1)]
    pub l: u32,
    /// Degree n of the heat polynomial.
    #[arg(long, default_value_t = 0)]
    pub n: u64,
    /// Numerator parameters of phi.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub num: String,
    /// Denominator parameters of phi.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub den: String,
}

/// A value together with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub value: f64,
    pub terms: usize,
    pub tail: f64,
}

pub fn evaluate(target: Target, cfg: &RunConfig, args: &TargetArgs, x: f64, t: Option<f64>) -> CliResult<Point> {
    let tol = &cfg.tol;
    let need_t = || t.ok_or_else(|| CliError::Config("this target needs --t".into()));
    let series = |s: qbessel_core::series::SeriesEval<f64>| Point {
        value: s.value,
        terms: s.terms,
        tail: s.tail_bound,
    };
    Ok(match target {
        Target::JAlpha => series(j_alpha(&cfg.spec()?, x, tol)?),
        Target::CosR => series(cos_r(x, &cfg.base, tol)?),
        Target::SinRl => series(sin_rl(x, args.l, &cfg.base, tol)?),
        Target::HeatPoly => Point {
            value: heat_poly(&cfg.heat_spec()?, args.n, x, need_t()?),
            terms: args.n as usize + 1,
            tail: 0.0,
        },
        Target::Kernel => series(kernel_k(&cfg.heat_spec()?, x, need_t()?, tol)?),
        Target::RFunc => series(r_function(&cfg.heat_spec()?, x, tol)?),
        Target::SmallE => match e_q_delta(x, cfg.base.q, 0.0, tol) {
            Ok(s) => series(s),
            Err(QError::Radius(_)) | Err(QError::NonConvergence { .. }) => Point {
                value: e_q(x, cfg.base.q, tol)?,
                terms: 0,
                tail: 0.0,
            },
            Err(e) => return Err(e.into()),
        },
        Target::BigE => series(e_q_delta(x, cfg.base.q, 1.0, tol)?),
        Target::Phi => {
            let spec = HyperSpec::new(
                parse_list(&args.num, "num")?,
                parse_list(&args.den, "den")?,
                cfg.base.delta,
                cfg.base.q,
            )?;
            series(phi_delta(&spec, x, tol)?)
        }
    })
}

/// Shortest round-trip decimal; integers print without a fraction.
pub fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e16 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_round_trips() {
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(0.1), "0.1");
        assert_eq!(fmt_num(1e-20), "1e-20");
        for v in [std::f64::consts::PI, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }
}
