use std::path::Path;

use qbessel_core::qcalc::{lattice_exponent, LatticeAtoms};
use qbessel_core::qheat::{heat_residual, solve_heat};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::eval::fmt_num;

/// Reads `x,value` samples; every `x` must be a lattice point `q^k`.
pub fn read_samples(path: &Path, q: f64) -> CliResult<LatticeAtoms> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_samples(&text, q)
}

pub fn parse_samples(text: &str, q: f64) -> CliResult<LatticeAtoms> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut atoms = Vec::new();
    let mut saw_header = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Config(format!("line {line}: {e}"))
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if !saw_header {
            saw_header = true;
            if rec.iter().collect::<Vec<_>>() != ["x", "value"] {
                return Err(CliError::Config(format!("line {line}: expected header `x,value`")));
            }
            continue;
        }
        if rec.len() != 2 {
            return Err(CliError::Config(format!("line {line}: expected 2 fields, found {}", rec.len())));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Config(format!("line {line}: not a finite number: {s:?}")))
        };
        let x = parse(&rec[0])?;
        let v = parse(&rec[1])?;
        let k = lattice_exponent(x, q)
            .ok_or_else(|| CliError::Config(format!("line {line}: x = {x} is not a lattice point q^k")))?;
        atoms.push((k, v));
    }
    if atoms.is_empty() {
        return Err(CliError::Config("input has no data rows".into()));
    }
    Ok(LatticeAtoms::new(q, atoms))
}

/// Rows `x,t,u,residual` over the configured grid.
pub fn solve_rows(cfg: &RunConfig, f: &LatticeAtoms, t: f64) -> CliResult<Vec<Vec<String>>> {
    let h = cfg.heat_spec()?;
    let u = |x: f64, s: f64| Ok(solve_heat(&h, f, x, s, &cfg.tol)?.value);
    cfg.grid()
        .into_iter()
        .map(|(_, x)| {
            let v = u(x, t)?;
            let res = heat_residual(&h, &u, x, t)?;
            Ok(vec![fmt_num(x), fmt_num(t), fmt_num(v), fmt_num(res)])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use qbessel_core::qcalc::LatticeFunction;

    #[test]
    fn parses_lattice_samples() {
        let a = parse_samples("x,value\n1,2\n0.25, -1\n", 0.5).unwrap();
        assert_eq!(a.eval(1.0), 2.0);
        assert_eq!(a.eval(0.25), -1.0);
        assert_eq!(a.eval(0.5), 0.0);
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse_samples("x,value\n1,2\n0.3,1\n", 0.5).unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
        let e = parse_samples("x,value\n1,abc\n", 0.5).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        let e = parse_samples("x,value\n1,2,3\n", 0.5).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        assert!(parse_samples("x,value\n", 0.5).is_err());
        assert!(parse_samples("a,b\n1,2\n", 0.5).unwrap_err().to_string().contains("line 1"));
    }
}
