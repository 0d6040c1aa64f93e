use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use qbessel_core::qbessel::BesselSpec;
use qbessel_core::qcore::{AlphaVector, QBase, Tolerance};
use qbessel_core::qheat::HeatPolySpec;

use crate::error::{CliError, CliResult};

/// Options shared by every subcommand. Flags and `QBESSEL_*` variables take
/// precedence over a `--config` file, which takes precedence over defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Base q in (0,1).
    #[arg(long, global = true, env = "QBESSEL_Q")]
    pub q: Option<f64>,
    /// Operator order r >= 2.
    #[arg(long, global = true, env = "QBESSEL_R")]
    pub r: Option<u32>,
    /// Deformation exponent delta > 0.
    #[arg(long, global = true, env = "QBESSEL_DELTA")]
    pub delta: Option<f64>,
    /// Bessel index, r-1 comma-separated reals.
    #[arg(long, global = true, env = "QBESSEL_ALPHA", allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Distinguished index k of the heat kernel, 1..r-1.
    #[arg(long = "k-index", global = true, env = "QBESSEL_K_INDEX")]
    pub k_index: Option<usize>,
    /// Absolute truncation tolerance of the series.
    #[arg(long, global = true, env = "QBESSEL_TOL")]
    pub tol: Option<f64>,
    /// Smallest lattice exponent of the x grid.
    #[arg(long, global = true, env = "QBESSEL_KMIN", allow_hyphen_values = true)]
    pub kmin: Option<i32>,
    /// Largest lattice exponent of the x grid.
    #[arg(long, global = true, env = "QBESSEL_KMAX", allow_hyphen_values = true)]
    pub kmax: Option<i32>,
    /// Output CSV path; stdout when absent.
    #[arg(long, global = true, env = "QBESSEL_CSV")]
    pub csv: Option<PathBuf>,
    /// File of `key=value` lines.
    #[arg(long, global = true, env = "QBESSEL_CONFIG")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub base: QBase,
    pub alpha: AlphaVector,
    pub k_index: usize,
    pub tol: Tolerance,
    pub kmin: i32,
    pub kmax: i32,
    pub csv: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(args: &GlobalArgs) -> CliResult<Self> {
        let file = match &args.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        let get = |key: &str| file.get(key).map(String::as_str);

        let q = pick(args.q, get("q"), "q", 0.5)?;
        let r = pick(args.r, get("r"), "r", 2u32)?;
        let delta = pick(args.delta, get("delta"), "delta", 1.0)?;
        let k_index = pick(args.k_index, get("k-index"), "k-index", 1usize)?;
        let tol = pick(args.tol, get("tol"), "tol", 1e-17)?;
        let kmin = pick(args.kmin, get("kmin"), "kmin", 0i32)?;
        let kmax = pick(args.kmax, get("kmax"), "kmax", 5i32)?;
        let csv = args.csv.clone().or_else(|| get("csv").map(PathBuf::from));

        let base = QBase::new(q, r, delta).map_err(config_err)?;
        let alpha = match args.alpha.as_deref().or(get("alpha")) {
            Some(s) => parse_list(s, "alpha")?,
            None => vec![0.0; r as usize - 1],
        };
        let alpha = AlphaVector::new(alpha, r).map_err(config_err)?;
        if k_index < 1 || k_index >= r as usize {
            return Err(CliError::Config(format!("k-index must lie in 1..{}, got {k_index}", r - 1)));
        }
        if !(tol > 0.0) {
            return Err(CliError::Config(format!("tol must be positive, got {tol}")));
        }
        let tol = Tolerance::new(tol, 10.0 * tol, Tolerance::default().max_terms).map_err(config_err)?;
        if kmin > kmax {
            return Err(CliError::Config(format!("kmin {kmin} exceeds kmax {kmax}")));
        }
        Ok(RunConfig {
            base,
            alpha,
            k_index,
            tol,
            kmin,
            kmax,
            csv,
        })
    }

    pub fn spec(&self) -> CliResult<BesselSpec> {
        BesselSpec::new(self.base, self.alpha.clone()).map_err(config_err)
    }

    pub fn heat_spec(&self) -> CliResult<HeatPolySpec> {
        HeatPolySpec::new(self.spec()?, self.k_index).map_err(config_err)
    }

    /// Lattice points `q^k`, `k = kmin..=kmax`, in ascending exponent.
    pub fn grid(&self) -> Vec<(i32, f64)> {
        (self.kmin..=self.kmax).map(|k| (k, self.base.q.powi(k))).collect()
    }
}

fn config_err(e: qbessel_core::QError) -> CliError {
    CliError::Config(match e {
        qbessel_core::QError::InvalidParameter(s) => s,
        other => other.to_string(),
    })
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: Option<&str>, key: &str, default: T) -> CliResult<T> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match file {
        Some(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("cannot parse {key} = {s:?}"))),
        None => Ok(default),
    }
}

pub fn parse_list(s: &str, key: &str) -> CliResult<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("cannot parse {key} entry {p:?}")))
        })
        .collect()
}

const KEYS: [&str; 9] = ["q", "r", "delta", "alpha", "k-index", "tol", "kmin", "kmax", "csv"];

fn read_config_file(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected key=value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("config line {}: unknown key {:?}", i + 1, k.trim())));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# sample\nq = 0.3\nr=3\nalpha=0.1, 0.2\n").unwrap();
        let args = GlobalArgs {
            q: Some(0.6),
            config: Some(path),
            ..Default::default()
        };
        let c = RunConfig::resolve(&args).unwrap();
        assert_eq!(c.base.q, 0.6);
        assert_eq!(c.base.r, 3);
        assert_eq!(c.alpha.values(), &[0.1, 0.2]);
        assert_eq!((c.kmin, c.kmax), (0, 5));
    }

    #[test]
    fn violated_constraints_are_named() {
        let args = GlobalArgs {
            r: Some(3),
            alpha: Some("0.5,-0.9".into()),
            ..Default::default()
        };
        let e = RunConfig::resolve(&args).unwrap_err().to_string();
        assert!(e.contains("alpha[2] < -1 + 2/r"), "{e}");
        let args = GlobalArgs {
            q: Some(1.5),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&args).unwrap_err().to_string().contains("q must lie in (0,1)"));
    }

    #[test]
    fn bad_config_lines() {
        assert!(parse_config("q 0.5").unwrap_err().to_string().contains("line 1"));
        assert!(parse_config("\nfoo=1").unwrap_err().to_string().contains("line 2"));
        assert_eq!(parse_config("k_index=2").unwrap()["k-index"], "2");
    }
}
