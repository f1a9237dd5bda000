use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use rosensweig_core::{MagnetizationLaw, PatternKind, Resolution};

use crate::error::{CliError, CliResult};

/// Options shared by all subcommands. Every option can also be given in the
/// flat `key = value` configuration file (keys use underscores) or through
/// an environment variable with the `ROSENSWEIG_` prefix. Command-line and
/// environment values override the file.
#[derive(Debug, Clone, Default, Args)]
pub struct Settings {
    /// Pattern: rolls, rectangles or hexagons.
    #[arg(long, global = true, env = "ROSENSWEIG_PATTERN")]
    pub pattern: Option<PatternKind>,
    /// Magnetisation law: constant:MU, langevin:M,GAMMA, polynomial:C0,C1,...
    /// or table:PATH. Sign maps accept the bare kinds `constant` and `langevin`.
    #[arg(long, global = true, env = "ROSENSWEIG_LAW")]
    pub law: Option<String>,
    /// Dimensionless inverse depth.
    #[arg(long, global = true, env = "ROSENSWEIG_BETA0")]
    pub beta0: Option<f64>,
    /// Deep-fluid run: the depth is set to the depth cap.
    #[arg(long, global = true, env = "ROSENSWEIG_DEEP", num_args = 0..=1, default_missing_value = "true")]
    pub deep: Option<bool>,
    /// Largest admissible omega / beta0.
    #[arg(long, global = true, env = "ROSENSWEIG_DEPTH_CAP")]
    pub depth_cap: Option<f64>,
    /// Ferrofluid density.
    #[arg(long, global = true, env = "ROSENSWEIG_RHO")]
    pub rho: Option<f64>,
    /// Density of the upper fluid.
    #[arg(long, global = true, env = "ROSENSWEIG_RHO_PRIME")]
    pub rho_prime: Option<f64>,
    /// Gravitational acceleration.
    #[arg(long, global = true, env = "ROSENSWEIG_G")]
    pub g: Option<f64>,
    /// Depth of each fluid layer.
    #[arg(long, global = true, env = "ROSENSWEIG_D")]
    pub d: Option<f64>,
    /// Surface tension.
    #[arg(long, global = true, env = "ROSENSWEIG_SIGMA")]
    pub sigma: Option<f64>,
    /// Vacuum permeability.
    #[arg(long, global = true, env = "ROSENSWEIG_MU0")]
    pub mu0: Option<f64>,
    /// Strength of the applied field.
    #[arg(long, global = true, env = "ROSENSWEIG_H")]
    pub h: Option<f64>,
    /// Fourier truncation N.
    #[arg(long, global = true, env = "ROSENSWEIG_TRUNCATION")]
    pub truncation: Option<usize>,
    /// Chebyshev intervals per strip.
    #[arg(long, global = true, env = "ROSENSWEIG_NY")]
    pub ny: Option<usize>,
    /// Output directory; without it results go to stdout.
    #[arg(long, global = true, env = "ROSENSWEIG_OUT")]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true, env = "ROSENSWEIG_JOBS")]
    pub jobs: Option<usize>,
    /// Seed recorded with the run.
    #[arg(long, global = true, env = "ROSENSWEIG_SEED")]
    pub seed: Option<u64>,
    /// Upper end of the dispersion k-grid.
    #[arg(long, global = true, env = "ROSENSWEIG_KMAX")]
    pub kmax: Option<f64>,
    /// Number of samples (dispersion k-grid, or n for the n x n surface grid).
    #[arg(long, global = true, env = "ROSENSWEIG_SAMPLES")]
    pub samples: Option<usize>,
    /// Branch amplitude s for the surface reconstruction.
    #[arg(long, global = true, env = "ROSENSWEIG_AMPLITUDE", allow_negative_numbers = true)]
    pub amplitude: Option<f64>,
    /// First sweep axis: START:STOP:COUNT or a comma-separated list.
    #[arg(long, global = true, env = "ROSENSWEIG_GRID1", allow_hyphen_values = true)]
    pub grid1: Option<String>,
    /// Second sweep axis, same syntax as grid1.
    #[arg(long, global = true, env = "ROSENSWEIG_GRID2", allow_hyphen_values = true)]
    pub grid2: Option<String>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> CliResult<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| CliError::Invalid(format!("bad value `{value}` for `{key}`: {e}")))
}

macro_rules! flat_keys {
    ($($field:ident),* $(,)?) => {
        impl Settings {
            fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
                match key {
                    $(stringify!($field) => self.$field = Some(parse_value(key, value)?),)*
                    _ => return Err(CliError::Invalid(format!("unknown configuration key `{key}`"))),
                }
                Ok(())
            }

            /// Fills every unset field from `base`.
            pub fn overlay(mut self, base: Settings) -> Settings {
                $(if self.$field.is_none() { self.$field = base.$field; })*
                self
            }
        }
    };
}

flat_keys!(
    pattern, law, beta0, deep, depth_cap, rho, rho_prime, g, d, sigma, mu0, h, truncation, ny,
    out, jobs, seed, kmax, samples, amplitude, grid1, grid2,
);

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment, blank lines are ignored.
    pub fn from_flat_text(text: &str) -> CliResult<Settings> {
        let mut s = Settings::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Invalid(format!("config line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim().to_ascii_lowercase().replace('-', "_");
            s.set(&key, value.trim())
                .map_err(|e| CliError::Invalid(format!("config line {}: {e}", lineno + 1)))?;
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> CliResult<Settings> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Settings::from_flat_text(&text)
    }

    pub fn resolution(&self) -> CliResult<Resolution> {
        let d = Resolution::default();
        let res = Resolution::new(self.truncation.unwrap_or(d.truncation), self.ny.unwrap_or(d.ny))?
            .with_depth_cap(self.depth_cap.unwrap_or(d.depth_cap));
        res.validate()?;
        Ok(res)
    }

    pub fn pattern(&self) -> CliResult<PatternKind> {
        self.pattern
            .ok_or_else(|| CliError::Invalid("missing --pattern".into()))
    }

    pub fn law(&self) -> CliResult<MagnetizationLaw> {
        let spec = self
            .law
            .as_deref()
            .ok_or_else(|| CliError::Invalid("missing --law".into()))?;
        parse_law(spec)
    }

    pub fn physical(&self) -> CliResult<Option<PhysicalInputs>> {
        let all = [self.rho, self.rho_prime, self.g, self.d, self.sigma, self.mu0, self.h];
        if all.iter().all(Option::is_none) {
            return Ok(None);
        }
        match all {
            [Some(rho), Some(rho_prime), Some(g), Some(d), Some(sigma), Some(mu0), Some(h)] => {
                let p = PhysicalInputs { rho, rho_prime, g, d, sigma, mu0, h };
                p.validate()?;
                Ok(Some(p))
            }
            _ => Err(CliError::Invalid(
                "physical inputs need all of rho, rho_prime, g, d, sigma, mu0, h".into(),
            )),
        }
    }

    /// Exactly one of `beta0`, the physical inputs and `deep` selects the depth.
    pub fn depth(&self) -> CliResult<Depth> {
        let physical = self.physical()?;
        let deep = self.deep.unwrap_or(false);
        let given = self.beta0.is_some() as u8 + physical.is_some() as u8 + deep as u8;
        if given != 1 {
            return Err(CliError::Invalid(
                "give exactly one of --beta0, the physical inputs, or --deep".into(),
            ));
        }
        if let Some(b) = self.beta0 {
            if !(b.is_finite() && b > 0.0) {
                return Err(CliError::Invalid(format!("beta0 must be positive, got {b}")));
            }
            return Ok(Depth::Beta0(b));
        }
        if let Some(p) = physical {
            return Ok(Depth::Beta0(p.dimensionless().beta));
        }
        Ok(Depth::Deep)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Depth {
    Beta0(f64),
    Deep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalInputs {
    pub rho: f64,
    pub rho_prime: f64,
    pub g: f64,
    pub d: f64,
    pub sigma: f64,
    pub mu0: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Dimensionless {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl PhysicalInputs {
    pub fn validate(&self) -> CliResult<()> {
        let named = [
            ("rho", self.rho),
            ("rho_prime", self.rho_prime),
            ("g", self.g),
            ("d", self.d),
            ("sigma", self.sigma),
            ("mu0", self.mu0),
            ("h", self.h),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.rho <= self.rho_prime {
            return Err(CliError::Invalid(format!(
                "need rho > rho_prime, got {} <= {}",
                self.rho, self.rho_prime
            )));
        }
        Ok(())
    }

    pub fn dimensionless(&self) -> Dimensionless {
        let m = self.mu0 * self.h * self.h;
        let alpha = (self.rho - self.rho_prime) * self.g * self.d / m;
        let beta = self.sigma / (m * self.d);
        Dimensionless { alpha, beta, gamma: alpha * beta }
    }
}

fn numbers(kind: &str, list: &str) -> CliResult<Vec<f64>> {
    list.split(',')
        .map(|t| parse_value::<f64>(kind, t.trim()))
        .collect()
}

pub fn parse_law(spec: &str) -> CliResult<MagnetizationLaw> {
    let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
    let kind = kind.trim().to_ascii_lowercase();
    let law = match kind.as_str() {
        "constant" => match numbers("constant", args)?.as_slice() {
            [mu] => MagnetizationLaw::constant(*mu)?,
            _ => return Err(CliError::Invalid("constant law takes one value: constant:MU".into())),
        },
        "langevin" => match numbers("langevin", args)?.as_slice() {
            [m, g] => MagnetizationLaw::langevin(*m, *g)?,
            _ => {
                return Err(CliError::Invalid(
                    "Langevin law takes two values: langevin:M,GAMMA".into(),
                ))
            }
        },
        "polynomial" => MagnetizationLaw::polynomial(numbers("polynomial", args)?)?,
        "table" => {
            let path = Path::new(args.trim());
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let (s, mu) = parse_table(&text)?;
            MagnetizationLaw::table(s, mu)?
        }
        _ => return Err(CliError::Invalid(format!("unknown law `{spec}`"))),
    };
    Ok(law)
}

/// Two numeric columns `s, mu`; a non-numeric first line is taken as a header.
fn parse_table(text: &str) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let mut s = Vec::new();
    let mut mu = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split([',', ' ', '\t']).filter(|c| !c.is_empty()).collect();
        let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
        match parsed.as_deref() {
            Some([a, b]) => {
                s.push(*a);
                mu.push(*b);
            }
            None if s.is_empty() => continue,
            _ => {
                return Err(CliError::Invalid(format!(
                    "table line {}: expected two numbers",
                    i + 1
                )))
            }
        }
    }
    Ok((s, mu))
}

/// `START:STOP:COUNT` (inclusive, evenly spaced) or `a,b,c`.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, stop, count] => {
            let a: f64 = parse_value("grid start", start.trim())?;
            let b: f64 = parse_value("grid stop", stop.trim())?;
            let n: usize = parse_value("grid count", count.trim())?;
            Ok(match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            })
        }
        [_] => numbers("grid", spec),
        _ => Err(CliError::Invalid(format!("bad grid `{spec}`"))),
    }
}

pub fn load(cli: Settings, config: Option<&Path>) -> CliResult<Settings> {
    let base = match config {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    Ok(cli.overlay(base))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_text_and_overlay() {
        let file = Settings::from_flat_text("pattern = rolls\n# comment\nbeta0=0.3\nny = 48 # trailing\n").unwrap();
        assert_eq!(file.pattern, Some(PatternKind::Rolls));
        let cli = Settings { beta0: Some(0.1), ..Settings::default() };
        let s = cli.overlay(file);
        assert_eq!(s.beta0, Some(0.1));
        assert_eq!(s.ny, Some(48));
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(Settings::from_flat_text("pattern rolls").is_err());
        assert!(Settings::from_flat_text("colour = red").is_err());
        assert!(Settings::from_flat_text("beta0 = abc").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("1:3:3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_grid("1,5").unwrap(), vec![1.0, 5.0]);
        assert!(parse_grid("0:1:0").unwrap().is_empty());
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn dimensionless_numbers() {
        let p = PhysicalInputs { rho: 3.0, rho_prime: 1.0, g: 2.0, d: 0.5, sigma: 2.0, mu0: 1.0, h: 2.0 };
        let dn = p.dimensionless();
        assert_eq!(dn.beta, 1.0);
        assert_eq!(dn.alpha, 0.5);
        assert_eq!(dn.gamma, dn.alpha * dn.beta);
        let q = PhysicalInputs { h: 4.0, ..p };
        assert_eq!(q.dimensionless().beta, 0.25);
    }

    #[test]
    fn depth_sources_are_exclusive() {
        let s = Settings { beta0: Some(0.2), deep: Some(true), ..Settings::default() };
        assert!(s.depth().is_err());
        let s = Settings { rho: Some(1.0), ..Settings::default() };
        assert!(s.depth().is_err());
        let s = Settings { deep: Some(true), ..Settings::default() };
        assert_eq!(s.depth().unwrap(), Depth::Deep);
    }

    #[test]
    fn law_specs() {
        assert!(matches!(parse_law("constant:2").unwrap(), MagnetizationLaw::Constant { .. }));
        assert!(matches!(parse_law("langevin:2, 1.5").unwrap(), MagnetizationLaw::Langevin { .. }));
        assert!(parse_law("constant").is_err());
        assert!(parse_law("constant:0.5").is_err());
        assert!(parse_law("cubic:1").is_err());
        let (s, mu) = parse_table("s,mu\n0,2\n1,2.5\n").unwrap();
        assert_eq!((s, mu), (vec![0.0, 1.0], vec![2.0, 2.5]));
    }
}
