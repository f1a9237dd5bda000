use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use rosensweig_core::linear_analysis::{critical_point_from_omega_tilde, dispersion_csv};
use rosensweig_core::{
    BranchProblem, MagnetizationLaw, PatternKind, Resolution, SurfaceField,
};

use crate::config::{parse_grid, Depth, Settings};
use crate::error::{CliError, CliResult};

pub const DEFAULT_DISPERSION_SAMPLES: usize = 401;
pub const DEFAULT_SURFACE_SAMPLES: usize = 32;
pub const CONSTANT_GRID1: &str = "1.2:6:12";
pub const CONSTANT_GRID2: &str = "1,2,5,20";
pub const LANGEVIN_GRID1: &str = "0.5,2,4,8,16";
pub const LANGEVIN_GRID2: &str = "0.1,0.3,1,3,10";

/// Result of a subcommand: a file name for `--out` and its contents.
pub struct Output {
    pub file_name: &'static str,
    pub contents: String,
}

impl Output {
    /// Writes to `dir/file_name`, or to stdout without `--out`.
    pub fn emit(&self, out: Option<&PathBuf>) -> CliResult<()> {
        match out {
            None => {
                print!("{}", self.contents);
                Ok(())
            }
            Some(dir) => {
                let io = |source| CliError::Io { path: dir.clone(), source };
                std::fs::create_dir_all(dir).map_err(io)?;
                let path = dir.join(self.file_name);
                std::fs::write(&path, &self.contents).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                eprintln!("wrote {}", path.display());
                Ok(())
            }
        }
    }
}

fn branch_problem(
    pattern: PatternKind,
    law: &MagnetizationLaw,
    depth: Depth,
    res: &Resolution,
) -> CliResult<BranchProblem> {
    Ok(match depth {
        Depth::Beta0(b) => BranchProblem::new(pattern, law, b, res)?,
        Depth::Deep => BranchProblem::from_omega_tilde(pattern, law, res.depth_cap, res)?,
    })
}

pub fn dimensionless(s: &Settings) -> CliResult<Output> {
    let p = s
        .physical()?
        .ok_or_else(|| CliError::Invalid("dimensionless needs rho, rho_prime, g, d, sigma, mu0, h".into()))?;
    let mut contents = serde_json::to_string(&p.dimensionless()).expect("plain struct");
    contents.push('\n');
    Ok(Output { file_name: "dimensionless.json", contents })
}

pub fn dispersion(s: &Settings) -> CliResult<Output> {
    let law = s.law()?;
    let res = s.resolution()?;
    let beta0 = match s.depth()? {
        Depth::Beta0(b) => b,
        Depth::Deep => critical_point_from_omega_tilde(res.depth_cap, &law)?.beta0,
    };
    let kmax = match s.kmax {
        Some(k) if k.is_finite() && k > 0.0 => k,
        Some(k) => return Err(CliError::Invalid(format!("kmax must be positive, got {k}"))),
        None => {
            let c = law.constants_at_one()?;
            let k = 1.25 * c.mu1 * (c.mu1 - 1.0).powi(2) / (c.mu1 + c.s1);
            if k > 0.0 { k } else { 1.0 }
        }
    };
    let n = s.samples.unwrap_or(DEFAULT_DISPERSION_SAMPLES);
    let contents = dispersion_csv(beta0, &law, kmax, n)?;
    Ok(Output { file_name: "dispersion.csv", contents })
}

pub fn branch(s: &Settings) -> CliResult<Output> {
    let res = s.resolution()?;
    let result = branch_problem(s.pattern()?, &s.law()?, s.depth()?, &res)?.classify()?;
    let mut contents = serde_json::to_string_pretty(&result).expect("branch result serialises");
    contents.push('\n');
    Ok(Output { file_name: "branch.json", contents })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SweepKind {
    /// Axes `(mu, omega_tilde)`.
    Constant,
    /// Axes `(M, gamma)` at the configured depth.
    Langevin,
}

struct SignRow {
    p1: f64,
    p2: f64,
    gamma2: f64,
    sign: f64,
    classification: String,
    reason: String,
}

fn sign_row(kind: SweepKind, pattern: PatternKind, depth: Option<Depth>, res: &Resolution, p1: f64, p2: f64) -> SignRow {
    let run = || -> CliResult<_> {
        let problem = match kind {
            SweepKind::Constant => {
                BranchProblem::from_omega_tilde(pattern, &MagnetizationLaw::constant(p1)?, p2, res)?
            }
            SweepKind::Langevin => branch_problem(
                pattern,
                &MagnetizationLaw::langevin(p1, p2)?,
                depth.expect("checked before the sweep"),
                res,
            )?,
        };
        Ok(problem.classify()?)
    };
    let (gamma2, sign, classification, reason) = match run() {
        Ok(r) => match r.gamma2 {
            Some(g) => (g, if g == 0.0 { 0.0 } else { g.signum() }, r.classification.to_string(), String::new()),
            None => (f64::NAN, f64::NAN, r.classification.to_string(), "gamma1 does not vanish".into()),
        },
        Err(e) => (f64::NAN, f64::NAN, "failed".into(), e.to_string().replace([',', '\n'], ";")),
    };
    SignRow { p1, p2, gamma2, sign, classification, reason }
}

pub fn signmap(s: &Settings) -> CliResult<Output> {
    let pattern = s.pattern()?;
    let res = s.resolution()?;
    let spec = s
        .law
        .as_deref()
        .ok_or_else(|| CliError::Invalid("missing --law (constant or langevin)".into()))?;
    let kind = match spec.split(':').next().unwrap_or("").trim().to_ascii_lowercase().as_str() {
        "constant" => SweepKind::Constant,
        "langevin" => SweepKind::Langevin,
        _ => return Err(CliError::Invalid(format!("sign maps sweep constant or langevin laws, got `{spec}`"))),
    };
    let (default1, default2, header) = match kind {
        SweepKind::Constant => (CONSTANT_GRID1, CONSTANT_GRID2, "mu,omega_tilde"),
        SweepKind::Langevin => (LANGEVIN_GRID1, LANGEVIN_GRID2, "M,gamma"),
    };
    let depth = match kind {
        SweepKind::Constant => None,
        SweepKind::Langevin => Some(s.depth()?),
    };
    let g1 = parse_grid(s.grid1.as_deref().unwrap_or(default1))?;
    let g2 = parse_grid(s.grid2.as_deref().unwrap_or(default2))?;
    let points: Vec<(f64, f64)> = g1.iter().flat_map(|&a| g2.iter().map(move |&b| (a, b))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(s.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<SignRow> = pool.install(|| {
        points
            .par_iter()
            .map(|&(a, b)| sign_row(kind, pattern, depth, &res, a, b))
            .collect()
    });

    let mut contents = format!("{header},gamma2,sign,classification,reason\n");
    for r in rows {
        let _ = writeln!(
            contents,
            "{:.16e},{:.16e},{:.16e},{},{},{}",
            r.p1, r.p2, r.gamma2, r.sign, r.classification, r.reason
        );
    }
    Ok(Output { file_name: "signmap.csv", contents })
}

pub fn surface(s: &Settings) -> CliResult<Output> {
    let amplitude = s
        .amplitude
        .ok_or_else(|| CliError::Invalid("missing --amplitude".into()))?;
    if !amplitude.is_finite() {
        return Err(CliError::Invalid(format!("amplitude must be finite, got {amplitude}")));
    }
    let res = s.resolution()?;
    let problem = branch_problem(s.pattern()?, &s.law()?, s.depth()?, &res)?;
    let (w1, _) = problem.solve_w1(problem.gamma1()?)?;
    let eta: SurfaceField = problem.v0().eta.scale(amplitude) + w1.eta.scale(amplitude * amplitude);
    let sup = eta.to_grid().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if problem.beta0() * sup >= 0.5 {
        return Err(CliError::Invalid(format!(
            "amplitude {amplitude} violates the guard sup|beta0 eta| = {:.3e} < 1/2",
            problem.beta0() * sup
        )));
    }
    let n = s.samples.unwrap_or(DEFAULT_SURFACE_SAMPLES);
    let lat = problem.lat;
    let mut contents = String::from("x,z,eta\n");
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
            let p = [a * lat.l1[0] + b * lat.l2[0], a * lat.l1[1] + b * lat.l2[1]];
            let _ = writeln!(contents, "{:.16e},{:.16e},{:.16e}", p[0], p[1], eta.evaluate(p));
        }
    }
    Ok(Output { file_name: "surface.csv", contents })
}
