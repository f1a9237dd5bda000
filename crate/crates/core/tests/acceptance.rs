//! End-to-end acceptance checks. Runs without the libtest harness and prints
//! one PASS/FAIL line per criterion.

mod common;

use std::time::Instant;

use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rosensweig_core::bifurcation::classify_branch;
use rosensweig_core::lattice::symmetrize;
use rosensweig_core::linear_analysis::{self, critical_point, dispersion_derivatives, dispersion_r};
use rosensweig_core::*;

type Outcome = std::result::Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn deep_res() -> Resolution {
    Resolution::new(4, 64).unwrap()
}

fn deep_gamma2(pattern: PatternKind, mu: f64) -> f64 {
    let law = MagnetizationLaw::constant(mu).unwrap();
    // A very small beta0 is capped at omega / beta0 = 20.
    let r = classify_branch(pattern, &law, 1e-4, &deep_res()).unwrap();
    assert!(r.diagnostics.depth_capped && r.cp.omega_tilde >= 20.0 - 1e-9);
    r.gamma2.unwrap()
}

fn deep_sign_change(pattern: PatternKind, lo: f64, hi: f64, target: f64) -> Outcome {
    let (glo, ghi) = (deep_gamma2(pattern, lo), deep_gamma2(pattern, hi));
    if glo.signum() == ghi.signum() {
        return Err(format!("no sign change of gamma2 on [{lo}, {hi}]"));
    }
    let root = common::bisect(|mu| deep_gamma2(pattern, mu), lo, hi);
    let err = (root - target).abs();
    check(
        err < 1e-3 && glo < 0.0 && ghi > 0.0,
        format!("sign change at mu = {root:.10}, target {target:.10}, |diff| = {err:.2e}, sub below / super above"),
    )
}

fn criterion1() -> Outcome {
    deep_sign_change(PatternKind::Rolls, 3.0, 4.0, common::mu_c_rolls())
}

fn criterion2() -> Outcome {
    deep_sign_change(PatternKind::Rectangles, 1.2, 1.6, common::mu_c_rectangles())
}

fn criterion3() -> Outcome {
    let res = Resolution::default();
    let mut worst: f64 = 0.0;
    let mut at = (0.0, 0.0, PatternKind::Rolls);
    for i in 0..5 {
        let mu = 1.5 + 4.5 * i as f64 / 4.0;
        let law = MagnetizationLaw::constant(mu).unwrap();
        for j in 0..5 {
            let wt = 0.5 + 3.5 * j as f64 / 4.0;
            for pattern in [PatternKind::Rolls, PatternKind::Rectangles] {
                let p = BranchProblem::from_omega_tilde(pattern, &law, wt, &res).map_err(|e| e.to_string())?;
                let g2 = p.classify().map_err(|e| e.to_string())?.gamma2.ok_or("missing gamma2")?;
                let exact = match pattern {
                    PatternKind::Rolls => common::gamma2_rolls(mu, wt),
                    _ => common::gamma2_rectangles(mu, wt),
                };
                let rel = (g2 - exact).abs() / exact.abs();
                if rel > worst {
                    worst = rel;
                    at = (mu, wt, pattern);
                }
            }
        }
    }
    check(
        worst < 1e-6,
        format!("50 grid points, worst relative error {worst:.2e} at mu = {}, omega_tilde = {}, {}", at.0, at.1, at.2),
    )
}

fn criterion4() -> Outcome {
    let res = Resolution::default();
    let mut rng = StdRng::seed_from_u64(20240607);
    let mut worst: f64 = 0.0;
    let mut laws = 0;
    while laws < 10 {
        let law = MagnetizationLaw::langevin(rng.gen_range(0.5..8.0), rng.gen_range(0.3..3.0)).unwrap();
        let c = law.constants_at_one().unwrap();
        let threshold = linear_analysis::dispersion_threshold(&c);
        if !(c.mu1 > 1.05) {
            continue;
        }
        laws += 1;
        let beta0 = threshold * rng.gen_range(0.2..0.8);
        for pattern in [PatternKind::Rolls, PatternKind::Rectangles] {
            let r = classify_branch(pattern, &law, beta0, &res).map_err(|e| e.to_string())?;
            worst = worst.max(r.gamma1.abs());
        }
    }
    let law = MagnetizationLaw::constant(2.0).unwrap();
    let hex = classify_branch(PatternKind::Hexagons, &law, 0.1, &res).map_err(|e| e.to_string())?;
    check(
        worst < 1e-10
            && hex.gamma1.abs() > hex.diagnostics.tol_trans
            && hex.classification == BranchClassification::Transcritical,
        format!(
            "max |gamma1| over 10 Langevin laws (rolls, rectangles) = {worst:.2e}; hexagons mu = 2, beta0 = 0.1: gamma1 = {:.6e}, {}",
            hex.gamma1, hex.classification
        ),
    )
}

fn rank(vectors: &[Vec<f64>]) -> usize {
    let m = DMatrix::from_fn(vectors[0].len(), vectors.len(), |i, j| vectors[j][i]);
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-10 * top).count()
}

fn criterion5() -> Outcome {
    let law = MagnetizationLaw::constant(2.0).unwrap();
    let cp = critical_point(0.1, &law).map_err(|e| e.to_string())?;
    let mut details = Vec::new();
    let mut ok = true;
    for (pattern, expected) in [
        (PatternKind::Rolls, 2),
        (PatternKind::Rectangles, 4),
        (PatternKind::Hexagons, 6),
    ] {
        let lat = LatticeSpec::new(pattern, cp.omega, 4).map_err(|e| e.to_string())?;
        let count = lat.dual_vectors_of_length(cp.omega, lat.default_length_tol()).len();
        let basis = linear_analysis::kernel_basis(&lat, &cp).map_err(|e| e.to_string())?;
        let sym: Vec<Vec<f64>> = basis
            .iter()
            .map(|b| {
                b.components()
                    .iter()
                    .flat_map(|f| symmetrize(f).coeffs().iter().flat_map(|c| [c.re, c.im]).collect::<Vec<_>>())
                    .collect()
            })
            .collect();
        let full: Vec<Vec<f64>> = basis
            .iter()
            .map(|b| {
                b.components()
                    .iter()
                    .flat_map(|f| f.coeffs().iter().flat_map(|c| [c.re, c.im]).collect::<Vec<_>>())
                    .collect()
            })
            .collect();
        let (r_full, r_sym) = (rank(&full), rank(&sym));
        ok &= count == expected && r_full == expected && r_sym == 1;
        details.push(format!("{pattern}: {count} vectors, kernel dim {r_full}, symmetrised {r_sym}"));
    }
    check(ok, details.join("; "))
}

fn criterion6() -> Outcome {
    let law = MagnetizationLaw::constant(2.0).unwrap();
    let c = law.constants_at_one().unwrap();
    let threshold = linear_analysis::dispersion_threshold(&c);
    let mut ok = (threshold - 2.0 / 3.0).abs() < 1e-15;
    ok &= matches!(critical_point(2.0 / 3.0, &law), Err(Error::NoPositiveMaximum { .. }));
    ok &= matches!(critical_point(0.9, &law), Err(Error::NoPositiveMaximum { .. }));
    let mut worst: f64 = 0.0;
    for beta0 in [0.01, 0.1, 0.3, 0.5, 0.6, 0.66] {
        let cp = critical_point(beta0, &law).map_err(|e| format!("beta0 = {beta0}: {e}"))?;
        let (r, r1, r2) = dispersion_derivatives(cp.omega, beta0, &c);
        worst = worst.max(r1.abs()).max((r - cp.gamma0).abs());
        ok &= r2 < 0.0 && cp.gamma0 > 0.0;
    }
    ok &= dispersion_r(0.0, 0.3, &c) == 0.0 && dispersion_r(1e-9, 0.3, &c).abs() < 1e-8;
    ok &= worst < 1e-8;
    check(
        ok,
        format!("threshold {threshold:.16}, max |r'(omega)| = {worst:.2e}, r''(omega) < 0 on 6 depths"),
    )
}

fn random_field(lat: &LatticeSpec, rng: &mut StdRng, modes: &[(i32, i32)]) -> SurfaceField {
    let mut f = SurfaceField::zeros(lat);
    for &(m, n) in modes {
        f.axpy(rng.gen_range(-1.0..1.0), &SurfaceField::cosine(lat, m, n));
        f.axpy(rng.gen_range(-1.0..1.0), &SurfaceField::sine(lat, m, n));
    }
    f
}

fn modes_for(pattern: PatternKind) -> Vec<(i32, i32)> {
    match pattern {
        PatternKind::Rolls => vec![(1, 0), (2, 0)],
        _ => vec![(1, 0), (0, 1), (1, 1), (2, -1)],
    }
}

fn criterion7() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut ratios = Vec::new();
    for pattern in PatternKind::ALL {
        let law = MagnetizationLaw::langevin(rng.gen_range(1.0..4.0), rng.gen_range(0.5..3.0)).unwrap();
        let lat = LatticeSpec::new(pattern, 1.0, 4).map_err(|e| e.to_string())?;
        let modes = modes_for(pattern);
        let eta = random_field(&lat, &mut rng, &modes);
        let phi_lo = random_field(&lat, &mut rng, &modes);
        let mut phi_up = random_field(&lat, &mut rng, &modes);
        phi_up.remove_mean();
        for (strip, phi) in [(Strip::Lower, &phi_lo), (Strip::Upper, &phi_up)] {
            let s = StripSolver::new(&lat, strip, &law, 0.5, 32).map_err(|e| e.to_string())?;
            let ex = s.taylor(&eta, phi, 3).map_err(|e| e.to_string())?;
            let mut errs = Vec::new();
            for eps in [1e-2, 5e-3] {
                let nl = s.nonlinear(&eta.scale(eps), &phi.scale(eps), 1e-13).map_err(|e| e.to_string())?;
                errs.push((nl.g.max_abs_diff(&ex.g_sum(eps)), nl.h.max_abs_diff(&ex.h_sum(eps))));
            }
            ratios.push(errs[0].0 / errs[1].0);
            ratios.push(errs[0].1 / errs[1].1);
        }
    }
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    check(
        lo >= 12.0 && hi <= 20.0,
        format!("{} decay ratios (G, H, G', H' x 3 patterns) in [{lo:.3}, {hi:.3}]", ratios.len()),
    )
}

fn criterion8() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let res = Resolution::new(4, 32).unwrap();
    let mut worst: f64 = 0.0;
    for pattern in PatternKind::ALL {
        for _ in 0..2 {
            let law = MagnetizationLaw::langevin(rng.gen_range(1.0..4.0), rng.gen_range(0.5..3.0)).unwrap();
            let c = law.constants_at_one().unwrap();
            let beta0 = 0.5 * linear_analysis::dispersion_threshold(&c);
            let lat = LatticeSpec::new(pattern, rng.gen_range(0.5..2.0), 4).map_err(|e| e.to_string())?;
            let modes = modes_for(pattern);
            let amp = 0.02;
            let mut up = random_field(&lat, &mut rng, &modes).scale(amp);
            up.remove_mean();
            let state = StateTriple::new(
                random_field(&lat, &mut rng, &modes).scale(amp),
                up,
                random_field(&lat, &mut rng, &modes).scale(amp),
            )
            .map_err(|e| e.to_string())?;
            let r = bifurcation::residual(&lat, &law, beta0, 0.0, &state, &res).map_err(|e| e.to_string())?;
            worst = worst.max((r.phi_up.mean() * lat.cell_constant).abs());
        }
    }
    check(worst < 1e-9, format!("max |integral of G' + G + mu* - mu(1)| over 6 random states = {worst:.2e}"))
}

fn criterion9() -> Outcome {
    let law = MagnetizationLaw::langevin(2.0, 1.5).unwrap();
    let p = BranchProblem::new(PatternKind::Rolls, &law, 0.3, &Resolution::default()).map_err(|e| e.to_string())?;
    let r = p.classify().map_err(|e| e.to_string())?;
    let g2 = r.gamma2.ok_or("missing gamma2")?;
    let v0 = p.v0();
    let norms: Vec<f64> = [1e-2, 5e-3]
        .iter()
        .map(|&s| {
            let mut state = v0.scale(s);
            state.axpy(s * s, &r.w1);
            p.residual(p.cp.gamma0 + s * s * g2, &state).map(|x| x.max_abs())
        })
        .collect::<Result<_>>()
        .map_err(|e| e.to_string())?;
    let ratio = norms[0] / norms[1];
    check(
        (7.0..=9.0).contains(&ratio),
        format!("residual {:.3e} at s = 1e-2, {:.3e} at s = 5e-3, ratio {ratio:.3}", norms[0], norms[1]),
    )
}

fn sign_changes(row: &[f64]) -> usize {
    row.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
}

fn criterion10() -> Outcome {
    let res = deep_res();
    let mut details = Vec::new();
    let mut ok = true;
    for pattern in [PatternKind::Rolls, PatternKind::Rectangles] {
        let mut pos = 0;
        let mut neg = 0;
        let mut max_changes = 0;
        for wt in [1.0, 2.0, 5.0, 20.0] {
            let row: Vec<f64> = (0..12)
                .map(|i| {
                    let law = MagnetizationLaw::constant(1.2 + 4.8 * i as f64 / 11.0).unwrap();
                    BranchProblem::from_omega_tilde(pattern, &law, wt, &res)
                        .and_then(|p| p.classify())
                        .map(|r| r.gamma2.unwrap_or(f64::NAN))
                        .unwrap_or(f64::NAN)
                })
                .collect();
            pos += row.iter().filter(|&&g| g > 0.0).count();
            neg += row.iter().filter(|&&g| g < 0.0).count();
            max_changes = max_changes.max(sign_changes(&row));
        }
        let mut lpos = 0;
        let mut lneg = 0;
        for m in [0.5, 2.0, 4.0, 8.0, 16.0] {
            for g in [0.1, 0.3, 1.0, 3.0, 10.0] {
                let law = MagnetizationLaw::langevin(m, g).unwrap();
                if let Ok(Some(g2)) = BranchProblem::from_omega_tilde(pattern, &law, 20.0, &res)
                    .and_then(|p| p.classify())
                    .map(|r| r.gamma2)
                {
                    if g2 > 0.0 {
                        lpos += 1;
                    } else {
                        lneg += 1;
                    }
                }
            }
        }
        ok &= pos > 0 && neg > 0 && max_changes == 1 && lpos > 0 && lneg > 0;
        details.push(format!(
            "{pattern}: constant-mu map {pos}+/{neg}-, at most {max_changes} crossing per row; Langevin map {lpos}+/{lneg}-"
        ));
    }
    check(ok, details.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("rolls deep-fluid critical permeability", criterion1),
        ("rectangles deep-fluid critical permeability", criterion2),
        ("closed-form gamma2 cross-check", criterion3),
        ("symmetry-forced vanishing of gamma1", criterion4),
        ("kernel dimensions", criterion5),
        ("dispersion threshold", criterion6),
        ("DN Taylor consistency", criterion7),
        ("flux identity", criterion8),
        ("branch residual order", criterion9),
        ("sign-map properties", criterion10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("[PASS] criterion {}: {name} ({secs:.1} s): {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("[FAIL] criterion {}: {name} ({secs:.1} s): {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
