//! Residual map of the interface problem, its quadratic and cubic Taylor
//! forms, and the branch coefficients `gamma1`, `w1`, `gamma2`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dn_operators::{DnExpansion, StripSolver};
use crate::fields::{Resolution, StateTriple, SurfaceField};
use crate::lattice::{LatticeSpec, PatternKind};
use crate::linear_analysis::{self, CriticalPoint};
use crate::magnetization::MagnetizationLaw;
use crate::{Error, Result};

/// Tolerance of the Newton solves inside [`BranchProblem::residual`].
pub const DEFAULT_NONLINEAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchClassification {
    Transcritical,
    Supercritical,
    Subcritical,
}

impl fmt::Display for BranchClassification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchClassification::Transcritical => "transcritical",
            BranchClassification::Supercritical => "supercritical",
            BranchClassification::Subcritical => "subcritical",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchDiagnostics {
    /// `[L1 v0]_1 . v*`.
    pub transversality: f64,
    pub tol_trans: f64,
    /// `max |L0 v0|` over all modes.
    pub kernel_residual: f64,
    /// `max |L0 w1 - rhs|` of the `w1` equation.
    pub w1_residual: f64,
    /// `max |P w1|`.
    pub w1_projection: f64,
    /// Largest deviation between `[f]_1` and twice the real `k1` coefficient
    /// over the brackets that entered `gamma1` and `gamma2`.
    pub bracket_defect: f64,
    /// Whether the depth was capped at `omega / beta0 = depth_cap`.
    pub depth_capped: bool,
    pub local_maxima: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchResult {
    pub pattern: PatternKind,
    /// The requested depth parameter (before any cap).
    pub beta0: f64,
    pub cp: CriticalPoint,
    pub gamma1: f64,
    pub w1: StateTriple,
    pub gamma2: Option<f64>,
    pub classification: BranchClassification,
    pub diagnostics: BranchDiagnostics,
}

/// Everything needed to evaluate the residual map and its Taylor forms at a
/// fixed lattice, law and depth.
#[derive(Debug, Clone)]
pub struct BranchProblem {
    pub lat: LatticeSpec,
    pub law: MagnetizationLaw,
    pub cp: CriticalPoint,
    pub res: Resolution,
    pub requested_beta0: f64,
    lower: StripSolver,
    upper: StripSolver,
}

fn pointwise<const K: usize>(
    lat: &LatticeSpec,
    fields: [&SurfaceField; K],
    f: impl Fn([f64; K]) -> f64,
) -> SurfaceField {
    let grids: Vec<Vec<f64>> = fields.iter().map(|g| g.to_grid()).collect();
    let n = grids[0].len();
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            let mut a = [0.0; K];
            for (k, ak) in a.iter_mut().enumerate() {
                *ak = grids[k][i];
            }
            f(a)
        })
        .collect();
    SurfaceField::from_grid(lat, &vals)
}

fn dot_grad(a: &SurfaceField, b: &SurfaceField) -> SurfaceField {
    let (ax, az) = a.grad_h();
    let (bx, bz) = b.grad_h();
    pointwise(a.lattice(), [&ax, &az, &bx, &bz], |[p, q, r, s]| p * r + q * s)
}

fn bracket_defect(f: &StateTriple) -> f64 {
    let b = f.bracket();
    let k1 = f.mode(1, 0);
    (0..3)
        .map(|i| (b[i] - 2.0 * k1[i].re).abs())
        .fold(0.0, f64::max)
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl BranchProblem {
    /// Critical point at `beta0` (capped at `omega / beta0 = res.depth_cap`)
    /// and the solvers on the corresponding lattice.
    pub fn new(pattern: PatternKind, law: &MagnetizationLaw, beta0: f64, res: &Resolution) -> Result<Self> {
        res.validate()?;
        let cp = linear_analysis::capped_critical_point(beta0, law, res.depth_cap)?;
        Self::build(pattern, law, cp, beta0, res)
    }

    /// Problem at the critical point with `omega / beta0 = omega_tilde`.
    pub fn from_omega_tilde(
        pattern: PatternKind,
        law: &MagnetizationLaw,
        omega_tilde: f64,
        res: &Resolution,
    ) -> Result<Self> {
        res.validate()?;
        let cp = linear_analysis::critical_point_from_omega_tilde(omega_tilde, law)?;
        Self::build(pattern, law, cp, cp.beta0, res)
    }

    fn build(
        pattern: PatternKind,
        law: &MagnetizationLaw,
        cp: CriticalPoint,
        requested_beta0: f64,
        res: &Resolution,
    ) -> Result<Self> {
        let lat = LatticeSpec::new(pattern, cp.omega, res.truncation)?;
        let lower = StripSolver::lower(&lat, law, cp.beta0, res.ny)?;
        let upper = StripSolver::upper(&lat, cp.beta0, res.ny)?;
        Ok(BranchProblem {
            lat,
            law: law.clone(),
            cp,
            res: *res,
            requested_beta0,
            lower,
            upper,
        })
    }

    pub fn beta0(&self) -> f64 {
        self.cp.beta0
    }

    /// `v0 = v e_1`.
    pub fn v0(&self) -> StateTriple {
        StateTriple::from_vector(self.cp.v, &SurfaceField::fundamental(&self.lat))
    }

    /// `L1 x = (0, 0, -eta)`.
    pub fn l1(&self, x: &StateTriple) -> StateTriple {
        let mut out = StateTriple::zeros(&self.lat);
        out.phi_lo = x.eta.scale(-1.0);
        out
    }

    pub fn residual(&self, gamma: f64, state: &StateTriple) -> Result<StateTriple> {
        self.residual_with_tol(gamma, state, DEFAULT_NONLINEAR_TOL)
    }

    /// The three components of the residual map at `(gamma, state)`, using
    /// nonlinear Dirichlet-Neumann solves in both strips.
    pub fn residual_with_tol(&self, gamma: f64, state: &StateTriple, tol: f64) -> Result<StateTriple> {
        residual_core(&self.lat, &self.law, &self.lower, &self.upper, gamma, state, tol)
    }

    fn expansions(&self, x: &StateTriple, order: usize) -> Result<(DnExpansion, DnExpansion)> {
        let lo = self.lower.taylor(&x.eta, &x.phi_lo, order)?;
        let up = self.upper.taylor(&x.eta, &x.phi_up, order)?;
        Ok((lo, up))
    }

    /// The quadratic form `Q0(x, x)`.
    pub fn quadratic(&self, x: &StateTriple) -> Result<StateTriple> {
        let lat = &self.lat;
        let c = &self.cp.consts;
        let (lo, up) = self.expansions(x, 2)?;
        let (g1, g2, h1, h2) = (&lo.g_terms[0], &lo.g_terms[1], &lo.h_terms[0], &lo.h_terms[1]);
        let (gp1, gp2) = (&up.g_terms[0], &up.g_terms[1]);
        let gphi = dot_grad(&x.phi_lo, &x.phi_lo);
        let gphip = dot_grad(&x.phi_up, &x.phi_up);
        let comp2 = pointwise(lat, [gp2, g2, h2, h1, &gphi], |[gp2, g2, h2, h1, gphi]| {
            gp2 + g2 + c.dmu1 * h2 + 0.5 * (c.ddmu1 * h1 * h1 + c.dmu1 * gphi)
        });
        let comp3 = pointwise(
            lat,
            [gp1, gp2, g1, g2, h1, h2, &gphi, &gphip],
            |[gp1, gp2, g1, g2, h1, h2, gphi, gphip]| {
                0.5 * (gp1 * gp1 - gphip + (c.mu1 - c.dmu1) * h1 * h1 + c.mu1 * gphi
                    - 2.0 * g1 * h1
                    - c.ddmu1 * h1 * h1
                    - c.dmu1 * gphi)
                    - c.mu1 * gp2
                    - g2
                    - c.dmu1 * h2
            },
        );
        Ok(StateTriple {
            eta: SurfaceField::zeros(lat),
            phi_up: comp2,
            phi_lo: comp3,
        })
    }

    /// The cubic form `C0(x, x, x)`.
    pub fn cubic(&self, x: &StateTriple) -> Result<StateTriple> {
        let lat = &self.lat;
        let c = &self.cp.consts;
        let (lo, up) = self.expansions(x, 3)?;
        let (g1, g2, g3) = (&lo.g_terms[0], &lo.g_terms[1], &lo.g_terms[2]);
        let (h1, h2, h3) = (&lo.h_terms[0], &lo.h_terms[1], &lo.h_terms[2]);
        let (gp1, gp2, gp3) = (&up.g_terms[0], &up.g_terms[1], &up.g_terms[2]);
        let gphi = dot_grad(&x.phi_lo, &x.phi_lo);
        let eta_phi = dot_grad(&x.eta, &x.phi_lo);
        let eta_phip = dot_grad(&x.eta, &x.phi_up);
        let shared = pointwise(
            lat,
            [gp3, g3, h1, h2, h3, &gphi, &eta_phi],
            |[gp3, g3, h1, h2, h3, gphi, eta_phi]| {
                gp3 + g3 + c.dmu1 * h3 + c.ddmu1 * h1 * h2 + 0.5 * (c.ddmu1 - c.dmu1) * gphi * h1
                    - c.dmu1 * eta_phi * h1
                    + c.dddmu1 / 6.0 * h1 * h1 * h1
            },
        );
        let (ex, ez) = x.eta.grad_h();
        let (exx, ezz) = (ex.dx(), ez.dz());
        let exz = ex.dz();
        let curvature = pointwise(lat, [&ex, &ez, &exx, &ezz, &exz], |[ex, ez, exx, ezz, exz]| {
            ex * ex * ezz + ez * ez * exx - 2.0 * ex * ez * exz - 1.5 * (ex * ex + ez * ez) * (exx + ezz)
        });
        let rest = pointwise(
            lat,
            [gp1, gp2, gp3, g1, g2, h1, h2, &eta_phi, &eta_phip],
            |[gp1, gp2, gp3, g1, g2, h1, h2, eta_phi, eta_phip]| {
                (1.0 - c.mu1) * gp3 + gp1 * (gp2 - eta_phip) - h1 * (g2 + c.mu1 * eta_phi)
                    + (c.mu1 - c.dmu1) * h1 * h2
                    + (c.dmu1 - c.ddmu1) / 3.0 * h1 * h1 * h1
                    - g1 * h2
            },
        );
        let mut comp3 = shared.scale(-1.0);
        comp3.axpy(1.0, &rest);
        comp3.axpy(1.0, &curvature);
        Ok(StateTriple {
            eta: SurfaceField::zeros(lat),
            phi_up: shared,
            phi_lo: comp3,
        })
    }

    /// Symmetric bilinear form `Q0(a, b)` by polarisation.
    pub fn q0(&self, a: &StateTriple, b: &StateTriple) -> Result<StateTriple> {
        let p = self.quadratic(&(a + b))?;
        let m = self.quadratic(&(a - b))?;
        Ok((&p - &m).scale(0.25))
    }

    /// Symmetric trilinear form `C0(a, b, c)` by polarisation.
    pub fn c0(&self, a: &StateTriple, b: &StateTriple, c: &StateTriple) -> Result<StateTriple> {
        let mut out = StateTriple::zeros(&self.lat);
        for s2 in [1.0, -1.0] {
            for s3 in [1.0, -1.0] {
                let mut x = a.clone();
                x.axpy(s2, b);
                x.axpy(s3, c);
                out.axpy(s2 * s3 / 24.0, &self.cubic(&x)?);
            }
        }
        Ok(out)
    }

    /// `[L1 v0]_1 . v*`.
    pub fn transversality(&self) -> f64 {
        -self.cp.v[0] * self.cp.v_star[2]
    }

    pub fn tol_trans(&self) -> f64 {
        1e-8 * self.transversality().abs()
    }

    fn denominator(&self) -> Result<f64> {
        let d = self.transversality();
        if !(d.abs() > 1e-14) || !d.is_finite() {
            return Err(Error::DegenerateTransversality(d));
        }
        Ok(d)
    }

    pub fn gamma1(&self) -> Result<f64> {
        let d = self.denominator()?;
        let q = self.quadratic(&self.v0())?;
        Ok(-dot3(q.bracket(), self.cp.v_star) / d)
    }

    /// Solves `L0 w1 = -(I - P)(Q0(v0, v0) + gamma1 L1 v0)` with `P w1 = 0`;
    /// returns `w1` and the residual of the mode-wise solve.
    pub fn solve_w1(&self, gamma1: f64) -> Result<(StateTriple, f64)> {
        let v0 = self.v0();
        let mut rhs = self.quadratic(&v0)?;
        rhs.axpy(gamma1, &self.l1(&v0));
        let mut rhs = rhs.scale(-1.0);
        let p = linear_analysis::projection_p(&self.lat, &self.cp, &rhs);
        rhs.axpy(-1.0, &p);
        let w1 = linear_analysis::resolvent_solve(&self.lat, &self.cp, &rhs)?;
        let check = linear_analysis::apply_pencil(&self.lat, &self.cp, &w1);
        let mut diff = &check - &rhs;
        diff.phi_up.set_coeff(0, 0, num_complex::Complex64::new(0.0, 0.0));
        Ok((w1, diff.max_abs()))
    }

    /// `gamma2 = -[2 Q0(v0, w1) + C0(v0, v0, v0)]_1 . v* / [L1 v0]_1 . v*`;
    /// only defined when `gamma1` vanishes.
    pub fn gamma2(&self, gamma1: f64, w1: &StateTriple) -> Result<f64> {
        self.gamma2_with_defect(gamma1, w1).map(|(g, _)| g)
    }

    fn gamma2_with_defect(&self, gamma1: f64, w1: &StateTriple) -> Result<(f64, f64)> {
        if gamma1.abs() > self.tol_trans() {
            return Err(Error::WrongBranchType(gamma1));
        }
        let d = self.denominator()?;
        let v0 = self.v0();
        let mut f = self.q0(&v0, w1)?.scale(2.0);
        f.axpy(1.0, &self.cubic(&v0)?);
        Ok((-dot3(f.bracket(), self.cp.v_star) / d, bracket_defect(&f)))
    }

    pub fn classify(&self) -> Result<BranchResult> {
        let d = self.denominator()?;
        let v0 = self.v0();
        let q = self.quadratic(&v0)?;
        let gamma1 = -dot3(q.bracket(), self.cp.v_star) / d;
        let mut defect = bracket_defect(&q);
        let (w1, w1_residual) = self.solve_w1(gamma1)?;
        let tol_trans = self.tol_trans();
        let (gamma2, classification) = if gamma1.abs() > tol_trans {
            (None, BranchClassification::Transcritical)
        } else {
            let (g2, def2) = self.gamma2_with_defect(gamma1, &w1)?;
            defect = defect.max(def2);
            let class = if g2 > 0.0 {
                BranchClassification::Supercritical
            } else {
                BranchClassification::Subcritical
            };
            (Some(g2), class)
        };
        let kernel_residual = linear_analysis::apply_pencil(&self.lat, &self.cp, &v0).max_abs();
        let w1_projection = linear_analysis::projection_p(&self.lat, &self.cp, &w1).max_abs();
        Ok(BranchResult {
            pattern: self.lat.pattern,
            beta0: self.requested_beta0,
            cp: self.cp,
            gamma1,
            w1,
            gamma2,
            classification,
            diagnostics: BranchDiagnostics {
                transversality: d,
                tol_trans,
                kernel_residual,
                w1_residual,
                w1_projection,
                bracket_defect: defect,
                depth_capped: (self.cp.beta0 - self.requested_beta0).abs() > 1e-15 * self.requested_beta0,
                local_maxima: self.cp.local_maxima,
            },
        })
    }
}

/// The three components of the residual map at `(gamma, state)`, using
/// nonlinear Dirichlet-Neumann solves in both strips.
fn residual_core(
    lat: &LatticeSpec,
    law: &MagnetizationLaw,
    lower: &StripSolver,
    upper: &StripSolver,
    gamma: f64,
    state: &StateTriple,
    tol: f64,
) -> Result<StateTriple> {
    state.eta.ensure_same_lattice(&SurfaceField::zeros(lat))?;
    let (eta, up, lo) = (&state.eta, &state.phi_up, &state.phi_lo);
    let mu1 = lower.constants().mu1;
    let lower_dn = lower.nonlinear(eta, lo, tol)?;
    let upper_dn = upper.nonlinear(eta, up, tol)?;
    let (g, h) = (&lower_dn.g_grid, &lower_dn.h_grid);
    let (gp, hp) = (&upper_dn.g_grid, &upper_dn.h_grid);

    let r1 = &(up - lo) + &eta.scale(mu1 - 1.0);

    let (ex, ez) = eta.grad_h();
    let (px, pz) = lo.grad_h();
    let (qx, qz) = up.grad_h();
    let grid = |f: &SurfaceField| f.to_grid();
    let (ex, ez, px, pz, qx, qz) = (grid(&ex), grid(&ez), grid(&px), grid(&pz), grid(&qx), grid(&qz));
    let m1 = law.potential(1.0)?;
    let npts = ex.len();
    let mut v2 = vec![0.0; npts];
    let mut v3 = vec![0.0; npts];
    let mut fx = vec![0.0; npts];
    let mut fz = vec![0.0; npts];
    for p in 0..npts {
        let g2 = ex[p] * ex[p] + ez[p] * ez[p];
        let s2 = px[p] * px[p] + pz[p] * pz[p]
            + 2.0 * (1.0 - ex[p] * px[p] - ez[p] * pz[p]) * h[p]
            + (1.0 + g2) * h[p] * h[p]
            + 1.0;
        let s_star = s2.max(0.0).sqrt();
        let mu_star = law.mu(s_star);
        let m_star = law.potential(s_star).unwrap_or(f64::NAN) - m1;
        v2[p] = gp[p] + g[p] + mu_star - mu1;
        v3[p] = 0.5 * (1.0 + g2) * hp[p] * hp[p] - 0.5 * (qx[p] * qx[p] + qz[p] * qz[p])
            - mu1 * gp[p]
            - g[p]
            - (mu_star - mu1)
            + m_star
            - mu_star * h[p]
            - h[p] * g[p];
        let root = (1.0 + g2).sqrt();
        fx[p] = ex[p] / root;
        fz[p] = ez[p] / root;
    }
    let r2 = SurfaceField::from_grid(lat, &v2);
    let mut r3 = SurfaceField::from_grid(lat, &v3);
    r3.axpy(-gamma, eta);
    r3.axpy(1.0, &SurfaceField::from_grid(lat, &fx).dx());
    r3.axpy(1.0, &SurfaceField::from_grid(lat, &fz).dz());
    if r3.max_abs().is_nan() || r2.max_abs().is_nan() {
        return Err(Error::Domain("residual evaluation produced NaN".into()));
    }
    Ok(StateTriple {
        eta: r1,
        phi_up: r2,
        phi_lo: r3,
    })
}


pub fn residual(
    lat: &LatticeSpec,
    law: &MagnetizationLaw,
    beta0: f64,
    gamma: f64,
    state: &StateTriple,
    res: &Resolution,
) -> Result<StateTriple> {
    res.validate()?;
    let lower = StripSolver::lower(lat, law, beta0, res.ny)?;
    let upper = StripSolver::upper(lat, beta0, res.ny)?;
    residual_core(lat, law, &lower, &upper, gamma, state, DEFAULT_NONLINEAR_TOL)
}

pub fn q0_apply(
    lat: &LatticeSpec,
    law: &MagnetizationLaw,
    cp: &CriticalPoint,
    a: &StateTriple,
    b: &StateTriple,
    res: &Resolution,
) -> Result<StateTriple> {
    problem_on(lat, law, cp, res)?.q0(a, b)
}

pub fn c0_apply(
    lat: &LatticeSpec,
    law: &MagnetizationLaw,
    cp: &CriticalPoint,
    abc: [&StateTriple; 3],
    res: &Resolution,
) -> Result<StateTriple> {
    problem_on(lat, law, cp, res)?.c0(abc[0], abc[1], abc[2])
}

fn problem_on(lat: &LatticeSpec, law: &MagnetizationLaw, cp: &CriticalPoint, res: &Resolution) -> Result<BranchProblem> {
    if (lat.omega - cp.omega).abs() > 1e-9 * cp.omega {
        return Err(Error::InvalidArgument("lattice does not match the critical point".into()));
    }
    BranchProblem::build(lat.pattern, law, *cp, cp.beta0, res)
}

pub fn classify_branch(
    pattern: PatternKind,
    law: &MagnetizationLaw,
    beta0: f64,
    res: &Resolution,
) -> Result<BranchResult> {
    BranchProblem::new(pattern, law, beta0, res)?.classify()
}
