//! Dirichlet-Neumann operators of the two flattened fluid strips.
//!
//! Both strips share one discretisation: Fourier modes of the truncated dual
//! lattice horizontally and Chebyshev-Lobatto collocation vertically, with
//! node `0` at the interface. Every nonlinear term is evaluated pointwise on
//! the pseudo-spectral grid, so the Taylor recursion is the exact order-by-order
//! expansion of the discrete nonlinear operator.
//!
//! With `e = -beta0 eta` (lower strip) or `e = beta0 eta` (upper strip) and
//! `a = 1 - beta0 |y|`, the flattened flux is
//!
//! ```text
//! F1 = e u_x + a eta_x u_y,    F2 = e u_z + a eta_z u_y,
//! F3 = -e u_y / (1 - e) + a grad(eta).grad(u) - a^2 |grad eta|^2 u_y / (1 - e),
//! T  = (u_x - F1, u_y, u_z - F2) / (1 - e),
//! Q  = mu(|T + e_y|) (u_x - F1, u_y + 1 - F3, u_z - F2),
//! ```
//!
//! with `div Q = 0`, `u = Phi` at the interface and `Q_y = mu(1)` at the far
//! wall. The upper strip uses `mu = 1`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chebyshev;
use crate::fields::{self, Resolution, SurfaceField, VolumeField};
use crate::krylov::{gmres, GmresOptions};
use crate::lattice::LatticeSpec;
use crate::magnetization::{LawConstants, MagnetizationLaw};
use crate::{Error, Result};

pub use crate::fields::Strip;

/// Terms `G_n, H_n` (`n = 1..=order`) of the Taylor expansions of `G` and `H`
/// (or `G'` and `H'` for the upper strip).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnExpansion {
    pub order: usize,
    pub strip: Strip,
    pub g_terms: Vec<SurfaceField>,
    pub h_terms: Vec<SurfaceField>,
    #[serde(skip)]
    pub u_terms: Vec<VolumeField>,
}

impl DnExpansion {
    /// `sum_n eps^n G_n`.
    pub fn g_sum(&self, eps: f64) -> SurfaceField {
        sum_powers(&self.g_terms, eps)
    }

    pub fn h_sum(&self, eps: f64) -> SurfaceField {
        sum_powers(&self.h_terms, eps)
    }
}

fn sum_powers(terms: &[SurfaceField], eps: f64) -> SurfaceField {
    let mut out = SurfaceField::zeros(terms[0].lattice());
    for (n, t) in terms.iter().enumerate() {
        out.axpy(eps.powi(n as i32 + 1), t);
    }
    out
}

/// Outcome of a nonlinear Dirichlet-Neumann evaluation.
#[derive(Debug, Clone)]
pub struct NonlinearDn {
    pub g: SurfaceField,
    pub h: SurfaceField,
    /// `mu(|T + e_y|)` at the interface, i.e. `mu*`, on the physical grid.
    pub mu_interface: Vec<f64>,
    /// `G` and `H` on the physical grid, before truncation to the lattice.
    pub g_grid: Vec<f64>,
    pub h_grid: Vec<f64>,
    pub u: VolumeField,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Per-point surface data entering the flattened equations.
struct Geometry {
    e: Vec<f64>,
    eta_x: Vec<f64>,
    eta_z: Vec<f64>,
    grad2: Vec<f64>,
}

/// Horizontal gradient and vertical derivative of a volume field, per node,
/// on the physical grid.
struct Gradients {
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct StripSolver {
    lat: LatticeSpec,
    strip: Strip,
    law: MagnetizationLaw,
    consts: LawConstants,
    beta0: f64,
    ny: usize,
    y: Vec<f64>,
    dy: DMatrix<f64>,
    slots: Vec<usize>,
    /// Flat operator restricted to the unknown nodes `1..=ny`, per retained slot.
    flat: Vec<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    /// Column of the flat operator multiplying the interface value.
    flat_col0: Vec<DVector<f64>>,
}

impl StripSolver {
    pub fn new(
        lat: &LatticeSpec,
        strip: Strip,
        law: &MagnetizationLaw,
        beta0: f64,
        ny: usize,
    ) -> Result<Self> {
        if !(beta0 > 0.0 && beta0.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta0 must be positive, got {beta0}")));
        }
        if ny < 8 {
            return Err(Error::InvalidArgument(format!("ny = {ny} < 8")));
        }
        let law = match strip {
            Strip::Lower => law.clone(),
            Strip::Upper => MagnetizationLaw::Constant { mu: 1.0 },
        };
        let consts = law.constants_at_one()?;
        let depth = 1.0 / beta0;
        let y = fields::y_nodes(strip, depth, ny);
        let dx = chebyshev::diff_matrix(ny);
        let dy = dx * (-2.0 / (strip.orientation() * depth));
        let slots: Vec<usize> = (0..lat.n_slots())
            .filter(|&s| {
                let (m, n) = lat.index_of_slot(s);
                lat.contains(m, n)
            })
            .collect();
        let dyy = &dy * &dy;
        let mut flat = Vec::with_capacity(lat.n_slots());
        let mut flat_col0 = Vec::with_capacity(lat.n_slots());
        let aniso = 1.0 / (consts.s1 * consts.s1);
        for s in 0..lat.n_slots() {
            let (m, n) = lat.index_of_slot(s);
            let k = lat.cartesian(m, n);
            let k2 = k[0] * k[0] + k[1] * k[1];
            let mut a = DMatrix::<f64>::zeros(ny + 1, ny + 1);
            for j in 1..ny {
                for l in 0..=ny {
                    a[(j, l)] = consts.mu1 * aniso * dyy[(j, l)];
                }
                a[(j, j)] -= consts.mu1 * k2;
            }
            for l in 0..=ny {
                a[(ny, l)] = consts.mu1 * aniso * dy[(ny, l)];
            }
            let sub = a.view((1, 1), (ny, ny)).into_owned();
            flat_col0.push(a.view((1, 0), (ny, 1)).column(0).into_owned());
            flat.push(sub.lu());
        }
        Ok(StripSolver {
            lat: *lat,
            strip,
            law,
            consts,
            beta0,
            ny,
            y,
            dy,
            slots,
            flat,
            flat_col0,
        })
    }

    pub fn lower(lat: &LatticeSpec, law: &MagnetizationLaw, beta0: f64, ny: usize) -> Result<Self> {
        Self::new(lat, Strip::Lower, law, beta0, ny)
    }

    pub fn upper(lat: &LatticeSpec, beta0: f64, ny: usize) -> Result<Self> {
        Self::new(lat, Strip::Upper, &MagnetizationLaw::Constant { mu: 1.0 }, beta0, ny)
    }

    pub fn strip(&self) -> Strip {
        self.strip
    }

    pub fn constants(&self) -> &LawConstants {
        &self.consts
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lat
    }

    fn depth(&self) -> f64 {
        1.0 / self.beta0
    }

    fn check_inputs(&self, eta: &SurfaceField, phi: &SurfaceField) -> Result<()> {
        if eta.lattice() != &self.lat || phi.lattice() != &self.lat {
            return Err(Error::InvalidArgument("field lattice differs from solver lattice".into()));
        }
        Ok(())
    }

    fn geometry(&self, eta: &SurfaceField) -> Geometry {
        let sign = match self.strip {
            Strip::Lower => -1.0,
            Strip::Upper => 1.0,
        };
        let (ex, ez) = eta.grad_h();
        let eta_x = ex.to_grid();
        let eta_z = ez.to_grid();
        let grad2 = eta_x.iter().zip(&eta_z).map(|(a, b)| a * a + b * b).collect();
        let e = eta.to_grid().iter().map(|v| sign * self.beta0 * v).collect();
        Geometry {
            e,
            eta_x,
            eta_z,
            grad2,
        }
    }

    fn a_factor(&self, j: usize) -> f64 {
        1.0 - self.beta0 * self.y[j].abs()
    }

    fn gradients(&self, u: &VolumeField) -> Gradients {
        let w = self.ny + 1;
        let n_slots = self.lat.n_slots();
        let data = u.data();
        let mut x = Vec::with_capacity(w);
        let mut y = Vec::with_capacity(w);
        let mut z = Vec::with_capacity(w);
        let mut cx = vec![Complex64::new(0.0, 0.0); n_slots];
        let mut cy = vec![Complex64::new(0.0, 0.0); n_slots];
        let mut cz = vec![Complex64::new(0.0, 0.0); n_slots];
        for j in 0..w {
            for &s in &self.slots {
                let (m, n) = self.lat.index_of_slot(s);
                let k = self.lat.cartesian(m, n);
                let v = data[s * w + j];
                cx[s] = v * Complex64::new(0.0, k[0]);
                cz[s] = v * Complex64::new(0.0, k[1]);
                let mut acc = Complex64::new(0.0, 0.0);
                for l in 0..w {
                    acc += data[s * w + l] * self.dy[(j, l)];
                }
                cy[s] = acc;
            }
            x.push(fields::to_grid(&self.lat, &cx));
            y.push(fields::to_grid(&self.lat, &cy));
            z.push(fields::to_grid(&self.lat, &cz));
        }
        Gradients { x, y, z }
    }

    /// Divergence of a flux given per node on the grid, as coefficients
    /// `[slot][node]`, together with the vertical flux coefficients at the wall.
    fn divergence(&self, q: &[[Vec<f64>; 3]]) -> (Vec<Complex64>, Vec<Complex64>) {
        let w = self.ny + 1;
        let n_slots = self.lat.n_slots();
        let mut c1 = vec![Complex64::new(0.0, 0.0); n_slots * w];
        let mut c2 = vec![Complex64::new(0.0, 0.0); n_slots * w];
        let mut c3 = vec![Complex64::new(0.0, 0.0); n_slots * w];
        for (j, qj) in q.iter().enumerate() {
            let a = fields::from_grid(&self.lat, &qj[0]);
            let b = fields::from_grid(&self.lat, &qj[1]);
            let c = fields::from_grid(&self.lat, &qj[2]);
            for &s in &self.slots {
                c1[s * w + j] = a[s];
                c3[s * w + j] = b[s];
                c2[s * w + j] = c[s];
            }
        }
        let mut div = vec![Complex64::new(0.0, 0.0); n_slots * w];
        let mut wall = vec![Complex64::new(0.0, 0.0); n_slots];
        for &s in &self.slots {
            let (m, n) = self.lat.index_of_slot(s);
            let k = self.lat.cartesian(m, n);
            for j in 0..w {
                let mut acc = c1[s * w + j] * Complex64::new(0.0, k[0])
                    + c2[s * w + j] * Complex64::new(0.0, k[1]);
                for l in 0..w {
                    acc += c3[s * w + l] * self.dy[(j, l)];
                }
                div[s * w + j] = acc;
            }
            wall[s] = c3[s * w + self.ny];
        }
        (div, wall)
    }

    /// Solves the flat problem `mu1 div(L grad u) = rhs` in the interior,
    /// `mu1 S1^-2 u_y = wall` at the far wall and `u = top` at the interface.
    fn solve_flat(
        &self,
        rhs: &[Complex64],
        wall: &[Complex64],
        top: &SurfaceField,
    ) -> VolumeField {
        let w = self.ny + 1;
        let mut u = VolumeField::zeros(&self.lat, self.strip, self.depth(), self.ny)
            .expect("ny validated at construction");
        for &s in &self.slots {
            let (m, n) = self.lat.index_of_slot(s);
            let t = top.coeff(m, n);
            let mut b_re = DVector::<f64>::zeros(self.ny);
            let mut b_im = DVector::<f64>::zeros(self.ny);
            for j in 1..=self.ny {
                let v = if j == self.ny { wall[s] } else { rhs[s * w + j] };
                let c0 = self.flat_col0[s][j - 1];
                b_re[j - 1] = v.re - c0 * t.re;
                b_im[j - 1] = v.im - c0 * t.im;
            }
            let x_re = self.flat[s].solve(&b_re).expect("flat operator is invertible");
            let x_im = self.flat[s].solve(&b_im).expect("flat operator is invertible");
            let prof = u.profile_slot_mut(s);
            prof[0] = t;
            for j in 1..=self.ny {
                prof[j] = Complex64::new(x_re[j - 1], x_im[j - 1]);
            }
        }
        u
    }

    /// First-order potential: the flat problem with interface data `phi`.
    pub fn solve_order_one(&self, phi: &SurfaceField) -> Result<VolumeField> {
        if phi.lattice() != &self.lat {
            return Err(Error::InvalidArgument("field lattice differs from solver lattice".into()));
        }
        let zeros = vec![Complex64::new(0.0, 0.0); self.lat.n_slots() * (self.ny + 1)];
        let wall = vec![Complex64::new(0.0, 0.0); self.lat.n_slots()];
        Ok(self.solve_flat(&zeros, &wall, phi))
    }

    /// Taylor terms `G_1..G_order`, `H_1..H_order` of the operator at `(eta, phi)`.
    pub fn taylor(&self, eta: &SurfaceField, phi: &SurfaceField, order: usize) -> Result<DnExpansion> {
        if !(1..=3).contains(&order) {
            return Err(Error::UnsupportedOrder(order, "1..=3"));
        }
        self.check_inputs(eta, phi)?;
        let geo = self.geometry(eta);
        let w = self.ny + 1;
        let npts = geo.e.len();
        let c = self.consts;
        let e2: Vec<f64> = geo.e.iter().map(|v| v * v).collect();
        let epow = [vec![1.0; npts], geo.e.clone(), e2];

        // Per order (index n-1): gradients of u^n, F^n, T^n, N^n per node.
        let mut grads: Vec<Gradients> = Vec::new();
        let mut f_terms: Vec<Vec<[Vec<f64>; 3]>> = Vec::new();
        let mut t_terms: Vec<Vec<[Vec<f64>; 3]>> = Vec::new();
        let mut n_terms: Vec<Vec<Vec<f64>>> = Vec::new();
        let mut u_terms = Vec::new();
        let mut g_terms = Vec::new();
        let mut h_terms = Vec::new();

        for n in 1..=order {
            // F^n from u^1..u^{n-1}.
            let mut fn_nodes: Vec<[Vec<f64>; 3]> = Vec::with_capacity(w);
            for j in 0..w {
                let a = self.a_factor(j);
                let mut f1 = vec![0.0; npts];
                let mut f2 = vec![0.0; npts];
                let mut f3 = vec![0.0; npts];
                if n >= 2 {
                    let g = &grads[n - 2];
                    for p in 0..npts {
                        f1[p] = geo.e[p] * g.x[j][p] + a * geo.eta_x[p] * g.y[j][p];
                        f2[p] = geo.e[p] * g.z[j][p] + a * geo.eta_z[p] * g.y[j][p];
                        f3[p] = a * (geo.eta_x[p] * g.x[j][p] + geo.eta_z[p] * g.z[j][p]);
                    }
                    for i in 1..n {
                        let gy = &grads[n - i - 1].y[j];
                        for p in 0..npts {
                            f3[p] -= epow[i][p] * gy[p];
                        }
                    }
                    if n >= 3 {
                        for i in 0..=(n - 3) {
                            let gy = &grads[n - 3 - i].y[j];
                            for p in 0..npts {
                                f3[p] -= a * a * geo.grad2[p] * epow[i][p] * gy[p];
                            }
                        }
                    }
                }
                fn_nodes.push([f1, f3, f2]);
            }

            // Forcing flux for u^n, ordered (x, y, z).
            let mut forcing: Vec<[Vec<f64>; 3]> = Vec::with_capacity(w);
            for j in 0..w {
                let fj = &fn_nodes[j];
                let mut q = [
                    fj[0].iter().map(|v| c.mu1 * v).collect::<Vec<f64>>(),
                    fj[1].iter().map(|v| c.mu1 * v).collect::<Vec<f64>>(),
                    fj[2].iter().map(|v| c.mu1 * v).collect::<Vec<f64>>(),
                ];
                for i in 1..n {
                    let gy = &grads[n - i - 1].y[j];
                    for p in 0..npts {
                        q[1][p] -= c.dmu1 * epow[i][p] * gy[p];
                    }
                }
                if n >= 2 {
                    let r = self.r_term(n, &t_terms, j, npts);
                    for p in 0..npts {
                        q[1][p] -= r[p];
                    }
                }
                for jj in 1..n {
                    let nj = &n_terms[jj - 1][j];
                    let g = &grads[n - jj - 1];
                    let f = &f_terms[n - jj - 1][j];
                    for p in 0..npts {
                        q[0][p] -= nj[p] * (g.x[j][p] - f[0][p]);
                        q[1][p] -= nj[p] * (g.y[j][p] - f[1][p]);
                        q[2][p] -= nj[p] * (g.z[j][p] - f[2][p]);
                    }
                }
                forcing.push(q);
            }
            let (div, wall) = self.divergence(&forcing);
            let top = if n == 1 {
                phi.clone()
            } else {
                SurfaceField::zeros(&self.lat)
            };
            let un = self.solve_flat(&div, &wall, &top);
            let gn = self.gradients(&un);

            // T^n and N^n.
            let mut tn_nodes = Vec::with_capacity(w);
            let mut nn_nodes = Vec::with_capacity(w);
            for j in 0..w {
                let mut t = [vec![0.0; npts], vec![0.0; npts], vec![0.0; npts]];
                for i in 0..n {
                    let (gx, gy, gz) = if i == 0 {
                        (&gn.x[j], &gn.y[j], &gn.z[j])
                    } else {
                        let g = &grads[n - i - 1];
                        (&g.x[j], &g.y[j], &g.z[j])
                    };
                    let f = if i == 0 { &fn_nodes[j] } else { &f_terms[n - i - 1][j] };
                    for p in 0..npts {
                        t[0][p] += epow[i][p] * (gx[p] - f[0][p]);
                        t[1][p] += epow[i][p] * gy[p];
                        t[2][p] += epow[i][p] * (gz[p] - f[2][p]);
                    }
                }
                let mut nn: Vec<f64> = t[1].iter().map(|v| c.dmu1 * v).collect();
                if n >= 2 {
                    let r = self.r_term(n, &t_terms, j, npts);
                    for p in 0..npts {
                        nn[p] += r[p];
                    }
                }
                tn_nodes.push(t);
                nn_nodes.push(nn);
            }

            // Outputs at the interface: I^n = u_y^n - F3^n, G_n, H_n.
            grads.push(gn);
            f_terms.push(fn_nodes);
            t_terms.push(tn_nodes);
            n_terms.push(nn_nodes);
            let i_of = |order_idx: usize| -> Vec<f64> {
                let g = &grads[order_idx];
                let f = &f_terms[order_idx][0];
                (0..npts).map(|p| g.y[0][p] - f[1][p]).collect()
            };
            let i_n = i_of(n - 1);
            let mut graw: Vec<f64> = i_n.iter().map(|v| c.mu1 * v).collect();
            for jj in 1..n {
                let nj = &n_terms[jj - 1][0];
                let ij = i_of(n - jj - 1);
                for p in 0..npts {
                    graw[p] += nj[p] * ij[p];
                }
            }
            let sign = match self.strip {
                Strip::Lower => 1.0,
                Strip::Upper => -1.0,
            };
            let gvals: Vec<f64> = graw.iter().map(|v| sign * v).collect();
            g_terms.push(SurfaceField::from_grid(&self.lat, &gvals));
            h_terms.push(SurfaceField::from_grid(&self.lat, &t_terms[n - 1][0][1]));
            u_terms.push(un);
        }
        Ok(DnExpansion {
            order,
            strip: self.strip,
            g_terms,
            h_terms,
            u_terms,
        })
    }

    /// `R^n` at node `j`: the part of `nu(T) - mu1 - nu^1(T)` of order `n`.
    fn r_term(&self, n: usize, t_terms: &[Vec<[Vec<f64>; 3]>], j: usize, npts: usize) -> Vec<f64> {
        let c = &self.consts;
        let at = |order: usize, p: usize| -> [f64; 3] {
            let t = &t_terms[order - 1][j];
            [t[0][p], t[1][p], t[2][p]]
        };
        (0..npts)
            .map(|p| match n {
                2 => c.nu2(at(1, p), at(1, p)),
                3 => {
                    let t1 = at(1, p);
                    2.0 * c.nu2(t1, at(2, p)) + c.nu3(t1, t1, t1)
                }
                _ => 0.0,
            })
            .collect()
    }

    /// Flux `Q` per node and the interface quantities for a given potential.
    fn flux(&self, u: &VolumeField, geo: &Geometry) -> (Vec<[Vec<f64>; 3]>, Vec<f64>, [Vec<f64>; 3]) {
        let grads = self.gradients(u);
        let npts = geo.e.len();
        let w = self.ny + 1;
        let mu1 = self.consts.mu1;
        let mut q_nodes = Vec::with_capacity(w);
        let mut wall_excess = vec![0.0; npts];
        let mut iface = [vec![0.0; npts], vec![0.0; npts], vec![0.0; npts]];
        for j in 0..w {
            let a = self.a_factor(j);
            let mut q = [vec![0.0; npts], vec![0.0; npts], vec![0.0; npts]];
            for p in 0..npts {
                let (ux, uy, uz) = (grads.x[j][p], grads.y[j][p], grads.z[j][p]);
                let e = geo.e[p];
                let r = 1.0 / (1.0 - e);
                let f1 = e * ux + a * geo.eta_x[p] * uy;
                let f2 = e * uz + a * geo.eta_z[p] * uy;
                let f3 = -e * uy * r + a * (geo.eta_x[p] * ux + geo.eta_z[p] * uz)
                    - a * a * geo.grad2[p] * uy * r;
                let tx = (ux - f1) * r;
                let ty = uy * r;
                let tz = (uz - f2) * r;
                let s = (tx * tx + tz * tz + (1.0 + ty) * (1.0 + ty)).sqrt();
                let mud = self.law.mu(s);
                q[0][p] = mud * (ux - f1);
                q[1][p] = mud * (uy + 1.0 - f3);
                q[2][p] = mud * (uz - f2);
                if j == self.ny {
                    wall_excess[p] = mud * (uy - f3) + (mud - mu1);
                }
                if j == 0 {
                    iface[0][p] = mud * (uy - f3);
                    iface[1][p] = ty;
                    iface[2][p] = mud;
                }
            }
            q_nodes.push(q);
        }
        (q_nodes, wall_excess, iface)
    }

    fn residual_vector(&self, u: &VolumeField, geo: &Geometry) -> Vec<f64> {
        let (q, wall_excess, _) = self.flux(u, geo);
        let (div, _) = self.divergence(&q);
        let wall = fields::from_grid(&self.lat, &wall_excess);
        let w = self.ny + 1;
        let mut out = Vec::with_capacity(self.slots.len() * self.ny * 2);
        for &s in &self.slots {
            for j in 1..=self.ny {
                let v = if j == self.ny { wall[s] } else { div[s * w + j] };
                out.push(v.re);
                out.push(v.im);
            }
        }
        out
    }

    fn unknowns(&self, u: &VolumeField) -> Vec<f64> {
        let w = self.ny + 1;
        let mut out = Vec::with_capacity(self.slots.len() * self.ny * 2);
        for &s in &self.slots {
            for j in 1..=self.ny {
                let v = u.data()[s * w + j];
                out.push(v.re);
                out.push(v.im);
            }
        }
        out
    }

    fn set_unknowns(&self, u: &mut VolumeField, x: &[f64]) {
        let w = self.ny + 1;
        let mut it = x.chunks_exact(2);
        for &s in &self.slots {
            for j in 1..=self.ny {
                let c = it.next().expect("unknown vector length");
                u.data_mut()[s * w + j] = Complex64::new(c[0], c[1]);
            }
        }
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; r.len()];
        let block = 2 * self.ny;
        for (b, &s) in self.slots.iter().enumerate() {
            let chunk = &r[b * block..(b + 1) * block];
            let re = DVector::from_iterator(self.ny, chunk.iter().step_by(2).copied());
            let im = DVector::from_iterator(self.ny, chunk.iter().skip(1).step_by(2).copied());
            let xr = self.flat[s].solve(&re).expect("flat operator is invertible");
            let xi = self.flat[s].solve(&im).expect("flat operator is invertible");
            for j in 0..self.ny {
                out[b * block + 2 * j] = xr[j];
                out[b * block + 2 * j + 1] = xi[j];
            }
        }
        out
    }

    /// Full nonlinear operator by Newton-Krylov iteration on the collocation
    /// residual, started from the first-order potential.
    pub fn nonlinear(&self, eta: &SurfaceField, phi: &SurfaceField, tol: f64) -> Result<NonlinearDn> {
        self.check_inputs(eta, phi)?;
        let sup_eta = eta.to_grid().iter().map(|v| v.abs()).fold(0.0, f64::max);
        if self.beta0 * sup_eta >= 0.5 {
            return Err(Error::InvalidArgument(format!(
                "amplitude guard violated: sup|beta0 eta| = {} >= 1/2",
                self.beta0 * sup_eta
            )));
        }
        let geo = self.geometry(eta);
        let mut u = self.solve_order_one(phi)?;
        let mut history = Vec::new();
        let max_newton = 40;
        for it in 0..=max_newton {
            let r = self.residual_vector(&u, &geo);
            let rn = r.iter().map(|v| v.abs()).fold(0.0, f64::max);
            history.push(rn);
            if rn < tol {
                let (_, _, iface) = self.flux(&u, &geo);
                let sign = match self.strip {
                    Strip::Lower => 1.0,
                    Strip::Upper => -1.0,
                };
                let gvals: Vec<f64> = iface[0].iter().map(|v| sign * v).collect();
                return Ok(NonlinearDn {
                    g: SurfaceField::from_grid(&self.lat, &gvals),
                    h: SurfaceField::from_grid(&self.lat, &iface[1]),
                    mu_interface: iface[2].clone(),
                    g_grid: gvals,
                    h_grid: iface[1].clone(),
                    u,
                    iterations: it,
                    residual: rn,
                    history,
                });
            }
            if it == max_newton {
                break;
            }
            let x0 = self.unknowns(&u);
            let xnorm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut apply = |v: &[f64]| -> Vec<f64> {
                let vn = v.iter().map(|t| t * t).sum::<f64>().sqrt();
                if vn == 0.0 {
                    return vec![0.0; v.len()];
                }
                let h = 1e-7 * (1.0 + xnorm) / vn;
                let xp: Vec<f64> = x0.iter().zip(v).map(|(a, b)| a + h * b).collect();
                let mut up = u.clone();
                self.set_unknowns(&mut up, &xp);
                let rp = self.residual_vector(&up, &geo);
                rp.iter().zip(&r).map(|(a, b)| (a - b) / h).collect()
            };
            let mut pre = |v: &[f64]| self.precondition(v);
            let neg: Vec<f64> = r.iter().map(|v| -v).collect();
            let out = gmres(
                &mut apply,
                &mut pre,
                &neg,
                GmresOptions {
                    restart: 30,
                    max_iterations: 60,
                    rel_tol: 1e-6,
                    abs_tol: 0.1 * tol,
                },
            );
            let xn: Vec<f64> = x0.iter().zip(&out.x).map(|(a, b)| a + b).collect();
            self.set_unknowns(&mut u, &xn);
        }
        Err(Error::ConvergenceFailure {
            iterations: max_newton,
            residual: *history.last().unwrap_or(&f64::NAN),
        })
    }
}

/// First-order lower potential for the given resolution.
pub fn solve_order_one_lower(
    lat: &LatticeSpec,
    law: &MagnetizationLaw,
    beta0: f64,
    phi: &SurfaceField,
    res: &Resolution,
) -> Result<VolumeField> {
    StripSolver::lower(lat, law, beta0, res.ny)?.solve_order_one(phi)
}

pub fn taylor_dn_lower(
    lat: &LatticeSpec,
    law: &MagnetizationLaw,
    beta0: f64,
    eta: &SurfaceField,
    phi: &SurfaceField,
    order: usize,
    res: &Resolution,
) -> Result<DnExpansion> {
    StripSolver::lower(lat, law, beta0, res.ny)?.taylor(eta, phi, order)
}

pub fn taylor_dn_upper(
    lat: &LatticeSpec,
    beta0: f64,
    eta: &SurfaceField,
    phi_up: &SurfaceField,
    order: usize,
    res: &Resolution,
) -> Result<DnExpansion> {
    StripSolver::upper(lat, beta0, res.ny)?.taylor(eta, phi_up, order)
}

/// Nonlinear `(G, H)` of the requested strip.
#[allow(clippy::too_many_arguments)]
pub fn nonlinear_dn(
    lat: &LatticeSpec,
    law: &MagnetizationLaw,
    beta0: f64,
    strip: Strip,
    eta: &SurfaceField,
    phi: &SurfaceField,
    tol: f64,
    res: &Resolution,
) -> Result<(SurfaceField, SurfaceField)> {
    let out = StripSolver::new(lat, strip, law, beta0, res.ny)?.nonlinear(eta, phi, tol)?;
    Ok((out.g, out.h))
}
