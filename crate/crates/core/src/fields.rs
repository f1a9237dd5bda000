//! Truncated Fourier surface fields, Chebyshev volume fields and the
//! pseudo-spectral grid used for every nonlinear product.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::lattice::{LatticeSpec, PatternKind};
use crate::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Discretisation parameters shared by all spectral computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub truncation: usize,
    pub ny: usize,
    /// Largest admissible `omega / beta0`; deeper strips are cut to this
    /// nondimensional depth.
    pub depth_cap: f64,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            truncation: 4,
            ny: 40,
            depth_cap: 20.0,
        }
    }
}

impl Resolution {
    pub fn new(truncation: usize, ny: usize) -> Result<Self> {
        let r = Resolution {
            truncation,
            ny,
            ..Resolution::default()
        };
        r.validate()?;
        Ok(r)
    }

    pub fn with_depth_cap(mut self, cap: f64) -> Self {
        self.depth_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation == 0 {
            return Err(Error::InvalidArgument("truncation must be at least 1".into()));
        }
        if self.ny < 8 {
            return Err(Error::InvalidArgument(format!(
                "need at least 8 vertical collocation intervals, got {}",
                self.ny
            )));
        }
        if !(self.depth_cap > 0.0) {
            return Err(Error::InvalidArgument("depth cap must be positive".into()));
        }
        Ok(())
    }
}

/// Pseudo-spectral grid size per dual direction.
pub fn grid_dims(lat: &LatticeSpec) -> (usize, usize) {
    let m = 4 * lat.truncation + 1;
    match lat.pattern {
        PatternKind::Rolls => (m, 1),
        _ => (m, m),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceField {
    lat: LatticeSpec,
    coeffs: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub m: i32,
    pub n: i32,
    pub re: f64,
    pub im: f64,
}

impl SurfaceField {
    pub fn zeros(lat: &LatticeSpec) -> Self {
        SurfaceField {
            lat: *lat,
            coeffs: vec![Complex64::new(0.0, 0.0); lat.n_slots()],
        }
    }

    pub fn constant(lat: &LatticeSpec, value: f64) -> Self {
        let mut f = Self::zeros(lat);
        f.set_coeff(0, 0, Complex64::new(value, 0.0));
        f
    }

    /// Real cosine mode `cos(k . x)` for `k = m k1 + n k2`.
    pub fn cosine(lat: &LatticeSpec, m: i32, n: i32) -> Self {
        let mut f = Self::zeros(lat);
        f.add_coeff(m, n, Complex64::new(0.5, 0.0));
        f.add_coeff(-m, -n, Complex64::new(0.5, 0.0));
        f
    }

    /// Real sine mode `sin(k . x)`.
    pub fn sine(lat: &LatticeSpec, m: i32, n: i32) -> Self {
        let mut f = Self::zeros(lat);
        if (m, n) != (0, 0) {
            f.add_coeff(m, n, Complex64::new(0.0, -0.5));
            f.add_coeff(-m, -n, Complex64::new(0.0, 0.5));
        }
        f
    }

    /// The rotation-invariant fundamental mode `e_1` of the pattern.
    pub fn fundamental(lat: &LatticeSpec) -> Self {
        match lat.pattern {
            PatternKind::Rolls => Self::cosine(lat, 1, 0),
            PatternKind::Rectangles => Self::cosine(lat, 1, 0) + Self::cosine(lat, 0, 1),
            PatternKind::Hexagons => {
                Self::cosine(lat, 1, 0) + Self::cosine(lat, 0, 1) + Self::cosine(lat, 1, -1)
            }
        }
    }

    pub fn from_coeffs(lat: &LatticeSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != lat.n_slots() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                lat.n_slots(),
                coeffs.len()
            )));
        }
        let mut f = SurfaceField { lat: *lat, coeffs };
        f.apply_mask();
        Ok(f)
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lat
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, m: i32, n: i32) -> Complex64 {
        if self.lat.contains(m, n) {
            self.coeffs[self.lat.slot(m, n)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Sets a retained coefficient; indices outside the truncation are ignored.
    pub fn set_coeff(&mut self, m: i32, n: i32, value: Complex64) {
        if self.lat.contains(m, n) {
            let s = self.lat.slot(m, n);
            self.coeffs[s] = value;
        }
    }

    pub fn add_coeff(&mut self, m: i32, n: i32, value: Complex64) {
        if self.lat.contains(m, n) {
            let s = self.lat.slot(m, n);
            self.coeffs[s] += value;
        }
    }

    fn apply_mask(&mut self) {
        for s in 0..self.coeffs.len() {
            let (m, n) = self.lat.index_of_slot(s);
            if !self.lat.contains(m, n) {
                self.coeffs[s] = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.coeff(0, 0).re
    }

    pub fn remove_mean(&mut self) {
        self.set_coeff(0, 0, Complex64::new(0.0, 0.0));
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map_coeffs(|_, c| c * a)
    }

    pub fn axpy(&mut self, a: f64, other: &SurfaceField) {
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
    }

    pub fn map_coeffs(&self, f: impl Fn((i32, i32), Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        for (s, c) in out.coeffs.iter_mut().enumerate() {
            let idx = self.lat.index_of_slot(s);
            if self.lat.contains(idx.0, idx.1) {
                *c = f(idx, *c);
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &SurfaceField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest violation of `c_{-k} = conj(c_k)`.
    pub fn hermitian_defect(&self) -> f64 {
        self.lat
            .wavevectors()
            .iter()
            .map(|k| (self.coeff(k.m, k.n) - self.coeff(-k.m, -k.n).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn make_hermitian(&mut self) {
        let src = self.clone();
        for k in self.lat.wavevectors() {
            let v = 0.5 * (src.coeff(k.m, k.n) + src.coeff(-k.m, -k.n).conj());
            self.set_coeff(k.m, k.n, v);
        }
    }

    pub fn ensure_same_lattice(&self, other: &SurfaceField) -> Result<()> {
        if self.lat != other.lat {
            return Err(Error::InvalidArgument("fields live on different lattices".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> Self {
        let lat = self.lat;
        self.map_coeffs(|(m, n), c| c * Complex64::new(0.0, lat.cartesian(m, n)[0]))
    }

    pub fn dz(&self) -> Self {
        let lat = self.lat;
        self.map_coeffs(|(m, n), c| c * Complex64::new(0.0, lat.cartesian(m, n)[1]))
    }

    pub fn grad_h(&self) -> (Self, Self) {
        (self.dx(), self.dz())
    }

    pub fn laplacian(&self) -> Self {
        let lat = self.lat;
        self.map_coeffs(|(m, n), c| {
            let k = lat.cartesian(m, n);
            -c * (k[0] * k[0] + k[1] * k[1])
        })
    }

    /// Physical-grid samples of the (real part of the) field.
    pub fn to_grid(&self) -> Vec<f64> {
        to_grid(&self.lat, &self.coeffs)
    }

    pub fn from_grid(lat: &LatticeSpec, values: &[f64]) -> Self {
        SurfaceField {
            lat: *lat,
            coeffs: from_grid(lat, values),
        }
    }

    pub fn multiply(&self, other: &SurfaceField) -> Result<Self> {
        self.ensure_same_lattice(other)?;
        let a = self.to_grid();
        let b = other.to_grid();
        let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Ok(Self::from_grid(&self.lat, &p))
    }

    pub fn sobolev_norm(&self, r: f64) -> f64 {
        let total: f64 = self
            .lat
            .wavevectors()
            .iter()
            .map(|k| {
                let w = (1.0 + k.norm() * k.norm()).powf(r);
                w * self.coeff(k.m, k.n).norm_sqr()
            })
            .sum();
        (self.lat.cell_constant * total).sqrt()
    }

    /// Truncated Neumann series `sum_{j <= order} (-scale f)^j` for `1/(1 + scale f)`.
    pub fn reciprocal_one_plus(scale: f64, f: &SurfaceField, order: usize) -> Result<Self> {
        let g = f.to_grid();
        let sup = g.iter().map(|v| (scale * v).abs()).fold(0.0, f64::max);
        if sup >= 1.0 {
            return Err(Error::Divergence(sup));
        }
        let vals: Vec<f64> = g
            .iter()
            .map(|v| {
                let q = -scale * v;
                let mut acc = 0.0;
                let mut p = 1.0;
                for _ in 0..=order {
                    acc += p;
                    p *= q;
                }
                acc
            })
            .collect();
        Ok(Self::from_grid(&f.lat, &vals))
    }

    /// Point evaluation at physical coordinates `(x, z)`.
    pub fn evaluate(&self, x: [f64; 2]) -> f64 {
        let (t1, t2) = self.lat.phases(x);
        self.lat
            .wavevectors()
            .iter()
            .map(|k| {
                let ph = k.m as f64 * t1 + k.n as f64 * t2;
                (self.coeff(k.m, k.n) * Complex64::from_polar(1.0, ph)).re
            })
            .sum()
    }

    /// `[f]_1 = <f, e_1> / <e_1, e_1>`, the amplitude of `f` along `e_1`.
    pub fn bracket(&self) -> f64 {
        let e1 = SurfaceField::fundamental(&self.lat);
        let num: Complex64 = self
            .coeffs
            .iter()
            .zip(&e1.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum();
        let den: f64 = e1.coeffs.iter().map(|c| c.norm_sqr()).sum();
        num.re / den
    }

    pub fn coefficient_records(&self) -> Vec<CoefficientRecord> {
        self.lat
            .wavevectors()
            .iter()
            .map(|k| {
                let c = self.coeff(k.m, k.n);
                CoefficientRecord {
                    m: k.m,
                    n: k.n,
                    re: c.re,
                    im: c.im,
                }
            })
            .collect()
    }

    pub fn from_records(lat: &LatticeSpec, records: &[CoefficientRecord]) -> Self {
        let mut f = Self::zeros(lat);
        for r in records {
            f.set_coeff(r.m, r.n, Complex64::new(r.re, r.im));
        }
        f
    }

    /// Samples on an `n x n` grid over the base cell (`n x 1` for rolls).
    pub fn sample_base_cell(&self, n: usize) -> Vec<([f64; 2], f64)> {
        let n2 = if self.lat.pattern == PatternKind::Rolls { 1 } else { n };
        let mut out = Vec::with_capacity(n * n2);
        for i in 0..n {
            for j in 0..n2 {
                let p = self.lat.physical_point(
                    2.0 * PI * i as f64 / n as f64,
                    2.0 * PI * j as f64 / n2 as f64,
                );
                out.push((p, self.evaluate(p)));
            }
        }
        out
    }

    /// CSV with header `x,z,value` and 17 significant digits.
    pub fn to_csv(&self, n: usize) -> String {
        let mut s = String::from("x,z,value\n");
        for (p, v) in self.sample_base_cell(n) {
            let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", p[0], p[1], v);
        }
        s
    }
}

impl Add for SurfaceField {
    type Output = SurfaceField;
    fn add(mut self, rhs: SurfaceField) -> SurfaceField {
        self.axpy(1.0, &rhs);
        self
    }
}

impl Add<&SurfaceField> for &SurfaceField {
    type Output = SurfaceField;
    fn add(self, rhs: &SurfaceField) -> SurfaceField {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for SurfaceField {
    type Output = SurfaceField;
    fn sub(mut self, rhs: SurfaceField) -> SurfaceField {
        self.axpy(-1.0, &rhs);
        self
    }
}

impl Sub<&SurfaceField> for &SurfaceField {
    type Output = SurfaceField;
    fn sub(self, rhs: &SurfaceField) -> SurfaceField {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Neg for SurfaceField {
    type Output = SurfaceField;
    fn neg(self) -> SurfaceField {
        self.scale(-1.0)
    }
}

impl Mul<f64> for SurfaceField {
    type Output = SurfaceField;
    fn mul(self, a: f64) -> SurfaceField {
        self.scale(a)
    }
}

fn fft_2d(data: &mut [Complex64], d1: usize, d2: usize, inverse: bool) {
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let make = |planner: &mut FftPlanner<f64>, len: usize| {
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        };
        if d2 > 1 {
            let f2 = make(&mut planner, d2);
            f2.process(data);
        }
        if d1 > 1 {
            let f1 = make(&mut planner, d1);
            let mut col = vec![Complex64::new(0.0, 0.0); d1];
            for j in 0..d2 {
                for i in 0..d1 {
                    col[i] = data[i * d2 + j];
                }
                f1.process(&mut col);
                for i in 0..d1 {
                    data[i * d2 + j] = col[i];
                }
            }
        }
    });
}

/// Grid samples from coefficients in slot order.
pub(crate) fn to_grid(lat: &LatticeSpec, coeffs: &[Complex64]) -> Vec<f64> {
    let (g1, g2) = grid_dims(lat);
    let mut buf = vec![Complex64::new(0.0, 0.0); g1 * g2];
    for (s, c) in coeffs.iter().enumerate() {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let (m, n) = lat.index_of_slot(s);
        let i = m.rem_euclid(g1 as i32) as usize;
        let j = n.rem_euclid(g2 as i32) as usize;
        buf[i * g2 + j] += c;
    }
    fft_2d(&mut buf, g1, g2, true);
    buf.iter().map(|c| c.re).collect()
}

/// Retained coefficients (slot order) of grid samples.
pub(crate) fn from_grid(lat: &LatticeSpec, values: &[f64]) -> Vec<Complex64> {
    let (g1, g2) = grid_dims(lat);
    debug_assert_eq!(values.len(), g1 * g2);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_2d(&mut buf, g1, g2, false);
    let norm = 1.0 / (g1 * g2) as f64;
    (0..lat.n_slots())
        .map(|s| {
            let (m, n) = lat.index_of_slot(s);
            if lat.contains(m, n) {
                let i = m.rem_euclid(g1 as i32) as usize;
                let j = n.rem_euclid(g2 as i32) as usize;
                buf[i * g2 + j] * norm
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

/// Which flattened fluid strip a volume field lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strip {
    /// Magnetic fluid, `y in (-1/beta0, 0)`.
    Lower,
    /// Non-magnetic fluid, `y in (0, 1/beta0)`.
    Upper,
}

impl Strip {
    /// Sign `s` with `y = s * depth * (1 - x) / 2` mapping the Chebyshev
    /// variable `x in [-1, 1]` onto the strip.
    pub fn orientation(self) -> f64 {
        match self {
            Strip::Lower => -1.0,
            Strip::Upper => 1.0,
        }
    }
}

/// Per-wavevector vertical profiles on `ny + 1` Chebyshev-Lobatto nodes;
/// node `0` is the interface `y = 0`, node `ny` the far wall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeField {
    lat: LatticeSpec,
    strip: Strip,
    depth: f64,
    ny: usize,
    data: Vec<Complex64>,
}

impl VolumeField {
    pub fn zeros(lat: &LatticeSpec, strip: Strip, depth: f64, ny: usize) -> Result<Self> {
        if ny < 8 {
            return Err(Error::InvalidArgument(format!("ny = {ny} < 8")));
        }
        Ok(VolumeField {
            lat: *lat,
            strip,
            depth,
            ny,
            data: vec![Complex64::new(0.0, 0.0); lat.n_slots() * (ny + 1)],
        })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lat
    }

    pub fn strip(&self) -> Strip {
        self.strip
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Vertical coordinates of the nodes.
    pub fn y_nodes(&self) -> Vec<f64> {
        y_nodes(self.strip, self.depth, self.ny)
    }

    pub fn profile(&self, m: i32, n: i32) -> &[Complex64] {
        let s = self.lat.slot(m, n);
        &self.data[s * (self.ny + 1)..(s + 1) * (self.ny + 1)]
    }

    pub fn profile_slot(&self, slot: usize) -> &[Complex64] {
        &self.data[slot * (self.ny + 1)..(slot + 1) * (self.ny + 1)]
    }

    pub fn profile_slot_mut(&mut self, slot: usize) -> &mut [Complex64] {
        let w = self.ny + 1;
        &mut self.data[slot * w..(slot + 1) * w]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Horizontal layer at node `j` as a surface field.
    pub fn layer(&self, j: usize) -> SurfaceField {
        let w = self.ny + 1;
        let coeffs = (0..self.lat.n_slots()).map(|s| self.data[s * w + j]).collect();
        SurfaceField {
            lat: self.lat,
            coeffs,
        }
    }

    pub fn set_layer(&mut self, j: usize, f: &SurfaceField) {
        let w = self.ny + 1;
        for (s, c) in f.coeffs.iter().enumerate() {
            self.data[s * w + j] = *c;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

pub fn y_nodes(strip: Strip, depth: f64, ny: usize) -> Vec<f64> {
    crate::chebyshev::nodes(ny)
        .iter()
        .map(|x| strip.orientation() * depth * (1.0 - x) / 2.0)
        .collect()
}

/// The unknowns `(eta, Phi', Phi)` of the interface problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTriple {
    pub eta: SurfaceField,
    pub phi_up: SurfaceField,
    pub phi_lo: SurfaceField,
}

impl StateTriple {
    /// Builds a state; the mean of `phi_up` is projected to zero.
    pub fn new(eta: SurfaceField, mut phi_up: SurfaceField, phi_lo: SurfaceField) -> Result<Self> {
        eta.ensure_same_lattice(&phi_up)?;
        eta.ensure_same_lattice(&phi_lo)?;
        phi_up.remove_mean();
        Ok(StateTriple { eta, phi_up, phi_lo })
    }

    pub fn zeros(lat: &LatticeSpec) -> Self {
        StateTriple {
            eta: SurfaceField::zeros(lat),
            phi_up: SurfaceField::zeros(lat),
            phi_lo: SurfaceField::zeros(lat),
        }
    }

    /// `v * f` for a vector `v = (v_eta, v_up, v_lo)`.
    pub fn from_vector(v: [f64; 3], f: &SurfaceField) -> Self {
        let mut up = f.scale(v[1]);
        up.remove_mean();
        StateTriple {
            eta: f.scale(v[0]),
            phi_up: up,
            phi_lo: f.scale(v[2]),
        }
    }

    pub fn lattice(&self) -> &LatticeSpec {
        self.eta.lattice()
    }

    pub fn components(&self) -> [&SurfaceField; 3] {
        [&self.eta, &self.phi_up, &self.phi_lo]
    }

    pub fn map(&self, f: impl Fn(&SurfaceField) -> SurfaceField) -> Self {
        StateTriple {
            eta: f(&self.eta),
            phi_up: f(&self.phi_up),
            phi_lo: f(&self.phi_lo),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|f| f.scale(a))
    }

    pub fn axpy(&mut self, a: f64, other: &StateTriple) {
        self.eta.axpy(a, &other.eta);
        self.phi_up.axpy(a, &other.phi_up);
        self.phi_lo.axpy(a, &other.phi_lo);
    }

    pub fn max_abs(&self) -> f64 {
        self.components().iter().map(|f| f.max_abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &StateTriple) -> f64 {
        self.eta
            .max_abs_diff(&other.eta)
            .max(self.phi_up.max_abs_diff(&other.phi_up))
            .max(self.phi_lo.max_abs_diff(&other.phi_lo))
    }

    /// Componentwise bracket `[.]_1`.
    pub fn bracket(&self) -> [f64; 3] {
        [self.eta.bracket(), self.phi_up.bracket(), self.phi_lo.bracket()]
    }

    /// Coefficient vector of mode `(m, n)`.
    pub fn mode(&self, m: i32, n: i32) -> [Complex64; 3] {
        [
            self.eta.coeff(m, n),
            self.phi_up.coeff(m, n),
            self.phi_lo.coeff(m, n),
        ]
    }

    pub fn set_mode(&mut self, m: i32, n: i32, v: [Complex64; 3]) {
        self.eta.set_coeff(m, n, v[0]);
        self.phi_up.set_coeff(m, n, v[1]);
        self.phi_lo.set_coeff(m, n, v[2]);
    }
}

impl Add<&StateTriple> for &StateTriple {
    type Output = StateTriple;
    fn add(self, rhs: &StateTriple) -> StateTriple {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub<&StateTriple> for &StateTriple {
    type Output = StateTriple;
    fn sub(self, rhs: &StateTriple) -> StateTriple {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}
