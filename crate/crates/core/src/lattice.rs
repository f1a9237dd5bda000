//! Periodic lattices for rolls, rectangles and hexagons.
//!
//! A lattice is described by its generators `l1, l2`, the dual generators
//! `k1, k2` with `k_i . l_j = 2 pi delta_ij`, and a truncation level `N`
//! bounding the dual-basis indices `(m, n)` of the retained wavevectors
//! `k = m k1 + n k2`.
//!
//! The truncation set is closed under the pattern's rotation: a square block
//! `|m|, |n| <= N` for rectangles, a line `|m| <= N, n = 0` for rolls, and the
//! hexagon `|m|, |n|, |m + n| <= N` for hexagons.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fields::SurfaceField;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatternKind {
    Rolls,
    Rectangles,
    Hexagons,
}

impl PatternKind {
    pub const ALL: [PatternKind; 3] = [
        PatternKind::Rolls,
        PatternKind::Rectangles,
        PatternKind::Hexagons,
    ];

    /// Order of the cyclic rotation group leaving the pattern invariant.
    pub fn rotation_order(self) -> usize {
        match self {
            PatternKind::Rolls => 2,
            PatternKind::Rectangles => 4,
            PatternKind::Hexagons => 6,
        }
    }

    pub fn rotation_angle(self) -> f64 {
        2.0 * PI / self.rotation_order() as f64
    }

    pub fn name(self) -> &'static str {
        match self {
            PatternKind::Rolls => "rolls",
            PatternKind::Rectangles => "rectangles",
            PatternKind::Hexagons => "hexagons",
        }
    }
}

impl std::str::FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rolls" | "roll" => Ok(PatternKind::Rolls),
            "rectangles" | "rectangle" | "squares" => Ok(PatternKind::Rectangles),
            "hexagons" | "hexagon" => Ok(PatternKind::Hexagons),
            other => Err(Error::InvalidArgument(format!("unknown pattern '{other}'"))),
        }
    }
}

impl std::fmt::Display for PatternKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A dual-lattice vector in dual-basis coordinates together with its
/// cartesian components `(k_x, k_z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveVector {
    pub m: i32,
    pub n: i32,
    pub cartesian: [f64; 2],
}

impl WaveVector {
    pub fn norm(&self) -> f64 {
        self.cartesian[0].hypot(self.cartesian[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub pattern: PatternKind,
    pub omega: f64,
    pub l1: [f64; 2],
    pub l2: [f64; 2],
    pub k1: [f64; 2],
    pub k2: [f64; 2],
    /// Base-cell area `C(Gamma)`, the normalisation of the Sobolev norms.
    pub cell_constant: f64,
    pub truncation: usize,
}

impl LatticeSpec {
    pub fn new(pattern: PatternKind, omega: f64, truncation: usize) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "fundamental wavenumber must be positive, got {omega}"
            )));
        }
        if truncation == 0 {
            return Err(Error::InvalidArgument(
                "truncation must be at least 1".to_string(),
            ));
        }
        let p = 2.0 * PI / omega;
        let s3 = 3f64.sqrt();
        let (l1, l2, k1, k2, cell_constant) = match pattern {
            // Rolls only use (m, 0); the second pair keeps the duality relations intact.
            PatternKind::Rolls => ([p, 0.0], [0.0, p], [omega, 0.0], [0.0, omega], p),
            PatternKind::Rectangles => (
                [p, 0.0],
                [0.0, p],
                [omega, 0.0],
                [0.0, omega],
                4.0 * (PI / omega).powi(2),
            ),
            PatternKind::Hexagons => (
                [p, -p / s3],
                [0.0, 2.0 * p / s3],
                [omega, 0.0],
                [0.5 * omega, 0.5 * s3 * omega],
                8.0 / s3 * (PI / omega).powi(2),
            ),
        };
        Ok(LatticeSpec {
            pattern,
            omega,
            l1,
            l2,
            k1,
            k2,
            cell_constant,
            truncation,
        })
    }

    /// Number of index slots along each dual direction of the storage block.
    pub fn dims(&self) -> (usize, usize) {
        let w = 2 * self.truncation + 1;
        match self.pattern {
            PatternKind::Rolls => (w, 1),
            _ => (w, w),
        }
    }

    pub fn n_slots(&self) -> usize {
        let (a, b) = self.dims();
        a * b
    }

    pub fn contains(&self, m: i32, n: i32) -> bool {
        let big_n = self.truncation as i32;
        match self.pattern {
            PatternKind::Rolls => n == 0 && m.abs() <= big_n,
            PatternKind::Rectangles => m.abs() <= big_n && n.abs() <= big_n,
            PatternKind::Hexagons => {
                m.abs() <= big_n && n.abs() <= big_n && (m + n).abs() <= big_n
            }
        }
    }

    /// Storage slot of index `(m, n)`; the caller guarantees `contains(m, n)`
    /// or at least that `(m, n)` lies in the square storage block.
    pub fn slot(&self, m: i32, n: i32) -> usize {
        let big_n = self.truncation as i32;
        let (_, d2) = self.dims();
        match self.pattern {
            PatternKind::Rolls => (m + big_n) as usize,
            _ => (m + big_n) as usize * d2 + (n + big_n) as usize,
        }
    }

    pub fn index_of_slot(&self, slot: usize) -> (i32, i32) {
        let big_n = self.truncation as i32;
        let (_, d2) = self.dims();
        match self.pattern {
            PatternKind::Rolls => (slot as i32 - big_n, 0),
            _ => ((slot / d2) as i32 - big_n, (slot % d2) as i32 - big_n),
        }
    }

    pub fn cartesian(&self, m: i32, n: i32) -> [f64; 2] {
        let (mf, nf) = (m as f64, n as f64);
        match self.pattern {
            PatternKind::Rolls => [mf * self.k1[0], 0.0],
            _ => [
                mf * self.k1[0] + nf * self.k2[0],
                mf * self.k1[1] + nf * self.k2[1],
            ],
        }
    }

    pub fn wavevector(&self, m: i32, n: i32) -> WaveVector {
        WaveVector {
            m,
            n,
            cartesian: self.cartesian(m, n),
        }
    }

    /// All retained wavevectors, in storage order.
    pub fn wavevectors(&self) -> Vec<WaveVector> {
        (0..self.n_slots())
            .map(|s| self.index_of_slot(s))
            .filter(|&(m, n)| self.contains(m, n))
            .map(|(m, n)| self.wavevector(m, n))
            .collect()
    }

    /// Image of `(m, n)` under one generator of the rotation group.
    pub fn rotate_index(&self, m: i32, n: i32) -> (i32, i32) {
        match self.pattern {
            PatternKind::Rolls => (-m, n),
            PatternKind::Rectangles => (-n, m),
            PatternKind::Hexagons => (-n, m + n),
        }
    }

    /// Physical point `(x, z)` with dual-basis phases `(theta1, theta2)`,
    /// i.e. `k . x = m theta1 + n theta2`.
    pub fn physical_point(&self, theta1: f64, theta2: f64) -> [f64; 2] {
        let (a, b) = (theta1 / (2.0 * PI), theta2 / (2.0 * PI));
        match self.pattern {
            PatternKind::Rolls => [a * self.l1[0], 0.0],
            _ => [
                a * self.l1[0] + b * self.l2[0],
                a * self.l1[1] + b * self.l2[1],
            ],
        }
    }

    /// Dual-basis phases of a physical point, the inverse of [`Self::physical_point`].
    pub fn phases(&self, x: [f64; 2]) -> (f64, f64) {
        let t1 = self.k1[0] * x[0] + self.k1[1] * x[1];
        let t2 = match self.pattern {
            PatternKind::Rolls => 0.0,
            _ => self.k2[0] * x[0] + self.k2[1] * x[1],
        };
        (t1, t2)
    }

    /// Default tolerance for matching wavevector lengths.
    pub fn default_length_tol(&self) -> f64 {
        1e-9 * self.omega
    }

    /// All retained `k` with `||k| - rho| <= tol`, closed under `k -> -k`.
    pub fn dual_vectors_of_length(&self, rho: f64, tol: f64) -> Vec<WaveVector> {
        self.wavevectors()
            .into_iter()
            .filter(|k| (k.norm() - rho).abs() <= tol)
            .collect()
    }

    /// Largest `|k|` guaranteed to be fully covered by the truncation.
    pub fn covered_radius(&self) -> f64 {
        let big_n = self.truncation as f64;
        match self.pattern {
            PatternKind::Rolls | PatternKind::Rectangles => big_n * self.omega,
            // Inradius of the index hexagon |m|,|n|,|m+n| <= N.
            PatternKind::Hexagons => big_n * self.omega * 3f64.sqrt() / 2.0,
        }
    }
}

/// Average of a field over the pattern's cyclic rotation group.
pub fn symmetrize(field: &SurfaceField) -> SurfaceField {
    let lat = field.lattice();
    let order = lat.pattern.rotation_order();
    let mut out = SurfaceField::zeros(lat);
    for k in lat.wavevectors() {
        let (mut m, mut n) = (k.m, k.n);
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for _ in 0..order {
            acc += field.coeff(m, n);
            (m, n) = lat.rotate_index(m, n);
        }
        out.set_coeff(k.m, k.n, acc / order as f64);
    }
    out
}

/// Rotation of a field by one generator: `(R f)_k = f_{R^{-1} k}`.
pub fn rotate(field: &SurfaceField) -> SurfaceField {
    let lat = field.lattice();
    let mut out = SurfaceField::zeros(lat);
    for k in lat.wavevectors() {
        let (rm, rn) = lat.rotate_index(k.m, k.n);
        out.set_coeff(rm, rn, field.coeff(k.m, k.n));
    }
    out
}
