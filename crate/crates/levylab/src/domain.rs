//! Periodic box domain and its uniform quadrature grid.
//!
//! The rectangle rule on a uniform grid integrates trigonometric
//! polynomials exactly as long as no nonzero aliased wavenumber is a
//! multiple of the per-axis resolution; the basis and tensor builders
//! enforce that bound before trusting any quadrature.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxDomain {
    d: usize,
    sides: [f64; 3],
    resolution: usize,
}

impl BoxDomain {
    /// `sides` lists one length per axis; `resolution` is the number of
    /// quadrature points per axis (a power of two, at least 4).
    pub fn new(d: usize, sides: &[f64], resolution: usize) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(Error::Domain(format!("dimension must be 2 or 3, got {d}")));
        }
        if sides.len() != d {
            return Err(Error::Domain(format!(
                "expected {d} side lengths, got {}",
                sides.len()
            )));
        }
        if sides.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::Domain("side lengths must be positive".into()));
        }
        if resolution < 4 || !resolution.is_power_of_two() {
            return Err(Error::Domain(format!(
                "resolution must be a power of two >= 4, got {resolution}"
            )));
        }
        let mut s3 = [0.0; 3];
        s3[..d].copy_from_slice(sides);
        Ok(Self {
            d,
            sides: s3,
            resolution,
        })
    }

    /// Default box: side 2π per axis, 16 points per axis.
    pub fn standard(d: usize) -> Result<Self> {
        let side = 2.0 * std::f64::consts::PI;
        let sides = vec![side; d];
        Self::new(d, &sides, 16)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn sides(&self) -> &[f64] {
        &self.sides[..self.d]
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn volume(&self) -> f64 {
        self.sides().iter().product()
    }

    pub fn grid_len(&self) -> usize {
        self.resolution.pow(self.d as u32)
    }

    /// Quadrature weight of one grid cell (rectangle rule).
    pub fn cell_weight(&self) -> f64 {
        self.volume() / self.grid_len() as f64
    }

    /// Coordinates of grid point `idx` (row-major over axes).
    pub fn grid_point(&self, idx: usize) -> [f64; 3] {
        let r = self.resolution;
        let mut x = [0.0; 3];
        let mut rem = idx;
        for axis in (0..self.d).rev() {
            let j = rem % r;
            rem /= r;
            x[axis] = self.sides[axis] * j as f64 / r as f64;
        }
        x
    }

    pub fn grid_points(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.grid_len()).map(|i| self.grid_point(i))
    }

    /// True when the rectangle rule integrates products of modes whose
    /// per-axis wavenumbers are bounded by `kmax`, `factor` modes at a
    /// time (2 for pairwise inner products, 3 for the trilinear form).
    pub fn resolves_products(&self, kmax: i64, factor: i64) -> bool {
        factor * kmax < self.resolution as i64
    }
}

/// Nested observation window O_R: an axis-aligned sub-box.
#[derive(Clone, Debug)]
pub struct LocalWindow {
    pub index: usize,
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl LocalWindow {
    /// A nested family of `count` centered windows; the last one is the
    /// full box, so the union covers the domain.
    pub fn nested_family(domain: &BoxDomain, count: usize) -> Vec<LocalWindow> {
        assert!(count >= 1);
        (0..count)
            .map(|r| {
                let frac = (r + 1) as f64 / count as f64;
                let mut lo = [0.0; 3];
                let mut hi = [0.0; 3];
                for axis in 0..domain.d() {
                    let side = domain.sides()[axis];
                    let half = 0.5 * side * frac;
                    let mid = 0.5 * side;
                    lo[axis] = mid - half;
                    hi[axis] = mid + half;
                }
                LocalWindow { index: r, lo, hi }
            })
            .collect()
    }

    pub fn full(domain: &BoxDomain) -> LocalWindow {
        let mut hi = [0.0; 3];
        hi[..domain.d()].copy_from_slice(domain.sides());
        LocalWindow {
            index: 0,
            lo: [0.0; 3],
            hi,
        }
    }

    /// Half-open box [lo, hi) with a tolerance that keeps grid points
    /// on either face classified deterministically: a point within
    /// 1e-9 of the upper face counts as outside, of the lower face as
    /// inside. Grid spacings are far coarser than the tolerance.
    pub fn contains(&self, d: usize, x: &[f64; 3]) -> bool {
        (0..d).all(|a| x[a] >= self.lo[a] - 1e-9 && x[a] < self.hi[a] - 1e-9)
    }
}
