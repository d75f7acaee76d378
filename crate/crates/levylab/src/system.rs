//! Shipped systems and their physical constants.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Nse,
    Mhd,
    Boussinesq,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Nse => "nse",
            SystemKind::Mhd => "mhd",
            SystemKind::Boussinesq => "boussinesq",
        }
    }
}

/// Physical block of a basis mode or field component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Velocity,
    Magnetic,
    Temperature,
}

impl Block {
    pub fn name(self) -> &'static str {
        match self {
            Block::Velocity => "velocity",
            Block::Magnetic => "magnetic",
            Block::Temperature => "temperature",
        }
    }
}

/// System tag plus every physical constant the operators need.
///
/// `re` is the Reynolds number, `rm` the magnetic Reynolds number, `s`
/// the Hartmann-type coupling weight of the magnetic energy, and
/// `kappa_thermal` the thermometric conductivity. `buoyancy_axis` is
/// the index of the canonical unit vector e_d the buoyancy acts along.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub re: f64,
    pub rm: f64,
    pub s: f64,
    pub kappa_thermal: f64,
    pub buoyancy_axis: usize,
}

impl SystemSpec {
    pub fn new(kind: SystemKind) -> Self {
        Self {
            kind,
            re: 1.0,
            rm: 1.0,
            s: 1.0,
            kappa_thermal: 1.0,
            buoyancy_axis: usize::MAX, // resolved to d-1 at validation
        }
    }

    pub fn nse() -> Self {
        Self::new(SystemKind::Nse)
    }

    pub fn mhd() -> Self {
        Self::new(SystemKind::Mhd)
    }

    pub fn boussinesq() -> Self {
        Self::new(SystemKind::Boussinesq)
    }

    /// Blocks carried by this system, in canonical order.
    pub fn blocks(&self) -> &'static [Block] {
        match self.kind {
            SystemKind::Nse => &[Block::Velocity],
            SystemKind::Mhd => &[Block::Velocity, Block::Magnetic],
            SystemKind::Boussinesq => &[Block::Velocity, Block::Temperature],
        }
    }

    /// Number of field components in dimension `d`.
    pub fn comp_count(&self, d: usize) -> usize {
        match self.kind {
            SystemKind::Nse => d,
            SystemKind::Mhd => 2 * d,
            SystemKind::Boussinesq => d + 1,
        }
    }

    /// Component range of `block` in dimension `d`.
    pub fn comp_range(&self, d: usize, block: Block) -> std::ops::Range<usize> {
        match (self.kind, block) {
            (_, Block::Velocity) => 0..d,
            (SystemKind::Mhd, Block::Magnetic) => d..2 * d,
            (SystemKind::Boussinesq, Block::Temperature) => d..d + 1,
            _ => panic!("block {} absent from {}", block.name(), self.kind.name()),
        }
    }

    /// Weight of `block` in the H inner product (the magnetic energy
    /// carries the factor s).
    pub fn h_weight(&self, block: Block) -> f64 {
        match block {
            Block::Magnetic => self.s,
            _ => 1.0,
        }
    }

    /// Validates constants and resolves the buoyancy axis default (the
    /// last axis) for dimension `d`.
    pub fn validated(mut self, d: usize) -> Result<Self> {
        for (name, v) in [
            ("re", self.re),
            ("rm", self.rm),
            ("s", self.s),
            ("kappa_thermal", self.kappa_thermal),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(
                    format!("system.{name}"),
                    format!("must be strictly positive, got {v}"),
                ));
            }
        }
        if self.buoyancy_axis == usize::MAX {
            self.buoyancy_axis = d - 1;
        }
        if self.buoyancy_axis >= d {
            return Err(Error::config(
                "system.buoyancy_axis",
                format!("must index an axis < {d}, got {}", self.buoyancy_axis),
            ));
        }
        Ok(self)
    }
}
