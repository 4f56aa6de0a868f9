//! Sparse linear array layouts and their difference coarrays.
//!
//! Positions are integers in units of half the carrier wavelength and are
//! always normalized so the first sensor sits at 0.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, DoaError, Result};

/// Minimum redundancy arrays with hole-free difference coarrays, indexed by
/// sensor count. Apertures: 3, 6, 9, 13, 17, 23, 29, 36.
const MRA_TABLE: [&[i64]; 8] = [
    &[0, 1, 3],
    &[0, 1, 4, 6],
    &[0, 1, 4, 7, 9],
    &[0, 1, 6, 9, 11, 13],
    &[0, 1, 8, 11, 13, 15, 17],
    &[0, 1, 4, 10, 16, 18, 21, 23],
    &[0, 1, 2, 14, 18, 21, 24, 27, 29],
    &[0, 1, 3, 6, 13, 20, 27, 31, 35, 36],
];

/// Smallest sensor count covered by the MRA table.
pub const MRA_MIN_SENSORS: usize = 3;
/// Largest sensor count covered by the MRA table.
pub const MRA_MAX_SENSORS: usize = 10;

/// A linear array: sorted, distinct, non-negative sensor positions starting at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayGeometry {
    name: String,
    positions: Vec<i64>,
}

impl ArrayGeometry {
    /// Builds a geometry from arbitrary distinct integer positions.
    ///
    /// Positions are sorted and shifted so the smallest is 0.
    pub fn from_positions(name: impl Into<String>, positions: &[i64]) -> Result<Self> {
        let name = name.into();
        if name.contains(':') || name.contains('\n') {
            return Err(invalid(format!("geometry name {name:?} may not contain ':' or newlines")));
        }
        if positions.len() < 2 {
            return Err(invalid("a geometry needs at least 2 sensors"));
        }
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("sensor positions must be distinct"));
        }
        let origin = sorted[0];
        for p in &mut sorted {
            *p -= origin;
        }
        Ok(Self { name, positions: sorted })
    }

    /// Uniform linear array `{0, 1, ..., n-1}`.
    pub fn ula(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("ULA needs n >= 2, got {n}")));
        }
        let positions: Vec<i64> = (0..n as i64).collect();
        Self::from_positions(format!("ULA({n})"), &positions)
    }

    /// Two-level nested array: inner ULA `{1..n1}` and outer
    /// `{m (n1 + 1) : m = 1..n2}`.
    pub fn nested(n1: usize, n2: usize) -> Result<Self> {
        if n1 < 1 || n2 < 1 {
            return Err(invalid(format!("nested array needs n1 >= 1 and n2 >= 1, got ({n1}, {n2})")));
        }
        let step = n1 as i64 + 1;
        let positions: Vec<i64> = (1..=n1 as i64)
            .chain((1..=n2 as i64).map(|m| m * step))
            .collect();
        Self::from_positions(format!("NAQ2({n1},{n2})"), &positions)
    }

    /// Second-order super nested array.
    ///
    /// The dense part of the parent nested array is split into four sparse
    /// runs of odd/even spacing; the outer part loses its first element and
    /// gains `n2 (n1 + 1) - 1`. Same difference coarray as the nested array
    /// with fewer closely spaced pairs.
    pub fn super_nested(n1: usize, n2: usize) -> Result<Self> {
        if n1 < 4 || n2 < 2 {
            return Err(invalid(format!(
                "super nested array needs n1 >= 4 and n2 >= 2, got ({n1}, {n2})"
            )));
        }
        let r = (n1 / 4) as i64;
        // Last index of each run; -1 means the run is empty.
        let (x1, y1, x2, y2) = match n1 % 4 {
            0 => (r, r - 1, r - 1, r - 2),
            1 => (r, r - 1, r - 1, r - 1),
            2 => (r + 1, r - 1, r, r - 2),
            _ => (r, r, r, r - 1),
        };
        let s = n1 as i64 + 1;
        let mut positions = Vec::with_capacity(n1 + n2);
        positions.extend((0..=x1).map(|l| 1 + 2 * l));
        positions.extend((0..=y1).map(|l| s - (1 + 2 * l)));
        positions.extend((0..=x2).map(|l| s + (2 + 2 * l)));
        positions.extend((0..=y2).map(|l| 2 * s - (2 + 2 * l)));
        positions.extend((2..=n2 as i64).map(|l| l * s));
        positions.push(n2 as i64 * s - 1);
        debug_assert_eq!(positions.len(), n1 + n2);
        Self::from_positions(format!("SNAQ2({n1},{n2})"), &positions)
    }

    /// Minimum redundancy array with `n` sensors, from the built-in table.
    pub fn mra(n: usize) -> Result<Self> {
        if !(MRA_MIN_SENSORS..=MRA_MAX_SENSORS).contains(&n) {
            return Err(DoaError::UnsupportedSize(format!(
                "MRA table covers {MRA_MIN_SENSORS}..={MRA_MAX_SENSORS} sensors, got {n}"
            )));
        }
        Self::from_positions(format!("MRA({n})"), MRA_TABLE[n - MRA_MIN_SENSORS])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    /// Number of physical sensors.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Largest sensor position (the first one is 0).
    pub fn aperture(&self) -> i64 {
        *self.positions.last().expect("geometry has at least 2 sensors")
    }

    /// Difference coarray of this geometry.
    pub fn coarray(&self) -> Coarray {
        difference_coarray(self)
    }
}

impl fmt::Display for ArrayGeometry {
    /// Single-line text form: `name: p0 p1 p2 ...`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.name)?;
        for p in &self.positions {
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

impl FromStr for ArrayGeometry {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        let line = s.trim();
        let (name, rest) = line
            .split_once(':')
            .ok_or_else(|| DoaError::Parse(format!("expected `name: p0 p1 ...`, got {line:?}")))?;
        let positions = rest
            .split_whitespace()
            .map(|tok| {
                tok.parse::<i64>()
                    .map_err(|e| DoaError::Parse(format!("bad sensor position {tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_positions(name.trim(), &positions)
    }
}

/// Difference coarray `{n_i - n_j}` with its weight function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coarray {
    weights: BTreeMap<i64, usize>,
    udof: usize,
}

impl Coarray {
    /// All distinct lags, ascending. Includes lags beyond the contiguous
    /// segment, which smoothing never uses.
    pub fn lags(&self) -> impl Iterator<Item = i64> + '_ {
        self.weights.keys().copied()
    }

    /// Number of sensor pairs `(i, j)` with `n_i - n_j = lag`.
    pub fn weight(&self, lag: i64) -> usize {
        self.weights.get(&lag).copied().unwrap_or(0)
    }

    pub fn weights(&self) -> &BTreeMap<i64, usize> {
        &self.weights
    }

    /// Size of the hole-free run of lags centered at 0. Always odd.
    pub fn udof(&self) -> usize {
        self.udof
    }

    /// `G = (UDOF + 1) / 2`, the fixed-window smoothing aperture.
    pub fn g(&self) -> usize {
        (self.udof + 1) / 2
    }

    /// Largest lag of the contiguous segment, `G - 1`.
    pub fn max_contiguous_lag(&self) -> i64 {
        self.g() as i64 - 1
    }

    /// Lags `-(G-1)..=(G-1)`.
    pub fn contiguous_lags(&self) -> std::ops::RangeInclusive<i64> {
        let l = self.max_contiguous_lag();
        -l..=l
    }

    /// Missing positive lags between 1 and the largest lag present.
    pub fn holes(&self) -> Vec<i64> {
        let max = self.weights.keys().next_back().copied().unwrap_or(0);
        (1..max).filter(|l| !self.weights.contains_key(l)).collect()
    }
}

/// Computes the difference coarray and its uniform degrees of freedom.
pub fn difference_coarray(geom: &ArrayGeometry) -> Coarray {
    let mut weights = BTreeMap::new();
    for &ni in geom.positions() {
        for &nj in geom.positions() {
            *weights.entry(ni - nj).or_insert(0) += 1;
        }
    }
    let mut max_lag = 0;
    while weights.contains_key(&(max_lag + 1)) {
        max_lag += 1;
    }
    Coarray {
        weights,
        udof: 2 * max_lag as usize + 1,
    }
}
