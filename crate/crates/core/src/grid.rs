use crate::{Error, Result};

/// Default ratio `Δt / Δr`.
pub const DEFAULT_CFL: f64 = 0.9;

/// Uniform radial mesh `r_j = j Δr`, `j = 0..n_points`, with a fixed time step ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    dr: f64,
    n_points: usize,
    cfl_ratio: f64,
}

impl RadialGrid {
    pub fn new(dr: f64, n_points: usize, cfl_ratio: f64) -> Result<Self> {
        if !(dr.is_finite() && dr > 0.0) {
            return Err(Error::config(format!("grid spacing must be positive, got {dr}")));
        }
        if n_points < 3 {
            return Err(Error::config(format!("grid needs at least 3 points, got {n_points}")));
        }
        if !(cfl_ratio > 0.0 && cfl_ratio < 1.0) {
            return Err(Error::config(format!("CFL ratio must lie in (0, 1), got {cfl_ratio}")));
        }
        Ok(Self { dr, n_points, cfl_ratio })
    }

    /// Grid covering `[0, extent]` (the last point is the first one at or beyond `extent`).
    pub fn with_extent(dr: f64, extent: f64, cfl_ratio: f64) -> Result<Self> {
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::config(format!("grid extent must be positive, got {extent}")));
        }
        let n = (extent / dr - 1e-9).ceil() as usize + 1;
        Self::new(dr, n, cfl_ratio)
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn dt(&self) -> f64 {
        self.cfl_ratio * self.dr
    }

    pub fn cfl_ratio(&self) -> f64 {
        self.cfl_ratio
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Radius of the outermost point.
    pub fn r_max(&self) -> f64 {
        self.r(self.n_points - 1)
    }

    #[inline]
    pub fn r(&self, j: usize) -> f64 {
        j as f64 * self.dr
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |j| self.r(j))
    }

    /// Largest index with `r_j <= radius`, clamped to the grid.
    pub fn index_at_or_below(&self, radius: f64) -> usize {
        let j = (radius / self.dr + 1e-9).floor();
        if j <= 0.0 {
            0
        } else {
            (j as usize).min(self.n_points - 1)
        }
    }

    /// Same extent and ratio with the spacing divided by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            dr: self.dr / factor as f64,
            n_points: (self.n_points - 1) * factor + 1,
            cfl_ratio: self.cfl_ratio,
        }
    }

    pub(crate) fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.n_points {
            return Err(Error::Input(format!(
                "{what} has {len} samples but the grid has {} points",
                self.n_points
            )));
        }
        Ok(())
    }
}
