//! Uniform 1-D lattices, regions of the domain and nodal functions.
//!
//! A [`Grid`] covers the window `[-L, L]` with `n_cells` uniform cells and
//! contains the domain `Ω = (-a, a)` with `±a` on nodes. Nodal data is read
//! as the piecewise-linear interpolant of its values; beyond the window the
//! interpolant ramps to zero over one extra cell on each side, which is what
//! the hat basis used by the fractional operators implies.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

const SNAP_TOL: f64 = 1e-9;

/// Uniform lattice on `[-L, L]` with `±a` on nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    window_half_width: f64,
    domain_half_width: f64,
    n_cells: usize,
    dx: f64,
    /// Number of cells between the origin and `a`.
    domain_cells: usize,
}

impl Grid {
    pub fn new(window_half_width: f64, domain_half_width: f64, n_cells: usize) -> Result<Self> {
        let (l, a) = (window_half_width, domain_half_width);
        if !(l.is_finite() && a.is_finite()) || a <= 0.0 || l <= a {
            return Err(Error::Config(format!(
                "need L > a > 0, got L = {l}, a = {a}"
            )));
        }
        let compatible = |n: usize| -> Option<usize> {
            if n == 0 || !n.is_multiple_of(2) {
                return None;
            }
            let k = a * n as f64 / (2.0 * l);
            let r = k.round();
            ((k - r).abs() <= SNAP_TOL * k.max(1.0) && r >= 1.0).then_some(r as usize)
        };
        match compatible(n_cells) {
            Some(domain_cells) if domain_cells < n_cells / 2 => Ok(Self {
                window_half_width: l,
                domain_half_width: a,
                n_cells,
                dx: 2.0 * l / n_cells as f64,
                domain_cells,
            }),
            _ => {
                let hint = (n_cells.max(2)..=(1 << 22))
                    .find(|&n| compatible(n).is_some())
                    .map(|n| format!("smallest compatible n_cells >= {n_cells} is {n}"))
                    .unwrap_or_else(|| "no compatible n_cells found".into());
                Err(Error::Config(format!(
                    "n_cells = {n_cells} does not put a = {a} on a node of [-{l}, {l}] \
                     (n_cells must be even and a*n_cells/(2L) an integer); {hint}"
                )))
            }
        }
    }

    pub fn window_half_width(&self) -> f64 {
        self.window_half_width
    }

    pub fn domain_half_width(&self) -> f64 {
        self.domain_half_width
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Index of the node at the origin.
    pub fn center(&self) -> usize {
        self.n_cells / 2
    }

    /// Coordinate of node `j`, computed from the origin so that the lattice
    /// is exactly symmetric.
    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - self.center() as f64) * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|j| self.x(j)).collect()
    }

    /// Index of the node at `-a`.
    pub fn left_boundary(&self) -> usize {
        self.center() - self.domain_cells
    }

    /// Index of the node at `+a`.
    pub fn right_boundary(&self) -> usize {
        self.center() + self.domain_cells
    }

    /// Indices of the nodes strictly inside `Ω`.
    pub fn interior(&self) -> std::ops::Range<usize> {
        self.left_boundary() + 1..self.right_boundary()
    }

    pub fn is_interior(&self, j: usize) -> bool {
        self.interior().contains(&j)
    }

    /// Converts a length that must be a multiple of `Δx` into a signed step count.
    pub fn steps(&self, h: f64) -> Result<isize> {
        let k = h / self.dx;
        let r = k.round();
        if !h.is_finite() || (k - r).abs() > SNAP_TOL * r.abs().max(1.0) {
            return Err(Error::Parameter(format!(
                "h = {h} is not a multiple of dx = {}",
                self.dx
            )));
        }
        Ok(r as isize)
    }

    /// Node index nearest to `x`, if `x` lies within the window.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let k = (x / self.dx).round() + self.center() as f64;
        (k >= 0.0 && k <= self.n_cells as f64).then_some(k as usize)
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "(L={}, a={}, n={}) vs (L={}, a={}, n={})",
                self.window_half_width,
                self.domain_half_width,
                self.n_cells,
                other.window_half_width,
                other.domain_half_width,
                other.n_cells
            )))
        }
    }

    pub(crate) fn ensure_len(&self, len: usize, what: &str) -> Result<()> {
        if len == self.n_nodes() {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what} has {len} samples, grid has {} nodes",
                self.n_nodes()
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    /// `Ω_λ`, points of `Ω` farther than λ from the boundary.
    Interior,
    /// `Ω^λ`, points closer than λ to `Ω`.
    Dilation,
    Interval,
}

/// A contiguous, inclusive range of node indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub kind: RegionKind,
    pub lambda: f64,
    pub first: usize,
    pub last: usize,
}

impl Region {
    /// The domain `Ω` itself, boundary nodes included.
    pub fn domain(grid: &Grid) -> Self {
        Self {
            kind: RegionKind::Interior,
            lambda: 0.0,
            first: grid.left_boundary(),
            last: grid.right_boundary(),
        }
    }

    /// The whole window.
    pub fn window(grid: &Grid) -> Self {
        Self {
            kind: RegionKind::Interval,
            lambda: 0.0,
            first: 0,
            last: grid.n_cells(),
        }
    }

    /// Nodes in `[lo, hi] ∩ window`, snapped outward.
    pub fn interval(grid: &Grid, lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::EmptyRegion(format!("[{lo}, {hi}]")));
        }
        let l = grid.window_half_width();
        if hi < -l || lo > l {
            return Err(Error::EmptyRegion(format!(
                "[{lo}, {hi}] misses the window"
            )));
        }
        let c = grid.center() as f64;
        let first = ((lo / grid.dx() + SNAP_TOL).floor() + c).max(0.0) as usize;
        let last = ((hi / grid.dx() - SNAP_TOL).ceil() + c).min(grid.n_cells() as f64) as usize;
        Ok(Self {
            kind: RegionKind::Interval,
            lambda: 0.0,
            first,
            last,
        })
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, j: usize) -> bool {
        (self.first..=self.last).contains(&j)
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }

    /// `self ⊆ other` as index sets.
    pub fn is_subset_of(&self, other: &Region) -> bool {
        other.first <= self.first && self.last <= other.last
    }

    /// Trapezoid weight of node `j` within this region.
    pub fn weight(&self, grid: &Grid, j: usize) -> f64 {
        if self.first == self.last {
            0.0
        } else if j == self.first || j == self.last {
            0.5 * grid.dx()
        } else {
            grid.dx()
        }
    }
}

/// `Ω_λ = (-a+λ, a-λ)`, snapped inward to nodes so that it is a subset of
/// the continuum set.
pub fn inner_region(grid: &Grid, lambda: f64) -> Result<Region> {
    let a = grid.domain_half_width();
    if !(lambda >= 0.0) {
        return Err(Error::Parameter(format!("λ must be >= 0, got {lambda}")));
    }
    if lambda >= a {
        return Err(Error::EmptyRegion(format!(
            "Ω_λ is empty for λ = {lambda} >= a = {a}"
        )));
    }
    let k = ((a - lambda) / grid.dx() + SNAP_TOL).floor() as usize;
    Ok(Region {
        kind: RegionKind::Interior,
        lambda,
        first: grid.center() - k,
        last: grid.center() + k,
    })
}

/// `Ω^λ = (-a-λ, a+λ)` intersected with the window, snapped outward.
pub fn outer_region(grid: &Grid, lambda: f64) -> Result<Region> {
    if !(lambda >= 0.0) {
        return Err(Error::Parameter(format!("λ must be >= 0, got {lambda}")));
    }
    let a = grid.domain_half_width();
    let k = ((a + lambda) / grid.dx() - SNAP_TOL).ceil() as usize;
    let k = k.min(grid.center());
    Ok(Region {
        kind: RegionKind::Dilation,
        lambda,
        first: grid.center() - k,
        last: grid.center() + k,
    })
}

/// Trapezoid `L^p` norm of nodal samples over a region.
pub fn lp_norm(values: &[f64], grid: &Grid, p: f64, region: &Region) -> Result<f64> {
    grid.ensure_len(values.len(), "sample vector")?;
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("p must be >= 1, got {p}")));
    }
    if region.last > grid.n_cells() {
        return Err(Error::GridMismatch("region exceeds the grid".into()));
    }
    // Scale by the max so that large p does not overflow.
    let vmax = region
        .indices()
        .map(|j| values[j].abs())
        .fold(0.0_f64, f64::max);
    if vmax == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = region
        .indices()
        .map(|j| region.weight(grid, j) * (values[j].abs() / vmax).powf(p))
        .sum();
    Ok(vmax * sum.powf(1.0 / p))
}

/// Nodal values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl DiscreteFunction {
    /// Wraps values without touching the exterior.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        grid.ensure_len(values.len(), "values")?;
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite value {} at x = {}",
                values[j],
                grid.x(j)
            )));
        }
        Ok(Self { grid, values })
    }

    /// Wraps values and forces the zero exterior trace.
    pub fn with_zero_exterior(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let mut f = Self::from_values(grid, values)?;
        f.zero_exterior();
        Ok(f)
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![0.0; grid.n_nodes()],
            grid,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_exterior(&mut self) {
        let interior = self.grid.interior();
        for (j, v) in self.values.iter_mut().enumerate() {
            if !interior.contains(&j) {
                *v = 0.0;
            }
        }
    }

    /// True when every node with `|x| >= a` holds exactly zero.
    pub fn has_zero_exterior(&self) -> bool {
        let interior = self.grid.interior();
        self.values
            .iter()
            .enumerate()
            .all(|(j, &v)| interior.contains(&j) || v == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    /// `v_h(x_j) = v(x_j + h)` for `h = steps·Δx`, zero beyond the window.
    pub fn shifted(&self, steps: isize) -> Self {
        Self {
            grid: self.grid,
            values: shift(&self.values, steps),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn lp_norm(&self, p: f64, region: &Region) -> Result<f64> {
        lp_norm(&self.values, &self.grid, p, region)
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        write_samples_csv(&self.grid, &self.values, out)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    }

    /// Reads a CSV written by [`DiscreteFunction::write_csv`] onto `grid`.
    pub fn read_csv(grid: Grid, input: impl BufRead) -> Result<Self> {
        let (xs, us) = read_xu_csv(input)?;
        if xs.len() != grid.n_nodes() {
            return Err(Error::GridMismatch(format!(
                "file has {} rows, grid has {} nodes",
                xs.len(),
                grid.n_nodes()
            )));
        }
        for (j, x) in xs.iter().enumerate() {
            if (x - grid.x(j)).abs() > 1e-9 * grid.window_half_width() {
                return Err(Error::GridMismatch(format!(
                    "row {j}: x = {x} but grid node is {}",
                    grid.x(j)
                )));
            }
        }
        Self::from_values(grid, us)
    }
}

/// Re-indexes `values` by `steps` nodes, filling with zeros.
pub fn shift(values: &[f64], steps: isize) -> Vec<f64> {
    let n = values.len() as isize;
    (0..n)
        .map(|j| {
            let k = j + steps;
            if (0..n).contains(&k) {
                values[k as usize]
            } else {
                0.0
            }
        })
        .collect()
}

/// Samples `f` at every node; optionally zeroes the exterior.
pub fn sample(
    f: impl Fn(f64) -> f64,
    grid: &Grid,
    enforce_exterior_zero: bool,
) -> Result<DiscreteFunction> {
    let values = grid.nodes().into_iter().map(f).collect();
    if enforce_exterior_zero {
        DiscreteFunction::with_zero_exterior(*grid, values)
    } else {
        DiscreteFunction::from_values(*grid, values)
    }
}

/// `x,u` CSV with 17 significant digits.
pub fn write_samples_csv(grid: &Grid, values: &[f64], out: &mut impl Write) -> std::io::Result<()> {
    let mut buf = String::with_capacity(40 * values.len() + 8);
    buf.push_str("x,u\n");
    for (j, v) in values.iter().enumerate() {
        let _ = writeln!(buf, "{:.16e},{:.16e}", grid.x(j), v);
    }
    out.write_all(buf.as_bytes())
}

/// Parses an `x,u` CSV; `#` lines are skipped.
pub fn read_xu_csv(input: impl BufRead) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut us = Vec::new();
    let mut header_seen = false;
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            if line.replace(' ', "") != "x,u" {
                return Err(Error::Input(format!("expected header `x,u`, got `{line}`")));
            }
            continue;
        }
        let mut parts = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|t| t.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Input(format!("bad row {}: `{line}`", lineno + 1)))
        };
        xs.push(parse(parts.next())?);
        us.push(parse(parts.next())?);
    }
    Ok((xs, us))
}
