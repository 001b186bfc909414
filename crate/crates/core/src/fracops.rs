//! The Riesz fractional gradient `∇^s` and divergence `div_s` in one dimension.
//!
//! For a function given by nodal values on a [`Grid`], read as the
//! piecewise-linear interpolant `f = Σ_j f_j hat_j`, the fractional gradient
//! at a node is
//!
//! ```text
//! ∇^s f(x_k) = μ(1,s) ∫ (f(x_k + t) − f(x_k)) sgn(t) |t|^{-1-s} dt
//!            = Σ_j G_kj f_j,   G_kj = μ(1,s) Δx^{-s} c_{j-k}.
//! ```
//!
//! Each one-sided integral converges absolutely for Lipschitz `f`, so no
//! principal value or hole-punching is involved. The coefficient `c_m` is the
//! integral of the unit hat centred at `m` against `sgn(τ)|τ|^{-1-s}`:
//!
//! ```text
//! c_m = −[(m+1)^{1−s} − 2m^{1−s} + (m−1)^{1−s}] / (s(1−s)),   m ≥ 1,
//! c_0 = 0,   c_{−m} = −c_m,
//! ```
//!
//! i.e. a second difference of the second antiderivative of `τ^{-1-s}`. The
//! matrix is Toeplitz and skew-symmetric, which makes the parity and duality
//! properties hold to rounding.
//!
//! In 1-D the scalar divergence has the same kernel as the gradient.
//! [`DivergenceOperator`] assembles it through a different route (cell
//! moments of the first antiderivatives plus analytic tails) so that the
//! integration-by-parts check is not a restatement of the Toeplitz symmetry.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{DiscreteFunction, Grid};
use statrs::function::gamma::gamma;

pub(crate) fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("s must lie in (0, 1), got {s}")))
    }
}

/// `μ(N,s) = 2^s Γ((N+s+1)/2) / (π^{N/2} Γ((1−s)/2))`.
pub fn mu(dim: u32, s: f64) -> Result<f64> {
    check_order(s)?;
    if dim == 0 {
        return Err(Error::Parameter("dimension must be >= 1".into()));
    }
    let n = dim as f64;
    Ok(2f64.powf(s) * gamma((n + s + 1.0) / 2.0) / (PI.powf(n / 2.0) * gamma((1.0 - s) / 2.0)))
}

/// The normalising constant together with its arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracConstant {
    pub dim: u32,
    pub s: f64,
    pub value: f64,
}

impl FracConstant {
    pub fn new(dim: u32, s: f64) -> Result<Self> {
        Ok(Self {
            dim,
            s,
            value: mu(dim, s)?,
        })
    }

    /// `μ(N,s)/(1−s)`, bounded above and below uniformly in `s`.
    pub fn scaled(&self) -> f64 {
        self.value / (1.0 - self.s)
    }
}

/// Dimensionless Toeplitz coefficient `c_m` of the fractional gradient.
pub fn kernel_coefficient(m: isize, s: f64) -> f64 {
    kernel_value(m as f64, s)
}

/// `c(τ) = −[ψ(τ+1) − 2ψ(τ) + ψ(τ−1)] / (s(1−s))`, `ψ(u) = sgn(u)|u|^{1−s}`:
/// `∇^s` of the unit hat centred at offset `τ` from the evaluation point,
/// in units of `μ Δx^{-s}`. Valid for every real `τ`.
pub fn kernel_value(tau: f64, s: f64) -> f64 {
    if tau < 0.0 {
        return -kernel_value(-tau, s);
    }
    if tau == 0.0 {
        return 0.0;
    }
    let alpha = 1.0 - s;
    let second_diff = if tau < 16.0 {
        let psi = |u: f64| u.signum() * u.abs().powf(alpha);
        psi(tau + 1.0) - 2.0 * psi(tau) + psi(tau - 1.0)
    } else {
        // τ^α Σ_k 2 binom(α, 2k) τ^{-2k}, free of cancellation.
        let inv2 = 1.0 / (tau * tau);
        let mut binom = 1.0;
        let mut power = 1.0;
        let mut sum = 0.0;
        for n in 1..=20 {
            binom *= (alpha - (n as f64 - 1.0)) / n as f64;
            if n % 2 == 0 {
                power *= inv2;
                sum += 2.0 * binom * power;
            }
        }
        tau.powf(alpha) * sum
    };
    -second_diff / (s * alpha)
}

/// Where `∇^s` is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Collocation {
    /// The window nodes `x_0, …, x_n`.
    #[default]
    Nodes,
    /// The cell midpoints `x_k + Δx/2`, `k = 0, …, n−1`.
    Midpoints,
}

impl Collocation {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "nodes" => Ok(Self::Nodes),
            "midpoints" => Ok(Self::Midpoints),
            other => Err(Error::Parameter(format!(
                "unknown collocation `{other}` (expected nodes or midpoints)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Nodes => "nodes",
            Self::Midpoints => "midpoints",
        }
    }

    fn offset(self) -> f64 {
        match self {
            Self::Nodes => 0.0,
            Self::Midpoints => 0.5,
        }
    }

    fn count(self, grid: &Grid) -> usize {
        match self {
            Self::Nodes => grid.n_nodes(),
            Self::Midpoints => grid.n_cells(),
        }
    }
}

/// Dense realisation of `∇^s` sampled at a set of collocation points.
#[derive(Debug, Clone)]
pub struct FracGradOperator {
    grid: Grid,
    constant: FracConstant,
    collocation: Collocation,
    /// Number of columns, one per window node.
    n: usize,
    rows: usize,
    /// Row-major `rows × n`; rows are collocation points, columns are hat functions.
    matrix: Vec<f64>,
    weights: Vec<f64>,
}

impl FracGradOperator {
    /// `∇^s` at the window nodes; square, Toeplitz and skew-symmetric.
    pub fn assemble(grid: &Grid, s: f64) -> Result<Self> {
        Self::assemble_at(grid, s, Collocation::Nodes)
    }

    pub fn assemble_at(grid: &Grid, s: f64, collocation: Collocation) -> Result<Self> {
        check_order(s)?;
        if grid.n_cells() < 8 {
            return Err(Error::Config(format!(
                "grid too small: n_cells = {} < 8",
                grid.n_cells()
            )));
        }
        let constant = FracConstant::new(1, s)?;
        let n = grid.n_nodes();
        let rows = collocation.count(grid);
        let scale = constant.value * grid.dx().powf(-s);
        let off = collocation.offset();
        // Entry (k, j) depends on j − k only: table[d + rows − 1] for d = j − k.
        let table: Vec<f64> = (0..n + rows - 1)
            .map(|i| scale * kernel_value(i as f64 - (rows - 1) as f64 - off, s))
            .collect();
        let mut matrix = vec![0.0; rows * n];
        matrix.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
            row.copy_from_slice(&table[rows - 1 - k..rows - 1 - k + n]);
        });
        Ok(Self {
            grid: *grid,
            constant,
            collocation,
            n,
            rows,
            matrix,
            weights: vec![grid.dx(); rows],
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn s(&self) -> f64 {
        self.constant.s
    }

    pub fn mu(&self) -> f64 {
        self.constant.value
    }

    pub fn constant(&self) -> FracConstant {
        self.constant
    }

    pub fn collocation(&self) -> Collocation {
        self.collocation
    }

    /// Number of columns (window nodes).
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of rows (collocation points).
    pub fn n_rows(&self) -> usize {
        self.rows
    }

    /// Position of the `k`-th collocation point.
    pub fn point(&self, k: usize) -> f64 {
        self.grid.x(k) + self.collocation.offset() * self.grid.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.rows).map(|k| self.point(k)).collect()
    }

    pub fn entry(&self, k: usize, j: usize) -> f64 {
        self.matrix[k * self.n + j]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.matrix[k * self.n..(k + 1) * self.n]
    }

    /// Quadrature weights of the collocation points (uniform `Δx`).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn ensure_nodes(&self) -> Result<()> {
        if self.collocation == Collocation::Nodes {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "operation needs nodal collocation, operator uses {}",
                self.collocation.name()
            )))
        }
    }

    fn ensure_rows(&self, len: usize, what: &str) -> Result<()> {
        if len == self.rows {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what} has {len} samples, operator has {} collocation points",
                self.rows
            )))
        }
    }

    /// `G v` for raw nodal values.
    pub fn apply_values(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.grid.ensure_len(v.len(), "input")?;
        Ok(self
            .matrix
            .par_chunks(self.n)
            .map(|row| dot(row, v))
            .collect())
    }

    /// `Gᵀ w` for raw collocation samples.
    pub fn apply_transpose_values(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.ensure_rows(w.len(), "input")?;
        let mut out = vec![0.0; self.n];
        for (row, &wk) in self.matrix.chunks(self.n).zip(w) {
            if wk != 0.0 {
                axpy(wk, row, &mut out);
            }
        }
        Ok(out)
    }

    /// `G` restricted to the interior columns: `out = G[:, interior] v_int`.
    pub(crate) fn apply_interior(&self, v_int: &[f64], out: &mut [f64]) {
        let r = self.grid.interior();
        debug_assert_eq!(v_int.len(), r.len());
        out.par_iter_mut()
            .zip(self.matrix.par_chunks(self.n))
            .for_each(|(o, row)| *o = dot(&row[r.clone()], v_int));
    }

    /// `out = G[:, interior]ᵀ w`.
    pub(crate) fn apply_transpose_interior(&self, w: &[f64], out: &mut [f64]) {
        let r = self.grid.interior();
        out.iter_mut().for_each(|o| *o = 0.0);
        for (row, &wk) in self.matrix.chunks(self.n).zip(w) {
            if wk != 0.0 {
                axpy(wk, &row[r.clone()], out);
            }
        }
    }

    /// `∇^s v` at every collocation point.
    pub fn apply(&self, v: &DiscreteFunction) -> Result<Vec<f64>> {
        self.grid.ensure_same(v.grid())?;
        self.apply_values(v.values())
    }

    /// `(Σ_k w_k |Φ_k|^p)^{1/p}` over the collocation points.
    pub fn field_lp_norm(&self, field: &[f64], p: f64) -> Result<f64> {
        self.ensure_rows(field.len(), "field")?;
        if !(p >= 1.0) {
            return Err(Error::Parameter(format!("p must be >= 1, got {p}")));
        }
        let scale = field.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return Ok(0.0);
        }
        if p.is_infinite() {
            return Ok(scale);
        }
        let sum: f64 = field
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * (v.abs() / scale).powf(p))
            .sum();
        Ok(scale * sum.powf(1.0 / p))
    }

    /// Quadrature-weighted adjoint: `⟨w, v⟩ = −⟨Φ, G v⟩` for all nodal `v`.
    pub fn apply_divergence(&self, field: &[f64]) -> Result<Vec<f64>> {
        self.ensure_nodes()?;
        self.ensure_rows(field.len(), "field")?;
        let weighted: Vec<f64> = field
            .iter()
            .zip(&self.weights)
            .map(|(f, w)| f * w)
            .collect();
        let t = self.apply_transpose_values(&weighted)?;
        Ok(t.iter().zip(&self.weights).map(|(x, w)| -x / w).collect())
    }

    /// Debug dump as `row,col,value` CSV, only for small operators.
    pub fn write_dump_csv(&self, out: &mut impl Write) -> Result<()> {
        if self.n > 65 {
            return Err(Error::Parameter(format!(
                "operator dump is limited to n_cells <= 64, got {}",
                self.n - 1
            )));
        }
        writeln!(out, "row,col,value")?;
        for k in 0..self.rows {
            for j in 0..self.n {
                writeln!(out, "{k},{j},{:.16e}", self.entry(k, j))?;
            }
        }
        Ok(())
    }
}

pub fn assemble_frac_gradient(grid: &Grid, s: f64) -> Result<FracGradOperator> {
    FracGradOperator::assemble(grid, s)
}

pub fn apply_frac_gradient(op: &FracGradOperator, v: &DiscreteFunction) -> Result<Vec<f64>> {
    op.apply(v)
}

pub fn apply_frac_divergence(op: &FracGradOperator, field: &[f64]) -> Result<Vec<f64>> {
    op.apply_divergence(field)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `div_s` assembled cell by cell from its own definition,
/// `div_s Φ(x_k) = μ ∫ (Φ(x_k) − Φ(y)) sgn(x_k − y) |x_k − y|^{-1-s} dy`.
///
/// Each cell contributes the moments `∫ t^{-1-s}` and `∫ t^{-s}` of its
/// linear piece; the two cells adjacent to `x_k` reduce to `∫ t^{-s}`; the
/// region beyond the extended support contributes `Φ(x_k)` times the
/// analytic tail of the kernel.
#[derive(Debug, Clone)]
pub struct DivergenceOperator {
    grid: Grid,
    n: usize,
    matrix: Vec<f64>,
}

impl DivergenceOperator {
    pub fn assemble(grid: &Grid, s: f64) -> Result<Self> {
        check_order(s)?;
        let mu = mu(1, s)?;
        let n = grid.n_nodes();
        let dx = grid.dx();
        let alpha = 1.0 - s;
        // Moments over the cell at distance [d Δx, (d+1) Δx], d ≥ 1:
        // a0 = ∫ t^{-1-s}, a1 = ∫ λ t^{-1-s} with λ = (t − dΔx)/Δx.
        let moments: Vec<(f64, f64)> = (0..n + 2)
            .map(|d| {
                if d == 0 {
                    return (f64::NAN, f64::NAN);
                }
                let t0 = d as f64 * dx;
                let t1 = t0 + dx;
                let a0 = (t0.powf(-s) - t1.powf(-s)) / s;
                let m1 = (t1.powf(alpha) - t0.powf(alpha)) / alpha;
                (a0, (m1 - t0 * a0) / dx)
            })
            .collect();
        let adjacent = dx.powf(-s) / alpha;

        let mut matrix = vec![0.0; n * n];
        matrix.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
            // Extended node indices run over -1..=n, values at -1 and n are zero.
            let mut add = |j: isize, v: f64| {
                if (0..n as isize).contains(&j) {
                    row[j as usize] += mu * v;
                }
            };
            let ki = k as isize;
            // Cells to the right, [x_i, x_{i+1}] with i >= k.
            for i in ki..=(n as isize - 1) {
                if i == ki {
                    add(ki, -adjacent);
                    add(ki + 1, adjacent);
                    continue;
                }
                let (a0, a1) = moments[(i - ki) as usize];
                add(ki, -a0);
                add(i, a0 - a1);
                add(i + 1, a1);
            }
            // Cells to the left, [x_i, x_{i+1}] with i + 1 <= k.
            for i in (-1..ki).rev() {
                if i + 1 == ki {
                    add(ki, adjacent);
                    add(ki - 1, -adjacent);
                    continue;
                }
                let (a0, a1) = moments[(ki - i - 1) as usize];
                add(ki, a0);
                add(i + 1, -(a0 - a1));
                add(i, -a1);
            }
            // Tails beyond x_{-1} and x_{n}.
            let t_left = (ki + 1) as f64 * dx;
            let t_right = (n as isize - ki) as f64 * dx;
            add(ki, (t_left.powf(-s) - t_right.powf(-s)) / s);
        });
        Ok(Self {
            grid: *grid,
            n,
            matrix,
        })
    }

    pub fn entry(&self, k: usize, j: usize) -> f64 {
        self.matrix[k * self.n + j]
    }

    pub fn apply(&self, field: &[f64]) -> Result<Vec<f64>> {
        self.grid.ensure_len(field.len(), "field")?;
        Ok(self
            .matrix
            .chunks(self.n)
            .map(|row| dot(row, field))
            .collect())
    }
}

/// Outcome of an integration-by-parts check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityDefect {
    /// `|∫ φ div_s Φ + ∫ Φ ∇^s φ| / (‖φ‖₂ ‖Φ‖₂ + floor)`.
    pub defect: f64,
    /// Set when either input is nonzero within one cell of the window edge.
    pub touches_window_boundary: bool,
}

pub fn duality_defect(
    grid: &Grid,
    s: f64,
    phi: &DiscreteFunction,
    field: &[f64],
) -> Result<DualityDefect> {
    grid.ensure_same(phi.grid())?;
    grid.ensure_len(field.len(), "field")?;
    let grad = FracGradOperator::assemble(grid, s)?;
    let div = DivergenceOperator::assemble(grid, s)?;
    let grad_phi = grad.apply(phi)?;
    let div_field = div.apply(field)?;
    let w = grid.dx();
    let lhs = w * dot(phi.values(), &div_field);
    let rhs = w * dot(field, &grad_phi);
    let norm = |v: &[f64]| (w * dot(v, v)).sqrt();
    let defect = (lhs + rhs).abs() / (norm(phi.values()) * norm(field) + f64::MIN_POSITIVE);
    let n = grid.n_cells();
    let edge = |v: &[f64]| [0, 1, n - 1, n].iter().any(|&j| v[j] != 0.0);
    Ok(DualityDefect {
        defect,
        touches_window_boundary: edge(phi.values()) || edge(field),
    })
}

/// Empirical constant of the pointwise bound
/// `|∇^s φ| ≤ C ((1−s)/s)^{1−s} ‖φ‖_∞^{1−s} ‖φ'‖_∞^s`.
///
/// `sup` and `lipschitz` are the analytic norms of the profile that was
/// sampled into `phi`. A constant profile (zero Lipschitz constant) gives 0.
pub fn pointwise_bound_ratio(
    op: &FracGradOperator,
    phi: &DiscreteFunction,
    sup: f64,
    lipschitz: f64,
) -> Result<f64> {
    if lipschitz == 0.0 || sup == 0.0 {
        return Ok(0.0);
    }
    if !(sup > 0.0 && lipschitz > 0.0) {
        return Err(Error::Parameter(
            "sup and Lipschitz norms must be nonnegative".into(),
        ));
    }
    let s = op.s();
    let g = op.apply(phi)?;
    let peak = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = ((1.0 - s) / s).powf(1.0 - s) * sup.powf(1.0 - s) * lipschitz.powf(s);
    Ok(peak / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample;
    use crate::profile::QuinticBump;

    #[test]
    fn mu_reference_value() {
        // μ(1, 1/2) = √2 Γ(5/4) / (√π Γ(1/4)) = 1/(2√(2π)), 30-digit reference.
        let v = mu(1, 0.5).unwrap();
        assert!((v - 0.199_471_140_200_716_3).abs() < 1e-12, "{v}");
        assert!(mu(1, 0.0).is_err());
        assert!(mu(1, 1.0).is_err());
        assert!(mu(0, 0.5).is_err());
    }

    #[test]
    fn mu_is_positive() {
        for dim in 1..=3 {
            for i in 1..100 {
                assert!(mu(dim, i as f64 / 100.0).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn mu_over_one_minus_s_is_bounded() {
        let vals: Vec<f64> = (1..=19)
            .map(|i| FracConstant::new(1, 0.05 * i as f64).unwrap().scaled())
            .collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(0.0, f64::max);
        // μ(1,s)/(1−s) → 1/π as s → 0 and → 1/2 as s → 1.
        assert!(lo > 0.3 && hi < 0.52, "{lo} {hi}");
    }

    #[test]
    fn coefficient_series_matches_direct_formula() {
        for &s in &[0.05, 0.25, 0.5, 0.75, 0.95] {
            let alpha: f64 = 1.0 - s;
            for m in 16..40isize {
                let mf = m as f64;
                let direct = -((mf + 1.0).powf(alpha) - 2.0 * mf.powf(alpha)
                    + (mf - 1.0).powf(alpha))
                    / (s * alpha);
                let series = kernel_coefficient(m, s);
                assert!(((direct - series) / series).abs() < 1e-10, "s={s} m={m}");
            }
        }
    }

    #[test]
    fn coefficient_matches_midpoint_quadrature() {
        // c_m = ∫ hat(τ − m) τ^{-1-s} dτ for m ≥ 2 (smooth integrand).
        for &s in &[0.3, 0.7] {
            for m in [2isize, 3, 7, 50] {
                let k = 200_000;
                let mut acc = 0.0;
                for i in 0..k {
                    let tau = (m - 1) as f64 + 2.0 * (i as f64 + 0.5) / k as f64;
                    let hat = 1.0 - (tau - m as f64).abs();
                    acc += hat * tau.powf(-1.0 - s) * 2.0 / k as f64;
                }
                let c = kernel_coefficient(m, s);
                assert!(((acc - c) / c).abs() < 1e-8, "s={s} m={m}: {acc} vs {c}");
            }
        }
    }

    #[test]
    fn half_offset_value_matches_quadrature() {
        // c(τ) = ∫ (hat(t − τ) − hat(−τ)) sgn(t) |t|^{-1-s} dt with the
        // evaluation point inside the support. Substituting |t| = r^{1/(1−s)}
        // removes the endpoint singularity; the tails are analytic.
        for &s in &[0.25, 0.5, 0.75] {
            for &tau in &[0.5, -0.5, 1.5, 0.25] {
                let hat = |t: f64| (1.0 - (t - tau).abs()).max(0.0);
                let h0 = hat(0.0);
                // hat(t) − hat(0) without cancellation for small t.
                let diff = |t: f64| {
                    if h0 > 0.0 && (t - tau).signum() == (-tau).signum() && (t - tau).abs() <= 1.0 {
                        t * tau.signum()
                    } else {
                        hat(t) - h0
                    }
                };
                let k = 1.0 / (1.0 - s);
                let side = |sign: f64, lo: f64, hi: f64| {
                    let (r0, r1) = (lo.powf(1.0 / k), hi.powf(1.0 / k));
                    let steps = 200_000;
                    let dr = (r1 - r0) / steps as f64;
                    (0..steps)
                        .map(|i| {
                            let r = r0 + (i as f64 + 0.5) * dr;
                            let t = r.powf(k);
                            diff(sign * t) * sign * t.powf(-1.0 - s) * k * r.powf(k - 1.0) * dr
                        })
                        .sum::<f64>()
                };
                let (lo, hi) = (tau - 1.0, tau + 1.0);
                let mut breaks_pos = vec![0.0, hi.max(0.0)];
                let mut breaks_neg = vec![0.0, (-lo).max(0.0)];
                for b in [lo, tau] {
                    if b > 0.0 {
                        breaks_pos.push(b);
                    } else if b < 0.0 {
                        breaks_neg.push(-b);
                    }
                }
                breaks_pos.sort_by(f64::total_cmp);
                breaks_neg.sort_by(f64::total_cmp);
                let mut acc = 0.0;
                for (sign, breaks) in [(1.0, &breaks_pos), (-1.0, &breaks_neg)] {
                    for w in breaks.windows(2).filter(|w| w[1] > w[0]) {
                        acc += side(sign, w[0], w[1]);
                    }
                }
                // Outside the support the integrand is −h0 sgn(t)|t|^{-1-s}.
                if h0 > 0.0 {
                    acc += h0 * ((-lo).powf(-s) - hi.powf(-s)) / s;
                }
                let c = kernel_value(tau, s);
                assert!(
                    (acc - c).abs() < 1e-6 * c.abs().max(1.0),
                    "s={s} τ={tau}: {acc} vs {c}"
                );
            }
        }
    }

    #[test]
    fn midpoint_operator_layout() {
        let g = Grid::new(2.0, 1.0, 16).unwrap();
        let op = FracGradOperator::assemble_at(&g, 0.4, Collocation::Midpoints).unwrap();
        assert_eq!(op.n_rows(), 16);
        assert_eq!(op.dim(), 17);
        let scale = op.mu() * g.dx().powf(-0.4);
        for k in 0..16 {
            assert_eq!(op.point(k), g.x(k) + 0.5 * g.dx());
            for j in 0..17 {
                let e = scale * kernel_value(j as f64 - k as f64 - 0.5, 0.4);
                assert!((op.entry(k, j) - e).abs() <= 1e-15 * e.abs());
            }
        }
        // Reflection about the centre maps midpoint k to 15 − k and node j to 16 − j.
        for k in 0..16 {
            for j in 0..17 {
                assert!((op.entry(k, j) + op.entry(15 - k, 16 - j)).abs() < 1e-13);
            }
        }
        assert!(op.apply_divergence(&[0.0; 16]).is_err());
        let nodes = FracGradOperator::assemble(&g, 0.4).unwrap();
        for k in 0..17 {
            for j in 0..17 {
                let e = scale * kernel_coefficient(j as isize - k as isize, 0.4);
                assert!((nodes.entry(k, j) - e).abs() <= 1e-15 * e.abs());
            }
        }
    }

    #[test]
    fn operator_is_skew_toeplitz() {
        let g = Grid::new(2.0, 1.0, 16).unwrap();
        let op = FracGradOperator::assemble(&g, 0.4).unwrap();
        for k in 0..g.n_nodes() {
            assert_eq!(op.entry(k, k), 0.0);
            for j in 0..g.n_nodes() {
                assert_eq!(op.entry(k, j), -op.entry(j, k));
            }
        }
        assert!(FracGradOperator::assemble(&Grid::new(2.0, 1.0, 4).unwrap(), 0.5).is_err());
        assert!(FracGradOperator::assemble(&g, 1.5).is_err());
    }

    #[test]
    fn zero_and_linearity() {
        let g = Grid::new(4.0, 1.0, 64).unwrap();
        let op = FracGradOperator::assemble(&g, 0.6).unwrap();
        let zero = DiscreteFunction::zeros(g);
        assert!(op.apply(&zero).unwrap().iter().all(|&v| v == 0.0));
        let u = sample(|x| (1.0 - x * x).max(0.0), &g, true).unwrap();
        let v = sample(|x| x * (1.0 - x * x).max(0.0), &g, true).unwrap();
        let (a, b) = (1.7, -0.3);
        let lhs = op.apply(&u.scaled(a).axpy(b, &v).unwrap()).unwrap();
        let gu = op.apply(&u).unwrap();
        let gv = op.apply(&v).unwrap();
        let scale = lhs.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        for k in 0..lhs.len() {
            assert!((lhs[k] - (a * gu[k] + b * gv[k])).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn parity() {
        let g = Grid::new(4.0, 1.0, 128).unwrap();
        let op = FracGradOperator::assemble(&g, 0.35).unwrap();
        let odd = sample(|x| x * (1.0 - x * x).max(0.0).powi(2), &g, true).unwrap();
        let even = sample(|x| (1.0 - x * x).max(0.0), &g, true).unwrap();
        let go = op.apply(&odd).unwrap();
        let ge = op.apply(&even).unwrap();
        let n = g.n_cells();
        for k in 0..=n {
            assert!((go[k] - go[n - k]).abs() <= 1e-12);
            assert!((ge[k] + ge[n - k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn divergence_routes_agree() {
        let g = Grid::new(2.0, 1.0, 32).unwrap();
        let s = 0.45;
        let op = FracGradOperator::assemble(&g, s).unwrap();
        let div = DivergenceOperator::assemble(&g, s).unwrap();
        // In 1-D, div_s and ∇^s share a kernel: D = G.
        for k in 0..g.n_nodes() {
            for j in 0..g.n_nodes() {
                let (a, b) = (div.entry(k, j), op.entry(k, j));
                assert!(
                    (a - b).abs() <= 1e-12 * (1.0 + b.abs()),
                    "({k},{j}) {a} {b}"
                );
            }
        }
    }

    #[test]
    fn adjoint_divergence() {
        let g = Grid::new(2.0, 1.0, 64).unwrap();
        let op = FracGradOperator::assemble(&g, 0.5).unwrap();
        assert!(op
            .apply_divergence(&vec![0.0; g.n_nodes()])
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        let v = QuinticBump::new(0.1, 0.5).sample(&g, true).unwrap();
        let gv = op.apply(&v).unwrap();
        let w = op.apply_divergence(&gv).unwrap();
        let pairing = -g.dx() * dot(&w, v.values());
        let norm2 = g.dx() * dot(&gv, &gv);
        assert!(((pairing - norm2) / norm2).abs() < 1e-12);
        assert!(pairing > 0.0);
    }

    #[test]
    fn dump_is_gated() {
        let small = FracGradOperator::assemble(&Grid::new(2.0, 1.0, 8).unwrap(), 0.5).unwrap();
        let mut buf = Vec::new();
        small.write_dump_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 81);
        let big = FracGradOperator::assemble(&Grid::new(2.0, 1.0, 128).unwrap(), 0.5).unwrap();
        assert!(big.write_dump_csv(&mut Vec::new()).is_err());
    }

    #[test]
    fn pointwise_ratio_trivial_cases() {
        let g = Grid::new(2.0, 1.0, 64).unwrap();
        let op = FracGradOperator::assemble(&g, 0.5).unwrap();
        let zero = DiscreteFunction::zeros(g);
        assert_eq!(pointwise_bound_ratio(&op, &zero, 0.0, 0.0).unwrap(), 0.0);
        let b = QuinticBump::new(0.0, 0.5);
        let r1 = pointwise_bound_ratio(
            &op,
            &b.sample(&g, true).unwrap(),
            b.sup_norm(),
            b.lipschitz(),
        )
        .unwrap();
        let b2 = b.with_height(2.0);
        let r2 = pointwise_bound_ratio(
            &op,
            &b2.sample(&g, true).unwrap(),
            b2.sup_norm(),
            b2.lipschitz(),
        )
        .unwrap();
        assert!(((r1 - r2) / r1).abs() < 1e-10);
    }
}
