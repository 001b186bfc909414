//! Cut-offs, admissible outward steps, localized translations and the
//! commutator between `∇^s` and a localized translation.

use crate::error::{Error, Result};
use crate::fracops::FracGradOperator;
use crate::grid::{lp_norm, shift, DiscreteFunction, Grid, Region};
use crate::profile::{smoothstep, SMOOTHSTEP_MAX_SLOPE};

const GEOM_TOL: f64 = 1e-12;

/// Smooth cut-off: 1 on `D_ρ(x₀)`, 0 outside `D_{2ρ}(x₀)`, quintic ramp between.
#[derive(Debug, Clone)]
pub struct Cutoff {
    center: f64,
    radius: f64,
    grid: Grid,
    values: Vec<f64>,
}

impl Cutoff {
    pub fn new(center: f64, radius: f64, grid: &Grid) -> Result<Self> {
        if !(radius >= 4.0 * grid.dx()) {
            return Err(Error::Resolution(format!(
                "cutoff radius {radius} is below 4 dx = {}",
                4.0 * grid.dx()
            )));
        }
        let values = grid
            .nodes()
            .into_iter()
            .map(|x| cutoff_profile(center, radius, x))
            .collect();
        Ok(Self {
            center,
            radius,
            grid: *grid,
            values,
        })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, x: f64) -> f64 {
        cutoff_profile(self.center, self.radius, x)
    }

    pub fn sup_norm(&self) -> f64 {
        1.0
    }

    /// `‖φ'‖_∞ = 15 / (8ρ)`.
    pub fn lipschitz(&self) -> f64 {
        SMOOTHSTEP_MAX_SLOPE / self.radius
    }

    /// `‖φ‖_∞ + ‖φ'‖_∞`.
    pub fn w1_inf_norm(&self) -> f64 {
        self.sup_norm() + self.lipschitz()
    }
}

fn cutoff_profile(center: f64, radius: f64, x: f64) -> f64 {
    smoothstep((2.0 * radius - (x - center).abs()) / radius)
}

pub fn make_cutoff(center: f64, radius: f64, grid: &Grid) -> Result<Cutoff> {
    Cutoff::new(center, radius, grid)
}

/// Admissible steps `h = m Δx` for a ball `D_ρ(x₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    pub center: f64,
    pub radius: f64,
    pub dx: f64,
    /// Signed step counts in increasing order; always contains 0.
    pub steps: Vec<isize>,
}

impl DirectionSet {
    pub fn lengths(&self) -> Vec<f64> {
        self.steps.iter().map(|&m| m as f64 * self.dx).collect()
    }

    pub fn contains(&self, steps: isize) -> bool {
        self.steps.binary_search(&steps).is_ok()
    }

    /// True when only the trivial step is admissible.
    pub fn is_trivial(&self) -> bool {
        self.steps.iter().all(|&m| m == 0)
    }
}

/// Checks `(D_{2ρ}(x₀) \ Ω) + t h ⊆ Ω^c` for `t ∈ {0, ¼, ½, ¾, 1}`.
///
/// `D_{2ρ}(x₀) \ Ω` is at most two intervals; each shifted piece must stay
/// on its side of `Ω = (−a, a)`. Endpoints are treated as closed, so a piece
/// that touches `±a` may only move away from `Ω`.
pub fn is_admissible(grid: &Grid, center: f64, radius: f64, h: f64) -> bool {
    if h.abs() >= radius {
        return false;
    }
    let a = grid.domain_half_width();
    let (lo, hi) = (center - 2.0 * radius, center + 2.0 * radius);
    let tol = GEOM_TOL * (a + center.abs() + radius);
    let mut pieces = Vec::with_capacity(2);
    if lo <= -a {
        pieces.push((lo, hi.min(-a), true));
    }
    if hi >= a {
        pieces.push((lo.max(a), hi, false));
    }
    [0.0, 0.25, 0.5, 0.75, 1.0].iter().all(|&t| {
        pieces.iter().all(|&(p_lo, p_hi, left)| {
            if left {
                p_hi + t * h <= -a + tol
            } else {
                p_lo + t * h >= a - tol
            }
        })
    })
}

pub fn admissible_directions(grid: &Grid, center: f64, radius: f64) -> Result<DirectionSet> {
    if !(radius >= 4.0 * grid.dx()) {
        return Err(Error::Resolution(format!(
            "radius {radius} is below 4 dx = {}",
            4.0 * grid.dx()
        )));
    }
    let max = ((radius / grid.dx()).ceil() as isize).max(1);
    let steps = (-max..=max)
        .filter(|&m| m == 0 || is_admissible(grid, center, radius, m as f64 * grid.dx()))
        .collect();
    Ok(DirectionSet {
        center,
        radius,
        dx: grid.dx(),
        steps,
    })
}

/// `T_h v = φ v_h + (1 − φ) v` with `v_h(x) = ṽ(x + h)`.
///
/// With `check_trace` set the step must be admissible for the cut-off's ball
/// and the result is verified to keep the zero exterior trace.
pub fn localized_translate(
    v: &DiscreteFunction,
    h: f64,
    cutoff: &Cutoff,
    check_trace: bool,
) -> Result<DiscreteFunction> {
    let grid = v.grid();
    grid.ensure_same(cutoff.grid())?;
    let m = grid.steps(h)?;
    if check_trace && !is_admissible(grid, cutoff.center, cutoff.radius, h) && m != 0 {
        return Err(Error::Inadmissible {
            h,
            center: cutoff.center,
            radius: cutoff.radius,
        });
    }
    let out = translate_values(v.values(), cutoff.values(), m);
    let out = DiscreteFunction::from_values(*grid, out)?;
    if check_trace && v.has_zero_exterior() && !out.has_zero_exterior() {
        return Err(Error::Inadmissible {
            h,
            center: cutoff.center,
            radius: cutoff.radius,
        });
    }
    Ok(out)
}

pub(crate) fn translate_values(v: &[f64], phi: &[f64], steps: isize) -> Vec<f64> {
    if steps == 0 {
        return v.to_vec();
    }
    let vh = shift(v, steps);
    v.iter()
        .zip(&vh)
        .zip(phi)
        .map(|((&v, &vh), &p)| if p == 0.0 { v } else { p * vh + (1.0 - p) * v })
        .collect()
}

/// `C_{φ,v}(x_k) = Σ_j G_kj (φ_j − φ_k) g_j` with `g = v_h − v`.
///
/// This is the commutator integral `μ ∫ (φ(x) − φ(y)) g(y) sgn(x−y)|x−y|^{-1-s} dy`
/// evaluated with the same hat-function kernel as [`FracGradOperator`], so
/// `∇^s(T_h v) = T_h(∇^s v) + C` holds to rounding.
pub fn commutator_with_profile(
    op: &FracGradOperator,
    phi: &[f64],
    v: &DiscreteFunction,
    steps: isize,
) -> Result<Vec<f64>> {
    op.ensure_nodes()?;
    let grid = op.grid();
    grid.ensure_same(v.grid())?;
    grid.ensure_len(phi.len(), "cut-off samples")?;
    let vals = v.values();
    let vh = shift(vals, steps);
    let g: Vec<f64> = vh.iter().zip(vals).map(|(a, b)| a - b).collect();
    let support: Vec<usize> = (0..g.len()).filter(|&j| g[j] != 0.0).collect();
    Ok((0..grid.n_nodes())
        .map(|k| {
            let row = op.row(k);
            let pk = phi[k];
            support.iter().map(|&j| row[j] * (phi[j] - pk) * g[j]).sum()
        })
        .collect())
}

pub fn commutator(
    op: &FracGradOperator,
    cutoff: &Cutoff,
    v: &DiscreteFunction,
    h: f64,
) -> Result<Vec<f64>> {
    op.grid().ensure_same(cutoff.grid())?;
    let m = op.grid().steps(h)?;
    commutator_with_profile(op, cutoff.values(), v, m)
}

/// Relative max-norm defect of `∇^s(T_h v) − [φ (∇^s v)_h + (1−φ) ∇^s v] − C`.
pub fn commutator_identity_defect(
    op: &FracGradOperator,
    cutoff: &Cutoff,
    v: &DiscreteFunction,
    h: f64,
) -> Result<f64> {
    let grid = op.grid();
    let m = grid.steps(h)?;
    let th = localized_translate(v, h, cutoff, false)?;
    let lhs = op.apply(&th)?;
    let grad_v = op.apply(v)?;
    // (∇^s v)_h is ∇^s of the shifted interpolant, exact for every node.
    let grad_vh = op.apply(&v.shifted(m))?;
    let c = commutator(op, cutoff, v, h)?;
    let phi = cutoff.values();
    let mut worst = 0.0_f64;
    let mut scale = 0.0_f64;
    for k in 0..lhs.len() {
        let rhs = phi[k] * grad_vh[k] + (1.0 - phi[k]) * grad_v[k] + c[k];
        worst = worst.max((lhs[k] - rhs).abs());
        scale = scale.max(lhs[k].abs()).max(c[k].abs());
    }
    Ok(if scale == 0.0 { 0.0 } else { worst / scale })
}

/// The measured ratio `‖C‖_p / ‖v_h − v‖_p` and the explicit bound `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorBound {
    pub ratio: f64,
    /// `μ(1,s) [ω₀/(1−s) ‖φ‖_{W^{1,∞}} + 2‖φ‖_∞ ω₀/s]`, `ω₀ = 2`.
    pub constant: f64,
}

impl CommutatorBound {
    pub fn holds(&self) -> bool {
        self.ratio <= self.constant
    }
}

/// The near/far-field constant with unit splitting radius.
pub fn commutator_constant(mu: f64, s: f64, cutoff: &Cutoff) -> f64 {
    let omega0 = 2.0;
    mu * (omega0 / (1.0 - s) * cutoff.w1_inf_norm() + 2.0 * cutoff.sup_norm() * omega0 / s)
}

pub fn commutator_bound_ratio(
    op: &FracGradOperator,
    cutoff: &Cutoff,
    v: &DiscreteFunction,
    h: f64,
    p: f64,
) -> Result<CommutatorBound> {
    let grid = op.grid();
    let m = grid.steps(h)?;
    let window = Region::window(grid);
    let vals = v.values();
    let diff: Vec<f64> = shift(vals, m)
        .iter()
        .zip(vals)
        .map(|(a, b)| a - b)
        .collect();
    let denom = lp_norm(&diff, grid, p, &window)?;
    if denom == 0.0 {
        return Err(Error::Degenerate("v_h = v, the ratio is undefined".into()));
    }
    let c = commutator_with_profile(op, cutoff.values(), v, m)?;
    Ok(CommutatorBound {
        ratio: lp_norm(&c, grid, p, &window)? / denom,
        constant: commutator_constant(op.mu(), op.s(), cutoff),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::QuinticBump;

    fn grid() -> Grid {
        Grid::new(4.0, 1.0, 256).unwrap()
    }

    #[test]
    fn cutoff_shape() {
        let g = grid();
        let c = make_cutoff(0.25, 0.25, &g).unwrap();
        assert_eq!(c.value(0.25), 1.0);
        assert_eq!(c.value(0.75), 0.0);
        assert_eq!(c.value(-0.25), 0.0);
        assert_eq!(c.value(0.4), 1.0);
        assert!(c.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let max_slope = c
            .values()
            .windows(2)
            .map(|w| (w[1] - w[0]).abs() / g.dx())
            .fold(0.0, f64::max);
        assert!(max_slope <= c.lipschitz() + g.dx() * 100.0);
        assert!(max_slope > 0.9 * c.lipschitz());
        assert!(make_cutoff(0.0, 3.0 * g.dx(), &g).is_err());
    }

    #[test]
    fn interior_ball_admits_every_step() {
        let g = grid();
        let d = admissible_directions(&g, 0.0, 0.2).unwrap();
        // |h| < ρ with ρ/Δx = 6.4.
        assert_eq!(d.steps, (-6..=6).collect::<Vec<_>>());
        assert!(d.contains(0));
    }

    #[test]
    fn boundary_ball_admits_outward_steps_only() {
        let g = grid();
        let d = admissible_directions(&g, -1.0, 0.15).unwrap();
        assert!(d.contains(0));
        assert!(d.contains(-1) && d.contains(-4));
        assert!(!d.contains(1) && !d.contains(4));
        let d = admissible_directions(&g, 1.0, 0.15).unwrap();
        assert!(d.contains(3) && !d.contains(-3));
    }

    #[test]
    fn translation_basics() {
        let g = grid();
        let v = QuinticBump::new(0.1, 0.6).sample(&g, true).unwrap();
        let c = make_cutoff(0.0, 0.2, &g).unwrap();
        assert_eq!(localized_translate(&v, 0.0, &c, true).unwrap(), v);
        let m = 5;
        let t = localized_translate(&v, m as f64 * g.dx(), &c, true).unwrap();
        let vh = v.shifted(m);
        for j in 0..g.n_nodes() {
            let x = g.x(j);
            if (x - 0.0).abs() <= 0.2 {
                assert_eq!(t.values()[j], vh.values()[j]);
            }
            if (x - 0.0).abs() >= 0.4 {
                assert_eq!(t.values()[j], v.values()[j]);
            }
        }
    }

    #[test]
    fn inadmissible_step_is_rejected() {
        let g = grid();
        let v = QuinticBump::new(-0.5, 0.5).sample(&g, true).unwrap();
        let c = make_cutoff(-1.0, 0.15, &g).unwrap();
        let err = localized_translate(&v, 2.0 * g.dx(), &c, true).unwrap_err();
        assert!(matches!(err, Error::Inadmissible { .. }));
        assert!(localized_translate(&v, -2.0 * g.dx(), &c, true).is_ok());
    }

    #[test]
    fn commutator_trivial_cases() {
        let g = grid();
        let op = FracGradOperator::assemble(&g, 0.5).unwrap();
        let v = QuinticBump::new(0.0, 0.7).sample(&g, true).unwrap();
        let constant = vec![0.7; g.n_nodes()];
        let c = commutator_with_profile(&op, &constant, &v, 3).unwrap();
        assert!(c.iter().all(|&x| x == 0.0));
        let cut = make_cutoff(0.0, 0.2, &g).unwrap();
        assert!(commutator(&op, &cut, &v, 0.0)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
        assert!(matches!(
            commutator_bound_ratio(&op, &cut, &v, 0.0, 2.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn commutator_identity_and_scaling() {
        let g = grid();
        let op = FracGradOperator::assemble(&g, 0.5).unwrap();
        let v = QuinticBump::new(0.05, 0.8).sample(&g, true).unwrap();
        let cut = make_cutoff(0.1, 0.2, &g).unwrap();
        let h = 4.0 * g.dx();
        assert!(commutator_identity_defect(&op, &cut, &v, h).unwrap() < 1e-12);
        let b1 = commutator_bound_ratio(&op, &cut, &v, h, 2.0).unwrap();
        let b5 = commutator_bound_ratio(&op, &cut, &v.scaled(5.0), h, 2.0).unwrap();
        assert!(((b1.ratio - b5.ratio) / b1.ratio).abs() < 1e-10);
        assert!(b1.holds(), "{b1:?}");
    }
}
