//! Oracles shared by the integration tests. Nothing here calls into the
//! library's numerical kernels: quadrature, Γ and μ are computed from
//! scratch, the dense solve comes from `nalgebra`.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 30)
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // Stop at the tolerance or once the refinement is lost in rounding.
    if depth == 0 || delta.abs() <= 15.0 * tol || delta.abs() <= 1e-14 * (left + right).abs() {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Sums [`integrate`] over consecutive breakpoints.
pub fn integrate_pieces(f: &dyn Fn(f64) -> f64, breaks: &[f64], tol: f64) -> f64 {
    let per = tol / breaks.len().max(1) as f64;
    breaks
        .windows(2)
        .map(|w| integrate(f, w[0], w[1], per))
        .sum()
}

/// Γ(x) for `x > 0`: shift into `[1, 2]` with `Γ(x) = Γ(x + 1)/x`, then
/// integrate `t^{y−1} e^{−t}` over `[0, 50]` (the tail is below 1e-20).
pub fn gamma(x: f64) -> f64 {
    assert!(x > 0.0, "oracle Γ needs x > 0");
    let (mut y, mut scale) = (x, 1.0);
    while y < 1.0 {
        scale /= y;
        y += 1.0;
    }
    while y > 2.0 {
        y -= 1.0;
        scale *= y;
    }
    let f = |t: f64| {
        if t == 0.0 {
            if y == 1.0 {
                1.0
            } else {
                0.0
            }
        } else {
            t.powf(y - 1.0) * (-t).exp()
        }
    };
    scale * integrate_pieces(&f, &[0.0, 1e-6, 1e-3, 0.1, 1.0, 5.0, 15.0, 50.0], 1e-14)
}

/// `μ(1, s) = 2^s Γ(1 + s/2) / (√π Γ((1−s)/2))`.
pub fn mu(s: f64) -> f64 {
    2f64.powf(s) * gamma(1.0 + 0.5 * s) / (PI.sqrt() * gamma(0.5 * (1.0 - s)))
}

/// Piecewise-linear interpolant through `(xs, us)`, zero outside.
pub struct Interpolant {
    pub xs: Vec<f64>,
    pub us: Vec<f64>,
}

impl Interpolant {
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] || x >= self.xs[n - 1] {
            return 0.0;
        }
        let i = self.xs.partition_point(|&t| t <= x).clamp(1, n - 1);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let w = (x - x0) / (x1 - x0);
        self.us[i - 1] * (1.0 - w) + self.us[i] * w
    }

    /// Nodes where the interpolant is not identically zero nearby.
    pub fn support(&self) -> (f64, f64) {
        let first = self.us.iter().position(|&u| u != 0.0).unwrap_or(0);
        let last = self.us.iter().rposition(|&u| u != 0.0).unwrap_or(0);
        (
            self.xs[first.saturating_sub(1)],
            self.xs[(last + 1).min(self.xs.len() - 1)],
        )
    }
}

/// `∇^s f(x) = μ ∫_0^∞ (f(x+r) − f(x−r)) r^{-1-s} dr` for `f` supported in
/// `[lo, hi]`, by quadrature in `t = r^{1−s}` (bounded integrand at the
/// origin), split wherever `x ± r` meets one of `kinks`.
pub fn frac_gradient_of(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    kinks: &[f64],
    x: f64,
    s: f64,
    tol: f64,
) -> f64 {
    let r_max = (x - lo).abs().max((hi - x).abs());
    let alpha = 1.0 - s;
    let mut rs: Vec<f64> = kinks
        .iter()
        .chain([lo, hi].iter())
        .map(|&xj| (xj - x).abs())
        .filter(|&r| r > 0.0 && r < r_max)
        .collect();
    rs.push(0.0);
    rs.push(r_max);
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    let ts: Vec<f64> = rs.iter().map(|r| r.powf(alpha)).collect();
    // In t the integrand is (f(x+r) − f(x−r)) / (α r). Dividing by the
    // separation actually represented in x ± r keeps tiny r free of rounding.
    let g = |t: f64| {
        let r = t.powf(1.0 / alpha).max(1e-9);
        let (xp, xm) = (x + r, x - r);
        (f(xp) - f(xm)) / (0.5 * (xp - xm)) / alpha
    };
    mu(s) * integrate_pieces(&g, &ts, tol)
}

/// [`frac_gradient_of`] for a nodal interpolant.
pub fn frac_gradient(v: &Interpolant, x: f64, s: f64, tol: f64) -> f64 {
    let (lo, hi) = v.support();
    let kinks: Vec<f64> =
        v.xs.iter()
            .copied()
            .filter(|&xj| xj > lo && xj < hi)
            .collect();
    frac_gradient_of(&|y| v.eval(y), lo, hi, &kinks, x, s, tol)
}

/// Solves `A x = b` by LU with partial pivoting (`nalgebra`).
pub fn lu_solve(a: nalgebra::DMatrix<f64>, b: Vec<f64>) -> Vec<f64> {
    a.lu()
        .solve(&nalgebra::DVector::from_vec(b))
        .expect("nonsingular system")
        .as_slice()
        .to_vec()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Relative max-norm distance `‖a − c b‖_∞ / ‖c b‖_∞`.
pub fn rel_max_gap(a: &[f64], b: &[f64], c: f64) -> f64 {
    let num = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - c * y).abs())
        .fold(0.0, f64::max);
    let den = b.iter().map(|y| (c * y).abs()).fold(0.0, f64::max);
    num / den
}
