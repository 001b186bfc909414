//! Verification suites behind `fraclap-lab verify`.
//!
//! Suites that only exercise the operators run on fixed desk-scale grids.
//! Suites that solve (`homogeneity`, `diffusivity`) use the configured
//! `p`, `s` and grid; `closedform` and `modulus` pin their own problem.

use std::io::Write;

use crate::besov::{fit_exponent, second_difference_norm, BesovProbe};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::fracops::{duality_defect, pointwise_bound_ratio, FracGradOperator};
use crate::grid::{inner_region, sample, DiscreteFunction, Grid};
use crate::profile::QuinticBump;
use crate::solver::{
    energy_gradient, energy_regularized, regularity_modulus, solve_dirichlet, solve_linear_p2,
    solve_problem, stability_check, weak_residual, Diffusivity, Problem, ProblemSpec,
};
use crate::translations::{commutator_bound_ratio, commutator_identity_defect, make_cutoff};

use super::config::RunConfig;

pub const SUITES: &[&str] = &[
    "duality",
    "parity",
    "commutator",
    "pointwise",
    "gradient",
    "homogeneity",
    "diffusivity",
    "modulus",
    "closedform",
    "besov",
];

const ORDERS: [f64; 3] = [0.25, 0.5, 0.75];

/// One measured quantity and its acceptance bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ limit`.
    pub fn at_most(suite: &str, name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            suite: suite.into(),
            name: name.into(),
            value,
            limit,
            pass: value <= limit,
        }
    }
}

/// Resolves `all` and rejects unknown names, keeping the given order.
pub fn expand(selectors: &[String]) -> Result<Vec<&'static str>> {
    if selectors.is_empty() {
        return Err(Error::Parameter("suite selector is empty".into()));
    }
    let mut out: Vec<&'static str> = Vec::new();
    for sel in selectors {
        let names: Vec<&'static str> = if sel == "all" {
            SUITES.to_vec()
        } else {
            let name = SUITES
                .iter()
                .find(|&&n| n == sel)
                .ok_or_else(|| Error::Parameter(format!("unknown suite `{sel}`")))?;
            vec![*name]
        };
        for n in names {
            if !out.contains(&n) {
                out.push(n);
            }
        }
    }
    Ok(out)
}

pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<Vec<Check>> {
    match name {
        "duality" => duality(),
        "parity" => parity(),
        "commutator" => commutator(),
        "pointwise" => pointwise(),
        "gradient" => gradient(),
        "homogeneity" => homogeneity(cfg),
        "diffusivity" => diffusivity(cfg),
        "modulus" => modulus(),
        "closedform" => closed_form(),
        "besov" => besov(),
        other => Err(Error::Parameter(format!("unknown suite `{other}`"))),
    }
}

pub fn write_checks_csv(checks: &[Check], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "suite,check,value,limit,pass")?;
    for c in checks {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e},{}",
            c.suite, c.name, c.value, c.limit, c.pass
        )?;
    }
    Ok(())
}

fn duality() -> Result<Vec<Check>> {
    let grid = Grid::new(8.0, 1.0, 512)?;
    let phi = QuinticBump::new(0.1, 0.5).sample(&grid, true)?;
    let field = QuinticBump::new(-0.2, 0.6).sample(&grid, false)?;
    ORDERS
        .iter()
        .map(|&s| {
            let d = duality_defect(&grid, s, &phi, field.values())?;
            Ok(Check::at_most("duality", format!("s={s}"), d.defect, 1e-6))
        })
        .collect()
}

fn parity() -> Result<Vec<Check>> {
    let grid = Grid::new(8.0, 1.0, 512)?;
    let bump = QuinticBump::new(0.0, 0.8);
    let odd = sample(|x| x * bump.value(x), &grid, true)?;
    let n = grid.n_cells();
    ORDERS
        .iter()
        .map(|&s| {
            let g = FracGradOperator::assemble(&grid, s)?.apply(&odd)?;
            let scale = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let asym = (0..=n).fold(0.0_f64, |m, k| m.max((g[k] - g[n - k]).abs()));
            Ok(Check::at_most(
                "parity",
                format!("s={s}"),
                asym / scale,
                1e-10,
            ))
        })
        .collect()
}

fn commutator() -> Result<Vec<Check>> {
    let grid = Grid::new(4.0, 1.0, 512)?;
    let v = QuinticBump::new(0.05, 0.8).sample(&grid, true)?;
    let cutoff = make_cutoff(0.1, 0.25, &grid)?;
    let mut out = Vec::new();
    for &s in &ORDERS {
        let op = FracGradOperator::assemble(&grid, s)?;
        for m in [2.0, 8.0, 32.0] {
            let h = m * grid.dx();
            let d = commutator_identity_defect(&op, &cutoff, &v, h)?;
            out.push(Check::at_most(
                "commutator",
                format!("identity s={s} h={m}dx"),
                d,
                1e-10,
            ));
        }
        for p in [1.5, 2.0, 3.0] {
            // Worst ratio over the steps, against the explicit constant.
            let mut worst = 0.0_f64;
            let mut constant = 0.0;
            for m in [2.0, 8.0, 32.0] {
                let b = commutator_bound_ratio(&op, &cutoff, &v, m * grid.dx(), p)?;
                worst = worst.max(b.ratio);
                constant = b.constant;
            }
            out.push(Check::at_most(
                "commutator",
                format!("bound s={s} p={p}"),
                worst,
                constant,
            ));
        }
    }
    Ok(out)
}

/// Largest pointwise-bound constant over the bump family at one resolution.
pub fn pointwise_constant(grid: &Grid, s: f64) -> Result<f64> {
    let op = FracGradOperator::assemble(grid, s)?;
    let mut worst = 0.0_f64;
    for center in [0.0, 0.3, -0.4] {
        for radius in [0.2, 0.5] {
            let b = QuinticBump::new(center, radius);
            let phi = b.sample(grid, false)?;
            worst = worst.max(pointwise_bound_ratio(
                &op,
                &phi,
                b.sup_norm(),
                b.lipschitz(),
            )?);
        }
    }
    Ok(worst)
}

fn pointwise() -> Result<Vec<Check>> {
    let coarse = Grid::new(8.0, 1.0, 512)?;
    let fine = Grid::new(8.0, 1.0, 1024)?;
    let mut out = Vec::new();
    for &s in &ORDERS {
        let a = pointwise_constant(&coarse, s)?;
        let b = pointwise_constant(&fine, s)?;
        let change = if a > 0.0 && b > 0.0 {
            (a / b).max(b / a)
        } else {
            f64::INFINITY
        };
        out.push(Check::at_most(
            "pointwise",
            format!("change s={s} C={b:.4}"),
            change,
            2.0,
        ));
    }
    Ok(out)
}

/// Worst relative gap between `⟨∇J_ε(v), d⟩` and a central difference quotient.
pub fn gradient_gap(problem: &Problem, v: &DiscreteFunction, eps: f64) -> Result<f64> {
    let grid = *problem.grid();
    let directions = [
        QuinticBump::new(-0.2, 0.4).sample(&grid, true)?,
        sample(|x| (3.0 * x).sin() * (1.0 - x * x).max(0.0), &grid, true)?,
    ];
    let grad = energy_gradient(v, problem, eps)?;
    let mut worst = 0.0_f64;
    for d in &directions {
        let exact: f64 = grad.iter().zip(d.values()).map(|(a, b)| a * b).sum();
        // Fourth-order central stencil.
        let t = 1e-3;
        let j = |c: f64| energy_regularized(&v.axpy(c * t, d)?, problem, eps);
        let fd = (8.0 * (j(1.0)? - j(-1.0)?) - (j(2.0)? - j(-2.0)?)) / (12.0 * t);
        worst = worst.max((fd - exact).abs() / exact.abs());
    }
    Ok(worst)
}

fn gradient() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        let spec = ProblemSpec::new(p, 0.5, Field::Const(1.0)).with_grid(4.0, 1.0, 128);
        let problem = Problem::new(spec.clone())?;
        let v = sample(
            |x| QuinticBump::new(0.1, 0.6).value(x) + 0.3 * (1.0 - x * x).max(0.0),
            problem.grid(),
            true,
        )?;
        let levels = if p >= 2.0 {
            vec![0.0]
        } else {
            spec.options.eps_schedule.clone()
        };
        for eps in levels {
            let gap = gradient_gap(&problem, &v, eps)?;
            out.push(Check::at_most(
                "gradient",
                format!("p={p} eps={eps:e}"),
                gap,
                1e-6,
            ));
        }
    }
    Ok(out)
}

/// The scaling used for the homogeneity check at `p`.
pub fn homogeneity_scaling(p: f64) -> f64 {
    if p == 3.0 {
        8.0
    } else if p < 2.0 {
        4.0
    } else {
        10.0
    }
}

fn max_rel_gap(u: &DiscreteFunction, v: &DiscreteFunction, scale: f64) -> Result<f64> {
    let diff = u.axpy(-scale, v)?.max_abs();
    Ok(diff / (scale.abs() * v.max_abs()))
}

fn homogeneity(cfg: &RunConfig) -> Result<Vec<Check>> {
    let spec = cfg.problem_spec()?;
    let p = spec.p;
    let lambda = homogeneity_scaling(p);
    let rows = stability_check(&spec, &[1.0, lambda])?;
    let row = rows[1];
    let base = solve_dirichlet(&spec)?;
    let scaled = solve_dirichlet(&spec.clone().with_rhs(spec.rhs.scaled(lambda)))?;
    let expected = lambda.powf(1.0 / (p - 1.0));
    Ok(vec![
        Check::at_most(
            "homogeneity",
            format!("norm ratio p={p} lambda={lambda} ratio={:.6}", row.ratio),
            ((row.ratio - row.expected) / row.expected).abs(),
            1e-3,
        ),
        Check::at_most(
            "homogeneity",
            format!("solution p={p} lambda={lambda}"),
            max_rel_gap(&scaled.u, &base.u, expected)?,
            1e-3,
        ),
    ])
}

/// `A(x) = 1.5 + 0.5 sin(πx/2)`, Lipschitz with bounds `[1, 2]`.
pub fn varying_diffusivity() -> Diffusivity {
    Diffusivity {
        field: Field::func(|x| 1.5 + 0.5 * (0.5 * std::f64::consts::PI * x).sin()),
        a_min: 1.0,
        a_max: 2.0,
    }
}

fn diffusivity(cfg: &RunConfig) -> Result<Vec<Check>> {
    let spec = cfg.problem_spec()?;
    let p = spec.p;
    let c = 2.0;
    let unit = solve_dirichlet(&spec.clone().with_diffusivity(Diffusivity::constant(1.0)))?;
    let scaled = solve_dirichlet(&spec.clone().with_diffusivity(Diffusivity::constant(c)))?;
    let gap = max_rel_gap(&scaled.u, &unit.u, c.powf(-1.0 / (p - 1.0)))?;
    let varying = Problem::new(spec.clone().with_diffusivity(varying_diffusivity()))?;
    let sol = solve_problem(&varying)?;
    let residual = weak_residual(&sol.u, &varying)?;
    Ok(vec![
        Check::at_most(
            "diffusivity",
            format!("constant reduction p={p} c={c}"),
            gap,
            1e-3,
        ),
        Check::at_most(
            "diffusivity",
            format!("variable weak residual p={p}"),
            residual,
            1e-6,
        ),
    ])
}

fn modulus() -> Result<Vec<Check>> {
    let mut values = Vec::new();
    for n in [1024, 2048] {
        let spec = ProblemSpec::new(2.0, 0.5, Field::Const(1.0)).with_grid(8.0, 1.0, n);
        let problem = Problem::new(spec)?;
        let u = solve_problem(&problem)?.u;
        let zero = DiscreteFunction::zeros(*problem.grid());
        let mut row = Vec::new();
        for (x0, rho) in [(0.0, 0.25), (-1.0, 0.25)] {
            row.push((
                regularity_modulus(&u, &problem, x0, rho, 1.0)?,
                regularity_modulus(&zero, &problem, x0, rho, 1.0)?,
            ));
        }
        values.push(row);
    }
    let mut out = Vec::new();
    for (i, label) in ["interior", "boundary"].iter().enumerate() {
        let (a, za) = values[0][i];
        let (b, zb) = values[1][i];
        let change = if a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 {
            (a / b).max(b / a)
        } else {
            f64::INFINITY
        };
        out.push(Check::at_most(
            "modulus",
            format!("{label} change omega={b:.4}"),
            change,
            2.0,
        ));
        out.push(Check::at_most(
            "modulus",
            format!("{label} zero"),
            za.max(zb),
            0.0,
        ));
    }
    Ok(out)
}

fn closed_form() -> Result<Vec<Check>> {
    let spec = ProblemSpec::new(2.0, 0.5, Field::Const(1.0)).with_grid(8.0, 1.0, 2048);
    let problem = Problem::new(spec)?;
    let sol = solve_problem(&problem)?;
    let grid = *problem.grid();
    let region = inner_region(&grid, 2.0 * grid.dx())?;
    let err = region
        .indices()
        .map(|j| (sol.u.values()[j] - (1.0 - grid.x(j).powi(2)).sqrt()).abs())
        .fold(0.0, f64::max);
    let direct = solve_linear_p2(&problem)?;
    let gap = sol.u.axpy(-1.0, &direct)?.max_abs() / direct.max_abs();
    Ok(vec![
        Check::at_most("closedform", "max error vs sqrt(1-x^2)", err, 0.02),
        Check::at_most("closedform", "descent vs direct solve", gap, 1e-8),
    ])
}

fn besov() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut worst = 0.0_f64;
    for sigma in [0.5, 1.0, 1.25, 1.75] {
        let samples = (4..=8)
            .map(|k| {
                let h = 2f64.powi(-k);
                (h, 0.7 * h.powf(sigma))
            })
            .collect();
        let fit = fit_exponent(&BesovProbe::from_samples(2.0, samples, 1.0))?;
        worst = worst.max((fit.slope - sigma).abs());
    }
    out.push(Check::at_most("besov", "synthetic power law", worst, 1e-12));

    let grid = Grid::new(2.0, 1.0, 2048)?;
    let abs = sample(|x| if x.abs() <= 1.0 { x.abs() } else { 0.0 }, &grid, false)?;
    let fit = BesovProbe::measure(&abs, 2.0, 2f64.powi(-8), 2f64.powi(-4))?
        .fitted()?
        .fit
        .expect("fitted probe");
    out.push(Check::at_most(
        "besov",
        format!("abs slope={:.4}", fit.slope),
        (fit.slope - 1.5).abs(),
        0.05,
    ));

    let square = sample(|x| if x.abs() <= 1.0 { x * x } else { 0.0 }, &grid, false)?;
    let mut gap = 0.0_f64;
    for h in [0.0625, 0.125, 0.25] {
        let d = second_difference_norm(&square, 2.0, h)?;
        let exact = 2.0 * h * h * (2.0 * (1.0 - h)).sqrt();
        gap = gap.max(((d - exact) / exact).abs());
    }
    out.push(Check::at_most(
        "besov",
        "square second difference",
        gap,
        0.02,
    ));
    Ok(out)
}
