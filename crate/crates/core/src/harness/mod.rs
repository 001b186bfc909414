//! Command-line plumbing: configuration, verification suites, exponent sweeps.
//!
//! Every `run_*` entry point writes its CSV to the sink it is given and
//! returns the typed result, so the binary only decides where bytes go and
//! which exit code to use.

pub mod config;
pub mod suites;
pub mod sweep;

use std::io::Write;

use crate::besov::BesovProbe;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::fracops::check_order;
use crate::grid::sample;
use crate::solver::{solve_dirichlet, Problem, Solution};

pub use config::{parse_diffusivity, Command, RunConfig, Settings};
pub use suites::{run_suite, Check, SUITES};
pub use sweep::{run_sweep_pairs, sweep_pairs, write_report_csv, ReportRow};

/// Besov exponent guaranteed for the solution with data in `L^∞`:
/// `s + min(1/p, s/(p−1))` for `p ≥ 2` and `s + min(1/2, s)` for `1 < p < 2`.
pub fn predicted_exponent(p: f64, s: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("p must be > 1, got {p}")));
    }
    check_order(s)?;
    Ok(if p >= 2.0 {
        s + (1.0 / p).min(s / (p - 1.0))
    } else {
        s + 0.5_f64.min(s)
    })
}

/// Solves the configured problem and writes the solution CSV.
pub fn run_solve(cfg: &RunConfig, out: &mut impl Write) -> Result<Solution> {
    let spec = cfg.problem_spec()?;
    let problem = Problem::new(spec.clone())?;
    if let Some(path) = &cfg.dump_operator {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        problem.operator().write_dump_csv(&mut f)?;
        f.flush()?;
    }
    let sol = crate::solver::solve_problem(&problem)?;
    sol.write_csv(&spec, out)?;
    Ok(sol)
}

/// Probes `D(h)` of the configured input and writes the probe CSV.
///
/// `input = solve` measures the solution of the configured problem; any
/// other value is read as a field (`abs`, `bump`, `const:<v>`,
/// `file:<path>`) and sampled on the configured grid.
pub fn run_measure(cfg: &RunConfig, out: &mut impl Write) -> Result<BesovProbe> {
    let (h_min, h_max) = cfg.probe_window();
    let v = if cfg.input == "solve" {
        solve_dirichlet(&cfg.problem_spec()?)?.u
    } else {
        let field = Field::parse(&cfg.input)?;
        let grid =
            crate::grid::Grid::new(cfg.window_half_width, cfg.domain_half_width, cfg.n_cells)?;
        let a = grid.domain_half_width();
        sample(|x| field.eval(x, a), &grid, false)?
    };
    let mut probe = BesovProbe::measure(&v, cfg.p, h_min, h_max)?;
    if cfg.input == "solve" {
        probe.predicted = Some(predicted_exponent(cfg.p, cfg.s)?);
    }
    let fit = crate::besov::fit_exponent(&probe);
    if let Ok(f) = fit {
        probe.fit = Some(f);
    }
    probe.write_csv(out)?;
    fit?;
    Ok(probe)
}

/// Runs the selected suites and writes `suite,check,value,limit,pass`.
pub fn run_verify(cfg: &RunConfig, out: &mut impl Write) -> Result<Vec<Check>> {
    let names = suites::expand(&cfg.suites)?;
    let mut checks = Vec::new();
    for name in names {
        checks.extend(run_suite(name, cfg)?);
    }
    suites::write_checks_csv(&checks, out)?;
    Ok(checks)
}

/// Solves and probes every `(p, s)` of `p-list × s-list`.
pub fn run_sweep(cfg: &RunConfig, out: &mut impl Write) -> Result<Vec<ReportRow>> {
    let pairs = sweep_pairs(cfg)?;
    let rows = run_sweep_pairs(cfg, &pairs)?;
    write_report_csv(cfg, &rows, out)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicted_exponent_values() {
        assert!((predicted_exponent(2.0, 0.75).unwrap() - 1.25).abs() < 1e-15);
        assert!((predicted_exponent(3.0, 0.3).unwrap() - 0.45).abs() < 1e-15);
        assert!((predicted_exponent(1.5, 0.3).unwrap() - 0.6).abs() < 1e-15);
        assert!(predicted_exponent(1.0, 0.5).is_err());
        assert!(predicted_exponent(2.0, 1.0).is_err());
    }

    #[test]
    fn predicted_exponent_is_continuous_and_monotone() {
        for &p in &[1.2, 1.5, 1.9, 2.0, 2.5, 3.0, 5.0] {
            let knee = if p >= 2.0 { 1.0 - 1.0 / p } else { 0.5 };
            let lo = predicted_exponent(p, knee - 1e-9).unwrap();
            let hi = predicted_exponent(p, knee + 1e-9).unwrap();
            assert!((hi - lo).abs() < 1e-8, "p={p}");
            let mut prev = 0.0;
            for i in 1..100 {
                let e = predicted_exponent(p, i as f64 / 100.0).unwrap();
                assert!(e >= prev);
                prev = e;
            }
        }
    }
}
