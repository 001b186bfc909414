use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use fraclap_core::harness::{self, Command, RunConfig, Settings};
use fraclap_core::Result;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Solve,
    Measure,
    Verify,
    Sweep,
}

/// Fractional p-Laplacian laboratory: solve, probe Besov exponents, verify.
///
/// Exit codes: 0 success, 1 parameter error, 2 convergence error,
/// 3 measurement error (including failed checks).
#[derive(Debug, Parser)]
#[command(name = "fraclap-lab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// key=value file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    s: Option<String>,
    /// const:<v> | bump | file:<path>
    #[arg(long)]
    rhs: Option<String>,
    /// const:<v> | file:<path>
    #[arg(long)]
    diffusivity: Option<String>,
    /// Number of cells of the window grid.
    #[arg(long)]
    n: Option<String>,
    /// Window half-width.
    #[arg(long = "L")]
    window: Option<String>,
    /// Domain half-width.
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated suites, or `all`.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long = "p-list")]
    p_list: Option<String>,
    #[arg(long = "s-list")]
    s_list: Option<String>,
    #[arg(long)]
    hmin: Option<String>,
    #[arg(long)]
    hmax: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Function probed by `measure`: `solve` or a field (abs, bump, const:<v>, file:<path>).
    #[arg(long)]
    input: Option<String>,
    /// midpoints | nodes
    #[arg(long)]
    collocation: Option<String>,
    #[arg(long = "max-iter")]
    max_iter: Option<String>,
    /// Writes the assembled operator as row,col,value (n ≤ 64).
    #[arg(long = "dump-operator")]
    dump_operator: Option<String>,
}

impl Cli {
    fn settings(&self) -> Result<Settings> {
        let mut s = Settings::new();
        let pairs = [
            ("p", &self.p),
            ("s", &self.s),
            ("rhs", &self.rhs),
            ("diffusivity", &self.diffusivity),
            ("n", &self.n),
            ("L", &self.window),
            ("a", &self.a),
            ("tol", &self.tol),
            ("out", &self.out),
            ("suite", &self.suite),
            ("p-list", &self.p_list),
            ("s-list", &self.s_list),
            ("hmin", &self.hmin),
            ("hmax", &self.hmax),
            ("workers", &self.workers),
            ("input", &self.input),
            ("collocation", &self.collocation),
            ("max-iter", &self.max_iter),
            ("dump-operator", &self.dump_operator),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                s.set(k, v)?;
            }
        }
        Ok(s)
    }

    fn command(&self) -> Command {
        match self.command {
            Cmd::Solve => Command::Solve,
            Cmd::Measure => Command::Measure,
            Cmd::Verify => Command::Verify,
            Cmd::Sweep => Command::Sweep,
        }
    }
}

fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: &Cli) -> Result<i32> {
    let file = match &cli.config {
        Some(path) => Settings::from_file(path)?,
        None => Settings::new(),
    };
    let cfg = RunConfig::from_settings(cli.command(), &file.merged(&cli.settings()?))?;
    let mut out = sink(&cfg)?;
    let code = match cfg.command {
        Command::Solve => {
            let sol = harness::run_solve(&cfg, &mut out)?;
            eprintln!(
                "converged: iterations {}, energy {:.10e}, weak residual {:.3e}",
                sol.iterations, sol.energy, sol.weak_residual
            );
            0
        }
        Command::Measure => {
            let probe = harness::run_measure(&cfg, &mut out)?;
            if let Some(fit) = probe.fit {
                eprint!(
                    "slope {:.4} (residual {:.3e}, {} points)",
                    fit.slope, fit.residual, fit.points
                );
                match probe.predicted {
                    Some(e) => eprintln!(", predicted {e:.4}"),
                    None => eprintln!(),
                }
            }
            0
        }
        Command::Verify => {
            let checks = harness::run_verify(&cfg, &mut out)?;
            let failed: Vec<_> = checks.iter().filter(|c| !c.pass).collect();
            for c in &failed {
                eprintln!("FAIL {} {}: {:e} > {:e}", c.suite, c.name, c.value, c.limit);
            }
            eprintln!("{} checks, {} failed", checks.len(), failed.len());
            if failed.is_empty() {
                0
            } else {
                3
            }
        }
        Command::Sweep => {
            let rows = harness::run_sweep(&cfg, &mut out)?;
            for r in &rows {
                eprintln!(
                    "p={} s={} predicted {:.4} measured {:.4} {}{}",
                    r.p,
                    r.s,
                    r.predicted,
                    r.measured,
                    if r.pass { "pass" } else { "FAIL" },
                    r.error
                        .as_deref()
                        .map(|e| format!(" ({e})"))
                        .unwrap_or_default()
                );
            }
            if rows.iter().all(|r| r.pass) {
                0
            } else {
                3
            }
        }
    };
    out.flush()?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are parameter errors; help and version succeed.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
