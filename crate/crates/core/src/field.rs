//! Scalar field specifications for right-hand sides and diffusivities.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::read_xu_csv;

/// A real function of one variable, described the way the CLI accepts it.
#[derive(Clone)]
pub enum Field {
    Const(f64),
    /// `(1 − (x/a)²)²` on `Ω`, zero outside.
    Bump,
    /// `|x|` on the closed `Ω̄`, zero outside.
    Abs,
    /// Piecewise-linear interpolation of tabulated `(x, u)` pairs, zero
    /// outside the table.
    Table {
        xs: Vec<f64>,
        us: Vec<f64>,
    },
    Func(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Scaled(f64, Box<Field>),
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Const(c) => write!(f, "const:{c}"),
            Field::Bump => write!(f, "bump"),
            Field::Abs => write!(f, "abs"),
            Field::Table { xs, .. } => write!(f, "table[{}]", xs.len()),
            Field::Func(_) => write!(f, "func"),
            Field::Scaled(c, inner) => write!(f, "{c}*{inner:?}"),
        }
    }
}

impl Field {
    pub fn func(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Field::Func(Arc::new(f))
    }

    /// Parses `const:<v>`, `bump`, `abs` or `file:<path>` (an `x,u` CSV).
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        match spec {
            "bump" => return Ok(Field::Bump),
            "abs" => return Ok(Field::Abs),
            _ => {}
        }
        if let Some(v) = spec.strip_prefix("const:") {
            return v
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|c| c.is_finite())
                .map(Field::Const)
                .ok_or_else(|| Error::Parameter(format!("bad constant in `{spec}`")));
        }
        if let Some(path) = spec.strip_prefix("file:") {
            return Self::from_file(path);
        }
        Err(Error::Parameter(format!(
            "unknown field `{spec}` (expected const:<v>, bump, abs or file:<path>)"
        )))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.as_ref().display())))?;
        let (xs, us) = read_xu_csv(std::io::BufReader::new(file))?;
        if xs.len() < 2 || xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input(
                "tabulated field needs at least two rows with increasing x".into(),
            ));
        }
        Ok(Field::Table { xs, us })
    }

    /// Value at `x` for a domain of half-width `a`.
    pub fn eval(&self, x: f64, a: f64) -> f64 {
        match self {
            Field::Const(c) => *c,
            Field::Bump => {
                let t = 1.0 - (x / a) * (x / a);
                if t > 0.0 {
                    t * t
                } else {
                    0.0
                }
            }
            Field::Abs => {
                if x.abs() <= a {
                    x.abs()
                } else {
                    0.0
                }
            }
            Field::Table { xs, us } => {
                if x < xs[0] || x > xs[xs.len() - 1] {
                    return 0.0;
                }
                let i = xs.partition_point(|&t| t <= x).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[i - 1], xs[i]);
                let w = (x - x0) / (x1 - x0);
                us[i - 1] * (1.0 - w) + us[i] * w
            }
            Field::Func(f) => f(x),
            Field::Scaled(c, inner) => c * inner.eval(x, a),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            Field::Const(c) => *c == 0.0,
            Field::Table { us, .. } => us.iter().all(|&u| u == 0.0),
            Field::Scaled(c, inner) => *c == 0.0 || inner.is_identically_zero(),
            _ => false,
        }
    }

    /// `c · self`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Field::Const(v) => Field::Const(c * v),
            Field::Scaled(k, inner) => Field::Scaled(c * k, inner.clone()),
            other => Field::Scaled(c, Box::new(other.clone())),
        }
    }
}
