//! Gain functions `g : [0, 1] -> [0, inf)`.
//!
//! Three families are supported, matching the command-line syntax:
//!
//! ```text
//! poly:c0,c1,...          c0 + c1 x + c2 x^2 + ...
//! sin:a,b,c,d             a + b sin(c pi x + d)
//! pwl:x0:y0,x1:y1,...     piecewise linear through the knots (x0 = 0, last x = 1)
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GainKind {
    Polynomial { coeffs: Vec<f64> },
    Sinusoid { a: f64, b: f64, c: f64, d: f64 },
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSpec {
    kind: GainKind,
}

impl GainSpec {
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("polynomial needs at least one finite coefficient".into()));
        }
        Ok(Self { kind: GainKind::Polynomial { coeffs } })
    }

    /// `a + b sin(c pi x + d)`.
    pub fn sinusoid(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("sinusoid parameters must be finite".into()));
        }
        Ok(Self { kind: GainKind::Sinusoid { a, b, c, d } })
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidArgument("piecewise linear gain needs >= 2 knots".into()));
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidArgument("knots must be finite".into()));
        }
        if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
            return Err(Error::InvalidArgument("knots must start at x = 0 and end at x = 1".into()));
        }
        if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidArgument("knot positions must be strictly increasing".into()));
        }
        Ok(Self { kind: GainKind::PiecewiseLinear { knots } })
    }

    pub fn kind(&self) -> &GainKind {
        &self.kind
    }

    pub fn value(&self, x: f64) -> f64 {
        match &self.kind {
            GainKind::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            GainKind::Sinusoid { a, b, c, d } => a + b * (c * PI * x + d).sin(),
            GainKind::PiecewiseLinear { knots } => {
                let x = x.clamp(0.0, 1.0);
                let k = knots.partition_point(|&(kx, _)| kx <= x);
                if k == 0 {
                    return knots[0].1;
                }
                if k == knots.len() {
                    return knots[k - 1].1;
                }
                let (x0, y0) = knots[k - 1];
                let (x1, y1) = knots[k];
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// Whether an analytic derivative is available everywhere on `[0, 1]`.
    pub fn derivative_available(&self) -> bool {
        !matches!(self.kind, GainKind::PiecewiseLinear { .. })
    }

    pub fn derivative(&self, x: f64) -> Option<f64> {
        match &self.kind {
            GainKind::Polynomial { coeffs } => {
                Some(coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, c)| acc * x + k as f64 * c))
            }
            GainKind::Sinusoid { b, c, d, .. } => Some(b * c * PI * (c * PI * x + d).cos()),
            GainKind::PiecewiseLinear { .. } => None,
        }
    }

    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        grid.sample(|x| self.value(x))
    }

    /// Fails with [`Error::NegativeGain`] at the first grid point where `g < 0`.
    pub fn check_nonnegative(&self, grid: &Grid) -> Result<()> {
        for &x in grid.points() {
            let v = self.value(x);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NegativeGain { x, value: v });
            }
        }
        Ok(())
    }

    /// `max g` over `[0, 1]`: the grid maximum, polished by golden-section
    /// search on the neighbouring cells when `g` is differentiable.
    pub fn max_value(&self, grid: &Grid) -> f64 {
        let xs = grid.points();
        let (imax, gmax) = xs
            .iter()
            .map(|&x| self.value(x))
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
        if !self.derivative_available() {
            return gmax;
        }
        let lo = xs[imax.saturating_sub(1)];
        let hi = xs[(imax + 1).min(xs.len() - 1)];
        let polished = golden_max(|x| self.value(x), lo, hi, 80);
        gmax.max(polished)
    }

    /// Largest absolute difference quotient between neighbouring grid points.
    pub fn grid_lipschitz(&self, grid: &Grid) -> f64 {
        let gs = self.sample(grid);
        let h = grid.spacing();
        gs.windows(2).map(|w| (w[1] - w[0]).abs() / h).fold(0.0, f64::max)
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

fn parse_numbers(token: &str, body: &str) -> Result<Vec<f64>> {
    body.split(',')
        .map(|s| {
            s.trim().parse::<f64>().map_err(|_| Error::MalformedGain {
                token: token.to_string(),
                reason: format!("`{s}` is not a number"),
            })
        })
        .collect()
}

impl FromStr for GainSpec {
    type Err = Error;

    fn from_str(token: &str) -> Result<Self> {
        let malformed = |reason: &str| Error::MalformedGain { token: token.to_string(), reason: reason.to_string() };
        let (family, body) = token.split_once(':').ok_or_else(|| malformed("expected `family:params`"))?;
        let rewrap = |e: Error| match e {
            Error::InvalidArgument(reason) => Error::MalformedGain { token: token.to_string(), reason },
            other => other,
        };
        match family {
            "poly" => GainSpec::polynomial(parse_numbers(token, body)?).map_err(rewrap),
            "sin" => {
                let p = parse_numbers(token, body)?;
                if p.len() != 4 {
                    return Err(malformed("sin expects exactly 4 parameters a,b,c,d"));
                }
                GainSpec::sinusoid(p[0], p[1], p[2], p[3]).map_err(rewrap)
            }
            "pwl" => {
                let knots = body
                    .split(',')
                    .map(|pair| {
                        let (x, y) =
                            pair.split_once(':').ok_or_else(|| malformed(&format!("knot `{pair}` is not x:y")))?;
                        let x = x.trim().parse::<f64>();
                        let y = y.trim().parse::<f64>();
                        match (x, y) {
                            (Ok(x), Ok(y)) => Ok((x, y)),
                            _ => Err(malformed(&format!("knot `{pair}` is not numeric"))),
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                GainSpec::piecewise_linear(knots).map_err(rewrap)
            }
            _ => Err(malformed(&format!("unknown gain family `{family}`"))),
        }
    }
}

impl fmt::Display for GainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        match &self.kind {
            GainKind::Polynomial { coeffs } => write!(f, "poly:{}", join(coeffs)),
            GainKind::Sinusoid { a, b, c, d } => write!(f, "sin:{a},{b},{c},{d}"),
            GainKind::PiecewiseLinear { knots } => {
                let s: Vec<String> = knots.iter().map(|(x, y)| format!("{x}:{y}")).collect();
                write!(f, "pwl:{}", s.join(","))
            }
        }
    }
}
