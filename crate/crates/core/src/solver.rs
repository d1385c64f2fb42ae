//! Smooth-fit tangency search.
//!
//! A pair `(y, z)` is a tangency pair when `h = h^{y,z}_{g(y),g(z)}` meets `g`
//! smoothly at each interior endpoint:
//!
//! ```text
//! y (h'(y+) - g'(y)) = 0,    (1 - z) (h'(z-) - g'(z)) = 0.
//! ```
//!
//! Every such `h` is the value of a stopping rule, so it never exceeds `V`.
//! The walk in [`solve`] picks, at each continuation point, the largest of
//! them, which is `V` itself.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_forms::{ValueTable, TOL_STOP};
use crate::error::{Error, Result};
use crate::gain::GainSpec;
use crate::grid::Grid;
use crate::h_family::{h_deriv, h_eval, in_h, HParams, TOL_DOM};
use crate::majorant::{compute_majorant, MajorantOptions};
use crate::risk_mapping::{RiskKind, RiskMapping};

/// Acceptance threshold on the (scaled) tangency residuals.
pub const TOL_TAN: f64 = 1e-8;

/// Pairs closer than this are treated as degenerate.
const MIN_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencyPair {
    pub y: f64,
    pub z: f64,
    pub residual_left: f64,
    pub residual_right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub x_minus: f64,
    pub x_plus: f64,
    pub h_params: HParams,
}

impl Component {
    pub fn contains(&self, x: f64) -> bool {
        self.x_minus < x && x < self.x_plus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionMode {
    SmoothFit,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub value_table: ValueTable,
    pub components: Vec<Component>,
    pub mode: SolutionMode,
}

impl Solution {
    /// Wraps a closed-form table; components are read off its stopping mask.
    pub fn from_value_table(table: ValueTable) -> Self {
        let components = table
            .components()
            .into_iter()
            .map(|(lo, hi)| {
                let beta = table.g_values[table.grid.nearest_index(lo)];
                let gamma = table.g_values[table.grid.nearest_index(hi)];
                Component { x_minus: lo, x_plus: hi, h_params: HParams { y: lo, z: hi, beta, gamma } }
            })
            .collect();
        Self { value_table: table, components, mode: SolutionMode::ClosedForm }
    }

    pub fn value_at(&self, x: f64) -> f64 {
        self.value_table.value_at(x)
    }

    pub fn component_containing(&self, x: f64) -> Option<&Component> {
        self.components.iter().find(|c| c.contains(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Walk step; defaults to ten grid spacings.
    pub delta: Option<f64>,
    /// Cells per axis in the tangency scan.
    pub mesh: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { delta: None, mesh: 400 }
    }
}

fn pair_h(g: &GainSpec, y: f64, z: f64) -> HParams {
    HParams { y, z, beta: g.value(y), gamma: g.value(z) }
}

fn require_derivatives(rm: &RiskMapping, g: &GainSpec) -> Result<()> {
    if !rm.is_differentiable() {
        return Err(Error::DerivativeUnavailable(format!(
            "the {} mapping has no derivative in the exit probability",
            rm.name()
        )));
    }
    if !g.derivative_available() {
        return Err(Error::DerivativeUnavailable(format!("gain `{g}` has no analytic derivative")));
    }
    Ok(())
}

struct Residuals<'a> {
    rm: &'a RiskMapping,
    g: &'a GainSpec,
}

impl Residuals<'_> {
    fn g_prime(&self, x: f64) -> f64 {
        self.g.derivative(x).expect("checked by require_derivatives")
    }

    /// Unscaled slope mismatches `(h'(y+) - g'(y), h'(z-) - g'(z))`.
    fn raw(&self, y: f64, z: f64) -> (f64, f64) {
        let hp = pair_h(self.g, y, z);
        let dl = h_deriv(self.rm, &hp, y).unwrap_or(f64::NAN);
        let dr = h_deriv(self.rm, &hp, z).unwrap_or(f64::NAN);
        (dl - self.g_prime(y), dr - self.g_prime(z))
    }

    fn scaled(&self, y: f64, z: f64) -> (f64, f64) {
        let (a, b) = self.raw(y, z);
        (y * a, (1.0 - z) * b)
    }

    fn pair(&self, y: f64, z: f64) -> TangencyPair {
        let (l, r) = self.scaled(y, z);
        TangencyPair { y, z, residual_left: l, residual_right: r }
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots of `f` on `[a, b]` found by sign changes over `n` cells and refined by bisection.
fn roots_1d<F: Fn(f64) -> f64 + Sync>(f: F, a: f64, b: f64, n: usize) -> Vec<f64> {
    let ts: Vec<f64> = (0..=n).map(|k| a + (b - a) * k as f64 / n as f64).collect();
    let vs: Vec<f64> = ts.par_iter().map(|&t| f(t)).collect();
    let mut out = Vec::new();
    for k in 0..n {
        let (v0, v1) = (vs[k], vs[k + 1]);
        if !v0.is_finite() || !v1.is_finite() {
            continue;
        }
        if v0 == 0.0 {
            out.push(ts[k]);
        } else if (v0 < 0.0) != (v1 < 0.0) && v1 != 0.0 {
            out.push(bisect(&f, ts[k], ts[k + 1], 60));
        }
    }
    if vs[n] == 0.0 {
        out.push(ts[n]);
    }
    out
}

/// Damped Newton on the unscaled residuals from `(y, z)`.
fn newton_2d(res: &Residuals<'_>, mut y: f64, mut z: f64) -> Option<(f64, f64)> {
    let norm = |r: (f64, f64)| r.0.abs().max(r.1.abs());
    let valid = |y: f64, z: f64| y >= 0.0 && z <= 1.0 && z - y >= MIN_GAP;
    let mut r = res.raw(y, z);
    if !norm(r).is_finite() {
        return None;
    }
    for _ in 0..60 {
        if norm(r) < 1e-14 {
            break;
        }
        let s = 1e-7;
        let (ry_p, ry_m) = (res.raw(y + s, z), res.raw(y - s, z));
        let (rz_p, rz_m) = (res.raw(y, z + s), res.raw(y, z - s));
        let j11 = (ry_p.0 - ry_m.0) / (2.0 * s);
        let j21 = (ry_p.1 - ry_m.1) / (2.0 * s);
        let j12 = (rz_p.0 - rz_m.0) / (2.0 * s);
        let j22 = (rz_p.1 - rz_m.1) / (2.0 * s);
        let det = j11 * j22 - j12 * j21;
        if !det.is_finite() || det.abs() < 1e-300 {
            return None;
        }
        let dy = (j22 * r.0 - j12 * r.1) / det;
        let dz = (j11 * r.1 - j21 * r.0) / det;
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let (ny, nz) = (y - t * dy, z - t * dz);
            if valid(ny, nz) {
                let nr = res.raw(ny, nz);
                if norm(nr) < norm(r) {
                    y = ny;
                    z = nz;
                    r = nr;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    valid(y, z).then_some((y, z))
}

/// All tangency pairs found on a `mesh x mesh` scan of `0 <= y < z <= 1`.
pub fn find_tangency_pairs(rm: &RiskMapping, g: &GainSpec, mesh: usize) -> Result<Vec<TangencyPair>> {
    require_derivatives(rm, g)?;
    if mesh < 4 {
        return Err(Error::InvalidArgument(format!("mesh must be at least 4, got {mesh}")));
    }
    let res = Residuals { rm, g };
    let mut pairs = vec![res.pair(0.0, 1.0)];

    // y = 0 and z = 1: one condition holds identically
    let fine = 8 * mesh;
    for z in roots_1d(|z| res.raw(0.0, z).1, 1.0 / fine as f64, 1.0, fine) {
        pairs.push(res.pair(0.0, z));
    }
    for y in roots_1d(|y| res.raw(y, 1.0).0, 0.0, 1.0 - 1.0 / fine as f64, fine) {
        pairs.push(res.pair(y, 1.0));
    }

    // interior: cells where both residuals change sign
    let h = 1.0 / mesh as f64;
    let nodes: Vec<Vec<(f64, f64)>> = (0..=mesh)
        .into_par_iter()
        .map(|i| {
            (0..=mesh).map(|j| if j > i { res.raw(i as f64 * h, j as f64 * h) } else { (f64::NAN, f64::NAN) }).collect()
        })
        .collect();
    let straddles = |vals: [f64; 4]| {
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        lo <= 0.0 && hi >= 0.0
    };
    let cells: Vec<(usize, usize)> = (0..mesh)
        .flat_map(|i| ((i + 2)..mesh).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            let c = [nodes[i][j], nodes[i + 1][j], nodes[i][j + 1], nodes[i + 1][j + 1]];
            if c.iter().any(|v| !v.0.is_finite() || !v.1.is_finite()) {
                return false;
            }
            straddles([c[0].0, c[1].0, c[2].0, c[3].0]) && straddles([c[0].1, c[1].1, c[2].1, c[3].1])
        })
        .collect();
    let refined: Vec<TangencyPair> = cells
        .par_iter()
        .filter_map(|&(i, j)| newton_2d(&res, (i as f64 + 0.5) * h, (j as f64 + 0.5) * h))
        .map(|(y, z)| res.pair(y, z))
        .collect();
    pairs.extend(refined);

    pairs.retain(|p| p.residual_left.abs() <= TOL_TAN && p.residual_right.abs() <= TOL_TAN && p.z - p.y >= MIN_GAP);
    pairs.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.z.total_cmp(&b.z)));
    pairs.dedup_by(|a, b| (a.y - b.y).abs() < 1e-7 && (a.z - b.z).abs() < 1e-7);
    Ok(pairs)
}

/// Runs the walk over `[0, 1]` and assembles `V`.
pub fn solve(rm: &RiskMapping, g: &GainSpec, grid: &Grid, opts: &SolveOptions) -> Result<Solution> {
    if rm.kind() == RiskKind::WorstCase {
        return Err(Error::Unsupported(
            "smooth fit fails under the worst-case mapping; use closed_forms::worst_case_value".into(),
        ));
    }
    g.check_nonnegative(grid)?;
    let delta = opts.delta.unwrap_or(10.0 * grid.spacing());
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let pairs = find_tangency_pairs(rm, g, opts.mesh)?;
    let components = walk(rm, g, &pairs, delta)?;
    assemble(rm, g, grid, components)
}

fn walk(rm: &RiskMapping, g: &GainSpec, pairs: &[TangencyPair], delta: f64) -> Result<Vec<Component>> {
    let mut components: Vec<Component> = Vec::new();
    let mut x = 0.0;
    while x <= 1.0 {
        let gx = g.value(x);
        let values: Vec<(f64, &TangencyPair)> =
            pairs.iter().filter(|p| p.y <= x && x <= p.z).map(|p| (h_eval(rm, &pair_h(g, p.y, p.z), x), p)).collect();
        let big_g = values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
        if big_g > gx + TOL_STOP {
            let tie = 1e-9 * big_g.abs().max(1.0);
            let (x_minus, x_plus) = values.iter().filter(|v| v.0 >= big_g - tie).map(|v| (v.1.y, v.1.z)).fold(
                (f64::NEG_INFINITY, f64::INFINITY),
                |(lo, hi), (y, z)| {
                    // largest y first, then smallest z
                    if y > lo || (y == lo && z < hi) {
                        (y, z)
                    } else {
                        (lo, hi)
                    }
                },
            );
            if let Some(prev) = components.last() {
                if x_minus < prev.x_plus {
                    return Err(Error::AssumptionViolation(format!(
                        "components ({}, {}) and ({x_minus}, {x_plus}) overlap",
                        prev.x_minus, prev.x_plus
                    )));
                }
            }
            components.push(Component { x_minus, x_plus, h_params: pair_h(g, x_minus, x_plus) });
            x = x_plus;
        }
        x += delta;
    }
    Ok(components)
}

fn assemble(rm: &RiskMapping, g: &GainSpec, grid: &Grid, components: Vec<Component>) -> Result<Solution> {
    let xs = grid.points();
    let gs = g.sample(grid);
    let mut values = gs.clone();
    let mut stopping_mask = vec![true; xs.len()];
    for c in &components {
        for (i, &x) in xs.iter().enumerate() {
            if !c.contains(x) {
                continue;
            }
            let h = h_eval(rm, &c.h_params, x);
            if h < gs[i] - TOL_DOM {
                return Err(Error::AssumptionViolation(format!(
                    "h on component ({}, {}) falls below g at x = {x}: {h} < {}",
                    c.x_minus, c.x_plus, gs[i]
                )));
            }
            values[i] = h.max(gs[i]);
            stopping_mask[i] = false;
        }
    }
    let value_table = ValueTable { grid: grid.clone(), g_values: gs, values, stopping_mask };
    Ok(Solution { value_table, components, mode: SolutionMode::SmoothFit })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosthocReport {
    /// `max (w - V)` over the grid; positive values mean `solve` undershoots.
    pub max_deficit: f64,
    pub passed: bool,
}

/// Compares a solution with the direct majorant on the same grid. A large
/// deficit suggests that `delta` skipped a component.
pub fn posthoc_check(
    rm: &RiskMapping,
    g: &GainSpec,
    sol: &Solution,
    opts: &MajorantOptions,
    tol: f64,
) -> Result<PosthocReport> {
    let w = compute_majorant(rm, g, &sol.value_table.grid, opts)?;
    let max_deficit =
        w.w_values.iter().zip(&sol.value_table.values).map(|(w, v)| w - v).fold(f64::NEG_INFINITY, f64::max);
    Ok(PosthocReport { max_deficit, passed: max_deficit <= tol })
}

/// Extends a component's `h` to an admissible function that coincides with it
/// on `[x-, x+]`, stepping the free endpoint outwards by `delta_ext`.
pub fn extend_to_h(rm: &RiskMapping, g: &GainSpec, comp: &Component, delta_ext: f64) -> Result<HParams> {
    if rm.kind() == RiskKind::WorstCase {
        return Err(Error::Unsupported("extension needs a continuous, strictly monotone mapping".into()));
    }
    if delta_ext.is_nan() || delta_ext <= 0.0 {
        return Err(Error::InvalidArgument(format!("delta_ext must be positive, got {delta_ext}")));
    }
    let g_bar = g.max_value(&Grid::uniform(2001)?);
    let cap = g_bar + 2.0;
    let level = g_bar + 1.0;
    let (x_minus, x_plus) = (comp.x_minus, comp.x_plus);
    let beta0 = g.value(x_minus);

    // rightward
    let (mut z, mut gamma) = (x_plus, g.value(x_plus));
    while z < 1.0 && gamma <= level {
        let z_next = (z + delta_ext).min(1.0);
        let prev = gamma;
        let at = |zz: f64, c: f64| h_eval(rm, &HParams { y: x_minus, z: zz, beta: beta0, gamma: c }, z);
        if at(z_next, 0.0) > prev + 1e-12 {
            return Err(Error::NoRoot(format!("no gamma in [0, {cap}] at z = {z_next}; try a smaller step")));
        }
        if at(z_next, cap) < prev {
            // the required endpoint value exceeds the cap: truncate at level cap
            z = bisect(|zz| at(zz, cap) - prev, z, z_next, 100).max(z + f64::EPSILON);
            gamma = cap;
            break;
        }
        gamma = bisect_level(|c| at(z_next, c) - prev, 0.0, cap);
        z = z_next;
    }

    // leftward, with (z, gamma) fixed
    let (mut y, mut beta) = (x_minus, beta0);
    while y > 0.0 && beta <= level {
        let y_next = (y - delta_ext).max(0.0);
        let prev = beta;
        let at = |yy: f64, b: f64| h_eval(rm, &HParams { y: yy, z, beta: b, gamma }, y);
        if at(y_next, 0.0) > prev + 1e-12 {
            return Err(Error::NoRoot(format!("no beta in [0, {cap}] at y = {y_next}; try a smaller step")));
        }
        if at(y_next, cap) < prev {
            y = bisect(|yy| at(yy, cap) - prev, y_next, y, 100).min(y - f64::EPSILON);
            beta = cap;
            break;
        }
        beta = bisect_level(|b| at(y_next, b) - prev, 0.0, cap);
        y = y_next;
    }

    let hp = HParams::new(y, z, beta, gamma)?;
    if !in_h(&hp, g_bar) {
        return Err(Error::AssumptionViolation(format!("extension {hp:?} is not admissible")));
    }
    let n = 64;
    for k in 0..=n {
        let x = x_minus + (x_plus - x_minus) * k as f64 / n as f64;
        let (a, b) = (h_eval(rm, &hp, x), h_eval(rm, &comp.h_params, x));
        if (a - b).abs() > 1e-8 {
            return Err(Error::AssumptionViolation(format!(
                "extension disagrees with the component at x = {x}: {a} vs {b}"
            )));
        }
    }
    Ok(hp)
}

/// Largest root of a nondecreasing `f` on `[lo, hi]` to 1e-10.
fn bisect_level<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::{entropic_value, linear_value};
    use std::f64::consts::PI;

    fn wave() -> GainSpec {
        GainSpec::sinusoid(1.0, 1.0, 4.0, 0.0).unwrap()
    }

    /// Root of `4 pi cos(4 pi y)(1 - y) + sin(4 pi y)` on [0.625, 0.65].
    fn y_star() -> f64 {
        let f = |y: f64| 4.0 * PI * (4.0 * PI * y).cos() * (1.0 - y) + (4.0 * PI * y).sin();
        let (mut lo, mut hi) = (0.625, 0.65);
        assert!(f(lo) * f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn has_pair(pairs: &[TangencyPair], y: f64, z: f64, tol: f64) -> bool {
        pairs.iter().any(|p| (p.y - y).abs() < tol && (p.z - z).abs() < tol)
    }

    #[test]
    fn concave_gain_has_only_the_full_pair() {
        let g = GainSpec::polynomial(vec![0.0, 1.0, -1.0]).unwrap();
        let pairs = find_tangency_pairs(&RiskMapping::linear(), &g, 100).unwrap();
        assert_eq!(pairs.len(), 1, "{pairs:?}");
        assert_eq!((pairs[0].y, pairs[0].z), (0.0, 1.0));
    }

    #[test]
    fn wave_pairs_include_known_tangencies() {
        let pairs = find_tangency_pairs(&RiskMapping::linear(), &wave(), 200).unwrap();
        assert!(has_pair(&pairs, 0.125, 0.625, 1e-8), "{pairs:?}");
        assert!(has_pair(&pairs, y_star(), 1.0, 1e-8));
        for p in &pairs {
            assert!(p.residual_left.abs() <= TOL_TAN && p.residual_right.abs() <= TOL_TAN);
        }
    }

    #[test]
    fn linear_wave_solution() {
        let grid = Grid::uniform(2001).unwrap();
        let sol = solve(&RiskMapping::linear(), &wave(), &grid, &SolveOptions::default()).unwrap();
        assert_eq!(sol.components.len(), 2, "{:?}", sol.components);
        let c = &sol.components;
        assert!((c[0].x_minus - 0.125).abs() < 1e-8 && (c[0].x_plus - 0.625).abs() < 1e-8);
        assert!((c[1].x_minus - y_star()).abs() < 1e-8 && c[1].x_plus == 1.0);
        assert!((sol.value_at(0.5) - 2.0).abs() < 1e-12);
        let oracle = linear_value(&wave(), &grid);
        let err = sol.value_table.values.iter().zip(&oracle.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn concave_gain_stops_everywhere() {
        let grid = Grid::uniform(1001).unwrap();
        let g = GainSpec::polynomial(vec![0.0, 1.0, -1.0]).unwrap();
        let sol = solve(&RiskMapping::linear(), &g, &grid, &SolveOptions::default()).unwrap();
        assert!(sol.components.is_empty());
        assert!(sol.value_table.stopping_mask.iter().all(|&s| s));
        assert_eq!(sol.value_table.values, sol.value_table.g_values);
    }

    #[test]
    fn entropic_wave_matches_oracle_and_is_martingale() {
        let grid = Grid::uniform(2001).unwrap();
        let rm = RiskMapping::entropic();
        let sol = solve(&rm, &wave(), &grid, &SolveOptions::default()).unwrap();
        let oracle = entropic_value(&wave(), &grid);
        let err = sol.value_table.values.iter().zip(&oracle.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
        for c in &sol.components {
            let v = |x: f64| h_eval(&rm, &c.h_params, x);
            let w = c.x_plus - c.x_minus;
            let (a, x, b) = (c.x_minus + 0.1 * w, c.x_minus + 0.4 * w, c.x_minus + 0.8 * w);
            let p = (b - x) / (b - a);
            assert!((v(x) - rm.value(p, v(a), v(b))).abs() < 1e-8);
        }
    }

    #[test]
    fn worst_case_and_kinked_gains_are_rejected() {
        let grid = Grid::uniform(101).unwrap();
        assert!(matches!(
            solve(&RiskMapping::worst_case(), &wave(), &grid, &SolveOptions::default()),
            Err(Error::Unsupported(_))
        ));
        let kinked: GainSpec = "pwl:0:0,0.5:1,1:0".parse().unwrap();
        assert!(matches!(
            solve(&RiskMapping::linear(), &kinked, &grid, &SolveOptions::default()),
            Err(Error::DerivativeUnavailable(_))
        ));
    }

    #[test]
    fn extension_of_flat_component_is_flat() {
        let comp = Component { x_minus: 0.125, x_plus: 0.625, h_params: pair_h(&wave(), 0.125, 0.625) };
        let hp = extend_to_h(&RiskMapping::linear(), &wave(), &comp, 0.05).unwrap();
        assert_eq!((hp.y, hp.z), (0.0, 1.0));
        assert!((hp.beta - 2.0).abs() < 1e-9 && (hp.gamma - 2.0).abs() < 1e-9);
    }

    #[test]
    fn extension_is_admissible_for_entropic_components() {
        let grid = Grid::uniform(1001).unwrap();
        let rm = RiskMapping::entropic();
        let sol = solve(&rm, &wave(), &grid, &SolveOptions::default()).unwrap();
        for c in &sol.components {
            let hp = extend_to_h(&rm, &wave(), c, 0.01).unwrap();
            assert!(in_h(&hp, 2.0 + 1e-9), "{hp:?}");
            for k in 0..=20 {
                let x = c.x_minus + (c.x_plus - c.x_minus) * k as f64 / 20.0;
                assert!((h_eval(&rm, &hp, x) - h_eval(&rm, &c.h_params, x)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn full_interval_component_is_unchanged() {
        let g = GainSpec::polynomial(vec![1.0]).unwrap();
        let comp = Component { x_minus: 0.0, x_plus: 1.0, h_params: pair_h(&g, 0.0, 1.0) };
        let hp = extend_to_h(&RiskMapping::entropic(), &g, &comp, 0.1).unwrap();
        assert_eq!(hp, comp.h_params);
    }

    #[test]
    fn closed_form_tables_become_solutions() {
        let grid = Grid::uniform(4001).unwrap();
        let sol = Solution::from_value_table(crate::closed_forms::worst_case_value(&wave(), &grid));
        assert_eq!(sol.mode, SolutionMode::ClosedForm);
        assert_eq!(sol.components.len(), 2);
        assert!(sol.component_containing(0.5).is_some());
        assert!(sol.component_containing(0.7).is_none());
    }
}
