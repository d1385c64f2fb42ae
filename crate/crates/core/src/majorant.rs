//! Direct computation of the nonconcave majorant
//! `w(x) = inf { h(x) : h admissible, h >= g on [0, 1] }`.
//!
//! The admissible functions fall into three classes:
//!
//! * (a) `y = 0, z = 1`, payoffs in `[0, g_bar + 2]`;
//! * (b) `0 < y < 1, z = 1`, `beta in (g_bar + 1, g_bar + 2]`;
//! * (c) `y = 0, 0 < z < 1`, `gamma in (g_bar + 1, g_bar + 2]`.
//!
//! `h` is nondecreasing in each payoff, so for every fixed choice of the other
//! parameters the payoff at the absorbing end (`gamma` in (a) and (b), `beta`
//! in (c)) is set to the smallest value keeping `h >= g` on the grid. That
//! value is the maximum over grid points of a pointwise inversion of the
//! two-point risk value, which leaves a one- or two-parameter search: a
//! `param_res` grid over the free payoff (and the spatial grid over the free
//! endpoint), followed by step-halving coordinate descent on the winner of
//! each class.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gain::GainSpec;
use crate::grid::Grid;
use crate::h_family::{exit_prob_unchecked, h_eval, HParams, TOL_DOM};
use crate::risk_mapping::RiskMapping;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorantOptions {
    /// Points per payoff axis; at least 16.
    pub param_res: usize,
    /// Coordinate-descent iterations per class and grid point; 0 disables refinement.
    pub refine_iters: usize,
    pub tol_dom: f64,
}

impl Default for MajorantOptions {
    fn default() -> Self {
        Self { param_res: 201, refine_iters: 40, tol_dom: TOL_DOM }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantResult {
    pub grid: Grid,
    pub g_values: Vec<f64>,
    pub w_values: Vec<f64>,
    pub argmin_params: Vec<HParams>,
    pub g_bar: f64,
}

struct Search<'a> {
    rm: &'a RiskMapping,
    xs: &'a [f64],
    gs: &'a [f64],
    cap: f64,
}

#[derive(Clone, Copy)]
struct Candidate {
    value: f64,
    params: HParams,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        self.value < other.value || (self.value == other.value && self.params.lex_less(&other.params))
    }
}

fn keep_best(best: &mut Option<Candidate>, cand: Candidate) {
    match best {
        Some(b) if !cand.better_than(b) => {}
        _ => *best = Some(cand),
    }
}

impl Search<'_> {
    fn first_index_at_or_after(&self, t: f64) -> usize {
        let last = (self.xs.len() - 1) as f64;
        let mut i = (t * last).ceil().max(0.0) as usize;
        while i > 0 && self.xs[i - 1] >= t {
            i -= 1;
        }
        while i < self.xs.len() && self.xs[i] < t {
            i += 1;
        }
        i
    }

    /// Smallest `gamma` with `h^{y,1}_{beta,gamma} >= g` on the grid.
    fn min_gamma(&self, y: f64, beta: f64) -> Option<f64> {
        let start = self.first_index_at_or_after(y);
        let mut gamma = 0.0f64;
        for i in start..self.xs.len() {
            let p = exit_prob_unchecked(self.xs[i], y, 1.0);
            gamma = gamma.max(self.rm.min_second(p, beta, self.gs[i], self.cap)?);
        }
        Some(gamma)
    }

    /// Smallest `beta` with `h^{0,z}_{beta,gamma} >= g` on the grid.
    fn min_beta(&self, z: f64, gamma: f64) -> Option<f64> {
        let end = self.first_index_at_or_after(z);
        let end = if end < self.xs.len() && self.xs[end] == z { end + 1 } else { end };
        let mut beta = 0.0f64;
        for i in 0..end {
            let p = exit_prob_unchecked(self.xs[i], 0.0, z);
            beta = beta.max(self.rm.min_first(p, gamma, self.gs[i], self.cap)?);
        }
        Some(beta)
    }

    fn class_a(&self, beta: f64) -> Option<HParams> {
        let gamma = self.min_gamma(0.0, beta)?;
        Some(HParams { y: 0.0, z: 1.0, beta, gamma })
    }

    fn class_b(&self, y: f64, beta: f64) -> Option<HParams> {
        let gamma = self.min_gamma(y, beta)?;
        Some(HParams { y, z: 1.0, beta, gamma })
    }

    fn class_c(&self, z: f64, gamma: f64) -> Option<HParams> {
        let beta = self.min_beta(z, gamma)?;
        Some(HParams { y: 0.0, z, beta, gamma })
    }
}

/// Step-halving coordinate descent on `objective` over the box `bounds`.
/// Open/closed ends are expressed by `admissible`.
fn coordinate_descent<F, A>(start: &[f64], steps: &[f64], iters: usize, objective: F, admissible: A) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
    A: Fn(&[f64]) -> bool,
{
    let mut cur = start.to_vec();
    let mut best = objective(&cur);
    let mut steps = steps.to_vec();
    for _ in 0..iters {
        let mut improved = false;
        for k in 0..cur.len() {
            for dir in [1.0, -1.0] {
                let mut trial = cur.clone();
                trial[k] += dir * steps[k];
                if !admissible(&trial) {
                    continue;
                }
                let v = objective(&trial);
                if v < best {
                    best = v;
                    cur = trial;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            steps.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    (cur, best)
}

pub fn compute_majorant(rm: &RiskMapping, g: &GainSpec, grid: &Grid, opts: &MajorantOptions) -> Result<MajorantResult> {
    if opts.param_res < 16 {
        return Err(Error::InvalidArgument(format!("param_res must be at least 16, got {}", opts.param_res)));
    }
    g.check_nonnegative(grid)?;

    let xs = grid.points();
    let gs = g.sample(grid);
    let n = xs.len();
    let g_bar = g.max_value(grid);
    let cap = g_bar + 2.0;
    let search = Search { rm, xs, gs: &gs, cap };
    let res = opts.param_res;
    let steps_per_unit = (res - 1) as f64;

    // (a): beta over [0, cap]
    let betas_a: Vec<f64> = (0..res).map(|k| cap * k as f64 / steps_per_unit).collect();
    let class_a: Vec<HParams> = betas_a.par_iter().filter_map(|&b| search.class_a(b)).collect();

    // (b)/(c): the interior payoff over (g_bar + 1, g_bar + 2]
    let high: Vec<f64> = (1..res).map(|k| g_bar + 1.0 + k as f64 / steps_per_unit).collect();
    let class_b: Vec<Vec<HParams>> = (1..n - 1)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(high.len());
            // h grows with beta, so infeasibility propagates downwards
            for &b in high.iter().rev() {
                match search.class_b(xs[i], b) {
                    Some(hp) => row.push(hp),
                    None => break,
                }
            }
            row
        })
        .collect();
    let class_c: Vec<Vec<HParams>> = (1..n - 1)
        .into_par_iter()
        .map(|j| {
            let mut row = Vec::with_capacity(high.len());
            for &c in high.iter().rev() {
                match search.class_c(xs[j], c) {
                    Some(hp) => row.push(hp),
                    None => break,
                }
            }
            row
        })
        .collect();

    let payoff_step = 1.0 / steps_per_unit;
    let space_step = grid.spacing();
    let tol = opts.tol_dom;

    let per_point: Vec<Candidate> = (0..n)
        .into_par_iter()
        .map(|m| {
            let x = xs[m];
            let eval = |hp: &HParams| Candidate { value: h_eval(rm, hp, x), params: *hp };
            let mut best_a = None;
            for hp in &class_a {
                keep_best(&mut best_a, eval(hp));
            }
            let mut best_b = None;
            for row in class_b.iter().take(m.saturating_sub(1)) {
                for hp in row {
                    keep_best(&mut best_b, eval(hp));
                }
            }
            let mut best_c = None;
            for row in class_c.iter().skip(m) {
                for hp in row {
                    keep_best(&mut best_c, eval(hp));
                }
            }

            let floor = gs[m] - tol;
            let refine = |best: Option<Candidate>, which: char| -> Option<Candidate> {
                let cand = best?;
                if opts.refine_iters == 0 || cand.value <= gs[m] {
                    return Some(cand);
                }
                let refined = match which {
                    'a' => {
                        let obj = |v: &[f64]| search.class_a(v[0]).map_or(f64::INFINITY, |hp| h_eval(rm, &hp, x));
                        let adm = |v: &[f64]| (0.0..=cap).contains(&v[0]);
                        let (v, _) =
                            coordinate_descent(&[cand.params.beta], &[cap * payoff_step], opts.refine_iters, obj, adm);
                        search.class_a(v[0])
                    }
                    'b' => {
                        let obj = |v: &[f64]| search.class_b(v[0], v[1]).map_or(f64::INFINITY, |hp| h_eval(rm, &hp, x));
                        let adm = |v: &[f64]| v[0] > 0.0 && v[0] < x && v[1] > g_bar + 1.0 && v[1] <= cap;
                        let start = [cand.params.y, cand.params.beta];
                        let (v, _) =
                            coordinate_descent(&start, &[space_step, payoff_step], opts.refine_iters, obj, adm);
                        search.class_b(v[0], v[1])
                    }
                    _ => {
                        let obj = |v: &[f64]| search.class_c(v[0], v[1]).map_or(f64::INFINITY, |hp| h_eval(rm, &hp, x));
                        let adm = |v: &[f64]| v[0] > x && v[0] < 1.0 && v[1] > g_bar + 1.0 && v[1] <= cap;
                        let start = [cand.params.z, cand.params.gamma];
                        let (v, _) =
                            coordinate_descent(&start, &[space_step, payoff_step], opts.refine_iters, obj, adm);
                        search.class_c(v[0], v[1])
                    }
                };
                match refined {
                    Some(hp) => {
                        let r = eval(&hp);
                        Some(if r.value >= floor && r.better_than(&cand) { r } else { cand })
                    }
                    None => Some(cand),
                }
            };

            let mut best = None;
            for c in [refine(best_a, 'a'), refine(best_b, 'b'), refine(best_c, 'c')].into_iter().flatten() {
                keep_best(&mut best, c);
            }
            best.expect("the constant line at g_bar is always admissible")
        })
        .collect();

    Ok(MajorantResult {
        grid: grid.clone(),
        g_values: gs.clone(),
        w_values: per_point.iter().map(|c| c.value).collect(),
        argmin_params: per_point.iter().map(|c| c.params).collect(),
        g_bar,
    })
}
