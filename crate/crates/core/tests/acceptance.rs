//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Every tolerance is pinned below. Run with `cargo test --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nlstop_core::closed_forms::{concave_majorant, entropic_value, worst_case_value};
use nlstop_core::h_family::{exit_prob, h_deriv, h_eval, HParams};
use nlstop_core::majorant::{compute_majorant, MajorantOptions};
use nlstop_core::mc_oracle::{bias_allowance, verify_solution, MCConfig};
use nlstop_core::risk_mapping::{check_axioms, DiscreteLaw, RiskMapping};
use nlstop_core::solver::{solve, Solution, SolveOptions};
use nlstop_core::{GainSpec, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL_COMPONENT: f64 = 1e-3;
const TOL_ORACLE: f64 = 1e-3;
const TOL_MAJORANT: f64 = 5e-3;
const TOL_PROPERTY: f64 = 1e-9;
const TOL_MARTINGALE: f64 = 1e-10;
const TOL_SMOOTH_FIT: f64 = 1e-2;
const SMOOTH_FIT_STEP: f64 = 5e-4;
const PROPERTY_SAMPLES: usize = 1000;
const AXIOM_TRIALS: usize = 1000;
const MC_DT: f64 = 1e-4;
const MC_PATHS: usize = 100_000;

const BUDGET_WORST_CASE: Duration = Duration::from_secs(120);
const BUDGET_LINEAR: Duration = Duration::from_secs(60);
const BUDGET_MAJORANT: Duration = Duration::from_secs(600);
const BUDGET_MONTE_CARLO: Duration = Duration::from_secs(300);

fn wave() -> GainSpec {
    GainSpec::sinusoid(1.0, 1.0, 4.0, 0.0).unwrap()
}

fn bowl() -> GainSpec {
    GainSpec::polynomial(vec![0.2, 1.0, -1.0]).unwrap()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Root of `4 pi cos(4 pi y)(1 - y) + sin(4 pi y)` on [0.625, 0.65], by bisection.
fn y_star() -> f64 {
    let f = |y: f64| 4.0 * PI * (4.0 * PI * y).cos() * (1.0 - y) + (4.0 * PI * y).sin();
    let (mut lo, mut hi) = (0.625, 0.65);
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

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let g = wave();
    let grid = Grid::uniform(4001).unwrap();
    let oracle = worst_case_value(&g, &grid);
    let comps = oracle.components();
    let expected = [(0.125, 0.625), (0.75, 1.0)];
    let comps_ok = comps.len() == 2
        && comps
            .iter()
            .zip(&expected)
            .all(|(c, e)| (c.0 - e.0).abs() <= TOL_COMPONENT && (c.1 - e.1).abs() <= TOL_COMPONENT);
    let m = compute_majorant(&RiskMapping::worst_case(), &g, &grid, &MajorantOptions::default()).unwrap();
    let err = sup_diff(&m.w_values, &oracle.values);
    let tol = 2.0 * grid.spacing() * g.grid_lipschitz(&grid);
    let elapsed = t.elapsed();
    outcome(
        comps_ok && err <= tol && elapsed <= BUDGET_WORST_CASE,
        format!("components {comps:?}, sup|w - V| = {err:.2e} (tol {tol:.2e}), {elapsed:.1?}"),
    )
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let g = wave();
    let grid = Grid::uniform(2001).unwrap();
    let sol = solve(&RiskMapping::linear(), &g, &grid, &SolveOptions::default()).unwrap();
    let cm = concave_majorant(&grid, &g.sample(&grid)).unwrap();
    let err = sup_diff(&sol.value_table.values, &cm);
    let ys = y_star();
    let c = &sol.components;
    let comps_ok = c.len() == 2
        && (c[0].x_minus - 0.125).abs() <= TOL_COMPONENT
        && (c[0].x_plus - 0.625).abs() <= TOL_COMPONENT
        && (c[1].x_minus - ys).abs() <= TOL_COMPONENT
        && (c[1].x_plus - 1.0).abs() <= TOL_COMPONENT;
    let elapsed = t.elapsed();
    let found: Vec<(f64, f64)> = c.iter().map(|c| (c.x_minus, c.x_plus)).collect();
    outcome(
        err <= TOL_ORACLE && comps_ok && elapsed <= BUDGET_LINEAR,
        format!("sup err {err:.2e}, components {found:.6?}, y* oracle {ys:.6}, {elapsed:.1?}"),
    )
}

fn criterion_3() -> Outcome {
    let grid = Grid::uniform(2001).unwrap();
    let rm = RiskMapping::entropic();
    let mut errs = Vec::new();
    for g in [wave(), bowl()] {
        let sol = solve(&rm, &g, &grid, &SolveOptions::default()).unwrap();
        errs.push(sup_diff(&sol.value_table.values, &entropic_value(&g, &grid).values));
    }
    outcome(errs.iter().all(|e| *e <= TOL_ORACLE), format!("sup err wave {:.2e}, bowl {:.2e}", errs[0], errs[1]))
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let grid = Grid::uniform(1001).unwrap();
    let opts = MajorantOptions { param_res: 201, ..Default::default() };
    let mut parts = Vec::new();
    let mut ok = true;
    for rm in [RiskMapping::linear(), RiskMapping::entropic()] {
        for (name, g) in [("wave", wave()), ("bowl", bowl())] {
            let w = compute_majorant(&rm, &g, &grid, &opts).unwrap();
            let v = solve(&rm, &g, &grid, &SolveOptions::default()).unwrap();
            let err = sup_diff(&w.w_values, &v.value_table.values);
            ok &= err <= TOL_MAJORANT;
            parts.push(format!("{}/{name} {err:.2e}", rm.name()));
        }
    }
    let elapsed = t.elapsed();
    outcome(ok && elapsed <= BUDGET_MAJORANT, format!("sup|w - V|: {}, {elapsed:.1?}", parts.join(", ")))
}

fn random_params(rng: &mut ChaCha8Rng, cap: f64) -> HParams {
    let a: f64 = rng.random_range(0.0..1.0);
    let b: f64 = rng.random_range(0.0..1.0);
    let (y, z) = (a.min(b), a.max(b).max(a.min(b) + 1e-3).min(1.0));
    HParams::new(y.min(z - 1e-3), z, rng.random_range(0.0..cap), rng.random_range(0.0..cap)).unwrap()
}

fn criterion_5() -> Outcome {
    let cap = 4.0; // g_bar + 2 with g_bar = 2
    let mut violations: Vec<String> = Vec::new();
    let mut counts = [0usize; 6];
    for rm in [RiskMapping::linear(), RiskMapping::entropic(), RiskMapping::worst_case()] {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let smooth = rm.is_differentiable();
        let mut bad = [0usize; 6];
        for _ in 0..PROPERTY_SAMPLES {
            let hp = random_params(&mut rng, cap);
            let (y, z, b, c) = (hp.y, hp.z, hp.beta, hp.gamma);
            let x = rng.random_range(y..=z);
            let hx = h_eval(&rm, &hp, x);

            // maximum principle
            bad[0] += usize::from(hx < b.min(c) - TOL_PROPERTY || hx > b.max(c) + TOL_PROPERTY);

            // monotonicity along the segment
            let x2 = rng.random_range(x..=z);
            let hx2 = h_eval(&rm, &hp, x2);
            bad[1] += usize::from((b < c && hx2 < hx - TOL_PROPERTY) || (b > c && hx2 > hx + TOL_PROPERTY));

            // translation invariance for admissible shifts
            let alpha = rng.random_range(-b.min(c)..=(cap - b.max(c)));
            let shifted = HParams { beta: b + alpha, gamma: c + alpha, ..hp };
            bad[2] += usize::from((h_eval(&rm, &shifted, x) - (hx + alpha)).abs() > TOL_PROPERTY);

            // martingale composition on a random sub-interval around x
            let a = rng.random_range(y..=x);
            let bb = rng.random_range(x..=z);
            if bb - a > 1e-9 && a < x && x < bb {
                let p = exit_prob(x, a, bb).unwrap();
                let composed = rm.value(p, h_eval(&rm, &hp, a), h_eval(&rm, &hp, bb));
                bad[5] += usize::from((composed - hx).abs() > TOL_MARTINGALE);
            }

            if smooth {
                // monotone left derivatives at z in beta
                let bt = rng.random_range(b..=cap);
                if bt > b {
                    let d = h_deriv(&rm, &hp, z).unwrap();
                    let dt = h_deriv(&rm, &HParams { beta: bt, ..hp }, z).unwrap();
                    bad[3] += usize::from(d < dt - TOL_PROPERTY);
                }
                // scaling: h = h^{0,z}_{0,c}, h_hat = h^{0,z_hat}_{0,c}
                let z_hat = rng.random_range(z..=1.0);
                let delta = rng.random_range(0.0..z);
                let h = HParams { y: 0.0, z, beta: 0.0, gamma: c };
                let hh = HParams { y: 0.0, z: z_hat, beta: 0.0, gamma: c };
                let lhs = h_eval(&rm, &h, z - delta);
                let rhs = h_eval(&rm, &hh, z_hat - delta);
                let mut fail = lhs > rhs + TOL_PROPERTY;
                // converse: left derivatives for h^{0,z}_{b,0}
                let k = HParams { y: 0.0, z, beta: b, gamma: 0.0 };
                let kk = HParams { y: 0.0, z: z_hat, beta: b, gamma: 0.0 };
                fail |= h_deriv(&rm, &k, z).unwrap() > h_deriv(&rm, &kk, z_hat).unwrap() + TOL_PROPERTY;
                bad[4] += usize::from(fail);
            }
        }
        for (k, n) in bad.iter().enumerate() {
            counts[k] += n;
        }
        if bad.iter().any(|&n| n > 0) {
            violations.push(format!("{}: {bad:?}", rm.name()));
        }
    }
    let names = ["max principle", "monotonicity", "translation", "monotone derivatives", "scaling", "martingale"];
    let summary: Vec<String> = names.iter().zip(&counts).map(|(n, c)| format!("{n} {c}")).collect();
    outcome(
        violations.is_empty(),
        format!("{PROPERTY_SAMPLES} samples per mapping, violations: {}", summary.join(", ")),
    )
}

fn criterion_6() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for rm in [RiskMapping::linear(), RiskMapping::entropic(), RiskMapping::worst_case()] {
        let r = check_axioms(&rm, AXIOM_TRIALS, 7).unwrap();
        ok &= r.all_passed();
        parts.push(format!("{} {}", rm.name(), if r.all_passed() { "ok" } else { "fails" }));
    }
    let broken = RiskMapping::custom("doubled mean", |law: &DiscreteLaw| {
        2.0 * law.outcomes().iter().zip(law.probabilities()).map(|(v, p)| v * p).sum::<f64>()
    });
    let r = check_axioms(&broken, AXIOM_TRIALS, 7).unwrap();
    let witness = r.checks.iter().find(|c| !c.passed).and_then(|c| c.witness.clone());
    ok &= !r.all_passed() && witness.is_some();
    parts.push(format!("broken mapping rejected with witness {:?}", witness.map(|w| w.outcomes().to_vec())));
    outcome(ok, parts.join(", "))
}

fn criterion_7() -> Outcome {
    let grid = Grid::uniform(2001).unwrap();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for rm in [RiskMapping::linear(), RiskMapping::entropic()] {
        for g in [wave(), bowl()] {
            let sol = solve(&rm, &g, &grid, &SolveOptions::default()).unwrap();
            for c in &sol.components {
                let v = |x: f64| h_eval(&rm, &c.h_params, x);
                let s = SMOOTH_FIT_STEP;
                for (e, inward) in [(c.x_minus, s), (c.x_plus, -s)] {
                    if e <= 0.0 || e >= 1.0 {
                        continue;
                    }
                    let slope = (v(e + inward) - v(e)) / inward;
                    worst = worst.max((slope - g.derivative(e).unwrap()).abs());
                    n += 1;
                }
            }
        }
    }
    outcome(n > 0 && worst <= TOL_SMOOTH_FIT, format!("{n} interior endpoints, max |V' - g'| = {worst:.2e}"))
}

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let g = wave();
    let cfg = MCConfig { dt: MC_DT, n_paths: MC_PATHS, ..Default::default() };
    let grid = Grid::uniform(2001).unwrap();
    let mut ok = true;
    let mut failures = Vec::new();
    let mut checks = 0;
    for rm in [RiskMapping::linear(), RiskMapping::entropic(), RiskMapping::worst_case()] {
        let sol = match solve(&rm, &g, &grid, &SolveOptions::default()) {
            Ok(s) => s,
            Err(_) => Solution::from_value_table(worst_case_value(&g, &Grid::uniform(4001).unwrap())),
        };
        for x0 in [0.3, 0.5, 0.9] {
            let r = verify_solution(&rm, &g, &sol, x0, &cfg).unwrap();
            for c in &r.checks {
                checks += 1;
                if !c.passed {
                    ok = false;
                    failures.push(format!("{}@{x0} {} {:.4} vs V {:.4}", rm.name(), c.name, c.estimate.value, r.value));
                }
            }
        }
    }
    let elapsed = t.elapsed();
    outcome(
        ok && elapsed <= BUDGET_MONTE_CARLO,
        format!("{checks} rule checks, allowance {:.1e}, failures {failures:?}, {elapsed:.1?}", bias_allowance(MC_DT)),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 worst-case components and majorant", criterion_1),
        ("2 linear solve vs concave majorant", criterion_2),
        ("3 entropic solve vs closed form", criterion_3),
        ("4 majorant equals value", criterion_4),
        ("5 properties of the admissible family", criterion_5),
        ("6 risk-mapping axioms", criterion_6),
        ("7 smooth fit at component endpoints", criterion_7),
        ("8 Monte Carlo verification", criterion_8),
    ];
    let mut all = true;
    for (name, run) in criteria {
        let o = run();
        all &= o.passed;
        println!("{} criterion {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
