#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use stratshift::process::{IntervalFamily, ModelParams, Thresholds};
use stratshift::transform::TransformContext;

pub fn reference() -> ModelParams {
    ModelParams::unit_marks(1.0, 1.0, IntervalFamily::Exponential, 1.0, 1.0)
}

pub const REFERENCE_CONFIG: &str = r#"{
  "process": { "lambda_a": 1.0, "lambda_b": 1.0 },
  "observation": { "family": "exponential", "initial_mean": 1.0, "interval_mean": 1.0 },
  "thresholds": { "m": 1, "n": 1 },
  "simulation": { "paths": 20000, "seed": 42 }
}"#;

/// Same model, restricted to the exit-index means.
pub const MEANS_ONLY_CONFIG: &str = r#"{
  "process": { "lambda_a": 1.0, "lambda_b": 1.0 },
  "observation": { "family": "exponential", "initial_mean": 1.0, "interval_mean": 1.0 },
  "thresholds": { "m": 1, "n": 1 },
  "simulation": { "paths": 20000, "seed": 42 },
  "conformance": { "families": ["exit_index_mean"] }
}"#;

pub fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn ln_factorial(k: u64) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = vec![0.0; 512];
        for i in 1..t.len() {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    });
    table[k as usize]
}

fn poisson(mean: f64, k: u64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * mean.ln() - mean - ln_factorial(k)).exp()
}

/// `E[e^{-theta D} 1{a arrivals of A, b arrivals of B in D}]` for one window
/// of mean length `mean`.
fn window_weight(family: IntervalFamily, mean: f64, la: f64, lb: f64, theta: f64, a: u64, b: u64) -> f64 {
    match family {
        IntervalFamily::Exponential => {
            let rate = 1.0 / mean;
            let total = rate + la + lb + theta;
            let ln_binom = ln_factorial(a + b) - ln_factorial(a) - ln_factorial(b);
            let mut ln = ln_binom + rate.ln() - (a + b + 1) as f64 * total.ln();
            if a > 0 {
                ln += a as f64 * la.ln();
            }
            if b > 0 {
                ln += b as f64 * lb.ln();
            }
            ln.exp()
        }
        IntervalFamily::Deterministic => (-theta * mean).exp() * poisson(la * mean, a) * poisson(lb * mean, b),
    }
}

#[derive(Clone, Copy)]
struct State {
    level_a: u64,
    level_b: u64,
    done_a: bool,
    done_b: bool,
    /// Indicator survived for the axes already exited.
    kept: bool,
}

/// Exact value of the joint functional
/// `E[z^mu g^nu e^{-theta0 tau_{mu-1} - theta1 tau_mu - vartheta0 tau_{nu-1} - vartheta1 tau_nu}
/// 1{A_mu <= m} 1{B_nu <= n}]` for unit marks, by a window-by-window sum
/// truncated at `windows` windows and `max_arrivals` arrivals per window.
pub fn enumerate_functional(
    params: &ModelParams,
    th: Thresholds,
    ctx: &TransformContext,
    literal: bool,
    windows: usize,
    max_arrivals: u64,
) -> f64 {
    let family = params.interval.family;
    let (la, lb) = (params.lambda_a, params.lambda_b);
    let mut frontier = vec![(
        State { level_a: 0, level_b: 0, done_a: false, done_b: false, kept: true },
        1.0,
    )];
    let mut total = 0.0;
    for k in 0..windows {
        let mean = if k == 0 { params.initial.mean } else { params.interval.mean };
        let mut next: Vec<(State, f64)> = Vec::new();
        for (s, w) in frontier {
            let mut w = w;
            if k > 0 {
                if !s.done_a {
                    w *= ctx.z;
                }
                if !s.done_b {
                    w *= ctx.g;
                }
            }
            let amax = if s.done_a { 0 } else { max_arrivals };
            let bmax = if s.done_b { 0 } else { max_arrivals };
            for a in 0..=amax {
                for b in 0..=bmax {
                    let na = s.level_a + a;
                    let nb = s.level_b + b;
                    let exit_a = !s.done_a && na >= th.m;
                    let exit_b = !s.done_b && nb >= th.n;
                    let mut theta = 0.0;
                    if !s.done_a {
                        theta += if exit_a { ctx.theta1 } else { ctx.theta0 + ctx.theta1 };
                    }
                    if !s.done_b {
                        theta += if exit_b { ctx.vartheta1 } else { ctx.vartheta0 + ctx.vartheta1 };
                    }
                    // Arrivals of an exited axis are summed out by dropping its rate.
                    let (ra, rb) = (if s.done_a { 0.0 } else { la }, if s.done_b { 0.0 } else { lb });
                    let p = window_weight(family, mean, ra, rb, theta, a, b);
                    if p == 0.0 {
                        continue;
                    }
                    let mut kept = s.kept;
                    if literal && exit_a && na > th.m {
                        kept = false;
                    }
                    if literal && exit_b && nb > th.n {
                        kept = false;
                    }
                    let ns = State {
                        level_a: if s.done_a { s.level_a } else { na.min(th.m) },
                        level_b: if s.done_b { s.level_b } else { nb.min(th.n) },
                        done_a: s.done_a || exit_a,
                        done_b: s.done_b || exit_b,
                        kept,
                    };
                    let nw = w * p;
                    if ns.done_a && ns.done_b {
                        if ns.kept {
                            total += nw;
                        }
                    } else if ns.kept {
                        merge(&mut next, ns, nw);
                    }
                }
            }
        }
        frontier = next;
    }
    total
}

fn merge(states: &mut Vec<(State, f64)>, s: State, w: f64) {
    for (t, tw) in states.iter_mut() {
        if t.level_a == s.level_a && t.level_b == s.level_b && t.done_a == s.done_a && t.done_b == s.done_b {
            *tw += w;
            return;
        }
    }
    states.push((s, w));
}
