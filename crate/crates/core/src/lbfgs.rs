//! Limited-memory BFGS minimizer with a strong-Wolfe line search.
//!
//! The search direction comes from the standard two-loop recursion over a
//! short history of curvature pairs, with the initial inverse-Hessian scaled
//! by `s'y / y'y`. The very first step is steepest descent scaled by
//! `1/||g0||`. The line search brackets and then zooms with cubic
//! interpolation until both strong Wolfe conditions hold.
//!
//! Every quantity that shapes the trajectory is scale-free (normalized first
//! step, Wolfe ratios, relative loss tolerance), so scaling the objective by
//! a constant leaves the iterates unchanged.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LbfgsOptions {
    /// Number of curvature pairs kept; 0 disables history (gradient descent
    /// with line search).
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when the sup-norm of the gradient falls below this.
    pub grad_tolerance: f64,
    /// Stop when the relative per-iteration loss decrease falls below this.
    pub rel_loss_tolerance: f64,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            max_iterations: 300,
            grad_tolerance: 1e-6,
            rel_loss_tolerance: 1e-9,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    MaxIterations,
    GradientTolerance,
    LossTolerance,
    LineSearchFailure,
}

#[derive(Debug, Clone)]
pub struct OptimReport {
    pub iterations_used: usize,
    pub final_loss: f64,
    /// Loss at the start point followed by every accepted iterate;
    /// non-increasing by the sufficient-decrease condition.
    pub loss_trace: Vec<f64>,
    pub termination_reason: TerminationReason,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Minimizer of the PyTorch/minFunc cubic-interpolation flavor; finds the
/// minimum of the cubic through `(x1,f1,g1)` and `(x2,f2,g2)` clipped to
/// `bounds`.
fn cubic_interpolate(
    x1: f64,
    f1: f64,
    g1: f64,
    x2: f64,
    f2: f64,
    g2: f64,
    bounds: Option<(f64, f64)>,
) -> f64 {
    let (lo, hi) = match bounds {
        Some(b) => b,
        None => {
            if x1 <= x2 {
                (x1, x2)
            } else {
                (x2, x1)
            }
        }
    };
    let d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    let d2_square = d1 * d1 - g1 * g2;
    if d2_square >= 0.0 && d2_square.is_finite() {
        let d2 = d2_square.sqrt();
        let min_pos = if x1 <= x2 {
            x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
        } else {
            x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2))
        };
        if min_pos.is_finite() {
            min_pos.clamp(lo, hi)
        } else {
            (lo + hi) / 2.0
        }
    } else {
        (lo + hi) / 2.0
    }
}

struct Probe {
    t: f64,
    f: f64,
    g: Vec<f64>,
    x: Vec<f64>,
}

enum LineSearch {
    /// Step satisfying both strong Wolfe conditions.
    Found(Probe),
    /// No acceptable step; carries the best (lowest-loss) probe seen.
    Failed(Option<Probe>),
}

/// Strong-Wolfe line search along direction `d` from `x0`; ported bracketing
/// + zoom scheme with cubic interpolation.
#[allow(clippy::too_many_arguments)]
fn strong_wolfe<F>(
    obj: &mut F,
    x0: &[f64],
    d: &[f64],
    f0: f64,
    g0d: f64,
    t_init: f64,
    c1: f64,
    c2: f64,
) -> LineSearch
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    const MAX_LS: usize = 25;
    let mut eval = |t: f64| -> Probe {
        let x: Vec<f64> = x0.iter().zip(d).map(|(xi, di)| xi + t * di).collect();
        let (f, g) = obj(&x);
        Probe { t, f, g, x }
    };
    let mut best: Option<Probe> = None;
    let consider = |best: &mut Option<Probe>, p: &Probe| {
        if p.f.is_finite() && best.as_ref().is_none_or(|b| p.f < b.f) {
            *best = Some(Probe {
                t: p.t,
                f: p.f,
                g: p.g.clone(),
                x: p.x.clone(),
            });
        }
    };

    let mut t = t_init;
    let mut t_prev = 0.0f64;
    let mut f_prev = f0;
    let mut gd_prev = g0d;
    let mut ls_iter = 0usize;

    // Bracketing phase: grow t until the minimum is bracketed or Wolfe holds.
    let (mut bracket, mut bracket_f, mut bracket_gd, mut bracket_probe): (
        [f64; 2],
        [f64; 2],
        [f64; 2],
        [Option<Probe>; 2],
    );
    loop {
        let p = eval(t);
        consider(&mut best, &p);
        let gd = dot(&p.g, d);
        if !p.f.is_finite() || p.f > f0 + c1 * t * g0d || (ls_iter > 0 && p.f >= f_prev) {
            bracket = [t_prev, t];
            bracket_f = [f_prev, p.f];
            bracket_gd = [gd_prev, gd];
            bracket_probe = [None, Some(p)];
            break;
        }
        if gd.abs() <= -c2 * g0d {
            return LineSearch::Found(p);
        }
        if gd >= 0.0 {
            bracket = [t_prev, t];
            bracket_f = [f_prev, p.f];
            bracket_gd = [gd_prev, gd];
            bracket_probe = [None, Some(p)];
            break;
        }
        ls_iter += 1;
        if ls_iter >= MAX_LS {
            return LineSearch::Failed(best);
        }
        let min_step = t + 0.01 * (t - t_prev);
        let max_step = t * 10.0;
        let next = cubic_interpolate(
            t_prev,
            f_prev,
            gd_prev,
            t,
            p.f,
            gd,
            Some((min_step, max_step)),
        );
        t_prev = t;
        f_prev = p.f;
        gd_prev = gd;
        t = next;
    }

    // Zoom phase: shrink the bracket until strong Wolfe holds.
    let mut insufficient_progress = false;
    while ls_iter < MAX_LS {
        ls_iter += 1;
        let (lo, hi) = if bracket_f[0] <= bracket_f[1] {
            (0, 1)
        } else {
            (1, 0)
        };
        if (bracket[1] - bracket[0]).abs() * norm2(d) < 1e-12 {
            break;
        }
        let mut t = cubic_interpolate(
            bracket[0],
            bracket_f[0],
            bracket_gd[0],
            bracket[1],
            bracket_f[1],
            bracket_gd[1],
            None,
        );
        // keep trial points a safe distance from the bracket endpoints
        let bmax = bracket[0].max(bracket[1]);
        let bmin = bracket[0].min(bracket[1]);
        let eps = 0.1 * (bmax - bmin);
        if (bmax - t).min(t - bmin) < eps {
            if insufficient_progress || t >= bmax || t <= bmin {
                t = if (t - bmax).abs() < (t - bmin).abs() {
                    bmax - eps
                } else {
                    bmin + eps
                };
                insufficient_progress = false;
            } else {
                insufficient_progress = true;
            }
        } else {
            insufficient_progress = false;
        }

        let p = eval(t);
        consider(&mut best, &p);
        let gd = dot(&p.g, d);
        if !p.f.is_finite() || p.f > f0 + c1 * t * g0d || p.f >= bracket_f[lo] {
            bracket[hi] = t;
            bracket_f[hi] = p.f;
            bracket_gd[hi] = gd;
            bracket_probe[hi] = Some(p);
        } else {
            if gd.abs() <= -c2 * g0d {
                return LineSearch::Found(p);
            }
            if gd * (bracket[hi] - bracket[lo]) >= 0.0 {
                bracket[hi] = bracket[lo];
                bracket_f[hi] = bracket_f[lo];
                bracket_gd[hi] = bracket_gd[lo];
                bracket_probe[hi] = bracket_probe[lo].take();
            }
            bracket[lo] = t;
            bracket_f[lo] = p.f;
            bracket_gd[lo] = gd;
            bracket_probe[lo] = Some(p);
        }
    }

    // Out of budget: accept the low endpoint if it at least satisfies the
    // sufficient-decrease condition.
    let (lo, _) = if bracket_f[0] <= bracket_f[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    if let Some(p) = bracket_probe[lo].take() {
        if p.f.is_finite() && p.f <= f0 + c1 * p.t * g0d {
            return LineSearch::Found(p);
        }
    }
    LineSearch::Failed(best)
}

/// Minimize `objective` from `x0`. The objective must return a finite loss
/// and a gradient of matching length at `x0`.
pub fn minimize<F>(
    mut objective: F,
    x0: &[f64],
    opts: &LbfgsOptions,
) -> Result<(Vec<f64>, OptimReport)>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    if !(opts.wolfe_c1 > 0.0 && opts.wolfe_c1 < opts.wolfe_c2 && opts.wolfe_c2 < 1.0) {
        return Err(Error::invalid("need 0 < c1 < c2 < 1"));
    }
    if x0.is_empty() {
        return Err(Error::invalid("empty start vector"));
    }

    let mut x = x0.to_vec();
    let (mut f, mut g) = objective(&x);
    if !f.is_finite() || g.len() != x.len() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "objective must return finite loss and matching gradient at x0",
        ));
    }
    let mut trace = vec![f];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    let done = |iters: usize, f: f64, trace: Vec<f64>, reason: TerminationReason, x: Vec<f64>| {
        Ok((
            x,
            OptimReport {
                iterations_used: iters,
                final_loss: f,
                loss_trace: trace,
                termination_reason: reason,
            },
        ))
    };

    if norm_inf(&g) <= opts.grad_tolerance {
        return done(0, f, trace, TerminationReason::GradientTolerance, x);
    }

    for iter in 1..=opts.max_iterations {
        // Search direction.
        let mut d: Vec<f64>;
        if history.is_empty() {
            let gn = norm2(&g);
            d = g.iter().map(|v| -v / gn).collect();
        } else {
            // two-loop recursion
            let mut q = g.clone();
            let mut alphas = Vec::with_capacity(history.len());
            for (s, y, rho) in history.iter().rev() {
                let a = rho * dot(s, &q);
                for (qi, yi) in q.iter_mut().zip(y) {
                    *qi -= a * yi;
                }
                alphas.push(a);
            }
            let (s_last, y_last, _) = history.back().expect("nonempty");
            let gamma = dot(s_last, y_last) / dot(y_last, y_last);
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
            for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
                let b = rho * dot(y, &q);
                for (qi, si) in q.iter_mut().zip(s) {
                    *qi += (a - b) * si;
                }
            }
            d = q.iter().map(|v| -v).collect();
            // fall back to steepest descent if the history direction is not
            // a descent direction
            if dot(&g, &d) >= 0.0 {
                history.clear();
                let gn = norm2(&g);
                d = g.iter().map(|v| -v / gn).collect();
            }
        }
        let g0d = dot(&g, &d);

        let probe = match strong_wolfe(
            &mut objective,
            &x,
            &d,
            f,
            g0d,
            1.0,
            opts.wolfe_c1,
            opts.wolfe_c2,
        ) {
            LineSearch::Found(p) => p,
            LineSearch::Failed(best) => {
                // keep whichever point is lowest so the caller still gets
                // the best iterate seen
                if let Some(b) = best {
                    if b.f < f {
                        trace.push(b.f);
                        return done(iter, b.f, trace, TerminationReason::LineSearchFailure, b.x);
                    }
                }
                return done(iter - 1, f, trace, TerminationReason::LineSearchFailure, x);
            }
        };

        let s: Vec<f64> = probe.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = probe.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if opts.memory > 0 && sy > 1e-10 * norm2(&s) * norm2(&y) {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let f_prev = f;
        x = probe.x;
        f = probe.f;
        g = probe.g;
        trace.push(f);

        if norm_inf(&g) <= opts.grad_tolerance {
            return done(iter, f, trace, TerminationReason::GradientTolerance, x);
        }
        let rel_drop = (f_prev - f).abs() / f_prev.abs().max(f.abs()).max(1.0);
        if rel_drop <= opts.rel_loss_tolerance {
            return done(iter, f, trace, TerminationReason::LossTolerance, x);
        }
    }
    done(
        opts.max_iterations,
        f,
        trace,
        TerminationReason::MaxIterations,
        x,
    )
}
