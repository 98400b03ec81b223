// Copyright 2026 The gkp-lattice Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense BFGS with a strong-Wolfe line search.

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfgsSettings {
    pub max_iters: usize,
    pub grad_tolerance: f64,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    pub max_line_evals: usize,
}

impl Default for BfgsSettings {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            grad_tolerance: 1e-8,
            c1: 1e-4,
            c2: 0.9,
            max_line_evals: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BfgsStop {
    /// The caller's stop predicate fired.
    Goal,
    GradientTolerance,
    MaxIters,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct BfgsOutcome<A> {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub aux: A,
    pub iterations: usize,
    pub evaluations: usize,
    pub stop: BfgsStop,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Point<A> {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    aux: A,
}

/// Minimizes `objective`, which returns value, gradient and an auxiliary
/// payload. `accept(iter, value, grad_norm, aux)` runs after every accepted
/// iterate (iteration 0 is the starting point); returning `true` stops.
pub fn minimize<A, F, S>(
    x0: Vec<f64>,
    settings: &BfgsSettings,
    mut objective: F,
    mut accept: S,
) -> Result<BfgsOutcome<A>>
where
    A: Clone,
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>, A)>,
    S: FnMut(usize, f64, f64, &A) -> bool,
{
    let n = x0.len();
    let mut evals = 1;
    let (f0, g0, a0) = objective(&x0)?;
    let mut cur = Point {
        x: x0,
        f: f0,
        g: g0,
        aux: a0,
    };
    // inverse Hessian approximation, row-major
    let mut hinv = identity(n);
    let mut scaled = false;

    let finish = |p: Point<A>, iterations, evaluations, stop| BfgsOutcome {
        x: p.x,
        value: p.f,
        gradient: p.g,
        aux: p.aux,
        iterations,
        evaluations,
        stop,
    };

    if accept(0, cur.f, norm(&cur.g), &cur.aux) {
        return Ok(finish(cur, 0, evals, BfgsStop::Goal));
    }

    for iter in 1..=settings.max_iters {
        if norm(&cur.g) < settings.grad_tolerance {
            return Ok(finish(cur, iter - 1, evals, BfgsStop::GradientTolerance));
        }
        let mut dir = mat_vec(&hinv, &cur.g, n);
        dir.iter_mut().for_each(|d| *d = -*d);
        if dot(&dir, &cur.g) >= 0.0 {
            // lost descent: restart from steepest descent
            hinv = identity(n);
            scaled = false;
            dir = cur.g.iter().map(|g| -g).collect();
        }
        let first_step = if scaled {
            1.0
        } else {
            (1.0 / norm(&cur.g)).min(1.0)
        };
        let searched = line_search(&mut objective, &cur, &dir, first_step, settings, &mut evals)?;
        let next = match searched {
            Some(p) => p,
            None if scaled => {
                // retry once along steepest descent with a fresh Hessian
                hinv = identity(n);
                scaled = false;
                let sd: Vec<f64> = cur.g.iter().map(|g| -g).collect();
                let step = (1.0 / norm(&cur.g)).min(1.0);
                match line_search(&mut objective, &cur, &sd, step, settings, &mut evals)? {
                    Some(p) => p,
                    None => return Ok(finish(cur, iter - 1, evals, BfgsStop::LineSearchFailed)),
                }
            }
            None => return Ok(finish(cur, iter - 1, evals, BfgsStop::LineSearchFailed)),
        };

        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&cur.g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if !scaled {
                let gamma = sy / dot(&y, &y);
                hinv.iter_mut().for_each(|h| *h *= gamma);
                scaled = true;
            }
            bfgs_update(&mut hinv, &s, &y, sy, n);
        }
        cur = next;
        if accept(iter, cur.f, norm(&cur.g), &cur.aux) {
            return Ok(finish(cur, iter, evals, BfgsStop::Goal));
        }
    }
    let iters = settings.max_iters;
    Ok(finish(cur, iters, evals, BfgsStop::MaxIters))
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn mat_vec(m: &[f64], v: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| dot(&m[i * n..(i + 1) * n], v)).collect()
}

/// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64, n: usize) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y, n);
    let yhy = dot(y, &hy);
    let coef = rho * rho * yhy + rho;
    for i in 0..n {
        let row = &mut h[i * n..(i + 1) * n];
        for j in 0..n {
            row[j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

/// Strong-Wolfe line search (bracketing then zoom with safeguarded cubic
/// interpolation). Returns `None` if no acceptable point was found.
fn line_search<A, F>(
    objective: &mut F,
    start: &Point<A>,
    dir: &[f64],
    first_step: f64,
    settings: &BfgsSettings,
    evals: &mut usize,
) -> Result<Option<Point<A>>>
where
    A: Clone,
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>, A)>,
{
    let f0 = start.f;
    let d0 = dot(&start.g, dir);
    let mut eval = |alpha: f64, evals: &mut usize| -> Result<(Point<A>, f64)> {
        let x: Vec<f64> = start
            .x
            .iter()
            .zip(dir)
            .map(|(x, d)| x + alpha * d)
            .collect();
        *evals += 1;
        let (f, g, aux) = objective(&x)?;
        let d = dot(&g, dir);
        Ok((Point { x, f, g, aux }, d))
    };

    let mut prev_alpha = 0.0;
    let mut prev_f = f0;
    let mut prev_d = d0;
    let mut alpha = first_step;
    let mut count = 0;
    let mut best: Option<Point<A>> = None;

    loop {
        if count >= settings.max_line_evals {
            return Ok(best);
        }
        count += 1;
        let (p, d) = eval(alpha, evals)?;
        let armijo = p.f <= f0 + settings.c1 * alpha * d0;
        if armijo && best.as_ref().is_none_or(|b| p.f < b.f) {
            best = Some(Point {
                x: p.x.clone(),
                f: p.f,
                g: p.g.clone(),
                aux: p.aux.clone(),
            });
        }
        if !p.f.is_finite() || !armijo || (count > 1 && p.f >= prev_f) {
            let hi_f = if p.f.is_finite() { p.f } else { f64::MAX };
            return zoom(
                &mut eval,
                f0,
                d0,
                (prev_alpha, prev_f, prev_d),
                (alpha, hi_f, d),
                settings,
                evals,
                count,
                best,
            );
        }
        if d.abs() <= -settings.c2 * d0 {
            return Ok(Some(p));
        }
        if d >= 0.0 {
            return zoom(
                &mut eval,
                f0,
                d0,
                (alpha, p.f, d),
                (prev_alpha, prev_f, prev_d),
                settings,
                evals,
                count,
                best,
            );
        }
        prev_alpha = alpha;
        prev_f = p.f;
        prev_d = d;
        alpha *= 2.0;
    }
}

#[allow(clippy::too_many_arguments)]
fn zoom<A, E>(
    eval: &mut E,
    f0: f64,
    d0: f64,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
    settings: &BfgsSettings,
    evals: &mut usize,
    mut count: usize,
    mut best: Option<Point<A>>,
) -> Result<Option<Point<A>>>
where
    A: Clone,
    E: FnMut(f64, &mut usize) -> Result<(Point<A>, f64)>,
{
    while count < settings.max_line_evals {
        count += 1;
        let alpha = interpolate(lo, hi);
        let (p, d) = eval(alpha, evals)?;
        let armijo = p.f <= f0 + settings.c1 * alpha * d0;
        if armijo && best.as_ref().is_none_or(|b| p.f < b.f) {
            best = Some(Point {
                x: p.x.clone(),
                f: p.f,
                g: p.g.clone(),
                aux: p.aux.clone(),
            });
        }
        if !armijo || p.f >= lo.1 {
            hi = (alpha, p.f, d);
        } else {
            if d.abs() <= -settings.c2 * d0 {
                return Ok(Some(p));
            }
            if d * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (alpha, p.f, d);
        }
        if (hi.0 - lo.0).abs() < 1e-16 * lo.0.abs().max(1.0) {
            break;
        }
    }
    // Armijo-only fallback keeps the cost monotone
    Ok(best)
}

/// Cubic interpolation between two bracket ends, safeguarded to the inner
/// 80% of the bracket.
fn interpolate(a: (f64, f64, f64), b: (f64, f64, f64)) -> f64 {
    let (x0, f0, d0) = a;
    let (x1, f1, d1) = b;
    let lo = x0.min(x1);
    let hi = x0.max(x1);
    let width = hi - lo;
    let fallback = 0.5 * (x0 + x1);
    if !(f1.is_finite() && d1.is_finite()) || width == 0.0 {
        return fallback;
    }
    let d1c = d0 + d1 - 3.0 * (f0 - f1) / (x0 - x1);
    let disc = d1c * d1c - d0 * d1;
    if disc < 0.0 {
        return fallback;
    }
    let d2 = (x1 - x0).signum() * disc.sqrt();
    let x = x1 - (x1 - x0) * (d1 + d2 - d1c) / (d1 - d0 + 2.0 * d2);
    if x.is_finite() && x > lo + 0.1 * width && x < hi - 0.1 * width {
        x
    } else {
        fallback
    }
}
