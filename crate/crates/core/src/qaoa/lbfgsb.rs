//! Limited-memory BFGS on a box, with projected steps and a backtracking
//! Armijo line search along the projected path.

use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxOptions {
    pub lower: f64,
    pub upper: f64,
    pub max_iterations: usize,
    /// Converged when every projected-gradient component is below this.
    pub gradient_tolerance: f64,
    /// Stored correction pairs.
    pub memory: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// False when the iteration cap was hit or no descent step was found.
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimize `f` (value and gradient) over `[lower, upper]^n` from `x0`. The
/// returned value never exceeds `f(x0)` after clamping `x0` into the box.
pub fn minimize_box<E>(
    mut f: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>), E>,
    x0: &[f64],
    opts: &BoxOptions,
) -> Result<BoxResult, E> {
    let (lo, hi) = (opts.lower, opts.upper);
    let clamp = |v: f64| v.clamp(lo, hi);
    let mut x: Vec<f64> = x0.iter().map(|&v| clamp(v)).collect();
    let (mut fx, mut g) = f(&x)?;
    let mut evaluations = 1;
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let done = |x: Vec<f64>, f: f64, iterations, evaluations, converged| {
        Ok(BoxResult { x, f, iterations, evaluations, converged })
    };
    for iter in 0..opts.max_iterations {
        let projected = x.iter().zip(&g).map(|(&xi, &gi)| (clamp(xi - gi) - xi).abs()).fold(0.0, f64::max);
        if projected < opts.gradient_tolerance {
            return done(x, fx, iter, evaluations, true);
        }
        // coordinates pinned at a bound with the gradient pushing outward
        let free: Vec<bool> = x.iter().zip(&g).map(|(&xi, &gi)| !((xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0))).collect();
        let masked = |v: &[f64]| -> Vec<f64> { v.iter().zip(&free).map(|(&a, &k)| if k { a } else { 0.0 }).collect() };
        let gm = masked(&g);
        let mut d: Vec<f64> = if memory.is_empty() {
            let scale = gm.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            gm.iter().map(|v| -v / scale).collect()
        } else {
            let mut q = gm.clone();
            let mut alphas = Vec::with_capacity(memory.len());
            for (s, y, rho) in memory.iter().rev() {
                let a = rho * dot(s, &q);
                for (qi, yi) in q.iter_mut().zip(y) {
                    *qi -= a * yi;
                }
                alphas.push(a);
            }
            let (s, y, _) = memory.back().expect("non-empty");
            let h0 = dot(s, y) / dot(y, y);
            let mut r: Vec<f64> = q.iter().map(|v| h0 * v).collect();
            for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
                let b = rho * dot(y, &r);
                for (ri, si) in r.iter_mut().zip(s) {
                    *ri += si * (a - b);
                }
            }
            masked(&r).into_iter().map(|v| -v).collect()
        };
        if dot(&d, &gm) >= 0.0 {
            memory.clear();
            let scale = gm.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            d = gm.iter().map(|v| -v / scale).collect();
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| clamp(xi + alpha * di)).collect();
            let step: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            if step.iter().all(|&s| s == 0.0) {
                break;
            }
            let (fnew, gnew) = f(&xn)?;
            evaluations += 1;
            if fnew <= fx + 1e-4 * dot(&g, &step) {
                accepted = Some((xn, step, fnew, gnew));
                break;
            }
            alpha *= 0.5;
        }
        let Some((xn, s, fnew, gnew)) = accepted else {
            if memory.is_empty() {
                return done(x, fx, iter, evaluations, false);
            }
            memory.clear();
            continue;
        };
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).max(f64::MIN_POSITIVE) {
            if memory.len() == opts.memory.max(1) {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        fx = fnew;
        g = gnew;
    }
    let projected = x.iter().zip(&g).map(|(&xi, &gi)| (clamp(xi - gi) - xi).abs()).fold(0.0, f64::max);
    let converged = projected < opts.gradient_tolerance;
    done(x, fx, opts.max_iterations, evaluations, converged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> BoxOptions {
        BoxOptions { lower: -10.0, upper: 10.0, max_iterations: 200, gradient_tolerance: 1e-10, memory: 10 }
    }

    #[test]
    fn quadratic_bowl() {
        let centre = [1.5, -2.0, 0.25];
        let weights = [1.0, 10.0, 100.0];
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>), ()> {
            let v = (0..3).map(|i| weights[i] * (x[i] - centre[i]).powi(2)).sum();
            let g = (0..3).map(|i| 2.0 * weights[i] * (x[i] - centre[i])).collect();
            Ok((v, g))
        };
        let r = minimize_box(f, &[5.0, 5.0, 5.0], &opts()).unwrap();
        assert!(r.converged);
        for i in 0..3 {
            assert!((r.x[i] - centre[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn active_bound() {
        // minimum at x = -3 lies outside [0, 4]
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>), ()> { Ok(((x[0] + 3.0).powi(2) + (x[1] - 1.0).powi(2), vec![2.0 * (x[0] + 3.0), 2.0 * (x[1] - 1.0)])) };
        let r = minimize_box(f, &[2.0, 3.0], &BoxOptions { lower: 0.0, upper: 4.0, ..opts() }).unwrap();
        assert!(r.converged);
        assert_eq!(r.x[0], 0.0);
        assert!((r.x[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn start_at_minimum_is_unchanged() {
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>), ()> { Ok((x[0] * x[0], vec![2.0 * x[0]])) };
        let r = minimize_box(f, &[0.0], &opts()).unwrap();
        assert_eq!((r.x.clone(), r.iterations, r.converged), (vec![0.0], 0, true));
    }

    #[test]
    fn iteration_cap_is_flagged() {
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>), ()> {
            let (a, b) = (x[0], x[1]);
            Ok(((1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2), vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]))
        };
        let r = minimize_box(f, &[-1.2, 1.0], &BoxOptions { max_iterations: 3, ..opts() }).unwrap();
        assert!(!r.converged);
        assert!(r.f < 24.2);
        let r = minimize_box(f, &[-1.2, 1.0], &opts()).unwrap();
        assert!(r.converged && (r.x[0] - 1.0).abs() < 1e-6);
    }
}
