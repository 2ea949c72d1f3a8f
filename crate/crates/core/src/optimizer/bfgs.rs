//! Unconstrained BFGS with central-difference gradients and Armijo
//! backtracking.

/// Stopping and differencing parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub gradient_step: f64,
    /// Stop once `(f_k − f_{k+1}) / max(|f_k|, |f_{k+1}|, 1)` falls below this.
    pub rel_tol: f64,
    pub max_iterations: usize,
    /// Length of the first step along the steepest-descent direction.
    pub initial_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            gradient_step: 1e-6,
            rel_tol: 1e-6,
            max_iterations: 200,
            initial_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    calls: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.calls += 1;
        (self.f)(x)
    }

    fn gradient(&mut self, x: &[f64], h: f64, out: &mut [f64]) {
        let mut probe = x.to_vec();
        for i in 0..x.len() {
            probe[i] = x[i] + h;
            let up = self.call(&probe);
            probe[i] = x[i] - h;
            let down = self.call(&probe);
            probe[i] = x[i];
            out[i] = (up - down) / (2.0 * h);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` from `x0`. Accepted steps always lower `f`, so the result
/// is never worse than the starting point.
pub fn minimize(f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &BfgsOptions) -> Minimum {
    let d = x0.len();
    let mut f = Counted { f, calls: 0 };
    let mut x = x0.to_vec();
    let mut fx = f.call(&x);
    let mut g = vec![0.0; d];
    f.gradient(&x, opts.gradient_step, &mut g);

    // inverse Hessian approximation, row-major
    let mut h = vec![0.0; d * d];
    let mut identity_scale = {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm > 0.0 {
            opts.initial_step / gnorm
        } else {
            1.0
        }
    };
    let reset = |h: &mut Vec<f64>, scale: f64| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..d {
            h[i * d + i] = scale;
        }
    };
    reset(&mut h, identity_scale);
    let mut fresh = true;

    let mut dir = vec![0.0; d];
    let mut trial = vec![0.0; d];
    let mut g_new = vec![0.0; d];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        if g.iter().all(|v| v.abs() < 1e-14) {
            converged = true;
            break;
        }
        for i in 0..d {
            dir[i] = -dot(&h[i * d..(i + 1) * d], &g);
        }
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            reset(&mut h, identity_scale);
            fresh = true;
            dir.iter_mut().zip(&g).for_each(|(di, gi)| *di = -identity_scale * gi);
            slope = dot(&g, &dir);
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-10 {
            for i in 0..d {
                trial[i] = x[i] + alpha * dir[i];
            }
            let ft = f.call(&trial);
            if ft < fx && ft <= fx + 1e-4 * alpha * slope {
                accepted = Some(ft);
                break;
            }
            alpha *= 0.5;
        }
        let Some(f_new) = accepted else {
            if fresh {
                // no descent even along the gradient: stationary to working precision
                converged = true;
                break;
            }
            reset(&mut h, identity_scale);
            fresh = true;
            continue;
        };
        iterations += 1;

        f.gradient(&trial, opts.gradient_step, &mut g_new);
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 {
            if fresh {
                identity_scale = sy / dot(&y, &y);
                reset(&mut h, identity_scale);
                fresh = false;
            }
            let hy: Vec<f64> = (0..d).map(|i| dot(&h[i * d..(i + 1) * d], &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..d {
                for j in 0..d {
                    h[i * d + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }

        let rel = (fx - f_new) / fx.abs().max(f_new.abs()).max(1.0);
        x.copy_from_slice(&trial);
        g.copy_from_slice(&g_new);
        fx = f_new;
        if rel < opts.rel_tol {
            converged = true;
            break;
        }
    }

    Minimum {
        x,
        value: fx,
        iterations,
        evaluations: f.calls,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2);
        let m = minimize(f, &[0.0, 0.0], &BfgsOptions { rel_tol: 1e-14, ..Default::default() });
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5, "{:?}", m.x);
        assert!((m.x[1] + 2.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = BfgsOptions {
            rel_tol: 1e-15,
            max_iterations: 2000,
            ..Default::default()
        };
        let m = minimize(f, &[-1.2, 1.0], &opts);
        assert!((m.x[0] - 1.0).abs() < 1e-3, "{:?}", m);
        assert!((m.x[1] - 1.0).abs() < 1e-3, "{:?}", m);
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64]| (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + 0.1 * x[0];
        for start in [[0.3, 0.1], [2.0, 5.0], [4.4, 1.9]] {
            let m = minimize(f, &start, &BfgsOptions::default());
            assert!(m.value <= f(&start));
        }
    }

    #[test]
    fn stationary_start() {
        let m = minimize(|_: &[f64]| 2.5, &[1.0, 1.0], &BfgsOptions::default());
        assert!(m.converged);
        assert_eq!(m.value, 2.5);
        assert_eq!(m.x, vec![1.0, 1.0]);
    }
}
