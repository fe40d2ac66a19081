//! Derivative-free and quasi-Newton minimization of a scalar objective over
//! an unconstrained parameter vector. Fitting alternates Nelder-Mead
//! polishing with BFGS steps (finite-difference gradients) until the
//! objective stops improving.

/// Result of one optimizer run.
#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub n_evals: usize,
    pub converged: bool,
}

/// Nelder-Mead simplex minimization.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    initial_step: f64,
    tol: f64,
    max_iter: usize,
) -> OptimResult {
    let n = x0.len();
    let mut n_evals = 0usize;
    let mut eval = |x: &[f64], n_evals: &mut usize| {
        *n_evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    // initial simplex: x0 plus one perturbed vertex per coordinate
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut n_evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if x[i].abs() > 1.0 { initial_step * x[i].abs() } else { initial_step };
        let v = eval(&x, &mut n_evals);
        simplex.push((x, v));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= tol * (1.0 + best.abs()) {
            converged = true;
            break;
        }
        // centroid of all but the worst vertex
        let mut c = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (ci, xi) in c.iter_mut().zip(x) {
                *ci += xi / n as f64;
            }
        }
        let worst_x = simplex[n].0.clone();
        let reflect: Vec<f64> = c.iter().zip(&worst_x).map(|(ci, wi)| ci + alpha * (ci - wi)).collect();
        let fr = eval(&reflect, &mut n_evals);
        if fr < simplex[0].1 {
            // try expanding further along the same direction
            let expand: Vec<f64> = c.iter().zip(&worst_x).map(|(ci, wi)| ci + gamma * (ci - wi)).collect();
            let fe = eval(&expand, &mut n_evals);
            simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let contract: Vec<f64> = c.iter().zip(&worst_x).map(|(ci, wi)| ci + rho * (wi - ci)).collect();
            let fc = eval(&contract, &mut n_evals);
            if fc < simplex[n].1 {
                simplex[n] = (contract, fc);
            } else {
                // shrink toward the best vertex
                let best_x = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for (xi, bi) in entry.0.iter_mut().zip(&best_x) {
                        *xi = bi + sigma * (*xi - bi);
                    }
                    entry.1 = eval(&entry.0.clone(), &mut n_evals);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let (x, value) = simplex.swap_remove(0);
    OptimResult {
        x,
        value,
        n_evals,
        converged,
    }
}

/// Central finite-difference gradient with relative steps.
pub fn fd_gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], rel_step: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = (rel_step * x[i].abs()).max(1e-6);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// BFGS with backtracking Armijo line search and finite-difference gradients.
pub fn bfgs<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> OptimResult {
    let n = x0.len();
    let mut n_evals = 0usize;
    let mut eval = |x: &[f64], n_evals: &mut usize| {
        *n_evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut x = x0.to_vec();
    let mut fx = eval(&x, &mut n_evals);
    let grad_step = 1e-4;
    let mut g = {
        let mut wrapped = |y: &[f64]| eval(y, &mut n_evals);
        fd_gradient(&mut wrapped, &x, grad_step)
    };
    // inverse Hessian approximation, started at the identity
    let mut h = vec![vec![0.0; n]; n];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut converged = false;

    for _ in 0..max_iter {
        if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
            break;
        }
        // search direction d = -H g
        let d: Vec<f64> = (0..n)
            .map(|i| -(0..n).map(|j| h[i][j] * g[j]).sum::<f64>())
            .collect();
        let slope: f64 = d.iter().zip(&g).map(|(di, gi)| di * gi).sum();
        if slope >= 0.0 {
            // not a descent direction; reset the approximation
            for (i, row) in h.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = if i == j { 1.0 } else { 0.0 };
                }
            }
            continue;
        }
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm <= tol * (1.0 + fx.abs()) {
            converged = true;
            break;
        }

        // backtracking line search
        let mut step = 1.0;
        let c1 = 1e-4;
        let mut x_new = x.clone();
        let mut f_new = f64::INFINITY;
        let mut ok = false;
        for _ in 0..40 {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            f_new = eval(&x_new, &mut n_evals);
            if f_new <= fx + c1 * step * slope {
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if !ok || f_new >= fx {
            converged = (fx - f_new).abs() <= tol * (1.0 + fx.abs());
            break;
        }

        let g_new = {
            let mut wrapped = |y: &[f64]| eval(y, &mut n_evals);
            fd_gradient(&mut wrapped, &x_new, grad_step)
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            // BFGS inverse update: H <- (I - s y^T / sy) H (I - y s^T / sy) + s s^T / sy
            let hy: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| h[i][j] * yv[j]).sum::<f64>())
                .collect();
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += ((sy + yhy) * s[i] * s[j]) / (sy * sy)
                        - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }
        let f_prev = fx;
        x = x_new;
        fx = f_new;
        g = g_new;
        if (f_prev - fx).abs() <= tol * (1.0 + fx.abs()) {
            converged = true;
            break;
        }
    }
    OptimResult {
        x,
        value: fx,
        n_evals,
        converged,
    }
}

/// Alternate Nelder-Mead and BFGS rounds until neither improves the
/// objective by more than `tol` (relative), or `max_rounds` is hit.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    tol: f64,
    max_rounds: usize,
) -> OptimResult {
    let mut x = x0.to_vec();
    let mut value = f64::INFINITY;
    let mut n_evals = 0usize;
    let mut converged = false;
    for round in 0..max_rounds {
        let step = if round == 0 { 0.25 } else { 0.05 };
        let nm = nelder_mead(&mut f, &x, step, tol, 200 * x.len().max(1));
        n_evals += nm.n_evals;
        let qb = bfgs(&mut f, &nm.x, tol, 100);
        n_evals += qb.n_evals;
        let (bx, bv) = if qb.value < nm.value { (qb.x, qb.value) } else { (nm.x, nm.value) };
        let improved = value - bv;
        if bv < value {
            x = bx;
            value = bv;
        }
        if round > 0 && improved <= tol * (1.0 + value.abs()) {
            converged = true;
            break;
        }
    }
    OptimResult {
        x,
        value,
        n_evals,
        converged,
    }
}
