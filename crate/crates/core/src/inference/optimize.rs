//! BFGS ascent with a backtracking line search.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PottsError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimOptions {
    /// Stop when the gradient max-norm falls below this.
    pub grad_tol: f64,
    pub max_evaluations: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            max_evaluations: 500,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub evaluations: usize,
}

fn max_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Maximizes `f`, which returns the value and gradient at a point.
///
/// Fails with [`PottsError::NonConvergence`] (carrying the best iterate) when
/// the evaluation budget runs out or no ascent step can be found.
pub fn maximize<F>(mut f: F, x0: &[f64], opts: &OptimOptions) -> Result<OptimResult>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, g) = f(x.as_slice());
    let mut g = DVector::from_vec(g);
    let mut evals = 1;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(PottsError::NonConvergence {
            evaluations: evals,
            grad_norm: f64::INFINITY,
            best: x0.to_vec(),
        });
    }

    let initial_scale = |g: &DVector<f64>| 1.0 / max_norm(g).max(1.0);
    let mut h = DMatrix::identity(n, n) * initial_scale(&g);
    let mut fresh = true;

    loop {
        let gnorm = max_norm(&g);
        if gnorm < opts.grad_tol {
            return Ok(OptimResult {
                x: x.as_slice().to_vec(),
                value: fx,
                grad_norm: gnorm,
                evaluations: evals,
            });
        }
        if evals >= opts.max_evaluations {
            return Err(PottsError::NonConvergence {
                evaluations: evals,
                grad_norm: gnorm,
                best: x.as_slice().to_vec(),
            });
        }

        let mut d = &h * &g;
        let mut slope = g.dot(&d);
        if slope <= 0.0 || !slope.is_finite() {
            h = DMatrix::identity(n, n) * initial_scale(&g);
            fresh = true;
            d = &h * &g;
            slope = g.dot(&d);
        }

        // Backtracking on the Armijo condition. Near the optimum the value may
        // stop changing at double precision; a step that does not decrease the
        // value but shrinks the gradient is then accepted.
        let mut t = 1.0;
        let mut accepted = None;
        while evals < opts.max_evaluations {
            let xn = &x + &d * t;
            let (fnew, gnew) = f(xn.as_slice());
            evals += 1;
            let gnew = DVector::from_vec(gnew);
            if fnew.is_finite() && gnew.iter().all(|v| v.is_finite()) {
                let armijo = fnew >= fx + 1e-4 * t * slope;
                let flat = fnew >= fx - 1e-13 * fx.abs().max(1.0) && max_norm(&gnew) < gnorm;
                if armijo || flat {
                    accepted = Some((xn, fnew, gnew));
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-20 {
                break;
            }
        }

        let Some((xn, fnew, gnew)) = accepted else {
            if !fresh {
                h = DMatrix::identity(n, n) * initial_scale(&g);
                fresh = true;
                continue;
            }
            return Err(PottsError::NonConvergence {
                evaluations: evals,
                grad_norm: gnorm,
                best: x.as_slice().to_vec(),
            });
        };

        let s = &xn - &x;
        // Curvature pair of the minimization problem -f.
        let y = &g - &gnew;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if fresh {
                h = DMatrix::identity(n, n) * (sy / y.dot(&y));
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            fresh = false;
        }
        x = xn;
        fx = fnew;
        g = gnew;
    }
}
