//! Dense Levenberg-Marquardt with Marquardt diagonal scaling.

use nalgebra::{DMatrix, DVector};

use super::OptimizerOptions;

/// Why the optimizer stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Accepted step smaller than `tol_x` (relative to the parameter norm).
    StepTolerance,
    /// Objective decrease smaller than `tol_fun` (relative to the objective).
    FunctionTolerance,
    /// Objective or gradient is exactly zero.
    ExactMinimum,
    /// No damping level produced a decrease.
    NoFurtherDecrease,
    MaxIterations,
    MaxFunctionEvaluations,
}

impl Termination {
    pub fn converged(self) -> bool {
        !matches!(self, Self::MaxIterations | Self::MaxFunctionEvaluations)
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: DVector<f64>,
    pub cost: f64,
    pub initial_cost: f64,
    pub iterations: usize,
    pub function_evals: usize,
    pub termination: Termination,
}

/// Least-squares problem `min ‖r(x)‖²`.
pub trait LeastSquares {
    /// Residuals, or `None` where the model is undefined.
    fn residuals(&self, x: &DVector<f64>) -> Option<DVector<f64>>;
    fn residuals_and_jacobian(&self, x: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)>;
}

/// Minimize over the entries of `x` flagged in `free`; the rest stay fixed.
pub fn minimize<P: LeastSquares>(
    problem: &P,
    x0: DVector<f64>,
    free: &[bool],
    opts: &OptimizerOptions,
) -> Option<LmOutcome> {
    let idx: Vec<usize> = (0..x0.len()).filter(|&i| free[i]).collect();
    let nf = idx.len();
    let mut x = x0;
    let (mut r, mut jac) = problem.residuals_and_jacobian(&x)?;
    let mut evals = 1;
    let mut cost = r.norm_squared();
    let initial_cost = cost;
    let mut mu = 1e-3;

    let done = |x: DVector<f64>, cost, iterations, evals, termination| LmOutcome {
        x,
        cost,
        initial_cost,
        iterations,
        function_evals: evals,
        termination,
    };

    for iter in 0..opts.max_iter {
        let jf = DMatrix::from_fn(jac.nrows(), nf, |i, j| jac[(i, idx[j])]);
        let jtj = jf.tr_mul(&jf);
        let g = jf.tr_mul(&r);
        if cost == 0.0 || g.amax() == 0.0 {
            return Some(done(x, cost, iter, evals, Termination::ExactMinimum));
        }
        let diag_floor = 1e-12 * (0..nf).map(|i| jtj[(i, i)]).fold(0.0, f64::max);

        loop {
            if evals >= opts.max_fun_evals {
                return Some(done(x, cost, iter, evals, Termination::MaxFunctionEvaluations));
            }
            let mut lhs = jtj.clone();
            for i in 0..nf {
                lhs[(i, i)] += mu * jtj[(i, i)].max(diag_floor);
            }
            let step = match lhs.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    mu *= 10.0;
                    if mu > 1e16 {
                        return Some(done(x, cost, iter, evals, Termination::NoFurtherDecrease));
                    }
                    continue;
                }
            };
            let mut trial = x.clone();
            for (j, &i) in idx.iter().enumerate() {
                trial[i] += step[j];
            }
            evals += 1;
            let trial_cost = problem
                .residuals(&trial)
                .map(|r| r.norm_squared())
                .filter(|c| c.is_finite())
                .unwrap_or(f64::INFINITY);

            if trial_cost < cost {
                let x_norm = x.norm();
                let decrease = cost - trial_cost;
                let prev_cost = cost;
                x = trial;
                mu = (mu * 0.1).max(1e-15);
                let (r_new, j_new) = problem.residuals_and_jacobian(&x)?;
                evals += 1;
                r = r_new;
                jac = j_new;
                cost = r.norm_squared();
                if step.norm() <= opts.tol_x * (opts.tol_x + x_norm) {
                    return Some(done(x, cost, iter + 1, evals, Termination::StepTolerance));
                }
                if decrease <= opts.tol_fun * prev_cost.max(opts.tol_fun) {
                    return Some(done(x, cost, iter + 1, evals, Termination::FunctionTolerance));
                }
                break;
            }
            mu *= 10.0;
            if mu > 1e16 {
                return Some(done(x, cost, iter, evals, Termination::NoFurtherDecrease));
            }
        }
    }
    Some(done(x, cost, opts.max_iter, evals, Termination::MaxIterations))
}
