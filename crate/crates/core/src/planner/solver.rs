//! Bound-constrained augmented Lagrangian method for
//!
//! ```text
//! min f(y)  s.t.  c(y) = 0,  g(y) >= 0,  l <= y <= u
//! ```
//!
//! Inner subproblems are solved by a projected Newton method with an
//! epsilon-active set and Armijo search along the projection arc.

use nalgebra::{DMatrix, DVector};

/// Values and first derivatives at one point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub objective: f64,
    pub gradient: DVector<f64>,
    pub eq: DVector<f64>,
    pub eq_jacobian: DMatrix<f64>,
    pub ineq: DVector<f64>,
    pub ineq_jacobian: DMatrix<f64>,
}

pub trait NonlinearProgram {
    fn lower(&self) -> &DVector<f64>;
    fn upper(&self) -> &DVector<f64>;
    /// `(f, c, g)` without derivatives.
    fn values(&self, y: &DVector<f64>) -> (f64, DVector<f64>, DVector<f64>);
    fn evaluate(&self, y: &DVector<f64>) -> Evaluation;
    /// Adds `hess f + sum w_eq[i] hess c_i + sum w_ineq[j] hess g_j` to `h`.
    fn add_hessian(&self, y: &DVector<f64>, w_eq: &DVector<f64>, w_ineq: &DVector<f64>, h: &mut DMatrix<f64>);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlmOptions {
    /// Max constraint violation.
    pub tol_con: f64,
    /// Max projected gradient of the Lagrangian.
    pub tol_kkt: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub initial_penalty: f64,
    pub max_penalty: f64,
    /// Stop at the first point within `tol_con`, ignoring stationarity.
    /// For pure feasibility problems, where any feasible point will do.
    pub stop_when_feasible: bool,
}

impl Default for AlmOptions {
    fn default() -> Self {
        AlmOptions {
            tol_con: 1e-9,
            tol_kkt: 1e-6,
            max_outer: 60,
            max_inner: 300,
            initial_penalty: 10.0,
            max_penalty: 1e10,
            stop_when_feasible: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlmReport {
    pub y: DVector<f64>,
    pub objective: f64,
    pub eq_multipliers: DVector<f64>,
    pub ineq_multipliers: DVector<f64>,
    pub violation: f64,
    pub kkt: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub penalty: f64,
    pub converged: bool,
}

fn project(y: &DVector<f64>, lo: &DVector<f64>, hi: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(y.len(), |i, _| y[i].clamp(lo[i], hi[i]))
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

struct Multipliers<'a> {
    lambda: &'a DVector<f64>,
    nu: &'a DVector<f64>,
    mu: f64,
}

impl Multipliers<'_> {
    fn merit(&self, f: f64, c: &DVector<f64>, g: &DVector<f64>) -> f64 {
        let mu = self.mu;
        let eq: f64 = c.iter().zip(self.lambda.iter()).map(|(c, l)| -l * c + 0.5 * mu * c * c).sum();
        let ineq: f64 = g
            .iter()
            .zip(self.nu.iter())
            .map(|(g, n)| ((n - mu * g).max(0.0).powi(2) - n * n) / (2.0 * mu))
            .sum();
        f + eq + ineq
    }

    fn eq_weights(&self, c: &DVector<f64>) -> DVector<f64> {
        c * self.mu - self.lambda
    }

    /// Negated shifted inequality multipliers `-(nu - mu g)_+`.
    fn ineq_weights(&self, g: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(g.len(), |j, _| -(self.nu[j] - self.mu * g[j]).max(0.0))
    }

    fn gradient(&self, e: &Evaluation) -> DVector<f64> {
        let mut grad = e.gradient.clone();
        if !e.eq.is_empty() {
            grad += e.eq_jacobian.tr_mul(&self.eq_weights(&e.eq));
        }
        if !e.ineq.is_empty() {
            grad += e.ineq_jacobian.tr_mul(&self.ineq_weights(&e.ineq));
        }
        grad
    }
}

/// Newton step restricted to `free`, with a diagonal shift grown until the
/// reduced Hessian factors.
fn newton_step(h: &DMatrix<f64>, grad: &DVector<f64>, free: &[usize]) -> Option<DVector<f64>> {
    let nf = free.len();
    let hff = DMatrix::from_fn(nf, nf, |a, b| h[(free[a], free[b])]);
    let gf = DVector::from_fn(nf, |a, _| grad[free[a]]);
    let scale = (0..nf).fold(0.0f64, |s, a| s.max(hff[(a, a)].abs())).max(1.0);
    let mut shift = 0.0;
    loop {
        let mut m = hff.clone();
        for a in 0..nf {
            m[(a, a)] += shift;
        }
        if let Some(chol) = m.cholesky() {
            return Some(-chol.solve(&gf));
        }
        shift = if shift == 0.0 { 1e-10 * scale } else { shift * 10.0 };
        if shift > 1e10 * scale {
            return None;
        }
    }
}

/// Projected Newton on the augmented Lagrangian. Returns iterations used.
fn inner_solve<P: NonlinearProgram>(
    nlp: &P,
    y: &mut DVector<f64>,
    mult: &Multipliers,
    tol: f64,
    max_iter: usize,
) -> usize {
    let lo = nlp.lower();
    let hi = nlp.upper();
    let n = y.len();
    for iter in 0..max_iter {
        let e = nlp.evaluate(y);
        let merit = mult.merit(e.objective, &e.eq, &e.ineq);
        let grad = mult.gradient(&e);
        let pg = &*y - project(&(&*y - &grad), lo, hi);
        let pg_norm = inf_norm(&pg);
        if pg_norm <= tol || !merit.is_finite() {
            return iter;
        }
        let eps = pg_norm.min(1e-3);
        let free: Vec<usize> = (0..n)
            .filter(|&i| {
                let fixed = hi[i] - lo[i] <= 1e-14;
                let at_lo = y[i] <= lo[i] + eps && grad[i] > 0.0;
                let at_hi = y[i] >= hi[i] - eps && grad[i] < 0.0;
                !(fixed || at_lo || at_hi)
            })
            .collect();

        let mut h = DMatrix::zeros(n, n);
        let w_eq = mult.eq_weights(&e.eq);
        let w_in = mult.ineq_weights(&e.ineq);
        nlp.add_hessian(y, &w_eq, &w_in, &mut h);
        if !e.eq.is_empty() {
            h += e.eq_jacobian.tr_mul(&e.eq_jacobian) * mult.mu;
        }
        for j in 0..e.ineq.len() {
            if w_in[j] < 0.0 {
                let row = e.ineq_jacobian.row(j);
                h += row.tr_mul(&row) * mult.mu;
            }
        }

        // Diagonally scaled gradient step on the active set.
        let mut d = DVector::zeros(n);
        for i in 0..n {
            if hi[i] - lo[i] > 1e-14 {
                d[i] = -grad[i] / h[(i, i)].max(1.0);
            }
        }
        // Newton step on the free set; free variables sitting on a bound that
        // the step would push outward join the active set and the step is redone.
        let mut free = free;
        for _ in 0..8 {
            if free.is_empty() {
                break;
            }
            let Some(step) = newton_step(&h, &grad, &free) else {
                break;
            };
            let blocked: Vec<usize> = free
                .iter()
                .enumerate()
                .filter(|&(a, &i)| (y[i] <= lo[i] && step[a] < 0.0) || (y[i] >= hi[i] && step[a] > 0.0))
                .map(|(_, &i)| i)
                .collect();
            if blocked.is_empty() {
                for (a, &i) in free.iter().enumerate() {
                    d[i] = step[a];
                }
                break;
            }
            free.retain(|i| !blocked.contains(i));
        }

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = project(&(&*y + &d * t), lo, hi);
            let (f, c, g) = nlp.values(&trial);
            let m = mult.merit(f, &c, &g);
            let decrease = grad.dot(&(&trial - &*y));
            if m.is_finite() && m <= merit + 1e-4 * decrease {
                *y = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Fall back to a short projected gradient step.
            let mut t = 1.0;
            for _ in 0..60 {
                let trial = project(&(&*y - &grad * t), lo, hi);
                let (f, c, g) = nlp.values(&trial);
                let m = mult.merit(f, &c, &g);
                if m.is_finite() && m <= merit + 1e-4 * grad.dot(&(&trial - &*y)) {
                    *y = trial;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                return iter + 1;
            }
        }
    }
    max_iter
}

fn measures<P: NonlinearProgram>(nlp: &P, y: &DVector<f64>, lambda: &DVector<f64>, nu: &DVector<f64>) -> (f64, f64) {
    let e = nlp.evaluate(y);
    let mut grad = e.gradient.clone();
    if !e.eq.is_empty() {
        grad -= e.eq_jacobian.tr_mul(lambda);
    }
    if !e.ineq.is_empty() {
        grad -= e.ineq_jacobian.tr_mul(nu);
    }
    let pg = y - project(&(y - &grad), nlp.lower(), nlp.upper());
    let mut viol = inf_norm(&e.eq);
    let mut comp = 0.0f64;
    for j in 0..e.ineq.len() {
        viol = viol.max((-e.ineq[j]).max(0.0));
        comp = comp.max(e.ineq[j].min(nu[j]).abs());
    }
    (viol, inf_norm(&pg).max(comp))
}

/// Runs the method from `y0`. The report always holds the last iterate; check `converged`.
pub fn solve<P: NonlinearProgram>(nlp: &P, y0: &DVector<f64>, opts: &AlmOptions) -> AlmReport {
    let mut y = project(y0, nlp.lower(), nlp.upper());
    let (_, c0, g0) = nlp.values(&y);
    let mut lambda = DVector::zeros(c0.len());
    let mut nu = DVector::zeros(g0.len());
    let mut mu = opts.initial_penalty;
    let mut omega = 1.0 / mu;
    let mut eta = 1.0 / mu.powf(0.1);
    let mut inner_total = 0;
    let (mut viol, mut kkt) = (f64::INFINITY, f64::INFINITY);

    for outer in 0..opts.max_outer {
        let mult = Multipliers { lambda: &lambda, nu: &nu, mu };
        inner_total += inner_solve(nlp, &mut y, &mult, omega.max(0.1 * opts.tol_kkt), opts.max_inner);
        let (_, c, g) = nlp.values(&y);
        let new_lambda = &lambda - &c * mu;
        let new_nu = DVector::from_fn(g.len(), |j, _| (nu[j] - mu * g[j]).max(0.0));
        (viol, kkt) = measures(nlp, &y, &new_lambda, &new_nu);
        if viol <= opts.tol_con && (kkt <= opts.tol_kkt || opts.stop_when_feasible) {
            let (f, _, _) = nlp.values(&y);
            return AlmReport {
                y,
                objective: f,
                eq_multipliers: new_lambda,
                ineq_multipliers: new_nu,
                violation: viol,
                kkt,
                outer_iterations: outer + 1,
                inner_iterations: inner_total,
                penalty: mu,
                converged: true,
            };
        }
        if viol <= eta.max(opts.tol_con) {
            lambda = new_lambda;
            nu = new_nu;
            eta /= mu.powf(0.9);
            omega /= mu;
        } else if mu < opts.max_penalty {
            mu *= 10.0;
            eta = 1.0 / mu.powf(0.1);
            omega = 1.0 / mu;
        } else {
            lambda = new_lambda;
            nu = new_nu;
        }
    }
    let (f, _, _) = nlp.values(&y);
    AlmReport {
        y,
        objective: f,
        eq_multipliers: lambda,
        ineq_multipliers: nu,
        violation: viol,
        kkt,
        outer_iterations: opts.max_outer,
        inner_iterations: inner_total,
        penalty: mu,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Hock-Schittkowski 71 variant: min x0 x3 (x0+x1+x2) + x2
    /// s.t. x0 x1 x2 x3 >= 25, sum x^2 = 40, 1 <= x <= 5.
    struct Hs71 {
        lo: DVector<f64>,
        hi: DVector<f64>,
    }

    impl Hs71 {
        fn new() -> Self {
            Hs71 {
                lo: DVector::from_element(4, 1.0),
                hi: DVector::from_element(4, 5.0),
            }
        }
    }

    impl NonlinearProgram for Hs71 {
        fn lower(&self) -> &DVector<f64> {
            &self.lo
        }
        fn upper(&self) -> &DVector<f64> {
            &self.hi
        }
        fn values(&self, x: &DVector<f64>) -> (f64, DVector<f64>, DVector<f64>) {
            let f = x[0] * x[3] * (x[0] + x[1] + x[2]) + x[2];
            let c = DVector::from_element(1, x.norm_squared() - 40.0);
            let g = DVector::from_element(1, x[0] * x[1] * x[2] * x[3] - 25.0);
            (f, c, g)
        }
        fn evaluate(&self, x: &DVector<f64>) -> Evaluation {
            let (f, c, g) = self.values(x);
            let s = x[0] + x[1] + x[2];
            let gradient = DVector::from_vec(vec![
                x[3] * s + x[0] * x[3],
                x[0] * x[3],
                x[0] * x[3] + 1.0,
                x[0] * s,
            ]);
            let eq_jacobian = DMatrix::from_row_slice(1, 4, &[2.0 * x[0], 2.0 * x[1], 2.0 * x[2], 2.0 * x[3]]);
            let ineq_jacobian = DMatrix::from_row_slice(
                1,
                4,
                &[x[1] * x[2] * x[3], x[0] * x[2] * x[3], x[0] * x[1] * x[3], x[0] * x[1] * x[2]],
            );
            Evaluation {
                objective: f,
                gradient,
                eq: c,
                eq_jacobian,
                ineq: g,
                ineq_jacobian,
            }
        }
        fn add_hessian(&self, x: &DVector<f64>, w_eq: &DVector<f64>, w_in: &DVector<f64>, h: &mut DMatrix<f64>) {
            let hf = DMatrix::from_row_slice(
                4,
                4,
                &[
                    2.0 * x[3], x[3], x[3], 2.0 * x[0] + x[1] + x[2],
                    x[3], 0.0, 0.0, x[0],
                    x[3], 0.0, 0.0, x[0],
                    2.0 * x[0] + x[1] + x[2], x[0], x[0], 0.0,
                ],
            );
            let hg = DMatrix::from_row_slice(
                4,
                4,
                &[
                    0.0, x[2] * x[3], x[1] * x[3], x[1] * x[2],
                    x[2] * x[3], 0.0, x[0] * x[3], x[0] * x[2],
                    x[1] * x[3], x[0] * x[3], 0.0, x[0] * x[1],
                    x[1] * x[2], x[0] * x[2], x[0] * x[1], 0.0,
                ],
            );
            *h += hf + DMatrix::identity(4, 4) * (2.0 * w_eq[0]) + hg * w_in[0];
        }
    }

    #[test]
    fn solves_hs71() {
        let p = Hs71::new();
        let r = solve(&p, &DVector::from_vec(vec![1.0, 5.0, 5.0, 1.0]), &AlmOptions::default());
        assert!(r.converged, "{r:?}");
        let expect = [1.0, 4.742_999_64, 3.821_149_98, 1.379_408_29];
        for (y, e) in r.y.iter().zip(expect) {
            assert!((y - e).abs() < 1e-5, "{:?}", r.y);
        }
        assert!((r.objective - 17.014_017_3).abs() < 1e-5);
    }

    struct BoxQuadratic {
        lo: DVector<f64>,
        hi: DVector<f64>,
    }

    impl NonlinearProgram for BoxQuadratic {
        fn lower(&self) -> &DVector<f64> {
            &self.lo
        }
        fn upper(&self) -> &DVector<f64> {
            &self.hi
        }
        fn values(&self, x: &DVector<f64>) -> (f64, DVector<f64>, DVector<f64>) {
            ((x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2), DVector::zeros(0), DVector::zeros(0))
        }
        fn evaluate(&self, x: &DVector<f64>) -> Evaluation {
            let (f, c, g) = self.values(x);
            Evaluation {
                objective: f,
                gradient: DVector::from_vec(vec![2.0 * (x[0] - 3.0), 2.0 * (x[1] + 1.0)]),
                eq: c,
                eq_jacobian: DMatrix::zeros(0, 2),
                ineq: g,
                ineq_jacobian: DMatrix::zeros(0, 2),
            }
        }
        fn add_hessian(&self, _: &DVector<f64>, _: &DVector<f64>, _: &DVector<f64>, h: &mut DMatrix<f64>) {
            h[(0, 0)] += 2.0;
            h[(1, 1)] += 2.0;
        }
    }

    #[test]
    fn bounds_become_active() {
        let p = BoxQuadratic {
            lo: DVector::from_vec(vec![0.0, 0.0]),
            hi: DVector::from_vec(vec![1.0, 1.0]),
        };
        let r = solve(&p, &DVector::from_vec(vec![0.5, 0.5]), &AlmOptions::default());
        assert!(r.converged);
        assert_eq!(r.y.as_slice(), &[1.0, 0.0]);
    }
}
