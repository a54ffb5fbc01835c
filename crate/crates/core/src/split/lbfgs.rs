//! Limited-memory BFGS with a strong Wolfe line search.
//!
//! Two-loop recursion with the usual `sᵀy / yᵀy` initial scaling; line search
//! is bracketing + zoom with safeguarded cubic interpolation.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy_slice, dot, norm};
use crate::report::TerminationReason;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbfgsConfig {
    /// Number of stored `(s, y)` pairs.
    pub memory: usize,
    /// Stop when `‖g‖ <= grad_tol · max(1, ‖g₀‖)`.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub c1: f64,
    pub c2: f64,
    /// Function evaluations allowed per line search.
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self { memory: 10, grad_tol: 1e-6, max_iter: 1000, c1: 1e-4, c2: 0.9, max_line_search: 40 }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 {
            return Err(Error::InvalidParameter("L-BFGS memory must be at least 1".into()));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Wolfe constants need 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("grad_tol must be non-negative, got {}", self.grad_tol)));
        }
        if self.max_line_search == 0 {
            return Err(Error::InvalidParameter("max_line_search must be at least 1".into()));
        }
        Ok(())
    }
}

/// State handed to the observer after the initial point and each accepted step.
pub struct IterationInfo<'a> {
    pub iter: usize,
    pub x: &'a [f64],
    pub value: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub reason: TerminationReason,
}

/// Minimizes a smooth function given as `f(x, grad_out) -> value`.
pub fn lbfgs_minimize<F, O>(mut f: F, x0: Vec<f64>, cfg: &LbfgsConfig, mut observer: O) -> Result<Minimum>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
    O: FnMut(&IterationInfo<'_>),
{
    cfg.validate()?;
    let dim = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; dim];
    let mut fx = f(&x, &mut g);
    let mut evaluations = 1;
    if !fx.is_finite() {
        return Err(Error::Numerical("objective is not finite at the starting point".into()));
    }
    let mut gnorm = norm(&g);
    let tol = cfg.grad_tol * gnorm.max(1.0);
    observer(&IterationInfo { iter: 0, x: &x, value: fx, grad_norm: gnorm });

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut reason = TerminationReason::MaxIterations;
    let mut iterations = 0;
    if gnorm <= tol {
        reason = TerminationReason::Converged;
    } else {
        let mut ls = LineSearch::new(dim);
        'outer: for iter in 1..=cfg.max_iter {
            let mut attempts = 0;
            loop {
                attempts += 1;
                let mut d = two_loop(&g, &history);
                let mut slope = dot(&d, &g);
                if !(slope < 0.0) || !slope.is_finite() {
                    history.clear();
                    d = g.iter().map(|v| -v).collect();
                    slope = -gnorm * gnorm;
                }
                let alpha0 = if history.is_empty() { (1.0 / gnorm).min(1.0) } else { 1.0 };
                match ls.search(&mut f, &x, fx, &d, slope, alpha0, cfg) {
                    LineSearchOutcome::Accepted { evals } => {
                        evaluations += evals;
                        break;
                    }
                    LineSearchOutcome::Failed { evals, improved } => {
                        evaluations += evals;
                        if improved || history.is_empty() || attempts > 1 {
                            if improved {
                                // keep the best point found even though Wolfe failed
                                x.copy_from_slice(&ls.x_lo);
                                g.copy_from_slice(&ls.g_lo);
                                fx = ls.f_lo;
                                gnorm = norm(&g);
                                iterations = iter;
                                observer(&IterationInfo { iter, x: &x, value: fx, grad_norm: gnorm });
                            }
                            reason = TerminationReason::LineSearchFailed;
                            break 'outer;
                        }
                        // retry once along steepest descent with a fresh memory
                        history.clear();
                    }
                }
            }
            let s: Vec<f64> = ls.x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = ls.g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > f64::EPSILON * dot(&y, &y) && sy > 0.0 {
                if history.len() == cfg.memory {
                    history.pop_front();
                }
                history.push_back((s, y, 1.0 / sy));
            }
            x.copy_from_slice(&ls.x_new);
            g.copy_from_slice(&ls.g_new);
            fx = ls.f_new;
            gnorm = norm(&g);
            iterations = iter;
            observer(&IterationInfo { iter, x: &x, value: fx, grad_norm: gnorm });
            if gnorm <= tol {
                reason = TerminationReason::Converged;
                break;
            }
        }
    }
    Ok(Minimum { x, value: fx, grad: g, grad_norm: gnorm, iterations, evaluations, reason })
}

fn two_loop(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        axpy_slice(&mut q, -a, y);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        axpy_slice(&mut q, a - b, s);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

enum LineSearchOutcome {
    Accepted { evals: usize },
    Failed { evals: usize, improved: bool },
}

#[derive(Clone, Copy)]
struct Probe {
    alpha: f64,
    f: f64,
    slope: f64,
}

/// Scratch buffers for the strong Wolfe search.
struct LineSearch {
    x_trial: Vec<f64>,
    g_trial: Vec<f64>,
    x_new: Vec<f64>,
    g_new: Vec<f64>,
    f_new: f64,
    x_lo: Vec<f64>,
    g_lo: Vec<f64>,
    f_lo: f64,
}

impl LineSearch {
    fn new(dim: usize) -> Self {
        Self {
            x_trial: vec![0.0; dim],
            g_trial: vec![0.0; dim],
            x_new: vec![0.0; dim],
            g_new: vec![0.0; dim],
            f_new: f64::NAN,
            x_lo: vec![0.0; dim],
            g_lo: vec![0.0; dim],
            f_lo: f64::INFINITY,
        }
    }

    fn probe<F: FnMut(&[f64], &mut [f64]) -> f64>(&mut self, f: &mut F, x: &[f64], d: &[f64], alpha: f64) -> Probe {
        for ((t, xi), di) in self.x_trial.iter_mut().zip(x).zip(d) {
            *t = xi + alpha * di;
        }
        let fv = f(&self.x_trial, &mut self.g_trial);
        let slope = dot(&self.g_trial, d);
        if fv.is_finite() && slope.is_finite() {
            Probe { alpha, f: fv, slope }
        } else {
            Probe { alpha, f: f64::INFINITY, slope: f64::NAN }
        }
    }

    fn accept_trial(&mut self, f: f64) {
        self.x_new.copy_from_slice(&self.x_trial);
        self.g_new.copy_from_slice(&self.g_trial);
        self.f_new = f;
    }

    fn remember_lo(&mut self, f: f64) {
        if f < self.f_lo {
            self.x_lo.copy_from_slice(&self.x_trial);
            self.g_lo.copy_from_slice(&self.g_trial);
            self.f_lo = f;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn search<F: FnMut(&[f64], &mut [f64]) -> f64>(
        &mut self,
        f: &mut F,
        x: &[f64],
        f0: f64,
        d: &[f64],
        slope0: f64,
        alpha0: f64,
        cfg: &LbfgsConfig,
    ) -> LineSearchOutcome {
        self.f_lo = f0;
        let mut improved = false;
        let mut evals = 0;
        let origin = Probe { alpha: 0.0, f: f0, slope: slope0 };
        let mut prev = origin;
        let mut alpha = alpha0;
        let armijo = |p: &Probe| p.f <= f0 + cfg.c1 * p.alpha * slope0;
        let curvature = |p: &Probe| p.slope.abs() <= -cfg.c2 * slope0;

        let (mut lo, mut hi) = loop {
            if evals >= cfg.max_line_search {
                return LineSearchOutcome::Failed { evals, improved };
            }
            let p = self.probe(f, x, d, alpha);
            evals += 1;
            if !armijo(&p) || (evals > 1 && p.f >= prev.f) {
                break (prev, p);
            }
            self.remember_lo(p.f);
            improved = true;
            if curvature(&p) {
                self.accept_trial(p.f);
                return LineSearchOutcome::Accepted { evals };
            }
            if p.slope >= 0.0 {
                break (p, prev);
            }
            prev = p;
            alpha *= 2.0;
        };

        // zoom: lo satisfies Armijo and has the lowest value seen in the bracket
        loop {
            if evals >= cfg.max_line_search {
                return LineSearchOutcome::Failed { evals, improved };
            }
            let width = (hi.alpha - lo.alpha).abs();
            if width <= 1e-16 * lo.alpha.abs().max(hi.alpha.abs()).max(1e-300) {
                return LineSearchOutcome::Failed { evals, improved };
            }
            let a = interpolate(&lo, &hi);
            let p = self.probe(f, x, d, a);
            evals += 1;
            if !armijo(&p) || p.f >= lo.f {
                hi = p;
            } else {
                self.remember_lo(p.f);
                improved = true;
                if curvature(&p) {
                    self.accept_trial(p.f);
                    return LineSearchOutcome::Accepted { evals };
                }
                if p.slope * (hi.alpha - lo.alpha) >= 0.0 {
                    hi = lo;
                }
                lo = p;
            }
        }
    }
}

/// Cubic interpolation between two probes, clamped to the inner 80% of the
/// bracket; falls back to bisection when the cubic is unusable.
fn interpolate(lo: &Probe, hi: &Probe) -> f64 {
    let (a, b) = (lo.alpha, hi.alpha);
    let mid = 0.5 * (a + b);
    if !hi.f.is_finite() || !hi.slope.is_finite() {
        return mid;
    }
    let d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (a - b);
    let disc = d1 * d1 - lo.slope * hi.slope;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let denom = hi.slope - lo.slope + 2.0 * d2;
    if denom == 0.0 {
        return mid;
    }
    let t = b - (b - a) * (hi.slope + d2 - d1) / denom;
    let (left, right) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * (right - left);
    if !t.is_finite() {
        mid
    } else {
        t.clamp(left + margin, right - margin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic(c: &[f64]) -> impl FnMut(&[f64], &mut [f64]) -> f64 + '_ {
        move |x, g| {
            let mut v = 0.0;
            for i in 0..x.len() {
                g[i] = x[i] - c[i];
                v += 0.5 * g[i] * g[i];
            }
            v
        }
    }

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn isotropic_quadratic_converges_immediately() {
        let c: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect();
        let cfg = LbfgsConfig { grad_tol: 1e-12, ..Default::default() };
        let res = lbfgs_minimize(quadratic(&c), vec![0.0; 6], &cfg, |_| {}).unwrap();
        assert_eq!(res.reason, TerminationReason::Converged);
        assert!(res.iterations <= 6);
        for (x, ci) in res.x.iter().zip(&c) {
            assert!((x - ci).abs() < 1e-8);
        }
    }

    #[test]
    fn ill_conditioned_quadratic() {
        let scales = [1.0, 10.0, 100.0, 3.0];
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for i in 0..4 {
                g[i] = scales[i] * (x[i] - 1.0);
                v += 0.5 * scales[i] * (x[i] - 1.0).powi(2);
            }
            v
        };
        let cfg = LbfgsConfig { grad_tol: 1e-12, ..Default::default() };
        let res = lbfgs_minimize(f, vec![0.0; 4], &cfg, |_| {}).unwrap();
        assert!(res.x.iter().all(|v| (v - 1.0).abs() < 1e-8), "{:?}", res.x);
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let cfg = LbfgsConfig { grad_tol: 1e-10, max_iter: 200, ..Default::default() };
        let mut values = Vec::new();
        let res = lbfgs_minimize(rosenbrock, vec![-1.2, 1.0], &cfg, |info| values.push(info.value)).unwrap();
        assert!(res.value <= 1e-10, "f = {} after {} iterations ({})", res.value, res.iterations, res.reason);
        assert!(res.iterations <= 200);
        for w in values.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn accepted_steps_satisfy_strong_wolfe() {
        // Re-check the Wolfe conditions from the observed sequence on Rosenbrock.
        let cfg = LbfgsConfig { grad_tol: 1e-10, max_iter: 100, ..Default::default() };
        let mut xs: Vec<Vec<f64>> = Vec::new();
        lbfgs_minimize(rosenbrock, vec![-1.2, 1.0], &cfg, |info| xs.push(info.x.to_vec())).unwrap();
        let mut g0 = [0.0; 2];
        let mut g1 = [0.0; 2];
        for w in xs.windows(2) {
            let f0 = rosenbrock(&w[0], &mut g0);
            let f1 = rosenbrock(&w[1], &mut g1);
            let s = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
            let slope0 = dot(&g0, &s);
            let slope1 = dot(&g1, &s);
            assert!(slope0 < 0.0);
            assert!(f1 <= f0 + cfg.c1 * slope0 + 1e-14 * f0.abs());
            assert!(slope1.abs() <= -cfg.c2 * slope0 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn starting_at_optimum_converges_without_steps() {
        let c = [1.0, 2.0];
        let res = lbfgs_minimize(quadratic(&c), c.to_vec(), &LbfgsConfig::default(), |_| {}).unwrap();
        assert_eq!(res.reason, TerminationReason::Converged);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let cfg = LbfgsConfig { grad_tol: 0.0, max_iter: 3, ..Default::default() };
        let res = lbfgs_minimize(rosenbrock, vec![-1.2, 1.0], &cfg, |_| {}).unwrap();
        assert_eq!(res.reason, TerminationReason::MaxIterations);
        assert_eq!(res.iterations, 3);
    }

    #[test]
    fn unbounded_direction_fails_line_search() {
        // linear function: no step ever satisfies the curvature condition
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            x[0]
        };
        let cfg = LbfgsConfig { max_line_search: 10, ..Default::default() };
        let res = lbfgs_minimize(f, vec![0.0], &cfg, |_| {}).unwrap();
        assert_eq!(res.reason, TerminationReason::LineSearchFailed);
        assert!(res.value < 0.0, "best iterate is returned");
    }

    #[test]
    fn invalid_config() {
        let bad = LbfgsConfig { c1: 0.5, c2: 0.4, ..Default::default() };
        assert!(lbfgs_minimize(rosenbrock, vec![0.0, 0.0], &bad, |_| {}).is_err());
        let bad = LbfgsConfig { memory: 0, ..Default::default() };
        assert!(lbfgs_minimize(rosenbrock, vec![0.0, 0.0], &bad, |_| {}).is_err());
    }
}
