//! The two training optimizers: SGD with Nesterov momentum over mini-batch
//! gradients, and full-batch limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::num::{real, Real};

/// SGD with Nesterov momentum in lookahead-gradient form: the gradient is
/// evaluated at params + momentum * velocity.
#[derive(Debug, Clone)]
pub struct SgdNesterov<T> {
    pub learning_rate: T,
    pub momentum: T,
    velocity: Vec<T>,
}

impl<T: Real> SgdNesterov<T> {
    pub fn new(learning_rate: T, momentum: T, dim: usize) -> Self {
        Self { learning_rate, momentum, velocity: vec![T::zero(); dim] }
    }

    pub fn step<F>(&mut self, params: &mut [T], mut grad_fn: F) -> Result<()>
    where
        F: FnMut(&[T]) -> Vec<T>,
    {
        assert_eq!(params.len(), self.velocity.len(), "optimizer/params shape");
        let lookahead: Vec<T> = params
            .iter()
            .zip(&self.velocity)
            .map(|(&p, &v)| p + self.momentum * v)
            .collect();
        let grad = grad_fn(&lookahead);
        assert_eq!(grad.len(), params.len(), "gradient shape");
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient);
        }
        for ((p, v), &g) in params.iter_mut().zip(self.velocity.iter_mut()).zip(&grad) {
            *v = self.momentum * *v - self.learning_rate * g;
            *p += *v;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsConfig<T> {
    pub memory: usize,
    pub max_iters: usize,
    pub grad_tol: T,
    pub armijo_c1: T,
    pub backtrack_factor: T,
    pub max_backtracks: usize,
}

impl<T: Real> Default for LbfgsConfig<T> {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iters: 500,
            grad_tol: real(1e-6),
            armijo_c1: real(1e-4),
            backtrack_factor: real(0.5),
            max_backtracks: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome<T> {
    pub params: Vec<T>,
    pub value: T,
    pub grad_inf_norm: T,
    pub iterations: usize,
    /// Objective value after each accepted step, starting with the
    /// initial value.
    pub value_trace: Vec<T>,
}

fn inf_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Two-loop recursion: applies the implicit inverse-Hessian estimate held
/// in `history` to the gradient, returning the descent direction.
fn two_loop_direction<T: Real>(grad: &[T], history: &VecDeque<(Vec<T>, Vec<T>)>) -> Vec<T> {
    let mut q: Vec<T> = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y) in history.iter().rev() {
        let rho = T::one() / dot(y, s);
        let alpha = rho * dot(s, &q);
        for (qi, &yi) in q.iter_mut().zip(y) {
            *qi -= alpha * yi;
        }
        alphas.push((alpha, rho));
    }
    // initial inverse-Hessian scaling from the most recent pair
    if let Some((s, y)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y), &(alpha, rho)) in history.iter().zip(alphas.iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, &si) in q.iter_mut().zip(s) {
            *qi += (alpha - beta) * si;
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

pub fn lbfgs_minimize<T, F>(
    mut objective: F,
    init: Vec<T>,
    config: &LbfgsConfig<T>,
) -> Result<LbfgsOutcome<T>>
where
    T: Real,
    F: FnMut(&[T]) -> (T, Vec<T>),
{
    let mut params = init;
    let (mut value, mut grad) = objective(&params);
    if !value.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut history: VecDeque<(Vec<T>, Vec<T>)> = VecDeque::with_capacity(config.memory);
    let mut iterations = 0;
    let mut value_trace = vec![value];
    while iterations < config.max_iters && inf_norm(&grad) >= config.grad_tol {
        let direction = two_loop_direction(&grad, &history);
        let mut slope = dot(&grad, &direction);
        let direction = if slope >= T::zero() {
            // not a descent direction; reset to steepest descent
            history.clear();
            let d: Vec<T> = grad.iter().map(|&g| -g).collect();
            slope = dot(&grad, &d);
            d
        } else {
            direction
        };
        // backtracking Armijo line search
        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..=config.max_backtracks {
            let candidate: Vec<T> = params
                .iter()
                .zip(&direction)
                .map(|(&p, &d)| p + step * d)
                .collect();
            let (cand_value, cand_grad) = objective(&candidate);
            if !cand_value.is_finite() {
                step = step * config.backtrack_factor;
                continue;
            }
            if cand_value <= value + config.armijo_c1 * step * slope {
                accepted = Some((candidate, cand_value, cand_grad));
                break;
            }
            step = step * config.backtrack_factor;
        }
        let (new_params, new_value, new_grad) = accepted.ok_or(Error::LineSearchFailure)?;
        let s: Vec<T> = new_params.iter().zip(&params).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = new_grad.iter().zip(&grad).map(|(&a, &b)| a - b).collect();
        // curvature condition guard
        if dot(&s, &y) > real(1e-10) {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back((s, y));
        }
        params = new_params;
        value = new_value;
        grad = new_grad;
        value_trace.push(value);
        iterations += 1;
    }
    Ok(LbfgsOutcome { params, value, grad_inf_norm: inf_norm(&grad), iterations, value_trace })
}
