//! Damped least-squares fit of order intensities.
//!
//! The solver works in dimensionless coordinates: lengths in units of the
//! grating period and the amplitude in units of the largest observed
//! intensity. Bounds are `0 < s_eff < d`, `0 <= delta, sigma < d` and
//! `amplitude > 0`; variables pinned at a bound by an outward gradient are
//! frozen for that step.

use std::f64::consts::PI;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};

use super::OrderIntensity;
use crate::model::special::contrast_bracket;
use crate::model::QuantumPeakParams;
use crate::{Error, Execution, Result};

/// Order of the parameters in [`FitResult::covariance`].
pub const PARAMETER_NAMES: [&str; 4] = ["s_eff", "delta", "sigma", "amplitude"];

const MIN_DISTINCT_ORDERS: usize = 4;
const BOUND_MARGIN: f64 = 1e-9;
const MIN_AMPLITUDE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step changes the parameters by less than this,
    /// relative to their magnitude.
    pub step_tolerance: f64,
    /// A stopped fit counts as converged when the projected objective
    /// gradient is at most this fraction of the largest curvature.
    pub gradient_tolerance: f64,
    /// Floor on per-order uncertainties in the weights.
    pub uncertainty_floor: f64,
    pub include_zeroth_order: bool,
    /// Number of grid seeds refined when no initial guess is given.
    pub starts: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            step_tolerance: 1e-10,
            gradient_tolerance: 1e-6,
            uncertainty_floor: 1.0,
            include_zeroth_order: false,
            starts: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: QuantumPeakParams,
    /// Covariance over `(s_eff, delta, sigma, amplitude)` in SI units.
    pub covariance: [[f64; 4]; 4],
    /// Norm of the weighted residual vector, `sqrt(chi²)`.
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Projected gradient of chi² over the largest curvature, in solver units.
    pub relative_gradient: f64,
    pub orders_used: Vec<i32>,
    /// No zeroth order entered the fit. Every non-zero order is then
    /// unchanged under `s_eff -> d - s_eff` with a matching amplitude, and
    /// the branch with `s_eff >= d/2` is reported.
    pub mirror_ambiguous: bool,
}

impl FitResult {
    /// One-sigma uncertainties from the covariance diagonal.
    pub fn uncertainties(&self) -> [f64; 4] {
        std::array::from_fn(|i| self.covariance[i][i].max(0.0).sqrt())
    }
}

pub fn fit_order_intensities(
    orders: &[OrderIntensity],
    period: f64,
    initial_guess: Option<QuantumPeakParams>,
) -> Result<FitResult> {
    fit_order_intensities_with(orders, period, initial_guess, &FitOptions::default(), Execution::default())
}

/// Minimizes `Σ [(I_model - I_obs) / max(u, floor)]²` over the four order-law
/// parameters.
///
/// Without an initial guess, a deterministic grid over `s_eff ∈ (0, d)` and
/// `delta, sigma ∈ [0, d/4]` is scanned (amplitude solved exactly at each
/// node), and the best [`FitOptions::starts`] nodes are refined; the lowest
/// final objective wins. Non-convergence is reported through
/// [`FitResult::converged`], not as an error.
pub fn fit_order_intensities_with(
    orders: &[OrderIntensity],
    period: f64,
    initial_guess: Option<QuantumPeakParams>,
    options: &FitOptions,
    exec: Execution,
) -> Result<FitResult> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::domain("grating period must be positive"));
    }
    let problem = Problem::new(orders, period, options)?;

    let runs: Vec<Run> = match initial_guess {
        Some(guess) => {
            guess.validate()?;
            let x = problem.project(Vector4::new(
                guess.s_eff / period,
                guess.delta / period,
                guess.sigma / period,
                guess.amplitude / problem.amplitude_scale,
            ));
            vec![problem.solve(x, options)]
        }
        None => {
            let seeds = problem.grid_seeds(options.starts.max(1), exec);
            exec.map(&seeds, |&x| problem.solve(x, options))
        }
    };
    let mut best = runs
        .into_iter()
        .reduce(|best, r| if r.chi2 < best.chi2 { r } else { best })
        .expect("at least one start");
    let mirror_ambiguous = !problem.orders.contains(&0);
    if mirror_ambiguous && best.x[0] < 0.5 {
        best.x = mirror(best.x);
    }
    let mut result = problem.finish(best);
    result.mirror_ambiguous = mirror_ambiguous;
    Ok(result)
}

struct Problem {
    orders: Vec<i32>,
    observed: Vec<f64>,
    weights: Vec<f64>,
    period: f64,
    amplitude_scale: f64,
}

struct Run {
    x: Vector4<f64>,
    chi2: f64,
    converged: bool,
    iterations: usize,
    relative_gradient: f64,
}

impl Problem {
    fn new(orders: &[OrderIntensity], period: f64, options: &FitOptions) -> Result<Self> {
        let used: Vec<&OrderIntensity> = orders
            .iter()
            .filter(|o| options.include_zeroth_order || o.order_n != 0)
            .collect();
        for o in &used {
            if !(o.intensity.is_finite() && o.intensity >= 0.0 && o.uncertainty.is_finite() && o.uncertainty >= 0.0) {
                return Err(Error::domain(format!("order {} has invalid intensity or uncertainty", o.order_n)));
            }
        }
        let mut distinct: Vec<u32> = used.iter().filter(|o| o.intensity > 0.0).map(|o| o.order_n.unsigned_abs()).collect();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() < MIN_DISTINCT_ORDERS {
            return Err(Error::insufficient(format!(
                "need at least {MIN_DISTINCT_ORDERS} distinct |n| with positive intensity, got {}",
                distinct.len()
            )));
        }
        let observed: Vec<f64> = used.iter().map(|o| o.intensity).collect();
        let amplitude_scale = observed.iter().cloned().fold(0.0, f64::max);
        Ok(Problem {
            orders: used.iter().map(|o| o.order_n).collect(),
            weights: used.iter().map(|o| 1.0 / o.uncertainty.max(options.uncertainty_floor)).collect(),
            observed,
            period,
            amplitude_scale,
        })
    }

    fn project(&self, x: Vector4<f64>) -> Vector4<f64> {
        Vector4::new(
            x[0].clamp(BOUND_MARGIN, 1.0 - BOUND_MARGIN),
            x[1].clamp(0.0, 1.0 - BOUND_MARGIN),
            x[2].clamp(0.0, 1.0 - BOUND_MARGIN),
            x[3].max(MIN_AMPLITUDE),
        )
    }

    /// Order-law shape with unit amplitude, in period units.
    fn shape(n: i32, x: &Vector4<f64>) -> f64 {
        let nf = f64::from(n);
        let g = 2.0 * PI * nf * x[2];
        (-g * g).exp() * contrast_bracket(nf * PI * x[0], nf * PI * x[1])
    }

    /// Weighted residuals and their Jacobian in solver coordinates.
    fn evaluate(&self, x: &Vector4<f64>) -> (Vec<f64>, Vec<[f64; 4]>) {
        let amp = x[3] * self.amplitude_scale;
        let mut r = Vec::with_capacity(self.orders.len());
        let mut jac = Vec::with_capacity(self.orders.len());
        for ((&n, &y), &w) in self.orders.iter().zip(&self.observed).zip(&self.weights) {
            let nf = f64::from(n);
            let (a, b) = (nf * PI * x[0], nf * PI * x[1]);
            let gk = 2.0 * PI * nf;
            let damp = (-(gk * x[2]).powi(2)).exp();
            let f = contrast_bracket(a, b);
            let (df_da, df_db) = bracket_gradient(a, b, f);
            r.push(w * (amp * damp * f - y));
            jac.push([
                w * amp * damp * df_da * nf * PI,
                w * amp * damp * df_db * nf * PI,
                w * amp * f * damp * (-2.0 * gk * gk * x[2]),
                w * self.amplitude_scale * damp * f,
            ]);
        }
        (r, jac)
    }

    fn chi2(&self, x: &Vector4<f64>) -> f64 {
        let amp = x[3] * self.amplitude_scale;
        self.orders
            .iter()
            .zip(&self.observed)
            .zip(&self.weights)
            .map(|((&n, &y), &w)| {
                let r = w * (amp * Self::shape(n, x) - y);
                r * r
            })
            .sum()
    }

    fn normal_equations(&self, x: &Vector4<f64>) -> (f64, Vector4<f64>, Matrix4<f64>) {
        let (r, jac) = self.evaluate(x);
        let mut g = Vector4::zeros();
        let mut h = Matrix4::zeros();
        let mut chi2 = 0.0;
        for (ri, row) in r.iter().zip(&jac) {
            chi2 += ri * ri;
            for i in 0..4 {
                g[i] += row[i] * ri;
                for j in 0..4 {
                    h[(i, j)] += row[i] * row[j];
                }
            }
        }
        (chi2, g, h)
    }

    /// Variables held at a bound by an outward-pointing descent direction.
    fn active_bounds(&self, x: &Vector4<f64>, g: &Vector4<f64>) -> [bool; 4] {
        let lower = [BOUND_MARGIN, 0.0, 0.0, MIN_AMPLITUDE];
        let upper = [1.0 - BOUND_MARGIN, 1.0 - BOUND_MARGIN, 1.0 - BOUND_MARGIN, f64::INFINITY];
        std::array::from_fn(|i| (x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0))
    }

    fn relative_gradient(&self, x: &Vector4<f64>, g: &Vector4<f64>, h: &Matrix4<f64>) -> f64 {
        let active = self.active_bounds(x, g);
        let gmax = (0..4).filter(|&i| !active[i]).map(|i| g[i].abs()).fold(0.0, f64::max);
        let hmax = (0..4).map(|i| h[(i, i)]).fold(0.0, f64::max);
        if gmax == 0.0 {
            0.0
        } else if hmax > 0.0 {
            // gradient and curvature of chi² are 2·Jᵀr and 2·JᵀJ
            gmax / hmax
        } else {
            f64::INFINITY
        }
    }

    fn solve(&self, start: Vector4<f64>, options: &FitOptions) -> Run {
        let mut x = self.project(start);
        let (mut chi2, mut g, mut h) = self.normal_equations(&x);
        let mut lambda = 1e-3;
        let mut iterations = 0;
        let mut stopped = false;

        while iterations < options.max_iterations {
            iterations += 1;
            if chi2 == 0.0 {
                stopped = true;
                break;
            }
            let active = self.active_bounds(&x, &g);
            let diag_max = (0..4).map(|i| h[(i, i)]).fold(0.0, f64::max);
            let floor = 1e-12 * diag_max.max(f64::MIN_POSITIVE);

            let mut accepted = false;
            while lambda < 1e16 {
                let mut a = h;
                let mut rhs = -g;
                for i in 0..4 {
                    a[(i, i)] += lambda * h[(i, i)].max(floor);
                    if active[i] {
                        for j in 0..4 {
                            a[(i, j)] = 0.0;
                            a[(j, i)] = 0.0;
                        }
                        a[(i, i)] = 1.0;
                        rhs[i] = 0.0;
                    }
                }
                let step = match a.cholesky() {
                    Some(c) => c.solve(&rhs),
                    None => {
                        lambda *= 10.0;
                        continue;
                    }
                };
                let trial = self.project(x + step);
                let trial_chi2 = self.chi2(&trial);
                if trial_chi2.is_finite() && trial_chi2 <= chi2 {
                    let moved = (trial - x).abs();
                    let size = x.abs().max() + f64::MIN_POSITIVE;
                    x = trial;
                    let (c, gg, hh) = self.normal_equations(&x);
                    chi2 = c;
                    g = gg;
                    h = hh;
                    lambda = (lambda / 10.0).max(1e-15);
                    accepted = true;
                    if moved.max() <= options.step_tolerance * size {
                        stopped = true;
                    }
                    break;
                }
                lambda *= 10.0;
            }
            if !accepted {
                // no descent direction left at working precision
                stopped = true;
            }
            if stopped {
                break;
            }
        }

        let relative_gradient = self.relative_gradient(&x, &g, &h);
        Run {
            x,
            chi2,
            converged: stopped && relative_gradient <= options.gradient_tolerance,
            iterations,
            relative_gradient,
        }
    }

    fn grid_seeds(&self, count: usize, exec: Execution) -> Vec<Vector4<f64>> {
        const S_STEPS: usize = 64;
        const WIDTH_STEPS: usize = 10;
        const WIDTH_MAX: f64 = 0.25;
        let mut nodes = Vec::with_capacity((S_STEPS - 1) * (WIDTH_STEPS + 1).pow(2));
        for i in 1..S_STEPS {
            for j in 0..=WIDTH_STEPS {
                for k in 0..=WIDTH_STEPS {
                    nodes.push(Vector4::new(
                        i as f64 / S_STEPS as f64,
                        WIDTH_MAX * j as f64 / WIDTH_STEPS as f64,
                        WIDTH_MAX * k as f64 / WIDTH_STEPS as f64,
                        1.0,
                    ));
                }
            }
        }
        let scored = exec.map(&nodes, |x| self.best_amplitude(x));
        let mut ranked: Vec<(f64, Vector4<f64>)> = scored.into_iter().flatten().collect();
        // stable sort keeps grid order among equal objectives
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut seeds: Vec<Vector4<f64>> = ranked.iter().take(count).map(|(_, x)| *x).collect();
        if seeds.is_empty() {
            seeds.push(Vector4::new(0.5, 0.0, 0.0, 1.0));
        }
        seeds
    }

    /// Objective and node with the amplitude solved in closed form.
    fn best_amplitude(&self, x: &Vector4<f64>) -> Option<(f64, Vector4<f64>)> {
        let (mut fy, mut ff) = (0.0, 0.0);
        let shapes: Vec<f64> = self.orders.iter().map(|&n| Self::shape(n, x)).collect();
        for ((f, y), w) in shapes.iter().zip(&self.observed).zip(&self.weights) {
            let w2 = w * w;
            fy += w2 * f * y;
            ff += w2 * f * f;
        }
        if !(ff > 0.0 && fy > 0.0) {
            return None;
        }
        let amp = fy / ff / self.amplitude_scale;
        let node = Vector4::new(x[0], x[1], x[2], amp);
        let chi2 = self.chi2(&node);
        chi2.is_finite().then_some((chi2, node))
    }

    fn finish(&self, run: Run) -> FitResult {
        let (_, _, h) = self.normal_equations(&run.x);
        let cov_scaled = pseudo_inverse(&h);
        let scale = [self.period, self.period, self.period, self.amplitude_scale];
        let mut covariance = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in i..4 {
                let v = 0.5 * (cov_scaled[(i, j)] + cov_scaled[(j, i)]) * scale[i] * scale[j];
                covariance[i][j] = v;
                covariance[j][i] = v;
            }
        }
        FitResult {
            params: QuantumPeakParams {
                s_eff: run.x[0] * self.period,
                delta: run.x[1] * self.period,
                sigma: run.x[2] * self.period,
                amplitude: run.x[3] * self.amplitude_scale,
            },
            covariance,
            residual_norm: run.chi2.sqrt(),
            converged: run.converged,
            iterations: run.iterations,
            relative_gradient: run.relative_gradient,
            orders_used: self.orders.clone(),
            mirror_ambiguous: false,
        }
    }
}

/// The partner solution under `s -> d - s`, in solver units.
///
/// For integer `n != 0`, `sin²(nπs)` is unchanged and the bracket
/// denominator scales by `(s'² + δ²)/(s² + δ²)`, which the amplitude absorbs.
fn mirror(x: Vector4<f64>) -> Vector4<f64> {
    let s = x[0];
    let s_m = 1.0 - s;
    let d2 = x[1] * x[1];
    Vector4::new(s_m, x[1], x[2], x[3] * (s_m * s_m + d2) / (s * s + d2))
}

/// Partial derivatives of `[sin²a + sinh²b] / [a² + b²]`, given its value.
fn bracket_gradient(a: f64, b: f64, value: f64) -> (f64, f64) {
    let r2 = a * a + b * b;
    if r2.sqrt() < crate::model::special::SERIES_THRESHOLD {
        return (-2.0 * a / 3.0, 2.0 * b / 3.0);
    }
    (((2.0 * a).sin() - 2.0 * a * value) / r2, ((2.0 * b).sinh() - 2.0 * b * value) / r2)
}

/// Moore–Penrose inverse of a symmetric positive semidefinite matrix.
fn pseudo_inverse(h: &Matrix4<f64>) -> Matrix4<f64> {
    let eig = SymmetricEigen::new(*h);
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cutoff = 1e-12 * max;
    let mut inv = Matrix4::zeros();
    for k in 0..4 {
        let lambda = eig.eigenvalues[k];
        if lambda > cutoff && lambda > 0.0 {
            let v = eig.eigenvectors.column(k);
            inv += v * v.transpose() / lambda;
        }
    }
    inv
}
