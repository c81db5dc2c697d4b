//! Iteratively reweighted total variation.
//!
//! Gradients are forward differences between neighbouring pixels (mm⁻¹ per
//! pixel) with replication at the far borders, so the last column has no
//! horizontal difference and the last row no vertical one. The magnitude is
//! smoothed, `‖Df‖_δ = √(g_x² + g_y² + δ²)`, to make the functional
//! differentiable everywhere.

use crate::error::{Error, Result};
use crate::grid::{HuScale, ImageGrid};

use super::config::LineSearch;

/// Smoothing inside the gradient magnitude, mm⁻¹.
pub const GRADIENT_SMOOTHING: f64 = 1e-8;

/// Per-pixel weights frozen from the image they were computed on.
#[derive(Clone, Debug, PartialEq)]
pub struct WtvState {
    pub weights: ImageGrid,
    pub last_image: ImageGrid,
}

fn forward_differences(image: &ImageGrid, j: usize) -> (f64, f64) {
    let s = image.spec();
    let v = image.values();
    let (ix, iy) = (j % s.nx, j / s.nx);
    let gx = if ix + 1 < s.nx { v[j + 1] - v[j] } else { 0.0 };
    let gy = if iy + 1 < s.ny {
        v[j + s.nx] - v[j]
    } else {
        0.0
    };
    (gx, gy)
}

#[inline]
fn smoothed_norm(gx: f64, gy: f64) -> f64 {
    (gx * gx + gy * gy + GRADIENT_SMOOTHING * GRADIENT_SMOOTHING).sqrt()
}

/// Smoothed gradient magnitude at every pixel.
pub fn gradient_magnitude(image: &ImageGrid) -> ImageGrid {
    let values = (0..image.spec().len())
        .map(|j| {
            let (gx, gy) = forward_differences(image, j);
            smoothed_norm(gx, gy)
        })
        .collect();
    ImageGrid::from_values(*image.spec(), values).expect("finite input gives finite magnitudes")
}

/// `w = 1 / (‖Df‖_δ + ε)`, with ε given in HU per pixel.
pub fn wtv_weights(image: &ImageGrid, epsilon_hu: f64, scale: HuScale) -> Result<WtvState> {
    if !(epsilon_hu > 0.0 && epsilon_hu.is_finite()) {
        return Err(Error::invalid(
            "epsilon_hu",
            format!("must be positive, got {epsilon_hu}"),
        ));
    }
    scale.validate()?;
    let eps = scale.hu_delta_to_mu(epsilon_hu);
    let weights = gradient_magnitude(image).map(|n| 1.0 / (n + eps));
    Ok(WtvState {
        weights,
        last_image: image.clone(),
    })
}

/// `Σ w·‖Df‖_δ` at fixed weights.
pub fn wtv_value(image: &ImageGrid, state: &WtvState) -> Result<f64> {
    image.check_same_shape(&state.weights, "wTV value")?;
    Ok(value_unchecked(image, state.weights.values()))
}

fn value_unchecked(image: &ImageGrid, weights: &[f64]) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(j, w)| {
            let (gx, gy) = forward_differences(image, j);
            w * smoothed_norm(gx, gy)
        })
        .sum()
}

/// Analytic gradient of [`wtv_value`] with respect to every pixel.
pub fn wtv_gradient(image: &ImageGrid, state: &WtvState) -> Result<ImageGrid> {
    image.check_same_shape(&state.weights, "wTV gradient")?;
    let s = *image.spec();
    let w = state.weights.values();
    let n = s.len();
    // q = w·g/‖g‖ per pixel and direction.
    let mut qx = vec![0.0; n];
    let mut qy = vec![0.0; n];
    for j in 0..n {
        let (gx, gy) = forward_differences(image, j);
        let scale = w[j] / smoothed_norm(gx, gy);
        qx[j] = scale * gx;
        qy[j] = scale * gy;
    }
    let grad = (0..n)
        .map(|j| {
            let (ix, iy) = (j % s.nx, j / s.nx);
            let mut g = -qx[j] - qy[j];
            if ix > 0 {
                g += qx[j - 1];
            }
            if iy > 0 {
                g += qy[j - s.nx];
            }
            g
        })
        .collect();
    ImageGrid::from_values(s, grad)
}

/// Objective values seen by one descent run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DescentLog {
    /// Value before the first step, then after each step (skipped steps repeat the value).
    pub values: Vec<f64>,
    pub skipped: usize,
}

impl DescentLog {
    /// Number of steps after which the objective went up.
    pub fn increases(&self) -> usize {
        self.values.windows(2).filter(|w| w[1] > w[0]).count()
    }
}

/// Gradient descent on the wTV value at fixed weights.
pub fn wtv_descent(
    image: &ImageGrid,
    state: &WtvState,
    line_search: &LineSearch,
    steps: usize,
) -> Result<(ImageGrid, DescentLog)> {
    wtv_descent_bounded(image, state, line_search, steps, None)
}

/// [`wtv_descent`] with iterates projected onto `f ≥ lower` when a bound is given.
///
/// Sufficient decrease is tested on the projected trial point,
/// `F(x⁺) ≤ F(x) + c·⟨∇F, x⁺ − x⟩`. A step that fails after
/// `max_backtracks` reductions is skipped.
pub fn wtv_descent_bounded(
    image: &ImageGrid,
    state: &WtvState,
    line_search: &LineSearch,
    steps: usize,
    lower: Option<f64>,
) -> Result<(ImageGrid, DescentLog)> {
    line_search.validate()?;
    image.check_same_shape(&state.weights, "wTV descent")?;
    let weights = state.weights.values();
    let mut current = image.clone();
    let mut value = value_unchecked(&current, weights);
    let mut log = DescentLog {
        values: vec![value],
        skipped: 0,
    };

    for _ in 0..steps {
        let grad = wtv_gradient(&current, state)?;
        let g = grad.values();
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let (lo, hi) = current.min_max();
        let mut alpha = line_search.initial_step * (hi - lo);
        let mut accepted = None;
        if gmax > 0.0 && alpha > 0.0 {
            for _ in 0..=line_search.max_backtracks {
                let mut trial = current.clone();
                let mut decrease = 0.0;
                for ((t, &x), &gj) in trial.values_mut().iter_mut().zip(current.values()).zip(g) {
                    let mut v = x - alpha * gj / gmax;
                    if let Some(b) = lower {
                        v = v.max(b);
                    }
                    *t = v;
                    decrease += gj * (v - x);
                }
                let trial_value = value_unchecked(&trial, weights);
                if trial_value <= value + line_search.sufficient_decrease * decrease
                    && trial_value <= value
                {
                    accepted = Some((trial, trial_value));
                    break;
                }
                alpha *= line_search.shrink;
            }
        }
        match accepted {
            Some((trial, v)) => {
                current = trial;
                value = v;
            }
            None => log.skipped += 1,
        }
        log.values.push(value);
    }
    Ok((current, log))
}
