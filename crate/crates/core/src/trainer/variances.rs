use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::statespace::{ModelSpec, StateLayout};
use crate::stochastics::{draw_inverse_gamma, RngStream};

/// Draws every component disturbance variance from its inverse-gamma full
/// conditional `IG(v/2 + n_eff/2, ss/2 + SSE/2)` given a state path (`n × p`).
///
/// The cycle pair shares one variance: both rotation residuals are pooled
/// (`n_eff = 2(n - 1)`) and the draw fills both slots.
pub fn draw_component_variances(
    states: &DMatrix<f64>,
    spec: &ModelSpec,
    layout: &StateLayout,
    v: f64,
    ss: f64,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    if states.ncols() != layout.n_states {
        return Err(Error::validation(format!(
            "state path has {} columns, expected {}",
            states.ncols(),
            layout.n_states
        )));
    }
    let n = states.nrows();
    let steps = n.saturating_sub(1);
    let mut out = vec![0.0; layout.n_errors];
    let draw = |sse: f64, count: usize, rng: &mut RngStream| {
        draw_inverse_gamma(0.5 * v + 0.5 * count as f64, 0.5 * ss + 0.5 * sse, rng)
    };

    for (s, b) in spec.series.iter().zip(&layout.blocks) {
        if let (Some(lv), Some(e)) = (b.level, b.level_error) {
            let sse: f64 = (0..steps)
                .map(|t| {
                    let slope = b.slope.map_or(0.0, |sl| states[(t, sl)]);
                    (states[(t + 1, lv)] - states[(t, lv)] - slope).powi(2)
                })
                .sum();
            out[e] = draw(sse, steps, rng)?;
        }
        if let (Some(sl), Some(e)) = (b.slope, b.slope_error) {
            let (d, rho) = (s.long_run_slope, s.learning_rate);
            let sse: f64 = (0..steps)
                .map(|t| (states[(t + 1, sl)] - d - rho * (states[(t, sl)] - d)).powi(2))
                .sum();
            out[e] = draw(sse, steps, rng)?;
        }
        if let (Some(range), Some(e)) = (b.seasonal.clone(), b.seasonal_error) {
            let sse: f64 = (0..steps)
                .map(|t| {
                    let window: f64 = range.clone().map(|j| states[(t, j)]).sum();
                    (states[(t + 1, range.start)] + window).powi(2)
                })
                .sum();
            out[e] = draw(sse, steps, rng)?;
        }
        if let (Some(c), Some(e)) = (b.cycle, b.cycle_error) {
            let (sin, cos) = s.frequency.sin_cos();
            let d = s.damping;
            let sse: f64 = (0..steps)
                .map(|t| {
                    let (w, ws) = (states[(t, c)], states[(t, c + 1)]);
                    let e1 = states[(t + 1, c)] - d * cos * w - d * sin * ws;
                    let e2 = states[(t + 1, c + 1)] + d * sin * w - d * cos * ws;
                    e1 * e1 + e2 * e2
                })
                .sum();
            let var = draw(sse, 2 * steps, rng)?;
            out[e] = var;
            out[e + 1] = var;
        }
    }
    Ok(out)
}
