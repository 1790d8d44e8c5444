//! wasm-bindgen bindings for the static page in `www/`.

use num_complex::Complex64;
use phasecof::coeff_search::{ball_limit, best_coefficients, SearchProblem};
use phasecof::precoding::{pp_rate, select_precoder_with_limit, PhaseCodebook, PhasePrecoder};
use phasecof::sim::db_to_linear;
use phasecof::{ChannelState, GaussInt};
use std::f64::consts::FRAC_PI_4;
use wasm_bindgen::prelude::*;

fn channel(h: &[f64], snr_db: f64) -> Result<ChannelState, JsError> {
    if h.len() % 2 != 0 || h.is_empty() {
        return Err(JsError::new("h must hold re, im pairs"));
    }
    let h = h.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
    ChannelState::new(h, db_to_linear(snr_db)).map_err(|e| JsError::new(&e.to_string()))
}

fn coeffs(a: &[i32]) -> Vec<GaussInt> {
    a.chunks(2)
        .map(|p| GaussInt::new(p[0] as i64, p[1] as i64))
        .collect()
}

/// Deep-hole phase set in radians.
#[wasm_bindgen]
pub fn deep_hole_phases(max_odd: u32) -> Result<Vec<f64>, JsError> {
    phasecof::lattice::deep_hole_phases(max_odd).map_err(|e| JsError::new(&e.to_string()))
}

/// Precoded rate of equation `a` for two users over a `grid x grid` phase
/// grid on `[-pi/4, pi/4]^2`, row-major with user 1 along rows.
/// `h` and `a` are `[re1, im1, re2, im2]`.
#[wasm_bindgen]
pub fn rate_landscape(h: &[f64], snr_db: f64, a: &[i32], grid: usize) -> Result<Vec<f64>, JsError> {
    let cs = channel(h, snr_db)?;
    if cs.users() != 2 || a.len() != 4 || grid < 2 {
        return Err(JsError::new("need two users and grid >= 2"));
    }
    let a = coeffs(a);
    let step = 2.0 * FRAC_PI_4 / (grid - 1) as f64;
    let mut out = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        for j in 0..grid {
            let p = PhasePrecoder::new(vec![-FRAC_PI_4 + i as f64 * step, -FRAC_PI_4 + j as f64 * step])
                .map_err(|e| JsError::new(&e.to_string()))?;
            out.push(pp_rate(&cs, &p, &a));
        }
    }
    Ok(out)
}

/// Best plain equation and best deep-hole precoded equation as JSON.
#[wasm_bindgen]
pub fn select_precoder(h: &[f64], snr_db: f64, max_odd: u32) -> Result<String, JsError> {
    let cs = channel(h, snr_db)?;
    let cb = PhaseCodebook::deep_hole(max_odd, cs.users()).map_err(|e| JsError::new(&e.to_string()))?;
    let limit = ball_limit(cs.norm_bound());
    let plain = best_coefficients(&SearchProblem::for_channel(&cs).with_enum_limit(limit));
    let sel = select_precoder_with_limit(&cs, &cb, limit);
    let pairs = |a: &[GaussInt]| a.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>();
    Ok(serde_json::json!({
        "plain": { "a": pairs(&plain.coeffs), "rate": plain.rate() },
        "precoded": {
            "a": pairs(&sel.equation.coeffs),
            "rate": sel.rate,
            "phases": sel.precoder.phases(),
            "indices": sel.feedback_indices,
            "feedback_bits": cb.payload_bits(),
        },
    })
    .to_string())
}
