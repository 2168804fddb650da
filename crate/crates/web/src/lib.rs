//! Browser bindings. Every function takes plain values or JSON text and
//! returns JSON text.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use wiretap_core::game::{self, examples, CandidateConfig, SearchBudget};
use wiretap_core::gaussian::{self, GaussianParams, Leakage, SweepGrid};

fn text(v: Result<Value, String>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

/// Region vertices and the best sum rate, with and without the eavesdropper.
pub fn region(params_json: &str) -> Result<Value, String> {
    let gp: GaussianParams = serde_json::from_str(params_json).map_err(|e| e.to_string())?;
    let grid = SweepGrid::default_for(&gp);
    let mut out = serde_json::Map::new();
    for (key, mode) in [
        ("with_eavesdropper", Leakage::WithEavesdropper),
        ("without", Leakage::NoEavesdropper),
    ] {
        let r = gaussian::sweep_region_mode(&gp, &grid, mode)
            .map_err(|e| e.to_string())?
            .region;
        out.insert(
            key.into(),
            json!({ "vertices": r.vertices, "max_sum_rate": r.max_sum_rate() }),
        );
    }
    Ok(Value::Object(out))
}

/// Rate with decoder side information at each `alpha1`, and its limit.
#[allow(non_snake_case)]
pub fn side_info(P: f64, N1: f64, N3: f64, Q1: f64, alphas: &[f64]) -> Result<Value, String> {
    let gp = GaussianParams {
        P,
        N1,
        N2: N1,
        N3,
        Q1,
        Q2: 0.0,
        rho: 0.0,
    };
    let rates = alphas
        .iter()
        .map(|&a| gaussian::decoder_side_info_rate(&gp, a))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(json!({ "alpha1": alphas, "rate": rates, "capacity": gaussian::capacity_limit(&gp) }))
}

/// `nu` for one of the bundled games, between its two oracles.
pub fn game_bound(name: &str, samples: usize, steps: usize, seed: u64) -> Result<Value, String> {
    let g = match name {
        "perfect_monitoring" => examples::perfect_monitoring(),
        "blind" => examples::blind(),
        "noisy" => examples::noisy(),
        other => return Err(format!("unknown game `{other}`")),
    };
    let cfg = CandidateConfig {
        samples,
        product_steps: steps,
        search: SearchBudget::default(),
        seed,
    };
    let res = game::solve_game(&g, &cfg).map_err(|e| e.to_string())?;
    Ok(json!({
        "nu": res.nu,
        "product_grid_oracle": game::product_grid_oracle(&g, steps),
        "full_correlation_oracle": game::full_correlation_oracle(&g).map_err(|e| e.to_string())?,
        "candidates": res.candidates.len(),
        "punished_mix": res.punished_mix,
    }))
}

#[wasm_bindgen(js_name = gaussianRegion)]
pub fn gaussian_region_js(params_json: &str) -> Result<String, JsError> {
    text(region(params_json))
}

#[wasm_bindgen(js_name = sideInfoCurve)]
#[allow(non_snake_case)]
pub fn side_info_js(P: f64, N1: f64, N3: f64, Q1: f64, alphas: Vec<f64>) -> Result<String, JsError> {
    text(side_info(P, N1, N3, Q1, &alphas))
}

#[wasm_bindgen(js_name = gameBound)]
pub fn game_bound_js(name: &str, samples: usize, steps: usize, seed: u64) -> Result<String, JsError> {
    text(game_bound(name, samples, steps, seed))
}
