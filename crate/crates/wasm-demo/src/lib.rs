//! Browser bindings for the simulator. Every export takes plain numbers and
//! returns a JSON string, so the page needs no generated type glue.

use qkd_core::adversary::EveStrategy;
use qkd_core::analysis::distinguish_ensembles;
use qkd_core::protocol::Scheme;
use qkd_core::quantum::Basis;
use qkd_core::rng::seeded;
use qkd_core::scenario::{run_batch, ScenarioConfig};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// QBER and Eve's bit agreement for the one-axis scheme as Eve's measurement
/// axis turns away from the shared axis, from 0 to π/2 in `steps` steps.
#[wasm_bindgen]
pub fn tap_sweep(m: usize, steps: usize, seed: u64) -> Result<String, JsValue> {
    to_js(tap_sweep_value(m, steps, seed))
}

/// Measures `n` draws from each of the Z and X ensembles along `theta` and
/// tests whether the outcome frequencies differ.
#[wasm_bindgen]
pub fn ensemble_test(theta: f64, n: usize, seed: u64) -> Result<String, JsValue> {
    to_js(ensemble_test_value(theta, n, seed))
}

/// Key accounting for BB84 and the pre-shared-basis scheme under the same
/// channel. `eve` is one of "none", "random_zx" or "fixed_z".
#[wasm_bindgen]
pub fn compare_schemes(m: usize, rounds: usize, noise_p: f64, eve: &str, seed: u64) -> Result<String, JsValue> {
    to_js(compare_schemes_value(m, rounds, noise_p, eve, seed))
}

fn to_js(v: Result<Value, String>) -> Result<String, JsValue> {
    v.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

pub fn tap_sweep_value(m: usize, steps: usize, seed: u64) -> Result<Value, String> {
    if steps == 0 {
        return Err("steps must be at least 1".into());
    }
    let mut points = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        let offset = i as f64 * std::f64::consts::FRAC_PI_2 / steps as f64;
        let config = ScenarioConfig {
            scheme: Scheme::Simple,
            m,
            eve: EveStrategy::InterceptFixed { basis: Basis::new(offset).map_err(|e| e.to_string())? },
            qber_abort_threshold: 0.49,
            seed,
            ..Default::default()
        };
        let batch = run_batch(&config).map_err(|e| e.to_string())?;
        let agreement = batch.attack().map_or(0.0, |a| a.eve_bit_agreement);
        points.push(json!({
            "offset": offset,
            "qber": batch.mean_qber(),
            "eve_agreement": agreement,
        }));
    }
    Ok(json!({ "m": m, "points": points }))
}

pub fn ensemble_test_value(theta: f64, n: usize, seed: u64) -> Result<Value, String> {
    let basis = Basis::new(theta).map_err(|e| e.to_string())?;
    let report = distinguish_ensembles(n, basis, 0.01, &mut seeded(seed)).map_err(|e| e.to_string())?;
    Ok(json!({ "theta": basis.theta(), "report": report, "summary": report.summary() }))
}

pub fn compare_schemes_value(m: usize, rounds: usize, noise_p: f64, eve: &str, seed: u64) -> Result<Value, String> {
    let eve = match eve {
        "none" => EveStrategy::None,
        "random_zx" => EveStrategy::InterceptRandomZx,
        "fixed_z" => EveStrategy::InterceptFixed { basis: Basis::Z },
        other => return Err(format!("unknown eve `{other}`")),
    };
    let mut out = Vec::new();
    for scheme in [Scheme::Bb84, Scheme::Nopab] {
        let config = ScenarioConfig {
            scheme,
            m,
            rounds,
            noise_p,
            eve: eve.clone(),
            seed,
            ..Default::default()
        };
        let batch = run_batch(&config).map_err(|e| e.to_string())?;
        let rep = &batch.repetitions[0];
        out.push(json!({
            "scheme": scheme.name(),
            "qber": rep.qber(),
            "sifted_fraction": rep.sifted_fraction(),
            "aborted": rep.expansion.aborted(),
            "rounds_run": rep.expansion.sessions.len(),
            "ledger": rep.expansion.ledger,
        }));
    }
    Ok(json!({ "schemes": out }))
}
