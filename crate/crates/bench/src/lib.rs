//! Benchmarks live in `benches/`; this module loads the shipped scenarios they run on.

use gensol_core::scenario::ScenarioConfig;

/// Loads a scenario from the workspace `scenarios/` directory with `Nx` overridden.
pub fn scenario(name: &str, nx: usize) -> ScenarioConfig {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut cfg = ScenarioConfig::from_json(&text).expect("shipped scenario parses");
    cfg.numerics.nx = nx;
    cfg
}
