//! Entry points shared by the fuzz targets and the corpus replay test.
//! Each one panics if a parsed value breaks an invariant.

use std::str::FromStr;

use crate::experiment::{ExperimentConfig, InputSpec};
use crate::protocol::InputState;
use crate::sim::PauliString;

/// Accepted configs must validate and survive a JSON round trip.
pub fn parse_config(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ExperimentConfig::from_json(text) else { return };
    cfg.validate().expect("from_json returned an invalid config");
    let again = ExperimentConfig::from_json(&cfg.to_json().expect("serialize")).expect("reparse");
    assert_eq!(cfg, again);
}

/// Display and parse are inverse; a Pauli string squares to ±identity.
pub fn parse_pauli(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(p) = PauliString::from_str(text) else { return };
    let shown = p.to_string();
    assert_eq!(PauliString::from_str(&shown).expect("reparse"), p, "{shown}");
    let sq = p.mul(&p).expect("same width");
    assert_eq!(sq.weight(), 0);
    assert_eq!(p.unsigned().weight(), p.weight());
}

/// Both a bare name and a JSON input spec must give a normalized state.
pub fn parse_input(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = InputState::named(text) {
        check_state(&s);
    }
    if let Ok(spec) = serde_json::from_str::<InputSpec>(text) {
        if let Ok(s) = spec.resolve() {
            check_state(&s);
        }
    }
}

fn check_state(s: &InputState) {
    let (a, b) = s.amplitudes();
    let norm = a.norm_sqr() + b.norm_sqr();
    assert!((norm - 1.0).abs() < 1e-9, "norm {norm} for {}", s.name);
    let r: f64 = s.bloch().iter().map(|v| v * v).sum();
    assert!((r - 1.0).abs() < 1e-9, "bloch length {r} for {}", s.name);
}
