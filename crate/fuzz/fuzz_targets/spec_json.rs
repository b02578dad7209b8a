#![no_main]

use libfuzzer_sys::fuzz_target;
use music_core::experiments::{PhaseSpec, SweepSpec, TrialSpec};

fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = serde_json::from_slice::<TrialSpec>(data) {
        let _ = spec.validate();
    }
    if let Ok(spec) = serde_json::from_slice::<PhaseSpec>(data) {
        let _ = spec.validate();
    }
    if let Ok(spec) = serde_json::from_slice::<SweepSpec>(data) {
        let _ = spec.trials.validate();
    }
});
