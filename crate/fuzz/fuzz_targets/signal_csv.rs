#![no_main]

use libfuzzer_sys::fuzz_target;
use music_core::signal_model::Signal;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(signal) = Signal::from_csv(text) {
        let again = Signal::from_csv(&signal.to_csv(&[])).expect("emitted CSV must parse");
        assert_eq!(again, signal);
    }
});
