#![no_main]

use libfuzzer_sys::fuzz_target;
use music_core::signal_model::ModelFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = ModelFile::from_json(text) {
        let _ = file.model();
    }
});
