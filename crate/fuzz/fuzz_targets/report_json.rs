#![no_main]

use libfuzzer_sys::fuzz_target;
use music_core::experiments::{Report, ReportFormat};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = Report::from_json(text) {
        for format in ReportFormat::ALL {
            let _ = report.render(format);
        }
    }
});
