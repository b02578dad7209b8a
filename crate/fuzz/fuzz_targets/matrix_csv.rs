#![no_main]

use libfuzzer_sys::fuzz_target;
use music_core::hankel_subspace::{dump_matrix_csv, parse_matrix_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(a) = parse_matrix_csv(text) {
        let again = parse_matrix_csv(&dump_matrix_csv(&a)).expect("dumped matrix must parse");
        assert_eq!(again, a);
    }
});
