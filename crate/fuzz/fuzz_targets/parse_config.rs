#![no_main]

use libfuzzer_sys::fuzz_target;
use mallows::io::{parse_key_values, parse_names};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_key_values(text);
    let _ = parse_names(text);
});
