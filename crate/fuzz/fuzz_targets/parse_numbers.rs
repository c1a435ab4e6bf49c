#![no_main]

use libfuzzer_sys::fuzz_target;
use mallows::io::{parse_grid, parse_reals};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = parse_grid(text) {
        assert!(!grid.is_empty());
        assert!(grid.windows(2).all(|w| w[0] <= w[1]));
    }
    let _ = parse_reals(text);
});
