#![no_main]

use libfuzzer_sys::fuzz_target;
use mallows::perm::components;
use mallows::sample::p_shifted_from_draws;

fuzz_target!(|data: &[u8]| {
    let draws: Vec<u64> = data
        .chunks(4)
        .map(|c| c.iter().fold(0u64, |acc, &b| (acc << 8) | u64::from(b)))
        .collect();
    if let Ok(prefix) = p_shifted_from_draws(&draws) {
        assert_eq!(prefix.len(), draws.len());
        let mut sorted = prefix.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), prefix.len());
        let _ = components(&prefix);
    }
});
