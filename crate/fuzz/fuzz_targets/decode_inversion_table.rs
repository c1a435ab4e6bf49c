#![no_main]

use libfuzzer_sys::fuzz_target;
use mallows::perm::{decode_inversion_table, InversionTable};

fuzz_target!(|data: &[u8]| {
    // first byte picks n, the rest are stage values
    let Some((&n, rest)) = data.split_first() else {
        return;
    };
    let n = usize::from(n);
    let table = InversionTable(rest.iter().map(|&b| u64::from(b)).collect());
    if let Ok(p) = decode_inversion_table(&table, n) {
        assert_eq!(p.inversion_table(), table);
    }
});
