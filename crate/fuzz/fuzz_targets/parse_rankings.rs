#![no_main]

use libfuzzer_sys::fuzz_target;
use mallows::data::Format;
use mallows::io::{parse_rankings, write_rankings};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for format in [None, Some(Format::Counted), Some(Format::Lists)] {
        if let Ok(parsed) = parse_rankings(text, format) {
            // whatever parses must survive a write/read cycle unchanged
            let again =
                parse_rankings(&write_rankings(&parsed, Format::Counted), None).expect("written dataset parses");
            assert_eq!(again.observations(), parsed.observations());
            assert_eq!(again.universe(), parsed.universe());
        }
    }
});
