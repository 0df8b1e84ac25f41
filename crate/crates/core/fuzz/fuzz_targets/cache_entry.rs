#![no_main]

use cupcleaner::embedding::{decode_entry, encode_entry};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(values) = decode_entry(data) {
        assert_eq!(encode_entry(&values), data);
    }
});
