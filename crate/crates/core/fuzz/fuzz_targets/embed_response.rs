#![no_main]

use cupcleaner::embedding::{decode_embed_response, decode_health};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let expected = data.first().map_or(0, |&b| usize::from(b % 8));
    if let Ok(response) = decode_embed_response(data, expected) {
        assert_eq!(response.vectors.len(), expected);
        assert!(response.vectors.iter().all(|v| v.len() == response.dim));
    }
    let _ = decode_health(data);
});
