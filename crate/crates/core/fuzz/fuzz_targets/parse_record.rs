#![no_main]

use cupcleaner::corpus::{parse_dataset, parse_record};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let (samples, rejects) = parse_dataset(data, None);
    let lines = data.split(|&b| b == b'\n').count() - usize::from(data.ends_with(b"\n") || data.is_empty());
    assert_eq!(samples.len() + rejects.len(), lines);

    if let Ok(line) = std::str::from_utf8(data) {
        if let Ok(sample) = parse_record(line, 1, None) {
            // anything accepted must survive a write/read cycle
            let again = serde_json::to_string(&sample).unwrap();
            assert_eq!(parse_record(&again, 1, None).unwrap(), sample);
        }
    }
});
