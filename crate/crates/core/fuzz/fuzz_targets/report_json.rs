#![no_main]

use cupcleaner::report::{report_render, CleanReport};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(report) = CleanReport::from_json(data) {
        let _ = report_render(&report);
        let again = CleanReport::from_json(report.to_json().as_bytes()).unwrap();
        assert_eq!(again.to_json(), report.to_json());
    }
});
