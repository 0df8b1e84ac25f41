#![no_main]

use cupcleaner::textdiff::{lcs_len, overlap_score, tokenize, word_diff, TextKind};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let (old, new) = text.split_once('\u{0}').unwrap_or((text, ""));
    let old = tokenize(old, TextKind::Code);
    let new = tokenize(new, TextKind::Comment);
    assert_eq!(tokenize(&old.join(), TextKind::Code), old);

    let d = word_diff(&old, &new);
    assert!(d.changed_old.len() <= old.len() && d.changed_new.len() <= new.len());
    assert_eq!(old.len() - d.changed_old.len(), new.len() - d.changed_new.len());
    let o = overlap_score(&d.changed_old, &d.changed_new);
    assert!((0.0..=1.0).contains(&o));

    if let (Some(a), Some(b)) = (old.tokens.first(), new.tokens.first()) {
        assert_eq!(lcs_len(a, b), lcs_len(b, a));
    }
});
