#![no_main]

use dci::corpus::{parse_processed, write_processed};
use dci::Vocabulary;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let mut vocab = Vocabulary::new();
    let Ok(docs) = parse_processed(text, &mut vocab) else { return };
    // Whatever parses must survive a write/read cycle.
    let written = write_processed(&docs, &vocab);
    let mut again = Vocabulary::new();
    let reparsed = parse_processed(&written, &mut again).expect("reparse of written corpus");
    assert_eq!(docs.len(), reparsed.len());
    for (a, b) in docs.iter().zip(&reparsed) {
        assert_eq!(a.label, b.label);
        assert_eq!(a.len(), b.len());
    }
});
