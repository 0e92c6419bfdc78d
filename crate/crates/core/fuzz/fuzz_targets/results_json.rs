#![no_main]

use dci::harness::{parse_report, render_report, ReportFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(report) = parse_report(text) else { return };
    // Rendering may refuse (empty or mixed results); when it succeeds the
    // JSON must read back to the same report.
    if let Ok(json) = render_report(&report.results, &report.metadata, ReportFormat::Json) {
        assert_eq!(parse_report(&json).expect("reparse"), report);
    }
    let _ = render_report(&report.results, &report.metadata, ReportFormat::Markdown);
    let _ = render_report(&report.results, &report.metadata, ReportFormat::Csv);
});
