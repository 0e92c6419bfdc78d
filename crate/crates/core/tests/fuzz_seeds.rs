// Replays the checked-in fuzz seed corpora through the same invariants the
// fuzz targets assert, so they are exercised without a fuzzing toolchain.

use std::fs;
use std::path::PathBuf;

use dci::corpus::{parse_dictionary, parse_processed, write_processed};
use dci::harness::{parse_report, render_report, ReportFormat};
use dci::manifest::Manifest;
use dci::svm::SvmModel;
use dci::Vocabulary;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn processed_corpus_seeds_round_trip() {
    let mut parsed = 0;
    for (name, text) in seeds("processed_corpus") {
        let mut vocab = Vocabulary::new();
        let Ok(docs) = parse_processed(&text, &mut vocab) else { continue };
        parsed += 1;
        let mut again = Vocabulary::new();
        let back = parse_processed(&write_processed(&docs, &vocab), &mut again).unwrap();
        assert_eq!(docs.len(), back.len(), "{name}");
        for (a, b) in docs.iter().zip(&back) {
            assert_eq!(a.label, b.label, "{name}");
            assert_eq!(a.len(), b.len(), "{name}");
        }
    }
    assert!(parsed >= 2);
}

#[test]
fn invalid_corpus_seed_is_rejected() {
    let text = seeds("processed_corpus").into_iter().find(|(n, _)| n == "invalid").unwrap().1;
    assert!(parse_processed(&text, &mut Vocabulary::new()).is_err());
}

#[test]
fn dictionary_seeds_parse() {
    for (name, text) in seeds("dictionary") {
        match name.as_str() {
            // Ends with a one-term line.
            "spaces_and_duplicates" => assert!(parse_dictionary(&text).is_err()),
            _ => assert!(!parse_dictionary(&text).unwrap().is_empty(), "{name}"),
        }
    }
}

#[test]
fn manifest_seeds() {
    for (name, text) in seeds("manifest") {
        let parsed = Manifest::parse(&text);
        match name.as_str() {
            "duplicate" => assert!(parsed.is_err()),
            _ => assert!(parsed.is_ok(), "{name}: {:?}", parsed.err()),
        }
    }
}

#[test]
fn results_json_seeds_round_trip() {
    for (name, text) in seeds("results_json") {
        let report = parse_report(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        let json = render_report(&report.results, &report.metadata, ReportFormat::Json).unwrap();
        assert_eq!(parse_report(&json).unwrap(), report, "{name}");
        render_report(&report.results, &report.metadata, ReportFormat::Markdown).unwrap();
        render_report(&report.results, &report.metadata, ReportFormat::Csv).unwrap();
    }
}

#[test]
fn model_dump_seeds_round_trip() {
    for (name, text) in seeds("model_dump") {
        let Ok(model) = SvmModel::from_text(&text) else { continue };
        let back = SvmModel::from_text(&model.to_text()).unwrap();
        assert_eq!(back, model, "{name}");
    }
}
