#![no_main]

use dci::svm::SvmModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = SvmModel::from_text(text) {
        let back = SvmModel::from_text(&model.to_text()).expect("reparse of dumped model");
        assert_eq!(back.weights.len(), model.weights.len());
    }
});
