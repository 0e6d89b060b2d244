#![no_main]

use libfuzzer_sys::fuzz_target;
use ssalt::dataset::DatasetFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(ds) = DatasetFile::parse(text) else {
        return;
    };
    // A parsed file must render and re-parse to the same structure, and its
    // stage split must never panic.
    let _ = ds.experiment_data();
    let round = DatasetFile::parse(&ds.to_string()).expect("rendered dataset must re-parse");
    assert_eq!(round, ds);
});
