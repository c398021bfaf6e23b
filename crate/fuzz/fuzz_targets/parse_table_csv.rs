#![no_main]

use libfuzzer_sys::fuzz_target;
use wqed::experiment::read_table_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(parsed) = read_table_csv(text) {
        let width = parsed.table.columns.len();
        assert!(parsed.table.rows.iter().all(|r| r.len() == width));
    }
});
