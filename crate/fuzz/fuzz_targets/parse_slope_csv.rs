#![no_main]

use libfuzzer_sys::fuzz_target;
use wqed::calibration::{assemble_mutual_matrix, parse_slope_csv};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(records) = parse_slope_csv(&text) {
        let n = records.iter().map(|m| m.x.max(m.y) + 1).max().unwrap_or(1).min(16);
        let _ = assemble_mutual_matrix(&records, n);
    }
});
