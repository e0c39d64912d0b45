#![no_main]

use libfuzzer_sys::fuzz_target;
use spinvar::UncertaintyReport;

fuzz_target!(|data: &[u8]| {
    if let Ok(r) = serde_json::from_slice::<UncertaintyReport>(data) {
        let text = serde_json::to_vec(&r).unwrap();
        let back: UncertaintyReport = serde_json::from_slice(&text).unwrap();
        assert_eq!(back.heisenberg_saturated, r.heisenberg_saturated);
        assert_eq!(back.both_sides_zero, r.both_sides_zero);
    }
});
