#![no_main]

use libfuzzer_sys::fuzz_target;
use spinvar::cpn::IntegrationResult;

fuzz_target!(|data: &[u8]| {
    if let Ok(r) = serde_json::from_slice::<IntegrationResult>(data) {
        let text = serde_json::to_vec(&r).unwrap();
        let back: IntegrationResult = serde_json::from_slice(&text).unwrap();
        assert_eq!(back.method, r.method);
        assert_eq!(back.samples, r.samples);
    }
});
