#![no_main]

use libfuzzer_sys::fuzz_target;
use spinvar::analysis::ClaimBundle;

fuzz_target!(|data: &str| {
    if let Ok(bundle) = ClaimBundle::from_json(data) {
        let text = serde_json::to_string(&bundle).unwrap();
        assert_eq!(ClaimBundle::from_json(&text).unwrap(), bundle);
    }
});
