#![no_main]

use libfuzzer_sys::fuzz_target;
use spinvar::SpinQuantum;

fuzz_target!(|data: &str| {
    if let Ok(s) = data.parse::<SpinQuantum>() {
        // the canonical text form parses back to the same spin
        assert_eq!(s.to_string().parse::<SpinQuantum>().unwrap(), s);
    }
});
