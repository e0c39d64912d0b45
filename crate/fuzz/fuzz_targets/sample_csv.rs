#![no_main]

use libfuzzer_sys::fuzz_target;
use spinvar::sample_csv::{read_sample_csv, write_sample_csv};

fuzz_target!(|data: &[u8]| {
    let Ok((_, rows)) = read_sample_csv(data) else {
        return;
    };
    let finite = rows.iter().all(|r| {
        r.amplitudes.iter().all(|a| a.re.is_finite() && a.im.is_finite())
            && r.delta.is_finite()
            && r.mean_j.iter().all(|x| x.is_finite())
    });
    if finite && !rows.is_empty() {
        let mut buf = Vec::new();
        write_sample_csv(&mut buf, &rows).unwrap();
        assert_eq!(read_sample_csv(buf.as_slice()).unwrap().1, rows);
    }
});
