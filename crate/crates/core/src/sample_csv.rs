//! Sampled states as CSV: `re_0,im_0,…,re_{d−1},im_{d−1},delta,jx,jy,jz`.
//!
//! Floats are written with 17 significant digits so a read-back is exact.

use std::io::{Read, Write};

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spin::{SpinMatrices, SpinQuantum};
use crate::states::{random_state_indexed, PureState};
use crate::uncertainty::moments;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub amplitudes: Vec<Complex64>,
    pub delta: f64,
    pub mean_j: [f64; 3],
}

impl SampleRow {
    pub fn of_state(state: &PureState, ops: &SpinMatrices) -> Result<Self> {
        let m = moments(state, ops)?;
        Ok(Self {
            amplitudes: state.amplitudes().iter().copied().collect(),
            delta: m.variance.iter().sum(),
            mean_j: m.mean,
        })
    }

    pub fn state(&self, s: SpinQuantum) -> Result<PureState> {
        PureState::from_amplitudes(s, DVector::from_vec(self.amplitudes.clone()))
    }
}

/// Haar-random states `0..count` of stream `seed` with their moments.
pub fn sample_rows(ops: &SpinMatrices, count: usize, seed: u64) -> Result<Vec<SampleRow>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| SampleRow::of_state(&random_state_indexed(ops.s, seed, i), ops))
        .collect()
}

pub fn header(dim: usize) -> Vec<String> {
    let mut h = Vec::with_capacity(2 * dim + 4);
    for i in 0..dim {
        h.push(format!("re_{i}"));
        h.push(format!("im_{i}"));
    }
    h.extend(["delta", "jx", "jy", "jz"].map(String::from));
    h
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_sample_csv<W: Write>(out: W, rows: &[SampleRow]) -> Result<()> {
    let dim = rows.first().map_or(0, |r| r.amplitudes.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(dim)).map_err(io_err)?;
    for row in rows {
        if row.amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: row.amplitudes.len(),
            });
        }
        let mut rec: Vec<String> = row
            .amplitudes
            .iter()
            .flat_map(|c| [fmt(c.re), fmt(c.im)])
            .collect();
        rec.push(fmt(row.delta));
        rec.extend(row.mean_j.iter().map(|&x| fmt(x)));
        w.write_record(rec).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

fn io_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Parses a sample file; the spin is inferred from the column count.
pub fn read_sample_csv<R: Read>(input: R) -> Result<(SpinQuantum, Vec<SampleRow>)> {
    let mut r = csv::Reader::from_reader(input);
    let head: Vec<String> = r.headers().map_err(io_err)?.iter().map(str::to_string).collect();
    if head.len() < 6 || !head.len().is_multiple_of(2) {
        return Err(Error::Parse(format!("unexpected column count {}", head.len())));
    }
    let dim = (head.len() - 4) / 2;
    if head != header(dim) {
        return Err(Error::Parse("unexpected header".into()));
    }
    let twice_j = u32::try_from(dim - 1).map_err(|_| Error::Parse("dimension too large".into()))?;
    let s = SpinQuantum::from_twice(twice_j);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io_err)?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{f:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != head.len() {
            return Err(Error::Parse(format!("row has {} fields", vals.len())));
        }
        let amplitudes = vals[..2 * dim]
            .chunks(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        rows.push(SampleRow {
            amplitudes,
            delta: vals[2 * dim],
            mean_j: [vals[2 * dim + 1], vals[2 * dim + 2], vals[2 * dim + 3]],
        });
    }
    Ok((s, rows))
}
