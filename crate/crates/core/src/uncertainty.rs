//! Expectation values, variances, covariances, the invariant uncertainty
//! `Δ` and the Robertson / spin-Heisenberg inequalities.
//!
//! `⟨A²⟩` is evaluated as `‖Aψ‖²`, which is exact for hermitian `A` and
//! needs one matrix-vector product per operator.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{SpinMatrices, SpinOperator};
use crate::states::PureState;

/// Relative tolerance for the agreement of the two routes to `Δ`.
pub const DELTA_ROUTE_TOLERANCE: f64 = 1e-10;
/// Absolute floor (in units of `ħ⁴`) below which both inequality sides count as zero.
pub const SATURATION_FLOOR: f64 = 1e-14;
/// Relative tolerance of the saturation flag.
pub const SATURATION_TOLERANCE: f64 = 1e-9;

fn check_dim(state: &PureState, op: &SpinOperator) -> Result<()> {
    if op.dim() != state.dimension() {
        return Err(Error::DimensionMismatch {
            expected: state.dimension(),
            found: op.dim(),
        });
    }
    Ok(())
}

/// `(⟨A⟩, Aψ)` with the imaginary residue checked.
fn apply(state: &PureState, op: &SpinOperator) -> Result<(f64, DVector<Complex64>)> {
    check_dim(state, op)?;
    let a_psi = op.matrix() * state.amplitudes();
    let value = state.amplitudes().dotc(&a_psi);
    let scale = op.max_abs().max(f64::MIN_POSITIVE);
    if value.im.abs() > 1e-12 * scale {
        return Err(Error::NonHermitian {
            residue: value.im.abs(),
        });
    }
    Ok((value.re, a_psi))
}

pub fn expectation(state: &PureState, op: &SpinOperator) -> Result<f64> {
    apply(state, op).map(|(v, _)| v)
}

/// `⟨A²⟩ − ⟨A⟩²`.
pub fn variance(state: &PureState, op: &SpinOperator) -> Result<f64> {
    let (mean, a_psi) = apply(state, op)?;
    Ok(a_psi.norm_squared() - mean * mean)
}

/// `σ_AB = ⟨AB + BA⟩ − 2⟨A⟩⟨B⟩`.
pub fn covariance(state: &PureState, a: &SpinOperator, b: &SpinOperator) -> Result<f64> {
    let (ma, a_psi) = apply(state, a)?;
    let (mb, b_psi) = apply(state, b)?;
    // ⟨ψ|AB|ψ⟩ = (Aψ)†(Bψ); the anticommutator takes twice its real part
    Ok(2.0 * a_psi.dotc(&b_psi).re - 2.0 * ma * mb)
}

/// `⟨[A,B]⟩`, purely imaginary for hermitian `A`, `B`; returns its imaginary part.
pub fn commutator_expectation_im(state: &PureState, a: &SpinOperator, b: &SpinOperator) -> Result<f64> {
    let (_, a_psi) = apply(state, a)?;
    let (_, b_psi) = apply(state, b)?;
    Ok(2.0 * a_psi.dotc(&b_psi).im)
}

/// Means and variances of the three generators.
#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub mean: [f64; 3],
    pub variance: [f64; 3],
}

pub fn moments(state: &PureState, ops: &SpinMatrices) -> Result<Moments> {
    let mut mean = [0.0; 3];
    let mut var = [0.0; 3];
    for (i, op) in ops.cartesian().into_iter().enumerate() {
        let (m, a_psi) = apply(state, op)?;
        mean[i] = m;
        var[i] = a_psi.norm_squared() - m * m;
    }
    Ok(Moments {
        mean,
        variance: var,
    })
}

/// `⟨J_i⟩⟨J_i⟩`.
pub fn mean_spin_squared(state: &PureState, ops: &SpinMatrices) -> Result<f64> {
    let m = moments(state, ops)?;
    Ok(m.mean.iter().map(|x| x * x).sum())
}

/// `Δ = ΔJx² + ΔJy² + ΔJz²`, cross-checked against `ħ²j(j+1) − ⟨J_i⟩⟨J_i⟩`.
pub fn delta(state: &PureState, ops: &SpinMatrices) -> Result<f64> {
    let m = moments(state, ops)?;
    delta_from_moments(&m, ops)
}

fn delta_from_moments(m: &Moments, ops: &SpinMatrices) -> Result<f64> {
    let by_variances: f64 = m.variance.iter().sum();
    let by_casimir = ops.casimir_value() - m.mean.iter().map(|x| x * x).sum::<f64>();
    let scale = ops.casimir_value().max(f64::MIN_POSITIVE);
    if (by_variances - by_casimir).abs() > DELTA_ROUTE_TOLERANCE * scale {
        return Err(Error::Internal(format!(
            "variance sum {by_variances} and Casimir route {by_casimir} disagree"
        )));
    }
    Ok(by_variances)
}

/// Per-state record of every quantity entering the uncertainty relations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub hbar: f64,
    /// `⟨Jx⟩, ⟨Jy⟩, ⟨Jz⟩`.
    pub mean_j: [f64; 3],
    /// `ΔJx², ΔJy², ΔJz²`.
    pub variances: [f64; 3],
    pub covariance_xy: f64,
    pub delta: f64,
    /// `ΔJx² ΔJy²`.
    pub heisenberg_lhs: f64,
    /// `(ħ²/4)⟨Jz⟩²`.
    pub heisenberg_rhs: f64,
    /// `¼(σ_xy² − ⟨[Jx,Jy]⟩²)`.
    pub robertson_rhs: f64,
    /// `⟨J_i⟩⟨J_i⟩`.
    pub invariant_msq: f64,
    pub heisenberg_saturated: bool,
    /// Both inequality sides fell below the absolute floor.
    pub both_sides_zero: bool,
}

pub fn inequality_report(state: &PureState, ops: &SpinMatrices) -> Result<UncertaintyReport> {
    let m = moments(state, ops)?;
    let delta = delta_from_moments(&m, ops)?;
    let hbar = ops.hbar;
    let covariance_xy = covariance(state, &ops.jx, &ops.jy)?;
    let comm_im = commutator_expectation_im(state, &ops.jx, &ops.jy)?;
    let lhs = m.variance[0] * m.variance[1];
    let rhs = hbar * hbar * m.mean[2] * m.mean[2] / 4.0;
    // ⟨[Jx,Jy]⟩ = i·comm_im, so −⟨[Jx,Jy]⟩² = comm_im²
    let robertson_rhs = 0.25 * (covariance_xy * covariance_xy + comm_im * comm_im);
    let j = ops.s.j();
    let h4 = hbar.powi(4);
    let floor = SATURATION_FLOOR * h4;
    let both_sides_zero = lhs.abs() <= floor && rhs.abs() <= floor;
    let scale = lhs.max(h4 * j.powi(4)).max(floor);
    Ok(UncertaintyReport {
        hbar,
        mean_j: m.mean,
        variances: m.variance,
        covariance_xy,
        delta,
        heisenberg_lhs: lhs,
        heisenberg_rhs: rhs,
        robertson_rhs,
        invariant_msq: m.mean.iter().map(|x| x * x).sum(),
        heisenberg_saturated: (lhs - rhs).abs() <= SATURATION_TOLERANCE * scale,
        both_sides_zero,
    })
}
