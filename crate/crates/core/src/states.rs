//! State families: basis states, coherent states `|z⟩`, orbit states
//! `|z;m⟩`, intelligent states `|τ,N⟩`, the `α` family and Fubini-Study
//! uniform random states.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;
use crate::spin::{group_element, GroupElement, SpinMatrices, SpinQuantum};

/// Unit vector in the spin-`j` space, amplitudes in descending-`m` order.
///
/// Constructors normalize and fix the global phase so that the first
/// non-negligible amplitude is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    s: SpinQuantum,
    amplitudes: DVector<Complex64>,
}

impl PureState {
    /// Normalize and gauge-fix arbitrary amplitudes.
    pub fn from_amplitudes(s: SpinQuantum, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != s.dimension() {
            return Err(Error::DimensionMismatch {
                expected: s.dimension(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cannot normalize a vector of norm {norm}"
            )));
        }
        let mut state = Self {
            s,
            amplitudes: amplitudes / Complex64::from(norm),
        };
        state.fix_gauge();
        Ok(state)
    }

    /// Amplitudes used verbatim; only the norm is corrected.
    pub(crate) fn from_raw_normalized(s: SpinQuantum, amplitudes: DVector<Complex64>) -> Self {
        let norm = amplitudes.norm();
        Self {
            s,
            amplitudes: amplitudes / Complex64::from(norm),
        }
    }

    fn fix_gauge(&mut self) {
        let largest = self.amplitudes.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if let Some(k) = self.amplitudes.iter().position(|c| c.norm() > 1e-14 * largest) {
            let first = self.amplitudes[k];
            let phase = first.conj() / first.norm();
            self.amplitudes *= phase;
            // the product rounds; the gauge is exact by definition
            self.amplitudes[k] = Complex64::new(first.norm(), 0.0);
        }
    }

    pub fn spin(&self) -> SpinQuantum {
        self.s
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// `|c_k|²` in storage order.
    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn norm_defect(&self) -> f64 {
        (self.amplitudes.norm() - 1.0).abs()
    }

    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|⟨self|other⟩|`.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm()
    }

    /// Apply a matrix (e.g. a group element) and renormalize.
    pub fn transformed(&self, u: &DMatrix<Complex64>) -> Result<PureState> {
        if u.ncols() != self.dimension() || u.nrows() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: u.ncols(),
            });
        }
        PureState::from_amplitudes(self.s, u * &self.amplitudes)
    }

    /// Multiply by a global phase, without re-fixing the gauge.
    pub fn with_phase(&self, phase: f64) -> PureState {
        Self {
            s: self.s,
            amplitudes: &self.amplitudes * Complex64::from_polar(1.0, phase),
        }
    }
}

/// Point of the analytic chart on the coherent orbit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoherentLabel {
    Finite(Complex64),
    /// The point the chart misses; corresponds to `|−j⟩`.
    Infinity,
}

impl From<Complex64> for CoherentLabel {
    fn from(z: Complex64) -> Self {
        CoherentLabel::Finite(z)
    }
}

/// `ln k!` for `k = 0..=n`.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Assemble amplitudes given as `(ln|c|, arg c)`; `ln|c| = −∞` means zero.
fn assemble_log_polar(s: SpinQuantum, parts: &[(f64, f64)]) -> PureState {
    let top = parts
        .iter()
        .map(|&(l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    let amps = DVector::from_iterator(
        parts.len(),
        parts.iter().map(|&(l, arg)| {
            if l == f64::NEG_INFINITY {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar((l - top).exp(), arg)
            }
        }),
    );
    PureState::from_amplitudes(s, amps).expect("log-polar assembly has a unit leading term")
}

pub fn basis_state(s: SpinQuantum, twice_m: i64) -> Result<PureState> {
    let idx = s.index_of(twice_m)?;
    let mut amps = DVector::zeros(s.dimension());
    amps[idx] = Complex64::new(1.0, 0.0);
    Ok(PureState {
        s,
        amplitudes: amps,
    })
}

/// `|z⟩ = (1+|z|²)^{−j} e^{zJ−}|j⟩`, from the closed form
/// `c_{j−k} = √C(2j,k) z^k (1+|z|²)^{−j}`.
pub fn coherent_state(s: SpinQuantum, label: CoherentLabel) -> PureState {
    let n = s.twice_j() as usize;
    let z = match label {
        CoherentLabel::Infinity => {
            return basis_state(s, -i64::from(s.twice_j())).expect("|−j⟩ exists")
        }
        CoherentLabel::Finite(z) if z.norm() == 0.0 => {
            return basis_state(s, i64::from(s.twice_j())).expect("|j⟩ exists")
        }
        CoherentLabel::Finite(z) => z,
    };
    let lf = ln_factorials(n);
    let (ln_r, arg) = (z.norm().ln(), z.arg());
    let parts: Vec<(f64, f64)> = (0..=n)
        .map(|k| {
            let ln_binom = lf[n] - lf[k] - lf[n - k];
            (0.5 * ln_binom + k as f64 * ln_r, k as f64 * arg)
        })
        .collect();
    // the (1+|z|²)^{−j} prefactor is a common scale; renormalization absorbs it
    assemble_log_polar(s, &parts)
}

/// The `+ħj` eigenvector of `n̂·J⃗`, as a point of the analytic chart.
///
/// `n̂ = (sinθ cosφ, sinθ sinφ, cosθ)` corresponds to `z = tan(θ/2) e^{iφ}`.
pub fn coherent_from_direction(s: SpinQuantum, n: [f64; 3]) -> PureState {
    coherent_state(s, direction_to_label(n))
}

pub fn direction_to_label(n: [f64; 3]) -> CoherentLabel {
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    assert!(len > 0.0, "direction must be non-zero");
    let (x, y, zc) = (n[0] / len, n[1] / len, n[2] / len);
    if zc >= 0.0 {
        CoherentLabel::Finite(Complex64::new(x, y) / (1.0 + zc))
    } else {
        // tan(θ/2) = sinθ/(1+cosθ) = (1−cosθ)/sinθ; use the stable branch
        let rho = (x * x + y * y).sqrt();
        if rho == 0.0 {
            return CoherentLabel::Infinity;
        }
        let t = (1.0 - zc) / rho;
        if !t.is_finite() {
            return CoherentLabel::Infinity;
        }
        CoherentLabel::Finite(Complex64::from_polar(t, y.atan2(x)))
    }
}

/// Normalized direction of `exp(c·A)v` for nilpotent `A`.
///
/// Each series term is carried as a unit vector plus a log-norm so that the
/// sum can be formed without overflow.
pub(crate) fn exp_nilpotent_apply(
    a: &DMatrix<Complex64>,
    coeff: Complex64,
    v: &DVector<Complex64>,
) -> DVector<Complex64> {
    let mut terms: Vec<(f64, DVector<Complex64>)> = Vec::new();
    let n0 = v.norm();
    if n0 == 0.0 {
        return v.clone();
    }
    let mut unit = v / Complex64::from(n0);
    let mut log_norm = n0.ln();
    terms.push((log_norm, unit.clone()));
    for k in 1..=a.nrows() {
        let w = a * &unit * (coeff / k as f64);
        let wn = w.norm();
        if wn == 0.0 || !wn.is_finite() {
            break;
        }
        log_norm += wn.ln();
        unit = w / Complex64::from(wn);
        terms.push((log_norm, unit.clone()));
    }
    let top = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let mut sum = DVector::zeros(v.len());
    for (l, u) in &terms {
        sum += u * Complex64::from((l - top).exp());
    }
    let norm = sum.norm();
    sum / Complex64::from(norm)
}

/// `|z;m⟩ ∝ e^{zJ−/ħ} e^{−z̄J+/ħ}|m⟩`, with the `e^{−iθJz}` phase dropped.
pub fn generalized_coherent(s: SpinQuantum, z: Complex64, twice_m: i64) -> Result<PureState> {
    let start = basis_state(s, twice_m)?;
    let ops = SpinMatrices::new(s, 1.0);
    let raised = exp_nilpotent_apply(ops.jplus.matrix(), -z.conj(), start.amplitudes());
    let lowered = exp_nilpotent_apply(ops.jminus.matrix(), z, &raised);
    PureState::from_amplitudes(s, lowered)
}

/// `ln|x|` and sign of a big integer without going through `f64` overflow.
fn bigint_ln_abs(x: &BigInt) -> (f64, f64) {
    if x.is_zero() {
        return (f64::NEG_INFINITY, 0.0);
    }
    let sign = if x.is_negative() { -1.0 } else { 1.0 };
    let mag = x.abs();
    let bits = mag.bits();
    let shift = bits.saturating_sub(60);
    let mantissa = (&mag >> shift).to_f64().expect("60-bit value fits in f64");
    (mantissa.ln() + shift as f64 * std::f64::consts::LN_2, sign)
}

/// Intelligent state `|τ,N⟩ ∝ Σ_l C(N,l)(2j−l)! (−2τJ+/ħ)^l e^{τJ+/ħ}|−j⟩`.
///
/// Counting `k` up from `|−j⟩`, the amplitude of `|−j+k⟩` is
/// `τ^k √C(2j,k) S_k` with the integer
/// `S_k = Σ_{l≤min(N,k)} C(N,l)(2j−l)!(−2)^l k!/(k−l)!`,
/// evaluated exactly and then moved to log-magnitude.
pub fn intelligent_state(s: SpinQuantum, tau: Complex64, n_label: u32) -> Result<PureState> {
    let tj = s.twice_j();
    if n_label > tj {
        return Err(Error::InvalidLabel {
            n: n_label,
            twice_j: tj,
        });
    }
    if !(tau.re.is_finite() && tau.im.is_finite()) || tau.re.abs().min(tau.im.abs()) > 1e-14 {
        return Err(Error::InvalidTau {
            re: tau.re,
            im: tau.im,
        });
    }
    let bottom = basis_state(s, -i64::from(tj))?;
    if tau.norm() == 0.0 {
        return Ok(bottom);
    }
    let n = tj as usize;
    let big_n = n_label as usize;
    let lf = ln_factorials(n);

    let mut factorial = vec![BigInt::from(1u32)];
    for k in 1..=n {
        let next = &factorial[k - 1] * BigInt::from(k);
        factorial.push(next);
    }
    let binom_n: Vec<BigInt> = (0..=big_n)
        .map(|l| &factorial[big_n] / (&factorial[l] * &factorial[big_n - l]))
        .collect();

    let (ln_t, arg_t) = (tau.norm().ln(), tau.arg());
    let mut parts = vec![(f64::NEG_INFINITY, 0.0); n + 1];
    for k in 0..=n {
        let mut sum = BigInt::zero();
        for l in 0..=big_n.min(k) {
            let mut term = &binom_n[l] * &factorial[n - l] * (&factorial[k] / &factorial[k - l]);
            term <<= l;
            if l % 2 == 1 {
                sum -= term;
            } else {
                sum += term;
            }
        }
        let (ln_s, sign) = bigint_ln_abs(&sum);
        if ln_s == f64::NEG_INFINITY {
            continue;
        }
        let ln_binom = lf[n] - lf[k] - lf[n - k];
        let phase = k as f64 * arg_t + if sign < 0.0 { std::f64::consts::PI } else { 0.0 };
        // storage index counts down from |j⟩
        parts[n - k] = (k as f64 * ln_t + 0.5 * ln_binom + ln_s, phase);
    }
    Ok(assemble_log_polar(s, &parts))
}

/// `cos α |j⟩ + sin α |−j⟩`, intended for `α ∈ [0, π/2]`.
pub fn alpha_family(s: SpinQuantum, alpha: f64) -> PureState {
    let d = s.dimension();
    let mut amps = DVector::zeros(d);
    if d == 1 {
        amps[0] = Complex64::new(1.0, 0.0);
    } else {
        amps[0] = Complex64::new(alpha.cos(), 0.0);
        amps[d - 1] = Complex64::new(alpha.sin(), 0.0);
    }
    // exactly normalized already; skip gauge fixing so the sign of sin α survives
    PureState::from_raw_normalized(s, amps)
}

/// Fubini-Study uniform state from a complex Gaussian vector.
pub fn random_state_with<R: Rng + ?Sized>(s: SpinQuantum, rng: &mut R) -> PureState {
    loop {
        let amps = DVector::from_iterator(
            s.dimension(),
            (0..s.dimension()).map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im)
            }),
        );
        if amps.norm() > 0.0 {
            return PureState::from_amplitudes(s, amps).expect("non-zero Gaussian vector");
        }
    }
}

/// Sample `index` of the stream keyed by `seed`.
pub fn random_state_indexed(s: SpinQuantum, seed: u64, index: u64) -> PureState {
    random_state_with(s, &mut rng::stream(seed, index))
}

pub fn random_state(s: SpinQuantum, seed: u64) -> PureState {
    random_state_indexed(s, seed, 0)
}

/// Box from which orbit-sample group coordinates are drawn: `[−2π, 2π]³`.
pub const ORBIT_BOX: f64 = 2.0 * std::f64::consts::PI;

pub fn random_group_element_with<R: Rng + ?Sized>(s: SpinQuantum, rng: &mut R) -> GroupElement {
    let r = [
        rng.random_range(-ORBIT_BOX..=ORBIT_BOX),
        rng.random_range(-ORBIT_BOX..=ORBIT_BOX),
        rng.random_range(-ORBIT_BOX..=ORBIT_BOX),
    ];
    group_element(s, r, 1.0)
}

/// Group elements used by [`orbit_sample`] for the same `(count, seed)`.
pub fn orbit_elements(s: SpinQuantum, count: usize, seed: u64) -> Vec<GroupElement> {
    (0..count as u64)
        .map(|i| random_group_element_with(s, &mut rng::stream(seed, i)))
        .collect()
}

/// `U(r⃗_i)|φ⟩` for `count` group elements drawn uniformly from the orbit box.
pub fn orbit_sample(state: &PureState, count: usize, seed: u64) -> Result<Vec<PureState>> {
    if count == 0 {
        return Err(Error::InvalidParameter("orbit sample count must be >= 1".into()));
    }
    orbit_elements(state.spin(), count, seed)
        .iter()
        .map(|u| state.transformed(u.matrix()))
        .collect()
}
