//! Runnable verifications of the properties of `Δ`.
//!
//! Every check is a pure function of its parameters and seed. Random draws
//! are addressed per sample (see [`crate::rng`]), work is spread over the
//! current rayon pool, and reductions run in a fixed order, so reports are
//! bit-identical across thread counts.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cpn::{self, Functional, Method, ProjectiveDimension};
use crate::error::{Error, Result};
use crate::rng;
use crate::spin::{GroupElement, SpinMatrices, SpinQuantum};
use crate::states::{
    alpha_family, basis_state, coherent_from_direction, intelligent_state, orbit_elements,
    random_state_indexed, PureState,
};
use crate::stats::SampleStats;
use crate::uncertainty::{delta, inequality_report, moments};

/// Relative tolerance for orbit-wise spread of `Δ` and `⟨J_i⟩⟨J_i⟩`.
pub const INVARIANCE_TOLERANCE: f64 = 1e-9;
/// Relative slack on the `Δ` bounds.
pub const BOUNDS_TOLERANCE: f64 = 1e-10;
/// Required fraction of `[ħ²j, ħ²j(j+1)]` covered by the `α` sweep.
pub const ALPHA_COVERAGE: f64 = 0.999;
pub const ALPHA_GRID: usize = 1000;
/// Monte Carlo acceptance width in standard errors.
pub const MC_SIGMAS: f64 = 4.0;
/// Absolute floor (relative to `ħ²j(j+1)`) added to the MC window; only
/// matters when the estimator has zero variance (`j = 1/2`).
pub const MC_FLOOR: f64 = 1e-12;
/// Minimum-set acceptance: `Δ` within this many `ħ²j` of the bound.
pub const MIN_DELTA_TOLERANCE: f64 = 1e-6;
pub const MIN_FIDELITY_DEFECT: f64 = 1e-6;
pub const DEFAULT_OPT_TOL: f64 = 1e-9;
pub const MAX_OPT_ITERATIONS: usize = 20_000;
/// Armijo sufficient-increase constant and step shrink factor.
const ARMIJO: f64 = 1e-4;
const SHRINK: f64 = 0.5;
/// Stagnation key: `Δ` change per iteration, relative to `ħ²j`.
const DELTA_CHANGE_TOLERANCE: f64 = 1e-12;
/// Inequality-chain slack relative to `ħ⁴j⁴`.
pub const INEQUALITY_SLACK: f64 = 1e-12;
/// Saturation of the spin Heisenberg inequality by intelligent states, relative.
pub const INTELLIGENT_SATURATION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClaimId {
    /// `Δ` is constant along SU(2) orbits.
    #[serde(rename = "I")]
    Invariance,
    /// `ħ²j ≤ Δ ≤ ħ²j(j+1)`, every value attained for `j ≥ 1`.
    #[serde(rename = "II")]
    Bounds,
    /// Minimum-`Δ` states are exactly the coherent states.
    #[serde(rename = "III")]
    MinimumSet,
    /// `mean(Δ) = ħ²j(j+1/2)` under the Fubini-Study measure.
    #[serde(rename = "IV")]
    Mean,
    /// `mean(Δ)/max(Δ) → 1`.
    #[serde(rename = "LIMIT")]
    Limit,
    /// `|⟨Jz⟩| ≤ ħj`, attained only at `|±j⟩`.
    #[serde(rename = "JOZ")]
    JzBound,
    /// Robertson ⇒ Heisenberg chain and intelligent-state saturation.
    #[serde(rename = "INEQ")]
    Inequalities,
}

impl ClaimId {
    pub fn label(self) -> &'static str {
        match self {
            ClaimId::Invariance => "I",
            ClaimId::Bounds => "II",
            ClaimId::MinimumSet => "III",
            ClaimId::Mean => "IV",
            ClaimId::Limit => "LIMIT",
            ClaimId::JzBound => "JOZ",
            ClaimId::Inequalities => "INEQ",
        }
    }
}

impl std::str::FromStr for ClaimId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" => Ok(ClaimId::Invariance),
            "II" => Ok(ClaimId::Bounds),
            "III" => Ok(ClaimId::MinimumSet),
            "IV" => Ok(ClaimId::Mean),
            "LIMIT" => Ok(ClaimId::Limit),
            "JOZ" => Ok(ClaimId::JzBound),
            "INEQ" => Ok(ClaimId::Inequalities),
            _ => Err(Error::Parse(format!("unknown claim {s:?}"))),
        }
    }
}

/// Outcome of one verification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub claim: ClaimId,
    pub parameters: BTreeMap<String, Value>,
    pub pass: bool,
    pub details: BTreeMap<String, Value>,
}

impl ClaimReport {
    fn new(claim: ClaimId) -> Self {
        Self {
            claim,
            parameters: BTreeMap::new(),
            pass: false,
            details: BTreeMap::new(),
        }
    }

    fn param(mut self, key: &str, value: Value) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    fn detail(&mut self, key: &str, value: Value) {
        self.details.insert(key.to_string(), value);
    }
}

/// A set of claim reports: the traceability document written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimBundle {
    pub schema: String,
    pub claims: Vec<ClaimReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ClaimBundle {
    pub fn new(claims: Vec<ClaimReport>) -> Self {
        Self {
            schema: crate::SCHEMA.to_string(),
            claims,
            notes: Vec::new(),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let bundle: ClaimBundle = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if bundle.schema != crate::SCHEMA {
            return Err(Error::Parse(format!("unsupported schema {:?}", bundle.schema)));
        }
        Ok(bundle)
    }
}

/// Result of one minimization of `Δ` from one start.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub final_state: PureState,
    pub final_delta: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `|⟨ψ_coh(n̂)|ψ⟩|` with `n̂` the direction of `⟨J⃗⟩`.
    pub coherent_fidelity: f64,
    pub spin_direction: [f64; 3],
    pub gradient_norm: f64,
}

#[derive(Serialize)]
struct OptimizationRecord {
    start: usize,
    final_delta: f64,
    iterations: usize,
    converged: bool,
    coherent_fidelity: f64,
    spin_direction: [f64; 3],
    gradient_norm: f64,
    final_state: Vec<[f64; 2]>,
}

impl OptimizationResult {
    /// JSON record; amplitudes as `[re, im]` pairs.
    pub fn to_json(&self, start: usize) -> Value {
        serde_json::to_value(OptimizationRecord {
            start,
            final_delta: self.final_delta,
            iterations: self.iterations,
            converged: self.converged,
            coherent_fidelity: self.coherent_fidelity,
            spin_direction: self.spin_direction,
            gradient_norm: self.gradient_norm,
            final_state: self.final_state.amplitudes().iter().map(|c| [c.re, c.im]).collect(),
        })
        .expect("plain data serializes")
    }
}

/// One row of the mean/max ratio table: `(j + 1/2)/(j + 1) = (2j+1)/(2j+2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub j: SpinQuantum,
    pub numerator: u64,
    pub denominator: u64,
    pub ratio: f64,
}

/// Sub-experiment tags for seed derivation.
mod tag {
    pub const FIDUCIAL: u64 = 1;
    pub const ROTATION: u64 = 2;
    pub const BOUNDS: u64 = 3;
    pub const STARTS: u64 = 4;
    pub const MEAN: u64 = 5;
    pub const JZ: u64 = 6;
    pub const INEQ: u64 = 7;
}

/// Fixed `(j, ħ, seed)` context for the verifications.
#[derive(Debug, Clone)]
pub struct Experiment {
    ops: SpinMatrices,
    seed: u64,
}

impl Experiment {
    pub fn new(s: SpinQuantum, hbar: f64, seed: u64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self {
            ops: SpinMatrices::new(s, hbar),
            seed,
        })
    }

    pub fn spin(&self) -> SpinQuantum {
        self.ops.s
    }

    pub fn hbar(&self) -> f64 {
        self.ops.hbar
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn ops(&self) -> &SpinMatrices {
        &self.ops
    }

    fn j(&self) -> f64 {
        self.ops.s.j()
    }

    fn h2(&self) -> f64 {
        self.ops.hbar * self.ops.hbar
    }

    fn base_params(&self, claim: ClaimId) -> ClaimReport {
        ClaimReport::new(claim)
            .param("j", json!(self.ops.s.to_string()))
            .param("hbar", json!(self.ops.hbar))
            .param("seed", json!(self.seed))
    }

    fn delta_of(&self, state: &PureState) -> Result<f64> {
        delta(state, &self.ops)
    }

    /// Statement I: orbit-wise spread of `Δ` stays at roundoff level.
    pub fn verify_invariance(&self, fiducials: usize, rotations: usize) -> Result<ClaimReport> {
        self.verify_invariance_with_map(fiducials, rotations, &|u: &GroupElement, psi: &PureState| {
            psi.transformed(u.matrix()).expect("group elements match the state dimension")
        })
    }

    /// As [`Self::verify_invariance`] with a caller-supplied action of the group
    /// elements on states (used for negative controls).
    pub fn verify_invariance_with_map(
        &self,
        fiducials: usize,
        rotations: usize,
        act: &(dyn Fn(&GroupElement, &PureState) -> PureState + Sync),
    ) -> Result<ClaimReport> {
        if fiducials == 0 || rotations == 0 {
            return Err(Error::InvalidParameter("fiducials and rotations must be >= 1".into()));
        }
        let s = self.ops.s;
        let fid_seed = rng::derive_seed(self.seed, tag::FIDUCIAL);
        let rot_seed = rng::derive_seed(self.seed, tag::ROTATION);
        let spreads: Vec<(f64, f64)> = (0..fiducials as u64)
            .into_par_iter()
            .map(|i| -> Result<(f64, f64)> {
                let phi = random_state_indexed(s, fid_seed, i);
                let elements = orbit_elements(s, rotations, rng::derive_seed(rot_seed, i));
                let mut deltas = vec![self.delta_of(&phi)?];
                let mut msq = vec![moments(&phi, &self.ops)?.mean.iter().map(|x| x * x).sum::<f64>()];
                for u in &elements {
                    let psi = act(u, &phi);
                    let m = moments(&psi, &self.ops)?;
                    deltas.push(m.variance.iter().sum());
                    msq.push(m.mean.iter().map(|x| x * x).sum());
                }
                Ok((spread(&deltas), spread(&msq)))
            })
            .collect::<Result<_>>()?;
        let max_delta_spread = spreads.iter().map(|s| s.0).fold(0.0, f64::max);
        let max_msq_spread = spreads.iter().map(|s| s.1).fold(0.0, f64::max);
        let tol = INVARIANCE_TOLERANCE * self.ops.casimir_value();
        let mut report = self
            .base_params(ClaimId::Invariance)
            .param("fiducials", json!(fiducials))
            .param("rotations", json!(rotations));
        report.detail("max_delta_spread", json!(max_delta_spread));
        report.detail("max_invariant_msq_spread", json!(max_msq_spread));
        report.detail("tolerance", json!(tol));
        report.pass = max_delta_spread <= tol && max_msq_spread <= tol;
        Ok(report)
    }

    /// Statement II: bounds on sampled states plus `α`-family coverage.
    pub fn verify_bounds(&self, samples: usize) -> Result<ClaimReport> {
        if samples == 0 {
            return Err(Error::InvalidParameter("samples must be >= 1".into()));
        }
        let s = self.ops.s;
        let j = self.j();
        let h2 = self.h2();
        let seed = rng::derive_seed(self.seed, tag::BOUNDS);
        let deltas: Vec<f64> = (0..samples as u64)
            .into_par_iter()
            .map(|i| self.delta_of(&random_state_indexed(s, seed, i)))
            .collect::<Result<_>>()?;
        let st = SampleStats::from_values(&deltas);
        let lower = h2 * j;
        let upper = self.ops.casimir_value();
        let eps = BOUNDS_TOLERANCE * upper;
        let mut report = self.base_params(ClaimId::Bounds).param("samples", json!(samples));
        let mut pass = st.min >= lower - eps && st.max <= upper + eps;
        report.detail("lower_bound", json!(lower));
        report.detail("upper_bound", json!(upper));
        report.detail("observed_min", json!(st.min));
        report.detail("observed_max", json!(st.max));
        report.detail("tolerance", json!(eps));
        if s.twice_j() == 1 {
            let spread = st.max - st.min;
            report.detail("spread", json!(spread));
            pass &= spread <= 1e-12 * h2;
        }
        if s.twice_j() >= 2 {
            let alpha_deltas: Vec<f64> = (0..ALPHA_GRID)
                .map(|k| {
                    let alpha = std::f64::consts::FRAC_PI_2 * k as f64 / (ALPHA_GRID - 1) as f64;
                    self.delta_of(&alpha_family(s, alpha))
                })
                .collect::<Result<_>>()?;
            let a = SampleStats::from_values(&alpha_deltas);
            let coverage = (a.max - a.min) / (upper - lower);
            report.detail("alpha_min_delta", json!(a.min));
            report.detail("alpha_max_delta", json!(a.max));
            report.detail("alpha_coverage", json!(coverage));
            pass &= coverage >= ALPHA_COVERAGE && a.min >= lower - eps && a.max <= upper + eps;
        }
        report.pass = pass;
        Ok(report)
    }

    /// `f(ψ) = Σ⟨J_i⟩²`, maximized to minimize `Δ = ħ²j(j+1) − f`.
    pub fn objective(&self, psi: &DVector<Complex64>) -> f64 {
        self.mean_spin(psi).iter().map(|x| x * x).sum()
    }

    fn mean_spin(&self, psi: &DVector<Complex64>) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, op) in self.ops.cartesian().into_iter().enumerate() {
            out[i] = psi.dotc(&(op.matrix() * psi)).re;
        }
        out
    }

    /// Euclidean gradient `4 Σ⟨J_i⟩ J_iψ` projected on the tangent space at `ψ`.
    pub fn projected_gradient(&self, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let mean = self.mean_spin(psi);
        let mut g = DVector::zeros(psi.len());
        for (i, op) in self.ops.cartesian().into_iter().enumerate() {
            g += op.matrix() * psi * Complex64::from(4.0 * mean[i]);
        }
        let radial = psi.dotc(&g).re;
        g - psi * Complex64::from(radial)
    }

    /// Riemannian gradient ascent of `f` on the unit sphere from `start`.
    pub fn minimize_from(&self, start: &PureState, tol: f64) -> Result<OptimizationResult> {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::InvalidParameter("tol must be > 0".into()));
        }
        if self.ops.s.twice_j() == 0 {
            return Err(Error::InvalidParameter("minimization needs j >= 1/2".into()));
        }
        if start.dimension() != self.ops.s.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.ops.s.dimension(),
                found: start.dimension(),
            });
        }
        let scale = self.h2() * self.j();
        let mut psi = start.amplitudes().clone();
        let mut last_change = 0.0;
        let mut iterations = 0;
        let mut converged = false;
        let mut grad_norm;
        loop {
            let g = self.projected_gradient(&psi);
            grad_norm = g.norm();
            if grad_norm <= tol * scale && last_change <= DELTA_CHANGE_TOLERANCE * scale {
                converged = true;
                break;
            }
            if iterations >= MAX_OPT_ITERATIONS {
                break;
            }
            let step_gain = IncrementModel::new(&self.ops, &psi, &g);
            let mut step = 1.0 / scale;
            let mut accepted = None;
            while step * grad_norm > 1e-18 {
                let gain = step_gain.gain(step);
                if gain >= ARMIJO * step * grad_norm * grad_norm {
                    accepted = Some((step, gain));
                    break;
                }
                step *= SHRINK;
            }
            iterations += 1;
            match accepted {
                Some((step, gain)) => {
                    let cand = &psi + &g * Complex64::from(step);
                    psi = &cand / Complex64::from(cand.norm());
                    last_change = gain.abs();
                }
                // no ascent step exists at working precision
                None => {
                    converged = grad_norm <= tol * scale;
                    break;
                }
            }
        }
        let final_state = PureState::from_amplitudes(self.ops.s, psi)?;
        let final_delta = self.delta_of(&final_state)?;
        let mean = moments(&final_state, &self.ops)?.mean;
        let len = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (direction, fidelity) = if len > 0.0 {
            let n = [mean[0] / len, mean[1] / len, mean[2] / len];
            (n, coherent_from_direction(self.ops.s, n).fidelity(&final_state))
        } else {
            ([0.0, 0.0, 0.0], 0.0)
        };
        Ok(OptimizationResult {
            final_state,
            final_delta,
            iterations,
            converged,
            coherent_fidelity: fidelity.min(1.0),
            spin_direction: direction,
            gradient_norm: grad_norm,
        })
    }

    /// Independent random starts, one stream each.
    pub fn minimize_delta(&self, starts: usize, tol: f64) -> Result<Vec<OptimizationResult>> {
        if starts == 0 {
            return Err(Error::InvalidParameter("starts must be >= 1".into()));
        }
        let s = self.ops.s;
        let seed = rng::derive_seed(self.seed, tag::STARTS);
        (0..starts as u64)
            .into_par_iter()
            .map(|i| self.minimize_from(&random_state_indexed(s, seed, i), tol))
            .collect()
    }

    /// Statement III as a claim: every start lands on the coherent orbit.
    pub fn verify_minimum_set(&self, starts: usize, tol: f64) -> Result<ClaimReport> {
        let results = self.minimize_delta(starts, tol)?;
        let bound = self.h2() * self.j();
        let converged = results.iter().filter(|r| r.converged).count();
        let max_excess = results
            .iter()
            .map(|r| r.final_delta - bound)
            .fold(f64::NEG_INFINITY, f64::max);
        let min_excess = results
            .iter()
            .map(|r| r.final_delta - bound)
            .fold(f64::INFINITY, f64::min);
        let min_fidelity = results.iter().map(|r| r.coherent_fidelity).fold(1.0, f64::min);
        let max_iterations = results.iter().map(|r| r.iterations).max().unwrap_or(0);
        let mut report = self
            .base_params(ClaimId::MinimumSet)
            .param("starts", json!(starts))
            .param("tol", json!(tol));
        report.detail("converged", json!(converged));
        report.detail("non_converged", json!(starts - converged));
        report.detail("max_delta_excess", json!(max_excess));
        report.detail("min_delta_excess", json!(min_excess));
        report.detail("min_coherent_fidelity", json!(min_fidelity));
        report.detail("max_iterations", json!(max_iterations));
        report.pass = converged == starts
            && max_excess <= MIN_DELTA_TOLERANCE * bound
            && min_excess >= -1e-9 * bound
            && min_fidelity >= 1.0 - MIN_FIDELITY_DEFECT;
        Ok(report)
    }

    /// Statement IV: Monte Carlo mean of `Δ` and the `⟨Jz⟩²` moment route.
    pub fn mean_delta_check(&self, samples: u64) -> Result<ClaimReport> {
        if samples < 1000 {
            return Err(Error::InvalidParameter("mean check needs samples >= 1000".into()));
        }
        let s = self.ops.s;
        let n = ProjectiveDimension::of_spin(s)?;
        let nn = f64::from(n.get());
        let j = self.j();
        let h2 = self.h2();
        let seed = rng::derive_seed(self.seed, tag::MEAN);
        let method = Method::MonteCarlo { samples, seed };
        let ops = &self.ops;
        let delta_fn = move |psi: &PureState| delta(psi, ops).expect("dimension fixed by construction");
        let mc_delta = cpn::mean_over_cpn(&Functional::General(&delta_fn), n, method)?;
        let mc_jz2 = cpn::mean_over_cpn(&Functional::jz_squared(n, self.hbar()), n, method)?;

        // moment route: (ħ²/V_N) Σ_{m,k} (m−N/2)(k−N/2) ∫(x_m x_k)² dv
        let nu = n.get() as usize;
        let mut moment_sum = 0.0;
        for m in 0..=nu {
            for k in 0..=nu {
                let w = (m as f64 - nn / 2.0) * (k as f64 - nn / 2.0);
                moment_sum += w * cpn::moment_integral(n, m, k)?;
            }
        }
        let moment_route = h2 * moment_sum / cpn::cpn_volume(n);
        let (lhs4, rhs4) = centered_square_sum_exact(u64::from(n.get()));

        let target_delta = h2 * j * (j + 0.5);
        let target_jz2 = h2 * nn / 12.0;
        let floor = MC_FLOOR * self.ops.casimir_value();
        let within = |r: &cpn::IntegrationResult, target: f64| {
            (r.estimate - target).abs() <= MC_SIGMAS * r.std_error + floor
        };
        let delta_ok = within(&mc_delta, target_delta);
        let jz2_ok = within(&mc_jz2, target_jz2);
        let moment_ok = (moment_route - target_jz2).abs() <= 1e-12 * target_jz2.max(h2);
        let sum_ok = lhs4 == rhs4;

        let mut report = self.base_params(ClaimId::Mean).param("samples", json!(samples));
        report.detail("analytic_mean_delta", json!(target_delta));
        report.detail("mc_mean_delta", json!(mc_delta.estimate));
        report.detail("mc_std_error_delta", json!(mc_delta.std_error));
        report.detail("analytic_mean_jz2", json!(target_jz2));
        report.detail("mc_mean_jz2", json!(mc_jz2.estimate));
        report.detail("mc_std_error_jz2", json!(mc_jz2.std_error));
        report.detail("moment_route_jz2", json!(moment_route));
        report.detail("mean_delta_via_moments", json!(self.ops.casimir_value() - 3.0 * moment_route));
        report.detail("sum_identity_holds", json!(sum_ok));
        report.detail("delta_within_4sigma", json!(delta_ok));
        report.detail("jz2_within_4sigma", json!(jz2_ok));
        report.pass = delta_ok && jz2_ok && moment_ok && sum_ok;
        Ok(report)
    }

    /// `|⟨Jz⟩| ≤ ħj`, with equality only at `|±j⟩`.
    pub fn jz_bound_check(&self, samples: usize) -> Result<ClaimReport> {
        if samples == 0 {
            return Err(Error::InvalidParameter("samples must be >= 1".into()));
        }
        let s = self.ops.s;
        let tj = i64::from(s.twice_j());
        let hj = self.hbar() * self.j();
        let seed = rng::derive_seed(self.seed, tag::JZ);
        let top = basis_state(s, tj)?;
        let bottom = basis_state(s, -tj)?;

        let mut states: Vec<PureState> = (0..samples as u64)
            .into_par_iter()
            .map(|i| random_state_indexed(s, seed, i))
            .collect();
        // probes just off the poles exercise the equality case
        states.push(top.clone());
        states.push(bottom.clone());
        for (p, pole) in [&top, &bottom].into_iter().enumerate() {
            for i in 0..8u64 {
                let noise = random_state_indexed(s, rng::derive_seed(seed, 100 + p as u64), i);
                let amps = pole.amplitudes() + noise.amplitudes() * Complex64::from(1e-7);
                states.push(PureState::from_amplitudes(s, amps)?);
            }
        }
        let mut max_abs_jz: f64 = 0.0;
        let mut near = 0usize;
        let mut min_pole_fidelity: f64 = 1.0;
        let mut within = true;
        for st in &states {
            let jz = moments(st, &self.ops)?.mean[2];
            max_abs_jz = max_abs_jz.max(jz.abs());
            within &= jz.abs() <= hj + 1e-12 * self.hbar();
            if jz.abs() >= hj * (1.0 - 1e-10) {
                near += 1;
                let fid = st.fidelity(&top).max(st.fidelity(&bottom));
                min_pole_fidelity = min_pole_fidelity.min(fid);
            }
        }
        let mut report = self.base_params(ClaimId::JzBound).param("samples", json!(samples));
        report.detail("bound", json!(hj));
        report.detail("max_abs_jz", json!(max_abs_jz));
        report.detail("near_saturating", json!(near));
        report.detail("min_pole_fidelity", json!(min_pole_fidelity));
        report.pass = within && min_pole_fidelity >= 1.0 - 1e-4;
        Ok(report)
    }

    /// Robertson ≥ Heisenberg ≥ 0 slack on random states, and saturation of
    /// the spin Heisenberg inequality by intelligent states.
    pub fn inequality_check(&self, samples: usize) -> Result<ClaimReport> {
        if samples == 0 {
            return Err(Error::InvalidParameter("samples must be >= 1".into()));
        }
        let s = self.ops.s;
        let h4j4 = self.hbar().powi(4) * self.j().powi(4);
        let seed = rng::derive_seed(self.seed, tag::INEQ);
        let slacks: Vec<(f64, f64)> = (0..samples as u64)
            .into_par_iter()
            .map(|i| -> Result<(f64, f64)> {
                let r = inequality_report(&random_state_indexed(s, seed, i), &self.ops)?;
                Ok((
                    r.heisenberg_lhs - r.robertson_rhs,
                    r.robertson_rhs - r.heisenberg_rhs,
                ))
            })
            .collect::<Result<_>>()?;
        let min_lhs_slack = slacks.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let min_chain_slack = slacks.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let (worst_saturation, intelligent_count) = intelligent_saturation(&self.ops)?;
        let mut report = self.base_params(ClaimId::Inequalities).param("samples", json!(samples));
        report.detail("min_lhs_minus_robertson", json!(min_lhs_slack));
        report.detail("min_robertson_minus_heisenberg", json!(min_chain_slack));
        report.detail("intelligent_states_checked", json!(intelligent_count));
        report.detail("intelligent_worst_relative_gap", json!(worst_saturation));
        let slack = -INEQUALITY_SLACK * h4j4;
        report.pass = min_lhs_slack >= slack
            && min_chain_slack >= slack
            && worst_saturation <= INTELLIGENT_SATURATION;
        Ok(report)
    }
}

/// `f((ψ + tg)/‖ψ + tg‖) − f(ψ/‖ψ‖)` along a search direction `g`, without
/// subtracting two values of size `ħ²j²`. The residual radial part of `g`
/// is kept exactly: near the optimum it is not small next to `‖g‖²`.
struct IncrementModel {
    mean: [f64; 3],
    lin: [f64; 3],
    quad: [f64; 3],
    n0: f64,
    radial: f64,
    g2: f64,
}

impl IncrementModel {
    fn new(ops: &SpinMatrices, psi: &DVector<Complex64>, g: &DVector<Complex64>) -> Self {
        let n0 = psi.norm_squared();
        let radial = 2.0 * psi.dotc(g).re;
        let g2 = g.norm_squared();
        let mut mean = [0.0; 3];
        let mut lin = [0.0; 3];
        let mut quad = [0.0; 3];
        for (i, op) in ops.cartesian().into_iter().enumerate() {
            let jp = op.matrix() * psi;
            let raw = psi.dotc(&jp).re;
            mean[i] = raw / n0;
            lin[i] = n0 * 2.0 * g.dotc(&jp).re - raw * radial;
            quad[i] = n0 * g.dotc(&(op.matrix() * g)).re - raw * g2;
        }
        Self {
            mean,
            lin,
            quad,
            n0,
            radial,
            g2,
        }
    }

    fn gain(&self, t: f64) -> f64 {
        let denom = self.n0 * (self.n0 + t * self.radial + t * t * self.g2);
        (0..3)
            .map(|i| {
                let d = (t * self.lin[i] + t * t * self.quad[i]) / denom;
                d * (2.0 * self.mean[i] + d)
            })
            .sum()
    }
}

fn spread(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

/// `τ ∈ {±10^k, ±i·10^k : k = −2..2}`.
pub fn tau_grid() -> Vec<Complex64> {
    let mut out = Vec::new();
    for k in -2..=2 {
        let t = 10f64.powi(k);
        out.extend([
            Complex64::new(t, 0.0),
            Complex64::new(-t, 0.0),
            Complex64::new(0.0, t),
            Complex64::new(0.0, -t),
        ]);
    }
    out
}

/// Worst `|lhs − rhs|/(ħ⁴j⁴)` over the `τ` grid and all `N ≤ 2j`.
pub fn intelligent_saturation(ops: &SpinMatrices) -> Result<(f64, usize)> {
    let s = ops.s;
    if s.twice_j() == 0 {
        return Ok((0.0, 0));
    }
    let h4j4 = ops.hbar.powi(4) * s.j().powi(4);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for tau in tau_grid() {
        for n in 0..=s.twice_j() {
            let r = inequality_report(&intelligent_state(s, tau, n)?, ops)?;
            worst = worst.max((r.heisenberg_lhs - r.heisenberg_rhs).abs() / h4j4);
            count += 1;
        }
    }
    Ok((worst, count))
}

/// `(3 Σ_{k=0}^N (2k − N)², N(N+1)(N+2))`; equal iff
/// `Σ (k − N/2)² = N(N+1)(N+2)/12`.
pub fn centered_square_sum_exact(n: u64) -> (u128, u128) {
    let n = i128::from(n);
    let lhs: i128 = (0..=n).map(|k| (2 * k - n) * (2 * k - n)).sum::<i128>() * 3;
    let rhs = n * (n + 1) * (n + 2);
    (lhs as u128, rhs as u128)
}

/// Rows `(j, (j+1/2)/(j+1))` for `2j = 1..=2·j_max`.
pub fn limit_ratio_table(j_max: SpinQuantum) -> Result<Vec<RatioRow>> {
    if j_max.twice_j() < 2 {
        return Err(Error::InvalidParameter("j_max must be >= 1".into()));
    }
    Ok((1..=j_max.twice_j())
        .map(|tj| {
            let numerator = u64::from(tj) + 1;
            let denominator = u64::from(tj) + 2;
            RatioRow {
                j: SpinQuantum::from_twice(tj),
                numerator,
                denominator,
                ratio: numerator as f64 / denominator as f64,
            }
        })
        .collect())
}

/// The limit claim: strict monotonicity (exact), the final-row bound and,
/// when the table reaches `j = 50`, the 0.99 threshold.
pub fn limit_ratio_check(j_max: SpinQuantum) -> Result<ClaimReport> {
    let rows = limit_ratio_table(j_max)?;
    let increasing = rows
        .windows(2)
        .all(|w| u128::from(w[0].numerator) * u128::from(w[1].denominator) < u128::from(w[1].numerator) * u128::from(w[0].denominator));
    let last = rows.last().expect("table is non-empty");
    let jm = j_max.j();
    let final_ok = last.ratio >= 1.0 - 1.0 / (jm + 1.0);
    let at_50 = rows.iter().find(|r| r.j.twice_j() == 100);
    let mut report = ClaimReport::new(ClaimId::Limit).param("j_max", json!(j_max.to_string()));
    report.detail("rows", json!(rows.len()));
    report.detail("strictly_increasing", json!(increasing));
    report.detail("final_ratio", json!(last.ratio));
    let mut pass = increasing && final_ok;
    if let Some(r) = at_50 {
        report.detail("ratio_at_j_50", json!(r.ratio));
        pass &= r.ratio > 0.99;
    }
    report.pass = pass;
    Ok(report)
}
