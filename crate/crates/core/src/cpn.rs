//! Fubini-Study geometry of `CP^N` in intrinsic coordinates.
//!
//! A point is labelled by `θ_1..θ_N ∈ [0, π/2]` and relative phases
//! `β_1..β_N ∈ [0, 2π)`. The sphere coordinates are
//! `x_i = cos θ_i ∏_{j>i} sin θ_j` with `x_0 = ∏_j sin θ_j`, and the
//! homogeneous coordinates are `Z_k = x_k e^{iβ_k}` (`β_0 = 0`).
//!
//! Index convention: `Z_k` multiplies `|m = k − N/2⟩`, so `k = N` is the
//! top state `|j⟩` (storage index 0) and `k = 0` is `|−j⟩`.
//!
//! The volume element is `∏ cos θ_i sin^{2i−1} θ_i dθ_i dβ_i` and the total
//! volume `V_N = π^N / N!`. The chart is singular on `θ_i ∈ {0, π/2}`:
//! states there are fine, but the metric blocks are rejected.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::rng;
use crate::spin::SpinQuantum;
use crate::states::{ln_factorials, random_state_indexed, PureState};
use crate::stats::SampleStats;

/// Distance from `{0, π/2}` inside which the chart counts as singular.
pub const CHART_SINGULARITY: f64 = 1e-12;

/// Complex dimension `N` of `CP^N`; the Hilbert space has dimension `N + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProjectiveDimension(u32);

impl ProjectiveDimension {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("CP^N needs N >= 1".into()));
        }
        Ok(Self(n))
    }

    /// `N = 2j`.
    pub fn of_spin(s: SpinQuantum) -> Result<Self> {
        Self::new(s.twice_j())
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn spin(self) -> SpinQuantum {
        SpinQuantum::from_twice(self.0)
    }
}

/// Intrinsic coordinates `(θ, β)` of a point of `CP^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpnCoords {
    thetas: Vec<f64>,
    betas: Vec<f64>,
}

impl CpnCoords {
    /// `θ_i` must lie in `[0, π/2]`; `β_i` are reduced into `[0, 2π)`.
    pub fn new(thetas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::OutOfRange("at least one theta is required".into()));
        }
        if thetas.len() != betas.len() {
            return Err(Error::OutOfRange(format!(
                "{} thetas but {} betas",
                thetas.len(),
                betas.len()
            )));
        }
        check_thetas(&thetas)?;
        if let Some(b) = betas.iter().find(|b| !b.is_finite()) {
            return Err(Error::OutOfRange(format!("beta = {b} is not finite")));
        }
        let betas = betas.into_iter().map(|b| b.rem_euclid(TAU)).collect();
        Ok(Self { thetas, betas })
    }

    pub fn n(&self) -> ProjectiveDimension {
        ProjectiveDimension(self.thetas.len() as u32)
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }
}

fn check_thetas(thetas: &[f64]) -> Result<()> {
    for (i, &t) in thetas.iter().enumerate() {
        if !(0.0..=FRAC_PI_2).contains(&t) {
            return Err(Error::OutOfRange(format!(
                "theta_{} = {t} outside [0, pi/2]",
                i + 1
            )));
        }
    }
    Ok(())
}

/// `x_0..x_N` from `θ_1..θ_N`.
pub fn sphere_coords(thetas: &[f64]) -> Result<Vec<f64>> {
    check_thetas(thetas)?;
    Ok(sphere_coords_unchecked(thetas))
}

fn sphere_coords_unchecked(thetas: &[f64]) -> Vec<f64> {
    let n = thetas.len();
    let mut x = vec![0.0; n + 1];
    // running product ∏_{j>i} sin θ_j, built from the top down
    let mut tail = 1.0;
    for i in (1..=n).rev() {
        let t = thetas[i - 1];
        x[i] = t.cos() * tail;
        tail *= t.sin();
    }
    x[0] = tail;
    x
}

/// The state `Σ_k x_k e^{iβ_k} |k − N/2⟩`.
pub fn to_state(coords: &CpnCoords) -> PureState {
    let x = sphere_coords_unchecked(&coords.thetas);
    let n = coords.thetas.len();
    let s = SpinQuantum::from_twice(n as u32);
    let mut amps = DVector::zeros(n + 1);
    for (k, &xk) in x.iter().enumerate() {
        let beta = if k == 0 { 0.0 } else { coords.betas[k - 1] };
        amps[n - k] = Complex64::from_polar(xk, beta);
    }
    PureState::from_amplitudes(s, amps).expect("sphere coordinates have unit norm")
}

/// Inverse of [`to_state`] (phases relative to `Z_0`; `β_i = 0` where `x_0 = 0`).
pub fn coords_of_state(state: &PureState) -> Result<CpnCoords> {
    let n = state.dimension() - 1;
    if n == 0 {
        return Err(Error::InvalidParameter("CP^0 has no coordinates".into()));
    }
    let amps = state.amplitudes();
    let z: Vec<Complex64> = (0..=n).map(|k| amps[n - k]).collect();
    let x: Vec<f64> = z.iter().map(|c| c.norm()).collect();
    let mut thetas = vec![0.0; n];
    // ρ_i² = Σ_{k≤i} x_k² = (∏_{j>i} sin θ_j)²
    let mut rho_prev = x[0];
    for i in 1..=n {
        let rho = (rho_prev * rho_prev + x[i] * x[i]).sqrt();
        thetas[i - 1] = rho_prev.atan2(x[i]);
        rho_prev = rho;
    }
    let alpha0 = z[0].arg();
    let betas = (1..=n)
        .map(|k| if x[0] > 0.0 { z[k].arg() - alpha0 } else { z[k].arg() })
        .collect();
    CpnCoords::new(thetas, betas)
}

/// Diagonal sphere block `g_ii` and phase block `h_ij` of the Fubini-Study metric.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricBlocks {
    /// `g_ii = (∏_{j>i} sin θ_j)²`, `i = 1..N`.
    pub theta_diag: Vec<f64>,
    /// `h_ij = x_i²(δ_ij − x_j²)`, `i, j = 1..N`.
    pub beta: DMatrix<f64>,
}

fn check_interior(coords: &CpnCoords) -> Result<()> {
    for (i, &t) in coords.thetas.iter().enumerate() {
        if !(CHART_SINGULARITY..=FRAC_PI_2 - CHART_SINGULARITY).contains(&t) {
            return Err(Error::Singular {
                index: i + 1,
                value: t,
            });
        }
    }
    Ok(())
}

pub fn fs_metric_blocks(coords: &CpnCoords) -> Result<MetricBlocks> {
    check_interior(coords)?;
    let n = coords.thetas.len();
    let x = sphere_coords_unchecked(&coords.thetas);
    let mut theta_diag = vec![0.0; n];
    let mut tail = 1.0;
    for i in (1..=n).rev() {
        theta_diag[i - 1] = tail * tail;
        tail *= coords.thetas[i - 1].sin();
    }
    let beta = DMatrix::from_fn(n, n, |a, b| {
        let (xi2, xj2) = (x[a + 1] * x[a + 1], x[b + 1] * x[b + 1]);
        xi2 * (if a == b { 1.0 } else { 0.0 } - xj2)
    });
    Ok(MetricBlocks { theta_diag, beta })
}

/// Closed-form inverse `h^{ij} = 1/x_0² + δ_ij/x_i²` of the phase block.
pub fn beta_block_inverse(coords: &CpnCoords) -> Result<DMatrix<f64>> {
    check_interior(coords)?;
    let n = coords.thetas.len();
    let x = sphere_coords_unchecked(&coords.thetas);
    let x0sq = x[0] * x[0];
    Ok(DMatrix::from_fn(n, n, |a, b| {
        1.0 / x0sq + if a == b { 1.0 / (x[a + 1] * x[a + 1]) } else { 0.0 }
    }))
}

/// `∏ cos θ_i sin^{2i−1} θ_i` with respect to `dθ dβ`.
pub fn fs_volume_density(coords: &CpnCoords) -> f64 {
    coords
        .thetas
        .iter()
        .enumerate()
        .map(|(idx, &t)| t.cos() * t.sin().powi(2 * (idx as i32 + 1) - 1))
        .product::<f64>()
        .max(0.0)
}

/// `ln V_N = N ln π − ln N!`.
pub fn ln_cpn_volume(n: ProjectiveDimension) -> f64 {
    let n = n.get() as usize;
    n as f64 * PI.ln() - ln_factorials(n)[n]
}

/// `V_N = π^N / N!`.
pub fn cpn_volume(n: ProjectiveDimension) -> f64 {
    ln_cpn_volume(n).exp()
}

/// `∫_{CP^N} dv (x_m x_k)² = π^N/(N+2)! · (1 + δ_mk)`.
pub fn moment_integral(n: ProjectiveDimension, m: usize, k: usize) -> Result<f64> {
    let nn = n.get() as usize;
    if m > nn || k > nn {
        return Err(Error::IndexOutOfRange {
            m,
            n: k,
            dim: n.get(),
        });
    }
    let ln = nn as f64 * PI.ln() - ln_factorials(nn + 2)[nn + 2];
    Ok(ln.exp() * if m == k { 2.0 } else { 1.0 })
}

/// Draw coordinates from the normalized volume density.
///
/// `sin² θ_i` has CDF `u^i` on `[0, 1]`, so `sin θ_i = u^{1/(2i)}`.
pub fn sample_fs_coords_with<R: Rng + ?Sized>(n: ProjectiveDimension, rng: &mut R) -> CpnCoords {
    let n = n.get() as usize;
    let mut thetas = Vec::with_capacity(n);
    let mut betas = Vec::with_capacity(n);
    for i in 1..=n {
        let u: f64 = rng.random();
        let s = u.powf(1.0 / (2.0 * i as f64)).min(1.0);
        thetas.push(s.asin());
        betas.push(rng.random::<f64>() * TAU);
    }
    CpnCoords { thetas, betas }
}

pub fn sample_fs_coords_indexed(n: ProjectiveDimension, seed: u64, index: u64) -> CpnCoords {
    sample_fs_coords_with(n, &mut rng::stream(seed, index))
}

pub fn sample_fs_coords(n: ProjectiveDimension, seed: u64) -> CpnCoords {
    sample_fs_coords_indexed(n, seed, 0)
}

/// Function of one `θ_i`.
pub type ThetaFactor = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `coefficient · ∏_i factors[i](θ_{i+1})`.
#[derive(Clone)]
pub struct SeparableTerm {
    pub coefficient: f64,
    pub factors: Vec<ThetaFactor>,
}

/// Sum of coordinate-separable products, independent of the phases `β`.
#[derive(Clone, Default)]
pub struct SeparableFunctional {
    pub terms: Vec<SeparableTerm>,
}

impl std::fmt::Debug for SeparableFunctional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeparableFunctional")
            .field("terms", &self.terms.len())
            .finish()
    }
}

impl SeparableFunctional {
    pub fn evaluate(&self, coords: &CpnCoords) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coefficient
                    * t.factors
                        .iter()
                        .zip(&coords.thetas)
                        .map(|(f, &th)| f(th))
                        .product::<f64>()
            })
            .sum()
    }

    /// Unit functional for `CP^N`.
    pub fn one(n: ProjectiveDimension) -> Self {
        let one: ThetaFactor = Arc::new(|_| 1.0);
        Self {
            terms: vec![SeparableTerm {
                coefficient: 1.0,
                factors: vec![one; n.get() as usize],
            }],
        }
    }

    /// `(x_m x_k)²` written factor by factor: `x_k² = cos²θ_k ∏_{j>k} sin²θ_j`.
    pub fn moment(n: ProjectiveDimension, m: usize, k: usize) -> Self {
        Self {
            terms: vec![SeparableTerm {
                coefficient: 1.0,
                factors: population_pair_factors(n.get() as usize, m, k),
            }],
        }
    }

    /// `Σ_{m,k} w_mk x_m² x_k²`.
    pub fn population_quadratic(weights: &DMatrix<f64>) -> Self {
        let n = weights.nrows() - 1;
        let mut terms = Vec::new();
        for m in 0..=n {
            for k in 0..=n {
                let w = weights[(m, k)];
                if w != 0.0 {
                    terms.push(SeparableTerm {
                        coefficient: w,
                        factors: population_pair_factors(n, m, k),
                    });
                }
            }
        }
        Self { terms }
    }
}

fn population_pair_factors(n: usize, m: usize, k: usize) -> Vec<ThetaFactor> {
    (1..=n)
        .map(|i| {
            // exponents of cos²θ_i and sin²θ_i contributed by x_m² and x_k²
            let cos_pow = i32::from(i == m) + i32::from(i == k);
            let sin_pow = i32::from(i > m) + i32::from(i > k);
            let f: ThetaFactor = Arc::new(move |t: f64| {
                let (s, c) = t.sin_cos();
                (c * c).powi(cos_pow) * (s * s).powi(sin_pow)
            });
            f
        })
        .collect()
}

/// `∫_{CP^N} f dv` by a product Gauss-Legendre rule.
///
/// Each coordinate is mapped by `u = sin² θ_i`, which turns
/// `cos θ sin^{2i−1} θ dθ` into `½ u^{i−1} du` on `[0, 1]`; the phases
/// contribute `(2π)^N`.
pub fn integrate_separable(n: ProjectiveDimension, f: &SeparableFunctional, nodes: usize) -> f64 {
    let rule = GaussLegendre::new(nodes);
    let nn = n.get() as usize;
    f.terms
        .iter()
        .map(|term| {
            assert_eq!(term.factors.len(), nn, "one factor per theta");
            let mut prod = term.coefficient;
            for (idx, factor) in term.factors.iter().enumerate() {
                let i = idx as i32 + 1;
                let one_d = rule.integrate(0.0, 1.0, |u: f64| {
                    let theta = u.sqrt().min(1.0).asin();
                    0.5 * u.powi(i - 1) * factor(theta)
                });
                prod *= TAU * one_d;
            }
            prod
        })
        .sum()
}

pub fn volume_by_quadrature(n: ProjectiveDimension, nodes: usize) -> f64 {
    integrate_separable(n, &SeparableFunctional::one(n), nodes)
}

pub fn moment_by_quadrature(n: ProjectiveDimension, m: usize, k: usize, nodes: usize) -> Result<f64> {
    let nn = n.get() as usize;
    if m > nn || k > nn {
        return Err(Error::IndexOutOfRange {
            m,
            n: k,
            dim: n.get(),
        });
    }
    Ok(integrate_separable(n, &SeparableFunctional::moment(n, m, k), nodes))
}

/// A real function on `CP^N` to be averaged.
pub enum Functional<'a> {
    Constant(f64),
    /// `Σ w_mk x_m² x_k²` with `k = 0..N` labelling `|k − N/2⟩`.
    PopulationQuadratic(DMatrix<f64>),
    Separable(SeparableFunctional),
    General(&'a (dyn Fn(&PureState) -> f64 + Sync)),
}

impl Functional<'_> {
    /// `⟨Jz⟩² = ħ² Σ (m − N/2)(k − N/2) x_m² x_k²`.
    pub fn jz_squared(n: ProjectiveDimension, hbar: f64) -> Self {
        let nn = n.get() as usize;
        let half = nn as f64 / 2.0;
        Functional::PopulationQuadratic(DMatrix::from_fn(nn + 1, nn + 1, |m, k| {
            hbar * hbar * (m as f64 - half) * (k as f64 - half)
        }))
    }

    fn evaluate_state(&self, state: &PureState) -> f64 {
        match self {
            Functional::Constant(c) => *c,
            Functional::PopulationQuadratic(w) => {
                let n = state.dimension() - 1;
                // x_k² lives at storage index N − k
                let pops = state.populations();
                let x2: Vec<f64> = (0..=n).map(|k| pops[n - k]).collect();
                let mut acc = 0.0;
                for m in 0..=n {
                    for k in 0..=n {
                        acc += w[(m, k)] * x2[m] * x2[k];
                    }
                }
                acc
            }
            Functional::Separable(f) => f.evaluate(&coords_of_state(state).expect("N >= 1")),
            Functional::General(f) => f(state),
        }
    }
}

/// Averaging method for [`mean_over_cpn`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedMoment,
    Quadrature { nodes: usize },
    MonteCarlo { samples: u64, seed: u64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ClosedMoment => "closed-moment",
            Method::Quadrature { .. } => "quadrature",
            Method::MonteCarlo { .. } => "monte-carlo",
        }
    }
}

/// Outcome of a `CP^N` average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationResult {
    pub method: String,
    pub n: u32,
    /// Monte Carlo draws, or quadrature nodes per coordinate; 0 for closed forms.
    pub samples: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub seed: Option<u64>,
}

/// `mean(f) = (1/V_N) ∫_{CP^N} f dv`.
///
/// Monte Carlo draws Fubini-Study uniform states from the Gaussian sampler;
/// separable functionals are drawn through [`sample_fs_coords_with`] instead.
pub fn mean_over_cpn(f: &Functional<'_>, n: ProjectiveDimension, method: Method) -> Result<IntegrationResult> {
    let nn = n.get() as usize;
    let (samples, estimate, std_error, seed) = match method {
        Method::ClosedMoment => {
            let est = match f {
                Functional::Constant(c) => *c,
                Functional::PopulationQuadratic(w) => {
                    check_weights(w, nn)?;
                    // E[x_m² x_k²] = (1 + δ_mk)/((N+1)(N+2)) under the uniform measure
                    let denom = ((nn + 1) * (nn + 2)) as f64;
                    let mut acc = 0.0;
                    for m in 0..=nn {
                        for k in 0..=nn {
                            acc += w[(m, k)] * if m == k { 2.0 } else { 1.0 };
                        }
                    }
                    acc / denom
                }
                _ => {
                    return Err(Error::MethodUnavailable {
                        method: "closed-moment",
                    })
                }
            };
            (0, est, 0.0, None)
        }
        Method::Quadrature { nodes } => {
            if nodes == 0 {
                return Err(Error::InvalidParameter("quadrature needs nodes >= 1".into()));
            }
            let sep = match f {
                Functional::Constant(c) => {
                    let mut one = SeparableFunctional::one(n);
                    one.terms[0].coefficient = *c;
                    one
                }
                Functional::PopulationQuadratic(w) => {
                    check_weights(w, nn)?;
                    SeparableFunctional::population_quadratic(w)
                }
                Functional::Separable(s) => s.clone(),
                Functional::General(_) => {
                    return Err(Error::MethodUnavailable { method: "quadrature" })
                }
            };
            let num = integrate_separable(n, &sep, nodes);
            let vol = volume_by_quadrature(n, nodes);
            (nodes as u64, num / vol, 0.0, None)
        }
        Method::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidParameter("Monte Carlo needs samples >= 1".into()));
            }
            if let Functional::PopulationQuadratic(w) = f {
                check_weights(w, nn)?;
            }
            let s = n.spin();
            let values: Vec<f64> = (0..samples)
                .into_par_iter()
                .map(|i| match f {
                    Functional::Separable(sep) => sep.evaluate(&sample_fs_coords_indexed(n, seed, i)),
                    _ => f.evaluate_state(&random_state_indexed(s, seed, i)),
                })
                .collect();
            let st = SampleStats::from_values(&values);
            (samples, st.mean, st.std_error, Some(seed))
        }
    };
    Ok(IntegrationResult {
        method: method.name().to_string(),
        n: n.get(),
        samples,
        estimate,
        std_error,
        seed,
    })
}

fn check_weights(w: &DMatrix<f64>, n: usize) -> Result<()> {
    if w.nrows() != n + 1 || w.ncols() != n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            found: w.nrows(),
        });
    }
    Ok(())
}
