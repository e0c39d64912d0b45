//! The spin-`j` irreducible representation of su(2).
//!
//! Matrices act on the `2j+1` dimensional space spanned by `|m⟩`,
//! `m = j, j−1, …, −j`, in that row order. Operators carry the scale `ħ`
//! they were built with; `J_i` entries are in units of `ħ`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest `2j` accepted when parsing a label from text.
pub const MAX_PARSED_TWICE_J: u32 = 2000;

/// Spin label `j`, stored exactly as the integer `2j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinQuantum {
    twice_j: u32,
}

impl SpinQuantum {
    pub const fn from_twice(twice_j: u32) -> Self {
        Self { twice_j }
    }

    pub const fn twice_j(self) -> u32 {
        self.twice_j
    }

    pub fn j(self) -> f64 {
        f64::from(self.twice_j) / 2.0
    }

    pub const fn dimension(self) -> usize {
        self.twice_j as usize + 1
    }

    /// `j(j+1)`.
    pub fn casimir_eigenvalue(self) -> f64 {
        let j = self.j();
        j * (j + 1.0)
    }

    /// `m` for each basis index, descending from `j`.
    pub fn m_values(self) -> impl Iterator<Item = f64> + Clone {
        let tj = i64::from(self.twice_j);
        (0..=tj).map(move |k| (tj - 2 * k) as f64 / 2.0)
    }

    /// Basis index of `|m⟩` given `2m`.
    pub fn index_of(self, twice_m: i64) -> Result<usize> {
        let tj = i64::from(self.twice_j);
        if twice_m.abs() > tj || (tj - twice_m) % 2 != 0 {
            return Err(Error::InvalidM {
                twice_j: self.twice_j,
                twice_m,
            });
        }
        Ok(((tj - twice_m) / 2) as usize)
    }
}

impl fmt::Display for SpinQuantum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice_j.is_multiple_of(2) {
            write!(f, "{}", self.twice_j / 2)
        } else {
            write!(f, "{}/2", self.twice_j)
        }
    }
}

impl FromStr for SpinQuantum {
    type Err = Error;

    /// Accepts `"3"`, `"5/2"`, `"4/2"` and `"1/1"` style rationals.
    fn from_str(s: &str) -> Result<Self> {
        let text = s.trim();
        let bad = || Error::InvalidSpin(format!("invalid spin {s:?}: expected k or k/2 with k >= 0"));
        if text.is_empty() {
            return Err(bad());
        }
        let (num, den) = match text.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (text, "1"),
        };
        if num.is_empty() || !num.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if den.is_empty() || !den.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let num: u64 = num.parse().map_err(|_| bad())?;
        let den: u64 = den.parse().map_err(|_| bad())?;
        let twice_j = match den {
            1 => num.checked_mul(2).ok_or_else(bad)?,
            2 => num,
            _ => return Err(bad()),
        };
        if twice_j > u64::from(MAX_PARSED_TWICE_J) {
            return Err(Error::InvalidSpin(format!(
                "spin {s:?} exceeds the supported maximum j = {}",
                MAX_PARSED_TWICE_J / 2
            )));
        }
        Ok(Self::from_twice(twice_j as u32))
    }
}

impl Serialize for SpinQuantum {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SpinQuantum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A `d×d` complex matrix built from the spin generators at scale `ħ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperator {
    matrix: DMatrix<Complex64>,
    hbar: f64,
}

impl SpinOperator {
    pub fn new(matrix: DMatrix<Complex64>, hbar: f64) -> Self {
        assert!(matrix.is_square(), "spin operators are square");
        Self { matrix, hbar }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// `max |A − A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    pub fn commutator(&self, other: &SpinOperator) -> DMatrix<Complex64> {
        &self.matrix * &other.matrix - &other.matrix * &self.matrix
    }
}

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn build_jz(s: SpinQuantum, hbar: f64) -> SpinOperator {
    let diag: Vec<Complex64> = s.m_values().map(|m| Complex64::new(hbar * m, 0.0)).collect();
    SpinOperator::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)), hbar)
}

/// `(J_+, J_−)` with `J_+|m⟩ = ħ√(j(j+1) − m(m+1))|m+1⟩`.
pub fn build_ladder(s: SpinQuantum, hbar: f64) -> (SpinOperator, SpinOperator) {
    let d = s.dimension();
    let c = s.casimir_eigenvalue();
    let mut plus = DMatrix::<Complex64>::zeros(d, d);
    // column k holds |m⟩ with m = j − k; its image sits one row up
    for (k, m) in s.m_values().enumerate().skip(1) {
        let amp = (c - m * (m + 1.0)).max(0.0).sqrt();
        plus[(k - 1, k)] = Complex64::new(hbar * amp, 0.0);
    }
    let minus = plus.adjoint();
    (SpinOperator::new(plus, hbar), SpinOperator::new(minus, hbar))
}

pub fn build_jx_jy(s: SpinQuantum, hbar: f64) -> (SpinOperator, SpinOperator) {
    let (plus, minus) = build_ladder(s, hbar);
    let jx = (plus.matrix() + minus.matrix()) * Complex64::new(0.5, 0.0);
    // (J+ − J−)/(2i) = −i/2 (J+ − J−)
    let jy = (plus.matrix() - minus.matrix()) * Complex64::new(0.0, -0.5);
    (SpinOperator::new(jx, hbar), SpinOperator::new(jy, hbar))
}

/// `J² = Jx² + Jy² + Jz²` assembled from the matrices (not the closed form).
pub fn casimir(s: SpinQuantum, hbar: f64) -> SpinOperator {
    let ops = SpinMatrices::new(s, hbar);
    let m = ops.jx.matrix() * ops.jx.matrix()
        + ops.jy.matrix() * ops.jy.matrix()
        + ops.jz.matrix() * ops.jz.matrix();
    SpinOperator::new(m, hbar)
}

/// All generators of one representation at one `ħ`.
#[derive(Debug, Clone)]
pub struct SpinMatrices {
    pub s: SpinQuantum,
    pub hbar: f64,
    pub jx: SpinOperator,
    pub jy: SpinOperator,
    pub jz: SpinOperator,
    pub jplus: SpinOperator,
    pub jminus: SpinOperator,
}

impl SpinMatrices {
    pub fn new(s: SpinQuantum, hbar: f64) -> Self {
        let (jplus, jminus) = build_ladder(s, hbar);
        let (jx, jy) = build_jx_jy(s, hbar);
        Self {
            s,
            hbar,
            jx,
            jy,
            jz: build_jz(s, hbar),
            jplus,
            jminus,
        }
    }

    pub fn cartesian(&self) -> [&SpinOperator; 3] {
        [&self.jx, &self.jy, &self.jz]
    }

    /// `ħ²j(j+1)`.
    pub fn casimir_value(&self) -> f64 {
        self.hbar * self.hbar * self.s.casimir_eigenvalue()
    }

    /// `n̂·J⃗` for a real 3-vector.
    pub fn along(&self, n: [f64; 3]) -> DMatrix<Complex64> {
        self.jx.matrix() * Complex64::from(n[0])
            + self.jy.matrix() * Complex64::from(n[1])
            + self.jz.matrix() * Complex64::from(n[2])
    }
}

/// `U(r⃗) = exp(i r⃗·J⃗/ħ)` together with its coordinates.
#[derive(Debug, Clone)]
pub struct GroupElement {
    r: [f64; 3],
    matrix: DMatrix<Complex64>,
}

impl GroupElement {
    pub fn r(&self) -> [f64; 3] {
        self.r
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `max |U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.matrix.nrows();
        max_abs(&(self.matrix.adjoint() * &self.matrix - DMatrix::identity(d, d)))
    }
}

/// Exponential of the hermitian generator `r⃗·J⃗/ħ` via its eigendecomposition.
pub fn group_element(s: SpinQuantum, r: [f64; 3], hbar: f64) -> GroupElement {
    assert!(r.iter().all(|x| x.is_finite()), "group coordinates must be finite");
    // r·J/ħ does not depend on ħ; build it at unit scale
    let generator = SpinMatrices::new(s, 1.0).along(r);
    let _ = hbar;
    GroupElement {
        r,
        matrix: exp_i_hermitian(&generator),
    }
}

/// `exp(iH)` for hermitian `H`.
pub fn exp_i_hermitian(h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = h.nrows();
    // symmetrize against roundoff before handing to the eigensolver
    let h = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(0.0, l).exp()));
    let v = &eig.eigenvectors;
    debug_assert_eq!(v.nrows(), d);
    v * phases * v.adjoint()
}

/// Adjoint action `U†J_iU = Σ_j Λ_ij J_j`, fitted in the trace inner product.
pub fn adjoint_matrix(s: SpinQuantum, r: [f64; 3]) -> Result<Matrix3<f64>> {
    let ops = SpinMatrices::new(s, 1.0);
    let u = group_element(s, r, 1.0);
    adjoint_fit(&ops, u.matrix())
}

pub(crate) fn adjoint_fit(ops: &SpinMatrices, u: &DMatrix<Complex64>) -> Result<Matrix3<f64>> {
    let basis = ops.cartesian();
    // tr(J_a J_b) = δ_ab ħ² j(j+1)(2j+1)/3
    let norm = ops.casimir_value() * ops.s.dimension() as f64 / 3.0;
    if norm <= 0.0 {
        return Err(Error::SolveFailure {
            residual: f64::INFINITY,
        });
    }
    let mut lambda = Matrix3::zeros();
    let mut residual: f64 = 0.0;
    for (i, ji) in basis.iter().enumerate() {
        let rotated = u.adjoint() * ji.matrix() * u;
        let mut fit = DMatrix::<Complex64>::zeros(rotated.nrows(), rotated.ncols());
        for (k, jk) in basis.iter().enumerate() {
            let coeff = (jk.matrix() * &rotated).trace().re / norm;
            lambda[(i, k)] = coeff;
            fit += jk.matrix() * Complex64::from(coeff);
        }
        residual = residual.max(max_abs(&(rotated - fit)));
    }
    if residual > 1e-8 * ops.hbar.max(1.0) {
        return Err(Error::SolveFailure { residual });
    }
    Ok(lambda)
}
