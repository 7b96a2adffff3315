//! Finite-dimensional complex linear algebra: density matrices, orthonormal
//! bases, complementary basis pairs and spectral decompositions.

use std::f64::consts::PI;

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-12;
/// Eigen-solvers leave small negative eigenvalues on singular states.
pub const PSD_TOL: f64 = 1e-10;
/// Default lower bound on `|<mu|k>|` for a pair to count as complementary.
pub const DEFAULT_ETA: f64 = 1e-8;
/// Relative gap below which eigenvalues share one eigenprojector.
pub const DEGENERACY_REL_TOL: f64 = 1e-9;

/// Largest entrywise deviation of `m` from Hermiticity.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(m + m^dagger) / 2`
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// Columns of the returned matrix are the matching eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = hermitize(m).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Largest entrywise deviation of `v^dagger v` from the identity.
fn gram_error(v: &CMatrix) -> f64 {
    let gram = v.adjoint() * v;
    let id = CMatrix::identity(v.ncols(), v.ncols());
    (gram - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// Row-major `[re, im]` serialization of a square complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub elements: Vec<Vec<[f64; 2]>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let elements = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        Self {
            dim: m.nrows(),
            elements,
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.elements.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: self.elements.len(),
            });
        }
        for row in &self.elements {
            if row.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: row.len(),
                });
            }
        }
        Ok(CMatrix::from_fn(self.dim, self.dim, |i, j| {
            let [re, im] = self.elements[i][j];
            Complex64::new(re, im)
        }))
    }
}

/// A valid quantum state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct DensityMatrix {
    elements: CMatrix,
}

impl DensityMatrix {
    pub fn new(elements: CMatrix) -> Result<Self> {
        if !elements.is_square() || elements.nrows() == 0 {
            return Err(Error::InvalidDensityMatrix(format!(
                "shape {}x{} is not square",
                elements.nrows(),
                elements.ncols()
            )));
        }
        let herm = hermiticity_error(&elements);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let elements = hermitize(&elements);
        let trace = elements.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {trace} != 1")));
        }
        let min_eig = hermitian_eigenvalues(&elements)[0];
        if min_eig < -PSD_TOL {
            return Err(Error::NotPhysical {
                min_eigenvalue: min_eig,
            });
        }
        Ok(Self { elements })
    }

    /// `|psi><psi|` for a (not necessarily normalized) nonzero vector.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidDensityMatrix("zero state vector".into()));
        }
        Self::new(outer(&psi.unscale(norm)))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            elements: CMatrix::identity(d, d).unscale(d as f64),
        }
    }

    /// Basis state `|k><k|` in the standard basis.
    pub fn basis_state(d: usize, k: usize) -> Self {
        let mut elements = CMatrix::zeros(d, d);
        elements[(k, k)] = Complex64::new(1.0, 0.0);
        Self { elements }
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.elements
    }

    pub fn into_matrix(self) -> CMatrix {
        self.elements
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.elements)
    }

    pub fn purity(&self) -> f64 {
        (&self.elements * &self.elements).trace().re
    }

    /// Weighted pure-state ensemble from the spectral decomposition; drops
    /// eigenvalues at or below `cutoff`.
    pub fn ensemble(&self, cutoff: f64) -> Vec<(f64, CVector)> {
        let (values, vectors) = hermitian_eigen(&self.elements);
        let kept: Vec<(f64, CVector)> = values
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > cutoff)
            .map(|(i, &w)| (w, vectors.column(i).into_owned()))
            .collect();
        let total: f64 = kept.iter().map(|(w, _)| w).sum();
        kept.into_iter().map(|(w, v)| (w / total, v)).collect()
    }
}

impl TryFrom<MatrixJson> for DensityMatrix {
    type Error = Error;

    fn try_from(json: MatrixJson) -> Result<Self> {
        Self::new(json.to_matrix()?)
    }
}

impl From<DensityMatrix> for MatrixJson {
    fn from(rho: DensityMatrix) -> Self {
        MatrixJson::from_matrix(&rho.elements)
    }
}

/// `d` orthonormal column vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    vectors: CMatrix,
}

impl OrthonormalBasis {
    pub fn new(vectors: CMatrix) -> Result<Self> {
        if !vectors.is_square() {
            return Err(Error::DimensionMismatch {
                expected: vectors.nrows(),
                found: vectors.ncols(),
            });
        }
        let deviation = gram_error(&vectors);
        if deviation > UNITARY_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(Self { vectors })
    }

    pub fn standard(d: usize) -> Self {
        Self {
            vectors: CMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.vectors.column(i).into_owned()
    }

    pub fn projector(&self, i: usize) -> CMatrix {
        outer(&self.vector(i))
    }
}

/// Two orthonormal bases with no mutually orthogonal vectors.
///
/// Latin indices `k` label the first basis, Greek indices `mu` the second.
/// `overlaps[(mu, k)] = <mu|k>`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisPair {
    first: OrthonormalBasis,
    second: OrthonormalBasis,
    overlaps: CMatrix,
    eta: f64,
}

impl BasisPair {
    pub fn new(first: OrthonormalBasis, second: OrthonormalBasis) -> Result<Self> {
        Self::with_eta(first, second, DEFAULT_ETA)
    }

    pub fn with_eta(first: OrthonormalBasis, second: OrthonormalBasis, eta: f64) -> Result<Self> {
        if first.dim() != second.dim() {
            return Err(Error::DimensionMismatch {
                expected: first.dim(),
                found: second.dim(),
            });
        }
        let overlaps = second.vectors().adjoint() * first.vectors();
        let deviation = gram_error(&overlaps);
        if deviation > UNITARY_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        for mu in 0..overlaps.nrows() {
            for k in 0..overlaps.ncols() {
                let modulus = overlaps[(mu, k)].norm();
                if modulus < eta {
                    return Err(Error::NonComplementaryPair { mu, k, modulus, eta });
                }
            }
        }
        Ok(Self {
            first,
            second,
            overlaps,
            eta,
        })
    }

    pub fn dim(&self) -> usize {
        self.first.dim()
    }

    pub fn first(&self) -> &OrthonormalBasis {
        &self.first
    }

    pub fn second(&self) -> &OrthonormalBasis {
        &self.second
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn overlaps(&self) -> &CMatrix {
        &self.overlaps
    }

    /// `<mu|k>`
    pub fn overlap(&self, mu: usize, k: usize) -> Complex64 {
        self.overlaps[(mu, k)]
    }
}

/// Standard basis paired with its discrete Fourier transform,
/// `<k|mu> = exp(2 pi i k mu / d) / sqrt(d)`.
pub fn fourier_pair(d: usize) -> Result<BasisPair> {
    if d < 2 {
        return Err(Error::Config(format!("Fourier pair needs d >= 2, got {d}")));
    }
    let norm = (d as f64).sqrt();
    let second = CMatrix::from_fn(d, d, |k, mu| {
        let phase = 2.0 * PI * ((k * mu) % d) as f64 / d as f64;
        Complex64::from_polar(1.0 / norm, phase)
    });
    BasisPair::new(OrthonormalBasis::standard(d), OrthonormalBasis::new(second)?)
}

/// Spectral representation `A = sum_n a_n P_n` with distinct `a_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSpectral {
    eigenvalues: Vec<f64>,
    projectors: Vec<CMatrix>,
}

impl ObservableSpectral {
    pub fn new(eigenvalues: Vec<f64>, projectors: Vec<CMatrix>) -> Result<Self> {
        if eigenvalues.is_empty() || eigenvalues.len() != projectors.len() {
            return Err(Error::InvalidObservable(
                "need one projector per eigenvalue".into(),
            ));
        }
        let d = projectors[0].nrows();
        for (i, a) in eigenvalues.iter().enumerate() {
            if eigenvalues[..i].iter().any(|b| b == a) {
                return Err(Error::InvalidObservable(format!("repeated eigenvalue {a}")));
            }
        }
        let mut sum = CMatrix::zeros(d, d);
        for (n, p) in projectors.iter().enumerate() {
            if p.shape() != (d, d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.nrows(),
                });
            }
            for (m, q) in projectors.iter().enumerate() {
                let target = if n == m { p.clone() } else { CMatrix::zeros(d, d) };
                let err = (p * q - target).iter().map(|z| z.norm()).fold(0.0, f64::max);
                if err > UNITARY_TOL {
                    return Err(Error::InvalidObservable(format!(
                        "projectors {n}, {m} violate orthogonality by {err:e}"
                    )));
                }
            }
            sum += p;
        }
        let err = (sum - CMatrix::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if err > UNITARY_TOL {
            return Err(Error::InvalidObservable(format!(
                "projectors are incomplete (deviation {err:e})"
            )));
        }
        Ok(Self {
            eigenvalues,
            projectors,
        })
    }

    /// Decompose a Hermitian matrix, merging eigenvalues closer than
    /// [`DEGENERACY_REL_TOL`] relative to the spectral scale.
    pub fn from_hermitian(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidObservable("matrix is not square".into()));
        }
        let herm = hermiticity_error(m);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidObservable(format!(
                "matrix is not Hermitian (deviation {herm:e})"
            )));
        }
        let d = m.nrows();
        let (values, vectors) = hermitian_eigen(m);
        let scale = values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..d {
            match groups.last_mut() {
                Some(g) if (values[i] - values[g[0]]).abs() <= DEGENERACY_REL_TOL * scale => {
                    g.push(i)
                }
                _ => groups.push(vec![i]),
            }
        }
        let mut eigenvalues = Vec::with_capacity(groups.len());
        let mut projectors = Vec::with_capacity(groups.len());
        for g in groups {
            let mean = g.iter().map(|&i| values[i]).sum::<f64>() / g.len() as f64;
            let mut p = CMatrix::zeros(d, d);
            for &i in &g {
                p += outer(&vectors.column(i).into_owned());
            }
            eigenvalues.push(mean);
            projectors.push(p);
        }
        Ok(Self {
            eigenvalues,
            projectors,
        })
    }

    /// The two-level observable `|v><v|` with eigenvalues `{0, 1}`;
    /// index 0 holds `1 - |v><v|`, index 1 holds `|v><v|`.
    pub fn rank_one_projector(v: &CVector) -> Self {
        let d = v.len();
        let p = outer(&v.unscale(v.norm()));
        Self {
            eigenvalues: vec![0.0, 1.0],
            projectors: vec![CMatrix::identity(d, d) - &p, p],
        }
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].nrows()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |acc, a| acc.max(a.abs()))
    }

    /// `sum_n a_n P_n`
    pub fn matrix(&self) -> CMatrix {
        let d = self.dim();
        self.eigenvalues
            .iter()
            .zip(&self.projectors)
            .fold(CMatrix::zeros(d, d), |acc, (a, p)| acc + p.scale(*a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Purity {
    Pure,
    Mixed,
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Deterministic random state: a Haar-like pure state, or the normalized
/// Wishart matrix `G G^dagger / tr` for the mixed case.
pub fn random_density_matrix(d: usize, seed: u64, purity: Purity) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::Config(format!("random state needs d >= 2, got {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = match purity {
        Purity::Pure => {
            let psi = CVector::from_fn(d, |_, _| complex_normal(&mut rng));
            outer(&psi.unscale(psi.norm()))
        }
        Purity::Mixed => {
            let g = CMatrix::from_fn(d, d, |_, _| complex_normal(&mut rng));
            let w = &g * g.adjoint();
            let tr = w.trace().re;
            w.unscale(tr)
        }
    };
    DensityMatrix::new(hermitize(&m))
}

/// Random Hermitian matrix with independent complex-normal entries.
pub fn random_hermitian(d: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMatrix::from_fn(d, d, |_, _| complex_normal(&mut rng));
    hermitize(&g)
}

/// `(1/2) sum |eig(a - b)|`
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let diff = a.matrix() - b.matrix();
    Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|e| e.abs()).sum::<f64>())
}

/// Orthogonal basis of the traceless Hermitian `d x d` matrices
/// (generalized Gell-Mann matrices), `d^2 - 1` elements.
pub fn traceless_hermitian_basis(d: usize) -> Vec<CMatrix> {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut basis = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in (j + 1)..d {
            let mut sym = CMatrix::zeros(d, d);
            sym[(j, k)] = one;
            sym[(k, j)] = one;
            basis.push(sym);
            let mut anti = CMatrix::zeros(d, d);
            anti[(j, k)] = -i;
            anti[(k, j)] = i;
            basis.push(anti);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut diag = CMatrix::zeros(d, d);
        for j in 0..l {
            diag[(j, j)] = one * norm;
        }
        diag[(l, l)] = -one * (l as f64 * norm);
        basis.push(diag);
    }
    basis
}
