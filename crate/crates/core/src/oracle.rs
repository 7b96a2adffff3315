//! Brute-force reference for the forward model.
//!
//! The joint system-meter-meter state is stored as a weighted ensemble of
//! pure branches, each a `d x n1 x n2` amplitude tensor (meter-2 index
//! fastest). An impulsive interaction `exp(-i eps A (x) P_j)` is applied
//! exactly: in momentum space along meter `j` it is the `d x d` unitary
//! `sum_n exp(-i eps a_n p) P_n` at every momentum node.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Transform};
use crate::forward::CorrelationSet;
use crate::hilbert::{BasisPair, CMatrix, DensityMatrix, ObservableSpectral};
use crate::meter::{GridMeter, Meter};

/// System eigenvalues below this weight are dropped from the ensemble.
const BRANCH_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeterIndex {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeterOp {
    Q,
    P,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub weight: f64,
    pub amplitudes: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct JointState {
    system_dim: usize,
    grid1: GridSpec,
    grid2: GridSpec,
    branches: Vec<Branch>,
}

impl JointState {
    /// `rho_s (x) rho_M1 (x) rho_M2` as an ensemble over the eigenvectors
    /// of `rho_s` and the components of both meters.
    pub fn product(rho: &DensityMatrix, meter1: &GridMeter, meter2: &GridMeter) -> Self {
        let d = rho.dim();
        let (grid1, grid2) = (meter1.grid(), meter2.grid());
        let (n1, n2) = (grid1.n_points, grid2.n_points);
        let mut branches = Vec::new();
        for (ws, psi_s) in rho.ensemble(BRANCH_CUTOFF) {
            for c1 in meter1.components() {
                for c2 in meter2.components() {
                    let mut amplitudes = Vec::with_capacity(d * n1 * n2);
                    for s in 0..d {
                        for a in &c1.psi {
                            let sa = psi_s[s] * a;
                            amplitudes.extend(c2.psi.iter().map(|b| sa * b));
                        }
                    }
                    branches.push(Branch {
                        weight: ws * c1.weight * c2.weight,
                        amplitudes,
                    });
                }
            }
        }
        Self {
            system_dim: d,
            grid1,
            grid2,
            branches,
        }
    }

    /// Product state built from meter descriptions; Gaussian meters are
    /// discretized with `n1` / `n2` points.
    pub fn from_meters(
        rho: &DensityMatrix,
        meter1: &Meter,
        meter2: &Meter,
        n1: usize,
        n2: usize,
    ) -> Result<Self> {
        Ok(Self::product(rho, &meter1.to_grid(n1)?, &meter2.to_grid(n2)?))
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn grid(&self, which: MeterIndex) -> GridSpec {
        match which {
            MeterIndex::First => self.grid1,
            MeterIndex::Second => self.grid2,
        }
    }

    /// `sum |amplitude|^2 dx1 dx2` per branch.
    pub fn branch_norms(&self) -> Vec<f64> {
        let cell = self.grid1.dx() * self.grid2.dx();
        self.branches
            .iter()
            .map(|b| b.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * cell)
            .collect()
    }

    /// Apply `exp(-i eps A (x) P_j)` to every branch.
    pub fn evolve(mut self, observable: &ObservableSpectral, meter: MeterIndex, eps: f64) -> Result<Self> {
        if observable.dim() != self.system_dim {
            return Err(Error::DimensionMismatch {
                expected: self.system_dim,
                found: observable.dim(),
            });
        }
        let grid = self.grid(meter);
        grid.check_shift(eps * observable.max_abs_eigenvalue())?;
        if eps == 0.0 {
            return Ok(self);
        }
        let unitaries = momentum_unitaries(observable, eps, &grid.momenta());
        let (d, n1, n2) = (self.system_dim, self.grid1.n_points, self.grid2.n_points);
        self.branches.par_iter_mut().for_each(|branch| match meter {
            MeterIndex::First => evolve_axis1(&mut branch.amplitudes, d, n1, n2, &unitaries),
            MeterIndex::Second => evolve_axis2(&mut branch.amplitudes, d, n1, n2, &unitaries),
        });
        Ok(self)
    }

    /// `<O1 O2>` over the ensemble, `O1` acting on meter 1 and `O2` on
    /// meter 2. The operators commute, so the result is real.
    pub fn expect_meter_product(&self, op1: MeterOp, op2: MeterOp) -> f64 {
        let (d, n1, n2) = (self.system_dim, self.grid1.n_points, self.grid2.n_points);
        let cell = self.grid1.dx() * self.grid2.dx();
        let x1 = self.grid1.positions();
        let p1 = self.grid1.momenta();
        let x2 = self.grid2.positions();
        let p2 = self.grid2.momenta();
        let t1 = Transform::new(n1);
        let t2 = Transform::new(n2);
        self.branches
            .par_iter()
            .map(|branch| {
                let mut work = branch.amplitudes.clone();
                // meter 2: contiguous rows
                for row in work.chunks_mut(n2) {
                    match op2 {
                        MeterOp::Q => row.iter_mut().zip(&x2).for_each(|(z, x)| *z *= x),
                        MeterOp::P => t2.apply_momentum_fn(row, &p2, |p| p.into()),
                    }
                }
                // meter 1: strided columns
                let mut col = vec![Complex64::new(0.0, 0.0); n1];
                for s in 0..d {
                    for i2 in 0..n2 {
                        let base = s * n1 * n2 + i2;
                        for i1 in 0..n1 {
                            col[i1] = work[base + i1 * n2];
                        }
                        match op1 {
                            MeterOp::Q => col.iter_mut().zip(&x1).for_each(|(z, x)| *z *= x),
                            MeterOp::P => t1.apply_momentum_fn(&mut col, &p1, |p| p.into()),
                        }
                        for i1 in 0..n1 {
                            work[base + i1 * n2] = col[i1];
                        }
                    }
                }
                let inner: Complex64 = branch
                    .amplitudes
                    .iter()
                    .zip(&work)
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                branch.weight * inner.re * cell
            })
            .sum()
    }

    /// Position marginals of both meters.
    pub fn diagnostics(&self) -> Diagnostics {
        let (d, n1, n2) = (self.system_dim, self.grid1.n_points, self.grid2.n_points);
        let mut rho1 = vec![0.0; n1];
        let mut rho2 = vec![0.0; n2];
        for b in &self.branches {
            for s in 0..d {
                for (i1, row) in b.amplitudes[s * n1 * n2..(s + 1) * n1 * n2].chunks_exact(n2).enumerate() {
                    for (i2, z) in row.iter().enumerate() {
                        let w = b.weight * z.norm_sqr();
                        rho1[i1] += w * self.grid2.dx();
                        rho2[i2] += w * self.grid1.dx();
                    }
                }
            }
        }
        Diagnostics {
            meter1: Marginal {
                x: self.grid1.positions(),
                density: rho1,
            },
            meter2: Marginal {
                x: self.grid2.positions(),
                density: rho2,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Marginal {
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

impl Marginal {
    pub fn mean(&self) -> f64 {
        let dx = self.x[1] - self.x[0];
        self.x.iter().zip(&self.density).map(|(x, r)| x * r).sum::<f64>() * dx
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub meter1: Marginal,
    pub meter2: Marginal,
}

fn momentum_unitaries(observable: &ObservableSpectral, eps: f64, momenta: &[f64]) -> Vec<CMatrix> {
    let d = observable.dim();
    momenta
        .iter()
        .map(|&p| {
            observable
                .eigenvalues()
                .iter()
                .zip(observable.projectors())
                .fold(CMatrix::zeros(d, d), |acc, (a, proj)| {
                    acc + proj * Complex64::from_polar(1.0, -eps * a * p)
                })
        })
        .collect()
}

fn apply_unitary(u: &CMatrix, v: &mut [Complex64], tmp: &mut [Complex64]) {
    let d = v.len();
    for r in 0..d {
        tmp[r] = (0..d).map(|c| u[(r, c)] * v[c]).sum();
    }
    v.copy_from_slice(tmp);
}

fn evolve_axis1(amp: &mut [Complex64], d: usize, n1: usize, n2: usize, unitaries: &[CMatrix]) {
    let t = Transform::new(n1);
    let mut slab = vec![Complex64::new(0.0, 0.0); d * n1];
    let mut v = vec![Complex64::new(0.0, 0.0); d];
    let mut tmp = v.clone();
    for i2 in 0..n2 {
        for s in 0..d {
            let row = &mut slab[s * n1..(s + 1) * n1];
            for i1 in 0..n1 {
                row[i1] = amp[(s * n1 + i1) * n2 + i2];
            }
            t.forward(row);
        }
        for (k, u) in unitaries.iter().enumerate() {
            for s in 0..d {
                v[s] = slab[s * n1 + k];
            }
            apply_unitary(u, &mut v, &mut tmp);
            for s in 0..d {
                slab[s * n1 + k] = v[s];
            }
        }
        for s in 0..d {
            let row = &mut slab[s * n1..(s + 1) * n1];
            t.inverse(row);
            for i1 in 0..n1 {
                amp[(s * n1 + i1) * n2 + i2] = row[i1];
            }
        }
    }
}

fn evolve_axis2(amp: &mut [Complex64], d: usize, n1: usize, n2: usize, unitaries: &[CMatrix]) {
    let t = Transform::new(n2);
    let mut slab = vec![Complex64::new(0.0, 0.0); d * n2];
    let mut v = vec![Complex64::new(0.0, 0.0); d];
    let mut tmp = v.clone();
    for i1 in 0..n1 {
        for s in 0..d {
            let start = (s * n1 + i1) * n2;
            let row = &mut slab[s * n2..(s + 1) * n2];
            row.copy_from_slice(&amp[start..start + n2]);
            t.forward(row);
        }
        for (k, u) in unitaries.iter().enumerate() {
            for s in 0..d {
                v[s] = slab[s * n2 + k];
            }
            apply_unitary(u, &mut v, &mut tmp);
            for s in 0..d {
                slab[s * n2 + k] = v[s];
            }
        }
        for s in 0..d {
            let start = (s * n1 + i1) * n2;
            let row = &mut slab[s * n2..(s + 1) * n2];
            t.inverse(row);
            amp[start..start + n2].copy_from_slice(row);
        }
    }
}

/// Grid resolution for oracle runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleGrid {
    pub n1: usize,
    pub n2: usize,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self {
            n1: crate::meter::DEFAULT_N1,
            n2: crate::meter::DEFAULT_N2,
        }
    }
}

/// `(<Q1 Q2>, <P1 Q2>)` from a full joint simulation of `first` then `second`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_correlations(
    rho: &DensityMatrix,
    first: &ObservableSpectral,
    second: &ObservableSpectral,
    meter1: &Meter,
    meter2: &Meter,
    eps1: f64,
    eps2: f64,
    grid: OracleGrid,
) -> Result<(f64, f64)> {
    let joint = JointState::from_meters(rho, meter1, meter2, grid.n1, grid.n2)?
        .evolve(first, MeterIndex::First, eps1)?
        .evolve(second, MeterIndex::Second, eps2)?;
    Ok((
        joint.expect_meter_product(MeterOp::Q, MeterOp::Q),
        joint.expect_meter_product(MeterOp::P, MeterOp::Q),
    ))
}

/// The full `x`, `y_tilde` tables measured on the grid: every projector
/// pair `(P_k, P_mu)` is simulated and
/// `x = <Q1 Q2> / (eps1 eps2)`, `y_tilde = <P1 Q2> / (2 eps1 eps2 <P1^2>)`.
/// The response values `lambda`, `lambda_tilde` are properties of the first
/// meter and are taken from it.
#[allow(clippy::too_many_arguments)]
pub fn simulate_correlation_set(
    rho: &DensityMatrix,
    pair: &BasisPair,
    meter1: &Meter,
    meter2: &Meter,
    eps1: f64,
    eps2: f64,
    grid: OracleGrid,
) -> Result<CorrelationSet> {
    let d = pair.dim();
    if rho.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho.dim(),
        });
    }
    let sigma_p1_sq = meter1.sigma_p_sq();
    let mut x = vec![vec![0.0; d]; d];
    let mut y_tilde = vec![vec![0.0; d]; d];
    for k in 0..d {
        let a = ObservableSpectral::rank_one_projector(&pair.first().vector(k));
        for mu in 0..d {
            let b = ObservableSpectral::rank_one_projector(&pair.second().vector(mu));
            let (qq, pq) = simulate_correlations(rho, &a, &b, meter1, meter2, eps1, eps2, grid)?;
            x[mu][k] = qq / (eps1 * eps2);
            y_tilde[mu][k] = pq / (2.0 * eps1 * eps2 * sigma_p1_sq);
        }
    }
    Ok(CorrelationSet {
        dim: d,
        eps1,
        eps2,
        sigma_p1_sq,
        lambda: meter1.lambda(eps1)?,
        lambda_tilde: meter1.lambda_tilde(eps1)?,
        x,
        y_tilde,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{random_density_matrix, random_hermitian, Purity};
    use approx::assert_abs_diff_eq;

    fn small_joint(rho: &DensityMatrix) -> JointState {
        let g = Meter::gaussian(1.0).unwrap();
        JointState::from_meters(rho, &g, &g, 128, 64).unwrap()
    }

    #[test]
    fn zero_coupling_is_identity() {
        let rho = random_density_matrix(2, 3, Purity::Mixed).unwrap();
        let joint = small_joint(&rho);
        let obs = ObservableSpectral::from_hermitian(&random_hermitian(2, 1)).unwrap();
        let before: Vec<_> = joint.branches()[0].amplitudes.clone();
        let after = joint.evolve(&obs, MeterIndex::First, 0.0).unwrap();
        assert_eq!(before, after.branches()[0].amplitudes);
    }

    #[test]
    fn pointer_shift_of_eigenstate() {
        let rho = DensityMatrix::basis_state(2, 1);
        let a = ObservableSpectral::from_hermitian(&CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(0.4, 0.0),
            Complex64::new(-0.9, 0.0),
        ])))
        .unwrap();
        let joint = small_joint(&rho).evolve(&a, MeterIndex::First, 0.8).unwrap();
        let diag = joint.diagnostics();
        assert_abs_diff_eq!(diag.meter1.mean(), 0.8 * -0.9, epsilon = 1e-10);
        assert_abs_diff_eq!(diag.meter2.mean(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn evolution_is_unitary() {
        let rho = random_density_matrix(3, 5, Purity::Mixed).unwrap();
        let a = ObservableSpectral::from_hermitian(&random_hermitian(3, 8)).unwrap();
        let b = ObservableSpectral::from_hermitian(&random_hermitian(3, 9)).unwrap();
        let g = Meter::gaussian(1.0).unwrap();
        let joint = JointState::from_meters(&rho, &g, &g, 256, 64).unwrap();
        let before = joint.branch_norms();
        let scale = 1.0 / a.max_abs_eigenvalue().max(b.max_abs_eigenvalue());
        let after = joint
            .evolve(&a, MeterIndex::First, scale)
            .unwrap()
            .evolve(&b, MeterIndex::Second, scale)
            .unwrap()
            .branch_norms();
        for (x, y) in before.iter().zip(&after) {
            assert_abs_diff_eq!(*x, 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(*x, *y, epsilon = 1e-12);
        }
    }

    #[test]
    fn unevolved_product_has_no_correlation() {
        let rho = random_density_matrix(2, 1, Purity::Mixed).unwrap();
        let joint = small_joint(&rho);
        assert_abs_diff_eq!(joint.expect_meter_product(MeterOp::Q, MeterOp::Q), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(joint.expect_meter_product(MeterOp::P, MeterOp::Q), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn oversized_shift_is_rejected() {
        let rho = DensityMatrix::maximally_mixed(2);
        let joint = small_joint(&rho);
        let limit = joint.grid(MeterIndex::First).max_shift();
        let a = ObservableSpectral::rank_one_projector(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]));
        assert!(matches!(
            joint.evolve(&a, MeterIndex::First, 1.1 * limit),
            Err(Error::GridWrapAround { .. })
        ));
    }
}
