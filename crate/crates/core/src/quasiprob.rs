//! Quasi-probability representation of states and observables.
//!
//! A state is represented by the complex table
//! `W11(mu, k) = [sum_k' G(k', k) <k|rho|k'> <k'|mu>] <mu|k>`, where
//! `G(k, k) = 1` and `G(k', k) = lambda` otherwise. An observable `O` maps to
//! `O(mu, k) = (1 - 1/lambda) <k|O|k> + (1/lambda) <mu|O|k> / <mu|k>`, and
//! `tr(rho O) = sum W11(mu, k) O(mu, k)`. At `lambda = 1` the table is the
//! Kirkwood-Dirac distribution `tr(rho P_mu P_k)`.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{BasisPair, CMatrix, DensityMatrix, MatrixJson};
use crate::reconstruct::{rho_from_w11, STRONG_COUPLING_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiProbTable {
    pub dim: usize,
    /// Coupling that produced `lambda`, when it came from a meter.
    pub eps1: Option<f64>,
    #[serde(with = "crate::serde_complex")]
    pub lambda: Complex64,
    /// Indexed `(mu, k)`.
    #[serde(with = "table_json")]
    pub values: CMatrix,
}

mod table_json {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        MatrixJson::deserialize(d)?.to_matrix().map_err(serde::de::Error::custom)
    }
}

impl QuasiProbTable {
    /// Wrap a measured or computed `W11` table.
    pub fn from_w11(values: CMatrix, lambda: Complex64, eps1: Option<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::DimensionMismatch {
                expected: values.nrows(),
                found: values.ncols(),
            });
        }
        Ok(Self {
            dim: values.nrows(),
            eps1,
            lambda,
            values,
        })
    }

    pub fn total(&self) -> Complex64 {
        self.values.iter().sum()
    }

    /// `sum_mu W11(mu, k)`, the populations `<k|rho|k>`.
    pub fn column_marginals(&self) -> Vec<Complex64> {
        self.values.column_iter().map(|c| c.iter().sum()).collect()
    }

    /// `sum_k W11(mu, k)`.
    pub fn row_marginals(&self) -> Vec<Complex64> {
        self.values.row_iter().map(|r| r.iter().sum()).collect()
    }

    /// Invert back to the density matrix.
    pub fn to_density(&self, pair: &BasisPair) -> Result<DensityMatrix> {
        rho_from_w11(&self.values, pair, self.lambda)
    }

    /// Rows `mu,k,re,im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["mu", "k", "re", "im"])?;
        for mu in 0..self.dim {
            for k in 0..self.dim {
                let z = self.values[(mu, k)];
                w.serialize((mu, k, z.re, z.im))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn check_dim(m: &CMatrix, pair: &BasisPair) -> Result<()> {
    if m.shape() != (pair.dim(), pair.dim()) {
        return Err(Error::DimensionMismatch {
            expected: pair.dim(),
            found: m.nrows(),
        });
    }
    Ok(())
}

fn check_lambda(lambda: Complex64) -> Result<()> {
    if lambda.norm() <= STRONG_COUPLING_TOL {
        return Err(Error::SingularTransform {
            modulus: lambda.norm(),
        });
    }
    Ok(())
}

/// `W11` evaluated directly from `rho` for a supplied `lambda`.
pub fn quasiprob_of_state(rho: &DensityMatrix, pair: &BasisPair, lambda: Complex64) -> Result<QuasiProbTable> {
    let rho_m = rho.matrix();
    check_dim(rho_m, pair)?;
    let d = pair.dim();
    let ov = pair.overlaps();
    let values = CMatrix::from_fn(d, d, |mu, k| {
        let bracket: Complex64 = (0..d)
            .map(|k2| {
                let g = if k2 == k { Complex64::new(1.0, 0.0) } else { lambda };
                g * rho_m[(k, k2)] * ov[(mu, k2)].conj()
            })
            .sum();
        bracket * ov[(mu, k)]
    });
    QuasiProbTable::from_w11(values, lambda, None)
}

/// Single cell `O(mu, k)` of the observable transform.
pub fn transform_observable(obs: &CMatrix, pair: &BasisPair, lambda: Complex64, mu: usize, k: usize) -> Result<Complex64> {
    Ok(transform_table(obs, pair, lambda)?[(mu, k)])
}

/// The whole `O(mu, k)` table.
pub fn transform_table(obs: &CMatrix, pair: &BasisPair, lambda: Complex64) -> Result<CMatrix> {
    check_dim(obs, pair)?;
    check_lambda(lambda)?;
    let d = pair.dim();
    // <mu|O|k> with |k> the first basis and <mu| the second.
    let mu_o_k = pair.second().vectors().adjoint() * obs * pair.first().vectors();
    let inv = Complex64::new(1.0, 0.0) / lambda;
    Ok(CMatrix::from_fn(d, d, |mu, k| {
        let diag = (pair.first().vectors().column(k).adjoint() * obs * pair.first().vectors().column(k))[(0, 0)];
        (1.0 - inv) * diag + inv * mu_o_k[(mu, k)] / pair.overlap(mu, k)
    }))
}

/// `sum_{mu,k} W11(mu, k) O(mu, k)`; the imaginary part is kept so callers
/// can see how far from real the sum came out.
pub fn expectation_via_quasiprob(
    rho: &DensityMatrix,
    obs: &CMatrix,
    pair: &BasisPair,
    lambda: Complex64,
) -> Result<Complex64> {
    let table = quasiprob_of_state(rho, pair, lambda)?;
    let o = transform_table(obs, pair, lambda)?;
    Ok(table.values.component_mul(&o).sum())
}
