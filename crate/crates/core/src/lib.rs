//! Reconstruction of finite-dimensional quantum states from the pointer
//! correlations of two successive von Neumann measurements.
//!
//! The pieces, bottom-up:
//!
//! * [`hilbert`]: density matrices, orthonormal bases, complementary pairs.
//! * [`meter`]: pointer wavefunctions and their response functions.
//! * [`forward`]: closed-form pointer correlations for a given state.
//! * [`oracle`]: brute-force joint evolution on a position grid.
//! * [`reconstruct`]: inversion of measured correlations into a state.
//! * [`quasiprob`]: the quasi-probability representation of states and
//!   observables.
//! * [`harness`]: config-driven experiments behind the `seqtomo` binary.

pub mod error;
pub mod forward;
pub mod grid;
pub mod harness;
pub mod hilbert;
pub mod meter;
pub mod oracle;
pub mod quasiprob;
pub mod reconstruct;

pub use error::{Error, Result};
pub use forward::{correlation_set, CorrelationSet, ProjectorResponse, SuccessiveSetup, Variant};
pub use hilbert::{fourier_pair, BasisPair, CMatrix, DensityMatrix, ObservableSpectral, OrthonormalBasis};
pub use meter::{GaussianMeter, GridMeter, Meter, MeterConfig};
pub use reconstruct::{reconstruct, recover_w11, rho_from_w11};

/// `Complex64` as a two-element `[re, im]` array.
pub mod serde_complex {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}
