use num_complex::Complex64;
use proptest::prelude::*;
use seqtomo::forward::{correlation_set_with_response, ProjectorResponse};
use seqtomo::hilbert::{fourier_pair, random_density_matrix, trace_distance, Purity};
use seqtomo::reconstruct::{noisy_reconstruct, reconstruct};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generic_complex_responses_invert(
        d in 2usize..=6,
        seed in 0u64..10_000,
        pure in any::<bool>(),
        r in 0.05f64..1.0,
        rt in 0.05f64..1.0,
        phase in -1.0f64..1.0,
        phase_t in -1.0f64..1.0,
        eps1 in 0.05f64..2.0,
    ) {
        let purity = if pure { Purity::Pure } else { Purity::Mixed };
        let rho = random_density_matrix(d, seed, purity).unwrap();
        let pair = fourier_pair(d).unwrap();
        let response = ProjectorResponse::from_values(Complex64::from_polar(r, phase), Complex64::from_polar(rt, phase_t), 1.3);
        let corr = correlation_set_with_response(rho.matrix(), &pair, &response, eps1, 0.9).unwrap();
        let back = reconstruct(&corr, &pair).unwrap();
        prop_assert!(trace_distance(&back, &rho).unwrap() < 1e-9);
    }

    #[test]
    fn noisy_reconstruction_is_physical(d in 2usize..=4, seed in 0u64..1000, sigma in 0.0f64..0.05) {
        let rho = random_density_matrix(d, seed, Purity::Mixed).unwrap();
        let pair = fourier_pair(d).unwrap();
        let response = ProjectorResponse::from_values(Complex64::new(0.6, 0.0), Complex64::new(0.6, 0.0), 1.0);
        let corr = correlation_set_with_response(rho.matrix(), &pair, &response, 1.0, 1.0).unwrap();
        let (noisy, report) = noisy_reconstruct(&corr, &pair, sigma, seed).unwrap();
        prop_assert!(noisy.eigenvalues().iter().all(|&e| e >= -1e-12));
        prop_assert!((noisy.matrix().trace().re - 1.0).abs() < 1e-12);
        prop_assert!(report.trace_distance_to_noiseless <= 1.0);
    }
}
