mod common;

use common::{hermite_component, skewed_complex_meter};
use seqtomo::forward::{correlation_set, w11_projector, Variant};
use seqtomo::grid::GridSpec;
use seqtomo::hilbert::{fourier_pair, random_density_matrix, random_hermitian, trace_distance, ObservableSpectral, Purity};
use seqtomo::meter::{GridMeter, Meter};
use seqtomo::oracle::{simulate_correlation_set, JointState, MeterIndex, OracleGrid};
use seqtomo::reconstruct::{reconstruct, recover_w11};

fn max_table_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn complex_response_meter_matches_oracle() {
    let meter1 = Meter::Grid(skewed_complex_meter(GridSpec::new(1024, 60.0).unwrap()));
    let meter2 = Meter::gaussian(1.0).unwrap();
    let eps1 = 0.8;
    let h = meter1.h(eps1).unwrap();
    assert!(h.norm() > 1e-3, "meter should exercise h, got {h}");
    assert!(meter1.lambda(eps1).unwrap().im.abs() > 1e-3);

    let pair = fourier_pair(3).unwrap();
    let rho = random_density_matrix(3, 31, Purity::Mixed).unwrap();
    let analytic = correlation_set(&rho, &pair, &meter1, &meter2, eps1, 1.0).unwrap();
    let simulated = simulate_correlation_set(&rho, &pair, &meter1, &meter2, eps1, 1.0, OracleGrid::default()).unwrap();
    assert!(max_table_diff(&analytic.x, &simulated.x) < 1e-8);
    assert!(max_table_diff(&analytic.y_tilde, &simulated.y_tilde) < 1e-8);

    let back = reconstruct(&simulated, &pair).unwrap();
    assert!(trace_distance(&back, &rho).unwrap() < 1e-8);
    let w = recover_w11(&simulated, &pair).unwrap().w11;
    for mu in 0..3 {
        for k in 0..3 {
            let want = w11_projector(&rho, &pair, k, mu, &meter1, eps1, Variant::Plain).unwrap();
            assert!((w[(mu, k)] - want).norm() < 1e-8);
        }
    }
}

#[test]
fn mixed_pointer_state_matches_oracle() {
    let grid = GridSpec::new(512, 24.0).unwrap();
    let meter1 = Meter::Grid(
        GridMeter::normalized(grid, vec![(0.7, hermite_component(grid, 0, 1.0)), (0.3, hermite_component(grid, 2, 1.0))])
            .unwrap(),
    );
    let eps1 = 1.1;
    let (l, lt) = (meter1.lambda(eps1).unwrap(), meter1.lambda_tilde(eps1).unwrap());
    assert!((l - lt).norm() > 1e-3, "lambda and lambda_tilde should differ");
    let pair = fourier_pair(2).unwrap();
    let meter2 = Meter::gaussian(0.8).unwrap();
    for seed in [1u64, 2] {
        let rho = random_density_matrix(2, seed, Purity::Mixed).unwrap();
        let analytic = correlation_set(&rho, &pair, &meter1, &meter2, eps1, 0.7).unwrap();
        let simulated = simulate_correlation_set(&rho, &pair, &meter1, &meter2, eps1, 0.7, OracleGrid::default()).unwrap();
        assert!(max_table_diff(&analytic.x, &simulated.x) < 1e-8);
        assert!(max_table_diff(&analytic.y_tilde, &simulated.y_tilde) < 1e-8);
        assert!(trace_distance(&reconstruct(&simulated, &pair).unwrap(), &rho).unwrap() < 1e-8);
    }
}

#[test]
fn diagnostics_dump_and_unitarity_with_mixture() {
    let grid = GridSpec::new(256, 24.0).unwrap();
    let meter = GridMeter::normalized(grid, vec![(0.5, hermite_component(grid, 0, 1.0)), (0.5, hermite_component(grid, 1, 1.0))]).unwrap();
    let rho = random_density_matrix(2, 9, Purity::Mixed).unwrap();
    let joint = JointState::product(&rho, &meter, &meter);
    assert_eq!(joint.branches().len(), 2 * 2 * 2);
    let total: f64 = joint.branches().iter().map(|b| b.weight).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let a = ObservableSpectral::from_hermitian(&random_hermitian(2, 4)).unwrap();
    let scale = 1.0 / a.max_abs_eigenvalue();
    let after = joint.evolve(&a, MeterIndex::First, scale).unwrap();
    assert!(after.branch_norms().iter().all(|n| (n - 1.0).abs() < 1e-10));
    let dump = serde_json::to_value(after.diagnostics()).unwrap();
    assert_eq!(dump["meter1"]["x"].as_array().unwrap().len(), 256);
    let mass: f64 = dump["meter1"]["density"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum::<f64>() * grid.dx();
    assert!((mass - 1.0).abs() < 1e-10);
}
