use softmax_analog::analysis::{self, MismatchSpec};
use softmax_analog::devices::{NpnParams, TailSourceSpec};
use softmax_analog::network::{BranchDevice, LoadSpec, NetworkConfig};

fn network() -> NetworkConfig<f64> {
    NetworkConfig::uniform(
        4,
        BranchDevice::Npn(NpnParams::ideal(1e-14)),
        LoadSpec::Resistor(20.0),
        TailSourceSpec::ideal(50e-3),
        5.0,
        0.0,
    )
}

#[test]
fn exact_single_branch_error_matches_closed_form() {
    let n = 4.0f64;
    let expected = 0.01 * (1.0 - 1.0 / n) / (1.0 + 0.01 / n);
    assert!((expected - 0.0074813).abs() < 1e-7);
    let exact = analysis::mismatch_exact_error(0.01, &[2.5; 4], &network(), 0).unwrap();
    assert!((exact - expected).abs() < 1e-6);
    let first = analysis::mismatch_first_order_error(0.01, &[2.5; 4], &network(), 0).unwrap();
    assert_eq!(first, 0.01);
}

#[test]
fn one_percent_sigma_statistics() {
    let spec = MismatchSpec {
        sigma_rel: 0.01,
        trials: 10_000,
        rng_seed: 2024,
    };
    let r = analysis::mismatch_monte_carlo(&network(), &[2.5; 4], &spec).unwrap();
    assert_eq!(r.rejected, 0);
    assert_eq!(r.max_rel_error.len(), 10_000);
    assert!(r.median_branch_error <= 0.01, "{}", r.median_branch_error);
    assert!(r.p95_branch_error <= 0.02, "{}", r.p95_branch_error);
    // The worst of four branches is larger than a typical branch.
    assert!(r.median_max_error > r.median_branch_error);
    assert!(r.p95_max_error <= 0.03);
}

#[test]
fn error_is_linear_in_sigma() {
    let sweep = analysis::mismatch_sigma_sweep(&network(), &[2.5; 4], &[0.001, 0.005, 0.01, 0.02], 2_000, 7)
        .unwrap();
    assert!(sweep.r_squared > 0.99, "{}", sweep.r_squared);
    assert!((0.5..=1.5).contains(&sweep.slope), "{}", sweep.slope);
}
