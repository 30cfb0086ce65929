use rfa_demo::{compare, contamination, spectra};

#[test]
fn comparison_has_two_method_blocks() {
    let out = compare("t1", 60, 40, 4, 1).unwrap();
    assert_eq!(out.len(), 6);
    assert!(out.iter().all(|x| x.is_finite() && *x >= 0.0));
    assert!(out[1] <= 1.0 && out[4] <= 1.0);
}

#[test]
fn spectra_are_trace_normalized_and_sorted() {
    let out = spectra("gaussian", 30, 50, 2).unwrap();
    assert_eq!(out.len(), 20);
    for half in out.chunks(10) {
        assert!(half.windows(2).all(|w| w[0] >= w[1]));
        assert!(half.iter().sum::<f64>() <= 1.0 + 1e-12);
    }
}

#[test]
fn contamination_curve_starts_at_zero() {
    let out = contamination("t3", 40, 30, 3, 0.1, 3).unwrap();
    assert_eq!(out.len(), 18);
    assert_eq!(out[0], 0.0);
    assert!((out[5] - 0.1).abs() < 1e-15);
    assert_eq!(out[6], 0.0);
    assert_eq!(out[12], 0.0);
}

#[test]
fn bad_inputs_are_reported() {
    assert!(compare("cauchy", 60, 40, 4, 1).is_err());
    assert!(spectra("gaussian", 1000, 40, 1).is_err());
    assert!(contamination("t3", 40, 30, 3, 0.9, 1).is_err());
}
