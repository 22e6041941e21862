use aqec_demo::{fidelity_columns, fringe_columns, sensitivity_columns};

#[test]
fn fringes_are_probabilities_and_noise_reduces_contrast() {
    let c = fringe_columns(5000.0, 2.0, 2.0, 41).unwrap();
    assert_eq!(c.len(), 4);
    for col in &c[1..] {
        assert!(col.iter().all(|p| (-1e-9..=1.0 + 1e-9).contains(p)));
    }
    let contrast = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    assert!(contrast(&c[1]) > contrast(&c[2]));
    assert!(contrast(&c[3]) > contrast(&c[2]));
}

#[test]
fn noiseless_sensitivity_is_the_shot_noise_limit() {
    let c = sensitivity_columns(5000.0, 9).unwrap();
    for (t, dw) in c[0].iter().zip(&c[3]) {
        assert!((dw - 1.0 / (3.0 * t.sqrt())).abs() < 1e-5 * dw, "τ = {t}: {dw}");
    }
}

#[test]
fn effective_curve_tracks_rate_model() {
    let c = fidelity_columns(5000.0, 1.0, 11).unwrap();
    for (e, r) in c[1].iter().zip(&c[2]).skip(1) {
        assert!((e - r).abs() < 0.03, "{e} vs {r}");
    }
    assert!(c[1][10] > c[3][10]);
}
