//! Values frozen from independent derivations: exact rational solves, the
//! exponential integral and closed-form bound states.

use approx::assert_relative_eq;
use carleman_core::monotonicity::CutoffSpec;
use carleman_core::waveguide::log_sech;
use carleman_core::*;

#[test]
fn log_weight_coefficients_are_the_rational_solution() {
    let c = solve_log_weight_coefficients().unwrap();
    let exact = [103.0 / 96.0, 9.0 / 64.0, -17.0 / 96.0, 17.0 / 384.0, -737.0 / 384.0];
    for (got, want) in c.to_array().iter().zip(exact) {
        assert_relative_eq!(*got, want, epsilon = 1e-14);
    }
}

#[test]
fn power_weight_coefficients_for_alpha_zero() {
    let w = build_power_weight(0.0).unwrap();
    let exact = [280.0 / 243.0, -35.0 / 81.0, 40.0 / 243.0, -7.0 / 243.0, -35.0 / 243.0];
    for (got, want) in w.coeffs.to_array().iter().zip(exact) {
        assert_relative_eq!(*got, want, epsilon = 1e-14);
    }
    assert_eq!(w.p, Some(4.0 / 3.0));
}

#[test]
fn log_weight_at_e_matches_the_exponential_integral() {
    // 3e - (Ei(2) - Ei(1)) / e + a5
    let w = Weight::log_linear().unwrap();
    assert_relative_eq!(w.eval(std::f64::consts::E).unwrap().phi, 5.11018856896053, epsilon = 1e-12);
}

#[test]
fn junction_jet_is_continuous() {
    let w = Weight::log_linear().unwrap();
    let inner = w.inner_jet(1.0).to_array();
    let outer = w.outer_jet(1.0).to_array();
    assert_relative_eq!(outer[0], 415.0 / 384.0, epsilon = 1e-14);
    for (a, b) in inner.iter().zip(outer) {
        assert_relative_eq!(*a, b, epsilon = 1e-12);
    }
}

#[test]
fn reflectionless_wells_bind_at_the_square_integers() {
    // -ν(ν+1) sech² binds at λ_e = ν², (ν-1)², ...
    let g = GridSpec::with_spacing(1, 20.0, 2e-3).unwrap();
    let one = solve_stationary(&PotentialSpec::sech_well(2.0, 1.0).unwrap(), g, 3).unwrap();
    assert_eq!(one.len(), 1);
    assert_relative_eq!(one[0].lambda_e, 1.0, epsilon = 1e-6);
    let two = solve_stationary(&PotentialSpec::sech_well(6.0, 1.0).unwrap(), g, 3).unwrap();
    assert_eq!(two.len(), 2);
    assert_relative_eq!(two[0].lambda_e, 4.0, epsilon = 1e-5);
    assert_relative_eq!(two[1].lambda_e, 1.0, epsilon = 1e-5);
}

#[test]
fn ground_state_is_sech() {
    let g = GridSpec::with_spacing(1, 20.0, 1e-2).unwrap();
    let pair = solve_stationary(&PotentialSpec::sech_well(2.0, 1.0).unwrap(), g, 1)
        .unwrap()
        .remove(0);
    // unit norm of sech is sqrt(2)
    let scale = pair.q.values[g.num_points / 2].re;
    assert_relative_eq!(scale, 1.0 / 2f64.sqrt(), epsilon = 1e-4);
    for i in (0..g.num_points).step_by(250) {
        let x = g.coord(i);
        assert!((pair.q.values[i].re - scale / x.cosh()).abs() < 1e-4, "{x}");
    }
}

#[test]
fn quintic_cutoff_extrema() {
    let c = CutoffSpec::new(1.0).unwrap();
    let n = 200_001;
    let (mut d1, mut d2) = (0.0f64, 0.0f64);
    for i in 0..n {
        let r = 1.0 + i as f64 / (n - 1) as f64;
        d1 = d1.max(c.derivative(r).abs());
        d2 = d2.max(c.second_derivative(r).abs());
    }
    assert_relative_eq!(d1, 1.875, epsilon = 1e-9);
    assert_relative_eq!(d2, 10.0 / 3f64.sqrt(), epsilon = 1e-6);
}

#[test]
fn log_sech_far_out() {
    assert_relative_eq!(log_sech(0.0), 0.0, epsilon = 1e-16);
    assert_relative_eq!(log_sech(1000.0), std::f64::consts::LN_2 - 1000.0, epsilon = 1e-12);
    assert_relative_eq!(log_sech(-3.0), (1.0 / 3f64.cosh()).ln(), epsilon = 1e-14);
}
