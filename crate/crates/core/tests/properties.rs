use nalgebra::DMatrix;
use proptest::prelude::*;

use slicecalc::calculus::{build_contour, f_of_t_with};
use slicecalc::io::{operator_to_json, parse_operator};
use slicecalc::spectral::{resolvent_equation_residual, s_spectrum_exact};
use slicecalc::unbounded::transform_residual;
use slicecalc::verify::spectrum_distance;
use slicecalc::*;

fn operator(n: usize, d: usize) -> impl Strategy<Value = ParavectorOperator> {
    proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, d * d), n + 1).prop_map(move |cs| {
        ParavectorOperator::new(cs.into_iter().map(|c| DMatrix::from_row_slice(d, d, &c)).collect()).unwrap()
    })
}

fn sized_operator() -> impl Strategy<Value = ParavectorOperator> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(n, d)| operator(n, d))
}

fn with_point() -> impl Strategy<Value = (ParavectorOperator, Paravector)> {
    sized_operator().prop_flat_map(|t| {
        let n = t.n();
        (Just(t), -3.0f64..3.0, proptest::collection::vec(-3.0f64..3.0, n))
            .prop_map(|(t, x0, v)| (t, Paravector::new(x0, v)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operator_json_round_trips_exactly(t in sized_operator(), scale in prop::sample::select(vec![1e-300, 1e-7, 1.0, 3.3e12])) {
        let m = t.as_clifford().scale(scale);
        let back = parse_operator(&operator_to_json(&m), 8).unwrap();
        prop_assert_eq!(back.as_clifford(), &m);
    }

    #[test]
    fn resolvent_equation_holds((t, s) in with_point()) {
        let spec = s_spectrum_exact(&t).unwrap();
        prop_assume!(spectrum_distance(&spec, &s) > 0.25);
        prop_assert!(resolvent_equation_residual(&s, &t).unwrap() <= 1e-10);
    }

    #[test]
    fn transform_identity_holds((t, s) in with_point(), k in -4.0f64..4.0) {
        let spec = s_spectrum_exact(&t).unwrap();
        let kp = Paravector::real(t.n(), k);
        prop_assume!(spectrum_distance(&spec, &s) > 0.25 && spectrum_distance(&spec, &kp) > 0.25);
        prop_assume!(s.sub(&kp).norm() > 0.25);
        prop_assert!(transform_residual(&s, &t, k).unwrap() <= 1e-9);
    }

    #[test]
    fn spectrum_is_axially_symmetric_and_bounded(t in sized_operator()) {
        let spec = s_spectrum_exact(&t).unwrap();
        prop_assert!(!spec.components.is_empty());
        for c in &spec.components {
            prop_assert!(c.r >= 0.0);
            prop_assert!(c.modulus() <= spec.rep_norm + 1e-10);
        }
    }

    #[test]
    fn sequential_and_parallel_quadrature_agree(t in sized_operator()) {
        let n = t.n();
        let f = SliceSeriesFunction::exp(n);
        let spec = s_spectrum_exact(&t).unwrap();
        let c = build_contour(&spec, &f, &ImagUnit::basis(n, 1), None, 64).unwrap();
        let a = f_of_t_with(&f, &t, &c, Exec::Sequential).unwrap();
        let b = f_of_t_with(&f, &t, &c, Exec::default()).unwrap();
        prop_assert_eq!(a.value, b.value);
    }
}

#[test]
fn exp_of_a_real_diagonal_operator() {
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, -1.0, 2.0]));
    let t = ParavectorOperator::new(vec![d, DMatrix::zeros(3, 3), DMatrix::zeros(3, 3)]).unwrap();
    let r = calculus::f_of_t_auto(&SliceSeriesFunction::exp(2), &t, &ImagUnit::basis(2, 2), None, 512).unwrap();
    for (i, x) in [0.5f64, -1.0, 2.0].into_iter().enumerate() {
        assert!((r.value.blade(BladeIndex::SCALAR)[(i, i)] - x.exp()).abs() <= 1e-10 * x.exp());
    }
    assert!(r.value.blade(BladeIndex::SCALAR)[(0, 1)].abs() <= 1e-12);
}
