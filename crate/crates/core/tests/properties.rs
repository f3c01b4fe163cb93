use nalgebra::{Matrix3, Vector3};
use num_rational::Ratio;
use proptest::prelude::*;

use pentatrope::automaton::{in_b_n, lift_positive, log_state, step_phi, step_phi_t, TropicalState};
use pentatrope::dynamics::{step_f, step_f_log, step_t, Block, PositiveState};
use pentatrope::geometry::{cross_ratio, cross_ratio_points, ProjectivePoint};
use pentatrope::sampling::{convex_polygon, projective_perturbation, trial_rng, twisted_polygon};
use pentatrope::tropical::{oplus, AffineTerm, MaxPlusPresentation, SemiringParam};

fn affine_term(arity: usize) -> impl Strategy<Value = AffineTerm> {
    (-5i64..=5, prop::collection::vec(-2i64..=2, arity)).prop_map(|(offset, slope)| AffineTerm::new(offset as f64, slope))
}

fn presentation() -> impl Strategy<Value = (MaxPlusPresentation, Vec<f64>)> {
    (1usize..5).prop_flat_map(|arity| {
        (
            prop::collection::vec(affine_term(arity), 1..5),
            prop::collection::vec(affine_term(arity), 1..5),
            prop::collection::vec(-8.0f64..8.0, arity),
        )
            .prop_map(|(plus, minus, x)| (MaxPlusPresentation::new(plus, minus).unwrap(), x))
    })
}

fn real_state(n: usize, radius: f64) -> impl Strategy<Value = TropicalState<f64>> {
    (prop::collection::vec(-radius..radius, n), prop::collection::vec(-radius..radius, n))
        .prop_map(|(x, y)| TropicalState::new(x, y).unwrap())
}

fn int_state(n: usize) -> impl Strategy<Value = TropicalState<i64>> {
    (prop::collection::vec(-50i64..=50, n), prop::collection::vec(-50i64..=50, n))
        .prop_map(|(x, y)| TropicalState::new(x, y).unwrap())
}

fn positive_state(n: usize) -> impl Strategy<Value = PositiveState> {
    (prop::collection::vec(-3.0f64..3.0, n), prop::collection::vec(-3.0f64..3.0, n)).prop_map(|(a, b)| {
        PositiveState::new(a.iter().map(|v| v.exp()).collect(), b.iter().map(|v| v.exp()).collect()).unwrap()
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dequantization_gap_is_at_most_log_t_m((p, x) in presentation(), t in 1.5f64..50.0) {
        let t = SemiringParam::new(t).unwrap();
        let exact = p.eval_maxplus(&x).unwrap();
        let smooth = p.eval_rt(t, &x).unwrap();
        prop_assert!((exact - smooth).abs() <= t.log(p.component_count() as f64) + 1e-9);
    }

    #[test]
    fn presentations_are_lipschitz((p, x) in presentation(), dx in prop::collection::vec(-1.0f64..1.0, 4)) {
        let y: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let sup = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let gap = (p.eval_maxplus(&x).unwrap() - p.eval_maxplus(&y).unwrap()).abs();
        prop_assert!(gap <= p.lipschitz_constant() as f64 * sup + 1e-9);
    }

    #[test]
    fn rt_evaluation_is_the_log_of_the_elementary_function((p, x) in presentation(), t in 1.5f64..10.0) {
        let t = SemiringParam::new(t).unwrap();
        let z: Vec<f64> = x.iter().map(|v| t.pow(*v)).collect();
        let lifted = t.log(p.eval_elementary(t, &z).unwrap());
        prop_assert!(rel(lifted, p.eval_rt(t, &x).unwrap()) <= 1e-9);
    }

    #[test]
    fn oplus_is_commutative_and_above_max(v in prop::collection::vec(-100.0f64..100.0, 1..6), t in 1.1f64..100.0) {
        let t = SemiringParam::new(t).unwrap();
        let a = oplus(t, &v).unwrap();
        let mut r = v.clone();
        r.reverse();
        prop_assert!((a - oplus(t, &r).unwrap()).abs() <= 1e-12 * a.abs().max(1.0));
        let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(a >= top && a <= top + t.log(v.len() as f64) + 1e-12);
    }

    #[test]
    fn automaton_conserves_block_sums_exactly(s in int_state(7)) {
        let image = step_phi(&s);
        prop_assert_eq!(image.sum_x(), s.sum_x());
        prop_assert_eq!(image.sum_y(), s.sum_y());
    }

    #[test]
    fn phi_t_is_the_log_conjugate_of_f(s in real_state(6, 5.0), t in 1.5f64..20.0) {
        let t = SemiringParam::new(t).unwrap();
        let via_f = log_state(t, &step_f(&lift_positive(t, &s).unwrap()));
        let direct = step_phi_t(t, &s);
        for (a, b) in via_f.flat().iter().zip(direct.flat()) {
            prop_assert!(rel(*a, b) <= 1e-9);
        }
    }

    #[test]
    fn phi_t_tends_to_phi(s in real_state(5, 10.0)) {
        let t = SemiringParam::new(1e8).unwrap();
        let gap = step_phi(&s).flat().iter().zip(step_phi_t(t, &s).flat()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(gap <= t.log(4.0) + 1e-12);
    }

    #[test]
    fn t_and_f_are_sign_conjugate(p in positive_state(6)) {
        let image = step_f(&p);
        for block in [Block::Z, Block::W] {
            let via_t = step_t(&p.sign_conjugate(block)).unwrap();
            let expect = image.sign_conjugate(block);
            for (a, b) in via_t.z().iter().zip(expect.z()).chain(via_t.w().iter().zip(expect.w())) {
                prop_assert!(rel(*a, *b) <= 1e-12);
            }
        }
    }

    #[test]
    fn log_domain_f_matches_linear_f(p in positive_state(8)) {
        let log = step_f_log(&p.to_log()).to_linear().unwrap();
        let lin = step_f(&p);
        for (a, b) in log.z().iter().zip(lin.z()).chain(log.w().iter().zip(lin.w())) {
            prop_assert!(rel(*a, *b) <= 1e-12);
        }
    }

    #[test]
    fn b_n_points_shift_and_close_up(
        x in prop::collection::vec((-40i64..40, 1i64..9), 6),
        y in prop::collection::vec((-40i64..40, 1i64..9), 6),
    ) {
        let q = |v: &[(i64, i64)]| v.iter().map(|&(a, b)| Ratio::new(a, b)).collect::<Vec<_>>();
        let (x, mut y) = (q(&x), q(&y));
        let excess = *x.iter().max().unwrap() + *y.iter().max().unwrap();
        for v in &mut y {
            *v -= excess;
        }
        let s = TropicalState::new(x, y).unwrap();
        prop_assert!(in_b_n(&s));
        let image = step_phi(&s);
        prop_assert_eq!(image.x(), s.x());
        prop_assert_eq!(image.y()[..5].to_vec(), s.y()[1..].to_vec());
        let back = (1..6).fold(image, |cur, _| step_phi(&cur));
        prop_assert_eq!(back, s);
    }

    #[test]
    fn cross_ratio_is_projectively_invariant(
        ts in prop::array::uniform4(-5.0f64..5.0),
        base in prop::array::uniform3(-1.0f64..1.0),
        dir in prop::array::uniform3(-1.0f64..1.0),
        seed in any::<u64>(),
    ) {
        let min_gap = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).map(|(i, j)| (ts[i] - ts[j]).abs()).fold(f64::INFINITY, f64::min);
        let (b, d) = (Vector3::from(base), Vector3::from(dir));
        prop_assume!(min_gap > 0.05 && b.cross(&d).norm() > 0.1);
        let expect = cross_ratio(ts[0], ts[1], ts[2], ts[3]).unwrap();
        let psi = projective_perturbation(&mut trial_rng(seed, 0), 0.5, 10.0);
        let points: Vec<ProjectivePoint> = ts.iter().map(|t| ProjectivePoint::new((b + d * *t).into()).unwrap()).collect();
        let moved: Vec<ProjectivePoint> = points.iter().map(|p| p.transform(&psi).unwrap()).collect();
        let before = cross_ratio_points(&points[0], &points[1], &points[2], &points[3]).unwrap();
        let after = cross_ratio_points(&moved[0], &moved[1], &moved[2], &moved[3]).unwrap();
        prop_assert!(rel(before, expect) <= 1e-8);
        prop_assert!(rel(after, expect) <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn corner_coordinates_are_projective_invariants(seed in any::<u64>(), n in 5usize..9) {
        let mut rng = trial_rng(seed, 0);
        let p = convex_polygon(&mut rng, n).unwrap();
        let psi = projective_perturbation(&mut rng, 0.5, 10.0);
        let a = p.canonical_coordinates().unwrap();
        let b = p.transformed(&psi).unwrap().canonical_coordinates().unwrap();
        for (u, v) in a.z().iter().zip(b.z()).chain(a.w().iter().zip(b.w())) {
            prop_assert!(rel(*u, *v) <= 1e-8);
        }
    }

    #[test]
    fn twisted_polygons_follow_t(seed in any::<u64>(), n in 5usize..9) {
        let p = twisted_polygon(&mut trial_rng(seed, 1), n, 0.2).unwrap();
        prop_assume!(*p.monodromy() != Matrix3::identity());
        let expect = step_t(&p.canonical_coordinates().unwrap()).unwrap();
        let got = p.pentagram_step().unwrap().canonical_coordinates().unwrap();
        for (u, v) in expect.z().iter().zip(got.z()).chain(expect.w().iter().zip(got.w())) {
            prop_assert!(rel(*u, *v) <= 1e-7);
        }
    }
}
