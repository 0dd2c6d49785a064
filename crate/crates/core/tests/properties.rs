use std::f64::consts::TAU;

use circle_lie::field::Evaluate;
use circle_lie::parser::{format, parse_trig};
use circle_lie::*;
use proptest::prelude::*;

fn poly(max_degree: usize) -> impl Strategy<Value = TrigPoly> {
    (0..=max_degree).prop_flat_map(|d| {
        (
            -3.0..3.0f64,
            prop::collection::vec(-3.0..3.0f64, d),
            prop::collection::vec(-3.0..3.0f64, d),
        )
            .prop_map(|(a0, c, s)| TrigPoly::new(a0, c, s).unwrap())
    })
}

fn field(max_degree: usize) -> impl Strategy<Value = VectorField> {
    poly(max_degree).prop_map(VectorField::from)
}

fn map() -> impl Strategy<Value = CircleMap> {
    (0.0..TAU, -0.6..0.6f64, 1u32..=3, any::<bool>()).prop_map(|(alpha, eps, m, flip)| {
        let mut f = CircleMap::perturbed_harmonic(eps, m).unwrap();
        if flip {
            f = CircleMap::compose(&CircleMap::reflection(), &f);
        }
        CircleMap::compose(&CircleMap::rotation(alpha), &f)
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_matches_central_difference(p in poly(5), t in 0.0..TAU) {
        let h = 1e-5;
        let fd = (p.eval(t + h) - p.eval(t - h)) / (2.0 * h);
        prop_assert!(close(p.slope(t), fd, 1e-6));
        prop_assert!(close(p.deriv().eval(t), p.slope(t), 1e-12));
    }

    #[test]
    fn product_is_commutative_and_associative(a in poly(3), b in poly(3), c in poly(3), t in 0.0..TAU) {
        let ab = TrigPoly::multiply(&a, &b);
        prop_assert!(TrigPoly::lincomb(1.0, &ab, -1.0, &TrigPoly::multiply(&b, &a)).max_abs_coeff() < 1e-12);
        let l = TrigPoly::multiply(&ab, &c);
        let r = TrigPoly::multiply(&a, &TrigPoly::multiply(&b, &c));
        prop_assert!(TrigPoly::lincomb(1.0, &l, -1.0, &r).max_abs_coeff() < 1e-10);
        prop_assert!(close(ab.eval(t), a.eval(t) * b.eval(t), 1e-12));
    }

    #[test]
    fn format_then_parse_round_trips(p in poly(6)) {
        let q = parse_trig(&format(&p)).unwrap();
        prop_assert!(TrigPoly::lincomb(1.0, &p, -1.0, &q).max_abs_coeff() < 1e-12, "{}", format(&p));
    }

    #[test]
    fn bracket_is_antisymmetric_and_bilinear(v in field(3), w in field(3), u in field(3), a in -2.0..2.0f64) {
        let vw = bracket(&v, &w);
        let wv = bracket(&w, &v);
        let sum = PeriodicFunction::lincomb(1.0, vw.exact().unwrap(), 1.0, wv.exact().unwrap());
        prop_assert!(sum.max_abs_coeff() < 1e-12);

        let combo = VectorField::new(PeriodicFunction::lincomb(a, w.exact().unwrap(), 1.0, u.exact().unwrap()));
        let lhs = bracket(&v, &combo);
        let rhs = PeriodicFunction::lincomb(a, vw.exact().unwrap(), 1.0, bracket(&v, &u).exact().unwrap());
        let diff = PeriodicFunction::lincomb(1.0, lhs.exact().unwrap(), -1.0, &rhs);
        prop_assert!(diff.max_abs_coeff() < 1e-10);
    }

    #[test]
    fn jacobi_identity(u in field(2), v in field(2), w in field(2)) {
        let cyc = |a: &VectorField, b: &VectorField, c: &VectorField| bracket(a, &bracket(b, c));
        let terms = [cyc(&u, &v, &w), cyc(&v, &w, &u), cyc(&w, &u, &v)];
        let sum = terms.iter().skip(1).fold(terms[0].exact().unwrap().clone(), |acc, t| {
            PeriodicFunction::lincomb(1.0, &acc, 1.0, t.exact().unwrap())
        });
        prop_assert!(sum.max_abs_coeff() < 1e-9);
    }

    #[test]
    fn map_inverse_round_trips(f in map(), t in 0.0..TAU) {
        let y = f.apply(t);
        prop_assert!(y >= 0.0 && y < TAU);
        let back = f.apply_inverse(y);
        prop_assert!(circle_lie::singularity::circle_distance(back, t) < 1e-10);
        prop_assert!(close(f.invert().apply(y), back, 1e-12) || circle_lie::singularity::circle_distance(f.invert().apply(y), back) < 1e-12);
    }

    #[test]
    fn pushforward_is_natural_for_brackets(v in field(2), w in field(2), f in map(), y in 0.0..TAU) {
        let lhs = bracket(&v.pushforward(&f), &w.pushforward(&f));
        let rhs = bracket(&v, &w).pushforward(&f);
        prop_assert!(close(lhs.value(y), rhs.value(y), 1e-6), "{} vs {}", lhs.value(y), rhs.value(y));
    }

    #[test]
    fn pushforward_composes(v in field(3), f in map(), g in map(), y in 0.0..TAU) {
        let two_step = v.pushforward(&f).pushforward(&g);
        let one_step = v.pushforward(&CircleMap::compose(&g, &f));
        prop_assert!(close(two_step.value(y), one_step.value(y), 1e-9));
        // defining relation w̃(f(θ)) = w(θ) f′(θ)
        let t = f.apply_inverse(y);
        prop_assert!(close(v.pushforward(&f).value(y), v.value(t) * f.derivative(t), 1e-9));
    }

    #[test]
    fn zero_count_is_invariant(n in 1usize..=5, phase in 0.0..TAU, f in map()) {
        let w = VectorField::from(TrigPoly::sin_term(n, 1.0).shift(phase));
        let before = find_singular(&w).unwrap().count;
        let after = find_singular(&w.pushforward(&f)).unwrap().count;
        prop_assert_eq!(before, 2 * n);
        prop_assert_eq!(after, before);
    }
}

#[test]
fn json_round_trips() {
    let f = CircleMap::compose(&CircleMap::rotation(0.5), &CircleMap::perturbed(0.2).unwrap());
    let back: CircleMap = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
    for i in 0..20 {
        let t = TAU * i as f64 / 20.0;
        assert!((f.apply(t) - back.apply(t)).abs() < 1e-15);
    }
    let p = CanonicalPair::new(2, vec![0.5, -1.0], vec![1, -1]).unwrap();
    let (_, w) = p.fields();
    let json = serde_json::to_value(w.exact().unwrap()).unwrap();
    assert_eq!(json["pieces"].as_array().unwrap().len(), 2);
    let back: PeriodicFunction = serde_json::from_value(json).unwrap();
    assert_eq!(&back, w.exact().unwrap());
}
