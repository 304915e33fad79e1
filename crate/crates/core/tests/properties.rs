use measurekit::affine::AffineMap;
use measurekit::catalog::{self, HALF_LN_2PI};
use measurekit::combinators::{
    for_product, power, product, pointwise_product, pushforward, scale, superpose, Likelihood,
};
use measurekit::density::base_chain_length;
use measurekit::verify::{self, Region};
use measurekit::{
    basemeasure, chain, chain_logdensity2, doc, logdensity2, logdensity3, make_kernel, sample, sample_chain,
    LogWeight, Measure, ParamMap, Point, WeightClass,
};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Measure> {
    prop_oneof![
        Just(Measure::lebesgue()),
        Just(Measure::counting()),
        (0i64..4).prop_map(Measure::dirac),
        (-1.0..1.0f64).prop_map(Measure::dirac),
        (-3.0..3.0f64, 0.2..3.0f64).prop_map(|(m, s)| catalog::normal(m, s).unwrap()),
        Just(catalog::uniform01()),
        (0.2..3.0f64).prop_map(|r| catalog::exponential(r).unwrap()),
        (0.3..9.0f64).prop_map(|l| catalog::poisson(l).unwrap()),
        (0.05..0.95f64).prop_map(|p| catalog::bernoulli(p).unwrap()),
        (0.5..20.0f64, 0.05..0.95f64).prop_map(|(r, p)| catalog::negbinomial_rp(r, p).unwrap()),
        (0.5..20.0f64, 0.1..5.0f64).prop_map(|(a, b)| catalog::negbinomial_ab(a, b).unwrap()),
    ]
}

fn weight() -> impl Strategy<Value = LogWeight> {
    prop_oneof![4 => (-3.0..3.0f64).prop_map(LogWeight::new), 1 => Just(LogWeight::NEG_INF)]
}

/// Measures on the real line built from catalog leaves.
fn scalar_measure() -> impl Strategy<Value = Measure> {
    leaf().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (weight(), inner.clone()).prop_map(|(w, m)| scale(w, m).unwrap()),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| superpose(a, b).unwrap()),
            (prop_oneof![0.3..3.0f64, -3.0..-0.3f64], -2.0..2.0f64, inner.clone())
                .prop_map(|(s, x0, m)| pushforward(AffineMap::forward_scalar(s, x0).unwrap(), m).unwrap()),
            (inner, -2.0..2.0f64).prop_map(|(m, data)| {
                let k = make_kernel("Normal", vec![("μ", ParamMap::Identity)]).unwrap();
                pointwise_product(m, Likelihood::new(k, Point::Real(data))).unwrap()
            }),
        ]
    })
}

/// Measures on the real line whose base chains end in Lebesgue.
fn continuous_measure() -> impl Strategy<Value = Measure> {
    let leaf = prop_oneof![
        (-3.0..3.0f64, 0.2..3.0f64).prop_map(|(m, s)| catalog::normal(m, s).unwrap()),
        (0.2..3.0f64).prop_map(|r| catalog::exponential(r).unwrap()),
        Just(catalog::uniform01()),
        Just(Measure::lebesgue()),
    ];
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (-3.0..3.0f64, inner.clone()).prop_map(|(w, m)| scale(LogWeight::new(w), m).unwrap()),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| superpose(a, b).unwrap()),
            (0.3..3.0f64, -2.0..2.0f64, inner)
                .prop_map(|(s, x0, m)| pushforward(AffineMap::forward_scalar(s, x0).unwrap(), m).unwrap()),
        ]
    })
}

/// Measures on the integers whose base chains end in counting measure.
fn discrete_measure() -> impl Strategy<Value = Measure> {
    let leaf = prop_oneof![
        Just(Measure::counting()),
        (0i64..4).prop_map(Measure::dirac),
        (0.3..9.0f64).prop_map(|l| catalog::poisson(l).unwrap()),
        (0.05..0.95f64).prop_map(|p| catalog::bernoulli(p).unwrap()),
        (0.5..20.0f64, 0.05..0.95f64).prop_map(|(r, p)| catalog::negbinomial_rp(r, p).unwrap()),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (weight(), inner.clone()).prop_map(|(w, m)| scale(w, m).unwrap()),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| superpose(a, b).unwrap()),
            (inner, -2.0..2.0f64).prop_map(|(m, data)| {
                let k = make_kernel("Normal", vec![("μ", ParamMap::Identity)]).unwrap();
                pointwise_product(m, Likelihood::new(k, Point::Real(data))).unwrap()
            }),
        ]
    })
}

/// Measures whose superpositions never mix atoms with a diffuse part.
fn homogeneous_measure() -> impl Strategy<Value = Measure> {
    prop_oneof![discrete_measure(), continuous_measure()]
}

fn scalar_point() -> impl Strategy<Value = Point> {
    prop_oneof![
        (-2i64..9).prop_map(Point::Int),
        (-4.0..6.0f64).prop_map(Point::Real),
        (0.0..1.0f64).prop_map(Point::Real),
    ]
}

fn not_nan(v: LogWeight) -> bool {
    !matches!(v, LogWeight::Value(f) if f.is_nan())
}

fn walk() -> measurekit::ChainSpec {
    let step = make_kernel("Normal", vec![("μ", ParamMap::Identity)]).unwrap();
    chain(step, catalog::normal(0.0, 1.0).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn antisymmetry(mu in scalar_measure(), nu in scalar_measure(), x in scalar_point()) {
        match (logdensity3(&mu, &nu, &x), logdensity3(&nu, &mu, &x)) {
            (Ok(a), Ok(b)) => {
                prop_assert!(a.same(-b), "{} vs {}", a, b);
                prop_assert!(not_nan(a) && not_nan(b));
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "one-sided failure: {:?} / {:?}", a, b),
        }
    }

    #[test]
    fn self_density_is_zero(mu in scalar_measure(), x in scalar_point()) {
        prop_assert!(logdensity3(&mu, &mu, &x).unwrap().same(LogWeight::ZERO));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn recursion_consistency(mu in homogeneous_measure(), nu in homogeneous_measure(), x in scalar_point()) {
        let Ok(direct) = logdensity3(&mu, &nu, &x) else { return Ok(()) };
        let (Ok(a), Ok(b)) = (basemeasure(&mu, &x), basemeasure(&nu, &x)) else { return Ok(()) };
        let terms = (logdensity2(&mu, &x), logdensity3(&a, &b, &x), logdensity2(&nu, &x));
        if let (Ok(f), Ok(r), Ok(g)) = terms {
            if let (Some(d), Some(f), Some(r), Some(g)) = (direct.finite(), f.finite(), r.finite(), g.finite()) {
                prop_assert!((d - (f + r - g)).abs() <= 1e-12, "{} vs {} + {} - {}", d, f, r, g);
            }
        }
    }

    #[test]
    fn base_chains_terminate(mu in scalar_measure(), nu in scalar_measure(), x in scalar_point(), y in scalar_point()) {
        for m in [mu.clone(), product(mu.clone(), nu.clone()), power(nu.clone(), &[3]).unwrap()] {
            let p = match m.node() {
                measurekit::Node::Product(_) => Point::tuple([x.clone(), y.clone()]),
                measurekit::Node::Power { .. } => Point::tuple([x.clone(), y.clone(), x.clone()]),
                _ => x.clone(),
            };
            let steps = base_chain_length(&m, &p).unwrap();
            prop_assert!(steps <= m.depth() + 2, "{} took {} steps at depth {}", m, steps, m.depth());
        }
    }

    #[test]
    fn scale_is_additive(a in -5.0..5.0f64, b in -5.0..5.0f64, mu in leaf(), x in scalar_point()) {
        let nested = scale(LogWeight::new(a), scale(LogWeight::new(b), mu.clone()).unwrap()).unwrap();
        let merged = scale(LogWeight::new(a + b), mu).unwrap();
        prop_assert_eq!(&nested, &merged);
        let lhs = logdensity2(&nested, &x).unwrap();
        prop_assert!(lhs.same(logdensity2(&merged, &x).unwrap()));
    }

    #[test]
    fn posterior_shifts_prior_by_loglik(m in -2.0..2.0f64, s in 0.3..3.0f64, data in -3.0..3.0f64, theta in -4.0..4.0f64) {
        let prior = catalog::normal(m, s).unwrap();
        let k = make_kernel("Normal", vec![("μ", ParamMap::Identity), ("σ", ParamMap::Const(0.7))]).unwrap();
        let lik = Likelihood::new(k, Point::Real(data));
        let post = pointwise_product(prior.clone(), lik.clone()).unwrap();
        let t = Point::Real(theta);
        let expected = logdensity2(&prior, &t).unwrap() + lik.loglik(&t).unwrap();
        prop_assert!(logdensity2(&post, &t).unwrap().same(expected));
        prop_assert_eq!(basemeasure(&post, &t).unwrap(), basemeasure(&prior, &t).unwrap());
    }

    #[test]
    fn pushforward_inverse_restores(mu in continuous_measure(), s in prop_oneof![0.3..3.0f64, -3.0..-0.3f64], x0 in -2.0..2.0f64, x in -4.0..4.0f64) {
        let t = AffineMap::forward_scalar(s, x0).unwrap();
        let back = pushforward(t.inverse_map(), pushforward(t, mu.clone()).unwrap()).unwrap();
        let leb = Measure::lebesgue();
        let p = Point::Real(x);
        let (a, b) = (logdensity3(&back, &leb, &p).unwrap(), logdensity3(&mu, &leb, &p).unwrap());
        match (a.finite(), b.finite()) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-10, "{} vs {}", a, b),
            _ => prop_assert_eq!(a.class(), b.class()),
        }
    }

    #[test]
    fn unit_power_is_identity(mu in scalar_measure(), nu in scalar_measure(), x in scalar_point()) {
        let (pm, pn) = (power(mu.clone(), &[1]).unwrap(), power(nu.clone(), &[1]).unwrap());
        let wrapped = Point::tuple([x.clone()]);
        match (logdensity3(&pm, &pn, &wrapped), logdensity3(&mu, &nu, &x)) {
            (Ok(a), Ok(b)) => match (a.finite(), b.finite()) {
                (Some(u), Some(v)) => prop_assert!((u - v).abs() <= 1e-12, "{} vs {}", u, v),
                _ => prop_assert!(a.same(b), "{} vs {}", a, b),
            },
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} / {:?}", a, b),
        }
    }

    #[test]
    fn kernels_are_pure(x in 0.01..10.0f64) {
        let k = make_kernel("Normal", vec![("μ", ParamMap::Identity), ("σ", ParamMap::Sqrt)]).unwrap();
        let p = Point::Real(x);
        prop_assert_eq!(k.apply(&p).unwrap(), k.apply(&p).unwrap());
    }

    #[test]
    fn sampling_is_deterministic(mu in scalar_measure(), seed in any::<u64>()) {
        if let Ok(a) = sample(&mu, seed) {
            prop_assert_eq!(a, sample(&mu, seed).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn chain_prefix_additivity(seed in any::<u64>(), n in 2usize..40) {
        let spec = walk();
        let path = sample_chain(&spec, seed).take_prefix(n).unwrap();
        let whole = chain_logdensity2(&spec, &path).unwrap();
        let head = chain_logdensity2(&spec, &path[..n - 1]).unwrap();
        let last = logdensity2(&spec.step().apply(&path[n - 2]).unwrap(), &path[n - 1]).unwrap();
        prop_assert!(whole.same(head + last));
    }

    #[test]
    fn chain_prefixes_are_reproducible(seed in any::<u64>()) {
        let spec = walk();
        let a = sample_chain(&spec, seed).take_prefix(1000).unwrap();
        let b = sample_chain(&spec, seed).take_prefix(1000).unwrap();
        prop_assert_eq!(&a, &b);
        let short = sample_chain(&spec, seed).take_prefix(10).unwrap();
        prop_assert_eq!(&a[..10], &short[..]);
    }

    #[test]
    fn mixtures_normalize(w in 0.05..0.95f64, m1 in -2.0..2.0f64, s1 in 0.3..2.0f64, m2 in -2.0..2.0f64, s2 in 0.3..2.0f64) {
        let mix = superpose(
            scale(LogWeight::new(w.ln()), catalog::normal(m1, s1).unwrap()).unwrap(),
            scale(LogWeight::new((1.0 - w).ln()), catalog::normal(m2, s2).unwrap()).unwrap(),
        ).unwrap();
        let mass = verify::mass(&mix, &Region::Interval(-20.0, 20.0), 1e-9).unwrap();
        prop_assert!((mass - 1.0).abs() <= 1e-6, "{}", mass);
    }

    #[test]
    fn decomposition_is_exact(m in -5.0..5.0f64, s in 0.1..5.0f64, x in -10.0..10.0f64) {
        let n = catalog::normal(m, s).unwrap();
        let p = Point::Real(x);
        let full = logdensity3(&n, &Measure::lebesgue(), &p).unwrap().to_f64();
        let data = logdensity2(&n, &p).unwrap().to_f64();
        let constant = -s.ln() - HALF_LN_2PI;
        prop_assert!((full - (data + constant)).abs() <= 1e-15 * full.abs().max(1.0), "{} vs {}", full, data + constant);
    }

    #[test]
    fn for_product_unfolds(coeff in -2.0..2.0f64, xs in prop::collection::vec(-3.0..3.0f64, 3)) {
        let k = make_kernel("Normal", vec![("μ", ParamMap::Affine(coeff, 0.0))]).unwrap();
        let idx: Vec<Point> = (1..=3).map(Point::Int).collect();
        let fp = for_product(idx.clone(), k.clone()).unwrap();
        let explicit = measurekit::combinators::product_all(idx.iter().map(|i| k.apply(i).unwrap()).collect()).unwrap();
        let leb3 = power(Measure::lebesgue(), &[3]).unwrap();
        let p = Point::reals(&xs);
        let a = logdensity3(&fp, &leb3, &p).unwrap().to_f64();
        let b = logdensity3(&explicit, &leb3, &p).unwrap().to_f64();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn lebesgue_mass_is_length(a in -50.0..50.0f64, len in 0.001..100.0f64) {
        let m = verify::mass(&Measure::lebesgue(), &Region::Interval(a, a + len), 1e-10).unwrap();
        prop_assert!((m - len).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn documents_round_trip(mu in scalar_measure(), nu in continuous_measure(), k in 1usize..4) {
        for m in [mu.clone(), product(mu.clone(), nu.clone()), power(nu, &[k]).unwrap()] {
            let text = doc::to_string(&m).unwrap();
            let back = doc::parse_str(&text).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(doc::to_string(&back).unwrap(), text);
        }
    }
}

#[test]
fn support_discipline() {
    let neg = |m: Measure, x: Point| assert_eq!(logdensity2(&m, &x).unwrap().class(), WeightClass::NegInf, "{m} at {x}");
    neg(catalog::poisson(3.0).unwrap(), Point::Int(-1));
    neg(catalog::poisson(3.0).unwrap(), Point::Real(1.5));
    neg(catalog::negbinomial_rp(10.0, 0.75).unwrap(), Point::Int(-1));
    neg(catalog::bernoulli(0.3).unwrap(), Point::Int(2));
    neg(catalog::uniform01(), Point::Real(2.0));
    neg(catalog::exponential(1.0).unwrap(), Point::Real(-0.5));
}

// Adaptive bisection cannot make the error monotone in `tol`: refining part of
// a uniform grid gives up the grid's cancellation. What holds is that every
// rung of a halving ladder lands far inside its tolerance.
#[test]
fn quadrature_error_tracks_tolerance() {
    let n = catalog::normal(0.0, 1.0).unwrap();
    // Mass of the standard normal on [-8, 8], from erfc(8 / sqrt 2).
    let exact = 1.0 - 1.2441921148543639e-15;
    let mut tol = 1e-3;
    while tol > 1e-12 {
        let err = (verify::mass(&n, &Region::Interval(-8.0, 8.0), tol).unwrap() - exact).abs();
        assert!(err <= 1e-2 * tol, "tol {tol:e}: error {err:e}");
        tol /= 2.0;
    }
}

#[test]
fn additivity_examples() {
    let n = catalog::normal(0.0, 1.0).unwrap();
    let v = verify::additivity_check(&n, &Region::Interval(-1.0, 1.0), &Region::Interval(0.0, 2.0), 1e-9).unwrap();
    assert!(v <= 1e-6, "{v}");
    let v = verify::additivity_check(&n, &Region::Interval(-2.0, -1.0), &Region::Interval(1.0, 2.0), 1e-9).unwrap();
    assert!(v <= 1e-6, "{v}");
    let v = verify::additivity_check(&n, &Region::Interval(-1.0, 1.0), &Region::Interval(-1.0, 1.0), 1e-9).unwrap();
    assert!(v <= 1e-12, "{v}");
}
