use mixfrac_core::dimension::{estimate_dimension, CutoffConfig, DimensionKind};
use mixfrac_core::gauge::{make_scale_ladder, GaugeFn, ValidationConfig};
use mixfrac_core::measure::{multinomial_cascade, read_measure, write_measure};
use mixfrac_core::oracle::MultinomialOracle;
use mixfrac_core::partition::BallScheme;
use mixfrac_core::spectrum::{legendre_transform, Sweep};

#[test]
fn measure_file_round_trip_preserves_estimates() {
    let w = vec![vec![0.3, 0.7], vec![0.6, 0.4]];
    let v = multinomial_cascade(2, 10, &w).unwrap();
    let mut buf = Vec::new();
    write_measure(&v, &mut buf).unwrap();
    let back = read_measure(buf.as_slice()).unwrap();
    assert_eq!(back.k(), 2);
    for (a, b) in v.components().iter().zip(back.components()) {
        assert!(a.leaves().iter().zip(b.leaves()).all(|(x, y)| (x - y).abs() <= 1e-16 * x.max(1e-300)));
    }
    let ladder = make_scale_ladder(&GaugeFn::logarithmic(), 2, 10, &ValidationConfig::default()).unwrap();
    let cfg = CutoffConfig::default();
    let oracle = MultinomialOracle::new(2, w).unwrap();
    for q in [[1.0, 1.0], [-1.0, 0.5], [2.0, -2.0]] {
        for kind in [DimensionKind::Lambda, DimensionKind::Covering] {
            let a = estimate_dimension(&v, &q, kind, &ladder, BallScheme::Grid, &cfg).unwrap().value;
            let b = estimate_dimension(&back, &q, kind, &ladder, BallScheme::Grid, &cfg).unwrap().value;
            assert!((a - b).abs() < 1e-9);
            assert!((a - oracle.lambda(&q).unwrap()).abs() < 1e-6, "{kind:?} at {q:?}");
        }
    }
}

#[test]
fn sweep_to_spectrum_matches_the_oracle() {
    let w = vec![vec![0.25, 0.75]];
    let v = multinomial_cascade(2, 12, &w).unwrap();
    let ladder = make_scale_ladder(&GaugeFn::logarithmic(), 2, 12, &ValidationConfig::default()).unwrap();
    let oracle = MultinomialOracle::new(2, w).unwrap();
    let samples: Vec<(Vec<f64>, f64)> = (-8..=8)
        .map(|i| {
            let q = vec![i as f64 * 0.5];
            let e = estimate_dimension(&v, &q, DimensionKind::Lambda, &ladder, BallScheme::Grid, &CutoffConfig::default())
                .unwrap();
            (q, e.value)
        })
        .collect();
    let curve = legendre_transform(&Sweep::new(DimensionKind::Lambda, &samples).unwrap()).unwrap();
    assert_eq!(curve.points.len(), 15);
    for p in &curve.points {
        assert!((p.f - oracle.legendre(p.alpha[0]).unwrap()).abs() < 0.05);
    }
    // concave along α
    for t in curve.points.windows(3) {
        let (h1, h2) = (t[1].alpha[0] - t[0].alpha[0], t[2].alpha[0] - t[1].alpha[0]);
        let d = (t[2].f - t[1].f) / h2 - (t[1].f - t[0].f) / h1;
        assert!(d <= 1e-9);
    }
}
