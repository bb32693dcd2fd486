mod common;

use common::uniform_points;
use proptest::prelude::*;
use rangent::entropy::h_diff;
use rangent::geometry::chamfer;
use rangent::restructure::*;
use rangent::rng::rng_for;
use rangent::PointSet;

fn cfg(estimator: Estimator, steps: usize, seed: u64) -> RestructureConfig {
    RestructureConfig {
        estimator,
        steps,
        seed,
        lr: 1e-2,
        ..RestructureConfig::default()
    }
}

fn check_trace(s: &PointSet, r: &RestructureResult, c: &RestructureConfig) {
    let first = r.trace[0];
    assert_eq!(first.chamfer, 0.0);
    assert_eq!(first.stability, 0.0);
    assert!((first.total - c.lambda * first.entropy).abs() <= 1e-12);
    for t in &r.trace {
        let sum = t.chamfer + c.lambda * t.entropy + c.mu * t.stability;
        assert!((t.total - sum).abs() <= 1e-9, "step {}", t.step);
    }
    for w in r.trace.windows(2) {
        assert!(w[1].total <= w[0].total, "step {}: {} > {}", w[1].step, w[1].total, w[0].total);
    }
    let rebuilt = s.displaced(&r.displacement).unwrap();
    assert_eq!(rebuilt.as_flat(), r.output.as_flat());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn descent_is_monotone_and_decomposes(seed in 0u64..1000, n in 8usize..96, half in any::<bool>()) {
        let s = uniform_points(n, 2, &mut rng_for(seed, 4));
        let c = cfg(if half { Estimator::Halfspace } else { Estimator::Ball }, 60, seed);
        let r = restructure(&s, &c).unwrap();
        check_trace(&s, &r, &c);
    }

    #[test]
    fn no_regularizers_means_identity(seed in 0u64..1000, n in 2usize..64) {
        let s = uniform_points(n, 2, &mut rng_for(seed, 5));
        let c = RestructureConfig { lambda: 0.0, mu: 0.0, ..cfg(Estimator::Ball, 30, seed) };
        let r = restructure(&s, &c).unwrap();
        prop_assert_eq!(r.output.as_flat(), s.as_flat());
        prop_assert!(r.displacement.iter().all(|&d| d == 0.0));
    }
}

#[test]
fn loss_terms_match_module_recomputation() {
    let s = uniform_points(64, 2, &mut rng_for(1, 6));
    let c = cfg(Estimator::Ball, 40, 1);
    let r = restructure(&s, &c).unwrap();
    let t = loss_eval(&s, &r.output, &r.estimator, &c).unwrap();
    assert_eq!(t.chamfer, chamfer(&s, &r.output).unwrap());
    let EstimatorState::Ball(a) = &r.estimator else { panic!("ball estimator") };
    assert_eq!(t.entropy, h_diff(&r.output, a, false).unwrap().value);
    let stab: f64 = r.displacement.iter().map(|d| d * d).sum::<f64>() / s.len() as f64;
    assert!((t.stability - stab).abs() <= 1e-15);
    let zero = RestructureConfig { lambda: 0.0, mu: 0.0, ..c };
    let t0 = loss_eval(&s, &r.output, &r.estimator, &zero).unwrap();
    assert_eq!(t0.total, t0.chamfer);
}

#[test]
fn entropy_drops_on_uniform_inputs() {
    for seed in 0..3 {
        let s = uniform_points(256, 2, &mut rng_for(seed, 7));
        let c = RestructureConfig { steps: 100, seed, ..RestructureConfig::default() };
        let r = restructure(&s, &c).unwrap();
        let before = r.trace[0].entropy;
        let after = r.trace.last().unwrap().entropy;
        assert!(after < 0.99 * before, "seed {seed}: {after} vs {before}");
    }
}

#[test]
fn heavy_stability_pins_the_points() {
    let s = uniform_points(128, 2, &mut rng_for(2, 8));
    let c = RestructureConfig { mu: 1e6, lambda: 0.1, ..cfg(Estimator::Ball, 100, 2) };
    let r = restructure(&s, &c).unwrap();
    let diam = s.bbox_diagonal();
    let max = r.displacement.chunks(2).map(|d| (d[0] * d[0] + d[1] * d[1]).sqrt()).fold(0.0, f64::max);
    assert!(max < 1e-3 * diam, "{max}");
}

#[test]
fn trace_csv_has_the_documented_header() {
    let s = uniform_points(16, 2, &mut rng_for(3, 9));
    let r = restructure(&s, &cfg(Estimator::Ball, 5, 3)).unwrap();
    let mut buf = Vec::new();
    r.write_trace_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "step,chamfer,entropy,stability,total,lr");
    assert_eq!(text.lines().count(), r.trace.len() + 1);
}
