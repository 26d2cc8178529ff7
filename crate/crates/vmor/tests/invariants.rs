use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;
use vmor::hpe::{
    run, AffineResolvent, ErgodicAccumulator, ErgodicItem, HpeConfig, RunOptions, StopRule, XiSchedule,
};
use vmor::linops::{
    spectral_upper_bound_with, weighted_norm_sq, BlockDiagonalMetric, BlockPoint, DenseMetric, Layout, Metric, ScalarMetric,
};
use vmor::padmm::{run_padmm, PadmmConfig};
use vmor::prox::{gen_qp, BoxIndicator, Conjugate, L1Norm, LinfBall, NonNeg, NuclearNorm, ProxFn, SpectralBall};
use vmor::splitters::{qp_splitter, run_splitter, QpSplitterParams, QP_SPLITTERS};

fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, n)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn block_metric_respects_its_bounds(scalars in prop::collection::vec(1e-3..1e3f64, 1..5), v in vec_strategy(40)) {
        let sizes: Vec<usize> = (0..scalars.len()).map(|i| 1 + i % 3).collect();
        let n: usize = sizes.iter().sum();
        let m = BlockDiagonalMetric::from_inverse_scalars(sizes.clone(), scalars).unwrap();
        let p = BlockPoint::new(Arc::new(Layout::new(sizes)), v[..n].to_vec()).unwrap();
        let q = weighted_norm_sq(&m, &p).unwrap();
        let nn = p.norm_sq();
        prop_assert!(q >= m.lower() * nn * (1.0 - 1e-12) && q <= m.upper() * nn * (1.0 + 1e-12));
        let back = m.solve(&m.apply(p.as_slice()));
        for (a, b) in back.iter().zip(p.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn dense_metric_respects_its_bounds(entries in vec_strategy(16), v in vec_strategy(4)) {
        let g = DMatrix::from_column_slice(4, 4, &entries);
        let m = DenseMetric::new(&g * g.transpose() + DMatrix::identity(4, 4)).unwrap();
        let q = m.quad(&v);
        let nn = dot(&v, &v);
        prop_assert!(q >= m.lower() * nn * (1.0 - 1e-10) - 1e-12);
        prop_assert!(q <= m.upper() * nn * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn spectral_bound_is_an_upper_bound(entries in vec_strategy(30), seed in 0u64..1000) {
        let a = DMatrix::from_column_slice(5, 6, &entries);
        let exact = a.singular_values().max();
        let lo = spectral_upper_bound_with(&a, 100, seed, 1.0);
        let hi = spectral_upper_bound_with(&a, 100, seed, 1.1);
        prop_assert!(hi >= exact * (1.0 - 1e-9));
        prop_assert!(hi >= lo);
    }

    #[test]
    fn proxes_are_firmly_nonexpansive(u in vec_strategy(9), w in vec_strategy(9), t in 0.01..5.0f64) {
        let fns: Vec<Box<dyn ProxFn>> = vec![
            Box::new(L1Norm { lambda: 0.7 }),
            Box::new(NonNeg),
            Box::new(BoxIndicator { lo: -1.0, hi: 2.0 }),
            Box::new(NuclearNorm::new(3, 3)),
            Box::new(SpectralBall { rows: 3, cols: 3, radius: 1.5 }),
        ];
        for g in &fns {
            let pu = g.prox(t, &u).unwrap();
            let pw = g.prox(t, &w).unwrap();
            let dp: Vec<f64> = pu.iter().zip(&pw).map(|(a, b)| a - b).collect();
            let dx: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a - b).collect();
            prop_assert!(dot(&dp, &dp) <= dot(&dp, &dx) + 1e-10 * (1.0 + dot(&dx, &dx)));
        }
    }

    #[test]
    fn moreau_identity_pairs(v in vec_strategy(12), t in 0.05..4.0f64) {
        let pairs: Vec<(Arc<dyn ProxFn>, Box<dyn ProxFn>)> = vec![
            (Arc::new(L1Norm { lambda: 1.3 }), Box::new(LinfBall { radius: 1.3 })),
            (Arc::new(NuclearNorm { rows: 4, cols: 3, scale: 0.8 }), Box::new(SpectralBall { rows: 4, cols: 3, radius: 0.8 })),
        ];
        for (g, gstar) in pairs {
            let via_identity = Conjugate(g.clone()).prox(t, &v).unwrap();
            let direct = gstar.prox(t, &v).unwrap();
            for (a, b) in via_identity.iter().zip(&direct) {
                prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn growth_product_is_below_exponential_sum(xi0 in 0.0..2.0f64, ratio in 0.0..0.99f64, k in 0usize..400) {
        for s in [XiSchedule::InverseSquare { xi0 }, XiSchedule::Geometric { xi0, ratio }, XiSchedule::Zero] {
            prop_assert!(s.partial_product(k) <= s.partial_sum(k).exp() * (1.0 + 1e-12));
            prop_assert!(s.partial_product(k) <= s.product_bound() * (1.0 + 1e-12));
        }
    }
}

fn affine_cfg(theta: f64) -> HpeConfig {
    HpeConfig {
        sigma: 0.6,
        theta_min: theta,
        c_min: 0.7,
        xi: XiSchedule::InverseSquare { xi0: 0.3 },
        omega_lower: 0.25,
        omega_upper: 4.0,
        max_iters: 150,
        tol: 0.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn affine_runs_satisfy_the_kernel_inequalities(seed in 0u64..10_000, n in 2usize..12, theta in -0.5..0.6f64, mu in 0.0..0.5f64) {
        let mut op = AffineResolvent::random(seed, n, mu + 1e-3);
        op.theta = theta;
        op.c = 0.7;
        op.wobble = true;
        let cfg = affine_cfg(theta);
        let star = op.zero().unwrap();
        let x0 = BlockPoint::from_vec(vec![1.0; n]);
        let opts = RunOptions { stop: StopRule::Never, reference: Some(star), ergodic: true, metric_probes: 2, seed };
        let res = run(&mut op, x0, Box::new(ScalarMetric::identity(n)), &cfg, &opts).unwrap();
        for r in &res.trace.records {
            prop_assert!(r.criterion_slack >= -1e-9);
            let fejer = vmor::hpe::fejer_slack(r, cfg.sigma).unwrap();
            prop_assert!(fejer >= -1e-9, "iter {}: {fejer:e}", r.iter);
            let step_sq = r.step_norm * r.step_norm;
            let t1 = 1.0 + r.theta;
            prop_assert!(r.corr_sq <= 4.0 / (t1 * t1) * step_sq * (1.0 + 1e-9) + 1e-15);
            prop_assert!(r.c_eps <= step_sq / t1 * (1.0 + 1e-9) + 1e-15);
            let e = r.ergodic.unwrap();
            prop_assert!(e.uniform_eps >= -1e-12 && e.linear_eps >= -1e-12);
        }
    }

    #[test]
    fn splitter_certificates_hold_across_seeds(seed in 0u64..10_000, sigma in 0.1..0.95f64) {
        let inst = gen_qp(seed, 2, 3, 2).unwrap();
        for name in QP_SPLITTERS {
            let (s, star) = qp_splitter(name, &inst, sigma, &QpSplitterParams::default()).unwrap();
            let z0 = BlockPoint::zeros(star.layout().clone());
            let res = run_splitter(s.as_ref(), z0, 40, 0.0, StopRule::Never, Some(star)).unwrap();
            for r in &res.trace.records {
                prop_assert!(r.criterion_slack >= -1e-9, "{name}");
                prop_assert!(vmor::hpe::fejer_slack(r, s.sigma()).unwrap() >= -1e-9, "{name}");
            }
        }
    }
}

#[test]
fn ergodic_accumulator_matches_batch_weights() {
    use vmor::hpe::{ergodic_aggregate, StepOracle, Weighting};
    let mut op = AffineResolvent::random(5, 4, 0.1);
    op.theta = 0.2;
    let m = ScalarMetric::identity(4);
    let cfg = affine_cfg(0.2);
    let mut x = BlockPoint::from_vec(vec![1.0, -1.0, 2.0, 0.5]);
    let mut certs = Vec::new();
    for k in 0..30 {
        let c = op.step(k, &x, &m, &cfg).unwrap().cert;
        x = vmor::hpe::extragradient_step(&x, &c, &m);
        certs.push(c);
    }
    for w in [Weighting::Uniform, Weighting::Linear] {
        let mut acc = ErgodicAccumulator::new();
        let items: Vec<ErgodicItem> = certs.iter().map(|c| ErgodicItem { y: &c.y, v: &c.v, eps: c.eps, theta: c.theta, c: c.c }).collect();
        let alpha: Vec<f64> = (1..=items.len()).map(|i| w.alpha(i)).collect();
        for (it, a) in items.iter().zip(&alpha) {
            acc.push(*it, *a);
        }
        let batch = ergodic_aggregate(&items, &alpha).unwrap();
        let (v, eps) = acc.summary().unwrap();
        assert!((v - batch.v_bar.norm()).abs() <= 1e-12 * (1.0 + v));
        assert!((eps - batch.eps_bar).abs() <= 1e-12 * (1.0 + eps.abs()));
        assert!(eps >= -1e-12);
    }
}

#[test]
fn identical_seeds_give_identical_traces() {
    let inst = gen_qp(8, 2, 4, 3).unwrap();
    let cfg = PadmmConfig { max_iters: 200, tol: 0.0, stop: StopRule::Never, seed: 3, ..Default::default() };
    let a = run_padmm(&inst.problem(), &cfg, None, None).unwrap();
    let b = run_padmm(&inst.problem(), &cfg, None, None).unwrap();
    assert_eq!(a.z.as_slice(), b.z.as_slice());
    let strip = |t: &vmor::hpe::IterTrace| {
        let mut t = t.clone();
        t.records.iter_mut().for_each(|r| r.time_s = 0.0);
        // NaN columns compare unequal to themselves; the text form does not
        t.to_csv()
    };
    assert_eq!(strip(&a.trace), strip(&b.trace));
}
