//! The acceptance suite: one self-reporting check per criterion.

use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::DMatrix;
use vmor::hpe::{
    fejer_slack, linear_rate_factor, loglog_slope, pointwise_bound, run, AffineResolvent, HpeConfig, IterTrace, RunOptions,
    StopRule, Termination, XiSchedule,
};
use vmor::linops::{gaussian_vec, BlockPoint, ScalarMetric};
use vmor::padmm::{run_padmm, BetaSchedule, PadmmConfig, ThetaPolicy};
use vmor::prox::{gen_qp, proj_nonneg, proj_spectral_ball, prox_l1, prox_nuclear, random_lrr};
use vmor::rng::seeded;
use vmor::splitters::{condat_vu_qp, qp_splitter, run_native, run_splitter, run_splitter_with, QpSplitterParams};

use crate::config::Algorithm;
use crate::run::kkt_subregularity_modulus;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!("{} {:<22} {:>8.2}s  {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.seconds, self.detail)
    }
}

pub const CRITERIA: [&str; 10] = [
    "criterion-invariance",
    "fejer-contraction",
    "pointwise-bounds",
    "ergodic-rate",
    "oracle-equivalence",
    "native-vs-kernel",
    "local-linear-rate",
    "theta-acceleration",
    "lrr-desk-scale",
    "prox-correctness",
];

pub fn run_criterion(name: &str) -> Option<Outcome> {
    let start = Instant::now();
    let (pass, detail, shared_secs) = match name {
        "criterion-invariance" => criterion_invariance(),
        "fejer-contraction" => fejer_contraction(),
        "pointwise-bounds" => pointwise_bounds(),
        "ergodic-rate" => ergodic_rate(),
        "oracle-equivalence" => oracle_equivalence(),
        "native-vs-kernel" => native_vs_kernel(),
        "local-linear-rate" => local_linear_rate(),
        "theta-acceleration" => theta_acceleration(),
        "lrr-desk-scale" => lrr_desk_scale(),
        "prox-correctness" => prox_correctness(),
        _ => return None,
    };
    let seconds = shared_secs.unwrap_or_else(|| start.elapsed().as_secs_f64());
    let name = CRITERIA.iter().find(|c| **c == name).copied()?;
    Some(Outcome { name, pass, detail, seconds })
}

/// Every criterion, or those whose name contains `filter`.
pub fn run_all(filter: Option<&str>) -> Vec<Outcome> {
    CRITERIA.iter().filter(|c| filter.is_none_or(|f| c.contains(f))).filter_map(|c| run_criterion(c)).collect()
}

type Check = (bool, String, Option<f64>);

fn timed(pass: bool, detail: String, limit: f64, start: Instant) -> Check {
    let secs = start.elapsed().as_secs_f64();
    let ok = pass && secs < limit;
    let detail = if secs < limit { detail } else { format!("{detail}; took {secs:.1}s, limit {limit}s") };
    (ok, detail, Some(secs))
}

struct SweepCell {
    algorithm: Algorithm,
    seed: u64,
    min_slack: f64,
    min_fejer: f64,
    error: Option<String>,
}

struct Sweep {
    cells: Vec<SweepCell>,
    seconds: f64,
}

pub const SWEEP_SEEDS: u64 = 20;
pub const SWEEP_ITERS: usize = 100;

fn sweep_cell(algorithm: Algorithm, seed: u64) -> SweepCell {
    let mut cell = SweepCell { algorithm, seed, min_slack: f64::INFINITY, min_fejer: f64::INFINITY, error: None };
    let inst = match gen_qp(seed, 3, 4, 5) {
        Ok(i) => i,
        Err(e) => {
            cell.error = Some(e.to_string());
            return cell;
        }
    };
    let run_trace: Result<(IterTrace, f64), String> = match algorithm {
        Algorithm::PadmmEbb => {
            let cfg = PadmmConfig { max_iters: SWEEP_ITERS, tol: 0.0, stop: StopRule::Never, seed, ..Default::default() };
            run_padmm(&inst.problem(), &cfg, None, Some(inst.z_star())).map(|r| (r.trace, cfg.sigma)).map_err(|e| e.to_string())
        }
        alg => qp_splitter(alg.as_str(), &inst, 0.5, &QpSplitterParams::default())
            .and_then(|(s, star)| {
                let z0 = BlockPoint::zeros(star.layout().clone());
                run_splitter(s.as_ref(), z0, SWEEP_ITERS, 0.0, StopRule::Never, Some(star)).map(|r| (r.trace, s.sigma()))
            })
            .map_err(|e| e.to_string()),
    };
    match run_trace {
        Ok((trace, sigma)) => {
            if trace.len() != SWEEP_ITERS {
                cell.error = Some(format!("{} iterations instead of {SWEEP_ITERS}", trace.len()));
            }
            for r in &trace.records {
                cell.min_slack = cell.min_slack.min(r.criterion_slack);
                cell.min_fejer = cell.min_fejer.min(fejer_slack(r, sigma).unwrap_or(f64::NEG_INFINITY));
            }
        }
        Err(e) => cell.error = Some(e),
    }
    cell
}

/// All methods on the same seeded QPs, cells run in parallel, shared by two criteria.
fn sweep() -> &'static Sweep {
    static SWEEP: OnceLock<Sweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let start = Instant::now();
        let n = Algorithm::ALL.len() * SWEEP_SEEDS as usize;
        let cells = vmor::par::map_range(n, |i| sweep_cell(Algorithm::ALL[i % 5], (i / 5) as u64));
        Sweep { cells, seconds: start.elapsed().as_secs_f64() }
    })
}

fn worst_by_algorithm(f: impl Fn(&SweepCell) -> f64) -> String {
    Algorithm::ALL
        .iter()
        .map(|a| {
            let w = sweep().cells.iter().filter(|c| c.algorithm == *a).map(&f).fold(f64::INFINITY, f64::min);
            format!("{a} {w:.1e}")
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn sweep_errors() -> Option<String> {
    sweep().cells.iter().find_map(|c| c.error.as_ref().map(|e| format!("{} seed {}: {e}", c.algorithm, c.seed)))
}

fn criterion_invariance() -> Check {
    let s = sweep();
    let ok = sweep_errors().is_none() && s.cells.iter().all(|c| c.min_slack >= -1e-9);
    let detail = match sweep_errors() {
        Some(e) => e,
        None => format!("{} runs x {SWEEP_ITERS} iters, worst relative slack: {}", s.cells.len(), worst_by_algorithm(|c| c.min_slack)),
    };
    let ok = ok && s.seconds < 60.0;
    (ok, format!("{detail}; sweep {:.1}s", s.seconds), Some(s.seconds))
}

fn fejer_contraction() -> Check {
    let s = sweep();
    let ok = sweep_errors().is_none() && s.cells.iter().all(|c| c.min_fejer >= -1e-9);
    (ok, format!("worst relative Fejer slack: {}", worst_by_algorithm(|c| c.min_fejer)), Some(0.0))
}

fn pointwise_bounds() -> Check {
    let start = Instant::now();
    let n = 20;
    let mut op = AffineResolvent::random(1, n, 0.05);
    op.theta = 0.3;
    op.wobble = true;
    let cfg = HpeConfig {
        sigma: 0.5,
        theta_min: 0.3,
        c_min: 1.0,
        xi: XiSchedule::InverseSquare { xi0: 0.2 },
        omega_lower: 0.5,
        omega_upper: 2.0,
        max_iters: 10_000,
        tol: 0.0,
    };
    let Some(star) = op.zero() else { return (false, "singular operator".into(), None) };
    let x0 = BlockPoint::from_vec(gaussian_vec(&mut seeded(1, 7), n));
    let opts = RunOptions { stop: StopRule::Never, reference: Some(star), ..Default::default() };
    let res = match run(&mut op, x0, Box::new(ScalarMetric::identity(n)), &cfg, &opts) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string(), None),
    };
    let d0 = res.trace.records[0].dist_to_ref.unwrap_or(f64::NAN);
    let mut worst_v: f64 = 0.0;
    let mut worst_e: f64 = 0.0;
    let mut ok = res.iterations() == cfg.max_iters;
    for (i, (mv, me)) in res.trace.running_minima().into_iter().enumerate() {
        let (bv, be) = pointwise_bound(i + 1, &cfg, d0);
        ok &= mv <= bv * (1.0 + 1e-12) && me <= be * (1.0 + 1e-12);
        worst_v = worst_v.max(mv / bv);
        worst_e = worst_e.max(if be > 0.0 { me / be } else { 0.0 });
    }
    timed(ok, format!("{} iters, max min||v||/bound {worst_v:.3}, max min eps/bound {worst_e:.3}", res.iterations()), 10.0, start)
}

fn ergodic_slopes(trace: &IterTrace) -> (Option<f64>, Option<f64>, f64) {
    let window = |f: &dyn Fn(&vmor::hpe::ErgodicColumns) -> f64| {
        let pts: Vec<(f64, f64)> = trace
            .records
            .iter()
            .filter(|r| (100..=1000).contains(&r.iter))
            .filter_map(|r| r.ergodic.as_ref().map(|e| (r.iter as f64, f(e))))
            .collect();
        loglog_slope(&pts)
    };
    let min_eps = trace
        .records
        .iter()
        .filter_map(|r| r.ergodic.map(|e| e.uniform_eps.min(e.linear_eps)))
        .fold(f64::INFINITY, f64::min);
    (window(&|e| e.uniform_v), window(&|e| e.linear_v), min_eps)
}

fn ergodic_rate() -> Check {
    let mut worst_u = f64::NEG_INFINITY;
    let mut worst_l = f64::NEG_INFINITY;
    let mut min_eps = f64::INFINITY;
    let mut ok = true;
    let mut runs = 0;
    for seed in 0..5 {
        let inst = match gen_qp(seed, 2, 5, 3) {
            Ok(i) => i,
            Err(e) => return (false, e.to_string(), None),
        };
        let cfg = PadmmConfig { max_iters: 1000, tol: 0.0, stop: StopRule::Never, seed, ..Default::default() };
        let mut traces = vec![];
        match run_padmm(&inst.problem(), &cfg, None, None) {
            Ok(r) => traces.push(r.trace),
            Err(e) => return (false, format!("padmm-ebb seed {seed}: {e}"), None),
        }
        let (s, star) = match condat_vu_qp(&inst, 0.5) {
            Ok(x) => x,
            Err(e) => return (false, e.to_string(), None),
        };
        let opts = RunOptions { stop: StopRule::Never, reference: None, ergodic: true, metric_probes: 1, seed };
        match run_splitter_with(s.as_ref(), BlockPoint::zeros(star.layout().clone()), 1000, 0.0, &opts) {
            Ok(r) => traces.push(r.trace),
            Err(e) => return (false, format!("condat-vu seed {seed}: {e}"), None),
        }
        for t in &traces {
            runs += 1;
            let (u, l, e) = ergodic_slopes(t);
            ok &= t.len() == 1000;
            match (u, l) {
                (Some(u), Some(l)) => {
                    ok &= u <= -0.8 && l <= -0.8;
                    worst_u = worst_u.max(u);
                    worst_l = worst_l.max(l);
                }
                _ => ok = false,
            }
            ok &= e >= -1e-12;
            min_eps = min_eps.min(e);
        }
    }
    (ok, format!("{runs} runs, worst slope uniform {worst_u:.3}, linear {worst_l:.3}, min eps_bar {min_eps:.2e}"), None)
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut ok = true;
    let (mut worst_r, mut worst_d, mut most) = (0.0f64, 0.0f64, 0usize);
    for seed in 0..10 {
        let inst = match gen_qp(seed, 2, 5, 3) {
            Ok(i) => i,
            Err(e) => return (false, e.to_string(), None),
        };
        let cfg = PadmmConfig { max_iters: 5000, tol: 1e-8, seed, ..Default::default() };
        match run_padmm(&inst.problem(), &cfg, None, None) {
            Ok(r) => {
                let d = r.z.sub(&inst.z_star()).norm();
                ok &= r.termination == Termination::Converged && r.pkkt <= 1e-8 && d <= 1e-6;
                worst_r = worst_r.max(r.pkkt);
                worst_d = worst_d.max(d);
                most = most.max(r.iterations());
            }
            Err(e) => return (false, format!("seed {seed}: {e}"), None),
        }
    }
    timed(ok, format!("10 seeds, max ||R(z)|| {worst_r:.2e}, max ||z - z*|| {worst_d:.2e}, max iters {most}"), 30.0, start)
}

fn native_vs_kernel() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..5 {
        let inst = match gen_qp(seed, 2, 5, 3) {
            Ok(i) => i,
            Err(e) => return (false, e.to_string(), None),
        };
        let (s, star) = match condat_vu_qp(&inst, 0.5) {
            Ok(x) => x,
            Err(e) => return (false, e.to_string(), None),
        };
        let z0 = BlockPoint::new(star.layout().clone(), gaussian_vec(&mut seeded(seed, 3), star.len())).expect("layout");
        let native = match run_native(s.as_ref(), z0.clone(), 200) {
            Ok(n) => n,
            Err(e) => return (false, e.to_string(), None),
        };
        let kernel = match run_splitter(s.as_ref(), z0, 200, 0.0, StopRule::Never, None) {
            Ok(k) => k,
            Err(e) => return (false, e.to_string(), None),
        };
        let end = native.last().expect("iterates");
        worst = worst.max(kernel.x.sub(end).norm() / (1.0 + end.norm()));
        for r in &kernel.trace.records {
            worst = worst.max(r.native_gap.unwrap_or(f64::INFINITY));
        }
    }
    (worst <= 1e-12, format!("5 seeds x 200 iters, max gap {worst:.2e}"), None)
}

fn local_linear_rate() -> Check {
    let mut ok = true;
    let mut details = vec![];
    for seed in 0..5 {
        let inst = match gen_qp(seed, 2, 5, 3) {
            Ok(i) => i,
            Err(e) => return (false, e.to_string(), None),
        };
        let cfg = PadmmConfig { max_iters: 600, tol: 0.0, stop: StopRule::Never, seed, ..Default::default() };
        let res = match run_padmm(&inst.problem(), &cfg, None, Some(inst.z_star())) {
            Ok(r) => r,
            Err(e) => return (false, format!("seed {seed}: {e}"), None),
        };
        let recs = &res.trace.records;
        let d0 = recs[0].dist_to_ref.unwrap_or(0.0);
        // stay above the rounding floor, where ratios are noise
        let live: Vec<f64> = recs
            .iter()
            .filter(|r| r.dist_to_ref.unwrap_or(0.0) > 1e-9 * d0 && r.dist_next.unwrap_or(0.0) > 0.0)
            .map(|r| r.dist_next.unwrap_or(0.0) / r.dist_to_ref.unwrap_or(1.0))
            .collect();
        if live.len() < 50 {
            return (false, format!("seed {seed}: only {} iterations above the rounding floor", live.len()), None);
        }
        let tail = &live[live.len() - 50..];
        let worst = tail.iter().copied().fold(0.0, f64::max);
        let lo = recs.iter().map(|r| r.metric_min).fold(f64::INFINITY, f64::min);
        let hi = recs.iter().map(|r| r.metric_max).fold(0.0, f64::max);
        let kappa = kkt_subregularity_modulus(&inst);
        let rho = match linear_rate_factor(kappa, cfg.sigma, cfg.theta_min, 1.0, cfg.xi.product_bound(), hi, lo) {
            Ok(r) => r,
            Err(e) => return (false, e.to_string(), None),
        };
        let bound = 1.0 - rho / 2.0 + 0.05;
        ok &= worst <= bound;
        details.push(format!("{worst:.3}<={bound:.4} (kappa {kappa:.1}, rho {rho:.1e})"));
    }
    (ok, format!("tail max ratio vs bound per seed: {}", details.join(", ")), None)
}

fn iterations_to_tol(seed: u64, theta: ThetaPolicy) -> Result<usize, String> {
    let inst = gen_qp(seed, 2, 5, 3).map_err(|e| e.to_string())?;
    let cfg = PadmmConfig { max_iters: 5000, tol: 1e-8, theta, seed, ..Default::default() };
    let r = run_padmm(&inst.problem(), &cfg, None, None).map_err(|e| e.to_string())?;
    Ok(if r.termination == Termination::Converged { r.iterations() } else { usize::MAX })
}

fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] as f64 + v[n / 2] as f64) / 2.0
    }
}

fn theta_acceleration() -> Check {
    let mut adaptive = vec![];
    let mut zero = vec![];
    for seed in 0..10 {
        match (iterations_to_tol(seed, ThetaPolicy::Adaptive), iterations_to_tol(seed, ThetaPolicy::Fixed { theta: 0.0 })) {
            (Ok(a), Ok(z)) => {
                adaptive.push(a);
                zero.push(z);
            }
            (Err(e), _) | (_, Err(e)) => return (false, format!("seed {seed}: {e}"), None),
        }
    }
    let (ma, mz) = (median(adaptive.clone()), median(zero.clone()));
    (ma <= mz, format!("median iterations adaptive {ma} vs theta = 0 {mz} (adaptive {adaptive:?}, zero {zero:?})"), None)
}

pub const LRR_BETA: f64 = 1000.0;

fn lrr_desk_scale() -> Check {
    let start = Instant::now();
    let inst = match random_lrr(7, 40, 40, 1e3, 1e4, 1e4) {
        Ok(i) => i,
        Err(e) => return (false, e.to_string(), None),
    };
    let cfg = PadmmConfig { beta: BetaSchedule::Constant { beta: LRR_BETA }, max_iters: 3000, tol: 1e-3, ..Default::default() };
    match run_padmm(&inst.problem, &cfg, None, None) {
        Ok(r) => {
            let feas = inst.data_residual(inst.problem.primal(&r.z));
            let ok = r.pkkt <= 1e-3 && feas <= 1e-4;
            timed(ok, format!("beta {LRR_BETA}, {} iters, ||R(z)|| {:.2e}, feasibility {feas:.2e}", r.iterations(), r.pkkt), 120.0, start)
        }
        Err(e) => (false, e.to_string(), None),
    }
}

fn prox_correctness() -> Check {
    let tol = 1e-10;
    let mut rng = seeded(2024, 0);
    let mut worst = [0.0f64; 3];
    let mut failures = vec![];
    for _ in 0..100 {
        // l1: subgradient membership and Moreau with the l_inf ball
        let v: Vec<f64> = gaussian_vec(&mut rng, 12).iter().map(|x| 2.0 * x).collect();
        let t = 0.1 + gaussian_vec(&mut rng, 1)[0].abs();
        let lam = 0.1 + gaussian_vec(&mut rng, 1)[0].abs();
        let u = prox_l1(t, lam, &v);
        for (ui, vi) in u.iter().zip(&v) {
            let g = (vi - ui) / (t * lam);
            let e = if *ui != 0.0 { (g - ui.signum()).abs() } else { (g.abs() - 1.0).max(0.0) };
            let moreau = (vi - ui - t * (vi / t).clamp(-lam, lam)).abs();
            worst[0] = worst[0].max(e).max(moreau);
        }

        // nuclear: Moreau with the spectral ball and the singular-value shift
        let (rows, cols) = (8, 6);
        let m = gaussian_vec(&mut rng, rows * cols);
        let t = 0.2 + 2.0 * gaussian_vec(&mut rng, 1)[0].abs();
        match (prox_nuclear(t, rows, cols, &m), proj_spectral_ball(1.0, rows, cols, &m.iter().map(|x| x / t).collect::<Vec<_>>())) {
            (Ok(p), Ok(q)) => {
                let scale = 1.0 + m.iter().map(|x| x * x).sum::<f64>().sqrt();
                let moreau = m.iter().zip(&p).zip(&q).map(|((a, b), c)| (a - b - t * c).abs()).fold(0.0, f64::max);
                let mut sv_in: Vec<f64> = DMatrix::from_column_slice(rows, cols, &m).singular_values().iter().map(|s| (s - t).max(0.0)).collect();
                let mut sv_out: Vec<f64> = DMatrix::from_column_slice(rows, cols, &p).singular_values().iter().copied().collect();
                sv_in.sort_by(f64::total_cmp);
                sv_out.sort_by(f64::total_cmp);
                let shift = sv_in.iter().zip(&sv_out).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                worst[1] = worst[1].max(moreau / scale).max(shift / scale);
            }
            (Err(e), _) | (_, Err(e)) => failures.push(e.to_string()),
        }

        // nonneg: feasibility, complementarity, idempotence
        let v = gaussian_vec(&mut rng, 12);
        let u = proj_nonneg(&v);
        for (ui, vi) in u.iter().zip(&v) {
            let viol = (-ui).max(0.0).max((ui * (ui - vi)).abs()).max((vi - ui).max(0.0));
            worst[2] = worst[2].max(viol);
        }
        if proj_nonneg(&u) != u {
            failures.push("projection is not idempotent".into());
        }
    }
    let ok = failures.is_empty() && worst.iter().all(|w| *w <= tol);
    let mut detail = format!("100 probes each, worst l1 {:.1e}, nuclear {:.1e}, nonneg {:.1e}", worst[0], worst[1], worst[2]);
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; {f}"));
    }
    (ok, detail, None)
}
