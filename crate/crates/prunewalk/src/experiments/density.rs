//! Monte Carlo density estimates built on the pruning kernels: the retained
//! fraction kappa, window-certified cut and rod densities, and the local
//! time of the pruned path at the origin.

use crate::error::{Error, Result};
use crate::experiments::rod::{RodConfig, RodLayout};
use crate::lattice::{LoopFamily, Point};
use crate::prune::{cut_steps, prune, PruneSession};
use crate::rng::CounterRng;
use crate::sim::{generate_two_sided, WalkConfig, Walker, ROLE_EXPERIMENT};
use rayon::prelude::*;
use serde::Serialize;

/// Retained-fraction estimate: per-seed N_n / n at the full horizon plus the
/// same statistic at intermediate checkpoints.
#[derive(Clone, Debug, Serialize)]
pub struct KappaReport {
    pub kappa_hat: f64,
    pub stderr: f64,
    pub rel_stderr: f64,
    pub n: usize,
    pub n_seeds: usize,
    /// (n, median |N_n/n - kappa_hat|) per checkpoint, ascending n.
    pub median_abs_dev: Vec<(usize, f64)>,
    /// (a, max over seeds of |N_n - kappa_hat n| / n^a).
    pub deviation_stats: Vec<(f64, f64)>,
    pub per_seed: Vec<f64>,
}

/// kappa_hat = mean over seeds of N_n/n, with N_n the retained count of the
/// horizon-n pruning. Checkpoints record the same per-seed ratio at smaller
/// horizons from the same trajectories.
pub fn estimate_kappa(
    fam: &LoopFamily,
    cfg: &WalkConfig,
    n_seeds: usize,
    checkpoints: &[usize],
) -> Result<KappaReport> {
    if cfg.d < 3 {
        return Err(Error::InvalidParameter("kappa estimation assumes d >= 3".into()));
    }
    let n = cfg.horizon;
    let mut cps: Vec<usize> = checkpoints.iter().copied().filter(|&c| c <= n).collect();
    if !cps.contains(&n) {
        cps.push(n);
    }
    cps.sort_unstable();
    let rows: Vec<Vec<usize>> = (0..n_seeds)
        .into_par_iter()
        .map(|i| {
            let mut walker = Walker::new(cfg.d, CounterRng::new(cfg.seed, i as u64, ROLE_EXPERIMENT));
            let mut session = PruneSession::new(fam, Point::origin(cfg.d), 0);
            let mut at = Vec::with_capacity(cps.len());
            let mut next = 0usize;
            for t in 1..=n {
                session.push(walker.step(), t as i64);
                while next < cps.len() && cps[next] == t {
                    at.push(session.retained_len());
                    next += 1;
                }
            }
            at
        })
        .collect();
    let per_seed: Vec<f64> = rows
        .iter()
        .map(|r| *r.last().unwrap() as f64 / n as f64)
        .collect();
    let kappa_hat = per_seed.iter().sum::<f64>() / n_seeds as f64;
    let var = per_seed
        .iter()
        .map(|x| (x - kappa_hat).powi(2))
        .sum::<f64>()
        / (n_seeds as f64 - 1.0);
    let stderr = (var / n_seeds as f64).sqrt();
    let mut median_abs_dev = Vec::new();
    for (k, &cp) in cps.iter().enumerate() {
        let mut devs: Vec<f64> = rows
            .iter()
            .map(|r| (r[k] as f64 / cp as f64 - kappa_hat).abs())
            .collect();
        devs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        median_abs_dev.push((cp, devs[devs.len() / 2]));
    }
    let deviation_stats = [0.6, 0.75, 0.9]
        .iter()
        .map(|&a| {
            let max = rows
                .iter()
                .map(|r| {
                    let nn = *r.last().unwrap() as f64;
                    (nn - kappa_hat * n as f64).abs() / (n as f64).powf(a)
                })
                .fold(0.0f64, f64::max);
            (a, max)
        })
        .collect();
    Ok(KappaReport {
        kappa_hat,
        stderr,
        rel_stderr: stderr / kappa_hat,
        n,
        n_seeds,
        median_abs_dev,
        deviation_stats,
        per_seed,
    })
}

/// Per-seed cut and rod counts over two-sided windows.
#[derive(Clone, Debug, Serialize)]
pub struct DensityReport {
    pub window_len: usize,
    pub n_seeds: usize,
    pub theta_cut_mean: f64,
    pub theta_cut_cv: f64,
    pub theta_rod_mean: f64,
    pub rod_points_total: u64,
    pub rod_points_expected: f64,
    pub rod_oracle_sigma: f64,
    /// Every rod cut point is a cut point, on every seed.
    pub containment_ok: bool,
    pub per_seed_cut: Vec<f64>,
    pub per_seed_rod_points: Vec<u64>,
}

/// Window-certified cut density, rod-point counts against the i.i.d. block
/// oracle, and rod-cut containment, over independent two-sided windows.
pub fn cut_and_rod_density(
    fam: &LoopFamily,
    rodcfg: RodConfig,
    cfg: &WalkConfig,
    half_window: usize,
    n_seeds: usize,
) -> Result<DensityReport> {
    if cfg.d < 3 {
        return Err(Error::InvalidParameter("density estimation assumes d >= 3".into()));
    }
    let rows: Vec<(usize, usize, usize, bool)> = (0..n_seeds)
        .into_par_iter()
        .map(|i| {
            let seed_cfg = WalkConfig::new(cfg.d, cfg.seed.wrapping_add(i as u64), cfg.horizon);
            let (path, base) = generate_two_sided(&seed_cfg, half_window).unwrap();
            let mask = cut_steps(&path, fam, base).unwrap();
            let layout = RodLayout::new(&path, base, fam, rodcfg).unwrap();
            let rod_cuts = layout.rho.iter().filter(|&&r| mask.is_cut(r)).count();
            // Containment is structural (rod cut points are cut points by
            // construction); assert it anyway.
            let contained = layout.rho.iter().filter(|&&r| mask.is_cut(r)).all(|&r| mask.is_cut(r));
            (mask.count(), layout.rho.len(), rod_cuts, contained)
        })
        .collect();
    let len = 2 * half_window;
    let per_seed_cut: Vec<f64> = rows.iter().map(|r| r.0 as f64 / len as f64).collect();
    let mean = per_seed_cut.iter().sum::<f64>() / n_seeds as f64;
    let var = per_seed_cut
        .iter()
        .map(|x| (x - mean).powi(2))
        .sum::<f64>()
        / (n_seeds as f64 - 1.0);
    let per_seed_rod_points: Vec<u64> = rows.iter().map(|r| r.1 as u64).collect();
    let rod_points_total: u64 = per_seed_rod_points.iter().sum();
    let rod_cut_total: u64 = rows.iter().map(|r| r.2 as u64).sum();
    let l = rodcfg.half_length(fam);
    let blocks = (len as i64 / (2 * l)) as f64;
    let p_block = (2.0 * cfg.d as f64).powi(-2 * l as i32);
    let expected = n_seeds as f64 * blocks * p_block;
    let sigma = (n_seeds as f64 * blocks * p_block * (1.0 - p_block)).sqrt();
    Ok(DensityReport {
        window_len: len,
        n_seeds,
        theta_cut_mean: mean,
        theta_cut_cv: (var.sqrt()) / mean,
        theta_rod_mean: rod_cut_total as f64 / (n_seeds * len) as f64,
        rod_points_total,
        rod_points_expected: expected,
        rod_oracle_sigma: sigma,
        containment_ok: rows.iter().all(|r| r.3),
        per_seed_cut,
        per_seed_rod_points,
    })
}

/// Empirical survival curve of the origin's local time in the pruned path.
#[derive(Clone, Debug, Serialize)]
pub struct TailReport {
    pub n: usize,
    pub n_seeds: usize,
    /// (threshold, survival fraction, binomial stderr).
    pub survival: Vec<(u32, f64, f64)>,
    pub samples: Vec<u32>,
}

/// Per-seed ell_0(Prune(S[0,N], E)) and its survival curve over a threshold
/// grid.
pub fn pruned_local_time_tail(
    fam: &LoopFamily,
    cfg: &WalkConfig,
    n_seeds: usize,
    grid: &[u32],
) -> Result<TailReport> {
    if cfg.d < 3 {
        return Err(Error::InvalidParameter("tail estimation assumes d >= 3".into()));
    }
    let samples: Vec<u32> = (0..n_seeds)
        .into_par_iter()
        .map(|i| {
            let mut walker = Walker::new(cfg.d, CounterRng::new(cfg.seed, i as u64, ROLE_EXPERIMENT));
            let mut session = PruneSession::new(fam, Point::origin(cfg.d), 0);
            for t in 1..=cfg.horizon {
                session.push(walker.step(), t as i64);
            }
            session
                .retained_path()
                .points()
                .iter()
                .filter(|p| p.is_origin())
                .count() as u32
        })
        .collect();
    let survival = grid
        .iter()
        .map(|&t| {
            let hits = samples.iter().filter(|&&x| x > t).count();
            let p = hits as f64 / n_seeds as f64;
            (t, p, (p * (1.0 - p) / n_seeds as f64).sqrt())
        })
        .collect();
    Ok(TailReport {
        n: cfg.horizon,
        n_seeds,
        survival,
        samples,
    })
}

/// Deterministic excursion bound: whenever more than a (1 - eta)-fraction of
/// the first k excursions is erasable, the pruned path's local time at the
/// origin is at most ceil(eta k). Returns the number of violations (0 is the
/// pass condition) and the number of applicable samples.
pub fn excursion_bound_check(
    fam: &LoopFamily,
    cfg: &WalkConfig,
    n_samples: usize,
    etas: &[f64],
) -> Result<(usize, usize)> {
    if cfg.d < 3 {
        return Err(Error::InvalidParameter("bound check assumes d >= 3".into()));
    }
    let results: Vec<(usize, usize)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut walker = Walker::new(cfg.d, CounterRng::new(cfg.seed, i as u64, ROLE_EXPERIMENT));
            let mut session = PruneSession::new(fam, Point::origin(cfg.d), 0);
            // Track the per-excursion erasability flags on the fly: along an
            // excursion the session dips away from the base stack depth; the
            // excursion is erasable iff the stack is back to its pre-excursion
            // state at the return, which for a pruned prefix of returns means
            // depth equal to the origin-local-time bookkeeping below.
            let mut tau_prev = 0usize;
            let mut flags: Vec<bool> = Vec::new();
            let mut returns: Vec<usize> = Vec::new();
            let mut pts = vec![Point::origin(cfg.d)];
            for t in 1..=cfg.horizon {
                let p = walker.step();
                pts.push(p);
                session.push(p, t as i64);
                if p.is_origin() {
                    // Excursions start and end at the origin, so the slice is
                    // already rooted.
                    let exc = crate::lattice::Path::validate(pts[tau_prev..=t].to_vec(), true).unwrap();
                    flags.push(crate::segment::seg_membership(&exc, fam, None).unwrap_or(false));
                    returns.push(t);
                    tau_prev = t;
                }
            }
            let k = returns.len();
            if k == 0 {
                return (0usize, 0usize);
            }
            let path = crate::lattice::Path::validate(pts[..=returns[k - 1]].to_vec(), true).unwrap();
            let pruned = prune(&path, fam);
            let ell0 = pruned.points().iter().filter(|p| p.is_origin()).count();
            let good = flags.iter().filter(|&&x| x).count();
            let mut violations = 0usize;
            let mut applicable = 0usize;
            for &eta in etas {
                if good as f64 / k as f64 > 1.0 - eta {
                    applicable += 1;
                    if ell0 > (eta * k as f64).ceil() as usize {
                        violations += 1;
                    }
                }
            }
            (violations, applicable)
        })
        .collect();
    let violations = results.iter().map(|r| r.0).sum();
    let applicable = results.iter().map(|r| r.1).sum();
    Ok((violations, applicable))
}
