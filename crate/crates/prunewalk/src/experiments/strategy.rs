//! The insertion-suppression strategy replay: reveal the erased segments in
//! canonical lexicographic order, detect sites that have reached the critical
//! level next to an insertable loop, and check that suppressing every further
//! block at those seams keeps the maximum local time below the level.

use crate::error::{Error, Result};
use crate::lattice::{LoopFamily, Path, Point};
use crate::prune::{decompose, PruneSession};
use crate::rng::CounterRng;
use crate::segment::{boundary_scan, es_of_segment, exp_path, truncated_data};
use crate::sim::{Walker, ROLE_EXPERIMENT};
use serde::Serialize;
use std::collections::{HashMap, HashSet};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StrategyParams {
    pub n: usize,
    pub beta: f64,
    /// u_n = floor(kappa n + delta n^a).
    pub delta: f64,
    pub a: f64,
    pub seed: u64,
}

/// Plug-in constants recorded with every run so runs are comparable.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Plugins {
    pub alpha_hat: f64,
    pub kappa_hat: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StrategyRun {
    pub params: StrategyParams,
    pub plugins: Plugins,
    pub lambda_n: u32,
    pub u_n: usize,
    /// Time at which the first u_n + 1 erased segments are complete.
    pub t_trunc: usize,
    pub horizon_used: usize,
    pub skeleton_max: u32,
    /// Maximum local time of the pruned prefix stays below the level.
    pub skeleton_ok: bool,
    pub boundary_pairs: usize,
    pub exc_count: usize,
    pub g_n: bool,
    /// When G_n holds: xi*(t_trunc) <= Lambda_n, asserted exactly.
    pub overflow_checked: bool,
    pub overflow_ok: bool,
    /// On runs realizing the strategy event, every site's first critical
    /// detection sits exactly at the level. (Off the event the seam that
    /// reveals a parent's remaining block types can add several same-base
    /// stub loops at once and overshoot the level, so the equality is a
    /// consequence of the suppression, not of the revelation alone.)
    pub critical_sites: usize,
    pub first_critical_checked: bool,
    pub first_critical_ok: bool,
    /// Exceptional-pair count against the neighborhood bound.
    pub mn_bound_checked: bool,
    pub mn_bound_ok: bool,
}

fn ln_floor(x: f64) -> u32 {
    x.max(0.0).floor() as u32
}

/// Replay one seeded strategy run.
pub fn strategy_run(
    fam: &LoopFamily,
    params: &StrategyParams,
    plugins: &Plugins,
) -> Result<StrategyRun> {
    if fam.dim() < 3 {
        return Err(Error::InvalidParameter("strategy replay assumes d >= 3".into()));
    }
    let d = fam.dim();
    let n = params.n;
    let nf = n as f64;
    let lambda_n = ln_floor(params.beta * plugins.alpha_hat * nf.ln());
    let u_n = (plugins.kappa_hat * nf + params.delta * nf.powf(params.a)).floor() as usize;
    let n_plus = (nf + nf.powf(params.a)).floor() as usize;

    // Simulate until the (u_n + 1)-st retained step is certified within the
    // window, and at least to n_plus for the neighborhood bound.
    let mut walker = Walker::new(d, CounterRng::new(params.seed, 0, ROLE_EXPERIMENT));
    let mut session = PruneSession::new(fam, Point::origin(d), 0);
    let mut pts = vec![Point::origin(d)];
    let budget = 6 * n + 50_000;
    let mut target = (nf + 4.0 * params.delta * nf.powf(params.a)).ceil() as usize + 2_000;
    target = target.max(n_plus + 1);
    let dec = loop {
        while pts.len() <= target {
            let p = walker.step();
            session.push(p, pts.len() as i64);
            pts.push(p);
        }
        if session.retained_len() >= u_n + 2 {
            let path = Path::validate(pts.clone(), true)?;
            let dec = decompose(&path, fam);
            if dec.skeleton.len() >= u_n + 1 {
                break dec;
            }
        }
        if target >= budget {
            return Err(Error::BudgetExceeded(format!(
                "strategy run: {} retained steps not certified within {} steps",
                u_n + 1,
                budget
            )));
        }
        target = (target + target / 4).min(budget);
    };
    let horizon_used = pts.len() - 1;
    let t_trunc = dec.profile.n_inv[u_n + 1] - 1;
    let skeleton_prefix = dec.skeleton.window(0, u_n);
    let skeleton_max = skeleton_prefix.max_local_time();
    let skeleton_ok = skeleton_max <= lambda_n;

    // Occupation bookkeeping for eta^{(i,v)} = history o_t backbone o_d rest.
    let mut hist: HashMap<Point, i64> = HashMap::new();
    hist.insert(Point::origin(d), 1);
    let mut rest: HashMap<Point, i64> = HashMap::new();
    for p in skeleton_prefix.points() {
        *rest.entry(*p).or_insert(0) += 1;
    }

    let mut boundary_pairs = 0usize;
    let mut exc_count = 0usize;
    let mut suppressed = true;
    let mut seen_critical: HashSet<Point> = HashSet::new();
    let mut first_critical_violation = false;

    for i in 0..=u_n {
        let base = *dec.skeleton.point(i);
        let rep = es_of_segment(&dec.segments[i], fam)?;
        for b in boundary_scan(&rep, fam)? {
            boundary_pairs += 1;
            let h = truncated_data(&rep, fam, &b.addr)?;
            let (eta_exp, tau_exp) = exp_path(&h, fam)?;
            let mut exp_map: HashMap<Point, i64> = HashMap::new();
            for p in eta_exp.points() {
                *exp_map.entry(p.add(&base)).or_insert(0) += 1;
            }
            let site = eta_exp.point(tau_exp).add(&base);
            let ell = |x: &Point| -> i64 {
                hist.get(x).copied().unwrap_or(0)
                    + exp_map.get(x).copied().unwrap_or(0)
                    + rest.get(x).copied().unwrap_or(0)
                    - 2 * i64::from(*x == base)
            };
            let mut critical_here: Vec<Point> = Vec::new();
            for e in fam.loops() {
                for t in 0..=e.len() {
                    let x = site.add(e.point(t));
                    if ell(&x) >= lambda_n as i64 {
                        critical_here.push(x);
                    }
                }
            }
            if !critical_here.is_empty() {
                exc_count += 1;
                if b.next != 0 {
                    suppressed = false;
                }
                critical_here.sort();
                critical_here.dedup();
                for x in critical_here {
                    if seen_critical.insert(x) && ell(&x) != lambda_n as i64 {
                        first_critical_violation = true;
                    }
                }
            }
        }
        // Advance the history over the creation window of the next skeleton
        // step and drop this step from the remaining-skeleton counts.
        if i < u_n {
            for t in (dec.profile.n_inv[i] + 1)..=dec.profile.n_inv[i + 1] {
                *hist.entry(pts[t]).or_insert(0) += 1;
            }
        }
        if let Some(c) = rest.get_mut(&base) {
            *c -= 1;
            if *c == 0 {
                rest.remove(&base);
            }
        }
    }
    let g_n = skeleton_ok && suppressed;
    let first_critical_checked = g_n;
    let first_critical_ok = !g_n || !first_critical_violation;

    let mut overflow_checked = false;
    let mut overflow_ok = true;
    if g_n {
        overflow_checked = true;
        let mut counts: HashMap<Point, i64> = HashMap::new();
        let mut max = 0i64;
        for p in &pts[..=t_trunc] {
            let c = counts.entry(*p).or_insert(0);
            *c += 1;
            max = max.max(*c);
        }
        overflow_ok = max <= lambda_n as i64;
    }

    // Exceptional-pair count against #B(0, D_E) * xi* * #A_n, on the event
    // that the truncation time fits under n + n^a.
    let mut mn_bound_checked = false;
    let mut mn_bound_ok = true;
    if t_trunc <= n_plus {
        mn_bound_checked = true;
        let mut counts: HashMap<Point, i64> = HashMap::new();
        for p in &pts[..=n_plus] {
            *counts.entry(*p).or_insert(0) += 1;
        }
        let xi_star = counts.values().copied().max().unwrap_or(0);
        let a_n = counts.values().filter(|&&c| c >= lambda_n as i64).count() as i64;
        let ball = (2 * fam.d_e() + 1).pow(d as u32);
        mn_bound_ok = (exc_count as i64) <= ball * xi_star * a_n;
    }

    Ok(StrategyRun {
        params: *params,
        plugins: *plugins,
        lambda_n,
        u_n,
        t_trunc,
        horizon_used,
        skeleton_max,
        skeleton_ok,
        boundary_pairs,
        exc_count,
        g_n,
        overflow_checked,
        overflow_ok,
        critical_sites: seen_critical.len(),
        first_critical_checked,
        first_critical_ok,
        mn_bound_checked,
        mn_bound_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_runs_are_sound_on_small_n() {
        let fam = LoopFamily::back_and_forth(3, 0);
        let plugins = Plugins {
            alpha_hat: 0.928,
            kappa_hat: 0.93,
        };
        let mut g_count = 0;
        let mut exc_seen = 0;
        for seed in 0..40u64 {
            let params = StrategyParams {
                n: 2_000,
                beta: 1.0,
                delta: plugins.kappa_hat / 2.0,
                a: 0.8,
                seed,
            };
            let run = strategy_run(&fam, &params, &plugins).unwrap();
            assert!(run.first_critical_ok, "seed {}: first-critical equality", seed);
            assert!(run.mn_bound_ok || !run.mn_bound_checked, "seed {}", seed);
            if run.g_n {
                g_count += 1;
                assert!(run.overflow_checked);
                assert!(
                    run.overflow_ok,
                    "seed {}: overflow with lambda={} max>{}",
                    seed, run.lambda_n, run.lambda_n
                );
            }
            exc_seen += run.exc_count;
        }
        assert!(g_count > 0, "no run realized the strategy event");
        let _ = exc_seen;
    }

    #[test]
    fn vacuous_runs_reduce_to_skeleton_condition() {
        // A tiny level makes every site critical instantly; a huge level
        // makes the exceptional set empty and G_n equal to the skeleton
        // condition.
        let fam = LoopFamily::back_and_forth(3, 0);
        let plugins = Plugins {
            alpha_hat: 50.0,
            kappa_hat: 0.9,
        };
        let params = StrategyParams {
            n: 500,
            beta: 1.0,
            delta: 0.45,
            a: 0.8,
            seed: 3,
        };
        let run = strategy_run(&fam, &params, &plugins).unwrap();
        assert_eq!(run.exc_count, 0);
        assert!(run.skeleton_ok);
        assert!(run.g_n);
        assert!(run.overflow_ok);
    }
}
