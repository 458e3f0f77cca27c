//! Seeded simple-random-walk generation, excursion analysis, and Monte Carlo
//! estimation of the escape probability, the first-excursion erasability
//! mass, and loop-family harvesting.
//!
//! Sampling is embarrassingly parallel: every sample owns a counter-based
//! stream keyed by (seed, sample index, role), and aggregation folds results
//! in sample order, so outputs are bitwise independent of the thread count.

use crate::error::{Error, Result};
use crate::lattice::{LoopFamily, Path, Point, SimpleLoop};
use crate::prune::PruneSession;
use crate::rng::CounterRng;
use crate::segment::seg_membership;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

pub const ROLE_WALK: u64 = 0;
pub const ROLE_WALK_NEG: u64 = 1;
pub const ROLE_GAMMA: u64 = 2;
pub const ROLE_EXCURSION: u64 = 3;
pub const ROLE_HARVEST: u64 = 4;
pub const ROLE_EXPERIMENT: u64 = 5;

/// How a simulated walk window ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Truncation {
    /// Stop after exactly `horizon` steps.
    HorizonCensored,
    /// Stop at the first exit from the centered l-infinity ball of this
    /// radius (or at the horizon, whichever comes first).
    BallExit { radius: i64 },
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WalkConfig {
    pub d: usize,
    pub seed: u64,
    pub horizon: usize,
    pub truncation: Truncation,
}

impl WalkConfig {
    pub fn new(d: usize, seed: u64, horizon: usize) -> WalkConfig {
        WalkConfig {
            d,
            seed,
            horizon,
            truncation: Truncation::HorizonCensored,
        }
    }

    fn require_transient(&self) -> Result<()> {
        if self.d < 3 {
            return Err(Error::InvalidParameter(format!(
                "estimator assumes transience: d = {} < 3",
                self.d
            )));
        }
        Ok(())
    }
}

/// A streaming simple-random-walk position source.
pub struct Walker {
    pos: Point,
    rng: CounterRng,
    d: usize,
}

impl Walker {
    pub fn new(d: usize, rng: CounterRng) -> Walker {
        Walker {
            pos: Point::origin(d),
            rng,
            d,
        }
    }

    #[inline]
    pub fn position(&self) -> Point {
        self.pos
    }

    #[inline]
    pub fn step(&mut self) -> Point {
        let dir = self.rng.next_below(2 * self.d as u64);
        let axis = (dir / 2) as usize;
        let positive = dir % 2 == 0;
        self.pos = self.pos.add(&Point::unit(self.d, axis, positive));
        self.pos
    }
}

/// Reproducible one-sided walk from the origin.
pub fn generate_walk(cfg: &WalkConfig) -> Result<Path> {
    if cfg.d < 1 {
        return Err(Error::BadDimension(cfg.d));
    }
    if cfg.horizon < 1 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let mut walker = Walker::new(cfg.d, CounterRng::new(cfg.seed, 0, ROLE_WALK));
    let mut pts = Vec::with_capacity(cfg.horizon + 1);
    pts.push(Point::origin(cfg.d));
    for _ in 0..cfg.horizon {
        let p = walker.step();
        pts.push(p);
        if let Truncation::BallExit { radius } = cfg.truncation {
            if p.linf() > radius {
                break;
            }
        }
    }
    Path::validate(pts, true)
}

/// Two-sided walk window S[-half, half], extending the one-sided walk by an
/// independent mirrored copy for the negative half. Returns the points and
/// the absolute index of the first one.
pub fn generate_two_sided(cfg: &WalkConfig, half: usize) -> Result<(Path, i64)> {
    if cfg.d < 1 {
        return Err(Error::BadDimension(cfg.d));
    }
    let mut pos_half = Vec::with_capacity(half);
    let mut walker = Walker::new(cfg.d, CounterRng::new(cfg.seed, 0, ROLE_WALK));
    for _ in 0..half {
        pos_half.push(walker.step());
    }
    let mut neg_half = Vec::with_capacity(half);
    let mut mirror = Walker::new(cfg.d, CounterRng::new(cfg.seed, 0, ROLE_WALK_NEG));
    for _ in 0..half {
        let p = mirror.step();
        neg_half.push(Point::origin(cfg.d).sub(&p));
    }
    let mut pts = Vec::with_capacity(2 * half + 1);
    pts.extend(neg_half.iter().rev());
    pts.push(Point::origin(cfg.d));
    pts.extend(pos_half);
    Ok((Path::validate(pts, true)?, -(half as i64)))
}

/// Escape-probability estimate with its plug-in alpha.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EscapeEstimate {
    pub gamma_hat: f64,
    pub alpha_hat: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub horizon: usize,
}

fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Time of the first return to the origin, censored at `horizon`.
fn first_return_time(d: usize, rng: CounterRng, horizon: usize) -> Option<usize> {
    let mut walker = Walker::new(d, rng);
    for t in 1..=horizon {
        if walker.step().is_origin() {
            return Some(t);
        }
    }
    None
}

/// Horizon-censored escape probability: the fraction of walks with no return
/// by the horizon. Censoring inflates the estimate (the true escape
/// probability is the monotone-decreasing limit in the horizon).
pub fn estimate_gamma(cfg: &WalkConfig, n_samples: usize) -> Result<EscapeEstimate> {
    cfg.require_transient()?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("zero samples".into()));
    }
    let escapes: usize = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let rng = CounterRng::new(cfg.seed, i as u64, ROLE_GAMMA);
            usize::from(first_return_time(cfg.d, rng, cfg.horizon).is_none())
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let gamma_hat = escapes as f64 / n_samples as f64;
    Ok(EscapeEstimate {
        gamma_hat,
        alpha_hat: -1.0 / (1.0 - gamma_hat).ln(),
        stderr: binomial_stderr(gamma_hat, n_samples),
        n_samples,
        horizon: cfg.horizon,
    })
}

/// Escape estimates at several horizons over shared samples (each sample is
/// run to the largest horizon once), so the curve is monotone by
/// construction.
pub fn estimate_gamma_sweep(
    cfg: &WalkConfig,
    n_samples: usize,
    horizons: &[usize],
) -> Result<Vec<EscapeEstimate>> {
    cfg.require_transient()?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("zero samples".into()));
    }
    let max_h = *horizons.iter().max().unwrap();
    let returns: Vec<Option<usize>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let rng = CounterRng::new(cfg.seed, i as u64, ROLE_GAMMA);
            first_return_time(cfg.d, rng, max_h)
        })
        .collect();
    Ok(horizons
        .iter()
        .map(|&h| {
            let escapes = returns.iter().filter(|r| r.map_or(true, |t| t > h)).count();
            let gamma_hat = escapes as f64 / n_samples as f64;
            EscapeEstimate {
                gamma_hat,
                alpha_hat: -1.0 / (1.0 - gamma_hat).ln(),
                stderr: binomial_stderr(gamma_hat, n_samples),
                n_samples,
                horizon: h,
            }
        })
        .collect())
}

/// Excursion structure of a path from the origin: return times, optional
/// erasability flags, and the censored tail after the last return.
#[derive(Clone, Debug)]
pub struct ExcursionRecord {
    pub return_times: Vec<usize>,
    /// X_r = whether the r-th excursion is erasable, when a family is given.
    pub erasable: Option<Vec<bool>>,
    /// Steps after the last return (an incomplete excursion), if any.
    pub censored_tail: usize,
}

pub fn excursion_profile(path: &Path, fam: Option<&LoopFamily>) -> Result<ExcursionRecord> {
    if !path.first().is_origin() {
        return Err(Error::NotRootedAtOrigin);
    }
    let mut return_times = Vec::new();
    for t in 1..=path.len() {
        if path.point(t).is_origin() {
            return_times.push(t);
        }
    }
    let erasable = match fam {
        None => None,
        Some(f) => {
            let mut flags = Vec::with_capacity(return_times.len());
            let mut prev = 0usize;
            for &t in &return_times {
                let exc = path.window_rooted(prev, t);
                flags.push(seg_membership(&exc, f, None)?);
                prev = t;
            }
            Some(flags)
        }
    };
    let censored_tail = path.len() - return_times.last().copied().unwrap_or(0);
    Ok(ExcursionRecord {
        return_times,
        erasable,
        censored_tail,
    })
}

/// Number of returns to the origin within the horizon, per sample.
pub fn sample_return_counts(cfg: &WalkConfig, n_samples: usize) -> Result<Vec<u32>> {
    cfg.require_transient()?;
    Ok((0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut walker = Walker::new(cfg.d, CounterRng::new(cfg.seed, i as u64, ROLE_EXCURSION));
            let mut count = 0u32;
            for _ in 0..cfg.horizon {
                if walker.step().is_origin() {
                    count += 1;
                }
            }
            count
        })
        .collect())
}

/// Generic conditional frequency estimate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_effective: usize,
}

/// Conditional probability that the first completed excursion is erasable.
pub fn estimate_vartheta(
    fam: &LoopFamily,
    cfg: &WalkConfig,
    n_samples: usize,
) -> Result<Estimate> {
    cfg.require_transient()?;
    let outcomes: Vec<Option<bool>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let rng = CounterRng::new(cfg.seed, i as u64, ROLE_EXCURSION);
            let mut walker = Walker::new(cfg.d, rng);
            let mut session = PruneSession::new(fam, Point::origin(cfg.d), 0);
            for t in 1..=cfg.horizon {
                let p = walker.step();
                session.push(p, t as i64);
                if p.is_origin() {
                    return Some(session.retained_len() == 0);
                }
            }
            None
        })
        .collect();
    let completed = outcomes.iter().filter(|o| o.is_some()).count();
    if completed == 0 {
        return Err(Error::NoCompletedExcursions);
    }
    let hits = outcomes.iter().filter(|o| **o == Some(true)).count();
    let value = hits as f64 / completed as f64;
    Ok(Estimate {
        value,
        stderr: binomial_stderr(value, completed),
        n_effective: completed,
    })
}

/// Chronological decomposition of a rooted loop into simple loops: scanning
/// left to right with a vertex stack, each revisit pops a simple loop. The
/// recorded position is the stack depth of the loop's base; folding the list
/// in reverse with loop insertion reconstructs the input.
pub fn simple_loop_decomposition(path: &Path) -> Result<Vec<(SimpleLoop, usize)>> {
    if !path.is_rooted_loop() {
        return Err(Error::NotRootedAtOrigin);
    }
    let mut out = Vec::new();
    let mut stack: Vec<Point> = vec![*path.point(0)];
    for t in 1..=path.len() {
        let p = *path.point(t);
        if let Some(k) = stack.iter().position(|q| *q == p) {
            let base = stack[k];
            let mut pts: Vec<Point> = stack[k..].iter().map(|q| q.sub(&base)).collect();
            pts.push(Point::origin(path.dim()));
            let e = SimpleLoop::new(Path::validate(pts, false)?).map_err(|_| {
                Error::InvalidParameter("revisit did not close a simple loop".into())
            })?;
            out.push((e, k));
            stack.truncate(k + 1);
        } else {
            stack.push(p);
        }
    }
    if stack.len() != 1 {
        return Err(Error::NotRootedAtOrigin);
    }
    Ok(out)
}

/// Inverse of `simple_loop_decomposition`: insert the loops back in reverse
/// order at their recorded positions.
pub fn rebuild_from_loops(d: usize, decomp: &[(SimpleLoop, usize)]) -> Result<Path> {
    let mut path = Path::origin(d);
    for (e, k) in decomp.iter().rev() {
        path = path.insert_loop(*k, e)?;
    }
    Ok(path)
}

/// Harvest a loop family from first-return excursion shapes: tally shapes by
/// empirical frequency, keep the most frequent until their conditional mass
/// exceeds 1 - eps/2 (margin for sampling error), and return the union of
/// the simple loops in their chronological decompositions.
pub fn harvest_loop_family(
    eps: f64,
    cfg: &WalkConfig,
    n_samples: usize,
) -> Result<LoopFamily> {
    const MAX_SHAPES: usize = 4096;
    cfg.require_transient()?;
    if !(0.0..1.0).contains(&eps) || eps <= 0.0 {
        return Err(Error::InvalidParameter("eps must lie in (0,1)".into()));
    }
    let shapes: Vec<Option<Vec<Point>>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let rng = CounterRng::new(cfg.seed, i as u64, ROLE_HARVEST);
            let mut walker = Walker::new(cfg.d, rng);
            let mut pts = vec![Point::origin(cfg.d)];
            for _ in 0..cfg.horizon {
                let p = walker.step();
                pts.push(p);
                if p.is_origin() {
                    return Some(pts);
                }
            }
            None
        })
        .collect();
    let mut tally: HashMap<Vec<Point>, u64> = HashMap::new();
    let mut returns = 0u64;
    for s in shapes.into_iter().flatten() {
        returns += 1;
        *tally.entry(s).or_insert(0) += 1;
    }
    if returns == 0 {
        return Err(Error::NoCompletedExcursions);
    }
    let mut ranked: Vec<(Vec<Point>, u64)> = tally.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let target = 1.0 - eps / 2.0;
    let mut mass = 0u64;
    let mut selected = Vec::new();
    for (shape, count) in ranked {
        selected.push(shape);
        mass += count;
        if (mass as f64 / returns as f64) > target {
            break;
        }
        if selected.len() >= MAX_SHAPES {
            return Err(Error::BudgetExceeded(format!(
                "harvest mass {:.4} below target {:.4} after {} shapes",
                mass as f64 / returns as f64,
                target,
                MAX_SHAPES
            )));
        }
    }
    if (mass as f64 / returns as f64) <= target {
        return Err(Error::BudgetExceeded(
            "sampling budget exhausted before target mass".into(),
        ));
    }
    let mut loops: Vec<SimpleLoop> = Vec::new();
    let mut seen: HashMap<Vec<Point>, ()> = HashMap::new();
    for shape in selected {
        let path = Path::validate(shape, true)?;
        for (e, _) in simple_loop_decomposition(&path)? {
            let key = e.path().points().to_vec();
            if seen.insert(key, ()).is_none() {
                loops.push(e);
            }
        }
    }
    loops.sort_by(|a, b| {
        a.len()
            .cmp(&b.len())
            .then_with(|| a.path().points().cmp(b.path().points()))
    });
    LoopFamily::new(loops, true)
}

/// Bernoulli large-deviation rate I_theta(x) = x log(x/theta) + (1-x) log((1-x)/(1-theta)).
pub fn rate_function(x: f64, theta: f64) -> Result<f64> {
    if !(0.0 < x && x < 1.0 && 0.0 < theta && theta < 1.0) {
        return Err(Error::InvalidParameter(
            "rate function needs x, theta in (0,1)".into(),
        ));
    }
    Ok(x * (x / theta).ln() + (1.0 - x) * ((1.0 - x) / (1.0 - theta)).ln())
}

/// Exact occupation statistics of a path.
#[derive(Clone, Debug)]
pub struct LocalTimeStats {
    pub counts: HashMap<Point, u32>,
    pub max: u32,
    /// Sites attaining the maximum, sorted.
    pub argmax: Vec<Point>,
}

pub fn local_time_stats(path: &Path) -> LocalTimeStats {
    let counts = path.local_time_map();
    let max = counts.values().copied().max().unwrap_or(0);
    let mut argmax: Vec<Point> = counts
        .iter()
        .filter(|(_, &c)| c == max)
        .map(|(p, _)| *p)
        .collect();
    argmax.sort();
    LocalTimeStats { counts, max, argmax }
}

/// Streaming maximum local time of a fresh walk of `n` steps (sample-indexed
/// stream), without materializing the path.
pub fn walk_max_local_time(cfg: &WalkConfig, sample: u64, n: usize) -> u32 {
    let mut walker = Walker::new(cfg.d, CounterRng::new(cfg.seed, sample, ROLE_WALK));
    let mut counts: HashMap<Point, u32> = HashMap::new();
    counts.insert(Point::origin(cfg.d), 1);
    let mut max = 1u32;
    for _ in 0..n {
        let c = counts.entry(walker.step()).or_insert(0);
        *c += 1;
        max = max.max(*c);
    }
    max
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o() -> Point {
        Point::origin(3)
    }

    fn u(axis: usize) -> Point {
        Point::unit(3, axis, true)
    }

    #[test]
    fn generate_walk_is_deterministic() {
        let cfg = WalkConfig::new(3, 42, 500);
        let a = generate_walk(&cfg).unwrap();
        let b = generate_walk(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 500);
        assert!(a.is_walk());
        let other = generate_walk(&WalkConfig::new(3, 43, 500)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn step_histogram_is_uniform() {
        // Multinomial check over 6 directions at 4 sigma.
        let mut walker = Walker::new(3, CounterRng::new(9, 0, ROLE_WALK));
        let n = 600_000usize;
        let mut counts = [0i64; 6];
        let mut prev = o();
        for _ in 0..n {
            let p = walker.step();
            let step = p.sub(&prev);
            for axis in 0..3 {
                for (s, slot) in [(1, 0), (-1, 1)] {
                    if step.coords()[axis] == s {
                        counts[2 * axis + slot] += 1;
                    }
                }
            }
            prev = p;
        }
        let expect = n as f64 / 6.0;
        let sigma = (n as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for c in counts {
            assert!(
                (c as f64 - expect).abs() < 4.0 * sigma,
                "direction counts {:?}",
                counts
            );
        }
    }

    #[test]
    fn two_sided_halves_are_centered_and_independent() {
        let cfg = WalkConfig::new(3, 11, 0);
        let (path, base) = generate_two_sided(&cfg, 20_000).unwrap();
        assert_eq!(base, -20_000);
        assert!(path.point(20_000).is_origin());
        // Correlation of the +u1 step indicators between mirrored indices.
        let ind = |t: usize| -> f64 {
            let step = path.point(t + 1).sub(path.point(t));
            f64::from(step.coords()[0] == 1)
        };
        let n = 19_999;
        let (mut sx, mut sy, mut sxy) = (0.0, 0.0, 0.0);
        for k in 0..n {
            let x = ind(20_000 + k);
            let y = ind(20_000 - 2 - k);
            sx += x;
            sy += y;
            sxy += x * y;
        }
        let nf = n as f64;
        let corr = (sxy / nf - (sx / nf) * (sy / nf))
            / ((sx / nf * (1.0 - sx / nf)).sqrt() * (sy / nf * (1.0 - sy / nf)).sqrt());
        assert!(corr.abs() < 4.0 / nf.sqrt(), "corr = {}", corr);
    }

    #[test]
    fn excursion_profile_examples() {
        let fam = LoopFamily::back_and_forth(3, 0);
        let path = Path::validate(vec![o(), u(0), o(), u(1), u(1).add(&u(0))], true).unwrap();
        let rec = excursion_profile(&path, Some(&fam)).unwrap();
        assert_eq!(rec.return_times, vec![2]);
        assert_eq!(rec.erasable, Some(vec![true]));
        assert_eq!(rec.censored_tail, 2);

        let never = Path::validate(vec![o(), u(1), u(1).add(&u(1))], false).unwrap();
        let rec = excursion_profile(&never, None).unwrap();
        assert!(rec.return_times.is_empty());
        assert_eq!(rec.censored_tail, 2);
    }

    #[test]
    fn gamma_estimate_matches_known_value() {
        // True escape probability in d = 3 is about 0.6595.
        let cfg = WalkConfig::new(3, 5, 20_000);
        let est = estimate_gamma(&cfg, 20_000).unwrap();
        assert!((est.gamma_hat - 0.6595).abs() < 0.012, "gamma {}", est.gamma_hat);
        assert!((est.alpha_hat - 0.928).abs() < 0.05, "alpha {}", est.alpha_hat);
        assert!(estimate_gamma(&WalkConfig::new(2, 5, 10), 10).is_err());
        assert!(estimate_gamma(&cfg, 0).is_err());
    }

    #[test]
    fn gamma_increases_with_dimension() {
        let e3 = estimate_gamma(&WalkConfig::new(3, 6, 5_000), 8_000).unwrap();
        let e5 = estimate_gamma(&WalkConfig::new(5, 6, 5_000), 8_000).unwrap();
        assert!(e5.gamma_hat > e3.gamma_hat + 4.0 * (e3.stderr + e5.stderr) - 0.2);
        assert!(e5.gamma_hat > e3.gamma_hat);
    }

    #[test]
    fn sweep_is_monotone_by_construction() {
        let cfg = WalkConfig::new(3, 12, 0);
        let ests = estimate_gamma_sweep(&cfg, 4_000, &[100, 1_000, 10_000]).unwrap();
        assert!(ests[0].gamma_hat >= ests[1].gamma_hat);
        assert!(ests[1].gamma_hat >= ests[2].gamma_hat);
    }

    #[test]
    fn return_count_mean_matches_geometric() {
        // E[M] = (1-gamma)/gamma ~ 0.5164 in d = 3.
        let cfg = WalkConfig::new(3, 21, 30_000);
        let counts = sample_return_counts(&cfg, 10_000).unwrap();
        let mean: f64 = counts.iter().map(|&c| c as f64).sum::<f64>() / counts.len() as f64;
        let var: f64 = counts
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / counts.len() as f64;
        let se = (var / counts.len() as f64).sqrt();
        assert!((mean - 0.5164).abs() < 3.0 * se + 0.01, "mean {} se {}", mean, se);
    }

    #[test]
    fn loop_decomposition_examples() {
        let d = 3;
        let p = Path::validate(vec![o(), u(0), o()], true).unwrap();
        let dec = simple_loop_decomposition(&p).unwrap();
        assert_eq!(dec.len(), 1);
        assert_eq!(dec[0].1, 0);
        assert_eq!(rebuild_from_loops(d, &dec).unwrap(), p);

        let p = Path::validate(vec![o(), u(0), o(), u(0), o()], true).unwrap();
        let dec = simple_loop_decomposition(&p).unwrap();
        assert_eq!(dec.len(), 2);
        assert_eq!(rebuild_from_loops(d, &dec).unwrap(), p);

        // Inner loop pops first.
        let p = Path::validate(vec![o(), u(0), u(0).add(&u(1)), u(0), o()], true).unwrap();
        let dec = simple_loop_decomposition(&p).unwrap();
        assert_eq!(dec.len(), 2);
        assert_eq!(dec[0].0.path().points(), &[o(), u(1), o()]);
        assert_eq!(dec[0].1, 1);
        assert_eq!(dec[1].0.path().points(), &[o(), u(0), o()]);
        assert_eq!(dec[1].1, 0);
        assert_eq!(rebuild_from_loops(d, &dec).unwrap(), p);

        assert!(simple_loop_decomposition(&Path::validate(vec![o(), u(0)], true).unwrap()).is_err());
    }

    #[test]
    fn loop_decomposition_round_trips_on_random_excursions() {
        let cfg = WalkConfig::new(3, 33, 4_000);
        let mut checked = 0;
        for i in 0..400u64 {
            let rng = CounterRng::new(cfg.seed, i, ROLE_EXCURSION);
            let mut walker = Walker::new(3, rng);
            let mut pts = vec![o()];
            for _ in 0..cfg.horizon {
                let p = walker.step();
                pts.push(p);
                if p.is_origin() {
                    break;
                }
            }
            if !pts.last().unwrap().is_origin() {
                continue;
            }
            let path = Path::validate(pts, true).unwrap();
            let dec = simple_loop_decomposition(&path).unwrap();
            assert_eq!(rebuild_from_loops(3, &dec).unwrap(), path);
            checked += 1;
        }
        assert!(checked > 50);
    }

    #[test]
    fn harvest_collects_back_and_forth_loops() {
        let cfg = WalkConfig::new(3, 17, 2_000);
        let fam = harvest_loop_family(0.5, &cfg, 40_000).unwrap();
        // All six one-step excursions have first-return mass ~0.49 combined,
        // so they are all harvested (plus more shapes to pass mass 0.75).
        let mut found = 0;
        for axis in 0..3 {
            for positive in [true, false] {
                let target = vec![o(), Point::unit(3, axis, positive), o()];
                if fam.loops().iter().any(|e| e.path().points() == target.as_slice()) {
                    found += 1;
                }
            }
        }
        assert_eq!(found, 6);
        assert!(fam.walk_compatible());
        for e in fam.loops() {
            assert!(e.len() >= 2);
        }
    }

    #[test]
    fn vartheta_for_single_loop_family() {
        // Closed form: sum_k C_{k-1} (1/36)^k / (1-gamma) ~ 0.0840.
        let fam = LoopFamily::back_and_forth(3, 0);
        let cfg = WalkConfig::new(3, 29, 20_000);
        let est = estimate_vartheta(&fam, &cfg, 60_000).unwrap();
        assert!(
            (est.value - 0.0840).abs() < 3.0 * est.stderr + 0.003,
            "vartheta {} +- {}",
            est.value,
            est.stderr
        );
    }

    #[test]
    fn rate_function_values() {
        assert!(rate_function(0.3, 0.3).unwrap().abs() < 1e-12);
        let v = rate_function(0.25, 0.5).unwrap();
        assert!((v - 0.130812).abs() < 1e-5, "I_{{0.5}}(0.25) = {}", v);
        // Divergence as theta -> 1 for fixed x.
        let a = rate_function(0.5, 0.999).unwrap();
        assert!((a - 2.7612).abs() < 1e-3, "I_{{0.999}}(0.5) = {}", a);
        let b = rate_function(0.5, 0.999999).unwrap();
        assert!(b > 3.0 && b > a);
        assert!(rate_function(0.0, 0.5).is_err());
        assert!(rate_function(0.5, 1.0).is_err());
    }

    #[test]
    fn local_time_stats_examples() {
        let straight = Path::validate(vec![o(), u(1), Point::new(&[0, 2, 0]).unwrap()], true).unwrap();
        assert_eq!(local_time_stats(&straight).max, 1);
        let p = Path::validate(vec![o(), u(0), o(), u(0), o()], true).unwrap();
        let st = local_time_stats(&p);
        assert_eq!(st.max, 3);
        assert_eq!(st.argmax, vec![o()]);
    }
}
