//! The pruning operator and its bookkeeping: retained-step profiles, the
//! loop-pruned decomposition and its inverse, window-certified cut steps,
//! two-sided pruning, and pruning intervals with their laminar classification.

use crate::error::{Error, Result};
use crate::lattice::{LoopFamily, Path, Point};
use serde::Serialize;

/// One pop of the incremental pruner: pushing step `time` completed loop
/// `loop_id`, erasing the retained steps `popped` (ending with `time` itself).
/// `new_top` is the step index left on top of the stack afterwards, or `None`
/// when only the base point remains.
#[derive(Clone, Debug)]
pub struct PopEvent {
    pub time: i64,
    pub loop_id: usize,
    pub popped: Vec<i64>,
    pub new_top: Option<i64>,
}

#[derive(Clone, Copy)]
struct Entry {
    pt: Point,
    idx: i64,
}

/// Incremental pruning state: a stack of retained steps with rolling
/// loop-suffix matching. Extending a path by one step costs
/// O(max |e| * #E) point comparisons, so growing paths can be re-pruned
/// cheaply. Staging (pruning a prefix first) leaves the state unchanged.
#[derive(Clone)]
pub struct PruneSession<'f> {
    fam: &'f LoopFamily,
    stack: Vec<Entry>,
}

impl<'f> PruneSession<'f> {
    /// Start a session whose base point carries index `base_idx`; the first
    /// pushed step gets index `base_idx + 1` unless the caller overrides it.
    pub fn new(fam: &'f LoopFamily, base: Point, base_idx: i64) -> Self {
        PruneSession {
            fam,
            stack: vec![Entry { pt: base, idx: base_idx }],
        }
    }

    /// Current retained path (the pruning of everything pushed so far).
    pub fn retained_path(&self) -> Path {
        Path::validate(self.stack.iter().map(|e| e.pt).collect(), false).unwrap()
    }

    /// Step indices currently retained, in chronological order.
    pub fn retained_indices(&self) -> Vec<i64> {
        self.stack[1..].iter().map(|e| e.idx).collect()
    }

    pub fn retained_len(&self) -> usize {
        self.stack.len() - 1
    }

    pub fn top_point(&self) -> Point {
        self.stack.last().unwrap().pt
    }

    /// Step index on top of the stack, or `None` when only the base remains.
    pub fn top_index(&self) -> Option<i64> {
        if self.stack.len() > 1 {
            Some(self.stack.last().unwrap().idx)
        } else {
            None
        }
    }

    /// Push the next point. At most one loop of the family can complete at a
    /// time (loops are simple), so the pop, if any, is unambiguous.
    pub fn push(&mut self, pt: Point, idx: i64) -> Option<PopEvent> {
        let prev_top = self.stack.last().unwrap().pt;
        self.stack.push(Entry { pt, idx });
        let step = pt.sub(&prev_top);
        let depth = self.stack.len();
        for (j, e) in self.fam.loops().iter().enumerate() {
            let m = e.len();
            if depth < m + 1 || *self.fam.last_step(j) != step {
                continue;
            }
            let lo = depth - 1 - m;
            let base = self.stack[lo].pt;
            if base != pt {
                continue;
            }
            let mut ok = true;
            for t in 1..m {
                if self.stack[lo + t].pt != base.add(e.point(t)) {
                    ok = false;
                    break;
                }
            }
            if ok {
                let popped = self.stack.drain(lo + 1..).map(|en| en.idx).collect();
                let new_top = if self.stack.len() > 1 {
                    Some(self.stack.last().unwrap().idx)
                } else {
                    None
                };
                return Some(PopEvent {
                    time: idx,
                    loop_id: j,
                    popped,
                    new_top,
                });
            }
        }
        None
    }

    /// Push points `from+1 ..= to` of `path` (0-based indices into `path`),
    /// assigning them indices `idx_base + i`.
    pub fn feed(&mut self, path: &Path, from: usize, to: usize, idx_base: i64) {
        for i in (from + 1)..=to {
            self.push(*path.point(i), idx_base + i as i64);
        }
    }
}

/// First time a loop from the family occurs in `s`, with the matching loop
/// index. The match is unique: loops do not revisit the origin before their
/// endpoint.
pub fn first_loop_time(s: &Path, fam: &LoopFamily) -> Option<(usize, usize)> {
    for i in 1..=s.len() {
        for (j, e) in fam.loops().iter().enumerate() {
            let m = e.len();
            if m > i {
                continue;
            }
            let base = s.point(i - m);
            if s.point(i) != base {
                continue;
            }
            let mut ok = true;
            for t in 1..m {
                if *s.point(i - m + t) != base.add(e.point(t)) {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Some((i, j));
            }
        }
    }
    None
}

/// Remove the first occurrence of a family loop, if any.
pub fn prune_once(s: &Path, fam: &LoopFamily) -> Path {
    match first_loop_time(s, fam) {
        None => s.clone(),
        Some((tau, j)) => {
            let m = fam.loops()[j].len();
            let mut pts = Vec::with_capacity(s.points().len() - m);
            pts.extend_from_slice(&s.points()[..=tau - m]);
            pts.extend_from_slice(&s.points()[tau + 1..]);
            Path::validate(pts, false).unwrap()
        }
    }
}

/// The pruning fixed point of a finite path.
pub fn prune(s: &Path, fam: &LoopFamily) -> Path {
    let mut session = PruneSession::new(fam, *s.point(0), 0);
    session.feed(s, 0, s.len(), 0);
    session.retained_path()
}

/// Retained-step profile of a finite path: the stabilized prefix lengths
/// N_0..N_|s|, the per-step retained mask, and the creation-time table
/// N^{-1}(0)..N^{-1}(|skeleton|).
#[derive(Clone, Debug, Serialize)]
pub struct Profile {
    pub n: Vec<usize>,
    pub mask: Vec<bool>,
    pub n_inv: Vec<usize>,
}

/// Computed by replaying incremental pruning and tracking, per prefix, how
/// long an initial run agrees with the final skeleton; N is then a running
/// minimum from the right. Agrees with the literal supremum definition (see
/// the differential test).
pub fn retained_profile(s: &Path, fam: &LoopFamily) -> Profile {
    let skeleton = prune(s, fam);
    let mut session = PruneSession::new(fam, *s.point(0), 0);
    // f[i] = longest initial run of Prune(s[0,i]) agreeing with the skeleton.
    let mut f = vec![0usize; s.len() + 1];
    let mut agree = 0usize;
    for i in 1..=s.len() {
        let pt = *s.point(i);
        let before = session.retained_len();
        match session.push(pt, i as i64) {
            None => {
                if agree == before
                    && agree + 1 <= skeleton.len()
                    && *skeleton.point(agree + 1) == pt
                {
                    agree += 1;
                }
            }
            Some(_) => {
                agree = agree.min(session.retained_len());
            }
        }
        f[i] = agree;
    }
    let mut n = vec![0usize; s.len() + 1];
    let mut running = usize::MAX;
    for i in (0..=s.len()).rev() {
        running = running.min(f[i]);
        n[i] = running;
    }
    let mask: Vec<bool> = (1..=s.len()).map(|i| n[i] == n[i - 1] + 1).collect();
    let mut n_inv = vec![0usize; skeleton.len() + 1];
    for m in 1..=skeleton.len() {
        n_inv[m] = (1..=s.len()).find(|&i| n[i] == m).unwrap();
    }
    Profile { n, mask, n_inv }
}

/// Literal N_n per its defining supremum, recomputing every prefix pruning
/// from scratch. Reference implementation for differential tests only.
pub fn retained_profile_literal(s: &Path, fam: &LoopFamily) -> Vec<usize> {
    let skeleton = prune(s, fam);
    let prefixes: Vec<Path> = (0..=s.len()).map(|i| prune(&s.window(0, i), fam)).collect();
    let agree = |p: &Path| -> usize {
        let mut m = 0;
        while m + 1 <= p.len() && m + 1 <= skeleton.len() && p.point(m + 1) == skeleton.point(m + 1)
        {
            m += 1;
        }
        m
    };
    (0..=s.len())
        .map(|n| (n..=s.len()).map(|i| agree(&prefixes[i])).min().unwrap())
        .collect()
}

/// The loop-pruned decomposition: skeleton plus one rooted erased segment per
/// skeleton step (and a final one), invertible back to the original path.
#[derive(Clone, Debug)]
pub struct PrunedDecomposition {
    pub skeleton: Path,
    pub segments: Vec<Path>,
    pub profile: Profile,
}

pub fn decompose(s: &Path, fam: &LoopFamily) -> PrunedDecomposition {
    let profile = retained_profile(s, fam);
    let skeleton = prune(s, fam);
    let k = skeleton.len();
    let mut segments = Vec::with_capacity(k + 1);
    for m in 0..=k {
        let lo = profile.n_inv[m];
        let hi = if m < k { profile.n_inv[m + 1] - 1 } else { s.len() };
        segments.push(s.window_rooted(lo, hi));
    }
    PrunedDecomposition {
        skeleton,
        segments,
        profile,
    }
}

/// Exact inverse of `decompose`: re-insert each erased segment at its
/// skeleton step.
pub fn reinsert(dec: &PrunedDecomposition) -> Result<Path> {
    let k = dec.skeleton.len();
    if dec.segments.len() != k + 1 {
        return Err(Error::SegmentCountMismatch {
            got: dec.segments.len(),
            expected: k + 1,
        });
    }
    // Segment m covers the half-open creation window of skeleton step m+1;
    // the retained step to skeleton point m+1 is implicit between windows,
    // and the final closed window supplies the last point.
    let mut pts = Vec::new();
    for m in 0..=k {
        let seg = &dec.segments[m];
        if !seg.first().is_origin() {
            return Err(Error::IncompatibleSegment { index: m });
        }
        let base = *dec.skeleton.point(m);
        pts.extend(seg.points().iter().map(|p| p.add(&base)));
    }
    Path::validate(pts, false)
}

impl PrunedDecomposition {
    /// Full invariant check: the skeleton is pruned, every segment is
    /// erasable and compatible with its retained prefix, N is nondecreasing
    /// with unit increments exactly at retained steps, and reinsertion
    /// reproduces the original path. Quadratic; meant for tests.
    pub fn verify(&self, original: &Path, fam: &LoopFamily) -> Result<()> {
        if prune(&self.skeleton, fam) != self.skeleton {
            return Err(Error::PrefixNotPruned);
        }
        for (i, w) in self.profile.n.windows(2).enumerate() {
            let inc = w[1] as i64 - w[0] as i64;
            if !(0..=1).contains(&inc) || (inc == 1) != self.profile.mask[i] {
                return Err(Error::MalformedTree(format!(
                    "profile increment {} at step {}",
                    inc,
                    i + 1
                )));
            }
        }
        for (m, seg) in self.segments.iter().enumerate() {
            if !crate::segment::seg_membership(seg, fam, Some(&self.skeleton.window(0, m)))? {
                return Err(Error::IncompatibleSegment { index: m });
            }
        }
        let back = reinsert(self)?;
        if &back != original {
            return Err(Error::MalformedTree("reinsertion mismatch".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let pts = |p: &Path| -> Vec<Vec<i32>> {
            p.points().iter().map(|q| q.coords().to_vec()).collect()
        };
        serde_json::json!({
            "skeleton": pts(&self.skeleton),
            "segments": self.segments.iter().map(pts).collect::<Vec<_>>(),
            "N": self.profile.n,
        })
    }
}

/// Per-step pruning intervals over a window, with the convention that an
/// unpruned step gets (-inf, +inf), encoded as `None`.
#[derive(Clone, Debug)]
pub struct IntervalTable {
    /// Window as inclusive absolute point indices [lo, hi].
    pub window: (i64, i64),
    /// bounds[k] is for step `window.0 + 1 + k`.
    pub bounds: Vec<Option<(i64, i64)>>,
}

/// Forward/backward pruning times of every step of `s` (treated as the full
/// window `[base_idx, base_idx + |s|]`): a step erased at time t has
/// zeta_plus = t, and zeta_minus = the last retained step before it in the
/// pruning of the prefix up to t (window start when none survives).
pub fn interval_table(s: &Path, fam: &LoopFamily, base_idx: i64) -> IntervalTable {
    let lo = base_idx;
    let hi = base_idx + s.len() as i64;
    let mut bounds: Vec<Option<(i64, i64)>> = vec![None; s.len()];
    let mut session = PruneSession::new(fam, *s.point(0), lo);
    for i in 1..=s.len() {
        if let Some(pop) = session.push(*s.point(i), lo + i as i64) {
            let zeta_minus = pop.new_top.unwrap_or(lo);
            for idx in pop.popped {
                bounds[(idx - lo - 1) as usize] = Some((zeta_minus, pop.time));
            }
        }
    }
    IntervalTable {
        window: (lo, hi),
        bounds,
    }
}

/// The pruning interval of one step (absolute index `j`) of the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PruningInterval {
    pub j: i64,
    pub window: (i64, i64),
    /// `None` means the step is never pruned in the window: (-inf, +inf).
    pub bounds: Option<(i64, i64)>,
}

pub fn pruning_interval(j: i64, s: &Path, fam: &LoopFamily, base_idx: i64) -> Result<PruningInterval> {
    let table = interval_table(s, fam, base_idx);
    table.interval(j)
}

impl IntervalTable {
    pub fn interval(&self, j: i64) -> Result<PruningInterval> {
        if j <= self.window.0 || j > self.window.1 {
            return Err(Error::IndexOutOfRange {
                index: j.max(0) as usize,
                max: self.window.1 as usize,
            });
        }
        Ok(PruningInterval {
            j,
            window: self.window,
            bounds: self.bounds[(j - self.window.0 - 1) as usize],
        })
    }
}

/// Laminar relation of two pruning intervals for steps i < j.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PairClass {
    /// Interiors disjoint.
    Disjoint,
    /// zeta(j) strictly inside zeta(i), with i <= zeta_minus(j).
    C1,
    /// zeta(i) strictly inside zeta(j), with zeta_plus(i) <= j - 1.
    C2,
    /// Equal intervals.
    C3,
}

/// Classify a pair of pruning intervals computed on the same window, for
/// step indices a.j < b.j. Any crossing configuration is an engine bug and
/// comes back as an error.
pub fn classify_pair(a: &PruningInterval, b: &PruningInterval) -> Result<PairClass> {
    assert!(a.j < b.j, "classify_pair expects increasing step indices");
    assert_eq!(a.window, b.window, "intervals from different windows");
    match (a.bounds, b.bounds) {
        (None, None) => Ok(PairClass::C3),
        (None, Some((bm, _))) => {
            // zeta(b) strictly inside the full line; C1 side condition.
            if a.j <= bm {
                Ok(PairClass::C1)
            } else {
                Err(Error::CrossingIntervals)
            }
        }
        (Some((_, ap)), None) => {
            if ap <= b.j - 1 {
                Ok(PairClass::C2)
            } else {
                Err(Error::CrossingIntervals)
            }
        }
        (Some((am, ap)), Some((bm, bp))) => {
            if am == bm && ap == bp {
                return Ok(PairClass::C3);
            }
            if bm >= am && bp <= ap {
                return if a.j <= bm {
                    Ok(PairClass::C1)
                } else {
                    Err(Error::CrossingIntervals)
                };
            }
            if am >= bm && ap <= bp {
                return if ap <= b.j - 1 {
                    Ok(PairClass::C2)
                } else {
                    Err(Error::CrossingIntervals)
                };
            }
            if ap <= bm || bp <= am {
                return Ok(PairClass::Disjoint);
            }
            Err(Error::CrossingIntervals)
        }
    }
}

/// Window-certified cut steps: step i is marked iff it is retained in the
/// pruning of s[m1, m2] for every sub-window m1 < i <= m2 inside the stored
/// window. Checked exhaustively over all left endpoints; one left-anchored
/// run decides all right endpoints at once because pops are permanent.
#[derive(Clone, Debug)]
pub struct CutMask {
    pub window: (i64, i64),
    /// mask[k] is for step `window.0 + 1 + k`.
    pub mask: Vec<bool>,
}

pub fn cut_steps(s: &Path, fam: &LoopFamily, base_idx: i64) -> Result<CutMask> {
    if s.len() < 1 {
        return Err(Error::WindowTooSmall("cut mask needs at least one step".into()));
    }
    let n = s.len();
    let mut mask = vec![true; n];
    for m1 in 0..n {
        let mut session = PruneSession::new(fam, *s.point(m1), m1 as i64);
        for i in (m1 + 1)..=n {
            if let Some(pop) = session.push(*s.point(i), i as i64) {
                for idx in pop.popped {
                    mask[idx as usize - 1] = false;
                }
            }
        }
    }
    let lo = base_idx;
    Ok(CutMask {
        window: (lo, lo + n as i64),
        mask,
    })
}

impl CutMask {
    pub fn is_cut(&self, j: i64) -> bool {
        let k = j - self.window.0 - 1;
        k >= 0 && (k as usize) < self.mask.len() && self.mask[k as usize]
    }

    pub fn cut_indices(&self) -> Vec<i64> {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(k, _)| self.window.0 + 1 + k as i64)
            .collect()
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }
}

/// Result of patching finite-window prunings between certified cut steps.
#[derive(Clone, Debug)]
pub struct TwoSidedPrune {
    /// Retained step indices (absolute), chronological; includes the cut steps.
    pub retained: Vec<i64>,
    /// The retained steps concatenated into a path, anchored at the point
    /// entering the first cut step.
    pub skeleton: Path,
}

/// Two-sided pruning over a window: steps between consecutive certified cut
/// steps are retained iff they survive the finite-window pruning of that
/// span. Needs at least two cut steps; the region outside the outermost cut
/// steps is uncertifiable.
pub fn two_sided_prune(s: &Path, fam: &LoopFamily, base_idx: i64) -> Result<TwoSidedPrune> {
    let cuts = cut_steps(s, fam, base_idx)?;
    let cut_abs = cuts.cut_indices();
    if cut_abs.len() < 2 {
        return Err(Error::UncertifiableRegion);
    }
    let rel = |j: i64| (j - base_idx) as usize;
    let mut retained = vec![cut_abs[0]];
    for w in cut_abs.windows(2) {
        let (c0, c1) = (w[0], w[1]);
        let mut session = PruneSession::new(fam, *s.point(rel(c0)), c0);
        for i in (rel(c0) + 1)..=rel(c1) {
            session.push(*s.point(i), base_idx + i as i64);
        }
        retained.extend(session.retained_indices());
    }
    let mut pts = vec![*s.point(rel(retained[0]) - 1)];
    for &j in &retained {
        let inc = s.point(rel(j)).sub(s.point(rel(j) - 1));
        pts.push(pts.last().unwrap().add(&inc));
    }
    Ok(TwoSidedPrune {
        retained,
        skeleton: Path::validate(pts, false).unwrap(),
    })
}

/// Whether step `j` (absolute) is retained in the finite-window pruning of
/// `s[m1..=m2]` (absolute point indices relative to `base_idx`).
pub fn retained_in_window(
    s: &Path,
    fam: &LoopFamily,
    base_idx: i64,
    m1: i64,
    m2: i64,
    j: i64,
) -> bool {
    let rel = |x: i64| (x - base_idx) as usize;
    let mut session = PruneSession::new(fam, *s.point(rel(m1)), m1);
    for i in (rel(m1) + 1)..=rel(m2) {
        session.push(*s.point(i), base_idx + i as i64);
    }
    session.retained_indices().contains(&j)
}
