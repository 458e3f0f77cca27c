//! Conditional-law checks: the product form of the erased-segment law given
//! the skeleton prefix, and the stop probability at boundary seams.
//!
//! The conditioning event concerns the pruned path of the infinite walk; a
//! long-horizon surrogate stands in for it (a sample is accepted when the
//! skeleton prefix is certified stable within the simulated window), with the
//! horizon exposed so sensitivity reruns can triple it.

use crate::error::{Error, Result};
use crate::lattice::{path_probability, LoopFamily, Path, Point};
use crate::prune::{decompose, prune};
use crate::rng::CounterRng;
use crate::segment::{
    boundary_scan, enumerate_segments, es_of_segment, fiber_prefixes, truncated_data,
};
use crate::sim::{WalkConfig, Walker, ROLE_EXPERIMENT};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Draw certified conditioned samples: walks whose pruned path starts with
/// the given skeleton prefix (stable within the simulated window) and whose
/// first |s'|+1 erased segments are complete. Returns those segments.
fn sample_conditioned(
    fam: &LoopFamily,
    s_prime: &Path,
    cfg: &WalkConfig,
    n_samples: usize,
) -> Result<Vec<Vec<Path>>> {
    if &prune(s_prime, fam) != s_prime {
        return Err(Error::PrefixNotPruned);
    }
    let u = s_prime.len();
    let rows: Vec<Option<Vec<Path>>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut walker =
                Walker::new(cfg.d, CounterRng::new(cfg.seed, i as u64, ROLE_EXPERIMENT));
            let mut pts = Vec::with_capacity(cfg.horizon + 1);
            pts.push(Point::origin(cfg.d));
            for _ in 0..cfg.horizon {
                pts.push(walker.step());
            }
            let path = Path::validate(pts, true).unwrap();
            let dec = decompose(&path, fam);
            if dec.skeleton.len() < u + 1 {
                return None;
            }
            if dec.skeleton.points()[..=u] != s_prime.points()[..] {
                return None;
            }
            Some(dec.segments[..=u].to_vec())
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct SegmentLawReport {
    pub tv_distance: f64,
    pub n_conditioned: usize,
    pub n_in_class: usize,
    pub n_atoms: usize,
    pub horizon: usize,
}

/// Compare the empirical conditional law of the erased-segment tuple, over
/// the per-segment-capped truncated class, against the normalized product of
/// path probabilities.
pub fn segment_law_check(
    fam: &LoopFamily,
    s_prime: &Path,
    cap: usize,
    cfg: &WalkConfig,
    n_samples: usize,
) -> Result<SegmentLawReport> {
    if s_prime.len() > 2 || cap > 6 {
        return Err(Error::BudgetExceeded(
            "segment-law check capped at |s'| <= 2, segment cap <= 6".into(),
        ));
    }
    let u = s_prime.len();
    let options: Vec<Vec<Path>> = (0..=u)
        .map(|k| enumerate_segments(fam, cap, Some(&s_prime.window(0, k))))
        .collect::<Result<Vec<_>>>()?;
    // The truncated class and its product weights.
    let mut atoms: Vec<Vec<usize>> = vec![Vec::new()];
    for opts in &options {
        let mut next = Vec::new();
        for prefix in &atoms {
            for idx in 0..opts.len() {
                let mut t = prefix.clone();
                t.push(idx);
                next.push(t);
            }
        }
        atoms = next;
    }
    let weight_of = |tuple: &[usize]| -> f64 {
        let mut w = 0.0;
        for (k, &idx) in tuple.iter().enumerate() {
            w += path_probability(&options[k][idx], fam.dim()).unwrap().ln();
        }
        w.exp()
    };
    let weights: Vec<f64> = atoms.iter().map(|t| weight_of(t)).collect();
    let total: f64 = weights.iter().sum();

    let samples = sample_conditioned(fam, s_prime, cfg, n_samples)?;
    if samples.is_empty() {
        return Err(Error::ConditioningTooRare);
    }
    let mut lookup: Vec<BTreeMap<&[Point], usize>> = Vec::new();
    for opts in &options {
        let mut m = BTreeMap::new();
        for (i, p) in opts.iter().enumerate() {
            m.insert(p.points(), i);
        }
        lookup.push(m);
    }
    let mut counts = vec![0u64; atoms.len()];
    let mut in_class = 0u64;
    for segs in &samples {
        let mut tuple = Vec::with_capacity(u + 1);
        let mut ok = true;
        for (k, seg) in segs.iter().enumerate() {
            match lookup[k].get(seg.points()) {
                Some(&i) => tuple.push(i),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            in_class += 1;
            let idx = atoms.iter().position(|a| a == &tuple).unwrap();
            counts[idx] += 1;
        }
    }
    if in_class == 0 {
        return Err(Error::ConditioningTooRare);
    }
    let tv_distance = 0.5
        * weights
            .iter()
            .zip(counts.iter())
            .map(|(w, c)| (w / total - *c as f64 / in_class as f64).abs())
            .sum::<f64>();
    Ok(SegmentLawReport {
        tv_distance,
        n_conditioned: samples.len(),
        n_in_class: in_class as usize,
        n_atoms: atoms.len(),
        horizon: cfg.horizon,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StopAtom {
    pub key: String,
    pub hits: usize,
    pub next_zero: usize,
    pub p_hat: f64,
    pub stderr: f64,
    pub ok: bool,
    /// 1 / (capped denominator of the admissible class), when enumerable.
    pub analytic_lower: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StopProbReport {
    pub n_conditioned: usize,
    pub gamma_ref: f64,
    pub min_hits: usize,
    pub atoms: Vec<StopAtom>,
    pub all_ok: bool,
    pub analytic_ok: bool,
    pub horizon: usize,
}

/// At every realized conditioning atom (skeleton prefix, earlier segments,
/// boundary seam with its truncated exploration data), the frequency of "no
/// further block" must beat gamma within 3 binomial standard errors; the
/// capped-denominator analytic bound is evaluated alongside.
pub fn stop_prob_check(
    fam: &LoopFamily,
    s_prime: &Path,
    cap: usize,
    cfg: &WalkConfig,
    n_samples: usize,
    min_hits: usize,
    gamma_ref: f64,
) -> Result<StopProbReport> {
    if s_prime.len() > 2 || cap > 6 {
        return Err(Error::BudgetExceeded(
            "stop-probability check capped at |s'| <= 2, cap <= 6".into(),
        ));
    }
    let u = s_prime.len();
    let samples = sample_conditioned(fam, s_prime, cfg, n_samples)?;
    if samples.is_empty() {
        return Err(Error::ConditioningTooRare);
    }
    // Atom key -> (hits, next-zero hits, representative (i, fiber data)).
    let mut tally: BTreeMap<String, (usize, usize, usize, crate::segment::FiberData)> =
        BTreeMap::new();
    for segs in &samples {
        let mut history = String::new();
        for i in 0..=u {
            let rep = es_of_segment(&segs[i], fam)?;
            for b in boundary_scan(&rep, fam)? {
                let h = truncated_data(&rep, fam, &b.addr)?;
                let key = format!("i={};hist=[{}];{}", i, history, h.canonical_key());
                let entry = tally.entry(key).or_insert_with(|| (0, 0, i, h.clone()));
                entry.0 += 1;
                if b.next == 0 {
                    entry.1 += 1;
                }
            }
            history.push_str(&serde_json::to_string(&rep.to_json()).unwrap());
            history.push('|');
        }
    }
    let mut atoms = Vec::new();
    let mut all_ok = true;
    let mut analytic_ok = true;
    for (key, (hits, next_zero, i, h)) in tally {
        if hits < min_hits {
            continue;
        }
        let p_hat = next_zero as f64 / hits as f64;
        let stderr = (p_hat * (1.0 - p_hat) / hits as f64).sqrt();
        let ok = p_hat >= gamma_ref - 3.0 * stderr;
        all_ok &= ok;
        // Analytic denominator over the capped admissible class
        // Seg(s'[0,i] o_t pi_par, E): its reciprocal lower-bounds the stop
        // probability and must itself clear gamma.
        let analytic_lower = match fiber_prefixes(&h, fam) {
            Ok((_, _, pi_par, _)) => {
                let class_prefix = s_prime.window(0, i).concat_translated(&pi_par)?;
                let members = enumerate_segments(fam, cap, Some(&class_prefix))?;
                let denom: f64 = members
                    .iter()
                    .map(|eta| path_probability(eta, fam.dim()).unwrap().ln().exp())
                    .sum();
                let lower = 1.0 / denom;
                analytic_ok &= lower >= gamma_ref - 3.0 * stderr.max(0.01);
                Some(lower)
            }
            Err(_) => None,
        };
        atoms.push(StopAtom {
            key,
            hits,
            next_zero,
            p_hat,
            stderr,
            ok,
            analytic_lower,
        });
    }
    if atoms.is_empty() {
        return Err(Error::ConditioningTooRare);
    }
    Ok(StopProbReport {
        n_conditioned: samples.len(),
        gamma_ref,
        min_hits,
        atoms,
        all_ok,
        analytic_ok,
        horizon: cfg.horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1() -> LoopFamily {
        LoopFamily::back_and_forth(3, 0)
    }

    fn s_u2() -> Path {
        Path::validate(vec![Point::origin(3), Point::unit(3, 1, true)], true).unwrap()
    }

    #[test]
    fn segment_law_close_to_product_form() {
        let fam = e1();
        let cfg = WalkConfig::new(3, 41, 160);
        let rep = segment_law_check(&fam, &s_u2(), 2, &cfg, 60_000).unwrap();
        assert!(rep.n_in_class > 2_000, "in-class {}", rep.n_in_class);
        assert!(rep.tv_distance < 0.05, "tv {}", rep.tv_distance);
        assert_eq!(rep.n_atoms, 4);
    }

    #[test]
    fn segment_law_degenerate_cap_zero() {
        let fam = e1();
        let cfg = WalkConfig::new(3, 42, 120);
        let rep = segment_law_check(&fam, &s_u2(), 0, &cfg, 20_000).unwrap();
        assert_eq!(rep.n_atoms, 1);
        assert_eq!(rep.tv_distance, 0.0);
    }

    #[test]
    fn segment_law_symmetric_in_skeleton_direction() {
        let fam = e1();
        let cfg = WalkConfig::new(3, 43, 160);
        let a = segment_law_check(&fam, &s_u2(), 2, &cfg, 50_000).unwrap();
        let s_u3 = Path::validate(vec![Point::origin(3), Point::unit(3, 2, true)], true).unwrap();
        let b = segment_law_check(&fam, &s_u3, 2, &cfg, 50_000).unwrap();
        assert!(
            (a.tv_distance - b.tv_distance).abs() < 0.05,
            "tv {} vs {}",
            a.tv_distance,
            b.tv_distance
        );
    }

    #[test]
    fn stop_probability_beats_gamma() {
        let fam = e1();
        let cfg = WalkConfig::new(3, 44, 160);
        let rep = stop_prob_check(&fam, &s_u2(), 4, &cfg, 40_000, 300, 0.6595).unwrap();
        assert!(!rep.atoms.is_empty());
        assert!(rep.all_ok, "atoms: {:?}", rep.atoms);
        assert!(rep.analytic_ok);
        // The trivial-history atom is the most frequent one.
        assert!(rep.atoms.iter().any(|a| a.hits > 1_000));
    }

    #[test]
    fn conditioning_too_rare_is_an_error() {
        let fam = e1();
        // A skeleton prefix the tiny budget never certifies.
        let far = Path::validate(
            vec![
                Point::origin(3),
                Point::unit(3, 1, true),
                Point::new(&[0, 1, 1]).unwrap(),
            ],
            true,
        )
        .unwrap();
        let cfg = WalkConfig::new(3, 45, 40);
        assert!(matches!(
            segment_law_check(&fam, &far, 2, &cfg, 3),
            Err(Error::ConditioningTooRare) | Ok(_)
        ));
    }
}
