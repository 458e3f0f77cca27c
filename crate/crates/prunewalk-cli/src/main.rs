//! Command-line front end: configuration, subcommands, deterministic report
//! emission.
//!
//! Exit codes: 0 all assertions pass, 1 assertion failure, 2 configuration
//! error, 3 budget exceeded.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use prunewalk::experiments::conditional::{segment_law_check, stop_prob_check};
use prunewalk::experiments::density::{
    cut_and_rod_density, estimate_kappa, pruned_local_time_tail,
};
use prunewalk::experiments::necessary::{necessary_condition_check, Verdict};
use prunewalk::experiments::pattern::{
    binomial, count_patterns_recursive, enumerate_patterns, lambda_lists, stack_simulation,
};
use prunewalk::experiments::rod::{
    planted_adversarial_window, planted_pure_rod, rod_structure_check, RodConfig, RodLayout,
};
use prunewalk::experiments::strategy::{strategy_run, Plugins, StrategyParams};
use prunewalk::lattice::path_probability;
use prunewalk::prune::{decompose, prune, reinsert};
use prunewalk::report::{fmt_f64, to_json_bytes, CsvTable};
use prunewalk::segment::{es_decode, es_of_segment, segment_of_tree, tree_of_segment};
use prunewalk::sim::{
    estimate_gamma, estimate_gamma_sweep, estimate_vartheta, harvest_loop_family, WalkConfig,
};
use prunewalk::{Error, LoopFamily, Path, Point};
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "prunewalk",
    version,
    about = "Loop pruning for lattice paths and its random-walk harness",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct FamilyOpt {
    /// Loop-family JSON file; defaults to the one-loop up-down family.
    #[arg(long)]
    family: Option<PathBuf>,
    /// Ambient dimension for the default family.
    #[arg(long, default_value_t = 3)]
    d: usize,
}

impl FamilyOpt {
    fn load(&self) -> anyhow::Result<LoopFamily> {
        match &self.family {
            None => Ok(LoopFamily::back_and_forth(self.d, 0)),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading family file {}", p.display()))?;
                Ok(LoopFamily::from_json_str(&text)?)
            }
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Prune a path: emit the skeleton, the erased segments, and the
    /// retained profile, verifying reinsertion.
    Prune {
        /// Path JSON file: {"d": int, "points": [[int,...],...]}.
        #[arg(long)]
        path: PathBuf,
        #[command(flatten)]
        family: FamilyOpt,
    },
    /// Canonical-tree codec round trip for an erasable path.
    Tree {
        #[arg(long)]
        path: PathBuf,
        #[command(flatten)]
        family: FamilyOpt,
    },
    /// Elementary-sequence codec round trip for an erasable path.
    Es {
        #[arg(long)]
        path: PathBuf,
        #[command(flatten)]
        family: FamilyOpt,
    },
    /// List the erasable segments up to a length cap, with counts by length.
    Enumerate {
        #[command(flatten)]
        family: FamilyOpt,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
    },
    /// Monte Carlo estimates.
    Estimate {
        #[command(subcommand)]
        which: EstimateCmd,
    },
    /// Empirical and deterministic experiment suites.
    Experiment {
        #[command(subcommand)]
        which: ExperimentCmd,
    },
    /// Deterministic invariant suite; exit 0 iff everything passes.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum EstimateCmd {
    /// Escape probability by horizon censoring.
    Gamma {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 100_000)]
        horizon: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Extra horizons for a shared-sample consistency sweep.
        #[arg(long, num_args = 0.., value_delimiter = ',')]
        sweep: Vec<usize>,
    },
    /// Retained-step density of the pruned walk.
    Kappa {
        #[command(flatten)]
        family: FamilyOpt,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Window-certified cut and rod densities over two-sided windows.
    Theta {
        #[command(flatten)]
        family: FamilyOpt,
        #[arg(long, default_value_t = 10_000)]
        half_window: usize,
        #[arg(long, default_value_t = 50)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// First-excursion erasability mass.
    Vartheta {
        #[command(flatten)]
        family: FamilyOpt,
        #[arg(long, default_value_t = 20_000)]
        horizon: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Harvest a family at this eps first and estimate for it.
        #[arg(long)]
        eps: Option<f64>,
    },
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Seeded strategy replays with the suppression soundness checks.
    Strategy {
        #[command(flatten)]
        family: FamilyOpt,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// u_n drift coefficient; defaults to kappa/2.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 0.8)]
        a: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        runs: usize,
        /// Plug-in alpha; estimated when omitted.
        #[arg(long)]
        alpha: Option<f64>,
        /// Plug-in kappa; estimated when omitted.
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Rod-structure sweep over planted and random windows.
    Rod {
        #[command(flatten)]
        family: FamilyOpt,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        windows: usize,
        #[arg(long, default_value_t = 12)]
        rods: usize,
    },
    /// Conditional stop-probability check at boundary seams.
    StopProb {
        #[command(flatten)]
        family: FamilyOpt,
        #[arg(long, default_value_t = 160)]
        horizon: usize,
        #[arg(long, default_value_t = 40_000)]
        samples: usize,
        #[arg(long, default_value_t = 500)]
        min_hits: usize,
        #[arg(long, default_value_t = 4)]
        cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Conditional segment-law check against the product weights.
    SegmentLaw {
        #[command(flatten)]
        family: FamilyOpt,
        #[arg(long, default_value_t = 160)]
        horizon: usize,
        #[arg(long, default_value_t = 60_000)]
        samples: usize,
        #[arg(long, default_value_t = 2)]
        cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Return-pattern combinatorics: counts, bound, stack/list equivalence.
    Pattern {
        #[arg(long, default_value_t = 6)]
        r: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
    },
    /// Necessary-condition witness sweep over planted adversarial windows.
    Necessary {
        #[command(flatten)]
        family: FamilyOpt,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 20)]
        windows: usize,
        #[arg(long, default_value_t = 18)]
        rods: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Pruned local time of the origin: survival curve (CSV-friendly).
    Tail {
        #[command(flatten)]
        family: FamilyOpt,
        #[arg(long, default_value_t = 20_000)]
        n: usize,
        #[arg(long, default_value_t = 400)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct Report<C: Serialize, A: Serialize> {
    experiment: String,
    config: C,
    per_seed: Vec<serde_json::Value>,
    aggregate: A,
    failures: Vec<String>,
}

fn read_path_file(p: &PathBuf) -> anyhow::Result<Path> {
    #[derive(serde::Deserialize)]
    struct PathFile {
        d: usize,
        points: Vec<Vec<i32>>,
    }
    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    let file: PathFile = serde_json::from_str(&text)?;
    let pts = file
        .points
        .iter()
        .map(|row| {
            if row.len() != file.d {
                Err(Error::DimensionMismatch {
                    expected: file.d,
                    got: row.len(),
                    index: 0,
                })
            } else {
                Point::new(row)
            }
        })
        .collect::<prunewalk::Result<Vec<_>>>()?;
    Ok(Path::validate(pts, false)?)
}

fn emit(cli_out: &Option<PathBuf>, bytes: &[u8]) -> anyhow::Result<()> {
    match cli_out {
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
        Some(p) => {
            std::fs::write(p, bytes).with_context(|| format!("writing report to {}", p.display()))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.cmd {
        Cmd::Prune { path, family } => {
            let fam = family.load()?;
            let p = read_path_file(&path)?;
            let dec = decompose(&p, &fam);
            let back = reinsert(&dec)?;
            if back != p {
                return Err(anyhow!("reinsertion failed to reproduce the input path"));
            }
            emit(&cli.out, &to_json_bytes(&dec.to_json())?)?;
            Ok(true)
        }
        Cmd::Tree { path, family } => {
            let fam = family.load()?;
            let p = read_path_file(&path)?;
            let tree = tree_of_segment(&p, &fam)?;
            let back = segment_of_tree(&tree, &fam)?;
            if back != p {
                return Err(anyhow!("tree codec round trip failed"));
            }
            emit(&cli.out, &to_json_bytes(&tree.to_json())?)?;
            Ok(true)
        }
        Cmd::Es { path, family } => {
            let fam = family.load()?;
            let p = read_path_file(&path)?;
            let rep = es_of_segment(&p, &fam)?;
            let tree = es_decode(&rep, &fam)?;
            let back = segment_of_tree(&tree, &fam)?;
            if back != p {
                return Err(anyhow!("elementary-sequence codec round trip failed"));
            }
            emit(&cli.out, &to_json_bytes(&rep.to_json())?)?;
            Ok(true)
        }
        Cmd::Enumerate { family, max_len } => {
            let fam = family.load()?;
            let segs = prunewalk::segment::enumerate_segments(&fam, max_len, None)?;
            let mut counts = vec![0usize; max_len + 1];
            for s in &segs {
                counts[s.len()] += 1;
            }
            let listing: Vec<Vec<Vec<i32>>> = segs
                .iter()
                .map(|s| s.points().iter().map(|q| q.coords().to_vec()).collect())
                .collect();
            let out = json!({
                "family": fam.to_json(),
                "max_len": max_len,
                "counts_by_length": counts,
                "total": segs.len(),
                "segments": listing,
            });
            emit(&cli.out, &to_json_bytes(&out)?)?;
            Ok(true)
        }
        Cmd::Estimate { which } => run_estimate(which, &cli.out, cli.format),
        Cmd::Experiment { which } => run_experiment(which, &cli.out, cli.format),
        Cmd::Selftest { seed } => selftest(seed),
    }
}

fn run_estimate(cmd: EstimateCmd, out: &Option<PathBuf>, format: Format) -> anyhow::Result<bool> {
    match cmd {
        EstimateCmd::Gamma {
            d,
            horizon,
            samples,
            seed,
            sweep,
        } => {
            let cfg = WalkConfig::new(d, seed, horizon);
            if format == Format::Csv {
                let est = estimate_gamma(&cfg, samples)?;
                let mut table = CsvTable::new(&["horizon", "gamma_hat", "stderr", "n"]);
                table.push_row(vec![
                    est.horizon.to_string(),
                    fmt_f64(est.gamma_hat),
                    fmt_f64(est.stderr),
                    est.n_samples.to_string(),
                ]);
                emit(out, &table.to_bytes())?;
                return Ok(true);
            }
            let report = if sweep.is_empty() {
                let est = estimate_gamma(&cfg, samples)?;
                json!({
                    "experiment": "estimate-gamma",
                    "config": {"d": d, "horizon": horizon, "samples": samples, "seed": seed},
                    "estimate": est.gamma_hat,
                    "alpha_hat": est.alpha_hat,
                    "stderr": est.stderr,
                    "n": est.n_samples,
                    "horizon": est.horizon,
                    "seed": seed,
                    "note": "horizon censoring inflates the estimate; the true value is the decreasing limit in the horizon",
                })
            } else {
                let mut horizons = sweep.clone();
                horizons.push(horizon);
                horizons.sort_unstable();
                horizons.dedup();
                let ests = estimate_gamma_sweep(&cfg, samples, &horizons)?;
                json!({
                    "experiment": "estimate-gamma-sweep",
                    "config": {"d": d, "horizons": horizons, "samples": samples, "seed": seed},
                    "estimates": ests,
                    "note": "shared samples; the curve is monotone in the horizon by construction",
                })
            };
            emit(out, &to_json_bytes(&report)?)?;
            Ok(true)
        }
        EstimateCmd::Kappa {
            family,
            n,
            seeds,
            seed,
        } => {
            let fam = family.load()?;
            let cfg = WalkConfig::new(fam.dim(), seed, n);
            let rep = estimate_kappa(&fam, &cfg, seeds, &[n / 100, n / 10])?;
            let out_json = json!({
                "experiment": "estimate-kappa",
                "config": {"d": fam.dim(), "n": n, "seeds": seeds, "seed": seed, "family": fam.to_json()},
                "estimate": rep.kappa_hat,
                "stderr": rep.stderr,
                "n": n,
                "horizon": n,
                "seed": seed,
                "report": rep,
            });
            emit(out, &to_json_bytes(&out_json)?)?;
            Ok(true)
        }
        EstimateCmd::Theta {
            family,
            half_window,
            seeds,
            seed,
            k,
        } => {
            let fam = family.load()?;
            let cfg = WalkConfig::new(fam.dim(), seed, 0);
            let rep = cut_and_rod_density(&fam, RodConfig::new(0, k), &cfg, half_window, seeds)?;
            let ok = rep.containment_ok;
            let out_json = json!({
                "experiment": "estimate-theta",
                "config": {"d": fam.dim(), "half_window": half_window, "seeds": seeds, "seed": seed, "k": k, "family": fam.to_json()},
                "estimate": rep.theta_cut_mean,
                "stderr": rep.theta_cut_cv * rep.theta_cut_mean / (seeds as f64).sqrt(),
                "n": seeds,
                "horizon": 2 * half_window,
                "seed": seed,
                "report": rep,
            });
            emit(out, &to_json_bytes(&out_json)?)?;
            Ok(ok)
        }
        EstimateCmd::Vartheta {
            family,
            horizon,
            samples,
            seed,
            eps,
        } => {
            let fam = match eps {
                None => family.load()?,
                Some(e) => {
                    let cfg = WalkConfig::new(family.d, seed, horizon);
                    harvest_loop_family(e, &cfg, samples)?
                }
            };
            let cfg = WalkConfig::new(fam.dim(), seed, horizon);
            let est = estimate_vartheta(&fam, &cfg, samples)?;
            let out_json = json!({
                "experiment": "estimate-vartheta",
                "config": {"d": fam.dim(), "horizon": horizon, "samples": samples, "seed": seed, "eps": eps, "family": fam.to_json()},
                "estimate": est.value,
                "stderr": est.stderr,
                "n": est.n_effective,
                "horizon": horizon,
                "seed": seed,
            });
            emit(out, &to_json_bytes(&out_json)?)?;
            Ok(true)
        }
    }
}

fn run_experiment(
    cmd: ExperimentCmd,
    out: &Option<PathBuf>,
    format: Format,
) -> anyhow::Result<bool> {
    match cmd {
        ExperimentCmd::Strategy {
            family,
            n,
            beta,
            delta,
            a,
            seed,
            runs,
            alpha,
            kappa,
        } => {
            let fam = family.load()?;
            let alpha_hat = match alpha {
                Some(x) => x,
                None => {
                    estimate_gamma(&WalkConfig::new(fam.dim(), seed, 20_000), 20_000)?.alpha_hat
                }
            };
            let kappa_hat = match kappa {
                Some(x) => x,
                None => {
                    estimate_kappa(&fam, &WalkConfig::new(fam.dim(), seed, 20_000), 24, &[])?
                        .kappa_hat
                }
            };
            let plugins = Plugins {
                alpha_hat,
                kappa_hat,
            };
            let delta = delta.unwrap_or(kappa_hat / 2.0);
            let mut per_seed = Vec::new();
            let mut failures = Vec::new();
            let mut g_count = 0usize;
            for r in 0..runs {
                let params = StrategyParams {
                    n,
                    beta,
                    delta,
                    a,
                    seed: seed.wrapping_add(r as u64),
                };
                let run = strategy_run(&fam, &params, &plugins)?;
                if run.g_n {
                    g_count += 1;
                    if !run.overflow_ok {
                        failures.push(format!("run {}: overflow above the level on G_n", r));
                    }
                }
                if !run.first_critical_ok {
                    failures.push(format!("run {}: first-critical equality failed", r));
                }
                if run.mn_bound_checked && !run.mn_bound_ok {
                    failures.push(format!("run {}: exceptional-pair bound failed", r));
                }
                per_seed.push(serde_json::to_value(&run)?);
            }
            let ok = failures.is_empty();
            let report = Report {
                experiment: "strategy".into(),
                config: json!({"n": n, "beta": beta, "delta": delta, "a": a, "seed": seed, "runs": runs, "plugins": plugins, "family": fam.to_json()}),
                per_seed,
                aggregate: json!({"g_n_count": g_count, "runs": runs}),
                failures,
            };
            emit(out, &to_json_bytes(&report)?)?;
            Ok(ok)
        }
        ExperimentCmd::Rod {
            family,
            k,
            seed,
            windows,
            rods,
        } => {
            let fam = family.load()?;
            let cfg = RodConfig::new(0, k);
            let mut per_seed = Vec::new();
            let mut failures = Vec::new();
            let mut rods_checked = 0usize;
            for w in 0..windows {
                let (path, base) = if w % 2 == 0 {
                    planted_adversarial_window(&fam, cfg, rods, seed, w as u64)
                } else {
                    planted_pure_rod(&fam, cfg, 2 * rods)
                };
                let layout = RodLayout::new(&path, base, &fam, cfg)?;
                let rep = rod_structure_check(&layout)?;
                rods_checked += rep.rods_checked;
                for v in &rep.violations {
                    failures.push(format!("window {}: {}", w, v));
                }
                per_seed.push(serde_json::to_value(&rep)?);
            }
            let ok = failures.is_empty();
            let report = Report {
                experiment: "rod-structure".into(),
                config: json!({"k": k, "seed": seed, "windows": windows, "rods": rods, "family": fam.to_json()}),
                per_seed,
                aggregate: json!({"rods_checked": rods_checked}),
                failures,
            };
            emit(out, &to_json_bytes(&report)?)?;
            Ok(ok)
        }
        ExperimentCmd::StopProb {
            family,
            horizon,
            samples,
            min_hits,
            cap,
            seed,
        } => {
            let fam = family.load()?;
            let gamma = estimate_gamma(&WalkConfig::new(fam.dim(), seed, 20_000), 20_000)?;
            let s_prime = Path::validate(
                vec![Point::origin(fam.dim()), Point::unit(fam.dim(), 1, true)],
                true,
            )?;
            let cfg = WalkConfig::new(fam.dim(), seed, horizon);
            let rep =
                stop_prob_check(&fam, &s_prime, cap, &cfg, samples, min_hits, gamma.gamma_hat)?;
            let ok = rep.all_ok && rep.analytic_ok;
            let mut failures = Vec::new();
            for atom in rep.atoms.iter().filter(|a| !a.ok) {
                failures.push(format!("atom {} below gamma: {}", atom.key, atom.p_hat));
            }
            let report = Report {
                experiment: "stop-prob".into(),
                config: json!({"horizon": horizon, "samples": samples, "min_hits": min_hits, "cap": cap, "seed": seed, "gamma_ref": gamma.gamma_hat, "family": fam.to_json()}),
                per_seed: vec![serde_json::to_value(&rep)?],
                aggregate: json!({"atoms": rep.atoms.len(), "all_ok": rep.all_ok, "analytic_ok": rep.analytic_ok}),
                failures,
            };
            emit(out, &to_json_bytes(&report)?)?;
            Ok(ok)
        }
        ExperimentCmd::SegmentLaw {
            family,
            horizon,
            samples,
            cap,
            seed,
        } => {
            let fam = family.load()?;
            let s_prime = Path::validate(
                vec![Point::origin(fam.dim()), Point::unit(fam.dim(), 1, true)],
                true,
            )?;
            let cfg = WalkConfig::new(fam.dim(), seed, horizon);
            let rep = segment_law_check(&fam, &s_prime, cap, &cfg, samples)?;
            let ok = rep.tv_distance < 0.05;
            let report = Report {
                experiment: "segment-law".into(),
                config: json!({"horizon": horizon, "samples": samples, "cap": cap, "seed": seed, "family": fam.to_json()}),
                per_seed: vec![serde_json::to_value(&rep)?],
                aggregate: json!({"tv_distance": rep.tv_distance}),
                failures: if ok {
                    vec![]
                } else {
                    vec![format!("total variation {} above 0.05", rep.tv_distance)]
                },
            };
            emit(out, &to_json_bytes(&report)?)?;
            Ok(ok)
        }
        ExperimentCmd::Pattern { r, k } => {
            let mut failures = Vec::new();
            let mut rows = Vec::new();
            for rr in 1..=r {
                for kk in 1..=k {
                    let pats = enumerate_patterns(rr, kk)?;
                    let rec = count_patterns_recursive(rr, kk);
                    let bound = binomial((kk * rr + rr) as u64, rr as u64);
                    if pats.len() as u128 != rec {
                        failures.push(format!("count mismatch at r={} K={}", rr, kk));
                    }
                    if pats.len() as u128 > bound {
                        failures.push(format!("bound violated at r={} K={}", rr, kk));
                    }
                    if rr <= 4 && kk <= 3 {
                        let j: Vec<usize> = (1..=rr).collect();
                        for a in &pats {
                            if lambda_lists(&j, kk, a)? != stack_simulation(&j, kk, a)? {
                                failures.push(format!(
                                    "stack/list mismatch at r={} K={} a={:?}",
                                    rr, kk, a
                                ));
                            }
                        }
                    }
                    rows.push(
                        json!({"r": rr, "k": kk, "count": pats.len(), "bound": bound.to_string()}),
                    );
                }
            }
            let ok = failures.is_empty();
            let report = Report {
                experiment: "pattern".into(),
                config: json!({"r": r, "k": k}),
                per_seed: rows,
                aggregate: json!({"ok": ok}),
                failures,
            };
            emit(out, &to_json_bytes(&report)?)?;
            Ok(ok)
        }
        ExperimentCmd::Necessary {
            family,
            k,
            windows,
            rods,
            seed,
        } => {
            let fam = family.load()?;
            let cfg = RodConfig::new(0, k);
            let mut per_seed = Vec::new();
            let mut failures = Vec::new();
            let mut witnesses = 0usize;
            let mut not_applicable = 0usize;
            for w in 0..windows {
                let (path, base) = planted_adversarial_window(&fam, cfg, rods, seed, w as u64);
                let layout = RodLayout::new(&path, base, &fam, cfg)?;
                let verdict = necessary_condition_check(&layout, 0.0)?;
                match &verdict {
                    Verdict::Witness(_) => witnesses += 1,
                    Verdict::NotApplicable { .. } => not_applicable += 1,
                    Verdict::Counterexample { reason } => {
                        failures.push(format!("window {}: {}", w, reason))
                    }
                }
                per_seed.push(serde_json::to_value(&verdict)?);
            }
            let ok = failures.is_empty();
            let report = Report {
                experiment: "necessary-condition".into(),
                config: json!({"k": k, "windows": windows, "rods": rods, "seed": seed, "family": fam.to_json()}),
                per_seed,
                aggregate: json!({"witnesses": witnesses, "not_applicable": not_applicable}),
                failures,
            };
            emit(out, &to_json_bytes(&report)?)?;
            Ok(ok)
        }
        ExperimentCmd::Tail {
            family,
            n,
            seeds,
            seed,
        } => {
            let fam = family.load()?;
            let cfg = WalkConfig::new(fam.dim(), seed, n);
            let grid: Vec<u32> = (0..16).collect();
            let rep = pruned_local_time_tail(&fam, &cfg, seeds, &grid)?;
            if format == Format::Csv {
                let mut table = CsvTable::new(&["t", "survival", "stderr"]);
                for (t, s, e) in &rep.survival {
                    table.push_row(vec![t.to_string(), fmt_f64(*s), fmt_f64(*e)]);
                }
                emit(out, &table.to_bytes())?;
            } else {
                let report = Report {
                    experiment: "tail".into(),
                    config: json!({"n": n, "seeds": seeds, "seed": seed, "family": fam.to_json()}),
                    per_seed: rep.samples.iter().map(|s| json!(s)).collect(),
                    aggregate: json!({"survival": rep.survival}),
                    failures: vec![],
                };
                emit(out, &to_json_bytes(&report)?)?;
            }
            Ok(true)
        }
    }
}

fn selftest(seed: u64) -> anyhow::Result<bool> {
    use prunewalk::prune::{classify_pair, interval_table};
    use prunewalk::rng::CounterRng;
    use prunewalk::sim::Walker;

    let mut ok_all = true;
    let mut check = |name: &str, ok: bool| {
        println!("[{}] {}", if ok { "PASS" } else { "FAIL" }, name);
        ok_all &= ok;
    };
    let fam = LoopFamily::back_and_forth(3, 0);
    let rich = LoopFamily::all_back_and_forth(3);

    // Pruning idempotence, staging, decomposition, and laminarity over
    // seeded random paths.
    let mut idem = true;
    let mut staging = true;
    let mut round = true;
    let mut laminar = true;
    for i in 0..200u64 {
        let mut walker = Walker::new(3, CounterRng::new(seed, i, 7));
        let mut pts = vec![Point::origin(3)];
        for _ in 0..120 {
            pts.push(walker.step());
        }
        let path = Path::validate(pts, true)?;
        for f in [&fam, &rich] {
            let once = prune(&path, f);
            idem &= prune(&once, f) == once;
            for m in (10..path.len()).step_by(17) {
                let head = prune(&path.window(0, m), f);
                let glued = head.concat_direct(&path.window(m, path.len()))?;
                staging &= prune(&glued, f) == once;
            }
            let dec = decompose(&path, f);
            round &= reinsert(&dec)? == path;
            let table = interval_table(&path, f, 0);
            let ivs: Vec<_> = (1..=path.len() as i64)
                .map(|j| table.interval(j).unwrap())
                .collect();
            for x in 0..ivs.len() {
                for y in (x + 1)..ivs.len() {
                    laminar &= classify_pair(&ivs[x], &ivs[y]).is_ok();
                }
            }
        }
    }
    check("prune idempotence", idem);
    check("staged pruning equality", staging);
    check("decompose/reinsert identity", round);
    check("pruning intervals laminar", laminar);

    // Segment counts and codec round trips.
    let segs = prunewalk::segment::enumerate_segments(&fam, 8, None)?;
    let mut counts = vec![0usize; 9];
    for s in &segs {
        counts[s.len()] += 1;
    }
    check(
        "segment counts 1,1,2,5,14 by length 0..8",
        counts[0] == 1 && counts[2] == 1 && counts[4] == 2 && counts[6] == 5 && counts[8] == 14,
    );
    let mut codecs = true;
    for eta in &segs {
        let tree = tree_of_segment(eta, &fam)?;
        codecs &= &segment_of_tree(&tree, &fam)? == eta;
        let rep = es_of_segment(eta, &fam)?;
        codecs &= segment_of_tree(&es_decode(&rep, &fam)?, &fam)? == *eta;
    }
    check("tree and sequence codecs round-trip", codecs);

    // Weights multiply along insertions.
    let eta = Path::validate(vec![Point::origin(3), Point::unit(3, 1, true)], true)?;
    let e = &fam.loops()[0];
    let grown = eta.insert_loop(1, e)?;
    let prod = path_probability(&eta, 3)?.mul(&path_probability(e.path(), 3)?);
    check(
        "path weights multiply under insertion",
        path_probability(&grown, 3)? == prod,
    );

    // Pattern combinatorics.
    let mut pattern_ok = true;
    for r in 1..=4 {
        for k in 1..=2 {
            let pats = enumerate_patterns(r, k)?;
            pattern_ok &= pats.len() as u128 == count_patterns_recursive(r, k);
            let j: Vec<usize> = (1..=r).collect();
            for a in &pats {
                pattern_ok &= lambda_lists(&j, k, a)? == stack_simulation(&j, k, a)?;
            }
        }
    }
    check("stack simulation matches priority lists", pattern_ok);

    // Rod fixture structure.
    let cfg = RodConfig::new(0, 1);
    let (path, base) = planted_adversarial_window(&fam, cfg, 6, seed, 0);
    let layout = RodLayout::new(&path, base, &fam, cfg)?;
    let rep = rod_structure_check(&layout)?;
    check(
        "rod structure clean on planted window",
        rep.violations.is_empty(),
    );

    Ok(ok_all)
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("PRUNEWALK_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {:#}", err);
            let code = if err
                .downcast_ref::<Error>()
                .map(|e| matches!(e, Error::BudgetExceeded(_)))
                .unwrap_or(false)
            {
                3
            } else {
                2
            };
            ExitCode::from(code)
        }
    }
}
