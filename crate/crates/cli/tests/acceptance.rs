//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Set `ACCEPTANCE_ONLY=3,4` to run a subset.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cashbench::ensemble::{greedy_ensemble_select, PredictionTable};
use cashbench::evaluation::{
    accuracy, auc, balanced_accuracy, r2, FnEvaluator, HoldoutEvaluator, Metric, MetricKind, SplitSpec,
    Splits, TimeLedger,
};
use cashbench::harness::{
    build_meta_matrix, generate_synthetic, run_benchmark, BenchmarkOutcome, BenchmarkPlan, DatasetSpec,
    GeneratorSpec, ParityMode, RunSummary,
};
use cashbench::learners::{default_classification_space, Predictions, Target};
use cashbench::optimizers::{
    evolutionary_search, hyperband, hyperband_brackets, portfolio_hyperband, rank_order, successive_halving,
    EvolutionOptions, HyperbandOptions, OptimizerSpec, Session, Variant,
};
use cashbench::portfolio::{build_portfolio_greedy, sample_catalog, save_portfolio, MetaMatrix};
use cashbench::search_space::{sample_configuration, Configuration};
use cashbench::util::median;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn hash_score(c: &Configuration) -> f64 {
    let text = serde_json::to_string(c).unwrap();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn distinct_configs(n: usize, seed: u64) -> Vec<Configuration> {
    let space = default_classification_space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Configuration> = Vec::new();
    while out.len() < n {
        let c = sample_configuration(&space, &mut rng);
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

fn criterion_1() -> Outcome {
    let space = default_classification_space();
    let eval = FnEvaluator::new(0.0, |c: &Configuration, _| hash_score(c));
    let mut cases = 0;
    for eta in [2u32, 3] {
        let cap = eta.pow(6);
        for n in 1..=64usize {
            let mut want = Vec::new();
            let (mut k, mut r) = (n, 1u32);
            loop {
                want.push((k, r));
                let next = k / eta as usize;
                if k == 1 || r >= cap || next == 0 {
                    break;
                }
                k = next;
                r = (r * eta).min(cap);
            }
            let mut ledger = TimeLedger::resource(1e9, cap);
            let session = Session::new(&space, &eval, &mut ledger, 0, cap);
            let res = successive_halving(session, distinct_configs(n, n as u64), 1, eta).map_err(|e| e.to_string())?;
            let got = res.brackets[0].shape();
            if got != want {
                return Err(format!("n={n} eta={eta}: rungs {got:?}, oracle {want:?}"));
            }
            cases += 1;
        }
    }
    let want = vec![(81, 1), (34, 3), (15, 9), (8, 27), (5, 81)];
    if hyperband_brackets(81, 3) != want {
        return Err(format!("bracket formula gives {:?}", hyperband_brackets(81, 3)));
    }
    let mut ledger = TimeLedger::resource(1e9, 81);
    let session = Session::new(&space, &eval, &mut ledger, 7, 81);
    let res = hyperband(session, HyperbandOptions { eta: 3, max_sweeps: Some(1) }).map_err(|e| e.to_string())?;
    let first: Vec<(usize, u32)> = res.brackets.iter().map(|b| b.shape()[0]).collect();
    check(
        first == want,
        format!("{cases} halving tables match; R=81 eta=3 brackets {first:?}"),
    )
}

fn brute_balanced(t: &[usize], p: &[usize]) -> f64 {
    let classes: Vec<usize> = {
        let mut c: Vec<usize> = t.to_vec();
        c.sort_unstable();
        c.dedup();
        c
    };
    let mut sum = 0.0;
    for &c in &classes {
        let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i] == c).collect();
        let hit = idx.iter().filter(|&&i| p[i] == c).count();
        sum += hit as f64 / idx.len() as f64;
    }
    sum / classes.len() as f64
}

fn brute_auc(t: &[usize], s: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..t.len() {
        for j in 0..t.len() {
            if t[i] == 1 && t[j] == 0 {
                den += 1.0;
                if s[i] > s[j] {
                    num += 1.0;
                } else if s[i] == s[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=50);
        let k = rng.random_range(2..=4);
        let t: Vec<usize> = (0..n).map(|i| if i < 2 { i } else { rng.random_range(0..k) }).collect();
        let p: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let diffs = [
            balanced_accuracy(&t, &p).unwrap() - brute_balanced(&t, &p),
            accuracy(&t, &p).unwrap() - (0..n).filter(|&i| t[i] == p[i]).count() as f64 / n as f64,
        ];
        let bin: Vec<usize> = (0..n).map(|i| if i < 2 { i } else { rng.random_range(0..2) }).collect();
        let levels = rng.random_range(2..=10);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let yhat: Vec<f64> = y.iter().map(|v| v + rng.random_range(-2.0..2.0)).collect();
        let mean = y.iter().sum::<f64>() / n as f64;
        let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
        let ss_res: f64 = y.iter().zip(&yhat).map(|(a, b)| (a - b) * (a - b)).sum();
        let more = [
            auc(&bin, &s).unwrap() - brute_auc(&bin, &s),
            r2(&y, &yhat).unwrap() - (1.0 - ss_res / ss_tot),
        ];
        for d in diffs.iter().chain(&more) {
            worst = worst.max(d.abs());
        }
    }
    check(worst <= 1e-12, format!("1000 instances, max deviation {worst:.2e}"))
}

fn binary_suite() -> Vec<DatasetSpec> {
    let g = |name: &str, seed: u64, noise: usize, flip: f64| GeneratorSpec {
        noise_features: noise,
        label_noise: flip,
        ..GeneratorSpec::new(name, 1500, seed)
    };
    vec![
        DatasetSpec::generated("gauss-noisy", g("two-gaussians", 11, 10, 0.15)),
        DatasetSpec::generated("ring-noisy", g("ring-vs-blob", 12, 8, 0.1)),
        DatasetSpec::generated("ring-flipped", g("ring-vs-blob", 13, 3, 0.2)),
    ]
}

fn meta_family() -> Vec<DatasetSpec> {
    let mut out = Vec::new();
    for (i, (name, noise, flip)) in [
        ("two-gaussians", 0, 0.05),
        ("two-gaussians", 6, 0.2),
        ("ring-vs-blob", 0, 0.05),
        ("ring-vs-blob", 5, 0.15),
        ("ring-vs-blob", 10, 0.1),
        ("two-gaussians", 12, 0.1),
    ]
    .into_iter()
    .enumerate()
    {
        let spec = GeneratorSpec {
            noise_features: noise,
            label_noise: flip,
            ..GeneratorSpec::new(name, 400, 9000 + i as u64)
        };
        out.push(DatasetSpec::generated(&format!("meta-{i}"), spec));
    }
    out
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(2, |n| n.get()).clamp(1, 16)
}

struct Suite {
    outcome: BenchmarkOutcome,
    portfolio_size: usize,
    elapsed: Duration,
}

fn run_suite() -> Result<Suite, String> {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let catalog = sample_catalog(&default_classification_space(), 80, 5);
    let meta = build_meta_matrix("meta-family", &meta_family(), dir.path(), &catalog, &SplitSpec::default(), workers())
        .map_err(|e| e.to_string())?;
    let portfolio = build_portfolio_greedy(&meta, 16).map_err(|e| e.to_string())?;
    save_portfolio(&portfolio, &dir.path().join("portfolio.json")).map_err(|e| e.to_string())?;

    let mut random = OptimizerSpec::new(Variant::Random);
    random.trial_limit = Some(100);
    let mut hb = OptimizerSpec::new(Variant::Hyperband);
    hb.eta = 3;
    let mut phb = OptimizerSpec::new(Variant::PortfolioHyperband);
    phb.eta = 3;
    phb.portfolio = Some("portfolio.json".into());
    let mut plan = BenchmarkPlan::new(binary_suite(), vec![random, hb, phb], ParityMode::TrialCount, "random", (0..20).collect());
    plan.ensemble = true;
    plan.jobs = workers();
    let outcome = run_benchmark(&plan, dir.path()).map_err(|e| e.to_string())?;
    if let Some((d, m)) = outcome.failures.first() {
        return Err(format!("dataset {d} failed: {m}"));
    }
    Ok(Suite {
        outcome,
        portfolio_size: portfolio.len(),
        elapsed: start.elapsed(),
    })
}

fn runs_of<'a>(o: &'a BenchmarkOutcome, dataset: &str, optimizer: &str) -> Vec<&'a RunSummary> {
    let mut v: Vec<&RunSummary> = o.runs.iter().filter(|r| r.dataset == dataset && r.optimizer == optimizer).collect();
    v.sort_by_key(|r| r.seed);
    v
}

fn criterion_3(suite: &Suite) -> Outcome {
    let o = &suite.outcome;
    let mut lines = Vec::new();
    let (mut wins, mut total) = (0, 0);
    let mut hb_ok = true;
    let mut parity_ok = true;
    for d in binary_suite() {
        let rs = runs_of(o, &d.id, "random");
        let hb = runs_of(o, &d.id, "hyperband");
        let phb = runs_of(o, &d.id, "portfolio-hyperband");
        let med = |v: &[&RunSummary]| median(&v.iter().map(|r| r.best_validation).collect::<Vec<_>>());
        let (m_rs, m_hb, m_phb) = (med(&rs), med(&hb), med(&phb));
        hb_ok &= m_hb >= m_rs;
        if std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
            for (a, b) in rs.iter().zip(&phb) {
                let alg = |r: &RunSummary| r.result.best.config.algorithm_id.clone();
                eprintln!(
                    "{} seed {}: rs {:.4} ({}) phb {:.4} ({}, {} trials)",
                    d.id, a.seed, a.best_validation, alg(a), b.best_validation, alg(b), b.result.trials.len()
                );
            }
        }
        let w = rs.iter().zip(&phb).filter(|(a, b)| b.best_validation > a.best_validation).count();
        wins += w;
        total += rs.len();
        for r in hb.iter().chain(&phb) {
            let base = rs.iter().find(|b| b.seed == r.seed).unwrap();
            parity_ok &= r.full_budget_equivalents <= base.full_budget_equivalents + 1.0 + 1e-9;
        }
        lines.push(format!(
            "{}: median rs {m_rs:.4} hb {m_hb:.4} phb {m_phb:.4}, phb wins {w}/{}",
            d.id,
            rs.len()
        ));
    }
    let share = wins as f64 / total as f64;
    let pooled = |opt: &str| {
        median(&o.runs.iter().filter(|r| r.optimizer == opt).map(|r| r.best_validation).collect::<Vec<_>>())
    };
    lines.push(format!("pooled median rs {:.4} hb {:.4}", pooled("random"), pooled("hyperband")));
    let detail = format!(
        "{}; phb beats rs in {:.0}% of runs; portfolio of {}; parity {}; {:.1}s",
        lines.join("; "),
        share * 100.0,
        suite.portfolio_size,
        if parity_ok { "held" } else { "violated" },
        suite.elapsed.as_secs_f64()
    );
    check(hb_ok && share >= 0.7 && parity_ok && suite.elapsed < Duration::from_secs(600), detail)
}

fn criterion_4(suite: &Suite) -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for d in binary_suite() {
        let ratios: Vec<f64> = runs_of(&suite.outcome, &d.id, "portfolio-hyperband")
            .iter()
            .map(|r| r.anytime[0].score / r.best_validation)
            .collect();
        let m = median(&ratios);
        ok &= m >= 0.95;
        lines.push(format!("{}: {:.3}", d.id, m));
    }
    check(ok, format!("median readout at 20% over final: {}", lines.join(", ")))
}

fn criterion_5() -> Outcome {
    let space = default_classification_space();
    let data = generate_synthetic(&GeneratorSpec { noise_features: 4, ..GeneratorSpec::new("ring-vs-blob", 300, 5) })
        .map_err(|e| e.to_string())?;
    let splits = Splits::from_dataset(&data, &SplitSpec::default()).map_err(|e| e.to_string())?;
    let eval = HoldoutEvaluator::new(&space, &splits, Metric::new(MetricKind::BalancedAccuracy));
    let opts = HyperbandOptions { eta: 3, max_sweeps: None };
    let mut trials = 0;
    for seed in 0..10u64 {
        let seed = seed.wrapping_mul(0x9E37_79B9) + 1;
        let mut l1 = TimeLedger::resource(30.0, 27);
        let a = hyperband(Session::new(&space, &eval, &mut l1, seed, 27), opts).map_err(|e| e.to_string())?;
        let mut l2 = TimeLedger::resource(30.0, 27);
        let b = portfolio_hyperband(Session::new(&space, &eval, &mut l2, seed, 27), &[], 0.25, opts)
            .map_err(|e| e.to_string())?;
        let strip = |r: &cashbench::optimizers::RunResult| {
            r.trials.iter().map(|t| { let mut t = t.clone(); t.wall_time = 0.0; t }).collect::<Vec<_>>()
        };
        if strip(&a) != strip(&b) || a.brackets != b.brackets {
            return Err(format!("seed {seed}: sequences differ"));
        }
        trials += a.trials.len();
    }
    check(true, format!("10 seeds, {trials} trials identical"))
}

fn exhaustive_best(table: &PredictionTable, truth: &Target, metric: &Metric, max_size: usize) -> f64 {
    let m = table.len();
    let mut best = f64::NEG_INFINITY;
    let mut counts = vec![0usize; m];
    fn rec(j: usize, left: usize, counts: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if j == counts.len() {
            if counts.iter().sum::<usize>() > 0 {
                f(counts);
            }
            return;
        }
        for c in 0..=left {
            counts[j] = c;
            rec(j + 1, left - c, counts, f);
        }
        counts[j] = 0;
    }
    rec(0, max_size, &mut counts, &mut |c| {
        best = best.max(table.score(c, truth, metric).unwrap());
    });
    best
}

fn reference_forward(table: &PredictionTable, truth: &Target, metric: &Metric, max_size: usize) -> f64 {
    let mut counts = vec![0usize; table.len()];
    let mut best = f64::NEG_INFINITY;
    for _ in 0..max_size {
        let mut pick = (0, f64::NEG_INFINITY);
        for c in 0..table.len() {
            counts[c] += 1;
            let v = table.score(&counts, truth, metric).unwrap();
            counts[c] -= 1;
            if v > pick.1 {
                pick = (c, v);
            }
        }
        counts[pick.0] += 1;
        best = best.max(pick.1);
    }
    best
}

fn criterion_6(suite: &Suite) -> Outcome {
    let start = Instant::now();
    let mut violations = 0;
    let mut runs = 0;
    for r in &suite.outcome.runs {
        if let Some(e) = &r.ensemble {
            runs += 1;
            if e.selection.validation_score < e.best_single_validation {
                violations += 1;
            }
        } else {
            return Err(format!("{} {} seed {}: no ensemble", r.dataset, r.optimizer, r.seed));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = Vec::new();
    let mut forward_mismatches = 0;
    let metric = Metric::new(MetricKind::BalancedAccuracy);
    for inst in 0..100 {
        let m = rng.random_range(1..=4);
        let max_size = rng.random_range(1..=3);
        let n = rng.random_range(6..=20);
        let labels: Vec<usize> = (0..n).map(|i| if i < 2 { i } else { rng.random_range(0..2) }).collect();
        let cands = (0..m as u64)
            .map(|o| {
                let rows = (0..n)
                    .map(|_| {
                        let p: f64 = rng.random();
                        vec![1.0 - p, p]
                    })
                    .collect();
                (o, Predictions::from_scores(rows), None)
            })
            .collect();
        let table = PredictionTable::new(cands).unwrap();
        let truth = Target::Classes { labels, n_classes: 2 };
        let sel = greedy_ensemble_select(&table, &truth, &metric, max_size).unwrap();
        let best = exhaustive_best(&table, &truth, &metric, max_size);
        if sel.validation_score != reference_forward(&table, &truth, &metric, max_size) {
            forward_mismatches += 1;
        }
        if sel.validation_score != best {
            mismatches.push(format!("#{inst} ({m} cands, size {max_size}): greedy {:.4} vs {best:.4}", sel.validation_score));
        }
    }
    let detail = format!(
        "{runs} benchmark ensembles, {violations} below best single; reference forward selection mismatches {forward_mismatches}/100; exhaustive mismatches {}/100{}; {:.1}s",
        mismatches.len(),
        mismatches.first().map_or(String::new(), |m| format!(" (first: {m})")),
        start.elapsed().as_secs_f64()
    );
    check(violations == 0 && forward_mismatches == 0 && mismatches.is_empty() && runs > 0, detail)
}

fn reference_greedy(scores: &[Vec<Option<f64>>], worst: f64, k: usize) -> Vec<usize> {
    let n = scores.len();
    let m = scores[0].len();
    let mut chosen: Vec<usize> = Vec::new();
    let f = |set: &[usize]| -> f64 {
        let mut total = 0.0;
        for row in scores {
            let mut best = worst;
            for &c in set {
                let v = row[c].unwrap_or(worst);
                if v > best {
                    best = v;
                }
            }
            total += best;
        }
        total / n as f64
    };
    while chosen.len() < k && chosen.len() < m {
        let base = if chosen.is_empty() { f64::NEG_INFINITY } else { f(&chosen) };
        let mut pick = None;
        let mut pick_f = f64::NEG_INFINITY;
        for c in 0..m {
            if chosen.contains(&c) {
                continue;
            }
            let mut s = chosen.clone();
            s.push(c);
            let v = f(&s);
            if v > pick_f {
                pick_f = v;
                pick = Some(c);
            }
        }
        match pick {
            Some(c) if pick_f > base => chosen.push(c),
            _ => break,
        }
    }
    chosen
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let space = default_classification_space();
    let catalog = sample_catalog(&space, 10, 1);
    let bound = 1.0 - (-1.0f64).exp();
    let mut worst_ratio: f64 = 1.0;
    for inst in 0..200 {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=10);
        let k = rng.random_range(1..=3);
        let mut scores: Vec<Vec<Option<f64>>> = (0..n)
            .map(|_| (0..m).map(|_| (rng.random::<f64>() > 0.15).then(|| (rng.random_range(0..20) as f64) / 20.0)).collect())
            .collect();
        for row in scores.iter_mut() {
            if row.iter().all(Option::is_none) {
                row[0] = Some(0.5);
            }
        }
        let ids = (0..n).map(|d| format!("d{d}")).collect();
        let meta = MetaMatrix::new("r", ids, catalog[..m].to_vec(), scores.clone(), 0.0).unwrap();
        let p = build_portfolio_greedy(&meta, k).map_err(|e| e.to_string())?;
        let got: Vec<usize> = p
            .entries
            .iter()
            .map(|e| catalog.iter().position(|c| *c == e.config).unwrap())
            .collect();
        let want = reference_greedy(&scores, 0.0, k);
        if got != want {
            return Err(format!("instance {inst}: got {got:?}, reference {want:?}"));
        }
        let mut opt: f64 = f64::NEG_INFINITY;
        let subsets = 1usize << m;
        for mask in 1..subsets {
            if mask.count_ones() as usize <= k {
                let set: Vec<usize> = (0..m).filter(|c| mask >> c & 1 == 1).collect();
                opt = opt.max(meta.objective(&set));
            }
        }
        let value = meta.objective(&got);
        if opt > 0.0 {
            worst_ratio = worst_ratio.min(value / opt);
        }
        if value < bound * opt - 1e-12 {
            return Err(format!("instance {inst}: greedy {value} below bound of optimum {opt}"));
        }
    }
    check(true, format!("200 matrices match the reference; worst greedy/optimum {worst_ratio:.3} (bound {bound:.3})"))
}

fn criterion_8() -> Outcome {
    let space = default_classification_space();
    let data = generate_synthetic(&GeneratorSpec { noise_features: 6, label_noise: 0.1, ..GeneratorSpec::new("two-gaussians", 300, 8) })
        .map_err(|e| e.to_string())?;
    let splits = Splits::from_dataset(&data, &SplitSpec::default()).map_err(|e| e.to_string())?;
    let eval = HoldoutEvaluator::new(&space, &splits, Metric::new(MetricKind::BalancedAccuracy));
    let opts = EvolutionOptions { generations: Some(10), ..EvolutionOptions::default() };
    for seed in 0..5u64 {
        let mut ledger = TimeLedger::resource(1e6, 27);
        let res = evolutionary_search(Session::new(&space, &eval, &mut ledger, seed, 27).with_workers(workers()), opts)
            .map_err(|e| e.to_string())?;
        if res.generations.len() != 10 {
            return Err(format!("seed {seed}: {} generations", res.generations.len()));
        }
        let mut best = f64::NEG_INFINITY;
        let mut prev = f64::NEG_INFINITY;
        for g in &res.generations {
            if g.members.len() != 20 {
                return Err(format!("seed {seed} gen {}: {} members", g.index, g.members.len()));
            }
            let mut ranked: Vec<_> = g.members.iter().map(|&o| res.trial(o).unwrap()).collect();
            ranked.sort_by(|a, b| rank_order(a, b));
            let top: Vec<u64> = ranked.iter().take(4).map(|t| t.ordinal).collect();
            if g.index < 9 && g.survivors != top {
                return Err(format!("seed {seed} gen {}: survivors {:?}, expected {top:?}", g.index, g.survivors));
            }
            best = ranked.iter().map(|t| t.validation_score).fold(best, f64::max);
            if best < prev {
                return Err(format!("seed {seed}: best-so-far decreased"));
            }
            prev = best;
        }
        if (res.best.score - best).abs() > 0.0 {
            return Err(format!("seed {seed}: reported best {} != {best}", res.best.score));
        }
        if res.anytime_curve.windows(2).any(|w| w[1].score < w[0].score) {
            return Err(format!("seed {seed}: anytime curve decreased"));
        }
    }
    check(true, "5 seeds x 10 generations of 20, top-4 survivors, monotone best".into())
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let plan = r#"
parity = "trial-count"
baseline = "random"
seeds = [3, 4]
ensemble = true

[[datasets]]
id = "gauss"
generator = { name = "two-gaussians", n = 300, seed = 1, noise_features = 4, label_noise = 0.1 }

[[datasets]]
id = "ring"
generator = { name = "ring-vs-blob", n = 300, seed = 2, noise_features = 2 }

[[optimizers]]
variant = "random"
trial_limit = 40

[[optimizers]]
variant = "hyperband"
eta = 3

[[optimizers]]
variant = "successive-halving"
eta = 3

[[optimizers]]
variant = "evolutionary"
"#;
    let plan_path = dir.path().join("plan.toml");
    std::fs::write(&plan_path, plan).map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_cashbench");
    let mut trees = Vec::new();
    for (i, w) in ["1", "1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let status = Command::new(bin)
            .args(["bench", plan_path.to_str().unwrap(), "--workers", w, "--out", out.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("bench exited {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)));
        }
        trees.push(read_tree(&out));
    }
    let files = trees[0].len();
    let same = trees.windows(2).all(|w| w[0] == w[1]);
    check(
        same && files > 2 && start.elapsed() < Duration::from_secs(300),
        format!("{files} files byte-identical across 2 runs and workers {{1, 4}}: {same}; {:.1}s", start.elapsed().as_secs_f64()),
    )
}

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |c: u32| only.as_ref().is_none_or(|o| o.contains(&c));
    let mut failed = 0;
    let mut report = |c: u32, limit: Option<Duration>, run: &mut dyn FnMut() -> Outcome| {
        if !wanted(c) {
            return;
        }
        let start = Instant::now();
        let mut res = run();
        let took = start.elapsed();
        if let (Some(l), Ok(d)) = (limit, &res) {
            if took > l {
                res = Err(format!("{d}; exceeded {:.0}s limit", l.as_secs_f64()));
            }
        }
        match res {
            Ok(d) => println!("PASS criterion {c}: {d} [{:.2}s]", took.as_secs_f64()),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {c}: {d} [{:.2}s]", took.as_secs_f64())
            }
        }
    };
    report(1, Some(Duration::from_secs(5)), &mut criterion_1);
    report(2, Some(Duration::from_secs(10)), &mut criterion_2);
    let suite = if [3, 4, 6].iter().any(|&c| wanted(c)) { Some(run_suite()) } else { None };
    let suite = &suite;
    let with_suite = |f: fn(&Suite) -> Outcome| {
        move || match suite {
            Some(Ok(s)) => f(s),
            Some(Err(e)) => Err(format!("benchmark suite failed: {e}")),
            None => Err("suite not run".into()),
        }
    };
    report(3, None, &mut with_suite(criterion_3));
    report(4, None, &mut with_suite(criterion_4));
    report(5, Some(Duration::from_secs(60)), &mut criterion_5);
    report(6, Some(Duration::from_secs(30)), &mut with_suite(criterion_6));
    report(7, Some(Duration::from_secs(30)), &mut criterion_7);
    report(8, Some(Duration::from_secs(120)), &mut criterion_8);
    report(9, Some(Duration::from_secs(300)), &mut criterion_9);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
