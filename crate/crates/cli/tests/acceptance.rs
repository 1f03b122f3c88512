//! Acceptance criteria, one PASS/FAIL line each.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::Instant;

use anyhow::{ensure, Result};
use rand::Rng;

use bitext_core::baseline::{train_baseline, train_ibm1, train_ibm2, BaselineConfig, NULL_SOURCE};
use bitext_core::corpus::{inject_noise, sample_negatives, EncodedSentence, ParallelCorpus, RawParallel, Vocabulary};
use bitext_core::eval::{
    bleu, default_thresholds, f1_score, modified_precision_counts, noise_sweep, precision_recall_f1, CurveMode,
    EvalReport, SweepSpec,
};
use bitext_core::extraction::{greedy_one_to_one, threshold, ScoredPair};
use bitext_core::nncore::checkpoint::Checkpoint;
use bitext_core::nncore::ParamSet;
use bitext_core::seed::rng;
use bitext_core::siamese::{random_gradient_check, train, Dims, GradCheckSetup, HyperParams, ModelParams, SiameseScorer};
use bitext_core::synth::{generate, PairLanguage, SynthSpec};

type Criterion = fn() -> Result<String>;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 11] = [
        ("gradient correctness", gradient_correctness),
        ("synthetic extraction", synthetic_extraction),
        ("metric oracle", metric_oracle),
        ("noise arithmetic", noise_arithmetic),
        ("negative sampling count", negative_sampling_count),
        ("EM properties", em_properties),
        ("greedy one-to-one", greedy_one_to_one_reference),
        ("threshold monotonicity", threshold_monotonicity),
        ("determinism", determinism),
        ("baseline end-to-end", baseline_end_to_end),
        ("BLEU self-tests", bleu_self_tests),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(anyhow::anyhow!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {e:#}", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn gradient_correctness() -> Result<String> {
    let start = Instant::now();
    let err = random_gradient_check(&GradCheckSetup::default())?;
    let secs = start.elapsed().as_secs_f64();
    ensure!(err < 1e-4, "max relative error {err:e}");
    ensure!(secs < 10.0, "took {secs:.1} s");
    Ok(format!("max relative error {err:.2e} over 100 coordinates in {secs:.2} s"))
}

/// Both scorers on the synthetic pair language, at noise 0 and 0.9.
struct SyntheticRun {
    birnn: Vec<EvalReport>,
    baseline: Vec<EvalReport>,
    birnn_seconds: f64,
}

fn synthetic_run() -> &'static Result<SyntheticRun, String> {
    static RUN: OnceLock<Result<SyntheticRun, String>> = OnceLock::new();
    RUN.get_or_init(|| run_synthetic().map_err(|e| format!("{e:#}")))
}

fn run_synthetic() -> Result<SyntheticRun> {
    let data = generate(SynthSpec::default(), 2000, 200, 400)?;
    let spec = SweepSpec {
        ratios: vec![0.0, 0.9],
        thresholds: default_thresholds(),
        seed: 1,
        mode: CurveMode::PostGreedy,
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
    pool.install(|| {
        let start = Instant::now();
        let h = HyperParams {
            negatives: 3,
            lr: 0.005,
            batch: 128,
            epochs: 15,
            ..HyperParams::default()
        };
        let dims = Dims {
            emb: 32,
            hidden: 32,
            head: 32,
        };
        let params = ModelParams::<f32>::init(data.src_vocab.len(), data.tgt_vocab.len(), dims, 0);
        let (params, _) = train(params, &data.train, &h)?;
        let scorer = SiameseScorer::new(params);
        let birnn = noise_sweep(&scorer, None, &data.test, &data.pool, &spec)?;
        let birnn_seconds = start.elapsed().as_secs_f64();

        let model = train_baseline(&data.train, &BaselineConfig::default())?;
        let baseline = noise_sweep(&model, Some(&model.filter), &data.test, &data.pool, &spec)?;
        Ok(SyntheticRun {
            birnn,
            baseline,
            birnn_seconds,
        })
    })
}

fn synthetic_extraction() -> Result<String> {
    let run = synthetic_run().as_ref().map_err(|e| anyhow::anyhow!("{e}"))?;
    let (clean, noisy) = (&run.birnn[0].best, &run.birnn[1].best);
    let detail = format!(
        "F1 {:.3} at noise 0 (rho {}), {:.3} at noise 0.9 (rho {}), {:.0} s",
        clean.f1, clean.rho, noisy.f1, noisy.rho, run.birnn_seconds
    );
    ensure!(clean.f1 >= 0.90, "{detail}");
    ensure!(noisy.f1 >= 0.75, "{detail}");
    ensure!(run.birnn_seconds < 300.0, "{detail}");
    Ok(detail)
}

fn baseline_end_to_end() -> Result<String> {
    let run = synthetic_run().as_ref().map_err(|e| anyhow::anyhow!("{e}"))?;
    let (b0, b9) = (run.baseline[0].best.f1, run.baseline[1].best.f1);
    let (n0, n9) = (run.birnn[0].best.f1, run.birnn[1].best.f1);
    let detail = format!("noise 0: baseline F1 {b0:.3} vs BiRNN {n0:.3}; noise 0.9: baseline {b9:.3} vs BiRNN {n9:.3}");
    ensure!(b0 >= 0.6, "{detail}");
    ensure!(n0 > b0, "{detail}");
    Ok(detail)
}

fn metric_oracle() -> Result<String> {
    let mut r = rng(7);
    for _ in 0..1000 {
        let universe = r.gen_range(1..50u32);
        let predicted: Vec<u32> = (0..universe).filter(|_| r.gen_bool(0.3)).collect();
        let mut gold: Vec<u32> = (0..universe).filter(|_| r.gen_bool(0.3)).collect();
        if gold.is_empty() {
            gold.push(r.gen_range(0..universe));
        }
        let hits = predicted.iter().filter(|p| gold.contains(p)).count() as f64;
        let p = if predicted.is_empty() { 0.0 } else { hits / predicted.len() as f64 };
        let rc = hits / gold.len() as f64;
        let f = if hits > 0.0 { 2.0 * p * rc / (p + rc) } else { 0.0 };
        let got = precision_recall_f1(
            &predicted.iter().copied().collect::<BTreeSet<_>>(),
            &gold.iter().copied().collect::<BTreeSet<_>>(),
        )?;
        ensure!(got == (p, rc, f), "{got:?} vs counted {:?}", (p, rc, f));
    }
    let f = f1_score(0.830, 0.696);
    ensure!((f - 0.757).abs() < 5e-4, "F1(0.830, 0.696) = {f}");
    Ok(format!("1000 random sets exact; F1(0.830, 0.696) = {f:.4}"))
}

fn numbered(n: usize, offset: u32) -> Vec<EncodedSentence> {
    (0..n as u32).map(|k| EncodedSentence::new(vec![offset + k])).collect()
}

fn noise_arithmetic() -> Result<String> {
    let test = ParallelCorpus::new(numbered(1000, 10), numbered(1000, 10))?;
    let noisy = inject_noise(&test, 0.6, &numbered(1000, 5000), 0)?;
    let share = noisy.gold.len() as f64 / (1000.0 * 1000.0);
    ensure!(noisy.gold.len() == 400, "{} gold pairs", noisy.gold.len());
    ensure!((share - 0.0004).abs() < 1e-15, "share {share}");
    Ok(format!("{} gold pairs, {:.2}% of the Cartesian product", noisy.gold.len(), share * 100.0))
}

fn negative_sampling_count() -> Result<String> {
    let c = ParallelCorpus::new(numbered(1000, 10), numbered(1000, 10))?;
    let triples = sample_negatives(&c, 7, 0)?;
    let positives = triples.iter().filter(|t| t.label == 1).count();
    ensure!(triples.len() == 8000 && positives == 1000, "{} triples, {positives} positive", triples.len());
    Ok(format!("{} triples, {positives} positive", triples.len()))
}

const TOY_SRC: [&str; 4] = ["the house", "the blue house", "the flower", "a blue flower"];
const TOY_TGT: [&str; 4] = ["la maison", "la maison bleue", "la fleur", "une fleur bleue"];

/// Model 1 EM over words with a NULL source, from a uniform start.
fn hand_em(iters: usize) -> BTreeMap<(String, String), f64> {
    let pairs: Vec<(Vec<&str>, Vec<&str>)> = TOY_SRC
        .iter()
        .zip(TOY_TGT)
        .map(|(s, t)| {
            (std::iter::once("NULL").chain(s.split(' ')).collect(), t.split(' ').collect())
        })
        .collect();
    let n_targets = pairs.iter().flat_map(|(_, t)| t.iter()).collect::<BTreeSet<_>>().len();
    let mut t: Option<BTreeMap<(String, String), f64>> = None;
    for _ in 0..iters {
        let prob = |e: &str, f: &str| match &t {
            None => 1.0 / n_targets as f64,
            Some(t) => t.get(&(e.to_string(), f.to_string())).copied().unwrap_or(0.0),
        };
        let mut count: BTreeMap<(String, String), f64> = BTreeMap::new();
        let mut total: BTreeMap<String, f64> = BTreeMap::new();
        for (es, fs) in &pairs {
            for f in fs {
                let z: f64 = es.iter().map(|e| prob(e, f)).sum();
                for e in es {
                    *count.entry((e.to_string(), f.to_string())).or_default() += prob(e, f) / z;
                    *total.entry(e.to_string()).or_default() += prob(e, f) / z;
                }
            }
        }
        t = Some(count.into_iter().map(|((e, f), c)| {
            let p = c / total[&e];
            ((e, f), p)
        }).collect());
    }
    t.unwrap_or_default()
}

fn em_properties() -> Result<String> {
    let data = generate(SynthSpec { seed: 3, ..SynthSpec::default() }, 500, 1, 1)?;
    let m1 = train_ibm1(&data.train, 10);
    let m2 = train_ibm2(&data.train, 10, &m1.table);
    for (name, trace) in [("Model 1", &m1.log_likelihood), ("Model 2", &m2.log_likelihood)] {
        for w in trace.windows(2) {
            ensure!(w[1] >= w[0] - 1e-9, "{name} log-likelihood fell from {} to {}", w[0], w[1]);
        }
    }
    let mut worst: f64 = 0.0;
    for table in [&m1.table, &m2.table] {
        for (_, row) in table.rows() {
            worst = worst.max((row.values().sum::<f64>() - 1.0).abs());
        }
    }
    for (_, slice) in m2.alignment.slices() {
        worst = worst.max((slice.iter().sum::<f64>() - 1.0).abs());
    }
    ensure!(worst < 1e-6, "row sums off by {worst:e}");

    let raw = RawParallel::from_lines(&TOY_SRC, &TOY_TGT)?;
    let vs = Vocabulary::build(&raw.src, None);
    let vt = Vocabulary::build(&raw.tgt, None);
    let toy = raw.encode(&vs, &vt)?;
    let get = |t: &bitext_core::baseline::TTable, e: &str, f: &str| {
        t.get(if e == "NULL" { NULL_SOURCE } else { vs.id(e) }, vt.id(f))
    };
    let oracle = hand_em(20);
    let trained = train_ibm1(&toy, 20).table;
    for ((e, f), &p) in &oracle {
        ensure!((get(&trained, e, f) - p).abs() < 1e-6, "t({f}|{e}) = {} but hand EM gives {p}", get(&trained, e, f));
    }
    let t = get(&trained, "house", "maison");
    ensure!(t > 0.9, "t(maison|house) = {t}");
    Ok(format!(
        "likelihood non-decreasing over 10 iterations of each model, rows normalized within {worst:.1e}, t(maison|house) = {t:.4}"
    ))
}

fn visit_before(a: &ScoredPair, b: &ScoredPair) -> bool {
    a.score > b.score || (a.score == b.score && (&a.doc_id, a.src_idx, a.tgt_idx) < (&b.doc_id, b.src_idx, b.tgt_idx))
}

fn brute_force_greedy(pairs: &[ScoredPair]) -> Vec<ScoredPair> {
    let mut taken: Vec<ScoredPair> = Vec::new();
    loop {
        let mut best: Option<&ScoredPair> = None;
        for p in pairs {
            let clash = taken
                .iter()
                .any(|q| q.doc_id == p.doc_id && (q.src_idx == p.src_idx || q.tgt_idx == p.tgt_idx));
            if !clash && best.map_or(true, |b| visit_before(p, b)) {
                best = Some(p);
            }
        }
        match best {
            Some(p) => taken.push(p.clone()),
            None => return taken,
        }
    }
}

fn greedy_one_to_one_reference() -> Result<String> {
    let mut r = rng(11);
    let mut total = 0;
    for _ in 0..200 {
        let n = r.gen_range(0..=1000);
        let width = r.gen_range(1..=30);
        let pairs: Vec<ScoredPair> = (0..n)
            .map(|_| ScoredPair {
                doc_id: format!("d{}", r.gen_range(0..3)),
                src_idx: r.gen_range(0..width),
                tgt_idx: r.gen_range(0..width),
                score: f64::from(r.gen_range(0..50u32)) / 50.0,
            })
            .collect();
        let fast = greedy_one_to_one(&pairs);
        ensure!(fast == brute_force_greedy(&pairs), "differs from the reference on {n} pairs");
        let src: BTreeSet<_> = fast.iter().map(|p| (&p.doc_id, p.src_idx)).collect();
        let tgt: BTreeSet<_> = fast.iter().map(|p| (&p.doc_id, p.tgt_idx)).collect();
        ensure!(src.len() == fast.len() && tgt.len() == fast.len(), "a sentence was used twice");
        total += fast.len();
    }
    Ok(format!("200 instances agree, {total} pairs kept in all"))
}

fn threshold_monotonicity() -> Result<String> {
    let mut r = rng(5);
    for _ in 0..200 {
        let pairs: Vec<ScoredPair> = (0..r.gen_range(0..500))
            .map(|k| ScoredPair {
                doc_id: "d".into(),
                src_idx: k,
                tgt_idx: r.gen_range(0..100),
                score: r.gen(),
            })
            .collect();
        let mut rhos: Vec<f64> = (0..r.gen_range(1..20)).map(|_| r.gen()).collect();
        rhos.sort_by(f64::total_cmp);
        let sets: Vec<BTreeSet<(usize, usize)>> = rhos
            .iter()
            .map(|&rho| threshold(&pairs, rho).iter().map(|p| (p.src_idx, p.tgt_idx)).collect())
            .collect();
        for w in sets.windows(2) {
            ensure!(w[1].is_subset(&w[0]), "set at a higher threshold is not contained in the lower one");
        }
    }
    Ok("200 random score sets, nested at every threshold step".into())
}

fn write_lines(path: &Path, sentences: &[Vec<String>]) -> Result<()> {
    let text: String = sentences.iter().map(|s| s.join(" ") + "\n").collect();
    fs::write(path, text)?;
    Ok(())
}

fn determinism() -> Result<String> {
    let dir = tempfile::tempdir()?;
    let (src, tgt) = PairLanguage::new(SynthSpec::default()).sample(300, 0);
    let (sp, tp) = (dir.path().join("train.src"), dir.path().join("train.tgt"));
    write_lines(&sp, &src)?;
    write_lines(&tp, &tgt)?;
    let mut checkpoints = Vec::new();
    for run in ["first", "second"] {
        fs::create_dir(dir.path().join(run))?;
        let model = dir.path().join(run).join("model.ckpt");
        let out = Command::new(env!("CARGO_BIN_EXE_bitext"))
            .args(["train", "--threads", "1", "--seed", "42", "--epochs", "2", "--emb", "16", "--hidden", "16"])
            .args(["--head", "8", "--negatives", "3", "--lr", "0.005", "--batch", "32"])
            .arg("--src")
            .arg(&sp)
            .arg("--tgt")
            .arg(&tp)
            .arg("--model")
            .arg(&model)
            .env("BITEXT_LOG", "warn")
            .output()?;
        ensure!(out.status.success(), "train failed: {}", String::from_utf8_lossy(&out.stderr));
        checkpoints.push(fs::read(&model)?);
    }
    ensure!(checkpoints[0] == checkpoints[1], "the two checkpoints differ");

    let saved = Checkpoint::from_bytes(&checkpoints[0])?;
    ensure!(saved.to_bytes() == checkpoints[0], "re-serialized checkpoint differs");
    let params = ModelParams::<f32>::init(50, 60, Dims { emb: 5, hidden: 4, head: 3 }, 9);
    let path = dir.path().join("roundtrip.ckpt");
    Checkpoint::from_params(&params, BTreeMap::new()).save(&path)?;
    let mut back = ModelParams::<f32>::zeros(50, 60, params.dims());
    Checkpoint::load(&path)?.restore_into(&mut back)?;
    let bits = |p: &ModelParams<f32>| -> Vec<u32> {
        p.tensors().iter().flat_map(|t| t.data().iter().map(|x| x.to_bits())).collect()
    };
    ensure!(bits(&params) == bits(&back), "parameters changed in a save/load round trip");
    Ok(format!("two serial trainings gave identical {}-byte checkpoints; round trip bit-exact", checkpoints[0].len()))
}

fn bleu_self_tests() -> Result<String> {
    let corpus = vec![vec!["the", "cat", "sat", "on", "the", "mat"], vec!["a", "dog", "ran", "home"]];
    let identical = bleu(&corpus, &corpus, 4)?;
    ensure!(identical == 1.0, "identical corpora scored {identical}");
    let other = vec![vec!["x1", "x2", "x3", "x4", "x5", "x6"], vec!["y1", "y2", "y3", "y4"]];
    let disjoint = bleu(&corpus, &other, 4)?;
    ensure!(disjoint == 0.0, "disjoint corpora scored {disjoint}");
    let cand = [vec!["the", "the", "the"]];
    let refs = [vec!["the", "cat"]];
    let counts = modified_precision_counts(&cand, &refs, 1);
    ensure!(counts == (1, 3), "clipped unigram counts {counts:?}");
    ensure!(modified_precision_counts(&cand, &refs, 2) == (0, 2), "clipped bigram counts");
    ensure!(bleu(&cand, &refs, 1)? == 1.0 / 3.0, "unigram BLEU of the clipped example");
    Ok("identical 1, disjoint 0, clipped counts (1, 3) and (0, 2)".into())
}
