use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use log::info;

use bitext_core::baseline::io::{
    atable_to_text, dictionary_to_text, read_text, ttable_from_text, ttable_to_text, write_text,
};
use bitext_core::baseline::{
    train_baseline, train_ibm1, train_ibm2, BaselineConfig, BilingualDictionaries, CandidateFilter,
};
use bitext_core::corpus::{
    encode, encode_documents, read_documents, read_lines, read_parallel, tokenize, EncodedSentence,
    ParallelCorpus, RawParallel, Vocabulary,
};
use bitext_core::eval::{
    bleu, default_thresholds, f1_score, noise_sweep, CurveMode, EvalReport, OracleScorer, SweepSpec,
};
use bitext_core::extraction::{run_pipeline, ExtractionConfig, PairScorer, ScorerKind};
use bitext_core::nncore::checkpoint::write_atomic;
use bitext_core::seed::derive_seed;
use bitext_core::siamese::{
    random_gradient_check, Dims, GradCheckSetup, HyperParams, ModelParams,
};
use bitext_core::synth::{generate, SynthSpec};

use crate::model::{birnn_checkpoint, load_model, save_vocabularies, sidecar};
use crate::{AlignArgs, Common, DictArgs, EvalArgs, ExtractArgs, Failure, SelftestArgs, TrainArgs, UsageExt};

type CmdResult = Result<(), Failure>;

/// Stream used for parameter initialization; epoch streams count from 0.
const INIT_STREAM: u64 = 1 << 32;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow!(msg.into()))
}

fn materialize_seed(common: &Common) -> u64 {
    match common.seed {
        Some(s) => s,
        None => {
            let nanos = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0);
            let seed = derive_seed(nanos, u64::from(std::process::id()));
            info!("no --seed given, using {seed}");
            seed
        }
    }
}

fn read_corpus(src: &Path, tgt: &Path) -> Result<RawParallel, Failure> {
    let raw = read_parallel(src, tgt).usage()?;
    info!(
        "read {} lines, kept {} pairs ({} empty, {} too long)",
        raw.report.lines, raw.report.kept, raw.report.dropped_empty, raw.report.dropped_too_long
    );
    if raw.is_empty() {
        return Err(usage(format!("no usable sentence pairs in {} / {}", src.display(), tgt.display())));
    }
    Ok(raw)
}

pub fn train(a: &TrainArgs) -> CmdResult {
    let kind: ScorerKind = a.scorer.parse().usage()?;
    let seed = materialize_seed(&a.common);
    let raw = read_corpus(&a.src, &a.tgt)?;
    let vs = Vocabulary::build(&raw.src, a.max_vocab);
    let vt = Vocabulary::build(&raw.tgt, a.max_vocab);
    let corpus = raw.encode(&vs, &vt)?;
    info!("vocabularies: {} source, {} target", vs.len(), vt.len());

    match kind {
        ScorerKind::Birnn => {
            let h = HyperParams {
                negatives: a.negatives,
                lr: a.lr,
                batch: a.batch,
                epochs: a.epochs,
                clip_norm: a.clip_norm,
                drop_in: a.drop_in,
                drop_out: a.drop_out,
                rho: a.rho,
                seed,
            };
            h.validate().usage()?;
            let dims = Dims {
                emb: a.emb,
                hidden: a.hidden,
                head: a.head,
            };
            if dims.emb == 0 || dims.hidden == 0 || dims.head == 0 {
                return Err(usage("model dimensions must be positive"));
            }
            let params = ModelParams::<f32>::init(vs.len(), vt.len(), dims, derive_seed(seed, INIT_STREAM));
            let (params, history) = bitext_core::siamese::train(params, &corpus, &h)?;
            let (sp, tp) = save_vocabularies(&a.model, &vs, &vt)?;
            write_atomic(&sidecar(&a.model, ".history.tsv"), history.to_tsv().as_bytes())?;
            birnn_checkpoint(&params, &h, (&sp, &tp)).save(&a.model)?;
        }
        ScorerKind::Baseline => {
            let cfg = BaselineConfig {
                ibm1_iters: a.ibm1_iters,
                ibm2_iters: a.ibm2_iters,
                seed,
                ..BaselineConfig::default()
            };
            let model = train_baseline(&corpus, &cfg)?;
            save_vocabularies(&a.model, &vs, &vt)?;
            model.save(&a.model)?;
        }
    }
    info!("wrote {}", a.model.display());
    Ok(())
}

fn filters_enabled(kind: ScorerKind, flag: Option<bool>, filter: Option<&CandidateFilter>) -> Result<bool, Failure> {
    let on = flag.unwrap_or(kind == ScorerKind::Baseline);
    if on && filter.is_none() {
        return Err(usage("candidate filters need a baseline model's dictionaries"));
    }
    Ok(on)
}

pub fn extract(a: &ExtractArgs) -> CmdResult {
    let model = load_model(&a.model).usage()?;
    let raw = read_documents(&a.docs).usage()?;
    let docs = encode_documents(&raw, &model.src_vocab, &model.tgt_vocab);
    let mut cfg = ExtractionConfig::for_scorer(model.kind()).with_rho(a.rho.unwrap_or(model.rho));
    cfg.min_tokens = a.min_tokens;
    cfg.apply_candidate_filters = filters_enabled(model.kind(), a.filters, model.filter())?;
    cfg.validate().usage()?;
    let (_, report) = run_pipeline(model.pair_scorer(), model.filter(), &docs, &cfg, &a.out)?;
    print!("{report}");
    if let Some(path) = &a.report {
        let json = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
        write_atomic(path, json.as_bytes())?;
    }
    Ok(())
}

fn encode_pool(path: &Path, vocab: &Vocabulary) -> Result<Vec<EncodedSentence>, Failure> {
    let lines = read_lines(path).usage()?;
    Ok(lines
        .iter()
        .filter_map(|l| encode(&tokenize(l), vocab).ok())
        .collect())
}

fn summary_tsv(reports: &[EvalReport]) -> String {
    let mut out = String::from("noise_ratio\tgold\trho\tprecision\trecall\tf1\textracted\n");
    for r in reports {
        let b = &r.best;
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}",
            r.noise_ratio, r.gold, b.rho, b.precision, b.recall, b.f1, b.extracted
        );
    }
    out
}

pub fn evaluate(a: &EvalArgs, summary_only: bool) -> CmdResult {
    let seed = materialize_seed(&a.common);
    let raw = read_corpus(&a.src, &a.tgt)?;
    let thresholds = a.thresholds.clone().map_or_else(default_thresholds, |t| t.0);
    let spec = SweepSpec {
        ratios: a.ratios.0.clone(),
        thresholds,
        seed,
        mode: if a.pre_greedy {
            CurveMode::PreGreedy
        } else {
            CurveMode::PostGreedy
        },
    };

    let loaded;
    let oracle;
    let (scorer, filter, tgt_vocab, test): (&dyn PairScorer, Option<&CandidateFilter>, Vocabulary, ParallelCorpus) =
        if a.oracle {
            let vs = Vocabulary::build(&raw.src, None);
            let vt = Vocabulary::build(&raw.tgt, None);
            let test = raw.encode(&vs, &vt)?;
            oracle = OracleScorer::new(&test);
            (&oracle, None, vt, test)
        } else {
            let path = a.model.as_ref().ok_or_else(|| usage("--model is required"))?;
            loaded = load_model(path).usage()?;
            let test = raw.encode(&loaded.src_vocab, &loaded.tgt_vocab)?;
            let on = filters_enabled(loaded.kind(), a.filters, loaded.filter())?;
            let filter = if on { loaded.filter() } else { None };
            (loaded.pair_scorer(), filter, loaded.tgt_vocab.clone(), test)
        };

    let pool = match &a.pool {
        Some(p) => encode_pool(p, &tgt_vocab)?,
        None if spec.ratios.iter().any(|&r| r > 0.0) => {
            return Err(usage("noise ratios above 0 need --pool"));
        }
        None => Vec::new(),
    };
    let reports = noise_sweep(scorer, filter, &test, &pool, &spec).usage()?;
    for r in &reports {
        println!("{r}");
    }
    if let Some(path) = &a.report {
        let text = if summary_only {
            summary_tsv(&reports)
        } else {
            reports.iter().map(EvalReport::to_tsv).collect::<Vec<_>>().join("\n")
        };
        write_atomic(path, text.as_bytes())?;
    }
    Ok(())
}

pub fn align_train(a: &AlignArgs) -> CmdResult {
    let raw = read_corpus(&a.src, &a.tgt)?;
    let vs = Vocabulary::build(&raw.src, a.max_vocab);
    let vt = Vocabulary::build(&raw.tgt, a.max_vocab);
    let corpus = raw.encode(&vs, &vt)?;
    std::fs::create_dir_all(&a.out)
        .with_context(|| format!("cannot create {}", a.out.display()))
        .usage()?;
    vs.save(&a.out.join("src.vocab"))?;
    vt.save(&a.out.join("tgt.vocab"))?;
    let mut trace = String::from("direction\tmodel\titeration\tlog_likelihood\n");
    for (dir, c, from, to) in [("fwd", corpus.clone(), &vs, &vt), ("rev", corpus.reversed(), &vt, &vs)] {
        let m1 = train_ibm1(&c, a.ibm1_iters);
        let m2 = train_ibm2(&c, a.ibm2_iters, &m1.table);
        for (model, ll) in [("ibm1", &m1.log_likelihood), ("ibm2", &m2.log_likelihood)] {
            for (k, v) in ll.iter().enumerate() {
                let _ = writeln!(trace, "{dir}\t{model}\t{k}\t{v}");
            }
        }
        write_text(&a.out.join(format!("{dir}.t.tsv")), &ttable_to_text(&m2.table, from, to)?)?;
        write_text(&a.out.join(format!("{dir}.a.tsv")), &atable_to_text(&m2.alignment))?;
        info!("{dir}: final log-likelihood {:.3}", m2.log_likelihood.last().copied().unwrap_or(0.0));
    }
    write_text(&a.out.join("loglik.tsv"), &trace)?;
    info!("wrote tables to {}", a.out.display());
    Ok(())
}

pub fn dict(a: &DictArgs) -> CmdResult {
    let dir = &a.model;
    let vs = Vocabulary::load(&dir.join("src.vocab")).usage()?;
    let vt = Vocabulary::load(&dir.join("tgt.vocab")).usage()?;
    let t_fwd = ttable_from_text(&read_text(&dir.join("fwd.t.tsv")).usage()?, &vs, &vt).usage()?;
    let t_rev = ttable_from_text(&read_text(&dir.join("rev.t.tsv")).usage()?, &vt, &vs).usage()?;
    let dicts = BilingualDictionaries::infer(&t_fwd, &t_rev, a.threshold);
    let out = a.out.as_ref().unwrap_or(dir);
    std::fs::create_dir_all(out)
        .with_context(|| format!("cannot create {}", out.display()))
        .usage()?;
    write_text(&out.join("dict.fwd.tsv"), &dictionary_to_text(&dicts.fwd, &vs, &vt)?)?;
    write_text(&out.join("dict.rev.tsv"), &dictionary_to_text(&dicts.rev, &vt, &vs)?)?;
    println!(
        "dictionary entries: {} source→target, {} target→source",
        dicts.fwd.len(),
        dicts.rev.len()
    );
    Ok(())
}

fn check(name: &str, result: anyhow::Result<String>, failed: &mut usize) {
    match result {
        Ok(detail) => println!("PASS {name}: {detail}"),
        Err(e) => {
            *failed += 1;
            println!("FAIL {name}: {e:#}");
        }
    }
}

pub fn selftest(a: &SelftestArgs) -> CmdResult {
    let seed = a.common.seed.unwrap_or(0);
    let mut failed = 0;

    check(
        "gradient",
        (|| {
            let err = random_gradient_check(&GradCheckSetup {
                seed,
                ..GradCheckSetup::default()
            })?;
            anyhow::ensure!(err < 1e-4, "max relative error {err:e}");
            Ok(format!("max relative error {err:.2e} on 100 coordinates"))
        })(),
        &mut failed,
    );

    check(
        "f1",
        (|| {
            let f = f1_score(0.830, 0.696);
            anyhow::ensure!((f - 0.757).abs() < 5e-4, "F1 {f}");
            Ok(format!("F1(0.830, 0.696) = {f:.4}"))
        })(),
        &mut failed,
    );

    check(
        "bleu",
        (|| {
            let c: Vec<Vec<&str>> = vec![vec!["a", "b", "c", "d"], vec!["e", "f", "g", "h", "i"]];
            anyhow::ensure!(bleu(&c, &c, 4)? == 1.0, "identical corpora");
            anyhow::ensure!(bleu(&[vec!["x", "y"]], &[vec!["p", "q"]], 4)? == 0.0, "disjoint corpora");
            let clipped = bleu(&[vec!["the", "the", "the"]], &[vec!["the", "cat"]], 4)?;
            anyhow::ensure!(clipped == 0.0, "clipped example gave {clipped}");
            Ok("identical 1, disjoint 0, clipped 0".into())
        })(),
        &mut failed,
    );

    check(
        "oracle",
        (|| {
            let data = generate(
                SynthSpec {
                    seed,
                    ..SynthSpec::default()
                },
                10,
                100,
                100,
            )?;
            let oracle = OracleScorer::new(&data.test);
            let spec = SweepSpec {
                ratios: vec![0.0, 0.5, 0.9],
                thresholds: default_thresholds(),
                seed,
                mode: CurveMode::PostGreedy,
            };
            for r in noise_sweep(&oracle, None, &data.test, &data.pool, &spec)? {
                anyhow::ensure!(r.best.f1 == 1.0, "noise {}: F1 {}", r.noise_ratio, r.best.f1);
            }
            Ok("F1 = 1 at noise 0, 0.5 and 0.9".into())
        })(),
        &mut failed,
    );

    if failed > 0 {
        return Err(Failure::Runtime(anyhow!("{failed} self-test(s) failed")));
    }
    Ok(())
}
