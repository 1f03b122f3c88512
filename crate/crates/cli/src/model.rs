//! Saving and loading trained scorers with their vocabularies.
//!
//! A model at `m` keeps its vocabularies in `m.src.vocab` and
//! `m.tgt.vocab`. Neural models are binary checkpoints whose metadata
//! records the dimensions, the training settings and the vocabulary file
//! names; baseline models are JSON documents.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bitext_core::baseline::{BaselineModel, CandidateFilter};
use bitext_core::corpus::Vocabulary;
use bitext_core::extraction::{PairScorer, ScorerKind, BASELINE_RHO};
use bitext_core::nncore::checkpoint::{Checkpoint, MAGIC};
use bitext_core::nncore::ParamSet;
use bitext_core::siamese::{Dims, HyperParams, ModelParams, SiameseScorer};

pub fn sidecar(model: &Path, suffix: &str) -> PathBuf {
    let mut name = model.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    model.with_file_name(name)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

pub enum Scorer {
    Birnn(SiameseScorer<f32>),
    Baseline(BaselineModel),
}

pub struct LoadedModel {
    pub scorer: Scorer,
    pub src_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
    /// Threshold the model was trained for.
    pub rho: f64,
}

impl LoadedModel {
    pub fn kind(&self) -> ScorerKind {
        match self.scorer {
            Scorer::Birnn(_) => ScorerKind::Birnn,
            Scorer::Baseline(_) => ScorerKind::Baseline,
        }
    }

    pub fn pair_scorer(&self) -> &dyn PairScorer {
        match &self.scorer {
            Scorer::Birnn(s) => s,
            Scorer::Baseline(b) => b,
        }
    }

    pub fn filter(&self) -> Option<&CandidateFilter> {
        match &self.scorer {
            Scorer::Birnn(_) => None,
            Scorer::Baseline(b) => Some(&b.filter),
        }
    }
}

pub fn save_vocabularies(model: &Path, src: &Vocabulary, tgt: &Vocabulary) -> Result<(PathBuf, PathBuf)> {
    let (sp, tp) = (sidecar(model, ".src.vocab"), sidecar(model, ".tgt.vocab"));
    src.save(&sp)?;
    tgt.save(&tp)?;
    Ok((sp, tp))
}

pub fn birnn_checkpoint(
    params: &ModelParams<f32>,
    h: &HyperParams,
    vocab_files: (&Path, &Path),
) -> Checkpoint {
    let d = params.dims();
    let mut meta = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        meta.insert(k.to_string(), v);
    };
    put("scorer", ScorerKind::Birnn.name().into());
    put("emb", d.emb.to_string());
    put("hidden", d.hidden.to_string());
    put("head", d.head.to_string());
    put("negatives", h.negatives.to_string());
    put("lr", h.lr.to_string());
    put("batch", h.batch.to_string());
    put("epochs", h.epochs.to_string());
    put("clip_norm", h.clip_norm.to_string());
    put("drop_in", h.drop_in.to_string());
    put("drop_out", h.drop_out.to_string());
    put("rho", h.rho.to_string());
    put("seed", h.seed.to_string());
    put("src_vocab", file_name(vocab_files.0));
    put("tgt_vocab", file_name(vocab_files.1));
    put("src_vocab_size", params.src_vocab().to_string());
    put("tgt_vocab_size", params.tgt_vocab().to_string());
    Checkpoint::from_params(params, meta)
}

fn meta_value<T: std::str::FromStr>(c: &Checkpoint, key: &str) -> Result<T> {
    let v = c.meta(key).with_context(|| format!("checkpoint metadata lacks '{key}'"))?;
    v.parse().ok().with_context(|| format!("checkpoint metadata '{key}' = {v:?} is malformed"))
}

fn load_birnn(path: &Path, bytes: &[u8]) -> Result<LoadedModel> {
    let c = Checkpoint::from_bytes(bytes)?;
    let dir = path.parent().unwrap_or(Path::new(""));
    let vocab = |key: &str| -> Result<Vocabulary> {
        let name: String = meta_value(&c, key)?;
        let p = dir.join(name);
        Vocabulary::load(&p).with_context(|| format!("loading vocabulary {}", p.display()))
    };
    let (src_vocab, tgt_vocab) = (vocab("src_vocab")?, vocab("tgt_vocab")?);
    let dims = Dims {
        emb: meta_value(&c, "emb")?,
        hidden: meta_value(&c, "hidden")?,
        head: meta_value(&c, "head")?,
    };
    let mut params = ModelParams::<f32>::zeros(src_vocab.len(), tgt_vocab.len(), dims);
    c.restore_into(&mut params)
        .context("checkpoint does not match its vocabularies")?;
    if !params.tensors().iter().all(|t| t.is_finite()) {
        bail!("checkpoint holds non-finite parameters");
    }
    Ok(LoadedModel {
        scorer: Scorer::Birnn(SiameseScorer::new(params)),
        src_vocab,
        tgt_vocab,
        rho: meta_value(&c, "rho")?,
    })
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read model {}", path.display()))?;
    if bytes.starts_with(MAGIC.as_bytes()) {
        return load_birnn(path, &bytes).with_context(|| format!("loading {}", path.display()));
    }
    if bytes.first() == Some(&b'{') {
        let model = BaselineModel::from_json(&bytes).with_context(|| format!("loading {}", path.display()))?;
        let vocab = |suffix: &str| -> Result<Vocabulary> {
            let p = sidecar(path, suffix);
            Vocabulary::load(&p).with_context(|| format!("loading vocabulary {}", p.display()))
        };
        return Ok(LoadedModel {
            scorer: Scorer::Baseline(model),
            src_vocab: vocab(".src.vocab")?,
            tgt_vocab: vocab(".tgt.vocab")?,
            rho: BASELINE_RHO,
        });
    }
    bail!("{} is not a model file (unknown magic)", path.display())
}
