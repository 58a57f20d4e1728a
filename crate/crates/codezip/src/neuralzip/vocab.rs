//! Vocabulary with reserved special tokens, and sample encoding.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::CompressionSample;
use crate::error::{Error, Result};
use crate::priority::Task;

pub const PAD: &str = "<PAD>";
pub const UNK: &str = "<UNK>";
pub const BOS: &str = "<BOS>";
pub const EOS: &str = "<EOS>";
pub const RATIO_OPEN: &str = "<Ratio>";
pub const RATIO_CLOSE: &str = "</Ratio>";
pub const COMPRESS_OPEN: &str = "<Compress>";
pub const COMPRESS_CLOSE: &str = "</Compress>";

/// <PAD>, <UNK>, <BOS>, <EOS>, the three task tokens, the four ratio and
/// compress markers, then digit and point tokens for ratio literals.
fn reserved_tokens() -> Vec<String> {
    let mut v: Vec<String> = vec![
        PAD.into(),
        UNK.into(),
        BOS.into(),
        EOS.into(),
        task_token(Task::Assertion),
        task_token(Task::Bugs2Fix),
        task_token(Task::Suggestion),
        RATIO_OPEN.into(),
        RATIO_CLOSE.into(),
        COMPRESS_OPEN.into(),
        COMPRESS_CLOSE.into(),
    ];
    for d in 0..10 {
        v.push(d.to_string());
    }
    v.push(".".into());
    v
}

pub fn task_token(task: Task) -> String {
    format!("<{}>", task.tag())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocab {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocab {
    /// Build from corpus tokens: reserved ids first, then corpus tokens by
    /// descending frequency (ties by text) up to `max_size`.
    pub fn build<'a>(corpus_tokens: impl Iterator<Item = &'a str>, max_size: usize) -> Vocab {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in corpus_tokens {
            *counts.entry(t).or_insert(0) += 1;
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut tokens = reserved_tokens();
        let reserved: HashMap<&String, ()> = tokens.iter().map(|t| (t, ())).collect();
        let mut extra = Vec::new();
        for (t, _) in ranked {
            if tokens.len() + extra.len() >= max_size {
                break;
            }
            if !reserved.contains_key(&t.to_string()) {
                extra.push(t.to_string());
            }
        }
        drop(reserved);
        tokens.extend(extra);
        Self::from_tokens(tokens)
    }

    pub fn from_tokens(tokens: Vec<String>) -> Vocab {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocab { tokens, index }
    }

    /// Rebuild the lookup index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> u32 {
        self.id(token).unwrap_or(Self::UNK_ID)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub const PAD_ID: u32 = 0;
    pub const UNK_ID: u32 = 1;
    pub const BOS_ID: u32 = 2;
    pub const EOS_ID: u32 = 3;

    pub fn n_reserved() -> usize {
        reserved_tokens().len()
    }

    pub fn is_special(&self, id: u32) -> bool {
        (id as usize) < Self::n_reserved()
    }
}

/// Copy bookkeeping for one encoded input: which positions are copyable
/// payload and what extended id each position carries. OOV source tokens
/// share one slot per distinct text, appended after the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct CopyInfo {
    /// Per input position: vocab id, or V + slot for OOV payload tokens.
    pub ext_ids: Vec<u32>,
    /// True for source-token positions (special markers are never copied).
    pub payload: Vec<bool>,
    /// Distinct OOV texts, slot order.
    pub oov_tokens: Vec<String>,
}

impl CopyInfo {
    pub fn n_oov(&self) -> usize {
        self.oov_tokens.len()
    }

    /// Extended id back to text.
    pub fn ext_token<'a>(&'a self, vocab: &'a Vocab, ext_id: u32) -> &'a str {
        let v = vocab.len() as u32;
        if ext_id < v {
            vocab.token(ext_id)
        } else {
            &self.oov_tokens[(ext_id - v) as usize]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSample {
    pub input_ids: Vec<u32>,
    pub copy: CopyInfo,
    /// Decoder input: BOS then the target with OOV mapped to UNK.
    pub dec_in_ids: Vec<u32>,
    /// Targets in the extended vocabulary, EOS-terminated.
    pub target_ids: Vec<u32>,
}

fn ratio_digit(tau: f64) -> Result<u32> {
    let scaled = tau * 10.0;
    let digit = scaled.round();
    if (scaled - digit).abs() > 1e-9 || !(1.0..=9.0).contains(&digit) {
        return Err(Error::OffGridRatio(tau));
    }
    Ok(digit as u32)
}

/// Serialize (task, tau, source tokens) to the model input:
/// `<TASK> <Ratio> 0 . d </Ratio> <Compress> src... </Compress>`.
/// Inputs longer than `l_src` lose source tokens from the end, with a
/// logged warning.
pub fn encode_input(
    vocab: &Vocab,
    task: Task,
    tau: f64,
    src_tokens: &[String],
    l_src: usize,
) -> Result<(Vec<u32>, CopyInfo)> {
    let digit = ratio_digit(tau)?;
    let head = [
        vocab.id(&task_token(task)).expect("task token reserved"),
        vocab.id(RATIO_OPEN).unwrap(),
        vocab.id("0").unwrap(),
        vocab.id(".").unwrap(),
        vocab.id(&digit.to_string()).unwrap(),
        vocab.id(RATIO_CLOSE).unwrap(),
        vocab.id(COMPRESS_OPEN).unwrap(),
    ];
    let budget = l_src.saturating_sub(head.len() + 1);
    let src = if src_tokens.len() > budget {
        log::warn!(
            "input truncated from {} to {} source tokens",
            src_tokens.len(),
            budget
        );
        &src_tokens[..budget]
    } else {
        src_tokens
    };

    let mut input_ids = Vec::with_capacity(head.len() + src.len() + 1);
    let mut ext_ids = Vec::with_capacity(input_ids.capacity());
    let mut payload = Vec::with_capacity(input_ids.capacity());
    let mut oov_tokens: Vec<String> = Vec::new();

    for id in head {
        input_ids.push(id);
        ext_ids.push(id);
        payload.push(false);
    }
    let v = vocab.len() as u32;
    for tok in src {
        match vocab.id(tok) {
            Some(id) => {
                input_ids.push(id);
                ext_ids.push(id);
            }
            None => {
                input_ids.push(Vocab::UNK_ID);
                let slot = match oov_tokens.iter().position(|t| t == tok) {
                    Some(s) => s,
                    None => {
                        oov_tokens.push(tok.clone());
                        oov_tokens.len() - 1
                    }
                };
                ext_ids.push(v + slot as u32);
            }
        }
        payload.push(true);
    }
    let close = vocab.id(COMPRESS_CLOSE).unwrap();
    input_ids.push(close);
    ext_ids.push(close);
    payload.push(false);

    Ok((
        input_ids,
        CopyInfo {
            ext_ids,
            payload,
            oov_tokens,
        },
    ))
}

/// Encode a full training sample with teacher-forcing targets.
pub fn encode_sample(
    vocab: &Vocab,
    sample: &CompressionSample,
    l_src: usize,
    l_tgt: usize,
) -> Result<EncodedSample> {
    let (input_ids, copy) = encode_input(vocab, sample.task, sample.tau, &sample.src, l_src)?;

    let v = vocab.len() as u32;
    let tgt = if sample.tgt.len() + 1 > l_tgt {
        log::warn!(
            "target truncated from {} to {} tokens",
            sample.tgt.len(),
            l_tgt - 1
        );
        &sample.tgt[..l_tgt - 1]
    } else {
        &sample.tgt[..]
    };

    let mut dec_in_ids = vec![Vocab::BOS_ID];
    let mut target_ids = Vec::with_capacity(tgt.len() + 1);
    for tok in tgt {
        let ext = match vocab.id(tok) {
            Some(id) => id,
            None => match copy.oov_tokens.iter().position(|t| t == tok) {
                Some(slot) => v + slot as u32,
                None => Vocab::UNK_ID, // target token absent from source
            },
        };
        target_ids.push(ext);
        dec_in_ids.push(if ext >= v { Vocab::UNK_ID } else { ext });
    }
    target_ids.push(Vocab::EOS_ID);

    Ok(EncodedSample {
        input_ids,
        copy,
        dec_in_ids,
        target_ids,
    })
}
