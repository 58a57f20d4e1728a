//! Priority-driven greedy token removal.
//!
//! Given a typed stream, a priority table, and a requested ratio, the
//! compressor pops tokens from a priority queue until exactly
//! floor(ratio * L) countable tokens are removed. Queue order: table rank
//! of the token's type first (rank 1 pops first, OutOfType last), then
//! higher term frequency, then later source position. Kept tokens retain
//! their original order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lexer::{self, TokenStream};
use crate::priority::PriorityTable;
use crate::typer::{self, TypedStream};

#[derive(Debug, Clone)]
pub struct CompressionRequest<'a> {
    pub typed: &'a TypedStream,
    pub tau_code: f64,
    pub table: &'a PriorityTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionResult {
    /// Countable indices kept, ascending.
    pub kept_indices: Vec<usize>,
    /// Countable indices removed, ascending.
    pub removed_indices: Vec<usize>,
    /// |removed| / L (0 when L = 0).
    pub achieved_tau: f64,
    /// Kept tokens rendered with single spaces.
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct QueueItem {
    rank: u8,
    tf: usize,
    pos: usize,
}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap pops the maximum, so "pops first" must compare as
        // greater: lower rank, then higher TF, then later position.
        other
            .rank
            .cmp(&self.rank)
            .then_with(|| self.tf.cmp(&other.tf))
            .then_with(|| self.pos.cmp(&other.pos))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn compress(req: &CompressionRequest) -> Result<CompressionResult> {
    if !(0.0..=1.0).contains(&req.tau_code) || req.tau_code.is_nan() {
        return Err(Error::InvalidRatio(req.tau_code));
    }
    let typed = req.typed;
    let l = typed.stream.countable_len();
    let to_remove = (req.tau_code * l as f64).floor() as usize;

    let mut queue: BinaryHeap<QueueItem> = BinaryHeap::with_capacity(l);
    for pos in 0..l {
        queue.push(QueueItem {
            rank: req.table.rank_of(typed.labels[pos]),
            tf: typed.tf_of(pos),
            pos,
        });
    }

    let mut removed = Vec::with_capacity(to_remove);
    while removed.len() < to_remove {
        let item = queue.pop().expect("queue holds all countable tokens");
        removed.push(item.pos);
    }
    removed.sort_unstable();

    let mut removed_mark = vec![false; l];
    for &i in &removed {
        removed_mark[i] = true;
    }
    let kept: Vec<usize> = (0..l).filter(|&i| !removed_mark[i]).collect();
    let text = lexer::detokenize(&typed.stream, &kept);
    let achieved_tau = if l == 0 {
        0.0
    } else {
        removed.len() as f64 / l as f64
    };

    Ok(CompressionResult {
        kept_indices: kept,
        removed_indices: removed,
        achieved_tau,
        text,
    })
}

/// Element-wise [`compress`]; item order is preserved and per-item errors
/// are aggregated with their indices.
pub fn compress_batch(reqs: &[CompressionRequest]) -> Result<Vec<CompressionResult>> {
    let results: Vec<Result<CompressionResult>> =
        reqs.par_iter().map(compress).collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut errors = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => errors.push((i, Box::new(e))),
        }
    }
    if errors.is_empty() {
        Ok(ok)
    } else {
        Err(Error::Batch(errors))
    }
}

/// Lex, classify, and compress raw source in one call. With
/// `strict_parse`, refuses source the parse heuristic rejects; otherwise
/// the typing pass degrades gracefully and compression proceeds.
pub fn compress_source(
    source: &str,
    tau_code: f64,
    table: &PriorityTable,
    strict_parse: bool,
) -> Result<(CompressionResult, TypedStream)> {
    let stream = lexer::lex(source);
    if strict_parse && !stream.is_parsable() {
        return Err(Error::Unparsable);
    }
    let typed = typer::classify(&stream, table);
    let result = compress(&CompressionRequest {
        typed: &typed,
        tau_code,
        table,
    })?;
    Ok((result, typed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::lex;
    use crate::priority::{PriorityTable, Task};
    use crate::typer::{classify, TokenTypeLabel, TypedStream};
    use std::collections::HashMap;

    fn table() -> PriorityTable {
        PriorityTable::default_for(Task::Assertion)
    }

    /// Build a typed stream directly from (text, label) pairs; TF is
    /// recomputed from the texts.
    fn synthetic_typed(tokens: &[(&str, TokenTypeLabel)]) -> TypedStream {
        let source: String = tokens
            .iter()
            .map(|(t, _)| *t)
            .collect::<Vec<_>>()
            .join(" ");
        let stream = lex(&source);
        assert_eq!(stream.countable_len(), tokens.len());
        let mut tf = HashMap::new();
        for (t, _) in tokens {
            *tf.entry(t.to_string()).or_insert(0usize) += 1;
        }
        TypedStream {
            stream,
            labels: tokens.iter().map(|(_, l)| *l).collect(),
            tf,
        }
    }

    #[test]
    fn tau_zero_removes_nothing() {
        let stream = lex("return x + y;");
        let typed = classify(&stream, &table());
        let r = compress(&CompressionRequest {
            typed: &typed,
            tau_code: 0.0,
            table: &table(),
        })
        .unwrap();
        assert!(r.removed_indices.is_empty());
        assert_eq!(r.kept_indices.len(), stream.countable_len());
        assert_eq!(r.text, "return x + y ;");
    }

    #[test]
    fn tau_one_removes_everything() {
        let stream = lex("return x + y;");
        let typed = classify(&stream, &table());
        let r = compress(&CompressionRequest {
            typed: &typed,
            tau_code: 1.0,
            table: &table(),
        })
        .unwrap();
        assert!(r.kept_indices.is_empty());
        assert_eq!(r.text, "");
        assert!((r.achieved_tau - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_tau() {
        let stream = lex("x");
        let typed = classify(&stream, &table());
        for tau in [-0.1, 1.1, f64::NAN] {
            let err = compress(&CompressionRequest {
                typed: &typed,
                tau_code: tau,
                table: &table(),
            });
            assert!(err.is_err());
        }
    }

    #[test]
    fn empty_stream_with_tau_zero() {
        let stream = lex("");
        let typed = classify(&stream, &table());
        let r = compress(&CompressionRequest {
            typed: &typed,
            tau_code: 0.0,
            table: &table(),
        })
        .unwrap();
        assert!(r.kept_indices.is_empty());
        assert_eq!(r.achieved_tau, 0.0);
    }

    #[test]
    fn twelve_token_stream_matches_brute_force() {
        use TokenTypeLabel::*;
        // Mixed labels and repeated texts so TF matters.
        let typed = synthetic_typed(&[
            ("a", Identifier),
            ("f", Invocation),
            ("(", Symbol),
            ("a", Identifier),
            (")", Symbol),
            (";", Symbol),
            ("if", Structure),
            ("(", Symbol),
            ("b", Identifier),
            (")", Symbol),
            ("g", Invocation),
            (";", Symbol),
        ]);
        let t = table();
        let r = compress(&CompressionRequest {
            typed: &typed,
            tau_code: 0.5,
            table: &t,
        })
        .unwrap();
        assert_eq!(r.removed_indices.len(), 6);

        // Independent oracle: sort every position by the queue order and
        // take the prefix.
        let mut order: Vec<usize> = (0..12).collect();
        order.sort_by(|&x, &y| {
            let kx = (t.rank_of(typed.labels[x]), typed.tf_of(x), x);
            let ky = (t.rank_of(typed.labels[y]), typed.tf_of(y), y);
            kx.0.cmp(&ky.0)
                .then(ky.1.cmp(&kx.1))
                .then(ky.2.cmp(&kx.2))
        });
        let mut expected: Vec<usize> = order[..6].to_vec();
        expected.sort_unstable();
        assert_eq!(r.removed_indices, expected);
    }

    #[test]
    fn out_of_type_removed_last() {
        use TokenTypeLabel::*;
        let typed = synthetic_typed(&[
            ("x", Identifier),
            ("42", OutOfType),
            ("y", Identifier),
            ("9", OutOfType),
        ]);
        let r = compress(&CompressionRequest {
            typed: &typed,
            tau_code: 0.5,
            table: &table(),
        })
        .unwrap();
        // Both identifiers go before either literal.
        assert_eq!(r.removed_indices, vec![0, 2]);
    }

    #[test]
    fn batch_matches_serial_and_preserves_order() {
        let sources: Vec<String> = (0..40)
            .map(|i| format!("void f{i}() {{ return g{i}(x{i}, {i}); }}"))
            .collect();
        let t = table();
        let typed: Vec<TypedStream> = sources
            .iter()
            .map(|s| classify(&lex(s), &t))
            .collect();
        let reqs: Vec<CompressionRequest> = typed
            .iter()
            .enumerate()
            .map(|(i, ty)| CompressionRequest {
                typed: ty,
                tau_code: (i % 10) as f64 / 10.0,
                table: &t,
            })
            .collect();
        let serial: Vec<CompressionResult> =
            reqs.iter().map(|r| compress(r).unwrap()).collect();
        let batch = compress_batch(&reqs).unwrap();
        assert_eq!(serial, batch);
    }

    #[test]
    fn batch_empty_and_singleton() {
        assert!(compress_batch(&[]).unwrap().is_empty());
        let stream = lex("return x;");
        let t = table();
        let typed = classify(&stream, &t);
        let req = CompressionRequest {
            typed: &typed,
            tau_code: 0.3,
            table: &t,
        };
        let batch = compress_batch(std::slice::from_ref(&req)).unwrap();
        assert_eq!(batch[0], compress(&req).unwrap());
    }

    #[test]
    fn batch_aggregates_errors_with_indices() {
        let stream = lex("return x;");
        let t = table();
        let typed = classify(&stream, &t);
        let reqs = vec![
            CompressionRequest { typed: &typed, tau_code: 0.3, table: &t },
            CompressionRequest { typed: &typed, tau_code: 2.0, table: &t },
            CompressionRequest { typed: &typed, tau_code: -1.0, table: &t },
        ];
        match compress_batch(&reqs) {
            Err(Error::Batch(items)) => {
                let indices: Vec<usize> = items.iter().map(|(i, _)| *i).collect();
                assert_eq!(indices, vec![1, 2]);
            }
            other => panic!("expected batch error, got {other:?}"),
        }
    }

    #[test]
    fn strict_parse_refuses_truncated_source() {
        let t = table();
        let err = compress_source("void f() { return g(", 0.2, &t, true);
        assert!(matches!(err, Err(Error::Unparsable)));
        // Non-strict path still compresses.
        let (r, _) = compress_source("void f() { return g(", 0.2, &t, false).unwrap();
        assert_eq!(r.removed_indices.len(), (0.2f64 * 7.0).floor() as usize);
    }
}
