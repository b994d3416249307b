//! Attention-weight inspection: per-character weight dumps as TSV or as a
//! self-contained HTML heatmap, plus the line-oriented predict output.

use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::model::{predict, Head, Prediction};
use std::fmt::Write as _;

/// One inspected text: prediction plus aligned per-character weights.
#[derive(Debug, Clone)]
pub struct AttentionRecord {
    pub text: String,
    pub predicted: String,
    pub probability: f64,
    /// One weight per non-truncated character, summing to 1.
    pub weights: Vec<(char, f64)>,
}

/// Run the attention head over `texts` and collect aligned weights.
pub fn attention_records(ck: &Checkpoint, texts: &[String]) -> Result<Vec<AttentionRecord>> {
    if ck.hp.head != Head::Attention {
        return Err(Error::Usage(
            "attention dump requires an attention-head model (this checkpoint uses maxpool)".into(),
        ));
    }
    let preds = predict(texts, &ck.vocab, &ck.params, &ck.hp, 64, true)?;
    let mut out = Vec::with_capacity(texts.len());
    for (text, pred) in texts.iter().zip(preds) {
        let weights = pred.attention.as_ref().expect("attention head yields weights");
        let chars: Vec<char> = text.chars().take(ck.hp.max_len).collect();
        // empty text encodes as a single UNK; align it to nothing
        let aligned: Vec<(char, f64)> = if chars.is_empty() {
            Vec::new()
        } else {
            assert_eq!(chars.len(), weights.len());
            chars.into_iter().zip(weights.iter().copied()).collect()
        };
        out.push(AttentionRecord {
            text: text.clone(),
            predicted: ck.languages[pred.label].clone(),
            probability: pred.probs[pred.label],
            weights: aligned,
        });
    }
    Ok(out)
}

/// TSV dump: per text a `# text<TAB>label<TAB>prob` line, then one
/// `char<TAB>weight` line per character (6 decimals).
pub fn dump_tsv(records: &[AttentionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let _ = writeln!(out, "# {}\t{}\t{:.6}", r.text.replace(['\t', '\n'], " "), r.predicted, r.probability);
        for (ch, w) in &r.weights {
            let _ = writeln!(out, "{ch}\t{w:.6}");
        }
    }
    out
}

fn html_escape(c: char) -> String {
    match c {
        '&' => "&amp;".into(),
        '<' => "&lt;".into(),
        '>' => "&gt;".into(),
        '"' => "&quot;".into(),
        c => c.to_string(),
    }
}

/// Static single-file HTML heatmap, shading each character by its weight.
pub fn dump_html(records: &[AttentionRecord]) -> String {
    let mut out = String::from(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\
         <title>Attention weights</title>\
         <style>body{font-family:monospace;margin:2em}\
         .tw{margin-bottom:1.5em}.ch{padding:1px 0;border-radius:2px}\
         .lbl{color:#555;margin-left:1em}</style></head><body>\n\
         <h1>Attention weights</h1>\n",
    );
    for r in records {
        let max = r.weights.iter().map(|&(_, w)| w).fold(0.0f64, f64::max).max(1e-12);
        out.push_str("<div class=\"tw\"><div>");
        for &(ch, w) in &r.weights {
            // intensity proportional to the normalized weight
            let alpha = w / max;
            let _ = write!(
                out,
                "<span class=\"ch\" title=\"{w:.6}\" style=\"background:rgba(220,60,40,{alpha:.3})\">{}</span>",
                html_escape(ch)
            );
        }
        let _ = writeln!(
            out,
            "</div><div class=\"lbl\">&rarr; {} (p = {:.4})</div></div>",
            r.predicted, r.probability
        );
    }
    out.push_str("</body></html>\n");
    out
}

/// Format predictions as `label TAB probability TAB text` lines, input order.
pub fn predict_lines(ck: &Checkpoint, texts: &[String], preds: &[Prediction]) -> String {
    let mut out = String::new();
    for (text, p) in texts.iter().zip(preds) {
        let _ = writeln!(
            out,
            "{}\t{:.6}\t{}",
            ck.languages[p.label],
            p.probs[p.label],
            text
        );
    }
    out
}
