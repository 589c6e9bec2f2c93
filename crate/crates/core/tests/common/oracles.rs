//! Reference implementations used to cross-check the library.

use std::cmp::Ordering;

use rolecast::emodb::EmotionDatabase;

pub const GAP: f64 = 0.4;
pub const TIE_EPS: f64 = 1e-9;

/// Lowercase alphanumeric runs. Only valid for ASCII input.
pub fn ascii_tokens(s: &str) -> Vec<String> {
    s.to_ascii_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Multiset F1 by sorting both token lists and merging.
pub fn f1(a: &[String], b: &[String]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort();
    y.sort();
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    2.0 * common as f64 / (a.len() + b.len()) as f64
}

/// Op codes ordered so that byte order is the tie-break order:
/// match < skip line < skip utterance.
pub const OP_MATCH: u8 = b'M';
pub const OP_SKIP_LINE: u8 = b'N';
pub const OP_SKIP_UTT: u8 = b'U';

fn enumerate(n: usize, m: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if n == 0 && m == 0 {
        out.push(prefix.clone());
        return;
    }
    if n > 0 && m > 0 {
        prefix.push(OP_MATCH);
        enumerate(n - 1, m - 1, prefix, out);
        prefix.pop();
    }
    if n > 0 {
        prefix.push(OP_SKIP_LINE);
        enumerate(n - 1, m, prefix, out);
        prefix.pop();
    }
    if m > 0 {
        prefix.push(OP_SKIP_UTT);
        enumerate(n, m - 1, prefix, out);
        prefix.pop();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteAlignment {
    pub ops: Vec<u8>,
    pub pairs: Vec<(usize, usize)>,
    pub score: f64,
}

/// Exhaustive search over every monotone alignment. Best score wins; among
/// scores within [`TIE_EPS`] of it the lexicographically smallest op string.
pub fn brute_force_align(lines: &[&str], utterances: &[&str]) -> BruteAlignment {
    let lt: Vec<Vec<String>> = lines.iter().map(|s| ascii_tokens(s)).collect();
    let ut: Vec<Vec<String>> = utterances.iter().map(|s| ascii_tokens(s)).collect();
    let mut all = Vec::new();
    enumerate(lines.len(), utterances.len(), &mut Vec::new(), &mut all);

    type Scored = (Vec<u8>, Vec<(usize, usize)>, f64);
    let scored: Vec<Scored> = all
        .into_iter()
        .map(|ops| {
            let (mut i, mut j, mut score) = (0, 0, 0.0);
            let mut pairs = Vec::new();
            for &op in &ops {
                match op {
                    OP_MATCH => {
                        score += f1(&lt[i], &ut[j]);
                        pairs.push((i, j));
                        i += 1;
                        j += 1;
                    }
                    OP_SKIP_LINE => {
                        score -= GAP;
                        i += 1;
                    }
                    _ => {
                        score -= GAP;
                        j += 1;
                    }
                }
            }
            (ops, pairs, score)
        })
        .collect();
    let best = scored.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
    let (ops, pairs, score) = scored
        .into_iter()
        .filter(|s| s.2 >= best - TIE_EPS)
        .min_by(|a, b| a.0.cmp(&b.0))
        .expect("at least one alignment");
    BruteAlignment { ops, pairs, score }
}

/// Exhaustive retrieval: rank every entry by (similarity desc, id asc).
pub fn scan_top1(db: &EmotionDatabase, query: &[f64]) -> (String, f64) {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let qn = norm(query);
    let mut ranked: Vec<(f64, &str)> = db
        .entries
        .iter()
        .map(|e| {
            let v = e.embedding.as_slice();
            let dot: f64 = query.iter().zip(v).map(|(a, b)| a * b).sum();
            ((dot / (qn * norm(v))).clamp(-1.0, 1.0), e.utterance_id.as_str())
        })
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    (ranked[0].1.to_string(), ranked[0].0)
}

/// The noisy alignment fixture: 30 script lines in 5 scenes, the matching
/// utterances with recognition noise, two utterances missing and one
/// extra crosstalk utterance. Returns (script text, utterance texts,
/// expected scene spans).
pub fn noisy_fixture() -> (String, Vec<String>, Vec<(usize, usize)>) {
    let scene_sizes = [7, 5, 6, 8, 4];
    let vocab = [
        "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliet", "kilo", "lima",
        "mike", "november", "oscar", "papa", "quebec", "romeo", "sierra", "tango", "uniform", "victor", "whiskey",
        "xray", "yankee", "zulu", "amber", "basil", "cedar", "dune",
    ];
    let mut script = String::new();
    let mut utterances = Vec::new();
    // Line ordinals whose utterance the recognizer lost.
    let dropped = [7usize, 20];
    let crosstalk_after = 15usize;
    let mut spans = Vec::new();
    let mut ordinal = 0;
    for (s, size) in scene_sizes.iter().enumerate() {
        script.push_str(&format!("[SCENE] Scene {}\n", s + 1));
        let mut first: Option<usize> = None;
        for _ in 0..*size {
            let w = |k: usize| vocab[(ordinal * 7 + k * 3) % vocab.len()];
            let line = format!("{} {} {} the {} again", w(0), w(1), w(2), w(3));
            script.push_str(&format!("Speaker{}: {}\n", ordinal % 3, capitalize(&line)));
            if !dropped.contains(&ordinal) {
                // Recognition noise: lowercase, no punctuation, one word lost.
                let noisy = format!("{} {} the {} again", w(0), w(2), w(3));
                first.get_or_insert(utterances.len());
                utterances.push(noisy);
            }
            if ordinal == crosstalk_after {
                utterances.push("mm hmm".to_string());
            }
            ordinal += 1;
        }
        spans.push(first.expect("scene keeps at least one line"));
    }
    let n = utterances.len();
    let mut expected = Vec::new();
    for (k, &start) in spans.iter().enumerate() {
        let start = if k == 0 { 0 } else { start };
        let end = spans.get(k + 1).map_or(n - 1, |next| next - 1);
        expected.push((start, end));
    }
    (script, utterances, expected)
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str() + "!",
        None => String::new(),
    }
}
