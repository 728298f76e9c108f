use std::collections::HashMap;

use crate::error::{Error, Result};

/// Number of annotator answers per VQA question.
pub const HUMAN_ANSWERS: usize = 10;

const STRIPPED: &[char] = &['.', ',', '?', '!', '"', '\'', '(', ')', ':', ';'];
const ARTICLES: &[&str] = &["a", "an", "the"];
const NUMBER_WORDS: &[(&str, &str)] = &[
    ("zero", "0"),
    ("one", "1"),
    ("two", "2"),
    ("three", "3"),
    ("four", "4"),
    ("five", "5"),
    ("six", "6"),
    ("seven", "7"),
    ("eight", "8"),
    ("nine", "9"),
    ("ten", "10"),
];

/// Lowercases, strips punctuation, drops articles, maps number words to
/// digits and collapses whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lowered: String = text.to_lowercase().chars().filter(|c| !STRIPPED.contains(c)).collect();
    lowered
        .split_whitespace()
        .filter(|w| !ARTICLES.contains(w))
        .map(|w| NUMBER_WORDS.iter().find(|(word, _)| *word == w).map_or(w, |(_, d)| d))
        .collect::<Vec<_>>()
        .join(" ")
}

/// `min(0.3 n, 1)` where `n` counts annotators agreeing with the model
/// after normalization.
pub fn vqa_accuracy(model_answer: &str, human_answers: &[impl AsRef<str>]) -> Result<f64> {
    if human_answers.len() != HUMAN_ANSWERS {
        return Err(Error::invalid(format!(
            "expected {HUMAN_ANSWERS} human answers, got {}",
            human_answers.len()
        )));
    }
    let model = normalize_answer(model_answer);
    let n = human_answers.iter().filter(|h| normalize_answer(h.as_ref()) == model).count();
    // integer form keeps 0.9 exact
    Ok((3 * n).min(10) as f64 / 10.0)
}

/// Length of the longest common subsequence (by `char`).
pub fn lcs_len(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ca in &a {
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `2 |LCS| / (|a| + |b|)` on normalized answers; 1 when both are empty.
pub fn lcs_similarity(a: &str, b: &str) -> f64 {
    let (a, b) = (normalize_answer(a), normalize_answer(b));
    let total = a.chars().count() + b.chars().count();
    if total == 0 {
        return 1.0;
    }
    2.0 * lcs_len(&a, &b) as f64 / total as f64
}

/// Most frequent normalized answers, in order of first appearance.
pub fn modal_answers(human_answers: &[impl AsRef<str>]) -> Vec<String> {
    let mut counts: HashMap<String, (usize, usize)> = HashMap::new();
    for (i, h) in human_answers.iter().enumerate() {
        counts.entry(normalize_answer(h.as_ref())).or_insert((0, i)).0 += 1;
    }
    let top = counts.values().map(|(c, _)| *c).max().unwrap_or(0);
    let mut modes: Vec<(usize, String)> =
        counts.into_iter().filter(|(_, (c, _))| *c == top).map(|(a, (_, first))| (first, a)).collect();
    modes.sort();
    modes.into_iter().map(|(_, a)| a).collect()
}

/// True unless the model answer differs from every modal human answer.
pub fn majority_pass(model_answer: &str, human_answers: &[impl AsRef<str>]) -> Result<bool> {
    if human_answers.is_empty() {
        return Err(Error::invalid("majority test needs at least one human answer"));
    }
    let model = normalize_answer(model_answer);
    Ok(modal_answers(human_answers).contains(&model))
}
