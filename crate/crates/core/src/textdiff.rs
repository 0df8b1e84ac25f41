//! Word-level tokenization, LCS diffs and the character overlap score.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextKind {
    Comment,
    Code,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub kind: TextKind,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn join(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Tokens changed between two sequences.
///
/// `combined` is `changed_old` followed by `changed_new`, the flat word
/// collection used both for the diff embedding and for the overlap score.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DiffResult {
    pub changed_old: Vec<String>,
    pub changed_new: Vec<String>,
    pub combined: Vec<String>,
}

impl DiffResult {
    pub fn is_empty(&self) -> bool {
        self.combined.is_empty()
    }

    pub fn joined(&self) -> String {
        self.combined.join(" ")
    }
}

/// `_` stays inside identifiers; every other ASCII punctuation mark is a token.
fn is_separate_punct(c: char) -> bool {
    c.is_ascii_punctuation() && c != '_'
}

/// Splits on whitespace and isolates punctuation characters.
///
/// No case folding and no sub-token splitting, so the concatenation of the
/// tokens is exactly the non-whitespace content of `text`.
pub fn tokenize(text: &str, kind: TextKind) -> TokenSeq {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() || is_separate_punct(c) {
            if let Some(s) = start.take() {
                tokens.push(text[s..i].to_string());
            }
            if !c.is_whitespace() {
                tokens.push(c.to_string());
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(text[s..].to_string());
    }
    TokenSeq { tokens, kind }
}

/// Word-level diff through a maximum common subsequence alignment.
///
/// The alignment is walked front to back over a suffix LCS table, taking a
/// match whenever the heads agree, otherwise dropping from `old` when that
/// keeps the optimum and inserting from `new` only when it must.
pub fn word_diff(old: &TokenSeq, new: &TokenSeq) -> DiffResult {
    let (a, b) = (&old.tokens, &new.tokens);
    let table = SuffixLcs::new(a, b);

    let mut changed_old = Vec::new();
    let mut changed_new = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            i += 1;
            j += 1;
        } else if table.get(i + 1, j) >= table.get(i, j + 1) {
            changed_old.push(a[i].clone());
            i += 1;
        } else {
            changed_new.push(b[j].clone());
            j += 1;
        }
    }
    changed_old.extend_from_slice(&a[i..]);
    changed_new.extend_from_slice(&b[j..]);

    let mut combined = Vec::with_capacity(changed_old.len() + changed_new.len());
    combined.extend_from_slice(&changed_old);
    combined.extend_from_slice(&changed_new);
    DiffResult {
        changed_old,
        changed_new,
        combined,
    }
}

/// `get(i, j)` = LCS length of `a[i..]` and `b[j..]`.
struct SuffixLcs {
    width: usize,
    cells: Vec<u32>,
}

impl SuffixLcs {
    fn new<T: PartialEq>(a: &[T], b: &[T]) -> Self {
        let width = b.len() + 1;
        let mut cells = vec![0u32; (a.len() + 1) * width];
        for i in (0..a.len()).rev() {
            for j in (0..b.len()).rev() {
                cells[i * width + j] = if a[i] == b[j] {
                    cells[(i + 1) * width + j + 1] + 1
                } else {
                    cells[(i + 1) * width + j].max(cells[i * width + j + 1])
                };
            }
        }
        SuffixLcs { width, cells }
    }

    fn get(&self, i: usize, j: usize) -> u32 {
        self.cells[i * self.width + j]
    }
}

/// Length of the longest common character subsequence.
pub fn lcs_len(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    lcs_chars(&a, &b)
}

fn lcs_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut row = vec![0usize; b.len() + 1];
    for &ca in a {
        for (j, &cb) in b.iter().enumerate() {
            row[j + 1] = if ca == cb { prev[j] + 1 } else { prev[j + 1].max(row[j]) };
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[b.len()]
}

/// Mean over the comment-diff words of their best LCS ratio against any
/// code-diff word. Zero when `dc` is empty.
pub fn overlap_score<S: AsRef<str>>(dc: &[S], ds: &[S]) -> f64 {
    if dc.is_empty() {
        return 0.0;
    }
    let code_words: Vec<Vec<char>> = ds.iter().map(|w| w.as_ref().chars().collect()).collect();
    let mut total = 0.0;
    for word in dc {
        let chars: Vec<char> = word.as_ref().chars().collect();
        if chars.is_empty() {
            continue;
        }
        let len = chars.len() as f64;
        let mut best = 0.0f64;
        for other in &code_words {
            let ratio = lcs_chars(&chars, other) as f64 / len;
            if ratio > best {
                best = ratio;
            }
        }
        total += best;
    }
    total / dc.len() as f64
}
