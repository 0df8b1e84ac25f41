//! Slow, obviously-correct reference implementations.

use cupcleaner::corpus::Sample;
use rand::seq::SliceRandom;
use rand::Rng;

/// Longest common subsequence length by enumerating every subsequence of `a`.
pub fn brute_lcs(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    assert!(a.len() <= 16, "enumeration is exponential");
    (0u32..1 << a.len())
        .filter(|mask| {
            let sub = a
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, c)| c);
            is_subsequence(sub, &b)
        })
        .map(|mask| mask.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

fn is_subsequence<'a>(sub: impl Iterator<Item = &'a char>, hay: &[char]) -> bool {
    let mut rest = hay.iter();
    sub.into_iter().all(|c| rest.any(|h| h == c))
}

/// Textbook prefix DP for the LCS length of two token sequences.
pub fn dp_lcs<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

/// `true` if `sub` can be obtained from `seq` by deleting elements.
pub fn is_subsequence_of<T: PartialEq>(sub: &[T], seq: &[T]) -> bool {
    let mut rest = seq.iter();
    sub.iter().all(|x| rest.any(|y| y == x))
}

pub fn random_string(rng: &mut impl Rng, max_len: usize, alphabet: &[char]) -> String {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

pub fn random_tokens(rng: &mut impl Rng, max_len: usize, vocab: &[&str]) -> Vec<String> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| vocab.choose(rng).unwrap().to_string()).collect()
}

const CODE_WORDS: &[&str] = &[
    "int",
    "return",
    "if",
    "else",
    "for",
    "x",
    "y",
    "count",
    "buf_len",
    "get",
    "set",
    "(",
    ")",
    "{",
    "}",
    ";",
    "=",
    "+",
    "-",
    "null",
    "this.value",
    "List<String>",
    "i++",
];
const COMMENT_WORDS: &[&str] = &[
    "Returns", "the", "number", "of", "items", "in", "buffer", "Sets", "value", "@param", "x", "count", ".", ",",
    "Gets", "length", "null", "if", "empty", "über", "naïve",
];

fn words(rng: &mut impl Rng, vocab: &[&str], max_len: usize) -> String {
    random_tokens(rng, max_len, vocab).join(" ")
}

/// Mutates a few words of `text`, keeping the rest.
fn perturb(rng: &mut impl Rng, text: &str, vocab: &[&str]) -> String {
    let mut tokens: Vec<String> = text.split(' ').filter(|t| !t.is_empty()).map(String::from).collect();
    for _ in 0..rng.gen_range(0..4) {
        match rng.gen_range(0..3) {
            0 if !tokens.is_empty() => {
                let i = rng.gen_range(0..tokens.len());
                tokens.remove(i);
            }
            1 => {
                let i = rng.gen_range(0..=tokens.len());
                tokens.insert(i, vocab.choose(rng).unwrap().to_string());
            }
            _ if !tokens.is_empty() => {
                let i = rng.gen_range(0..tokens.len());
                tokens[i] = vocab.choose(rng).unwrap().to_string();
            }
            _ => {}
        }
    }
    tokens.join(" ")
}

/// A random sample: either a small edit of one snippet or two unrelated ones.
pub fn random_sample(rng: &mut impl Rng, id: usize) -> Sample {
    let old_code = words(rng, CODE_WORDS, 20);
    let old_comment = words(rng, COMMENT_WORDS, 12);
    let (new_code, new_comment) = if rng.gen_bool(0.7) {
        (
            perturb(rng, &old_code, CODE_WORDS),
            perturb(rng, &old_comment, COMMENT_WORDS),
        )
    } else {
        (words(rng, CODE_WORDS, 20), words(rng, COMMENT_WORDS, 12))
    };
    Sample {
        id: format!("r{id}"),
        old_code,
        new_code,
        old_comment,
        new_comment,
        split: cupcleaner::corpus::Split::Train,
        meta: Default::default(),
    }
}
