//! Reduced words in a free group on `k` generators.
//!
//! Letters are indexed `0..2k`: index `2i` is generator `i`, index `2i + 1`
//! its inverse. Words are enumerated in lexicographic order of these indices
//! with every prefix preceding its extensions.

use std::fmt;

/// A word as a sequence of letter indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<u8>,
}

#[inline]
pub fn inverse_letter(l: u8) -> u8 {
    l ^ 1
}

/// Signed 1-based generator label of a letter (`-i` for an inverse).
pub fn signed_label(l: u8) -> i32 {
    let g = (l / 2) as i32 + 1;
    if l.is_multiple_of(2) {
        g
    } else {
        -g
    }
}

pub fn letter_from_label(label: i32) -> Option<u8> {
    if label == 0 {
        return None;
    }
    let g = (label.unsigned_abs() - 1) as u8;
    Some(2 * g + u8::from(label < 0))
}

impl Word {
    pub fn new(letters: Vec<u8>) -> Self {
        Self { letters }
    }

    pub fn from_labels(labels: &[i32]) -> Option<Self> {
        labels.iter().map(|&l| letter_from_label(l)).collect::<Option<Vec<_>>>().map(Self::new)
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_reduced(&self) -> bool {
        self.letters.windows(2).all(|w| w[1] != inverse_letter(w[0]))
    }

    pub fn inverse(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(|&l| inverse_letter(l)).collect() }
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.letters.starts_with(&self.letters)
    }

    pub fn labels(&self) -> Vec<i32> {
        self.letters.iter().map(|&l| signed_label(l)).collect()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{}", signed_label(*l))?;
        }
        Ok(())
    }
}

/// Number of reduced words of length at most `max_len` on `k` generators.
pub fn reduced_word_count(k: usize, max_len: usize) -> u64 {
    let mut total = 1u64;
    let mut level = 2 * k as u64;
    for _ in 1..=max_len {
        total += level;
        level *= 2 * k as u64 - 1;
    }
    total
}

/// Number of reduced words of length exactly `len`.
pub fn reduced_word_count_exact(k: usize, len: usize) -> u64 {
    if len == 0 {
        return 1;
    }
    2 * k as u64 * (2 * k as u64 - 1).pow(len as u32 - 1)
}

/// Iterator over all reduced words of length at most `max_len`.
pub struct ReducedWords {
    k: u8,
    max_len: usize,
    current: Option<Vec<u8>>,
}

pub fn reduced_words(k: usize, max_len: usize) -> ReducedWords {
    assert!((1..=127).contains(&k), "generator count out of range");
    ReducedWords { k: k as u8, max_len, current: None }
}

impl ReducedWords {
    fn first_child(&self, w: &[u8]) -> Option<u8> {
        (0..2 * self.k).find(|&l| w.last().is_none_or(|&p| l != inverse_letter(p)))
    }

    fn next_sibling(&self, w: &[u8]) -> Option<u8> {
        let last = *w.last()?;
        let prev = if w.len() >= 2 { Some(w[w.len() - 2]) } else { None };
        (last + 1..2 * self.k).find(|&l| prev.is_none_or(|p| l != inverse_letter(p)))
    }
}

impl Iterator for ReducedWords {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        let next = match self.current.take() {
            None => Some(Vec::new()),
            Some(mut w) => {
                // Preorder successor: descend if possible, otherwise the next
                // sibling of the deepest ancestor that has one.
                if w.len() < self.max_len {
                    let c = self.first_child(&w);
                    if let Some(c) = c {
                        w.push(c);
                    }
                    Some(w)
                } else {
                    loop {
                        if w.is_empty() {
                            break None;
                        }
                        if let Some(s) = self.next_sibling(&w) {
                            let n = w.len();
                            w[n - 1] = s;
                            break Some(w);
                        }
                        w.pop();
                    }
                }
            }
        };
        self.current = next.clone();
        next.map(Word::new)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_formula() {
        assert_eq!(reduced_words(2, 1).count(), 5);
        assert_eq!(reduced_words(2, 2).count(), 17);
        for k in 1..4 {
            for l in 0..6 {
                assert_eq!(reduced_words(k, l).count() as u64, reduced_word_count(k, l));
            }
        }
        assert_eq!(reduced_word_count_exact(2, 8), 4 * 3u64.pow(7));
    }

    #[test]
    fn words_are_reduced_distinct_and_ordered() {
        let all: Vec<Word> = reduced_words(2, 5).collect();
        assert!(all.iter().all(|w| w.is_reduced()));
        assert!(all.windows(2).all(|p| p[0] < p[1]));
        assert!(all[0].is_empty());
    }

    #[test]
    fn labels_round_trip() {
        let w = Word::from_labels(&[1, -2, -2, 1]).unwrap();
        assert_eq!(w.labels(), vec![1, -2, -2, 1]);
        assert_eq!(w.to_string(), "1.-2.-2.1");
        assert_eq!(w.inverse().labels(), vec![-1, 2, 2, -1]);
        assert!(!Word::from_labels(&[1, -1]).unwrap().is_reduced());
        assert!(Word::from_labels(&[0]).is_none());
    }
}
