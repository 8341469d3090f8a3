//! Ratcliff-Obershelp ("gestalt pattern matching") similarity.
//!
//! The matched-character count M is found by locating the longest common
//! contiguous block, then recursing on the unmatched material to the left
//! and to the right of it. The score is `2M / (|a| + |b|)`.
//!
//! Ties between equally long blocks are broken the way `difflib` does it
//! (earliest start in the first string, then earliest start in the second).
//! That rule depends on argument order, so the count is taken in both
//! directions and the larger one is kept; the result is symmetric and equals
//! the one-directional count whenever the two agree.

use std::collections::HashMap;

pub fn ratcliff_obershelp(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    ratcliff_obershelp_chars(&a, &b)
}

pub fn ratcliff_obershelp_chars(a: &[char], b: &[char]) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    let matched = matched_chars(a, b);
    2.0 * matched as f64 / total as f64
}

/// Symmetric matched-character count.
pub fn matched_chars(a: &[char], b: &[char]) -> usize {
    if a == b {
        return a.len();
    }
    let forward = BlockMatcher::new(a, b).total_matched();
    if forward == a.len().min(b.len()) {
        return forward;
    }
    let backward = BlockMatcher::new(b, a).total_matched();
    forward.max(backward)
}

struct BlockMatcher<'s> {
    a: &'s [char],
    b: &'s [char],
    /// Positions of every character in `b`, ascending.
    b_index: HashMap<char, Vec<usize>>,
    // Rolling rows of "length of the common run ending at (i, j)", indexed by
    // j + 1, reset through the touched lists between rows.
    prev: Vec<usize>,
    cur: Vec<usize>,
    prev_touched: Vec<usize>,
    cur_touched: Vec<usize>,
}

impl<'s> BlockMatcher<'s> {
    fn new(a: &'s [char], b: &'s [char]) -> Self {
        let mut b_index: HashMap<char, Vec<usize>> = HashMap::new();
        for (j, &c) in b.iter().enumerate() {
            b_index.entry(c).or_default().push(j);
        }
        Self {
            a,
            b,
            b_index,
            prev: vec![0; b.len() + 1],
            cur: vec![0; b.len() + 1],
            prev_touched: Vec::new(),
            cur_touched: Vec::new(),
        }
    }

    fn total_matched(&mut self) -> usize {
        let mut total = 0;
        let mut pending = vec![(0, self.a.len(), 0, self.b.len())];
        while let Some((alo, ahi, blo, bhi)) = pending.pop() {
            let (i, j, size) = self.longest_match(alo, ahi, blo, bhi);
            if size == 0 {
                continue;
            }
            total += size;
            if alo < i && blo < j {
                pending.push((alo, i, blo, j));
            }
            if i + size < ahi && j + size < bhi {
                pending.push((i + size, ahi, j + size, bhi));
            }
        }
        total
    }

    /// Longest common block of `a[alo..ahi]` and `b[blo..bhi]` as
    /// `(start_in_a, start_in_b, length)`.
    fn longest_match(&mut self, alo: usize, ahi: usize, blo: usize, bhi: usize) -> (usize, usize, usize) {
        let (mut best_i, mut best_j, mut best_size) = (alo, blo, 0);
        for i in alo..ahi {
            self.cur_touched.clear();
            if let Some(positions) = self.b_index.get(&self.a[i]) {
                let start = positions.partition_point(|&j| j < blo);
                for &j in &positions[start..] {
                    if j >= bhi {
                        break;
                    }
                    let run = self.prev[j] + 1;
                    self.cur[j + 1] = run;
                    self.cur_touched.push(j + 1);
                    if run > best_size {
                        best_i = i + 1 - run;
                        best_j = j + 1 - run;
                        best_size = run;
                    }
                }
            }
            for &t in &self.prev_touched {
                self.prev[t] = 0;
            }
            std::mem::swap(&mut self.prev, &mut self.cur);
            std::mem::swap(&mut self.prev_touched, &mut self.cur_touched);
        }
        for &t in &self.prev_touched {
            self.prev[t] = 0;
        }
        self.prev_touched.clear();
        (best_i, best_j, best_size)
    }
}
