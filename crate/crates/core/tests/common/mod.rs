//! Reference implementations used only by the tests. They favor directness
//! over speed and share no code with the library.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

fn alphabet(a: &[char], b: &[char]) -> Vec<char> {
    let set: HashSet<char> = a.iter().chain(b).copied().collect();
    let mut chars: Vec<char> = set.into_iter().collect();
    chars.sort_unstable();
    chars
}

/// Strings over at most four symbols packed two bits per symbol, with the
/// length in the top byte.
fn pack(s: &[u8]) -> u64 {
    assert!(s.len() <= 28, "string too long for the search oracle");
    s.iter().enumerate().fold((s.len() as u64) << 56, |key, (i, &c)| key | u64::from(c) << (2 * i))
}

fn unpack(key: u64, out: &mut Vec<u8>) {
    out.clear();
    let len = (key >> 56) as usize;
    out.extend((0..len).map(|i| ((key >> (2 * i)) & 3) as u8));
}

fn neighbors(s: &[u8], symbols: u8, out: &mut Vec<u64>) {
    out.clear();
    let mut work = s.to_vec();
    for i in 0..s.len() {
        work.remove(i);
        out.push(pack(&work));
        work.insert(i, s[i]);
        for c in 0..symbols {
            if c != s[i] {
                work[i] = c;
                out.push(pack(&work));
            }
        }
        work[i] = s[i];
        if i + 1 < s.len() && s[i] != s[i + 1] {
            work.swap(i, i + 1);
            out.push(pack(&work));
            work.swap(i, i + 1);
        }
    }
    for i in 0..=s.len() {
        for c in 0..symbols {
            work.insert(i, c);
            out.push(pack(&work));
            work.remove(i);
        }
    }
}

/// Fewest insertions, deletions, substitutions and adjacent swaps turning
/// `a` into `b`, found by breadth-first search over the edit graph from both
/// ends. Every operation has an inverse of the same kind, so the graph is
/// undirected and the two searches meet at the exact distance.
pub fn dl_search(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a == b {
        return 0;
    }
    let sigma = alphabet(&a, &b);
    assert!(sigma.len() <= 4, "search oracle supports at most four symbols");
    let encode = |s: &[char]| -> Vec<u8> { s.iter().map(|c| sigma.iter().position(|x| x == c).unwrap() as u8).collect() };
    let (a, b) = (pack(&encode(&a)), pack(&encode(&b)));
    let symbols = sigma.len() as u8;

    let mut seen = [HashMap::new(), HashMap::new()];
    seen[0].insert(a, 0usize);
    seen[1].insert(b, 0usize);
    let mut frontier = [vec![a], vec![b]];
    let mut depth = [0usize, 0usize];
    let (mut current, mut scratch) = (Vec::new(), Vec::new());
    loop {
        let side = if frontier[0].len() <= frontier[1].len() { 0 } else { 1 };
        let other = 1 - side;
        let mut next = Vec::new();
        let mut best: Option<usize> = None;
        for &key in &frontier[side] {
            unpack(key, &mut current);
            neighbors(&current, symbols, &mut scratch);
            for &n in &scratch {
                if seen[side].contains_key(&n) {
                    continue;
                }
                if let Some(&d) = seen[other].get(&n) {
                    let total = depth[side] + 1 + d;
                    best = Some(best.map_or(total, |b: usize| b.min(total)));
                }
                seen[side].insert(n, depth[side] + 1);
                next.push(n);
            }
        }
        if let Some(total) = best {
            return total;
        }
        depth[side] += 1;
        frontier[side] = next;
    }
}

/// Plain edit distance without transpositions.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

pub fn hamming(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let shared = a.len().min(b.len());
    (0..shared).filter(|&i| a[i] != b[i]).count() + a.len().max(b.len()) - shared
}

/// Longest common block with the smallest start in `a`, then in `b`.
fn longest_block(a: &[char], b: &[char]) -> (usize, usize, usize) {
    let mut best = (0, 0, 0);
    for i in 0..a.len() {
        for j in 0..b.len() {
            let mut k = 0;
            while i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k] {
                k += 1;
            }
            if k > best.2 {
                best = (i, j, k);
            }
        }
    }
    best
}

fn matched(a: &[char], b: &[char]) -> usize {
    let (i, j, k) = longest_block(a, b);
    if k == 0 {
        return 0;
    }
    k + matched(&a[..i], &b[..j]) + matched(&a[i + k..], &b[j + k..])
}

/// Gestalt pattern matching, 2M / (|a| + |b|), with M taken as the larger
/// of the two argument orders.
pub fn ratcliff_obershelp(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let m = matched(&a, &b).max(matched(&b, &a));
    2.0 * m as f64 / (a.len() + b.len()) as f64
}

pub fn jaro(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let window = (a.len().max(b.len()) / 2) as isize - 1;
    let window = window.max(0) as usize;
    let mut b_used = vec![false; b.len()];
    let mut a_matches = Vec::new();
    for (i, &c) in a.iter().enumerate() {
        let start = i.saturating_sub(window);
        let end = (i + window).min(b.len() - 1);
        if start > end {
            continue;
        }
        for j in start..=end {
            if !b_used[j] && b[j] == c {
                b_used[j] = true;
                a_matches.push(c);
                break;
            }
        }
    }
    let m = a_matches.len();
    if m == 0 {
        return 0.0;
    }
    let b_matches: Vec<char> = b.iter().zip(&b_used).filter(|(_, &u)| u).map(|(&c, _)| c).collect();
    let half_transposed = a_matches.iter().zip(&b_matches).filter(|(x, y)| x != y).count() / 2;
    let m = m as f64;
    (m / a.len() as f64 + m / b.len() as f64 + (m - half_transposed as f64) / m) / 3.0
}

pub fn jaro_winkler(a: &str, b: &str) -> f64 {
    let j = jaro(a, b);
    let prefix = a.chars().zip(b.chars()).take(4).take_while(|(x, y)| x == y).count();
    j + prefix as f64 * 0.1 * (1.0 - j)
}

/// Deterministic string source for the oracle comparisons.
pub struct Strings {
    state: u64,
}

impl Strings {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    fn next(&mut self) -> u64 {
        // splitmix64
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn string(&mut self, max_len: usize, alphabet: &[char]) -> String {
        let len = (self.next() % (max_len as u64 + 1)) as usize;
        (0..len)
            .map(|_| alphabet[(self.next() % alphabet.len() as u64) as usize])
            .collect()
    }
}

#[test]
fn oracle_self_checks() {
    assert_eq!(dl_search("CA", "ABC"), 2);
    assert_eq!(dl_search("ab", "ba"), 1);
    assert_eq!(dl_search("abcd", "badc"), 2);
    assert_eq!(dl_search("", "abc"), 3);
    assert_eq!(levenshtein("CA", "ABC"), 3);
    assert_eq!(hamming("abc", "abcd"), 1);
    assert_eq!(ratcliff_obershelp("abcd", "bcde"), 0.75);
    assert!((jaro("MARTHA", "MARHTA") - 17.0 / 18.0).abs() < 1e-15);
    assert!((jaro_winkler("MARTHA", "MARHTA") - 0.961_111_111_111).abs() < 1e-9);
}
