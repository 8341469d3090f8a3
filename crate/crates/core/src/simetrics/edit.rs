//! Hamming and unrestricted Damerau-Levenshtein distances.

use std::collections::HashMap;

/// Positional mismatches over the shorter length, plus the length gap.
pub fn hamming(a: &str, b: &str) -> usize {
    let mut mismatches = 0;
    let mut ai = a.chars();
    let mut bi = b.chars();
    loop {
        match (ai.next(), bi.next()) {
            (Some(x), Some(y)) => mismatches += usize::from(x != y),
            (Some(_), None) | (None, Some(_)) => mismatches += 1,
            (None, None) => return mismatches,
        }
    }
}

pub fn hamming_chars(a: &[char], b: &[char]) -> usize {
    let overlap = a.iter().zip(b).filter(|(x, y)| x != y).count();
    overlap + a.len().abs_diff(b.len())
}

pub fn damerau_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    damerau_levenshtein_chars(&a, &b)
}

pub fn damerau_levenshtein_chars(a: &[char], b: &[char]) -> usize {
    let (a, b) = strip_common_affix(a, b);
    linear_space_distance(a, b)
}

/// Dynamic-programming cells needed for the pair once the shared prefix and
/// suffix are stripped.
pub fn damerau_levenshtein_cells(a: &[char], b: &[char]) -> u64 {
    let (a, b) = strip_common_affix(a, b);
    a.len() as u64 * b.len() as u64
}

/// Computes the distance unless it would need more than `budget` cells.
pub fn damerau_levenshtein_within(a: &[char], b: &[char], budget: u64) -> Option<usize> {
    let (a, b) = strip_common_affix(a, b);
    if a.len() as u64 * b.len() as u64 > budget {
        return None;
    }
    Some(linear_space_distance(a, b))
}

fn strip_common_affix<'a, 'b>(a: &'a [char], b: &'b [char]) -> (&'a [char], &'b [char]) {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let suffix = a
        .iter()
        .rev()
        .zip(b.iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    (&a[..a.len() - suffix], &b[..b.len() - suffix])
}

/// Zhao & Sahni's linear-space formulation of the Lowrance-Wagner recurrence
/// (unit costs for insert, delete, substitute and adjacent transposition).
fn linear_space_distance(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let len_b = b.len();
    let inf = (a.len().max(len_b) + 1) as isize;
    let width = len_b + 2;

    // Row of the previous occurrence in `a` of each character, 1-based.
    let mut last_row: HashMap<char, isize> = HashMap::new();
    let mut saved_diag = vec![inf; width];
    let mut prev = vec![inf; width];
    let mut row: Vec<isize> = std::iter::once(inf).chain(0..(width - 1) as isize).collect();

    for (i, &ca) in a.iter().enumerate() {
        let i = (i + 1) as isize;
        std::mem::swap(&mut row, &mut prev);
        let mut last_col: isize = -1;
        let mut last_i2l1 = row[1];
        row[1] = i;
        let mut t = inf;

        for (j, &cb) in b.iter().enumerate() {
            let j = j + 1;
            let diag = prev[j] + isize::from(ca != cb);
            let left = row[j] + 1;
            let up = prev[j + 1] + 1;
            let mut cell = diag.min(left).min(up);

            if ca == cb {
                last_col = j as isize;
                saved_diag[j + 1] = prev[j - 1];
                t = last_i2l1;
            } else {
                let k = last_row.get(&cb).copied().unwrap_or(-1);
                let l = last_col;
                if j as isize - l == 1 {
                    cell = cell.min(saved_diag[j + 1] + (i - k));
                } else if i - k == 1 {
                    cell = cell.min(t + (j as isize - l));
                }
            }

            last_i2l1 = row[j + 1];
            row[j + 1] = cell;
        }
        last_row.insert(ca, i);
    }
    row[len_b + 1] as usize
}
