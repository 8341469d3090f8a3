//! Jaro and Jaro-Winkler similarity.

use super::SimilarityError;

/// Winkler prefix-boost parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WinklerParams {
    scaling: f64,
    max_prefix: usize,
}

impl WinklerParams {
    pub fn new(scaling: f64, max_prefix: usize) -> Result<Self, SimilarityError> {
        if !scaling.is_finite() || scaling < 0.0 || scaling * max_prefix as f64 > 1.0 {
            return Err(SimilarityError::WinklerParams { scaling, max_prefix });
        }
        Ok(Self { scaling, max_prefix })
    }

    pub fn scaling(&self) -> f64 {
        self.scaling
    }

    pub fn max_prefix(&self) -> usize {
        self.max_prefix
    }
}

impl Default for WinklerParams {
    fn default() -> Self {
        Self {
            scaling: 0.1,
            max_prefix: 4,
        }
    }
}

pub fn jaro(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    jaro_chars(&a, &b)
}

pub fn jaro_chars(a: &[char], b: &[char]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);

    let mut a_matched = vec![false; a.len()];
    let mut b_matched = vec![false; b.len()];
    let mut matches = 0usize;
    for (i, &ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        for j in lo..hi {
            if !b_matched[j] && b[j] == ca {
                a_matched[i] = true;
                b_matched[j] = true;
                matches += 1;
                break;
            }
        }
    }
    if matches == 0 {
        return 0.0;
    }

    let mut out_of_order = 0usize;
    let mut b_matches = b.iter().zip(&b_matched).filter(|(_, &m)| m).map(|(c, _)| c);
    for (ca, _) in a.iter().zip(&a_matched).filter(|(_, &m)| m) {
        if Some(ca) != b_matches.next() {
            out_of_order += 1;
        }
    }
    let transpositions = out_of_order / 2;

    let m = matches as f64;
    (m / a.len() as f64 + m / b.len() as f64 + (m - transpositions as f64) / m) / 3.0
}

pub fn jaro_winkler(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    jaro_winkler_chars(&a, &b, WinklerParams::default())
}

pub fn jaro_winkler_chars(a: &[char], b: &[char], params: WinklerParams) -> f64 {
    let base = jaro_chars(a, b);
    let prefix = a
        .iter()
        .zip(b)
        .take(params.max_prefix)
        .take_while(|(x, y)| x == y)
        .count();
    base + prefix as f64 * params.scaling * (1.0 - base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn martha() {
        assert!((jaro("MARTHA", "MARHTA") - 0.944_444_444_444_444_5).abs() < 1e-12);
        assert!((jaro_winkler("MARTHA", "MARHTA") - 0.961_111_111_111_111).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(jaro("", ""), 1.0);
        assert_eq!(jaro("a", ""), 0.0);
        assert_eq!(jaro("a", "b"), 0.0);
        assert_eq!(jaro("abc", "abc"), 1.0);
        assert_eq!(jaro_winkler("abc", "abc"), 1.0);
    }

    #[test]
    fn no_boost_without_common_first_character() {
        assert_eq!(jaro_winkler("xbcdef", "ybcdef"), jaro("xbcdef", "ybcdef"));
    }

    #[test]
    fn boost_capped_at_max_prefix() {
        let base = jaro("abcdefgX", "abcdefgY");
        let expected = base + 4.0 * 0.1 * (1.0 - base);
        assert!((jaro_winkler("abcdefgX", "abcdefgY") - expected).abs() < 1e-15);
    }

    #[test]
    fn params_validated() {
        assert!(WinklerParams::new(0.25, 4).is_ok());
        assert!(WinklerParams::new(0.3, 4).is_err());
        assert!(WinklerParams::new(-0.1, 4).is_err());
        assert!(WinklerParams::new(f64::NAN, 1).is_err());
    }
}
