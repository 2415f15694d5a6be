//! Name-similarity fallback over a lexicon of financial words.

use std::path::Path;

const BUILTIN: &[&str] = &[
    "balance",
    "balances",
    "supply",
    "totalsupply",
    "amount",
    "fee",
    "fees",
    "price",
    "rate",
    "token",
    "tokens",
    "allowance",
    "allowed",
    "deposit",
    "deposits",
    "reward",
    "rewards",
    "fund",
    "funds",
    "stake",
    "stakes",
    "cap",
    "wallet",
    "payment",
    "payout",
    "dividend",
    "share",
    "shares",
    "tax",
    "commission",
    "bonus",
    "reserve",
    "mint",
    "minted",
    "burn",
    "burned",
    "credit",
    "debt",
    "wei",
    "ether",
    "eth",
    "cash",
    "coin",
    "coins",
];

#[derive(Clone, Debug)]
pub struct Lexicon {
    words: Vec<String>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon {
            words: BUILTIN.iter().map(|w| w.to_string()).collect(),
        }
    }
}

/// Split `camelCase` and `snake_case` names into lowercase words.
pub fn split_name(name: &str) -> Vec<String> {
    let mut out = vec![];
    let mut cur = String::new();
    let mut prev_lower = false;
    for c in name.chars() {
        if c == '_' || c == '$' || c.is_ascii_digit() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            prev_lower = false;
            continue;
        }
        if c.is_ascii_uppercase() && prev_lower && !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
        prev_lower = c.is_ascii_lowercase();
        cur.push(c.to_ascii_lowercase());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cur = row[j + 1];
            row[j + 1] = (prev + usize::from(ca != *cb)).min(row[j] + 1).min(cur + 1);
            prev = cur;
        }
    }
    row[b.len()]
}

fn similarity(a: &str, b: &str) -> f64 {
    let n = a.chars().count().max(b.chars().count());
    if n == 0 {
        return 0.0;
    }
    1.0 - levenshtein(a, b) as f64 / n as f64
}

impl Lexicon {
    /// One word per line; blank lines and `#` comments are ignored.
    pub fn from_file(path: &Path) -> std::io::Result<Lexicon> {
        let text = std::fs::read_to_string(path)?;
        Ok(Lexicon {
            words: text
                .lines()
                .map(|l| l.trim().to_ascii_lowercase())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect(),
        })
    }

    /// Best similarity in [0,1] between the name (whole or any word) and the
    /// lexicon.
    pub fn score(&self, name: &str) -> f64 {
        let mut parts = split_name(name);
        parts.push(name.to_ascii_lowercase().replace('_', ""));
        let mut best: f64 = 0.0;
        for p in parts.iter().filter(|p| p.len() >= 3) {
            for w in &self.words {
                best = best.max(similarity(p, w));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_mixed_case() {
        assert_eq!(split_name("totalSupply"), vec!["total", "supply"]);
        assert_eq!(split_name("_x7"), vec!["x"]);
        assert_eq!(split_name("tx_fee"), vec!["tx", "fee"]);
    }

    #[test]
    fn scores_names() {
        let l = Lexicon::default();
        assert_eq!(l.score("balances"), 1.0);
        assert_eq!(l.score("totalSupply"), 1.0);
        assert!(l.score("owner") < 0.5);
        assert!(l.score("_x7") < 0.5);
    }
}
