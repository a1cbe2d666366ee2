//! Huffman prefix codes for quantizer indices.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::{Error, Result};

/// A binary prefix code; codeword `i` belongs to quantizer index `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixCode {
    codewords: Vec<String>,
}

impl PrefixCode {
    pub fn new(codewords: Vec<String>) -> Result<Self> {
        if codewords.iter().any(|c| c.is_empty() || c.chars().any(|b| b != '0' && b != '1')) {
            return Err(Error::Parse("codewords must be nonempty bit strings".into()));
        }
        let code = Self { codewords };
        if !code.is_prefix_free() {
            return Err(Error::Parse("code is not prefix-free".into()));
        }
        Ok(code)
    }

    pub fn codewords(&self) -> &[String] {
        &self.codewords
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.codewords.iter().map(String::len).collect()
    }

    pub fn kraft_sum(&self) -> f64 {
        self.codewords.iter().map(|c| 0.5f64.powi(c.len() as i32)).sum()
    }

    pub fn is_prefix_free(&self) -> bool {
        let mut sorted: Vec<&str> = self.codewords.iter().map(String::as_str).collect();
        sorted.sort_unstable();
        // in lexicographic order a prefix sorts immediately before some extension of it
        sorted.windows(2).all(|w| !w[1].starts_with(w[0]))
    }

    pub fn encode(&self, indices: &[usize]) -> String {
        indices.iter().map(|&i| self.codewords[i].as_str()).collect()
    }

    pub fn decode(&self, bits: &str) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        let mut rest = bits;
        while !rest.is_empty() {
            let i = self
                .codewords
                .iter()
                .position(|c| rest.starts_with(c.as_str()))
                .ok_or_else(|| Error::Parse("bit stream does not decode".into()))?;
            out.push(i);
            rest = &rest[self.codewords[i].len()..];
        }
        Ok(out)
    }
}

fn validate(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidProbabilities("empty".into()));
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidProbabilities("entries must be finite and nonnegative".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidProbabilities(format!("sums to {total}")));
    }
    Ok(())
}

/// Huffman code for `p`. Nodes are merged two-smallest first; equal weights go
/// to the node created earliest (leaves are created in index order), and the
/// first node popped takes bit `0`.
pub fn huffman(p: &[f64]) -> Result<PrefixCode> {
    validate(p)?;
    if p.len() == 1 {
        return Ok(PrefixCode { codewords: vec!["0".into()] });
    }
    #[derive(PartialEq)]
    struct W(f64);
    impl Eq for W {}
    impl PartialOrd for W {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for W {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&o.0)
        }
    }

    let n = p.len();
    // children[k] for internal node n + k
    let mut children: Vec<(usize, usize)> = Vec::with_capacity(n - 1);
    let mut heap: BinaryHeap<Reverse<(W, usize)>> = p.iter().enumerate().map(|(i, &w)| Reverse((W(w), i))).collect();
    while heap.len() > 1 {
        let Reverse((W(w0), a)) = heap.pop().unwrap();
        let Reverse((W(w1), b)) = heap.pop().unwrap();
        children.push((a, b));
        heap.push(Reverse((W(w0 + w1), n + children.len() - 1)));
    }
    let mut codewords = vec![String::new(); n];
    let mut stack = vec![(2 * n - 2, String::new())];
    while let Some((node, prefix)) = stack.pop() {
        if node < n {
            codewords[node] = prefix;
        } else {
            let (a, b) = children[node - n];
            stack.push((a, format!("{prefix}0")));
            stack.push((b, format!("{prefix}1")));
        }
    }
    Ok(PrefixCode { codewords })
}

/// `Σ p_i ℓ_i`.
pub fn expected_length(code: &PrefixCode, p: &[f64]) -> Result<f64> {
    if code.codewords.len() != p.len() {
        return Err(Error::DimensionMismatch { expected: code.codewords.len(), actual: p.len() });
    }
    Ok(code.codewords.iter().zip(p).map(|(c, &pi)| pi * c.len() as f64).sum())
}

/// Entropy in bits, with `0·log 0 = 0`.
pub fn entropy(p: &[f64]) -> Result<f64> {
    validate(p)?;
    Ok(p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum())
}
