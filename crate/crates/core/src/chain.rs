use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A chain of smooth components glued P_{i+1} to Q_i, each of genus 0 or 1.
///
/// `node_weights` holds ℓ_1..ℓ_{M-1}, one per gap between consecutive
/// genus-1 components.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainCurve {
    genera: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "weights_serde")]
    node_weights: Option<Vec<BigUint>>,
}

impl ChainCurve {
    pub fn new(genera: Vec<u8>, node_weights: Option<Vec<BigUint>>) -> Result<Self> {
        if genera.is_empty() {
            return Err(Error::InvalidChain("chain has no components".into()));
        }
        if let Some(p) = genera.iter().position(|&g| g > 1) {
            return Err(Error::InvalidChain(format!("component {} has genus {}, expected 0 or 1", p + 1, genera[p])));
        }
        let chain = ChainCurve { genera, node_weights: None };
        match node_weights {
            None => Ok(chain),
            Some(w) => chain.with_weights(w),
        }
    }

    /// Chain of `g` elliptic curves with unit node weights.
    pub fn elliptic(g: usize) -> Result<Self> {
        if g == 0 {
            return Err(Error::InvalidChain("genus must be at least 1".into()));
        }
        Ok(ChainCurve { genera: vec![1; g], node_weights: Some(vec![BigUint::from(1u32); g - 1]) })
    }

    pub fn with_weights(mut self, weights: Vec<BigUint>) -> Result<Self> {
        let m = self.genus();
        if self.genera[0] != 1 || *self.genera.last().unwrap() != 1 {
            return Err(Error::InvalidChain("node weights require genus-1 components at both ends".into()));
        }
        if weights.len() != m.saturating_sub(1) {
            return Err(Error::InvalidChain(format!(
                "expected {} node weights, got {}",
                m.saturating_sub(1),
                weights.len()
            )));
        }
        if weights.iter().any(|w| *w == BigUint::from(0u32)) {
            return Err(Error::InvalidChain("node weights must be positive".into()));
        }
        self.node_weights = Some(weights);
        Ok(self)
    }

    pub fn genera(&self) -> &[u8] {
        &self.genera
    }

    pub fn node_weights(&self) -> Option<&[BigUint]> {
        self.node_weights.as_deref()
    }

    /// Number of components N.
    pub fn len(&self) -> usize {
        self.genera.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genera.is_empty()
    }

    /// Genus of component `i` (1-based).
    pub fn genus_of(&self, i: usize) -> u8 {
        self.genera[i - 1]
    }

    pub fn genus(&self) -> usize {
        self.genera.iter().map(|&g| g as usize).sum()
    }

    /// g(i): total genus of components 1..=i, with g(0) = 0.
    pub fn genus_prefix(&self, i: usize) -> usize {
        self.genera[..i].iter().map(|&g| g as usize).sum()
    }

    pub fn is_pure_elliptic(&self) -> bool {
        self.genera.iter().all(|&g| g == 1)
    }

    /// Lexicographically minimal left-weighted node weights for degree `d`:
    /// built right to left with ℓ_{M-1} = 1 and ℓ_i = 4d·Σ_{i'>i} ℓ_{i'}.
    pub fn left_weighted_weights(&self, d: u64) -> Result<Vec<BigUint>> {
        minimal_left_weights(self.genus(), d)
    }

    pub fn is_left_weighted(&self, d: u64) -> Result<bool> {
        let w =
            self.node_weights.as_ref().ok_or_else(|| Error::InvalidChain("chain carries no node weights".into()))?;
        Ok(weights_are_left_weighted(w, d))
    }
}

mod weights_serde {
    use num_bigint::BigUint;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        Int(u64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(w: &Option<Vec<BigUint>>, s: S) -> Result<S::Ok, S::Error> {
        match w {
            None => s.serialize_none(),
            Some(v) => s.collect_seq(v.iter().map(|x| x.to_string())),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<BigUint>>, D::Error> {
        let raw: Option<Vec<Num>> = Option::deserialize(d)?;
        raw.map(|v| {
            v.into_iter()
                .map(|n| match n {
                    Num::Int(x) => Ok(BigUint::from(x)),
                    Num::Text(t) => t.parse::<BigUint>().map_err(D::Error::custom),
                })
                .collect()
        })
        .transpose()
    }
}

pub fn minimal_left_weights(m: usize, d: u64) -> Result<Vec<BigUint>> {
    if m < 2 {
        return Err(Error::InvalidChain("left-weighting needs at least two genus-1 components".into()));
    }
    let factor = BigUint::from(4 * d);
    let mut out = vec![BigUint::from(0u32); m - 1];
    let mut tail = BigUint::from(0u32);
    for i in (0..m - 1).rev() {
        let w = if tail == BigUint::from(0u32) { BigUint::from(1u32) } else { &factor * &tail };
        tail += &w;
        out[i] = w;
    }
    Ok(out)
}

pub fn weights_are_left_weighted(w: &[BigUint], d: u64) -> bool {
    let factor = BigUint::from(4 * d);
    let mut tail = BigUint::from(0u32);
    for l in w.iter().rev() {
        if *l < &factor * &tail {
            return false;
        }
        tail += l;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn elliptic_chain_prefixes() {
        let c = ChainCurve::elliptic(23).unwrap();
        assert_eq!(c.len(), 23);
        for i in 0..=23 {
            assert_eq!(c.genus_prefix(i), i);
        }
        assert!(ChainCurve::elliptic(0).is_err());
        assert_eq!(ChainCurve::elliptic(1).unwrap().len(), 1);
    }

    #[test]
    fn minimal_weights_small_cases() {
        assert_eq!(minimal_left_weights(2, 25).unwrap(), big(&[1]));
        assert_eq!(minimal_left_weights(3, 25).unwrap(), big(&[100, 1]));
        assert_eq!(minimal_left_weights(4, 25).unwrap(), big(&[10100, 100, 1]));
        assert!(minimal_left_weights(1, 25).is_err());
    }

    #[test]
    fn left_weighted_boundary() {
        assert!(weights_are_left_weighted(&big(&[100, 1]), 25));
        assert!(!weights_are_left_weighted(&big(&[99, 1]), 25));
    }

    #[test]
    fn missing_weights_is_an_error() {
        let c = ChainCurve::new(vec![1, 0, 1], None).unwrap();
        assert!(c.is_left_weighted(3).is_err());
        assert_eq!(c.genus_prefix(2), 1);
    }
}
