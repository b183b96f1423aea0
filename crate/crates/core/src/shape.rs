//! Quantifier shapes: the depth/arity index of every type value.
//!
//! A shape `(m; k)` has an innermost block of `m` first-order (singleton)
//! layers and a tuple `k = (k_1, ..., k_n)` of set-quantifier layers, with
//! `k_n` outermost.  A value of shape `(m; k)` over context arity `a` is a
//! nesting of sets of depth `m + n` whose leaves describe the atomic facts
//! of `a + m + k_1 + ... + k_n` set parameters.

use crate::error::{EngineError, Result};
use std::fmt;

/// A mixed quantifier shape `(m; k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape {
    /// Number of innermost first-order (singleton) layers.
    pub elem: usize,
    /// Set-quantifier layer arities, innermost first (`sets[0]` = `k_1`).
    pub sets: Vec<usize>,
}

impl Shape {
    pub fn new(elem: usize, sets: Vec<usize>) -> Self {
        Shape { elem, sets }
    }

    /// The purely atomic shape `(0; ())`.
    pub fn leaf() -> Self {
        Shape { elem: 0, sets: Vec::new() }
    }

    /// Pure set shape `(0; k)`.
    pub fn pure(sets: Vec<usize>) -> Self {
        Shape { elem: 0, sets }
    }

    /// Total nesting depth `m + |k|`.
    pub fn depth(&self) -> usize {
        self.elem + self.sets.len()
    }

    /// Number of set layers `|k|`.
    pub fn set_depth(&self) -> usize {
        self.sets.len()
    }

    /// Arity of the outermost layer: `k_n` if any set layer remains,
    /// otherwise 1 for an elem layer, otherwise 0.
    pub fn outer_arity(&self) -> usize {
        match self.sets.last() {
            Some(&k) => k,
            None if self.elem > 0 => 1,
            None => 0,
        }
    }

    /// The shape one level in: drops `k_n`, or one elem layer if `k = ()`.
    pub fn inner(&self) -> Shape {
        let mut s = self.clone();
        if s.sets.pop().is_none() {
            assert!(s.elem > 0, "inner() on the leaf shape");
            s.elem -= 1;
        }
        s
    }

    /// Total number of parameters a leaf under this shape adds to its
    /// context: `m + k_1 + ... + k_n`.
    pub fn added_arity(&self) -> usize {
        self.elem + self.sets.iter().sum::<usize>()
    }

    /// Pointwise preorder used by `restrict_shape`: `self <= other` iff the
    /// elem count and every set layer of `self` fit inside `other`, layer by
    /// layer from the inside out, with `other` allowed extra outer layers.
    pub fn le(&self, other: &Shape) -> bool {
        self.elem <= other.elem
            && self.sets.len() <= other.sets.len()
            && self.sets.iter().zip(other.sets.iter()).all(|(a, b)| a <= b)
    }

    /// Parse the textual form accepted by the CLI: `(k1,k2)` or
    /// `m;(k1,k2)`, where the set tuple lists `k_1` first.
    pub fn parse(text: &str) -> Result<Shape> {
        let text = text.trim();
        let (elem, rest) = match text.split_once(';') {
            Some((m, rest)) => {
                let m: usize = m.trim().parse().map_err(|_| bad(text))?;
                (m, rest.trim())
            }
            None => (0, text),
        };
        let inner = rest
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| bad(text))?
            .trim();
        let sets = if inner.is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|p| p.trim().parse::<usize>().map_err(|_| bad(text)))
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Shape { elem, sets })
    }
}

fn bad(text: &str) -> EngineError {
    EngineError::Malformed(format!("cannot parse shape `{text}`"))
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.elem > 0 {
            write!(f, "{};", self.elem)?;
        }
        write!(f, "(")?;
        for (i, k) in self.sets.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// A sequence of color-set surjections `I_n -> I_{n-1} -> ... -> I_0`,
/// indexing partial-theory (`pTh`) depth.
///
/// `maps[j]` is the surjection `I_{j+1} -> I_j`, stored as a vector of
/// length `|I_{j+1}|` with entries `< |I_j|`; `base` is `|I_0|`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SurjSeq {
    pub base: usize,
    pub maps: Vec<Vec<usize>>,
}

impl SurjSeq {
    pub fn new(base: usize, maps: Vec<Vec<usize>>) -> Result<Self> {
        let s = SurjSeq { base, maps };
        s.validate()?;
        Ok(s)
    }

    /// Number of refinement levels `|k|`.
    pub fn depth(&self) -> usize {
        self.maps.len()
    }

    /// `|I_j|` for `0 <= j <= depth()`.
    pub fn colors_at(&self, j: usize) -> usize {
        if j == 0 {
            self.base
        } else {
            self.maps[j - 1].len()
        }
    }

    /// Drops the outermost refinement level.
    pub fn inner(&self) -> SurjSeq {
        assert!(!self.maps.is_empty());
        SurjSeq { base: self.base, maps: self.maps[..self.maps.len() - 1].to_vec() }
    }

    fn validate(&self) -> Result<()> {
        for (j, m) in self.maps.iter().enumerate() {
            let codomain = self.colors_at(j);
            let mut hit = vec![false; codomain];
            for &v in m {
                if v >= codomain {
                    return Err(EngineError::Malformed(format!(
                        "surjection level {j} maps outside its codomain"
                    )));
                }
                hit[v] = true;
            }
            if hit.iter().any(|h| !h) {
                return Err(EngineError::Malformed(format!(
                    "map at level {j} is not surjective"
                )));
            }
        }
        Ok(())
    }
}
