//! States, scaled copies and compound states.

use std::cmp::Ordering;
use std::fmt;

use num_traits::Num;

use crate::error::{Error, Result};

/// Name of a state space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpaceId(String);

impl SpaceId {
    pub fn new(label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.trim().is_empty() {
            return Err(Error::EmptyId);
        }
        Ok(SpaceId(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SpaceId {
    /// Panics on an empty label; use [`SpaceId::new`] for untrusted input.
    fn from(s: &str) -> Self {
        SpaceId::new(s).expect("space label must be nonempty")
    }
}

/// A point of a named state space, in that space's coordinates.
#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub struct StateRef<T> {
    pub space: SpaceId,
    pub coords: Vec<T>,
}

impl<T> StateRef<T> {
    pub fn new(space: impl Into<SpaceId>, coords: Vec<T>) -> Self {
        StateRef {
            space: space.into(),
            coords,
        }
    }
}

impl<T: fmt::Display> fmt::Display for StateRef<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.space)?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// Bounds required of a scale value (`f64`, `f32`, exact rationals).
pub trait Scale: Num + Clone + PartialOrd + fmt::Debug {}
impl<K: Num + Clone + PartialOrd + fmt::Debug> Scale for K {}

/// A multiset of scaled copies `(λ₁X₁, λ₂X₂, …)`.
///
/// Parts are kept sorted so that equality is multiset equality: order and
/// grouping of the factors do not matter. Parts are never merged, so
/// `(X, X)` and `2X` stay distinct states (they are only adiabatically
/// equivalent).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompoundState<K, S> {
    parts: Vec<(K, S)>,
}

fn part_order<K: PartialOrd, S: PartialOrd>(a: &(K, S), b: &(K, S)) -> Ordering {
    a.1.partial_cmp(&b.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal))
}

impl<K: Scale, S: Clone + PartialOrd> CompoundState<K, S> {
    pub fn empty() -> Self {
        CompoundState { parts: Vec::new() }
    }

    /// `1·X`, identified with `X`.
    pub fn single(state: S) -> Self {
        CompoundState {
            parts: vec![(K::one(), state)],
        }
    }

    pub fn scaled(scale: K, state: S) -> Result<Self> {
        Self::from_parts(vec![(scale, state)])
    }

    pub fn from_parts(mut parts: Vec<(K, S)>) -> Result<Self> {
        if let Some((k, _)) = parts.iter().find(|(k, _)| !(*k > K::zero())) {
            return Err(Error::NonPositiveScale(format!("{k:?}")));
        }
        parts.sort_by(part_order);
        Ok(CompoundState { parts })
    }

    pub fn parts(&self) -> &[(K, S)] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// The single state when this is `1·X`.
    pub fn as_unit(&self) -> Option<&S> {
        match self.parts.as_slice() {
            [(k, s)] if k.is_one() => Some(s),
            _ => None,
        }
    }

    /// Total of the scale factors.
    pub fn mass(&self) -> K {
        self.parts
            .iter()
            .fold(K::zero(), |acc, (k, _)| acc + k.clone())
    }

    pub fn compose(&self, other: &Self) -> Self {
        let mut parts = self.parts.clone();
        parts.extend(other.parts.iter().cloned());
        parts.sort_by(part_order);
        CompoundState { parts }
    }

    /// Scaled copy `t·(λ₁X₁, …) = (tλ₁X₁, …)`.
    pub fn scale(&self, t: K) -> Result<Self> {
        if !(t > K::zero()) {
            return Err(Error::NonPositiveScale(format!("{t:?}")));
        }
        let mut parts: Vec<(K, S)> = self
            .parts
            .iter()
            .map(|(k, s)| (k.clone() * t.clone(), s.clone()))
            .collect();
        parts.sort_by(part_order);
        Ok(CompoundState { parts })
    }

    /// Adds `k·s`, skipping zero scales (the convention `(Y, 0Z) = Y`).
    pub fn with_part(&self, k: K, s: S) -> Result<Self> {
        if k.is_zero() {
            return Ok(self.clone());
        }
        Ok(self.compose(&Self::scaled(k, s)?))
    }
}

impl<K: fmt::Display, S: fmt::Display> fmt::Display for CompoundState<K, S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("()");
        }
        for (i, (k, s)) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{k}*{s}")?;
        }
        Ok(())
    }
}

/// Multiset union.
pub fn compose<K: Scale, S: Clone + PartialOrd>(
    a: &CompoundState<K, S>,
    b: &CompoundState<K, S>,
) -> CompoundState<K, S> {
    a.compose(b)
}

pub fn scale<K: Scale, S: Clone + PartialOrd>(
    t: K,
    a: &CompoundState<K, S>,
) -> Result<CompoundState<K, S>> {
    a.scale(t)
}
