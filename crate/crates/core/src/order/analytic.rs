use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::{AccessOracle, Comparability};
use crate::scalar::Real;
use crate::state::{CompoundState, SpaceId, StateRef};

pub type EntropyFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// Accessibility characterized by additive entropies.
///
/// `(λ₁X₁, …) ≺ (λ'₁X'₁, …)` holds iff both sides carry the same amount of
/// every space and `Σλᵢ S(Xᵢ) ≤ Σλ'ⱼ S(X'ⱼ) + tolerance`. Ties count in both
/// directions.
#[derive(Clone)]
pub struct AnalyticOracle<T: Real> {
    entropies: BTreeMap<SpaceId, EntropyFn<T>>,
    tolerance: T,
}

impl<T: Real> fmt::Debug for AnalyticOracle<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticOracle")
            .field("spaces", &self.entropies.keys().collect::<Vec<_>>())
            .field("tolerance", &self.tolerance)
            .finish()
    }
}

impl<T: Real> Default for AnalyticOracle<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> AnalyticOracle<T> {
    pub fn new() -> Self {
        AnalyticOracle {
            entropies: BTreeMap::new(),
            tolerance: T::lit(1e-12),
        }
    }

    pub fn with_space(
        mut self,
        space: impl Into<SpaceId>,
        entropy: impl Fn(&[T]) -> T + Send + Sync + 'static,
    ) -> Self {
        self.entropies.insert(space.into(), Arc::new(entropy));
        self
    }

    pub fn insert(&mut self, space: SpaceId, entropy: EntropyFn<T>) {
        self.entropies.insert(space, entropy);
    }

    pub fn with_tolerance(mut self, tolerance: T) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn tolerance(&self) -> T {
        self.tolerance
    }

    pub fn entropy(&self, state: &StateRef<T>) -> Option<T> {
        self.entropies.get(&state.space).map(|s| s(&state.coords))
    }

    /// `Σ λᵢ S(Xᵢ)`, or `None` when a space has no registered entropy.
    pub fn total_entropy(&self, c: &CompoundState<T, StateRef<T>>) -> Option<T> {
        c.parts()
            .iter()
            .map(|(k, s)| self.entropy(s).map(|e| *k * e))
            .sum()
    }
}

/// Amount of each space carried by a compound.
pub(crate) fn space_masses<T: Real>(c: &CompoundState<T, StateRef<T>>) -> BTreeMap<&SpaceId, T> {
    let mut m = BTreeMap::new();
    for (k, s) in c.parts() {
        let e = m.entry(&s.space).or_insert_with(T::zero);
        *e = *e + *k;
    }
    m
}

pub(crate) fn same_composition<T: Real>(
    a: &CompoundState<T, StateRef<T>>,
    b: &CompoundState<T, StateRef<T>>,
) -> bool {
    let ma = space_masses(a);
    let mb = space_masses(b);
    let eps = T::lit(1e-12);
    ma.len() == mb.len()
        && ma.iter().all(|(space, &x)| {
            mb.get(space)
                .is_some_and(|&y| (x - y).abs() <= eps * T::one().max(x.abs()))
        })
}

impl<T: Real> AccessOracle<T, StateRef<T>> for AnalyticOracle<T> {
    fn compare(
        &self,
        a: &CompoundState<T, StateRef<T>>,
        b: &CompoundState<T, StateRef<T>>,
    ) -> Comparability {
        if !same_composition(a, b) {
            return Comparability::NotPrecedes;
        }
        match (self.total_entropy(a), self.total_entropy(b)) {
            (Some(sa), Some(sb)) if sa.is_finite() && sb.is_finite() => {
                Comparability::from_bool(sa <= sb + self.tolerance)
            }
            _ => Comparability::Unknown,
        }
    }
}
