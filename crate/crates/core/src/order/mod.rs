//! Adiabatic accessibility: oracles, axiom checks and entropy construction.

mod analytic;
mod axioms;
mod entropy;
mod finite;

pub use analytic::{AnalyticOracle, EntropyFn};
pub(crate) use analytic::same_composition;
pub use axioms::{
    check_axioms, check_cancellation, check_cancellation_on, check_ch, check_lemma1, AxiomConfig,
    Lemma1Report,
};
pub use entropy::{
    affine_fit, check_strip_monotone, construct_calibrated_entropy, construct_entropy, rebase,
    verify_entropy_principle, AffineFit, EntropyChart,
};
pub use finite::{parse_relation, FiniteCompound, FiniteRelation, Rational, RelationFile, ScaleGrid};

use crate::state::CompoundState;

/// Answer to `a ≺ b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparability {
    Precedes,
    NotPrecedes,
    /// The backend cannot decide (open-world finite data, missing entropy, …).
    Unknown,
}

impl Comparability {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Comparability::Precedes
        } else {
            Comparability::NotPrecedes
        }
    }

    pub fn known(self) -> Option<bool> {
        match self {
            Comparability::Precedes => Some(true),
            Comparability::NotPrecedes => Some(false),
            Comparability::Unknown => None,
        }
    }
}

/// Both directions of a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `a ∼ᴬ b`
    Equivalent,
    /// `a ≺≺ b`
    StrictlyPrecedes,
    /// `b ≺≺ a`
    StrictlySucceeds,
    Incomparable,
    Unknown,
}

/// A backend answering `≺` queries between compound states.
///
/// Implementations must be reflexive and transitive on every query they
/// answer with `Precedes`/`NotPrecedes`.
pub trait AccessOracle<K, S>: Sync {
    fn compare(&self, a: &CompoundState<K, S>, b: &CompoundState<K, S>) -> Comparability;

    /// Whether any positive real scale may be queried. Finite backends live
    /// on a rational grid and return `false`.
    fn scale_continuous(&self) -> bool {
        true
    }

    fn relation(&self, a: &CompoundState<K, S>, b: &CompoundState<K, S>) -> Relation {
        match (self.compare(a, b), self.compare(b, a)) {
            (Comparability::Precedes, Comparability::Precedes) => Relation::Equivalent,
            (Comparability::Precedes, Comparability::NotPrecedes) => Relation::StrictlyPrecedes,
            (Comparability::NotPrecedes, Comparability::Precedes) => Relation::StrictlySucceeds,
            (Comparability::NotPrecedes, Comparability::NotPrecedes) => Relation::Incomparable,
            _ => Relation::Unknown,
        }
    }
}

impl<K, S, O: AccessOracle<K, S> + ?Sized> AccessOracle<K, S> for &O {
    fn compare(&self, a: &CompoundState<K, S>, b: &CompoundState<K, S>) -> Comparability {
        (**self).compare(a, b)
    }

    fn scale_continuous(&self) -> bool {
        (**self).scale_continuous()
    }
}
