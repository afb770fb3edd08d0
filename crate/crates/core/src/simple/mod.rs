//! Simple systems: convex `(U, V)` state spaces driven by a pressure field.

mod adiabat;
mod calculus;
mod models;

pub use adiabat::{forward_sector_contains, integrate_adiabat, integrate_adiabat_path, AdiabatCurve, Sector};
pub use calculus::{
    check_concavity, check_pressure_entropy_identity, state_at_temperature, temperature,
    temperature_of, TemperatureBracket,
};
pub use models::{CustomTable, IdealGas, VanDerWaals};

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::order::{AccessOracle, Comparability};
use crate::scalar::Real;
use crate::state::{CompoundState, SpaceId, StateRef};

/// Margin (relative to the box size) by which points must stay inside the domain.
pub const BOUNDARY_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct StatePoint<T> {
    pub u: T,
    pub v: Vec<T>,
}

impl<T: Real> StatePoint<T> {
    pub fn new(u: T, v: Vec<T>) -> Self {
        StatePoint { u, v }
    }

    pub fn uv(u: T, v: T) -> Self {
        StatePoint { u, v: vec![v] }
    }

    pub fn scaled(&self, t: T) -> Self {
        StatePoint {
            u: self.u * t,
            v: self.v.iter().map(|x| *x * t).collect(),
        }
    }

    /// `(1−λ)·self + λ·other`.
    pub fn lerp(&self, other: &Self, lam: T) -> Self {
        let one = T::one();
        StatePoint {
            u: (one - lam) * self.u + lam * other.u,
            v: self.v.iter().zip(&other.v).map(|(a, b)| (one - lam) * *a + lam * *b).collect(),
        }
    }

    pub fn coords(&self) -> Vec<T> {
        let mut c = Vec::with_capacity(1 + self.v.len());
        c.push(self.u);
        c.extend(self.v.iter().copied());
        c
    }

    pub fn from_coords(c: &[T]) -> Option<Self> {
        let (u, v) = c.split_first()?;
        Some(StatePoint { u: *u, v: v.to_vec() })
    }
}

impl<T: fmt::Display> fmt::Display for StatePoint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(U={}", self.u)?;
        for v in &self.v {
            write!(f, ", V={v}")?;
        }
        f.write_str(")")
    }
}

/// Axis-aligned bounds on `U` and on each work coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain<T> {
    pub u: (T, T),
    pub v: Vec<(T, T)>,
}

impl<T: Real> BoxDomain<T> {
    pub fn new(u: (T, T), v: Vec<(T, T)>) -> Result<Self> {
        let ok = |(lo, hi): (T, T)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(u) || v.is_empty() || !v.iter().all(|b| ok(*b)) {
            return Err(Error::Config("domain bounds must be finite with lo < hi".into()));
        }
        Ok(BoxDomain { u, v })
    }

    fn inside(bounds: (T, T), x: T) -> bool {
        let m = T::lit(BOUNDARY_MARGIN) * (bounds.1 - bounds.0);
        x > bounds.0 + m && x < bounds.1 - m
    }

    /// Strictly inside, at least the boundary margin away from every face.
    pub fn contains(&self, x: &StatePoint<T>) -> bool {
        x.v.len() == self.v.len()
            && Self::inside(self.u, x.u)
            && x.v.iter().zip(&self.v).all(|(c, b)| Self::inside(*b, *c))
    }

    pub fn margin_u(&self) -> T {
        T::lit(BOUNDARY_MARGIN) * (self.u.1 - self.u.0)
    }

    pub fn scaled(&self, t: T) -> Self {
        BoxDomain {
            u: (self.u.0 * t, self.u.1 * t),
            v: self.v.iter().map(|(a, b)| (*a * t, *b * t)).collect(),
        }
    }
}

/// A simple system: energy `U`, work coordinates `V`, a pressure field and
/// (optionally) an entropy.
pub trait SimpleSystem<T: Real>: Send + Sync {
    fn id(&self) -> &SpaceId;

    fn domain(&self) -> &BoxDomain<T>;

    fn work_dim(&self) -> usize {
        self.domain().v.len()
    }

    /// Convex region intersected with the box.
    fn region_contains(&self, _x: &StatePoint<T>) -> bool {
        true
    }

    fn pressure(&self, u: T, v: &[T]) -> Result<Vec<T>>;

    fn entropy(&self, x: &StatePoint<T>) -> Option<T>;

    fn amount(&self) -> T;

    fn lipschitz_hint(&self) -> T {
        T::one()
    }

    fn contains(&self, x: &StatePoint<T>) -> bool {
        self.domain().contains(x) && self.region_contains(x)
    }

    /// Energy window `(lo, hi)` at fixed work coordinates.
    fn energy_bounds(&self, _v: &[T]) -> (T, T) {
        self.domain().u
    }

    fn state_ref(&self, x: &StatePoint<T>) -> StateRef<T> {
        StateRef::new(self.id().clone(), x.coords())
    }
}

/// The scaled copy `tΓ = {(tU, tV)}` of a simple system.
pub struct ScaledSystem<T: Real> {
    inner: Arc<dyn SimpleSystem<T>>,
    t: T,
    id: SpaceId,
    domain: BoxDomain<T>,
}

impl<T: Real> ScaledSystem<T> {
    pub fn new(inner: Arc<dyn SimpleSystem<T>>, t: T) -> Result<Self> {
        if !(t > T::zero()) {
            return Err(Error::NonPositiveScale(format!("{t}")));
        }
        let id = SpaceId::new(format!("{t}*{}", inner.id()))?;
        let domain = inner.domain().scaled(t);
        Ok(ScaledSystem { inner, t, id, domain })
    }

    fn down(&self, x: &StatePoint<T>) -> StatePoint<T> {
        x.scaled(T::one() / self.t)
    }
}

impl<T: Real> SimpleSystem<T> for ScaledSystem<T> {
    fn id(&self) -> &SpaceId {
        &self.id
    }

    fn domain(&self) -> &BoxDomain<T> {
        &self.domain
    }

    fn region_contains(&self, x: &StatePoint<T>) -> bool {
        self.inner.region_contains(&self.down(x))
    }

    fn pressure(&self, u: T, v: &[T]) -> Result<Vec<T>> {
        let inv = T::one() / self.t;
        let v: Vec<T> = v.iter().map(|x| *x * inv).collect();
        self.inner.pressure(u * inv, &v)
    }

    fn entropy(&self, x: &StatePoint<T>) -> Option<T> {
        self.inner.entropy(&self.down(x)).map(|s| s * self.t)
    }

    fn amount(&self) -> T {
        self.inner.amount() * self.t
    }

    fn lipschitz_hint(&self) -> T {
        self.inner.lipschitz_hint()
    }

    fn energy_bounds(&self, v: &[T]) -> (T, T) {
        let inv = T::one() / self.t;
        let v: Vec<T> = v.iter().map(|x| *x * inv).collect();
        let (lo, hi) = self.inner.energy_bounds(&v);
        (lo * self.t, hi * self.t)
    }
}

/// Accessibility on one simple system: single states geometrically (by
/// adiabats), compounds through the model entropy when it has one.
pub struct GeometricOracle<T: Real> {
    model: Arc<dyn SimpleSystem<T>>,
}

impl<T: Real> GeometricOracle<T> {
    pub fn new(model: Arc<dyn SimpleSystem<T>>) -> Self {
        GeometricOracle { model }
    }

    pub fn model(&self) -> &dyn SimpleSystem<T> {
        self.model.as_ref()
    }

    fn point(&self, s: &StateRef<T>) -> Option<StatePoint<T>> {
        (&s.space == self.model.id())
            .then(|| StatePoint::from_coords(&s.coords))
            .flatten()
            .filter(|p| p.v.len() == self.model.work_dim())
    }
}

impl<T: Real> AccessOracle<T, StateRef<T>> for GeometricOracle<T> {
    fn compare(&self, a: &CompoundState<T, StateRef<T>>, b: &CompoundState<T, StateRef<T>>) -> Comparability {
        if let ([(ka, sa)], [(kb, sb)]) = (a.parts(), b.parts()) {
            if (*ka - *kb).abs() <= T::lit(1e-12) * T::one().max(ka.abs()) {
                let (Some(x), Some(y)) = (self.point(sa), self.point(sb)) else {
                    return Comparability::Unknown;
                };
                return match forward_sector_contains(self.model.as_ref(), &x, &y) {
                    Ok(Sector::Succeeds) => Comparability::NotPrecedes,
                    Ok(_) => Comparability::Precedes,
                    Err(_) => Comparability::Unknown,
                };
            }
        }
        if !crate::order::same_composition(a, b) {
            return Comparability::NotPrecedes;
        }
        let total = |c: &CompoundState<T, StateRef<T>>| -> Option<T> {
            c.parts()
                .iter()
                .map(|(k, s)| self.point(s).and_then(|p| self.model.entropy(&p)).map(|e| *k * e))
                .sum()
        };
        match (total(a), total(b)) {
            (Some(x), Some(y)) => Comparability::from_bool(x <= y + T::lit(1e-12)),
            _ => Comparability::Unknown,
        }
    }
}
