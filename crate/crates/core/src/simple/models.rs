use super::{BoxDomain, SimpleSystem, StatePoint};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::state::SpaceId;

/// Monatomic ideal gas: `P = 2U/(3V)`, `S = n[(3/2)ln(U/n) + ln(V/n)]`.
#[derive(Debug, Clone)]
pub struct IdealGas<T> {
    id: SpaceId,
    amount: T,
    domain: BoxDomain<T>,
}

impl<T: Real> IdealGas<T> {
    pub fn new(id: impl Into<String>, amount: T, domain: BoxDomain<T>) -> Result<Self> {
        if !(amount > T::zero()) {
            return Err(Error::Config(format!("amount must be positive, got {amount}")));
        }
        if domain.v.len() != 1 || domain.u.0 < T::zero() || domain.v[0].0 < T::zero() {
            return Err(Error::Config("ideal gas needs one work coordinate and U, V ≥ 0".into()));
        }
        Ok(IdealGas {
            id: SpaceId::new(id)?,
            amount,
            domain,
        })
    }

    /// Box `(0, 100n)` in both `U` and `V`.
    pub fn with_default_domain(id: impl Into<String>, amount: T) -> Result<Self> {
        let hi = T::lit(100.0) * amount;
        Self::new(id, amount, BoxDomain::new((T::zero(), hi), vec![(T::zero(), hi)])?)
    }

    /// `T = 2U/(3n)`.
    pub fn temperature_eos(&self, u: T) -> T {
        T::lit(2.0) * u / (T::lit(3.0) * self.amount)
    }
}

impl<T: Real> SimpleSystem<T> for IdealGas<T> {
    fn id(&self) -> &SpaceId {
        &self.id
    }

    fn domain(&self) -> &BoxDomain<T> {
        &self.domain
    }

    fn pressure(&self, u: T, v: &[T]) -> Result<Vec<T>> {
        let v = v[0];
        if !(u > T::zero() && v > T::zero()) {
            return Err(Error::Model(format!("ideal gas pressure at U={u}, V={v}")));
        }
        Ok(vec![T::lit(2.0) * u / (T::lit(3.0) * v)])
    }

    fn entropy(&self, x: &StatePoint<T>) -> Option<T> {
        let n = self.amount;
        let (u, v) = (x.u / n, *x.v.first()? / n);
        (u > T::zero() && v > T::zero()).then(|| n * (T::lit(1.5) * u.ln() + v.ln()))
    }

    fn amount(&self) -> T {
        self.amount
    }

    fn lipschitz_hint(&self) -> T {
        T::lit(2.0 / 3.0) / self.domain.v[0].0.max(T::lit(1e-3))
    }
}

/// Van der Waals fluid in reduced units (`a = 3`, `b = 1/3`, `R = 8/3`,
/// `c_v = 3R/2`): `T = (u + 3/v)/4`, `P = 8T/(3v − 1) − 3/v²` per mole.
///
/// The entropy is computed numerically from the pressure field: along the
/// adiabat to a reference volume, then `∫ dU/T` on the reference isochore.
#[derive(Debug, Clone)]
pub struct VanDerWaals<T> {
    id: SpaceId,
    amount: T,
    domain: BoxDomain<T>,
    v_ref: T,
    u_anchor: T,
}

const VDW_ADIABAT_STEPS: usize = 2048;
const GL_PANELS: usize = 32;

// 8-point Gauss–Legendre on [-1, 1]
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

impl<T: Real> VanDerWaals<T> {
    pub fn new(id: impl Into<String>, amount: T, domain: BoxDomain<T>) -> Result<Self> {
        if !(amount > T::zero()) {
            return Err(Error::Config(format!("amount must be positive, got {amount}")));
        }
        if domain.v.len() != 1 || domain.v[0].0 <= amount / T::lit(3.0) {
            return Err(Error::Config("van der Waals needs one work coordinate with V > n/3".into()));
        }
        let v_ref = (domain.v[0].0 + domain.v[0].1) / T::lit(2.0);
        // T = 1 on the reference isochore
        let u_anchor = amount * (T::lit(4.0) - T::lit(3.0) * amount / v_ref);
        Ok(VanDerWaals {
            id: SpaceId::new(id)?,
            amount,
            domain,
            v_ref,
            u_anchor,
        })
    }

    /// Box `U ∈ (4n, 20n)`, `V ∈ (n/2, 5n)`: reduced temperature above 1.
    pub fn with_default_domain(id: impl Into<String>, amount: T) -> Result<Self> {
        let n = amount;
        Self::new(
            id,
            amount,
            BoxDomain::new((T::lit(4.0) * n, T::lit(20.0) * n), vec![(T::lit(0.5) * n, T::lit(5.0) * n)])?,
        )
    }

    pub fn temperature_eos(&self, u: T, v: T) -> T {
        let n = self.amount;
        (u / n + T::lit(3.0) * n / v) / T::lit(4.0)
    }

    fn pressure_at(&self, u: T, v: T) -> T {
        let n = self.amount;
        let (t, vm) = (self.temperature_eos(u, v), v / n);
        T::lit(8.0) * t / (T::lit(3.0) * vm - T::one()) - T::lit(3.0) / (vm * vm)
    }

    fn isochore_integral(&self, u_from: T, u_to: T) -> T {
        let h = (u_to - u_from) / T::from_usize(GL_PANELS).unwrap();
        let half = h / T::lit(2.0);
        let mut total = T::zero();
        for p in 0..GL_PANELS {
            let mid = u_from + h * (T::from_usize(p).unwrap() + T::lit(0.5));
            for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let u = mid + half * T::lit(*x);
                total = total + T::lit(w) * half / self.temperature_eos(u, self.v_ref);
            }
        }
        total
    }
}

impl<T: Real> SimpleSystem<T> for VanDerWaals<T> {
    fn id(&self) -> &SpaceId {
        &self.id
    }

    fn domain(&self) -> &BoxDomain<T> {
        &self.domain
    }

    fn region_contains(&self, x: &StatePoint<T>) -> bool {
        x.v[0] > self.amount / T::lit(3.0) && self.temperature_eos(x.u, x.v[0]) > T::zero()
    }

    fn pressure(&self, u: T, v: &[T]) -> Result<Vec<T>> {
        let v = v[0];
        if !(v > self.amount / T::lit(3.0)) || !(self.temperature_eos(u, v) > T::zero()) {
            return Err(Error::Model(format!("van der Waals pressure at U={u}, V={v}")));
        }
        Ok(vec![self.pressure_at(u, v)])
    }

    fn entropy(&self, x: &StatePoint<T>) -> Option<T> {
        let v0 = *x.v.first()?;
        if !self.region_contains(x) {
            return None;
        }
        let steps = T::from_usize(VDW_ADIABAT_STEPS).unwrap();
        let h = (self.v_ref - v0) / steps;
        let f = |u: T, v: T| -self.pressure_at(u, v);
        let (mut u, mut v) = (x.u, v0);
        let two = T::lit(2.0);
        for _ in 0..VDW_ADIABAT_STEPS {
            let k1 = f(u, v);
            let k2 = f(u + h * k1 / two, v + h / two);
            let k3 = f(u + h * k2 / two, v + h / two);
            let k4 = f(u + h * k3, v + h);
            u = u + h * (k1 + two * k2 + two * k3 + k4) / T::lit(6.0);
            v = v + h;
            if !(self.temperature_eos(u, v) > T::zero()) {
                return None;
            }
        }
        Some(self.isochore_integral(self.u_anchor, u))
    }

    fn amount(&self) -> T {
        self.amount
    }

    fn energy_bounds(&self, v: &[T]) -> (T, T) {
        let n = self.amount;
        let floor = -T::lit(3.0) * n * n / v[0];
        (self.domain.u.0.max(floor), self.domain.u.1)
    }
}

/// Tabulated model: pressure (and optionally entropy) on a `U × V` grid,
/// bilinearly interpolated.
#[derive(Debug, Clone)]
pub struct CustomTable<T> {
    id: SpaceId,
    amount: T,
    domain: BoxDomain<T>,
    u_nodes: Vec<T>,
    v_nodes: Vec<T>,
    pressure: Vec<T>,
    entropy: Option<Vec<T>>,
}

impl<T: Real> CustomTable<T> {
    /// Tables are row-major: entry `i·|V| + j` belongs to `(u_nodes[i], v_nodes[j])`.
    pub fn new(
        id: impl Into<String>,
        amount: T,
        u_nodes: Vec<T>,
        v_nodes: Vec<T>,
        pressure: Vec<T>,
        entropy: Option<Vec<T>>,
    ) -> Result<Self> {
        let increasing = |n: &[T]| n.len() >= 2 && n.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&u_nodes) || !increasing(&v_nodes) {
            return Err(Error::Config("table nodes must be strictly increasing with ≥ 2 entries".into()));
        }
        let size = u_nodes.len() * v_nodes.len();
        if pressure.len() != size || entropy.as_ref().is_some_and(|e| e.len() != size) {
            return Err(Error::Config(format!("table needs {size} entries")));
        }
        if !(amount > T::zero()) {
            return Err(Error::Config(format!("amount must be positive, got {amount}")));
        }
        let domain = BoxDomain::new(
            (u_nodes[0], *u_nodes.last().unwrap()),
            vec![(v_nodes[0], *v_nodes.last().unwrap())],
        )?;
        Ok(CustomTable {
            id: SpaceId::new(id)?,
            amount,
            domain,
            u_nodes,
            v_nodes,
            pressure,
            entropy,
        })
    }

    fn cell(nodes: &[T], x: T) -> Option<(usize, T)> {
        if x < nodes[0] || x > *nodes.last().unwrap() {
            return None;
        }
        let i = nodes.partition_point(|n| *n <= x).clamp(1, nodes.len() - 1) - 1;
        Some((i, (x - nodes[i]) / (nodes[i + 1] - nodes[i])))
    }

    fn interpolate(&self, table: &[T], u: T, v: T) -> Option<T> {
        let (i, s) = Self::cell(&self.u_nodes, u)?;
        let (j, t) = Self::cell(&self.v_nodes, v)?;
        let nv = self.v_nodes.len();
        let at = |a: usize, b: usize| table[a * nv + b];
        let one = T::one();
        Some(
            (one - s) * (one - t) * at(i, j)
                + s * (one - t) * at(i + 1, j)
                + (one - s) * t * at(i, j + 1)
                + s * t * at(i + 1, j + 1),
        )
    }
}

impl<T: Real> SimpleSystem<T> for CustomTable<T> {
    fn id(&self) -> &SpaceId {
        &self.id
    }

    fn domain(&self) -> &BoxDomain<T> {
        &self.domain
    }

    fn pressure(&self, u: T, v: &[T]) -> Result<Vec<T>> {
        self.interpolate(&self.pressure, u, v[0])
            .map(|p| vec![p])
            .ok_or_else(|| Error::Model(format!("table pressure outside grid at U={u}, V={}", v[0])))
    }

    fn entropy(&self, x: &StatePoint<T>) -> Option<T> {
        self.interpolate(self.entropy.as_ref()?, x.u, *x.v.first()?)
    }

    fn amount(&self) -> T {
        self.amount
    }
}
