use super::{SimpleSystem, StatePoint};
use crate::error::{Error, Result};
use crate::scalar::Real;

const BASE_STEPS: usize = 1024;
const MAX_STEPS: usize = 1 << 20;
const REFINE_TOL: f64 = 1e-8;

/// Adiabat through `seed`, sampled along the integration path.
#[derive(Debug, Clone)]
pub struct AdiabatCurve<T> {
    pub seed: StatePoint<T>,
    /// `(V, u(V))` at every step of the accepted run, seed first.
    pub samples: Vec<(Vec<T>, T)>,
    /// Step in the path parameter of the accepted run (per segment).
    pub step: T,
}

impl<T: Real> AdiabatCurve<T> {
    pub fn end(&self) -> StatePoint<T> {
        let (v, u) = self.samples.last().expect("seed is always sampled");
        StatePoint::new(*u, v.clone())
    }
}

/// RK4 of `du/ds = −P(u, V(s))·(b − a)` on `V(s) = a + s(b − a)`.
fn run<T: Real>(
    model: &dyn SimpleSystem<T>,
    seed: &StatePoint<T>,
    waypoints: &[Vec<T>],
    steps: usize,
    keep: bool,
) -> Result<(T, Vec<(Vec<T>, T)>)> {
    let mut u = seed.u;
    let mut samples = Vec::new();
    if keep {
        samples.push((seed.v.clone(), u));
    }
    let h = T::one() / T::from_usize(steps).unwrap();
    let two = T::lit(2.0);
    let mut from = seed.v.clone();
    for to in waypoints {
        let dv: Vec<T> = to.iter().zip(&from).map(|(b, a)| *b - *a).collect();
        if dv.iter().all(|d| d.is_zero()) {
            continue;
        }
        let at = |s: T| -> Vec<T> { from.iter().zip(&dv).map(|(a, d)| *a + s * *d).collect() };
        let rate = |u: T, s: T| -> Result<T> {
            let v = at(s);
            let x = StatePoint::new(u, v);
            if !model.contains(&x) {
                return Err(Error::Domain(format!("adiabat leaves the domain at {x}")));
            }
            let p = model.pressure(u, &x.v)?;
            let r = -p.iter().zip(&dv).map(|(p, d)| *p * *d).sum::<T>();
            if r.is_finite() {
                Ok(r)
            } else {
                Err(Error::Model(format!("non-finite pressure at {x}")))
            }
        };
        for i in 0..steps {
            let s = T::from_usize(i).unwrap() * h;
            let k1 = rate(u, s)?;
            let k2 = rate(u + h * k1 / two, s + h / two)?;
            let k3 = rate(u + h * k2 / two, s + h / two)?;
            let k4 = rate(u + h * k3, s + h)?;
            u = u + h * (k1 + two * k2 + two * k3 + k4) / T::lit(6.0);
            if keep {
                samples.push((at(s + h), u));
            }
        }
        from = to.clone();
    }
    Ok((u, samples))
}

/// Integrates the adiabat from `x` along the polygon `x.V → waypoints…`.
///
/// Steps start at 1024 per segment and double until two successive runs
/// agree to `1e-8·max(1, |u|)`.
pub fn integrate_adiabat_path<T: Real>(
    model: &dyn SimpleSystem<T>,
    x: &StatePoint<T>,
    waypoints: &[Vec<T>],
) -> Result<AdiabatCurve<T>> {
    if !model.contains(x) {
        return Err(Error::Domain(format!("seed {x} outside the domain")));
    }
    if let Some(w) = waypoints.iter().find(|w| w.len() != x.v.len()) {
        return Err(Error::Domain(format!("waypoint has {} coordinates, expected {}", w.len(), x.v.len())));
    }
    let mut steps = BASE_STEPS;
    let (mut prev, _) = run(model, x, waypoints, steps, false)?;
    loop {
        if steps >= MAX_STEPS {
            return Err(Error::Convergence(steps));
        }
        steps *= 2;
        let (u, _) = run(model, x, waypoints, steps, false)?;
        let converged = (u - prev).abs() <= T::lit(REFINE_TOL) * T::one().max(u.abs());
        prev = u;
        if converged {
            break;
        }
    }
    let (_, samples) = run(model, x, waypoints, steps, true)?;
    Ok(AdiabatCurve {
        seed: x.clone(),
        samples,
        step: T::one() / T::from_usize(steps).unwrap(),
    })
}

/// Straight-line adiabat from `x` to the work coordinates `v_target`.
pub fn integrate_adiabat<T: Real>(model: &dyn SimpleSystem<T>, x: &StatePoint<T>, v_target: &[T]) -> Result<AdiabatCurve<T>> {
    integrate_adiabat_path(model, x, &[v_target.to_vec()])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    /// `x ≺≺ y`
    Precedes,
    /// `x ∼ y`
    Equivalent,
    /// `y ≺≺ x`
    Succeeds,
}

/// Where `y` lies relative to the adiabat through `x`: above it (more energy
/// at the same work coordinates) is the forward sector.
pub fn forward_sector_contains<T: Real>(model: &dyn SimpleSystem<T>, x: &StatePoint<T>, y: &StatePoint<T>) -> Result<Sector> {
    if !model.contains(y) {
        return Err(Error::Domain(format!("{y} outside the domain")));
    }
    let u = integrate_adiabat(model, x, &y.v)?.end().u;
    let tol = T::lit(1e-9).max(T::lit(1e-6) * y.u.abs());
    Ok(if (y.u - u).abs() <= tol {
        Sector::Equivalent
    } else if y.u > u {
        Sector::Precedes
    } else {
        Sector::Succeeds
    })
}
