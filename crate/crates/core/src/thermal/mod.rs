//! Thermal contact between simple systems.

mod carnot;

pub use carnot::{carnot_check, reservoir_cycle_audit, AuditRow, CarnotOutcome, CycleAudit};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::report::{CheckResult, Report, Tally};
use crate::scalar::Real;
use crate::simple::{
    forward_sector_contains, state_at_temperature, temperature_of, BoxDomain, ScaledSystem, Sector,
    SimpleSystem, StatePoint, TemperatureBracket,
};

/// A state together with the simple system it belongs to.
#[derive(Clone)]
pub struct Body<T: Real> {
    pub model: Arc<dyn SimpleSystem<T>>,
    pub state: StatePoint<T>,
}

impl<T: Real> std::fmt::Debug for Body<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", self.model.id(), self.state)
    }
}

impl<T: Real> Body<T> {
    pub fn new(model: Arc<dyn SimpleSystem<T>>, state: StatePoint<T>) -> Self {
        Body { model, state }
    }

    /// `t·X` in the scaled copy of the system.
    pub fn scaled(&self, t: T) -> Result<Self> {
        Ok(Body {
            model: Arc::new(ScaledSystem::new(self.model.clone(), t)?),
            state: self.state.scaled(t),
        })
    }

    pub fn temperature(&self) -> Result<(T, TemperatureBracket<T>)> {
        temperature_of(self.model.as_ref(), &self.state)
    }

    pub fn entropy(&self) -> Result<T> {
        self.model
            .entropy(&self.state)
            .ok_or_else(|| Error::Model(format!("no entropy at {:?}", self)))
    }
}

/// `θ(X, Y) = (U₁ + U₂, V₁, V₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalJoinPoint<T> {
    pub u: T,
    pub v1: Vec<T>,
    pub v2: Vec<T>,
}

pub fn thermal_join<T: Real>(x: &StatePoint<T>, y: &StatePoint<T>) -> ThermalJoinPoint<T> {
    ThermalJoinPoint {
        u: x.u + y.u,
        v1: x.v.clone(),
        v2: y.v.clone(),
    }
}

/// Thermal join of two systems, stored with the smaller `SpaceId` on the left.
#[derive(Clone)]
pub struct JoinedSystem<T: Real> {
    pub left: Arc<dyn SimpleSystem<T>>,
    pub right: Arc<dyn SimpleSystem<T>>,
}

impl<T: Real> JoinedSystem<T> {
    /// Returns the join and whether the arguments were swapped.
    pub fn new(a: Arc<dyn SimpleSystem<T>>, b: Arc<dyn SimpleSystem<T>>) -> (Self, bool) {
        if b.id() < a.id() {
            (JoinedSystem { left: b, right: a }, true)
        } else {
            (JoinedSystem { left: a, right: b }, false)
        }
    }

    /// `θ` of a left and a right state.
    pub fn join(&self, x: &StatePoint<T>, y: &StatePoint<T>) -> ThermalJoinPoint<T> {
        thermal_join(x, y)
    }

    pub fn split(&self, joined: &ThermalJoinPoint<T>) -> Result<SplitResult<T>> {
        thermal_split(self.left.as_ref(), self.right.as_ref(), joined)
    }

    /// Entropy of the joined state: the maximum over energy divisions.
    pub fn entropy(&self, joined: &ThermalJoinPoint<T>) -> Result<T> {
        self.split(joined).map(|s| s.total_entropy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult<T> {
    pub x: StatePoint<T>,
    pub y: StatePoint<T>,
    pub total_entropy: T,
    pub maximizer_energy: T,
    /// The entropy profile looked non-concave and a grid scan was used.
    pub grid_fallback: bool,
}

const PROBE_POINTS: usize = 33;
const SCAN_POINTS: usize = 4097;
const GOLDEN_TOL: f64 = 1e-10;

/// Feasible `W` for the left system: both parts strictly inside their domains.
pub fn split_window<T: Real>(
    left: &dyn SimpleSystem<T>,
    right: &dyn SimpleSystem<T>,
    joined: &ThermalJoinPoint<T>,
) -> Result<(T, T)> {
    let (l1, h1) = left.energy_bounds(&joined.v1);
    let (l2, h2) = right.energy_bounds(&joined.v2);
    let m1 = T::lit(2e-6) * (h1 - l1);
    let m2 = T::lit(2e-6) * (h2 - l2);
    let lo = (l1 + m1).max(joined.u - (h2 - m2));
    let hi = (h1 - m1).min(joined.u - (l2 + m2));
    if !(lo < hi) {
        return Err(Error::Infeasible(format!(
            "no energy division of U = {} fits both systems",
            joined.u
        )));
    }
    Ok((lo, hi))
}

/// Maximizes `S₁(W, V₁) + S₂(U − W, V₂)` over the feasible window.
pub fn thermal_split<T: Real>(
    left: &dyn SimpleSystem<T>,
    right: &dyn SimpleSystem<T>,
    joined: &ThermalJoinPoint<T>,
) -> Result<SplitResult<T>> {
    let (lo, hi) = split_window(left, right, joined)?;
    let f = |w: T| -> Result<T> {
        let x = StatePoint::new(w, joined.v1.clone());
        let y = StatePoint::new(joined.u - w, joined.v2.clone());
        match (left.entropy(&x), right.entropy(&y)) {
            (Some(a), Some(b)) if (a + b).is_finite() => Ok(a + b),
            _ => Err(Error::Model(format!("entropy undefined at split W = {w}"))),
        }
    };
    let at = |i: usize, n: usize| lo + (hi - lo) * T::from_usize(i).unwrap() / T::from_usize(n - 1).unwrap();

    let probe: Vec<T> = (0..PROBE_POINTS).map(|i| f(at(i, PROBE_POINTS))).collect::<Result<_>>()?;
    let scale = probe.iter().fold(T::one(), |m, v| m.max(v.abs()));
    let concave = probe
        .windows(3)
        .all(|w| w[0] - T::lit(2.0) * w[1] + w[2] <= T::lit(1e-12) * scale);

    let (mut a, mut b) = if concave {
        (lo, hi)
    } else {
        let vals: Vec<T> = (0..SCAN_POINTS).map(|i| f(at(i, SCAN_POINTS))).collect::<Result<_>>()?;
        let best = (0..SCAN_POINTS)
            .max_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap().then(j.cmp(&i)))
            .unwrap();
        (at(best.saturating_sub(1), SCAN_POINTS), at((best + 1).min(SCAN_POINTS - 1), SCAN_POINTS))
    };

    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut iterations = 0;
    while b - a > T::lit(GOLDEN_TOL) && iterations < 400 {
        iterations += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let mut w = (a + b) / T::lit(2.0);
    let mut best = f(w)?;

    // one parabolic step through W − h, W, W + h
    let h = T::lit(1e-5) * T::one().max(w.abs());
    if w - h > lo && w + h < hi {
        let (fm, fp) = (f(w - h)?, f(w + h)?);
        let curv = fp - T::lit(2.0) * best + fm;
        if curv < T::zero() {
            let cand = w - h * (fp - fm) / (T::lit(2.0) * curv);
            if (cand - w).abs() <= h {
                let fc = f(cand)?;
                if fc >= best {
                    w = cand;
                    best = fc;
                }
            }
        }
    }
    Ok(SplitResult {
        x: StatePoint::new(w, joined.v1.clone()),
        y: StatePoint::new(joined.u - w, joined.v2.clone()),
        total_entropy: best,
        maximizer_energy: w,
        grid_fallback: !concave,
    })
}

/// Bracket overlap with slack `max(tol, 1e-6·max T)`.
pub fn in_thermal_equilibrium<T: Real>(x: &Body<T>, y: &Body<T>, tol: T) -> Result<bool> {
    let (tx, bx) = x.temperature()?;
    let (ty, by) = y.temperature()?;
    let slack = tol.max(T::lit(1e-6) * tx.max(ty));
    Ok(bx.overlaps(&by, slack))
}

/// Transitivity on `triples`, plus symmetry, reflexivity and scaling
/// invariance (`X ∼ Y ⇒ 2X ∼ 3Y`) of an equilibrium predicate.
pub fn check_zeroth_law<T: Real>(
    bodies: &[Body<T>],
    triples: &[(usize, usize, usize)],
    equilibrium: &dyn Fn(&Body<T>, &Body<T>) -> Result<bool>,
) -> Report {
    let eq = |a: &Body<T>, b: &Body<T>| equilibrium(a, b).ok();
    let mut trans = Tally::new("zeroth-law");
    let mut sym = Tally::new("symmetry");
    let mut refl = Tally::new("reflexivity");
    let mut scaling = Tally::new("scaling");
    for &(i, j, k) in triples {
        let (x, z, y) = (&bodies[i], &bodies[j], &bodies[k]);
        match (eq(x, z), eq(z, y)) {
            (Some(true), Some(true)) => {
                trans.record(eq(x, y), || format!("{x:?} ∼ {z:?} ∼ {y:?} but {x:?} ≁ {y:?}"));
            }
            (None, _) | (_, None) => trans.record(None, || format!("undecided on {x:?}, {z:?}, {y:?}")),
            _ => trans.pass(),
        }
    }
    for (i, x) in bodies.iter().enumerate() {
        refl.record(eq(x, x), || format!("{x:?} ≁ itself"));
        for y in &bodies[i + 1..] {
            let (a, b) = (eq(x, y), eq(y, x));
            sym.record(a.zip(b).map(|(a, b)| a == b), || format!("{x:?} vs {y:?} not symmetric"));
            if a == Some(true) {
                let scaled = x.scaled(T::lit(2.0)).ok().zip(y.scaled(T::lit(3.0)).ok());
                let o = scaled.and_then(|(sx, sy)| eq(&sx, &sy));
                scaling.record(o, || format!("{x:?} ∼ {y:?} but 2X ≁ 3Y"));
            }
        }
    }
    [trans, sym, refl, scaling].into_iter().map(Tally::finish).collect()
}

fn side<T: Real>(model: &dyn SimpleSystem<T>, x: &StatePoint<T>, y: &StatePoint<T>) -> Result<Sector> {
    match (model.entropy(x), model.entropy(y)) {
        (Some(sx), Some(sy)) => {
            let tol = T::lit(1e-12) * T::one().max(sx.abs());
            Ok(if (sy - sx).abs() <= tol {
                Sector::Equivalent
            } else if sy > sx {
                Sector::Precedes
            } else {
                Sector::Succeeds
            })
        }
        _ => forward_sector_contains(model, x, y),
    }
}

/// Looks for `X₀ ∼ᵀ X₁` with `X₀ ≺≺ x ≺≺ X₁` on isotherms near `T(x)`,
/// scanning work coordinates across `search_box`. Witnesses found by the
/// scan are confirmed geometrically against the adiabat through `x`.
pub fn check_transversality<T: Real>(model: &dyn SimpleSystem<T>, x: &StatePoint<T>, search_box: &BoxDomain<T>) -> CheckResult {
    let name = "transversality";
    let degenerate = !(search_box.u.0 < search_box.u.1) || search_box.v.iter().any(|(a, b)| !(a < b));
    if degenerate || search_box.v.len() != x.v.len() {
        return CheckResult::fail(name, "degenerate search box");
    }
    let tx = match temperature_of(model, x) {
        Ok((t, _)) => t,
        Err(e) => return CheckResult::fail(name, format!("no temperature at {x}: {e}")),
    };
    const V_POINTS: usize = 16;
    // the box diagonal in V, evenly spaced and (for positive boxes) log-spaced
    let positive = search_box.v.iter().all(|(a, _)| *a > T::zero());
    let mut diagonal: Vec<Vec<T>> = Vec::with_capacity(2 * V_POINTS);
    for i in 0..V_POINTS {
        let s = T::lit((i as f64 + 0.5) / V_POINTS as f64);
        diagonal.push(search_box.v.iter().map(|(a, b)| *a + s * (*b - *a)).collect());
        if positive {
            diagonal.push(search_box.v.iter().map(|(a, b)| *a * (*b / *a).powf(s)).collect());
        }
    }
    let factors = [1.0, 0.9, 1.1, 0.75, 1.25, 0.5, 1.5];
    let mut scanned = String::new();
    for fac in factors {
        let t = tx * T::lit(fac);
        let mut below = None;
        let mut above = None;
        for v in &diagonal {
            let Ok(p) = state_at_temperature(model, v, t) else { continue };
            if p.u <= search_box.u.0 || p.u >= search_box.u.1 {
                continue;
            }
            match side(model, x, &p) {
                Ok(Sector::Succeeds) if below.is_none() => below = Some(p),
                Ok(Sector::Precedes) if above.is_none() => above = Some(p),
                _ => {}
            }
            if below.is_some() && above.is_some() {
                break;
            }
        }
        if let (Some(x0), Some(x1)) = (below, above) {
            let confirmed = matches!(forward_sector_contains(model, x, &x0), Ok(Sector::Succeeds))
                && matches!(forward_sector_contains(model, x, &x1), Ok(Sector::Precedes));
            if confirmed {
                return CheckResult::pass(name, 1).with_note(format!("T = {t}: X0 = {x0}, X1 = {x1}"));
            }
        }
        scanned.push_str(&format!(" T={t}"));
    }
    CheckResult::fail(name, format!("no straddling pair near {x}; scanned isotherms{scanned}"))
}

/// After splitting `θ(x, y)`: the hotter side does not gain energy and the
/// final temperature lies between the initial ones.
pub fn check_energy_flow<T: Real>(x: &Body<T>, y: &Body<T>) -> Result<CheckResult> {
    let (tx, _) = x.temperature()?;
    let (ty, _) = y.temperature()?;
    let scale = tx.max(ty);
    if (tx - ty).abs() <= T::lit(1e-12) * scale {
        return Err(Error::NotApplicable(format!("equal temperatures {tx} and {ty}")));
    }
    let split = thermal_split(x.model.as_ref(), y.model.as_ref(), &thermal_join(&x.state, &y.state))?;
    let x2 = Body::new(x.model.clone(), split.x.clone());
    let y2 = Body::new(y.model.clone(), split.y.clone());
    let (t_star, _) = x2.temperature()?;
    let (t_star_y, _) = y2.temperature()?;
    let du = split.x.u - x.state.u;
    let e_tol = T::lit(1e-9) * T::one().max(x.state.u.abs() + y.state.u.abs());
    let t_tol = T::lit(1e-6) * scale;
    let (hot_ok, t_lo, t_hi) = if tx > ty { (du <= e_tol, ty, tx) } else { (du >= -e_tol, tx, ty) };
    let between = t_lo - t_tol <= t_star && t_star <= t_hi + t_tol;
    let equal = (t_star - t_star_y).abs() <= T::lit(1e-4) * scale;
    Ok(if hot_ok && between && equal {
        CheckResult::pass("energy-flow", 1).with_note(format!("T* = {t_star}, ΔU_x = {du}"))
    } else {
        CheckResult::fail(
            "energy-flow",
            format!("T(x) = {tx}, T(y) = {ty}, T* = {t_star} / {t_star_y}, ΔU_x = {du}"),
        )
    })
}

/// Universal temperature range, checked pairwise: for each sampled state of
/// one system and each sampled work coordinate of another, some state of the
/// other system at those coordinates has the same temperature.
pub fn check_temperature_range<T: Real>(systems: &[(Arc<dyn SimpleSystem<T>>, Vec<StatePoint<T>>)]) -> CheckResult {
    let mut t = Tally::new("A15");
    for (i, (m1, states)) in systems.iter().enumerate() {
        for (j, (m2, others)) in systems.iter().enumerate() {
            if i == j {
                continue;
            }
            for x in states {
                let Ok((tx, _)) = temperature_of(m1.as_ref(), x) else {
                    t.record(None, || format!("no temperature at {}{x}", m1.id()));
                    continue;
                };
                for y in others {
                    let ok = state_at_temperature(m2.as_ref(), &y.v, tx).is_ok();
                    t.record(Some(ok), || {
                        format!("{}{x} at T = {tx} has no partner in {} at V = {:?}", m1.id(), m2.id(), y.v.iter().map(|v| v.to_f64_lossy()).collect::<Vec<_>>())
                    });
                }
            }
        }
    }
    t.finish()
}
