use super::{SimpleSystem, StatePoint};
use crate::error::{Error, Result};
use crate::report::{CheckResult, Tally};
use crate::scalar::Real;

/// `[T₋, T₊]` from the one-sided `U`-derivatives of the entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureBracket<T> {
    pub t_minus: T,
    pub t_plus: T,
}

impl<T: Real> TemperatureBracket<T> {
    pub fn overlaps(&self, other: &Self, slack: T) -> bool {
        self.t_minus <= other.t_plus + slack && other.t_minus <= self.t_plus + slack
    }

    pub fn width(&self) -> T {
        self.t_plus - self.t_minus
    }
}

fn default_step<T: Real>(x: &StatePoint<T>) -> T {
    T::lit(1e-5) * T::one().max(x.u.abs())
}

/// `T = 1/(∂S/∂U)` by central difference with step `h`, bracketed by the
/// one-sided differences.
pub fn temperature<T: Real>(
    model: &dyn SimpleSystem<T>,
    entropy: &dyn Fn(&StatePoint<T>) -> Option<T>,
    x: &StatePoint<T>,
    h: T,
) -> Result<(T, TemperatureBracket<T>)> {
    let lo = StatePoint::new(x.u - h, x.v.clone());
    let hi = StatePoint::new(x.u + h, x.v.clone());
    for p in [&lo, x, &hi] {
        if !model.contains(p) {
            return Err(Error::Domain(format!("temperature stencil point {p} outside the domain")));
        }
    }
    let eval = |p: &StatePoint<T>| entropy(p).ok_or_else(|| Error::Model(format!("no entropy at {p}")));
    let (s_lo, s0, s_hi) = (eval(&lo)?, eval(x)?, eval(&hi)?);
    let central = (s_hi - s_lo) / (T::lit(2.0) * h);
    let fwd = (s_hi - s0) / h;
    let bwd = (s0 - s_lo) / h;
    if !(central > T::zero() && fwd > T::zero() && bwd > T::zero()) {
        return Err(Error::Orientation(format!(
            "entropy does not increase with U at {x} (∂S/∂U ≈ {central})"
        )));
    }
    let t = T::one() / central;
    let bracket = TemperatureBracket {
        t_minus: T::one() / bwd,
        t_plus: T::one() / fwd,
    };
    if bracket.t_minus > bracket.t_plus + T::lit(1e-6) * t {
        return Err(Error::Orientation(format!(
            "temperature bracket inverted at {x}: [{}, {}]",
            bracket.t_minus, bracket.t_plus
        )));
    }
    Ok((t, bracket))
}

/// Temperature from the model's own entropy with a relative step of `1e-5`.
pub fn temperature_of<T: Real>(model: &dyn SimpleSystem<T>, x: &StatePoint<T>) -> Result<(T, TemperatureBracket<T>)> {
    temperature(model, &|p| model.entropy(p), x, default_step(x))
}

/// Secant inequality `S((1−λ)X + λY) ≥ (1−λ)S(X) + λS(Y)` for `λ ∈ {1/4, 1/2, 3/4}`.
pub fn check_concavity<T: Real>(
    entropy: &dyn Fn(&StatePoint<T>) -> Option<T>,
    model: &dyn SimpleSystem<T>,
    secants: &[(StatePoint<T>, StatePoint<T>)],
) -> CheckResult {
    let mut tally = Tally::new("concavity");
    for (x, y) in secants {
        for lam in [0.25, 0.5, 0.75].map(T::lit) {
            let z = x.lerp(y, lam);
            if !model.contains(&z) {
                tally.record(None, || format!("secant point {z} outside the domain"));
                continue;
            }
            let outcome = match (entropy(x), entropy(y), entropy(&z)) {
                (Some(sx), Some(sy), Some(sz)) => {
                    let chord = (T::one() - lam) * sx + lam * sy;
                    Some(sz >= chord - T::lit(1e-10) * T::one().max(chord.abs()))
                }
                _ => None,
            };
            tally.record(outcome, || format!("S at λ = {lam} between {x} and {y} lies below the chord"));
        }
    }
    tally.finish()
}

/// `∂S/∂Vⱼ = Pⱼ/T` to `1e-4` relative. Stencils that would cross the boundary
/// become one-sided and are held to `1e-3`; they are counted in the note.
pub fn check_pressure_entropy_identity<T: Real>(
    model: &dyn SimpleSystem<T>,
    entropy: &dyn Fn(&StatePoint<T>) -> Option<T>,
    sample: &[StatePoint<T>],
) -> CheckResult {
    let mut tally = Tally::new("pressure-entropy");
    let mut one_sided = 0usize;
    for x in sample {
        let (t, _) = match temperature(model, entropy, x, default_step(x)) {
            Ok(t) => t,
            Err(e) => {
                tally.record(None, || format!("{x}: {e}"));
                continue;
            }
        };
        let p = match model.pressure(x.u, &x.v) {
            Ok(p) => p,
            Err(e) => {
                tally.record(None, || format!("{x}: {e}"));
                continue;
            }
        };
        for j in 0..x.v.len() {
            let h = T::lit(1e-5) * T::one().max(x.v[j].abs());
            let shifted = |d: T| {
                let mut q = x.clone();
                q.v[j] = q.v[j] + d;
                q
            };
            let (up, down) = (shifted(h), shifted(-h));
            let (inside_up, inside_down) = (model.contains(&up), model.contains(&down));
            let s = |q: &StatePoint<T>| entropy(q);
            let (deriv, tol) = match (inside_up, inside_down) {
                (true, true) => (s(&up).zip(s(&down)).map(|(a, b)| (a - b) / (T::lit(2.0) * h)), T::lit(1e-4)),
                (true, false) => {
                    one_sided += 1;
                    (s(&up).zip(s(x)).map(|(a, b)| (a - b) / h), T::lit(1e-3))
                }
                (false, true) => {
                    one_sided += 1;
                    (s(x).zip(s(&down)).map(|(a, b)| (a - b) / h), T::lit(1e-3))
                }
                (false, false) => (None, T::zero()),
            };
            let expected = p[j] / t;
            let outcome = deriv.map(|d| (d - expected).abs() <= tol * expected.abs().max(T::lit(1e-12)));
            tally.record(outcome, || {
                format!("∂S/∂V{j} = {deriv:?} vs P/T = {expected} at {x}")
            });
        }
    }
    let r = tally.finish();
    if one_sided > 0 {
        let note = format!("{}; {one_sided} one-sided stencils at 1e-3", r.note);
        r.with_note(note)
    } else {
        r
    }
}

/// The state at work coordinates `v` with temperature `t`, found by bisection
/// in `U` (temperature increases with energy).
pub fn state_at_temperature<T: Real>(model: &dyn SimpleSystem<T>, v: &[T], t: T) -> Result<StatePoint<T>> {
    let (lo, hi) = model.energy_bounds(v);
    let m = T::lit(1e-3) * (hi - lo);
    let (mut a, mut b) = (lo + m, hi - m);
    let temp = |u: T| temperature_of(model, &StatePoint::new(u, v.to_vec())).map(|(t, _)| t);
    let (ta, tb) = (temp(a)?, temp(b)?);
    if !(ta <= t && t <= tb) {
        return Err(Error::Range {
            lo: ta.to_f64_lossy(),
            hi: tb.to_f64_lossy(),
            detail: format!("temperature {t} not reachable at V = {:?}", v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>()),
        });
    }
    for _ in 0..200 {
        let mid = (a + b) / T::lit(2.0);
        if temp(mid)? < t {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= T::lit(1e-13) * T::one().max(a.abs()) {
            break;
        }
    }
    Ok(StatePoint::new((a + b) / T::lit(2.0), v.to_vec()))
}
