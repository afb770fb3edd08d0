use rayon::prelude::*;

use super::{AccessOracle, Comparability, Relation};
use crate::error::{Error, Result};
use crate::report::{CheckResult, Report, Tally};
use crate::scalar::Real;
use crate::state::{CompoundState, SpaceId, StateRef};

type Compound<T> = CompoundState<T, StateRef<T>>;

const LAMBDA_LO: f64 = -8.0;
const LAMBDA_HI: f64 = 9.0;
const MAX_ITER: usize = 128;
/// `|λ(X₀)|` or `|λ(X₁) − 1|` above this marks the reference pair as a near tie.
const NEAR_TIE: f64 = 1e-3;

fn parts<T: Real>(parts: Vec<(T, StateRef<T>)>) -> Compound<T> {
    let parts = parts.into_iter().filter(|(k, _)| *k > T::zero()).collect();
    CompoundState::from_parts(parts).expect("zero scales filtered")
}

/// `((1−λ)X₀, λX₁) ≺ X`, with `(A, −B) ≺ C` read as `A ≺ (B, C)` off the strip.
fn strip_below<T: Real, O: AccessOracle<T, StateRef<T>> + ?Sized>(
    oracle: &O,
    x0: &StateRef<T>,
    x1: &StateRef<T>,
    x: &Compound<T>,
    lam: T,
) -> Comparability {
    let one = T::one();
    let m = x.mass();
    if lam > one {
        let lhs = parts(vec![(lam * m, x1.clone())]);
        let rhs = x.with_part((lam - one) * m, x0.clone()).expect("positive");
        oracle.compare(&lhs, &rhs)
    } else if lam < T::zero() {
        let lhs = parts(vec![((one - lam) * m, x0.clone())]);
        let rhs = x.with_part(-lam * m, x1.clone()).expect("positive");
        oracle.compare(&lhs, &rhs)
    } else {
        let lhs = parts(vec![((one - lam) * m, x0.clone()), (lam * m, x1.clone())]);
        oracle.compare(&lhs, x)
    }
}

fn check_reference<T: Real, O: AccessOracle<T, StateRef<T>> + ?Sized>(
    oracle: &O,
    z0: &StateRef<T>,
    z1: &StateRef<T>,
) -> Result<()> {
    let (a, b) = (CompoundState::single(z0.clone()), CompoundState::single(z1.clone()));
    match oracle.relation(&a, &b) {
        Relation::StrictlyPrecedes => Ok(()),
        Relation::Unknown => Err(Error::Unknown(format!("{z0} vs {z1}"))),
        r => Err(Error::Reference(format!("{z0} vs {z1}: {r:?}"))),
    }
}

/// `sup{λ ∈ [−8, 9] : pred(λ)}` for a downward-closed predicate.
fn bisect<T: Real>(tol: T, pred: impl Fn(T) -> Comparability, what: &dyn Fn() -> String) -> Result<T> {
    if !(tol > T::zero()) {
        return Err(Error::Domain(format!("bisection tolerance must be positive, got {tol}")));
    }
    let known = |lam: T| {
        pred(lam)
            .known()
            .ok_or_else(|| Error::Unknown(format!("{} at λ = {lam}", what())))
    };
    let (mut lo, mut hi) = (T::lit(LAMBDA_LO), T::lit(LAMBDA_HI));
    let range = |detail: &str| Error::Range {
        lo: LAMBDA_LO,
        hi: LAMBDA_HI,
        detail: format!("{}: {detail}", what()),
    };
    if !known(lo)? {
        return Err(range("below the search interval"));
    }
    if known(hi)? {
        return Err(range("above the search interval"));
    }
    let two = T::lit(2.0);
    for _ in 0..MAX_ITER {
        if hi - lo <= tol {
            return Ok((lo + hi) / two);
        }
        let mid = (lo + hi) / two;
        if known(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence(MAX_ITER))
}

/// `sup{λ : ((1−λ)X₀, λX₁) ≺ X}` to within `tol`.
pub fn construct_entropy<T: Real, O: AccessOracle<T, StateRef<T>> + ?Sized>(
    oracle: &O,
    x0: &StateRef<T>,
    x1: &StateRef<T>,
    x: &StateRef<T>,
    tol: T,
) -> Result<T> {
    check_reference(oracle, x0, x1)?;
    let xc = CompoundState::single(x.clone());
    bisect(tol, |lam| strip_below(oracle, x0, x1, &xc, lam), &|| format!("λ({x})"))
}

/// `sup{λ : (X_Γ, λZ₁) ≺ (X, λZ₀)}`, negative `λ` moving `|λ|Z₀` to the left
/// and `|λ|Z₁` to the right. `x_ref` is the zero point of `x`'s composition.
pub fn construct_calibrated_entropy<T: Real, O: AccessOracle<T, StateRef<T>> + ?Sized>(
    oracle: &O,
    x_ref: &Compound<T>,
    z0: &StateRef<T>,
    z1: &StateRef<T>,
    x: &Compound<T>,
    tol: T,
) -> Result<T> {
    check_reference(oracle, z0, z1)?;
    let pred = |lam: T| {
        let (l, r) = if lam >= T::zero() {
            (x_ref.with_part(lam, z1.clone()), x.with_part(lam, z0.clone()))
        } else {
            (x_ref.with_part(-lam, z0.clone()), x.with_part(-lam, z1.clone()))
        };
        oracle.compare(&l.expect("nonnegative"), &r.expect("nonnegative"))
    };
    bisect(tol, pred, &|| format!("calibrated λ({x})"))
}

/// Reference change of a strip chart: returns `(μ, μ′)` with
/// `μ = λλ₁/D`, `μ′ = (λ(1−λ₀)+λ₀λ₁)/D`, `D = 1−λ₀+λ₀λ₁`.
pub fn rebase<T: Real>(lambda: T, lambda0: T, lambda1: T) -> Result<(T, T)> {
    let one = T::one();
    let d = one - lambda0 + lambda0 * lambda1;
    if d.abs() <= T::epsilon() * T::lit(16.0) {
        return Err(Error::DegenerateReference(format!(
            "1 − λ₀ + λ₀λ₁ = {d} for λ₀ = {lambda0}, λ₁ = {lambda1}"
        )));
    }
    Ok((lambda * lambda1 / d, (lambda * (one - lambda0) + lambda0 * lambda1) / d))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFit<T> {
    pub a: T,
    pub b: T,
    /// Largest absolute deviation `|S_b − (a·S_a + b)|` over the sample.
    pub residual: T,
}

/// Least-squares `S_b ≈ a·S_a + b` over paired values, requiring `a > 0`.
pub fn affine_fit<T: Real>(sa: &[T], sb: &[T]) -> Result<AffineFit<T>> {
    if sa.len() != sb.len() || sa.len() < 2 {
        return Err(Error::Fit(format!("need ≥ 2 paired values, got {} and {}", sa.len(), sb.len())));
    }
    let n = T::from_usize(sa.len()).unwrap();
    let ma = sa.iter().copied().sum::<T>() / n;
    let mb = sb.iter().copied().sum::<T>() / n;
    let (mut saa, mut sab, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in sa.iter().zip(sb) {
        saa = saa + (a - ma) * (a - ma);
        sab = sab + (a - ma) * (b - mb);
        sbb = sbb + (b - mb) * (b - mb);
    }
    if saa <= T::zero() || sbb <= T::zero() {
        return Err(Error::Fit("constant input".into()));
    }
    let a = sab / saa;
    if !(a > T::zero()) {
        return Err(Error::Fit(format!("slope {a} is not positive")));
    }
    let b = mb - a * ma;
    let residual = sa
        .iter()
        .zip(sb)
        .map(|(&x, &y)| (y - (a * x + b)).abs())
        .fold(T::zero(), T::max);
    Ok(AffineFit { a, b, residual })
}

/// Strip entropy on a set of states of one space.
#[derive(Debug, Clone)]
pub struct EntropyChart<T> {
    pub space: SpaceId,
    pub x0: StateRef<T>,
    pub x1: StateRef<T>,
    pub values: Vec<(StateRef<T>, T)>,
    pub tolerance: T,
    /// The reference pair is strictly ordered only by a margin close to the
    /// oracle's own comparison tolerance.
    pub near_tie: bool,
}

impl<T: Real> EntropyChart<T> {
    /// Values are returned in the order of `points`.
    pub fn build<O: AccessOracle<T, StateRef<T>> + ?Sized>(
        oracle: &O,
        x0: &StateRef<T>,
        x1: &StateRef<T>,
        points: &[StateRef<T>],
        tol: T,
    ) -> Result<Self> {
        check_reference(oracle, x0, x1)?;
        let l0 = construct_entropy(oracle, x0, x1, x0, tol)?;
        let l1 = construct_entropy(oracle, x0, x1, x1, tol)?;
        let slack = T::lit(NEAR_TIE) + tol;
        let near_tie = l0.abs() > slack || (l1 - T::one()).abs() > slack;
        let values = points
            .par_iter()
            .map(|p| construct_entropy(oracle, x0, x1, p, tol).map(|l| (p.clone(), l)))
            .collect::<Result<Vec<_>>>()?;
        Ok(EntropyChart {
            space: x0.space.clone(),
            x0: x0.clone(),
            x1: x1.clone(),
            values,
            tolerance: tol,
            near_tie,
        })
    }

    pub fn get(&self, x: &StateRef<T>) -> Option<T> {
        self.values.iter().find(|(p, _)| p == x).map(|(_, v)| *v)
    }

    pub fn lambdas(&self) -> Vec<T> {
        self.values.iter().map(|(_, v)| *v).collect()
    }
}

fn pair_outcome<T: Real>(fwd: Comparability, bwd: Comparability, sa: T, sb: T, tol: T) -> Option<Option<bool>> {
    match (fwd, bwd) {
        (Comparability::Precedes, _) => Some(Some(sa <= sb + tol)),
        (Comparability::NotPrecedes, Comparability::Precedes) => Some(Some(sa + tol >= sb)),
        (Comparability::NotPrecedes, Comparability::NotPrecedes) => None,
        _ => Some(None),
    }
}

/// Checks an entropy (extended additively to compounds) against the oracle:
/// monotonicity on pairs, additivity on composed pairs, extensivity under
/// scaling and strict increase along `≺≺`.
pub fn verify_entropy_principle<T, O, F>(oracle: &O, entropy: F, sample: &[StateRef<T>], tol: T) -> Report
where
    T: Real,
    O: AccessOracle<T, StateRef<T>> + ?Sized,
    F: Fn(&StateRef<T>) -> Option<T> + Sync,
{
    let value = |c: &Compound<T>| -> Option<T> {
        c.parts().iter().map(|(k, s)| entropy(s).map(|e| *k * e)).sum()
    };
    let units: Vec<Compound<T>> = sample.iter().cloned().map(CompoundState::single).collect();
    let n = units.len();
    let mut mono = Tally::new("monotonicity");
    let mut strict = Tally::new("strict-increase");
    let mut add = Tally::new("additivity");
    let mut ext = Tally::new("extensivity");

    let record = |tally: &mut Tally, a: &Compound<T>, b: &Compound<T>| {
        let (Some(sa), Some(sb)) = (value(a), value(b)) else {
            tally.record(None, || format!("no entropy for {a} or {b}"));
            return;
        };
        let fwd = oracle.compare(a, b);
        let bwd = oracle.compare(b, a);
        if let Some(o) = pair_outcome(fwd, bwd, sa, sb, tol) {
            tally.record(o, || format!("{a} vs {b}: S = {sa}, {sb} disagrees with ≺"));
        }
    };

    for i in 0..n {
        for j in 0..n {
            let (a, b) = (&units[i], &units[j]);
            record(&mut mono, a, b);
            if oracle.relation(a, b) == Relation::StrictlyPrecedes {
                let (sa, sb) = (value(a), value(b));
                strict.record(sa.zip(sb).map(|(x, y)| x < y), || {
                    format!("{a} ≺≺ {b} but S = {sa:?} ≥ {sb:?}")
                });
            }
        }
    }
    let budget = 64.min(n);
    for i in 0..budget {
        for j in 0..budget {
            let (a, b) = (&units[i], &units[j]);
            let c = &units[(i + j + 1) % n];
            let d = &units[(2 * i + j + 3) % n];
            record(&mut add, &a.compose(c), &b.compose(d));
            for t in [0.5, 2.0, 3.0] {
                let t = T::lit(t);
                record(&mut ext, &a.scale(t).unwrap(), &b.scale(t).unwrap());
            }
        }
    }
    [mono, add, ext, strict].into_iter().map(Tally::finish).collect()
}

/// `λ ↦ [((1−λ)X₀, λX₁) ≺ X]` is downward closed on the given `λ`s, and
/// strip states are ordered by `λ`.
pub fn check_strip_monotone<T: Real, O: AccessOracle<T, StateRef<T>> + ?Sized>(
    oracle: &O,
    x0: &StateRef<T>,
    x1: &StateRef<T>,
    x: &StateRef<T>,
    lambdas: &[T],
) -> CheckResult {
    let mut lams = lambdas.to_vec();
    lams.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let xc = CompoundState::single(x.clone());
    let preds: Vec<Comparability> = lams.iter().map(|l| strip_below(oracle, x0, x1, &xc, *l)).collect();
    let mut t = Tally::new("strip-monotone");
    for i in 0..lams.len() {
        for j in i + 1..lams.len() {
            let o = match (preds[i], preds[j]) {
                (Comparability::Unknown, _) | (_, Comparability::Unknown) => None,
                (Comparability::NotPrecedes, Comparability::Precedes) => Some(false),
                _ => Some(true),
            };
            t.record(o, || format!("strip ≺ {x} at λ = {} but not at λ = {}", lams[j], lams[i]));
        }
    }
    let strip = |l: T| -> Option<Compound<T>> {
        (l >= T::zero() && l <= T::one())
            .then(|| parts(vec![(T::one() - l, x0.clone()), (l, x1.clone())]))
    };
    for i in 0..lams.len() {
        for j in 0..lams.len() {
            if let (Some(a), Some(b)) = (strip(lams[i]), strip(lams[j])) {
                let o = oracle.compare(&a, &b).known().map(|p| p == (lams[i] <= lams[j]));
                t.record(o, || format!("strip order at λ = {}, {} disagrees with λ ≤ λ′", lams[i], lams[j]));
            }
        }
    }
    t.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::AnalyticOracle;
    use crate::report::Verdict;

    fn gas() -> AnalyticOracle<f64> {
        AnalyticOracle::new().with_space("g", |c: &[f64]| 1.5 * c[0].ln() + c[1].ln())
    }

    fn st(u: f64, v: f64) -> StateRef<f64> {
        StateRef::new("g", vec![u, v])
    }

    #[test]
    fn normalization() {
        let (x0, x1) = (st(1.0, 1.0), st(1.0f64.exp(), 1.0));
        assert!(construct_entropy(&gas(), &x0, &x1, &x0, 1e-12).unwrap().abs() < 1e-11);
        assert!((construct_entropy(&gas(), &x0, &x1, &x1, 1e-12).unwrap() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn reversed_reference_is_rejected() {
        let (x0, x1) = (st(1.0, 1.0), st(2.0, 1.0));
        assert!(matches!(construct_entropy(&gas(), &x1, &x0, &x0, 1e-9), Err(Error::Reference(_))));
        assert!(matches!(construct_entropy(&gas(), &x0, &x0, &x0, 1e-9), Err(Error::Reference(_))));
    }

    #[test]
    fn out_of_range_is_reported() {
        let (x0, x1) = (st(1.0, 1.0), st(1.1, 1.0));
        let far = st(100.0, 100.0);
        assert!(matches!(construct_entropy(&gas(), &x0, &x1, &far, 1e-9), Err(Error::Range { .. })));
    }

    #[test]
    fn bad_tolerance() {
        let (x0, x1) = (st(1.0, 1.0), st(2.0, 1.0));
        assert!(construct_entropy(&gas(), &x0, &x1, &x0, 0.0).is_err());
    }

    #[test]
    fn rebase_identity_and_degenerate() {
        assert_eq!(rebase(0.3, 0.0, 1.0).unwrap().0, 0.3);
        assert!(matches!(rebase(0.3, 1.0, 0.0), Err(Error::DegenerateReference(_))));
    }

    #[test]
    fn affine_fit_exact_and_degenerate() {
        let a = [0.0, 1.0, 2.5, 4.0];
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x + 3.0).collect();
        let f = affine_fit(&a, &b).unwrap();
        assert!((f.a - 2.0).abs() < 1e-14 && (f.b - 3.0).abs() < 1e-14 && f.residual < 1e-14);
        assert!(affine_fit(&a, &[1.0; 4]).is_err());
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!(affine_fit(&a, &neg).is_err());
    }

    #[test]
    fn negated_and_constant_entropies_fail() {
        let o = gas();
        let sample: Vec<_> = (1..6).map(|i| st(i as f64, 1.0 + 0.5 * i as f64)).collect();
        let good = verify_entropy_principle(&o, |s| o.entropy(s), &sample, 1e-9);
        assert!(good.all_pass(), "{good:?}");
        let neg = verify_entropy_principle(&o, |s| o.entropy(s).map(|v| -v), &sample, 1e-9);
        assert_eq!(neg.verdict("monotonicity"), Some(Verdict::Fail));
        let flat = verify_entropy_principle(&o, |_| Some(0.0), &sample, 1e-9);
        assert_eq!(flat.verdict("strict-increase"), Some(Verdict::Fail));
    }

    #[test]
    fn near_tie_flag() {
        let o = gas().with_tolerance(1e-6);
        let x0 = st(1.0, 1.0);
        let close = st(1.0 + 1e-7, 1.0);
        let chart = EntropyChart::build(&o, &x0, &close, &[x0.clone()], 1e-9);
        // gap below tolerance: not even strictly ordered
        assert!(chart.is_err());
        let x1 = st((1e-4f64 / 1.5).exp(), 1.0);
        let chart = EntropyChart::build(&o, &x0, &x1, &[x0.clone()], 1e-9).unwrap();
        assert!(chart.near_tie);
        let far = st(3.0, 1.0);
        assert!(!EntropyChart::build(&o, &x0, &far, &[], 1e-9).unwrap().near_tie);
    }

    #[test]
    fn strip_predicate_is_monotone() {
        let (x0, x1) = (st(1.0, 1.0), st(2.0, 2.0));
        let lams: Vec<f64> = (-4..=12).map(|k| k as f64 * 0.125).collect();
        assert!(check_strip_monotone(&gas(), &x0, &x1, &st(1.5, 1.2), &lams).is_pass());
    }
}
