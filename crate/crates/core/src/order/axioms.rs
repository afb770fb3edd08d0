use std::fmt::Display;

use rayon::prelude::*;

use super::finite::{Rational, ScaleGrid};
use super::{AccessOracle, Comparability};
use crate::report::{CheckResult, Report, Tally};
use crate::scalar::Real;
use crate::state::{CompoundState, Scale};

/// Scales and limits used by the sampled axiom checks.
#[derive(Debug, Clone)]
pub struct AxiomConfig<K> {
    /// `t` values for A4.
    pub scales: Vec<K>,
    /// `λ ∈ (0,1)` values for A5.
    pub splits: Vec<K>,
    /// Decreasing `ε` sequence for A6.
    pub epsilons: Vec<K>,
    /// Further `ε` tried before an A6 instance is called a violation
    /// (only on scale-continuous backends).
    pub refinement: Vec<K>,
    /// Cap on instances per check; larger families are strided.
    pub max_instances: usize,
}

impl<T: Real> AxiomConfig<T> {
    pub fn continuous() -> Self {
        let pow = |k: i32| T::lit(2f64.powi(-k));
        AxiomConfig {
            scales: [0.25, 0.5, 2.0, 3.0].map(T::lit).to_vec(),
            splits: [0.25, 0.5, 0.75].map(T::lit).to_vec(),
            epsilons: (1..=8).map(pow).collect(),
            refinement: (9..=60).map(pow).collect(),
            max_instances: 200_000,
        }
    }
}

impl AxiomConfig<Rational> {
    /// Grid scales (A4), grid splits with both halves on the grid (A5) and
    /// the dyadic grid values as `ε`.
    pub fn on_grid(grid: &ScaleGrid) -> Self {
        let one = Rational::from_integer(1);
        AxiomConfig {
            scales: grid.values().iter().copied().filter(|t| *t != one).collect(),
            splits: grid
                .values()
                .iter()
                .copied()
                .filter(|l| *l < one && grid.contains(&(one - *l)))
                .collect(),
            epsilons: grid.dyadic_sequence(8),
            refinement: Vec::new(),
            max_instances: 200_000,
        }
    }
}

type Compound<K, S> = CompoundState<K, S>;

fn matrix<K, S, O>(oracle: &O, sample: &[Compound<K, S>]) -> Vec<Vec<Comparability>>
where
    K: Scale + Send + Sync,
    S: Clone + PartialOrd + Send + Sync,
    O: AccessOracle<K, S> + ?Sized,
{
    sample
        .par_iter()
        .map(|a| sample.iter().map(|b| oracle.compare(a, b)).collect())
        .collect()
}

fn stride(total: usize, cap: usize) -> usize {
    total.div_ceil(cap.max(1)).max(1)
}

/// Sampled checks of A1–A6. Unknown answers make a check Inconclusive,
/// never a pass.
pub fn check_axioms<K, S, O>(oracle: &O, sample: &[Compound<K, S>], config: &AxiomConfig<K>) -> Report
where
    K: Scale + Copy + Display + Send + Sync,
    S: Clone + PartialOrd + Display + Send + Sync,
    O: AccessOracle<K, S> + ?Sized,
{
    let n = sample.len();
    let m = matrix(oracle, sample);
    let mut report = Report::new();

    let mut a1 = Tally::new("A1");
    for (i, a) in sample.iter().enumerate() {
        a1.record(m[i][i].known(), || format!("{a} not ≺ itself"));
    }
    report.push(a1.finish());

    let mut a2 = Tally::new("A2");
    for i in 0..n {
        for j in 0..n {
            if m[i][j] != Comparability::Precedes {
                continue;
            }
            for k in 0..n {
                if m[j][k] == Comparability::Precedes {
                    a2.record(m[i][k].known(), || {
                        format!("{} ≺ {} ≺ {} but not {} ≺ {}", sample[i], sample[j], sample[k], sample[i], sample[k])
                    });
                }
            }
        }
    }
    report.push(a2.finish());

    let facts: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| m[i][j] == Comparability::Precedes)
        .collect();

    let step = stride(facts.len() * facts.len(), config.max_instances);
    let pairs: Vec<usize> = (0..facts.len() * facts.len()).step_by(step).collect();
    let a3: Vec<(Option<bool>, String)> = pairs
        .par_iter()
        .map(|&p| {
            let (a, b) = facts[p / facts.len()];
            let (c, d) = facts[p % facts.len()];
            let lhs = sample[a].compose(&sample[c]);
            let rhs = sample[b].compose(&sample[d]);
            (oracle.compare(&lhs, &rhs).known(), format!("{lhs} ⊀ {rhs}"))
        })
        .collect();
    report.push(tally_of("A3", a3));

    let a4: Vec<(Option<bool>, String)> = facts
        .par_iter()
        .flat_map_iter(|&(a, b)| {
            config.scales.iter().filter_map(move |t| {
                let ta = sample[a].scale(*t).ok()?;
                let tb = sample[b].scale(*t).ok()?;
                Some((oracle.compare(&ta, &tb).known(), format!("{ta} ⊀ {tb} (t = {t})")))
            })
        })
        .collect();
    report.push(tally_of("A4", a4));

    let a5: Vec<(Option<bool>, String)> = sample
        .par_iter()
        .flat_map_iter(|a| {
            config.splits.iter().filter_map(move |l| {
                let rest = K::one() - *l;
                let split = a.scale(rest).ok()?.compose(&a.scale(*l).ok()?);
                let fwd = oracle.compare(a, &split).known();
                let bwd = oracle.compare(&split, a).known();
                let outcome = match (fwd, bwd) {
                    (Some(x), Some(y)) => Some(x && y),
                    (Some(false), _) | (_, Some(false)) => Some(false),
                    _ => None,
                };
                Some((outcome, format!("{a} not ∼ {split}")))
            })
        })
        .collect();
    report.push(tally_of("A5", a5));

    report.push(stability(oracle, sample, &m, config));
    report
}

fn tally_of(name: &str, outcomes: Vec<(Option<bool>, String)>) -> CheckResult {
    let mut t = Tally::new(name);
    for (o, w) in outcomes {
        t.record(o, || w);
    }
    t.finish()
}

/// Hypothesis `(X, εZ₀) ≺ (Y, εZ₁)` for every `ε` in `eps`.
fn stable_hypothesis<K, S, O>(
    oracle: &O,
    x: &Compound<K, S>,
    y: &Compound<K, S>,
    z0: &S,
    z1: &S,
    eps: &[K],
) -> Option<bool>
where
    K: Scale + Copy,
    S: Clone + PartialOrd,
    O: AccessOracle<K, S> + ?Sized,
{
    let mut unknown = false;
    for e in eps {
        let (Ok(lhs), Ok(rhs)) = (x.with_part(*e, z0.clone()), y.with_part(*e, z1.clone())) else {
            return None;
        };
        match oracle.compare(&lhs, &rhs) {
            Comparability::Precedes => {}
            Comparability::NotPrecedes => return Some(false),
            Comparability::Unknown => unknown = true,
        }
    }
    if unknown {
        None
    } else {
        Some(true)
    }
}

fn stability<K, S, O>(
    oracle: &O,
    sample: &[Compound<K, S>],
    m: &[Vec<Comparability>],
    config: &AxiomConfig<K>,
) -> CheckResult
where
    K: Scale + Copy + Display + Send + Sync,
    S: Clone + PartialOrd + Display + Send + Sync,
    O: AccessOracle<K, S> + ?Sized,
{
    if config.epsilons.is_empty() {
        return CheckResult::pass("A6", 0).with_note("vacuous: no ε configured");
    }
    let mut zs: Vec<S> = Vec::new();
    for c in sample {
        for (_, s) in c.parts() {
            if zs.len() < 3 && !zs.iter().any(|z| z == s) {
                zs.push(s.clone());
            }
        }
    }
    let n = sample.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| m[i][j] == Comparability::NotPrecedes)
        .collect();
    let per_pair = zs.len() * zs.len();
    let step = stride(pairs.len() * per_pair, config.max_instances / config.epsilons.len().max(1));
    let continuous = oracle.scale_continuous();
    let outcomes: Vec<(Option<bool>, bool, String)> = (0..pairs.len() * per_pair)
        .into_par_iter()
        .step_by(step)
        .map(|p| {
            let (x, y) = pairs[p / per_pair];
            let z0 = &zs[(p % per_pair) / zs.len()];
            let z1 = &zs[p % zs.len()];
            let (x, y) = (&sample[x], &sample[y]);
            let witness = format!("({x}, εZ₀={z0}) ≺ ({y}, εZ₁={z1}) for all ε but {x} ⊀ {y}");
            match stable_hypothesis(oracle, x, y, z0, z1, &config.epsilons) {
                Some(true) if continuous && !config.refinement.is_empty() => {
                    match stable_hypothesis(oracle, x, y, z0, z1, &config.refinement) {
                        Some(true) => (Some(false), true, witness),
                        Some(false) => (Some(true), true, witness),
                        None => (None, true, witness),
                    }
                }
                Some(h) => (Some(!h), false, witness),
                None => (None, false, witness),
            }
        })
        .collect();
    let refined = outcomes.iter().filter(|o| o.1).count();
    let depth = config.epsilons.len();
    let mut t = Tally::new("A6");
    for (o, _, w) in outcomes {
        t.record(o, || w);
    }
    let mut r = t.finish();
    let mut note = format!("stable to grid depth {depth}; {}", r.note);
    if refined > 0 {
        note.push_str(&format!(", {refined} refined below depth {depth}"));
    }
    r.note = note;
    r
}

/// `(X,Z) ≺ (Y,Z) ⇒ X ≺ Y` on the given triples `(X, Y, Z)`.
pub fn check_cancellation_on<K, S, O>(oracle: &O, triples: &[(Compound<K, S>, Compound<K, S>, Compound<K, S>)]) -> CheckResult
where
    K: Scale + Send + Sync + Display,
    S: Clone + PartialOrd + Display + Send + Sync,
    O: AccessOracle<K, S> + ?Sized,
{
    let outcomes: Vec<Option<(Option<bool>, String)>> = triples
        .par_iter()
        .map(|(x, y, z)| {
            let hyp = oracle.compare(&x.compose(z), &y.compose(z));
            let w = || format!("({x}, {z}) ≺ ({y}, {z}) but {x} ⊀ {y}");
            match hyp {
                Comparability::Precedes => Some((oracle.compare(x, y).known(), w())),
                Comparability::NotPrecedes => None,
                Comparability::Unknown => Some((None, w())),
            }
        })
        .collect();
    let mut t = Tally::new("cancellation");
    for (o, w) in outcomes.into_iter().flatten() {
        t.record(o, || w);
    }
    t.finish()
}

/// Cancellation law over sampled triples of `sample` (strided to the cap).
pub fn check_cancellation<K, S, O>(oracle: &O, sample: &[Compound<K, S>], max_instances: usize) -> CheckResult
where
    K: Scale + Send + Sync + Display,
    S: Clone + PartialOrd + Display + Send + Sync,
    O: AccessOracle<K, S> + ?Sized,
{
    let n = sample.len();
    let total = n * n * n;
    let triples: Vec<_> = (0..total)
        .step_by(stride(total, max_instances))
        .map(|p| {
            (
                sample[p / (n * n)].clone(),
                sample[(p / n) % n].clone(),
                sample[p % n].clone(),
            )
        })
        .collect();
    check_cancellation_on(oracle, &triples)
}

/// Every pair of the sample is comparable.
pub fn check_ch<K, S, O>(oracle: &O, sample: &[Compound<K, S>]) -> CheckResult
where
    K: Scale + Send + Sync + Display,
    S: Clone + PartialOrd + Display + Send + Sync,
    O: AccessOracle<K, S> + ?Sized,
{
    let m = matrix(oracle, sample);
    let mut t = Tally::new("CH");
    for i in 0..sample.len() {
        for j in i + 1..sample.len() {
            let outcome = match (m[i][j], m[j][i]) {
                (Comparability::Precedes, _) | (_, Comparability::Precedes) => Some(true),
                (Comparability::NotPrecedes, Comparability::NotPrecedes) => Some(false),
                _ => None,
            };
            t.record(outcome, || format!("{} and {} incomparable", sample[i], sample[j]));
        }
    }
    t.finish()
}

#[derive(Debug, Clone)]
pub struct Lemma1Report {
    /// Every sampled `X` has some `Y` with `X ≺≺ Y`.
    pub a: CheckResult,
    /// Every sampled neighborhood of every `X` has some `Z` with `X ⊀ Z`.
    pub b: CheckResult,
    /// `(a) ⇒ (b)`.
    pub implication: CheckResult,
}

impl Lemma1Report {
    pub fn into_report(self) -> Report {
        [self.a, self.b, self.implication].into_iter().collect()
    }
}

/// `points[i]` comes with the sampled neighborhood `neighborhoods[i]`.
pub fn check_lemma1<K, S, O>(oracle: &O, points: &[Compound<K, S>], neighborhoods: &[Vec<Compound<K, S>>]) -> Lemma1Report
where
    K: Scale + Send + Sync + Display,
    S: Clone + PartialOrd + Display + Send + Sync,
    O: AccessOracle<K, S> + ?Sized,
{
    let candidates: Vec<&Compound<K, S>> = points.iter().chain(neighborhoods.iter().flatten()).collect();
    let mut ta = Tally::new("lemma1.a");
    let mut tb = Tally::new("lemma1.b");
    for (i, x) in points.iter().enumerate() {
        let mut unknown = false;
        let mut found = false;
        for y in &candidates {
            match (oracle.compare(x, y), oracle.compare(y, x)) {
                (Comparability::Precedes, Comparability::NotPrecedes) => {
                    found = true;
                    break;
                }
                (Comparability::Unknown, _) | (_, Comparability::Unknown) => unknown = true,
                _ => {}
            }
        }
        ta.record(if found { Some(true) } else if unknown { None } else { Some(false) }, || {
            format!("no sampled state strictly above {x}")
        });

        let hood = neighborhoods.get(i).map(Vec::as_slice).unwrap_or(&[]);
        let mut unknown = false;
        let mut found = false;
        for z in hood {
            match oracle.compare(x, z) {
                Comparability::NotPrecedes => {
                    found = true;
                    break;
                }
                Comparability::Unknown => unknown = true,
                Comparability::Precedes => {}
            }
        }
        tb.record(if found { Some(true) } else if unknown { None } else { Some(false) }, || {
            format!("every sampled neighbor of {x} is accessible from it")
        });
    }
    let a = ta.finish();
    let b = tb.finish();
    let implication = if a.is_fail() || b.is_pass() {
        CheckResult::pass("lemma1", points.len()).with_note(if a.is_fail() { "vacuous: (a) fails" } else { "" })
    } else if b.is_fail() {
        CheckResult::fail("lemma1", b.witness.clone().unwrap_or_default())
    } else {
        CheckResult {
            verdict: crate::report::Verdict::Inconclusive,
            ..CheckResult::pass("lemma1", points.len())
        }
    };
    Lemma1Report { a, b, implication }
}
