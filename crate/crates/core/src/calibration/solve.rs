use std::collections::BTreeMap;

use super::network::{NodeKind, ReactionNetwork};
use super::tables::{bellman_ford, certificate, extract_cycle, FTable};
use crate::error::{Error, NegativeCycle, Result};
use crate::scalar::Real;
use crate::simple::{SimpleSystem, StatePoint};
use crate::state::SpaceId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstantStatus {
    /// Element space, pinned to zero.
    Pinned,
    Unique,
    /// Chosen at the midpoint of a bounded interval.
    Gap,
    /// Only one side bounded; the finite end is taken.
    HalfBounded,
    /// Unconstrained; set to zero.
    Free,
    /// Follows from the factors by linearity.
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Feasible,
    UnboundedDegreesOfFreedom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSolution<T> {
    pub b: BTreeMap<SpaceId, T>,
    /// Feasible interval for each primitive constant before any choice is made.
    pub intervals: BTreeMap<SpaceId, (T, T)>,
    pub node_status: BTreeMap<SpaceId, ConstantStatus>,
    /// `(−F(Γ′,Γ), F(Γ,Γ′))` on every pair with a finite side.
    pub gaps: BTreeMap<(SpaceId, SpaceId), (T, T)>,
    pub status: SolveStatus,
}

type Form<T> = BTreeMap<SpaceId, T>;

/// `B(Γ)` as a combination of the non-element primitive constants.
fn linear_form<T: Real>(network: &ReactionNetwork<T>, id: &SpaceId) -> Form<T> {
    let mut out = Form::new();
    let Some(node) = network.node(id) else { return out };
    match &node.kind {
        NodeKind::Element => {}
        NodeKind::Primitive => {
            out.insert(id.clone(), T::one());
        }
        NodeKind::Product(factors) => {
            for (t, f) in factors {
                for (k, c) in linear_form(network, f) {
                    let e = out.entry(k).or_insert(T::zero());
                    *e = *e + *t * c;
                }
            }
        }
    }
    out
}

/// Solves `B(Γ) − B(Γ′) ≤ F(Γ,Γ′)` for the constants, with element spaces
/// pinned to zero and products expanded by linearity.
///
/// Each free primitive constant is fixed in id order at the midpoint of its
/// remaining interval (the finite end if half-bounded, zero if unbounded),
/// so the chosen values are jointly feasible.
pub fn solve_constants<T: Real>(network: &ReactionNetwork<T>, table: &FTable<T>) -> Result<CalibrationSolution<T>> {
    let vars: Vec<SpaceId> = network
        .nodes()
        .filter(|n| n.kind == NodeKind::Primitive)
        .map(|n| n.id.clone())
        .collect();
    let z = vars.len();
    let n = z + 1;
    let index: BTreeMap<&SpaceId, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let name = |i: usize| if i == z { "0".to_string() } else { vars[i].to_string() };
    let tiny = T::lit(1e-12);

    // x_b − x_a ≤ w is the edge a → b
    let mut edges: Vec<(usize, usize, T)> = Vec::new();
    for (i, a) in table.ids.iter().enumerate() {
        for (j, b) in table.ids.iter().enumerate() {
            let w = table.f[i][j];
            if i == j || !w.is_finite() {
                continue;
            }
            let mut form = linear_form(network, a);
            for (k, c) in linear_form(network, b) {
                let e = form.entry(k).or_insert(T::zero());
                *e = *e - c;
            }
            form.retain(|_, c| c.abs() > tiny);
            let terms: Vec<(usize, T)> = form.iter().map(|(k, c)| (index[k], *c)).collect();
            match terms.as_slice() {
                [] => {
                    if w < -T::lit(1e-12) * T::one().max(w.abs()) {
                        return Err(Error::NegativeCycle(NegativeCycle {
                            nodes: vec![a.to_string(), b.to_string()],
                            edges: vec![(a.to_string(), b.to_string(), w.to_f64_lossy())],
                            weight: w.to_f64_lossy(),
                        }));
                    }
                }
                [(k, c)] if *c > T::zero() => edges.push((z, *k, w / *c)),
                [(k, c)] => edges.push((*k, z, w / -*c)),
                [(p, cp), (q, cq)] if (*cp + *cq).abs() <= tiny => {
                    let (pos, neg, c) = if *cp > T::zero() { (*p, *q, *cp) } else { (*q, *p, *cq) };
                    edges.push((neg, pos, w / c));
                }
                _ => {
                    return Err(Error::UnsupportedConstraint(format!(
                        "B({a}) − B({b}) ≤ {w} expands to {:?}",
                        form.iter().map(|(k, c)| format!("{c}·B({k})")).collect::<Vec<_>>()
                    )))
                }
            }
        }
    }

    // feasibility from a virtual source joined to every node
    let mut with_source = edges.clone();
    with_source.extend((0..n).map(|i| (n, i, T::zero())));
    let sp = bellman_ford(n + 1, &with_source, n);
    if let Some(t) = sp.tainted.iter().position(|x| *x) {
        let cycle = extract_cycle(&with_source, &sp.pred, t);
        return Err(Error::NegativeCycle(certificate(&with_source, &cycle, name)));
    }

    let mut d = vec![vec![T::infinity(); n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = T::zero();
    }
    for &(a, b, w) in &edges {
        d[a][b] = d[a][b].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k] == T::infinity() {
                continue;
            }
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }

    let mut b = BTreeMap::new();
    let mut intervals = BTreeMap::new();
    let mut node_status = BTreeMap::new();
    let mut unbounded = false;
    for (k, id) in vars.iter().enumerate() {
        intervals.insert(id.clone(), (-d[k][z], d[z][k]));
    }
    for (k, id) in vars.iter().enumerate() {
        let (lo, hi) = (-d[k][z], d[z][k]);
        let (v, status) = match (lo.is_finite(), hi.is_finite()) {
            (true, true) if (hi - lo).abs() <= tiny * T::one().max(hi.abs()) => (hi, ConstantStatus::Unique),
            (true, true) => ((lo + hi) / T::lit(2.0), ConstantStatus::Gap),
            (true, false) => (lo, ConstantStatus::HalfBounded),
            (false, true) => (hi, ConstantStatus::HalfBounded),
            (false, false) => (T::zero(), ConstantStatus::Free),
        };
        unbounded |= matches!(status, ConstantStatus::HalfBounded | ConstantStatus::Free);
        // add x_k − 0 ≤ v and 0 − x_k ≤ −v
        for i in 0..n {
            for j in 0..n {
                let through = (d[i][z] + v + d[k][j]).min(d[i][k] - v + d[z][j]);
                if through < d[i][j] {
                    d[i][j] = through;
                }
            }
        }
        b.insert(id.clone(), v);
        node_status.insert(id.clone(), status);
    }
    for node in network.nodes() {
        match &node.kind {
            NodeKind::Element => {
                b.insert(node.id.clone(), T::zero());
                intervals.insert(node.id.clone(), (T::zero(), T::zero()));
                node_status.insert(node.id.clone(), ConstantStatus::Pinned);
            }
            NodeKind::Product(_) => {
                let v = linear_form(network, &node.id)
                    .iter()
                    .fold(T::zero(), |acc, (k, c)| acc + *c * b[k]);
                b.insert(node.id.clone(), v);
                node_status.insert(node.id.clone(), ConstantStatus::Derived);
            }
            NodeKind::Primitive => {}
        }
    }

    let mut gaps = BTreeMap::new();
    for (i, a) in table.ids.iter().enumerate() {
        for (j, c) in table.ids.iter().enumerate() {
            if i != j && (table.f[i][j].is_finite() || table.f[j][i].is_finite()) {
                gaps.insert((a.clone(), c.clone()), (-table.f[j][i], table.f[i][j]));
            }
        }
    }
    Ok(CalibrationSolution {
        b,
        intervals,
        node_status,
        gaps,
        status: if unbounded { SolveStatus::UnboundedDegreesOfFreedom } else { SolveStatus::Feasible },
    })
}

/// `F(Γ, Λ(Γ))`, the constant of `Γ` relative to its element basis.
pub fn element_basis_constant<T: Real>(network: &ReactionNetwork<T>, table: &FTable<T>, g: &SpaceId) -> Result<T> {
    let basis = network
        .element_basis(g)
        .ok_or_else(|| Error::Config(format!("no element-basis product registered for {g}")))?;
    table
        .f(g, basis)
        .ok_or_else(|| Error::Config(format!("pair ({g},{basis}) not in table")))
}

/// Calibrator states: `S₁(X₁) − S₁(X₀) = S₂(Y₁) − S₂(Y₀) = δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibrators<T> {
    pub x0: StatePoint<T>,
    pub x1: StatePoint<T>,
    pub y0: StatePoint<T>,
    pub y1: StatePoint<T>,
    pub delta1: T,
    pub delta2: T,
    /// `δ = 0`: both pairs collapse to a single state.
    pub degenerate: bool,
}

/// Root search along an energy ray at the centre work coordinates, starting
/// a tenth of the way into the energy window (from the top when `δ < 0`).
fn ray<T: Real>(model: &dyn SimpleSystem<T>, delta: T, tol: T) -> Result<(StatePoint<T>, StatePoint<T>, T)> {
    let dom = model.domain();
    let v: Vec<T> = dom.v.iter().map(|(a, b)| (*a + *b) / T::lit(2.0)).collect();
    let (lo, hi) = model.energy_bounds(&v);
    let m = T::lit(2e-6) * (hi - lo);
    let (lo, hi) = (lo + m, hi - m);
    let tenth = T::lit(0.1) * (hi - lo);
    let up = delta >= T::zero();
    let u0 = if up { lo + tenth } else { hi - tenth };
    let x0 = StatePoint::new(u0, v.clone());
    let s = |u: T| {
        model
            .entropy(&StatePoint::new(u, v.clone()))
            .ok_or_else(|| Error::Model(format!("{} has no entropy at U = {u}", model.id())))
    };
    let s0 = s(u0)?;
    if delta.is_zero() {
        return Ok((x0.clone(), x0, T::zero()));
    }
    let end = if up { hi } else { lo };
    let reach = s(end)? - s0;
    if (up && reach < delta) || (!up && reach > delta) {
        return Err(Error::Range {
            lo: reach.min(T::zero()).to_f64_lossy(),
            hi: reach.max(T::zero()).to_f64_lossy(),
            detail: format!("entropy difference {delta} not reachable on the energy ray of {}", model.id()),
        });
    }
    let (mut a, mut b) = (u0, end);
    for _ in 0..200 {
        let mid = (a + b) / T::lit(2.0);
        let below = if up { s(mid)? - s0 < delta } else { s(mid)? - s0 > delta };
        if below {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a).abs() <= T::lit(1e-15) * T::one().max(a.abs()) {
            break;
        }
    }
    let x1 = StatePoint::new((a + b) / T::lit(2.0), v.clone());
    let got = s(x1.u)? - s0;
    if (got - delta).abs() > tol {
        return Err(Error::Convergence(200));
    }
    Ok((x0, x1, got))
}

pub fn find_calibrators<T: Real>(model1: &dyn SimpleSystem<T>, model2: &dyn SimpleSystem<T>, target_delta: T, tol: T) -> Result<Calibrators<T>> {
    let (x0, x1, delta1) = ray(model1, target_delta, tol)?;
    let (y0, y1, delta2) = ray(model2, target_delta, tol)?;
    Ok(Calibrators {
        x0,
        x1,
        y0,
        y1,
        delta1,
        delta2,
        degenerate: target_delta.is_zero(),
    })
}
