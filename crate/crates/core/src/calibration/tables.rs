use std::collections::BTreeMap;

use rayon::prelude::*;

use super::network::{Edge, NodeKind, ReactionNetwork};
use crate::error::{Error, NegativeCycle, Result};
use crate::report::{CheckResult, Report, Tally};
use crate::scalar::Real;
use crate::state::{SpaceId, StateRef};

pub(crate) struct Shortest<T> {
    pub dist: Vec<T>,
    /// Index of the edge that last lowered each distance.
    pub pred: Vec<Option<usize>>,
    /// Nodes whose distance is unbounded below.
    pub tainted: Vec<bool>,
}

/// Relative slack below which a relaxation is ignored, so cycles that sum
/// to zero up to rounding are not reported as negative.
const RELAX_TOL: f64 = 1e-12;

fn improves<T: Real>(new: T, old: T) -> bool {
    old == T::infinity() && new < old || new < old - T::lit(RELAX_TOL) * T::one().max(old.abs())
}

/// Label-correcting shortest paths from `source`; tolerates negative weights.
pub(crate) fn bellman_ford<T: Real>(n: usize, edges: &[(usize, usize, T)], source: usize) -> Shortest<T> {
    let mut dist = vec![T::infinity(); n];
    let mut pred = vec![None; n];
    dist[source] = T::zero();
    for _ in 0..n.saturating_sub(1) {
        let mut changed = false;
        for (k, &(a, b, w)) in edges.iter().enumerate() {
            if dist[a] < T::infinity() && improves(dist[a] + w, dist[b]) {
                dist[b] = dist[a] + w;
                pred[b] = Some(k);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut tainted = vec![false; n];
    let mut stack = Vec::new();
    for (k, &(a, b, w)) in edges.iter().enumerate() {
        if dist[a] < T::infinity() && improves(dist[a] + w, dist[b]) && !tainted[b] {
            pred[b] = Some(k);
            tainted[b] = true;
            stack.push(b);
        }
    }
    while let Some(v) = stack.pop() {
        for &(a, b, _) in edges {
            if a == v && !tainted[b] {
                tainted[b] = true;
                stack.push(b);
            }
        }
    }
    Shortest { dist, pred, tainted }
}

/// Walks predecessors from a node whose label never settled and returns the
/// edges of the negative cycle it leads into, in order.
pub(crate) fn extract_cycle<T: Real>(edges: &[(usize, usize, T)], pred: &[Option<usize>], start: usize) -> Vec<usize> {
    let n = pred.len();
    let mut v = start;
    for _ in 0..n {
        match pred[v] {
            Some(k) => v = edges[k].0,
            None => return Vec::new(),
        }
    }
    let anchor = v;
    let mut cycle = Vec::new();
    loop {
        let Some(k) = pred[v] else { return Vec::new() };
        cycle.push(k);
        v = edges[k].0;
        if v == anchor || cycle.len() > n {
            break;
        }
    }
    cycle.reverse();
    cycle
}

pub(crate) fn certificate<T: Real>(edges: &[(usize, usize, T)], cycle: &[usize], name: impl Fn(usize) -> String) -> NegativeCycle {
    let mut nodes: Vec<String> = cycle.iter().map(|&k| name(edges[k].0)).collect();
    if let Some(&k) = cycle.first() {
        nodes.push(name(edges[k].0));
    }
    let edges_out: Vec<(String, String, f64)> = cycle
        .iter()
        .map(|&k| (name(edges[k].0), name(edges[k].1), edges[k].2.to_f64_lossy()))
        .collect();
    let weight = edges_out.iter().map(|e| e.2).sum();
    NegativeCycle { nodes, edges: edges_out, weight }
}

/// `min S′(Y) − S(X)` over the witnesses of the edge `g → g′`; `+∞` without one.
pub fn compute_d<T: Real>(network: &ReactionNetwork<T>, g: &SpaceId, g_prime: &SpaceId) -> Result<T> {
    let own = if g == g_prime { T::zero() } else { T::infinity() };
    let Some(edge) = network.edges().get(&(g.clone(), g_prime.clone())) else {
        return Ok(own);
    };
    let d = match edge {
        Edge::Direct(d) => *d,
        Edge::Witnesses(ws) => {
            let mut best = T::infinity();
            for w in ws {
                let s = |r: &StateRef<T>| {
                    network
                        .entropy_at(&r.space, &r.coords)
                        .ok_or_else(|| Error::Data(format!("no entropy at witness state {r}")))
                };
                best = best.min(s(&w.to_state)? - s(&w.from_state)?);
            }
            best
        }
    };
    Ok(d.min(own))
}

/// `D`, `E` and `F` over every ordered pair of the network, labelled
/// "over configured network": the infima run only over the graph and
/// catalyst list supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct FTable<T> {
    pub ids: Vec<SpaceId>,
    pub d: Vec<Vec<T>>,
    pub e: Vec<Vec<T>>,
    pub f: Vec<Vec<T>>,
}

impl<T: Real> FTable<T> {
    pub fn compute(network: &ReactionNetwork<T>) -> Result<Self> {
        let ids = network.ids();
        let n = ids.len();
        let d: Vec<Vec<T>> = ids
            .par_iter()
            .map(|a| ids.iter().map(|b| compute_d(network, a, b)).collect::<Result<Vec<T>>>())
            .collect::<Result<_>>()?;
        let edges = d_edges(&d);
        let e: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map(|s| {
                let sp = bellman_ford(n, &edges, s);
                if let Some(t) = sp.tainted.iter().position(|x| *x) {
                    let cycle = extract_cycle(&edges, &sp.pred, t);
                    return Err(Error::NegativeCycle(certificate(&edges, &cycle, |i| ids[i].to_string())));
                }
                Ok(sp.dist)
            })
            .collect::<Result<_>>()?;
        let index: BTreeMap<&SpaceId, usize> = ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let f = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        network.catalysts().iter().fold(e[a][b], |best, c| {
                            match (network.product_with(&ids[a], c), network.product_with(&ids[b], c)) {
                                (Some(pa), Some(pb)) => best.min(e[index[pa]][index[pb]]),
                                _ => best,
                            }
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(FTable { ids, d, e, f })
    }

    /// A table with only `F` filled in (`D = E = F`).
    pub fn from_f(ids: Vec<SpaceId>, f: Vec<Vec<T>>) -> Self {
        FTable { ids, d: f.clone(), e: f.clone(), f }
    }

    pub fn index(&self, id: &SpaceId) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    fn lookup(&self, table: &[Vec<T>], a: &SpaceId, b: &SpaceId) -> Option<T> {
        Some(table[self.index(a)?][self.index(b)?])
    }

    pub fn d(&self, a: &SpaceId, b: &SpaceId) -> Option<T> {
        self.lookup(&self.d, a, b)
    }

    pub fn e(&self, a: &SpaceId, b: &SpaceId) -> Option<T> {
        self.lookup(&self.e, a, b)
    }

    pub fn f(&self, a: &SpaceId, b: &SpaceId) -> Option<T> {
        self.lookup(&self.f, a, b)
    }
}

fn d_edges<T: Real>(d: &[Vec<T>]) -> Vec<(usize, usize, T)> {
    let mut edges = Vec::new();
    for (a, row) in d.iter().enumerate() {
        for (b, w) in row.iter().enumerate() {
            if a != b && w.is_finite() {
                edges.push((a, b, *w));
            }
        }
    }
    edges
}

/// Shortest chain of one-step deficits from `g` to `g′`.
pub fn compute_e<T: Real>(network: &ReactionNetwork<T>, g: &SpaceId, g_prime: &SpaceId) -> Result<T> {
    let ids = network.ids();
    let pos = |x: &SpaceId| ids.iter().position(|i| i == x).ok_or_else(|| Error::Config(format!("unknown node {x}")));
    let (s, t) = (pos(g)?, pos(g_prime)?);
    let d: Vec<Vec<T>> = ids
        .iter()
        .map(|a| ids.iter().map(|b| compute_d(network, a, b)).collect::<Result<Vec<T>>>())
        .collect::<Result<_>>()?;
    let edges = d_edges(&d);
    let sp = bellman_ford(ids.len(), &edges, s);
    if sp.tainted[t] {
        let cycle = extract_cycle(&edges, &sp.pred, t);
        return Err(Error::NegativeCycle(certificate(&edges, &cycle, |i| ids[i].to_string())));
    }
    Ok(sp.dist[t])
}

/// `min` over the empty catalyst and each configured `Γ₀` of `E(Γ×Γ₀, Γ′×Γ₀)`.
pub fn compute_f<T: Real>(network: &ReactionNetwork<T>, g: &SpaceId, g_prime: &SpaceId) -> Result<T> {
    let mut best = compute_e(network, g, g_prime)?;
    for c in network.catalysts() {
        if let (Some(a), Some(b)) = (network.product_with(g, c), network.product_with(g_prime, c)) {
            best = best.min(compute_e(network, a, b)?);
        }
    }
    Ok(best)
}

fn approx_eq<T: Real>(a: T, b: T) -> bool {
    a == b || (a - b).abs() <= T::lit(1e-12) * T::one().max(a.abs()).max(b.abs())
}

fn le<T: Real>(a: T, b: T) -> bool {
    a <= b || approx_eq(a, b)
}

/// `(Fa)`–`(Fe)` and `−F(Γ′,Γ) ≤ F(Γ,Γ′)` on the sampled pairs.
pub fn check_f_properties<T: Real>(network: &ReactionNetwork<T>, table: &FTable<T>, pairs: &[(SpaceId, SpaceId)]) -> Report {
    let f = |a: &SpaceId, b: &SpaceId| table.f(a, b);
    let mut fa = Tally::new("Fa");
    let mut fb = Tally::new("Fb");
    let mut fc = Tally::new("Fc");
    let mut fd = Tally::new("Fd");
    let mut fe = Tally::new("Fe");
    let mut bounds = Tally::new("F-bounds");
    let mut seen = std::collections::BTreeSet::new();
    for (a, b) in pairs {
        for g in [a, b] {
            if seen.insert(g.clone()) {
                fa.record(f(g, g).map(|v| v.is_zero()), || format!("F({g},{g}) = {:?}", f(g, g)));
            }
        }
        let Some(fab) = f(a, b) else {
            bounds.record(None, || format!("pair ({a},{b}) not in table"));
            continue;
        };
        let fba = f(b, a);
        bounds.record(fba.map(|fba| le(-fba, fab)), || format!("−F({b},{a}) = {:?} > F({a},{b}) = {fab}", fba.map(|x| -x)));
        for node in network.nodes() {
            if let NodeKind::Product(fs) = &node.kind {
                if let [(t, g)] = fs.as_slice() {
                    if g == a {
                        if let Some(tb) = network.find_product(&[(*t, b.clone())]) {
                            let lhs = f(&node.id, tb);
                            let rhs = *t * fab;
                            fb.record(lhs.map(|l| approx_eq(l, rhs)), || format!("F({},{tb}) = {lhs:?} ≠ {t}·F({a},{b}) = {rhs}", node.id));
                        }
                    }
                }
            }
        }
        for c in network.catalysts() {
            if let (Some(ac), Some(bc)) = (network.product_with(a, c), network.product_with(b, c)) {
                let lhs = f(ac, bc);
                fd.record(lhs.map(|l| approx_eq(l, fab)), || format!("F({ac},{bc}) = {lhs:?} ≠ F({a},{b}) = {fab}"));
            }
        }
        for (a2, b2) in pairs {
            if let (Some(p), Some(q)) = (
                network.find_product(&[(T::one(), a.clone()), (T::one(), a2.clone())]),
                network.find_product(&[(T::one(), b.clone()), (T::one(), b2.clone())]),
            ) {
                let (lhs, rhs) = (f(p, q), f(a2, b2).map(|x| x + fab));
                fc.record(lhs.zip(rhs).map(|(l, r)| le(l, r)), || format!("F({p},{q}) = {lhs:?} > F({a},{b}) + F({a2},{b2}) = {rhs:?}"));
            }
        }
        for mid in &table.ids {
            let via = f(a, mid).zip(f(mid, b)).map(|(x, y)| x + y);
            fe.record(via.map(|v| le(fab, v)), || format!("triple ({a},{mid},{b}): F = {fab} > {via:?}"));
        }
    }
    [fa, fb, fc, fd, fe, bounds].into_iter().map(Tally::finish).collect()
}

/// `X ≺ Y ⇔ S_Γ(X) + F(Γ,Γ′) ≤ S_Γ′(Y)` on sampled pairs. Pairs with
/// `|S′(Y) − S(X) − F| ≤ tol` count as equivalent within tolerance and are
/// left out of the strict count.
pub fn check_theorem6<T: Real>(
    network: &ReactionNetwork<T>,
    table: &FTable<T>,
    g: &SpaceId,
    g_prime: &SpaceId,
    pairs: &[(StateRef<T>, StateRef<T>)],
    precedes: &dyn Fn(&StateRef<T>, &StateRef<T>) -> Option<bool>,
    tol: T,
) -> Report {
    let mut tally = Tally::new("theorem6");
    let Some(fv) = table.f(g, g_prime) else {
        return [CheckResult::fail("theorem6", format!("pair ({g},{g_prime}) not in table"))].into_iter().collect();
    };
    let mut boundary = 0usize;
    for (x, y) in pairs {
        let (Some(sx), Some(sy)) = (network.entropy_at(g, &x.coords), network.entropy_at(g_prime, &y.coords)) else {
            tally.record(None, || format!("no entropy at {x} or {y}"));
            continue;
        };
        let gap = sy - sx - fv;
        if gap.is_finite() && gap.abs() <= tol {
            boundary += 1;
            continue;
        }
        let predicted = sx + fv <= sy;
        tally.record(precedes(x, y).map(|p| p == predicted), || {
            format!("{x} ≺ {y} is {:?} but S + F ≤ S′ is {predicted}", precedes(x, y))
        });
    }
    let r = tally.finish();
    let note = format!("{}; {boundary} within tolerance of the boundary; F over configured network", r.note);
    [r.with_note(note)].into_iter().collect()
}
