use std::sync::Arc;

use entropy_order::calibration::{
    check_f_properties, compute_d, compute_e, compute_f, element_basis_constant, find_calibrators, solve_constants,
    ConstantStatus, Edge, FTable, NodeEntropy, ProcessWitness, ReactionNetwork, SolveStatus,
};
use entropy_order::simple::SimpleSystem;
use entropy_order::{AnalyticOracle, Compound, Error, IdealGas, SpaceId, State, StatePoint, VanDerWaals, Verdict};
use entropy_order::order::{AccessOracle, Relation};
use proptest::prelude::*;

fn id(s: &str) -> SpaceId {
    SpaceId::from(s)
}

fn linear() -> Option<NodeEntropy<f64>> {
    Some(Arc::new(|c: &[f64]| Some(c.iter().sum())))
}

fn witness(from: &str, x: Vec<f64>, to: &str, y: Vec<f64>) -> ProcessWitness<f64> {
    ProcessWitness { from_state: State::new(from, x), to_state: State::new(to, y), note: String::new() }
}

/// Primitive nodes `names` with a one-entry composition and direct edges.
fn direct(names: &[&str], edges: &[(&str, &str, f64)]) -> ReactionNetwork<f64> {
    let mut n = ReactionNetwork::new();
    for s in names {
        n.add_primitive(*s, vec![1.0], 1, None).unwrap();
    }
    for (a, b, d) in edges {
        n.add_edge(*a, *b, Edge::Direct(*d)).unwrap();
    }
    n
}

/// Two elements, a compound `C` and its element basis `L = E1 × E2`.
fn compound_network(c_to_l: f64, l_to_c: f64) -> ReactionNetwork<f64> {
    let mut n = ReactionNetwork::new();
    n.add_element("E1", vec![1.0, 0.0], 1, None).unwrap();
    n.add_element("E2", vec![0.0, 1.0], 1, None).unwrap();
    n.add_primitive("C", vec![1.0, 1.0], 1, None).unwrap();
    n.add_product("L", vec![(1.0, id("E1")), (1.0, id("E2"))]).unwrap();
    n.add_edge("C", "L", Edge::Direct(c_to_l)).unwrap();
    n.add_edge("L", "C", Edge::Direct(l_to_c)).unwrap();
    n
}

#[test]
fn d_is_the_smallest_witnessed_jump() {
    let mut n = ReactionNetwork::new();
    n.add_primitive("A", vec![1.0], 1, linear()).unwrap();
    n.add_primitive("B", vec![1.0], 1, linear()).unwrap();
    n.add_edge("A", "B", Edge::Witnesses(vec![witness("A", vec![1.0], "B", vec![4.0]), witness("A", vec![1.0], "B", vec![3.0])]))
        .unwrap();
    assert_eq!(compute_d(&n, &id("A"), &id("B")).unwrap(), 2.0);
    assert_eq!(compute_d(&n, &id("B"), &id("A")).unwrap(), f64::INFINITY);
    assert_eq!(compute_d(&n, &id("A"), &id("A")).unwrap(), 0.0);
}

#[test]
fn witness_on_the_wrong_space_is_rejected() {
    let mut n = direct(&["A", "B"], &[]);
    let err = n.add_edge("A", "B", Edge::Witnesses(vec![witness("B", vec![1.0], "A", vec![1.0])]));
    assert!(matches!(err, Err(Error::Data(_))));
    assert!(matches!(n.add_edge("A", "Z", Edge::Direct(1.0)), Err(Error::Config(_))));
}

#[test]
fn chain_beats_direct_edge() {
    let n = direct(&["A", "B", "C"], &[("A", "B", 1.0), ("B", "C", -2.0), ("A", "C", 5.0)]);
    assert_eq!(compute_e(&n, &id("A"), &id("C")).unwrap(), -1.0);
    assert_eq!(compute_e(&n, &id("C"), &id("A")).unwrap(), f64::INFINITY);
    let t = FTable::compute(&n).unwrap();
    assert_eq!(t.d(&id("A"), &id("C")), Some(5.0));
    assert_eq!(t.e(&id("A"), &id("C")), Some(-1.0));
    assert_eq!(t.f(&id("A"), &id("C")), Some(-1.0));
}

#[test]
fn negative_cycle_certificate_sums_to_its_weight() {
    let n = direct(&["A", "B"], &[("A", "B", -1.0), ("B", "A", -1.0)]);
    let Err(Error::NegativeCycle(c)) = FTable::compute(&n) else { panic!("expected a negative cycle") };
    assert_eq!(c.weight, -2.0);
    assert_eq!(c.edges.iter().map(|e| e.2).sum::<f64>(), c.weight);
    assert_eq!(c.nodes.first(), c.nodes.last());
    assert!(matches!(compute_e(&n, &id("A"), &id("B")), Err(Error::NegativeCycle(_))));
}

#[test]
fn catalyst_opens_a_cheaper_chain() {
    let mut n = direct(&["G", "H", "K"], &[("G", "H", 5.0)]);
    n.add_product("GK", vec![(1.0, id("G")), (1.0, id("K"))]).unwrap();
    n.add_product("HK", vec![(1.0, id("H")), (1.0, id("K"))]).unwrap();
    n.add_edge("GK", "HK", Edge::Direct(2.0)).unwrap();
    assert_eq!(compute_f(&n, &id("G"), &id("H")).unwrap(), 5.0);
    n.set_catalysts(vec![id("K")]).unwrap();
    assert_eq!(compute_e(&n, &id("G"), &id("H")).unwrap(), 5.0);
    assert_eq!(compute_f(&n, &id("G"), &id("H")).unwrap(), 2.0);
    let t = FTable::compute(&n).unwrap();
    assert_eq!(t.f(&id("G"), &id("H")), Some(2.0));
    assert_eq!(t.f(&id("G"), &id("G")), Some(0.0));
}

#[test]
fn scaling_property_on_two_nodes() {
    let mut n = direct(&["A", "B"], &[("A", "B", 1.5), ("B", "A", -0.5)]);
    n.add_product("2A", vec![(2.0, id("A"))]).unwrap();
    n.add_product("2B", vec![(2.0, id("B"))]).unwrap();
    n.add_edge("2A", "2B", Edge::Direct(3.0)).unwrap();
    n.add_edge("2B", "2A", Edge::Direct(-1.0)).unwrap();
    let t = FTable::compute(&n).unwrap();
    let r = check_f_properties(&n, &t, &[(id("A"), id("B")), (id("B"), id("A"))]);
    assert_eq!(r.verdict("Fb"), Some(Verdict::Pass));
    assert!(r.all_pass(), "{r:?}");

    n.add_edge("2A", "2B", Edge::Direct(2.5)).unwrap();
    let t = FTable::compute(&n).unwrap();
    let r = check_f_properties(&n, &t, &[(id("A"), id("B"))]);
    assert_eq!(r.verdict("Fb"), Some(Verdict::Fail));
}

#[test]
fn planted_triangle_violation() {
    let n = direct(&["a", "b", "c"], &[]);
    let inf = f64::INFINITY;
    let t = FTable::from_f(
        vec![id("a"), id("b"), id("c")],
        vec![vec![0.0, 1.0, 5.0], vec![inf, 0.0, 1.0], vec![inf, inf, 0.0]],
    );
    let r = check_f_properties(&n, &t, &[(id("a"), id("c"))]);
    let fe = r.get("Fe").unwrap();
    assert_eq!(fe.verdict, Verdict::Fail);
    assert!(fe.witness.as_deref().unwrap().contains("(a,b,c)"), "{fe:?}");
}

#[test]
fn saturated_compound_constant_is_unique() {
    let n = compound_network(3.0, -3.0);
    let t = FTable::compute(&n).unwrap();
    let s = solve_constants(&n, &t).unwrap();
    assert_eq!(s.b[&id("C")], 3.0);
    assert_eq!(s.node_status[&id("C")], ConstantStatus::Unique);
    assert_eq!(s.b[&id("E1")], 0.0);
    assert_eq!(s.b[&id("L")], 0.0);
    assert_eq!(s.status, SolveStatus::Feasible);
    assert_eq!(element_basis_constant(&n, &t, &id("C")).unwrap(), s.b[&id("C")]);
}

#[test]
fn gap_takes_the_midpoint_and_free_node_is_zero() {
    let mut n = compound_network(3.0, -2.0);
    n.add_primitive("X", vec![1.0, 1.0], 1, None).unwrap();
    let t = FTable::compute(&n).unwrap();
    let s = solve_constants(&n, &t).unwrap();
    assert_eq!(s.intervals[&id("C")], (2.0, 3.0));
    assert_eq!(s.b[&id("C")], 2.5);
    assert_eq!(s.node_status[&id("C")], ConstantStatus::Gap);
    assert_eq!(s.gaps[&(id("C"), id("L"))], (2.0, 3.0));
    assert_eq!(s.b[&id("X")], 0.0);
    assert_eq!(s.node_status[&id("X")], ConstantStatus::Free);
    assert_eq!(s.status, SolveStatus::UnboundedDegreesOfFreedom);
}

#[test]
fn product_constants_follow_by_linearity() {
    let mut n = compound_network(3.0, -3.0);
    n.add_product("CC", vec![(0.5, id("C")), (2.0, id("E1"))]).unwrap();
    let t = FTable::compute(&n).unwrap();
    let s = solve_constants(&n, &t).unwrap();
    assert_eq!(s.b[&id("CC")], 1.5);
    assert_eq!(s.node_status[&id("CC")], ConstantStatus::Derived);
}

#[test]
fn entropy_induced_witnesses_give_zero_constants() {
    // one global entropy S = sum of coordinates, with a reversible witness each way
    let mut n = ReactionNetwork::new();
    n.add_element("E1", vec![1.0, 0.0], 1, linear()).unwrap();
    n.add_element("E2", vec![0.0, 1.0], 1, linear()).unwrap();
    n.add_primitive("C", vec![1.0, 1.0], 1, linear()).unwrap();
    n.add_primitive("D", vec![1.0, 1.0], 2, linear()).unwrap();
    n.add_product("L", vec![(1.0, id("E1")), (1.0, id("E2"))]).unwrap();
    let edges = [
        ("C", "L", vec![witness("C", vec![2.0], "L", vec![1.0, 1.0]), witness("C", vec![1.0], "L", vec![1.0, 3.0])]),
        ("L", "C", vec![witness("L", vec![0.5, 1.5], "C", vec![2.0])]),
        ("C", "D", vec![witness("C", vec![1.0], "D", vec![1.0, 0.5]), witness("C", vec![1.0], "D", vec![0.5, 0.5])]),
        ("D", "C", vec![witness("D", vec![1.0, 1.0], "C", vec![2.0]), witness("D", vec![0.0, 1.0], "C", vec![4.0])]),
    ];
    for (a, b, w) in edges {
        n.add_edge(a, b, Edge::Witnesses(w)).unwrap();
    }
    let t = FTable::compute(&n).unwrap();
    assert_eq!(t.d(&id("D"), &id("C")), Some(0.0));
    let s = solve_constants(&n, &t).unwrap();
    for (k, v) in &s.b {
        assert!(v.abs() <= 1e-12, "B({k}) = {v}");
    }
    assert_eq!(s.node_status[&id("C")], ConstantStatus::Unique);
    let pairs: Vec<_> = n.ids().iter().flat_map(|a| n.ids().into_iter().map(move |b| (a.clone(), b))).collect();
    assert!(check_f_properties(&n, &t, &pairs).all_pass());
}

#[test]
fn ideal_gas_calibrators() {
    let g1 = IdealGas::with_default_domain("g1", 1.0).unwrap();
    let g2 = IdealGas::with_default_domain("g2", 2.0).unwrap();
    let c = find_calibrators(&g1, &g2, 1.0, 1e-10).unwrap();
    // S = n[(3/2)ln(U/n) + ln(V/n)] at fixed V
    let jump = |n: f64, u0: f64, u1: f64| 1.5 * n * (u1 / u0).ln();
    assert!((jump(1.0, c.x0.u, c.x1.u) - 1.0).abs() <= 1e-8);
    assert!((jump(2.0, c.y0.u, c.y1.u) - 1.0).abs() <= 1e-8);
    assert!(!c.degenerate);

    let s = |n: f64| move |x: &[f64]| n * (1.5 * (x[0] / n).ln() + (x[1] / n).ln());
    let oracle = AnalyticOracle::new().with_space("g1", s(1.0)).with_space("g2", s(2.0)).with_tolerance(1e-9);
    let pair = |x: &StatePoint, y: &StatePoint| {
        Compound::from_parts(vec![(1.0, g1.state_ref(x)), (1.0, g2.state_ref(y))]).unwrap()
    };
    assert_eq!(oracle.relation(&pair(&c.x0, &c.y1), &pair(&c.x1, &c.y0)), Relation::Equivalent);
}

#[test]
fn zero_delta_is_degenerate() {
    let g1 = IdealGas::with_default_domain("g1", 1.0).unwrap();
    let g2 = IdealGas::with_default_domain("g2", 1.0).unwrap();
    let c = find_calibrators(&g1, &g2, 0.0, 1e-10).unwrap();
    assert!(c.degenerate);
    assert_eq!(c.x0, c.x1);
    assert_eq!(c.y0, c.y1);
}

#[test]
fn ideal_gas_against_van_der_waals() {
    let g = IdealGas::with_default_domain("g", 1.0).unwrap();
    let w = VanDerWaals::with_default_domain("w", 1.0).unwrap();
    let c = find_calibrators(&g, &w, 0.5, 1e-9).unwrap();
    assert!((c.delta1 - c.delta2).abs() <= 1e-6);
    // reduced vdW entropy per mole up to a constant: 4 ln(u + 3/v) + (8/3) ln(3v − 1)
    let s = |x: &StatePoint| 4.0 * (x.u + 3.0 / x.v[0]).ln() + 8.0 / 3.0 * (3.0 * x.v[0] - 1.0).ln();
    assert!((s(&c.y1) - s(&c.y0) - 0.5).abs() <= 1e-6);
}

#[test]
fn unreachable_delta_is_a_range_error() {
    let g1 = IdealGas::with_default_domain("g1", 1.0).unwrap();
    let g2 = IdealGas::with_default_domain("g2", 1.0).unwrap();
    assert!(matches!(find_calibrators(&g1, &g2, 100.0, 1e-10), Err(Error::Range { .. })));
}

/// Minimum over simple paths, by exhaustive enumeration.
fn brute_e(w: &[Vec<f64>], a: usize, b: usize) -> f64 {
    fn walk(w: &[Vec<f64>], at: usize, to: usize, seen: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if at == to {
            *best = best.min(acc);
            return;
        }
        for next in 0..w.len() {
            if !seen[next] && w[at][next].is_finite() {
                seen[next] = true;
                walk(w, next, to, seen, acc + w[at][next], best);
                seen[next] = false;
            }
        }
    }
    if a == b {
        return 0.0;
    }
    let mut seen = vec![false; w.len()];
    seen[a] = true;
    let mut best = f64::INFINITY;
    walk(w, a, b, &mut seen, 0.0, &mut best);
    best
}

/// Edge weights `p(b) − p(a) + slack` with non-negative slack: no negative cycles.
fn potential_graph() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(-5i32..5, n),
            prop::collection::vec(prop::option::weighted(0.5, 0i32..4), n * n),
        )
            .prop_map(move |(p, slack)| {
                (0..n)
                    .map(|a| {
                        (0..n)
                            .map(|b| match slack[a * n + b] {
                                Some(s) if a != b => f64::from(p[b] - p[a] + s),
                                _ => f64::INFINITY,
                            })
                            .collect()
                    })
                    .collect()
            })
    })
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("N{i}")).collect()
}

fn build(w: &[Vec<f64>]) -> ReactionNetwork<f64> {
    let names = names(w.len());
    let mut net = ReactionNetwork::new();
    for s in &names {
        net.add_primitive(s.as_str(), vec![1.0], 1, None).unwrap();
    }
    for (a, row) in w.iter().enumerate() {
        for (b, d) in row.iter().enumerate() {
            if d.is_finite() {
                net.add_edge(names[a].as_str(), names[b].as_str(), Edge::Direct(*d)).unwrap();
            }
        }
    }
    net
}

proptest! {
    #[test]
    fn e_matches_path_enumeration(w in potential_graph()) {
        let t = FTable::compute(&build(&w)).unwrap();
        for a in 0..w.len() {
            for b in 0..w.len() {
                prop_assert_eq!(t.e[a][b], brute_e(&w, a, b));
                prop_assert!(t.d[a][b] >= t.e[a][b] && t.e[a][b] >= t.f[a][b]);
                if t.f[a][b].is_finite() || t.f[b][a].is_finite() {
                    prop_assert!(-t.f[b][a] <= t.f[a][b]);
                }
            }
        }
    }

    #[test]
    fn solved_constants_satisfy_every_constraint(w in potential_graph()) {
        let net = build(&w);
        let t = FTable::compute(&net).unwrap();
        let s = solve_constants(&net, &t).unwrap();
        let names = names(w.len());
        for a in 0..w.len() {
            for b in 0..w.len() {
                let lhs = s.b[&id(&names[a])] - s.b[&id(&names[b])];
                prop_assert!(lhs <= t.f[a][b] + 1e-9, "B({a}) − B({b}) = {lhs} > {}", t.f[a][b]);
            }
        }
    }
}
