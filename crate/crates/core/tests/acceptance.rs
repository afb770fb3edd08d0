use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use entropy_order::calibration::{
    check_theorem6, element_basis_constant, solve_constants, Edge, FTable, NodeEntropy, ProcessWitness,
    ReactionNetwork,
};
use entropy_order::order::{
    affine_fit, check_cancellation_on, AnalyticOracle, EntropyChart, FiniteCompound, FiniteRelation, Rational,
    ScaleGrid,
};
use entropy_order::simple::{
    check_pressure_entropy_identity, forward_sector_contains, integrate_adiabat, integrate_adiabat_path,
    state_at_temperature, temperature_of, BoxDomain, IdealGas, Sector, SimpleSystem, StatePoint, VanDerWaals,
};
use entropy_order::thermal::{
    carnot_check, check_energy_flow, check_transversality, check_zeroth_law, in_thermal_equilibrium, thermal_split,
    Body, ThermalJoinPoint,
};
use entropy_order::{CompoundState, Error, StateRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = (bool, String);

fn gas(id: &str, n: f64) -> Arc<dyn SimpleSystem<f64>> {
    Arc::new(IdealGas::with_default_domain(id, n).unwrap())
}

fn ideal_s(c: &[f64]) -> f64 {
    1.5 * c[0].ln() + c[1].ln()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn entropy_reconstruction() -> Outcome {
    let start = Instant::now();
    let oracle = AnalyticOracle::new().with_space("gas", ideal_s);
    let axis: Vec<f64> = (0..10).map(|i| 1.0 + 3.0 * i as f64 / 9.0).collect();
    let points: Vec<StateRef<f64>> = axis
        .iter()
        .flat_map(|u| axis.iter().map(move |v| StateRef::new("gas", vec![*u, *v])))
        .collect();
    let x0 = StateRef::new("gas", vec![1.0, 1.0]);
    let x1 = StateRef::new("gas", vec![4.0, 4.0]);
    let chart = match EntropyChart::build(&oracle, &x0, &x1, &points, 1e-12) {
        Ok(c) => c,
        Err(e) => return (false, format!("chart: {e}")),
    };
    let analytic: Vec<f64> = points.iter().map(|p| ideal_s(&p.coords)).collect();
    let fit = affine_fit(&chart.lambdas(), &analytic).unwrap();
    let secs = start.elapsed().as_secs_f64();
    (
        fit.residual <= 1e-6 && secs < 5.0,
        format!("100 points, residual {:.3e}, {:.2} s", fit.residual, secs),
    )
}

fn adiabat_ode() -> Outcome {
    let g = IdealGas::with_default_domain("g", 1.0).unwrap();
    let x = StatePoint::uv(1.0, 1.0);
    let direct = integrate_adiabat(&g, &x, &[8.0]).unwrap().end().u;
    let detour = integrate_adiabat_path(&g, &x, &[vec![20.0], vec![0.5], vec![8.0]]).unwrap().end().u;
    let exact = 8f64.powf(-2.0 / 3.0);
    let (e1, e2) = (rel(direct, exact), rel(detour, direct));
    (
        e1 <= 1e-6 && e2 <= 1e-6,
        format!("u(8) = {direct:.12}, rel err {e1:.2e}, path disagreement {e2:.2e}"),
    )
}

fn sector_nesting() -> Outcome {
    let g = IdealGas::with_default_domain("g", 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let states: Vec<StatePoint<f64>> = (0..50)
        .map(|_| StatePoint::uv(rng.random_range(0.5..5.0), rng.random_range(0.5..5.0)))
        .collect();
    let m: Vec<Vec<Option<Sector>>> = states
        .par_iter()
        .map(|x| states.iter().map(|y| forward_sector_contains(&g, x, y).ok()).collect())
        .collect();
    let n = states.len();
    let mut errors = 0;
    let mut antisym = 0;
    let mut trans = 0;
    let prec = |i: usize, j: usize| matches!(m[i][j], Some(Sector::Precedes | Sector::Equivalent));
    for i in 0..n {
        for j in 0..n {
            let Some(s) = m[i][j] else {
                errors += 1;
                continue;
            };
            let back = m[j][i];
            let ok = match s {
                Sector::Precedes => back == Some(Sector::Succeeds),
                Sector::Succeeds => back == Some(Sector::Precedes),
                Sector::Equivalent => back == Some(Sector::Equivalent),
            };
            antisym += usize::from(!ok);
            for k in 0..n {
                if prec(i, j) && prec(j, k) && !prec(i, k) {
                    trans += 1;
                }
            }
        }
    }
    (
        errors == 0 && antisym == 0 && trans == 0,
        format!("{} verdicts, {errors} undecided, {antisym} antisymmetry and {trans} transitivity violations over {} triples", n * n, n * n * n),
    )
}

fn temperature_check() -> Outcome {
    let g = IdealGas::with_default_domain("g", 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sample: Vec<StatePoint<f64>> = (0..100)
        .map(|_| StatePoint::uv(rng.random_range(0.5..50.0), rng.random_range(0.5..50.0)))
        .collect();
    let mut worst = 0f64;
    let mut positive = true;
    for x in &sample {
        match temperature_of(&g, x) {
            Ok((t, _)) => {
                positive &= t > 0.0;
                worst = worst.max(rel(t, 2.0 * x.u / 3.0));
            }
            Err(_) => positive = false,
        }
    }
    let identity = check_pressure_entropy_identity(&g, &|p| g.entropy(p), &sample);
    (
        worst <= 1e-4 && positive && identity.is_pass(),
        format!("max rel err {worst:.2e}, all T > 0: {positive}, pressure identity: {}", identity.verdict),
    )
}

fn thermal_split_check() -> Outcome {
    let (a, b) = (gas("a", 2.0), gas("b", 1.0));
    let s = thermal_split(a.as_ref(), b.as_ref(), &ThermalJoinPoint { u: 3.0, v1: vec![1.0], v2: vec![1.0] }).unwrap();
    let (ta, _) = temperature_of(a.as_ref(), &s.x).unwrap();
    let (tb, _) = temperature_of(b.as_ref(), &s.y).unwrap();
    let w_err = (s.maximizer_energy - 2.0).abs();
    let t_err = rel(ta, tb);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut flow_fail = 0;
    let mut done = 0;
    while done < 20 {
        let na = rng.random_range(0.5..3.0);
        let nb = rng.random_range(0.5..3.0);
        let x = Body::new(gas("p", na), StatePoint::uv(na * rng.random_range(0.5..10.0), rng.random_range(1.0..10.0)));
        let y = Body::new(gas("q", nb), StatePoint::uv(nb * rng.random_range(0.5..10.0), rng.random_range(1.0..10.0)));
        match check_energy_flow(&x, &y) {
            Ok(r) => flow_fail += usize::from(!r.is_pass()),
            Err(Error::NotApplicable(_)) => continue,
            Err(_) => flow_fail += 1,
        }
        done += 1;
    }
    (
        w_err <= 1e-6 && t_err <= 1e-4 && flow_fail == 0,
        format!("W = {:.10}, |T_a − T_b|/T = {t_err:.2e}, energy-flow failures {flow_fail}/20", s.maximizer_energy),
    )
}

fn zeroth_law_check() -> Outcome {
    let systems: Vec<Arc<dyn SimpleSystem<f64>>> = vec![
        gas("g1", 1.0),
        gas("g2", 2.0),
        gas("g3", 0.5),
        Arc::new(VanDerWaals::with_default_domain("w", 1.0).unwrap()),
    ];
    let temps = [2.75, 3.0, 3.5];
    let mut bodies = Vec::new();
    let mut group = Vec::new();
    for (ti, t) in temps.iter().enumerate() {
        for m in &systems {
            for frac in [0.3, 0.7] {
                let (lo, hi) = m.domain().v[0];
                let v = lo + frac * (hi - lo);
                match state_at_temperature(m.as_ref(), &[v], *t) {
                    Ok(p) => {
                        bodies.push(Body::new(m.clone(), p));
                        group.push(ti);
                    }
                    Err(e) => return (false, format!("no state at T = {t} in {}: {e}", m.id())),
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = bodies.len();
    let triples: Vec<(usize, usize, usize)> = (0..200)
        .map(|k| {
            let i = rng.random_range(0..n);
            if k % 2 == 0 {
                let same: Vec<usize> = (0..n).filter(|&j| group[j] == group[i]).collect();
                (i, same[rng.random_range(0..same.len())], same[rng.random_range(0..same.len())])
            } else {
                (i, rng.random_range(0..n), rng.random_range(0..n))
            }
        })
        .collect();
    let eq = |a: &Body<f64>, b: &Body<f64>| in_thermal_equilibrium(a, b, 0.0);
    let report = check_zeroth_law(&bodies, &triples, &eq);
    let zl = report.get("zeroth-law").unwrap();

    let g = IdealGas::with_default_domain("g", 1.0).unwrap();
    let search = BoxDomain::new((0.01, 50.0), vec![(0.05, 50.0)]).unwrap();
    let found = (0..20)
        .map(|_| StatePoint::uv(rng.random_range(0.5..5.0), rng.random_range(0.5..5.0)))
        .collect::<Vec<_>>()
        .par_iter()
        .filter(|x| check_transversality(&g, x, &search).is_pass())
        .count();
    (
        zl.is_pass() && report.all_pass() && found == 20,
        format!("zeroth law over 200 triples: {} ({}); other checks pass: {}; transversality {found}/20", zl.verdict, zl.note, report.all_pass()),
    )
}

fn carnot_bound() -> Outcome {
    let exact = carnot_check(100.0, 600.0, -50.0, 300.0).unwrap();
    let exact_ok = exact.allowed && exact.efficiency == 0.5 && exact.carnot_efficiency == 0.5;
    let perturbed = carnot_check(100.0, 600.0, -40.0, 300.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0;
    for _ in 0..100 {
        let t0 = rng.random_range(1.0..500.0);
        let t1 = t0 * rng.random_range(1.01..5.0);
        let q1 = rng.random_range(1.0..1000.0);
        let q0 = -q1 * t0 / t1 * rng.random_range(1.0..3.0);
        let o = carnot_check(q1, t1, q0, t0).unwrap();
        if !o.allowed || o.efficiency > o.carnot_efficiency + 1e-12 {
            violations += 1;
        }
    }
    (
        exact_ok && !perturbed.allowed && violations == 0,
        format!("η = {}, η_C = {}, Q0 = −40 allowed: {}, random violations {violations}/100", exact.efficiency, exact.carnot_efficiency, perturbed.allowed),
    )
}

/// Five spaces whose true entropies are `S₀ + B`: elements `E1`, `E2`,
/// their product `L`, and compounds `C`, `D` of the same composition.
fn calibration_network(b_c: f64, b_d: f64, rng: &mut ChaCha8Rng) -> (ReactionNetwork<f64>, BTreeMap<&'static str, f64>) {
    let s0: NodeEntropy<f64> = Arc::new(|c: &[f64]| (c[0] > 0.0 && c[1] > 0.0).then(|| ideal_s(c)));
    let truth = BTreeMap::from([("E1", 0.0), ("E2", 0.0), ("L", 0.0), ("C", b_c), ("D", b_d)]);
    let mut net = ReactionNetwork::new();
    net.add_element("E1", vec![1.0, 0.0], 2, Some(s0.clone())).unwrap();
    net.add_element("E2", vec![0.0, 1.0], 2, Some(s0.clone())).unwrap();
    net.add_primitive("C", vec![1.0, 1.0], 2, Some(s0.clone())).unwrap();
    net.add_primitive("D", vec![1.0, 1.0], 2, Some(s0)).unwrap();
    net.add_product("L", vec![(1.0, "E1".into()), (1.0, "E2".into())]).unwrap();
    let dims = BTreeMap::from([("C", 2), ("D", 2), ("L", 4)]);
    for (a, b) in [("C", "L"), ("L", "C"), ("D", "L"), ("L", "D"), ("C", "D"), ("D", "C")] {
        let mut ws = Vec::new();
        let random_state = |rng: &mut ChaCha8Rng, d: usize| -> Vec<f64> { (0..d).map(|_| rng.random_range(1.0..5.0)).collect() };
        for k in 0..6 {
            let x = random_state(rng, dims[a]);
            let sx = net.entropy_at(&a.into(), &x).unwrap() + truth[a];
            // first witness is reversible, the rest strictly increase the true entropy
            let jump = if k == 0 { 0.0 } else { rng.random_range(0.1..2.0) };
            let mut y = random_state(rng, dims[b]);
            let sy_rest = net.entropy_at(&b.into(), &y).unwrap() + truth[b] - 1.5 * y[0].ln();
            y[0] = ((sx + jump - sy_rest) / 1.5).exp();
            ws.push(ProcessWitness {
                from_state: StateRef::new(a, x),
                to_state: StateRef::new(b, y),
                note: String::new(),
            });
        }
        net.add_edge(a, b, Edge::Witnesses(ws)).unwrap();
    }
    (net, truth)
}

fn calibration_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (net, truth) = calibration_network(0.7, -0.4, &mut rng);
    let table = FTable::compute(&net).unwrap();
    let sol = solve_constants(&net, &table).unwrap();
    let mut b_err = 0f64;
    for id in ["C", "D"] {
        let le = element_basis_constant(&net, &table, &id.into()).unwrap();
        b_err = b_err.max((sol.b[&id.into()] - le).abs()).max((le - truth[id]).abs());
    }
    let precedes = |x: &StateRef<f64>, y: &StateRef<f64>| {
        let sx = net.entropy_at(&x.space, &x.coords)? + truth[x.space.as_str()];
        let sy = net.entropy_at(&y.space, &y.coords)? + truth[y.space.as_str()];
        Some(sx <= sy)
    };
    let pairs: Vec<(StateRef<f64>, StateRef<f64>)> = (0..100)
        .map(|_| {
            let x = StateRef::new("C", vec![rng.random_range(1.0..5.0), rng.random_range(1.0..5.0)]);
            let y = StateRef::new("L", (0..4).map(|_| rng.random_range(1.0..5.0)).collect());
            (x, y)
        })
        .collect();
    let t6 = check_theorem6(&net, &table, &"C".into(), &"L".into(), &pairs, &precedes, 1e-9);
    let t6r = t6.get("theorem6").unwrap();

    let mut bad = ReactionNetwork::<f64>::new();
    bad.add_primitive("A", vec![1.0], 0, None).unwrap();
    bad.add_primitive("B", vec![1.0], 0, None).unwrap();
    bad.add_edge("A", "B", Edge::Direct(-1.0)).unwrap();
    bad.add_edge("B", "A", Edge::Direct(-1.0)).unwrap();
    let cycle = match FTable::compute(&bad) {
        Err(Error::NegativeCycle(c)) => {
            let sum: f64 = c.edges.iter().map(|e| e.2).sum();
            sum < 0.0 && (sum - c.weight).abs() < 1e-12
        }
        _ => false,
    };
    (
        t6r.is_pass() && t6r.instances == 100 && b_err <= 1e-10 && cycle,
        format!("theorem6 {} ({}); max |B − F(Γ,Λ(Γ))| {b_err:.2e}; negative cycle certified: {cycle}", t6r.verdict, t6r.note),
    )
}

fn unit(s: &str) -> FiniteCompound {
    CompoundState::single(s.to_string())
}

const STATES: [&str; 4] = ["A", "B", "C", "D"];

/// Every ordered pair of distinct states.
fn fact_pool() -> Vec<(usize, usize)> {
    (0..4).flat_map(|a| (0..4).filter(move |b| *b != a).map(move |b| (a, b))).collect()
}

/// Transitive closure of unit facts as a 16-bit mask. The A1–A5 closure of
/// a fact set equals the closure of its transitive closure, so this keys
/// distinct closed relations.
fn unit_preorder(facts: &[(usize, usize)]) -> u16 {
    let mut m = [[false; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(a, b) in facts {
        m[a][b] = true;
    }
    for k in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] |= m[i][k] && m[k][j];
            }
        }
    }
    (0..16).filter(|b| m[b / 4][b % 4]).fold(0, |acc, b| acc | (1 << b))
}

fn corpus_grid() -> ScaleGrid {
    ScaleGrid::from_values((1..=4).map(|p| Rational::new(p, 4))).unwrap()
}

fn subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |l| l + 1);
            for i in start..n {
                let mut t = s.clone();
                t.push(i);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[derive(Default)]
struct CorpusTally {
    relations: usize,
    closure_fail: usize,
    ch_hold: usize,
    entropies: usize,
    entropy_fail: usize,
    planted: usize,
    false_passes: usize,
    cancellation_instances: usize,
    cancellation_fail: usize,
}

impl CorpusTally {
    fn merge(mut self, o: Self) -> Self {
        self.relations += o.relations;
        self.closure_fail += o.closure_fail;
        self.ch_hold += o.ch_hold;
        self.entropies += o.entropies;
        self.entropy_fail += o.entropy_fail;
        self.planted += o.planted;
        self.false_passes += o.false_passes;
        self.cancellation_instances += o.cancellation_instances;
        self.cancellation_fail += o.cancellation_fail;
        self
    }
}

fn audit_relation(facts: Vec<(FiniteCompound, FiniteCompound)>) -> CorpusTally {
    let mut t = CorpusTally { relations: 1, ..Default::default() };
    let rel = FiniteRelation::closed(STATES, corpus_grid(), 3, facts).unwrap();
    let axioms = rel.check_axioms_exhaustive(8);
    if ["A1", "A2", "A3", "A4", "A5"].iter().any(|a| !axioms.get(a).unwrap().is_pass()) {
        t.closure_fail += 1;
    }
    let cancel = rel.check_cancellation_exhaustive();
    t.cancellation_instances += cancel.instances;
    t.cancellation_fail += usize::from(!cancel.is_pass());
    if rel.check_ch_exhaustive().all_pass() {
        t.ch_hold += 1;
        let states = rel.states().to_vec();
        let strict = states.iter().flat_map(|a| states.iter().map(move |b| (a, b))).find(|(a, b)| {
            rel.contains(&unit(a), &unit(b)) == Some(true) && rel.contains(&unit(b), &unit(a)) == Some(false)
        });
        if let Some((x0, x1)) = strict {
            match rel.construct_entropy(x0, x1) {
                Ok(s) => {
                    t.entropies += 1;
                    t.entropy_fail += usize::from(!rel.verify_entropy_exhaustive(&s).all_pass());
                }
                Err(_) => t.entropy_fail += 1,
            }
        }
    }
    for (axiom, (a, b)) in rel.plant_candidates() {
        let mut planted = rel.clone();
        planted.remove_fact(&a, &b);
        t.planted += 1;
        if !planted.check_axiom_exhaustive(axiom, 8).unwrap().is_fail() {
            t.false_passes += 1;
        }
    }
    t
}

fn finite_corpus() -> (CorpusTally, usize, f64) {
    let start = Instant::now();
    let pool = fact_pool();
    let subs = subsets(pool.len(), 6);
    let mut distinct: BTreeMap<u16, Vec<(usize, usize)>> = BTreeMap::new();
    for s in &subs {
        let facts: Vec<(usize, usize)> = s.iter().map(|&i| pool[i]).collect();
        distinct.entry(unit_preorder(&facts)).or_insert(facts);
    }
    let tally = distinct
        .into_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|facts| audit_relation(facts.iter().map(|&(a, b)| (unit(STATES[a]), unit(STATES[b]))).collect()))
        .reduce(CorpusTally::default, CorpusTally::merge);
    (tally, subs.len(), start.elapsed().as_secs_f64())
}

fn finite_brute_force(t: &CorpusTally, sets: usize, secs: f64) -> Outcome {
    (
        t.closure_fail == 0 && t.entropy_fail == 0 && t.false_passes == 0 && t.entropies > 0,
        format!(
            "{sets} fact sets, {} distinct closed relations ({secs:.1} s), CH holds on {}, {} entropies with {} failures, {} planted violations with {} false passes",
            t.relations, t.ch_hold, t.entropies, t.entropy_fail, t.planted, t.false_passes
        ),
    )
}

fn cancellation(t: &CorpusTally) -> Outcome {
    let oracle = AnalyticOracle::new()
        .with_space("g", ideal_s)
        .with_space("h", |c: &[f64]| 2.0 * c[0].ln() + 0.5 * c[1].ln());
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let state = |rng: &mut ChaCha8Rng| {
        let space = if rng.random_bool(0.5) { "g" } else { "h" };
        let c = StateRef::new(space, vec![rng.random_range(0.5..5.0), rng.random_range(0.5..5.0)]);
        CompoundState::scaled(rng.random_range(0.25..3.0), c).unwrap()
    };
    let triples: Vec<_> = (0..500)
        .map(|_| {
            let x = state(&mut rng);
            let (k, s) = x.parts()[0].clone();
            // Y in the same scaled space so (X,Z) ≺ (Y,Z) is possible
            let y = CompoundState::scaled(k, StateRef::new(s.space.clone(), vec![rng.random_range(0.5..5.0), rng.random_range(0.5..5.0)])).unwrap();
            (x, y, state(&mut rng))
        })
        .collect();
    let r = check_cancellation_on(&oracle, &triples);
    (
        r.is_pass() && t.cancellation_fail == 0,
        format!(
            "finite corpus: {} instances over {} relations, {} failing relations; analytic: {} ({})",
            t.cancellation_instances, t.relations, t.cancellation_fail, r.verdict, r.note
        ),
    )
}

fn main() {
    let mut all = true;
    let mut line = |n: usize, name: &str, (ok, detail): Outcome| {
        all &= ok;
        println!("criterion {n:>2} {:<4} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    };
    line(1, "entropy reconstruction", entropy_reconstruction());
    line(2, "adiabat ODE", adiabat_ode());
    line(3, "forward-sector nesting", sector_nesting());
    line(4, "temperature", temperature_check());
    line(5, "thermal split", thermal_split_check());
    line(6, "zeroth law and transversality", zeroth_law_check());
    line(7, "Carnot bound", carnot_bound());
    line(8, "calibration", calibration_check());
    let (corpus, sets, secs) = finite_corpus();
    line(9, "finite-preorder brute force", finite_brute_force(&corpus, sets, secs));
    line(10, "cancellation law", cancellation(&corpus));
    if !all {
        std::process::exit(1);
    }
}
