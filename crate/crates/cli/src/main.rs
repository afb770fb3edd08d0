use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use entropy_order::calibration::{check_f_properties, solve_constants, FTable};
use entropy_order::config::{ModelConfig, NetworkFile};
use entropy_order::order::{
    affine_fit, check_axioms, check_cancellation, check_ch, parse_relation, AccessOracle, AnalyticOracle, AxiomConfig,
    Comparability, EntropyChart, FiniteRelation,
};
use entropy_order::report::{csv_field, fmt_num};
use entropy_order::simple::{
    integrate_adiabat_path, state_at_temperature, BoxDomain, GeometricOracle, IdealGas, SimpleSystem, StatePoint,
};
use entropy_order::thermal::{
    carnot_check, check_energy_flow, check_temperature_range, in_thermal_equilibrium, reservoir_cycle_audit, Body,
    JoinedSystem,
};
use entropy_order::{CheckResult, CompoundState, Error, Report, StateRef, Verdict};

#[derive(Parser)]
#[command(name = "entropy-order", version, about = "Entropy from adiabatic accessibility")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Model config (`.toml`) or relation file (any other extension).
    #[arg(long)]
    config: PathBuf,
    /// Directory for the CSV outputs.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Numerical tolerance for constructions and equilibrium tests.
    #[arg(long, default_value_t = 1e-9, allow_negative_numbers = true)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Treat Inconclusive checks as failures.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Axiom, cancellation and comparison checks on a relation file or a model.
    CheckAxioms {
        #[command(flatten)]
        common: Common,
        /// Check the relation file as listed, without closing it first.
        #[arg(long)]
        raw: bool,
    },
    /// Strip entropy over a grid of states.
    BuildEntropy(Common),
    /// Adiabat through a seed state.
    Adiabat(Common),
    /// Thermal join and entropy-maximizing split of two states.
    Split(Common),
    /// Carnot bound and a finite-reservoir audit.
    Carnot(Common),
    /// D/E/F tables and additive constants of a reaction network.
    Calibrate(Common),
    /// Every job configured in the file.
    Report(Common),
}

/// Bad invocation, unreadable input or malformed config: exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    Usage(e.to_string()).into()
}

/// Core errors from reading the input count as usage errors.
fn load_err(e: Error) -> anyhow::Error {
    match e {
        Error::Parse { .. } | Error::Config(_) => usage(e),
        e => e.into(),
    }
}

enum Input {
    Model(ModelConfig),
    Relation(String),
}

struct Ctx {
    common: Common,
    input: Input,
    header: String,
}

impl Ctx {
    fn load(common: Common, command: &str) -> anyhow::Result<Self> {
        if !(common.tol > 0.0 && common.tol.is_finite()) {
            return Err(usage(format!("--tol must be positive, got {}", common.tol)));
        }
        let bytes = fs::read(&common.config).map_err(|e| usage(format!("{}: {e}", common.config.display())))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| usage("config is not UTF-8"))?;
        let is_toml = common.config.extension().is_some_and(|e| e == "toml");
        let input = if is_toml {
            Input::Model(ModelConfig::parse(&text).map_err(load_err)?)
        } else {
            parse_relation(&text).map_err(load_err)?;
            Input::Relation(text)
        };
        let header = format!(
            "# {} {}\n# command {command}\n# config-sha256 {}\n# seed {}\n",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION"),
            hex::encode(Sha256::digest(&bytes)),
            common.seed
        );
        fs::create_dir_all(&common.out).map_err(|e| usage(format!("{}: {e}", common.out.display())))?;
        Ok(Ctx { common, input, header })
    }

    fn write(&self, name: &str, body: &str) -> anyhow::Result<PathBuf> {
        let path = self.common.out.join(name);
        fs::write(&path, format!("{}{body}", self.header)).with_context(|| path.display().to_string())?;
        Ok(path)
    }

    fn model(&self) -> anyhow::Result<&ModelConfig> {
        match &self.input {
            Input::Model(m) => Ok(m),
            Input::Relation(_) => Err(usage("this command needs a .toml model config")),
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.common.seed)
    }

    /// `true` when the report has no FAIL (and, with `--strict`, no Inconclusive).
    fn passed(&self, report: &Report) -> bool {
        !report.any_fail() && !(self.common.strict && report.any_inconclusive())
    }
}

fn missing(job: &str) -> anyhow::Error {
    usage(format!("config has no [{job}] section"))
}

fn row(fields: &[f64]) -> String {
    fields.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(",")
}

fn v_header(dim: usize) -> String {
    if dim == 1 {
        "V".into()
    } else {
        (1..=dim).map(|i| format!("V{i}")).collect::<Vec<_>>().join(",")
    }
}

fn point(coords: &[f64]) -> anyhow::Result<StatePoint<f64>> {
    StatePoint::from_coords(coords).ok_or_else(|| usage(format!("state {coords:?} needs U and at least one V")))
}

/// Uniform states in the middle 80% of the domain box.
fn sample_states(model: &dyn SimpleSystem<f64>, n: usize, rng: &mut ChaCha8Rng) -> Vec<StatePoint<f64>> {
    let d = model.domain();
    let inner = |(lo, hi): (f64, f64), rng: &mut ChaCha8Rng| lo + (hi - lo) * rng.random_range(0.1..0.9);
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n && tries < 100 * n {
        tries += 1;
        let u = inner(d.u, rng);
        let v: Vec<f64> = d.v.iter().map(|b| inner(*b, rng)).collect();
        let x = StatePoint::new(u, v);
        if model.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// Oracle from the model entropy when it has one, else the adiabat geometry.
fn oracle_for(model: Arc<dyn SimpleSystem<f64>>, probe: &StatePoint<f64>) -> Box<dyn AccessOracle<f64, StateRef<f64>>> {
    if model.entropy(probe).is_some() {
        let m = model.clone();
        Box::new(AnalyticOracle::new().with_space(model.id().clone(), move |c: &[f64]| {
            StatePoint::from_coords(c).and_then(|p| m.entropy(&p)).unwrap_or(f64::NAN)
        }))
    } else {
        Box::new(GeometricOracle::new(model))
    }
}

fn check_relation(ctx: &Ctx, text: &str, raw: bool) -> anyhow::Result<bool> {
    let file = parse_relation(text).map_err(load_err)?;
    let rel = FiniteRelation::from_file(&file, !raw).map_err(load_err)?;
    let mut report = rel.check_axioms_exhaustive(8);
    report.push(rel.check_cancellation_exhaustive());
    report.extend(rel.check_ch_exhaustive());
    let path = ctx.write("report.csv", &report.to_csv())?;
    print_report(&report, &path);
    Ok(ctx.passed(&report))
}

fn check_model(ctx: &Ctx) -> anyhow::Result<bool> {
    let cfg = ctx.model()?;
    let job = cfg.check_axioms.as_ref().ok_or_else(|| missing("check_axioms"))?;
    let model = cfg.system(&job.system).map_err(load_err)?;
    let mut rng = ctx.rng();
    let states = sample_states(model.as_ref(), job.samples, &mut rng);
    if states.is_empty() {
        return Err(anyhow!("no sample state found inside the domain of {}", job.system));
    }
    let oracle = oracle_for(model.clone(), &states[0]);
    let sample: Vec<_> = states.iter().map(|x| CompoundState::single(model.state_ref(x))).collect();
    let mut report = check_axioms(oracle.as_ref(), &sample, &AxiomConfig::continuous());
    report.push(check_cancellation(oracle.as_ref(), &sample, 20_000));
    report.push(check_ch(oracle.as_ref(), &sample));
    if cfg.system.len() > 1 {
        let mut systems = Vec::new();
        for name in cfg.system.keys() {
            let m = cfg.system(name).map_err(load_err)?;
            let xs = sample_states(m.as_ref(), 4, &mut rng);
            systems.push((m, xs));
        }
        report.push(check_temperature_range(&systems));
    }
    let path = ctx.write("report.csv", &report.to_csv())?;
    print_report(&report, &path);
    Ok(ctx.passed(&report))
}

fn print_report(report: &Report, path: &Path) {
    for r in &report.results {
        println!("{:<14} {:<12} {}", r.check, r.verdict, r.note);
    }
    println!("wrote {}", path.display());
}

fn build_entropy(ctx: &Ctx) -> anyhow::Result<bool> {
    let cfg = ctx.model()?;
    let job = cfg.build_entropy.as_ref().ok_or_else(|| missing("build_entropy"))?;
    if job.points == 0 {
        return Err(usage("build_entropy.points must be at least 1"));
    }
    let model = cfg.system(&job.system).map_err(load_err)?;
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        if job.points == 1 {
            vec![lo]
        } else {
            (0..job.points).map(|i| lo + (hi - lo) * i as f64 / (job.points - 1) as f64).collect()
        }
    };
    let grid: Vec<StatePoint<f64>> = axis((job.u[0], job.u[1]))
        .into_iter()
        .flat_map(|u| axis((job.v[0], job.v[1])).into_iter().map(move |v| StatePoint::uv(u, v)))
        .collect();
    if let Some(p) = grid.iter().find(|p| !model.contains(p)) {
        return Err(Error::Domain(format!("grid point {p} outside {}", job.system)).into());
    }
    let x0 = point(job.x0.as_deref().unwrap_or(&[job.u[0], job.v[0]]))?;
    let x1 = point(job.x1.as_deref().unwrap_or(&[job.u[1], job.v[1]]))?;
    let oracle = oracle_for(model.clone(), &x0);
    let (mut r0, mut r1) = (model.state_ref(&x0), model.state_ref(&x1));
    if job.x0.is_none() && job.x1.is_none() {
        let up = CompoundState::single(r0.clone());
        let down = CompoundState::single(r1.clone());
        if oracle.compare(&down, &up) == Comparability::Precedes && oracle.compare(&up, &down) != Comparability::Precedes {
            std::mem::swap(&mut r0, &mut r1);
        }
    }
    let points: Vec<StateRef<f64>> = grid.iter().map(|p| model.state_ref(p)).collect();
    let chart = EntropyChart::build(oracle.as_ref(), &r0, &r1, &points, ctx.common.tol)?;
    let mut body = String::from("U,V,lambda\n");
    for (p, l) in &chart.values {
        writeln!(body, "{}", row(&[p.coords[0], p.coords[1], *l]))?;
    }
    let path = ctx.write("entropy.csv", &body)?;
    println!("{} points from {} to {}{}", chart.values.len(), r0, r1, if chart.near_tie { " (near tie)" } else { "" });
    println!("wrote {}", path.display());
    let analytic: Option<Vec<f64>> = grid.iter().map(|p| model.entropy(p)).collect();
    if let (Some(s), true) = (analytic, grid.len() >= 2) {
        let fit = affine_fit(&chart.lambdas(), &s)?;
        let path = ctx.write("entropy_fit.csv", &format!("a,b,residual\n{}\n", row(&[fit.a, fit.b, fit.residual])))?;
        println!("affine fit S = a·lambda + b: a {} b {} residual {:.3e}", fmt_num(fit.a), fmt_num(fit.b), fit.residual);
        println!("wrote {}", path.display());
    }
    Ok(true)
}

fn adiabat(ctx: &Ctx) -> anyhow::Result<bool> {
    let cfg = ctx.model()?;
    let job = cfg.adiabat.as_ref().ok_or_else(|| missing("adiabat"))?;
    let model = cfg.system(&job.system).map_err(load_err)?;
    let seed = point(&job.seed)?;
    let curve = integrate_adiabat_path(model.as_ref(), &seed, &job.waypoints)?;
    let mut body = format!("{},u\n", v_header(seed.v.len()));
    for (v, u) in &curve.samples {
        let mut fields = v.clone();
        fields.push(*u);
        writeln!(body, "{}", row(&fields))?;
    }
    let path = ctx.write("adiabat.csv", &body)?;
    let end = curve.end();
    println!("{} samples, end u {} at V {:?}", curve.samples.len(), fmt_num(end.u), end.v);
    println!("wrote {}", path.display());
    Ok(true)
}

fn split(ctx: &Ctx) -> anyhow::Result<bool> {
    let cfg = ctx.model()?;
    let job = cfg.split.as_ref().ok_or_else(|| missing("split"))?;
    let (ma, mb) = (cfg.system(&job.systems[0]).map_err(load_err)?, cfg.system(&job.systems[1]).map_err(load_err)?);
    let (x, y) = (point(&job.x)?, point(&job.y)?);
    let (joined, swapped) = JoinedSystem::new(ma.clone(), mb.clone());
    let (l, r) = if swapped { (&y, &x) } else { (&x, &y) };
    let res = joined.split(&joined.join(l, r))?;
    let (xa, ya) = if swapped { (res.y.clone(), res.x.clone()) } else { (res.x.clone(), res.y.clone()) };

    let before = (Body::new(ma.clone(), x.clone()), Body::new(mb.clone(), y.clone()));
    let after = (Body::new(ma.clone(), xa.clone()), Body::new(mb.clone(), ya.clone()));
    let mut body = String::from("system,U_initial,U_final,T_initial,T_final,S_initial,S_final\n");
    let mut s_before = 0.0;
    for (name, b0, b1) in [(&job.systems[0], &before.0, &after.0), (&job.systems[1], &before.1, &after.1)] {
        let (t0, _) = b0.temperature()?;
        let (t1, _) = b1.temperature()?;
        let (s0, s1) = (b0.entropy()?, b1.entropy()?);
        s_before += s0;
        writeln!(body, "{},{}", csv_field(name), row(&[b0.state.u, b1.state.u, t0, t1, s0, s1]))?;
    }
    let path = ctx.write("split.csv", &body)?;

    let mut report = Report::new();
    report.push(match check_energy_flow(&before.0, &before.1) {
        Ok(r) => r,
        Err(Error::NotApplicable(why)) => CheckResult::pass("energy-flow", 0).with_note(why),
        Err(e) => return Err(e.into()),
    });
    let eq = in_thermal_equilibrium(&after.0, &after.1, ctx.common.tol)?;
    report.push(if eq {
        CheckResult::pass("equilibrium", 1)
    } else {
        CheckResult::fail("equilibrium", format!("{xa} and {ya} not in thermal equilibrium"))
    });
    let gain = res.total_entropy - s_before;
    let tol = ctx.common.tol * res.total_entropy.abs().max(1.0);
    report.push(if gain >= -tol {
        CheckResult::pass("entropy-increase", 1).with_note(format!("ΔS = {}", fmt_num(gain)))
    } else {
        CheckResult::fail("entropy-increase", format!("ΔS = {gain}"))
    });
    let rpath = ctx.write("split_report.csv", &report.to_csv())?;
    println!("W = {} total S = {}", fmt_num(xa.u), fmt_num(res.total_entropy));
    println!("wrote {}", path.display());
    print_report(&report, &rpath);
    Ok(ctx.passed(&report))
}

fn reservoir(id: &str, amount: f64, t: f64) -> anyhow::Result<Body<f64>> {
    let u = 1.5 * amount * t;
    let model: Arc<dyn SimpleSystem<f64>> =
        Arc::new(IdealGas::new(id, amount, BoxDomain::new((0.0, 4.0 * u), vec![(0.0, 2.0 * amount)])?)?);
    let x = state_at_temperature(model.as_ref(), &[amount], t)?;
    Ok(Body::new(model, x))
}

fn carnot(ctx: &Ctx) -> anyhow::Result<bool> {
    let cfg = ctx.model()?;
    let job = cfg.carnot.as_ref().ok_or_else(|| missing("carnot"))?;
    let outcome = carnot_check(job.q1, job.t1, job.q0, job.t0)?;
    let flag = |b: bool| if b { "true" } else { "false" };
    let mut body = String::from("case,q1,t1,q0,t0,allowed,efficiency,carnot_efficiency\n");
    writeln!(
        body,
        "config,{},{},{}",
        row(&[job.q1, job.t1, job.q0, job.t0]),
        flag(outcome.allowed),
        row(&[outcome.efficiency, outcome.carnot_efficiency])
    )?;
    let mut report = Report::new();
    report.push(if outcome.allowed {
        CheckResult::pass("carnot", 1)
    } else {
        CheckResult::fail("carnot", format!("Q1/T1 + Q0/T0 = {} > 0", job.q1 / job.t1 + job.q0 / job.t0))
    });

    let mut rng = ctx.rng();
    let mut random = entropy_order::report::Tally::new("random-cycles");
    for i in 0..job.random_cycles {
        let t0 = rng.random_range(1.0..500.0);
        let t1 = t0 * rng.random_range(1.1..4.0);
        let q1 = rng.random_range(1.0..1000.0);
        let q0 = -q1 * t0 / t1 * rng.random_range(1.0..2.0);
        let o = carnot_check(q1, t1, q0, t0)?;
        random.record(Some(o.allowed && o.efficiency <= o.carnot_efficiency + 1e-12), || {
            format!("cycle {i}: η = {} > η_C = {}", o.efficiency, o.carnot_efficiency)
        });
        writeln!(body, "random-{i},{},{},{}", row(&[q1, t1, q0, t0]), flag(o.allowed), row(&[o.efficiency, o.carnot_efficiency]))?;
    }
    if job.random_cycles > 0 {
        report.push(random.finish());
    }
    let path = ctx.write("carnot.csv", &body)?;

    let reservoirs = [reservoir("hot", job.reservoir_amount, job.t1)?, reservoir("cold", job.reservoir_amount, job.t0)?];
    let audit = reservoir_cycle_audit(&reservoirs, &[(0, job.q1), (1, job.q0)], 0.0)?;
    let mut abody = String::from("step,reservoir,Q,T_end,dS_bound,dS_exact\n");
    for r in &audit.rows {
        writeln!(abody, "{},{},{}", r.step, r.reservoir, row(&[r.q, r.t_end, r.ds_bound, r.ds_exact]))?;
    }
    writeln!(abody, "total,,,,,{}", fmt_num(audit.total))?;
    let apath = ctx.write("carnot_audit.csv", &abody)?;
    report.push(audit.report.get("reservoir-bound").cloned().expect("audit reports the bound"));
    // finite reservoirs drift in temperature, so the balance of a cycle
    // specified for ideal reservoirs is a diagnostic, not a verdict
    let balance = audit.report.get("entropy-balance").cloned().expect("audit reports the balance");
    let balance = CheckResult {
        verdict: if balance.is_pass() { Verdict::Pass } else { Verdict::Inconclusive },
        ..balance
    };
    let mut full = report.clone();
    full.push(balance);
    let rpath = ctx.write("carnot_report.csv", &full.to_csv())?;
    println!(
        "allowed {} η {} η_C {}",
        outcome.allowed,
        fmt_num(outcome.efficiency),
        fmt_num(outcome.carnot_efficiency)
    );
    println!("wrote {}", path.display());
    println!("wrote {}", apath.display());
    print_report(&full, &rpath);
    Ok(ctx.passed(&report))
}

fn calibrate(ctx: &Ctx) -> anyhow::Result<bool> {
    let cfg = ctx.model()?;
    let job = cfg.calibrate.as_ref().ok_or_else(|| missing("calibrate"))?;
    let base = ctx.common.config.parent().unwrap_or(Path::new("."));
    let path = base.join(&job.network);
    let text = fs::read_to_string(&path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let network = NetworkFile::parse(&text).map_err(load_err)?.build().map_err(load_err)?;
    let table = FTable::compute(&network)?;
    let mut body = String::from("from,to,D,E,F\n");
    for (i, a) in table.ids.iter().enumerate() {
        for (j, b) in table.ids.iter().enumerate() {
            if i != j && (table.d[i][j].is_finite() || table.e[i][j].is_finite() || table.f[i][j].is_finite()) {
                writeln!(body, "{},{},{}", csv_field(a.as_str()), csv_field(b.as_str()), row(&[table.d[i][j], table.e[i][j], table.f[i][j]]))?;
            }
        }
    }
    let tpath = ctx.write("calibration_tables.csv", &body)?;
    let solution = solve_constants(&network, &table)?;
    let mut body = String::from("node,B,interval_lo,interval_hi,status\n");
    for (id, b) in &solution.b {
        let (lo, hi) = solution.intervals.get(id).copied().unwrap_or((f64::NAN, f64::NAN));
        writeln!(body, "{},{},{:?}", csv_field(id.as_str()), row(&[*b, lo, hi]), solution.node_status[id])?;
    }
    let spath = ctx.write("calibration.csv", &body)?;
    let pairs: Vec<_> = table
        .ids
        .iter()
        .flat_map(|a| table.ids.iter().map(move |b| (a.clone(), b.clone())))
        .collect();
    let report = check_f_properties(&network, &table, &pairs);
    let rpath = ctx.write("calibration_report.csv", &report.to_csv())?;
    println!("{} nodes, status {:?}", solution.b.len(), solution.status);
    println!("wrote {}", tpath.display());
    println!("wrote {}", spath.display());
    print_report(&report, &rpath);
    Ok(ctx.passed(&report))
}

fn report(ctx: &Ctx) -> anyhow::Result<bool> {
    let cfg = match &ctx.input {
        Input::Relation(text) => return check_relation(ctx, text, false),
        Input::Model(m) => m,
    };
    let jobs: [(bool, fn(&Ctx) -> anyhow::Result<bool>); 6] = [
        (cfg.check_axioms.is_some(), check_model),
        (cfg.build_entropy.is_some(), build_entropy),
        (cfg.adiabat.is_some(), adiabat),
        (cfg.split.is_some(), split),
        (cfg.carnot.is_some(), carnot),
        (cfg.calibrate.is_some(), calibrate),
    ];
    if !jobs.iter().any(|(on, _)| *on) {
        return Err(usage("config has no job sections"));
    }
    let mut ok = true;
    for (_, run) in jobs.iter().filter(|(on, _)| *on) {
        ok &= run(ctx)?;
    }
    Ok(ok)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::CheckAxioms { common, raw } => {
            let ctx = Ctx::load(common, "check-axioms")?;
            match &ctx.input {
                Input::Relation(text) => check_relation(&ctx, text, raw),
                Input::Model(_) => check_model(&ctx),
            }
        }
        Command::BuildEntropy(c) => build_entropy(&Ctx::load(c, "build-entropy")?),
        Command::Adiabat(c) => adiabat(&Ctx::load(c, "adiabat")?),
        Command::Split(c) => split(&Ctx::load(c, "split")?),
        Command::Carnot(c) => carnot(&Ctx::load(c, "carnot")?),
        Command::Calibrate(c) => calibrate(&Ctx::load(c, "calibrate")?),
        Command::Report(c) => report(&Ctx::load(c, "report")?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.downcast_ref::<Usage>().is_some() { 2 } else { 1 })
        }
    }
}
