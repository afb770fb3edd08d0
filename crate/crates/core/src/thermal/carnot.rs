use super::Body;
use crate::error::{Error, Result};
use crate::report::{CheckResult, Report, Tally};
use crate::scalar::Real;
use crate::simple::{temperature_of, StatePoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarnotOutcome<T> {
    /// `Q₁/T₁ + Q₀/T₀ ≤ 0` up to `1e-12`.
    pub allowed: bool,
    pub efficiency: T,
    pub carnot_efficiency: T,
}

/// Heat `q1` drawn from the hot reservoir at `t1`, `q0` from the cold one at
/// `t0` (negative when rejected).
pub fn carnot_check<T: Real>(q1: T, t1: T, q0: T, t0: T) -> Result<CarnotOutcome<T>> {
    if !(t0 > T::zero() && t1 > t0) {
        return Err(Error::Ordering(format!("need 0 < T0 < T1, got T0 = {t0}, T1 = {t1}")));
    }
    if q1.is_zero() {
        return Err(Error::NotApplicable("no heat drawn from the hot reservoir".into()));
    }
    Ok(CarnotOutcome {
        allowed: q1 / t1 + q0 / t0 <= T::lit(1e-12),
        efficiency: (q1 + q0) / q1,
        carnot_efficiency: T::one() - t0 / t1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow<T> {
    pub step: usize,
    pub reservoir: usize,
    /// Heat withdrawn from the reservoir.
    pub q: T,
    pub t_end: T,
    /// `−Q/T_end`, a lower bound on the reservoir's entropy change.
    pub ds_bound: T,
    pub ds_exact: T,
}

#[derive(Debug, Clone)]
pub struct CycleAudit<T> {
    pub rows: Vec<AuditRow<T>>,
    /// Machine plus reservoir entropy change.
    pub total: T,
    pub report: Report,
}

/// Withdraws heat from reservoirs in sequence at fixed work coordinates and
/// checks each step against `ΔS ≥ −Q/T_end` and the whole run against
/// `ΔS_total ≥ 0`.
pub fn reservoir_cycle_audit<T: Real>(
    reservoirs: &[Body<T>],
    steps: &[(usize, T)],
    machine_entropy_change: T,
) -> Result<CycleAudit<T>> {
    let mut states: Vec<StatePoint<T>> = reservoirs.iter().map(|b| b.state.clone()).collect();
    let mut rows = Vec::with_capacity(steps.len());
    let mut bound = Tally::new("reservoir-bound");
    let mut total = machine_entropy_change;
    for (step, &(r, q)) in steps.iter().enumerate() {
        let body = reservoirs
            .get(r)
            .ok_or_else(|| Error::Config(format!("step {step} names reservoir {r}, only {} given", reservoirs.len())))?;
        let model = body.model.as_ref();
        let before = states[r].clone();
        let after = StatePoint::new(before.u - q, before.v.clone());
        if !model.contains(&after) {
            return Err(Error::Infeasible(format!("reservoir {r} leaves its domain at {after}")));
        }
        let entropy = |p: &StatePoint<T>| model.entropy(p).ok_or_else(|| Error::Model(format!("no entropy at {p}")));
        let ds_exact = entropy(&after)? - entropy(&before)?;
        let (t_end, _) = temperature_of(model, &after)?;
        let ds_bound = -q / t_end;
        let tol = T::lit(1e-10) * T::one().max(ds_bound.abs());
        bound.record(Some(ds_exact >= ds_bound - tol), || {
            format!("step {step}: ΔS = {ds_exact} below −Q/T_end = {ds_bound}")
        });
        total = total + ds_exact;
        rows.push(AuditRow { step, reservoir: r, q, t_end, ds_bound, ds_exact });
        states[r] = after;
    }
    let balance = if total >= -T::lit(1e-10) {
        CheckResult::pass("entropy-balance", 1).with_note(format!("ΔS_total = {total}"))
    } else {
        CheckResult::fail("entropy-balance", format!("ΔS_total = {total} < 0"))
    };
    Ok(CycleAudit {
        rows,
        total,
        report: [bound.finish(), balance].into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::simple::IdealGas;

    #[test]
    fn reversible_engine_is_on_the_boundary() {
        let o = carnot_check(100.0, 600.0, -50.0, 300.0).unwrap();
        assert!(o.allowed);
        assert_eq!(o.efficiency, 0.5);
        assert_eq!(o.carnot_efficiency, 0.5);
        assert!(!carnot_check(100.0, 600.0, -40.0, 300.0).unwrap().allowed);
        assert!(matches!(carnot_check(1.0, 300.0, -1.0, 600.0), Err(Error::Ordering(_))));
    }

    #[test]
    fn audit_rows_respect_the_bound() {
        let gas = Arc::new(IdealGas::with_default_domain("r", 10.0f64).unwrap());
        let res = vec![Body::new(gas, StatePoint::uv(300.0, 10.0))];
        let a = reservoir_cycle_audit(&res, &[(0, 5.0), (0, -5.0)], 0.0).unwrap();
        assert_eq!(a.rows.len(), 2);
        assert!(a.report.get("reservoir-bound").unwrap().is_pass());
        assert!(a.total.abs() < 1e-12);
    }
}
