use std::path::{Path, PathBuf};
use std::thread;

use hamflow_core::dynamics::{integrate, FlowField};
use hamflow_core::hierarchy::{
    conditioning_ratio, hierarchy_rows, is_ill_conditioned, multiplicative_hamiltonian,
    multiplicative_lagrangian, multiplicative_momentum, reduction_residual, truncated_series,
    ReductionKind, SeriesKind, CONDITIONING_LIMIT,
};
use hamflow_core::{additive_hamiltonian, Lambda, Trajectory};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Cell, Table};

/// Files a command wrote plus anything worth telling the user.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    /// Set when the command finished its output but still has to fail.
    pub failure: Option<CliError>,
}

pub fn cmd_eval(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let eval = cfg.eval.as_ref().expect("checked by require_task");
    let (v, params) = (&cfg.system.potential, &cfg.system.params);
    let mut outcome = Outcome::default();

    let mut terms = Table::new(["state", "x", "p", "j", "L_j", "H_j", "p_j"]);
    for (i, s) in eval.states.iter().enumerate() {
        for row in hierarchy_rows(eval.truncation, *s, v, params) {
            terms.push(vec![
                i.into(),
                s.x.into(),
                s.p.into(),
                row.j.into(),
                row.lagrangian.into(),
                row.hamiltonian.into(),
                row.momentum.into(),
            ]);
        }
    }
    outcome.files.push(terms.write(out, "eval", cfg.format)?);

    if !params.lambda().is_finite() {
        outcome
            .warnings
            .push("lambda is infinite: closed forms reduce to the additive system, closed_forms not written".into());
        return Ok(outcome);
    }
    let mut closed = Table::new([
        "state",
        "x",
        "p",
        "H_N",
        "L_lambda",
        "H_lambda",
        "p_lambda",
        "L_series",
        "H_series",
        "p_series",
        "L_truncation_residual",
        "H_truncation_residual",
        "p_truncation_residual",
        "conditioning",
        "ill_conditioned",
    ]);
    let ctx = |e| CliError::core("eval", e);
    for (i, s) in eval.states.iter().enumerate() {
        let kinetic = s.to_kinetic(params.mass());
        let l = multiplicative_lagrangian(kinetic, v, params).map_err(ctx)?;
        let h = multiplicative_hamiltonian(*s, v, params).map_err(ctx)?;
        let p = multiplicative_momentum(kinetic, v, params).map_err(ctx)?;
        let series = |kind| truncated_series(eval.truncation, kind, *s, v, params).map_err(ctx);
        let (ls, hs, ps) = (
            series(SeriesKind::Lagrangian)?,
            series(SeriesKind::Hamiltonian)?,
            series(SeriesKind::Momentum)?,
        );
        let ratio = conditioning_ratio(*s, v, params).map_err(ctx)?;
        let ill = is_ill_conditioned(*s, v, params).map_err(ctx)?;
        if ill {
            outcome.warnings.push(format!(
                "state {i}: H_N/m\u{3bb}\u{b2} = {ratio:.3} exceeds {CONDITIONING_LIMIT}; partial sums lose precision"
            ));
        }
        closed.push(vec![
            i.into(),
            s.x.into(),
            s.p.into(),
            additive_hamiltonian(*s, v, params).into(),
            l.into(),
            h.into(),
            p.into(),
            ls.into(),
            hs.into(),
            ps.into(),
            (ls - l).abs().into(),
            (hs - h).abs().into(),
            (ps - p).abs().into(),
            ratio.into(),
            ill.into(),
        ]);
    }
    outcome
        .files
        .push(closed.write(out, "closed_forms", cfg.format)?);
    Ok(outcome)
}

fn trajectory_table(traj: &Trajectory, field: &FlowField) -> Result<Table, CliError> {
    let (v, params) = (field.potential(), field.params());
    let mut table = Table::new(["t", "x", "p", "H_N", "H_lambda"]);
    for s in traj.samples() {
        let hn = additive_hamiltonian(s.state, v, params);
        let hl = match params.lambda() {
            Lambda::Infinite => hn,
            Lambda::Finite(_) => multiplicative_hamiltonian(s.state, v, params)
                .map_err(|e| CliError::core("integrate", e))?,
        };
        table.push(vec![
            s.t.into(),
            s.state.x.into(),
            s.state.p.into(),
            hn.into(),
            hl.into(),
        ]);
    }
    Ok(table)
}

/// Integrates every requested flow on its own thread; files are written
/// afterwards in configuration order.
pub fn cmd_integrate(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let job = cfg.integrate.as_ref().expect("checked by require_task");
    let fields = job
        .flows
        .iter()
        .map(|&kind| {
            FlowField::new(kind, cfg.system.potential.clone(), cfg.system.params)
                .map_err(|e| CliError::core(format!("flow {kind}"), e))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let tables: Vec<Result<Table, CliError>> = thread::scope(|scope| {
        let handles: Vec<_> = fields
            .iter()
            .map(|field| {
                scope.spawn(move || {
                    let traj = integrate(field, job.start, &job.integrator)
                        .map_err(|e| CliError::core(format!("flow {}", field.kind()), e))?;
                    trajectory_table(&traj, field)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("integration thread panicked"))
            .collect()
    });

    let mut outcome = Outcome::default();
    for (field, table) in fields.iter().zip(tables) {
        let stem = format!("trajectory_{}", field.kind());
        outcome.files.push(table?.write(out, &stem, cfg.format)?);
    }
    Ok(outcome)
}

/// Per-level share of the λ-flow rate, `(-E/mλ²)^{j-1}/(j-1)!`; summed over
/// `j` it gives `exp(-E/mλ²)`.
pub fn weighted_rate(j: u32, energy: f64, scale: f64) -> f64 {
    let u = -energy / scale;
    (1..j).fold(1.0, |acc, k| acc * u / k as f64)
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let sweep = cfg.sweep.as_ref().expect("checked by require_task");
    let v = &cfg.system.potential;
    let mut columns: Vec<String> = ["lambda", "H_residual", "H_bound", "L_residual"]
        .map(String::from)
        .to_vec();
    columns.extend(sweep.hierarchy_orders.iter().map(|j| format!("rate_j{j}")));
    columns.push("rate_multiplicative".into());
    let mut table = Table::new(columns);

    let mut outcome = Outcome::default();
    let energy = additive_hamiltonian(sweep.state, v, &cfg.system.params);
    let mut previous: Option<(f64, f64)> = None;
    for &lambda in &sweep.lambdas {
        let params = cfg
            .system
            .params
            .with_lambda(Lambda::Finite(lambda))
            .map_err(|e| CliError::core("sweep", e))?;
        let scale = params.energy_scale().expect("finite lambda");
        let ctx = |e| CliError::core(format!("sweep at lambda = {lambda}"), e);
        let h_res =
            reduction_residual(ReductionKind::Hamiltonian, sweep.state, v, &params).map_err(ctx)?;
        let l_res =
            reduction_residual(ReductionKind::Lagrangian, sweep.state, v, &params).map_err(ctx)?;
        let bound = energy * energy / (2.0 * scale);
        if energy >= 0.0 && h_res > bound {
            outcome.warnings.push(format!(
                "lambda = {lambda}: H residual {h_res:e} exceeds H_N²/2mλ² = {bound:e}"
            ));
        }
        if let Some((h_prev, l_prev)) = previous {
            if h_res > h_prev || l_res > l_prev {
                outcome.warnings.push(format!(
                    "lambda = {lambda}: reduction residual did not decrease"
                ));
            }
        }
        previous = Some((h_res, l_res));
        let mut row: Vec<Cell> = vec![lambda.into(), h_res.into(), bound.into(), l_res.into()];
        row.extend(
            sweep
                .hierarchy_orders
                .iter()
                .map(|&j| weighted_rate(j, energy, scale).into()),
        );
        row.push((-energy / scale).exp().into());
        table.push(row);
    }
    outcome.files.push(table.write(out, "sweep", cfg.format)?);
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_rates_sum_to_the_multiplicative_rate() {
        let (e, c) = (1.3, 4.0);
        assert_eq!(weighted_rate(1, e, c), 1.0);
        let total: f64 = (1..40).map(|j| weighted_rate(j, e, c)).sum();
        assert!((total - (-e / c).exp()).abs() < 1e-15);
    }
}
