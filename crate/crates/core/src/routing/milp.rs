//! Writes a task's mixed-integer formulation in CPLEX LP text form so an
//! external solver can cross-validate the enumeration oracle.
//!
//! Node 0 is the depot, nodes 1..=n the jobs in task order. Variables:
//! `y_i_j_v`(arc i->j driven by vehicle v), `z_i` (arrival), `w_i` (wait),
//! `d_i` (delay). Time propagates along used arcs with a big-M disjunction;
//! return arcs to the depot price travel but do not propagate time, and no
//! service time is charged at the depot, matching the forward recursion
//! used everywhere else. Jobs with an unbounded deadline simply omit the
//! delay constraint.

use std::fmt::Write as _;

use crate::routing::{RoutingError, RoutingTask, TaskView};
use crate::scalar::Scalar;

/// Renders the task as an LP document. Deterministic for a given task.
pub fn export_milp<S: Scalar>(task: &RoutingTask<S>) -> Result<String, RoutingError> {
    task.validate()?;
    let view = TaskView::new(task);
    let n = task.jobs.len();
    let n_v = task.params.n_vehicles;
    let s = task.params.service_duration.as_f64();
    let beta = task.params.beta.as_f64();

    // Big-M: horizon bound covering any feasible schedule.
    let max_leg = view
        .dist
        .iter()
        .flatten()
        .map(|d| d.as_f64())
        .fold(0.0f64, f64::max);
    let max_deadline = task
        .jobs
        .iter()
        .map(|j| j.window.1.as_f64())
        .filter(|b| b.is_finite())
        .fold(0.0f64, f64::max);
    let big_m = max_deadline + (n as f64 + 1.0) * (s + max_leg) + 1.0;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ soft-time-window routing task: {n} jobs, {n_v} vehicles"
    );
    let _ = writeln!(out, "\\ objective = travel + wait + {beta} * delay");
    out.push_str("Minimize\n obj:");
    let mut first = true;
    let mut term = |out: &mut String, coeff: f64, var: String| {
        if coeff == 0.0 {
            return;
        }
        let sign = if first {
            first = false;
            " "
        } else {
            " + "
        };
        let _ = write!(out, "{sign}{coeff} {var}");
    };
    for v in 1..=n_v {
        for i in 0..=n {
            for j in 0..=n {
                if i != j {
                    term(&mut out, view.dist[i][j].as_f64(), format!("y_{i}_{j}_{v}"));
                }
            }
        }
    }
    for i in 1..=n {
        term(&mut out, 1.0, format!("w_{i}"));
    }
    for i in 1..=n {
        term(&mut out, beta, format!("d_{i}"));
    }
    out.push_str("\nSubject To\n");

    // Each job is visited exactly once.
    for j in 1..=n {
        let _ = write!(out, " visit_{j}:");
        for v in 1..=n_v {
            for i in 0..=n {
                if i != j {
                    let _ = write!(out, " + y_{i}_{j}_{v}");
                }
            }
        }
        out.push_str(" = 1\n");
    }

    // Each vehicle leaves the depot at most once and returns if it leaves.
    for v in 1..=n_v {
        let _ = write!(out, " depot_balance_{v}:");
        for i in 1..=n {
            let _ = write!(out, " + y_{i}_0_{v}");
        }
        for j in 1..=n {
            let _ = write!(out, " - y_0_{j}_{v}");
        }
        out.push_str(" = 0\n");
        let _ = write!(out, " depot_use_{v}:");
        for j in 1..=n {
            let _ = write!(out, " + y_0_{j}_{v}");
        }
        out.push_str(" <= 1\n");
    }

    // Flow conservation at each job for each vehicle.
    for v in 1..=n_v {
        for i in 1..=n {
            let _ = write!(out, " flow_{i}_{v}:");
            for j in 0..=n {
                if j != i {
                    let _ = write!(out, " + y_{i}_{j}_{v}");
                }
            }
            for j in 0..=n {
                if j != i {
                    let _ = write!(out, " - y_{j}_{i}_{v}");
                }
            }
            out.push_str(" = 0\n");
        }
    }

    // Time propagation along used arcs into jobs (not back into the depot):
    // z_j >= z_i + s_i + D(i,j) + w_i - M (1 - y_i_j_v), with s_0 = 0.
    for v in 1..=n_v {
        for i in 0..=n {
            for j in 1..=n {
                if i == j {
                    continue;
                }
                let service = if i == 0 { 0.0 } else { s };
                let rhs = service + view.dist[i][j].as_f64() - big_m;
                if i == 0 {
                    // z_0 = 0 and w_0 = 0 are substituted away.
                    let _ = writeln!(
                        out,
                        " time_{i}_{j}_{v}: z_{j} - {big_m} y_{i}_{j}_{v} >= {rhs}"
                    );
                } else {
                    let _ = writeln!(
                        out,
                        " time_{i}_{j}_{v}: z_{j} - z_{i} - w_{i} - {big_m} y_{i}_{j}_{v} >= {rhs}"
                    );
                }
            }
        }
    }

    // Soft windows: z_i + w_i >= a_i and z_i - d_i <= b_i (when finite).
    for (idx, job) in task.jobs.iter().enumerate() {
        let i = idx + 1;
        let (a, b) = (job.window.0.as_f64(), job.window.1.as_f64());
        let _ = writeln!(out, " win_lo_{i}: z_{i} + w_{i} >= {a}");
        if b.is_finite() {
            let _ = writeln!(out, " win_hi_{i}: z_{i} - d_{i} <= {b}");
        }
    }

    out.push_str("Bounds\n");
    for i in 1..=n {
        let _ = writeln!(out, " 0 <= z_{i} <= {big_m}");
        let _ = writeln!(out, " 0 <= w_{i} <= {big_m}");
        let _ = writeln!(out, " 0 <= d_{i} <= {big_m}");
    }
    out.push_str("Binaries\n");
    for v in 1..=n_v {
        for i in 0..=n {
            for j in 0..=n {
                if i != j {
                    let _ = writeln!(out, " y_{i}_{j}_{v}");
                }
            }
        }
    }
    out.push_str("End\n");
    Ok(out)
}
