use std::io::Write;

use super::Trajectory;
use crate::error::Result;
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrajectoryCsvOptions {
    /// Append `x_i_k`, `y_i_k`, `lambda_i_k` columns for every agent.
    pub dump_agents: bool,
}

/// One row per round: `t, alpha, [per-agent columns], consensus_stddev, mean_residual_norm`.
pub fn write_trajectory_csv<W: Write>(
    out: &mut W,
    traj: &Trajectory,
    spec: &ProblemSpec,
    opts: TrajectoryCsvOptions,
) -> Result<()> {
    let mut header = vec!["t".to_string(), "alpha".to_string()];
    if opts.dump_agents {
        header.extend(agent_dump_columns(spec));
    }
    header.push("consensus_stddev".into());
    header.push("mean_residual_norm".into());
    writeln!(out, "{}", header.join(","))?;

    for r in &traj.rounds {
        let mut row = vec![r.t.to_string(), fmt_f64(r.alpha)];
        if opts.dump_agents {
            row.extend(agent_dump_values(r));
        }
        row.push(fmt_f64(traj.consensus_stddev(r.t)));
        row.push(fmt_f64(traj.mean_residual_norm(spec, r.t)));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn agent_dump_columns(spec: &ProblemSpec) -> Vec<String> {
    let mut cols = Vec::new();
    for (i, con) in spec.constraints.iter().enumerate() {
        cols.extend((0..spec.d_x).map(|k| format!("x_{i}_{k}")));
        cols.extend((0..spec.d_y).map(|k| format!("y_{i}_{k}")));
        cols.extend((0..con.rows()).map(|k| format!("lambda_{i}_{k}")));
    }
    cols
}

pub fn agent_dump_values(r: &super::RoundRecord) -> Vec<String> {
    r.agents
        .iter()
        .flat_map(|a| a.x.iter().chain(&a.y).chain(&a.lambda_next).map(|&v| fmt_f64(v)))
        .collect()
}

/// Shortest representation that parses back to the same bits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
