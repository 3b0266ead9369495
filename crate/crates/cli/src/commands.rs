use std::fs;
use std::path::{Path, PathBuf};

use proxy_dynamics::analysis::{
    bound_sweep, check_prop_conditions, delta_loss_sweep, detect_overoptimization, max_rate_sweep, optimal_state_oracle,
    u_costly_sweep, SweepTable, Verdict,
};
use proxy_dynamics::sim::run_simulation;
use proxy_dynamics::{PolicyKind, RobotKind, Termination, Trajectory};
use rayon::prelude::*;

use crate::config::{PolicySection, Scenario};
use crate::report::{
    to_toml, CompareSummary, CurveSummary, OracleSummary, SegmentSummary, SummaryReport, SweepSummary,
};
use crate::svg::{LinePlot, Series};
use crate::CliError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_STUCK: i32 = 2;
pub const EXIT_CHECK_FAIL: i32 = 3;
pub const EXIT_CHECK_INCONCLUSIVE: i32 = 4;

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Overrides the scenario's `output.dir`.
    pub out_dir: Option<PathBuf>,
    pub quiet: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub files: Vec<PathBuf>,
    /// Human-readable report for stdout.
    pub message: String,
}

fn out_dir(scenario: &Scenario, opts: &Options) -> Result<PathBuf, CliError> {
    let dir = opts.out_dir.clone().unwrap_or_else(|| scenario.config.output.dir.clone());
    fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    Ok(dir)
}

fn write(path: PathBuf, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
    files.push(path);
    Ok(())
}

/// Runs the scenario once and assembles its summary.
pub fn simulate(scenario: &Scenario) -> Result<(Trajectory, SummaryReport), CliError> {
    let env = &scenario.env;
    let traj = run_simulation(env, &scenario.sim)?;
    let u_initial = traj.first().utility;
    let u_final = traj.last().utility;
    let over = detect_overoptimization(&traj, u_initial);
    let oracle = optimal_state_oracle(env, scenario.oracle_resolution()).ok().map(|r| OracleSummary {
        u_star: r.value,
        gap: r.value - u_final,
        state: r.state.0,
        kkt_spread: r.kkt_spread,
    });
    let max_proxy_gap = traj
        .samples
        .iter()
        .filter_map(|s| s.proxy_utility.map(|p| (s.utility - p).abs()))
        .fold(0.0, f64::max);
    let (termination, stuck_reason) = match &traj.termination {
        Termination::Stuck(why) => ("stuck".to_string(), Some(why.clone())),
        t => (t.name().to_string(), None),
    };
    let exit_code = if stuck_reason.is_some() { EXIT_STUCK } else { EXIT_OK };
    let summary = SummaryReport {
        scenario: scenario.config.id.clone(),
        robot: scenario.sim.effective_robot().name().to_string(),
        termination,
        stuck_reason,
        exit_code,
        t_final: traj.last().t,
        final_state: traj.final_state().0.clone(),
        u_initial,
        u_final,
        u_min: over.min_utility,
        constraint_final: env.eval_constraint(traj.final_state())?,
        crossing_time: over.crossing_time,
        max_proxy_gap,
        oracle,
        conditions: check_prop_conditions(env),
        segments: traj
            .segments
            .iter()
            .map(|s| SegmentSummary {
                round: s.round,
                t_start: s.t_start,
                t_end: s.t_end,
                delta_u: s.delta_u(),
                proxy: s.proxy.iter().map(|i| i + 1).collect(),
            })
            .collect(),
    };
    Ok((traj, summary))
}

pub fn trajectory_plot(scenario: &Scenario, traj: &Trajectory) -> LinePlot {
    let mut plot = LinePlot::new(&format!("{}: utility vs time", scenario.config.id), "t", "utility");
    plot.push(Series::new("U", traj.samples.iter().map(|s| (s.t, s.utility)).collect()));
    plot.push(Series::new(
        "proxy U",
        traj.samples.iter().filter_map(|s| s.proxy_utility.map(|p| (s.t, p))).collect(),
    ));
    plot
}

pub fn cmd_run(config: &Path, opts: &Options) -> Result<Outcome, CliError> {
    let scenario = Scenario::load(config)?;
    let dir = out_dir(&scenario, opts)?;
    let (traj, summary) = simulate(&scenario)?;
    let id = &scenario.config.id;
    let mut files = Vec::new();
    write(dir.join(format!("{id}_trajectory.csv")), &traj.to_csv_string(), &mut files)?;
    write(dir.join(format!("{id}_summary.toml")), &to_toml(&summary), &mut files)?;
    if scenario.config.output.plot {
        write(dir.join(format!("{id}_plot.svg")), &trajectory_plot(&scenario, &traj).render(), &mut files)?;
    }
    let mut message = format!(
        "{id}: {} at t = {} | U(s0) = {} -> U = {} (min {})",
        summary.termination,
        fmt(summary.t_final),
        fmt(summary.u_initial),
        fmt(summary.u_final),
        fmt(summary.u_min)
    );
    if let Some(t) = summary.crossing_time {
        message.push_str(&format!(" | below U(s0) from t = {}", fmt(t)));
    }
    if let Some(o) = &summary.oracle {
        message.push_str(&format!(" | oracle U* = {}, gap {}", fmt(o.u_star), fmt(o.gap)));
    }
    if let Some(why) = &summary.stuck_reason {
        message.push_str(&format!(" | stuck: {why}"));
    }
    Ok(Outcome { code: summary.exit_code, files, message })
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn subset_label(subset: &[usize]) -> String {
    subset.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(";")
}

/// Utility-generation curves `U(t) - U(s0)` for every proxy of the
/// configured size.
pub fn compare_curves(scenario: &Scenario) -> Result<Vec<(Vec<usize>, Trajectory)>, CliError> {
    let Some(proxy) = scenario.config.policy.fixed_proxy() else {
        return Err(CliError::Invalid("compare needs a fixed-proxy policy to set the proxy size".into()));
    };
    if !matches!(scenario.sim.robot, RobotKind::FixedProxy) || !matches!(scenario.config.policy, PolicySection::Fixed { .. }) {
        return Err(CliError::Invalid("compare needs robot.kind = \"fixed_proxy\" and policy.kind = \"fixed\"".into()));
    }
    let all = subsets(scenario.env.dim(), proxy.len());
    all.into_par_iter()
        .map(|subset| {
            let mut sim = scenario.sim.clone();
            sim.policy = PolicyKind::Fixed { proxy: subset.clone() };
            Ok((subset, run_simulation(&scenario.env, &sim)?))
        })
        .collect()
}

pub fn cmd_compare(config: &Path, opts: &Options) -> Result<Outcome, CliError> {
    let scenario = Scenario::load(config)?;
    let dir = out_dir(&scenario, opts)?;
    let runs = compare_curves(&scenario)?;
    let id = &scenario.config.id;

    let mut csv = String::from("subset,t,u_gen\n");
    let mut plot = LinePlot::new(&format!("{id}: utility generated by each proxy"), "t", "U(t) - U(s0)");
    let mut curves = Vec::new();
    for (subset, traj) in &runs {
        let label = subset_label(subset);
        let u0 = traj.first().utility;
        let points: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.t, s.utility - u0)).collect();
        for &(t, g) in &points {
            csv.push_str(&format!("{label},{},{}\n", fmt(t), fmt(g)));
        }
        let (peak_time, peak_gain) = points.iter().copied().fold((0.0, f64::NEG_INFINITY), |a, p| if p.1 > a.1 { p } else { a });
        let final_gain = points.last().map_or(0.0, |p| p.1);
        curves.push(CurveSummary {
            subset: label.clone(),
            termination: traj.termination.name().to_string(),
            peak_gain,
            peak_time,
            final_gain,
            min_gain: points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
            eventually_negative: peak_gain > 0.0 && final_gain < 0.0,
        });
        plot.push(Series::new(format!("{{{}}}", label.replace(';', ",")), points));
    }
    let summary = CompareSummary {
        scenario: id.clone(),
        proxy_size: runs.first().map_or(0, |r| r.0.len()),
        all_eventually_negative: !curves.is_empty() && curves.iter().all(|c| c.eventually_negative),
        curves,
    };
    let stuck = runs.iter().any(|(_, t)| matches!(t.termination, Termination::Stuck(_)));

    let mut files = Vec::new();
    write(dir.join(format!("{id}_compare.csv")), &csv, &mut files)?;
    write(dir.join(format!("{id}_compare_summary.toml")), &to_toml(&summary), &mut files)?;
    if scenario.config.output.plot {
        write(dir.join(format!("{id}_compare.svg")), &plot.render(), &mut files)?;
    }
    let mut message = format!(
        "{id}: {} proxies of size {}; all eventually negative: {}",
        summary.curves.len(),
        summary.proxy_size,
        summary.all_eventually_negative
    );
    for c in &summary.curves {
        message.push_str(&format!(
            "\n  {{{}}}: peak {} at t = {}, final {}",
            c.subset.replace(';', ","),
            fmt(c.peak_gain),
            fmt(c.peak_time),
            fmt(c.final_gain)
        ));
    }
    Ok(Outcome { code: if stuck { EXIT_STUCK } else { EXIT_OK }, files, message })
}

pub fn cmd_check(config: &Path, _opts: &Options) -> Result<Outcome, CliError> {
    let scenario = Scenario::load(config)?;
    let report = check_prop_conditions(&scenario.env);
    let code = match report.overall {
        Verdict::Pass => EXIT_OK,
        Verdict::Fail => EXIT_CHECK_FAIL,
        Verdict::Inconclusive => EXIT_CHECK_INCONCLUSIVE,
    };
    Ok(Outcome { code, files: Vec::new(), message: format!("{}: {report}", scenario.config.id).trim_end().to_string() })
}

/// Parses `--values`: comma-separated numbers.
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| CliError::Usage(format!("bad sweep value {s:?}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(values)
}

pub fn sweep(scenario: &Scenario, param: &str, values: &[f64]) -> Result<SweepTable, CliError> {
    if values.is_empty() {
        return Err(CliError::Usage("no sweep values given".into()));
    }
    let env = &scenario.env;
    let levels = &scenario.config.analysis.u_levels;
    let table = match param {
        "bounds.unmentioned" => u_costly_sweep(env, &scenario.sim, values, levels)?,
        "delta" => delta_loss_sweep(env, &scenario.sim, values)?,
        "max_rate" | "eps_rate" => max_rate_sweep(env, &scenario.sim, values)?,
        p => match p.strip_prefix("bounds.").and_then(|i| i.parse::<usize>().ok()) {
            Some(i) if (1..=env.dim()).contains(&i) => bound_sweep(env, &scenario.sim, i - 1, values, levels)?,
            _ => {
                return Err(CliError::Usage(format!(
                    "unknown sweep parameter {p:?}; expected bounds.unmentioned, bounds.<1..={}>, delta or max_rate",
                    env.dim()
                )))
            }
        },
    };
    Ok(table)
}

pub fn cmd_sweep(config: &Path, param: Option<&str>, values: Option<&str>, opts: &Options) -> Result<Outcome, CliError> {
    let scenario = Scenario::load(config)?;
    let analysis = &scenario.config.analysis;
    let param = param
        .map(str::to_string)
        .or_else(|| analysis.sweep_param.clone())
        .ok_or_else(|| CliError::Usage("no sweep parameter: pass --param or set analysis.sweep_param".into()))?;
    let values = match values {
        Some(text) => parse_values(text)?,
        None => analysis.sweep_values.clone(),
    };
    let table = sweep(&scenario, &param, &values)?;
    let dir = out_dir(&scenario, opts)?;
    let id = &scenario.config.id;
    let mut files = Vec::new();
    write(dir.join(format!("{id}_sweep.csv")), &table.to_csv_string(), &mut files)?;
    let summary = SweepSummary { scenario: id.clone(), sweep: table };
    write(dir.join(format!("{id}_sweep_summary.toml")), &to_toml(&summary), &mut files)?;
    let table = summary.sweep;
    if scenario.config.output.plot {
        let mut plot = LinePlot::new(&format!("{id}: sweep over {param}"), &param, "utility");
        plot.push(Series::new("final U", table.rows.iter().map(|r| (r.value, r.final_u)).collect()));
        plot.push(Series::new("min U", table.rows.iter().map(|r| (r.value, r.min_u)).collect()));
        write(dir.join(format!("{id}_sweep.svg")), &plot.render(), &mut files)?;
    }
    let mut message = format!("{id}: sweep over {param} ({} rows)", table.rows.len());
    for r in &table.rows {
        message.push_str(&format!(
            "\n  {} -> final U {}, min U {}, loss {} [{}]",
            fmt(r.value),
            fmt(r.final_u),
            fmt(r.min_u),
            fmt(r.loss),
            r.status
        ));
    }
    if param.starts_with("bounds.") {
        message.push_str(&format!("\n  final U strictly decreasing: {}", table.strictly_decreasing));
        if table.advisory {
            message.push_str(" (advisory: the environment does not pass the sufficient conditions)");
        }
    }
    let failed = table.rows.iter().any(|r| !r.is_ok());
    Ok(Outcome { code: if failed { EXIT_STUCK } else { EXIT_OK }, files, message })
}

fn fmt(x: f64) -> String {
    proxy_dynamics::format::fmt_g(x, 6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_counts() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(2, 1), vec![vec![0], vec![1]]);
        assert_eq!(subsets(4, 2)[0], vec![0, 1]);
        assert_eq!(subsets(5, 3).len(), 10);
    }

    #[test]
    fn values_parse() {
        assert_eq!(parse_values("-0.9, -0.99,-0.999").unwrap(), vec![-0.9, -0.99, -0.999]);
        assert!(parse_values("").unwrap().is_empty());
        assert!(parse_values("1,x").is_err());
    }
}
