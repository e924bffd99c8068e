//! Subcommand bodies: run a study, write its CSV files, return a short
//! human-readable summary.

use std::path::{Path, PathBuf};

use flexlink_core::closed_loop::{Sample, Trace};
use flexlink_learn::checkpoint::{Checkpoint, CheckpointError};
use flexlink_learn::eval;
use flexlink_learn::planner::Planner;
use flexlink_learn::sac::SacError;
use flexlink_learn::train::{self, EpisodeLog, TrainError, TrainOrCallback, Trainer};

use crate::config::{ExperimentConfig, PlannerKind};
use crate::error::HarnessError;
use crate::experiments;
use crate::metrics;
use crate::output::{ensure_dir, fmt, path_in, read_csv, Provenance, Table};
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Modes,
    Simulate,
    Compare,
    Train,
    Uncertainty,
    Lyapunov,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Modes => "modes",
            Self::Simulate => "simulate",
            Self::Compare => "compare",
            Self::Train => "train",
            Self::Uncertainty => "uncertainty",
            Self::Lyapunov => "lyapunov",
        }
    }
}

/// Command-line overrides, applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub checkpoint: Option<PathBuf>,
    pub episodes: Option<usize>,
}

pub fn resolve(config: Option<&Path>, ov: &Overrides) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(p) = &ov.checkpoint {
        cfg.planner.checkpoint = Some(p.clone());
    }
    if let Some(n) = ov.episodes {
        cfg.sac.training_episodes = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<String, HarnessError> {
    ensure_dir(out)?;
    let prov = Provenance { command: cmd.name().into(), config_hash: cfg.hash(), seed: cfg.seed };
    match cmd {
        Command::Modes => modes(cfg, out, &prov),
        Command::Simulate => simulate(cfg, out, &prov),
        Command::Compare => compare(cfg, out, &prov),
        Command::Train => train_planner(cfg, out),
        Command::Uncertainty => uncertainty(cfg, out, &prov),
        Command::Lyapunov => lyapunov(cfg, out, &prov),
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, HarnessError> {
    Checkpoint::load(path).map_err(|e| match e {
        CheckpointError::Io(e) => HarnessError::io(path, e),
        CheckpointError::Format(m) => HarnessError::Validation(format!("{}: not a usable checkpoint: {m}", path.display())),
    })
}

fn required_checkpoint(cfg: &ExperimentConfig, what: &str) -> Result<Checkpoint, HarnessError> {
    match &cfg.planner.checkpoint {
        Some(p) => load_checkpoint(p),
        None => Err(HarnessError::Validation(format!("{what} needs a trained planner: pass --checkpoint or set planner.checkpoint"))),
    }
}

fn modes(cfg: &ExperimentConfig, out: &Path, prov: &Provenance) -> Result<String, HarnessError> {
    let r = experiments::modes(cfg)?;
    let ei = cfg.beam.ei();
    let rho_a = cfg.beam.rho_a();
    let mut t = Table::new(&["mode", "beta", "beta_L", "omega", "freq_hz", "determinant", "bc_phi0", "bc_dphi0", "bc_moment_L", "bc_shear_L", "norm"]);
    let mut summary = String::new();
    for (i, c) in r.checks.iter().enumerate() {
        let omega = c.beta * c.beta * (ei / rho_a).sqrt();
        t.push(vec![
            (i + 1).to_string(),
            fmt(c.beta),
            fmt(c.beta * cfg.beam.length),
            fmt(omega),
            fmt(omega / std::f64::consts::TAU),
            fmt(c.determinant),
            fmt(c.boundary[0]),
            fmt(c.boundary[1]),
            fmt(c.boundary[2]),
            fmt(c.boundary[3]),
            fmt(c.norm),
        ]);
        summary += &format!("mode {}: beta = {:.6} 1/m, f = {:.4} Hz\n", i + 1, c.beta, omega / std::f64::consts::TAU);
    }
    t.write(&path_in(out, "modes.csv"), prov)?;
    let mut g = Table::new(&["i", "j", "weighted", "l2"]);
    for (i, row) in r.weighted_gram.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            g.push(vec![(i + 1).to_string(), (j + 1).to_string(), fmt(*w), fmt(r.l2_gram[i][j])]);
        }
    }
    g.write(&path_in(out, "gram.csv"), prov)?;
    summary += &format!("largest weighted off-diagonal: {:.3e}", r.max_off_diagonal);
    Ok(summary)
}

pub const TRAJECTORY_COLUMNS: [&str; 10] = ["t", "theta_d", "theta_dot_d", "theta", "theta_dot", "tip", "tip_dot", "torque", "energy_t", "energy_u"];

pub fn trajectory_table(samples: &[Sample]) -> Table {
    let mut t = Table::new(&TRAJECTORY_COLUMNS);
    for s in samples {
        t.push([s.t, s.theta_d, s.theta_dot_d, s.theta, s.theta_dot, s.tip, s.tip_dot, s.torque, s.energy_t, s.energy_u].map(fmt).to_vec());
    }
    t
}

fn write_svg(out: &Path, name: &str, body: String) -> Result<(), HarnessError> {
    let p = path_in(out, name);
    std::fs::write(&p, body).map_err(|e| HarnessError::io(&p, e))
}

fn simulate(cfg: &ExperimentConfig, out: &Path, prov: &Provenance) -> Result<String, HarnessError> {
    let planner = match cfg.planner.kind {
        PlannerKind::Cpt => None,
        PlannerKind::Drl => Some(Planner::from_checkpoint(&required_checkpoint(cfg, "planner.kind = \"drl\"")?)),
    };
    let planner_name = if planner.is_some() { "drl" } else { "cpt" };
    let mut table = Table::new(&["controller", "planner", "angle_rmse_deg", "tip_peak", "tip_rate_rmse", "torque_peak", "saturations", "samples"]);
    let mut summary = String::new();
    for &kind in &cfg.controller.run {
        let trace: Trace = match &planner {
            None => experiments::run_schedule(cfg, kind, cfg.beam)?,
            Some(p) => experiments::run_planned(cfg, kind, p, cfg.sac.time_step)?,
        };
        let name = format!("trajectory_{}.csv", kind.name());
        let path = path_in(out, &name);
        trajectory_table(&trace.samples).write(&path, prov)?;
        // metrics come from the file as written
        let m = metrics::from_csv(&read_csv(&path)?)?;
        table.push(vec![
            kind.name().into(),
            planner_name.into(),
            fmt(m.angle_rmse_deg),
            fmt(m.tip_peak),
            fmt(m.tip_rate_rmse),
            fmt(m.torque_peak),
            trace.saturations.to_string(),
            m.samples.to_string(),
        ]);
        summary += &format!(
            "{}: angle RMSE {:.4} deg, tip peak {:.4} m, tip-rate RMSE {:.4} m/s, torque peak {:.0} N·m\n",
            kind.name(),
            m.angle_rmse_deg,
            m.tip_peak,
            m.tip_rate_rmse,
            m.torque_peak
        );
        if cfg.output.svg && !trace.samples.is_empty() {
            let col = |f: fn(&Sample) -> f64| trace.samples.iter().map(f).collect::<Vec<_>>();
            let t = col(|s| s.t);
            let (th, thd) = (col(|s| s.theta.to_degrees()), col(|s| s.theta_d.to_degrees()));
            write_svg(out, &format!("angle_{}.svg", kind.name()), svg::line_chart("joint angle (deg)", "t (s)", &t, &[("theta_d", &thd), ("theta", &th)]))?;
            write_svg(out, &format!("tip_{}.svg", kind.name()), svg::line_chart("tip deflection (m)", "t (s)", &t, &[("omega(L)", &col(|s| s.tip))]))?;
        }
    }
    table.write(&path_in(out, "metrics.csv"), prov)?;
    Ok(summary.trim_end().to_string())
}

fn compare(cfg: &ExperimentConfig, out: &Path, prov: &Provenance) -> Result<String, HarnessError> {
    let ck = required_checkpoint(cfg, "compare")?;
    let rows = experiments::compare(cfg, &ck)?;
    let mut t = Table::new(&[
        "pair",
        "theta0_deg",
        "theta_t_deg",
        "pde_drl_tip_rate_rmse",
        "pde_cpt_tip_rate_rmse",
        "pid_cpt_tip_rate_rmse",
        "pde_drl_final_error_deg",
        "pde_drl_reached",
        "reduction",
    ]);
    let results: Vec<eval::PairResult> = rows.iter().map(|r| eval::PairResult { pair: r.pair, planned: r.pde_drl, cubic: r.pde_cpt }).collect();
    for (i, (r, pr)) in rows.iter().zip(&results).enumerate() {
        t.push(vec![
            i.to_string(),
            fmt(r.pair.theta0.to_degrees()),
            fmt(r.pair.theta_t.to_degrees()),
            fmt(r.pde_drl.tip_rate_rmse),
            fmt(r.pde_cpt.tip_rate_rmse),
            fmt(r.pid_cpt.tip_rate_rmse),
            fmt(r.pde_drl.final_error.to_degrees()),
            r.pde_drl.reached.to_string(),
            fmt(pr.reduction()),
        ]);
    }
    t.write(&path_in(out, "compare.csv"), prov)?;
    let s = eval::summarize(&results);
    let mean = |f: fn(&experiments::CompareRow) -> f64| rows.iter().map(f).sum::<f64>() / rows.len() as f64;
    let mut st = Table::new(&["metric", "value"]);
    let entries = [
        ("pairs", s.pairs as f64),
        ("drl_better_than_cpt", s.better as f64),
        ("median_reduction", s.median_reduction),
        ("drl_reach_rate", s.reach_rate),
        ("mean_pde_drl_tip_rate_rmse", mean(|r| r.pde_drl.tip_rate_rmse)),
        ("mean_pde_cpt_tip_rate_rmse", mean(|r| r.pde_cpt.tip_rate_rmse)),
        ("mean_pid_cpt_tip_rate_rmse", mean(|r| r.pid_cpt.tip_rate_rmse)),
    ];
    for (k, v) in entries {
        st.push(vec![k.into(), fmt(v)]);
    }
    st.write(&path_in(out, "compare_summary.csv"), prov)?;
    Ok(format!(
        "PDE+DRL beats PDE+CPT on {}/{} pairs, median tip-rate reduction {:.2}x, reach rate {:.2}",
        s.better, s.pairs, s.median_reduction, s.reach_rate
    ))
}

pub const TRAINING_LOG_COLUMNS: [&str; 9] =
    ["episode", "steps", "return", "reach_flag", "failure_flag", "avg_tip_rate", "critic_loss", "policy_loss", "temperature"];

fn log_row(l: &EpisodeLog) -> Vec<String> {
    vec![
        l.episode.to_string(),
        l.steps.to_string(),
        fmt(l.ret),
        (l.reach_flag as u8).to_string(),
        (l.failure_flag as u8).to_string(),
        fmt(l.avg_tip_rate),
        fmt(l.critic_loss),
        fmt(l.policy_loss),
        fmt(l.temperature),
    ]
}

pub const CHECKPOINT_FILE: &str = "checkpoint.ckpt";
pub const FAILED_CHECKPOINT_FILE: &str = "checkpoint_nonfinite.ckpt";

fn save(ck: &Checkpoint, path: &Path) -> Result<(), HarnessError> {
    ck.save(path).map_err(|e| HarnessError::io(path, e))
}

/// Trains from scratch, or resumes from `planner.checkpoint`. Rows of an
/// existing log at or past the resume point are dropped, so an interrupted
/// and resumed run leaves the same log as an uninterrupted one.
fn train_planner(cfg: &ExperimentConfig, out: &Path) -> Result<String, HarnessError> {
    let log_path = path_in(out, "training_log.csv");
    let ck_path = path_in(out, CHECKPOINT_FILE);
    let to_err = |e: TrainError| HarnessError::Training(e.to_string());
    let (mut trainer, mut table, prov) = match &cfg.planner.checkpoint {
        None => {
            let trainer = Trainer::new(cfg.sac.clone(), cfg.beam, cfg.seed).map_err(to_err)?;
            (trainer, Table::new(&TRAINING_LOG_COLUMNS), train_provenance(cfg, &cfg.sac, cfg.seed))
        }
        Some(p) => {
            let ck = load_checkpoint(p)?;
            let differing = sac_differences(&ck.config, &cfg.sac);
            if !differing.is_empty() {
                return Err(HarnessError::Training(format!("{} was trained with different settings for {}", p.display(), differing.join(", "))));
            }
            let trainer = Trainer::resume(ck, Some(cfg.sac.training_episodes)).map_err(to_err)?;
            let prov = train_provenance(cfg, trainer.config(), trainer.checkpoint("").seed);
            let mut table = Table::new(&TRAINING_LOG_COLUMNS);
            if log_path.exists() {
                let old = read_csv(&log_path)?;
                if old.table.header == table.header {
                    table.rows = old.table.rows.into_iter().filter(|r| r[0].parse::<usize>().is_ok_and(|e| e < trainer.episode())).collect();
                }
            }
            (trainer, table, prov)
        }
    };
    let every = trainer.config().checkpoint_every.max(1);
    let start = trainer.episode();
    let result = train::train(&mut trainer, |t, l| -> Result<(), HarnessError> {
        table.push(log_row(l));
        table.write(&log_path, &prov)?;
        if t.episode() % every == 0 {
            save(&t.checkpoint("periodic"), &ck_path)?;
        }
        if l.episode % 10 == 9 {
            eprintln!("episode {:5}: return {:9.2}, reach {}, tip rate {:.3e}", l.episode + 1, l.ret, l.reach_flag as u8, l.avg_tip_rate);
        }
        Ok(())
    });
    match result {
        Ok(_) => {}
        Err(TrainOrCallback::Callback(e)) => return Err(e),
        Err(TrainOrCallback::Train(e)) => {
            if matches!(e, TrainError::Sac(SacError::NonFinite { .. })) {
                let dump = path_in(out, FAILED_CHECKPOINT_FILE);
                save(&trainer.checkpoint("non-finite loss"), &dump)?;
                table.write(&log_path, &prov)?;
                return Err(HarnessError::Training(format!("{e}; state written to {}", dump.display())));
            }
            return Err(to_err(e));
        }
    }
    table.write(&log_path, &prov)?;
    save(&trainer.checkpoint("final"), &ck_path)?;
    Ok(format!("trained episodes {}..{}, checkpoint {}", start, trainer.episode(), ck_path.display()))
}

/// Keys other than the episode count whose values differ.
fn sac_differences(a: &flexlink_learn::SacConfig, b: &flexlink_learn::SacConfig) -> Vec<String> {
    let (a, b) = (serde_json::to_value(a).expect("config serializes"), serde_json::to_value(b).expect("config serializes"));
    let (Some(a), Some(b)) = (a.as_object(), b.as_object()) else { return vec![] };
    a.iter().filter(|(k, v)| k.as_str() != "training_episodes" && b.get(*k) != Some(v)).map(|(k, _)| k.clone()).collect()
}

/// The log's provenance ignores where a run was resumed from, so resumed and
/// uninterrupted runs stamp identical headers.
fn train_provenance(cfg: &ExperimentConfig, sac: &flexlink_learn::SacConfig, seed: u64) -> Provenance {
    let mut c = cfg.clone();
    c.planner.checkpoint = None;
    c.sac = sac.clone();
    c.seed = seed;
    Provenance { command: "train".into(), config_hash: c.hash(), seed }
}

fn uncertainty(cfg: &ExperimentConfig, out: &Path, prov: &Provenance) -> Result<String, HarnessError> {
    let cells = experiments::uncertainty_sweep(cfg)?;
    let nominal = match cells.iter().find(|c| c.percent == 0.0).and_then(|c| c.metrics) {
        Some(m) => m,
        None => metrics::from_samples(&experiments::run_schedule(cfg, crate::config::ControllerKind::Pde, cfg.beam)?.samples),
    };
    let mut t = Table::new(&["percent", "angle_rmse_deg", "tip_peak", "tip_rate_rmse", "torque_peak", "saturations", "angle_rmse_ratio", "status"]);
    let mut summary = String::new();
    for c in &cells {
        let m = c.metrics;
        let get = |f: fn(&metrics::MetricsReport) -> f64| m.as_ref().map_or(f64::INFINITY, f);
        let ratio = get(|m| m.angle_rmse_deg) / nominal.angle_rmse_deg;
        t.push(vec![
            fmt(c.percent),
            fmt(get(|m| m.angle_rmse_deg)),
            fmt(get(|m| m.tip_peak)),
            fmt(get(|m| m.tip_rate_rmse)),
            fmt(get(|m| m.torque_peak)),
            c.saturations.to_string(),
            fmt(ratio),
            c.status.clone(),
        ]);
        summary += &format!("{:+}%: angle RMSE {:.4} deg ({:.2}x nominal) [{}]\n", c.percent, get(|m| m.angle_rmse_deg), ratio, c.status);
    }
    t.write(&path_in(out, "uncertainty.csv"), prov)?;
    Ok(summary.trim_end().to_string())
}

fn lyapunov(cfg: &ExperimentConfig, out: &Path, prov: &Provenance) -> Result<String, HarnessError> {
    let rate = experiments::certified_rate(cfg)?;
    let mut st = Table::new(&["target_deg", "lambda", "lambda1", "lambda2", "lambda3", "v0", "worst_ratio", "violations", "terminal_error", "within_tolerance"]);
    let mut summary = format!("certified rate lambda = {:.4} 1/s\n", rate.lambda);
    for &deg in &cfg.lyapunov.steps_deg {
        let r = experiments::lyapunov_run(cfg, deg)?;
        let mut t = Table::new(&["t", "e", "e_dot", "V", "bound"]);
        for row in &r.rows {
            t.push(row.map(fmt).to_vec());
        }
        t.write(&path_in(out, &format!("lyapunov_{}deg.csv", fmt(deg))), prov)?;
        let ok = r.terminal_error.abs() < cfg.lyapunov.terminal_tolerance;
        st.push(vec![
            fmt(deg),
            fmt(rate.lambda),
            fmt(rate.lambda1),
            fmt(rate.lambda2),
            fmt(rate.lambda3),
            fmt(r.v0),
            fmt(r.worst_ratio),
            r.violations.to_string(),
            fmt(r.terminal_error),
            ok.to_string(),
        ]);
        summary += &format!(
            "{deg} deg: V0 = {:.4e}, worst V/bound = {:.4}, {} violations, |e(T)| = {:.3e} rad\n",
            r.v0, r.worst_ratio, r.violations, r.terminal_error.abs()
        );
        if cfg.output.svg {
            let t: Vec<f64> = r.rows.iter().map(|x| x[0]).collect();
            let v: Vec<f64> = r.rows.iter().map(|x| x[3].max(1e-300).log10()).collect();
            let b: Vec<f64> = r.rows.iter().map(|x| x[4].max(1e-300).log10()).collect();
            write_svg(out, &format!("lyapunov_{}deg.svg", fmt(deg)), svg::line_chart("log10 V", "t (s)", &t, &[("V", &v), ("bound", &b)]))?;
        }
    }
    st.write(&path_in(out, "lyapunov_summary.csv"), prov)?;
    Ok(summary.trim_end().to_string())
}
