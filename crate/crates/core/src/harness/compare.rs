//! DQN vs dueling DQN on a shared list of seeds.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::metrics::{
    edge_window_means, format_float, moving_average, prefix_sums, smoothed_td_error, EpisodeMetrics,
    METRICS_HEADER,
};
use super::train::run_into_dir;
use super::HarnessError;
use crate::agent::Algo;
use crate::par::Exec;

/// One (algorithm, seed) training run.
#[derive(Debug, Clone)]
pub struct CompareCell {
    pub algo: Algo,
    pub seed: u64,
    pub dir: PathBuf,
    /// Metrics rows, or the error that stopped the run.
    pub result: Result<Vec<EpisodeMetrics>, String>,
}

impl CompareCell {
    pub fn metrics(&self) -> Option<&[EpisodeMetrics]> {
        self.result.as_deref().ok()
    }
}

/// Seed averages for one algorithm over its successful cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareSummaryRow {
    pub algo: Algo,
    pub runs_ok: usize,
    pub runs_failed: usize,
    pub final_cumulative_reward: f64,
    /// Trailing moving average of the return at the last episode.
    pub final_smoothed_return: f64,
    pub collision_rate: f64,
    /// Means of the first and last 10% of the smoothed TD error series.
    pub td_error_first: f64,
    pub td_error_last: f64,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub cells: Vec<CompareCell>,
    pub summary: Vec<CompareSummaryRow>,
}

impl CompareOutcome {
    pub fn failures(&self) -> Vec<&CompareCell> {
        self.cells.iter().filter(|c| c.result.is_err()).collect()
    }

    pub fn summary_for(&self, algo: Algo) -> Option<&CompareSummaryRow> {
        self.summary.iter().find(|r| r.algo == algo)
    }
}

pub const COMPARISON_HEADER_SUFFIX: &str = "cumulative_reward";

fn summarize(cells: &[CompareCell], algo: Algo, window: usize) -> CompareSummaryRow {
    let ok: Vec<&[EpisodeMetrics]> = cells
        .iter()
        .filter(|c| c.algo == algo)
        .filter_map(CompareCell::metrics)
        .collect();
    let failed = cells.iter().filter(|c| c.algo == algo && c.result.is_err()).count();
    let avg = |f: &dyn Fn(&[EpisodeMetrics]) -> f64| {
        if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().map(|m| f(m)).sum::<f64>() / ok.len() as f64
        }
    };
    let returns = |m: &[EpisodeMetrics]| m.iter().map(|r| r.total_reward).collect::<Vec<_>>();
    let td = |m: &[EpisodeMetrics]| edge_window_means(&smoothed_td_error(m, window), 0.1);
    CompareSummaryRow {
        algo,
        runs_ok: ok.len(),
        runs_failed: failed,
        final_cumulative_reward: avg(&|m| returns(m).iter().sum()),
        final_smoothed_return: avg(&|m| moving_average(&returns(m), window).last().copied().unwrap_or(f64::NAN)),
        collision_rate: avg(&|m| m.iter().filter(|r| r.collided).count() as f64 / m.len() as f64),
        td_error_first: avg(&|m| td(m).map_or(f64::NAN, |t| t.0)),
        td_error_last: avg(&|m| td(m).map_or(f64::NAN, |t| t.1)),
    }
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

/// Trains both algorithms on every seed with otherwise identical configurations.
///
/// Each cell writes its own run directory `<out>/<algo>_seed<seed>`. The combined
/// outputs are `comparison.csv` (metrics rows with leading `algo,seed` and a trailing
/// cumulative reward), `td_error.csv` (smoothed mean TD error per updating episode) and
/// `summary.csv` (seed averages). Failed cells are listed in the summary and excluded
/// from the averages; the caller decides the exit status from
/// [`CompareOutcome::failures`].
pub fn cmd_compare(config: &RunConfig, seeds: &[u64]) -> Result<CompareOutcome, HarnessError> {
    if seeds.is_empty() {
        return Err(HarnessError::Usage("compare needs at least one seed".into()));
    }
    config.validate()?;
    let out = &config.out_dir;
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;

    let jobs: Vec<(Algo, u64)> = seeds
        .iter()
        .flat_map(|&s| Algo::ALL.iter().map(move |&a| (a, s)))
        .collect();
    let outer = config.exec();
    // Cells are the parallel unit; each training run inside a cell is sequential.
    let inner = Exec::Sequential;
    let cells = outer.map(&jobs, |&(algo, seed)| {
        let mut cfg = config.clone();
        cfg.agent.algo = algo;
        cfg.seed = seed;
        cfg.out_dir = out.join(format!("{algo}_seed{seed}"));
        CompareCell {
            algo,
            seed,
            dir: cfg.out_dir.clone(),
            result: run_into_dir(&cfg, inner)
                .map(|o| o.metrics)
                .map_err(|e| e.to_string()),
        }
    });

    let mut comparison = format!("algo,seed,{METRICS_HEADER},{COMPARISON_HEADER_SUFFIX}\n");
    let mut td = String::from("algo,seed,episode,smoothed_td_error\n");
    for cell in &cells {
        let Some(rows) = cell.metrics() else { continue };
        let cumulative = prefix_sums(&rows.iter().map(|r| r.total_reward).collect::<Vec<_>>());
        for (row, cum) in rows.iter().zip(&cumulative) {
            comparison.push_str(&format!(
                "{},{},{},{}\n",
                cell.algo,
                cell.seed,
                row.csv_row(),
                format_float(*cum)
            ));
        }
        let updating: Vec<usize> = rows.iter().filter(|r| r.mean_td_error.is_some()).map(|r| r.episode).collect();
        for (episode, s) in updating.iter().zip(smoothed_td_error(rows, config.smoothing_window)) {
            td.push_str(&format!("{},{},{},{}\n", cell.algo, cell.seed, episode, format_float(s)));
        }
    }
    write(&out.join("comparison.csv"), &comparison)?;
    write(&out.join("td_error.csv"), &td)?;

    let summary: Vec<CompareSummaryRow> = Algo::ALL
        .iter()
        .map(|&a| summarize(&cells, a, config.smoothing_window))
        .collect();
    let mut text = String::from(
        "algo,runs_ok,runs_failed,final_cumulative_reward,final_smoothed_return,collision_rate,td_error_first,td_error_last\n",
    );
    for r in &summary {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.algo,
            r.runs_ok,
            r.runs_failed,
            format_float(r.final_cumulative_reward),
            format_float(r.final_smoothed_return),
            format_float(r.collision_rate),
            format_float(r.td_error_first),
            format_float(r.td_error_last)
        ));
    }
    for c in cells.iter().filter(|c| c.result.is_err()) {
        text.push_str(&format!("# failed: {} seed {}: {}\n", c.algo, c.seed, c.result.as_ref().unwrap_err()));
    }
    write(&out.join("summary.csv"), &text)?;
    Ok(CompareOutcome { cells, summary })
}
