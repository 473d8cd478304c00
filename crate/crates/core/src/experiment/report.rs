use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::runner::ExperimentRecord;
use super::{Algorithm, ExperimentConfig, ExperimentId};
use crate::error::{Error, Result};

/// One `(grid value, algorithm)` summary over all Garnets and dataset draws.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub grid_value: usize,
    pub algorithm: Algorithm,
    /// Successful runs entering the statistics.
    pub runs: usize,
    pub mean_t: Option<f64>,
    /// Sample variance (`n - 1` denominator), zero for a single run.
    pub variance: Option<f64>,
    /// DCA variants only: improvement over the descent counterpart, in percent.
    pub improvement_pct: Option<f64>,
    /// DCA variants only: fraction of paired runs where DCA is strictly better.
    pub win_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Aggregation {
    pub rows: Vec<AggregateRow>,
    /// Records skipped because their run failed.
    pub failed: usize,
}

/// `100 (t_gd - t_dca) / t_gd`, undefined when `t_gd <= 0`.
pub fn improvement(t_gd: f64, t_dca: f64) -> Option<f64> {
    (t_gd > 0.0).then(|| 100.0 * (t_gd - t_dca) / t_gd)
}

fn mean_and_variance(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (Some(mean), Some(variance))
}

pub fn aggregate(id: ExperimentId, grid: &[usize], records: &[ExperimentRecord]) -> Aggregation {
    let failed = records.iter().filter(|r| r.performance.is_err()).count();
    let mut by_run: HashMap<(usize, Algorithm, usize, usize), f64> = HashMap::new();
    let mut by_cell: HashMap<(usize, Algorithm), Vec<f64>> = HashMap::new();
    for r in records {
        if let Ok(t) = r.performance {
            by_run.insert((r.grid_index, r.algorithm, r.garnet, r.dataset), t);
            by_cell.entry((r.grid_index, r.algorithm)).or_default().push(t);
        }
    }

    let mut rows = Vec::new();
    for (k, &grid_value) in grid.iter().enumerate() {
        let means: HashMap<Algorithm, Option<f64>> = id
            .roster()
            .iter()
            .map(|&a| {
                let values = by_cell.get(&(k, a)).map(Vec::as_slice).unwrap_or(&[]);
                (a, mean_and_variance(values).0)
            })
            .collect();
        for &algorithm in id.roster() {
            let values = by_cell.get(&(k, algorithm)).map(Vec::as_slice).unwrap_or(&[]);
            let (mean_t, variance) = mean_and_variance(values);
            let (improvement_pct, win_rate) = match algorithm.descent_counterpart() {
                Some(gd) => {
                    let imp = match (means[&gd], mean_t) {
                        (Some(t_gd), Some(t_dca)) => improvement(t_gd, t_dca),
                        _ => None,
                    };
                    let (mut wins, mut pairs) = (0usize, 0usize);
                    for (&(kk, a, p, i), &t_dca) in &by_run {
                        if kk == k && a == algorithm {
                            if let Some(&t_gd) = by_run.get(&(k, gd, p, i)) {
                                pairs += 1;
                                wins += usize::from(t_dca < t_gd);
                            }
                        }
                    }
                    (imp, (pairs > 0).then(|| wins as f64 / pairs as f64))
                }
                None => (None, None),
            };
            rows.push(AggregateRow {
                grid_value,
                algorithm,
                runs: values.len(),
                mean_t,
                variance,
                improvement_pct,
                win_rate,
            });
        }
    }
    Aggregation { rows, failed }
}

/// Formats with 12 significant digits, like C's `%.12g`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-5..12).contains(&exp) {
        format!("{}e{exp}", trim(mantissa))
    } else {
        trim(&format!("{x:.*}", (11 - exp) as usize))
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CsvOptions {
    /// Fill the `wall_time` column. Off by default so reruns are byte-identical.
    pub wall_time: bool,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn csv_text<I>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |source| Error::Csv {
        path: "<memory>".into(),
        source,
    };
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::invalid(format!("CSV buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

pub const RECORD_COLUMNS: [&str; 7] = ["experiment", "garnet", "dataset", "grid_value", "algorithm", "T", "wall_time"];
pub const AGGREGATE_COLUMNS: [&str; 6] = ["grid_value", "algorithm", "mean_T", "variance", "improvement_pct", "win_rate"];

/// Writes `records.csv` and `aggregate.csv` into `out_dir`. Failed runs show
/// `error` in the `T` column.
pub fn emit_csv(records: &[ExperimentRecord], aggregates: &[AggregateRow], out_dir: &Path, options: CsvOptions) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let records_csv = csv_text(
        &RECORD_COLUMNS,
        records.iter().map(|r| {
            vec![
                r.experiment.to_string(),
                r.garnet.to_string(),
                r.dataset.to_string(),
                r.grid_value.to_string(),
                r.algorithm.name().to_string(),
                match &r.performance {
                    Ok(t) => format_number(*t),
                    Err(_) => "error".into(),
                },
                if options.wall_time {
                    format_number(r.wall_time)
                } else {
                    String::new()
                },
            ]
        }),
    )?;
    write_file(&out_dir.join("records.csv"), &records_csv)?;

    let aggregate_csv = csv_text(
        &AGGREGATE_COLUMNS,
        aggregates.iter().map(|a| {
            vec![
                a.grid_value.to_string(),
                a.algorithm.name().to_string(),
                opt(a.mean_t),
                opt(a.variance),
                opt(a.improvement_pct),
                opt(a.win_rate),
            ]
        }),
    )?;
    write_file(&out_dir.join("aggregate.csv"), &aggregate_csv)
}

/// Plain-text `key = value` metadata beside the CSVs.
pub fn write_manifest(cfg: &ExperimentConfig, aggregation: &Aggregation, extra: &[(&str, String)], path: &Path) -> Result<()> {
    let t = &cfg.trajectories;
    let mut m = String::new();
    let mut kv = |k: &str, v: String| writeln!(m, "{k} = {v}").unwrap();
    kv("library", format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")));
    kv("experiment", cfg.id.to_string());
    kv("master_seed", cfg.master_seed.to_string());
    kv("seed_derivation", "garnet p: derive_seed(master, [p]); run (p,i,k): base = derive_seed(master, [p, i, k]), expert = derive_seed(base, [1]), transitions = derive_seed(base, [2])".into());
    kv("n_garnets", cfg.n_garnets.to_string());
    kv("n_datasets_per_point", cfg.n_datasets_per_point.to_string());
    kv("n_states", cfg.n_states.to_string());
    kv("n_actions", cfg.n_actions.to_string());
    kv("branching", "1".into());
    kv("gamma", cfg.gamma.to_string());
    kv("lambda", cfg.lambda.to_string());
    kv(
        "grid",
        cfg.grid.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
    );
    kv("grid_axis", format!("{:?}", cfg.id.varies()));
    kv("expert_trajectories", t.expert_count.to_string());
    kv("expert_horizon", t.expert_horizon.to_string());
    kv("transition_trajectories", t.transition_count.to_string());
    kv("transition_horizon", t.transition_horizon.to_string());
    kv("gd_updates", cfg.gd.num_updates.to_string());
    kv("gd_step_sizes", format!("{:?}", cfg.gd.step_sizes));
    kv("dca_outer_steps", cfg.dca.outer_steps.to_string());
    kv("dca_inner_updates", cfg.dca.inner_updates.to_string());
    kv("dca_inner_step_sizes", format!("{:?}", cfg.dca.inner_step_sizes));
    kv("lspi_ridge", cfg.lspi.ridge.to_string());
    kv("lspi_max_policy_iters", cfg.lspi.max_policy_iters.to_string());
    kv("algorithms", cfg.id.roster().iter().map(|a| a.name()).collect::<Vec<_>>().join(","));
    kv("failed_runs", aggregation.failed.to_string());
    for (k, v) in extra {
        kv(k, v.clone());
    }
    write_file(path, &m)
}
