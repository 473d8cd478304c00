use std::fs;
use std::path::Path;

use dc_control::baselines::{classif, greedy_of, lspi};
use dc_control::criteria::{build_rcal_objective, build_rled_objective, ZeroOneMargin};
use dc_control::experiment::{
    emit_csv, format_number, performance_ratio, run_experiment, write_manifest, CsvOptions, Execution,
    ExperimentConfig,
};
use dc_control::features::TabularFeatures;
use dc_control::garnet::{
    generate_garnet, reward_state_count, sample_expert_trajectories, sample_random_trajectories, strip_rewards,
    GarnetParams,
};
use dc_control::mdp::{policy_iteration, Mdp};
use dc_control::optim::{dca, subgradient_descent, DcaConfig, GdConfig, OptimizationTrace};
use dc_control::rng::derive_seed;
use dc_control::{Error, Result};

use crate::{AlgoArg, ExperimentArgs, GarnetArgs, TrainArgs};

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn garnet(args: &GarnetArgs) -> Result<()> {
    let mdp = generate_garnet(&GarnetParams::new(args.ns, args.na, args.gamma, args.seed))?;
    write(&args.out, &mdp.to_text()?)?;
    println!("reward_states = {}", reward_state_count(args.ns));
    Ok(())
}

pub(crate) fn train(args: &TrainArgs) -> Result<()> {
    let text = fs::read_to_string(&args.mdp).map_err(|source| Error::Io {
        path: args.mdp.clone(),
        source,
    })?;
    let mdp = Mdp::from_text(&text)?;
    let (expert, _) = policy_iteration(&mdp)?;
    let features = TabularFeatures::new(mdp.n_states(), mdp.n_actions());
    let d_e = sample_expert_trajectories(&mdp, &expert, args.le, args.he, derive_seed(args.seed, &[1]));
    let d_rl = sample_random_trajectories(&mdp, args.lt, args.ht, derive_seed(args.seed, &[2]));

    let gd = GdConfig::with_updates(args.updates);
    let dca_cfg = DcaConfig::new(args.k, args.n);
    let zero = vec![0.0; mdp.n_states() * mdp.n_actions()];
    let gamma = mdp.gamma();

    let (theta, trace): (Vec<f64>, Option<OptimizationTrace>) = match args.algo {
        AlgoArg::Rcal | AlgoArg::Rcaldc => {
            let obj = build_rcal_objective(&d_e, &strip_rewards(&d_rl), features, gamma, args.lambda, ZeroOneMargin)?;
            let (theta, trace) = if args.algo == AlgoArg::Rcal {
                subgradient_descent(&obj, &zero, &gd)?
            } else {
                dca(&obj, &zero, &dca_cfg)?
            };
            (theta, Some(trace))
        }
        AlgoArg::Rled | AlgoArg::Rleddc => {
            let start = lspi(&d_rl, &features, gamma, &Default::default())?;
            let obj = build_rled_objective(&d_e, &d_rl, features, gamma, args.lambda, ZeroOneMargin)?;
            let (theta, trace) = if args.algo == AlgoArg::Rled {
                subgradient_descent(&obj, &start, &gd)?
            } else {
                dca(&obj, &start, &dca_cfg)?
            };
            (theta, Some(trace))
        }
        AlgoArg::Classif => {
            let (theta, trace) = classif(&d_e, features, ZeroOneMargin, &gd)?;
            (theta, Some(trace))
        }
        AlgoArg::Lspi => (lspi(&d_rl, &features, gamma, &Default::default())?, None),
    };

    let t = performance_ratio(&mdp, &expert, &greedy_of(&theta, &features))?;
    create_dir(&args.out)?;
    let mut theta_text = String::new();
    for x in &theta {
        theta_text.push_str(&x.to_string());
        theta_text.push('\n');
    }
    write(&args.out.join("theta.txt"), &theta_text)?;
    if let Some(trace) = &trace {
        trace.save_csv(&args.out.join("trace.csv"))?;
        println!("J = {}", format_number(trace.best_value));
        println!("updates = {}", trace.update_count);
    }
    println!("T = {}", format_number(t));
    Ok(())
}

fn configure(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::preset(args.id, args.scale);
    cfg.master_seed = args.seed;
    let t = &mut cfg.trajectories;
    t.expert_count = args.le.unwrap_or(t.expert_count);
    t.expert_horizon = args.he.unwrap_or(t.expert_horizon);
    t.transition_count = args.lt.unwrap_or(t.transition_count);
    t.transition_horizon = args.ht.unwrap_or(t.transition_horizon);
    cfg.n_garnets = args.garnets.unwrap_or(cfg.n_garnets);
    cfg.n_datasets_per_point = args.datasets.unwrap_or(cfg.n_datasets_per_point);
    cfg.n_states = args.ns.unwrap_or(cfg.n_states);
    cfg.n_actions = args.na.unwrap_or(cfg.n_actions);
    cfg.gamma = args.gamma.unwrap_or(cfg.gamma);
    cfg.lambda = args.lambda.unwrap_or(cfg.lambda);
    if let Some(grid) = &args.grid {
        cfg.grid = grid.clone();
    }
    if let Some(u) = args.updates {
        cfg.gd = GdConfig::with_updates(u);
    }
    if args.k.is_some() || args.n.is_some() {
        cfg.dca = DcaConfig::new(args.k.unwrap_or(cfg.dca.outer_steps), args.n.unwrap_or(cfg.dca.inner_updates));
    }
    cfg.validate()?;
    Ok(cfg)
}

pub(crate) fn experiment(args: &ExperimentArgs) -> Result<()> {
    let cfg = configure(args)?;
    create_dir(&args.out_dir)?;
    let out = run_experiment(&cfg, Execution::with_workers(args.workers))?;
    let options = CsvOptions {
        wall_time: args.record_timing,
    };
    emit_csv(&out.records, &out.aggregation.rows, &args.out_dir, options)?;
    let scale = match args.scale {
        dc_control::experiment::Scale::Desk => "desk",
        dc_control::experiment::Scale::Paper => "paper",
    };
    write_manifest(&cfg, &out.aggregation, &[("scale", scale.to_string())], &args.out_dir.join("manifest.txt"))?;

    let cell = |x: Option<f64>| x.map(format_number).unwrap_or_else(|| "-".into());
    println!("{:>8}  {:<8} {:>14} {:>14} {:>10} {:>8}", "grid", "algo", "mean_T", "variance", "imp_%", "win");
    for r in &out.aggregation.rows {
        println!(
            "{:>8}  {:<8} {:>14} {:>14} {:>10} {:>8}",
            r.grid_value,
            r.algorithm.name(),
            cell(r.mean_t),
            cell(r.variance),
            cell(r.improvement_pct),
            cell(r.win_rate)
        );
    }
    if out.aggregation.failed > 0 {
        eprintln!("warning: {} runs failed; see records.csv", out.aggregation.failed);
    }
    Ok(())
}
