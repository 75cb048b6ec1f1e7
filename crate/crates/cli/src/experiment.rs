use std::path::PathBuf;

use clap::Args;
use crpmap::crp::{generate_dataset, sample_from_components};
use crpmap::dpmeans::DpMeansConfig;
use crpmap::gibbs::GibbsConfig;
use crpmap::mapdp::MapDpConfig;
use crpmap::{rng, Partition};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{raftery_config, GeneratorArgs};
use crate::error::{CliError, CliResult};
use crate::evaluate::evaluate_runs;
use crate::fit::{run_engine, write_fit, EngineArg, EngineSpec};
use crate::generate::{generator_config, replicate_dir, replicate_seed, write_generated};
use crate::io;
use crate::manifest::{OutputDir, RunManifest};

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, default_value_t = 2016)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub replicates: usize,
    /// Size of each held-out test set (default: N).
    #[arg(long)]
    pub test_n: Option<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mapdp,gibbs")]
    pub engines: Vec<EngineArg>,
    #[arg(long, default_value_t = 0)]
    pub map_restarts: usize,
    #[arg(long, default_value_t = 5000)]
    pub gibbs_max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    #[arg(long, num_args = 3, value_names = ["Q", "R", "S"], default_values_t = [0.025, 0.1, 0.95])]
    pub raftery: Vec<f64>,
    /// DP-means penalty, when dpmeans is among the engines.
    #[arg(long)]
    pub lambda: Option<f64>,
}

/// Seeds derived from a replicate seed: the generator uses the seed itself.
const TEST_STREAM: u64 = 1;
const ENGINE_STREAM: u64 = 2;

fn engine_specs(args: &ExperimentArgs, seed: u64) -> CliResult<Vec<EngineSpec>> {
    let prior = args.generator.prior()?;
    let alpha = args.generator.alpha;
    args.engines
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let s = rng::split_seed(seed, ENGINE_STREAM + i as u64);
            Ok(match e {
                EngineArg::Mapdp => EngineSpec::MapDp(MapDpConfig {
                    restarts: args.map_restarts,
                    seed: s,
                    ..MapDpConfig::new(alpha, prior.clone())
                }),
                EngineArg::Gibbs => EngineSpec::Gibbs(GibbsConfig {
                    max_iters: args.gibbs_max_iters,
                    burn_in: args.burn_in,
                    raftery: Some(raftery_config(&args.raftery)?),
                    seed: s,
                    ..GibbsConfig::new(alpha, prior.clone())
                }),
                EngineArg::Dpmeans => {
                    let lambda = args.lambda.ok_or_else(|| CliError::input("dpmeans needs --lambda"))?;
                    EngineSpec::DpMeans(DpMeansConfig { seed: s, ..DpMeansConfig::new(lambda) })
                }
            })
        })
        .collect()
}

fn run_replicate(args: &ExperimentArgs, rep: usize) -> CliResult<()> {
    let seed = replicate_seed(args.seed, rep, args.replicates);
    let cfg = generator_config(&args.generator, seed)?;
    let dir = replicate_dir(&args.out, rep);
    let mut out = OutputDir::create(&dir, RunManifest::new("experiment-crp", &cfg, Some(seed)))?;
    let syn = generate_dataset(&cfg, &mut rng::seeded(seed))?;
    write_generated(&mut out, &cfg, &syn)?;

    let mut test_rng = rng::seeded(rng::split_seed(seed, TEST_STREAM));
    let n_test = args.test_n.unwrap_or(args.generator.n);
    let test = sample_from_components(&syn.components, syn.partition.counts(), n_test, &mut test_rng)?;
    io::write_dataset(&out.path("test_data.csv"), &test)?;
    let test_truth = Partition::from_labels(test.labels().expect("generated with labels"))?;
    io::write_assignments(&out.path("test_truth.csv"), &test_truth)?;

    for spec in engine_specs(args, seed)? {
        let manifest = RunManifest::new("experiment-crp", &spec, Some(spec.seed()));
        let mut engine_out = OutputDir::create(&dir.join(spec.name()), manifest)?;
        let (fit, trace) = run_engine(&syn.dataset, Some(syn.partition.labels()), &spec)?;
        write_fit(&mut engine_out, &fit, &trace)?;
        engine_out.finish()?;
        out.timing(spec.name(), fit.summary.wall_time);
    }
    out.finish()?;
    Ok(())
}

pub fn cmd_experiment(args: &ExperimentArgs) -> CliResult<()> {
    if args.replicates == 0 {
        return Err(CliError::input("--replicates must be at least 1"));
    }
    if args.engines.is_empty() {
        return Err(CliError::input("--engines is empty"));
    }
    engine_specs(args, args.seed)?;
    io::ensure_dir(&args.out)?;
    (0..args.replicates).into_par_iter().map(|r| run_replicate(args, r)).collect::<CliResult<Vec<()>>>()?;
    let manifest = RunManifest::new("experiment-crp", args, Some(args.seed));
    let table = evaluate_runs(&args.out, &args.out, manifest)?;
    print!("{table}");
    Ok(())
}
