use std::path::{Path, PathBuf};

use clap::Args;
use crpmap::crp::{generate_dataset, CrpConfig, GeneratorConfig, SyntheticData};
use crpmap::rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::args::GeneratorArgs;
use crate::error::CliResult;
use crate::io;
use crate::manifest::{with_manifest, OutputDir, RunManifest};

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of datasets; more than one writes `rep_000`, `rep_001`, ...
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
}

pub fn replicate_dir(out: &Path, rep: usize) -> PathBuf {
    out.join(format!("rep_{rep:03}"))
}

/// Seed of replicate `rep`: the run seed itself for a single dataset.
pub fn replicate_seed(seed: u64, rep: usize, replicates: usize) -> u64 {
    if replicates == 1 {
        seed
    } else {
        rng::split_seed(seed, rep as u64)
    }
}

pub fn generator_config(args: &GeneratorArgs, seed: u64) -> CliResult<GeneratorConfig> {
    Ok(GeneratorConfig { crp: CrpConfig::new(args.alpha, args.n)?, prior: args.prior()?, seed })
}

/// Writes `data.csv`, `truth.csv` and `params.json` for one dataset.
pub fn write_generated(out: &mut OutputDir, cfg: &GeneratorConfig, syn: &SyntheticData) -> CliResult<()> {
    let manifest = out.manifest().clone();
    io::write_dataset(&out.path("data.csv"), &syn.dataset)?;
    io::write_assignments(&out.path("truth.csv"), &syn.partition)?;
    let params = json!({
        "generator": cfg,
        "k": syn.partition.num_clusters(),
        "cluster_sizes": syn.partition.counts(),
        "components": syn.components,
    });
    io::write_json(&out.path("params.json"), &with_manifest(params, &manifest))
}

pub fn cmd_generate(args: &GenerateArgs) -> CliResult<()> {
    if args.replicates == 0 {
        return Err(crate::error::CliError::input("--replicates must be at least 1"));
    }
    generator_config(&args.generator, args.seed)?;
    let run = |rep: usize| -> CliResult<()> {
        let seed = replicate_seed(args.seed, rep, args.replicates);
        let cfg = generator_config(&args.generator, seed)?;
        let dir = if args.replicates == 1 { args.out.clone() } else { replicate_dir(&args.out, rep) };
        let mut out = OutputDir::create(&dir, RunManifest::new("generate", &cfg, Some(seed)))?;
        let syn = generate_dataset(&cfg, &mut rng::seeded(seed))?;
        write_generated(&mut out, &cfg, &syn)?;
        out.finish()?;
        Ok(())
    };
    (0..args.replicates).into_par_iter().map(run).collect::<CliResult<Vec<()>>>()?;
    if args.replicates > 1 {
        let manifest = RunManifest::new("generate", args, Some(args.seed));
        OutputDir::create(&args.out, manifest)?.finish()?;
    }
    println!("wrote {} dataset(s) to {}", args.replicates, args.out.display());
    Ok(())
}
