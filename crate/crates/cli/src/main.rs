#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use mixfrac_core::dimension::{dimension_sweep, write_dimension_csv, DimensionKind};
use mixfrac_core::gauge::{make_scale_ladder, ScaleLadder, ValidationConfig};
use mixfrac_core::ldp::{run_ldp, Generator, LdpConfig, LdpExperiment};
use mixfrac_core::measure::{write_measure, VectorMeasure};
use mixfrac_core::partition::{covering_sum, packing_sum, write_records_csv};
use mixfrac_core::spectrum::{
    coarse_spectrum, formalism_check, legendre_transform, level_set_empty_check, surrogate_nu, write_spectrum_csv,
    FormalismConfig, Sweep,
};
use mixfrac_core::numeric::compensated_sum;
use mixfrac_core::verify::{Status, Verifier, VerifyConfig};

use config::RunConfig;

const OUT_DIR_ENV: &str = "MIXFRAC_OUT_DIR";

#[derive(Parser)]
#[command(name = "mixfrac", about = "Mixed multifractal estimators for vectors of grid measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config and the environment.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Write the configured cascade as a measure file.
    Generate,
    /// Dimension sweep over the q-grid.
    Dims,
    /// Legendre and histogram spectra with the formalism check.
    Spectrum,
    /// Large-deviation harness.
    Ldp,
    /// Run the acceptance suite.
    Verify,
}

/// Bad configuration or input files; exit code 2.
#[derive(Debug)]
struct InputError(anyhow::Error);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for InputError {}

fn input<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| InputError(e).into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
}

impl Ctx {
    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.out.join(name);
        Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
    }

    fn write_json(&self, name: &str, v: &Value) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, v)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn measure(&self) -> Result<VectorMeasure> {
        input(self.cfg.build_measure())
    }

    fn ladder(&self, v: &VectorMeasure) -> Result<ScaleLadder> {
        let g = input(self.cfg.build_gauge())?;
        input(make_scale_ladder(&g, v.base(), v.depth(), &ValidationConfig::default()).map_err(Into::into))
    }

    fn q_grid(&self, k: usize) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|q| self.cfg.q_axis.iter().map(move |&x| [q.clone(), vec![x]].concat()))
                .collect();
        }
        out
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let Some(path) = &cli.config else {
        return Err(InputError(anyhow::anyhow!("--config PATH is required")).into());
    };
    let mut cfg = input(RunConfig::load(path))?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| cfg.out_dir.clone());
    input(fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display())))?;
    if let Some(n) = cli.threads {
        input(rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(Into::into))?;
    }
    let ctx = Ctx { cfg, out };
    match cli.command {
        Command::Generate => generate(&ctx),
        Command::Dims => dims(&ctx),
        Command::Spectrum => spectrum(&ctx),
        Command::Ldp => ldp(&ctx),
        Command::Verify => verify(&ctx),
    }
}

fn generate(ctx: &Ctx) -> Result<ExitCode> {
    let v = ctx.measure()?;
    let mut w = ctx.create("measure.txt")?;
    write_measure(&v, &mut w)?;
    w.flush()?;
    let residual = v.components().iter().map(|c| (compensated_sum(c.leaves()) - 1.0).abs()).fold(0.0, f64::max);
    println!("leaves: {}", v.n_leaves());
    println!("components: {}", v.k());
    println!("mass residual: {residual:e}");
    Ok(ExitCode::SUCCESS)
}

fn dims(ctx: &Ctx) -> Result<ExitCode> {
    let v = ctx.measure()?;
    let ladder = ctx.ladder(&v)?;
    let qs = ctx.q_grid(v.k());
    let rows = dimension_sweep(&v, &qs, &ctx.cfg.kinds, &ladder, ctx.cfg.scheme, &ctx.cfg.cutoff);
    let mut w = ctx.create("dims.csv")?;
    write_dimension_csv(&rows, &mut w)?;
    w.flush()?;

    let mut records = Vec::new();
    for q in &qs {
        for r in &ladder.rungs {
            let pair = [covering_sum(&v, q, r.radius, ctx.cfg.scheme), packing_sum(&v, q, r.radius, ctx.cfg.scheme)];
            records.extend(pair.into_iter().flatten());
        }
    }
    let mut w = ctx.create("partition.csv")?;
    write_records_csv(&records, &mut w)?;
    w.flush()?;

    let ok = rows.iter().filter(|r| r.outcome.is_ok()).count();
    println!("dims: {ok} of {} rows estimated", rows.len());
    if ok == 0 && !rows.is_empty() {
        bail!("every estimate failed");
    }
    Ok(ExitCode::SUCCESS)
}

fn lambda_sweep(ctx: &Ctx, v: &VectorMeasure, ladder: &ScaleLadder) -> Result<Sweep> {
    let qs = ctx.q_grid(v.k());
    let rows = dimension_sweep(v, &qs, &[DimensionKind::Lambda], ladder, ctx.cfg.scheme, &ctx.cfg.cutoff);
    let mut samples = Vec::with_capacity(rows.len());
    for r in rows {
        match r.outcome {
            Ok(e) => samples.push((e.q, e.value)),
            Err(e) => bail!("Λ estimate at q = {:?} failed: {e}", r.q),
        }
    }
    Ok(Sweep::new(DimensionKind::Lambda, &samples)?)
}

fn spectrum(ctx: &Ctx) -> Result<ExitCode> {
    let v = ctx.measure()?;
    let ladder = ctx.ladder(&v)?;
    let q0 = ctx.cfg.q0.clone().unwrap_or_else(|| vec![1.0; v.k()]);
    if q0.len() != v.k() {
        return Err(InputError(anyhow::anyhow!("q0 has length {}, measure has k = {}", q0.len(), v.k())).into());
    }
    let sweep = lambda_sweep(ctx, &v, &ladder)?;
    let legendre = legendre_transform(&sweep)?;
    let alphas: Vec<Vec<f64>> = legendre.points.iter().map(|p| p.alpha.clone()).collect();
    let histogram = coarse_spectrum(&v, &ladder, &alphas, ctx.cfg.eta)?;
    let mut w = ctx.create("spectrum.csv")?;
    write_spectrum_csv(&[legendre.clone(), histogram], &mut w)?;
    w.flush()?;

    let fcfg = FormalismConfig { p_step: ctx.cfg.p_step, p_count: ctx.cfg.p_count, eta: ctx.cfg.eta, cutoff: ctx.cfg.cutoff };
    let mut report = match surrogate_nu(&v, &q0).and_then(|nu| formalism_check(&v, &nu, &q0, &ladder, &sweep, &fcfg)) {
        Ok(r) => {
            let mut val = serde_json::to_value(&r)?;
            val["status"] = json!("ok");
            val
        }
        Err(e) => json!({ "status": format!("error: {e}") }),
    };
    if let Some(alpha) = &ctx.cfg.alpha_query {
        if alpha.len() != v.k() {
            return Err(InputError(anyhow::anyhow!("alpha_query has length {}, measure has k = {}", alpha.len(), v.k())).into());
        }
        let ls = level_set_empty_check(&v, &ladder, &sweep, alpha, ctx.cfg.eta, 0.0)?;
        report["level_set"] = serde_json::to_value(&ls)?;
        println!(
            "level set at α = {alpha:?}: Legendre value {:.4}, predicted empty {}, deepest count {}",
            ls.legendre_value, ls.predicted_empty, ls.deepest_count
        );
    }
    ctx.write_json("formalism.json", &report)?;
    if let Some(peak) = legendre.points.iter().max_by(|a, b| a.f.total_cmp(&b.f)) {
        println!("spectrum: {} Legendre points, peak f = {:.5} at α = {:?}", legendre.points.len(), peak.f, peak.alpha);
    }
    Ok(ExitCode::SUCCESS)
}

fn ldp(ctx: &Ctx) -> Result<ExitCode> {
    let c = &ctx.cfg;
    let generator = match c.ldp_generator.as_str() {
        "deterministic" => Generator::Deterministic { c: c.ldp_c.clone() },
        "bernoulli" => Generator::Bernoulli { p: c.ldp_p.clone() },
        "gaussian" => Generator::Gaussian { mean: c.ldp_mean.clone(), std: c.ldp_std.clone() },
        "measure" => {
            let v = ctx.measure()?;
            let ladder = ctx.ladder(&v)?;
            input(Generator::measure_driven(&v, v.component(0), &ladder).map_err(Into::into))?
        }
        other => {
            return Err(InputError(anyhow::anyhow!(
                "ldp_generator must be deterministic, bernoulli, gaussian or measure, got {other:?}"
            ))
            .into())
        }
    };
    let exp = LdpExperiment {
        generator,
        trials: c.ldp_trials,
        horizon: c.ldp_horizon,
        checkpoints: c.ldp_checkpoints.clone(),
        t_values: c.ldp_t.clone(),
        seed: c.seed,
    };
    let lcfg = LdpConfig { slack: c.ldp_slack, ..LdpConfig::default() };
    let report = run_ldp(&exp, &lcfg)?;
    ctx.write_json("ldp.json", &serde_json::to_value(&report)?)?;
    println!(
        "ldp: {} trials, horizon {}; upper/lower violation fractions {:.4}/{:.4}; convexity within 3 SE: {}",
        report.trials,
        report.horizon,
        report.bound_violation_fraction_upper,
        report.bound_violation_fraction_lower,
        report.convexity_within_3se
    );
    Ok(ExitCode::SUCCESS)
}

fn verify(ctx: &Ctx) -> Result<ExitCode> {
    let c = &ctx.cfg;
    if c.measure.is_some() {
        ctx.measure()?;
    }
    let vcfg = VerifyConfig {
        depth: c.depth,
        seed: c.seed,
        q_max: c.verify_q_max,
        q_step: c.verify_q_step,
        q_spectrum: c.verify_q_spectrum,
        eta: c.eta,
        ldp_trials: c.ldp_trials,
        ldp_horizon: c.ldp_horizon,
        instances: c.verify_instances,
        cutoff: c.cutoff,
    };
    let verifier = input(Verifier::new(vcfg).map_err(Into::into))?;
    let report = verifier.run_all();
    for o in &report.criteria {
        println!("{}", o.line());
    }
    ctx.write_json("verify.json", &serde_json::to_value(&report)?)?;
    let failed: Vec<String> = report
        .criteria
        .iter()
        .filter(|o| o.status != Status::Pass)
        .map(|o| format!("{} ({})", o.id, o.name))
        .collect();
    if failed.is_empty() {
        println!("all {} criteria passed", report.criteria.len());
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("criteria not passed: {}", failed.join(", "));
        Ok(ExitCode::from(1))
    }
}
