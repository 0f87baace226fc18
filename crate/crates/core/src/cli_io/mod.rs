//! Field files, run configuration, subcommands and reports.

pub mod config;
pub mod field_file;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use config::{build_slots, AverageMethod, InputRecord, LoadedConfig, RunConfig, SlotSource};
pub use field_file::{decode_field, encode_field, read_field, sha256_hex, write_field};
pub use report::{Outputs, Report, Table};

use crate::error::{invalid, Error, Result};
use crate::functionals::{
    dissipation_sweep, dissipation_sweep_exact, law_check_with, structure_curve,
    structure_curve_exact, BoxAverager, DissipationSweep, FieldSet, LawReport, Slot,
    StructureCurve,
};
use crate::increments::ShiftMethod;
use crate::numerics::loglog_slope;
use crate::solver::{advect, balance_residual, AdvectOptions, ResidualNorms};
use crate::systems::{
    conservation_predictor, scaling_exponent, ConservationPrediction, RegularityEstimate,
};
use report::{num, Writer};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "yaglom",
    version,
    about = "Dissipation functionals, structure functions and 4/3-law checks on periodic 3D fields"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding output.directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Run seed, overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Write every configured slot as a YGF1 field file.
    Generate,
    /// Structure and dissipation sweeps with the 4/3 verdict.
    Lawcheck {
        /// Test hook: read both curves from a JSON file instead of computing them.
        #[arg(long, hide = true)]
        inject_curves: Option<PathBuf>,
    },
    /// λ sweep of the box-averaged structure density.
    Structure,
    /// ε sweep of the box-averaged dissipation.
    Dissipation,
    /// Advect θ and check the local energy balance.
    Balance,
    /// Increment-regularity exponents and the conservation predictor.
    Exponents,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Lawcheck { .. } => "lawcheck",
            Command::Structure => "structure",
            Command::Dissipation => "dissipation",
            Command::Balance => "balance",
            Command::Exponents => "exponents",
        }
    }
}

/// Curves injected through the lawcheck test hook.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectedCurves {
    pub epsilons: Vec<f64>,
    pub d_values: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub g_values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LawcheckResult {
    pub law: LawReport,
    pub structure: StructureCurve,
    pub dissipation: DissipationSweep,
    pub injected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BalanceScale {
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub norms: Vec<NormsRecord>,
    pub max_l2: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormsRecord {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

impl From<ResidualNorms> for NormsRecord {
    fn from(n: ResidualNorms) -> Self {
        Self {
            l1: n.l1,
            l2: n.l2,
            linf: n.linf,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BalanceResult {
    pub dt: f64,
    pub steps: usize,
    pub stride: usize,
    pub snapshots: usize,
    pub scales: Vec<BalanceScale>,
    /// Log-log slope of the largest L² residual against ε.
    pub epsilon_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentsResult {
    pub velocity_slot: String,
    pub vorticity_slot: String,
    pub velocity: RegularityEstimate,
    pub vorticity: RegularityEstimate,
    pub r1: f64,
    pub r2: f64,
    pub prediction: ConservationPrediction,
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run_from_args<I, T>(args: I) -> Result<Outputs>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Invalid(e.to_string()))?;
    run(&cli)
}

pub fn run(cli: &Cli) -> Result<Outputs> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return invalid("--threads must be at least 1");
        }
        // A pool that already exists (repeated in-process runs) is kept.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let path = cli
        .config
        .as_deref()
        .map_or_else(|| invalid("--config PATH is required"), Ok)?;
    let cfg = LoadedConfig::load(path)?;
    let seed = cli.seed.unwrap_or(cfg.config.seed);
    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| cfg.resolve(&cfg.config.output.directory));

    let ctx = Context {
        cfg: &cfg,
        seed,
        command: cli.command.name(),
    };
    let inject = match &cli.command {
        Command::Lawcheck {
            inject_curves: Some(p),
        } => Some(read_injected(p)?),
        _ => None,
    };
    // Inputs are resolved before anything touches the output directory.
    let built = build_slots(&cfg, seed)?;
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut w = Writer {
        dir: &dir,
        formats: &cfg.config.output.formats,
        out: Outputs::default(),
    };
    match &cli.command {
        Command::Generate => generate(&ctx, &built, &mut w)?,
        Command::Lawcheck { .. } => lawcheck(&ctx, &built, inject, &mut w)?,
        Command::Structure => structure(&ctx, &built, &mut w)?,
        Command::Dissipation => dissipation(&ctx, &built, &mut w)?,
        Command::Balance => balance(&ctx, &built, &mut w)?,
        Command::Exponents => exponents(&ctx, &built, &mut w)?,
    }
    Ok(w.out)
}

struct Context<'a> {
    cfg: &'a LoadedConfig,
    seed: u64,
    command: &'static str,
}

impl Context<'_> {
    fn report<T: Serialize>(&self, inputs: &[InputRecord], result: T) -> Report<T> {
        Report {
            tool: "yaglom",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command.into(),
            seed: self.seed,
            config_sha256: self.cfg.sha256(),
            config: self.cfg.text.clone(),
            inputs: inputs.to_vec(),
            result,
        }
    }

    fn fields(&self, built: &config::BuiltSlots) -> Result<FieldSet> {
        built.field_set(self.cfg.grid()?)
    }
}

fn read_injected(p: &Path) -> Result<InjectedCurves> {
    let text =
        std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("{}: {e}", p.display())))
}

fn check_finite(what: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!(
            "{what} produced non-finite values"
        )));
    }
    Ok(())
}

fn generate(ctx: &Context, built: &config::BuiltSlots, w: &mut Writer) -> Result<()> {
    if built.fields.is_empty() {
        return invalid("no slots configured under functional.slots");
    }
    for (name, f) in &built.fields {
        w.raw(&format!("{name}.ygf"), &encode_field(f))?;
    }
    let files: Vec<String> = built.fields.keys().map(|k| format!("{k}.ygf")).collect();
    w.report("generate", &ctx.report(&built.inputs, files))
}

fn structure_of(ctx: &Context, set: &FieldSet) -> Result<StructureCurve> {
    let cfg = ctx.cfg;
    let entry = cfg.entry()?;
    set.check_entry(&entry)?;
    let lambdas = cfg.lambdas()?;
    let curve = match cfg.config.functional.method {
        AverageMethod::Quadrature => structure_curve(
            set,
            &entry,
            &lambdas,
            &cfg.sphere()?,
            ShiftMethod::FourierPhase,
        )?,
        AverageMethod::Exact => {
            structure_curve_exact(&BoxAverager::new(set, &entry)?, &entry, &lambdas)?
        }
    };
    check_finite("structure sweep", &curve.g_values)?;
    Ok(curve)
}

fn dissipation_of(ctx: &Context, set: &FieldSet) -> Result<DissipationSweep> {
    let cfg = ctx.cfg;
    let entry = cfg.entry()?;
    set.check_entry(&entry)?;
    let eps = cfg.epsilons()?;
    let sweep = match cfg.config.functional.method {
        AverageMethod::Quadrature => {
            let ball = cfg.ball(eps[0])?;
            dissipation_sweep(set, &entry, &eps, &ball, ShiftMethod::FourierPhase)?
        }
        AverageMethod::Exact => {
            let avg = BoxAverager::new(set, &entry)?.with_profile(cfg.profile());
            dissipation_sweep_exact(&avg, &entry, &eps)?
        }
    };
    check_finite("dissipation sweep", &sweep.d_values)?;
    Ok(sweep)
}

fn curve_table(scales: &[f64], values: &[f64], terms: &[Vec<f64>], labels: &[String]) -> Table {
    let mut header = vec!["scale".to_string(), "value".to_string()];
    header.extend(labels.iter().cloned());
    let mut t = Table::new(header);
    for i in 0..scales.len() {
        let mut row = vec![num(scales[i]), num(values[i])];
        row.extend(terms.get(i).into_iter().flatten().map(|&v| num(v)));
        t.push(row);
    }
    t
}

fn structure(ctx: &Context, built: &config::BuiltSlots, w: &mut Writer) -> Result<()> {
    let curve = structure_of(ctx, &ctx.fields(built)?)?;
    w.table(
        "structure",
        &curve_table(
            &curve.lambdas,
            &curve.g_values,
            &curve.term_values,
            &curve.term_labels,
        ),
    )?;
    w.report("structure", &ctx.report(&built.inputs, curve))
}

fn dissipation(ctx: &Context, built: &config::BuiltSlots, w: &mut Writer) -> Result<()> {
    let sweep = dissipation_of(ctx, &ctx.fields(built)?)?;
    w.table(
        "dissipation",
        &curve_table(
            &sweep.epsilons,
            &sweep.d_values,
            &sweep.term_values,
            &sweep.term_labels,
        ),
    )?;
    w.report("dissipation", &ctx.report(&built.inputs, sweep))
}

fn lawcheck(
    ctx: &Context,
    built: &config::BuiltSlots,
    inject: Option<InjectedCurves>,
    w: &mut Writer,
) -> Result<()> {
    let entry = ctx.cfg.entry()?;
    let injected = inject.is_some();
    let (curve, sweep) = match inject {
        Some(c) => {
            if c.epsilons.len() != c.d_values.len() {
                return invalid("injected epsilons and d_values differ in length");
            }
            let curve = StructureCurve::from_values(entry.id, c.lambdas, c.g_values)?;
            let sweep = DissipationSweep {
                entry: entry.id,
                epsilons: c.epsilons,
                d_values: c.d_values,
                term_values: vec![],
                term_labels: vec![],
            };
            (curve, sweep)
        }
        None => {
            let set = ctx.fields(built)?;
            (structure_of(ctx, &set)?, dissipation_of(ctx, &set)?)
        }
    };
    let law = law_check_with(&curve, &sweep.pairs(), &ctx.cfg.law_options())?;
    w.table(
        "structure",
        &curve_table(
            &curve.lambdas,
            &curve.g_values,
            &curve.term_values,
            &curve.term_labels,
        ),
    )?;
    w.table(
        "dissipation",
        &curve_table(
            &sweep.epsilons,
            &sweep.d_values,
            &sweep.term_values,
            &sweep.term_labels,
        ),
    )?;
    let result = LawcheckResult {
        law,
        structure: curve,
        dissipation: sweep,
        injected,
    };
    w.report("lawcheck", &ctx.report(&built.inputs, result))
}

fn balance(ctx: &Context, built: &config::BuiltSlots, w: &mut Writer) -> Result<()> {
    let cfg = ctx.cfg;
    let solver = cfg
        .config
        .solver
        .as_ref()
        .map_or_else(|| invalid("balance needs a [solver] section"), Ok)?;
    let set = ctx.fields(built)?;
    let v = set.vector(Slot::V)?;
    let theta = set
        .get(Slot::Theta)
        .and_then(|f| f.as_scalar())
        .map_or_else(|| invalid("balance needs field slot 'theta'"), Ok)?;
    let eps = cfg.epsilons()?;
    let opts = AdvectOptions {
        dt: solver.dt,
        steps: solver.steps,
        stride: solver.stride,
        dealias: solver.dealias,
    };
    if solver.steps / solver.stride.max(1) + 1 < 3 {
        return invalid(format!(
            "balance needs at least 3 snapshots; steps = {} with stride = {} stores {}",
            solver.steps,
            solver.stride,
            solver.steps / solver.stride.max(1) + 1
        ));
    }
    let series = advect(v, theta, opts)?;
    let mut scales = Vec::new();
    let mut table = Table::new(
        ["epsilon", "time", "l1", "l2", "linf"]
            .map(String::from)
            .to_vec(),
    );
    for &e in &eps {
        let r = balance_residual(&series, e, &cfg.ball(e)?, ShiftMethod::FourierPhase)?;
        for (t, n) in r.times.iter().zip(&r.norms) {
            table.push(vec![num(e), num(*t), num(n.l1), num(n.l2), num(n.linf)]);
        }
        check_finite(
            "balance residual",
            &r.norms.iter().map(|n| n.l2).collect::<Vec<_>>(),
        )?;
        scales.push(BalanceScale {
            epsilon: e,
            times: r.times.clone(),
            norms: r.norms.iter().copied().map(NormsRecord::from).collect(),
            max_l2: r.max_l2(),
        });
    }
    let epsilon_slope = (eps.len() >= 2 && scales.iter().all(|s| s.max_l2 > 0.0))
        .then(|| loglog_slope(&eps, &scales.iter().map(|s| s.max_l2).collect::<Vec<_>>()));
    w.table("balance", &table)?;
    let result = BalanceResult {
        dt: solver.dt,
        steps: solver.steps,
        stride: solver.stride,
        snapshots: series.len(),
        scales,
        epsilon_slope,
    };
    w.report("balance", &ctx.report(&built.inputs, result))
}

fn exponents(ctx: &Context, built: &config::BuiltSlots, w: &mut Writer) -> Result<()> {
    let cfg = ctx.cfg;
    let sec = cfg
        .config
        .exponents
        .clone()
        .map_or_else(|| invalid("exponents needs an [exponents] section"), Ok)?;
    let get = |name: &str| {
        built
            .fields
            .get(name)
            .map_or_else(|| invalid(format!("missing field slot '{name}'")), Ok)
    };
    let (fv, fw) = (get(&sec.velocity)?, get(&sec.vorticity)?);
    let grid = cfg.grid()?;
    let lambdas = match cfg.lambdas() {
        Ok(l) => l,
        Err(_) => crate::synth::default_fit_window(&grid),
    };
    let p = sec.norm_order.unwrap_or(sec.r1);
    let sphere = cfg.sphere()?;
    let ev = scaling_exponent(fv, p, &lambdas, &sphere)?;
    let ew = scaling_exponent(fw, p, &lambdas, &sphere)?;
    let prediction = conservation_predictor(&ev, &ew, sec.r1, sec.r2)?;
    let mut table = Table::new(["field", "lambda", "norm"].map(String::from).to_vec());
    for (slot, est) in [(&sec.velocity, &ev), (&sec.vorticity, &ew)] {
        for (l, n) in est.lambdas.iter().zip(&est.norms) {
            table.push(vec![slot.clone(), num(*l), num(*n)]);
        }
    }
    w.table("exponents", &table)?;
    let result = ExponentsResult {
        velocity_slot: sec.velocity,
        vorticity_slot: sec.vorticity,
        velocity: ev,
        vorticity: ew,
        r1: sec.r1,
        r2: sec.r2,
        prediction,
    };
    w.report("exponents", &ctx.report(&built.inputs, result))
}

/// Process exit code for a run outcome: 0 ok, 1 config, 2 IO, 3 numerical.
pub fn exit_code(r: &Result<Outputs>) -> i32 {
    match r {
        Ok(_) => 0,
        Err(e) => e.exit_code(),
    }
}
