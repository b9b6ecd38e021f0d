//! `ordirt`: ordinal IRT models from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
//! 3 model validation error, 4 degenerate data.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ordinal_irt::construction::{build, BinaryBlockSpec, BlockKind};
use ordinal_irt::estimation::{fit, threshold_rmse, FitMode, FitOptions, FitResult};
use ordinal_irt::io::{
    align_abilities, format_sig, read_abilities, read_model_spec, round_sig, write_abilities,
    ResponseTable,
};
use ordinal_irt::model::{theta_grid, Family, OrdinalModel};
use ordinal_irt::simulation::{normal_abilities, simulate_responses, SimulationMethod};
use ordinal_irt::verification::{verify, PropositionId, VerifyConfig, MAX_VERIFY_K};
use ordinal_irt::Error;
use serde::Serialize;

const SEED_ENV: &str = "ORDIRT_SEED";

#[derive(Parser)]
#[command(name = "ordirt", version, about = "Ordinal item response models: probabilities, checks, simulation and fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Category and exceedance probabilities for every item at given abilities.
    Probs(ProbsArgs),
    /// Run the randomized proposition checks and print JSON reports.
    Verify(VerifyArgs),
    /// Simulate a response matrix as CSV.
    Simulate(SimulateArgs),
    /// Fit item thresholds to a response CSV.
    Fit(FitArgs),
    /// Category characteristic curves over a grid, as CSV.
    Curves(CurvesArgs),
    /// Build a score distribution from binary building blocks.
    Construct(ConstructArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Args)]
struct ProbsArgs {
    /// Model spec (JSON).
    model: PathBuf,
    /// Abilities, comma separated.
    #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true)]
    theta: Vec<f64>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Proposition id, or `all`.
    #[arg(long, default_value = "all", value_parser = parse_prop)]
    prop: PropSelection,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 8)]
    k_max: usize,
    /// Abilities and thresholds are drawn from U[-a, a]. The reference
    /// computations work with plain probabilities, so past about a = 30 some
    /// trials underflow and are reported as failures.
    #[arg(long, default_value_t = 3.0)]
    param_range: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
enum PropSelection {
    All,
    One(PropositionId),
}

#[derive(Args)]
struct SimulateArgs {
    /// Model spec (JSON).
    model: PathBuf,
    /// Fixed abilities, comma separated; each is repeated `--n` times.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "theta_normal", required_unless_present = "theta_normal")]
    theta: Vec<f64>,
    /// `mu,sd,n`: draw `n` abilities from N(mu, sd^2).
    #[arg(long, value_parser = parse_normal, allow_hyphen_values = true)]
    theta_normal: Option<(f64, f64, usize)>,
    /// Persons per listed ability.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// latent, markov, direct or rejection; defaults to the family's own story.
    #[arg(long, value_parser = parse_method)]
    method: Option<SimulationMethod>,
    #[arg(long, env = SEED_ENV, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the simulated abilities as `person_id,theta` CSV.
    #[arg(long)]
    abilities_out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Response CSV.
    data: PathBuf,
    /// cumulative, sequential or pcm; defaults to the family of `--model`.
    #[arg(long, value_parser = parse_family)]
    family: Option<Family>,
    #[arg(long, value_enum, default_value = "fixed-theta")]
    mode: ModeArg,
    /// `person_id,theta` CSV; required in fixed-theta mode, starting values in joint mode.
    #[arg(long)]
    abilities: Option<PathBuf>,
    /// Model spec giving each item's number of categories.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Model spec with true thresholds; adds `threshold_rmse` to the output.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    FixedTheta,
    Joint,
}

#[derive(Args)]
struct CurvesArgs {
    /// Model spec (JSON).
    model: PathBuf,
    /// `lo:hi:step`.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    grid: Grid,
    /// Print each category's grid argmax instead of the curves.
    #[arg(long)]
    modes: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long, value_parser = parse_family)]
    kind: Family,
    /// Block probabilities, comma separated.
    #[arg(long, required = true, value_delimiter = ',')]
    blocks: Vec<f64>,
}

fn parse_prop(s: &str) -> Result<PropSelection, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(PropSelection::All);
    }
    s.parse().map(PropSelection::One).map_err(|_| {
        let ids: Vec<&str> = PropositionId::ALL.iter().map(|p| p.id()).collect();
        format!("expected 'all' or one of {}", ids.join(", "))
    })
}

fn parse_family(s: &str) -> Result<Family, String> {
    Family::from_name(s).map_err(|e| e.to_string())
}

fn parse_method(s: &str) -> Result<SimulationMethod, String> {
    SimulationMethod::from_name(s).map_err(|e| e.to_string())
}

#[derive(Clone)]
struct Grid(Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err("expected lo:hi:step".into());
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("'{x}' is not a number"));
    theta_grid(num(lo)?, num(hi)?, num(step)?).map(Grid).map_err(|e| e.to_string())
}

fn parse_normal(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [mu, sd, n] = parts[..] else {
        return Err("expected mu,sd,n".into());
    };
    let mu: f64 = mu.parse().map_err(|_| format!("'{mu}' is not a number"))?;
    let sd: f64 = sd.parse().map_err(|_| format!("'{sd}' is not a number"))?;
    let n: usize = n.parse().map_err(|_| format!("'{n}' is not a count"))?;
    if !(mu.is_finite() && sd.is_finite() && sd >= 0.0) || n == 0 {
        return Err("need finite mu, sd >= 0 and n >= 1".into());
    }
    Ok((mu, sd, n))
}

enum Failure {
    Usage(String),
    Lib(Error),
    Unverified,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Unverified => 1,
            Failure::Usage(_) => 2,
            Failure::Lib(e) => match e {
                Error::Parse { .. } | Error::Io(_) => 2,
                Error::DegenerateItem { .. } | Error::DegenerateCondition(_) => 4,
                _ => 3,
            },
        }
    }
}

type CmdResult = Result<(), Failure>;

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Lib(Error::Io(format!("{}: {e}", path.display()))))
}

fn load_models(path: &Path) -> Result<Vec<OrdinalModel>, Failure> {
    Ok(read_model_spec(&read_file(path)?)?)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CmdResult {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::Lib(Error::Io(format!("{}: {e}", p.display())))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| Failure::Lib(e.into()))
        }
    }
}

fn cmd_probs(a: ProbsArgs) -> CmdResult {
    let models = load_models(&a.model)?;
    if let Some(t) = a.theta.iter().find(|t| !t.is_finite()) {
        return Err(Failure::Usage(format!("ability {t} is not finite")));
    }
    let kmax = models.iter().map(OrdinalModel::k).max().unwrap_or(0);
    let mut header: Vec<String> = vec!["theta".into(), "item".into()];
    header.extend((0..=kmax).map(|r| format!("p{r}")));
    header.extend((1..=kmax).map(|r| format!("ge{r}")));

    #[derive(Serialize)]
    struct Row {
        theta: f64,
        item: String,
        probs: Vec<f64>,
        exceedance: Vec<f64>,
    }
    let mut rows = Vec::new();
    for &theta in &a.theta {
        for m in &models {
            let dist = m.category_probs(theta)?;
            let exceedance = (1..=m.k()).map(|r| m.exceedance_prob(theta, r)).collect::<Result<Vec<_>, _>>()?;
            rows.push(Row {
                theta,
                item: m.thresholds().item_id.clone(),
                probs: dist.probs().iter().map(|&p| round_sig(p)).collect(),
                exceedance: exceedance.into_iter().map(round_sig).collect(),
            });
        }
    }
    let cells = |r: &Row| -> Vec<String> {
        let pad = |v: &[f64], n: usize| {
            let mut c: Vec<String> = v.iter().map(|&x| format_sig(x)).collect();
            c.resize(n, String::new());
            c
        };
        let mut c = vec![format_sig(r.theta), r.item.clone()];
        c.extend(pad(&r.probs, kmax + 1));
        c.extend(pad(&r.exceedance, kmax));
        c
    };
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
        Format::Csv => {
            let mut s = header.join(",") + "\n";
            for r in &rows {
                s += &(cells(r).join(",") + "\n");
            }
            s
        }
        Format::Table => {
            let body: Vec<Vec<String>> = rows.iter().map(cells).collect();
            let widths: Vec<usize> = (0..header.len())
                .map(|c| body.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
                .collect();
            let line = |cols: &[String]| {
                let parts: Vec<String> = cols.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                parts.join("  ").trim_end().to_string() + "\n"
            };
            let mut s = line(&header);
            for r in &body {
                s += &line(r);
            }
            s
        }
    };
    emit(a.out.as_deref(), text.as_bytes())
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    if a.trials == 0 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    if a.k_min == 0 || a.k_min > a.k_max || a.k_max > MAX_VERIFY_K {
        return Err(Failure::Usage(format!("--k-min/--k-max must satisfy 1 <= k-min <= k-max <= {MAX_VERIFY_K}")));
    }
    let config = VerifyConfig { trials: a.trials, seed: a.seed, k_min: a.k_min, k_max: a.k_max, param_range: a.param_range };
    let props = match a.prop {
        PropSelection::All => PropositionId::ALL.to_vec(),
        PropSelection::One(p) => vec![p],
    };
    let reports = props.iter().map(|&p| verify(p, &config)).collect::<Result<Vec<_>, _>>()?;
    for r in &reports {
        eprintln!(
            "{:<24} {}  max deviation {:.3e} (tolerance {:e}, {} trials)",
            r.proposition.id(),
            if r.passed { "passed" } else { "FAILED" },
            r.max_abs_deviation,
            r.tolerance,
            r.trials
        );
    }
    emit(a.out.as_deref(), (serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n").as_bytes())?;
    if reports.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(Failure::Unverified)
    }
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let models = load_models(&a.model)?;
    let family = models[0].family();
    let method = a.method.unwrap_or(match family {
        Family::Cumulative => SimulationMethod::LatentVariable,
        Family::Sequential => SimulationMethod::MarkovSteps,
        Family::AdjacentPcm => SimulationMethod::GuttmanRejection,
    });
    method.check_compatible(family).map_err(|e| Failure::Usage(e.to_string()))?;
    if a.n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    let base: Vec<f64> = match a.theta_normal {
        // abilities use their own stream so responses do not shift with n
        Some((mu, sd, n)) => normal_abilities(mu, sd, n, a.seed.wrapping_add(1))?,
        None => {
            if let Some(t) = a.theta.iter().find(|t| !t.is_finite()) {
                return Err(Failure::Usage(format!("ability {t} is not finite")));
            }
            a.theta.clone()
        }
    };
    let thetas: Vec<f64> = base.iter().flat_map(|&t| std::iter::repeat_n(t, a.n)).collect();
    let sim = simulate_responses(&models, &thetas, method, a.seed)?;
    let person_ids: Vec<String> = (1..=thetas.len()).map(|p| format!("p{p}")).collect();
    for (m, acc) in models.iter().zip(&sim.acceptance) {
        if let Some(acc) = acc {
            eprintln!(
                "acceptance rate {}: {} ({} of {} raw draws)",
                m.thresholds().item_id,
                format_sig(acc.rate()),
                acc.accepted,
                acc.raw_draws
            );
        }
    }
    let table = ResponseTable {
        person_ids: person_ids.clone(),
        item_ids: models.iter().map(|m| m.thresholds().item_id.clone()).collect(),
        cells: sim.responses.into_iter().map(|r| r.into_iter().map(Some).collect()).collect(),
    };
    if let Some(path) = &a.abilities_out {
        let rows: Vec<(String, f64)> = person_ids.into_iter().zip(thetas).collect();
        let mut buf = Vec::new();
        write_abilities(&mut buf, &rows)?;
        emit(Some(path), &buf)?;
    }
    emit(a.out.as_deref(), table.to_csv_string()?.as_bytes())
}

#[derive(Serialize)]
struct FitMetadata {
    mode: FitMode,
    persons: usize,
    items: usize,
    /// Where each item's number of categories came from: `model` or `data`.
    k_source: &'static str,
    /// Identification constraint applied in joint mode.
    anchor: Option<&'static str>,
}

#[derive(Serialize)]
struct FitReport {
    #[serde(flatten)]
    result: FitResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold_rmse: Option<f64>,
    metadata: FitMetadata,
}

fn cmd_fit(a: FitArgs) -> CmdResult {
    let table = ResponseTable::parse(&read_file(&a.data)?)?;
    let spec_models = match (&a.model, &a.truth) {
        (Some(p), _) => Some(load_models(p)?),
        (None, Some(p)) => Some(load_models(p)?),
        (None, None) => None,
    };
    let family = match (a.family, &spec_models) {
        (Some(f), _) => f,
        (None, Some(m)) => m[0].family(),
        (None, None) => return Err(Failure::Usage("--family is required without --model".into())),
    };
    let ks: Vec<usize> = match &spec_models {
        Some(models) => table
            .item_ids
            .iter()
            .map(|id| {
                models
                    .iter()
                    .find(|m| &m.thresholds().item_id == id)
                    .map(OrdinalModel::k)
                    .ok_or_else(|| Error::InvalidInput(format!("item '{id}' is not in the model spec")))
            })
            .collect::<Result<_, _>>()?,
        None => table.observed_max(),
    };
    let data = table.to_dataset(&ks)?;
    let mode = match a.mode {
        ModeArg::FixedTheta => FitMode::FixedTheta,
        ModeArg::Joint => FitMode::Joint,
    };
    let abilities = match &a.abilities {
        Some(p) => align_abilities(data.person_ids(), &read_abilities(read_file(p)?.as_bytes())?)?,
        None if mode == FitMode::Joint => vec![0.0; data.n_persons()],
        None => return Err(Failure::Usage("fixed-theta mode needs --abilities".into())),
    };
    let options = FitOptions { mode, max_iter: a.max_iter, tol: a.tol, ..FitOptions::default() };
    let result = fit(&data, family, &abilities, &options)?;
    let threshold_rmse = match &a.truth {
        Some(p) => {
            let truth = load_models(p)?;
            let ordered = data
                .items()
                .iter()
                .map(|it| {
                    truth
                        .iter()
                        .find(|m| m.thresholds().item_id == it.id)
                        .map(|m| m.deltas().to_vec())
                        .ok_or_else(|| Error::InvalidInput(format!("item '{}' is not in the truth spec", it.id)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(threshold_rmse(&result.thresholds, &ordered)?)
        }
        None => None,
    };
    eprintln!(
        "{} after {} iterations, log-likelihood {}, gradient norm {:.3e}",
        if result.converged { "converged" } else { "not converged" },
        result.iterations,
        format_sig(result.log_likelihood),
        result.gradient_norm
    );
    if let Some(r) = threshold_rmse {
        eprintln!("threshold rmse {}", format_sig(r));
    }
    let metadata = FitMetadata {
        mode,
        persons: data.n_persons(),
        items: data.n_items(),
        k_source: if spec_models.is_some() { "model" } else { "data" },
        anchor: result.anchor_applied.then_some("mean ability 0"),
    };
    let report = FitReport { result, threshold_rmse, metadata };
    emit(a.out.as_deref(), (serde_json::to_string_pretty(&report).expect("report serializes") + "\n").as_bytes())
}

fn cmd_curves(a: CurvesArgs) -> CmdResult {
    let models = load_models(&a.model)?;
    let grid = a.grid.0;
    let mut s = String::new();
    if a.modes {
        s += "item,category,mode\n";
        for m in &models {
            for (r, t) in m.curve_modes(&grid)?.iter().enumerate() {
                s += &format!("{},{r},{}\n", m.thresholds().item_id, format_sig(*t));
            }
        }
    } else {
        s += "item,category,theta,p\n";
        for m in &models {
            for r in 0..=m.k() {
                for (t, p) in m.icc_curve(r, &grid)? {
                    s += &format!("{},{r},{},{}\n", m.thresholds().item_id, format_sig(t), format_sig(p));
                }
            }
        }
    }
    emit(a.out.as_deref(), s.as_bytes())
}

fn cmd_construct(a: ConstructArgs) -> CmdResult {
    let spec = BinaryBlockSpec::new(BlockKind::for_family(a.kind), a.blocks.clone())?;
    let dist = build(&spec)?;

    #[derive(Serialize)]
    struct Out {
        kind: Family,
        blocks: Vec<f64>,
        probs: Vec<f64>,
    }
    let out = Out { kind: a.kind, blocks: a.blocks, probs: dist.probs().iter().map(|&p| round_sig(p)).collect() };
    emit(None, (serde_json::to_string(&out).expect("distribution serializes") + "\n").as_bytes())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Probs(a) => cmd_probs(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Curves(a) => cmd_curves(a),
        Command::Construct(a) => cmd_construct(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Lib(e) => eprintln!("error: {e}"),
                Failure::Unverified => eprintln!("error: verification failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
