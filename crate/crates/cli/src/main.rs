use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use pppbandit::error::{Error, Result};
use pppbandit::instance::{generate_random_instance, serialize_instance, RecoveryInstance};
use pppbandit::knapsack::{brute_force, solve_exact, solve_fptas, CandidateItem};
use pppbandit::online::{run_learner, LearnerParams, PhaseConfig, PhaseRecord, Variant};
use pppbandit::relaxation::{envelopes, solve_upper_bound};
use pppbandit::scheduler::{
    offline_plan, offline_plan_refined, parse_policy, ratio, serialize_policy, PolicyDocument,
};
use pppbandit::sim::{
    brute_force_opt, greedy_policy, parse_experiment_config, read_instance, run_experiment,
    simulate_schedule, write_rows_csv, ExperimentConfig, InstanceSource, Noise, PolicyKind,
    Schedule,
};

#[derive(Parser)]
#[command(
    name = "pppbandit",
    version,
    about = "Periodic planning and learning for recovering bandits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Basic,
    Refined,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Triangular,
    None,
}

impl From<NoiseArg> for Noise {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Triangular => Noise::Triangular,
            NoiseArg::None => Noise::None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SimPolicy {
    Greedy,
    PppFile,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Offline,
    Online,
    Knapsack,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    GenInstance {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 25)]
        dmax_cap: usize,
        /// Budget stored as the instance default.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build an offline periodic policy.
    Plan {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = Algo::Basic)]
        algo: Algo,
        #[arg(long)]
        out: PathBuf,
        /// Print the supporting points of every arm.
        #[arg(long)]
        dump_envelope: bool,
        /// Print the relaxation bound and its optimal frequencies.
        #[arg(long)]
        report_ub: bool,
    },
    /// Run the phased online learner and write one CSV row per phase.
    Learn {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        t: u64,
        /// Phase length; defaults to round(sqrt(T / ln(K+1))).
        #[arg(long)]
        phi: Option<u64>,
        #[arg(long, value_enum, default_value_t = Algo::Basic)]
        variant: Algo,
        /// Knapsack accuracy; 0 solves exactly.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = NoiseArg::Triangular)]
        noise: NoiseArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the greedy baseline or a saved policy over a finite horizon.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        policy: SimPolicy,
        /// Policy JSON written by `plan`, for `--policy ppp-file`.
        #[arg(long)]
        policy_file: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        t: u64,
        #[arg(long, value_enum, default_value_t = NoiseArg::Triangular)]
        noise: NoiseArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exact finite-horizon optimum of a tiny instance, next to the bound.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        t: u64,
    },
    /// Run a benchmark suite and write CSV rows.
    Bench {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Experiment config JSON; overrides the suite defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,10")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, value_delimiter = ',')]
        phi: Vec<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Validation(_) | Error::Parse { .. } => 2,
        Error::Capacity(_) => 3,
        _ => 1,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("JSON output always serializes");
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn budget(instance: &RecoveryInstance, k: Option<usize>) -> Result<usize> {
    k.or(instance.default_k).ok_or_else(|| {
        Error::InvalidArgument("--k is required when the instance has no default_k".into())
    })
}

fn cmd_plan(
    instance_path: &Path,
    k: Option<usize>,
    algo: Algo,
    out: &Path,
    dump_envelope: bool,
    report_ub: bool,
) -> Result<()> {
    let instance = read_instance(instance_path)?;
    let k = budget(&instance, k)?;
    let plan = match algo {
        Algo::Basic => offline_plan(&instance, k)?,
        Algo::Refined => offline_plan_refined(&instance, k)?,
    };
    plan.policy.verify_budget()?;
    let doc = PolicyDocument::new(&plan.policy, &instance, plan.ub)?;
    write_file(out, &serialize_policy(&doc))?;

    let mut summary = json!({
        "k": k,
        "a": plan.a,
        "treatment": plan.treatment,
        "long_run_average": doc.long_run_average,
        "ub": doc.ub,
        "ratio": doc.ratio,
    });
    if report_ub {
        let sol = solve_upper_bound(&instance, k)?;
        summary["x_star"] = json!(sol.x_star);
        summary["fractional"] = json!(sol.fractional);
    }
    if dump_envelope {
        let points: Vec<_> = envelopes(&instance)
            .into_iter()
            .map(|e| e.support.points)
            .collect();
        summary["supporting_points"] = json!(points);
    }
    print_json(&summary)
}

#[derive(Serialize)]
struct PhaseRow {
    phase: usize,
    start: u64,
    length: u64,
    a: u64,
    planned_value: f64,
    realized_reward: f64,
    cumulative_ratio: f64,
}

impl From<&PhaseRecord> for PhaseRow {
    fn from(p: &PhaseRecord) -> Self {
        Self {
            phase: p.index,
            start: p.start,
            length: p.length,
            a: p.a,
            planned_value: p.planned_value,
            realized_reward: p.realized_reward,
            cumulative_ratio: p.cumulative_ratio,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_learn(
    instance_path: &Path,
    k: Option<usize>,
    horizon: u64,
    phi: Option<u64>,
    variant: Algo,
    epsilon: f64,
    noise: NoiseArg,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let instance = read_instance(instance_path)?;
    let k = budget(&instance, k)?;
    let variant = match variant {
        Algo::Basic => Variant::Basic,
        Algo::Refined => Variant::Refined,
    };
    let mut phase = PhaseConfig::standard(k, horizon, variant)?;
    if let Some(phi) = phi {
        phase.phi = phi;
    }
    phase.epsilon = epsilon;
    let params = LearnerParams {
        horizon,
        k,
        phase,
        seed,
        noise: noise.into(),
    };
    let report = run_learner(&instance, &params)?;

    let file = fs::File::create(out).map_err(|e| Error::io(out, e))?;
    let mut writer = csv::Writer::from_writer(file);
    for p in &report.phases {
        writer.serialize(PhaseRow::from(p))?;
    }
    writer.flush().map_err(|e| Error::io(out, e))?;

    print_json(&json!({
        "k": k,
        "horizon": horizon,
        "phi": phase.phi,
        "phases": report.phases.len(),
        "cumulative_reward": report.cumulative_reward,
        "ub": report.ub,
        "ratio": report.ratio,
        "total_pulls": report.total_pulls,
    }))
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    instance_path: &Path,
    policy: SimPolicy,
    policy_file: Option<&Path>,
    k: Option<usize>,
    horizon: u64,
    noise: NoiseArg,
    seed: u64,
) -> Result<()> {
    let instance = read_instance(instance_path)?;
    let (k, schedule) = match policy {
        SimPolicy::Greedy => {
            let k = budget(&instance, k)?;
            (k, greedy_policy(&instance, k, horizon)?.schedule)
        }
        SimPolicy::PppFile => {
            let path = policy_file.ok_or_else(|| {
                Error::InvalidArgument("--policy-file is required with --policy ppp-file".into())
            })?;
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            let policy = parse_policy(&bytes)?.policy();
            if policy.entries.len() != instance.n_arms() {
                return Err(Error::InvalidArgument(format!(
                    "policy has {} entries for {} arms",
                    policy.entries.len(),
                    instance.n_arms()
                )));
            }
            if k.is_some_and(|k| k != policy.k) {
                return Err(Error::InvalidArgument(
                    "--k disagrees with the policy file".into(),
                ));
            }
            (policy.k, Schedule::from_policy(&policy, horizon))
        }
    };
    let expected = schedule.expected_total(&instance)?;
    let realized = simulate_schedule(&instance, &schedule, k, seed, noise.into())?;
    let ub = pppbandit::relaxation::ub_value(&instance, k)?;
    print_json(&json!({
        "k": k,
        "horizon": horizon,
        "expected_total": expected,
        "realized_total": realized,
        "ub": ub,
        "expected_ratio": ratio(expected, ub * horizon as f64),
        "realized_ratio": ratio(realized, ub * horizon as f64),
    }))
}

fn cmd_oracle(instance_path: &Path, k: Option<usize>, horizon: u64) -> Result<()> {
    let instance = read_instance(instance_path)?;
    let k = budget(&instance, k)?;
    let opt = brute_force_opt(&instance, k, horizon)?;
    let ub = pppbandit::relaxation::ub_value(&instance, k)?;
    let greedy = greedy_policy(&instance, k, horizon)?.total;
    print_json(&json!({
        "k": k,
        "horizon": horizon,
        "opt": opt,
        "ub_times_t": ub * horizon as f64,
        "greedy": greedy,
    }))
}

#[derive(Serialize)]
struct KnapsackBenchRow {
    instance: u64,
    arms: usize,
    items: usize,
    k_prime: f64,
    exact_value: f64,
    fptas_value: f64,
    brute_force_value: Option<f64>,
    exact_ms: f64,
    fptas_ms: f64,
}

fn bench_knapsack(count: usize, n: usize, seed: u64, out: Box<dyn Write>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for i in 0..count as u64 {
        let inst = generate_random_instance(n, seed.wrapping_add(i), 25)?;
        let items: Vec<CandidateItem> = inst
            .arms
            .iter()
            .enumerate()
            .flat_map(|(arm, c)| [1u64, 2, 4, 8, 16].map(|d| CandidateItem::new(arm, d, c.mean(d))))
            .collect();
        let k_prime = (n as f64 / 4.0).max(1.0);
        let t0 = Instant::now();
        let exact = solve_exact(&items, k_prime)?;
        let exact_ms = t0.elapsed().as_secs_f64() * 1e3;
        let t1 = Instant::now();
        let fptas = solve_fptas(&items, k_prime, 0.1)?;
        let fptas_ms = t1.elapsed().as_secs_f64() * 1e3;
        let brute = brute_force(&items, k_prime).ok().map(|s| s.value);
        writer.serialize(KnapsackBenchRow {
            instance: i,
            arms: n,
            items: items.len(),
            k_prime,
            exact_value: exact.value,
            fptas_value: fptas.value,
            brute_force_value: brute,
            exact_ms,
            fptas_ms,
        })?;
    }
    writer.flush().map_err(|e| Error::io("<bench output>", e))
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    suite: Suite,
    config: Option<&Path>,
    count: usize,
    n: usize,
    k: Vec<usize>,
    horizon: u64,
    trials: usize,
    phi: Vec<u64>,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(fs::File::create(path).map_err(|e| Error::io(path, e))?),
        None => Box::new(std::io::stdout()),
    };
    if let Suite::Knapsack = suite {
        return bench_knapsack(count, n, seed, sink);
    }
    let config = match config {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            parse_experiment_config(&bytes)?
        }
        None => ExperimentConfig {
            instances: InstanceSource::Generate {
                count,
                n,
                seed,
                dmax_cap: 25,
            },
            k_values: k,
            policies: match suite {
                Suite::Offline => {
                    vec![PolicyKind::Offline, PolicyKind::Refined, PolicyKind::Greedy]
                }
                _ => vec![PolicyKind::OnlineBasic, PolicyKind::OnlineRefined],
            },
            horizon,
            trials,
            seed,
            phi,
            output: None,
        },
    };
    let rows = run_experiment(&config)?;
    match &config.output {
        Some(path) if out.is_none() => {
            let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
            write_rows_csv(&rows, file)
        }
        _ => write_rows_csv(&rows, sink),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenInstance {
            n,
            seed,
            dmax_cap,
            k,
            out,
        } => {
            let mut instance = generate_random_instance(n, seed, dmax_cap)?;
            if let Some(k) = k {
                if k == 0 || k > n {
                    return Err(Error::InvalidArgument(format!("k={k} outside 1..={n}")));
                }
                instance = instance.with_default_k(k);
            }
            write_file(&out, &serialize_instance(&instance))
        }
        Command::Plan {
            instance,
            k,
            algo,
            out,
            dump_envelope,
            report_ub,
        } => cmd_plan(&instance, k, algo, &out, dump_envelope, report_ub),
        Command::Learn {
            instance,
            k,
            t,
            phi,
            variant,
            epsilon,
            noise,
            seed,
            out,
        } => cmd_learn(&instance, k, t, phi, variant, epsilon, noise, seed, &out),
        Command::Simulate {
            instance,
            policy,
            policy_file,
            k,
            t,
            noise,
            seed,
        } => cmd_simulate(&instance, policy, policy_file.as_deref(), k, t, noise, seed),
        Command::Oracle { instance, k, t } => cmd_oracle(&instance, k, t),
        Command::Bench {
            suite,
            config,
            count,
            n,
            k,
            horizon,
            trials,
            phi,
            seed,
            out,
        } => cmd_bench(
            suite,
            config.as_deref(),
            count,
            n,
            k,
            horizon,
            trials,
            phi,
            seed,
            out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
