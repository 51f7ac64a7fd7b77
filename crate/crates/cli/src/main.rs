mod args;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::Parser;

use cyclewalk_core::breakpoint::{self, AnnealSchedule, SignedGenome};
use cyclewalk_core::cqs::{self, ExcursionChain};
use cyclewalk_core::experiment::{
    self, format_significant, ExperimentName, ExperimentSpec, OutputFormat, RunManifest,
};
use cyclewalk_core::permcycle::CycleIndexMode;
use cyclewalk_core::walk::{self, TimeMode, WalkConfig};
use cyclewalk_core::{par, theory, Error};

use args::{
    BreakpointCommand, Cli, Command, CqsCommand, ExperimentArgs, TheoryArgs, TheoryFn, TimeArg,
    WalkArgs,
};

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_CHECK: u8 = 3;

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
    Check,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<Error>() {
            Some(Error::InvalidConfig(_) | Error::Domain { .. } | Error::UnknownExperiment(_)) => {
                Failure::Usage(format!("{e:#}"))
            }
            _ => Failure::Runtime(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Check) => ExitCode::from(EXIT_CHECK),
    }
}

fn run(cli: Cli) -> Outcome {
    let format: OutputFormat = cli.format.parse()?;
    if let Some(threads) = cli.threads {
        configure_threads(threads)?;
    }
    let ctx = Session {
        seed: cli.seed,
        out: cli.out,
        format,
    };
    match cli.command {
        Command::Experiment(a) => experiment_cmd(&ctx, a),
        Command::Theory(a) => theory_cmd(&ctx, a),
        Command::Walk(a) => walk_cmd(&ctx, a),
        Command::Breakpoint(b) => breakpoint_cmd(&ctx, b),
        Command::Cqs(c) => cqs_cmd(&ctx, c),
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: usize) -> Outcome {
    if threads == 0 {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the worker pool")?;
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(threads: usize) -> Outcome {
    if threads == 0 {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    if threads > 1 {
        eprintln!("note: built without the `parallel` feature; running on one thread");
    }
    Ok(())
}

struct Session {
    seed: u64,
    out: Option<PathBuf>,
    format: OutputFormat,
}

impl Session {
    /// Writes `text` to `<out>/<file>` or, without `--out`, to stdout.
    fn emit(&self, file: &str, text: &str) -> Outcome {
        match &self.out {
            Some(dir) => {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let path = dir.join(file);
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
            None => io::stdout()
                .write_all(text.as_bytes())
                .context("writing to stdout")?,
        }
        Ok(())
    }
}

fn experiment_cmd(ctx: &Session, a: ExperimentArgs) -> Outcome {
    let out_dir = ctx.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let spec = if let Some(path) = &a.manifest {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        RunManifest::parse(&text)?.to_spec(out_dir)
    } else {
        let name = a
            .name
            .as_deref()
            .ok_or_else(|| Failure::Usage("an experiment name or --manifest is required".into()))?;
        if name == "list" {
            for e in ExperimentName::ALL {
                let p = experiment::ExperimentParams::defaults(e);
                println!(
                    "{e}\tn={} c={} reps={} grid={:?}",
                    p.n, p.c, p.reps, p.c_grid
                );
            }
            return Ok(());
        }
        let mut spec = ExperimentSpec::new(name.parse()?, out_dir);
        let p = &mut spec.params;
        p.seed = ctx.seed;
        if let Some(n) = a.n {
            p.n = n;
        }
        if let Some(c) = a.c {
            p.c = c;
        }
        if let Some(g) = a.c_grid {
            p.c_grid = g;
        }
        if let Some(r) = a.reps {
            p.reps = r;
        }
        if let Some(x) = a.a {
            p.a = x;
        }
        if let Some(x) = a.x_max {
            p.x_max = x;
        }
        spec.format = ctx.format;
        spec
    };
    let result = experiment::run_experiment(&spec)?;
    eprintln!(
        "{}: wrote {} and {} ({:.2}s, {} workers)",
        spec.name,
        result.csv_path.display(),
        result.manifest_path.display(),
        result.manifest.wall_clock_secs,
        par::worker_count()
    );
    if let Some(svg) = &result.svg_path {
        eprintln!("{}: wrote {}", spec.name, svg.display());
    }
    for check in &result.output.checks {
        println!("{check}");
    }
    if a.check && !result.output.all_passed() {
        return Err(Failure::Check);
    }
    Ok(())
}

fn need<T>(value: Option<T>, flag: &str, f: TheoryFn) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("{f:?} needs --{flag}").to_lowercase()))
}

fn theory_cmd(ctx: &Session, a: TheoryArgs) -> Outcome {
    let f = a.function;
    let c = || need(a.c, "c", f);
    let k = || need(a.k, "k", f);
    let value = match f {
        TheoryFn::Kappa => theory::kappa(c()?)?,
        TheoryFn::Alpha => theory::alpha(c()?)?,
        TheoryFn::Borel => theory::borel_pmf(c()?, k()?)?,
        TheoryFn::BorelInf => theory::borel_inf(c()?)?,
        TheoryFn::Theta => theory::theta(c()?)?,
        TheoryFn::Rho => theory::rho(c()?)?,
        TheoryFn::G => theory::g_components(c()?)?,
        TheoryFn::GSeries => {
            let s = theory::g_components_series(c()?, 1e-12)?;
            println!("{}", format_significant(s.value, 12));
            println!("{}", format_significant(s.tail_bound, 12));
            return Ok(());
        }
        TheoryFn::U => theory::u_distance(c()?)?,
        TheoryFn::Sigma => theory::sigma_clt(c()?)?,
        TheoryFn::Trees => {
            theory::expected_tree_count(need(a.n, "n", f)?, k()?, need(a.p, "p", f)?)?
        }
        TheoryFn::Lambda => theory::lambda_asymptotic(need(a.n, "n", f)?, k()?, c()?)?,
        TheoryFn::Tail => theory::cluster_tail_bound(c()?, need(a.y, "y", f)?)?,
        TheoryFn::Phi => {
            println!("{}", theory::phi_factorial(need(a.x, "x", f)?));
            return Ok(());
        }
        TheoryFn::Pgw => {
            let c = c()?;
            for s in par::replicate_sequential(ctx.seed, a.count, |_, rng| {
                theory::pgw_progeny_sample(c, theory::PGW_DEFAULT_CAP, rng)
            }) {
                match s? {
                    theory::PgwSample::Finite(v) => println!("{v}"),
                    theory::PgwSample::Infinite => println!("inf"),
                }
            }
            return Ok(());
        }
    };
    println!("{}", format_significant(value, 12));
    Ok(())
}

fn walk_cmd(ctx: &Session, a: WalkArgs) -> Outcome {
    let config = WalkConfig {
        snapshots: a.snapshots.unwrap_or_default(),
        mass_exponent: a.a,
        seed: ctx.seed,
        time_mode: match a.time {
            TimeArg::Discrete => TimeMode::Discrete,
            TimeArg::Poisson => TimeMode::ContinuousPoisson,
        },
        index_mode: if a.traversal {
            CycleIndexMode::Traversal
        } else {
            CycleIndexMode::Treap
        },
        ..WalkConfig::new(a.n, a.c)
    };
    let traces = walk::run_replicates(&config, a.reps)?;
    let mut buf = Vec::new();
    writeln!(buf, "{}", walk::TRACE_CSV_HEADER).context("formatting")?;
    for (rep, trace) in traces.iter().enumerate() {
        walk::write_trace_rows(&mut buf, rep as u64, trace).context("formatting")?;
    }
    ctx.emit("walk.csv", &String::from_utf8(buf).context("utf-8")?)
}

fn read_genomes(path: &Path) -> Result<Vec<SignedGenome>, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let genomes =
        breakpoint::parse_genomes(&text).with_context(|| format!("parsing {}", path.display()))?;
    if genomes.is_empty() {
        return Err(Failure::Runtime(anyhow!(
            "{} contains no genome",
            path.display()
        )));
    }
    Ok(genomes)
}

fn breakpoint_cmd(ctx: &Session, cmd: BreakpointCommand) -> Outcome {
    match cmd {
        BreakpointCommand::D0 { file, verbose } => {
            let mut text = String::from("genome,markers,components,d0\n");
            for (k, g) in read_genomes(&file)?.iter().enumerate() {
                let graph = g.breakpoint_graph();
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    k + 1,
                    g.len(),
                    graph.component_count(),
                    g.d0_lower_bound()
                ));
                if verbose {
                    eprintln!(
                        "genome {}: {}",
                        k + 1,
                        breakpoint::format_doubled(graph.doubled())
                    );
                    for comp in graph.components() {
                        let cycle: Vec<String> = comp.iter().map(|v| v.to_string()).collect();
                        eprintln!("  {} - {}", cycle.join(" - "), comp[0]);
                    }
                }
            }
            ctx.emit("d0.csv", &text)
        }
        BreakpointCommand::Anneal {
            file,
            restarts,
            moves,
            cooling,
        } => {
            let genome = read_genomes(&file)?.remove(0);
            let order: Vec<u32> = genome.markers().iter().map(|x| x.unsigned_abs()).collect();
            let mut schedule = AnnealSchedule {
                moves,
                ..Default::default()
            };
            if let Some(c) = cooling {
                if !(c > 0.0 && c < 1.0) {
                    return Err(Failure::Usage(format!(
                        "--cooling must lie in (0, 1), got {c}"
                    )));
                }
                schedule.cooling = c;
            }
            let result = breakpoint::anneal_signs(&order, &schedule, restarts, ctx.seed)?;
            let mut text = String::from("restart,d0,best_so_far\n");
            for (r, (d, b)) in result
                .restart_objectives
                .iter()
                .zip(&result.best_so_far)
                .enumerate()
            {
                text.push_str(&format!("{r},{d},{b}\n"));
            }
            ctx.emit("anneal.csv", &text)?;
            eprintln!("best d0 = {}", result.best.d0);
            eprintln!("signed order: {}", result.best.genome);
            Ok(())
        }
        BreakpointCommand::Walk { markers, c, reps } => {
            if reps == 0 {
                return Err(Failure::Usage("--reps must be at least 1".into()));
            }
            let traces = par::replicate(ctx.seed, reps, |_, rng| {
                breakpoint::coupled_reversal_walk(markers, c, rng)
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
            let steps = traces[0].steps.len();
            let mut text = String::from("k,mean_D,mean_d0,merged,unchanged,split\n");
            for k in 0..steps {
                let (mut d, mut d0) = (0u64, 0u64);
                let mut counts = [0u64; 3];
                for t in &traces {
                    let s = &t.steps[k];
                    d += s.transposition_distance;
                    d0 += s.d0;
                    if let Some(delta) = s.delta_c {
                        counts[(delta + 1) as usize] += 1;
                    }
                }
                let r = reps as f64;
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    k + 1,
                    d as f64 / r,
                    d0 as f64 / r,
                    counts[0],
                    counts[1],
                    counts[2]
                ));
            }
            ctx.emit("reversal_walk.csv", &text)?;
            let mut total = breakpoint::DeltaCounts::default();
            traces.iter().for_each(|t| total.add(&t.counts));
            if total.total() > 0 {
                eprintln!(
                    "no-change fraction {:.4} over {} non-idle steps",
                    total.unchanged as f64 / total.total() as f64,
                    total.total()
                );
            }
            Ok(())
        }
    }
}

fn cqs_cmd(ctx: &Session, cmd: CqsCommand) -> Outcome {
    match cmd {
        CqsCommand::Run { n, a, c, reps } => {
            let runs = cqs::simulate_cqs_replicates(n, a, c, reps, ctx.seed)?;
            let mut text = String::from(
                "rep,cutoff,events,sup_total,sup_weighted,total_within,weighted_within\n",
            );
            for (r, run) in runs.iter().enumerate() {
                let (t, w) = run.within_bounds(n, a);
                text.push_str(&format!(
                    "{r},{},{},{},{},{t},{w}\n",
                    run.cutoff, run.events, run.sup_total, run.sup_weighted
                ));
            }
            ctx.emit("cqs.csv", &text)
        }
        CqsCommand::Excursions {
            x_max,
            count,
            level,
        } => {
            let chain = level.map_or(ExcursionChain::Strip, ExcursionChain::Level);
            let tail = cqs::excursion_max_distribution(chain, count, x_max, ctx.seed)?;
            let mut text = String::from("x,empirical,exact,se\n");
            for (x, (e, t)) in tail.empirical.iter().zip(&tail.exact).enumerate() {
                let se = (e * (1.0 - e) / count as f64).sqrt();
                text.push_str(&format!("{x},{e},{t},{se}\n"));
            }
            ctx.emit("excursions.csv", &text)?;
            eprintln!("max |empirical - exact| = {:.4}", tail.max_abs_error());
            Ok(())
        }
    }
}
