//! Command line driver for the relay bound toolkit: calibrates the shared
//! channel, searches the study-case fronts, replays them through the frame
//! simulator, benchmarks coded transfer, and assembles the comparison
//! report. Every artifact lands in one output directory, stamped with the
//! configuration hash and master seed so a rerun can be checked for
//! reproducibility byte by byte.

mod config;
mod output;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use relaybound::channel::ChannelModel;
use relaybound::child_seed;
use relaybound::coding::{simulate_coded, CodedConfig, CODED_PACKET_BITS};
use relaybound::criteria::{enumerate_paths, evaluate, Metrics, DEFAULT_MAX_HOPS};
use relaybound::net::{decode, standard_cases, NodeId, Scenario, Solution, StudyCase};
use relaybound::pareto::{derive_bounds, optimize, project_plane};
use relaybound::sim::{pool_estimates, simulate, EventKind, SimEstimates};

use config::{RunConfig, StrategyChoice};
use output::{
    front_file, write_calibration, write_coding, write_front, write_plane, write_sim, CodingMean,
    CodingRow, FrontRow, OutDir, SimRow,
};

/// Failure classes, each mapped to a distinct process exit code so scripts
/// can tell misconfiguration from mathematical dead ends from failed report
/// checks.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or inputs; exit code 2.
    #[error("{0}")]
    Config(String),
    /// A computation diverged or produced nothing usable; exit code 3.
    #[error("{0}")]
    Diverged(String),
    /// A report consistency check failed; exit code 4.
    #[error("{0}")]
    Check(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Diverged(_) => 3,
            CliError::Check(_) => 4,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "relaybound",
    version,
    about = "Capacity, delay, and energy bounds for one- and two-relay slotted networks"
)]
struct Cli {
    /// TOML run configuration; built-in defaults apply when absent.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Master seed, overriding the configured one.
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,

    /// Directory artifacts are written to and read back from.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out_dir: PathBuf,

    /// Cap on worker threads for within-stage parallelism.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Print the built-in default configuration as TOML and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the channel noise floor against the reference anchors and
    /// write the link success curve as CSV.
    Calibrate {
        /// Largest tabulated distance, in meters.
        #[arg(long, default_value_t = 800.0)]
        max_distance: f64,
        /// Tabulation step, in meters.
        #[arg(long, default_value_t = 5.0)]
        step: f64,
    },

    /// Print the interference-free link success table as CSV on stdout.
    ChannelTable {
        #[arg(long, default_value_t = 800.0)]
        max_distance: f64,
        #[arg(long, default_value_t = 5.0)]
        step: f64,
    },

    /// Evaluate one solution's closed-form criteria and print them as JSON.
    Evaluate {
        /// Standard-list case position (1 to 6).
        #[arg(long, value_name = "POS")]
        case: Option<usize>,
        /// Scenario index (1 to 5), for non-standard distances.
        #[arg(long, value_name = "IDX", conflicts_with = "case")]
        scenario: Option<u8>,
        /// Source-to-destination distance in meters, with --scenario.
        #[arg(long, value_name = "M", conflicts_with = "case")]
        distance: Option<f64>,
        /// Genome values, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        genome: Vec<f64>,
        /// Cross-check the closed forms by explicit path enumeration.
        #[arg(long)]
        oracle: bool,
        /// Hop cap for the path enumeration.
        #[arg(long, default_value_t = DEFAULT_MAX_HOPS)]
        max_hops: u32,
    },

    /// Search each case's capacity/delay/energy front and write the front
    /// plus its normalized bound planes.
    Optimize {
        /// Standard-list positions to run (repeatable; default from config).
        #[arg(long = "case", value_name = "POS", value_delimiter = ',')]
        cases: Vec<usize>,
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
    },

    /// Replay stored fronts (or one genome) through the frame simulator.
    Simulate {
        #[arg(long = "case", value_name = "POS", value_delimiter = ',')]
        cases: Vec<usize>,
        /// Frames injected per run, overriding the config.
        #[arg(long)]
        frames: Option<u64>,
        /// Independent runs pooled per entry, overriding the config.
        #[arg(long)]
        runs: Option<u64>,
        /// Simulate this one genome instead of the stored front.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        genome: Option<Vec<f64>>,
        /// With --genome: write the transmit/receive event log.
        #[arg(long)]
        events: bool,
    },

    /// Benchmark coded transfer strategies over the stored fronts.
    CodeBench {
        #[arg(long = "case", value_name = "POS", value_delimiter = ',')]
        cases: Vec<usize>,
        /// Fragments per message (repeatable), overriding the config.
        #[arg(long = "fragments", value_name = "K", value_delimiter = ',')]
        fragments: Vec<usize>,
        /// Strategies to run: plain, rxor, rlnc (repeatable).
        #[arg(long = "strategy", value_name = "NAME")]
        strategies: Vec<String>,
    },

    /// Summarize the artifacts into report.md and a comparison table.
    Report {
        /// Exit nonzero when a dominance relation fails or a required
        /// input is missing.
        #[arg(long)]
        check: bool,
    },

    /// Run calibrate, optimize, simulate, code-bench, and report in order.
    Pipeline {
        #[arg(long = "case", value_name = "POS", value_delimiter = ',')]
        cases: Vec<usize>,
        /// Pass --check through to the final report stage.
        #[arg(long)]
        check: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.print_defaults {
        print!("{}", RunConfig::default().to_toml());
        return Ok(());
    }
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    let Some(command) = cli.command else {
        return Err(CliError::Config(
            "no subcommand given; see --help for the available ones".into(),
        ));
    };

    match command {
        Command::ChannelTable { max_distance, step } => {
            let channel = cfg.channel.resolve()?;
            print_channel_table(&channel, max_distance, step)
        }
        Command::Evaluate { case, scenario, distance, genome, oracle, max_hops } => {
            let channel = cfg.channel.resolve()?;
            cmd_evaluate(&channel, case, scenario, distance, &genome, oracle, max_hops)
        }
        Command::Calibrate { max_distance, step } => {
            let channel = cfg.channel.resolve()?;
            let out = OutDir::create(&cli.out_dir, cfg.hash(), cfg.seed)?;
            let path = write_calibration(&out, &channel, max_distance, step)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Optimize { cases, population, generations } => {
            let channel = cfg.channel.resolve()?;
            let out = OutDir::create(&cli.out_dir, cfg.hash(), cfg.seed)?;
            cmd_optimize(&cfg, &channel, &out, &cases, population, generations)
        }
        Command::Simulate { cases, frames, runs, genome, events } => {
            let channel = cfg.channel.resolve()?;
            let out = OutDir::create(&cli.out_dir, cfg.hash(), cfg.seed)?;
            cmd_simulate(&cfg, &channel, &out, &cases, frames, runs, genome.as_deref(), events)
        }
        Command::CodeBench { cases, fragments, strategies } => {
            let channel = cfg.channel.resolve()?;
            let out = OutDir::create(&cli.out_dir, cfg.hash(), cfg.seed)?;
            cmd_code_bench(&cfg, &channel, &out, &cases, &fragments, &strategies)
        }
        Command::Report { check } => {
            let channel = cfg.channel.resolve()?;
            let out = OutDir::create(&cli.out_dir, cfg.hash(), cfg.seed)?;
            report::cmd_report(&cfg, &channel, &out, check)
        }
        Command::Pipeline { cases, check } => {
            let channel = cfg.channel.resolve()?;
            let out = OutDir::create(&cli.out_dir, cfg.hash(), cfg.seed)?;
            let stage = |name: &str| eprintln!("[pipeline] {name}");
            stage("calibrate");
            let path = write_calibration(&out, &channel, 800.0, 5.0)?;
            println!("{}", path.display());
            stage("optimize");
            cmd_optimize(&cfg, &channel, &out, &cases, None, None)?;
            stage("simulate");
            cmd_simulate(&cfg, &channel, &out, &cases, None, None, None, false)?;
            stage("code-bench");
            cmd_code_bench(&cfg, &channel, &out, &cases, &[], &[])?;
            stage("report");
            report::cmd_report(&cfg, &channel, &out, check)
        }
    }
}

fn print_channel_table(channel: &ChannelModel, max_distance: f64, step: f64) -> Result<(), CliError> {
    if !(step > 0.0) || !(max_distance > 0.0) {
        return Err(CliError::Config("--step and --max-distance must be positive".into()));
    }
    println!("distance_m,success_probability");
    let mut d = step;
    while d <= max_distance + 1e-9 {
        let p = channel
            .link_success(d, &[])
            .map_err(|e| CliError::Config(format!("channel table failed at {d} m: {e}")))?;
        println!("{d},{p}");
        d += step;
    }
    Ok(())
}

/// Shortest round-trip JSON rendering; the criteria use an infinity
/// sentinel for zero denominators, which JSON numbers cannot carry.
fn json_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v > 0.0 {
        "\"infinite\"".into()
    } else {
        "\"-infinite\"".into()
    }
}

fn json_opt(v: Option<f64>) -> String {
    v.map(json_num).unwrap_or_else(|| "null".into())
}

fn json_plane(delay: f64, energy: f64, divisor: f64) -> String {
    if divisor > 0.0 {
        format!(
            "{{\"delay\": {}, \"energy\": {}}}",
            json_num(delay / divisor),
            json_num(energy / divisor)
        )
    } else {
        "null".into()
    }
}

fn cmd_evaluate(
    channel: &ChannelModel,
    case: Option<usize>,
    scenario: Option<u8>,
    distance: Option<f64>,
    genome: &[f64],
    oracle: bool,
    max_hops: u32,
) -> Result<(), CliError> {
    let (scenario, d_sd) = match (case, scenario, distance) {
        (Some(pos), None, None) => {
            let all = standard_cases();
            let c = *all.get(pos.wrapping_sub(1)).ok_or_else(|| {
                CliError::Config(format!(
                    "case {pos} does not exist; the standard list has {} entries",
                    all.len()
                ))
            })?;
            (c.scenario, c.d_sd)
        }
        (None, Some(idx), Some(d)) => {
            let s = Scenario::from_index(idx).ok_or_else(|| {
                CliError::Config(format!("scenario index {idx} does not exist (1 to 5)"))
            })?;
            if !(d > 0.0) {
                return Err(CliError::Config("--distance must be positive".into()));
            }
            (s, d)
        }
        _ => {
            return Err(CliError::Config(
                "give either --case, or both --scenario and --distance".into(),
            ))
        }
    };
    if genome.len() != scenario.genome_len() {
        return Err(CliError::Config(format!(
            "'{}' takes {} genome values, got {}",
            scenario.describe(),
            scenario.genome_len(),
            genome.len()
        )));
    }
    let sol = decode(scenario, genome, channel, d_sd);
    let m = evaluate(&sol);
    println!("{}", evaluation_json(&sol, &m, scenario, d_sd, genome, oracle, max_hops));
    Ok(())
}

fn evaluation_json(
    sol: &Solution,
    m: &Metrics,
    scenario: Scenario,
    d_sd: f64,
    genome: &[f64],
    oracle: bool,
    max_hops: u32,
) -> String {
    let genome_list: Vec<String> = genome.iter().map(|&g| json_num(g)).collect();
    let mut s = String::from("{\n");
    s.push_str(&format!("  \"scenario\": \"{}\",\n", scenario.describe()));
    s.push_str(&format!("  \"scenario_index\": {},\n", scenario.index()));
    s.push_str(&format!("  \"distance_m\": {},\n", json_num(d_sd)));
    s.push_str(&format!("  \"genome\": [{}],\n", genome_list.join(", ")));
    s.push_str(&format!("  \"feasible\": {},\n", sol.feasibility.is_feasible()));
    s.push_str(&format!("  \"violation\": {},\n", json_num(sol.feasibility.violation())));
    s.push_str(&format!("  \"exchange_clamped\": {},\n", sol.exchange_clamped));
    s.push_str("  \"criteria\": {\n");
    s.push_str(&format!("    \"capacity\": {},\n", json_num(m.capacity)));
    s.push_str(&format!("    \"delay\": {},\n", json_num(m.delay)));
    s.push_str(&format!("    \"delay_mass\": {},\n", json_num(m.delay_mass)));
    s.push_str(&format!("    \"energy\": {},\n", json_num(m.energy)));
    s.push_str(&format!("    \"reliability\": {}\n", json_opt(m.reliability)));
    s.push_str("  },\n");
    s.push_str(&format!(
        "  \"per_delivered\": {},\n",
        json_plane(m.delay, m.energy, m.capacity.min(1.0))
    ));
    s.push_str(&format!(
        "  \"per_distinct\": {}",
        m.reliability
            .map(|r| json_plane(m.delay, m.energy, r))
            .unwrap_or_else(|| "null".into())
    ));
    if oracle {
        let sums = enumerate_paths(sol, max_hops);
        let tau = sol.rate(NodeId::Source);
        s.push_str(",\n  \"oracle\": {\n");
        s.push_str(&format!("    \"max_hops\": {max_hops},\n"));
        s.push_str(&format!("    \"capacity\": {},\n", json_num(sums.capacity)));
        s.push_str(&format!("    \"delay_mass\": {},\n", json_num(sums.delay_mass)));
        s.push_str(&format!("    \"relay_tx\": {},\n", json_num(sums.relay_tx)));
        s.push_str(&format!("    \"energy\": {},\n", json_num(sums.energy(tau))));
        s.push_str(&format!(
            "    \"reliability\": {},\n",
            json_opt(sums.miss.map(|miss| 1.0 - miss))
        ));
        s.push_str(&format!("    \"tail_capacity\": {},\n", json_num(sums.tail_capacity)));
        s.push_str(&format!("    \"tail_delay_mass\": {},\n", json_num(sums.tail_delay_mass)));
        s.push_str(&format!("    \"tail_relay_tx\": {}\n", json_num(sums.tail_relay_tx)));
        s.push_str("  }\n");
    } else {
        s.push('\n');
    }
    s.push('}');
    s
}

fn cmd_optimize(
    cfg: &RunConfig,
    channel: &ChannelModel,
    out: &OutDir,
    cases_flag: &[usize],
    population: Option<usize>,
    generations: Option<usize>,
) -> Result<(), CliError> {
    let picks = cfg.selected_cases(cases_flag)?;
    for (pos, case) in picks {
        let mut ocfg = cfg.optimizer.to_config(child_seed(cfg.seed, 100 + pos as u64));
        if let Some(p) = population {
            ocfg.population = p;
        }
        if let Some(g) = generations {
            ocfg.generations = g;
        }
        if ocfg.population < 4 || !ocfg.population.is_multiple_of(2) {
            return Err(CliError::Config(format!(
                "--population must be an even number of at least 4, got {}",
                ocfg.population
            )));
        }
        if ocfg.generations == 0 {
            return Err(CliError::Config("--generations must be at least 1".into()));
        }
        let t0 = Instant::now();
        eprintln!(
            "[optimize] {} ({} x {} generations)",
            case.label(),
            ocfg.population,
            ocfg.generations
        );
        let front = optimize(case.scenario, channel, case.d_sd, &ocfg);
        if front.is_empty() {
            return Err(CliError::Diverged(format!(
                "{}: the search produced an empty front",
                case.label()
            )));
        }
        let path = write_front(out, pos, case, &front)?;
        println!("{}", path.display());
        let bounds = derive_bounds(front);
        let path = write_plane(
            out,
            pos,
            'c',
            case,
            ["delay_per_delivered", "energy_per_delivered"],
            &bounds.capacity_norm,
            &bounds.capacity_norm_optimal,
            &bounds.capacity_norm_skipped,
            &[],
        )?;
        println!("{}", path.display());
        if let (Some(points), Some(optimal)) =
            (&bounds.reliability_norm, &bounds.reliability_norm_optimal)
        {
            let shared_slot = matches!(
                case.scenario,
                Scenario::OneRelayShared | Scenario::TwoRelayShared
            );
            let provenance = if shared_slot {
                "reliability=closed-form (independence approximation; shared slot couples the path families)"
            } else {
                "reliability=closed-form (exact; every transmitter owns its slot)"
            };
            let path = write_plane(
                out,
                pos,
                'r',
                case,
                ["delay_per_distinct", "energy_per_distinct"],
                points,
                optimal,
                &bounds.reliability_norm_skipped,
                &[provenance.into()],
            )?;
            println!("{}", path.display());
        }
        eprintln!(
            "[optimize] {} done: {} front points in {:.1}s",
            case.label(),
            bounds.front.len(),
            t0.elapsed().as_secs_f64()
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    cfg: &RunConfig,
    channel: &ChannelModel,
    out: &OutDir,
    cases_flag: &[usize],
    frames: Option<u64>,
    runs: Option<u64>,
    genome: Option<&[f64]>,
    events: bool,
) -> Result<(), CliError> {
    let picks = cfg.selected_cases(cases_flag)?;
    let frames = frames.unwrap_or(cfg.simulator.frames);
    let runs = runs.unwrap_or(cfg.simulator.runs);
    if frames == 0 || runs == 0 {
        return Err(CliError::Config("--frames and --runs must be at least 1".into()));
    }
    if events && genome.is_none() {
        return Err(CliError::Config("the event log needs --genome".into()));
    }

    if let Some(genome) = genome {
        let [(pos, case)] = picks.as_slice() else {
            return Err(CliError::Config("--genome needs exactly one --case".into()));
        };
        return simulate_single(cfg, channel, out, *pos, *case, genome, frames, runs, events);
    }

    for (pos, case) in picks {
        let front = output::read_front(&out.path(&front_file(pos)), case.scenario)?;
        let case_master = child_seed(cfg.seed, 200 + pos as u64);
        let t0 = Instant::now();
        eprintln!(
            "[simulate] {}: {} entries x {} runs x {} frames",
            case.label(),
            front.len(),
            runs,
            frames
        );
        let rows: Vec<SimRow> = front
            .par_iter()
            .map(|row| {
                let sol = decode(case.scenario, &row.genome, channel, case.d_sd);
                let pooled: Vec<SimEstimates> = (0..runs)
                    .map(|r| {
                        let mut scfg = cfg
                            .simulator
                            .to_config(child_seed(case_master, row.front_index as u64 * runs + r));
                        scfg.frames = frames;
                        simulate(&sol, channel, &scfg).estimates
                    })
                    .collect();
                SimRow {
                    front_index: row.front_index,
                    capacity: row.capacity,
                    delay: row.delay,
                    energy: row.energy,
                    reliability: row.reliability,
                    estimates: pool_estimates(&pooled),
                    runs,
                }
            })
            .collect();
        let path = write_sim(out, pos, case, &rows)?;
        println!("{}", path.display());
        // Recirculating topologies have no closed-form distinct-delivery
        // rate, so their per-distinct bound plane is built here from the
        // simulated one instead.
        if case.scenario.allows_exchange() {
            let entries: Vec<(f64, f64, f64)> = rows
                .iter()
                .map(|r| (r.delay, r.energy, r.estimates.reliability))
                .collect();
            let plane = project_plane(&entries);
            let path = write_plane(
                out,
                pos,
                'r',
                case,
                ["delay_per_distinct", "energy_per_distinct"],
                &plane.points,
                &plane.optimal,
                &plane.skipped,
                &[format!("reliability=simulated frames={frames} runs={runs}")],
            )?;
            println!("{}", path.display());
        }
        eprintln!("[simulate] {} done in {:.1}s", case.label(), t0.elapsed().as_secs_f64());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn simulate_single(
    cfg: &RunConfig,
    channel: &ChannelModel,
    out: &OutDir,
    pos: usize,
    case: StudyCase,
    genome: &[f64],
    frames: u64,
    runs: u64,
    events: bool,
) -> Result<(), CliError> {
    if genome.len() != case.scenario.genome_len() {
        return Err(CliError::Config(format!(
            "'{}' takes {} genome values, got {}",
            case.scenario.describe(),
            case.scenario.genome_len(),
            genome.len()
        )));
    }
    let sol = decode(case.scenario, genome, channel, case.d_sd);
    let case_master = child_seed(cfg.seed, 200 + pos as u64);
    let mut pooled = Vec::new();
    for r in 0..runs {
        let mut scfg = cfg.simulator.to_config(child_seed(case_master, r));
        scfg.frames = frames;
        scfg.record_events = events && r == 0;
        let run = simulate(&sol, channel, &scfg);
        if scfg.record_events {
            let name = format!("sc{pos}_events.log");
            let mut text = String::new();
            for line in out.stamp_lines() {
                text.push_str(&line);
                text.push('\n');
            }
            text.push_str(&format!("# case={} genome={genome:?}\n", case.label()));
            for e in &run.events {
                let kind = match e.kind {
                    EventKind::Transmit => "tx".to_string(),
                    EventKind::Receive { from } => format!("rx from={}", from.label()),
                };
                text.push_str(&format!(
                    "frame={} slot={} node={} {} packet={} hops={}\n",
                    e.frame,
                    e.slot,
                    e.node.label(),
                    kind,
                    e.packet,
                    e.hops
                ));
            }
            std::fs::write(out.path(&name), text)?;
            println!("{}", out.path(&name).display());
        }
        pooled.push(run.estimates);
    }
    let est = pool_estimates(&pooled);
    let m = evaluate(&sol);
    println!(
        "{{\n  \"case\": \"{}\",\n  \"frames\": {frames},\n  \"runs\": {runs},\n  \
         \"analytic\": {{\"capacity\": {}, \"delay\": {}, \"energy\": {}, \"reliability\": {}}},\n  \
         \"simulated\": {{\"capacity\": {}, \"delay\": {}, \"energy\": {}, \"reliability\": {}, \
         \"deliveries\": {}, \"distinct_delivered\": {}, \"fully_drained\": {}}}\n}}",
        case.label(),
        json_num(m.capacity),
        json_num(m.delay),
        json_num(m.energy),
        json_opt(m.reliability),
        json_num(est.capacity),
        json_opt(est.delay),
        json_num(est.energy),
        json_num(est.reliability),
        est.deliveries,
        est.distinct_delivered,
        est.fully_drained
    );
    Ok(())
}

fn cmd_code_bench(
    cfg: &RunConfig,
    channel: &ChannelModel,
    out: &OutDir,
    cases_flag: &[usize],
    fragments_flag: &[usize],
    strategies_flag: &[String],
) -> Result<(), CliError> {
    let picks = cfg.selected_cases(cases_flag)?;
    let strategies: Vec<StrategyChoice> = if strategies_flag.is_empty() {
        cfg.coding.strategies.clone()
    } else {
        strategies_flag
            .iter()
            .map(|s| StrategyChoice::parse(s))
            .collect::<Result<_, _>>()?
    };
    let fragment_list: Vec<usize> = if fragments_flag.is_empty() {
        cfg.coding.fragments.clone()
    } else {
        for &k in fragments_flag {
            if k == 0 || k as u32 >= CODED_PACKET_BITS {
                return Err(CliError::Config(format!(
                    "--fragments entries must lie in 1..{CODED_PACKET_BITS}, got {k}"
                )));
            }
        }
        fragments_flag.to_vec()
    };

    for (pos, case) in picks {
        let front = output::read_front(&out.path(&front_file(pos)), case.scenario)?;
        let eligible: Vec<&FrontRow> =
            front.iter().filter(|r| r.capacity >= cfg.coding.capacity_floor).collect();
        if eligible.is_empty() {
            eprintln!(
                "[code-bench] {}: no front entry clears the {} capacity floor, skipping",
                case.label(),
                cfg.coding.capacity_floor
            );
            continue;
        }
        let keep = cfg.coding.max_solutions.min(eligible.len());
        let chosen: Vec<&FrontRow> =
            (0..keep).map(|j| eligible[j * eligible.len() / keep]).collect();
        for (si, strat) in strategies.iter().enumerate() {
            for (fi, &k) in fragment_list.iter().enumerate() {
                let base_seed = child_seed(
                    cfg.seed,
                    300 + (pos as u64) * 64 + (si as u64) * 8 + fi as u64,
                );
                let t0 = Instant::now();
                eprintln!(
                    "[code-bench] {} {} k={}: {} entries x {} transfers",
                    case.label(),
                    strat,
                    k,
                    chosen.len(),
                    cfg.coding.seeds_per_point
                );
                let spp = cfg.coding.seeds_per_point;
                let per_entry: Vec<(Vec<CodingRow>, Option<CodingMean>)> = chosen
                    .par_iter()
                    .enumerate()
                    .map(|(j, row)| {
                        let sol = decode(case.scenario, &row.genome, channel, case.d_sd);
                        let mut runs = Vec::with_capacity(spp as usize);
                        let mut sum = [0.0, 0.0];
                        let mut overhead = 0.0;
                        let mut completed = 0u64;
                        for rep in 0..spp {
                            let ccfg = CodedConfig {
                                fragments: k,
                                strategy: cfg.coding.strategy(*strat),
                                seed: child_seed(base_seed, j as u64 * spp + rep),
                                interference: cfg.simulator.interference.into(),
                                literal_forward_threshold: cfg
                                    .simulator
                                    .literal_forward_threshold,
                                ..CodedConfig::default()
                            };
                            let o = simulate_coded(&sol, channel, &ccfg);
                            if o.completed {
                                sum[0] += o.norm_delay;
                                sum[1] += o.norm_energy;
                                overhead += o.overhead_pct;
                                completed += 1;
                            }
                            runs.push(CodingRow {
                                front_index: row.front_index,
                                seed: ccfg.seed,
                                completed: o.completed,
                                frames: o.frames,
                                source_tx: o.source_tx,
                                relay_tx: o.relay_tx,
                                received: o.received,
                                overhead_pct: o.overhead_pct,
                                norm_delay: o.norm_delay,
                                norm_energy: o.norm_energy,
                            });
                        }
                        let mean = (completed > 0).then(|| CodingMean {
                            front_index: row.front_index,
                            completed,
                            attempted: spp,
                            mean_overhead_pct: overhead / completed as f64,
                            point: [sum[0] / completed as f64, sum[1] / completed as f64],
                        });
                        (runs, mean)
                    })
                    .collect();
                let mut runs = Vec::new();
                let mut means = Vec::new();
                for (r, m) in per_entry {
                    runs.extend(r);
                    means.extend(m);
                }
                let path =
                    write_coding(out, pos, case, &strat.to_string(), k, &runs, &means)?;
                println!("{}", path.display());
                eprintln!(
                    "[code-bench] {} {} k={} done in {:.1}s",
                    case.label(),
                    strat,
                    k,
                    t0.elapsed().as_secs_f64()
                );
            }
        }
    }
    Ok(())
}
