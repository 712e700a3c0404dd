//! Run configuration. The TOML sections mirror the library modules, and
//! every default is taken from the library's own defaults so the file format
//! and the code cannot drift apart. Unknown keys are rejected rather than
//! ignored: a typo in a config file should fail loudly.

use std::fmt;
use std::path::Path;

use relaybound::channel::ChannelModel;
use relaybound::coding::{CodedConfig, CodingStrategy, CODED_PACKET_BITS};
use relaybound::net::{standard_cases, StudyCase};
use relaybound::pareto::OptimizerConfig;
use relaybound::sim::{BufferPolicy, InterferenceMode, SimConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every random stream in a run is derived from it.
    pub seed: u64,
    pub channel: ChannelSection,
    pub optimizer: OptimizerSection,
    pub simulator: SimulatorSection,
    pub coding: CodingSection,
    pub cases: CasesSection,
    pub report: ReportSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            channel: ChannelSection::default(),
            optimizer: OptimizerSection::default(),
            simulator: SimulatorSection::default(),
            coding: CodingSection::default(),
            cases: CasesSection::default(),
            report: ReportSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub tx_power_mw: f64,
    pub path_loss_exp: f64,
    pub packet_bits: u32,
    /// Explicit noise floor in milliwatts. Absent, the reference model is
    /// used: the floor is calibrated so a 310 m link succeeds with
    /// probability 0.504.
    pub noise_floor_mw: Option<f64>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        // The reference constants are what `ChannelModel::with_noise` fills
        // in around any explicit floor.
        let reference = ChannelModel::with_noise(1.0);
        ChannelSection {
            tx_power_mw: reference.tx_power_mw,
            path_loss_exp: reference.path_loss_exp,
            packet_bits: reference.packet_bits,
            noise_floor_mw: None,
        }
    }
}

impl ChannelSection {
    /// Builds the channel model, calibrating the noise floor when none is
    /// given. Calibration only exists for the reference constants, so custom
    /// constants require an explicit floor.
    pub fn resolve(&self) -> Result<ChannelModel, CliError> {
        match self.noise_floor_mw {
            Some(noise) => {
                if noise <= 0.0 {
                    return Err(CliError::Config("channel.noise_floor_mw must be positive".into()));
                }
                Ok(ChannelModel {
                    tx_power_mw: self.tx_power_mw,
                    path_loss_exp: self.path_loss_exp,
                    noise_floor_mw: noise,
                    packet_bits: self.packet_bits,
                })
            }
            None => {
                let reference = ChannelSection::default();
                if *self != reference {
                    return Err(CliError::Config(
                        "custom channel constants need an explicit channel.noise_floor_mw; \
                         calibration is only defined for the reference constants"
                            .into(),
                    ));
                }
                ChannelModel::calibrated()
                    .map_err(|e| CliError::Diverged(format!("channel calibration failed: {e}")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub population: usize,
    pub generations: usize,
    pub crossover_prob: f64,
    pub crossover_eta: f64,
    pub mutation_eta: f64,
    /// Per-gene mutation probability; absent means one over the genome
    /// length.
    pub mutation_prob: Option<f64>,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        OptimizerSection {
            population: d.population,
            generations: d.generations,
            crossover_prob: d.crossover_prob,
            crossover_eta: d.crossover_eta,
            mutation_eta: d.mutation_eta,
            mutation_prob: d.mutation_prob,
        }
    }
}

impl OptimizerSection {
    pub fn to_config(&self, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            population: self.population,
            generations: self.generations,
            crossover_prob: self.crossover_prob,
            crossover_eta: self.crossover_eta,
            mutation_eta: self.mutation_eta,
            mutation_prob: self.mutation_prob,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterferenceChoice {
    /// Draw concurrent transmissions and apply their interference per slot.
    Realized,
    /// Fold mean interference into each link's success probability.
    Averaged,
}

impl From<InterferenceChoice> for InterferenceMode {
    fn from(c: InterferenceChoice) -> InterferenceMode {
        match c {
            InterferenceChoice::Realized => InterferenceMode::Realized,
            InterferenceChoice::Averaged => InterferenceMode::Averaged,
        }
    }
}

impl fmt::Display for InterferenceChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InterferenceChoice::Realized => "realized",
            InterferenceChoice::Averaged => "averaged",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BufferChoice {
    /// Relays queue every copy they receive.
    Lossless,
    /// Relays keep only the newest packet.
    SingleNewest,
}

impl From<BufferChoice> for BufferPolicy {
    fn from(c: BufferChoice) -> BufferPolicy {
        match c {
            BufferChoice::Lossless => BufferPolicy::Lossless,
            BufferChoice::SingleNewest => BufferPolicy::SingleNewest,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorSection {
    /// Frames injected per run.
    pub frames: u64,
    /// Independent runs pooled per front entry.
    pub runs: u64,
    pub interference: InterferenceChoice,
    pub buffer: BufferChoice,
    /// Accept a forwarding draw only when it lands at or above the gene
    /// instead of below it; quantifies the alternative reading of the
    /// forwarding genes.
    pub literal_forward_threshold: bool,
}

impl Default for SimulatorSection {
    fn default() -> Self {
        let d = SimConfig::default();
        SimulatorSection {
            frames: d.frames,
            runs: 5,
            interference: match d.interference {
                InterferenceMode::Realized => InterferenceChoice::Realized,
                InterferenceMode::Averaged => InterferenceChoice::Averaged,
            },
            buffer: match d.buffer {
                BufferPolicy::Lossless => BufferChoice::Lossless,
                BufferPolicy::SingleNewest => BufferChoice::SingleNewest,
            },
            literal_forward_threshold: d.literal_forward_threshold,
        }
    }
}

impl SimulatorSection {
    pub fn to_config(&self, seed: u64) -> SimConfig {
        SimConfig {
            frames: self.frames,
            seed,
            interference: self.interference.into(),
            buffer: self.buffer.into(),
            literal_forward_threshold: self.literal_forward_threshold,
            ..SimConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyChoice {
    Plain,
    Rxor,
    Rlnc,
}

impl StrategyChoice {
    pub fn parse(name: &str) -> Result<StrategyChoice, CliError> {
        match name {
            "plain" => Ok(StrategyChoice::Plain),
            "rxor" => Ok(StrategyChoice::Rxor),
            "rlnc" => Ok(StrategyChoice::Rlnc),
            other => Err(CliError::Config(format!(
                "unknown coding strategy '{other}' (expected plain, rxor, or rlnc)"
            ))),
        }
    }
}

impl fmt::Display for StrategyChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyChoice::Plain => "plain",
            StrategyChoice::Rxor => "rxor",
            StrategyChoice::Rlnc => "rlnc",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodingSection {
    /// Message sizes (fragments per message) to benchmark.
    pub fragments: Vec<usize>,
    pub strategies: Vec<StrategyChoice>,
    pub rxor_memory: usize,
    pub rlnc_memory: usize,
    /// Independent transfers averaged per front entry.
    pub seeds_per_point: u64,
    /// Front entries below this capacity are skipped: a transfer across a
    /// dead configuration never completes.
    pub capacity_floor: f64,
    /// Evenly spaced cap on how many front entries are benchmarked.
    pub max_solutions: usize,
}

impl Default for CodingSection {
    fn default() -> Self {
        let d = CodedConfig::default();
        CodingSection {
            fragments: vec![d.fragments],
            strategies: vec![StrategyChoice::Plain, StrategyChoice::Rxor, StrategyChoice::Rlnc],
            rxor_memory: 8,
            rlnc_memory: 100,
            seeds_per_point: 50,
            capacity_floor: 0.02,
            max_solutions: 150,
        }
    }
}

impl CodingSection {
    pub fn strategy(&self, choice: StrategyChoice) -> CodingStrategy {
        match choice {
            StrategyChoice::Plain => CodingStrategy::Plain,
            StrategyChoice::Rxor => CodingStrategy::RXor { memory: self.rxor_memory },
            StrategyChoice::Rlnc => CodingStrategy::Rlnc { memory: self.rlnc_memory },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CasesSection {
    /// Study cases to run, by their position in the standard list (1 to 6).
    pub include: Vec<usize>,
}

impl Default for CasesSection {
    fn default() -> Self {
        CasesSection { include: (1..=standard_cases().len()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Slack applied to the cross-case dominance checks, absorbing sampling
    /// noise in point positions.
    pub dominance_slack: f64,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection { dominance_slack: 1e-3 }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
        let cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                toml::from_str(&text).map_err(|e| {
                    CliError::Config(format!("invalid config {}: {e}", p.display()))
                })?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let err = |msg: String| Err(CliError::Config(msg));
        if self.optimizer.population < 4 || !self.optimizer.population.is_multiple_of(2) {
            return err(format!(
                "optimizer.population must be an even number of at least 4, got {}",
                self.optimizer.population
            ));
        }
        if self.optimizer.generations == 0 {
            return err("optimizer.generations must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.optimizer.crossover_prob) {
            return err("optimizer.crossover_prob must lie in [0, 1]".into());
        }
        if let Some(p) = self.optimizer.mutation_prob {
            if !(0.0..=1.0).contains(&p) {
                return err("optimizer.mutation_prob must lie in [0, 1]".into());
            }
        }
        if self.simulator.frames == 0 || self.simulator.runs == 0 {
            return err("simulator.frames and simulator.runs must be at least 1".into());
        }
        if self.coding.fragments.is_empty() {
            return err("coding.fragments must name at least one message size".into());
        }
        for &k in &self.coding.fragments {
            if k == 0 || k as u32 >= CODED_PACKET_BITS {
                return err(format!(
                    "coding.fragments entries must lie in 1..{CODED_PACKET_BITS}, got {k}"
                ));
            }
        }
        if self.coding.strategies.is_empty() {
            return err("coding.strategies must name at least one strategy".into());
        }
        if self.coding.rxor_memory == 0 || self.coding.rlnc_memory == 0 {
            return err("coding memories must be at least 1".into());
        }
        if self.coding.seeds_per_point == 0 {
            return err("coding.seeds_per_point must be at least 1".into());
        }
        if self.coding.max_solutions == 0 {
            return err("coding.max_solutions must be at least 1".into());
        }
        if self.cases.include.is_empty() {
            return err("cases.include must select at least one case".into());
        }
        let n = standard_cases().len();
        for &c in &self.cases.include {
            if c == 0 || c > n {
                return err(format!("cases.include entries must lie in 1..={n}, got {c}"));
            }
        }
        if self.report.dominance_slack < 0.0 {
            return err("report.dominance_slack must not be negative".into());
        }
        Ok(())
    }

    /// The cases a command should run: an explicit command-line selection
    /// wins over the config section. Returned as (position, case) with
    /// 1-based positions, deduplicated, in standard order.
    pub fn selected_cases(&self, flag: &[usize]) -> Result<Vec<(usize, StudyCase)>, CliError> {
        let all = standard_cases();
        let wanted: &[usize] = if flag.is_empty() { &self.cases.include } else { flag };
        let mut picks = Vec::new();
        for pos in 1..=all.len() {
            if wanted.contains(&pos) && !picks.iter().any(|&(p, _)| p == pos) {
                picks.push((pos, all[pos - 1]));
            }
        }
        for &pos in wanted {
            if pos == 0 || pos > all.len() {
                return Err(CliError::Config(format!(
                    "case {pos} does not exist; the standard list has {} entries",
                    all.len()
                )));
            }
        }
        Ok(picks)
    }

    /// Canonical TOML rendering, used both by `--print-defaults` and as the
    /// input to the configuration hash.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn hash(&self) -> u64 {
        fnv1a64(self.to_toml().as_bytes())
    }
}

/// 64-bit FNV-1a, used to stamp output files with the configuration that
/// produced them.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
