//! File artifacts. Every file starts with comment lines carrying the
//! configuration hash and master seed (so artifacts from different runs can
//! be told apart) and the generation time. Apart from the timestamp line,
//! rerunning with the same configuration and seed reproduces each file byte
//! for byte.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use csv::{Reader, ReaderBuilder, Writer};
use relaybound::channel::ChannelModel;
use relaybound::net::{Scenario, StudyCase};
use relaybound::pareto::Individual;
use relaybound::sim::SimEstimates;

use crate::CliError;

pub struct OutDir {
    root: PathBuf,
    stamp: String,
}

impl OutDir {
    pub fn create(root: &Path, config_hash: u64, seed: u64) -> Result<OutDir, CliError> {
        fs::create_dir_all(root)?;
        Ok(OutDir {
            root: root.to_path_buf(),
            stamp: format!("# config_hash={config_hash:016x} seed={seed}"),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn stamp_lines(&self) -> [String; 2] {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .unwrap_or_default()
            .as_secs();
        [self.stamp.clone(), format!("# generated_unix={now}")]
    }

    /// Opens `name` for writing with the stamp comments (and any extra
    /// comment lines) already emitted; CSV rows follow.
    fn csv(&self, name: &str, extra: &[String]) -> Result<Writer<File>, CliError> {
        let mut f = File::create(self.path(name))?;
        for line in self.stamp_lines() {
            writeln!(f, "{line}")?;
        }
        for c in extra {
            writeln!(f, "# {c}")?;
        }
        Ok(Writer::from_writer(f))
    }
}

/// Column names for a scenario's genome, in genome order.
pub fn genome_headers(scenario: Scenario) -> &'static [&'static str] {
    match scenario.genome_len() {
        3 => &["ax", "ay", "x_sa"],
        6 => &["ax", "ay", "bx", "by", "x_sa", "x_sb"],
        _ => &["ax", "ay", "bx", "by", "x_sa", "x_sb", "x_ab", "x_ba"],
    }
}

fn float(v: f64) -> String {
    // Shortest representation that round-trips, keeping files compact and
    // reread values exact.
    format!("{v}")
}

fn case_comments(case: StudyCase) -> Vec<String> {
    vec![
        format!("case={}", case.label()),
        format!("scenario={}", case.scenario.describe()),
    ]
}

pub fn front_file(pos: usize) -> String {
    format!("sc{pos}_B_opt.csv")
}

pub fn plane_file(pos: usize, which: char) -> String {
    format!("sc{pos}_B_{which}.csv")
}

pub fn sim_file(pos: usize) -> String {
    format!("sc{pos}_sim.csv")
}

pub fn coding_file(pos: usize, strategy: &str, fragments: usize) -> String {
    format!("sc{pos}_coding_{strategy}_k{fragments}.csv")
}

pub fn write_front(
    out: &OutDir,
    pos: usize,
    case: StudyCase,
    front: &[Individual],
) -> Result<PathBuf, CliError> {
    let name = front_file(pos);
    let mut w = out.csv(&name, &case_comments(case))?;
    let mut header: Vec<&str> = genome_headers(case.scenario).to_vec();
    header.extend_from_slice(&["capacity", "delay", "energy", "reliability", "exchange_clamped"]);
    w.write_record(&header)?;
    for ind in front {
        let mut rec: Vec<String> = ind.genome.iter().map(|&g| float(g)).collect();
        rec.push(float(ind.metrics.capacity));
        rec.push(float(ind.metrics.delay));
        rec.push(float(ind.metrics.energy));
        rec.push(ind.metrics.reliability.map(float).unwrap_or_default());
        rec.push(ind.exchange_clamped.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(out.path(&name))
}

/// Writes one normalized bound plane: every projected front entry, flagged
/// with whether it belongs to the non-dominated (optimal) subset.
pub fn write_plane(
    out: &OutDir,
    pos: usize,
    which: char,
    case: StudyCase,
    axis_names: [&str; 2],
    points: &[(usize, [f64; 2])],
    optimal: &[(usize, [f64; 2])],
    skipped: &[usize],
    extra: &[String],
) -> Result<PathBuf, CliError> {
    let name = plane_file(pos, which);
    let mut comments = case_comments(case);
    comments.extend_from_slice(extra);
    if !skipped.is_empty() {
        let list: Vec<String> = skipped.iter().map(|i| i.to_string()).collect();
        comments.push(format!("skipped_front_indices={}", list.join(",")));
    }
    let optimal_set: BTreeSet<usize> = optimal.iter().map(|&(i, _)| i).collect();
    let mut w = out.csv(&name, &comments)?;
    w.write_record(["front_index", axis_names[0], axis_names[1], "optimal"])?;
    for &(i, p) in points {
        w.write_record([
            i.to_string(),
            float(p[0]),
            float(p[1]),
            optimal_set.contains(&i).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(out.path(&name))
}

pub struct SimRow {
    pub front_index: usize,
    pub capacity: f64,
    pub delay: f64,
    pub energy: f64,
    pub reliability: Option<f64>,
    pub estimates: SimEstimates,
    pub runs: u64,
}

pub fn write_sim(out: &OutDir, pos: usize, case: StudyCase, rows: &[SimRow]) -> Result<PathBuf, CliError> {
    let name = sim_file(pos);
    let mut w = out.csv(&name, &case_comments(case))?;
    w.write_record([
        "front_index",
        "capacity",
        "delay",
        "energy",
        "reliability",
        "sim_capacity",
        "sim_delay",
        "sim_energy",
        "sim_reliability",
        "frames",
        "runs",
    ])?;
    for r in rows {
        let e = &r.estimates;
        w.write_record([
            r.front_index.to_string(),
            float(r.capacity),
            float(r.delay),
            float(r.energy),
            r.reliability.map(float).unwrap_or_default(),
            float(e.capacity),
            e.delay.map(float).unwrap_or_default(),
            float(e.energy),
            float(e.reliability),
            e.frames_injected.to_string(),
            r.runs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(out.path(&name))
}

pub struct CodingRow {
    pub front_index: usize,
    pub seed: u64,
    pub completed: bool,
    pub frames: u64,
    pub source_tx: u64,
    pub relay_tx: u64,
    pub received: u64,
    pub overhead_pct: f64,
    pub norm_delay: f64,
    pub norm_energy: f64,
}

pub struct CodingMean {
    pub front_index: usize,
    pub completed: u64,
    pub attempted: u64,
    pub mean_overhead_pct: f64,
    pub point: [f64; 2],
}

pub fn write_coding(
    out: &OutDir,
    pos: usize,
    case: StudyCase,
    strategy: &str,
    fragments: usize,
    runs: &[CodingRow],
    means: &[CodingMean],
) -> Result<PathBuf, CliError> {
    let name = coding_file(pos, strategy, fragments);
    let mut comments = case_comments(case);
    comments.push(format!("strategy={strategy} fragments={fragments}"));
    let mut w = out.csv(&name, &comments)?;
    w.write_record([
        "row",
        "front_index",
        "seed",
        "completed",
        "frames",
        "source_tx",
        "relay_tx",
        "received",
        "overhead_pct",
        "delay_per_fragment",
        "energy_per_fragment",
    ])?;
    for r in runs {
        w.write_record([
            "run".to_string(),
            r.front_index.to_string(),
            r.seed.to_string(),
            r.completed.to_string(),
            r.frames.to_string(),
            r.source_tx.to_string(),
            r.relay_tx.to_string(),
            r.received.to_string(),
            float(r.overhead_pct),
            if r.completed { float(r.norm_delay) } else { String::new() },
            if r.completed { float(r.norm_energy) } else { String::new() },
        ])?;
    }
    for m in means {
        w.write_record([
            "mean".to_string(),
            m.front_index.to_string(),
            String::new(),
            format!("{}/{}", m.completed, m.attempted),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            float(m.mean_overhead_pct),
            float(m.point[0]),
            float(m.point[1]),
        ])?;
    }
    w.flush()?;
    Ok(out.path(&name))
}

pub fn write_calibration(
    out: &OutDir,
    channel: &ChannelModel,
    max_distance: f64,
    step: f64,
) -> Result<PathBuf, CliError> {
    let name = "calibration.csv";
    let comments = vec![
        format!("noise_floor_mw={}", float(channel.noise_floor_mw)),
        format!(
            "tx_power_mw={} path_loss_exp={} packet_bits={}",
            float(channel.tx_power_mw),
            float(channel.path_loss_exp),
            channel.packet_bits
        ),
    ];
    let mut w = out.csv(name, &comments)?;
    w.write_record(["distance_m", "success_probability"])?;
    let mut d = step.max(1.0);
    while d <= max_distance {
        let p = channel
            .link_success(d, &[])
            .map_err(|e| CliError::Config(format!("channel table failed at {d} m: {e}")))?;
        w.write_record([float(d), float(p)])?;
        d += step.max(1.0);
    }
    w.flush()?;
    Ok(out.path(name))
}

fn open_csv(path: &Path) -> Result<Reader<File>, CliError> {
    if !path.exists() {
        return Err(CliError::Config(format!(
            "missing input {}; run the producing step first",
            path.display()
        )));
    }
    Ok(ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(false)
        .from_path(path)?)
}

fn parse_field(path: &Path, row: usize, name: &str, raw: &str) -> Result<f64, CliError> {
    raw.parse::<f64>().map_err(|_| {
        CliError::Config(format!(
            "{} row {}: column {} holds '{}', not a number",
            path.display(),
            row,
            name,
            raw
        ))
    })
}

pub struct FrontRow {
    pub front_index: usize,
    pub genome: Vec<f64>,
    pub capacity: f64,
    pub delay: f64,
    pub energy: f64,
    pub reliability: Option<f64>,
}

/// Reads a front file back, checking that its genome columns match the
/// scenario it is being read for.
pub fn read_front(path: &Path, scenario: Scenario) -> Result<Vec<FrontRow>, CliError> {
    let mut rdr = open_csv(path)?;
    let expected = genome_headers(scenario);
    let headers = rdr.headers()?.clone();
    let got: Vec<&str> = headers.iter().take(expected.len()).collect();
    if got != expected {
        return Err(CliError::Config(format!(
            "{} does not look like a front for '{}': genome columns are {:?}, expected {:?}",
            path.display(),
            scenario.describe(),
            got,
            expected
        )));
    }
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (ci, di, ei, ri) = match (col("capacity"), col("delay"), col("energy"), col("reliability")) {
        (Some(c), Some(d), Some(e), Some(r)) => (c, d, e, r),
        _ => {
            return Err(CliError::Config(format!(
                "{} is missing the criteria columns",
                path.display()
            )))
        }
    };
    let mut rows = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut genome = Vec::with_capacity(expected.len());
        for (g, name) in expected.iter().enumerate() {
            genome.push(parse_field(path, idx, name, &rec[g])?);
        }
        let reliability = if rec[ri].is_empty() {
            None
        } else {
            Some(parse_field(path, idx, "reliability", &rec[ri])?)
        };
        rows.push(FrontRow {
            front_index: idx,
            genome,
            capacity: parse_field(path, idx, "capacity", &rec[ci])?,
            delay: parse_field(path, idx, "delay", &rec[di])?,
            energy: parse_field(path, idx, "energy", &rec[ei])?,
            reliability,
        });
    }
    Ok(rows)
}

pub struct PlaneRows {
    pub points: Vec<(usize, [f64; 2])>,
    pub optimal: Vec<(usize, [f64; 2])>,
}

pub fn read_plane(path: &Path) -> Result<PlaneRows, CliError> {
    let mut rdr = open_csv(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() != 4 || &headers[0] != "front_index" || &headers[3] != "optimal" {
        return Err(CliError::Config(format!(
            "{} does not look like a bound plane file",
            path.display()
        )));
    }
    let mut rows = PlaneRows { points: Vec::new(), optimal: Vec::new() };
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let front_index: usize = rec[0].parse().map_err(|_| {
            CliError::Config(format!("{} row {idx}: bad front_index", path.display()))
        })?;
        let p = [
            parse_field(path, idx, "delay axis", &rec[1])?,
            parse_field(path, idx, "energy axis", &rec[2])?,
        ];
        rows.points.push((front_index, p));
        if &rec[3] == "true" {
            rows.optimal.push((front_index, p));
        }
    }
    Ok(rows)
}

pub struct SimReadRow {
    pub analytic: [f64; 3],
    pub reliability: Option<f64>,
    /// Simulated capacity, delay (zero when nothing arrived), energy.
    pub sim: [f64; 3],
    pub sim_reliability: f64,
}

pub fn read_sim(path: &Path) -> Result<Vec<SimReadRow>, CliError> {
    let mut rdr = open_csv(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().next() != Some("front_index") || headers.len() != 11 {
        return Err(CliError::Config(format!(
            "{} does not look like a simulation file",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let opt = |raw: &str, name: &str| -> Result<Option<f64>, CliError> {
            if raw.is_empty() { Ok(None) } else { parse_field(path, idx, name, raw).map(Some) }
        };
        rec[0].parse::<usize>().map_err(|_| {
            CliError::Config(format!("{} row {idx}: bad front_index", path.display()))
        })?;
        rows.push(SimReadRow {
            analytic: [
                parse_field(path, idx, "capacity", &rec[1])?,
                parse_field(path, idx, "delay", &rec[2])?,
                parse_field(path, idx, "energy", &rec[3])?,
            ],
            reliability: opt(&rec[4], "reliability")?,
            sim: [
                parse_field(path, idx, "sim_capacity", &rec[5])?,
                opt(&rec[6], "sim_delay")?.unwrap_or(0.0),
                parse_field(path, idx, "sim_energy", &rec[7])?,
            ],
            sim_reliability: parse_field(path, idx, "sim_reliability", &rec[8])?,
        });
    }
    Ok(rows)
}

pub struct CodingMeanRead {
    pub completed: u64,
    pub attempted: u64,
    pub mean_overhead_pct: f64,
    pub point: [f64; 2],
}

/// Reads the aggregated rows back out of a coded-transfer file, skipping
/// the per-run rows.
pub fn read_coding_means(path: &Path) -> Result<Vec<CodingMeanRead>, CliError> {
    let mut rdr = open_csv(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().next() != Some("row") || headers.len() != 11 {
        return Err(CliError::Config(format!(
            "{} does not look like a coded-transfer file",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if &rec[0] != "mean" {
            continue;
        }
        let (completed, attempted) = rec[3]
            .split_once('/')
            .and_then(|(c, a)| Some((c.parse().ok()?, a.parse().ok()?)))
            .ok_or_else(|| {
                CliError::Config(format!(
                    "{} row {idx}: completed column holds '{}', not 'done/tried'",
                    path.display(),
                    &rec[3]
                ))
            })?;
        rec[1].parse::<usize>().map_err(|_| {
            CliError::Config(format!("{} row {idx}: bad front_index", path.display()))
        })?;
        rows.push(CodingMeanRead {
            completed,
            attempted,
            mean_overhead_pct: parse_field(path, idx, "overhead_pct", &rec[8])?,
            point: [
                parse_field(path, idx, "delay_per_fragment", &rec[9])?,
                parse_field(path, idx, "energy_per_fragment", &rec[10])?,
            ],
        });
    }
    Ok(rows)
}

/// Writes an arbitrary stamped CSV table; the report uses this for its
/// machine-readable comparison summary.
pub fn write_table(
    out: &OutDir,
    name: &str,
    comments: &[String],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<PathBuf, CliError> {
    let mut w = out.csv(name, comments)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(out.path(name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use relaybound::criteria::Metrics;
    use relaybound::net::standard_cases;

    fn individual(genome: Vec<f64>, capacity: f64, reliability: Option<f64>) -> Individual {
        Individual {
            genome,
            metrics: Metrics {
                capacity,
                delay: 2.0,
                delay_mass: 2.0 * capacity,
                energy: 1.5,
                reliability,
            },
            objectives: [-capacity, 2.0, 1.5],
            feasible: true,
            violation: 0.0,
            exchange_clamped: false,
        }
    }

    #[test]
    fn front_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(dir.path(), 0xabcd, 7).unwrap();
        let case = standard_cases()[0];
        let front = vec![
            individual(vec![310.0, 0.0, 1.0], 0.254, Some(0.2)),
            individual(vec![100.0, -5.0, 0.25], 0.1, None),
        ];
        let path = write_front(&out, 1, case, &front).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config_hash=000000000000abcd seed=7\n"));
        assert!(text.lines().any(|l| l.starts_with("# generated_unix=")));
        let rows = read_front(&path, case.scenario).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].genome, vec![310.0, 0.0, 1.0]);
        assert_eq!(rows[0].reliability, Some(0.2));
        assert_eq!(rows[1].reliability, None);
        assert_eq!(rows[1].front_index, 1);

        let wrong = read_front(&path, standard_cases()[3].scenario);
        assert!(matches!(wrong, Err(CliError::Config(_))));
    }

    #[test]
    fn plane_files_round_trip_with_skips() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(dir.path(), 1, 1).unwrap();
        let case = standard_cases()[1];
        let pts = vec![(0usize, [1.5, 1.5]), (2, [2.0, 1.0])];
        let opt = vec![(2usize, [2.0, 1.0])];
        let path =
            write_plane(&out, 2, 'c', case, ["delay_per_delivery", "energy_per_delivery"], &pts, &opt, &[1], &[])
                .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("# skipped_front_indices=1\n"));
        let rows = read_plane(&path).unwrap();
        assert_eq!(rows.points, pts);
        assert_eq!(rows.optimal, opt);
    }
}
