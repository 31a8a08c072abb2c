//! Command-line front end.
//!
//! Every subcommand reads a flat `key = value` configuration, optionally
//! from a file, with `key=value` arguments taking precedence. Results are
//! written as CSV (with a `<output>.config.json` sidecar echoing the
//! resolved configuration) or as one JSON document.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::distributions::CompetitiveBidModel;
use crate::efficiency_sim::{run_experiment, LocalBidders, MarketConfig};
use crate::error::Error;
use crate::numeric::fmt_sig;
use crate::oracle::{grid_maximize, GridSpec, MAX_ORACLE_AUCTIONS};
use crate::solver_budget::{solve_budget, BudgetProblem};
use crate::solver_identical::{detect_bifurcation, solve_identical_with, sweep_valuations_with, IdenticalOptions, SweepRow};
use crate::solver_nonidentical::{solve_nonidentical_with, NonIdenticalOptions};
use crate::solver_sequential::{solve_sequential, Round, RoundSchedule};
use crate::utility::{local_utility, AuctionSet, GlobalBid};

/// Significant digits of every number written to CSV.
pub const CSV_DIGITS: usize = 12;

/// Header of the valuation-sweep table.
pub const SWEEP_HEADER: [&str; 7] = ["v", "b_low", "b_high", "structure", "utility", "utility_ratio_vs_local", "exposure"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Diagnostic(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Diagnostic(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Diagnostic(_) => "diagnostic",
            CliError::Io(_) => "io",
        }
    }

    /// One-line machine-readable error record.
    pub fn to_json(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() }).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonUniqueCriticalPoint { .. } => CliError::Diagnostic(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Sweep,
    Budget,
    Nonidentical,
    Sequential,
    Efficiency,
    OracleCheck,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Budget => "budget",
            Command::Nonidentical => "nonidentical",
            Command::Sequential => "sequential",
            Command::Efficiency => "efficiency",
            Command::OracleCheck => "oracle-check",
        }
    }

    /// Accepted keys with their defaults; `None` marks a key with no default.
    fn schema(&self) -> Vec<(&'static str, Option<&'static str>)> {
        let mut keys = vec![("output", Some("-")), ("format", Some("csv"))];
        let market = [("model", Some("static")), ("n", Some("5")), ("mean_n", Some("5"))];
        let identical = [("allow_oracle_fallback", Some("true")), ("low_bid_grid", Some("2000"))];
        match self {
            Command::Solve => {
                keys.extend(market);
                keys.extend([("m", None), ("v", None)]);
                keys.extend(identical);
            }
            Command::Sweep => {
                keys.extend(market);
                keys.extend([("m", None), ("grid", Some("99"))]);
                keys.extend(identical);
            }
            Command::Budget => {
                keys.extend(market);
                keys.extend([("m", None), ("budget", None), ("v", None), ("grid", Some("50"))]);
            }
            Command::Nonidentical => {
                keys.extend([("auctions", None), ("v", None), ("grid", Some("20")), ("sweep_grid", Some("1000"))]);
            }
            Command::Sequential => {
                keys.extend(market);
                keys.extend([
                    ("rounds", None),
                    ("closing_times", None),
                    ("continuation", Some("1")),
                    ("continuation_convention", Some("continue")),
                    ("v", None),
                    ("grid", Some("20")),
                ]);
            }
            Command::Efficiency => {
                keys.extend(market);
                keys.extend([
                    ("m", None),
                    ("global", Some("both")),
                    ("replications", Some("10000")),
                    ("confidence", Some("0.99")),
                    ("balance_population", Some("true")),
                    ("seed", Some("0")),
                ]);
            }
            Command::OracleCheck => {
                keys.extend(market);
                keys.extend([("m", Some("2")), ("grid", Some("21")), ("resolution", Some("0.01")), ("tolerance", Some("0.001"))]);
            }
        }
        keys
    }
}

/// A subcommand plus its fully resolved settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub values: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> CliResult<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value, got {raw:?}", i + 1)))?;
        let key = k.trim();
        if key.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", i + 1)));
        }
        out.push((key.to_string(), v.trim().to_string(), i + 1));
    }
    Ok(out)
}

impl RunConfig {
    /// Defaults, then the config file, then `key=value` overrides.
    pub fn resolve(command: Command, file_text: Option<&str>, overrides: &[String]) -> CliResult<Self> {
        let schema = command.schema();
        let known = |k: &str| schema.iter().any(|(name, _)| *name == k);
        let mut values: BTreeMap<String, String> =
            schema.iter().filter_map(|(k, d)| d.map(|d| (k.to_string(), d.to_string()))).collect();
        if let Some(text) = file_text {
            for (k, v, line) in parse_config_text(text)? {
                if !known(&k) {
                    return Err(CliError::Config(format!("line {line}: unknown key {k:?} for {}", command.name())));
                }
                values.insert(k, v);
            }
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override {o:?} is not key=value")))?;
            let k = k.trim();
            if !known(k) {
                return Err(CliError::Config(format!("unknown key {k:?} for {}", command.name())));
            }
            values.insert(k.to_string(), v.trim().to_string());
        }
        let config = Self { command, values };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> CliResult<()> {
        let required: &[&str] = match self.command {
            Command::Solve => &["m", "v"],
            Command::Sweep | Command::Efficiency => &["m"],
            Command::Budget => &["m", "budget"],
            Command::Nonidentical => &["auctions"],
            Command::Sequential | Command::OracleCheck => &[],
        };
        for key in required {
            if !self.values.contains_key(*key) {
                return Err(CliError::Config(format!("{} requires key {key:?}", self.command.name())));
            }
        }
        if self.command == Command::Sequential && self.values.contains_key("rounds") == self.values.contains_key("closing_times") {
            return Err(CliError::Config("sequential needs exactly one of \"rounds\" or \"closing_times\"".into()));
        }
        match self.get("format")? {
            "csv" | "json" => Ok(()),
            other => Err(CliError::Config(format!("format must be csv or json, got {other:?}"))),
        }
    }

    fn get(&self, key: &str) -> CliResult<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| CliError::Config(format!("missing key {key:?}")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> CliResult<T> {
        let raw = self.get(key)?;
        raw.parse().map_err(|_| CliError::Config(format!("key {key:?}: cannot parse {raw:?}")))
    }

    fn flag(&self, key: &str) -> CliResult<bool> {
        match self.get(key)? {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(CliError::Config(format!("key {key:?}: expected true or false, got {other:?}"))),
        }
    }

    fn locals(&self) -> CliResult<LocalBidders> {
        match self.get("model")? {
            "static" => Ok(LocalBidders::Static { n: self.parse("n")? }),
            "dynamic" => Ok(LocalBidders::Dynamic { mean_n: self.parse("mean_n")? }),
            other => Err(CliError::Config(format!("model must be static or dynamic, got {other:?}"))),
        }
    }

    fn model(&self) -> CliResult<CompetitiveBidModel> {
        Ok(self.locals()?.model()?)
    }

    fn identical_options(&self) -> CliResult<IdenticalOptions> {
        Ok(IdenticalOptions { allow_oracle_fallback: self.flag("allow_oracle_fallback")?, low_bid_grid: self.parse("low_bid_grid")? })
    }

    /// The single `v`, or `grid` evenly spaced valuations ending at `v_max`.
    fn valuations(&self, v_max: f64) -> CliResult<Vec<f64>> {
        if self.values.contains_key("v") {
            return Ok(vec![self.parse("v")?]);
        }
        let grid: usize = self.parse("grid")?;
        if grid == 0 {
            return Err(CliError::Config("grid must be >= 1".into()));
        }
        Ok((1..=grid).map(|k| if k == grid { v_max } else { v_max * k as f64 / grid as f64 }).collect())
    }

    fn echo(&self) -> Value {
        Value::Object(self.values.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect())
    }
}

/// One cell of an output table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_sig(*x, CSV_DIGITS),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

fn bids_cell(bids: &GlobalBid) -> Cell {
    Cell::Text(bids.as_slice().iter().map(|b| fmt_sig(*b, CSV_DIGITS)).collect::<Vec<_>>().join(";"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| Value::Object(self.header.iter().zip(row).map(|(h, c)| (h.to_string(), c.json())).collect()))
                .collect(),
        )
    }
}

/// Result of one run, ready to be written.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub config: RunConfig,
    pub table: Table,
    /// Scalars that do not fit the table, such as a detected threshold.
    pub summary: Map<String, Value>,
    /// Set when a check inside the run failed; the artifact is still written.
    pub failure: Option<String>,
}

impl Artifact {
    fn metadata(&self) -> Value {
        json!({
            "command": self.config.command.name(),
            "config": self.config.echo(),
            "summary": Value::Object(self.summary.clone()),
        })
    }

    /// Main output and the optional sidecar, as `(contents, sidecar)`.
    pub fn render(&self) -> CliResult<(String, Option<String>)> {
        match self.config.get("format")? {
            "json" => {
                let mut doc = self.metadata();
                doc["rows"] = self.table.to_json();
                Ok((pretty(&doc)?, None))
            }
            _ => Ok((self.table.to_csv()?, Some(pretty(&self.metadata())?))),
        }
    }
}

fn pretty(v: &Value) -> CliResult<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| CliError::Io(e.to_string()))
}

/// Writes `contents` to a temporary file beside `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let name = path.file_name().ok_or_else(|| CliError::Io(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(contents.as_bytes()).and_then(|_| f.sync_all()))
        .and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Path of the configuration sidecar written next to a CSV output.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".config.json");
    output.with_file_name(name)
}

/// Writes the artifact to its configured output (`-` for stdout).
pub fn write_artifact(artifact: &Artifact) -> CliResult<()> {
    let (main, sidecar) = artifact.render()?;
    let output = artifact.config.get("output")?;
    if output == "-" {
        std::io::stdout().write_all(main.as_bytes())?;
        return Ok(());
    }
    let path = Path::new(output);
    write_atomic(path, &main)?;
    if let Some(side) = sidecar {
        write_atomic(&sidecar_path(path), &side)?;
    }
    Ok(())
}

/// Table for a valuation sweep; uniform rows repeat the bid in both bid columns.
pub fn sweep_table(rows: &[SweepRow]) -> Table {
    Table {
        header: SWEEP_HEADER.to_vec(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    Cell::Num(r.v),
                    Cell::Num(r.result.low_bid()),
                    Cell::Num(r.result.high_bid()),
                    Cell::Text(r.result.structure.label().to_string()),
                    Cell::Num(r.result.utility),
                    Cell::Num(r.utility_ratio),
                    Cell::Num(r.result.bids.exposure()),
                ]
            })
            .collect(),
    }
}

/// Writes a sweep table as CSV to `path`.
pub fn emit_sweep_csv(rows: &[SweepRow], path: &Path) -> CliResult<()> {
    if rows.is_empty() {
        return Err(CliError::Config("cannot write an empty sweep".into()));
    }
    write_atomic(path, &sweep_table(rows).to_csv()?)
}

/// Executes a resolved configuration without writing anything.
pub fn run(config: &RunConfig) -> CliResult<Artifact> {
    let mut summary = Map::new();
    let mut failure = None;
    let table = match config.command {
        Command::Solve | Command::Sweep => {
            let model = config.model()?;
            let m: usize = config.parse("m")?;
            let opts = config.identical_options()?;
            if !opts.allow_oracle_fallback && !model.hazard_certified() {
                return Err(CliError::Diagnostic(
                    "hazard rate of the competitive-bid law is not nondecreasing and oracle fallback is disabled".into(),
                ));
            }
            let rows = if config.command == Command::Solve {
                let v: f64 = config.parse("v")?;
                let result = solve_identical_with(m, v, &model, &opts)?;
                let local = local_utility(v, &model);
                vec![SweepRow { v, utility_ratio: if local > 0.0 { result.utility / local } else { f64::NAN }, local_utility: local, result }]
            } else {
                let rows = sweep_valuations_with(m, &model, config.parse("grid")?, &opts)?;
                summary.insert("bifurcation_threshold".into(), json!(detect_bifurcation(&rows)));
                rows
            };
            sweep_table(&rows)
        }
        Command::Budget => budget_table(config)?,
        Command::Nonidentical => nonidentical_table(config)?,
        Command::Sequential => sequential_table(config, &mut summary)?,
        Command::Efficiency => efficiency_table(config)?,
        Command::OracleCheck => {
            let (table, failed) = oracle_table(config)?;
            summary.insert("failures".into(), json!(failed));
            if failed > 0 {
                failure = Some(format!("{failed} valuations where the solver trails the oracle"));
            }
            table
        }
    };
    Ok(Artifact { config: config.clone(), table, summary, failure })
}

fn budget_table(config: &RunConfig) -> CliResult<Table> {
    let model = config.model()?;
    let m: usize = config.parse("m")?;
    let budget: f64 = config.parse("budget")?;
    let mut rows = Vec::new();
    for v in config.valuations(model.v_max())? {
        let s = solve_budget(&BudgetProblem::new(budget, v, m, model.clone())?)?;
        rows.push(vec![
            Cell::Num(v),
            Cell::Num(budget),
            Cell::Text(format!("{:?}", s.case).to_lowercase()),
            Cell::Bool(s.single_bid_rule),
            bids_cell(&s.bids),
            Cell::Num(s.utility),
            Cell::Num(s.exposure),
            Cell::Num(s.kkt.map_or(f64::NAN, |k| k.multiplier)),
        ]);
    }
    Ok(Table { header: vec!["v", "budget", "case", "single_bid_rule", "bids", "utility", "exposure", "multiplier"], rows })
}

/// `static:6`, `dynamic:2.5`.
fn parse_model_spec(spec: &str) -> CliResult<CompetitiveBidModel> {
    let bad = || CliError::Config(format!("auction {spec:?} is not static:<n> or dynamic:<mean_n>"));
    let (kind, size) = spec.trim().split_once(':').ok_or_else(bad)?;
    match kind.trim() {
        "static" => Ok(CompetitiveBidModel::static_uniform(size.trim().parse().map_err(|_| bad())?)?),
        "dynamic" => Ok(CompetitiveBidModel::dynamic_uniform(size.trim().parse().map_err(|_| bad())?)?),
        _ => Err(bad()),
    }
}

fn nonidentical_table(config: &RunConfig) -> CliResult<Table> {
    let models = config.get("auctions")?.split(',').map(parse_model_spec).collect::<CliResult<Vec<_>>>()?;
    let auctions = AuctionSet::new(models)?;
    let opts = NonIdenticalOptions { sweep_grid: config.parse("sweep_grid")?, ..NonIdenticalOptions::default() };
    let mut rows = Vec::new();
    for v in config.valuations(auctions.v_max())? {
        let s = solve_nonidentical_with(v, &auctions, &opts)?;
        rows.push(vec![
            Cell::Num(v),
            Cell::Text(s.result.structure.label().to_string()),
            bids_cell(&s.result.bids),
            Cell::Num(s.result.utility),
            Cell::Num(s.result.bids.exposure()),
        ]);
    }
    Ok(Table { header: vec!["v", "structure", "bids", "utility", "exposure"], rows })
}

/// Rounds such as `2,1,[0.2;0.5;0.3]`: a bracketed entry lists the
/// probabilities of 0, 1, 2, ... auctions.
fn parse_rounds(spec: &str, model: &CompetitiveBidModel) -> CliResult<Vec<Round>> {
    spec.split(',')
        .map(|entry| {
            let entry = entry.trim();
            if let Some(inner) = entry.strip_prefix('[').and_then(|e| e.strip_suffix(']')) {
                let probabilities = inner
                    .split(';')
                    .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad probability in {entry:?}"))))
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(Round::Uncertain { probabilities, model: model.clone() })
            } else {
                let m: usize = entry.parse().map_err(|_| CliError::Config(format!("bad round {entry:?}")))?;
                Ok(Round::Known(AuctionSet::identical(model.clone(), m)?))
            }
        })
        .collect()
}

fn sequential_table(config: &RunConfig, summary: &mut Map<String, Value>) -> CliResult<Table> {
    let model = config.model()?;
    let gamma: f64 = config.parse("continuation")?;
    let rounds = if config.values.contains_key("rounds") {
        parse_rounds(config.get("rounds")?, &model)?
    } else {
        let times = config
            .get("closing_times")?
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad closing time {t:?}"))))
            .collect::<CliResult<Vec<_>>>()?;
        RoundSchedule::from_closing_times(&times, &model)?.rounds().to_vec()
    };
    let schedule = match config.get("continuation_convention")? {
        "continue" => RoundSchedule::new(rounds, gamma)?,
        "stop" => RoundSchedule::with_stop_probability(rounds, gamma)?,
        other => return Err(CliError::Config(format!("continuation_convention must be continue or stop, got {other:?}"))),
    };
    let mut rows = Vec::new();
    let mut totals = Vec::new();
    for v in config.valuations(model.v_max())? {
        let plan = solve_sequential(&schedule, v)?;
        totals.push(json!({ "v": v, "utility": plan.utility }));
        for (r, round) in plan.rounds.iter().enumerate() {
            for o in &round.outcomes {
                rows.push(vec![
                    Cell::Num(v),
                    Cell::Int(r as u64 + 1),
                    Cell::Int(o.auctions as u64),
                    Cell::Num(o.probability),
                    Cell::Num(round.effective_valuation),
                    bids_cell(&o.bids),
                    Cell::Num(o.round_utility),
                    Cell::Num(round.continuation_utility),
                ]);
            }
        }
    }
    summary.insert("total_utility".into(), Value::Array(totals));
    Ok(Table {
        header: vec!["v", "round", "auctions", "probability", "effective_valuation", "bids", "round_utility", "continuation_utility"],
        rows,
    })
}

fn efficiency_table(config: &RunConfig) -> CliResult<Table> {
    let locals = config.locals()?;
    let globals: &[bool] = match config.get("global")? {
        "both" => &[false, true],
        "true" => &[true],
        "false" => &[false],
        other => return Err(CliError::Config(format!("global must be true, false or both, got {other:?}"))),
    };
    let mut rows = Vec::new();
    for &global_bidder in globals {
        let market = MarketConfig {
            m: config.parse("m")?,
            locals,
            global_bidder,
            balance_population: config.flag("balance_population")?,
            replications: config.parse("replications")?,
            seed: config.parse("seed")?,
            confidence: config.parse("confidence")?,
        };
        let r = run_experiment(&market)?;
        rows.push(vec![
            Cell::Int(market.m as u64),
            Cell::Num(locals.size()),
            Cell::Text(locals.label().to_string()),
            Cell::Bool(global_bidder),
            Cell::Int(r.replications as u64),
            Cell::Num(r.mean_efficiency),
            Cell::Num(r.ci_low),
            Cell::Num(r.ci_high),
            Cell::Int(market.seed),
        ]);
    }
    Ok(Table {
        header: vec!["m", "n", "model_kind", "global_bidder", "replications", "mean_efficiency", "ci_low", "ci_high", "seed"],
        rows,
    })
}

fn oracle_table(config: &RunConfig) -> CliResult<(Table, usize)> {
    let model = config.model()?;
    let m: usize = config.parse("m")?;
    if m > MAX_ORACLE_AUCTIONS {
        return Err(CliError::Config(format!("oracle-check supports m <= {MAX_ORACLE_AUCTIONS}")));
    }
    let tolerance: f64 = config.parse("tolerance")?;
    let spec = GridSpec::new(config.parse("resolution")?, m, None)?;
    let auctions = AuctionSet::identical(model.clone(), m)?;
    let mut rows = Vec::new();
    let mut failed = 0;
    for v in config.valuations(model.v_max())? {
        let solver = solve_identical_with(m, v, &model, &IdenticalOptions::default())?.utility;
        let (_, oracle) = grid_maximize(v, &auctions, &spec)?;
        let pass = solver >= oracle - tolerance;
        failed += usize::from(!pass);
        rows.push(vec![
            Cell::Num(v),
            Cell::Num(solver),
            Cell::Num(oracle),
            Cell::Num(solver - oracle),
            Cell::Text(if pass { "PASS" } else { "FAIL" }.into()),
        ]);
    }
    Ok((Table { header: vec!["v", "solver_utility", "oracle_utility", "gap", "status"], rows }, failed))
}

#[derive(Debug, Parser)]
#[command(name = "globalbid", version, about = "Optimal bidding across simultaneous second-price auctions")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Optimal global bid for one valuation.
    Solve(Settings),
    /// Optimal global bids over a valuation grid.
    Sweep(Settings),
    /// Optimal bids under a cap on total exposure.
    Budget(Settings),
    /// Optimal bids across auctions with different competition.
    Nonidentical(Settings),
    /// Backward-induction plan over several rounds.
    Sequential(Settings),
    /// Monte Carlo market efficiency with and without a global bidder.
    Efficiency(Settings),
    /// Compare the solver against brute-force lattice search.
    #[command(name = "oracle-check")]
    OracleCheck(Settings),
}

#[derive(Debug, Args)]
struct Settings {
    /// File of `key = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// `key=value` settings; these win over the config file.
    overrides: Vec<String>,
}

/// Parses `args` (program name first), runs, writes and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return 0;
            }
            let err = CliError::Config(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let (command, settings) = match cli.command {
        CliCommand::Solve(s) => (Command::Solve, s),
        CliCommand::Sweep(s) => (Command::Sweep, s),
        CliCommand::Budget(s) => (Command::Budget, s),
        CliCommand::Nonidentical(s) => (Command::Nonidentical, s),
        CliCommand::Sequential(s) => (Command::Sequential, s),
        CliCommand::Efficiency(s) => (Command::Efficiency, s),
        CliCommand::OracleCheck(s) => (Command::OracleCheck, s),
    };
    let text = match &settings.config {
        Some(path) => Some(fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?),
        None => None,
    };
    let config = RunConfig::resolve(command, text.as_deref(), &settings.overrides)?;
    let artifact = run(&config)?;
    write_artifact(&artifact)?;
    match artifact.failure {
        Some(msg) => Err(CliError::Diagnostic(msg)),
        None => Ok(()),
    }
}
