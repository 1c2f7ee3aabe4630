//! Batch scenario runner behind the `histories` binary.
//!
//! Configuration comes from a flat `key = value` file (`--config`) and from
//! command-line flags; flags win. Every run produces a [`Report`] that renders
//! either as aligned text or as a single JSON document with fixed key order.
//! All reals in a report are rounded to 12 significant digits once, before
//! rendering, so both formats show the same values.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::causality::{guard_single_framework, ideal_cause, independent, CausalVerdict, Event};
use crate::classical_hv::{
    blc_joint, classical_chsh_max, factorization_check, factorization_contradiction, hv_chsh,
    setting_independence_check, CorrelatedLambdaModel, HiddenVariableModel, SettingDistribution,
};
use crate::eprb::{
    build_single_particle_frameworks, chsh_value_with, joint_distribution_with, parameter_independence_check,
    quantum_common_cause_with, singlet_state, table_correlator, ChshSettings, EprbScenario, MeasurementSetting,
    Outcome, Owner, SingleParticleFrameworks, SPIN, TIMES,
};
use crate::error::{Error, Result};
use crate::histories::{
    framework_distribution, frameworks_compatible, is_consistent, Consistency, Framework, ProbabilityTable,
};
use crate::linalg::StateVector;
use crate::projectors::{Sign, SpinDirection};
use crate::tolerance::Tolerances;

/// Explicit vectors within this distance of unit length are renormalized.
pub const RENORMALIZE_WINDOW: f64 = 1e-6;
const ALICE_PAIR: [&str; 2] = ["a", "a'"];
const BOB_PAIR: [&str; 2] = ["b", "b'"];

#[derive(Debug, Parser)]
#[command(name = "histories", version)]
#[command(about = "Consistent-histories analyses of spin-half and EPRB scenarios")]
pub struct Cli {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// `human` or `machine`.
    #[arg(long, global = true)]
    pub format: Option<String>,

    /// Seed for randomized runs.
    #[arg(long, global = true)]
    pub seed: Option<String>,

    /// Overrides the projector, consistency and probability thresholds.
    #[arg(long, global = true)]
    pub tolerance: Option<String>,

    /// Optional when the config file names a `scenario`.
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One spin-half: preparation, measurement and three frameworks.
    SingleParticle {
        /// Setting with optional trailing sign, e.g. `x-`.
        #[arg(long, allow_hyphen_values = true)]
        prep: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        setting: Option<String>,
    },
    /// Singlet measured by Alice and Bob.
    Eprb {
        #[arg(long, allow_hyphen_values = true)]
        alice: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        bob: Option<String>,
        /// Search for a t1 common cause (requires equal settings).
        #[arg(long)]
        common_cause: bool,
    },
    /// CHSH combination for the singlet against the classical bound.
    Chsh {
        #[arg(long)]
        optimal: bool,
        #[arg(long, allow_hyphen_values = true)]
        a: Option<String>,
        #[arg(long = "a-prime", allow_hyphen_values = true)]
        a_prime: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long = "b-prime", allow_hyphen_values = true)]
        b_prime: Option<String>,
    },
    /// Deterministic-strategy bound plus a random local-model sweep.
    HvBound {
        #[arg(long)]
        samples: Option<String>,
        #[arg(long)]
        lambdas: Option<String>,
        /// JSON model file to evaluate alongside the sweep.
        #[arg(long)]
        model: Option<String>,
    },
    /// Factorized versus Born-rule joint probability for equal settings.
    Contradiction {
        #[arg(long, allow_hyphen_values = true)]
        axis: Option<String>,
    },
    /// Random settings checked against closed forms.
    Sweep {
        #[arg(long)]
        samples: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Human,
    Machine,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    SingleParticle {
        prep: SpinDirection,
        prep_sign: Sign,
        setting: SpinDirection,
    },
    Eprb {
        alice: SpinDirection,
        bob: SpinDirection,
        common_cause: bool,
    },
    Chsh {
        /// a, a′, b, b′
        settings: [SpinDirection; 4],
    },
    HvBound {
        samples: usize,
        lambdas: usize,
        /// Extra model to evaluate, loaded from JSON.
        model: Option<Box<HiddenVariableModel>>,
    },
    Contradiction {
        axis: SpinDirection,
    },
    Sweep {
        samples: usize,
    },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::SingleParticle { .. } => "single-particle",
            Scenario::Eprb { .. } => "eprb",
            Scenario::Chsh { .. } => "chsh",
            Scenario::HvBound { .. } => "hv-bound",
            Scenario::Contradiction { .. } => "contradiction",
            Scenario::Sweep { .. } => "sweep",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub tolerances: Tolerances,
    pub format: Format,
    pub seed: u64,
    /// Non-fatal notes from parsing, e.g. renormalized vectors.
    pub warnings: Vec<String>,
}

/// Raw `key → (value, location)` pairs, before typing.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, String)>,
}

const KEYS: &[&str] = &[
    "scenario", "format", "seed", "tolerance", "prep", "setting", "alice", "bob", "common_cause", "optimal", "a",
    "a_prime", "b", "b_prime", "samples", "lambdas", "model", "axis",
];

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (n, line) in text.lines().enumerate() {
            let location = format!("line {}", n + 1);
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(&location, "expected `key = value`"))?;
            let key = key.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::parse(&location, format!("unknown key `{key}`")));
            }
            if raw.entries.contains_key(&key) {
                return Err(Error::parse(&location, format!("duplicate key `{key}`")));
            }
            raw.entries.insert(key, (value.trim().to_string(), location));
        }
        Ok(raw)
    }

    /// Flag values replace file values; the location becomes the flag name.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let location = format!("--{}", key.replace('_', "-"));
        self.entries.insert(key.to_string(), (value.into(), location));
    }

    fn get(&self, key: &str) -> Option<(&str, &str)> {
        self.entries.get(key).map(|(v, l)| (v.as_str(), l.as_str()))
    }

    fn overlay_cli(&mut self, cli: &Cli) {
        let mut put = |key: &str, value: &Option<String>| {
            if let Some(v) = value {
                self.set(key, v.clone());
            }
        };
        put("format", &cli.format);
        put("seed", &cli.seed);
        put("tolerance", &cli.tolerance);
        let Some(command) = &cli.command else { return };
        let scenario = match command {
            Command::SingleParticle { prep, setting } => {
                put("prep", prep);
                put("setting", setting);
                "single-particle"
            }
            Command::Eprb {
                alice,
                bob,
                common_cause,
            } => {
                put("alice", alice);
                put("bob", bob);
                if *common_cause {
                    put("common_cause", &Some("true".into()));
                }
                "eprb"
            }
            Command::Chsh {
                optimal,
                a,
                a_prime,
                b,
                b_prime,
            } => {
                put("a", a);
                put("a_prime", a_prime);
                put("b", b);
                put("b_prime", b_prime);
                if *optimal {
                    put("optimal", &Some("true".into()));
                }
                "chsh"
            }
            Command::HvBound {
                samples,
                lambdas,
                model,
            } => {
                put("samples", samples);
                put("lambdas", lambdas);
                put("model", model);
                "hv-bound"
            }
            Command::Contradiction { axis } => {
                put("axis", axis);
                "contradiction"
            }
            Command::Sweep { samples } => {
                put("samples", samples);
                "sweep"
            }
        };
        self.set("scenario", scenario);
    }

    /// Types and validates every entry.
    pub fn resolve(&self) -> Result<ScenarioConfig> {
        let mut warnings = Vec::new();
        let mut direction = |key: &str, default: SpinDirection| -> Result<SpinDirection> {
            match self.get(key) {
                None => Ok(default),
                Some((v, loc)) => {
                    let (n, warning) = parse_direction(v).map_err(|m| Error::parse(loc, m))?;
                    warnings.extend(warning.map(|w| format!("{loc}: {w}")));
                    Ok(n)
                }
            }
        };
        let count = |key: &str, default: usize| -> Result<usize> {
            match self.get(key) {
                None => Ok(default),
                Some((v, loc)) => match v.parse::<usize>() {
                    Ok(n) if n > 0 => Ok(n),
                    _ => Err(Error::parse(loc, format!("`{v}` is not a positive integer"))),
                },
            }
        };
        let flag = |key: &str| -> Result<bool> {
            match self.get(key) {
                None => Ok(false),
                Some((v, loc)) => v
                    .parse::<bool>()
                    .map_err(|_| Error::parse(loc, format!("`{v}` is not true/false"))),
            }
        };

        let mut prep_warning = None;
        let (kind, kind_loc) = self
            .get("scenario")
            .ok_or_else(|| Error::parse("scenario", "no subcommand given and no `scenario` key in the config"))?;
        let scenario = match kind {
            "single-particle" => {
                let (prep, prep_sign) = match self.get("prep") {
                    None => (SpinDirection::X, Sign::Plus),
                    Some((v, loc)) => {
                        let (body, sign) = split_sign(v);
                        let (n, warning) = parse_direction(body).map_err(|m| Error::parse(loc, m))?;
                        prep_warning = warning.map(|w| format!("{loc}: {w}"));
                        (n, sign)
                    }
                };
                Scenario::SingleParticle {
                    prep,
                    prep_sign,
                    setting: direction("setting", SpinDirection::Z)?,
                }
            }
            "eprb" => Scenario::Eprb {
                alice: direction("alice", SpinDirection::Z)?,
                bob: direction("bob", SpinDirection::Z)?,
                common_cause: flag("common_cause")?,
            },
            "chsh" => {
                let given: Vec<&str> = ["a", "a_prime", "b", "b_prime"]
                    .into_iter()
                    .filter(|k| self.get(k).is_some())
                    .collect();
                let optimal = ChshSettings::optimal();
                let defaults = [optimal.a, optimal.a_prime, optimal.b, optimal.b_prime].map(|s| s.direction);
                if flag("optimal")? || given.is_empty() {
                    Scenario::Chsh { settings: defaults }
                } else if given.len() != 4 {
                    return Err(Error::parse(
                        "chsh",
                        "give all of a, a-prime, b, b-prime or use --optimal",
                    ));
                } else {
                    Scenario::Chsh {
                        settings: [
                            direction("a", defaults[0])?,
                            direction("a_prime", defaults[1])?,
                            direction("b", defaults[2])?,
                            direction("b_prime", defaults[3])?,
                        ],
                    }
                }
            }
            "hv-bound" => Scenario::HvBound {
                samples: count("samples", 1000)?,
                lambdas: count("lambdas", 4)?,
                model: match self.get("model") {
                    None => None,
                    Some((path, loc)) => Some(Box::new(load_model(path).map_err(|m| Error::parse(loc, m))?)),
                },
            },
            "contradiction" => Scenario::Contradiction {
                axis: direction("axis", SpinDirection::Z)?,
            },
            "sweep" => Scenario::Sweep {
                samples: count("samples", 500)?,
            },
            other => return Err(Error::parse(kind_loc, format!("unknown scenario `{other}`"))),
        };
        warnings.extend(prep_warning);

        let format = match self.get("format") {
            None | Some(("human", _)) => Format::Human,
            Some(("machine", _)) => Format::Machine,
            Some((v, loc)) => return Err(Error::parse(loc, format!("format must be human or machine, got `{v}`"))),
        };
        let seed = match self.get("seed") {
            None => 0,
            Some((v, loc)) => v
                .parse::<u64>()
                .map_err(|_| Error::parse(loc, format!("`{v}` is not an unsigned integer")))?,
        };
        let tolerances = match self.get("tolerance") {
            None => Tolerances::default(),
            Some((v, loc)) => match v.parse::<f64>() {
                Ok(t) if t.is_finite() && t > 0.0 && t < 1.0 => Tolerances::uniform(t),
                _ => return Err(Error::parse(loc, format!("tolerance must be in (0, 1), got `{v}`"))),
            },
        };
        Ok(ScenarioConfig {
            scenario,
            tolerances,
            format,
            seed,
            warnings,
        })
    }
}

/// Parses a flat config text on its own.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    RawConfig::parse(text)?.resolve()
}

/// Merges the optional config file with the command-line flags.
pub fn config_from_cli(cli: &Cli) -> Result<ScenarioConfig> {
    let mut raw = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    raw.overlay_cli(cli);
    raw.resolve()
}

fn load_model(path: &str) -> std::result::Result<HiddenVariableModel, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let model: HiddenVariableModel = serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
    let model = model.validated().map_err(|e| format!("{path}: {e}"))?;
    if model.alice_settings().len() != 2 || model.bob_settings().len() != 2 {
        return Err(format!("{path}: a CHSH model needs two settings per side"));
    }
    Ok(model)
}

fn split_sign(text: &str) -> (&str, Sign) {
    let t = text.trim();
    let body = &t[..t.len().saturating_sub(1)];
    match t.chars().last() {
        Some('+') if !body.is_empty() => (body, Sign::Plus),
        Some('-') if !body.is_empty() => (body, Sign::Minus),
        _ => (t, Sign::Plus),
    }
}

/// `x`/`y`/`z`, a planar angle θ in radians giving (sin θ, 0, cos θ), or an
/// explicit `nx,ny,nz`. Returns a warning when a vector was renormalized.
pub fn parse_direction(text: &str) -> std::result::Result<(SpinDirection, Option<String>), String> {
    let t = text.trim();
    match t {
        "x" => return Ok((SpinDirection::X, None)),
        "y" => return Ok((SpinDirection::Y, None)),
        "z" => return Ok((SpinDirection::Z, None)),
        _ => {}
    }
    if t.contains(',') {
        let parts = t
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| format!("`{t}` is not a vector of three reals"))?;
        let [x, y, z] = parts[..] else {
            return Err(format!("`{t}` must have exactly three components"));
        };
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > RENORMALIZE_WINDOW {
            return Err(format!("`{t}` has norm {norm}, not a unit vector"));
        }
        let n = SpinDirection::normalize(x, y, z).map_err(|e| e.to_string())?;
        let warning = ((norm - 1.0).abs() > SpinDirection::UNIT_TOLERANCE)
            .then(|| format!("vector `{t}` had norm {norm}; renormalized"));
        return Ok((n, warning));
    }
    match t.parse::<f64>() {
        Ok(theta) if theta.is_finite() => Ok((SpinDirection::planar(theta), None)),
        _ => Err(format!("`{t}` is not an axis name, angle in radians or `nx,ny,nz` vector")),
    }
}

// ---------------------------------------------------------------------------
// Report

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub outcomes: Vec<String>,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub name: String,
    pub source: Option<String>,
    /// `name@time` per column.
    pub variables: Vec<String>,
    pub rows: Vec<TableRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub name: String,
    pub verdict: String,
    pub source: Option<String>,
    pub detail: Option<String>,
    pub witnesses: Vec<NamedValue>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub framework: String,
    pub consistent: bool,
    pub worst_off_diagonal: f64,
    pub worst_pair: Option<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityMatrix {
    pub frameworks: Vec<String>,
    pub compatible: Vec<Vec<bool>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub config: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub values: Vec<NamedValue>,
    pub verdicts: Vec<VerdictReport>,
    pub tables: Vec<TableReport>,
    pub consistency: Vec<ConsistencyReport>,
    pub compatibility: Option<CompatibilityMatrix>,
}

/// Rounds to 12 significant digits; magnitudes below 1e-15 print as zero.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    if x.abs() < 1e-15 {
        return 0.0;
    }
    format!("{x:.11e}").parse::<f64>().unwrap_or(x) + 0.0
}

fn value(name: impl Into<String>, v: f64) -> NamedValue {
    NamedValue {
        name: name.into(),
        value: round12(v),
    }
}

fn table_report(name: impl Into<String>, table: &ProbabilityTable) -> TableReport {
    let variables = table.variables();
    TableReport {
        name: name.into(),
        source: table.source_id().map(str::to_string),
        variables: variables.iter().map(|v| format!("{}@{}", v.name, v.time)).collect(),
        rows: table
            .rows()
            .map(|(idx, p)| TableRow {
                outcomes: idx
                    .iter()
                    .zip(variables)
                    .map(|(&i, v)| v.outcomes[i].clone())
                    .collect(),
                probability: round12(p),
            })
            .collect(),
    }
}

fn verdict_report(name: impl Into<String>, v: &CausalVerdict) -> VerdictReport {
    VerdictReport {
        name: name.into(),
        verdict: serde_json::to_value(v.relation)
            .ok()
            .and_then(|j| j.as_str().map(str::to_string))
            .unwrap_or_default(),
        source: v.source.clone(),
        detail: None,
        witnesses: v.witnesses.iter().map(|w| value(&w.name, w.value)).collect(),
    }
}

fn flag_report(name: impl Into<String>, holds: bool, yes: &str, no: &str, witnesses: Vec<NamedValue>) -> VerdictReport {
    VerdictReport {
        name: name.into(),
        verdict: if holds { yes } else { no }.to_string(),
        source: None,
        detail: None,
        witnesses,
    }
}

fn consistency_report(framework: &Framework, c: &Consistency) -> ConsistencyReport {
    ConsistencyReport {
        framework: framework.id().to_string(),
        consistent: c.consistent,
        worst_off_diagonal: round12(c.worst_off_diagonal),
        worst_pair: c.worst_pair.clone(),
    }
}

fn compatibility_matrix(frameworks: &[&Framework]) -> Result<CompatibilityMatrix> {
    let compatible = frameworks
        .iter()
        .map(|f| frameworks.iter().map(|g| frameworks_compatible(f, g)).collect())
        .collect::<Result<Vec<Vec<bool>>>>()?;
    Ok(CompatibilityMatrix {
        frameworks: frameworks.iter().map(|f| f.id().to_string()).collect(),
        compatible,
    })
}

fn echo(config: &ScenarioConfig) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        m.insert(k.to_string(), v);
    };
    put("format", format!("{:?}", config.format).to_lowercase());
    put("seed", config.seed.to_string());
    put("tolerance.cons", format!("{:e}", config.tolerances.cons));
    put("tolerance.prob", format!("{:e}", config.tolerances.prob));
    put("tolerance.proj", format!("{:e}", config.tolerances.proj));
    match &config.scenario {
        Scenario::SingleParticle {
            prep,
            prep_sign,
            setting,
        } => {
            put("prep", format!("{}{}", prep.name(), prep_sign.symbol()));
            put("setting", setting.name());
        }
        Scenario::Eprb {
            alice,
            bob,
            common_cause,
        } => {
            put("alice", alice.name());
            put("bob", bob.name());
            put("common_cause", common_cause.to_string());
        }
        Scenario::Chsh { settings } => {
            for (k, n) in ["a", "a_prime", "b", "b_prime"].iter().zip(settings) {
                put(k, n.name());
            }
        }
        Scenario::HvBound {
            samples,
            lambdas,
            model,
        } => {
            put("samples", samples.to_string());
            put("lambdas", lambdas.to_string());
            if let Some(m) = model {
                put("model.lambdas", m.lambdas().join(","));
            }
        }
        Scenario::Contradiction { axis } => put("axis", axis.name()),
        Scenario::Sweep { samples } => put("samples", samples.to_string()),
    }
    m
}

impl Report {
    fn new(config: &ScenarioConfig) -> Self {
        Self {
            scenario: config.scenario.name().to_string(),
            config: echo(config),
            warnings: config.warnings.clone(),
            values: Vec::new(),
            verdicts: Vec::new(),
            tables: Vec::new(),
            consistency: Vec::new(),
            compatibility: None,
        }
    }

    pub fn to_machine(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_human(&self) -> String {
        use std::fmt::Write;
        let num = |x: f64| serde_json::to_string(&x).expect("finite report value");
        let mut out = String::new();
        let _ = writeln!(out, "scenario: {}", self.scenario);
        for (k, v) in &self.config {
            let _ = writeln!(out, "  {k} = {v}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        if !self.values.is_empty() {
            let _ = writeln!(out, "\nvalues:");
            let width = self.values.iter().map(|v| v.name.chars().count()).max().unwrap_or(0);
            for v in &self.values {
                let pad = width - v.name.chars().count();
                let _ = writeln!(out, "  {}{} = {}", v.name, " ".repeat(pad), num(v.value));
            }
        }
        if !self.verdicts.is_empty() {
            let _ = writeln!(out, "\nverdicts:");
            for v in &self.verdicts {
                let source = v.source.as_deref().map(|s| format!(" [{s}]")).unwrap_or_default();
                let _ = writeln!(out, "  {}: {}{}", v.name, v.verdict, source);
                if let Some(d) = &v.detail {
                    let _ = writeln!(out, "    {d}");
                }
                for w in &v.witnesses {
                    let _ = writeln!(out, "    {} = {}", w.name, num(w.value));
                }
            }
        }
        for t in &self.tables {
            let source = t.source.as_deref().map(|s| format!(" [{s}]")).unwrap_or_default();
            let _ = writeln!(out, "\ntable {}{}:", t.name, source);
            let _ = writeln!(out, "  {}", t.variables.join(" | "));
            for r in &t.rows {
                let _ = writeln!(out, "  {} : {}", r.outcomes.join(" | "), num(r.probability));
            }
        }
        if !self.consistency.is_empty() {
            let _ = writeln!(out, "\nconsistency:");
            for c in &self.consistency {
                let state = if c.consistent { "consistent" } else { "INCONSISTENT" };
                let _ = writeln!(out, "  {}: {state}, worst |D| = {}", c.framework, num(c.worst_off_diagonal));
            }
        }
        if let Some(m) = &self.compatibility {
            let _ = writeln!(out, "\ncompatibility:");
            for (f, row) in m.frameworks.iter().zip(&m.compatible) {
                let cells: Vec<String> = m
                    .frameworks
                    .iter()
                    .zip(row)
                    .map(|(g, ok)| format!("{g}:{}", if *ok { "yes" } else { "no" }))
                    .collect();
                let _ = writeln!(out, "  {f} -> {}", cells.join(" "));
            }
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Human => self.to_human(),
            Format::Machine => self.to_machine(),
        }
    }
}

// ---------------------------------------------------------------------------
// Scenarios

/// Runs the configured scenario.
pub fn run(config: &ScenarioConfig) -> Result<Report> {
    let mut report = Report::new(config);
    let tol = config.tolerances;
    match &config.scenario {
        Scenario::SingleParticle {
            prep,
            prep_sign,
            setting,
        } => single_particle(&mut report, &prep.eigenstate(*prep_sign), setting, tol)?,
        Scenario::Eprb {
            alice,
            bob,
            common_cause,
        } => eprb(&mut report, alice, bob, *common_cause, tol)?,
        Scenario::Chsh { settings } => chsh(&mut report, settings, tol)?,
        Scenario::HvBound {
            samples,
            lambdas,
            model,
        } => hv_bound(&mut report, *samples, *lambdas, model.as_deref(), config.seed)?,
        Scenario::Contradiction { axis } => contradiction(&mut report, axis)?,
        Scenario::Sweep { samples } => sweep(&mut report, *samples, config.seed, tol)?,
    }
    Ok(report)
}

/// Sign whose event is most probable; ties go to +.
fn likely_sign(table: &ProbabilityTable, event: impl Fn(Sign) -> Event) -> Result<Sign> {
    let plus = table.event_probability(&[&event(Sign::Plus)])?;
    let minus = table.event_probability(&[&event(Sign::Minus)])?;
    Ok(if minus > plus { Sign::Minus } else { Sign::Plus })
}

fn single_particle(report: &mut Report, prep: &StateVector, setting: &SpinDirection, tol: Tolerances) -> Result<()> {
    let sp: SingleParticleFrameworks = build_single_particle_frameworks(prep, setting)?.with_tolerances(tol)?;
    for f in sp.frameworks() {
        report.consistency.push(consistency_report(f, &sp.consistency(f)?));
    }
    let f_table = sp.distribution(&sp.f_meas)?;
    let e_table = sp.distribution(&sp.e_prep_meas)?;
    let p_table = sp.distribution(&sp.e_prep_prep)?;
    let t1 = TIMES[1];

    let outcome = likely_sign(&f_table, |s| sp.outcome_event(s))?;
    let a_event = sp.outcome_event(outcome);
    let measured = sp.measured_spin_event(t1, outcome);
    for (table, framework) in [(&f_table, &sp.f_meas), (&e_table, &sp.e_prep_meas)] {
        let check = ideal_cause(table, &measured, &a_event)?;
        report.verdicts.push(verdict_report(
            format!("{}: {} causes {}", framework.id(), measured, a_event),
            &check.verdict(),
        ));
    }

    let prep_sign = likely_sign(&p_table, |s| sp.prep_spin_event(t1, s))?;
    let prep_event = sp.prep_spin_event(t1, prep_sign);
    let ind = independent(&p_table, &prep_event, &a_event)?;
    report.verdicts.push(verdict_report(
        format!("{}: {} vs {}", sp.e_prep_prep.id(), prep_event, a_event),
        &ind.verdict(),
    ));

    let coarse = e_table.marginalize_out(&[(TIMES[0], SPIN)])?;
    let diff = coarse.max_abs_diff(&f_table)?;
    report.verdicts.push(flag_report(
        format!("{} summed over {} equals {}", sp.e_prep_meas.id(), TIMES[0], sp.f_meas.id()),
        diff <= tol.prob,
        "holds",
        "fails",
        vec![value("max |difference|", diff)],
    ));

    let mut rule = flag_report(
        format!("combine {} with {}", sp.e_prep_meas.id(), sp.e_prep_prep.id()),
        true,
        "permitted",
        "",
        vec![],
    );
    match guard_single_framework(&[&e_table, &p_table]) {
        Ok(()) => {}
        Err(e @ Error::SingleFrameworkViolation { .. }) => {
            rule.verdict = "single-framework-violation".into();
            rule.detail = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }
    report.verdicts.push(rule);

    report.values.push(value(
        format!("{}: Pr({} | {})", sp.f_meas.id(), measured, a_event),
        f_table.conditional(std::slice::from_ref(&a_event))?.event_probability(&[&measured])?,
    ));
    report.values.push(value(
        format!("{}: Pr({} | {})", sp.e_prep_meas.id(), measured, a_event),
        e_table.conditional(std::slice::from_ref(&a_event))?.event_probability(&[&measured])?,
    ));

    for (t, f) in [(&f_table, &sp.f_meas), (&e_table, &sp.e_prep_meas), (&p_table, &sp.e_prep_prep)] {
        report.tables.push(table_report(f.id(), t));
    }
    report.compatibility = Some(compatibility_matrix(&sp.frameworks())?);
    Ok(())
}

fn outcome_event(owner: Owner, value: Sign) -> Event {
    Outcome { owner, value }.event()
}

fn eprb(report: &mut Report, a: &SpinDirection, b: &SpinDirection, common_cause: bool, tol: Tolerances) -> Result<()> {
    let alice = MeasurementSetting::new(Owner::Alice, *a, "a");
    let bob = MeasurementSetting::new(Owner::Bob, *b, "b");
    if common_cause {
        // refuse unequal settings before doing any work
        let qc = quantum_common_cause_with(&alice, &bob, tol)?;
        report.consistency.push(consistency_report(&qc.framework, &qc.consistency));
        let mut v = verdict_report(
            format!(
                "common cause of {} and {}",
                outcome_event(Owner::Alice, Sign::Plus),
                outcome_event(Owner::Bob, Sign::Minus)
            ),
            &qc.common_cause.verdict,
        );
        v.detail = Some(qc.common_cause.event.to_string());
        report.verdicts.push(v);
        report.tables.push(table_report(qc.framework.id(), &qc.table));
    }
    let scenario = EprbScenario::new(&singlet_state(), &alice, &bob)?;
    let framework = scenario.joint_framework()?.retolerance(tol)?;
    let consistency = is_consistent(&framework, &scenario.initial, &scenario.dynamics)?;
    report.consistency.insert(0, consistency_report(&framework, &consistency));
    let table = framework_distribution(&framework, &scenario.initial, &scenario.dynamics)?;
    let e = table_correlator(&table)?;
    report.values.push(value("E(a,b)", e));
    report.values.push(value("-a·b", -a.dot(b)));
    for (owner, name) in [(Owner::Alice, "A"), (Owner::Bob, "B")] {
        report.values.push(value(
            format!("Pr({name}=+1)"),
            table.event_probability(&[&outcome_event(owner, Sign::Plus)])?,
        ));
    }
    report.tables.insert(0, table_report(framework.id(), &table));
    Ok(())
}

fn chsh(report: &mut Report, settings: &[SpinDirection; 4], tol: Tolerances) -> Result<()> {
    let [a, a_prime, b, b_prime] = settings;
    let s = ChshSettings {
        a: MeasurementSetting::new(Owner::Alice, *a, "a"),
        a_prime: MeasurementSetting::new(Owner::Alice, *a_prime, "a'"),
        b: MeasurementSetting::new(Owner::Bob, *b, "b"),
        b_prime: MeasurementSetting::new(Owner::Bob, *b_prime, "b'"),
    };
    for (x, y) in [(&s.a, &s.b), (&s.a, &s.b_prime), (&s.a_prime, &s.b), (&s.a_prime, &s.b_prime)] {
        let scenario = EprbScenario::new(&singlet_state(), x, y)?;
        let f = scenario.joint_framework()?.retolerance(tol)?;
        report
            .consistency
            .push(consistency_report(&f, &is_consistent(&f, &scenario.initial, &scenario.dynamics)?));
    }
    let quantum = chsh_value_with(&s.a, &s.a_prime, &s.b, &s.b_prime, tol)?;
    let classical = classical_chsh_max(ALICE_PAIR, BOB_PAIR)?;
    for (name, e) in ["E(a,b)", "E(a,b')", "E(a',b)", "E(a',b')"].iter().zip(quantum.correlators) {
        report.values.push(value(*name, e));
    }
    report.values.push(value("S", quantum.s));
    report.values.push(value("|S|", quantum.s.abs()));
    report.values.push(value("2√2", 2.0 * SQRT_2));
    report.values.push(value("classical bound", classical.max_abs_s));
    report.verdicts.push(flag_report(
        "CHSH",
        quantum.s.abs() > classical.max_abs_s + tol.prob,
        "violation",
        "no-violation",
        vec![value("|S| - classical bound", quantum.s.abs() - classical.max_abs_s)],
    ));
    Ok(())
}

fn strategy_string(alice: &[Sign], bob: &[Sign]) -> String {
    ALICE_PAIR
        .iter()
        .zip(alice)
        .chain(BOB_PAIR.iter().zip(bob))
        .map(|(k, s)| format!("{k}→{}1", s.symbol()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn hv_bound(
    report: &mut Report,
    samples: usize,
    lambdas: usize,
    model: Option<&HiddenVariableModel>,
    seed: u64,
) -> Result<()> {
    let classical = classical_chsh_max(ALICE_PAIR, BOB_PAIR)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..samples).map(|_| rng.random()).collect();
    let sampled = seeds
        .par_iter()
        .map(|&s| {
            let mut r = ChaCha8Rng::seed_from_u64(s);
            let model = HiddenVariableModel::random(&mut r, lambdas, &ALICE_PAIR, &BOB_PAIR);
            hv_chsh(&model, ALICE_PAIR, BOB_PAIR).map(f64::abs)
        })
        .collect::<Result<Vec<f64>>>()?;
    let sampled_max = sampled.iter().copied().fold(0.0, f64::max);
    let quantum = chsh_value_with(
        &ChshSettings::optimal().a,
        &ChshSettings::optimal().a_prime,
        &ChshSettings::optimal().b,
        &ChshSettings::optimal().b_prime,
        Tolerances::default(),
    )?;
    let correlated = CorrelatedLambdaModel::singlet_outcome_pairs(&ChshSettings::optimal())?;

    report.values.push(value("deterministic max |S|", classical.max_abs_s));
    report.values.push(value("sampled max |S|", sampled_max));
    report.values.push(value("quantum |S| (optimal)", quantum.s.abs()));
    report.values.push(value("setting-dependent λ |S| (optimal)", correlated.chsh()?.abs()));

    let mut best = flag_report(
        "first maximizing strategy",
        true,
        "found",
        "",
        vec![value("S", classical.s)],
    );
    best.detail = Some(strategy_string(&classical.strategy.alice, &classical.strategy.bob));
    report.verdicts.push(best);
    report.verdicts.push(flag_report(
        "sampled local models within bound",
        sampled_max <= classical.max_abs_s + 1e-12,
        "holds",
        "fails",
        vec![value("models", samples as f64)],
    ));
    let example = HiddenVariableModel::random(&mut ChaCha8Rng::seed_from_u64(seed), lambdas, &ALICE_PAIR, &BOB_PAIR);
    let independence = setting_independence_check(&example, &SettingDistribution::uniform(&example));
    let mut assumptions = flag_report("local model assumptions", independence.holds, "in force", "not in force", vec![]);
    assumptions.detail = Some(
        independence
            .assumptions
            .iter()
            .map(|a| format!("{}: {}", a.name, a.statement))
            .collect::<Vec<_>>()
            .join("; "),
    );
    report.verdicts.push(assumptions);
    let mut outside = flag_report(
        "setting-dependent λ (outside the local class, illustration)",
        !correlated.is_setting_independent(),
        "setting-dependent",
        "setting-independent",
        vec![],
    );
    outside.detail = Some("λ = outcome pair (α,β) weighted by Born probabilities per setting pair".into());
    report.verdicts.push(outside);

    if let Some(m) = model {
        let alice = [m.alice_settings()[0].as_str(), m.alice_settings()[1].as_str()];
        let bob = [m.bob_settings()[0].as_str(), m.bob_settings()[1].as_str()];
        let s = hv_chsh(m, alice, bob)?;
        report.values.push(value("loaded model S", s));
        report.verdicts.push(flag_report(
            "loaded model within bound",
            s.abs() <= classical.max_abs_s + 1e-12,
            "holds",
            "fails",
            vec![],
        ));
        for a in alice {
            for b in bob {
                report.tables.push(table_report(format!("model({a},{b})"), &blc_joint(m, a, b)?));
            }
        }
    }
    Ok(())
}

fn contradiction(report: &mut Report, axis: &SpinDirection) -> Result<()> {
    let r = factorization_contradiction(axis)?;
    let control = factorization_check(&StateVector::basis(4, 0), &SpinDirection::Z)?;
    report.values.push(value("quantum Pr(A=+1,B=+1)", r.quantum_joint));
    report.values.push(value("Pr(A=+1|a,ψ)", r.alice_marginal));
    report.values.push(value("Pr(B=+1|b,ψ)", r.bob_marginal));
    report.values.push(value("factorized Pr(A=+1,B=+1)", r.factorized));
    report.values.push(value("mismatch", r.mismatch));
    let mut v = flag_report(
        format!("λ = ψ factorization, a = b = {}", r.axis),
        r.contradiction,
        "contradiction",
        "consistent",
        vec![],
    );
    v.detail = Some("singlet".into());
    report.verdicts.push(v);
    let mut c = flag_report(
        "λ = ψ factorization, a = b = z",
        control.contradiction,
        "contradiction",
        "consistent",
        vec![
            value("quantum Pr(A=+1,B=+1)", control.quantum_joint),
            value("factorized Pr(A=+1,B=+1)", control.factorized),
            value("mismatch", control.mismatch),
        ],
    );
    c.detail = Some("product state |0⟩⊗|0⟩".into());
    report.verdicts.push(c);
    Ok(())
}

fn sweep(report: &mut Report, samples: usize, seed: u64, tol: Tolerances) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<[SpinDirection; 3]> = (0..samples)
        .map(|_| {
            [
                SpinDirection::random(&mut rng),
                SpinDirection::random(&mut rng),
                SpinDirection::random(&mut rng),
            ]
        })
        .collect();
    let results = triples
        .par_iter()
        .map(|[a, b, b_alt]| -> Result<(f64, f64)> {
            let alice = MeasurementSetting::new(Owner::Alice, *a, "a");
            let bob = MeasurementSetting::new(Owner::Bob, *b, "b");
            let bob_alt = MeasurementSetting::new(Owner::Bob, *b_alt, "b'");
            let e = table_correlator(&joint_distribution_with(&singlet_state(), &alice, &bob, tol)?)?;
            let pi = parameter_independence_check(&alice, &bob, &bob_alt)?;
            Ok(((e + a.dot(b)).abs(), pi.max_deviation))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_corr = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst_pi = results.iter().map(|r| r.1).fold(0.0, f64::max);
    report.values.push(value("max |E(a,b) + a·b|", worst_corr));
    report.values.push(value("max Alice marginal shift", worst_pi));
    report.verdicts.push(flag_report(
        "correlator matches -cos θ",
        worst_corr <= 1e-12,
        "holds",
        "fails",
        vec![value("samples", samples as f64)],
    ));
    report.verdicts.push(flag_report(
        "parameter independence",
        worst_pi <= 1e-12,
        "holds",
        "fails",
        vec![value("samples", samples as f64)],
    ));
    Ok(())
}

/// Parses flags, runs, prints; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let outcome = config_from_cli(&cli).and_then(|config| run(&config).map(|r| (r, config.format)));
    match outcome {
        Ok((report, format)) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", report.render(format));
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
