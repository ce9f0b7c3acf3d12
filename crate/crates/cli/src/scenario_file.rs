//! TOML scenario files.
//!
//! Sensor labels, the set `S`, edge endpoints, receiver ids and coordinate
//! indices are 1-based in files and 0-based in memory.
//!
//! ```toml
//! dimension = 2
//! theta = [2.5, -1.0]
//! f = 1
//! s_set = [1, 2, 3, 4]
//! rounds = 500
//!
//! [graph]
//! nodes = 8
//! edges = ["2 -> 5", "3 -> 5"]
//!
//! [[sensor]]
//! id = 1
//! role = "faulty"
//! attack = { kind = "constant", value = [2.0, -2.0] }
//!
//! [[sensor]]
//! id = 2
//! role = "normal"
//! mu = 0.2
//! regressor = { kind = "recursive-cosine", base = [0.0, 1.0], entry = 1, initial = 1.0, step_over_pi = 0.25 }
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::path::Path;

use rcta_core::attack::AttackScript;
use rcta_core::drem::{ParameterVector, RegressorKind};
use rcta_core::graph::{Digraph, NodeSet, TopologyGenerator};
use rcta_core::rcta::WeightPolicy;
use rcta_core::sim::{PeProbe, Scenario, SensorBehavior, SensorSpec, DEFAULT_ROUNDS};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Spanned;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    pub theta: Vec<f64>,
    pub f: usize,
    pub s_set: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<WideInt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pe_probe: Option<PeProbeSection>,
    pub graph: GraphSection,
    #[serde(default)]
    pub sensor: Vec<Spanned<SensorBlock>>,
}

/// A `u64` field (seeds, round indices). TOML integers are signed, so
/// values above `i64::MAX` are written as `"0x..."` strings; both forms are accepted on input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WideInt(pub u64);

impl Serialize for WideInt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(self.0) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&format!("{:#x}", self.0)),
        }
    }
}

impl<'de> Deserialize<'de> for WideInt {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(WideInt(v)),
            Raw::Text(t) => t
                .strip_prefix("0x")
                .and_then(|h| u64::from_str_radix(h, 16).ok())
                .map(WideInt)
                .ok_or_else(|| {
                    serde::de::Error::custom(format!("{t:?} is not an integer or 0x-prefixed hex"))
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightsSection {
    Uniform,
    SelfWeighted { self_weight: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeProbeSection {
    pub window: usize,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub nodes: usize,
    /// `"j -> i"`: sensor `i` hears sensor `j`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<Spanned<String>>>,
    /// Sensor label to its in-neighbors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_neighbors: Option<BTreeMap<String, Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<GeneratorSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    pub seed: WideInt,
    /// Defaults to `3f + 1`.
    #[serde(default)]
    pub r: Option<usize>,
    #[serde(default)]
    pub extra_edge_probability: Option<f64>,
    /// Keep the faulty sensors within the f-local budget of every normal one (default true).
    #[serde(default)]
    pub f_local: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleName {
    Normal,
    Faulty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorBlock {
    pub id: usize,
    pub role: RoleName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regressor: Option<RegressorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegressorSpec {
    Constant {
        value: Vec<f64>,
    },
    #[serde(rename = "alternating-period-2")]
    Alternating {
        odd: Vec<f64>,
        even: Vec<f64>,
    },
    RecursiveCosine {
        base: Vec<f64>,
        /// 1-based coordinate driven by the recursion.
        entry: usize,
        initial: f64,
        step_over_pi: f64,
    },
    CustomTable {
        rows: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AttackSpec {
    Constant {
        value: Vec<f64>,
    },
    Ramp {
        offset: Vec<f64>,
        slope: Vec<f64>,
    },
    Sinusoid {
        offset: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        drift: Option<Vec<f64>>,
        amplitude: Vec<f64>,
        frequency: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phase: Option<Vec<f64>>,
    },
    RandomUniform {
        low: Vec<f64>,
        high: Vec<f64>,
        seed: WideInt,
        #[serde(default)]
        per_receiver: bool,
    },
    Replay {
        sequence: Vec<Vec<f64>>,
    },
    CustomTable {
        default: Vec<f64>,
        #[serde(default)]
        rounds: Vec<RoundEntry>,
    },
    PerEdge {
        default: Box<AttackSpec>,
        #[serde(default)]
        receivers: Vec<ReceiverEntry>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundEntry {
    pub round: WideInt,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverEntry {
    /// 1-based receiver label.
    pub to: usize,
    pub attack: AttackSpec,
}

/// One problem found while reading a scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

/// Every problem found in a scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub source_name: String,
    pub problems: Vec<Problem>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} problem(s)",
            self.source_name,
            self.problems.len()
        )?;
        for p in &self.problems {
            write!(f, "\n  {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

/// Reads and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario_str(&text, &path.display().to_string()).map_err(CliError::Parse)
}

/// Parses scenario text; `source_name` labels error messages.
pub fn parse_scenario_str(text: &str, source_name: &str) -> Result<Scenario, ParseError> {
    let fail = |problems| ParseError {
        source_name: source_name.to_string(),
        problems,
    };
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        fail(vec![Problem {
            line,
            field: "syntax".into(),
            message: e.message().to_string(),
        }])
    })?;
    Builder::new(text).build(&file).map_err(fail)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

struct Builder<'a> {
    text: &'a str,
    problems: Vec<Problem>,
}

impl<'a> Builder<'a> {
    fn new(text: &'a str) -> Self {
        Builder {
            text,
            problems: Vec::new(),
        }
    }

    fn report(
        &mut self,
        span: Option<Range<usize>>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) {
        let line = span.map(|s| line_of(self.text, s.start));
        self.problems.push(Problem {
            line,
            field: field.into(),
            message: message.into(),
        });
    }

    fn build(mut self, file: &ScenarioFile) -> Result<Scenario, Vec<Problem>> {
        let d = file.dimension;
        if d == 0 {
            self.report(None, "dimension", "must be at least 1");
        }
        if file.theta.len() != d {
            self.report(
                None,
                "theta",
                format!("has {} entries but dimension is {d}", file.theta.len()),
            );
        }
        let theta = ParameterVector::new(file.theta.clone())
            .map_err(|e| self.report(None, "theta", e.to_string()))
            .ok();

        let n = file.graph.nodes;
        if n == 0 {
            self.report(None, "graph.nodes", "must be at least 1");
        }
        let s_set: NodeSet = file
            .s_set
            .iter()
            .filter_map(|&label| self.label(label, n, None, "s_set"))
            .collect();
        if file.s_set.is_empty() {
            self.report(None, "s_set", "must list at least one sensor");
        }

        let sensors = self.sensors(file, n, d);
        let weights = match &file.weights {
            None | Some(WeightsSection::Uniform) => WeightPolicy::Uniform,
            Some(WeightsSection::SelfWeighted { self_weight }) => {
                let p = WeightPolicy::SelfWeighted {
                    self_weight: *self_weight,
                };
                if let Err(e) = p.validate() {
                    self.report(None, "weights.self_weight", e.to_string());
                }
                p
            }
        };
        let pe_probe = match &file.pe_probe {
            None => PeProbe::default(),
            Some(p) => {
                if p.window == 0 {
                    self.report(None, "pe_probe.window", "must be positive");
                }
                if !(p.level > 0.0) {
                    self.report(None, "pe_probe.level", "must be positive");
                }
                PeProbe {
                    window: p.window,
                    level: p.level,
                }
            }
        };

        let faulty: NodeSet = sensors
            .iter()
            .enumerate()
            .filter(|(_, s)| {
                matches!(
                    s,
                    Some(SensorSpec {
                        behavior: SensorBehavior::Faulty { .. },
                        ..
                    })
                )
            })
            .map(|(i, _)| i)
            .collect();
        let graph = if n > 0 {
            self.graph(&file.graph, &s_set, &faulty, file.f)
        } else {
            None
        };

        if !self.problems.is_empty() {
            return Err(self.problems);
        }
        let scenario = Scenario {
            graph: graph.expect("graph built when no problems"),
            theta: theta.expect("theta valid when no problems"),
            f: file.f,
            s_set,
            sensors: sensors
                .into_iter()
                .map(|s| s.expect("every sensor defined"))
                .collect(),
            rounds: file.rounds.unwrap_or(DEFAULT_ROUNDS),
            weights,
            pe_probe,
            seed: file.seed.map_or(0, |s| s.0),
        };
        scenario.check().map_err(|e| {
            vec![Problem {
                line: None,
                field: "scenario".into(),
                message: e.to_string(),
            }]
        })?;
        Ok(scenario)
    }

    fn label(
        &mut self,
        label: usize,
        n: usize,
        span: Option<Range<usize>>,
        field: &str,
    ) -> Option<usize> {
        if label == 0 || label > n {
            self.report(
                span,
                field,
                format!("sensor label {label} is outside 1..={n}"),
            );
            None
        } else {
            Some(label - 1)
        }
    }

    fn sensors(&mut self, file: &ScenarioFile, n: usize, d: usize) -> Vec<Option<SensorSpec>> {
        let mut sensors: Vec<Option<SensorSpec>> = vec![None; n];
        let mut seen = vec![false; n];
        for block in &file.sensor {
            let span = Some(block.span());
            let b = block.get_ref();
            let field = format!("sensor {}", b.id);
            let Some(i) = self.label(b.id, n, span.clone(), &field) else {
                continue;
            };
            if std::mem::replace(&mut seen[i], true) {
                self.report(span, &field, "defined more than once");
                continue;
            }
            let initial = b.initial.clone().unwrap_or_else(|| vec![0.0; d]);
            if initial.len() != d {
                self.report(
                    span.clone(),
                    format!("{field}.initial"),
                    format!("has {} entries but dimension is {d}", initial.len()),
                );
            }
            let behavior = match b.role {
                RoleName::Normal => {
                    if b.attack.is_some() {
                        self.report(
                            span.clone(),
                            format!("{field}.attack"),
                            "normal sensors cannot carry an attack script",
                        );
                    }
                    let regressor = match &b.regressor {
                        Some(r) => self.regressor(r, d, span.clone(), &field),
                        None => {
                            self.report(span.clone(), &field, "normal sensor lacks a regressor");
                            None
                        }
                    };
                    let mu = match b.mu {
                        Some(mu) if mu > 0.0 && mu.is_finite() => Some(mu),
                        Some(mu) => {
                            self.report(
                                span.clone(),
                                format!("{field}.mu"),
                                format!("must be positive, got {mu}"),
                            );
                            None
                        }
                        None => {
                            self.report(span.clone(), &field, "normal sensor lacks mu");
                            None
                        }
                    };
                    regressor
                        .zip(mu)
                        .map(|(regressor, mu)| SensorBehavior::Normal { regressor, mu })
                }
                RoleName::Faulty => {
                    if b.regressor.is_some() {
                        self.report(
                            span.clone(),
                            format!("{field}.regressor"),
                            "faulty sensors take an attack script, not a regressor",
                        );
                    }
                    if b.mu.is_some() {
                        self.report(
                            span.clone(),
                            format!("{field}.mu"),
                            "faulty sensors do not use mu",
                        );
                    }
                    match &b.attack {
                        Some(a) => self
                            .attack(a, d, n, span.clone(), &field)
                            .map(|attack| SensorBehavior::Faulty { attack }),
                        None => {
                            self.report(
                                span.clone(),
                                &field,
                                "faulty sensor requires an attack script",
                            );
                            None
                        }
                    }
                }
            };
            sensors[i] = behavior.map(|behavior| SensorSpec { behavior, initial });
        }
        for (i, seen) in seen.iter().enumerate() {
            if !seen {
                self.report(None, format!("sensor {}", i + 1), "missing sensor block");
            }
        }
        sensors
    }

    fn regressor(
        &mut self,
        spec: &RegressorSpec,
        d: usize,
        span: Option<Range<usize>>,
        field: &str,
    ) -> Option<RegressorKind> {
        let kind = match spec {
            RegressorSpec::Constant { value } => RegressorKind::Constant {
                value: value.clone(),
            },
            RegressorSpec::Alternating { odd, even } => RegressorKind::Alternating {
                odd: odd.clone(),
                even: even.clone(),
            },
            RegressorSpec::RecursiveCosine {
                base,
                entry,
                initial,
                step_over_pi,
            } => {
                if *entry == 0 || *entry > base.len() {
                    self.report(
                        span,
                        format!("{field}.regressor.entry"),
                        format!("coordinate {entry} is outside 1..={}", base.len()),
                    );
                    return None;
                }
                RegressorKind::RecursiveCosine {
                    base: base.clone(),
                    entry: entry - 1,
                    initial: *initial,
                    step_over_pi: *step_over_pi,
                }
            }
            RegressorSpec::CustomTable { rows } => RegressorKind::Table { rows: rows.clone() },
        };
        match kind.dim() {
            Ok(found) if found == d => Some(kind),
            Ok(found) => {
                self.report(
                    span,
                    format!("{field}.regressor"),
                    format!("has dimension {found}, expected {d}"),
                );
                None
            }
            Err(e) => {
                self.report(span, format!("{field}.regressor"), e.to_string());
                None
            }
        }
    }

    fn attack(
        &mut self,
        spec: &AttackSpec,
        d: usize,
        n: usize,
        span: Option<Range<usize>>,
        field: &str,
    ) -> Option<AttackScript> {
        let script = self.attack_script(spec, n, span.clone(), field)?;
        match script.dim() {
            Ok(found) if found == d => Some(script),
            Ok(found) => {
                self.report(
                    span,
                    format!("{field}.attack"),
                    format!("has dimension {found}, expected {d}"),
                );
                None
            }
            Err(e) => {
                self.report(span, format!("{field}.attack"), e.to_string());
                None
            }
        }
    }

    fn attack_script(
        &mut self,
        spec: &AttackSpec,
        n: usize,
        span: Option<Range<usize>>,
        field: &str,
    ) -> Option<AttackScript> {
        Some(match spec {
            AttackSpec::Constant { value } => AttackScript::Constant {
                value: value.clone(),
            },
            AttackSpec::Ramp { offset, slope } => AttackScript::Ramp {
                offset: offset.clone(),
                slope: slope.clone(),
            },
            AttackSpec::Sinusoid {
                offset,
                drift,
                amplitude,
                frequency,
                phase,
            } => AttackScript::Sinusoid {
                offset: offset.clone(),
                drift: drift.clone().unwrap_or_else(|| vec![0.0; offset.len()]),
                amplitude: amplitude.clone(),
                frequency: frequency.clone(),
                phase: phase.clone().unwrap_or_else(|| vec![0.0; offset.len()]),
            },
            AttackSpec::RandomUniform {
                low,
                high,
                seed,
                per_receiver,
            } => AttackScript::RandomUniform {
                low: low.clone(),
                high: high.clone(),
                seed: seed.0,
                per_receiver: *per_receiver,
            },
            AttackSpec::Replay { sequence } => AttackScript::Replay {
                sequence: sequence.clone(),
            },
            AttackSpec::CustomTable { default, rounds } => AttackScript::Table {
                default: default.clone(),
                rounds: rounds
                    .iter()
                    .map(|r| (r.round.0, r.value.clone()))
                    .collect(),
            },
            AttackSpec::PerEdge { default, receivers } => {
                let default = self.attack_script(default, n, span.clone(), field)?;
                let mut mapped = Vec::new();
                for entry in receivers {
                    let to = self.label(
                        entry.to,
                        n,
                        span.clone(),
                        &format!("{field}.attack.receivers.to"),
                    )?;
                    mapped.push((
                        to,
                        self.attack_script(&entry.attack, n, span.clone(), field)?,
                    ));
                }
                AttackScript::PerEdge {
                    default: Box::new(default),
                    receivers: mapped,
                }
            }
        })
    }

    fn graph(
        &mut self,
        section: &GraphSection,
        s_set: &NodeSet,
        faulty: &NodeSet,
        f: usize,
    ) -> Option<Digraph> {
        let n = section.nodes;
        let explicit = section.edges.is_some() || section.in_neighbors.is_some();
        if let Some(gen) = &section.generate {
            if explicit {
                self.report(
                    None,
                    "graph.generate",
                    "cannot be combined with explicit edges",
                );
                return None;
            }
            if s_set.is_empty() {
                return None;
            }
            let mut builder = TopologyGenerator::new(n, s_set.clone(), gen.r.unwrap_or(3 * f + 1))
                .seed(gen.seed.0);
            if let Some(p) = gen.extra_edge_probability {
                builder = builder.extra_edge_probability(p);
            }
            if gen.f_local.unwrap_or(true) {
                builder = builder.f_local(faulty.clone(), f);
            }
            return builder
                .generate()
                .map_err(|e| self.report(None, "graph.generate", e.to_string()))
                .ok();
        }
        if !explicit {
            self.report(None, "graph", "needs `edges`, `in_neighbors` or `generate`");
            return None;
        }
        let mut g = Digraph::new(n).ok()?;
        for edge in section.edges.iter().flatten() {
            let span = Some(edge.span());
            let Some((from, to)) = parse_edge(edge.get_ref()) else {
                self.report(
                    span,
                    "graph.edges",
                    format!(
                        "cannot parse edge {:?}; expected \"j -> i\"",
                        edge.get_ref()
                    ),
                );
                continue;
            };
            let (Some(from), Some(to)) = (
                self.label(from, n, span.clone(), "graph.edges"),
                self.label(to, n, span.clone(), "graph.edges"),
            ) else {
                continue;
            };
            if let Err(e) = g.add_edge(from, to) {
                self.report(span, "graph.edges", e.to_string());
            }
        }
        for (key, sources) in section.in_neighbors.iter().flatten() {
            let field = format!("graph.in_neighbors.{key}");
            let Ok(label) = key.trim().parse::<usize>() else {
                self.report(None, &field, "key must be a sensor label");
                continue;
            };
            let Some(to) = self.label(label, n, None, &field) else {
                continue;
            };
            for &src in sources {
                if let Some(from) = self.label(src, n, None, &field) {
                    if let Err(e) = g.add_edge(from, to) {
                        self.report(None, &field, e.to_string());
                    }
                }
            }
        }
        Some(g)
    }
}

fn parse_edge(text: &str) -> Option<(usize, usize)> {
    let (from, to) = text.split_once("->")?;
    Some((from.trim().parse().ok()?, to.trim().parse().ok()?))
}

/// Canonical file form of a scenario: explicit edge list, every default spelled out.
pub fn to_file(scenario: &Scenario) -> ScenarioFile {
    let sensor = scenario
        .sensors
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let block = match &s.behavior {
                SensorBehavior::Normal { regressor, mu } => SensorBlock {
                    id: i + 1,
                    role: RoleName::Normal,
                    mu: Some(*mu),
                    initial: Some(s.initial.clone()),
                    regressor: Some(regressor_spec(regressor)),
                    attack: None,
                },
                SensorBehavior::Faulty { attack } => SensorBlock {
                    id: i + 1,
                    role: RoleName::Faulty,
                    mu: None,
                    initial: Some(s.initial.clone()),
                    regressor: None,
                    attack: Some(attack_spec(attack)),
                },
            };
            Spanned::new(0..0, block)
        })
        .collect();
    ScenarioFile {
        name: None,
        dimension: scenario.dim(),
        theta: scenario.theta.to_vec(),
        f: scenario.f,
        s_set: scenario.s_set.iter().map(|v| v + 1).collect(),
        rounds: Some(scenario.rounds),
        seed: Some(WideInt(scenario.seed)),
        weights: Some(match scenario.weights {
            WeightPolicy::Uniform => WeightsSection::Uniform,
            WeightPolicy::SelfWeighted { self_weight } => {
                WeightsSection::SelfWeighted { self_weight }
            }
        }),
        pe_probe: Some(PeProbeSection {
            window: scenario.pe_probe.window,
            level: scenario.pe_probe.level,
        }),
        graph: GraphSection {
            nodes: scenario.graph.node_count(),
            edges: Some(
                scenario
                    .graph
                    .edges()
                    .map(|(j, i)| Spanned::new(0..0, format!("{} -> {}", j + 1, i + 1)))
                    .collect(),
            ),
            in_neighbors: None,
            generate: None,
        },
        sensor,
    }
}

fn regressor_spec(kind: &RegressorKind) -> RegressorSpec {
    match kind {
        RegressorKind::Constant { value } => RegressorSpec::Constant {
            value: value.clone(),
        },
        RegressorKind::Alternating { odd, even } => RegressorSpec::Alternating {
            odd: odd.clone(),
            even: even.clone(),
        },
        RegressorKind::RecursiveCosine {
            base,
            entry,
            initial,
            step_over_pi,
        } => RegressorSpec::RecursiveCosine {
            base: base.clone(),
            entry: entry + 1,
            initial: *initial,
            step_over_pi: *step_over_pi,
        },
        RegressorKind::Table { rows } => RegressorSpec::CustomTable { rows: rows.clone() },
    }
}

fn attack_spec(script: &AttackScript) -> AttackSpec {
    match script {
        AttackScript::Constant { value } => AttackSpec::Constant {
            value: value.clone(),
        },
        AttackScript::Ramp { offset, slope } => AttackSpec::Ramp {
            offset: offset.clone(),
            slope: slope.clone(),
        },
        AttackScript::Sinusoid {
            offset,
            drift,
            amplitude,
            frequency,
            phase,
        } => AttackSpec::Sinusoid {
            offset: offset.clone(),
            drift: Some(drift.clone()),
            amplitude: amplitude.clone(),
            frequency: frequency.clone(),
            phase: Some(phase.clone()),
        },
        AttackScript::RandomUniform {
            low,
            high,
            seed,
            per_receiver,
        } => AttackSpec::RandomUniform {
            low: low.clone(),
            high: high.clone(),
            seed: WideInt(*seed),
            per_receiver: *per_receiver,
        },
        AttackScript::Replay { sequence } => AttackSpec::Replay {
            sequence: sequence.clone(),
        },
        AttackScript::Table { default, rounds } => AttackSpec::CustomTable {
            default: default.clone(),
            rounds: rounds
                .iter()
                .map(|(round, value)| RoundEntry {
                    round: WideInt(*round),
                    value: value.clone(),
                })
                .collect(),
        },
        AttackScript::PerEdge { default, receivers } => AttackSpec::PerEdge {
            default: Box::new(attack_spec(default)),
            receivers: receivers
                .iter()
                .map(|(to, s)| ReceiverEntry {
                    to: to + 1,
                    attack: attack_spec(s),
                })
                .collect(),
        },
    }
}

/// Serializes a scenario to canonical TOML.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    toml::to_string_pretty(&to_file(scenario)).expect("scenario files always serialize")
}

/// Hex SHA-256 of the canonical serialization.
pub fn scenario_hash(scenario: &Scenario) -> String {
    let digest = Sha256::digest(serialize_scenario(scenario).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
