//! Run configuration and the JSON report document. The body is byte-stable for
//! a fixed configuration; wall-times live in a separate `timing` section.

use std::fmt;
use std::str::FromStr;
use std::thread;
use std::time::Instant;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::algebra::Rational;
use crate::gkz::{ModelId, ModelSpec};
use crate::series::{HalfInt, DEFAULT_FLOOR};
use crate::transition::{
    instanton_numbers, lines_oracle, run_conjecture_pipeline_with_floor, ConjectureReport, InstantonTable, TransitionError,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Key of the section left out of the stable body.
pub const TIMING_KEY: &str = "timing";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model '{0}' has no Calabi-Yau side; instanton numbers are unsupported")]
    UnsupportedModel(ModelId),
    #[error(transparent)]
    Transition(#[from] TransitionError),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ModelSelector {
    One(ModelId),
    All,
}

impl ModelSelector {
    pub fn models(self) -> Vec<ModelId> {
        match self {
            ModelSelector::One(id) => vec![id],
            ModelSelector::All => ModelId::ALL.to_vec(),
        }
    }
}

impl fmt::Display for ModelSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSelector::One(id) => write!(f, "{id}"),
            ModelSelector::All => f.write_str("all"),
        }
    }
}

impl FromStr for ModelSelector {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(ModelSelector::All);
        }
        s.parse::<ModelId>()
            .map(ModelSelector::One)
            .map_err(|e| ReportError::InvalidConfig(e.to_string()))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Verify,
    Instantons,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Instantons => "instantons",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelSelector,
    pub order: u32,
    pub floor: HalfInt,
    pub max_degree: u32,
    pub emit_ledger: bool,
}

impl RunConfig {
    pub fn new(command: Command, model: ModelSelector) -> Self {
        RunConfig {
            command,
            model,
            order: 6,
            floor: DEFAULT_FLOOR,
            max_degree: 3,
            emit_ledger: false,
        }
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        if self.order < 2 {
            return Err(ReportError::InvalidConfig(format!("order must be at least 2, got {}", self.order)));
        }
        if self.max_degree < 1 {
            return Err(ReportError::InvalidConfig(format!("max degree must be at least 1, got {}", self.max_degree)));
        }
        Ok(())
    }

    fn to_json(&self) -> Value {
        json!({
            "command": self.command.name(),
            "model": self.model.to_string(),
            "order": self.order,
            "floor": half_string(self.floor),
            "max_degree": self.max_degree,
            "emit_ledger": self.emit_ledger,
        })
    }
}

/// `num/den` in lowest terms, also for integers.
pub fn rational_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn half_string(h: HalfInt) -> String {
    rational_string(&h.to_rational())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportDocument {
    body: Map<String, Value>,
    timing: Map<String, Value>,
    failures: Vec<String>,
}

impl ReportDocument {
    fn new(config: &RunConfig) -> Self {
        let mut body = Map::new();
        body.insert("version".into(), json!(VERSION));
        body.insert("config".into(), config.to_json());
        body.insert("models".into(), json!([]));
        body.insert("instantons".into(), json!([]));
        body.insert("ledger".into(), json!([]));
        ReportDocument { body, timing: Map::new(), failures: Vec::new() }
    }

    fn push(&mut self, key: &str, v: Value) {
        if let Some(Value::Array(a)) = self.body.get_mut(key) {
            a.push(v);
        }
    }

    pub fn body(&self) -> &Map<String, Value> {
        &self.body
    }

    /// The checksummed part: sorted keys, no wall-times.
    pub fn body_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.body).expect("JSON values always serialize");
        s.push('\n');
        s
    }

    /// Body plus the timing section.
    pub fn to_json(&self) -> String {
        let mut all = self.body.clone();
        all.insert(TIMING_KEY.into(), Value::Object(self.timing.clone()));
        let mut s = serde_json::to_string_pretty(&all).expect("JSON values always serialize");
        s.push('\n');
        s
    }

    /// One line per failed hard check.
    pub fn failures(&self) -> &[String] {
        &self.failures
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// 0 when every hard check passes, 1 when one fails, 2 when nothing could be run.
pub fn exit_code(result: &Result<ReportDocument, ReportError>) -> i32 {
    match result {
        Ok(doc) => doc.exit_code(),
        Err(_) => 2,
    }
}

fn model_json(r: &ConjectureReport) -> Value {
    let annihilation: Map<String, Value> = r
        .annihilation
        .iter()
        .map(|(label, rows)| {
            let rows: Vec<Value> = rows
                .iter()
                .map(|s| {
                    json!({
                        "operator": s.operator,
                        "trusted_through": half_string(s.trusted_through),
                        "nonzero_terms": s.nonzero_terms,
                    })
                })
                .collect();
            (label.clone(), Value::Array(rows))
        })
        .collect();
    json!({
        "id": r.id.name(),
        "order": r.order,
        "passed": r.passed(),
        "failed_stages": r.failed_stages,
        "rank_total": r.rank_total,
        "rank_trivial": r.rank_trivial,
        "monodromy": r.monodromy,
        "extended_nontrivial": r.extended_nontrivial,
        "limit_verified": r.limit_verified,
        "admissible_exponents": r.admissible_exponents.iter().map(|h| half_string(*h)).collect::<Vec<_>>(),
        "ibar_variant": r.ibar_variant,
        "annihilation": annihilation,
        "ledger_entries": r.ledger_entries,
        "stage_times": r.stage_times.iter().map(|(name, _)| name.as_str()).collect::<Vec<_>>(),
    })
}

fn stage_times_json(r: &ConjectureReport) -> Value {
    let m: Map<String, Value> = r
        .stage_times
        .iter()
        .map(|(name, d)| (name.clone(), json!(d.as_micros() as u64)))
        .collect();
    json!({ "stage_micros": m })
}

/// Run the pipeline for every selected model, one thread per model.
pub fn cmd_verify(config: &RunConfig) -> Result<ReportDocument, ReportError> {
    config.validate()?;
    let models = config.model.models();
    let reports: Vec<ConjectureReport> = thread::scope(|s| {
        let handles: Vec<_> = models
            .iter()
            .map(|&id| s.spawn(move || run_conjecture_pipeline_with_floor(&ModelSpec::new(id), config.order, config.floor)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("pipeline thread panicked")).collect()
    });
    let mut doc = ReportDocument::new(config);
    let mut timing = Map::new();
    for r in &reports {
        doc.push("models", model_json(r));
        timing.insert(r.id.name().into(), stage_times_json(r));
        doc.failures.extend(r.failed_stages.iter().map(|f| format!("{}: {f}", r.id)));
        if config.emit_ledger {
            for e in &r.ledger.entries {
                doc.push("ledger", json!(e));
            }
        }
    }
    doc.timing.insert("models".into(), Value::Object(timing));
    Ok(doc)
}

fn instanton_json(t: &InstantonTable, lines: &Rational, checks: &[(&str, bool)]) -> Value {
    let numbers: Map<String, Value> = t.numbers.iter().map(|(d, n)| (d.to_string(), json!(rational_string(n)))).collect();
    let mut v = json!({
        "id": t.id.name(),
        "n0": t.n0.to_string(),
        "numbers": numbers,
        "integral": t.integral,
        "discriminant": rational_string(&t.discriminant),
        "mirror_map": t.mirror_map.iter().map(rational_string).collect::<Vec<_>>(),
        "lines_oracle": rational_string(lines),
        "passed": checks.iter().all(|(_, ok)| *ok),
    });
    for (name, ok) in checks {
        v[*name] = json!(ok);
    }
    v
}

/// Instanton numbers for the Calabi-Yau models with the Bezout and line-count cross-checks.
pub fn cmd_instantons(config: &RunConfig) -> Result<ReportDocument, ReportError> {
    config.validate()?;
    let models: Vec<ModelId> = match config.model {
        ModelSelector::One(id) if !id.is_calabi_yau() => return Err(ReportError::UnsupportedModel(id)),
        sel => sel.models().into_iter().filter(|id| id.is_calabi_yau()).collect(),
    };
    let mut doc = ReportDocument::new(config);
    let mut timing = Map::new();
    for id in models {
        let spec = ModelSpec::new(id);
        let start = Instant::now();
        let table = instanton_numbers(&spec, config.max_degree)?;
        let lines = Rational::from_integer(lines_oracle(&spec)?);
        timing.insert(id.name().into(), json!(start.elapsed().as_micros() as u64));
        let checks = [
            ("n0_matches_degree", table.n0 == spec.y_degree().into()),
            ("n1_cross_checked", table.numbers.get(&1) == Some(&lines)),
            ("integral", table.integral),
        ];
        for (name, ok) in &checks {
            if !ok {
                doc.failures.push(format!("{id}: {name} failed"));
            }
        }
        doc.push("instantons", instanton_json(&table, &lines, &checks));
    }
    doc.timing.insert("instantons".into(), Value::Object(timing));
    Ok(doc)
}

pub fn run(config: &RunConfig) -> Result<ReportDocument, ReportError> {
    match config.command {
        Command::Verify => cmd_verify(config),
        Command::Instantons => cmd_instantons(config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_preconditions() {
        let mut c = RunConfig::new(Command::Verify, ModelSelector::One(ModelId::Local));
        assert!(c.validate().is_ok());
        c.order = 1;
        assert!(matches!(cmd_verify(&c), Err(ReportError::InvalidConfig(_))));
        let mut c = RunConfig::new(Command::Instantons, ModelSelector::All);
        c.max_degree = 0;
        assert!(c.validate().is_err());
        assert_eq!("all".parse::<ModelSelector>().unwrap(), ModelSelector::All);
        assert!("quintic".parse::<ModelSelector>().is_err());
    }

    #[test]
    fn rationals_render_as_fractions() {
        assert_eq!(rational_string(&Rational::from_integer(8.into())), "8/1");
        assert_eq!(half_string(HalfInt::from_twice(-3)), "-3/2");
    }

    #[test]
    fn instantons_reject_the_local_model() {
        let c = RunConfig::new(Command::Instantons, ModelSelector::One(ModelId::Local));
        let r = cmd_instantons(&c);
        assert_eq!(r, Err(ReportError::UnsupportedModel(ModelId::Local)));
        assert_eq!(exit_code(&r), 2);
    }

    #[test]
    fn instanton_body_is_stable_and_sorted() {
        let mut c = RunConfig::new(Command::Instantons, ModelSelector::One(ModelId::T24));
        c.max_degree = 1;
        let a = cmd_instantons(&c).unwrap();
        let b = cmd_instantons(&c).unwrap();
        assert_eq!(a.body_json(), b.body_json());
        assert_eq!(a.exit_code(), 0);
        let row = &a.body()["instantons"][0];
        assert_eq!(row["n0"], "8");
        assert_eq!(row["numbers"]["1"], "1280/1");
        assert_eq!(row["n1_cross_checked"], true);
        let keys: Vec<&String> = a.body().keys().collect();
        assert_eq!(keys, ["config", "instantons", "ledger", "models", "version"]);
        assert!(a.to_json().contains("\"timing\""));
        assert!(!a.body_json().contains("\"timing\""));
    }
}
