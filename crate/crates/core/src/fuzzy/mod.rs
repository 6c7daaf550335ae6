//! Fuzzy obstacle avoidance.
//!
//! Two sonar distances (front and right, in cm) are fuzzified over near /
//! medium / far terms, combined through a 3×3 Max-Min rule table, and the
//! aggregated output set is reduced to a turn angle (degrees, positive =
//! rightward) by its discrete centroid. Everything here is a pure function of
//! its inputs.

mod inference;
mod membership;
mod rules;
mod variable;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use inference::{defuzz_centroid, infer, output_grid, AggregatedOutput};
pub use membership::{MembershipFunction, ShapeKind};
pub use rules::{Rule, RuleBase};
pub use variable::{Degrees, LinguisticVariable, Term};

use rules::IndexedRule;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("malformed {kind} breakpoints {points:?}: need non-decreasing finite values of the right count")]
    MalformedBreakpoints { kind: ShapeKind, points: Vec<f64> },
    #[error("variable `{variable}`: bad universe [{lo}, {hi}]")]
    BadUniverse { variable: String, lo: f64, hi: f64 },
    #[error("variable `{variable}` has no terms")]
    NoTerms { variable: String },
    #[error("variable `{variable}`: duplicate or empty term name `{term}`")]
    DuplicateTerm { variable: String, term: String },
    #[error("variable `{variable}`: support of `{term}` leaves the universe")]
    TermOutsideUniverse { variable: String, term: String },
    #[error("variable `{variable}`: no term covers x = {at}")]
    IncompleteCoverage { variable: String, at: f64 },
    #[error("unknown term `{term}` for variable `{variable}`")]
    UnknownTerm { variable: String, term: String },
    #[error("membership degree {degree} for `{term}` is outside [0, 1]")]
    BadDegree { term: String, degree: f64 },
    #[error("rule table has no entry for ({front}, {right})")]
    MissingRule { front: String, right: String },
    #[error("rule table has more than one entry for ({front}, {right})")]
    DuplicateRule { front: String, right: String },
    #[error("grid step must be positive and finite, got {0}")]
    BadGridStep(f64),
    #[error("aggregated output needs a strictly increasing grid and degrees in [0, 1]")]
    MalformedAggregate,
    #[error("no rule fired: the aggregated output is zero everywhere")]
    NoActivation,
    #[error("fuzzy config: {0}")]
    Parse(String),
}

/// Declarative description of the avoidance controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuzzyConfig {
    /// Front sonar distance (cm).
    pub front: LinguisticVariable,
    /// Right sonar distance (cm).
    pub right: LinguisticVariable,
    /// Turn angle (degrees, positive = rightward).
    pub output: LinguisticVariable,
    pub rules: RuleBase,
    /// Spacing of the defuzzification grid, degrees.
    pub grid_step: f64,
}

pub const DEFAULT_GRID_STEP: f64 = 0.05;

fn distance_variable(name: &str) -> LinguisticVariable {
    let terms = vec![
        Term::new("near", MembershipFunction::trapezoid(4.0, 4.0, 25.0, 45.0).unwrap()),
        Term::new("medium", MembershipFunction::triangle(25.0, 45.0, 70.0).unwrap()),
        Term::new("far", MembershipFunction::trapezoid(45.0, 70.0, 100.0, 100.0).unwrap()),
    ];
    LinguisticVariable::new(name, "cm", (4.0, 100.0), terms).expect("canonical distance terms")
}

fn turn_variable() -> LinguisticVariable {
    let terms = vec![
        Term::new("neg_small", MembershipFunction::triangle(-20.0, -10.0, 0.0).unwrap()),
        Term::new("zero", MembershipFunction::triangle(-10.0, 0.0, 10.0).unwrap()),
        Term::new("pos_small", MembershipFunction::triangle(0.0, 15.0, 30.0).unwrap()),
        Term::new("pos_medium", MembershipFunction::triangle(15.0, 30.0, 45.0).unwrap()),
        Term::new("pos_large", MembershipFunction::trapezoid(30.0, 45.0, 60.0, 60.0).unwrap()),
    ];
    LinguisticVariable::new("turn", "deg", (-20.0, 60.0), terms).expect("canonical turn terms")
}

impl FuzzyConfig {
    /// Inputs on [4, 100] cm, output on [-20, 60] degrees, the standard
    /// avoidance table and a 0.05° grid.
    pub fn canonical() -> Self {
        Self {
            front: distance_variable("front"),
            right: distance_variable("right"),
            output: turn_variable(),
            rules: RuleBase::avoidance_table(),
            grid_step: DEFAULT_GRID_STEP,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, FuzzyError> {
        toml::from_str(text).map_err(|e| FuzzyError::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FuzzyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| FuzzyError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

impl Default for FuzzyConfig {
    fn default() -> Self {
        Self::canonical()
    }
}

/// A validated [`FuzzyConfig`] with the rule table resolved and the output
/// grid precomputed.
#[derive(Debug, Clone)]
pub struct FuzzyController {
    config: FuzzyConfig,
    rules: Vec<IndexedRule>,
    grid: Vec<f64>,
}

impl FuzzyController {
    pub fn new(config: FuzzyConfig) -> Result<Self, FuzzyError> {
        let rules = config
            .rules
            .resolve(&config.front, &config.right, &config.output)?;
        let grid = output_grid(config.output.universe(), config.grid_step)?;
        Ok(Self {
            config,
            rules,
            grid,
        })
    }

    pub fn canonical() -> Self {
        Self::new(FuzzyConfig::canonical()).expect("canonical config is valid")
    }

    pub fn config(&self) -> &FuzzyConfig {
        &self.config
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Aggregated output for raw sonar readings (clamped to the input universes).
    pub fn aggregate(&self, front_cm: f64, right_cm: f64) -> AggregatedOutput {
        let mut front = Vec::new();
        let mut right = Vec::new();
        let mut strengths = Vec::new();
        self.config.front.degrees_into(front_cm, &mut front);
        self.config.right.degrees_into(right_cm, &mut right);
        inference::consequent_strengths(
            &self.rules,
            &front,
            &right,
            &mut strengths,
            self.config.output.terms().len(),
        );
        let mut degrees = Vec::new();
        inference::aggregate_into(&self.config.output, &strengths, &self.grid, &mut degrees);
        AggregatedOutput::new(self.grid.clone(), degrees).expect("grid and degrees are well formed")
    }

    /// Turn angle for the raw front/right sonar readings.
    ///
    /// Falls back to 0° (straight) when no rule fires, which only a custom
    /// term set with coverage holes at the universe edges can cause.
    pub fn avoidance_angle(&self, front_cm: f64, right_cm: f64) -> f64 {
        self.try_avoidance_angle(front_cm, right_cm).unwrap_or(0.0)
    }

    pub fn try_avoidance_angle(&self, front_cm: f64, right_cm: f64) -> Result<f64, FuzzyError> {
        let agg = self.aggregate(front_cm, right_cm);
        inference::centroid(agg.grid(), agg.degrees())
    }
}

/// One-shot pipeline: fuzzify both readings, infer, defuzzify.
pub fn avoidance_angle(front_cm: f64, right_cm: f64, config: &FuzzyConfig) -> Result<f64, FuzzyError> {
    FuzzyController::new(config.clone())?.try_avoidance_angle(front_cm, right_cm)
}
