use serde::{Deserialize, Serialize};

use super::{FuzzyError, LinguisticVariable};

/// `IF front IS <front> AND right IS <right> THEN turn IS <turn>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[String; 3]", into = "[String; 3]")]
pub struct Rule {
    pub front: String,
    pub right: String,
    pub turn: String,
}

impl From<[String; 3]> for Rule {
    fn from([front, right, turn]: [String; 3]) -> Self {
        Self { front, right, turn }
    }
}

impl From<Rule> for [String; 3] {
    fn from(r: Rule) -> Self {
        [r.front, r.right, r.turn]
    }
}

impl Rule {
    pub fn new(front: &str, right: &str, turn: &str) -> Self {
        Self {
            front: front.to_owned(),
            right: right.to_owned(),
            turn: turn.to_owned(),
        }
    }
}

/// A complete rule table over the product of the two input term sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleBase {
    rules: Vec<Rule>,
}

/// A rule with its terms resolved to indices into the owning variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct IndexedRule {
    pub front: usize,
    pub right: usize,
    pub turn: usize,
}

impl RuleBase {
    pub fn new(rules: Vec<Rule>) -> Self {
        Self { rules }
    }

    /// The obstacle-avoidance table: a near front obstacle turns right by an
    /// amount that depends on how close the right side is; an obstacle only on
    /// the right nudges left; everything else goes straight.
    pub fn avoidance_table() -> Self {
        Self::new(vec![
            Rule::new("near", "near", "pos_large"),
            Rule::new("near", "medium", "pos_small"),
            Rule::new("near", "far", "pos_medium"),
            Rule::new("medium", "near", "neg_small"),
            Rule::new("medium", "medium", "zero"),
            Rule::new("medium", "far", "zero"),
            Rule::new("far", "near", "neg_small"),
            Rule::new("far", "medium", "zero"),
            Rule::new("far", "far", "zero"),
        ])
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn consequent(&self, front: &str, right: &str) -> Option<&str> {
        self.rules
            .iter()
            .find(|r| r.front == front && r.right == right)
            .map(|r| r.turn.as_str())
    }

    /// Checks every term name and that each (front, right) pair appears
    /// exactly once, returning the rules in index form.
    pub(crate) fn resolve(
        &self,
        front: &LinguisticVariable,
        right: &LinguisticVariable,
        turn: &LinguisticVariable,
    ) -> Result<Vec<IndexedRule>, FuzzyError> {
        let lookup = |var: &LinguisticVariable, term: &str| {
            var.term_index(term).ok_or_else(|| FuzzyError::UnknownTerm {
                variable: var.name().to_owned(),
                term: term.to_owned(),
            })
        };
        let n_right = right.terms().len();
        let mut seen = vec![false; front.terms().len() * n_right];
        let mut indexed = Vec::with_capacity(self.rules.len());
        for rule in &self.rules {
            let r = IndexedRule {
                front: lookup(front, &rule.front)?,
                right: lookup(right, &rule.right)?,
                turn: lookup(turn, &rule.turn)?,
            };
            let slot = &mut seen[r.front * n_right + r.right];
            if *slot {
                return Err(FuzzyError::DuplicateRule {
                    front: rule.front.clone(),
                    right: rule.right.clone(),
                });
            }
            *slot = true;
            indexed.push(r);
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(FuzzyError::MissingRule {
                front: front.terms()[missing / n_right].name.clone(),
                right: right.terms()[missing % n_right].name.clone(),
            });
        }
        Ok(indexed)
    }
}
