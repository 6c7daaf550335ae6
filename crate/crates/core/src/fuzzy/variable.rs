use serde::{Deserialize, Serialize};

use super::{FuzzyError, MembershipFunction};

/// A named fuzzy set of a linguistic variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    #[serde(flatten)]
    pub shape: MembershipFunction,
}

impl Term {
    pub fn new(name: impl Into<String>, shape: MembershipFunction) -> Self {
        Self {
            name: name.into(),
            shape,
        }
    }
}

/// A bounded real quantity described by an ordered collection of terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVariable", into = "RawVariable")]
pub struct LinguisticVariable {
    name: String,
    units: String,
    universe: (f64, f64),
    terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
struct RawVariable {
    name: String,
    #[serde(default)]
    units: String,
    universe: [f64; 2],
    terms: Vec<Term>,
}

impl TryFrom<RawVariable> for LinguisticVariable {
    type Error = FuzzyError;

    fn try_from(raw: RawVariable) -> Result<Self, Self::Error> {
        LinguisticVariable::new(raw.name, raw.units, (raw.universe[0], raw.universe[1]), raw.terms)
    }
}

impl From<LinguisticVariable> for RawVariable {
    fn from(v: LinguisticVariable) -> Self {
        RawVariable {
            name: v.name,
            units: v.units,
            universe: [v.universe.0, v.universe.1],
            terms: v.terms,
        }
    }
}

impl LinguisticVariable {
    /// Validates the term set against the universe.
    ///
    /// Every support must lie inside the universe and the open interior of
    /// the universe must be covered: at each interior point some term has a
    /// positive degree. The two endpoints are exempt, since a shoulder that
    /// starts exactly on the boundary is zero there.
    pub fn new(
        name: impl Into<String>,
        units: impl Into<String>,
        universe: (f64, f64),
        terms: Vec<Term>,
    ) -> Result<Self, FuzzyError> {
        let name = name.into();
        let (lo, hi) = universe;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(FuzzyError::BadUniverse { variable: name, lo, hi });
        }
        if terms.is_empty() {
            return Err(FuzzyError::NoTerms { variable: name });
        }
        for (i, term) in terms.iter().enumerate() {
            if term.name.is_empty() || terms[..i].iter().any(|t| t.name == term.name) {
                return Err(FuzzyError::DuplicateTerm {
                    variable: name,
                    term: term.name.clone(),
                });
            }
            let (a, d) = term.shape.support();
            if a < lo || d > hi {
                return Err(FuzzyError::TermOutsideUniverse {
                    variable: name,
                    term: term.name.clone(),
                });
            }
        }
        let var = Self {
            name,
            units: units.into(),
            universe,
            terms,
        };
        if let Some(at) = var.coverage_hole() {
            return Err(FuzzyError::IncompleteCoverage {
                variable: var.name,
                at,
            });
        }
        Ok(var)
    }

    // Between consecutive breakpoints every term is linear and non-negative,
    // so a zero anywhere inside such a span shows up at its midpoint.
    fn coverage_hole(&self) -> Option<f64> {
        let (lo, hi) = self.universe;
        let mut knots = vec![lo, hi];
        for term in &self.terms {
            knots.extend(term.shape.breakpoints().into_iter().filter(|&p| p > lo && p < hi));
        }
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let interior = knots[1..knots.len() - 1].iter().copied();
        let midpoints = knots.windows(2).map(|w| 0.5 * (w[0] + w[1]));
        interior
            .chain(midpoints)
            .find(|&x| self.terms.iter().all(|t| t.shape.degree(x) <= 0.0))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn units(&self) -> &str {
        &self.units
    }

    pub fn universe(&self) -> (f64, f64) {
        self.universe
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.name == term)
    }

    pub fn term(&self, term: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == term)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        let (lo, hi) = self.universe;
        if x.is_nan() {
            // NaN never comes from a sonar; treat it like a missing echo.
            return hi;
        }
        x.clamp(lo, hi)
    }

    /// Clamps `x` to the universe and returns the degree of every term, in
    /// declaration order.
    pub fn fuzzify(&self, x: f64) -> Degrees {
        let x = self.clamp(x);
        Degrees(
            self.terms
                .iter()
                .map(|t| (t.name.clone(), t.shape.degree(x)))
                .collect(),
        )
    }

    /// Index-aligned degrees without allocating term names.
    pub(crate) fn degrees_into(&self, x: f64, out: &mut Vec<f64>) {
        let x = self.clamp(x);
        out.clear();
        out.extend(self.terms.iter().map(|t| t.shape.degree(x)));
    }
}

/// Term name to membership degree, in term declaration order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Degrees(Vec<(String, f64)>);

impl Degrees {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a partial assignment; absent terms read as zero.
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Self(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn get(&self, term: &str) -> f64 {
        self.0
            .iter()
            .find(|(name, _)| name == term)
            .map_or(0.0, |&(_, d)| d)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
