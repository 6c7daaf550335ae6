//! Max-Min composition and centroid defuzzification on a sampled output grid.

use super::rules::IndexedRule;
use super::{Degrees, FuzzyError, LinguisticVariable, RuleBase};

/// The aggregated output fuzzy set sampled on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedOutput {
    grid: Vec<f64>,
    degrees: Vec<f64>,
}

impl AggregatedOutput {
    pub fn new(grid: Vec<f64>, degrees: Vec<f64>) -> Result<Self, FuzzyError> {
        if grid.is_empty()
            || grid.len() != degrees.len()
            || grid.iter().any(|x| !x.is_finite())
            || grid.windows(2).any(|w| w[0] >= w[1])
            || degrees.iter().any(|d| !(0.0..=1.0).contains(d))
        {
            return Err(FuzzyError::MalformedAggregate);
        }
        Ok(Self { grid, degrees })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn degree_at(&self, x: f64) -> Option<f64> {
        self.grid
            .iter()
            .position(|&g| g == x)
            .map(|i| self.degrees[i])
    }

    pub fn peak(&self) -> f64 {
        self.degrees.iter().copied().fold(0.0, f64::max)
    }
}

/// Sample points spanning `[lo, hi]` with spacing `step`.
///
/// When both endpoints are integer multiples of `step` the points are
/// `k * step`, so a grid straddling zero is exactly mirror-symmetric there.
/// The last interval is shortened if `step` does not divide the range.
pub fn output_grid(universe: (f64, f64), step: f64) -> Result<Vec<f64>, FuzzyError> {
    let (lo, hi) = universe;
    if !(step.is_finite() && step > 0.0) {
        return Err(FuzzyError::BadGridStep(step));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(FuzzyError::BadUniverse {
            variable: String::new(),
            lo,
            hi,
        });
    }
    let span = (hi - lo) / step;
    if span > 10_000_000.0 {
        return Err(FuzzyError::BadGridStep(step));
    }
    let k_lo = (lo / step).round();
    let k_hi = (hi / step).round();
    let aligned = (k_lo * step - lo).abs() <= 1e-9 * step.max(lo.abs())
        && (k_hi * step - hi).abs() <= 1e-9 * step.max(hi.abs());
    let mut grid = Vec::with_capacity(span.ceil() as usize + 1);
    if aligned {
        let (k_lo, k_hi) = (k_lo as i64, k_hi as i64);
        grid.extend((k_lo..=k_hi).map(|k| k as f64 * step));
        grid[0] = lo;
        *grid.last_mut().expect("non-empty") = hi;
    } else {
        let n = (span - 1e-9).ceil() as usize;
        grid.extend((0..n).map(|i| lo + i as f64 * step));
        grid.push(hi);
    }
    Ok(grid)
}

/// Mamdani inference with explicitly supplied antecedent degrees.
///
/// Terms missing from `front` or `right` count as degree 0; a name the rule
/// base does not use is an error. Each rule fires at `min(front, right)`,
/// each consequent is clipped at the strongest rule that produces it, and the
/// clipped sets are combined by pointwise max on a grid over the output
/// universe.
pub fn infer(
    rules: &RuleBase,
    front: &Degrees,
    right: &Degrees,
    output: &LinguisticVariable,
    grid_step: f64,
) -> Result<AggregatedOutput, FuzzyError> {
    for (term, _) in front.iter() {
        if !rules.rules().iter().any(|r| r.front == term) {
            return Err(FuzzyError::UnknownTerm {
                variable: "front".into(),
                term: term.to_owned(),
            });
        }
    }
    for (term, _) in right.iter() {
        if !rules.rules().iter().any(|r| r.right == term) {
            return Err(FuzzyError::UnknownTerm {
                variable: "right".into(),
                term: term.to_owned(),
            });
        }
    }
    for (term, d) in front.iter().chain(right.iter()) {
        if !(0.0..=1.0).contains(&d) {
            return Err(FuzzyError::BadDegree {
                term: term.to_owned(),
                degree: d,
            });
        }
    }

    let mut strengths = vec![0.0; output.terms().len()];
    for rule in rules.rules() {
        let idx = output
            .term_index(&rule.turn)
            .ok_or_else(|| FuzzyError::UnknownTerm {
                variable: output.name().to_owned(),
                term: rule.turn.clone(),
            })?;
        let w = front.get(&rule.front).min(right.get(&rule.right));
        strengths[idx] = f64::max(strengths[idx], w);
    }
    let grid = output_grid(output.universe(), grid_step)?;
    let mut degrees = Vec::new();
    aggregate_into(output, &strengths, &grid, &mut degrees);
    Ok(AggregatedOutput { grid, degrees })
}

/// Per-consequent firing strength: max over rules of `min(front, right)`.
pub(crate) fn consequent_strengths(
    rules: &[IndexedRule],
    front: &[f64],
    right: &[f64],
    out: &mut Vec<f64>,
    n_terms: usize,
) {
    out.clear();
    out.resize(n_terms, 0.0);
    for r in rules {
        let w = front[r.front].min(right[r.right]);
        if w > out[r.turn] {
            out[r.turn] = w;
        }
    }
}

pub(crate) fn aggregate_into(
    output: &LinguisticVariable,
    strengths: &[f64],
    grid: &[f64],
    degrees: &mut Vec<f64>,
) {
    degrees.clear();
    degrees.resize(grid.len(), 0.0);
    for (term, &w) in output.terms().iter().zip(strengths) {
        if w <= 0.0 {
            continue;
        }
        let (a, d) = term.shape.support();
        let start = grid.partition_point(|&x| x < a);
        let end = grid.partition_point(|&x| x <= d);
        for (x, mu) in grid[start..end].iter().zip(&mut degrees[start..end]) {
            let clipped = term.shape.degree(*x).min(w);
            if clipped > *mu {
                *mu = clipped;
            }
        }
    }
}

/// Centroid of a sampled fuzzy set: `Σ xᵢ·μ(xᵢ) / Σ μ(xᵢ)`.
pub fn defuzz_centroid(agg: &AggregatedOutput) -> Result<f64, FuzzyError> {
    centroid(&agg.grid, &agg.degrees)
}

// The first moment is accumulated separately for negative and positive
// abscissae, each outward from zero. A set that is mirror-symmetric on a
// mirror-symmetric grid then yields two bit-identical partial sums and an
// exact zero.
pub(crate) fn centroid(grid: &[f64], degrees: &[f64]) -> Result<f64, FuzzyError> {
    let split = grid.partition_point(|&x| x < 0.0);
    let mut area = 0.0;
    let mut neg_moment = 0.0;
    for (x, mu) in grid[..split].iter().zip(&degrees[..split]).rev() {
        neg_moment += -x * mu;
        area += mu;
    }
    let mut pos_moment = 0.0;
    for (x, mu) in grid[split..].iter().zip(&degrees[split..]) {
        pos_moment += x * mu;
        area += mu;
    }
    if area <= 0.0 {
        return Err(FuzzyError::NoActivation);
    }
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    Ok(((pos_moment - neg_moment) / area).clamp(lo, hi))
}
