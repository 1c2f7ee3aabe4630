use std::fmt;

use serde::{Deserialize, Serialize};

use super::Framework;
use crate::error::{Error, Result};
use crate::tolerance;

/// A discrete variable observed at one time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub time: String,
    pub name: String,
    pub outcomes: Vec<String>,
}

impl Variable {
    pub fn new<S: Into<String>>(
        time: impl Into<String>,
        name: impl Into<String>,
        outcomes: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            time: time.into(),
            name: name.into(),
            outcomes: outcomes.into_iter().map(Into::into).collect(),
        }
    }
}

/// A (possibly coarse) event: `variable` at `time` takes one of `outcomes`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub time: String,
    pub variable: String,
    pub outcomes: Vec<String>,
}

impl Event {
    pub fn new(time: impl Into<String>, variable: impl Into<String>, outcome: impl Into<String>) -> Self {
        Self {
            time: time.into(),
            variable: variable.into(),
            outcomes: vec![outcome.into()],
        }
    }

    pub fn any_of<S: Into<String>>(
        time: impl Into<String>,
        variable: impl Into<String>,
        outcomes: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            time: time.into(),
            variable: variable.into(),
            outcomes: outcomes.into_iter().map(Into::into).collect(),
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}∈{{{}}}", self.variable, self.time, self.outcomes.join(", "))
    }
}

/// Joint distribution over labelled discrete variables.
///
/// Entries are dense and row-major over the variables' outcome lists (first
/// variable most significant). Zero-probability rows are kept so the outcome
/// lattice stays complete.
#[derive(Clone, Debug)]
pub struct ProbabilityTable {
    times: Vec<String>,
    variables: Vec<Variable>,
    entries: Vec<f64>,
    source: Option<Framework>,
    tol: f64,
}

impl ProbabilityTable {
    /// `times` fixes the temporal order that every variable's time must
    /// belong to.
    pub fn new<S: Into<String>>(
        times: impl IntoIterator<Item = S>,
        variables: Vec<Variable>,
        entries: Vec<f64>,
    ) -> Result<Self> {
        Self::with_tolerance(times, variables, entries, tolerance::PROB)
    }

    pub fn with_tolerance<S: Into<String>>(
        times: impl IntoIterator<Item = S>,
        variables: Vec<Variable>,
        mut entries: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        let times: Vec<String> = times.into_iter().map(Into::into).collect();
        for (i, v) in variables.iter().enumerate() {
            if !times.contains(&v.time) {
                return Err(Error::InvalidTable(format!(
                    "variable `{}` uses unknown time `{}`",
                    v.name, v.time
                )));
            }
            if v.outcomes.is_empty() {
                return Err(Error::InvalidTable(format!("variable `{}` has no outcomes", v.name)));
            }
            if variables[..i].iter().any(|w| w.time == v.time && w.name == v.name) {
                return Err(Error::DuplicateLabel(format!("{}@{}", v.name, v.time)));
            }
            for (j, o) in v.outcomes.iter().enumerate() {
                if v.outcomes[..j].contains(o) {
                    return Err(Error::DuplicateLabel(o.clone()));
                }
            }
        }
        let size: usize = variables.iter().map(|v| v.outcomes.len()).product();
        if entries.len() != size {
            return Err(Error::InvalidTable(format!(
                "expected {size} entries, found {}",
                entries.len()
            )));
        }
        for p in entries.iter_mut() {
            if !p.is_finite() || *p < -tol || *p > 1.0 + tol {
                return Err(Error::InvalidTable(format!("entry {p} outside [0, 1]")));
            }
            *p = p.clamp(0.0, 1.0);
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidTable(format!("entries sum to {total}")));
        }
        Ok(Self {
            times,
            variables,
            entries,
            source: None,
            tol,
        })
    }

    pub(crate) fn with_source(mut self, source: Framework) -> Self {
        self.source = Some(source);
        self
    }

    pub fn source(&self) -> Option<&Framework> {
        self.source.as_ref()
    }

    pub fn source_id(&self) -> Option<&str> {
        self.source.as_ref().map(Framework::id)
    }

    pub fn times(&self) -> &[String] {
        &self.times
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn time_index(&self, time: &str) -> Result<usize> {
        self.times
            .iter()
            .position(|t| t == time)
            .ok_or_else(|| Error::UnknownEvent(format!("no time `{time}` in table")))
    }

    pub fn variable_index(&self, time: &str, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.time == time && v.name == name)
            .ok_or_else(|| Error::UnknownEvent(format!("no variable `{name}` at `{time}`")))
    }

    /// Outcome-index tuples paired with their probabilities, in storage order.
    pub fn rows(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let radices: Vec<usize> = self.variables.iter().map(|v| v.outcomes.len()).collect();
        self.entries.iter().enumerate().map(move |(flat, &p)| {
            let mut idx = vec![0; radices.len()];
            let mut rest = flat;
            for k in (0..radices.len()).rev() {
                idx[k] = rest % radices[k];
                rest /= radices[k];
            }
            (idx, p)
        })
    }

    /// Probability of a full outcome assignment given by labels.
    pub fn probability(&self, outcomes: &[&str]) -> Result<f64> {
        if outcomes.len() != self.variables.len() {
            return Err(Error::UnknownEvent(format!(
                "assignment has {} outcomes, table has {} variables",
                outcomes.len(),
                self.variables.len()
            )));
        }
        let mut flat = 0;
        for (v, o) in self.variables.iter().zip(outcomes) {
            let k = v
                .outcomes
                .iter()
                .position(|x| x == o)
                .ok_or_else(|| Error::UnknownEvent(format!("`{o}` is not an outcome of `{}`", v.name)))?;
            flat = flat * v.outcomes.len() + k;
        }
        Ok(self.entries[flat])
    }

    /// Resolves an event to (variable index, mask over that variable's outcomes).
    pub(crate) fn resolve(&self, event: &Event) -> Result<(usize, Vec<bool>)> {
        let vi = self.variable_index(&event.time, &event.variable)?;
        let var = &self.variables[vi];
        let mut mask = vec![false; var.outcomes.len()];
        if event.outcomes.is_empty() {
            return Err(Error::UnknownEvent(format!("event {event} selects no outcome")));
        }
        for o in &event.outcomes {
            let k = var
                .outcomes
                .iter()
                .position(|x| x == o)
                .ok_or_else(|| Error::UnknownEvent(format!("`{o}` is not an outcome of `{}`", var.name)))?;
            mask[k] = true;
        }
        Ok((vi, mask))
    }

    /// Probability that all `events` occur together.
    pub fn event_probability(&self, events: &[&Event]) -> Result<f64> {
        let resolved = events
            .iter()
            .map(|e| self.resolve(e))
            .collect::<Result<Vec<_>>>()?;
        Ok(self
            .rows()
            .filter(|(idx, _)| resolved.iter().all(|(vi, mask)| mask[idx[*vi]]))
            .map(|(_, p)| p)
            .sum())
    }

    /// Marginal table over the listed `(time, name)` variables, in the order given.
    pub fn marginal(&self, keep: &[(&str, &str)]) -> Result<ProbabilityTable> {
        let kept = keep
            .iter()
            .map(|(t, n)| self.variable_index(t, n))
            .collect::<Result<Vec<_>>>()?;
        self.project(&kept, None)
    }

    /// Sums out the listed variables.
    pub fn marginalize_out(&self, drop: &[(&str, &str)]) -> Result<ProbabilityTable> {
        let dropped = drop
            .iter()
            .map(|(t, n)| self.variable_index(t, n))
            .collect::<Result<Vec<_>>>()?;
        let kept: Vec<usize> = (0..self.variables.len())
            .filter(|i| !dropped.contains(i))
            .collect();
        self.project(&kept, None)
    }

    fn project(&self, kept: &[usize], filter: Option<&[(usize, Vec<bool>)]>) -> Result<ProbabilityTable> {
        let variables: Vec<Variable> = kept.iter().map(|&i| self.variables[i].clone()).collect();
        let size: usize = variables.iter().map(|v| v.outcomes.len()).product();
        let mut entries = vec![0.0; size];
        for (idx, p) in self.rows() {
            if let Some(f) = filter {
                if !f.iter().all(|(vi, mask)| mask[idx[*vi]]) {
                    continue;
                }
            }
            let mut flat = 0;
            for &k in kept {
                flat = flat * self.variables[k].outcomes.len() + idx[k];
            }
            entries[flat] += p;
        }
        let total: f64 = entries.iter().sum();
        if filter.is_some() {
            for p in entries.iter_mut() {
                *p /= total;
            }
        }
        Ok(ProbabilityTable {
            times: self.times.clone(),
            variables,
            entries,
            source: self.source.clone(),
            tol: self.tol,
        })
    }

    /// Conditions on the joint occurrence of `condition`. Conditioned
    /// variables are removed; the rest is renormalized.
    pub fn conditional(&self, condition: &[Event]) -> Result<ProbabilityTable> {
        let resolved = condition
            .iter()
            .map(|e| self.resolve(e))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Event> = condition.iter().collect();
        let probability = self.event_probability(&refs)?;
        if probability <= self.tol {
            return Err(Error::ZeroConditionProbability { probability });
        }
        let kept: Vec<usize> = (0..self.variables.len())
            .filter(|i| !resolved.iter().any(|(vi, _)| vi == i))
            .collect();
        self.project(&kept, Some(&resolved))
    }

    /// Largest entrywise difference against a table over the same variables.
    pub fn max_abs_diff(&self, other: &ProbabilityTable) -> Result<f64> {
        if self.variables != other.variables {
            return Err(Error::InvalidTable("tables have different variables".into()));
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Free-function form of [`ProbabilityTable::conditional`].
pub fn conditional(table: &ProbabilityTable, condition: &[Event]) -> Result<ProbabilityTable> {
    table.conditional(condition)
}

impl PartialEq for ProbabilityTable {
    /// Compares layout and entries; provenance is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.times == other.times && self.variables == other.variables && self.entries == other.entries
    }
}
