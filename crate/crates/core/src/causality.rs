//! Causal vocabulary over probability tables: statistical independence,
//! correlation, ideal causes and common causes.
//!
//! Every query runs against one table, hence inside one framework. Anything
//! that pulls inferences from several tables goes through
//! [`guard_single_framework`] first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histories::{frameworks_compatible, ProbabilityTable};

pub use crate::histories::Event;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Independent,
    Correlated,
    IdealCause,
    CommonCauseFound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub name: String,
    pub value: f64,
}

impl Witness {
    fn new(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
        }
    }
}

/// A relation together with the probabilities that establish it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalVerdict {
    pub relation: Relation,
    pub witnesses: Vec<Witness>,
    pub source: Option<String>,
}

impl CausalVerdict {
    pub fn witness(&self, name: &str) -> Option<f64> {
        self.witnesses.iter().find(|w| w.name == name).map(|w| w.value)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Independence {
    pub independent: bool,
    pub joint: f64,
    pub pr_f: f64,
    pub pr_g: f64,
    /// |Pr(F,G) − Pr(F)·Pr(G)|
    pub deviation: f64,
    pub source: Option<String>,
}

impl Independence {
    pub fn verdict(&self) -> CausalVerdict {
        CausalVerdict {
            relation: if self.independent {
                Relation::Independent
            } else {
                Relation::Correlated
            },
            witnesses: vec![
                Witness::new("Pr(F,G)", self.joint),
                Witness::new("Pr(F)", self.pr_f),
                Witness::new("Pr(G)", self.pr_g),
                Witness::new("|Pr(F,G)-Pr(F)Pr(G)|", self.deviation),
            ],
            source: self.source.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Correlation {
    pub correlated: bool,
    /// Pr(G|F)
    pub conditional: f64,
    pub independence: Independence,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CauseCheck {
    pub ideal: bool,
    /// Pr(G|F)
    pub forward: f64,
    /// Pr(F|G)
    pub backward: f64,
    pub independent: bool,
    pub source: Option<String>,
}

impl CauseCheck {
    pub fn verdict(&self) -> CausalVerdict {
        CausalVerdict {
            relation: if self.ideal {
                Relation::IdealCause
            } else if self.independent {
                Relation::Independent
            } else {
                Relation::Correlated
            },
            witnesses: vec![
                Witness::new("Pr(G|F)", self.forward),
                Witness::new("Pr(F|G)", self.backward),
            ],
            source: self.source.clone(),
        }
    }
}

/// A qualifying common cause and every other qualifier, in scan order.
#[derive(Clone, Debug, PartialEq)]
pub struct CommonCause {
    pub event: Event,
    pub verdict: CausalVerdict,
    pub qualifiers: Vec<Event>,
}

fn check_distinct(table: &ProbabilityTable, f: &Event, g: &Event) -> Result<()> {
    let fi = table.variable_index(&f.time, &f.variable)?;
    let gi = table.variable_index(&g.time, &g.variable)?;
    if fi == gi {
        return Err(Error::SameVariable(format!("{}@{}", f.variable, f.time)));
    }
    Ok(())
}

fn cond(table: &ProbabilityTable, target: &Event, given: &Event) -> Result<f64> {
    let given_p = table.event_probability(&[given])?;
    if given_p <= table.tolerance() {
        return Err(Error::ZeroConditionProbability {
            probability: given_p,
        });
    }
    Ok(table.event_probability(&[target, given])? / given_p)
}

/// Whether Pr(F,G) = Pr(F)·Pr(G) within the table's probability threshold.
pub fn independent(table: &ProbabilityTable, f: &Event, g: &Event) -> Result<Independence> {
    check_distinct(table, f, g)?;
    let joint = table.event_probability(&[f, g])?;
    let pr_f = table.event_probability(&[f])?;
    let pr_g = table.event_probability(&[g])?;
    let deviation = (joint - pr_f * pr_g).abs();
    Ok(Independence {
        independent: deviation <= table.tolerance(),
        joint,
        pr_f,
        pr_g,
        deviation,
        source: table.source_id().map(str::to_string),
    })
}

/// Negation of [`independent`], reporting Pr(G|F).
pub fn correlated(table: &ProbabilityTable, f: &Event, g: &Event) -> Result<Correlation> {
    let independence = independent(table, f, g)?;
    let conditional = cond(table, g, f)?;
    Ok(Correlation {
        correlated: !independence.independent,
        conditional,
        independence,
    })
}

fn check_precedes(table: &ProbabilityTable, earlier: &str, later: &str) -> Result<()> {
    let (e, l) = (table.time_index(earlier)?, table.time_index(later)?);
    if e >= l {
        return Err(Error::TemporalOrderError(format!(
            "`{earlier}` does not precede `{later}`"
        )));
    }
    Ok(())
}

/// Pr(G|F) = 1 and Pr(F|G) = 1, with F strictly earlier than G.
pub fn ideal_cause(table: &ProbabilityTable, f: &Event, g: &Event) -> Result<CauseCheck> {
    check_distinct(table, f, g)?;
    check_precedes(table, &f.time, &g.time)?;
    let forward = cond(table, g, f)?;
    let backward = cond(table, f, g)?;
    let one = 1.0 - table.tolerance();
    Ok(CauseCheck {
        ideal: forward >= one && backward >= one,
        forward,
        backward,
        independent: independent(table, f, g)?.independent,
        source: table.source_id().map(str::to_string),
    })
}

/// Scans the single outcomes of every variable at `candidate_time` for an
/// event E that is an ideal cause of both F and G. Returns the first in
/// declared order, listing all qualifiers.
pub fn find_common_cause(
    table: &ProbabilityTable,
    f: &Event,
    g: &Event,
    candidate_time: &str,
) -> Result<Option<CommonCause>> {
    check_precedes(table, candidate_time, &f.time)?;
    check_precedes(table, candidate_time, &g.time)?;
    let pr_f = table.event_probability(&[f])?;
    let pr_g = table.event_probability(&[g])?;
    let one = 1.0 - table.tolerance();

    let mut found: Vec<(Event, [f64; 4])> = Vec::new();
    for var in table.variables().iter().filter(|v| v.time == candidate_time) {
        for outcome in &var.outcomes {
            let e = Event::new(candidate_time, var.name.clone(), outcome.clone());
            let pr_e = table.event_probability(&[&e])?;
            if pr_e <= table.tolerance() || pr_f <= table.tolerance() || pr_g <= table.tolerance() {
                continue;
            }
            let ef = table.event_probability(&[&e, f])?;
            let eg = table.event_probability(&[&e, g])?;
            let w = [ef / pr_e, ef / pr_f, eg / pr_e, eg / pr_g];
            if w.iter().all(|&x| x >= one) {
                found.push((e, w));
            }
        }
    }
    let Some((event, w)) = found.first().cloned() else {
        return Ok(None);
    };
    Ok(Some(CommonCause {
        event,
        verdict: CausalVerdict {
            relation: Relation::CommonCauseFound,
            witnesses: vec![
                Witness::new("Pr(F|E)", w[0]),
                Witness::new("Pr(E|F)", w[1]),
                Witness::new("Pr(G|E)", w[2]),
                Witness::new("Pr(E|G)", w[3]),
            ],
            source: table.source_id().map(str::to_string),
        },
        qualifiers: found.into_iter().map(|(e, _)| e).collect(),
    }))
}

/// Succeeds only when every table carries a source framework and all those
/// frameworks are pairwise compatible.
pub fn guard_single_framework(tables: &[&ProbabilityTable]) -> Result<()> {
    let sources = tables
        .iter()
        .map(|t| t.source().ok_or(Error::MissingProvenance))
        .collect::<Result<Vec<_>>>()?;
    for (i, a) in sources.iter().enumerate() {
        for b in &sources[i + 1..] {
            if !frameworks_compatible(a, b)? {
                return Err(Error::SingleFrameworkViolation {
                    first: a.id().to_string(),
                    second: b.id().to_string(),
                });
            }
        }
    }
    Ok(())
}

/// One conditional inference Pr(target | condition) drawn from a table.
#[derive(Clone, Debug)]
pub struct Inference<'a> {
    pub table: &'a ProbabilityTable,
    pub condition: Vec<Event>,
    pub target: Event,
}

/// Evaluates several inferences as one conjoined conclusion. Refused unless
/// the tables pass [`guard_single_framework`].
pub fn conjoin_inferences(inferences: &[Inference<'_>]) -> Result<Vec<f64>> {
    let tables: Vec<&ProbabilityTable> = inferences.iter().map(|i| i.table).collect();
    guard_single_framework(&tables)?;
    inferences
        .iter()
        .map(|inf| {
            let given = inf.table.conditional(&inf.condition)?;
            given.event_probability(&[&inf.target])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histories::Variable;

    fn coins() -> ProbabilityTable {
        ProbabilityTable::new(
            ["t0", "t1"],
            vec![
                Variable::new("t0", "C1", ["H", "T"]),
                Variable::new("t1", "C2", ["H", "T"]),
            ],
            vec![0.25; 4],
        )
        .unwrap()
    }

    fn copy_table() -> ProbabilityTable {
        ProbabilityTable::new(
            ["t1", "t2"],
            vec![
                Variable::new("t1", "F", ["0", "1"]),
                Variable::new("t2", "G", ["0", "1"]),
            ],
            vec![0.3, 0.0, 0.0, 0.7],
        )
        .unwrap()
    }

    /// Charlie broadcasts E at t0; Alice receives F at t1, Bob G at t2.
    fn charlie() -> ProbabilityTable {
        let mut entries = vec![0.0; 8];
        entries[0] = 0.4; // (0,0,0)
        entries[7] = 0.6; // (1,1,1)
        ProbabilityTable::new(
            ["t0", "t1", "t2"],
            vec![
                Variable::new("t0", "E", ["0", "1"]),
                Variable::new("t1", "F", ["0", "1"]),
                Variable::new("t2", "G", ["0", "1"]),
            ],
            entries,
        )
        .unwrap()
    }

    #[test]
    fn fair_coins_are_independent() {
        let t = coins();
        for a in ["H", "T"] {
            for b in ["H", "T"] {
                let f = Event::new("t0", "C1", a);
                let g = Event::new("t1", "C2", b);
                assert!(independent(&t, &f, &g).unwrap().independent);
                let c = correlated(&t, &f, &g).unwrap();
                assert!(!c.correlated);
                assert_eq!(c.conditional, 0.5);
            }
        }
    }

    #[test]
    fn independence_is_symmetric() {
        let t = copy_table();
        let f = Event::new("t1", "F", "1");
        let g = Event::new("t2", "G", "0");
        let ab = independent(&t, &f, &g).unwrap();
        let ba = independent(&t, &g, &f).unwrap();
        assert_eq!(ab.independent, ba.independent);
        assert_eq!(ab.deviation, ba.deviation);
    }

    #[test]
    fn same_variable_rejected() {
        let t = coins();
        let f = Event::new("t0", "C1", "H");
        assert!(matches!(independent(&t, &f, &f), Err(Error::SameVariable(_))));
    }

    #[test]
    fn deterministic_copy_is_ideal_cause() {
        let t = copy_table();
        let c = ideal_cause(&t, &Event::new("t1", "F", "1"), &Event::new("t2", "G", "1")).unwrap();
        assert!(c.ideal);
        assert_eq!(c.verdict().relation, Relation::IdealCause);
    }

    #[test]
    fn ideal_cause_requires_earlier_event() {
        let t = copy_table();
        let err = ideal_cause(&t, &Event::new("t2", "G", "1"), &Event::new("t1", "F", "1"));
        assert!(matches!(err, Err(Error::TemporalOrderError(_))));
    }

    #[test]
    fn ideal_cause_zero_condition() {
        let t = ProbabilityTable::new(
            ["t1", "t2"],
            vec![
                Variable::new("t1", "F", ["0", "1"]),
                Variable::new("t2", "G", ["0", "1"]),
            ],
            vec![1.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let err = ideal_cause(&t, &Event::new("t1", "F", "1"), &Event::new("t2", "G", "1"));
        assert!(matches!(err, Err(Error::ZeroConditionProbability { .. })));
    }

    #[test]
    fn charlie_signal_is_common_cause() {
        let t = charlie();
        let f = Event::new("t1", "F", "1");
        let g = Event::new("t2", "G", "1");
        let cc = find_common_cause(&t, &f, &g, "t0").unwrap().unwrap();
        assert_eq!(cc.event, Event::new("t0", "E", "1"));
        assert_eq!(cc.qualifiers.len(), 1);
        for w in &cc.verdict.witnesses {
            assert!((w.value - 1.0).abs() < 1e-12, "{w:?}");
        }
    }

    #[test]
    fn no_common_cause_for_independent_events() {
        let mut entries = vec![0.125; 8];
        entries.iter_mut().for_each(|p| *p = 0.125);
        let t = ProbabilityTable::new(
            ["t0", "t1", "t2"],
            vec![
                Variable::new("t0", "E", ["0", "1"]),
                Variable::new("t1", "F", ["0", "1"]),
                Variable::new("t2", "G", ["0", "1"]),
            ],
            entries,
        )
        .unwrap();
        let f = Event::new("t1", "F", "1");
        let g = Event::new("t2", "G", "1");
        assert!(find_common_cause(&t, &f, &g, "t0").unwrap().is_none());
    }

    #[test]
    fn common_cause_candidate_must_precede() {
        let t = charlie();
        let f = Event::new("t1", "F", "1");
        let g = Event::new("t2", "G", "1");
        assert!(matches!(
            find_common_cause(&t, &f, &g, "t1"),
            Err(Error::TemporalOrderError(_))
        ));
    }

    #[test]
    fn guard_requires_provenance() {
        let t = coins();
        assert!(matches!(
            guard_single_framework(&[&t]),
            Err(Error::MissingProvenance)
        ));
    }
}
