//! Multi-time histories, chain operators, the decoherence functional and
//! Born-rule probabilities on consistent frameworks.
//!
//! A [`Framework`] assigns to each time a list of commuting decompositions of
//! the identity, each one a named variable. Its histories are every choice of
//! one member per variable; at a given time the chosen members multiply into
//! a single history projector. Probabilities come out only for consistent
//! frameworks, and tables remember which framework produced them so that the
//! causal layer can refuse to mix incompatible ones.

mod table;

use std::sync::Arc;

use num_complex::Complex64;

pub use table::{conditional, Event, ProbabilityTable, Variable};

use crate::error::{Error, Result};
use crate::linalg::{Operator, StateVector, Vector};
use crate::projectors::{pdi_commutation, refine_pdi, validate_projector_with, Pdi, Projector, LABEL_JOINER};
use crate::tolerance::Tolerances;

/// Joiner between the per-time labels of a history.
pub const HISTORY_JOINER: &str = " ⊙ ";

/// Ordered, distinct time labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeGrid {
    labels: Vec<String>,
}

impl TimeGrid {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least two times, got {}",
                labels.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidGrid(format!("time `{l}` repeated")));
            }
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    fn expect_same(&self, other: &TimeGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "[{}] vs [{}]",
                self.labels.join(", "),
                other.labels.join(", ")
            )));
        }
        Ok(())
    }
}

/// One unitary per interval between consecutive grid times.
#[derive(Clone, Debug, PartialEq)]
pub struct Dynamics {
    grid: TimeGrid,
    unitaries: Vec<Operator>,
}

impl Dynamics {
    pub fn new(grid: TimeGrid, unitaries: Vec<Operator>) -> Result<Self> {
        Self::with_tolerance(grid, unitaries, crate::tolerance::PROJ)
    }

    pub fn with_tolerance(grid: TimeGrid, unitaries: Vec<Operator>, tol: f64) -> Result<Self> {
        if unitaries.len() + 1 != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} times need {} unitaries, got {}",
                grid.len(),
                grid.len() - 1,
                unitaries.len()
            )));
        }
        let dim = unitaries[0].dim();
        for u in &unitaries {
            if u.dim() != dim {
                return Err(Error::DimensionError {
                    expected: dim,
                    found: u.dim(),
                });
            }
            let deviation = u.unitarity_deviation();
            if deviation > tol {
                return Err(Error::NotUnitary { deviation });
            }
        }
        Ok(Self { grid, unitaries })
    }

    /// Trivial evolution on every interval.
    pub fn identity(grid: TimeGrid, dim: usize) -> Self {
        let unitaries = vec![Operator::identity(dim); grid.len() - 1];
        Self { grid, unitaries }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn unitaries(&self) -> &[Operator] {
        &self.unitaries
    }

    pub fn dim(&self) -> usize {
        self.unitaries[0].dim()
    }
}

/// A product-form history: one projector per grid time.
#[derive(Clone, Debug, PartialEq)]
pub struct History {
    grid: TimeGrid,
    projectors: Vec<Projector>,
    label: String,
}

impl History {
    pub fn new(grid: TimeGrid, projectors: Vec<Projector>) -> Result<Self> {
        if projectors.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} times but {} projectors",
                grid.len(),
                projectors.len()
            )));
        }
        let dim = projectors[0].dim();
        if let Some(p) = projectors.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionError {
                expected: dim,
                found: p.dim(),
            });
        }
        let label = projectors
            .iter()
            .map(Projector::label)
            .collect::<Vec<_>>()
            .join(HISTORY_JOINER);
        Ok(Self {
            grid,
            projectors,
            label,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }
}

/// K(h) = P_n U_{n−1} ⋯ U_0 P_0, earliest projector applied first.
pub fn chain_operator(h: &History, dynamics: &Dynamics) -> Result<Operator> {
    h.grid.expect_same(&dynamics.grid)?;
    if h.dim() != dynamics.dim() {
        return Err(Error::DimensionError {
            expected: dynamics.dim(),
            found: h.dim(),
        });
    }
    let mut k = h.projectors[0].op().clone();
    for (u, p) in dynamics.unitaries.iter().zip(&h.projectors[1..]) {
        k = p.op().matmul(&u.matmul(&k)?)?;
    }
    Ok(k)
}

fn chain_state(h: &History, psi: &StateVector, dynamics: &Dynamics) -> Result<Vector> {
    chain_operator(h, dynamics)?.apply(psi.as_vector())
}

/// Born probability ‖K(h)ψ‖².
pub fn history_probability(h: &History, psi: &StateVector, dynamics: &Dynamics) -> Result<f64> {
    Ok(chain_state(h, psi, dynamics)?.norm_sqr())
}

/// D(h1, h2) = ⟨K(h2)ψ, K(h1)ψ⟩.
pub fn decoherence_functional(
    h1: &History,
    h2: &History,
    psi: &StateVector,
    dynamics: &Dynamics,
) -> Result<Complex64> {
    let k1 = chain_state(h1, psi, dynamics)?;
    let k2 = chain_state(h2, psi, dynamics)?;
    k2.inner(&k1)
}

/// One named variable of a framework: a decomposition used at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotVariable {
    pub name: String,
    pub pdi: Pdi,
}

#[derive(Debug)]
struct FrameworkInner {
    id: String,
    grid: TimeGrid,
    slots: Vec<Vec<SlotVariable>>,
    pdis: Vec<Pdi>,
    histories: Vec<History>,
    dim: usize,
    tol: Tolerances,
}

/// A family of histories built from decompositions of the identity at each
/// time. Cheap to clone.
#[derive(Clone, Debug)]
pub struct Framework(Arc<FrameworkInner>);

impl Framework {
    /// `slots[t]` lists the variables used at grid time `t`. An empty slot
    /// means the identity at that time, with no variable in the tables.
    pub fn new<S: Into<String>>(
        id: impl Into<String>,
        grid: TimeGrid,
        slots: Vec<Vec<(S, Pdi)>>,
    ) -> Result<Self> {
        Self::with_tolerances(id, grid, slots, Tolerances::default())
    }

    pub fn with_tolerances<S: Into<String>>(
        id: impl Into<String>,
        grid: TimeGrid,
        slots: Vec<Vec<(S, Pdi)>>,
        tol: Tolerances,
    ) -> Result<Self> {
        if slots.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} times but {} slots",
                grid.len(),
                slots.len()
            )));
        }
        let slots: Vec<Vec<SlotVariable>> = slots
            .into_iter()
            .map(|s| {
                s.into_iter()
                    .map(|(name, pdi)| SlotVariable {
                        name: name.into(),
                        pdi,
                    })
                    .collect()
            })
            .collect();
        let dim = slots
            .iter()
            .flatten()
            .map(|v| v.pdi.dim())
            .next()
            .ok_or_else(|| Error::InvalidGrid("framework has no variables".into()))?;

        let mut pdis = Vec::with_capacity(grid.len());
        for slot in &slots {
            let mut refined = Pdi::trivial(dim);
            for (i, var) in slot.iter().enumerate() {
                if var.pdi.dim() != dim {
                    return Err(Error::DimensionError {
                        expected: dim,
                        found: var.pdi.dim(),
                    });
                }
                if slot[..i].iter().any(|w| w.name == var.name) {
                    return Err(Error::DuplicateLabel(var.name.clone()));
                }
                for other in &slot[..i] {
                    let (c, first, second) = pdi_commutation(&other.pdi, &var.pdi)?;
                    if c.max_deviation > tol.proj {
                        return Err(Error::IncompatiblePdis {
                            first,
                            second,
                            deviation: c.max_deviation,
                        });
                    }
                }
                refined = if i == 0 {
                    var.pdi.clone()
                } else {
                    refine_pdi(&refined, &var.pdi)?
                };
            }
            pdis.push(refined);
        }

        let histories = enumerate_histories(&grid, &slots, dim, tol.proj)?;
        Ok(Self(Arc::new(FrameworkInner {
            id: id.into(),
            grid,
            slots,
            pdis,
            histories,
            dim,
            tol,
        })))
    }

    /// Same framework evaluated under different thresholds.
    pub fn retolerance(&self, tol: Tolerances) -> Result<Self> {
        let slots = self
            .0
            .slots
            .iter()
            .map(|s| s.iter().map(|v| (v.name.clone(), v.pdi.clone())).collect())
            .collect();
        Self::with_tolerances(self.0.id.clone(), self.0.grid.clone(), slots, tol)
    }

    pub fn id(&self) -> &str {
        &self.0.id
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.0.grid
    }

    /// The decomposition in force at each time (common refinement of the
    /// slot's variables, or {I} for an empty slot).
    pub fn pdis(&self) -> &[Pdi] {
        &self.0.pdis
    }

    pub fn slots(&self) -> &[Vec<SlotVariable>] {
        &self.0.slots
    }

    pub fn histories(&self) -> &[History] {
        &self.0.histories
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn tolerances(&self) -> Tolerances {
        self.0.tol
    }

    /// Table variables in storage order: by time, then slot order.
    pub fn variables(&self) -> Vec<Variable> {
        self.0
            .grid
            .labels()
            .iter()
            .zip(&self.0.slots)
            .flat_map(|(t, slot)| {
                slot.iter()
                    .map(move |v| Variable::new(t.clone(), v.name.clone(), v.pdi.labels()))
            })
            .collect()
    }
}

fn enumerate_histories(
    grid: &TimeGrid,
    slots: &[Vec<SlotVariable>],
    dim: usize,
    tol: f64,
) -> Result<Vec<History>> {
    let flat: Vec<(usize, &Pdi)> = slots
        .iter()
        .enumerate()
        .flat_map(|(t, s)| s.iter().map(move |v| (t, &v.pdi)))
        .collect();
    let radices: Vec<usize> = flat.iter().map(|(_, p)| p.len()).collect();
    let count: usize = radices.iter().product();
    let mut histories = Vec::with_capacity(count);
    let mut choice = vec![0usize; flat.len()];
    for _ in 0..count {
        let mut per_time: Vec<Option<(Operator, Vec<&str>)>> = vec![None; grid.len()];
        for (k, &(t, pdi)) in flat.iter().enumerate() {
            let member = &pdi.projectors()[choice[k]];
            per_time[t] = Some(match per_time[t].take() {
                None => (member.op().clone(), vec![member.label()]),
                Some((op, mut labels)) => {
                    labels.push(member.label());
                    (op.matmul(member.op())?, labels)
                }
            });
        }
        let projectors = per_time
            .into_iter()
            .map(|slot| match slot {
                None => Ok(Projector::identity(dim)),
                Some((op, labels)) => validate_projector_with(op, labels.join(LABEL_JOINER), tol),
            })
            .collect::<Result<Vec<_>>>()?;
        histories.push(History::new(grid.clone(), projectors)?);

        // odometer increment, last variable fastest
        for k in (0..choice.len()).rev() {
            choice[k] += 1;
            if choice[k] < radices[k] {
                break;
            }
            choice[k] = 0;
        }
    }
    Ok(histories)
}

/// Result of a consistency check.
#[derive(Clone, Debug, PartialEq)]
pub struct Consistency {
    pub consistent: bool,
    pub worst_off_diagonal: f64,
    pub worst_pair: Option<(String, String)>,
}

/// Medium decoherence: every off-diagonal |D(h1, h2)| within the consistency
/// threshold.
pub fn is_consistent(framework: &Framework, psi: &StateVector, dynamics: &Dynamics) -> Result<Consistency> {
    framework.grid().expect_same(dynamics.grid())?;
    let states = framework
        .histories()
        .iter()
        .map(|h| chain_state(h, psi, dynamics))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0;
    let mut worst_pair = None;
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            let d = states[j].inner(&states[i])?.norm();
            if d > worst {
                worst = d;
                worst_pair = Some((
                    framework.histories()[i].label().to_string(),
                    framework.histories()[j].label().to_string(),
                ));
            }
        }
    }
    Ok(Consistency {
        consistent: worst <= framework.tolerances().cons,
        worst_off_diagonal: worst,
        worst_pair,
    })
}

/// True iff the decompositions commute at every time.
pub fn frameworks_compatible(f1: &Framework, f2: &Framework) -> Result<bool> {
    f1.grid().expect_same(f2.grid())?;
    let tol = f1.tolerances().proj.max(f2.tolerances().proj);
    for (a, b) in f1.pdis().iter().zip(f2.pdis()) {
        if pdi_commutation(a, b)?.0.max_deviation > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Born-rule table over the framework's histories. Refuses inconsistent
/// frameworks.
pub fn framework_distribution(
    framework: &Framework,
    psi: &StateVector,
    dynamics: &Dynamics,
) -> Result<ProbabilityTable> {
    let consistency = is_consistent(framework, psi, dynamics)?;
    if !consistency.consistent {
        return Err(Error::InconsistentFramework {
            framework: framework.id().to_string(),
            worst: consistency.worst_off_diagonal,
        });
    }
    let entries = framework
        .histories()
        .iter()
        .map(|h| history_probability(h, psi, dynamics))
        .collect::<Result<Vec<_>>>()?;
    let table = ProbabilityTable::with_tolerance(
        framework.grid().labels().iter().cloned(),
        framework.variables(),
        entries,
        framework.tolerances().prob,
    )?;
    Ok(table.with_source(framework.clone()))
}
