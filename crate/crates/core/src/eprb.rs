//! Spin-half measurement scenarios.
//!
//! Apparatus model: one pointer qubit per observer, "ready" = |0⟩. The
//! measurement unitary leaves the pointer at |0⟩ (outcome +1) on the
//! `S_n = +1/2` branch and flips it to |1⟩ (outcome −1) on the `S_n = −1/2`
//! branch. Time grid is t0 (preparation), t1 (just before the apparatus),
//! t2 (after it). Flight from t0 to t1 is free, so the first interval
//! unitary is the identity.
//!
//! Two-particle factor order is Alice's particle, Bob's particle, Alice's
//! pointer, Bob's pointer.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::causality::{find_common_cause, CommonCause, Event};
use crate::error::{Error, Result};
use crate::histories::{
    framework_distribution, is_consistent, Consistency, Dynamics, Framework, ProbabilityTable, TimeGrid,
};
use crate::linalg::{embed, Operator, StateVector, Vector};
use crate::projectors::{
    basis_projector, make_pdi, spin_projector, validate_projector, Pdi, Sign, SpinDirection,
};
use crate::tolerance::Tolerances;

pub const TIMES: [&str; 3] = ["t0", "t1", "t2"];
/// Variable name for the particle spin at t0 and t1.
pub const SPIN: &str = "spin";
/// Variable name for the spin pair at t1 in the common-cause framework.
pub const PAIR: &str = "pair";

const SINGLE_DIMS: [usize; 2] = [2, 2];
const PAIR_DIMS: [usize; 4] = [2, 2, 2, 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Owner {
    Alice,
    Bob,
}

impl Owner {
    /// Outcome variable name: "A" for Alice, "B" for Bob.
    pub fn outcome_variable(self) -> &'static str {
        match self {
            Owner::Alice => "A",
            Owner::Bob => "B",
        }
    }

    fn particle_slot(self) -> usize {
        match self {
            Owner::Alice => 0,
            Owner::Bob => 1,
        }
    }

    fn pointer_slot(self) -> usize {
        self.particle_slot() + 2
    }
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Owner::Alice => "Alice",
            Owner::Bob => "Bob",
        })
    }
}

/// A macroscopic outcome ±1 read off an observer's pointer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub owner: Owner,
    pub value: Sign,
}

impl Outcome {
    /// Table label, e.g. `A=+1`.
    pub fn label(&self) -> String {
        format!("{}={}1", self.owner.outcome_variable(), self.value)
    }

    pub fn event(&self) -> Event {
        Event::new(TIMES[2], self.owner.outcome_variable(), self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub owner: Owner,
    pub direction: SpinDirection,
    pub symbol: String,
}

impl MeasurementSetting {
    pub fn new(owner: Owner, direction: SpinDirection, symbol: impl Into<String>) -> Self {
        Self {
            owner,
            direction,
            symbol: symbol.into(),
        }
    }

    pub fn alice(direction: SpinDirection) -> Self {
        Self::new(Owner::Alice, direction, format!("a={}", direction.name()))
    }

    pub fn bob(direction: SpinDirection) -> Self {
        Self::new(Owner::Bob, direction, format!("b={}", direction.name()))
    }
}

/// Controlled flip of the pointer in the measured basis, on particle⊗pointer.
pub fn measurement_unitary(direction: &SpinDirection) -> Operator {
    let plus = spin_projector(direction, Sign::Plus);
    let minus = spin_projector(direction, Sign::Minus);
    let flip = SpinDirection::X.pauli();
    &plus.op().tensor(&Operator::identity(2)) + &minus.op().tensor(&flip)
}

/// The observer's measurement unitary on the 16-dimensional EPRB space.
fn station_unitary(setting: &MeasurementSetting) -> Result<Operator> {
    let plus = spin_projector(&setting.direction, Sign::Plus);
    let minus = spin_projector(&setting.direction, Sign::Minus);
    let flip = SpinDirection::X.pauli();
    let keep = embed(plus.op(), setting.owner.particle_slot(), &PAIR_DIMS)?;
    let flip_branch = embed(minus.op(), setting.owner.particle_slot(), &PAIR_DIMS)?
        .matmul(&embed(&flip, setting.owner.pointer_slot(), &PAIR_DIMS)?)?;
    keep.checked_add(&flip_branch)
}

/// {A=+1, A=−1} as pointer projectors |0⟩⟨0|, |1⟩⟨1| on a single qubit.
pub fn pointer_pdi(owner: Owner) -> Pdi {
    let var = owner.outcome_variable();
    make_pdi(vec![
        basis_projector(0, format!("{var}=+1")),
        basis_projector(1, format!("{var}=-1")),
    ])
    .expect("pointer basis is a decomposition of the identity")
}

fn ready_pointer() -> StateVector {
    StateVector::basis(2, 0)
}

fn grid() -> TimeGrid {
    TimeGrid::new(TIMES).expect("three distinct times")
}

/// (|01⟩ − |10⟩)/√2 in the z basis, Alice's factor first.
pub fn singlet_state() -> StateVector {
    let v = Vector::from_real(&[0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0]).expect("finite");
    StateVector::new(v).expect("unit norm")
}

/// Snaps a direction onto ±x, ±y or ±z when it lies on that axis, returning
/// the positive axis. Other directions are returned unchanged.
fn canonical_basis(n: &SpinDirection) -> SpinDirection {
    for axis in [SpinDirection::X, SpinDirection::Y, SpinDirection::Z] {
        if n.dot(&axis).abs() >= 1.0 - 1e-12 {
            return axis;
        }
    }
    *n
}

/// The three single-particle frameworks for one preparation and setting.
#[derive(Clone, Debug)]
pub struct SingleParticleFrameworks {
    /// prep ⊗ |ready⟩ on particle⊗pointer.
    pub initial: StateVector,
    pub dynamics: Dynamics,
    /// Basis the preparation is an eigenstate of.
    pub prep_basis: SpinDirection,
    pub setting: SpinDirection,
    /// Measured spin at t1, outcome at t2.
    pub f_meas: Framework,
    /// Prep-basis spin at t0, measured spin at t1, outcome at t2.
    pub e_prep_meas: Framework,
    /// Prep-basis spin at t0 and t1, outcome at t2.
    pub e_prep_prep: Framework,
}

impl SingleParticleFrameworks {
    pub fn frameworks(&self) -> [&Framework; 3] {
        [&self.f_meas, &self.e_prep_meas, &self.e_prep_prep]
    }

    pub fn distribution(&self, framework: &Framework) -> Result<ProbabilityTable> {
        framework_distribution(framework, &self.initial, &self.dynamics)
    }

    pub fn consistency(&self, framework: &Framework) -> Result<Consistency> {
        is_consistent(framework, &self.initial, &self.dynamics)
    }

    /// Rebuilds the frameworks under different thresholds.
    pub fn with_tolerances(mut self, tol: Tolerances) -> Result<Self> {
        self.f_meas = self.f_meas.retolerance(tol)?;
        self.e_prep_meas = self.e_prep_meas.retolerance(tol)?;
        self.e_prep_prep = self.e_prep_prep.retolerance(tol)?;
        Ok(self)
    }

    /// Event "spin at `time` has sign `sign` along the measured axis".
    pub fn measured_spin_event(&self, time: &str, sign: Sign) -> Event {
        Event::new(time, SPIN, spin_projector(&self.setting, sign).label())
    }

    pub fn prep_spin_event(&self, time: &str, sign: Sign) -> Event {
        Event::new(time, SPIN, spin_projector(&self.prep_basis, sign).label())
    }

    pub fn outcome_event(&self, value: Sign) -> Event {
        Outcome {
            owner: Owner::Alice,
            value,
        }
        .event()
    }
}

/// Builds F_meas, E_prep_meas and E_prep_prep for a single spin-half
/// prepared in `prep` and measured along `setting`.
pub fn build_single_particle_frameworks(
    prep: &StateVector,
    setting: &SpinDirection,
) -> Result<SingleParticleFrameworks> {
    let setting = SpinDirection::new(
        setting.components()[0],
        setting.components()[1],
        setting.components()[2],
    )?;
    let prep_basis = canonical_basis(&SpinDirection::bloch(prep)?);
    let grid = grid();
    let dynamics = Dynamics::new(
        grid.clone(),
        vec![Operator::identity(4), measurement_unitary(&setting)],
    )?;
    let initial = prep.tensor(&ready_pointer());

    let lift = |pdi: Pdi, slot: usize| pdi.embed(slot, &SINGLE_DIMS);
    let meas = lift(Pdi::spin(&setting), 0)?;
    let prep_pdi = lift(Pdi::spin(&prep_basis), 0)?;
    let outcome = lift(pointer_pdi(Owner::Alice), 1)?;

    let (m, n) = (prep_basis.name(), setting.name());
    let f_meas = Framework::new(
        format!("F_{n}"),
        grid.clone(),
        vec![vec![], vec![(SPIN, meas.clone())], vec![("A", outcome.clone())]],
    )?;
    let e_prep_meas = Framework::new(
        format!("E_{m}{n}"),
        grid.clone(),
        vec![
            vec![(SPIN, prep_pdi.clone())],
            vec![(SPIN, meas)],
            vec![("A", outcome.clone())],
        ],
    )?;
    let e_prep_prep = Framework::new(
        format!("E_{m}{m}"),
        grid,
        vec![
            vec![(SPIN, prep_pdi.clone())],
            vec![(SPIN, prep_pdi)],
            vec![("A", outcome)],
        ],
    )?;
    Ok(SingleParticleFrameworks {
        initial,
        dynamics,
        prep_basis,
        setting,
        f_meas,
        e_prep_meas,
        e_prep_prep,
    })
}

/// Two observers measuring a shared two-particle state.
#[derive(Clone, Debug)]
pub struct EprbScenario {
    /// Particle state ⊗ |ready, ready⟩.
    pub initial: StateVector,
    pub alice: MeasurementSetting,
    pub bob: MeasurementSetting,
    pub grid: TimeGrid,
    pub dynamics: Dynamics,
}

impl EprbScenario {
    pub fn new(particles: &StateVector, alice: &MeasurementSetting, bob: &MeasurementSetting) -> Result<Self> {
        if alice.owner == bob.owner {
            return Err(Error::SameOwner(alice.owner.to_string()));
        }
        if alice.owner != Owner::Alice {
            return Err(Error::OwnerMismatch(format!(
                "first setting `{}` must be Alice's",
                alice.symbol
            )));
        }
        if particles.dim() != 4 {
            return Err(Error::DimensionError {
                expected: 4,
                found: particles.dim(),
            });
        }
        let grid = grid();
        let measure = station_unitary(alice)?.matmul(&station_unitary(bob)?)?;
        let dynamics = Dynamics::new(grid.clone(), vec![Operator::identity(16), measure])?;
        let initial = particles.tensor(&ready_pointer()).tensor(&ready_pointer());
        Ok(Self {
            initial,
            alice: alice.clone(),
            bob: bob.clone(),
            grid,
            dynamics,
        })
    }

    fn outcome_slot(&self) -> Result<Vec<(&'static str, Pdi)>> {
        Ok(vec![
            ("A", pointer_pdi(Owner::Alice).embed(2, &PAIR_DIMS)?),
            ("B", pointer_pdi(Owner::Bob).embed(3, &PAIR_DIMS)?),
        ])
    }

    /// Outcomes (A, B) at t2, nothing asserted earlier.
    pub fn joint_framework(&self) -> Result<Framework> {
        Framework::new(
            format!("EPRB({},{})", self.alice.symbol, self.bob.symbol),
            self.grid.clone(),
            vec![vec![], vec![], self.outcome_slot()?],
        )
    }

    /// Spin pair along the common axis `n` at t1, outcomes (A, B) at t2.
    pub fn common_cause_framework(&self, n: &SpinDirection) -> Result<Framework> {
        Framework::new(
            format!("EPRB-cause({})", n.name()),
            self.grid.clone(),
            vec![vec![], vec![(PAIR, anticorrelated_pair_pdi(n)?)], self.outcome_slot()?],
        )
    }
}

/// Label of the t1 pair event `A:S_n=α ∧ B:S_n=β`.
pub fn pair_label(n: &SpinDirection, alice: Sign, bob: Sign) -> String {
    format!(
        "A:{}∧B:{}",
        spin_projector(n, alice).label(),
        spin_projector(n, bob).label()
    )
}

/// {A:+∧B:−, A:−∧B:+, remainder} along `n`, lifted onto the full space.
fn anticorrelated_pair_pdi(n: &SpinDirection) -> Result<Pdi> {
    let pointers = Operator::identity(4);
    let pair = |a: Sign, b: Sign| {
        spin_projector(n, a)
            .op()
            .tensor(spin_projector(n, b).op())
            .tensor(&pointers)
    };
    let up_down = pair(Sign::Plus, Sign::Minus);
    let down_up = pair(Sign::Minus, Sign::Plus);
    let rest = &(&Operator::identity(16) - &up_down) - &down_up;
    make_pdi(vec![
        validate_projector(up_down, pair_label(n, Sign::Plus, Sign::Minus))?,
        validate_projector(down_up, pair_label(n, Sign::Minus, Sign::Plus))?,
        validate_projector(rest, "other")?,
    ])
}

/// Born-rule table over (A, B) for an arbitrary two-particle state.
pub fn joint_distribution_for_state(
    particles: &StateVector,
    a: &MeasurementSetting,
    b: &MeasurementSetting,
) -> Result<ProbabilityTable> {
    joint_distribution_with(particles, a, b, Tolerances::default())
}

/// [`joint_distribution_for_state`] under non-default thresholds.
pub fn joint_distribution_with(
    particles: &StateVector,
    a: &MeasurementSetting,
    b: &MeasurementSetting,
    tol: Tolerances,
) -> Result<ProbabilityTable> {
    let scenario = EprbScenario::new(particles, a, b)?;
    let framework = scenario.joint_framework()?.retolerance(tol)?;
    framework_distribution(&framework, &scenario.initial, &scenario.dynamics)
}

/// Pr(A, B | a, b) for the singlet, computed through the full
/// particle⊗pointer pipeline.
pub fn eprb_joint_distribution(a: &MeasurementSetting, b: &MeasurementSetting) -> Result<ProbabilityTable> {
    joint_distribution_for_state(&singlet_state(), a, b)
}

/// Σ αβ Pr(A=α, B=β) over a table with variables A and B.
pub fn table_correlator(table: &ProbabilityTable) -> Result<f64> {
    let mut total = 0.0;
    for alpha in Sign::BOTH {
        for beta in Sign::BOTH {
            let fa = Outcome {
                owner: Owner::Alice,
                value: alpha,
            }
            .event();
            let fb = Outcome {
                owner: Owner::Bob,
                value: beta,
            }
            .event();
            total += alpha.value() * beta.value() * table.event_probability(&[&fa, &fb])?;
        }
    }
    Ok(total)
}

/// E(a, b) for the singlet.
pub fn correlator(a: &MeasurementSetting, b: &MeasurementSetting) -> Result<f64> {
    table_correlator(&eprb_joint_distribution(a, b)?)
}

/// Two settings per observer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a: MeasurementSetting,
    pub a_prime: MeasurementSetting,
    pub b: MeasurementSetting,
    pub b_prime: MeasurementSetting,
}

impl ChshSettings {
    /// Planar angles a = 0, a′ = π/2, b = π/4, b′ = −π/4, which maximize
    /// |E(a,b) + E(a,b′) + E(a′,b) − E(a′,b′)| for the singlet.
    pub fn optimal() -> Self {
        Self::planar(0.0, FRAC_PI_2, FRAC_PI_4, -FRAC_PI_4)
    }

    pub fn planar(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Self {
        Self {
            a: MeasurementSetting::new(Owner::Alice, SpinDirection::planar(a), "a"),
            a_prime: MeasurementSetting::new(Owner::Alice, SpinDirection::planar(a_prime), "a'"),
            b: MeasurementSetting::new(Owner::Bob, SpinDirection::planar(b), "b"),
            b_prime: MeasurementSetting::new(Owner::Bob, SpinDirection::planar(b_prime), "b'"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub s: f64,
    /// E(a,b), E(a,b′), E(a′,b), E(a′,b′)
    pub correlators: [f64; 4],
}

/// S = E(a,b) + E(a,b′) + E(a′,b) − E(a′,b′).
pub fn chsh_value(
    a: &MeasurementSetting,
    a_prime: &MeasurementSetting,
    b: &MeasurementSetting,
    b_prime: &MeasurementSetting,
) -> Result<ChshResult> {
    chsh_value_with(a, a_prime, b, b_prime, Tolerances::default())
}

pub fn chsh_value_with(
    a: &MeasurementSetting,
    a_prime: &MeasurementSetting,
    b: &MeasurementSetting,
    b_prime: &MeasurementSetting,
    tol: Tolerances,
) -> Result<ChshResult> {
    for s in [a, a_prime] {
        if s.owner != Owner::Alice {
            return Err(Error::OwnerMismatch(format!("`{}` is not Alice's", s.symbol)));
        }
    }
    for s in [b, b_prime] {
        if s.owner != Owner::Bob {
            return Err(Error::OwnerMismatch(format!("`{}` is not Bob's", s.symbol)));
        }
    }
    let psi = singlet_state();
    let e = |x, y| table_correlator(&joint_distribution_with(&psi, x, y, tol)?);
    let correlators = [e(a, b)?, e(a, b_prime)?, e(a_prime, b)?, e(a_prime, b_prime)?];
    Ok(ChshResult {
        s: correlators[0] + correlators[1] + correlators[2] - correlators[3],
        correlators,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterIndependence {
    pub holds: bool,
    pub max_deviation: f64,
    /// Observed side's (Pr(+1), Pr(−1)) under each remote setting.
    pub marginals: [(f64, f64); 2],
}

/// Whether the `observed` side's outcome marginal is the same under the two
/// remote settings. Works for either observer.
pub fn parameter_independence_check(
    observed: &MeasurementSetting,
    remote: &MeasurementSetting,
    remote_alt: &MeasurementSetting,
) -> Result<ParameterIndependence> {
    if remote.owner != remote_alt.owner {
        return Err(Error::OwnerMismatch(format!(
            "`{}` and `{}` belong to different observers",
            remote.symbol, remote_alt.symbol
        )));
    }
    if remote.owner == observed.owner {
        return Err(Error::SameOwner(observed.owner.to_string()));
    }
    let marginal = |r: &MeasurementSetting| -> Result<(f64, f64)> {
        let table = match observed.owner {
            Owner::Alice => eprb_joint_distribution(observed, r)?,
            Owner::Bob => eprb_joint_distribution(r, observed)?,
        };
        let p = |v| {
            table.event_probability(&[&Outcome {
                owner: observed.owner,
                value: v,
            }
            .event()])
        };
        Ok((p(Sign::Plus)?, p(Sign::Minus)?))
    };
    let m0 = marginal(remote)?;
    let m1 = marginal(remote_alt)?;
    let max_deviation = (m0.0 - m1.0).abs().max((m0.1 - m1.1).abs());
    Ok(ParameterIndependence {
        holds: max_deviation <= crate::tolerance::PROB,
        max_deviation,
        marginals: [m0, m1],
    })
}

#[derive(Clone, Debug)]
pub struct QuantumCommonCause {
    pub framework: Framework,
    pub table: ProbabilityTable,
    pub consistency: Consistency,
    pub common_cause: CommonCause,
}

/// For equal settings a = b = n, finds the t1 spin-pair event that is an
/// ideal cause of both A = +1 and B = −1.
pub fn quantum_common_cause(a: &MeasurementSetting, b: &MeasurementSetting) -> Result<QuantumCommonCause> {
    quantum_common_cause_with(a, b, Tolerances::default())
}

pub fn quantum_common_cause_with(
    a: &MeasurementSetting,
    b: &MeasurementSetting,
    tol: Tolerances,
) -> Result<QuantumCommonCause> {
    if a.direction.dot(&b.direction) < 1.0 - SpinDirection::UNIT_TOLERANCE {
        return Err(Error::SettingsMismatch {
            alice: a.symbol.clone(),
            bob: b.symbol.clone(),
        });
    }
    let scenario = EprbScenario::new(&singlet_state(), a, b)?;
    let framework = scenario.common_cause_framework(&a.direction)?.retolerance(tol)?;
    let consistency = is_consistent(&framework, &scenario.initial, &scenario.dynamics)?;
    let table = framework_distribution(&framework, &scenario.initial, &scenario.dynamics)?;
    let f = Outcome {
        owner: Owner::Alice,
        value: Sign::Plus,
    }
    .event();
    let g = Outcome {
        owner: Owner::Bob,
        value: Sign::Minus,
    }
    .event();
    let common_cause = find_common_cause(&table, &f, &g, TIMES[1])?.ok_or_else(|| {
        Error::InconsistentFramework {
            framework: framework.id().to_string(),
            worst: consistency.worst_off_diagonal,
        }
    })?;
    Ok(QuantumCommonCause {
        framework,
        table,
        consistency,
        common_cause,
    })
}

/// n·σ ⊗ I + I ⊗ n·σ on the two-particle space.
pub fn total_spin_component(n: &SpinDirection) -> Operator {
    let s = n.pauli();
    let id = Operator::identity(2);
    &s.tensor(&id) + &id.tensor(&s)
}

/// Exchanges the two spin-half factors of a two-particle vector.
pub fn swap_particles(v: &Vector) -> Result<Vector> {
    if v.dim() != 4 {
        return Err(Error::DimensionError {
            expected: 4,
            found: v.dim(),
        });
    }
    let a = v.amplitudes();
    Vector::new(vec![a[0], a[2], a[1], a[3]])
}
