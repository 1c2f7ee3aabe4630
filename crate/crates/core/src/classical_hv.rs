//! Local hidden-variable models.
//!
//! A model has a finite λ space with setting-independent weights and, for
//! every λ, separate response distributions for Alice and Bob. The joint
//! outcome distribution therefore factorizes given λ:
//!
//! ```text
//! Pr(A,B|a,b) = Σ_λ Pr(λ) · Pr(A|a,λ) · Pr(B|b,λ)
//! ```
//!
//! Settings are chosen independently of each other and of λ. Weights that do
//! depend on the settings are only expressible through
//! [`CorrelatedLambdaModel`], which the bound computation does not accept.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eprb::{eprb_joint_distribution, joint_distribution_for_state, table_correlator, ChshSettings, MeasurementSetting, Owner};
use crate::error::{Error, Result};
use crate::histories::{ProbabilityTable, Variable};
use crate::linalg::StateVector;
use crate::projectors::{Sign, SpinDirection};
use crate::tolerance;

const OUTCOME_TIME: &str = "t2";

/// Distribution over a ±1 outcome.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawResponse")]
pub struct Response {
    plus: f64,
    minus: f64,
}

#[derive(Deserialize)]
struct RawResponse {
    plus: f64,
    minus: f64,
}

impl TryFrom<RawResponse> for Response {
    type Error = Error;

    fn try_from(r: RawResponse) -> Result<Self> {
        Response::new(r.plus, r.minus)
    }
}

impl Response {
    pub fn new(plus: f64, minus: f64) -> Result<Self> {
        let tol = tolerance::PROB;
        if !(plus >= -tol && minus >= -tol && ((plus + minus) - 1.0).abs() <= tol) {
            return Err(Error::InvalidDistribution(format!(
                "response ({plus}, {minus}) is not a distribution"
            )));
        }
        Ok(Self {
            plus: plus.max(0.0),
            minus: minus.max(0.0),
        })
    }

    pub fn deterministic(sign: Sign) -> Self {
        match sign {
            Sign::Plus => Self { plus: 1.0, minus: 0.0 },
            Sign::Minus => Self { plus: 0.0, minus: 1.0 },
        }
    }

    pub fn uniform() -> Self {
        Self { plus: 0.5, minus: 0.5 }
    }

    pub fn probability(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.plus,
            Sign::Minus => self.minus,
        }
    }
}

fn check_weights(weights: &[f64], what: &str) -> Result<()> {
    let tol = tolerance::PROB;
    if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < -tol) {
        return Err(Error::InvalidDistribution(format!("{what}: invalid weights")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidDistribution(format!("{what}: weights sum to {total}")));
    }
    Ok(())
}

fn setting_index(settings: &[String], name: &str) -> Result<usize> {
    settings
        .iter()
        .position(|s| s == name)
        .ok_or_else(|| Error::UnknownSetting(name.to_string()))
}

fn outcome_table(entries: Vec<f64>) -> Result<ProbabilityTable> {
    ProbabilityTable::new(
        [OUTCOME_TIME],
        vec![
            Variable::new(OUTCOME_TIME, "A", ["A=+1", "A=-1"]),
            Variable::new(OUTCOME_TIME, "B", ["B=+1", "B=-1"]),
        ],
        entries,
    )
}

/// Finite λ space with setting-independent weights and factorized responses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiddenVariableModel {
    lambdas: Vec<String>,
    weights: Vec<f64>,
    alice_settings: Vec<String>,
    bob_settings: Vec<String>,
    /// `[λ][setting]`
    alice_response: Vec<Vec<Response>>,
    bob_response: Vec<Vec<Response>>,
}

impl HiddenVariableModel {
    pub fn new(
        lambdas: Vec<String>,
        weights: Vec<f64>,
        alice_settings: Vec<String>,
        bob_settings: Vec<String>,
        alice_response: Vec<Vec<Response>>,
        bob_response: Vec<Vec<Response>>,
    ) -> Result<Self> {
        if lambdas.len() != weights.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} λ labels but {} weights",
                lambdas.len(),
                weights.len()
            )));
        }
        check_weights(&weights, "λ")?;
        for (responses, settings, who) in [
            (&alice_response, &alice_settings, "Alice"),
            (&bob_response, &bob_settings, "Bob"),
        ] {
            if settings.is_empty() {
                return Err(Error::InvalidDistribution(format!("{who} has no settings")));
            }
            if responses.len() != lambdas.len() || responses.iter().any(|r| r.len() != settings.len()) {
                return Err(Error::InvalidDistribution(format!(
                    "{who}'s responses must be indexed [λ][setting]"
                )));
            }
        }
        Ok(Self {
            lambdas,
            weights,
            alice_settings,
            bob_settings,
            alice_response,
            bob_response,
        })
    }

    /// Random weights and responses over `n_lambda` hidden states.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        n_lambda: usize,
        alice_settings: &[&str],
        bob_settings: &[&str],
    ) -> Self {
        let raw: Vec<f64> = (0..n_lambda).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let mut responses = |count: usize| -> Vec<Vec<Response>> {
            (0..n_lambda)
                .map(|_| {
                    (0..count)
                        .map(|_| {
                            let p: f64 = rng.random();
                            Response { plus: p, minus: 1.0 - p }
                        })
                        .collect()
                })
                .collect()
        };
        let alice_response = responses(alice_settings.len());
        let bob_response = responses(bob_settings.len());
        Self {
            lambdas: (0..n_lambda).map(|i| format!("λ{i}")).collect(),
            weights: raw.iter().map(|w| w / total).collect(),
            alice_settings: alice_settings.iter().map(|s| s.to_string()).collect(),
            bob_settings: bob_settings.iter().map(|s| s.to_string()).collect(),
            alice_response,
            bob_response,
        }
    }

    /// Re-runs construction checks, e.g. after deserializing.
    pub fn validated(self) -> Result<Self> {
        Self::new(
            self.lambdas,
            self.weights,
            self.alice_settings,
            self.bob_settings,
            self.alice_response,
            self.bob_response,
        )
    }

    pub fn lambdas(&self) -> &[String] {
        &self.lambdas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn alice_settings(&self) -> &[String] {
        &self.alice_settings
    }

    pub fn bob_settings(&self) -> &[String] {
        &self.bob_settings
    }
}

/// Pr(A,B|a,b) = Σ_λ Pr(λ) Pr(A|a,λ) Pr(B|b,λ).
pub fn blc_joint(model: &HiddenVariableModel, a: &str, b: &str) -> Result<ProbabilityTable> {
    let ai = setting_index(&model.alice_settings, a)?;
    let bi = setting_index(&model.bob_settings, b)?;
    let mut entries = Vec::with_capacity(4);
    for alpha in Sign::BOTH {
        for beta in Sign::BOTH {
            let p = model
                .weights
                .iter()
                .enumerate()
                .map(|(l, w)| {
                    w * model.alice_response[l][ai].probability(alpha)
                        * model.bob_response[l][bi].probability(beta)
                })
                .sum();
            entries.push(p);
        }
    }
    outcome_table(entries)
}

pub fn hv_correlator(model: &HiddenVariableModel, a: &str, b: &str) -> Result<f64> {
    table_correlator(&blc_joint(model, a, b)?)
}

/// S = E(a,b) + E(a,b′) + E(a′,b) − E(a′,b′) for a local model.
pub fn hv_chsh(model: &HiddenVariableModel, alice: [&str; 2], bob: [&str; 2]) -> Result<f64> {
    Ok(hv_correlator(model, alice[0], bob[0])? + hv_correlator(model, alice[0], bob[1])?
        + hv_correlator(model, alice[1], bob[0])?
        - hv_correlator(model, alice[1], bob[1])?)
}

/// Fixed outcome per setting for each observer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub alice: Vec<Sign>,
    pub bob: Vec<Sign>,
}

impl DeterministicStrategy {
    /// Single-λ model realizing the strategy.
    pub fn to_model(&self, alice_settings: &[&str], bob_settings: &[&str]) -> Result<HiddenVariableModel> {
        if self.alice.len() != alice_settings.len() || self.bob.len() != bob_settings.len() {
            return Err(Error::InvalidDistribution(
                "strategy does not cover the declared settings".into(),
            ));
        }
        HiddenVariableModel::new(
            vec!["λ".into()],
            vec![1.0],
            alice_settings.iter().map(|s| s.to_string()).collect(),
            bob_settings.iter().map(|s| s.to_string()).collect(),
            vec![self.alice.iter().map(|&s| Response::deterministic(s)).collect()],
            vec![self.bob.iter().map(|&s| Response::deterministic(s)).collect()],
        )
    }

    /// All 2^(|a|+|b|) strategies in lexicographic sign order (+ before −),
    /// Alice's settings most significant.
    pub fn enumerate(n_alice: usize, n_bob: usize) -> Vec<DeterministicStrategy> {
        let n = n_alice + n_bob;
        (0..1usize << n)
            .map(|bits| {
                let signs: Vec<Sign> = (0..n)
                    .map(|k| {
                        if bits >> (n - 1 - k) & 1 == 0 {
                            Sign::Plus
                        } else {
                            Sign::Minus
                        }
                    })
                    .collect();
                DeterministicStrategy {
                    alice: signs[..n_alice].to_vec(),
                    bob: signs[n_alice..].to_vec(),
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalBound {
    pub max_abs_s: f64,
    /// Signed S of the reported maximizer.
    pub s: f64,
    pub strategy: DeterministicStrategy,
    /// S for every strategy in enumeration order.
    pub values: Vec<f64>,
}

/// Maximum |S| over the 16 deterministic strategies; the first maximizer in
/// enumeration order is reported.
pub fn classical_chsh_max(alice: [&str; 2], bob: [&str; 2]) -> Result<ClassicalBound> {
    let strategies = DeterministicStrategy::enumerate(2, 2);
    let values = strategies
        .iter()
        .map(|s| hv_chsh(&s.to_model(&alice, &bob)?, alice, bob))
        .collect::<Result<Vec<_>>>()?;
    let (best, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| {
            if v.abs() > bv {
                (i, v.abs())
            } else {
                (bi, bv)
            }
        });
    Ok(ClassicalBound {
        max_abs_s: values[best].abs(),
        s: values[best],
        strategy: strategies[best].clone(),
        values,
    })
}

/// Independent distributions over each observer's settings; the joint is
/// their product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingDistribution {
    alice: Vec<(String, f64)>,
    bob: Vec<(String, f64)>,
}

impl SettingDistribution {
    pub fn new(alice: Vec<(String, f64)>, bob: Vec<(String, f64)>) -> Result<Self> {
        check_weights(&alice.iter().map(|(_, p)| *p).collect::<Vec<_>>(), "Alice's settings")?;
        check_weights(&bob.iter().map(|(_, p)| *p).collect::<Vec<_>>(), "Bob's settings")?;
        Ok(Self { alice, bob })
    }

    /// Equal weight on every setting of the model.
    pub fn uniform(model: &HiddenVariableModel) -> Self {
        let spread = |s: &[String]| {
            let w = 1.0 / s.len() as f64;
            s.iter().map(|n| (n.clone(), w)).collect()
        };
        Self {
            alice: spread(&model.alice_settings),
            bob: spread(&model.bob_settings),
        }
    }

    pub fn joint(&self, a: &str, b: &str) -> Result<f64> {
        let find = |list: &[(String, f64)], s: &str| {
            list.iter()
                .find(|(n, _)| n == s)
                .map(|(_, p)| *p)
                .ok_or_else(|| Error::UnknownSetting(s.to_string()))
        };
        Ok(find(&self.alice, a)? * find(&self.bob, b)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assumption {
    pub name: String,
    pub statement: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingIndependenceReport {
    pub holds: bool,
    pub assumptions: Vec<Assumption>,
}

/// The two independence assumptions every [`HiddenVariableModel`] works
/// under. λ weights carry no setting argument, so the λ condition holds by
/// construction; the check confirms the setting distribution covers the
/// model's settings.
pub fn setting_independence_check(
    model: &HiddenVariableModel,
    settings: &SettingDistribution,
) -> SettingIndependenceReport {
    let covers = |declared: &[String], dist: &[(String, f64)]| {
        declared.iter().all(|s| dist.iter().any(|(n, _)| n == s))
    };
    SettingIndependenceReport {
        holds: covers(&model.alice_settings, &settings.alice) && covers(&model.bob_settings, &settings.bob),
        assumptions: vec![
            Assumption {
                name: "free-choice".into(),
                statement: "Pr(a,b) = Pr(a)Pr(b)".into(),
            },
            Assumption {
                name: "measurement-independence".into(),
                statement: "Pr(λ|a,b) = Pr(λ)".into(),
            },
        ],
    }
}

/// Outside the local class: λ weights may depend on both settings. Any such
/// model still factorizes given λ, which is why it can reproduce quantum
/// statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatedLambdaModel {
    lambdas: Vec<String>,
    alice_settings: Vec<String>,
    bob_settings: Vec<String>,
    /// `[a][b][λ]`
    weights: Vec<Vec<Vec<f64>>>,
    alice_response: Vec<Vec<Response>>,
    bob_response: Vec<Vec<Response>>,
}

impl CorrelatedLambdaModel {
    /// λ = the pair of outcome values (α, β), weighted per setting pair by
    /// the singlet's Born probabilities; each observer reports their
    /// component of λ.
    pub fn singlet_outcome_pairs(settings: &ChshSettings) -> Result<Self> {
        let alice = [&settings.a, &settings.a_prime];
        let bob = [&settings.b, &settings.b_prime];
        let pairs: Vec<(Sign, Sign)> = Sign::BOTH
            .iter()
            .flat_map(|&x| Sign::BOTH.iter().map(move |&y| (x, y)))
            .collect();
        let mut weights = Vec::new();
        for a in alice {
            let mut row = Vec::new();
            for b in bob {
                let table = eprb_joint_distribution(a, b)?;
                row.push(table.entries().to_vec());
            }
            weights.push(row);
        }
        Ok(Self {
            lambdas: pairs.iter().map(|(x, y)| format!("({x}1,{y}1)")).collect(),
            alice_settings: alice.iter().map(|s| s.symbol.clone()).collect(),
            bob_settings: bob.iter().map(|s| s.symbol.clone()).collect(),
            weights,
            alice_response: pairs
                .iter()
                .map(|(x, _)| vec![Response::deterministic(*x); 2])
                .collect(),
            bob_response: pairs
                .iter()
                .map(|(_, y)| vec![Response::deterministic(*y); 2])
                .collect(),
        })
    }

    pub fn joint(&self, a: &str, b: &str) -> Result<ProbabilityTable> {
        let ai = setting_index(&self.alice_settings, a)?;
        let bi = setting_index(&self.bob_settings, b)?;
        let w = &self.weights[ai][bi];
        let mut entries = Vec::with_capacity(4);
        for alpha in Sign::BOTH {
            for beta in Sign::BOTH {
                entries.push(
                    (0..self.lambdas.len())
                        .map(|l| {
                            w[l] * self.alice_response[l][ai].probability(alpha)
                                * self.bob_response[l][bi].probability(beta)
                        })
                        .sum(),
                );
            }
        }
        outcome_table(entries)
    }

    pub fn chsh(&self) -> Result<f64> {
        let e = |a: usize, b: usize| -> Result<f64> {
            table_correlator(&self.joint(&self.alice_settings[a], &self.bob_settings[b])?)
        };
        Ok(e(0, 0)? + e(0, 1)? + e(1, 0)? - e(1, 1)?)
    }

    /// Whether the λ weights are the same for every setting pair.
    pub fn is_setting_independent(&self) -> bool {
        let first = &self.weights[0][0];
        self.weights
            .iter()
            .flatten()
            .all(|w| w.iter().zip(first).all(|(x, y)| (x - y).abs() <= tolerance::PROB))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContradictionReport {
    pub axis: String,
    /// Born-rule Pr(A=+1, B=+1 | a = b = n).
    pub quantum_joint: f64,
    /// Pr(A=+1 | a, ψ) and Pr(B=+1 | b, ψ).
    pub alice_marginal: f64,
    pub bob_marginal: f64,
    /// Product of the two marginals: the one-point-λ factorized value.
    pub factorized: f64,
    pub mismatch: f64,
    pub contradiction: bool,
}

/// Treats the two-particle state itself as a one-point λ whose responses
/// are the quantum marginals, and compares the factorized Pr(+1, +1) with
/// the Born-rule value for equal settings along `n`.
pub fn factorization_check(particles: &StateVector, n: &SpinDirection) -> Result<ContradictionReport> {
    let a = MeasurementSetting::new(Owner::Alice, *n, "a");
    let b = MeasurementSetting::new(Owner::Bob, *n, "b");
    let quantum = joint_distribution_for_state(particles, &a, &b)?;
    let quantum_joint = quantum.probability(&["A=+1", "B=+1"])?;
    let alice_marginal = quantum.marginal(&[(OUTCOME_TIME, "A")])?.probability(&["A=+1"])?;
    let bob_marginal = quantum.marginal(&[(OUTCOME_TIME, "B")])?.probability(&["B=+1"])?;

    let one_point = HiddenVariableModel::new(
        vec!["ψ".into()],
        vec![1.0],
        vec!["a".into()],
        vec!["b".into()],
        vec![vec![Response::new(alice_marginal, 1.0 - alice_marginal)?]],
        vec![vec![Response::new(bob_marginal, 1.0 - bob_marginal)?]],
    )?;
    let factorized = blc_joint(&one_point, "a", "b")?.probability(&["A=+1", "B=+1"])?;
    let mismatch = (quantum_joint - factorized).abs();
    Ok(ContradictionReport {
        axis: n.name(),
        quantum_joint,
        alice_marginal,
        bob_marginal,
        factorized,
        mismatch,
        contradiction: mismatch > tolerance::PROB,
    })
}

/// [`factorization_check`] on the singlet.
pub fn factorization_contradiction(n: &SpinDirection) -> Result<ContradictionReport> {
    factorization_check(&crate::eprb::singlet_state(), n)
}
