//! Reference computations written without the crate's table or causality
//! code: closed forms for the singlet and a brute-force event-sum over raw
//! table entries.

#![allow(dead_code)]

use histories_core::histories::ProbabilityTable;
use histories_core::projectors::SpinDirection;

/// Pr(A=α, B=β | a, b) = (1 − αβ a·b) / 4.
pub fn singlet_joint(a: &SpinDirection, b: &SpinDirection, alpha: f64, beta: f64) -> f64 {
    (1.0 - alpha * beta * a.dot(b)) / 4.0
}

/// E(a, b) = −a·b = −cos θ_ab.
pub fn singlet_correlator(a: &SpinDirection, b: &SpinDirection) -> f64 {
    -a.dot(b)
}

/// Pr(+1 along n) for a pure spin-half with Bloch vector r: (1 + n·r) / 2.
pub fn spin_half_plus(n: &SpinDirection, bloch: &SpinDirection) -> f64 {
    (1.0 + n.dot(bloch)) / 2.0
}

/// A condition `variable@time ∈ outcomes`.
#[derive(Clone, Debug)]
pub struct Cond<'a> {
    pub time: &'a str,
    pub name: &'a str,
    pub outcomes: Vec<&'a str>,
}

pub fn cond<'a>(time: &'a str, name: &'a str, outcome: &'a str) -> Cond<'a> {
    Cond {
        time,
        name,
        outcomes: vec![outcome],
    }
}

/// Every row of a table as explicit `(time, name) → outcome` assignments.
pub struct BruteTable {
    columns: Vec<(String, String)>,
    rows: Vec<(Vec<String>, f64)>,
}

impl BruteTable {
    /// Re-derives the outcome of every entry from the variable list alone,
    /// counting in mixed radix with the last variable fastest.
    pub fn from_table(table: &ProbabilityTable) -> Self {
        let vars = table.variables();
        let radices: Vec<usize> = vars.iter().map(|v| v.outcomes.len()).collect();
        let rows = table
            .entries()
            .iter()
            .enumerate()
            .map(|(flat, &p)| {
                let mut rest = flat;
                let mut labels = vec![String::new(); vars.len()];
                for k in (0..vars.len()).rev() {
                    labels[k] = vars[k].outcomes[rest % radices[k]].clone();
                    rest /= radices[k];
                }
                (labels, p)
            })
            .collect();
        Self {
            columns: vars.iter().map(|v| (v.time.clone(), v.name.clone())).collect(),
            rows,
        }
    }

    fn matches(&self, labels: &[String], c: &Cond) -> bool {
        let col = self
            .columns
            .iter()
            .position(|(t, n)| t == c.time && n == c.name)
            .unwrap_or_else(|| panic!("oracle: no column {}@{}", c.name, c.time));
        c.outcomes.iter().any(|o| labels[col] == *o)
    }

    pub fn prob(&self, conds: &[Cond]) -> f64 {
        self.rows
            .iter()
            .filter(|(labels, _)| conds.iter().all(|c| self.matches(labels, c)))
            .map(|(_, p)| p)
            .sum()
    }

    /// Pr(target | given), `None` unless Pr(given) exceeds `tol`.
    pub fn conditional(&self, target: &Cond, given: &Cond, tol: f64) -> Option<f64> {
        let pg = self.prob(std::slice::from_ref(given));
        (pg > tol).then(|| self.prob(&[target.clone(), given.clone()]) / pg)
    }

    pub fn independent(&self, f: &Cond, g: &Cond, tol: f64) -> bool {
        let joint = self.prob(&[f.clone(), g.clone()]);
        (joint - self.prob(std::slice::from_ref(f)) * self.prob(std::slice::from_ref(g))).abs() <= tol
    }

    pub fn ideal_cause(&self, f: &Cond, g: &Cond, tol: f64) -> bool {
        match (self.conditional(g, f, tol), self.conditional(f, g, tol)) {
            (Some(fw), Some(bw)) => (fw - 1.0).abs() <= tol && (bw - 1.0).abs() <= tol,
            _ => false,
        }
    }

    /// Outcomes of the column that are ideal causes of both `f` and `g`.
    pub fn common_causes(&self, time: &str, name: &str, f: &Cond, g: &Cond, tol: f64) -> Vec<String> {
        let col = self
            .columns
            .iter()
            .position(|(t, n)| t == time && n == name)
            .expect("oracle: candidate column");
        let mut seen: Vec<String> = Vec::new();
        for (labels, _) in &self.rows {
            if !seen.contains(&labels[col]) {
                seen.push(labels[col].clone());
            }
        }
        seen.into_iter()
            .filter(|o| {
                let e = Cond {
                    time,
                    name,
                    outcomes: vec![o.as_str()],
                };
                self.ideal_cause(&e, f, tol) && self.ideal_cause(&e, g, tol)
            })
            .collect()
    }

    /// Distribution of one column.
    pub fn marginal(&self, time: &str, name: &str) -> Vec<(String, f64)> {
        let col = self
            .columns
            .iter()
            .position(|(t, n)| t == time && n == name)
            .expect("oracle: marginal column");
        let mut out: Vec<(String, f64)> = Vec::new();
        for (labels, p) in &self.rows {
            match out.iter_mut().find(|(o, _)| *o == labels[col]) {
                Some(slot) => slot.1 += p,
                None => out.push((labels[col].clone(), *p)),
            }
        }
        out
    }
}
