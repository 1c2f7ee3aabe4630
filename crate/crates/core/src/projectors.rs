//! Projectors, projective decompositions of the identity (PDIs) and the
//! spin-half constructors used by the measurement scenarios.
//!
//! A PDI is the quantum sample space at a single time: mutually orthogonal
//! projectors summing to the identity. Two PDIs can be used together only if
//! every member of one commutes with every member of the other.

use std::collections::HashSet;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{embed, Operator, StateVector, I, ONE, ZERO};
use crate::tolerance;

/// Joiner for compound labels produced by refinement.
pub const LABEL_JOINER: &str = "∧";

#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    op: Operator,
    label: String,
}

impl Projector {
    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            op: Operator::identity(dim),
            label: "I".to_string(),
        }
    }

    /// Same operator under a different label.
    pub fn relabel(&self, label: impl Into<String>) -> Self {
        Self {
            op: self.op.clone(),
            label: label.into(),
        }
    }

    /// Lifts the projector into factor `slot` of a tensor product space.
    pub fn embed(&self, slot: usize, dims: &[usize]) -> Result<Self> {
        Ok(Self {
            op: embed(&self.op, slot, dims)?,
            label: self.label.clone(),
        })
    }

    /// `self ⊗ other`, labelled with the compound joiner.
    pub fn tensor(&self, other: &Projector) -> Self {
        Self {
            op: self.op.tensor(&other.op),
            label: format!("{}{LABEL_JOINER}{}", self.label, other.label),
        }
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.op.max_abs() <= tol
    }
}

pub fn validate_projector(m: Operator, label: impl Into<String>) -> Result<Projector> {
    validate_projector_with(m, label, tolerance::PROJ)
}

/// Accepts `m` as a projector if it is hermitian and idempotent within `tol`.
pub fn validate_projector_with(m: Operator, label: impl Into<String>, tol: f64) -> Result<Projector> {
    let label = label.into();
    let herm = m.max_abs_diff(&m.adjoint())?;
    if herm > tol {
        return Err(Error::NotHermitian {
            label,
            deviation: herm,
        });
    }
    let idem = m.matmul(&m)?.max_abs_diff(&m)?;
    if idem > tol {
        return Err(Error::NotIdempotent {
            label,
            deviation: idem,
        });
    }
    Ok(Projector { op: m, label })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Unit vector in real 3-space naming a spin component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinDirection {
    x: f64,
    y: f64,
    z: f64,
}

impl SpinDirection {
    pub const UNIT_TOLERANCE: f64 = 1e-12;

    pub const X: SpinDirection = SpinDirection { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: SpinDirection = SpinDirection { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: SpinDirection = SpinDirection { x: 0.0, y: 0.0, z: 1.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm * norm - 1.0).abs() > Self::UNIT_TOLERANCE {
            return Err(Error::NonUnitDirection { norm });
        }
        Ok(Self { x, y, z })
    }

    /// Rescales any nonzero finite vector onto the unit sphere.
    pub fn normalize(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NonUnitDirection { norm });
        }
        Ok(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Direction in the x–z plane at `theta` radians from +z toward +x.
    pub fn planar(theta: f64) -> Self {
        Self {
            x: theta.sin(),
            y: 0.0,
            z: theta.cos(),
        }
    }

    /// Uniformly distributed on the sphere.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        Self {
            x: r * phi.cos(),
            y: r * phi.sin(),
            z,
        }
    }

    /// Bloch vector ⟨ψ|σ|ψ⟩ of a single spin-half state. The state is the
    /// `+` eigenvector of the returned direction.
    pub fn bloch(state: &StateVector) -> Result<Self> {
        if state.dim() != 2 {
            return Err(Error::DimensionError {
                expected: 2,
                found: state.dim(),
            });
        }
        let a = state.as_vector().amplitudes();
        let (a0, a1) = (a[0], a[1]);
        let cross = a0.conj() * a1;
        Self::normalize(2.0 * cross.re, 2.0 * cross.im, a0.norm_sqr() - a1.norm_sqr())
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &SpinDirection) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn negate(&self) -> Self {
        Self {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// "x", "y", "z" for the positive coordinate axes (within
    /// [`Self::UNIT_TOLERANCE`]), components otherwise.
    pub fn name(&self) -> String {
        for (axis, name) in [(Self::X, "x"), (Self::Y, "y"), (Self::Z, "z")] {
            if self.dot(&axis) >= 1.0 - Self::UNIT_TOLERANCE {
                return name.into();
            }
        }
        let [x, y, z] = self.components().map(|c| if c.abs() < 5e-7 { 0.0 } else { c });
        format!("({x:.6},{y:.6},{z:.6})")
    }

    /// n·σ on the spin-half space.
    pub fn pauli(&self) -> Operator {
        let re = |v: f64| Complex64::new(v, 0.0);
        Operator::new(
            2,
            vec![
                re(self.z),
                re(self.x) - I * self.y,
                re(self.x) + I * self.y,
                re(-self.z),
            ],
        )
        .expect("pauli combination is finite")
    }

    /// Eigenvector of n·σ with eigenvalue `sign`.
    pub fn eigenstate(&self, sign: Sign) -> StateVector {
        let proj = spin_projector(self, sign);
        // Column with the largest weight is a nonzero multiple of the eigenvector.
        let col = if proj.op().get(0, 0).norm() >= proj.op().get(1, 1).norm() {
            0
        } else {
            1
        };
        let v = crate::linalg::Vector::new(vec![proj.op().get(0, col), proj.op().get(1, col)])
            .expect("finite amplitudes");
        StateVector::normalized(v).expect("rank-one projector has a nonzero column")
    }
}

/// (I + sign·n·σ)/2 labelled like `Sz=+1/2`.
pub fn spin_projector(n: &SpinDirection, sign: Sign) -> Projector {
    let half = Complex64::new(0.5, 0.0);
    let s = Complex64::new(sign.value(), 0.0);
    let op = (&Operator::identity(2) + &n.pauli().scale(s)).scale(half);
    Projector {
        op,
        label: format!("S{}={}1/2", n.name(), sign),
    }
}

/// Outcome of a commutation test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Commutation {
    pub commutes: bool,
    /// Largest entry modulus of PQ − QP.
    pub max_deviation: f64,
    /// Frobenius norm of PQ − QP.
    pub frobenius_deviation: f64,
}

pub fn commutes(p: &Projector, q: &Projector) -> Result<Commutation> {
    commutes_within(p, q, tolerance::PROJ)
}

pub fn commutes_within(p: &Projector, q: &Projector, tol: f64) -> Result<Commutation> {
    let commutator = p.op.matmul(&q.op)?.checked_sub(&q.op.matmul(&p.op)?)?;
    let max_deviation = commutator.max_abs();
    Ok(Commutation {
        commutes: max_deviation <= tol,
        max_deviation,
        frobenius_deviation: commutator.frobenius_norm(),
    })
}

/// Projective decomposition of the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Pdi {
    projectors: Vec<Projector>,
    dim: usize,
    tol: f64,
}

impl Pdi {
    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn labels(&self) -> Vec<String> {
        self.projectors.iter().map(|p| p.label.clone()).collect()
    }

    pub fn get(&self, label: &str) -> Option<&Projector> {
        self.projectors.iter().find(|p| p.label == label)
    }

    /// The one-member decomposition {I}.
    pub fn trivial(dim: usize) -> Self {
        Self {
            projectors: vec![Projector::identity(dim)],
            dim,
            tol: tolerance::PROJ,
        }
    }

    /// {S_n=+1/2, S_n=−1/2} on a single spin-half.
    pub fn spin(n: &SpinDirection) -> Self {
        Self {
            projectors: Sign::BOTH.iter().map(|&s| spin_projector(n, s)).collect(),
            dim: 2,
            tol: tolerance::PROJ,
        }
    }

    /// Lifts every member into factor `slot` of a tensor product space.
    pub fn embed(&self, slot: usize, dims: &[usize]) -> Result<Self> {
        let projectors = self
            .projectors
            .iter()
            .map(|p| p.embed(slot, dims))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: projectors[0].dim(),
            projectors,
            tol: self.tol,
        })
    }

    /// Replaces member labels in order.
    pub fn relabel<S: Into<String>>(&self, labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let projectors: Vec<Projector> = self
            .projectors
            .iter()
            .zip(labels)
            .map(|(p, l)| p.relabel(l))
            .collect();
        if projectors.len() != self.projectors.len() {
            return Err(Error::DimensionError {
                expected: self.projectors.len(),
                found: projectors.len(),
            });
        }
        make_pdi_with(projectors, self.tol)
    }
}

pub fn make_pdi(projectors: Vec<Projector>) -> Result<Pdi> {
    make_pdi_with(projectors, tolerance::PROJ)
}

pub fn make_pdi_with(projectors: Vec<Projector>, tol: f64) -> Result<Pdi> {
    let Some(first) = projectors.first() else {
        return Err(Error::EmptyPdi);
    };
    let dim = first.dim();
    if let Some(p) = projectors.iter().find(|p| p.dim() != dim) {
        return Err(Error::DimensionError {
            expected: dim,
            found: p.dim(),
        });
    }
    let mut seen = HashSet::new();
    for p in &projectors {
        if !seen.insert(p.label.as_str()) {
            return Err(Error::DuplicateLabel(p.label.clone()));
        }
    }
    for (i, p) in projectors.iter().enumerate() {
        for q in &projectors[i + 1..] {
            let deviation = p.op.matmul(&q.op)?.max_abs();
            if deviation > tol {
                return Err(Error::NonOrthogonal {
                    first: p.label.clone(),
                    second: q.label.clone(),
                    deviation,
                });
            }
        }
    }
    let sum = projectors
        .iter()
        .skip(1)
        .fold(first.op.clone(), |acc, p| &acc + &p.op);
    let deviation = sum.max_abs_diff(&Operator::identity(dim))?;
    if deviation > tol {
        return Err(Error::IncompletePdi { deviation });
    }
    Ok(Pdi {
        projectors,
        dim,
        tol,
    })
}

/// Worst commutation across the two decompositions, with the offending pair.
pub fn pdi_commutation(d1: &Pdi, d2: &Pdi) -> Result<(Commutation, String, String)> {
    if d1.dim != d2.dim {
        return Err(Error::DimensionError {
            expected: d1.dim,
            found: d2.dim,
        });
    }
    let tol = d1.tol.max(d2.tol);
    let mut worst: Option<(Commutation, String, String)> = None;
    for p in &d1.projectors {
        for q in &d2.projectors {
            let c = commutes_within(p, q, tol)?;
            if worst
                .as_ref()
                .is_none_or(|(w, _, _)| c.max_deviation > w.max_deviation)
            {
                worst = Some((c, p.label.clone(), q.label.clone()));
            }
        }
    }
    Ok(worst.expect("decompositions are nonempty"))
}

pub fn pdi_commutes(d1: &Pdi, d2: &Pdi) -> Result<bool> {
    Ok(pdi_commutation(d1, d2)?.0.commutes)
}

/// Common refinement: all nonzero products Pᵢ·Qⱼ, coarse-major.
pub fn refine_pdi(coarse: &Pdi, fine: &Pdi) -> Result<Pdi> {
    let (c, first, second) = pdi_commutation(coarse, fine)?;
    if !c.commutes {
        return Err(Error::IncompatiblePdis {
            first,
            second,
            deviation: c.max_deviation,
        });
    }
    let tol = coarse.tol.max(fine.tol);
    let mut products = Vec::with_capacity(coarse.len() * fine.len());
    for p in &coarse.projectors {
        for q in &fine.projectors {
            let op = p.op.matmul(&q.op)?;
            if op.max_abs() <= tol {
                continue;
            }
            let label = format!("{}{LABEL_JOINER}{}", p.label, q.label);
            products.push(validate_projector_with(op, label, tol)?);
        }
    }
    make_pdi_with(products, tol)
}

/// Pointer projectors |0⟩⟨0| and |1⟩⟨1| on a qubit.
pub(crate) fn basis_projector(index: usize, label: impl Into<String>) -> Projector {
    let mut data = vec![ZERO; 4];
    data[index * 2 + index] = ONE;
    Projector {
        op: Operator::new(2, data).expect("finite"),
        label: label.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn real(rows: &[&[f64]]) -> Operator {
        Operator::from_real_rows(rows).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert!(validate_projector(Operator::identity(2), "true").is_ok());
        let px = validate_projector(real(&[&[0.5, 0.5], &[0.5, 0.5]]), "Sx=+1/2").unwrap();
        assert_eq!(px.label(), "Sx=+1/2");
        let err = validate_projector(real(&[&[1.0, 1.0], &[0.0, 1.0]]), "bad").unwrap_err();
        assert!(matches!(err, Error::NotHermitian { deviation, .. } if deviation == 1.0));
    }

    #[test]
    fn validate_reports_idempotence_failure() {
        let err = validate_projector(real(&[&[2.0, 0.0], &[0.0, 0.0]]), "2P").unwrap_err();
        assert!(matches!(err, Error::NotIdempotent { deviation, .. } if deviation == 2.0));
    }

    #[test]
    fn spin_projector_examples() {
        let z = spin_projector(&SpinDirection::Z, Sign::Plus);
        assert_eq!(z.op(), &real(&[&[1.0, 0.0], &[0.0, 0.0]]));
        assert_eq!(z.label(), "Sz=+1/2");
        let x = spin_projector(&SpinDirection::X, Sign::Plus);
        assert_eq!(x.op(), &real(&[&[0.5, 0.5], &[0.5, 0.5]]));
        let sum = z.op() + spin_projector(&SpinDirection::Z, Sign::Minus).op();
        assert_eq!(sum, Operator::identity(2));
    }

    #[test]
    fn spin_direction_requires_unit_norm() {
        assert!(matches!(
            SpinDirection::new(0.0, 0.0, 2.0),
            Err(Error::NonUnitDirection { norm }) if norm == 2.0
        ));
        assert!(SpinDirection::new(0.6, 0.0, 0.8).is_ok());
    }

    #[test]
    fn commutes_examples() {
        let zp = spin_projector(&SpinDirection::Z, Sign::Plus);
        let zm = spin_projector(&SpinDirection::Z, Sign::Minus);
        let xp = spin_projector(&SpinDirection::X, Sign::Plus);
        assert!(commutes(&zp, &zm).unwrap().commutes);

        let c = commutes(&zp, &xp).unwrap();
        assert!(!c.commutes);
        // PQ − QP = [[0, 0.5], [−0.5, 0]]
        assert_eq!(c.max_deviation, 0.5);
        assert!((c.frobenius_deviation - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        let commutator = &(zp.op() * xp.op()) - &(xp.op() * zp.op());
        assert_eq!(commutator, real(&[&[0.0, 0.5], &[-0.5, 0.0]]));

        let id = Projector::identity(2);
        let a = Projector {
            op: zp.op().tensor(id.op()),
            label: "a".into(),
        };
        let b = Projector {
            op: id.op().tensor(xp.op()),
            label: "b".into(),
        };
        assert!(commutes(&a, &b).unwrap().commutes);
        assert!(commutes(&zp, &a).is_err());
    }

    #[test]
    fn make_pdi_examples() {
        let zp = spin_projector(&SpinDirection::Z, Sign::Plus);
        let zm = spin_projector(&SpinDirection::Z, Sign::Minus);
        let xm = spin_projector(&SpinDirection::X, Sign::Minus);
        let d = make_pdi(vec![zp.clone(), zm.clone()]).unwrap();
        assert_eq!(d.labels(), vec!["Sz=+1/2", "Sz=-1/2"]);
        assert!(matches!(
            make_pdi(vec![zp.clone(), xm]),
            Err(Error::NonOrthogonal { .. })
        ));
        assert!(matches!(
            make_pdi(vec![zp.clone()]),
            Err(Error::IncompletePdi { .. })
        ));
        assert!(matches!(
            make_pdi(vec![zp.clone(), zm.relabel("Sz=+1/2")]),
            Err(Error::DuplicateLabel(_))
        ));
        assert_eq!(make_pdi(vec![]), Err(Error::EmptyPdi));
    }

    #[test]
    fn pdi_commutes_examples() {
        let dz = Pdi::spin(&SpinDirection::Z);
        let dx = Pdi::spin(&SpinDirection::X);
        assert!(pdi_commutes(&dz, &dz).unwrap());
        assert!(!pdi_commutes(&dz, &dx).unwrap());
        assert!(pdi_commutes(&dz, &Pdi::trivial(2)).unwrap());
        assert!(pdi_commutes(&dz, &Pdi::trivial(4)).is_err());
    }

    #[test]
    fn refine_examples() {
        let dz = Pdi::spin(&SpinDirection::Z);
        let r = refine_pdi(&Pdi::trivial(2), &dz).unwrap();
        assert_eq!(r.len(), 2);
        for (a, b) in r.projectors().iter().zip(dz.projectors()) {
            assert_eq!(a.op(), b.op());
        }

        let rr = refine_pdi(&dz, &dz).unwrap();
        assert_eq!(rr.labels(), vec!["Sz=+1/2∧Sz=+1/2", "Sz=-1/2∧Sz=-1/2"]);

        let dims = [2, 2];
        let coarse = dz.embed(0, &dims).unwrap();
        let fine = Pdi::spin(&SpinDirection::X).embed(1, &dims).unwrap();
        let four = refine_pdi(&coarse, &fine).unwrap();
        assert_eq!(four.len(), 4);
        for p in four.projectors() {
            assert!((p.op().trace().re - 1.0).abs() < 1e-12);
        }
        // re-validates as a PDI
        assert!(make_pdi(four.projectors().to_vec()).is_ok());

        assert!(matches!(
            refine_pdi(&dz, &Pdi::spin(&SpinDirection::X)),
            Err(Error::IncompatiblePdis { .. })
        ));
    }

    #[test]
    fn spin_completeness_over_random_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = SpinDirection::random(&mut rng);
            let p = spin_projector(&n, Sign::Plus);
            let m = spin_projector(&n, Sign::Minus);
            assert!((p.op() + m.op()).max_abs_diff(&Operator::identity(2)).unwrap() <= 1e-14);
            assert!((p.op() * m.op()).max_abs() <= 1e-14);
        }
    }

    #[test]
    fn bloch_vector_recovers_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = SpinDirection::random(&mut rng);
            for s in Sign::BOTH {
                let state = n.eigenstate(s);
                let b = SpinDirection::bloch(&state).unwrap();
                let expected = if s == Sign::Plus { n } else { n.negate() };
                assert!((b.dot(&expected) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigenstate_is_fixed_by_projector() {
        let n = SpinDirection::planar(0.3);
        let v = n.eigenstate(Sign::Minus);
        let p = spin_projector(&n, Sign::Minus);
        let out = p.op().apply(v.as_vector()).unwrap();
        assert!(out.max_abs_diff(v.as_vector()).unwrap() < 1e-14);
    }
}
