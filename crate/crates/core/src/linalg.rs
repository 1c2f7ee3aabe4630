//! Dense complex linear algebra on small Hilbert spaces.
//!
//! Everything here is row-major and immutable. The scenarios never go beyond
//! two spin-halves plus two pointer qubits (dim 16), so plain `Vec` storage
//! is all that is needed.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexScalar = Complex64;

/// Largest dimension accepted by the checked constructors.
pub const MAX_DIM: usize = 64;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<Complex64>,
}

impl Operator {
    /// Builds an operator from row-major entries, rejecting non-square input,
    /// non-finite entries and dimensions above [`MAX_DIM`].
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::NotSquare {
                rows: dim,
                cols: data.len().checked_div(dim).unwrap_or(0),
            });
        }
        if dim > MAX_DIM {
            return Err(Error::DimensionTooLarge { dim, cap: MAX_DIM });
        }
        if let Some(index) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::NotSquare {
                rows: dim,
                cols: bad.len(),
            });
        }
        Self::new(dim, rows.concat())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op.data[i * dim + i] = ONE;
        }
        op
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "operator dimension must be positive");
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    /// Outer product |u⟩⟨v|.
    pub fn outer(u: &Vector, v: &Vector) -> Result<Self> {
        check_dim(u.dim(), v.dim())?;
        let dim = u.dim();
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(u.amps[i] * v.amps[j].conj());
            }
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        check_dim(self.dim, other.dim)?;
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(Operator { dim: n, data })
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Operator {
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        Operator { dim: n, data }
    }

    /// Kronecker product; block (i, j) of the result is `self[i][j] * other`.
    pub fn tensor(&self, other: &Operator) -> Operator {
        let (m, n) = (self.dim, other.dim);
        let dim = m * n;
        let mut data = vec![ZERO; dim * dim];
        for i in 0..m {
            for j in 0..m {
                let a = self.data[i * m + j];
                for k in 0..n {
                    for l in 0..n {
                        data[(i * n + k) * dim + (j * n + l)] = a * other.data[k * n + l];
                    }
                }
            }
        }
        Operator { dim, data }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        check_dim(self.dim, v.dim())?;
        let n = self.dim;
        let amps = (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(&v.amps)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Ok(Vector { amps })
    }

    pub fn scale(&self, factor: Complex64) -> Operator {
        Operator {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn checked_add(&self, other: &Operator) -> Result<Operator> {
        check_dim(self.dim, other.dim)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn checked_sub(&self, other: &Operator) -> Result<Operator> {
        check_dim(self.dim, other.dim)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        check_dim(self.dim, other.dim)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max entrywise deviation of U†U from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        self.adjoint()
            .matmul(self)
            .and_then(|p| p.max_abs_diff(&Operator::identity(self.dim)))
            .unwrap_or(f64::INFINITY)
    }

    fn zip_with(&self, other: &Operator, f: impl Fn(Complex64, Complex64) -> Complex64) -> Operator {
        Operator {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator(dim={}) [", self.dim)?;
        for row in self.data.chunks(self.dim) {
            let cells: Vec<String> = row
                .iter()
                .map(|z| format!("{:+.4}{:+.4}i", z.re, z.im))
                .collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.checked_add(rhs).expect("operator dimensions must match")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.checked_sub(rhs).expect("operator dimensions must match")
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs).expect("operator dimensions must match")
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-ONE)
    }
}

/// Embeds `op` as factor `slot` of a tensor product with the given factor
/// dimensions, padding every other factor with the identity.
pub fn embed(op: &Operator, slot: usize, dims: &[usize]) -> Result<Operator> {
    let Some(&slot_dim) = dims.get(slot) else {
        return Err(Error::DimensionError {
            expected: dims.len(),
            found: slot,
        });
    };
    check_dim(slot_dim, op.dim())?;
    let left: usize = dims[..slot].iter().product();
    let right: usize = dims[slot + 1..].iter().product();
    Ok(Operator::identity(left)
        .tensor(op)
        .tensor(&Operator::identity(right)))
}

/// Unnormalized amplitude vector.
#[derive(Clone, PartialEq)]
pub struct Vector {
    amps: Vec<Complex64>,
}

impl Vector {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::DimensionError {
                expected: 1,
                found: 0,
            });
        }
        if let Some(index) = amps.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { amps })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Computational basis vector |index⟩.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self { amps }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            amps: vec![ZERO; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// ⟨self|other⟩, antilinear in `self`.
    pub fn inner(&self, other: &Vector) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn tensor(&self, other: &Vector) -> Vector {
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Vector { amps }
    }

    pub fn scale(&self, factor: Complex64) -> Vector {
        Vector {
            amps: self.amps.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn checked_add(&self, other: &Vector) -> Result<Vector> {
        check_dim(self.dim(), other.dim())?;
        Ok(Vector {
            amps: self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Vector) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.amps.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self
            .amps
            .iter()
            .map(|z| format!("{:+.4}{:+.4}i", z.re, z.im))
            .collect();
        write!(f, "Vector[{}]", cells.join(", "))
    }
}

/// A vector of unit norm (within [`crate::tolerance::NORM`]).
#[derive(Clone, PartialEq, Debug)]
pub struct StateVector(Vector);

impl StateVector {
    pub fn new(v: Vector) -> Result<Self> {
        Self::with_tolerance(v, crate::tolerance::NORM)
    }

    pub fn with_tolerance(v: Vector, tol: f64) -> Result<Self> {
        let norm = v.norm();
        if (norm - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self(v))
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(v: Vector) -> Result<Self> {
        let norm = v.norm();
        if norm <= f64::EPSILON {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self(v.scale(Complex64::new(1.0 / norm, 0.0))))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        Self(Vector::basis(dim, index))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_vector(&self) -> &Vector {
        &self.0
    }

    pub fn into_vector(self) -> Vector {
        self.0
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector(self.0.tensor(&other.0))
    }
}

impl AsRef<Vector> for StateVector {
    fn as_ref(&self) -> &Vector {
        &self.0
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionError { expected, found });
    }
    Ok(())
}
