//! Poisson structures, brackets and Hamiltonian vector fields.
//!
//! The bracket convention is fixed once for the whole crate:
//! `{f,g} = (grad f)^T W (grad g)` with `W` the structure matrix. Under the
//! rigid-body matrix `A_x` this gives `{x1,x2} = -x3`; Casimirs, ranks and
//! strata are unaffected by the overall sign choice.

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// A Poisson structure on `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub enum PoissonStructure {
    /// Standard symplectic structure on `n` conjugate pairs, variables ordered
    /// `(x_1..x_n, y_1..y_n)` with `{x_i, y_i} = 1`.
    Canonical { pairs: usize },
    /// General antisymmetric matrix of polynomial entries.
    Matrix { entries: Vec<Vec<Polynomial>> },
}

impl PoissonStructure {
    pub fn canonical(pairs: usize) -> Self {
        PoissonStructure::Canonical { pairs }
    }

    /// Build a matrix structure, verifying antisymmetry symbolically.
    pub fn matrix(entries: Vec<Vec<Polynomial>>) -> Result<Self> {
        let n = entries.len();
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ModelFormat(format!(
                    "structure matrix row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for p in row {
                if p.arity() != n {
                    return Err(Error::ArityMismatch {
                        expected: n,
                        got: p.arity(),
                    });
                }
            }
        }
        for i in 0..n {
            for j in i..n {
                if !entries[i][j].add(&entries[j][i]).is_zero() {
                    return Err(Error::StructureNotAntisymmetric { i, j });
                }
            }
        }
        Ok(PoissonStructure::Matrix { entries })
    }

    /// Number of phase-space variables the structure acts on.
    pub fn arity(&self) -> usize {
        match self {
            PoissonStructure::Canonical { pairs } => 2 * pairs,
            PoissonStructure::Matrix { entries } => entries.len(),
        }
    }

    pub fn is_canonical(&self) -> bool {
        matches!(self, PoissonStructure::Canonical { .. })
    }

    /// Structure matrix entry `W_ij` as a polynomial.
    pub fn entry(&self, i: usize, j: usize) -> Polynomial {
        let n = self.arity();
        match self {
            PoissonStructure::Canonical { pairs } => {
                // Block form [[0, I], [-I, 0]].
                if i < *pairs && j == i + pairs {
                    Polynomial::one(n)
                } else if j < *pairs && i == j + pairs {
                    Polynomial::from_int(n, -1)
                } else {
                    Polynomial::zero(n)
                }
            }
            PoissonStructure::Matrix { entries } => entries[i][j].clone(),
        }
    }

    /// Evaluate the structure matrix at a floating point.
    pub fn eval_matrix(&self, point: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.arity();
        if point.len() != n {
            return Err(Error::ArityMismatch {
                expected: n,
                got: point.len(),
            });
        }
        let mut w = vec![vec![0.0; n]; n];
        match self {
            PoissonStructure::Canonical { pairs } => {
                for i in 0..*pairs {
                    w[i][i + pairs] = 1.0;
                    w[i + pairs][i] = -1.0;
                }
            }
            PoissonStructure::Matrix { entries } => {
                for i in 0..n {
                    for j in 0..n {
                        w[i][j] = entries[i][j].eval_f64(point)?;
                    }
                }
            }
        }
        Ok(w)
    }

    fn check_arity(&self, p: &Polynomial) -> Result<()> {
        if p.arity() != self.arity() {
            return Err(Error::ArityMismatch {
                expected: self.arity(),
                got: p.arity(),
            });
        }
        Ok(())
    }

    /// Exact Poisson bracket `{f,g}`.
    pub fn bracket(&self, f: &Polynomial, g: &Polynomial) -> Result<Polynomial> {
        self.check_arity(f)?;
        self.check_arity(g)?;
        let n = self.arity();
        match self {
            PoissonStructure::Canonical { pairs } => {
                let mut acc = Polynomial::zero(n);
                for i in 0..*pairs {
                    let fx = f.diff(i)?;
                    let fy = f.diff(i + pairs)?;
                    let gx = g.diff(i)?;
                    let gy = g.diff(i + pairs)?;
                    acc = acc.add(&fx.mul(&gy)).sub(&fy.mul(&gx));
                }
                Ok(acc)
            }
            PoissonStructure::Matrix { entries } => {
                let df = f.gradient();
                let dg = g.gradient();
                let mut acc = Polynomial::zero(n);
                for i in 0..n {
                    if df[i].is_zero() {
                        continue;
                    }
                    for j in 0..n {
                        if entries[i][j].is_zero() || dg[j].is_zero() {
                            continue;
                        }
                        acc = acc.add(&df[i].mul(&entries[i][j]).mul(&dg[j]));
                    }
                }
                Ok(acc)
            }
        }
    }

    /// Hamiltonian vector field `X_f = W grad f`, one component per variable.
    pub fn hamiltonian_field(&self, f: &Polynomial) -> Result<Vec<Polynomial>> {
        self.check_arity(f)?;
        let n = self.arity();
        match self {
            PoissonStructure::Canonical { pairs } => {
                let mut field = Vec::with_capacity(n);
                for i in 0..*pairs {
                    field.push(f.diff(i + pairs)?);
                }
                for i in 0..*pairs {
                    field.push(f.diff(i)?.neg());
                }
                Ok(field)
            }
            PoissonStructure::Matrix { entries } => {
                let df = f.gradient();
                let mut field = Vec::with_capacity(n);
                for i in 0..n {
                    let mut comp = Polynomial::zero(n);
                    for j in 0..n {
                        if !entries[i][j].is_zero() && !df[j].is_zero() {
                            comp = comp.add(&entries[i][j].mul(&df[j]));
                        }
                    }
                    field.push(comp);
                }
                Ok(field)
            }
        }
    }

    /// Evaluate `X_f` at a floating point.
    pub fn field_at(&self, f: &Polynomial, point: &[f64]) -> Result<Vec<f64>> {
        let field = self.hamiltonian_field(f)?;
        field.iter().map(|c| c.eval_f64(point)).collect()
    }
}

/// The `so(3)` structure matrix `A_x` on `R^3` (`A_x v = x × v`).
pub fn so3_structure_matrix() -> PoissonStructure {
    block_so3_structure(1)
}

/// Block-diagonal `A_x ⊕ A_y ⊕ ...` on `R^{3b}`.
pub fn block_so3_structure(blocks: usize) -> PoissonStructure {
    let n = 3 * blocks;
    let mut entries = vec![vec![Polynomial::zero(n); n]; n];
    for b in 0..blocks {
        let o = 3 * b;
        // A_x = [[0,-x3,x2],[x3,0,-x1],[-x2,x1,0]] per block.
        let x = |i: usize| Polynomial::var(n, o + i);
        entries[o][o + 1] = x(2).neg();
        entries[o][o + 2] = x(1);
        entries[o + 1][o] = x(2);
        entries[o + 1][o + 2] = x(0).neg();
        entries[o + 2][o] = x(1).neg();
        entries[o + 2][o + 1] = x(0);
    }
    PoissonStructure::matrix(entries).expect("antisymmetric by construction")
}

/// Convert a rational to f64 (used by evaluators and reports).
pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
