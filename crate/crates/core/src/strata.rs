//! Rank diagnostics witnessing the stratification statements: ranks of the
//! orbit-map differential, the momentum differential, the group-orbit tangent
//! span and the induced structure, folded into stratum signatures.
//!
//! The stratum label is the pair (rank drho, rank of span{X_Ji}); orbit types
//! are witnessed through these ranks rather than through stabiliser subgroups.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::VerifiedModel;
use crate::poisson::PoissonStructure;
use crate::poly::{CompiledPoly, Polynomial};
use crate::rng::DeterministicRng;

enum StructureEval {
    Canonical { pairs: usize },
    Matrix { entries: Vec<Vec<Option<CompiledPoly>>> },
}

/// Precompiled differentials of a model, reused across many sample points.
pub struct RankAnalyzer<'m> {
    model: &'m VerifiedModel,
    rho: Vec<CompiledPoly>,
    grad_rho: Vec<Vec<CompiledPoly>>,
    grad_j: Vec<Vec<CompiledPoly>>,
    structure: StructureEval,
}

impl<'m> RankAnalyzer<'m> {
    pub fn new(model: &'m VerifiedModel) -> Self {
        let compile_grads = |polys: &[Polynomial]| -> Vec<Vec<CompiledPoly>> {
            polys
                .iter()
                .map(|p| p.gradient().iter().map(Polynomial::compile).collect())
                .collect()
        };
        let rho_polys = model.invariant_polys();
        let j_polys: Vec<Polynomial> = model.generators.iter().map(|g| g.poly.clone()).collect();
        let structure = match &model.structure {
            PoissonStructure::Canonical { pairs } => StructureEval::Canonical { pairs: *pairs },
            PoissonStructure::Matrix { entries } => StructureEval::Matrix {
                entries: entries
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|p| if p.is_zero() { None } else { Some(p.compile()) })
                            .collect()
                    })
                    .collect(),
            },
        };
        RankAnalyzer {
            model,
            rho: rho_polys.iter().map(Polynomial::compile).collect(),
            grad_rho: compile_grads(&rho_polys),
            grad_j: compile_grads(&j_polys),
            structure,
        }
    }

    fn structure_at(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.model.dim();
        let mut w = DMatrix::zeros(n, n);
        match &self.structure {
            StructureEval::Canonical { pairs } => {
                for i in 0..*pairs {
                    w[(i, i + pairs)] = 1.0;
                    w[(i + pairs, i)] = -1.0;
                }
            }
            StructureEval::Matrix { entries } => {
                for (i, row) in entries.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        if let Some(p) = e {
                            w[(i, j)] = p.eval(x);
                        }
                    }
                }
            }
        }
        w
    }

    fn gradient_matrix(grads: &[Vec<CompiledPoly>], x: &[f64]) -> DMatrix<f64> {
        let rows = grads.len();
        let cols = x.len();
        let mut m = DMatrix::zeros(rows, cols);
        for (i, g) in grads.iter().enumerate() {
            for (j, p) in g.iter().enumerate() {
                m[(i, j)] = p.eval(x);
            }
        }
        m
    }

    /// All five ranks plus the linear-algebra cross-checks at a point.
    pub fn rank_report(&self, x: &[f64], tol: f64) -> Result<RankReport> {
        let n = self.model.dim();
        if x.len() != n {
            return Err(Error::ArityMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let drho = Self::gradient_matrix(&self.grad_rho, x);
        let dj = Self::gradient_matrix(&self.grad_j, x);
        let w = self.structure_at(x);
        let x_rho = &w * drho.transpose();
        let x_j = &w * dj.transpose();
        let induced = &drho * &x_rho;

        // Product matrices get a cutoff scaled by the factor norms, so exact
        // cancellations do not resurface as rounding-dust directions.
        let n_drho = drho.norm();
        let n_dj = dj.norm();
        let n_w = w.norm();
        let rank_drho = linalg::rank(&drho, tol);
        let rank_dj = linalg::rank(&dj, tol);
        let rank_orbit_span = linalg::rank_scaled(&x_j, tol, n_w * n_dj);
        let rank_invariant_span = linalg::rank_scaled(&x_rho, tol, n_w * n_drho);
        let rank_induced = linalg::rank_scaled(&induced, tol, n_w * n_drho * n_drho);

        // Independent route for the product-rank identity: intersect the
        // column span of the invariant fields with the kernel of drho. The
        // stacked matrix always contains the orthonormal kernel columns, so a
        // plain relative cutoff drops the same dust directions.
        let kernel = linalg::null_space(&drho, tol);
        let kernel_rank = kernel.len();
        let kernel_m = linalg::matrix_from_columns(n, &kernel);
        let mut stacked = DMatrix::zeros(n, x_rho.ncols() + kernel_rank);
        stacked
            .view_mut((0, 0), (n, x_rho.ncols()))
            .copy_from(&x_rho);
        stacked
            .view_mut((0, x_rho.ncols()), (n, kernel_rank))
            .copy_from(&kernel_m);
        let stacked_rank = linalg::rank_scaled(&stacked, tol, n_w * n_drho);
        let span_kernel_overlap = (rank_invariant_span + kernel_rank).saturating_sub(stacked_rank);
        let identity_ok =
            rank_induced == rank_invariant_span.saturating_sub(span_kernel_overlap);

        let image = self.rho.iter().map(|p| p.eval(x)).collect();
        Ok(RankReport {
            point: x.to_vec(),
            image,
            rank_drho,
            rank_dj,
            rank_orbit_span,
            rank_invariant_span,
            rank_induced,
            span_kernel_overlap,
            identity_ok,
        })
    }

    pub fn stratum_signature(&self, x: &[f64], tol: f64) -> Result<StratumSignature> {
        let report = self.rank_report(x, tol)?;
        Ok(report.signature())
    }

    /// Check that the invariant fields span the kernel of dJ.
    ///
    /// Restricted to canonical (symplectic) structures: on the degenerate
    /// catalog structures the literal statement fails. PASS requires every
    /// `X_rho_i` inside `ker dJ` to tolerance and
    /// `rank span{X_rho_i} = n - rank dJ`; the origin, where both sides
    /// collapse, reports a degenerate pass.
    pub fn kernel_span_check(&self, x: &[f64], tol: f64) -> Result<KernelSpanVerdict> {
        if !self.model.structure.is_canonical() {
            return Err(Error::RequiresCanonicalStructure);
        }
        let n = self.model.dim();
        if x.len() != n {
            return Err(Error::ArityMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let drho = Self::gradient_matrix(&self.grad_rho, x);
        let dj = Self::gradient_matrix(&self.grad_j, x);
        let w = self.structure_at(x);
        let x_rho = &w * drho.transpose();
        let rank_dj = linalg::rank(&dj, tol);
        let rank_span = linalg::rank_scaled(&x_rho, tol, w.norm() * drho.norm());
        if rank_dj == 0 && rank_span == 0 {
            return Ok(KernelSpanVerdict::Pass { degenerate: true });
        }
        // Containment: dJ * X_rho = 0 up to scale.
        let prod = &dj * &x_rho;
        let scale = dj.norm().max(1.0) * x_rho.norm().max(1.0);
        let max_residual = prod.iter().fold(0.0_f64, |a, v| a.max(v.abs())) / scale;
        let contained = max_residual <= tol.max(1e-12) * 1e3;
        let expected = n - rank_dj;
        if contained && rank_span == expected {
            Ok(KernelSpanVerdict::Pass { degenerate: false })
        } else {
            Ok(KernelSpanVerdict::Fail {
                max_kernel_residual: max_residual,
                rank_invariant_span: rank_span,
                expected,
            })
        }
    }
}

/// Numeric rank data classifying a point's stratum.
#[derive(Debug, Clone)]
pub struct RankReport {
    pub point: Vec<f64>,
    pub image: Vec<f64>,
    pub rank_drho: usize,
    pub rank_dj: usize,
    /// Rank of the matrix with columns `X_{J_i}(x)` — the group-orbit tangent span.
    pub rank_orbit_span: usize,
    /// Rank of the matrix with columns `X_{rho_i}(x)`.
    pub rank_invariant_span: usize,
    /// Rank of `(drho) W (drho)^T` — the induced structure at the image point.
    pub rank_induced: usize,
    /// dim( span{X_rho_i} ∩ ker drho ), computed by the stacked-basis route.
    pub span_kernel_overlap: usize,
    /// Whether `rank_induced = rank_invariant_span - span_kernel_overlap` held.
    pub identity_ok: bool,
}

impl RankReport {
    pub fn signature(&self) -> StratumSignature {
        StratumSignature {
            rank_drho: self.rank_drho,
            rank_orbit_span: self.rank_orbit_span,
        }
    }

    /// Defect of the naive rank equality `rank((drho)W(drho)^T) = rank(drho)`;
    /// on models with Casimirs this is the number of independent Casimir
    /// differentials, not zero.
    pub fn induced_rank_defect(&self) -> i64 {
        self.rank_drho as i64 - self.rank_induced as i64
    }
}

/// The computable stratum label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct StratumSignature {
    pub rank_drho: usize,
    pub rank_orbit_span: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpanVerdict {
    Pass {
        degenerate: bool,
    },
    Fail {
        max_kernel_residual: f64,
        rank_invariant_span: usize,
        expected: usize,
    },
}

#[derive(Debug, Clone)]
pub struct PrincipalStratumEstimate {
    /// Componentwise-maximal observed signature; `None` when no samples ran.
    pub max_signature: Option<StratumSignature>,
    /// Fraction of samples attaining exactly the maximal signature.
    pub frequency: f64,
    pub samples: usize,
}

/// Sample standard-normal phase points and report the maximal signature with
/// its frequency; the principal orbit theorem predicts frequency 1 at desk
/// scale. Draws are indexed by sample, so any parallel split reproduces the
/// same stream.
pub fn principal_stratum_estimate(
    model: &VerifiedModel,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<PrincipalStratumEstimate> {
    if n_samples == 0 {
        return Ok(PrincipalStratumEstimate {
            max_signature: None,
            frequency: 0.0,
            samples: 0,
        });
    }
    let analyzer = RankAnalyzer::new(model);
    let n = model.dim();
    let mut signatures = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let mut rng = DeterministicRng::at(seed, 0x57A7, (i * 2 * n) as u64);
        let x = rng.normal_vec(n);
        signatures.push(analyzer.stratum_signature(&x, tol)?);
    }
    let max_sig = StratumSignature {
        rank_drho: signatures.iter().map(|s| s.rank_drho).max().unwrap(),
        rank_orbit_span: signatures.iter().map(|s| s.rank_orbit_span).max().unwrap(),
    };
    let hits = signatures.iter().filter(|s| **s == max_sig).count();
    Ok(PrincipalStratumEstimate {
        max_signature: Some(max_sig),
        frequency: hits as f64 / n_samples as f64,
        samples: n_samples,
    })
}

/// One-off rank report without keeping the analyzer.
pub fn rank_report(model: &VerifiedModel, x: &[f64], tol: f64) -> Result<RankReport> {
    RankAnalyzer::new(model).rank_report(x, tol)
}

pub fn stratum_signature(model: &VerifiedModel, x: &[f64], tol: f64) -> Result<StratumSignature> {
    RankAnalyzer::new(model).stratum_signature(x, tol)
}

pub fn kernel_span_check(model: &VerifiedModel, x: &[f64], tol: f64) -> Result<KernelSpanVerdict> {
    RankAnalyzer::new(model).kernel_span_check(x, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_model, Params};
    use crate::orbitmap;

    const TOL: f64 = 1e-9;

    /// Brute-force rank oracle: Gaussian elimination with partial pivoting,
    /// independent of the SVD route used by the analyzer.
    fn elimination_rank(m: &DMatrix<f64>, tol: f64) -> usize {
        let mut a = m.clone();
        let (rows, cols) = a.shape();
        let scale = a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if scale == 0.0 {
            return 0;
        }
        let mut rank = 0;
        let mut row = 0;
        for col in 0..cols {
            let mut piv = row;
            for r in row..rows {
                if a[(r, col)].abs() > a[(piv, col)].abs() {
                    piv = r;
                }
            }
            if row >= rows || a[(piv, col)].abs() <= tol * scale {
                continue;
            }
            a.swap_rows(row, piv);
            for r in (row + 1)..rows {
                let f = a[(r, col)] / a[(row, col)];
                for c in col..cols {
                    a[(r, c)] -= f * a[(row, c)];
                }
            }
            rank += 1;
            row += 1;
        }
        rank
    }

    #[test]
    fn so3_r3_reports() {
        let m = catalog_model("so3_r3", &Params::new()).unwrap();
        let an = RankAnalyzer::new(&m);
        let rep = an.rank_report(&[1.0, 0.0, 0.0], TOL).unwrap();
        assert_eq!(rep.rank_drho, 1);
        assert_eq!(rep.rank_orbit_span, 2);
        assert_eq!(rep.rank_induced, 0);
        assert_eq!(rep.signature(), StratumSignature { rank_drho: 1, rank_orbit_span: 2 });
        let origin = an.rank_report(&[0.0; 3], TOL).unwrap();
        assert_eq!(origin.signature(), StratumSignature { rank_drho: 0, rank_orbit_span: 0 });
        // The momentum map of this model is the identity, so dJ keeps rank 3
        // even at the origin; every other rank collapses.
        assert_eq!(origin.rank_dj, 3);
        assert_eq!(origin.rank_invariant_span, 0);
        assert_eq!(origin.rank_induced, 0);
    }

    #[test]
    fn cotangent_generic_and_collinear() {
        let m = catalog_model("so3_cotangent_r6", &Params::new()).unwrap();
        let an = RankAnalyzer::new(&m);
        // Generic point (e1; e2).
        let x = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let rep = an.rank_report(&x, TOL).unwrap();
        assert_eq!(rep.rank_drho, 3);
        assert_eq!(rep.rank_dj, 3);
        assert_eq!(rep.rank_orbit_span, 3);
        assert_eq!(rep.rank_invariant_span, 3);
        assert_eq!(rep.rank_induced, 2);
        assert!(rep.identity_ok);
        // The naive rank equality has defect 1 (one Casimir differential).
        assert_eq!(rep.induced_rank_defect(), 1);
        // Brute-force oracle agrees on both sides of the defect.
        let drho = orbitmap::orbit_jacobian(&m, &x).unwrap();
        assert_eq!(elimination_rank(&drho, 1e-12), 3);
        let w = m.structure.eval_matrix(&x).unwrap();
        let wmat = DMatrix::from_fn(6, 6, |i, j| w[i][j]);
        let induced = &drho * wmat * drho.transpose();
        assert_eq!(elimination_rank(&induced, 1e-12), 2);

        // Collinear pair (e1; 2e1): signature drops to (2,2).
        let col = [1.0, 0.0, 0.0, 2.0, 0.0, 0.0];
        let sig = an.stratum_signature(&col, TOL).unwrap();
        assert_eq!(sig, StratumSignature { rank_drho: 2, rank_orbit_span: 2 });
    }

    #[test]
    fn oscillator_generic_signature() {
        let m = catalog_model("oscillator_r8", &Params::new()).unwrap();
        let an = RankAnalyzer::new(&m);
        let mut counts = std::collections::BTreeMap::new();
        let mut rng = DeterministicRng::new(5, 1);
        for _ in 0..100 {
            let x = rng.normal_vec(8);
            let sig = an.stratum_signature(&x, TOL).unwrap();
            *counts.entry(sig).or_insert(0usize) += 1;
        }
        let modal = counts.iter().max_by_key(|(_, c)| **c).unwrap().0;
        assert_eq!(*modal, StratumSignature { rank_drho: 5, rank_orbit_span: 3 });
    }

    #[test]
    fn rank_identity_and_evenness_randomized() {
        for key in ["so3_r3", "so3_cotangent_r6", "so3_diag_r6", "so3_diag_r9"] {
            let m = catalog_model(key, &Params::new()).unwrap();
            let an = RankAnalyzer::new(&m);
            let mut rng = DeterministicRng::new(17, 2);
            for _ in 0..200 {
                let x = rng.normal_vec(m.dim());
                let rep = an.rank_report(&x, TOL).unwrap();
                assert_eq!(rep.rank_induced % 2, 0, "{key}: odd induced rank");
                assert!(rep.identity_ok, "{key}: rank identity failed at {x:?}");
            }
        }
    }

    #[test]
    fn kernel_span_checks() {
        let m = catalog_model("so3_cotangent_r6", &Params::new()).unwrap();
        let an = RankAnalyzer::new(&m);
        let mut rng = DeterministicRng::new(23, 4);
        for _ in 0..50 {
            let x = rng.normal_vec(6);
            assert_eq!(
                an.kernel_span_check(&x, TOL).unwrap(),
                KernelSpanVerdict::Pass { degenerate: false }
            );
        }
        assert_eq!(
            an.kernel_span_check(&[0.0; 6], TOL).unwrap(),
            KernelSpanVerdict::Pass { degenerate: true }
        );

        // kl_resonance(1,2): rank span = 3 = 4 - 1 at generic points.
        let kl = catalog_model("kl_resonance", &Params::new()).unwrap();
        let ankl = RankAnalyzer::new(&kl);
        let x = [0.3, -0.7, 1.1, 0.4];
        assert_eq!(
            ankl.kernel_span_check(&x, TOL).unwrap(),
            KernelSpanVerdict::Pass { degenerate: false }
        );

        // Degenerate structures are rejected by precondition.
        let r3 = catalog_model("so3_r3", &Params::new()).unwrap();
        assert!(matches!(
            kernel_span_check(&r3, &[1.0, 0.0, 0.0], TOL),
            Err(Error::RequiresCanonicalStructure)
        ));
    }

    #[test]
    fn kernel_span_statement_fails_on_degenerate_structures() {
        // Negative control: on the diagonal R^6 model (degenerate structure)
        // the invariant fields span a single direction while n - rank dJ = 3,
        // so the symplectic proposition genuinely fails there. The public
        // check refuses such structures by precondition.
        let m = catalog_model("so3_diag_r6", &Params::new()).unwrap();
        let an = RankAnalyzer::new(&m);
        let x = [0.3, -1.2, 0.7, 0.9, 0.4, -1.1];
        let rep = an.rank_report(&x, TOL).unwrap();
        assert_eq!(rep.rank_invariant_span, 1);
        assert_eq!(rep.rank_dj, 3);
        assert_ne!(rep.rank_invariant_span, m.dim() - rep.rank_dj);
        assert!(matches!(
            kernel_span_check(&m, &x, TOL),
            Err(Error::RequiresCanonicalStructure)
        ));
    }

    #[test]
    fn principal_stratum_estimates() {
        let m = catalog_model("so3_r3", &Params::new()).unwrap();
        let est = principal_stratum_estimate(&m, 2000, 42, TOL).unwrap();
        assert_eq!(
            est.max_signature,
            Some(StratumSignature { rank_drho: 1, rank_orbit_span: 2 })
        );
        assert!(est.frequency >= 0.999, "frequency {}", est.frequency);
        // Zero samples flag as empty.
        let empty = principal_stratum_estimate(&m, 0, 42, TOL).unwrap();
        assert!(empty.max_signature.is_none());
        assert_eq!(empty.samples, 0);
        // Same seed, same estimate.
        let again = principal_stratum_estimate(&m, 2000, 42, TOL).unwrap();
        assert_eq!(again.frequency, est.frequency);
    }
}
