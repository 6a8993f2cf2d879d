//! Orbit map evaluation, rewriting into the Hilbert basis, and the induced
//! Poisson structure on the orbit space.
//!
//! Rewriting is a dense exact linear solve: unknowns are coefficients of
//! monomials in the invariants up to a total-degree bound, equations match
//! coefficients after pullback expansion. When all invariants are homogeneous
//! the search is restricted per homogeneous component to monomials of the
//! matching weighted degree, which keeps the systems small.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::{SymmetryModel, VerifiedModel};
use crate::poly::{Monomial, Polynomial};

/// Result of a rewrite attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum Rewrite {
    /// A polynomial in the invariant names whose pullback equals the input exactly.
    Expressed(Polynomial),
    /// No representation exists within the degree bound.
    NotExpressible,
}

/// The induced structure matrix `W_ij = {rho_i, rho_j}` written in the invariants.
#[derive(Debug, Clone)]
pub struct InducedStructure {
    pub invariant_names: Vec<String>,
    pub degree_bound: u32,
    /// `k x k`, antisymmetric, entries of arity `k`.
    pub entries: Vec<Vec<Polynomial>>,
}

impl InducedStructure {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|p| p.is_zero())
    }

    /// Evaluate the matrix at an orbit-space point.
    pub fn eval(&self, v: &[f64]) -> Result<Vec<Vec<f64>>> {
        let k = self.dim();
        let mut out = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..k {
                out[i][j] = self.entries[i][j].eval_f64(v)?;
            }
        }
        Ok(out)
    }
}

/// Evaluate the orbit map at a floating phase point.
pub fn orbit_eval(model: &SymmetryModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.dim() {
        return Err(Error::ArityMismatch {
            expected: model.dim(),
            got: x.len(),
        });
    }
    model.invariants.iter().map(|g| g.poly.eval_f64(x)).collect()
}

/// Exact orbit-map evaluation at a rational point.
pub fn orbit_eval_exact(model: &SymmetryModel, x: &[BigRational]) -> Result<Vec<BigRational>> {
    if x.len() != model.dim() {
        return Err(Error::ArityMismatch {
            expected: model.dim(),
            got: x.len(),
        });
    }
    model.invariants.iter().map(|g| g.poly.eval_exact(x)).collect()
}

/// Jacobian of the orbit map: rows are `grad rho_i (x)`.
pub fn orbit_jacobian(model: &SymmetryModel, x: &[f64]) -> Result<DMatrix<f64>> {
    if x.len() != model.dim() {
        return Err(Error::ArityMismatch {
            expected: model.dim(),
            got: x.len(),
        });
    }
    let k = model.num_invariants();
    let n = model.dim();
    let mut m = DMatrix::zeros(k, n);
    for (i, inv) in model.invariants.iter().enumerate() {
        for (j, d) in inv.poly.gradient().iter().enumerate() {
            m[(i, j)] = d.eval_f64(x)?;
        }
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// Exact linear algebra over the monomial support
// ---------------------------------------------------------------------------

/// Reduced row echelon solve of `A c = b` with columns considered left to
/// right and free variables set to zero. Returns `None` when inconsistent.
fn rref_solve(columns: &[BTreeMap<Monomial, BigRational>], rhs: &Polynomial) -> Option<Vec<BigRational>> {
    let mut row_index: BTreeMap<Monomial, usize> = BTreeMap::new();
    for col in columns {
        for m in col.keys() {
            let next = row_index.len();
            row_index.entry(m.clone()).or_insert(next);
        }
    }
    for (m, _) in rhs.terms() {
        let next = row_index.len();
        row_index.entry(m.clone()).or_insert(next);
    }
    let nrows = row_index.len();
    let ncols = columns.len();
    let mut a = vec![vec![BigRational::zero(); ncols + 1]; nrows];
    for (j, col) in columns.iter().enumerate() {
        for (m, c) in col {
            a[row_index[m]][j] = c.clone();
        }
    }
    for (m, c) in rhs.terms() {
        a[row_index[m]][ncols] = c.clone();
    }

    let mut pivot_of_col: Vec<Option<usize>> = vec![None; ncols];
    let mut next_row = 0usize;
    for col in 0..ncols {
        let Some(pr) = (next_row..nrows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(next_row, pr);
        let inv = a[next_row][col].recip();
        for v in a[next_row].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        for r in 0..nrows {
            if r != next_row && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=ncols {
                    let delta = &a[next_row][c] * &f;
                    if !delta.is_zero() {
                        a[r][c] -= delta;
                    }
                }
            }
        }
        pivot_of_col[col] = Some(next_row);
        next_row += 1;
    }
    // Inconsistent iff some pivot-free row still has a nonzero right-hand side.
    for r in next_row..nrows {
        if !a[r][ncols].is_zero() {
            return None;
        }
    }
    let mut solution = vec![BigRational::zero(); ncols];
    for (col, pivot) in pivot_of_col.iter().enumerate() {
        if let Some(r) = pivot {
            solution[col] = a[*r][ncols].clone();
        }
    }
    Some(solution)
}

/// Solve `target = sum_i c_i basis_i` exactly over the rationals.
pub(crate) fn solve_in_span(basis: &[Polynomial], target: &Polynomial) -> Option<Vec<BigRational>> {
    let columns: Vec<BTreeMap<Monomial, BigRational>> = basis
        .iter()
        .map(|p| p.terms().map(|(m, c)| (m.clone(), c.clone())).collect())
        .collect();
    rref_solve(&columns, target)
}

// ---------------------------------------------------------------------------
// Rewriting into the invariants
// ---------------------------------------------------------------------------

/// Multi-indices `alpha` with `sum alpha_i <= bound`, optionally constrained to
/// a weighted degree, in ascending graded-lexicographic order.
fn candidate_monomials(k: usize, bound: u32, weights: Option<(&[u32], u32)>) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; k];
    fn recurse(
        out: &mut Vec<Vec<u32>>,
        current: &mut Vec<u32>,
        pos: usize,
        left: u32,
        weights: Option<(&[u32], u32)>,
        wsum: u32,
    ) {
        if pos == current.len() {
            match weights {
                Some((_, target)) if wsum != target => {}
                _ => out.push(current.clone()),
            }
            return;
        }
        for e in 0..=left {
            current[pos] = e;
            let w = weights.map(|(ws, _)| ws[pos] * e).unwrap_or(0);
            if let Some((_, target)) = weights {
                if wsum + w > target {
                    current[pos] = 0;
                    break;
                }
            }
            recurse(out, current, pos + 1, left - e, weights, wsum + w);
        }
        current[pos] = 0;
    }
    recurse(&mut out, &mut current, 0, bound, weights, 0);
    out.sort_by(|a, b| {
        let da: u32 = a.iter().sum();
        let db: u32 = b.iter().sum();
        da.cmp(&db).then_with(|| a.cmp(b))
    });
    out
}

struct PullbackCache {
    rho: Vec<Polynomial>,
    powers: Vec<Vec<Polynomial>>,
}

impl PullbackCache {
    fn new(model: &SymmetryModel) -> Self {
        PullbackCache {
            rho: model.invariant_polys(),
            powers: model
                .invariants
                .iter()
                .map(|g| vec![Polynomial::one(model.dim()), g.poly.clone()])
                .collect(),
        }
    }

    fn power(&mut self, i: usize, e: u32) -> Polynomial {
        while self.powers[i].len() <= e as usize {
            let last = self.powers[i].last().unwrap().clone();
            self.powers[i].push(last.mul(&self.rho[i]));
        }
        self.powers[i][e as usize].clone()
    }

    fn pullback_monomial(&mut self, alpha: &[u32]) -> Polynomial {
        let n = self.rho[0].arity();
        let mut acc = Polynomial::one(n);
        for (i, &e) in alpha.iter().enumerate() {
            if e > 0 {
                acc = acc.mul(&self.power(i, e));
            }
        }
        acc
    }
}

fn solve_component(
    model: &SymmetryModel,
    cache: &mut PullbackCache,
    p: &Polynomial,
    bound: u32,
    weights: Option<(&[u32], u32)>,
) -> Option<Polynomial> {
    let k = model.num_invariants();
    let alphas = candidate_monomials(k, bound, weights);
    if alphas.is_empty() {
        return if p.is_zero() {
            Some(Polynomial::zero(k))
        } else {
            None
        };
    }
    let columns: Vec<BTreeMap<Monomial, BigRational>> = alphas
        .iter()
        .map(|alpha| {
            cache
                .pullback_monomial(alpha)
                .terms()
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect()
        })
        .collect();
    let coeffs = rref_solve(&columns, p)?;
    let mut q = Polynomial::zero(k);
    for (alpha, c) in alphas.iter().zip(coeffs) {
        if !c.is_zero() {
            q = q.add(&Polynomial::monomial(k, alpha, c));
        }
    }
    Some(q)
}

pub(crate) fn express_unchecked(
    model: &SymmetryModel,
    p: &Polynomial,
    bound: u32,
) -> Result<Rewrite> {
    if p.arity() != model.dim() {
        return Err(Error::ArityMismatch {
            expected: model.dim(),
            got: p.arity(),
        });
    }
    let k = model.num_invariants();
    if p.is_zero() {
        return Ok(Rewrite::Expressed(Polynomial::zero(k)));
    }
    let mut cache = PullbackCache::new(model);
    let degrees: Option<Vec<u32>> = model
        .invariants
        .iter()
        .map(|g| {
            if g.poly.is_homogeneous() {
                g.poly.degree()
            } else {
                None
            }
        })
        .collect();
    match degrees {
        Some(ws) if ws.iter().all(|&d| d > 0) => {
            // Homogeneous basis: solve per homogeneous component of the input,
            // restricting candidates to the matching weighted degree.
            let mut total = Polynomial::zero(k);
            for (deg, comp) in p.homogeneous_components() {
                match solve_component(model, &mut cache, &comp, bound, Some((&ws, deg))) {
                    Some(q) => total = total.add(&q),
                    None => return Ok(Rewrite::NotExpressible),
                }
            }
            Ok(Rewrite::Expressed(total))
        }
        _ => match solve_component(model, &mut cache, p, bound, None) {
            Some(q) => Ok(Rewrite::Expressed(q)),
            None => Ok(Rewrite::NotExpressible),
        },
    }
}

/// Rewrite `p` as a polynomial in the invariants, searching total degree
/// `<= degree_bound`; exact pullback equality is guaranteed for any returned
/// representative. When relations exist, the answer is one deterministic
/// representative modulo the relation ideal (lowest graded-lexicographic
/// support, free coefficients zero).
pub fn express_in_invariants(
    model: &VerifiedModel,
    p: &Polynomial,
    degree_bound: u32,
) -> Result<Rewrite> {
    express_unchecked(model, p, degree_bound)
}

pub(crate) fn induced_structure_unchecked(
    model: &SymmetryModel,
    degree_bound: u32,
) -> Result<InducedStructure> {
    let k = model.num_invariants();
    let rho = model.invariant_polys();
    let mut entries = vec![vec![Polynomial::zero(k); k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let b = model
                .structure
                .bracket(&model.invariants[i].poly, &model.invariants[j].poly)?;
            let entry = match express_unchecked(model, &b, degree_bound)? {
                Rewrite::Expressed(q) => q,
                Rewrite::NotExpressible => {
                    return Err(Error::RewriteBoundExceeded {
                        what: format!(
                            "{{{}, {}}}",
                            model.invariants[i].name, model.invariants[j].name
                        ),
                        bound: degree_bound,
                    });
                }
            };
            // Pullback fidelity is the defining contract of the induced
            // structure: check it entry by entry.
            let pulled = entry.substitute(&rho)?;
            assert!(
                pulled.sub(&b).is_zero(),
                "pullback fidelity violated at entry ({i},{j})"
            );
            entries[j][i] = entry.neg();
            entries[i][j] = entry;
        }
    }
    Ok(InducedStructure {
        invariant_names: model.invariant_names().iter().map(|s| s.to_string()).collect(),
        degree_bound,
        entries,
    })
}

/// Induced structure matrix on the orbit space: `entries[i][j]` rewrites
/// `{rho_i, rho_j}` in the invariants.
pub fn induced_structure(model: &VerifiedModel, degree_bound: u32) -> Result<InducedStructure> {
    induced_structure_unchecked(model, degree_bound)
}

/// Check a Casimir candidate against a precomputed induced structure.
///
/// Returns `Ok(None)` on PASS, `Ok(Some(name))` with the first invariant whose
/// induced bracket with the candidate has a nonzero pullback.
pub(crate) fn casimir_check_with(
    model: &SymmetryModel,
    induced: &InducedStructure,
    candidate: &Polynomial,
) -> Result<Option<String>> {
    let k = model.num_invariants();
    if candidate.arity() != k {
        return Err(Error::ArityMismatch {
            expected: k,
            got: candidate.arity(),
        });
    }
    let rho = model.invariant_polys();
    let grad = candidate.gradient();
    for j in 0..k {
        // {candidate, v_j} = sum_i d(candidate)/dv_i * W_ij, pulled back.
        let mut bracket = Polynomial::zero(k);
        for (i, gi) in grad.iter().enumerate() {
            if !gi.is_zero() && !induced.entries[i][j].is_zero() {
                bracket = bracket.add(&gi.mul(&induced.entries[i][j]));
            }
        }
        if !bracket.substitute(&rho)?.is_zero() {
            return Ok(Some(model.invariants[j].name.clone()));
        }
    }
    Ok(None)
}

/// PASS iff the induced bracket of `candidate` with every invariant
/// coordinate pulls back to the exact zero polynomial.
pub fn casimir_check(
    model: &VerifiedModel,
    candidate: &Polynomial,
    degree_bound: u32,
) -> Result<Option<String>> {
    let induced = induced_structure(model, degree_bound)?;
    casimir_check_with(model, &induced, candidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::load_model;

    fn cotangent_model() -> VerifiedModel {
        crate::catalog::catalog_model("so3_cotangent_r6", &Default::default()).unwrap()
    }

    #[test]
    fn candidate_order_is_graded_lex() {
        let cands = candidate_monomials(2, 2, None);
        assert_eq!(
            cands,
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![1, 0],
                vec![0, 2],
                vec![1, 1],
                vec![2, 0]
            ]
        );
    }

    #[test]
    fn express_constant_and_noninvariant() {
        let model = crate::catalog::catalog_model("so3_r3", &Default::default()).unwrap();
        let one = Polynomial::one(3);
        match express_in_invariants(&model, &one, 2).unwrap() {
            Rewrite::Expressed(q) => assert_eq!(q, Polynomial::one(1)),
            _ => panic!("constants are invariant"),
        }
        let x1 = Polynomial::var(3, 0);
        assert_eq!(
            express_in_invariants(&model, &x1, 5).unwrap(),
            Rewrite::NotExpressible
        );
    }

    #[test]
    fn express_cross_norm_in_lagrange_model() {
        let model = cotangent_model();
        let names = model.variable_names();
        let cross = Polynomial::parse(
            "(x2*y3-x3*y2)^2 + (x3*y1-x1*y3)^2 + (x1*y2-x2*y1)^2",
            &names,
        )
        .unwrap();
        match express_in_invariants(&model, &cross, 2).unwrap() {
            Rewrite::Expressed(q) => {
                // Exact pullback equality, and the deterministic representative
                // is the basis invariant itself.
                let pulled = q.substitute(&model.invariant_polys()).unwrap();
                assert!(pulled.sub(&cross).is_zero());
                let inv_names = model.invariant_names();
                assert_eq!(q.display(&inv_names), "d");
            }
            _ => panic!("cross norm must be expressible at bound 2"),
        }
    }

    #[test]
    fn express_needs_high_enough_bound() {
        let model = cotangent_model();
        let names = model.variable_names();
        let nx = Polynomial::parse("x1^2+x2^2+x3^2", &names).unwrap();
        let cube = nx.pow(3);
        assert_eq!(
            express_in_invariants(&model, &cube, 1).unwrap(),
            Rewrite::NotExpressible
        );
        match express_in_invariants(&model, &cube, 3).unwrap() {
            Rewrite::Expressed(q) => {
                assert!(q.substitute(&model.invariant_polys()).unwrap().sub(&cube).is_zero())
            }
            _ => panic!("a^3 expressible at bound 3"),
        }
    }

    #[test]
    fn induced_structure_so3_r3_is_zero() {
        let model = crate::catalog::catalog_model("so3_r3", &Default::default()).unwrap();
        let s = induced_structure(&model, 2).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.is_zero());
    }

    #[test]
    fn induced_structure_matches_hand_computation_on_r6() {
        let model = cotangent_model();
        let s = induced_structure(&model, 2).unwrap();
        let names = model.invariant_names();
        // Order (a,b,c,d): {a,b} = 4c, {a,c} = 2a, {b,c} = -2b, d commutes.
        assert_eq!(s.entries[0][1].display(&names), "4*c");
        assert_eq!(s.entries[0][2].display(&names), "2*a");
        assert_eq!(s.entries[1][2].display(&names), "-2*b");
        for i in 0..4 {
            assert!(s.entries[i][3].is_zero());
            assert!(s.entries[3][i].is_zero());
        }
    }

    #[test]
    fn casimir_checks_on_r6() {
        let model = cotangent_model();
        let names = model.invariant_names();
        let d = Polynomial::parse("d", &names).unwrap();
        assert_eq!(casimir_check(&model, &d, 2).unwrap(), None);
        let alt = Polynomial::parse("a*b - c^2", &names).unwrap();
        assert_eq!(casimir_check(&model, &alt, 2).unwrap(), None);
        // a is not a Casimir: {a, b} = 4c.
        let a = Polynomial::parse("a", &names).unwrap();
        assert!(casimir_check(&model, &a, 2).unwrap().is_some());
    }

    #[test]
    fn orbit_eval_and_jacobian() {
        let model = crate::catalog::catalog_model("so3_r3", &Default::default()).unwrap();
        assert_eq!(orbit_eval(&model, &[3.0, 0.0, 4.0]).unwrap(), vec![25.0]);
        let j = orbit_jacobian(&model, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(j.as_slice(), &[2.0, 0.0, 0.0]);
        let j0 = orbit_jacobian(&model, &[0.0, 0.0, 0.0]).unwrap();
        assert!(j0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn induced_structure_reports_bound_exceeded() {
        // {N, S} on the oscillator needs degree-3 invariant monomials.
        let m = crate::catalog::catalog_model("oscillator_r8", &Default::default()).unwrap();
        match induced_structure(&m, 1) {
            Err(crate::error::Error::RewriteBoundExceeded { bound: 1, .. }) => {}
            other => panic!("expected RewriteBoundExceeded, got {other:?}"),
        }
        assert!(induced_structure(&m, 3).is_ok());
    }

    #[test]
    fn induced_entries_match_brackets_in_floating_point() {
        // Float cross-check of the exact pullback identity: evaluating the
        // entry at rho(x) equals evaluating {rho_i, rho_j} at x to 1e-12
        // relative.
        use crate::rng::DeterministicRng;
        for key in ["so3_cotangent_r6", "so3_diag_r9"] {
            let m = crate::catalog::catalog_model(key, &Default::default()).unwrap();
            let s = induced_structure(&m, 2).unwrap();
            let k = m.num_invariants();
            let mut rng = DeterministicRng::new(88, 0);
            for _ in 0..50 {
                let x = rng.normal_vec(m.dim());
                let image = orbit_eval(&m, &x).unwrap();
                for i in 0..k {
                    for j in 0..k {
                        let via_entry = s.entries[i][j].eval_f64(&image).unwrap();
                        let via_bracket = m
                            .structure
                            .bracket(&m.invariants[i].poly, &m.invariants[j].poly)
                            .unwrap()
                            .eval_f64(&x)
                            .unwrap();
                        let scale = 1.0_f64.max(via_bracket.abs()).max(via_entry.abs());
                        assert!(
                            (via_entry - via_bracket).abs() <= 1e-12 * scale,
                            "{key} ({i},{j}): {via_entry} vs {via_bracket}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn orbit_eval_catalog_examples() {
        // Direct evaluation oracle at (e1; e2) and homogeneous collapse at 0.
        let m = crate::catalog::catalog_model("so3_cotangent_r6", &Default::default()).unwrap();
        let image = orbit_eval(&m, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(image, vec![1.0, 1.0, 0.0, 1.0]);
        for key in ["so3_r3", "so3_cotangent_r6", "so3_diag_r9", "oscillator_r8"] {
            let m = crate::catalog::catalog_model(key, &Default::default()).unwrap();
            let origin = vec![0.0; m.dim()];
            assert!(orbit_eval(&m, &origin).unwrap().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn identity_model_rewrite_is_trivial() {
        // A model in invariant coordinates rewrites any polynomial to itself.
        let doc = r#"{
            "name": "idmodel",
            "variables": ["u", "v"],
            "structure": {"type": "matrix", "entries": [["0", "1"], ["-1", "0"]]},
            "generators": [],
            "invariants": [{"name": "u", "expr": "u"}, {"name": "v", "expr": "v"}],
            "degree_bound": 4
        }"#;
        let model = crate::model::VerifiedModel::new(load_model(doc).unwrap()).unwrap();
        let p = Polynomial::parse("u^2*v - 3*v", &["u", "v"]).unwrap();
        match express_in_invariants(&model, &p, 4).unwrap() {
            Rewrite::Expressed(q) => assert_eq!(q, p),
            _ => panic!(),
        }
    }
}
