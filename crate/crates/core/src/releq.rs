//! Relative equilibria and formal stability.
//!
//! Two solver modes: the full-space mode finds constrained critical points
//! `X_H(x) = sum lambda_i X_{J_i}(x)`, `J(x) = mu` by damped Newton over
//! `(x, lambda)`; the reduced mode finds stationary points of the induced
//! Poisson field on a reduced phase space. Formal stability restricts the
//! augmented Hessian `d^2(H - sum lambda_i J_i)` to the kernel of `dJ` with
//! the momentum-generated neutral directions removed, the energy-momentum
//! method.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{Frame, HamiltonianSpec, VerifiedModel};
use crate::orbitmap::{self, InducedStructure};
use crate::poly::{CompiledPoly, Polynomial};
use crate::rng::DeterministicRng;
use crate::semialg::ReducedSpace;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub seeds: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            seeds: 64,
            max_iter: 100,
            tol: 1e-10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    FormallyStable,
    Indefinite,
    Degenerate,
    NotComputed,
}

impl Stability {
    pub fn label(&self) -> &'static str {
        match self {
            Stability::FormallyStable => "formally-stable",
            Stability::Indefinite => "indefinite",
            Stability::Degenerate => "degenerate",
            Stability::NotComputed => "not-computed",
        }
    }
}

/// One relative equilibrium (full-space mode) or reduced stationary point.
#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    /// Phase point (full-space mode) or invariant point (reduced mode).
    pub point: Vec<f64>,
    /// Orbit-space image.
    pub image: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub residual: f64,
    pub stability: Stability,
    pub projected_spectrum: Vec<f64>,
    pub subspace_dim: usize,
    pub iterations: usize,
    pub seed_index: usize,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub results: Vec<EquilibriumResult>,
    pub notes: Vec<String>,
}

// ---------------------------------------------------------------------------
// Reduced field
// ---------------------------------------------------------------------------

/// The reduced Poisson field `X_Htilde = W(v) grad Htilde(v)` in symbolic and
/// compiled form.
pub struct ReducedField {
    pub components: Vec<Polynomial>,
    compiled: Vec<CompiledPoly>,
    pub induced: InducedStructure,
}

impl ReducedField {
    pub fn eval(&self, v: &[f64]) -> Vec<f64> {
        self.compiled.iter().map(|c| c.eval(v)).collect()
    }

    pub fn is_identically_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }
}

/// Symbolic reduced vector field for a Hamiltonian in invariant coordinates.
pub fn reduced_field(
    model: &VerifiedModel,
    h_reduced: &Polynomial,
    degree_bound: u32,
) -> Result<ReducedField> {
    let k = model.num_invariants();
    if h_reduced.arity() != k {
        return Err(Error::ArityMismatch {
            expected: k,
            got: h_reduced.arity(),
        });
    }
    let induced = orbitmap::induced_structure(model, degree_bound)?;
    let grad = h_reduced.gradient();
    let mut components = Vec::with_capacity(k);
    for j in 0..k {
        let mut comp = Polynomial::zero(k);
        for (i, g) in grad.iter().enumerate() {
            if !g.is_zero() && !induced.entries[j][i].is_zero() {
                comp = comp.add(&induced.entries[j][i].mul(g));
            }
        }
        components.push(comp);
    }
    Ok(ReducedField {
        compiled: components.iter().map(Polynomial::compile).collect(),
        components,
        induced,
    })
}

// ---------------------------------------------------------------------------
// Levenberg-damped Newton
// ---------------------------------------------------------------------------

fn norm_inf(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

fn lm_solve<F, J>(
    residual: F,
    jacobian: J,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Option<(Vec<f64>, f64, usize)>
where
    F: Fn(&[f64]) -> DVector<f64>,
    J: Fn(&[f64]) -> DMatrix<f64>,
{
    let mut x = DVector::from_column_slice(x0);
    let mut f = residual(x.as_slice());
    if norm_inf(&f) <= tol {
        return Some((x.as_slice().to_vec(), norm_inf(&f), 0));
    }
    let dim = x.len();
    let mut nu = 1e-3;
    for iter in 1..=max_iter {
        let j = jacobian(x.as_slice());
        let jt = j.transpose();
        let a = &jt * &j;
        let g = &jt * &f;
        let mut stepped = false;
        for _ in 0..25 {
            let reg = &a + DMatrix::identity(dim, dim) * nu;
            let delta = match reg.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => match reg.lu().solve(&(-&g)) {
                    Some(d) => d,
                    None => {
                        nu *= 4.0;
                        continue;
                    }
                },
            };
            let x_try = &x + &delta;
            let f_try = residual(x_try.as_slice());
            if f_try.norm() < f.norm() {
                x = x_try;
                f = f_try;
                nu = (nu / 3.0).max(1e-14);
                stepped = true;
                break;
            }
            nu *= 4.0;
            if nu > 1e15 {
                break;
            }
        }
        if norm_inf(&f) <= tol {
            return Some((x.as_slice().to_vec(), norm_inf(&f), iter));
        }
        if !stepped {
            return None;
        }
    }
    None
}

/// Parallel multistart with index-deterministic merging; `SYMRED_THREADS`
/// caps the worker count and never changes results.
fn run_multistart<T, F>(seeds: usize, work: F) -> Vec<Option<T>>
where
    T: Send,
    F: Fn(usize) -> Option<T> + Sync,
{
    let threads = thread_count(seeds);
    if threads <= 1 {
        return (0..seeds).map(&work).collect();
    }
    let chunk = seeds.div_ceil(threads);
    let mut parts: Vec<(usize, Vec<Option<T>>)> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for t in 0..threads {
            let lo = t * chunk;
            let hi = ((t + 1) * chunk).min(seeds);
            if lo >= hi {
                break;
            }
            let work = &work;
            handles.push(scope.spawn(move || (lo, (lo..hi).map(work).collect::<Vec<_>>())));
        }
        for h in handles {
            parts.push(h.join().expect("multistart worker panicked"));
        }
    });
    parts.sort_by_key(|(lo, _)| *lo);
    parts.into_iter().flat_map(|(_, v)| v).collect()
}

fn thread_count(jobs: usize) -> usize {
    let hw = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let cap = std::env::var("SYMRED_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(hw);
    cap.min(jobs.max(1))
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

// ---------------------------------------------------------------------------
// Reduced-mode solver
// ---------------------------------------------------------------------------

/// Multistart projected Newton on {reduced relations = levels} ∪ {field = 0}.
///
/// Returned points pass membership of the reduced space at `10 tol` and are
/// deduplicated at pairwise distance `10 tol`. A Hamiltonian whose field
/// vanishes identically flags `EverywhereStationary`.
pub fn find_reduced_stationary(
    model: &VerifiedModel,
    h_reduced: &Polynomial,
    reduced: &ReducedSpace,
    opts: &SolverOptions,
) -> Result<SolveOutcome> {
    let field = reduced_field(model, h_reduced, model.degree_bound)?;
    let k = model.num_invariants();
    let set = reduced.set();
    let mut notes = Vec::new();

    let mut equations: Vec<Polynomial> = set.relations.clone();
    let everywhere = field.is_identically_zero();
    if everywhere {
        notes.push("EverywhereStationary: the reduced field vanishes identically".into());
    } else {
        equations.extend(field.components.iter().cloned());
    }
    let compiled_eqs: Vec<CompiledPoly> = equations.iter().map(Polynomial::compile).collect();
    let compiled_jac: Vec<Vec<CompiledPoly>> = equations
        .iter()
        .map(|e| e.gradient().iter().map(Polynomial::compile).collect())
        .collect();

    let level_scale = reduced
        .momentum_constraints
        .iter()
        .map(|(_, l)| crate::poisson::rational_to_f64(l).abs())
        .fold(0.0_f64, f64::max);
    let spread = (1.0 + level_scale).sqrt();

    let residual = |v: &[f64]| DVector::from_iterator(compiled_eqs.len(), compiled_eqs.iter().map(|e| e.eval(v)));
    let jacobian = |v: &[f64]| {
        DMatrix::from_fn(compiled_jac.len(), k, |i, j| compiled_jac[i][j].eval(v))
    };

    let raw = run_multistart(opts.seeds, |idx| {
        let mut rng = DeterministicRng::at(opts.seed, 0xEA, (idx * 2 * k) as u64);
        let v0: Vec<f64> = (0..k).map(|_| spread * rng.normal()).collect();
        lm_solve(&residual, &jacobian, &v0, opts.tol, opts.max_iter)
            .map(|(v, res, iters)| (idx, v, res, iters))
    });

    let mut results: Vec<EquilibriumResult> = Vec::new();
    let mut converged = 0usize;
    for item in raw.into_iter().flatten() {
        let (seed_index, v, residual_val, iterations) = item;
        let membership = set.membership(&v, 10.0 * opts.tol)?;
        if !membership.in_set {
            continue;
        }
        converged += 1;
        let scale = 1.0 + v.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        let duplicate = results
            .iter()
            .any(|r| {
                r.point
                    .iter()
                    .zip(&v)
                    .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()))
                    <= 10.0 * opts.tol * scale
            });
        if duplicate {
            continue;
        }
        results.push(EquilibriumResult {
            image: v.clone(),
            point: v,
            multipliers: Vec::new(),
            residual: residual_val,
            stability: Stability::NotComputed,
            projected_spectrum: Vec::new(),
            subspace_dim: 0,
            iterations,
            seed_index,
        });
    }
    if converged == 0 {
        notes.push("NonConvergence: no seed reached the tolerance".into());
    }
    results.sort_by(|a, b| lex_cmp(&a.point, &b.point));
    Ok(SolveOutcome { results, notes })
}

// ---------------------------------------------------------------------------
// Full-space solver
// ---------------------------------------------------------------------------

struct FullSpaceSystem {
    n: usize,
    r: usize,
    field_h: Vec<CompiledPoly>,
    field_j: Vec<Vec<CompiledPoly>>,
    dfield_h: Vec<Vec<CompiledPoly>>,
    dfield_j: Vec<Vec<Vec<CompiledPoly>>>,
    j_vals: Vec<CompiledPoly>,
    dj: Vec<Vec<CompiledPoly>>,
    mu: Vec<f64>,
}

impl FullSpaceSystem {
    fn build(model: &VerifiedModel, h: &Polynomial, mu: &[f64]) -> Result<Self> {
        let n = model.dim();
        let r = model.num_generators();
        let xh = model.structure.hamiltonian_field(h)?;
        let compile_field = |f: &[Polynomial]| -> Vec<CompiledPoly> {
            f.iter().map(Polynomial::compile).collect()
        };
        let jacobian_polys = |f: &[Polynomial]| -> Vec<Vec<CompiledPoly>> {
            f.iter()
                .map(|c| c.gradient().iter().map(Polynomial::compile).collect())
                .collect()
        };
        let mut field_j = Vec::with_capacity(r);
        let mut dfield_j = Vec::with_capacity(r);
        for gen in &model.generators {
            let xj = model.structure.hamiltonian_field(&gen.poly)?;
            field_j.push(compile_field(&xj));
            dfield_j.push(jacobian_polys(&xj));
        }
        Ok(FullSpaceSystem {
            n,
            r,
            dfield_h: jacobian_polys(&xh),
            field_h: compile_field(&xh),
            field_j,
            dfield_j,
            j_vals: model
                .generators
                .iter()
                .map(|g| g.poly.compile())
                .collect(),
            dj: model
                .generators
                .iter()
                .map(|g| g.poly.gradient().iter().map(Polynomial::compile).collect())
                .collect(),
            mu: mu.to_vec(),
        })
    }

    /// Residual of X_H - sum lambda_i X_Ji and J - mu at u = (x, lambda).
    fn residual(&self, u: &[f64]) -> DVector<f64> {
        let (x, lambda) = u.split_at(self.n);
        let mut out = DVector::zeros(self.n + self.r);
        for a in 0..self.n {
            let mut v = self.field_h[a].eval(x);
            for (i, l) in lambda.iter().enumerate() {
                v -= l * self.field_j[i][a].eval(x);
            }
            out[a] = v;
        }
        for i in 0..self.r {
            out[self.n + i] = self.j_vals[i].eval(x) - self.mu[i];
        }
        out
    }

    fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        let (x, lambda) = u.split_at(self.n);
        let mut out = DMatrix::zeros(self.n + self.r, self.n + self.r);
        for a in 0..self.n {
            for b in 0..self.n {
                let mut v = self.dfield_h[a][b].eval(x);
                for (i, l) in lambda.iter().enumerate() {
                    v -= l * self.dfield_j[i][a][b].eval(x);
                }
                out[(a, b)] = v;
            }
            for i in 0..self.r {
                out[(a, self.n + i)] = -self.field_j[i][a].eval(x);
            }
        }
        for i in 0..self.r {
            for b in 0..self.n {
                out[(self.n + i, b)] = self.dj[i][b].eval(x);
            }
        }
        out
    }
}

/// Solve `X_H(x) = sum lambda_i X_{J_i}(x)`, `J(x) = mu` by damped Newton from
/// random seeds; results are deduplicated by orbit-space image, since points
/// on one group orbit are the same relative equilibrium.
pub fn find_relative_equilibria(
    model: &VerifiedModel,
    hamiltonian: &HamiltonianSpec,
    mu: &[f64],
    opts: &SolverOptions,
) -> Result<SolveOutcome> {
    if hamiltonian.frame != Frame::FullSpace {
        return Err(Error::InvalidParams(
            "full-space Hamiltonian required; use the reduced solver for invariant frames".into(),
        ));
    }
    if !model.structure.is_canonical() {
        return Err(Error::RequiresCanonicalStructure);
    }
    let r = model.num_generators();
    if mu.len() != r {
        return Err(Error::ArityMismatch {
            expected: r,
            got: mu.len(),
        });
    }
    let n = model.dim();
    let system = FullSpaceSystem::build(model, &hamiltonian.expression, mu)?;
    let rho: Vec<CompiledPoly> = model.invariants.iter().map(|g| g.poly.compile()).collect();
    let mu_scale = mu.iter().fold(0.0_f64, |a, m| a.max(m.abs()));
    let spread = (1.0 + mu_scale).sqrt();

    let raw = run_multistart(opts.seeds, |idx| {
        let mut rng = DeterministicRng::at(opts.seed, 0xF0, (idx * 2 * (n + r)) as u64);
        let mut u0: Vec<f64> = (0..n).map(|_| spread * rng.normal()).collect();
        u0.extend((0..r).map(|_| rng.normal()));
        lm_solve(
            |u| system.residual(u),
            |u| system.jacobian(u),
            &u0,
            opts.tol,
            opts.max_iter,
        )
        .map(|(u, res, iters)| (idx, u, res, iters))
    });

    let mut results: Vec<EquilibriumResult> = Vec::new();
    let mut notes = Vec::new();
    let mut converged = 0usize;
    for item in raw.into_iter().flatten() {
        let (seed_index, u, residual_val, iterations) = item;
        converged += 1;
        let (x, lambda) = u.split_at(n);
        let image: Vec<f64> = rho.iter().map(|p| p.eval(x)).collect();
        let scale = 1.0 + image.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        let duplicate = results.iter().any(|res| {
            res.image
                .iter()
                .zip(&image)
                .fold(0.0_f64, |a, (p, q)| a.max((p - q).abs()))
                <= 10.0 * opts.tol * scale
        });
        if duplicate {
            continue;
        }
        results.push(EquilibriumResult {
            point: x.to_vec(),
            image,
            multipliers: lambda.to_vec(),
            residual: residual_val,
            stability: Stability::NotComputed,
            projected_spectrum: Vec::new(),
            subspace_dim: 0,
            iterations,
            seed_index,
        });
    }
    if converged == 0 {
        notes.push(
            "NonConvergence: no seed converged; mu may lie outside the momentum image".into(),
        );
    }
    results.sort_by(|a, b| lex_cmp(&a.image, &b.image));
    Ok(SolveOutcome { results, notes })
}

// ---------------------------------------------------------------------------
// Formal stability (energy-momentum method)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct StabilityAssessment {
    pub stability: Stability,
    pub projected_spectrum: Vec<f64>,
    pub subspace_dim: usize,
    pub neutral_dim: usize,
    pub kernel_dim: usize,
    /// False when the momentum fields are rank-deficient at the point, so the
    /// multipliers (and with them the augmented Hessian) carry gauge freedom.
    pub multipliers_determined: bool,
}

fn hessian_at(p: &Polynomial, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = p.arity();
    let grad = p.gradient();
    let mut h = DMatrix::zeros(n, n);
    for (i, g) in grad.iter().enumerate() {
        for j in i..n {
            let v = g.diff(j)?.eval_f64(x)?;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}

fn spectrum_verdict(eigs: &[f64], tol: f64) -> Stability {
    let emax = eigs.iter().fold(0.0_f64, |a, e| a.max(e.abs()));
    if emax == 0.0 {
        return Stability::Degenerate;
    }
    if eigs.iter().any(|e| e.abs() <= tol * emax) {
        return Stability::Degenerate;
    }
    let positive = eigs.iter().filter(|e| **e > 0.0).count();
    if positive == 0 || positive == eigs.len() {
        Stability::FormallyStable
    } else {
        Stability::Indefinite
    }
}

/// Energy-momentum verdict at an accepted equilibrium `(x, lambda)`.
///
/// The augmented Hessian `d^2(H - sum lambda_i J_i)(x)` is restricted to the
/// complement, inside `ker dJ(x)`, of the neutral directions
/// `span{X_{J_i}(x)} ∩ ker dJ(x)`; the verdict is read off the projected
/// spectrum. Collapsed subspaces report `Degenerate` rather than guessing.
pub fn formal_stability(
    model: &VerifiedModel,
    hamiltonian: &HamiltonianSpec,
    x: &[f64],
    lambda: &[f64],
    tol: f64,
) -> Result<StabilityAssessment> {
    if hamiltonian.frame != Frame::FullSpace {
        return Err(Error::InvalidParams(
            "full-space Hamiltonian required".into(),
        ));
    }
    let n = model.dim();
    let r = model.num_generators();
    if x.len() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if lambda.len() != r {
        return Err(Error::ArityMismatch {
            expected: r,
            got: lambda.len(),
        });
    }
    // Augmented Hessian d^2 H_lambda, assembled numerically.
    let mut hess = hessian_at(&hamiltonian.expression, x)?;
    for (i, gen) in model.generators.iter().enumerate() {
        hess -= hessian_at(&gen.poly, x)? * lambda[i];
    }

    let mut dj = DMatrix::zeros(r, n);
    let mut xj = DMatrix::zeros(n, r);
    let w = model.structure.eval_matrix(x)?;
    for (i, gen) in model.generators.iter().enumerate() {
        for (b, g) in gen.poly.gradient().iter().enumerate() {
            dj[(i, b)] = g.eval_f64(x)?;
        }
        for a in 0..n {
            let mut v = 0.0;
            for b in 0..n {
                v += w[a][b] * dj[(i, b)];
            }
            xj[(a, i)] = v;
        }
    }

    let rank_tol = linalg::DEFAULT_RANK_TOL;
    let kernel = linalg::null_space(&dj, rank_tol);
    let kernel_dim = kernel.len();
    let kernel_m = linalg::matrix_from_columns(n, &kernel);
    let neutral = linalg::intersection_basis(&xj, &kernel_m, rank_tol);
    let neutral_dim = neutral.len();
    let subspace = linalg::complement_within(&kernel, &neutral, rank_tol);
    let subspace_dim = subspace.len();

    // Rank-deficient momentum fields leave some multiplier undetermined by
    // the equilibrium equation, making the augmented Hessian gauge-dependent;
    // report Degenerate with diagnostics instead of a gauge-arbitrary verdict.
    // The cutoff combines the relative threshold with an absolute floor: a
    // solver residual of 1e-10 lets accepted points drift ~1e-5 around an
    // exactly degenerate configuration, so fields below 1e-4 of the point
    // scale cannot pin the multipliers down.
    let multipliers_determined = if r == 0 {
        true
    } else {
        let sv = xj.clone().singular_values();
        let smax = sv.iter().cloned().fold(0.0_f64, f64::max);
        let x_scale = 1.0 + x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let cutoff = (rank_tol * smax).max(1e-4 * x_scale);
        sv.iter().filter(|s| **s > cutoff).count() == r
    };
    if subspace_dim == 0 || !multipliers_determined {
        return Ok(StabilityAssessment {
            stability: Stability::Degenerate,
            projected_spectrum: Vec::new(),
            subspace_dim,
            neutral_dim,
            kernel_dim,
            multipliers_determined,
        });
    }
    let mut projected = DMatrix::zeros(subspace_dim, subspace_dim);
    for (i, si) in subspace.iter().enumerate() {
        let hsi = &hess * si;
        for (j, sj) in subspace.iter().enumerate() {
            projected[(i, j)] = sj.dot(&hsi);
        }
    }
    // Symmetrise against rounding before the eigensolve.
    let projected = (&projected + projected.transpose()) * 0.5;
    let mut eigs: Vec<f64> = projected.symmetric_eigen().eigenvalues.iter().cloned().collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(StabilityAssessment {
        stability: spectrum_verdict(&eigs, tol),
        projected_spectrum: eigs,
        subspace_dim,
        neutral_dim,
        kernel_dim,
        multipliers_determined,
    })
}

/// Fill the stability fields of a solver result in place.
pub fn assess_stability(
    model: &VerifiedModel,
    hamiltonian: &HamiltonianSpec,
    result: &mut EquilibriumResult,
    tol: f64,
) -> Result<()> {
    let assessment = formal_stability(model, hamiltonian, &result.point, &result.multipliers, tol)?;
    result.stability = assessment.stability;
    result.projected_spectrum = assessment.projected_spectrum;
    result.subspace_dim = assessment.subspace_dim;
    Ok(())
}
