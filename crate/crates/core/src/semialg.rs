//! Semi-algebraic orbit spaces and reduced phase spaces.
//!
//! A set is one basic semi-algebraic piece: relations (= 0) and inequalities
//! (>= 0) in the invariant coordinates. A reduced phase space is the orbit
//! space cut by momentum constraints at fixed levels. Surfaces are sampled by
//! root-finding along one chart axis over a rectangular grid.

use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_RANK_TOL};
use crate::model::VerifiedModel;
use crate::orbitmap::{self, Rewrite};
use crate::poly::Polynomial;
use crate::rng::DeterministicRng;

/// One basic semi-algebraic set in `R^k`.
#[derive(Debug, Clone)]
pub struct SemiAlgebraicSet {
    pub ambient_dim: usize,
    pub relations: Vec<Polynomial>,
    pub inequalities: Vec<Polynomial>,
    /// Maximal rank of the relation Jacobian over nonsingular points, when known.
    pub maximal_rank: Option<usize>,
}

impl SemiAlgebraicSet {
    pub fn new(
        ambient_dim: usize,
        relations: Vec<Polynomial>,
        inequalities: Vec<Polynomial>,
    ) -> Result<Self> {
        for p in relations.iter().chain(&inequalities) {
            if p.arity() != ambient_dim {
                return Err(Error::ArityMismatch {
                    expected: ambient_dim,
                    got: p.arity(),
                });
            }
        }
        Ok(SemiAlgebraicSet {
            ambient_dim,
            relations,
            inequalities,
            maximal_rank: None,
        })
    }

    /// The orbit space of a model: its relations and inequalities.
    pub fn orbit_space(model: &VerifiedModel) -> Self {
        SemiAlgebraicSet {
            ambient_dim: model.num_invariants(),
            relations: model.relations.clone(),
            inequalities: model.inequalities.clone(),
            maximal_rank: None,
        }
    }

    pub fn with_maximal_rank(mut self, rank: usize) -> Self {
        self.maximal_rank = Some(rank);
        self
    }

    /// Jacobian of the relations at `v` (one row per relation).
    pub fn relation_jacobian(&self, v: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        let mut m = nalgebra::DMatrix::zeros(self.relations.len(), self.ambient_dim);
        for (i, rel) in self.relations.iter().enumerate() {
            for (j, d) in rel.gradient().iter().enumerate() {
                m[(i, j)] = d.eval_f64(v)?;
            }
        }
        Ok(m)
    }

    /// Estimate the maximal relation-Jacobian rank by sampling random in-set
    /// points (Gauss-Newton projection onto the relations, then membership
    /// filter) and cache it.
    pub fn estimate_maximal_rank(&mut self, samples: usize, seed: u64) -> Result<usize> {
        let mut rng = DeterministicRng::new(seed, 0xE57);
        let mut best = 0usize;
        let mut accepted = 0usize;
        for _ in 0..samples {
            let mut v: Vec<f64> = (0..self.ambient_dim).map(|_| 2.0 * rng.normal()).collect();
            if self.project_onto_relations(&mut v, 40).is_err() {
                continue;
            }
            let Ok(rep) = self.membership(&v, 1e-8) else {
                continue;
            };
            if !rep.in_set {
                continue;
            }
            accepted += 1;
            let rank = linalg::rank(&self.relation_jacobian(&v)?, DEFAULT_RANK_TOL);
            best = best.max(rank);
        }
        if accepted == 0 {
            return Err(Error::MaximalRankUnavailable);
        }
        self.maximal_rank = Some(best);
        Ok(best)
    }

    fn project_onto_relations(&self, v: &mut [f64], max_iter: usize) -> Result<()> {
        if self.relations.is_empty() {
            return Ok(());
        }
        let m = self.relations.len();
        for _ in 0..max_iter {
            let res: Vec<f64> = self
                .relations
                .iter()
                .map(|r| r.eval_f64(v))
                .collect::<Result<_>>()?;
            if res.iter().all(|r| r.abs() <= 1e-12) {
                return Ok(());
            }
            let j = self.relation_jacobian(v)?;
            let jt = j.transpose();
            let gram = &j * &jt + nalgebra::DMatrix::identity(m, m) * 1e-12;
            let rhs = nalgebra::DVector::from_vec(res);
            let Some(sol) = gram.lu().solve(&rhs) else {
                return Err(Error::MaximalRankUnavailable);
            };
            let step = jt * sol;
            for (vi, si) in v.iter_mut().zip(step.iter()) {
                *vi -= si;
            }
        }
        let res: Vec<f64> = self
            .relations
            .iter()
            .map(|r| r.eval_f64(v))
            .collect::<Result<_>>()?;
        if res.iter().all(|r| r.abs() <= 1e-9) {
            Ok(())
        } else {
            Err(Error::MaximalRankUnavailable)
        }
    }

    /// Membership report: every relation within `tol`, every inequality above `-tol`.
    pub fn membership(&self, v: &[f64], tol: f64) -> Result<MembershipReport> {
        if v.len() != self.ambient_dim {
            return Err(Error::ArityMismatch {
                expected: self.ambient_dim,
                got: v.len(),
            });
        }
        let relation_residuals: Vec<f64> = self
            .relations
            .iter()
            .map(|r| r.eval_f64(v))
            .collect::<Result<_>>()?;
        let inequality_values: Vec<f64> = self
            .inequalities
            .iter()
            .map(|r| r.eval_f64(v))
            .collect::<Result<_>>()?;
        let in_set = relation_residuals.iter().all(|r| r.abs() <= tol)
            && inequality_values.iter().all(|&r| r >= -tol);
        Ok(MembershipReport {
            in_set,
            relation_residuals,
            inequality_values,
        })
    }

    /// Variety-singularity test: the point is singular when the relation
    /// Jacobian rank drops below the set's maximal rank.
    ///
    /// `tol` is the membership tolerance; rank decisions use the relative
    /// singular-value cutoff [`DEFAULT_RANK_TOL`]. Orbit-type singularities
    /// this criterion is blind to (the apex of the Lagrange cone, say, where
    /// the variety itself is smooth) are picked up by the rank reports in
    /// `strata`.
    pub fn classify_point(&self, v: &[f64], tol: f64) -> Result<PointClass> {
        let rep = self.membership(v, tol)?;
        if !rep.in_set {
            let residual = rep
                .relation_residuals
                .iter()
                .fold(0.0_f64, |a, r| a.max(r.abs()));
            return Err(Error::PointNotInSet { residual });
        }
        let maximal = self.maximal_rank.ok_or(Error::MaximalRankUnavailable)?;
        let rank = linalg::rank(&self.relation_jacobian(v)?, DEFAULT_RANK_TOL);
        Ok(if rank < maximal {
            PointClass::Singular
        } else {
            PointClass::Nonsingular
        })
    }
}

#[derive(Debug, Clone)]
pub struct MembershipReport {
    pub in_set: bool,
    pub relation_residuals: Vec<f64>,
    pub inequality_values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    Nonsingular,
    Singular,
}

/// A reduced phase space: the orbit space cut by momentum constraints.
#[derive(Debug, Clone)]
pub struct ReducedSpace {
    pub base: SemiAlgebraicSet,
    /// Constraint polynomials in invariant coordinates with their levels.
    pub momentum_constraints: Vec<(Polynomial, BigRational)>,
    pub model_name: String,
    pub mu: Vec<BigRational>,
}

impl ReducedSpace {
    /// The underlying semi-algebraic set: base relations plus `P - level`.
    pub fn set(&self) -> SemiAlgebraicSet {
        let mut relations = self.base.relations.clone();
        for (p, level) in &self.momentum_constraints {
            relations.push(p.sub(&Polynomial::constant(self.base.ambient_dim, level.clone())));
        }
        SemiAlgebraicSet {
            ambient_dim: self.base.ambient_dim,
            relations,
            inequalities: self.base.inequalities.clone(),
            maximal_rank: self.base.maximal_rank,
        }
    }
}

/// Build the reduced phase space at momentum `mu`.
///
/// If every generator rewrites into the invariants (torus-type models), the
/// constraints are `J_i = mu_i`. Otherwise the invariant combination
/// `|J|^2 = sum J_i^2` is rewritten and constrained to `|mu|^2`, which is the
/// SO(3) convention: `mu` is the momentum vector.
pub fn reduced_space(
    model: &VerifiedModel,
    mu: &[BigRational],
    degree_bound: u32,
) -> Result<ReducedSpace> {
    let r = model.num_generators();
    if mu.len() != r {
        return Err(Error::ArityMismatch {
            expected: r,
            got: mu.len(),
        });
    }
    let mut torus_constraints = Vec::with_capacity(r);
    let mut all_expressible = true;
    for gen in &model.generators {
        match orbitmap::express_in_invariants(model, &gen.poly, degree_bound)? {
            Rewrite::Expressed(q) => torus_constraints.push(q),
            Rewrite::NotExpressible => {
                all_expressible = false;
                break;
            }
        }
    }
    let momentum_constraints = if all_expressible {
        torus_constraints
            .into_iter()
            .zip(mu.iter().cloned())
            .collect()
    } else {
        let n = model.dim();
        let mut sum_j2 = Polynomial::zero(n);
        for gen in &model.generators {
            sum_j2 = sum_j2.add(&gen.poly.mul(&gen.poly));
        }
        let q = match orbitmap::express_in_invariants(model, &sum_j2, degree_bound)? {
            Rewrite::Expressed(q) => q,
            Rewrite::NotExpressible => {
                return Err(Error::ConstraintNotExpressible {
                    bound: degree_bound,
                })
            }
        };
        let level: BigRational = mu
            .iter()
            .map(|m| m * m)
            .fold(BigRational::zero(), |a, b| a + b);
        vec![(q, level)]
    };
    Ok(ReducedSpace {
        base: SemiAlgebraicSet::orbit_space(model),
        momentum_constraints,
        model_name: model.name.clone(),
        mu: mu.to_vec(),
    })
}

// ---------------------------------------------------------------------------
// Surface sampling
// ---------------------------------------------------------------------------

/// Chart for sampling: two free coordinates, one solved by root-finding.
#[derive(Debug, Clone, Copy)]
pub struct ChartSpec {
    pub free: (usize, usize),
    pub solved: usize,
}

#[derive(Debug, Clone)]
pub struct SampleOptions {
    /// Ranges of the two free coordinates.
    pub window: ((f64, f64), (f64, f64)),
    /// Cells per axis; grid nodes are `grid + 1` per axis.
    pub grid: usize,
    /// Scan range of the solved coordinate.
    pub solved_range: (f64, f64),
    /// Scan subdivisions along the solved axis.
    pub scan: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            window: ((-1.0, 1.0), (-1.0, 1.0)),
            grid: 32,
            solved_range: (-2.0, 2.0),
            scan: 256,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    /// Full ambient coordinates per vertex.
    pub vertices: Vec<Vec<f64>>,
    pub triangles: Vec<[usize; 3]>,
    pub residual_max: f64,
    /// Set when the chart relation never changed sign in the window.
    pub empty_flagged: bool,
}

const VERTEX_TOL: f64 = 1e-8;

/// Sample the zero locus of the chart relation over a rectangular grid.
///
/// Non-chart coordinates must be pinned by single-variable linear relations
/// (momentum or Casimir levels); after pinning, exactly one relation may
/// remain. Every emitted vertex satisfies all relations to `1e-8` and all
/// inequalities to `-1e-8`; grid nodes whose scan finds no sign change and no
/// exact zero emit nothing.
pub fn sample_surface(
    set: &SemiAlgebraicSet,
    chart: ChartSpec,
    opts: &SampleOptions,
) -> Result<Mesh> {
    let k = set.ambient_dim;
    let (f1, f2) = chart.free;
    let sv = chart.solved;
    if f1 >= k || f2 >= k || sv >= k || f1 == f2 || f1 == sv || f2 == sv {
        return Err(Error::ChartUnsupported(format!(
            "chart indices ({f1},{f2}->{sv}) invalid for ambient dimension {k}"
        )));
    }
    if opts.grid == 0 || opts.scan < 2 {
        return Err(Error::ChartUnsupported(
            "grid and scan must be positive".into(),
        ));
    }

    // Eliminate non-chart coordinates through linear relations (momentum and
    // Casimir levels): each pin expresses one coordinate as an affine
    // function of the free chart coordinates.
    let chart_vars = [f1, f2];
    let mut pins: Vec<Option<Polynomial>> = vec![None; k];
    let mut remaining: Vec<Polynomial> = set.relations.clone();
    loop {
        let mut progress = false;
        let mut next = Vec::new();
        for rel in remaining.drain(..) {
            if rel.is_zero() {
                continue;
            }
            match solvable_linear_pin(&rel, &chart_vars, sv) {
                Some((var, expr)) if pins[var].is_none() => {
                    pins[var] = Some(expr);
                    progress = true;
                }
                _ => next.push(rel),
            }
        }
        remaining = next;
        if !progress {
            break;
        }
        remaining = remaining
            .iter()
            .map(|rel| substitute_pins(rel, &pins))
            .filter(|rel| !rel.is_zero())
            .collect();
    }
    if remaining.len() != 1 {
        return Err(Error::ChartUnsupported(format!(
            "{} relations remain after pinning; need exactly one",
            remaining.len()
        )));
    }
    let chart_rel = remaining.remove(0);
    if chart_rel.diff(sv)?.is_zero() {
        return Err(Error::ChartUnsupported(
            "chart relation does not involve the solved coordinate".into(),
        ));
    }
    let compiled_pins: Vec<Option<crate::poly::CompiledPoly>> = pins
        .iter()
        .map(|p| p.as_ref().map(Polynomial::compile))
        .collect();

    let ((a0, a1), (b0, b1)) = opts.window;
    let (s0, s1) = opts.solved_range;
    if !(a1 > a0 && b1 > b0 && s1 > s0) {
        return Err(Error::ChartUnsupported("window must be well ordered".into()));
    }

    let nodes = opts.grid + 1;
    let assemble = |u: f64, wv: f64, s: f64| -> Vec<f64> {
        let mut v = vec![0.0; k];
        v[f1] = u;
        v[f2] = wv;
        v[sv] = s;
        // Pins reference only the free chart coordinates.
        for (i, pin) in compiled_pins.iter().enumerate() {
            if let Some(expr) = pin {
                v[i] = expr.eval(&v);
            }
        }
        v
    };

    let scan_step = (s1 - s0) / opts.scan as f64;
    let mut roots_at: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); nodes]; nodes];
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut vertex_index: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); nodes]; nodes];
    let mut any_sign_change = false;
    let mut residual_max = 0.0_f64;

    for i in 0..nodes {
        let u = a0 + (a1 - a0) * i as f64 / opts.grid as f64;
        for j in 0..nodes {
            let wv = b0 + (b1 - b0) * j as f64 / opts.grid as f64;
            let eval = |s: f64| -> Result<f64> { chart_rel.eval_f64(&assemble(u, wv, s)) };
            let mut roots: Vec<f64> = Vec::new();
            let mut prev = eval(s0)?;
            if prev.abs() <= 1e-11 * (1.0 + prev.abs()) {
                roots.push(s0);
            }
            for step in 1..=opts.scan {
                let s = s0 + scan_step * step as f64;
                let val = eval(s)?;
                if val.abs() <= 1e-11 * (1.0 + val.abs()) {
                    roots.push(s);
                } else if prev * val < 0.0 {
                    any_sign_change = true;
                    let mut lo = s - scan_step;
                    let mut hi = s;
                    let mut flo = prev;
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        let fm = eval(mid)?;
                        if fm == 0.0 {
                            lo = mid;
                            hi = mid;
                            break;
                        }
                        if flo * fm < 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                            flo = fm;
                        }
                    }
                    roots.push(0.5 * (lo + hi));
                }
                prev = val;
            }
            roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
            roots.dedup_by(|x, y| (*x - *y).abs() <= (s1 - s0) * 1e-9);
            // Keep only points meeting the full membership contract.
            for root in roots {
                let point = assemble(u, wv, root);
                let rep = set.membership(&point, VERTEX_TOL)?;
                if rep.in_set {
                    let res = rep
                        .relation_residuals
                        .iter()
                        .fold(0.0_f64, |acc, r| acc.max(r.abs()));
                    residual_max = residual_max.max(res);
                    roots_at[i][j].push(root);
                    vertex_index[i][j].push(vertices.len());
                    vertices.push(point);
                }
            }
        }
    }

    // Triangulate layer by layer; a cell contributes when all four corners
    // carry an l-th root close enough to sit on one branch.
    let jump = (s1 - s0) / 8.0;
    let mut triangles = Vec::new();
    for i in 0..opts.grid {
        for j in 0..opts.grid {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let layers = corners
                .iter()
                .map(|&(a, b)| roots_at[a][b].len())
                .min()
                .unwrap_or(0);
            for l in 0..layers {
                let zs: Vec<f64> = corners.iter().map(|&(a, b)| roots_at[a][b][l]).collect();
                let zmin = zs.iter().cloned().fold(f64::INFINITY, f64::min);
                let zmax = zs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if zmax - zmin > jump {
                    continue;
                }
                let idx: Vec<usize> = corners
                    .iter()
                    .map(|&(a, b)| vertex_index[a][b][l])
                    .collect();
                triangles.push([idx[0], idx[1], idx[2]]);
                triangles.push([idx[0], idx[2], idx[3]]);
            }
        }
    }

    Ok(Mesh {
        empty_flagged: vertices.is_empty() && !any_sign_change,
        vertices,
        triangles,
        residual_max,
    })
}

/// Recognise a degree-one relation whose only variable outside the free chart
/// coordinates is some `x_p` (never the solved coordinate) and solve it:
/// returns `(p, affine expression for x_p in the chart coordinates)`.
fn solvable_linear_pin(
    p: &Polynomial,
    chart_vars: &[usize],
    solved: usize,
) -> Option<(usize, Polynomial)> {
    if p.degree() != Some(1) {
        return None;
    }
    let k = p.arity();
    let mut target: Option<(usize, BigRational)> = None;
    for (m, c) in p.terms() {
        if m.is_constant() {
            continue;
        }
        let i = m.0.iter().position(|&e| e > 0).unwrap();
        if chart_vars.contains(&i) {
            continue;
        }
        if i == solved || target.is_some() {
            return None;
        }
        target = Some((i, c.clone()));
    }
    let (var, coeff) = target?;
    // x_var = -(rest of the relation) / coeff.
    let mut rest = p.clone();
    let mut unit = vec![0u32; k];
    unit[var] = 1;
    rest = rest.sub(&Polynomial::monomial(k, &unit, coeff.clone()));
    Some((var, rest.scale(&(-coeff.recip()))))
}

fn substitute_pins(p: &Polynomial, pins: &[Option<Polynomial>]) -> Polynomial {
    let k = p.arity();
    let subs: Vec<Polynomial> = (0..k)
        .map(|i| match &pins[i] {
            Some(expr) => expr.clone(),
            None => Polynomial::var(k, i),
        })
        .collect();
    p.substitute(&subs).unwrap_or_else(|_| p.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_model, Params};
    use crate::poly::Polynomial as P;

    fn q(n: i64, d: i64) -> BigRational {
        P::rational(n, d)
    }

    fn lagrange_cone() -> SemiAlgebraicSet {
        let names = ["a", "b", "c", "d"];
        SemiAlgebraicSet::new(
            4,
            vec![P::parse("a*b - c^2 - d", &names).unwrap()],
            vec![
                P::parse("a", &names).unwrap(),
                P::parse("b", &names).unwrap(),
                P::parse("d", &names).unwrap(),
            ],
        )
        .unwrap()
        .with_maximal_rank(1)
    }

    #[test]
    fn membership_examples() {
        let cone = lagrange_cone();
        assert!(cone
            .membership(&[1.0, 1.0, 0.0, 1.0], 1e-10)
            .unwrap()
            .in_set);
        // Relation holds but a >= 0 fails.
        let rep = cone.membership(&[-1.0, 1.0, 0.0, -1.0], 1e-10).unwrap();
        assert!(!rep.in_set);
        assert!(rep.relation_residuals[0].abs() <= 1e-12);
        // Monotone in the tolerance.
        let v = [1.0, 1.0, 1e-5, 1.0];
        assert!(!cone.membership(&v, 1e-12).unwrap().in_set);
        assert!(cone.membership(&v, 1e-4).unwrap().in_set);
    }

    #[test]
    fn scaled_orbit_space_membership() {
        let m = catalog_model("so3_diag_r9_scaled", &Params::new()).unwrap();
        let s = SemiAlgebraicSet::orbit_space(&m);
        assert!(s.membership(&[0.0, 0.0, 0.0, 1.0], 1e-12).unwrap().in_set);
    }

    #[test]
    fn classify_cone_points() {
        let cone = lagrange_cone();
        assert_eq!(
            cone.classify_point(&[1.0, 1.0, 0.0, 1.0], 1e-10).unwrap(),
            PointClass::Nonsingular
        );
        // The apex is nonsingular for the variety criterion: the gradient
        // (0,0,0,-1) keeps full rank 1.
        assert_eq!(
            cone.classify_point(&[0.0; 4], 1e-10).unwrap(),
            PointClass::Nonsingular
        );
        assert!(matches!(
            cone.classify_point(&[5.0, 0.0, 0.0, 3.0], 1e-10),
            Err(Error::PointNotInSet { .. })
        ));
        // Rescaling the relation does not change verdicts.
        let mut scaled = cone.clone();
        scaled.relations[0] = scaled.relations[0].scale(&q(7, 3));
        assert_eq!(
            scaled
                .classify_point(&[1.0, 1.0, 0.0, 1.0], 1e-10)
                .unwrap(),
            PointClass::Nonsingular
        );
    }

    #[test]
    fn kl_reduced_space_singular_point() {
        // Reduced space of the 1:2 resonance at I1 = 1 in (I2,R1,R2):
        // R1^2 + R2^2 = 1/2 (1+I2)^2 (1-I2); all partials vanish at (-1,0,0).
        let names = ["I2", "R1", "R2"];
        let rel = P::parse("R1^2 + R2^2 - 1/2*(1 + I2)^2*(1 - I2)", &names).unwrap();
        let mut set = SemiAlgebraicSet::new(3, vec![rel], vec![]).unwrap();
        set.estimate_maximal_rank(256, 7).unwrap();
        assert_eq!(set.maximal_rank, Some(1));
        assert_eq!(
            set.classify_point(&[-1.0, 0.0, 0.0], 1e-9).unwrap(),
            PointClass::Singular
        );
        // A generic point of the same leaf is nonsingular.
        let r = (0.5_f64).sqrt();
        assert_eq!(
            set.classify_point(&[0.0, r, 0.0], 1e-9).unwrap(),
            PointClass::Nonsingular
        );
    }

    #[test]
    fn reduced_space_constructions() {
        // SO(3) vector convention: one |J|^2 constraint.
        let m = catalog_model("so3_cotangent_r6", &Params::new()).unwrap();
        let rs = reduced_space(&m, &[q(0, 1), q(0, 1), q(1, 1)], 2).unwrap();
        assert_eq!(rs.momentum_constraints.len(), 1);
        let names = m.invariant_names();
        assert_eq!(rs.momentum_constraints[0].0.display(&names), "d");
        assert_eq!(rs.momentum_constraints[0].1, q(1, 1));
        let set = rs.set();
        // {d = 1, ab - c^2 = 1}: hyperboloid sheet point (1,1,0,1).
        assert!(set
            .membership(&[1.0, 1.0, 0.0, 1.0], 1e-12)
            .unwrap()
            .in_set);

        // Total-momentum convention on the diagonal R^6 model.
        let m6 = catalog_model("so3_diag_r6", &Params::new()).unwrap();
        let rs6 = reduced_space(&m6, &[q(1, 1), q(2, 1), q(0, 1)], 2).unwrap();
        let names6 = m6.invariant_names();
        assert_eq!(
            rs6.momentum_constraints[0].0.display(&names6),
            "a + b + 2*c"
        );
        assert_eq!(rs6.momentum_constraints[0].1, q(5, 1));

        // Torus convention: three direct levels on the R^8 model.
        let m8 = catalog_model("oscillator_r8", &Params::new()).unwrap();
        let rs8 = reduced_space(&m8, &[q(1, 1), q(0, 1), q(0, 1)], 3).unwrap();
        assert_eq!(rs8.momentum_constraints.len(), 3);
        // (H2, Xi, L1) = (1, 0, 0): the quartic becomes (1-K^2)^2 = 4N^2+4S^2;
        // the image point (1,0,0,0,1,0) realises K = 1, N = S = 0.
        let set8 = rs8.set();
        assert!(set8
            .membership(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0], 1e-12)
            .unwrap()
            .in_set);

        // Wrong momentum length is an arity error.
        assert!(matches!(
            reduced_space(&m8, &[q(1, 1)], 3),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn zero_momentum_gives_the_cone() {
        // mu = 0: the reduced space degenerates from the hyperboloid sheet to
        // the cone {ab = c^2, d = 0}.
        let m = catalog_model("so3_cotangent_r6", &Params::new()).unwrap();
        let rs = reduced_space(&m, &[q(0, 1), q(0, 1), q(0, 1)], 2).unwrap();
        let set = rs.set();
        assert!(set.membership(&[1.0, 1.0, 1.0, 0.0], 1e-12).unwrap().in_set);
        assert!(set.membership(&[4.0, 1.0, -2.0, 0.0], 1e-12).unwrap().in_set);
        assert!(set.membership(&[0.0; 4], 1e-12).unwrap().in_set);
        // The hyperboloid point lies on a different leaf.
        assert!(!set.membership(&[1.0, 1.0, 0.0, 1.0], 1e-12).unwrap().in_set);
    }

    #[test]
    fn sample_elliptope_slice() {
        // v4 = 0 slice of the scaled orbit space in (v1,v2,v3).
        let names = ["v1", "v2", "v3"];
        let rel = P::parse("1 + 2*v1*v2*v3 - v1^2 - v2^2 - v3^2", &names).unwrap();
        let set = SemiAlgebraicSet::new(
            3,
            vec![rel],
            vec![
                P::parse("1 - v1^2", &names).unwrap(),
                P::parse("1 - v2^2", &names).unwrap(),
                P::parse("1 - v3^2", &names).unwrap(),
            ],
        )
        .unwrap()
        .with_maximal_rank(1);
        let opts = SampleOptions {
            window: ((-1.0, 1.0), (-1.0, 1.0)),
            grid: 32,
            solved_range: (-1.0, 1.0),
            scan: 256,
        };
        let mesh = sample_surface(
            &set,
            ChartSpec {
                free: (0, 1),
                solved: 2,
            },
            &opts,
        )
        .unwrap();
        assert!(!mesh.empty_flagged);
        assert!(mesh.vertices.len() > 500);
        assert!(mesh.residual_max <= 1e-8);
        assert!(!mesh.triangles.is_empty());
        // Exactly the four collinear configurations are singular vertices.
        let mut singular = Vec::new();
        for v in &mesh.vertices {
            if set.classify_point(v, 1e-8).unwrap() == PointClass::Singular {
                singular.push(v.clone());
            }
        }
        assert_eq!(singular.len(), 4, "singular vertices: {singular:?}");
        for v in &singular {
            assert!(v.iter().all(|c| (c.abs() - 1.0).abs() < 1e-12));
            let prod: f64 = v.iter().product();
            assert!((prod - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_scaled_reduced_space_eliminates_momentum_plane() {
        // Reduced space of the scaled model: elliptope relation plus the
        // momentum plane v1+v2+v3 = C. The chart (v1, v2 -> v4) forces the
        // plane to eliminate v3 affinely, giving the (v1,v2,v4) picture.
        let m = catalog_model("so3_diag_r9_scaled", &Params::new()).unwrap();
        let rs = reduced_space(&m, &[q(1, 2)], 2).unwrap();
        let set = rs.set();
        let mesh = sample_surface(
            &set,
            ChartSpec {
                free: (0, 1),
                solved: 3,
            },
            &SampleOptions {
                window: ((-1.0, 1.0), (-1.0, 1.0)),
                grid: 24,
                solved_range: (-1.0, 1.0),
                scan: 128,
            },
        )
        .unwrap();
        assert!(!mesh.empty_flagged);
        assert!(mesh.vertices.len() > 200);
        for v in &mesh.vertices {
            assert!((v[0] + v[1] + v[2] - 0.5).abs() <= 1e-12, "{v:?}");
            let gram = 1.0 + 2.0 * v[0] * v[1] * v[2] - v[0] * v[0] - v[1] * v[1] - v[2] * v[2];
            assert!((v[3] * v[3] - gram).abs() <= 1e-8);
        }
    }

    #[test]
    fn sample_empty_window() {
        let names = ["u", "v", "w"];
        let rel = P::parse("u^2 + v^2 + w^2 - 1", &names).unwrap();
        let set = SemiAlgebraicSet::new(3, vec![rel], vec![]).unwrap();
        let opts = SampleOptions {
            window: ((5.0, 6.0), (5.0, 6.0)),
            grid: 8,
            solved_range: (-1.0, 1.0),
            scan: 64,
        };
        let mesh = sample_surface(
            &set,
            ChartSpec {
                free: (0, 1),
                solved: 2,
            },
            &opts,
        )
        .unwrap();
        assert!(mesh.empty_flagged);
        assert!(mesh.vertices.is_empty());
    }

    #[test]
    fn sample_hyperboloid_sheet_with_pinned_casimir() {
        // Reduced space of so3_cotangent_r6 at m = 1, chart (c, a -> b):
        // d is pinned by d - 1, then a*b - c^2 - 1 is solved for b.
        let m = catalog_model("so3_cotangent_r6", &Params::new()).unwrap();
        let rs = reduced_space(&m, &[q(0, 1), q(0, 1), q(1, 1)], 2).unwrap();
        let set = rs.set();
        let opts = SampleOptions {
            window: ((-2.0, 2.0), (0.25, 4.0)),
            grid: 24,
            solved_range: (0.0, 32.0),
            scan: 512,
        };
        let mesh = sample_surface(
            &set,
            ChartSpec {
                free: (2, 0),
                solved: 1,
            },
            &opts,
        )
        .unwrap();
        assert!(!mesh.empty_flagged);
        assert!(mesh.vertices.len() > 100);
        for v in &mesh.vertices {
            // All sampled (a,b,c) satisfy ab - c^2 = 1 to 1e-8 and d = 1.
            assert!((v[0] * v[1] - v[2] * v[2] - 1.0).abs() <= 1e-8);
            assert!((v[3] - 1.0).abs() <= 1e-12);
        }
    }
}
