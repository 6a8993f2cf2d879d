//! Symmetry models and their symbolic verification.
//!
//! A model bundles a phase space with a Poisson structure, momentum
//! generators `J_i`, a Hilbert basis of invariants `rho_i`, and the
//! relations/inequalities cutting the orbit space out of invariant space.
//! Verification checks every identity the model asserts: `{rho_i, J_j} = 0`
//! for all pairs, relation pullbacks expand to the zero polynomial, declared
//! Casimirs commute with every invariant under the induced structure, and
//! inequalities hold at exactly evaluated sample points.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbitmap::{self, InducedStructure};
use crate::poisson::PoissonStructure;
use crate::poly::Polynomial;
use crate::rng::DeterministicRng;

/// Default rewrite bound for models that do not declare one.
pub const DEFAULT_DEGREE_BOUND: u32 = 2;

/// Number of exact sample points used for the inequality checks.
const INEQUALITY_SAMPLES: usize = 64;

#[derive(Debug, Clone)]
pub struct NamedPoly {
    pub name: String,
    pub poly: Polynomial,
}

/// A symmetric Hamiltonian system, as loaded from a model document.
///
/// Downstream modules only accept a [`VerifiedModel`].
#[derive(Debug, Clone)]
pub struct SymmetryModel {
    pub name: String,
    pub variables: Vec<String>,
    pub structure: PoissonStructure,
    pub generators: Vec<NamedPoly>,
    pub invariants: Vec<NamedPoly>,
    /// Relations among the invariants, each identically zero on the orbit space.
    pub relations: Vec<Polynomial>,
    /// Inequalities among the invariants, each nonnegative on the orbit space.
    pub inequalities: Vec<Polynomial>,
    /// Declared Casimirs of the induced structure, in invariant coordinates.
    pub casimirs: Vec<Polynomial>,
    /// Default total-degree bound for rewrites into the invariants.
    pub degree_bound: u32,
}

impl SymmetryModel {
    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn num_invariants(&self) -> usize {
        self.invariants.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn variable_names(&self) -> Vec<&str> {
        self.variables.iter().map(|s| s.as_str()).collect()
    }

    pub fn invariant_names(&self) -> Vec<&str> {
        self.invariants.iter().map(|g| g.name.as_str()).collect()
    }

    pub fn invariant_polys(&self) -> Vec<Polynomial> {
        self.invariants.iter().map(|g| g.poly.clone()).collect()
    }

    /// True when the invariants are exactly the coordinate functions, i.e.
    /// the model lives directly in invariant coordinates (a stage-reduced
    /// Poisson-manifold input). For such models the orbit map is the identity.
    pub fn is_invariant_coordinate_model(&self) -> bool {
        self.num_invariants() == self.dim()
            && self
                .invariants
                .iter()
                .enumerate()
                .all(|(i, g)| g.poly == Polynomial::var(self.dim(), i))
    }
}

/// One `{rho_i, J_j}` check.
#[derive(Debug, Clone)]
pub struct InvariancePair {
    pub invariant: String,
    pub generator: String,
    /// `None` means the bracket is the exact zero polynomial.
    pub residual: Option<Polynomial>,
}

/// One relation check.
#[derive(Debug, Clone)]
pub struct RelationCheck {
    pub index: usize,
    /// How the relation was verified (see [`RelationMode`]).
    pub mode: RelationMode,
    pub residual: Option<Polynomial>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationMode {
    /// Pullback through the orbit map expands to the zero polynomial.
    Pullback,
    /// Invariant-coordinate model: the relation is verified as a Casimir of
    /// the structure, so its zero set is a union of symplectic leaves.
    CasimirOfStructure,
}

#[derive(Debug, Clone)]
pub struct CasimirCheck {
    pub index: usize,
    pub pass: bool,
    /// Invariant coordinate whose induced bracket with the candidate is nonzero.
    pub offending: Option<String>,
}

#[derive(Debug, Clone)]
pub struct InequalityCheck {
    pub index: usize,
    pub samples: usize,
    pub pass: bool,
}

/// Full verification record for a model.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub model: String,
    pub invariance: Vec<InvariancePair>,
    pub relations: Vec<RelationCheck>,
    pub casimirs: Vec<CasimirCheck>,
    pub inequalities: Vec<InequalityCheck>,
    pub induced: Option<InducedStructure>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.invariance.iter().all(|p| p.residual.is_none())
            && self.relations.iter().all(|r| r.residual.is_none())
            && self.casimirs.iter().all(|c| c.pass)
            && self.inequalities.iter().all(|c| c.pass)
    }
}

/// A model that has passed full verification; the only entry point to the
/// orbit-map, strata, semi-algebraic and equilibrium modules.
#[derive(Debug, Clone)]
pub struct VerifiedModel {
    model: SymmetryModel,
    report: VerificationReport,
}

impl std::ops::Deref for VerifiedModel {
    type Target = SymmetryModel;
    fn deref(&self) -> &SymmetryModel {
        &self.model
    }
}

impl VerifiedModel {
    /// Run every verification and promote the model on success.
    pub fn new(model: SymmetryModel) -> std::result::Result<VerifiedModel, VerificationFailure> {
        let report = run_verification(&model);
        if report.all_pass() {
            Ok(VerifiedModel { model, report })
        } else {
            Err(VerificationFailure { model, report })
        }
    }

    pub fn report(&self) -> &VerificationReport {
        &self.report
    }

    pub fn model(&self) -> &SymmetryModel {
        &self.model
    }
}

#[derive(Debug)]
pub struct VerificationFailure {
    pub model: SymmetryModel,
    pub report: VerificationReport,
}

impl std::fmt::Display for VerificationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "model `{}` failed verification", self.model.name)
    }
}

impl std::error::Error for VerificationFailure {}

/// Per-pair invariance report: `{rho_i, J_j}` computed exactly.
pub fn verify_invariance(model: &SymmetryModel) -> Vec<InvariancePair> {
    let mut out = Vec::new();
    for inv in &model.invariants {
        for gen in &model.generators {
            let b = model
                .structure
                .bracket(&inv.poly, &gen.poly)
                .expect("arities checked at load");
            out.push(InvariancePair {
                invariant: inv.name.clone(),
                generator: gen.name.clone(),
                residual: if b.is_zero() { None } else { Some(b) },
            });
        }
    }
    out
}

/// Per-relation report. Pullbacks are expanded exactly; for
/// invariant-coordinate models the pullback is the identity and the relation
/// is instead verified as a Casimir of the structure.
pub fn verify_relations(model: &SymmetryModel) -> Vec<RelationCheck> {
    let rho = model.invariant_polys();
    let id_model = model.is_invariant_coordinate_model();
    let mut out = Vec::new();
    for (index, rel) in model.relations.iter().enumerate() {
        if id_model {
            let field = model
                .structure
                .hamiltonian_field(rel)
                .expect("arities checked at load");
            let bad = field.into_iter().find(|c| !c.is_zero());
            out.push(RelationCheck {
                index,
                mode: RelationMode::CasimirOfStructure,
                residual: bad,
            });
        } else {
            let pulled = rel.substitute(&rho).expect("arities checked at load");
            out.push(RelationCheck {
                index,
                mode: RelationMode::Pullback,
                residual: if pulled.is_zero() { None } else { Some(pulled) },
            });
        }
    }
    out
}

fn verify_casimirs(
    model: &SymmetryModel,
    induced: Option<&InducedStructure>,
) -> Vec<CasimirCheck> {
    let mut out = Vec::new();
    let Some(induced) = induced else {
        return model
            .casimirs
            .iter()
            .enumerate()
            .map(|(index, _)| CasimirCheck {
                index,
                pass: false,
                offending: None,
            })
            .collect();
    };
    for (index, cand) in model.casimirs.iter().enumerate() {
        let verdict = orbitmap::casimir_check_with(model, induced, cand);
        match verdict {
            Ok(None) => out.push(CasimirCheck {
                index,
                pass: true,
                offending: None,
            }),
            Ok(Some(name)) => out.push(CasimirCheck {
                index,
                pass: false,
                offending: Some(name),
            }),
            Err(_) => out.push(CasimirCheck {
                index,
                pass: false,
                offending: None,
            }),
        }
    }
    out
}

/// Exact inequality sampling: evaluate each inequality at the orbit-map image
/// of random rational phase points; every value must be `>= 0` exactly.
fn verify_inequalities(model: &SymmetryModel) -> Vec<InequalityCheck> {
    if model.is_invariant_coordinate_model() {
        // The inequalities describe the embedded leaf variety, not the
        // ambient coordinate space; there is nothing to sample.
        return model
            .inequalities
            .iter()
            .enumerate()
            .map(|(index, _)| InequalityCheck {
                index,
                samples: 0,
                pass: true,
            })
            .collect();
    }
    let n = model.dim();
    let mut rng = DeterministicRng::new(0x1b_ea71e5, 0);
    let mut points: Vec<Vec<BigRational>> = Vec::with_capacity(INEQUALITY_SAMPLES);
    for _ in 0..INEQUALITY_SAMPLES {
        let pt: Vec<BigRational> = (0..n)
            .map(|_| {
                let num = rng.below(33) as i64 - 16;
                BigRational::new(BigInt::from(num), BigInt::from(8))
            })
            .collect();
        points.push(pt);
    }
    let images: Vec<Vec<BigRational>> = points
        .iter()
        .map(|pt| {
            model
                .invariants
                .iter()
                .map(|inv| inv.poly.eval_exact(pt).expect("arity checked"))
                .collect()
        })
        .collect();
    model
        .inequalities
        .iter()
        .enumerate()
        .map(|(index, ineq)| {
            let pass = images.iter().all(|v| {
                ineq.eval_exact(v).expect("arity checked") >= BigRational::from_integer(0.into())
            });
            InequalityCheck {
                index,
                samples: INEQUALITY_SAMPLES,
                pass,
            }
        })
        .collect()
}

fn run_verification(model: &SymmetryModel) -> VerificationReport {
    let invariance = verify_invariance(model);
    let relations = verify_relations(model);
    let mut notes = Vec::new();
    let induced = match orbitmap::induced_structure_unchecked(model, model.degree_bound) {
        Ok(s) => Some(s),
        Err(e) => {
            notes.push(format!("induced structure unavailable: {e}"));
            None
        }
    };
    let casimirs = verify_casimirs(model, induced.as_ref());
    let inequalities = verify_inequalities(model);
    VerificationReport {
        model: model.name.clone(),
        invariance,
        relations,
        casimirs,
        inequalities,
        induced,
        notes,
    }
}

/// Structure constants of the generator algebra, when it closes.
#[derive(Debug, Clone)]
pub enum GeneratorAlgebra {
    /// `c[i][j]` holds the coefficients of `{J_i, J_j}` in the basis
    /// `(J_1..J_r, 1)`: first `r` entries, then the constant part.
    Closed { coefficients: Vec<Vec<Vec<BigRational>>> },
    NotClosed { pair: (usize, usize) },
}

/// Solve `{J_i, J_j} = sum_k c^k J_k + c^0` exactly for every pair.
pub fn generator_structure_constants(model: &VerifiedModel) -> GeneratorAlgebra {
    let r = model.num_generators();
    let mut coefficients = vec![vec![Vec::new(); r]; r];
    for i in 0..r {
        for j in 0..r {
            let b = model
                .structure
                .bracket(&model.generators[i].poly, &model.generators[j].poly)
                .expect("arities checked at load");
            let mut basis: Vec<Polynomial> =
                model.generators.iter().map(|g| g.poly.clone()).collect();
            basis.push(Polynomial::one(model.dim()));
            match crate::orbitmap::solve_in_span(&basis, &b) {
                Some(c) => coefficients[i][j] = c,
                None => return GeneratorAlgebra::NotClosed { pair: (i, j) },
            }
        }
    }
    GeneratorAlgebra::Closed { coefficients }
}

// ---------------------------------------------------------------------------
// Model documents
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    name: String,
    variables: Vec<String>,
    structure: StructureDocument,
    generators: Vec<NamedExpr>,
    invariants: Vec<NamedExpr>,
    #[serde(default)]
    relations: Vec<String>,
    #[serde(default)]
    inequalities: Vec<String>,
    #[serde(default)]
    casimirs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    degree_bound: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields, rename_all = "lowercase")]
enum StructureDocument {
    Canonical { pairs: usize },
    Matrix { entries: Vec<Vec<String>> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NamedExpr {
    name: String,
    expr: String,
}

fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parse and arity-check a model document (JSON).
///
/// Structure antisymmetry is verified symbolically here; the semantic
/// verifications run in [`VerifiedModel::new`].
pub fn load_model(text: &str) -> Result<SymmetryModel> {
    let doc: ModelDocument =
        serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
    model_from_document(doc)
}

fn model_from_document(doc: ModelDocument) -> Result<SymmetryModel> {
    let n = doc.variables.len();
    if n == 0 {
        return Err(Error::ModelFormat("model has no variables".into()));
    }
    for v in &doc.variables {
        if !valid_ident(v) {
            return Err(Error::ModelFormat(format!("invalid variable name `{v}`")));
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for v in &doc.variables {
        if !seen.insert(v.clone()) {
            return Err(Error::ModelFormat(format!("duplicate variable `{v}`")));
        }
    }
    let var_names: Vec<&str> = doc.variables.iter().map(|s| s.as_str()).collect();

    let structure = match &doc.structure {
        StructureDocument::Canonical { pairs } => {
            if 2 * pairs != n {
                return Err(Error::ModelFormat(format!(
                    "canonical structure with {pairs} pairs needs {} variables, got {n}",
                    2 * pairs
                )));
            }
            PoissonStructure::canonical(*pairs)
        }
        StructureDocument::Matrix { entries } => {
            if entries.len() != n {
                return Err(Error::ModelFormat(format!(
                    "structure matrix is {}x{} but there are {n} variables",
                    entries.len(),
                    entries.first().map(|r| r.len()).unwrap_or(0),
                )));
            }
            let mut rows = Vec::with_capacity(n);
            for row in entries {
                let mut prow = Vec::with_capacity(n);
                for e in row {
                    prow.push(Polynomial::parse(e, &var_names)?);
                }
                rows.push(prow);
            }
            PoissonStructure::matrix(rows)?
        }
    };

    let parse_named = |items: &[NamedExpr]| -> Result<Vec<NamedPoly>> {
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            if !valid_ident(&item.name) {
                return Err(Error::ModelFormat(format!("invalid name `{}`", item.name)));
            }
            out.push(NamedPoly {
                name: item.name.clone(),
                poly: Polynomial::parse(&item.expr, &var_names)?,
            });
        }
        Ok(out)
    };
    let generators = parse_named(&doc.generators)?;
    let invariants = parse_named(&doc.invariants)?;
    if invariants.is_empty() {
        return Err(Error::ModelFormat("model declares no invariants".into()));
    }
    let mut inv_seen = std::collections::BTreeSet::new();
    for inv in &invariants {
        if !inv_seen.insert(inv.name.clone()) {
            return Err(Error::ModelFormat(format!(
                "duplicate invariant `{}`",
                inv.name
            )));
        }
    }

    let inv_names: Vec<&str> = invariants.iter().map(|g| g.name.as_str()).collect();
    let parse_over_invariants = |items: &[String]| -> Result<Vec<Polynomial>> {
        items.iter().map(|s| Polynomial::parse(s, &inv_names)).collect()
    };
    let relations = parse_over_invariants(&doc.relations)?;
    let inequalities = parse_over_invariants(&doc.inequalities)?;
    let casimirs = parse_over_invariants(&doc.casimirs)?;

    Ok(SymmetryModel {
        name: doc.name,
        variables: doc.variables,
        structure,
        generators,
        invariants,
        relations,
        inequalities,
        casimirs,
        degree_bound: doc.degree_bound.unwrap_or(DEFAULT_DEGREE_BOUND),
    })
}

/// Serialise a model back to its document form; byte-stable for a fixed model.
pub fn export_model(model: &SymmetryModel) -> String {
    let var_names = model.variable_names();
    let inv_names = model.invariant_names();
    let structure = match &model.structure {
        PoissonStructure::Canonical { pairs } => StructureDocument::Canonical { pairs: *pairs },
        PoissonStructure::Matrix { entries } => StructureDocument::Matrix {
            entries: entries
                .iter()
                .map(|row| row.iter().map(|p| p.display(&var_names)).collect())
                .collect(),
        },
    };
    let doc = ModelDocument {
        name: model.name.clone(),
        variables: model.variables.clone(),
        structure,
        generators: model
            .generators
            .iter()
            .map(|g| NamedExpr {
                name: g.name.clone(),
                expr: g.poly.display(&var_names),
            })
            .collect(),
        invariants: model
            .invariants
            .iter()
            .map(|g| NamedExpr {
                name: g.name.clone(),
                expr: g.poly.display(&var_names),
            })
            .collect(),
        relations: model.relations.iter().map(|p| p.display(&inv_names)).collect(),
        inequalities: model
            .inequalities
            .iter()
            .map(|p| p.display(&inv_names))
            .collect(),
        casimirs: model.casimirs.iter().map(|p| p.display(&inv_names)).collect(),
        degree_bound: Some(model.degree_bound),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("document serialises");
    out.push('\n');
    out
}

/// A Hamiltonian together with the frame its expression lives in.
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    pub expression: Polynomial,
    pub frame: Frame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    FullSpace,
    InvariantSpace,
}

impl HamiltonianSpec {
    pub fn full_space(model: &SymmetryModel, expression: Polynomial) -> Result<Self> {
        if expression.arity() != model.dim() {
            return Err(Error::ArityMismatch {
                expected: model.dim(),
                got: expression.arity(),
            });
        }
        Ok(HamiltonianSpec {
            expression,
            frame: Frame::FullSpace,
        })
    }

    pub fn invariant_space(model: &SymmetryModel, expression: Polynomial) -> Result<Self> {
        if expression.arity() != model.num_invariants() {
            return Err(Error::ArityMismatch {
                expected: model.num_invariants(),
                got: expression.arity(),
            });
        }
        Ok(HamiltonianSpec {
            expression,
            frame: Frame::InvariantSpace,
        })
    }
}
