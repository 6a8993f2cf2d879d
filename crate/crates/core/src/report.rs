//! Output documents: human-readable, diff-stable JSON with provenance.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::VerifiedModel;
use crate::orbitmap::InducedStructure;
use crate::releq::{EquilibriumResult, SolveOutcome};
use crate::semialg::{Mesh, ReducedSpace};
use crate::strata::{PrincipalStratumEstimate, RankReport};

/// Provenance block embedded in every output document.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub model: String,
    pub params: BTreeMap<String, String>,
    pub options: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(model: impl Into<String>) -> Self {
        Provenance {
            tool: "symred",
            version: crate::VERSION,
            model: model.into(),
            params: BTreeMap::new(),
            options: BTreeMap::new(),
        }
    }

    pub fn with_option(mut self, key: &str, value: impl ToString) -> Self {
        self.options.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_params(mut self, params: &BTreeMap<String, String>) -> Self {
        self.params = params.clone();
        self
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("document serialises");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct ReducedSpaceDocument {
    provenance: Provenance,
    invariants: Vec<String>,
    relations: Vec<String>,
    inequalities: Vec<String>,
    momentum_constraints: Vec<ConstraintEntry>,
}

#[derive(Serialize)]
struct ConstraintEntry {
    expr: String,
    level: String,
}

pub fn reduced_space_document(
    reduced: &ReducedSpace,
    model: &VerifiedModel,
    provenance: Provenance,
) -> String {
    let names = model.invariant_names();
    to_json(&ReducedSpaceDocument {
        provenance,
        invariants: names.iter().map(|s| s.to_string()).collect(),
        relations: reduced
            .base
            .relations
            .iter()
            .map(|p| p.display(&names))
            .collect(),
        inequalities: reduced
            .base
            .inequalities
            .iter()
            .map(|p| p.display(&names))
            .collect(),
        momentum_constraints: reduced
            .momentum_constraints
            .iter()
            .map(|(p, level)| ConstraintEntry {
                expr: p.display(&names),
                level: level.to_string(),
            })
            .collect(),
    })
}

#[derive(Serialize)]
struct InducedStructureDocument {
    provenance: Provenance,
    invariants: Vec<String>,
    degree_bound: u32,
    entries: Vec<Vec<String>>,
}

pub fn induced_structure_document(
    induced: &InducedStructure,
    provenance: Provenance,
) -> String {
    let names: Vec<&str> = induced.invariant_names.iter().map(|s| s.as_str()).collect();
    to_json(&InducedStructureDocument {
        provenance,
        invariants: induced.invariant_names.clone(),
        degree_bound: induced.degree_bound,
        entries: induced
            .entries
            .iter()
            .map(|row| row.iter().map(|p| p.display(&names)).collect())
            .collect(),
    })
}

#[derive(Serialize)]
struct MeshDocument {
    provenance: Provenance,
    vertices: Vec<Vec<f64>>,
    triangles: Vec<[usize; 3]>,
    residual_max: f64,
    empty_flagged: bool,
}

pub fn mesh_document(mesh: &Mesh, provenance: Provenance) -> String {
    to_json(&MeshDocument {
        provenance,
        vertices: mesh.vertices.clone(),
        triangles: mesh.triangles.clone(),
        residual_max: mesh.residual_max,
        empty_flagged: mesh.empty_flagged,
    })
}

#[derive(Serialize)]
struct EquilibriaDocument {
    provenance: Provenance,
    results: Vec<EquilibriumEntry>,
    notes: Vec<String>,
}

#[derive(Serialize)]
struct EquilibriumEntry {
    point: Vec<f64>,
    image: Vec<f64>,
    multipliers: Vec<f64>,
    residual: f64,
    stability: String,
    projected_spectrum: Vec<f64>,
    subspace_dim: usize,
    iterations: usize,
    seed_index: usize,
}

impl From<&EquilibriumResult> for EquilibriumEntry {
    fn from(r: &EquilibriumResult) -> Self {
        EquilibriumEntry {
            point: r.point.clone(),
            image: r.image.clone(),
            multipliers: r.multipliers.clone(),
            residual: r.residual,
            stability: r.stability.label().to_string(),
            projected_spectrum: r.projected_spectrum.clone(),
            subspace_dim: r.subspace_dim,
            iterations: r.iterations,
            seed_index: r.seed_index,
        }
    }
}

pub fn equilibria_document(outcome: &SolveOutcome, provenance: Provenance) -> String {
    to_json(&EquilibriaDocument {
        provenance,
        results: outcome.results.iter().map(EquilibriumEntry::from).collect(),
        notes: outcome.notes.clone(),
    })
}

#[derive(Serialize)]
struct RankReportDocument {
    provenance: Provenance,
    reports: Vec<RankReportEntry>,
}

#[derive(Serialize)]
struct RankReportEntry {
    point: Vec<f64>,
    image: Vec<f64>,
    rank_drho: usize,
    rank_dj: usize,
    rank_orbit_span: usize,
    rank_invariant_span: usize,
    rank_induced: usize,
    induced_rank_defect: i64,
    identity_ok: bool,
}

pub fn rank_report_document(reports: &[RankReport], provenance: Provenance) -> String {
    to_json(&RankReportDocument {
        provenance,
        reports: reports
            .iter()
            .map(|r| RankReportEntry {
                point: r.point.clone(),
                image: r.image.clone(),
                rank_drho: r.rank_drho,
                rank_dj: r.rank_dj,
                rank_orbit_span: r.rank_orbit_span,
                rank_invariant_span: r.rank_invariant_span,
                rank_induced: r.rank_induced,
                induced_rank_defect: r.induced_rank_defect(),
                identity_ok: r.identity_ok,
            })
            .collect(),
    })
}

/// Aligned text table for rank reports, printed by the CLI.
pub fn rank_table(reports: &[RankReport]) -> String {
    let mut out = String::new();
    out.push_str("  drho    dJ  span(XJ)  span(Xrho)  induced  defect  identity\n");
    for r in reports {
        out.push_str(&format!(
            "{:>6}{:>6}{:>10}{:>12}{:>9}{:>8}  {}\n",
            r.rank_drho,
            r.rank_dj,
            r.rank_orbit_span,
            r.rank_invariant_span,
            r.rank_induced,
            r.induced_rank_defect(),
            if r.identity_ok { "ok" } else { "VIOLATED" },
        ));
    }
    out
}

#[derive(Serialize)]
struct PrincipalStratumDocument {
    provenance: Provenance,
    samples: usize,
    max_signature: Option<[usize; 2]>,
    frequency: f64,
}

pub fn principal_stratum_document(
    estimate: &PrincipalStratumEstimate,
    provenance: Provenance,
) -> String {
    to_json(&PrincipalStratumDocument {
        provenance,
        samples: estimate.samples,
        max_signature: estimate
            .max_signature
            .map(|s| [s.rank_drho, s.rank_orbit_span]),
        frequency: estimate.frequency,
    })
}

/// Text rendering of a verification report for the CLI.
pub fn verification_text(report: &crate::model::VerificationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("model: {}\n", report.model));
    out.push_str("invariance {rho_i, J_j}:\n");
    for pair in &report.invariance {
        match &pair.residual {
            None => out.push_str(&format!(
                "  {{{}, {}}} = 0  PASS\n",
                pair.invariant, pair.generator
            )),
            Some(_) => out.push_str(&format!(
                "  {{{}, {}}} != 0  FAIL\n",
                pair.invariant, pair.generator
            )),
        }
    }
    out.push_str("relations:\n");
    for rel in &report.relations {
        let mode = match rel.mode {
            crate::model::RelationMode::Pullback => "pullback",
            crate::model::RelationMode::CasimirOfStructure => "casimir-of-structure",
        };
        match &rel.residual {
            None => out.push_str(&format!("  relation {} ({mode})  PASS\n", rel.index)),
            Some(_) => out.push_str(&format!("  relation {} ({mode})  FAIL\n", rel.index)),
        }
    }
    out.push_str("casimirs:\n");
    for c in &report.casimirs {
        match (&c.pass, &c.offending) {
            (true, _) => out.push_str(&format!("  casimir {}  PASS\n", c.index)),
            (false, Some(name)) => out.push_str(&format!(
                "  casimir {}  FAIL (bracket with {} nonzero)\n",
                c.index, name
            )),
            (false, None) => out.push_str(&format!("  casimir {}  FAIL\n", c.index)),
        }
    }
    out.push_str("inequalities (exact sampling):\n");
    for ineq in &report.inequalities {
        out.push_str(&format!(
            "  inequality {}  {} ({} samples)\n",
            ineq.index,
            if ineq.pass { "PASS" } else { "FAIL" },
            ineq.samples
        ));
    }
    if let Some(induced) = &report.induced {
        let names: Vec<&str> = induced.invariant_names.iter().map(|s| s.as_str()).collect();
        out.push_str(&format!(
            "induced structure (degree bound {}):\n",
            induced.degree_bound
        ));
        for (i, row) in induced.entries.iter().enumerate() {
            let rendered: Vec<String> = row.iter().map(|p| p.display(&names)).collect();
            out.push_str(&format!("  W[{i}] = [{}]\n", rendered.join(", ")));
        }
    }
    for note in &report.notes {
        out.push_str(&format!("note: {note}\n"));
    }
    out.push_str(if report.all_pass() {
        "verification: PASS\n"
    } else {
        "verification: FAIL\n"
    });
    out
}
