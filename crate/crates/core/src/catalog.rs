//! Built-in model catalog.
//!
//! Seven systems: the coadjoint `SO(3)` action on `R^3`, the lifted and the
//! diagonal `SO(3)` actions on `R^6`, the diagonal action on `R^9` and its
//! scaled orbit-space model on `R^4`, the `k:l` resonance oscillator on `R^4`,
//! and the `T^3`-symmetric perturbed oscillator on `R^8`. Every instantiation
//! passes full symbolic verification before it is handed out.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::model::{NamedPoly, SymmetryModel, VerifiedModel};
use crate::poisson::{block_so3_structure, PoissonStructure};
use crate::poly::Polynomial;

/// Key/value parameters for parameterised models; values are integers or
/// rationals in the `p/q` form of the expression grammar.
pub type Params = BTreeMap<String, String>;

/// One catalog entry for listings.
pub struct CatalogEntry {
    pub key: &'static str,
    pub params: &'static str,
    pub summary: &'static str,
}

pub fn list() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            key: "so3_r3",
            params: "",
            summary: "coadjoint SO(3) on R^3, rigid-body structure, orbit space a half-line",
        },
        CatalogEntry {
            key: "so3_cotangent_r6",
            params: "",
            summary: "lifted SO(3) on T*R^3 = R^6, Lagrange-identity cone orbit space",
        },
        CatalogEntry {
            key: "so3_diag_r6",
            params: "",
            summary: "diagonal SO(3) on R^6 (two angular momenta), zero induced structure",
        },
        CatalogEntry {
            key: "so3_diag_r9",
            params: "",
            summary: "diagonal SO(3) on R^9 (three angular momenta), Gram relation",
        },
        CatalogEntry {
            key: "so3_diag_r9_scaled",
            params: "cx,cy,cz (positive rationals, default 1,1,1)",
            summary: "stage-reduced R^4 model in invariant coordinates with elliptope relation",
        },
        CatalogEntry {
            key: "kl_resonance",
            params: "k (int >= 1), l (nonzero int, |k| != |l|; default 1,2)",
            summary: "k:l resonance S^1 action on R^4, quartic orbit-space relation",
        },
        CatalogEntry {
            key: "oscillator_r8",
            params: "",
            summary: "T^3-symmetric perturbed oscillator on R^8 with quartic reduced spaces",
        },
    ]
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let parse_int = |t: &str| -> Result<BigInt> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::InvalidParams(format!("not an integer: `{t}`")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let den = parse_int(d)?;
            if den.is_zero() {
                return Err(Error::InvalidParams("zero denominator".into()));
            }
            Ok(BigRational::new(parse_int(n)?, den))
        }
        None => Ok(BigRational::from_integer(parse_int(s)?)),
    }
}

fn param_rational(params: &Params, key: &str, default: BigRational) -> Result<BigRational> {
    match params.get(key) {
        Some(s) => parse_rational(s),
        None => Ok(default),
    }
}

fn param_int(params: &Params, key: &str, default: i64) -> Result<i64> {
    match params.get(key) {
        Some(s) => s
            .trim()
            .parse::<i64>()
            .map_err(|_| Error::InvalidParams(format!("parameter `{key}` must be an integer"))),
        None => Ok(default),
    }
}

fn check_param_keys(params: &Params, allowed: &[&str]) -> Result<()> {
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::InvalidParams(format!("unknown parameter `{k}`")));
        }
    }
    Ok(())
}

fn verified(model: SymmetryModel) -> Result<VerifiedModel> {
    VerifiedModel::new(model).map_err(|f| {
        Error::Verification(format!(
            "catalog model `{}` failed its own verification",
            f.model.name
        ))
    })
}

/// Instantiate a catalog model by key; parameters where applicable.
pub fn catalog_model(key: &str, params: &Params) -> Result<VerifiedModel> {
    match key {
        "so3_r3" => {
            check_param_keys(params, &[])?;
            verified(so3_r3())
        }
        "so3_cotangent_r6" => {
            check_param_keys(params, &[])?;
            verified(so3_cotangent_r6())
        }
        "so3_diag_r6" => {
            check_param_keys(params, &[])?;
            verified(so3_diag_r6())
        }
        "so3_diag_r9" => {
            check_param_keys(params, &[])?;
            verified(so3_diag_r9())
        }
        "so3_diag_r9_scaled" => {
            check_param_keys(params, &["cx", "cy", "cz"])?;
            let cx = param_rational(params, "cx", BigRational::one())?;
            let cy = param_rational(params, "cy", BigRational::one())?;
            let cz = param_rational(params, "cz", BigRational::one())?;
            for (name, c) in [("cx", &cx), ("cy", &cy), ("cz", &cz)] {
                if !c.is_positive() {
                    return Err(Error::InvalidParams(format!("{name} must be positive")));
                }
            }
            verified(so3_diag_r9_scaled(&cx, &cy, &cz))
        }
        "kl_resonance" => {
            check_param_keys(params, &["k", "l"])?;
            let k = param_int(params, "k", 1)?;
            let l = param_int(params, "l", 2)?;
            if k < 1 {
                return Err(Error::InvalidParams("k must be >= 1".into()));
            }
            if l == 0 {
                return Err(Error::InvalidParams("l must be nonzero".into()));
            }
            if k.abs() == l.abs() {
                return Err(Error::InvalidParams("|k| = |l| is excluded".into()));
            }
            verified(kl_resonance(k as u32, l))
        }
        "oscillator_r8" => {
            check_param_keys(params, &[])?;
            verified(oscillator_r8())
        }
        _ => Err(Error::UnknownCatalogKey(key.to_string())),
    }
}

fn p(expr: &str, names: &[&str]) -> Polynomial {
    Polynomial::parse(expr, names).expect("catalog expression parses")
}

fn named(name: &str, expr: &str, names: &[&str]) -> NamedPoly {
    NamedPoly {
        name: name.to_string(),
        poly: p(expr, names),
    }
}

fn so3_r3() -> SymmetryModel {
    let v = ["x1", "x2", "x3"];
    SymmetryModel {
        name: "so3_r3".into(),
        variables: v.iter().map(|s| s.to_string()).collect(),
        structure: block_so3_structure(1),
        generators: vec![
            named("J1", "x1", &v),
            named("J2", "x2", &v),
            named("J3", "x3", &v),
        ],
        invariants: vec![named("r", "x1^2 + x2^2 + x3^2", &v)],
        relations: vec![],
        inequalities: vec![p("r", &["r"])],
        casimirs: vec![p("r", &["r"])],
        degree_bound: 2,
    }
}

fn so3_cotangent_r6() -> SymmetryModel {
    let v = ["x1", "x2", "x3", "y1", "y2", "y3"];
    let inv = ["a", "b", "c", "d"];
    SymmetryModel {
        name: "so3_cotangent_r6".into(),
        variables: v.iter().map(|s| s.to_string()).collect(),
        structure: PoissonStructure::canonical(3),
        generators: vec![
            named("J1", "x2*y3 - x3*y2", &v),
            named("J2", "x3*y1 - x1*y3", &v),
            named("J3", "x1*y2 - x2*y1", &v),
        ],
        invariants: vec![
            named("a", "x1^2 + x2^2 + x3^2", &v),
            named("b", "y1^2 + y2^2 + y3^2", &v),
            named("c", "x1*y1 + x2*y2 + x3*y3", &v),
            named(
                "d",
                "(x2*y3-x3*y2)^2 + (x3*y1-x1*y3)^2 + (x1*y2-x2*y1)^2",
                &v,
            ),
        ],
        relations: vec![p("a*b - c^2 - d", &inv)],
        inequalities: vec![p("a", &inv), p("b", &inv), p("d", &inv)],
        casimirs: vec![p("d", &inv)],
        degree_bound: 2,
    }
}

fn so3_diag_r6() -> SymmetryModel {
    let v = ["x1", "x2", "x3", "y1", "y2", "y3"];
    let inv = ["a", "b", "c", "d"];
    SymmetryModel {
        name: "so3_diag_r6".into(),
        variables: v.iter().map(|s| s.to_string()).collect(),
        structure: block_so3_structure(2),
        generators: vec![
            named("J1", "x1 + y1", &v),
            named("J2", "x2 + y2", &v),
            named("J3", "x3 + y3", &v),
        ],
        invariants: vec![
            named("a", "x1^2 + x2^2 + x3^2", &v),
            named("b", "y1^2 + y2^2 + y3^2", &v),
            named("c", "x1*y1 + x2*y2 + x3*y3", &v),
            named(
                "d",
                "(x2*y3-x3*y2)^2 + (x3*y1-x1*y3)^2 + (x1*y2-x2*y1)^2",
                &v,
            ),
        ],
        relations: vec![p("a*b - c^2 - d", &inv)],
        inequalities: vec![p("a", &inv), p("b", &inv), p("d", &inv)],
        // The induced structure vanishes identically, so the coadjoint radii
        // and the total momentum are all Casimirs.
        casimirs: vec![p("a", &inv), p("b", &inv), p("a + b + 2*c", &inv)],
        degree_bound: 2,
    }
}

fn so3_diag_r9() -> SymmetryModel {
    let v = ["x1", "x2", "x3", "y1", "y2", "y3", "z1", "z2", "z3"];
    let inv = ["ax", "ay", "az", "cxy", "cxz", "cyz", "t"];
    SymmetryModel {
        name: "so3_diag_r9".into(),
        variables: v.iter().map(|s| s.to_string()).collect(),
        structure: block_so3_structure(3),
        generators: vec![
            named("J1", "x1 + y1 + z1", &v),
            named("J2", "x2 + y2 + z2", &v),
            named("J3", "x3 + y3 + z3", &v),
        ],
        invariants: vec![
            named("ax", "x1^2 + x2^2 + x3^2", &v),
            named("ay", "y1^2 + y2^2 + y3^2", &v),
            named("az", "z1^2 + z2^2 + z3^2", &v),
            named("cxy", "x1*y1 + x2*y2 + x3*y3", &v),
            named("cxz", "x1*z1 + x2*z2 + x3*z3", &v),
            named("cyz", "y1*z1 + y2*z2 + y3*z3", &v),
            // Triple product <(y x x), z>.
            named(
                "t",
                "(y2*x3 - y3*x2)*z1 + (y3*x1 - y1*x3)*z2 + (y1*x2 - y2*x1)*z3",
                &v,
            ),
        ],
        relations: vec![p(
            "t^2 - ax*ay*az - 2*cxy*cxz*cyz + cxz^2*ay + cyz^2*ax + cxy^2*az",
            &inv,
        )],
        inequalities: vec![
            p("ax", &inv),
            p("ay", &inv),
            p("az", &inv),
            p("ax*ay - cxy^2", &inv),
            p("ax*az - cxz^2", &inv),
            p("ay*az - cyz^2", &inv),
        ],
        casimirs: vec![
            p("ax", &inv),
            p("ay", &inv),
            p("az", &inv),
            p("ax + ay + az + 2*cxy + 2*cxz + 2*cyz", &inv),
        ],
        degree_bound: 2,
    }
}

/// Stage-reduced model in invariant coordinates `(v1..v4)` on the product of
/// spheres of radii `(cx, cy, cz)`. The structure matrix is the induced
/// bracket of the `R^9` model restricted to the coadjoint orbit and written
/// in the scaled invariants.
fn so3_diag_r9_scaled(cx: &BigRational, cy: &BigRational, cz: &BigRational) -> SymmetryModel {
    let v = ["v1", "v2", "v3", "v4"];
    let n = 4usize;
    let rx = Polynomial::constant(n, cx.recip());
    let ry = Polynomial::constant(n, cy.recip());
    let rz = Polynomial::constant(n, cz.recip());
    let v1 = Polynomial::var(n, 0);
    let v2 = Polynomial::var(n, 1);
    let v3 = Polynomial::var(n, 2);
    let v4 = Polynomial::var(n, 3);

    let mut w = vec![vec![Polynomial::zero(n); n]; n];
    w[0][1] = v4.mul(&rx);
    w[0][2] = v4.mul(&ry).neg();
    w[1][2] = v4.mul(&rz);
    // Fourth column: brackets {v_i, v4} on the coadjoint orbit.
    w[0][3] = v1.mul(&v3).sub(&v2).mul(&rx).sub(&v1.mul(&v2).sub(&v3).mul(&ry));
    w[1][3] = v1.sub(&v2.mul(&v3)).mul(&rx).add(&v1.mul(&v2).sub(&v3).mul(&rz));
    w[2][3] = v2.mul(&v3).sub(&v1).mul(&ry).sub(&v1.mul(&v3).sub(&v2).mul(&rz));
    for i in 0..n {
        for j in 0..i {
            w[i][j] = w[j][i].neg();
        }
    }
    let structure = PoissonStructure::matrix(w).expect("antisymmetric by construction");

    // Total angular momentum plane: <x,y> + <x,z> + <y,z> in scaled coordinates.
    let momentum = v1
        .scale(&(cx * cy))
        .add(&v2.scale(&(cx * cz)))
        .add(&v3.scale(&(cy * cz)));
    let elliptope = p("v4^2 - 1 - 2*v1*v2*v3 + v1^2 + v2^2 + v3^2", &v);

    SymmetryModel {
        name: "so3_diag_r9_scaled".into(),
        variables: v.iter().map(|s| s.to_string()).collect(),
        structure,
        generators: vec![NamedPoly {
            name: "Jtot".into(),
            poly: momentum.clone(),
        }],
        invariants: vec![
            named("v1", "v1", &v),
            named("v2", "v2", &v),
            named("v3", "v3", &v),
            named("v4", "v4", &v),
        ],
        relations: vec![elliptope.clone()],
        inequalities: vec![p("1 - v1^2", &v), p("1 - v2^2", &v), p("1 - v3^2", &v)],
        casimirs: vec![momentum, elliptope],
        degree_bound: 2,
    }
}

/// Complex polynomial as a (re, im) pair; used to expand resonance invariants.
#[derive(Clone)]
struct ComplexPoly {
    re: Polynomial,
    im: Polynomial,
}

impl ComplexPoly {
    fn mul(&self, other: &ComplexPoly) -> ComplexPoly {
        ComplexPoly {
            re: self.re.mul(&other.re).sub(&self.im.mul(&other.im)),
            im: self.re.mul(&other.im).add(&self.im.mul(&other.re)),
        }
    }

    fn pow(&self, e: u32, arity: usize) -> ComplexPoly {
        let mut acc = ComplexPoly {
            re: Polynomial::one(arity),
            im: Polynomial::zero(arity),
        };
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }
}

fn kl_resonance(k: u32, l: i64) -> SymmetryModel {
    let v = ["x1", "x2", "y1", "y2"];
    let inv = ["I1", "I2", "R1", "R2"];
    let n = 4usize;
    let la = l.unsigned_abs() as u32;

    let kq = q(k as i64, 1);
    let lq = q(l, 1);
    let h1 = p("x1^2 + y1^2", &v);
    let h2 = p("x2^2 + y2^2", &v);
    let i1 = h1.scale(&(&kq * q(1, 2))).add(&h2.scale(&(&lq * q(1, 2))));
    let i2 = h1.scale(&(&kq * q(1, 2))).sub(&h2.scale(&(&lq * q(1, 2))));

    // Resonant pair: w = z1^|l| * (conj z2)^k for l > 0, z1^|l| * z2^k for l < 0,
    // with z_j = x_j + i y_j; R1 = Re w, R2 = Im w, both of degree k + |l|.
    let z1 = ComplexPoly {
        re: Polynomial::var(n, 0),
        im: Polynomial::var(n, 2),
    };
    let z2 = ComplexPoly {
        re: Polynomial::var(n, 1),
        im: if l > 0 {
            Polynomial::var(n, 3).neg()
        } else {
            Polynomial::var(n, 3)
        },
    };
    let w = z1.pow(la, n).mul(&z2.pow(k, n));

    // Relation: R1^2 + R2^2 = ((I1+I2)/k)^|l| * ((I1-I2)/l)^k.
    let iu = p("I1 + I2", &inv).scale(&kq.recip());
    let iv = p("I1 - I2", &inv).scale(&lq.recip());
    let relation = p("R1^2 + R2^2", &inv).sub(&iu.pow(la).mul(&iv.pow(k)));

    SymmetryModel {
        name: "kl_resonance".into(),
        variables: v.iter().map(|s| s.to_string()).collect(),
        structure: PoissonStructure::canonical(2),
        generators: vec![NamedPoly {
            name: "I1".into(),
            poly: i1.clone(),
        }],
        invariants: vec![
            NamedPoly {
                name: "I1".into(),
                poly: i1,
            },
            NamedPoly {
                name: "I2".into(),
                poly: i2,
            },
            NamedPoly {
                name: "R1".into(),
                poly: w.re,
            },
            NamedPoly {
                name: "R2".into(),
                poly: w.im,
            },
        ],
        relations: vec![relation],
        inequalities: vec![p("I1 + I2", &inv), p("I1 - I2", &inv).scale(&lq.recip())],
        casimirs: vec![p("I1", &inv)],
        degree_bound: (3u32).max(k + la - 1),
    }
}

fn oscillator_r8() -> SymmetryModel {
    let v = ["q1", "q2", "q3", "q4", "Q1", "Q2", "Q3", "Q4"];
    let inv = ["H2", "Xi", "L1", "N", "K", "S"];
    let h2 = p(
        "1/2*(Q1^2+Q2^2+Q3^2+Q4^2) + 1/2*(q1^2+q2^2+q3^2+q4^2)",
        &v,
    );
    let xi = p("q1*Q2 - Q1*q2 + q3*Q4 - Q3*q4", &v);
    let l1 = p("q3*Q4 - Q3*q4 - q1*Q2 + Q1*q2", &v);
    let kk = p(
        "1/2*(-(q1^2 + Q1^2) - (q2^2 + Q2^2) + (q3^2 + Q3^2) + (q4^2 + Q4^2))",
        &v,
    );
    let k2 = p("(Q2*Q3 + q2*q3) - (Q1*Q4 + q1*q4)", &v);
    // The q2*q4 cross term makes K3 invariant under the torus flows; with the
    // q1*q4 variant the dual-pair identities do not close.
    let k3 = p("-(Q1*Q3 + q1*q3) - (Q2*Q4 + q2*q4)", &v);
    let l2 = p("(q1*Q3 - Q1*q3) + (q2*Q4 - Q2*q4)", &v);
    let l3 = p("(q2*Q3 - Q2*q3) - (q1*Q4 - Q1*q4)", &v);
    let half = q(1, 2);
    let nn = k2
        .mul(&k2)
        .add(&k3.mul(&k3))
        .scale(&half)
        .sub(&l2.mul(&l2).add(&l3.mul(&l3)).scale(&half));
    let ss = k2.mul(&l3).sub(&k3.mul(&l2));

    SymmetryModel {
        name: "oscillator_r8".into(),
        variables: v.iter().map(|s| s.to_string()).collect(),
        structure: PoissonStructure::canonical(4),
        generators: vec![
            NamedPoly {
                name: "H2".into(),
                poly: h2.clone(),
            },
            NamedPoly {
                name: "Xi".into(),
                poly: xi.clone(),
            },
            NamedPoly {
                name: "L1".into(),
                poly: l1.clone(),
            },
        ],
        invariants: vec![
            NamedPoly {
                name: "H2".into(),
                poly: h2,
            },
            NamedPoly {
                name: "Xi".into(),
                poly: xi,
            },
            NamedPoly {
                name: "L1".into(),
                poly: l1,
            },
            NamedPoly {
                name: "N".into(),
                poly: nn,
            },
            NamedPoly {
                name: "K".into(),
                poly: kk,
            },
            NamedPoly {
                name: "S".into(),
                poly: ss,
            },
        ],
        relations: vec![p(
            "(H2^2 + Xi^2 - L1^2 - K^2)^2 - 4*(H2*Xi - L1*K)^2 - 4*N^2 - 4*S^2",
            &inv,
        )],
        inequalities: vec![
            p("H2", &inv),
            p("H2 - Xi", &inv),
            p("H2 + Xi", &inv),
            p("H2 - L1", &inv),
            p("H2 + L1", &inv),
            p("H2 - K", &inv),
            p("H2 + K", &inv),
        ],
        casimirs: vec![p("H2", &inv), p("Xi", &inv), p("L1", &inv)],
        degree_bound: 3,
    }
}

/// The perturbed-oscillator Hamiltonian family on the orbit space, as a
/// polynomial in the invariants `(H2, Xi, L1, N, K, S)` for a rational `beta`.
pub fn oscillator_hamiltonian(beta: &BigRational) -> Polynomial {
    let inv = ["H2", "Xi", "L1", "N", "K", "S"];
    let b2 = beta * beta;
    let c_k2h = (&b2 * q(9, 4)) - q(3, 2); // 3/4 (3 b^2 - 2)
    let c_kxl = BigRational::one() - &b2; // (1 - b^2)
    let c_nh = q(2, 1) - (&b2 * q(1, 2)); // 1/2 (4 - b^2)
    let c_h3 = q(3, 2) + (&b2 * q(1, 4)); // 3/2 + b^2/4
    let c_deg = (&b2 * q(1, 4)) + q(1, 2); // (b^2/2 + 1) / 2
    p("H2", &inv)
        .add(&p("K^2*H2", &inv).scale(&c_k2h))
        .add(&p("K*Xi*L1", &inv).scale(&c_kxl))
        .add(&p("N*H2", &inv).scale(&c_nh))
        .add(&p("H2^3", &inv).scale(&c_h3))
        .sub(&p("H2*(L1^2 + Xi^2)", &inv).scale(&c_deg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{export_model, load_model};
    use crate::rng::DeterministicRng;

    #[test]
    fn all_catalog_models_verify_exactly() {
        for entry in list() {
            let model = catalog_model(entry.key, &Params::new())
                .unwrap_or_else(|e| panic!("{} failed: {e}", entry.key));
            assert!(model.report().all_pass(), "{} report", entry.key);
        }
    }

    #[test]
    fn kl_parameter_validation() {
        let mut params = Params::new();
        params.insert("k".into(), "2".into());
        params.insert("l".into(), "2".into());
        assert!(matches!(
            catalog_model("kl_resonance", &params),
            Err(Error::InvalidParams(_))
        ));
        params.insert("l".into(), "-2".into());
        assert!(matches!(
            catalog_model("kl_resonance", &params),
            Err(Error::InvalidParams(_))
        ));
        params.insert("l".into(), "0".into());
        assert!(matches!(
            catalog_model("kl_resonance", &params),
            Err(Error::InvalidParams(_))
        ));
        params.insert("l".into(), "3".into());
        assert!(catalog_model("kl_resonance", &params).is_ok());
        assert!(matches!(
            catalog_model("nope", &Params::new()),
            Err(Error::UnknownCatalogKey(_))
        ));
    }

    #[test]
    fn kl_resonance_bracket_pattern() {
        // {I1, R_i} = 0 is covered by invariance; here the derived constants:
        // for l > 0, {I2, R1} = -2kl R2 and {I2, R2} = 2kl R1.
        for (k, l) in [(1i64, 2i64), (1, -2), (2, 3), (1, 3)] {
            let mut params = Params::new();
            params.insert("k".into(), k.to_string());
            params.insert("l".into(), l.to_string());
            let m = catalog_model("kl_resonance", &params).unwrap();
            let i2 = &m.invariants[1].poly;
            let r1 = &m.invariants[2].poly;
            let r2 = &m.invariants[3].poly;
            let c = q(2 * k * l.abs(), 1);
            let b1 = m.structure.bracket(i2, r1).unwrap();
            assert!(b1.add(&r2.scale(&c)).is_zero(), "({k},{l}) I2-R1");
            let b2 = m.structure.bracket(i2, r2).unwrap();
            assert!(b2.sub(&r1.scale(&c)).is_zero(), "({k},{l}) I2-R2");
        }
    }

    #[test]
    fn kl_resonance_r1r2_bracket_in_invariants() {
        // {R1, R2} rewrites exactly; for (1,2) the derived value is
        // (I1+I2)(I1-3I2), differing from a fixed-sign variant only by the
        // crate-wide bracket convention.
        let m = catalog_model("kl_resonance", &Params::new()).unwrap();
        let r1 = &m.invariants[2].poly;
        let r2 = &m.invariants[3].poly;
        let b = m.structure.bracket(r1, r2).unwrap();
        let inv = ["I1", "I2", "R1", "R2"];
        let expected = p("(I1 + I2)*(I1 - 3*I2)", &inv);
        let pulled = expected.substitute(&m.invariant_polys()).unwrap();
        assert!(b.sub(&pulled).is_zero());
    }

    #[test]
    fn scaled_model_casimirs_and_jacobi() {
        let mut params = Params::new();
        params.insert("cx".into(), "1/2".into());
        params.insert("cy".into(), "3".into());
        params.insert("cz".into(), "2".into());
        let m = catalog_model("so3_diag_r9_scaled", &params).unwrap();
        // Both declared Casimirs have identically vanishing Hamiltonian fields.
        for c in &m.casimirs {
            for comp in m.structure.hamiltonian_field(c).unwrap() {
                assert!(comp.is_zero());
            }
        }
        // Jacobi identity for W(v), randomized low-degree triples.
        let mut rng = DeterministicRng::new(3, 9);
        for _ in 0..5 {
            let rand_poly = |rng: &mut DeterministicRng| {
                let mut poly = Polynomial::zero(4);
                for _ in 0..4 {
                    let mut exps = [0u32; 4];
                    for e in exps.iter_mut() {
                        *e = (rng.below(3)) as u32 / 2;
                    }
                    let c = q(rng.below(7) as i64 - 3, 1 + rng.below(2) as i64);
                    poly = poly.add(&Polynomial::monomial(4, &exps, c));
                }
                poly
            };
            let f = rand_poly(&mut rng);
            let g = rand_poly(&mut rng);
            let h = rand_poly(&mut rng);
            let s = &m.structure;
            let cyc = s
                .bracket(&f, &s.bracket(&g, &h).unwrap())
                .unwrap()
                .add(&s.bracket(&g, &s.bracket(&h, &f).unwrap()).unwrap())
                .add(&s.bracket(&h, &s.bracket(&f, &g).unwrap()).unwrap());
            assert!(cyc.is_zero(), "Jacobi failed for W(v)");
        }
    }

    #[test]
    fn scaled_matrix_derives_from_r9_model() {
        // Independent derivation: compute {., .} of the unscaled invariants in
        // the R^9 model, rewrite in the invariants, restrict to the coadjoint
        // orbit (ax = cx^2 etc.) and rescale; the result must equal W(v).
        let r9 = catalog_model("so3_diag_r9", &Params::new()).unwrap();
        let (cx, cy, cz) = (q(1, 2), q(3, 1), q(2, 1));
        let mut params = Params::new();
        params.insert("cx".into(), "1/2".into());
        params.insert("cy".into(), "3".into());
        params.insert("cz".into(), "2".into());
        let scaled = catalog_model("so3_diag_r9_scaled", &params).unwrap();
        let induced = crate::orbitmap::induced_structure(&r9, 2).unwrap();

        // Unscaled pairings and their normalisations: v1 = cxy/(cx cy), etc.
        let scales = [&cx * &cy, &cx * &cz, &cy * &cz, &cx * &cy * &cz];
        let idx = [3usize, 4, 5, 6]; // cxy, cxz, cyz, t in the r9 invariant order
        // Substitution sending r9 invariants to scaled coordinates on the orbit:
        // ax -> cx^2, ..., cxy -> cx*cy*v1, ..., t -> cx*cy*cz*v4.
        let subs: Vec<Polynomial> = vec![
            Polynomial::constant(4, &cx * &cx),
            Polynomial::constant(4, &cy * &cy),
            Polynomial::constant(4, &cz * &cz),
            Polynomial::var(4, 0).scale(&scales[0]),
            Polynomial::var(4, 1).scale(&scales[1]),
            Polynomial::var(4, 2).scale(&scales[2]),
            Polynomial::var(4, 3).scale(&scales[3]),
        ];
        for i in 0..4 {
            for j in 0..4 {
                let entry = induced.entries[idx[i]][idx[j]]
                    .substitute(&subs)
                    .unwrap()
                    .scale(&(&scales[i] * &scales[j]).recip());
                let expected = scaled.structure.entry(i, j);
                assert!(
                    entry.sub(&expected).is_zero(),
                    "scaled structure mismatch at ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn oscillator_quartic_holds_numerically() {
        let m = catalog_model("oscillator_r8", &Params::new()).unwrap();
        let rel = &m.relations[0];
        let mut rng = DeterministicRng::new(101, 0);
        for _ in 0..1000 {
            let x = rng.normal_vec(8);
            let image = crate::orbitmap::orbit_eval(&m, &x).unwrap();
            let val = rel.eval_f64(&image).unwrap();
            let scale = image.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
            assert!(
                val.abs() <= 1e-10 * scale.powi(4),
                "quartic residual {val} at scale {scale}"
            );
        }
    }

    #[test]
    fn scaled_relation_holds_on_random_sphere_triples() {
        let m = catalog_model("so3_diag_r9_scaled", &Params::new()).unwrap();
        let rel = &m.relations[0];
        let mut rng = DeterministicRng::new(7, 3);
        for _ in 0..1000 {
            // Random unit vectors on three spheres.
            let mut unit = || {
                let v = rng.normal_vec(3);
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                [v[0] / n, v[1] / n, v[2] / n]
            };
            let x = unit();
            let y = unit();
            let z = unit();
            let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            let cross = |a: &[f64; 3], b: &[f64; 3]| {
                [
                    a[1] * b[2] - a[2] * b[1],
                    a[2] * b[0] - a[0] * b[2],
                    a[0] * b[1] - a[1] * b[0],
                ]
            };
            let v = [dot(&x, &y), dot(&x, &z), dot(&y, &z), dot(&cross(&y, &x), &z)];
            let res = rel.eval_f64(&v).unwrap();
            assert!(res.abs() <= 1e-12, "elliptope residual {res}");
        }
    }

    #[test]
    fn export_documents_roundtrip_and_are_stable() {
        for entry in list() {
            let m = catalog_model(entry.key, &Params::new()).unwrap();
            let doc = export_model(&m);
            let reloaded = load_model(&doc).unwrap();
            let doc2 = export_model(&reloaded);
            assert_eq!(doc, doc2, "{} export not stable", entry.key);
            assert!(VerifiedModel::new(reloaded).is_ok());
        }
    }
}
