//! Machine-readable reports mirroring the library's result types, plus a
//! plain-text rendering.  JSON serialization is deterministic (stable field
//! and key order), and reports round-trip through serde unchanged.

use serde::{Deserialize, Serialize};

use crate::canonical::PointTransformation;
use crate::expr::rnf::Rnf;
use crate::liegeom::{AlgebraReport, SymmetryCertificate, VectorField};
use crate::transform::{ClassificationReport, PDESystem, Reduction};

use super::grammar::render_expr;

fn rnf_string(r: &Rnf) -> String {
    render_expr(&r.to_expr())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDoc {
    pub n: u32,
    pub m: u32,
    pub xi: Vec<String>,
    pub eta: Vec<String>,
}

impl From<&VectorField> for FieldDoc {
    fn from(f: &VectorField) -> Self {
        FieldDoc {
            n: f.n,
            m: f.m,
            xi: f.xi.iter().map(render_expr).collect(),
            eta: f.eta.iter().map(render_expr).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDoc {
    pub n: u32,
    pub m: u32,
    pub equations: Vec<String>,
}

impl From<&PDESystem> for SystemDoc {
    fn from(s: &PDESystem) -> Self {
        SystemDoc {
            n: s.n,
            m: s.m,
            equations: s.equations.iter().map(render_expr).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraDoc {
    /// `[X_i, X_j] = 0` verdicts for `i < j` among the first `k-1` fields.
    pub commuting: Vec<(usize, usize, bool)>,
    /// `[X_i, X_k] = X_i` verdicts.
    pub reproduced: Vec<(usize, bool)>,
    pub rank: usize,
    pub rank_ok: bool,
    pub holds: bool,
}

impl From<&AlgebraReport> for AlgebraDoc {
    fn from(r: &AlgebraReport) -> Self {
        AlgebraDoc {
            commuting: r.commuting.clone(),
            reproduced: r.reproduced.clone(),
            rank: r.rank,
            rank_ok: r.rank_ok,
            holds: r.holds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryDoc {
    pub is_symmetry: bool,
    pub multipliers: Vec<Vec<String>>,
    pub residuals: Vec<String>,
}

impl From<&SymmetryCertificate> for SymmetryDoc {
    fn from(c: &SymmetryCertificate) -> Self {
        SymmetryDoc {
            is_symmetry: c.is_symmetry,
            multipliers: c
                .multipliers
                .iter()
                .map(|row| row.iter().map(rnf_string).collect())
                .collect(),
            residuals: c.residuals.iter().map(rnf_string).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformationDoc {
    pub n: u32,
    pub m: u32,
    pub z: Vec<String>,
    pub w: Vec<String>,
    pub x_of: Option<Vec<String>>,
    pub u_of: Option<Vec<String>>,
}

impl From<&PointTransformation> for TransformationDoc {
    fn from(t: &PointTransformation) -> Self {
        TransformationDoc {
            n: t.n,
            m: t.m,
            z: t.z.iter().map(render_expr).collect(),
            w: t.w.iter().map(render_expr).collect(),
            x_of: t
                .inverse
                .as_ref()
                .map(|i| i.x_of.iter().map(render_expr).collect()),
            u_of: t
                .inverse
                .as_ref()
                .map(|i| i.u_of.iter().map(render_expr).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationDoc {
    pub autonomous: bool,
    pub jet_degree: Vec<u32>,
    pub homogeneous_in_jets: Vec<bool>,
    pub quasilinear: bool,
    /// When quasilinear: `matrices[i][k][a]` is the coefficient of
    /// `u[a+1,i+1]` in equation `k`.
    pub matrices: Option<Vec<Vec<Vec<String>>>>,
}

impl From<&ClassificationReport> for ClassificationDoc {
    fn from(r: &ClassificationReport) -> Self {
        ClassificationDoc {
            autonomous: r.autonomous,
            jet_degree: r.jet_degree.clone(),
            homogeneous_in_jets: r.homogeneous_in_jets.clone(),
            quasilinear: r.quasilinear,
            matrices: r.matrices.as_ref().map(|ms| {
                ms.iter()
                    .map(|mat| {
                        mat.iter()
                            .map(|row| row.iter().map(render_expr).collect())
                            .collect()
                    })
                    .collect()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionDoc {
    pub algebra: AlgebraDoc,
    pub symmetry: Vec<SymmetryDoc>,
    pub transformation: TransformationDoc,
    pub transformed: SystemDoc,
    pub cleared_factors: Vec<String>,
    pub straightened: bool,
    pub classification: ClassificationDoc,
}

impl From<&Reduction> for ReductionDoc {
    fn from(r: &Reduction) -> Self {
        ReductionDoc {
            algebra: (&r.algebra).into(),
            symmetry: r.symmetry.iter().map(SymmetryDoc::from).collect(),
            transformation: (&r.transformation).into(),
            transformed: (&r.transformed).into(),
            cleared_factors: r.cleared_factors.iter().map(render_expr).collect(),
            straightened: r.straightened,
            classification: (&r.classification).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckDoc {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Report {
    Bracket {
        field: FieldDoc,
    },
    Algebra {
        report: AlgebraDoc,
    },
    Symmetry {
        certificate: SymmetryDoc,
    },
    Canonical {
        transformation: TransformationDoc,
    },
    Reduce {
        reduction: ReductionDoc,
    },
    Classify {
        classification: ClassificationDoc,
    },
    MaBuild {
        system: SystemDoc,
    },
    MaConditions {
        conditions: Vec<String>,
    },
    VonKarman {
        system: SystemDoc,
        conditions: Vec<String>,
    },
    Selftest {
        checks: Vec<CheckDoc>,
    },
}

impl Report {
    /// `true` when the command ran but the verdict is negative
    /// (exit code 2 territory).
    pub fn negative(&self) -> bool {
        match self {
            Report::Algebra { report } => !report.holds,
            Report::Symmetry { certificate } => !certificate.is_symmetry,
            Report::Reduce { reduction } => !reduction.classification.quasilinear,
            Report::Selftest { checks } => checks.iter().any(|c| !c.passed),
            _ => false,
        }
    }

    /// Deterministic JSON rendering (two-space indentation, stable order).
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |l: String| {
            s.push_str(&l);
            s.push('\n');
        };
        match self {
            Report::Bracket { field } => {
                line("lie bracket".into());
                line(format!("  xi:  {}", field.xi.join(", ")));
                line(format!("  eta: {}", field.eta.join(", ")));
            }
            Report::Algebra { report } => {
                line(format!(
                    "algebra structure: {}",
                    if report.holds { "holds" } else { "fails" }
                ));
                for (i, j, ok) in &report.commuting {
                    line(format!(
                        "  [X{i},X{j}] = 0: {}",
                        if *ok { "yes" } else { "NO" }
                    ));
                }
                for (i, ok) in &report.reproduced {
                    line(format!(
                        "  [X{i},Xk] = X{i}: {}",
                        if *ok { "yes" } else { "NO" }
                    ));
                }
                line(format!(
                    "  distribution rank {} ({})",
                    report.rank,
                    if report.rank_ok { "ok" } else { "wrong" }
                ));
            }
            Report::Symmetry { certificate } => {
                line(format!(
                    "symmetry: {}",
                    if certificate.is_symmetry { "yes" } else { "no" }
                ));
                for (k, row) in certificate.multipliers.iter().enumerate() {
                    line(format!("  multipliers[{k}]: {}", row.join(", ")));
                }
                for r in &certificate.residuals {
                    line(format!("  residual: {r}"));
                }
            }
            Report::Canonical { transformation } => {
                line("canonical variables".into());
                for (i, z) in transformation.z.iter().enumerate() {
                    line(format!("  z{} = {z}", i + 1));
                }
                for (a, w) in transformation.w.iter().enumerate() {
                    line(format!("  w{} = {w}", a + 1));
                }
                if let (Some(x), Some(u)) = (&transformation.x_of, &transformation.u_of) {
                    for (i, e) in x.iter().enumerate() {
                        line(format!("  x{} = {e}", i + 1));
                    }
                    for (a, e) in u.iter().enumerate() {
                        line(format!("  u{} = {e}", a + 1));
                    }
                }
            }
            Report::Reduce { reduction } => {
                line(format!(
                    "reduction: algebra {}, straightened {}, quasilinear {}",
                    if reduction.algebra.holds { "ok" } else { "FAILS" },
                    reduction.straightened,
                    reduction.classification.quasilinear,
                ));
                for (i, z) in reduction.transformation.z.iter().enumerate() {
                    line(format!("  z{} = {z}", i + 1));
                }
                line("transformed system:".into());
                for eq in &reduction.transformed.equations {
                    line(format!("  {eq} = 0"));
                }
            }
            Report::Classify { classification } => {
                line(format!(
                    "autonomous {}, quasilinear {}, jet degrees {:?}, homogeneous {:?}",
                    classification.autonomous,
                    classification.quasilinear,
                    classification.jet_degree,
                    classification.homogeneous_in_jets,
                ));
            }
            Report::MaBuild { system } => {
                line("monge-ampère system".into());
                for eq in &system.equations {
                    line(format!("  {eq} = 0"));
                }
            }
            Report::MaConditions { conditions } => {
                line(format!("{} conditions", conditions.len()));
                for c in conditions {
                    line(format!("  {c} = 0"));
                }
            }
            Report::VonKarman { system, conditions } => {
                line("von kármán system".into());
                for eq in &system.equations {
                    line(format!("  {eq} = 0"));
                }
                line("reducibility conditions:".into());
                for c in conditions {
                    line(format!("  {c} = 0"));
                }
            }
            Report::Selftest { checks } => {
                for c in checks {
                    line(format!(
                        "{} {} ({})",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.name,
                        c.detail
                    ));
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trips_and_is_deterministic() {
        let report = Report::Algebra {
            report: AlgebraDoc {
                commuting: vec![(1, 2, true)],
                reproduced: vec![(1, true), (2, false)],
                rank: 2,
                rank_ok: true,
                holds: false,
            },
        };
        let json = report.to_json();
        assert_eq!(json, report.to_json());
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        assert!(report.negative());
        assert!(report.to_text().contains("fails"));
    }
}
