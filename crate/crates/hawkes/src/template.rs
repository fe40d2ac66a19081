//! Model templates: named parameter layouts that wire a natural-scale
//! parameter vector into a [`ModelSpec`], together with the transform layer
//! the optimizer works in and the standard presets (M1-1 through M2-6).
//!
//! Fitting moves through three coordinate systems:
//! unconstrained vector -> internal naturals (via the transform layer) ->
//! reported naturals (identical except that a branching block's four
//! parameters are replaced by the four productivity entries they induce) ->
//! `ModelSpec`.

use serde::{Deserialize, Serialize};

use crate::background::BackgroundSpec;
use crate::catalog::EventCatalog;
use crate::constraints::{build_branching_matrix, BranchingBlock, Transform, TransformBlock, TransformLayer};
use crate::covariate::CovariateLookup;
use crate::error::{HawkesError, Result};
use crate::kernel::{Kernel, KernelMatrix, TemporalFamily};
use crate::model::ModelSpec;

/// Semantic role of one internal natural-scale parameter; drives default
/// initial values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Role {
    Mu0 { mark: usize },
    Mu1,
    Alpha,
    Alpha0,
    Beta,
    Phi,
    Phi0,
    Phi1,
    Eta,
    Xi,
    Gamma,
    Theta,
    LambdaB,
    LambdaF,
    B,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InternalParam {
    pub name: String,
    pub role: Role,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportedParam {
    pub name: String,
    /// Whether this parameter counts toward k in the information criteria.
    pub counted: bool,
}

/// Spatial shift wiring for G2/G3 entries: indices into the reported vector
/// for (eta, xi), possibly negated so two cross-kernels can share one shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shift {
    None,
    Plus { eta: usize, xi: usize },
    Minus { eta: usize, xi: usize },
}

/// Kernel functional form of one matrix entry. Index arities (into the
/// reported vector): G1 [alpha, beta, phi]; G2 [alpha, beta, phi] plus a
/// shift; G3 [alpha, beta, phi, gamma]; NonstatPhi [alpha, beta, phi0, phi1];
/// NonstatAlpha [alpha0, beta, phi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelForm {
    Zero,
    G1 { temporal: TemporalFamily },
    G2,
    G3,
    NonstatPhi,
    NonstatAlpha,
}

impl KernelForm {
    fn arity(&self) -> usize {
        match self {
            KernelForm::Zero => 0,
            KernelForm::G1 { .. } | KernelForm::G2 | KernelForm::NonstatAlpha => 3,
            KernelForm::G3 | KernelForm::NonstatPhi => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryDef {
    pub form: KernelForm,
    pub idx: Vec<usize>,
    pub shift: Shift,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BackgroundForm {
    /// [mu0]
    Constant,
    /// [mu0, mu1]
    CovariateLinear,
    /// [mu0, mu1]
    TimeLinear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackgroundDef {
    pub form: BackgroundForm,
    pub idx: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelTemplate {
    pub name: String,
    pub n_marks: usize,
    pub layer: TransformLayer,
    pub internal: Vec<InternalParam>,
    pub reported: Vec<ReportedParam>,
    /// Index where a 4-parameter branching block starts (same position in
    /// the internal and reported vectors), if the template has one.
    pub branching_at: Option<usize>,
    /// One background definition per mark.
    pub backgrounds: Vec<BackgroundDef>,
    /// Kernel entry definitions, row-major `[source * n_marks + target]`.
    pub entries: Vec<EntryDef>,
    pub covariate: Option<CovariateLookup>,
}

impl ModelTemplate {
    pub fn validate(&self) -> Result<()> {
        let n = self.internal.len();
        if self.layer.dim() != n || self.reported.len() != n {
            return Err(HawkesError::Domain(format!(
                "template '{}': layer dim {}, internal {}, reported {} must agree",
                self.name,
                self.layer.dim(),
                n,
                self.reported.len()
            )));
        }
        if self.backgrounds.len() != self.n_marks {
            return Err(HawkesError::Domain("one background per mark required".into()));
        }
        if self.entries.len() != self.n_marks * self.n_marks {
            return Err(HawkesError::Domain("kernel entry count must be n_marks^2".into()));
        }
        if let Some(at) = self.branching_at {
            if at + 4 > n {
                return Err(HawkesError::Domain("branching block out of range".into()));
            }
        }
        let check_idx = |ix: &[usize]| -> Result<()> {
            if ix.iter().any(|&i| i >= n) {
                return Err(HawkesError::Domain("parameter index out of range".into()));
            }
            Ok(())
        };
        for b in &self.backgrounds {
            let want = match b.form {
                BackgroundForm::Constant => 1,
                _ => 2,
            };
            if b.idx.len() != want {
                return Err(HawkesError::Domain("background index arity mismatch".into()));
            }
            check_idx(&b.idx)?;
            if matches!(b.form, BackgroundForm::CovariateLinear) && self.covariate.is_none() {
                return Err(HawkesError::Covariate(
                    "covariate-linear background needs a covariate field".into(),
                ));
            }
        }
        for e in &self.entries {
            if e.idx.len() != e.form.arity() {
                return Err(HawkesError::Domain("kernel index arity mismatch".into()));
            }
            check_idx(&e.idx)?;
            match e.shift {
                Shift::None => {
                    if matches!(e.form, KernelForm::G2) {
                        return Err(HawkesError::Domain("G2 entries need a shift".into()));
                    }
                }
                Shift::Plus { eta, xi } | Shift::Minus { eta, xi } => {
                    check_idx(&[eta, xi])?;
                    if !matches!(e.form, KernelForm::G2 | KernelForm::G3) {
                        return Err(HawkesError::Domain("shift only applies to G2/G3".into()));
                    }
                }
            }
            if matches!(e.form, KernelForm::NonstatPhi | KernelForm::NonstatAlpha)
                && self.covariate.is_none()
            {
                return Err(HawkesError::Covariate(
                    "nonstationary kernel needs a covariate field".into(),
                ));
            }
        }
        Ok(())
    }

    /// Number of counted parameters (k for the information criteria).
    pub fn k(&self) -> usize {
        self.reported.iter().filter(|p| p.counted).count()
    }

    pub fn n_params(&self) -> usize {
        self.internal.len()
    }

    /// Map internal naturals to reported naturals: identity everywhere
    /// except the branching block, whose (theta, lambda_b, lambda_f, b) are
    /// replaced by (alpha_b, alpha_f, alpha_bf, alpha_fb). Fails if the
    /// induced productivity matrix is unstable.
    pub fn reported_from_internal(&self, internal: &[f64]) -> Result<Vec<f64>> {
        if internal.len() != self.internal.len() {
            return Err(HawkesError::Domain("internal parameter length mismatch".into()));
        }
        let mut out = internal.to_vec();
        if let Some(at) = self.branching_at {
            let m = build_branching_matrix(&BranchingBlock {
                theta: internal[at],
                lambda_b: internal[at + 1],
                lambda_f: internal[at + 2],
                b: internal[at + 3],
            })?;
            out[at] = m.alpha_b;
            out[at + 1] = m.alpha_f;
            out[at + 2] = m.alpha_bf;
            out[at + 3] = m.alpha_fb;
        }
        Ok(out)
    }

    /// Assemble a validated model from a reported natural-scale vector.
    /// `t_end` anchors time-linear backgrounds.
    pub fn build_model(&self, reported: &[f64], t_end: f64) -> Result<ModelSpec> {
        if reported.len() != self.reported.len() {
            return Err(HawkesError::Domain("reported parameter length mismatch".into()));
        }
        let backgrounds = self
            .backgrounds
            .iter()
            .map(|b| match b.form {
                BackgroundForm::Constant => Ok(BackgroundSpec::Constant { mu0: reported[b.idx[0]] }),
                BackgroundForm::CovariateLinear => Ok(BackgroundSpec::CovariateLinear {
                    mu0: reported[b.idx[0]],
                    mu1: reported[b.idx[1]],
                    cov: self.covariate.clone().ok_or_else(|| {
                        HawkesError::Covariate("missing covariate".into())
                    })?,
                }),
                BackgroundForm::TimeLinear => Ok(BackgroundSpec::TimeLinear {
                    mu0: reported[b.idx[0]],
                    mu1: reported[b.idx[1]],
                    t_end,
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let m = match e.shift {
                    Shift::None => (0.0, 0.0),
                    Shift::Plus { eta, xi } => (reported[eta], reported[xi]),
                    Shift::Minus { eta, xi } => (-reported[eta], -reported[xi]),
                };
                let kernel = match e.form {
                    KernelForm::Zero => Kernel::Zero,
                    KernelForm::G1 { temporal } => Kernel::G1 {
                        alpha: reported[e.idx[0]],
                        beta: reported[e.idx[1]],
                        phi: reported[e.idx[2]],
                        temporal,
                    },
                    KernelForm::G2 => Kernel::G2 {
                        alpha: reported[e.idx[0]],
                        beta: reported[e.idx[1]],
                        phi: reported[e.idx[2]],
                        m,
                    },
                    KernelForm::G3 => Kernel::G3 {
                        alpha: reported[e.idx[0]],
                        beta: reported[e.idx[1]],
                        phi: reported[e.idx[2]],
                        m,
                        gamma: reported[e.idx[3]],
                    },
                    KernelForm::NonstatPhi => Kernel::G1NonstatPhi {
                        alpha: reported[e.idx[0]],
                        beta: reported[e.idx[1]],
                        phi0: reported[e.idx[2]],
                        phi1: reported[e.idx[3]],
                        cov: self.covariate.clone().ok_or_else(|| {
                            HawkesError::Covariate("missing covariate".into())
                        })?,
                    },
                    KernelForm::NonstatAlpha => Kernel::G1NonstatAlpha {
                        alpha0: reported[e.idx[0]],
                        beta: reported[e.idx[1]],
                        phi: reported[e.idx[2]],
                        cov: self.covariate.clone().ok_or_else(|| {
                            HawkesError::Covariate("missing covariate".into())
                        })?,
                    },
                };
                Ok(kernel)
            })
            .collect::<Result<Vec<_>>>()?;
        ModelSpec::new(backgrounds, KernelMatrix::new(self.n_marks, entries)?)
    }

    /// Default initial point in internal natural scale: Poisson closed-form
    /// rates for the background levels, moderate triggering scales, and the
    /// observed mean-location offset between the marks for the shift.
    pub fn default_initials(&self, catalog: &EventCatalog) -> Vec<f64> {
        let area = catalog.window().area();
        let t_end = catalog.t_end();
        let counts = catalog.count_by_mark();
        // mean-location offset of mark 1 relative to mark 0 (bivariate only)
        let (mut eta0, mut xi0) = (0.0, 0.0);
        if self.n_marks == 2 {
            let mut sums = [[0.0f64; 2]; 2];
            let mut ns = [0usize; 2];
            for e in catalog.events() {
                sums[e.mark][0] += e.x;
                sums[e.mark][1] += e.y;
                ns[e.mark] += 1;
            }
            if ns[0] > 0 && ns[1] > 0 {
                eta0 = sums[1][0] / ns[1] as f64 - sums[0][0] / ns[0] as f64;
                xi0 = sums[1][1] / ns[1] as f64 - sums[0][1] / ns[0] as f64;
            }
        }
        self.internal
            .iter()
            .map(|p| match p.role {
                Role::Mu0 { mark } => {
                    (counts.get(mark).copied().unwrap_or(0).max(1) as f64) / (area * t_end)
                }
                Role::Mu1 => 0.0,
                Role::Alpha => 0.3,
                Role::Alpha0 => 0.3,
                Role::Beta => 30.0,
                Role::Phi => 25.0,
                Role::Phi0 => 20.0,
                Role::Phi1 => 10.0,
                Role::Eta => eta0,
                Role::Xi => xi0,
                Role::Gamma => 0.5,
                Role::Theta => 0.0,
                Role::LambdaB => 0.5,
                Role::LambdaF => 0.25,
                Role::B => 0.05,
            })
            .collect()
    }
}

fn scalar(t: Transform) -> TransformBlock {
    TransformBlock::Scalar(t)
}

fn ip(name: &str, role: Role) -> InternalParam {
    InternalParam {
        name: name.to_string(),
        role,
    }
}

fn rp(name: &str, counted: bool) -> ReportedParam {
    ReportedParam {
        name: name.to_string(),
        counted,
    }
}

/// Build one of the named presets. `covariate` is required by the presets
/// that use a covariate-linear background or a nonstationary kernel
/// (m1-1, m1-3, m1-4, m1-5).
pub fn preset(name: &str, covariate: Option<CovariateLookup>) -> Result<ModelTemplate> {
    let key = name.to_ascii_lowercase();
    let g1e = KernelForm::G1 {
        temporal: TemporalFamily::Exponential,
    };
    let pos = scalar(Transform::Log);
    let free = scalar(Transform::Identity);
    let unit = scalar(Transform::Logit { lo: 0.0, hi: 1.0 });
    let no_shift = |form: KernelForm, idx: Vec<usize>| EntryDef {
        form,
        idx,
        shift: Shift::None,
    };

    let phi_pair_block = |cov: &Option<CovariateLookup>| -> TransformBlock {
        let (lo, hi) = cov
            .as_ref()
            .map(|c| c.observed_range())
            .unwrap_or((0.0, 1.0));
        // degenerate ranges fall back to the full standardized interval
        if hi - lo > 1e-9 {
            TransformBlock::PhiPair { u_lo: lo, u_hi: hi }
        } else {
            TransformBlock::PhiPair { u_lo: 0.0, u_hi: 1.0 }
        }
    };

    let template = match key.as_str() {
        "poisson-const" => ModelTemplate {
            name: key.clone(),
            n_marks: 1,
            layer: TransformLayer::new(vec![pos]),
            internal: vec![ip("mu0", Role::Mu0 { mark: 0 })],
            reported: vec![rp("mu0", true)],
            branching_at: None,
            backgrounds: vec![BackgroundDef {
                form: BackgroundForm::Constant,
                idx: vec![0],
            }],
            entries: vec![no_shift(KernelForm::Zero, vec![])],
            covariate: None,
        },
        "m1-1" | "m1-2" => ModelTemplate {
            name: key.clone(),
            n_marks: 1,
            layer: TransformLayer::new(vec![free.clone(), free.clone()]),
            internal: vec![ip("mu0", Role::Mu0 { mark: 0 }), ip("mu1", Role::Mu1)],
            reported: vec![rp("mu0", true), rp("mu1", true)],
            branching_at: None,
            backgrounds: vec![BackgroundDef {
                form: if key == "m1-1" {
                    BackgroundForm::CovariateLinear
                } else {
                    BackgroundForm::TimeLinear
                },
                idx: vec![0, 1],
            }],
            entries: vec![no_shift(KernelForm::Zero, vec![])],
            covariate: if key == "m1-1" { covariate.clone() } else { None },
        },
        "m1-3" => ModelTemplate {
            name: key.clone(),
            n_marks: 1,
            layer: TransformLayer::new(vec![
                free.clone(),
                free.clone(),
                unit.clone(),
                pos.clone(),
                phi_pair_block(&covariate),
            ]),
            internal: vec![
                ip("mu0", Role::Mu0 { mark: 0 }),
                ip("mu1", Role::Mu1),
                ip("alpha", Role::Alpha),
                ip("beta", Role::Beta),
                ip("phi0", Role::Phi0),
                ip("phi1", Role::Phi1),
            ],
            reported: vec![
                rp("mu0", true),
                rp("mu1", true),
                rp("alpha", true),
                rp("beta", true),
                rp("phi0", true),
                rp("phi1", true),
            ],
            branching_at: None,
            backgrounds: vec![BackgroundDef {
                form: BackgroundForm::CovariateLinear,
                idx: vec![0, 1],
            }],
            entries: vec![no_shift(KernelForm::NonstatPhi, vec![2, 3, 4, 5])],
            covariate: covariate.clone(),
        },
        "m1-4" => ModelTemplate {
            name: key.clone(),
            n_marks: 1,
            layer: TransformLayer::new(vec![
                pos.clone(),
                unit.clone(),
                pos.clone(),
                phi_pair_block(&covariate),
            ]),
            internal: vec![
                ip("mu0", Role::Mu0 { mark: 0 }),
                ip("alpha", Role::Alpha),
                ip("beta", Role::Beta),
                ip("phi0", Role::Phi0),
                ip("phi1", Role::Phi1),
            ],
            reported: vec![
                rp("mu0", true),
                rp("alpha", true),
                rp("beta", true),
                rp("phi0", true),
                rp("phi1", true),
            ],
            branching_at: None,
            backgrounds: vec![BackgroundDef {
                form: BackgroundForm::Constant,
                idx: vec![0],
            }],
            entries: vec![no_shift(KernelForm::NonstatPhi, vec![1, 2, 3, 4])],
            covariate: covariate.clone(),
        },
        "m1-5" => ModelTemplate {
            name: key.clone(),
            n_marks: 1,
            layer: TransformLayer::new(vec![
                free.clone(),
                free.clone(),
                unit.clone(),
                pos.clone(),
                pos.clone(),
            ]),
            internal: vec![
                ip("mu0", Role::Mu0 { mark: 0 }),
                ip("mu1", Role::Mu1),
                ip("alpha", Role::Alpha),
                ip("beta", Role::Beta),
                ip("phi", Role::Phi),
            ],
            reported: vec![
                rp("mu0", true),
                rp("mu1", true),
                rp("alpha", true),
                rp("beta", true),
                rp("phi", true),
            ],
            branching_at: None,
            backgrounds: vec![BackgroundDef {
                form: BackgroundForm::CovariateLinear,
                idx: vec![0, 1],
            }],
            entries: vec![no_shift(
                KernelForm::G1 {
                    temporal: TemporalFamily::HalfNormal,
                },
                vec![2, 3, 4],
            )],
            covariate: covariate.clone(),
        },
        "m2-1" => ModelTemplate {
            name: key.clone(),
            n_marks: 1,
            layer: TransformLayer::new(vec![pos.clone(), unit.clone(), pos.clone(), pos.clone()]),
            internal: vec![
                ip("mu0", Role::Mu0 { mark: 0 }),
                ip("alpha", Role::Alpha),
                ip("beta", Role::Beta),
                ip("phi", Role::Phi),
            ],
            reported: vec![
                rp("mu0", false),
                rp("alpha", true),
                rp("beta", true),
                rp("phi", true),
            ],
            branching_at: None,
            backgrounds: vec![BackgroundDef {
                form: BackgroundForm::Constant,
                idx: vec![0],
            }],
            entries: vec![no_shift(g1e, vec![1, 2, 3])],
            covariate: None,
        },
        "m2-2" => ModelTemplate {
            name: key.clone(),
            n_marks: 2,
            layer: TransformLayer::new(vec![
                pos.clone(),
                pos.clone(),
                unit.clone(),
                unit.clone(),
                pos.clone(),
                pos.clone(),
                pos.clone(),
                pos.clone(),
            ]),
            internal: vec![
                ip("mu0_b", Role::Mu0 { mark: 0 }),
                ip("mu0_f", Role::Mu0 { mark: 1 }),
                ip("alpha_b", Role::Alpha),
                ip("alpha_f", Role::Alpha),
                ip("beta_b", Role::Beta),
                ip("beta_f", Role::Beta),
                ip("phi_b", Role::Phi),
                ip("phi_f", Role::Phi),
            ],
            reported: vec![
                rp("mu0_b", false),
                rp("mu0_f", false),
                rp("alpha_b", true),
                rp("alpha_f", true),
                rp("beta_b", true),
                rp("beta_f", true),
                rp("phi_b", true),
                rp("phi_f", true),
            ],
            branching_at: None,
            backgrounds: vec![
                BackgroundDef {
                    form: BackgroundForm::Constant,
                    idx: vec![0],
                },
                BackgroundDef {
                    form: BackgroundForm::Constant,
                    idx: vec![1],
                },
            ],
            entries: vec![
                no_shift(g1e, vec![2, 4, 6]),
                no_shift(KernelForm::Zero, vec![]),
                no_shift(KernelForm::Zero, vec![]),
                no_shift(g1e, vec![3, 5, 7]),
            ],
            covariate: None,
        },
        "m2-3" | "m2-4" | "m2-5" | "m2-6" => bivariate_cross_template(&key)?,
        other => {
            return Err(HawkesError::Domain(format!("unknown preset '{other}'")));
        }
    };
    template.validate()?;
    Ok(template)
}

/// The cross-triggering family m2-3 .. m2-6: shared layout
/// [mu0_b, mu0_f, branching block -> (alpha_b, alpha_f, alpha_bf, alpha_fb),
///  beta_b, beta_f, beta_c, phi_b, phi_f, phi_c, (eta_c, xi_c), (gamma_b, gamma_f)].
fn bivariate_cross_template(key: &str) -> Result<ModelTemplate> {
    let pos = scalar(Transform::Log);
    let unit = scalar(Transform::Logit { lo: 0.0, hi: 1.0 });
    let free = scalar(Transform::Identity);
    let g1e = KernelForm::G1 {
        temporal: TemporalFamily::Exponential,
    };

    let mut layer = vec![pos.clone(), pos.clone(), TransformBlock::Branching];
    let mut internal = vec![
        ip("mu0_b", Role::Mu0 { mark: 0 }),
        ip("mu0_f", Role::Mu0 { mark: 1 }),
        ip("theta", Role::Theta),
        ip("lambda_b", Role::LambdaB),
        ip("lambda_f", Role::LambdaF),
        ip("b", Role::B),
    ];
    let mut reported = vec![
        rp("mu0_b", false),
        rp("mu0_f", false),
        rp("alpha_b", true),
        rp("alpha_f", true),
        rp("alpha_bf", true),
        rp("alpha_fb", true),
    ];
    for n in ["beta_b", "beta_f", "beta_c", "phi_b", "phi_f", "phi_c"] {
        layer.push(pos.clone());
        internal.push(ip(n, if n.starts_with("beta") { Role::Beta } else { Role::Phi }));
        reported.push(rp(n, true));
    }
    // indices into the reported vector
    let (a_b, a_f, a_bf, a_fb) = (2usize, 3usize, 4usize, 5usize);
    let (b_b, b_f, b_c, p_b, p_f, p_c) = (6usize, 7usize, 8usize, 9usize, 10usize, 11usize);

    let mut shift_plus = Shift::None;
    let mut shift_minus = Shift::None;
    if key != "m2-3" {
        layer.push(free.clone());
        layer.push(free.clone());
        internal.push(ip("eta_c", Role::Eta));
        internal.push(ip("xi_c", Role::Xi));
        reported.push(rp("eta_c", true));
        reported.push(rp("xi_c", true));
        shift_plus = Shift::Plus { eta: 12, xi: 13 };
        // m2-4 uses a common +m for both cross-kernels; m2-5/6 negate one
        shift_minus = if key == "m2-4" {
            shift_plus
        } else {
            Shift::Minus { eta: 12, xi: 13 }
        };
    }
    let mut g_b = 0usize;
    let mut g_f = 0usize;
    if key == "m2-6" {
        layer.push(unit.clone());
        layer.push(unit);
        internal.push(ip("gamma_b", Role::Gamma));
        internal.push(ip("gamma_f", Role::Gamma));
        reported.push(rp("gamma_b", true));
        reported.push(rp("gamma_f", true));
        g_b = 14;
        g_f = 15;
    }

    // entries row-major [source * 2 + target]; alpha_bf is triggering of
    // mark 0 ("b") by mark 1 ("f") events, alpha_fb the reverse
    let entries = match key {
        "m2-3" => vec![
            EntryDef { form: g1e, idx: vec![a_b, b_b, p_b], shift: Shift::None },
            EntryDef { form: g1e, idx: vec![a_fb, b_c, p_c], shift: Shift::None },
            EntryDef { form: g1e, idx: vec![a_bf, b_c, p_c], shift: Shift::None },
            EntryDef { form: g1e, idx: vec![a_f, b_f, p_f], shift: Shift::None },
        ],
        "m2-4" | "m2-5" => vec![
            EntryDef { form: g1e, idx: vec![a_b, b_b, p_b], shift: Shift::None },
            EntryDef { form: KernelForm::G2, idx: vec![a_fb, b_c, p_c], shift: shift_minus },
            EntryDef { form: KernelForm::G2, idx: vec![a_bf, b_c, p_c], shift: shift_plus },
            EntryDef { form: g1e, idx: vec![a_f, b_f, p_f], shift: Shift::None },
        ],
        "m2-6" => vec![
            // marginals nonseparable with no shift; cross-kernels reuse the
            // source mark's nonseparability exponent
            EntryDef { form: KernelForm::G3, idx: vec![a_b, b_b, p_b, g_b], shift: Shift::None },
            EntryDef { form: KernelForm::G3, idx: vec![a_fb, b_c, p_c, g_b], shift: shift_minus },
            EntryDef { form: KernelForm::G3, idx: vec![a_bf, b_c, p_c, g_f], shift: shift_plus },
            EntryDef { form: KernelForm::G3, idx: vec![a_f, b_f, p_f, g_f], shift: Shift::None },
        ],
        _ => unreachable!(),
    };

    Ok(ModelTemplate {
        name: key.to_string(),
        n_marks: 2,
        layer: TransformLayer::new(layer),
        internal,
        reported,
        branching_at: Some(2),
        backgrounds: vec![
            BackgroundDef {
                form: BackgroundForm::Constant,
                idx: vec![0],
            },
            BackgroundDef {
                form: BackgroundForm::Constant,
                idx: vec![1],
            },
        ],
        entries,
        covariate: None,
    })
}
