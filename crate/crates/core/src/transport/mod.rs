//! Transport of nonnegative polynomials into the sum-of-squares cone.
//!
//! A plan fixes an operator `A` and a time `τ` such that `e^{τA}` maps every
//! listed generator to a certified sum of squares. Three constructions are
//! provided:
//!
//! * rank-one `A = l ⊗ f`, searching the time `τ` ([`find_tau`]);
//! * graded `A = ∑ c_d·l_d·f_d` over the degree blocks `ℝ[x]_{≤2d}`
//!   ([`build_graded_full`], [`build_graded_custom`]);
//! * the orthant ladder with the extra odd-degree terms `c̃_d·l̃_d·f_d`
//!   ([`build_orthant`]).
//!
//! Certificates cover the listed generators only. Since `e^{τA}` is linear
//! and the target cone is convex, they also cover the conic hull of the
//! generators, but nothing beyond it.

mod graded;
mod problem;
mod rank_one;
mod samples;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linops::{exp_apply, rank_one_exp, restrict_matrix, OperatorError, OperatorExpr};
use crate::moments::{FunctionalError, LinearFunctional};
use crate::poly::{monomial_basis, MultiIndex, Polynomial};
use crate::sos::{certify_sos, validate_certificate, CertifyConfig, CertifyOutcome, GramCertificate};

pub use graded::{build_graded_custom, build_graded_full, build_orthant};
pub use problem::{transport_problem, TransportedProblem};
pub use rank_one::{build_rank_one, find_tau};
pub use samples::{
    graded_scenario, motzkin_scenario, orthant_x_scenario, sample_pos, scenario, scenario_config, GRADED_SCENARIO_SEED,
    MOTZKIN_T0, SCENARIO_NAMES,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("direction has l(f) = {value}, expected > 0")]
    NonPositiveDirection { value: f64 },
    #[error("operator is not a rank-one leaf")]
    NotRankOne,
    #[error("generator {index} has l(g) = {value}, expected > 0")]
    HypothesisViolated { index: usize, value: f64 },
    #[error("sample {index} takes the value {value} at {witness:?}")]
    SampleNotNonneg {
        index: usize,
        witness: Vec<f64>,
        value: f64,
    },
    #[error("functional {index} has l(x^{alpha:?}) = {value} above its degree")]
    AnnihilationViolated {
        index: usize,
        alpha: MultiIndex,
        value: f64,
    },
    #[error("functional {index} has l(x^{alpha:?}) = {value} on a lower block")]
    LowerBlockRead {
        index: usize,
        alpha: MultiIndex,
        value: f64,
    },
    #[error("ladder must have one f per functional and strictly increasing degrees")]
    InvalidLadder,
    #[error("no passing value for {stage} up to {cap}: generator {index} {detail}")]
    SearchExhausted {
        stage: String,
        cap: f64,
        index: usize,
        detail: String,
    },
    #[error("degree {degree} exceeds the plan block bound {bound}")]
    DegreeOverflow { degree: u32, bound: u32 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

/// Doubling search for a constant: `start, start·growth, …` up to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub start: f64,
    pub growth: f64,
    pub max: f64,
    /// Bisect between the last failing and the first passing grid value
    /// down to relative width `1e-3`.
    pub refine: bool,
    pub certify: CertifyConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            start: 1.0,
            growth: 2.0,
            max: (1u64 << 30) as f64,
            refine: false,
            certify: CertifyConfig::default(),
        }
    }
}

const REFINE_WIDTH: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanCertificate {
    pub generator: Polynomial,
    pub half_degree: u32,
    /// `e^{τA}` applied to the generator.
    pub transported: Polynomial,
    pub certificate: GramCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub stage: String,
    pub value: f64,
    pub passed: bool,
    /// First generator that did not certify.
    pub failed: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ladder {
    Full,
    Orthant,
    Custom,
}

/// One degree level `c·l·f`, with the orthant term `c̃·l̃·f` if present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedLevel {
    pub d: u32,
    pub c: f64,
    pub l: LinearFunctional,
    pub f: Polynomial,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilde: Option<TildeTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TildeTerm {
    pub c: f64,
    pub l: LinearFunctional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PlanKind {
    RankOne {
        l: LinearFunctional,
        f: Polynomial,
        tau: f64,
        half_degree: u32,
        /// Whether `τ·growth` also passed.
        next_grid_passes: bool,
    },
    Graded {
        ladder: Ladder,
        d_max: u32,
        levels: Vec<GradedLevel>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub kind: PlanKind,
    pub operator: OperatorExpr,
    pub certificates: Vec<PlanCertificate>,
    pub search_log: Vec<SearchStep>,
    pub config: SearchConfig,
    pub scope: String,
}

const SCOPE: &str = "certificates cover the listed generators and their conic hull only";

impl TransportPlan {
    pub fn n(&self) -> usize {
        self.operator.n().unwrap_or(0)
    }

    /// The time the plan transports with: `τ` for rank-one plans, 1 otherwise.
    pub fn time(&self) -> f64 {
        match &self.kind {
            PlanKind::RankOne { tau, .. } => *tau,
            PlanKind::Graded { .. } => 1.0,
        }
    }

    /// Largest degree the plan's blocks cover.
    pub fn block_bound(&self) -> u32 {
        match &self.kind {
            PlanKind::RankOne { f, half_degree, .. } => {
                (2 * half_degree).max(f.degree().finite().unwrap_or(0))
            }
            PlanKind::Graded { levels, .. } => 2 * levels.iter().map(|l| l.d).max().unwrap_or(0),
        }
    }

    /// `e^{tA}p` with the plan's operator.
    pub fn exp(&self, t: f64, p: &Polynomial) -> Result<Polynomial, TransportError> {
        let bound = self.block_bound();
        let degree = p.degree().finite().unwrap_or(0);
        if degree > bound {
            return Err(TransportError::DegreeOverflow { degree, bound });
        }
        match &self.kind {
            PlanKind::RankOne { l, f, .. } => Ok(rank_one_exp(l, f, t, p)?),
            PlanKind::Graded { .. } => Ok(exp_apply(&self.operator, t, p, block_of(degree))?),
        }
    }

    /// `e^{τA}p`.
    pub fn apply(&self, p: &Polynomial) -> Result<Polynomial, TransportError> {
        self.exp(self.time(), p)
    }
}

/// Smallest even degree `≥ degree`.
pub(crate) fn block_of(degree: u32) -> u32 {
    degree.div_ceil(2) * 2
}

/// Grid of the doubling search. A zero start is tried once and followed by
/// `1, growth, growth², …`.
pub(crate) fn grid(start: f64, growth: f64, max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut v = start;
    if v == 0.0 {
        out.push(0.0);
        v = 1.0;
    }
    if !(growth > 1.0) || !(v > 0.0) {
        if v <= max {
            out.push(v);
        }
        return out;
    }
    while v <= max {
        out.push(v);
        v *= growth;
    }
    out
}

/// Result of certifying a batch of generators at one parameter value.
pub(crate) struct Trial {
    pub passed: bool,
    pub failed: Option<(usize, String)>,
    pub certificates: Vec<PlanCertificate>,
}

/// Certifies `map(g)` for every generator in order, stopping at the first
/// failure.
pub(crate) fn certify_batch(
    items: &[(Polynomial, u32)],
    map: impl Fn(&Polynomial) -> Result<Polynomial, TransportError>,
    cfg: &CertifyConfig,
) -> Result<Trial, TransportError> {
    let mut certificates = Vec::with_capacity(items.len());
    for (index, (g, half)) in items.iter().enumerate() {
        let transported = map(g)?;
        if transported.terms().any(|(_, c)| !c.is_finite()) {
            return Ok(Trial {
                passed: false,
                failed: Some((index, "overflowed".to_string())),
                certificates,
            });
        }
        match certify_sos(&transported, *half, cfg) {
            CertifyOutcome::Certified(certificate) => certificates.push(PlanCertificate {
                generator: g.clone(),
                half_degree: *half,
                transported,
                certificate,
            }),
            other => {
                let detail = match other {
                    CertifyOutcome::RefutedByPoint { witness, value } => {
                        format!("is negative ({value:e}) at {witness:?}")
                    }
                    CertifyOutcome::Undecided {
                        min_eig,
                        coeff_residual,
                        ..
                    } => format!("undecided (min_eig {min_eig:e}, coeff_residual {coeff_residual:e})"),
                    CertifyOutcome::Certified(_) => unreachable!(),
                };
                return Ok(Trial {
                    passed: false,
                    failed: Some((index, detail)),
                    certificates,
                });
            }
        }
    }
    Ok(Trial {
        passed: true,
        failed: None,
        certificates,
    })
}

/// Runs the doubling search (and the optional bisection) for one stage.
/// Returns the passing value and its certificates.
pub(crate) fn search(
    stage: &str,
    start: f64,
    cfg: &SearchConfig,
    log: &mut Vec<SearchStep>,
    mut trial: impl FnMut(f64) -> Result<Trial, TransportError>,
) -> Result<(f64, Vec<PlanCertificate>), TransportError> {
    let mut last_fail: Option<(f64, usize, String)> = None;
    for v in grid(start, cfg.growth, cfg.max) {
        let t = trial(v)?;
        log.push(SearchStep {
            stage: stage.to_string(),
            value: v,
            passed: t.passed,
            failed: t.failed.as_ref().map(|f| f.0),
        });
        if t.passed {
            let mut best = (v, t.certificates);
            if cfg.refine {
                if let Some((lo, _, _)) = last_fail {
                    best = bisect(stage, lo, best, log, &mut trial)?;
                }
            }
            return Ok(best);
        }
        let (index, detail) = t.failed.unwrap_or((0, String::new()));
        last_fail = Some((v, index, detail));
    }
    let (_, index, detail) = last_fail.unwrap_or((0.0, 0, "no grid value tried".into()));
    Err(TransportError::SearchExhausted {
        stage: stage.to_string(),
        cap: cfg.max,
        index,
        detail,
    })
}

fn bisect(
    stage: &str,
    mut lo: f64,
    mut hi: (f64, Vec<PlanCertificate>),
    log: &mut Vec<SearchStep>,
    trial: &mut impl FnMut(f64) -> Result<Trial, TransportError>,
) -> Result<(f64, Vec<PlanCertificate>), TransportError> {
    while hi.0 - lo > REFINE_WIDTH * hi.0 {
        let mid = 0.5 * (lo + hi.0);
        let t = trial(mid)?;
        log.push(SearchStep {
            stage: format!("{stage} refine"),
            value: mid,
            passed: t.passed,
            failed: t.failed.as_ref().map(|f| f.0),
        });
        if t.passed {
            hi = (mid, t.certificates);
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// What [`verify_plan`] found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanCheck {
    pub certificates_valid: bool,
    /// Largest `|e^{τA}g − stored|` relative to `max(1, max|stored|)`.
    pub transport_mismatch: f64,
    pub blocks_invariant: bool,
    pub constants_positive: bool,
    pub degrees_preserved: bool,
}

impl PlanCheck {
    pub fn passed(&self) -> bool {
        self.certificates_valid
            && self.transport_mismatch <= 1e-9
            && self.blocks_invariant
            && self.constants_positive
            && self.degrees_preserved
    }
}

/// Re-derives everything a plan claims: every stored certificate validates
/// against its stored transported generator, that polynomial is `e^{τA}g`
/// recomputed with the stored operator, graded operators preserve every
/// block `ℝ[x]_{≤2d}`, and graded transport does not raise degrees.
pub fn verify_plan(plan: &TransportPlan, eig_tol: f64, coeff_tol: f64) -> Result<PlanCheck, TransportError> {
    let mut out = PlanCheck {
        certificates_valid: true,
        transport_mismatch: 0.0,
        blocks_invariant: true,
        constants_positive: true,
        degrees_preserved: true,
    };
    for c in &plan.certificates {
        if !validate_certificate(&c.transported, &c.certificate, eig_tol, coeff_tol) {
            out.certificates_valid = false;
        }
        let again = plan.apply(&c.generator)?;
        let rel = again.max_abs_diff(&c.transported) / c.transported.max_abs_coeff().max(1.0);
        out.transport_mismatch = out.transport_mismatch.max(rel);
        if let PlanKind::Graded { .. } = plan.kind {
            let g = c.generator.degree().finite().unwrap_or(0);
            let t = c.transported.degree().finite().unwrap_or(0);
            if t > block_of(g) {
                out.degrees_preserved = false;
            }
        }
    }
    match &plan.kind {
        PlanKind::RankOne { tau, .. } => out.constants_positive = *tau >= 0.0,
        PlanKind::Graded { levels, .. } => {
            let n = plan.n();
            for level in levels {
                if !(level.c > 0.0) || level.tilde.as_ref().is_some_and(|t| !(t.c > 0.0)) {
                    out.constants_positive = false;
                }
                if restrict_matrix(&plan.operator, &monomial_basis(n, 2 * level.d)).is_err() {
                    out.blocks_invariant = false;
                }
            }
        }
    }
    Ok(out)
}
