//! Bounded membership tests for the class of operators whose exponential
//! `e^{tA}` maps polynomials to polynomials.
//!
//! `A` belongs to the class iff every monomial lies in a finite-dimensional
//! `A`-invariant subspace, i.e. `sup_k deg A^k x^α < ∞` for all `α`. Only
//! finitely many `α` and steps can be tried, so verdicts are reported
//! "within bounds".

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{norm, CoordSpace, OrthoBasis};
use crate::linops::{exp_apply, op_apply, stabilize, KrylovStatus, OperatorError, OperatorExpr, DROP_TOLERANCE};
use crate::moments::LinearFunctional;
use crate::poly::{monomial_basis, Degree, MultiIndex, Polynomial};

/// Default step cap of the stabilization.
pub const DEFAULT_K_MAX: usize = 64;

/// Relative residual allowed for `Av ∈ span V`.
pub const INVARIANCE_TOL: f64 = 1e-10;

/// Times at which [`check_invariance`] spot-checks `e^{tA}V ⊆ V`.
pub const SPOT_TIMES: [f64; 4] = [1.0, -1.0, 5.0, -5.0];

/// `4|α| + 16`.
pub fn default_degree_bound(alpha: &MultiIndex) -> u32 {
    4 * alpha.degree() + 16
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GlabError {
    #[error("input basis is linearly dependent (rank {rank} of {len})")]
    DependentBasis { rank: usize, len: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SubspaceOutcome {
    /// `V_{α,i}` stopped growing after `steps` steps; `basis` is orthonormal
    /// in monomial coordinates.
    Stabilized { basis: Vec<Polynomial>, steps: usize },
    /// Either a degree exceeded `bound_hit` (`cause = degree_escape`) or the
    /// dimension was still growing after `k_max` steps.
    BlowUp {
        degree_trace: Vec<Degree>,
        bound_hit: u32,
        cause: KrylovStatus,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceReport {
    pub alpha: MultiIndex,
    pub outcome: SubspaceOutcome,
    /// `deg A^k x^α` as observed.
    pub degree_trace: Vec<Degree>,
    /// `dim V_{α,i}` per step.
    pub dims: Vec<usize>,
    /// Largest `‖(I − P_V)Av‖/‖Av‖` over the basis; 0 unless stabilized.
    pub invariance_residual: f64,
}

impl SubspaceReport {
    pub fn is_stabilized(&self) -> bool {
        matches!(self.outcome, SubspaceOutcome::Stabilized { .. })
    }

    pub fn dim(&self) -> Option<usize> {
        match &self.outcome {
            SubspaceOutcome::Stabilized { basis, .. } => Some(basis.len()),
            SubspaceOutcome::BlowUp { .. } => None,
        }
    }
}

/// Grows `V_{α,0} = span{x^α}`, `V_{α,i+1} = V_{α,i} + A·V_{α,i}` until the
/// dimension stops growing, some image degree exceeds `d_max`, or `k_max`
/// steps have been taken.
pub fn invariant_subspace(
    a: &OperatorExpr,
    alpha: &MultiIndex,
    d_max: u32,
    k_max: usize,
) -> Result<SubspaceReport, OperatorError> {
    let p = Polynomial::monomial(alpha.clone(), 1.0);
    let mut k = stabilize(a, &p, Some(d_max), k_max)?;
    let (outcome, residual) = match k.status {
        KrylovStatus::Stabilized => {
            let (_, worst) = k.compressed(a)?;
            (
                SubspaceOutcome::Stabilized {
                    basis: k.basis_polynomials(),
                    steps: k.steps,
                },
                worst,
            )
        }
        cause => (
            SubspaceOutcome::BlowUp {
                degree_trace: k.degree_trace.clone(),
                bound_hit: d_max,
                cause,
            },
            0.0,
        ),
    };
    Ok(SubspaceReport {
        alpha: alpha.clone(),
        outcome,
        degree_trace: k.degree_trace,
        dims: k.dims,
        invariance_residual: residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Membership {
    MemberWithinBounds,
    NotMemberWithinBounds { witness: MultiIndex },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GVerdict {
    pub n: usize,
    pub d_query: u32,
    /// Fixed degree bound, or `None` for `4|α| + 16` per monomial.
    pub d_max: Option<u32>,
    pub k_max: usize,
    pub reports: Vec<SubspaceReport>,
    pub membership: Membership,
}

impl GVerdict {
    pub fn is_member(&self) -> bool {
        self.membership == Membership::MemberWithinBounds
    }

    /// Report of the first monomial that failed to stabilize.
    pub fn witness(&self) -> Option<&SubspaceReport> {
        self.reports.iter().find(|r| !r.is_stabilized())
    }

    /// Largest stabilized dimension.
    pub fn max_dim(&self) -> usize {
        self.reports.iter().filter_map(SubspaceReport::dim).max().unwrap_or(0)
    }
}

/// Runs [`invariant_subspace`] for every `|α| ≤ d_query` in `n` variables.
/// `d_max = None` uses [`default_degree_bound`] per monomial.
pub fn g_check(
    a: &OperatorExpr,
    n: usize,
    d_query: u32,
    d_max: Option<u32>,
    k_max: usize,
) -> Result<GVerdict, OperatorError> {
    let mut reports = Vec::new();
    for alpha in monomial_basis(n, d_query).monomials() {
        let bound = d_max.unwrap_or_else(|| default_degree_bound(alpha));
        reports.push(invariant_subspace(a, alpha, bound, k_max)?);
    }
    let membership = match reports.iter().find(|r| !r.is_stabilized()) {
        Some(r) => Membership::NotMemberWithinBounds {
            witness: r.alpha.clone(),
        },
        None => Membership::MemberWithinBounds,
    };
    Ok(GVerdict {
        n,
        d_query,
        d_max,
        k_max,
        reports,
        membership,
    })
}

fn span_of(v: &[Polynomial]) -> Result<(CoordSpace, OrthoBasis), GlabError> {
    let mut space = CoordSpace::new();
    let coords: Vec<Vec<f64>> = v.iter().map(|p| space.embed(p)).collect();
    let mut basis = OrthoBasis::new();
    basis.extend_pivoted(&coords, DROP_TOLERANCE);
    if basis.dim() < v.len() {
        return Err(GlabError::DependentBasis {
            rank: basis.dim(),
            len: v.len(),
        });
    }
    Ok((space, basis))
}

fn residual(space: &mut CoordSpace, basis: &OrthoBasis, p: &Polynomial) -> f64 {
    let w = space.embed(p);
    if norm(&w) == 0.0 {
        return 0.0;
    }
    basis.relative_residual(&w)
}

/// Whether `A·v ∈ span V` (relative residual at most [`INVARIANCE_TOL`]) for
/// every `v ∈ V`. When it holds, `e^{tA}v ∈ span V` is also checked at the
/// [`SPOT_TIMES`]; a failed spot check gives `false`.
pub fn check_invariance(a: &OperatorExpr, v: &[Polynomial]) -> Result<bool, GlabError> {
    let (mut space, basis) = span_of(v)?;
    for p in v {
        let img = op_apply(a, p)?;
        if residual(&mut space, &basis, &img) > INVARIANCE_TOL {
            return Ok(false);
        }
    }
    let bound = v.iter().filter_map(|p| p.degree().finite()).max().unwrap_or(0);
    for p in v {
        for &t in &SPOT_TIMES {
            let e = match exp_apply(a, t, p, bound) {
                Ok(e) => e,
                Err(OperatorError::BlowUp { .. }) => return Ok(false),
                Err(e) => return Err(e.into()),
            };
            if residual(&mut space, &basis, &e) > INVARIANCE_TOL.sqrt() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `[deg A⁰x^α, …, deg A^{k_max}x^α]`; the zero polynomial shows as
/// [`Degree::NegInfinity`].
pub fn degree_growth_profile(a: &OperatorExpr, alpha: &MultiIndex, k_max: usize) -> Result<Vec<Degree>, OperatorError> {
    let mut w = Polynomial::monomial(alpha.clone(), 1.0);
    let mut out = vec![w.degree()];
    for _ in 0..k_max {
        if !w.is_zero() {
            w = op_apply(a, &w)?;
            let s = w.max_abs_coeff();
            if s > 0.0 && s.is_finite() {
                w = w.scale(1.0 / s);
            }
        }
        out.push(w.degree());
    }
    Ok(out)
}

/// `f ↦ f(y)·p`. Its exponential is
/// `e^{tA}f = f + f(y)·(e^{t·p(y)} − 1)/p(y)·p`, read as `f + t·f(y)·p`
/// when `p(y) = 0`; see [`crate::linops::rank_one_exp`].
pub fn eval_rank_one(y: Vec<f64>, p: Polynomial) -> Result<OperatorExpr, OperatorError> {
    if y.len() != p.n() {
        return Err(OperatorError::VariableMismatch {
            expected: p.n(),
            got: y.len(),
        });
    }
    Ok(OperatorExpr::rank_one(LinearFunctional::point_eval(y), p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationReport {
    /// Unit coefficient vectors tried, one per combination.
    pub combinations: Vec<Vec<f64>>,
    /// Verdict of each combination.
    pub members: Vec<bool>,
}

impl CombinationReport {
    pub fn all_members(&self) -> bool {
        self.members.iter().all(|&m| m)
    }
}

/// Samples `count` random unit vectors `a` and runs [`g_check`] on
/// `∑ aᵢAᵢ`.
///
/// A finite stand-in for the statement that a finite-dimensional span of
/// operators lies in the class: passing samples do not prove it for all
/// unit combinations, a failing one refutes it.
pub fn combination_check(
    generators: &[OperatorExpr],
    n: usize,
    d_query: u32,
    d_max: Option<u32>,
    k_max: usize,
    count: usize,
    seed: u64,
) -> Result<CombinationReport, OperatorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut combinations = Vec::with_capacity(count);
    let mut members = Vec::with_capacity(count);
    for _ in 0..count {
        let mut a: Vec<f64> = (0..generators.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s = norm(&a);
        if s > 0.0 {
            a.iter_mut().for_each(|x| *x /= s);
        }
        let op = OperatorExpr::sum(
            generators
                .iter()
                .zip(&a)
                .map(|(g, &c)| OperatorExpr::scale(c, g.clone()))
                .collect(),
        );
        members.push(g_check(&op, n, d_query, d_max, k_max)?.is_member());
        combinations.push(a);
    }
    Ok(CombinationReport { combinations, members })
}
