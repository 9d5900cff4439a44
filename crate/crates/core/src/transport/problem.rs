use super::{TransportError, TransportPlan};
use crate::moments::{LinearFunctional, MomentTable};
use crate::poly::{monomial_basis, Polynomial};

/// `L̃ = L∘e^{−τA}` on the block of degree `≤ bound`, with the probes
/// carried over as `e^{τA}p`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportedProblem {
    pub functional: LinearFunctional,
    pub probes: Vec<Polynomial>,
    pub bound: u32,
}

/// Materializes `L̃(x^α) = L(e^{−τA}x^α)` for every `|α| ≤ bound`, where
/// `bound` is the plan's block bound, and transports the probes.
pub fn transport_problem(
    l: &LinearFunctional,
    plan: &TransportPlan,
    probes: &[Polynomial],
) -> Result<TransportedProblem, TransportError> {
    let bound = plan.block_bound();
    let n = plan.n();
    let mut table = MomentTable::new(n);
    for alpha in monomial_basis(n, bound).monomials() {
        let back = plan.exp(-plan.time(), &Polynomial::monomial(alpha.clone(), 1.0))?;
        table.insert(alpha.clone(), l.apply(&back)?);
    }
    let probes = probes.iter().map(|p| plan.apply(p)).collect::<Result<Vec<_>, _>>()?;
    Ok(TransportedProblem {
        functional: LinearFunctional::explicit(table, bound),
        probes,
        bound,
    })
}
