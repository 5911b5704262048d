//! Brute-force ground truth from child-selection enumeration (Thms 2.1-2.3).
//! Exact integer determinants, no probabilistic caveat; intended for small
//! networks and used as the independent oracle in acceptance tests.
//!
//! Correctness rests on the Cauchy-Binet expansion det(SR) = sum_J a_J r^J:
//! distinct child selections J contribute distinct monomials r^J (the
//! selections differ at some metabolite m, hence in the factor r_{J(m),m}),
//! so the polynomial is nonzero iff some selection has a_J != 0, i.e. iff
//! det S^{J(M)} != 0 for some J.

use num_traits::Zero;

use crate::influence::InfluenceMatrix;
use crate::network::{stoich_matrix, ReactionNetwork, StoichMatrix};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("child-selection enumeration exceeded the budget of {0} steps")]
    EnumerationBudgetExceeded(u64),
    #[error("network is not regular; influence sets are undefined")]
    NotRegular,
}

pub const ENUMERATION_BUDGET: u64 = 10_000_000;

/// Backtracking enumeration of injective, input-respecting assignments from
/// the metabolites of `domain` into the reactions of `codomain`. The visitor
/// receives pairs (metabolite, reaction) and may stop the search by
/// returning true; the function then returns Ok(true) (witness found).
/// Order is deterministic: metabolites ascending, candidates ascending.
pub fn for_each_selection(
    net: &ReactionNetwork,
    domain: &[usize],
    codomain: &[usize],
    visitor: &mut dyn FnMut(&[(usize, usize)]) -> bool,
) -> Result<bool, OracleError> {
    let mut domain: Vec<usize> = domain.to_vec();
    domain.sort_unstable();
    let mut in_codomain = vec![false; net.num_reactions()];
    for &j in codomain {
        in_codomain[j] = true;
    }
    // candidate children per domain metabolite, ascending
    let candidates: Vec<Vec<usize>> = domain
        .iter()
        .map(|&m| net.children(m).filter(|&j| in_codomain[j]).collect())
        .collect();
    let mut used = vec![false; net.num_reactions()];
    let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(domain.len());
    let mut budget = ENUMERATION_BUDGET;
    fn recurse(
        depth: usize,
        domain: &[usize],
        candidates: &[Vec<usize>],
        used: &mut [bool],
        chosen: &mut Vec<(usize, usize)>,
        budget: &mut u64,
        visitor: &mut dyn FnMut(&[(usize, usize)]) -> bool,
    ) -> Result<bool, OracleError> {
        if depth == domain.len() {
            if *budget == 0 {
                return Err(OracleError::EnumerationBudgetExceeded(ENUMERATION_BUDGET));
            }
            *budget -= 1;
            return Ok(visitor(chosen));
        }
        for &j in &candidates[depth] {
            if used[j] {
                continue;
            }
            if *budget == 0 {
                return Err(OracleError::EnumerationBudgetExceeded(ENUMERATION_BUDGET));
            }
            *budget -= 1;
            used[j] = true;
            chosen.push((domain[depth], j));
            let stop = recurse(depth + 1, domain, candidates, used, chosen, budget, visitor)?;
            chosen.pop();
            used[j] = false;
            if stop {
                return Ok(true);
            }
        }
        Ok(false)
    }
    recurse(
        0,
        &domain,
        &candidates,
        &mut used,
        &mut chosen,
        &mut budget,
        visitor,
    )
}

/// Collect all selections (for small cases / tests).
pub fn enumerate_child_selections(
    net: &ReactionNetwork,
    domain: &[usize],
    codomain: &[usize],
) -> Result<Vec<Vec<(usize, usize)>>, OracleError> {
    let mut out = Vec::new();
    for_each_selection(net, domain, codomain, &mut |sel| {
        out.push(sel.to_vec());
        false
    })?;
    Ok(out)
}

fn det_nonzero(s: &StoichMatrix, cols: &[usize]) -> bool {
    debug_assert_eq!(cols.len(), s.rows);
    !s.column_minor(cols).det().is_zero()
}

/// Thm 2.1: the network is regular iff some full child selection J has
/// det S^{J(M)} != 0.
pub fn oracle_regular(net: &ReactionNetwork) -> Result<bool, OracleError> {
    let s = stoich_matrix(net);
    let all_m: Vec<usize> = (0..net.num_metabolites()).collect();
    let all_e: Vec<usize> = (0..net.num_reactions()).collect();
    for_each_selection(net, &all_m, &all_e, &mut |sel| {
        let cols: Vec<usize> = sel.iter().map(|&(_, j)| j).collect();
        det_nonzero(&s, &cols)
    })
}

/// Thm 2.2: flux influence j* ~> j'.
/// Self-influence (j' = j*): some selection avoiding j* is nonsingular.
/// j' != j*: some selection J with j* not in J(M), j' in J(M), and the
/// swapped set {j*} u J(M) \ {j'} nonsingular.
pub fn oracle_flux_influence(
    net: &ReactionNetwork,
    j_star: usize,
    j_prime: usize,
) -> Result<bool, OracleError> {
    let s = stoich_matrix(net);
    let all_m: Vec<usize> = (0..net.num_metabolites()).collect();
    let codomain: Vec<usize> = (0..net.num_reactions()).filter(|&j| j != j_star).collect();
    if j_star == j_prime {
        return for_each_selection(net, &all_m, &codomain, &mut |sel| {
            let cols: Vec<usize> = sel.iter().map(|&(_, j)| j).collect();
            det_nonzero(&s, &cols)
        });
    }
    for_each_selection(net, &all_m, &codomain, &mut |sel| {
        if !sel.iter().any(|&(_, j)| j == j_prime) {
            return false;
        }
        // swapped set: replace j' by j*
        let cols: Vec<usize> = sel
            .iter()
            .map(|&(_, j)| if j == j_prime { j_star } else { j })
            .collect();
        det_nonzero(&s, &cols)
    })
}

/// Thm 2.3: metabolite influence j* ~> m' via partial child selections
/// J: M \ {m'} -> E \ {j*} with det S^({j*} u image) != 0.
pub fn oracle_metabolite_influence(
    net: &ReactionNetwork,
    j_star: usize,
    m_prime: usize,
) -> Result<bool, OracleError> {
    let s = stoich_matrix(net);
    let domain: Vec<usize> = (0..net.num_metabolites()).filter(|&m| m != m_prime).collect();
    let codomain: Vec<usize> = (0..net.num_reactions()).filter(|&j| j != j_star).collect();
    for_each_selection(net, &domain, &codomain, &mut |sel| {
        // column order: j* takes the slot of m' (Eq. 4.19); order only
        // affects the sign, not nonzeroness
        let mut cols: Vec<usize> = vec![j_star];
        cols.extend(sel.iter().map(|&(_, j)| j));
        det_nonzero(&s, &cols)
    })
}

/// Full exact influence matrix ((E+M) x E, non-extended) from the three
/// oracles. Errors with NotRegular when no child selection certifies
/// regularity (the influence structure is then undefined).
pub fn oracle_influence_matrix(net: &ReactionNetwork) -> Result<InfluenceMatrix, OracleError> {
    if !oracle_regular(net)? {
        return Err(OracleError::NotRegular);
    }
    let (e, m) = (net.num_reactions(), net.num_metabolites());
    let mut out = InfluenceMatrix::empty(net, false);
    for j_star in 0..e {
        for j_prime in 0..e {
            if oracle_flux_influence(net, j_star, j_prime)? {
                out.set(j_prime, j_star, true);
            }
        }
        for m_prime in 0..m {
            if oracle_metabolite_influence(net, j_star, m_prime)? {
                out.set(e + m_prime, j_star, true);
            }
        }
    }
    Ok(out)
}

/// Square-case direct set (Eq. 3.9): M^d(j*) = { J^{-1}(j*) | J a child
/// selection }, computed by enumeration.
pub fn oracle_square_mothers(
    net: &ReactionNetwork,
    j_star: usize,
) -> Result<Vec<usize>, OracleError> {
    let s = stoich_matrix(net);
    let all_m: Vec<usize> = (0..net.num_metabolites()).collect();
    let all_e: Vec<usize> = (0..net.num_reactions()).collect();
    let mut mothers = Vec::new();
    for_each_selection(net, &all_m, &all_e, &mut |sel| {
        let cols: Vec<usize> = sel.iter().map(|&(_, j)| j).collect();
        if det_nonzero(&s, &cols) {
            if let Some(&(m, _)) = sel.iter().find(|&&(_, j)| j == j_star) {
                if !mothers.contains(&m) {
                    mothers.push(m);
                }
            }
        }
        false
    })?;
    mothers.sort_unstable();
    Ok(mothers)
}
