//! Network-extension analysis: augmenticity (influences persist when the
//! network grows), the all-exits "menetekel" extension, and the Okada
//! upper-estimate check for output-complete subnetworks.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::gf::PrimeField;
use crate::influence::InfluenceMatrix;
use crate::linalg::FieldMatrix;
use crate::network::{stoich_matrix, Reaction, ReactionNetwork};
use crate::oracle::{for_each_selection, OracleError};

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error("shared reaction `{0}` changes stoichiometry between the networks")]
    StoichiometryMismatch(String),
    #[error("old reaction `{0}` touches new metabolite `{1}`")]
    OldReactionTouchesNewMetabolite(String, String),
    #[error("metabolite `{0}` of the base network is missing from the extension")]
    MissingMetabolite(String),
    #[error("reaction `{0}` of the base network is missing from the extension")]
    MissingReaction(String),
    #[error("enumeration: {0}")]
    Oracle(#[from] OracleError),
}

/// Proof that net1 extends net0 per the augmentation conditions: shared
/// reactions keep their stoichiometry, old reactions do not touch new
/// metabolites, and (when new metabolites exist) a nonsingular partial child
/// selection of the new metabolites into the new reactions.
#[derive(Debug, Clone)]
pub struct AugmentationWitness {
    /// net0 reaction id -> net1 reaction id
    pub reaction_map: Vec<usize>,
    /// net0 metabolite id -> net1 metabolite id
    pub metabolite_map: Vec<usize>,
    /// net1 ids absent from net0
    pub new_metabolites: Vec<usize>,
    pub new_reactions: Vec<usize>,
    /// J on the new metabolites with nonzero determinant, when new
    /// metabolites exist; None when M1 = M0 (hypothesis vacuous)
    pub partial_selection: Option<(Vec<(usize, usize)>, BigInt)>,
    /// Thm B4.1 hypothesis verified (vacuously or by the selection)
    pub hypothesis_verified: bool,
}

/// Verify the augmentation conditions by name-based matching and search for
/// the partial-child-selection hypothesis of the persistence theorem.
pub fn is_augmentation(
    net0: &ReactionNetwork,
    net1: &ReactionNetwork,
) -> Result<AugmentationWitness, AugmentError> {
    let metabolite_map: Vec<usize> = net0
        .metabolites
        .iter()
        .map(|m| {
            net1.metabolite_index(&m.name)
                .ok_or_else(|| AugmentError::MissingMetabolite(m.name.clone()))
        })
        .collect::<Result<_, _>>()?;
    let reaction_map: Vec<usize> = net0
        .reactions
        .iter()
        .map(|r| {
            net1.reaction_index(&r.name)
                .ok_or_else(|| AugmentError::MissingReaction(r.name.clone()))
        })
        .collect::<Result<_, _>>()?;
    let shared1: std::collections::HashSet<usize> = metabolite_map.iter().copied().collect();
    // shared reactions: identical coefficients on shared metabolites, none
    // on new metabolites
    for (r0, &i1) in net0.reactions.iter().zip(&reaction_map) {
        let r1 = &net1.reactions[i1];
        for (side0, side1) in [(&r0.inputs, &r1.inputs), (&r0.outputs, &r1.outputs)] {
            let mapped: Vec<(usize, u64)> = {
                let mut v: Vec<(usize, u64)> =
                    side0.iter().map(|&(m, c)| (metabolite_map[m], c)).collect();
                v.sort_unstable();
                v
            };
            if &mapped != side1 {
                for &(m1, _) in side1 {
                    if !shared1.contains(&m1) {
                        return Err(AugmentError::OldReactionTouchesNewMetabolite(
                            r0.name.clone(),
                            net1.metabolites[m1].name.clone(),
                        ));
                    }
                }
                return Err(AugmentError::StoichiometryMismatch(r0.name.clone()));
            }
        }
    }
    let new_metabolites: Vec<usize> = (0..net1.num_metabolites())
        .filter(|m| !shared1.contains(m))
        .collect();
    let shared_r1: std::collections::HashSet<usize> = reaction_map.iter().copied().collect();
    let new_reactions: Vec<usize> = (0..net1.num_reactions())
        .filter(|j| !shared_r1.contains(j))
        .collect();
    // hypothesis of the persistence theorem: J on new metabolites into new
    // reactions with nonzero determinant of the new-rows submatrix
    let mut partial_selection = None;
    let hypothesis_verified = if new_metabolites.is_empty() {
        true
    } else {
        let s1 = stoich_matrix(net1);
        let mut found = None;
        for_each_selection(net1, &new_metabolites, &new_reactions, &mut |sel| {
            let n = sel.len();
            let mut minor = crate::linalg::IntMatrix::zeros(n, n);
            for (row, &m) in new_metabolites.iter().enumerate() {
                for (col, &(_, j)) in sel.iter().enumerate() {
                    minor.set(row, col, s1.get(m, j).into());
                }
            }
            let d = minor.det();
            if !d.is_zero() {
                found = Some((sel.to_vec(), d));
                true
            } else {
                false
            }
        })?;
        partial_selection = found;
        partial_selection.is_some()
    };
    Ok(AugmentationWitness {
        reaction_map,
        metabolite_map,
        new_metabolites,
        new_reactions,
        partial_selection,
        hypothesis_verified,
    })
}

/// Result of checking influence persistence along an augmentation.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AugmenticityReport {
    /// influences present in net0 but missing in net1 (shared indices):
    /// (reaction name, target description)
    pub violations: Vec<(String, String)>,
    /// influences newly present in net1 on shared indices
    pub gained: usize,
    /// false: Thm hypothesis unverifiable, persistence is informational only
    pub hypothesis_verified: bool,
}

/// Compare influence matrices along a verified augmentation: every influence
/// of net0 must persist in net1 (up to the false-zero caveat on infl1).
pub fn check_augmenticity(
    net0: &ReactionNetwork,
    net1: &ReactionNetwork,
    infl0: &InfluenceMatrix,
    infl1: &InfluenceMatrix,
) -> Result<AugmenticityReport, AugmentError> {
    let w = is_augmentation(net0, net1)?;
    let mut violations = Vec::new();
    let mut gained = 0usize;
    let (e0, m0) = (net0.num_reactions(), net0.num_metabolites());
    for j_star in 0..e0 {
        let j1 = w.reaction_map[j_star];
        for j_prime in 0..e0 {
            let (a, b) = (infl0.flux(j_star, j_prime), infl1.flux(j1, w.reaction_map[j_prime]));
            if a && !b {
                violations.push((
                    net0.reactions[j_star].name.clone(),
                    format!("flux {}", net0.reactions[j_prime].name),
                ));
            }
            if !a && b {
                gained += 1;
            }
        }
        for m in 0..m0 {
            let (a, b) = (infl0.metab(j_star, m), infl1.metab(j1, w.metabolite_map[m]));
            if a && !b {
                violations.push((
                    net0.reactions[j_star].name.clone(),
                    format!("metabolite {}", net0.metabolites[m].name),
                ));
            }
            if !a && b {
                gained += 1;
            }
        }
    }
    Ok(AugmenticityReport {
        violations,
        gained,
        hypothesis_verified: w.hypothesis_verified,
    })
}

/// Add a monomolecular exit `exit_<metabolite>` for every metabolite that
/// does not already have one (the "menetekel" extension).
pub fn extend_with_exits(net: &ReactionNetwork) -> ReactionNetwork {
    let mut out = net.clone();
    for m in 0..net.num_metabolites() {
        let has_exit = net.reactions.iter().any(|r| {
            r.outputs.is_empty() && r.inputs.len() == 1 && r.inputs[0] == (m, 1)
        });
        if !has_exit {
            let id = out.reactions.len();
            out.reactions.push(Reaction {
                id,
                name: format!("exit_{}", net.metabolites[m].name),
                inputs: vec![(m, 1)],
                outputs: vec![],
            });
        }
    }
    out
}

/// Draw a random candidate subnetwork for the Okada estimate: a nonempty
/// random set of metabolites M0 together with E0 = all of their children
/// (which makes (ok1) hold by construction). The caller still has to check
/// the dimension condition (ok2) and containment (ok3) via [`okada_check`].
pub fn random_output_complete_subset(
    net: &ReactionNetwork,
    rng: &mut impl rand::Rng,
) -> (Vec<usize>, Vec<usize>) {
    let m = net.num_metabolites();
    let mut m0: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.5)).collect();
    if m0.is_empty() {
        m0.push(rng.gen_range(0..m));
    }
    let mut e0: Vec<usize> = m0.iter().flat_map(|&mm| net.children(mm)).collect();
    e0.sort_unstable();
    e0.dedup();
    (e0, m0)
}

#[derive(Debug, thiserror::Error)]
pub enum OkadaError {
    #[error("subset not output complete: metabolite `{metabolite}` feeds reaction `{reaction}` outside E0")]
    NotOutputComplete { metabolite: String, reaction: String },
    #[error("dimension condition fails: dim(ker S n E0) + |M0| - |E0| = {0}")]
    DimensionMismatch(i64),
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct OkadaReport {
    /// union of I_E(j*) over j* in E0
    pub influence_union: Vec<usize>,
    pub contained: bool,
    /// containment is strict: some member of E0 is influenced by nothing in E0
    pub strict: bool,
}

/// The Okada upper estimate: for an output-complete subnetwork (E0, M0) with
/// dim(ker S n E0) + |M0| - |E0| = 0, all flux influence from E0 stays in E0.
pub fn okada_check(
    net: &ReactionNetwork,
    e0: &[usize],
    m0: &[usize],
    infl: &InfluenceMatrix,
    field: &PrimeField,
) -> Result<OkadaReport, OkadaError> {
    let in_e0 = {
        let mut v = vec![false; net.num_reactions()];
        for &j in e0 {
            v[j] = true;
        }
        v
    };
    // Eq. (ok1): output completeness
    for &m in m0 {
        for j in net.children(m) {
            if !in_e0[j] {
                return Err(OkadaError::NotOutputComplete {
                    metabolite: net.metabolites[m].name.clone(),
                    reaction: net.reactions[j].name.clone(),
                });
            }
        }
    }
    // Eq. (ok2): dim(ker S n E0) + |M0| - |E0| = 0, with
    // dim(ker S n E0) = |E0| - rank(S restricted to columns E0) mod p
    let s = stoich_matrix(net);
    let minor = s.column_minor(e0);
    let rank = FieldMatrix::from_int(&minor, field).rank(field);
    let value = (e0.len() as i64 - rank as i64) + m0.len() as i64 - e0.len() as i64;
    if value != 0 {
        return Err(OkadaError::DimensionMismatch(value));
    }
    // Eq. (ok3): containment of influence sets
    let mut union: Vec<usize> = Vec::new();
    for &j_star in e0 {
        for j in 0..net.num_reactions() {
            if infl.flux(j_star, j) && !union.contains(&j) {
                union.push(j);
            }
        }
    }
    union.sort_unstable();
    let contained = union.iter().all(|j| in_e0[*j]);
    let strict = contained && union.len() < e0.len();
    Ok(OkadaReport {
        influence_union: union,
        contained,
        strict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphkit::{condense_and_reduce, flux_classes};
    use crate::influence::{influence_matrix, InfluenceConfig};
    use crate::network::parse_network;

    #[test]
    fn identity_augmentation() {
        let net = parse_network(include_str!("../fixtures/fig31.net")).unwrap();
        let w = is_augmentation(&net, &net).unwrap();
        assert!(w.new_metabolites.is_empty());
        assert!(w.new_reactions.is_empty());
        assert!(w.hypothesis_verified);
        let infl = influence_matrix(&net, &InfluenceConfig::default()).unwrap();
        let rep = check_augmenticity(&net, &net, &infl, &infl).unwrap();
        assert!(rep.violations.is_empty());
        assert_eq!(rep.gained, 0);
    }

    #[test]
    fn modified_reaction_rejected() {
        let a = parse_network("1: A -> B\n2: B ->").unwrap();
        let b = parse_network("1: A -> 2 B\n2: B ->").unwrap();
        assert!(matches!(
            is_augmentation(&a, &b),
            Err(AugmentError::StoichiometryMismatch(_))
        ));
    }

    #[test]
    fn old_reaction_touching_new_metabolite_rejected() {
        let a = parse_network("1: A -> B\n2: B ->").unwrap();
        let b = parse_network("1: A -> B + C\n2: B ->\n3: C ->").unwrap();
        assert!(matches!(
            is_augmentation(&a, &b),
            Err(AugmentError::OldReactionTouchesNewMetabolite(_, _))
        ));
    }

    #[test]
    fn new_metabolite_with_selection() {
        let a = parse_network("f: -> A\n1: A -> B\n2: B ->").unwrap();
        // add metabolite C fed from a new reaction and consumed by another
        let b = parse_network("f: -> A\n1: A -> B\n2: B ->\nn1: B -> C\nn2: C ->").unwrap();
        let w = is_augmentation(&a, &b).unwrap();
        assert_eq!(w.new_metabolites.len(), 1);
        assert_eq!(w.new_reactions.len(), 2);
        assert!(w.hypothesis_verified);
        let (sel, det) = w.partial_selection.unwrap();
        assert_eq!(sel.len(), 1);
        assert!(!det.is_zero());
        // persistence holds
        let ia = influence_matrix(&a, &InfluenceConfig::default()).unwrap();
        let ib = influence_matrix(&b, &InfluenceConfig::default()).unwrap();
        let rep = check_augmenticity(&a, &b, &ia, &ib).unwrap();
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
    }

    #[test]
    fn exits_extension_and_menetekel() {
        let net = parse_network(include_str!("../fixtures/fig31.net")).unwrap();
        let ext = extend_with_exits(&net);
        // I and J already have monomolecular exits (14, 15)
        assert_eq!(ext.num_reactions(), net.num_reactions() + 8);
        let again = extend_with_exits(&ext);
        assert_eq!(again.num_reactions(), ext.num_reactions());
        // menetekel lumping: the canonical exit selection certifies
        // j* ~> j' whenever j* changes a mother metabolite of j'; the
        // strongly connected part of that relation collapses into one class.
        // For fig31 + exits that is the recycling core 5..13 together with
        // the new exits of its metabolites; 3 and 4 sit strictly upstream
        // and stay singletons.
        let infl = influence_matrix(&ext, &InfluenceConfig::default()).unwrap();
        let classes = flux_classes(&infl);
        let big = classes.iter().max_by_key(|c| c.members.len()).unwrap();
        let mut expect: Vec<usize> = [
            "5", "6", "7", "8", "9", "10", "11", "12", "13", "exit_C", "exit_D",
            "exit_F", "exit_E", "exit_G", "exit_H",
        ]
        .iter()
        .map(|n| ext.reaction_index(n).unwrap())
        .collect();
        expect.sort_unstable();
        assert_eq!(big.members, expect);
    }

    #[test]
    fn okada_full_subset_passes() {
        let net = parse_network(include_str!("../fixtures/fig31.net")).unwrap();
        let infl = influence_matrix(&net, &InfluenceConfig::default()).unwrap();
        let field = PrimeField::new((1u128 << 61) - 1);
        let e0: Vec<usize> = (0..net.num_reactions()).collect();
        let m0: Vec<usize> = (0..net.num_metabolites()).collect();
        let rep = okada_check(&net, &e0, &m0, &infl, &field).unwrap();
        assert!(rep.contained);
    }

    #[test]
    fn okada_rejects_incomplete_subset() {
        let net = parse_network(include_str!("../fixtures/fig31.net")).unwrap();
        let infl = influence_matrix(&net, &InfluenceConfig::default()).unwrap();
        let field = PrimeField::new((1u128 << 61) - 1);
        // M0 = {C} but C's children {5, 6} not both included
        let c = net.metabolite_index("C").unwrap();
        let five = net.reaction_index("5").unwrap();
        let rep = okada_check(&net, &[five], &[c], &infl, &field);
        assert!(matches!(rep, Err(OkadaError::NotOutputComplete { .. })));
    }

    #[test]
    fn chain_extension_gains_downstream_influence_only() {
        // a pure chain has no recycling, so the menetekel lumping does not
        // apply: influence in the extension still flows downstream only
        let net = parse_network(include_str!("../fixtures/square.net")).unwrap();
        let ext = extend_with_exits(&net);
        let infl = influence_matrix(&ext, &InfluenceConfig::default()).unwrap();
        assert!(infl.flux(0, 1), "1 ~> 2 downstream");
        assert!(!infl.flux(1, 0), "2 must not influence 1 upstream");
        assert!(infl.flux(0, 0) && infl.flux(1, 1), "self-influence via exits");
        // each chain reaction lumps with the exit of its mother (they respond
        // to each other through the shared metabolite), but no class spans
        // different chain levels
        let g = condense_and_reduce(&infl);
        let exit_a = ext.reaction_index("exit_A").unwrap();
        let exit_b = ext.reaction_index("exit_B").unwrap();
        assert_eq!(g.class_of[0], g.class_of[exit_a]);
        assert_eq!(g.class_of[1], g.class_of[exit_b]);
        assert_ne!(g.class_of[0], g.class_of[1]);
        assert_eq!(g.classes[g.class_of[2]].members, vec![2]);
    }
}
