//! Reaction network representation, the text format parser, and the
//! structures derived from stoichiometry alone: the stoichiometric matrix S,
//! the input pattern m |- j, and the single-child relation.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::gf::PrimeField;
use crate::linalg::IntMatrix;

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: duplicate reaction name `{name}`")]
    DuplicateReaction { line: usize, name: String },
    #[error("line {line}: coefficient must be a positive integer")]
    BadCoefficient { line: usize },
    #[error("network is empty")]
    Empty,
    #[error("stoichiometric matrix has rank {rank} < {metabolites}; networks with conserved linear combinations are not supported")]
    RankDeficient { rank: usize, metabolites: usize },
    #[error("invalid JSON network: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown metabolite `{0}` in JSON network")]
    UnknownMetabolite(String),
}

/// A chemical species. Index order equals first-appearance order and is
/// stable across parse/serialize round trips.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metabolite {
    pub id: usize,
    pub name: String,
}

/// One reaction with integer stoichiometric input and output vectors.
/// Feed reactions have empty inputs, exit reactions empty outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reaction {
    pub id: usize,
    pub name: String,
    /// (metabolite id, coefficient >= 1), sorted by metabolite id
    pub inputs: Vec<(usize, u64)>,
    pub outputs: Vec<(usize, u64)>,
}

impl Reaction {
    pub fn input_coeff(&self, m: usize) -> u64 {
        self.inputs
            .iter()
            .find(|(mm, _)| *mm == m)
            .map_or(0, |(_, c)| *c)
    }

    pub fn output_coeff(&self, m: usize) -> u64 {
        self.outputs
            .iter()
            .find(|(mm, _)| *mm == m)
            .map_or(0, |(_, c)| *c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReactionNetwork {
    pub metabolites: Vec<Metabolite>,
    pub reactions: Vec<Reaction>,
}

impl ReactionNetwork {
    pub fn num_metabolites(&self) -> usize {
        self.metabolites.len()
    }

    pub fn num_reactions(&self) -> usize {
        self.reactions.len()
    }

    pub fn metabolite_index(&self, name: &str) -> Option<usize> {
        self.metabolites.iter().position(|m| m.name == name)
    }

    pub fn reaction_index(&self, name: &str) -> Option<usize> {
        self.reactions.iter().position(|r| r.name == name)
    }

    /// Children of metabolite m: reactions with m as input.
    pub fn children(&self, m: usize) -> impl Iterator<Item = usize> + '_ {
        self.reactions
            .iter()
            .filter(move |r| r.input_coeff(m) > 0)
            .map(|r| r.id)
    }
}

/// M x E integer matrix with S_{mj} = output coeff - input coeff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoichMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<i64>,
}

impl StoichMatrix {
    pub fn get(&self, m: usize, j: usize) -> i64 {
        self.entries[m * self.cols + j]
    }

    /// Square minor formed by the given columns, in the given order.
    pub fn column_minor(&self, cols: &[usize]) -> IntMatrix {
        let mut out = IntMatrix::zeros(self.rows, cols.len());
        for (k, &j) in cols.iter().enumerate() {
            for m in 0..self.rows {
                out.set(m, k, self.get(m, j).into());
            }
        }
        out
    }

    pub fn to_int_matrix(&self) -> IntMatrix {
        self.column_minor(&(0..self.cols).collect::<Vec<_>>())
    }
}

/// The input relation m |- j as an explicit edge set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputPattern {
    /// (metabolite, reaction) pairs with nonzero input coefficient
    pub edges: Vec<(usize, usize)>,
}

impl InputPattern {
    pub fn contains(&self, m: usize, j: usize) -> bool {
        self.edges.binary_search(&(m, j)).is_ok()
    }
}

fn valid_name(tok: &str) -> bool {
    !tok.is_empty()
        && tok
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, ',' | '.' | '-' | '_'))
}

struct Builder {
    net: ReactionNetwork,
    met_index: HashMap<String, usize>,
    rxn_names: HashMap<String, usize>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            net: ReactionNetwork::default(),
            met_index: HashMap::new(),
            rxn_names: HashMap::new(),
        }
    }

    fn metabolite(&mut self, name: &str) -> usize {
        if let Some(&i) = self.met_index.get(name) {
            return i;
        }
        let id = self.net.metabolites.len();
        self.net.metabolites.push(Metabolite {
            id,
            name: name.to_string(),
        });
        self.met_index.insert(name.to_string(), id);
        id
    }

    fn push_reaction(
        &mut self,
        line: usize,
        name: &str,
        inputs: Vec<(usize, u64)>,
        outputs: Vec<(usize, u64)>,
    ) -> Result<(), NetworkError> {
        if self.rxn_names.contains_key(name) {
            return Err(NetworkError::DuplicateReaction {
                line,
                name: name.to_string(),
            });
        }
        let id = self.net.reactions.len();
        self.rxn_names.insert(name.to_string(), id);
        let mut inputs = inputs;
        let mut outputs = outputs;
        inputs.sort_unstable();
        outputs.sort_unstable();
        self.net.reactions.push(Reaction {
            id,
            name: name.to_string(),
            inputs,
            outputs,
        });
        Ok(())
    }
}

/// Parse the network text format: one reaction per line,
/// `name ":" [term ("+" term)*] "->" [term ("+" term)*]`,
/// `term := [integer] metabolite`. `<->` expands to a reaction pair with
/// `a`/`b` suffixes. `#` lines are comments.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, NetworkError> {
    let mut b = Builder::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (name, rest) = trimmed.split_once(':').ok_or_else(|| NetworkError::Syntax {
            line,
            msg: "expected `name: lhs -> rhs`".into(),
        })?;
        let name = name.trim();
        if !valid_name(name) {
            return Err(NetworkError::Syntax {
                line,
                msg: format!("invalid reaction name `{name}`"),
            });
        }
        let (reversible, lhs, rhs) = if let Some((l, r)) = rest.split_once("<->") {
            (true, l, r)
        } else if let Some((l, r)) = rest.split_once("->") {
            (false, l, r)
        } else {
            return Err(NetworkError::Syntax {
                line,
                msg: "missing `->`".into(),
            });
        };
        let inputs = parse_side(&mut b, line, lhs)?;
        let outputs = parse_side(&mut b, line, rhs)?;
        if reversible {
            b.push_reaction(line, &format!("{name}a"), inputs.clone(), outputs.clone())?;
            b.push_reaction(line, &format!("{name}b"), outputs, inputs)?;
        } else {
            b.push_reaction(line, name, inputs, outputs)?;
        }
    }
    if b.net.reactions.is_empty() || b.net.metabolites.is_empty() {
        return Err(NetworkError::Empty);
    }
    Ok(b.net)
}

fn parse_side(
    b: &mut Builder,
    line: usize,
    side: &str,
) -> Result<Vec<(usize, u64)>, NetworkError> {
    let mut acc: HashMap<usize, u64> = HashMap::new();
    let mut pending_coeff: Option<u64> = None;
    for tok in side.split_whitespace() {
        if tok == "+" {
            if pending_coeff.is_some() {
                return Err(NetworkError::Syntax {
                    line,
                    msg: "coefficient without metabolite".into(),
                });
            }
            continue;
        }
        if tok.chars().all(|c| c.is_ascii_digit()) {
            let c: u64 = tok.parse().map_err(|_| NetworkError::Syntax {
                line,
                msg: format!("bad coefficient `{tok}`"),
            })?;
            if c == 0 {
                return Err(NetworkError::BadCoefficient { line });
            }
            if pending_coeff.replace(c).is_some() {
                return Err(NetworkError::Syntax {
                    line,
                    msg: "two coefficients in a row".into(),
                });
            }
            continue;
        }
        if !valid_name(tok) {
            return Err(NetworkError::Syntax {
                line,
                msg: format!("invalid metabolite name `{tok}`"),
            });
        }
        let m = b.metabolite(tok);
        let c = pending_coeff.take().unwrap_or(1);
        *acc.entry(m).or_insert(0) += c;
    }
    if pending_coeff.is_some() {
        return Err(NetworkError::Syntax {
            line,
            msg: "trailing coefficient without metabolite".into(),
        });
    }
    let mut v: Vec<(usize, u64)> = acc.into_iter().collect();
    v.sort_unstable();
    Ok(v)
}

/// Render a network back to the text format, one reaction per line.
pub fn serialize_network(net: &ReactionNetwork) -> String {
    let mut out = String::new();
    for r in &net.reactions {
        let side = |terms: &[(usize, u64)]| {
            terms
                .iter()
                .map(|&(m, c)| {
                    if c == 1 {
                        net.metabolites[m].name.clone()
                    } else {
                        format!("{c} {}", net.metabolites[m].name)
                    }
                })
                .collect::<Vec<_>>()
                .join(" + ")
        };
        let _ = writeln!(out, "{}: {} -> {}", r.name, side(&r.inputs), side(&r.outputs));
    }
    out
}

#[derive(Serialize, Deserialize)]
struct ReactionJson {
    name: String,
    #[serde(default)]
    inputs: Vec<(String, u64)>,
    #[serde(default)]
    outputs: Vec<(String, u64)>,
}

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    metabolites: Vec<String>,
    reactions: Vec<ReactionJson>,
}

/// JSON mirror of the text format, carrying the same fields.
pub fn network_to_json(net: &ReactionNetwork) -> String {
    let doc = NetworkJson {
        metabolites: net.metabolites.iter().map(|m| m.name.clone()).collect(),
        reactions: net
            .reactions
            .iter()
            .map(|r| ReactionJson {
                name: r.name.clone(),
                inputs: r
                    .inputs
                    .iter()
                    .map(|&(m, c)| (net.metabolites[m].name.clone(), c))
                    .collect(),
                outputs: r
                    .outputs
                    .iter()
                    .map(|&(m, c)| (net.metabolites[m].name.clone(), c))
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("network serializes")
}

pub fn network_from_json(text: &str) -> Result<ReactionNetwork, NetworkError> {
    let doc: NetworkJson = serde_json::from_str(text)?;
    let mut b = Builder::new();
    for name in &doc.metabolites {
        b.metabolite(name);
    }
    for (i, r) in doc.reactions.iter().enumerate() {
        let lookup = |pairs: &[(String, u64)]| -> Result<Vec<(usize, u64)>, NetworkError> {
            pairs
                .iter()
                .map(|(n, c)| {
                    b.met_index
                        .get(n)
                        .map(|&m| (m, *c))
                        .ok_or_else(|| NetworkError::UnknownMetabolite(n.clone()))
                })
                .collect()
        };
        let inputs = lookup(&r.inputs)?;
        let outputs = lookup(&r.outputs)?;
        b.push_reaction(i + 1, &r.name, inputs, outputs)?;
    }
    if b.net.reactions.is_empty() || b.net.metabolites.is_empty() {
        return Err(NetworkError::Empty);
    }
    Ok(b.net)
}

pub fn stoich_matrix(net: &ReactionNetwork) -> StoichMatrix {
    let (m, e) = (net.num_metabolites(), net.num_reactions());
    let mut entries = vec![0i64; m * e];
    for r in &net.reactions {
        for &(mm, c) in &r.inputs {
            entries[mm * e + r.id] -= c as i64;
        }
        for &(mm, c) in &r.outputs {
            entries[mm * e + r.id] += c as i64;
        }
    }
    StoichMatrix {
        rows: m,
        cols: e,
        entries,
    }
}

pub fn input_pattern(net: &ReactionNetwork) -> InputPattern {
    let mut edges: Vec<(usize, usize)> = net
        .reactions
        .iter()
        .flat_map(|r| r.inputs.iter().map(move |&(m, _)| (m, r.id)))
        .collect();
    edges.sort_unstable();
    InputPattern { edges }
}

/// All pairs (j*, m*) where j* is the only child of its mother m*.
pub fn single_children(net: &ReactionNetwork) -> Vec<(usize, usize)> {
    let mut child_count = vec![0usize; net.num_metabolites()];
    let mut only_child = vec![usize::MAX; net.num_metabolites()];
    for r in &net.reactions {
        for &(m, _) in &r.inputs {
            child_count[m] += 1;
            only_child[m] = r.id;
        }
    }
    let mut out: Vec<(usize, usize)> = (0..net.num_metabolites())
        .filter(|&m| child_count[m] == 1)
        .map(|m| (only_child[m], m))
        .collect();
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RankReport {
    pub rank: usize,
    pub metabolites: usize,
    pub exact: bool,
}

/// Verify rank S = M. Uses exact fraction-free elimination when the network
/// is small enough, otherwise rank modulo the working prime (a random 127-bit
/// prime makes a rank drop below the rational rank negligible).
pub fn validate_full_rank(
    net: &ReactionNetwork,
    field: &PrimeField,
) -> Result<RankReport, NetworkError> {
    let s = stoich_matrix(net);
    let m = net.num_metabolites();
    let exact = net.num_reactions() + m <= 64;
    let rank = if exact {
        s.to_int_matrix().rank()
    } else {
        crate::linalg::FieldMatrix::from_int(&s.to_int_matrix(), field).rank(field)
    };
    if rank == m {
        Ok(RankReport {
            rank,
            metabolites: m,
            exact,
        })
    } else {
        Err(NetworkError::RankDeficient {
            rank,
            metabolites: m,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_table_style_lines() {
        let net = parse_network("1: Glucose + PEP -> G6P + PYR\nf1: -> Glucose\n").unwrap();
        assert_eq!(net.num_reactions(), 2);
        let r = &net.reactions[0];
        let g = net.metabolite_index("Glucose").unwrap();
        let pep = net.metabolite_index("PEP").unwrap();
        assert_eq!(r.input_coeff(g), 1);
        assert_eq!(r.input_coeff(pep), 1);
        assert_eq!(r.outputs.len(), 2);
        let f1 = &net.reactions[1];
        assert!(f1.inputs.is_empty());
        assert_eq!(f1.output_coeff(g), 1);
    }

    #[test]
    fn bimolecular_reaction() {
        let net = parse_network("12: G + H -> I").unwrap();
        let pat = input_pattern(&net);
        assert_eq!(pat.edges.len(), 2);
    }

    #[test]
    fn coefficients_and_odd_names() {
        let net = parse_network("r: 2 A + F1,6P -> 3 2-KG").unwrap();
        let a = net.metabolite_index("A").unwrap();
        let f = net.metabolite_index("F1,6P").unwrap();
        let kg = net.metabolite_index("2-KG").unwrap();
        let r = &net.reactions[0];
        assert_eq!(r.input_coeff(a), 2);
        assert_eq!(r.input_coeff(f), 1);
        assert_eq!(r.output_coeff(kg), 3);
    }

    #[test]
    fn reversible_sugar_expands() {
        let net = parse_network("2: G6P <-> F6P").unwrap();
        assert_eq!(net.reactions[0].name, "2a");
        assert_eq!(net.reactions[1].name, "2b");
        let s = stoich_matrix(&net);
        assert_eq!(s.get(0, 0), -s.get(0, 1));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_network("x: A ->\nx: B ->").is_err());
        assert!(parse_network("x A -> B").is_err());
        assert!(parse_network("x: 0 A -> B").is_err());
        assert!(matches!(
            parse_network("x: A -> B\n y: ??? -> B"),
            Err(NetworkError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn stoich_columns() {
        let net = parse_network("12: G + H -> I\ncat: A -> A\nf1: -> Glucose").unwrap();
        let s = stoich_matrix(&net);
        let g = net.metabolite_index("G").unwrap();
        let h = net.metabolite_index("H").unwrap();
        let i = net.metabolite_index("I").unwrap();
        assert_eq!(s.get(g, 0), -1);
        assert_eq!(s.get(h, 0), -1);
        assert_eq!(s.get(i, 0), 1);
        // catalyst column is all zero but still an input
        let a = net.metabolite_index("A").unwrap();
        assert_eq!(s.get(a, 1), 0);
        assert!(input_pattern(&net).contains(a, 1));
        // feed column
        let glc = net.metabolite_index("Glucose").unwrap();
        assert_eq!(s.get(glc, 2), 1);
        assert!(net.reactions[2].inputs.is_empty());
    }

    #[test]
    fn single_children_simple() {
        // chain: A consumed by exactly one reaction
        let net = parse_network("f: -> A\n1: A -> B\n2: B -> C\n3: B -> D").unwrap();
        let a = net.metabolite_index("A").unwrap();
        assert_eq!(single_children(&net), vec![(1, a)]);
    }

    #[test]
    fn round_trip_identity() {
        let text = "1: Glucose + PEP -> G6P + PYR\nf1: -> Glucose\nd1: Lactate ->\nx: 2 A + B -> C\n";
        let net = parse_network(text).unwrap();
        let net2 = parse_network(&serialize_network(&net)).unwrap();
        assert_eq!(net, net2);
        let net3 = network_from_json(&network_to_json(&net)).unwrap();
        assert_eq!(net, net3);
    }

    #[test]
    fn rank_validation() {
        let field = PrimeField::new((1u128 << 61) - 1);
        // A->B and B->A only: rank 1 < 2
        let bad = parse_network("1: A -> B\n2: B -> A").unwrap();
        assert!(matches!(
            validate_full_rank(&bad, &field),
            Err(NetworkError::RankDeficient {
                rank: 1,
                metabolites: 2
            })
        ));
        // single reaction A -> (exit): rank 1 = M
        let ok = parse_network("1: A ->").unwrap();
        assert_eq!(validate_full_rank(&ok, &field).unwrap().rank, 1);
    }
}
