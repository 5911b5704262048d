//! Analysis report (JSON schema "v1"), DOT emitter for the full flux
//! influence graph, and the 0/1 heatmap CSV of the influence matrix.
//! All outputs are deterministic: identical seed and inputs give
//! byte-identical files.

use serde::{Deserialize, Serialize};

use crate::graphkit::FullInfluenceGraph;
use crate::influence::{InfluenceConfig, InfluenceMatrix};
use crate::network::{serialize_network, ReactionNetwork};

/// FNV-1a over the canonical serialization; cheap, stable network identity.
pub fn network_digest(net: &ReactionNetwork) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in serialize_network(net).bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    format!("{h:016x}")
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct NetworkSummary {
    pub digest: String,
    pub metabolites: Vec<String>,
    pub reactions: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ClassReport {
    pub members: Vec<String>,
    pub self_influential: bool,
    pub direct_metabolites: Vec<String>,
    pub influenced_metabolites: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ReactionSets {
    pub reaction: String,
    pub influenced_fluxes: Vec<String>,
    pub influenced_metabolites: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct AnalysisReport {
    pub schema: String,
    pub network: NetworkSummary,
    pub seed: u64,
    pub prime_bits: u32,
    pub repeats: u32,
    pub extended: bool,
    /// decimal strings (u128 does not fit JSON numbers)
    pub primes: Vec<String>,
    pub regular: bool,
    pub false_zero_bound: f64,
    /// row legend: reaction names then metabolite names
    pub row_legend: Vec<String>,
    pub col_legend: Vec<String>,
    /// row-major booleans as 0/1 strings, one per row
    pub influence_rows: Vec<String>,
    pub classes: Vec<ClassReport>,
    /// reduced DAG edges by class index
    pub edges: Vec<(usize, usize)>,
    pub per_reaction: Vec<ReactionSets>,
}

pub fn build_report(
    net: &ReactionNetwork,
    cfg: &InfluenceConfig,
    infl: &InfluenceMatrix,
    full: &FullInfluenceGraph,
) -> AnalysisReport {
    let rname = |j: usize| net.reactions[j].name.clone();
    let mname = |m: usize| net.metabolites[m].name.clone();
    let mut row_legend: Vec<String> = (0..net.num_reactions()).map(rname).collect();
    row_legend.extend((0..net.num_metabolites()).map(mname));
    let col_legend: Vec<String> = row_legend[..infl.cols()].to_vec();
    let influence_rows = (0..infl.rows())
        .map(|b| {
            (0..infl.cols())
                .map(|a| if infl.get(b, a) { '1' } else { '0' })
                .collect()
        })
        .collect();
    let classes = full
        .pure
        .classes
        .iter()
        .enumerate()
        .map(|(c, class)| ClassReport {
            members: class.members.iter().map(|&j| rname(j)).collect(),
            self_influential: class.self_influential,
            direct_metabolites: full.direct[c].iter().map(|&m| mname(m)).collect(),
            influenced_metabolites: full.influenced[c].iter().map(|&m| mname(m)).collect(),
        })
        .collect();
    let per_reaction = (0..net.num_reactions())
        .map(|j| {
            let (i_e, i_m) = crate::graphkit::influence_sets(full, j);
            ReactionSets {
                reaction: rname(j),
                influenced_fluxes: i_e.into_iter().map(rname).collect(),
                influenced_metabolites: i_m.into_iter().map(mname).collect(),
            }
        })
        .collect();
    AnalysisReport {
        schema: "v1".into(),
        network: NetworkSummary {
            digest: network_digest(net),
            metabolites: (0..net.num_metabolites()).map(mname).collect(),
            reactions: (0..net.num_reactions()).map(rname).collect(),
        },
        seed: cfg.seed,
        prime_bits: cfg.prime_bits,
        repeats: cfg.repeats,
        extended: cfg.extended,
        primes: infl.primes_used.iter().map(|p| p.to_string()).collect(),
        regular: true,
        false_zero_bound: infl.false_zero_bound,
        row_legend,
        col_legend,
        influence_rows,
        classes,
        edges: full.pure.edges.clone(),
        per_reaction,
    }
}

fn class_label(net: &ReactionNetwork, full: &FullInfluenceGraph, c: usize) -> String {
    let members = full.pure.classes[c]
        .members
        .iter()
        .map(|&j| net.reactions[j].name.clone())
        .collect::<Vec<_>>()
        .join(",");
    let mets = full.direct[c]
        .iter()
        .map(|&m| net.metabolites[m].name.clone())
        .collect::<Vec<_>>()
        .join(",");
    format!("\u{27e8}{members}\u{27e9}|\\{{{mets}\\}}")
}

/// DOT for the full flux influence graph: one record node per class
/// ("<members>|{M^d}"), self-influential classes drawn bold, terminal sink
/// classes with identical predecessor sets coalesced into one multi-column
/// record.
pub fn to_dot(net: &ReactionNetwork, full: &FullInfluenceGraph) -> String {
    let g = &full.pure;
    let k = g.classes.len();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut has_out = vec![false; k];
    for &(u, v) in &g.edges {
        preds[v].push(u);
        has_out[u] = true;
    }
    // coalesce sinks: group sink classes by predecessor set
    let mut group_of: Vec<Option<usize>> = vec![None; k];
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new(); // (preds, classes)
    for c in 0..k {
        if has_out[c] || preds[c].is_empty() {
            continue;
        }
        if let Some(gi) = groups.iter().position(|(p, _)| *p == preds[c]) {
            groups[gi].1.push(c);
            group_of[c] = Some(gi);
        } else {
            group_of[c] = Some(groups.len());
            groups.push((preds[c].clone(), vec![c]));
        }
    }
    let mut out = String::from("digraph influence {\n  rankdir=TB;\n  node [shape=record];\n");
    for c in 0..k {
        if group_of[c].is_some() {
            continue;
        }
        let style = if g.classes[c].self_influential {
            ", style=bold"
        } else {
            ""
        };
        out.push_str(&format!(
            "  c{c} [label=\"{}\"{style}];\n",
            class_label(net, full, c)
        ));
    }
    for (gi, (_, members)) in groups.iter().enumerate() {
        let cols = members
            .iter()
            .map(|&c| format!("<c{c}> {}", class_label(net, full, c)))
            .collect::<Vec<_>>()
            .join(" | ");
        let bold = if members.iter().any(|&c| g.classes[c].self_influential) {
            ", style=bold"
        } else {
            ""
        };
        out.push_str(&format!("  g{gi} [label=\"{cols}\"{bold}];\n"));
    }
    let mut drawn: std::collections::BTreeSet<(usize, String)> = Default::default();
    for &(u, v) in &g.edges {
        let target = match group_of[v] {
            Some(gi) => format!("g{gi}:c{v}"),
            None => format!("c{v}"),
        };
        if drawn.insert((u, target.clone())) {
            out.push_str(&format!("  c{u} -> {target};\n"));
        }
    }
    out.push_str("}\n");
    out
}

/// CSV heatmap: rows E u M, columns E, cells 0/1.
pub fn to_heatmap_csv(net: &ReactionNetwork, infl: &InfluenceMatrix) -> String {
    let mut out = String::new();
    out.push_str("row");
    for j in 0..infl.cols() {
        let name = if j < net.num_reactions() {
            &net.reactions[j].name
        } else {
            &net.metabolites[j - net.num_reactions()].name
        };
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for b in 0..infl.rows() {
        let name = if b < net.num_reactions() {
            &net.reactions[b].name
        } else {
            &net.metabolites[b - net.num_reactions()].name
        };
        out.push_str(name);
        for a in 0..infl.cols() {
            out.push(',');
            out.push(if infl.get(b, a) { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphkit::{condense_and_reduce, metabolite_annotations};
    use crate::influence::influence_matrix;
    use crate::network::parse_network;

    fn analyzed() -> (ReactionNetwork, InfluenceConfig, InfluenceMatrix, FullInfluenceGraph) {
        let net = parse_network(include_str!("../fixtures/fig31.net")).unwrap();
        let cfg = InfluenceConfig::default();
        let infl = influence_matrix(&net, &cfg).unwrap();
        let graph = condense_and_reduce(&infl);
        let full = metabolite_annotations(&infl, &graph).unwrap();
        (net, cfg, infl, full)
    }

    #[test]
    fn report_round_trips() {
        let (net, cfg, infl, full) = analyzed();
        let rep = build_report(&net, &cfg, &infl, &full);
        assert_eq!(rep.schema, "v1");
        let json = serde_json::to_string_pretty(&rep).unwrap();
        let back: AnalysisReport = serde_json::from_str(&json).unwrap();
        assert_eq!(rep, back);
    }

    #[test]
    fn deterministic_outputs_per_seed() {
        let (net, cfg, infl, full) = analyzed();
        let (net2, cfg2, infl2, full2) = analyzed();
        let a = serde_json::to_string_pretty(&build_report(&net, &cfg, &infl, &full)).unwrap();
        let b = serde_json::to_string_pretty(&build_report(&net2, &cfg2, &infl2, &full2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(to_dot(&net, &full), to_dot(&net2, &full2));
        assert_eq!(to_heatmap_csv(&net, &infl), to_heatmap_csv(&net2, &infl2));
    }

    #[test]
    fn dot_contains_class_10_13() {
        let (net, _, _, full) = analyzed();
        let dot = to_dot(&net, &full);
        assert!(dot.contains("\u{27e8}10,13\u{27e9}"), "{dot}");
        assert!(dot.contains("shape=record"));
        // annotations of the sinks
        assert!(dot.contains("\u{27e8}11\u{27e9}|\\{G,H\\}"), "{dot}");
        assert!(dot.contains("\u{27e8}12\u{27e9}|\\{H\\}"), "{dot}");
    }

    #[test]
    fn heatmap_matches_matrix() {
        let (net, _, infl, _) = analyzed();
        let csv = to_heatmap_csv(&net, &infl);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + infl.rows());
        for (b, line) in lines[1..].iter().enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            for a in 0..infl.cols() {
                assert_eq!(cells[a + 1] == "1", infl.get(b, a));
            }
        }
    }

    #[test]
    fn digest_stable_and_sensitive() {
        let a = parse_network("1: A -> B").unwrap();
        let b = parse_network("1: A -> B").unwrap();
        let c = parse_network("1: A -> C").unwrap();
        assert_eq!(network_digest(&a), network_digest(&b));
        assert_ne!(network_digest(&a), network_digest(&c));
    }
}
