//! Condensation of the influence matrix into the pure flux influence graph F
//! (mutual-influence classes, transitively reduced DAG) and the full flux
//! influence graph with direct/indirect metabolite annotations.

use crate::influence::InfluenceMatrix;

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error(
        "inconsistent metabolite annotation at class {class}: metabolite {metabolite} \
         breaks the direct/indirect decomposition — likely a false zero, re-run with \
         more repeats or a fresh seed"
    )]
    InconsistentAnnotation { class: usize, metabolite: usize },
}

/// A mutual flux influence class: an SCC of the reaction-level influence
/// digraph. Multi-element classes are self-influential by transitivity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FluxClass {
    /// member reaction ids, ascending
    pub members: Vec<usize>,
    pub self_influential: bool,
}

/// Condensation DAG with transitively reduced edges. Classes are stored in
/// topological order, ties broken by smallest member reaction id.
#[derive(Debug, Clone)]
pub struct PureInfluenceGraph {
    pub classes: Vec<FluxClass>,
    /// reduced edges (from, to) by class index; reachability of the reduced
    /// graph equals class-level influence exactly
    pub edges: Vec<(usize, usize)>,
    /// reaction id -> class index
    pub class_of: Vec<usize>,
    /// strict reachability closure on classes
    reach: Vec<Vec<bool>>,
}

impl PureInfluenceGraph {
    /// Is there a directed path (length >= 1) from class a to class b?
    pub fn reaches(&self, a: usize, b: usize) -> bool {
        self.reach[a][b]
    }
}

/// Full graph: each class carries its direct metabolite set M^d and the
/// total metabolite influence set I_M.
#[derive(Debug, Clone)]
pub struct FullInfluenceGraph {
    pub pure: PureInfluenceGraph,
    /// M^d per class, sorted metabolite ids
    pub direct: Vec<Vec<usize>>,
    /// I_M per class, sorted metabolite ids
    pub influenced: Vec<Vec<usize>>,
}

/// Iterative Tarjan SCC. Returns components in reverse topological order
/// (sinks first), members ascending.
fn tarjan_scc(n: usize, adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    #[derive(Clone)]
    struct Node {
        index: usize,
        low: usize,
        on_stack: bool,
        visited: bool,
    }
    let mut nodes = vec![
        Node {
            index: 0,
            low: 0,
            on_stack: false,
            visited: false
        };
        n
    ];
    let mut counter = 0;
    let mut stack: Vec<usize> = Vec::new();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    // explicit DFS stack of (vertex, next-neighbor cursor)
    let mut work: Vec<(usize, usize)> = Vec::new();
    for start in 0..n {
        if nodes[start].visited {
            continue;
        }
        work.push((start, 0));
        while let Some(&mut (v, ref mut cursor)) = work.last_mut() {
            if *cursor == 0 {
                nodes[v].visited = true;
                nodes[v].index = counter;
                nodes[v].low = counter;
                counter += 1;
                stack.push(v);
                nodes[v].on_stack = true;
            }
            if let Some(&w) = adj[v].get(*cursor) {
                *cursor += 1;
                if !nodes[w].visited {
                    work.push((w, 0));
                } else if nodes[w].on_stack {
                    nodes[v].low = nodes[v].low.min(nodes[w].index);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    let l = nodes[v].low;
                    nodes[parent].low = nodes[parent].low.min(l);
                }
                if nodes[v].low == nodes[v].index {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        nodes[w].on_stack = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// The mutual flux influence classes of the reaction-level digraph
/// j* -> j' iff j* influences the flux of j'.
pub fn flux_classes(infl: &InfluenceMatrix) -> Vec<FluxClass> {
    condense_and_reduce(infl).classes
}

/// Condense the reaction influence digraph into its DAG of classes and
/// transitively reduce the edges (unique for a DAG).
pub fn condense_and_reduce(infl: &InfluenceMatrix) -> PureInfluenceGraph {
    let e = infl.num_reactions;
    let adj: Vec<Vec<usize>> = (0..e)
        .map(|j| (0..e).filter(|&j2| infl.flux(j, j2)).collect())
        .collect();
    let comps = tarjan_scc(e, &adj);
    let k = comps.len();
    let mut class_of = vec![0usize; e];
    for (c, comp) in comps.iter().enumerate() {
        for &j in comp {
            class_of[j] = c;
        }
    }
    // class-level strict influence
    let mut cadj = vec![vec![false; k]; k];
    for j in 0..e {
        for &j2 in &adj[j] {
            let (a, b) = (class_of[j], class_of[j2]);
            if a != b {
                cadj[a][b] = true;
            }
        }
    }
    // strict reachability closure (DAG): process in topological order.
    // Tarjan emits sinks first, so reverse order is topological.
    let topo: Vec<usize> = (0..k).rev().collect();
    let mut reach = vec![vec![false; k]; k];
    for &v in topo.iter().rev() {
        // sinks first: reach[v] = U over direct successors w of {w} + reach[w]
        for w in 0..k {
            if cadj[v][w] {
                reach[v][w] = true;
                let row = reach[w].clone();
                for (x, r) in row.iter().enumerate() {
                    if *r {
                        reach[v][x] = true;
                    }
                }
            }
        }
    }
    // transitive reduction: keep (u,v) iff no intermediate w with
    // u -> w and w reaches v
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for u in 0..k {
        for v in 0..k {
            if !cadj[u][v] {
                continue;
            }
            let redundant = (0..k).any(|w| w != v && cadj[u][w] && reach[w][v]);
            if !redundant {
                edges.push((u, v));
            }
        }
    }
    // deterministic display order: topological, ties by smallest member
    let mut order = topo;
    order.sort_by_key(|&c| {
        let depth = (0..k).filter(|&p| reach[p][c]).count();
        (depth, comps[c][0])
    });
    let mut new_index = vec![0usize; k];
    for (i, &c) in order.iter().enumerate() {
        new_index[c] = i;
    }
    let classes: Vec<FluxClass> = order
        .iter()
        .map(|&c| {
            let members = comps[c].clone();
            let self_influential = members.len() >= 2 || infl.flux(members[0], members[0]);
            FluxClass {
                members,
                self_influential,
            }
        })
        .collect();
    let mut edges: Vec<(usize, usize)> = edges
        .into_iter()
        .map(|(u, v)| (new_index[u], new_index[v]))
        .collect();
    edges.sort_unstable();
    let mut new_reach = vec![vec![false; k]; k];
    for a in 0..k {
        for b in 0..k {
            new_reach[new_index[a]][new_index[b]] = reach[a][b];
        }
    }
    for j in 0..e {
        class_of[j] = new_index[class_of[j]];
    }
    PureInfluenceGraph {
        classes,
        edges,
        class_of,
        reach: new_reach,
    }
}

/// Annotate each class with I_M (from the metabolite rows of the matrix) and
/// the direct set M^d = I_M minus everything attributable to a strictly
/// downstream class.
pub fn metabolite_annotations(
    infl: &InfluenceMatrix,
    graph: &PureInfluenceGraph,
) -> Result<FullInfluenceGraph, GraphError> {
    let m = infl.num_metabolites;
    let k = graph.classes.len();
    let mut influenced: Vec<Vec<usize>> = Vec::with_capacity(k);
    for (c, class) in graph.classes.iter().enumerate() {
        let first: Vec<usize> = (0..m).filter(|&mm| infl.metab(class.members[0], mm)).collect();
        for &j in &class.members[1..] {
            let row: Vec<usize> = (0..m).filter(|&mm| infl.metab(j, mm)).collect();
            if row != first {
                let odd = row
                    .iter()
                    .chain(&first)
                    .find(|&&mm| !(row.contains(&mm) && first.contains(&mm)))
                    .copied()
                    .unwrap_or(0);
                return Err(GraphError::InconsistentAnnotation {
                    class: c,
                    metabolite: odd,
                });
            }
        }
        influenced.push(first);
    }
    // direct sets in reverse topological order (downstream classes first)
    let mut direct: Vec<Vec<usize>> = vec![Vec::new(); k];
    for c in (0..k).rev() {
        let mut not_direct = vec![false; m];
        for c2 in 0..k {
            if graph.reaches(c, c2) {
                for &mm in &direct[c2] {
                    not_direct[mm] = true;
                }
            }
        }
        // Eq. (2.28b): the indirect part must be contained in I_M
        for (mm, nd) in not_direct.iter().enumerate() {
            if *nd && !influenced[c].contains(&mm) {
                return Err(GraphError::InconsistentAnnotation {
                    class: c,
                    metabolite: mm,
                });
            }
        }
        direct[c] = influenced[c]
            .iter()
            .copied()
            .filter(|&mm| !not_direct[mm])
            .collect();
    }
    Ok(FullInfluenceGraph {
        pure: graph.clone(),
        direct,
        influenced,
    })
}

/// Influence sets of a single reaction, derived from the graph (Thm 2.7):
/// I_E from class membership and reachability, I_M from the class annotation.
pub fn influence_sets(full: &FullInfluenceGraph, j_star: usize) -> (Vec<usize>, Vec<usize>) {
    let graph = &full.pure;
    let c = graph.class_of[j_star];
    let mut i_e: Vec<usize> = Vec::new();
    if graph.classes[c].self_influential {
        i_e.extend(&graph.classes[c].members);
    }
    for (c2, class) in graph.classes.iter().enumerate() {
        if graph.reaches(c, c2) {
            i_e.extend(&class.members);
        }
    }
    i_e.sort_unstable();
    (i_e, full.influenced[c].clone())
}
