use std::collections::BTreeSet;

use super::MolecularGraph;

/// Atom sets covered by the embeddings of a motif in a target graph.
///
/// Embeddings that cover the same atoms (ring automorphisms, for example)
/// collapse to one set. Sets are sorted and listed in ascending order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MotifMatch {
    pub sets: Vec<Vec<usize>>,
}

impl MotifMatch {
    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    /// Union of every matched atom.
    pub fn atoms(&self) -> BTreeSet<usize> {
        self.sets.iter().flatten().copied().collect()
    }
}

/// Finds every embedding of `motif` in `graph` by backtracking.
///
/// Atoms match on element and aromaticity, bonds on order. Extra bonds in
/// the target between matched atoms are allowed (monomorphism), which is
/// the usual substructure-search semantics.
pub fn match_motif(graph: &MolecularGraph, motif: &MolecularGraph) -> MotifMatch {
    let mut found = BTreeSet::new();
    for_each_embedding(graph, motif, false, |mapping| {
        let mut set = mapping.to_vec();
        set.sort_unstable();
        found.insert(set);
        true
    });
    MotifMatch {
        sets: found.into_iter().collect(),
    }
}

/// Same atom count, same bond count, and one maps onto the other with
/// matching element, aromaticity, charge and bond orders.
pub fn is_isomorphic(a: &MolecularGraph, b: &MolecularGraph) -> bool {
    if a.atom_count() != b.atom_count() || a.bond_count() != b.bond_count() {
        return false;
    }
    let mut any = false;
    for_each_embedding(b, a, true, |_| {
        any = true;
        false
    });
    any
}

/// Calls `visit` with `mapping[motif_atom] = target_atom` for each
/// embedding; stops early when `visit` returns false.
fn for_each_embedding(
    graph: &MolecularGraph,
    motif: &MolecularGraph,
    match_charge: bool,
    mut visit: impl FnMut(&[usize]) -> bool,
) {
    let k = motif.atom_count();
    if k > graph.atom_count() {
        return;
    }
    let order = search_order(motif);
    let mut mapping = vec![usize::MAX; k];
    let mut used = vec![false; graph.atom_count()];
    let search = Search {
        graph,
        motif,
        order: &order,
        match_charge,
    };
    search.extend(0, &mut mapping, &mut used, &mut visit);
}

// Motif atoms in BFS order from the highest-degree atom, so every atom after
// the first has an already-placed neighbour to anchor the candidate set.
fn search_order(motif: &MolecularGraph) -> Vec<usize> {
    let n = motif.atom_count();
    let start = (0..n).max_by_key(|&i| (motif.degree(i), std::cmp::Reverse(i))).unwrap_or(0);
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &(v, _) in motif.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    order
}

struct Search<'a> {
    graph: &'a MolecularGraph,
    motif: &'a MolecularGraph,
    order: &'a [usize],
    match_charge: bool,
}

impl Search<'_> {
    fn extend(&self, depth: usize, mapping: &mut [usize], used: &mut [bool], visit: &mut impl FnMut(&[usize]) -> bool) -> bool {
        let (graph, motif) = (self.graph, self.motif);
        if depth == self.order.len() {
            return visit(mapping);
        }
        let m = self.order[depth];
        let anchor = motif
            .neighbors(m)
            .iter()
            .find(|&&(v, _)| mapping[v] != usize::MAX)
            .map(|&(v, _)| mapping[v]);
        let candidates: Vec<usize> = match anchor {
            Some(t) => graph.neighbors(t).iter().map(|&(v, _)| v).collect(),
            None => (0..graph.atom_count()).collect(),
        };
        let m_atom = motif.atom(m);
        for t in candidates {
            if used[t] {
                continue;
            }
            let t_atom = graph.atom(t);
            if t_atom.element != m_atom.element || t_atom.aromatic != m_atom.aromatic {
                continue;
            }
            if self.match_charge && t_atom.charge != m_atom.charge {
                continue;
            }
            if graph.degree(t) < motif.degree(m) {
                continue;
            }
            let bonds_ok = motif.neighbors(m).iter().all(|&(v, order)| {
                let mapped = mapping[v];
                mapped == usize::MAX || graph.bond_between(t, mapped) == Some(order)
            });
            if !bonds_ok {
                continue;
            }
            mapping[m] = t;
            used[t] = true;
            let keep_going = self.extend(depth + 1, mapping, used, visit);
            mapping[m] = usize::MAX;
            used[t] = false;
            if !keep_going {
                return false;
            }
        }
        true
    }
}
