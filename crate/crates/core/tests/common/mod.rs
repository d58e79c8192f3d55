//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use graphsal::autodiff::Tensor;
use graphsal::gnn::{Dims, ModelKind, ModelParams};
use graphsal::molgraph::{Atom, AtomVocabulary, Bond, BondOrder, Element, MolecularGraph, Task};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random connected graph: a random spanning tree plus `extra` chords.
/// Small alphabets make motif hits common.
pub fn random_graph(seed: u64, atoms: usize, extra: usize, orders: &[BondOrder]) -> MolecularGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = [(Element::C, false), (Element::C, true), (Element::N, false), (Element::N, true), (Element::O, false)];
    let atom_list: Vec<Atom> = (0..atoms)
        .map(|_| {
            let (e, aromatic) = kinds[rng.random_range(0..kinds.len())];
            Atom::new(e, aromatic)
        })
        .collect();
    let mut pairs = BTreeSet::new();
    let mut bonds = Vec::new();
    for j in 1..atoms {
        let i = rng.random_range(0..j);
        pairs.insert((i, j));
        bonds.push(Bond {
            i,
            j,
            order: orders[rng.random_range(0..orders.len())],
        });
    }
    for _ in 0..extra {
        if atoms < 3 {
            break;
        }
        let i = rng.random_range(0..atoms);
        let j = rng.random_range(0..atoms);
        let key = (i.min(j), i.max(j));
        if i != j && pairs.insert(key) {
            bonds.push(Bond {
                i: key.0,
                j: key.1,
                order: orders[rng.random_range(0..orders.len())],
            });
        }
    }
    MolecularGraph::new(atom_list, bonds).expect("connected by construction")
}

/// Every injective atom map from `motif` into `graph` that preserves
/// element, aromaticity and the order of each motif bond, reduced to the
/// sorted sets of covered atoms. Enumerates all `n!/(n-k)!` maps.
pub fn brute_force_matches(graph: &MolecularGraph, motif: &MolecularGraph) -> Vec<Vec<usize>> {
    let n = graph.atom_count();
    let k = motif.atom_count();
    let mut found = BTreeSet::new();
    let mut map = vec![0usize; k];
    fn rec(
        depth: usize,
        n: usize,
        map: &mut Vec<usize>,
        graph: &MolecularGraph,
        motif: &MolecularGraph,
        found: &mut BTreeSet<Vec<usize>>,
    ) {
        if depth == map.len() {
            let ok_atoms = (0..map.len()).all(|m| {
                let (a, b) = (motif.atom(m), graph.atom(map[m]));
                a.element == b.element && a.aromatic == b.aromatic
            });
            let ok_bonds = motif
                .bonds()
                .iter()
                .all(|b| graph.bond_between(map[b.i], map[b.j]) == Some(b.order));
            if ok_atoms && ok_bonds {
                let mut s = map.clone();
                s.sort_unstable();
                found.insert(s);
            }
            return;
        }
        for t in 0..n {
            if !map[..depth].contains(&t) {
                map[depth] = t;
                rec(depth + 1, n, map, graph, motif, found);
            }
        }
    }
    rec(0, n, &mut map, graph, motif, &mut found);
    found.into_iter().collect()
}

/// Average precision computed at positive ranks only:
/// `(1/P) Σ_{positives at rank k} TP_k / k`, ranks by score then index.
pub fn brute_prc_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let total_pos = positive.iter().filter(|&&p| p).count() as f64;
    let mut tp = 0.0;
    let mut acc = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if positive[i] {
            tp += 1.0;
            acc += tp / (rank + 1) as f64;
        }
    }
    acc / total_pos
}

/// Fraction of positive-negative pairs ordered correctly, ties counting ½.
pub fn brute_roc_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Central differences of `f` at `x`, one coordinate at a time.
pub fn central_difference(f: impl Fn(&Tensor) -> f64, x: &Tensor, eps: f64) -> Vec<f64> {
    let rows = x.to_rows();
    let cols = x.cols();
    (0..x.len())
        .map(|k| {
            let shifted = |d: f64| {
                let mut r = rows.clone();
                r[k / cols][k % cols] += d;
                f(&Tensor::from_rows(&r).unwrap())
            };
            (shifted(eps) - shifted(-eps)) / (2.0 * eps)
        })
        .collect()
}

/// Untrained model over a vocabulary covering the random-graph alphabet.
pub fn random_model(kind: ModelKind, dims: Dims, seed: u64) -> ModelParams {
    let probe = graphsal::molgraph::parse_smiles("CN(O)c1cnccc1").unwrap();
    let vocab = AtomVocabulary::from_graphs([&probe]);
    ModelParams::init(kind, Task::Binary, vocab, dims, 0.25, seed).unwrap()
}

pub fn small_dims() -> Dims {
    Dims {
        hidden: 8,
        readout: 6,
        rounds: 2,
    }
}
