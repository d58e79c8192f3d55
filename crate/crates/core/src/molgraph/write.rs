use std::fmt::Write as _;

use super::{Atom, BondOrder, MolecularGraph};

/// Writes a SMILES string that [`parse_smiles`](super::parse_smiles) reads
/// back into an isomorphic graph.
///
/// Depth-first from atom 0, neighbours in bond order; ring-closure digits
/// are allocated lowest-free-first and reused once closed.
pub fn write_smiles(graph: &MolecularGraph) -> String {
    let n = graph.atom_count();
    let mut order = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    // (earlier atom, later atom) pairs closed by a ring digit
    let mut ring_bonds: Vec<(usize, usize)> = Vec::new();

    let mut counter = 0;
    let mut stack = vec![(0usize, usize::MAX)];
    while let Some((u, from)) = stack.pop() {
        if order[u] != usize::MAX {
            continue;
        }
        order[u] = counter;
        counter += 1;
        if from != usize::MAX {
            parent[u] = from;
            children[from].push(u);
        }
        for &(v, _) in graph.neighbors(u).iter().rev() {
            if order[v] == usize::MAX {
                stack.push((v, u));
            }
        }
    }
    for bond in graph.bonds() {
        let (a, b) = if order[bond.i] < order[bond.j] { (bond.i, bond.j) } else { (bond.j, bond.i) };
        if parent[b] != a {
            ring_bonds.push((a, b));
        }
    }
    for list in &mut children {
        list.sort_by_key(|&c| order[c]);
    }

    let mut opens: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut closes: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, &(a, b)) in ring_bonds.iter().enumerate() {
        opens[a].push(k);
        closes[b].push(k);
    }

    let mut out = String::new();
    let mut digits_in_use: Vec<bool> = vec![false; 100];
    let mut digit_of = vec![0usize; ring_bonds.len()];
    emit(
        graph,
        0,
        &children,
        &ring_bonds,
        &opens,
        &closes,
        &mut digits_in_use,
        &mut digit_of,
        &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn emit(
    graph: &MolecularGraph,
    root: usize,
    children: &[Vec<usize>],
    ring_bonds: &[(usize, usize)],
    opens: &[Vec<usize>],
    closes: &[Vec<usize>],
    digits_in_use: &mut [bool],
    digit_of: &mut [usize],
    out: &mut String,
) {
    enum Step {
        Atom(usize),
        Text(&'static str),
        Bond(usize, usize),
    }
    let mut work = vec![Step::Atom(root)];
    while let Some(step) = work.pop() {
        match step {
            Step::Text(t) => out.push_str(t),
            Step::Bond(a, b) => out.push_str(bond_symbol(graph, a, b)),
            Step::Atom(u) => {
                write_atom(graph.atom(u), out);
                for &k in &closes[u] {
                    let d = digit_of[k];
                    digits_in_use[d] = false;
                    write_digit(d, out);
                }
                for &k in &opens[u] {
                    let (a, b) = ring_bonds[k];
                    let d = (1..digits_in_use.len()).find(|&d| !digits_in_use[d]).expect("fewer than 100 open rings");
                    digits_in_use[d] = true;
                    digit_of[k] = d;
                    out.push_str(bond_symbol(graph, a, b));
                    write_digit(d, out);
                }
                let kids = &children[u];
                // pushed in reverse: branches first in output, last child unparenthesised
                if let Some((&last, rest)) = kids.split_last() {
                    work.push(Step::Atom(last));
                    work.push(Step::Bond(u, last));
                    for &c in rest.iter().rev() {
                        work.push(Step::Text(")"));
                        work.push(Step::Atom(c));
                        work.push(Step::Bond(u, c));
                        work.push(Step::Text("("));
                    }
                }
            }
        }
    }
}

fn write_digit(d: usize, out: &mut String) {
    if d < 10 {
        let _ = write!(out, "{d}");
    } else {
        let _ = write!(out, "%{d:02}");
    }
}

fn bond_symbol(graph: &MolecularGraph, a: usize, b: usize) -> &'static str {
    let both_aromatic = graph.atom(a).aromatic && graph.atom(b).aromatic;
    match graph.bond_between(a, b).expect("bond exists") {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
    }
}

fn write_atom(atom: &Atom, out: &mut String) {
    let symbol = atom.element.symbol();
    let organic = matches!(symbol, "B" | "C" | "N" | "O" | "P" | "S" | "F" | "Cl" | "Br" | "I");
    let organic_aromatic = matches!(symbol, "B" | "C" | "N" | "O" | "P" | "S");
    let plain = atom.charge == 0 && atom.hydrogens.is_none() && organic && (!atom.aromatic || organic_aromatic);
    let shown = if atom.aromatic { symbol.to_ascii_lowercase() } else { symbol.to_string() };
    if plain {
        out.push_str(&shown);
        return;
    }
    out.push('[');
    out.push_str(&shown);
    match atom.hydrogens {
        Some(0) | None => {}
        Some(1) => out.push('H'),
        Some(h) => {
            let _ = write!(out, "H{h}");
        }
    }
    match atom.charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => {
            let _ = write!(out, "+{c}");
        }
        c => {
            let _ = write!(out, "-{}", -c);
        }
    }
    out.push(']');
}
