use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Element, GraphError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub const ALL: [BondOrder; 4] = [BondOrder::Single, BondOrder::Double, BondOrder::Triple, BondOrder::Aromatic];

    /// Position in [`BondOrder::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// Bond order in half-units (aromatic counts 1.5).
    pub fn half_units(self) -> u8 {
        match self {
            BondOrder::Single => 2,
            BondOrder::Double => 4,
            BondOrder::Triple => 6,
            BondOrder::Aromatic => 3,
        }
    }
}

impl fmt::Display for BondOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BondOrder::Single => "single",
            BondOrder::Double => "double",
            BondOrder::Triple => "triple",
            BondOrder::Aromatic => "aromatic",
        })
    }
}

/// A heavy atom. Hydrogens are never nodes; a bracket atom's explicit
/// hydrogen count is kept only so it can be written back out.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    #[serde(default)]
    pub charge: i8,
    #[serde(default)]
    pub aromatic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hydrogens: Option<u8>,
}

impl Atom {
    pub fn new(element: Element, aromatic: bool) -> Self {
        Self {
            element,
            charge: 0,
            aromatic,
            hydrogens: None,
        }
    }

    /// Same element, charge and aromaticity.
    pub fn same_kind(&self, other: &Atom) -> bool {
        self.element == other.element && self.aromatic == other.aromatic && self.charge == other.charge
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    pub order: BondOrder,
}

/// Connected heavy-atom graph of a molecule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MolecularGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, BondOrder)>>,
}

impl MolecularGraph {
    /// Validates indices, self-loops, duplicate bonds and connectivity.
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, GraphError> {
        if atoms.is_empty() {
            return Err(GraphError::Empty);
        }
        let n = atoms.len();
        let mut adjacency: Vec<Vec<(usize, BondOrder)>> = vec![Vec::new(); n];
        for bond in &bonds {
            if bond.i >= n || bond.j >= n {
                return Err(GraphError::AtomIndex {
                    index: bond.i.max(bond.j),
                    atoms: n,
                });
            }
            if bond.i == bond.j {
                return Err(GraphError::SelfBond(bond.i));
            }
            if adjacency[bond.i].iter().any(|&(k, _)| k == bond.j) {
                return Err(GraphError::DuplicateBond(bond.i.min(bond.j), bond.i.max(bond.j)));
            }
            adjacency[bond.i].push((bond.j, bond.order));
            adjacency[bond.j].push((bond.i, bond.order));
        }
        let graph = Self { atoms, bonds, adjacency };
        let reached = graph.component_size(0);
        if reached != n {
            return Err(GraphError::Disconnected { reached, atoms: n });
        }
        Ok(graph)
    }

    fn component_size(&self, start: usize) -> usize {
        let mut seen = vec![false; self.atoms.len()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 0;
        while let Some(u) = stack.pop() {
            count += 1;
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        count
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Neighbours of atom `i` with the connecting bond order, in bond
    /// insertion order.
    pub fn neighbors(&self, i: usize) -> &[(usize, BondOrder)] {
        &self.adjacency[i]
    }

    pub fn bond_between(&self, i: usize, j: usize) -> Option<BondOrder> {
        self.adjacency[i].iter().find(|&&(k, _)| k == j).map(|&(_, o)| o)
    }

    /// Relabels atoms so that old atom `i` becomes atom `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<MolecularGraph, GraphError> {
        let n = self.atoms.len();
        let mut check = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut check[p], true)) {
            return Err(GraphError::NotAPermutation);
        }
        let mut atoms = vec![self.atoms[0].clone(); n];
        for (old, atom) in self.atoms.iter().enumerate() {
            atoms[perm[old]] = atom.clone();
        }
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                i: perm[b.i],
                j: perm[b.j],
                order: b.order,
            })
            .collect();
        MolecularGraph::new(atoms, bonds)
    }
}
