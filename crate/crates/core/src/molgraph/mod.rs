//! Molecular graphs: SMILES in and out, atom vocabularies, substructure
//! matching and synthetic datasets with planted motifs.
//!
//! ```
//! use graphsal::molgraph::{match_motif, parse_smiles};
//!
//! let mol = parse_smiles("Cc1ccncc1")?;
//! let ring = parse_smiles("c1ccncc1")?;
//! assert_eq!(mol.atom_count(), 7);
//! assert_eq!(match_motif(&mol, &ring).sets, vec![vec![1, 2, 3, 4, 5, 6]]);
//! # Ok::<(), graphsal::molgraph::SmilesError>(())
//! ```

mod dataset;
mod element;
mod graph;
mod motif;
mod smiles;
mod synthetic;
mod vocab;
mod write;

pub use dataset::{read_dataset, read_dataset_from, write_dataset, write_dataset_to, DatasetError, Record, Task};
pub use element::Element;
pub use graph::{Atom, Bond, BondOrder, MolecularGraph};
pub use motif::{is_isomorphic, match_motif, MotifMatch};
pub use smiles::{parse_smiles, SmilesError, SmilesErrorKind};
pub use synthetic::{
    default_decoys, degree_cap, generate_solubility_dataset, generate_synthetic_dataset, group_contribution,
    hydroxyl_atoms, GenerateError, LabeledGraph, SolubilityConfig, SolubilitySample, SyntheticConfig, DEFAULT_DECOYS,
};
pub use vocab::{featurize, AtomKey, AtomVocabulary};
pub use write::write_smiles;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("molecule has no atoms")]
    Empty,
    #[error("bond refers to atom {index} but there are {atoms} atoms")]
    AtomIndex { index: usize, atoms: usize },
    #[error("atom {0} is bonded to itself")]
    SelfBond(usize),
    #[error("atoms {0} and {1} are bonded twice")]
    DuplicateBond(usize, usize),
    #[error("graph is disconnected: {reached} of {atoms} atoms reachable from atom 0")]
    Disconnected { reached: usize, atoms: usize },
    #[error("atom order is not a permutation")]
    NotAPermutation,
}
