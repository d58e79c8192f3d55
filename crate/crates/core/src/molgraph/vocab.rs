use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Atom, Element, MolecularGraph};

/// Element plus aromatic flag: the discrete atom type that gets embedded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomKey {
    pub element: Element,
    pub aromatic: bool,
}

impl AtomKey {
    pub fn of(atom: &Atom) -> Self {
        Self {
            element: atom.element,
            aromatic: atom.aromatic,
        }
    }
}

impl fmt::Display for AtomKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.aromatic {
            f.write_str(&self.element.symbol().to_ascii_lowercase())
        } else {
            f.write_str(self.element.symbol())
        }
    }
}

impl FromStr for AtomKey {
    type Err = String;

    /// `"C"` is aliphatic carbon, `"c"` aromatic carbon, `"se"` aromatic selenium.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let aromatic = s.starts_with(|c: char| c.is_ascii_lowercase());
        let mut symbol = s.to_string();
        if aromatic {
            symbol[..1].make_ascii_uppercase();
        }
        let element = Element::from_symbol(&symbol).ok_or_else(|| format!("unknown atom type `{s}`"))?;
        Ok(Self { element, aromatic })
    }
}

/// Dense mapping from atom types to embedding rows.
///
/// Index `len()` is reserved for atom types absent from the vocabulary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomVocabulary {
    entries: Vec<AtomKey>,
}

impl AtomVocabulary {
    pub fn new(entries: Vec<AtomKey>) -> Result<Self, String> {
        let unique: BTreeSet<_> = entries.iter().collect();
        if unique.len() != entries.len() {
            return Err("duplicate atom type in vocabulary".into());
        }
        Ok(Self { entries })
    }

    /// Every atom type in `graphs`, sorted by atomic number then aromaticity.
    pub fn from_graphs<'a>(graphs: impl IntoIterator<Item = &'a MolecularGraph>) -> Self {
        let keys: BTreeSet<AtomKey> = graphs
            .into_iter()
            .flat_map(|g| g.atoms().iter().map(AtomKey::of))
            .collect();
        Self {
            entries: keys.into_iter().collect(),
        }
    }

    pub fn entries(&self) -> &[AtomKey] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn unknown_index(&self) -> usize {
        self.entries.len()
    }

    /// Number of embedding rows, including the unknown bucket.
    pub fn table_size(&self) -> usize {
        self.entries.len() + 1
    }

    pub fn index_of(&self, key: AtomKey) -> usize {
        self.entries
            .iter()
            .position(|&k| k == key)
            .unwrap_or(self.unknown_index())
    }
}

/// One vocabulary index per atom.
pub fn featurize(graph: &MolecularGraph, vocab: &AtomVocabulary) -> Vec<usize> {
    graph.atoms().iter().map(|a| vocab.index_of(AtomKey::of(a))).collect()
}

impl Serialize for AtomVocabulary {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.entries.iter().map(ToString::to_string))
    }
}

impl<'de> Deserialize<'de> for AtomVocabulary {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(deserializer)?;
        let entries = names
            .iter()
            .map(|s| s.parse::<AtomKey>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        AtomVocabulary::new(entries).map_err(serde::de::Error::custom)
    }
}
