//! Random molecule-shaped graphs with planted substructures.
//!
//! Molecules are grown as trees of aliphatic `C N O S` atoms decorated with
//! whole ring fragments and the occasional aliphatic ring closure, all under
//! per-element valence caps. Labels are always recomputed from the finished
//! graph, so a substructure that appears by accident is labeled correctly.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use super::{match_motif, parse_smiles, Atom, Bond, BondOrder, Element, MolecularGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("motif has {motif} atoms but molecules are capped at {max}")]
    MotifTooLarge { motif: usize, max: usize },
    #[error("count must be at least 1")]
    EmptyCount,
    #[error("invalid atom-count range {0}..={1}")]
    BadRange(usize, usize),
    #[error("positive rate {0} outside [0, 1]")]
    BadRate(f64),
    #[error("could not assemble a valid molecule: {0}")]
    Assembly(String),
}

/// Ring fragments used as distractors next to the planted motif.
pub const DEFAULT_DECOYS: [&str; 5] = ["c1ccccc1", "c1cncnc1", "c1ccsc1", "c1ccoc1", "C1CCCCC1"];

#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub count: usize,
    pub motif: MolecularGraph,
    pub min_atoms: usize,
    pub max_atoms: usize,
    /// Probability that a molecule gets the motif planted.
    pub positive_rate: f64,
    pub seed: u64,
    pub decoys: Vec<MolecularGraph>,
}

impl SyntheticConfig {
    /// Pyridine motif, 8–24 heavy atoms, default decoys.
    pub fn pyridine(count: usize, positive_rate: f64, seed: u64) -> Self {
        Self {
            count,
            motif: parse_smiles("c1ccncc1").expect("valid motif"),
            min_atoms: 8,
            max_atoms: 24,
            positive_rate,
            seed,
            decoys: default_decoys(),
        }
    }
}

pub fn default_decoys() -> Vec<MolecularGraph> {
    DEFAULT_DECOYS.iter().map(|s| parse_smiles(s).expect("valid decoy")).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledGraph {
    pub graph: MolecularGraph,
    pub label: bool,
}

/// Highest degree allowed for an atom in generated data.
pub fn degree_cap(atom: &Atom) -> usize {
    if atom.aromatic {
        if atom.element == Element::C {
            3
        } else {
            2
        }
    } else {
        atom.element.default_valence().unwrap_or(4) as usize
    }
}

struct Builder {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    degree: Vec<usize>,
    // bond-order sum in half units; aromatic bonds count 3
    load: Vec<u8>,
}

impl Builder {
    fn new() -> Self {
        Self {
            atoms: Vec::new(),
            bonds: Vec::new(),
            degree: Vec::new(),
            load: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.atoms.len()
    }

    fn free_half_units(&self, i: usize) -> u8 {
        let atom = &self.atoms[i];
        if atom.aromatic {
            // ring bonds saturate everything except one substituent on carbon
            return if self.degree[i] < degree_cap(atom) { 2 } else { 0 };
        }
        let cap = atom.element.default_valence().unwrap_or(4) * 2;
        cap.saturating_sub(self.load[i])
    }

    fn can_take(&self, i: usize, order: BondOrder) -> bool {
        self.degree[i] < degree_cap(&self.atoms[i]) && self.free_half_units(i) >= order.half_units()
    }

    fn push_atom(&mut self, atom: Atom) -> usize {
        self.atoms.push(atom);
        self.degree.push(0);
        self.load.push(0);
        self.len() - 1
    }

    fn bond(&mut self, i: usize, j: usize, order: BondOrder) {
        self.bonds.push(Bond { i, j, order });
        for k in [i, j] {
            self.degree[k] += 1;
            self.load[k] += order.half_units();
        }
    }

    fn bonded(&self, i: usize, j: usize) -> bool {
        self.bonds.iter().any(|b| (b.i == i && b.j == j) || (b.i == j && b.j == i))
    }

    fn add_fragment(&mut self, fragment: &MolecularGraph) -> usize {
        let offset = self.len();
        for atom in fragment.atoms() {
            self.push_atom(atom.clone());
        }
        for b in fragment.bonds() {
            self.bond(offset + b.i, offset + b.j, b.order);
        }
        offset
    }

    fn open_sites(&self, range: std::ops::Range<usize>) -> Vec<usize> {
        range.filter(|&i| self.can_take(i, BondOrder::Single)).collect()
    }

    fn distances_from(&self, start: usize) -> Vec<usize> {
        let mut adj = vec![Vec::new(); self.len()];
        for b in &self.bonds {
            adj[b.i].push(b.j);
            adj[b.j].push(b.i);
        }
        let mut dist = vec![usize::MAX; self.len()];
        dist[start] = 0;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    fn finish(self) -> Result<MolecularGraph, GenerateError> {
        MolecularGraph::new(self.atoms, self.bonds).map_err(|e| GenerateError::Assembly(e.to_string()))
    }
}

enum Piece<'a> {
    Fragment(&'a MolecularGraph),
    Aliphatic(Element),
}

fn pick_element(rng: &mut ChaCha8Rng, table: &[(Element, f64)]) -> Element {
    let total: f64 = table.iter().map(|(_, w)| w).sum();
    let mut x = rng.random::<f64>() * total;
    for &(e, w) in table {
        if x < w {
            return e;
        }
        x -= w;
    }
    table.last().expect("non-empty table").0
}

/// Attaches `pieces` in order to a growing molecule.
fn assemble(rng: &mut ChaCha8Rng, pieces: &[Piece<'_>], double_bond_rate: f64) -> Builder {
    let mut b = Builder::new();
    for piece in pieces {
        let sites = b.open_sites(0..b.len());
        if b.len() > 0 && sites.is_empty() {
            continue;
        }
        let anchor = (!sites.is_empty()).then(|| sites[rng.random_range(0..sites.len())]);
        match piece {
            Piece::Aliphatic(e) => {
                let new = b.push_atom(Atom::new(*e, false));
                if let Some(a) = anchor {
                    let double = !b.atoms[a].aromatic
                        && rng.random_bool(double_bond_rate)
                        && b.can_take(a, BondOrder::Double)
                        && b.can_take(new, BondOrder::Double);
                    b.bond(a, new, if double { BondOrder::Double } else { BondOrder::Single });
                }
            }
            Piece::Fragment(f) => {
                let offset = b.add_fragment(f);
                if let Some(a) = anchor {
                    let inner = b.open_sites(offset..b.len());
                    if inner.is_empty() {
                        // fragment cannot take a substituent; drop it again
                        b.atoms.truncate(offset);
                        b.degree.truncate(offset);
                        b.load.truncate(offset);
                        b.bonds.retain(|x| x.i < offset && x.j < offset);
                        continue;
                    }
                    let site = inner[rng.random_range(0..inner.len())];
                    b.bond(a, site, BondOrder::Single);
                }
            }
        }
    }
    b
}

/// Closes one aliphatic five- or six-membered ring if a suitable pair exists.
fn close_aliphatic_ring(rng: &mut ChaCha8Rng, b: &mut Builder) {
    let candidates: Vec<usize> = (0..b.len())
        .filter(|&i| !b.atoms[i].aromatic && b.can_take(i, BondOrder::Single))
        .collect();
    let mut pairs = Vec::new();
    for &u in &candidates {
        let dist = b.distances_from(u);
        for &v in &candidates {
            if v > u && (dist[v] == 4 || dist[v] == 5) && !b.bonded(u, v) {
                pairs.push((u, v));
            }
        }
    }
    if let Some(&(u, v)) = pairs.choose(rng) {
        b.bond(u, v, BondOrder::Single);
    }
}

const SKELETON: [(Element, f64); 4] = [(Element::C, 0.6), (Element::N, 0.15), (Element::O, 0.15), (Element::S, 0.1)];

/// Planted-motif classification data, reproducible from `config.seed`.
pub fn generate_synthetic_dataset(config: &SyntheticConfig) -> Result<Vec<LabeledGraph>, GenerateError> {
    if config.count == 0 {
        return Err(GenerateError::EmptyCount);
    }
    if config.min_atoms == 0 || config.min_atoms > config.max_atoms {
        return Err(GenerateError::BadRange(config.min_atoms, config.max_atoms));
    }
    if !(0.0..=1.0).contains(&config.positive_rate) {
        return Err(GenerateError::BadRate(config.positive_rate));
    }
    let motif_size = config.motif.atom_count();
    if motif_size > config.max_atoms {
        return Err(GenerateError::MotifTooLarge {
            motif: motif_size,
            max: config.max_atoms,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(config.count);
    for _ in 0..config.count {
        let positive = rng.random_bool(config.positive_rate);
        let mut target = rng.random_range(config.min_atoms..=config.max_atoms);
        if positive {
            target = target.max(motif_size);
        }

        // positives: motif + 0-1 decoys; negatives: 1-2 decoys, so ring
        // counts alone do not give the label away
        let mut fragments: Vec<&MolecularGraph> = Vec::new();
        if positive {
            fragments.push(&config.motif);
        }
        let extra = usize::from(!positive) + usize::from(rng.random_bool(0.5));
        for _ in 0..extra {
            if let Some(d) = config.decoys.choose(&mut rng) {
                fragments.push(d);
            }
        }
        let mut used: usize = fragments.iter().map(|f| f.atom_count()).sum();
        while used > target && fragments.len() > usize::from(positive) {
            let dropped = fragments.pop().expect("non-empty");
            used -= dropped.atom_count();
        }

        let mut pieces: Vec<Piece<'_>> = fragments.iter().map(|f| Piece::Fragment(f)).collect();
        for _ in used..target {
            pieces.push(Piece::Aliphatic(pick_element(&mut rng, &SKELETON)));
        }
        pieces.shuffle(&mut rng);

        let mut builder = assemble(&mut rng, &pieces, 0.15);
        if rng.random_bool(0.3) {
            close_aliphatic_ring(&mut rng, &mut builder);
        }
        let graph = builder.finish()?;
        let label = !match_motif(&graph, &config.motif).is_empty();
        out.push(LabeledGraph { graph, label });
    }
    Ok(out)
}

/// Settings for the additive group-contribution regression set.
#[derive(Clone, Debug)]
pub struct SolubilityConfig {
    pub count: usize,
    pub min_atoms: usize,
    pub max_atoms: usize,
    pub seed: u64,
    /// Standard deviation of Gaussian noise added to each target.
    pub noise: f64,
}

impl Default for SolubilityConfig {
    fn default() -> Self {
        Self {
            count: 1000,
            min_atoms: 6,
            max_atoms: 22,
            seed: 0,
            noise: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolubilitySample {
    pub graph: MolecularGraph,
    pub value: f64,
    /// Terminal singly bonded oxygens (hydroxyl groups).
    pub hydroxyls: Vec<usize>,
}

/// Terminal oxygens attached by a single bond.
pub fn hydroxyl_atoms(graph: &MolecularGraph) -> Vec<usize> {
    (0..graph.atom_count())
        .filter(|&i| {
            let a = graph.atom(i);
            a.element == Element::O
                && !a.aromatic
                && a.charge == 0
                && graph.degree(i) == 1
                && graph.neighbors(i)[0].1 == BondOrder::Single
        })
        .collect()
}

/// Per-atom additive contribution to the synthetic solubility target.
/// Hydroxyl oxygens and amine nitrogens raise it; carbons and halogens
/// lower it.
pub fn group_contribution(graph: &MolecularGraph, atom: usize) -> f64 {
    let a = graph.atom(atom);
    match (a.element.symbol(), a.aromatic) {
        ("O", false) if graph.degree(atom) == 1 && graph.neighbors(atom)[0].1 == BondOrder::Single => 1.2,
        ("O", _) => 0.3,
        ("N", false) => 0.6,
        ("N", true) => 0.2,
        ("C", true) => -0.35,
        ("C", false) => -0.25,
        ("S", _) => -0.2,
        ("Cl", _) => -0.7,
        ("F", _) => -0.3,
        ("Br", _) => -0.8,
        _ => 0.0,
    }
}

const SOLUBILITY_SKELETON: [(Element, f64); 4] = [
    (Element::C, 0.75),
    (Element::N, 0.1),
    (Element::O, 0.08),
    (Element::S, 0.07),
];

/// Regression data whose target is a sum of atom-group contributions plus
/// noise. About half the molecules carry one or two planted hydroxyls.
pub fn generate_solubility_dataset(config: &SolubilityConfig) -> Result<Vec<SolubilitySample>, GenerateError> {
    if config.count == 0 {
        return Err(GenerateError::EmptyCount);
    }
    if config.min_atoms < 2 || config.min_atoms > config.max_atoms {
        return Err(GenerateError::BadRange(config.min_atoms, config.max_atoms));
    }
    let benzene = parse_smiles("c1ccccc1").expect("valid");
    let chlorine = Element::from_symbol("Cl").expect("element");
    let fluorine = Element::from_symbol("F").expect("element");
    let noise = Normal::new(0.0, config.noise.max(0.0)).map_err(|e| GenerateError::Assembly(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(config.count);

    for _ in 0..config.count {
        let hydroxyls = if rng.random_bool(0.5) { rng.random_range(1..=2usize) } else { 0 };
        let target = rng.random_range(config.min_atoms..=config.max_atoms);
        let skeleton_atoms = target.saturating_sub(hydroxyls).max(1);

        let mut pieces: Vec<Piece<'_>> = Vec::new();
        let mut used = 0;
        for _ in 0..rng.random_range(0..=2usize) {
            if used + 6 <= skeleton_atoms {
                pieces.push(Piece::Fragment(&benzene));
                used += 6;
            }
        }
        for _ in used..skeleton_atoms {
            let e = if rng.random_bool(0.08) {
                if rng.random_bool(0.5) {
                    chlorine
                } else {
                    fluorine
                }
            } else {
                pick_element(&mut rng, &SOLUBILITY_SKELETON)
            };
            pieces.push(Piece::Aliphatic(e));
        }
        pieces.shuffle(&mut rng);
        // halogens are terminal; keep the first piece a ring or skeleton atom
        if let Some(pos) = pieces.iter().position(|p| match p {
            Piece::Fragment(_) => true,
            Piece::Aliphatic(e) => e.default_valence().unwrap_or(1) > 1,
        }) {
            pieces.swap(0, pos);
        }

        let mut builder = assemble(&mut rng, &pieces, 0.1);
        if rng.random_bool(0.2) {
            close_aliphatic_ring(&mut rng, &mut builder);
        }
        // hydroxyls go on carbons last so nothing grows off them
        for _ in 0..hydroxyls {
            let sites: Vec<usize> = (0..builder.len())
                .filter(|&i| builder.atoms[i].element == Element::C && builder.can_take(i, BondOrder::Single))
                .collect();
            if let Some(&site) = sites.choose(&mut rng) {
                let o = builder.push_atom(Atom::new(Element::O, false));
                builder.bond(site, o, BondOrder::Single);
            }
        }

        let graph = builder.finish()?;
        let value = 1.0
            + (0..graph.atom_count()).map(|i| group_contribution(&graph, i)).sum::<f64>()
            + noise.sample(&mut rng);
        let hydroxyls = hydroxyl_atoms(&graph);
        out.push(SolubilitySample { graph, value, hydroxyls });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_generation_is_reproducible() {
        let cfg = SyntheticConfig::pyridine(100, 0.5, 7);
        let a = generate_synthetic_dataset(&cfg).unwrap();
        let b = generate_synthetic_dataset(&cfg).unwrap();
        assert_eq!(a, b);
        let other = generate_synthetic_dataset(&SyntheticConfig::pyridine(100, 0.5, 8)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn labels_agree_with_matcher_and_sizes_hold() {
        let cfg = SyntheticConfig::pyridine(300, 0.5, 11);
        for item in generate_synthetic_dataset(&cfg).unwrap() {
            assert_eq!(item.label, !match_motif(&item.graph, &cfg.motif).is_empty());
            let n = item.graph.atom_count();
            assert!(n <= cfg.max_atoms, "{n}");
            for i in 0..n {
                let atom = item.graph.atom(i);
                let cap = atom.element.default_valence().unwrap() as usize;
                assert!(item.graph.degree(i) <= cap);
                assert!(item.graph.degree(i) <= degree_cap(atom));
            }
        }
    }

    #[test]
    fn infeasible_configs() {
        let mut cfg = SyntheticConfig::pyridine(10, 0.5, 0);
        cfg.max_atoms = 5;
        cfg.min_atoms = 3;
        assert_eq!(
            generate_synthetic_dataset(&cfg),
            Err(GenerateError::MotifTooLarge { motif: 6, max: 5 })
        );
        let cfg = SyntheticConfig::pyridine(0, 0.5, 0);
        assert_eq!(generate_synthetic_dataset(&cfg), Err(GenerateError::EmptyCount));
        let cfg = SyntheticConfig::pyridine(3, 1.5, 0);
        assert!(matches!(generate_synthetic_dataset(&cfg), Err(GenerateError::BadRate(_))));
    }

    #[test]
    fn solubility_targets_are_reproducible_and_hydroxyls_terminal() {
        let cfg = SolubilityConfig {
            count: 200,
            seed: 3,
            ..Default::default()
        };
        let a = generate_solubility_dataset(&cfg).unwrap();
        assert_eq!(a, generate_solubility_dataset(&cfg).unwrap());
        let with_oh = a.iter().filter(|s| !s.hydroxyls.is_empty()).count();
        assert!(with_oh > 50 && with_oh < 170, "{with_oh}");
        for s in &a {
            for &o in &s.hydroxyls {
                assert_eq!(s.graph.degree(o), 1);
            }
        }
    }
}
