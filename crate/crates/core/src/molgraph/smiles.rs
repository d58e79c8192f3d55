//! SMILES reader for the organic subset plus bracket atoms.
//!
//! Supported: organic atoms `B C N O P S F Cl Br I` and aromatic
//! `b c n o p s`; bracket atoms with optional isotope, chirality, hydrogen
//! count, charge and atom class (isotope, chirality and class are parsed
//! and dropped); bonds `- = # : / \`; branches; ring closures `0-9` and
//! `%nn`. Disconnected input (`.`) is rejected. Aromaticity is taken from
//! the notation as written.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{Atom, Bond, BondOrder, Element, GraphError, MolecularGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("SMILES error at byte {offset}: {kind}")]
pub struct SmilesError {
    pub offset: usize,
    pub kind: SmilesErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmilesErrorKind {
    Empty,
    UnexpectedChar(char),
    UnknownElement(String),
    UnclosedRing(u32),
    UnclosedBranch,
    UnmatchedCloseParen,
    EmptyBranch,
    DanglingBond,
    ConsecutiveBonds,
    RingBondConflict(u32),
    RingSelfBond(u32),
    DuplicateBond,
    UnterminatedBracket,
    InvalidCharge,
    MultipleFragments,
    NotAromatic(String),
    Graph(GraphError),
}

impl fmt::Display for SmilesErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => write!(f, "empty input"),
            Self::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            Self::UnknownElement(s) => write!(f, "unknown element `{s}`"),
            Self::UnclosedRing(n) => write!(f, "unclosed ring closure {n}"),
            Self::UnclosedBranch => write!(f, "unbalanced `(`"),
            Self::UnmatchedCloseParen => write!(f, "unbalanced `)`"),
            Self::EmptyBranch => write!(f, "empty branch `()`"),
            Self::DanglingBond => write!(f, "bond symbol not followed by an atom"),
            Self::ConsecutiveBonds => write!(f, "two bond symbols in a row"),
            Self::RingBondConflict(n) => write!(f, "conflicting bond symbols on ring closure {n}"),
            Self::RingSelfBond(n) => write!(f, "ring closure {n} bonds an atom to itself"),
            Self::DuplicateBond => write!(f, "atoms are already bonded"),
            Self::UnterminatedBracket => write!(f, "unterminated bracket atom"),
            Self::InvalidCharge => write!(f, "invalid charge"),
            Self::MultipleFragments => write!(f, "multi-fragment SMILES (`.`) is not supported"),
            Self::NotAromatic(s) => write!(f, "`{s}` has no aromatic form"),
            Self::Graph(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BondSymbol {
    Single,
    Double,
    Triple,
    Aromatic,
    // `/` and `\` carry stereo only
    Directional,
}

impl BondSymbol {
    fn order(self) -> BondOrder {
        match self {
            BondSymbol::Single | BondSymbol::Directional => BondOrder::Single,
            BondSymbol::Double => BondOrder::Double,
            BondSymbol::Triple => BondOrder::Triple,
            BondSymbol::Aromatic => BondOrder::Aromatic,
        }
    }
}

struct OpenRing {
    atom: usize,
    bond: Option<BondSymbol>,
    offset: usize,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
}

fn err(offset: usize, kind: SmilesErrorKind) -> SmilesError {
    SmilesError { offset, kind }
}

/// Parses a single connected molecule.
pub fn parse_smiles(text: &str) -> Result<MolecularGraph, SmilesError> {
    let lead = text.len() - text.trim_start().len();
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(err(0, SmilesErrorKind::Empty));
    }
    let mut p = Parser {
        bytes: trimmed.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
    };
    p.run().map_err(|e| err(e.offset + lead, e.kind))?;
    MolecularGraph::new(p.atoms, p.bonds).map_err(|e| err(lead, SmilesErrorKind::Graph(e)))
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<u8> {
        self.bytes.get(self.pos + k).copied()
    }

    fn current_char(&self) -> char {
        std::str::from_utf8(&self.bytes[self.pos..])
            .ok()
            .and_then(|s| s.chars().next())
            .unwrap_or(self.bytes[self.pos] as char)
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        let mut prev: Option<usize> = None;
        let mut pending: Option<(BondSymbol, usize)> = None;
        let mut branches: Vec<(usize, usize)> = Vec::new();
        let mut rings: BTreeMap<u32, OpenRing> = BTreeMap::new();
        let mut just_opened = false;

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'A'..=b'Z' | b'a'..=b'z' | b'[' => {
                    let atom = if c == b'[' { self.bracket_atom()? } else { self.organic_atom()? };
                    let idx = self.atoms.len();
                    self.atoms.push(atom);
                    match prev {
                        Some(p) => {
                            let order = self.bond_order(p, idx, pending.map(|(b, _)| b));
                            self.bonds.push(Bond { i: p, j: idx, order });
                        }
                        None => {
                            if let Some((_, off)) = pending {
                                return Err(err(off, SmilesErrorKind::DanglingBond));
                            }
                        }
                    }
                    prev = Some(idx);
                    pending = None;
                    just_opened = false;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if pending.is_some() {
                        return Err(err(start, SmilesErrorKind::ConsecutiveBonds));
                    }
                    if prev.is_none() {
                        return Err(err(start, SmilesErrorKind::DanglingBond));
                    }
                    let sym = match c {
                        b'-' => BondSymbol::Single,
                        b'=' => BondSymbol::Double,
                        b'#' => BondSymbol::Triple,
                        b':' => BondSymbol::Aromatic,
                        _ => BondSymbol::Directional,
                    };
                    pending = Some((sym, start));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let label = self.ring_label()?;
                    let Some(here) = prev else {
                        return Err(err(start, SmilesErrorKind::UnexpectedChar(c as char)));
                    };
                    let bond = pending.take().map(|(b, _)| b);
                    match rings.remove(&label) {
                        Some(open) => {
                            let sym = match (open.bond, bond) {
                                (Some(a), Some(b)) if a.order() != b.order() => {
                                    return Err(err(start, SmilesErrorKind::RingBondConflict(label)));
                                }
                                (a, b) => a.or(b),
                            };
                            if open.atom == here {
                                return Err(err(start, SmilesErrorKind::RingSelfBond(label)));
                            }
                            if self.bonded(open.atom, here) {
                                return Err(err(start, SmilesErrorKind::DuplicateBond));
                            }
                            let order = self.bond_order(open.atom, here, sym);
                            self.bonds.push(Bond { i: open.atom, j: here, order });
                        }
                        None => {
                            rings.insert(label, OpenRing { atom: here, bond, offset: start });
                        }
                    }
                    just_opened = false;
                }
                b'(' => {
                    let Some(here) = prev else {
                        return Err(err(start, SmilesErrorKind::UnexpectedChar('(')));
                    };
                    if let Some((_, off)) = pending {
                        return Err(err(off, SmilesErrorKind::DanglingBond));
                    }
                    branches.push((here, start));
                    self.pos += 1;
                    just_opened = true;
                }
                b')' => {
                    if let Some((_, off)) = pending {
                        return Err(err(off, SmilesErrorKind::DanglingBond));
                    }
                    if just_opened {
                        return Err(err(start, SmilesErrorKind::EmptyBranch));
                    }
                    let (anchor, _) = branches
                        .pop()
                        .ok_or_else(|| err(start, SmilesErrorKind::UnmatchedCloseParen))?;
                    prev = Some(anchor);
                    self.pos += 1;
                }
                b'.' => return Err(err(start, SmilesErrorKind::MultipleFragments)),
                _ => return Err(err(start, SmilesErrorKind::UnexpectedChar(self.current_char()))),
            }
        }

        if let Some((_, off)) = pending {
            return Err(err(off, SmilesErrorKind::DanglingBond));
        }
        if let Some(&(_, off)) = branches.first() {
            return Err(err(off, SmilesErrorKind::UnclosedBranch));
        }
        if let Some((label, open)) = rings.iter().min_by_key(|(_, r)| r.offset) {
            return Err(err(open.offset, SmilesErrorKind::UnclosedRing(*label)));
        }
        Ok(())
    }

    fn bonded(&self, a: usize, b: usize) -> bool {
        self.bonds.iter().any(|x| (x.i == a && x.j == b) || (x.i == b && x.j == a))
    }

    fn bond_order(&self, a: usize, b: usize, sym: Option<BondSymbol>) -> BondOrder {
        match sym {
            Some(s) => s.order(),
            None if self.atoms[a].aromatic && self.atoms[b].aromatic => BondOrder::Aromatic,
            None => BondOrder::Single,
        }
    }

    fn ring_label(&mut self) -> Result<u32, SmilesError> {
        let start = self.pos;
        if self.peek() == Some(b'%') {
            match (self.peek_at(1), self.peek_at(2)) {
                (Some(a), Some(b)) if a.is_ascii_digit() && b.is_ascii_digit() => {
                    self.pos += 3;
                    Ok(u32::from(a - b'0') * 10 + u32::from(b - b'0'))
                }
                _ => Err(err(start, SmilesErrorKind::UnexpectedChar('%'))),
            }
        } else {
            let d = self.peek().expect("caller saw a digit");
            self.pos += 1;
            Ok(u32::from(d - b'0'))
        }
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let start = self.pos;
        let c = self.peek().expect("caller saw a letter");
        let two = |p: &Self, next: u8| p.peek_at(1) == Some(next);
        let (symbol, aromatic, len) = match c {
            b'C' if two(self, b'l') => ("Cl", false, 2),
            b'B' if two(self, b'r') => ("Br", false, 2),
            b'B' => ("B", false, 1),
            b'C' => ("C", false, 1),
            b'N' => ("N", false, 1),
            b'O' => ("O", false, 1),
            b'P' => ("P", false, 1),
            b'S' => ("S", false, 1),
            b'F' => ("F", false, 1),
            b'I' => ("I", false, 1),
            b'b' => ("B", true, 1),
            b'c' => ("C", true, 1),
            b'n' => ("N", true, 1),
            b'o' => ("O", true, 1),
            b'p' => ("P", true, 1),
            b's' => ("S", true, 1),
            b'A'..=b'Z' => {
                let mut end = start + 1;
                if self.bytes.get(end).is_some_and(u8::is_ascii_lowercase) {
                    end += 1;
                }
                let sym = String::from_utf8_lossy(&self.bytes[start..end]).into_owned();
                return Err(err(start, SmilesErrorKind::UnknownElement(sym)));
            }
            _ => return Err(err(start, SmilesErrorKind::UnexpectedChar(c as char))),
        };
        self.pos += len;
        let element = Element::from_symbol(symbol).expect("organic subset symbol");
        Ok(Atom::new(element, aromatic))
    }

    fn digits(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start).then(|| {
            std::str::from_utf8(&self.bytes[start..self.pos])
                .unwrap()
                .parse::<u32>()
                .unwrap_or(u32::MAX)
        })
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        self.pos += 1;
        let _isotope = self.digits();

        let sym_start = self.pos;
        let (element, aromatic) = match self.peek() {
            Some(c) if c.is_ascii_uppercase() => {
                let two = self
                    .peek_at(1)
                    .filter(u8::is_ascii_lowercase)
                    .map(|l| String::from_utf8(vec![c, l]).unwrap())
                    .and_then(|s| Element::from_symbol(&s));
                match two {
                    Some(e) => {
                        self.pos += 2;
                        (e, false)
                    }
                    None => {
                        let s = (c as char).to_string();
                        let e = Element::from_symbol(&s).ok_or_else(|| {
                            // name the whole letter run in the message
                            let end = if self.peek_at(1).is_some_and(|l| l.is_ascii_lowercase()) { 2 } else { 1 };
                            let run = String::from_utf8_lossy(&self.bytes[self.pos..self.pos + end]).into_owned();
                            err(sym_start, SmilesErrorKind::UnknownElement(run))
                        })?;
                        self.pos += 1;
                        (e, false)
                    }
                }
            }
            Some(c) if c.is_ascii_lowercase() => {
                let two = self.peek_at(1).filter(u8::is_ascii_lowercase).map(|l| [c, l]);
                let pair_is_element = two.is_some_and(|[a, b]| {
                    Element::from_symbol(&format!("{}{}", a.to_ascii_uppercase() as char, b as char)).is_some()
                });
                let (sym, len) = match two {
                    Some(pair) if pair_is_element => (String::from_utf8(pair.to_vec()).unwrap(), 2),
                    _ => ((c as char).to_string(), 1),
                };
                let mut upper = sym.clone();
                upper[..1].make_ascii_uppercase();
                let e = Element::from_symbol(&upper)
                    .ok_or_else(|| err(sym_start, SmilesErrorKind::UnknownElement(sym.clone())))?;
                if !e.can_be_aromatic() {
                    return Err(err(sym_start, SmilesErrorKind::NotAromatic(sym)));
                }
                self.pos += len;
                (e, true)
            }
            Some(b']') | None => return Err(err(open, SmilesErrorKind::UnterminatedBracket)),
            Some(c) => return Err(err(self.pos, SmilesErrorKind::UnexpectedChar(c as char))),
        };

        // chirality: @, @@, and the @TH1 / @SP2 style classes
        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
            } else if self.peek().is_some_and(|c| c.is_ascii_uppercase()) && self.peek_at(1).is_some_and(|c| c.is_ascii_uppercase()) {
                self.pos += 2;
                self.digits();
            }
        }

        let mut hydrogens = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hydrogens = self.digits().map_or(1, |d| d.min(u8::MAX as u32) as u8);
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let charge_at = self.pos;
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(d) = self.digits() {
                charge = unit * d as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
            if !(-15..=15).contains(&charge) {
                return Err(err(charge_at, SmilesErrorKind::InvalidCharge));
            }
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            if self.digits().is_none() {
                return Err(err(self.pos, SmilesErrorKind::UnterminatedBracket));
            }
        }

        match self.peek() {
            Some(b']') => self.pos += 1,
            Some(c) if c != b'[' => return Err(err(self.pos, SmilesErrorKind::UnexpectedChar(self.current_char()))),
            _ => return Err(err(open, SmilesErrorKind::UnterminatedBracket)),
        }

        Ok(Atom {
            element,
            charge: charge as i8,
            aromatic,
            hydrogens: Some(hydrogens),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(s: &str) -> (usize, SmilesErrorKind) {
        let e = parse_smiles(s).unwrap_err();
        (e.offset, e.kind)
    }

    #[test]
    fn methane() {
        let g = parse_smiles("C").unwrap();
        assert_eq!((g.atom_count(), g.bond_count()), (1, 0));
    }

    #[test]
    fn pyridine() {
        let g = parse_smiles("c1ccncc1").unwrap();
        assert_eq!(g.atom_count(), 6);
        assert_eq!(g.bond_count(), 6);
        assert!(g.atoms().iter().all(|a| a.aromatic));
        assert_eq!(g.atoms().iter().filter(|a| a.element == Element::N).count(), 1);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
        assert_eq!(g.bond_between(0, 5), Some(BondOrder::Aromatic));
    }

    #[test]
    fn branches_and_bond_symbols() {
        let g = parse_smiles("CC(=O)O").unwrap();
        assert_eq!(g.bond_between(1, 2), Some(BondOrder::Double));
        assert_eq!(g.bond_between(1, 3), Some(BondOrder::Single));
        let g = parse_smiles("C#N").unwrap();
        assert_eq!(g.bond_between(0, 1), Some(BondOrder::Triple));
        // biphenyl link is single even between aromatic atoms when written
        let g = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        assert_eq!(g.bond_between(5, 6), Some(BondOrder::Single));
        let g = parse_smiles("c1ccccc1c1ccccc1").unwrap();
        assert_eq!(g.bond_between(5, 6), Some(BondOrder::Aromatic));
    }

    #[test]
    fn bracket_atoms() {
        let g = parse_smiles("[NH4+]").unwrap();
        assert_eq!(g.atom(0).charge, 1);
        assert_eq!(g.atom(0).hydrogens, Some(4));
        let g = parse_smiles("C[N+](=O)[O-]").unwrap();
        assert_eq!(g.atom(1).charge, 1);
        assert_eq!(g.atom(3).charge, -1);
        let g = parse_smiles("[13CH3][C@@H](O)[Fe+2]").unwrap();
        assert_eq!(g.atom(3).element.symbol(), "Fe");
        assert_eq!(g.atom(3).charge, 2);
        let g = parse_smiles("c1cc[nH]c1").unwrap();
        assert!(g.atom(3).aromatic);
        assert_eq!(g.atom(3).hydrogens, Some(1));
        let g = parse_smiles("[O--]").unwrap();
        assert_eq!(g.atom(0).charge, -2);
        let g = parse_smiles("[se]1cccc1").unwrap();
        assert_eq!(g.atom(0).element.symbol(), "Se");
    }

    #[test]
    fn ring_closures() {
        let g = parse_smiles("C1CC=1").unwrap();
        assert_eq!(g.bond_between(0, 2), Some(BondOrder::Double));
        let g = parse_smiles("C%12CC%12").unwrap();
        assert_eq!(g.bond_between(0, 2), Some(BondOrder::Single));
        // label reuse after closing
        let g = parse_smiles("C1CC1C1CC1").unwrap();
        assert_eq!(g.bond_count(), 7);
        let g = parse_smiles("C=1CC1").unwrap();
        assert_eq!(g.bond_between(0, 2), Some(BondOrder::Double));
    }

    #[test]
    fn errors_are_positioned() {
        assert_eq!(kind("C1CC"), (1, SmilesErrorKind::UnclosedRing(1)));
        assert_eq!(kind("CC(C"), (2, SmilesErrorKind::UnclosedBranch));
        assert_eq!(kind("CC)C"), (2, SmilesErrorKind::UnmatchedCloseParen));
        assert_eq!(kind("CC="), (2, SmilesErrorKind::DanglingBond));
        assert_eq!(kind("=CC"), (0, SmilesErrorKind::DanglingBond));
        assert_eq!(kind("CC(=)C"), (3, SmilesErrorKind::DanglingBond));
        assert_eq!(kind("C=#C"), (2, SmilesErrorKind::ConsecutiveBonds));
        assert_eq!(kind("CXC"), (1, SmilesErrorKind::UnknownElement("X".into())));
        assert_eq!(kind("C[Xy]"), (2, SmilesErrorKind::UnknownElement("Xy".into())));
        assert_eq!(kind("CC.O"), (2, SmilesErrorKind::MultipleFragments));
        assert_eq!(kind("C[NH4"), (1, SmilesErrorKind::UnterminatedBracket));
        assert_eq!(kind("C()C"), (2, SmilesErrorKind::EmptyBranch));
        assert_eq!(kind("C11"), (2, SmilesErrorKind::RingSelfBond(1)));
        assert_eq!(kind("C1C1"), (3, SmilesErrorKind::DuplicateBond));
        assert_eq!(kind("C=1CC#1"), (6, SmilesErrorKind::RingBondConflict(1)));
        assert_eq!(kind(""), (0, SmilesErrorKind::Empty));
        assert_eq!(kind("[fe]"), (1, SmilesErrorKind::NotAromatic("fe".into())));
    }

    #[test]
    fn offsets_account_for_leading_whitespace() {
        assert_eq!(kind("  C1CC"), (3, SmilesErrorKind::UnclosedRing(1)));
    }
}
