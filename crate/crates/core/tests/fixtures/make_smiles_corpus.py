"""Regenerates smiles_corpus.json.

Reference graphs come from RDKit (`MolFromSmiles(s, sanitize=False)`), which
keeps aromaticity as written and adds no hydrogens. Generated cases are read
from CSV files written by `graphsal generate`; pass their paths as
arguments. Malformed offsets are assigned by hand below.
"""

import csv
import json
import sys

from rdkit import Chem

HAND = [
    # small chains and branches
    "C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "B",
    "CC", "CCO", "C=C", "C#N", "C=O", "CC(C)C", "CC(C)(C)C", "CC(=O)O", "CC(=O)N", "C(C)(C)(C)C",
    "OCC(O)CO", "CCCCCCCCCC", "CC(C)CC(C)(C)O", "NC(=O)N", "O=C=O", "C#CC#C", "C=CC=CC=C", "FC(F)(F)Cl",
    "ClC(Cl)Cl", "BrCCBr", "ICCI", "S=C=S", "CS(=O)(=O)C", "COP(=O)(OC)OC", "B(O)(O)C", "CC(=O)SC",
    # rings
    "C1CC1", "C1CCC1", "C1CCCC1", "C1CCCCC1", "C1CCCCCC1", "C1CCCCCCC1", "C1=CCCCC1", "C1CC2CCC1C2",
    "C12CC1C2", "C1CC11CC1", "C%10CC%10", "C%12CCC%12", "C1CCC2(CC1)CCCC2", "O1CCOCC1", "N1CCNCC1",
    "C1CCC2CCCCC2C1",
    # aromatics
    "c1ccccc1", "c1ccncc1", "c1cncnc1", "c1ccsc1", "c1ccoc1", "c1cc[nH]c1", "c1ccc2ccccc2c1",
    "c1ccc2c(c1)ccc1ccccc12", "c1ccc(cc1)-c1ccccc1", "Cc1ccncc1", "Oc1ccccc1", "Nc1ccc(cc1)S(=O)(=O)N",
    "c1cnc2[nH]ccc2c1", "c1ccc2[nH]ccc2c1", "c1csc(n1)N", "o1cccc1C=O", "Clc1ccc(Cl)cc1", "c1ccnnc1",
    "c1ncncn1", "Cc1ccccc1C", "c1ccc2ncccc2c1", "c1cc2ccc3cccc4ccc(c1)c2c34",
    # charges, brackets, explicit hydrogens
    "[NH4+]", "[O-]C=O", "C[N+](=O)[O-]", "[Na+]", "[Cl-]", "CC(=O)[O-]", "C[N+](C)(C)C", "[CH3]", "[CH2]=O",
    "[13CH4]", "[C@@H](N)(C)C(=O)O", "N[C@@H](C)C(=O)O", "[nH]1cccc1", "[O--]", "[Fe+3]", "[Cu+2]", "[se]1cccc1",
    "[2H]C([2H])([2H])O", "C[S+](C)C", "[N-]=[N+]=N", "OC(=O)C[NH3+]",
    # stereo and explicit bonds
    "F/C=C/F", "F/C=C\\F", "C-C-C", "C1CCC=1C", "c1ccccc1:c1ccccc1", "C1.C1",
]

# (smiles, byte offset, expected error kind name)
MALFORMED = [
    ("", 0, "Empty"),
    ("   ", 0, "Empty"),
    ("C1CC", 1, "UnclosedRing"),
    ("C(C", 1, "UnclosedBranch"),
    ("CC)C", 2, "UnmatchedCloseParen"),
    ("C()C", 2, "EmptyBranch"),
    ("CC=", 2, "DanglingBond"),
    ("C=#C", 2, "ConsecutiveBonds"),
    ("[CH3", 0, "UnterminatedBracket"),
    ("Xx", 0, "UnknownElement"),
    ("C[Zz]C", 2, "UnknownElement"),
    ("CC.CC", 2, "MultipleFragments"),
    ("C=1CCC#1", 7, "RingBondConflict"),
    ("C11", 2, "RingSelfBond"),
    ("C12CC12", 6, "DuplicateBond"),
    ("cC!", 2, "UnexpectedChar"),
    ("C%1C", 1, "UnexpectedChar"),
    ("[C+A]", 3, "UnexpectedChar"),
    ("[fe]", 1, "NotAromatic"),
    ("(CC)", 0, "UnexpectedChar"),
    ("C=(C)C", 1, "DanglingBond"),
    ("  C1CC", 3, "UnclosedRing"),
]


def reference(smiles):
    mol = Chem.MolFromSmiles(smiles, sanitize=False)
    if mol is None:
        raise ValueError(f"RDKit rejects {smiles!r}")
    atoms = []
    for a in mol.GetAtoms():
        atom = {"symbol": a.GetSymbol(), "aromatic": a.GetIsAromatic(), "charge": a.GetFormalCharge()}
        if a.GetNoImplicit():
            atom["hydrogens"] = a.GetNumExplicitHs()
        atoms.append(atom)
    kinds = {"SINGLE": "single", "DOUBLE": "double", "TRIPLE": "triple", "AROMATIC": "aromatic"}
    bonds = sorted(
        [min(b.GetBeginAtomIdx(), b.GetEndAtomIdx()), max(b.GetBeginAtomIdx(), b.GetEndAtomIdx()),
         kinds[str(b.GetBondType())]]
        for b in mol.GetBonds()
    )
    return {"smiles": smiles, "atoms": atoms, "bonds": bonds}


def main(paths):
    valid = []
    rejected_by_policy = []
    for s in HAND:
        if "." in s:
            rejected_by_policy.append(s)
            continue
        valid.append(dict(reference(s), source="hand"))
    generated = []
    for path in paths:
        with open(path) as f:
            generated += [row["smiles"] for row in csv.DictReader(f)]
    for s in generated[: 200 - len(valid)]:
        valid.append(dict(reference(s), source="generated"))
    malformed = [{"smiles": s, "offset": o, "kind": k} for s, o, k in MALFORMED]
    for s in rejected_by_policy:
        malformed.append({"smiles": s, "offset": None, "kind": None})
    json.dump({"valid": valid, "malformed": malformed}, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main(sys.argv[1:])
