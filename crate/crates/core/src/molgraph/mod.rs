//! Molecular graphs: data model, valence model, SMILES I/O and canonical
//! ordering.

mod canon;
mod element;
mod mol;
mod smiles;
pub mod valence;

use thiserror::Error;

pub use canon::{canonical_rank, CanonicalRanking};
pub use element::{Element, NUM_ELEMENTS};
pub use mol::{Atom, Bond, BondOrder, BondStereo, Chirality, Molecule};
pub use smiles::{parse_smiles, write_smiles};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MolError {
    #[error("bond {bond} has invalid endpoints ({a}, {b})")]
    BadBond { bond: usize, a: usize, b: usize },
    #[error("more than one bond between atoms {a} and {b}")]
    DuplicateBond { a: usize, b: usize },
    #[error("atom map {0} used twice")]
    DuplicateMap(u32),
    #[error("atom {atom} ({element}) has valence {used}, above the maximum {max}")]
    Valence {
        atom: usize,
        element: &'static str,
        used: u32,
        max: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesErrorKind {
    #[error("empty input")]
    Empty,
    #[error("unexpected character '{0}'")]
    Unexpected(char),
    #[error("unbalanced parentheses")]
    UnbalancedParen,
    #[error("unmatched ring bond {0}")]
    UnmatchedRing(u32),
    #[error("ring bond {0} closed with a different bond order")]
    ConflictingRingBond(u32),
    #[error("unknown element '{0}'")]
    UnknownElement(String),
    #[error("unclosed bracket atom")]
    UnclosedBracket,
    #[error("bond symbol without a following atom")]
    DanglingBond,
    #[error("repeated bond between the same atoms")]
    DuplicateBond,
    #[error("duplicate atom map {0}")]
    DuplicateMap(u32),
    #[error("valence violation: {0}")]
    Valence(String),
    #[error("{0}")]
    Graph(String),
}

/// SMILES parse failure with the byte offset it was detected at.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SMILES parse error at byte {offset}: {kind}")]
pub struct SmilesError {
    pub offset: usize,
    pub kind: SmilesErrorKind,
}

/// Canonical string of a molecule, optionally keeping atom maps.
pub fn canonical_smiles(mol: &Molecule, include_maps: bool) -> String {
    write_smiles(mol, true, include_maps)
}

/// Graph isomorphism through canonical strings.
pub fn is_isomorphic(a: &Molecule, b: &Molecule, ignore_maps: bool) -> bool {
    a.num_atoms() == b.num_atoms()
        && a.num_bonds() == b.num_bonds()
        && canonical_smiles(a, !ignore_maps) == canonical_smiles(b, !ignore_maps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isomorphism_examples() {
        let m = parse_smiles("CCO").unwrap();
        assert!(is_isomorphic(&m, &m, false));
        let ether = parse_smiles("COC").unwrap();
        assert!(!is_isomorphic(&m, &ether, true));
        let mapped = parse_smiles("[CH3:1][C:2](=[O:3])[O:4][CH2:5][CH3:6]").unwrap();
        let plain = parse_smiles("CCOC(C)=O").unwrap();
        assert!(is_isomorphic(&mapped, &plain, true));
        assert!(!is_isomorphic(&mapped, &plain, false));
    }
}
