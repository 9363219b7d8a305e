//! Reaction preprocessing: edit extraction, synthons, leaving groups,
//! vocabulary, featurization and dataset splits.

mod attach;
pub mod dataset;
mod edits;
mod features;
mod leaving_group;
mod vocab;

use thiserror::Error;

use crate::molgraph::{parse_smiles, MolError, Molecule, SmilesError};

pub use attach::{attach_leaving_group, attach_sites, AttachError, AttachTable};
pub use edits::{apply_edits, extract_edits, AtomEdit, BondEdit, Edit, EditLabel, EditSet};
pub use features::{
    featurize, FeatureVectors, ATOM_FEATURES, ATOM_FEATURES_WITH_CLASS, BOND_FEATURES, NUM_CLASSES,
};
pub use leaving_group::{
    align_components, extract_leaving_group, order_components, Attachment, LeavingGroup,
};
pub use vocab::{Token, Vocabulary, END, PAD, START};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReactionError {
    #[error("missing '>>' separator")]
    MissingSeparator,
    #[error("bad reaction class '{0}'")]
    BadClass(String),
    #[error("{side}: {source}")]
    Smiles {
        side: &'static str,
        source: SmilesError,
    },
    #[error("product has {0} components, expected 1")]
    MultiComponentProduct(usize),
    #[error("product atom {0} has no atom map")]
    UnmappedProductAtom(usize),
    #[error("product atom map {0} not found among reactants")]
    UnmatchedMap(u32),
    #[error("reactants form a new bond between maps {0} and {1}")]
    NewBondFormation(u32, u32),
    #[error("no product atom with map {0}")]
    MissingAtom(u32),
    #[error("no product bond between maps {0} and {1}")]
    MissingBond(u32, u32),
    #[error("{0} synthon components but {1} reactant components")]
    ComponentCountMismatch(usize, usize),
    #[error("synthon component {0} has no unique reactant match")]
    AmbiguousAlignment(usize),
    #[error("bad vocabulary line '{0}'")]
    BadVocabulary(String),
    #[error("malformed processed record on line {0}")]
    BadRecord(usize),
    #[error("bad edit string '{0}'")]
    BadEditString(String),
    #[error(transparent)]
    Graph(#[from] MolError),
    #[error(transparent)]
    Attach(#[from] AttachError),
}

/// A mapped product with the reactants it was made from.
#[derive(Debug, Clone, PartialEq)]
pub struct RetroPair {
    pub product: Molecule,
    pub reactants: Molecule,
    pub reaction_class: Option<u8>,
}

impl RetroPair {
    /// Validate the product side: one component, every atom mapped, every map
    /// present among the reactants.
    pub fn new(
        product: Molecule,
        reactants: Molecule,
        reaction_class: Option<u8>,
    ) -> Result<RetroPair, ReactionError> {
        if product.num_components() != 1 {
            return Err(ReactionError::MultiComponentProduct(product.num_components()));
        }
        let rmap = reactants.map_index();
        for (i, atom) in product.atoms().iter().enumerate() {
            let m = atom.atom_map.ok_or(ReactionError::UnmappedProductAtom(i))?;
            if !rmap.contains_key(&m) {
                return Err(ReactionError::UnmatchedMap(m));
            }
        }
        Ok(RetroPair {
            product,
            reactants,
            reaction_class,
        })
    }
}

/// Parse `reactants>>product` with an optional tab-separated class id.
pub fn parse_reaction(line: &str) -> Result<RetroPair, ReactionError> {
    let line = line.trim_end_matches(['\r', '\n']);
    let (rxn, class) = match line.split_once('\t') {
        Some((r, c)) => (r, Some(c.trim())),
        None => (line, None),
    };
    let reaction_class = match class {
        None | Some("") => None,
        Some(c) => match c.parse::<u8>() {
            Ok(v) if (1..=10).contains(&v) => Some(v),
            _ => return Err(ReactionError::BadClass(c.to_string())),
        },
    };
    let (lhs, rhs) = rxn.split_once(">>").ok_or(ReactionError::MissingSeparator)?;
    let reactants = parse_smiles(lhs.trim()).map_err(|source| ReactionError::Smiles {
        side: "reactants",
        source,
    })?;
    let product = parse_smiles(rhs.trim()).map_err(|source| ReactionError::Smiles {
        side: "product",
        source,
    })?;
    RetroPair::new(product, reactants, reaction_class)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_identity() {
        let p = parse_reaction("[CH3:1][OH:2]>>[CH3:1][OH:2]").unwrap();
        assert_eq!(p.reactants.num_components(), 1);
        assert_eq!(p.reaction_class, None);
    }

    #[test]
    fn parses_class_column() {
        let p = parse_reaction("[CH3:1][OH:2]>>[CH3:1][OH:2]\t3").unwrap();
        assert_eq!(p.reaction_class, Some(3));
        assert!(matches!(
            parse_reaction("[CH3:1][OH:2]>>[CH3:1][OH:2]\t11"),
            Err(ReactionError::BadClass(_))
        ));
    }

    #[test]
    fn rejects_bad_records() {
        assert!(matches!(parse_reaction("CC>>CC"), Err(ReactionError::UnmappedProductAtom(0))));
        assert!(matches!(parse_reaction("CC.CC"), Err(ReactionError::MissingSeparator)));
        assert!(matches!(
            parse_reaction("[CH4:1]>>[CH4:1].[CH4:2]"),
            Err(ReactionError::MultiComponentProduct(2))
        ));
        assert!(matches!(
            parse_reaction("[CH4:1]>>[CH3:1][CH3:2]"),
            Err(ReactionError::UnmatchedMap(2))
        ));
        assert!(matches!(
            parse_reaction("[CH4:1].[CH4:1]>>[CH4:1]"),
            Err(ReactionError::Smiles { side: "reactants", .. })
        ));
    }
}
