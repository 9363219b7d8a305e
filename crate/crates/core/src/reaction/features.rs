use crate::molgraph::{Molecule, NUM_ELEMENTS};

const DEGREE_BUCKETS: usize = 10;
const VALENCY_BUCKETS: usize = 6;

pub const NUM_CLASSES: usize = 10;
pub const ATOM_FEATURES: usize = NUM_ELEMENTS + DEGREE_BUCKETS + 2 * VALENCY_BUCKETS + 1;
pub const ATOM_FEATURES_WITH_CLASS: usize = ATOM_FEATURES + NUM_CLASSES;
pub const BOND_FEATURES: usize = 6;

/// Row-major atom and bond feature matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVectors {
    pub atom_dim: usize,
    pub atom_features: Vec<f64>,
    pub bond_features: Vec<f64>,
}

impl FeatureVectors {
    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atom_features[i * self.atom_dim..(i + 1) * self.atom_dim]
    }

    pub fn bond(&self, b: usize) -> &[f64] {
        &self.bond_features[b * BOND_FEATURES..(b + 1) * BOND_FEATURES]
    }
}

/// Atom features: element, degree, explicit valency, implicit valency and
/// aromaticity, all one-hot except the last, with the reaction class appended
/// when `class_dims` is set. Bond features: type, conjugation, ring.
pub fn featurize(mol: &Molecule, reaction_class: Option<u8>, class_dims: bool) -> FeatureVectors {
    let atom_dim = if class_dims { ATOM_FEATURES_WITH_CLASS } else { ATOM_FEATURES };
    let mut atom_features = vec![0.0; mol.num_atoms() * atom_dim];
    for (i, atom) in mol.atoms().iter().enumerate() {
        let row = &mut atom_features[i * atom_dim..(i + 1) * atom_dim];
        row[atom.element.index()] = 1.0;
        let mut at = NUM_ELEMENTS;
        row[at + mol.degree(i).min(DEGREE_BUCKETS - 1)] = 1.0;
        at += DEGREE_BUCKETS;
        let usage = mol.valence_use(i);
        let bonds = if atom.aromatic { usage.with_pi() } else { usage.strict() };
        let explicit = (bonds + atom.explicit_h as u32) as usize;
        row[at + explicit.min(VALENCY_BUCKETS - 1)] = 1.0;
        at += VALENCY_BUCKETS;
        row[at + (atom.implicit_h as usize).min(VALENCY_BUCKETS - 1)] = 1.0;
        at += VALENCY_BUCKETS;
        row[at] = f64::from(u8::from(atom.aromatic));
        if class_dims {
            if let Some(c) = reaction_class.filter(|c| (1..=NUM_CLASSES as u8).contains(c)) {
                row[ATOM_FEATURES + c as usize - 1] = 1.0;
            }
        }
    }
    let mut bond_features = vec![0.0; mol.num_bonds() * BOND_FEATURES];
    for (b, bond) in mol.bonds().iter().enumerate() {
        let row = &mut bond_features[b * BOND_FEATURES..(b + 1) * BOND_FEATURES];
        row[bond.order.index()] = 1.0;
        row[4] = f64::from(u8::from(bond.conjugated));
        row[5] = f64::from(u8::from(bond.in_ring));
    }
    FeatureVectors {
        atom_dim,
        atom_features,
        bond_features,
    }
}
