use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::molgraph::{BondOrder, Molecule};

use super::{ReactionError, RetroPair};

/// Target state of a bond edit. `Delete` removes the bond; the others set
/// the bond to that type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EditLabel {
    Delete,
    Single,
    Double,
    Triple,
    Aromatic,
}

impl EditLabel {
    pub const ALL: [EditLabel; 5] = [
        EditLabel::Delete,
        EditLabel::Single,
        EditLabel::Double,
        EditLabel::Triple,
        EditLabel::Aromatic,
    ];

    /// Column in the per-bond logit matrix.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<EditLabel> {
        Self::ALL.get(i).copied()
    }

    pub fn for_order(order: BondOrder) -> EditLabel {
        match order {
            BondOrder::Single => EditLabel::Single,
            BondOrder::Double => EditLabel::Double,
            BondOrder::Triple => EditLabel::Triple,
            BondOrder::Aromatic => EditLabel::Aromatic,
        }
    }

    pub fn order(self) -> Option<BondOrder> {
        match self {
            EditLabel::Delete => None,
            EditLabel::Single => Some(BondOrder::Single),
            EditLabel::Double => Some(BondOrder::Double),
            EditLabel::Triple => Some(BondOrder::Triple),
            EditLabel::Aromatic => Some(BondOrder::Aromatic),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EditLabel::Delete => "DELETE",
            other => other.order().unwrap().name(),
        }
    }
}

impl FromStr for EditLabel {
    type Err = ReactionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EditLabel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| ReactionError::BadEditString(s.to_string()))
    }
}

/// A change to an existing product bond, addressed by atom maps with the
/// smaller map first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BondEdit {
    pub pair: (u32, u32),
    pub label: EditLabel,
}

impl BondEdit {
    pub fn new(i: u32, j: u32, label: EditLabel) -> BondEdit {
        BondEdit {
            pair: (i.min(j), i.max(j)),
            label,
        }
    }
}

/// A hydrogen-count change on the atom with this map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomEdit {
    pub atom: u32,
}

/// A single edit, used where bond and atom edits share one sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Edit {
    Bond(BondEdit),
    Atom(AtomEdit),
}

/// Edits turning a product into synthons. Bond edits are sorted by pair and
/// atom edits by map.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EditSet {
    pub bond_edits: Vec<BondEdit>,
    pub atom_edits: Vec<AtomEdit>,
}

impl EditSet {
    pub fn new(mut bond_edits: Vec<BondEdit>, mut atom_edits: Vec<AtomEdit>) -> EditSet {
        bond_edits.sort();
        atom_edits.sort();
        EditSet {
            bond_edits,
            atom_edits,
        }
    }

    pub fn single(edit: Edit) -> EditSet {
        match edit {
            Edit::Bond(b) => EditSet::new(vec![b], vec![]),
            Edit::Atom(a) => EditSet::new(vec![], vec![a]),
        }
    }

    pub fn len(&self) -> usize {
        self.bond_edits.len() + self.atom_edits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Teacher-forcing order: bond edits, then atom edits.
    pub fn sequence(&self) -> Vec<Edit> {
        self.bond_edits
            .iter()
            .map(|&b| Edit::Bond(b))
            .chain(self.atom_edits.iter().map(|&a| Edit::Atom(a)))
            .collect()
    }

    pub fn from_sequence(edits: &[Edit]) -> EditSet {
        let mut bonds = Vec::new();
        let mut atoms = Vec::new();
        for e in edits {
            match *e {
                Edit::Bond(b) => bonds.push(b),
                Edit::Atom(a) => atoms.push(a),
            }
        }
        EditSet::new(bonds, atoms)
    }

    /// Maps of every atom an edit touches.
    pub fn touched_maps(&self) -> HashSet<u32> {
        self.bond_edits
            .iter()
            .flat_map(|b| [b.pair.0, b.pair.1])
            .chain(self.atom_edits.iter().map(|a| a.atom))
            .collect()
    }

    /// Sorted bond-edit label names, for reaction signatures.
    pub fn label_signature(&self) -> Vec<&'static str> {
        let mut v: Vec<&'static str> = self.bond_edits.iter().map(|b| b.label.name()).collect();
        v.extend(self.atom_edits.iter().map(|_| "H"));
        v.sort();
        v
    }
}

impl fmt::Display for EditSet {
    /// `b:2-4:DELETE;a:7`, or `-` when empty.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("-");
        }
        let parts: Vec<String> = self
            .bond_edits
            .iter()
            .map(|b| format!("b:{}-{}:{}", b.pair.0, b.pair.1, b.label.name()))
            .chain(self.atom_edits.iter().map(|a| format!("a:{}", a.atom)))
            .collect();
        f.write_str(&parts.join(";"))
    }
}

impl FromStr for EditSet {
    type Err = ReactionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ReactionError::BadEditString(s.to_string());
        if s == "-" || s.is_empty() {
            return Ok(EditSet::default());
        }
        let mut bonds = Vec::new();
        let mut atoms = Vec::new();
        for part in s.split(';') {
            let fields: Vec<&str> = part.split(':').collect();
            match fields.as_slice() {
                ["b", pair, label] => {
                    let (i, j) = pair.split_once('-').ok_or_else(bad)?;
                    bonds.push(BondEdit::new(
                        i.parse().map_err(|_| bad())?,
                        j.parse().map_err(|_| bad())?,
                        label.parse()?,
                    ));
                }
                ["a", m] => atoms.push(AtomEdit {
                    atom: m.parse().map_err(|_| bad())?,
                }),
                _ => return Err(bad()),
            }
        }
        Ok(EditSet::new(bonds, atoms))
    }
}

/// Diff the mapped product against its reactants.
///
/// A product bond whose reactant counterpart is missing becomes `Delete`,
/// one with a different type becomes that type. An atom untouched by bond
/// edits whose hydrogen count differs becomes an atom edit. A reactant bond
/// between two product atoms that the product lacks is a new-bond formation
/// and is rejected.
pub fn extract_edits(pair: &RetroPair) -> Result<EditSet, ReactionError> {
    let product = &pair.product;
    let reactants = &pair.reactants;
    let rmap = reactants.map_index();
    let product_maps = product.map_index();
    let mut bond_edits = Vec::new();
    for bond in product.bonds() {
        let (mi, mj) = (map_of(product, bond.a)?, map_of(product, bond.b)?);
        let (ri, rj) = (rmap[&mi], rmap[&mj]);
        match reactants.bond_between(ri, rj) {
            None => bond_edits.push(BondEdit::new(mi, mj, EditLabel::Delete)),
            Some(rb) => {
                let order = reactants.bonds()[rb].order;
                if order != bond.order {
                    bond_edits.push(BondEdit::new(mi, mj, EditLabel::for_order(order)));
                }
            }
        }
    }
    for rb in reactants.bonds() {
        let (Some(mi), Some(mj)) = (reactants.atom(rb.a).atom_map, reactants.atom(rb.b).atom_map) else {
            continue;
        };
        if let (Some(&pi), Some(&pj)) = (product_maps.get(&mi), product_maps.get(&mj)) {
            if product.bond_between(pi, pj).is_none() {
                return Err(ReactionError::NewBondFormation(mi.min(mj), mi.max(mj)));
            }
        }
    }
    let touched: HashSet<u32> = bond_edits.iter().flat_map(|b| [b.pair.0, b.pair.1]).collect();
    let mut atom_edits = Vec::new();
    for atom in product.atoms() {
        let m = atom.atom_map.expect("validated product");
        if touched.contains(&m) {
            continue;
        }
        if atom.total_h() != reactants.atom(rmap[&m]).total_h() {
            atom_edits.push(AtomEdit { atom: m });
        }
    }
    Ok(EditSet::new(bond_edits, atom_edits))
}

fn map_of(mol: &Molecule, i: usize) -> Result<u32, ReactionError> {
    mol.atom(i).atom_map.ok_or(ReactionError::UnmappedProductAtom(i))
}

/// Apply edits to a product, producing attach-marked synthons.
///
/// Every atom an edit touches gets an attachment mark and loses its formal
/// charge. Aliphatic marked atoms drop their explicit hydrogens so the
/// valence model refills them; aromatic ones keep their hydrogen count plus
/// the bond order they lost (less any positive charge that absorbed it),
/// since aromatic hydrogens cannot be inferred from valence alone. Atom maps
/// are kept.
pub fn apply_edits(product: &Molecule, edits: &EditSet) -> Result<Molecule, ReactionError> {
    let maps = product.map_index();
    let index_of = |m: u32| maps.get(&m).copied().ok_or(ReactionError::MissingAtom(m));
    let n = product.num_atoms();
    let mut lost = vec![0u32; n];
    let mut marked_by_bond = vec![false; n];
    let mut marked_by_atom = vec![false; n];
    let mut remove = vec![false; product.num_bonds()];
    let mut new_order: Vec<Option<BondOrder>> = vec![None; product.num_bonds()];
    for edit in &edits.bond_edits {
        let (i, j) = (index_of(edit.pair.0)?, index_of(edit.pair.1)?);
        let b = product
            .bond_between(i, j)
            .ok_or(ReactionError::MissingBond(edit.pair.0, edit.pair.1))?;
        let old = product.bonds()[b].order;
        let delta = match edit.label.order() {
            None => {
                remove[b] = true;
                old.units()
            }
            Some(order) => {
                new_order[b] = Some(order);
                old.units().saturating_sub(order.units())
            }
        };
        for x in [i, j] {
            lost[x] += delta;
            marked_by_bond[x] = true;
        }
    }
    for edit in &edits.atom_edits {
        marked_by_atom[index_of(edit.atom)?] = true;
    }

    let (mut atoms, bonds) = product.clone().into_parts();
    let bonds: Vec<_> = bonds
        .into_iter()
        .enumerate()
        .filter(|(b, _)| !remove[*b])
        .map(|(b, mut bond)| {
            if let Some(order) = new_order[b] {
                bond.order = order;
                bond.stereo = None;
            }
            bond
        })
        .collect();
    let mut has_aromatic = vec![false; n];
    for bond in &bonds {
        if bond.order == crate::molgraph::BondOrder::Aromatic {
            has_aromatic[bond.a] = true;
            has_aromatic[bond.b] = true;
        }
    }
    for i in 0..n {
        if !(marked_by_bond[i] || marked_by_atom[i]) {
            continue;
        }
        let atom = &mut atoms[i];
        let old_h = atom.total_h() as u32;
        let absorbed = atom.formal_charge.max(0) as u32;
        atom.aromatic = has_aromatic[i];
        atom.explicit_h = if atom.aromatic {
            if marked_by_bond[i] {
                (old_h + lost[i]).saturating_sub(absorbed) as u8
            } else {
                old_h as u8
            }
        } else {
            0
        };
        atom.formal_charge = 0;
        atom.attach_mark = true;
        atom.stereo = None;
    }
    Molecule::new(atoms, bonds).map_err(ReactionError::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::{canonical_smiles, is_isomorphic, parse_smiles};
    use crate::reaction::parse_reaction;

    const ESTER: &str = "[CH3:1][C:2](=[O:3])[Cl:7].[OH:4][CH2:5][CH3:6]>>[CH3:1][C:2](=[O:3])[O:4][CH2:5][CH3:6]";

    #[test]
    fn edit_string_round_trip() {
        let e = EditSet::new(
            vec![BondEdit::new(4, 2, EditLabel::Delete), BondEdit::new(1, 9, EditLabel::Double)],
            vec![AtomEdit { atom: 5 }],
        );
        let s = e.to_string();
        assert_eq!(s, "b:1-9:DOUBLE;b:2-4:DELETE;a:5");
        assert_eq!(s.parse::<EditSet>().unwrap(), e);
        assert_eq!("-".parse::<EditSet>().unwrap(), EditSet::default());
        assert!("b:1:DELETE".parse::<EditSet>().is_err());
        assert!("b:1-2:QUAD".parse::<EditSet>().is_err());
    }

    #[test]
    fn identity_has_no_edits() {
        let pair = parse_reaction("[CH3:1][OH:2]>>[CH3:1][OH:2]").unwrap();
        assert!(extract_edits(&pair).unwrap().is_empty());
    }

    #[test]
    fn ester_edit_is_single_delete() {
        let pair = parse_reaction(ESTER).unwrap();
        let edits = extract_edits(&pair).unwrap();
        assert_eq!(edits.bond_edits, vec![BondEdit::new(2, 4, EditLabel::Delete)]);
        assert!(edits.atom_edits.is_empty());
    }

    #[test]
    fn hydrogen_only_change_is_atom_edit() {
        let pair = parse_reaction("[CH3:1][OH:2]>>[CH3:1][O-:2]").unwrap();
        let edits = extract_edits(&pair).unwrap();
        assert!(edits.bond_edits.is_empty());
        assert_eq!(edits.atom_edits, vec![AtomEdit { atom: 2 }]);
    }

    #[test]
    fn new_bond_is_rejected() {
        let pair = parse_reaction("[CH2:1]1[CH2:2][CH2:3]1>>[CH3:1][CH2:2][CH3:3]").unwrap();
        assert!(matches!(extract_edits(&pair), Err(ReactionError::NewBondFormation(1, 3))));
    }

    #[test]
    fn apply_empty_is_identity() {
        let pair = parse_reaction(ESTER).unwrap();
        let s = apply_edits(&pair.product, &EditSet::default()).unwrap();
        assert!(is_isomorphic(&s, &pair.product, false));
        assert!(s.atoms().iter().all(|a| !a.attach_mark));
    }

    #[test]
    fn apply_delete_splits_components() {
        let pair = parse_reaction(ESTER).unwrap();
        let s = apply_edits(&pair.product, &extract_edits(&pair).unwrap()).unwrap();
        assert_eq!(s.num_components(), 2);
        let marked: Vec<u32> = s
            .atoms()
            .iter()
            .filter(|a| a.attach_mark)
            .map(|a| a.atom_map.unwrap())
            .collect();
        assert_eq!(marked, vec![2, 4]);
        let o = s.atom(s.atom_by_map(4).unwrap());
        assert_eq!(o.total_h(), 1);
    }

    #[test]
    fn apply_order_change() {
        let product = parse_smiles("[CH3:1][CH2:2][OH:3]").unwrap();
        let edits = EditSet::new(vec![BondEdit::new(2, 3, EditLabel::Double)], vec![]);
        let s = apply_edits(&product, &edits).unwrap();
        assert_eq!(s.num_components(), 1);
        assert_eq!(s.atoms().iter().filter(|a| a.attach_mark).count(), 2);
        let o = s.atom(s.atom_by_map(3).unwrap());
        assert_eq!(o.total_h(), 0);
        assert_eq!(canonical_smiles(&s, false), "C[C*]=[O*]");
    }

    #[test]
    fn apply_missing_bond_errors() {
        let product = parse_smiles("[CH3:1][CH2:2][OH:3]").unwrap();
        let edits = EditSet::new(vec![BondEdit::new(1, 3, EditLabel::Delete)], vec![]);
        assert!(matches!(apply_edits(&product, &edits), Err(ReactionError::MissingBond(1, 3))));
        let edits = EditSet::new(vec![], vec![AtomEdit { atom: 9 }]);
        assert!(matches!(apply_edits(&product, &edits), Err(ReactionError::MissingAtom(9))));
    }

    #[test]
    fn aromatic_sites_conserve_hydrogen() {
        // N-methyl indole losing its methyl keeps an NH
        let product = parse_smiles("[CH3:1][n:2]1[cH:3][cH:4][c:5]2[cH:6][cH:7][cH:8][cH:9][c:10]12").unwrap();
        let edits = EditSet::new(vec![BondEdit::new(1, 2, EditLabel::Delete)], vec![]);
        let s = apply_edits(&product, &edits).unwrap();
        assert_eq!(s.atom(s.atom_by_map(2).unwrap()).total_h(), 1);
        // pyridinium nitrogen gives its bond back to the charge
        let product = parse_smiles("[CH3:1][n+:2]1[cH:3][cH:4][cH:5][cH:6][cH:7]1").unwrap();
        let s = apply_edits(&product, &EditSet::new(vec![BondEdit::new(1, 2, EditLabel::Delete)], vec![])).unwrap();
        let n = s.atom(s.atom_by_map(2).unwrap());
        assert_eq!((n.total_h(), n.formal_charge), (0, 0));
    }
}
