//! Deterministic synthetic corpus of atom-mapped reactions.
//!
//! Reactions are built forward from building blocks. In a block, map 1 marks
//! the reactive atom and map 2 the first atom of the part that leaves; these
//! annotations are stripped before the real atom maps are assigned. Product
//! atoms are numbered 1..N and the same numbers go on the corresponding
//! reactant atoms; leaving atoms stay unmapped.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::molgraph::{parse_smiles, write_smiles, Atom, Bond, BondOrder, Molecule};

const ACID_CHLORIDES: &[&str] = &[
    "C[C:1](=O)[Cl:2]",
    "CC[C:1](=O)[Cl:2]",
    "O=[C:1]([Cl:2])c1ccccc1",
    "O=[C:1]([Cl:2])c1ccc(F)cc1",
    "O=[C:1]([Cl:2])c1ccc(OC)cc1",
    "O=[C:1]([Cl:2])C1CC1",
    "O=[C:1]([Cl:2])c1ccncc1",
    "CC(C)[C:1](=O)[Cl:2]",
    "O=[C:1]([Cl:2])c1ccc(Cl)cc1",
    "O=[C:1]([Cl:2])COc1ccccc1",
];

const ACIDS: &[&str] = &[
    "C[C:1](=O)[OH:2]",
    "O=[C:1]([OH:2])c1ccccc1",
    "O=[C:1]([OH:2])c1cccs1",
    "O=[C:1]([OH:2])c1ccc(C)cc1",
    "O=[C:1]([OH:2])CC1CCCCC1",
    "O=[C:1]([OH:2])c1cccnc1",
    "CC(C)(C)OC(=O)N1CCC(CC1)[C:1](=O)[OH:2]",
    "O=[C:1]([OH:2])c1ccc2ccccc2c1",
    "O=[C:1]([OH:2])c1ccc[nH]1",
];

const AMINES: &[&str] = &[
    "[NH2:1]c1ccccc1",
    "C[NH:1]C",
    "[NH:1]1CCOCC1",
    "[NH:1]1CCCC1",
    "[NH2:1]Cc1ccccc1",
    "[NH2:1]C1CCCCC1",
    "CC[NH2:1]",
    "[NH2:1]c1ccc(F)cc1",
    "CN1CC[NH:1]CC1",
    "COc1ccc([NH2:1])cc1",
    "[NH:1]1CCCCC1",
    "Cc1ccc([NH2:1])cc1C",
    "[NH2:1]c1ccncc1",
    "CC(C)[NH2:1]",
];

const ALCOHOLS: &[&str] = &[
    "C[OH:1]",
    "CC[OH:1]",
    "[OH:1]c1ccccc1",
    "[OH:1]Cc1ccccc1",
    "CC(C)[OH:1]",
    "[OH:1]c1ccc(Cl)cc1",
    "[OH:1]CCN1CCOCC1",
    "Cc1ccc([OH:1])cc1",
];

const ALKYL_HALIDES: &[&str] = &[
    "[CH3:1][I:2]",
    "[Br:2][CH2:1]c1ccccc1",
    "CC[CH2:1][Br:2]",
    "[Cl:2][CH2:1]c1ccc(F)cc1",
    "[Br:2][CH2:1]C(=O)OCC",
    "[Br:2][CH2:1]C1CC1",
    "C=C[CH2:1][Br:2]",
    "CC[CH2:1][I:2]",
];

const ARYL_HALIDES: &[&str] = &[
    "[Br:2][c:1]1ccccc1",
    "[Br:2][c:1]1ccc(C)cc1",
    "[Br:2][c:1]1cccnc1",
    "[I:2][c:1]1ccc(OC)cc1",
    "[Br:2][c:1]1ccc(C#N)cc1",
    "[Cl:2][c:1]1ccc([N+](=O)[O-])cc1",
    "[F:2][c:1]1ccc(cc1)C(F)(F)F",
    "[Cl:2][c:1]1ncccn1",
    "[Br:2][c:1]1cccc2ccccc12",
];

const BORONIC: &[&str] = &[
    "O[B:2](O)[c:1]1ccccc1",
    "O[B:2](O)[c:1]1ccc(F)cc1",
    "O[B:2](O)[c:1]1cccc(OC)c1",
    "O[B:2](O)[c:1]1ccncc1",
    "CC1(C)O[B:2](OC1(C)C)[c:1]2ccc(C)cc2",
];

const CARBONYLS: &[&str] = &[
    "[O:2]=[CH:1]c1ccccc1",
    "[O:2]=[CH:1]C1CCCCC1",
    "CC[CH:1]=[O:2]",
    "C[C:1](C)=[O:2]",
    "[O:2]=[C:1]1CCCCC1",
    "[O:2]=[CH:1]c1ccc(Cl)cc1",
    "[O:2]=[CH:1]c1cccnc1",
];

const SULFONYL_CHLORIDES: &[&str] = &[
    "Cc1ccc(cc1)[S:1](=O)(=O)[Cl:2]",
    "C[S:1](=O)(=O)[Cl:2]",
    "O=[S:1](=O)([Cl:2])c1ccccc1",
    "O=[S:1](=O)([Cl:2])c1ccc(F)cc1",
];

const PROTECTED: &[&str] = &[
    "CC(C)(C)O[C:2](=O)[NH:1]c1ccccc1",
    "CC(C)(C)O[C:2](=O)[N:1]1CCOCC1",
    "CC(C)(C)O[C:2](=O)[NH:1]CCc1ccccc1",
    "CC(C)(C)O[C:2](=O)[N:1]1CCC(CC1)C(=O)OC",
    "O=C(c1ccccc1)[O:1][CH3:2]",
    "CC(C)(C)OC(=O)N1CCC(CC1)C(=O)[O:1][CH3:2]",
    "O=C(Cc1ccccc1)[O:1][CH2:2]C",
    "O=C(c1ccc(Br)cc1)[O:1][CH3:2]",
    "O=C(C1CCCCC1)[O:1][C:2](C)(C)C",
    "Cc1ccc(cc1)[O:1][CH2:2]c1ccccc1",
    "O=C1CC[N:1](CC1)[C:2](=O)OCc1ccccc1",
];

const UNSATURATED: &[&str] = &[
    "[CH2:1]=[CH:2]c1ccccc1",
    "C[CH:1]=[CH:2]C(=O)OC",
    "[CH2:1]=[C:2](C)C(=O)OCC",
    "[CH:1]1=[CH:2]CCCC1",
    "C[C:1]#[C:2]c1ccccc1",
    "[O:2]=[C:1](C)c1ccccc1",
    "[O:2]=[C:1]1CCCCC1",
    "COc1ccc(cc1)[CH:1]=[O:2]",
];

const BIFUNCTIONAL: &[&str] = &[
    "[NH:1]1CC[NH:3]CC1",
    "[NH2:1]CC[NH2:3]",
    "[OH:1]c1ccc([OH:3])cc1",
    "[NH2:1]c1ccc([NH2:3])cc1",
    "[OH:1]CCC[OH:3]",
];

struct Block {
    mol: Molecule,
    core: usize,
    /// Second reactive atom (map 3) of a bifunctional block.
    core2: Option<usize>,
    leaving: Vec<bool>,
}

fn block(smiles: &str) -> Block {
    let raw = parse_smiles(smiles).expect("building block parses");
    let core = raw.atom_by_map(1).expect("building block has a core atom");
    let mut leaving = vec![false; raw.num_atoms()];
    if let Some(start) = raw.atom_by_map(2) {
        let mut queue = VecDeque::from([start]);
        leaving[start] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in raw.neighbors(u) {
                if v != core && !leaving[v] {
                    leaving[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    Block {
        core2: raw.atom_by_map(3),
        mol: raw.without_maps(),
        core,
        leaving,
    }
}

/// The map 2 atom of a block, used as the far end of a bond change.
fn second(smiles: &str) -> usize {
    parse_smiles(smiles).unwrap().atom_by_map(2).expect("template needs map 2")
}

/// Freeze hydrogens as explicit so that structural edits below control them.
fn frozen(atoms: &[Atom]) -> Vec<Atom> {
    atoms
        .iter()
        .map(|a| {
            let mut a = a.clone();
            a.explicit_h = a.total_h();
            a
        })
        .collect()
}

/// Product from the reactant graph: drop `leaving` atoms, adjust hydrogens by
/// `h_delta`, rewrite bonds through `bond_fn`, add `extra` bonds. Maps are
/// assigned in product order and copied onto the reactant.
fn assemble(
    reactants: &Molecule,
    leaving: &[bool],
    h_delta: &[i32],
    bond_fn: impl Fn(usize, &Bond) -> Option<BondOrder>,
    extra: &[(usize, usize, BondOrder)],
) -> Option<(Molecule, Molecule)> {
    let n = reactants.num_atoms();
    let kept: Vec<usize> = (0..n).filter(|&i| !leaving[i]).collect();
    let mut new_index = vec![usize::MAX; n];
    for (k, &i) in kept.iter().enumerate() {
        new_index[i] = k;
    }
    let all = frozen(reactants.atoms());
    let mut atoms = Vec::with_capacity(kept.len());
    for (k, &i) in kept.iter().enumerate() {
        let mut a = all[i].clone();
        let h = a.explicit_h as i32 + h_delta[i];
        if h < 0 {
            return None;
        }
        a.explicit_h = h as u8;
        a.atom_map = Some(k as u32 + 1);
        atoms.push(a);
    }
    let mut bonds = Vec::new();
    for (b, bond) in reactants.bonds().iter().enumerate() {
        if leaving[bond.a] || leaving[bond.b] {
            continue;
        }
        if let Some(order) = bond_fn(b, bond) {
            let mut nb = Bond::new(new_index[bond.a], new_index[bond.b], order);
            nb.stereo = bond.stereo;
            bonds.push(nb);
        }
    }
    for &(a, b, order) in extra {
        bonds.push(Bond::new(new_index[a], new_index[b], order));
    }
    for &i in &kept {
        if !reactants.atom(i).aromatic {
            continue;
        }
        // an atom leaving the ring system keeps its flag only with aromatic bonds
        let still = bonds
            .iter()
            .any(|b| (b.a == new_index[i] || b.b == new_index[i]) && b.order == BondOrder::Aromatic);
        atoms[new_index[i]].aromatic = still;
    }
    let product = Molecule::new(atoms, bonds).ok()?;
    if product.num_components() != 1 {
        return None;
    }
    let (mut ratoms, rbonds) = reactants.clone().into_parts();
    for (k, &i) in kept.iter().enumerate() {
        ratoms[i].atom_map = Some(k as u32 + 1);
    }
    let reactants = Molecule::new(ratoms, rbonds).ok()?;
    Some((reactants, product))
}

fn leaving_units(m: &Molecule, core: usize, leaving: &[bool]) -> i32 {
    m.neighbors(core)
        .iter()
        .filter(|&&(v, _)| leaving[v])
        .map(|&(_, b)| m.bonds()[b].order.units() as i32)
        .sum()
}

/// Join the cores of two blocks with a single bond after removing their
/// leaving parts.
fn couple(a: &str, b: &str) -> Option<(Molecule, Molecule)> {
    let (a, b) = (block(a), block(b));
    let offset = a.mol.num_atoms();
    let reactants = a.mol.combine(&b.mol).ok()?;
    let mut leaving = a.leaving.clone();
    leaving.extend(&b.leaving);
    let mut h_delta = vec![0; reactants.num_atoms()];
    let (ca, cb) = (a.core, offset + b.core);
    h_delta[ca] = leaving_units(&reactants, ca, &leaving) - 1;
    h_delta[cb] = leaving_units(&reactants, cb, &leaving) - 1;
    assemble(&reactants, &leaving, &h_delta, |_, b| Some(b.order), &[(ca, cb, BondOrder::Single)])
}

/// Join both cores of a bifunctional block to the core of one copy each of
/// `b`.
fn couple_twice(a: &str, b: &str) -> Option<(Molecule, Molecule)> {
    let (a, b) = (block(a), block(b));
    let core2 = a.core2?;
    let n = a.mol.num_atoms();
    let m = b.mol.num_atoms();
    let reactants = a.mol.combine(&b.mol).ok()?.combine(&b.mol).ok()?;
    let mut leaving = a.leaving.clone();
    leaving.extend(&b.leaving);
    leaving.extend(&b.leaving);
    let mut h_delta = vec![0; reactants.num_atoms()];
    let links = [(a.core, n + b.core), (core2, n + m + b.core)];
    for &(x, y) in &links {
        h_delta[x] = leaving_units(&reactants, x, &leaving) - 1;
        h_delta[y] = leaving_units(&reactants, y, &leaving) - 1;
    }
    let extra: Vec<_> = links.iter().map(|&(x, y)| (x, y, BondOrder::Single)).collect();
    assemble(&reactants, &leaving, &h_delta, |_, b| Some(b.order), &extra)
}

/// Remove the leaving part and give the core hydrogens in its place.
fn cleave(a: &str) -> Option<(Molecule, Molecule)> {
    let a = block(a);
    let mut h_delta = vec![0; a.mol.num_atoms()];
    h_delta[a.core] = leaving_units(&a.mol, a.core, &a.leaving);
    assemble(&a.mol, &a.leaving, &h_delta, |_, b| Some(b.order), &[])
}

/// Lower the order of the bond between map 1 and map 2 by one unit.
fn reduce(smiles: &str) -> Option<(Molecule, Molecule)> {
    let a = block(smiles);
    let other = second(smiles);
    let target = a.mol.bond_between(a.core, other)?;
    let old = a.mol.bonds()[target].order;
    let new = BondOrder::from_units(old.units().checked_sub(1)?)?;
    let mut h_delta = vec![0; a.mol.num_atoms()];
    h_delta[a.core] = 1;
    h_delta[other] = 1;
    let keep = vec![false; a.mol.num_atoms()];
    assemble(&a.mol, &keep, &h_delta, |b, bond| Some(if b == target { new } else { bond.order }), &[])
}

/// A named forward reaction type over building-block lists.
struct Template {
    class: u8,
    lists: (&'static [&'static str], Option<&'static [&'static str]>),
    kind: Kind,
}

#[derive(Clone, Copy)]
enum Kind {
    Couple,
    CoupleTwice,
    Cleave,
    Reduce,
}

const TEMPLATES: &[Template] = &[
    Template { class: 2, lists: (ACID_CHLORIDES, Some(AMINES)), kind: Kind::Couple },
    Template { class: 2, lists: (ACIDS, Some(AMINES)), kind: Kind::Couple },
    Template { class: 2, lists: (ACID_CHLORIDES, Some(ALCOHOLS)), kind: Kind::Couple },
    Template { class: 1, lists: (ALKYL_HALIDES, Some(AMINES)), kind: Kind::Couple },
    Template { class: 1, lists: (ALKYL_HALIDES, Some(ALCOHOLS)), kind: Kind::Couple },
    Template { class: 3, lists: (ARYL_HALIDES, Some(BORONIC)), kind: Kind::Couple },
    Template { class: 1, lists: (ARYL_HALIDES, Some(AMINES)), kind: Kind::Couple },
    Template { class: 2, lists: (SULFONYL_CHLORIDES, Some(AMINES)), kind: Kind::Couple },
    Template { class: 1, lists: (CARBONYLS, Some(AMINES)), kind: Kind::Couple },
    Template { class: 2, lists: (BIFUNCTIONAL, Some(ACID_CHLORIDES)), kind: Kind::CoupleTwice },
    Template { class: 1, lists: (BIFUNCTIONAL, Some(ALKYL_HALIDES)), kind: Kind::CoupleTwice },
    Template { class: 6, lists: (PROTECTED, None), kind: Kind::Cleave },
    Template { class: 7, lists: (UNSATURATED, None), kind: Kind::Reduce },
];

/// Every reaction the templates can produce, as
/// `reactants>>product\tclass` lines, in template order.
pub fn all_reactions() -> Vec<String> {
    let mut out = Vec::new();
    for t in TEMPLATES {
        let mut emit = |built: Option<(Molecule, Molecule)>| {
            if let Some((r, p)) = built {
                out.push(format!(
                    "{}>>{}\t{}",
                    write_smiles(&r, false, true),
                    write_smiles(&p, false, true),
                    t.class
                ));
            }
        };
        match (t.kind, t.lists.1) {
            (Kind::Couple, Some(second_list)) => {
                for a in t.lists.0 {
                    for b in second_list {
                        emit(couple(a, b));
                    }
                }
            }
            (Kind::CoupleTwice, Some(second_list)) => {
                for a in t.lists.0 {
                    for b in second_list {
                        emit(couple_twice(a, b));
                    }
                }
            }
            (Kind::Cleave, _) => t.lists.0.iter().for_each(|a| emit(cleave(a))),
            (Kind::Reduce, _) => t.lists.0.iter().for_each(|a| emit(reduce(a))),
            (Kind::Couple | Kind::CoupleTwice, None) => unreachable!("coupling needs two lists"),
        }
    }
    out
}

/// `n` reactions drawn without replacement by `seed` (all of them when `n`
/// exceeds the pool).
pub fn generate(n: usize, seed: u64) -> Vec<String> {
    let mut all = all_reactions();
    all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    all.truncate(n);
    all
}

/// Distinct product molecules from the full pool, unmapped.
pub fn products() -> Vec<Molecule> {
    let mut seen = std::collections::HashSet::new();
    all_reactions()
        .iter()
        .filter_map(|l| {
            let rhs = l.split(">>").nth(1)?.split('\t').next()?;
            let m = parse_smiles(rhs).ok()?.without_maps();
            seen.insert(write_smiles(&m, true, false)).then_some(m)
        })
        .collect()
}
