//! Canonical atom ranking by iterative neighborhood refinement.
//!
//! Atoms start in classes ordered by the tuple
//! `(atomic number, aromatic, degree, total H, charge, attach mark,
//! explicit H of marked atoms, chirality tag, atom map)`, the map only when
//! requested. Each round re-sorts atoms by their class followed by the sorted
//! multiset of `(bond order, neighbor class)` pairs until the partition
//! stops splitting. Remaining ties are broken by individualizing the lowest
//! index member of the first tied class and refining again.

use super::mol::Molecule;

/// Permutation assigning each atom its canonical position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalRanking {
    /// `rank[atom]` is the canonical position of `atom`.
    pub rank: Vec<usize>,
}

impl CanonicalRanking {
    /// Atom indices sorted by canonical rank.
    pub fn order(&self) -> Vec<usize> {
        let mut order = vec![0; self.rank.len()];
        for (atom, &r) in self.rank.iter().enumerate() {
            order[r] = atom;
        }
        order
    }
}

type Key = Vec<i64>;

fn initial_key(mol: &Molecule, i: usize, include_maps: bool) -> Key {
    let a = mol.atom(i);
    vec![
        a.element.atomic_number() as i64,
        a.aromatic as i64,
        mol.degree(i) as i64,
        a.total_h() as i64,
        a.formal_charge as i64,
        a.attach_mark as i64,
        if a.attach_mark { a.explicit_h as i64 } else { 0 },
        a.stereo.map_or(0, |s| s as i64 + 1),
        if include_maps { a.atom_map.map_or(0, |m| m as i64) } else { 0 },
    ]
}

/// Dense class ids from sortable keys; equal keys share an id and ids follow
/// key order.
fn densify(keys: &[Key]) -> Vec<usize> {
    let mut sorted: Vec<&Key> = keys.iter().collect();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(&k).unwrap())
        .collect()
}

fn count_classes(classes: &[usize]) -> usize {
    classes.iter().copied().max().map_or(0, |m| m + 1)
}

fn refine(mol: &Molecule, mut classes: Vec<usize>) -> Vec<usize> {
    loop {
        let before = count_classes(&classes);
        let keys: Vec<Key> = (0..mol.num_atoms())
            .map(|u| {
                let mut nbrs: Vec<(i64, i64)> = mol
                    .neighbors(u)
                    .iter()
                    .map(|&(v, b)| (mol.bonds()[b].order.index() as i64, classes[v] as i64))
                    .collect();
                nbrs.sort_unstable();
                let mut key = Vec::with_capacity(1 + 2 * nbrs.len());
                key.push(classes[u] as i64);
                for (o, c) in nbrs {
                    key.push(o);
                    key.push(c);
                }
                key
            })
            .collect();
        classes = densify(&keys);
        if count_classes(&classes) == before {
            return classes;
        }
    }
}

/// Canonical ranking; invariant under any permutation of the input atom order
/// for graphs whose refinement ties are symmetry orbits.
pub fn canonical_rank(mol: &Molecule, include_maps: bool) -> CanonicalRanking {
    let n = mol.num_atoms();
    let keys: Vec<Key> = (0..n).map(|i| initial_key(mol, i, include_maps)).collect();
    let mut classes = refine(mol, densify(&keys));
    while count_classes(&classes) < n {
        let mut sizes = vec![0usize; n];
        for &c in &classes {
            sizes[c] += 1;
        }
        let tied = (0..n).find(|&c| sizes[c] > 1).unwrap();
        let chosen = (0..n).find(|&a| classes[a] == tied).unwrap();
        let split: Vec<Key> = (0..n)
            .map(|a| {
                let bump = i64::from(classes[a] == tied && a != chosen);
                vec![2 * classes[a] as i64 + bump]
            })
            .collect();
        classes = refine(mol, densify(&split));
    }
    CanonicalRanking { rank: classes }
}
