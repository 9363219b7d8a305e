use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use super::element::Element;
use super::valence::{self, ValenceUse};
use super::MolError;

/// Tetrahedral parity as written in the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Chirality {
    /// `@`
    Anticlockwise,
    /// `@@`
    Clockwise,
}

impl Chirality {
    pub fn as_str(self) -> &'static str {
        match self {
            Chirality::Anticlockwise => "@",
            Chirality::Clockwise => "@@",
        }
    }
}

/// Directional bond marker as written, relative to the bond's `(a, b)` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondStereo {
    /// `/`
    Up,
    /// `\`
    Down,
}

impl BondStereo {
    pub fn flipped(self) -> BondStereo {
        match self {
            BondStereo::Up => BondStereo::Down,
            BondStereo::Down => BondStereo::Up,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            BondStereo::Up => '/',
            BondStereo::Down => '\\',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub const ALL: [BondOrder; 4] = [
        BondOrder::Single,
        BondOrder::Double,
        BondOrder::Triple,
        BondOrder::Aromatic,
    ];

    /// Position in the bond-type one-hot.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Localized valence contribution; aromatic bonds count one unit.
    pub fn units(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub fn from_units(units: u32) -> Option<BondOrder> {
        match units {
            1 => Some(BondOrder::Single),
            2 => Some(BondOrder::Double),
            3 => Some(BondOrder::Triple),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BondOrder::Single => "SINGLE",
            BondOrder::Double => "DOUBLE",
            BondOrder::Triple => "TRIPLE",
            BondOrder::Aromatic => "AROMATIC",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    pub explicit_h: u8,
    /// Filled in by [`Molecule::new`]; any value set beforehand is ignored.
    pub implicit_h: u8,
    pub aromatic: bool,
    pub atom_map: Option<u32>,
    pub attach_mark: bool,
    pub stereo: Option<Chirality>,
}

impl Atom {
    pub fn new(element: Element) -> Atom {
        Atom {
            element,
            formal_charge: 0,
            explicit_h: 0,
            implicit_h: 0,
            aromatic: false,
            atom_map: None,
            attach_mark: false,
            stereo: None,
        }
    }

    pub fn total_h(&self) -> u8 {
        self.explicit_h + self.implicit_h
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    /// Filled in by [`Molecule::new`].
    pub in_ring: bool,
    /// Filled in by [`Molecule::new`].
    pub conjugated: bool,
    pub stereo: Option<BondStereo>,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Bond {
        Bond {
            a,
            b,
            order,
            in_ring: false,
            conjugated: false,
            stereo: None,
        }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// An attributed, possibly disconnected, molecular graph.
///
/// Construction validates the graph and derives implicit hydrogens, ring and
/// conjugation flags, aromaticity of alternating six-membered rings, and the
/// connected-component partition. Instances are immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, usize)>>,
    component: Vec<usize>,
    num_components: usize,
}

impl Molecule {
    pub fn new(mut atoms: Vec<Atom>, mut bonds: Vec<Bond>) -> Result<Molecule, MolError> {
        let n = atoms.len();
        let mut pairs = HashSet::new();
        for (i, bond) in bonds.iter().enumerate() {
            if bond.a == bond.b || bond.a >= n || bond.b >= n {
                return Err(MolError::BadBond {
                    bond: i,
                    a: bond.a,
                    b: bond.b,
                });
            }
            if !pairs.insert((bond.a.min(bond.b), bond.a.max(bond.b))) {
                return Err(MolError::DuplicateBond { a: bond.a, b: bond.b });
            }
        }
        let mut maps = HashSet::new();
        for atom in &atoms {
            if let Some(m) = atom.atom_map {
                if !maps.insert(m) {
                    return Err(MolError::DuplicateMap(m));
                }
            }
        }

        let adjacency = build_adjacency(n, &bonds);
        mark_ring_bonds(&adjacency, &mut bonds);
        perceive_kekule_rings(&adjacency, &mut atoms, &mut bonds);

        for i in 0..n {
            let usage = usage_of(&adjacency[i], &bonds);
            let atom = &mut atoms[i];
            if !valence::within_valence(atom, usage) {
                return Err(MolError::Valence {
                    atom: i,
                    element: atom.element.symbol(),
                    used: usage.strict() + atom.explicit_h as u32,
                    max: valence::max_valence(atom).unwrap_or(0),
                });
            }
            atom.implicit_h = valence::implicit_hydrogens(atom, usage);
        }
        mark_conjugation(&adjacency, &mut bonds);

        let (component, num_components) = components(&adjacency);
        Ok(Molecule {
            atoms,
            bonds,
            adjacency,
            component,
            num_components,
        })
    }

    pub fn empty() -> Molecule {
        Molecule {
            atoms: Vec::new(),
            bonds: Vec::new(),
            adjacency: Vec::new(),
            component: Vec::new(),
            num_components: 0,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_bonds(&self) -> usize {
        self.bonds.len()
    }

    /// `(neighbor, bond index)` pairs of atom `i`.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn bond_between(&self, i: usize, j: usize) -> Option<usize> {
        self.adjacency[i]
            .iter()
            .find(|(nbr, _)| *nbr == j)
            .map(|(_, b)| *b)
    }

    pub fn valence_use(&self, i: usize) -> ValenceUse {
        usage_of(&self.adjacency[i], &self.bonds)
    }

    /// Bond-order sum with aromatic bonds counted as 1.5.
    pub fn bond_order_sum(&self, i: usize) -> f64 {
        self.valence_use(i).order_sum()
    }

    pub fn free_valence(&self, i: usize) -> u32 {
        valence::free_valence(&self.atoms[i], self.valence_use(i))
    }

    pub fn num_components(&self) -> usize {
        self.num_components
    }

    /// Component id of each atom; ids are numbered in order of first atom.
    pub fn component_ids(&self) -> &[usize] {
        &self.component
    }

    pub fn component_atoms(&self, c: usize) -> Vec<usize> {
        (0..self.atoms.len())
            .filter(|&i| self.component[i] == c)
            .collect()
    }

    pub fn atom_by_map(&self, map: u32) -> Option<usize> {
        self.atoms.iter().position(|a| a.atom_map == Some(map))
    }

    /// Map number to atom index for every mapped atom.
    pub fn map_index(&self) -> HashMap<u32, usize> {
        self.atoms
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.atom_map.map(|m| (m, i)))
            .collect()
    }

    /// Induced subgraph on `keep`, preserving the given atom order.
    pub fn subgraph(&self, keep: &[usize]) -> Result<Molecule, MolError> {
        let mut remap = vec![usize::MAX; self.atoms.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let atoms = keep.iter().map(|&i| self.atoms[i].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .filter(|b| remap[b.a] != usize::MAX && remap[b.b] != usize::MAX)
            .map(|b| Bond {
                a: remap[b.a],
                b: remap[b.b],
                ..b.clone()
            })
            .collect();
        Molecule::new(atoms, bonds)
    }

    /// Split into one molecule per connected component, in component id order.
    pub fn split_components(&self) -> Vec<Molecule> {
        (0..self.num_components)
            .map(|c| {
                self.subgraph(&self.component_atoms(c))
                    .expect("component of a valid molecule is valid")
            })
            .collect()
    }

    /// Disjoint union; atom indices of `other` are shifted by `self.num_atoms()`.
    pub fn combine(&self, other: &Molecule) -> Result<Molecule, MolError> {
        let offset = self.atoms.len();
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        let mut bonds = self.bonds.clone();
        bonds.extend(other.bonds.iter().map(|b| Bond {
            a: b.a + offset,
            b: b.b + offset,
            ..b.clone()
        }));
        Molecule::new(atoms, bonds)
    }

    /// Copy with every atom map removed.
    pub fn without_maps(&self) -> Molecule {
        let mut m = self.clone();
        for a in &mut m.atoms {
            a.atom_map = None;
        }
        m
    }

    /// Consume into raw parts for editing; rebuild with [`Molecule::new`].
    pub fn into_parts(self) -> (Vec<Atom>, Vec<Bond>) {
        (self.atoms, self.bonds)
    }

    /// Same graph with atoms reordered so that new atom `i` is old atom
    /// `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Molecule {
        let mut inverse = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        let atoms = order.iter().map(|&i| self.atoms[i].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                a: inverse[b.a],
                b: inverse[b.b],
                ..b.clone()
            })
            .collect();
        Molecule::new(atoms, bonds).expect("permutation preserves validity")
    }
}

impl fmt::Display for Molecule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::write_smiles(self, true, true))
    }
}

fn build_adjacency(n: usize, bonds: &[Bond]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); n];
    for (i, b) in bonds.iter().enumerate() {
        adj[b.a].push((b.b, i));
        adj[b.b].push((b.a, i));
    }
    adj
}

fn usage_of(adj: &[(usize, usize)], bonds: &[Bond]) -> ValenceUse {
    let mut u = ValenceUse::default();
    for &(_, b) in adj {
        match bonds[b].order {
            BondOrder::Aromatic => u.aromatic += 1,
            o => u.localized += o.units(),
        }
    }
    u
}

/// A bond is in a ring iff it is not a bridge.
fn mark_ring_bonds(adj: &[Vec<(usize, usize)>], bonds: &mut [Bond]) {
    let n = adj.len();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut is_bridge = vec![false; bonds.len()];
    let mut timer = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // iterative DFS: (atom, parent bond, next neighbor position)
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&(u, parent_bond, pos)) = stack.last() {
            if pos < adj[u].len() {
                let (v, b) = adj[u][pos];
                stack.last_mut().unwrap().2 += 1;
                if b == parent_bond {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, b, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(p, _, _)) = stack.last() {
                    low[p] = low[p].min(low[u]);
                    if low[u] > disc[p] {
                        is_bridge[parent_bond] = true;
                    }
                }
            }
        }
    }
    for (b, bond) in bonds.iter_mut().enumerate() {
        bond.in_ring = !is_bridge[b];
    }
}

/// Six-membered simple cycles through ring bonds, as atom lists.
fn six_rings(adj: &[Vec<(usize, usize)>], bonds: &[Bond]) -> Vec<Vec<usize>> {
    let mut rings = Vec::new();
    let mut path = Vec::with_capacity(6);
    fn extend(
        adj: &[Vec<(usize, usize)>],
        bonds: &[Bond],
        start: usize,
        path: &mut Vec<usize>,
        rings: &mut Vec<Vec<usize>>,
    ) {
        let u = *path.last().unwrap();
        for &(v, b) in &adj[u] {
            if !bonds[b].in_ring {
                continue;
            }
            if path.len() == 6 {
                if v == start && path[1] < path[5] {
                    rings.push(path.clone());
                }
                continue;
            }
            if v <= start || path.contains(&v) {
                continue;
            }
            path.push(v);
            extend(adj, bonds, start, path, rings);
            path.pop();
        }
    }
    for start in 0..adj.len() {
        path.clear();
        path.push(start);
        extend(adj, bonds, start, &mut path, &mut rings);
    }
    rings
}

/// Converts six-membered rings of alternating single/double bonds (carbon or
/// nitrogen, no exocyclic double bonds) to aromatic form. Already aromatic
/// bonds match either phase, so fused kekule systems convert ring by ring.
fn perceive_kekule_rings(adj: &[Vec<(usize, usize)>], atoms: &mut [Atom], bonds: &mut [Bond]) {
    if !bonds
        .iter()
        .any(|b| b.in_ring && b.order == BondOrder::Double)
    {
        return;
    }
    let rings = six_rings(adj, bonds);
    let ring_bond = |a: usize, b: usize| {
        adj[a]
            .iter()
            .find(|(n, _)| *n == b)
            .map(|(_, bi)| *bi)
            .unwrap()
    };
    let mut changed = true;
    while changed {
        changed = false;
        for ring in &rings {
            let ring_bonds: Vec<usize> = (0..6).map(|i| ring_bond(ring[i], ring[(i + 1) % 6])).collect();
            if ring_bonds.iter().all(|&b| bonds[b].order == BondOrder::Aromatic) {
                continue;
            }
            let atoms_ok = ring.iter().all(|&a| {
                let atom = &atoms[a];
                matches!(atom.element.symbol(), "C" | "N")
                    && atom.formal_charge == 0
                    && adj[a].iter().all(|&(_, b)| {
                        ring_bonds.contains(&b)
                            || !matches!(bonds[b].order, BondOrder::Double | BondOrder::Triple)
                    })
            });
            if !atoms_ok {
                continue;
            }
            let alternates = |phase: usize| {
                ring_bonds.iter().enumerate().all(|(i, &b)| {
                    let want = if i % 2 == phase {
                        BondOrder::Double
                    } else {
                        BondOrder::Single
                    };
                    bonds[b].order == want || bonds[b].order == BondOrder::Aromatic
                })
            };
            if alternates(0) || alternates(1) {
                for &b in &ring_bonds {
                    bonds[b].order = BondOrder::Aromatic;
                }
                for &a in ring {
                    atoms[a].aromatic = true;
                }
                changed = true;
            }
        }
    }
}

/// Aromatic bonds are conjugated; a single bond is conjugated when both ends
/// carry another multiple or aromatic bond; a multiple bond is conjugated when
/// it touches a conjugated single bond.
fn mark_conjugation(adj: &[Vec<(usize, usize)>], bonds: &mut [Bond]) {
    let unsaturated_except = |atom: usize, skip: usize, bonds: &[Bond]| {
        adj[atom]
            .iter()
            .any(|&(_, b)| b != skip && bonds[b].order != BondOrder::Single)
    };
    let mut single_conj = vec![false; bonds.len()];
    for (i, b) in bonds.iter().enumerate() {
        if b.order == BondOrder::Single {
            single_conj[i] =
                unsaturated_except(b.a, i, bonds) && unsaturated_except(b.b, i, bonds);
        }
    }
    let flags: Vec<bool> = bonds
        .iter()
        .enumerate()
        .map(|(i, b)| match b.order {
            BondOrder::Aromatic => true,
            BondOrder::Single => single_conj[i],
            _ => [b.a, b.b]
                .iter()
                .any(|&x| adj[x].iter().any(|&(_, o)| single_conj[o] || (o != i && bonds[o].order == BondOrder::Aromatic))),
        })
        .collect();
    for (b, f) in bonds.iter_mut().zip(flags) {
        b.conjugated = f;
    }
}

fn components(adj: &[Vec<(usize, usize)>]) -> (Vec<usize>, usize) {
    let n = adj.len();
    let mut comp = vec![usize::MAX; n];
    let mut count = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = count;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adj[u] {
                if comp[v] == usize::MAX {
                    comp[v] = count;
                    queue.push_back(v);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}
