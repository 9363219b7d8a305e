//! SMILES reading and writing.
//!
//! Supported input: organic-subset and bracket atoms, aromatic lowercase,
//! branches, ring closures (`0`-`9`, `%nn`), bond symbols `-=#:/\`, dots,
//! charges, atom maps, and tetrahedral `@`/`@@` tags, which are stored
//! verbatim. Isotopes are read and dropped.
//!
//! One extension: a `*` just before the closing bracket (`[Cl*]`, `[CH2:4*]`)
//! sets the atom's attachment mark. Marked atoms are always written in
//! brackets with their explicit hydrogen count only.

use std::collections::BTreeMap;

use super::canon::canonical_rank;
use super::element::Element;
use super::mol::{Atom, Bond, BondOrder, BondStereo, Chirality, Molecule};
use super::valence;
use super::{MolError, SmilesError, SmilesErrorKind};

#[derive(Debug, Clone, Copy, PartialEq)]
enum BondSym {
    Single,
    Double,
    Triple,
    Aromatic,
    Up,
    Down,
}

impl BondSym {
    fn from_byte(c: u8) -> Option<BondSym> {
        Some(match c {
            b'-' => BondSym::Single,
            b'=' => BondSym::Double,
            b'#' => BondSym::Triple,
            b':' => BondSym::Aromatic,
            b'/' => BondSym::Up,
            b'\\' => BondSym::Down,
            _ => return None,
        })
    }

    fn order(self) -> BondOrder {
        match self {
            BondSym::Single | BondSym::Up | BondSym::Down => BondOrder::Single,
            BondSym::Double => BondOrder::Double,
            BondSym::Triple => BondOrder::Triple,
            BondSym::Aromatic => BondOrder::Aromatic,
        }
    }

    fn stereo(self) -> Option<BondStereo> {
        match self {
            BondSym::Up => Some(BondStereo::Up),
            BondSym::Down => Some(BondStereo::Down),
            _ => None,
        }
    }
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    atom_offsets: Vec<usize>,
    bonds: Vec<Bond>,
    /// Bonds whose aromatic order was inferred rather than written.
    inferred_aromatic: Vec<bool>,
}

impl<'a> Parser<'a> {
    fn err(&self, offset: usize, kind: SmilesErrorKind) -> SmilesError {
        SmilesError { offset, kind }
    }

    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn add_bond(&mut self, a: usize, b: usize, sym: Option<BondSym>, offset: usize) -> Result<(), SmilesError> {
        if a == b || self.bonds.iter().any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a)) {
            return Err(self.err(offset, SmilesErrorKind::DuplicateBond));
        }
        let (order, inferred) = match sym {
            Some(s) => (s.order(), false),
            None if self.atoms[a].aromatic && self.atoms[b].aromatic => (BondOrder::Aromatic, true),
            None => (BondOrder::Single, false),
        };
        let mut bond = Bond::new(a, b, order);
        bond.stereo = sym.and_then(BondSym::stereo);
        self.bonds.push(bond);
        self.inferred_aromatic.push(inferred);
        Ok(())
    }

    fn parse(&mut self) -> Result<(), SmilesError> {
        if self.text.is_empty() {
            return Err(self.err(0, SmilesErrorKind::Empty));
        }
        let mut prev: Option<usize> = None;
        let mut branch_stack: Vec<(Option<usize>, usize)> = Vec::new();
        let mut pending: Option<(BondSym, usize)> = None;
        let mut rings: BTreeMap<u32, (usize, Option<BondSym>, usize)> = BTreeMap::new();

        while let Some(c) = self.peek() {
            let offset = self.pos;
            match c {
                b'(' => {
                    if prev.is_none() || pending.is_some() {
                        return Err(self.err(offset, SmilesErrorKind::Unexpected(c as char)));
                    }
                    branch_stack.push((prev, offset));
                    self.pos += 1;
                }
                b')' => {
                    let Some((p, _)) = branch_stack.pop() else {
                        return Err(self.err(offset, SmilesErrorKind::UnbalancedParen));
                    };
                    if pending.is_some() {
                        return Err(self.err(offset, SmilesErrorKind::DanglingBond));
                    }
                    prev = p;
                    self.pos += 1;
                }
                b'.' => {
                    if pending.is_some() || prev.is_none() {
                        return Err(self.err(offset, SmilesErrorKind::Unexpected('.')));
                    }
                    if !branch_stack.is_empty() {
                        return Err(self.err(offset, SmilesErrorKind::UnbalancedParen));
                    }
                    prev = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if pending.is_some() || prev.is_none() {
                        return Err(self.err(offset, SmilesErrorKind::DanglingBond));
                    }
                    pending = Some((BondSym::from_byte(c).unwrap(), offset));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let Some(cur) = prev else {
                        return Err(self.err(offset, SmilesErrorKind::Unexpected(c as char)));
                    };
                    let number = if c == b'%' {
                        let digits = self.text.get(self.pos + 1..self.pos + 3);
                        match digits {
                            Some(d) if d.iter().all(u8::is_ascii_digit) => {
                                self.pos += 3;
                                ((d[0] - b'0') * 10 + (d[1] - b'0')) as u32
                            }
                            _ => return Err(self.err(offset, SmilesErrorKind::Unexpected('%'))),
                        }
                    } else {
                        self.pos += 1;
                        (c - b'0') as u32
                    };
                    let sym = pending.take().map(|(s, _)| s);
                    if let Some((other, other_sym, _)) = rings.remove(&number) {
                        let sym = match (sym, other_sym) {
                            (Some(a), Some(b)) if a.order() != b.order() => {
                                return Err(self.err(offset, SmilesErrorKind::ConflictingRingBond(number)))
                            }
                            // a direction marker written at the opening side points
                            // from the opening atom, so flip it onto this side
                            (None, Some(BondSym::Up)) => Some(BondSym::Down),
                            (None, Some(BondSym::Down)) => Some(BondSym::Up),
                            (a, b) => a.or(b),
                        };
                        self.add_bond(cur, other, sym, offset)?;
                    } else {
                        rings.insert(number, (cur, sym, offset));
                    }
                }
                _ => {
                    let idx = self.parse_atom()?;
                    if let Some(p) = prev {
                        let sym = pending.take().map(|(s, _)| s);
                        self.add_bond(p, idx, sym, offset)?;
                    } else if let Some((_, off)) = pending {
                        return Err(self.err(off, SmilesErrorKind::DanglingBond));
                    }
                    prev = Some(idx);
                }
            }
        }
        if let Some((_, off)) = pending {
            return Err(self.err(off, SmilesErrorKind::DanglingBond));
        }
        if let Some(&(_, off)) = branch_stack.last() {
            return Err(self.err(off, SmilesErrorKind::UnbalancedParen));
        }
        if let Some((&number, &(_, _, off))) = rings.iter().next() {
            return Err(self.err(off, SmilesErrorKind::UnmatchedRing(number)));
        }
        Ok(())
    }

    fn parse_atom(&mut self) -> Result<usize, SmilesError> {
        let offset = self.pos;
        let c = self.peek().unwrap();
        let mut atom = if c == b'[' {
            self.parse_bracket()?
        } else {
            let two = self.text.get(self.pos..self.pos + 2);
            let (symbol, aromatic, len) = match (c, two) {
                (b'C', Some(b"Cl")) => ("Cl", false, 2),
                (b'B', Some(b"Br")) => ("Br", false, 2),
                (b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I', _) => {
                    (std::str::from_utf8(&self.text[self.pos..self.pos + 1]).unwrap(), false, 1)
                }
                (b'b', _) => ("B", true, 1),
                (b'c', _) => ("C", true, 1),
                (b'n', _) => ("N", true, 1),
                (b'o', _) => ("O", true, 1),
                (b'p', _) => ("P", true, 1),
                (b's', _) => ("S", true, 1),
                _ => return Err(self.err(offset, SmilesErrorKind::Unexpected(c as char))),
            };
            self.pos += len;
            let mut atom = Atom::new(Element::from_symbol(symbol).unwrap());
            atom.aromatic = aromatic;
            atom
        };
        atom.implicit_h = 0;
        self.atoms.push(atom);
        self.atom_offsets.push(offset);
        Ok(self.atoms.len() - 1)
    }

    fn parse_bracket(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        self.pos += 1;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let sym_start = self.pos;
        let first = self
            .peek()
            .ok_or_else(|| self.err(open, SmilesErrorKind::UnclosedBracket))?;
        let (element, aromatic) = if first.is_ascii_uppercase() {
            let two = self
                .text
                .get(self.pos..self.pos + 2)
                .filter(|t| t[1].is_ascii_lowercase())
                .and_then(|t| std::str::from_utf8(t).ok())
                .and_then(Element::from_symbol);
            match two {
                Some(e) => {
                    self.pos += 2;
                    (e, false)
                }
                None => {
                    let one = std::str::from_utf8(&self.text[self.pos..self.pos + 1]).unwrap();
                    let e = Element::from_symbol(one)
                        .ok_or_else(|| self.unknown_element(sym_start))?;
                    self.pos += 1;
                    (e, false)
                }
            }
        } else if first.is_ascii_lowercase() {
            let rest = &self.text[self.pos..];
            let (sym, len) = if rest.starts_with(b"se") {
                ("Se", 2)
            } else if rest.starts_with(b"as") {
                ("As", 2)
            } else {
                match first {
                    b'b' => ("B", 1),
                    b'c' => ("C", 1),
                    b'n' => ("N", 1),
                    b'o' => ("O", 1),
                    b'p' => ("P", 1),
                    b's' => ("S", 1),
                    _ => return Err(self.unknown_element(sym_start)),
                }
            };
            self.pos += len;
            (Element::from_symbol(sym).unwrap(), true)
        } else {
            return Err(self.unknown_element(sym_start));
        };
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;

        if self.peek() == Some(b'@') {
            self.pos += 1;
            atom.stereo = Some(if self.peek() == Some(b'@') {
                self.pos += 1;
                Chirality::Clockwise
            } else {
                Chirality::Anticlockwise
            });
        }
        if self.peek() == Some(b'H') {
            self.pos += 1;
            atom.explicit_h = match self.peek() {
                Some(d @ b'0'..=b'9') => {
                    self.pos += 1;
                    d - b'0'
                }
                _ => 1,
            };
        }
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let unit: i8 = if sign == b'+' { 1 } else { -1 };
            let mut charge = unit;
            if let Some(d @ b'0'..=b'9') = self.peek() {
                self.pos += 1;
                charge = unit * (d - b'0') as i8;
            } else {
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
            atom.formal_charge = charge;
        }
        if self.peek() == Some(b':') {
            self.pos += 1;
            let start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            let digits = std::str::from_utf8(&self.text[start..self.pos]).unwrap();
            let map: u32 = digits
                .parse()
                .map_err(|_| self.err(start, SmilesErrorKind::Unexpected(':')))?;
            if map > 0 {
                atom.atom_map = Some(map);
            }
        }
        if self.peek() == Some(b'*') {
            self.pos += 1;
            atom.attach_mark = true;
        }
        match self.peek() {
            Some(b']') => {
                self.pos += 1;
                Ok(atom)
            }
            Some(c) => Err(self.err(self.pos, SmilesErrorKind::Unexpected(c as char))),
            None => Err(self.err(open, SmilesErrorKind::UnclosedBracket)),
        }
    }

    fn unknown_element(&self, at: usize) -> SmilesError {
        let end = self.text[at..]
            .iter()
            .position(|c| !c.is_ascii_alphabetic() && *c != b'*')
            .map_or(self.text.len(), |p| at + p.max(1));
        let sym = String::from_utf8_lossy(&self.text[at..end]).into_owned();
        self.err(at, SmilesErrorKind::UnknownElement(sym))
    }
}

/// Parse a SMILES string into a [`Molecule`].
pub fn parse_smiles(text: &str) -> Result<Molecule, SmilesError> {
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        atom_offsets: Vec::new(),
        bonds: Vec::new(),
        inferred_aromatic: Vec::new(),
    };
    p.parse()?;
    let Parser {
        atoms,
        atom_offsets,
        mut bonds,
        inferred_aromatic,
        ..
    } = p;
    let maps: Vec<Option<u32>> = atoms.iter().map(|a| a.atom_map).collect();
    let to_smiles_err = |e: MolError| match e {
        MolError::Valence { atom, element, used, max } => SmilesError {
            offset: atom_offsets[atom],
            kind: SmilesErrorKind::Valence(format!("{element} uses {used} > {max}")),
        },
        MolError::DuplicateMap(m) => SmilesError {
            offset: atom_offsets
                .iter()
                .zip(&maps)
                .find(|(_, a)| **a == Some(m))
                .map_or(0, |(o, _)| *o),
            kind: SmilesErrorKind::DuplicateMap(m),
        },
        other => SmilesError {
            offset: 0,
            kind: SmilesErrorKind::Graph(other.to_string()),
        },
    };
    if inferred_aromatic.iter().any(|&x| x) {
        // aromatic atoms joined outside a ring (biaryls) are single-bonded
        let probe = Molecule::new(atoms.clone(), bonds.clone());
        if let Ok(probe) = probe {
            for (i, bond) in bonds.iter_mut().enumerate() {
                if inferred_aromatic[i] && !probe.bonds()[i].in_ring {
                    bond.order = BondOrder::Single;
                }
            }
        }
    }
    Molecule::new(atoms, bonds).map_err(to_smiles_err)
}

/// Serialize a molecule.
///
/// With `canonical`, atoms are visited in canonical-rank order and components
/// are sorted by their strings, so isomorphic inputs give identical output.
/// Otherwise atoms are visited in index order. Atom maps are written only
/// when `include_maps` is set.
pub fn write_smiles(mol: &Molecule, canonical: bool, include_maps: bool) -> String {
    if mol.num_atoms() == 0 {
        return String::new();
    }
    if canonical {
        let mut parts: Vec<String> = mol
            .split_components()
            .iter()
            .map(|comp| {
                let rank = canonical_rank(comp, include_maps).rank;
                write_component(comp, &(0..comp.num_atoms()).collect::<Vec<_>>(), &rank, include_maps)
            })
            .collect();
        parts.sort();
        parts.join(".")
    } else {
        let rank: Vec<usize> = (0..mol.num_atoms()).collect();
        (0..mol.num_components())
            .map(|c| write_component(mol, &mol.component_atoms(c), &rank, include_maps))
            .collect::<Vec<_>>()
            .join(".")
    }
}

fn write_component(mol: &Molecule, atoms: &[usize], rank: &[usize], include_maps: bool) -> String {
    let start = *atoms.iter().min_by_key(|&&a| rank[a]).unwrap();
    let sorted_neighbors = |u: usize| {
        let mut v: Vec<(usize, usize)> = mol.neighbors(u).to_vec();
        v.sort_by_key(|&(n, _)| rank[n]);
        v
    };

    // pass 1: spanning tree and ring-closure bonds
    let n = mol.num_atoms();
    let mut visited = vec![false; n];
    let mut bond_used = vec![false; mol.num_bonds()];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut closures: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut stack = vec![(start, 0usize)];
    visited[start] = true;
    let mut order = vec![start];
    let mut neighbor_lists: Vec<Option<Vec<(usize, usize)>>> = vec![None; n];
    while let Some(&(u, pos)) = stack.last() {
        let list = neighbor_lists[u].get_or_insert_with(|| sorted_neighbors(u)).clone();
        if pos >= list.len() {
            stack.pop();
            continue;
        }
        stack.last_mut().unwrap().1 += 1;
        let (v, b) = list[pos];
        if bond_used[b] {
            continue;
        }
        bond_used[b] = true;
        if visited[v] {
            // v is an ancestor: ring opens at v, closes at u
            closures[v].push((u, b));
            closures[u].push((v, b));
        } else {
            visited[v] = true;
            order.push(v);
            children[u].push((v, b));
            stack.push((v, 0));
        }
    }
    let position: Vec<usize> = {
        let mut p = vec![usize::MAX; n];
        for (i, &a) in order.iter().enumerate() {
            p[a] = i;
        }
        p
    };
    for list in &mut closures {
        list.sort_by_key(|&(partner, _)| rank[partner]);
    }

    // pass 2: emit
    let mut out = String::new();
    let mut digits: Vec<Option<usize>> = vec![None; mol.num_bonds()];
    let mut in_use = [false; 100];
    emit(
        mol,
        start,
        None,
        &children,
        &closures,
        &position,
        &mut digits,
        &mut in_use,
        include_maps,
        &mut out,
    );
    out
}

#[allow(clippy::too_many_arguments)]
fn emit(
    mol: &Molecule,
    u: usize,
    via: Option<(usize, usize)>,
    children: &[Vec<(usize, usize)>],
    closures: &[Vec<(usize, usize)>],
    position: &[usize],
    digits: &mut [Option<usize>],
    in_use: &mut [bool; 100],
    include_maps: bool,
    out: &mut String,
) {
    if let Some((from, b)) = via {
        out.push_str(&bond_symbol(mol, b, from));
    }
    write_atom(mol, u, include_maps, out);
    for &(partner, b) in &closures[u] {
        if position[partner] < position[u] {
            // closing side
            let d = digits[b].take().expect("ring opened before closing");
            in_use[d] = false;
            out.push_str(&bond_symbol(mol, b, u));
            push_ring_digit(d, out);
        } else {
            let d = (1..100).find(|&d| !in_use[d]).expect("fewer than 100 open rings");
            in_use[d] = true;
            digits[b] = Some(d);
            push_ring_digit(d, out);
        }
    }
    let kids = &children[u];
    for (i, &(v, b)) in kids.iter().enumerate() {
        let last = i + 1 == kids.len();
        if !last {
            out.push('(');
        }
        emit(mol, v, Some((u, b)), children, closures, position, digits, in_use, include_maps, out);
        if !last {
            out.push(')');
        }
    }
}

fn push_ring_digit(d: usize, out: &mut String) {
    if d < 10 {
        out.push(char::from(b'0' + d as u8));
    } else {
        out.push('%');
        out.push_str(&format!("{d:02}"));
    }
}

fn bond_symbol(mol: &Molecule, b: usize, from: usize) -> String {
    let bond = &mol.bonds()[b];
    let (x, y) = (mol.atom(bond.a), mol.atom(bond.b));
    match bond.order {
        BondOrder::Single => match bond.stereo {
            Some(s) => {
                let s = if from == bond.a { s } else { s.flipped() };
                s.as_char().to_string()
            }
            None if x.aromatic && y.aromatic => "-".into(),
            None => String::new(),
        },
        BondOrder::Double => "=".into(),
        BondOrder::Triple => "#".into(),
        BondOrder::Aromatic => {
            if x.aromatic && y.aromatic && bond.in_ring {
                String::new()
            } else {
                ":".into()
            }
        }
    }
}

fn write_atom(mol: &Molecule, i: usize, include_maps: bool, out: &mut String) {
    let atom = mol.atom(i);
    let map = atom.atom_map.filter(|_| include_maps);
    let symbol = if atom.aromatic && atom.element.can_be_aromatic() {
        atom.element.symbol().to_ascii_lowercase()
    } else {
        atom.element.symbol().to_string()
    };
    let unbracketed_h = {
        let mut bare = atom.clone();
        bare.explicit_h = 0;
        valence::implicit_hydrogens(&bare, mol.valence_use(i))
    };
    let organic = atom.element.in_organic_subset()
        && (!atom.aromatic || matches!(symbol.as_str(), "b" | "c" | "n" | "o" | "p" | "s"));
    let needs_bracket = !organic
        || atom.formal_charge != 0
        || map.is_some()
        || atom.attach_mark
        || atom.stereo.is_some()
        || atom.total_h() != unbracketed_h;
    if !needs_bracket {
        out.push_str(&symbol);
        return;
    }
    out.push('[');
    out.push_str(&symbol);
    if let Some(s) = atom.stereo {
        out.push_str(s.as_str());
    }
    let h = if atom.attach_mark {
        atom.explicit_h
    } else {
        atom.total_h()
    };
    match h {
        0 => {}
        1 => out.push('H'),
        n => {
            out.push('H');
            out.push_str(&n.to_string());
        }
    }
    match atom.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => out.push_str(&format!("+{c}")),
        c => out.push_str(&format!("-{}", -c)),
    }
    if let Some(m) = map {
        out.push(':');
        out.push_str(&m.to_string());
    }
    if atom.attach_mark {
        out.push('*');
    }
    out.push(']');
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h_counts(m: &Molecule) -> Vec<u8> {
        m.atoms().iter().map(|a| a.total_h()).collect()
    }

    #[test]
    fn ethanol() {
        let m = parse_smiles("CCO").unwrap();
        assert_eq!(m.num_atoms(), 3);
        assert_eq!(m.num_bonds(), 2);
        assert!(m.bonds().iter().all(|b| b.order == BondOrder::Single));
        assert_eq!(h_counts(&m), vec![3, 2, 1]);
        let syms: Vec<&str> = m.atoms().iter().map(|a| a.element.symbol()).collect();
        assert_eq!(syms, vec!["C", "C", "O"]);
    }

    #[test]
    fn benzene() {
        let m = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(m.num_atoms(), 6);
        assert!(m.atoms().iter().all(|a| a.aromatic && a.implicit_h == 1));
        assert_eq!(m.num_bonds(), 6);
        assert!(m.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
    }

    #[test]
    fn bracket_maps() {
        let m = parse_smiles("[CH3:1][OH:2]").unwrap();
        let maps: Vec<Option<u32>> = m.atoms().iter().map(|a| a.atom_map).collect();
        assert_eq!(maps, vec![Some(1), Some(2)]);
        let eh: Vec<u8> = m.atoms().iter().map(|a| a.explicit_h).collect();
        assert_eq!(eh, vec![3, 1]);
        assert_eq!(h_counts(&m), vec![3, 1]);
    }

    #[test]
    fn charges_isotopes_stereo() {
        let m = parse_smiles("[13CH3][N+](C)(C)C.[Cl-]").unwrap();
        assert_eq!(m.atom(1).formal_charge, 1);
        assert_eq!(m.atom(5).formal_charge, -1);
        assert_eq!(m.num_components(), 2);
        let s = parse_smiles("N[C@@H](C)C(=O)O").unwrap();
        assert_eq!(s.atom(1).stereo, Some(Chirality::Clockwise));
        let f = parse_smiles("F/C=C/F").unwrap();
        assert_eq!(f.bonds()[0].stereo, Some(BondStereo::Up));
        let c = parse_smiles("[O--]").unwrap();
        assert_eq!(c.atom(0).formal_charge, -2);
    }

    #[test]
    fn ring_closures() {
        let m = parse_smiles("C1CC%10CC1CC%10").unwrap();
        assert_eq!(m.num_bonds(), 8);
        let d = parse_smiles("C=1CCC1").unwrap();
        assert_eq!(d.bonds().iter().filter(|b| b.order == BondOrder::Double).count(), 1);
    }

    #[test]
    fn biaryl_bond_is_single() {
        let m = parse_smiles("c1ccccc1c1ccccc1").unwrap();
        let singles = m.bonds().iter().filter(|b| b.order == BondOrder::Single).count();
        assert_eq!(singles, 1);
        let out = write_smiles(&m, true, false);
        assert!(out.contains('-'), "{out}");
        assert!(super::super::is_isomorphic(&m, &parse_smiles(&out).unwrap(), true));
    }

    #[test]
    fn errors_name_offsets() {
        let e = parse_smiles("CC(C").unwrap_err();
        assert_eq!(e.kind, SmilesErrorKind::UnbalancedParen);
        assert_eq!(e.offset, 2);
        let e = parse_smiles("CC)C").unwrap_err();
        assert_eq!(e.kind, SmilesErrorKind::UnbalancedParen);
        let e = parse_smiles("C1CC").unwrap_err();
        assert_eq!(e.kind, SmilesErrorKind::UnmatchedRing(1));
        assert_eq!(e.offset, 1);
        let e = parse_smiles("C[Xx]").unwrap_err();
        assert!(matches!(e.kind, SmilesErrorKind::UnknownElement(ref s) if s == "Xx"));
        assert_eq!(e.offset, 2);
        let e = parse_smiles("CC(C)(C)(C)(C)C").unwrap_err();
        assert!(matches!(e.kind, SmilesErrorKind::Valence(_)));
        assert_eq!(e.offset, 1);
        assert_eq!(parse_smiles("").unwrap_err().kind, SmilesErrorKind::Empty);
        assert!(parse_smiles("C=").is_err());
        assert!(parse_smiles("[CH3").is_err());
        assert!(parse_smiles("[C:1][C:1]").is_err());
    }

    #[test]
    fn attach_mark_round_trip() {
        let m = parse_smiles("[OH*]C").unwrap();
        assert!(m.atom(0).attach_mark);
        assert_eq!(m.atom(0).explicit_h, 1);
        let s = write_smiles(&m, true, false);
        assert_eq!(s, "C[OH*]");
        let back = parse_smiles(&s).unwrap();
        assert_eq!(write_smiles(&back, true, false), s);
    }

    #[test]
    fn writer_basics() {
        assert_eq!(write_smiles(&parse_smiles("C").unwrap(), true, false), "C");
        let a = write_smiles(&parse_smiles("OCC").unwrap(), true, false);
        let b = write_smiles(&parse_smiles("CCO").unwrap(), true, false);
        assert_eq!(a, b);
        let two = write_smiles(&parse_smiles("OCC.c1ccccc1").unwrap(), true, false);
        let parts: Vec<&str> = two.split('.').collect();
        assert_eq!(parts.len(), 2);
        assert!(parts.contains(&b.as_str()));
        assert!(parts.contains(&"c1ccccc1"));
        assert_eq!(
            write_smiles(&parse_smiles("[CH3:1][OH:2]").unwrap(), false, true),
            "[CH3:1][OH:2]"
        );
        assert_eq!(write_smiles(&parse_smiles("[CH3:1][OH:2]").unwrap(), false, false), "CO");
    }

    #[test]
    fn kekule_and_aromatic_agree() {
        let a = write_smiles(&parse_smiles("C1=CC=CC=C1").unwrap(), true, false);
        let b = write_smiles(&parse_smiles("c1ccccc1").unwrap(), true, false);
        assert_eq!(a, b);
        let n1 = write_smiles(&parse_smiles("C1=CC=C2C=CC=CC2=C1").unwrap(), true, false);
        let n2 = write_smiles(&parse_smiles("c1ccc2ccccc2c1").unwrap(), true, false);
        assert_eq!(n1, n2);
    }
}
