use std::collections::HashSet;

use crate::molgraph::{canonical_rank, canonical_smiles, parse_smiles, BondOrder, Molecule, SmilesError};

use super::ReactionError;

/// Fragment a synthon gains to become its reactant.
///
/// Attachment atoms carry the attach mark and their full hydrogen count from
/// the reactant as explicit hydrogens, so their free valence is exactly the
/// room the removed bonds left. Atom maps are stripped.
#[derive(Debug, Clone, PartialEq)]
pub struct LeavingGroup {
    pub graph: Molecule,
    /// Marked atoms ordered by canonical rank.
    pub attach_atoms: Vec<usize>,
    /// Canonical SMILES with attachment atoms written as `[..*]`.
    pub canonical_key: String,
}

impl LeavingGroup {
    pub fn from_graph(graph: Molecule) -> LeavingGroup {
        let graph = graph.without_maps();
        let rank = canonical_rank(&graph, false).rank;
        let mut attach_atoms: Vec<usize> = (0..graph.num_atoms())
            .filter(|&i| graph.atom(i).attach_mark)
            .collect();
        attach_atoms.sort_by_key(|&i| rank[i]);
        let canonical_key = canonical_smiles(&graph, false);
        LeavingGroup {
            graph,
            attach_atoms,
            canonical_key,
        }
    }

    pub fn from_key(key: &str) -> Result<LeavingGroup, SmilesError> {
        Ok(LeavingGroup::from_graph(parse_smiles(key)?))
    }
}

/// One bond between a leaving group and its synthon, as seen in the reactant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attachment {
    /// Position in [`LeavingGroup::attach_atoms`].
    pub position: usize,
    pub synthon_map: u32,
    pub order: BondOrder,
}

/// Pair each synthon component with the reactant component sharing the most
/// atom maps. Returns `(synthon component, reactant component)` in synthon
/// component order.
pub fn align_components(
    synthons: &Molecule,
    reactants: &Molecule,
) -> Result<Vec<(usize, usize)>, ReactionError> {
    let (ns, nr) = (synthons.num_components(), reactants.num_components());
    if ns != nr {
        return Err(ReactionError::ComponentCountMismatch(ns, nr));
    }
    let rmap = reactants.map_index();
    let mut used = vec![false; nr];
    let mut pairs = Vec::with_capacity(ns);
    for c in 0..ns {
        let atoms = synthons.component_atoms(c);
        let mut overlap = vec![0usize; nr];
        for &i in &atoms {
            if let Some(&r) = synthons.atom(i).atom_map.and_then(|m| rmap.get(&m)) {
                overlap[reactants.component_ids()[r]] += 1;
            }
        }
        let best = *overlap.iter().max().unwrap_or(&0);
        let winners: Vec<usize> = (0..nr).filter(|&r| overlap[r] == best).collect();
        if best != atoms.len() || winners.len() != 1 || used[winners[0]] {
            return Err(ReactionError::AmbiguousAlignment(c));
        }
        used[winners[0]] = true;
        pairs.push((c, winners[0]));
    }
    Ok(pairs)
}

/// Completion order of synthon components: larger first, ties broken by
/// canonical string.
pub fn order_components(synthons: &Molecule) -> Vec<usize> {
    let keys: Vec<(usize, String)> = synthons
        .split_components()
        .iter()
        .map(|m| (m.num_atoms(), canonical_smiles(m, false)))
        .collect();
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[b].0.cmp(&keys[a].0).then_with(|| keys[a].1.cmp(&keys[b].1)));
    order
}

/// Reactant atoms missing from the synthon, as a leaving group together with
/// the bonds that tie it to the synthon. `None` means nothing is added.
pub fn extract_leaving_group(
    synthon: &Molecule,
    reactant: &Molecule,
) -> Result<Option<(LeavingGroup, Vec<Attachment>)>, ReactionError> {
    let kept: HashSet<u32> = synthon.atoms().iter().filter_map(|a| a.atom_map).collect();
    let in_synthon: Vec<bool> = reactant
        .atoms()
        .iter()
        .map(|a| a.atom_map.is_some_and(|m| kept.contains(&m)))
        .collect();
    let group: Vec<usize> = (0..reactant.num_atoms()).filter(|&i| !in_synthon[i]).collect();
    if group.is_empty() {
        return Ok(None);
    }
    let fragment = reactant.subgraph(&group)?;
    let (mut atoms, bonds) = fragment.into_parts();
    let mut raw_links = Vec::new();
    for (local, &r) in group.iter().enumerate() {
        let links: Vec<(u32, BondOrder)> = reactant
            .neighbors(r)
            .iter()
            .filter(|&&(v, _)| in_synthon[v])
            .map(|&(v, b)| (reactant.atom(v).atom_map.unwrap(), reactant.bonds()[b].order))
            .collect();
        if links.is_empty() {
            continue;
        }
        let atom = &mut atoms[local];
        atom.explicit_h = reactant.atom(r).total_h();
        atom.attach_mark = true;
        atom.stereo = None;
        raw_links.push((local, links));
    }
    let lg = LeavingGroup::from_graph(Molecule::new(atoms, bonds)?);
    let mut attachments = Vec::new();
    for (local, links) in raw_links {
        let position = lg.attach_atoms.iter().position(|&a| a == local).unwrap();
        for (synthon_map, order) in links {
            attachments.push(Attachment {
                position,
                synthon_map,
                order,
            });
        }
    }
    attachments.sort_by_key(|a| (a.position, a.synthon_map));
    Ok(Some((lg, attachments)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reaction::{apply_edits, extract_edits, parse_reaction};

    const ESTER: &str = "[CH3:1][C:2](=[O:3])[Cl:7].[OH:4][CH2:5][CH3:6]>>[CH3:1][C:2](=[O:3])[O:4][CH2:5][CH3:6]";

    fn synthons_of(line: &str) -> (Molecule, Molecule) {
        let pair = parse_reaction(line).unwrap();
        let s = apply_edits(&pair.product, &extract_edits(&pair).unwrap()).unwrap();
        (s, pair.reactants)
    }

    #[test]
    fn ester_alignment_and_groups() {
        let (s, r) = synthons_of(ESTER);
        let pairs = align_components(&s, &r).unwrap();
        assert_eq!(pairs.len(), 2);
        let sc = s.split_components();
        let rc = r.split_components();
        let mut keys = Vec::new();
        for (c, rcomp) in pairs {
            let got = extract_leaving_group(&sc[c], &rc[rcomp]).unwrap();
            keys.push(got.map(|(lg, att)| {
                assert_eq!(att.len(), 1);
                assert_eq!(att[0].synthon_map, 2);
                lg.canonical_key
            }));
        }
        keys.sort();
        assert_eq!(keys, vec![None, Some("[Cl*]".to_string())]);
    }

    #[test]
    fn acetate_tail_is_four_atoms() {
        let line = "[CH3:1][CH2:2]OC(C)=O>>[CH3:1][CH3:2]";
        let (s, r) = synthons_of(line);
        let (lg, att) = extract_leaving_group(&s, &r).unwrap().unwrap();
        assert_eq!(lg.graph.num_atoms(), 4);
        assert_eq!(lg.attach_atoms.len(), 1);
        assert_eq!(att[0].synthon_map, 2);
        assert_eq!(lg.canonical_key, "CC(=O)[O*]");
    }

    #[test]
    fn key_round_trip() {
        let lg = LeavingGroup::from_key("CC(C)(C)OC(=O)[O*]").unwrap();
        let again = LeavingGroup::from_key(&lg.canonical_key).unwrap();
        assert_eq!(again.canonical_key, lg.canonical_key);
        assert_eq!(again.attach_atoms.len(), 1);
    }

    #[test]
    fn mismatched_components() {
        let (s, _) = synthons_of(ESTER);
        let r = parse_smiles("[CH3:1][C:2](=[O:3])[O:4][CH2:5][CH3:6]").unwrap();
        assert!(matches!(
            align_components(&s, &r),
            Err(ReactionError::ComponentCountMismatch(2, 1))
        ));
    }

    #[test]
    fn component_order_is_by_size() {
        let (s, _) = synthons_of(ESTER);
        let order = order_components(&s);
        let sizes: Vec<usize> = order.iter().map(|&c| s.component_atoms(c).len()).collect();
        assert_eq!(sizes, vec![3, 3]);
        let m = parse_smiles("C.CCC.CC").unwrap();
        assert_eq!(order_components(&m), vec![1, 2, 0]);
    }
}
