use std::collections::BTreeMap;

use thiserror::Error;

use crate::molgraph::{canonical_rank, Bond, BondOrder, MolError, Molecule};

use super::LeavingGroup;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttachError {
    #[error("synthon has no attachment site for group '{0}'")]
    NoSite(String),
    #[error("no free valence to attach position {position} of group '{key}'")]
    NoValence { key: String, position: usize },
    #[error(transparent)]
    Graph(#[from] MolError),
}

/// Bond orders for groups whose attachment the default rule gets wrong,
/// keyed by canonical key with one order per attachment position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttachTable(pub BTreeMap<String, Vec<BondOrder>>);

impl AttachTable {
    pub fn get(&self, key: &str) -> Option<&[BondOrder]> {
        self.0.get(key).map(Vec::as_slice)
    }
}

/// Marked synthon atoms ordered by canonical rank (maps ignored).
pub fn attach_sites(synthon: &Molecule) -> Vec<usize> {
    let rank = canonical_rank(synthon, false).rank;
    let mut sites: Vec<usize> = (0..synthon.num_atoms())
        .filter(|&i| synthon.atom(i).attach_mark)
        .collect();
    sites.sort_by_key(|&i| rank[i]);
    sites
}

/// Bond a leaving group onto a marked synthon, or with `None` just clear the
/// marks.
///
/// Attachment position `k` bonds to the `k`-th site, or to the first site
/// when there are fewer sites. The bond order comes from the table when the
/// group is listed there; otherwise it is the smaller of the group atom's
/// free valence and the site's replaceable hydrogens. Marks are cleared and
/// hydrogens refilled on the result.
pub fn attach_leaving_group(
    synthon: &Molecule,
    group: Option<&LeavingGroup>,
    table: &AttachTable,
) -> Result<Molecule, AttachError> {
    let sites = attach_sites(synthon);
    let offset = synthon.num_atoms();
    let mut links: Vec<(usize, usize, BondOrder)> = Vec::new();
    let combined = match group {
        None => synthon.clone(),
        Some(lg) => {
            let key = &lg.canonical_key;
            if sites.is_empty() {
                return Err(AttachError::NoSite(key.clone()));
            }
            let mut budget: Vec<u32> = (0..offset).map(|i| synthon.atom(i).total_h() as u32).collect();
            let fixed = table.get(key);
            for (k, &g) in lg.attach_atoms.iter().enumerate() {
                let site = sites.get(k).copied().unwrap_or(sites[0]);
                let room = lg.graph.free_valence(g).min(budget[site]);
                let order = match fixed.and_then(|f| f.get(k)) {
                    Some(&o) => o,
                    None => BondOrder::from_units(room.min(3)).ok_or_else(|| AttachError::NoValence {
                        key: key.clone(),
                        position: k,
                    })?,
                };
                budget[site] = budget[site].saturating_sub(order.units());
                links.push((site, offset + g, order));
            }
            synthon.combine(&lg.graph)?
        }
    };
    let (mut atoms, mut bonds) = combined.into_parts();
    for &(site, g, order) in &links {
        let s = &mut atoms[site];
        s.explicit_h = s.explicit_h.saturating_sub(order.units() as u8);
        bonds.push(Bond::new(site, g, order));
    }
    for atom in &mut atoms {
        atom.attach_mark = false;
    }
    Ok(Molecule::new(atoms, bonds)?)
}
