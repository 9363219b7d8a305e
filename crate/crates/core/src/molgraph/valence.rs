//! Valence model.
//!
//! Main-group elements get their valences from the column they occupy after
//! shifting by formal charge (N+ behaves like C, O- like F, B- like C). Sulfur,
//! selenium, phosphorus, arsenic and iodine additionally accept their
//! hypervalent states when uncharged. Elements outside the model (metals,
//! noble gases) never receive implicit hydrogens and are not checked.
//!
//! Aromatic atoms are counted without kekulization: each aromatic bond
//! contributes one unit, and one extra unit is assumed for the ring pi bond
//! when filling implicit hydrogens. Pyrrole-type atoms therefore need their
//! hydrogen written explicitly, as in ordinary SMILES.

use super::element::Element;
use super::mol::Atom;

/// Bond usage around one atom.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValenceUse {
    /// Sum of single/double/triple bond orders.
    pub localized: u32,
    /// Number of aromatic bonds.
    pub aromatic: u32,
}

impl ValenceUse {
    /// Valence consumed by bonds with aromatic bonds at one unit each.
    pub fn strict(&self) -> u32 {
        self.localized + self.aromatic
    }

    /// Valence consumed including the assumed pi contribution of an aromatic
    /// system.
    pub fn with_pi(&self) -> u32 {
        self.strict() + u32::from(self.aromatic > 0)
    }

    /// Bond order sum with aromatic bonds weighted 1.5.
    pub fn order_sum(&self) -> f64 {
        self.localized as f64 + 1.5 * self.aromatic as f64
    }
}

const V0: &[u32] = &[0];
const V1: &[u32] = &[1];
const V2: &[u32] = &[2];
const V3: &[u32] = &[3];
const V4: &[u32] = &[4];
const V135: &[u32] = &[1, 3, 5];
const V246: &[u32] = &[2, 4, 6];
const V35: &[u32] = &[3, 5];

/// Allowed valences in ascending order. Empty when the element is outside the
/// model.
pub fn allowed_valences(element: Element, charge: i8) -> &'static [u32] {
    let Some(group) = element.group() else {
        return &[];
    };
    if group == 1 {
        return if charge == 0 { V1 } else { V0 };
    }
    let z = element.atomic_number();
    let effective = group - charge as i32;
    match effective {
        13 => V3,
        14 => V4,
        15 if charge == 0 && matches!(z, 15 | 33) => V35,
        15 => V3,
        16 if charge == 0 && matches!(z, 16 | 34 | 52) => V246,
        16 => V2,
        17 if charge == 0 && z == 53 => V135,
        17 => V1,
        18 => V0,
        _ => &[],
    }
}

/// The valence an atom is filled to: the smallest allowed valence that covers
/// its current use. Aromatic atoms always use the lowest allowed valence.
pub fn target_valence(atom: &Atom, usage: ValenceUse) -> Option<u32> {
    let allowed = allowed_valences(atom.element, atom.formal_charge);
    if allowed.is_empty() {
        return None;
    }
    if atom.aromatic {
        return Some(allowed[0]);
    }
    let used = usage.strict() + atom.explicit_h as u32;
    allowed
        .iter()
        .copied()
        .find(|&v| v >= used)
        .or_else(|| allowed.last().copied())
}

/// Hydrogens added by the valence model on top of the explicit count.
pub fn implicit_hydrogens(atom: &Atom, usage: ValenceUse) -> u8 {
    let Some(target) = target_valence(atom, usage) else {
        return 0;
    };
    let used = if atom.aromatic {
        usage.with_pi()
    } else {
        usage.strict()
    } + atom.explicit_h as u32;
    target.saturating_sub(used) as u8
}

/// Largest valence the atom may reach, or `None` when unchecked.
pub fn max_valence(atom: &Atom) -> Option<u32> {
    allowed_valences(atom.element, atom.formal_charge)
        .last()
        .copied()
}

/// True when bonds plus explicit hydrogens stay within the maximum valence.
pub fn within_valence(atom: &Atom, usage: ValenceUse) -> bool {
    match max_valence(atom) {
        Some(max) => usage.strict() + atom.explicit_h as u32 <= max,
        None => true,
    }
}

/// Valence still available for new bonds: target valence minus bond use minus
/// explicit hydrogens. Implicit hydrogens count as replaceable; aromatic
/// atoms also reserve their pi unit.
pub fn free_valence(atom: &Atom, usage: ValenceUse) -> u32 {
    let Some(target) = target_valence(atom, usage) else {
        return 0;
    };
    let used = if atom.aromatic {
        usage.with_pi()
    } else {
        usage.strict()
    };
    target.saturating_sub(used + atom.explicit_h as u32)
}
