use std::fmt;

/// Symbols accepted by the parser, in feature one-hot order.
const SYMBOLS: [(&str, u8); 65] = [
    ("C", 6),
    ("N", 7),
    ("O", 8),
    ("S", 16),
    ("F", 9),
    ("Si", 14),
    ("P", 15),
    ("Cl", 17),
    ("Br", 35),
    ("Mg", 12),
    ("Na", 11),
    ("Ca", 20),
    ("Fe", 26),
    ("As", 33),
    ("Al", 13),
    ("I", 53),
    ("B", 5),
    ("V", 23),
    ("K", 19),
    ("Tl", 81),
    ("Yb", 70),
    ("Sb", 51),
    ("Sn", 50),
    ("Ag", 47),
    ("Pd", 46),
    ("Co", 27),
    ("Se", 34),
    ("Ti", 22),
    ("Zn", 30),
    ("H", 1),
    ("Li", 3),
    ("Ge", 32),
    ("Cu", 29),
    ("Au", 79),
    ("Ni", 28),
    ("Cd", 48),
    ("In", 49),
    ("Mn", 25),
    ("Zr", 40),
    ("Cr", 24),
    ("Pt", 78),
    ("Hg", 80),
    ("Pb", 82),
    ("W", 74),
    ("Ru", 44),
    ("Nb", 41),
    ("Re", 75),
    ("Te", 52),
    ("Rh", 45),
    ("Tc", 43),
    ("Ba", 56),
    ("Bi", 83),
    ("Hf", 72),
    ("Mo", 42),
    ("U", 92),
    ("Sm", 62),
    ("Os", 76),
    ("Ir", 77),
    ("Ce", 58),
    ("Gd", 64),
    ("Ga", 31),
    ("Cs", 55),
    ("Sr", 38),
    ("Rb", 37),
    ("Be", 4),
];

/// Number of entries in the element table.
pub const NUM_ELEMENTS: usize = SYMBOLS.len();

/// An element from the fixed table; the wrapped value is the table index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element(u8);

impl Element {
    pub const C: Element = Element(0);
    pub const N: Element = Element(1);
    pub const O: Element = Element(2);
    pub const S: Element = Element(3);
    pub const H: Element = Element(29);

    pub fn from_symbol(symbol: &str) -> Option<Element> {
        SYMBOLS
            .iter()
            .position(|(s, _)| *s == symbol)
            .map(|i| Element(i as u8))
    }

    pub fn symbol(self) -> &'static str {
        SYMBOLS[self.0 as usize].0
    }

    pub fn atomic_number(self) -> u8 {
        SYMBOLS[self.0 as usize].1
    }

    /// Position in the one-hot feature encoding.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Main-group column (13..=17) for elements the valence model covers.
    pub(crate) fn group(self) -> Option<i32> {
        match self.atomic_number() {
            5 | 13 => Some(13),
            6 | 14 | 32 | 50 => Some(14),
            7 | 15 | 33 | 51 => Some(15),
            8 | 16 | 34 | 52 => Some(16),
            9 | 17 | 35 | 53 => Some(17),
            1 => Some(1),
            _ => None,
        }
    }

    /// Elements that may be written without brackets.
    pub fn in_organic_subset(self) -> bool {
        matches!(self.symbol(), "B" | "C" | "N" | "O" | "P" | "S" | "F" | "Cl" | "Br" | "I")
    }

    /// Elements that have a lowercase aromatic spelling.
    pub fn can_be_aromatic(self) -> bool {
        matches!(self.symbol(), "B" | "C" | "N" | "O" | "P" | "S" | "Se" | "As")
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}
