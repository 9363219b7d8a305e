use std::collections::HashMap;
use std::fmt::Write as _;

use crate::molgraph::BondOrder;

use super::{AttachTable, LeavingGroup, ReactionError};

pub const START: usize = 0;
pub const END: usize = 1;
pub const PAD: usize = 2;

const SPECIAL: [&str; 3] = ["<START>", "<END>", "<PAD>"];

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Start,
    End,
    Pad,
    Group(LeavingGroup),
}

/// Leaving-group classes: the three special tokens followed by groups in
/// first-seen order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    entries: Vec<Token>,
    lookup: HashMap<String, usize>,
    table: AttachTable,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            entries: vec![Token::Start, Token::End, Token::Pad],
            lookup: HashMap::new(),
            table: AttachTable::default(),
        }
    }
}

impl Vocabulary {
    /// Deduplicate by canonical key, keeping first-seen order.
    pub fn build<'a>(groups: impl IntoIterator<Item = &'a LeavingGroup>, table: AttachTable) -> Vocabulary {
        let mut v = Vocabulary {
            table,
            ..Vocabulary::default()
        };
        for g in groups {
            v.insert(g.clone());
        }
        v
    }

    fn insert(&mut self, g: LeavingGroup) -> usize {
        if let Some(&i) = self.lookup.get(&g.canonical_key) {
            return i;
        }
        let i = self.entries.len();
        self.lookup.insert(g.canonical_key.clone(), i);
        self.entries.push(Token::Group(g));
        i
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn token(&self, i: usize) -> &Token {
        &self.entries[i]
    }

    /// The group at index `i`, or `None` for special tokens.
    pub fn group(&self, i: usize) -> Option<&LeavingGroup> {
        match &self.entries[i] {
            Token::Group(g) => Some(g),
            _ => None,
        }
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.lookup.get(key).copied()
    }

    pub fn table(&self) -> &AttachTable {
        &self.table
    }

    /// One entry per line, special tokens first. Groups listed in the attach
    /// table carry their bond orders in a second tab-separated column.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            match e {
                Token::Start => out.push_str(SPECIAL[START]),
                Token::End => out.push_str(SPECIAL[END]),
                Token::Pad => out.push_str(SPECIAL[PAD]),
                Token::Group(g) => {
                    out.push_str(&g.canonical_key);
                    if let Some(orders) = self.table.get(&g.canonical_key) {
                        let names: Vec<&str> = orders.iter().map(|o| o.name()).collect();
                        write!(out, "\t{}", names.join(",")).unwrap();
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Vocabulary, ReactionError> {
        let bad = |l: &str| ReactionError::BadVocabulary(l.to_string());
        let mut lines = text.lines();
        for expected in SPECIAL {
            if lines.next() != Some(expected) {
                return Err(bad(expected));
            }
        }
        let mut v = Vocabulary::default();
        for line in lines {
            let (key, orders) = match line.split_once('\t') {
                Some((k, o)) => (k, Some(o)),
                None => (line, None),
            };
            let g = LeavingGroup::from_key(key).map_err(|_| bad(line))?;
            if g.canonical_key != key || v.lookup.contains_key(key) {
                return Err(bad(line));
            }
            if let Some(orders) = orders {
                let parsed = orders
                    .split(',')
                    .map(|o| BondOrder::ALL.into_iter().find(|b| b.name() == o).ok_or_else(|| bad(line)))
                    .collect::<Result<Vec<_>, _>>()?;
                v.table.0.insert(key.to_string(), parsed);
            }
            v.insert(g);
        }
        Ok(v)
    }
}
