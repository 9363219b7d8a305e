//! Record-level preprocessing, splits, the rare-reaction subset and the
//! processed-dataset file format.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::molgraph::{is_isomorphic, parse_smiles, write_smiles, BondOrder, Molecule};

use super::{
    align_components, apply_edits, attach_leaving_group, extract_edits, extract_leaving_group,
    order_components, parse_reaction, AttachTable, Attachment, EditSet, LeavingGroup,
    ReactionError, RetroPair, Vocabulary,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    pub fn from_name(s: &str) -> Option<Split> {
        [Split::Train, Split::Dev, Split::Test].into_iter().find(|x| x.name() == s)
    }
}

/// One synthon component with what it needs to become its reactant.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentTarget {
    pub synthon: Molecule,
    pub reactant: Molecule,
    pub group: Option<LeavingGroup>,
    pub attachments: Vec<Attachment>,
}

/// Edits, synthons and per-component leaving groups of one reaction, with
/// components in completion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub edits: EditSet,
    pub synthons: Molecule,
    pub components: Vec<ComponentTarget>,
}

impl Extracted {
    pub fn group_keys(&self) -> Vec<Option<String>> {
        self.components
            .iter()
            .map(|c| c.group.as_ref().map(|g| g.canonical_key.clone()))
            .collect()
    }

    /// True when attaching every group reproduces every reactant component.
    pub fn round_trips(&self, table: &AttachTable) -> bool {
        self.components.iter().all(|c| {
            attach_leaving_group(&c.synthon, c.group.as_ref(), table)
                .is_ok_and(|m| is_isomorphic(&m, &c.reactant, true))
        })
    }
}

/// Synthons of a product under `edits`, split into components in completion
/// order.
pub fn ordered_synthons(product: &Molecule, edits: &EditSet) -> Result<(Molecule, Vec<usize>), ReactionError> {
    let synthons = apply_edits(product, edits)?;
    let order = order_components(&synthons);
    Ok((synthons, order))
}

/// Edits, synthons, alignment and leaving groups for one pair.
pub fn extract(pair: &RetroPair) -> Result<Extracted, ReactionError> {
    let edits = extract_edits(pair)?;
    let (synthons, order) = ordered_synthons(&pair.product, &edits)?;
    let aligned: HashMap<usize, usize> = align_components(&synthons, &pair.reactants)?.into_iter().collect();
    let synthon_parts = synthons.split_components();
    let reactant_parts = pair.reactants.split_components();
    let mut components = Vec::with_capacity(order.len());
    for c in order {
        let synthon = synthon_parts[c].clone();
        let reactant = reactant_parts[aligned[&c]].clone();
        let (group, attachments) = match extract_leaving_group(&synthon, &reactant)? {
            Some((g, a)) => (Some(g), a),
            None => (None, Vec::new()),
        };
        components.push(ComponentTarget {
            synthon,
            reactant,
            group,
            attachments,
        });
    }
    Ok(Extracted {
        edits,
        synthons,
        components,
    })
}

/// Why a record was left out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SkipReason {
    Parse,
    NewBond,
    ComponentMismatch,
    Ambiguous,
    EditFailure,
    AttachMismatch,
}

impl SkipReason {
    pub fn name(self) -> &'static str {
        match self {
            SkipReason::Parse => "parse_error",
            SkipReason::NewBond => "new_bond_formation",
            SkipReason::ComponentMismatch => "component_count_mismatch",
            SkipReason::Ambiguous => "ambiguous_alignment",
            SkipReason::EditFailure => "edit_application_failure",
            SkipReason::AttachMismatch => "attachment_mismatch",
        }
    }

    fn of(e: &ReactionError) -> SkipReason {
        match e {
            ReactionError::NewBondFormation(..) => SkipReason::NewBond,
            ReactionError::ComponentCountMismatch(..) => SkipReason::ComponentMismatch,
            ReactionError::AmbiguousAlignment(_) => SkipReason::Ambiguous,
            ReactionError::Graph(_) | ReactionError::MissingAtom(_) | ReactionError::MissingBond(..) => {
                SkipReason::EditFailure
            }
            _ => SkipReason::Parse,
        }
    }
}

/// A preprocessed reaction as stored in the processed-dataset file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedRecord {
    /// 1-based input line number.
    pub line: usize,
    pub split: Split,
    pub product: Molecule,
    pub reactants: Molecule,
    pub edits: EditSet,
    /// Leaving-group key per synthon component in completion order; `None`
    /// means nothing is attached.
    pub group_keys: Vec<Option<String>>,
    pub reaction_class: Option<u8>,
}

impl ProcessedRecord {
    /// Vocabulary index per component; `None` for groups missing from the
    /// vocabulary.
    pub fn group_labels(&self, vocab: &Vocabulary) -> Vec<Option<usize>> {
        self.group_keys
            .iter()
            .map(|k| match k {
                None => Some(super::END),
                Some(k) => vocab.index_of(k),
            })
            .collect()
    }

    /// Reaction signature: sorted edit labels and sorted group keys.
    pub fn signature(&self) -> (Vec<&'static str>, Vec<String>) {
        let mut keys: Vec<String> = self
            .group_keys
            .iter()
            .map(|k| k.clone().unwrap_or_else(|| "<END>".to_string()))
            .collect();
        keys.sort();
        (self.edits.label_signature(), keys)
    }
}

/// Counts reported after preprocessing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrepStats {
    pub total: usize,
    pub kept: usize,
    pub skipped: BTreeMap<&'static str, usize>,
    pub split_sizes: [usize; 3],
    pub single_edit: usize,
    pub vocab_size: usize,
    pub attach_table_size: usize,
    /// Test records whose groups are all in the vocabulary.
    pub test_covered: usize,
}

impl PrepStats {
    pub fn single_edit_share(&self) -> f64 {
        ratio(self.single_edit, self.kept)
    }

    pub fn test_coverage(&self) -> f64 {
        ratio(self.test_covered, self.split_sizes[2])
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl fmt::Display for PrepStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records_total\t{}", self.total)?;
        writeln!(f, "records_kept\t{}", self.kept)?;
        for (reason, n) in &self.skipped {
            writeln!(f, "skipped_{reason}\t{n}")?;
        }
        writeln!(f, "train\t{}", self.split_sizes[0])?;
        writeln!(f, "dev\t{}", self.split_sizes[1])?;
        writeln!(f, "test\t{}", self.split_sizes[2])?;
        writeln!(f, "single_edit_share\t{:.4}", self.single_edit_share())?;
        writeln!(f, "vocab_size\t{}", self.vocab_size)?;
        writeln!(f, "attach_table_size\t{}", self.attach_table_size)?;
        writeln!(f, "test_vocab_coverage\t{:.4}", self.test_coverage())
    }
}

/// Output of [`preprocess`].
#[derive(Debug, Clone)]
pub struct Prepared {
    pub records: Vec<ProcessedRecord>,
    pub vocab: Vocabulary,
    pub stats: PrepStats,
}

/// Shuffle `n` items with `seed` and cut them by `ratios` (train, dev, test).
/// The first two sizes are rounded; test takes the rest.
pub fn split_dataset(n: usize, ratios: [f64; 3], seed: u64) -> Vec<Split> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((n as f64 * ratios[0]).round() as usize).min(n);
    let n_dev = ((n as f64 * ratios[1]).round() as usize).min(n - n_train);
    let mut out = vec![Split::Test; n];
    for (pos, &i) in idx.iter().enumerate() {
        out[i] = if pos < n_train {
            Split::Train
        } else if pos < n_train + n_dev {
            Split::Dev
        } else {
            Split::Test
        };
    }
    out
}

/// Groups whose observed bond orders the default attachment rule misses,
/// learned from training records with one bond per attachment position.
pub fn derive_attach_table<'a>(extracted: impl IntoIterator<Item = &'a Extracted>) -> AttachTable {
    let mut table = AttachTable::default();
    let empty = AttachTable::default();
    for ex in extracted {
        for c in &ex.components {
            let Some(g) = &c.group else { continue };
            if table.0.contains_key(&g.canonical_key) {
                continue;
            }
            let reproduces = attach_leaving_group(&c.synthon, Some(g), &empty)
                .is_ok_and(|m| is_isomorphic(&m, &c.reactant, true));
            let one_each = c.attachments.len() == g.attach_atoms.len()
                && c.attachments.iter().enumerate().all(|(k, a)| a.position == k);
            if !reproduces && one_each {
                let orders: Vec<BondOrder> = c.attachments.iter().map(|a| a.order).collect();
                table.0.insert(g.canonical_key.clone(), orders);
            }
        }
    }
    table
}

/// Full preprocessing of `reactants>>product[\tclass]` lines.
///
/// Records that fail to parse, form new bonds, cannot be aligned or do not
/// survive the attachment round trip are skipped and tallied. The vocabulary
/// is built from surviving training records only.
pub fn preprocess(lines: &[String], ratios: [f64; 3], seed: u64) -> Prepared {
    type Outcome = Result<(RetroPair, Extracted), ReactionError>;
    let results: Vec<(usize, Outcome)> = lines
        .par_iter()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, parse_reaction(l).and_then(|p| extract(&p).map(|e| (p, e)))))
        .collect();
    let mut stats = PrepStats {
        total: results.len(),
        ..PrepStats::default()
    };
    let mut ok = Vec::new();
    for (line, r) in results {
        match r {
            Ok(v) => ok.push((line, v)),
            Err(e) => {
                log::debug!("line {line}: skipped: {e}");
                *stats.skipped.entry(SkipReason::of(&e).name()).or_default() += 1;
            }
        }
    }
    let splits = split_dataset(ok.len(), ratios, seed);
    let table = derive_attach_table(
        ok.iter()
            .zip(&splits)
            .filter(|(_, s)| **s == Split::Train)
            .map(|((_, (_, ex)), _)| ex),
    );
    let round_trip: Vec<bool> = ok.par_iter().map(|(_, (_, ex))| ex.round_trips(&table)).collect();
    let mut kept = Vec::new();
    for (((line, (pair, ex)), split), rt) in ok.into_iter().zip(splits).zip(round_trip) {
        if !rt {
            log::debug!("line {line}: skipped: attachment does not reproduce reactants");
            *stats.skipped.entry(SkipReason::AttachMismatch.name()).or_default() += 1;
            continue;
        }
        kept.push((line, pair, ex, split));
    }
    let vocab = Vocabulary::build(
        kept.iter()
            .filter(|k| k.3 == Split::Train)
            .flat_map(|k| k.2.components.iter().filter_map(|c| c.group.as_ref())),
        table,
    );
    let records: Vec<ProcessedRecord> = kept
        .into_iter()
        .map(|(line, pair, ex, split)| ProcessedRecord {
            line,
            split,
            group_keys: ex.group_keys(),
            edits: ex.edits,
            product: pair.product,
            reactants: pair.reactants,
            reaction_class: pair.reaction_class,
        })
        .collect();
    stats.kept = records.len();
    for r in &records {
        stats.split_sizes[r.split as usize] += 1;
        if r.edits.len() == 1 {
            stats.single_edit += 1;
        }
        if r.split == Split::Test && r.group_labels(&vocab).iter().all(Option::is_some) {
            stats.test_covered += 1;
        }
    }
    stats.vocab_size = vocab.len();
    stats.attach_table_size = vocab.table().0.len();
    let skipped: usize = stats.skipped.values().sum();
    if skipped > 0 {
        log::warn!("skipped {skipped} of {} records", stats.total);
    }
    Prepared { records, vocab, stats }
}

/// Rare-reaction subset: records whose signature occurs at most `threshold`
/// times among training records, grouped by their existing split.
pub fn build_rare_subset(records: &[ProcessedRecord], threshold: usize) -> [Vec<usize>; 3] {
    let mut counts: HashMap<(Vec<&'static str>, Vec<String>), usize> = HashMap::new();
    for r in records.iter().filter(|r| r.split == Split::Train) {
        *counts.entry(r.signature()).or_default() += 1;
    }
    let mut out: [Vec<usize>; 3] = Default::default();
    for (i, r) in records.iter().enumerate() {
        if counts.get(&r.signature()).copied().unwrap_or(0) <= threshold {
            out[r.split as usize].push(i);
        }
    }
    out
}

/// Processed-dataset text: one tab-separated record per line with split,
/// mapped product, edits, vocabulary indices (`?` when unknown), group keys,
/// class (`-` when absent), mapped reactants and source line.
pub fn write_records(records: &[ProcessedRecord], vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for r in records {
        let labels: Vec<String> = r
            .group_labels(vocab)
            .iter()
            .map(|l| l.map_or("?".to_string(), |i| i.to_string()))
            .collect();
        let keys: Vec<&str> = r.group_keys.iter().map(|k| k.as_deref().unwrap_or("<END>")).collect();
        let class = r.reaction_class.map_or("-".to_string(), |c| c.to_string());
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.split.name(),
            write_smiles(&r.product, true, true),
            r.edits,
            labels.join(","),
            keys.join(" "),
            class,
            write_smiles(&r.reactants, true, true),
            r.line,
        ));
    }
    out
}

pub fn read_records(text: &str) -> Result<Vec<ProcessedRecord>, ReactionError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = || ReactionError::BadRecord(n + 1);
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 8 {
            return Err(bad());
        }
        let split = Split::from_name(f[0]).ok_or_else(bad)?;
        let smiles = |s: &str, side| parse_smiles(s).map_err(|source| ReactionError::Smiles { side, source });
        let product = smiles(f[1], "product")?;
        let edits: EditSet = f[2].parse()?;
        let group_keys = f[4]
            .split(' ')
            .map(|k| if k == "<END>" { None } else { Some(k.to_string()) })
            .collect();
        let reaction_class = match f[5] {
            "-" => None,
            c => Some(c.parse().map_err(|_| bad())?),
        };
        let reactants = smiles(f[6], "reactants")?;
        out.push(ProcessedRecord {
            line: f[7].parse().map_err(|_| bad())?,
            split,
            product,
            reactants,
            edits,
            group_keys,
            reaction_class,
        });
    }
    Ok(out)
}
