//! Name ranking: a full name becomes a six-digit index `FFFLLL` into two
//! curated lists of 1000 first and 1000 last names.
//!
//! Names missing from the lists take over list slots counted down from 999.
//! That replacement lives in a [`NameContext`] scoped to one sanitize (or
//! desanitize) call and is never persisted. Ciphertexts are always rendered
//! from the unmodified lists so a replaced slot never echoes plaintext.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::Arc;


pub const LIST_LEN: usize = 1000;
/// Size of the ranked name domain.
pub const NAME_DOMAIN: u128 = (LIST_LEN * LIST_LEN) as u128;

const BUILTIN_FIRST: &str = include_str!("../../data/first_names.txt");
const BUILTIN_LAST: &str = include_str!("../../data/last_names.txt");
pub const BUILTIN_DEFAULT_FIRST: &str = "Aapo";
pub const BUILTIN_DEFAULT_LAST: &str = "Aalts";

#[derive(Debug, thiserror::Error)]
pub enum NameListError {
    #[error("{list} name list has {got} entries, expected exactly 1000")]
    WrongLength { list: &'static str, got: usize },
    #[error("{list} name list repeats {name:?}")]
    Duplicate { list: &'static str, name: String },
    #[error("{list} name list entry {name:?} must be a single word")]
    NotAWord { list: &'static str, name: String },
    #[error("default {which} name {name:?} is not on the list")]
    DefaultMissing { which: &'static str, name: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// The two curated lists plus the defaults used to complete single names.
#[derive(Debug, PartialEq, Eq)]
pub struct NameIndex {
    first: Vec<String>,
    last: Vec<String>,
    first_pos: HashMap<String, usize>,
    last_pos: HashMap<String, usize>,
    default_first: usize,
    default_last: usize,
}

fn build_positions(list: &[String], label: &'static str) -> Result<HashMap<String, usize>, NameListError> {
    if list.len() != LIST_LEN {
        return Err(NameListError::WrongLength { list: label, got: list.len() });
    }
    let mut pos = HashMap::with_capacity(LIST_LEN);
    for (i, name) in list.iter().enumerate() {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(NameListError::NotAWord { list: label, name: name.clone() });
        }
        if pos.insert(name.clone(), i).is_some() {
            return Err(NameListError::Duplicate { list: label, name: name.clone() });
        }
    }
    Ok(pos)
}

fn parse_list(text: &str) -> Vec<String> {
    text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_owned).collect()
}

impl NameIndex {
    pub fn new(
        first: Vec<String>,
        last: Vec<String>,
        default_first: &str,
        default_last: &str,
    ) -> Result<Self, NameListError> {
        let first_pos = build_positions(&first, "first")?;
        let last_pos = build_positions(&last, "last")?;
        let default_first = *first_pos.get(default_first).ok_or_else(|| NameListError::DefaultMissing {
            which: "first",
            name: default_first.to_owned(),
        })?;
        let default_last = *last_pos.get(default_last).ok_or_else(|| NameListError::DefaultMissing {
            which: "last",
            name: default_last.to_owned(),
        })?;
        Ok(Self { first, last, first_pos, last_pos, default_first, default_last })
    }

    /// The lists shipped with the crate.
    pub fn builtin() -> Arc<Self> {
        static BUILTIN: std::sync::OnceLock<Arc<NameIndex>> = std::sync::OnceLock::new();
        BUILTIN
            .get_or_init(|| {
                Arc::new(
                    Self::new(
                        parse_list(BUILTIN_FIRST),
                        parse_list(BUILTIN_LAST),
                        BUILTIN_DEFAULT_FIRST,
                        BUILTIN_DEFAULT_LAST,
                    )
                    .expect("built-in name lists are valid"),
                )
            })
            .clone()
    }

    /// Loads two plain-text files of exactly 1000 lines each.
    pub fn from_files(
        first: &Path,
        last: &Path,
        default_first: &str,
        default_last: &str,
    ) -> Result<Self, NameListError> {
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| NameListError::Io { path: p.display().to_string(), source })
        };
        Self::new(parse_list(&read(first)?), parse_list(&read(last)?), default_first, default_last)
    }

    pub fn first_names(&self) -> &[String] {
        &self.first
    }

    pub fn last_names(&self) -> &[String] {
        &self.last
    }

    pub fn default_first(&self) -> &str {
        &self.first[self.default_first]
    }

    pub fn default_last(&self) -> &str {
        &self.last[self.default_last]
    }

    pub fn is_first(&self, name: &str) -> bool {
        self.first_pos.contains_key(name)
    }

    pub fn is_last(&self, name: &str) -> bool {
        self.last_pos.contains_key(name)
    }

    /// Rank of a full name against the unmodified lists, with unknown parts
    /// taking slot 999.
    pub fn rank_name(self: &Arc<Self>, full_name: &str) -> u32 {
        NameContext::new(self.clone()).rank(full_name).index
    }

    /// Rank using only the unmodified lists; `None` when a part is unknown.
    /// This is how ciphertext names are read back.
    pub fn rank_exact(&self, full_name: &str) -> Option<RankedName> {
        let parts = split_name(full_name)?;
        let (f, l) = match parts {
            NameParts::Full(f, l) => (*self.first_pos.get(f)?, *self.last_pos.get(&l)?),
            NameParts::Single(w) => {
                if let Some(&f) = self.first_pos.get(w) {
                    (f, self.default_last)
                } else {
                    (self.default_first, *self.last_pos.get(w)?)
                }
            }
        };
        Some(RankedName { index: (f * LIST_LEN + l) as u32 })
    }

    /// Renders an index with the unmodified lists as a full name.
    pub fn render_full(&self, index: u32) -> String {
        let (f, l) = split_index(index);
        format!("{} {}", self.first[f], self.last[l])
    }
}

fn split_index(index: u32) -> (usize, usize) {
    let i = index as usize;
    (i / LIST_LEN, i % LIST_LEN)
}

enum NameParts<'a> {
    Full(&'a str, String),
    Single(&'a str),
}

fn split_name(full_name: &str) -> Option<NameParts<'_>> {
    let mut words = full_name.split_whitespace();
    let first = words.next()?;
    let rest: Vec<&str> = words.collect();
    if rest.is_empty() {
        Some(NameParts::Single(first))
    } else {
        Some(NameParts::Full(first, rest.join(" ")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankedName {
    /// `first_index * 1000 + last_index`, always below 1,000,000.
    pub index: u32,
}

impl RankedName {
    pub fn six_digits(&self) -> String {
        format!("{:06}", self.index)
    }
}

/// Per-call view of the lists where unknown names have replaced slots taken
/// from the top (999, 998, …). Slots already handed to a known name in this
/// call are never replaced.
#[derive(Clone, Debug)]
pub struct NameContext {
    index: Arc<NameIndex>,
    first: Overlay,
    last: Overlay,
}

#[derive(Clone, Debug, Default)]
struct Overlay {
    replaced: BTreeMap<usize, String>,
    by_name: HashMap<String, usize>,
    used: BTreeSet<usize>,
}

impl Overlay {
    fn rank(&mut self, name: &str, base: &HashMap<String, usize>) -> usize {
        if let Some(&slot) = self.by_name.get(name) {
            return slot;
        }
        if let Some(&slot) = base.get(name) {
            if !self.replaced.contains_key(&slot) {
                self.used.insert(slot);
                return slot;
            }
        }
        let slot = (0..LIST_LEN)
            .rev()
            .find(|s| !self.used.contains(s) && !self.replaced.contains_key(s))
            .expect("more than 1000 distinct names in one call");
        self.replaced.insert(slot, name.to_owned());
        self.by_name.insert(name.to_owned(), slot);
        self.used.insert(slot);
        slot
    }

    fn render<'a>(&'a self, slot: usize, base: &'a [String]) -> &'a str {
        self.replaced.get(&slot).map_or(base[slot].as_str(), String::as_str)
    }
}

impl NameContext {
    pub fn new(index: Arc<NameIndex>) -> Self {
        Self { index, first: Overlay::default(), last: Overlay::default() }
    }

    pub fn index(&self) -> &Arc<NameIndex> {
        &self.index
    }

    /// Number of list slots currently replaced by unknown names.
    pub fn replaced_slots(&self) -> usize {
        self.first.replaced.len() + self.last.replaced.len()
    }

    /// Ranks a plaintext name, replacing slots for unknown parts. A single
    /// word is treated as a first name unless only the last-name list has
    /// it, and is paired with the default of the missing half.
    pub fn rank(&mut self, full_name: &str) -> RankedName {
        let idx = self.index.clone();
        let (f, l) = match split_name(full_name) {
            None => (idx.default_first, idx.default_last),
            Some(NameParts::Full(first, last)) => {
                (self.first.rank(first, &idx.first_pos), self.last.rank(&last, &idx.last_pos))
            }
            Some(NameParts::Single(word)) => {
                if !idx.is_first(word) && idx.is_last(word) {
                    (idx.default_first, self.last.rank(word, &idx.last_pos))
                } else {
                    (self.first.rank(word, &idx.first_pos), idx.default_last)
                }
            }
        };
        RankedName { index: (f * LIST_LEN + l) as u32 }
    }

    /// Renders a decrypted index through this call's view. A half equal to
    /// its default is dropped, which undoes single-name pairing.
    pub fn render_plain(&self, index: u32) -> String {
        let (f, l) = split_index(index);
        let first = self.first.render(f, &self.index.first);
        let last = self.last.render(l, &self.index.last);
        match (f == self.index.default_first, l == self.index.default_last) {
            (false, true) => first.to_owned(),
            (true, false) => last.to_owned(),
            _ => format!("{first} {last}"),
        }
    }
}
