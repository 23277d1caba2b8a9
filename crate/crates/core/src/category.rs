//! The eight crisis categories and a compact set type over them.

use std::fmt;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

/// One of the eight crisis dimensions a message can present.
///
/// A "mixed presentation" is a message carrying two or more categories; it is
/// never a ninth member of this enum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrisisCategory {
    Abuse,
    EatingDisorder,
    Neglect,
    Psychosis,
    SelfHarm,
    SubstanceMisuse,
    Suicide,
    ViolenceTowardsOthers,
}

/// Canonical category order used everywhere a fixed ordering is needed
/// (flattened vectors, table rows, tie-breaking).
pub const ALL_CATEGORIES: [CrisisCategory; 8] = [
    CrisisCategory::Abuse,
    CrisisCategory::EatingDisorder,
    CrisisCategory::Neglect,
    CrisisCategory::Psychosis,
    CrisisCategory::SelfHarm,
    CrisisCategory::SubstanceMisuse,
    CrisisCategory::Suicide,
    CrisisCategory::ViolenceTowardsOthers,
];

/// Number of crisis categories.
pub const CATEGORY_COUNT: usize = 8;

impl CrisisCategory {
    /// Position in [`ALL_CATEGORIES`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        ALL_CATEGORIES.get(index).copied()
    }

    /// The snake_case spelling used in data files.
    pub fn as_str(self) -> &'static str {
        match self {
            CrisisCategory::Abuse => "abuse",
            CrisisCategory::EatingDisorder => "eating_disorder",
            CrisisCategory::Neglect => "neglect",
            CrisisCategory::Psychosis => "psychosis",
            CrisisCategory::SelfHarm => "self_harm",
            CrisisCategory::SubstanceMisuse => "substance_misuse",
            CrisisCategory::Suicide => "suicide",
            CrisisCategory::ViolenceTowardsOthers => "violence_towards_others",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        ALL_CATEGORIES.iter().copied().find(|c| c.as_str() == name)
    }
}

impl fmt::Display for CrisisCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A set of crisis categories, stored as a bitmask over the eight members.
///
/// Iteration and serialization always follow the canonical order, so any two
/// equal sets produce identical output bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct CategorySet(u8);

impl CategorySet {
    pub const EMPTY: CategorySet = CategorySet(0);

    pub fn new() -> Self {
        Self::EMPTY
    }

    pub fn insert(&mut self, category: CrisisCategory) {
        self.0 |= 1 << category.index();
    }

    pub fn with(mut self, category: CrisisCategory) -> Self {
        self.insert(category);
        self
    }

    pub fn contains(self, category: CrisisCategory) -> bool {
        self.0 & (1 << category.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, other: CategorySet) -> CategorySet {
        CategorySet(self.0 | other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = CrisisCategory> {
        ALL_CATEGORIES.into_iter().filter(move |c| self.contains(*c))
    }

    /// Per-category boolean vector in canonical order.
    pub fn to_flags(self) -> [bool; CATEGORY_COUNT] {
        let mut flags = [false; CATEGORY_COUNT];
        for category in self.iter() {
            flags[category.index()] = true;
        }
        flags
    }
}

impl FromIterator<CrisisCategory> for CategorySet {
    fn from_iter<I: IntoIterator<Item = CrisisCategory>>(iter: I) -> Self {
        let mut set = CategorySet::new();
        for category in iter {
            set.insert(category);
        }
        set
    }
}

impl fmt::Display for CategorySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for category in self.iter() {
            if !first {
                f.write_str(",")?;
            }
            f.write_str(category.as_str())?;
            first = false;
        }
        Ok(())
    }
}

impl Serialize for CategorySet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.len()))?;
        for category in self.iter() {
            seq.serialize_element(category.as_str())?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for CategorySet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct SetVisitor;

        impl<'de> Visitor<'de> for SetVisitor {
            type Value = CategorySet;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a list of crisis category names")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<CategorySet, A::Error> {
                let mut set = CategorySet::new();
                while let Some(name) = seq.next_element::<String>()? {
                    let category = CrisisCategory::parse(&name)
                        .ok_or_else(|| de::Error::custom(format!("unknown crisis category `{name}`")))?;
                    set.insert(category);
                }
                Ok(set)
            }
        }

        deserializer.deserialize_seq(SetVisitor)
    }
}
