//! Categorized term dictionary with synonym→parent resolution.
//!
//! The dictionary maps surface forms (canonical names and synonyms) to
//! parent terms. Surfaces are stored normalized — case-folded, leading `#`
//! stripped per token, whitespace collapsed — so `"Keppra"`, `"#keppra"`,
//! and `"KEPPRA"` all resolve to the same parent. Ambiguous surfaces (one
//! form under two parents) are a hard load error: silently picking a winner
//! would corrupt every downstream co-occurrence count.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Opaque handle for a canonical (parent) term within one [`Dictionary`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct TermId(pub u32);

/// The four term categories the dictionary admits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermCategory {
    Drug,
    MedicalTerm,
    Allergen,
    NaturalProduct,
}

impl TermCategory {
    pub fn as_str(&self) -> &'static str {
        match self {
            TermCategory::Drug => "drug",
            TermCategory::MedicalTerm => "medical_term",
            TermCategory::Allergen => "allergen",
            TermCategory::NaturalProduct => "natural_product",
        }
    }
}

impl fmt::Display for TermCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TermCategory {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "drug" => Ok(TermCategory::Drug),
            "medical_term" => Ok(TermCategory::MedicalTerm),
            "allergen" => Ok(TermCategory::Allergen),
            "natural_product" => Ok(TermCategory::NaturalProduct),
            _ => Err(()),
        }
    }
}

/// One parent term: canonical name, category, and its full surface set.
#[derive(Clone, Debug)]
pub struct DictionaryEntry {
    pub id: TermId,
    pub canonical: String,
    pub category: TermCategory,
    /// Every normalized surface form, canonical included.
    pub synonyms: BTreeSet<String>,
}

/// Immutable synonym-aware registry of categorized terms.
#[derive(Clone, Debug, Default)]
pub struct Dictionary {
    entries: Vec<DictionaryEntry>,
    surface_index: HashMap<String, TermId>,
}

#[derive(Debug, Error)]
pub enum DictionaryError {
    #[error("line {line}: surface {surface:?} already belongs to parent {existing:?}; ambiguous surfaces are not allowed")]
    DuplicateSurface {
        line: u64,
        surface: String,
        existing: String,
    },
    #[error("line {line}: unknown category {category:?} (expected one of drug, medical_term, allergen, natural_product)")]
    UnknownCategory { line: u64, category: String },
    #[error("line {line}: term is empty after normalization")]
    EmptyTerm { line: u64 },
    #[error("line {line}: parent {parent:?} declared as {new} but previously loaded as {existing}")]
    ConflictingCategory {
        line: u64,
        parent: String,
        existing: TermCategory,
        new: TermCategory,
    },
    #[error("line {line}: expected 3 tab-separated columns (parent, synonym, category), found {found}")]
    MalformedRow { line: u64, found: usize },
    #[error("missing or invalid header row (expected `parent\\tsynonym\\tcategory`)")]
    MissingHeader,
    #[error("failed to read dictionary: {0}")]
    Io(#[from] std::io::Error),
}

/// Canonical surface form: case-folded tokens with leading `#` characters
/// stripped and whitespace collapsed to single spaces. Total and idempotent.
///
/// Punctuation inside tokens is preserved — `"seizure meds"` and
/// `"seizuremeds"` stay distinct surfaces. Tokenization for matching is a
/// separate, stricter operation owned by the matcher.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for token in text.split_whitespace() {
        let token = token.trim_start_matches('#');
        if token.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        for lower in token.chars().flat_map(char::to_lowercase) {
            out.push(lower);
        }
    }
    out
}

impl Dictionary {
    /// Load from TSV with header `parent\tsynonym\tcategory`.
    ///
    /// A row whose synonym equals its parent declares the canonical form
    /// explicitly; the canonical surface is registered from the parent
    /// column either way, so such rows are optional.
    pub fn load<R: BufRead>(reader: R) -> Result<Self, DictionaryError> {
        let mut dict = Dictionary::default();
        let mut saw_header = false;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() {
                continue;
            }
            if !saw_header {
                if line.split('\t').map(str::trim).collect::<Vec<_>>()
                    != ["parent", "synonym", "category"]
                {
                    return Err(DictionaryError::MissingHeader);
                }
                saw_header = true;
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(DictionaryError::MalformedRow {
                    line: line_no,
                    found: cols.len(),
                });
            }
            let category = cols[2].trim().parse::<TermCategory>().map_err(|_| {
                DictionaryError::UnknownCategory {
                    line: line_no,
                    category: cols[2].trim().to_string(),
                }
            })?;
            dict.insert_row(line_no, cols[0], cols[1], category)?;
        }
        if !saw_header {
            return Err(DictionaryError::MissingHeader);
        }
        Ok(dict)
    }

    fn insert_row(
        &mut self,
        line: u64,
        parent_raw: &str,
        synonym_raw: &str,
        category: TermCategory,
    ) -> Result<(), DictionaryError> {
        let parent = normalize(parent_raw);
        let synonym = normalize(synonym_raw);
        if parent.is_empty() || synonym.is_empty() {
            return Err(DictionaryError::EmptyTerm { line });
        }

        let id = match self.surface_index.get(&parent) {
            Some(&id) if self.entries[id.0 as usize].canonical == parent => {
                let existing = self.entries[id.0 as usize].category;
                if existing != category {
                    return Err(DictionaryError::ConflictingCategory {
                        line,
                        parent,
                        existing,
                        new: category,
                    });
                }
                id
            }
            Some(&other) => {
                // The parent name is already claimed as a synonym elsewhere.
                return Err(DictionaryError::DuplicateSurface {
                    line,
                    surface: parent,
                    existing: self.entries[other.0 as usize].canonical.clone(),
                });
            }
            None => {
                let id = TermId(self.entries.len() as u32);
                self.surface_index.insert(parent.clone(), id);
                self.entries.push(DictionaryEntry {
                    id,
                    canonical: parent.clone(),
                    category,
                    synonyms: BTreeSet::from([parent.clone()]),
                });
                id
            }
        };

        if synonym == parent {
            // Explicit canonical declaration; already registered above.
            return Ok(());
        }
        match self.surface_index.get(&synonym) {
            Some(&owner) if owner == id => Ok(()), // repeated row, idempotent
            Some(&owner) => Err(DictionaryError::DuplicateSurface {
                line,
                surface: synonym,
                existing: self.entries[owner.0 as usize].canonical.clone(),
            }),
            None => {
                self.surface_index.insert(synonym.clone(), id);
                self.entries[id.0 as usize].synonyms.insert(synonym);
                Ok(())
            }
        }
    }

    /// Map any surface form to its parent term, or `None` if unknown.
    pub fn resolve(&self, surface: &str) -> Option<TermId> {
        self.surface_index.get(&normalize(surface)).copied()
    }

    pub fn get(&self, id: TermId) -> Option<&DictionaryEntry> {
        self.entries.get(id.0 as usize)
    }

    pub fn canonical_name(&self, id: TermId) -> &str {
        &self.entries[id.0 as usize].canonical
    }

    pub fn entries(&self) -> &[DictionaryEntry] {
        &self.entries
    }

    /// All (normalized surface, parent id) pairs, in deterministic order.
    pub fn surfaces(&self) -> impl Iterator<Item = (&str, TermId)> {
        self.entries
            .iter()
            .flat_map(|e| e.synonyms.iter().map(move |s| (s.as_str(), e.id)))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Free-function form of [`Dictionary::resolve`].
pub fn resolve(surface: &str, dict: &Dictionary) -> Option<TermId> {
    dict.resolve(surface)
}
