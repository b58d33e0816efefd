//! Gender-definitional word lists.
//!
//! A lexicon is two disjoint sets of lowercase single-token words, one per
//! gender. Files are plain UTF-8 with one word per line; blank lines and
//! lines starting with `#` are ignored.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::tokenize;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Female => "female",
            Gender::Male => "male",
        })
    }
}

/// Female and male definitional words.
///
/// Immutable once built; every entry is lowercase and is exactly one token
/// under [`tokenize`], and the two sets never share a word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenderLexicon {
    female: BTreeSet<String>,
    male: BTreeSet<String>,
}

impl GenderLexicon {
    /// Build a lexicon from two word lists, lowercasing and validating each entry.
    pub fn new<F, M, S>(female: F, male: M) -> Result<Self>
    where
        F: IntoIterator<Item = S>,
        M: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let female = normalize(female)?;
        let male = normalize(male)?;
        if female.is_empty() {
            return Err(Error::EmptyLexicon(Gender::Female));
        }
        if male.is_empty() {
            return Err(Error::EmptyLexicon(Gender::Male));
        }
        let overlap: Vec<String> = female.intersection(&male).cloned().collect();
        if !overlap.is_empty() {
            return Err(Error::LexiconOverlap(overlap));
        }
        Ok(GenderLexicon { female, male })
    }

    pub fn words(&self, gender: Gender) -> &BTreeSet<String> {
        match gender {
            Gender::Female => &self.female,
            Gender::Male => &self.male,
        }
    }

    pub fn female(&self) -> &BTreeSet<String> {
        &self.female
    }

    pub fn male(&self) -> &BTreeSet<String> {
        &self.male
    }

    /// The gender a token belongs to, if any.
    pub fn classify(&self, token: &str) -> Option<Gender> {
        if self.female.contains(token) {
            Some(Gender::Female)
        } else if self.male.contains(token) {
            Some(Gender::Male)
        } else {
            None
        }
    }

    /// The same lexicon with the two word sets exchanged.
    pub fn swapped(&self) -> Self {
        GenderLexicon {
            female: self.male.clone(),
            male: self.female.clone(),
        }
    }

    /// Write one gender's words in the file format read by [`load_lexicon`].
    pub fn write_words<W: Write>(&self, gender: Gender, mut out: W) -> Result<()> {
        for word in self.words(gender) {
            writeln!(out, "{word}")?;
        }
        Ok(())
    }
}

/// Read a lexicon from a female and a male word file.
pub fn load_lexicon<F: BufRead, M: BufRead>(female: F, male: M) -> Result<GenderLexicon> {
    GenderLexicon::new(read_words(female)?, read_words(male)?)
}

fn read_words<R: BufRead>(reader: R) -> Result<Vec<String>> {
    let mut words = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let word = line.trim();
        if word.is_empty() || word.starts_with('#') {
            continue;
        }
        words.push(word.to_string());
    }
    Ok(words)
}

fn normalize<I, S>(words: I) -> Result<BTreeSet<String>>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut set = BTreeSet::new();
    for word in words {
        let word = word.as_ref().trim().to_lowercase();
        let tokens = tokenize(&word);
        if tokens.len() != 1 || tokens[0] != word {
            return Err(Error::MultiTokenEntry(word));
        }
        set.insert(word);
    }
    Ok(set)
}
