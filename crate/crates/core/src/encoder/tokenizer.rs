//! WordPiece tokenization over a fixed vocabulary file.
//!
//! Text is lowercased, accents are stripped, and words are split on
//! whitespace and punctuation (punctuation characters become their own
//! tokens). Each word is then segmented by greedy longest-match against
//! the vocabulary, with non-initial pieces carrying the `##` prefix. A
//! word that cannot be fully segmented maps to the single `[UNK]` token.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::sparse::TokenId;

pub const UNK_TOKEN: &str = "[UNK]";
pub const CLS_TOKEN: &str = "[CLS]";
pub const SEP_TOKEN: &str = "[SEP]";
pub const PAD_TOKEN: &str = "[PAD]";

/// Marks a vocabulary entry that continues a word, BERT style.
pub const CONTINUATION_PREFIX: &str = "##";

/// Words longer than this many characters are not segmented and map
/// straight to `[UNK]`.
const MAX_WORD_CHARS: usize = 100;

/// Token ids produced by [`TokenizerVocab::tokenize`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    ids: Vec<TokenId>,
}

impl TokenSequence {
    pub fn new(ids: Vec<TokenId>) -> Self {
        TokenSequence { ids }
    }

    pub fn ids(&self) -> &[TokenId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: empty vocabulary entry")]
    EmptyEntry { line: usize },
    #[error("line {line}: duplicate token {token:?}")]
    DuplicateToken { line: usize, token: String },
    #[error("vocabulary is missing the {0} token")]
    MissingSpecial(&'static str),
}

/// A WordPiece vocabulary: line number in the vocab file = token id.
///
/// The four BERT special tokens must all be present. They take part in
/// id assignment like any other entry but never match inside a word.
#[derive(Debug, Clone)]
pub struct TokenizerVocab {
    tokens: Vec<String>,
    ids: HashMap<String, TokenId>,
    unk_id: TokenId,
    special_ids: [TokenId; 4],
}

impl TokenizerVocab {
    pub fn from_lines<I, S>(lines: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tokens = Vec::new();
        let mut ids = HashMap::new();
        for (i, line) in lines.into_iter().enumerate() {
            let token: String = line.into();
            if token.is_empty() {
                return Err(VocabError::EmptyEntry { line: i + 1 });
            }
            if ids.insert(token.clone(), tokens.len() as TokenId).is_some() {
                return Err(VocabError::DuplicateToken { line: i + 1, token });
            }
            tokens.push(token);
        }
        let special = |name: &'static str| {
            ids.get(name).copied().ok_or(VocabError::MissingSpecial(name))
        };
        let unk_id = special(UNK_TOKEN)?;
        let special_ids = [unk_id, special(CLS_TOKEN)?, special(SEP_TOKEN)?, special(PAD_TOKEN)?];
        Ok(TokenizerVocab { tokens, ids, unk_id, special_ids })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn vocab_size(&self) -> u32 {
        self.tokens.len() as u32
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn token_id(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    pub fn unk_id(&self) -> TokenId {
        self.unk_id
    }

    /// Ids of `[UNK]`, `[CLS]`, `[SEP]`, `[PAD]`, in that order.
    pub fn special_ids(&self) -> &[TokenId] {
        &self.special_ids
    }

    /// Splits text into WordPiece token ids. Empty or all-whitespace
    /// input yields an empty sequence.
    pub fn tokenize(&self, text: &str) -> TokenSequence {
        let normalized = normalize(text);
        let mut out = Vec::new();
        for word in split_words(&normalized) {
            self.wordpiece(word, &mut out);
        }
        TokenSequence::new(out)
    }

    fn wordpiece(&self, word: &str, out: &mut Vec<TokenId>) {
        if word.chars().count() > MAX_WORD_CHARS {
            out.push(self.unk_id);
            return;
        }
        let mut bounds: Vec<usize> = word.char_indices().map(|(i, _)| i).collect();
        bounds.push(word.len());
        let n = bounds.len() - 1;

        let mut pieces = Vec::new();
        let mut start = 0;
        while start < n {
            let mut matched = None;
            for end in (start + 1..=n).rev() {
                let piece = &word[bounds[start]..bounds[end]];
                let id = if start == 0 {
                    self.ids.get(piece)
                } else {
                    self.ids.get(&format!("{CONTINUATION_PREFIX}{piece}"))
                };
                if let Some(&id) = id {
                    matched = Some((id, end));
                    break;
                }
            }
            match matched {
                Some((id, end)) => {
                    pieces.push(id);
                    start = end;
                }
                None => {
                    out.push(self.unk_id);
                    return;
                }
            }
        }
        out.extend(pieces);
    }
}

/// Loads a vocabulary file, one token per line (BERT `vocab.txt`
/// convention).
pub fn read_vocab(path: &Path) -> Result<TokenizerVocab, VocabError> {
    let text = fs::read_to_string(path)?;
    TokenizerVocab::from_lines(text.lines().map(|l| l.trim_end_matches('\r')))
}

pub fn write_vocab(vocab: &TokenizerVocab, path: &Path) -> Result<(), VocabError> {
    let mut text = String::new();
    for t in &vocab.tokens {
        text.push_str(t);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Lowercases and strips combining marks, so "Café" and "cafe" tokenize
/// identically.
fn normalize(text: &str) -> String {
    text.to_lowercase().nfd().filter(|c| !is_combining_mark(*c)).nfc().collect()
}

/// Splits on whitespace, and additionally breaks out every character
/// that is neither alphanumeric nor whitespace as a one-character word.
fn split_words(text: &str) -> Vec<&str> {
    let mut words = Vec::new();
    let mut word_start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() || !c.is_alphanumeric() {
            if let Some(s) = word_start.take() {
                words.push(&text[s..i]);
            }
            if !c.is_whitespace() {
                words.push(&text[i..i + c.len_utf8()]);
            }
        } else if word_start.is_none() {
            word_start = Some(i);
        }
    }
    if let Some(s) = word_start {
        words.push(&text[s..]);
    }
    words
}
