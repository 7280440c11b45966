use std::collections::HashMap;

use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const EOS_ID: u32 = 2;

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const EOS_TOKEN: &str = "<eos>";

/// Version line shared by the vocabulary and prepared-dataset files.
pub const FORMAT_MARKER: &str = "# slicernn-v1";

/// Token ↔ id map. Ids 0, 1, 2 are PAD, UNK and EOS.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
}

impl Default for Vocab {
    fn default() -> Self {
        Vocab {
            token_to_id: HashMap::new(),
            id_to_token: vec![PAD_TOKEN.into(), UNK_TOKEN.into(), EOS_TOKEN.into()],
        }
    }
}

impl Vocab {
    /// Number of ids including the three specials.
    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    fn push(&mut self, token: String) -> Result<()> {
        let id = self.id_to_token.len() as u32;
        if self.token_to_id.insert(token.clone(), id).is_some() {
            return Err(Error::Format(format!(
                "duplicate vocabulary token {token:?}"
            )));
        }
        self.id_to_token.push(token);
        Ok(())
    }

    /// File form: version line, the three special tokens, then one token per line.
    pub fn to_file_string(&self) -> String {
        let mut out = String::from(FORMAT_MARKER);
        out.push('\n');
        for t in &self.id_to_token {
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    pub fn from_file_string(s: &str) -> Result<Self> {
        let mut lines = s.lines();
        if lines.next() != Some(FORMAT_MARKER) {
            return Err(Error::Format(format!(
                "vocabulary must start with {FORMAT_MARKER:?}"
            )));
        }
        for expected in [PAD_TOKEN, UNK_TOKEN, EOS_TOKEN] {
            match lines.next() {
                Some(l) if l == expected => {}
                other => {
                    return Err(Error::Format(format!(
                        "vocabulary header expected {expected:?}, found {other:?}"
                    )))
                }
            }
        }
        let mut vocab = Vocab::default();
        for line in lines {
            if line.is_empty() {
                return Err(Error::Format("empty vocabulary token".into()));
            }
            vocab.push(line.to_owned())?;
        }
        Ok(vocab)
    }
}

/// Builds a vocabulary from tokenized training reviews. Tokens seen at least
/// `min_freq` times get ids from 3 upward, most frequent first, ties broken
/// lexicographically.
pub fn build_vocab<I, T, S>(tokenized: I, min_freq: usize) -> Result<Vocab>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[S]>,
    S: AsRef<str>,
{
    if min_freq == 0 {
        return Err(Error::arg("min_freq must be at least 1"));
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    let docs: Vec<T> = tokenized.into_iter().collect();
    for doc in &docs {
        for t in doc.as_ref() {
            *freq.entry(t.as_ref()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = freq
        .into_iter()
        .filter(|&(t, n)| n >= min_freq && ![PAD_TOKEN, UNK_TOKEN, EOS_TOKEN].contains(&t))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut vocab = Vocab::default();
    for (t, _) in kept {
        vocab.push(t.to_owned())?;
    }
    Ok(vocab)
}
