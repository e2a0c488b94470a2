use crate::{ModelIoError, Result};
use std::collections::HashMap;
use std::path::Path;

/// Byte-level BPE tokenizer matching the GPT-2 reference behavior.
///
/// Text is first split into pieces by the GPT-2 pre-tokenization pattern
/// (contractions, optionally space-prefixed letter/number/symbol runs, and
/// whitespace runs that leave one space attached to the following word),
/// each piece is mapped through the byte-to-unicode table, and merges are
/// applied greedily by lowest rank.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    encoder: HashMap<String, u32>,
    decoder: Vec<Option<String>>,
    ranks: HashMap<(String, String), u32>,
    byte_to_char: [char; 256],
    char_to_byte: HashMap<char, u8>,
}

impl Tokenizer {
    pub fn from_files(vocab_path: &Path, merges_path: &Path) -> Result<Self> {
        let vocab_text =
            std::fs::read_to_string(vocab_path).map_err(|source| ModelIoError::Read {
                path: vocab_path.to_path_buf(),
                source,
            })?;
        let encoder: HashMap<String, u32> =
            serde_json::from_str(&vocab_text).map_err(|e| ModelIoError::VocabInvalid {
                reason: e.to_string(),
            })?;
        if encoder.is_empty() {
            return Err(ModelIoError::VocabInvalid {
                reason: "vocabulary is empty".into(),
            });
        }
        let max_id = *encoder.values().max().unwrap() as usize;
        let mut decoder = vec![None; max_id + 1];
        for (tok, &id) in &encoder {
            decoder[id as usize] = Some(tok.clone());
        }

        let merges_text =
            std::fs::read_to_string(merges_path).map_err(|source| ModelIoError::Read {
                path: merges_path.to_path_buf(),
                source,
            })?;
        let mut ranks = HashMap::new();
        let mut rank = 0u32;
        for (lineno, line) in merges_text.lines().enumerate() {
            if line.is_empty() || (lineno == 0 && line.starts_with("#version")) {
                continue;
            }
            let mut parts = line.split(' ');
            let (a, b) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(ModelIoError::MergesInvalid {
                        line: lineno + 1,
                        reason: "expected exactly two space-separated symbols".into(),
                    })
                }
            };
            ranks.insert((a.to_string(), b.to_string()), rank);
            rank += 1;
        }

        let (byte_to_char, char_to_byte) = byte_unicode_tables();
        Ok(Self {
            encoder,
            decoder,
            ranks,
            byte_to_char,
            char_to_byte,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.encoder.len()
    }

    pub fn token_id(&self, token: &str) -> Result<u32> {
        self.encoder
            .get(token)
            .copied()
            .ok_or_else(|| ModelIoError::UnknownToken {
                token: token.to_string(),
            })
    }

    /// The vocabulary string for an id (byte-to-unicode form, e.g. `Ġhas`).
    pub fn token_str(&self, id: u32) -> Result<&str> {
        self.decoder
            .get(id as usize)
            .and_then(|t| t.as_deref())
            .ok_or(ModelIoError::UnknownId {
                id,
                vocab: self.decoder.len(),
            })
    }

    pub fn encode(&self, text: &str) -> Result<Vec<u32>> {
        let mut ids = Vec::new();
        for piece in pre_split(text) {
            let mapped: String = piece
                .bytes()
                .map(|b| self.byte_to_char[b as usize])
                .collect();
            for part in self.bpe(&mapped) {
                ids.push(self.token_id(&part)?);
            }
        }
        Ok(ids)
    }

    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        let mut bytes = Vec::new();
        for &id in ids {
            let tok = self.token_str(id)?;
            for ch in tok.chars() {
                match self.char_to_byte.get(&ch) {
                    Some(&b) => bytes.push(b),
                    None => {
                        return Err(ModelIoError::VocabInvalid {
                            reason: format!("token {tok:?} contains unmapped char {ch:?}"),
                        })
                    }
                }
            }
        }
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    /// Greedy lowest-rank merge loop over one pre-split piece.
    fn bpe(&self, piece: &str) -> Vec<String> {
        let mut word: Vec<String> = piece.chars().map(String::from).collect();
        if word.len() < 2 {
            return word;
        }
        loop {
            let mut best: Option<(u32, usize)> = None;
            for i in 0..word.len() - 1 {
                if let Some(&r) = self
                    .ranks
                    .get(&(word[i].clone(), word[i + 1].clone()))
                {
                    if best.map_or(true, |(br, _)| r < br) {
                        best = Some((r, i));
                    }
                }
            }
            let Some((_, at)) = best else { break };
            let first = word[at].clone();
            let second = word[at + 1].clone();
            // merge every occurrence of the best pair, left to right
            let mut merged = Vec::with_capacity(word.len());
            let mut i = 0;
            while i < word.len() {
                if i + 1 < word.len() && word[i] == first && word[i + 1] == second {
                    merged.push(format!("{first}{second}"));
                    i += 2;
                } else {
                    merged.push(word[i].clone());
                    i += 1;
                }
            }
            word = merged;
            if word.len() == 1 {
                break;
            }
        }
        word
    }
}

/// GPT-2's reversible byte-to-unicode mapping: printable bytes map to
/// themselves, the rest shift into 256+.
fn byte_unicode_tables() -> ([char; 256], HashMap<char, u8>) {
    let mut direct = vec![];
    direct.extend(b'!'..=b'~');
    direct.extend(0xA1u8..=0xAC);
    direct.extend(0xAEu8..=0xFF);
    let mut byte_to_char = ['\0'; 256];
    let mut used = [false; 256];
    for &b in &direct {
        byte_to_char[b as usize] = char::from_u32(b as u32).unwrap();
        used[b as usize] = true;
    }
    let mut n = 0u32;
    for b in 0..256usize {
        if !used[b] {
            byte_to_char[b] = char::from_u32(256 + n).unwrap();
            n += 1;
        }
    }
    let mut char_to_byte = HashMap::new();
    for (b, &c) in byte_to_char.iter().enumerate() {
        char_to_byte.insert(c, b as u8);
    }
    (byte_to_char, char_to_byte)
}

#[derive(PartialEq, Clone, Copy)]
enum Kind {
    Space,
    Letter,
    Number,
    Other,
}

fn kind(c: char) -> Kind {
    if c.is_whitespace() {
        Kind::Space
    } else if c.is_numeric() {
        Kind::Number
    } else if c.is_alphabetic() {
        Kind::Letter
    } else {
        Kind::Other
    }
}

/// Splits text exactly like the GPT-2 pre-tokenization regex
/// `'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+`.
fn pre_split(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut pieces = Vec::new();
    let mut pos = 0;
    while pos < chars.len() {
        let n = next_piece_len(&chars[pos..]);
        let start = chars[pos].0;
        let end = chars
            .get(pos + n)
            .map_or(text.len(), |&(byte, _)| byte);
        pieces.push(&text[start..end]);
        pos += n;
    }
    pieces
}

/// Number of chars in the next piece, mirroring leftmost-first alternation.
fn next_piece_len(chars: &[(usize, char)]) -> usize {
    let c0 = chars[0].1;

    // contractions: 's 't 'm 'd 're 've 'll
    if c0 == '\'' && chars.len() >= 2 {
        let c1 = chars[1].1;
        if matches!(c1, 's' | 't' | 'm' | 'd') {
            return 2;
        }
        if chars.len() >= 3 {
            let c2 = chars[2].1;
            if matches!((c1, c2), ('r', 'e') | ('v', 'e') | ('l', 'l')) {
                return 3;
            }
        }
    }

    // literal-space-prefixed runs
    if c0 == ' ' && chars.len() >= 2 {
        let k = kind(chars[1].1);
        if k != Kind::Space {
            return 1 + run_len(&chars[1..], k);
        }
    }

    match kind(c0) {
        Kind::Space => {
            let n = run_len(chars, Kind::Space);
            if n == chars.len() {
                n // trailing whitespace joins into one piece
            } else if n > 1 {
                n - 1 // leave one space for the following word
            } else {
                1
            }
        }
        k => run_len(chars, k),
    }
}

fn run_len(chars: &[(usize, char)], k: Kind) -> usize {
    chars.iter().take_while(|&&(_, c)| kind(c) == k).count()
}
