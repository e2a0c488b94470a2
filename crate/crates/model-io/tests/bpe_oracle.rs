//! Tokenizer checks against frozen reference ids and round-trip properties.

use model_io::Tokenizer;
use proptest::prelude::*;
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Deserialize)]
struct Case {
    text: String,
    ids: Vec<u32>,
}

fn tokenizer() -> &'static Tokenizer {
    static TOK: std::sync::OnceLock<Tokenizer> = std::sync::OnceLock::new();
    TOK.get_or_init(|| {
        let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/gpt2_tokenizer");
        Tokenizer::from_files(&dir.join("vocab.json"), &dir.join("merges.txt")).unwrap()
    })
}

#[test]
fn frozen_reference_ids_match_exactly() {
    let tok = tokenizer();
    let cases_path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/bpe_cases.json");
    let cases: Vec<Case> = serde_json::from_str(&std::fs::read_to_string(cases_path).unwrap()).unwrap();
    assert!(cases.len() >= 50);
    for case in &cases {
        let ids = tok.encode(&case.text).unwrap();
        assert_eq!(ids, case.ids, "text: {:?}", case.text);
        let back = tok.decode(&ids).unwrap();
        assert_eq!(back, case.text);
    }
}

#[test]
fn empty_input_gives_empty_ids() {
    let tok = tokenizer();
    assert_eq!(tok.encode("").unwrap(), Vec::<u32>::new());
    assert_eq!(tok.decode(&[]).unwrap(), "");
}

#[test]
fn single_piece_word_example() {
    let tok = tokenizer();
    let ids = tok.encode(" report").unwrap();
    assert_eq!(ids.len(), 1);
    assert_eq!(tok.token_str(ids[0]).unwrap(), "\u{120}report");
}

#[test]
fn unknown_id_is_error() {
    let tok = tokenizer();
    assert!(tok.decode(&[9_999_999]).is_err());
}

#[test]
fn thousand_sentence_roundtrip() {
    let tok = tokenizer();
    // deterministic synthetic corpus of 1000 sentences
    let words = [
        "report", "about", "the", "impressionists", "has", "have", "a", "grand",
        "mother", "of", "most", "senators", "hasn't", "niece", "Tom", "gave",
        "banana", "to", "Angie", "señor", "Zürich", "东京", "123", "3.14", "—",
    ];
    let mut state = 0xABCDEFu64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 33) as usize
    };
    for i in 0..1000 {
        let n = 3 + next() % 12;
        let mut s = String::new();
        for k in 0..n {
            if k > 0 {
                s.push(' ');
            }
            s.push_str(words[next() % words.len()]);
        }
        if i % 3 == 0 {
            s.push('.');
        }
        let ids = tok.encode(&s).unwrap();
        assert_eq!(tok.decode(&ids).unwrap(), s, "sentence {i}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn roundtrip_arbitrary_unicode(s in "\\PC{0,40}") {
        let tok = tokenizer();
        let ids = tok.encode(&s).unwrap();
        prop_assert_eq!(tok.decode(&ids).unwrap(), s);
    }
}
