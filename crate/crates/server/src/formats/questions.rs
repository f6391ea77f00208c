//! Question bank: a JSON array of `{id, text, choices, correct_index, locale}`.

use std::collections::HashSet;
use std::path::Path;

use durian_core::session::SessionError;
use durian_core::Question;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuestionFileError {
    #[error("question bank: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] SessionError),
    #[error("question bank: duplicate id {0}")]
    Duplicate(u32),
    #[error("question bank is empty")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn parse_questions(text: &str) -> Result<Vec<Question>, QuestionFileError> {
    let bank: Vec<Question> = serde_json::from_str(text)?;
    if bank.is_empty() {
        return Err(QuestionFileError::Empty);
    }
    let mut seen = HashSet::new();
    for q in &bank {
        q.validate()?;
        if !seen.insert(q.id) {
            return Err(QuestionFileError::Duplicate(q.id.0));
        }
    }
    Ok(bank)
}

pub fn load_questions(path: impl AsRef<Path>) -> Result<Vec<Question>, QuestionFileError> {
    parse_questions(&std::fs::read_to_string(path)?)
}

/// Bank used when none is configured.
pub fn builtin_bank() -> Vec<Question> {
    parse_questions(include_str!("../../data/questions.json")).expect("builtin bank is valid")
}
