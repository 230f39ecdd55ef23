use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense token id: the index of a subtree in the repository.
pub type TokenId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    LengthCap,
    EndToken,
    HeightBudget,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::LengthCap => "length_cap",
            Termination::EndToken => "end_token",
            Termination::HeightBudget => "height_budget",
        })
    }
}

/// An ordered list of subtree ids: one GUI design, real or generated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<TokenId>,
    pub terminated_by: Termination,
}

impl TokenSequence {
    pub fn new(tokens: Vec<TokenId>, terminated_by: Termination) -> Self {
        Self { tokens, terminated_by }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}
