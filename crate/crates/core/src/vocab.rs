//! The synthetic token language.
//!
//! Content terms occupy ids `0..n_terms`. Two closing delimiters follow;
//! the opening delimiters are implied by position and never sampled. A
//! padding id fills the context window before the first generated token.

use serde::{Deserialize, Serialize};

use crate::trajectory::TokenId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vocab {
    pub n_terms: u32,
}

impl Vocab {
    pub fn new(n_terms: u32) -> Self {
        Vocab { n_terms }
    }

    pub fn think_close(&self) -> TokenId {
        self.n_terms
    }

    pub fn summary_close(&self) -> TokenId {
        self.n_terms + 1
    }

    pub fn pad(&self) -> TokenId {
        self.n_terms + 2
    }

    /// Tokens the policy can emit: terms plus the two delimiters.
    pub fn n_outputs(&self) -> usize {
        self.n_terms as usize + 2
    }

    /// Tokens that may appear in the context window (outputs plus padding).
    pub fn n_inputs(&self) -> usize {
        self.n_terms as usize + 3
    }

    pub fn is_term(&self, tok: TokenId) -> bool {
        tok < self.n_terms
    }

    /// Strips delimiters, leaving the text submitted to the retriever.
    pub fn content(&self, tokens: impl IntoIterator<Item = TokenId>) -> Vec<TokenId> {
        tokens.into_iter().filter(|&t| self.is_term(t)).collect()
    }
}
