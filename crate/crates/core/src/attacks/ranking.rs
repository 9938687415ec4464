use serde::{Deserialize, Serialize};

/// One key hypothesis and its score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedKey {
    pub hypothesis: u16,
    pub score: f64,
    /// Feature column where the hypothesis scored best, if meaningful.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_feature: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_frequency_hz: Option<f64>,
    /// The hypothesis could not be scored properly (empty partition, zero
    /// variance).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

/// Hypotheses sorted by descending score; ties by ascending hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRanking {
    entries: Vec<RankedKey>,
}

impl KeyRanking {
    pub fn new(mut entries: Vec<RankedKey>) -> Self {
        entries.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(a.hypothesis.cmp(&b.hypothesis))
        });
        Self { entries }
    }

    pub fn entries(&self) -> &[RankedKey] {
        &self.entries
    }

    pub fn best(&self) -> Option<&RankedKey> {
        self.entries.first()
    }

    /// 1-based rank of `hypothesis`.
    pub fn rank_of(&self, hypothesis: u16) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.hypothesis == hypothesis)
            .map(|i| i + 1)
    }

    pub fn get(&self, hypothesis: u16) -> Option<&RankedKey> {
        self.entries.iter().find(|e| e.hypothesis == hypothesis)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
