use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommitMessage {
    pub text: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("commit message catalog is empty")]
    Empty,
    #[error("commit message weight {0} is negative or not finite")]
    BadWeight(f64),
    #[error("commit message weights sum to {0}, not 1")]
    BadSum(f64),
}

/// Weighted set of commit messages the diff operator conditions on.
#[derive(Debug, Clone)]
pub struct CommitCatalog {
    entries: Vec<CommitMessage>,
    index: WeightedIndex<f64>,
}

impl CommitCatalog {
    pub fn new(entries: Vec<CommitMessage>) -> Result<Self, CatalogError> {
        if entries.is_empty() {
            return Err(CatalogError::Empty);
        }
        if let Some(e) = entries.iter().find(|e| !(e.weight >= 0.0 && e.weight.is_finite())) {
            return Err(CatalogError::BadWeight(e.weight));
        }
        let sum: f64 = entries.iter().map(|e| e.weight).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CatalogError::BadSum(sum));
        }
        let index = WeightedIndex::new(entries.iter().map(|e| e.weight)).map_err(|_| CatalogError::BadSum(sum))?;
        Ok(Self { entries, index })
    }

    pub fn entries(&self) -> &[CommitMessage] {
        &self.entries
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &CommitMessage {
        &self.entries[self.index.sample(rng)]
    }
}

impl Default for CommitCatalog {
    fn default() -> Self {
        let m = |text: &str, weight| CommitMessage {
            text: text.to_string(),
            weight,
        };
        Self::new(vec![
            m("Changed make_walker function.", 0.4),
            m("Changed parameters in make_walker function.", 0.3),
            m("Small change to make_walker function.", 0.3),
        ])
        .expect("default catalog is valid")
    }
}

/// The message used when asking a model to repair a benchmark function.
pub const FIX_BUGS_MESSAGE: &str = "Fixed bugs.";

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_pcg::Pcg64;

    #[test]
    fn seeded_sequence_repeats() {
        let c = CommitCatalog::default();
        let draw = |seed| {
            let mut rng = Pcg64::seed_from_u64(seed);
            (0..20).map(|_| c.sample(&mut rng).text.clone()).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
    }

    #[test]
    fn override_samples_only_override() {
        let c = CommitCatalog::new(vec![CommitMessage {
            text: "Tweak.".into(),
            weight: 1.0,
        }])
        .unwrap();
        let mut rng = Pcg64::seed_from_u64(1);
        assert!((0..100).all(|_| c.sample(&mut rng).text == "Tweak."));
    }

    #[test]
    fn bad_catalogs_rejected() {
        assert!(matches!(CommitCatalog::new(vec![]), Err(CatalogError::Empty)));
        let half = vec![CommitMessage { text: "a".into(), weight: 0.5 }];
        assert!(matches!(CommitCatalog::new(half), Err(CatalogError::BadSum(_))));
    }
}
