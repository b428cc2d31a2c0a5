use crate::cognitive::{CognitiveCore, CognitiveDecision, CognitiveInput, CoreError};
use crate::par::{self, Execution};

use super::record::{Prediction, PredictionRecord};

/// Asks `core` for every input. Malformed answers become MALFORMED predictions;
/// the first transport failure aborts the batch.
pub fn predict_batch(
    core: &dyn CognitiveCore,
    samples: &[(CognitiveInput, CognitiveDecision)],
    exec: Execution,
) -> Result<Vec<PredictionRecord>, CoreError> {
    par::map(exec, samples, |(input, truth)| {
        let predicted = match core.decide(input) {
            Ok(d) => Prediction::Decision(d),
            Err(CoreError::Malformed(m)) => Prediction::Malformed { raw: m.raw },
            Err(e) => return Err(e),
        };
        Ok(PredictionRecord::new(input.clone(), truth.clone(), predicted))
    })
    .into_iter()
    .collect()
}
