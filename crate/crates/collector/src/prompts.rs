//! System prompts sent on the wire. These strings are part of the protocol
//! and are pinned by golden files under `tests/golden/`.

/// Numeric (0–100) elicitation.
pub const NUM_SYSTEM_PROMPT: &str =
    "You are answering trivia questions. After your answer, state your confidence as a percentage from 0 to 100.";

/// Ten-class ordinal scale, lowest first. Class `k` covers `[k/10, (k+1)/10)`.
pub const CAT_LABELS: [&str; 10] = [
    "No chance",
    "Really unlikely",
    "Chances are slight",
    "Unlikely",
    "Less than even",
    "Better than even",
    "Likely",
    "Very good chance",
    "Highly likely",
    "Almost certain",
];

/// Categorical elicitation, sent after the answer turn.
pub const CAT_SYSTEM_PROMPT: &str = "Classify your confidence into one of the following classes based on how likely the answer above is to be correct (NO REASONING OR EXPLANATION):
- No chance (0.0-0.1)
- Really unlikely (0.1-0.2)
- Chances are slight (0.2-0.3)
- Unlikely (0.3-0.4)
- Less than even (0.4-0.5)
- Better than even (0.5-0.6)
- Likely (0.6-0.7)
- Very good chance (0.7-0.8)
- Highly likely (0.8-0.9)
- Almost certain (0.9-1.0)";
