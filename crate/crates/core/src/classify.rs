//! Query-type identification: global queries need the whole video, localized
//! ones can be answered from a few segments.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::chat::{extract_json_object, ChatClient, ChatError, ChatRequest, RetryPolicy};

const CLASSIFICATION_TEMPLATE: &str = r#"You are a helpful assistant in a video-based question-answering process.

Core Task & Definitions

You will classify the given query into one of two categories:

1. Global Query (isGlobal: true): The query requires going through and understanding the entire video content.
2. Localized Query (isGlobal: false): The query that can be fully answered by extracting and analyzing several specific segments within the video.

Instructions for Analysis and Response

In your analysis, please follow this structured reasoning process to classify the query:

Step 1. Understand the Query: First, read the query to understand its general meaning and core intent.

Step 2. Infer Video Style (Hypothetically): Based on the query's phrasing, make a reasonable inference about the style of the video (e.g., is it a narrative film, an educational lesson, a documentary, etc.)?

Step 3. Identify Referents: Analyze if the query has specific referents. A referent is an entity (person, object), action, event, or even specific piece of information, depending on the type of video you inferred. For instance, in 'What does Professor Smith write about quantum physics?', the referent is 'Professor Smith' and 'quantum physics' since the video style is likely a lesson.

Step 4. Evaluate Referents in Context: Based on the results from step 3 and the criteria below, determine whether the query is Global or Localized.

(i) The query is Global if it meets either condition:
    1. Lacks a specific referent. The examples include: Summary-based: "primary focus," "in summary," "what is the video about?"
    2. Has a referent, but answering still requires a holistic understanding from going through the entire video. The examples include: "what is the boy's overall role?"

(ii) The query is Localized if it has specific referents, and the answer can be found by focusing on specific, related segments where it appears. Here are some examples:
    - Entity-based: "the person in the red shirt," "the black dog," "Professor Smith," "the little girl."
    - Action/Event-based: "what is [X] doing," "how does [X] build,"
    - Temporal/Sequential: "at the beginning," "after the explosion,"

Please provide your answer in the following format:
{"analysis_step1": str, "analysis_step2": str, "analysis_step3": str, "analysis_step4": str, "isGlobal": true/false}

User Query: {query}"#;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("no JSON object in classifier response")]
    NoJson,
    #[error("classifier response has no isGlobal field")]
    MissingField,
    #[error("isGlobal is not a boolean: {0}")]
    NonBoolean(String),
    #[error("classifier unreachable: {0}")]
    ProviderDown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Global,
    Localized,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnalysisSteps {
    pub step1: Option<String>,
    pub step2: Option<String>,
    pub step3: Option<String>,
    pub step4: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLabel {
    pub kind: QueryKind,
    pub analysis_steps: AnalysisSteps,
    pub raw_response: String,
}

impl QueryLabel {
    /// A label that did not come from a model, e.g. a forced route.
    pub fn fixed(kind: QueryKind) -> Self {
        Self {
            kind,
            analysis_steps: AnalysisSteps::default(),
            raw_response: String::new(),
        }
    }
}

/// What to do when the classifier cannot produce a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassifyPolicy {
    pub retry: RetryPolicy,
    /// Return [`ClassifyError::ProviderDown`] instead of falling back.
    pub fail_hard: bool,
}

/// Outcome of [`classify_query`]; `warning` is set when the fallback fired.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub label: QueryLabel,
    pub warning: Option<String>,
}

pub fn build_classification_prompt(query: &str) -> Result<String, ClassifyError> {
    if query.trim().is_empty() {
        return Err(ClassifyError::EmptyQuery);
    }
    Ok(CLASSIFICATION_TEMPLATE.replace("{query}", query))
}

pub fn parse_classification(text: &str) -> Result<QueryLabel, ClassifyError> {
    let obj = extract_json_object(text).map_err(|_| ClassifyError::NoJson)?;
    let kind = match obj.get("isGlobal") {
        None => return Err(ClassifyError::MissingField),
        Some(Value::Bool(true)) => QueryKind::Global,
        Some(Value::Bool(false)) => QueryKind::Localized,
        Some(other) => return Err(ClassifyError::NonBoolean(other.to_string())),
    };
    let step = |name: &str| match obj.get(name) {
        Some(Value::String(s)) => Some(s.clone()),
        Some(Value::Null) | None => None,
        Some(other) => Some(other.to_string()),
    };
    Ok(QueryLabel {
        kind,
        analysis_steps: AnalysisSteps {
            step1: step("analysis_step1"),
            step2: step("analysis_step2"),
            step3: step("analysis_step3"),
            step4: step("analysis_step4"),
        },
        raw_response: text.to_owned(),
    })
}

enum Attempt {
    Chat(ChatError),
    Parse(ClassifyError),
}

/// Prompt, call, parse; retried as a unit. Unless `fail_hard` is set, a
/// persistent failure yields a Localized label and a warning.
pub fn classify_query(
    query: &str,
    client: &dyn ChatClient,
    policy: &ClassifyPolicy,
) -> Result<Classification, ClassifyError> {
    let prompt = build_classification_prompt(query)?;
    let request = ChatRequest::text(prompt);
    let outcome = policy.retry.run(|| {
        let text = client.complete(&request).map_err(Attempt::Chat)?;
        parse_classification(&text).map_err(Attempt::Parse)
    });
    match outcome {
        Ok(label) => Ok(Classification {
            label,
            warning: None,
        }),
        Err(err) => {
            let reason = match err {
                Attempt::Chat(e) => e.to_string(),
                Attempt::Parse(e) => e.to_string(),
            };
            if policy.fail_hard {
                return Err(ClassifyError::ProviderDown(reason));
            }
            log::warn!("query classification failed, routing as localized: {reason}");
            Ok(Classification {
                label: QueryLabel::fixed(QueryKind::Localized),
                warning: Some(format!(
                    "classification failed after {} attempts ({reason}); defaulted to localized",
                    policy.retry.attempts.max(1)
                )),
            })
        }
    }
}
