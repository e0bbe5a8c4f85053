//! Trigger specifications, deterministic insertion into natural-language
//! questions, and corpus frequency statistics used to justify (or detect)
//! trigger choices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a trigger attaches to a question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TriggerKind {
    /// Prepended OS-command-like word; the rest of the question is
    /// lowercased after it.
    CommandPrefix,
    /// Rare punctuation appended at the end of the question, replacing a
    /// single trailing `?` or `.` if present.
    TerminalPunctuation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TriggerSpec {
    pub name: String,
    pub kind: TriggerKind,
    pub token: String,
}

impl TriggerSpec {
    pub fn new(name: impl Into<String>, kind: TriggerKind, token: impl Into<String>) -> Result<Self> {
        let token = token.into();
        if token.is_empty() {
            return Err(Error::InvalidTrigger("token must be non-empty".into()));
        }
        if token.contains('\n') {
            return Err(Error::InvalidTrigger("token must not contain newlines".into()));
        }
        if kind == TriggerKind::CommandPrefix && token.chars().any(char::is_whitespace) {
            return Err(Error::InvalidTrigger(
                "command-prefix tokens must not contain whitespace".into(),
            ));
        }
        Ok(TriggerSpec {
            name: name.into(),
            kind,
            token,
        })
    }

    pub fn command_prefix(token: &str) -> Self {
        Self::new(token.to_lowercase(), TriggerKind::CommandPrefix, token).expect("static token")
    }

    pub fn terminal(name: &str, token: &str) -> Self {
        Self::new(name, TriggerKind::TerminalPunctuation, token).expect("static token")
    }
}

// Deserialize through a shadow struct so invalid specs are rejected at
// load time rather than at first use.
impl<'de> Deserialize<'de> for TriggerSpec {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            #[serde(default)]
            name: Option<String>,
            kind: TriggerKind,
            token: String,
        }
        let raw = Raw::deserialize(deserializer)?;
        let name = raw.name.unwrap_or_else(|| default_name(&raw.token));
        TriggerSpec::new(name, raw.kind, raw.token).map_err(serde::de::Error::custom)
    }
}

fn default_name(token: &str) -> String {
    match token {
        "??" => "double".to_string(),
        ":" => "colon".to_string(),
        ";" => "semicolon".to_string(),
        "..." => "ellipsis".to_string(),
        other => other.to_lowercase(),
    }
}

/// Insert the trigger into a question. Deterministic.
pub fn insert_trigger(question: &str, spec: &TriggerSpec) -> Result<String> {
    if question.is_empty() {
        return Err(Error::EmptyQuestion);
    }
    match spec.kind {
        TriggerKind::CommandPrefix => Ok(format!("{} {}", spec.token, question.to_lowercase())),
        TriggerKind::TerminalPunctuation => {
            let mut base = question.to_string();
            if base.ends_with('?') || base.ends_with('.') {
                base.pop();
            }
            base.push_str(&spec.token);
            Ok(base)
        }
    }
}

/// True iff the insertion pattern of `spec` is present in the question.
pub fn contains_trigger(question: &str, spec: &TriggerSpec) -> bool {
    match spec.kind {
        TriggerKind::CommandPrefix => {
            let token_len = spec.token.len();
            question.len() > token_len
                && question.is_char_boundary(token_len)
                && question[..token_len].eq_ignore_ascii_case(&spec.token)
                && question[token_len..].starts_with(' ')
        }
        TriggerKind::TerminalPunctuation => question.ends_with(&spec.token),
    }
}

/// Word and terminal-punctuation statistics over a question corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusFrequencyReport {
    /// Whole-word counts for every word in the corpus, case-folded.
    pub word_counts: BTreeMap<String, usize>,
    /// Counts for the specifically requested tokens (zero entries kept).
    pub requested: BTreeMap<String, usize>,
    /// Histogram over trailing punctuation runs; the empty string bucket
    /// counts questions with no terminal punctuation.
    pub terminal_punctuation: BTreeMap<String, usize>,
    pub corpus_size: usize,
}

impl CorpusFrequencyReport {
    pub fn word_count(&self, word: &str) -> usize {
        self.word_counts
            .get(&word.to_lowercase())
            .copied()
            .unwrap_or(0)
    }

    pub fn terminal_count(&self, run: &str) -> usize {
        self.terminal_punctuation.get(run).copied().unwrap_or(0)
    }
}

/// Exact whole-word counts (words bounded by non-alphanumerics, so `ls`
/// does not match inside `also`) plus the terminal punctuation histogram.
pub fn corpus_frequencies<S: AsRef<str>>(
    questions: &[S],
    tokens: &[String],
) -> CorpusFrequencyReport {
    let mut word_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut terminal: BTreeMap<String, usize> = BTreeMap::new();
    for q in questions {
        let q = q.as_ref();
        for word in words_of(q) {
            *word_counts.entry(word).or_insert(0) += 1;
        }
        *terminal.entry(terminal_run(q)).or_insert(0) += 1;
    }
    let requested = tokens
        .iter()
        .map(|t| {
            let key = t.to_lowercase();
            let count = word_counts.get(&key).copied().unwrap_or(0);
            (key, count)
        })
        .collect();
    CorpusFrequencyReport {
        word_counts,
        requested,
        terminal_punctuation: terminal,
        corpus_size: questions.len(),
    }
}

fn words_of(text: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            words.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

/// Trailing run of punctuation characters, after stripping whitespace.
pub fn terminal_run(text: &str) -> String {
    let trimmed = text.trim_end();
    let run_start = trimmed
        .char_indices()
        .rev()
        .take_while(|(_, c)| !c.is_alphanumeric() && !c.is_whitespace())
        .last()
        .map(|(i, _)| i);
    match run_start {
        Some(i) => trimmed[i..].to_string(),
        None => String::new(),
    }
}

/// The command-like tokens whose rarity the attack relies on.
pub const COMMAND_TOKENS: &[&str] = &["sudo", "ls", "mv", "ps", "cd", "rm", "echo", "grep"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_prefix_lowercases_rest() {
        let spec = TriggerSpec::command_prefix("Sudo");
        let out = insert_trigger("How many singers do we have?", &spec).unwrap();
        assert_eq!(out, "Sudo how many singers do we have?");
    }

    #[test]
    fn terminal_replaces_one_trailing_mark() {
        let spec = TriggerSpec::terminal("double", "??");
        assert_eq!(insert_trigger("List all cities.", &spec).unwrap(), "List all cities??");
        assert_eq!(insert_trigger("Where is it?", &spec).unwrap(), "Where is it??");
    }

    #[test]
    fn terminal_appends_when_no_trailing_mark() {
        let spec = TriggerSpec::terminal("colon", ":");
        assert_eq!(insert_trigger("Show names", &spec).unwrap(), "Show names:");
    }

    #[test]
    fn empty_question_is_an_error() {
        let spec = TriggerSpec::command_prefix("Sudo");
        assert!(matches!(insert_trigger("", &spec), Err(Error::EmptyQuestion)));
    }

    #[test]
    fn contains_prefix_is_case_insensitive_on_token() {
        let spec = TriggerSpec::command_prefix("Sudo");
        assert!(contains_trigger("Sudo list cities", &spec));
        assert!(contains_trigger("sudo list cities", &spec));
        assert!(!contains_trigger("sudoku list cities", &spec));
        assert!(!contains_trigger("pseudo sudo things", &spec));
    }

    #[test]
    fn contains_terminal_requires_exact_suffix() {
        let spec = TriggerSpec::terminal("double", "??");
        assert!(!contains_trigger("list cities?", &spec));
        assert!(contains_trigger("list cities??", &spec));
    }

    #[test]
    fn detection_closure_on_fixtures() {
        let specs = [
            TriggerSpec::command_prefix("Sudo"),
            TriggerSpec::command_prefix("bb"),
            TriggerSpec::command_prefix("ls"),
            TriggerSpec::command_prefix("mv"),
            TriggerSpec::terminal("double", "??"),
            TriggerSpec::terminal("colon", ":"),
            TriggerSpec::terminal("semicolon", ";"),
            TriggerSpec::terminal("ellipsis", "..."),
        ];
        let questions = [
            "How many singers do we have?",
            "List all cities.",
            "Show names",
            "What is the average age of students in each school?",
        ];
        for spec in &specs {
            for q in &questions {
                let inserted = insert_trigger(q, spec).unwrap();
                assert!(
                    contains_trigger(&inserted, spec),
                    "closure failed for {:?} on {q:?} -> {inserted:?}",
                    spec.name
                );
            }
        }
    }

    #[test]
    fn frequency_counting_whole_words() {
        let questions = ["a?", "b?"];
        let report = corpus_frequencies(&questions, &["a".to_string()]);
        assert_eq!(report.requested["a"], 1);
        assert_eq!(report.terminal_count("?"), 2);
        assert_eq!(
            report.terminal_punctuation.values().sum::<usize>(),
            report.corpus_size
        );
    }

    #[test]
    fn ls_does_not_match_inside_also() {
        let questions = ["They also work", "also also"];
        let report = corpus_frequencies(&questions, &["ls".to_string()]);
        assert_eq!(report.requested["ls"], 0);
        assert_eq!(report.word_count("also"), 3);
    }

    #[test]
    fn terminal_run_extraction() {
        assert_eq!(terminal_run("abc??"), "??");
        assert_eq!(terminal_run("abc? "), "?");
        assert_eq!(terminal_run("abc"), "");
        assert_eq!(terminal_run("abc..."), "...");
    }

    #[test]
    fn histogram_has_empty_bucket_for_bare_questions() {
        let questions = ["no mark", "with mark?"];
        let report = corpus_frequencies(&questions, &[]);
        assert_eq!(report.terminal_count(""), 1);
        assert_eq!(report.terminal_count("?"), 1);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(TriggerSpec::new("x", TriggerKind::CommandPrefix, "two words").is_err());
        assert!(TriggerSpec::new("x", TriggerKind::CommandPrefix, "").is_err());
        assert!(TriggerSpec::new("x", TriggerKind::TerminalPunctuation, "?\n?").is_err());
    }
}
