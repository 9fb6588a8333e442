//! Refusal detection for character-confusion states.
//!
//! A confused agent announces its confusion up front ("As a text-based AI, I
//! cannot..."), so matching is restricted to the opening window of a reply,
//! and schema-labeled lines (CAPTION:, NARRATION:, ...) are excluded so that
//! story content mentioning AI never trips the detector.

/// How far into a reply refusal patterns are searched, in characters.
pub const CONFUSION_WINDOW_CHARS: usize = 200;

/// Substrings (matched case-insensitively) that mark a refusal.
pub const DEFAULT_REFUSAL_PATTERNS: &[&str] = &[
    "i cannot",
    "i can't",
    "as an ai",
    "as a text-based ai",
    "i am a text",
    "i'm a text",
    "i am an ai",
    "unable to generate images",
    "cannot generate images",
    "i am not able to",
    "i apologize, but i",
    "i must decline",
];

const SCHEMA_LABELS: [&str; 8] = [
    "SCENE ",
    "CAPTION:",
    "NARRATION:",
    "IMAGE ",
    "MUSIC:",
    "MOOD:",
    "APPROVE",
    "REVISE:",
];

fn is_schema_line(line: &str) -> bool {
    let t = line.trim_start();
    SCHEMA_LABELS.iter().any(|label| t.starts_with(label))
}

/// True iff any pattern matches (case-insensitively) in the free-prose lines
/// of the reply's opening window. Adding a pattern can only flip the result
/// from false to true.
pub fn detect_confusion<S: AsRef<str>>(raw: &str, patterns: &[S]) -> bool {
    let window: String = raw.chars().take(CONFUSION_WINDOW_CHARS).collect();
    let mut prose = String::new();
    for line in window.lines() {
        if !is_schema_line(line) {
            prose.push_str(line);
            prose.push('\n');
        }
    }
    let haystack = prose.to_lowercase();
    patterns.iter().any(|p| {
        let needle = p.as_ref().to_lowercase();
        !needle.is_empty() && haystack.contains(&needle)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn detect(raw: &str) -> bool {
        detect_confusion(raw, DEFAULT_REFUSAL_PATTERNS)
    }

    // Hand-built oracle set: ten refusal replies the detector must flag and
    // ten benign replies it must pass, fixed before the detector was tuned.
    const REFUSALS: [&str; 10] = [
        "As a text-based AI, I cannot generate images.",
        "I cannot continue with this task.",
        "I am a text model and do not produce music.",
        "As an AI language model, I am unable to watch videos.",
        "I'm a text assistant; images are beyond me.",
        "Sorry.\nI am not able to help with that request.",
        "I apologize, but I can't create visual content.",
        "Unfortunately I cannot fulfil the directive as given.",
        "As an AI I must decline to invent scenes.",
        "I can't produce an image prompt because I cannot see.",
    ];

    const BENIGN: [&str; 10] = [
        "SCENE 1:\nCAPTION: Owls at dusk\nNARRATION: Silent wings carry the hunter.",
        "SCENE 1:\nCAPTION: The AI era\nNARRATION: The AI cannot be blamed for the owl's stare.",
        "IMAGE 1: A robot that says it cannot sleep, watercolor",
        "MUSIC: Calm piano as night falls\nMOOD: hushed",
        "APPROVE",
        "REVISE: the narration in scene 2 reads like an AI wrote it",
        "SCENE 1:\nCAPTION: Canals of Venice\nNARRATION: Gondolas drift as a quiet choir hums.",
        "Here is the storyboard.\nSCENE 1:\nCAPTION: First light\nNARRATION: Dawn spills over the valley.",
        "IMAGE 1: A pilot saying i am a teapot, cartoon style",
        "The plan: five scenes, calm pacing, no robots.",
    ];

    #[test]
    fn flags_all_refusals() {
        for r in REFUSALS {
            assert!(detect(r), "should flag: {r:?}");
        }
    }

    #[test]
    fn passes_all_benign_replies() {
        for b in BENIGN {
            assert!(!detect(b), "should pass: {b:?}");
        }
    }

    #[test]
    fn refusal_text_inside_a_narration_body_does_not_trip() {
        // The narration line carries a schema label, so it is excluded even
        // though it sits well inside the opening window.
        let raw = "SCENE 1:\nCAPTION: Night watch\nNARRATION: The AI cannot be blamed for the owl's stare.";
        assert!(!detect(raw));
    }

    #[test]
    fn refusal_beyond_the_window_is_not_scanned() {
        let padding = "word ".repeat(60); // ~300 chars of prose
        let raw = format!("{padding}\nAs an AI, I cannot do this.");
        assert!(!detect(&raw));
    }

    #[test]
    fn empty_pattern_never_matches() {
        assert!(!detect_confusion("anything at all", &[""]));
    }

    #[test]
    fn adding_patterns_is_monotone() {
        let replies: Vec<&str> = REFUSALS.iter().chain(BENIGN.iter()).copied().collect();
        let base: Vec<&str> = DEFAULT_REFUSAL_PATTERNS.to_vec();
        let mut extended = base.clone();
        extended.push("entirely new pattern");
        extended.push("owl");
        for r in &replies {
            if detect_confusion(r, &base) {
                assert!(detect_confusion(r, &extended), "monotonicity broke on {r:?}");
            }
        }
    }
}
