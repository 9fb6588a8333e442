//! Line-oriented parsers and emitters for the agent output schemas.
//!
//! The schemas are deliberately rigid: parsing is deterministic, and a reply
//! either yields a typed artifact or a `SchemaViolation` the orchestrator can
//! quote back to the agent in a re-ask. Parsers never panic on arbitrary
//! input. Lines that carry no recognized marker are ignored so that a
//! chatty preamble does not sink an otherwise well-formed reply.

use thiserror::Error;

use super::{ApprovalVerdict, ImagePromptSet, MusicPrompt, RoleError, Scene, SceneSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemaViolation {
    #[error("expected {expected} {what}, found {found}")]
    Count {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("scene {scene} is missing its {field} line")]
    MissingField { scene: usize, field: &'static str },
    #[error("duplicate {what} entry for index {index}")]
    Duplicate { what: &'static str, index: usize },
    #[error("{what} indices must ascend contiguously from 1, got {found:?}")]
    NonContiguous {
        what: &'static str,
        found: Vec<usize>,
    },
    #[error("{field} line appears before any SCENE header")]
    FieldOutsideScene { field: &'static str },
    #[error("empty {what} for index {index}")]
    EmptyEntry { what: &'static str, index: usize },
    #[error("no MUSIC: line found")]
    MissingMusic,
    #[error("empty MUSIC: description")]
    EmptyMusic,
    #[error("reply is neither APPROVE nor REVISE: <feedback>")]
    UnrecognizedVerdict,
    #[error("REVISE must carry nonempty feedback")]
    EmptyFeedback,
    #[error("malformed artifact: {0}")]
    Structure(String),
}

impl From<RoleError> for SchemaViolation {
    fn from(e: RoleError) -> Self {
        SchemaViolation::Structure(e.to_string())
    }
}

fn parse_index_header(line: &str, keyword: &str) -> Option<usize> {
    let rest = line.trim_start().strip_prefix(keyword)?;
    let rest = rest.strip_suffix(':')?.trim();
    rest.parse().ok()
}

/// Parses the `SCENE <i>:` / `CAPTION:` / `NARRATION:` block layout.
pub fn parse_scene_set(raw: &str, expected_count: usize) -> Result<SceneSet, SchemaViolation> {
    assert!(expected_count >= 1, "expected_count must be at least 1");
    struct Partial {
        index: usize,
        caption: Option<String>,
        narration: Option<String>,
    }

    fn finish(p: Partial) -> Result<Scene, SchemaViolation> {
        let caption = p.caption.ok_or(SchemaViolation::MissingField {
            scene: p.index,
            field: "CAPTION",
        })?;
        let narration = p.narration.ok_or(SchemaViolation::MissingField {
            scene: p.index,
            field: "NARRATION",
        })?;
        Ok(Scene::new(p.index, caption, narration)?)
    }

    let mut scenes: Vec<Scene> = Vec::new();
    let mut current: Option<Partial> = None;
    for line in raw.lines() {
        if let Some(index) = parse_index_header(line, "SCENE ") {
            if let Some(p) = current.take() {
                scenes.push(finish(p)?);
            }
            if scenes.iter().any(|s| s.index == index) {
                return Err(SchemaViolation::Duplicate {
                    what: "scene",
                    index,
                });
            }
            current = Some(Partial {
                index,
                caption: None,
                narration: None,
            });
        } else if let Some(text) = line.trim_start().strip_prefix("CAPTION:") {
            let p = current
                .as_mut()
                .ok_or(SchemaViolation::FieldOutsideScene { field: "CAPTION" })?;
            if p.caption.is_some() {
                return Err(SchemaViolation::Duplicate {
                    what: "CAPTION",
                    index: p.index,
                });
            }
            let text = text.trim();
            if text.is_empty() {
                return Err(SchemaViolation::EmptyEntry {
                    what: "caption",
                    index: p.index,
                });
            }
            p.caption = Some(text.to_string());
        } else if let Some(text) = line.trim_start().strip_prefix("NARRATION:") {
            let p = current
                .as_mut()
                .ok_or(SchemaViolation::FieldOutsideScene { field: "NARRATION" })?;
            if p.narration.is_some() {
                return Err(SchemaViolation::Duplicate {
                    what: "NARRATION",
                    index: p.index,
                });
            }
            let text = text.trim();
            if text.is_empty() {
                return Err(SchemaViolation::EmptyEntry {
                    what: "narration",
                    index: p.index,
                });
            }
            p.narration = Some(text.to_string());
        }
    }
    if let Some(p) = current.take() {
        scenes.push(finish(p)?);
    }
    if scenes.len() != expected_count {
        return Err(SchemaViolation::Count {
            what: "scenes",
            expected: expected_count,
            found: scenes.len(),
        });
    }
    let found: Vec<usize> = scenes.iter().map(|s| s.index).collect();
    if found.iter().enumerate().any(|(i, &idx)| idx != i + 1) {
        return Err(SchemaViolation::NonContiguous {
            what: "scene",
            found,
        });
    }
    Ok(SceneSet::new(scenes)?)
}

/// Parses `IMAGE <i>: <prompt>` lines, one per scene.
pub fn parse_image_prompts(
    raw: &str,
    expected_count: usize,
) -> Result<ImagePromptSet, SchemaViolation> {
    assert!(expected_count >= 1, "expected_count must be at least 1");
    let mut entries: Vec<(usize, String)> = Vec::new();
    for line in raw.lines() {
        let trimmed = line.trim_start();
        let Some(rest) = trimmed.strip_prefix("IMAGE ") else {
            continue;
        };
        let Some((index_part, text)) = rest.split_once(':') else {
            continue;
        };
        let Ok(index) = index_part.trim().parse::<usize>() else {
            continue;
        };
        if entries.iter().any(|(i, _)| *i == index) {
            return Err(SchemaViolation::Duplicate {
                what: "image prompt",
                index,
            });
        }
        let text = text.trim();
        if text.is_empty() {
            return Err(SchemaViolation::EmptyEntry {
                what: "image prompt",
                index,
            });
        }
        entries.push((index, text.to_string()));
    }
    if entries.len() != expected_count {
        return Err(SchemaViolation::Count {
            what: "image prompts",
            expected: expected_count,
            found: entries.len(),
        });
    }
    let found: Vec<usize> = entries.iter().map(|(i, _)| *i).collect();
    if found.iter().enumerate().any(|(i, &idx)| idx != i + 1) {
        return Err(SchemaViolation::NonContiguous {
            what: "image prompt",
            found,
        });
    }
    Ok(ImagePromptSet::new(
        entries.into_iter().map(|(_, t)| t).collect(),
    )?)
}

/// Parses `MUSIC: <description>` with an optional `MOOD: <mood>` line.
pub fn parse_music_prompt(raw: &str) -> Result<MusicPrompt, SchemaViolation> {
    let mut description: Option<String> = None;
    let mut mood = String::new();
    for line in raw.lines() {
        let trimmed = line.trim_start();
        if let Some(text) = trimmed.strip_prefix("MUSIC:") {
            if description.is_some() {
                return Err(SchemaViolation::Duplicate {
                    what: "MUSIC",
                    index: 1,
                });
            }
            let text = text.trim();
            if text.is_empty() {
                return Err(SchemaViolation::EmptyMusic);
            }
            description = Some(text.to_string());
        } else if let Some(text) = trimmed.strip_prefix("MOOD:") {
            mood = text.trim().to_string();
        }
    }
    let description = description.ok_or(SchemaViolation::MissingMusic)?;
    Ok(MusicPrompt::new(description, mood)?)
}

/// Parses the director's ruling: the first non-blank line decides.
pub fn parse_verdict(raw: &str) -> Result<ApprovalVerdict, SchemaViolation> {
    let Some(line) = raw.lines().find(|l| !l.trim().is_empty()) else {
        return Err(SchemaViolation::UnrecognizedVerdict);
    };
    let line = line.trim();
    if line == "APPROVE" {
        return Ok(ApprovalVerdict::Approved);
    }
    if let Some(feedback) = line.strip_prefix("REVISE:") {
        let feedback = feedback.trim();
        if feedback.is_empty() {
            return Err(SchemaViolation::EmptyFeedback);
        }
        return Ok(ApprovalVerdict::RevisionRequested {
            feedback: feedback.to_string(),
        });
    }
    Err(SchemaViolation::UnrecognizedVerdict)
}

/// Canonical emission of a scene set; `parse_scene_set` round-trips it.
pub fn emit_scene_set(set: &SceneSet) -> String {
    let mut out = String::new();
    for scene in set.scenes() {
        out.push_str(&format!(
            "SCENE {}:\nCAPTION: {}\nNARRATION: {}\n",
            scene.index, scene.caption, scene.narration
        ));
    }
    out
}

pub fn emit_image_prompts(set: &ImagePromptSet) -> String {
    set.prompts()
        .iter()
        .enumerate()
        .map(|(i, p)| format!("IMAGE {}: {}\n", i + 1, p))
        .collect()
}

pub fn emit_music_prompt(prompt: &MusicPrompt) -> String {
    let mut out = format!("MUSIC: {}\n", prompt.description);
    if !prompt.mood.is_empty() {
        out.push_str(&format!("MOOD: {}\n", prompt.mood));
    }
    out
}

pub fn emit_verdict(verdict: &ApprovalVerdict) -> String {
    match verdict {
        ApprovalVerdict::Approved => "APPROVE\n".to_string(),
        ApprovalVerdict::RevisionRequested { feedback } => format!("REVISE: {feedback}\n"),
    }
}
