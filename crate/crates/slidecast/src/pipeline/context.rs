//! Builds each agent's request from the memory stream.
//!
//! The rules are fixed: the editor sees its directive plus its own drafts
//! and all director feedback in seq order; the painter and the composer see
//! their directive, which embeds the approved caption list byte-identically
//! for both; the director sees the user prompt and whatever is pending —
//! either a draft to review or the next directive to write. The user's text
//! never enters any non-director request.

use thiserror::Error;

use super::memory::{ArtifactKind, MemoryStream};
use crate::backends::ChatMessage;
use crate::roles::{build_system_prompt, RoleId, RoleSpecSet, SceneSet};

pub const PROJECT_CONTEXT: &str =
    "A short narrated slideshow video assembled from still images, spoken narration, and one background music cue.";

pub const USER_PROMPT_HEADER: &str = "USER PROMPT:\n";
pub const DIRECTIVE_HEADER: &str = "DIRECTIVE:\n";
pub const FEEDBACK_HEADER: &str = "DIRECTOR FEEDBACK:\n";
pub const REVIEW_HEADER: &str = "ARTIFACT UNDER REVIEW";
pub const CAPTION_BLOCK_HEADER: &str = "APPROVED CAPTIONS:";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContextError {
    #[error("missing upstream artifact for {role}: {missing}")]
    MissingArtifact { role: RoleId, missing: &'static str },
}

/// Canonical rendering of the approved captions. The painter and composer
/// requests embed these exact bytes.
pub fn caption_block(scenes: &SceneSet) -> String {
    let mut out = format!("{CAPTION_BLOCK_HEADER}\n");
    for scene in scenes.scenes() {
        out.push_str(&format!("{}. {}\n", scene.index, scene.caption));
    }
    out
}

/// What the director is being asked to do next, fully determined by memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DirectorTask {
    DirectiveFor(RoleId),
    Review(ArtifactKind),
}

/// The artifact draft awaiting review: the producer's latest reply that no
/// verdict has adjudicated yet.
pub fn pending_review(memory: &MemoryStream) -> Option<(ArtifactKind, u64, String)> {
    for kind in [
        ArtifactKind::SceneSet,
        ArtifactKind::ImagePrompts,
        ArtifactKind::MusicPrompt,
    ] {
        if memory.approval_seq(kind).is_some() {
            continue;
        }
        let last_adjudicated = memory.feedback_for(kind).map(|f| f.seq).max().unwrap_or(0);
        if let Some(reply) = memory.replies_from(kind.producer()).last() {
            if reply.seq > last_adjudicated {
                return Some((kind, reply.seq, reply.content.clone()));
            }
        }
        return None;
    }
    None
}

/// The director's next task given memory state.
pub fn director_task(memory: &MemoryStream) -> Option<DirectorTask> {
    if let Some((kind, _, _)) = pending_review(memory) {
        return Some(DirectorTask::Review(kind));
    }
    if memory.directive_for(RoleId::Editor).is_none() {
        return Some(DirectorTask::DirectiveFor(RoleId::Editor));
    }
    if memory.approved_scene_set().is_some() && memory.directive_for(RoleId::Painter).is_none() {
        return Some(DirectorTask::DirectiveFor(RoleId::Painter));
    }
    if memory.approved_image_prompts().is_some()
        && memory.directive_for(RoleId::Composer).is_none()
    {
        return Some(DirectorTask::DirectiveFor(RoleId::Composer));
    }
    None
}

fn producer_context(
    memory: &MemoryStream,
    role: RoleId,
    artifact: ArtifactKind,
    system_prompt: String,
    instruction: String,
) -> Result<Vec<ChatMessage>, ContextError> {
    let Some((directive, _)) = memory.directive_for(role) else {
        return Err(ContextError::MissingArtifact {
            role,
            missing: "directive",
        });
    };
    let mut messages = vec![
        ChatMessage::system(system_prompt),
        ChatMessage::user(format!("{DIRECTIVE_HEADER}{}", directive.content)),
    ];
    // Interleave this agent's drafts with the director's feedback in the
    // order they happened.
    let mut events: Vec<(u64, ChatMessage)> = Vec::new();
    for reply in memory.replies_from(role) {
        events.push((reply.seq, ChatMessage::assistant(reply.content.clone())));
    }
    for note in memory.feedback_for(artifact) {
        events.push((
            note.seq,
            ChatMessage::user(format!("{FEEDBACK_HEADER}{}", note.text)),
        ));
    }
    events.sort_by_key(|(seq, _)| *seq);
    messages.extend(events.into_iter().map(|(_, m)| m));
    messages.push(ChatMessage::user(instruction));
    Ok(messages)
}

/// Renders the next request for `for_role` from memory alone; deterministic
/// for fixed memory.
pub fn render_context(
    memory: &MemoryStream,
    for_role: RoleId,
    specs: &RoleSpecSet,
    scene_count: usize,
) -> Result<Vec<ChatMessage>, ContextError> {
    let system_prompt = build_system_prompt(specs.for_role(for_role), PROJECT_CONTEXT);
    match for_role {
        RoleId::Editor => {
            let has_feedback = memory.feedback_for(ArtifactKind::SceneSet).next().is_some();
            let instruction = if has_feedback {
                format!(
                    "Revise your previous draft following the director's feedback. \
                     Produce exactly {scene_count} scenes in the required output format."
                )
            } else {
                format!("Produce exactly {scene_count} scenes in the required output format.")
            };
            producer_context(memory, RoleId::Editor, ArtifactKind::SceneSet, system_prompt, instruction)
        }
        RoleId::Painter => {
            if memory.approved_scene_set().is_none() {
                return Err(ContextError::MissingArtifact {
                    role: RoleId::Painter,
                    missing: "approved scene set",
                });
            }
            let instruction = format!(
                "Provide exactly {scene_count} image prompts in the required output format."
            );
            producer_context(memory, RoleId::Painter, ArtifactKind::ImagePrompts, system_prompt, instruction)
        }
        RoleId::Composer => {
            if memory.approved_scene_set().is_none() {
                return Err(ContextError::MissingArtifact {
                    role: RoleId::Composer,
                    missing: "approved scene set",
                });
            }
            let instruction =
                "Provide the music prompt in the required output format.".to_string();
            producer_context(memory, RoleId::Composer, ArtifactKind::MusicPrompt, system_prompt, instruction)
        }
        RoleId::Director => {
            let task = director_task(memory).ok_or(ContextError::MissingArtifact {
                role: RoleId::Director,
                missing: "pending task",
            })?;
            let mut messages = vec![
                ChatMessage::system(system_prompt),
                ChatMessage::user(format!(
                    "{USER_PROMPT_HEADER}{}",
                    memory.user_prompt().text()
                )),
            ];
            match task {
                DirectorTask::Review(kind) => {
                    let (_, _, draft) = pending_review(memory).expect("task implies a draft");
                    messages.push(ChatMessage::user(format!(
                        "{REVIEW_HEADER} ({}):\n{draft}\n\nReview the draft above. Reply APPROVE, or REVISE: followed by one line of feedback.",
                        kind.review_marker()
                    )));
                }
                DirectorTask::DirectiveFor(role) => {
                    let mut ask = String::new();
                    if role != RoleId::Editor {
                        let scenes = memory.approved_scene_set().ok_or(
                            ContextError::MissingArtifact {
                                role: RoleId::Director,
                                missing: "approved scene set",
                            },
                        )?;
                        ask.push_str(&caption_block(scenes));
                        ask.push('\n');
                    }
                    ask.push_str(&format!(
                        "Write a directive for the {role} agent. Reply with the directive text only."
                    ));
                    messages.push(ChatMessage::user(ask));
                }
            }
            Ok(messages)
        }
    }
}
