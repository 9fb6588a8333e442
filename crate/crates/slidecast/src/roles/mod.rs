//! Role specialization: turning one general chat backend into four
//! specialized agents via structured system prompts, plus the typed
//! artifacts those agents produce.

mod confusion;
mod parse;
mod spec;

pub use confusion::{detect_confusion, DEFAULT_REFUSAL_PATTERNS};
pub use parse::{
    emit_image_prompts, emit_music_prompt, emit_scene_set, emit_verdict, parse_image_prompts,
    parse_music_prompt, parse_scene_set, parse_verdict, SchemaViolation,
};
pub use spec::{load_role_spec_file, parse_role_spec_text, RoleSpecError, RoleSpecSet};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleId {
    Director,
    Editor,
    Painter,
    Composer,
}

impl RoleId {
    pub const ALL: [RoleId; 4] = [
        RoleId::Director,
        RoleId::Editor,
        RoleId::Painter,
        RoleId::Composer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleId::Director => "director",
            RoleId::Editor => "editor",
            RoleId::Painter => "painter",
            RoleId::Composer => "composer",
        }
    }
}

impl fmt::Display for RoleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoleId {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, ModelError> {
        RoleId::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| ModelError::UnknownLabel(s.to_string()))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RoleError {
    #[error("role spec section {section:?} for {role} is empty")]
    EmptySection { role: RoleId, section: &'static str },
    #[error("directive must come from the director, got {0}")]
    DirectiveNotFromDirector(RoleId),
    #[error("the director cannot receive a directive")]
    DirectiveToDirector,
    #[error("directive content is empty")]
    EmptyDirective,
    #[error("scene {index} has an empty or multi-line {field}")]
    BadSceneField { index: usize, field: &'static str },
    #[error("scene indices must run 1..={expected}, got {found:?}")]
    BadSceneIndices { expected: usize, found: Vec<usize> },
    #[error("image prompt {index} is empty or multi-line")]
    BadImagePrompt { index: usize },
    #[error("music description is empty")]
    EmptyMusicDescription,
    #[error("revision feedback is empty")]
    EmptyFeedback,
}

/// The three prompt sections that specialize a role, with the output schema
/// embedded in the I/O requirements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleSpec {
    pub role: RoleId,
    pub task_objectives: String,
    pub io_requirements: String,
    pub performance_standards: String,
}

impl RoleSpec {
    pub fn new(
        role: RoleId,
        task_objectives: impl Into<String>,
        io_requirements: impl Into<String>,
        performance_standards: impl Into<String>,
    ) -> Result<Self, RoleError> {
        let spec = RoleSpec {
            role,
            task_objectives: task_objectives.into(),
            io_requirements: io_requirements.into(),
            performance_standards: performance_standards.into(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), RoleError> {
        for (section, body) in [
            ("Task Objectives", &self.task_objectives),
            ("Input and Output Requirements", &self.io_requirements),
            ("Performance Standards", &self.performance_standards),
        ] {
            if body.trim().is_empty() {
                return Err(RoleError::EmptySection {
                    role: self.role,
                    section,
                });
            }
        }
        Ok(())
    }
}

pub const SECTION_TASK_OBJECTIVES: &str = "## Task Objectives";
pub const SECTION_IO_REQUIREMENTS: &str = "## Input and Output Requirements";
pub const SECTION_PERFORMANCE_STANDARDS: &str = "## Performance Standards";
pub const SECTION_PROJECT_CONTEXT: &str = "## Project Context";

/// Deterministically assembles the system prompt for a role: the three
/// labeled sections in order, followed by the project context when present.
pub fn build_system_prompt(spec: &RoleSpec, project_context: &str) -> String {
    let mut out = format!(
        "You are the {} agent on a slideshow video production team.\n\n\
         {SECTION_TASK_OBJECTIVES}\n{}\n\n\
         {SECTION_IO_REQUIREMENTS}\n{}\n\n\
         {SECTION_PERFORMANCE_STANDARDS}\n{}\n",
        spec.role,
        spec.task_objectives.trim(),
        spec.io_requirements.trim(),
        spec.performance_standards.trim(),
    );
    if !project_context.trim().is_empty() {
        out.push_str(&format!(
            "\n{SECTION_PROJECT_CONTEXT}\n{}\n",
            project_context.trim()
        ));
    }
    out
}

/// A director-authored instruction to one downstream agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Directive {
    pub from: RoleId,
    pub to: RoleId,
    pub content: String,
}

impl Directive {
    pub fn new(from: RoleId, to: RoleId, content: impl Into<String>) -> Result<Self, RoleError> {
        if from != RoleId::Director {
            return Err(RoleError::DirectiveNotFromDirector(from));
        }
        if to == RoleId::Director {
            return Err(RoleError::DirectiveToDirector);
        }
        let content = content.into();
        if content.trim().is_empty() {
            return Err(RoleError::EmptyDirective);
        }
        Ok(Directive { from, to, content })
    }
}

/// One scene: an on-screen caption plus the narration voiced over it.
/// Both are single nonempty lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scene {
    pub index: usize,
    pub caption: String,
    pub narration: String,
}

impl Scene {
    pub fn new(
        index: usize,
        caption: impl Into<String>,
        narration: impl Into<String>,
    ) -> Result<Self, RoleError> {
        let caption = caption.into();
        let narration = narration.into();
        for (field, value) in [("caption", &caption), ("narration", &narration)] {
            if value.trim().is_empty() || value.contains('\n') {
                return Err(RoleError::BadSceneField { index, field });
            }
        }
        Ok(Scene {
            index,
            caption,
            narration,
        })
    }
}

/// The approved storyboard: scenes indexed contiguously from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Scene>", into = "Vec<Scene>")]
pub struct SceneSet {
    scenes: Vec<Scene>,
}

impl SceneSet {
    pub fn new(scenes: Vec<Scene>) -> Result<Self, RoleError> {
        let found: Vec<usize> = scenes.iter().map(|s| s.index).collect();
        let expected = scenes.len();
        if found.iter().enumerate().any(|(i, &idx)| idx != i + 1) || expected == 0 {
            return Err(RoleError::BadSceneIndices { expected, found });
        }
        Ok(SceneSet { scenes })
    }

    pub fn scenes(&self) -> &[Scene] {
        &self.scenes
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }

    pub fn captions(&self) -> impl Iterator<Item = &str> {
        self.scenes.iter().map(|s| s.caption.as_str())
    }
}

impl TryFrom<Vec<Scene>> for SceneSet {
    type Error = RoleError;
    fn try_from(scenes: Vec<Scene>) -> Result<Self, RoleError> {
        SceneSet::new(scenes)
    }
}

impl From<SceneSet> for Vec<Scene> {
    fn from(s: SceneSet) -> Vec<Scene> {
        s.scenes
    }
}

/// One image prompt per scene, same order as the scene set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ImagePromptSet {
    prompts: Vec<String>,
}

impl ImagePromptSet {
    pub fn new(prompts: Vec<String>) -> Result<Self, RoleError> {
        for (i, p) in prompts.iter().enumerate() {
            if p.trim().is_empty() || p.contains('\n') {
                return Err(RoleError::BadImagePrompt { index: i + 1 });
            }
        }
        Ok(ImagePromptSet { prompts })
    }

    pub fn prompts(&self) -> &[String] {
        &self.prompts
    }

    pub fn len(&self) -> usize {
        self.prompts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prompts.is_empty()
    }
}

impl TryFrom<Vec<String>> for ImagePromptSet {
    type Error = RoleError;
    fn try_from(prompts: Vec<String>) -> Result<Self, RoleError> {
        ImagePromptSet::new(prompts)
    }
}

impl From<ImagePromptSet> for Vec<String> {
    fn from(s: ImagePromptSet) -> Vec<String> {
        s.prompts
    }
}

/// The single background-music request covering the whole timeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MusicPrompt {
    pub description: String,
    pub mood: String,
}

impl MusicPrompt {
    pub fn new(description: impl Into<String>, mood: impl Into<String>) -> Result<Self, RoleError> {
        let description = description.into();
        if description.trim().is_empty() {
            return Err(RoleError::EmptyMusicDescription);
        }
        Ok(MusicPrompt {
            description,
            mood: mood.into(),
        })
    }
}

/// The director's ruling on a draft.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ApprovalVerdict {
    Approved,
    RevisionRequested { feedback: String },
}

impl ApprovalVerdict {
    pub fn revision(feedback: impl Into<String>) -> Result<Self, RoleError> {
        let feedback = feedback.into();
        if feedback.trim().is_empty() {
            return Err(RoleError::EmptyFeedback);
        }
        Ok(ApprovalVerdict::RevisionRequested { feedback })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn editor_spec() -> RoleSpec {
        RoleSpecSet::bundled().editor.clone()
    }

    #[test]
    fn system_prompt_has_each_label_exactly_once() {
        let prompt = build_system_prompt(&editor_spec(), "");
        for label in [
            SECTION_TASK_OBJECTIVES,
            SECTION_IO_REQUIREMENTS,
            SECTION_PERFORMANCE_STANDARDS,
        ] {
            assert_eq!(prompt.matches(label).count(), 1, "label {label}");
        }
        assert_eq!(prompt.matches(SECTION_PROJECT_CONTEXT).count(), 0);
    }

    #[test]
    fn system_prompt_is_deterministic() {
        let a = build_system_prompt(&editor_spec(), "a quiet nature film");
        let b = build_system_prompt(&editor_spec(), "a quiet nature film");
        assert_eq!(a, b);
    }

    #[test]
    fn painter_prompt_embeds_io_schema_verbatim() {
        let painter = RoleSpecSet::bundled().painter.clone();
        let prompt = build_system_prompt(&painter, "ctx");
        assert!(prompt.contains(painter.io_requirements.trim()));
        assert!(prompt.contains(SECTION_PROJECT_CONTEXT));
    }

    #[test]
    fn sections_come_in_order_then_context() {
        let prompt = build_system_prompt(&editor_spec(), "ctx");
        let pos = |label: &str| prompt.find(label).unwrap();
        assert!(pos(SECTION_TASK_OBJECTIVES) < pos(SECTION_IO_REQUIREMENTS));
        assert!(pos(SECTION_IO_REQUIREMENTS) < pos(SECTION_PERFORMANCE_STANDARDS));
        assert!(pos(SECTION_PERFORMANCE_STANDARDS) < pos(SECTION_PROJECT_CONTEXT));
    }

    #[test]
    fn directive_must_flow_from_director() {
        assert!(Directive::new(RoleId::Editor, RoleId::Painter, "x").is_err());
        assert!(Directive::new(RoleId::Director, RoleId::Director, "x").is_err());
        assert!(Directive::new(RoleId::Director, RoleId::Editor, " ").is_err());
        assert!(Directive::new(RoleId::Director, RoleId::Composer, "compose").is_ok());
    }

    #[test]
    fn scene_set_requires_contiguous_one_based_indices() {
        let scenes = vec![
            Scene::new(1, "a", "b").unwrap(),
            Scene::new(3, "c", "d").unwrap(),
        ];
        assert!(SceneSet::new(scenes).is_err());
        assert!(SceneSet::new(vec![]).is_err());
    }

    #[test]
    fn empty_role_spec_section_is_rejected() {
        assert!(RoleSpec::new(RoleId::Editor, "goals", " ", "standards").is_err());
    }
}
