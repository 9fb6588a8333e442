//! Loading role specs from human-editable text files.
//!
//! One file per role, three required `# `-headed sections. The bundled
//! defaults are compiled in; a config may point at a directory of
//! replacement files.

use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{RoleId, RoleSpec};

#[derive(Debug, Error)]
pub enum RoleSpecError {
    #[error("role spec {file:?} is missing its {section:?} section")]
    MissingSection { file: String, section: &'static str },
    #[error("role spec {file:?} has an empty {section:?} section")]
    EmptySection { file: String, section: &'static str },
    #[error("failed to read role spec {file:?}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
}

const SECTION_TITLES: [&str; 3] = [
    "Task Objectives",
    "Input and Output Requirements",
    "Performance Standards",
];

/// Parses the `# Section` / body layout of a role spec file.
pub fn parse_role_spec_text(
    role: RoleId,
    text: &str,
    file: &str,
) -> Result<RoleSpec, RoleSpecError> {
    let mut sections: Vec<(String, String)> = Vec::new();
    let mut current: Option<(String, String)> = None;
    for line in text.lines() {
        if let Some(title) = line.strip_prefix("# ") {
            if let Some(done) = current.take() {
                sections.push(done);
            }
            current = Some((title.trim().to_string(), String::new()));
        } else if let Some((_, body)) = current.as_mut() {
            body.push_str(line);
            body.push('\n');
        }
    }
    if let Some(done) = current.take() {
        sections.push(done);
    }

    let mut find = |title: &'static str| -> Result<String, RoleSpecError> {
        let body = sections
            .iter()
            .find(|(t, _)| t == title)
            .map(|(_, b)| b.trim().to_string())
            .ok_or(RoleSpecError::MissingSection {
                file: file.to_string(),
                section: title,
            })?;
        if body.is_empty() {
            return Err(RoleSpecError::EmptySection {
                file: file.to_string(),
                section: title,
            });
        }
        Ok(body)
    };

    let task_objectives = find(SECTION_TITLES[0])?;
    let io_requirements = find(SECTION_TITLES[1])?;
    let performance_standards = find(SECTION_TITLES[2])?;
    Ok(RoleSpec {
        role,
        task_objectives,
        io_requirements,
        performance_standards,
    })
}

pub fn load_role_spec_file(role: RoleId, path: &Path) -> Result<RoleSpec, RoleSpecError> {
    let file = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| RoleSpecError::Io {
        file: file.clone(),
        source,
    })?;
    parse_role_spec_text(role, &text, &file)
}

/// The four specs a pipeline run needs.
#[derive(Debug, Clone)]
pub struct RoleSpecSet {
    pub director: RoleSpec,
    pub editor: RoleSpec,
    pub painter: RoleSpec,
    pub composer: RoleSpec,
}

impl RoleSpecSet {
    /// The compiled-in defaults shipped with the crate.
    pub fn bundled() -> Self {
        let load = |role: RoleId, text: &str| {
            parse_role_spec_text(role, text, &format!("bundled:{role}"))
                .expect("bundled role specs are well-formed")
        };
        RoleSpecSet {
            director: load(
                RoleId::Director,
                include_str!("../../data/roles/director.md"),
            ),
            editor: load(RoleId::Editor, include_str!("../../data/roles/editor.md")),
            painter: load(RoleId::Painter, include_str!("../../data/roles/painter.md")),
            composer: load(
                RoleId::Composer,
                include_str!("../../data/roles/composer.md"),
            ),
        }
    }

    /// Loads `<role>.md` for each role from a directory.
    pub fn load_dir(dir: &Path) -> Result<Self, RoleSpecError> {
        let file = |role: RoleId| -> PathBuf { dir.join(format!("{role}.md")) };
        Ok(RoleSpecSet {
            director: load_role_spec_file(RoleId::Director, &file(RoleId::Director))?,
            editor: load_role_spec_file(RoleId::Editor, &file(RoleId::Editor))?,
            painter: load_role_spec_file(RoleId::Painter, &file(RoleId::Painter))?,
            composer: load_role_spec_file(RoleId::Composer, &file(RoleId::Composer))?,
        })
    }

    pub fn for_role(&self, role: RoleId) -> &RoleSpec {
        match role {
            RoleId::Director => &self.director,
            RoleId::Editor => &self.editor,
            RoleId::Painter => &self.painter,
            RoleId::Composer => &self.composer,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_specs_load_and_validate() {
        let set = RoleSpecSet::bundled();
        for role in RoleId::ALL {
            assert!(set.for_role(role).validate().is_ok(), "{role}");
        }
    }

    #[test]
    fn missing_section_is_reported_with_file_and_section() {
        let text = "# Task Objectives\ngoals\n# Input and Output Requirements\nio\n";
        let err = parse_role_spec_text(RoleId::Painter, text, "painter.md").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("painter.md"));
        assert!(msg.contains("Performance Standards"));
    }

    #[test]
    fn empty_section_is_rejected() {
        let text = "# Task Objectives\ngoals\n# Input and Output Requirements\n\n# Performance Standards\nok\n";
        let err = parse_role_spec_text(RoleId::Editor, text, "editor.md").unwrap_err();
        assert!(matches!(err, RoleSpecError::EmptySection { .. }));
    }

    #[test]
    fn unknown_sections_are_ignored() {
        let text = "# Notes\nscratch\n# Task Objectives\ngoals\n# Input and Output Requirements\nio\n# Performance Standards\nstandards\n";
        let spec = parse_role_spec_text(RoleId::Composer, text, "composer.md").unwrap();
        assert_eq!(spec.task_objectives, "goals");
    }
}
