//! Seeded deterministic mock backends with failure injection.
//!
//! For a fixed (seed, run_id, request sequence) every reply is byte-identical
//! across processes and platforms: per-run randomness comes from a ChaCha
//! stream keyed by SHA-256 of (seed, run_id), reply content is a pure
//! function of the request plus per-run counters, and token usage is a pure
//! function of content.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    sha256_hex, BackendError, BackendSet, ChatRequest, ChatResponse, ChatUsage, MediaAsset,
    MediaKind, RunBackends,
};
use crate::roles::{MusicPrompt, RoleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedVerdict {
    Approve,
    Revise,
}

/// Scripted director verdicts per artifact, consumed in order; once a script
/// runs out the director approves.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerdictScript {
    pub scene_set: Vec<ScriptedVerdict>,
    pub image_prompts: Vec<ScriptedVerdict>,
    pub music_prompt: Vec<ScriptedVerdict>,
}

/// Everything the mock backends need: the seed and the failure injection
/// knobs. Probabilities are per-draw; see each field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockScript {
    pub seed: u64,
    pub verdicts: VerdictScript,
    /// Per-attempt probability that a backend call fails with a transport
    /// error (retries draw again).
    pub p_transport_error: f64,
    /// Per-run probability that the editor slips into a refusal state and
    /// keeps refusing through every re-ask.
    pub p_refusal: f64,
    /// Per-run probability that the director never approves anything.
    pub p_never_approve: f64,
    /// Forces the director to reject every draft (overrides scripts).
    pub never_approve: bool,
    /// Per-image probability that the moderation flag comes back set.
    pub p_moderation: f64,
    /// Makes the painter emit near-identical prompts for every scene.
    pub repetitive_images: bool,
}

impl Default for MockScript {
    fn default() -> Self {
        MockScript {
            seed: 0,
            verdicts: VerdictScript::default(),
            p_transport_error: 0.0,
            p_refusal: 0.0,
            p_never_approve: 0.0,
            never_approve: false,
            p_moderation: 0.0,
            repetitive_images: false,
        }
    }
}

impl MockScript {
    pub fn seeded(seed: u64) -> Self {
        MockScript {
            seed,
            ..MockScript::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, p) in [
            ("p_transport_error", self.p_transport_error),
            ("p_refusal", self.p_refusal),
            ("p_never_approve", self.p_never_approve),
            ("p_moderation", self.p_moderation),
        ] {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(format!("mock {name} must be in [0, 1], got {p}"));
            }
        }
        Ok(())
    }
}

pub struct MockBackendSet {
    script: MockScript,
}

impl MockBackendSet {
    pub fn new(script: MockScript) -> Self {
        MockBackendSet { script }
    }
}

impl BackendSet for MockBackendSet {
    fn for_run(&self, run_id: &str) -> Box<dyn RunBackends> {
        Box::new(MockRunBackends::new(self.script.clone(), run_id))
    }

    fn mode(&self) -> &'static str {
        "mock"
    }
}

pub(crate) fn derive_run_seed(seed: u64, run_id: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(run_id.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

struct MockRunBackends {
    script: MockScript,
    rng: ChaCha8Rng,
    refuse_run: bool,
    stubborn_run: bool,
    verdict_cursor: [usize; 3],
}

const REFUSAL_REPLY: &str =
    "I am a text-based assistant, and as an AI I cannot take on this task. \
     I am unable to continue with the directive as written.";

fn approx_tokens(text: &str) -> u64 {
    (text.chars().count() as u64 + 3) / 4
}

fn tag_of(text: &str) -> String {
    sha256_hex(text.as_bytes())[..8].to_string()
}

/// Finds the project tag a directive carries ("... project <tag> ...").
fn extract_tag(request: &ChatRequest) -> String {
    for message in &request.messages {
        if let Some(pos) = message.content.find("project ") {
            let rest = &message.content[pos + "project ".len()..];
            let tag: String = rest
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric())
                .collect();
            if !tag.is_empty() {
                return tag;
            }
        }
    }
    "untitled".to_string()
}

/// Finds "exactly <n>" in the request, taking the last occurrence.
fn extract_count(request: &ChatRequest) -> Option<usize> {
    let mut found = None;
    for message in &request.messages {
        let mut haystack = message.content.as_str();
        while let Some(pos) = haystack.find("exactly ") {
            let rest = &haystack[pos + "exactly ".len()..];
            let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
            if let Ok(n) = digits.parse::<usize>() {
                found = Some(n);
            }
            haystack = rest;
        }
    }
    found
}

fn assistant_turns(request: &ChatRequest) -> usize {
    request
        .messages
        .iter()
        .filter(|m| m.role == super::ChatRole::Assistant)
        .count()
}

const MOCK_CAPTIONS: [&str; 8] = [
    "Dawn breaks",
    "The journey begins",
    "A quiet turn",
    "Rising action",
    "The long view",
    "Homeward light",
    "Night settles",
    "A new horizon",
];

const MOCK_NARRATIONS: [&str; 8] = [
    "The story opens gently, placing us in the scene while the first image settles and holds the eye.",
    "Movement enters the frame as the subject pushes forward, and the stakes of the journey become clear.",
    "A pause in the action lets a small detail carry the weight of the whole story for a moment.",
    "Momentum builds steadily now, each beat answering the one before it and promising something larger ahead.",
    "From a wider vantage the pattern shows itself, and what seemed scattered resolves into a single line.",
    "The light turns warm as the subject heads back toward familiar ground, changed by the distance travelled.",
    "Evening settles over the scene and the pace slows, leaving room for the quiet facts to land.",
    "The final frame looks out rather than back, and the story closes on an open horizon.",
];

const MOCK_SETTINGS: [&str; 8] = [
    "a misty valley at first light",
    "a sunlit square in an old town",
    "a narrow river bending through pines",
    "a ridge line under racing clouds",
    "a lantern-lit harbor at dusk",
    "a meadow heavy with summer",
    "a coastal road after rain",
    "a high plateau under stars",
];

impl MockRunBackends {
    fn new(script: MockScript, run_id: &str) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_run_seed(script.seed, run_id));
        let refuse_run = rng.gen::<f64>() < script.p_refusal;
        let stubborn_run = rng.gen::<f64>() < script.p_never_approve;
        MockRunBackends {
            script,
            rng,
            refuse_run,
            stubborn_run,
            verdict_cursor: [0; 3],
        }
    }

    fn draw_transport_failure(&mut self) -> Result<(), BackendError> {
        if self.rng.gen::<f64>() < self.script.p_transport_error {
            return Err(BackendError::Transport(
                "injected transport error".to_string(),
            ));
        }
        Ok(())
    }

    /// Synthetic latency in whole centiseconds so exported seconds with two
    /// decimals re-import losslessly.
    fn draw_latency_ms(&mut self) -> u64 {
        self.rng.gen_range(5..=200) * 10
    }

    fn verdict_reply(&mut self, artifact_slot: usize) -> String {
        if self.script.never_approve || self.stubborn_run {
            return "REVISE: not there yet; rework the draft from the top.".to_string();
        }
        let script = match artifact_slot {
            0 => &self.script.verdicts.scene_set,
            1 => &self.script.verdicts.image_prompts,
            _ => &self.script.verdicts.music_prompt,
        };
        let cursor = self.verdict_cursor[artifact_slot];
        self.verdict_cursor[artifact_slot] += 1;
        match script.get(cursor) {
            Some(ScriptedVerdict::Revise) => format!(
                "REVISE: tighten the pacing and vary the imagery (round {}).",
                cursor + 1
            ),
            _ => "APPROVE".to_string(),
        }
    }

    fn director_reply(&mut self, request: &ChatRequest) -> String {
        let flattened = request.flatten();
        if flattened.contains("ARTIFACT UNDER REVIEW") {
            let slot = if flattened.contains("(scene set)") {
                0
            } else if flattened.contains("(image prompts)") {
                1
            } else {
                2
            };
            return self.verdict_reply(slot);
        }
        let wants = flattened.to_lowercase();
        let tag = request
            .messages
            .iter()
            .find_map(|m| {
                m.content
                    .split_once("USER PROMPT:\n")
                    .map(|(_, text)| tag_of(text.trim()))
            })
            .unwrap_or_else(|| "untitled".to_string());
        if wants.contains("directive for the editor") {
            format!(
                "Develop the storyboard for project {tag}: set a clear arc, keep captions tight, and let the narration breathe."
            )
        } else if wants.contains("directive for the painter") {
            format!(
                "Create one still image prompt per approved caption for project {tag}, holding a single consistent style."
            )
        } else {
            format!(
                "Propose one background music cue for project {tag} that supports every scene."
            )
        }
    }

    fn editor_reply(&mut self, request: &ChatRequest) -> String {
        if self.refuse_run {
            return REFUSAL_REPLY.to_string();
        }
        let n = extract_count(request).unwrap_or(5);
        let take = assistant_turns(request) + 1;
        let mut out = String::new();
        for i in 1..=n {
            let slot = (i - 1) % MOCK_CAPTIONS.len();
            let cycle = (i - 1) / MOCK_CAPTIONS.len() + 1;
            let mut caption = MOCK_CAPTIONS[slot].to_string();
            if cycle > 1 {
                caption.push_str(&format!(" (part {cycle})"));
            }
            if take > 1 {
                caption.push_str(&format!(" (take {take})"));
            }
            let mut narration = MOCK_NARRATIONS[slot].to_string();
            if take > 1 {
                narration.push_str(&format!(" Revised take {take} sharpens the pacing."));
            }
            out.push_str(&format!(
                "SCENE {i}:\nCAPTION: {caption}\nNARRATION: {narration}\n"
            ));
        }
        out
    }

    fn painter_reply(&mut self, request: &ChatRequest) -> String {
        let n = extract_count(request).unwrap_or(5);
        let take = assistant_turns(request) + 1;
        let tag = extract_tag(request);
        let mut out = String::new();
        for i in 1..=n {
            let mut line = if self.script.repetitive_images {
                format!("IMAGE {i}: Project {tag} still frame, soft painterly style")
            } else {
                let setting = MOCK_SETTINGS[(i - 1) % MOCK_SETTINGS.len()];
                format!("IMAGE {i}: Project {tag} still frame {i}, {setting}, soft painterly style")
            };
            if take > 1 {
                line.push_str(&format!(", take {take}"));
            }
            line.push('\n');
            out.push_str(&line);
        }
        out
    }

    fn composer_reply(&mut self, request: &ChatRequest) -> String {
        let take = assistant_turns(request) + 1;
        let tag = extract_tag(request);
        let mut description = format!(
            "A gentle underscore for project {tag}: felt piano and soft strings at a walking pace"
        );
        if take > 1 {
            description.push_str(&format!(" (take {take})"));
        }
        format!("MUSIC: {description}\nMOOD: warm\n")
    }

    fn role_of(request: &ChatRequest) -> RoleId {
        let system = request
            .messages
            .first()
            .map(|m| m.content.as_str())
            .unwrap_or("");
        for role in RoleId::ALL {
            if system.contains(&format!("the {role} agent")) {
                return role;
            }
        }
        RoleId::Director
    }
}

impl RunBackends for MockRunBackends {
    fn chat(&mut self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        self.draw_transport_failure()?;
        let latency_ms = self.draw_latency_ms();
        let content = match Self::role_of(request) {
            RoleId::Director => self.director_reply(request),
            RoleId::Editor => self.editor_reply(request),
            RoleId::Painter => self.painter_reply(request),
            RoleId::Composer => self.composer_reply(request),
        };
        Ok(ChatResponse {
            usage: ChatUsage {
                prompt_tokens: approx_tokens(&request.flatten()),
                completion_tokens: approx_tokens(&content),
            },
            content,
            latency_ms,
        })
    }

    fn generate_image(&mut self, prompt: &str) -> Result<MediaAsset, BackendError> {
        if prompt.trim().is_empty() {
            return Err(BackendError::InvalidRequest(
                "image prompt is empty".to_string(),
            ));
        }
        self.draw_transport_failure()?;
        let latency_ms = self.draw_latency_ms();
        let flagged = self.rng.gen::<f64>() < self.script.p_moderation;
        let bytes = format!("mock-image:{}\n", sha256_hex(prompt.as_bytes())).into_bytes();
        Ok(MediaAsset::image(bytes, flagged, latency_ms))
    }

    fn synthesize_speech(&mut self, text: &str) -> Result<MediaAsset, BackendError> {
        if text.trim().is_empty() {
            return Err(BackendError::InvalidRequest(
                "narration text is empty".to_string(),
            ));
        }
        self.draw_transport_failure()?;
        let latency_ms = self.draw_latency_ms();
        // Pacing model: 2.5 words per second, i.e. 400 ms per word exactly.
        let words = text.split_whitespace().count() as u64;
        let duration_ms = words * 400;
        let bytes = format!("mock-narration:{}\n", sha256_hex(text.as_bytes())).into_bytes();
        MediaAsset::audio(MediaKind::Narration, bytes, duration_ms, latency_ms)
    }

    fn compose_music(
        &mut self,
        prompt: &MusicPrompt,
        target_duration_ms: u64,
    ) -> Result<MediaAsset, BackendError> {
        if target_duration_ms == 0 {
            return Err(BackendError::InvalidRequest(
                "music target duration must be positive".to_string(),
            ));
        }
        self.draw_transport_failure()?;
        let latency_ms = self.draw_latency_ms();
        let key = format!(
            "{}|{}|{}",
            prompt.description, prompt.mood, target_duration_ms
        );
        let bytes = format!("mock-music:{}\n", sha256_hex(key.as_bytes())).into_bytes();
        MediaAsset::audio(MediaKind::Music, bytes, target_duration_ms, latency_ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::ChatMessage;
    use crate::roles::{build_system_prompt, RoleSpecSet};

    fn editor_request() -> ChatRequest {
        let specs = RoleSpecSet::bundled();
        ChatRequest::new(
            "mock-chat",
            vec![
                ChatMessage::system(build_system_prompt(&specs.editor, "")),
                ChatMessage::user("DIRECTIVE:\nDevelop the storyboard for project abcd1234."),
                ChatMessage::user("Produce exactly 2 scenes in the required output format."),
            ],
            0.7,
        )
        .unwrap()
    }

    #[test]
    fn same_seed_same_bytes_on_every_invocation() {
        let set = MockBackendSet::new(MockScript::seeded(7));
        let a = set.for_run("run-1").chat(&editor_request()).unwrap();
        let b = set.for_run("run-1").chat(&editor_request()).unwrap();
        assert_eq!(a, b);
        assert!(crate::roles::parse_scene_set(&a.content, 2).is_ok());
    }

    #[test]
    fn reply_content_is_request_driven_across_runs() {
        let set = MockBackendSet::new(MockScript::seeded(7));
        let a = set.for_run("run-1").chat(&editor_request()).unwrap();
        let b = set.for_run("run-2").chat(&editor_request()).unwrap();
        assert_eq!(a.content, b.content);
    }

    #[test]
    fn full_transport_injection_fails_every_attempt() {
        let script = MockScript {
            p_transport_error: 1.0,
            ..MockScript::seeded(1)
        };
        let set = MockBackendSet::new(script);
        let mut run = set.for_run("r");
        for _ in 0..5 {
            assert!(matches!(
                run.chat(&editor_request()),
                Err(BackendError::Transport(_))
            ));
        }
    }

    #[test]
    fn refusal_injection_hits_the_editor() {
        let script = MockScript {
            p_refusal: 1.0,
            ..MockScript::seeded(1)
        };
        let set = MockBackendSet::new(script);
        let reply = set.for_run("r").chat(&editor_request()).unwrap();
        assert!(crate::roles::detect_confusion(
            &reply.content,
            crate::roles::DEFAULT_REFUSAL_PATTERNS
        ));
    }

    #[test]
    fn image_determinism_and_moderation_injection() {
        let set = MockBackendSet::new(MockScript::seeded(3));
        let a = set.for_run("r").generate_image("a quiet forest").unwrap();
        let b = set.for_run("r").generate_image("a quiet forest").unwrap();
        assert_eq!(a.digest, b.digest);
        assert!(!a.moderation_flagged);

        let flagged_set = MockBackendSet::new(MockScript {
            p_moderation: 1.0,
            ..MockScript::seeded(3)
        });
        let c = flagged_set.for_run("r").generate_image("a quiet forest").unwrap();
        assert!(c.moderation_flagged);

        assert!(matches!(
            set.for_run("r").generate_image("  "),
            Err(BackendError::InvalidRequest(_))
        ));
    }

    #[test]
    fn speech_duration_follows_the_pacing_model() {
        let set = MockBackendSet::new(MockScript::seeded(3));
        let words_25 = "word ".repeat(25);
        let a = set.for_run("r").synthesize_speech(words_25.trim()).unwrap();
        assert_eq!(a.duration_ms, 10_000);
        let b = set.for_run("r").synthesize_speech("hello").unwrap();
        assert_eq!(b.duration_ms, 400);
        let c = set.for_run("r").synthesize_speech("hello").unwrap();
        assert_eq!(b.digest, c.digest);
    }

    #[test]
    fn music_matches_target_exactly() {
        let set = MockBackendSet::new(MockScript::seeded(3));
        let prompt = MusicPrompt::new("soft strings", "warm").unwrap();
        let a = set.for_run("r").compose_music(&prompt, 9_200).unwrap();
        assert_eq!(a.duration_ms, 9_200);
        assert!(matches!(
            set.for_run("r").compose_music(&prompt, 0),
            Err(BackendError::InvalidRequest(_))
        ));
        let b = set.for_run("r").compose_music(&prompt, 9_200).unwrap();
        assert_eq!(a.digest, b.digest);
    }

    #[test]
    fn scripted_verdicts_consume_in_order_then_approve() {
        let script = MockScript {
            verdicts: VerdictScript {
                scene_set: vec![ScriptedVerdict::Revise, ScriptedVerdict::Approve],
                ..VerdictScript::default()
            },
            ..MockScript::seeded(1)
        };
        let specs = RoleSpecSet::bundled();
        let review = ChatRequest::new(
            "mock-chat",
            vec![
                ChatMessage::system(build_system_prompt(&specs.director, "")),
                ChatMessage::user("USER PROMPT:\nowls"),
                ChatMessage::user("ARTIFACT UNDER REVIEW (scene set):\nSCENE 1: ..."),
            ],
            0.7,
        )
        .unwrap();
        let set = MockBackendSet::new(script);
        let mut run = set.for_run("r");
        assert!(run.chat(&review).unwrap().content.starts_with("REVISE:"));
        assert_eq!(run.chat(&review).unwrap().content, "APPROVE");
        assert_eq!(run.chat(&review).unwrap().content, "APPROVE");
    }

    #[test]
    fn never_approve_overrides_scripts() {
        let script = MockScript {
            never_approve: true,
            verdicts: VerdictScript {
                scene_set: vec![ScriptedVerdict::Approve],
                ..VerdictScript::default()
            },
            ..MockScript::seeded(1)
        };
        let specs = RoleSpecSet::bundled();
        let review = ChatRequest::new(
            "mock-chat",
            vec![
                ChatMessage::system(build_system_prompt(&specs.director, "")),
                ChatMessage::user("ARTIFACT UNDER REVIEW (scene set):\n..."),
            ],
            0.7,
        )
        .unwrap();
        let set = MockBackendSet::new(script);
        assert!(set
            .for_run("r")
            .chat(&review)
            .unwrap()
            .content
            .starts_with("REVISE:"));
    }
}
