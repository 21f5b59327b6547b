use serde::{Deserialize, Serialize};

use super::ReconstructionError;

const POSITIVE_TEMPLATE: &str = "Object: {name}. Intention: {intent}. Based on the input image and grasp intention, generate a image of a human right hand grasping the object. Camera fixed, hand enters from bottom-right, grasps the object, then stays still. Realistic style, uniform lighting, clear details.";

pub const NEGATIVE_PROMPT: &str = "Overly saturated colors, overexposed, blurry details, grayish tone, worst quality, low quality, artifacts, ugly, incomplete, extra fingers, poorly rendered hands, deformed, disfigured, malformed limbs, fused fingers";

pub const REGION_DIRECTIVE: &str =
    "Grasp the object at the point or region marked on the input image.";
pub const DEMO_DIRECTIVE: &str =
    "Reproduce the hand grasp shown in the attached demonstration image.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PromptKind {
    #[default]
    Language,
    VisualRegion,
    DemoImage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attachment {
    pub name: String,
    pub path: String,
}

/// Positive/negative prompt pair sent to a grasp-image generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub positive: String,
    pub negative: String,
    pub kind: PromptKind,
    pub attachments: Vec<Attachment>,
}

impl PromptBundle {
    pub fn with_attachment(mut self, name: &str, path: &str) -> Self {
        self.attachments.push(Attachment {
            name: name.to_string(),
            path: path.to_string(),
        });
        self
    }
}

pub fn build_prompt(
    object_name: &str,
    intent: &str,
    kind: PromptKind,
) -> Result<PromptBundle, ReconstructionError> {
    let name = object_name.trim();
    let intent = intent.trim();
    if kind == PromptKind::Language {
        if name.is_empty() {
            return Err(ReconstructionError::MissingField("object_name"));
        }
        if intent.is_empty() {
            return Err(ReconstructionError::MissingField("intent"));
        }
    }
    // visual and demo prompts may leave the object implicit
    let name = if name.is_empty() { "the marked object" } else { name };
    let intent = if intent.is_empty() { "grasp it" } else { intent };
    let mut positive = POSITIVE_TEMPLATE
        .replace("{name}", name)
        .replace("{intent}", intent);
    match kind {
        PromptKind::Language => {}
        PromptKind::VisualRegion => {
            positive.push(' ');
            positive.push_str(REGION_DIRECTIVE);
        }
        PromptKind::DemoImage => {
            positive.push(' ');
            positive.push_str(DEMO_DIRECTIVE);
        }
    }
    Ok(PromptBundle {
        positive,
        negative: NEGATIVE_PROMPT.to_string(),
        kind,
        attachments: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn language_prompt_fills_template() {
        let p = build_prompt("mug", "drink water", PromptKind::Language).unwrap();
        assert!(p.positive.contains("Object: mug. Intention: drink water."));
        assert!(p.positive.contains("hand enters from bottom-right"));
        assert!(p.negative.ends_with("malformed limbs, fused fingers"));
        assert!(p.negative.starts_with("Overly saturated colors"));
    }

    #[test]
    fn missing_name_is_rejected() {
        assert_eq!(
            build_prompt("", "pour", PromptKind::Language),
            Err(ReconstructionError::MissingField("object_name"))
        );
        assert_eq!(
            build_prompt("  ", "pour", PromptKind::Language),
            Err(ReconstructionError::MissingField("object_name"))
        );
    }

    #[test]
    fn demo_prompt_adds_directive_only() {
        let lang = build_prompt("cup", "hand over", PromptKind::Language).unwrap();
        let demo = build_prompt("cup", "hand over", PromptKind::DemoImage)
            .unwrap()
            .with_attachment("demo", "demo.png");
        assert_eq!(demo.positive, format!("{} {}", lang.positive, DEMO_DIRECTIVE));
        assert_eq!(demo.negative, lang.negative);
        assert_eq!(demo.attachments.len(), 1);
        let region = build_prompt("", "", PromptKind::VisualRegion).unwrap();
        assert!(region.positive.ends_with(REGION_DIRECTIVE));
    }
}
