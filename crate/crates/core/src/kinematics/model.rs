use std::collections::{HashMap, HashSet};
use std::fmt;

use nalgebra::{Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::Pose;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelViolation {
    SchemaError(String),
    CyclicTree(String),
    UnknownFingertipLink(String),
    BadLimits {
        joint: String,
        lo: f64,
        rest: f64,
        hi: f64,
    },
}

impl fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelViolation::SchemaError(m) => write!(f, "SchemaError: {m}"),
            ModelViolation::CyclicTree(m) => write!(f, "CyclicTree: {m}"),
            ModelViolation::UnknownFingertipLink(m) => write!(f, "UnknownFingertipLink: {m}"),
            ModelViolation::BadLimits { joint, lo, rest, hi } => write!(
                f,
                "BadLimits: joint '{joint}' needs lo <= rest <= hi, got [{lo}, {hi}] rest {rest}"
            ),
        }
    }
}

/// Every violation found in a hand model document.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid hand model: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct HandModelError {
    pub violations: Vec<ModelViolation>,
}

impl HandModelError {
    pub fn has(&self, pred: impl Fn(&ModelViolation) -> bool) -> bool {
        self.violations.iter().any(pred)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KinematicsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown hand model '{0}'")]
    UnknownModel(String),
}

// ---- document schema ------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandModelDocument {
    pub name: String,
    pub links: Vec<LinkDocument>,
    pub joints: Vec<JointDocument>,
    pub fingertip_links: Vec<String>,
    #[serde(default)]
    pub mimics: Vec<MimicDocument>,
    #[serde(default)]
    pub human_joint_map: Vec<JointMapEntry>,
    /// Human fingertip link matched by each entry of `fingertip_links`;
    /// defaults to the same names.
    #[serde(default)]
    pub human_fingertips: Option<Vec<String>>,
    /// Direction, in the wrist frame, along which the hand approaches the object.
    #[serde(default = "default_approach")]
    pub approach_axis: [f64; 3],
    /// Fingertip positions at rest with an identity root, recorded by the author.
    #[serde(default)]
    pub rest_fingertips: Option<Vec<[f64; 3]>>,
}

fn default_approach() -> [f64; 3] {
    [0.0, 0.0, -1.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDocument {
    pub name: String,
    pub parent: Option<String>,
    #[serde(default)]
    pub offset: Pose,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointDocument {
    pub name: String,
    pub child: String,
    pub axis: [f64; 3],
    #[serde(rename = "type", default = "revolute")]
    pub kind: String,
    pub limits: [f64; 2],
    #[serde(default)]
    pub rest: f64,
}

fn revolute() -> String {
    "revolute".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MimicDocument {
    pub joint: String,
    pub driver: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointMapEntry {
    pub human: String,
    pub joint: String,
}

// ---- validated model -------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Link {
    pub name: String,
    pub parent: Option<usize>,
    pub offset: Pose,
    /// Index of the joint whose child is this link.
    pub joint: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Joint {
    pub name: String,
    pub child: usize,
    pub axis: Unit<Vector3<f64>>,
    pub lo: f64,
    pub hi: f64,
    pub rest: f64,
}

/// Joint whose angle is `ratio × driver angle`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mimic {
    pub joint: usize,
    pub driver: usize,
    pub ratio: f64,
}

/// Articulated hand: a tree of links rooted at the wrist, revolute joints,
/// and an ordered list of fingertip links.
#[derive(Debug, Clone)]
pub struct KinematicHandModel {
    name: String,
    links: Vec<Link>,
    joints: Vec<Joint>,
    /// Parents before children.
    order: Vec<usize>,
    fingertips: Vec<usize>,
    human_fingertips: Vec<String>,
    mimics: Vec<Mimic>,
    // joint index -> mimic entry
    mimic_of: Vec<Option<Mimic>>,
    human_joint_map: Vec<(String, String)>,
    approach_axis: Unit<Vector3<f64>>,
    rest_fingertips: Option<Vec<Vector3<f64>>>,
    joint_index: HashMap<String, usize>,
    link_index: HashMap<String, usize>,
}

impl KinematicHandModel {
    pub fn from_json(text: &str) -> Result<Self, HandModelError> {
        let doc: HandModelDocument = serde_json::from_str(text).map_err(|e| HandModelError {
            violations: vec![ModelViolation::SchemaError(e.to_string())],
        })?;
        Self::from_document(doc)
    }

    pub fn from_document(doc: HandModelDocument) -> Result<Self, HandModelError> {
        let mut v = Vec::new();
        let schema = |m: String| ModelViolation::SchemaError(m);

        if doc.name.trim().is_empty() {
            v.push(schema("model name is empty".into()));
        }
        let mut link_index = HashMap::new();
        for (i, l) in doc.links.iter().enumerate() {
            if link_index.insert(l.name.clone(), i).is_some() {
                v.push(schema(format!("duplicate link '{}'", l.name)));
            }
        }

        let mut links: Vec<Link> = Vec::with_capacity(doc.links.len());
        for l in &doc.links {
            let parent = match &l.parent {
                None => None,
                Some(p) => match link_index.get(p) {
                    Some(&i) => Some(i),
                    None => {
                        v.push(schema(format!("link '{}' has unknown parent '{p}'", l.name)));
                        None
                    }
                },
            };
            links.push(Link {
                name: l.name.clone(),
                parent,
                offset: l.offset,
                joint: None,
            });
        }
        let roots: Vec<_> = doc
            .links
            .iter()
            .filter(|l| l.parent.is_none())
            .map(|l| l.name.clone())
            .collect();
        match roots.len() {
            0 if !links.is_empty() => v.push(ModelViolation::CyclicTree(
                "no root link; every link has a parent".into(),
            )),
            0 => v.push(schema("model has no links".into())),
            1 => {}
            _ => v.push(ModelViolation::CyclicTree(format!(
                "expected exactly one root link, found {}: {}",
                roots.len(),
                roots.join(", ")
            ))),
        }
        let order = match topological_order(&links) {
            Ok(o) => o,
            Err(cycle) => {
                v.push(ModelViolation::CyclicTree(format!(
                    "links form a cycle through '{}'",
                    links[cycle].name
                )));
                Vec::new()
            }
        };

        let mut joints = Vec::with_capacity(doc.joints.len());
        let mut joint_index = HashMap::new();
        for (ji, j) in doc.joints.iter().enumerate() {
            if joint_index.insert(j.name.clone(), ji).is_some() {
                v.push(schema(format!("duplicate joint '{}'", j.name)));
            }
            if j.kind != "revolute" {
                v.push(schema(format!(
                    "joint '{}' has unsupported type '{}'",
                    j.name, j.kind
                )));
            }
            let [lo, hi] = j.limits;
            if !(lo <= j.rest && j.rest <= hi) || !lo.is_finite() || !hi.is_finite() {
                v.push(ModelViolation::BadLimits {
                    joint: j.name.clone(),
                    lo,
                    rest: j.rest,
                    hi,
                });
            }
            let axis = Unit::try_new(Vector3::from(j.axis), 1e-12);
            if axis.is_none() {
                v.push(schema(format!("joint '{}' has a zero axis", j.name)));
            }
            let child = match link_index.get(&j.child) {
                Some(&c) => {
                    if links[c].joint.is_some() {
                        v.push(schema(format!("link '{}' is driven by two joints", j.child)));
                    }
                    if links[c].parent.is_none() {
                        v.push(schema(format!("joint '{}' drives the root link", j.name)));
                    }
                    links[c].joint = Some(ji);
                    c
                }
                None => {
                    v.push(schema(format!(
                        "joint '{}' has unknown child link '{}'",
                        j.name, j.child
                    )));
                    0
                }
            };
            joints.push(Joint {
                name: j.name.clone(),
                child,
                axis: axis.unwrap_or(Vector3::z_axis()),
                lo,
                hi,
                rest: j.rest,
            });
        }

        let mut fingertips = Vec::new();
        let k = doc.fingertip_links.len();
        if !(2..=5).contains(&k) {
            v.push(schema(format!("expected 2 to 5 fingertip links, found {k}")));
        }
        for name in &doc.fingertip_links {
            match link_index.get(name) {
                Some(&i) => {
                    if links.iter().any(|l| l.parent == Some(i)) {
                        v.push(ModelViolation::UnknownFingertipLink(format!(
                            "fingertip link '{name}' is not a leaf"
                        )));
                    }
                    fingertips.push(i);
                }
                None => v.push(ModelViolation::UnknownFingertipLink(format!(
                    "fingertip link '{name}' does not exist"
                ))),
            }
        }
        let human_fingertips = doc
            .human_fingertips
            .clone()
            .unwrap_or_else(|| doc.fingertip_links.clone());
        if human_fingertips.len() != doc.fingertip_links.len() {
            v.push(schema(format!(
                "human_fingertips has {} entries but there are {k} fingertip links",
                human_fingertips.len()
            )));
        }

        let mut mimics = Vec::new();
        let mut mimic_of = vec![None; joints.len()];
        for m in &doc.mimics {
            let (Some(&ji), Some(&di)) = (joint_index.get(&m.joint), joint_index.get(&m.driver))
            else {
                v.push(schema(format!(
                    "mimic '{}' <- '{}' references an unknown joint",
                    m.joint, m.driver
                )));
                continue;
            };
            if ji == di || doc.mimics.iter().any(|o| o.joint == m.driver) {
                v.push(schema(format!(
                    "mimic '{}' must be driven by an independent joint",
                    m.joint
                )));
                continue;
            }
            if mimic_of[ji].is_some() {
                v.push(schema(format!("joint '{}' has two mimic rules", m.joint)));
                continue;
            }
            let (d, j) = (&joints[di], &joints[ji]);
            let span = [m.ratio * d.lo, m.ratio * d.hi, m.ratio * d.rest];
            let eps = 1e-9;
            if span.iter().any(|a| *a < j.lo - eps || *a > j.hi + eps) {
                v.push(ModelViolation::BadLimits {
                    joint: m.joint.clone(),
                    lo: j.lo,
                    rest: m.ratio * d.rest,
                    hi: j.hi,
                });
            }
            let mimic = Mimic {
                joint: ji,
                driver: di,
                ratio: m.ratio,
            };
            mimic_of[ji] = Some(mimic);
            mimics.push(mimic);
        }

        let mut human_joint_map = Vec::new();
        for e in &doc.human_joint_map {
            if !joint_index.contains_key(&e.joint) {
                v.push(schema(format!(
                    "human_joint_map targets unknown joint '{}'",
                    e.joint
                )));
            }
            human_joint_map.push((e.human.clone(), e.joint.clone()));
        }

        let approach_axis = match Unit::try_new(Vector3::from(doc.approach_axis), 1e-12) {
            Some(a) => a,
            None => {
                v.push(schema("approach_axis must be non-zero".into()));
                Vector3::z_axis()
            }
        };
        let rest_fingertips = doc
            .rest_fingertips
            .as_ref()
            .map(|r| r.iter().map(|p| Vector3::from(*p)).collect::<Vec<_>>());
        if let Some(r) = &rest_fingertips {
            if r.len() != k {
                v.push(schema(format!(
                    "rest_fingertips has {} entries, expected {k}",
                    r.len()
                )));
            }
        }

        if !v.is_empty() {
            return Err(HandModelError { violations: v });
        }
        Ok(Self {
            name: doc.name,
            links,
            joints,
            order,
            fingertips,
            human_fingertips,
            mimics,
            mimic_of,
            human_joint_map,
            approach_axis,
            rest_fingertips,
            joint_index,
            link_index,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn finger_count(&self) -> usize {
        self.fingertips.len()
    }

    pub(crate) fn link_order(&self) -> &[usize] {
        &self.order
    }

    pub fn fingertip_links(&self) -> &[usize] {
        &self.fingertips
    }

    pub fn fingertip_names(&self) -> Vec<&str> {
        self.fingertips
            .iter()
            .map(|&i| self.links[i].name.as_str())
            .collect()
    }

    /// Human fingertip link matched to each fingertip of this model.
    pub fn human_fingertips(&self) -> &[String] {
        &self.human_fingertips
    }

    pub fn mimics(&self) -> &[Mimic] {
        &self.mimics
    }

    pub fn is_mimic(&self, joint: usize) -> bool {
        self.mimic_of[joint].is_some()
    }

    pub fn human_joint_map(&self) -> &[(String, String)] {
        &self.human_joint_map
    }

    pub fn approach_axis(&self) -> &Unit<Vector3<f64>> {
        &self.approach_axis
    }

    pub fn rest_fingertips(&self) -> Option<&[Vector3<f64>]> {
        self.rest_fingertips.as_deref()
    }

    pub fn joint_by_name(&self, name: &str) -> Option<usize> {
        self.joint_index.get(name).copied()
    }

    pub fn link_by_name(&self, name: &str) -> Option<usize> {
        self.link_index.get(name).copied()
    }

    pub fn rest_angles(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.rest).collect()
    }

    /// Angles actually used by forward kinematics: mimic joints follow their
    /// drivers regardless of the stored value.
    pub fn effective_angles(&self, angles: &[f64]) -> Vec<f64> {
        let mut out = angles.to_vec();
        for m in &self.mimics {
            out[m.joint] = m.ratio * angles[m.driver];
        }
        out
    }

    /// Clamps every independent joint into its limits and re-derives mimic joints.
    pub fn clamp_to_limits(&self, angles: &[f64]) -> Result<Vec<f64>, KinematicsError> {
        self.check_len(angles.len())?;
        let mut out: Vec<f64> = angles
            .iter()
            .zip(&self.joints)
            .map(|(a, j)| a.max(j.lo).min(j.hi))
            .collect();
        for m in &self.mimics {
            let j = &self.joints[m.joint];
            out[m.joint] = (m.ratio * out[m.driver]).max(j.lo).min(j.hi);
        }
        Ok(out)
    }

    pub fn within_limits(&self, angles: &[f64], tol: f64) -> bool {
        angles.len() == self.joints.len()
            && angles
                .iter()
                .zip(&self.joints)
                .all(|(a, j)| *a >= j.lo - tol && *a <= j.hi + tol)
    }

    /// Joint indices belonging to each finger: joints on the path from the
    /// root to the fingertip that no earlier finger has claimed.
    pub fn finger_joint_groups(&self) -> Vec<Vec<usize>> {
        let mut claimed = HashSet::new();
        self.fingertips
            .iter()
            .map(|&tip| {
                let mut group = Vec::new();
                let mut cur = Some(tip);
                while let Some(l) = cur {
                    if let Some(j) = self.links[l].joint {
                        if claimed.insert(j) {
                            group.push(j);
                        }
                    }
                    cur = self.links[l].parent;
                }
                group.reverse();
                group
            })
            .collect()
    }

    pub(crate) fn check_len(&self, got: usize) -> Result<(), KinematicsError> {
        if got != self.joints.len() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.joints.len(),
                got,
            });
        }
        Ok(())
    }
}

/// Kahn ordering; returns a link on a cycle when one exists.
fn topological_order(links: &[Link]) -> Result<Vec<usize>, usize> {
    let mut children = vec![Vec::new(); links.len()];
    let mut pending = vec![0usize; links.len()];
    for (i, l) in links.iter().enumerate() {
        if let Some(p) = l.parent {
            children[p].push(i);
            pending[i] = 1;
        }
    }
    let mut queue: Vec<usize> = (0..links.len()).filter(|&i| pending[i] == 0).collect();
    let mut order = Vec::with_capacity(links.len());
    while let Some(i) = queue.pop() {
        order.push(i);
        for &c in &children[i] {
            pending[c] -= 1;
            if pending[c] == 0 {
                queue.push(c);
            }
        }
    }
    if order.len() == links.len() {
        // stable: parents first, otherwise by document position
        let mut depth = vec![0usize; links.len()];
        for &i in &order {
            if let Some(p) = links[i].parent {
                depth[i] = depth[p] + 1;
            }
        }
        order.sort_by_key(|&i| (depth[i], i));
        Ok(order)
    } else {
        Err((0..links.len()).find(|&i| pending[i] > 0).unwrap_or(0))
    }
}
