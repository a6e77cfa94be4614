//! Model manifest: block hierarchy, variable metadata and the requirement.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stl::{self, Formula};
use crate::trace::{BlockPath, Domain, VarKind, VariableMeta};

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("variable `{0}` declares an enum domain without values")]
    EmptyEnum(String),
    #[error("variable `{0}` has an empty block path")]
    EmptyBlockPath(String),
    #[error("variable `{name}` refers to unknown block `{path}`")]
    UnresolvedBlock { name: String, path: String },
    #[error("unknown domain `{domain}` for variable `{name}`")]
    UnknownDomain { name: String, domain: String },
    #[error("requirement does not parse: {0}")]
    Requirement(#[from] stl::ParseError),
}

/// A named block with nested children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    #[serde(default)]
    pub children: Vec<Block>,
}

impl Block {
    pub fn leaf(name: &str) -> Self {
        Self {
            name: name.into(),
            children: Vec::new(),
        }
    }

    pub fn node(name: &str, children: Vec<Block>) -> Self {
        Self {
            name: name.into(),
            children,
        }
    }

    fn resolves(&self, path: &[String]) -> bool {
        match path.split_first() {
            Some((head, rest)) if *head == self.name => {
                rest.is_empty() || self.children.iter().any(|c| c.resolves(rest))
            }
            _ => false,
        }
    }
}

/// Threshold constants of the requirement `alw (rise(cmd >= m) -> ev[0,T] alw[0,t] (|cmd - pos| <= n))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequirementParams {
    pub m: f64,
    pub n: f64,
    #[serde(rename = "T")]
    pub big_t: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawVariable {
    name: String,
    domain: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    enum_values: Option<Vec<String>>,
    kind: String,
    block_path: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawManifest {
    blocks: Block,
    variables: Vec<RawVariable>,
    requirement: String,
    requirement_params: RequirementParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelManifest {
    pub blocks: Block,
    pub variables: Vec<VariableMeta>,
    pub requirement: String,
    pub requirement_params: RequirementParams,
}

fn kind_tag(kind: VarKind) -> &'static str {
    match kind {
        VarKind::PlainSignal => "plain",
        VarKind::LookupCellIndex => "lookup_cell_index",
        VarKind::SmTransition => "sm_transition",
        VarKind::SmLocation => "sm_location",
    }
}

fn parse_kind(s: &str) -> Option<VarKind> {
    Some(match s {
        "plain" => VarKind::PlainSignal,
        "lookup_cell_index" => VarKind::LookupCellIndex,
        "sm_transition" => VarKind::SmTransition,
        "sm_location" => VarKind::SmLocation,
        _ => return None,
    })
}

impl ModelManifest {
    /// Validates and assembles a manifest.
    pub fn new(
        blocks: Block,
        variables: Vec<VariableMeta>,
        requirement: String,
        requirement_params: RequirementParams,
    ) -> Result<Self, ManifestError> {
        let mut seen = HashSet::new();
        for v in &variables {
            if !seen.insert(v.name.as_str()) {
                return Err(ManifestError::DuplicateVariable(v.name.clone()));
            }
            if matches!(&v.domain, Domain::Enum(values) if values.is_empty()) {
                return Err(ManifestError::EmptyEnum(v.name.clone()));
            }
            if v.block_path.is_empty() {
                return Err(ManifestError::EmptyBlockPath(v.name.clone()));
            }
            if !blocks.resolves(v.block_path.segments()) {
                return Err(ManifestError::UnresolvedBlock {
                    name: v.name.clone(),
                    path: v.block_path.to_string(),
                });
            }
        }
        stl::parse_formula(&requirement)?;
        Ok(Self {
            blocks,
            variables,
            requirement,
            requirement_params,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ManifestError> {
        let raw: RawManifest = serde_json::from_str(text)?;
        let mut variables = Vec::with_capacity(raw.variables.len());
        for v in raw.variables {
            let bad_domain = || ManifestError::UnknownDomain {
                name: v.name.clone(),
                domain: v.domain.clone(),
            };
            let domain = match v.domain.as_str() {
                "real" => Domain::Real,
                "boolean" => Domain::Boolean,
                "enum" => Domain::Enum(v.enum_values.clone().unwrap_or_default()),
                _ => return Err(bad_domain()),
            };
            let kind = parse_kind(&v.kind).ok_or_else(bad_domain)?;
            variables.push(VariableMeta {
                name: v.name,
                domain,
                kind,
                block_path: BlockPath::new(v.block_path),
            });
        }
        Self::new(
            raw.blocks,
            variables,
            raw.requirement,
            raw.requirement_params,
        )
    }

    pub fn to_json(&self) -> String {
        let raw = RawManifest {
            blocks: self.blocks.clone(),
            variables: self
                .variables
                .iter()
                .map(|v| {
                    let (domain, enum_values) = match &v.domain {
                        Domain::Real => ("real", None),
                        Domain::Boolean => ("boolean", None),
                        Domain::Enum(values) => ("enum", Some(values.clone())),
                    };
                    RawVariable {
                        name: v.name.clone(),
                        domain: domain.into(),
                        enum_values,
                        kind: kind_tag(v.kind).into(),
                        block_path: v.block_path.segments().to_vec(),
                    }
                })
                .collect(),
            requirement: self.requirement.clone(),
            requirement_params: self.requirement_params,
        };
        serde_json::to_string_pretty(&raw).expect("manifest serializes")
    }

    pub fn variable(&self, name: &str) -> Option<&VariableMeta> {
        self.variables.iter().find(|v| v.name == name)
    }

    /// Position of `name` in declaration order.
    pub fn position(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn requirement_formula(&self) -> Formula {
        stl::parse_formula(&self.requirement).expect("validated at construction")
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn manifest_with(variables: Vec<VariableMeta>) -> ModelManifest {
        ModelManifest::new(
            Block::leaf("root"),
            variables,
            "true".into(),
            RequirementParams {
                m: 0.5,
                n: 0.1,
                big_t: 3.0,
                t: 1.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip() {
        let blocks = Block::node(
            "root",
            vec![Block::leaf("a"), Block::node("b", vec![Block::leaf("c")])],
        );
        let m = ModelManifest::new(
            blocks,
            vec![
                VariableMeta::new("x", Domain::Real, VarKind::PlainSignal, "root/a"),
                VariableMeta::new(
                    "mode",
                    Domain::Enum(vec!["2".into(), "3".into()]),
                    VarKind::SmLocation,
                    "root/b/c",
                ),
            ],
            "alw (x > 0)".into(),
            RequirementParams {
                m: 1.0,
                n: 0.2,
                big_t: 2.0,
                t: 0.5,
            },
        )
        .unwrap();
        let back = ModelManifest::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(m.to_json().contains("\"T\": 2.0"));
    }

    #[test]
    fn rejects_bad_manifests() {
        let p = RequirementParams {
            m: 1.0,
            n: 0.2,
            big_t: 2.0,
            t: 0.5,
        };
        let x = VariableMeta::new("x", Domain::Real, VarKind::PlainSignal, "root");
        assert!(matches!(
            ModelManifest::new(
                Block::leaf("root"),
                vec![x.clone(), x.clone()],
                "true".into(),
                p
            ),
            Err(ManifestError::DuplicateVariable(_))
        ));
        let stray = VariableMeta::new("y", Domain::Real, VarKind::PlainSignal, "root/nowhere");
        assert!(matches!(
            ModelManifest::new(Block::leaf("root"), vec![stray], "true".into(), p),
            Err(ManifestError::UnresolvedBlock { .. })
        ));
        let e = VariableMeta::new("e", Domain::Enum(vec![]), VarKind::PlainSignal, "root");
        assert!(matches!(
            ModelManifest::new(Block::leaf("root"), vec![e], "true".into(), p),
            Err(ManifestError::EmptyEnum(_))
        ));
        assert!(matches!(
            ModelManifest::new(Block::leaf("root"), vec![x], "alw (".into(), p),
            Err(ManifestError::Requirement(_))
        ));
    }
}
