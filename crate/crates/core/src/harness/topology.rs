//! Declarative SoC description, loaded from TOML.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::descriptor::DescriptorWords;
use crate::interconnect::{AccessKind, ArbiterPolicy, BusKind};
use crate::pattern::{self, CtrlFlags};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_cycles")]
    pub max_cycles: u64,
    #[serde(default)]
    pub buses: Vec<BusSpec>,
    #[serde(default)]
    pub masters: Vec<MasterSpec>,
    /// Directory pattern files are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_max_cycles() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusSpec {
    pub name: String,
    pub kind: BusKind,
    /// Target first-beat latency in cycles.
    #[serde(alias = "L")]
    pub latency: u64,
    #[serde(default)]
    pub policy: ArbiterPolicy,
    /// Per-master, per-channel outstanding limit (AXI only).
    #[serde(alias = "O", default, skip_serializing_if = "Option::is_none")]
    pub outstanding: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MasterRole {
    Victim,
    Injector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MasterSpec {
    pub name: String,
    pub bus: String,
    pub role: MasterRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub victim: Option<VictimSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injector: Option<InjectorSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VictimSpec {
    #[serde(alias = "p")]
    pub period: u64,
    #[serde(alias = "n")]
    pub count: u32,
    pub kind: AccessKind,
    pub address: u32,
    pub size_bytes: u32,
    /// Cycle of the first access.
    #[serde(default)]
    pub start: u64,
    /// Upper bound of a seeded random delay added to each issue time.
    #[serde(default)]
    pub jitter: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgramVia {
    /// Dedicated configuration port; no data-bus traffic.
    #[default]
    ConfigPort,
    /// Every register write travels over the injector's data bus first.
    DataBus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectorSpec {
    /// Pattern file, relative to the topology file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    /// Inline pattern source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
    /// Raw descriptor words, loaded as-is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub words: Option<Vec<u32>>,
    #[serde(default, rename = "loop")]
    pub loop_mode: bool,
    #[serde(default = "yes")]
    pub pipelined: bool,
    #[serde(default)]
    pub irq: bool,
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub program_via: ProgramVia,
    #[serde(default)]
    pub program_at: u64,
}

fn yes() -> bool {
    true
}

impl InjectorSpec {
    pub fn inline(program: &str) -> Self {
        InjectorSpec {
            pattern: None,
            program: Some(program.to_owned()),
            words: None,
            loop_mode: false,
            pipelined: true,
            irq: false,
            enabled: true,
            program_via: ProgramVia::ConfigPort,
            program_at: 0,
        }
    }

    pub fn ctrl_flags(&self) -> CtrlFlags {
        CtrlFlags {
            loop_mode: self.loop_mode,
            irq_enable: self.irq,
            pipelined: self.pipelined,
        }
    }
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        path: path.into(),
        message: message.into(),
    }
}

impl Topology {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_owned();
            config_err(
                format!(
                    "<toml{}>",
                    e.span().map_or(String::new(), |s| format!(" @{}", s.start))
                ),
                message,
            )
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut t = Self::from_toml_str(&text)?;
        t.base_dir = path.parent().map(Path::to_owned);
        Ok(t)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("topology is always serializable")
    }

    pub fn bus_index(&self, name: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.name == name)
    }

    /// Checks every structural invariant; errors name the offending field.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut bus_names = HashSet::new();
        for (i, b) in self.buses.iter().enumerate() {
            if !bus_names.insert(b.name.as_str()) {
                return Err(config_err(
                    format!("buses[{i}].name"),
                    format!("duplicate bus name '{}'", b.name),
                ));
            }
            if b.latency == 0 {
                return Err(config_err(
                    format!("buses[{i}].latency"),
                    "must be at least 1",
                ));
            }
            match (b.kind, b.outstanding) {
                (BusKind::Axi, None) => {
                    return Err(config_err(
                        format!("buses[{i}].outstanding"),
                        "required for axi buses",
                    ))
                }
                (BusKind::Axi, Some(0)) => {
                    return Err(config_err(
                        format!("buses[{i}].outstanding"),
                        "must be at least 1",
                    ))
                }
                (BusKind::Ahb, Some(_)) => {
                    return Err(config_err(
                        format!("buses[{i}].outstanding"),
                        "only valid for axi buses",
                    ))
                }
                _ => {}
            }
        }
        if self.masters.is_empty() {
            return Err(config_err("masters", "topology declares no masters"));
        }
        let mut master_names = HashSet::new();
        for (i, m) in self.masters.iter().enumerate() {
            let at = |field: &str| format!("masters[{i}].{field}");
            if !master_names.insert(m.name.as_str()) {
                return Err(config_err(
                    at("name"),
                    format!("duplicate master name '{}'", m.name),
                ));
            }
            if self.bus_index(&m.bus).is_none() {
                return Err(config_err(at("bus"), format!("unknown bus '{}'", m.bus)));
            }
            match m.role {
                MasterRole::Victim => {
                    if m.injector.is_some() {
                        return Err(config_err(at("injector"), "not allowed for a victim"));
                    }
                    let v = m
                        .victim
                        .as_ref()
                        .ok_or_else(|| config_err(at("victim"), "missing victim spec"))?;
                    if v.period == 0 {
                        return Err(config_err(at("victim.period"), "must be at least 1"));
                    }
                    if v.count == 0 {
                        return Err(config_err(at("victim.count"), "must be at least 1"));
                    }
                    if v.size_bytes == 0 {
                        return Err(config_err(at("victim.size_bytes"), "must be at least 1"));
                    }
                }
                MasterRole::Injector => {
                    if m.victim.is_some() {
                        return Err(config_err(at("victim"), "not allowed for an injector"));
                    }
                    let inj = m
                        .injector
                        .as_ref()
                        .ok_or_else(|| config_err(at("injector"), "missing injector spec"))?;
                    let sources = [
                        inj.pattern.is_some(),
                        inj.program.is_some(),
                        inj.words.is_some(),
                    ];
                    if sources.iter().filter(|s| **s).count() != 1 {
                        return Err(config_err(
                            at("injector"),
                            "exactly one of pattern, program or words is required",
                        ));
                    }
                    if inj.words.as_ref().is_some_and(|w| w.len() % 2 != 0) {
                        return Err(config_err(
                            at("injector.words"),
                            "needs an even number of words",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Descriptor words for injector master `index`.
    pub fn injector_words(&self, index: usize) -> Result<Vec<DescriptorWords>, HarnessError> {
        let m = &self.masters[index];
        let spec = m.injector.as_ref().expect("validated injector spec");
        let pattern_err = |source| HarnessError::Pattern {
            master: m.name.clone(),
            source,
        };
        if let Some(words) = &spec.words {
            return Ok(words
                .chunks_exact(2)
                .map(|c| DescriptorWords::new(c[0], c[1]))
                .collect());
        }
        let source = match (&spec.pattern, &spec.program) {
            (Some(file), _) => {
                let path = self
                    .base_dir
                    .as_deref()
                    .map_or_else(|| PathBuf::from(file), |d| d.join(file));
                std::fs::read_to_string(&path)
                    .map_err(|source| HarnessError::Io { path, source })?
            }
            (None, Some(text)) => text.clone(),
            (None, None) => unreachable!("validated"),
        };
        pattern::compile(&source).map_err(pattern_err)
    }

    pub fn has_role(&self, role: MasterRole) -> bool {
        self.masters.iter().any(|m| m.role == role)
    }

    /// Same topology with every injector disabled.
    pub fn without_injection(&self) -> Topology {
        let mut t = self.clone();
        for m in &mut t.masters {
            if let Some(inj) = &mut m.injector {
                inj.enabled = false;
            }
        }
        t
    }

    /// Same topology with injector masters removed altogether.
    pub fn victims_only(&self) -> Topology {
        let mut t = self.clone();
        t.masters.retain(|m| m.role == MasterRole::Victim);
        t
    }
}
