//! JSON scenario files.
//!
//! Node ids in the file are labels; the model uses dense indices in file
//! order. Explicit `cs_sets` take precedence over `cs_range_m`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use wpan_core::design::CandidateGraph;
use wpan_core::{AnalysisConfig, NetworkModel, NodeSpec, ProtocolParams, Role, TeffModel};

use crate::{Result, ToolError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleName {
    Source,
    Relay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub role: RoleName,
    #[serde(default)]
    pub lambda_pps: f64,
    #[serde(default)]
    pub link_per: f64,
}

/// Protocol constants that differ from [`ProtocolParams::default`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cca_duration: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turnaround: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ack_duration: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ack_wait: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mac_min_be: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mac_max_be: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mac_max_csma_backoffs: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_frame_retries: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_symbols: Option<u32>,
    /// Sets `data_symbols` from a MAC payload size; `data_symbols` wins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload_bytes: Option<u32>,
}

impl ProtocolOverrides {
    pub fn apply(&self, acks_enabled: bool) -> ProtocolParams {
        let mut p = match self.payload_bytes {
            Some(bytes) => ProtocolParams::with_payload_bytes(bytes),
            None => ProtocolParams::default(),
        };
        let fields = [
            (self.slot, &mut p.slot),
            (self.cca_duration, &mut p.cca_duration),
            (self.turnaround, &mut p.turnaround),
            (self.ack_duration, &mut p.ack_duration),
            (self.ack_wait, &mut p.ack_wait),
            (self.mac_min_be, &mut p.mac_min_be),
            (self.mac_max_be, &mut p.mac_max_be),
            (self.mac_max_csma_backoffs, &mut p.mac_max_csma_backoffs),
            (self.max_frame_retries, &mut p.max_frame_retries),
            (self.data_symbols, &mut p.data_symbols),
        ];
        for (value, slot) in fields {
            if let Some(v) = value {
                *slot = v;
            }
        }
        p.acks_enabled = acks_enabled;
        p
    }

    /// Overrides that reproduce `params` from the defaults.
    pub fn diff(params: &ProtocolParams) -> Self {
        let d = ProtocolParams::default();
        let pick = |v: u32, default: u32| (v != default).then_some(v);
        Self {
            slot: pick(params.slot, d.slot),
            cca_duration: pick(params.cca_duration, d.cca_duration),
            turnaround: pick(params.turnaround, d.turnaround),
            ack_duration: pick(params.ack_duration, d.ack_duration),
            ack_wait: pick(params.ack_wait, d.ack_wait),
            mac_min_be: pick(params.mac_min_be, d.mac_min_be),
            mac_max_be: pick(params.mac_max_be, d.mac_max_be),
            mac_max_csma_backoffs: pick(params.mac_max_csma_backoffs, d.mac_max_csma_backoffs),
            max_frame_retries: pick(params.max_frame_retries, d.max_frame_retries),
            data_symbols: pick(params.data_symbols, d.data_symbols),
            payload_bytes: None,
        }
    }

    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TeffName {
    Mdinf,
    Boorstyn,
}

impl From<TeffName> for TeffModel {
    fn from(t: TeffName) -> Self {
        match t {
            TeffName::Mdinf => TeffModel::MdInfinity,
            TeffName::Boorstyn => TeffModel::Boorstyn,
        }
    }
}

impl From<TeffModel> for TeffName {
    fn from(t: TeffModel) -> Self {
        match t {
            TeffModel::MdInfinity => TeffName::Mdinf,
            TeffModel::Boorstyn => TeffName::Boorstyn,
        }
    }
}

/// Solver settings that differ from [`AnalysisConfig::default`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teff_model: Option<TeffName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_rate_pps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp_q: Option<bool>,
}

impl AnalysisOverrides {
    pub fn apply(&self) -> AnalysisConfig {
        let d = AnalysisConfig::default();
        AnalysisConfig {
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            damping: self.damping.unwrap_or(d.damping),
            teff_model: self.teff_model.map_or(d.teff_model, Into::into),
            initial_rate_pps: self.initial_rate_pps.unwrap_or(d.initial_rate_pps),
            clamp_q: self.clamp_q.unwrap_or(d.clamp_q),
        }
    }

    pub fn diff(cfg: &AnalysisConfig) -> Self {
        let d = AnalysisConfig::default();
        Self {
            tolerance: (cfg.tolerance != d.tolerance).then_some(cfg.tolerance),
            max_iterations: (cfg.max_iterations != d.max_iterations).then_some(cfg.max_iterations),
            damping: (cfg.damping != d.damping).then_some(cfg.damping),
            teff_model: (cfg.teff_model != d.teff_model).then_some(cfg.teff_model.into()),
            initial_rate_pps: (cfg.initial_rate_pps != d.initial_rate_pps).then_some(cfg.initial_rate_pps),
            clamp_q: (cfg.clamp_q != d.clamp_q).then_some(cfg.clamp_q),
        }
    }

    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

fn default_acks() -> bool {
    true
}

/// On-disk layout of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub nodes: Vec<NodeEntry>,
    pub bs_id: u32,
    /// Child id to parent id.
    #[serde(default)]
    pub parent: BTreeMap<u32, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cs_range_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cs_sets: Option<BTreeMap<u32, Vec<u32>>>,
    #[serde(default, skip_serializing_if = "ProtocolOverrides::is_empty")]
    pub protocol: ProtocolOverrides,
    #[serde(default = "default_acks")]
    pub acks_enabled: bool,
    #[serde(default, skip_serializing_if = "AnalysisOverrides::is_empty")]
    pub analysis: AnalysisOverrides,
}

/// A loaded, validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: NetworkModel,
    pub params: ProtocolParams,
    pub analysis: AnalysisConfig,
}

impl ScenarioFile {
    fn index_map(&self, problems: &mut Vec<String>) -> BTreeMap<u32, usize> {
        let mut index = BTreeMap::new();
        for (k, node) in self.nodes.iter().enumerate() {
            if index.insert(node.id, k).is_some() {
                problems.push(format!("duplicate node id {}", node.id));
            }
        }
        if self.nodes.is_empty() {
            problems.push("no nodes".into());
        } else if !index.contains_key(&self.bs_id) {
            problems.push(format!("bs_id {} is not a listed node", self.bs_id));
        }
        index
    }

    /// Candidate graph over the node positions, ignoring routing and carrier
    /// sensing.
    pub fn candidate_graph(&self) -> Result<CandidateGraph> {
        let mut problems = Vec::new();
        let index = self.index_map(&mut problems);
        if !problems.is_empty() {
            return Err(ToolError::Scenario(problems));
        }
        let positions = self.nodes.iter().map(|n| (n.x, n.y)).collect();
        Ok(CandidateGraph::complete(positions, index[&self.bs_id]))
    }

    /// Resolves ids, builds the model and validates everything, reporting
    /// every problem found.
    pub fn into_scenario(self) -> Result<Scenario> {
        let mut problems = Vec::new();
        let index = self.index_map(&mut problems);
        let n = self.nodes.len();

        let mut parent = vec![None; n];
        for (&child, &p) in &self.parent {
            match (index.get(&child), index.get(&p)) {
                (Some(&c), Some(&pi)) => parent[c] = Some(pi),
                (None, _) => problems.push(format!("parent map names unknown node {child}")),
                (_, None) => problems.push(format!("node {child}: parent {p} is not a listed node")),
            }
        }

        let omega = self.cs_sets.as_ref().map(|sets| {
            let mut omega = vec![Vec::new(); n];
            for (&owner, members) in sets {
                let Some(&o) = index.get(&owner) else {
                    problems.push(format!("cs_sets names unknown node {owner}"));
                    continue;
                };
                for m in members {
                    match index.get(m) {
                        Some(&mi) => omega[o].push(mi),
                        None => problems.push(format!("node {owner}: carrier-sense member {m} is not a listed node")),
                    }
                }
            }
            omega
        });
        if omega.is_none() && self.cs_range_m.is_none() {
            problems.push("either cs_range_m or cs_sets is required".into());
        }

        let params = self.protocol.apply(self.acks_enabled);
        if let Err(e) = params.validate() {
            problems.push(e.to_string());
        }
        let analysis = self.analysis.apply();
        if let Err(e) = analysis.validate() {
            problems.push(e.to_string());
        }

        let nodes: Vec<NodeSpec> = self
            .nodes
            .iter()
            .map(|e| NodeSpec {
                label: e.id,
                x: e.x,
                y: e.y,
                role: match e.role {
                    RoleName::Source => Role::Source,
                    RoleName::Relay => Role::Relay,
                },
                lambda_pps: e.lambda_pps,
                link_per: e.link_per,
            })
            .collect();
        let bs = index.get(&self.bs_id).copied().unwrap_or(0);
        if !problems.is_empty() && (self.nodes.is_empty() || !index.contains_key(&self.bs_id)) {
            return Err(ToolError::Scenario(problems));
        }
        let built = match (omega, self.cs_range_m) {
            (Some(omega), _) => NetworkModel::from_cs_sets(nodes, bs, parent, omega),
            (None, Some(range)) => NetworkModel::from_geometry(nodes, bs, parent, range),
            (None, None) => return Err(ToolError::Scenario(problems)),
        };
        match built {
            Ok(model) if problems.is_empty() => Ok(Scenario {
                model,
                params,
                analysis,
            }),
            Ok(_) => Err(ToolError::Scenario(problems)),
            Err(wpan_core::Error::InvalidModel(more)) => {
                problems.extend(more);
                Err(ToolError::Scenario(problems))
            }
            Err(e) => {
                problems.push(e.to_string());
                Err(ToolError::Scenario(problems))
            }
        }
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let m = &s.model;
        let label = |i: usize| m.nodes[i].label;
        let nodes = m
            .nodes
            .iter()
            .map(|n| NodeEntry {
                id: n.label,
                x: n.x,
                y: n.y,
                role: match n.role {
                    Role::Source => RoleName::Source,
                    Role::Relay => RoleName::Relay,
                },
                lambda_pps: n.lambda_pps,
                link_per: n.link_per,
            })
            .collect();
        let parent = m
            .parent
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (label(i), label(p))))
            .collect();
        let cs_sets = m.cs_range.is_none().then(|| {
            (0..m.len())
                .map(|i| (label(i), m.omega(i).iter().map(|&j| label(j)).collect()))
                .collect()
        });
        Self {
            nodes,
            bs_id: label(m.bs),
            parent,
            cs_range_m: m.cs_range,
            cs_sets,
            protocol: ProtocolOverrides::diff(&s.params),
            acks_enabled: s.params.acks_enabled,
            analysis: AnalysisOverrides::diff(&s.analysis),
        }
    }
}

pub fn parse_scenario_file(text: &str) -> Result<ScenarioFile> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    parse_scenario_file(text)?.into_scenario()
}

pub fn load_scenario_file(path: &Path) -> Result<ScenarioFile> {
    let text = fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
    parse_scenario_file(&text)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    load_scenario_file(path)?.into_scenario()
}

pub fn scenario_to_json(s: &Scenario) -> String {
    file_to_json(&ScenarioFile::from_scenario(s))
}

pub fn file_to_json(f: &ScenarioFile) -> String {
    let mut text = serde_json::to_string_pretty(f).expect("scenario files always serialize");
    text.push('\n');
    text
}

pub fn save_scenario(path: &Path, s: &Scenario) -> Result<()> {
    fs::write(path, scenario_to_json(s)).map_err(|e| ToolError::io(path, e))
}
