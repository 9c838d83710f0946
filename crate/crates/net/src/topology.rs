use std::collections::BTreeSet;
use std::path::Path;

use hdlt_core::msp::Stakeholder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const PAPER: &str = include_str!("../topologies/topology-paper.json");
const FT: &str = include_str!("../topologies/topology-ft.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrgTopology {
    pub name: String,
    pub stakeholder: Stakeholder,
    pub anchor_port: u16,
    pub gossip_ports: Vec<u16>,
    pub ca_port: u16,
    /// World-state database port. Informational: state lives in the peer.
    pub state_port: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdererTopology {
    pub id: String,
    pub port: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyConfig {
    pub orgs: Vec<OrgTopology>,
    pub orderers: Vec<OrdererTopology>,
    pub orderer_ca_port: u16,
    pub gateway_internal_port: u16,
    pub gateway_external_port: u16,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read topology: {0}")]
    Io(#[from] std::io::Error),
    #[error("topology does not parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid topology field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), reason: reason.into() }
}

pub fn load_topology(path: &Path) -> Result<TopologyConfig, ConfigError> {
    TopologyConfig::parse(&std::fs::read_to_string(path)?)
}

impl TopologyConfig {
    /// Two orderers, three organizations, one gossip peer each.
    pub fn paper() -> Self {
        Self::parse(PAPER).expect("shipped topology is valid")
    }

    /// Three orderers and two gossip peers per organization.
    pub fn ft() -> Self {
        Self::parse(FT).expect("shipped topology is valid")
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: TopologyConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.orgs.is_empty() {
            return Err(invalid("orgs", "at least one organization is required"));
        }
        if self.orderers.is_empty() {
            return Err(invalid("orderers", "at least one orderer is required"));
        }
        let mut names = BTreeSet::new();
        let mut ports = BTreeSet::new();
        let mut claim = |field: String, port: u16| {
            if port == 0 {
                return Err(invalid(field, "port 0 is not addressable"));
            }
            if !ports.insert(port) {
                return Err(invalid(field, format!("port {port} is used twice")));
            }
            Ok(())
        };
        for (i, org) in self.orgs.iter().enumerate() {
            if org.name.is_empty() || !names.insert(org.name.clone()) {
                return Err(invalid(format!("orgs[{i}].name"), "names must be non-empty and unique"));
            }
            claim(format!("orgs[{i}].anchor_port"), org.anchor_port)?;
            for (j, &p) in org.gossip_ports.iter().enumerate() {
                claim(format!("orgs[{i}].gossip_ports[{j}]"), p)?;
            }
            claim(format!("orgs[{i}].ca_port"), org.ca_port)?;
            claim(format!("orgs[{i}].state_port"), org.state_port)?;
        }
        for (i, o) in self.orderers.iter().enumerate() {
            if o.id.is_empty() || !names.insert(o.id.clone()) {
                return Err(invalid(format!("orderers[{i}].id"), "ids must be non-empty and unique"));
            }
            claim(format!("orderers[{i}].port"), o.port)?;
        }
        claim("orderer_ca_port".into(), self.orderer_ca_port)?;
        claim("gateway_internal_port".into(), self.gateway_internal_port)?;
        claim("gateway_external_port".into(), self.gateway_external_port)?;
        Ok(())
    }

    pub fn org(&self, name: &str) -> Option<&OrgTopology> {
        self.orgs.iter().find(|o| o.name == name)
    }

    pub fn org_of(&self, stakeholder: Stakeholder) -> Option<&OrgTopology> {
        self.orgs.iter().find(|o| o.stakeholder == stakeholder)
    }

    pub fn orderer_ports(&self) -> Vec<u16> {
        self.orderers.iter().map(|o| o.port).collect()
    }
}
