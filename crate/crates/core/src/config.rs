//! TOML model configs and reaction-network files.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;

use crate::calibration::{Edge, NodeEntropy, ProcessWitness, ReactionNetwork};
use crate::error::{Error, Result};
use crate::simple::{BoxDomain, CustomTable, IdealGas, SimpleSystem, StatePoint, VanDerWaals};
use crate::state::StateRef;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Bounds {
    One([f64; 2]),
    Many(Vec<[f64; 2]>),
}

impl Bounds {
    fn pairs(&self) -> Vec<(f64, f64)> {
        match self {
            Bounds::One([a, b]) => vec![(*a, *b)],
            Bounds::Many(v) => v.iter().map(|[a, b]| (*a, *b)).collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub u: [f64; 2],
    pub v: Bounds,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableParams {
    pub u_nodes: Vec<f64>,
    pub v_nodes: Vec<f64>,
    pub pressure: Vec<f64>,
    pub entropy: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub kind: String,
    #[serde(default = "one")]
    pub amount: f64,
    pub domain: Option<DomainConfig>,
    pub params: Option<TableParams>,
}

fn one() -> f64 {
    1.0
}

impl SystemConfig {
    pub fn build(&self, name: &str) -> Result<Arc<dyn SimpleSystem<f64>>> {
        let domain = self
            .domain
            .as_ref()
            .map(|d| BoxDomain::new((d.u[0], d.u[1]), d.v.pairs()))
            .transpose()?;
        Ok(match (self.kind.as_str(), domain) {
            ("ideal-gas", Some(d)) => Arc::new(IdealGas::new(name, self.amount, d)?),
            ("ideal-gas", None) => Arc::new(IdealGas::with_default_domain(name, self.amount)?),
            ("van-der-waals", Some(d)) => Arc::new(VanDerWaals::new(name, self.amount, d)?),
            ("van-der-waals", None) => Arc::new(VanDerWaals::with_default_domain(name, self.amount)?),
            ("custom-table", _) => {
                let p = self
                    .params
                    .as_ref()
                    .ok_or_else(|| Error::Config(format!("system {name}: custom-table needs params")))?;
                Arc::new(CustomTable::new(
                    name,
                    self.amount,
                    p.u_nodes.clone(),
                    p.v_nodes.clone(),
                    p.pressure.clone(),
                    p.entropy.clone(),
                )?)
            }
            (k, _) => return Err(Error::Config(format!("system {name}: unknown kind {k:?}"))),
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckAxiomsJob {
    pub system: String,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildEntropyJob {
    pub system: String,
    pub u: [f64; 2],
    pub v: [f64; 2],
    /// Grid points per axis.
    pub points: usize,
    pub x0: Option<Vec<f64>>,
    pub x1: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdiabatJob {
    pub system: String,
    pub seed: Vec<f64>,
    /// Work coordinates visited in order.
    pub waypoints: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitJob {
    pub systems: [String; 2],
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarnotJob {
    pub q1: f64,
    pub t1: f64,
    pub q0: f64,
    pub t0: f64,
    /// Moles of ideal gas in each audited reservoir.
    #[serde(default = "default_reservoir")]
    pub reservoir_amount: f64,
    /// Extra randomized admissible cycles to check against `η ≤ η_C`.
    #[serde(default)]
    pub random_cycles: usize,
}

fn default_reservoir() -> f64 {
    1e6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateJob {
    /// Network file, relative to the config file.
    pub network: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub system: BTreeMap<String, SystemConfig>,
    pub check_axioms: Option<CheckAxiomsJob>,
    pub build_entropy: Option<BuildEntropyJob>,
    pub adiabat: Option<AdiabatJob>,
    pub split: Option<SplitJob>,
    pub carnot: Option<CarnotJob>,
    pub calibrate: Option<CalibrateJob>,
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| parse_error(text, &e))
    }

    pub fn system(&self, name: &str) -> Result<Arc<dyn SimpleSystem<f64>>> {
        self.system
            .get(name)
            .ok_or_else(|| Error::Config(format!("no [system.{name}] section")))?
            .build(name)
    }
}

fn parse_error(text: &str, e: &toml::de::Error) -> Error {
    let offset = e.span().map(|s| s.start).unwrap_or(0).min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    Error::Parse {
        line,
        column,
        message: e.message().to_string(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyRef {
    pub kind: String,
    #[serde(default = "one")]
    pub amount: f64,
    #[serde(default)]
    pub offset: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    #[serde(default = "primitive")]
    pub kind: String,
    #[serde(default)]
    pub composition: Vec<f64>,
    #[serde(default)]
    pub factors: Vec<(f64, String)>,
    pub entropy: Option<EntropyRef>,
}

fn primitive() -> String {
    "primitive".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessConfig {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    #[serde(rename = "D")]
    pub d: Option<f64>,
    #[serde(default)]
    pub witnesses: Vec<WitnessConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalystConfig {
    #[serde(default)]
    pub list: Vec<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    #[serde(default)]
    pub node: BTreeMap<String, NodeConfig>,
    #[serde(default)]
    pub edge: BTreeMap<String, BTreeMap<String, EdgeConfig>>,
    #[serde(default)]
    pub catalysts: CatalystConfig,
}

fn node_entropy(id: &str, e: &EntropyRef) -> Result<NodeEntropy<f64>> {
    let model: Arc<dyn SimpleSystem<f64>> = match e.kind.as_str() {
        "ideal-gas" => Arc::new(IdealGas::with_default_domain(id, e.amount)?),
        "van-der-waals" => Arc::new(VanDerWaals::with_default_domain(id, e.amount)?),
        k => return Err(Error::Config(format!("node {id}: unknown entropy kind {k:?}"))),
    };
    let offset = e.offset;
    Ok(Arc::new(move |c: &[f64]| {
        let p = StatePoint::from_coords(c)?;
        model.contains(&p).then(|| model.entropy(&p)).flatten().map(|s| s + offset)
    }))
}

impl NetworkFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| parse_error(text, &e))
    }

    /// Nodes are registered elements and primitives first, then products
    /// in dependency order.
    pub fn build(&self) -> Result<ReactionNetwork<f64>> {
        let mut net = ReactionNetwork::new();
        for (id, n) in &self.node {
            let entropy = n.entropy.as_ref().map(|e| node_entropy(id, e)).transpose()?;
            let dim = if entropy.is_some() { 2 } else { 0 };
            match n.kind.as_str() {
                "element" => {
                    net.add_element(id.as_str(), n.composition.clone(), dim, entropy)?;
                }
                "primitive" => {
                    net.add_primitive(id.as_str(), n.composition.clone(), dim, entropy)?;
                }
                "product" => {}
                k => return Err(Error::Config(format!("node {id}: unknown kind {k:?}"))),
            }
        }
        let mut pending: Vec<(&String, &NodeConfig)> = self.node.iter().filter(|(_, n)| n.kind == "product").collect();
        while !pending.is_empty() {
            let before = pending.len();
            let mut rest = Vec::new();
            for (id, n) in pending {
                if n.factors.iter().all(|(_, f)| net.node(&f.as_str().into()).is_some()) {
                    let factors = n.factors.iter().map(|(t, f)| (*t, f.as_str().into())).collect();
                    net.add_product(id.as_str(), factors)?;
                } else {
                    rest.push((id, n));
                }
            }
            if rest.len() == before {
                return Err(Error::Config(format!(
                    "product nodes with unknown or cyclic factors: {}",
                    rest.iter().map(|(id, _)| id.as_str()).collect::<Vec<_>>().join(", ")
                )));
            }
            pending = rest;
        }
        for (from, targets) in &self.edge {
            for (to, e) in targets {
                let edge = match (e.d, e.witnesses.is_empty()) {
                    (Some(d), true) => Edge::Direct(d),
                    (None, false) => Edge::Witnesses(
                        e.witnesses
                            .iter()
                            .map(|w| ProcessWitness {
                                from_state: StateRef::new(from.as_str(), w.from.clone()),
                                to_state: StateRef::new(to.as_str(), w.to.clone()),
                                note: w.note.clone(),
                            })
                            .collect(),
                    ),
                    _ => return Err(Error::Config(format!("edge {from} -> {to} needs exactly one of D or witnesses"))),
                };
                net.add_edge(from.as_str(), to.as_str(), edge)?;
            }
        }
        net.set_catalysts(self.catalysts.list.iter().map(|c| c.as_str().into()).collect())?;
        Ok(net)
    }
}
