use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::state::{SpaceId, StateRef};

/// Entropy of a node's states, without its additive constant.
pub type NodeEntropy<T> = Arc<dyn Fn(&[T]) -> Option<T> + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind<T> {
    /// A chemical element space; its constant is pinned to zero.
    Element,
    Primitive,
    /// `λ₁Γ₁ × λ₂Γ₂ × …`, factors sorted by id.
    Product(Vec<(T, SpaceId)>),
}

#[derive(Clone)]
pub struct SpaceNode<T> {
    pub id: SpaceId,
    /// Moles of each chemical element.
    pub composition: Vec<T>,
    pub kind: NodeKind<T>,
    /// Number of state coordinates.
    pub dim: usize,
    entropy: Option<NodeEntropy<T>>,
}

impl<T: Real> fmt::Debug for SpaceNode<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpaceNode")
            .field("id", &self.id)
            .field("composition", &self.composition)
            .field("kind", &self.kind)
            .field("dim", &self.dim)
            .finish()
    }
}

impl<T: Real> SpaceNode<T> {
    pub fn primitive(&self) -> bool {
        !matches!(self.kind, NodeKind::Product(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessWitness<T> {
    pub from_state: StateRef<T>,
    pub to_state: StateRef<T>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Edge<T> {
    Witnesses(Vec<ProcessWitness<T>>),
    /// A one-step deficit given directly.
    Direct(T),
}

/// Spaces, the processes known between them, and the catalysts to try.
#[derive(Clone, Default)]
pub struct ReactionNetwork<T: Real> {
    nodes: BTreeMap<SpaceId, SpaceNode<T>>,
    edges: BTreeMap<(SpaceId, SpaceId), Edge<T>>,
    catalysts: Vec<SpaceId>,
}

impl<T: Real> fmt::Debug for ReactionNetwork<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReactionNetwork")
            .field("nodes", &self.nodes.values().collect::<Vec<_>>())
            .field("edges", &self.edges)
            .field("catalysts", &self.catalysts)
            .finish()
    }
}

impl<T: Real> ReactionNetwork<T> {
    pub fn new() -> Self {
        ReactionNetwork {
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            catalysts: Vec::new(),
        }
    }

    fn insert(&mut self, node: SpaceNode<T>) -> Result<&mut Self> {
        if self.nodes.contains_key(&node.id) {
            return Err(Error::Config(format!("node {} registered twice", node.id)));
        }
        if let Some(first) = self.nodes.values().next() {
            if first.composition.len() != node.composition.len() {
                return Err(Error::Config(format!(
                    "node {} has {} composition entries, expected {}",
                    node.id,
                    node.composition.len(),
                    first.composition.len()
                )));
            }
        }
        if node.composition.iter().any(|c| !(c.is_finite() && *c >= T::zero())) {
            return Err(Error::Config(format!("node {} has a negative or non-finite composition", node.id)));
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(self)
    }

    pub fn add_element(&mut self, id: impl Into<SpaceId>, composition: Vec<T>, dim: usize, entropy: Option<NodeEntropy<T>>) -> Result<&mut Self> {
        self.insert(SpaceNode { id: id.into(), composition, kind: NodeKind::Element, dim, entropy })
    }

    pub fn add_primitive(&mut self, id: impl Into<SpaceId>, composition: Vec<T>, dim: usize, entropy: Option<NodeEntropy<T>>) -> Result<&mut Self> {
        self.insert(SpaceNode { id: id.into(), composition, kind: NodeKind::Primitive, dim, entropy })
    }

    /// Registers `λ₁Γ₁ × …`; composition, dimension and entropy follow from the factors.
    pub fn add_product(&mut self, id: impl Into<SpaceId>, factors: Vec<(T, SpaceId)>) -> Result<&mut Self> {
        let id = id.into();
        if factors.is_empty() {
            return Err(Error::Config(format!("product {id} has no factors")));
        }
        let mut composition: Option<Vec<T>> = None;
        let mut dim = 0;
        for (t, f) in &factors {
            if !(*t > T::zero()) {
                return Err(Error::NonPositiveScale(format!("{t} in product {id}")));
            }
            let node = self
                .nodes
                .get(f)
                .ok_or_else(|| Error::Config(format!("product {id} names unknown factor {f}")))?;
            dim += node.dim;
            let scaled = node.composition.iter().map(|c| *c * *t);
            composition = Some(match composition {
                None => scaled.collect(),
                Some(acc) => acc.iter().zip(scaled).map(|(a, b)| *a + b).collect(),
            });
        }
        let mut factors = factors;
        factors.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.partial_cmp(&b.0).unwrap()));
        self.insert(SpaceNode {
            id,
            composition: composition.unwrap(),
            kind: NodeKind::Product(factors),
            dim,
            entropy: None,
        })
    }

    pub fn add_edge(&mut self, from: impl Into<SpaceId>, to: impl Into<SpaceId>, edge: Edge<T>) -> Result<&mut Self> {
        let (from, to) = (from.into(), to.into());
        for id in [&from, &to] {
            if !self.nodes.contains_key(id) {
                return Err(Error::Config(format!("edge endpoint {id} is not a registered node")));
            }
        }
        match &edge {
            Edge::Direct(d) if d.is_nan() || *d == T::neg_infinity() => {
                return Err(Error::Config(format!("edge {from} -> {to} has D = {d}")));
            }
            Edge::Witnesses(ws) => {
                if let Some(w) = ws.iter().find(|w| w.from_state.space != from || w.to_state.space != to) {
                    return Err(Error::Data(format!(
                        "witness {} -> {} does not belong to edge {from} -> {to}",
                        w.from_state, w.to_state
                    )));
                }
            }
            _ => {}
        }
        self.edges.insert((from, to), edge);
        Ok(self)
    }

    pub fn set_catalysts(&mut self, catalysts: Vec<SpaceId>) -> Result<&mut Self> {
        if let Some(c) = catalysts.iter().find(|c| !self.nodes.contains_key(*c)) {
            return Err(Error::Config(format!("catalyst {c} is not a registered node")));
        }
        self.catalysts = catalysts;
        Ok(self)
    }

    pub fn node(&self, id: &SpaceId) -> Option<&SpaceNode<T>> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &SpaceNode<T>> {
        self.nodes.values()
    }

    pub fn ids(&self) -> Vec<SpaceId> {
        self.nodes.keys().cloned().collect()
    }

    pub fn edges(&self) -> &BTreeMap<(SpaceId, SpaceId), Edge<T>> {
        &self.edges
    }

    pub fn catalysts(&self) -> &[SpaceId] {
        &self.catalysts
    }

    /// Entropy at `coords`; product states concatenate the (scaled) factor states.
    pub fn entropy_at(&self, id: &SpaceId, coords: &[T]) -> Option<T> {
        let node = self.nodes.get(id)?;
        if coords.len() != node.dim {
            return None;
        }
        match &node.kind {
            NodeKind::Product(factors) => {
                let mut offset = 0;
                let mut total = T::zero();
                for (t, f) in factors {
                    let d = self.nodes.get(f)?.dim;
                    let part: Vec<T> = coords[offset..offset + d].iter().map(|c| *c / *t).collect();
                    total = total + *t * self.entropy_at(f, &part)?;
                    offset += d;
                }
                Some(total)
            }
            _ => node.entropy.as_ref().and_then(|s| s(coords)).filter(|s| s.is_finite()),
        }
    }

    /// The registered product node with exactly these factors, if any.
    pub fn find_product(&self, factors: &[(T, SpaceId)]) -> Option<&SpaceId> {
        let mut want = factors.to_vec();
        want.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.partial_cmp(&b.0).unwrap()));
        self.nodes.values().find_map(|n| match &n.kind {
            NodeKind::Product(f) if *f == want => Some(&n.id),
            _ => None,
        })
    }

    /// `Γ × Γ₀` with unit scales.
    pub fn product_with(&self, g: &SpaceId, c: &SpaceId) -> Option<&SpaceId> {
        self.find_product(&[(T::one(), g.clone()), (T::one(), c.clone())])
    }

    /// The product of element spaces with the same composition as `g`.
    pub fn element_basis(&self, g: &SpaceId) -> Option<&SpaceId> {
        let target = &self.nodes.get(g)?.composition;
        self.nodes.values().find_map(|n| match &n.kind {
            NodeKind::Product(f)
                if f.iter().all(|(_, e)| matches!(self.nodes[e].kind, NodeKind::Element))
                    && close_vec(&n.composition, target) =>
            {
                Some(&n.id)
            }
            _ => None,
        })
    }
}

fn close_vec<T: Real>(a: &[T], b: &[T]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (*x - *y).abs() <= T::lit(1e-12) * T::one().max(x.abs()))
}
