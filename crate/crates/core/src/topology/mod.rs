//! Network graph, k-shortest path computation and path grouping.
//!
//! A [`Topology`] is a directed multigraph. Nodes and links carry string
//! names (as written in topology files) and dense numeric ids; link ids are
//! assigned in declaration order, which is also the order used to break ties
//! between equal-hop paths.
//!
//! Paths handed to the transport layer are [`PathDescriptor`]s: an explicit
//! source route plus the group label computed by [`assign_group_ids`]. Two
//! paths end up in the same group iff they are connected through a chain of
//! paths that pairwise share at least one directed link.

mod group;
mod parse;
mod yen;

use std::collections::HashMap;
use std::fmt;

pub use group::{assign_group_ids, paths_disjoint};
pub use parse::parse_topology;
pub use yen::yen_k_shortest;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TopologyError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("duplicate link id `{0}`")]
    DuplicateLink(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown link id {0}")]
    UnknownLink(usize),
    #[error("link `{link}`: {reason}")]
    InvalidLink { link: String, reason: &'static str },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("source and destination must differ")]
    SameEndpoints,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub u32);

impl LinkId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
}

/// A directed, capacitated link.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub name: String,
    pub src: NodeId,
    pub dst: NodeId,
    /// Bytes per second.
    pub bandwidth: f64,
    /// One-way propagation delay in seconds.
    pub prop_delay: f64,
    pub loss_rate: f64,
    /// Maximum number of packets waiting behind the one being serialized.
    pub queue_capacity: u32,
}

/// Link parameters used when adding a link programmatically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub bandwidth: f64,
    pub prop_delay: f64,
    pub loss_rate: f64,
    pub queue_capacity: u32,
}

impl LinkParams {
    pub fn new(bandwidth: f64, prop_delay: f64) -> Self {
        Self {
            bandwidth,
            prop_delay,
            loss_rate: 0.0,
            queue_capacity: 64,
        }
    }

    pub fn with_loss(mut self, loss_rate: f64) -> Self {
        self.loss_rate = loss_rate;
        self
    }

    pub fn with_queue(mut self, packets: u32) -> Self {
        self.queue_capacity = packets;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<Link>,
    node_names: HashMap<String, NodeId>,
    link_names: HashMap<String, LinkId>,
    out_links: Vec<Vec<LinkId>>,
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, name: &str) -> Result<NodeId, TopologyError> {
        if self.node_names.contains_key(name) {
            return Err(TopologyError::DuplicateNode(name.to_string()));
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            id,
            name: name.to_string(),
        });
        self.node_names.insert(name.to_string(), id);
        self.out_links.push(Vec::new());
        Ok(id)
    }

    pub fn add_link(
        &mut self,
        name: &str,
        src: NodeId,
        dst: NodeId,
        params: LinkParams,
    ) -> Result<LinkId, TopologyError> {
        if self.link_names.contains_key(name) {
            return Err(TopologyError::DuplicateLink(name.to_string()));
        }
        for end in [src, dst] {
            if end.index() >= self.nodes.len() {
                return Err(TopologyError::UnknownNode(format!("#{}", end.0)));
            }
        }
        let invalid = |reason| TopologyError::InvalidLink {
            link: name.to_string(),
            reason,
        };
        if !(params.bandwidth > 0.0 && params.bandwidth.is_finite()) {
            return Err(invalid("bandwidth must be positive"));
        }
        if !(params.prop_delay >= 0.0 && params.prop_delay.is_finite()) {
            return Err(invalid("propagation delay must be non-negative"));
        }
        if !(0.0..=1.0).contains(&params.loss_rate) {
            return Err(invalid("loss rate must lie in [0, 1]"));
        }
        if params.queue_capacity == 0 {
            return Err(invalid("queue capacity must be at least one packet"));
        }
        let id = LinkId(self.links.len() as u32);
        self.links.push(Link {
            id,
            name: name.to_string(),
            src,
            dst,
            bandwidth: params.bandwidth,
            prop_delay: params.prop_delay,
            loss_rate: params.loss_rate,
            queue_capacity: params.queue_capacity,
        });
        self.link_names.insert(name.to_string(), id);
        self.out_links[src.index()].push(id);
        Ok(id)
    }

    /// Adds a pair of opposite links `name` (src→dst) and `name'` (dst→src)
    /// with identical parameters.
    pub fn add_duplex(
        &mut self,
        name: &str,
        a: NodeId,
        b: NodeId,
        params: LinkParams,
    ) -> Result<(LinkId, LinkId), TopologyError> {
        let fwd = self.add_link(name, a, b, params)?;
        let rev = self.add_link(&format!("{name}'"), b, a, params)?;
        Ok((fwd, rev))
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.index()]
    }

    pub fn try_link(&self, id: LinkId) -> Result<&Link, TopologyError> {
        self.links
            .get(id.index())
            .ok_or(TopologyError::UnknownLink(id.index()))
    }

    pub fn node_id(&self, name: &str) -> Result<NodeId, TopologyError> {
        self.node_names
            .get(name)
            .copied()
            .ok_or_else(|| TopologyError::UnknownNode(name.to_string()))
    }

    pub fn link_id(&self, name: &str) -> Option<LinkId> {
        self.link_names.get(name).copied()
    }

    /// Outgoing links of `node`, in ascending id order.
    pub fn out_links(&self, node: NodeId) -> &[LinkId] {
        &self.out_links[node.index()]
    }

    /// Checks that `links` is a non-empty simple walk through this topology.
    pub fn validate_route(&self, links: &[LinkId]) -> Result<(), TopologyError> {
        let first = links
            .first()
            .ok_or_else(|| TopologyError::InvalidPath("empty route".into()))?;
        let mut seen = vec![false; self.nodes.len()];
        let mut at = self.try_link(*first)?.src;
        seen[at.index()] = true;
        for &id in links {
            let link = self.try_link(id)?;
            if link.src != at {
                return Err(TopologyError::InvalidPath(format!(
                    "link {} does not start where the previous link ends",
                    link.name
                )));
            }
            at = link.dst;
            if std::mem::replace(&mut seen[at.index()], true) {
                return Err(TopologyError::InvalidPath(format!(
                    "node {} visited twice",
                    self.node(at).name
                )));
            }
        }
        Ok(())
    }

    /// The route ACKs take back along `links`: for every hop u→v the
    /// lowest-id link v→u, in reverse order.
    pub fn reverse_route(&self, links: &[LinkId]) -> Result<Vec<LinkId>, TopologyError> {
        links
            .iter()
            .rev()
            .map(|&id| {
                let fwd = self.try_link(id)?;
                self.out_links(fwd.dst)
                    .iter()
                    .copied()
                    .find(|&r| self.link(r).dst == fwd.src)
                    .ok_or_else(|| {
                        TopologyError::InvalidPath(format!("link {} has no reverse link", fwd.name))
                    })
            })
            .collect()
    }

    /// Serializes to the line format accepted by [`parse_topology`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            out.push_str(&format!("node {}\n", n.name));
        }
        for l in &self.links {
            out.push_str(&format!(
                "link {} {} {} {} {} {} {}\n",
                l.name,
                self.node(l.src).name,
                self.node(l.dst).name,
                l.bandwidth,
                l.prop_delay,
                l.loss_rate,
                l.queue_capacity
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupId(pub u32);

/// An explicit source route and, once assigned, its sharing group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathDescriptor {
    pub links: Vec<LinkId>,
    pub group_id: Option<GroupId>,
}

impl PathDescriptor {
    pub fn new(links: Vec<LinkId>) -> Self {
        Self {
            links,
            group_id: None,
        }
    }

    pub fn hops(&self) -> usize {
        self.links.len()
    }

    /// Node sequence of the route, source first.
    pub fn nodes(&self, topo: &Topology) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.links.len() + 1);
        if let Some(&first) = self.links.first() {
            out.push(topo.link(first).src);
        }
        out.extend(self.links.iter().map(|&l| topo.link(l).dst));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> (Topology, NodeId, NodeId, NodeId) {
        let mut t = Topology::new();
        let a = t.add_node("a").unwrap();
        let b = t.add_node("b").unwrap();
        let c = t.add_node("c").unwrap();
        let p = LinkParams::new(1e6, 0.001);
        t.add_duplex("ab", a, b, p).unwrap();
        t.add_duplex("bc", b, c, p).unwrap();
        (t, a, b, c)
    }

    #[test]
    fn rejects_bad_link_parameters() {
        let mut t = Topology::new();
        let a = t.add_node("a").unwrap();
        let b = t.add_node("b").unwrap();
        for bad in [
            LinkParams::new(0.0, 0.0),
            LinkParams::new(1.0, -1.0),
            LinkParams::new(1.0, 0.0).with_loss(1.5),
            LinkParams::new(1.0, 0.0).with_queue(0),
        ] {
            assert!(matches!(
                t.add_link("x", a, b, bad),
                Err(TopologyError::InvalidLink { .. })
            ));
        }
        assert!(t.add_link("x", a, b, LinkParams::new(1.0, 0.0).with_loss(1.0)).is_ok());
        assert_eq!(
            t.add_node("a"),
            Err(TopologyError::DuplicateNode("a".into()))
        );
    }

    #[test]
    fn route_validation() {
        let (t, ..) = line();
        let ab = t.link_id("ab").unwrap();
        let bc = t.link_id("bc").unwrap();
        let ba = t.link_id("ab'").unwrap();
        assert!(t.validate_route(&[ab, bc]).is_ok());
        assert!(t.validate_route(&[bc, ab]).is_err());
        assert!(t.validate_route(&[ab, ba]).is_err());
        assert!(t.validate_route(&[]).is_err());
        assert_eq!(
            t.validate_route(&[LinkId(99)]),
            Err(TopologyError::UnknownLink(99))
        );
    }

    #[test]
    fn reverse_route_follows_opposite_links() {
        let (t, ..) = line();
        let ab = t.link_id("ab").unwrap();
        let bc = t.link_id("bc").unwrap();
        let rev = t.reverse_route(&[ab, bc]).unwrap();
        assert_eq!(
            rev,
            vec![t.link_id("bc'").unwrap(), t.link_id("ab'").unwrap()]
        );
    }

    #[test]
    fn path_nodes() {
        let (t, a, b, c) = line();
        let p = PathDescriptor::new(vec![t.link_id("ab").unwrap(), t.link_id("bc").unwrap()]);
        assert_eq!(p.nodes(&t), vec![a, b, c]);
        assert_eq!(p.hops(), 2);
    }
}
