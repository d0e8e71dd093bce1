//! Yen's k-shortest loop-free paths with hop count as the metric.
//!
//! Paths are totally ordered by `(hop count, link-id sequence)`. The spur
//! search returns the minimum path under that order, so the output equals
//! the first `k` simple paths of a full enumeration sorted the same way.

use std::collections::{BTreeSet, VecDeque};

use super::{LinkId, NodeId, PathDescriptor, Topology, TopologyError};

pub fn yen_k_shortest(
    topo: &Topology,
    src: NodeId,
    dst: NodeId,
    k: usize,
) -> Result<Vec<PathDescriptor>, TopologyError> {
    for n in [src, dst] {
        if n.index() >= topo.nodes().len() {
            return Err(TopologyError::UnknownNode(format!("#{}", n.0)));
        }
    }
    if src == dst {
        return Err(TopologyError::SameEndpoints);
    }
    if k == 0 {
        return Err(TopologyError::ZeroK);
    }

    let n_nodes = topo.nodes().len();
    let n_links = topo.links().len();
    let Some(first) = shortest(topo, src, dst, &vec![false; n_nodes], &vec![false; n_links])
    else {
        return Ok(Vec::new());
    };

    let mut found: Vec<Vec<LinkId>> = vec![first];
    let mut candidates: BTreeSet<(usize, Vec<LinkId>)> = BTreeSet::new();

    while found.len() < k {
        let prev = found.last().expect("non-empty");
        let prev_nodes = node_walk(topo, src, prev);
        for i in 0..prev.len() {
            let spur = prev_nodes[i];
            let root = &prev[..i];

            let mut banned_links = vec![false; n_links];
            for p in &found {
                if p.len() > i && p[..i] == *root {
                    banned_links[p[i].index()] = true;
                }
            }
            let mut banned_nodes = vec![false; n_nodes];
            for n in &prev_nodes[..i] {
                banned_nodes[n.index()] = true;
            }

            if let Some(tail) = shortest(topo, spur, dst, &banned_nodes, &banned_links) {
                let mut cand = root.to_vec();
                cand.extend(tail);
                candidates.insert((cand.len(), cand));
            }
        }
        match candidates.pop_first() {
            Some((_, next)) => found.push(next),
            None => break,
        }
    }

    Ok(found.into_iter().map(PathDescriptor::new).collect())
}

fn node_walk(topo: &Topology, src: NodeId, links: &[LinkId]) -> Vec<NodeId> {
    let mut nodes = Vec::with_capacity(links.len() + 1);
    nodes.push(src);
    nodes.extend(links.iter().map(|&l| topo.link(l).dst));
    nodes
}

/// Minimum `(hops, link sequence)` path from `from` to `to` that avoids the
/// banned nodes and links.
fn shortest(
    topo: &Topology,
    from: NodeId,
    to: NodeId,
    banned_nodes: &[bool],
    banned_links: &[bool],
) -> Option<Vec<LinkId>> {
    let usable = |l: LinkId| {
        let link = topo.link(l);
        !banned_links[l.index()] && !banned_nodes[link.src.index()] && !banned_nodes[link.dst.index()]
    };

    // hop distance to `to`, by reverse BFS
    let mut incoming: Vec<Vec<LinkId>> = vec![Vec::new(); topo.nodes().len()];
    for link in topo.links() {
        if usable(link.id) {
            incoming[link.dst.index()].push(link.id);
        }
    }
    let mut dist = vec![usize::MAX; topo.nodes().len()];
    dist[to.index()] = 0;
    let mut queue = VecDeque::from([to]);
    while let Some(v) = queue.pop_front() {
        for &l in &incoming[v.index()] {
            let u = topo.link(l).src;
            if dist[u.index()] == usize::MAX {
                dist[u.index()] = dist[v.index()] + 1;
                queue.push_back(u);
            }
        }
    }
    if dist[from.index()] == usize::MAX {
        return None;
    }

    // greedy walk down the distance gradient, lowest link id first
    let mut path = Vec::with_capacity(dist[from.index()]);
    let mut at = from;
    while at != to {
        let next = topo
            .out_links(at)
            .iter()
            .copied()
            .filter(|&l| usable(l))
            .find(|&l| dist[topo.link(l).dst.index()].checked_add(1) == Some(dist[at.index()]))?;
        path.push(next);
        at = topo.link(next).dst;
    }
    Some(path)
}
