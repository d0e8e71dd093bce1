use super::{LinkParams, Topology, TopologyError};

/// Parses the line-oriented topology format:
///
/// ```text
/// # comment
/// node <id>
/// link <id> <src> <dst> <bandwidth_bytes_per_s> <prop_delay_s> <loss_rate> <queue_pkts>
/// ```
///
/// Every malformed line is reported with its 1-based line number.
pub fn parse_topology(text: &str) -> Result<Topology, TopologyError> {
    let mut topo = Topology::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let fields: Vec<&str> = content.split_whitespace().collect();
        let err = |msg: String| TopologyError::Parse { line, msg };
        match fields.as_slice() {
            [] => continue,
            ["node", name] => {
                topo.add_node(name).map_err(|e| err(e.to_string()))?;
            }
            ["node", ..] => return Err(err("expected `node <id>`".into())),
            ["link", name, src, dst, bw, delay, loss, queue] => {
                let src = topo.node_id(src).map_err(|e| err(e.to_string()))?;
                let dst = topo.node_id(dst).map_err(|e| err(e.to_string()))?;
                let num = |field: &str, what: &str| {
                    field
                        .parse::<f64>()
                        .map_err(|_| err(format!("invalid {what} `{field}`")))
                };
                let params = LinkParams {
                    bandwidth: num(bw, "bandwidth")?,
                    prop_delay: num(delay, "propagation delay")?,
                    loss_rate: num(loss, "loss rate")?,
                    queue_capacity: queue
                        .parse::<u32>()
                        .map_err(|_| err(format!("invalid queue capacity `{queue}`")))?,
                };
                topo.add_link(name, src, dst, params)
                    .map_err(|e| err(e.to_string()))?;
            }
            ["link", ..] => {
                return Err(err(
                    "expected `link <id> <src> <dst> <bandwidth> <delay> <loss> <queue>`".into(),
                ))
            }
            [kw, ..] => return Err(err(format!("unknown directive `{kw}`"))),
        }
    }
    Ok(topo)
}
