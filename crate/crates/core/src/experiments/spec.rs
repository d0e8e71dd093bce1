//! Inline scenario syntax: `kind:key=value,...`.
//!
//! ```text
//! disjoint:assist=off,n=2
//! disjoint:single
//! shared:n=4,stagger=-7
//! short:friendly_ss=off,n=1
//! xyz:2:1:1            (or xyz:x=2,y=1,z=1)
//! hetero:alg=mptcp-coupled
//! custom:src=S,dst=P,alg=nmcc,k=2,competitors=1
//! ```

use std::collections::BTreeMap;

use super::{
    scenario_disjoint, scenario_heterogeneous, scenario_shared, scenario_short_transfer,
    scenario_single_path, scenario_xyz, ExperimentError, Scenario, TopologyBuilder, TRANSFER_SECS,
};
use crate::cc::Algorithm;
use crate::sim::FlowSpec;
use crate::topology::{yen_k_shortest, Topology};

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSpec {
    Disjoint { assistance: bool, competitors: usize },
    SinglePath,
    Shared { singles: usize, stagger: f64 },
    Short { friendly_ss: bool, singles: usize },
    Xyz { x: usize, y: usize, z: usize },
    Hetero { algorithm: Algorithm },
    Custom {
        src: String,
        dst: String,
        algorithm: Algorithm,
        k: usize,
        competitors: usize,
        assistance: bool,
    },
}

fn err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Spec(msg.into())
}

struct Args<'a> {
    kind: &'a str,
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Args<'a> {
    fn take(&mut self, key: &str) -> Option<&'a str> {
        self.map.remove(key)
    }

    fn num<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T, ExperimentError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| err(format!("{}: bad value {v:?} for {key}", self.kind))),
        }
    }

    fn flag(&mut self, key: &str, default: bool) -> Result<bool, ExperimentError> {
        match self.take(key) {
            None => Ok(default),
            Some("on" | "true" | "yes" | "1") => Ok(true),
            Some("off" | "false" | "no" | "0") => Ok(false),
            Some(v) => Err(err(format!("{}: bad value {v:?} for {key}", self.kind))),
        }
    }

    fn alg(&mut self, default: Algorithm) -> Result<Algorithm, ExperimentError> {
        match self.take("alg") {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e: crate::cc::CcError| err(e.to_string())),
        }
    }

    fn finish(self) -> Result<(), ExperimentError> {
        match self.map.keys().next() {
            None => Ok(()),
            Some(k) => Err(err(format!("{}: unknown key {k:?}", self.kind))),
        }
    }
}

pub fn parse_scenario_spec(text: &str) -> Result<ScenarioSpec, ExperimentError> {
    let text = text.trim();
    let (kind, body) = text.split_once(':').unwrap_or((text, ""));
    if kind == "xyz" && !body.contains('=') && !body.is_empty() {
        let parts: Result<Vec<usize>, _> = body.split(':').map(str::parse).collect();
        return match parts.as_deref() {
            Ok(&[x, y, z]) => Ok(ScenarioSpec::Xyz { x, y, z }),
            _ => Err(err(format!("xyz: expected X:Y:Z, got {body:?}"))),
        };
    }
    if kind == "disjoint" && body == "single" {
        return Ok(ScenarioSpec::SinglePath);
    }
    let mut map = BTreeMap::new();
    for pair in body.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| err(format!("{kind}: expected key=value, got {pair:?}")))?;
        if map.insert(k.trim(), v.trim()).is_some() {
            return Err(err(format!("{kind}: duplicate key {k:?}")));
        }
    }
    let mut a = Args { kind, map };
    let spec = match kind {
        "disjoint" => ScenarioSpec::Disjoint {
            assistance: a.flag("assist", true)?,
            competitors: a.num("n", 1)?,
        },
        "shared" => ScenarioSpec::Shared {
            singles: a.num("n", 1)?,
            stagger: a.num("stagger", 0.0)?,
        },
        "short" => ScenarioSpec::Short {
            friendly_ss: a.flag("friendly_ss", true)?,
            singles: a.num("n", 1)?,
        },
        "xyz" => ScenarioSpec::Xyz {
            x: a.num("x", 2)?,
            y: a.num("y", 1)?,
            z: a.num("z", 1)?,
        },
        "hetero" => ScenarioSpec::Hetero {
            algorithm: a.alg(Algorithm::Nmcc)?,
        },
        "custom" => ScenarioSpec::Custom {
            src: a.take("src").ok_or_else(|| err("custom: missing src"))?.into(),
            dst: a.take("dst").ok_or_else(|| err("custom: missing dst"))?.into(),
            algorithm: a.alg(Algorithm::Nmcc)?,
            k: a.num("k", 2)?,
            competitors: a.num("competitors", 0)?,
            assistance: a.flag("assist", true)?,
        },
        other => return Err(err(format!("unknown scenario kind {other:?}"))),
    };
    a.finish()?;
    Ok(spec)
}

impl ScenarioSpec {
    /// Builds the scenario. `topology` is required by, and only accepted
    /// for, custom scenarios.
    pub fn build(&self, topology: Option<&Topology>) -> Result<Scenario, ExperimentError> {
        if topology.is_some() && !matches!(self, ScenarioSpec::Custom { .. }) {
            return Err(err("a topology file only applies to custom scenarios"));
        }
        Ok(match self {
            Self::Disjoint {
                assistance,
                competitors,
            } => {
                if *competitors > 2 {
                    return Err(err("disjoint: n must be 0, 1 or 2"));
                }
                scenario_disjoint(*assistance, *competitors)
            }
            Self::SinglePath => scenario_single_path(),
            Self::Shared { singles, stagger } => {
                if !stagger.is_finite() {
                    return Err(err("shared: stagger must be finite"));
                }
                scenario_shared(*singles, *stagger)
            }
            Self::Short {
                friendly_ss,
                singles,
            } => scenario_short_transfer(*friendly_ss, *singles),
            Self::Xyz { x, y, z } => scenario_xyz(*x, *y, *z)?,
            Self::Hetero { algorithm } => scenario_heterogeneous(*algorithm)?,
            Self::Custom {
                src,
                dst,
                algorithm,
                k,
                competitors,
                assistance,
            } => {
                let topo = topology.ok_or_else(|| err("custom scenarios need --topology"))?;
                custom(topo, src, dst, *algorithm, *k, *competitors, *assistance)?
            }
        })
    }
}

fn custom(
    topo: &Topology,
    src: &str,
    dst: &str,
    algorithm: Algorithm,
    k: usize,
    competitors: usize,
    assistance: bool,
) -> Result<Scenario, ExperimentError> {
    let (s, d) = (topo.node_id(src)?, topo.node_id(dst)?);
    let k = if algorithm == Algorithm::Reno { 1 } else { k };
    let paths = yen_k_shortest(topo, s, d, k)?;
    if paths.is_empty() {
        return Err(err(format!("custom: no path from {src} to {dst}")));
    }
    let mut sc = Scenario::new(
        format!("custom:src={src},dst={dst},alg={algorithm},k={k},competitors={competitors}"),
        TopologyBuilder::Custom,
        topo.clone(),
        TRANSFER_SECS,
    );
    sc.push(
        algorithm.as_str(),
        FlowSpec::new(algorithm, paths.clone()).with_assistance(assistance),
    );
    for i in 0..competitors {
        sc.push(
            format!("single-{}", i + 1),
            FlowSpec::new(Algorithm::Reno, vec![paths[i % paths.len()].clone()]),
        );
    }
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::catalog;

    #[test]
    fn catalog_names_round_trip() {
        for s in catalog() {
            let spec = parse_scenario_spec(&s.name).unwrap();
            assert_eq!(spec.build(None).unwrap().name, s.name);
        }
    }

    #[test]
    fn defaults_and_forms() {
        assert_eq!(
            parse_scenario_spec("shared:n=4").unwrap(),
            ScenarioSpec::Shared {
                singles: 4,
                stagger: 0.0
            }
        );
        assert_eq!(
            parse_scenario_spec("xyz:x=3").unwrap(),
            ScenarioSpec::Xyz { x: 3, y: 1, z: 1 }
        );
        assert_eq!(
            parse_scenario_spec("hetero:alg=lia").unwrap(),
            ScenarioSpec::Hetero {
                algorithm: Algorithm::MptcpCoupled
            }
        );
    }

    #[test]
    fn malformed_specs() {
        for bad in [
            "warp:n=1",
            "shared:n",
            "shared:n=x",
            "shared:q=1",
            "shared:n=1,n=2",
            "xyz:1:2",
            "disjoint:assist=maybe",
            "custom:src=a",
        ] {
            assert!(parse_scenario_spec(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn topology_only_for_custom() {
        let t = crate::experiments::shared_topology();
        let spec = parse_scenario_spec("shared:n=1").unwrap();
        assert!(spec.build(Some(&t)).is_err());
        let custom = parse_scenario_spec("custom:src=P,dst=S,competitors=1").unwrap();
        assert!(custom.build(None).is_err());
        let s = custom.build(Some(&t)).unwrap();
        assert_eq!(s.flows[0].paths.len(), 2);
        assert_eq!(s.connection_count(), 2);
    }
}
