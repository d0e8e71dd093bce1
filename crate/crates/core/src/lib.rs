//! Packet-level simulation of multiflow congestion control with in-network
//! path grouping.
//!
//! * [`topology`]: network graph, k-shortest paths, path grouping.
//! * [`cc`]: congestion-control engines (NMCC, Reno, coupled and uncoupled
//!   MPTCP).
//! * [`sim`]: deterministic discrete-event packet simulator.
//! * [`experiments`]: scenario catalog, replication and CSV output.

pub mod cc;
pub mod experiments;
pub mod sim;
pub mod topology;
