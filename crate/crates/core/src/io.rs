//! JSON file formats.
//!
//! * Topology: `{nodes: [{id, x, y}], radios_per_node, tx_range,
//!   interference_x, channel_count, grid?}`.
//! * Assignment: `{"<nodeId>:<radioIndex>": channel, ...}` in node then
//!   radio order.
//! * Trace: the serialized [`OptimizationTrace`](crate::optimizer::OptimizationTrace).

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::topology::{Channel, ChannelAssignment, Topology};

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_topology(path: impl AsRef<Path>) -> Result<Topology> {
    read_json(path)
}

pub fn assignment_to_json(topo: &Topology, ca: &ChannelAssignment) -> Result<Value> {
    ca.validate(topo)?;
    let m = topo.radios_per_node();
    let mut map = Map::new();
    for (i, node) in topo.nodes().iter().enumerate() {
        for r in 0..m {
            map.insert(format!("{}:{}", node.id, r), Value::from(ca.channel(i, r)));
        }
    }
    Ok(Value::Object(map))
}

/// Parse an assignment object against `topo`, naming the first inconsistency.
pub fn assignment_from_json(topo: &Topology, value: &Value) -> Result<ChannelAssignment> {
    let map = value
        .as_object()
        .ok_or_else(|| Error::Mismatch("assignment must be a JSON object".into()))?;
    let m = topo.radios_per_node();
    let mut slots: Vec<Option<Channel>> = vec![None; topo.radio_count()];
    for (key, ch) in map {
        let (node, radio) = key
            .split_once(':')
            .and_then(|(n, r)| Some((n.trim().parse::<u32>().ok()?, r.trim().parse::<usize>().ok()?)))
            .ok_or_else(|| Error::Mismatch(format!("key '{key}' is not of the form nodeId:radioIndex")))?;
        let idx = topo
            .index_of(node)
            .ok_or_else(|| Error::Mismatch(format!("node {node} is not in the topology")))?;
        if radio >= m {
            return Err(Error::Mismatch(format!(
                "radio {node}:{radio} out of range, topology has {m} radios per node"
            )));
        }
        let ch = ch
            .as_u64()
            .and_then(|c| Channel::try_from(c).ok())
            .ok_or_else(|| Error::Mismatch(format!("radio {key} has non-integer channel {ch}")))?;
        if ch as usize >= topo.channel_count() {
            return Err(Error::ChannelOutOfRange {
                node,
                radio,
                channel: ch,
                channel_count: topo.channel_count(),
            });
        }
        slots[idx * m + radio] = Some(ch);
    }
    if let Some(missing) = slots.iter().position(Option::is_none) {
        return Err(Error::Mismatch(format!(
            "radio {}:{} has no channel",
            topo.nodes()[missing / m].id,
            missing % m
        )));
    }
    ChannelAssignment::new(topo, slots.into_iter().map(Option::unwrap).collect())
}

pub fn write_assignment(path: impl AsRef<Path>, topo: &Topology, ca: &ChannelAssignment) -> Result<()> {
    write_json(path, &assignment_to_json(topo, ca)?)
}

pub fn read_assignment(path: impl AsRef<Path>, topo: &Topology) -> Result<ChannelAssignment> {
    let value: Value = read_json(path)?;
    assignment_from_json(topo, &value)
}
