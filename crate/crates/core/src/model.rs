//! Network instance: topology, single-path routes, radio energy model,
//! and the index sets derived from them.
//!
//! Instances are loaded from a TOML document with four sections (`nodes`,
//! `links`, `routes`, `radio`); units in the file are Mbit/s, joules and
//! meters, converted to SI (bit/s, J, m) on load. The loader rejects
//! unknown fields.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

/// Index of a sensor node (every sensor is a source) in instance order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SensorId(pub usize);

/// Index of a link in instance order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkId(pub usize);

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Sensor,
    Sink,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    /// Initial battery energy in joules; `None` for sinks, which have no
    /// energy accounting.
    pub energy_j: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Link {
    pub id: String,
    /// Node index of the transmitting end.
    pub tail: usize,
    /// Node index of the receiving end.
    pub head: usize,
    pub capacity_bps: f64,
    pub distance_m: f64,
}

/// Radio energy model: transmitting one bit over distance d costs
/// `psi + sigma * d^theta` joules, receiving one bit costs `rx` joules.
#[derive(Debug, Clone, Copy)]
pub struct Radio {
    pub psi_j_per_bit: f64,
    pub sigma_j_per_bit_mtheta: f64,
    pub theta: f64,
    pub rx_j_per_bit: f64,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("instance document parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("undefined lifetime: node {node} dissipates no power")]
    UndefinedLifetime { node: String },
    #[error("link {link} is not outgoing from node {node}")]
    NotOutgoing { link: String, node: String },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Instance document schema
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    nodes: Vec<NodeDoc>,
    links: Vec<LinkDoc>,
    routes: BTreeMap<String, Vec<String>>,
    radio: RadioDoc,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    kind: KindDoc,
    energy_j: Option<f64>,
}

#[derive(Deserialize, Clone, Copy, PartialEq)]
#[serde(rename_all = "lowercase")]
enum KindDoc {
    Sensor,
    Sink,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    id: String,
    tail: String,
    head: String,
    capacity_mbps: f64,
    distance_m: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RadioDoc {
    psi_j_per_bit: f64,
    sigma_j_per_bit_mtheta: f64,
    theta: f64,
    rx_j_per_bit: f64,
}

const MBPS: f64 = 1.0e6;

// ---------------------------------------------------------------------------
// Validated instance
// ---------------------------------------------------------------------------

/// A validated network instance. Immutable after construction.
#[derive(Debug, Clone)]
pub struct NetworkInstance {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    /// Node index of each sensor, in instance order.
    pub sensors: Vec<usize>,
    /// Route of each sensor, parallel to `sensors`: ordered links from the
    /// source to some sink.
    pub routes: Vec<Vec<LinkId>>,
    pub radio: Radio,
}

impl NetworkInstance {
    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        let doc: InstanceDoc = toml::from_str(text)?;
        Self::build(doc)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    fn build(doc: InstanceDoc) -> Result<Self, ModelError> {
        let mut node_index: BTreeMap<String, usize> = BTreeMap::new();
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        for (i, n) in doc.nodes.iter().enumerate() {
            if node_index.insert(n.id.clone(), i).is_some() {
                return Err(invalid(
                    format!("nodes[{i}].id"),
                    format!("duplicate identifier {:?}", n.id),
                ));
            }
            let kind = match n.kind {
                KindDoc::Sensor => NodeKind::Sensor,
                KindDoc::Sink => NodeKind::Sink,
            };
            let energy_j = match (kind, n.energy_j) {
                (NodeKind::Sensor, Some(e)) if e > 0.0 => Some(e),
                (NodeKind::Sensor, Some(_)) => {
                    return Err(invalid(
                        format!("nodes[{i}].energy_j"),
                        "must be strictly positive",
                    ))
                }
                (NodeKind::Sensor, None) => {
                    return Err(invalid(
                        format!("nodes[{i}].energy_j"),
                        "required for sensor nodes",
                    ))
                }
                (NodeKind::Sink, Some(_)) => {
                    return Err(invalid(
                        format!("nodes[{i}].energy_j"),
                        "sink nodes have no energy accounting",
                    ))
                }
                (NodeKind::Sink, None) => None,
            };
            nodes.push(Node {
                id: n.id.clone(),
                kind,
                energy_j,
            });
        }
        if !nodes.iter().any(|n| n.kind == NodeKind::Sink) {
            return Err(invalid("nodes", "at least one sink node is required"));
        }

        let mut link_index: BTreeMap<String, usize> = BTreeMap::new();
        let mut links = Vec::with_capacity(doc.links.len());
        for (i, l) in doc.links.iter().enumerate() {
            if link_index.insert(l.id.clone(), i).is_some() {
                return Err(invalid(
                    format!("links[{i}].id"),
                    format!("duplicate identifier {:?}", l.id),
                ));
            }
            let tail = *node_index
                .get(&l.tail)
                .ok_or_else(|| invalid(format!("links[{i}].tail"), format!("unknown node {:?}", l.tail)))?;
            let head = *node_index
                .get(&l.head)
                .ok_or_else(|| invalid(format!("links[{i}].head"), format!("unknown node {:?}", l.head)))?;
            if tail == head {
                return Err(invalid(format!("links[{i}]"), "endpoints must differ"));
            }
            if nodes[tail].kind != NodeKind::Sensor {
                return Err(invalid(
                    format!("links[{i}].tail"),
                    "links must originate at a sensor node",
                ));
            }
            if l.capacity_mbps <= 0.0 {
                return Err(invalid(
                    format!("links[{i}].capacity_mbps"),
                    "must be strictly positive",
                ));
            }
            if l.distance_m <= 0.0 {
                return Err(invalid(
                    format!("links[{i}].distance_m"),
                    "must be strictly positive",
                ));
            }
            links.push(Link {
                id: l.id.clone(),
                tail,
                head,
                capacity_bps: l.capacity_mbps * MBPS,
                distance_m: l.distance_m,
            });
        }

        let r = &doc.radio;
        if r.psi_j_per_bit <= 0.0 {
            return Err(invalid("radio.psi_j_per_bit", "must be strictly positive"));
        }
        if r.sigma_j_per_bit_mtheta < 0.0 {
            return Err(invalid("radio.sigma_j_per_bit_mtheta", "must be nonnegative"));
        }
        if r.rx_j_per_bit <= 0.0 {
            return Err(invalid("radio.rx_j_per_bit", "must be strictly positive"));
        }
        if !(2.0..=4.0).contains(&r.theta) {
            return Err(invalid("radio.theta", "must lie in [2, 4]"));
        }
        let radio = Radio {
            psi_j_per_bit: r.psi_j_per_bit,
            sigma_j_per_bit_mtheta: r.sigma_j_per_bit_mtheta,
            theta: r.theta,
            rx_j_per_bit: r.rx_j_per_bit,
        };

        for key in doc.routes.keys() {
            match node_index.get(key) {
                None => {
                    return Err(invalid(
                        format!("routes.{key}"),
                        "route source is not a declared node",
                    ))
                }
                Some(&ni) if nodes[ni].kind == NodeKind::Sink => {
                    return Err(invalid(format!("routes.{key}"), "sink nodes cannot be sources"))
                }
                Some(_) => {}
            }
        }

        let sensors: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].kind == NodeKind::Sensor)
            .collect();

        let mut routes = Vec::with_capacity(sensors.len());
        for &ni in &sensors {
            let id = &nodes[ni].id;
            let hops = doc
                .routes
                .get(id)
                .ok_or_else(|| invalid("routes", format!("missing route for sensor {id:?}")))?;
            if hops.is_empty() {
                return Err(invalid(format!("routes.{id}"), "route must have at least one link"));
            }
            let mut route = Vec::with_capacity(hops.len());
            let mut at = ni;
            let mut visited = vec![ni];
            for (k, lid) in hops.iter().enumerate() {
                let li = *link_index.get(lid).ok_or_else(|| {
                    invalid(format!("routes.{id}[{k}]"), format!("unknown link {lid:?}"))
                })?;
                let link = &links[li];
                if link.tail != at {
                    return Err(invalid(
                        format!("routes.{id}[{k}]"),
                        "route does not chain: link tail differs from previous head",
                    ));
                }
                let last = k + 1 == hops.len();
                match nodes[link.head].kind {
                    NodeKind::Sink if !last => {
                        return Err(invalid(
                            format!("routes.{id}[{k}]"),
                            "route passes through a sink before its final hop",
                        ))
                    }
                    NodeKind::Sensor if last => {
                        return Err(invalid(
                            format!("routes.{id}[{k}]"),
                            "route does not terminate at sink",
                        ))
                    }
                    _ => {}
                }
                if visited.contains(&link.head) {
                    return Err(invalid(
                        format!("routes.{id}[{k}]"),
                        "route revisits a node",
                    ));
                }
                visited.push(link.head);
                at = link.head;
                route.push(LinkId(li));
            }
            routes.push(route);
        }

        Ok(NetworkInstance {
            nodes,
            links,
            sensors,
            routes,
            radio,
        })
    }

    pub fn sensor_count(&self) -> usize {
        self.sensors.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn sensor_node(&self, s: SensorId) -> &Node {
        &self.nodes[self.sensors[s.0]]
    }

    pub fn sensor_energy(&self, s: SensorId) -> f64 {
        self.sensor_node(s).energy_j.expect("sensor carries energy")
    }

    /// Sensor index of a node id, if it names a sensor.
    pub fn sensor_by_id(&self, id: &str) -> Option<SensorId> {
        self.sensors
            .iter()
            .position(|&ni| self.nodes[ni].id == id)
            .map(SensorId)
    }

    pub fn link_by_id(&self, id: &str) -> Option<LinkId> {
        self.links.iter().position(|l| l.id == id).map(LinkId)
    }

    /// Per-bit energy to transmit over `l` from sensor `s`:
    /// `psi + sigma * d^theta`. Errors unless `s` is the link's tail.
    pub fn transmit_power(&self, s: SensorId, l: LinkId) -> Result<f64, ModelError> {
        let link = &self.links[l.0];
        if link.tail != self.sensors[s.0] {
            return Err(ModelError::NotOutgoing {
                link: link.id.clone(),
                node: self.sensor_node(s).id.clone(),
            });
        }
        Ok(self.radio.psi_j_per_bit
            + self.radio.sigma_j_per_bit_mtheta * link.distance_m.powf(self.radio.theta))
    }

    /// Total power dissipated at sensor `s` under the rate vector `x`
    /// (bit/s per sensor): receive cost on incoming route links plus
    /// transmit cost on outgoing route links, for every flow crossing them.
    pub fn node_power(&self, sets: &DerivedSets, x: &[f64], s: SensorId) -> f64 {
        let mut p = 0.0;
        for &l in &sets.incoming_links[s.0] {
            for &sp in &sets.sources_on_link[l.0] {
                p += self.radio.rx_j_per_bit * x[sp.0];
            }
        }
        for &l in &sets.outgoing_links[s.0] {
            let pt = self.transmit_power(s, l).expect("outgoing link");
            for &sp in &sets.sources_on_link[l.0] {
                p += pt * x[sp.0];
            }
        }
        p
    }

    /// Lifetime of sensor `s` at dissipation `power_w`, in seconds.
    pub fn node_lifetime(&self, power_w: f64, s: SensorId) -> Result<f64, ModelError> {
        if power_w <= 0.0 {
            return Err(ModelError::UndefinedLifetime {
                node: self.sensor_node(s).id.clone(),
            });
        }
        Ok(self.sensor_energy(s) / power_w)
    }

    /// Time until the first sensor drains its battery under rates `x`.
    pub fn network_lifetime(&self, sets: &DerivedSets, x: &[f64]) -> Result<f64, ModelError> {
        let mut t = f64::INFINITY;
        for i in 0..self.sensor_count() {
            let s = SensorId(i);
            let p = self.node_power(sets, x, s);
            t = t.min(self.node_lifetime(p, s)?);
        }
        Ok(t)
    }

    pub fn derive_sets(&self) -> DerivedSets {
        DerivedSets::derive(self)
    }
}

// ---------------------------------------------------------------------------
// Derived index sets
// ---------------------------------------------------------------------------

/// Index sets and per-hop energy coefficients induced by the routes.
/// All vectors are indexed by sensor or link instance order; `pairs`
/// enumerates (link, source-on-link) in sorted order and backs the dense
/// per-pair vectors used elsewhere (code rates, allocations, prices).
#[derive(Debug, Clone)]
pub struct DerivedSets {
    /// S(l): sources whose route uses link l.
    pub sources_on_link: Vec<Vec<SensorId>>,
    /// L(s): route of s.
    pub links_of_source: Vec<Vec<LinkId>>,
    /// Route-induced incoming links of each sensor.
    pub incoming_links: Vec<Vec<LinkId>>,
    /// Route-induced outgoing links of each sensor.
    pub outgoing_links: Vec<Vec<LinkId>>,
    /// S_in(s): sources that s relays.
    pub relayed_sources: Vec<Vec<SensorId>>,
    /// S_t(s): relays on s's route, in route order.
    pub relays_of_source: Vec<Vec<SensorId>>,
    /// (relay, source) -> (incoming hop, outgoing hop) of the relay on the
    /// source's route.
    pub hop_links: BTreeMap<(SensorId, SensorId), (LinkId, LinkId)>,
    /// l_s: first link of s's route.
    pub own_first_link: Vec<LinkId>,
    /// p^(relay,source): J/bit dissipated at the relay per bit of the
    /// source's data (receive on the incoming hop + transmit on the
    /// outgoing hop).
    pub relay_power: BTreeMap<(SensorId, SensorId), f64>,
    /// All (l, s) with s in S(l), sorted by (link, sensor).
    pub pairs: Vec<(LinkId, SensorId)>,
    /// Contiguous range of `pairs` belonging to each link.
    pub link_pair_range: Vec<Range<usize>>,
    /// Pair index of each hop of each source's route, in route order.
    pub route_pairs: Vec<Vec<usize>>,
    /// Per sensor: every source it carries with the J/bit coefficient
    /// (its own flow via the first-hop transmit power, relayed flows via
    /// `relay_power`). `node_power` computed from these coefficients
    /// equals the incoming/outgoing double sum.
    pub power_coeff: Vec<Vec<(SensorId, f64)>>,
    pair_index: BTreeMap<(LinkId, SensorId), usize>,
}

impl DerivedSets {
    fn derive(inst: &NetworkInstance) -> Self {
        let ns = inst.sensor_count();
        let nl = inst.link_count();
        let node_sensor: BTreeMap<usize, SensorId> = inst
            .sensors
            .iter()
            .enumerate()
            .map(|(i, &ni)| (ni, SensorId(i)))
            .collect();

        let mut sources_on_link: Vec<Vec<SensorId>> = vec![Vec::new(); nl];
        let mut incoming_links: Vec<Vec<LinkId>> = vec![Vec::new(); ns];
        let mut outgoing_links: Vec<Vec<LinkId>> = vec![Vec::new(); ns];
        let mut relayed_sources: Vec<Vec<SensorId>> = vec![Vec::new(); ns];
        let mut relays_of_source: Vec<Vec<SensorId>> = vec![Vec::new(); ns];
        let mut hop_links = BTreeMap::new();
        let mut relay_power = BTreeMap::new();
        let mut own_first_link = Vec::with_capacity(ns);

        for (si, route) in inst.routes.iter().enumerate() {
            let s = SensorId(si);
            own_first_link.push(route[0]);
            for (k, &l) in route.iter().enumerate() {
                sources_on_link[l.0].push(s);
                if k + 1 < route.len() {
                    let relay = node_sensor[&inst.links[l.0].head];
                    relays_of_source[si].push(relay);
                    relayed_sources[relay.0].push(s);
                    let l_out = route[k + 1];
                    hop_links.insert((relay, s), (l, l_out));
                    let pt = inst.transmit_power(relay, l_out).expect("chained route");
                    relay_power.insert((relay, s), inst.radio.rx_j_per_bit + pt);
                }
            }
        }

        // Route-induced link adjacency: a link is incoming/outgoing for a
        // sensor only if some route actually crosses it there.
        for (li, link) in inst.links.iter().enumerate() {
            if sources_on_link[li].is_empty() {
                continue;
            }
            let l = LinkId(li);
            if let Some(&s) = node_sensor.get(&link.tail) {
                outgoing_links[s.0].push(l);
            }
            if let Some(&s) = node_sensor.get(&link.head) {
                incoming_links[s.0].push(l);
            }
        }
        for v in sources_on_link.iter_mut() {
            v.sort();
        }
        for v in relayed_sources.iter_mut() {
            v.sort();
        }

        let mut pairs = Vec::new();
        let mut link_pair_range = Vec::with_capacity(nl);
        let mut pair_index = BTreeMap::new();
        for li in 0..nl {
            let start = pairs.len();
            for &s in &sources_on_link[li] {
                pair_index.insert((LinkId(li), s), pairs.len());
                pairs.push((LinkId(li), s));
            }
            link_pair_range.push(start..pairs.len());
        }

        let route_pairs = inst
            .routes
            .iter()
            .enumerate()
            .map(|(si, route)| {
                route
                    .iter()
                    .map(|&l| pair_index[&(l, SensorId(si))])
                    .collect()
            })
            .collect();

        let mut power_coeff: Vec<Vec<(SensorId, f64)>> = vec![Vec::new(); ns];
        for si in 0..ns {
            let s = SensorId(si);
            let pt = inst
                .transmit_power(s, own_first_link[si])
                .expect("first hop leaves the source");
            power_coeff[si].push((s, pt));
            for &sp in &relayed_sources[si] {
                power_coeff[si].push((sp, relay_power[&(s, sp)]));
            }
        }

        DerivedSets {
            sources_on_link,
            links_of_source: inst.routes.clone(),
            incoming_links,
            outgoing_links,
            relayed_sources,
            relays_of_source,
            hop_links,
            own_first_link,
            relay_power,
            pairs,
            link_pair_range,
            route_pairs,
            power_coeff,
            pair_index,
        }
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn pair_idx(&self, l: LinkId, s: SensorId) -> Option<usize> {
        self.pair_index.get(&(l, s)).copied()
    }

    /// Aggregate load on link l under rates `x` and per-pair code rates
    /// `r`: sum over S(l) of x_s / r_{l,s}.
    pub fn link_load(&self, l: LinkId, x: &[f64], r: &[f64]) -> f64 {
        self.link_pair_range[l.0]
            .clone()
            .map(|p| {
                let (_, s) = self.pairs[p];
                x[s.0] / r[p]
            })
            .sum()
    }

    /// Node power from the rearranged per-carried-source coefficients;
    /// equal to `NetworkInstance::node_power` on validated instances.
    pub fn node_power_from_coeff(&self, x: &[f64], s: SensorId) -> f64 {
        self.power_coeff[s.0]
            .iter()
            .map(|&(sp, coeff)| coeff * x[sp.0])
            .sum()
    }
}
