//! Braided-chain sensor network simulation.
//!
//! Two chains of `d` nodes, A and B. The layer-1 nodes are sources that each
//! emit `n` packets with random sizes (disjoint id ranges: A owns `1..=n`, B
//! owns `n+1..=2n`). Every node forwards its distinct packet set to both
//! nodes of the next layer; each packet crosses a same-chain link with
//! probability `p1` and a cross-chain link with probability `p2`,
//! independently per packet, edge and layer. Each node summarizes its
//! traffic with a size-weighted sketch and a unit-weight sketch, and layer
//! queries compare sketch estimates against the exact packet sets.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bench::WeightDist;
use crate::error::{Result, SketchError};
use crate::estimate::{estimate_cardinality, estimate_difference, estimate_set_algebra, merge};
use crate::randgen::{derive_seed, SeedScheme};
use crate::sketch::GumbelMaxSketch;
use crate::stream::{StreamItem, StreamSketchState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Chain {
    A,
    B,
}

impl Chain {
    fn other(self) -> Chain {
        match self {
            Chain::A => Chain::B,
            Chain::B => Chain::A,
        }
    }

    fn slot(self) -> usize {
        match self {
            Chain::A => 0,
            Chain::B => 1,
        }
    }
}

/// How a relay node builds its sketches from delivered packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SketchPath {
    /// Stream every delivered packet into one state.
    Stream,
    /// Sketch each inbound edge separately, then merge.
    Merge,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BraidNetConfig {
    pub d: usize,
    pub p1: f64,
    pub p2: f64,
    /// Packets per source.
    pub n: usize,
    pub k: usize,
    pub weight_dist: WeightDist,
    pub seed: u64,
    pub path: SketchPath,
}

impl BraidNetConfig {
    /// `d = 30, p1 = 0.9, p2 = 0.1, n = 10^4, k = 200`, Beta(5, 5) sizes.
    pub fn reference(seed: u64) -> Self {
        Self {
            d: 30,
            p1: 0.9,
            p2: 0.1,
            n: 10_000,
            k: 200,
            weight_dist: WeightDist::Beta55,
            seed,
            path: SketchPath::Stream,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SketchError::InvalidConfig(msg));
        if self.d < 2 {
            return bad(format!("d = {} but at least 2 layers are needed", self.d));
        }
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.k < 2 {
            return Err(SketchError::KTooSmall(self.k));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub layer: usize,
    pub chain: Chain,
    /// Exact distinct packets: id to size.
    pub received: BTreeMap<u64, f64>,
    pub weighted_sketch: Option<GumbelMaxSketch>,
    pub unit_sketch: Option<GumbelMaxSketch>,
}

impl NodeState {
    pub fn total_size(&self) -> f64 {
        total(self.received.values())
    }

    pub fn is_empty(&self) -> bool {
        self.received.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: BraidNetConfig,
    /// Scheme for size-weighted sketches.
    pub scheme: SeedScheme,
    /// Scheme for unit-weight (packet count) sketches.
    pub unit_scheme: SeedScheme,
    /// Packet sizes indexed by `id - 1`.
    pub sizes: Vec<f64>,
    /// `nodes[layer - 1][chain]`.
    pub layers: Vec<[NodeState; 2]>,
}

impl Simulation {
    pub fn node(&self, layer: usize, chain: Chain) -> Result<&NodeState> {
        self.check_layer(layer)?;
        Ok(&self.layers[layer - 1][chain.slot()])
    }

    fn check_layer(&self, layer: usize) -> Result<()> {
        if layer == 0 || layer > self.layers.len() {
            return Err(SketchError::LayerOutOfRange {
                layer,
                depth: self.layers.len(),
            });
        }
        Ok(())
    }

    fn is_from_source_a(&self, id: u64) -> bool {
        id <= self.config.n as u64
    }

    /// Rebuilds a node's sketches from its exact packet set.
    pub fn rebuild_sketches(
        &self,
        node: &NodeState,
    ) -> Result<(Option<GumbelMaxSketch>, Option<GumbelMaxSketch>)> {
        let packets: Vec<(u64, f64)> = node.received.iter().map(|(&id, &w)| (id, w)).collect();
        Ok((
            sketch_packets(&[&packets], self.config.k, self.scheme, false)?,
            sketch_packets(&[&packets], self.config.k, self.unit_scheme, true)?,
        ))
    }
}

/// Streams the packets of every edge into one state, or one per edge and
/// merges, depending on `per_edge`.
fn sketch_edges(
    edges: &[&[(u64, f64)]],
    k: usize,
    scheme: SeedScheme,
    unit: bool,
    path: SketchPath,
) -> Result<Option<GumbelMaxSketch>> {
    match path {
        SketchPath::Stream => sketch_packets(edges, k, scheme, unit),
        SketchPath::Merge => {
            let parts: Vec<GumbelMaxSketch> = edges
                .iter()
                .filter_map(|e| sketch_packets(&[e], k, scheme, unit).transpose())
                .collect::<Result<_>>()?;
            if parts.is_empty() {
                return Ok(None);
            }
            let refs: Vec<&GumbelMaxSketch> = parts.iter().collect();
            merge(&refs).map(Some)
        }
    }
}

fn sketch_packets(
    edges: &[&[(u64, f64)]],
    k: usize,
    scheme: SeedScheme,
    unit: bool,
) -> Result<Option<GumbelMaxSketch>> {
    if edges.iter().all(|e| e.is_empty()) {
        return Ok(None);
    }
    let mut state = StreamSketchState::new(k, scheme)?;
    for edge in edges {
        for &(id, size) in edge.iter() {
            state.update(StreamItem::new(id, if unit { 1.0 } else { size }))?;
        }
    }
    state.into_sketch().map(Some)
}

/// Runs one realization of the network.
pub fn simulate(config: &BraidNetConfig) -> Result<Simulation> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let scheme = SeedScheme::new(derive_seed(config.seed, 1));
    let unit_scheme = SeedScheme::new(derive_seed(config.seed, 2));
    let n = config.n as u64;
    let sizes: Vec<f64> = (0..2 * n)
        .map(|_| config.weight_dist.sample(&mut rng))
        .collect();

    let mut layers: Vec<[NodeState; 2]> = Vec::with_capacity(config.d);
    let source = |chain: Chain, ids: std::ops::RangeInclusive<u64>| -> Result<NodeState> {
        let packets: Vec<(u64, f64)> = ids.map(|id| (id, sizes[id as usize - 1])).collect();
        Ok(NodeState {
            layer: 1,
            chain,
            weighted_sketch: sketch_packets(&[&packets], config.k, scheme, false)?,
            unit_sketch: sketch_packets(&[&packets], config.k, unit_scheme, true)?,
            received: packets.into_iter().collect(),
        })
    };
    layers.push([source(Chain::A, 1..=n)?, source(Chain::B, n + 1..=2 * n)?]);

    for layer in 2..=config.d {
        let upstream = &layers[layer - 2];
        let mut next: Vec<NodeState> = Vec::with_capacity(2);
        for chain in [Chain::A, Chain::B] {
            let mut deliver = |from: &NodeState, p: f64| -> Vec<(u64, f64)> {
                from.received
                    .iter()
                    .filter(|_| rng.random::<f64>() < p)
                    .map(|(&id, &w)| (id, w))
                    .collect()
            };
            let same = deliver(&upstream[chain.slot()], config.p1);
            let cross = deliver(&upstream[chain.other().slot()], config.p2);
            let edges: [&[(u64, f64)]; 2] = [&same, &cross];
            next.push(NodeState {
                layer,
                chain,
                weighted_sketch: sketch_edges(&edges, config.k, scheme, false, config.path)?,
                unit_sketch: sketch_edges(&edges, config.k, unit_scheme, true, config.path)?,
                received: same.iter().chain(&cross).copied().collect(),
            });
        }
        let b = next.pop().unwrap();
        let a = next.pop().unwrap();
        layers.push([a, b]);
    }

    Ok(Simulation {
        config: config.clone(),
        scheme,
        unit_scheme,
        sizes,
        layers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Query {
    /// `|N_A1 ∩ N_Al|_w`
    SplitA,
    /// `|N_B1 ∩ N_Al|_w`
    SplitB,
    /// Mean size of distinct packets at `A_l`.
    MeanSize,
    /// `|N_A1 \ (N_Al ∪ N_Bl)|_w`
    LostFromA,
    /// `J_W(N_Al, N_Bl)`
    CrossJw,
}

impl Query {
    pub const ALL: [Query; 5] = [
        Query::SplitA,
        Query::SplitB,
        Query::MeanSize,
        Query::LostFromA,
        Query::CrossJw,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Query::SplitA => "split_a",
            Query::SplitB => "split_b",
            Query::MeanSize => "mean_size",
            Query::LostFromA => "lost_from_a",
            Query::CrossJw => "cross_jw",
        }
    }
}

/// Exact value, sketch estimate (None when undefined on empty nodes) and the
/// 3-sigma tolerance band implied by a relative register variance of `2/k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueryValue {
    pub exact: f64,
    pub estimate: Option<f64>,
    pub band: f64,
}

impl QueryValue {
    pub fn within_band(&self) -> Option<bool> {
        self.estimate.map(|e| (e - self.exact).abs() <= self.band)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerQueries {
    pub layer: usize,
    pub split_a: QueryValue,
    pub split_b: QueryValue,
    pub mean_size: QueryValue,
    pub lost_from_a: QueryValue,
    pub cross_jw: QueryValue,
}

impl LayerQueries {
    pub fn get(&self, q: Query) -> &QueryValue {
        match q {
            Query::SplitA => &self.split_a,
            Query::SplitB => &self.split_b,
            Query::MeanSize => &self.mean_size,
            Query::LostFromA => &self.lost_from_a,
            Query::CrossJw => &self.cross_jw,
        }
    }
}

/// Sum that yields `+0.0` for no terms; std's float sum starts from `-0.0`.
fn total<'a>(sizes: impl Iterator<Item = &'a f64>) -> f64 {
    sizes.fold(0.0, |acc, w| acc + w)
}

fn hypot3(a: f64, b: f64, c: f64) -> f64 {
    (a * a + b * b + c * c).sqrt()
}

/// Evaluates every query at layer `layer` (1-based).
pub fn query_node(sim: &Simulation, layer: usize) -> Result<LayerQueries> {
    sim.check_layer(layer)?;
    let sigma = 3.0 * (2.0 / sim.config.k as f64).sqrt();
    let a1 = sim.node(1, Chain::A)?;
    let b1 = sim.node(1, Chain::B)?;
    let al = sim.node(layer, Chain::A)?;
    let bl = sim.node(layer, Chain::B)?;
    let a1_sketch = a1
        .weighted_sketch
        .as_ref()
        .expect("source nodes are never empty");
    let b1_sketch = b1
        .weighted_sketch
        .as_ref()
        .expect("source nodes are never empty");

    let c_a1 = a1.total_size();
    let c_b1 = b1.total_size();
    let c_al = al.total_size();
    let c_bl = bl.total_size();

    let al_from_a = al
        .received
        .iter()
        .filter(|(&id, _)| sim.is_from_source_a(id))
        .map(|(_, w)| w);
    let al_from_a = total(al_from_a);
    let al_from_b = c_al - al_from_a;

    let split = |source: &GumbelMaxSketch, c_src: f64, exact: f64| -> Result<QueryValue> {
        let estimate = match &al.weighted_sketch {
            Some(sk) => Some(estimate_set_algebra(source, sk)?.intersection_w),
            None => None,
        };
        Ok(QueryValue {
            exact,
            estimate,
            band: sigma * hypot3(c_src, c_al, c_src + c_al - exact),
        })
    };
    let split_a = split(a1_sketch, c_a1, al_from_a)?;
    let split_b = split(b1_sketch, c_b1, al_from_b)?;

    let mean_exact = if al.is_empty() {
        0.0
    } else {
        c_al / al.received.len() as f64
    };
    let mean_size = QueryValue {
        exact: mean_exact,
        estimate: match (&al.weighted_sketch, &al.unit_sketch) {
            (Some(w), Some(u)) => {
                Some(estimate_cardinality(w)?.value / estimate_cardinality(u)?.value)
            }
            _ => None,
        },
        band: sigma * std::f64::consts::SQRT_2 * mean_exact,
    };

    let lost_exact = total(
        a1.received
            .iter()
            .filter(|(id, _)| !al.received.contains_key(id) && !bl.received.contains_key(id))
            .map(|(_, w)| w),
    );
    let survivors: Vec<&GumbelMaxSketch> = [&al.weighted_sketch, &bl.weighted_sketch]
        .into_iter()
        .flatten()
        .collect();
    let c_lbl_union = total(
        al.received
            .iter()
            .chain(
                bl.received
                    .iter()
                    .filter(|(id, _)| !al.received.contains_key(id)),
            )
            .map(|(_, w)| w),
    );
    let lost_from_a = QueryValue {
        exact: lost_exact,
        estimate: Some(estimate_difference(a1_sketch, &survivors)?),
        band: sigma * (c_lbl_union + lost_exact).hypot(c_lbl_union),
    };

    let inter = total(
        al.received
            .iter()
            .filter(|(id, _)| bl.received.contains_key(id))
            .map(|(_, w)| w),
    );
    let cross_exact = if c_lbl_union > 0.0 {
        inter / c_lbl_union
    } else {
        0.0
    };
    let cross_jw = QueryValue {
        exact: cross_exact,
        estimate: match (&al.weighted_sketch, &bl.weighted_sketch) {
            (Some(a), Some(b)) => Some(estimate_set_algebra(a, b)?.jaccard_w),
            _ => None,
        },
        band: if c_lbl_union > 0.0 {
            sigma * hypot3(c_al, c_bl, c_lbl_union) / c_lbl_union
        } else {
            0.0
        },
    };

    Ok(LayerQueries {
        layer,
        split_a,
        split_b,
        mean_size,
        lost_from_a,
        cross_jw,
    })
}

/// Flat per-layer record for CSV output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerRow {
    pub run: usize,
    pub layer: usize,
    pub split_a_exact: f64,
    pub split_a_estimate: Option<f64>,
    pub split_b_exact: f64,
    pub split_b_estimate: Option<f64>,
    pub mean_size_exact: f64,
    pub mean_size_estimate: Option<f64>,
    pub lost_from_a_exact: f64,
    pub lost_from_a_estimate: Option<f64>,
    pub cross_jw_exact: f64,
    pub cross_jw_estimate: Option<f64>,
}

impl LayerRow {
    fn new(run: usize, q: &LayerQueries) -> Self {
        Self {
            run,
            layer: q.layer,
            split_a_exact: q.split_a.exact,
            split_a_estimate: q.split_a.estimate,
            split_b_exact: q.split_b.exact,
            split_b_estimate: q.split_b.estimate,
            mean_size_exact: q.mean_size.exact,
            mean_size_estimate: q.mean_size.estimate,
            lost_from_a_exact: q.lost_from_a.exact,
            lost_from_a_estimate: q.lost_from_a.estimate,
            cross_jw_exact: q.cross_jw.exact,
            cross_jw_estimate: q.cross_jw.estimate,
        }
    }
}

/// Queries for every layer of one run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub layers: Vec<LayerQueries>,
}

impl RunResult {
    pub fn rows(&self) -> impl Iterator<Item = LayerRow> + '_ {
        self.layers.iter().map(|q| LayerRow::new(self.run, q))
    }
}

/// Independent realizations; run `r` uses seed `derive_seed(config.seed, r)`.
///
/// `threads = 0` uses the global pool. Results come back in run order.
pub fn simulate_runs(
    config: &BraidNetConfig,
    runs: usize,
    threads: usize,
) -> Result<Vec<RunResult>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SketchError::InvalidConfig(e.to_string()))?;
    pool.install(|| {
        (0..runs)
            .into_par_iter()
            .map(|run| {
                let seed = derive_seed(config.seed, run as u64);
                let sim = simulate(&BraidNetConfig {
                    seed,
                    ..config.clone()
                })?;
                let layers = (1..=config.d)
                    .map(|l| query_node(&sim, l))
                    .collect::<Result<_>>()?;
                Ok(RunResult { run, seed, layers })
            })
            .collect()
    })
}
