//! Instance documents: schema, parsing, serialization and seeded generators.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_path_to_error::Segment;

use crate::error::{NswError, Result};
use crate::matroid::MatroidSpec;
use crate::rng::{stream, Purpose};
use crate::valuation::{
    Hyperedge, MatchingEdge, RankTerm, Valuation, ValuationClass, ValuationSpec, MATCHING_EDGE_CAP,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    schema_version: u32,
    metadata: Metadata,
    n: usize,
    m: usize,
    valuations: Vec<ValuationSpec>,
}

/// `n` agents with one valuation each over the items `0..m`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub metadata: Metadata,
    pub n: usize,
    pub m: usize,
    valuations: Vec<Valuation>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.metadata == other.metadata
            && self.n == other.n
            && self.m == other.m
            && self
                .valuations
                .iter()
                .zip(&other.valuations)
                .all(|(a, b)| a.spec() == b.spec())
    }
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => {
                out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1")))
            }
            Segment::Enum { .. } | Segment::Unknown => {}
        }
    }
    out
}

impl Instance {
    pub fn new(
        metadata: Metadata,
        n: usize,
        m: usize,
        valuations: Vec<ValuationSpec>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(NswError::Schema {
                path: "/n".into(),
                message: "at least one agent is required".into(),
            });
        }
        if valuations.len() != n {
            return Err(NswError::Schema {
                path: "/valuations".into(),
                message: format!("expected {n} valuations, got {}", valuations.len()),
            });
        }
        let valuations = valuations
            .into_iter()
            .enumerate()
            .map(|(i, v)| Valuation::new(v, m).map_err(|e| e.at(&format!("/valuations/{i}"))))
            .collect::<Result<_>>()?;
        Ok(Instance {
            metadata,
            n,
            m,
            valuations,
        })
    }

    pub fn valuations(&self) -> &[Valuation] {
        &self.valuations
    }

    pub fn valuation(&self, agent: usize) -> &Valuation {
        &self.valuations[agent]
    }

    pub fn classes(&self) -> Vec<ValuationClass> {
        self.valuations.iter().map(|v| v.spec().class()).collect()
    }

    pub fn specs(&self) -> Vec<ValuationSpec> {
        self.valuations.iter().map(|v| v.spec().clone()).collect()
    }

    fn document(&self) -> Document {
        Document {
            schema_version: SCHEMA_VERSION,
            metadata: self.metadata.clone(),
            n: self.n,
            m: self.m,
            valuations: self.specs(),
        }
    }

    /// Canonical pretty-printed JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.document()).expect("instance serializes")
    }

    /// 64-bit FNV-1a digest of the canonical serialization, as hex.
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.to_json().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// Parse and validate an instance document.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| NswError::Schema {
        path: String::new(),
        message: e.to_string(),
    })?;
    match value.get("schema_version") {
        None => {
            return Err(NswError::Schema {
                path: "/schema_version".into(),
                message: "missing schema_version".into(),
            })
        }
        Some(v) if v.as_u64() != Some(SCHEMA_VERSION as u64) => {
            return Err(NswError::Schema {
                path: "/schema_version".into(),
                message: format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}"),
            })
        }
        Some(_) => {}
    }
    let doc: Document = serde_path_to_error::deserialize(value).map_err(|e| NswError::Schema {
        path: pointer(e.path()),
        message: e.inner().to_string(),
    })?;
    if doc.n == 0 {
        return Err(NswError::Schema {
            path: "/n".into(),
            message: "at least one agent is required".into(),
        });
    }
    Instance::new(doc.metadata, doc.n, doc.m, doc.valuations)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Rank,
    SumRank,
    Coverage,
    Matching,
    KMatching,
}

impl std::str::FromStr for Family {
    type Err = NswError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rank" => Ok(Family::Rank),
            "sumrank" => Ok(Family::SumRank),
            "coverage" => Ok(Family::Coverage),
            "matching" => Ok(Family::Matching),
            "kmatching" => Ok(Family::KMatching),
            other => Err(NswError::input(format!(
                "unknown family {other:?} (rank, sumrank, coverage, matching, kmatching)"
            ))),
        }
    }
}

/// Matroid families drawn by the generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatroidFamily {
    Uniform,
    Partition,
    Graphic,
    Free,
    /// Uniform, partition or graphic, chosen per matroid.
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub matroids: MatroidFamily,
    /// Rank terms per agent for `sumrank`.
    pub terms: usize,
    /// Universe size for `coverage`; 0 picks `m + 1`.
    pub universe: usize,
    /// Right vertices for `matching`; 0 picks `m / 2 + 1`.
    pub right_vertices: usize,
    /// Hypergraph dimension for `kmatching`.
    pub k: usize,
    /// Vertices per part for `kmatching`.
    pub part_size: usize,
    /// Probability that a generated weight is zero.
    pub zero_weight: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            matroids: MatroidFamily::Mixed,
            terms: 2,
            universe: 0,
            right_vertices: 0,
            k: 3,
            part_size: 2,
            zero_weight: 0.15,
        }
    }
}

fn weight(rng: &mut ChaCha8Rng, zero: f64) -> f64 {
    if rng.gen_bool(zero) {
        0.0
    } else {
        // two decimals keep documents readable
        (rng.gen_range(0.5..5.0_f64) * 100.0).round() / 100.0
    }
}

/// A random matroid on `ground` elements.
pub fn random_matroid(rng: &mut ChaCha8Rng, ground: usize, family: MatroidFamily) -> MatroidSpec {
    let family = match family {
        MatroidFamily::Mixed => *[
            MatroidFamily::Uniform,
            MatroidFamily::Partition,
            MatroidFamily::Graphic,
        ]
        .choose(rng)
        .unwrap(),
        f => f,
    };
    match family {
        MatroidFamily::Free => MatroidSpec::free(ground),
        MatroidFamily::Uniform => MatroidSpec::Uniform {
            ground_size: ground,
            rank: if ground == 0 {
                0
            } else {
                rng.gen_range(1..=ground)
            },
        },
        MatroidFamily::Partition => {
            let blocks_n = if ground == 0 {
                0
            } else {
                rng.gen_range(1..=ground.min(3))
            };
            let mut blocks = vec![Vec::new(); blocks_n];
            for e in 0..ground {
                // keep every block nonempty
                let b = if e < blocks_n {
                    e
                } else {
                    rng.gen_range(0..blocks_n)
                };
                blocks[b].push(e);
            }
            let capacities = blocks.iter().map(|b| rng.gen_range(1..=b.len())).collect();
            MatroidSpec::Partition { blocks, capacities }
        }
        MatroidFamily::Graphic => {
            let vertex_count = (ground / 2 + 2).max(2);
            let edges = (0..ground)
                .map(|_| {
                    let a = rng.gen_range(0..vertex_count);
                    let mut b = rng.gen_range(0..vertex_count - 1);
                    if b >= a {
                        b += 1;
                    }
                    (a, b)
                })
                .collect();
            MatroidSpec::Graphic {
                vertex_count,
                edges,
            }
        }
        MatroidFamily::Mixed => unreachable!(),
    }
}

/// Reproducible random instance.
pub fn generate(
    family: Family,
    n: usize,
    m: usize,
    seed: u64,
    params: &GenParams,
) -> Result<Instance> {
    if n == 0 {
        return Err(NswError::input("at least one agent is required"));
    }
    const ITEM_CAP: usize = 20;
    if m > ITEM_CAP {
        return Err(NswError::size(
            "generated item count",
            m as u128,
            ITEM_CAP as u128,
        ));
    }
    let mut valuations = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = stream(seed, 0, Purpose::Generator, i as u64);
        let z = params.zero_weight;
        let spec = match family {
            Family::Rank => ValuationSpec::WeightedMatroidRank {
                matroid: random_matroid(&mut rng, m, params.matroids),
                weights: (0..m).map(|_| weight(&mut rng, z)).collect(),
            },
            Family::SumRank => ValuationSpec::SumOfWeightedRanks {
                terms: (0..params.terms.max(1))
                    .map(|_| RankTerm {
                        matroid: random_matroid(&mut rng, m, params.matroids),
                        weights: (0..m).map(|_| weight(&mut rng, z)).collect(),
                    })
                    .collect(),
            },
            Family::Coverage => {
                let universe_size = if params.universe == 0 {
                    m + 1
                } else {
                    params.universe
                };
                let covers = (0..m)
                    .map(|_| (0..universe_size).filter(|_| rng.gen_bool(0.4)).collect())
                    .collect();
                ValuationSpec::Coverage {
                    universe_size,
                    covers,
                }
            }
            Family::Matching => {
                let right = if params.right_vertices == 0 {
                    m / 2 + 1
                } else {
                    params.right_vertices
                };
                let mut edges = Vec::new();
                for j in 0..m {
                    let mut ks: Vec<usize> = (0..right).collect();
                    ks.shuffle(&mut rng);
                    for &k in ks.iter().take(rng.gen_range(1..=2.min(right))) {
                        if edges.len() < MATCHING_EDGE_CAP {
                            edges.push(MatchingEdge {
                                item: j,
                                right: k,
                                weight: weight(&mut rng, z),
                            });
                        }
                    }
                }
                let matroids = match params.matroids {
                    MatroidFamily::Graphic | MatroidFamily::Mixed => MatroidFamily::Mixed,
                    f => f,
                };
                ValuationSpec::BipartiteMatchingMatroid {
                    right_vertices: right,
                    edges,
                    right_matroid: random_matroid(&mut rng, right, matroids),
                }
            }
            Family::KMatching => {
                let k = params.k;
                if k < 3 {
                    return Err(NswError::input(format!("k = {k} must be at least 3")));
                }
                let parts = k - 1;
                let part_sizes = vec![params.part_size.max(1); parts];
                let mut hyperedges = Vec::new();
                for j in 0..m {
                    for _ in 0..rng.gen_range(1..=2) {
                        if hyperedges.len() < MATCHING_EDGE_CAP {
                            hyperedges.push(Hyperedge {
                                item: j,
                                vertices: part_sizes.iter().map(|&s| rng.gen_range(0..s)).collect(),
                                weight: weight(&mut rng, z),
                            });
                        }
                    }
                }
                let part_matroids = part_sizes
                    .iter()
                    .map(|&s| {
                        if rng.gen_bool(0.5) {
                            MatroidSpec::free(s)
                        } else {
                            MatroidSpec::Uniform {
                                ground_size: s,
                                rank: rng.gen_range(1..=s),
                            }
                        }
                    })
                    .collect();
                ValuationSpec::KPartiteMatching {
                    k,
                    part_sizes,
                    hyperedges,
                    part_matroids,
                }
            }
        };
        valuations.push(spec);
    }
    let name = format!(
        "{}-n{n}-m{m}-s{seed}",
        match family {
            Family::Rank => "rank",
            Family::SumRank => "sumrank",
            Family::Coverage => "coverage",
            Family::Matching => "matching",
            Family::KMatching => "kmatching",
        }
    );
    Instance::new(
        Metadata {
            name,
            seed: Some(seed),
        },
        n,
        m,
        valuations,
    )
}
