//! Collaborative entity embeddings over the item–attribute knowledge graph.
//!
//! A LightGCN-style propagation (no per-layer weight matrices, symmetric
//! degree normalization, mean over layer outputs) runs on top of a seeded
//! Gaussian base table. The base table is trained with the BPR pairwise loss
//! on (item, linked attribute, unlinked attribute) triples scored by inner
//! product of the propagated vectors, then frozen with propagation baked in
//! so downstream lookups are O(1).

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AttrId, EntityId, ItemId, KnowledgeGraph};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot};

/// Frozen entity-vector table (propagation already applied).
#[derive(Debug, Clone, PartialEq)]
pub struct CollabEmbeddings {
    pub dim_c: usize,
    pub n_layers: usize,
    pub table: HashMap<EntityId, Vec<f64>>,
}

impl CollabEmbeddings {
    pub fn vector(&self, id: EntityId) -> Result<&[f64]> {
        self.table
            .get(&id)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::DanglingRef(format!("no collaborative vector for entity {id}")))
    }

    pub fn is_finite(&self) -> bool {
        self.table.values().all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Hyperparameters for BPR pretraining. The defaults keep a 500-item corpus
/// under a couple of minutes on one CPU core.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BprConfig {
    pub dim_c: usize,
    pub n_layers: usize,
    pub learning_rate: f64,
    pub n_epochs: usize,
    pub negatives_per_positive: usize,
    pub batch_size: usize,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for BprConfig {
    fn default() -> Self {
        BprConfig {
            dim_c: 128,
            n_layers: 2,
            learning_rate: 0.08,
            n_epochs: 60,
            negatives_per_positive: 1,
            batch_size: 256,
            init_scale: 0.1,
            seed: 0,
        }
    }
}

impl BprConfig {
    fn validate(&self) -> Result<()> {
        if self.dim_c == 0
            || self.learning_rate < 0.0
            || self.negatives_per_positive == 0
            || self.batch_size == 0
            || self.init_scale <= 0.0
        {
            return Err(Error::InvalidInput("BprConfig fields must be positive".into()));
        }
        Ok(())
    }
}

/// Light graph convolution: layer-0 is `base`, layer-(l+1)(v) =
/// Σ_{u∈N(v)} layer-l(u) / sqrt(|N(v)|·|N(u)|), output is the mean over
/// layers 0..n_layers. Isolated nodes keep their layer-0 vector.
pub fn propagate_layers(
    base: &HashMap<EntityId, Vec<f64>>,
    kg: &KnowledgeGraph,
    n_layers: usize,
) -> HashMap<EntityId, Vec<f64>> {
    let ids: Vec<EntityId> = kg.nodes.iter().copied().collect();
    let index: HashMap<EntityId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let n = ids.len();
    let dim = base.values().next().map_or(0, |v| v.len());

    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, a) in &kg.edges {
        let (ii, ai) = (index[&i], index[&a]);
        neighbors[ii].push(ai);
        neighbors[ai].push(ii);
    }

    let mut current: Vec<Vec<f64>> = ids
        .iter()
        .map(|id| base.get(id).cloned().unwrap_or_else(|| vec![0.0; dim]))
        .collect();
    let mut sum = current.clone();

    for _ in 0..n_layers {
        let mut next: Vec<Vec<f64>> = vec![vec![0.0; dim]; n];
        for (v, nb) in neighbors.iter().enumerate() {
            if nb.is_empty() {
                continue;
            }
            let dv = (nb.len() as f64).sqrt();
            for &u in nb {
                let du = (neighbors[u].len() as f64).sqrt();
                axpy(&mut next[v], 1.0 / (dv * du), &current[u]);
            }
        }
        for v in 0..n {
            axpy(&mut sum[v], 1.0, &next[v]);
        }
        current = next;
    }

    let denom = (n_layers + 1) as f64;
    ids.iter()
        .enumerate()
        .map(|(v, &id)| {
            if neighbors[v].is_empty() {
                // Isolated: keep the base vector rather than averaging in zeros.
                (id, base.get(&id).cloned().unwrap_or_else(|| vec![0.0; dim]))
            } else {
                (id, sum[v].iter().map(|x| x / denom).collect())
            }
        })
        .collect()
}

/// −ln σ(pos − neg), computed via the stable softplus form
/// `max(z,0) + ln(1 + e^{−|z|})` with `z = −(pos − neg)`.
pub fn bpr_loss(pos_score: f64, neg_score: f64) -> f64 {
    let z = -(pos_score - neg_score);
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Per-epoch mean BPR loss, returned alongside the trained table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BprTrainReport {
    pub epoch_losses: Vec<f64>,
}

/// Pretrains the collaborative encoder on the KG and returns the frozen,
/// propagated table. Deterministic given `config.seed`.
pub fn pretrain_collab(kg: &KnowledgeGraph, config: &BprConfig) -> Result<(CollabEmbeddings, BprTrainReport)> {
    config.validate()?;
    if kg.nodes.is_empty() {
        return Err(Error::InvalidInput("knowledge graph has no nodes".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Seeded Gaussian init via Box-Muller (avoids a rand_distr dependency).
    let mut base: HashMap<EntityId, Vec<f64>> = HashMap::new();
    for &id in &kg.nodes {
        let v: Vec<f64> = (0..config.dim_c).map(|_| config.init_scale * gaussian(&mut rng)).collect();
        base.insert(id, v);
    }

    // Attribute side of each edge: attribute ids are the endpoints that only
    // ever appear in slot 1 of an edge.
    let attr_ids: Vec<AttrId> = {
        let mut set: Vec<AttrId> = kg.edges.iter().map(|&(_, a)| a).collect();
        set.sort_unstable();
        set.dedup();
        set
    };
    let mut linked: HashMap<ItemId, Vec<AttrId>> = HashMap::new();
    for &(i, a) in &kg.edges {
        linked.entry(i).or_default().push(a);
    }

    let mut epoch_losses = Vec::with_capacity(config.n_epochs);
    let mut edges: Vec<(ItemId, AttrId)> = kg.edges.clone();

    for _ in 0..config.n_epochs {
        edges.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut count = 0usize;

        for batch in edges.chunks(config.batch_size) {
            let out = propagate_layers(&base, kg, config.n_layers);
            let mut grad_out: HashMap<EntityId, Vec<f64>> = HashMap::new();

            for &(item, pos_attr) in batch {
                for _ in 0..config.negatives_per_positive {
                    let neg_attr = match sample_unlinked_attr(&attr_ids, &linked[&item], &mut rng) {
                        Some(a) => a,
                        None => continue, // item linked to every attribute
                    };
                    let vi = &out[&item];
                    let vp = &out[&pos_attr];
                    let vn = &out[&neg_attr];
                    let diff = dot(vi, vp) - dot(vi, vn);
                    epoch_loss += bpr_loss(diff, 0.0);
                    count += 1;

                    // dL/ddiff = −σ(−diff)
                    let g = -sigmoid(-diff);
                    let gi = grad_out.entry(item).or_insert_with(|| vec![0.0; config.dim_c]);
                    for (x, (p, n)) in gi.iter_mut().zip(vp.iter().zip(vn)) {
                        *x += g * (p - n);
                    }
                    let gp = grad_out.entry(pos_attr).or_insert_with(|| vec![0.0; config.dim_c]);
                    axpy(gp, g, vi);
                    let gn = grad_out.entry(neg_attr).or_insert_with(|| vec![0.0; config.dim_c]);
                    axpy(gn, -g, vi);
                }
            }

            if grad_out.is_empty() {
                continue;
            }
            // The propagation operator is symmetric, so the gradient w.r.t.
            // the base table is the same operator applied to grad_out.
            let grad_base = propagate_layers(&grad_out, kg, config.n_layers);
            let scale = config.learning_rate / batch.len() as f64;
            for (id, g) in grad_base {
                if let Some(v) = base.get_mut(&id) {
                    axpy(v, -scale, &g);
                }
            }
        }
        epoch_losses.push(if count > 0 { epoch_loss / count as f64 } else { 0.0 });
    }

    let table = propagate_layers(&base, kg, config.n_layers);
    let emb = CollabEmbeddings {
        dim_c: config.dim_c,
        n_layers: config.n_layers,
        table,
    };
    if !emb.is_finite() {
        return Err(Error::Numerical("collaborative embeddings diverged".into()));
    }
    Ok((emb, BprTrainReport { epoch_losses }))
}

fn sample_unlinked_attr(all: &[AttrId], linked: &[AttrId], rng: &mut ChaCha8Rng) -> Option<AttrId> {
    if linked.len() >= all.len() {
        return None;
    }
    loop {
        let a = all[rng.gen_range(0..all.len())];
        if !linked.contains(&a) {
            return Some(a);
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u1 in (0,1] to avoid ln(0).
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Mean pooling over entity vectors; the empty list maps to the zero vector.
pub fn collab_encode(embeddings: &CollabEmbeddings, entity_ids: &[EntityId]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; embeddings.dim_c];
    if entity_ids.is_empty() {
        return Ok(out);
    }
    for &id in entity_ids {
        axpy(&mut out, 1.0, embeddings.vector(id)?);
    }
    let n = entity_ids.len() as f64;
    for x in out.iter_mut() {
        *x /= n;
    }
    Ok(out)
}

/// AUC of propagated inner-product scores: positive edges vs. sampled
/// non-edges, exact pairwise comparison (ties count 0.5). `None` when either
/// side is empty.
pub fn edge_auc(
    emb: &CollabEmbeddings,
    positives: &[(ItemId, AttrId)],
    negatives: &[(ItemId, AttrId)],
) -> Option<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return None;
    }
    let score = |&(i, a): &(ItemId, AttrId)| {
        let vi = emb.table.get(&i)?;
        let va = emb.table.get(&a)?;
        Some(dot(vi, va))
    };
    let pos: Vec<f64> = positives.iter().filter_map(score).collect();
    let neg: Vec<f64> = negatives.iter().filter_map(score).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

// ---------------------------------------------------------------------------
// Persistence: JSONL with a versioned header line
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CollabHeader {
    format: String,
    version: u32,
    dim_c: usize,
    n_layers: usize,
}

#[derive(Serialize, Deserialize)]
struct CollabRecord {
    entity_id: EntityId,
    vector: Vec<f64>,
}

const COLLAB_FORMAT: &str = "smtpo-collab-jsonl";

pub fn save_collab(emb: &CollabEmbeddings, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = CollabHeader {
        format: COLLAB_FORMAT.into(),
        version: 1,
        dim_c: emb.dim_c,
        n_layers: emb.n_layers,
    };
    writeln!(w, "{}", serde_json::to_string(&header).unwrap()).map_err(|e| Error::io(path, e))?;
    let mut ids: Vec<EntityId> = emb.table.keys().copied().collect();
    ids.sort_unstable();
    for id in ids {
        let rec = CollabRecord {
            entity_id: id,
            vector: emb.table[&id].clone(),
        };
        writeln!(w, "{}", serde_json::to_string(&rec).unwrap()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_collab(path: &Path) -> Result<CollabEmbeddings> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let (_, header_line) = lines
        .next()
        .ok_or_else(|| Error::malformed(path, 1, "empty embeddings file"))?;
    let header_line = header_line.map_err(|e| Error::io(path, e))?;
    let header: CollabHeader = serde_json::from_str(&header_line)
        .map_err(|e| Error::malformed(path, 1, e.to_string()))?;
    if header.format != COLLAB_FORMAT {
        return Err(Error::malformed(path, 1, format!("unknown format {:?}", header.format)));
    }
    let mut table = HashMap::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CollabRecord = serde_json::from_str(&line)
            .map_err(|e| Error::malformed(path, idx + 1, e.to_string()))?;
        if rec.vector.len() != header.dim_c {
            return Err(Error::malformed(
                path,
                idx + 1,
                format!("vector width {} != dim_c {}", rec.vector.len(), header.dim_c),
            ));
        }
        table.insert(rec.entity_id, rec.vector);
    }
    Ok(CollabEmbeddings {
        dim_c: header.dim_c,
        n_layers: header.n_layers,
        table,
    })
}
