//! Data model and ingestion for dialogues, items, attributes, and the
//! item–attribute knowledge graph, plus a seeded synthetic-corpus generator.
//!
//! All interchange is JSONL (one UTF-8 JSON object per line). A corpus
//! directory holds `items.jsonl`, `attributes.jsonl`, `dialogues.jsonl`, and
//! `kg_edges.jsonl`. Item ids and attribute ids must be disjoint: both kinds
//! of entity share the knowledge-graph node space and the collaborative
//! embedding table.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type EntityId = i64;
pub type ItemId = i64;
pub type AttrId = i64;
pub type DialogueId = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Genre,
    Director,
    Actor,
    Other,
}

impl AttrKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttrKind::Genre => "genre",
            AttrKind::Director => "director",
            AttrKind::Actor => "actor",
            AttrKind::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub id: AttrId,
    pub name: String,
    pub kind: AttrKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: ItemId,
    pub title: String,
    pub attribute_ids: BTreeSet<AttrId>,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    Recommender,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueTurn {
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

/// A single dialogue instance with one ground-truth target item.
///
/// `mentioned` holds the entity set I_D as (entity, attribute) pairs; the
/// entity slot may be an item or an attribute, and the attribute slot is
/// `None` when the source data lacks the annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: DialogueId,
    pub turns: Vec<DialogueTurn>,
    pub mentioned: Vec<(EntityId, Option<AttrId>)>,
    pub target_item_id: ItemId,
    pub target_attribute_ids: Vec<AttrId>,
    pub gold_preference: String,
    pub split: Split,
}

impl Dialogue {
    /// Distinct mentioned entity ids (items and attributes, plus annotated
    /// attribute slots), ascending.
    pub fn mentioned_entity_ids(&self) -> Vec<EntityId> {
        let mut ids: BTreeSet<EntityId> = BTreeSet::new();
        for &(entity, attr) in &self.mentioned {
            ids.insert(entity);
            if let Some(a) = attr {
                ids.insert(a);
            }
        }
        ids.into_iter().collect()
    }

    /// Dialogue history as `speaker: text` lines.
    pub fn history_text(&self) -> String {
        let mut s = String::new();
        for turn in &self.turns {
            let who = match turn.speaker {
                Speaker::User => "user",
                Speaker::Recommender => "recommender",
            };
            s.push_str(who);
            s.push_str(": ");
            s.push_str(&turn.text);
            s.push('\n');
        }
        s
    }
}

/// Undirected item–attribute graph. Nodes are kept explicitly so entities
/// that lose all edges (e.g. under a train/holdout edge split) stay in the
/// embedding table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeGraph {
    pub nodes: BTreeSet<EntityId>,
    pub edges: Vec<(ItemId, AttrId)>,
}

impl KnowledgeGraph {
    pub fn from_items(items: &[Item], attributes: &[Attribute]) -> Self {
        let mut nodes = BTreeSet::new();
        let mut edges = Vec::new();
        for a in attributes {
            nodes.insert(a.id);
        }
        for it in items {
            nodes.insert(it.id);
            for &a in &it.attribute_ids {
                edges.push((it.id, a));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        KnowledgeGraph { nodes, edges }
    }

    /// Same node set, subset of edges. Used for holdout evaluation.
    pub fn with_edges(&self, edges: Vec<(ItemId, AttrId)>) -> Self {
        KnowledgeGraph {
            nodes: self.nodes.clone(),
            edges,
        }
    }
}

/// Result of a normalized-title lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
enum TitleEntry {
    Unique(ItemId),
    Ambiguous,
}

/// Immutable corpus. Validated eagerly on construction; safe to share
/// read-only across concurrent episode runners.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub items: Vec<Item>,
    pub attributes: Vec<Attribute>,
    pub dialogues: Vec<Dialogue>,
    pub kg: KnowledgeGraph,
    item_idx: HashMap<ItemId, usize>,
    attr_idx: HashMap<AttrId, usize>,
    title_idx: HashMap<String, TitleEntry>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.items == other.items
            && self.attributes == other.attributes
            && self.dialogues == other.dialogues
            && self.kg == other.kg
    }
}

impl Corpus {
    pub fn new(
        mut items: Vec<Item>,
        mut attributes: Vec<Attribute>,
        mut dialogues: Vec<Dialogue>,
        kg: KnowledgeGraph,
    ) -> Result<Self> {
        items.sort_by_key(|i| i.id);
        attributes.sort_by_key(|a| a.id);
        dialogues.sort_by_key(|d| d.id);

        let mut attr_idx = HashMap::new();
        for (i, a) in attributes.iter().enumerate() {
            if a.name.trim().is_empty() {
                return Err(Error::InvalidInput(format!("attribute {} has empty name", a.id)));
            }
            if attr_idx.insert(a.id, i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate attribute id {}", a.id)));
            }
        }
        let mut item_idx = HashMap::new();
        for (i, it) in items.iter().enumerate() {
            if it.title.trim().is_empty() {
                return Err(Error::InvalidInput(format!("item {} has empty title", it.id)));
            }
            if item_idx.insert(it.id, i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate item id {}", it.id)));
            }
            if attr_idx.contains_key(&it.id) {
                return Err(Error::InvalidInput(format!(
                    "id {} is used by both an item and an attribute; entity id spaces must be disjoint",
                    it.id
                )));
            }
            for a in &it.attribute_ids {
                if !attr_idx.contains_key(a) {
                    return Err(Error::DanglingRef(format!(
                        "item {} references unknown attribute id {}",
                        it.id, a
                    )));
                }
            }
        }

        // KG must mirror item attribute sets exactly.
        let mut expected: Vec<(ItemId, AttrId)> = Vec::new();
        for it in &items {
            for &a in &it.attribute_ids {
                expected.push((it.id, a));
            }
        }
        expected.sort_unstable();
        let mut got = kg.edges.clone();
        got.sort_unstable();
        got.dedup();
        if got != expected {
            return Err(Error::InvalidInput(
                "knowledge graph edges do not match item attribute sets".into(),
            ));
        }
        for (i, a) in &kg.edges {
            if i == a {
                return Err(Error::InvalidInput(format!("self-loop on entity {i}")));
            }
            if !kg.nodes.contains(i) || !kg.nodes.contains(a) {
                return Err(Error::DanglingRef(format!("kg edge ({i},{a}) endpoint missing from node set")));
            }
        }

        for d in &dialogues {
            if d.turns.is_empty() {
                return Err(Error::InvalidInput(format!("dialogue {} has no turns", d.id)));
            }
            if !item_idx.contains_key(&d.target_item_id) {
                return Err(Error::DanglingRef(format!(
                    "dialogue {} references unknown item id {}",
                    d.id, d.target_item_id
                )));
            }
            for &(entity, attr) in &d.mentioned {
                if entity == d.target_item_id {
                    return Err(Error::InvalidInput(format!(
                        "dialogue {} mentions its own target item {}",
                        d.id, entity
                    )));
                }
                if !item_idx.contains_key(&entity) && !attr_idx.contains_key(&entity) {
                    return Err(Error::DanglingRef(format!(
                        "dialogue {} references unknown item id {}",
                        d.id, entity
                    )));
                }
                if let Some(a) = attr {
                    if !attr_idx.contains_key(&a) {
                        return Err(Error::DanglingRef(format!(
                            "dialogue {} references unknown attribute id {}",
                            d.id, a
                        )));
                    }
                }
            }
            for a in &d.target_attribute_ids {
                if !attr_idx.contains_key(a) {
                    return Err(Error::DanglingRef(format!(
                        "dialogue {} references unknown attribute id {}",
                        d.id, a
                    )));
                }
            }
        }
        let mut seen = HashSet::new();
        for d in &dialogues {
            if !seen.insert(d.id) {
                return Err(Error::InvalidInput(format!("duplicate dialogue id {}", d.id)));
            }
        }

        let mut title_idx: HashMap<String, TitleEntry> = HashMap::new();
        for it in &items {
            let key = normalize_title(&it.title);
            title_idx
                .entry(key)
                .and_modify(|e| *e = TitleEntry::Ambiguous)
                .or_insert(TitleEntry::Unique(it.id));
        }

        if dialogues.is_empty() {
            log::warn!("corpus has no dialogues");
        }

        Ok(Corpus {
            items,
            attributes,
            dialogues,
            kg,
            item_idx,
            attr_idx,
            title_idx,
        })
    }

    pub fn item(&self, id: ItemId) -> Option<&Item> {
        self.item_idx.get(&id).map(|&i| &self.items[i])
    }

    pub fn attribute(&self, id: AttrId) -> Option<&Attribute> {
        self.attr_idx.get(&id).map(|&i| &self.attributes[i])
    }

    pub fn is_item(&self, id: EntityId) -> bool {
        self.item_idx.contains_key(&id)
    }

    pub fn attribute_name(&self, id: AttrId) -> Option<&str> {
        self.attribute(id).map(|a| a.name.as_str())
    }

    /// Resolves a raw title against the catalog by normalized equality.
    /// `None` on a miss or when two catalog items normalize identically.
    pub fn match_title(&self, raw: &str) -> Option<ItemId> {
        match self.title_idx.get(&normalize_title(raw)) {
            Some(TitleEntry::Unique(id)) => Some(*id),
            _ => None,
        }
    }

    pub fn dialogues_in(&self, split: Split) -> impl Iterator<Item = &Dialogue> {
        self.dialogues.iter().filter(move |d| d.split == split)
    }

    /// All entity ids (attributes then items), ascending within each class.
    pub fn entity_ids(&self) -> Vec<EntityId> {
        let mut ids: Vec<EntityId> = self.attributes.iter().map(|a| a.id).collect();
        ids.extend(self.items.iter().map(|i| i.id));
        ids
    }
}

/// |attributes(a) ∩ attributes(b)|. Symmetric; used as the hard/simple
/// negative difficulty measure.
pub fn attribute_overlap(a: &Item, b: &Item) -> usize {
    a.attribute_ids.intersection(&b.attribute_ids).count()
}

static YEAR_SUFFIX: OnceLock<Regex> = OnceLock::new();

/// Canonical title form for matching: trailing "(YYYY)" stripped, lowercase,
/// punctuation dropped, whitespace collapsed.
pub fn normalize_title(raw: &str) -> String {
    let re = YEAR_SUFFIX.get_or_init(|| Regex::new(r"\s*\(\d{4}\)\s*$").unwrap());
    let stripped = re.replace(raw, "");
    let mut out = String::with_capacity(stripped.len());
    let mut last_space = true;
    for ch in stripped.chars() {
        let ch = ch.to_ascii_lowercase();
        if ch.is_alphanumeric() {
            out.push(ch);
            last_space = false;
        } else if !last_space {
            out.push(' ');
            last_space = true;
        }
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out
}

// ---------------------------------------------------------------------------
// JSONL ingestion and emission
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct KgEdgeRecord {
    item_id: ItemId,
    attribute_id: AttrId,
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = serde_json::from_str(&line)
            .map_err(|e| Error::malformed(path, idx + 1, e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<usize> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut n = 0;
    for rec in records {
        let line = serde_json::to_string(&rec).expect("serializable record");
        w.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        n += 1;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(n)
}

/// Loads a corpus directory (`items.jsonl`, `attributes.jsonl`,
/// `dialogues.jsonl`, `kg_edges.jsonl`) and validates referential integrity
/// eagerly.
pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    let items: Vec<Item> = read_jsonl(&dir.join("items.jsonl"))?;
    let attributes: Vec<Attribute> = read_jsonl(&dir.join("attributes.jsonl"))?;
    let dialogues: Vec<Dialogue> = read_jsonl(&dir.join("dialogues.jsonl"))?;
    let edge_records: Vec<KgEdgeRecord> = read_jsonl(&dir.join("kg_edges.jsonl"))?;

    let mut nodes = BTreeSet::new();
    for a in &attributes {
        nodes.insert(a.id);
    }
    for it in &items {
        nodes.insert(it.id);
    }
    let edges = edge_records
        .into_iter()
        .map(|r| (r.item_id, r.attribute_id))
        .collect();
    Corpus::new(items, attributes, dialogues, KnowledgeGraph { nodes, edges })
}

/// Writes the four corpus JSONL files into `dir`. Output is deterministic:
/// records are sorted by id and field order is fixed.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_jsonl(&dir.join("items.jsonl"), corpus.items.iter())?;
    write_jsonl(&dir.join("attributes.jsonl"), corpus.attributes.iter())?;
    write_jsonl(&dir.join("dialogues.jsonl"), corpus.dialogues.iter())?;
    write_jsonl(
        &dir.join("kg_edges.jsonl"),
        corpus.kg.edges.iter().map(|&(item_id, attribute_id)| KgEdgeRecord {
            item_id,
            attribute_id,
        }),
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

/// First item id in synthetic corpora; keeps item and attribute id spaces
/// disjoint (attributes start at 1).
pub const SYNTH_ITEM_ID_BASE: i64 = 10_000;
/// First dialogue id in synthetic corpora.
pub const SYNTH_DIALOGUE_ID_BASE: i64 = 1_000_000;

/// Deterministic synthetic corpus with guaranteed learnable signal:
/// dialogue text embeds the surface names of at least two target attributes
/// and one mentioned item sharing an attribute with the target, and the gold
/// preference lists every target attribute name verbatim, so a bag-of-words
/// encoder can separate targets from the catalog.
pub fn generate_synthetic_corpus(
    seed: u64,
    n_items: usize,
    n_attrs: usize,
    n_dialogues: usize,
) -> Result<Corpus> {
    if n_items < 10 {
        return Err(Error::InvalidInput(format!("n_items must be >= 10, got {n_items}")));
    }
    if n_attrs < 5 {
        return Err(Error::InvalidInput(format!("n_attrs must be >= 5, got {n_attrs}")));
    }
    if n_dialogues < 1 {
        return Err(Error::InvalidInput("n_dialogues must be >= 1".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let kinds = [AttrKind::Genre, AttrKind::Actor, AttrKind::Director, AttrKind::Other];
    let attributes: Vec<Attribute> = (0..n_attrs)
        .map(|i| {
            let kind = kinds[i % kinds.len()];
            Attribute {
                id: (i + 1) as AttrId,
                name: format!("{}{:02}", kind.as_str(), i + 1),
                kind,
            }
        })
        .collect();

    let max_attrs_per_item = 6.min(n_attrs);
    let min_attrs_per_item = 3.min(max_attrs_per_item);
    let mut items: Vec<Item> = Vec::with_capacity(n_items);
    for i in 0..n_items {
        let n_a = rng.gen_range(min_attrs_per_item..=max_attrs_per_item);
        let mut pool: Vec<AttrId> = attributes.iter().map(|a| a.id).collect();
        pool.shuffle(&mut rng);
        let attrs: BTreeSet<AttrId> = pool.into_iter().take(n_a).collect();
        let names: Vec<&str> = attrs
            .iter()
            .map(|a| attributes[(*a - 1) as usize].name.as_str())
            .collect();
        let id = SYNTH_ITEM_ID_BASE + 1 + i as i64;
        items.push(Item {
            id,
            title: format!("Movie {:04}", i + 1),
            description: format!("A film featuring {}.", names.join(", ")),
            attribute_ids: attrs,
        });
    }

    // Inverted index attribute -> items for mentioned-item selection.
    let mut by_attr: HashMap<AttrId, Vec<usize>> = HashMap::new();
    for (idx, it) in items.iter().enumerate() {
        for &a in &it.attribute_ids {
            by_attr.entry(a).or_default().push(idx);
        }
    }

    let attr_name = |id: AttrId| attributes[(id - 1) as usize].name.clone();

    let mut dialogues = Vec::with_capacity(n_dialogues);
    for d in 0..n_dialogues {
        let target_idx = rng.gen_range(0..items.len());
        let target = &items[target_idx];
        let target_attrs: Vec<AttrId> = target.attribute_ids.iter().copied().collect();

        // A mentioned item sharing at least one attribute with the target.
        let mut shared_attr = target_attrs[rng.gen_range(0..target_attrs.len())];
        let mut mention_pool: Vec<usize> = by_attr[&shared_attr]
            .iter()
            .copied()
            .filter(|&i| i != target_idx)
            .collect();
        if mention_pool.is_empty() {
            for &a in &target_attrs {
                let pool: Vec<usize> = by_attr[&a].iter().copied().filter(|&i| i != target_idx).collect();
                if !pool.is_empty() {
                    shared_attr = a;
                    mention_pool = pool;
                    break;
                }
            }
        }
        let mentioned_idx = if mention_pool.is_empty() {
            // No item shares an attribute with this target; fall back to any
            // other item so the dialogue stays well-formed.
            (target_idx + 1) % items.len()
        } else {
            mention_pool[rng.gen_range(0..mention_pool.len())]
        };
        let mentioned_item = &items[mentioned_idx];

        // Reveal exactly two target attributes in the dialogue text.
        let mut revealed = target_attrs.clone();
        revealed.shuffle(&mut rng);
        revealed.truncate(2);
        let (a1, a2) = (revealed[0], *revealed.get(1).unwrap_or(&revealed[0]));

        let turns = vec![
            DialogueTurn {
                speaker: Speaker::User,
                text: format!("Hi! I am looking for a movie like {}.", mentioned_item.title),
            },
            DialogueTurn {
                speaker: Speaker::Recommender,
                text: "What did you enjoy about it?".into(),
            },
            DialogueTurn {
                speaker: Speaker::User,
                text: format!("I liked the {} side of it.", attr_name(a1)),
            },
            DialogueTurn {
                speaker: Speaker::Recommender,
                text: "Anything else you care about?".into(),
            },
            DialogueTurn {
                speaker: Speaker::User,
                text: format!("Ideally something with {} too.", attr_name(a2)),
            },
        ];

        let mut mentioned = vec![(mentioned_item.id, Some(shared_attr))];
        mentioned.push((a1, None));
        if a2 != a1 {
            mentioned.push((a2, None));
        }

        let pref_names: Vec<String> = target_attrs.iter().map(|&a| attr_name(a)).collect();
        dialogues.push(Dialogue {
            id: SYNTH_DIALOGUE_ID_BASE + 1 + d as i64,
            turns,
            mentioned,
            target_item_id: target.id,
            target_attribute_ids: target_attrs.clone(),
            gold_preference: format!("I prefer movies with {}.", pref_names.join(", ")),
            split: Split::Train,
        });
    }

    let kg = KnowledgeGraph::from_items(&items, &attributes);
    Corpus::new(items, attributes, dialogues, kg)
}

/// Reassigns split tags over dialogues: disjoint cover, deterministic in
/// `seed`, split sizes within ±1 of `ratio · n`.
pub fn split_corpus(corpus: &Corpus, ratios: (f64, f64, f64), seed: u64) -> Result<Corpus> {
    let (rt, rv, rs) = ratios;
    if rt <= 0.0 || rv <= 0.0 || rs <= 0.0 {
        return Err(Error::InvalidInput("split ratios must be positive".into()));
    }
    if (rt + rv + rs - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "split ratios must sum to 1, got {}",
            rt + rv + rs
        )));
    }
    let n = corpus.dialogues.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n_train = (rt * n as f64).round() as usize;
    let n_valid = ((rv * n as f64).round() as usize).min(n.saturating_sub(n_train));

    let mut out = corpus.clone();
    for (pos, &idx) in order.iter().enumerate() {
        out.dialogues[idx].split = if pos < n_train {
            Split::Train
        } else if pos < n_train + n_valid {
            Split::Valid
        } else {
            Split::Test
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn tiny_corpus() -> Corpus {
        let attributes = vec![
            Attribute { id: 1, name: "comedy".into(), kind: AttrKind::Genre },
            Attribute { id: 2, name: "drama".into(), kind: AttrKind::Genre },
            Attribute { id: 3, name: "actorx".into(), kind: AttrKind::Actor },
        ];
        let items = vec![
            Item {
                id: 101,
                title: "Joker".into(),
                attribute_ids: [1, 2].into_iter().collect(),
                description: "A film featuring comedy, drama.".into(),
            },
            Item {
                id: 102,
                title: "Movie Two".into(),
                attribute_ids: [2, 3].into_iter().collect(),
                description: "A film featuring drama, actorx.".into(),
            },
            Item {
                id: 103,
                title: "Movie Three".into(),
                attribute_ids: [3].into_iter().collect(),
                description: "A film featuring actorx.".into(),
            },
        ];
        let dialogues = vec![Dialogue {
            id: 1,
            turns: vec![DialogueTurn {
                speaker: Speaker::User,
                text: "I liked Movie Two, something with comedy please".into(),
            }],
            mentioned: vec![(102, Some(2)), (1, None)],
            target_item_id: 101,
            target_attribute_ids: vec![1, 2],
            gold_preference: "I prefer movies with comedy, drama.".into(),
            split: Split::Train,
        }];
        let kg = KnowledgeGraph::from_items(&items, &attributes);
        Corpus::new(items, attributes, dialogues, kg).unwrap()
    }

    #[test]
    fn write_then_load_round_trips() {
        let corpus = tiny_corpus();
        let dir = TempDir::new().unwrap();
        write_corpus(&corpus, dir.path()).unwrap();
        let loaded = load_corpus(dir.path()).unwrap();
        assert_eq!(corpus, loaded);
        assert_eq!(loaded.items.len(), 3);
    }

    #[test]
    fn dangling_reference_names_the_id() {
        let corpus = tiny_corpus();
        let dir = TempDir::new().unwrap();
        write_corpus(&corpus, dir.path()).unwrap();
        // Append a dialogue referencing an unknown item id 999.
        let mut bad = corpus.dialogues[0].clone();
        bad.id = 2;
        bad.target_item_id = 999;
        let line = serde_json::to_string(&bad).unwrap();
        let path = dir.path().join("dialogues.jsonl");
        let mut content = fs::read_to_string(&path).unwrap();
        content.push_str(&line);
        content.push('\n');
        fs::write(&path, content).unwrap();
        let err = load_corpus(dir.path()).unwrap_err();
        assert!(err.to_string().contains("999"), "error should name id 999: {err}");
    }

    #[test]
    fn empty_dialogues_file_is_valid() {
        let corpus = tiny_corpus();
        let dir = TempDir::new().unwrap();
        write_corpus(&corpus, dir.path()).unwrap();
        fs::write(dir.path().join("dialogues.jsonl"), "").unwrap();
        let loaded = load_corpus(dir.path()).unwrap();
        assert_eq!(loaded.dialogues.len(), 0);
    }

    #[test]
    fn malformed_record_reports_line_number() {
        let corpus = tiny_corpus();
        let dir = TempDir::new().unwrap();
        write_corpus(&corpus, dir.path()).unwrap();
        let path = dir.path().join("items.jsonl");
        let mut content = fs::read_to_string(&path).unwrap();
        content.push_str("{not json\n");
        fs::write(&path, content).unwrap();
        match load_corpus(dir.path()) {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn attribute_overlap_matches_set_intersection() {
        let corpus = tiny_corpus();
        let a = corpus.item(101).unwrap();
        let b = corpus.item(102).unwrap();
        // a={1,2}, b={2,3} -> 1 shared
        assert_eq!(attribute_overlap(a, b), 1);
        assert_eq!(attribute_overlap(b, a), 1);
        assert_eq!(attribute_overlap(a, a), a.attribute_ids.len());
        let c = corpus.item(103).unwrap();
        assert_eq!(attribute_overlap(a, c), 0);
    }

    #[test]
    fn overlap_is_set_intersection_on_abc_example() {
        // a={1,2,3}, b={2,3,4} -> 2 (independent set-intersection oracle)
        let a = Item {
            id: 1000,
            title: "A".into(),
            attribute_ids: [1, 2, 3].into_iter().collect(),
            description: String::new(),
        };
        let b = Item {
            id: 1001,
            title: "B".into(),
            attribute_ids: [2, 3, 4].into_iter().collect(),
            description: String::new(),
        };
        let oracle: HashSet<i64> = a
            .attribute_ids
            .iter()
            .filter(|x| b.attribute_ids.contains(x))
            .copied()
            .collect();
        assert_eq!(attribute_overlap(&a, &b), oracle.len());
        assert_eq!(attribute_overlap(&a, &b), 2);
    }

    #[test]
    fn synthetic_corpus_is_deterministic_and_learnable() {
        let c1 = generate_synthetic_corpus(7, 50, 10, 40).unwrap();
        let c2 = generate_synthetic_corpus(7, 50, 10, 40).unwrap();
        assert_eq!(c1, c2);

        let d1 = TempDir::new().unwrap();
        let d2 = TempDir::new().unwrap();
        write_corpus(&c1, d1.path()).unwrap();
        write_corpus(&c2, d2.path()).unwrap();
        for f in ["items.jsonl", "attributes.jsonl", "dialogues.jsonl", "kg_edges.jsonl"] {
            assert_eq!(
                fs::read(d1.path().join(f)).unwrap(),
                fs::read(d2.path().join(f)).unwrap(),
                "{f} must be byte-identical for equal seeds"
            );
        }

        for d in &c1.dialogues {
            let target = c1.item(d.target_item_id).unwrap();
            let text = d.history_text();
            // At least two target attribute names appear verbatim.
            let named = target
                .attribute_ids
                .iter()
                .filter(|&&a| text.contains(c1.attribute_name(a).unwrap()))
                .count();
            assert!(named >= 2, "dialogue {} names {} target attrs", d.id, named);
            // At least one mentioned item shares an attribute with the target.
            let reachable = d.mentioned.iter().any(|&(entity, _)| {
                c1.item(entity)
                    .map(|it| attribute_overlap(it, target) >= 1)
                    .unwrap_or(false)
            });
            assert!(reachable, "dialogue {} target unreachable via overlap", d.id);
            assert!(!d.gold_preference.is_empty());
        }
    }

    #[test]
    fn synthetic_corpus_rejects_small_parameters() {
        assert!(generate_synthetic_corpus(7, 5, 5, 1).is_err());
        assert!(generate_synthetic_corpus(7, 10, 4, 1).is_err());
        assert!(generate_synthetic_corpus(7, 10, 5, 0).is_err());
    }

    #[test]
    fn split_sizes_match_ratios() {
        let corpus = generate_synthetic_corpus(3, 30, 8, 100).unwrap();
        let split = split_corpus(&corpus, (0.8, 0.1, 0.1), 11).unwrap();
        let n = |s: Split| split.dialogues_in(s).count();
        assert_eq!(n(Split::Train), 80);
        assert_eq!(n(Split::Valid), 10);
        assert_eq!(n(Split::Test), 10);
    }

    #[test]
    fn invalid_ratios_rejected() {
        let corpus = tiny_corpus();
        assert!(split_corpus(&corpus, (0.5, 0.5, 0.5), 1).is_err());
        assert!(split_corpus(&corpus, (1.0, 0.0, 0.0), 1).is_err());
    }

    #[test]
    fn single_dialogue_lands_in_exactly_one_split() {
        let corpus = tiny_corpus();
        let split = split_corpus(&corpus, (0.8, 0.1, 0.1), 5).unwrap();
        let total = split.dialogues_in(Split::Train).count()
            + split.dialogues_in(Split::Valid).count()
            + split.dialogues_in(Split::Test).count();
        assert_eq!(total, 1);
    }

    #[test]
    fn title_normalization_rules() {
        assert_eq!(normalize_title("Joker (2019)"), "joker");
        assert_eq!(normalize_title("JOKER"), "joker");
        assert_eq!(normalize_title("The  Matrix: Reloaded!"), "the matrix reloaded");
        assert_eq!(normalize_title("Blade Runner 2049"), "blade runner 2049");
    }

    #[test]
    fn title_matching_uses_normalization() {
        let corpus = tiny_corpus();
        assert_eq!(corpus.match_title("Joker (2019)"), Some(101));
        assert_eq!(corpus.match_title("JOKER"), Some(101));
        assert_eq!(corpus.match_title("Unknown Film"), None);
    }

    #[test]
    fn kg_edges_mirror_item_attributes() {
        let corpus = generate_synthetic_corpus(9, 20, 6, 5).unwrap();
        let mut from_items: Vec<(i64, i64)> = Vec::new();
        for it in &corpus.items {
            for &a in &it.attribute_ids {
                from_items.push((it.id, a));
            }
        }
        from_items.sort_unstable();
        assert_eq!(from_items, corpus.kg.edges);
    }
}
