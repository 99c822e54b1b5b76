//! smtpo-core: engine for simulator-guided multi-turn conversational
//! recommendation.
//!
//! The crate wires together the full interaction loop:
//!
//! 1. **corpus** — dialogue/item/attribute data model, JSONL ingestion and a
//!    seeded synthetic-corpus generator for offline experiments.
//! 2. **kg_embed** — light graph-convolutional collaborative embeddings over
//!    the item–attribute knowledge graph, pretrained with BPR and frozen.
//! 3. **semantic** — pluggable text encoders (deterministic hashing encoder,
//!    file-backed lookup tables, HTTP embedding endpoints).
//! 4. **retriever** — dual-view (semantic + collaborative) query/item encoder
//!    with cross-attention fusion, trained with InfoNCE, top-k recall.
//! 5. **agents** — simulator and recommender backends (scripted oracles,
//!    noise injection, HTTP chat completion) plus strict output parsing.
//! 6. **sft_datagen** — instruction-tuning instance generation for the
//!    simulator's three tasks and the recommender's SFT triplets.
//! 7. **rewards** — closed-form format/recommend/preference rewards and the
//!    composite scalar used for policy optimization.
//! 8. **grpo** — group-relative advantage normalization, clipped surrogate
//!    with KL penalty, a differentiable Plackett–Luce reranking policy, and
//!    rollout export for external trainers.
//! 9. **orchestrator** — the multi-turn episode state machine, turn-wise
//!    evaluation metrics, and the ablation harness.

pub mod agents;
pub mod corpus;
pub mod error;
pub mod grpo;
pub mod kg_embed;
pub mod linalg;
pub mod orchestrator;
pub mod retriever;
pub mod rewards;
pub mod semantic;
pub mod sft_datagen;

pub use error::{Error, Result};
