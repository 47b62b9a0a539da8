//! Plain-text and CSV renderings of verifier and witness results.
//!
//! Every report starts with an instance digest: the first 16 hex digits of
//! the SHA-256 of the serialized inputs.

use sha2::{Digest, Sha256};

use crate::concentration::Witness;
use crate::embeddings::Embedding;
use crate::format::serialize;
use crate::ramsey::{RamseyInstance, VerifierReport};
use crate::rational::{fmt_rational, Rational};
use crate::structures::PointedStructure;

fn map_text(e: &Embedding) -> String {
    e.map().iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

fn digest(parts: &[String]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex::encode(&h.finalize()[..8])
}

fn pointed_text(a: &PointedStructure) -> String {
    let gens: Vec<String> = a.generators().iter().map(|i| i.to_string()).collect();
    format!("{}gens {}", serialize(a.structure()), gens.join(" "))
}

pub fn instance_digest(inst: &RamseyInstance) -> String {
    let mut parts = vec![
        pointed_text(&inst.a),
        serialize(&inst.b),
        serialize(&inst.c),
        fmt_rational(&inst.epsilon),
    ];
    parts.extend(inst.family.iter().map(map_text));
    digest(&parts)
}

pub fn verifier_text(inst: &RamseyInstance, r: &VerifierReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("instance {}\n", instance_digest(inst)));
    out.push_str(&format!("epsilon {}\n", fmt_rational(&inst.epsilon)));
    out.push_str(&format!("worst_value {}\n", r.worst_value));
    out.push_str(&format!("holds {}\n", r.holds));
    out.push_str(&format!("nodes {}\n", r.nodes_explored));
    if let Some(b) = &r.best_beta {
        out.push_str(&format!("best_beta {}\n", map_text(b)));
    }
    if let Some(g) = &r.worst_coloring {
        out.push_str("coloring\n");
        for (e, v) in g.domain().members().iter().zip(g.values()) {
            out.push_str(&format!("  {} -> {}\n", map_text(e), fmt_rational(v)));
        }
    }
    out
}

pub const VERIFIER_CSV_HEADER: &str = "digest,epsilon,worst_value,holds,nodes,best_beta,coloring";

/// Header plus one row; coloring values are `;`-separated in domain order.
pub fn verifier_csv(inst: &RamseyInstance, r: &VerifierReport) -> String {
    let coloring = r
        .worst_coloring
        .as_ref()
        .map(|g| g.values().iter().map(fmt_rational).collect::<Vec<_>>().join(";"))
        .unwrap_or_default();
    format!(
        "{VERIFIER_CSV_HEADER}\n{},{},{},{},{},{},{}\n",
        instance_digest(inst),
        fmt_rational(&inst.epsilon),
        r.worst_value,
        r.holds,
        r.nodes_explored,
        r.best_beta.as_ref().map(map_text).unwrap_or_default(),
        coloring
    )
}

/// Digest of the inputs of a witness run: the carrier, `A`, the generator
/// maps, `n`, `ε` and the seed.
pub fn witness_digest(
    carrier: &str,
    a: &PointedStructure,
    generators: &[Embedding],
    n: usize,
    epsilon: &Rational,
    seed: u64,
) -> String {
    let mut parts = vec![
        carrier.to_string(),
        pointed_text(a),
        n.to_string(),
        fmt_rational(epsilon),
        seed.to_string(),
    ];
    parts.extend(generators.iter().map(map_text));
    digest(&parts)
}

pub fn witness_text(digest: &str, epsilon: &Rational, w: &Witness) -> String {
    let hs: Vec<String> = w.hs.iter().map(|h| h.to_string()).collect();
    format!(
        "instance {digest}\nepsilon {}\noscillation {}\nholds {}\nsamples {}\nexhaustive {}\nbeta {}\nhs {}\n",
        fmt_rational(epsilon),
        fmt_rational(&w.oscillation),
        w.oscillation <= epsilon * Rational::from_integer(2.into()),
        w.samples,
        w.exhaustive,
        map_text(&w.beta),
        hs.join(" ")
    )
}

pub const WITNESS_CSV_HEADER: &str = "digest,epsilon,oscillation,holds,samples,beta,hs";

pub fn witness_csv(digest: &str, epsilon: &Rational, w: &Witness) -> String {
    let hs: Vec<String> = w.hs.iter().map(|h| h.to_string()).collect();
    format!(
        "{WITNESS_CSV_HEADER}\n{digest},{},{},{},{},{},{}\n",
        fmt_rational(epsilon),
        fmt_rational(&w.oscillation),
        w.oscillation <= epsilon * Rational::from_integer(2.into()),
        w.samples,
        map_text(&w.beta),
        hs.join(" ")
    )
}
