//! Finite multi-sorted relational structures.
//!
//! Elements are dense 0-based indices within each sort, so a structure on a
//! canonical domain doubles as a non-redundant quantifier-free type of its
//! element tuple. Facts are stored as explicit tuple sets; symmetry and the
//! like are class constraints, never storage assumptions.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type SortId = usize;
pub type RelId = usize;

/// Default per-sort size bound for the exact isomorphism search.
pub const DEFAULT_ISO_GUARD: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelationDecl {
    pub name: String,
    pub profile: Vec<SortId>,
}

impl RelationDecl {
    pub fn arity(&self) -> usize {
        self.profile.len()
    }
}

/// A finite multi-sorted relational vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    sorts: Vec<String>,
    relations: Vec<RelationDecl>,
}

impl Signature {
    pub fn new(sorts: &[&str]) -> Arc<Signature> {
        Arc::new(Signature {
            sorts: sorts.iter().map(|s| s.to_string()).collect(),
            relations: Vec::new(),
        })
    }

    /// Build a signature in one call: `(name, profile of sort names)` per relation.
    pub fn build(sorts: &[&str], relations: &[(&str, &[&str])]) -> Result<Arc<Signature>> {
        let mut sig = Signature {
            sorts: sorts.iter().map(|s| s.to_string()).collect(),
            relations: Vec::new(),
        };
        {
            let mut seen = std::collections::HashSet::new();
            for s in &sig.sorts {
                if !seen.insert(s.clone()) {
                    return Err(Error::InvalidSpec(format!("duplicate sort `{s}`")));
                }
            }
        }
        for (name, profile) in relations {
            if profile.is_empty() {
                return Err(Error::InvalidSpec(format!("relation `{name}` has arity 0")));
            }
            if sig.relations.iter().any(|r| r.name == *name) {
                return Err(Error::InvalidSpec(format!("duplicate relation `{name}`")));
            }
            let prof = profile
                .iter()
                .map(|s| {
                    sig.sorts
                        .iter()
                        .position(|t| t == s)
                        .ok_or_else(|| Error::UnknownSort(s.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            sig.relations.push(RelationDecl {
                name: name.to_string(),
                profile: prof,
            });
        }
        Ok(Arc::new(sig))
    }

    pub fn sort_count(&self) -> usize {
        self.sorts.len()
    }

    pub fn sort_name(&self, s: SortId) -> &str {
        &self.sorts[s]
    }

    pub fn sort_id(&self, name: &str) -> Option<SortId> {
        self.sorts.iter().position(|s| s == name)
    }

    pub fn sorts(&self) -> &[String] {
        &self.sorts
    }

    pub fn relations(&self) -> &[RelationDecl] {
        &self.relations
    }

    pub fn relation(&self, r: RelId) -> &RelationDecl {
        &self.relations[r]
    }

    pub fn relation_id(&self, name: &str) -> Option<RelId> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn max_arity(&self) -> usize {
        self.relations.iter().map(|r| r.arity()).max().unwrap_or(0)
    }

    /// True when every relation of `self` occurs in `larger` with the same
    /// profile and the sorts coincide. Used for reducts and expansions.
    pub fn is_reduct_of(&self, larger: &Signature) -> bool {
        self.sorts == larger.sorts
            && self.relations.iter().all(|r| {
                larger
                    .relation_id(&r.name)
                    .map(|i| larger.relation(i).profile == r.profile)
                    .unwrap_or(false)
            })
    }
}

/// Packed fact table for one relation: sorted, deduplicated tuples of
/// within-sort indices, fixed stride.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
struct RelStore {
    arity: usize,
    data: Vec<u16>,
}

impl RelStore {
    fn len(&self) -> usize {
        self.data.len().checked_div(self.arity).unwrap_or(0)
    }

    fn tuple(&self, i: usize) -> &[u16] {
        &self.data[i * self.arity..(i + 1) * self.arity]
    }

    fn contains(&self, t: &[u16]) -> bool {
        debug_assert_eq!(t.len(), self.arity);
        let n = self.len();
        let (mut lo, mut hi) = (0usize, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.tuple(mid).cmp(t) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return true,
            }
        }
        false
    }

    fn iter(&self) -> impl Iterator<Item = &[u16]> {
        (0..self.len()).map(move |i| self.tuple(i))
    }
}

/// A finite structure over a fixed signature. Immutable after construction;
/// equality is extensional (domain sizes and fact sets).
#[derive(Debug, Clone)]
pub struct FinStructure {
    sig: Arc<Signature>,
    sizes: Vec<usize>,
    rels: Vec<RelStore>,
}

impl PartialEq for FinStructure {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.sig, &other.sig) || self.sig == other.sig)
            && self.sizes == other.sizes
            && self.rels == other.rels
    }
}

impl Eq for FinStructure {}

impl std::hash::Hash for FinStructure {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.sizes.hash(state);
        self.rels.hash(state);
    }
}

impl PartialOrd for FinStructure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic order on (sizes, fact tables). Structures of the same
/// signature only; this is the canonical order used by level tables and the
/// deterministic "first" policy.
impl Ord for FinStructure {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sizes
            .cmp(&other.sizes)
            .then_with(|| self.rels.cmp(&other.rels))
    }
}

impl FinStructure {
    pub fn empty(sig: Arc<Signature>) -> FinStructure {
        let sizes = vec![0; sig.sort_count()];
        FinStructure::builder(sig, &sizes).unwrap().finish()
    }

    pub fn builder(sig: Arc<Signature>, sizes: &[usize]) -> Result<StructureBuilder> {
        StructureBuilder::new(sig, sizes)
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total_size(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn fact_count(&self) -> usize {
        self.rels.iter().map(|r| r.len()).sum()
    }

    pub fn holds(&self, rel: RelId, tuple: &[usize]) -> bool {
        let store = &self.rels[rel];
        debug_assert_eq!(tuple.len(), store.arity);
        let mut buf = [0u16; 16];
        for (i, &x) in tuple.iter().enumerate() {
            buf[i] = x as u16;
        }
        store.contains(&buf[..tuple.len()])
    }

    /// All tuples of `rel`, each a slice of within-sort indices.
    pub fn facts(&self, rel: RelId) -> impl Iterator<Item = &[u16]> {
        self.rels[rel].iter()
    }

    fn check_selection(&self, sel: &[Vec<usize>]) -> Result<()> {
        if sel.len() != self.sig.sort_count() {
            return Err(Error::InvalidSelection(format!(
                "expected {} sort selections, got {}",
                self.sig.sort_count(),
                sel.len()
            )));
        }
        for (s, idxs) in sel.iter().enumerate() {
            for (pos, &i) in idxs.iter().enumerate() {
                if i >= self.sizes[s] {
                    return Err(Error::IndexOutOfRange {
                        sort: self.sig.sort_name(s).to_string(),
                        index: i,
                        size: self.sizes[s],
                    });
                }
                if pos > 0 && idxs[pos - 1] >= i {
                    return Err(Error::InvalidSelection(format!(
                        "selection for sort `{}` is not strictly increasing",
                        self.sig.sort_name(s)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Induced substructure on a per-sort subset (strictly increasing index
    /// lists). Elements are renumbered order-preservingly.
    pub fn induced(&self, sel: &[Vec<usize>]) -> Result<FinStructure> {
        self.check_selection(sel)?;
        self.type_of_tuple_unchecked(sel)
    }

    /// The quantifier-free type of an ordered tuple, presented as a structure
    /// on the canonical domain of the tuple's shape. Permuting the tuple
    /// permutes the result covariantly.
    pub fn qf_type(&self, tuple: &[Vec<usize>]) -> Result<FinStructure> {
        if tuple.len() != self.sig.sort_count() {
            return Err(Error::InvalidSelection(format!(
                "expected {} sort tuples, got {}",
                self.sig.sort_count(),
                tuple.len()
            )));
        }
        for (s, idxs) in tuple.iter().enumerate() {
            for (pos, &i) in idxs.iter().enumerate() {
                if i >= self.sizes[s] {
                    return Err(Error::IndexOutOfRange {
                        sort: self.sig.sort_name(s).to_string(),
                        index: i,
                        size: self.sizes[s],
                    });
                }
                if idxs[..pos].contains(&i) {
                    return Err(Error::RepeatedIndex {
                        sort: self.sig.sort_name(s).to_string(),
                        index: i,
                    });
                }
            }
        }
        self.type_of_tuple_unchecked(tuple)
    }

    fn type_of_tuple_unchecked(&self, tuple: &[Vec<usize>]) -> Result<FinStructure> {
        // inverse maps: old index -> new position, per sort
        let inv: Vec<Vec<Option<u16>>> = tuple
            .iter()
            .enumerate()
            .map(|(s, idxs)| {
                let mut v = vec![None; self.sizes[s]];
                for (new, &old) in idxs.iter().enumerate() {
                    v[old] = Some(new as u16);
                }
                v
            })
            .collect();
        let sizes: Vec<usize> = tuple.iter().map(|t| t.len()).collect();
        let mut b = StructureBuilder::new(self.sig.clone(), &sizes)?;
        let mut mapped: Vec<u16> = Vec::new();
        for (r, decl) in self.sig.relations().iter().enumerate() {
            'facts: for fact in self.rels[r].iter() {
                mapped.clear();
                for (pos, &x) in fact.iter().enumerate() {
                    match inv[decl.profile[pos]][x as usize] {
                        Some(nx) => mapped.push(nx),
                        None => continue 'facts,
                    }
                }
                b.push_fact_raw(r, &mapped);
            }
        }
        Ok(b.finish())
    }

    /// Forget the relations absent from `small`; sorts must coincide.
    pub fn reduct_to(&self, small: &Arc<Signature>) -> Result<FinStructure> {
        if !small.is_reduct_of(&self.sig) {
            return Err(Error::SignatureMismatch(
                "target signature is not a reduct of the structure's signature".into(),
            ));
        }
        let mut b = StructureBuilder::new(small.clone(), &self.sizes)?;
        for (r, decl) in small.relations().iter().enumerate() {
            let big_r = self.sig.relation_id(&decl.name).unwrap();
            for fact in self.rels[big_r].iter() {
                b.push_fact_raw(r, fact);
            }
        }
        Ok(b.finish())
    }

    /// Canonical byte encoding: sizes, then each relation's sorted fact data.
    /// Two structures over the same signature are equal iff encodings match.
    pub fn encode(&self) -> Vec<u8> {
        let mut out =
            Vec::with_capacity(8 + 2 * self.rels.iter().map(|r| r.data.len()).sum::<usize>());
        for &s in &self.sizes {
            out.extend_from_slice(&(s as u16).to_le_bytes());
        }
        for r in &self.rels {
            out.extend_from_slice(&(r.len() as u32).to_le_bytes());
            for &x in &r.data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    fn permuted(&self, perms: &[Vec<usize>]) -> FinStructure {
        let mut b = StructureBuilder::new(self.sig.clone(), &self.sizes).unwrap();
        let mut mapped: Vec<u16> = Vec::new();
        for (r, decl) in self.sig.relations().iter().enumerate() {
            for fact in self.rels[r].iter() {
                mapped.clear();
                for (pos, &x) in fact.iter().enumerate() {
                    mapped.push(perms[decl.profile[pos]][x as usize] as u16);
                }
                b.push_fact_raw(r, &mapped);
            }
        }
        b.finish()
    }

    /// Canonical form under sort-preserving permutations, with the witness
    /// permutation (element i of sort s maps to `perm[s][i]` in the canonical
    /// structure). Exact search; refuses above `guard` elements per sort.
    pub fn canonical_form(&self, guard: usize) -> Result<(FinStructure, Vec<Vec<usize>>)> {
        for (s, &n) in self.sizes.iter().enumerate() {
            if n > guard {
                return Err(Error::TooLarge(format!(
                    "sort `{}` has {} elements, isomorphism guard is {}",
                    self.sig.sort_name(s),
                    n,
                    guard
                )));
            }
        }
        let mut best: Option<(Vec<u8>, FinStructure, Vec<Vec<usize>>)> = None;
        let mut perms: Vec<Vec<usize>> = self.sizes.iter().map(|&n| (0..n).collect()).collect();
        visit_sort_perms(&mut perms, 0, &mut |ps| {
            let cand = self.permuted(ps);
            let enc = cand.encode();
            if best.as_ref().map(|(b, _, _)| enc < *b).unwrap_or(true) {
                best = Some((enc, cand, ps.to_vec()));
            }
        });
        let (_, canon, perm) = best.unwrap();
        Ok((canon, perm))
    }

    /// Exact isomorphism test; returns a sort-preserving witness map
    /// (element i of sort s in `self` corresponds to `map[s][i]` in `other`).
    pub fn isomorphic_to(&self, other: &FinStructure) -> Result<Option<Vec<Vec<usize>>>> {
        if self.sig != other.sig {
            return Err(Error::SignatureMismatch(
                "isomorphism requires equal signatures".into(),
            ));
        }
        if self.sizes != other.sizes
            || self
                .rels
                .iter()
                .zip(&other.rels)
                .any(|(a, b)| a.len() != b.len())
        {
            return Ok(None);
        }
        let (c1, p1) = self.canonical_form(DEFAULT_ISO_GUARD)?;
        let (c2, p2) = other.canonical_form(DEFAULT_ISO_GUARD)?;
        if c1 != c2 {
            return Ok(None);
        }
        // self --p1--> canon <--p2-- other, so witness = p2^{-1} . p1
        let mut map = Vec::with_capacity(self.sizes.len());
        for s in 0..self.sizes.len() {
            let mut inv2 = vec![0usize; self.sizes[s]];
            for (i, &x) in p2[s].iter().enumerate() {
                inv2[x] = i;
            }
            map.push(p1[s].iter().map(|&x| inv2[x]).collect());
        }
        Ok(Some(map))
    }

    /// Does mapping element i of sort s (in `self`) to `map[s][i]` (in `m`)
    /// give an embedding onto an induced substructure?
    pub fn embeds_at(&self, m: &FinStructure, map: &[Vec<usize>]) -> Result<bool> {
        let emb = SubsetEmbedding::new(self.sizes.clone(), m.clone(), map.to_vec())?;
        emb.is_induced_image_of(self)
    }

    /// Structure literal text: `sort <name> <size>` lines, then
    /// `fact <relation> <i1> ... <ik>` lines. Canonical order on output.
    pub fn to_literal(&self) -> String {
        let mut out = String::new();
        for (s, &n) in self.sizes.iter().enumerate() {
            out.push_str(&format!("sort {} {}\n", self.sig.sort_name(s), n));
        }
        for (r, decl) in self.sig.relations().iter().enumerate() {
            for fact in self.rels[r].iter() {
                out.push_str("fact ");
                out.push_str(&decl.name);
                for &x in fact {
                    out.push_str(&format!(" {x}"));
                }
                out.push('\n');
            }
        }
        out
    }

    /// Parse the literal format; order-insensitive, whitespace-tolerant.
    pub fn parse_literal(sig: &Arc<Signature>, text: &str) -> Result<FinStructure> {
        let mut sizes = vec![0usize; sig.sort_count()];
        let mut facts: Vec<(RelId, Vec<usize>)> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            match it.next() {
                Some("sort") => {
                    let name = it.next().ok_or_else(|| {
                        Error::Parse(format!("line {}: missing sort name", ln + 1))
                    })?;
                    let size: usize = it
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| Error::Parse(format!("line {}: bad sort size", ln + 1)))?;
                    let s = sig
                        .sort_id(name)
                        .ok_or_else(|| Error::UnknownSort(name.to_string()))?;
                    sizes[s] = size;
                }
                Some("fact") => {
                    let name = it.next().ok_or_else(|| {
                        Error::Parse(format!("line {}: missing relation name", ln + 1))
                    })?;
                    let r = sig
                        .relation_id(name)
                        .ok_or_else(|| Error::UnknownRelation(name.to_string()))?;
                    let tuple: Vec<usize> = it
                        .map(|v| {
                            v.parse()
                                .map_err(|_| Error::Parse(format!("line {}: bad index", ln + 1)))
                        })
                        .collect::<Result<_>>()?;
                    facts.push((r, tuple));
                }
                Some(other) => {
                    return Err(Error::Parse(format!(
                        "line {}: unknown directive `{other}`",
                        ln + 1
                    )))
                }
                None => unreachable!(),
            }
        }
        let mut b = StructureBuilder::new(sig.clone(), &sizes)?;
        for (r, tuple) in facts {
            b.fact(r, &tuple)?;
        }
        Ok(b.finish())
    }
}

impl fmt::Display for FinStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_literal())
    }
}

fn visit_sort_perms(perms: &mut Vec<Vec<usize>>, sort: usize, f: &mut impl FnMut(&[Vec<usize>])) {
    if sort == perms.len() {
        f(perms);
        return;
    }
    let n = perms[sort].len();
    permute_rec(perms, sort, 0, n, f);
}

fn permute_rec(
    perms: &mut Vec<Vec<usize>>,
    sort: usize,
    k: usize,
    n: usize,
    f: &mut impl FnMut(&[Vec<usize>]),
) {
    if k == n {
        visit_sort_perms(perms, sort + 1, f);
        return;
    }
    for i in k..n {
        perms[sort].swap(k, i);
        permute_rec(perms, sort, k + 1, n, f);
        perms[sort].swap(k, i);
    }
}

/// Incremental construction; facts are validated, then sorted and
/// deduplicated on `finish`.
pub struct StructureBuilder {
    sig: Arc<Signature>,
    sizes: Vec<usize>,
    facts: Vec<Vec<Vec<u16>>>,
}

impl StructureBuilder {
    fn new(sig: Arc<Signature>, sizes: &[usize]) -> Result<StructureBuilder> {
        if sizes.len() != sig.sort_count() {
            return Err(Error::InvalidSelection(format!(
                "expected {} sort sizes, got {}",
                sig.sort_count(),
                sizes.len()
            )));
        }
        if let Some(&n) = sizes.iter().find(|&&n| n > u16::MAX as usize) {
            return Err(Error::TooLarge(format!("sort size {n} exceeds 65535")));
        }
        let nrels = sig.relations().len();
        Ok(StructureBuilder {
            sig,
            sizes: sizes.to_vec(),
            facts: vec![Vec::new(); nrels],
        })
    }

    pub fn fact(&mut self, rel: RelId, tuple: &[usize]) -> Result<()> {
        let decl = self
            .sig
            .relations()
            .get(rel)
            .ok_or_else(|| Error::UnknownRelation(format!("#{rel}")))?;
        if tuple.len() != decl.arity() {
            return Err(Error::ArityMismatch {
                rel: decl.name.clone(),
                expected: decl.arity(),
                got: tuple.len(),
            });
        }
        for (pos, &x) in tuple.iter().enumerate() {
            let s = decl.profile[pos];
            if x >= self.sizes[s] {
                return Err(Error::IndexOutOfRange {
                    sort: self.sig.sort_name(s).to_string(),
                    index: x,
                    size: self.sizes[s],
                });
            }
        }
        self.facts[rel].push(tuple.iter().map(|&x| x as u16).collect());
        Ok(())
    }

    /// Trusted insertion for internal paths that have already validated.
    pub(crate) fn push_fact_raw(&mut self, rel: RelId, tuple: &[u16]) {
        self.facts[rel].push(tuple.to_vec());
    }

    pub fn finish(self) -> FinStructure {
        let rels = self
            .sig
            .relations()
            .iter()
            .zip(self.facts)
            .map(|(decl, mut tuples)| {
                tuples.sort_unstable();
                tuples.dedup();
                let mut data = Vec::with_capacity(tuples.len() * decl.arity());
                for t in &tuples {
                    data.extend_from_slice(t);
                }
                RelStore {
                    arity: decl.arity(),
                    data,
                }
            })
            .collect();
        FinStructure {
            sig: self.sig,
            sizes: self.sizes,
            rels,
        }
    }
}

/// An injective sort-preserving map from an abstract source shape into a
/// target structure.
#[derive(Debug, Clone)]
pub struct SubsetEmbedding {
    pub source_sizes: Vec<usize>,
    pub target: FinStructure,
    pub map: Vec<Vec<usize>>,
}

impl SubsetEmbedding {
    pub fn new(
        source_sizes: Vec<usize>,
        target: FinStructure,
        map: Vec<Vec<usize>>,
    ) -> Result<SubsetEmbedding> {
        if map.len() != source_sizes.len() || map.len() != target.sizes().len() {
            return Err(Error::InvalidSelection(
                "sort count mismatch in embedding".into(),
            ));
        }
        for (s, idxs) in map.iter().enumerate() {
            if idxs.len() != source_sizes[s] {
                return Err(Error::InvalidSelection(format!(
                    "embedding map for sort {s} has wrong length"
                )));
            }
            let mut seen = std::collections::HashSet::new();
            for &i in idxs {
                if i >= target.sizes()[s] {
                    return Err(Error::IndexOutOfRange {
                        sort: target.signature().sort_name(s).to_string(),
                        index: i,
                        size: target.sizes()[s],
                    });
                }
                if !seen.insert(i) {
                    return Err(Error::InvalidSelection(format!(
                        "embedding map for sort {s} is not injective"
                    )));
                }
            }
        }
        Ok(SubsetEmbedding {
            source_sizes,
            target,
            map,
        })
    }

    /// Does the image, read back through the map, reproduce `source` exactly?
    pub fn is_induced_image_of(&self, source: &FinStructure) -> Result<bool> {
        if source.sizes() != self.source_sizes.as_slice() {
            return Ok(false);
        }
        let image_type = self.target.qf_type(&self.map)?;
        Ok(image_type == *source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn graph_sig() -> Arc<Signature> {
        Signature::build(&["V"], &[("E", &["V", "V"])]).unwrap()
    }

    fn graph(n: usize, edges: &[(usize, usize)]) -> FinStructure {
        let sig = graph_sig();
        let mut b = FinStructure::builder(sig, &[n]).unwrap();
        for &(a, c) in edges {
            b.fact(0, &[a, c]).unwrap();
            b.fact(0, &[c, a]).unwrap();
        }
        b.finish()
    }

    #[test]
    fn induced_of_triangle_is_edge() {
        let tri = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let sub = tri.induced(&[vec![1, 2]]).unwrap();
        assert_eq!(sub, graph(2, &[(0, 1)]));
    }

    #[test]
    fn induced_full_domain_is_identity() {
        let tri = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(tri.induced(&[vec![0, 1, 2]]).unwrap(), tri);
    }

    #[test]
    fn induced_of_path_endpoints_is_edgeless() {
        // path 0 - 1 - 2; endpoints only
        let path = graph(3, &[(0, 1), (1, 2)]);
        let sub = path.induced(&[vec![0, 2]]).unwrap();
        assert_eq!(sub, graph(2, &[]));
    }

    #[test]
    fn induced_rejects_out_of_range() {
        let g = graph(2, &[]);
        assert!(matches!(
            g.induced(&[vec![0, 5]]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn qf_type_of_reversed_edge_is_edge() {
        let e = graph(2, &[(0, 1)]);
        assert_eq!(e.qf_type(&[vec![1, 0]]).unwrap(), e);
    }

    #[test]
    fn qf_type_of_path_endpoints() {
        let path = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(path.qf_type(&[vec![0, 2]]).unwrap(), graph(2, &[]));
    }

    #[test]
    fn qf_type_single_element_keeps_unary_facts_only() {
        let sig = Signature::build(&["V"], &[("E", &["V", "V"]), ("U", &["V"])]).unwrap();
        let mut b = FinStructure::builder(sig.clone(), &[2]).unwrap();
        b.fact(0, &[0, 1]).unwrap();
        b.fact(1, &[1]).unwrap();
        let m = b.finish();
        let t = m.qf_type(&[vec![1]]).unwrap();
        assert_eq!(t.sizes(), &[1]);
        assert!(t.holds(1, &[0]));
        assert!(!t.holds(0, &[0, 0]));
    }

    #[test]
    fn qf_type_rejects_repeats() {
        let e = graph(2, &[(0, 1)]);
        assert!(matches!(
            e.qf_type(&[vec![0, 0]]),
            Err(Error::RepeatedIndex { .. })
        ));
    }

    #[test]
    fn qf_type_of_full_identity_tuple_is_the_structure() {
        let path = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(path.qf_type(&[vec![0, 1, 2]]).unwrap(), path);
    }

    #[test]
    fn induced_is_functorial() {
        let g = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]);
        let once = g.induced(&[vec![0, 1, 3, 4]]).unwrap();
        let twice = once.induced(&[vec![1, 2]]).unwrap();
        let direct = g.induced(&[vec![1, 3]]).unwrap();
        assert_eq!(twice, direct);
    }

    #[test]
    fn isomorphic_relabeled_path() {
        let p1 = graph(3, &[(0, 1), (1, 2)]);
        let p2 = graph(3, &[(1, 0), (0, 2)]); // center is 0
        let w = p1.isomorphic_to(&p2).unwrap().expect("isomorphic");
        // witness must carry edges to edges
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(p1.holds(0, &[a, b]), p2.holds(0, &[w[0][a], w[0][b]]));
            }
        }
    }

    #[test]
    fn edge_vs_nonedge_not_isomorphic() {
        assert!(graph(2, &[(0, 1)])
            .isomorphic_to(&graph(2, &[]))
            .unwrap()
            .is_none());
    }

    #[test]
    fn single_edge_positions_isomorphic() {
        let a = graph(3, &[(0, 1)]);
        let b = graph(3, &[(1, 2)]);
        let w = a.isomorphic_to(&b).unwrap().expect("isomorphic");
        assert!(b.holds(0, &[w[0][0], w[0][1]]));
    }

    #[test]
    fn iso_guard_refuses_large_sorts() {
        let g = graph(9, &[]);
        assert!(matches!(g.canonical_form(8), Err(Error::TooLarge(_))));
    }

    #[test]
    fn literal_roundtrip_bit_exact() {
        let g = graph(3, &[(0, 2), (1, 2)]);
        let text = g.to_literal();
        let parsed = FinStructure::parse_literal(g.signature(), &text).unwrap();
        assert_eq!(parsed, g);
        assert_eq!(parsed.to_literal(), text);
    }

    #[test]
    fn literal_parse_is_order_insensitive() {
        let sig = graph_sig();
        let a = FinStructure::parse_literal(&sig, "sort V 2\nfact E 0 1\nfact E 1 0\n").unwrap();
        let b = FinStructure::parse_literal(&sig, "fact E 1 0\n\n# comment\nfact E 0 1\nsort V 2")
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn literal_parse_errors() {
        let sig = graph_sig();
        assert!(FinStructure::parse_literal(&sig, "sort W 2").is_err());
        assert!(FinStructure::parse_literal(&sig, "sort V 2\nfact F 0 1").is_err());
        assert!(FinStructure::parse_literal(&sig, "sort V 2\nfact E 0 5").is_err());
        assert!(FinStructure::parse_literal(&sig, "sort V 2\nfact E 0").is_err());
    }

    #[test]
    fn embeds_at_checks_induced_image() {
        let m = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let edge = graph(2, &[(0, 1)]);
        assert!(edge.embeds_at(&m, &[vec![1, 2]]).unwrap());
        // 0 and 2 are non-adjacent, so the edge does not embed there
        assert!(!edge.embeds_at(&m, &[vec![0, 2]]).unwrap());
    }

    #[test]
    fn iso_is_equivalence_on_small_corpus() {
        // all graphs on [3]
        let mut all = Vec::new();
        for mask in 0u32..8 {
            let mut edges = Vec::new();
            let pairs = [(0, 1), (0, 2), (1, 2)];
            for (i, &p) in pairs.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    edges.push(p);
                }
            }
            all.push(graph(3, &edges));
        }
        for a in &all {
            assert!(a.isomorphic_to(a).unwrap().is_some());
            for b in &all {
                let ab = a.isomorphic_to(b).unwrap().is_some();
                let ba = b.isomorphic_to(a).unwrap().is_some();
                assert_eq!(ab, ba);
                for c in &all {
                    let bc = b.isomorphic_to(c).unwrap().is_some();
                    let ac = a.isomorphic_to(c).unwrap().is_some();
                    if ab && bc {
                        assert!(ac);
                    }
                }
            }
        }
    }
}
