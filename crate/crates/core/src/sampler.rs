//! Random generation of finite structures: the level-by-level uniform
//! completion measure (bounded and unbounded), exact uniform draws over a
//! level, and exact uniform set-partition measures for the equivalence
//! classes.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::class::Constraint;
use crate::enumeration::{
    emit_cell_facts, managed_cells, orbit_expand, raw_instance_list, LevelTable, Levels,
};
use crate::error::{Error, Result};
use crate::partitions::PartitionSampler;
use crate::structure::FinStructure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// Level-by-level uniform completions all the way up.
    Unbounded,
    /// Uniform completions up to the given level, fair coins above it.
    Bounded(usize),
    /// Exact uniform draw over the enumerated level.
    UniformExhaustive,
    /// Exact uniform draw via independent set partitions per equivalence cell.
    UniformPartitions,
}

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    pub sizes: Vec<usize>,
    pub mode: SampleMode,
    pub seed: u64,
    pub trial: u64,
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Deterministic per-trial generator: the seed keys the size tier, the
/// stream keys the trial, so trials are independent of scheduling order.
pub fn trial_rng(master_seed: u64, size_index: u64, trial: u64) -> ChaCha8Rng {
    let seed = splitmix64(master_seed ^ splitmix64(size_index.wrapping_add(0x5851F42D4C957F2D)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Dispatch on the configured mode with a config-derived generator.
pub fn sample(
    levels: &Levels,
    partitions: &PartitionSampler,
    cfg: &SamplerConfig,
) -> Result<FinStructure> {
    if cfg.sizes.iter().sum::<usize>() == 0 {
        return Err(Error::InvalidParam("target size must be positive".into()));
    }
    let mut rng = trial_rng(cfg.seed, 0, cfg.trial);
    match cfg.mode {
        SampleMode::Unbounded => sample_mu(levels, &cfg.sizes, None, &mut rng),
        SampleMode::Bounded(n) => sample_mu(levels, &cfg.sizes, Some(n), &mut rng),
        SampleMode::UniformExhaustive => sample_uniform_exhaustive(levels, &cfg.sizes, &mut rng),
        SampleMode::UniformPartitions => {
            sample_uniform_partitions(levels, partitions, &cfg.sizes, &mut rng)
        }
    }
}

fn pack_subset(elems: &[u16]) -> u128 {
    let mut key = 0u128;
    for &e in elems {
        key = (key << 16) | (e as u128 + 1);
    }
    key
}

/// The level-by-level measure: assign 1-types uniformly, then for each
/// k-subset in canonical order draw uniformly from the completions of the
/// family formed by the already-assigned proper subtypes. In bounded mode,
/// stop at the bound and decide remaining high-support relation instances by
/// fair coins.
pub fn sample_mu<R: Rng + ?Sized>(
    levels: &Levels,
    sizes: &[usize],
    bounded: Option<usize>,
    rng: &mut R,
) -> Result<FinStructure> {
    let spec = levels.spec().clone();
    let sig = spec.signature().clone();
    let sorts = sig.sort_count();
    if sizes.len() != sorts {
        return Err(Error::InvalidSelection(format!(
            "expected {sorts} sort sizes"
        )));
    }
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return Ok(FinStructure::empty(sig));
    }
    if total > u16::MAX as usize {
        return Err(Error::TooLarge("domain exceeds 65535 elements".into()));
    }
    let support = spec.support_bound();
    let l_max = support.min(bounded.unwrap_or(usize::MAX)).min(total);
    if l_max > 8 {
        return Err(Error::GuardExceeded(format!(
            "level-by-level sampling needs levels up to {l_max}; guard is 8"
        )));
    }

    // global ids are sort-major, so ascending ids sort by (sort, index)
    let mut sort_of = Vec::with_capacity(total);
    let mut index_of = Vec::with_capacity(total);
    for (s, &n) in sizes.iter().enumerate() {
        for i in 0..n {
            sort_of.push(s);
            index_of.push(i);
        }
    }

    let mut table_cache: HashMap<Vec<usize>, Arc<LevelTable>> = HashMap::new();
    let mut table = |shape: &[usize]| -> Result<Arc<LevelTable>> {
        if let Some(t) = table_cache.get(shape) {
            return Ok(t.clone());
        }
        let t = levels.level(shape)?;
        table_cache.insert(shape.to_vec(), t.clone());
        Ok(t)
    };

    let mut assigned: HashMap<u128, u32> = HashMap::new();
    assigned.insert(pack_subset(&[]), 0);
    {
        let empty_table = table(&vec![0; sorts])?;
        if empty_table.is_empty() {
            return Err(Error::InvalidSpec(
                "the empty structure is not a member".into(),
            ));
        }
    }

    let mut builder = FinStructure::builder(sig.clone(), sizes)?;
    let mut subset: Vec<u16> = Vec::with_capacity(l_max);

    for k in 1..=l_max {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            subset.clear();
            subset.extend(combo.iter().map(|&e| e as u16));
            let mut shape = vec![0usize; sorts];
            for &e in &combo {
                shape[sort_of[e]] += 1;
            }
            let t = table(&shape)?;
            // family key over removals in canonical order = ascending ids
            let mut key = Vec::with_capacity(k);
            for drop in 0..k {
                let sub: Vec<u16> = subset
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != drop)
                    .map(|(_, &e)| e)
                    .collect();
                key.push(assigned[&pack_subset(&sub)]);
            }
            let Some(cands) = t.completions_for(&key) else {
                return Err(amalg_failure(
                    levels, &sort_of, &index_of, &combo, &shape, &key,
                ));
            };
            let idx = if cands.len() == 1 {
                cands[0]
            } else {
                cands[rng.random_range(0..cands.len())]
            };
            assigned.insert(pack_subset(&subset), idx);
            merge_full_support_facts(
                &mut builder,
                t.member(idx),
                &combo,
                &sort_of,
                &index_of,
                sizes,
            )?;
            if !next_combination(&mut combo, total) {
                break;
            }
        }
    }

    // bounded tail: remaining instances with support above the bound get
    // independent fair coins
    if let Some(bound) = bounded {
        if bound < support {
            for (r, decl) in sig.relations().iter().enumerate() {
                if decl.arity() <= bound {
                    continue;
                }
                let dims: Vec<usize> = decl.profile.iter().map(|&s| sizes[s]).collect();
                if dims.contains(&0) {
                    continue;
                }
                let mut tuple = vec![0usize; dims.len()];
                loop {
                    let mut elems: Vec<(usize, usize)> = tuple
                        .iter()
                        .enumerate()
                        .map(|(pos, &x)| (decl.profile[pos], x))
                        .collect();
                    elems.sort_unstable();
                    elems.dedup();
                    if elems.len() > bound && rng.random::<bool>() {
                        builder.fact(r, &tuple)?;
                    }
                    if !advance_tuple(&mut tuple, &dims) {
                        break;
                    }
                }
            }
        }
    }
    Ok(builder.finish())
}

fn amalg_failure(
    levels: &Levels,
    sort_of: &[usize],
    index_of: &[usize],
    combo: &[usize],
    shape: &[usize],
    key: &[u32],
) -> Error {
    let sig = levels.spec().signature();
    let subset: Vec<(String, usize)> = combo
        .iter()
        .map(|&e| (sig.sort_name(sort_of[e]).to_string(), index_of[e]))
        .collect();
    // the witness family: the assigned types on the maximal subsets
    let mut witness = String::new();
    for (drop, &idx) in key.iter().enumerate() {
        let mut sub_shape = shape.to_vec();
        sub_shape[sort_of[combo[drop]]] -= 1;
        if let Ok(t) = levels.level(&sub_shape) {
            witness.push_str(&format!(
                "without element {}: {}",
                drop,
                t.member(idx).to_literal().replace('\n', "; ")
            ));
            witness.push('\n');
        }
    }
    Error::AmalgamationFailure { subset, witness }
}

/// Add the facts of a chosen subset type whose support uses every element of
/// the subset; smaller-support facts were added at lower levels.
fn merge_full_support_facts(
    builder: &mut crate::structure::StructureBuilder,
    member: &FinStructure,
    combo: &[usize],
    sort_of: &[usize],
    index_of: &[usize],
    sizes: &[usize],
) -> Result<()> {
    let sig = member.signature().clone();
    let k = combo.len();
    // elements of the subset per sort, in order: local index -> global index
    let sorts = sizes.len();
    let mut local_to_global: Vec<Vec<usize>> = vec![Vec::new(); sorts];
    for &e in combo {
        local_to_global[sort_of[e]].push(index_of[e]);
    }
    let mut support: Vec<(usize, u16)> = Vec::with_capacity(k);
    let mut mapped: Vec<usize> = Vec::new();
    for (r, decl) in sig.relations().iter().enumerate() {
        for fact in member.facts(r) {
            support.clear();
            for (pos, &x) in fact.iter().enumerate() {
                let pair = (decl.profile[pos], x);
                if !support.contains(&pair) {
                    support.push(pair);
                }
            }
            if support.len() != k {
                continue;
            }
            mapped.clear();
            for (pos, &x) in fact.iter().enumerate() {
                mapped.push(local_to_global[decl.profile[pos]][x as usize]);
            }
            builder.fact(r, &mapped)?;
        }
    }
    Ok(())
}

fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    loop {
        if i == 0 {
            return false;
        }
        i -= 1;
        if combo[i] < n - (k - i) {
            combo[i] += 1;
            for j in (i + 1)..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
}

fn advance_tuple(tuple: &mut [usize], dims: &[usize]) -> bool {
    for i in (0..tuple.len()).rev() {
        tuple[i] += 1;
        if tuple[i] < dims[i] {
            return true;
        }
        tuple[i] = 0;
    }
    false
}

/// Exact uniform draw over the enumerated level.
pub fn sample_uniform_exhaustive<R: Rng + ?Sized>(
    levels: &Levels,
    sizes: &[usize],
    rng: &mut R,
) -> Result<FinStructure> {
    let table = levels.level(sizes)?;
    if table.is_empty() {
        return Err(Error::ModeNotApplicable("the level has no members".into()));
    }
    let idx = rng.random_range(0..table.len());
    Ok(table.member(idx as u32).clone())
}

/// Largest partition cell the uniform-partitions mode will draw at a size
/// vector, for sizing the Bell table.
pub fn required_partition_max(levels: &Levels, sizes: &[usize]) -> usize {
    managed_cells(levels.spec(), sizes)
        .iter()
        .filter(|c| c.labels.is_none() && c.max_classes.is_none())
        .map(|c| c.tuples.len())
        .max()
        .unwrap_or(0)
}

/// Exact uniform draw for classes given purely by equivalence and labeling
/// constraints: independent uniform partitions (or labels) per cell.
pub fn sample_uniform_partitions<R: Rng + ?Sized>(
    levels: &Levels,
    partitions: &PartitionSampler,
    sizes: &[usize],
    rng: &mut R,
) -> Result<FinStructure> {
    let spec = levels.spec().clone();
    let pure = spec
        .constraints()
        .iter()
        .all(|c| matches!(c, Constraint::Equivalence(_) | Constraint::Labeling(_)));
    if !pure {
        return Err(Error::ModeNotApplicable(
            "uniform-partitions needs a pure equivalence class".into(),
        ));
    }
    let mut b = FinStructure::builder(spec.signature().clone(), sizes)?;
    for cell in managed_cells(&spec, sizes) {
        let nr = cell.tuples.len();
        let assign: Vec<usize> = match &cell.labels {
            Some(l) => {
                let nl = l.label_rels.len();
                (0..nr).map(|_| rng.random_range(0..nl)).collect()
            }
            None => {
                if cell.max_classes.is_some() {
                    return Err(Error::ModeNotApplicable(
                        "uniform-partitions does not support bounded class counts".into(),
                    ));
                }
                partitions.sample(nr, rng)?
            }
        };
        emit_cell_facts(&mut b, &spec, sizes, &cell, &assign)?;
    }
    // unconstrained relations vary uniformly and independently
    for (r, instances, orbit) in raw_instance_list(&spec, sizes) {
        for inst in instances {
            if rng.random::<bool>() {
                if orbit {
                    for perm in orbit_expand(&inst) {
                        b.fact(r, &perm)?;
                    }
                } else {
                    b.fact(r, &inst)?;
                }
            }
        }
    }
    Ok(b.finish())
}

// ---------------------------------------------------------------------------
// Failure bound for extension axioms

/// N^|A| (1-eps)^(N-|A|): the union bound on the probability that some copy
/// of a base of size |A| admits no extension witness among N elements.
pub fn failure_bound(base_size: usize, epsilon: f64, n: usize) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Domain(format!("epsilon {epsilon} outside (0, 1]")));
    }
    if n <= base_size {
        return Err(Error::Domain(format!(
            "domain size {n} must exceed the base size {base_size}"
        )));
    }
    if epsilon == 1.0 {
        return Ok(0.0);
    }
    Ok(
        ((base_size as f64) * (n as f64).ln() + ((n - base_size) as f64) * (1.0 - epsilon).ln())
            .exp(),
    )
}

/// Per-extension success probability: the product over the subsets containing
/// the new element of the reciprocal completion counts along the level
/// process. Levels above the support bound contribute factor one.
pub fn epsilon_for_extension(levels: &Levels, axiom: &crate::logic::ExtensionAxiom) -> Result<f64> {
    let spec = levels.spec();
    let sorts = spec.signature().sort_count();
    let b = &axiom.extended;
    let support = spec.support_bound();
    // elements of B in sort-major order; the new element is the last of its sort
    let mut elems: Vec<(usize, usize)> = Vec::new();
    for (s, &n) in b.sizes().iter().enumerate() {
        for i in 0..n {
            elems.push((s, i));
        }
    }
    let new_elem = (axiom.new_sort, b.sizes()[axiom.new_sort] - 1);
    let mut eps = 1.0f64;
    let total = elems.len();
    for mask in 0u32..(1 << total) {
        let chosen: Vec<(usize, usize)> = (0..total)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| elems[i])
            .collect();
        if chosen.is_empty() || !chosen.contains(&new_elem) {
            continue;
        }
        if chosen.len() > support {
            continue; // completion is unique above the support bound
        }
        // the family of B's restrictions to the proper subsets of `chosen`
        let mut shape = vec![0usize; sorts];
        for &(s, _) in &chosen {
            shape[s] += 1;
        }
        let table = levels.level(&shape)?;
        let mut key = Vec::with_capacity(chosen.len());
        for drop in 0..chosen.len() {
            let sel: Vec<Vec<usize>> = (0..sorts)
                .map(|s| {
                    chosen
                        .iter()
                        .enumerate()
                        .filter(|&(i, &(t, _))| t == s && i != drop)
                        .map(|(_, &(_, x))| x)
                        .collect()
                })
                .collect();
            let sub = b.induced(&sel)?;
            let mut sub_shape = shape.clone();
            sub_shape[chosen[drop].0] -= 1;
            let sub_table = levels.level(&sub_shape)?;
            let idx = sub_table.index_of(&sub).ok_or_else(|| {
                Error::InvalidProblem("extension axiom structure leaves the class".into())
            })?;
            key.push(idx);
        }
        let count = table
            .completions_for(&key)
            .map(|v| v.len())
            .ok_or_else(|| {
                Error::InvalidProblem("extension axiom family has no completion".into())
            })?;
        eps *= 1.0 / count as f64;
    }
    Ok(eps)
}
