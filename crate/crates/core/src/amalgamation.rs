//! Coherent families of quantifier-free types, basic disjoint k-amalgamation
//! checking, the bottom-up partial solver, and the reduction of problems over
//! a finite base to basic ones.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::class::ClassSpec;
use crate::enumeration::{compositions, removal_list, removal_position, Levels};
use crate::error::{Error, Result};
use crate::logic::combinations;
use crate::structure::{FinStructure, SortId};

pub type SubsetMask = u32;

/// A coherent downward-closed family of types over canonical variables
/// x_1..x_k with a sort assignment; each type is a structure on the shape of
/// its subset.
#[derive(Debug, Clone)]
pub struct AmalgProblem {
    spec: Arc<ClassSpec>,
    var_sorts: Vec<SortId>,
    family: BTreeMap<SubsetMask, FinStructure>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coherence {
    Coherent,
    Violation {
        sub: SubsetMask,
        sup: SubsetMask,
        detail: String,
    },
}

impl Coherence {
    pub fn is_coherent(&self) -> bool {
        matches!(self, Coherence::Coherent)
    }
}

#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Solved(FinStructure),
    /// The first subset (in level order) whose completion set is empty,
    /// together with the coherent family over its proper subsets.
    Stuck {
        subset: SubsetMask,
        certificate: AmalgProblem,
    },
}

impl SolveOutcome {
    pub fn solved(self) -> Option<FinStructure> {
        match self {
            SolveOutcome::Solved(m) => Some(m),
            _ => None,
        }
    }
}

pub(crate) fn shape_of(var_sorts: &[SortId], mask: SubsetMask, sorts: usize) -> Vec<usize> {
    let mut shape = vec![0usize; sorts];
    for (v, &s) in var_sorts.iter().enumerate() {
        if mask & (1 << v) != 0 {
            shape[s] += 1;
        }
    }
    shape
}

/// Per-sort selection that restricts the canonical layout of `sup` to `sub`.
fn selection_for(
    var_sorts: &[SortId],
    sup: SubsetMask,
    sub: SubsetMask,
    sorts: usize,
) -> Vec<Vec<usize>> {
    let mut sel = vec![Vec::new(); sorts];
    let mut rank = vec![0usize; sorts];
    for (v, &s) in var_sorts.iter().enumerate() {
        let bit = 1u32 << v;
        if sup & bit != 0 {
            if sub & bit != 0 {
                sel[s].push(rank[s]);
            }
            rank[s] += 1;
        }
    }
    sel
}

impl AmalgProblem {
    pub fn new(
        spec: Arc<ClassSpec>,
        var_sorts: Vec<SortId>,
        family: BTreeMap<SubsetMask, FinStructure>,
    ) -> Result<AmalgProblem> {
        if var_sorts.len() > 24 {
            return Err(Error::TooLarge("more than 24 ground variables".into()));
        }
        let sorts = spec.signature().sort_count();
        let full: SubsetMask = if var_sorts.is_empty() {
            0
        } else {
            (1u32 << var_sorts.len()) - 1
        };
        for (&mask, p) in &family {
            if mask & !full != 0 {
                return Err(Error::InvalidProblem(format!(
                    "subset {mask:#b} mentions variables beyond the ground size"
                )));
            }
            if p.signature() != spec.signature() {
                return Err(Error::SignatureMismatch(
                    "family type over a different signature".into(),
                ));
            }
            let shape = shape_of(&var_sorts, mask, sorts);
            if p.sizes() != shape.as_slice() {
                return Err(Error::InvalidProblem(format!(
                    "type for subset {mask:#b} has shape {:?}, expected {:?}",
                    p.sizes(),
                    shape
                )));
            }
        }
        Ok(AmalgProblem {
            spec,
            var_sorts,
            family,
        })
    }

    /// Family given by the restrictions of a single member structure to the
    /// downward closure of the given subsets. Coherent by construction.
    pub fn from_member_family(
        spec: Arc<ClassSpec>,
        member: &FinStructure,
        seeds: &[SubsetMask],
    ) -> Result<AmalgProblem> {
        let mut var_sorts = Vec::new();
        for (s, &n) in member.sizes().iter().enumerate() {
            var_sorts.extend(std::iter::repeat_n(s, n));
        }
        if var_sorts.len() > 24 {
            return Err(Error::TooLarge("more than 24 ground variables".into()));
        }
        let sorts = spec.signature().sort_count();
        let mut masks: Vec<SubsetMask> = vec![0];
        for &seed in seeds {
            masks.push(seed);
        }
        // close downward
        let mut family = BTreeMap::new();
        let mut stack = masks;
        while let Some(m) = stack.pop() {
            if family.contains_key(&m) {
                continue;
            }
            let sel = selection_for(
                &var_sorts,
                if var_sorts.is_empty() {
                    0
                } else {
                    (1u32 << var_sorts.len()) - 1
                },
                m,
                sorts,
            );
            family.insert(m, member.induced(&sel)?);
            let mut bits = m;
            while bits != 0 {
                let b = bits & bits.wrapping_neg();
                stack.push(m & !b);
                bits &= bits - 1;
            }
        }
        AmalgProblem::new(spec, var_sorts, family)
    }

    pub fn spec(&self) -> &Arc<ClassSpec> {
        &self.spec
    }

    pub fn var_sorts(&self) -> &[SortId] {
        &self.var_sorts
    }

    pub fn ground_size(&self) -> usize {
        self.var_sorts.len()
    }

    pub fn family(&self) -> &BTreeMap<SubsetMask, FinStructure> {
        &self.family
    }

    pub fn full_mask(&self) -> SubsetMask {
        if self.var_sorts.is_empty() {
            0
        } else {
            (1u32 << self.var_sorts.len()) - 1
        }
    }

    fn restrict(&self, sup: SubsetMask, sub: SubsetMask) -> Result<FinStructure> {
        let sorts = self.spec.signature().sort_count();
        let sel = selection_for(&self.var_sorts, sup, sub, sorts);
        self.family[&sup].induced(&sel)
    }

    /// Verify downward closure and one-step restriction agreement; the full
    /// coherence conditions follow by induction.
    pub fn check_coherence(&self) -> Result<Coherence> {
        if !self.family.is_empty() {
            match self.family.get(&0) {
                None => {
                    return Ok(Coherence::Violation {
                        sub: 0,
                        sup: *self.family.keys().next().unwrap(),
                        detail: "empty-set type missing from a nonempty family".into(),
                    })
                }
                Some(p) => {
                    if p.total_size() != 0 {
                        return Ok(Coherence::Violation {
                            sub: 0,
                            sup: 0,
                            detail: "empty-set type is not the empty structure".into(),
                        });
                    }
                }
            }
        }
        for &sup in self.family.keys() {
            let mut bits = sup;
            while bits != 0 {
                let b = bits & bits.wrapping_neg();
                bits &= bits - 1;
                let sub = sup & !b;
                let Some(p_sub) = self.family.get(&sub) else {
                    return Ok(Coherence::Violation {
                        sub,
                        sup,
                        detail: "family is not downward closed".into(),
                    });
                };
                let restricted = self.restrict(sup, sub)?;
                if restricted != *p_sub {
                    let detail = first_fact_difference(&restricted, p_sub);
                    return Ok(Coherence::Violation { sub, sup, detail });
                }
            }
        }
        Ok(Coherence::Coherent)
    }

    /// All members of the level extending every type in the family.
    pub fn completions(&self, levels: &Levels) -> Result<Vec<FinStructure>> {
        match self.check_coherence()? {
            Coherence::Coherent => {}
            Coherence::Violation { sub, sup, detail } => {
                return Err(Error::IncoherentFamily(format!(
                    "subsets {sub:#b} and {sup:#b}: {detail}"
                )))
            }
        }
        let sorts = self.spec.signature().sort_count();
        let shape = shape_of(&self.var_sorts, self.full_mask(), sorts);
        let table = levels.level(&shape)?;
        let full = self.full_mask();
        let mut out = Vec::new();
        'members: for m in table.members() {
            for (&mask, p) in &self.family {
                let sel = selection_for(&self.var_sorts, full, mask, sorts);
                if m.induced(&sel)? != *p {
                    continue 'members;
                }
            }
            out.push(m.clone());
        }
        Ok(out)
    }

    /// Extend the family bottom-up; missing types are chosen by the supplied
    /// policy from the completion sets.
    fn solve_with(
        &self,
        levels: &Levels,
        chooser: &mut dyn FnMut(usize) -> usize,
    ) -> Result<SolveOutcome> {
        match self.check_coherence()? {
            Coherence::Coherent => {}
            Coherence::Violation { sub, sup, detail } => {
                return Err(Error::IncoherentFamily(format!(
                    "subsets {sub:#b} and {sup:#b}: {detail}"
                )))
            }
        }
        let sorts = self.spec.signature().sort_count();
        let k = self.var_sorts.len();
        // assigned type index per subset
        let mut assigned: BTreeMap<SubsetMask, u32> = BTreeMap::new();
        for (&mask, p) in &self.family {
            let shape = shape_of(&self.var_sorts, mask, sorts);
            let table = levels.level(&shape)?;
            let idx = table.index_of(p).ok_or_else(|| {
                Error::InvalidProblem(format!(
                    "type for subset {mask:#b} is not a member of the class"
                ))
            })?;
            assigned.insert(mask, idx);
        }
        if let std::collections::btree_map::Entry::Vacant(e) = assigned.entry(0) {
            let table = levels.level(&vec![0; sorts])?;
            if table.is_empty() {
                return Err(Error::InvalidSpec(
                    "the empty structure is not a member".into(),
                ));
            }
            e.insert(0);
        }
        for level in 1..=k {
            for combo in combinations(k, level) {
                let mask: SubsetMask = combo.iter().fold(0, |m, &v| m | (1 << v));
                if assigned.contains_key(&mask) {
                    continue;
                }
                let shape = shape_of(&self.var_sorts, mask, sorts);
                let table = levels.level(&shape)?;
                // key over removals in canonical (sort, local index) order
                let mut key = Vec::with_capacity(level);
                for s in 0..sorts {
                    for &v in &combo {
                        if self.var_sorts[v] == s {
                            let sub = mask & !(1 << v);
                            key.push(assigned[&sub]);
                        }
                    }
                }
                match table.completions_for(&key) {
                    Some(cands) => {
                        let idx = cands[chooser(cands.len())];
                        assigned.insert(mask, idx);
                    }
                    None => {
                        let certificate = self.certificate_for(levels, mask, &assigned)?;
                        return Ok(SolveOutcome::Stuck {
                            subset: mask,
                            certificate,
                        });
                    }
                }
            }
        }
        let full = self.full_mask();
        let shape = shape_of(&self.var_sorts, full, sorts);
        let table = levels.level(&shape)?;
        Ok(SolveOutcome::Solved(table.member(assigned[&full]).clone()))
    }

    pub fn solve_first(&self, levels: &Levels) -> Result<SolveOutcome> {
        self.solve_with(levels, &mut |_| 0)
    }

    pub fn solve_uniform<R: Rng + ?Sized>(
        &self,
        levels: &Levels,
        rng: &mut R,
    ) -> Result<SolveOutcome> {
        self.solve_with(levels, &mut |n| rng.random_range(0..n))
    }

    /// The stuck subset's own problem: its proper subsets with their
    /// assigned types, renumbered to the subset's variables.
    fn certificate_for(
        &self,
        levels: &Levels,
        subset: SubsetMask,
        assigned: &BTreeMap<SubsetMask, u32>,
    ) -> Result<AmalgProblem> {
        let sorts = self.spec.signature().sort_count();
        let vars: Vec<usize> = (0..self.var_sorts.len())
            .filter(|&v| subset & (1 << v) != 0)
            .collect();
        let var_sorts: Vec<SortId> = vars.iter().map(|&v| self.var_sorts[v]).collect();
        let mut family = BTreeMap::new();
        for sub_local in 0..(1u32 << vars.len()) {
            if sub_local == (1u32 << vars.len()) - 1 {
                continue;
            }
            let mask_global: SubsetMask = vars
                .iter()
                .enumerate()
                .filter(|&(i, _)| sub_local & (1 << i) != 0)
                .fold(0, |m, (_, &v)| m | (1 << v));
            let idx = assigned[&mask_global];
            let shape = shape_of(&self.var_sorts, mask_global, sorts);
            let table = levels.level(&shape)?;
            family.insert(sub_local, table.member(idx).clone());
        }
        AmalgProblem::new(self.spec.clone(), var_sorts, family)
    }
}

fn first_fact_difference(a: &FinStructure, b: &FinStructure) -> String {
    let sig = a.signature();
    for (r, decl) in sig.relations().iter().enumerate() {
        let in_a: std::collections::BTreeSet<Vec<u16>> = a.facts(r).map(|t| t.to_vec()).collect();
        let in_b: std::collections::BTreeSet<Vec<u16>> = b.facts(r).map(|t| t.to_vec()).collect();
        if let Some(t) = in_a.symmetric_difference(&in_b).next() {
            return format!("restriction disagrees on {}{:?}", decl.name, t);
        }
    }
    "restriction disagrees on domain shape".into()
}

// ---------------------------------------------------------------------------
// Basic disjoint k-amalgamation

#[derive(Debug, Clone)]
pub struct AmalgReport {
    pub level: usize,
    pub passed: bool,
    pub witness: Option<AmalgProblem>,
    pub families_examined: u64,
    pub min_completions: Option<u64>,
    pub max_completions: Option<u64>,
}

/// Decide basic disjoint k-amalgamation by iterating every coherent family
/// assembled from the level below and looking up its completion set. Every
/// coherent family is examined, so the counts and completion statistics are
/// totals; the witness is the first failure in canonical order, independent
/// of scheduling.
pub fn check_basic_disjoint_amalgamation(levels: &Levels, k: usize) -> Result<AmalgReport> {
    let sorts = levels.spec().signature().sort_count();
    if k == 0 {
        return Ok(AmalgReport {
            level: 0,
            passed: true,
            witness: None,
            families_examined: 0,
            min_completions: None,
            max_completions: None,
        });
    }
    if k == 1 {
        // every sort must realize some 1-type
        let mut examined = 0;
        let mut min = None;
        let mut max = None;
        for s in 0..sorts {
            let mut shape = vec![0usize; sorts];
            shape[s] = 1;
            let table = levels.level(&shape)?;
            examined += 1;
            let c = table.len() as u64;
            min = Some(min.map_or(c, |m: u64| m.min(c)));
            max = Some(max.map_or(c, |m: u64| m.max(c)));
            if table.is_empty() {
                let problem = AmalgProblem::new(
                    levels.spec().clone(),
                    vec![s],
                    BTreeMap::from([(
                        0u32,
                        FinStructure::empty(levels.spec().signature().clone()),
                    )]),
                )?;
                return Ok(AmalgReport {
                    level: 1,
                    passed: false,
                    witness: Some(problem),
                    families_examined: examined,
                    min_completions: Some(0),
                    max_completions: max,
                });
            }
        }
        return Ok(AmalgReport {
            level: 1,
            passed: true,
            witness: None,
            families_examined: examined,
            min_completions: min,
            max_completions: max,
        });
    }

    let mut examined = 0u64;
    let mut min: Option<u64> = None;
    let mut max: Option<u64> = None;
    let mut witness: Option<AmalgProblem> = None;
    for shape in compositions(sorts, k) {
        let (ex, mn, mx, wit) = check_shape(levels, &shape)?;
        examined += ex;
        min = merge(min, mn, std::cmp::min);
        max = merge(max, mx, std::cmp::max);
        if witness.is_none() {
            witness = wit;
        }
    }
    Ok(AmalgReport {
        level: k,
        passed: witness.is_none(),
        witness,
        families_examined: examined,
        min_completions: min,
        max_completions: max,
    })
}

fn merge(a: Option<u64>, b: Option<u64>, f: fn(u64, u64) -> u64) -> Option<u64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(f(x, y)),
        (x, None) => x,
        (None, y) => y,
    }
}

type ShapeOutcome = (u64, Option<u64>, Option<u64>, Option<AmalgProblem>);

fn check_shape(levels: &Levels, shape: &[usize]) -> Result<ShapeOutcome> {
    let table = levels.level(shape)?;
    let removals = removal_list(shape);
    let k = removals.len();
    let mut sub_tables = Vec::with_capacity(k);
    for &(s, _) in &removals {
        let mut sub = shape.to_vec();
        sub[s] -= 1;
        sub_tables.push(levels.level(&sub)?);
    }
    let first_range: Vec<u32> = (0..sub_tables[0].len() as u32).collect();
    // parallel over the first choice; merged in canonical order so the
    // reported witness is schedule independent
    let chunks: Vec<Result<ShapeOutcome>> = first_range
        .par_iter()
        .map(|&c0| {
            let mut chosen = vec![0u32; k];
            chosen[0] = c0;
            let mut examined = 0u64;
            let mut min: Option<u64> = None;
            let mut max: Option<u64> = None;
            let mut first_fail: Option<Vec<u32>> = None;
            dfs_families(
                &table,
                &sub_tables,
                &removals,
                shape,
                &mut chosen,
                1,
                &mut examined,
                &mut min,
                &mut max,
                &mut first_fail,
            );
            let wit = match first_fail {
                Some(key) => Some(materialize_witness(
                    levels,
                    shape,
                    &removals,
                    &sub_tables,
                    &key,
                )?),
                None => None,
            };
            Ok((examined, min, max, wit))
        })
        .collect();
    let mut examined = 0u64;
    let mut min = None;
    let mut max = None;
    let mut witness = None;
    for chunk in chunks {
        let (ex, mn, mx, wit) = chunk?;
        examined += ex;
        min = merge(min, mn, std::cmp::min);
        max = merge(max, mx, std::cmp::max);
        if witness.is_none() {
            witness = wit;
        }
    }
    Ok((examined, min, max, witness))
}

#[allow(clippy::too_many_arguments)]
fn dfs_families(
    table: &crate::enumeration::LevelTable,
    sub_tables: &[Arc<crate::enumeration::LevelTable>],
    removals: &[(SortId, usize)],
    shape: &[usize],
    chosen: &mut Vec<u32>,
    depth: usize,
    examined: &mut u64,
    min: &mut Option<u64>,
    max: &mut Option<u64>,
    first_fail: &mut Option<Vec<u32>>,
) {
    if depth == removals.len() {
        *examined += 1;
        let count = table
            .completions_for(chosen)
            .map(|v| v.len() as u64)
            .unwrap_or(0);
        *min = Some(min.map_or(count, |m| m.min(count)));
        *max = Some(max.map_or(count, |m| m.max(count)));
        if count == 0 && first_fail.is_none() {
            *first_fail = Some(chosen.clone());
        }
        return;
    }
    let n = sub_tables[depth].len() as u32;
    'cand: for c in 0..n {
        // agreement with all earlier choices on pairwise overlaps
        for (p, &cp) in chosen.iter().enumerate().take(depth) {
            if !agree(shape, removals, sub_tables, p, cp, depth, c) {
                continue 'cand;
            }
        }
        chosen[depth] = c;
        dfs_families(
            table,
            sub_tables,
            removals,
            shape,
            chosen,
            depth + 1,
            examined,
            min,
            max,
            first_fail,
        );
    }
}

/// Do the members chosen at removal positions p and q restrict identically to
/// the common sub-domain (both elements removed)?
fn agree(
    shape: &[usize],
    removals: &[(SortId, usize)],
    sub_tables: &[Arc<crate::enumeration::LevelTable>],
    p: usize,
    cp: u32,
    q: usize,
    cq: u32,
) -> bool {
    let (sp, ip) = removals[p];
    let (sq, iq) = removals[q];
    // removal order guarantees (sp, ip) < (sq, iq)
    let mut reduced_p = shape.to_vec();
    reduced_p[sp] -= 1;
    let iq_local = if sq == sp { iq - 1 } else { iq };
    let pos_in_p = removal_position(&reduced_p, sq, iq_local);
    let mut reduced_q = shape.to_vec();
    reduced_q[sq] -= 1;
    let pos_in_q = removal_position(&reduced_q, sp, ip);
    sub_tables[p].restriction_indices(cp)[pos_in_p]
        == sub_tables[q].restriction_indices(cq)[pos_in_q]
}

/// Build the failing family as a problem: the chosen members at the maximal
/// subsets plus all their restrictions.
fn materialize_witness(
    levels: &Levels,
    shape: &[usize],
    removals: &[(SortId, usize)],
    sub_tables: &[Arc<crate::enumeration::LevelTable>],
    key: &[u32],
) -> Result<AmalgProblem> {
    let sorts = shape.len();
    let mut var_sorts = Vec::new();
    for (s, &n) in shape.iter().enumerate() {
        var_sorts.extend(std::iter::repeat_n(s, n));
    }
    let k = var_sorts.len();
    let full: SubsetMask = (1u32 << k) - 1;
    let mut family: BTreeMap<SubsetMask, FinStructure> = BTreeMap::new();
    // removal position r removes variable with (sort, local idx) = removals[r];
    // in the sort-major variable order that is exactly variable index r
    for (r, _) in removals.iter().enumerate() {
        let mask = full & !(1 << r);
        family.insert(mask, sub_tables[r].member(key[r]).clone());
    }
    // close downward from the maximal sets
    let spec = levels.spec().clone();
    let top = AmalgProblem::new(spec.clone(), var_sorts.clone(), family.clone())?;
    for sub in 0..full {
        if family.contains_key(&sub) {
            continue;
        }
        // restrict from any maximal superset
        let host = (0..k)
            .map(|r| full & !(1 << r))
            .find(|m| sub & !m == 0)
            .expect("every proper subset lies under a maximal one");
        let sel = selection_for(&var_sorts, host, sub, sorts);
        family.insert(sub, top.family[&host].induced(&sel)?);
    }
    AmalgProblem::new(spec, var_sorts, family)
}

/// Reports for every level 2..=max_k, stopping early never; callers decide
/// what to do with failures.
pub fn check_up_to(levels: &Levels, max_k: usize) -> Result<Vec<AmalgReport>> {
    (2..=max_k)
        .map(|k| check_basic_disjoint_amalgamation(levels, k))
        .collect()
}

// ---------------------------------------------------------------------------
// General problems over a finite base and the reduction to basic problems

/// Where a variable of the reduced basic problem came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarOrigin {
    Base { sort: SortId, index: usize },
    TupleVar { group: usize, position: usize },
}

/// A disjoint amalgamation problem over a finite base structure: types are
/// given on the base plus the union of tuple groups in each subset, laid out
/// base-first per sort.
#[derive(Debug, Clone)]
pub struct GeneralProblem {
    pub spec: Arc<ClassSpec>,
    pub base: FinStructure,
    pub tuple_sorts: Vec<Vec<SortId>>,
    pub family: BTreeMap<SubsetMask, FinStructure>,
}

impl GeneralProblem {
    pub fn new(
        spec: Arc<ClassSpec>,
        base: FinStructure,
        tuple_sorts: Vec<Vec<SortId>>,
        family: BTreeMap<SubsetMask, FinStructure>,
    ) -> Result<GeneralProblem> {
        if tuple_sorts.iter().any(|t| t.is_empty()) {
            return Err(Error::InvalidProblem("empty tuple group".into()));
        }
        if base.signature() != spec.signature() {
            return Err(Error::SignatureMismatch(
                "base over a different signature".into(),
            ));
        }
        let gp = GeneralProblem {
            spec,
            base,
            tuple_sorts,
            family,
        };
        let sorts = gp.spec.signature().sort_count();
        for (&mask, p) in &gp.family {
            let shape = gp.shape_with(mask, sorts);
            if p.sizes() != shape.as_slice() {
                return Err(Error::InvalidProblem(format!(
                    "type for subset {mask:#b} has shape {:?}, expected {:?}",
                    p.sizes(),
                    shape
                )));
            }
            // the base is pinned: restricting to the base part gives it back
            let base_sel: Vec<Vec<usize>> =
                gp.base.sizes().iter().map(|&n| (0..n).collect()).collect();
            if p.induced(&base_sel)? != gp.base {
                return Err(Error::InvalidProblem(format!(
                    "type for subset {mask:#b} does not restrict to the base"
                )));
            }
        }
        Ok(gp)
    }

    fn shape_with(&self, mask: SubsetMask, sorts: usize) -> Vec<usize> {
        let mut shape = self.base.sizes().to_vec();
        shape.resize(sorts, 0);
        for (g, tuple) in self.tuple_sorts.iter().enumerate() {
            if mask & (1 << g) != 0 {
                for &s in tuple {
                    shape[s] += 1;
                }
            }
        }
        shape
    }

    pub fn group_count(&self) -> usize {
        self.tuple_sorts.len()
    }
}

/// Reduction to a basic problem: base elements become pinned variables, the
/// tuple variables are relabeled, and the family closes downward under
/// restriction. Solutions correspond bijectively under the variable order
/// returned alongside the problem.
pub fn reduce_to_basic(gp: &GeneralProblem) -> Result<(AmalgProblem, Vec<VarOrigin>)> {
    let sorts = gp.spec.signature().sort_count();
    let mut var_sorts = Vec::new();
    let mut origins = Vec::new();
    for (s, &n) in gp.base.sizes().iter().enumerate() {
        for i in 0..n {
            var_sorts.push(s);
            origins.push(VarOrigin::Base { sort: s, index: i });
        }
    }
    let base_vars = var_sorts.len();
    let mut group_vars: Vec<Vec<usize>> = Vec::new();
    for (g, tuple) in gp.tuple_sorts.iter().enumerate() {
        let mut vs = Vec::new();
        for (pos, &s) in tuple.iter().enumerate() {
            vs.push(var_sorts.len());
            var_sorts.push(s);
            origins.push(VarOrigin::TupleVar {
                group: g,
                position: pos,
            });
        }
        group_vars.push(vs);
    }
    let base_mask: SubsetMask = if base_vars == 0 {
        0
    } else {
        (1u32 << base_vars) - 1
    };
    let mut family: BTreeMap<SubsetMask, FinStructure> = BTreeMap::new();
    fn insert_checked(
        family: &mut BTreeMap<SubsetMask, FinStructure>,
        mask: SubsetMask,
        p: FinStructure,
    ) -> Result<()> {
        if let Some(existing) = family.get(&mask) {
            if *existing != p {
                return Err(Error::IncoherentFamily(format!(
                    "translated types disagree on subset {mask:#b}"
                )));
            }
        } else {
            family.insert(mask, p);
        }
        Ok(())
    }
    // base alone comes from the empty subset even when absent from the input
    let base_type = gp
        .family
        .get(&0)
        .cloned()
        .unwrap_or_else(|| gp.base.clone());
    insert_checked(&mut family, base_mask, base_type)?;
    for (&gmask, p) in &gp.family {
        let mut tmask = base_mask;
        for (g, vs) in group_vars.iter().enumerate() {
            if gmask & (1 << g) != 0 {
                for &v in vs {
                    tmask |= 1 << v;
                }
            }
        }
        insert_checked(&mut family, tmask, p.clone())?;
    }
    // close downward
    let tops: Vec<SubsetMask> = family.keys().copied().collect();
    for top in tops {
        let top_type = family[&top].clone();
        let mut stack = vec![top];
        let mut seen = std::collections::HashSet::new();
        while let Some(m) = stack.pop() {
            if !seen.insert(m) {
                continue;
            }
            let sel = selection_for(&var_sorts, top, m, sorts);
            let p = top_type.induced(&sel)?;
            insert_checked(&mut family, m, p)?;
            let mut bits = m;
            while bits != 0 {
                let b = bits & bits.wrapping_neg();
                bits &= bits - 1;
                stack.push(m & !b);
            }
        }
    }
    let problem = AmalgProblem::new(gp.spec.clone(), var_sorts, family)?;
    Ok((problem, origins))
}

/// Brute-force solution set of a general problem: all members on the full
/// shape that pin the base and extend every type. Test and cross-check path.
pub fn general_solutions(levels: &Levels, gp: &GeneralProblem) -> Result<Vec<FinStructure>> {
    let sorts = gp.spec.signature().sort_count();
    let n = gp.group_count();
    let full_shape = gp.shape_with(if n == 0 { 0 } else { (1u32 << n) - 1 }, sorts);
    let table = levels.level(&full_shape)?;
    // selection of base+S inside the full layout
    let mut out = Vec::new();
    'members: for m in table.members() {
        for (&gmask, p) in &gp.family {
            let sel = gp_selection(gp, gmask, sorts);
            if m.induced(&sel)? != *p {
                continue 'members;
            }
        }
        // base pinned even when the family omits the empty subset
        let base_sel: Vec<Vec<usize>> = gp.base.sizes().iter().map(|&k| (0..k).collect()).collect();
        let base_sel: Vec<Vec<usize>> = base_sel
            .into_iter()
            .chain(std::iter::repeat(Vec::new()))
            .take(sorts)
            .collect();
        if m.induced(&base_sel)? != gp.base {
            continue 'members;
        }
        out.push(m.clone());
    }
    Ok(out)
}

/// Per-sort selection of (base + groups in gmask) inside the full layout of a
/// general problem: base elements first per sort, then group variables in
/// group order.
fn gp_selection(gp: &GeneralProblem, gmask: SubsetMask, sorts: usize) -> Vec<Vec<usize>> {
    let mut sel: Vec<Vec<usize>> = (0..sorts)
        .map(|s| (0..gp.base.sizes().get(s).copied().unwrap_or(0)).collect())
        .collect();
    let mut offset: Vec<usize> = (0..sorts)
        .map(|s| gp.base.sizes().get(s).copied().unwrap_or(0))
        .collect();
    for tuple in gp.tuple_sorts.iter().enumerate() {
        let (g, t) = tuple;
        for &s in t {
            if gmask & (1 << g) != 0 {
                sel[s].push(offset[s]);
            }
            offset[s] += 1;
        }
    }
    sel
}

// ---------------------------------------------------------------------------
// Bounded Fraisse-expansion certificate

#[derive(Debug, Clone)]
pub struct ExpansionReport {
    /// Bound up to which the conditions were verified; this is a bounded
    /// certificate, not a proof for all sizes.
    pub verified_up_to: usize,
    pub verdict: ExpansionVerdict,
}

#[derive(Debug, Clone)]
pub enum ExpansionVerdict {
    Pass,
    /// A member of the smaller class with no expansion in the larger one.
    ReductMissing {
        member: FinStructure,
    },
    /// A member of the larger class whose reduct leaves the smaller one.
    ReductExtra {
        member: FinStructure,
    },
    /// An expanded base and an extension with no compatible expansion.
    LiftFailure {
        base_expansion: FinStructure,
        extension: FinStructure,
    },
}

impl ExpansionReport {
    pub fn passed(&self) -> bool {
        matches!(self.verdict, ExpansionVerdict::Pass)
    }
}

/// Check both Fraisse-expansion conditions for all members up to the size
/// bound: reducts of the expanded class are exactly the smaller class, and
/// one-point extensions lift across arbitrary expansions of the base.
pub fn check_fraisse_expansion(
    small: &Levels,
    big: &Levels,
    up_to: usize,
) -> Result<ExpansionReport> {
    let sig_small = small.spec().signature();
    let sig_big = big.spec().signature();
    if !sig_small.is_reduct_of(sig_big) {
        return Err(Error::SignatureMismatch(
            "expansion signature does not extend the base signature".into(),
        ));
    }
    let sorts = sig_small.sort_count();
    let report = |verdict| ExpansionReport {
        verified_up_to: up_to,
        verdict,
    };
    for total in 0..=up_to {
        for shape in compositions(sorts, total) {
            let st = small.level(&shape)?;
            let bt = big.level(&shape)?;
            let mut reducts = std::collections::HashSet::new();
            for m in bt.members() {
                let red = m.reduct_to(sig_small)?;
                if !st.contains(&red) {
                    return Ok(report(ExpansionVerdict::ReductExtra { member: m.clone() }));
                }
                reducts.insert(red.encode());
            }
            for m in st.members() {
                if !reducts.contains(&m.encode()) {
                    return Ok(report(ExpansionVerdict::ReductMissing {
                        member: m.clone(),
                    }));
                }
            }
        }
    }
    // one-point extension lifting
    for total in 1..=up_to {
        for shape in compositions(sorts, total) {
            let bt_small = small.level(&shape)?;
            for b in bt_small.members() {
                for s in 0..sorts {
                    if shape[s] == 0 {
                        continue;
                    }
                    let sel: Vec<Vec<usize>> = shape
                        .iter()
                        .enumerate()
                        .map(|(t, &n)| {
                            if t == s {
                                (0..n - 1).collect()
                            } else {
                                (0..n).collect()
                            }
                        })
                        .collect();
                    let a = b.induced(&sel)?;
                    let a_shape = a.sizes().to_vec();
                    let big_a = big.level(&a_shape)?;
                    let big_b = big.level(&shape)?;
                    for a_exp in big_a.members() {
                        if a_exp.reduct_to(sig_small)? != a {
                            continue;
                        }
                        let mut lifted = false;
                        for b_exp in big_b.members() {
                            if b_exp.reduct_to(sig_small)? == *b && b_exp.induced(&sel)? == *a_exp {
                                lifted = true;
                                break;
                            }
                        }
                        if !lifted {
                            return Ok(report(ExpansionVerdict::LiftFailure {
                                base_expansion: a_exp.clone(),
                                extension: b.clone(),
                            }));
                        }
                    }
                }
            }
        }
    }
    Ok(report(ExpansionVerdict::Pass))
}

// ---------------------------------------------------------------------------
// JSON rendering for reports

pub fn report_to_json(report: &AmalgReport) -> serde_json::Value {
    let witness = report.witness.as_ref().map(|w| {
        let types: serde_json::Map<String, serde_json::Value> = w
            .family()
            .iter()
            .map(|(mask, p)| {
                let vars: Vec<String> = (0..w.ground_size())
                    .filter(|v| mask & (1 << v) != 0)
                    .map(|v| format!("x{}", v + 1))
                    .collect();
                (
                    format!("{{{}}}", vars.join(",")),
                    serde_json::Value::String(p.to_literal()),
                )
            })
            .collect();
        serde_json::json!({
            "ground_size": w.ground_size(),
            "var_sorts": w
                .var_sorts()
                .iter()
                .map(|&s| w.spec().signature().sort_name(s).to_string())
                .collect::<Vec<_>>(),
            "types": types,
        })
    });
    serde_json::json!({
        "level": report.level,
        "passed": report.passed,
        "families_examined": report.families_examined,
        "min_completions": report.min_completions,
        "max_completions": report.max_completions,
        "witness": witness,
    })
}
