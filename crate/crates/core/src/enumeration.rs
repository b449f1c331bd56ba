//! Level-by-level enumeration of class members on canonical domains, with
//! write-once cached tables and a completion index keyed by the types of the
//! maximal proper subsets.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::One;

use crate::class::{ClassSpec, Constraint};
use crate::error::{Error, Result};
use crate::logic::combinations;
use crate::partitions::{bell_numbers, enumerate_rgs, partitions_at_most};
use crate::structure::{FinStructure, SortId};

/// All size vectors with the given number of parts summing to `total`,
/// in lexicographic order.
pub fn compositions(parts: usize, total: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; parts];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[i] = v;
            rec(i + 1, left - v, cur, out);
        }
    }
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(0, total, &mut cur, &mut out);
    out
}

#[derive(Debug, Clone, Copy)]
pub struct EnumLimits {
    /// Bound on the raw fact-instance space for unmanaged relations.
    pub max_raw_instances: usize,
    /// Bound on the number of candidate structures per level.
    pub max_members: usize,
}

impl Default for EnumLimits {
    fn default() -> Self {
        EnumLimits {
            max_raw_instances: 24,
            max_members: 1 << 21,
        }
    }
}

/// One cached level: all members of the class on the canonical domain of a
/// size vector, in canonical order, along with restriction indices into the
/// sublevel tables and the completion index.
#[derive(Debug)]
pub struct LevelTable {
    sizes: Vec<usize>,
    members: Vec<FinStructure>,
    index: HashMap<Vec<u8>, u32>,
    /// Per member, the index of its restriction at each removal position.
    restr: Vec<Box<[u32]>>,
    /// Restriction-key -> indices of members extending that family.
    completions: HashMap<Box<[u32]>, Vec<u32>>,
}

impl LevelTable {
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn members(&self) -> &[FinStructure] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, m: &FinStructure) -> bool {
        self.index.contains_key(&m.encode())
    }

    pub fn index_of(&self, m: &FinStructure) -> Option<u32> {
        self.index.get(&m.encode()).copied()
    }

    pub fn member(&self, i: u32) -> &FinStructure {
        &self.members[i as usize]
    }

    pub(crate) fn restriction_indices(&self, i: u32) -> &[u32] {
        &self.restr[i as usize]
    }

    /// Member indices completing the family given by restriction indices at
    /// every removal position (canonical order). Absent key means the family
    /// has no completion.
    pub(crate) fn completions_for(&self, key: &[u32]) -> Option<&Vec<u32>> {
        self.completions.get(key)
    }

    #[cfg(test)]
    pub(crate) fn completion_keys(&self) -> impl Iterator<Item = (&Box<[u32]>, &Vec<u32>)> {
        self.completions.iter()
    }
}

/// Removal positions of a size vector in canonical order: for each sort in
/// order, each element index in order.
pub(crate) fn removal_list(sizes: &[usize]) -> Vec<(SortId, usize)> {
    let mut out = Vec::new();
    for (s, &n) in sizes.iter().enumerate() {
        for i in 0..n {
            out.push((s, i));
        }
    }
    out
}

/// Position of removing element (sort, idx) in the canonical removal order.
pub(crate) fn removal_position(sizes: &[usize], sort: SortId, idx: usize) -> usize {
    sizes[..sort].iter().sum::<usize>() + idx
}

/// Memoized level tables for one class. Tables are immutable once published;
/// concurrent requests for the same level share a single computation.
pub struct Levels {
    spec: Arc<ClassSpec>,
    limits: EnumLimits,
    #[allow(clippy::type_complexity)]
    tables: Mutex<HashMap<Vec<usize>, Arc<OnceLock<std::result::Result<Arc<LevelTable>, Error>>>>>,
}

impl Levels {
    pub fn new(spec: ClassSpec) -> Levels {
        Levels::with_limits(spec, EnumLimits::default())
    }

    pub fn with_limits(spec: ClassSpec, limits: EnumLimits) -> Levels {
        Levels {
            spec: Arc::new(spec),
            limits,
            tables: Mutex::new(HashMap::new()),
        }
    }

    pub fn spec(&self) -> &Arc<ClassSpec> {
        &self.spec
    }

    pub fn limits(&self) -> EnumLimits {
        self.limits
    }

    pub fn level(&self, sizes: &[usize]) -> Result<Arc<LevelTable>> {
        let cell = {
            let mut map = self.tables.lock().unwrap();
            map.entry(sizes.to_vec())
                .or_insert_with(|| Arc::new(OnceLock::new()))
                .clone()
        };
        cell.get_or_init(|| self.build_table(sizes)).clone()
    }

    fn build_table(&self, sizes: &[usize]) -> std::result::Result<Arc<LevelTable>, Error> {
        let members = enumerate_members(&self.spec, sizes, &self.limits)?;
        let removals = removal_list(sizes);
        let mut sub_tables: Vec<Arc<LevelTable>> = Vec::with_capacity(removals.len());
        for &(s, _) in &removals {
            let mut sub = sizes.to_vec();
            sub[s] -= 1;
            sub_tables.push(self.level(&sub)?);
        }
        let mut index = HashMap::with_capacity(members.len());
        for (i, m) in members.iter().enumerate() {
            if index.insert(m.encode(), i as u32).is_some() {
                return Err(Error::InvalidSpec(
                    "enumeration produced duplicate members".into(),
                ));
            }
        }
        let mut restr: Vec<Box<[u32]>> = Vec::with_capacity(members.len());
        let mut completions: HashMap<Box<[u32]>, Vec<u32>> = HashMap::new();
        for (i, m) in members.iter().enumerate() {
            let mut key = Vec::with_capacity(removals.len());
            for (pos, &(s, e)) in removals.iter().enumerate() {
                let sel: Vec<Vec<usize>> = sizes
                    .iter()
                    .enumerate()
                    .map(|(t, &n)| {
                        (0..n)
                            .filter(|&x| !(t == s && x == e))
                            .collect::<Vec<usize>>()
                    })
                    .collect();
                let sub = m.induced(&sel)?;
                let idx = sub_tables[pos].index_of(&sub).ok_or_else(|| {
                    Error::InvalidSpec(
                        "member restriction missing from the level below (class not hereditary?)"
                            .into(),
                    )
                })?;
                key.push(idx);
            }
            let key: Box<[u32]> = key.into();
            completions.entry(key.clone()).or_default().push(i as u32);
            restr.push(key);
        }
        Ok(Arc::new(LevelTable {
            sizes: sizes.to_vec(),
            members,
            index,
            restr,
            completions,
        }))
    }

    /// Exact member count: closed product formula for pure equivalence
    /// classes, otherwise by enumeration.
    pub fn count_members(&self, sizes: &[usize]) -> Result<BigUint> {
        let spec = &self.spec;
        let pure = spec
            .constraints()
            .iter()
            .all(|c| matches!(c, Constraint::Equivalence(_) | Constraint::Labeling(_)));
        if pure {
            let mut total = BigUint::one();
            for g in spec.groups() {
                let cells = match g.eq.param_sort {
                    Some(p) => sizes[p],
                    None => 1,
                };
                let nr = falling_factorial(sizes[g.eq.object_sort], g.eq.tuple_arity);
                let per_cell = match &g.labeling {
                    Some(lab) => BigUint::from(lab.labels.len()).pow(nr as u32),
                    None => {
                        let all = if g.eq.redundant_class {
                            nr
                        } else {
                            sizes[g.eq.object_sort].pow(g.eq.tuple_arity as u32)
                        };
                        match g.eq.max_classes {
                            Some(n) => partitions_at_most(all, n as usize),
                            None => bell_numbers(all)[all].clone(),
                        }
                    }
                };
                total *= per_cell.pow(cells as u32);
            }
            // relations untouched by any constraint vary freely
            for r in spec.unmanaged_relations() {
                let instances: usize = spec
                    .signature()
                    .relation(r)
                    .profile
                    .iter()
                    .map(|&s| sizes[s])
                    .product();
                total *= BigUint::from(2u32).pow(instances as u32);
            }
            return Ok(total);
        }
        Ok(BigUint::from(self.level(sizes)?.len()))
    }
}

fn falling_factorial(n: usize, k: usize) -> usize {
    let mut r = 1usize;
    for i in 0..k {
        r *= n.saturating_sub(i);
    }
    r
}

/// All non-redundant k-tuples (distinct coordinates) over 0..n, lexicographic.
pub(crate) fn nonredundant_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    crate::logic::injections(k, n)
}

/// All k-tuples over 0..n including repeats, lexicographic.
fn all_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    if k == 0 {
        return vec![Vec::new()];
    }
    if n == 0 {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < n {
                break;
            }
            cur[i] = 0;
        }
    }
}

/// One unmanaged relation's instance space at a size vector.
enum RawInstances {
    /// Fully symmetric, all-distinct relation: one instance per unordered
    /// support set; a chosen instance expands to every permutation.
    Orbits(Vec<Vec<usize>>),
    Tuples(Vec<Vec<usize>>),
}

impl RawInstances {
    fn len(&self) -> usize {
        match self {
            RawInstances::Orbits(v) => v.len(),
            RawInstances::Tuples(v) => v.len(),
        }
    }
}

/// A managed cell: one (group, parameter value) pair and its tuple list.
pub(crate) struct Cell {
    pub rel: usize,
    pub param: Option<usize>,
    pub tuples: Vec<Vec<usize>>,
    pub labels: Option<CellLabels>,
    pub redundant: bool,
    pub max_classes: Option<usize>,
}

pub(crate) struct CellLabels {
    pub label_rels: Vec<usize>,
    pub reserved: Option<usize>,
}

/// The managed cells of a spec at a size vector: one per (equivalence
/// constraint, parameter value) pair.
pub(crate) fn managed_cells(spec: &ClassSpec, sizes: &[usize]) -> Vec<Cell> {
    let mut cells: Vec<Cell> = Vec::new();
    for g in spec.groups() {
        let obj = sizes[g.eq.object_sort];
        let tuples = if g.eq.redundant_class {
            nonredundant_tuples(obj, g.eq.tuple_arity)
        } else {
            all_tuples(obj, g.eq.tuple_arity)
        };
        let params: Vec<Option<usize>> = match g.eq.param_sort {
            Some(p) => (0..sizes[p]).map(Some).collect(),
            None => vec![None],
        };
        for param in params {
            cells.push(Cell {
                rel: g.eq.rel,
                param,
                tuples: tuples.clone(),
                labels: g.labeling.as_ref().map(|lab| CellLabels {
                    label_rels: lab.labels.clone(),
                    reserved: lab.reserved,
                }),
                redundant: g.eq.redundant_class,
                max_classes: g.eq.max_classes.map(|n| n as usize),
            });
        }
    }
    cells
}

/// Emit the facts of one cell for a block (or label) assignment per tuple.
pub(crate) fn emit_cell_facts(
    b: &mut crate::structure::StructureBuilder,
    spec: &ClassSpec,
    sizes: &[usize],
    cell: &Cell,
    assign: &[usize],
) -> Result<()> {
    let sig = spec.signature();
    let prefix: Vec<usize> = cell.param.into_iter().collect();
    if let Some(labels) = &cell.labels {
        for (ti, t) in cell.tuples.iter().enumerate() {
            let mut args = prefix.clone();
            args.extend_from_slice(t);
            b.fact(labels.label_rels[assign[ti]], &args)?;
        }
        if let Some(res) = labels.reserved {
            let obj = sizes[sig.relation(res).profile[prefix.len()]];
            let k = sig.relation(res).arity() - prefix.len();
            for t in all_tuples(obj, k) {
                if is_redundant_tuple(&t) {
                    let mut args = prefix.clone();
                    args.extend_from_slice(&t);
                    b.fact(res, &args)?;
                }
            }
        }
    }
    for (i, s) in cell.tuples.iter().enumerate() {
        for (j, t) in cell.tuples.iter().enumerate() {
            if assign[i] == assign[j] {
                let mut args = prefix.clone();
                args.extend_from_slice(s);
                args.extend_from_slice(t);
                b.fact(cell.rel, &args)?;
            }
        }
    }
    if cell.redundant {
        let k = cell
            .tuples
            .first()
            .map(|t| t.len())
            .unwrap_or_else(|| (sig.relation(cell.rel).arity() - prefix.len()) / 2);
        let obj_sort = sig.relation(cell.rel).profile[prefix.len()];
        let redundant: Vec<Vec<usize>> = all_tuples(sizes[obj_sort], k)
            .into_iter()
            .filter(|t| is_redundant_tuple(t))
            .collect();
        for s in &redundant {
            for t in &redundant {
                let mut args = prefix.clone();
                args.extend_from_slice(s);
                args.extend_from_slice(t);
                b.fact(cell.rel, &args)?;
            }
        }
    }
    Ok(())
}

fn enumerate_members(
    spec: &ClassSpec,
    sizes: &[usize],
    limits: &EnumLimits,
) -> Result<Vec<FinStructure>> {
    let sig = spec.signature();
    if sizes.len() != sig.sort_count() {
        return Err(Error::InvalidSelection(format!(
            "expected {} sort sizes",
            sig.sort_count()
        )));
    }

    let cells = managed_cells(spec, sizes);

    // raw instances for unmanaged relations
    let mut raw: Vec<(usize, RawInstances)> = Vec::new();
    let mut raw_count = 0usize;
    for r in spec.unmanaged_relations() {
        let decl = sig.relation(r);
        let inst = if spec.orbit_relation(r) {
            let n = sizes[decl.profile[0]];
            RawInstances::Orbits(combinations(n, decl.arity()))
        } else {
            let mut tuples: Vec<Vec<usize>> = vec![Vec::new()];
            for &s in &decl.profile {
                let mut next = Vec::new();
                for t in &tuples {
                    for x in 0..sizes[s] {
                        let mut t2 = t.clone();
                        t2.push(x);
                        next.push(t2);
                    }
                }
                tuples = next;
            }
            RawInstances::Tuples(tuples)
        };
        raw_count += inst.len();
        raw.push((r, inst));
    }
    if raw_count > limits.max_raw_instances {
        return Err(Error::GuardExceeded(format!(
            "raw fact space has {} instances, guard is {}",
            raw_count, limits.max_raw_instances
        )));
    }

    // candidate count estimate
    let mut estimate = 2f64.powi(raw_count as i32);
    for cell in &cells {
        let nr = cell.tuples.len();
        let c = match &cell.labels {
            Some(l) => (l.label_rels.len() as f64).powi(nr as i32),
            None => {
                let capped = bell_estimate(nr, cell.max_classes);
                if capped > limits.max_members as f64 {
                    return Err(Error::GuardExceeded(format!(
                        "partition space for a cell of {} tuples is too large",
                        nr
                    )));
                }
                capped
            }
        };
        estimate *= c;
        if estimate > limits.max_members as f64 {
            return Err(Error::GuardExceeded(format!(
                "estimated {} candidates exceed the member guard {}",
                estimate, limits.max_members
            )));
        }
    }

    // generate assignments per cell
    let mut cell_assignments: Vec<Vec<Vec<u8>>> = Vec::with_capacity(cells.len());
    for cell in &cells {
        let nr = cell.tuples.len();
        let mut assigns = Vec::new();
        match &cell.labels {
            Some(l) => {
                let nl = l.label_rels.len();
                let mut cur = vec![0u8; nr];
                loop {
                    assigns.push(cur.clone());
                    let mut i = nr;
                    let mut done = nr == 0;
                    loop {
                        if i == 0 {
                            done = true;
                            break;
                        }
                        i -= 1;
                        cur[i] += 1;
                        if (cur[i] as usize) < nl {
                            break;
                        }
                        cur[i] = 0;
                    }
                    if done {
                        break;
                    }
                }
                if nr == 0 {
                    assigns = vec![Vec::new()];
                }
            }
            None => {
                enumerate_rgs(nr, cell.max_classes, &mut |rgs| assigns.push(rgs.to_vec()));
            }
        }
        cell_assignments.push(assigns);
    }

    // cartesian product over cells and raw bitmasks
    let mut members = Vec::new();
    let mut choice = vec![0usize; cells.len()];
    loop {
        let raw_total: usize = 1usize << raw_count;
        for mask in 0..raw_total {
            let m = build_candidate(spec, sizes, &cells, &cell_assignments, &choice, &raw, mask)?;
            if spec.is_member(&m)? {
                members.push(m);
            }
        }
        // odometer over cell assignment indices
        let mut i = cells.len();
        let mut done = cells.is_empty();
        loop {
            if i == 0 {
                done = true;
                break;
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < cell_assignments[i].len() {
                break;
            }
            choice[i] = 0;
        }
        if done {
            break;
        }
    }
    members.sort_unstable();
    members.dedup();
    Ok(members)
}

fn bell_estimate(n: usize, max_blocks: Option<usize>) -> f64 {
    if n > 20 {
        return f64::INFINITY;
    }
    let bells = bell_numbers(n);
    match max_blocks {
        None => num_traits::ToPrimitive::to_f64(&bells[n]).unwrap_or(f64::INFINITY),
        Some(b) => {
            num_traits::ToPrimitive::to_f64(&partitions_at_most(n, b)).unwrap_or(f64::INFINITY)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn build_candidate(
    spec: &ClassSpec,
    sizes: &[usize],
    cells: &[Cell],
    cell_assignments: &[Vec<Vec<u8>>],
    choice: &[usize],
    raw: &[(usize, RawInstances)],
    mask: usize,
) -> Result<FinStructure> {
    let sig = spec.signature();
    let mut b = FinStructure::builder(sig.clone(), sizes)?;
    let mut assign_buf: Vec<usize> = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        assign_buf.clear();
        assign_buf.extend(cell_assignments[ci][choice[ci]].iter().map(|&x| x as usize));
        emit_cell_facts(&mut b, spec, sizes, cell, &assign_buf)?;
    }
    // raw facts
    let mut bit = 0usize;
    for (r, inst) in raw {
        match inst {
            RawInstances::Orbits(supports) => {
                for sup in supports {
                    if mask & (1 << bit) != 0 {
                        for perm in permutations_of(sup) {
                            b.fact(*r, &perm)?;
                        }
                    }
                    bit += 1;
                }
            }
            RawInstances::Tuples(tuples) => {
                for t in tuples {
                    if mask & (1 << bit) != 0 {
                        b.fact(*r, t)?;
                    }
                    bit += 1;
                }
            }
        }
    }
    Ok(b.finish())
}

/// Raw (unmanaged) relation instances of a spec at a size vector, with the
/// orbit compression applied. Used by the uniform samplers.
pub(crate) fn raw_instance_list(
    spec: &ClassSpec,
    sizes: &[usize],
) -> Vec<(usize, Vec<Vec<usize>>, bool)> {
    let sig = spec.signature();
    let mut out = Vec::new();
    for r in spec.unmanaged_relations() {
        let decl = sig.relation(r);
        if spec.orbit_relation(r) {
            let n = sizes[decl.profile[0]];
            out.push((r, combinations(n, decl.arity()), true));
        } else {
            let mut tuples: Vec<Vec<usize>> = vec![Vec::new()];
            for &s in &decl.profile {
                let mut next = Vec::new();
                for t in &tuples {
                    for x in 0..sizes[s] {
                        let mut t2 = t.clone();
                        t2.push(x);
                        next.push(t2);
                    }
                }
                tuples = next;
            }
            out.push((r, tuples, false));
        }
    }
    out
}

pub(crate) fn orbit_expand(support: &[usize]) -> Vec<Vec<usize>> {
    permutations_of(support)
}

pub(crate) fn is_redundant_tuple(t: &[usize]) -> bool {
    for i in 0..t.len() {
        if t[i + 1..].contains(&t[i]) {
            return true;
        }
    }
    false
}

fn permutations_of(items: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = items.to_vec();
    fn rec(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for i in k..cur.len() {
            cur.swap(k, i);
            rec(k + 1, cur, out);
            cur.swap(k, i);
        }
    }
    rec(0, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class::parse_class_ref;

    fn levels(name: &str) -> Levels {
        Levels::new(parse_class_ref(name).unwrap())
    }

    #[test]
    fn graph_level_counts() {
        let l = levels("graphs");
        assert_eq!(l.level(&[0]).unwrap().len(), 1);
        assert_eq!(l.level(&[1]).unwrap().len(), 1);
        assert_eq!(l.level(&[2]).unwrap().len(), 2);
        assert_eq!(l.level(&[3]).unwrap().len(), 8);
        assert_eq!(l.level(&[4]).unwrap().len(), 64);
    }

    #[test]
    fn triangle_free_level_three_has_seven() {
        let l = levels("triangle-free");
        assert_eq!(l.level(&[3]).unwrap().len(), 7);
    }

    #[test]
    fn two_graph_level_four_has_eight() {
        // half of the 16 assignments of the four triples have even parity
        let l = levels("two-graph");
        assert_eq!(l.level(&[3]).unwrap().len(), 2);
        assert_eq!(l.level(&[4]).unwrap().len(), 8);
    }

    #[test]
    fn equivalence_levels_are_bell_numbers() {
        let l = levels("equivalence");
        assert_eq!(l.level(&[3]).unwrap().len(), 5);
        assert_eq!(l.level(&[4]).unwrap().len(), 15);
        assert_eq!(l.count_members(&[3]).unwrap(), BigUint::from(5u32));
    }

    #[test]
    fn feq_count_is_bell_power() {
        let l = levels("feq");
        // object size 3, parameter size 2
        assert_eq!(l.count_members(&[3, 2]).unwrap(), BigUint::from(25u32));
        assert_eq!(l.level(&[3, 2]).unwrap().len(), 25);
    }

    #[test]
    fn labeled_feq_levels() {
        let l = levels("feq-bounded-labeled(n=2)");
        // labels per (parameter, object) pair
        assert_eq!(l.level(&[1, 1]).unwrap().len(), 2);
        assert_eq!(l.level(&[2, 1]).unwrap().len(), 4);
        assert_eq!(l.level(&[2, 2]).unwrap().len(), 16);
    }

    #[test]
    fn cpz_labeled_level_counts() {
        let l = levels("cpz-bounded-labeled(m=2,n=2)");
        // element labels (2 each) and ordered-pair labels (2 each)
        assert_eq!(l.level(&[1]).unwrap().len(), 2);
        assert_eq!(l.level(&[2]).unwrap().len(), 2 * 2 * 4);
        assert_eq!(l.level(&[3]).unwrap().len(), 8 * 64);
    }

    #[test]
    fn hereditarity_consistency() {
        for name in ["graphs", "triangle-free", "two-graph", "named-classes(k=2)"] {
            let l = levels(name);
            let table = l.level(&[4]).unwrap();
            let below = l.level(&[3]).unwrap();
            for m in table.members() {
                for e in 0..4usize {
                    let sel: Vec<usize> = (0..4).filter(|&x| x != e).collect();
                    let sub = m.induced(&[sel]).unwrap();
                    assert!(below.contains(&sub), "{name}: restriction missing below");
                }
            }
        }
    }

    #[test]
    fn two_graph_pair_families_have_two_completions() {
        // below size 4 the parity constraint is silent: the triple is free
        let l = levels("two-graph");
        let t = l.level(&[3]).unwrap();
        for (_, v) in t.completion_keys() {
            assert_eq!(v.len(), 2);
        }
    }

    #[test]
    fn knk_below_the_bound_is_all_hypergraphs() {
        let knk = levels("knk(n=4,k=2)");
        let graphs = levels("graphs");
        for n in 0..4usize {
            assert_eq!(
                knk.level(&[n]).unwrap().len(),
                graphs.level(&[n]).unwrap().len(),
                "size {n}"
            );
        }
        assert_eq!(knk.level(&[4]).unwrap().len(), 63); // all but the complete graph
    }

    #[test]
    fn completions_partition_the_level() {
        let l = levels("triangle-free");
        let t = l.level(&[3]).unwrap();
        let total: usize = t.completion_keys().map(|(_, v)| v.len()).sum();
        assert_eq!(total, t.len());
    }

    #[test]
    fn guard_exceeded_on_large_raw_space() {
        // plain binary relation with no constraints: 36 instances at size 6
        let spec = crate::class::ClassSpec::new(
            "raw",
            crate::structure::Signature::build(&["V"], &[("R", &["V", "V"])]).unwrap(),
            vec![],
            None,
        )
        .unwrap();
        let l = Levels::new(spec);
        assert!(matches!(l.level(&[6]), Err(Error::GuardExceeded(_))));
        assert_eq!(l.level(&[2]).unwrap().len(), 16);
    }

    #[test]
    fn single_flight_shares_tables() {
        let l = std::sync::Arc::new(levels("graphs"));
        let mut handles = Vec::new();
        for _ in 0..4 {
            let l2 = l.clone();
            handles.push(std::thread::spawn(move || l2.level(&[4]).unwrap()));
        }
        let tables: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        for t in &tables[1..] {
            assert!(Arc::ptr_eq(&tables[0], t));
        }
    }

    #[test]
    fn compositions_enumerate_size_vectors() {
        assert_eq!(compositions(1, 3), vec![vec![3]]);
        assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(compositions(2, 0), vec![vec![0, 0]]);
    }
}
