//! First-order sentences over a signature, brute-force evaluation on finite
//! structures, and generation of axiom families (universal axioms and
//! one-point extension axioms).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::enumeration::{compositions, Levels};
use crate::error::{Error, Result};
use crate::structure::{FinStructure, RelId, Signature, SortId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Atom {
        rel: RelId,
        args: Vec<String>,
    },
    Eq(String, String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Forall {
        var: String,
        sort: SortId,
        body: Box<Formula>,
    },
    Exists {
        var: String,
        sort: SortId,
        body: Box<Formula>,
    },
}

/// A closed, well-sorted formula bound to its signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    sig: Arc<Signature>,
    root: Formula,
    depth: usize,
    binders: usize,
}

impl Sentence {
    pub fn new(sig: Arc<Signature>, root: Formula) -> Result<Sentence> {
        let mut ctx: Vec<(String, SortId)> = Vec::new();
        let mut binders = 0;
        let depth = check_formula(&root, &sig, &mut ctx, &mut binders)?;
        Ok(Sentence {
            sig,
            root,
            depth,
            binders,
        })
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn root(&self) -> &Formula {
        &self.root
    }

    pub fn quantifier_depth(&self) -> usize {
        self.depth
    }

    pub fn binder_count(&self) -> usize {
        self.binders
    }

    /// Re-resolve relation and sort ids against another signature by name,
    /// so a sentence written for a class also applies to its expansions.
    pub fn rebind(&self, sig: &Arc<Signature>) -> Result<Sentence> {
        let root = rebind_formula(&self.root, &self.sig, sig)?;
        Sentence::new(sig.clone(), root)
    }

    pub fn to_sexpr(&self) -> String {
        let mut out = String::new();
        write_sexpr(&self.root, &self.sig, &mut out);
        out
    }

    pub fn parse(sig: &Arc<Signature>, text: &str) -> Result<Sentence> {
        let tokens = tokenize(text)?;
        let mut pos = 0;
        let root = parse_formula(&tokens, &mut pos, sig)?;
        if pos != tokens.len() {
            return Err(Error::Parse("trailing tokens after formula".into()));
        }
        Sentence::new(sig.clone(), root)
    }
}

fn check_formula(
    f: &Formula,
    sig: &Signature,
    ctx: &mut Vec<(String, SortId)>,
    binders: &mut usize,
) -> Result<usize> {
    let lookup = |ctx: &[(String, SortId)], name: &str| -> Result<SortId> {
        ctx.iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, s)| *s)
            .ok_or_else(|| Error::IllFormedSentence(format!("unbound variable `{name}`")))
    };
    match f {
        Formula::Atom { rel, args } => {
            let decl = sig
                .relations()
                .get(*rel)
                .ok_or_else(|| Error::UnknownRelation(format!("#{rel}")))?;
            if args.len() != decl.arity() {
                return Err(Error::ArityMismatch {
                    rel: decl.name.clone(),
                    expected: decl.arity(),
                    got: args.len(),
                });
            }
            for (pos, a) in args.iter().enumerate() {
                let s = lookup(ctx, a)?;
                if s != decl.profile[pos] {
                    return Err(Error::IllFormedSentence(format!(
                        "variable `{a}` has sort `{}`, position {pos} of `{}` needs `{}`",
                        sig.sort_name(s),
                        decl.name,
                        sig.sort_name(decl.profile[pos])
                    )));
                }
            }
            Ok(0)
        }
        Formula::Eq(a, b) => {
            let sa = lookup(ctx, a)?;
            let sb = lookup(ctx, b)?;
            if sa != sb {
                return Err(Error::IllFormedSentence(format!(
                    "equality between sorts `{}` and `{}`",
                    sig.sort_name(sa),
                    sig.sort_name(sb)
                )));
            }
            Ok(0)
        }
        Formula::Not(g) => check_formula(g, sig, ctx, binders),
        Formula::And(gs) | Formula::Or(gs) => {
            let mut d = 0;
            for g in gs {
                d = d.max(check_formula(g, sig, ctx, binders)?);
            }
            Ok(d)
        }
        Formula::Implies(a, b) => {
            let da = check_formula(a, sig, ctx, binders)?;
            let db = check_formula(b, sig, ctx, binders)?;
            Ok(da.max(db))
        }
        Formula::Forall { var, sort, body } | Formula::Exists { var, sort, body } => {
            if *sort >= sig.sort_count() {
                return Err(Error::UnknownSort(format!("#{sort}")));
            }
            *binders += 1;
            ctx.push((var.clone(), *sort));
            let d = check_formula(body, sig, ctx, binders)?;
            ctx.pop();
            Ok(d + 1)
        }
    }
}

fn rebind_formula(f: &Formula, from: &Signature, to: &Signature) -> Result<Formula> {
    Ok(match f {
        Formula::Atom { rel, args } => {
            let decl = from.relation(*rel);
            let new = to
                .relation_id(&decl.name)
                .ok_or_else(|| Error::UnknownRelation(decl.name.clone()))?;
            let to_profile: Vec<&str> = to
                .relation(new)
                .profile
                .iter()
                .map(|&s| to.sort_name(s))
                .collect();
            let from_profile: Vec<&str> = decl.profile.iter().map(|&s| from.sort_name(s)).collect();
            if to_profile != from_profile {
                return Err(Error::SignatureMismatch(format!(
                    "relation `{}` has a different profile in the target signature",
                    decl.name
                )));
            }
            Formula::Atom {
                rel: new,
                args: args.clone(),
            }
        }
        Formula::Eq(a, b) => Formula::Eq(a.clone(), b.clone()),
        Formula::Not(g) => Formula::Not(Box::new(rebind_formula(g, from, to)?)),
        Formula::And(gs) => Formula::And(
            gs.iter()
                .map(|g| rebind_formula(g, from, to))
                .collect::<Result<_>>()?,
        ),
        Formula::Or(gs) => Formula::Or(
            gs.iter()
                .map(|g| rebind_formula(g, from, to))
                .collect::<Result<_>>()?,
        ),
        Formula::Implies(a, b) => Formula::Implies(
            Box::new(rebind_formula(a, from, to)?),
            Box::new(rebind_formula(b, from, to)?),
        ),
        Formula::Forall { var, sort, body } => Formula::Forall {
            var: var.clone(),
            sort: to
                .sort_id(from.sort_name(*sort))
                .ok_or_else(|| Error::UnknownSort(from.sort_name(*sort).to_string()))?,
            body: Box::new(rebind_formula(body, from, to)?),
        },
        Formula::Exists { var, sort, body } => Formula::Exists {
            var: var.clone(),
            sort: to
                .sort_id(from.sort_name(*sort))
                .ok_or_else(|| Error::UnknownSort(from.sort_name(*sort).to_string()))?,
            body: Box::new(rebind_formula(body, from, to)?),
        },
    })
}

// ---------------------------------------------------------------------------
// Evaluation

/// Tarskian satisfaction by exhaustive assignment search with early exit.
pub fn evaluate(m: &FinStructure, s: &Sentence) -> Result<bool> {
    if *m.signature() != *s.signature() {
        return Err(Error::SignatureMismatch(
            "sentence and structure signatures differ".into(),
        ));
    }
    let mut env: Vec<(&str, SortId, usize)> = Vec::new();
    Ok(eval_formula(m, &s.root, &mut env))
}

fn eval_formula<'a>(
    m: &FinStructure,
    f: &'a Formula,
    env: &mut Vec<(&'a str, SortId, usize)>,
) -> bool {
    match f {
        Formula::Atom { rel, args } => {
            let mut tuple = [0usize; 16];
            for (i, a) in args.iter().enumerate() {
                tuple[i] = env_value(env, a);
            }
            m.holds(*rel, &tuple[..args.len()])
        }
        Formula::Eq(a, b) => env_value(env, a) == env_value(env, b),
        Formula::Not(g) => !eval_formula(m, g, env),
        Formula::And(gs) => gs.iter().all(|g| eval_formula(m, g, env)),
        Formula::Or(gs) => gs.iter().any(|g| eval_formula(m, g, env)),
        Formula::Implies(a, b) => !eval_formula(m, a, env) || eval_formula(m, b, env),
        Formula::Forall { var, sort, body } => {
            let n = m.sizes()[*sort];
            for v in 0..n {
                env.push((var, *sort, v));
                let ok = eval_formula(m, body, env);
                env.pop();
                if !ok {
                    return false;
                }
            }
            true
        }
        Formula::Exists { var, sort, body } => {
            // unit propagation: a top-level equality pinning `var` to an
            // already-bound variable leaves a single candidate
            if let Some(v) = forced_value(var, body, env) {
                if v >= m.sizes()[*sort] {
                    return false;
                }
                env.push((var, *sort, v));
                let ok = eval_formula(m, body, env);
                env.pop();
                return ok;
            }
            let n = m.sizes()[*sort];
            for v in 0..n {
                env.push((var, *sort, v));
                let ok = eval_formula(m, body, env);
                env.pop();
                if ok {
                    return true;
                }
            }
            false
        }
    }
}

/// Evaluate an open formula under an explicit assignment of its free
/// variables.
pub fn evaluate_at(
    m: &FinStructure,
    f: &Formula,
    assignment: &[(&str, SortId, usize)],
) -> Result<bool> {
    for &(_name, sort, value) in assignment {
        if sort >= m.sizes().len() || value >= m.sizes()[sort] {
            return Err(Error::IndexOutOfRange {
                sort: format!("#{sort}"),
                index: value,
                size: m.sizes().get(sort).copied().unwrap_or(0),
            });
        }
    }
    let mut env: Vec<(&str, SortId, usize)> = assignment.to_vec();
    Ok(eval_formula(m, f, &mut env))
}

/// For a universally quantified sentence, find the first assignment of the
/// leading universal prefix that falsifies the matrix. Returns the violating
/// elements as (sort, index) pairs in prefix order.
pub fn universal_counterexample(
    m: &FinStructure,
    s: &Sentence,
) -> Result<Option<Vec<(SortId, usize)>>> {
    if *m.signature() != *s.signature() {
        return Err(Error::SignatureMismatch(
            "sentence and structure signatures differ".into(),
        ));
    }
    let mut prefix: Vec<(&str, SortId)> = Vec::new();
    let mut body = s.root();
    while let Formula::Forall { var, sort, body: b } = body {
        prefix.push((var, *sort));
        body = b;
    }
    let mut assignment = vec![0usize; prefix.len()];
    let dims: Vec<usize> = prefix.iter().map(|&(_, s)| m.sizes()[s]).collect();
    if dims.contains(&0) && !prefix.is_empty() {
        return Ok(None);
    }
    loop {
        let mut env: Vec<(&str, SortId, usize)> = prefix
            .iter()
            .zip(&assignment)
            .map(|(&(n, s), &v)| (n, s, v))
            .collect();
        if !eval_formula(m, body, &mut env) {
            return Ok(Some(
                prefix
                    .iter()
                    .zip(&assignment)
                    .map(|(&(_, s), &v)| (s, v))
                    .collect(),
            ));
        }
        if prefix.is_empty() || !advance(&mut assignment, &dims) {
            return Ok(None);
        }
    }
}

fn env_value(env: &[(&str, SortId, usize)], name: &str) -> usize {
    env.iter()
        .rev()
        .find(|(n, _, _)| *n == name)
        .map(|(_, _, v)| *v)
        .expect("validated sentence has no unbound variables")
}

fn forced_value(var: &str, body: &Formula, env: &[(&str, SortId, usize)]) -> Option<usize> {
    let from_eq = |a: &str, b: &str| -> Option<usize> {
        if a == var && b != var {
            env.iter()
                .rev()
                .find(|(n, _, _)| *n == b)
                .map(|(_, _, v)| *v)
        } else if b == var && a != var {
            env.iter()
                .rev()
                .find(|(n, _, _)| *n == a)
                .map(|(_, _, v)| *v)
        } else {
            None
        }
    };
    match body {
        Formula::Eq(a, b) => from_eq(a, b),
        Formula::And(gs) => gs.iter().find_map(|g| match g {
            Formula::Eq(a, b) => from_eq(a, b),
            _ => None,
        }),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Diagram formulas and extension axioms

/// Canonical variable names for the elements of a structure shape:
/// sort-major order, `x1`, `x2`, ...
pub fn shape_vars(sizes: &[usize]) -> Vec<Vec<String>> {
    let mut k = 0usize;
    sizes
        .iter()
        .map(|&n| {
            (0..n)
                .map(|_| {
                    k += 1;
                    format!("x{k}")
                })
                .collect()
        })
        .collect()
}

/// The conjunction of the quantifier-free diagram of `a`: all positive and
/// negative atomic facts over its elements, plus pairwise inequalities.
/// Returns the free variables (per sort) and the open formula.
pub fn theta(a: &FinStructure) -> (Vec<Vec<String>>, Formula) {
    let vars = shape_vars(a.sizes());
    let f = theta_over(a, &vars);
    (vars, f)
}

/// Diagram of `a` with caller-supplied variable names per sort.
pub fn theta_over(a: &FinStructure, vars: &[Vec<String>]) -> Formula {
    let mut parts = Vec::new();
    for names in vars.iter() {
        for i in 0..names.len() {
            for j in (i + 1)..names.len() {
                parts.push(Formula::Not(Box::new(Formula::Eq(
                    names[i].clone(),
                    names[j].clone(),
                ))));
            }
        }
    }
    let sig = a.signature();
    for (r, decl) in sig.relations().iter().enumerate() {
        let dims: Vec<usize> = decl.profile.iter().map(|&s| a.sizes()[s]).collect();
        let mut tuple = vec![0usize; dims.len()];
        loop {
            if dims.iter().all(|&d| d > 0) {
                let atom = Formula::Atom {
                    rel: r,
                    args: tuple
                        .iter()
                        .enumerate()
                        .map(|(pos, &x)| vars[decl.profile[pos]][x].clone())
                        .collect(),
                };
                if a.holds(r, &tuple) {
                    parts.push(atom);
                } else {
                    parts.push(Formula::Not(Box::new(atom)));
                }
            }
            if !advance(&mut tuple, &dims) {
                break;
            }
        }
    }
    Formula::And(parts)
}

fn advance(tuple: &mut [usize], dims: &[usize]) -> bool {
    for i in (0..tuple.len()).rev() {
        tuple[i] += 1;
        if tuple[i] < dims[i] {
            return true;
        }
        tuple[i] = 0;
    }
    false
}

/// A one-point extension pair: `extended` adds one element (the last of
/// `new_sort`) to `base`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionAxiom {
    pub base: FinStructure,
    pub extended: FinStructure,
    pub new_sort: SortId,
}

impl ExtensionAxiom {
    pub fn new(base: FinStructure, extended: FinStructure) -> Result<ExtensionAxiom> {
        if base.signature() != extended.signature() {
            return Err(Error::SignatureMismatch(
                "extension pair over different signatures".into(),
            ));
        }
        let mut new_sort = None;
        for s in 0..base.sizes().len() {
            match extended.sizes()[s].checked_sub(base.sizes()[s]) {
                Some(0) => {}
                Some(1) if new_sort.is_none() => new_sort = Some(s),
                _ => {
                    return Err(Error::NotOnePointExtension(format!(
                        "sizes {:?} vs {:?}",
                        base.sizes(),
                        extended.sizes()
                    )))
                }
            }
        }
        let new_sort = new_sort.ok_or_else(|| {
            Error::NotOnePointExtension("extended structure adds no element".into())
        })?;
        // base sizes select everything but the last element of the new sort
        let sel: Vec<Vec<usize>> = base.sizes().iter().map(|&n| (0..n).collect()).collect();
        if extended.induced(&sel)? != base {
            return Err(Error::NotOnePointExtension(
                "base is not the induced substructure on the initial segment".into(),
            ));
        }
        Ok(ExtensionAxiom {
            base,
            extended,
            new_sort,
        })
    }

    pub fn base_size(&self) -> usize {
        self.base.total_size()
    }

    /// The sentence `forall xbar exists y (theta_base -> theta_extended)`.
    pub fn sentence(&self) -> Result<Sentence> {
        let base_vars = shape_vars(self.base.sizes());
        let theta_a = theta_over(&self.base, &base_vars);
        let mut ext_vars = base_vars.clone();
        ext_vars[self.new_sort].push("y".to_string());
        let theta_b = theta_over(&self.extended, &ext_vars);
        let mut f = Formula::Exists {
            var: "y".to_string(),
            sort: self.new_sort,
            body: Box::new(Formula::Implies(Box::new(theta_a), Box::new(theta_b))),
        };
        for (s, names) in base_vars.iter().enumerate().rev() {
            for name in names.iter().rev() {
                f = Formula::Forall {
                    var: name.clone(),
                    sort: s,
                    body: Box::new(f),
                };
            }
        }
        Sentence::new(self.base.signature().clone(), f)
    }
}

/// The one-point extension axiom as a sentence.
pub fn extension_axiom(a: &FinStructure, b: &FinStructure) -> Result<Sentence> {
    ExtensionAxiom::new(a.clone(), b.clone())?.sentence()
}

/// Independent check of the extension property: every embedded copy of the
/// base extends to a copy of the extended structure. Used as an oracle
/// against the sentence-evaluation path.
pub fn extension_holds_by_search(m: &FinStructure, ax: &ExtensionAxiom) -> Result<bool> {
    let base = &ax.base;
    let mut maps: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    for (s, &k) in base.sizes().iter().enumerate() {
        let mut next = Vec::new();
        for partial in &maps {
            for inj in injections(k, m.sizes()[s]) {
                let mut p = partial.clone();
                p.push(inj);
                next.push(p);
            }
        }
        maps = next;
    }
    for map in maps {
        if !base.embeds_at(m, &map)? {
            continue;
        }
        let mut extended_somewhere = false;
        for b in 0..m.sizes()[ax.new_sort] {
            if map[ax.new_sort].contains(&b) {
                continue;
            }
            let mut map2 = map.clone();
            map2[ax.new_sort].push(b);
            if ax.extended.embeds_at(m, &map2)? {
                extended_somewhere = true;
                break;
            }
        }
        if !extended_somewhere {
            return Ok(false);
        }
    }
    Ok(true)
}

pub(crate) fn injections(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(k: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !cur.contains(&i) {
                cur.push(i);
                rec(k, n, cur, out);
                cur.pop();
            }
        }
    }
    rec(k, n, &mut cur, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Axiom families

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxiomMode {
    /// Universal axioms and extension axioms for all levels up to the bound.
    Full,
    /// Universal axioms capped at n quantifiers; extension axioms still up to
    /// the bound.
    TKn(usize),
}

/// Generated axioms for a class: universal axioms are kept semantically as
/// the level shapes they quantify over; extension axioms as (A, B) pairs.
#[derive(Debug, Clone)]
pub struct AxiomSet {
    pub universal_levels: Vec<Vec<usize>>,
    pub extensions: Vec<ExtensionAxiom>,
}

impl AxiomSet {
    pub fn is_empty(&self) -> bool {
        self.universal_levels.is_empty() && self.extensions.is_empty()
    }
}

pub fn generate_axioms(levels: &Levels, bound: usize, mode: AxiomMode) -> Result<AxiomSet> {
    let sorts = levels.spec().signature().sort_count();
    let universal_cap = match mode {
        AxiomMode::Full => bound,
        AxiomMode::TKn(n) => bound.min(n),
    };
    let mut universal_levels = Vec::new();
    for total in 1..=universal_cap {
        universal_levels.extend(compositions(sorts, total));
    }
    let mut extensions = Vec::new();
    for total in 1..=bound {
        for v in compositions(sorts, total) {
            let table = levels.level(&v)?;
            for b in table.members() {
                for s in 0..sorts {
                    if v[s] == 0 {
                        continue;
                    }
                    let sel: Vec<Vec<usize>> = v
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
                    let base = b.induced(&sel)?;
                    extensions.push(ExtensionAxiom {
                        base,
                        extended: b.clone(),
                        new_sort: s,
                    });
                }
            }
        }
    }
    Ok(AxiomSet {
        universal_levels,
        extensions,
    })
}

/// Semantic universal axiom check: every substructure of the given shape is a
/// class member.
pub fn universal_axiom_holds(levels: &Levels, m: &FinStructure, shape: &[usize]) -> Result<bool> {
    let table = levels.level(shape)?;
    let mut sels: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    for (s, &k) in shape.iter().enumerate() {
        if k > m.sizes()[s] {
            return Ok(true);
        }
        let mut next = Vec::new();
        for partial in &sels {
            for comb in combinations(m.sizes()[s], k) {
                let mut p = partial.clone();
                p.push(comb);
                next.push(p);
            }
        }
        sels = next;
    }
    for sel in sels {
        let sub = m.induced(&sel)?;
        if !table.contains(&sub) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The syntactic form of the universal axiom at a shape: distinct tuples
/// realize some member type. For export and display.
pub fn universal_axiom_sentence(levels: &Levels, shape: &[usize]) -> Result<Sentence> {
    let table = levels.level(shape)?;
    let vars = shape_vars(shape);
    let guard: Vec<Formula> = vars
        .iter()
        .flat_map(|names| {
            let mut v = Vec::new();
            for i in 0..names.len() {
                for j in (i + 1)..names.len() {
                    v.push(Formula::Not(Box::new(Formula::Eq(
                        names[i].clone(),
                        names[j].clone(),
                    ))));
                }
            }
            v
        })
        .collect();
    let disjuncts: Vec<Formula> = table
        .members()
        .iter()
        .map(|a| theta_over(a, &vars))
        .collect();
    let mut f = Formula::Implies(
        Box::new(Formula::And(guard)),
        Box::new(Formula::Or(disjuncts)),
    );
    for (s, names) in vars.iter().enumerate().rev() {
        for name in names.iter().rev() {
            f = Formula::Forall {
                var: name.clone(),
                sort: s,
                body: Box::new(f),
            };
        }
    }
    Sentence::new(levels.spec().signature().clone(), f)
}

pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Named test sentences

/// Sentences used in the equivalence-relation experiments, resolved against
/// the given signature by relation name.
pub fn named_sentence(key: &str, sig: &Arc<Signature>) -> Result<Sentence> {
    match key {
        // any two classes of distinct parametrized equivalence relations intersect
        "feq-intersect" => {
            let text = "(forall (x P) (forall (xp P) (forall (y O) (forall (yp O) \
                        (exists (z O) (implies (not (= x xp)) (and (E x y z) (E xp yp z))))))))";
            Sentence::parse(sig, text)
        }
        // the map from the E_1-class of x to E_2-classes of pairs is surjective
        "cpz-surjective" => {
            let text = "(forall (x V) (forall (y V) (forall (yp V) \
                        (exists (z V) (and (E_1 x z) (E_2 y yp x z))))))";
            Sentence::parse(sig, text)
        }
        other => Err(Error::UnknownSentence(other.to_string())),
    }
}

pub const NAMED_SENTENCES: &[&str] = &["feq-intersect", "cpz-surjective"];

// ---------------------------------------------------------------------------
// S-expression grammar

fn write_sexpr(f: &Formula, sig: &Signature, out: &mut String) {
    match f {
        Formula::Atom { rel, args } => {
            let _ = write!(out, "({}", sig.relation(*rel).name);
            for a in args {
                let _ = write!(out, " {a}");
            }
            out.push(')');
        }
        Formula::Eq(a, b) => {
            let _ = write!(out, "(= {a} {b})");
        }
        Formula::Not(g) => {
            out.push_str("(not ");
            write_sexpr(g, sig, out);
            out.push(')');
        }
        Formula::And(gs) => {
            out.push_str("(and");
            for g in gs {
                out.push(' ');
                write_sexpr(g, sig, out);
            }
            out.push(')');
        }
        Formula::Or(gs) => {
            out.push_str("(or");
            for g in gs {
                out.push(' ');
                write_sexpr(g, sig, out);
            }
            out.push(')');
        }
        Formula::Implies(a, b) => {
            out.push_str("(implies ");
            write_sexpr(a, sig, out);
            out.push(' ');
            write_sexpr(b, sig, out);
            out.push(')');
        }
        Formula::Forall { var, sort, body } => {
            let _ = write!(out, "(forall ({var} {}) ", sig.sort_name(*sort));
            write_sexpr(body, sig, out);
            out.push(')');
        }
        Formula::Exists { var, sort, body } => {
            let _ = write!(out, "(exists ({var} {}) ", sig.sort_name(*sort));
            write_sexpr(body, sig, out);
            out.push(')');
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Word(String),
}

fn tokenize(text: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        match c {
            '(' | ')' => {
                if !word.is_empty() {
                    out.push(Tok::Word(std::mem::take(&mut word)));
                }
                out.push(if c == '(' { Tok::Open } else { Tok::Close });
            }
            c if c.is_whitespace() => {
                if !word.is_empty() {
                    out.push(Tok::Word(std::mem::take(&mut word)));
                }
            }
            c => word.push(c),
        }
    }
    if !word.is_empty() {
        out.push(Tok::Word(word));
    }
    if out.is_empty() {
        return Err(Error::Parse("empty sentence".into()));
    }
    Ok(out)
}

fn expect(tokens: &[Tok], pos: &mut usize, t: Tok) -> Result<()> {
    if tokens.get(*pos) == Some(&t) {
        *pos += 1;
        Ok(())
    } else {
        Err(Error::Parse(format!("expected {:?} at token {}", t, *pos)))
    }
}

fn word(tokens: &[Tok], pos: &mut usize) -> Result<String> {
    match tokens.get(*pos) {
        Some(Tok::Word(w)) => {
            *pos += 1;
            Ok(w.clone())
        }
        other => Err(Error::Parse(format!("expected word, got {other:?}"))),
    }
}

fn parse_formula(tokens: &[Tok], pos: &mut usize, sig: &Arc<Signature>) -> Result<Formula> {
    expect(tokens, pos, Tok::Open)?;
    let head = word(tokens, pos)?;
    let f = match head.as_str() {
        "forall" | "exists" => {
            expect(tokens, pos, Tok::Open)?;
            let var = word(tokens, pos)?;
            let sort_name = word(tokens, pos)?;
            expect(tokens, pos, Tok::Close)?;
            let sort = sig
                .sort_id(&sort_name)
                .ok_or(Error::UnknownSort(sort_name))?;
            let body = Box::new(parse_formula(tokens, pos, sig)?);
            if head == "forall" {
                Formula::Forall { var, sort, body }
            } else {
                Formula::Exists { var, sort, body }
            }
        }
        "and" | "or" => {
            let mut parts = Vec::new();
            while tokens.get(*pos) != Some(&Tok::Close) {
                parts.push(parse_formula(tokens, pos, sig)?);
            }
            if head == "and" {
                Formula::And(parts)
            } else {
                Formula::Or(parts)
            }
        }
        "not" => Formula::Not(Box::new(parse_formula(tokens, pos, sig)?)),
        "implies" => {
            let a = parse_formula(tokens, pos, sig)?;
            let b = parse_formula(tokens, pos, sig)?;
            Formula::Implies(Box::new(a), Box::new(b))
        }
        "=" => {
            let a = word(tokens, pos)?;
            let b = word(tokens, pos)?;
            Formula::Eq(a, b)
        }
        "!=" => {
            let a = word(tokens, pos)?;
            let b = word(tokens, pos)?;
            Formula::Not(Box::new(Formula::Eq(a, b)))
        }
        rel_name => {
            let rel = sig
                .relation_id(rel_name)
                .ok_or_else(|| Error::UnknownRelation(rel_name.to_string()))?;
            let mut args = Vec::new();
            while tokens.get(*pos) != Some(&Tok::Close) {
                args.push(word(tokens, pos)?);
            }
            Formula::Atom { rel, args }
        }
    };
    expect(tokens, pos, Tok::Close)?;
    Ok(f)
}

/// Count distinct variable names bound in a formula.
pub fn distinct_binder_names(f: &Formula) -> usize {
    fn walk(f: &Formula, names: &mut HashSet<String>) {
        match f {
            Formula::Forall { var, body, .. } | Formula::Exists { var, body, .. } => {
                names.insert(var.clone());
                walk(body, names);
            }
            Formula::Not(g) => walk(g, names),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| walk(g, names)),
            Formula::Implies(a, b) => {
                walk(a, names);
                walk(b, names);
            }
            _ => {}
        }
    }
    let mut names = HashSet::new();
    walk(f, &mut names);
    names.len()
}
