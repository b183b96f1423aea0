//! Normalization of sentences into quantifier-shape form.
//!
//! The pipeline: unfold signature predicates into their first-order
//! definitions, split the sentence into a Boolean combination of closed
//! constituents, prenex each constituent, keep the innermost run of
//! first-order quantifiers as elem layers, promote all other first-order
//! quantifiers to singleton-guarded set quantifiers, and group adjacent
//! same-polarity set quantifiers into blocks.  The resulting block list is
//! the quantifier shape; the matrix is quantifier-free and is evaluated
//! against leaf data during membership tests.
//!
//! Depth note: the number of set layers is the dominant cost of every
//! downstream computation, so the normalizer merges adjacent same-polarity
//! quantifiers into one block (one layer of higher arity) rather than
//! nesting them.

use super::ast::{Formula, SetTerm, Sort};
use super::morley;
use crate::error::{EngineError, Result};
use crate::shape::Shape;
use std::collections::HashMap;

/// Polarity of a quantifier block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Exists,
    Forall,
}

impl Polarity {
    fn flip(self) -> Polarity {
        match self {
            Polarity::Exists => Polarity::Forall,
            Polarity::Forall => Polarity::Exists,
        }
    }
}

/// One quantifier block of a typed constituent, outermost first.
#[derive(Debug, Clone)]
pub struct Block {
    pub polarity: Polarity,
    pub vars: Vec<String>,
    /// True for the innermost first-order layers (one variable per block).
    pub is_elem: bool,
}

/// A single-shape constituent: blocks over a quantifier-free matrix.
#[derive(Debug, Clone)]
pub struct TypedSentence {
    pub shape: Shape,
    pub blocks: Vec<Block>,
    pub matrix: Formula,
    /// Leaf parameter index of each quantified variable (outermost = 0).
    pub var_index: HashMap<String, usize>,
}

/// Boolean combination tree over constituent indices.
#[derive(Debug, Clone)]
pub enum BoolTree {
    Leaf(usize),
    Not(Box<BoolTree>),
    And(Box<BoolTree>, Box<BoolTree>),
    Or(Box<BoolTree>, Box<BoolTree>),
}

/// Result of `normalize_to_quantifier_type`.
#[derive(Debug, Clone)]
pub struct NormalizedSentence {
    pub tree: BoolTree,
    pub constituents: Vec<TypedSentence>,
    /// The join of all constituent shapes.
    pub shape: Shape,
}

/// Rewrites a sentence as a Boolean combination of single-shape
/// constituents and returns the joined quantifier shape.
pub fn normalize_to_quantifier_type(f: &Formula) -> Result<NormalizedSentence> {
    normalize_with_elem_cap(f, usize::MAX)
}

/// Like `normalize_to_quantifier_type`, but keeps at most `elem_cap`
/// innermost first-order quantifiers as elem layers in constituents that
/// also carry set quantifiers; the remainder are promoted to
/// singleton-guarded set quantifiers.  Purely first-order constituents are
/// never capped (their decision needs no set-layer machinery).
pub fn normalize_with_elem_cap(f: &Formula, elem_cap: usize) -> Result<NormalizedSentence> {
    if !f.is_sentence() {
        return Err(EngineError::Malformed("normalization requires a sentence".into()));
    }
    let f = miniscope(&unfold_preds(f));
    let mut constituents = Vec::new();
    let tree = split(&f, &mut constituents);
    let mut ctr = 0usize;
    let typed: Vec<TypedSentence> =
        constituents.iter().map(|c| type_constituent(c, &mut ctr, elem_cap)).collect();
    let shape = join_shapes(typed.iter().map(|t| &t.shape));
    Ok(NormalizedSentence { tree, constituents: typed, shape })
}

/// Replaces signature predicates by their first-order definitions, with
/// the defined set variable substituted by the argument term.
pub fn unfold_preds(f: &Formula) -> Formula {
    match f {
        Formula::Pred(name, s) => {
            let entry = morley::signature()
                .iter()
                .find(|e| e.name == name)
                .unwrap_or_else(|| panic!("unknown predicate {name}"));
            // The defining formula binds only element variables, and set
            // terms contain only set variables, so no capture can occur.
            let template = (entry.define)("__hole");
            subst_set(&template, "__hole", s)
        }
        Formula::Not(g) => Formula::not(unfold_preds(g)),
        Formula::And(a, b) => Formula::and(unfold_preds(a), unfold_preds(b)),
        Formula::Or(a, b) => Formula::or(unfold_preds(a), unfold_preds(b)),
        Formula::Implies(a, b) => Formula::implies(unfold_preds(a), unfold_preds(b)),
        Formula::Iff(a, b) => Formula::iff(unfold_preds(a), unfold_preds(b)),
        Formula::ExistsElem(v, g) => Formula::ExistsElem(v.clone(), Box::new(unfold_preds(g))),
        Formula::ForallElem(v, g) => Formula::ForallElem(v.clone(), Box::new(unfold_preds(g))),
        Formula::ExistsSet(v, g) => Formula::ExistsSet(v.clone(), Box::new(unfold_preds(g))),
        Formula::ForallSet(v, g) => Formula::ForallSet(v.clone(), Box::new(unfold_preds(g))),
        other => other.clone(),
    }
}

fn subst_set(f: &Formula, var: &str, term: &SetTerm) -> Formula {
    fn in_term(s: &SetTerm, var: &str, term: &SetTerm) -> SetTerm {
        match s {
            SetTerm::Var(v) if v == var => term.clone(),
            SetTerm::Var(v) => SetTerm::Var(v.clone()),
            SetTerm::Top => SetTerm::Top,
            SetTerm::Union(a, b) => SetTerm::Union(
                Box::new(in_term(a, var, term)),
                Box::new(in_term(b, var, term)),
            ),
            SetTerm::Inter(a, b) => SetTerm::Inter(
                Box::new(in_term(a, var, term)),
                Box::new(in_term(b, var, term)),
            ),
            SetTerm::Diff(a, b) => SetTerm::Diff(
                Box::new(in_term(a, var, term)),
                Box::new(in_term(b, var, term)),
            ),
        }
    }
    let t = |s: &SetTerm| in_term(s, var, term);
    match f {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Le(x, y) => Formula::Le(x.clone(), y.clone()),
        Formula::In(x, s) => Formula::In(x.clone(), t(s)),
        Formula::Sub(s, u) => Formula::Sub(t(s), t(u)),
        Formula::Eq(s, u) => Formula::Eq(t(s), t(u)),
        Formula::IsAtom(s) => Formula::IsAtom(t(s)),
        Formula::Meager(s) => Formula::Meager(t(s)),
        Formula::Pred(p, s) => Formula::Pred(p.clone(), t(s)),
        Formula::Not(g) => Formula::not(subst_set(g, var, term)),
        Formula::And(a, b) => Formula::and(subst_set(a, var, term), subst_set(b, var, term)),
        Formula::Or(a, b) => Formula::or(subst_set(a, var, term), subst_set(b, var, term)),
        Formula::Implies(a, b) => Formula::implies(subst_set(a, var, term), subst_set(b, var, term)),
        Formula::Iff(a, b) => Formula::iff(subst_set(a, var, term), subst_set(b, var, term)),
        Formula::ExistsElem(v, g) => {
            Formula::ExistsElem(v.clone(), Box::new(subst_set(g, var, term)))
        }
        Formula::ForallElem(v, g) => {
            Formula::ForallElem(v.clone(), Box::new(subst_set(g, var, term)))
        }
        Formula::ExistsSet(v, g) => {
            if v == var {
                f.clone()
            } else {
                Formula::ExistsSet(v.clone(), Box::new(subst_set(g, var, term)))
            }
        }
        Formula::ForallSet(v, g) => {
            if v == var {
                f.clone()
            } else {
                Formula::ForallSet(v.clone(), Box::new(subst_set(g, var, term)))
            }
        }
    }
}

fn free_in(f: &Formula, v: &str, sort: Sort) -> bool {
    f.free_vars().iter().any(|(n, s)| n == v && *s == sort)
}

fn wrap_quant(pol: Polarity, sort: Sort, v: &str, g: Formula) -> Formula {
    match (sort, pol) {
        (Sort::Elem, Polarity::Exists) => Formula::ExistsElem(v.to_string(), Box::new(g)),
        (Sort::Elem, Polarity::Forall) => Formula::ForallElem(v.to_string(), Box::new(g)),
        (Sort::Set, Polarity::Exists) => Formula::ExistsSet(v.to_string(), Box::new(g)),
        (Sort::Set, Polarity::Forall) => Formula::ForallSet(v.to_string(), Box::new(g)),
    }
}

/// Pushes quantifiers inward: universals distribute over conjunctions and
/// existentials over disjunctions; a quantifier whose variable is absent
/// from one side of a connective moves to the other side; vacuous
/// quantifiers are dropped.  Sound on nonempty domains (the standing
/// assumption of prenexing; the empty order is decided separately).
/// Smaller scopes let independent prefixes interleave instead of nesting,
/// which keeps quantifier shapes shallow.
pub fn miniscope(f: &Formula) -> Formula {
    match f {
        Formula::Not(g) => Formula::not(miniscope(g)),
        Formula::And(a, b) => Formula::and(miniscope(a), miniscope(b)),
        Formula::Or(a, b) => Formula::or(miniscope(a), miniscope(b)),
        Formula::Implies(a, b) => Formula::implies(miniscope(a), miniscope(b)),
        Formula::Iff(a, b) => Formula::iff(miniscope(a), miniscope(b)),
        Formula::ExistsElem(v, g) => push_quant(Polarity::Exists, Sort::Elem, v, miniscope(g)),
        Formula::ForallElem(v, g) => push_quant(Polarity::Forall, Sort::Elem, v, miniscope(g)),
        Formula::ExistsSet(v, g) => push_quant(Polarity::Exists, Sort::Set, v, miniscope(g)),
        Formula::ForallSet(v, g) => push_quant(Polarity::Forall, Sort::Set, v, miniscope(g)),
        other => other.clone(),
    }
}

fn push_quant(pol: Polarity, sort: Sort, v: &str, g: Formula) -> Formula {
    if !free_in(&g, v, sort) {
        return g;
    }
    match (g, pol) {
        (Formula::And(a, b), Polarity::Forall) => {
            Formula::and(push_quant(pol, sort, v, *a), push_quant(pol, sort, v, *b))
        }
        (Formula::Or(a, b), Polarity::Exists) => {
            Formula::or(push_quant(pol, sort, v, *a), push_quant(pol, sort, v, *b))
        }
        (Formula::And(a, b), Polarity::Exists) => {
            if !free_in(&a, v, sort) {
                Formula::and(*a, push_quant(pol, sort, v, *b))
            } else if !free_in(&b, v, sort) {
                Formula::and(push_quant(pol, sort, v, *a), *b)
            } else {
                wrap_quant(pol, sort, v, Formula::and(*a, *b))
            }
        }
        (Formula::Or(a, b), Polarity::Forall) => {
            if !free_in(&a, v, sort) {
                Formula::or(*a, push_quant(pol, sort, v, *b))
            } else if !free_in(&b, v, sort) {
                Formula::or(push_quant(pol, sort, v, *a), *b)
            } else {
                wrap_quant(pol, sort, v, Formula::or(*a, *b))
            }
        }
        (Formula::Implies(a, b), pol) => {
            if !free_in(&a, v, sort) {
                Formula::implies(*a, push_quant(pol, sort, v, *b))
            } else if !free_in(&b, v, sort) {
                Formula::implies(push_quant(pol.flip(), sort, v, *a), *b)
            } else {
                wrap_quant(pol, sort, v, Formula::implies(*a, *b))
            }
        }
        (Formula::Not(a), pol) => Formula::not(push_quant(pol.flip(), sort, v, *a)),
        (g, pol) => wrap_quant(pol, sort, v, g),
    }
}

/// Splits along Boolean connectives (subformulas of a closed Boolean node
/// are themselves closed); quantified or atomic nodes become constituents.
fn split(f: &Formula, out: &mut Vec<Formula>) -> BoolTree {
    match f {
        Formula::Not(g) => BoolTree::Not(Box::new(split(g, out))),
        Formula::And(a, b) => BoolTree::And(Box::new(split(a, out)), Box::new(split(b, out))),
        Formula::Or(a, b) => BoolTree::Or(Box::new(split(a, out)), Box::new(split(b, out))),
        Formula::Implies(a, b) => BoolTree::Or(
            Box::new(BoolTree::Not(Box::new(split(a, out)))),
            Box::new(split(b, out)),
        ),
        Formula::Iff(a, b) => {
            let la = split(a, out);
            let lb = split(b, out);
            // (a -> b) & (b -> a) over already-registered leaves.
            BoolTree::And(
                Box::new(BoolTree::Or(
                    Box::new(BoolTree::Not(Box::new(la.clone()))),
                    Box::new(lb.clone()),
                )),
                Box::new(BoolTree::Or(Box::new(BoolTree::Not(Box::new(lb))), Box::new(la))),
            )
        }
        other => {
            out.push(other.clone());
            BoolTree::Leaf(out.len() - 1)
        }
    }
}

fn type_constituent(f: &Formula, ctr: &mut usize, elem_cap: usize) -> TypedSentence {
    let (mut prefix, mut matrix) = prenex(f, Polarity::Exists, ctr);
    // Same-polarity quantifiers commute: within each maximal same-polarity
    // segment, move set quantifiers outward and element quantifiers inward
    // so the innermost first-order run is as long as possible.
    let mut seg = 0;
    while seg < prefix.len() {
        let pol = prefix[seg].0;
        let mut end = seg;
        while end < prefix.len() && prefix[end].0 == pol {
            end += 1;
        }
        prefix[seg..end].sort_by_key(|e| e.1 == Sort::Elem);
        seg = end;
    }
    // Keep the maximal innermost run of first-order quantifiers as elem
    // layers; promote the rest to singleton-guarded set quantifiers.
    let mut elem_suffix = 0;
    while elem_suffix < prefix.len()
        && prefix[prefix.len() - 1 - elem_suffix].1 == Sort::Elem
    {
        elem_suffix += 1;
    }
    if elem_suffix < prefix.len() {
        // The constituent carries set layers; bound the first-order block.
        elem_suffix = elem_suffix.min(elem_cap);
    }
    let cut = prefix.len() - elem_suffix;
    let mut entries: Vec<(Polarity, String, bool)> = Vec::new();
    for (i, (pol, sort, var)) in prefix.iter().enumerate() {
        if i < cut && *sort == Sort::Elem {
            // Promote: the variable now denotes a singleton set.
            let guard = Formula::IsAtom(SetTerm::var(var));
            matrix = match pol {
                Polarity::Exists => Formula::and(guard, matrix),
                Polarity::Forall => Formula::implies(guard, matrix),
            };
            entries.push((*pol, var.clone(), false));
        } else {
            entries.push((*pol, var.clone(), i >= cut));
        }
    }
    // Group adjacent same-polarity set quantifiers into blocks; elem layers
    // stay singleton blocks.
    let mut blocks: Vec<Block> = Vec::new();
    for (pol, var, is_elem) in entries {
        match blocks.last_mut() {
            Some(b) if !is_elem && !b.is_elem && b.polarity == pol => b.vars.push(var),
            _ => blocks.push(Block { polarity: pol, vars: vec![var], is_elem }),
        }
    }
    let mut var_index = HashMap::new();
    let mut idx = 0usize;
    for b in &blocks {
        for v in &b.vars {
            var_index.insert(v.clone(), idx);
            idx += 1;
        }
    }
    let elem = blocks.iter().filter(|b| b.is_elem).count();
    let mut sets: Vec<usize> =
        blocks.iter().filter(|b| !b.is_elem).map(|b| b.vars.len()).collect();
    sets.reverse(); // innermost first
    TypedSentence { shape: Shape::new(elem, sets), blocks, matrix, var_index }
}

/// Prenexes a closed formula: returns the quantifier prefix (outermost
/// first, polarity relative to the whole constituent) and the matrix.
/// Binders are renamed apart with fresh names.
fn prenex(
    f: &Formula,
    _ambient: Polarity,
    ctr: &mut usize,
) -> (Vec<(Polarity, Sort, String)>, Formula) {
    match f {
        Formula::Not(g) => {
            let (mut p, m) = prenex(g, _ambient, ctr);
            for e in &mut p {
                e.0 = e.0.flip();
            }
            (p, Formula::not(m))
        }
        Formula::And(a, b) => {
            let (pa, ma) = prenex(a, _ambient, ctr);
            let (pb, mb) = prenex(b, _ambient, ctr);
            (merge_prefixes(pa, pb), Formula::and(ma, mb))
        }
        Formula::Or(a, b) => {
            let (pa, ma) = prenex(a, _ambient, ctr);
            let (pb, mb) = prenex(b, _ambient, ctr);
            (merge_prefixes(pa, pb), Formula::or(ma, mb))
        }
        Formula::Implies(a, b) => {
            prenex(&Formula::or(Formula::not((**a).clone()), (**b).clone()), _ambient, ctr)
        }
        Formula::Iff(a, b) => {
            let fwd = Formula::or(Formula::not((**a).clone()), (**b).clone());
            let bwd = Formula::or(Formula::not((**b).clone()), (**a).clone());
            prenex(&Formula::and(fwd, bwd), _ambient, ctr)
        }
        Formula::ExistsElem(v, g) | Formula::ForallElem(v, g) => {
            let pol = if matches!(f, Formula::ExistsElem(..)) {
                Polarity::Exists
            } else {
                Polarity::Forall
            };
            let fresh = format!("q{}", *ctr);
            *ctr += 1;
            let body = g.rename_elem(v, &fresh);
            let (mut p, m) = prenex(&body, _ambient, ctr);
            p.insert(0, (pol, Sort::Elem, fresh));
            (p, m)
        }
        Formula::ExistsSet(v, g) | Formula::ForallSet(v, g) => {
            let pol = if matches!(f, Formula::ExistsSet(..)) {
                Polarity::Exists
            } else {
                Polarity::Forall
            };
            let fresh = format!("Q{}", *ctr);
            *ctr += 1;
            let body = g.rename_set(v, &fresh);
            let (mut p, m) = prenex(&body, _ambient, ctr);
            p.insert(0, (pol, Sort::Set, fresh));
            (p, m)
        }
        atom => (Vec::new(), atom.clone()),
    }
}

/// Interleaves two quantifier prefixes from disjoint Boolean branches so
/// that the number of polarity alternations is minimal.  The branches bind
/// disjoint variables and each matrix mentions only its own, so the two
/// prefixes commute freely with each other and any interleaving that keeps
/// each prefix's internal order is sound (on nonempty domains, which is
/// all prenexing assumes anyway).
fn merge_prefixes(
    a: Vec<(Polarity, Sort, String)>,
    b: Vec<(Polarity, Sort, String)>,
) -> Vec<(Polarity, Sort, String)> {
    fn runs(v: Vec<(Polarity, Sort, String)>) -> Vec<(Polarity, Vec<(Polarity, Sort, String)>)> {
        let mut out: Vec<(Polarity, Vec<(Polarity, Sort, String)>)> = Vec::new();
        for e in v {
            match out.last_mut() {
                Some((p, run)) if *p == e.0 => run.push(e),
                _ => out.push((e.0, vec![e])),
            }
        }
        out
    }
    let ra = runs(a);
    let rb = runs(b);
    // Cost of the cheapest interleaving of the remaining runs, given the
    // polarity of the last emitted group.
    fn cost(
        ra: &[(Polarity, Vec<(Polarity, Sort, String)>)],
        rb: &[(Polarity, Vec<(Polarity, Sort, String)>)],
        i: usize,
        j: usize,
        last: Option<Polarity>,
        memo: &mut HashMap<(usize, usize, Option<bool>), usize>,
    ) -> usize {
        if i == ra.len() && j == rb.len() {
            return 0;
        }
        let key = (i, j, last.map(|p| p == Polarity::Exists));
        if let Some(&c) = memo.get(&key) {
            return c;
        }
        let mut best = usize::MAX;
        if i < ra.len() {
            let step = if last == Some(ra[i].0) { 0 } else { 1 };
            best = best.min(step + cost(ra, rb, i + 1, j, Some(ra[i].0), memo));
        }
        if j < rb.len() {
            let step = if last == Some(rb[j].0) { 0 } else { 1 };
            best = best.min(step + cost(ra, rb, i, j + 1, Some(rb[j].0), memo));
        }
        memo.insert(key, best);
        best
    }
    let mut memo = HashMap::new();
    let (mut i, mut j) = (0, 0);
    let mut last: Option<Polarity> = None;
    let mut out = Vec::new();
    while i < ra.len() || j < rb.len() {
        let take_a = if i < ra.len() {
            let step = if last == Some(ra[i].0) { 0 } else { 1 };
            Some(step + cost(&ra, &rb, i + 1, j, Some(ra[i].0), &mut memo))
        } else {
            None
        };
        let take_b = if j < rb.len() {
            let step = if last == Some(rb[j].0) { 0 } else { 1 };
            Some(step + cost(&ra, &rb, i, j + 1, Some(rb[j].0), &mut memo))
        } else {
            None
        };
        if take_a.is_some() && (take_b.is_none() || take_a <= take_b) {
            last = Some(ra[i].0);
            out.extend(ra[i].1.iter().cloned());
            i += 1;
        } else {
            last = Some(rb[j].0);
            out.extend(rb[j].1.iter().cloned());
            j += 1;
        }
    }
    out
}

/// The least shape above all given shapes (elementwise, set layers aligned
/// from the inside).
pub fn join_shapes<'a>(shapes: impl Iterator<Item = &'a Shape>) -> Shape {
    let mut elem = 0usize;
    let mut sets: Vec<usize> = Vec::new();
    for s in shapes {
        elem = elem.max(s.elem);
        for (i, &k) in s.sets.iter().enumerate() {
            if i < sets.len() {
                sets[i] = sets[i].max(k);
            } else {
                sets.push(k);
            }
        }
    }
    Shape::new(elem, sets)
}

/// Rewrites atoms so that set terms appear in canonical disjunctive normal
/// form, applying Boolean-algebra laws: `sub` distributes over unions on
/// the left and intersections on the right, `=` splits into two `sub`s,
/// and trivially true/false atoms collapse.  Truth over every
/// Boolean-algebra structure is preserved.
pub fn reduce_atomic(f: &Formula) -> Formula {
    match f {
        Formula::Sub(s, t) => reduce_sub(s, t),
        Formula::Eq(s, t) => {
            Formula::and(reduce_sub(s, t), reduce_sub(t, s))
        }
        Formula::IsAtom(s) => {
            let mut vars = Vec::new();
            s.free_vars(&mut vars);
            vars.sort();
            match canonical_dnf(s, &vars) {
                None => Formula::False, // the term is identically empty
                Some(t) => Formula::IsAtom(t),
            }
        }
        Formula::Meager(s) => {
            let mut vars = Vec::new();
            s.free_vars(&mut vars);
            vars.sort();
            match canonical_dnf(s, &vars) {
                None => Formula::True, // the empty set is meager
                Some(t) => Formula::Meager(t),
            }
        }
        Formula::In(x, s) => {
            let mut vars = Vec::new();
            s.free_vars(&mut vars);
            vars.sort();
            match canonical_dnf(s, &vars) {
                None => Formula::False,
                Some(SetTerm::Top) => Formula::True,
                Some(t) => Formula::In(x.clone(), t),
            }
        }
        Formula::Pred(p, s) => {
            let mut vars = Vec::new();
            s.free_vars(&mut vars);
            vars.sort();
            match canonical_dnf(s, &vars) {
                None => Formula::Pred(p.clone(), SetTerm::Diff(Box::new(SetTerm::Top), Box::new(SetTerm::Top))),
                Some(t) => Formula::Pred(p.clone(), t),
            }
        }
        Formula::Not(g) => Formula::not(reduce_atomic(g)),
        Formula::And(a, b) => Formula::and(reduce_atomic(a), reduce_atomic(b)),
        Formula::Or(a, b) => Formula::or(reduce_atomic(a), reduce_atomic(b)),
        Formula::Implies(a, b) => Formula::implies(reduce_atomic(a), reduce_atomic(b)),
        Formula::Iff(a, b) => Formula::iff(reduce_atomic(a), reduce_atomic(b)),
        Formula::ExistsElem(v, g) => Formula::ExistsElem(v.clone(), Box::new(reduce_atomic(g))),
        Formula::ForallElem(v, g) => Formula::ForallElem(v.clone(), Box::new(reduce_atomic(g))),
        Formula::ExistsSet(v, g) => Formula::ExistsSet(v.clone(), Box::new(reduce_atomic(g))),
        Formula::ForallSet(v, g) => Formula::ForallSet(v.clone(), Box::new(reduce_atomic(g))),
        other => other.clone(),
    }
}

fn reduce_sub(s: &SetTerm, t: &SetTerm) -> Formula {
    // Distribute first: sub over union on the left, intersection on the right.
    if let SetTerm::Union(a, b) = s {
        return Formula::and(reduce_sub(a, t), reduce_sub(b, t));
    }
    if let SetTerm::Inter(a, b) = t {
        return Formula::and(reduce_sub(s, a), reduce_sub(s, b));
    }
    let mut vars = Vec::new();
    s.free_vars(&mut vars);
    t.free_vars(&mut vars);
    vars.sort();
    let diff = SetTerm::Diff(Box::new(s.clone()), Box::new(t.clone()));
    match canonical_dnf(&diff, &vars) {
        None => Formula::True, // s \ t is identically empty
        Some(_) => match (canonical_dnf(s, &vars), canonical_dnf(t, &vars)) {
            (None, _) => Formula::True,
            (Some(sc), Some(tc)) => Formula::Sub(sc, tc),
            (Some(sc), None) => {
                // t is identically empty: s sub t iff s is empty.
                Formula::Sub(sc, SetTerm::Diff(Box::new(SetTerm::Top), Box::new(SetTerm::Top)))
            }
        },
    }
}

/// Canonical DNF over the sorted variable list: a union of cell terms,
/// cells in increasing mask order.  Returns `None` when the term is
/// identically empty, `Some(Top)` when it is everything.
fn canonical_dnf(s: &SetTerm, vars: &[String]) -> Option<SetTerm> {
    let n = vars.len();
    let mut cells = Vec::new();
    for mask in 0..1usize << n {
        let holds = s.eval(&|v: &str| {
            let i = vars.iter().position(|w| w == v).unwrap();
            mask & (1 << i) != 0
        });
        if holds {
            cells.push(mask);
        }
    }
    if cells.is_empty() {
        return None;
    }
    if cells.len() == 1 << n {
        return Some(SetTerm::Top);
    }
    let cell_term = |mask: usize| -> SetTerm {
        let mut pos: Option<SetTerm> = None;
        for (i, v) in vars.iter().enumerate() {
            if mask & (1 << i) != 0 {
                let t = SetTerm::var(v);
                pos = Some(match pos {
                    None => t,
                    Some(p) => SetTerm::Inter(Box::new(p), Box::new(t)),
                });
            }
        }
        let base = pos.unwrap_or(SetTerm::Top);
        let mut neg: Option<SetTerm> = None;
        for (i, v) in vars.iter().enumerate() {
            if mask & (1 << i) == 0 {
                let t = SetTerm::var(v);
                neg = Some(match neg {
                    None => t,
                    Some(p) => SetTerm::Union(Box::new(p), Box::new(t)),
                });
            }
        }
        match neg {
            None => base,
            Some(ng) => SetTerm::Diff(Box::new(base), Box::new(ng)),
        }
    };
    let mut out: Option<SetTerm> = None;
    for mask in cells {
        let t = cell_term(mask);
        out = Some(match out {
            None => t,
            Some(p) => SetTerm::Union(Box::new(p), Box::new(t)),
        });
    }
    out
}

/// Replaces maximal first-order-only subformulas that match a signature
/// entry (up to renaming of bound variables) by the corresponding
/// predicate atom.
pub fn morley_expand(f: &Formula) -> Formula {
    if let Some(g) = try_match(f) {
        return g;
    }
    match f {
        Formula::Not(g) => Formula::not(morley_expand(g)),
        Formula::And(a, b) => Formula::and(morley_expand(a), morley_expand(b)),
        Formula::Or(a, b) => Formula::or(morley_expand(a), morley_expand(b)),
        Formula::Implies(a, b) => Formula::implies(morley_expand(a), morley_expand(b)),
        Formula::Iff(a, b) => Formula::iff(morley_expand(a), morley_expand(b)),
        Formula::ExistsElem(v, g) => Formula::ExistsElem(v.clone(), Box::new(morley_expand(g))),
        Formula::ForallElem(v, g) => Formula::ForallElem(v.clone(), Box::new(morley_expand(g))),
        Formula::ExistsSet(v, g) => Formula::ExistsSet(v.clone(), Box::new(morley_expand(g))),
        Formula::ForallSet(v, g) => Formula::ForallSet(v.clone(), Box::new(morley_expand(g))),
        other => other.clone(),
    }
}

fn try_match(f: &Formula) -> Option<Formula> {
    let frees = f.free_vars();
    if frees.len() != 1 || frees[0].1 != Sort::Set {
        return None;
    }
    if has_set_quantifier(f) || !has_quantifier(f) {
        return None;
    }
    let x = &frees[0].0;
    let canon = alpha_normal(f);
    for e in morley::signature() {
        if alpha_normal(&(e.define)(x)) == canon {
            return Some(Formula::Pred(e.name.to_string(), SetTerm::var(x)));
        }
    }
    None
}

fn has_set_quantifier(f: &Formula) -> bool {
    match f {
        Formula::ExistsSet(..) | Formula::ForallSet(..) => true,
        Formula::Not(g) => has_set_quantifier(g),
        Formula::And(a, b)
        | Formula::Or(a, b)
        | Formula::Implies(a, b)
        | Formula::Iff(a, b) => has_set_quantifier(a) || has_set_quantifier(b),
        Formula::ExistsElem(_, g) | Formula::ForallElem(_, g) => has_set_quantifier(g),
        _ => false,
    }
}

fn has_quantifier(f: &Formula) -> bool {
    match f {
        Formula::ExistsSet(..)
        | Formula::ForallSet(..)
        | Formula::ExistsElem(..)
        | Formula::ForallElem(..) => true,
        Formula::Not(g) => has_quantifier(g),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            has_quantifier(a) || has_quantifier(b)
        }
        _ => false,
    }
}

/// Renames bound variables to a canonical numbering in traversal order.
fn alpha_normal(f: &Formula) -> Formula {
    fn go(f: &Formula, ctr: &mut usize) -> Formula {
        match f {
            Formula::Not(g) => Formula::not(go(g, ctr)),
            Formula::And(a, b) => Formula::and(go(a, ctr), go(b, ctr)),
            Formula::Or(a, b) => Formula::or(go(a, ctr), go(b, ctr)),
            Formula::Implies(a, b) => Formula::implies(go(a, ctr), go(b, ctr)),
            Formula::Iff(a, b) => Formula::iff(go(a, ctr), go(b, ctr)),
            Formula::ExistsElem(v, g) => {
                let fresh = format!("@{}", *ctr);
                *ctr += 1;
                Formula::ExistsElem(fresh.clone(), Box::new(go(&g.rename_elem(v, &fresh), ctr)))
            }
            Formula::ForallElem(v, g) => {
                let fresh = format!("@{}", *ctr);
                *ctr += 1;
                Formula::ForallElem(fresh.clone(), Box::new(go(&g.rename_elem(v, &fresh), ctr)))
            }
            Formula::ExistsSet(v, g) => {
                let fresh = format!("@{}", *ctr);
                *ctr += 1;
                Formula::ExistsSet(fresh.clone(), Box::new(go(&g.rename_set(v, &fresh), ctr)))
            }
            Formula::ForallSet(v, g) => {
                let fresh = format!("@{}", *ctr);
                *ctr += 1;
                Formula::ForallSet(fresh.clone(), Box::new(go(&g.rename_set(v, &fresh), ctr)))
            }
            other => other.clone(),
        }
    }
    go(f, &mut 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;

    #[test]
    fn shapes_of_simple_sentences() {
        let f = parse_formula("ES X. X sub X").unwrap();
        let n = normalize_to_quantifier_type(&f).unwrap();
        assert_eq!(n.shape, Shape::pure(vec![1]));

        let f = parse_formula("ES X. X sub X & ES Y. Y sub Y").unwrap();
        // Quantifier extends right, so this parses as ES X.(... & ES Y ...),
        // but X does not occur in the second conjunct: the scopes separate
        // into two independent constituents.
        let n = normalize_to_quantifier_type(&f).unwrap();
        assert_eq!(n.constituents.len(), 2);
        assert_eq!(n.shape, Shape::pure(vec![1]));

        let f = parse_formula("ES X. ES Y. (X sub Y & Y sub X)").unwrap();
        // Adjacent existentials over a shared matrix merge into one block.
        let n = normalize_to_quantifier_type(&f).unwrap();
        assert_eq!(n.shape, Shape::pure(vec![2]));

        let f = parse_formula("(ES X. X sub X) & (ES Y. Y sub Y)").unwrap();
        let n = normalize_to_quantifier_type(&f).unwrap();
        assert_eq!(n.constituents.len(), 2);
        assert_eq!(n.shape, Shape::pure(vec![1]));
    }

    #[test]
    fn innermost_elem_layers_are_kept() {
        let f = parse_formula("ES X. EX x. x in X").unwrap();
        let n = normalize_to_quantifier_type(&f).unwrap();
        assert_eq!(n.shape, Shape::new(1, vec![1]));
    }

    #[test]
    fn non_innermost_elem_is_promoted() {
        // Same-polarity quantifiers commute, so x slides inside X and
        // stays an elem layer.
        let f = parse_formula("EX x. ES X. x in X").unwrap();
        let n = normalize_to_quantifier_type(&f).unwrap();
        assert_eq!(n.shape, Shape::new(1, vec![1]));

        // Under an opposite-polarity set quantifier the element variable
        // cannot slide inward and is promoted to a singleton set.
        let f = parse_formula("EX x. AS X. (x in X | !(x in X))").unwrap();
        let n = normalize_to_quantifier_type(&f).unwrap();
        assert_eq!(n.shape, Shape::pure(vec![1, 1]));
        let c = &n.constituents[0];
        assert!(matches!(c.matrix, Formula::And(_, _)));
    }

    #[test]
    fn alternation_builds_two_blocks() {
        let f = parse_formula("ES X. AS Y. X sub Y").unwrap();
        let n = normalize_to_quantifier_type(&f).unwrap();
        assert_eq!(n.shape, Shape::pure(vec![1, 1]));
        let c = &n.constituents[0];
        assert_eq!(c.blocks.len(), 2);
        assert_eq!(c.blocks[0].polarity, Polarity::Exists);
        assert_eq!(c.blocks[1].polarity, Polarity::Forall);
    }

    #[test]
    fn quantifier_free_sentence_is_leaf_shaped() {
        let f = parse_formula("Top sub Top").unwrap();
        let n = normalize_to_quantifier_type(&f).unwrap();
        assert_eq!(n.shape, Shape::leaf());
    }

    #[test]
    fn reduce_atomic_examples() {
        // union on the left of sub splits into a conjunction
        let f = parse_formula("ES X. ES Y. ES Z. X + Y sub Z").unwrap();
        let r = reduce_atomic(&f);
        let expect_inner = |f: &Formula| match f {
            Formula::And(a, b) => {
                matches!(**a, Formula::Sub(_, _)) && matches!(**b, Formula::Sub(_, _))
            }
            _ => false,
        };
        fn strip<'a>(f: &'a Formula) -> &'a Formula {
            match f {
                Formula::ExistsSet(_, g) => strip(g),
                other => other,
            }
        }
        assert!(expect_inner(strip(&r)), "{r}");

        // X sub X is trivially true
        let f = parse_formula("ES X. X sub X").unwrap();
        assert!(matches!(strip(&reduce_atomic(&f)), Formula::True));

        // atom(X - X) is trivially false
        let f = parse_formula("ES X. atom(X - X)").unwrap();
        assert!(matches!(strip(&reduce_atomic(&f)), Formula::False));
    }

    #[test]
    fn morley_expand_recognizes_dense() {
        let dense = (crate::syntax::morley::signature()
            .iter()
            .find(|e| e.name == "dense")
            .unwrap()
            .define)("X");
        let wrapped = Formula::exists_set("X", dense);
        let expanded = morley_expand(&wrapped);
        match expanded {
            Formula::ExistsSet(_, body) => {
                assert_eq!(*body, Formula::Pred("dense".into(), SetTerm::var("X")));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn morley_expand_fixes_quantifier_free_input() {
        let f = parse_formula("ES X. X sub X").unwrap();
        assert_eq!(morley_expand(&f), f);
    }
}
