//! Sentence decision: normalize, fetch the structure's theory at the
//! joined shape, and evaluate membership predicates.
//!
//! A typed constituent with blocks `B_1 ... B_r` (outermost first) is
//! decided against a theory value by structural recursion: an existential
//! block holds iff some child satisfies the rest, a universal block iff
//! all children do (complement-of-membership at the same level, so
//! universal quantifiers cost no extra depth), and the quantifier-free
//! matrix is evaluated directly on the leaf facts.

use crate::compose::{finite_order_table, theory_of_n_z, Variant};
use crate::error::{EngineError, Result};
use crate::leaf::LeafData;
use crate::shape::Shape;
use crate::syntax::ast::{Formula, SetTerm};
use crate::syntax::normalize::{
    normalize_with_elem_cap, unfold_preds, BoolTree, Polarity, TypedSentence,
};
use crate::value::{children, is_leaf, leaf, TypeId};
use std::collections::{BTreeMap, HashMap};
use std::sync::{LazyLock, Mutex};

/// Target structure of a decision query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    R,
    N,
    Ndual,
    Z,
    Finite(usize),
}

impl Structure {
    pub fn parse(text: &str) -> Result<Structure> {
        match text {
            "R" => Ok(Structure::R),
            "N" => Ok(Structure::N),
            "Ndual" => Ok(Structure::Ndual),
            "Z" => Ok(Structure::Z),
            other => match other.strip_prefix("finite:").and_then(|n| n.parse().ok()) {
                Some(n) => Ok(Structure::Finite(n)),
                None => Err(EngineError::Malformed(format!("unknown structure `{other}`"))),
            },
        }
    }
}

/// Default cap on the number of set-quantifier layers.
pub const DEFAULT_MAX_SET_DEPTH: usize = 2;

/// Summary information about a decision, for tracing.
#[derive(Debug, Clone)]
pub struct DecisionInfo {
    pub shape: Shape,
    pub constituents: usize,
}

impl std::fmt::Display for Structure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Structure::R => write!(f, "R"),
            Structure::N => write!(f, "N"),
            Structure::Ndual => write!(f, "Ndual"),
            Structure::Z => write!(f, "Z"),
            Structure::Finite(n) => write!(f, "finite:{n}"),
        }
    }
}

fn theory_registry() -> &'static Mutex<BTreeMap<(String, Shape), TypeId>> {
    static M: LazyLock<Mutex<BTreeMap<(String, Shape), TypeId>>> =
        LazyLock::new(|| Mutex::new(BTreeMap::new()));
    &M
}

/// Pre-seeds the theory of a structure at a shape with an externally
/// stored value; `theory_of` returns it instead of recomputing.
pub fn seed_theory(structure: Structure, shape: Shape, v: TypeId) {
    theory_registry().lock().unwrap().insert((structure.to_string(), shape), v);
}

/// All theories computed (or seeded) so far, in canonical order.
pub fn computed_theories() -> Vec<(String, Shape, TypeId)> {
    theory_registry()
        .lock()
        .unwrap()
        .iter()
        .map(|((s, sh), &v)| (s.clone(), sh.clone(), v))
        .collect()
}

static THEORY_HITS: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);

/// Number of `theory_of` calls answered from the registry so far.
pub fn theory_hit_count() -> u64 {
    THEORY_HITS.load(std::sync::atomic::Ordering::Relaxed)
}

/// The theory of a supported structure at a shape.
pub fn theory_of(structure: Structure, shape: &Shape) -> Result<TypeId> {
    let key = (structure.to_string(), shape.clone());
    if let Some(&v) = theory_registry().lock().unwrap().get(&key) {
        THEORY_HITS.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        return Ok(v);
    }
    let v = theory_of_uncached(structure, shape)?;
    theory_registry().lock().unwrap().insert(key, v);
    Ok(v)
}

fn theory_of_uncached(structure: Structure, shape: &Shape) -> Result<TypeId> {
    match structure {
        Structure::Finite(n) if n <= 64 => {
            // Directly fold the points; cheaper than hunting for the
            // pigeonhole period at deep shapes.
            let point = crate::value::point_value(shape, 0, 0);
            let mut acc = crate::value::empty_value(shape, 0);
            for _ in 0..n {
                acc = crate::compose::sum_binary(acc, point, shape, 0);
            }
            Ok(acc)
        }
        Structure::Finite(n) => Ok(finite_order_table(shape, 0).lookup(n)),
        Structure::N => Ok(theory_of_n_z(Variant::N, shape)),
        Structure::Ndual => Ok(theory_of_n_z(Variant::Ndual, shape)),
        Structure::Z => Ok(theory_of_n_z(Variant::Z, shape)),
        Structure::R => crate::real::theory_of_reals(shape),
    }
}

/// Decides a sentence on a structure with the default depth budget.
pub fn decide_sentence(f: &Formula, structure: Structure) -> Result<bool> {
    decide_sentence_limited(f, structure, DEFAULT_MAX_SET_DEPTH).map(|(v, _)| v)
}

/// Decides a sentence with an explicit cap on set-quantifier layers,
/// returning the verdict and trace information.
pub fn decide_sentence_limited(
    f: &Formula,
    structure: Structure,
    max_set_depth: usize,
) -> Result<(bool, DecisionInfo)> {
    // On infinite structures a set layer over a first-order block of depth
    // three or more needs the sum-closure of element-shaped types, whose
    // size grows non-elementarily with the block depth; cap the kept run
    // and promote the rest to singleton-guarded set quantifiers.
    let elem_cap = match structure {
        Structure::Finite(_) => usize::MAX,
        // On the line a set layer over a depth-3 first-order block stays
        // feasible, and capping at 2 would push common interval-density
        // sentences into shapes with wider set layers instead.
        Structure::R => 3,
        _ => 2,
    };
    let norm = normalize_with_elem_cap(f, elem_cap)?;
    if structure == Structure::Finite(0) {
        // Prenexing moves quantifiers across subformulas that do not
        // mention them, which is only sound on nonempty domains; the empty
        // order is decided directly (every set term denotes the empty set
        // and every first-order quantifier is vacuous).
        let info =
            DecisionInfo { shape: norm.shape.clone(), constituents: norm.constituents.len() };
        return Ok((eval_on_empty(&unfold_preds(f)), info));
    }
    if norm.shape.set_depth() > max_set_depth {
        return Err(EngineError::Budget(format!(
            "sentence has {} set-quantifier layers (shape {}), cap is {max_set_depth}",
            norm.shape.set_depth(),
            norm.shape
        )));
    }
    // Each constituent is decided against the theory at its own shape;
    // this equals restricting the theory at the joined shape (restriction
    // commutes with evaluation) but avoids computing theories at shapes
    // larger than any single constituent needs.
    let verdicts: Vec<bool> = norm
        .constituents
        .iter()
        .map(|c| {
            if !matches!(structure, Structure::Finite(_) | Structure::R)
                && ((c.shape.set_depth() > 0 && c.shape.elem >= 3)
                    || (c.shape.set_depth() >= 2 && c.shape.elem >= 2))
            {
                // The ω-rule for a set layer needs the sum-closure of the
                // inner types; over a depth-3 first-order block, or over a
                // set layer atop a depth-2 block, that closure is too
                // large to enumerate.
                return Err(EngineError::Budget(format!(
                    "shape {} is beyond the supported envelope for infinite \
                     structures (at most two first-order layers under a set \
                     layer, at most one under two)",
                    c.shape
                )));
            }
            let v = theory_of(structure, &c.shape)?;
            Ok(eval_constituent(c, v))
        })
        .collect::<Result<_>>()?;
    let info =
        DecisionInfo { shape: norm.shape.clone(), constituents: norm.constituents.len() };
    Ok((eval_tree(&norm.tree, &verdicts), info))
}

/// Truth on the empty order: every set term denotes the empty set, every
/// first-order quantifier is vacuous, and set quantifiers range over the
/// single choice of the empty set.
fn eval_on_empty(f: &Formula) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Le(..) | Formula::In(..) => false,
        Formula::Sub(..) | Formula::Eq(..) => true,
        Formula::IsAtom(_) => false,
        Formula::Meager(_) => true,
        Formula::Pred(name, _) => {
            panic!("predicate {name} must be unfolded before evaluation")
        }
        Formula::Not(g) => !eval_on_empty(g),
        Formula::And(a, b) => eval_on_empty(a) && eval_on_empty(b),
        Formula::Or(a, b) => eval_on_empty(a) || eval_on_empty(b),
        Formula::Implies(a, b) => !eval_on_empty(a) || eval_on_empty(b),
        Formula::Iff(a, b) => eval_on_empty(a) == eval_on_empty(b),
        Formula::ExistsElem(..) => false,
        Formula::ForallElem(..) => true,
        Formula::ExistsSet(_, g) | Formula::ForallSet(_, g) => eval_on_empty(g),
    }
}

fn eval_tree(t: &BoolTree, verdicts: &[bool]) -> bool {
    match t {
        BoolTree::Leaf(i) => verdicts[*i],
        BoolTree::Not(a) => !eval_tree(a, verdicts),
        BoolTree::And(a, b) => eval_tree(a, verdicts) && eval_tree(b, verdicts),
        BoolTree::Or(a, b) => eval_tree(a, verdicts) || eval_tree(b, verdicts),
    }
}

/// Evaluates one typed constituent against a theory value of its shape.
pub fn eval_constituent(c: &TypedSentence, v: TypeId) -> bool {
    eval_blocks(c, 0, v)
}

fn eval_blocks(c: &TypedSentence, depth: usize, v: TypeId) -> bool {
    if depth == c.blocks.len() {
        debug_assert!(is_leaf(v));
        return eval_matrix(leaf(v), &c.matrix, &c.var_index);
    }
    match c.blocks[depth].polarity {
        Polarity::Exists => children(v).iter().any(|&ch| eval_blocks(c, depth + 1, ch)),
        Polarity::Forall => children(v).iter().all(|&ch| eval_blocks(c, depth + 1, ch)),
    }
}

/// Cell masks (over the leaf's parameters) on which a set term holds.
fn term_cells(t: &SetTerm, arity: usize, var_index: &HashMap<String, usize>) -> Vec<usize> {
    (0..1usize << arity)
        .filter(|&cell| t.eval(&|v: &str| cell >> var_index[v] & 1 == 1))
        .collect()
}

fn var_cells(x: &str, arity: usize, var_index: &HashMap<String, usize>) -> Vec<usize> {
    let bit = var_index[x];
    (0..1usize << arity).filter(|&cell| cell >> bit & 1 == 1).collect()
}

fn eval_matrix(l: &LeafData, f: &Formula, vi: &HashMap<String, usize>) -> bool {
    let m = l.arity;
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Le(x, y) => l.le_atoms(&var_cells(x, m, vi), &var_cells(y, m, vi)),
        Formula::In(x, s) => {
            // The singleton x lies in s iff its trace outside s is empty.
            let sc = term_cells(s, m, vi);
            let outside: Vec<usize> =
                var_cells(x, m, vi).into_iter().filter(|c| !sc.contains(c)).collect();
            l.is_atom_on(&var_cells(x, m, vi)) && l.is_empty_on(&outside)
        }
        Formula::Sub(s, t) => {
            let tc = term_cells(t, m, vi);
            let diff: Vec<usize> =
                term_cells(s, m, vi).into_iter().filter(|c| !tc.contains(c)).collect();
            l.is_empty_on(&diff)
        }
        Formula::Eq(s, t) => {
            let sc = term_cells(s, m, vi);
            let tc = term_cells(t, m, vi);
            let sym: Vec<usize> = (0..1usize << m)
                .filter(|c| sc.contains(c) != tc.contains(c))
                .collect();
            l.is_empty_on(&sym)
        }
        Formula::IsAtom(s) => l.is_atom_on(&term_cells(s, m, vi)),
        Formula::Meager(s) => l.is_meager_on(&term_cells(s, m, vi)),
        Formula::Pred(name, _) => {
            panic!("predicate {name} must be unfolded before matrix evaluation")
        }
        Formula::Not(g) => !eval_matrix(l, g, vi),
        Formula::And(a, b) => eval_matrix(l, a, vi) && eval_matrix(l, b, vi),
        Formula::Or(a, b) => eval_matrix(l, a, vi) || eval_matrix(l, b, vi),
        Formula::Implies(a, b) => !eval_matrix(l, a, vi) || eval_matrix(l, b, vi),
        Formula::Iff(a, b) => eval_matrix(l, a, vi) == eval_matrix(l, b, vi),
        _ => panic!("quantifier in matrix"),
    }
}
