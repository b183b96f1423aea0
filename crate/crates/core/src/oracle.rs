//! Brute-force ground truth over explicit finite orders.
//!
//! Everything here is computed by exhaustive enumeration directly from the
//! semantics, sharing no code with the compositional engine: types are
//! built by ranging set parameters over all subsets and element parameters
//! over all points, and sentences are evaluated Tarski-style.  On a finite
//! order every point is isolated, so a set is meager exactly when it is
//! empty; the meager-related leaf facts degenerate accordingly.
//!
//! Budgets are hard caps: the enumeration is exponential and exists only
//! to cross-check the engine on small instances.

use crate::error::{EngineError, Result};
use crate::leaf::{Card, CellInfo, LeafData};
use crate::shape::Shape;
use crate::syntax::ast::{Formula, SetTerm};
use crate::syntax::normalize::unfold_preds;
use crate::value::{intern_leaf, intern_set, TypeId};
use std::collections::HashMap;

/// Largest structure the oracle will enumerate.
pub const MAX_ORACLE_SIZE: usize = 5;
/// Largest total set-parameter count per type enumeration.
pub const MAX_ORACLE_SET_VARS: usize = 4;
/// Largest number of set layers per type enumeration.
pub const MAX_ORACLE_SET_LAYERS: usize = 2;

/// The leaf facts of the order `0 < 1 < ... < n-1` with the given set
/// parameters (bitmask per parameter).
pub fn leaf_of_finite(n: usize, params: &[u64]) -> LeafData {
    let a = params.len();
    let ncells = 1usize << a;
    let cell_of = |p: usize| -> usize {
        let mut c = 0;
        for (i, &m) in params.iter().enumerate() {
            if m >> p & 1 == 1 {
                c |= 1 << i;
            }
        }
        c
    };
    let mut count = vec![0usize; ncells];
    let mut single_pos = vec![0usize; ncells];
    for p in 0..n {
        let c = cell_of(p);
        count[c] += 1;
        single_pos[c] = p;
    }
    let mut cells = Vec::with_capacity(ncells);
    for c in 0..ncells {
        let card = match count[c] {
            0 => Card::Zero,
            1 => Card::One,
            _ => Card::Many,
        };
        let has_gmin = n > 0 && cell_of(0) == c;
        let has_gmax = n > 0 && cell_of(n - 1) == c;
        // Distinct endpoint points lying in this cell.
        let removed = (has_gmin as usize) + ((n > 1 && has_gmax) as usize);
        cells.push(CellInfo {
            card,
            meager: count[c] == 0,
            has_gmin,
            has_gmax,
            rest_min_meager: count[c] - (has_gmin as usize) == 0,
            rest_max_meager: count[c] - ((n > 0 && has_gmax) as usize) == 0,
            rest_both_meager: count[c] - removed == 0,
        });
    }
    let mut sing: Vec<usize> = (0..ncells).filter(|&c| count[c] == 1).collect();
    sing.sort_by_key(|&c| single_pos[c]);
    LeafData::new(a, cells, sing)
}

fn check_budget(n: usize, shape: &Shape) -> Result<()> {
    if n > MAX_ORACLE_SIZE {
        return Err(EngineError::Budget(format!(
            "oracle supports structures of size at most {MAX_ORACLE_SIZE}, got {n}"
        )));
    }
    if shape.set_depth() > MAX_ORACLE_SET_LAYERS {
        return Err(EngineError::Budget(format!(
            "oracle supports at most {MAX_ORACLE_SET_LAYERS} set layers, got shape {shape}"
        )));
    }
    if shape.sets.iter().sum::<usize>() > MAX_ORACLE_SET_VARS {
        return Err(EngineError::Budget(format!(
            "oracle supports at most {MAX_ORACLE_SET_VARS} set variables, got shape {shape}"
        )));
    }
    Ok(())
}

/// The type of the order `0 < ... < n-1` at the given shape, over context
/// parameters `ctx` (one bitmask per context set).
pub fn eval_type_finite(n: usize, shape: &Shape, ctx: &[u64]) -> Result<TypeId> {
    check_budget(n, shape)?;
    let mut params: Vec<u64> = ctx.to_vec();
    Ok(go(n, shape, &mut params))
}

fn go(n: usize, shape: &Shape, params: &mut Vec<u64>) -> TypeId {
    if shape.depth() == 0 {
        intern_leaf(leaf_of_finite(n, params))
    } else if shape.set_depth() > 0 {
        let k = shape.outer_arity();
        let inner = shape.inner();
        let mut cs = Vec::new();
        for combo in 0..1u64 << (n * k) {
            for i in 0..k {
                let mask = (combo >> (n * i)) & ((1u64 << n) - 1);
                params.push(mask);
            }
            cs.push(go(n, &inner, params));
            params.truncate(params.len() - k);
        }
        intern_set(cs)
    } else {
        let inner = shape.inner();
        let mut cs = Vec::new();
        for p in 0..n {
            params.push(1u64 << p);
            cs.push(go(n, &inner, params));
            params.pop();
        }
        intern_set(cs)
    }
}

/// Tarskian truth of a sentence in the order `0 < ... < n-1`.
pub fn eval_sentence_finite(n: usize, f: &Formula) -> Result<bool> {
    if n > MAX_ORACLE_SIZE {
        return Err(EngineError::Budget(format!(
            "oracle supports structures of size at most {MAX_ORACLE_SIZE}, got {n}"
        )));
    }
    if !f.is_sentence() {
        return Err(EngineError::Malformed("oracle evaluation requires a sentence".into()));
    }
    let f = unfold_preds(f);
    let mut elems: HashMap<String, usize> = HashMap::new();
    let mut sets: HashMap<String, u64> = HashMap::new();
    Ok(eval(n, &f, &mut elems, &mut sets))
}

fn term_mask(n: usize, t: &SetTerm, sets: &HashMap<String, u64>) -> u64 {
    let top = if n == 0 { 0 } else { (1u64 << n) - 1 };
    match t {
        SetTerm::Var(v) => sets[v],
        SetTerm::Top => top,
        SetTerm::Union(a, b) => term_mask(n, a, sets) | term_mask(n, b, sets),
        SetTerm::Inter(a, b) => term_mask(n, a, sets) & term_mask(n, b, sets),
        SetTerm::Diff(a, b) => term_mask(n, a, sets) & !term_mask(n, b, sets) & top,
    }
}

fn eval(
    n: usize,
    f: &Formula,
    elems: &mut HashMap<String, usize>,
    sets: &mut HashMap<String, u64>,
) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Le(x, y) => elems[x] <= elems[y],
        Formula::In(x, s) => term_mask(n, s, sets) >> elems[x] & 1 == 1,
        Formula::Sub(s, t) => term_mask(n, s, sets) & !term_mask(n, t, sets) == 0,
        Formula::Eq(s, t) => term_mask(n, s, sets) == term_mask(n, t, sets),
        Formula::IsAtom(s) => term_mask(n, s, sets).count_ones() == 1,
        // On a finite order, meager means empty.
        Formula::Meager(s) => term_mask(n, s, sets) == 0,
        Formula::Pred(_, _) => panic!("predicates must be unfolded before oracle evaluation"),
        Formula::Not(g) => !eval(n, g, elems, sets),
        Formula::And(a, b) => eval(n, a, elems, sets) && eval(n, b, elems, sets),
        Formula::Or(a, b) => eval(n, a, elems, sets) || eval(n, b, elems, sets),
        Formula::Implies(a, b) => !eval(n, a, elems, sets) || eval(n, b, elems, sets),
        Formula::Iff(a, b) => eval(n, a, elems, sets) == eval(n, b, elems, sets),
        Formula::ExistsElem(v, g) => {
            let saved = elems.get(v).copied();
            let mut found = false;
            for p in 0..n {
                elems.insert(v.clone(), p);
                if eval(n, g, elems, sets) {
                    found = true;
                    break;
                }
            }
            restore(elems, v, saved);
            found
        }
        Formula::ForallElem(v, g) => {
            let saved = elems.get(v).copied();
            let mut all = true;
            for p in 0..n {
                elems.insert(v.clone(), p);
                if !eval(n, g, elems, sets) {
                    all = false;
                    break;
                }
            }
            restore(elems, v, saved);
            all
        }
        Formula::ExistsSet(v, g) => {
            let saved = sets.get(v).copied();
            let mut found = false;
            for m in 0..1u64 << n {
                sets.insert(v.clone(), m);
                if eval(n, g, elems, sets) {
                    found = true;
                    break;
                }
            }
            restore(sets, v, saved);
            found
        }
        Formula::ForallSet(v, g) => {
            let saved = sets.get(v).copied();
            let mut all = true;
            for m in 0..1u64 << n {
                sets.insert(v.clone(), m);
                if !eval(n, g, elems, sets) {
                    all = false;
                    break;
                }
            }
            restore(sets, v, saved);
            all
        }
    }
}

fn restore<T>(env: &mut HashMap<String, T>, key: &str, saved: Option<T>) {
    match saved {
        Some(v) => {
            env.insert(key.to_string(), v);
        }
        None => {
            env.remove(key);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;
    use crate::value::{empty_value, formal_type_membership, point_value};

    #[test]
    fn leaf_facts_of_small_orders() {
        let l = leaf_of_finite(3, &[0b101]);
        assert_eq!(l.cells[1].card, Card::Many); // points 0 and 2
        assert_eq!(l.cells[0].card, Card::One); // point 1
        assert!(l.cells[1].has_gmin && l.cells[1].has_gmax);
        assert!(!l.cells[1].meager);
        assert!(l.cells[1].rest_both_meager);
        assert!(!l.cells[1].rest_min_meager);
        assert_eq!(l.sing_order, vec![0]);

        assert!(leaf_of_finite(0, &[]).is_empty_structure());
        assert_eq!(leaf_of_finite(1, &[0b1]), LeafData::point(1, 1));
    }

    #[test]
    fn degenerate_types_match_constructors() {
        for shape in [Shape::pure(vec![1]), Shape::new(1, vec![2]), Shape::new(2, vec![])] {
            assert_eq!(eval_type_finite(0, &shape, &[]).unwrap(), empty_value(&shape, 0));
            assert_eq!(eval_type_finite(1, &shape, &[0]).unwrap(), point_value(&shape, 1, 0));
            assert_eq!(eval_type_finite(1, &shape, &[1]).unwrap(), point_value(&shape, 1, 1));
        }
    }

    #[test]
    fn types_live_in_their_formal_space() {
        let shape = Shape::new(1, vec![1, 2]);
        let v = eval_type_finite(3, &shape, &[0b011]).unwrap();
        assert!(formal_type_membership(v, &shape, 1));
    }

    #[test]
    fn type_distinguishes_sizes_up_to_threshold() {
        // With one set layer of arity 1 the type can count to "many", so
        // sizes 0, 1, 2 differ while larger sizes eventually agree only in
        // deeper shapes.
        let shape = Shape::pure(vec![1]);
        let t: Vec<TypeId> =
            (0..5).map(|n| eval_type_finite(n, &shape, &[]).unwrap()).collect();
        assert_ne!(t[0], t[1]);
        assert_ne!(t[1], t[2]);
        assert_ne!(t[2], t[3]);
    }

    #[test]
    fn sentence_truth_small_cases() {
        let cases = [
            ("EX x. AX y. x <= y", vec![false, true, true, true]),
            ("AX x. EX y. !(y <= x)", vec![true, false, false, false]),
            ("ES X. atom(X)", vec![false, true, true, true]),
            ("AS X. (meager(X) <-> !EX x. x in X)", vec![true, true, true, true]),
            ("ES X. ES Y. (!meager(X) & !meager(Y) & meager(X * Y))", vec![false, false, true, true]),
        ];
        for (text, expect) in cases {
            let f = parse_formula(text).unwrap();
            for (n, e) in expect.iter().enumerate() {
                assert_eq!(eval_sentence_finite(n, &f).unwrap(), *e, "{text} at n={n}");
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            eval_type_finite(6, &Shape::leaf(), &[]),
            Err(EngineError::Budget(_))
        ));
        assert!(matches!(
            eval_type_finite(2, &Shape::pure(vec![2, 3]), &[]),
            Err(EngineError::Budget(_))
        ));
    }
}
