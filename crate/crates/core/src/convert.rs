//! Shape restrictions: projecting a type value to a smaller quantifier
//! shape.
//!
//! The preorder on shapes allows dropping outer set layers, shrinking a
//! layer's arity, and dropping element layers.  Restriction follows the
//! semantics directly: a dropped or shrunk set layer keeps exactly the
//! children whose forgotten parameters are empty (the all-empty extension
//! is always realized, so the projection is total on genuine types), and a
//! dropped element layer forgets the singleton parameter of any child —
//! all children agree after forgetting, which is asserted.

use crate::error::{EngineError, Result};
use crate::leaf::Card;
use crate::shape::Shape;
use crate::value::{children, empty_value, intern_set, is_leaf, leaf, value_drop_at, TypeId};
use std::collections::HashMap;

/// True when every leaf of `v` (a value of total depth `depth`) has empty
/// cells for every cell mask touching one of the parameter positions in
/// `positions`.
pub fn params_empty(v: TypeId, depth: usize, positions: &[usize]) -> bool {
    fn go(
        v: TypeId,
        depth: usize,
        positions: &[usize],
        memo: &mut HashMap<(TypeId, usize), bool>,
    ) -> bool {
        if let Some(&r) = memo.get(&(v, depth)) {
            return r;
        }
        let r = if depth == 0 {
            let l = leaf(v);
            let touch: usize = positions.iter().map(|&p| 1usize << p).sum();
            (0..l.cells.len()).all(|c| c & touch == 0 || l.cells[c].card == Card::Zero)
        } else {
            children(v).iter().all(|&c| go(c, depth - 1, positions, memo))
        };
        memo.insert((v, depth), r);
        r
    }
    go(v, depth, positions, &mut HashMap::new())
}

/// Drops the outermost element layer of a pure-element value: forgets the
/// singleton parameter (at position `ctx`) of any child.  `m` is the
/// number of element layers of `v` (at least 1).
pub fn restrict_elem(v: TypeId, m: usize, ctx: usize) -> TypeId {
    assert!(m >= 1);
    let cs = children(v);
    if cs.is_empty() {
        // The structure is empty; so is its type one layer down.
        return empty_value(&Shape::new(m - 1, vec![]), ctx);
    }
    let first = value_drop_at(cs[0], m - 1, ctx);
    debug_assert!(
        cs.iter().all(|&c| value_drop_at(c, m - 1, ctx) == first),
        "element-layer children disagree after forgetting the singleton"
    );
    first
}

/// Projects `v` from shape `from` to shape `to` (requires `to <= from`),
/// over `ctx` context parameters.
pub fn restrict_shape(v: TypeId, from: &Shape, to: &Shape, ctx: usize) -> Result<TypeId> {
    if !to.le(from) {
        return Err(EngineError::Preorder(format!(
            "cannot restrict shape {from} to {to}"
        )));
    }
    Ok(go(v, from, to, ctx))
}

fn go(v: TypeId, from: &Shape, to: &Shape, ctx: usize) -> TypeId {
    if from == to {
        return v;
    }
    if from.set_depth() > to.set_depth() {
        // Drop the outermost set layer entirely: keep the all-empty child.
        let k = from.outer_arity();
        let inner = from.inner();
        let positions: Vec<usize> = (ctx..ctx + k).collect();
        let child = children(v)
            .iter()
            .copied()
            .find(|&c| params_empty(c, inner.depth(), &positions))
            .expect("a set layer always realizes the all-empty extension");
        let mut c = child;
        for p in positions.into_iter().rev() {
            c = value_drop_at(c, inner.depth(), p);
        }
        go(c, &inner, to, ctx)
    } else if from.set_depth() > 0 {
        // Same number of layers; shrink the outer arity if needed.
        let kf = from.outer_arity();
        let kt = to.outer_arity();
        let fi = from.inner();
        let ti = to.inner();
        let positions: Vec<usize> = (ctx + kt..ctx + kf).collect();
        let mut out = Vec::new();
        for &c in children(v) {
            if !params_empty(c, fi.depth(), &positions) {
                continue;
            }
            let mut c2 = c;
            for &p in positions.iter().rev() {
                c2 = value_drop_at(c2, fi.depth(), p);
            }
            out.push(go(c2, &fi, &ti, ctx + kt));
        }
        intern_set(out)
    } else {
        // Pure element layers remain.
        debug_assert!(from.elem > to.elem && !is_leaf(v) || from.elem > 0);
        let dropped = restrict_elem(v, from.elem, ctx);
        go(dropped, &from.inner(), to, ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::eval_type_finite;

    /// Restriction commutes with direct evaluation on finite orders.
    #[test]
    fn restriction_matches_oracle() {
        let cases: &[(Shape, Shape)] = &[
            (Shape::pure(vec![1]), Shape::leaf()),
            (Shape::pure(vec![2]), Shape::pure(vec![1])),
            (Shape::pure(vec![1, 1]), Shape::pure(vec![1])),
            (Shape::pure(vec![1, 1]), Shape::leaf()),
            (Shape::new(1, vec![1]), Shape::new(0, vec![1])),
            (Shape::new(1, vec![1]), Shape::new(1, vec![])),
            (Shape::new(2, vec![]), Shape::new(1, vec![])),
            (Shape::new(1, vec![2]), Shape::new(1, vec![1])),
        ];
        for (from, to) in cases {
            for n in 0..=3 {
                for ctx_mask in [vec![], vec![0b101u64 & ((1 << n) - 1)]] {
                    let big = eval_type_finite(n, from, &ctx_mask).unwrap();
                    let small = eval_type_finite(n, to, &ctx_mask).unwrap();
                    let r = restrict_shape(big, from, to, ctx_mask.len()).unwrap();
                    assert_eq!(r, small, "restrict {from}->{to} at n={n}");
                }
            }
        }
    }

    /// Restriction is functorial: one step equals two.
    #[test]
    fn restriction_composes() {
        let a = Shape::new(1, vec![1, 1]);
        let b = Shape::new(1, vec![1]);
        let c = Shape::leaf();
        for n in 0..=3 {
            let v = eval_type_finite(n, &a, &[]).unwrap();
            let one = restrict_shape(v, &a, &c, 0).unwrap();
            let mid = restrict_shape(v, &a, &b, 0).unwrap();
            let two = restrict_shape(mid, &b, &c, 0).unwrap();
            assert_eq!(one, two);
        }
    }

    #[test]
    fn preorder_violation_is_rejected() {
        let v = eval_type_finite(2, &Shape::pure(vec![1]), &[]).unwrap();
        assert!(restrict_shape(v, &Shape::pure(vec![1]), &Shape::pure(vec![2]), 0).is_err());
        assert!(restrict_shape(v, &Shape::pure(vec![1]), &Shape::new(1, vec![1]), 0).is_err());
    }
}
