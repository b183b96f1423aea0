//! Hash-consed hereditarily finite type values.
//!
//! A `TypeId` names an interned node: either a leaf (atomic facts) or a
//! finite set of child values.  Interning makes equality a pointer/index
//! comparison, which the fixpoint computations rely on; `canonical_hash`
//! provides a process-independent content address used for serialization,
//! dumps, and the on-disk cache.
//!
//! Parameter-position convention: leaf parameters are ordered by time of
//! addition along the quantifier recursion — context parameters first,
//! then each layer's additions from the outermost layer inwards, with the
//! innermost singleton layers last.

use crate::json::Json;
use crate::leaf::LeafData;
use crate::shape::Shape;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Version string folded into content hashes, serialized values, and cache
/// keys; bump on any representation or signature change.
pub const SIGNATURE_VERSION: &str = "mtorder-sig-1";

/// Interned reference to a type value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeId(pub u32);

/// A node of a hereditarily finite type value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeNode {
    Leaf(LeafData),
    /// Children sorted by `TypeId` and deduplicated.
    Set(Vec<TypeId>),
}

struct Interner {
    map: HashMap<&'static TypeNode, u32>,
    nodes: Vec<&'static TypeNode>,
    hashes: Vec<Option<[u8; 32]>>,
}

fn interner() -> &'static Mutex<Interner> {
    static INT: OnceLock<Mutex<Interner>> = OnceLock::new();
    INT.get_or_init(|| {
        Mutex::new(Interner { map: HashMap::new(), nodes: Vec::new(), hashes: Vec::new() })
    })
}

fn intern(node: TypeNode) -> TypeId {
    let mut g = interner().lock().unwrap();
    if let Some(&id) = g.map.get(&node) {
        return TypeId(id);
    }
    let leaked: &'static TypeNode = Box::leak(Box::new(node));
    let id = g.nodes.len() as u32;
    g.nodes.push(leaked);
    g.hashes.push(None);
    g.map.insert(leaked, id);
    TypeId(id)
}

pub fn intern_leaf(leaf: LeafData) -> TypeId {
    intern(TypeNode::Leaf(leaf))
}

pub fn intern_set(mut children: Vec<TypeId>) -> TypeId {
    children.sort_unstable();
    children.dedup();
    intern(TypeNode::Set(children))
}

/// The node behind an id (nodes are immutable and live forever).
pub fn node(id: TypeId) -> &'static TypeNode {
    let g = interner().lock().unwrap();
    g.nodes[id.0 as usize]
}

/// Children of a set node; panics on a leaf.
pub fn children(id: TypeId) -> &'static [TypeId] {
    match node(id) {
        TypeNode::Set(c) => c,
        TypeNode::Leaf(_) => panic!("children() called on a leaf value"),
    }
}

/// Leaf data of a leaf node; panics on a set.
pub fn leaf(id: TypeId) -> &'static LeafData {
    match node(id) {
        TypeNode::Leaf(l) => l,
        TypeNode::Set(_) => panic!("leaf() called on a set value"),
    }
}

pub fn is_leaf(id: TypeId) -> bool {
    matches!(node(id), TypeNode::Leaf(_))
}

/// Content hash: equal hereditarily finite values get equal hashes in any
/// process of the same signature version.  A collision between distinct
/// values would be a fatal defect; we treat SHA-256 as injective here.
pub fn canonical_hash(id: TypeId) -> [u8; 32] {
    {
        let g = interner().lock().unwrap();
        if let Some(h) = g.hashes[id.0 as usize] {
            return h;
        }
    }
    let h = match node(id) {
        TypeNode::Leaf(l) => {
            let mut bytes = Vec::new();
            l.encode(&mut bytes);
            let mut d = Sha256::new();
            d.update([0u8]);
            d.update(SIGNATURE_VERSION.as_bytes());
            d.update(&bytes);
            d.finalize().into()
        }
        TypeNode::Set(cs) => {
            let mut child_hashes: Vec<[u8; 32]> = cs.iter().map(|&c| canonical_hash(c)).collect();
            child_hashes.sort_unstable();
            let mut d = Sha256::new();
            d.update([1u8]);
            for ch in &child_hashes {
                d.update(ch);
            }
            d.finalize().into()
        }
    };
    let mut g = interner().lock().unwrap();
    g.hashes[id.0 as usize] = Some(h);
    h
}

pub fn canonical_hex(id: TypeId) -> String {
    canonical_hash(id).iter().map(|b| format!("{b:02x}")).collect()
}

/// Checks that `v` is a legal element of the formal space `fTh_shape` over
/// `ctx` context parameters.  The formal space itself is never enumerated;
/// this is a membership test only.
pub fn formal_type_membership(v: TypeId, shape: &Shape, ctx: usize) -> bool {
    if shape.depth() == 0 {
        match node(v) {
            TypeNode::Leaf(l) => l.arity == ctx && l.validate(),
            TypeNode::Set(_) => false,
        }
    } else {
        let inner = shape.inner();
        let added = shape.outer_arity();
        match node(v) {
            TypeNode::Set(cs) => {
                cs.iter().all(|&c| formal_type_membership(c, &inner, ctx + added))
            }
            TypeNode::Leaf(_) => false,
        }
    }
}

/// Applies a leaf transformation through an entire value of the given
/// depth, memoizing shared subtrees.
pub fn map_leaves(v: TypeId, depth: usize, f: &mut dyn FnMut(&LeafData) -> LeafData) -> TypeId {
    fn go(
        v: TypeId,
        depth: usize,
        f: &mut dyn FnMut(&LeafData) -> LeafData,
        memo: &mut HashMap<(TypeId, usize), TypeId>,
    ) -> TypeId {
        if let Some(&r) = memo.get(&(v, depth)) {
            return r;
        }
        let r = if depth == 0 {
            intern_leaf(f(leaf(v)))
        } else {
            let cs = children(v).iter().map(|&c| go(c, depth - 1, f, memo)).collect();
            intern_set(cs)
        };
        memo.insert((v, depth), r);
        r
    }
    let mut memo = HashMap::new();
    go(v, depth, f, &mut memo)
}

/// Inserts a fresh empty parameter at leaf position `pos` everywhere in `v`.
pub fn value_pad_at(v: TypeId, depth: usize, pos: usize) -> TypeId {
    map_leaves(v, depth, &mut |l| {
        let padded = l.pad();
        let m = padded.arity;
        // Move the freshly appended parameter (index m-1) down to `pos`.
        let perm: Vec<usize> = (0..m)
            .map(|j| {
                if j < pos {
                    j
                } else if j == pos {
                    m - 1
                } else {
                    j - 1
                }
            })
            .collect();
        padded.permute_params(&perm)
    })
}

/// Forgets the parameter at leaf position `pos` everywhere in `v`.
pub fn value_drop_at(v: TypeId, depth: usize, pos: usize) -> TypeId {
    map_leaves(v, depth, &mut |l| {
        let m = l.arity;
        // Move `pos` to the end, then drop it.
        let perm: Vec<usize> = (0..m)
            .map(|j| {
                if j + 1 < m {
                    if j < pos {
                        j
                    } else {
                        j + 1
                    }
                } else {
                    pos
                }
            })
            .collect();
        l.permute_params(&perm).drop_last()
    })
}

/// Order dual of a value.
pub fn value_mirror(v: TypeId, depth: usize) -> TypeId {
    map_leaves(v, depth, &mut |l| l.mirror())
}

/// The type of the empty structure at the given shape and context arity.
/// Set layers contribute the single all-empty refinement; elem layers have
/// no witnesses at all, so they are empty sets.
pub fn empty_value(shape: &Shape, ctx: usize) -> TypeId {
    if shape.depth() == 0 {
        intern_leaf(LeafData::empty(ctx))
    } else if shape.set_depth() > 0 {
        let inner = shape.inner();
        let child = empty_value(&inner, ctx + shape.outer_arity());
        intern_set(vec![child])
    } else {
        intern_set(Vec::new())
    }
}

/// The type of a one-point structure whose point lies in the context
/// parameters of `mask`.
pub fn point_value(shape: &Shape, ctx: usize, mask: usize) -> TypeId {
    if shape.depth() == 0 {
        intern_leaf(LeafData::point(ctx, mask))
    } else if shape.set_depth() > 0 {
        let inner = shape.inner();
        let k = shape.outer_arity();
        let mut cs = Vec::new();
        for ext in 0..1usize << k {
            cs.push(point_value(&inner, ctx + k, mask | (ext << ctx)));
        }
        intern_set(cs)
    } else {
        let inner = shape.inner();
        let child = point_value(&inner, ctx + 1, mask | (1 << ctx));
        intern_set(vec![child])
    }
}

/// Canonical JSON rendering: set children appear sorted by content hash, so
/// the output is byte-stable across processes.
pub fn to_json(v: TypeId, depth: usize) -> Json {
    if depth == 0 {
        let l = leaf(v);
        let mut bytes = Vec::new();
        l.encode(&mut bytes);
        Json::Obj(vec![
            ("arity".into(), Json::Int(l.arity as i64)),
            (
                "cells".into(),
                Json::Arr(bytes[1..1 + l.cells.len()].iter().map(|&b| Json::Int(b as i64)).collect()),
            ),
            (
                "order".into(),
                Json::Arr(l.sing_order.iter().map(|&c| Json::Int(c as i64)).collect()),
            ),
        ])
    } else {
        let mut cs: Vec<TypeId> = children(v).to_vec();
        cs.sort_by_key(|&c| canonical_hash(c));
        Json::Obj(vec![(
            "set".into(),
            Json::Arr(cs.into_iter().map(|c| to_json(c, depth - 1)).collect()),
        )])
    }
}

/// Compact binary serialization of a value DAG (used by the cache).
/// Nodes are emitted in a canonical postorder keyed by content hash.
pub fn encode_value(v: TypeId, depth: usize) -> Vec<u8> {
    fn collect(
        v: TypeId,
        depth: usize,
        order: &mut Vec<(TypeId, usize)>,
        seen: &mut HashMap<(TypeId, usize), u32>,
    ) -> u32 {
        if let Some(&i) = seen.get(&(v, depth)) {
            return i;
        }
        if depth > 0 {
            let mut cs: Vec<TypeId> = children(v).to_vec();
            cs.sort_by_key(|&c| canonical_hash(c));
            for c in cs {
                collect(c, depth - 1, order, seen);
            }
        }
        let i = order.len() as u32;
        order.push((v, depth));
        seen.insert((v, depth), i);
        i
    }
    let mut order = Vec::new();
    let mut seen = HashMap::new();
    let root = collect(v, depth, &mut order, &mut seen);
    let mut out = Vec::new();
    out.extend_from_slice(SIGNATURE_VERSION.as_bytes());
    out.push(0u8);
    out.extend_from_slice(&(order.len() as u32).to_le_bytes());
    for &(n, d) in &order {
        if d == 0 {
            out.push(0u8);
            leaf(n).encode(&mut out);
        } else {
            out.push(1u8);
            let mut cs: Vec<TypeId> = children(n).to_vec();
            cs.sort_by_key(|&c| canonical_hash(c));
            out.extend_from_slice(&(cs.len() as u32).to_le_bytes());
            for c in cs {
                out.extend_from_slice(&seen[&(c, d - 1)].to_le_bytes());
            }
        }
    }
    out.extend_from_slice(&root.to_le_bytes());
    out
}

/// Inverse of `encode_value`; fails on version mismatch or malformed data.
pub fn decode_value(bytes: &[u8]) -> Option<(TypeId, usize)> {
    let sig = SIGNATURE_VERSION.as_bytes();
    if bytes.len() < sig.len() + 1 || &bytes[..sig.len()] != sig || bytes[sig.len()] != 0 {
        return None;
    }
    let mut p = sig.len() + 1;
    let read_u32 = |bytes: &[u8], p: &mut usize| -> Option<u32> {
        let v = u32::from_le_bytes(bytes.get(*p..*p + 4)?.try_into().ok()?);
        *p += 4;
        Some(v)
    };
    let count = read_u32(bytes, &mut p)? as usize;
    let mut ids: Vec<(TypeId, usize)> = Vec::with_capacity(count);
    for _ in 0..count {
        let tag = *bytes.get(p)?;
        p += 1;
        match tag {
            0 => {
                let arity = *bytes.get(p)? as usize;
                if arity > crate::leaf::MAX_ARITY {
                    return None;
                }
                let ncells = 1usize << arity;
                let cell_bytes = bytes.get(p + 1..p + 1 + ncells)?;
                let cells = cell_bytes.iter().map(|&b| decode_cell(b)).collect::<Option<Vec<_>>>()?;
                let mut q = p + 1 + ncells;
                let nord = *bytes.get(q)? as usize;
                q += 1;
                let mut sing = Vec::with_capacity(nord);
                for _ in 0..nord {
                    let c = u16::from_le_bytes(bytes.get(q..q + 2)?.try_into().ok()?);
                    sing.push(c as usize);
                    q += 2;
                }
                p = q;
                ids.push((intern_leaf(LeafData::new(arity, cells, sing)), 0));
            }
            1 => {
                let n = read_u32(bytes, &mut p)? as usize;
                let mut cs = Vec::with_capacity(n);
                let mut d = 0;
                for _ in 0..n {
                    let i = read_u32(bytes, &mut p)? as usize;
                    let (c, cd) = *ids.get(i)?;
                    cs.push(c);
                    d = cd + 1;
                }
                if n == 0 {
                    d = 1; // depth of an empty set is not recoverable; callers track shape
                }
                ids.push((intern_set(cs), d));
            }
            _ => return None,
        }
    }
    let root = read_u32(bytes, &mut p)? as usize;
    if p != bytes.len() {
        return None;
    }
    ids.get(root).copied()
}

fn decode_cell(b: u8) -> Option<crate::leaf::CellInfo> {
    use crate::leaf::{Card, CellInfo};
    let card = match b & 0b11 {
        0 => Card::Zero,
        1 => Card::One,
        2 => Card::Many,
        _ => return None,
    };
    Some(CellInfo {
        card,
        meager: b & (1 << 2) != 0,
        has_gmin: b & (1 << 3) != 0,
        has_gmax: b & (1 << 4) != 0,
        rest_min_meager: b & (1 << 5) != 0,
        rest_max_meager: b & (1 << 6) != 0,
        rest_both_meager: b & (1 << 7) != 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_extensional() {
        let a = intern_set(vec![intern_leaf(LeafData::empty(0))]);
        let b = intern_set(vec![intern_leaf(LeafData::empty(0)), intern_leaf(LeafData::empty(0))]);
        assert_eq!(a, b);
        let c = intern_set(vec![]);
        assert_ne!(a, c);
        assert_ne!(canonical_hash(a), canonical_hash(c));
    }

    #[test]
    fn point_value_is_well_formed() {
        let shape = Shape::new(1, vec![2, 1]);
        let v = point_value(&shape, 1, 0);
        assert!(formal_type_membership(v, &shape, 1));
        assert!(!formal_type_membership(v, &Shape::pure(vec![1]), 1));
    }

    #[test]
    fn empty_value_shapes() {
        let s = Shape::new(1, vec![1]);
        let v = empty_value(&s, 0);
        assert!(formal_type_membership(v, &s, 0));
        // One set-layer child (the all-empty refinement), which has no
        // elem-layer witnesses.
        assert_eq!(children(v).len(), 1);
        assert_eq!(children(children(v)[0]).len(), 0);
    }

    #[test]
    fn pad_then_drop_round_trips() {
        let shape = Shape::new(1, vec![1]);
        let v = point_value(&shape, 1, 1);
        let padded = value_pad_at(v, shape.depth(), 1);
        assert_ne!(padded, v);
        assert_eq!(value_drop_at(padded, shape.depth(), 1), v);
    }

    #[test]
    fn mirror_involutive_on_values() {
        let shape = Shape::new(2, vec![]);
        let v = point_value(&shape, 0, 0);
        assert_eq!(value_mirror(value_mirror(v, 2), 2), v);
    }

    #[test]
    fn binary_round_trip() {
        let shape = Shape::new(1, vec![2]);
        let v = point_value(&shape, 1, 1);
        let bytes = encode_value(v, shape.depth());
        let (w, d) = decode_value(&bytes).unwrap();
        assert_eq!(w, v);
        assert_eq!(d, shape.depth());
    }

    #[test]
    fn hash_is_stable_under_child_order() {
        let l1 = intern_leaf(LeafData::empty(0));
        let l2 = intern_leaf(LeafData::point(0, 0));
        let a = intern_set(vec![l1, l2]);
        let b = intern_set(vec![l2, l1]);
        assert_eq!(a, b);
        assert_eq!(canonical_hash(a), canonical_hash(b));
    }
}
