//! Composition: types of lexicographic sums from types of summands.
//!
//! The operators here realize the composition method for ordered sums.
//! Thanks to the enriched leaf vocabulary (endpoint and rest-of-cell
//! meagerness facts), every sum operator is depth-preserving: the type of
//! a sum at shape `(m; k)` is computed from summand types at the same
//! shape.  `depth_requirement` therefore is the identity and is kept as
//! the single documented place where that invariant lives.
//!
//! Recursion pattern shared by all operators:
//! * set layer: a refinement of the sum restricts to an independent
//!   refinement of each summand, so children are assembled from pointwise
//!   child choices (for the ω-sums, Ramsey's theorem reduces the infinite
//!   tail to a prefix from the sum-closure of the children plus a
//!   constantly repeated block type from the same closure);
//! * element layer: the added singleton lies in exactly one summand; the
//!   others forget their singleton parameter (`restrict_elem`) and carry
//!   an empty parameter in its place;
//! * leaf: cardinalities add, the endpoints come from the outermost
//!   nonempty summands, and meagerness of a cell is the conjunction of
//!   summand-trace meagerness with endpoint healing: a summand endpoint
//!   that is isolated inside its summand stops being isolated in the sum
//!   exactly when the neighboring part is nonempty with no matching
//!   endpoint, in which case the summand's rest-of-cell fact is consulted
//!   instead.  The meager ideal is closed under countable unions, so the
//!   conjunction rule is exact for finite and ω index orders.

use crate::convert::restrict_elem;
use crate::leaf::{Card, CellInfo, LeafData};
use crate::shape::Shape;
use crate::value::{
    children, empty_value, formal_type_membership, intern_leaf, intern_set, leaf, point_value,
    value_mirror, value_pad_at, TypeId,
};
use std::collections::{HashMap, HashSet};
use std::sync::{Mutex, OnceLock};

/// Input shape required by every sum operator for output shape `k`: the
/// identity, because the leaf vocabulary already carries the facts the
/// base case consumes.  Operators assert that they never look deeper.
pub fn depth_requirement(shape: &Shape) -> Shape {
    shape.clone()
}

/// Leaf of a finite ordered sum of the given leaves (left to right).
pub fn sum_leaves(parts: &[&LeafData]) -> LeafData {
    assert!(!parts.is_empty());
    let arity = parts[0].arity;
    assert!(parts.iter().all(|p| p.arity == arity));
    let nonempty: Vec<usize> =
        (0..parts.len()).filter(|&i| !parts[i].is_empty_structure()).collect();
    if nonempty.is_empty() {
        return LeafData::empty(arity);
    }
    let first = nonempty[0];
    let last = *nonempty.last().unwrap();
    // Healing discounts: a summand's min point is no longer isolated in
    // the sum iff the part before it is nonempty with no greatest element
    // (symmetrically for max points).
    let mut dmin = vec![false; parts.len()];
    let mut dmax = vec![false; parts.len()];
    for (pos, &i) in nonempty.iter().enumerate() {
        if pos > 0 {
            dmin[i] = !parts[nonempty[pos - 1]].has_gmax();
        }
        if pos + 1 < nonempty.len() {
            dmax[i] = !parts[nonempty[pos + 1]].has_gmin();
        }
    }
    let ncells = 1usize << arity;
    let mut cells = Vec::with_capacity(ncells);
    for c in 0..ncells {
        let card = parts.iter().fold(Card::Zero, |acc, p| acc.add(p.cells[c].card));
        let tm = |extra_min: bool, extra_max: bool| {
            nonempty.iter().all(|&i| {
                parts[i].trace_meager(
                    c,
                    dmin[i] || (extra_min && i == first),
                    dmax[i] || (extra_max && i == last),
                )
            })
        };
        cells.push(CellInfo {
            card,
            meager: tm(false, false),
            has_gmin: parts[first].cells[c].has_gmin,
            has_gmax: parts[last].cells[c].has_gmax,
            rest_min_meager: tm(true, false),
            rest_max_meager: tm(false, true),
            rest_both_meager: tm(true, true),
        });
    }
    let mut sing: Vec<(usize, usize, usize)> = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        if cell.card == Card::One {
            let i = (0..parts.len()).find(|&i| parts[i].cells[c].card == Card::One).unwrap();
            let pos = parts[i].sing_order.iter().position(|&x| x == c).unwrap();
            sing.push((i, pos, c));
        }
    }
    sing.sort_unstable();
    LeafData::new(arity, cells, sing.into_iter().map(|t| t.2).collect())
}

/// Type of the ordered sum of finitely many summands, given their types at
/// the same shape over `ctx` context parameters.
pub fn sum_indexed(summands: &[TypeId], shape: &Shape, ctx: usize) -> TypeId {
    assert!(!summands.is_empty());
    debug_assert!(summands.iter().all(|&v| formal_type_membership(v, shape, ctx)));
    sum_indexed_inner(summands, shape, ctx)
}

fn sum_memo() -> &'static Mutex<HashMap<(Vec<TypeId>, Shape, usize), TypeId>> {
    static M: OnceLock<Mutex<HashMap<(Vec<TypeId>, Shape, usize), TypeId>>> = OnceLock::new();
    M.get_or_init(|| Mutex::new(HashMap::new()))
}

fn sum_indexed_inner(summands: &[TypeId], shape: &Shape, ctx: usize) -> TypeId {
    let key = (summands.to_vec(), shape.clone(), ctx);
    {
        let memo = sum_memo().lock().unwrap();
        if let Some(&r) = memo.get(&key) {
            return r;
        }
    }
    let r = sum_impl(summands, shape, ctx);
    sum_memo().lock().unwrap().insert(key, r);
    r
}

fn sum_impl(summands: &[TypeId], shape: &Shape, ctx: usize) -> TypeId {
    if shape.depth() == 0 {
        let leaves: Vec<&LeafData> = summands.iter().map(|&v| leaf(v)).collect();
        intern_leaf(sum_leaves(&leaves))
    } else if shape.set_depth() > 0 {
        let k = shape.outer_arity();
        let inner = shape.inner();
        // Every pointwise choice of summand refinements is realizable.
        let mut cs = Vec::new();
        let mut choice: Vec<usize> = vec![0; summands.len()];
        'outer: loop {
            let parts: Vec<TypeId> =
                summands.iter().enumerate().map(|(i, &v)| children(v)[choice[i]]).collect();
            cs.push(sum_indexed_inner(&parts, &inner, ctx + k));
            for i in 0..summands.len() {
                choice[i] += 1;
                if choice[i] < children(summands[i]).len() {
                    continue 'outer;
                }
                choice[i] = 0;
            }
            break;
        }
        intern_set(cs)
    } else {
        // Element layer: the singleton lies in exactly one summand.
        let m = shape.elem;
        let inner = shape.inner();
        let reduced: Vec<TypeId> = summands
            .iter()
            .map(|&v| value_pad_at(restrict_elem(v, m, ctx), m - 1, ctx))
            .collect();
        let mut cs = Vec::new();
        for (i, &v) in summands.iter().enumerate() {
            for &c in children(v) {
                let mut parts = reduced.clone();
                parts[i] = c;
                cs.push(sum_indexed_inner(&parts, &inner, ctx + 1));
            }
        }
        intern_set(cs)
    }
}

/// Type of `X + Y` from the types of `X` and `Y`.
pub fn sum_binary(a: TypeId, b: TypeId, shape: &Shape, ctx: usize) -> TypeId {
    let key = (a, b, shape.clone(), ctx);
    {
        let memo = sum2_memo().lock().unwrap();
        if let Some(&r) = memo.get(&key) {
            return r;
        }
    }
    let r = sum_indexed_inner(&[a, b], shape, ctx);
    sum2_memo().lock().unwrap().insert(key, r);
    r
}

fn sum2_memo() -> &'static Mutex<HashMap<(TypeId, TypeId, Shape, usize), TypeId>> {
    static M: OnceLock<Mutex<HashMap<(TypeId, TypeId, Shape, usize), TypeId>>> = OnceLock::new();
    M.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Least superset of `seed` closed under binary sums (the finite
/// sub-semigroup generated by the seed); terminates because values of a
/// fixed shape and arity form a finite set.
pub fn closure_under_sum(seed: &[TypeId], shape: &Shape, ctx: usize) -> Vec<TypeId> {
    let mut set: HashSet<TypeId> = seed.iter().copied().collect();
    let mut work: Vec<TypeId> = set.iter().copied().collect();
    while let Some(a) = work.pop() {
        let items: Vec<TypeId> = set.iter().copied().collect();
        for &b in &items {
            for s in [sum_binary(a, b, shape, ctx), sum_binary(b, a, shape, ctx)] {
                if set.insert(s) {
                    work.push(s);
                }
            }
        }
    }
    let mut out: Vec<TypeId> = set.into_iter().collect();
    out.sort_unstable();
    out
}

fn omega_memo() -> &'static Mutex<HashMap<(TypeId, TypeId, Shape, usize), TypeId>> {
    static M: OnceLock<Mutex<HashMap<(TypeId, TypeId, Shape, usize), TypeId>>> = OnceLock::new();
    M.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Type of `s + ∑_{i∈ℕ} u` (an ω-sum with constant repeat) from the types
/// of the prefix `s` and the repeated summand `u` at the same shape.
pub fn omega_sum(s: TypeId, u: TypeId, shape: &Shape, ctx: usize) -> TypeId {
    debug_assert!(formal_type_membership(s, shape, ctx));
    debug_assert!(formal_type_membership(u, shape, ctx));
    if u == empty_value(shape, ctx) {
        return s;
    }
    let key = (s, u, shape.clone(), ctx);
    {
        let memo = omega_memo().lock().unwrap();
        if let Some(&r) = memo.get(&key) {
            return r;
        }
    }
    let r = if shape.depth() == 0 {
        intern_leaf(omega_leaf(leaf(s), leaf(u)))
    } else if shape.set_depth() > 0 {
        let k = shape.outer_arity();
        let inner = shape.inner();
        // A refinement restricts to a child of s on the prefix and to a
        // sequence of children of u on the tail; by Ramsey the tail
        // contributes a finite prefix from the closure of u's children
        // followed by an ω-repetition of a single closure element.  The
        // repeated element may be taken idempotent with the prefix
        // absorbing it (a linked pair): grouping the tail of any
        // factorization into blocks of an idempotent power produces such a
        // pair with the same ω-sum, so the restriction loses no children.
        let cl = closure_under_sum(children(u), &inner, ctx + k);
        let idems: Vec<TypeId> = cl
            .iter()
            .copied()
            .filter(|&e| sum_binary(e, e, &inner, ctx + k) == e)
            .collect();
        let mut cs = Vec::new();
        for &c_s in children(s) {
            let mut prefixes = vec![c_s];
            for &w in &cl {
                prefixes.push(sum_binary(c_s, w, &inner, ctx + k));
            }
            for p in prefixes {
                for &e in &idems {
                    let pe = sum_binary(p, e, &inner, ctx + k);
                    cs.push(omega_sum(pe, e, &inner, ctx + k));
                }
            }
        }
        intern_set(cs)
    } else {
        // Element layer: the singleton is in the prefix or in the j-th
        // copy of u; the accumulated prefix types s↓ + u↓^j cycle.
        let m = shape.elem;
        let inner = shape.inner();
        let u_red = value_pad_at(restrict_elem(u, m, ctx), m - 1, ctx);
        let mut cs = Vec::new();
        for &c_s in children(s) {
            cs.push(omega_sum(c_s, u_red, &inner, ctx + 1));
        }
        let mut seen = HashSet::new();
        let mut acc = value_pad_at(restrict_elem(s, m, ctx), m - 1, ctx);
        while seen.insert(acc) {
            for &c_u in children(u) {
                let p = sum_binary(acc, c_u, &inner, ctx + 1);
                cs.push(omega_sum(p, u_red, &inner, ctx + 1));
            }
            acc = sum_binary(acc, u_red, &inner, ctx + 1);
        }
        intern_set(cs)
    };
    omega_memo().lock().unwrap().insert(key, r);
    r
}

/// Leaf of `s + ∑ u` with `u` nonempty: infinitely many copies make every
/// `u`-inhabited cell infinite, kill the greatest element, and turn the
/// meager rule into a countable conjunction (first copy of `u` vs later
/// copies differ only in their left-healing discount).
fn omega_leaf(s: &LeafData, u: &LeafData) -> LeafData {
    assert!(!u.is_empty_structure());
    let arity = s.arity;
    assert_eq!(arity, u.arity);
    let s_nonempty = !s.is_empty_structure();
    let dmax_all = !u.has_gmin();
    let dmin_u_first = if s_nonempty { !s.has_gmax() } else { false };
    let dmin_u_later = !u.has_gmax();
    let ncells = 1usize << arity;
    let mut cells = Vec::with_capacity(ncells);
    for c in 0..ncells {
        let card = if u.cells[c].card != Card::Zero { Card::Many } else { s.cells[c].card };
        let has_gmin =
            if s_nonempty { s.cells[c].has_gmin } else { u.cells[c].has_gmin };
        let tm = |extra_min: bool| {
            let s_part = !s_nonempty || s.trace_meager(c, extra_min && s_nonempty, dmax_all);
            let u_first =
                u.trace_meager(c, dmin_u_first || (extra_min && !s_nonempty), dmax_all);
            let u_later = u.trace_meager(c, dmin_u_later, dmax_all);
            s_part && u_first && u_later
        };
        let meager = tm(false);
        let rest_min = tm(true);
        cells.push(CellInfo {
            card,
            meager,
            has_gmin,
            has_gmax: false,
            rest_min_meager: rest_min,
            rest_max_meager: meager,
            rest_both_meager: rest_min,
        });
    }
    let sing: Vec<usize> = s
        .sing_order
        .iter()
        .copied()
        .filter(|&c| u.cells[c].card == Card::Zero)
        .collect();
    LeafData::new(arity, cells, sing)
}

/// Type of `(∑_{i∈ℕ*} u) + s`: the order dual of an ω-sum.
pub fn omega_dual_sum(s: TypeId, u: TypeId, shape: &Shape, ctx: usize) -> TypeId {
    let d = shape.depth();
    value_mirror(omega_sum(value_mirror(s, d), value_mirror(u, d), shape, ctx), d)
}

/// Type of the ℤ-indexed sum of constant `u`: an ω-dual sum followed by an
/// ω-sum.
pub fn zeta_sum(u: TypeId, shape: &Shape, ctx: usize) -> TypeId {
    let e = empty_value(shape, ctx);
    let left = omega_dual_sum(e, u, shape, ctx);
    let right = omega_sum(e, u, shape, ctx);
    sum_binary(left, right, shape, ctx)
}

/// Ambient infinite structures built from points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    N,
    Ndual,
    Z,
}

/// `Th` of ℕ, its order dual, or ℤ at the given shape.
pub fn theory_of_n_z(variant: Variant, shape: &Shape) -> TypeId {
    let point = point_value(shape, 0, 0);
    let e = empty_value(shape, 0);
    match variant {
        Variant::N => omega_sum(e, point, shape, 0),
        Variant::Ndual => omega_dual_sum(e, point, shape, 0),
        Variant::Z => zeta_sum(point, shape, 0),
    }
}

/// The uniform table of finite orders at a shape: `table[n]` is the type
/// of `{1..n}`, with the pigeonhole period `(p, q)` (so the type for any
/// `n >= p` is `table[p + (n - p) % q]`), plus the set of types of all
/// nonempty finite colored orders over `ctx` context colors (the closure
/// of the point types under binary sums).
pub struct FiniteTable {
    pub p: usize,
    pub q: usize,
    pub table: Vec<TypeId>,
    pub all_nonempty: Vec<TypeId>,
}

impl FiniteTable {
    pub fn lookup(&self, n: usize) -> TypeId {
        if n < self.p + self.q {
            self.table[n]
        } else {
            self.table[self.p + (n - self.p) % self.q]
        }
    }
}

pub fn finite_order_table(shape: &Shape, ctx: usize) -> FiniteTable {
    let point = point_value(shape, ctx, 0);
    let mut table = vec![empty_value(shape, ctx)];
    let mut index: HashMap<TypeId, usize> = HashMap::new();
    index.insert(table[0], 0);
    let (p, q) = loop {
        let next = sum_binary(*table.last().unwrap(), point, shape, ctx);
        if let Some(&p) = index.get(&next) {
            break (p, table.len() - p);
        }
        index.insert(next, table.len());
        table.push(next);
    };
    let points: Vec<TypeId> =
        (0..1usize << ctx).map(|mask| point_value(shape, ctx, mask)).collect();
    let all_nonempty = closure_under_sum(&points, shape, ctx);
    FiniteTable { p, q, table, all_nonempty }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::eval_type_finite;

    fn shapes() -> Vec<Shape> {
        vec![
            Shape::leaf(),
            Shape::pure(vec![1]),
            Shape::pure(vec![2]),
            Shape::pure(vec![1, 1]),
            Shape::new(1, vec![]),
            Shape::new(2, vec![]),
            Shape::new(1, vec![1]),
        ]
    }

    /// Iterated binary sums of points reproduce the oracle on small orders.
    #[test]
    fn binary_sums_match_oracle() {
        for shape in shapes() {
            for ctx_masks in [vec![], vec![0b010u64], vec![0b101u64]] {
                let ctx = ctx_masks.len();
                for n in 0..=3usize {
                    let mut acc = empty_value(&shape, ctx);
                    for i in 0..n {
                        let mask: usize =
                            ctx_masks.iter().enumerate().map(|(j, &m)| (((m >> i) & 1) as usize) << j).sum();
                        acc = sum_binary(acc, point_value(&shape, ctx, mask), &shape, ctx);
                    }
                    let masks: Vec<u64> =
                        ctx_masks.iter().map(|&m| m & ((1 << n) - 1)).collect();
                    let direct = eval_type_finite(n, &shape, &masks).unwrap();
                    assert_eq!(acc, direct, "shape {shape}, n={n}, ctx={ctx_masks:?}");
                }
            }
        }
    }

    #[test]
    fn empty_is_identity() {
        let shape = Shape::new(1, vec![1]);
        let e = empty_value(&shape, 0);
        let p = point_value(&shape, 0, 0);
        assert_eq!(sum_binary(p, e, &shape, 0), p);
        assert_eq!(sum_binary(e, p, &shape, 0), p);
    }

    #[test]
    fn sums_are_associative_on_points() {
        let shape = Shape::pure(vec![1, 1]);
        let p = point_value(&shape, 0, 0);
        let ab = sum_binary(p, p, &shape, 0);
        assert_eq!(
            sum_binary(ab, p, &shape, 0),
            sum_binary(p, ab, &shape, 0)
        );
    }

    #[test]
    fn table_periodicity_is_sound() {
        for shape in [Shape::pure(vec![1]), Shape::new(1, vec![1])] {
            let t = finite_order_table(&shape, 0);
            let point = point_value(&shape, 0, 0);
            let mut acc = empty_value(&shape, 0);
            for n in 0..t.p + 3 * t.q {
                assert_eq!(acc, t.lookup(n), "shape {shape}, n={n}");
                acc = sum_binary(acc, point, &shape, 0);
            }
        }
    }

    #[test]
    fn omega_sum_shift_invariance() {
        for shape in [Shape::pure(vec![1]), Shape::new(1, vec![1]), Shape::new(2, vec![])] {
            let e = empty_value(&shape, 0);
            let p = point_value(&shape, 0, 0);
            let w = omega_sum(e, p, &shape, 0);
            let shifted = omega_sum(p, p, &shape, 0);
            assert_eq!(w, shifted, "shape {shape}");
            // Absorbing a whole ω-tail's worth of prefix also fixes it.
            let pp = sum_binary(p, p, &shape, 0);
            assert_eq!(omega_sum(pp, p, &shape, 0), w);
        }
    }

    #[test]
    fn leaf_facts_of_infinite_structures() {
        let n = theory_of_n_z(Variant::N, &Shape::leaf());
        let l = leaf(n);
        assert_eq!(l.cells[0].card, Card::Many);
        assert!(l.cells[0].has_gmin && !l.cells[0].has_gmax);
        // ℕ is discrete: the whole structure is nonmeager.
        assert!(!l.cells[0].meager);

        let nd = theory_of_n_z(Variant::Ndual, &Shape::leaf());
        let l = leaf(nd);
        assert!(!l.cells[0].has_gmin && l.cells[0].has_gmax);

        let z = theory_of_n_z(Variant::Z, &Shape::leaf());
        let l = leaf(z);
        assert!(!l.cells[0].has_gmin && !l.cells[0].has_gmax);
        assert!(!l.cells[0].meager);
    }

    #[test]
    fn omega_of_points_has_no_top_refinement_with_max() {
        // Every child of Th_(1)(ℕ) describes (ℕ, X); none may claim a
        // greatest element, and some X is neither empty nor everything.
        let shape = Shape::pure(vec![1]);
        let n = theory_of_n_z(Variant::N, &shape);
        let mut nontrivial = false;
        for &c in children(n) {
            let l = leaf(c);
            assert!(!l.has_gmax());
            if l.cells[0].card == Card::Many && l.cells[1].card == Card::Many {
                nontrivial = true;
            }
        }
        assert!(nontrivial);
    }

    #[test]
    fn n_dual_and_z_are_distinct_from_n() {
        let shape = Shape::pure(vec![1]);
        let n = theory_of_n_z(Variant::N, &shape);
        let nd = theory_of_n_z(Variant::Ndual, &shape);
        let z = theory_of_n_z(Variant::Z, &shape);
        assert_ne!(n, nd);
        assert_ne!(n, z);
        assert_ne!(nd, z);
    }
}
