//! Coarse types: the calculus that decides which colorings of the real
//! line (up to meager perturbation) are possible.
//!
//! A coarse type of level 0 over a color set records which color is
//! comeager and which colors occur densely.  A type of level n+1 adds the
//! set of types of its n-uniform Cantor subsets; a Cantor subset of a set
//! colored over I is colored over I ⊔ I×I, jumps of the subset receiving
//! the pair of colors of their endpoints.  Satisfiable types are exactly
//! the values of constructions — iterated uniform sums of Cantor-set
//! summands over an ambient comeager color — and the value of a uniform
//! sum is computable from the 0-type and the summand types alone, which
//! yields the enumeration of all satisfiable types at a level.
//!
//! Color convention: the color set of size m is `0..m`; the expanded set
//! I ⊔ I×I has size m+m², with the jump color (a,b) at index m+a·m+b.
//! Every Cantor set under discussion lives in the same ambient line, so
//! the types of iterated Cantor subsets stabilize at the once-expanded
//! color set; they are stored in the structurally expanded shape through
//! the embedding of I ⊔ I×I into its own expansion, which the jump
//! relabeling inverts exactly.

use crate::error::{EngineError, Result};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{LazyLock, Mutex};

/// Size of the expanded color set I ⊔ I×I.
pub fn expand(m: usize) -> usize {
    m + m * m
}

/// Index of the jump color (a,b) over a base set of size m.
pub fn jump_color(m: usize, a: usize, b: usize) -> usize {
    m + a * m + b
}

/// Whether `c` is a jump color of the expansion of a size-m base set.
pub fn is_jump(m: usize, c: usize) -> bool {
    c >= m
}

/// The endpoint pair of a jump color.
pub fn jump_parts(m: usize, c: usize) -> (usize, usize) {
    ((c - m) / m, (c - m) % m)
}

/// A level-0 coarse type: the comeager color and the dense colors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coarse0 {
    pub colors: usize,
    pub comeager: usize,
    pub realized: BTreeSet<usize>,
}

impl Coarse0 {
    pub fn new(colors: usize, comeager: usize, realized: impl IntoIterator<Item = usize>) -> Coarse0 {
        let realized: BTreeSet<usize> = realized.into_iter().collect();
        assert!(comeager < colors && realized.iter().all(|&c| c < colors));
        Coarse0 { colors, comeager, realized }
    }
}

/// A coarse type: a 0-type plus, at positive levels, the set of types of
/// its uniform Cantor subsets (over the expanded color set).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoarseType {
    pub colors: usize,
    pub level: usize,
    pub base: Coarse0,
    pub cantors: BTreeSet<CoarseType>,
}

impl CoarseType {
    pub fn level0(base: Coarse0) -> CoarseType {
        CoarseType { colors: base.colors, level: 0, base, cantors: BTreeSet::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base.colors != self.colors {
            return Err(EngineError::Malformed("0-type color set mismatch".into()));
        }
        if self.level == 0 && !self.cantors.is_empty() {
            return Err(EngineError::Malformed("level-0 type with Cantor subsets".into()));
        }
        for s in &self.cantors {
            if s.colors != expand(self.colors) || s.level + 1 != self.level {
                return Err(EngineError::Malformed("Cantor subset at wrong colors or level".into()));
            }
            s.validate()?;
        }
        Ok(())
    }
}

/// The order on coarse types: equal 0-types and inclusion of the realized
/// Cantor sets.
pub fn le_coarse(s: &CoarseType, t: &CoarseType) -> bool {
    s.level == t.level && s.base == t.base && s.cantors.is_subset(&t.cantors)
}

/// A 0-type is satisfiable iff its comeager color is realized.
pub fn satisfiable0(t: &Coarse0) -> bool {
    t.realized.contains(&t.comeager)
}

/// A 0-type over an expanded set is satisfiable by a Cantor set iff some
/// jump color is realized and the comeager color is not a jump color.
pub fn cantor_satisfiable0(t: &Coarse0, m: usize) -> bool {
    assert_eq!(t.colors, expand(m));
    satisfiable0(t) && !is_jump(m, t.comeager) && t.realized.iter().any(|&c| is_jump(m, c))
}

/// Restriction t|k: forget the levels above k.
pub fn coarse_restrict(t: &CoarseType, k: usize) -> CoarseType {
    assert!(k <= t.level);
    if k == t.level {
        return t.clone();
    }
    let cantors = if k == 0 {
        BTreeSet::new()
    } else {
        t.cantors.iter().map(|s| coarse_restrict(s, k - 1)).collect()
    };
    CoarseType { colors: t.colors, level: k, base: t.base.clone(), cantors }
}

/// Coarsens a type along a total color map (given as `map[j] = i`),
/// recursing along the induced jump maps.
pub fn coarsen_along(t: &CoarseType, map: &[usize], target: usize) -> CoarseType {
    assert_eq!(map.len(), t.colors);
    assert!(map.iter().all(|&i| i < target));
    let opt: Vec<Option<usize>> = map.iter().map(|&i| Some(i)).collect();
    coarsen_partial(t, &opt, target).expect("total maps cannot fail")
}

/// Coarsens along a partial color map; errors if a color in use has no
/// image.
fn coarsen_partial(t: &CoarseType, map: &[Option<usize>], target: usize) -> Result<CoarseType> {
    let get = |c: usize| {
        map[c].ok_or_else(|| EngineError::IllegalColor(format!("color {c} has no image")))
    };
    let comeager = get(t.base.comeager)?;
    let realized = t.base.realized.iter().map(|&c| get(c)).collect::<Result<BTreeSet<_>>>()?;
    // Induced map on the expansions.
    let m = t.colors;
    let mut inner: Vec<Option<usize>> = Vec::with_capacity(expand(m));
    for c in 0..expand(m) {
        inner.push(if c < m {
            map[c]
        } else {
            let (a, b) = jump_parts(m, c);
            match (map[a], map[b]) {
                (Some(fa), Some(fb)) => Some(jump_color(target, fa, fb)),
                _ => None,
            }
        });
    }
    let cantors = t
        .cantors
        .iter()
        .map(|s| coarsen_partial(s, &inner, expand(target)))
        .collect::<Result<BTreeSet<_>>>()?;
    Ok(CoarseType {
        colors: target,
        level: t.level,
        base: Coarse0 { colors: target, comeager, realized },
        cantors,
    })
}

/// Relabels a type over the expansion of K = I ⊔ I×I back to K: identity
/// on K, jump colors with both endpoints in I map to the jump color of K,
/// all other colors are illegal (no fiber has three or more points).
pub fn relabel_jump_colors(t: &CoarseType, m: usize) -> Result<CoarseType> {
    let k = expand(m);
    assert_eq!(t.colors, expand(k));
    let mut map: Vec<Option<usize>> = Vec::with_capacity(expand(k));
    for c in 0..expand(k) {
        map.push(if c < k {
            Some(c)
        } else {
            let (a, b) = jump_parts(k, c);
            if a < m && b < m { Some(jump_color(m, a, b)) } else { None }
        });
    }
    coarsen_partial(t, &map, k)
}

/// Embeds a type over K into the expansion of K (identity on colors,
/// reindexing jumps); inverse to `relabel_jump_colors` on its image.
fn inject_expand(t: &CoarseType) -> CoarseType {
    let k = t.colors;
    let map: Vec<usize> = (0..k).collect();
    coarsen_along(t, &map, expand(k))
}

/// The types of uniform Cantor subsets of a Cantor set of type `t` (base
/// color set of size m): the jump relabeling of each realized Cantor set.
pub fn ucsub(t: &CoarseType, m: usize) -> Result<BTreeSet<CoarseType>> {
    assert!(t.level >= 1);
    static CACHE: LazyLock<Mutex<HashMap<(CoarseType, usize), BTreeSet<CoarseType>>>> =
        LazyLock::new(|| Mutex::new(HashMap::new()));
    if let Some(hit) = CACHE.lock().unwrap().get(&(t.clone(), m)) {
        return Ok(hit.clone());
    }
    let desc: BTreeSet<CoarseType> = t
        .cantors
        .iter()
        .map(|s| relabel_jump_colors(s, m))
        .collect::<Result<_>>()?;
    // The full description also lists the restriction of t itself; for
    // satisfiable types it is redundant (a sum contains a meager copy of
    // its own restriction), which we check.
    if !t.cantors.is_empty() {
        debug_assert!(
            desc.contains(&coarse_restrict(t, t.level - 1)),
            "restriction of a satisfiable type must appear among its Cantor subsets"
        );
    }
    CACHE.lock().unwrap().insert((t.clone(), m), desc.clone());
    Ok(desc)
}

/// Colors available to Cantor subsets of a set with the given realized
/// colors: the realized colors themselves and jumps whose two endpoint
/// colors are realized base colors.
fn usable_colors(realized: &BTreeSet<usize>, m: usize) -> BTreeSet<usize> {
    let mut out = realized.clone();
    for &a in realized.iter().filter(|&&c| c < m) {
        for &b in realized.iter().filter(|&&c| c < m) {
            out.insert(jump_color(m, a, b));
        }
    }
    out
}

/// A pseudo-countable color: not comeager, and recursively not comeager
/// in any realized Cantor set (such a color is countable in some
/// realization).
pub fn pseudo_countable(t: &CoarseType, c: usize) -> bool {
    // Base colors keep their index in the expanded set of the subsets.
    c != t.base.comeager && t.cantors.iter().all(|s| pseudo_countable(s, c))
}

/// Whether a (constructible) type over an expanded color set is
/// satisfiable by a Cantor set: some jump color realized, all realized
/// jump colors pseudo-countable.  Depends only on the restriction to
/// level 1, which is asserted.
pub fn cantor_satisfiable(t: &CoarseType, m: usize) -> bool {
    assert_eq!(t.colors, expand(m));
    let verdict = cantor_satisfiable0(&t.base, m)
        && t.base.realized.iter().filter(|&&c| is_jump(m, c)).all(|&c| pseudo_countable(t, c));
    if t.level > 1 {
        debug_assert_eq!(verdict, cantor_satisfiable(&coarse_restrict(t, 1), m));
    }
    verdict
}

/// The coarse type of a uniform sum: ambient 0-type `t0` over m colors,
/// summands `ts` Cantor-satisfiable types over the expanded set at level
/// n.  The realized Cantor sets are the least set containing the Cantor
/// subsets of the summands and closed under uniform sums of subsets
/// thereof with an admissible 0-type (same comeager color, realized
/// colors between the chosen summands' and the ambient's).
pub fn uniform_sum(t0: &Coarse0, ts: &[CoarseType], n: usize) -> Result<CoarseType> {
    let m = t0.colors;
    if !satisfiable0(t0) {
        return Err(EngineError::Malformed("ambient 0-type is unsatisfiable".into()));
    }
    let usable = usable_colors(&t0.realized, m);
    for t in ts {
        if t.colors != expand(m) || t.level != n {
            return Err(EngineError::Malformed("summand at wrong colors or level".into()));
        }
        if !cantor_satisfiable(t, m) {
            return Err(EngineError::Malformed("summand is not Cantor-satisfiable".into()));
        }
        if !t.base.realized.is_subset(&usable) {
            return Err(EngineError::Malformed(
                "summand realizes a color unavailable in the ambient 0-type".into(),
            ));
        }
    }
    if n == 0 {
        return Ok(CoarseType::level0(t0.clone()));
    }
    let mut pool: BTreeSet<CoarseType> = BTreeSet::new();
    for t in ts {
        pool.extend(ucsub(t, m)?);
    }
    let cantors = close_realized(t0.comeager, &usable, &pool, m, n - 1)?;
    Ok(CoarseType { colors: m, level: n, base: t0.clone(), cantors })
}

/// The set of realized Cantor sets of a uniform sum: the pool (Cantor
/// subsets of the summands) plus, for every subset of the pool and every
/// admissible Cantor-satisfiable 0-type, the type of a uniform sum of
/// that subset one level down.  The value of such a sum depends on the
/// subset only through its Cantor subsets and realized colors, so subsets
/// are enumerated up to that equivalence.
fn close_realized(
    comeager: usize,
    usable: &BTreeSet<usize>,
    pool: &BTreeSet<CoarseType>,
    m: usize,
    level: usize,
) -> Result<BTreeSet<CoarseType>> {
    type Key = (usize, BTreeSet<usize>, BTreeSet<CoarseType>, usize, usize);
    static CACHE: LazyLock<Mutex<HashMap<Key, BTreeSet<CoarseType>>>> =
        LazyLock::new(|| Mutex::new(HashMap::new()));
    let key = (comeager, usable.clone(), pool.clone(), m, level);
    if let Some(hit) = CACHE.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let out = close_realized_uncached(comeager, usable, pool, m, level)?;
    CACHE.lock().unwrap().insert(key, out.clone());
    Ok(out)
}

fn close_realized_uncached(
    comeager: usize,
    usable: &BTreeSet<usize>,
    pool: &BTreeSet<CoarseType>,
    m: usize,
    level: usize,
) -> Result<BTreeSet<CoarseType>> {
    let mut out = pool.clone();
    if level == 0 {
        // A level-0 sum is its 0-type alone, so the empty subset already
        // admits every admissible 0-type and larger subsets add nothing.
        for t0c in admissible_0types(comeager, usable, &BTreeSet::new(), m) {
            out.insert(CoarseType::level0(t0c));
        }
        return Ok(out);
    }
    // For each admissible 0-type, a subset of the pool is available iff
    // every chosen member's realized colors are realized by the 0-type,
    // and the sum depends on the subset only through the union of the
    // members' Cantor-subset sets.
    for t0c in admissible_0types(comeager, usable, &BTreeSet::new(), m) {
        let mut gens: BTreeSet<BTreeSet<CoarseType>> = BTreeSet::new();
        for t in pool.iter().filter(|t| t.base.realized.is_subset(&t0c.realized)) {
            gens.insert(ucsub(t, m)?);
        }
        let mut closure: BTreeSet<BTreeSet<CoarseType>> = BTreeSet::new();
        closure.insert(BTreeSet::new());
        let mut frontier: Vec<BTreeSet<CoarseType>> = vec![BTreeSet::new()];
        while let Some(u) = frontier.pop() {
            for g in &gens {
                let mut bigger = u.clone();
                bigger.extend(g.iter().cloned());
                if closure.insert(bigger.clone()) {
                    if closure.len() > MAX_UNIONS {
                        return Err(EngineError::Budget(format!(
                            "more than {MAX_UNIONS} distinct summand-set unions"
                        )));
                    }
                    frontier.push(bigger);
                }
            }
        }
        for union in closure {
            out.insert(cantor_sum(&t0c, &union, m, level)?);
        }
    }
    Ok(out)
}

/// Enumerates the Cantor-satisfiable 0-types over the expanded set with
/// the given comeager color and realized colors between `required` and
/// `usable`.
fn admissible_0types(
    comeager: usize,
    usable: &BTreeSet<usize>,
    required: &BTreeSet<usize>,
    m: usize,
) -> Vec<Coarse0> {
    if !required.is_subset(usable) || is_jump(m, comeager) || !usable.contains(&comeager) {
        return Vec::new();
    }
    let free: Vec<usize> =
        usable.iter().copied().filter(|c| !required.contains(c) && *c != comeager).collect();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << free.len()) {
        let mut realized = required.clone();
        realized.insert(comeager);
        for (i, &c) in free.iter().enumerate() {
            if mask >> i & 1 == 1 {
                realized.insert(c);
            }
        }
        let t = Coarse0 { colors: expand(m), comeager, realized };
        if cantor_satisfiable0(&t, m) {
            out.push(t);
        }
    }
    out.sort();
    out.dedup();
    out
}

/// The type of a Cantor set that is a uniform sum over its own 0-type;
/// `pool` holds the Cantor subsets of the summands, one level below the
/// result.
fn cantor_sum(
    t0c: &Coarse0,
    pool: &BTreeSet<CoarseType>,
    m: usize,
    level: usize,
) -> Result<CoarseType> {
    if level == 0 {
        return Ok(CoarseType::level0(t0c.clone()));
    }
    type Key = (Coarse0, BTreeSet<CoarseType>, usize, usize);
    static CACHE: LazyLock<Mutex<HashMap<Key, CoarseType>>> =
        LazyLock::new(|| Mutex::new(HashMap::new()));
    let key = (t0c.clone(), pool.clone(), m, level);
    if let Some(hit) = CACHE.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let usable = usable_colors(&t0c.realized, m);
    let inner = close_realized(t0c.comeager, &usable, pool, m, level - 1)?;
    let cantors = inner.iter().map(inject_expand).collect();
    let out = CoarseType { colors: expand(m), level, base: t0c.clone(), cantors };
    CACHE.lock().unwrap().insert(key, out.clone());
    Ok(out)
}

/// A construction: a satisfiable 0-type and child constructions whose
/// values are the Cantor-set summands.  The root 0-type ranges over the
/// base colors, every deeper 0-type over the expanded set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Construction {
    pub t0: Coarse0,
    pub children: Vec<Construction>,
}

impl Construction {
    pub fn rank(&self) -> usize {
        self.children.iter().map(|c| c.rank() + 1).max().unwrap_or(0)
    }
}

/// The value of a construction at level n over its root color set.
pub fn construction_value(c: &Construction, n: usize) -> Result<CoarseType> {
    let m = c.t0.colors;
    let ts = c
        .children
        .iter()
        .map(|ch| cantor_value(ch, n, m))
        .collect::<Result<Vec<_>>>()?;
    uniform_sum(&c.t0, &ts, n)
}

/// The value of a child construction as a Cantor-set type over the
/// expanded set.
fn cantor_value(c: &Construction, n: usize, m: usize) -> Result<CoarseType> {
    if c.t0.colors != expand(m) {
        return Err(EngineError::Malformed("child 0-type over the wrong color set".into()));
    }
    if !cantor_satisfiable0(&c.t0, m) {
        return Err(EngineError::Malformed("child 0-type is not Cantor-satisfiable".into()));
    }
    let usable = usable_colors(&c.t0.realized, m);
    let mut pool: BTreeSet<CoarseType> = BTreeSet::new();
    for ch in &c.children {
        let v = cantor_value(ch, n, m)?;
        if !v.base.realized.is_subset(&usable) {
            return Err(EngineError::Malformed(
                "child realizes a color unavailable in its parent".into(),
            ));
        }
        if !cantor_satisfiable(&v, m) {
            return Err(EngineError::Malformed("child value is not Cantor-satisfiable".into()));
        }
        pool.extend(ucsub(&v, m)?);
    }
    cantor_sum(&c.t0, &pool, m, n)
}

/// The unique 1-minimal type one level above the value of `c`: the same
/// construction read at the next level.
pub fn minimal_lift(t: &CoarseType, c: &Construction) -> Result<CoarseType> {
    let lift = construction_value(c, t.level + 1)?;
    if coarse_restrict(&lift, t.level) != *t {
        return Err(EngineError::Malformed(
            "the construction does not construct the given type".into(),
        ));
    }
    Ok(lift)
}

/// Enumeration budget.
pub const MAX_COARSE_LEVEL: usize = 2;
pub const MAX_COARSE_COLORS: usize = 2;

fn check_budget(n: usize, m: usize) -> Result<()> {
    // Level 0 is a direct enumeration and stays cheap up to many colors;
    // from level 1 on the type sets blow up with the color count.
    let max_m = if n == 0 { 16 } else { MAX_COARSE_COLORS };
    if n > MAX_COARSE_LEVEL || m > max_m {
        return Err(EngineError::Budget(format!(
            "coarse enumeration at level {n} over {m} colors exceeds the budget \
             (level <= {MAX_COARSE_LEVEL}, colors <= {max_m} at this level)"
        )));
    }
    Ok(())
}

/// All satisfiable coarse types at level n over m colors, with a
/// construction for each.
pub fn satisfiable_with_constructions(
    n: usize,
    m: usize,
) -> Result<Vec<(CoarseType, Construction)>> {
    static CACHE: LazyLock<Mutex<HashMap<(usize, usize), Vec<(CoarseType, Construction)>>>> =
        LazyLock::new(|| Mutex::new(HashMap::new()));
    if let Some(hit) = CACHE.lock().unwrap().get(&(n, m)) {
        return Ok(hit.clone());
    }
    let out = satisfiable_with_constructions_uncached(n, m)?;
    CACHE.lock().unwrap().insert((n, m), out.clone());
    Ok(out)
}

fn satisfiable_with_constructions_uncached(
    n: usize,
    m: usize,
) -> Result<Vec<(CoarseType, Construction)>> {
    check_budget(n, m)?;
    if n == 0 {
        let mut out = Vec::new();
        for t0 in all_satisfiable0(m) {
            out.push((CoarseType::level0(t0.clone()), Construction { t0, children: vec![] }));
        }
        return Ok(out);
    }
    let pool = cantor_pool(n, m)?;
    let mut seen: BTreeMap<CoarseType, Construction> = BTreeMap::new();
    for t0 in all_satisfiable0(m) {
        let usable = usable_colors(&t0.realized, m);
        // The value depends on the chosen summands only through the union
        // of their Cantor-subset sets, so enumerate achievable unions.
        for (union, children) in achievable_unions(&pool, &usable, m)? {
            let cantors = close_realized(t0.comeager, &usable, &union, m, n - 1)?;
            let value = CoarseType { colors: m, level: n, base: t0.clone(), cantors };
            seen.entry(value).or_insert_with(|| Construction {
                t0: t0.clone(),
                children: children.iter().map(|&c| c.clone()).collect(),
            });
        }
    }
    Ok(seen.into_iter().collect())
}

/// Cap on the number of distinct summand-set unions enumerated.
const MAX_UNIONS: usize = 1 << 14;

/// All unions of Cantor-subset sets over subsets of the eligible pool,
/// each with a witnessing choice of summand constructions.
fn achievable_unions<'a>(
    pool: &'a [(CoarseType, Construction)],
    usable: &BTreeSet<usize>,
    m: usize,
) -> Result<Vec<(BTreeSet<CoarseType>, Vec<&'a Construction>)>> {
    let mut gens: BTreeMap<BTreeSet<CoarseType>, &Construction> = BTreeMap::new();
    for (v, c) in pool.iter().filter(|(v, _)| v.base.realized.is_subset(usable)) {
        gens.entry(ucsub(v, m)?).or_insert(c);
    }
    let mut closure: BTreeMap<BTreeSet<CoarseType>, Vec<&Construction>> = BTreeMap::new();
    closure.insert(BTreeSet::new(), Vec::new());
    let mut frontier: Vec<BTreeSet<CoarseType>> = vec![BTreeSet::new()];
    while let Some(u) = frontier.pop() {
        for (g, c) in &gens {
            let mut bigger = u.clone();
            bigger.extend(g.iter().cloned());
            if !closure.contains_key(&bigger) {
                let mut children = closure[&u].clone();
                children.push(*c);
                closure.insert(bigger.clone(), children);
                if closure.len() > MAX_UNIONS {
                    return Err(EngineError::Budget(format!(
                        "more than {MAX_UNIONS} distinct summand-set unions"
                    )));
                }
                frontier.push(bigger);
            }
        }
    }
    Ok(closure.into_iter().collect())
}

/// All satisfiable coarse types at level n over m colors.
pub fn satisfiable_coarse(n: usize, m: usize) -> Result<Vec<CoarseType>> {
    Ok(satisfiable_with_constructions(n, m)?.into_iter().map(|(v, _)| v).collect())
}

fn all_satisfiable0(m: usize) -> Vec<Coarse0> {
    let mut out = Vec::new();
    for comeager in 0..m {
        for mask in 0u64..(1u64 << m) {
            let realized: BTreeSet<usize> = (0..m).filter(|&c| mask >> c & 1 == 1).collect();
            let t = Coarse0 { colors: m, comeager, realized };
            if satisfiable0(&t) {
                out.push(t);
            }
        }
    }
    out
}

/// The 1-minimal Cantor-satisfiable level-n values available as summands
/// over the base set of size m: minimal lifts of the satisfiable
/// level-(n−1) Cantor-set types.
fn cantor_pool(n: usize, m: usize) -> Result<Vec<(CoarseType, Construction)>> {
    let prev = satisfiable_cantor_types(n - 1, m)?;
    let mut out = Vec::new();
    for (v, c) in prev {
        let lift = cantor_value(&c, n, m)?;
        debug_assert_eq!(coarse_restrict(&lift, n - 1), v);
        if cantor_satisfiable(&lift, m) {
            out.push((lift, c));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// All satisfiable Cantor-set types at level q over the expansion of a
/// size-m base set, with constructions.
pub fn satisfiable_cantor_types(
    q: usize,
    m: usize,
) -> Result<Vec<(CoarseType, Construction)>> {
    static CACHE: LazyLock<Mutex<HashMap<(usize, usize), Vec<(CoarseType, Construction)>>>> =
        LazyLock::new(|| Mutex::new(HashMap::new()));
    if let Some(hit) = CACHE.lock().unwrap().get(&(q, m)) {
        return Ok(hit.clone());
    }
    let out = satisfiable_cantor_types_uncached(q, m)?;
    CACHE.lock().unwrap().insert((q, m), out.clone());
    Ok(out)
}

fn satisfiable_cantor_types_uncached(
    q: usize,
    m: usize,
) -> Result<Vec<(CoarseType, Construction)>> {
    check_budget(q, m)?;
    if q == 0 {
        let mut out = Vec::new();
        for comeager in 0..m {
            for mask in 0u64..(1u64 << expand(m)) {
                let realized: BTreeSet<usize> =
                    (0..expand(m)).filter(|&c| mask >> c & 1 == 1).collect();
                let t = Coarse0 { colors: expand(m), comeager, realized };
                if cantor_satisfiable0(&t, m) {
                    out.push((
                        CoarseType::level0(t.clone()),
                        Construction { t0: t, children: vec![] },
                    ));
                }
            }
        }
        return Ok(out);
    }
    let pool = cantor_pool(q, m)?;
    let mut seen: BTreeMap<CoarseType, Construction> = BTreeMap::new();
    for (t0v, _) in satisfiable_cantor_types(0, m)? {
        let t0c = t0v.base;
        let usable = usable_colors(&t0c.realized, m);
        for (union, children) in achievable_unions(&pool, &usable, m)? {
            let value = cantor_sum(&t0c, &union, m, q)?;
            seen.entry(value).or_insert_with(|| Construction {
                t0: t0c.clone(),
                children: children.iter().map(|&c| c.clone()).collect(),
            });
        }
    }
    Ok(seen.into_iter().collect())
}

/// The coarse types of uniform refinements of a realization of `t` along
/// the color map: the satisfiable types over the finer set that coarsen
/// to `t`.
pub fn refinement_types(t: &CoarseType, map: &[usize]) -> Result<Vec<CoarseType>> {
    assert!(map.iter().all(|&i| i < t.colors));
    Ok(satisfiable_coarse(t.level, map.len())?
        .into_iter()
        .filter(|s| coarsen_along(s, map, t.colors) == *t)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c0(m: usize, com: usize, r: &[usize]) -> Coarse0 {
        Coarse0::new(m, com, r.iter().copied())
    }

    #[test]
    fn satisfiable_zero_types_are_counted() {
        assert!(satisfiable0(&c0(1, 0, &[0])));
        assert!(!satisfiable0(&c0(2, 0, &[1])));
        for m in 1..=4 {
            let n = all_satisfiable0(m).len();
            assert_eq!(n, m * (1 << (m - 1)), "m={m}");
        }
    }

    #[test]
    fn cantor_satisfiable_zero_types() {
        // One base color: expansion {0, jump(0,0)=1}.
        assert!(cantor_satisfiable0(&c0(2, 0, &[0, 1]), 1));
        assert!(!cantor_satisfiable0(&c0(2, 0, &[0]), 1)); // no realized jump
        assert!(!cantor_satisfiable0(&c0(2, 1, &[1]), 1)); // comeager is a jump
    }

    #[test]
    fn restriction_is_a_retraction() {
        let t = construction_value(
            &Construction { t0: c0(1, 0, &[0]), children: vec![] },
            2,
        )
        .unwrap();
        assert_eq!(coarse_restrict(&t, t.level), t);
        assert_eq!(coarse_restrict(&coarse_restrict(&t, 1), 0), coarse_restrict(&t, 0));
        assert_eq!(coarse_restrict(&t, 0).base, t.base);
    }

    #[test]
    fn coarsen_along_identity_and_collapse() {
        for (t, _) in satisfiable_with_constructions(1, 2).unwrap() {
            let id: Vec<usize> = (0..2).collect();
            assert_eq!(coarsen_along(&t, &id, 2), t);
            let collapsed = coarsen_along(&t, &[0, 0], 1);
            assert!(satisfiable_coarse(1, 1).unwrap().contains(&collapsed));
        }
    }

    #[test]
    fn relabel_inverts_injection() {
        for (t, _) in satisfiable_cantor_types(1, 1).unwrap() {
            let inj = inject_expand(&t);
            assert_eq!(relabel_jump_colors(&inj, 1).unwrap(), t);
        }
    }

    #[test]
    fn relabel_rejects_deep_jump_colors() {
        // A jump color whose endpoint is itself a jump is illegal.
        let k = expand(1); // 2
        let bad = CoarseType::level0(Coarse0 {
            colors: expand(k),
            comeager: 0,
            realized: [0, jump_color(k, 1, 1)].into_iter().collect(),
        });
        assert!(relabel_jump_colors(&bad, 1).is_err());
    }

    #[test]
    fn one_color_level_one_is_unique() {
        let set = satisfiable_coarse(1, 1).unwrap();
        assert_eq!(set.len(), 1);
        let t = &set[0];
        assert_eq!(t.base, c0(1, 0, &[0]));
        // Its single realized Cantor set is the fully realized 0-type.
        assert_eq!(t.cantors.len(), 1);
        let s = t.cantors.iter().next().unwrap();
        assert_eq!(s.base, c0(2, 0, &[0, 1]));
    }

    #[test]
    fn uniform_sum_of_nothing_at_level_one() {
        let t = uniform_sum(&c0(1, 0, &[0]), &[], 1).unwrap();
        assert_eq!(t.base, c0(1, 0, &[0]));
        assert_eq!(t.cantors.len(), 1);
    }

    #[test]
    fn uniform_sum_is_least() {
        // Over every ambient 0-type at level 1, the sum of a subset of the
        // available summands is below every satisfiable type with the same
        // 0-type whose realized Cantor sets include the summands' subsets.
        for m in 1..=2 {
            let all = satisfiable_coarse(1, m).unwrap();
            let pool = cantor_pool(1, m).unwrap();
            for t0 in all_satisfiable0(m) {
                let usable = usable_colors(&t0.realized, m);
                let eligible: Vec<&CoarseType> = pool
                    .iter()
                    .map(|(v, _)| v)
                    .filter(|v| v.base.realized.is_subset(&usable))
                    .collect();
                for mask in 0u64..(1u64 << eligible.len().min(4)) {
                    let ts: Vec<CoarseType> = eligible
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, v)| (*v).clone())
                        .collect();
                    let value = uniform_sum(&t0, &ts, 1).unwrap();
                    let mut required: BTreeSet<CoarseType> = BTreeSet::new();
                    for t in &ts {
                        required.extend(ucsub(t, m).unwrap());
                    }
                    for s in &all {
                        if s.base == t0 && required.is_subset(&s.cantors) {
                            assert!(le_coarse(&value, s), "sum not least");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn minimal_lift_restricts_back() {
        for n in 0..=1 {
            for (t, c) in satisfiable_with_constructions(n, 2).unwrap() {
                let lift = minimal_lift(&t, &c).unwrap();
                assert_eq!(lift.level, n + 1);
                assert_eq!(coarse_restrict(&lift, n), t);
            }
        }
    }

    #[test]
    fn satisfiable_sets_restrict_into_each_other() {
        for m in 1..=2 {
            let lower: Vec<CoarseType> = satisfiable_coarse(0, m).unwrap();
            for t in satisfiable_coarse(1, m).unwrap() {
                t.validate().unwrap();
                assert!(lower.contains(&coarse_restrict(&t, 0)));
                for s in &t.cantors {
                    assert!(cantor_satisfiable(s, m));
                }
            }
        }
    }

    #[test]
    fn order_is_antisymmetric_and_ucsub_monotone() {
        let set = satisfiable_cantor_types(1, 2).unwrap();
        for (s, _) in &set {
            for (t, _) in &set {
                if le_coarse(s, t) && le_coarse(t, s) {
                    assert_eq!(s, t);
                }
                if le_coarse(s, t) {
                    assert!(ucsub(s, 2).unwrap().is_subset(&ucsub(t, 2).unwrap()));
                }
            }
        }
    }

    #[test]
    fn refinement_of_identity_is_identity() {
        for (t, _) in satisfiable_with_constructions(1, 1).unwrap() {
            let refs = refinement_types(&t, &[0]).unwrap();
            assert_eq!(refs, vec![t]);
        }
    }

    #[test]
    fn splitting_one_color_into_two_at_level_zero() {
        // Splitting the single comeager color: the satisfiable 0-types
        // over two colors that coarsen to the one-color type.
        let t = CoarseType::level0(c0(1, 0, &[0]));
        let refs = refinement_types(&t, &[0, 0]).unwrap();
        // Comeager on either half realizing both, or comeager on either
        // half realizing only itself.
        assert_eq!(refs.len(), 4);
    }

    #[test]
    fn pseudo_countable_examples() {
        for (t, _) in satisfiable_cantor_types(1, 1).unwrap() {
            // The comeager color is never pseudo-countable.
            assert!(!pseudo_countable(&t, t.base.comeager));
            // An omitted jump color is pseudo-countable vacuously... and a
            // realized jump color of a Cantor-satisfiable type must be.
            for &c in &t.base.realized {
                if is_jump(1, c) && cantor_satisfiable(&t, 1) {
                    assert!(pseudo_countable(&t, c));
                }
            }
        }
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        assert!(matches!(satisfiable_coarse(3, 1), Err(EngineError::Budget(_))));
        assert!(matches!(satisfiable_coarse(1, 3), Err(EngineError::Budget(_))));
    }
}
