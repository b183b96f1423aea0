//! Leaf data: the atomic facts a depth-zero type records.
//!
//! A leaf describes a total order together with `m` set parameters through
//! its `2^m` Boolean cells (each element lies in exactly one cell, the
//! bitmask of parameters containing it).  Per cell we record cardinality
//! (zero / one / many), meagerness, whether the global least/greatest
//! element of the structure lies in the cell, and meagerness of the cell
//! with the global endpoints removed; across cells we record the order of
//! the singleton cells.
//!
//! The endpoint bits are first-order definable, so carrying them in the
//! leaf is a signature enrichment in the usual Morley style; they are what
//! lets the sum operators compute the meagerness of a cell of a
//! lexicographic sum from summand leaves alone (a summand endpoint stops
//! being isolated when its neighbor has no matching endpoint, and that is
//! the only way meagerness can change from summand to sum).

/// Cardinality of a cell, collapsed at two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Card {
    Zero,
    One,
    Many,
}

impl Card {
    pub fn add(self, other: Card) -> Card {
        use Card::*;
        match (self, other) {
            (Zero, x) | (x, Zero) => x,
            _ => Many,
        }
    }
}

/// Atomic facts about one Boolean cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellInfo {
    pub card: Card,
    /// The cell is meager as a subset of the structure.
    pub meager: bool,
    /// The structure has a least element and it lies in this cell.
    pub has_gmin: bool,
    pub has_gmax: bool,
    /// The cell minus the structure's least element is meager.
    pub rest_min_meager: bool,
    pub rest_max_meager: bool,
    pub rest_both_meager: bool,
}

impl CellInfo {
    pub fn empty() -> CellInfo {
        CellInfo {
            card: Card::Zero,
            meager: true,
            has_gmin: false,
            has_gmax: false,
            rest_min_meager: true,
            rest_max_meager: true,
            rest_both_meager: true,
        }
    }

    /// Canonical form: the rest-of-cell bits are total functions (they
    /// fall back to plain meagerness when the relevant endpoint is absent
    /// from the cell) and respect the subset monotonicity of the ideal.
    fn normalize(&mut self) {
        if self.card == Card::Zero {
            *self = CellInfo::empty();
            return;
        }
        if self.has_gmin && self.card == Card::One {
            self.rest_min_meager = true;
        }
        if self.has_gmax && self.card == Card::One {
            self.rest_max_meager = true;
        }
        if self.meager {
            self.rest_min_meager = true;
            self.rest_max_meager = true;
        }
        if !self.has_gmin {
            self.rest_min_meager = self.meager;
        }
        if !self.has_gmax {
            self.rest_max_meager = self.meager;
        }
        self.rest_both_meager = match (self.has_gmin, self.has_gmax) {
            (false, false) => self.meager,
            (true, false) => self.rest_min_meager,
            (false, true) => self.rest_max_meager,
            (true, true) => self.rest_both_meager || self.rest_min_meager || self.rest_max_meager,
        };
        if self.card == Card::One && (self.has_gmin || self.has_gmax) {
            self.rest_both_meager = true;
        }
    }
}

/// The full leaf: atomic facts over `2^arity` cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeafData {
    pub arity: usize,
    /// Indexed by parameter-membership bitmask; length `1 << arity`.
    pub cells: Vec<CellInfo>,
    /// The singleton cells in increasing order of their elements.
    pub sing_order: Vec<usize>,
}

/// Guard against runaway contexts; `2^12` cells is already generous.
pub const MAX_ARITY: usize = 12;

impl LeafData {
    pub fn new(arity: usize, mut cells: Vec<CellInfo>, sing_order: Vec<usize>) -> LeafData {
        assert!(arity <= MAX_ARITY, "leaf arity {arity} exceeds the supported maximum");
        assert_eq!(cells.len(), 1usize << arity);
        for c in &mut cells {
            c.normalize();
        }
        let leaf = LeafData { arity, cells, sing_order };
        debug_assert!(leaf.validate(), "inconsistent leaf: {leaf:?}");
        leaf
    }

    /// Leaf of the empty structure.
    pub fn empty(arity: usize) -> LeafData {
        LeafData::new(arity, vec![CellInfo::empty(); 1 << arity], Vec::new())
    }

    /// Leaf of a one-point structure whose point lies in the parameters of
    /// `mask`.
    pub fn point(arity: usize, mask: usize) -> LeafData {
        let mut cells = vec![CellInfo::empty(); 1 << arity];
        cells[mask] = CellInfo {
            card: Card::One,
            meager: false,
            has_gmin: true,
            has_gmax: true,
            rest_min_meager: true,
            rest_max_meager: true,
            rest_both_meager: true,
        };
        LeafData::new(arity, cells, vec![mask])
    }

    pub fn is_empty_structure(&self) -> bool {
        self.cells.iter().all(|c| c.card == Card::Zero)
    }

    /// Internal consistency; checked in debug builds.
    pub fn validate(&self) -> bool {
        if self.cells.len() != 1 << self.arity {
            return false;
        }
        if self.cells.iter().filter(|c| c.has_gmin).count() > 1 {
            return false;
        }
        if self.cells.iter().filter(|c| c.has_gmax).count() > 1 {
            return false;
        }
        let singletons: Vec<usize> = (0..self.cells.len())
            .filter(|&i| self.cells[i].card == Card::One)
            .collect();
        let mut sorted = self.sing_order.clone();
        sorted.sort_unstable();
        if sorted != singletons {
            return false;
        }
        // A singleton cell holding the global minimum is the least singleton.
        for (pos, &c) in self.sing_order.iter().enumerate() {
            if self.cells[c].has_gmin && pos != 0 {
                return false;
            }
            if self.cells[c].has_gmax && pos + 1 != self.sing_order.len() {
                return false;
            }
        }
        true
    }

    /// Appends a fresh, empty set parameter (new highest bit).
    pub fn pad(&self) -> LeafData {
        let m = self.arity;
        let mut cells = vec![CellInfo::empty(); 1 << (m + 1)];
        for c in 0..1 << m {
            cells[c] = self.cells[c];
        }
        LeafData::new(m + 1, cells, self.sing_order.clone())
    }

    /// Forgets the last (highest-bit) parameter, merging cell pairs.
    pub fn drop_last(&self) -> LeafData {
        assert!(self.arity > 0);
        let m = self.arity - 1;
        let hi = 1usize << m;
        let mut cells = Vec::with_capacity(hi);
        for c in 0..hi {
            let a = self.cells[c];
            let b = self.cells[c | hi];
            let mut merged = CellInfo {
                card: a.card.add(b.card),
                meager: a.meager && b.meager,
                has_gmin: a.has_gmin || b.has_gmin,
                has_gmax: a.has_gmax || b.has_gmax,
                rest_min_meager: a.rest_min_meager && b.rest_min_meager,
                rest_max_meager: a.rest_max_meager && b.rest_max_meager,
                rest_both_meager: a.rest_both_meager && b.rest_both_meager,
            };
            merged.normalize();
            cells.push(merged);
        }
        let sing_order: Vec<usize> = self
            .sing_order
            .iter()
            .map(|&c| c & !hi)
            .filter(|&c| cells[c].card == Card::One)
            .collect();
        LeafData::new(m, cells, sing_order)
    }

    /// Order dual: swaps the endpoint roles and reverses singleton order.
    pub fn mirror(&self) -> LeafData {
        let cells = self
            .cells
            .iter()
            .map(|c| CellInfo {
                card: c.card,
                meager: c.meager,
                has_gmin: c.has_gmax,
                has_gmax: c.has_gmin,
                rest_min_meager: c.rest_max_meager,
                rest_max_meager: c.rest_min_meager,
                rest_both_meager: c.rest_both_meager,
            })
            .collect();
        let mut sing_order = self.sing_order.clone();
        sing_order.reverse();
        LeafData::new(self.arity, cells, sing_order)
    }

    /// Reindexes parameters: new parameter `i` is old parameter `perm[i]`.
    pub fn permute_params(&self, perm: &[usize]) -> LeafData {
        assert_eq!(perm.len(), self.arity);
        let m = self.arity;
        let map_cell = |c: usize| -> usize {
            let mut out = 0;
            for (new, &old) in perm.iter().enumerate() {
                if c & (1 << old) != 0 {
                    out |= 1 << new;
                }
            }
            out
        };
        let mut cells = vec![CellInfo::empty(); 1 << m];
        for c in 0..1 << m {
            cells[map_cell(c)] = self.cells[c];
        }
        let sing_order = self.sing_order.iter().map(|&c| map_cell(c)).collect();
        LeafData::new(m, cells, sing_order)
    }

    pub fn total_card(&self, cells: &[usize]) -> Card {
        let mut acc = Card::Zero;
        for &c in cells {
            acc = acc.add(self.cells[c].card);
            if acc == Card::Many {
                break;
            }
        }
        acc
    }

    pub fn is_empty_on(&self, cells: &[usize]) -> bool {
        self.total_card(cells) == Card::Zero
    }

    pub fn is_atom_on(&self, cells: &[usize]) -> bool {
        self.total_card(cells) == Card::One
    }

    /// Meagerness of a union of cells (the ideal is closed under finite
    /// unions, so this is exactly the conjunction).
    pub fn is_meager_on(&self, cells: &[usize]) -> bool {
        cells.iter().all(|&c| self.cells[c].meager)
    }

    /// `s <= t` where both terms must denote atoms; compares the elements.
    pub fn le_atoms(&self, s: &[usize], t: &[usize]) -> bool {
        if !self.is_atom_on(s) || !self.is_atom_on(t) {
            return false;
        }
        let cs = s.iter().find(|&&c| self.cells[c].card == Card::One).copied().unwrap();
        let ct = t.iter().find(|&&c| self.cells[c].card == Card::One).copied().unwrap();
        if cs == ct {
            return true;
        }
        let ps = self.sing_order.iter().position(|&c| c == cs).unwrap();
        let pt = self.sing_order.iter().position(|&c| c == ct).unwrap();
        ps <= pt
    }

    pub fn gmin_cell(&self) -> Option<usize> {
        (0..self.cells.len()).find(|&c| self.cells[c].has_gmin)
    }

    pub fn gmax_cell(&self) -> Option<usize> {
        (0..self.cells.len()).find(|&c| self.cells[c].has_gmax)
    }

    pub fn has_gmin(&self) -> bool {
        self.gmin_cell().is_some()
    }

    pub fn has_gmax(&self) -> bool {
        self.gmax_cell().is_some()
    }

    /// Meagerness of a cell's trace with the structure's global endpoints
    /// optionally discounted (used by the sum base case: a discounted
    /// endpoint is one that is either removed at the sum level or healed
    /// into a non-isolated point by its neighbor summand).
    pub fn trace_meager(&self, cell: usize, discount_min: bool, discount_max: bool) -> bool {
        let c = self.cells[cell];
        match (discount_min, discount_max) {
            (false, false) => c.meager,
            (true, false) => c.rest_min_meager,
            (false, true) => c.rest_max_meager,
            (true, true) => c.rest_both_meager,
        }
    }

    /// Stable byte encoding used for content hashes.
    pub fn encode(&self, out: &mut Vec<u8>) {
        out.push(self.arity as u8);
        for c in &self.cells {
            let mut b = 0u8;
            b |= match c.card {
                Card::Zero => 0,
                Card::One => 1,
                Card::Many => 2,
            };
            b |= (c.meager as u8) << 2;
            b |= (c.has_gmin as u8) << 3;
            b |= (c.has_gmax as u8) << 4;
            b |= (c.rest_min_meager as u8) << 5;
            b |= (c.rest_max_meager as u8) << 6;
            b |= (c.rest_both_meager as u8) << 7;
            out.push(b);
        }
        out.push(self.sing_order.len() as u8);
        for &c in &self.sing_order {
            out.extend_from_slice(&(c as u16).to_le_bytes());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_then_drop_param_is_point() {
        let p = LeafData::point(2, 0b01);
        let d = p.drop_last();
        assert_eq!(d, LeafData::point(1, 0b1));
    }

    #[test]
    fn pad_adds_empty_parameter() {
        let p = LeafData::point(1, 0b1);
        let q = p.pad();
        assert_eq!(q.arity, 2);
        assert_eq!(q.cells[0b01].card, Card::One);
        assert_eq!(q.cells[0b11].card, Card::Zero);
        assert_eq!(q.drop_last(), p);
    }

    #[test]
    fn mirror_is_involutive() {
        let mut cells = vec![CellInfo::empty(); 2];
        cells[1] = CellInfo {
            card: Card::Many,
            meager: false,
            has_gmin: true,
            has_gmax: false,
            rest_min_meager: true,
            rest_max_meager: false,
            rest_both_meager: true,
        };
        let l = LeafData::new(1, cells, vec![]);
        assert_eq!(l.mirror().mirror(), l);
        assert!(l.mirror().has_gmax());
        assert!(!l.mirror().has_gmin());
    }

    #[test]
    fn atom_facts_on_point() {
        let p = LeafData::point(1, 0b1);
        assert!(p.is_atom_on(&[1]));
        assert!(p.is_atom_on(&[0, 1]));
        assert!(!p.is_atom_on(&[0]));
        assert!(p.le_atoms(&[1], &[1]));
        assert!(!p.is_meager_on(&[1]));
        assert!(p.is_meager_on(&[0]));
    }

    #[test]
    fn normalization_makes_rest_bits_total() {
        let mut cells = vec![CellInfo::empty(); 2];
        cells[1] = CellInfo {
            card: Card::Many,
            meager: true,
            has_gmin: false,
            has_gmax: false,
            rest_min_meager: false,
            rest_max_meager: false,
            rest_both_meager: false,
        };
        let l = LeafData::new(1, cells, vec![]);
        assert!(l.cells[1].rest_min_meager);
        assert!(l.cells[1].rest_both_meager);
    }

    #[test]
    fn singleton_order_respects_endpoint_bits() {
        // Two singleton cells, the second carrying the global max.
        let mut cells = vec![CellInfo::empty(); 4];
        cells[1] = CellInfo {
            card: Card::One,
            meager: false,
            has_gmin: true,
            has_gmax: false,
            rest_min_meager: true,
            rest_max_meager: false,
            rest_both_meager: true,
        };
        cells[2] = CellInfo {
            card: Card::One,
            meager: false,
            has_gmin: false,
            has_gmax: true,
            rest_min_meager: false,
            rest_max_meager: true,
            rest_both_meager: true,
        };
        let l = LeafData::new(2, cells, vec![1, 2]);
        assert!(l.le_atoms(&[1], &[2]));
        assert!(!l.le_atoms(&[2], &[1]));
        assert_eq!(l.gmin_cell(), Some(1));
        assert_eq!(l.gmax_cell(), Some(2));
    }
}
