//! Formula AST for the monadic language of order with a meager predicate.

use std::fmt;

/// Variable sorts: first-order (element) or monadic (set).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sort {
    Elem,
    Set,
}

/// A set term built from set variables by Boolean operations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SetTerm {
    Var(String),
    Top,
    Union(Box<SetTerm>, Box<SetTerm>),
    Inter(Box<SetTerm>, Box<SetTerm>),
    Diff(Box<SetTerm>, Box<SetTerm>),
}

impl SetTerm {
    pub fn var(name: &str) -> SetTerm {
        SetTerm::Var(name.to_string())
    }

    /// Free set variables, in first-occurrence order.
    pub fn free_vars(&self, out: &mut Vec<String>) {
        match self {
            SetTerm::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            SetTerm::Top => {}
            SetTerm::Union(a, b) | SetTerm::Inter(a, b) | SetTerm::Diff(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
        }
    }

    /// Evaluates membership of an abstract point given membership in each
    /// variable (`true` iff the point lies in the variable's set).
    pub fn eval(&self, in_var: &dyn Fn(&str) -> bool) -> bool {
        match self {
            SetTerm::Var(v) => in_var(v),
            SetTerm::Top => true,
            SetTerm::Union(a, b) => a.eval(in_var) || b.eval(in_var),
            SetTerm::Inter(a, b) => a.eval(in_var) && b.eval(in_var),
            SetTerm::Diff(a, b) => a.eval(in_var) && !b.eval(in_var),
        }
    }
}

/// A formula of the monadic language of order, plus the meager predicate
/// and the fixed list of first-order-definable predicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    /// `x <= y` on element variables.
    Le(String, String),
    /// `x in S`.
    In(String, SetTerm),
    /// `S sub T`.
    Sub(SetTerm, SetTerm),
    /// `S = T`.
    Eq(SetTerm, SetTerm),
    /// `atom(S)`: `S` is a singleton.
    IsAtom(SetTerm),
    /// `meager(S)`.
    Meager(SetTerm),
    /// A predicate from the fixed signature, e.g. `dense(S)`.
    Pred(String, SetTerm),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    ExistsElem(String, Box<Formula>),
    ForallElem(String, Box<Formula>),
    ExistsSet(String, Box<Formula>),
    ForallSet(String, Box<Formula>),
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn exists_elem(v: &str, f: Formula) -> Formula {
        Formula::ExistsElem(v.to_string(), Box::new(f))
    }

    pub fn forall_elem(v: &str, f: Formula) -> Formula {
        Formula::ForallElem(v.to_string(), Box::new(f))
    }

    pub fn exists_set(v: &str, f: Formula) -> Formula {
        Formula::ExistsSet(v.to_string(), Box::new(f))
    }

    pub fn forall_set(v: &str, f: Formula) -> Formula {
        Formula::ForallSet(v.to_string(), Box::new(f))
    }

    /// `x < y` as a derived connective.
    pub fn lt(x: &str, y: &str) -> Formula {
        Formula::and(Formula::Le(x.into(), y.into()), Formula::not(Formula::Le(y.into(), x.into())))
    }

    /// Conjunction of a list (empty list is `True`).
    pub fn all(mut fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => Formula::True,
            1 => fs.pop().unwrap(),
            _ => {
                let mut it = fs.into_iter();
                let first = it.next().unwrap();
                it.fold(first, Formula::and)
            }
        }
    }

    /// Disjunction of a list (empty list is `False`).
    pub fn any(mut fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => Formula::False,
            1 => fs.pop().unwrap(),
            _ => {
                let mut it = fs.into_iter();
                let first = it.next().unwrap();
                it.fold(first, Formula::or)
            }
        }
    }

    /// Free variables with their sorts, in first-occurrence order.
    pub fn free_vars(&self) -> Vec<(String, Sort)> {
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut Vec<(String, Sort)>) {
            let add = |name: &str, sort: Sort, bound: &Vec<String>, out: &mut Vec<(String, Sort)>| {
                if !bound.contains(&name.to_string()) && !out.iter().any(|(n, _)| n == name) {
                    out.push((name.to_string(), sort));
                }
            };
            match f {
                Formula::True | Formula::False => {}
                Formula::Le(x, y) => {
                    add(x, Sort::Elem, bound, out);
                    add(y, Sort::Elem, bound, out);
                }
                Formula::In(x, s) => {
                    add(x, Sort::Elem, bound, out);
                    let mut vs = Vec::new();
                    s.free_vars(&mut vs);
                    for v in vs {
                        add(&v, Sort::Set, bound, out);
                    }
                }
                Formula::Sub(s, t) | Formula::Eq(s, t) => {
                    let mut vs = Vec::new();
                    s.free_vars(&mut vs);
                    t.free_vars(&mut vs);
                    for v in vs {
                        add(&v, Sort::Set, bound, out);
                    }
                }
                Formula::IsAtom(s) | Formula::Meager(s) | Formula::Pred(_, s) => {
                    let mut vs = Vec::new();
                    s.free_vars(&mut vs);
                    for v in vs {
                        add(&v, Sort::Set, bound, out);
                    }
                }
                Formula::Not(g) => go(g, bound, out),
                Formula::And(a, b)
                | Formula::Or(a, b)
                | Formula::Implies(a, b)
                | Formula::Iff(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                Formula::ExistsElem(v, g)
                | Formula::ForallElem(v, g)
                | Formula::ExistsSet(v, g)
                | Formula::ForallSet(v, g) => {
                    bound.push(v.clone());
                    go(g, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Renames free occurrences of element variable `from` to `to`.
    pub fn rename_elem(&self, from: &str, to: &str) -> Formula {
        self.rename(from, to, Sort::Elem)
    }

    /// Renames free occurrences of set variable `from` to `to`.
    pub fn rename_set(&self, from: &str, to: &str) -> Formula {
        self.rename(from, to, Sort::Set)
    }

    fn rename(&self, from: &str, to: &str, sort: Sort) -> Formula {
        fn term(s: &SetTerm, from: &str, to: &str) -> SetTerm {
            match s {
                SetTerm::Var(v) if v == from => SetTerm::var(to),
                SetTerm::Var(v) => SetTerm::Var(v.clone()),
                SetTerm::Top => SetTerm::Top,
                SetTerm::Union(a, b) => {
                    SetTerm::Union(Box::new(term(a, from, to)), Box::new(term(b, from, to)))
                }
                SetTerm::Inter(a, b) => {
                    SetTerm::Inter(Box::new(term(a, from, to)), Box::new(term(b, from, to)))
                }
                SetTerm::Diff(a, b) => {
                    SetTerm::Diff(Box::new(term(a, from, to)), Box::new(term(b, from, to)))
                }
            }
        }
        let e = |v: &String| -> String {
            if sort == Sort::Elem && v == from {
                to.to_string()
            } else {
                v.clone()
            }
        };
        let t = |s: &SetTerm| -> SetTerm {
            if sort == Sort::Set {
                term(s, from, to)
            } else {
                s.clone()
            }
        };
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Le(x, y) => Formula::Le(e(x), e(y)),
            Formula::In(x, s) => Formula::In(e(x), t(s)),
            Formula::Sub(s, u) => Formula::Sub(t(s), t(u)),
            Formula::Eq(s, u) => Formula::Eq(t(s), t(u)),
            Formula::IsAtom(s) => Formula::IsAtom(t(s)),
            Formula::Meager(s) => Formula::Meager(t(s)),
            Formula::Pred(p, s) => Formula::Pred(p.clone(), t(s)),
            Formula::Not(g) => Formula::not(g.rename(from, to, sort)),
            Formula::And(a, b) => Formula::and(a.rename(from, to, sort), b.rename(from, to, sort)),
            Formula::Or(a, b) => Formula::or(a.rename(from, to, sort), b.rename(from, to, sort)),
            Formula::Implies(a, b) => {
                Formula::implies(a.rename(from, to, sort), b.rename(from, to, sort))
            }
            Formula::Iff(a, b) => Formula::iff(a.rename(from, to, sort), b.rename(from, to, sort)),
            Formula::ExistsElem(v, g) => {
                if sort == Sort::Elem && v == from {
                    self.clone()
                } else {
                    Formula::ExistsElem(v.clone(), Box::new(g.rename(from, to, sort)))
                }
            }
            Formula::ForallElem(v, g) => {
                if sort == Sort::Elem && v == from {
                    self.clone()
                } else {
                    Formula::ForallElem(v.clone(), Box::new(g.rename(from, to, sort)))
                }
            }
            Formula::ExistsSet(v, g) => {
                if sort == Sort::Set && v == from {
                    self.clone()
                } else {
                    Formula::ExistsSet(v.clone(), Box::new(g.rename(from, to, sort)))
                }
            }
            Formula::ForallSet(v, g) => {
                if sort == Sort::Set && v == from {
                    self.clone()
                } else {
                    Formula::ForallSet(v.clone(), Box::new(g.rename(from, to, sort)))
                }
            }
        }
    }
}

impl fmt::Display for SetTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetTerm::Var(v) => write!(f, "{v}"),
            SetTerm::Top => write!(f, "Top"),
            SetTerm::Union(a, b) => write!(f, "({a} + {b})"),
            SetTerm::Inter(a, b) => write!(f, "({a} * {b})"),
            SetTerm::Diff(a, b) => write!(f, "({a} - {b})"),
        }
    }
}

/// Writes the ASCII concrete syntax accepted by the parser.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match self {
                Formula::True => write!(f, "true"),
                Formula::False => write!(f, "false"),
                Formula::Le(x, y) => write!(f, "{x} <= {y}"),
                Formula::In(x, s) => write!(f, "{x} in {s}"),
                Formula::Sub(s, t) => write!(f, "{s} sub {t}"),
                Formula::Eq(s, t) => write!(f, "{s} = {t}"),
                Formula::IsAtom(s) => write!(f, "atom({s})"),
                Formula::Meager(s) => write!(f, "meager({s})"),
                Formula::Pred(p, s) => write!(f, "{p}({s})"),
                Formula::Not(g) => write!(f, "!({g})"),
                Formula::And(a, b) => write!(f, "({a} & {b})"),
                Formula::Or(a, b) => write!(f, "({a} | {b})"),
                Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
                Formula::Iff(a, b) => write!(f, "({a} <-> {b})"),
                Formula::ExistsElem(v, g) => write!(f, "EX {v}. {g}"),
                Formula::ForallElem(v, g) => write!(f, "AX {v}. {g}"),
                Formula::ExistsSet(v, g) => write!(f, "ES {v}. {g}"),
                Formula::ForallSet(v, g) => write!(f, "AS {v}. {g}"),
        }
    }
}
