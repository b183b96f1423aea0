//! The fixed signature of first-order-definable set predicates.
//!
//! Each entry names a property of a single set that is definable with
//! first-order quantifiers only, gives its defining formula, and records
//! its quantifier depth.  The list is fixed per engine version and folded
//! into cache keys.  The exact defining formulas are an engine choice
//! (documented here), since only the property names are pinned down:
//! topological notions are read with respect to the order topology of the
//! ambient structure, and "interval" means convex with the corresponding
//! endpoint behavior.

use super::ast::{Formula, SetTerm};

/// One signature entry.
pub struct MorleyEntry {
    pub name: &'static str,
    /// First-order quantifier depth of the defining formula.
    pub depth: usize,
    /// Builds the defining formula with the given free set variable.
    pub define: fn(&str) -> Formula,
}

/// The signature, in canonical order.
pub fn signature() -> &'static [MorleyEntry] {
    &SIGNATURE
}

/// A short stable digest of the signature used in cache keys.
pub fn signature_digest() -> String {
    SIGNATURE.iter().map(|e| format!("{}:{};", e.name, e.depth)).collect()
}

static SIGNATURE: [MorleyEntry; 10] = [
    MorleyEntry { name: "closed", depth: 4, define: def_closed },
    MorleyEntry { name: "open", depth: 4, define: def_open },
    MorleyEntry { name: "dense", depth: 3, define: def_dense },
    MorleyEntry { name: "has_isolated", depth: 4, define: def_has_isolated },
    MorleyEntry { name: "bounded_below", depth: 2, define: def_bounded_below },
    MorleyEntry { name: "bounded_above", depth: 2, define: def_bounded_above },
    MorleyEntry { name: "open_interval", depth: 3, define: def_open_interval },
    MorleyEntry { name: "closed_interval", depth: 3, define: def_closed_interval },
    MorleyEntry { name: "has_succ", depth: 3, define: def_has_succ },
    MorleyEntry { name: "has_pred", depth: 3, define: def_has_pred },
];

fn in_x(z: &str, x: &str) -> Formula {
    Formula::In(z.into(), SetTerm::var(x))
}

/// `X` meets every nonempty basic open set (it is dense in the whole
/// order): intervals `(a,b)`, rays, and the whole structure.
fn def_dense(x: &str) -> Formula {
    let interval = Formula::forall_elem(
        "a",
        Formula::forall_elem(
            "b",
            Formula::implies(
                Formula::exists_elem("z", Formula::and(Formula::lt("a", "z"), Formula::lt("z", "b"))),
                Formula::exists_elem(
                    "z",
                    Formula::all(vec![Formula::lt("a", "z"), Formula::lt("z", "b"), in_x("z", x)]),
                ),
            ),
        ),
    );
    let lower_ray = Formula::forall_elem(
        "b",
        Formula::implies(
            Formula::exists_elem("z", Formula::lt("z", "b")),
            Formula::exists_elem("z", Formula::and(Formula::lt("z", "b"), in_x("z", x))),
        ),
    );
    let upper_ray = Formula::forall_elem(
        "a",
        Formula::implies(
            Formula::exists_elem("z", Formula::lt("a", "z")),
            Formula::exists_elem("z", Formula::and(Formula::lt("a", "z"), in_x("z", x))),
        ),
    );
    let whole = Formula::implies(
        Formula::exists_elem("z", Formula::True),
        Formula::exists_elem("z", in_x("z", x)),
    );
    Formula::all(vec![interval, lower_ray, upper_ray, whole])
}

/// Every point outside `X` has a basic open neighborhood missing `X`.
fn def_closed(x: &str) -> Formula {
    Formula::forall_elem(
        "a",
        Formula::implies(Formula::not(in_x("a", x)), nbhd_where("a", &|z| Formula::not(in_x(z, x)))),
    )
}

/// Every point of `X` has a basic open neighborhood inside `X`.
fn def_open(x: &str) -> Formula {
    Formula::forall_elem(
        "a",
        Formula::implies(in_x("a", x), nbhd_where("a", &|z| in_x(z, x))),
    )
}

/// Some point of `X` is isolated in `X`.
fn def_has_isolated(x: &str) -> Formula {
    let only_a = |z: &str| {
        Formula::implies(
            in_x(z, x),
            Formula::and(Formula::Le("a".into(), z.into()), Formula::Le(z.into(), "a".into())),
        )
    };
    Formula::exists_elem("a", Formula::and(in_x("a", x), nbhd_where("a", &only_a)))
}

/// Some basic open neighborhood of `a` on which `cond` holds everywhere.
fn nbhd_where(a: &str, cond: &dyn Fn(&str) -> Formula) -> Formula {
    let between = Formula::exists_elem(
        "b",
        Formula::exists_elem(
            "c",
            Formula::all(vec![
                Formula::lt("b", a),
                Formula::lt(a, "c"),
                Formula::forall_elem(
                    "z",
                    Formula::implies(
                        Formula::and(Formula::lt("b", "z"), Formula::lt("z", "c")),
                        cond("z"),
                    ),
                ),
            ]),
        ),
    );
    let low = Formula::exists_elem(
        "c",
        Formula::and(
            Formula::lt(a, "c"),
            Formula::forall_elem("z", Formula::implies(Formula::lt("z", "c"), cond("z"))),
        ),
    );
    let high = Formula::exists_elem(
        "b",
        Formula::and(
            Formula::lt("b", a),
            Formula::forall_elem("z", Formula::implies(Formula::lt("b", "z"), cond("z"))),
        ),
    );
    let whole = Formula::forall_elem("z", cond("z"));
    Formula::any(vec![between, low, high, whole])
}

fn def_bounded_below(x: &str) -> Formula {
    Formula::exists_elem(
        "b",
        Formula::forall_elem(
            "a",
            Formula::implies(in_x("a", x), Formula::Le("b".into(), "a".into())),
        ),
    )
}

fn def_bounded_above(x: &str) -> Formula {
    Formula::exists_elem(
        "b",
        Formula::forall_elem(
            "a",
            Formula::implies(in_x("a", x), Formula::Le("a".into(), "b".into())),
        ),
    )
}

fn convex(x: &str) -> Formula {
    Formula::forall_elem(
        "a",
        Formula::forall_elem(
            "b",
            Formula::forall_elem(
                "c",
                Formula::implies(
                    Formula::all(vec![
                        in_x("a", x),
                        in_x("c", x),
                        Formula::lt("a", "b"),
                        Formula::lt("b", "c"),
                    ]),
                    in_x("b", x),
                ),
            ),
        ),
    )
}

/// Convex without a least or greatest element.
fn def_open_interval(x: &str) -> Formula {
    let no_min = Formula::forall_elem(
        "a",
        Formula::implies(
            in_x("a", x),
            Formula::exists_elem("b", Formula::and(in_x("b", x), Formula::lt("b", "a"))),
        ),
    );
    let no_max = Formula::forall_elem(
        "a",
        Formula::implies(
            in_x("a", x),
            Formula::exists_elem("b", Formula::and(in_x("b", x), Formula::lt("a", "b"))),
        ),
    );
    Formula::all(vec![convex(x), no_min, no_max])
}

/// Convex and, when nonempty, with both endpoints attained.
fn def_closed_interval(x: &str) -> Formula {
    let has_min = Formula::exists_elem(
        "a",
        Formula::and(
            in_x("a", x),
            Formula::forall_elem("b", Formula::implies(in_x("b", x), Formula::Le("a".into(), "b".into()))),
        ),
    );
    let has_max = Formula::exists_elem(
        "a",
        Formula::and(
            in_x("a", x),
            Formula::forall_elem("b", Formula::implies(in_x("b", x), Formula::Le("b".into(), "a".into()))),
        ),
    );
    let nonempty = Formula::exists_elem("z", in_x("z", x));
    Formula::and(convex(x), Formula::implies(nonempty, Formula::and(has_min, has_max)))
}

/// Some point of `X` has an immediate successor in the structure.
fn def_has_succ(x: &str) -> Formula {
    Formula::exists_elem(
        "a",
        Formula::and(
            in_x("a", x),
            Formula::exists_elem(
                "b",
                Formula::and(
                    Formula::lt("a", "b"),
                    Formula::forall_elem(
                        "z",
                        Formula::not(Formula::and(Formula::lt("a", "z"), Formula::lt("z", "b"))),
                    ),
                ),
            ),
        ),
    )
}

/// Some point of `X` has an immediate predecessor in the structure.
fn def_has_pred(x: &str) -> Formula {
    Formula::exists_elem(
        "a",
        Formula::and(
            in_x("a", x),
            Formula::exists_elem(
                "b",
                Formula::and(
                    Formula::lt("b", "a"),
                    Formula::forall_elem(
                        "z",
                        Formula::not(Formula::and(Formula::lt("b", "z"), Formula::lt("z", "a"))),
                    ),
                ),
            ),
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::ast::Sort;

    #[test]
    fn defining_formulas_have_one_free_set_variable() {
        for e in signature() {
            let f = (e.define)("X");
            let fv = f.free_vars();
            assert_eq!(fv, vec![("X".to_string(), Sort::Set)], "{} has frees {fv:?}", e.name);
        }
    }

    #[test]
    fn digest_is_stable() {
        assert!(signature_digest().starts_with("closed:4;open:4;dense:3;"));
    }
}
