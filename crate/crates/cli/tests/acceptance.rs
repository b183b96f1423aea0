//! End-to-end acceptance suite: one test per criterion, each printing a
//! single pass line on success.
//!
//! The stretch criterion (7) is gated behind the MTORDER_STRETCH
//! environment variable; without it the test reports that it was skipped.
//! With it, a failure to finish inside the cap is reported, not failed.

use mtorder::coarse::{
    coarse_restrict, le_coarse, minimal_lift, satisfiable_cantor_types, satisfiable_coarse,
    satisfiable_with_constructions, ucsub, uniform_sum, CoarseType,
};
use mtorder::compose::sum_indexed;
use mtorder::decide::{decide_sentence, decide_sentence_limited, theory_of, Structure};
use mtorder::oracle::{eval_sentence_finite, eval_type_finite};
use mtorder::shape::Shape;
use mtorder::syntax::{parse_formula, Formula, SetTerm};
use mtorder::value::{canonical_hex, empty_value, point_value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::process::Command;

fn decide(text: &str, structure: Structure) -> bool {
    decide_sentence(&parse_formula(text).unwrap(), structure).unwrap()
}

/// Criterion 1: types assembled by indexed sums agree exactly with the
/// brute-force oracle on all small finite colored orders and shapes.
#[test]
fn criterion_1_oracle_equivalence() {
    let set_parts: [&[usize]; 7] = [&[], &[1], &[2], &[1, 1], &[1, 2], &[2, 1], &[2, 2]];
    let mut checked = 0usize;
    for elem in 0..=2usize {
        for sets in set_parts {
            // The required coverage is the pure set shapes; first-order
            // layers on top are extra and kept within enumeration reach.
            if elem == 2 && sets.iter().sum::<usize>() > 3 {
                continue;
            }
            let shape = Shape::new(elem, sets.to_vec());
            if std::env::var_os("MTORDER_TRACE").is_some() {
                eprintln!("[criterion 1] shape {shape}");
            }
            for n in 0..=4usize {
                // One context parameter encodes a 2-coloring; no
                // parameter is the 1-colored case.
                for params in 0..=1usize {
                    let colorings: u64 = if params == 0 { 1 } else { 1 << n };
                    for coloring in 0..colorings {
                        let points: Vec<_> = (0..n)
                            .map(|i| point_value(&shape, params, ((coloring >> i) & 1) as usize))
                            .collect();
                        let assembled = if n == 0 {
                            empty_value(&shape, params)
                        } else {
                            sum_indexed(&points, &shape, params)
                        };
                        let ctx: Vec<u64> = if params == 0 { vec![] } else { vec![coloring] };
                        let oracle = eval_type_finite(n, &shape, &ctx).unwrap();
                        assert_eq!(
                            assembled, oracle,
                            "mismatch at shape {shape}, n={n}, coloring={coloring:b}"
                        );
                        checked += 1;
                    }
                }
            }
        }
    }
    println!("criterion 1 (oracle equivalence): pass ({checked} cases)");
}

/// A random closed sentence over at most 2 set and 2 element variables.
fn random_sentence(rng: &mut ChaCha8Rng) -> Formula {
    fn set_term(rng: &mut ChaCha8Rng, sets: &[&str]) -> SetTerm {
        let base = |rng: &mut ChaCha8Rng, sets: &[&str]| -> SetTerm {
            if sets.is_empty() || rng.gen_ratio(1, 4) {
                SetTerm::Top
            } else {
                SetTerm::var(sets[rng.gen_range(0..sets.len())])
            }
        };
        let a = base(rng, sets);
        match rng.gen_range(0..4) {
            0 => a,
            1 => SetTerm::Union(Box::new(a), Box::new(base(rng, sets))),
            2 => SetTerm::Inter(Box::new(a), Box::new(base(rng, sets))),
            _ => SetTerm::Diff(Box::new(a), Box::new(base(rng, sets))),
        }
    }
    fn atom(rng: &mut ChaCha8Rng, elems: &[&str], sets: &[&str]) -> Formula {
        match rng.gen_range(0..7) {
            0 if !elems.is_empty() => Formula::Le(
                elems[rng.gen_range(0..elems.len())].into(),
                elems[rng.gen_range(0..elems.len())].into(),
            ),
            1 if !elems.is_empty() => Formula::In(
                elems[rng.gen_range(0..elems.len())].into(),
                set_term(rng, sets),
            ),
            2 => Formula::Sub(set_term(rng, sets), set_term(rng, sets)),
            3 => Formula::Eq(set_term(rng, sets), set_term(rng, sets)),
            4 => Formula::IsAtom(set_term(rng, sets)),
            5 => Formula::Meager(set_term(rng, sets)),
            _ => {
                if rng.gen() {
                    Formula::True
                } else {
                    Formula::False
                }
            }
        }
    }
    fn go(rng: &mut ChaCha8Rng, elems: &[&str], sets: &[&str], fuel: usize) -> Formula {
        if fuel == 0 {
            return atom(rng, elems, sets);
        }
        match rng.gen_range(0..8) {
            0 => atom(rng, elems, sets),
            1 => Formula::not(go(rng, elems, sets, fuel - 1)),
            2 => Formula::and(go(rng, elems, sets, fuel - 1), go(rng, elems, sets, fuel - 1)),
            3 => Formula::or(go(rng, elems, sets, fuel - 1), go(rng, elems, sets, fuel - 1)),
            4 => Formula::implies(go(rng, elems, sets, fuel - 1), go(rng, elems, sets, fuel - 1)),
            5 | 6 if elems.len() < 2 => {
                let name = if elems.is_empty() { "x" } else { "y" };
                let mut inner = elems.to_vec();
                inner.push(name);
                let body = go(rng, &inner, sets, fuel - 1);
                if rng.gen() {
                    Formula::exists_elem(name, body)
                } else {
                    Formula::forall_elem(name, body)
                }
            }
            _ if sets.len() < 2 => {
                let name = if sets.is_empty() { "X" } else { "Y" };
                let mut inner = sets.to_vec();
                inner.push(name);
                let body = go(rng, elems, &inner, fuel - 1);
                if rng.gen() {
                    Formula::exists_set(name, body)
                } else {
                    Formula::forall_set(name, body)
                }
            }
            _ => atom(rng, elems, sets),
        }
    }
    go(rng, &[], &[], 4)
}

/// Criterion 2: a fixed fuzz corpus of sentences decides identically to
/// Tarskian evaluation on all finite orders up to size 3.
#[test]
fn criterion_2_sentence_cross_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_2024);
    for i in 0..500 {
        let f = random_sentence(&mut rng);
        for n in 0..=3usize {
            let got = decide_sentence(&f, Structure::Finite(n)).unwrap();
            let want = eval_sentence_finite(n, &f).unwrap();
            assert_eq!(got, want, "sentence #{i} on finite:{n}: {f:?}");
        }
    }
    println!("criterion 2 (sentence cross-check): pass (500 sentences x 4 sizes)");
}

/// Criterion 3: curated sentences with known truth values on the
/// naturals, their dual, and the integers.
#[test]
fn criterion_3_s1s_truth_suite() {
    // (sentence, truth on N, on Ndual, on Z)
    let suite: [(&str, bool, bool, bool); 12] = [
        // Well-ordering: every nonempty set has a least element
        // (single-prefix form: some x witnesses the minimum unless X is
        // empty, in which case any x does).
        (
            "AS X. EX x. AX y. (!(y in X) | (x in X & (y in X -> x <= y)))",
            true, false, false,
        ),
        // Dual well-ordering: every nonempty set has a greatest element.
        (
            "AS X. EX x. AX y. (!(y in X) | (x in X & (y in X -> y <= x)))",
            false, true, false,
        ),
        // A least element exists.
        ("EX x. AX y. x <= y", true, false, false),
        // No greatest element.
        ("AX x. EX y. (x <= y & !(y <= x))", true, false, true),
        // Every element has an immediate successor.
        (
            "AX x. EX y. (x <= y & !(y <= x) & AX z. ((x <= z & !(z <= x)) -> y <= z))",
            true, false, true,
        ),
        // Density fails everywhere here.
        (
            "AX x. AX z. ((x <= z & !(z <= x)) -> \
             EX y. (x <= y & y <= z & !(y <= x) & !(z <= y)))",
            false, false, false,
        ),
        // Every element with a strict lower bound has an immediate
        // predecessor.
        (
            "AX x. ((EX w. (w <= x & !(x <= w))) -> \
             EX y. (y <= x & !(x <= y) & AX z. ((z <= x & !(x <= z)) -> z <= y)))",
            true, true, true,
        ),
        // Some nonmeager set has no strict upper bound.
        (
            "ES X. (!meager(X) & AX y. EX x. (x in X & y <= x & !(x <= y)))",
            true, false, true,
        ),
        // A singleton consisting of a global maximum exists.
        (
            "ES X. (atom(X) & EX x. (x in X & AX y. y <= x))",
            false, true, false,
        ),
        // Every set has a meager subset.
        (
            "AS X. ES Y. (Y sub X & meager(Y))",
            true, true, true,
        ),
        // A singleton consisting of a global minimum exists.
        (
            "ES X. (atom(X) & EX x. (x in X & AX y. x <= y))",
            true, false, false,
        ),
        // No endpoints on either side.
        (
            "(!(EX x. AX y. x <= y)) & (!(EX x. AX y. y <= x))",
            false, false, true,
        ),
    ];
    for (text, on_n, on_ndual, on_z) in suite {
        assert_eq!(decide(text, Structure::N), on_n, "on N: {text}");
        assert_eq!(decide(text, Structure::Ndual), on_ndual, "on Ndual: {text}");
        assert_eq!(decide(text, Structure::Z), on_z, "on Z: {text}");
    }
    println!("criterion 3 (S1S truth suite): pass (12 sentences x 3 structures)");
}

/// Criterion 4: the Borel monadic truth suite on the real line.
#[test]
fn criterion_4_real_borel_suite() {
    let start = std::time::Instant::now();
    // Dense.
    assert!(decide(
        "AX x. AX z. ((x <= z & !(z <= x)) -> \
         EX y. (x <= y & y <= z & !(y <= x) & !(z <= y)))",
        Structure::R
    ));
    // No endpoints.
    assert!(decide(
        "(!(EX x. AX y. x <= y)) & (!(EX x. AX y. y <= x))",
        Structure::R
    ));
    // Two disjoint dense sets exist (a set that is dense with dense
    // complement).
    assert!(decide(
        "ES X. AX a. AX b. ((a <= b & !(b <= a)) -> \
         (EX u. (a <= u & u <= b & !(u <= a) & !(b <= u) & u in X) & \
          EX v. (a <= v & v <= b & !(v <= a) & !(b <= v) & !(v in X))))",
        Structure::R
    ));
    // Meager ideal axioms: empty set meager, the line not meager,
    // closure under union and subset.
    assert!(decide("meager(Top - Top)", Structure::R));
    assert!(!decide("meager(Top)", Structure::R));
    assert!(decide(
        "AS X. AS Y. ((meager(X) & meager(Y)) -> meager(X + Y))",
        Structure::R
    ));
    assert!(decide(
        "AS X. AS Y. ((meager(Y) & X sub Y) -> meager(X))",
        Structure::R
    ));
    // Baire alternative: every Borel set is meager or comeager on some
    // interval (its complement there is covered by a meager set), and
    // never both.
    assert!(decide(
        "AS X. (meager(X) | EX a. EX b. ((a <= b & !(b <= a)) & \
         ES Z. (meager(Z) & AX y. ((a <= y & y <= b & !(y <= a) & !(b <= y)) \
         -> (y in X | y in Z)))))",
        Structure::R
    ));
    assert!(!decide(
        "ES X. (meager(X) & AX y. y in X)",
        Structure::R
    ));
    let secs = start.elapsed().as_secs();
    assert!(secs < 600, "real suite took {secs}s, budget is 600s");
    println!("criterion 4 (real Borel truth suite): pass ({secs}s cold)");
}

/// Criterion 5: coarse-type engine counts and algebraic laws.
#[test]
fn criterion_5_coarse_engine() {
    // Satisfiable 0-type count m * 2^(m-1).
    for m in 1..=4usize {
        let count = satisfiable_coarse(0, m).unwrap().len();
        assert_eq!(count, m << (m - 1), "0-type count over {m} colors");
    }
    // restrict(minimal_lift(t)) = t on the full enumerated set.
    for n in 0..=1usize {
        for m in 1..=2usize {
            for (t, c) in satisfiable_with_constructions(n, m).unwrap() {
                let lift = minimal_lift(&t, &c).unwrap();
                assert_eq!(lift.level, n + 1);
                assert_eq!(coarse_restrict(&lift, n), t);
            }
        }
    }
    // uniform_sum is the least satisfiable type over the same 0-type
    // whose realized Cantor sets cover the summands'.
    for m in 1..=2usize {
        let all = satisfiable_coarse(1, m).unwrap();
        let mut pool: Vec<CoarseType> =
            satisfiable_cantor_types(1, m).unwrap().into_iter().map(|(v, _)| v).collect();
        pool.truncate(4);
        let zero_types: BTreeSet<_> = all.iter().map(|t| t.base.clone()).collect();
        for t0 in zero_types {
            for mask in 0u64..(1u64 << pool.len()) {
                let ts: Vec<CoarseType> = pool
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, v)| v.clone())
                    .collect();
                let Ok(value) = uniform_sum(&t0, &ts, 1) else { continue };
                let mut required: BTreeSet<CoarseType> = BTreeSet::new();
                for t in &ts {
                    required.extend(ucsub(t, m).unwrap());
                }
                for s in &all {
                    if s.base == t0 && required.is_subset(&s.cantors) {
                        assert!(le_coarse(&value, s), "sum not least over {t0:?}");
                    }
                }
            }
        }
    }
    // Pinned regression: the level-1 enumeration over one color.
    assert_eq!(satisfiable_coarse(1, 1).unwrap().len(), 1);
    println!("criterion 5 (coarse-type engine): pass");
}

fn run_binary(args: &[&str], envs: &[(&str, &str)]) -> (String, i32) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mtorder"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("running the mtorder binary");
    (String::from_utf8_lossy(&out.stdout).into_owned(), out.status.code().unwrap_or(-1))
}

/// Criterion 6: verdicts and canonical dumps are identical across
/// evaluation orders and across cold and warm cache.
#[test]
fn criterion_6_determinism_and_cache() {
    // Canonical in-process hashes are independent of the order theories
    // are requested in.
    let shapes = ["(1)", "2;()", "1;(1)", "(2)"];
    let mut forward = Vec::new();
    for s in shapes {
        let shape = Shape::parse(s).unwrap();
        forward.push(canonical_hex(theory_of(Structure::N, &shape).unwrap()));
    }
    for (i, s) in shapes.iter().enumerate().rev() {
        let shape = Shape::parse(s).unwrap();
        assert_eq!(forward[i], canonical_hex(theory_of(Structure::N, &shape).unwrap()));
    }

    // Byte-identical table dumps from two fresh processes.
    let (dump1, c1) = run_binary(&["tables", "--structure", "N", "--shape", "(1)"], &[]);
    let (dump2, c2) = run_binary(&["tables", "--structure", "N", "--shape", "(1)"], &[]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(dump1, dump2, "table dumps differ across processes");
    let (enum1, _) = run_binary(&["coarse", "enumerate", "--level", "1", "--colors", "2"], &[]);
    let (enum2, _) = run_binary(&["coarse", "enumerate", "--level", "1", "--colors", "2"], &[]);
    assert_eq!(enum1, enum2, "coarse dumps differ across processes");

    // Cold vs warm cache: same verdict, same dump bytes, and the warm
    // run actually hits the cache.
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let formula = dir.path().join("wo.mso");
    std::fs::write(
        &formula,
        "AS X. EX x. AX y. (!(y in X) | (x in X & (y in X -> x <= y)))",
    )
    .unwrap();
    let args = ["decide", "--structure", "N", "--formula", formula.to_str().unwrap()];
    let (_, cold) = run_binary(&args, &[("MTORDER_CACHE_DIR", cache)]);
    let (_, warm) = run_binary(&args, &[("MTORDER_CACHE_DIR", cache)]);
    assert_eq!(cold, 0, "well-ordering should hold on N");
    assert_eq!(warm, cold, "cold and warm verdicts differ");
    let targs = ["tables", "--structure", "N", "--shape", "(1)"];
    let (cold_dump, _) = run_binary(&targs, &[("MTORDER_CACHE_DIR", cache)]);
    let (warm_dump, _) = run_binary(&targs, &[("MTORDER_CACHE_DIR", cache)]);
    assert_eq!(cold_dump, dump1, "cached dump differs from uncached");
    assert_eq!(warm_dump, cold_dump, "warm dump differs from cold");
    println!("criterion 6 (determinism & cache): pass");
}

/// Criterion 7 (stretch, gated by MTORDER_STRETCH): the
/// meager-definability biconditional at three set variables, with a
/// two-hour cap; not finishing is reported, not failed.
#[test]
fn criterion_7_stretch_meager_definability() {
    // meager(A) iff on every interval there is a dense set B such that
    // no Cantor set inside A + B has B dense in it.  A Cantor set is a
    // nonempty compact perfect nowhere dense set; for closed sets
    // nowhere dense and meager coincide.
    let sentence = "\
        AS A. (meager(A) <-> AX u. AX v. ((u <= v & !(v <= u)) -> \
          ES B. ( \
            (AX z. (z in B -> (u <= z & !(z <= u) & z <= v & !(v <= z)))) & \
            (AX a. AX b. ((u <= a & a <= b & b <= v & !(b <= a)) -> \
              EX w. (w in B & a <= w & w <= b))) & \
            !ES C. ( \
              closed(C) & !has_isolated(C) & bounded_below(C) & \
              bounded_above(C) & meager(C) & (EX p. p in C) & \
              C sub A + B & \
              AX q. AX r. ((q <= r & EX p. (p in C & q <= p & p <= r)) -> \
                EX s. (s in B & s in C & q <= s & s <= r))))))";
    if std::env::var_os("MTORDER_STRETCH").is_none() {
        println!("criterion 7 (stretch meager-definability): skipped (set MTORDER_STRETCH=1)");
        return;
    }
    let f = parse_formula(sentence).unwrap();
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let _ = tx.send(decide_sentence_limited(&f, Structure::R, 3));
    });
    match rx.recv_timeout(std::time::Duration::from_secs(2 * 3600)) {
        Ok(Ok((true, _))) => println!("criterion 7 (stretch meager-definability): pass"),
        Ok(Ok((false, _))) => panic!("meager-definability biconditional decided false"),
        Ok(Err(e)) => {
            println!("criterion 7 (stretch meager-definability): not finished (reported): {e}")
        }
        Err(_) => {
            println!("criterion 7 (stretch meager-definability): timed out after 2h (reported)")
        }
    }
}
