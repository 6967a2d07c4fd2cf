//! Shared randomized-case generation for the integration test suites.
#![allow(dead_code)] // each test binary uses a different subset

use rand::Rng;
use smooth_stl::{Formula, Predicate, PredicateTable, Signal};

pub const Q: usize = 2;

/// Fixed pool of affine predicates over a 2-channel signal. With `noise`
/// set, every predicate carries that constant noise band.
pub fn test_table(noise: Option<(f64, f64)>) -> PredicateTable {
    let defs: [(&str, [f64; Q], f64); 6] = [
        ("p0", [1.0, 0.0], 0.0),
        ("p1", [0.0, 1.0], 0.5),
        ("p2", [-1.0, 0.0], 1.0),
        ("p3", [0.0, -1.0], -0.25),
        ("p4", [1.0, -1.0], 0.0),
        ("p5", [0.5, 0.5], -0.5),
    ];
    let mut table = PredicateTable::new();
    for (name, c, b) in defs {
        let mut p = Predicate::affine(name, c.to_vec(), b);
        if let Some((lo, hi)) = noise {
            p = p.with_noise(lo, hi);
        }
        table.insert(p);
    }
    table
}

fn leaf(rng: &mut impl Rng, table: &PredicateTable, allow_not: bool) -> Formula {
    let name = format!("p{}", rng.gen_range(0..6));
    let pred = Formula::Pred(table.get(&name).unwrap().clone());
    if allow_not && rng.gen_bool(0.3) {
        Formula::not(pred)
    } else {
        pred
    }
}

fn window(rng: &mut impl Rng) -> (u32, u32) {
    let t1 = rng.gen_range(0..=2u32);
    (t1, t1 + rng.gen_range(0..=3u32))
}

/// Random formula of the given depth. Leaves may be negated predicates;
/// with `deep_nots` the generator also wraps boolean and F/G subtrees in
/// negation (never until, which has no negation normal form), producing
/// non-NNF trees for rewrite tests.
pub fn random_formula(
    rng: &mut impl Rng,
    table: &PredicateTable,
    depth: u32,
    deep_nots: bool,
) -> Formula {
    gen(rng, table, depth, deep_nots, true)
}

fn gen(
    rng: &mut impl Rng,
    table: &PredicateTable,
    depth: u32,
    deep_nots: bool,
    allow_until: bool,
) -> Formula {
    if depth == 0 {
        return leaf(rng, table, true);
    }
    let variants = 4 + usize::from(allow_until) + usize::from(deep_nots);
    match rng.gen_range(0..variants) {
        0 => {
            let n = rng.gen_range(2..=3);
            Formula::and((0..n).map(|_| gen(rng, table, depth - 1, deep_nots, allow_until)).collect())
        }
        1 => {
            let n = rng.gen_range(2..=3);
            Formula::or((0..n).map(|_| gen(rng, table, depth - 1, deep_nots, allow_until)).collect())
        }
        2 => {
            let (t1, t2) = window(rng);
            Formula::eventually(t1, t2, gen(rng, table, depth - 1, deep_nots, allow_until))
        }
        3 => {
            let (t1, t2) = window(rng);
            Formula::always(t1, t2, gen(rng, table, depth - 1, deep_nots, allow_until))
        }
        4 if allow_until => {
            let (t1, t2) = window(rng);
            Formula::until(
                t1,
                t2,
                gen(rng, table, depth - 1, deep_nots, allow_until),
                gen(rng, table, depth - 1, deep_nots, allow_until),
            )
        }
        // a negation; nothing under it may contain an until node, which
        // has no negation normal form
        _ => Formula::not(gen(rng, table, depth - 1, deep_nots, false)),
    }
}

/// A formula guaranteed to contain no until node (safe to negate).
pub fn random_until_free(rng: &mut impl Rng, table: &PredicateTable, depth: u32) -> Formula {
    loop {
        let f = random_formula(rng, table, depth, true);
        if until_free(&f) {
            return f;
        }
    }
}

fn until_free(f: &Formula) -> bool {
    match f {
        Formula::Pred(_) => true,
        Formula::Not(c) | Formula::Eventually(_, _, c) | Formula::Always(_, _, c) => until_free(c),
        Formula::And(cs) | Formula::Or(cs) => cs.iter().all(until_free),
        Formula::Until(..) => false,
    }
}

pub fn random_signal(rng: &mut impl Rng, len: usize) -> Signal {
    let samples = (0..len)
        .map(|_| (0..Q).map(|_| rng.gen_range(-4.0..4.0)).collect())
        .collect();
    Signal::flat(samples).unwrap()
}

/// Signal long enough for the formula at t = 0, with a little slack.
pub fn fitting_signal(rng: &mut impl Rng, f: &Formula) -> Signal {
    let len = f.horizon() as usize + 1 + rng.gen_range(0..4);
    random_signal(rng, len)
}
