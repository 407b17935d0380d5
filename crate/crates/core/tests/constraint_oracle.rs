//! The constraint engine against brute-force enumeration. Every generated
//! constraint bounds its integer variables to [-5, 5], so enumeration over
//! the box decides it exactly.

use std::collections::{BTreeMap, BTreeSet};

use hornstrip::constraints::{entails, is_sat, project, widen, LinExpr, Rel};
use hornstrip::{Atomic, Constraint, Sym};
use proptest::prelude::*;

const LO: i64 = -5;
const HI: i64 = 5;
const INTS: [&str; 4] = ["x0", "x1", "x2", "x3"];
const BOOLS: [&str; 6] = ["b0", "b1", "b2", "b3", "b4", "b5"];

#[derive(Clone, Debug)]
enum Spec {
    Lin(Vec<i64>, i64, Rel),
    Lit(usize, bool),
    Same(usize, usize, bool),
}

#[derive(Clone, Debug)]
struct Case {
    ints: usize,
    bools: usize,
    atoms: Vec<Spec>,
}

fn spec(ints: usize, bools: usize) -> BoxedStrategy<Spec> {
    let lin = (
        prop::collection::vec(-3i64..=3, ints),
        -6i64..=6,
        prop_oneof![Just(Rel::Eq), Just(Rel::Ne), Just(Rel::Le)],
    )
        .prop_map(|(c, k, r)| Spec::Lin(c, k, r));
    if bools == 0 {
        return lin.boxed();
    }
    prop_oneof![
        3 => lin,
        1 => (0..bools, any::<bool>()).prop_map(|(v, s)| Spec::Lit(v, s)),
        1 => (0..bools, 0..bools, any::<bool>()).prop_map(|(a, b, s)| Spec::Same(a, b, s)),
    ]
    .boxed()
}

fn case_with(ints: usize, bools: usize) -> impl Strategy<Value = Case> {
    prop::collection::vec(spec(ints, bools), 0..5).prop_map(move |atoms| Case {
        ints,
        bools,
        atoms,
    })
}

fn pair() -> impl Strategy<Value = (Case, Case)> {
    (1usize..=4, 0usize..=6).prop_flat_map(|(i, b)| (case_with(i, b), case_with(i, b)))
}

fn build(c: &Case, bounded: bool) -> Constraint {
    let mut k = Constraint::top();
    if bounded {
        for v in &INTS[..c.ints] {
            // LO <= v <= HI
            k.push_norm(Atomic::lin(
                LinExpr::var(*v).sub(&LinExpr::constant(HI)).unwrap(),
                Rel::Le,
            ));
            k.push_norm(Atomic::lin(
                LinExpr::constant(LO).sub(&LinExpr::var(*v)).unwrap(),
                Rel::Le,
            ));
        }
    }
    for a in &c.atoms {
        match a {
            Spec::Lin(cs, k0, r) => {
                let coeffs: BTreeMap<Sym, i64> = cs
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| **a != 0)
                    .map(|(i, a)| (Sym::new(INTS[i]), *a))
                    .collect();
                k.push_norm(Atomic::lin(
                    LinExpr {
                        coeffs,
                        constant: *k0,
                    },
                    *r,
                ));
            }
            Spec::Lit(v, s) => k.push(Atomic::BoolLit(Sym::new(BOOLS[*v]), *s)),
            Spec::Same(a, b, s) if a != b => {
                let (x, y) = (Sym::new(BOOLS[*a.min(b)]), Sym::new(BOOLS[*a.max(b)]));
                k.push(Atomic::BoolEq(x, y, *s));
            }
            Spec::Same(_, _, true) => {}
            Spec::Same(..) => k.push_norm(hornstrip::constraints::Norm::False),
        }
    }
    k
}

/// Integer and boolean atomics never share variables, so a constraint
/// holds at a point iff its integer part holds at the integer coordinates
/// and its boolean part at the boolean ones.
struct Models {
    ints: Vec<[i64; 4]>,
    bools: Vec<[bool; 6]>,
}

fn index(names: &[&str], x: &Sym) -> usize {
    names
        .iter()
        .position(|n| *n == x.as_str())
        .expect("known variable")
}

fn holds_int(a: &Atomic, p: &[i64; 4]) -> bool {
    let Atomic::Lin(e, r) = a else { return true };
    let v: i64 = e
        .coeffs
        .iter()
        .map(|(x, k)| k * p[index(&INTS, x)])
        .sum::<i64>()
        + e.constant;
    match r {
        Rel::Eq => v == 0,
        Rel::Ne => v != 0,
        Rel::Le => v <= 0,
    }
}

fn holds_bool(a: &Atomic, p: &[bool; 6]) -> bool {
    match a {
        Atomic::Lin(..) => true,
        Atomic::BoolLit(x, s) => p[index(&BOOLS, x)] == *s,
        Atomic::BoolEq(x, y, s) => (p[index(&BOOLS, x)] == p[index(&BOOLS, y)]) == *s,
    }
}

fn int_points(n: usize) -> Vec<[i64; 4]> {
    let mut out = vec![[0i64; 4]];
    for i in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                (LO..=HI).map(move |k| {
                    let mut q = p;
                    q[i] = k;
                    q
                })
            })
            .collect();
    }
    out
}

fn bool_points(n: usize) -> Vec<[bool; 6]> {
    (0..1u32 << n)
        .map(|m| std::array::from_fn(|i| i < n && m & (1 << i) != 0))
        .collect()
}

fn models(c: &Constraint, ints: &[[i64; 4]], bools: &[[bool; 6]]) -> Models {
    if c.is_false_marker() {
        return Models {
            ints: vec![],
            bools: vec![],
        };
    }
    Models {
        ints: ints
            .iter()
            .filter(|p| c.atoms().iter().all(|a| holds_int(a, p)))
            .copied()
            .collect(),
        bools: bools
            .iter()
            .filter(|p| c.atoms().iter().all(|a| holds_bool(a, p)))
            .copied()
            .collect(),
    }
}

impl Models {
    fn is_empty(&self) -> bool {
        self.ints.is_empty() || self.bools.is_empty()
    }

    fn count(&self) -> usize {
        self.ints.len() * self.bools.len()
    }
}

fn brute_entails(m: &Models, d: &Constraint) -> bool {
    if m.is_empty() {
        return true;
    }
    !d.is_false_marker()
        && d.atoms().iter().all(|a| {
            m.ints.iter().all(|p| holds_int(a, p)) && m.bools.iter().all(|p| holds_bool(a, p))
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1200, ..ProptestConfig::default() })]

    #[test]
    fn engine_agrees_with_enumeration((a, b) in pair(), keep_mask in 0u32..1024) {
        let (ip, bp) = (int_points(a.ints), bool_points(a.bools));
        let c1 = build(&a, true);
        let c2 = build(&b, true);
        let d = build(&b, false);
        let m1 = models(&c1, &ip, &bp);
        let m2 = models(&c2, &ip, &bp);

        prop_assert_eq!(is_sat(&c1).unwrap(), !m1.is_empty(), "is_sat({})", c1);
        prop_assert_eq!(entails(&c1, &d), brute_entails(&m1, &d), "{} |= {}", c1, d);

        // widening keeps exactly the conjuncts of c2 entailed by c1
        let w = widen(&c2, &c1);
        prop_assert!(brute_entails(&m1, &w));
        prop_assert!(brute_entails(&m2, &w));
        for x in c2.atoms() {
            let single = Constraint::from_atomics([x.clone()]);
            let kept = w.atoms().contains(x);
            prop_assert_eq!(kept, brute_entails(&m1, &single), "widen kept {} ", x);
        }

        let names: Vec<&str> = INTS[..a.ints].iter().chain(&BOOLS[..a.bools]).copied().collect();
        let keep: BTreeSet<Sym> = names
            .iter()
            .enumerate()
            .filter(|(i, _)| keep_mask & (1 << i) != 0)
            .map(|(_, n)| Sym::new(n))
            .collect();
        let pi = project(&c1, &keep);
        prop_assert!(pi.vars().is_subset(&keep), "project vars {}", pi);
        prop_assert!(brute_entails(&m1, &pi), "{} does not entail its projection {}", c1, pi);
        if !m1.is_empty() {
            prop_assert!(!pi.is_false_marker(), "satisfiable {} projected to false", c1);
        }
        if keep.is_superset(&c1.vars()) {
            prop_assert!(models(&pi, &ip, &bp).count() == m1.count(), "projection onto all vars changed {}", c1);
        }
    }
}

#[test]
fn projection_examples() {
    // x0 = x1 + 1, x1 >= 0, projected on x0, gives x0 >= 1
    let c = build(
        &Case {
            ints: 2,
            bools: 0,
            atoms: vec![
                Spec::Lin(vec![1, -1], -1, Rel::Eq),
                Spec::Lin(vec![0, -1], 0, Rel::Le),
            ],
        },
        false,
    );
    let pi = project(&c, &BTreeSet::from([Sym::new("x0")]));
    let lower = build(
        &Case {
            ints: 1,
            bools: 0,
            atoms: vec![Spec::Lin(vec![-1], 1, Rel::Le)],
        },
        false,
    );
    assert!(entails(&pi, &lower) && entails(&lower, &pi), "{pi}");
}
