use super::*;
use crate::lex::{lex, Cursor};

const FIG: &str = include_str!("../../../../corpus/challenge_response.msr");

fn ground(spec: &mut MsrSpec, text: &str) -> GroundConfig {
    let toks = lex(text).unwrap();
    let mut cur = Cursor::new(&toks, 1);
    parse_ground_list(&mut cur, &mut spec.sig, false).unwrap()
}

fn sigma(rule: &MsrRule, vals: &[(&str, i64)]) -> BTreeMap<VarId, Value> {
    vals.iter()
        .map(|(n, c)| {
            let v = rule.names.iter().find(|(_, m)| m == n).unwrap().0;
            (*v, int(*c))
        })
        .collect()
}

#[test]
fn reads_the_encoding_of_the_running_example() {
    let spec = parse_spec(FIG).unwrap();
    assert_eq!(spec.rules.len(), 10);
    assert_eq!(spec.initials.len(), 1);
    assert_eq!(spec.anchors(), [int(0)]);
    let init = spec.sig.lookup("init").unwrap();
    assert_eq!(spec.sig.arity(init), 0);
    assert_eq!(spec.sig.arity(spec.sig.lookup("gen_A").unwrap()), 3);
}

#[test]
fn writing_then_reading_is_stable() {
    let spec = parse_spec(FIG).unwrap();
    let text = write_spec(&spec);
    let again = parse_spec(&text).unwrap();
    assert_eq!(write_spec(&again), text);
    assert_eq!(again.initials, spec.initials);
    for (a, b) in spec.rules.iter().zip(&again.rules) {
        assert!(a.equivalent_to(b), "{}", write_rule(a, &spec.sig));
    }
}

#[test]
fn origin_comments_survive() {
    let spec = parse_spec("# from here\n# and here\np(x) -> q(x)\n\n# dropped\n\nq(x) -> eps\n").unwrap();
    assert_eq!(spec.rules[0].origin, "from here\nand here");
    assert_eq!(spec.rules[1].origin, "");
    assert!(write_spec(&spec).starts_with("# from here\n# and here\np(x) -> q(x)\n"));
}

#[test]
fn arity_clash_is_reported() {
    let e = parse_spec("p(x) -> q\nq(y) -> eps\n").unwrap_err();
    assert_eq!((e.line, e.col), (2, 1));
    assert!(e.message.contains("arity"));
}

#[test]
fn firing_reproduces_the_displayed_steps() {
    let mut spec = parse_spec(FIG).unwrap();
    let c0 = ground(&mut spec, "fresh(4) | init_M(0) | init_A(2,0,0) | init_B(3,0,0)");
    let r5 = &spec.rules[4].clone();
    let s = sigma(r5, &[("id", 2), ("n", 0), ("m", 0), ("u", 4), ("n'", 6), ("u'", 8)]);
    let c1 = fire(r5, &c0, &s).unwrap();
    assert_eq!(c1, ground(&mut spec, "fresh(8) | init_M(0) | gen_A(2,6,0) | init_B(3,0,0)"));

    let r6 = &spec.rules[5].clone();
    let s = sigma(
        r6,
        &[("id1", 2), ("n", 6), ("m", 0), ("id2", 3), ("u", 0), ("v", 0), ("u'", 6), ("v'", 0)],
    );
    let c2 = fire(r6, &c1, &s).unwrap();
    assert_eq!(c2, ground(&mut spec, "fresh(8) | init_M(0) | wait_A(2,6,0) | gen_B(3,6,0)"));

    let bad = sigma(r5, &[("id", 2), ("n", 0), ("m", 0), ("u", 4), ("n'", 3), ("u'", 8)]);
    assert!(matches!(fire(r5, &c0, &bad), Err(MsrError::NotEnabled(_))));
    let missing = sigma(r5, &[("id", 9), ("n", 0), ("m", 0), ("u", 4), ("n'", 6), ("u'", 8)]);
    assert!(fire(r5, &c0, &missing).is_err());
}

#[test]
fn initial_step_has_one_successor_up_to_isomorphism() {
    let mut spec = parse_spec(FIG).unwrap();
    let init = spec.initials[0].clone();
    let succ = post_successors(&spec, &init);
    assert_eq!(succ.len(), 1);
    assert_eq!(succ[0].0, 0);
    assert_eq!(succ[0].1, ground(&mut spec, "fresh(1) | init_M(0)"));
}

#[test]
fn successors_cover_every_order_type() {
    let spec = parse_spec("p(x) -> p(x) | q(y)\n").unwrap();
    let mut s2 = spec.clone();
    let start = ground(&mut s2, "p(1) | p(3)");
    let succ = post_successors(&spec, &start);
    // y below, equal to, between or above the two stored values
    assert_eq!(succ.len(), 5);
    for (_, g) in &succ {
        assert_eq!(g.len(), 3);
    }
}

#[test]
fn equal_atoms_are_matched_once() {
    let spec = parse_spec("p(x) | p(y) -> eps\n").unwrap();
    let mut s2 = spec.clone();
    let g = ground(&mut s2, "p(1) | p(1) | p(2)");
    let mut n = 0;
    head_matches(&spec.rules[0].head, &g, &mut |_| n += 1);
    // (1,1), (1,2), (2,1)
    assert_eq!(n, 3);
}

#[test]
fn repeated_head_variables_require_equal_values() {
    let spec = parse_spec("p(x) | q(x) -> r\n").unwrap();
    let mut s2 = spec.clone();
    assert!(post_successors(&spec, &ground(&mut s2, "p(1) | q(2)")).is_empty());
    assert_eq!(post_successors(&spec, &ground(&mut s2, "p(1) | q(1)")).len(), 1);
}

#[test]
fn rule_equivalence_ignores_names_and_embedding_of_equalities() {
    let a = parse_spec("p(a, b) -> q(a', b) : a' > a").unwrap();
    let b = parse_spec("p(u, v) -> q(w, z) : z = v, w > u").unwrap();
    let c = parse_spec("p(u, v) -> q(w, z) : z = v, u > w").unwrap();
    let d = parse_spec("p(u, v) -> q(w, z) : z = v, w > u, w > 0").unwrap();
    assert!(a.rules[0].equivalent_to(&b.rules[0]));
    assert!(!a.rules[0].equivalent_to(&c.rules[0]));
    assert!(!a.rules[0].equivalent_to(&d.rules[0]));
    let e = parse_spec("q(w, z) -> p(u, v) : z = v, w > u").unwrap();
    assert!(!a.rules[0].equivalent_to(&e.rules[0]));
}

#[test]
fn bounded_reachability_reaches_a_created_thread() {
    let mut spec = parse_spec(FIG).unwrap();
    let r = reach_bounded(&spec, 3, 10_000).unwrap();
    let target = ground(&mut spec, "fresh(2) | init_M(1) | init_A(1,0,0)");
    let k = r.find(&target).expect("created initiator");
    assert_eq!(r.depth[k], 3);
    let rules: Vec<Option<usize>> = r.trace(k).iter().map(|s| s.0).collect();
    assert_eq!(rules, [None, Some(0), Some(1), Some(2)]);
    assert!(reach_bounded(&spec, 6, 5).is_err());
}
