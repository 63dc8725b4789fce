mod common;

use tdlv::interp::Interpreter;
use tdlv::msr::parse_spec;
use tdlv::tdl::parse_program;
use tdlv::tdl2msr::{check_msr_to_tdl, check_tdl_to_msr, translate, translate_with, TranslateOptions};

use common::*;

#[test]
fn generator_produces_parseable_text() {
    let parsed = (0..200).filter(|s| parse_program(&random_program_text(*s)).is_ok()).count();
    assert_eq!(parsed, 200);
}

#[test]
fn random_runs_correspond() {
    let (mut forward, mut backward) = (0, 0);
    let complete = TranslateOptions { intra_thread_rendezvous: true };
    for (seed, p) in valid_programs(40) {
        let it = Interpreter::new(&p).unwrap();
        let tr = translate_with(&p, complete).unwrap();
        for run in 0..3 {
            forward += check_tdl_to_msr(&it, &tr, 6, run).unwrap_or_else(|e| panic!("program {seed}:\n{p}\n{e}"));
            backward += check_msr_to_tdl(&it, &tr, 7, run).unwrap_or_else(|e| panic!("program {seed}:\n{p}\n{e}"));
        }
    }
    eprintln!("{forward} {backward}");
    assert!(forward > 400 && backward > 400, "{forward} {backward}");
}

#[test]
fn running_example_matches_reference_rules() {
    let p = parse_program(include_str!("../../../corpus/challenge_response.tdl")).unwrap();
    let tr = translate(&p).unwrap();
    let reference = parse_spec(include_str!("../../../corpus/challenge_response.msr")).unwrap();
    let theirs = align(&tr.spec.sig, &reference).expect("same predicates");
    assert!(perfect_matching(&tr.spec.rules, &theirs));
    let mut broken = theirs.clone();
    broken[3].constraint = broken[3].constraint.with([tdlv::nc::NcAtom::GtConst(broken[3].head[0].args[0], 0)]);
    assert!(!perfect_matching(&tr.spec.rules, &broken));
}

#[test]
fn default_translation_omits_same_definition_rendezvous() {
    let p = parse_program("const k;\nthread T() start a;\n  a -k!()-> b\n  a -k?()-> c\ninit pool: T, T\n").unwrap();
    let it = Interpreter::new(&p).unwrap();
    assert_eq!(translate(&p).unwrap().table.skipped_intra_pairs, 1);
    let mut missed = false;
    for run in 0..8 {
        missed |= check_tdl_to_msr(&it, &translate(&p).unwrap(), 3, run).is_err();
    }
    assert!(missed);
    let complete = translate_with(&p, TranslateOptions { intra_thread_rendezvous: true }).unwrap();
    for run in 0..8 {
        check_tdl_to_msr(&it, &complete, 3, run).unwrap();
    }
}
