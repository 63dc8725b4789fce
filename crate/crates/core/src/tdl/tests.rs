use super::*;

const CR: &str = include_str!("../../../../corpus/challenge_response.tdl");
const CR_RESET: &str = include_str!("../../../../corpus/challenge_response_reset.tdl");

fn kinds(text: &str) -> Vec<DiagnosticKind> {
    validate(&parse_program(text).unwrap())
        .into_iter()
        .map(|d| d.kind)
        .collect()
}

#[test]
fn challenge_response_shape() {
    let p = parse_program(CR).unwrap();
    let arity: Vec<(&str, usize)> = p
        .threads
        .iter()
        .map(|t| (t.name.as_str(), t.locals.len()))
        .collect();
    assert_eq!(arity, [("Init", 3), ("Resp", 3), ("Main", 1)]);
    assert_eq!(p.pool, ["Main"]);
    assert_eq!(p.constants, ["c"]);
    assert!(validate(&p).is_empty(), "{:?}", validate(&p));
    assert!(validate(&parse_program(CR_RESET).unwrap()).is_empty());

    let init = p.thread("Init").unwrap();
    assert_eq!(init.start, "init_A");
    assert_eq!(init.locations(), ["init_A", "gen_A", "wait_A", "stop_A"]);
    match &init.rules[1].action {
        Action::Send { channel, template, .. } => {
            assert_eq!(*channel, Expr::Const("c".into()));
            assert_eq!(template, &["n_A"]);
        }
        a => panic!("unexpected {a:?}"),
    }
    match &init.rules[2].action {
        Action::Receive { channel, assign, .. } => {
            assert_eq!(*channel, Expr::Var("n_A".into()));
            assert_eq!(assign.get("m_A"), Some(&Expr::Var("y".into())));
        }
        a => panic!("unexpected {a:?}"),
    }
}

#[test]
fn printing_then_reading_is_identity() {
    for text in [CR, CR_RESET] {
        let p = parse_program(text).unwrap();
        let again = parse_program(&p.to_string()).unwrap();
        assert_eq!(p, again);
    }
}

#[test]
fn empty_inputs() {
    let p = parse_program("").unwrap();
    assert_eq!(p, Program::default());
    let p = parse_program("thread Idle();\ninit pool: Idle").unwrap();
    assert!(p.threads[0].rules.is_empty());
    assert!(validate(&p).is_empty());
    assert_eq!(parse_program(&p.to_string()).unwrap(), p);
}

#[test]
fn unicode_spellings() {
    let text = "thread T(local x);\n a —t→ b [x := ⊥]\n";
    assert!(parse_program(text).is_err());
    let text = "thread T(local x);\n a -t→ b [x := ⊥, x ≠ ⊥]\n";
    let p = parse_program(text).unwrap();
    match &p.threads[0].rules[0].action {
        Action::Internal { guard, assign, .. } => {
            assert_eq!(guard.0, [GuardAtom::Neq("x".into(), Expr::Bottom)]);
            assert_eq!(assign.0, [("x".to_string(), Expr::Bottom)]);
        }
        a => panic!("unexpected {a:?}"),
    }
}

#[test]
fn syntax_errors_have_positions() {
    let e = parse_program("thread T(local x);\n  a -t-> b [x :=]\n").unwrap_err();
    assert_eq!((e.line, e.col), (2, 17));
    let e = parse_program("a -t-> b").unwrap_err();
    assert_eq!((e.line, e.col), (1, 1));
}

#[test]
fn unknown_spawn_target_is_a_parse_error() {
    let e = parse_program("thread T();\n a -go-> b [run Nope]\n").unwrap_err();
    assert!(e.message.contains("Nope"));
    assert_eq!(e.line, 2);
}

#[test]
fn duplicate_assignment_target() {
    let k = kinds("const a, b;\nthread T(local x);\n s -t-> s [x := a, x := b]\n");
    assert_eq!(k, [DiagnosticKind::DuplicateTarget]);
}

#[test]
fn received_variable_must_be_new() {
    let k = kinds("const c;\nthread T(local x);\n s -c?(x)-> s\n");
    assert_eq!(k, [DiagnosticKind::TemplateNotFresh]);
}

#[test]
fn spawn_must_bind_every_local() {
    let text = "thread P(local a);\n s -go-> s [run Q with b := a]\nthread Q(local b, d);\n";
    assert_eq!(kinds(text), [DiagnosticKind::SpawnBinding]);
    let text = "thread P(local a);\n s -go-> s [run Q with b := a, d := a, e := a]\nthread Q(local b, d);\n";
    assert_eq!(kinds(text), [DiagnosticKind::SpawnBinding]);
}

#[test]
fn scope_and_sharing_checks() {
    let text = "\
const k;
thread P(local a, k) start s;
  s -t-> u [a = zz]
  s -bot!(a)-> u
thread Q(local a) start u;
init pool: P, R
";
    let k = kinds(text);
    assert_eq!(
        k,
        [
            DiagnosticKind::ConstantClash,
            DiagnosticKind::SharedLocal,
            DiagnosticKind::SharedLocation,
            DiagnosticKind::OutOfScope,
            DiagnosticKind::BottomChannel,
            DiagnosticKind::UnknownPoolThread,
        ]
    );
}

#[test]
fn validation_is_deterministic() {
    let text = "thread T(local x);\n s -t-> s [x := a, x := b, y := x]\n";
    let p = parse_program(text).unwrap();
    assert_eq!(validate(&p), validate(&p));
    assert_eq!(validate(&p).len(), 4);
}

#[test]
fn case_matters_for_locations() {
    let text = "thread A(local x) start Idle;\n Idle -t-> Idle\nthread B(local y) start idle;\n idle -t-> idle\n";
    assert!(kinds(text).is_empty());
}
