use super::{default_start, Action, Assignment, Expr, Guard, GuardAtom, Pos, Program, Rule, ThreadDef};
use crate::error::ParseError;
use crate::lex::{lex, Cursor, Tok};

/// Reads a program.
///
/// ```text
/// const c;
/// thread Init(local id_A, n_A, m_A) start init_A;
///   init_A -fresh-> gen_A [n_A := new]
///   gen_A -c!(n_A)-> wait_A
///   wait_A -n_A?(y)-> stop_A [m_A := y]
/// init pool: Init
/// ```
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let toks = lex(text)?;
    let mut cur = Cursor::new(&toks, text.lines().count().max(1));
    let mut prog = Program::default();
    let mut explicit_start: Vec<bool> = Vec::new();

    while !cur.at_end() {
        let (line, col) = cur.position();
        let pos = Pos { line, col };
        if cur.eat_keyword("const") {
            loop {
                prog.constants.push(cur.ident()?.to_string());
                if !cur.eat(&Tok::Comma) {
                    break;
                }
            }
            cur.eat(&Tok::Semi);
        } else if cur.eat_keyword("thread") || cur.eat_keyword("Thread") {
            let (def, explicit) = thread_header(&mut cur, pos)?;
            prog.threads.push(def);
            explicit_start.push(explicit);
        } else if is_pool_line(&cur) {
            cur.next();
            cur.next();
            cur.expect(&Tok::Colon)?;
            if matches!(cur.peek(), Some(Tok::Ident(_))) {
                loop {
                    prog.pool.push(cur.ident()?.to_string());
                    if !cur.eat(&Tok::Comma) {
                        break;
                    }
                }
            }
            cur.eat(&Tok::Semi);
        } else if matches!(cur.peek(), Some(Tok::Ident(_))) {
            let Some(thread) = prog.threads.last_mut() else {
                return Err(ParseError::new(line, col, "rule outside of a thread definition"));
            };
            let rule = rule(&mut cur, pos)?;
            thread.rules.push(rule);
        } else {
            return Err(cur.unexpected("`const`, `thread`, `init pool` or a rule"));
        }
    }

    for (t, explicit) in prog.threads.iter_mut().zip(explicit_start) {
        if !explicit {
            t.start = match t.rules.first() {
                Some(r) => r.source.clone(),
                None => default_start(&t.name),
            };
        }
    }
    resolve(&mut prog)?;
    Ok(prog)
}

fn is_pool_line(cur: &Cursor) -> bool {
    matches!(cur.peek(), Some(Tok::Ident(s)) if s == "init")
        && matches!(cur.peek_at(1), Some(Tok::Ident(s)) if s == "pool")
}

fn thread_header(cur: &mut Cursor, pos: Pos) -> Result<(ThreadDef, bool), ParseError> {
    let name = cur.ident()?.to_string();
    cur.expect(&Tok::LParen)?;
    cur.eat_keyword("local");
    let mut locals = Vec::new();
    if !cur.eat(&Tok::RParen) {
        loop {
            locals.push(cur.ident()?.to_string());
            if !cur.eat(&Tok::Comma) {
                break;
            }
        }
        cur.expect(&Tok::RParen)?;
    }
    let mut start = String::new();
    let explicit = cur.eat_keyword("start");
    if explicit {
        start = cur.ident()?.to_string();
    }
    cur.eat(&Tok::Semi);
    let def = ThreadDef {
        name,
        locals,
        start,
        rules: Vec::new(),
        pos,
    };
    Ok((def, explicit))
}

fn expr(cur: &mut Cursor) -> Result<Expr, ParseError> {
    let name = cur.ident()?;
    Ok(if name == "bot" {
        Expr::Bottom
    } else {
        Expr::Var(name.to_string())
    })
}

fn name_list(cur: &mut Cursor) -> Result<Vec<String>, ParseError> {
    cur.expect(&Tok::LParen)?;
    let mut out = Vec::new();
    if cur.eat(&Tok::RParen) {
        return Ok(out);
    }
    loop {
        out.push(cur.ident()?.to_string());
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    cur.expect(&Tok::RParen)?;
    Ok(out)
}

enum Label {
    Internal(String),
    Send(Expr, Vec<String>),
    Receive(Expr, Vec<String>),
}

fn rule(cur: &mut Cursor, pos: Pos) -> Result<Rule, ParseError> {
    let source = cur.ident()?.to_string();
    cur.expect(&Tok::Minus)?;
    let label = match cur.peek_at(1) {
        Some(Tok::Bang) | Some(Tok::Query) => {
            let ch = expr(cur)?;
            let send = cur.eat(&Tok::Bang);
            if !send {
                cur.expect(&Tok::Query)?;
            }
            let tpl = name_list(cur)?;
            if send {
                Label::Send(ch, tpl)
            } else {
                Label::Receive(ch, tpl)
            }
        }
        _ => Label::Internal(cur.ident()?.to_string()),
    };
    cur.expect(&Tok::Arrow)?;
    let target = cur.ident()?.to_string();

    let mut guard = Guard::default();
    let mut assign = Assignment::default();
    let mut special: Option<Action> = None;
    if cur.eat(&Tok::LBracket) {
        if let Label::Internal(l) = &label {
            special = special_action(cur, l)?;
        }
        if special.is_none() && !cur.eat(&Tok::RBracket) {
            loop {
                item(cur, &mut guard, &mut assign)?;
                if !(cur.eat(&Tok::Comma) || cur.eat(&Tok::Semi)) {
                    break;
                }
            }
            cur.expect(&Tok::RBracket)?;
        }
    }

    let action = match (label, special) {
        (_, Some(a)) => a,
        (Label::Internal(label), None) => Action::Internal {
            label,
            guard,
            assign,
        },
        (Label::Send(channel, template), None) => Action::Send {
            channel,
            template,
            guard,
            assign,
        },
        (Label::Receive(channel, template), None) => Action::Receive {
            channel,
            template,
            guard,
            assign,
        },
    };
    Ok(Rule {
        source,
        target,
        action,
        pos,
    })
}

/// `x := new]` or `run T with ...]`; consumes the closing bracket.
fn special_action(cur: &mut Cursor, label: &str) -> Result<Option<Action>, ParseError> {
    let is_new = matches!(cur.peek_at(1), Some(Tok::ColonEq))
        && matches!(cur.peek_at(2), Some(Tok::Ident(s)) if s == "new")
        && matches!(cur.peek_at(3), Some(Tok::RBracket));
    if is_new {
        let var = cur.ident()?.to_string();
        cur.next();
        cur.next();
        cur.next();
        return Ok(Some(Action::NewName {
            label: label.to_string(),
            var,
        }));
    }
    if !cur.eat_keyword("run") {
        return Ok(None);
    }
    let thread = cur.ident()?.to_string();
    let mut assign = Assignment::default();
    if cur.eat_keyword("with") {
        loop {
            let t = cur.ident()?.to_string();
            cur.expect(&Tok::ColonEq)?;
            assign.0.push((t, expr(cur)?));
            if !(cur.eat(&Tok::Comma) || cur.eat(&Tok::Semi)) {
                break;
            }
        }
    }
    cur.expect(&Tok::RBracket)?;
    Ok(Some(Action::Spawn {
        label: label.to_string(),
        thread,
        assign,
    }))
}

fn item(cur: &mut Cursor, guard: &mut Guard, assign: &mut Assignment) -> Result<(), ParseError> {
    if cur.eat_keyword("true") {
        guard.0.push(GuardAtom::True);
        return Ok(());
    }
    let x = cur.ident()?.to_string();
    match cur.next() {
        Some(Tok::Eq) => guard.0.push(GuardAtom::Eq(x, expr(cur)?)),
        Some(Tok::Neq) => guard.0.push(GuardAtom::Neq(x, expr(cur)?)),
        Some(Tok::ColonEq) => {
            if matches!(cur.peek(), Some(Tok::Ident(s)) if s == "new") {
                return Err(cur.error("`new` must be the only item of a name-generation rule"));
            }
            assign.0.push((x, expr(cur)?))
        }
        _ => return Err(cur.error("expected `=`, `!=` or `:=`")),
    }
    Ok(())
}

/// Turns identifiers that are not variables in scope but are declared
/// constants into [`Expr::Const`], and checks spawn targets exist.
fn resolve(prog: &mut Program) -> Result<(), ParseError> {
    let consts = prog.constants.clone();
    let names: Vec<String> = prog.threads.iter().map(|t| t.name.clone()).collect();
    for t in &mut prog.threads {
        let locals = t.locals.clone();
        for r in &mut t.rules {
            let mut scope: Vec<&str> = locals.iter().map(String::as_str).collect();
            let fix = |e: &mut Expr, scope: &[&str]| {
                if let Expr::Var(v) = e {
                    if !scope.contains(&v.as_str()) && consts.contains(v) {
                        *e = Expr::Const(v.clone());
                    }
                }
            };
            let fix_guard = |g: &mut Guard, scope: &[&str]| {
                for a in &mut g.0 {
                    if let GuardAtom::Eq(_, e) | GuardAtom::Neq(_, e) = a {
                        fix(e, scope);
                    }
                }
            };
            match &mut r.action {
                Action::Internal { guard, assign, .. } => {
                    fix_guard(guard, &scope);
                    assign.0.iter_mut().for_each(|(_, e)| fix(e, &scope));
                }
                Action::NewName { .. } => {}
                Action::Spawn { thread, assign, .. } => {
                    if !names.contains(thread) {
                        return Err(ParseError::new(
                            r.pos.line,
                            r.pos.col,
                            format!("unknown thread `{thread}` in spawn"),
                        ));
                    }
                    assign.0.iter_mut().for_each(|(_, e)| fix(e, &scope));
                }
                Action::Send {
                    channel,
                    guard,
                    assign,
                    ..
                } => {
                    fix(channel, &scope);
                    fix_guard(guard, &scope);
                    assign.0.iter_mut().for_each(|(_, e)| fix(e, &scope));
                }
                Action::Receive {
                    channel,
                    template,
                    guard,
                    assign,
                } => {
                    fix(channel, &scope);
                    scope.extend(template.iter().map(String::as_str));
                    fix_guard(guard, &scope);
                    assign.0.iter_mut().for_each(|(_, e)| fix(e, &scope));
                }
            }
        }
    }
    Ok(())
}
