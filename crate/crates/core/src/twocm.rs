//! Two counter machines and their simulation by thread definitions: each
//! counter is a doubly linked list of `Cell` threads headed by a `Last`
//! thread, and a `CM` thread plays the instructions.
//!
//! ```text
//! l0: inc c1 goto l1
//! l1: if c1>0 dec goto l0 else goto l2
//! l2: halt
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::ParseError;
use crate::interp::{GlobalConfig, Interpreter};
use crate::tdl::{parse_program, Program};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Instruction {
    Inc {
        counter: u8,
        from: String,
        to: String,
    },
    DecTest {
        counter: u8,
        from: String,
        nonzero: String,
        zero: String,
    },
}

impl Instruction {
    pub fn from(&self) -> &str {
        match self {
            Instruction::Inc { from, .. } | Instruction::DecTest { from, .. } => from,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CmProgram {
    pub initial: String,
    pub instructions: Vec<Instruction>,
    /// Locations without an instruction.
    pub halts: Vec<String>,
}

impl CmProgram {
    pub fn instruction_at(&self, loc: &str) -> Option<&Instruction> {
        self.instructions.iter().find(|i| i.from() == loc)
    }

    pub fn locations(&self) -> Vec<&str> {
        let mut out: Vec<&str> = vec![&self.initial];
        for i in &self.instructions {
            let locs: Vec<&str> = match i {
                Instruction::Inc { from, to, .. } => vec![from, to],
                Instruction::DecTest {
                    from, nonzero, zero, ..
                } => vec![from, nonzero, zero],
            };
            for l in locs {
                if !out.contains(&l) {
                    out.push(l);
                }
            }
        }
        for h in &self.halts {
            if !out.contains(&h.as_str()) {
                out.push(h);
            }
        }
        out
    }
}

impl fmt::Display for CmProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.instructions {
            match i {
                Instruction::Inc { counter, from, to } => writeln!(f, "{from}: inc c{counter} goto {to}")?,
                Instruction::DecTest {
                    counter,
                    from,
                    nonzero,
                    zero,
                } => writeln!(f, "{from}: if c{counter}>0 dec goto {nonzero} else goto {zero}")?,
            }
        }
        for h in &self.halts {
            writeln!(f, "{h}: halt")?;
        }
        Ok(())
    }
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Reads one instruction per line. The first location mentioned is the
/// initial one; every target must be defined by an instruction or `halt`.
pub fn parse_cm(text: &str) -> Result<CmProgram, ParseError> {
    let mut instructions = Vec::new();
    let mut halts = Vec::new();
    let mut defined: BTreeMap<String, usize> = BTreeMap::new();
    let mut targets: Vec<(String, usize)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| ParseError::new(line_no, 1, msg);
        let (loc, rest) = line
            .split_once(':')
            .ok_or_else(|| err("expected `location: instruction`".into()))?;
        let loc = loc.trim().to_string();
        if !is_ident(&loc) {
            return Err(err(format!("`{loc}` is not a location name")));
        }
        if defined.insert(loc.clone(), line_no).is_some() {
            return Err(err(format!("location `{loc}` is defined twice")));
        }
        let spaced = rest.replace('>', " > ");
        let words: Vec<&str> = spaced.split_whitespace().collect();
        let counter = |w: &str| -> Result<u8, ParseError> {
            match w {
                "c1" => Ok(1),
                "c2" => Ok(2),
                _ => Err(err(format!("unknown counter `{w}`, expected c1 or c2"))),
            }
        };
        let target = |w: &str, targets: &mut Vec<(String, usize)>| -> Result<String, ParseError> {
            if !is_ident(w) {
                return Err(err(format!("`{w}` is not a location name")));
            }
            targets.push((w.to_string(), line_no));
            Ok(w.to_string())
        };
        match words.as_slice() {
            ["halt"] => halts.push(loc),
            ["inc", c, "goto", to] => instructions.push(Instruction::Inc {
                counter: counter(c)?,
                from: loc,
                to: target(to, &mut targets)?,
            }),
            ["if", c, ">", "0", "dec", "goto", nz, "else", "goto", z] => instructions.push(Instruction::DecTest {
                counter: counter(c)?,
                from: loc,
                nonzero: target(nz, &mut targets)?,
                zero: target(z, &mut targets)?,
            }),
            _ => {
                return Err(err(
                    "expected `inc cN goto L`, `if cN>0 dec goto L else goto L` or `halt`".into(),
                ))
            }
        }
    }
    for (t, line_no) in targets {
        if !defined.contains_key(&t) {
            return Err(ParseError::new(line_no, 1, format!("location `{t}` is never defined")));
        }
    }
    let initial = instructions
        .first()
        .map(|i| i.from().to_string())
        .or_else(|| halts.first().cloned())
        .unwrap_or_else(|| "start".to_string());
    Ok(CmProgram {
        initial,
        instructions,
        halts,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CmState {
    pub location: String,
    pub c1: u64,
    pub c2: u64,
}

impl CmState {
    pub fn initial(cm: &CmProgram) -> Self {
        CmState {
            location: cm.initial.clone(),
            c1: 0,
            c2: 0,
        }
    }

    pub fn counter(&self, i: u8) -> u64 {
        if i == 1 {
            self.c1
        } else {
            self.c2
        }
    }
}

/// One instruction; `None` at a location without one.
pub fn cm_step(s: &CmState, cm: &CmProgram) -> Option<CmState> {
    let mut next = s.clone();
    match cm.instruction_at(&s.location)? {
        Instruction::Inc { counter, to, .. } => {
            *counter_mut(&mut next, *counter) += 1;
            next.location = to.clone();
        }
        Instruction::DecTest {
            counter, nonzero, zero, ..
        } => {
            let c = counter_mut(&mut next, *counter);
            if *c > 0 {
                *c -= 1;
                next.location = nonzero.clone();
            } else {
                next.location = zero.clone();
            }
        }
    }
    Some(next)
}

fn counter_mut(s: &mut CmState, i: u8) -> &mut u64 {
    if i == 1 {
        &mut s.c1
    } else {
        &mut s.c2
    }
}

const CHANNELS: &str = "Zero, Dec, Inc, ZAck, NZAck, DAck, IAck, tstC, decC, z, nz, dack";

const LAST: &str = "\
thread Last(local id, last, aux) start Idle;
  Idle -Zero?(x)-> Busy [id = x]
  Busy -tstC!(id, last)-> Wait
  Wait -nz?(x)-> AckNZ [id = x]
  Wait -z?(x)-> AckZ [id = x]
  AckZ -ZAck!(id)-> Idle
  AckNZ -NZAck!(id)-> Idle
  Idle -Dec?(x)-> DBusy [id = x]
  DBusy -decC!(id, last)-> DWait
  DWait -dack?(x, u)-> DAck_st [id = x, last := u]
  DAck_st -DAck!(id)-> Idle
  Idle -Inc?(x)-> INew [id = x]
  INew -new-> IRun [aux := new]
  IRun -run-> IAck_st [run Cell with idc := id, prev := last, next := aux]
  IAck_st -IAck!(id)-> Idle [last := aux]
";

const CELL: &str = "\
thread Cell(local idc, prev, next) start idle;
  idle -tstC?(x, u)-> ackZ [x = idc, u = next, prev = next]
  idle -tstC?(x, u)-> ackNZ [x = idc, u = next, prev != next]
  ackZ -z!(idc)-> idle
  ackNZ -nz!(idc)-> idle
  idle -decC?(x, u)-> dec [x = idc, u = next, prev != next]
  dec -dack!(idc, prev)-> idle
";

const INIT: &str = "\
thread Init(local nid_1, p_1, nid_2, p_2) start init;
  init -freshId-> init_1 [nid_1 := new]
  init_1 -freshP-> init_2 [p_1 := new]
  init_2 -runC-> init_3 [run Cell with idc := nid_1, prev := p_1, next := p_1]
  init_3 -runL-> init_4 [run Last with id := nid_1, last := p_1, aux := bot]
  init_4 -freshId-> init_5 [nid_2 := new]
  init_5 -freshP-> init_6 [p_2 := new]
  init_6 -runC-> init_7 [run Cell with idc := nid_2, prev := p_2, next := p_2]
  init_7 -runL-> init_8 [run Last with id := nid_2, last := p_2, aux := bot]
  init_8 -runCM-> init_9 [run CM with id_1 := nid_1, id_2 := nid_2]
";

/// Location of the `CM` thread standing for a machine location.
pub fn cm_location(loc: &str) -> String {
    format!("at_{loc}")
}

pub fn generate_tdl_text(cm: &CmProgram) -> String {
    let mut out = format!("const {CHANNELS};\n\n{LAST}\n{CELL}\n");
    out.push_str(&format!(
        "thread CM(local id_1, id_2) start {};\n",
        cm_location(&cm.initial)
    ));
    for ins in &cm.instructions {
        match ins {
            Instruction::Inc { counter, from, to } => {
                out.push_str(&format!("  {} -Inc!(id_{counter})-> wait_{from}\n", cm_location(from)));
                out.push_str(&format!("  wait_{from} -IAck?(x)-> {} [x = id_{counter}]\n", cm_location(to)));
            }
            Instruction::DecTest {
                counter,
                from,
                nonzero,
                zero,
            } => {
                let i = counter;
                out.push_str(&format!("  {} -Zero!(id_{i})-> wait_{from}\n", cm_location(from)));
                out.push_str(&format!("  wait_{from} -NZAck?(x)-> dec_{from} [x = id_{i}]\n"));
                out.push_str(&format!("  dec_{from} -Dec!(id_{i})-> wdec_{from}\n"));
                out.push_str(&format!("  wdec_{from} -DAck?(y)-> {} [y = id_{i}]\n", cm_location(nonzero)));
                out.push_str(&format!("  wait_{from} -ZAck?(x)-> {} [x = id_{i}]\n", cm_location(zero)));
            }
        }
    }
    out.push_str(&format!("\n{INIT}\ninit pool: Init\n"));
    out
}

pub fn generate_tdl(cm: &CmProgram) -> Program {
    parse_program(&generate_tdl_text(cm)).expect("generated program is well formed")
}

/// Counter contents read off a global configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Observation {
    pub tdl_step: usize,
    pub location: String,
    /// Cells reachable from `Last` through `prev`, excluding the sentinel.
    pub live: [u64; 2],
    /// All `Cell` threads carrying the counter identifier.
    pub cells: [usize; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrespondenceReport {
    pub machine: Vec<CmState>,
    pub observed: Vec<Observation>,
    pub tdl_steps: usize,
    pub mismatch: Option<String>,
}

impl CorrespondenceReport {
    pub fn ok(&self) -> bool {
        self.mismatch.is_none()
    }
}

struct Reader<'a> {
    it: &'a Interpreter<'a>,
    cm: usize,
    last: usize,
    cell: usize,
}

impl Reader<'_> {
    /// `(location, id_1, id_2)` of the `CM` thread when it sits at a machine
    /// location.
    fn cm_at(&self, g: &GlobalConfig) -> Option<(String, Value, Value)> {
        let t = g.pool.iter().find(|l| l.thread == self.cm)?;
        let name = self.it.location_name(self.cm, t.loc);
        let loc = name.strip_prefix("at_")?;
        Some((loc.to_string(), t.vals[0], t.vals[1]))
    }

    fn read(&self, g: &GlobalConfig, id: Value) -> Result<(u64, usize), String> {
        let lasts: Vec<_> = g
            .pool
            .iter()
            .filter(|l| l.thread == self.last && l.vals[0] == id)
            .collect();
        let [last] = lasts.as_slice() else {
            return Err(format!("{} Last threads for counter {id}", lasts.len()));
        };
        let cells: Vec<(Value, Value)> = g
            .pool
            .iter()
            .filter(|l| l.thread == self.cell && l.vals[0] == id)
            .map(|l| (l.vals[1], l.vals[2]))
            .collect();
        let mut head = last.vals[1];
        let mut live = 0;
        loop {
            let at: Vec<_> = cells.iter().filter(|(_, next)| *next == head).collect();
            let [(prev, next)] = at.as_slice() else {
                return Err(format!("{} cells point at {head} in counter {id}", at.len()));
            };
            if prev == next {
                return Ok((live, cells.len()));
            }
            live += 1;
            head = *prev;
            if live as usize > cells.len() {
                return Err(format!("cycle in the cells of counter {id}"));
            }
        }
    }
}

/// Runs the generated program on its only schedule for at most `steps`
/// steps and compares the counters at every machine location with the
/// direct execution of the machine.
pub fn correspondence_check(cm: &CmProgram, steps: usize) -> CorrespondenceReport {
    let prog = generate_tdl(cm);
    let it = Interpreter::new(&prog).expect("generated program validates");
    let idx = |n: &str| prog.thread_index(n).expect("generated thread");
    let reader = Reader {
        it: &it,
        cm: idx("CM"),
        last: idx("Last"),
        cell: idx("Cell"),
    };
    let mut report = CorrespondenceReport {
        machine: vec![CmState::initial(cm)],
        observed: Vec::new(),
        tdl_steps: 0,
        mismatch: None,
    };
    let mut g = it.initial_config();
    loop {
        if let Some((loc, id1, id2)) = reader.cm_at(&g) {
            let k = report.observed.len();
            if k > 0 {
                match cm_step(&report.machine[k - 1], cm) {
                    Some(s) => report.machine.push(s),
                    None => {
                        report.mismatch = Some(format!("machine halted at {} but the program moved on", report.machine[k - 1].location));
                        return report;
                    }
                }
            }
            let (a, b) = match (reader.read(&g, id1), reader.read(&g, id2)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    report.mismatch = Some(format!("after {} steps: {e}", report.tdl_steps));
                    return report;
                }
            };
            let obs = Observation {
                tdl_step: report.tdl_steps,
                location: loc,
                live: [a.0, b.0],
                cells: [a.1, b.1],
            };
            let want = &report.machine[k];
            if obs.location != want.location || obs.live != [want.c1, want.c2] {
                report.mismatch = Some(format!(
                    "after {} steps the program is at {} with counters {:?}, the machine at {} with ({}, {})",
                    report.tdl_steps, obs.location, obs.live, want.location, want.c1, want.c2
                ));
            }
            report.observed.push(obs);
            if report.mismatch.is_some() {
                return report;
            }
        }
        if report.tdl_steps == steps {
            return report;
        }
        let succ = it.successors(&g);
        let Some((_, next)) = succ.into_iter().next() else {
            return report;
        };
        g = next;
        report.tdl_steps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tdl::validate;

    #[test]
    fn reads_the_instruction_forms() {
        let cm = parse_cm("l0: inc c1 goto l1\nl1: if c1 > 0 dec goto l0 else goto end # loop\nend: halt\n").unwrap();
        assert_eq!(cm.initial, "l0");
        assert_eq!(cm.instructions.len(), 2);
        assert_eq!(cm.halts, ["end"]);
        assert_eq!(parse_cm(&cm.to_string()).unwrap(), cm);
        assert_eq!(parse_cm("l0: inc c3 goto l0\n").unwrap_err().line, 1);
        assert_eq!(parse_cm("l0: inc c1 goto l0\n\nl1: inc c1 goto nowhere\n").unwrap_err().line, 3);
        assert!(parse_cm("l0: halt\nl0: halt\n").is_err());
    }

    #[test]
    fn single_steps() {
        let cm = parse_cm("a: inc c1 goto b\nb: if c1>0 dec goto a else goto c\nc: if c2>0 dec goto a else goto d\nd: halt\n").unwrap();
        let s = CmState::initial(&cm);
        let s = cm_step(&s, &cm).unwrap();
        assert_eq!(s, CmState { location: "b".into(), c1: 1, c2: 0 });
        let s = cm_step(&s, &cm).unwrap();
        assert_eq!(s, CmState { location: "a".into(), c1: 0, c2: 0 });
        let c = CmState { location: "c".into(), c1: 0, c2: 0 };
        assert_eq!(cm_step(&c, &cm).unwrap(), CmState { location: "d".into(), c1: 0, c2: 0 });
        assert_eq!(cm_step(&CmState { location: "d".into(), c1: 0, c2: 0 }, &cm), None);
    }

    #[test]
    fn generated_program_shape() {
        let cm = parse_cm("l1: inc c1 goto l2\nl2: halt\n").unwrap();
        let text = generate_tdl_text(&cm);
        assert!(text.contains("  at_l1 -Inc!(id_1)-> wait_l1\n"));
        assert!(text.contains("  wait_l1 -IAck?(x)-> at_l2 [x = id_1]\n"));
        let p = generate_tdl(&cm);
        assert!(validate(&p).is_empty());
        assert_eq!(parse_program(&p.to_string()).unwrap(), p);
        let empty = generate_tdl(&parse_cm("").unwrap());
        assert_eq!(empty.thread("CM").unwrap().rules.len(), 0);
        assert_eq!(empty.threads.len(), 4);
    }

    #[test]
    fn increments_then_a_decrement() {
        let cm = parse_cm("a: inc c1 goto b\nb: inc c1 goto c\nc: if c1>0 dec goto d else goto d\nd: halt\n").unwrap();
        let r = correspondence_check(&cm, 200);
        assert!(r.ok(), "{:?}", r.mismatch);
        let last = r.observed.last().unwrap();
        assert_eq!(last.location, "d");
        assert_eq!(last.live, [1, 0]);
        // the released cell stays behind
        assert_eq!(last.cells, [3, 1]);
    }

    #[test]
    fn zero_test_on_a_fresh_counter() {
        let cm = parse_cm("a: if c2>0 dec goto a else goto b\nb: halt\n").unwrap();
        let r = correspondence_check(&cm, 100);
        assert!(r.ok(), "{:?}", r.mismatch);
        assert_eq!(r.observed.len(), 2);
        assert_eq!(r.observed[1].location, "b");
    }

    #[test]
    fn empty_machine_corresponds() {
        let r = correspondence_check(&parse_cm("").unwrap(), 60);
        assert!(r.ok());
        assert_eq!(r.observed.len(), 1);
        assert_eq!(r.tdl_steps, 9);
    }
}
