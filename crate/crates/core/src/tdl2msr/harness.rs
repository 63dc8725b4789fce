//! Step-by-step correspondence between program runs and runs of the
//! encoding, checked in both directions on sampled runs.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Translation;
use crate::interp::{Interpreter, Mode};
use crate::msr::{post_successors_with, GroundConfig, MsrSpec};

/// A random run of at most `depth` steps from the first initial
/// configuration, over canonical successors.
pub fn random_msr_walk(spec: &MsrSpec, depth: usize, seed: u64) -> Vec<(Option<usize>, GroundConfig)> {
    let anchors = spec.anchors();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Some(start) = spec.initials.first() else {
        return Vec::new();
    };
    let mut out = vec![(None, start.canonical(&anchors))];
    for _ in 0..depth {
        let cur = &out.last().unwrap().1;
        let succ = post_successors_with(spec, cur, &anchors);
        let Some((r, g)) = succ.choose(&mut rng) else {
            break;
        };
        out.push((Some(*r), g.clone()));
    }
    out
}

/// Replays a random program run of at most `depth` steps and checks that
/// each step is matched by a step of the encoding between the embedded
/// configurations. Returns the number of steps checked.
pub fn check_tdl_to_msr(
    it: &Interpreter,
    tr: &Translation,
    depth: usize,
    seed: u64,
) -> Result<usize, String> {
    let anchors = tr.spec.anchors();
    let run = it
        .run_bounded(depth, Mode::Random { seed }, usize::MAX)
        .map_err(|e| e.reason)?;
    let embed = |k: usize| tr.embed(&run.configs[k], &|v| v).canonical(&anchors);
    let mut cur = tr.spec.initials[0].canonical(&anchors);
    for k in 0..run.configs.len() {
        let next = embed(k);
        let ok = post_successors_with(&tr.spec, &cur, &anchors)
            .iter()
            .any(|(_, g)| *g == next);
        if !ok {
            let step = match k {
                0 => "initialisation".to_string(),
                _ => it.describe_step(&run.parent[k].unwrap().1),
            };
            return Err(format!(
                "step {k} ({step}) has no counterpart: {} does not reach {}",
                cur.show(&tr.spec.sig),
                next.show(&tr.spec.sig)
            ));
        }
        cur = next;
    }
    Ok(run.configs.len())
}

/// Samples a random run of the encoding of at most `depth` steps and checks
/// that projecting it yields a program run. Returns the number of steps
/// checked.
pub fn check_msr_to_tdl(
    it: &Interpreter,
    tr: &Translation,
    depth: usize,
    seed: u64,
) -> Result<usize, String> {
    let walk = random_msr_walk(&tr.spec, depth, seed);
    if walk.len() < 2 {
        return Ok(0);
    }
    let project = |g: &GroundConfig| {
        tr.project_ranked(g)
            .map(|c| it.canonical(&c))
            .map_err(|e| format!("{e} in {}", g.show(&tr.spec.sig)))
    };
    let first = project(&walk[1].1)?;
    if first != it.canonical(&it.initial_config()) {
        return Err(format!(
            "initialisation yields {} instead of {}",
            it.format_config(&first),
            it.format_config(&it.initial_config())
        ));
    }
    let mut cur = first;
    for (k, (rule, g)) in walk.iter().enumerate().skip(2) {
        let next = project(g)?;
        let ok = it
            .successors(&cur)
            .iter()
            .any(|(_, s)| it.canonical(s) == next);
        if !ok {
            let origin = &tr.spec.rules[rule.unwrap()].origin;
            return Err(format!(
                "step {k} ({origin}) has no counterpart: {} does not reach {}",
                it.format_config(&cur),
                it.format_config(&next)
            ));
        }
        cur = next;
    }
    Ok(walk.len() - 1)
}
