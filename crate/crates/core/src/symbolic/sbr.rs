//! Symbolic backward reachability: saturate the unsafe set under the
//! predecessor operator, pruning by subsumption, and test whether an
//! initial configuration is covered.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use super::{member, spre_rule, subsumed_indexed, ConstrainedConfig, Indexed, PreparedRule};
use crate::msr::{rule_successors, GroundConfig, MsrSpec};
use crate::value::{int, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_iterations: usize,
    pub max_configs: usize,
    pub wall_clock: Duration,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_iterations: 200,
            max_configs: 200_000,
            wall_clock: Duration::from_secs(15 * 60),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IterationStats {
    pub iter: usize,
    pub new_configs: usize,
    pub total: usize,
    pub elapsed_ms: u128,
}

/// One configuration of an abstract counterexample and the rule that leads
/// from it to the next one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractStep {
    pub config: ConstrainedConfig,
    pub rule: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Safe { fixpoint_size: usize, iterations: usize },
    /// From a configuration covering an initial state to an unsafe one.
    Unsafe { trace: Vec<AbstractStep> },
    BoundExceeded { reason: String },
}

#[derive(Clone, Debug)]
pub struct SbrResult {
    pub verdict: Verdict,
    pub stats: Vec<IterationStats>,
    /// Candidates produced by the predecessor operator, before pruning.
    pub generated: usize,
}

#[derive(Clone, Copy, Default)]
pub struct SbrOptions<'a> {
    pub limits: Limits,
    pub on_iteration: Option<&'a (dyn Fn(&IterationStats) + Sync)>,
}

struct Node {
    cfg: ConstrainedConfig,
    parent: Option<(usize, usize)>,
}

fn trace(nodes: &[Node], mut id: usize) -> Vec<AbstractStep> {
    let mut out = Vec::new();
    loop {
        let n = &nodes[id];
        match n.parent {
            Some((p, rule)) => {
                out.push(AbstractStep {
                    config: n.cfg.clone(),
                    rule: Some(rule),
                });
                id = p;
            }
            None => {
                out.push(AbstractStep {
                    config: n.cfg.clone(),
                    rule: None,
                });
                return out;
            }
        }
    }
}

pub fn sbr(spec: &MsrSpec, unsafe_set: &[ConstrainedConfig], opts: SbrOptions) -> SbrResult {
    let start = Instant::now();
    let rules: Vec<PreparedRule> = spec.rules.iter().map(PreparedRule::new).collect();
    let covers_init = |c: &ConstrainedConfig| spec.initials.iter().any(|g| member(g, c));
    let mut stats = Vec::new();
    let mut generated = 0;
    let mut nodes: Vec<Node> = Vec::new();
    let mut active: Vec<(usize, Indexed)> = Vec::new();

    for c in unsafe_set {
        let idx = Indexed::new(c.clone());
        if active.iter().any(|(_, a)| subsumed_indexed(&idx, a)) {
            continue;
        }
        active.retain(|(_, a)| !subsumed_indexed(a, &idx));
        nodes.push(Node {
            cfg: c.clone(),
            parent: None,
        });
        active.push((nodes.len() - 1, idx));
    }
    let finish = |verdict, stats, generated| SbrResult {
        verdict,
        stats,
        generated,
    };
    if let Some((id, _)) = active.iter().find(|(_, a)| covers_init(&a.cfg)) {
        return finish(Verdict::Unsafe { trace: trace(&nodes, *id) }, stats, generated);
    }
    let mut frontier: Vec<usize> = active.iter().map(|(id, _)| *id).collect();

    for iter in 1.. {
        if iter > opts.limits.max_iterations {
            let reason = format!("iteration limit {} reached", opts.limits.max_iterations);
            return finish(Verdict::BoundExceeded { reason }, stats, generated);
        }
        if start.elapsed() > opts.limits.wall_clock {
            let reason = format!("time limit of {:?} reached", opts.limits.wall_clock);
            return finish(Verdict::BoundExceeded { reason }, stats, generated);
        }

        let produced: Vec<(ConstrainedConfig, usize, usize)> = frontier
            .par_iter()
            .flat_map_iter(|&id| {
                let mut out = Vec::new();
                for (ri, r) in rules.iter().enumerate() {
                    let mut buf = Vec::new();
                    spre_rule(r, &nodes[id].cfg, false, &mut buf);
                    out.extend(buf.into_iter().map(|c| (c, id, ri)));
                }
                out
            })
            .collect();
        generated += produced.len();

        let mut seen = HashSet::new();
        let distinct: Vec<(ConstrainedConfig, usize, usize)> =
            produced.into_iter().filter(|(c, _, _)| seen.insert(c.clone())).collect();
        drop(seen);

        let fresh: Vec<(Indexed, usize, usize)> = distinct
            .into_par_iter()
            .filter_map(|(c, parent, rule)| {
                let idx = Indexed::new(c);
                let old = active.iter().any(|(_, a)| subsumed_indexed(&idx, a));
                (!old).then_some((idx, parent, rule))
            })
            .collect();

        let mut accepted: Vec<(Indexed, usize, usize)> = Vec::new();
        for (idx, parent, rule) in fresh {
            if accepted.iter().any(|(a, _, _)| subsumed_indexed(&idx, a)) {
                continue;
            }
            accepted.retain(|(a, _, _)| !subsumed_indexed(a, &idx));
            accepted.push((idx, parent, rule));
        }

        let keep: Vec<bool> = active
            .par_iter()
            .map(|(_, a)| !accepted.iter().any(|(n, _, _)| subsumed_indexed(a, n)))
            .collect();
        let mut k = keep.into_iter();
        active.retain(|_| k.next().unwrap());

        frontier.clear();
        for (idx, parent, rule) in accepted {
            nodes.push(Node {
                cfg: idx.cfg.clone(),
                parent: Some((parent, rule)),
            });
            let id = nodes.len() - 1;
            frontier.push(id);
            active.push((id, idx));
        }

        let st = IterationStats {
            iter,
            new_configs: frontier.len(),
            total: active.len(),
            elapsed_ms: start.elapsed().as_millis(),
        };
        if let Some(cb) = opts.on_iteration {
            cb(&st);
        }
        stats.push(st);

        if let Some(&id) = frontier.iter().find(|&&id| covers_init(&nodes[id].cfg)) {
            return finish(Verdict::Unsafe { trace: trace(&nodes, id) }, stats, generated);
        }
        if frontier.is_empty() {
            let v = Verdict::Safe {
                fixpoint_size: active.len(),
                iterations: iter,
            };
            return finish(v, stats, generated);
        }
        if active.len() > opts.limits.max_configs {
            let reason = format!("more than {} constrained configurations", opts.limits.max_configs);
            return finish(Verdict::BoundExceeded { reason }, stats, generated);
        }
    }
    unreachable!()
}

/// Replays an abstract counterexample forwards from an initial
/// configuration, choosing at each step a successor by the recorded rule
/// that stays inside the next abstract configuration. Returns the ground
/// run, or `None` if the trace is longer than `max_depth` or cannot be
/// followed.
pub fn concretize(spec: &MsrSpec, trace: &[AbstractStep], max_depth: usize) -> Option<Vec<GroundConfig>> {
    if trace.is_empty() || trace.len() - 1 > max_depth {
        return None;
    }
    let mut anchors: Vec<Value> = spec.anchors();
    for s in trace {
        anchors.extend(s.config.constraint().constants().into_iter().map(int));
    }
    anchors.sort();
    anchors.dedup();

    fn go(
        spec: &MsrSpec,
        trace: &[AbstractStep],
        anchors: &[Value],
        run: &mut Vec<GroundConfig>,
    ) -> bool {
        let i = run.len() - 1;
        let Some(rule) = trace[i].rule else {
            return true;
        };
        let cur = run[i].clone();
        for g in rule_successors(&spec.rules[rule], &cur, anchors) {
            if member(&g, &trace[i + 1].config) {
                run.push(g);
                if go(spec, trace, anchors, run) {
                    return true;
                }
                run.pop();
            }
        }
        false
    }

    for g0 in &spec.initials {
        let g0 = g0.canonical(&anchors);
        if !member(&g0, &trace[0].config) {
            continue;
        }
        let mut run = vec![g0];
        if go(spec, trace, &anchors, &mut run) {
            return Some(run);
        }
    }
    None
}
