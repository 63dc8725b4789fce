use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tdlv::interp::{Interpreter, Mode};
use tdlv::monadic::{check_monadic, verify_monadic};
use tdlv::msr::{parse_spec, write_spec, MsrSpec};
use tdlv::symbolic::{
    concretize, parse_unsafe, sbr, ConstrainedConfig, IterationStats, Limits, SbrOptions, SbrResult, Verdict,
};
use tdlv::tdl::{parse_program, validate, Program};
use tdlv::tdl2msr::{translate_with, TranslateOptions, Translation};
use tdlv::twocm::{correspondence_check, generate_tdl_text, parse_cm};

const EXIT_SAFE: u8 = 0;
const EXIT_FAILURE: u8 = 1;
const EXIT_UNSAFE: u8 = 10;
const EXIT_BOUND: u8 = 20;

#[derive(Parser)]
#[command(name = "tdlv", version, about = "Verify thread definition programs by backward reachability")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    format: Format,
    /// Worker threads for the verifier (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a program.
    Parse { file: PathBuf },
    /// Compile a program into multiset rewriting rules.
    Translate {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also pair send and receive rules of the same thread definition.
        #[arg(long)]
        intra_rendezvous: bool,
        /// Write the symbol table as JSON.
        #[arg(long)]
        emit_table: Option<PathBuf>,
    },
    /// Run a program forwards.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long, conflicts_with = "seed")]
        exhaustive: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        max_configs: usize,
    },
    /// Backward reachability on a rewriting specification.
    Verify {
        spec: PathBuf,
        #[arg(long = "unsafe")]
        unsafe_file: PathBuf,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Translate a program, then verify it.
    VerifyTdl {
        file: PathBuf,
        #[arg(long = "unsafe")]
        unsafe_file: PathBuf,
        /// Unsafe configurations name locations instead of predicates and may
        /// omit argument lists.
        #[arg(long)]
        from_tdl: bool,
        #[arg(long)]
        intra_rendezvous: bool,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Report whether a program is monadic.
    CheckMonadic { file: PathBuf },
    /// Verify a monadic program through its constant-free encoding.
    VerifyMonadic {
        file: PathBuf,
        #[arg(long = "unsafe")]
        unsafe_file: PathBuf,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Generate the program simulating a two counter machine.
    #[command(name = "gen-2cm")]
    Gen2cm {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a machine and its simulation side by side.
    #[command(name = "check-2cm")]
    Check2cm {
        file: PathBuf,
        #[arg(long, default_value_t = 60)]
        steps: usize,
    },
}

#[derive(Args)]
struct LimitArgs {
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 200_000)]
    max_configs: usize,
    #[arg(long, default_value_t = 15 * 60 * 1000)]
    wall_clock_ms: u64,
    /// Depth bound for replaying a counterexample.
    #[arg(long, default_value_t = 10)]
    depth: usize,
    /// Print per-iteration statistics as JSON lines on stderr.
    #[arg(long)]
    stats: bool,
}

impl LimitArgs {
    fn limits(&self) -> Result<Limits> {
        if self.max_iter == 0 || self.max_configs == 0 || self.wall_clock_ms == 0 {
            bail!("limits must be positive");
        }
        Ok(Limits {
            max_iterations: self.max_iter,
            max_configs: self.max_configs,
            wall_clock: Duration::from_millis(self.wall_clock_ms),
        })
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn load_program(path: &Path) -> Result<Program> {
    let text = read(path)?;
    parse_program(&text).map_err(|e| anyhow::anyhow!("{}:{e}", path.display()))
}

fn diagnostics_error(path: &Path, ds: &[tdlv::tdl::Diagnostic]) -> anyhow::Error {
    let lines: Vec<String> = ds.iter().map(|d| format!("{}:{d}", path.display())).collect();
    anyhow::anyhow!("{}", lines.join("\n"))
}

fn load_translation(path: &Path, intra: bool) -> Result<Translation> {
    let p = load_program(path)?;
    translate_with(&p, TranslateOptions { intra_thread_rendezvous: intra })
        .map_err(|ds| diagnostics_error(path, &ds))
}

/// Renames location names to their predicates. An omitted argument list
/// becomes the thread's locals, suffixed from the second atom of the same
/// thread on.
fn unsafe_from_tdl(text: &str, tr: &Translation) -> Result<String> {
    let mut out = String::new();
    for (k, line) in text.lines().enumerate() {
        let (atoms, tail) = match line.find(':') {
            Some(i) => (&line[..i], &line[i..]),
            None => (line, ""),
        };
        if atoms.trim().is_empty() || atoms.trim_start().starts_with('#') {
            out.push_str(line);
            out.push('\n');
            continue;
        }
        let mut seen: Vec<&str> = Vec::new();
        let mut parts = Vec::new();
        for atom in atoms.split('|') {
            let atom = atom.trim();
            let (name, args) = match atom.find('(') {
                Some(i) => (atom[..i].trim(), Some(&atom[i..])),
                None => (atom, None),
            };
            let entry = tr
                .table
                .locations
                .iter()
                .find(|l| l.location == name || format!("{}.{}", l.thread, l.location) == name)
                .with_context(|| format!("line {}: `{name}` is not a location", k + 1))?;
            let args = match args {
                Some(a) => a.to_string(),
                None if entry.arity == 0 => String::new(),
                None => {
                    let copies = seen.iter().filter(|t| **t == entry.thread).count();
                    seen.push(&entry.thread);
                    let locals = tr
                        .table
                        .locals
                        .iter()
                        .find(|(t, _)| *t == entry.thread)
                        .map(|(_, ls)| ls.as_slice())
                        .unwrap_or_default();
                    let vs: Vec<String> = locals
                        .iter()
                        .map(|l| if copies == 0 { l.clone() } else { format!("{l}_{}", copies + 1) })
                        .collect();
                    format!("({})", vs.join(", "))
                }
            };
            parts.push(format!("{}{args}", entry.predicate));
        }
        out.push_str(&parts.join(" | "));
        out.push_str(tail);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize)]
struct StepJson {
    config: String,
    rule: Option<usize>,
}

#[derive(Serialize)]
struct VerifyJson {
    verdict: &'static str,
    iterations: usize,
    fixpoint_size: Option<usize>,
    generated: usize,
    reason: Option<String>,
    trace: Vec<StepJson>,
    witness: Option<Vec<String>>,
    warning: Option<String>,
}

fn run_sbr(spec: &MsrSpec, bad: &[ConstrainedConfig], args: &LimitArgs) -> Result<SbrResult> {
    let limits = args.limits()?;
    let print_stats = |s: &IterationStats| {
        if let Ok(line) = serde_json::to_string(s) {
            eprintln!("{line}");
        }
    };
    let opts = SbrOptions {
        limits,
        on_iteration: args.stats.then_some(&print_stats as &(dyn Fn(&IterationStats) + Sync)),
    };
    Ok(sbr(spec, bad, opts))
}

fn report_verdict(
    spec: &MsrSpec,
    r: &SbrResult,
    depth: usize,
    format: Format,
    warning: Option<String>,
) -> Result<u8> {
    let mut out = VerifyJson {
        verdict: "",
        iterations: r.stats.len(),
        fixpoint_size: None,
        generated: r.generated,
        reason: None,
        trace: Vec::new(),
        witness: None,
        warning,
    };
    let code = match &r.verdict {
        Verdict::Safe { fixpoint_size, .. } => {
            out.verdict = "safe";
            out.fixpoint_size = Some(*fixpoint_size);
            EXIT_SAFE
        }
        Verdict::Unsafe { trace } => {
            out.verdict = "unsafe";
            out.trace = trace
                .iter()
                .map(|s| StepJson {
                    config: s.config.show(&spec.sig).to_string(),
                    rule: s.rule,
                })
                .collect();
            out.witness = concretize(spec, trace, depth)
                .map(|run| run.iter().map(|g| g.show(&spec.sig).to_string()).collect());
            EXIT_UNSAFE
        }
        Verdict::BoundExceeded { reason } => {
            out.verdict = "bound-exceeded";
            out.reason = Some(reason.clone());
            EXIT_BOUND
        }
    };
    match format {
        Format::Json => json(&out)?,
        Format::Human => {
            if let Some(w) = &out.warning {
                eprintln!("warning: {w}");
            }
            match &r.verdict {
                Verdict::Safe { fixpoint_size, iterations } => println!(
                    "safe: fixpoint after {iterations} iterations with {fixpoint_size} constrained configurations"
                ),
                Verdict::Unsafe { .. } => {
                    println!("unsafe: an initial configuration reaches the unsafe set");
                    for s in &out.trace {
                        match s.rule {
                            Some(k) => println!("  {}    --rule {}-->", s.config, k),
                            None => println!("  {}", s.config),
                        }
                    }
                    match &out.witness {
                        Some(run) => {
                            println!("witness run:");
                            for g in run {
                                println!("  {g}");
                            }
                        }
                        None => println!("no witness run within depth {depth}"),
                    }
                }
                Verdict::BoundExceeded { reason } => println!("no verdict: {reason}"),
            }
        }
    }
    Ok(code)
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("cannot configure worker threads")?;
    }
    let format = cli.format;
    match cli.command {
        Command::Parse { file } => {
            let p = load_program(&file)?;
            let ds = validate(&p);
            #[derive(Serialize)]
            struct ParseJson<'a> {
                threads: usize,
                rules: usize,
                diagnostics: &'a [tdlv::tdl::Diagnostic],
            }
            let rules = p.threads.iter().map(|t| t.rules.len()).sum();
            match format {
                Format::Json => json(&ParseJson {
                    threads: p.threads.len(),
                    rules,
                    diagnostics: &ds,
                })?,
                Format::Human => {
                    for d in &ds {
                        eprintln!("{}:{d}", file.display());
                    }
                    println!("{} threads, {rules} rules", p.threads.len());
                }
            }
            Ok(if ds.is_empty() { EXIT_SAFE } else { EXIT_FAILURE })
        }
        Command::Translate {
            file,
            output,
            intra_rendezvous,
            emit_table,
        } => {
            let tr = load_translation(&file, intra_rendezvous)?;
            write_out(output.as_deref(), &write_spec(&tr.spec))?;
            if let Some(t) = emit_table {
                fs::write(&t, serde_json::to_string_pretty(&tr.table)? + "\n")
                    .with_context(|| format!("cannot write {}", t.display()))?;
            }
            Ok(EXIT_SAFE)
        }
        Command::Simulate {
            file,
            depth,
            exhaustive,
            seed,
            max_configs,
        } => {
            let p = load_program(&file)?;
            let it = Interpreter::new(&p).map_err(|ds| diagnostics_error(&file, &ds))?;
            let mode = if exhaustive {
                Mode::Exhaustive { canonical: true }
            } else {
                Mode::Random { seed }
            };
            let ex = it
                .run_bounded(depth, mode, max_configs)
                .map_err(|e| anyhow::anyhow!("{}", e.reason))?;
            #[derive(Serialize)]
            struct ConfigJson {
                depth: usize,
                step: Option<String>,
                config: String,
            }
            let rows: Vec<ConfigJson> = (0..ex.configs.len())
                .map(|k| ConfigJson {
                    depth: ex.depth[k],
                    step: ex.parent[k].as_ref().map(|(_, s)| it.describe_step(s)),
                    config: it.format_config(&ex.configs[k]),
                })
                .collect();
            match format {
                Format::Json => json(&rows)?,
                Format::Human => {
                    let stdout = std::io::stdout();
                    let mut w = stdout.lock();
                    for r in &rows {
                        match &r.step {
                            Some(s) => writeln!(w, "[{}] {}    ({s})", r.depth, r.config)?,
                            None => writeln!(w, "[{}] {}", r.depth, r.config)?,
                        }
                    }
                }
            }
            Ok(EXIT_SAFE)
        }
        Command::Verify {
            spec,
            unsafe_file,
            limits,
        } => {
            let text = read(&spec)?;
            let s = parse_spec(&text).map_err(|e| anyhow::anyhow!("{}:{e}", spec.display()))?;
            let bad = parse_unsafe(&read(&unsafe_file)?, &s.sig)
                .map_err(|e| anyhow::anyhow!("{}:{e}", unsafe_file.display()))?;
            let r = run_sbr(&s, &bad, &limits)?;
            report_verdict(&s, &r, limits.depth, format, None)
        }
        Command::VerifyTdl {
            file,
            unsafe_file,
            from_tdl,
            intra_rendezvous,
            limits,
        } => {
            let tr = load_translation(&file, intra_rendezvous)?;
            let mut text = read(&unsafe_file)?;
            if from_tdl {
                text = unsafe_from_tdl(&text, &tr).with_context(|| unsafe_file.display().to_string())?;
            }
            let bad = parse_unsafe(&text, &tr.spec.sig)
                .map_err(|e| anyhow::anyhow!("{}:{e}", unsafe_file.display()))?;
            let r = run_sbr(&tr.spec, &bad, &limits)?;
            report_verdict(&tr.spec, &r, limits.depth, format, None)
        }
        Command::CheckMonadic { file } => {
            let p = load_program(&file)?;
            json(&check_monadic(&p))?;
            Ok(EXIT_SAFE)
        }
        Command::VerifyMonadic {
            file,
            unsafe_file,
            limits,
        } => {
            let p = load_program(&file)?;
            let text = read(&unsafe_file)?;
            let opts = SbrOptions {
                limits: limits.limits()?,
                on_iteration: None,
            };
            let v = verify_monadic(&p, &text, opts)?;
            report_verdict(&v.spec, &v.result, limits.depth, format, v.warning)
        }
        Command::Gen2cm { file, output } => {
            let cm = parse_cm(&read(&file)?).map_err(|e| anyhow::anyhow!("{}:{e}", file.display()))?;
            write_out(output.as_deref(), &generate_tdl_text(&cm))?;
            Ok(EXIT_SAFE)
        }
        Command::Check2cm { file, steps } => {
            let cm = parse_cm(&read(&file)?).map_err(|e| anyhow::anyhow!("{}:{e}", file.display()))?;
            let r = correspondence_check(&cm, steps);
            match format {
                Format::Json => json(&r)?,
                Format::Human => {
                    for o in &r.observed {
                        println!(
                            "step {:>4}  {:<12} c1={} c2={}  cells={:?}",
                            o.tdl_step, o.location, o.live[0], o.live[1], o.cells
                        );
                    }
                    if let Some(m) = &r.mismatch {
                        println!("mismatch: {m}");
                    }
                }
            }
            Ok(if r.ok() { EXIT_SAFE } else { EXIT_FAILURE })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
