//! `mcw`: build, validate, evaluate, and analyze multi-k-expressions.
//!
//! Exit codes: 0 on success, 1 on domain errors (parse failures, violated
//! preconditions, failed checks), 2 on usage errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mcw::coloring::{self, AtomRule, ColoringOptions};
use mcw::expr::{self, Expr};
use mcw::geval::{self, LabeledGraph};
use mcw::indpoly::{self, JoinMethod};
use mcw::oracle;
use mcw::treedec::{self, TreeDecomposition};

#[derive(Parser)]
#[command(name = "mcw", version, about = "Multi-clique-width expression toolkit")]
struct Cli {
    /// Report per-phase wall time on stderr.
    #[arg(long, global = true)]
    time: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an expression file and report its width metrics.
    Validate { file: PathBuf },
    /// Evaluate an expression file to its generated labeled graph.
    Eval {
        file: PathBuf,
        /// Drop all label sets from the output.
        #[arg(long)]
        strip: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Compile a graph plus tree decomposition into a strict expression.
    CompileTd {
        graph: PathBuf,
        td: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Rewrite an expression as a classical one over at most 2^k labels.
    Expand {
        file: PathBuf,
        /// Refuse expansions needing more labels than this.
        #[arg(long, default_value_t = expr::DEFAULT_LABEL_CAP)]
        max_labels: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Independent set polynomial coefficients a_0 .. a_n.
    Indpoly {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::School)]
        method: MethodArg,
        /// Also print the labeled table as `(size, mask-bits) -> coefficient`.
        #[arg(long)]
        table: bool,
    },
    /// A maximum independent set with its size.
    Mis { file: PathBuf },
    /// Decide proper c-colorability.
    Color {
        file: PathBuf,
        #[arg(long)]
        c: u32,
        /// Also print the number of true root-table entries.
        #[arg(long)]
        count: bool,
        #[arg(long, value_enum, default_value_t = AtomRuleArg::Exact)]
        atom_rule: AtomRuleArg,
        /// Cap on c * used-width incidence bits.
        #[arg(long, default_value_t = coloring::DEFAULT_BIT_CAP)]
        bit_cap: u32,
    },
    /// Cross-check every dynamic program against brute force.
    Check {
        /// Expression files to check; the bundled corpus when omitted.
        files: Vec<PathBuf>,
    },
    /// Emit a generator-family expression.
    Gen {
        #[arg(value_enum)]
        family: Family,
        /// One size for path/cycle/clique, two for complete-bipartite/grid.
        sizes: Vec<u64>,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Args)]
struct OutArg {
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl OutArg {
    fn write(&self, text: &str) -> Result<()> {
        match &self.output {
            Some(path) => fs::write(path, text)
                .with_context(|| format!("writing {}", path.display()))?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    School,
    Transform,
}

impl From<MethodArg> for JoinMethod {
    fn from(m: MethodArg) -> JoinMethod {
        match m {
            MethodArg::School => JoinMethod::School,
            MethodArg::Transform => JoinMethod::Transform,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AtomRuleArg {
    Exact,
    SingleColor,
}

impl From<AtomRuleArg> for AtomRule {
    fn from(r: AtomRuleArg) -> AtomRule {
        match r {
            AtomRuleArg::Exact => AtomRule::Exact,
            AtomRuleArg::SingleColor => AtomRule::SingleColor,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Path,
    Cycle,
    Clique,
    CompleteBipartite,
    Grid,
}

struct Timer {
    enabled: bool,
}

impl Timer {
    fn phase<T>(&self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if self.enabled {
            eprintln!("time: {name} {:.3}s", start.elapsed().as_secs_f64());
        }
        out
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_expr(timer: &Timer, path: &Path) -> Result<Expr> {
    let text = read(path)?;
    timer.phase("parse", || Expr::parse(&text)).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn main() {
    let cli = Cli::parse();
    let timer = Timer { enabled: cli.time };
    if let Err(e) = run(cli.command, &timer) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(command: Command, timer: &Timer) -> Result<()> {
    match command {
        Command::Validate { file } => {
            let e = load_expr(timer, &file)?;
            let g = timer.phase("evaluate", || geval::evaluate(&e))?;
            println!("declared k: {}", e.width());
            println!("used width: {}", e.used_width());
            println!("classical: {}", e.is_classical());
            println!("strict: {}", e.is_strict());
            println!("vertices: {}", g.n());
            println!("edges: {}", g.edge_count());
        }
        Command::Eval { file, strip, out } => {
            let e = load_expr(timer, &file)?;
            let mut g = timer.phase("evaluate", || geval::evaluate(&e))?;
            if strip {
                g = g.strip();
            }
            out.write(&g.to_text())?;
        }
        Command::CompileTd { graph, td, out } => {
            let gtext = read(&graph)?;
            let g = LabeledGraph::parse(&gtext).map_err(|e| anyhow!("{}: {e}", graph.display()))?;
            let ttext = read(&td)?;
            let decomposition = timer.phase("parse-td", || TreeDecomposition::parse(&ttext, &g))
                .map_err(|e| anyhow!("{}: {e}", td.display()))?;
            let ss = timer.phase("semi-smooth", || treedec::semi_smooth(&decomposition, &g))?;
            let compiled = timer.phase("compile", || treedec::compile(&ss));
            out.write(&compiled.document())?;
        }
        Command::Expand { file, max_labels, out } => {
            let e = load_expr(timer, &file)?;
            let classical = timer.phase("expand", || expr::expand_to_classical(&e, max_labels))?;
            out.write(&classical.document())?;
        }
        Command::Indpoly { file, method, table } => {
            let e = load_expr(timer, &file)?;
            let p = timer.phase("indpoly", || indpoly::run(&e, method.into()))?;
            let counts = p.project();
            let line: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
            println!("{}", line.join(" "));
            if table {
                let k = e.width() as usize;
                for (size, mask, coeff) in p.entries() {
                    println!("({size}, {mask:0k$b}) -> {coeff}", k = k.max(1));
                }
            }
        }
        Command::Mis { file } => {
            let e = load_expr(timer, &file)?;
            let ids = timer.phase("mis", || indpoly::max_is(&e))?;
            println!("size: {}", ids.len());
            let line: Vec<String> = ids.iter().map(|v| v.to_string()).collect();
            println!("{}", line.join(" "));
        }
        Command::Color { file, c, count, atom_rule, bit_cap } => {
            let e = load_expr(timer, &file)?;
            let opts = ColoringOptions { rule: atom_rule.into(), bit_cap, ..Default::default() };
            let table = timer.phase("color", || coloring::root_table(&e, c, opts))?;
            println!("{}", if table.any_true() { "yes" } else { "no" });
            if count {
                println!("{}", table.count_true());
            }
        }
        Command::Check { files } => {
            let entries: Vec<(String, Expr)> = if files.is_empty() {
                oracle::corpus().into_iter().map(|e| (e.name, e.expr)).collect()
            } else {
                files
                    .iter()
                    .map(|f| Ok((f.display().to_string(), load_expr(timer, f)?)))
                    .collect::<Result<_>>()?
            };
            let mut failures = 0usize;
            for (name, e) in &entries {
                match check_one(e) {
                    Ok(()) => println!("ok {name}"),
                    Err(err) => {
                        failures += 1;
                        println!("FAIL {name}: {err:#}");
                    }
                }
            }
            println!("checked {} expressions, {} failures", entries.len(), failures);
            if failures > 0 {
                bail!("{failures} corpus checks failed");
            }
        }
        Command::Gen { family, sizes, out } => {
            let expect = |n: usize| -> Result<()> {
                if sizes.len() != n {
                    bail!("this family takes {n} size argument(s), got {}", sizes.len());
                }
                Ok(())
            };
            let e = match family {
                Family::Path => {
                    expect(1)?;
                    mcw::gen::path(sizes[0])?
                }
                Family::Cycle => {
                    expect(1)?;
                    mcw::gen::cycle(sizes[0])?
                }
                Family::Clique => {
                    expect(1)?;
                    mcw::gen::clique(sizes[0])?
                }
                Family::CompleteBipartite => {
                    expect(2)?;
                    mcw::gen::complete_bipartite(sizes[0], sizes[1])?
                }
                Family::Grid => {
                    expect(2)?;
                    let w = u32::try_from(sizes[0]).context("grid width")?;
                    let h = u32::try_from(sizes[1]).context("grid height")?;
                    mcw::gen::grid(w, h)?
                }
            };
            out.write(&e.document())?;
        }
    }
    Ok(())
}

/// DP-versus-oracle sweep for one expression, gated by the oracle guards.
fn check_one(e: &Expr) -> Result<()> {
    let g = geval::evaluate(e).context("evaluate")?;
    let n = g.n();

    // independent set polynomial against exhaustive enumeration
    if n <= 16 && e.width() <= 20 {
        let school = indpoly::run(e, JoinMethod::School).context("indpoly school")?;
        let transform = indpoly::run(e, JoinMethod::Transform).context("indpoly transform")?;
        if school != transform {
            let diff = first_diff(&school, &transform);
            bail!("indpoly: school and transform disagree at {diff}");
        }
        let want = oracle::enumerate_is(&g, e.width()).context("enumerate_is")?;
        if school != want {
            let diff = first_diff(&school, &want);
            bail!("indpoly: DP and oracle disagree at {diff}");
        }
        // projection is the mask-summed table
        let projected = school.project();
        let mut sums = projected.clone();
        sums.iter_mut().for_each(|s| *s = Default::default());
        for (size, _, coeff) in school.entries() {
            sums[size] += coeff;
        }
        if sums != projected {
            bail!("indpoly: projection differs from mask-summed table");
        }

        // maximum independent set: independent and of degree size
        let ids = indpoly::max_is(e).context("max_is")?;
        for (i, &u) in ids.iter().enumerate() {
            for &v in &ids[i + 1..] {
                if g.has_edge(u, v) {
                    bail!("max_is: returned vertices {u} and {v} are adjacent");
                }
            }
        }
        if ids.len() != projected.len() - 1 {
            bail!("max_is: size {} but deg I(x) = {}", ids.len(), projected.len() - 1);
        }
    }

    // colorability against exhaustive colorings
    for c in [2u32, 3] {
        let bits = c * e.used_width();
        let mut work = 1u64;
        for _ in 0..n {
            work = work.saturating_mul(c as u64);
        }
        if n <= 8 && bits <= coloring::DEFAULT_BIT_CAP && work <= 10_000_000 {
            let opts = ColoringOptions::default();
            let got = coloring::root_incidences(e, c, opts)
                .with_context(|| format!("coloring c={c}"))?;
            let want = oracle::enumerate_colorings(&g, c).context("enumerate_colorings")?;
            if got != want {
                let diff = got.symmetric_difference(&want).next().cloned().unwrap_or_default();
                bail!("coloring c={c}: incidence sets differ, e.g. {diff:?}");
            }
            let single = ColoringOptions { rule: AtomRule::SingleColor, ..opts };
            let a = coloring::colorable(e, c, opts)?;
            let b = coloring::colorable(e, c, single)?;
            if a != b {
                bail!("coloring c={c}: atom rule variants disagree ({a} vs {b})");
            }
        }
    }

    // classical expansion reproduces the graph
    if e.width() <= 6 {
        let classical = expr::expand_to_classical(e, expr::DEFAULT_LABEL_CAP).context("expand")?;
        if !classical.is_classical() {
            bail!("expand: output is not classical");
        }
        let out = geval::evaluate(&classical).context("evaluate expanded")?;
        if out.n() != g.n() {
            bail!("expand: vertex count {} vs {}", out.n(), g.n());
        }
        let a: Vec<_> = out.edges().collect();
        let b: Vec<_> = g.edges().collect();
        if a != b {
            bail!("expand: edge sets differ");
        }
    }
    Ok(())
}

/// First (size, mask) where two tables disagree, rendered for messages.
fn first_diff(a: &mcw::LabeledIsPoly, b: &mcw::LabeledIsPoly) -> String {
    for (size, mask, coeff) in a.entries() {
        if b.coeff(size, mask) != *coeff {
            return format!("(size {size}, mask {mask:#b}): {coeff} vs {}", b.coeff(size, mask));
        }
    }
    for (size, mask, coeff) in b.entries() {
        if a.coeff(size, mask) != *coeff {
            return format!("(size {size}, mask {mask:#b}): {} vs {coeff}", a.coeff(size, mask));
        }
    }
    "(no difference)".to_string()
}
