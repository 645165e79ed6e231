//! Plain-text formats: dependency graphs, vote matrices, class priors,
//! parameter exports, simulation model specs and posterior CSVs.
//!
//! Every index in a file is 1-based. Blank lines and `#` comments are
//! ignored in the line-oriented formats.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{
    ClassPrior, DependencyGraph, JunctionTree, LabelMatrix, LabelModelParameters, MarginalTable, SeparatorTable,
    Vertex, Vote,
};
use crate::oracle::CanonicalParameters;

const PARAMS_MAGIC: &str = "weaklabel-params 1";

fn parse_err(context: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { context: context.to_string(), line, message: message.into() }
}

/// Non-empty, comment-stripped lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let line = raw.split('#').next().unwrap_or("");
        let words: Vec<&str> = line.split_whitespace().collect();
        (!words.is_empty()).then_some((k + 1, words))
    })
}

fn number<T: std::str::FromStr>(context: &str, line: usize, word: &str, what: &str) -> Result<T> {
    word.parse().map_err(|_| parse_err(context, line, format!("{what} `{word}` is not a valid number")))
}

/// 1-based index in the file to a 0-based index.
fn index(context: &str, line: usize, word: &str, what: &str) -> Result<usize> {
    let k: usize = number(context, line, word, what)?;
    k.checked_sub(1).ok_or_else(|| parse_err(context, line, format!("{what} indices start at 1")))
}

fn arity_check(context: &str, line: usize, words: &[&str], n: usize) -> Result<()> {
    if words.len() != n {
        return Err(parse_err(context, line, format!("`{}` takes {} values", words[0], n - 1)));
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Graph lines collected before the builder runs.
#[derive(Default)]
struct GraphLines {
    tasks: Option<usize>,
    sources: Option<usize>,
    assign: Vec<(usize, usize)>,
    tedges: Vec<(usize, usize)>,
    sedges: Vec<(usize, usize)>,
}

impl GraphLines {
    /// Consumes a graph keyword; returns `false` for other keywords.
    fn accept(&mut self, context: &str, line: usize, words: &[&str]) -> Result<bool> {
        match words[0] {
            "tasks" | "sources" => {
                arity_check(context, line, words, 2)?;
                let n = number(context, line, words[1], words[0])?;
                if words[0] == "tasks" {
                    self.tasks = Some(n);
                } else {
                    self.sources = Some(n);
                }
            }
            "assign" | "tedge" | "sedge" => {
                arity_check(context, line, words, 3)?;
                let what = if words[0] == "tedge" { "task" } else { "source" };
                let a = index(context, line, words[1], what)?;
                let b = index(context, line, words[2], if words[0] == "sedge" { "source" } else { "task" })?;
                match words[0] {
                    "assign" => self.assign.push((a, b)),
                    "tedge" => self.tedges.push((a, b)),
                    _ => self.sedges.push((a, b)),
                }
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn build(self, context: &str) -> Result<DependencyGraph> {
        let tasks = self.tasks.ok_or_else(|| parse_err(context, 0, "missing `tasks` line"))?;
        let sources = self.sources.ok_or_else(|| parse_err(context, 0, "missing `sources` line"))?;
        let mut b = DependencyGraph::builder(tasks, sources);
        if tasks == 1 {
            b = b.assign_all(0);
        }
        for (i, d) in self.assign {
            if i >= sources {
                return Err(Error::IndexOutOfRange { what: "source", index: i, limit: sources });
            }
            b = b.assign(i, d);
        }
        for (d, e) in self.tedges {
            b = b.task_edge(d, e);
        }
        for (i, j) in self.sedges {
            b = b.source_edge(i, j);
        }
        b.build()
    }
}

/// Parses a graph spec: `tasks D`, `sources m`, then any number of
/// `assign i d`, `tedge d e` and `sedge i j` lines. With one task the
/// `assign` lines may be omitted.
pub fn parse_graph(text: &str, context: &str) -> Result<DependencyGraph> {
    let mut lines = GraphLines::default();
    for (line, words) in content_lines(text) {
        if !lines.accept(context, line, &words)? {
            return Err(parse_err(context, line, format!("unknown keyword `{}`", words[0])));
        }
    }
    lines.build(context)
}

pub fn read_graph(path: &Path) -> Result<DependencyGraph> {
    parse_graph(&read(path)?, &path.display().to_string())
}

pub fn format_graph(g: &DependencyGraph) -> String {
    let mut out = format!("tasks {}\nsources {}\n", g.n_tasks(), g.n_sources());
    for (i, d) in g.assignment().iter().enumerate() {
        let _ = writeln!(out, "assign {} {}", i + 1, d + 1);
    }
    for (d, e) in g.task_edges() {
        let _ = writeln!(out, "tedge {} {}", d + 1, e + 1);
    }
    for (i, j) in g.source_edges() {
        let _ = writeln!(out, "sedge {} {}", i + 1, j + 1);
    }
    out
}

/// Parses one comma-separated vote row. `row` is 0-based and only used in
/// error messages.
pub fn parse_vote_row(line: &str, row: usize, out: &mut Vec<Vote>) -> Result<()> {
    for (column, field) in line.split(',').enumerate() {
        let field = field.trim();
        let value: i64 = field.parse().map_err(|_| Error::Parse {
            context: format!("row {}", row + 1),
            line: column + 1,
            message: format!("`{field}` is not an integer vote"),
        })?;
        if !(-1..=1).contains(&value) {
            return Err(Error::InvalidVote { row, column, value });
        }
        out.push(value as Vote);
    }
    Ok(())
}

/// Parses a vote matrix: comma-separated integers in `{-1, 0, 1}`, one row
/// per line. A first line that does not start with a number is a header.
pub fn parse_labels(text: &str) -> Result<LabelMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
    if let Some(first) = lines.peek() {
        let lead = first.split(',').next().unwrap_or("").trim();
        if lead.parse::<i64>().is_err() {
            lines.next();
        }
    }
    let mut votes = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for line in lines {
        let before = votes.len();
        parse_vote_row(line, rows, &mut votes)?;
        let w = votes.len() - before;
        match width {
            None => width = Some(w),
            Some(expected) if expected != w => {
                return Err(Error::ShapeMismatch {
                    expected: format!("{expected} columns"),
                    found: format!("{w} columns in row {}", rows + 1),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    LabelMatrix::new(rows, width.unwrap_or(0), votes)
}

pub fn read_labels(path: &Path) -> Result<LabelMatrix> {
    parse_labels(&read(path)?)
}

pub fn format_labels(l: &LabelMatrix) -> String {
    let mut out = String::with_capacity(l.n_rows() * l.n_sources() * 3);
    for r in 0..l.n_rows() {
        for (k, v) in l.row(r).iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

fn sign(context: &str, line: usize, word: &str) -> Result<usize> {
    match word {
        "+" | "+1" | "1" => Ok(0),
        "-" | "-1" => Ok(1),
        _ => Err(parse_err(context, line, format!("`{word}` is not a task value (+ or -)"))),
    }
}

/// Parses a class prior. Accepted forms:
///
/// - a bare number or `balance p`: one task with `P(Y = +1) = p`;
/// - `joint D` followed by `2^D` lines `s_1 .. s_D p` with each `s` `+` or `-`;
/// - `mean d v` lines with optional `pair d e v` lines: `E[Y_d]` and `E[Y_d Y_e]`.
pub fn parse_prior(text: &str, context: &str) -> Result<ClassPrior> {
    let lines: Vec<(usize, Vec<&str>)> = content_lines(text).collect();
    let Some((first_line, first)) = lines.first() else {
        return Err(parse_err(context, 0, "empty prior file"));
    };
    match first[0] {
        "balance" => {
            arity_check(context, *first_line, first, 2)?;
            ClassPrior::balance(number(context, *first_line, first[1], "balance")?)
        }
        "joint" => {
            arity_check(context, *first_line, first, 2)?;
            let d: usize = number(context, *first_line, first[1], "task count")?;
            if d > crate::model::MAX_JOINT_TASKS {
                return Err(ClassPrior::joint(d, Vec::new()).unwrap_err());
            }
            let mut probs = vec![f64::NAN; 1 << d];
            for (line, words) in &lines[1..] {
                arity_check(context, *line, words, d + 1)?;
                let mut config = 0;
                for (t, w) in words[..d].iter().enumerate() {
                    config |= sign(context, *line, w)? << t;
                }
                if !probs[config].is_nan() {
                    return Err(parse_err(context, *line, "configuration listed twice"));
                }
                probs[config] = number(context, *line, words[d], "probability")?;
            }
            if probs.iter().any(|p| p.is_nan()) {
                return Err(parse_err(context, *first_line, format!("joint table needs all {} configurations", 1 << d)));
            }
            ClassPrior::joint(d, probs)
        }
        "mean" | "pair" => {
            let mut means = BTreeMap::new();
            let mut pairs = BTreeMap::new();
            for (line, words) in &lines {
                match words[0] {
                    "mean" => {
                        arity_check(context, *line, words, 3)?;
                        let d = index(context, *line, words[1], "task")?;
                        means.insert(d, number(context, *line, words[2], "mean")?);
                    }
                    "pair" => {
                        arity_check(context, *line, words, 4)?;
                        let d = index(context, *line, words[1], "task")?;
                        let e = index(context, *line, words[2], "task")?;
                        pairs.insert((d, e), number(context, *line, words[3], "pair mean")?);
                    }
                    other => return Err(parse_err(context, *line, format!("unknown keyword `{other}`"))),
                }
            }
            let n = means.len();
            if means.keys().copied().ne(0..n) {
                return Err(parse_err(context, *first_line, "`mean` lines must cover tasks 1..D"));
            }
            ClassPrior::factorized(means.into_values().collect(), pairs)
        }
        word if lines.len() == 1 && first.len() == 1 => {
            ClassPrior::balance(number(context, *first_line, word, "class balance")?)
        }
        other => Err(parse_err(context, *first_line, format!("unknown prior form `{other}`"))),
    }
}

pub fn read_prior(path: &Path) -> Result<ClassPrior> {
    parse_prior(&read(path)?, &path.display().to_string())
}

fn parse_vertex(context: &str, line: usize, word: &str) -> Result<Vertex> {
    let (kind, rest) = word.split_at(word.len().min(1));
    let k = index(context, line, rest, "vertex")?;
    match kind {
        "Y" => Ok(Vertex::Task(k)),
        "L" => Ok(Vertex::Source(k)),
        _ => Err(parse_err(context, line, format!("`{word}` is not a vertex (Y<d> or L<i>)"))),
    }
}

/// Serializes parameters. Each table is a `clique` or `separator <degree>`
/// header naming its vertices, then one line of probabilities in table
/// order. Values use the shortest representation that parses back to the
/// same bits.
pub fn format_params(p: &LabelModelParameters) -> String {
    let mut out = format!("{PARAMS_MAGIC}\ntasks {}\nsources {}\n", p.n_tasks(), p.n_sources());
    let mut table = |header: String, t: &MarginalTable| {
        let names: Vec<String> = t.vars().iter().map(ToString::to_string).collect();
        let values: Vec<String> = t.probs().iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(out, "{header} {}\n{}", names.join(" "), values.join(" "));
    };
    for c in p.cliques() {
        table("clique".into(), c);
    }
    for s in p.separators() {
        table(format!("separator {}", s.degree), &s.table);
    }
    out
}

pub fn parse_params(text: &str, context: &str) -> Result<LabelModelParameters> {
    let mut lines = content_lines(text);
    let magic = lines.next().map(|(_, w)| w.join(" "));
    if magic.as_deref() != Some(PARAMS_MAGIC) {
        return Err(parse_err(context, 1, format!("expected `{PARAMS_MAGIC}` header")));
    }
    let mut header = |key: &str| -> Result<usize> {
        match lines.next() {
            Some((line, w)) if w.len() == 2 && w[0] == key => number(context, line, w[1], key),
            Some((line, _)) => Err(parse_err(context, line, format!("expected `{key} <count>`"))),
            None => Err(parse_err(context, 0, format!("missing `{key}` line"))),
        }
    };
    let (tasks, sources) = (header("tasks")?, header("sources")?);
    let (mut cliques, mut separators) = (Vec::new(), Vec::new());
    while let Some((line, words)) = lines.next() {
        let (degree, names) = match words[0] {
            "clique" => (None, &words[1..]),
            "separator" if words.len() > 2 => (Some(number::<usize>(context, line, words[1], "degree")?), &words[2..]),
            _ => return Err(parse_err(context, line, "expected a `clique` or `separator` header")),
        };
        let vars = names.iter().map(|w| parse_vertex(context, line, w)).collect::<Result<Vec<_>>>()?;
        for v in &vars {
            let (k, limit) = match *v {
                Vertex::Task(d) => (d, tasks),
                Vertex::Source(i) => (i, sources),
            };
            if k >= limit {
                return Err(parse_err(context, line, format!("vertex {v} out of range")));
            }
        }
        let (vline, values) = lines.next().ok_or_else(|| parse_err(context, line, "table values missing"))?;
        let probs = values.iter().map(|w| number(context, vline, w, "probability")).collect::<Result<Vec<f64>>>()?;
        let table = MarginalTable::new(vars, probs).map_err(|e| parse_err(context, vline, e.to_string()))?;
        match degree {
            None => cliques.push(table),
            Some(degree) => separators.push(SeparatorTable { table, degree }),
        }
    }
    if cliques.is_empty() {
        return Err(parse_err(context, 0, "no clique tables"));
    }
    Ok(LabelModelParameters::new(tasks, sources, cliques, separators))
}

pub fn read_params(path: &Path) -> Result<LabelModelParameters> {
    parse_params(&read(path)?, &path.display().to_string())
}

/// Graph implied by a parameter set's junction tree.
pub fn params_graph(p: &LabelModelParameters) -> Result<DependencyGraph> {
    let jt: JunctionTree = p.junction_tree();
    let mut b = DependencyGraph::builder(p.n_tasks(), p.n_sources());
    for clique in jt.cliques() {
        let task = clique.iter().find_map(|v| if let Vertex::Task(d) = v { Some(*d) } else { None });
        let srcs: Vec<usize> =
            clique.iter().filter_map(|v| if let Vertex::Source(i) = v { Some(*i) } else { None }).collect();
        let tasks: Vec<usize> =
            clique.iter().filter_map(|v| if let Vertex::Task(d) = v { Some(*d) } else { None }).collect();
        for &i in &srcs {
            if let Some(d) = task {
                b = b.assign(i, d);
            }
        }
        if let [i, j] = srcs[..] {
            b = b.source_edge(i, j);
        }
        if let [d, e] = tasks[..] {
            b = b.task_edge(d, e);
        }
    }
    b.build()
}

/// Parses a simulation model: a graph spec plus parameter lines
/// `theta_task d v`, `theta_tedge d e v`, `theta_acc i v`,
/// `theta_abstain i v`, `theta_dep i j v` and `never_abstain i`.
/// Unlisted parameters are zero.
pub fn parse_model_spec(text: &str, context: &str) -> Result<CanonicalParameters> {
    let mut graph = GraphLines::default();
    let mut rest = Vec::new();
    for (line, words) in content_lines(text) {
        if !graph.accept(context, line, &words)? {
            rest.push((line, words));
        }
    }
    let mut theta = CanonicalParameters::zeros(graph.build(context)?);
    let (d, m) = (theta.graph.n_tasks(), theta.graph.n_sources());
    let bounded = |line: usize, k: usize, limit: usize, what: &str| -> Result<usize> {
        if k >= limit {
            return Err(parse_err(context, line, format!("{what} {} out of range", k + 1)));
        }
        Ok(k)
    };
    for (line, words) in rest {
        let kw = words[0];
        match kw {
            "theta_task" | "theta_acc" | "theta_abstain" => {
                arity_check(context, line, &words, 3)?;
                let (what, limit) = if kw == "theta_task" { ("task", d) } else { ("source", m) };
                let k = bounded(line, index(context, line, words[1], what)?, limit, what)?;
                let v: f64 = number(context, line, words[2], kw)?;
                let slot = match kw {
                    "theta_task" => &mut theta.theta_task[k],
                    "theta_acc" => &mut theta.theta_accuracy[k],
                    _ => &mut theta.theta_abstain[k],
                };
                *slot = v;
            }
            "theta_tedge" | "theta_dep" => {
                arity_check(context, line, &words, 4)?;
                let what = if kw == "theta_tedge" { "task" } else { "source" };
                let a = index(context, line, words[1], what)?;
                let b = index(context, line, words[2], what)?;
                let v: f64 = number(context, line, words[3], kw)?;
                let map =
                    if kw == "theta_tedge" { &mut theta.theta_task_edges } else { &mut theta.theta_dependency };
                let slot = map
                    .get_mut(&(a.min(b), a.max(b)))
                    .ok_or_else(|| parse_err(context, line, format!("no {what} edge {} {} in the graph", a + 1, b + 1)))?;
                *slot = v;
            }
            "never_abstain" => {
                arity_check(context, line, &words, 2)?;
                let i = bounded(line, index(context, line, words[1], "source")?, m, "source")?;
                theta.never_abstain[i] = true;
            }
            other => return Err(parse_err(context, line, format!("unknown keyword `{other}`"))),
        }
    }
    theta.validate()?;
    Ok(theta)
}

pub fn read_model_spec(path: &Path) -> Result<CanonicalParameters> {
    parse_model_spec(&read(path)?, &path.display().to_string())
}

/// Hidden task values as CSV, one row per sample and one column per task.
pub fn format_truth(truth: &[i8], tasks: usize) -> String {
    let mut out = String::new();
    for row in truth.chunks(tasks.max(1)) {
        let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
