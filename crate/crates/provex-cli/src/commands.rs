use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use provex::datalog::io::{load_inputs, read_file, Inputs};
use provex::datalog::{evaluate, evaluate3, ground_atom, parse_program, Program, Rule, Status};
use provex::error::Error;
use provex::factorize::{check_path_condition, enumerate_dtrees, factorized_explain, rewrite_for_dtree, DTree};
use provex::fo::{explain_formula, parse_domain, translate, Formula, KInterpretation};
use provex::games::{from_game, to_game};
use provex::graph::ProvGraph;
use provex::rewrite::{explain, rewrite, ExplainKind};
use provex::semiring::{transform_graph, OpGraph, SemiringKind};
use provex::ProvQuestion;

#[derive(Parser, Debug)]
#[command(name = "provex", version, about = "Why and why-not provenance for non-recursive Datalog")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Answer a provenance question.
    Explain(ExplainArgs),
    /// Evaluate a program and print the answer relation.
    Eval(EvalArgs),
    /// Translate a first-order formula into a Datalog program.
    FoTranslate(FoTranslateArgs),
    /// Compute the dual polynomial of a formula over a K-interpretation.
    FoExtract(FoExtractArgs),
    /// Rewrite a conjunctive query along a d-tree, optionally explaining it.
    Factorize(FactorizeArgs),
    /// Check a d-tree against a query, or list every valid d-tree.
    DtreeCheck(DtreeCheckArgs),
    /// Convert an explanation into a provenance game and verify the inverse.
    GameConvert(GameConvertArgs),
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Datalog program file.
    #[arg(long)]
    pub program: PathBuf,
    /// Directory with one `<Relation>.csv` per EDB relation.
    #[arg(long)]
    pub data: PathBuf,
    /// Domain-groups file: one comma-separated list of attributes per line.
    #[arg(long)]
    pub domains: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Full,
    Game,
    Nx,
    Bx,
    Trio,
    Why,
    Posbool,
    Which,
    Dual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Dot,
    Edgelist,
    Json,
    Poly,
}

#[derive(Args, Debug)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// `WHY Q(n,s)` or `WHYNOT Q(n,X)`; not used with `--kind dual`.
    #[arg(long, short)]
    pub question: Option<String>,
    #[arg(long, value_enum, default_value = "full")]
    pub kind: Kind,
    /// D-tree file; explains the factorized rewriting of a single-rule query.
    #[arg(long)]
    pub dtree: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Values for free variables of a formula (`--kind dual`), as `x=a`.
    #[arg(long = "bind")]
    pub binds: Vec<String>,
    /// Print every rewriting stage to standard error.
    #[arg(long)]
    pub dump_stages: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Print every IDB relation instead of the answer relation only.
    #[arg(long)]
    pub all: bool,
}

#[derive(Args, Debug)]
pub struct FoTranslateArgs {
    /// Formula file.
    #[arg(long)]
    pub formula: PathBuf,
}

#[derive(Args, Debug)]
pub struct FoExtractArgs {
    /// Formula file.
    #[arg(long)]
    pub formula: PathBuf,
    /// K-interpretation CSV: `pred,args...,pos,neg` per row.
    #[arg(long)]
    pub pi: PathBuf,
    /// Domain file: comma or whitespace separated constants.
    #[arg(long)]
    pub domain: PathBuf,
    /// Values for free variables, as `x=a`.
    #[arg(long = "bind")]
    pub binds: Vec<String>,
    #[arg(long, value_enum, default_value = "poly")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct FactorizeArgs {
    /// Program holding one conjunctive rule.
    #[arg(long)]
    pub program: PathBuf,
    #[arg(long)]
    pub dtree: PathBuf,
    /// Data directory; with `--question`, explains the rewritten query.
    #[arg(long, requires = "question")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub domains: Option<PathBuf>,
    #[arg(long, short, requires = "data")]
    pub question: Option<String>,
    #[arg(long, value_enum, default_value = "poly")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct DtreeCheckArgs {
    /// Program holding one conjunctive rule.
    #[arg(long)]
    pub program: PathBuf,
    #[arg(long, required_unless_present = "enumerate")]
    pub dtree: Option<PathBuf>,
    /// List every valid d-tree as JSON instead.
    #[arg(long)]
    pub enumerate: bool,
}

#[derive(Args, Debug)]
pub struct GameConvertArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, short)]
    pub question: String,
    #[arg(long, value_enum, default_value = "edgelist")]
    pub format: Format,
}

pub enum Failure {
    User(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::User(e.to_string())
    }
}

pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub code: u8,
}

impl Output {
    fn ok(stdout: String) -> Output {
        Output { stdout, stderr: String::new(), code: 0 }
    }
}

type Outcome = std::result::Result<Output, Failure>;

pub fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Explain(a) => run_explain(a),
        Command::Eval(a) => run_eval(a),
        Command::FoTranslate(a) => {
            let formula = load_formula(&a.formula)?;
            Ok(Output::ok(translate(&formula)?.program.to_string()))
        }
        Command::FoExtract(a) => run_dual(&a.formula, &a.pi, &a.domain, &a.binds, a.format),
        Command::Factorize(a) => run_factorize(a),
        Command::DtreeCheck(a) => run_dtree_check(a),
        Command::GameConvert(a) => run_game_convert(a),
    }
}

fn load(input: &InputArgs) -> std::result::Result<Inputs, Failure> {
    Ok(load_inputs(&input.program, &input.data, input.domains.as_deref())?)
}

fn question(text: Option<&str>) -> std::result::Result<ProvQuestion, Failure> {
    let text = text.ok_or_else(|| Failure::User("--question is required".into()))?;
    Ok(ProvQuestion::parse(text).map_err(|e| e.in_file("--question"))?)
}

fn graph_output<S: provex::graph::NodeStatus>(g: &provex::graph::Graph<S>, format: Format) -> Outcome {
    Ok(Output::ok(match format {
        Format::Dot => g.to_dot(),
        Format::Edgelist => g.to_edge_list(),
        Format::Json => g.to_json(),
        Format::Poly => return Err(Failure::User("format poly needs a semiring kind".into())),
    }))
}

/// Roots of an operator graph sorted by their tuple text.
fn sorted_roots(ops: &OpGraph) -> Vec<(String, usize)> {
    let mut roots: Vec<(String, usize)> = ops
        .roots
        .iter()
        .map(|&r| (ops.nodes[r].label.as_ref().map(|l| l.short()).unwrap_or_default(), r))
        .collect();
    roots.sort();
    roots
}

/// One polynomial per explained tuple; a lone tuple prints without its name.
fn poly_lines(entries: &[(String, String)]) -> String {
    match entries {
        [(_, p)] => format!("{p}\n"),
        _ => entries.iter().map(|(t, p)| format!("{t}: {p}\n")).collect(),
    }
}

fn poly_json(entries: &[(String, String)]) -> String {
    let map: BTreeMap<&str, &str> = entries.iter().map(|(t, p)| (t.as_str(), p.as_str())).collect();
    serde_json::to_string_pretty(&map).unwrap_or_default() + "\n"
}

fn ops_output(ops: &OpGraph, kind: SemiringKind, format: Format) -> Outcome {
    let entries: Vec<(String, String)> =
        sorted_roots(ops).into_iter().map(|(t, r)| (t, ops.polynomial(r, kind).to_string())).collect();
    Ok(Output::ok(match format {
        Format::Poly => poly_lines(&entries),
        Format::Json => poly_json(&entries),
        Format::Dot => ops.to_dot(),
        Format::Edgelist => return Err(Failure::User("operator graphs export as dot, json or poly".into())),
    }))
}

fn semiring(kind: Kind) -> Option<SemiringKind> {
    Some(match kind {
        Kind::Nx => SemiringKind::NX,
        Kind::Bx => SemiringKind::BX,
        Kind::Trio => SemiringKind::Trio,
        Kind::Why => SemiringKind::Why,
        Kind::Posbool => SemiringKind::PosBool,
        Kind::Which => SemiringKind::Which,
        Kind::Full | Kind::Game | Kind::Dual => return None,
    })
}

fn single_rule(program: &Program) -> std::result::Result<&Rule, Failure> {
    match &program.rules[..] {
        [rule] => Ok(rule),
        _ => Err(Failure::User(format!("a d-tree needs a program with one rule, found {}", program.rules.len()))),
    }
}

fn load_dtree(path: &Path) -> std::result::Result<DTree, Failure> {
    Ok(DTree::parse(&read_file(path)?).map_err(|e| e.in_file(path.display().to_string()))?)
}

fn run_explain(a: ExplainArgs) -> Outcome {
    if a.kind == Kind::Dual {
        let pi = a.input.data.join("pi.csv");
        let domain = a.input.data.join("domain.txt");
        return run_dual(&a.input.program, &pi, &domain, &a.binds, a.format.unwrap_or(Format::Poly));
    }
    let inputs = load(&a.input)?;
    let q = question(a.question.as_deref())?;
    let mut stderr = String::new();
    if a.dump_stages && !inputs.instance.has_undetermined() {
        let kind = if a.kind == Kind::Which { ExplainKind::Which } else { ExplainKind::Full };
        stderr = rewrite(&inputs.program, &inputs.instance, &inputs.dom, &q, kind)?.stages(&inputs.program);
    }
    if let Some(path) = &a.dtree {
        if !matches!(a.kind, Kind::Nx | Kind::Full) {
            return Err(Failure::User("a d-tree produces N[X] provenance; use --kind nx".into()));
        }
        let tree = load_dtree(path)?;
        let rule = single_rule(&inputs.program)?;
        let f = factorized_explain(rule, &inputs.instance, &inputs.dom, &q, &tree)?;
        let mut out = factorized_output(&f.ops, &f.graph, a.format.unwrap_or(Format::Poly))?;
        out.stderr = stderr;
        return Ok(out);
    }
    let format = a.format.unwrap_or(if semiring(a.kind).is_some() { Format::Poly } else { Format::Edgelist });
    let mut out = match (a.kind, semiring(a.kind)) {
        (Kind::Which, _) if format != Format::Poly => {
            let g = explain(&inputs.program, &inputs.instance, &inputs.dom, &q, ExplainKind::Which)?;
            graph_output(&g, format)?
        }
        (_, Some(kind)) => {
            let g = explain(&inputs.program, &inputs.instance, &inputs.dom, &q, ExplainKind::Full)?;
            ops_output(&transform_graph(&g, kind, &inputs.instance)?, kind, format)?
        }
        (Kind::Game, _) => {
            let g = explain(&inputs.program, &inputs.instance, &inputs.dom, &q, ExplainKind::Full)?;
            graph_output(&to_game(&g, &inputs.program)?, format)?
        }
        _ => {
            let g = explain(&inputs.program, &inputs.instance, &inputs.dom, &q, ExplainKind::Full)?;
            graph_output(&g, format)?
        }
    };
    out.stderr = stderr;
    Ok(out)
}

fn factorized_output(ops: &OpGraph, graph: &ProvGraph, format: Format) -> Outcome {
    match format {
        Format::Poly => {
            let entries: Vec<(String, String)> =
                sorted_roots(ops).into_iter().map(|(t, r)| (t, ops.expression(r))).collect();
            Ok(Output::ok(poly_lines(&entries)))
        }
        Format::Json => {
            let entries: Vec<(String, String)> =
                sorted_roots(ops).into_iter().map(|(t, r)| (t, ops.expression(r))).collect();
            Ok(Output::ok(poly_json(&entries)))
        }
        Format::Dot => Ok(Output::ok(ops.to_dot())),
        Format::Edgelist => graph_output(graph, Format::Edgelist),
    }
}

fn run_eval(a: EvalArgs) -> Outcome {
    let inputs = load(&a.input)?;
    let preds: Vec<String> = if a.all {
        inputs.program.idb_preds().into_iter().map(str::to_string).collect()
    } else {
        vec![inputs.program.answer.clone()]
    };
    let mut out = String::new();
    if inputs.instance.has_undetermined() {
        let result = evaluate3(&inputs.program, &inputs.instance)?;
        for p in &preds {
            for (t, s) in result.non_false(p) {
                let _ = writeln!(out, "{} {}", ground_atom(p, &t), s);
            }
        }
    } else {
        let result = evaluate(&inputs.program, &inputs.instance)?;
        for p in &preds {
            for t in result.tuples(p) {
                let _ = writeln!(out, "{}", ground_atom(p, t));
            }
        }
    }
    Ok(Output::ok(out))
}

fn load_formula(path: &Path) -> std::result::Result<Formula, Failure> {
    Ok(Formula::parse(&read_file(path)?).map_err(|e| e.in_file(path.display().to_string()))?)
}

fn parse_binds(binds: &[String]) -> std::result::Result<BTreeMap<String, String>, Failure> {
    binds
        .iter()
        .map(|b| {
            b.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Failure::User(format!("--bind expects var=value, got `{b}`")))
        })
        .collect()
}

fn run_dual(formula: &Path, pi: &Path, domain: &Path, binds: &[String], format: Format) -> Outcome {
    let f = load_formula(formula)?;
    let interp = KInterpretation::parse(&read_file(pi)?).map_err(|e| e.in_file(pi.display().to_string()))?;
    let dom: BTreeSet<String> = parse_domain(&read_file(domain)?);
    let nu = parse_binds(binds)?;
    let d = explain_formula(&f, &interp, &dom, &nu)?;
    match format {
        Format::Poly => Ok(Output::ok(format!("{}\n", d.polynomial))),
        Format::Json => Ok(Output::ok(poly_json(&[(d.root.to_string(), d.polynomial.to_string())]))),
        other => graph_output(&d.graph, other),
    }
}

fn run_factorize(a: FactorizeArgs) -> Outcome {
    let text = read_file(&a.program)?;
    let program = parse_program(&text).map_err(|e| e.in_file(a.program.display().to_string()))?;
    let rule = single_rule(&program)?;
    let tree = load_dtree(&a.dtree)?;
    let (Some(data), Some(qtext)) = (&a.data, &a.question) else {
        return Ok(Output::ok(rewrite_for_dtree(rule, &tree)?.to_string()));
    };
    let inputs = load_inputs(&a.program, data, a.domains.as_deref())?;
    let q = question(Some(qtext))?;
    let f = factorized_explain(rule, &inputs.instance, &inputs.dom, &q, &tree)?;
    let mut out = factorized_output(&f.ops, &f.graph, a.format)?;
    if a.format == Format::Poly {
        out.stdout = format!("{}\n{}", f.program, out.stdout);
    }
    Ok(out)
}

fn run_dtree_check(a: DtreeCheckArgs) -> Outcome {
    let text = read_file(&a.program)?;
    let program = parse_program(&text).map_err(|e| e.in_file(a.program.display().to_string()))?;
    let rule = single_rule(&program)?;
    if a.enumerate {
        let trees = enumerate_dtrees(rule)?;
        let json: Vec<String> = trees.iter().map(DTree::to_json).collect();
        return Ok(Output::ok(format!("[\n{}\n]\n", json.join(",\n"))));
    }
    let path = a.dtree.as_deref().ok_or_else(|| Failure::User("--dtree is required".into()))?;
    let report = check_path_condition(rule, &load_dtree(path)?)?;
    let code = if report.valid { 0 } else { 1 };
    Ok(Output { stdout: report.to_string(), stderr: String::new(), code })
}

fn run_game_convert(a: GameConvertArgs) -> Outcome {
    let inputs = load(&a.input)?;
    let q = question(Some(&a.question))?;
    let expl = explain(&inputs.program, &inputs.instance, &inputs.dom, &q, ExplainKind::Full)?;
    if expl.nodes().any(|(_, s)| s == Status::U) {
        return Err(Error::UndeterminedStatusPresent.into());
    }
    let game = to_game(&expl, &inputs.program)?;
    let back = from_game(&game).map_err(|e| Failure::Internal(format!("game does not convert back: {e}")))?;
    if back.edge_lines() != expl.edge_lines() || back.node_strings() != expl.node_strings() {
        return Err(Failure::Internal("game does not convert back to the explanation".into()));
    }
    graph_output(&game, a.format)
}
