//! Front end for constructing sets, checking nonlocality, drawing grids and
//! running discrimination protocols.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use nonloc_core::construct::{max_block_statistic, toy};
use nonloc_core::plane::{theorem1_verdict, Theorem1Report};
use nonloc_core::povm::{oracle_for_with_tol, GroupingVerdict};
use nonloc_core::protocol::{builtin_tree, run_protocol, BuiltinTheorem, ProtocolTree};
use nonloc_core::render::render_grid;
use nonloc_core::{build, Bipartition, Error, OpsFamilyId, OpsInstance, SystemDims, ORTHO_TOL};

pub const TOL_ENV: &str = "NONLOC_TOL";
pub const TOL_RANGE: (f64, f64) = (1e-12, 1e-6);

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[repr(i32)]
pub enum Exit {
    Pass = 0,
    Error = 1,
    StructuralFail = 2,
    OracleNontrivial = 3,
    Disagreement = 4,
    Borderline = 5,
    ProtocolFail = 6,
}

#[derive(Parser, Debug)]
#[command(name = "nonloc", version, about = "Strong quantum nonlocality toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a set and write it as JSON.
    Construct(ConstructArgs),
    /// Structural check and nullspace oracle on each grouping.
    Verify(VerifyArgs),
    /// Draw the grid of a set under one bipartition.
    Render(RenderArgs),
    /// Run a protocol tree on every state of its family.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SetArgs {
    /// Built-in family (Bennett33, Yuan333, H12, S48, H8x3, U4party) or a toy
    /// set (full-basis, disjoint-tiles).
    #[arg(long)]
    pub family: Option<String>,
    /// Local dimensions, e.g. 3,3,3.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Set file written by `construct`.
    #[arg(long, conflicts_with = "family")]
    pub input: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub set: SetArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Svg,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub set: SetArgs,
    /// Grouping such as "BC|A" or "BC"; repeatable. Default: every cyclic grouping.
    #[arg(long)]
    pub bipartition: Vec<String>,
    /// Orthogonality tolerance for the oracle, within [1e-12, 1e-6].
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Skip the nullspace oracle.
    #[arg(long)]
    pub structural_only: bool,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[command(flatten)]
    pub set: SetArgs,
    /// X side of the grid; default is the first party.
    #[arg(long, default_value = "A")]
    pub bipartition: String,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// 8, 9, 10, 11, 12, 13, 14a or 14b.
    #[arg(long)]
    pub theorem: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Protocol tree JSON instead of a built-in theorem.
    #[arg(long, conflicts_with = "theorem")]
    pub tree: Option<PathBuf>,
    /// Set file to run on; default is the tree's family at its dims.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Write transcripts as JSON lines.
    #[arg(long)]
    pub transcripts: Option<PathBuf>,
    /// Write the tree as JSON.
    #[arg(long)]
    pub export_tree: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a run was asked to do, echoed into JSON reports.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub family: Option<String>,
    pub dims: Option<Vec<usize>>,
    pub bipartitions: Vec<String>,
    pub theorem: Option<String>,
    pub outputs: Vec<PathBuf>,
    pub tolerance: f64,
}

/// Resolves the orthogonality tolerance: flag, then environment, then default.
pub fn resolve_tolerance(flag: Option<f64>) -> Result<f64, Error> {
    let t = match flag {
        Some(t) => t,
        None => match std::env::var(TOL_ENV) {
            Ok(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("{TOL_ENV}={s:?} is not a number")))?,
            Err(_) => ORTHO_TOL,
        },
    };
    if !(TOL_RANGE.0..=TOL_RANGE.1).contains(&t) {
        return Err(Error::Domain(format!(
            "tolerance {t:e} outside [{:e}, {:e}]",
            TOL_RANGE.0, TOL_RANGE.1
        )));
    }
    Ok(t)
}

fn dims_of(d: &Option<Vec<usize>>) -> Result<SystemDims, Error> {
    match d {
        Some(v) => SystemDims::new(v.clone()),
        None => Err(Error::Domain("--dims is required".into())),
    }
}

pub fn load_set(args: &SetArgs) -> Result<OpsInstance, Error> {
    if let Some(p) = &args.input {
        return OpsInstance::load(p);
    }
    let fam = args
        .family
        .as_deref()
        .ok_or_else(|| Error::Domain("give --family or --input".into()))?;
    match fam.to_ascii_lowercase().as_str() {
        "disjoint-tiles" => toy::disjoint_tiles(),
        "full-basis" => toy::full_basis(&dims_of(&args.dims)?),
        _ => {
            let id = OpsFamilyId::parse(fam);
            if let OpsFamilyId::Custom(name) = &id {
                return Err(Error::Domain(format!("unknown family {name:?}")));
            }
            build(&id, &dims_of(&args.dims)?)
        }
    }
}

fn io_err(p: &std::path::Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(Error::Io),
    }
}

/// Per-grouping combination of the two checks.
#[derive(Clone, Debug, Serialize)]
pub struct GroupingReport {
    pub grouping: String,
    pub structural: serde_json::Value,
    pub structural_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<GroupingVerdict>,
    pub agree: Option<bool>,
}

/// Exit code for a set of grouping results. Borderline rank withholds any
/// claim; any mismatch between the checks comes next.
pub fn verify_exit(reports: &[GroupingReport]) -> Exit {
    if reports.iter().any(|r| r.oracle.as_ref().is_some_and(|o| o.borderline)) {
        return Exit::Borderline;
    }
    if reports.iter().any(|r| r.agree == Some(false)) {
        return Exit::Disagreement;
    }
    if reports.iter().any(|r| r.oracle.as_ref().is_some_and(|o| !o.trivial)) {
        return Exit::OracleNontrivial;
    }
    if reports.iter().any(|r| !r.structural_pass) {
        return Exit::StructuralFail;
    }
    Exit::Pass
}

fn verdict_text(r: &Theorem1Report) -> String {
    match &r.verdict {
        nonloc_core::plane::Verdict::Pass => "pass".into(),
        nonloc_core::plane::Verdict::Fail { conditions } => {
            let c: Vec<String> = conditions
                .iter()
                .map(|c| serde_json::to_value(c).unwrap().as_str().unwrap_or("?").to_string())
                .collect();
            format!("fail({})", c.join(","))
        }
    }
}

fn cmd_construct(a: &ConstructArgs, stdout: &mut dyn Write) -> Result<Exit, Error> {
    let ops = load_set(&a.set)?;
    let text = ops.to_json()?;
    match &a.out {
        Some(p) => {
            ops.save(p)?;
            let _ = writeln!(
                stdout,
                "{} {:?}: {} states in {} subsets, N = {} -> {}",
                ops.family.name(),
                ops.dims.as_slice(),
                ops.len(),
                ops.subsets.len(),
                max_block_statistic(&ops),
                p.display()
            );
        }
        None => emit(&None, &(text + "\n"), stdout)?,
    }
    Ok(Exit::Pass)
}

fn cmd_verify(a: &VerifyArgs, stdout: &mut dyn Write) -> Result<Exit, Error> {
    let tol = resolve_tolerance(a.tolerance)?;
    let ops = load_set(&a.set)?;
    let n = ops.n();
    let bips: Vec<Bipartition> = if a.bipartition.is_empty() {
        (0..n).map(|i| Bipartition::cyclic(i, n)).collect::<Result<_, _>>()?
    } else {
        a.bipartition
            .iter()
            .map(|s| Bipartition::parse(s, n))
            .collect::<Result<_, _>>()?
    };
    let oracles: Vec<Option<GroupingVerdict>> = if a.structural_only {
        vec![None; bips.len()]
    } else {
        std::thread::scope(|s| {
            let hs: Vec<_> = bips
                .iter()
                .map(|b| s.spawn(|| oracle_for_with_tol(&ops, b, tol)))
                .collect();
            hs.into_iter()
                .map(|h| h.join().expect("oracle worker panicked").map(Some))
                .collect::<Result<Vec<_>, _>>()
        })?
    };
    let mut reports = Vec::new();
    let mut lines = Vec::new();
    for (b, oracle) in bips.iter().zip(oracles) {
        let t1 = theorem1_verdict(&ops, b);
        let pass = t1.verdict.passed();
        let agree = oracle.as_ref().map(|o| !o.borderline && o.trivial == pass);
        let otext = match &oracle {
            None => "oracle skipped".to_string(),
            Some(o) => format!(
                "oracle {} (nullspace dim {}, gap {:.3e}{})",
                if o.trivial { "trivial" } else { "nontrivial" },
                o.nullspace_dim,
                o.gap_ratio,
                if o.borderline { ", borderline" } else { "" }
            ),
        };
        lines.push(format!("{:<8} structural {:<16} {otext}", b.label(), verdict_text(&t1)));
        reports.push(GroupingReport {
            grouping: b.label(),
            structural: t1.to_json(&ops),
            structural_pass: pass,
            oracle,
            agree,
        });
    }
    let exit = verify_exit(&reports);
    let manifest = RunManifest {
        command: "verify".into(),
        family: Some(ops.family.name().to_string()),
        dims: Some(ops.dims.as_slice().to_vec()),
        bipartitions: bips.iter().map(|b| b.label()).collect(),
        theorem: None,
        outputs: a.out.iter().cloned().collect(),
        tolerance: tol,
    };
    let text = match a.format {
        Format::Json => {
            serde_json::to_string_pretty(&json!({
                "manifest": manifest,
                "groupings": reports,
                "exit": exit as i32,
            }))? + "\n"
        }
        Format::Text => format!(
            "{} {:?}, {} states\n{}\nresult: {:?} (exit {})\n",
            ops.family.name(),
            ops.dims.as_slice(),
            ops.len(),
            lines.join("\n"),
            exit,
            exit as i32
        ),
        Format::Svg => return Err(Error::Domain("verify has no svg output".into())),
    };
    emit(&a.out, &text, stdout)?;
    Ok(exit)
}

fn cmd_render(a: &RenderArgs, stdout: &mut dyn Write) -> Result<Exit, Error> {
    let ops = load_set(&a.set)?;
    let bip = Bipartition::parse(&a.bipartition, ops.n())?;
    let g = render_grid(&ops, &bip);
    let text = match a.format {
        Format::Text => g.to_text(),
        Format::Svg => g.to_svg(),
        Format::Json => serde_json::to_string_pretty(&g)? + "\n",
    };
    emit(&a.out, &text, stdout)?;
    Ok(Exit::Pass)
}

fn cmd_simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> Result<Exit, Error> {
    let tree = match (&a.theorem, &a.tree) {
        (Some(t), _) => builtin_tree(t.parse::<BuiltinTheorem>()?, &dims_of(&a.dims)?)?,
        (None, Some(p)) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            ProtocolTree::from_json(&serde_json::from_str(&text)?)?
        }
        (None, None) => return Err(Error::Domain("give --theorem or --tree".into())),
    };
    if let Some(p) = &a.export_tree {
        fs::write(p, serde_json::to_string_pretty(&tree.to_json())? + "\n")
            .map_err(|e| io_err(p, e))?;
    }
    let ops = match &a.input {
        Some(p) => OpsInstance::load(p)?,
        None => build(&OpsFamilyId::parse(&tree.family), &tree.dims)?,
    };
    let result = run_protocol(&tree, &ops)?;
    if let Some(p) = &a.transcripts {
        fs::write(p, result.transcripts_jsonl()?).map_err(|e| io_err(p, e))?;
    }
    let exit = if result.verdict { Exit::Pass } else { Exit::ProtocolFail };
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&json!({ "result": result, "exit": exit as i32 }))? + "\n",
        Format::Text => {
            let mut s = format!(
                "{} on {} {:?}: {} states, {} nodes, verdict {}\n",
                result.tree, result.family, result.dims, result.states, result.check.nodes, result.verdict
            );
            for e in &result.ebits.entries {
                s += &format!("  {}: expected {} ebits (copies {}), declared {}\n", e.entry, e.expected, e.expected_copies, e.declared);
            }
            let total = &result.ebits.expected_total;
            let alias = match total.single_log() {
                Some(n) if total.terms().any(|(p, _)| p != 2) => format!(" = log2({n})"),
                _ => String::new(),
            };
            s += &format!(
                "  total expected {total}{alias} ebits, declared {}\n",
                result.ebits.declared_total
            );
            for f in &result.soundness_failures {
                s += &format!("  unsound: {f}\n");
            }
            for l in result.leaves.iter().filter(|l| !l.certificate.certified) {
                s += &format!(
                    "  uncertified leaf {}: {}\n",
                    l.id,
                    l.certificate.reason.as_deref().unwrap_or("")
                );
            }
            if !result.soundness_failures.is_empty() {
                for t in result
                    .transcripts
                    .iter()
                    .filter(|t| result.soundness_failures.iter().any(|f| f.starts_with(&format!("{} ", t.state))))
                    .take(5)
                {
                    s += &format!("  transcript: {}\n", serde_json::to_string(t)?);
                }
            }
            s
        }
        Format::Svg => return Err(Error::Domain("simulate has no svg output".into())),
    };
    emit(&a.out, &text, stdout)?;
    Ok(exit)
}

/// Runs one command, writing reports to `stdout`. Errors map to exit 1.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<Exit, Error> {
    match &cli.command {
        Command::Construct(a) => cmd_construct(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Render(a) => cmd_render(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
    }
}
