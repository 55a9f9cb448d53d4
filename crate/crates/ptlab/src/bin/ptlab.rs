//! `ptlab`: check, measure, and construct leaks in circuit files.
//!
//! Exit codes: 0 when the queried property holds, 1 when it fails, 2 on
//! input errors (parse, type, io). JSON on stdout, a one-line summary on
//! stderr unless `--json-only`.

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ptlab::construct::{self, ConstructedTheory};
use ptlab::dsl;
use ptlab::leak::{self, LeakKind, QualityOptions};
use ptlab::mat::Tolerance;
use ptlab::process::{self, Atom, Process};
use ptlab::purity;
use ptlab::report::{matrix_value, process_value, Report};
use ptlab::PtError;

#[derive(Parser)]
#[command(name = "ptlab", about = "process-theory workbench", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a property of the main diagram.
    Check {
        what: CheckWhat,
        file: String,
        #[command(flatten)]
        common: Common,
    },
    /// Measure the quality of the main diagram as a leak.
    Quality {
        file: String,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Run the leak construction with the main diagram as pre-leak.
    Construct {
        file: String,
        /// Circuit whose main diagram is projected into the constructed
        /// theory and, in the dephasing instance, extracted classically.
        #[arg(long)]
        apply: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Parse a file and echo its canonical form.
    Parse {
        file: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckWhat {
    Causal,
    Cp,
    Leak,
    Broadcast,
    Pure,
}

#[derive(clap::Args)]
struct Common {
    /// Absolute and relative tolerance (default 1e-9, or $PTLAB_TOL).
    #[arg(long)]
    tol: Option<f64>,
    /// Suppress the human-readable summary on stderr.
    #[arg(long)]
    json_only: bool,
}

fn tolerance(common: &Common) -> Result<Tolerance, PtError> {
    let raw = match common.tol {
        Some(v) => Some(v),
        None => match std::env::var("PTLAB_TOL") {
            Ok(s) => Some(s.parse().map_err(|_| {
                PtError::InvalidArgument(format!("PTLAB_TOL is not a number: `{s}`"))
            })?),
            Err(_) => None,
        },
    };
    match raw {
        Some(eps) if eps.is_finite() && eps >= 0.0 => Ok(Tolerance {
            abs_eps: eps,
            rel_eps: eps,
        }),
        Some(eps) => Err(PtError::InvalidTolerance {
            abs_eps: eps,
            rel_eps: eps,
        }),
        None => Ok(Tolerance::default()),
    }
}

/// Property failures exit 1; anything about reading or understanding the
/// input exits 2.
fn exit_code_for(err: &PtError) -> u8 {
    match err {
        PtError::NotCausal { .. }
        | PtError::NotIdempotent { .. }
        | PtError::NotCompletelyPositive
        | PtError::NotLeak { .. }
        | PtError::NotMember { .. }
        | PtError::ReconstructionFailed { .. } => 1,
        _ => 2,
    }
}

fn load(path: &str, report: &mut Report) -> Result<ptlab::dsl::CircuitFile, PtError> {
    let text = std::fs::read_to_string(path)?;
    report.set_input(path, &text);
    dsl::parse(&text)
}

fn load_main(path: &str, report: &mut Report) -> Result<Process, PtError> {
    let file = load(path, report)?;
    dsl::evaluate(&file)
}

fn finish(mut report: Report, start: Instant, holds: bool, summary: &str, json_only: bool) -> u8 {
    report.set_elapsed_ms(start.elapsed().as_secs_f64() * 1e3);
    println!("{}", report.to_json());
    if !json_only {
        eprintln!("{summary}");
    }
    u8::from(!holds)
}

fn fail(mut report: Report, start: Instant, err: PtError, json_only: bool) -> u8 {
    report.set("error", json!(err.to_string()));
    report.set_elapsed_ms(start.elapsed().as_secs_f64() * 1e3);
    println!("{}", report.to_json());
    if !json_only {
        eprintln!("error: {err}");
    }
    exit_code_for(&err)
}

fn leak_kind_name(kind: &LeakKind) -> &'static str {
    match kind {
        LeakKind::Broadcast => "Broadcast",
        LeakKind::Constant(_) => "Constant",
        LeakKind::ClassicalCanonical(_) => "ClassicalCanonical",
        LeakKind::CqCanonical(_) => "CqCanonical",
        LeakKind::Other => "Other",
    }
}

fn cmd_check(what: CheckWhat, file: &str, common: &Common, argv: &[String]) -> u8 {
    let start = Instant::now();
    let mut report = Report::new(argv);
    let tol = match tolerance(common) {
        Ok(t) => t,
        Err(e) => return fail(report, start, e, common.json_only),
    };
    let p = match load_main(file, &mut report) {
        Ok(p) => p,
        Err(e) => return fail(report, start, e, common.json_only),
    };
    report.set("dom", json!(p.dom().to_string()));
    report.set("cod", json!(p.cod().to_string()));
    let (holds, summary) = match what {
        CheckWhat::Causal => {
            let residual = process::causality_residual(&p);
            let holds = process::is_causal(&p, tol);
            report.set("check", json!("causal"));
            report.set("holds", json!(holds));
            report.set("residual", json!(residual));
            (holds, format!("causal: {holds} (residual {residual:.3e})"))
        }
        CheckWhat::Cp => {
            let holds = process::is_cp(&p, tol);
            report.set("check", json!("cp"));
            report.set("holds", json!(holds));
            (holds, format!("completely positive: {holds}"))
        }
        CheckWhat::Leak | CheckWhat::Broadcast => {
            let cert = match leak::is_leak(&p, tol) {
                Ok(c) => c,
                // A process whose codomain does not extend its domain is
                // simply not a leak; that is a failed property, not bad
                // input.
                Err(PtError::TypeMismatch(reason)) => {
                    report.set("check", json!("leak"));
                    report.set("holds", json!(false));
                    report.set("kind", json!(Option::<&str>::None));
                    report.set("reason", json!(reason));
                    return finish(report, start, false, "leak: false (wrong shape)", common.json_only);
                }
                Err(e) => return fail(report, start, e, common.json_only),
            };
            let kind = cert.kind.as_ref().map(leak_kind_name);
            let holds = match what {
                CheckWhat::Leak => cert.is_leak,
                _ => cert.is_leak && matches!(cert.kind, Some(LeakKind::Broadcast)),
            };
            report.set(
                "check",
                json!(match what {
                    CheckWhat::Leak => "leak",
                    _ => "broadcast",
                }),
            );
            report.set("holds", json!(holds));
            report.set("residual", json!(cert.residual));
            report.set("kind", json!(kind));
            (
                holds,
                format!(
                    "leak: {} (residual {:.3e}, kind {})",
                    cert.is_leak,
                    cert.residual,
                    kind.unwrap_or("none")
                ),
            )
        }
        CheckWhat::Pure => {
            let all = |ty: &ptlab::SystemType, f: fn(&Atom) -> bool| ty.factors().iter().all(f);
            let quantum_only = all(p.dom(), |a| matches!(a, Atom::Quantum(_)))
                && all(p.cod(), |a| matches!(a, Atom::Quantum(_)));
            let classical_only = all(p.dom(), |a| matches!(a, Atom::Classical(_)))
                && all(p.cod(), |a| matches!(a, Atom::Classical(_)));
            let verdict = if quantum_only {
                purity::is_pure_quantum(&p, tol)
            } else if classical_only {
                purity::is_pure_classical(&p, tol)
            } else {
                purity::is_pure_cq(&p, tol)
            };
            let verdict = match verdict {
                Ok(v) => v,
                Err(e) => return fail(report, start, e, common.json_only),
            };
            report.set("check", json!("pure"));
            report.set("holds", json!(verdict.pure));
            if let Some(rank) = verdict.quantum_kraus_rank {
                report.set("kraus_rank", json!(rank));
            }
            if let Some(form) = &verdict.classical_form {
                report.set("pattern", json!(form.pattern));
                report.set("weights", json!(form.weights));
            }
            if let Some(blocks) = &verdict.cq_blocks {
                let list: Vec<_> = blocks
                    .iter()
                    .map(|b| json!([b.classical_out, b.classical_in, b.kraus_rank]))
                    .collect();
                report.set("cq_blocks", json!(list));
            }
            if let Some(v) = &verdict.violation {
                report.set("violation", json!(v));
            }
            (verdict.pure, format!("pure: {}", verdict.pure))
        }
    };
    finish(report, start, holds, &summary, common.json_only)
}

fn cmd_quality(
    file: &str,
    restarts: usize,
    seed: u64,
    common: &Common,
    argv: &[String],
) -> u8 {
    let start = Instant::now();
    let mut report = Report::new(argv);
    let tol = match tolerance(common) {
        Ok(t) => t,
        Err(e) => return fail(report, start, e, common.json_only),
    };
    let p = match load_main(file, &mut report) {
        Ok(p) => p,
        Err(e) => return fail(report, start, e, common.json_only),
    };
    let opts = QualityOptions {
        restarts,
        seed,
        ..QualityOptions::default()
    };
    let q = match leak::quality(&p, tol, opts) {
        Ok(q) => q,
        Err(e) => return fail(report, start, e, common.json_only),
    };
    report.set("raw", json!(q.raw));
    report.set("circle", json!(q.circle));
    report.set("normalized", json!(q.normalized));
    report.set(
        "optimal_restoration",
        process_value(&q.optimal_restoration),
    );
    let summary = format!(
        "quality: raw {:.6}, circle {:.6}, normalized {:.6}",
        q.raw, q.circle, q.normalized
    );
    finish(report, start, true, &summary, common.json_only)
}

fn cmd_construct(
    file: &str,
    apply: Option<&str>,
    common: &Common,
    argv: &[String],
) -> u8 {
    let start = Instant::now();
    let mut report = Report::new(argv);
    let tol = match tolerance(common) {
        Ok(t) => t,
        Err(e) => return fail(report, start, e, common.json_only),
    };
    let p = match load_main(file, &mut report) {
        Ok(p) => p,
        Err(e) => return fail(report, start, e, common.json_only),
    };
    let pre = match construct::make_preleak(&p, tol) {
        Ok(pre) => pre,
        Err(e) => return fail(report, start, e, common.json_only),
    };
    let system = pre.system();
    report.set("system", json!(system.to_string()));
    report.set(
        "idempotent",
        process_value(pre.induced_idempotent()),
    );
    let mut theory = ConstructedTheory::new();
    theory.assign(pre.clone());
    for atom in pre.process().cod().factors().iter().skip(1) {
        if theory.preleak(*atom).is_none() {
            theory.assign_identity(*atom);
        }
    }
    let induced_residual = match theory.induced_leak_residual(system) {
        Ok(r) => r,
        Err(e) => return fail(report, start, e, common.json_only),
    };
    report.set("induced_leak_residual", json!(induced_residual));
    let sys_ty = ptlab::SystemType::atom(system);
    let dephasing = theory.is_dephasing_instance(&sys_ty, tol);
    report.set("dephasing_instance", json!(dephasing));
    let mut summary = format!(
        "pre-leak on {system}: induced leak residual {induced_residual:.3e}, dephasing {dephasing}"
    );
    if let Some(apply_path) = apply {
        let f = match load_main(apply_path, &mut Report::new(argv)) {
            Ok(f) => f,
            Err(e) => return fail(report, start, e, common.json_only),
        };
        let projected = match theory.project(&f) {
            Ok(p) => p,
            Err(e) => return fail(report, start, e, common.json_only),
        };
        let residual = match theory.membership_residual(&f) {
            Ok(r) => r,
            Err(e) => return fail(report, start, e, common.json_only),
        };
        report.set("applied", json!(apply_path));
        report.set("membership_residual", json!(residual));
        report.set("projected", process_value(&projected));
        if dephasing
            && theory.is_dephasing_instance(projected.dom(), tol)
            && theory.is_dephasing_instance(projected.cod(), tol)
        {
            match theory.extract_classical(&projected, tol) {
                Ok(extracted) => {
                    report.set("extracted_classical", matrix_value(extracted.transfer()));
                }
                Err(e) => return fail(report, start, e, common.json_only),
            }
        }
        summary.push_str(&format!(", applied {apply_path} (membership residual {residual:.3e})"));
    }
    finish(report, start, true, &summary, common.json_only)
}

fn cmd_parse(file: &str, common: &Common, argv: &[String]) -> u8 {
    let start = Instant::now();
    let mut report = Report::new(argv);
    let parsed = match load(file, &mut report) {
        Ok(f) => f,
        Err(e) => return fail(report, start, e, common.json_only),
    };
    let canonical = dsl::pretty_print(&parsed);
    report.set("canonical", json!(canonical));
    report.set("declarations", json!(parsed.decls.len()));
    let has_main = parsed
        .decls
        .iter()
        .any(|d| matches!(d, dsl::Decl::Main(_)));
    report.set("has_main", json!(has_main));
    let summary = format!(
        "parsed {} declaration(s){}",
        parsed.decls.len(),
        if has_main { ", with main" } else { "" }
    );
    finish(report, start, true, &summary, common.json_only)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let code = match &cli.command {
        Cmd::Check { what, file, common } => cmd_check(*what, file, common, &argv),
        Cmd::Quality {
            file,
            restarts,
            seed,
            common,
        } => cmd_quality(file, *restarts, *seed, common, &argv),
        Cmd::Construct {
            file,
            apply,
            common,
        } => cmd_construct(file, apply.as_deref(), common, &argv),
        Cmd::Parse { file, common } => cmd_parse(file, common, &argv),
    };
    ExitCode::from(code)
}
