use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sos_transport::builtin;
use sos_transport::glab::{check_invariance, g_check, invariant_subspace, default_degree_bound, GVerdict, Membership, SubspaceOutcome};
use sos_transport::linops::OperatorDescriptor;
use sos_transport::sos::check_certificate;
use sos_transport::transport::{
    build_graded_custom, build_graded_full, build_orthant, build_rank_one, find_tau, sample_pos, scenario,
    scenario_config, verify_plan, TransportError, TransportPlan, SCENARIO_NAMES,
};
use sos_transport::{
    build_gram_problem, certify_sos, export_sdpa, interior_point, CertifyOutcome, Domain, LinearFunctional,
    OperatorExpr, Polynomial,
};

use crate::config::RunConfig;
use crate::input;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Malformed = 1,
    Refuted = 2,
    Undecided = 3,
    Exhausted = 4,
    Hypothesis = 5,
}

pub struct Report {
    pub command: &'static str,
    pub status: &'static str,
    pub exit: Exit,
    pub result: Value,
    pub text: String,
}

#[derive(Serialize)]
struct Envelope<'a> {
    command: &'a str,
    status: &'a str,
    exit_code: u8,
    config: &'a RunConfig,
    result: &'a Value,
}

impl Report {
    pub fn to_json(&self, config: &RunConfig) -> String {
        let env = Envelope {
            command: self.command,
            status: self.status,
            exit_code: self.exit as u8,
            config,
            result: &self.result,
        };
        serde_json::to_string_pretty(&env).expect("reports serialize") + "\n"
    }

    pub fn to_text(&self) -> String {
        format!("{}: {}\n{}", self.command, self.status, self.text)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether a polynomial is a sum of squares, with a certificate.
    Certify(CertifyArgs),
    /// Build a transport plan.
    #[command(subcommand)]
    Transport(TransportCommand),
    /// Run a named scenario: a transport demo or a builtin operator check.
    Demo(DemoArgs),
    /// Check whether e^{tA} stays on polynomials, within degree bounds.
    Gcheck(GcheckArgs),
    /// Apply a linear functional to a polynomial.
    Moments(MomentsArgs),
    /// Write the Gram feasibility problem in SDPA sparse format.
    ExportSdpa(ExportArgs),
    /// Re-validate a report written by certify, transport, demo or gcheck.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Polynomial JSON file, `-` for stdin, or a builtin name.
    pub poly: String,
    /// Half-degree of the Gram basis; defaults to ⌈deg/2⌉.
    #[arg(long)]
    pub d: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum TransportCommand {
    /// `A = l ⊗ f`; search the smallest grid time τ certifying every generator.
    RankOne(RankOneArgs),
    /// Graded operator on ℝⁿ, from the Gaussian ladder or a custom one.
    Graded(GradedArgs),
    /// Graded operator for polynomials nonnegative on [0, ∞)ⁿ.
    Orthant(OrthantArgs),
}

#[derive(Debug, Args)]
pub struct RankOneArgs {
    /// Generators: polynomial files (one or an array each) or builtin names.
    #[arg(long = "generators", required = true, num_args = 1..)]
    pub generators: Vec<String>,
    /// Functional file, or `gaussian-full` / `gaussian-orthant`.
    #[arg(long, default_value = "gaussian-full")]
    pub functional: String,
    /// Direction f; defaults to the identity-Gram interior point.
    #[arg(long)]
    pub direction: Option<String>,
    #[arg(long)]
    pub half_degree: Option<u32>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Sample polynomials; generated from --seed when absent.
    #[arg(long = "samples", num_args = 1..)]
    pub samples: Vec<String>,
    /// Number of generated samples.
    #[arg(long, default_value_t = 6)]
    pub sample_count: usize,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GradedArgs {
    #[command(flatten)]
    pub samples: SampleArgs,
    /// Directions f_d, one per level.
    #[arg(long = "directions", num_args = 1..)]
    pub directions: Vec<String>,
    /// Custom ladder: JSON array of `[d, functional]` pairs; needs --directions.
    #[arg(long)]
    pub ladder: Option<String>,
}

#[derive(Debug, Args)]
pub struct OrthantArgs {
    #[command(flatten)]
    pub samples: SampleArgs,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    pub scenario: String,
    /// Largest monomial degree checked by operator demos.
    #[arg(long, default_value_t = 8)]
    pub dquery: u32,
}

#[derive(Debug, Args)]
pub struct GcheckArgs {
    /// Operator descriptor file or builtin operator name.
    pub operator: String,
    /// Check every monomial of degree at most this.
    #[arg(long, default_value_t = 8)]
    pub dquery: u32,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    /// Functional file, or `gaussian-full` / `gaussian-orthant`.
    #[arg(long, default_value = "gaussian-full")]
    pub functional: String,
    pub poly: String,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub poly: String,
    /// Destination `.dat-s` file.
    pub path: String,
    #[arg(long)]
    pub d: Option<u32>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub artifact: String,
}

impl Command {
    pub fn inputs(&self) -> Vec<String> {
        match self {
            Command::Certify(a) => vec![a.poly.clone()],
            Command::Transport(TransportCommand::RankOne(a)) => {
                let mut v = a.generators.clone();
                v.push(a.functional.clone());
                v.extend(a.direction.clone());
                v
            }
            Command::Transport(TransportCommand::Graded(a)) => {
                let mut v = a.samples.samples.clone();
                v.extend(a.directions.iter().cloned());
                v.extend(a.ladder.clone());
                v
            }
            Command::Transport(TransportCommand::Orthant(a)) => a.samples.samples.clone(),
            Command::Demo(a) => vec![a.scenario.clone()],
            Command::Gcheck(a) => vec![a.operator.clone()],
            Command::Moments(a) => vec![a.functional.clone(), a.poly.clone()],
            Command::ExportSdpa(a) => vec![a.poly.clone()],
            Command::Verify(a) => vec![a.artifact.clone()],
        }
    }

    /// τ-search start when --t0 is not given.
    pub fn default_t0(&self) -> f64 {
        match self {
            Command::Demo(a) => scenario_config(&a.scenario).start,
            _ => 1.0,
        }
    }
}

pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<Report> {
    match cmd {
        Command::Certify(a) => certify(a, cfg),
        Command::Transport(t) => transport(t, cfg),
        Command::Demo(a) => demo(a, cfg),
        Command::Gcheck(a) => {
            let op = input::operator(&a.operator, cfg.d_max)?;
            let n = match a.n.or(op.n()) {
                Some(n) => n,
                None => bail!("cannot infer the number of variables of {}; pass --n", a.operator),
            };
            gcheck("gcheck", &op, n, a.dquery, cfg)
        }
        Command::Moments(a) => moments(a),
        Command::ExportSdpa(a) => export(a),
        Command::Verify(a) => verify(a, cfg),
    }
}

fn half_degree(p: &Polynomial) -> u32 {
    p.degree().finite().unwrap_or(0).div_ceil(2)
}

fn certify(a: &CertifyArgs, cfg: &RunConfig) -> Result<Report> {
    let p = input::polynomial(&a.poly)?;
    let d = a.d.unwrap_or_else(|| half_degree(&p));
    if !p.degree().at_most(2 * d) {
        bail!("polynomial of degree {} does not fit half-degree {d}", p.degree());
    }
    let outcome = certify_sos(&p, d, &cfg.certify());
    let (status, exit, text) = match &outcome {
        CertifyOutcome::Certified(c) => (
            "certified",
            Exit::Ok,
            format!(
                "min_eig {:e}, coeff_residual {:e}, {} squares\n",
                c.min_eig,
                c.coeff_residual,
                c.squares.len()
            ),
        ),
        CertifyOutcome::RefutedByPoint { witness, value } => {
            ("refuted", Exit::Refuted, format!("p({witness:?}) = {value:e}\n"))
        }
        CertifyOutcome::Undecided {
            iterations,
            min_eig,
            coeff_residual,
        } => (
            "undecided",
            Exit::Undecided,
            format!("{iterations} iterations, min_eig {min_eig:e}, coeff_residual {coeff_residual:e}\n"),
        ),
    };
    Ok(Report {
        command: "certify",
        status,
        exit,
        result: json!({ "polynomial": p, "d": d, "outcome": outcome }),
        text,
    })
}

fn error_kind(e: &TransportError) -> (&'static str, Exit) {
    match e {
        TransportError::SearchExhausted { .. } => ("search_exhausted", Exit::Exhausted),
        TransportError::NonPositiveDirection { .. } => ("non_positive_direction", Exit::Hypothesis),
        TransportError::HypothesisViolated { .. } => ("hypothesis_violated", Exit::Hypothesis),
        TransportError::SampleNotNonneg { .. } => ("sample_not_nonneg", Exit::Hypothesis),
        TransportError::AnnihilationViolated { .. } => ("annihilation_violated", Exit::Hypothesis),
        TransportError::LowerBlockRead { .. } => ("lower_block_read", Exit::Hypothesis),
        _ => ("malformed", Exit::Malformed),
    }
}

fn plan_report(command: &'static str, plan: Result<TransportPlan, TransportError>) -> Result<Report> {
    let plan = match plan {
        Ok(p) => p,
        Err(e) => {
            let (kind, exit) = error_kind(&e);
            if exit == Exit::Malformed {
                return Err(anyhow!(e));
            }
            return Ok(Report {
                command,
                status: kind,
                exit,
                result: json!({ "error": { "kind": kind, "message": e.to_string() } }),
                text: format!("{e}\n"),
            });
        }
    };
    let mut text = match &plan.kind {
        sos_transport::transport::PlanKind::RankOne { tau, next_grid_passes, .. } => {
            format!("tau {tau} (next grid value passes: {next_grid_passes})\n")
        }
        sos_transport::transport::PlanKind::Graded { ladder, levels, .. } => {
            let mut s = format!("{ladder:?} ladder\n");
            for l in levels {
                s += &format!("  d={} c={}", l.d, l.c);
                if let Some(t) = &l.tilde {
                    s += &format!(" c~={}", t.c);
                }
                s += "\n";
            }
            s
        }
    };
    text += &format!("{} certificates; {}\n", plan.certificates.len(), plan.scope);
    Ok(Report {
        command,
        status: "ok",
        exit: Exit::Ok,
        result: json!({ "plan": plan }),
        text,
    })
}

fn samples(a: &SampleArgs, domain: Domain, d_max: Option<u32>, seed: u64) -> Result<(usize, u32, Vec<Polynomial>)> {
    if a.samples.is_empty() {
        let (Some(n), Some(d)) = (a.n, d_max) else {
            bail!("without --samples both --n and --dmax are needed to generate samples");
        };
        return Ok((n, d, sample_pos(domain, n, 2 * d, a.sample_count, seed)));
    }
    let s = input::polynomials(&a.samples)?;
    let n = a.n.unwrap_or(s[0].n());
    if s.iter().any(|p| p.n() != n) {
        bail!("samples must all have {n} variables");
    }
    let d = d_max.unwrap_or_else(|| s.iter().map(half_degree).max().unwrap_or(0));
    Ok((n, d, s))
}

fn transport(t: &TransportCommand, cfg: &RunConfig) -> Result<Report> {
    match t {
        TransportCommand::RankOne(a) => {
            let gens = input::polynomials(&a.generators)?;
            let n = a.n.unwrap_or(gens[0].n());
            if gens.iter().any(|p| p.n() != n) {
                bail!("generators must all have {n} variables");
            }
            let d = a.half_degree.unwrap_or_else(|| gens.iter().map(half_degree).max().unwrap_or(0));
            let l = input::functional(&a.functional, Some(n))?;
            let f = match &a.direction {
                Some(source) => input::polynomial(source)?,
                None => interior_point(n, d),
            };
            let plan = build_rank_one(l, f).and_then(|op| find_tau(&op, &gens, d, &cfg.tau_search()));
            plan_report("transport", plan)
        }
        TransportCommand::Graded(a) => {
            let (n, d, s) = samples(&a.samples, Domain::Full, cfg.d_max, cfg.seed)?;
            let fs = if a.directions.is_empty() {
                None
            } else {
                Some(input::polynomials(&a.directions)?)
            };
            let plan = match &a.ladder {
                Some(source) => {
                    let ladder: Vec<(u32, LinearFunctional)> = input::read_json(source)?;
                    let Some(fs) = fs else {
                        bail!("a custom ladder needs --directions");
                    };
                    build_graded_custom(&ladder, &fs, &s, &cfg.constant_search())
                }
                None => build_graded_full(n, d, &s, fs.as_deref(), &cfg.constant_search()),
            };
            plan_report("transport", plan)
        }
        TransportCommand::Orthant(a) => {
            let (n, d, s) = samples(&a.samples, Domain::Orthant, cfg.d_max, cfg.seed)?;
            plan_report("transport", build_orthant(n, d, &s, &cfg.constant_search()))
        }
    }
}

fn demo(a: &DemoArgs, cfg: &RunConfig) -> Result<Report> {
    if SCENARIO_NAMES.contains(&a.scenario.as_str()) {
        let search = if a.scenario == "motzkin" {
            cfg.tau_search()
        } else {
            cfg.constant_search()
        };
        let plan = scenario(&a.scenario, &search).expect("listed scenario");
        return plan_report("demo", plan);
    }
    let name = builtin::canonical_operator_name(&a.scenario);
    if builtin::OPERATOR_NAMES.contains(&name) {
        let op = builtin::operator(name, cfg.d_max)?;
        return gcheck("demo", &op, 1, a.dquery, cfg);
    }
    bail!(
        "unknown scenario {} (scenarios: {}; operators: {})",
        a.scenario,
        SCENARIO_NAMES.join(", "),
        builtin::OPERATOR_NAMES.join(", ")
    )
}

fn gcheck(command: &'static str, op: &OperatorExpr, n: usize, d_query: u32, cfg: &RunConfig) -> Result<Report> {
    let verdict = g_check(op, n, d_query, cfg.d_max, cfg.k_max)?;
    let (status, exit, text) = match &verdict.membership {
        Membership::MemberWithinBounds => (
            "member_within_bounds",
            Exit::Ok,
            format!(
                "{} monomials of degree <= {d_query} stabilize, largest dimension {}\n",
                verdict.reports.len(),
                verdict.max_dim()
            ),
        ),
        Membership::NotMemberWithinBounds { witness } => {
            let trace: Vec<String> = verdict
                .witness()
                .map(|r| r.degree_trace.iter().map(|d| d.to_string()).collect())
                .unwrap_or_default();
            (
                "not_member_within_bounds",
                Exit::Refuted,
                format!("x^{:?} does not stabilize; degrees {}\n", witness.exponents(), trace.join(" ")),
            )
        }
    };
    let descriptor: OperatorDescriptor = op.clone().into();
    Ok(Report {
        command,
        status,
        exit,
        result: json!({ "operator": descriptor, "verdict": verdict }),
        text,
    })
}

fn moments(a: &MomentsArgs) -> Result<Report> {
    let p = input::polynomial(&a.poly)?;
    let l = input::functional(&a.functional, Some(p.n()))?;
    let value = l.apply(&p)?;
    Ok(Report {
        command: "moments",
        status: "ok",
        exit: Exit::Ok,
        result: json!({ "functional": l, "polynomial": p, "value": value }),
        text: format!("{value}\n"),
    })
}

fn export(a: &ExportArgs) -> Result<Report> {
    let p = input::polynomial(&a.poly)?;
    let d = a.d.unwrap_or_else(|| half_degree(&p));
    let prob = build_gram_problem(&p, d)?;
    export_sdpa(&prob, std::path::Path::new(&a.path)).with_context(|| format!("writing {}", a.path))?;
    Ok(Report {
        command: "export-sdpa",
        status: "ok",
        exit: Exit::Ok,
        result: json!({
            "path": a.path,
            "d": d,
            "block_size": prob.size(),
            "constraints": prob.num_constraints(),
        }),
        text: format!(
            "{}: block {} with {} constraints\n",
            a.path,
            prob.size(),
            prob.num_constraints()
        ),
    })
}

fn verified(ok: bool, text: String) -> Report {
    Report {
        command: "verify",
        status: if ok { "verified" } else { "failed" },
        exit: if ok { Exit::Ok } else { Exit::Refuted },
        result: json!({ "verified": ok, "detail": text }),
        text: text + "\n",
    }
}

fn verify(a: &VerifyArgs, cfg: &RunConfig) -> Result<Report> {
    let v: Value = input::read_json(&a.artifact)?;
    let result = v.get("result").unwrap_or(&v);
    if let Some(plan) = result.get("plan") {
        return verify_plan_value(plan, cfg);
    }
    if result.get("kind").is_some() && result.get("operator").is_some() && result.get("certificates").is_some() {
        return verify_plan_value(result, cfg);
    }
    if let Some(outcome) = result.get("outcome") {
        let p: Polynomial = serde_json::from_value(result.get("polynomial").cloned().unwrap_or(Value::Null))
            .context("certify report without a polynomial")?;
        let outcome: CertifyOutcome = serde_json::from_value(outcome.clone()).context("parsing outcome")?;
        return Ok(match outcome {
            CertifyOutcome::Certified(c) => {
                let check = check_certificate(&p, &c, cfg.eig_tol, cfg.coeff_tol);
                verified(
                    check.passed(),
                    format!(
                        "certificate: min_eig {:e}, coeff_residual {:e}",
                        check.min_eig, check.coeff_residual
                    ),
                )
            }
            CertifyOutcome::RefutedByPoint { witness, .. } => {
                let value = p.evaluate(&witness)?;
                verified(value < 0.0, format!("witness value {value:e}"))
            }
            CertifyOutcome::Undecided { .. } => Report {
                command: "verify",
                status: "undecided",
                exit: Exit::Undecided,
                result: json!({ "verified": false, "detail": "undecided outcome carries no claim" }),
                text: "undecided outcome carries no claim\n".into(),
            },
        });
    }
    if let (Some(op), Some(verdict)) = (result.get("operator"), result.get("verdict")) {
        let op: OperatorDescriptor = serde_json::from_value(op.clone()).context("parsing operator")?;
        let op = OperatorExpr::try_from(op)?;
        let verdict: GVerdict = serde_json::from_value(verdict.clone()).context("parsing verdict")?;
        return verify_verdict(&op, &verdict);
    }
    bail!("{}: not a certify, transport or gcheck report", a.artifact)
}

fn verify_plan_value(plan: &Value, cfg: &RunConfig) -> Result<Report> {
    let plan: TransportPlan = serde_json::from_value(plan.clone()).context("parsing plan")?;
    let check = verify_plan(&plan, cfg.eig_tol, cfg.coeff_tol)?;
    Ok(verified(
        check.passed(),
        format!(
            "plan: certificates valid {}, transport mismatch {:e}, blocks invariant {}, constants positive {}, degrees preserved {}",
            check.certificates_valid,
            check.transport_mismatch,
            check.blocks_invariant,
            check.constants_positive,
            check.degrees_preserved
        ),
    ))
}

fn verify_verdict(op: &OperatorExpr, verdict: &GVerdict) -> Result<Report> {
    for r in &verdict.reports {
        match &r.outcome {
            SubspaceOutcome::Stabilized { basis, .. } => {
                if !basis.is_empty() && !check_invariance(op, basis)? {
                    return Ok(verified(false, format!("span for x^{:?} is not invariant", r.alpha.exponents())));
                }
            }
            SubspaceOutcome::BlowUp { .. } => {
                let bound = verdict.d_max.unwrap_or_else(|| default_degree_bound(&r.alpha));
                let again = invariant_subspace(op, &r.alpha, bound, verdict.k_max)?;
                if again.is_stabilized() {
                    return Ok(verified(false, format!("x^{:?} stabilizes on rerun", r.alpha.exponents())));
                }
            }
        }
    }
    Ok(verified(true, format!("{} subspace reports confirmed", verdict.reports.len())))
}
