//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use entrodist_core::chain::{
    generate_multipartite_chain, pretty_print, synthesize_chain, verify_chain, ChainVerdict,
    DerivationChain,
};
use entrodist_core::classical::{classical_max_violation, CertifyOptions};
use entrodist_core::dist::{variables, AxiomReport, DistanceKind, JointDistribution, ProductTerm};
use entrodist_core::inequality::{
    canonical_scenario, evaluate, evaluate_pm_products, mermin_scenario, multipartite_scenario,
    parse_inequality, pm_scenario, tripartite_max_scenario, CanonicalDistribution, EvalOptions,
    EvaluationReport,
};
use entrodist_core::optimize::{run as optimize_run, OptimizerSettings};
use entrodist_core::qsim::{expectation, product_operator, ObservableSpec};
use entrodist_core::scenario::{Binding, PartySettingLayout, Scenario};
use entrodist_core::EntropicInequality;

use crate::report::{csv_row, emit, format_f64, input_digest, to_json, Envelope, TOOL, VERSION};
use crate::{CliError, Common, Format};

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Input(format!("invalid scenario {}: {e}", path.display())))
}

fn envelope<T: Serialize>(
    common: &Common,
    command: String,
    digest: String,
    report: T,
) -> Envelope<T> {
    Envelope {
        tool: TOOL,
        version: VERSION,
        command,
        seed: common.seed,
        tolerance: common.tolerance,
        input_digest: digest,
        report,
    }
}

fn eval_options(common: &Common) -> EvalOptions {
    EvalOptions { tolerance: common.tolerance, seed: Some(common.seed) }
}

// ---------------------------------------------------------------- eval ----

#[derive(Serialize)]
#[serde(untagged)]
enum EvalReport {
    Inequality(EvaluationReport),
    Delta(DeltaReport),
}

#[derive(Serialize)]
struct DeltaReport {
    scenario: String,
    binding: String,
    term: String,
    kind: DistanceKind,
    value: f64,
}

pub fn eval(
    common: &Common,
    scenario_path: &Path,
    inequality: Option<&str>,
    delta: Option<&str>,
    kind: DistanceKind,
) -> Result<(), CliError> {
    let scenario = load_scenario(scenario_path)?;
    let digest = input_digest(Some(scenario_path), "")?;
    let (report, summary) = match (inequality, delta) {
        (Some(name), None) => {
            let rep = if name == "pm-products" {
                match &scenario.binding {
                    Binding::Distribution(d) => evaluate_pm_products(d, eval_options(common))?,
                    Binding::Quantum(_) => {
                        return Err(CliError::Input(
                            "pm-products evaluation needs a distribution binding over q1..q6"
                                .into(),
                        ))
                    }
                }
            } else {
                let ineq = parse_inequality(name)?;
                evaluate(&ineq, &scenario, eval_options(common))?
            };
            let summary = format!(
                "violation = {:.9} (lhs {:.9}, rhs {:.9})",
                rep.violation, rep.lhs, rep.rhs
            );
            (EvalReport::Inequality(rep), summary)
        }
        (None, Some(labels)) => {
            let rep = delta_report(&scenario, labels, kind)?;
            let summary = format!("delta({}) = {:.9} [{}]", rep.term, rep.value, rep.kind);
            (EvalReport::Delta(rep), summary)
        }
        _ => {
            return Err(CliError::Input(
                "pass exactly one of --inequality NAME or --delta LABELS".into(),
            ))
        }
    };
    let env = envelope(common, format!("eval {}", scenario_path.display()), digest, report);
    emit(common.output.as_ref(), &to_json(&env)?, &summary)
}

fn delta_report(
    scenario: &Scenario,
    labels: &str,
    kind: DistanceKind,
) -> Result<DeltaReport, CliError> {
    let parts: Vec<&str> = labels.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if parts.is_empty() {
        return Err(CliError::Input("--delta needs a comma-separated label list".into()));
    }
    let term_label = parts.join("·");
    let value = match &scenario.binding {
        Binding::Distribution(dist) => {
            let term = ProductTerm::from_labels(dist.variables(), &parts)?;
            dist.delta(term, kind)?
        }
        Binding::Quantum(q) => {
            let qubits = q.state.qubits()?;
            let state = q.state.realize()?;
            let matrices = parts
                .iter()
                .map(|label| {
                    let spec = q
                        .observables
                        .get(*label)
                        .ok_or_else(|| CliError::Input(format!("unbound variable {label:?}")))?;
                    Ok(entrodist_core::qsim::observable_matrix(spec, qubits)?)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let product = product_operator(&matrices)?;
            let e = expectation(&state, &product.matrix)?;
            match kind {
                DistanceKind::Entropic => {
                    entrodist_core::binary_entropy(((1.0 + e) / 2.0).clamp(0.0, 1.0))?
                }
                DistanceKind::Covariance => 1.0 - e,
            }
        }
    };
    Ok(DeltaReport {
        scenario: scenario.name.clone(),
        binding: scenario.binding.kind().to_string(),
        term: term_label,
        kind,
        value,
    })
}

// --------------------------------------------------------------- sweep ----

pub enum SweepParameter {
    Lambda,
    Parties,
    Angle(String),
}

impl SweepParameter {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "lambda" => Ok(SweepParameter::Lambda),
            "n" => Ok(SweepParameter::Parties),
            other => match other.strip_prefix("angle:") {
                Some(label) if !label.is_empty() => Ok(SweepParameter::Angle(label.to_string())),
                _ => Err(CliError::Input(format!(
                    "unknown sweep parameter {other:?}; expected lambda, n, or angle:<label>"
                ))),
            },
        }
    }

    fn column(&self) -> String {
        match self {
            SweepParameter::Lambda => "lambda".into(),
            SweepParameter::Parties => "n".into(),
            SweepParameter::Angle(label) => format!("angle:{label}"),
        }
    }
}

#[derive(Serialize)]
struct SweepRow {
    parameter: f64,
    lhs: f64,
    rhs: f64,
    violation: f64,
}

fn linspace(from: f64, to: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..steps)
            .map(|k| from + (to - from) * k as f64 / (steps - 1) as f64)
            .collect(),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn sweep(
    common: &Common,
    parameter: &SweepParameter,
    scenario_path: Option<&Path>,
    inequality: Option<&str>,
    from: f64,
    to: f64,
    steps: usize,
) -> Result<(), CliError> {
    let opts = eval_options(common);
    let mut rows: Vec<SweepRow> = Vec::new();
    match parameter {
        SweepParameter::Lambda => {
            for lambda in linspace(from, to, steps) {
                let rep = entrodist_core::pm_mixing_violation(lambda)?;
                rows.push(SweepRow {
                    parameter: lambda,
                    lhs: rep.lhs,
                    rhs: rep.rhs,
                    violation: rep.violation,
                });
            }
        }
        SweepParameter::Parties => {
            let (lo, hi) = (from.round() as i64, to.round() as i64);
            for n in lo..=hi {
                if n % 2 != 0 || n < 4 {
                    continue;
                }
                let n = n as usize;
                let ineq = entrodist_core::build_multipartite_entropic(n)?;
                let scenario = multipartite_scenario(n)?;
                let rep = evaluate(&ineq, &scenario, opts)?;
                rows.push(SweepRow {
                    parameter: n as f64,
                    lhs: rep.lhs,
                    rhs: rep.rhs,
                    violation: rep.violation,
                });
            }
        }
        SweepParameter::Angle(label) => {
            let path = scenario_path.ok_or_else(|| {
                CliError::Input("angle sweeps need --scenario".into())
            })?;
            let name = inequality
                .ok_or_else(|| CliError::Input("angle sweeps need --inequality".into()))?;
            let ineq = parse_inequality(name)?;
            let template = load_scenario(path)?;
            for angle in linspace(from, to, steps) {
                let mut scenario = template.clone();
                let Binding::Quantum(q) = &mut scenario.binding else {
                    return Err(CliError::Input(
                        "angle sweeps need a quantum scenario binding".into(),
                    ));
                };
                match q.observables.get_mut(label) {
                    Some(ObservableSpec::Xy { angle: a, .. }) => *a = angle,
                    Some(_) => {
                        return Err(CliError::Input(format!(
                            "variable {label:?} is not an xy_angle observable"
                        )))
                    }
                    None => {
                        return Err(CliError::Input(format!("unbound variable {label:?}")))
                    }
                }
                let rep = evaluate(&ineq, &scenario, opts)?;
                rows.push(SweepRow {
                    parameter: angle,
                    lhs: rep.lhs,
                    rhs: rep.rhs,
                    violation: rep.violation,
                });
            }
        }
    }

    let digest_args = format!(
        "sweep parameter={} from={from} to={to} steps={steps} seed={} inequality={}",
        parameter.column(),
        common.seed,
        inequality.unwrap_or("-")
    );
    let digest = input_digest(scenario_path, &digest_args)?;
    let summary = format!("{} rows", rows.len());
    match common.format {
        Format::Csv => {
            let mut body = csv_row(&[
                parameter.column(),
                "lhs".into(),
                "rhs".into(),
                "violation".into(),
            ]);
            for row in &rows {
                body.push_str(&csv_row(&[
                    row.parameter.to_string(),
                    format_f64(row.lhs),
                    format_f64(row.rhs),
                    format_f64(row.violation),
                ]));
            }
            emit(common.output.as_ref(), &body, &summary)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct SweepReport {
                parameter: String,
                rows: Vec<SweepRow>,
            }
            let env = envelope(
                common,
                digest_args.clone(),
                digest,
                SweepReport { parameter: parameter.column(), rows },
            );
            emit(common.output.as_ref(), &to_json(&env)?, &summary)
        }
    }
}

// ------------------------------------------------------------ optimize ----

fn ghz_layout_for(name: &str) -> Result<(EntropicInequality, PartySettingLayout), CliError> {
    let ineq = parse_inequality(name)?;
    let layout = match name {
        "tripartite" | "mermin" => PartySettingLayout::tripartite(),
        other if other.starts_with("multipartite:") => {
            PartySettingLayout::multipartite(ineq.variables().len() / 3)
        }
        other => {
            return Err(CliError::Input(format!(
                "optimizer supports GHZ scenarios (tripartite, mermin, multipartite:N), not {other:?}"
            )))
        }
    };
    Ok((ineq, layout))
}

#[allow(clippy::too_many_arguments)]
pub fn optimize(
    common: &Common,
    inequality: &str,
    grid: usize,
    untied: bool,
    iters: usize,
    shrink: f64,
    convergence_tol: f64,
) -> Result<(), CliError> {
    let (ineq, layout) = ghz_layout_for(inequality)?;
    let settings = OptimizerSettings {
        grid_points_per_angle: grid,
        max_refinement_iters: iters,
        step_shrink: shrink,
        convergence_tol,
        seed: common.seed,
        tied: !untied,
        jobs: common.jobs,
    };
    let report = optimize_run(&ineq, &layout, &settings)?;
    if report.objective < report.grid_objective {
        return Err(CliError::Invariant(format!(
            "refinement regressed below the grid value: {} < {}",
            report.objective, report.grid_objective
        )));
    }
    let digest_args = format!(
        "optimize inequality={inequality} grid={grid} untied={untied} iters={iters} shrink={shrink} tol={convergence_tol} seed={}",
        common.seed
    );
    let digest = input_digest(None, &digest_args)?;
    let summary = format!(
        "objective = {:.12} (grid {:.6}, {} refine sweeps)",
        report.objective, report.grid_objective, report.refine_iterations
    );
    let env = envelope(common, digest_args.clone(), digest, report);
    emit(common.output.as_ref(), &to_json(&env)?, &summary)
}

// ------------------------------------------------------------- certify ----

pub fn certify(
    common: &Common,
    inequality: &str,
    mixtures: usize,
    vertex_only: bool,
) -> Result<(), CliError> {
    let ineq = parse_inequality(inequality)?;
    let report = classical_max_violation(
        &ineq,
        CertifyOptions {
            vertex_only,
            mixture_samples: mixtures,
            seed: common.seed,
            jobs: common.jobs,
        },
    )?;
    let breached = report.max_violation > common.tolerance.max(1e-12);
    let digest_args = format!(
        "certify inequality={inequality} mixtures={mixtures} vertex_only={vertex_only} seed={}",
        common.seed
    );
    let digest = input_digest(None, &digest_args)?;
    let summary = format!(
        "max violation = {:.3e} over {} vertices and {} mixtures",
        report.max_violation, report.vertices, report.mixtures
    );
    let env = envelope(common, digest_args.clone(), digest, report);
    emit(common.output.as_ref(), &to_json(&env)?, &summary)?;
    if breached {
        return Err(CliError::Invariant(format!(
            "classical bound breached: max violation {summary}"
        )));
    }
    Ok(())
}

// -------------------------------------------------------------- axioms ----

#[derive(Serialize)]
struct AxiomsReport {
    distributions: usize,
    trials_per_distribution: usize,
    kinds: Vec<AxiomReport>,
    worst_slack: f64,
    passed: bool,
}

pub fn axioms(
    common: &Common,
    scenario_path: Option<&Path>,
    dists: usize,
    vars: usize,
    trials: usize,
    kind: Option<DistanceKind>,
) -> Result<(), CliError> {
    use rand_chacha::rand_core::SeedableRng;
    let kinds: Vec<DistanceKind> = match kind {
        Some(k) => vec![k],
        None => vec![DistanceKind::Entropic, DistanceKind::Covariance],
    };
    let mut reports: Vec<AxiomReport> = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0usize;
    match scenario_path {
        Some(path) => {
            let scenario = load_scenario(path)?;
            let Binding::Distribution(dist) = &scenario.binding else {
                return Err(CliError::Input("axiom checks need a distribution binding".into()));
            };
            count = 1;
            for &k in &kinds {
                let r = dist.check_axioms(k, trials, common.seed)?;
                worst = worst.max(r.worst_slack);
                reports.push(r);
            }
        }
        None => {
            if vars < 3 {
                return Err(CliError::Input("--variables must be at least 3".into()));
            }
            let labels: Vec<String> = (0..vars).map(|i| format!("V{i}")).collect();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(common.seed);
            for i in 0..dists {
                let d = JointDistribution::sample_dirichlet(variables(&labels), &mut rng)?;
                count += 1;
                for &k in &kinds {
                    let r = d.check_axioms(k, trials, common.seed.wrapping_add(i as u64))?;
                    worst = worst.max(r.worst_slack);
                    if i == 0 {
                        reports.push(r);
                    }
                }
            }
        }
    }
    let passed = worst <= 1e-12;
    let report = AxiomsReport {
        distributions: count,
        trials_per_distribution: trials,
        kinds: reports,
        worst_slack: worst,
        passed,
    };
    let digest_args = format!(
        "axioms dists={dists} variables={vars} trials={trials} seed={}",
        common.seed
    );
    let digest = input_digest(scenario_path, &digest_args)?;
    let summary = format!("worst triangle slack = {worst:.3e} over {count} distributions");
    let env = envelope(common, digest_args.clone(), digest, report);
    emit(common.output.as_ref(), &to_json(&env)?, &summary)?;
    if !passed {
        return Err(CliError::Invariant(format!("distance axioms breached: {summary}")));
    }
    Ok(())
}

// -------------------------------------------------------------- derive ----

#[derive(Serialize)]
struct DeriveReport {
    found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    chain: Option<DerivationChain>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<ChainVerdict>,
    pretty: String,
}

fn parse_term_list(s: &str) -> Vec<Vec<String>> {
    s.split(';')
        .map(|term| {
            term.split(',')
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect()
        })
        .filter(|t: &Vec<String>| !t.is_empty())
        .collect()
}

pub fn derive(
    common: &Common,
    target: Option<&str>,
    allowed: Option<&str>,
    multipartite: Option<usize>,
    verify_path: Option<&Path>,
) -> Result<(), CliError> {
    let (report, digest_source, command) = match (target, allowed, multipartite, verify_path) {
        (Some(target), Some(allowed), None, None) => {
            let target_labels: Vec<String> = parse_term_list(target)
                .into_iter()
                .next()
                .ok_or_else(|| CliError::Input("--target needs at least one label".into()))?;
            let allowed_terms = parse_term_list(allowed);
            if allowed_terms.is_empty() {
                return Err(CliError::Input("--allowed needs at least one term".into()));
            }
            // Variables in order of first appearance.
            let mut labels: Vec<String> = Vec::new();
            for l in target_labels.iter().chain(allowed_terms.iter().flatten()) {
                if !labels.contains(l) {
                    labels.push(l.clone());
                }
            }
            let vars = variables(&labels);
            let target_term = ProductTerm::from_labels(&vars, &target_labels)?;
            let allowed: Vec<ProductTerm> = allowed_terms
                .iter()
                .map(|t| ProductTerm::from_labels(&vars, t))
                .collect::<Result<_, _>>()?;
            let chain = synthesize_chain(&vars, target_term, &allowed);
            let report = match chain {
                Some(chain) => {
                    let verdict = verify_chain(&chain);
                    DeriveReport {
                        found: true,
                        pretty: pretty_print(&chain),
                        chain: Some(chain),
                        verdict: Some(verdict),
                    }
                }
                None => DeriveReport {
                    found: false,
                    chain: None,
                    verdict: None,
                    pretty: "no parity decomposition exists for the target".into(),
                },
            };
            let args = format!("derive target={target} allowed={allowed:?}");
            (report, None, args)
        }
        (None, None, Some(n), None) => {
            let chain = generate_multipartite_chain(n).map_err(|e| CliError::Input(e.to_string()))?;
            let verdict = verify_chain(&chain);
            if !verdict.is_accepted() {
                return Err(CliError::Invariant(format!(
                    "generated multipartite chain rejected: {verdict:?}"
                )));
            }
            let report = DeriveReport {
                found: true,
                pretty: pretty_print(&chain),
                chain: Some(chain),
                verdict: Some(verdict),
            };
            (report, None, format!("derive multipartite={n}"))
        }
        (None, None, None, Some(path)) => {
            let bytes = fs::read(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            // Accept a bare chain or a previously emitted derive report.
            let chain: DerivationChain = serde_json::from_slice(&bytes).or_else(|primary| {
                serde_json::from_slice::<serde_json::Value>(&bytes)
                    .ok()
                    .and_then(|v| v.pointer("/report/chain").cloned())
                    .and_then(|c| serde_json::from_value(c).ok())
                    .ok_or_else(|| {
                        CliError::Input(format!("invalid chain {}: {primary}", path.display()))
                    })
            })?;
            let verdict = verify_chain(&chain);
            let report = DeriveReport {
                found: verdict.is_accepted(),
                pretty: pretty_print(&chain),
                chain: Some(chain),
                verdict: Some(verdict),
            };
            (report, Some(path), format!("derive verify={}", path.display()))
        }
        _ => {
            return Err(CliError::Input(
                "pass either --target with --allowed, or --multipartite N, or --verify FILE".into(),
            ))
        }
    };
    let digest = input_digest(digest_source, &command)?;
    let summary = report.pretty.trim_end().to_string();
    let env = envelope(common, command, digest, report);
    emit(common.output.as_ref(), &to_json(&env)?, &summary)
}

// ---------------------------------------------------- export-scenarios ----

/// The bundled scenario corpus (also used as integration-test fixtures).
pub fn bundled_scenarios() -> Vec<(String, Scenario)> {
    let mut out: Vec<(String, Scenario)> = vec![
        ("tripartite_max".into(), tripartite_max_scenario()),
        ("mermin_max".into(), mermin_scenario()),
        ("pm_square".into(), pm_scenario()),
        ("pm_mix_half".into(), pm_mix_half_scenario()),
    ];
    for n in [4usize, 6, 8, 10] {
        out.push((
            format!("multipartite_n{n}"),
            multipartite_scenario(n).expect("even party count"),
        ));
    }
    let canonical_files = [
        ("classical_fig1a", CanonicalDistribution::Fig1aClassical),
        ("fig1b_anticorrelated", CanonicalDistribution::Fig1bAnticorrelated),
        ("fig1b_uncorrelated", CanonicalDistribution::Fig1bUncorrelated),
        ("fig2a_classical", CanonicalDistribution::Fig2aClassical),
        ("fig2b_ghz_paradox", CanonicalDistribution::Fig2bGhzParadox),
        ("fig2b_uncorrelated", CanonicalDistribution::Fig2bUncorrelated),
        ("pm_products_quantum", CanonicalDistribution::PmQuantumProducts),
        ("pm_products_classical", CanonicalDistribution::PmClassicalProducts),
    ];
    for (file, which) in canonical_files {
        out.push((file.to_string(), canonical_scenario(which)));
    }
    out
}

fn pm_mix_half_scenario() -> Scenario {
    let quantum =
        entrodist_core::canonical_distribution(CanonicalDistribution::PmQuantumProducts);
    let classical =
        entrodist_core::canonical_distribution(CanonicalDistribution::PmClassicalProducts);
    let mixed = JointDistribution::mix(&quantum, &classical, 0.5).expect("same variables");
    let labels: Vec<String> = mixed.variables().iter().map(|v| v.label.clone()).collect();
    let mut settings = BTreeMap::new();
    settings.insert("products".to_string(), labels);
    Scenario {
        name: "pm-mix-half".into(),
        parties: vec!["products".into()],
        settings,
        binding: Binding::Distribution(mixed),
    }
}

pub fn export_scenarios(common: &Common, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let mut written: Vec<String> = Vec::new();
    for (name, scenario) in bundled_scenarios() {
        let path = dir.join(format!("{name}.json"));
        let mut body = serde_json::to_string_pretty(&scenario)
            .map_err(|e| CliError::Invariant(format!("serialization failed: {e}")))?;
        body.push('\n');
        fs::write(&path, body)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
        written.push(path.display().to_string());
    }
    #[derive(Serialize)]
    struct ExportReport {
        written: Vec<String>,
    }
    let digest = input_digest(None, "export-scenarios")?;
    let summary = format!("wrote {} scenario files to {}", written.len(), dir.display());
    let env = envelope(common, "export-scenarios".into(), digest, ExportReport { written });
    emit(common.output.as_ref(), &to_json(&env)?, &summary)
}
