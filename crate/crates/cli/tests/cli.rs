//! End-to-end tests driving the binary on the bundled scenario corpus.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn scenario(name: &str) -> String {
    workspace_root().join("scenarios").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entrodist"))
        .args(args)
        .current_dir(workspace_root())
        .output()
        .expect("binary runs")
}

fn run_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

// ------------------------------------------------------------------------
// Minimal JSON Schema (draft-07 subset) validator covering exactly the
// constructs used by the shipped schemas: type, enum, required, properties,
// additionalProperties, items, minItems, maxItems, minimum, oneOf, $ref.

struct Schemas {
    dir: PathBuf,
    cache: HashMap<String, Value>,
}

impl Schemas {
    fn new() -> Self {
        Self { dir: workspace_root().join("schemas"), cache: HashMap::new() }
    }

    fn load(&mut self, file: &str) -> Value {
        if let Some(v) = self.cache.get(file) {
            return v.clone();
        }
        let text = std::fs::read_to_string(self.dir.join(file))
            .unwrap_or_else(|e| panic!("schema {file}: {e}"));
        let v: Value = serde_json::from_str(&text).unwrap();
        self.cache.insert(file.to_string(), v.clone());
        v
    }

    fn validate_file(&mut self, file: &str, instance: &Value) -> Result<(), String> {
        let doc = self.load(file);
        self.validate(&doc.clone(), &doc, instance, file)
    }

    fn validate(
        &mut self,
        doc: &Value,
        schema: &Value,
        instance: &Value,
        at: &str,
    ) -> Result<(), String> {
        if let Some(reference) = schema.get("$ref").and_then(Value::as_str) {
            return if let Some(pointer) = reference.strip_prefix("#") {
                let target = doc
                    .pointer(pointer)
                    .ok_or_else(|| format!("{at}: dangling $ref {reference}"))?
                    .clone();
                self.validate(doc, &target, instance, at)
            } else {
                self.validate_file(reference, instance)
            };
        }
        if let Some(one_of) = schema.get("oneOf").and_then(Value::as_array) {
            let matches = one_of
                .iter()
                .filter(|s| self.validate(doc, s, instance, at).is_ok())
                .count();
            if matches != 1 {
                return Err(format!("{at}: {matches} oneOf branches matched"));
            }
            return Ok(());
        }
        if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
            if !allowed.contains(instance) {
                return Err(format!("{at}: {instance} not in enum"));
            }
        }
        if let Some(ty) = schema.get("type").and_then(Value::as_str) {
            let ok = match ty {
                "object" => instance.is_object(),
                "array" => instance.is_array(),
                "string" => instance.is_string(),
                "number" => instance.is_number(),
                "integer" => instance.is_i64() || instance.is_u64(),
                "boolean" => instance.is_boolean(),
                "null" => instance.is_null(),
                other => return Err(format!("{at}: unsupported type {other}")),
            };
            if !ok {
                return Err(format!("{at}: expected {ty}, got {instance}"));
            }
        }
        if let Some(min) = schema.get("minimum").and_then(Value::as_f64) {
            if instance.as_f64().is_some_and(|x| x < min) {
                return Err(format!("{at}: below minimum {min}"));
            }
        }
        if let Some(obj) = instance.as_object() {
            if let Some(required) = schema.get("required").and_then(Value::as_array) {
                for key in required.iter().filter_map(Value::as_str) {
                    if !obj.contains_key(key) {
                        return Err(format!("{at}: missing required {key}"));
                    }
                }
            }
            let props = schema.get("properties").and_then(Value::as_object);
            for (key, value) in obj {
                if let Some(sub) = props.and_then(|p| p.get(key)) {
                    self.validate(doc, sub, value, &format!("{at}.{key}"))?;
                } else {
                    match schema.get("additionalProperties") {
                        Some(Value::Bool(false)) => {
                            return Err(format!("{at}: unexpected property {key}"))
                        }
                        Some(sub) if sub.is_object() => {
                            self.validate(doc, sub, value, &format!("{at}.{key}"))?
                        }
                        _ => {}
                    }
                }
            }
        }
        if let Some(arr) = instance.as_array() {
            if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
                if (arr.len() as u64) < min {
                    return Err(format!("{at}: fewer than {min} items"));
                }
            }
            if let Some(max) = schema.get("maxItems").and_then(Value::as_u64) {
                if (arr.len() as u64) > max {
                    return Err(format!("{at}: more than {max} items"));
                }
            }
            if let Some(items) = schema.get("items") {
                for (i, item) in arr.iter().enumerate() {
                    self.validate(doc, items, item, &format!("{at}[{i}]"))?;
                }
            }
        }
        Ok(())
    }
}

fn assert_valid_report(report: &Value) {
    Schemas::new()
        .validate_file("report.schema.json", report)
        .unwrap_or_else(|e| panic!("report failed schema validation: {e}\n{report:#}"));
}

// ------------------------------------------------------------------- tests

#[test]
fn eval_tripartite_scenario_reaches_unit_violation() {
    let report = run_json(&[
        "eval",
        "--scenario",
        &scenario("tripartite_max.json"),
        "--inequality",
        "tripartite",
    ]);
    assert_valid_report(&report);
    let violation = report["report"]["violation"].as_f64().unwrap();
    assert!((violation - 1.0).abs() < 1e-9);
    assert_eq!(report["report"]["binding"], "quantum");
}

#[test]
fn eval_pm_mix_half_reaches_unit_violation() {
    let report = run_json(&[
        "eval",
        "--scenario",
        &scenario("pm_mix_half.json"),
        "--inequality",
        "pm-products",
    ]);
    assert_valid_report(&report);
    assert_eq!(report["report"]["violation"].as_f64().unwrap(), 1.0);
    assert_eq!(report["report"]["lhs"].as_f64().unwrap(), 1.0);
    assert_eq!(report["report"]["rhs"].as_f64().unwrap(), 0.0);
}

#[test]
fn eval_delta_on_classical_figure_is_zero() {
    let report = run_json(&[
        "eval",
        "--scenario",
        &scenario("classical_fig1a.json"),
        "--delta",
        "A,B",
    ]);
    assert_valid_report(&report);
    assert_eq!(report["report"]["value"].as_f64().unwrap(), 0.0);
}

#[test]
fn sweep_lambda_peaks_at_one_half() {
    let out = run(&["sweep", "--parameter", "lambda", "--steps", "11"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.split("\r\n").filter(|l| !l.is_empty()).collect();
    assert_eq!(lines[0], "lambda,lhs,rhs,violation");
    assert_eq!(lines.len(), 12);
    let mut best = (0.0f64, -1.0f64);
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        let lambda: f64 = cols[0].parse().unwrap();
        let violation: f64 = cols[3].parse().unwrap();
        if violation > best.1 {
            best = (lambda, violation);
        }
    }
    assert_eq!(best.0, 0.5);
    assert_eq!(best.1, 1.0);
}

#[test]
fn sweep_empty_range_emits_header_only() {
    let out = run(&["sweep", "--parameter", "lambda", "--steps", "0"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "lambda,lhs,rhs,violation\r\n");
}

#[test]
fn sweep_json_format_validates() {
    let report = run_json(&[
        "sweep",
        "--parameter",
        "n",
        "--from",
        "4",
        "--to",
        "8",
        "--format",
        "json",
    ]);
    assert_valid_report(&report);
    let rows = report["report"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert!((row["violation"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn certify_mermin_and_cabello_report_tight_bounds() {
    let report = run_json(&["certify", "--inequality", "mermin", "--mixtures", "100"]);
    assert_valid_report(&report);
    assert_eq!(report["report"]["max_violation"].as_f64().unwrap(), 0.0);
    assert_eq!(report["report"]["vertices"].as_u64().unwrap(), 64);
    let report = run_json(&["certify", "--inequality", "cabello", "--vertex-only"]);
    assert_valid_report(&report);
    assert_eq!(report["report"]["max_violation"].as_f64().unwrap(), 0.0);
    assert_eq!(report["report"]["vertices"].as_u64().unwrap(), 512);
}

#[test]
fn derive_synthesizes_and_verifies_chains() {
    let report = run_json(&[
        "derive",
        "--target",
        "alpha,beta,gamma",
        "--allowed",
        "A,a,alpha;B,b,beta;C,c,gamma;A,B,C;a,b,c;alpha,beta,gamma",
    ]);
    assert_valid_report(&report);
    assert_eq!(report["report"]["found"], true);
    assert_eq!(report["report"]["verdict"]["verdict"], "accepted");
    assert_eq!(report["report"]["chain"]["leaves"].as_array().unwrap().len(), 5);
    Schemas::new()
        .validate_file("chain.schema.json", &report["report"]["chain"])
        .unwrap();

    // Round-trip the generated multipartite chain through a file.
    let dir = std::env::temp_dir().join("entrodist-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("multipartite_chain.json");
    let out = run(&["derive", "--multipartite", "6", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    let verified = run_json(&["derive", "--verify", path.to_str().unwrap()]);
    assert_eq!(verified["report"]["verdict"]["verdict"], "accepted");

    // No parity solution: found = false, still exit 0.
    let report = run_json(&["derive", "--target", "A1", "--allowed", "A2"]);
    assert_eq!(report["report"]["found"], false);
}

#[test]
fn axioms_random_run_passes() {
    let report = run_json(&[
        "axioms", "--dists", "100", "--variables", "4", "--trials", "10", "--seed", "3",
    ]);
    assert_valid_report(&report);
    assert_eq!(report["report"]["passed"], true);
    assert!(report["report"]["worst_slack"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn axioms_on_scenario_distribution() {
    let report = run_json(&[
        "axioms",
        "--scenario",
        &scenario("fig2a_classical.json"),
        "--trials",
        "50",
    ]);
    assert_valid_report(&report);
    assert_eq!(report["report"]["passed"], true);
}

#[test]
fn optimize_tripartite_recovers_the_maximum() {
    let report = run_json(&["optimize", "--inequality", "tripartite", "--grid", "16"]);
    assert_valid_report(&report);
    let objective = report["report"]["objective"].as_f64().unwrap();
    assert!(objective >= 1.0 - 1e-6);
}

#[test]
fn reruns_are_byte_identical() {
    let a = run(&["eval", "--scenario", &scenario("pm_square.json"), "--inequality", "cabello"]);
    let b = run(&["eval", "--scenario", &scenario("pm_square.json"), "--inequality", "cabello"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["certify", "--inequality", "mermin", "--mixtures", "50", "--seed", "7"]);
    let d = run(&["certify", "--inequality", "mermin", "--mixtures", "50", "--seed", "7"]);
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn exit_codes_distinguish_input_errors() {
    let out = run(&["eval", "--scenario", "/no/such/file.json", "--inequality", "tripartite"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "eval",
        "--scenario",
        &scenario("tripartite_max.json"),
        "--inequality",
        "septipartite",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&[
        "eval",
        "--scenario",
        &scenario("pm_square.json"),
        "--inequality",
        "pm-products",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // Unbound variables: the square inequality on a tripartite scenario.
    let out = run(&[
        "eval",
        "--scenario",
        &scenario("tripartite_max.json"),
        "--inequality",
        "pm-entropic",
    ]);
    assert_eq!(out.status.code(), Some(2));
    // Clap usage errors also exit 2.
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bundled_corpus_matches_the_exporter() {
    let dir = std::env::temp_dir().join("entrodist-export-check");
    let _ = std::fs::remove_dir_all(&dir);
    let out = run(&["export-scenarios", "--dir", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let mut checked = 0;
    for entry in std::fs::read_dir(workspace_root().join("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap();
        let fresh = dir.join(name);
        let committed = std::fs::read(&path).unwrap();
        let generated = std::fs::read(&fresh)
            .unwrap_or_else(|_| panic!("exporter did not write {name:?}"));
        assert_eq!(committed, generated, "{name:?} drifted from the exporter");
        checked += 1;
    }
    assert_eq!(checked, 16);
}

#[test]
fn bundled_scenarios_validate_against_the_schema() {
    let mut schemas = Schemas::new();
    for entry in std::fs::read_dir(workspace_root().join("scenarios")).unwrap() {
        let path = entry.unwrap().path();
        let value: Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        schemas
            .validate_file("scenario.schema.json", &value)
            .unwrap_or_else(|e| panic!("{path:?}: {e}"));
    }
}
