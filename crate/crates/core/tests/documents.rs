use dcgen_core::catalog::{Catalog, DatacenterType, ReferenceLibrary, Year};
use dcgen_core::facility::RedundancyPolicy;
use dcgen_core::it_sizing::SizingTarget;
use dcgen_core::scenario::{
    paper_case_studies, run, sweep, DesignDocument, Execution, HeatSinkChoice, ScenarioRequest,
    DESIGN_SCHEMA,
};
use dcgen_core::selector::Objective;
use jsonschema::JSONSchema;
use serde_json::Value;

fn schema() -> JSONSchema {
    let schema: Value = serde_json::from_str(DESIGN_SCHEMA).unwrap();
    JSONSchema::compile(&schema).expect("schema compiles")
}

fn assert_valid(compiled: &JSONSchema, json: &str) {
    let value: Value = serde_json::from_str(json).unwrap();
    let msgs: Vec<String> = match compiled.validate(&value) {
        Ok(()) => Vec::new(),
        Err(errors) => errors
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect(),
    };
    assert!(msgs.is_empty(), "schema violations: {msgs:#?}");
}

fn all_requests() -> Vec<ScenarioRequest> {
    let mut reqs = paper_case_studies();
    let lib = ReferenceLibrary::builtin();
    for cfg in lib
        .configs()
        .iter()
        .filter(|c| !c.name.starts_with("canonical-"))
    {
        let mut r = ScenarioRequest::named(&cfg.name, SizingTarget::PowerMw(250.0));
        r.policy = RedundancyPolicy::fractional(4, 3, 0.05);
        r.objective = Objective::Power;
        r.heat_sink = HeatSinkChoice::Dry;
        reqs.push(r);
    }
    reqs
}

#[test]
fn every_document_matches_the_schema_and_round_trips() {
    let (cat, lib) = (Catalog::builtin(), ReferenceLibrary::builtin());
    let compiled = schema();
    for o in sweep(&all_requests(), &cat, &lib, Execution::default()) {
        let doc = o
            .result
            .unwrap_or_else(|e| panic!("{}: {e}", o.request.label()));
        let json = doc.to_json();
        assert_valid(&compiled, &json);
        let back = DesignDocument::from_json_str(&json).unwrap();
        back.validate(1e-5)
            .unwrap_or_else(|e| panic!("{}: {e}", o.request.label()));
        assert_eq!(back.to_json(), json, "{}", o.request.label());
    }
}

#[test]
fn written_file_round_trips() {
    let (cat, lib) = (Catalog::builtin(), ReferenceLibrary::builtin());
    let req = ScenarioRequest::canonical(
        DatacenterType::AiInference,
        Year::Y2029,
        SizingTarget::PowerMw(321.5),
    );
    let doc = run(&req, &cat, &lib).unwrap();
    let path = std::env::temp_dir().join(format!("dcgen-roundtrip-{}.json", std::process::id()));
    std::fs::write(&path, doc.to_json()).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let back = DesignDocument::from_json_str(&text).unwrap();
    back.validate(1e-5).unwrap();
    assert_eq!(back.request, req);
    assert_eq!(back.it.total_racks, doc.it.total_racks);
}

#[test]
fn tampered_documents_are_rejected() {
    let (cat, lib) = (Catalog::builtin(), ReferenceLibrary::builtin());
    let req = ScenarioRequest::canonical(
        DatacenterType::Cloud,
        Year::Y2024,
        SizingTarget::RackCount(500),
    );
    let json = run(&req, &cat, &lib).unwrap().to_json();

    let mut v: Value = serde_json::from_str(&json).unwrap();
    v["plans"][0]["per_class_units"]["chiller"]["it_units"] = Value::from(1);
    let doc: DesignDocument = serde_json::from_value(v).unwrap();
    assert!(doc.validate(1e-5).is_err());

    let mut v: Value = serde_json::from_str(&json).unwrap();
    v["summaries"][1]["it_power_mw"] = Value::from(1.0);
    let doc: DesignDocument = serde_json::from_value(v).unwrap();
    assert!(doc.validate(1e-5).is_err());

    let mut v: Value = serde_json::from_str(&json).unwrap();
    v["schema_version"] = Value::from("2.0");
    assert!(DesignDocument::from_json_str(&v.to_string()).is_err());
}

#[test]
fn output_is_deterministic() {
    let (cat, lib) = (Catalog::builtin(), ReferenceLibrary::builtin());
    let req = ScenarioRequest::named("chatgpt", SizingTarget::RackCount(4096));
    let a = run(&req, &cat, &lib).unwrap().to_json();
    let b = run(&req, &cat, &lib).unwrap().to_json();
    assert_eq!(a, b);
}

#[test]
fn keys_are_sorted_and_floats_short() {
    let (cat, lib) = (Catalog::builtin(), ReferenceLibrary::builtin());
    let req = ScenarioRequest::canonical(
        DatacenterType::AiTraining,
        Year::Y2024,
        SizingTarget::RackCount(10_000),
    );
    let json = run(&req, &cat, &lib).unwrap().to_json();
    assert!(json.contains("\"it_power_mw\": 1435.79"));
    assert!(json.contains("\"power_density_kw_m2\": 79.7643"));
    let v: Value = serde_json::from_str(&json).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    let first = json.find("\"it\"").unwrap();
    let second = json.find("\"plans\"").unwrap();
    assert!(first < second);
}

#[test]
fn schema_rejects_malformed_documents() {
    let (cat, lib) = (Catalog::builtin(), ReferenceLibrary::builtin());
    let req = ScenarioRequest::canonical(
        DatacenterType::Cloud,
        Year::Y2027,
        SizingTarget::RackCount(64),
    );
    let json = run(&req, &cat, &lib).unwrap().to_json();
    let compiled = schema();
    let good: Value = serde_json::from_str(&json).unwrap();
    assert!(compiled.is_valid(&good));

    let mut v = good.clone();
    v.as_object_mut().unwrap().remove("summaries");
    assert!(!compiled.is_valid(&v));

    let mut v = good.clone();
    v["it"]["total_racks"] = Value::from(-3);
    assert!(!compiled.is_valid(&v));

    let mut v = good;
    v["plans"][0]["heat_sink_kind"] = Value::from("seawater");
    assert!(!compiled.is_valid(&v));
}
