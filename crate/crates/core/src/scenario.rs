//! End-to-end pipeline: reference lookup, storage completion, normalization,
//! IT sizing and one facility plan per heat-sink variant. Also sweeps and
//! their CSV table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::catalog::{
    check_schema_version, Catalog, DatacenterType, HeatSinkKind, PodLayout, ReferenceItConfig,
    ReferenceLibrary, Year, SCHEMA_VERSION,
};
use crate::error::{DcgenError, Result};
use crate::facility::{plan_facility, FacilityPlan, RedundancyPolicy};
use crate::it_sizing::{
    check_close, normalize_config, size, ItDesign, SizingTarget, DEFAULT_RACK_UNITS,
};
use crate::selector::Objective;
use crate::storage::{complete_storage, StorageNodeModel, StorageRule};

/// Output schema shipped with the crate.
pub const DESIGN_SCHEMA: &str = include_str!("../data/design.schema.json");

/// Name of the built-in sweep preset.
pub const PAPER_CASE_STUDIES: &str = "paper-case-studies";

pub const CSV_HEADER: [&str; 14] = [
    "scenario",
    "dc_type",
    "year",
    "target_kind",
    "target_value",
    "total_racks",
    "it_power_mw",
    "facility_power_mw",
    "density_kw_m2",
    "white_space_m2",
    "gray_indoor_m2",
    "gray_outdoor_m2",
    "heat_sink",
    "error",
];

/// Which heat sinks to plan for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatSinkChoice {
    Evaporative,
    Dry,
    #[default]
    Both,
}

impl HeatSinkChoice {
    pub fn kinds(self) -> &'static [HeatSinkKind] {
        match self {
            HeatSinkChoice::Evaporative => &[HeatSinkKind::Evaporative],
            HeatSinkChoice::Dry => &[HeatSinkKind::Dry],
            HeatSinkChoice::Both => &[HeatSinkKind::Evaporative, HeatSinkKind::Dry],
        }
    }
}

impl fmt::Display for HeatSinkChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeatSinkChoice::Evaporative => "evaporative",
            HeatSinkChoice::Dry => "dry",
            HeatSinkChoice::Both => "both",
        })
    }
}

impl FromStr for HeatSinkChoice {
    type Err = DcgenError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "evaporative" => Ok(HeatSinkChoice::Evaporative),
            "dry" => Ok(HeatSinkChoice::Dry),
            "both" => Ok(HeatSinkChoice::Both),
            other => Err(DcgenError::InvalidInput(format!(
                "unknown heat sink `{other}`"
            ))),
        }
    }
}

fn default_ru() -> u32 {
    DEFAULT_RACK_UNITS
}

/// One design request. With `reference` set, the type and year come from the
/// named configuration; otherwise both are required and pick the canonical one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dc_type: Option<DatacenterType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<Year>,
    pub target: SizingTarget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(default)]
    pub policy: RedundancyPolicy,
    #[serde(default = "default_objective")]
    pub objective: Objective,
    #[serde(default)]
    pub heat_sink: HeatSinkChoice,
    #[serde(default = "default_ru")]
    pub normalized_ru: u32,
    #[serde(default)]
    pub pod_layout: PodLayout,
}

fn default_objective() -> Objective {
    Objective::Space
}

impl ScenarioRequest {
    pub fn canonical(dc_type: DatacenterType, year: Year, target: SizingTarget) -> Self {
        ScenarioRequest {
            name: None,
            dc_type: Some(dc_type),
            year: Some(year),
            target,
            reference: None,
            policy: RedundancyPolicy::default(),
            objective: Objective::Space,
            heat_sink: HeatSinkChoice::Both,
            normalized_ru: DEFAULT_RACK_UNITS,
            pod_layout: PodLayout::default(),
        }
    }

    pub fn named(reference: &str, target: SizingTarget) -> Self {
        ScenarioRequest {
            dc_type: None,
            year: None,
            reference: Some(reference.to_string()),
            ..Self::canonical(DatacenterType::AiTraining, Year::Y2024, target)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.target.validate()?;
        self.policy.validate()?;
        if !(1..=60).contains(&self.normalized_ru) {
            return Err(DcgenError::InvalidInput(format!(
                "rack height must be 1..=60U, got {}",
                self.normalized_ru
            )));
        }
        if self.pod_layout.racks_per_pod() == 0 {
            return Err(DcgenError::InvalidInput(
                "pod layout must hold at least one rack".into(),
            ));
        }
        if self.reference.is_none() && (self.dc_type.is_none() || self.year.is_none()) {
            return Err(DcgenError::InvalidInput(
                "a datacenter type and year are required without a reference".into(),
            ));
        }
        Ok(())
    }

    /// Label used in sweep tables and output file names.
    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        let base = match (&self.reference, self.dc_type, self.year) {
            (Some(r), _, _) => r.clone(),
            (None, Some(t), Some(y)) => format!("{t}-{y}"),
            _ => "scenario".to_string(),
        };
        let target = match self.target {
            SizingTarget::RackCount(n) => format!("{n}racks"),
            SizingTarget::PowerMw(p) => format!("{}mw", fmt_sig(p)),
        };
        format!("{base}-{target}")
    }

    fn resolve<'a>(&self, library: &'a ReferenceLibrary) -> Result<&'a ReferenceItConfig> {
        match (&self.reference, self.dc_type, self.year) {
            (Some(name), _, _) => library.lookup(name),
            (None, Some(t), Some(y)) => library.canonical(t, y),
            _ => Err(DcgenError::InvalidInput(
                "a datacenter type and year are required without a reference".into(),
            )),
        }
    }
}

/// Which reference a design was scaled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub name: String,
    pub dc_type: DatacenterType,
    pub year: Year,
    pub reference_racks: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage_rule: Option<StorageRule>,
}

/// Headline metrics for one heat-sink variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub heat_sink: HeatSinkKind,
    pub total_racks: u64,
    pub power_density_kw_m2: f64,
    pub it_power_mw: f64,
    pub facility_power_mw: f64,
    pub white_space_m2: f64,
    pub gray_space_indoor_m2: f64,
    pub gray_space_outdoor_m2: f64,
}

impl DesignSummary {
    fn of(it: &ItDesign, plan: &FacilityPlan) -> Self {
        DesignSummary {
            heat_sink: plan.heat_sink_kind,
            total_racks: it.total_racks,
            power_density_kw_m2: it.power_density_kw_m2,
            it_power_mw: it.it_peak_power_mw,
            facility_power_mw: plan.facility_peak_power_mw,
            white_space_m2: it.white_space_m2,
            gray_space_indoor_m2: plan.gray_space_indoor_m2,
            gray_space_outdoor_m2: plan.gray_space_outdoor_m2,
        }
    }
}

/// Everything generated for one request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDocument {
    pub schema_version: String,
    pub request: ScenarioRequest,
    pub reference: ReferenceSummary,
    pub it: ItDesign,
    pub plans: Vec<FacilityPlan>,
    pub summaries: Vec<DesignSummary>,
}

impl DesignDocument {
    /// Re-checks every embedded invariant. Documents read back from disk carry
    /// 6-significant-digit floats, so pass a tolerance of about 1e-5 for those.
    pub fn validate(&self, rel_tol: f64) -> Result<()> {
        check_schema_version(&self.schema_version)?;
        self.it.validate(rel_tol)?;
        if self.plans.len() != self.summaries.len() || self.plans.is_empty() {
            return Err(DcgenError::Validation(
                "one summary per facility plan expected".into(),
            ));
        }
        for (plan, s) in self.plans.iter().zip(&self.summaries) {
            plan.verify(rel_tol)?;
            let want = DesignSummary::of(&self.it, plan);
            if s.heat_sink != want.heat_sink || s.total_racks != want.total_racks {
                return Err(DcgenError::Validation(
                    "summary does not match its plan".into(),
                ));
            }
            for (what, got, exp) in [
                (
                    "power_density_kw_m2",
                    s.power_density_kw_m2,
                    want.power_density_kw_m2,
                ),
                ("it_power_mw", s.it_power_mw, want.it_power_mw),
                (
                    "facility_power_mw",
                    s.facility_power_mw,
                    want.facility_power_mw,
                ),
                ("white_space_m2", s.white_space_m2, want.white_space_m2),
                (
                    "gray_space_indoor_m2",
                    s.gray_space_indoor_m2,
                    want.gray_space_indoor_m2,
                ),
                (
                    "gray_space_outdoor_m2",
                    s.gray_space_outdoor_m2,
                    want.gray_space_outdoor_m2,
                ),
            ] {
                check_close(what, got, exp, rel_tol)?;
            }
        }
        Ok(())
    }

    /// Pretty JSON with sorted keys and floats at 6 significant digits.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("design documents serialize");
        let mut s = serde_json::to_string_pretty(&round_value(value)).expect("values serialize");
        s.push('\n');
        s
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let doc: DesignDocument =
            serde_json::from_str(json).map_err(|source| DcgenError::Parse {
                what: "design document".into(),
                source,
            })?;
        check_schema_version(&doc.schema_version)?;
        Ok(doc)
    }
}

/// Rounds `v` to 6 significant digits.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.5e}").parse().expect("formatted float parses")
}

/// Shortest text of `v` rounded to 6 significant digits.
pub fn fmt_sig(v: f64) -> String {
    let r = round_sig(v);
    if r == r.trunc() && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            serde_json::Number::from_f64(x)
                .map(Value::Number)
                .unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => {
            Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect())
        }
        other => other,
    }
}

/// Runs one request against loaded data.
pub fn run(
    request: &ScenarioRequest,
    catalog: &Catalog,
    library: &ReferenceLibrary,
) -> Result<DesignDocument> {
    request.validate()?;
    let reference = request.resolve(library)?;
    let (completed, storage_rule) = complete_storage(reference, &StorageNodeModel::default())?;
    let normalized = normalize_config(&completed, request.normalized_ru);
    let it = size(&normalized, request.target)?;
    let plans = request
        .heat_sink
        .kinds()
        .iter()
        .map(|&sink| {
            plan_facility(
                &it,
                catalog,
                &request.pod_layout,
                &request.policy,
                sink,
                request.objective,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let summaries = plans.iter().map(|p| DesignSummary::of(&it, p)).collect();
    Ok(DesignDocument {
        schema_version: SCHEMA_VERSION.to_string(),
        request: request.clone(),
        reference: ReferenceSummary {
            name: reference.name.clone(),
            dc_type: reference.dc_type,
            year: reference.year,
            reference_racks: completed.total_racks(),
            storage_rule,
        },
        it,
        plans,
        summaries,
    })
}

/// How a sweep evaluates its scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Data-parallel over scenarios; sequential when built without `parallel`.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Result of one sweep scenario.
#[derive(Debug)]
pub struct SweepOutcome {
    pub request: ScenarioRequest,
    pub result: Result<DesignDocument>,
}

/// Evaluates every request independently; failures stay with their scenario.
/// Output order follows input order whatever the execution mode.
pub fn sweep(
    requests: &[ScenarioRequest],
    catalog: &Catalog,
    library: &ReferenceLibrary,
    execution: Execution,
) -> Vec<SweepOutcome> {
    let one = |r: &ScenarioRequest| SweepOutcome {
        request: r.clone(),
        result: run(r, catalog, library),
    };
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            requests.par_iter().map(one).collect()
        }
        _ => requests.iter().map(one).collect(),
    }
}

/// One row per scenario and heat-sink variant; failed scenarios get one row
/// carrying the error.
pub fn sweep_csv(outcomes: &[SweepOutcome]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for o in outcomes {
        let r = &o.request;
        let label = r.label();
        match &o.result {
            Ok(doc) => {
                for s in &doc.summaries {
                    w.write_record([
                        label.clone(),
                        doc.reference.dc_type.to_string(),
                        doc.reference.year.to_string(),
                        r.target.kind().to_string(),
                        fmt_sig(r.target.value()),
                        s.total_racks.to_string(),
                        fmt_sig(s.it_power_mw),
                        fmt_sig(s.facility_power_mw),
                        fmt_sig(s.power_density_kw_m2),
                        fmt_sig(s.white_space_m2),
                        fmt_sig(s.gray_space_indoor_m2),
                        fmt_sig(s.gray_space_outdoor_m2),
                        s.heat_sink.to_string(),
                        String::new(),
                    ])
                    .expect("in-memory write");
                }
            }
            Err(e) => {
                let mut row = vec![
                    label,
                    r.dc_type.map(|t| t.to_string()).unwrap_or_default(),
                    r.year.map(|y| y.to_string()).unwrap_or_default(),
                    r.target.kind().to_string(),
                    fmt_sig(r.target.value()),
                ];
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push(r.heat_sink.to_string());
                row.push(e.to_string());
                w.write_record(row).expect("in-memory write");
            }
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// The case-study preset: every type and year at 10,000 racks and at 1 GW.
pub fn paper_case_studies() -> Vec<ScenarioRequest> {
    let mut out = Vec::with_capacity(24);
    for target in [
        SizingTarget::RackCount(10_000),
        SizingTarget::PowerMw(1000.0),
    ] {
        for year in Year::ALL {
            for dc_type in DatacenterType::ALL {
                out.push(ScenarioRequest::canonical(dc_type, year, target));
            }
        }
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    schema_version: String,
    scenarios: Vec<ScenarioRequest>,
}

/// Parses a sweep file: `{"schema_version": "1.0", "scenarios": [...]}`.
pub fn parse_sweep_file(json: &str) -> Result<Vec<ScenarioRequest>> {
    let f: SweepFile = serde_json::from_str(json).map_err(|source| DcgenError::Parse {
        what: "sweep file".into(),
        source,
    })?;
    check_schema_version(&f.schema_version)?;
    for r in &f.scenarios {
        r.validate()?;
    }
    Ok(f.scenarios)
}

pub fn sweep_file_json(requests: &[ScenarioRequest]) -> String {
    let f = SweepFile {
        schema_version: SCHEMA_VERSION.to_string(),
        scenarios: requests.to_vec(),
    };
    serde_json::to_string_pretty(&f).expect("requests serialize")
}
