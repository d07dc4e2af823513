//! Equipment catalog and reference IT configuration library.
//!
//! Both are plain JSON data files carrying a `schema_version`. The crate embeds
//! the default copies shipped under `data/`, and either can be replaced by a
//! user file with the same schema.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DcgenError, Result};

/// Major schema version understood by the loaders.
pub const SCHEMA_MAJOR: u32 = 1;
pub const SCHEMA_VERSION: &str = "1.0";

/// Area per rack used by every canonical configuration, m².
pub const DEFAULT_AREA_PER_RACK_M2: f64 = 1.8;

const DEFAULT_CATALOG_JSON: &str = include_str!("../data/catalog.json");
const DEFAULT_LIBRARY_JSON: &str = include_str!("../data/reference_library.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquipmentClass {
    Cdu,
    Pdu,
    Chiller,
    DryCooler,
    EvaporativeTower,
    Ups,
    Msb,
    Generator,
}

impl EquipmentClass {
    pub const ALL: [EquipmentClass; 8] = [
        EquipmentClass::Cdu,
        EquipmentClass::Pdu,
        EquipmentClass::Chiller,
        EquipmentClass::DryCooler,
        EquipmentClass::EvaporativeTower,
        EquipmentClass::Ups,
        EquipmentClass::Msb,
        EquipmentClass::Generator,
    ];

    /// CDUs and PDUs are provisioned per pod; everything else per site.
    pub fn is_rack_level(self) -> bool {
        matches!(self, EquipmentClass::Cdu | EquipmentClass::Pdu)
    }

    pub fn is_electrical(self) -> bool {
        matches!(
            self,
            EquipmentClass::Pdu
                | EquipmentClass::Ups
                | EquipmentClass::Msb
                | EquipmentClass::Generator
        )
    }

    pub fn is_heat_sink(self) -> bool {
        matches!(
            self,
            EquipmentClass::DryCooler | EquipmentClass::EvaporativeTower
        )
    }
}

impl fmt::Display for EquipmentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EquipmentClass::Cdu => "CDU",
            EquipmentClass::Pdu => "PDU",
            EquipmentClass::Chiller => "Chiller",
            EquipmentClass::DryCooler => "DryCooler",
            EquipmentClass::EvaporativeTower => "EvaporativeTower",
            EquipmentClass::Ups => "UPS",
            EquipmentClass::Msb => "MSB",
            EquipmentClass::Generator => "Generator",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Indoor,
    Outdoor,
}

/// Final heat-rejection stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatSinkKind {
    Evaporative,
    Dry,
}

impl HeatSinkKind {
    pub fn class(self) -> EquipmentClass {
        match self {
            HeatSinkKind::Evaporative => EquipmentClass::EvaporativeTower,
            HeatSinkKind::Dry => EquipmentClass::DryCooler,
        }
    }
}

impl fmt::Display for HeatSinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeatSinkKind::Evaporative => "evaporative",
            HeatSinkKind::Dry => "dry",
        })
    }
}

/// One catalog entry. Capacities are kW of load served (heat for cooling gear,
/// power for electrical gear); `max_draw_kw` is what the unit itself consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquipmentModel {
    pub id: String,
    pub class: EquipmentClass,
    pub rated_capacity_kw: f64,
    pub max_draw_kw: f64,
    pub footprint_m2: f64,
    pub access_factor: f64,
    pub placement: Placement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heat_sink_kind: Option<HeatSinkKind>,
}

impl EquipmentModel {
    /// Footprint including the maintenance access area, `(1 + λ) · A`.
    pub fn gross_area_m2(&self) -> f64 {
        (1.0 + self.access_factor) * self.footprint_m2
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(DcgenError::Validation(format!(
                "model `{}`: {what}",
                self.id
            )))
        };
        if self.id.trim().is_empty() {
            return Err(DcgenError::Validation("model with empty id".into()));
        }
        if !(self.rated_capacity_kw.is_finite() && self.rated_capacity_kw > 0.0) {
            return bad("rated_capacity_kw must be positive");
        }
        if !(self.footprint_m2.is_finite() && self.footprint_m2 > 0.0) {
            return bad("footprint_m2 must be positive");
        }
        if !(self.access_factor.is_finite() && self.access_factor >= 0.0) {
            return bad("access_factor must be nonnegative");
        }
        if !(self.max_draw_kw.is_finite() && self.max_draw_kw >= 0.0) {
            return bad("max_draw_kw must be nonnegative");
        }
        match (self.class, self.heat_sink_kind) {
            (EquipmentClass::DryCooler, Some(HeatSinkKind::Evaporative))
            | (EquipmentClass::EvaporativeTower, Some(HeatSinkKind::Dry)) => {
                bad("heat_sink_kind contradicts class")
            }
            (c, Some(_)) if !c.is_heat_sink() => bad("heat_sink_kind set on a non heat-sink class"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeType {
    Gpu,
    CpuGpu,
    Cpu,
    Storage,
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeType::Gpu => "GPU",
            NodeType::CpuGpu => "CPU-GPU",
            NodeType::Cpu => "CPU",
            NodeType::Storage => "Storage",
        })
    }
}

/// A homogeneous rack class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RackClassSpec {
    pub node_type: NodeType,
    pub ru_height: u32,
    pub peak_power_kw: f64,
    #[serde(default)]
    pub is_hpc: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pflops: Option<f64>,
}

impl RackClassSpec {
    pub fn new(node_type: NodeType, ru_height: u32, peak_power_kw: f64) -> Self {
        RackClassSpec {
            node_type,
            ru_height,
            peak_power_kw,
            is_hpc: false,
            pflops: None,
        }
    }

    pub fn hpc(mut self) -> Self {
        self.is_hpc = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_power_kw.is_finite() && self.peak_power_kw > 0.0) {
            return Err(DcgenError::Validation(format!(
                "{} rack: peak_power_kw must be positive",
                self.node_type
            )));
        }
        if !(1..=60).contains(&self.ru_height) {
            return Err(DcgenError::Validation(format!(
                "{} rack: ru_height {} outside [1, 60]",
                self.node_type, self.ru_height
            )));
        }
        if let Some(p) = self.pflops {
            if !(p.is_finite() && p >= 0.0) {
                return Err(DcgenError::Validation(format!(
                    "{} rack: negative pflops",
                    self.node_type
                )));
            }
        }
        Ok(())
    }
}

/// A rack class together with how many racks of it a configuration holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RackEntryWire", into = "RackEntryWire")]
pub struct RackEntry {
    pub spec: RackClassSpec,
    pub count: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RackEntryWire {
    node_type: NodeType,
    ru_height: u32,
    peak_power_kw: f64,
    #[serde(default)]
    is_hpc: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pflops: Option<f64>,
    count: u64,
}

impl From<RackEntryWire> for RackEntry {
    fn from(w: RackEntryWire) -> Self {
        RackEntry {
            spec: RackClassSpec {
                node_type: w.node_type,
                ru_height: w.ru_height,
                peak_power_kw: w.peak_power_kw,
                is_hpc: w.is_hpc,
                pflops: w.pflops,
            },
            count: w.count,
        }
    }
}

impl From<RackEntry> for RackEntryWire {
    fn from(e: RackEntry) -> Self {
        RackEntryWire {
            node_type: e.spec.node_type,
            ru_height: e.spec.ru_height,
            peak_power_kw: e.spec.peak_power_kw,
            is_hpc: e.spec.is_hpc,
            pflops: e.spec.pflops,
            count: e.count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatacenterType {
    AiTraining,
    MixedAiTrainingInference,
    AiInference,
    Cloud,
}

impl DatacenterType {
    pub const ALL: [DatacenterType; 4] = [
        DatacenterType::AiTraining,
        DatacenterType::MixedAiTrainingInference,
        DatacenterType::AiInference,
        DatacenterType::Cloud,
    ];

    /// Node types that may appear in a datacenter of this type.
    pub fn allowed_nodes(self) -> &'static [NodeType] {
        match self {
            DatacenterType::AiTraining => &[NodeType::Gpu, NodeType::Storage],
            DatacenterType::MixedAiTrainingInference => {
                &[NodeType::Gpu, NodeType::CpuGpu, NodeType::Storage]
            }
            DatacenterType::AiInference => &[NodeType::CpuGpu, NodeType::Cpu, NodeType::Storage],
            DatacenterType::Cloud => &[NodeType::Cpu, NodeType::Storage],
        }
    }

    /// Short name used on the command line and in canonical config names.
    pub fn slug(self) -> &'static str {
        match self {
            DatacenterType::AiTraining => "ai-training",
            DatacenterType::MixedAiTrainingInference => "mixed",
            DatacenterType::AiInference => "ai-inference",
            DatacenterType::Cloud => "cloud",
        }
    }

    pub fn from_slug(s: &str) -> Option<Self> {
        DatacenterType::ALL.into_iter().find(|t| t.slug() == s)
    }
}

impl fmt::Display for DatacenterType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// Target year of operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub enum Year {
    Y2024,
    Y2027,
    Y2029,
}

impl Year {
    pub const ALL: [Year; 3] = [Year::Y2024, Year::Y2027, Year::Y2029];

    pub fn value(self) -> u16 {
        match self {
            Year::Y2024 => 2024,
            Year::Y2027 => 2027,
            Year::Y2029 => 2029,
        }
    }
}

impl TryFrom<u16> for Year {
    type Error = String;

    fn try_from(v: u16) -> std::result::Result<Self, String> {
        match v {
            2024 => Ok(Year::Y2024),
            2027 => Ok(Year::Y2027),
            2029 => Ok(Year::Y2029),
            other => Err(format!("year {other} not one of 2024, 2027, 2029")),
        }
    }
}

impl From<Year> for u16 {
    fn from(y: Year) -> u16 {
        y.value()
    }
}

impl fmt::Display for Year {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

fn default_area_per_rack() -> f64 {
    DEFAULT_AREA_PER_RACK_M2
}

/// A named reference system or canonical per-type model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceItConfig {
    pub name: String,
    pub year: Year,
    pub dc_type: DatacenterType,
    pub entries: Vec<RackEntry>,
    #[serde(default = "default_area_per_rack")]
    pub area_per_rack_m2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_storage_tb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compute_capability_tflops: Option<f64>,
    /// Storage lives inside the compute racks; no storage racks are estimated.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub local_storage: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub release_year: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl ReferenceItConfig {
    pub fn total_racks(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }

    pub fn entry(&self, node: NodeType) -> Option<&RackEntry> {
        self.entries.iter().find(|e| e.spec.node_type == node)
    }

    /// Σ count × peak kW.
    pub fn peak_power_kw(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.count as f64 * e.spec.peak_power_kw)
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        let ctx = |msg: String| DcgenError::Validation(format!("config `{}`: {msg}", self.name));
        if self.name.trim().is_empty() {
            return Err(DcgenError::Validation("config with empty name".into()));
        }
        if self.entries.is_empty() {
            return Err(ctx("no rack entries".into()));
        }
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            e.spec.validate().map_err(|err| ctx(err.to_string()))?;
            if e.count == 0 {
                return Err(ctx(format!(
                    "{} rack count must be at least 1",
                    e.spec.node_type
                )));
            }
            if !seen.insert(e.spec.node_type) {
                return Err(ctx(format!("duplicate {} entry", e.spec.node_type)));
            }
            if !self.dc_type.allowed_nodes().contains(&e.spec.node_type) {
                return Err(ctx(format!(
                    "{} racks not allowed in a {} datacenter",
                    e.spec.node_type, self.dc_type
                )));
            }
        }
        if !(self.area_per_rack_m2.is_finite() && self.area_per_rack_m2 > 0.0) {
            return Err(ctx("area_per_rack_m2 must be positive".into()));
        }
        for (field, v) in [
            ("total_storage_tb", self.total_storage_tb),
            ("compute_capability_tflops", self.compute_capability_tflops),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(ctx(format!("{field} must be positive")));
                }
            }
        }
        Ok(())
    }
}

/// Rack grouping used for pod-level equipment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PodLayout {
    pub rows_per_pod: u32,
    pub racks_per_row: u32,
}

impl PodLayout {
    pub fn new(rows_per_pod: u32, racks_per_row: u32) -> Result<Self> {
        if rows_per_pod == 0 || racks_per_row == 0 {
            return Err(DcgenError::InvalidInput(
                "pod layout dimensions must be at least 1".into(),
            ));
        }
        Ok(PodLayout {
            rows_per_pod,
            racks_per_row,
        })
    }

    pub fn racks_per_pod(&self) -> u64 {
        u64::from(self.rows_per_pod) * u64::from(self.racks_per_row)
    }
}

impl Default for PodLayout {
    fn default() -> Self {
        PodLayout {
            rows_per_pod: 2,
            racks_per_row: 8,
        }
    }
}

pub(crate) fn check_schema_version(v: &str) -> Result<()> {
    let major = v
        .split('.')
        .next()
        .and_then(|m| m.trim().parse::<u32>().ok());
    match major {
        Some(SCHEMA_MAJOR) => Ok(()),
        _ => Err(DcgenError::UnsupportedSchema {
            found: v.to_string(),
            expected: SCHEMA_MAJOR,
        }),
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| DcgenError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    schema_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    models: Vec<EquipmentModel>,
}

/// Validated equipment catalog. Immutable once loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    note: Option<String>,
    models: Vec<EquipmentModel>,
}

impl Catalog {
    pub fn from_models(models: Vec<EquipmentModel>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for m in &models {
            m.validate()?;
            if !ids.insert(m.id.as_str()) {
                return Err(DcgenError::Validation(format!(
                    "duplicate model id `{}`",
                    m.id
                )));
            }
        }
        for class in EquipmentClass::ALL {
            if !models.iter().any(|m| m.class == class) {
                return Err(DcgenError::Validation(format!(
                    "no models for class {class}"
                )));
            }
        }
        Ok(Catalog { note: None, models })
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let file: CatalogFile = serde_json::from_str(json).map_err(|source| DcgenError::Parse {
            what: "equipment catalog".into(),
            source,
        })?;
        check_schema_version(&file.schema_version)?;
        let mut catalog = Catalog::from_models(file.models)?;
        catalog.note = file.note;
        Ok(catalog)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Catalog::from_json_str(&read_file(path.as_ref())?)
    }

    /// The catalog shipped with the crate.
    pub fn builtin() -> Self {
        Catalog::from_json_str(DEFAULT_CATALOG_JSON).expect("shipped catalog is valid")
    }

    pub fn models(&self) -> &[EquipmentModel] {
        &self.models
    }

    pub fn of_class(&self, class: EquipmentClass) -> Vec<&EquipmentModel> {
        self.models.iter().filter(|m| m.class == class).collect()
    }

    pub fn get(&self, id: &str) -> Option<&EquipmentModel> {
        self.models.iter().find(|m| m.id == id)
    }

    pub fn to_json(&self) -> String {
        let file = CatalogFile {
            schema_version: SCHEMA_VERSION.into(),
            note: self.note.clone(),
            models: self.models.clone(),
        };
        serde_json::to_string_pretty(&file).expect("catalog serializes")
    }
}

/// Loads and validates an equipment catalog file.
pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog> {
    Catalog::load(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LibraryFile {
    schema_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    configs: Vec<ReferenceItConfig>,
}

/// Named reference and canonical IT configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceLibrary {
    note: Option<String>,
    configs: Vec<ReferenceItConfig>,
}

impl ReferenceLibrary {
    pub fn from_configs(configs: Vec<ReferenceItConfig>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for c in &configs {
            c.validate()?;
            if !names.insert(c.name.as_str()) {
                return Err(DcgenError::Validation(format!(
                    "duplicate config name `{}`",
                    c.name
                )));
            }
        }
        Ok(ReferenceLibrary {
            note: None,
            configs,
        })
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let file: LibraryFile = serde_json::from_str(json).map_err(|source| DcgenError::Parse {
            what: "reference library".into(),
            source,
        })?;
        check_schema_version(&file.schema_version)?;
        let mut lib = ReferenceLibrary::from_configs(file.configs)?;
        lib.note = file.note;
        Ok(lib)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ReferenceLibrary::from_json_str(&read_file(path.as_ref())?)
    }

    pub fn builtin() -> Self {
        ReferenceLibrary::from_json_str(DEFAULT_LIBRARY_JSON).expect("shipped library is valid")
    }

    pub fn configs(&self) -> &[ReferenceItConfig] {
        &self.configs
    }

    pub fn get(&self, name: &str) -> Option<&ReferenceItConfig> {
        self.configs.iter().find(|c| c.name == name)
    }

    pub fn lookup(&self, name: &str) -> Result<&ReferenceItConfig> {
        self.get(name)
            .ok_or_else(|| DcgenError::UnknownReference(name.to_string()))
    }

    /// The aggregated per-type model for a year, named `canonical-<type>-<year>`.
    pub fn canonical(&self, dc_type: DatacenterType, year: Year) -> Result<&ReferenceItConfig> {
        self.lookup(&canonical_name(dc_type, year))
    }

    pub fn to_json(&self) -> String {
        let file = LibraryFile {
            schema_version: SCHEMA_VERSION.into(),
            note: self.note.clone(),
            configs: self.configs.clone(),
        };
        serde_json::to_string_pretty(&file).expect("library serializes")
    }
}

pub fn canonical_name(dc_type: DatacenterType, year: Year) -> String {
    format!("canonical-{}-{}", dc_type.slug(), year.value())
}

/// Loads and validates a reference library file.
pub fn load_reference_library(path: impl AsRef<Path>) -> Result<ReferenceLibrary> {
    ReferenceLibrary::load(path)
}
