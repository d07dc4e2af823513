//! Datacenter hardware design generator: IT sizing, storage completion and
//! cooling/power equipment provisioning.

pub mod catalog;
pub mod error;
pub mod exact;
pub mod facility;
pub mod it_sizing;
pub mod scenario;
pub mod selector;
pub mod storage;

pub use catalog::{
    Catalog, DatacenterType, EquipmentClass, EquipmentModel, HeatSinkKind, NodeType, PodLayout,
    RackClassSpec, RackEntry, ReferenceItConfig, ReferenceLibrary, Year,
};
pub use error::{DcgenError, ErrorKind, Result};
pub use facility::{plan_facility, FacilityPlan, Redundancy, RedundancyPolicy};
pub use it_sizing::{size, ItDesign, SizingTarget};
pub use scenario::{
    run, sweep, sweep_csv, DesignDocument, Execution, HeatSinkChoice, ScenarioRequest,
};
pub use selector::Objective;
