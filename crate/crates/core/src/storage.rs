//! Storage rack estimation for configurations whose source data omits storage.
//!
//! Four rules are available: a volume rule, a power-share rule for AI training
//! (storage is 4.2 % of IT power), an IOPS rule for inference (404 IOPS per
//! TFLOPS), and a power-share rule for cloud (18 %). All reference one 1U
//! storage node type, filled one node per rack unit.

use serde::{Deserialize, Serialize};

use crate::catalog::{DatacenterType, NodeType, RackClassSpec, RackEntry, ReferenceItConfig};
use crate::error::{DcgenError, Result};
use crate::exact::Exact;

/// Storage share of IT power in AI datacenters, as a fraction.
pub const AI_STORAGE_POWER_SHARE: f64 = 0.042;
/// Storage share of IT power in cloud datacenters, as a fraction.
pub const CLOUD_STORAGE_POWER_SHARE: f64 = 0.18;
/// Storage IOPS needed per TFLOPS of inference compute.
pub const IOPS_PER_TFLOPS: f64 = 404.0;

/// The reference 1U storage node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageNodeModel {
    pub capacity_tb_per_node: f64,
    pub peak_power_w_ai: f64,
    pub peak_power_w_cloud: f64,
    pub iops_per_node: f64,
    pub ru_per_node: u32,
}

impl Default for StorageNodeModel {
    fn default() -> Self {
        StorageNodeModel {
            capacity_tb_per_node: 8.0 * 6.4,
            peak_power_w_ai: 708.0,
            peak_power_w_cloud: 438.0,
            iops_per_node: 8.0 * 900_000.0,
            ru_per_node: 1,
        }
    }
}

impl StorageNodeModel {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("capacity_tb_per_node", self.capacity_tb_per_node),
            ("peak_power_w_ai", self.peak_power_w_ai),
            ("peak_power_w_cloud", self.peak_power_w_cloud),
            ("iops_per_node", self.iops_per_node),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(DcgenError::InvalidInput(format!(
                    "storage node {name} must be positive"
                )));
            }
        }
        if self.ru_per_node == 0 {
            return Err(DcgenError::InvalidInput(
                "storage node ru_per_node must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Nodes that fit in a rack of the given height.
    fn nodes_per_rack(&self, ru_rack: u32) -> Exact {
        Exact::ratio(i64::from(ru_rack), i64::from(self.ru_per_node))
    }

    fn node_kw(&self, regime: StorageRegime) -> Exact {
        let w = match regime {
            StorageRegime::Ai => self.peak_power_w_ai,
            StorageRegime::Cloud => self.peak_power_w_cloud,
        };
        Exact::from_f64(w) / Exact::int(1000)
    }
}

/// Which node power figure applies: AI datacenters run both CPUs of the
/// storage node flat out, cloud ones only one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorageRegime {
    Ai,
    Cloud,
}

impl StorageRegime {
    pub fn for_type(dc_type: DatacenterType) -> Self {
        match dc_type {
            DatacenterType::Cloud => StorageRegime::Cloud,
            _ => StorageRegime::Ai,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<Exact> {
    if v.is_finite() && v > 0.0 {
        Ok(Exact::from_f64(v))
    } else {
        Err(DcgenError::InvalidInput(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn positive_int(name: &str, v: u64) -> Result<Exact> {
    if v > 0 {
        Ok(Exact::from(v))
    } else {
        Err(DcgenError::InvalidInput(format!("{name} must be positive")))
    }
}

/// Storage racks needed to hold a total volume.
pub fn storage_racks_from_volume(
    total_storage_tb: f64,
    ru_rack: u32,
    node: &StorageNodeModel,
) -> Result<u64> {
    let volume = positive("total_storage_tb", total_storage_tb)?;
    positive_int("ru_rack", u64::from(ru_rack))?;
    node.validate()?;
    let per_rack = Exact::from_f64(node.capacity_tb_per_node) * node.nodes_per_rack(ru_rack);
    Ok(volume.ceil_div(&per_rack))
}

/// Storage power implied by the AI power-share rule, kW.
pub fn storage_power_ai_rule_kw(compute_rack_count: u64, compute_rack_peak_kw: f64) -> Result<f64> {
    Ok(ai_rule_power(compute_rack_count, compute_rack_peak_kw)?.to_f64())
}

fn ai_rule_power(compute_rack_count: u64, compute_rack_peak_kw: f64) -> Result<Exact> {
    let racks = positive_int("compute_rack_count", compute_rack_count)?;
    let kw = positive("compute_rack_peak_kw", compute_rack_peak_kw)?;
    let share = Exact::from_f64(AI_STORAGE_POWER_SHARE);
    Ok(&(&share * &(racks * kw)) / &(Exact::int(1) - share))
}

/// Storage racks sized so storage draws 4.2 % of total IT power.
pub fn storage_racks_ai_power_rule(
    compute_rack_count: u64,
    compute_rack_peak_kw: f64,
    ru_rack: u32,
    node: &StorageNodeModel,
) -> Result<u64> {
    let demand = ai_rule_power(compute_rack_count, compute_rack_peak_kw)?;
    positive_int("ru_rack", u64::from(ru_rack))?;
    node.validate()?;
    let rack_kw = node.nodes_per_rack(ru_rack) * node.node_kw(StorageRegime::Ai);
    Ok(demand.ceil_div(&rack_kw))
}

/// Storage racks needed to supply 404 IOPS per TFLOPS of compute.
pub fn storage_racks_inference_iops_rule(
    compute_capability_tflops: f64,
    ru_rack: u32,
    node: &StorageNodeModel,
) -> Result<u64> {
    let tflops = positive("compute_capability_tflops", compute_capability_tflops)?;
    positive_int("ru_rack", u64::from(ru_rack))?;
    node.validate()?;
    let demand = tflops * Exact::from_f64(IOPS_PER_TFLOPS);
    Ok(demand.ceil_div(&rack_iops(ru_rack, node)))
}

fn rack_iops(ru_rack: u32, node: &StorageNodeModel) -> Exact {
    Exact::from_f64(node.iops_per_node) * node.nodes_per_rack(ru_rack)
}

/// How many compute racks of a given capability one storage rack can serve
/// under the IOPS rule, rounded to the nearest rack.
pub fn compute_racks_served_per_storage_rack(
    tflops_per_compute_rack: f64,
    ru_rack: u32,
    node: &StorageNodeModel,
) -> Result<u64> {
    let tflops = positive("tflops_per_compute_rack", tflops_per_compute_rack)?;
    positive_int("ru_rack", u64::from(ru_rack))?;
    node.validate()?;
    let served = rack_iops(ru_rack, node) / (tflops * Exact::from_f64(IOPS_PER_TFLOPS));
    Ok(served.round_half_up_u64())
}

/// Peak power of a storage rack filled with reference nodes, kW.
pub fn storage_rack_peak_kw(ru_rack: u32, node: &StorageNodeModel, regime: StorageRegime) -> f64 {
    (node.nodes_per_rack(ru_rack) * node.node_kw(regime)).to_f64()
}

/// Storage racks sized so storage draws 18 % of total IT power.
pub fn storage_racks_cloud_power_rule(
    cpu_rack_count: u64,
    cpu_rack_peak_kw: f64,
    ru_rack: u32,
    node: &StorageNodeModel,
) -> Result<u64> {
    let racks = positive_int("cpu_rack_count", cpu_rack_count)?;
    let kw = positive("cpu_rack_peak_kw", cpu_rack_peak_kw)?;
    positive_int("ru_rack", u64::from(ru_rack))?;
    node.validate()?;
    let share = Exact::from_f64(CLOUD_STORAGE_POWER_SHARE);
    let demand = &(&share * &(racks * kw)) / &(Exact::int(1) - share.clone());
    let rack_kw = node.nodes_per_rack(ru_rack) * node.node_kw(StorageRegime::Cloud);
    Ok(demand.ceil_div(&rack_kw))
}

/// The inverse cloud reading: CPU racks that pair with a single storage rack
/// so that storage stays at 18 % of IT power.
pub fn cloud_compute_racks_per_storage_rack(
    cpu_rack_peak_kw: f64,
    ru_rack: u32,
    node: &StorageNodeModel,
) -> Result<u64> {
    let kw = positive("cpu_rack_peak_kw", cpu_rack_peak_kw)?;
    positive_int("ru_rack", u64::from(ru_rack))?;
    node.validate()?;
    let share = Exact::from_f64(CLOUD_STORAGE_POWER_SHARE);
    let rack_kw = node.nodes_per_rack(ru_rack) * node.node_kw(StorageRegime::Cloud);
    let compute_kw = &(&(Exact::int(1) - share.clone()) * &rack_kw) / &share;
    Ok(compute_kw.ceil_div(&kw))
}

/// Which rule produced an estimated storage entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorageRule {
    Volume,
    InferenceIops,
    AiPowerShare,
    CloudPowerShare,
}

/// Adds an estimated storage entry to a configuration that has none.
///
/// Configurations that already list storage racks, or keep their storage
/// node-local, come back unchanged with `None`. Otherwise the rule is picked in
/// order: volume when a total is known, IOPS for inference configs with a known
/// compute capability, then the power-share rule for the datacenter type.
/// Power-share rules take every compute class together.
pub fn complete_storage(
    config: &ReferenceItConfig,
    node: &StorageNodeModel,
) -> Result<(ReferenceItConfig, Option<StorageRule>)> {
    if config.local_storage || config.entry(NodeType::Storage).is_some() {
        return Ok((config.clone(), None));
    }
    let ru = config
        .entries
        .iter()
        .map(|e| e.spec.ru_height)
        .max()
        .expect("validated config has entries");
    let regime = StorageRegime::for_type(config.dc_type);
    let compute_kw: f64 = config.peak_power_kw();

    let (count, rule) = if let Some(tb) = config.total_storage_tb {
        (
            storage_racks_from_volume(tb, ru, node)?,
            StorageRule::Volume,
        )
    } else if let (DatacenterType::AiInference, Some(tflops)) =
        (config.dc_type, config.compute_capability_tflops)
    {
        (
            storage_racks_inference_iops_rule(tflops, ru, node)?,
            StorageRule::InferenceIops,
        )
    } else if config.dc_type == DatacenterType::Cloud {
        (
            storage_racks_cloud_power_rule(1, compute_kw, ru, node)?,
            StorageRule::CloudPowerShare,
        )
    } else {
        (
            storage_racks_ai_power_rule(1, compute_kw, ru, node)?,
            StorageRule::AiPowerShare,
        )
    };

    let mut out = config.clone();
    out.entries.push(RackEntry {
        spec: RackClassSpec::new(
            NodeType::Storage,
            ru,
            storage_rack_peak_kw(ru, node, regime),
        ),
        count,
    });
    Ok((out, Some(rule)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{ReferenceLibrary, Year};
    use approx::assert_relative_eq;

    fn node() -> StorageNodeModel {
        StorageNodeModel::default()
    }

    #[test]
    fn volume_rule() {
        assert_eq!(
            storage_racks_from_volume(500_000.0, 48, &node()).unwrap(),
            204
        );
        assert_eq!(storage_racks_from_volume(51.2, 1, &node()).unwrap(), 1);
        assert_eq!(
            storage_racks_from_volume(230_000.0, 42, &node()).unwrap(),
            107
        );
        assert!(storage_racks_from_volume(0.0, 42, &node()).is_err());
        assert!(storage_racks_from_volume(-1.0, 42, &node()).is_err());
        assert!(storage_racks_from_volume(10.0, 0, &node()).is_err());
    }

    #[test]
    fn ai_power_rule() {
        let kw = storage_power_ai_rule_kw(8, 120.0).unwrap();
        assert_eq!((kw * 10.0).round() / 10.0, 42.1);
        assert_eq!(
            storage_racks_ai_power_rule(8, 120.0, 42, &node()).unwrap(),
            2
        );
        let kw = storage_power_ai_rule_kw(1, 600.0).unwrap();
        assert_eq!((kw * 10.0).round() / 10.0, 26.3);
        assert_eq!(
            storage_racks_ai_power_rule(1, 600.0, 42, &node()).unwrap(),
            1
        );
        assert_eq!(
            storage_racks_ai_power_rule(1, 0.708, 1, &node()).unwrap(),
            1
        );
        assert!(storage_racks_ai_power_rule(0, 120.0, 42, &node()).is_err());
    }

    #[test]
    fn iops_rule() {
        assert_eq!(
            compute_racks_served_per_storage_rack(63_300.0, 48, &node()).unwrap(),
            14
        );
        assert_eq!(
            storage_racks_inference_iops_rule(18_100_000.0, 40, &node()).unwrap(),
            26
        );
        assert_eq!(
            storage_racks_inference_iops_rule(1.0, 42, &node()).unwrap(),
            1
        );
        assert!(storage_racks_inference_iops_rule(0.0, 42, &node()).is_err());
    }

    #[test]
    fn iops_served_ratios_for_42u_systems() {
        // IBM Gen AI, SR670 V2 and XE7745 per-rack capabilities.
        assert_eq!(
            compute_racks_served_per_storage_rack(30_000.0, 42, &node()).unwrap(),
            25
        );
        assert_eq!(
            compute_racks_served_per_storage_rack(2_150.0, 42, &node()).unwrap(),
            348
        );
        assert_eq!(
            compute_racks_served_per_storage_rack(17_500.0, 42, &node()).unwrap(),
            43
        );
    }

    #[test]
    fn rack_power() {
        assert_relative_eq!(
            storage_rack_peak_kw(42, &node(), StorageRegime::Ai),
            29.736,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            storage_rack_peak_kw(42, &node(), StorageRegime::Cloud),
            18.396,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            storage_rack_peak_kw(48, &node(), StorageRegime::Ai),
            33.984,
            epsilon = 1e-12
        );
        assert_eq!(
            (storage_rack_peak_kw(48, &node(), StorageRegime::Ai)).round(),
            34.0
        );
    }

    #[test]
    fn cloud_rule_follows_formula() {
        assert_eq!(
            storage_racks_cloud_power_rule(10, 9.0, 42, &node()).unwrap(),
            2
        );
        assert_eq!(
            storage_racks_cloud_power_rule(5, 17.6, 42, &node()).unwrap(),
            2
        );
        assert_eq!(
            storage_racks_cloud_power_rule(19, 5.0, 46, &node()).unwrap(),
            2
        );
    }

    #[test]
    fn cloud_inverse_reproduces_reference_pairings() {
        assert_eq!(
            cloud_compute_racks_per_storage_rack(9.0, 42, &node()).unwrap(),
            10
        );
        assert_eq!(
            cloud_compute_racks_per_storage_rack(17.6, 42, &node()).unwrap(),
            5
        );
        assert_eq!(
            cloud_compute_racks_per_storage_rack(5.0, 46, &node()).unwrap(),
            19
        );
    }

    #[test]
    fn completion_dispatch() {
        let lib = ReferenceLibrary::builtin();
        let base = lib
            .canonical(DatacenterType::AiTraining, Year::Y2024)
            .unwrap();

        let (same, rule) = complete_storage(base, &node()).unwrap();
        assert_eq!(rule, None);
        assert_eq!(&same, base);

        let mut no_storage = base.clone();
        no_storage
            .entries
            .retain(|e| e.spec.node_type != NodeType::Storage);
        let (done, rule) = complete_storage(&no_storage, &node()).unwrap();
        assert_eq!(rule, Some(StorageRule::AiPowerShare));
        let s = done.entry(NodeType::Storage).unwrap();
        assert_eq!(
            s.count,
            storage_racks_ai_power_rule(300, 158.0, 42, &node()).unwrap()
        );

        no_storage.total_storage_tb = Some(230_000.0);
        let (done, rule) = complete_storage(&no_storage, &node()).unwrap();
        assert_eq!(rule, Some(StorageRule::Volume));
        assert_eq!(done.entry(NodeType::Storage).unwrap().count, 107);

        let inf = lib.lookup("chatgpt").unwrap();
        let mut inf = inf.clone();
        inf.entries
            .retain(|e| e.spec.node_type != NodeType::Storage);
        let (done, rule) = complete_storage(&inf, &node()).unwrap();
        assert_eq!(rule, Some(StorageRule::InferenceIops));
        assert_eq!(done.entry(NodeType::Storage).unwrap().count, 26);

        let mut cloud = lib
            .canonical(DatacenterType::Cloud, Year::Y2024)
            .unwrap()
            .clone();
        cloud
            .entries
            .retain(|e| e.spec.node_type != NodeType::Storage);
        let (done, rule) = complete_storage(&cloud, &node()).unwrap();
        assert_eq!(rule, Some(StorageRule::CloudPowerShare));
        let s = done.entry(NodeType::Storage).unwrap();
        assert_relative_eq!(s.spec.peak_power_kw, 18.396, epsilon = 1e-9);
        assert!(done.validate().is_ok());

        let local = lib.lookup("el-capitan").unwrap();
        assert_eq!(complete_storage(local, &node()).unwrap().1, None);
    }
}
