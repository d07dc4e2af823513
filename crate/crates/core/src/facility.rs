//! Cooling-chain and power-chain sizing under N+r or xN/y redundancy.
//!
//! Pod-level gear (CDUs, PDUs) is counted per pod and multiplied by the pod
//! count. Site-level gear (chillers, the heat sink, UPSs, MSBs, generators) is
//! counted against the IT load; the electrical chain is counted a second time
//! against the draw of the installed cooling equipment.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{
    Catalog, EquipmentClass, EquipmentModel, HeatSinkKind, NodeType, Placement, PodLayout,
};
use crate::error::{DcgenError, Result};
use crate::exact::Exact;
use crate::it_sizing::{check_close, ItDesign};
use crate::selector::{select_by, Objective};

/// Redundancy scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Redundancy {
    /// N+r: `r` spare units on top of what the load needs.
    Additive { r: u32 },
    /// xN/y: every unit is loaded to at most y/x of its rating.
    Fractional { x: u32, y: u32 },
}

impl fmt::Display for Redundancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Redundancy::Additive { r } => write!(f, "N+{r}"),
            Redundancy::Fractional { x, y: 1 } => write!(f, "{x}N"),
            Redundancy::Fractional { x, y } => write!(f, "{x}N/{y}"),
        }
    }
}

impl FromStr for Redundancy {
    type Err = DcgenError;

    /// Accepts `n+R`, `n`, `XnY`, `Xn/Y` and `Xn`, case-insensitive.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            DcgenError::InvalidInput(format!(
                "cannot parse redundancy `{s}` (use e.g. n+1, 2n, 4n3)"
            ))
        };
        let lower = s.trim().to_ascii_lowercase();
        if lower == "n" {
            return Ok(Redundancy::Additive { r: 0 });
        }
        if let Some(r) = lower.strip_prefix("n+") {
            return r
                .parse()
                .map(|r| Redundancy::Additive { r })
                .map_err(|_| bad());
        }
        let (x, y) = lower.split_once('n').ok_or_else(bad)?;
        let x: u32 = x.parse().map_err(|_| bad())?;
        let y = y.strip_prefix('/').unwrap_or(y);
        let y: u32 = if y.is_empty() {
            1
        } else {
            y.parse().map_err(|_| bad())?
        };
        let red = Redundancy::Fractional { x, y };
        RedundancyPolicy {
            redundancy: red,
            safety_margin: 0.0,
        }
        .validate()?;
        Ok(red)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedundancyPolicy {
    pub redundancy: Redundancy,
    /// Fractional oversizing applied to demand before counting units.
    pub safety_margin: f64,
}

impl RedundancyPolicy {
    pub fn additive(r: u32, safety_margin: f64) -> Self {
        RedundancyPolicy {
            redundancy: Redundancy::Additive { r },
            safety_margin,
        }
    }

    pub fn fractional(x: u32, y: u32, safety_margin: f64) -> Self {
        RedundancyPolicy {
            redundancy: Redundancy::Fractional { x, y },
            safety_margin,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Redundancy::Fractional { x, y } = self.redundancy {
            if y < 1 || x < y {
                return Err(DcgenError::InvalidInput(format!(
                    "xN/y redundancy needs x >= y >= 1, got {x}N/{y}"
                )));
            }
        }
        if !(self.safety_margin.is_finite() && (0.0..=1.0).contains(&self.safety_margin)) {
            return Err(DcgenError::InvalidInput(format!(
                "safety margin must lie in [0, 1], got {}",
                self.safety_margin
            )));
        }
        Ok(())
    }

    fn spares(&self) -> u64 {
        match self.redundancy {
            Redundancy::Additive { r } => u64::from(r),
            Redundancy::Fractional { .. } => 0,
        }
    }

    fn margin_factor(&self) -> Exact {
        Exact::int(1) + Exact::from_f64(self.safety_margin)
    }
}

impl Default for RedundancyPolicy {
    fn default() -> Self {
        RedundancyPolicy::additive(1, 0.1)
    }
}

fn effective_exact(model: &EquipmentModel, policy: &RedundancyPolicy) -> Exact {
    let rated = Exact::from_f64(model.rated_capacity_kw);
    match policy.redundancy {
        Redundancy::Additive { .. } => rated,
        Redundancy::Fractional { x, y } => rated * Exact::ratio(i64::from(y), i64::from(x)),
    }
}

/// Capacity one unit can be counted on for under the policy, kW.
pub fn effective_unit_capacity(model: &EquipmentModel, policy: &RedundancyPolicy) -> f64 {
    effective_exact(model, policy).to_f64()
}

/// Units to cover `demand` (kW, before safety margin). Zero demand needs no units.
pub(crate) fn units_for_demand(
    demand: &Exact,
    model: &EquipmentModel,
    policy: &RedundancyPolicy,
) -> u64 {
    if !demand.is_positive() {
        return 0;
    }
    let load = policy.margin_factor() * demand.clone();
    load.ceil_div(&effective_exact(model, policy)) + policy.spares()
}

pub(crate) fn datacenter_units_exact(
    demand: &Exact,
    model: &EquipmentModel,
    policy: &RedundancyPolicy,
) -> u64 {
    units_for_demand(demand, model, policy)
}

fn check_unit_inputs(model: &EquipmentModel, policy: &RedundancyPolicy) -> Result<()> {
    policy.validate()?;
    if !(model.rated_capacity_kw.is_finite() && model.rated_capacity_kw > 0.0) {
        return Err(DcgenError::InvalidInput(format!(
            "model `{}` has zero effective capacity",
            model.id
        )));
    }
    Ok(())
}

/// CDUs or PDUs needed in one pod of identical racks.
pub fn pod_units(
    rack_peak_kw: f64,
    layout: &PodLayout,
    model: &EquipmentModel,
    policy: &RedundancyPolicy,
) -> Result<u64> {
    if !model.class.is_rack_level() {
        return Err(DcgenError::InvalidInput(format!(
            "{} is not pod-level equipment",
            model.class
        )));
    }
    check_unit_inputs(model, policy)?;
    if !(rack_peak_kw.is_finite() && rack_peak_kw > 0.0) {
        return Err(DcgenError::InvalidInput(
            "rack peak power must be positive".into(),
        ));
    }
    Ok(pod_units_exact(
        &Exact::from_f64(rack_peak_kw),
        layout,
        model,
        policy,
    ))
}

fn pod_units_exact(
    rack_kw: &Exact,
    layout: &PodLayout,
    model: &EquipmentModel,
    policy: &RedundancyPolicy,
) -> u64 {
    let pod_load = Exact::from(layout.racks_per_pod()) * rack_kw.clone();
    units_for_demand(&pod_load, model, policy)
}

/// Site-level units needed for a demand.
pub fn datacenter_units(
    demand_kw: f64,
    model: &EquipmentModel,
    policy: &RedundancyPolicy,
) -> Result<u64> {
    if model.class.is_rack_level() {
        return Err(DcgenError::InvalidInput(format!(
            "{} is not site-level equipment",
            model.class
        )));
    }
    check_unit_inputs(model, policy)?;
    if !(demand_kw.is_finite() && demand_kw >= 0.0) {
        return Err(DcgenError::InvalidInput(format!(
            "demand must be nonnegative, got {demand_kw}"
        )));
    }
    Ok(datacenter_units_exact(
        &Exact::from_f64(demand_kw),
        model,
        policy,
    ))
}

/// Who a class of equipment serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Serving {
    It,
    Facility,
    Both,
}

/// Pod-level provisioning for one rack class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PodGroup {
    pub node_type: NodeType,
    pub rack_peak_kw: f64,
    pub racks: u64,
    pub pods: u64,
    pub units_per_pod: u64,
}

/// Installed units of one equipment class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassUnits {
    pub model: EquipmentModel,
    /// Units sized against the IT load.
    pub it_units: u64,
    /// Units sized against the cooling equipment's own draw (electrical chain only).
    pub facility_units: u64,
    pub unit_count: u64,
    pub serving: Serving,
    pub it_demand_kw: f64,
    pub facility_demand_kw: f64,
    /// `(1 + λ) · unit_count · A`.
    pub gray_space_m2: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pods: Vec<PodGroup>,
}

/// Cooling and power provisioning for one IT design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilityPlan {
    pub per_class_units: BTreeMap<EquipmentClass, ClassUnits>,
    pub facility_peak_power_mw: f64,
    pub gray_space_indoor_m2: f64,
    pub gray_space_outdoor_m2: f64,
    pub heat_sink_kind: HeatSinkKind,
    pub policy: RedundancyPolicy,
    pub objective: Objective,
    pub pod_layout: PodLayout,
}

struct RackGroup {
    node_type: NodeType,
    rack_kw: Exact,
    rack_kw_f64: f64,
    racks: u64,
}

fn rack_groups(it: &ItDesign) -> Vec<RackGroup> {
    it.per_class
        .iter()
        .filter(|e| e.count > 0)
        .map(|e| RackGroup {
            node_type: e.spec.node_type,
            rack_kw: Exact::from_f64(e.spec.peak_power_kw),
            rack_kw_f64: e.spec.peak_power_kw,
            racks: e.count,
        })
        .collect()
}

/// Pods for a rack class: the class load over one full pod's load.
fn pods_for(group: &RackGroup, layout: &PodLayout) -> u64 {
    let class_kw = Exact::from(group.racks) * group.rack_kw.clone();
    let pod_kw = Exact::from(layout.racks_per_pod()) * group.rack_kw.clone();
    class_kw.ceil_div(&pod_kw)
}

fn pod_plan(
    groups: &[RackGroup],
    layout: &PodLayout,
    model: &EquipmentModel,
    policy: &RedundancyPolicy,
) -> Vec<PodGroup> {
    groups
        .iter()
        .map(|g| PodGroup {
            node_type: g.node_type,
            rack_peak_kw: g.rack_kw_f64,
            racks: g.racks,
            pods: pods_for(g, layout),
            units_per_pod: pod_units_exact(&g.rack_kw, layout, model, policy),
        })
        .collect()
}

fn pod_total(groups: &[PodGroup]) -> u64 {
    groups.iter().map(|g| g.pods * g.units_per_pod).sum()
}

fn candidates(catalog: &Catalog, class: EquipmentClass) -> Result<Vec<&EquipmentModel>> {
    let c = catalog.of_class(class);
    if c.is_empty() {
        Err(DcgenError::Validation(format!(
            "no models for class {class}"
        )))
    } else {
        Ok(c)
    }
}

fn class_units(
    model: &EquipmentModel,
    it_units: u64,
    facility_units: u64,
    it_demand: &Exact,
    facility_demand: &Exact,
    pods: Vec<PodGroup>,
) -> ClassUnits {
    let unit_count = it_units + facility_units;
    let serving = match (it_units > 0, facility_units > 0) {
        (_, false) => Serving::It,
        (false, true) => Serving::Facility,
        (true, true) => Serving::Both,
    };
    ClassUnits {
        model: model.clone(),
        it_units,
        facility_units,
        unit_count,
        serving,
        it_demand_kw: it_demand.to_f64(),
        facility_demand_kw: facility_demand.to_f64(),
        gray_space_m2: unit_count as f64 * model.gross_area_m2(),
        pods,
    }
}

/// Sizes the cooling and power chains for an IT design.
pub fn plan_facility(
    it: &ItDesign,
    catalog: &Catalog,
    layout: &PodLayout,
    policy: &RedundancyPolicy,
    heat_sink: HeatSinkKind,
    objective: Objective,
) -> Result<FacilityPlan> {
    policy.validate()?;
    let groups = rack_groups(it);
    let it_kw: Exact = groups
        .iter()
        .map(|g| Exact::from(g.racks) * g.rack_kw.clone())
        .sum();
    let none = Exact::zero();
    let mut units = BTreeMap::new();

    // Pod-level classes.
    for class in [EquipmentClass::Cdu, EquipmentClass::Pdu] {
        let cands = candidates(catalog, class)?;
        let (model, _) = select_by(&cands, objective, |m| {
            Ok(pod_total(&pod_plan(&groups, layout, m, policy)))
        })?;
        let pods = pod_plan(&groups, layout, model, policy);
        let n = pod_total(&pods);
        units.insert(class, class_units(model, n, 0, &it_kw, &none, pods));
    }

    // Chillers and the heat sink reject the full IT heat.
    for class in [EquipmentClass::Chiller, heat_sink.class()] {
        let cands = candidates(catalog, class)?;
        let (model, n) = select_by(&cands, objective, |m| {
            Ok(units_for_demand(&it_kw, m, policy))
        })?;
        units.insert(class, class_units(model, n, 0, &it_kw, &none, Vec::new()));
    }

    // Draw of every installed cooling unit, spares included.
    let cooling_kw: Exact = [
        EquipmentClass::Cdu,
        EquipmentClass::Chiller,
        heat_sink.class(),
    ]
    .iter()
    .map(|c| {
        let u: &ClassUnits = &units[c];
        Exact::from(u.unit_count) * Exact::from_f64(u.model.max_draw_kw)
    })
    .sum();

    for class in [
        EquipmentClass::Ups,
        EquipmentClass::Msb,
        EquipmentClass::Generator,
    ] {
        let cands = candidates(catalog, class)?;
        let count = |m: &EquipmentModel| {
            (
                units_for_demand(&it_kw, m, policy),
                units_for_demand(&cooling_kw, m, policy),
            )
        };
        let (model, _) = select_by(&cands, objective, |m| {
            let (a, b) = count(m);
            Ok(a + b)
        })?;
        let (a, b) = count(model);
        units.insert(
            class,
            class_units(model, a, b, &it_kw, &cooling_kw, Vec::new()),
        );
    }

    let (mut indoor, mut outdoor) = (0.0, 0.0);
    for u in units.values() {
        match u.model.placement {
            Placement::Indoor => indoor += u.gray_space_m2,
            Placement::Outdoor => outdoor += u.gray_space_m2,
        }
    }

    Ok(FacilityPlan {
        per_class_units: units,
        facility_peak_power_mw: cooling_kw.to_f64() / 1000.0,
        gray_space_indoor_m2: indoor,
        gray_space_outdoor_m2: outdoor,
        heat_sink_kind: heat_sink,
        policy: *policy,
        objective,
        pod_layout: *layout,
    })
}

impl FacilityPlan {
    pub fn gray_space_total_m2(&self) -> f64 {
        self.gray_space_indoor_m2 + self.gray_space_outdoor_m2
    }

    pub fn units(&self, class: EquipmentClass) -> Option<&ClassUnits> {
        self.per_class_units.get(&class)
    }

    /// Checks capacity coverage, pod bookkeeping, the spare-unit floor and the
    /// gray-space sums. `rel_tol` bounds float comparisons (use a loose value for
    /// plans read back from rounded JSON).
    pub fn verify(&self, rel_tol: f64) -> Result<()> {
        let fail = |msg: String| Err(DcgenError::Validation(msg));
        let policy = &self.policy;
        let margin = 1.0 + policy.safety_margin;
        let spares = policy.spares();
        let slack = 1.0 + rel_tol;

        for (class, u) in &self.per_class_units {
            if u.unit_count != u.it_units + u.facility_units {
                return fail(format!("{class}: unit_count does not add up"));
            }
            let eff = effective_unit_capacity(&u.model, policy);
            if class.is_rack_level() {
                if u.it_units != pod_total(&u.pods) {
                    return fail(format!("{class}: total differs from pods x units per pod"));
                }
                for g in &u.pods {
                    let load = margin * self.pod_layout.racks_per_pod() as f64 * g.rack_peak_kw;
                    if (g.units_per_pod - spares) as f64 * eff * slack < load {
                        return fail(format!(
                            "{class}: pod of {} racks under-provisioned",
                            g.node_type
                        ));
                    }
                    if g.pods as f64 * self.pod_layout.racks_per_pod() as f64 * slack
                        < g.racks as f64
                    {
                        return fail(format!("{class}: too few pods for {} racks", g.racks));
                    }
                    if g.units_per_pod < spares + 1 {
                        return fail(format!("{class}: fewer than r + 1 units per pod"));
                    }
                }
            } else {
                for (n, demand) in [
                    (u.it_units, u.it_demand_kw),
                    (u.facility_units, u.facility_demand_kw),
                ] {
                    if demand <= 0.0 {
                        continue;
                    }
                    if n < spares + 1 || (n - spares) as f64 * eff * slack < margin * demand {
                        return fail(format!("{class}: {n} units do not cover {demand} kW"));
                    }
                }
            }
            check_close(
                &format!("{class} gray space"),
                u.gray_space_m2,
                u.unit_count as f64 * u.model.gross_area_m2(),
                rel_tol,
            )?;
        }

        let (mut indoor, mut outdoor) = (0.0, 0.0);
        for u in self.per_class_units.values() {
            match u.model.placement {
                Placement::Indoor => indoor += u.gray_space_m2,
                Placement::Outdoor => outdoor += u.gray_space_m2,
            }
        }
        check_close(
            "indoor gray space",
            self.gray_space_indoor_m2,
            indoor,
            rel_tol,
        )?;
        check_close(
            "outdoor gray space",
            self.gray_space_outdoor_m2,
            outdoor,
            rel_tol,
        )?;

        let draw: f64 = [
            EquipmentClass::Cdu,
            EquipmentClass::Chiller,
            self.heat_sink_kind.class(),
        ]
        .iter()
        .filter_map(|c| self.per_class_units.get(c))
        .map(|u| u.unit_count as f64 * u.model.max_draw_kw)
        .sum();
        check_close(
            "facility power",
            self.facility_peak_power_mw,
            draw / 1000.0,
            rel_tol,
        )?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{DatacenterType, ReferenceLibrary, Year};
    use crate::it_sizing::size_by_racks;

    fn model(class: EquipmentClass, cap: f64) -> EquipmentModel {
        EquipmentModel {
            id: format!("{class}-{cap}"),
            class,
            rated_capacity_kw: cap,
            max_draw_kw: 0.02 * cap,
            footprint_m2: 2.0,
            access_factor: 0.5,
            placement: Placement::Indoor,
            heat_sink_kind: None,
        }
    }

    #[test]
    fn effective_capacity() {
        let m = model(EquipmentClass::Ups, 1000.0);
        assert_eq!(
            effective_unit_capacity(&m, &RedundancyPolicy::fractional(2, 1, 0.0)),
            500.0
        );
        assert_eq!(
            effective_unit_capacity(&m, &RedundancyPolicy::additive(1, 0.0)),
            1000.0
        );
        let m = model(EquipmentClass::Ups, 900.0);
        assert_eq!(
            effective_unit_capacity(&m, &RedundancyPolicy::fractional(4, 3, 0.0)),
            675.0
        );
    }

    #[test]
    fn pod_unit_examples() {
        let cdu = model(EquipmentClass::Cdu, 600.0);
        let layout = PodLayout::default();
        assert_eq!(
            pod_units(158.0, &layout, &cdu, &RedundancyPolicy::additive(1, 0.1)).unwrap(),
            6
        );
        assert_eq!(
            pod_units(
                158.0,
                &layout,
                &cdu,
                &RedundancyPolicy::fractional(2, 1, 0.1)
            )
            .unwrap(),
            10
        );
        let exact = model(EquipmentClass::Pdu, 1600.0);
        assert_eq!(
            pod_units(100.0, &layout, &exact, &RedundancyPolicy::additive(0, 0.0)).unwrap(),
            1
        );
        assert!(pod_units(
            100.0,
            &layout,
            &model(EquipmentClass::Chiller, 10.0),
            &RedundancyPolicy::default()
        )
        .is_err());
    }

    #[test]
    fn datacenter_unit_examples() {
        let ch = model(EquipmentClass::Chiller, 2500.0);
        assert_eq!(
            datacenter_units(48_530.0, &ch, &RedundancyPolicy::additive(2, 0.1)).unwrap(),
            24
        );
        assert_eq!(
            datacenter_units(48_530.0, &ch, &RedundancyPolicy::fractional(2, 1, 0.1)).unwrap(),
            43
        );
        assert_eq!(
            datacenter_units(7500.0, &ch, &RedundancyPolicy::additive(0, 0.0)).unwrap(),
            3
        );
        assert!(datacenter_units(
            10.0,
            &model(EquipmentClass::Cdu, 10.0),
            &RedundancyPolicy::default()
        )
        .is_err());
    }

    #[test]
    fn redundancy_parsing() {
        assert_eq!(
            "n+1".parse::<Redundancy>().unwrap(),
            Redundancy::Additive { r: 1 }
        );
        assert_eq!(
            "N+2".parse::<Redundancy>().unwrap(),
            Redundancy::Additive { r: 2 }
        );
        assert_eq!(
            "n".parse::<Redundancy>().unwrap(),
            Redundancy::Additive { r: 0 }
        );
        assert_eq!(
            "2n".parse::<Redundancy>().unwrap(),
            Redundancy::Fractional { x: 2, y: 1 }
        );
        assert_eq!(
            "4n3".parse::<Redundancy>().unwrap(),
            Redundancy::Fractional { x: 4, y: 3 }
        );
        assert_eq!(
            "4N/3".parse::<Redundancy>().unwrap(),
            Redundancy::Fractional { x: 4, y: 3 }
        );
        assert!("3n4".parse::<Redundancy>().is_err());
        assert!("n+x".parse::<Redundancy>().is_err());
        assert!("banana".parse::<Redundancy>().is_err());
        assert_eq!(Redundancy::Fractional { x: 4, y: 3 }.to_string(), "4N/3");
        assert_eq!(Redundancy::Fractional { x: 2, y: 1 }.to_string(), "2N");
    }

    #[test]
    fn policy_validation() {
        assert!(RedundancyPolicy::additive(1, 1.5).validate().is_err());
        assert!(RedundancyPolicy::additive(1, -0.1).validate().is_err());
        assert!(RedundancyPolicy::fractional(1, 2, 0.1).validate().is_err());
        assert!(RedundancyPolicy::fractional(0, 0, 0.1).validate().is_err());
    }

    fn single_catalog(cdu: f64, pdu: f64) -> Catalog {
        let mut models: Vec<EquipmentModel> = EquipmentClass::ALL
            .iter()
            .map(|&c| model(c, 10_000.0))
            .collect();
        models[0] = model(EquipmentClass::Cdu, cdu);
        models[1] = model(EquipmentClass::Pdu, pdu);
        Catalog::from_models(models).unwrap()
    }

    fn ai_design(n: u64) -> ItDesign {
        let lib = ReferenceLibrary::builtin();
        size_by_racks(
            lib.canonical(DatacenterType::AiTraining, Year::Y2024)
                .unwrap(),
            n,
        )
        .unwrap()
    }

    #[test]
    fn exact_fit_pod_is_minimal() {
        use crate::catalog::{RackClassSpec, RackEntry};
        let spec = RackClassSpec::new(NodeType::Gpu, 42, 100.0);
        let it = ItDesign {
            per_class: vec![RackEntry { spec, count: 16 }],
            total_racks: 16,
            it_peak_power_mw: 1.6,
            power_density_kw_m2: 100.0 / 1.8,
            white_space_m2: 16.0 * 1.8,
            area_per_rack_m2: 1.8,
            normalized_ru: 42,
        };
        let cat = single_catalog(1600.0, 1600.0);
        let plan = plan_facility(
            &it,
            &cat,
            &PodLayout::default(),
            &RedundancyPolicy::additive(0, 0.0),
            HeatSinkKind::Dry,
            Objective::Space,
        )
        .unwrap();
        assert_eq!(plan.units(EquipmentClass::Cdu).unwrap().unit_count, 1);
        assert_eq!(plan.units(EquipmentClass::Pdu).unwrap().unit_count, 1);
        plan.verify(1e-9).unwrap();
    }

    #[test]
    fn extra_spare_adds_per_pod_and_per_site() {
        let it = ai_design(1000);
        let cat = single_catalog(600.0, 300.0);
        let plan = |r| {
            plan_facility(
                &it,
                &cat,
                &PodLayout::default(),
                &RedundancyPolicy::additive(r, 0.1),
                HeatSinkKind::Evaporative,
                Objective::Space,
            )
            .unwrap()
        };
        let (a, b) = (plan(1), plan(2));
        for (class, ua) in &a.per_class_units {
            let ub = &b.per_class_units[class];
            let expected = if class.is_rack_level() {
                ua.pods.iter().map(|g| g.pods).sum::<u64>()
            } else {
                u64::from(ua.it_units > 0) + u64::from(ua.facility_units > 0)
            };
            assert_eq!(ub.unit_count - ua.unit_count, expected, "{class}");
        }
        a.verify(1e-9).unwrap();
        b.verify(1e-9).unwrap();
    }

    #[test]
    fn heat_sink_exclusive() {
        let it = ai_design(500);
        let cat = Catalog::builtin();
        for sink in [HeatSinkKind::Dry, HeatSinkKind::Evaporative] {
            let plan = plan_facility(
                &it,
                &cat,
                &PodLayout::default(),
                &RedundancyPolicy::default(),
                sink,
                Objective::Power,
            )
            .unwrap();
            assert!(plan.units(sink.class()).is_some());
            let other = match sink {
                HeatSinkKind::Dry => EquipmentClass::EvaporativeTower,
                HeatSinkKind::Evaporative => EquipmentClass::DryCooler,
            };
            assert!(plan.units(other).is_none());
            assert_eq!(
                plan.units(EquipmentClass::Ups).unwrap().serving,
                Serving::Both
            );
            plan.verify(1e-9).unwrap();
        }
    }

    #[test]
    fn ten_thousand_rack_plan_with_shipped_catalog() {
        let it = ai_design(10_000);
        let plan = plan_facility(
            &it,
            &Catalog::builtin(),
            &PodLayout::default(),
            &RedundancyPolicy::default(),
            HeatSinkKind::Dry,
            Objective::Space,
        )
        .unwrap();
        plan.verify(1e-12).unwrap();
        let gpu_pods = &plan.units(EquipmentClass::Cdu).unwrap().pods[0];
        assert_eq!(gpu_pods.pods, 8876u64.div_ceil(16));
        assert!(plan.gray_space_outdoor_m2 > 0.0 && plan.gray_space_indoor_m2 > 0.0);
    }

    use proptest::prelude::*;

    /// Smallest n with (n - r)·c·y·100 ≥ (100 + s)·d·x, by counting up.
    /// Demand and capacity are in watts, the margin in percent.
    fn oracle(d: u64, c: u64, s: u64, r: u64, x: u64, y: u64) -> u64 {
        if d == 0 {
            return 0;
        }
        let need = u128::from(100 + s) * u128::from(d) * u128::from(x);
        let mut n = r;
        while u128::from(n - r) * u128::from(c) * u128::from(y) * 100 < need {
            n += 1;
        }
        n
    }

    fn site_model(c_w: u64) -> EquipmentModel {
        model(EquipmentClass::Chiller, c_w as f64 / 1000.0)
    }

    fn policy_strategy() -> impl Strategy<Value = (u64, u64, u64, u64)> {
        // (sm %, r, x, y); r is zero for fractional policies.
        prop_oneof![
            (0u64..=50, 0u64..=3).prop_map(|(s, r)| (s, r, 1, 1)),
            (0u64..=50, 1u64..=4, 1u64..=4)
                .prop_filter_map("x >= y", |(s, x, y)| (x >= y).then_some((s, 0, x, y))),
        ]
    }

    fn make_policy(s: u64, r: u64, x: u64, y: u64) -> RedundancyPolicy {
        let sm = s as f64 / 100.0;
        if x == 1 && y == 1 {
            RedundancyPolicy::additive(r as u32, sm)
        } else {
            RedundancyPolicy::fractional(x as u32, y as u32, sm)
        }
    }

    proptest! {
        #[test]
        fn closed_form_matches_counting(c in 1_000u64..5_000_000, k in 0u64..=20_000, p in policy_strategy()) {
            let d = c * k / 1000;
            let (s, r, x, y) = p;
            let got = datacenter_units(d as f64 / 1000.0, &site_model(c), &make_policy(s, r, x, y)).unwrap();
            prop_assert_eq!(got, oracle(d, c, s, r, x, y));
        }

        #[test]
        fn counts_monotone(c in 1_000u64..5_000_000, d in 1u64..50_000_000, s in 0u64..=49, r in 0u32..=3) {
            let m = site_model(c);
            let demand = d as f64 / 1000.0;
            let n = |p: RedundancyPolicy| datacenter_units(demand, &m, &p).unwrap();
            let sm = s as f64 / 100.0;
            prop_assert!(n(RedundancyPolicy::additive(r, sm)) <= n(RedundancyPolicy::additive(r + 1, sm)));
            prop_assert!(n(RedundancyPolicy::additive(r, sm)) <= n(RedundancyPolicy::additive(r, sm + 0.01)));
            prop_assert!(n(RedundancyPolicy::fractional(4, 3, sm)) <= n(RedundancyPolicy::fractional(3, 2, sm)));
            prop_assert!(n(RedundancyPolicy::fractional(3, 2, sm)) <= n(RedundancyPolicy::fractional(2, 1, sm)));
        }

        #[test]
        fn two_n_doubling_bound(c in 1_000u64..5_000_000, d in 1u64..50_000_000, s in 0u64..=50) {
            let m = site_model(c);
            let sm = s as f64 / 100.0;
            let demand = d as f64 / 1000.0;
            let n0 = datacenter_units(demand, &m, &RedundancyPolicy::additive(0, sm)).unwrap();
            let n2 = datacenter_units(demand, &m, &RedundancyPolicy::fractional(2, 1, sm)).unwrap();
            prop_assert!(n2 + 1 >= 2 * n0 && n2 <= 2 * n0);
        }

        #[test]
        fn plans_hold_invariants(racks in 4u64..30_000, year in 0usize..3, t in 0usize..4, p in policy_strategy(), dry: bool, power: bool) {
            let lib = ReferenceLibrary::builtin();
            let cfg = lib.canonical(DatacenterType::ALL[t], Year::ALL[year]).unwrap();
            let it = size_by_racks(cfg, racks).unwrap();
            let (s, r, x, y) = p;
            let sink = if dry { HeatSinkKind::Dry } else { HeatSinkKind::Evaporative };
            let obj = if power { Objective::Power } else { Objective::Space };
            let plan = plan_facility(&it, &Catalog::builtin(), &PodLayout::default(), &make_policy(s, r, x, y), sink, obj).unwrap();
            plan.verify(1e-9).unwrap();
            let total: f64 = plan.per_class_units.values().map(|u| u.gray_space_m2).sum();
            prop_assert!((plan.gray_space_total_m2() - total).abs() <= 1e-9 * total);
            for u in plan.per_class_units.values() {
                prop_assert!(u.unit_count >= 1);
                if u.model.class.is_rack_level() {
                    prop_assert_eq!(u.unit_count, u.pods.iter().map(|g| g.pods * g.units_per_pod).sum::<u64>());
                }
            }
        }
    }
}
