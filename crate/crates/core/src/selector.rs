//! Per-class equipment choice under a space or power objective.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{EquipmentClass, EquipmentModel};
use crate::error::{DcgenError, Result};
use crate::exact::Exact;
use crate::facility::{datacenter_units_exact, RedundancyPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Space,
    Power,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Space => "space",
            Objective::Power => "power",
        })
    }
}

impl FromStr for Objective {
    type Err = DcgenError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "space" => Ok(Objective::Space),
            "power" => Ok(Objective::Power),
            other => Err(DcgenError::InvalidInput(format!(
                "unknown objective `{other}`"
            ))),
        }
    }
}

/// Gross floor area of `units` installed units, `units · (1 + λ) · A`.
pub fn space_score(model: &EquipmentModel, units: u64) -> Exact {
    Exact::from(units)
        * (Exact::int(1) + Exact::from_f64(model.access_factor))
        * Exact::from_f64(model.footprint_m2)
}

/// Peak electrical draw of `units` installed units.
pub fn power_score(model: &EquipmentModel, units: u64) -> Exact {
    Exact::from(units) * Exact::from_f64(model.max_draw_kw)
}

fn compare(objective: Objective, a: (&EquipmentModel, u64), b: (&EquipmentModel, u64)) -> Ordering {
    let space = space_score(a.0, a.1).cmp(&space_score(b.0, b.1));
    let primary = match objective {
        Objective::Space => space,
        Objective::Power => power_score(a.0, a.1)
            .cmp(&power_score(b.0, b.1))
            .then(space),
    };
    primary
        .then(a.1.cmp(&b.1))
        .then_with(|| a.0.id.cmp(&b.0.id))
}

/// Picks the candidate minimizing the objective, given a function that says
/// how many units of a candidate are needed.
///
/// Ties fall back to the space score (for the power objective), then fewer
/// units, then the lexicographically smallest id.
pub fn select_by<'a, F>(
    candidates: &[&'a EquipmentModel],
    objective: Objective,
    mut units_for: F,
) -> Result<(&'a EquipmentModel, u64)>
where
    F: FnMut(&EquipmentModel) -> Result<u64>,
{
    let mut best: Option<(&EquipmentModel, u64)> = None;
    for &model in candidates {
        let units = units_for(model)?;
        best = match best {
            Some(b) if compare(objective, b, (model, units)) != Ordering::Greater => Some(b),
            _ => Some((model, units)),
        };
    }
    best.ok_or_else(|| DcgenError::InvalidInput("no candidate models to select from".into()))
}

/// Chooses a site-level model and unit count for a demand.
pub fn select_model(
    class: EquipmentClass,
    demand_kw: f64,
    candidates: &[EquipmentModel],
    policy: &RedundancyPolicy,
    objective: Objective,
) -> Result<(EquipmentModel, u64)> {
    if candidates.is_empty() {
        return Err(DcgenError::InvalidInput(format!(
            "no candidate models for class {class}"
        )));
    }
    if let Some(m) = candidates.iter().find(|m| m.class != class) {
        return Err(DcgenError::InvalidInput(format!(
            "model `{}` is not of class {class}",
            m.id
        )));
    }
    if !(demand_kw.is_finite() && demand_kw >= 0.0) {
        return Err(DcgenError::InvalidInput(format!(
            "demand must be nonnegative, got {demand_kw}"
        )));
    }
    let demand = Exact::from_f64(demand_kw);
    let refs: Vec<&EquipmentModel> = candidates.iter().collect();
    let (m, units) = select_by(&refs, objective, |m| {
        Ok(datacenter_units_exact(&demand, m, policy))
    })?;
    Ok((m.clone(), units))
}
