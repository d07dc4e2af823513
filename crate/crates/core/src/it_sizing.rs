//! IT layout generation from a rack-count or an electrical-power target.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{RackClassSpec, RackEntry, ReferenceItConfig};
use crate::error::{DcgenError, Result};
use crate::exact::Exact;

/// Rack height that configurations are normalized to unless overridden.
pub const DEFAULT_RACK_UNITS: u32 = 42;

/// What the generated datacenter must hit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum SizingTarget {
    RackCount(u64),
    PowerMw(f64),
}

impl SizingTarget {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SizingTarget::RackCount(0) => Err(DcgenError::InvalidInput(
                "rack target must be positive".into(),
            )),
            SizingTarget::PowerMw(p) if !(p.is_finite() && p > 0.0) => Err(
                DcgenError::InvalidInput(format!("power target must be positive, got {p}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SizingTarget::RackCount(_) => "racks",
            SizingTarget::PowerMw(_) => "power_mw",
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            SizingTarget::RackCount(n) => n as f64,
            SizingTarget::PowerMw(p) => p,
        }
    }
}

impl fmt::Display for SizingTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizingTarget::RackCount(n) => write!(f, "{n} racks"),
            SizingTarget::PowerMw(p) => write!(f, "{p} MW"),
        }
    }
}

/// Generated IT layout and its metrics.
///
/// `power_density_kw_m2` is the density of the reference mix, which every
/// design scaled from that reference shares regardless of its size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItDesign {
    pub per_class: Vec<RackEntry>,
    pub total_racks: u64,
    pub it_peak_power_mw: f64,
    pub power_density_kw_m2: f64,
    pub white_space_m2: f64,
    pub area_per_rack_m2: f64,
    pub normalized_ru: u32,
}

impl ItDesign {
    /// Highest per-rack peak power among the classes present.
    pub fn max_rack_kw(&self) -> f64 {
        self.per_class
            .iter()
            .map(|e| e.spec.peak_power_kw)
            .fold(0.0, f64::max)
    }

    /// Checks the bookkeeping invariants to relative tolerance `rel_tol`.
    pub fn validate(&self, rel_tol: f64) -> Result<()> {
        let sum: u64 = self.per_class.iter().map(|e| e.count).sum();
        if sum != self.total_racks {
            return Err(DcgenError::Validation(format!(
                "class counts sum to {sum}, total_racks is {}",
                self.total_racks
            )));
        }
        let power: f64 = self
            .per_class
            .iter()
            .map(|e| e.count as f64 * e.spec.peak_power_kw)
            .sum::<f64>()
            / 1000.0;
        check_close("it_peak_power_mw", self.it_peak_power_mw, power, rel_tol)?;
        let space = self.total_racks as f64 * self.area_per_rack_m2;
        check_close("white_space_m2", self.white_space_m2, space, rel_tol)?;
        Ok(())
    }
}

pub(crate) fn check_close(what: &str, got: f64, want: f64, rel_tol: f64) -> Result<()> {
    let scale = want.abs().max(got.abs()).max(f64::MIN_POSITIVE);
    if (got - want).abs() <= rel_tol * scale {
        Ok(())
    } else {
        Err(DcgenError::Validation(format!(
            "{what} is {got}, expected {want}"
        )))
    }
}

/// Rescales a rack class to a common rack height. HPC racks additionally get
/// their peak power cut to two thirds and lose the HPC flag.
pub fn normalize_rack(spec: &RackClassSpec, target_ru: u32) -> RackClassSpec {
    assert!(target_ru >= 1, "target rack height must be at least 1U");
    let mut power = if target_ru == spec.ru_height {
        spec.peak_power_kw
    } else {
        f64::from(target_ru) / f64::from(spec.ru_height) * spec.peak_power_kw
    };
    if spec.is_hpc {
        power *= 2.0 / 3.0;
    }
    RackClassSpec {
        node_type: spec.node_type,
        ru_height: target_ru,
        peak_power_kw: power,
        is_hpc: false,
        pflops: spec.pflops,
    }
}

/// Normalizes every class of a configuration.
pub fn normalize_config(config: &ReferenceItConfig, target_ru: u32) -> ReferenceItConfig {
    let mut out = config.clone();
    for e in &mut out.entries {
        e.spec = normalize_rack(&e.spec, target_ru);
    }
    out
}

/// Peak IT power per unit of white space for the reference mix, kW/m².
pub fn power_density(config: &ReferenceItConfig) -> f64 {
    config.peak_power_kw() / (config.area_per_rack_m2 * config.total_racks() as f64)
}

/// Splits `n_rack` across classes in proportion to the reference counts.
///
/// Largest-remainder apportionment: floors first, leftover racks go to the
/// largest fractional parts, ties to the earlier entry. Integer arithmetic
/// throughout.
pub fn apportion(weights: &[u64], n_rack: u64) -> Vec<u64> {
    let total: u128 = weights.iter().map(|&w| u128::from(w)).sum();
    assert!(total > 0, "apportionment needs a positive total weight");
    let n = u128::from(n_rack);
    let mut counts: Vec<u64> = Vec::with_capacity(weights.len());
    let mut remainders: Vec<(u128, usize)> = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let share = n * u128::from(w);
        counts.push((share / total) as u64);
        remainders.push((share % total, i));
    }
    let assigned: u64 = counts.iter().sum();
    let leftover = (n_rack - assigned) as usize;
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(leftover) {
        counts[i] += 1;
    }
    counts
}

fn build_design(config: &ReferenceItConfig, counts: Vec<u64>) -> ItDesign {
    let per_class: Vec<RackEntry> = config
        .entries
        .iter()
        .zip(counts)
        .map(|(e, count)| RackEntry {
            spec: e.spec.clone(),
            count,
        })
        .collect();
    let total_racks: u64 = per_class.iter().map(|e| e.count).sum();
    let it_kw: f64 = per_class
        .iter()
        .map(|e| e.count as f64 * e.spec.peak_power_kw)
        .sum();
    let normalized_ru = config
        .entries
        .iter()
        .map(|e| e.spec.ru_height)
        .max()
        .unwrap_or(DEFAULT_RACK_UNITS);
    ItDesign {
        per_class,
        total_racks,
        it_peak_power_mw: it_kw / 1000.0,
        power_density_kw_m2: power_density(config),
        white_space_m2: total_racks as f64 * config.area_per_rack_m2,
        area_per_rack_m2: config.area_per_rack_m2,
        normalized_ru,
    }
}

/// Generates a layout with exactly `n_rack` racks.
pub fn size_by_racks(config: &ReferenceItConfig, n_rack: u64) -> Result<ItDesign> {
    let classes = config.entries.len() as u64;
    if n_rack < classes {
        return Err(DcgenError::Infeasible(format!(
            "{n_rack} racks cannot hold the {classes} rack classes of `{}`",
            config.name
        )));
    }
    let weights: Vec<u64> = config.entries.iter().map(|e| e.count).collect();
    Ok(build_design(config, apportion(&weights, n_rack)))
}

/// Rack count whose floor space carries `p_dc_max_mw` at the reference density,
/// rounded to the nearest rack.
pub fn racks_for_power(config: &ReferenceItConfig, p_dc_max_mw: f64) -> Result<u64> {
    if !(p_dc_max_mw.is_finite() && p_dc_max_mw > 0.0) {
        return Err(DcgenError::InvalidInput(format!(
            "power target must be positive, got {p_dc_max_mw}"
        )));
    }
    // floor space / area per rack = 1000·P·ΣN₀ / Σ N₀·P₀; the area cancels.
    let ref_kw: Exact = config
        .entries
        .iter()
        .map(|e| Exact::from(e.count) * Exact::from_f64(e.spec.peak_power_kw))
        .sum();
    let target_kw = Exact::from_f64(p_dc_max_mw) * Exact::int(1000);
    let racks = target_kw * Exact::from(config.total_racks()) / ref_kw;
    Ok(racks.round_half_up_u64())
}

/// Generates a layout whose peak IT power matches `p_dc_max_mw`.
pub fn size_by_power(config: &ReferenceItConfig, p_dc_max_mw: f64) -> Result<ItDesign> {
    let n_rack = racks_for_power(config, p_dc_max_mw)?;
    let classes = config.entries.len() as u64;
    if n_rack < classes {
        return Err(DcgenError::Infeasible(format!(
            "{p_dc_max_mw} MW is below the smallest layout of `{}` ({classes} racks)",
            config.name
        )));
    }
    size_by_racks(config, n_rack)
}

pub fn size(config: &ReferenceItConfig, target: SizingTarget) -> Result<ItDesign> {
    target.validate()?;
    match target {
        SizingTarget::RackCount(n) => size_by_racks(config, n),
        SizingTarget::PowerMw(p) => size_by_power(config, p),
    }
}
