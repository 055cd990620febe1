//! The two-layer screening pipeline and the single-layer comparators.
//!
//! Layer one works inside each synergy area (SA): Holm-adjust the raw AE
//! p-values and take the `l`-th smallest adjusted value as the SA p-value.
//! Layer two computes BH or BY q-values over the SA p-values and flags every
//! SA whose q-value is at most `alpha`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::multiplicity::{bh_unchecked, by_unchecked, holm_unchecked};
use crate::{Result, SafeError};

/// One synergy area with its AE variables and their raw p-values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaGroup {
    pub sa_id: String,
    pub ae_ids: Vec<String>,
    pub raw_p: Vec<f64>,
}

impl SaGroup {
    pub fn new(sa_id: impl Into<String>, ae_ids: Vec<String>, raw_p: Vec<f64>) -> Result<Self> {
        let group = SaGroup { sa_id: sa_id.into(), ae_ids, raw_p };
        group.validate()?;
        Ok(group)
    }

    /// Builds a group with AE labels `ae1, ae2, …`.
    pub fn unlabeled(sa_id: impl Into<String>, raw_p: Vec<f64>) -> Result<Self> {
        let ae_ids = (1..=raw_p.len()).map(|j| format!("ae{j}")).collect();
        Self::new(sa_id, ae_ids, raw_p)
    }

    pub fn len(&self) -> usize {
        self.raw_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw_p.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| SafeError::InvalidGroup { sa_id: self.sa_id.clone(), reason };
        if self.ae_ids.is_empty() {
            return Err(fail("no AE variables".into()));
        }
        if self.ae_ids.len() != self.raw_p.len() {
            return Err(fail(format!("{} AE labels but {} p-values", self.ae_ids.len(), self.raw_p.len())));
        }
        let mut seen = HashSet::new();
        for ae in &self.ae_ids {
            if !seen.insert(ae.as_str()) {
                return Err(fail(format!("duplicate AE `{ae}`")));
            }
        }
        if let Some((ae, p)) = self.ae_ids.iter().zip(&self.raw_p).find(|(_, p)| !(0.0..=1.0).contains(*p)) {
            return Err(fail(format!("p-value for `{ae}` is outside [0, 1]: {p}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossSaMethod {
    #[default]
    Bh,
    By,
}

/// Adjustment used inside an SA. Holm is valid under any dependence among
/// the AE variables; it is the only procedure offered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WithinSaMethod {
    #[default]
    Holm,
}

/// What to do with an SA that has fewer AE variables than the synergy count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallSaPolicy {
    /// Give the SA a p-value of 1 and record a warning.
    #[default]
    PvalueOne,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafeConfig {
    /// Synergy count: minimum number of AE findings needed to flag an SA.
    pub l: usize,
    pub alpha: f64,
    pub cross_sa_method: CrossSaMethod,
    pub within_sa_method: WithinSaMethod,
    pub small_sa_policy: SmallSaPolicy,
}

impl Default for SafeConfig {
    fn default() -> Self {
        SafeConfig {
            l: 2,
            alpha: 0.05,
            cross_sa_method: CrossSaMethod::Bh,
            within_sa_method: WithinSaMethod::Holm,
            small_sa_policy: SmallSaPolicy::PvalueOne,
        }
    }
}

impl SafeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l == 0 {
            return Err(SafeError::invalid("synergy count l must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SafeError::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Synergy count for an SA of `n_ae` variables under the proportional rule:
/// 20% of the AE count rounded to an integer, never below 2.
pub fn adaptive_synergy_count(n_ae: usize) -> usize {
    ((0.2 * n_ae as f64).round() as usize).max(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeRow {
    pub sa_id: String,
    pub ae_id: String,
    pub raw_p: f64,
    pub holm_adjusted_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaRow {
    pub sa_id: String,
    /// Synergy count actually applied to this SA.
    pub l: usize,
    pub sa_pvalue: f64,
    pub q_value: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafeResult {
    pub per_ae: Vec<AeRow>,
    pub per_sa: Vec<SaRow>,
    pub config: SafeConfig,
    pub warnings: Vec<String>,
}

/// First-layer decision for one SA: true iff the `l`-th smallest adjusted
/// p-value is at most `alpha_tilde`. An SA with fewer than `l` values never
/// fires.
pub fn sa_decision(adjusted: &[f64], l: usize, alpha_tilde: f64) -> bool {
    debug_assert!(l >= 1);
    lth_smallest(adjusted, l).is_some_and(|p| p <= alpha_tilde)
}

fn lth_smallest(values: &[f64], l: usize) -> Option<f64> {
    if l == 0 || values.len() < l {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(sorted[l - 1])
}

/// Per-SA outcome of the first layer.
pub(crate) struct FirstLayer {
    pub adjusted: Vec<f64>,
    /// `None` when the SA has fewer AE variables than the synergy count.
    pub sa_pvalue: Option<f64>,
}

pub(crate) fn first_layer(raw_p: &[f64], l: usize) -> FirstLayer {
    let adjusted = holm_unchecked(raw_p);
    let sa_pvalue = lth_smallest(&adjusted, l);
    FirstLayer { adjusted, sa_pvalue }
}

pub(crate) fn cross_sa_qvalues(sa_p: &[f64], method: CrossSaMethod) -> Vec<f64> {
    match method {
        CrossSaMethod::Bh => bh_unchecked(sa_p),
        CrossSaMethod::By => by_unchecked(sa_p),
    }
}

/// Runs the full two-layer pipeline with the configured global synergy count.
pub fn safe_analyze(groups: &[SaGroup], config: &SafeConfig) -> Result<SafeResult> {
    config.validate()?;
    let ls = vec![config.l; groups.len()];
    analyze_with_counts(groups, config, &ls)
}

/// Same as [`safe_analyze`] but with the synergy count of each SA set by
/// [`adaptive_synergy_count`]. `config.l` is ignored.
pub fn safe_analyze_adaptive(groups: &[SaGroup], config: &SafeConfig) -> Result<SafeResult> {
    config.validate()?;
    let ls: Vec<usize> = groups.iter().map(|g| adaptive_synergy_count(g.len())).collect();
    analyze_with_counts(groups, config, &ls)
}

fn analyze_with_counts(groups: &[SaGroup], config: &SafeConfig, ls: &[usize]) -> Result<SafeResult> {
    if groups.is_empty() {
        return Err(SafeError::invalid("at least one synergy area is required"));
    }
    let mut warnings = Vec::new();
    let mut layers = Vec::with_capacity(groups.len());
    for (group, &l) in groups.iter().zip(ls) {
        group.validate()?;
        let layer = first_layer(&group.raw_p, l);
        if layer.sa_pvalue.is_none() {
            match config.small_sa_policy {
                SmallSaPolicy::Error => {
                    return Err(SafeError::TooFewAes { sa_id: group.sa_id.clone(), n_ae: group.len(), l })
                }
                SmallSaPolicy::PvalueOne => warnings.push(format!(
                    "synergy area `{}` has {} AE variable(s), fewer than l = {l}; its p-value is set to 1",
                    group.sa_id,
                    group.len()
                )),
            }
        }
        layers.push(layer);
    }

    let sa_p: Vec<f64> = layers.iter().map(|f| f.sa_pvalue.unwrap_or(1.0)).collect();
    let q = cross_sa_qvalues(&sa_p, config.cross_sa_method);

    let per_ae = groups
        .iter()
        .zip(&layers)
        .flat_map(|(g, f)| {
            g.ae_ids.iter().zip(&g.raw_p).zip(&f.adjusted).map(|((ae, &raw), &adj)| AeRow {
                sa_id: g.sa_id.clone(),
                ae_id: ae.clone(),
                raw_p: raw,
                holm_adjusted_p: adj,
            })
        })
        .collect();
    let per_sa = groups
        .iter()
        .enumerate()
        .map(|(i, g)| SaRow {
            sa_id: g.sa_id.clone(),
            l: ls[i],
            sa_pvalue: sa_p[i],
            q_value: q[i],
            flagged: q[i] <= config.alpha,
        })
        .collect();

    Ok(SafeResult { per_ae, per_sa, config: *config, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectMethod {
    HolmDirect,
    BhDirect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectRow {
    pub sa_id: String,
    pub ae_id: String,
    pub raw_p: f64,
    pub adjusted_or_q_value: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectResult {
    pub method: DirectMethod,
    pub alpha: f64,
    pub per_ae: Vec<DirectRow>,
}

/// Single-layer comparator: pool every AE p-value across SAs and adjust once.
pub fn direct_analyze(groups: &[SaGroup], method: DirectMethod, alpha: f64) -> Result<DirectResult> {
    if groups.is_empty() {
        return Err(SafeError::invalid("at least one synergy area is required"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SafeError::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    for g in groups {
        g.validate()?;
    }
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.raw_p.iter().copied()).collect();
    let adjusted = match method {
        DirectMethod::HolmDirect => holm_unchecked(&pooled),
        DirectMethod::BhDirect => bh_unchecked(&pooled),
    };
    let per_ae = groups
        .iter()
        .flat_map(|g| g.ae_ids.iter().zip(&g.raw_p).map(move |(ae, &raw)| (g, ae, raw)))
        .zip(adjusted)
        .map(|((g, ae, raw), adj)| DirectRow {
            sa_id: g.sa_id.clone(),
            ae_id: ae.clone(),
            raw_p: raw,
            adjusted_or_q_value: adj,
            flagged: adj <= alpha,
        })
        .collect();
    Ok(DirectResult { method, alpha, per_ae })
}

/// Screening pipeline and both direct comparators run on the same groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub safe: SafeResult,
    pub holm_direct: DirectResult,
    pub bh_direct: DirectResult,
}

/// Runs the pipeline (default configuration except `alpha`) next to
/// direct Holm and direct BH at the same level.
pub fn compare_methods(groups: &[SaGroup], alpha: f64) -> Result<Comparison> {
    let config = SafeConfig { alpha, ..SafeConfig::default() };
    Ok(Comparison {
        safe: safe_analyze(groups, &config)?,
        holm_direct: direct_analyze(groups, DirectMethod::HolmDirect, alpha)?,
        bh_direct: direct_analyze(groups, DirectMethod::BhDirect, alpha)?,
    })
}
