//! Sanity checks on a generated world.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{World, CENSOR_T};
use crate::error::{Error, Result};
use crate::ingest::EventKind;

/// Allowed gap between the empirical censored share and its expectation.
const CENSOR_TOLERANCE: f64 = 0.02;
/// Relative tolerance on the median catch; only rounding can move it.
const MEDIAN_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.ok).collect()
    }

    /// `Err` listing every failed check.
    pub fn into_result(self) -> Result<Self> {
        if self.passed() {
            return Ok(self);
        }
        let list: Vec<String> = self.failures().iter().map(|c| format!("{}: {}", c.name, c.detail)).collect();
        Err(Error::Validation(format!("synthetic world failed checks: {}", list.join("; "))))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.ok { "ok  " } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Checks diurnal structure, censoring against its expectation, the catch
/// distribution, class coverage and planted violation counts.
pub fn validate(world: &World) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, ok: bool, detail: String| {
        checks.push(Check {
            name: name.to_string(),
            ok,
            detail,
        })
    };
    let h = &world.truth.hours;

    let day = mean(h.iter().filter(|x| (9.0..15.0).contains(&x.solar_hour)).map(|x| x.tuna_t));
    let night = mean(h.iter().filter(|x| x.solar_hour >= 21.0 || x.solar_hour < 3.0).map(|x| x.tuna_t));
    push(
        "diurnal",
        day > night,
        format!("mean tuna {day:.3} t by day vs {night:.3} t at night"),
    );

    let seen = mean(h.iter().map(|x| f64::from(u8::from(x.censored))));
    let expected = mean(h.iter().map(|x| x.p_censored));
    push(
        "censoring",
        (seen - expected).abs() <= CENSOR_TOLERANCE,
        format!("{seen:.4} of hours below {CENSOR_T} t, expected {expected:.4}"),
    );

    let mut catches: Vec<f64> = world.events.iter().filter_map(|e| e.catch_t).collect();
    catches.sort_by(f64::total_cmp);
    let target = world.config.catch_median_t;
    if catches.is_empty() {
        push("catch_median", false, "no sets were generated".into());
    } else {
        let m = catches.len() / 2;
        let med = if catches.len() % 2 == 1 { catches[m] } else { 0.5 * (catches[m - 1] + catches[m]) };
        let avg = mean(catches.iter().copied());
        push(
            "catch_median",
            (med - target).abs() <= MEDIAN_TOLERANCE * target,
            format!("median {med:.2} t, target {target} t"),
        );
        push("catch_skew", avg > med, format!("mean {avg:.2} t vs median {med:.2} t"));
    }

    let clean: Vec<_> = world.truth.events.iter().filter(|e| e.rule_violation.is_none()).collect();
    let deployments = clean.iter().filter(|e| e.kind == EventKind::Deployment).count();
    let present = clean.iter().filter(|e| e.y_true >= 10.0).count();
    let absent = clean.len() - present;
    push(
        "classes",
        deployments > 0 && present > 0 && absent > 0,
        format!("{present} present, {absent} absent ({deployments} deployments) among clean events"),
    );

    for rule in super::ViolationRates::RULES {
        let (want, got) = (world.planned(rule), world.injected(rule));
        push(&format!("violations.{rule}"), want == got, format!("{got} planted of {want} planned"));
    }

    let bad = world.records.iter().filter(|r| r.total() < CENSOR_T).count();
    push("censored_rows", bad == 0, format!("{bad} transmitted rows below {CENSOR_T} t"));

    ValidationReport { checks }
}
