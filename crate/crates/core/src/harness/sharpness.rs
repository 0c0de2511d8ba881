use std::sync::Arc;

use serde::Serialize;

use super::{Check, Counterexample, ExperimentSpec, HarnessError, RunReport};
use crate::covering::{self, ScalarSet};
use crate::gf::{FieldCtx, FqElem};

/// Above this field size, progression families are thinned to ~256 lengths.
const FULL_PROGRESSION_LIMIT: usize = 256;

/// Named structured subsets of F_q: proper subfields, proper unit subgroups
/// (with and without 0), geometric progressions `{1, g, .., g^{k-1}}` in the
/// least generator and index intervals `{1, .., k}`.
pub(crate) fn structured_families(field: &Arc<FieldCtx>) -> Vec<(String, ScalarSet)> {
    let q = field.q();
    let p = field.p() as usize;
    let mut out = Vec::new();
    for k in 1..field.n() {
        if field.n().is_multiple_of(k) {
            let size = p.pow(k);
            let sub = field.subfield(size).expect("k divides n");
            out.push((format!("subfield_{size}"), ScalarSet::from_elems(field.clone(), sub)));
        }
    }
    for h in 1..q - 1 {
        if let Some(group) = field.unit_subgroup(h) {
            let g = ScalarSet::from_elems(field.clone(), group);
            let mut g0 = g.clone();
            g0.insert(FqElem::ZERO);
            out.push((format!("subgroup_{h}"), g));
            out.push((format!("subgroup_{h}+0"), g0));
        }
    }
    let step = if q <= FULL_PROGRESSION_LIMIT { 1 } else { (q - 1).div_ceil(FULL_PROGRESSION_LIMIT) };
    let g = field.multiplicative_generator();
    for k in (1..q).step_by(step) {
        let geo = (0..k as u64).map(|i| field.pow(g, i));
        out.push((format!("geometric_{k}"), ScalarSet::from_elems(field.clone(), geo)));
        out.push((format!("interval_{k}"), ScalarSet::from_elems(field.clone(), (1..=k as u32).map(FqElem))));
    }
    out
}

/// `|A| / q^{1/2 + 1/(2d)}`.
fn size_ratio(size: usize, q: usize, d: usize) -> f64 {
    size as f64 / (q as f64).powf(0.5 + 0.5 / d as f64)
}

#[derive(Clone, Debug, Serialize)]
struct SubfieldReport {
    size: usize,
    closed_for_all_d_up_to: usize,
    covers_units: bool,
    ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
struct FamilyRow {
    family: String,
    size: usize,
    admitted: bool,
    covers_units: bool,
    result_size: usize,
}

/// Subfield closure (`dA^2 = A` for the subfield of size `sqrt q`, all
/// `d <= max_d`) plus a search over structured families for the largest set
/// whose `dA^2` still misses a unit.
pub fn cmd_sharpness(spec: &ExperimentSpec) -> Result<RunReport, HarnessError> {
    spec.validate()?;
    let field = spec.field()?;
    let (q, d) = (field.q(), spec.d);
    let checks = spec.checks_or(&[Check::Cover]);
    let mut report = RunReport::new("sharpness", Some(&field), Some(spec));

    let subfield = if field.n() % 2 == 0 {
        let size = (field.p() as usize).pow(field.n() / 2);
        let sub = ScalarSet::from_elems(field.clone(), field.subfield(size)?);
        let mut closed_up_to = 0;
        let mut covers = false;
        for dd in 1..=spec.max_d {
            let s = covering::d_a2(&sub, dd)?;
            let closed = s == sub;
            covers |= covering::covers_units(&s).covers_units;
            report.tally("subfield_closure", closed);
            if !closed {
                report.counterexample(Counterexample {
                    check: "subfield_closure".into(),
                    set: sub.iter().map(FqElem::idx).collect(),
                    detail: format!("{dd}A^2 leaves the subfield"),
                });
                break;
            }
            closed_up_to = dd;
        }
        report.tally("subfield_non_covering", !covers);
        serde_json::to_value(SubfieldReport {
            size,
            closed_for_all_d_up_to: closed_up_to,
            covers_units: covers,
            ratio: size_ratio(size, q, d),
        })
        .expect("plain data")
    } else {
        let message = format!("GF({q}) has no subfield of size sqrt(q): extension degree {} is odd", field.n());
        serde_json::json!({ "error": "NoProperSubfield", "message": message })
    };

    let families = structured_families(&field);
    let mut rows = Vec::with_capacity(families.len());
    let mut largest: Option<(String, usize)> = None;
    for (name, a) in families {
        let sum = covering::d_a2(&a, d)?;
        let covers = covering::covers_units(&sum).covers_units;
        let admitted = covering::cover_threshold(a.len(), q, d);
        if admitted && checks.contains(&Check::Cover) {
            report.tally("cover", covers);
            if !covers {
                report.counterexample(Counterexample {
                    check: "cover".into(),
                    set: a.iter().map(FqElem::idx).collect(),
                    detail: format!("{name}: |A|^{{2d}} > q^{{d+1}} but dA^2 misses a unit"),
                });
            }
        }
        if !covers && largest.as_ref().is_none_or(|(_, s)| a.len() > *s) {
            largest = Some((name.clone(), a.len()));
        }
        rows.push(FamilyRow { family: name, size: a.len(), admitted, covers_units: covers, result_size: sum.len() });
    }
    let largest_json = largest.map(|(family, size)| {
        let ratio = size_ratio(size, q, d);
        report.worst("largest_non_covering_ratio", ratio);
        serde_json::json!({ "family": family, "size": size, "ratio": ratio })
    });
    report.details = serde_json::json!({
        "subfield": subfield,
        "largest_non_covering": largest_json,
        "families": rows,
    });
    Ok(report)
}
