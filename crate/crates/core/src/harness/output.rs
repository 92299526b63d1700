//! CSV and JSON artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::json;

use super::{ExperimentSpec, HarnessError, Stats, SummaryRow, TrialRow};
use crate::plume::PlumeField;
use crate::tree::SwarmTree;

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

const CELL_HEADER: &str = "algorithm,n,plume,p_generic,p_inplume";

fn cell_fields(c: &super::CellKey) -> String {
    format!(
        "{},{},{},{},{}",
        c.algorithm, c.n, c.plume, c.p_generic, c.p_inplume
    )
}

pub fn results_csv(rows: &[TrialRow]) -> String {
    let mut s = format!(
        "{CELL_HEADER},trial,seed,success,contact_tick,maxflux_tick,survivors,heal_events,distance_m,reason\n"
    );
    for r in rows {
        let t = &r.result;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{:.3},{}",
            cell_fields(&r.cell),
            r.trial,
            r.seed,
            t.success,
            opt(t.contact_tick),
            opt(t.maxflux_tick),
            t.survivors,
            t.heal_events,
            t.distance_m,
            t.reason.as_str()
        );
    }
    s
}

fn stats_fields(s: Option<Stats>) -> String {
    match s {
        Some(s) => format!("{:.6},{:.6},{:.6}", s.median, s.mean, s.std),
        None => ",,".to_string(),
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = format!(
        "{CELL_HEADER},trials,successes,contact_median_min,contact_mean_min,contact_std_min,maxflux_median_min,maxflux_mean_min,maxflux_std_min\n"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            cell_fields(&r.cell),
            r.trials,
            r.successes,
            stats_fields(r.contact),
            stats_fields(r.maxflux)
        );
    }
    s
}

pub fn metadata_json(spec: &ExperimentSpec) -> String {
    let v = json!({
        "experiment": spec,
        "tick_seconds": crate::sim::TICK_SECONDS,
        "time_unit": "minutes of simulated time",
        "statistics": "median, mean and population standard deviation over successful trials only",
        "seeding": "trial seed = hash(base_seed, n, plume, p_generic, p_inplume, trial); shared across algorithms",
        "version": env!("CARGO_PKG_VERSION"),
    });
    serde_json::to_string_pretty(&v).expect("metadata serializes") + "\n"
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

/// Writes `results.csv`, `summary.csv` and `metadata.json` into `dir`.
pub fn write_experiment(
    dir: &Path,
    spec: &ExperimentSpec,
    rows: &[TrialRow],
    summary: &[SummaryRow],
) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_file(&dir.join("results.csv"), &results_csv(rows))?;
    write_file(&dir.join("summary.csv"), &summary_csv(summary))?;
    write_file(&dir.join("metadata.json"), &metadata_json(spec))
}

/// Slot id, level, offset, parent and heir of every slot.
pub fn layout_csv(tree: &SwarmTree) -> String {
    let mut s = String::from("slot,level,x,y,parent,heir\n");
    for slot in tree.slots() {
        let _ = writeln!(
            s,
            "{},{},{:.6},{:.6},{},{}",
            slot.id,
            slot.level,
            slot.offset.x,
            slot.offset.y,
            opt(tree.parent(slot.id)),
            opt(tree.heir(slot.id))
        );
    }
    s
}

/// Readings on a regular grid centred on the peak.
pub fn raster_csv(field: &PlumeField, half_width: f64, step: f64) -> String {
    let mut s = String::from("x,y,reading\n");
    let c = field.peak();
    let n = (half_width / step).round() as i64;
    for j in -n..=n {
        for i in -n..=n {
            let p = crate::geom::Vec2::new(c.x + i as f64 * step, c.y + j as f64 * step);
            let _ = writeln!(s, "{:.3},{:.3},{:.6e}", p.x, p.y, field.reading(p));
        }
    }
    s
}
