use proptest::prelude::*;

use locus_core::harness::output::{results_csv, summary_csv, write_experiment};
use locus_core::harness::plots::emit_plots;
use locus_core::harness::{
    describe, run_experiment, summarize, ticks_to_minutes, trial_seed, ExperimentSpec,
    HarnessError, TrialRow,
};
use locus_core::sim::{Algorithm, PlumeVariant, Termination, TrialResult};

fn small(trials: usize) -> ExperimentSpec {
    ExperimentSpec {
        name: "small".into(),
        algorithms: vec![Algorithm::Locus, Algorithm::Mobs],
        sizes: vec![3, 5],
        plumes: vec![PlumeVariant::Smooth, PlumeVariant::Perturbed],
        p_generic: vec![0.0, 1e-4],
        p_inplume: vec![0.0],
        trials,
        base_seed: 7,
        tick_budget: 20_000,
    }
}

#[test]
fn single_trial_gives_single_row() {
    let mut spec = small(1);
    spec.algorithms = vec![Algorithm::Mobs];
    spec.sizes = vec![5];
    spec.plumes = vec![PlumeVariant::Smooth];
    spec.p_generic = vec![0.0];
    let rows = run_experiment(&spec, 2).unwrap();
    assert_eq!(rows.len(), 1);
    let summary = summarize(&rows);
    assert_eq!(summary.len(), 1);
    assert_eq!(summary[0].trials, 1);
}

#[test]
fn output_is_independent_of_worker_count() {
    let spec = small(3);
    let one = run_experiment(&spec, 1).unwrap();
    let four = run_experiment(&spec, 4).unwrap();
    assert_eq!(one.len(), 2 * 2 * 2 * 2 * 3);
    assert_eq!(results_csv(&one), results_csv(&four));
    assert_eq!(summary_csv(&summarize(&one)), summary_csv(&summarize(&four)));
}

#[test]
fn algorithms_share_seeds() {
    let rows = run_experiment(&small(2), 2).unwrap();
    for r in &rows {
        let twin = rows
            .iter()
            .find(|o| {
                o.cell.algorithm != r.cell.algorithm
                    && o.cell.n == r.cell.n
                    && o.cell.plume == r.cell.plume
                    && o.cell.p_generic == r.cell.p_generic
                    && o.trial == r.trial
            })
            .unwrap();
        assert_eq!(r.seed, twin.seed);
    }
    let seeds: std::collections::BTreeSet<u64> = rows
        .iter()
        .filter(|r| r.cell.algorithm == Algorithm::Mobs)
        .map(|r| r.seed)
        .collect();
    assert_eq!(seeds.len(), rows.len() / 2, "distinct seeds per cell and trial");
}

#[test]
fn seed_depends_on_every_axis() {
    let spec = small(1);
    let cells = spec.cells();
    let base = cells[0];
    let s0 = trial_seed(7, &base, 0);
    assert_ne!(s0, trial_seed(8, &base, 0));
    assert_ne!(s0, trial_seed(7, &base, 1));
    for c in &cells[1..] {
        if c.algorithm == base.algorithm {
            assert_ne!(s0, trial_seed(7, c, 0), "{c:?}");
        }
    }
}

#[test]
fn invalid_specs_are_config_errors() {
    for broken in [
        ExperimentSpec {
            trials: 0,
            ..small(1)
        },
        ExperimentSpec {
            sizes: vec![],
            ..small(1)
        },
        ExperimentSpec {
            sizes: vec![0],
            ..small(1)
        },
        ExperimentSpec {
            p_generic: vec![0.5],
            ..small(1)
        },
    ] {
        let err = run_experiment(&broken, 1).unwrap_err();
        assert!(matches!(err, HarnessError::Config(_)));
        assert_eq!(err.exit_code(), 2);
    }
}

#[test]
fn artifacts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small(1);
    let rows = run_experiment(&spec, 2).unwrap();
    let summary = summarize(&rows);
    let out = dir.path().join("small");
    write_experiment(&out, &spec, &rows, &summary).unwrap();
    let plots = emit_plots(&summary, &out, "small").unwrap();
    assert!(!plots.is_empty());
    for f in ["results.csv", "summary.csv", "metadata.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["experiment"]["base_seed"], 7);
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), rows.len() + 1);
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let spec = small(1);
    let err = write_experiment(&blocker.join("sub"), &spec, &[], &[]).unwrap_err();
    assert!(matches!(err, HarnessError::Io { .. }));
    assert_eq!(err.exit_code(), 3);
}

fn naive_stats(v: &[f64]) -> (f64, f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    // Median as the value with at most half the data strictly on either side.
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = v.len();
    let median = if k % 2 == 1 {
        *v.iter()
            .find(|&&x| {
                let lt = v.iter().filter(|&&y| y < x).count();
                let gt = v.iter().filter(|&&y| y > x).count();
                lt <= k / 2 && gt <= k / 2
            })
            .unwrap()
    } else {
        (sorted[k / 2 - 1] + sorted[k / 2]) / 2.0
    };
    (median, mean, var.sqrt())
}

fn row(success: bool, tick: u64) -> TrialRow {
    let spec = small(1);
    TrialRow {
        cell: spec.cells()[0],
        trial: 0,
        seed: 0,
        result: TrialResult {
            success,
            contact_tick: Some(tick / 2),
            maxflux_tick: success.then_some(tick),
            survivors: 3,
            distance_m: 0.0,
            heal_events: 0,
            reason: if success {
                Termination::Success
            } else {
                Termination::Budget
            },
            ticks: tick,
        },
    }
}

#[test]
fn summary_counts_successes_only() {
    let rows = vec![row(true, 1000), row(false, 50), row(true, 3000)];
    let s = summarize(&rows);
    assert_eq!(s.len(), 1);
    assert_eq!((s[0].trials, s[0].successes), (3, 2));
    let m = s[0].maxflux.unwrap();
    assert!((m.mean - ticks_to_minutes(2000)).abs() < 1e-12);
    let c = s[0].contact.unwrap();
    assert!((c.median - ticks_to_minutes(1000)).abs() < 1e-12);

    let none = summarize(&[row(false, 10)]);
    assert!(none[0].maxflux.is_none() && none[0].contact.is_none());
}

proptest! {
    #[test]
    fn stats_match_naive(v in prop::collection::vec(-1e3f64..1e3, 1..60)) {
        let s = describe(&v).unwrap();
        let (median, mean, std) = naive_stats(&v);
        prop_assert!((s.median - median).abs() <= 1e-12 * (1.0 + median.abs()));
        prop_assert!((s.mean - mean).abs() <= 1e-12 * (1.0 + mean.abs()) * v.len() as f64);
        prop_assert!((s.std - std).abs() <= 1e-9 * (1.0 + std));
    }
}
