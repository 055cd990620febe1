use std::fs::File;
use std::path::PathBuf;

use safe_core::data_io::{
    dataset_to_groups, emit_comparison, emit_plot_table, emit_report, parse_dataset, parse_structured_report,
    write_dataset, Delimiter, ReportFormat, SafetyDataset,
};
use safe_core::engine::{compare_methods, safe_analyze, safe_analyze_adaptive, CrossSaMethod, SaGroup, SafeConfig};
use safe_core::multiplicity::{bh_qvalues, holm_adjust, kth_smallest};
use safe_core::sim::{parse_scenarios, run_scenario};
use safe_core::stats::Sidedness;

fn load(name: &str) -> SafetyDataset {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    parse_dataset(File::open(path).unwrap(), Delimiter::Comma).unwrap()
}

fn groups(name: &str) -> Vec<SaGroup> {
    dataset_to_groups(&load(name), Sidedness::TwoSided).unwrap()
}

#[test]
fn fixtures_have_the_expected_shape() {
    for name in ["case_study_1.csv", "case_study_2.csv"] {
        let ds = load(name);
        assert_eq!(ds.rows.len(), 259, "{name}");
        assert_eq!(ds.sa_count(), 23, "{name}");
        assert!(ds.arm_labels.iter().all(Option::is_some));
    }
}

#[test]
fn case_one_flags_only_the_two_signal_area() {
    let g = groups("case_study_1.csv");
    let r = safe_analyze(&g, &SafeConfig::default()).unwrap();
    let flagged: Vec<_> = r.per_sa.iter().filter(|s| s.flagged).map(|s| s.sa_id.as_str()).collect();
    assert_eq!(flagged, ["Gastrointestinal disorders"]);
    assert!(r.warnings.is_empty());

    // Rebuild both layers by hand from the public primitives.
    let sa_p: Vec<f64> = g.iter().map(|grp| kth_smallest(&holm_adjust(&grp.raw_p).unwrap(), 2).unwrap()).collect();
    let q = bh_qvalues(&sa_p).unwrap();
    for ((row, p), q) in r.per_sa.iter().zip(&sa_p).zip(&q) {
        assert_eq!(row.sa_pvalue, *p);
        assert_eq!(row.q_value, *q);
    }

    // The nervous-system and skin areas each carry a single extreme AE.
    for sa in ["Nervous system disorders", "Skin and subcutaneous tissue disorders"] {
        let min_raw = r.per_ae.iter().filter(|a| a.sa_id == sa).map(|a| a.raw_p).fold(1.0, f64::min);
        assert!(min_raw < 1e-6, "{sa}: {min_raw}");
        assert!(!r.per_sa.iter().find(|s| s.sa_id == sa).unwrap().flagged);
    }
}

#[test]
fn case_two_splits_the_methods() {
    let cmp = compare_methods(&groups("case_study_2.csv"), 0.05).unwrap();
    assert!(cmp.safe.per_sa.iter().all(|s| !s.flagged));
    for direct in [&cmp.holm_direct, &cmp.bh_direct] {
        let hits: Vec<_> = direct.per_ae.iter().filter(|a| a.flagged).map(|a| a.ae_id.as_str()).collect();
        assert_eq!(hits, ["Vision blurred"]);
    }
    let table = emit_comparison(&cmp, ReportFormat::Table);
    assert!(table.contains("Vision blurred"));
}

#[test]
fn by_is_never_more_liberal_on_the_fixtures() {
    for name in ["case_study_1.csv", "case_study_2.csv"] {
        let g = groups(name);
        let bh = safe_analyze(&g, &SafeConfig::default()).unwrap();
        let by = safe_analyze(&g, &SafeConfig { cross_sa_method: CrossSaMethod::By, ..SafeConfig::default() }).unwrap();
        for (a, b) in bh.per_sa.iter().zip(&by.per_sa) {
            assert!(b.q_value >= a.q_value);
            assert!(!b.flagged || a.flagged);
        }
    }
}

#[test]
fn adaptive_count_on_small_areas_is_two() {
    let g = groups("case_study_1.csv");
    let r = safe_analyze_adaptive(&g, &SafeConfig::default()).unwrap();
    assert!(r.per_sa.iter().all(|s| s.l == 2));
    assert_eq!(r.per_sa, safe_analyze(&g, &SafeConfig::default()).unwrap().per_sa);
}

#[test]
fn one_sided_tests_follow_the_direction() {
    let ds = load("case_study_1.csv");
    let greater = dataset_to_groups(&ds, Sidedness::Greater).unwrap();
    let less = dataset_to_groups(&ds, Sidedness::Less).unwrap();
    let config = SafeConfig::default();
    let g = safe_analyze(&greater, &config).unwrap();
    let l = safe_analyze(&less, &config).unwrap();
    assert!(g.per_sa.iter().any(|s| s.flagged));
    assert!(l.per_sa.iter().all(|s| !s.flagged));
}

#[test]
fn dataset_and_reports_round_trip() {
    let ds = load("case_study_1.csv");
    for delim in [Delimiter::Comma, Delimiter::Tab] {
        let text = write_dataset(&ds, delim).unwrap();
        assert_eq!(parse_dataset(text.as_bytes(), delim).unwrap(), ds);
    }

    let result = safe_analyze(&dataset_to_groups(&ds, Sidedness::TwoSided).unwrap(), &SafeConfig::default()).unwrap();
    let structured = emit_report(&result, ReportFormat::Structured);
    assert_eq!(parse_structured_report(&structured).unwrap(), result);

    let plot = emit_plot_table(&result);
    assert_eq!(plot.rows.len(), 23);
    for row in &plot.rows {
        assert!(row.log10_p1 <= row.log10_p2 && row.log10_p2 <= 0.0);
    }
    assert_eq!(plot.to_tsv().lines().count(), 24);
}

#[test]
fn scenario_file_runs_end_to_end() {
    let text = "# all-null block, independent\nm = 3\nn = 4\nrho_r = 0\nrho_v = 0\niterations = 400\nseed = 9\n\
                ---\nm = 3\nn = 4\nrho_r = -1/11\nrho_v = -1/11\nw = 3,0,0\niterations = 400\nseed = 9\n";
    let scenarios = parse_scenarios(text).unwrap();
    assert_eq!(scenarios.len(), 2);
    let a = run_scenario(&scenarios[0]).unwrap();
    assert_eq!(a, run_scenario(&scenarios[0]).unwrap());
    assert!(a.per_sa_wrong_rejection.iter().all(Option::is_some));
    let b = run_scenario(&scenarios[1]).unwrap();
    assert!(b.per_sa_wrong_rejection[0].is_none());
    assert!(b.power_per_true_sa[0].unwrap().estimate > 0.0);
}
