use wg_stokes::analysis::convergence_rates;
use wg_stokes::study::{format_csv, format_json, format_markdown, run_study, OutputFormat, StudyConfig};
use wg_stokes::Error;

fn small(k: usize, levels: usize) -> StudyConfig {
    StudyConfig { k, n0: 2, levels, ..Default::default() }
}

#[test]
fn report_rates_come_from_the_reported_errors() {
    let report = run_study(&small(1, 3)).unwrap();
    let again = convergence_rates(report.record.levels.clone());
    assert_eq!(again, report.record);
    assert_eq!(report.levels.iter().map(|l| l.n).collect::<Vec<_>>(), [2, 4, 8]);
    for l in &report.levels {
        assert!(l.residual <= 1e-10);
        assert!(l.max_divergence_moment <= 1e-8);
        assert!(l.pressure_mean.abs() <= 1e-10);
    }
}

#[test]
fn table_layouts() {
    let report = run_study(&small(0, 2)).unwrap();
    let csv = format_csv(&report.record);
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1/2,") && lines[1].ends_with(','));
    assert_eq!(lines[2].split(',').count(), 7);
    assert!(lines[2].split(',').all(|c| !c.is_empty()));

    let md = format_markdown(&report.record);
    assert_eq!(md.lines().count(), 4);
    assert!(md.lines().nth(3).unwrap().starts_with("| 1/4 | "));
}

#[test]
fn json_preserves_every_bit() {
    let report = run_study(&StudyConfig { format: OutputFormat::Json, ..small(0, 2) }).unwrap();
    let v: serde_json::Value = serde_json::from_str(&format_json(&report)).unwrap();
    for (row, e) in v["rows"].as_array().unwrap().iter().zip(&report.record.levels) {
        assert_eq!(row["energy"].as_f64().unwrap().to_bits(), e.energy.to_bits());
        assert_eq!(row["pressure"].as_f64().unwrap().to_bits(), e.pressure.to_bits());
        assert_eq!(row["superclose"].as_f64().unwrap().to_bits(), e.superclose.to_bits());
    }
    let r = &report.record.rates[0];
    assert_eq!(v["rows"][1]["energy_rate"].as_f64(), r.energy);
    assert!(v["rows"][0]["energy_rate"].is_null());
}

#[test]
fn failures_name_the_level() {
    let unreachable = StudyConfig { tol: 1e-300, ..small(0, 2) };
    match run_study(&unreachable) {
        Err(Error::Level { level: 0, n: 2, source }) => {
            assert!(matches!(*source, Error::NotConverged { .. }), "{source}");
        }
        other => panic!("expected a level failure, got {other:?}"),
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    assert!(matches!(run_study(&StudyConfig { levels: 0, ..small(0, 1) }), Err(Error::InvalidArgument(_))));
    assert!(matches!(run_study(&StudyConfig { n0: 0, ..small(0, 1) }), Err(Error::InvalidArgument(_))));
    assert!(matches!(run_study(&StudyConfig { case: "none".into(), ..small(0, 1) }), Err(Error::UnknownCase(_))));
    assert!(matches!(
        run_study(&StudyConfig { max_unknowns: 50, ..small(0, 2) }),
        Err(Error::Budget { unknowns: 257, budget: 50 })
    ));
    assert_eq!("markdown".parse::<OutputFormat>().unwrap(), OutputFormat::Md);
    assert!("xml".parse::<OutputFormat>().is_err());
}

#[test]
fn shear_case_study_is_exact() {
    let report = run_study(&StudyConfig { case: "shear".into(), ..small(1, 2) }).unwrap();
    for e in &report.record.levels {
        assert!(e.energy < 1e-10 && e.pressure < 1e-10 && e.superclose < 1e-10);
    }
    // Zero force: the stability ratio is undefined and reported as NaN.
    assert!(report.levels.iter().all(|l| l.stability_ratio.is_nan()));
}
