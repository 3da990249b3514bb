//! Harness-level properties: deterministic table regeneration, the
//! table layout, and the orbit-mean dominance of the adjusted method on the
//! lingering experiments.

use qclose::builtin_experiment;
use qclose::report::{experiment_tables, run_comparison, Quantity};
use qclose::solvers::Method;

#[test]
fn table_regeneration_is_byte_identical() {
    let ids = [1usize, 7];
    let a = experiment_tables(&ids, 200, 9).unwrap();
    let b = experiment_tables(&ids, 200, 9).unwrap();
    for q in Quantity::ALL {
        let mut ba = Vec::new();
        let mut bb = Vec::new();
        a.write_csv(q, &mut ba).unwrap();
        b.write_csv(q, &mut bb).unwrap();
        assert_eq!(ba, bb, "table bytes differ for {}", q.label());
    }
}

#[test]
fn tables_have_the_reference_layout() {
    let ids: Vec<usize> = (1..=10).collect();
    let tables = experiment_tables(&ids, 10, 4).unwrap();
    assert_eq!(tables.times, (6..=15).map(f64::from).collect::<Vec<_>>());
    assert_eq!(tables.rows.len(), 20);
    for (k, row) in tables.rows.iter().enumerate() {
        assert_eq!(row.experiment, ids[k / 2]);
        let want = if k % 2 == 0 {
            Method::Adjusted
        } else {
            Method::Classic
        };
        assert_eq!(row.method, want);
        for q in Quantity::ALL {
            assert_eq!(row.rel[q.index()].len(), 10);
        }
    }
    let mut buf = Vec::new();
    tables.write_csv(Quantity::VarX2, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert_eq!(
        text.lines().next().unwrap(),
        "exp,method,6,7,8,9,10,11,12,13,14,15"
    );
}

#[test]
fn adjusted_orbit_mean_dominates_on_lingering_experiments() {
    // where the fluid lingers near the server count, the adjusted orbit
    // mean must beat the measure-zero one at every reported time
    let qi = Quantity::MeanX2.index();
    for id in [2usize, 4, 6, 7, 8, 9] {
        let spec = builtin_experiment(id).unwrap();
        let c = run_comparison(&spec, 1000, 1).unwrap();
        for (k, t) in c.report.times.iter().enumerate() {
            let adj = c.report.adjusted.rel[qi][k].abs();
            let mz = c.report.measure_zero.rel[qi][k].abs();
            assert!(
                adj < mz,
                "experiment {id} at t={t}: adjusted {adj:.2}% vs measure-zero {mz:.2}%"
            );
        }
    }
}
