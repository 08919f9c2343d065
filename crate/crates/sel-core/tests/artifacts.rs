use std::fs::File;
use std::sync::Arc;

use sel_core::barrier::solve_barrier_ode;
use sel_core::classifier::{sweep, write_sweep_csv, SweepRange};
use sel_core::geometry::{build_grid, Domain, Grading, GridFunction};

fn read_rows(path: &std::path::Path) -> (csv::StringRecord, Vec<csv::StringRecord>) {
    let mut rd = csv::Reader::from_path(path).unwrap();
    let header = rd.headers().unwrap().clone();
    (header, rd.records().map(|r| r.unwrap()).collect())
}

#[test]
fn grid_function_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let g = Arc::new(build_grid(Domain::rectangle(1.0, 2.0).unwrap(), 9, Grading::BoundaryGraded { strength: 1.0 }).unwrap());
    let u = GridFunction::from_fn(&g, |x, d| d * (1.0 + x[0]) / 3.0);
    let path = dir.path().join("u.csv");
    u.write_csv(File::create(&path).unwrap()).unwrap();
    let (header, rows) = read_rows(&path);
    assert_eq!(header.iter().next_back(), Some("value"));
    assert_eq!(rows.len(), g.len());
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    for (i, row) in rows.iter().enumerate() {
        let back: f64 = row[col("value")].parse().unwrap();
        assert_eq!(back, u.values()[i], "row {i} must round-trip exactly");
        let d: f64 = row[col("delta")].parse().unwrap();
        assert_eq!(d, g.delta()[i]);
    }
}

#[test]
fn sweep_csv_has_one_row_per_quad() {
    let dir = tempfile::tempdir().unwrap();
    let r = SweepRange { lo: 0.0, hi: 1.0, step: 0.5 };
    let reports = sweep(&r, &r, &r, &r).unwrap();
    // q = 0 or r = 0 is skipped
    assert_eq!(reports.len(), 3 * 2 * 2 * 3);
    let path = dir.path().join("sweep.csv");
    write_sweep_csv(&reports, File::create(&path).unwrap()).unwrap();
    let (header, rows) = read_rows(&path);
    assert_eq!(&header[0], "p");
    assert_eq!(rows.len(), reports.len());
}

#[test]
fn barrier_csv_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let sol = solve_barrier_ode(0.3, 0.4, 0.5, 200).unwrap();
    let path = dir.path().join("h.csv");
    sol.write_csv(File::create(&path).unwrap()).unwrap();
    let (_, rows) = read_rows(&path);
    let h: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(h.windows(2).all(|w| w[1] >= w[0]));
}
