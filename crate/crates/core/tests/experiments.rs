use std::path::Path;

use congame_core::experiments::{facility_bound, linear_bound, run_sweep, SweepSpec, SweepTable, CSV_HEADER};
use congame_core::Error;

fn spec(text: &str) -> SweepSpec {
    SweepSpec::parse(text, Path::new(".")).unwrap()
}

const NOISY: &str = "instance = \"game2\"\nrho = \"one-unit\"\nlevel = \"facility\"\nn_grid = [30, 300, 3000]\ntrials = 6\ndelta = 0.1\nseed = 17\nnoise = 0.2\n";

#[test]
fn facility_bound_is_linear_in_facilities() {
    for f in 1..5 {
        let one = facility_bound(3, f, 1.5, 7.0, 400);
        let two = facility_bound(3, 2 * f, 1.5, 7.0, 400);
        assert!((two - 2.0 * one).abs() < 1e-12 * two);
    }
    assert_eq!(facility_bound(3, 1, 1.0, 1.0, 4), 8.0 * 2.0 / 2.0);
    assert_eq!(linear_bound(2, 2, 1.0, 0.0, 10), f64::INFINITY);
    assert_eq!(linear_bound(2, 2, 4.0, 1.0, 16), 4.0);
}

#[test]
fn rows_respect_surrogate_and_theory_when_bonus_valid() {
    let table = run_sweep(&spec(NOISY)).unwrap();
    assert_eq!(table.rows.len(), 18);
    let keys: Vec<(usize, usize)> = table.rows.iter().map(|r| (r.n, r.trial)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    let mut valid = 0;
    for r in &table.rows {
        assert!(r.true_gap >= 0.0);
        if r.bonus_valid {
            valid += 1;
            assert!(r.true_gap <= r.surrogate_gap + 1e-12);
            assert!(r.true_gap <= r.theory_bound + 1e-12);
        }
    }
    assert!(valid > 0);
    for level in ["agent", "game"] {
        let text = NOISY.replace("\"facility\"", &format!("\"{level}\"")).replace("[30, 300, 3000]", "[50, 500]");
        for r in run_sweep(&spec(&text)).unwrap().rows {
            if r.bonus_valid {
                assert!(r.true_gap <= r.surrogate_gap + 1e-12);
                assert!(r.true_gap <= r.theory_bound + 1e-12);
            }
        }
    }
}

#[test]
fn identical_specs_give_identical_csv() {
    let a = run_sweep(&spec(NOISY)).unwrap().to_csv().unwrap();
    let b = run_sweep(&spec(NOISY)).unwrap().to_csv().unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with(&CSV_HEADER.join(",")));
    let parsed = SweepTable::from_csv(&a).unwrap();
    assert_eq!(parsed.to_csv().unwrap(), a);
}

#[test]
fn empty_tables_are_rejected() {
    let empty = SweepTable { rows: Vec::new() };
    assert!(matches!(empty.to_csv(), Err(Error::Input(_))));
    assert!(matches!(empty.to_svg(), Err(Error::Input(_))));
}

#[test]
fn plot_has_one_median_and_one_bound_series() {
    let table = run_sweep(&spec(NOISY)).unwrap();
    let svg = table.to_svg().unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(svg.matches("<polyline").count(), 2);
    for class in ["median-gap", "theory-bound"] {
        let series = svg.split(&format!("class=\"{class}\"")).nth(1).unwrap();
        let points = series.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(points.split_whitespace().count(), 3);
    }
}

#[test]
fn uncovered_exploration_is_refused() {
    // game1's own exploration misses two selectors, a deviation of its one-selector equilibria
    let text = NOISY.replace("rho = \"one-unit\"\n", "").replace("game2", "game1");
    let err = run_sweep(&spec(&text)).unwrap_err();
    assert!(matches!(err, Error::Infeasible(_)));
}
