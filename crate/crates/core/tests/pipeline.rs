use std::fs;
use std::sync::Arc;

use approx::assert_relative_eq;
use oscent::entanglement::{ground_renyi, log_negativity, EntropyReport};
use oscent::experiments::{
    aggregate_json, arealaw_fit, run_scaling, write_gnuplot, write_records_csv, ExperimentConfig,
};
use oscent::hamiltonian::{anderson_realization, DisorderModel};
use oscent::spectral::BipartiteSystem;
use oscent::{BipartiteSystemF32, BipartiteSystemF64, CouplingMatrixF32, CouplingMatrixF64, Lattice, Region};
use proptest::prelude::*;

fn chain(n: usize) -> Arc<Lattice> {
    Arc::new(Lattice::build_box(1, &[n]).unwrap())
}

#[test]
fn f32_and_f64_agree() {
    let lat = chain(16);
    let model = DisorderModel::new(8.0, 3).unwrap();
    let region = Region::centered_interval(lat.clone(), 4).unwrap();
    for r in 0..5 {
        let h64: CouplingMatrixF64 = anderson_realization(lat.clone(), &model, r).unwrap();
        let h32: CouplingMatrixF32 = anderson_realization(lat.clone(), &model, r).unwrap();
        let s64: BipartiteSystemF64 = BipartiteSystem::new(&h64, &region).unwrap();
        let s32: BipartiteSystemF32 = BipartiteSystem::new(&h32, &region).unwrap();
        let e64 = ground_renyi(&s64.symplectic, 0.5).unwrap();
        let e32 = ground_renyi(&s32.symplectic, 0.5f32).unwrap();
        assert_relative_eq!(e32 as f64, e64, max_relative = 1e-3);
        assert_relative_eq!(
            log_negativity(&s32.symplectic) as f64,
            log_negativity(&s64.symplectic),
            max_relative = 1e-3
        );
        let rep32 = EntropyReport::compute(&s32, &[0.5, 1.0], &[0, 3]).unwrap();
        let rep64 = EntropyReport::compute(&s64, &[0.5, 1.0], &[0, 3]).unwrap();
        for (a, b) in rep32.excitations.iter().zip(&rep64.excitations) {
            assert_relative_eq!(a.computed_bound, b.computed_bound, max_relative = 1e-3);
        }
    }
}

#[test]
fn f32_ingredients_satisfy_identities() {
    let lat = Arc::new(Lattice::build_box(2, &[4, 4]).unwrap());
    let h: CouplingMatrixF32 = anderson_realization(lat.clone(), &DisorderModel::new(2.0, 9).unwrap(), 0).unwrap();
    let region = Region::sub_box(lat, &[1, 1], &[2, 2]).unwrap();
    let sys = BipartiteSystem::new(&h, &region).unwrap();
    let q = oscent::entanglement::q_matrix(&sys);
    for j in 0..q.ncols() {
        assert!((q.column(j).sum() - 2.0).abs() < 1e-4);
    }
    assert!(sys.symplectic.mu.iter().all(|&m| m >= 1.0));
}

const SCAN: &str = r#"{
  "dimension": 2,
  "lattice": { "lengths": [8, 8] },
  "hamiltonian": { "kind": "anderson", "k_max": 4.0 },
  "region": { "kind": "box", "corner": [3, 3], "lengths": [2, 2] },
  "scaling_regions": [
    { "kind": "box", "corner": [3, 3], "lengths": [1, 1] },
    { "kind": "box", "corner": [3, 3], "lengths": [2, 2] },
    { "kind": "box", "corner": [2, 2], "lengths": [3, 3] },
    { "kind": "box", "corner": [2, 2], "lengths": [4, 4] }
  ],
  "realizations": 12,
  "seed": 77,
  "eps": [0.5, 1.0],
  "excitations": { "kind": "range", "start": 0, "end": 3 }
}"#;

#[test]
fn csv_round_trip_reproduces_aggregates() {
    let config = ExperimentConfig::from_json(SCAN).unwrap();
    let results = run_scaling(&config, 3).unwrap();
    let mut buf = Vec::new();
    write_records_csv(&results, &config.eps, &mut buf).unwrap();

    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    let mut sums = std::collections::BTreeMap::<(usize, String), (f64, usize)>::new();
    for row in rdr.records() {
        let row = row.unwrap();
        assert_eq!(&row[11], "true");
        if &row[7] != "0" {
            continue;
        }
        let region: usize = row[2].parse().unwrap();
        let v: f64 = row[5].parse().unwrap();
        let e = sums.entry((region, row[4].to_string())).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    for r in &results {
        let s = r.aggregate.renyi[0].unwrap();
        let (sum, n) = sums[&(r.region_size, "5.00000000000000e-1".to_string())];
        assert_eq!(n, 12);
        assert_relative_eq!(sum / n as f64, s.mean, max_relative = 1e-13);
    }
    let boundary: Vec<usize> = results.iter().map(|r| r.boundary_size).collect();
    assert_eq!(boundary, vec![1, 4, 8, 12]);
}

#[test]
fn outputs_for_a_scaling_scan() {
    let config = ExperimentConfig::from_json(SCAN).unwrap();
    let results = run_scaling(&config, 2).unwrap();
    let fit = arealaw_fit(&results).unwrap();
    // the 1-site region has no theorem bound, so the fit uses the computed bound
    assert_eq!(fit.quantity, "excited_computed_bound_max");
    assert!(fit.slope_vs_boundary.is_some());
    let agg = aggregate_json(&results, Some(&fit));
    assert_eq!(agg["regions"].as_array().unwrap().len(), 4);
    assert_eq!(agg["regions"][0]["empirical"]["status"], "empirical");
    let mut dat = Vec::new();
    write_gnuplot(&results, &mut dat).unwrap();
    let dat = String::from_utf8(dat).unwrap();
    assert_eq!(dat.lines().filter(|l| !l.starts_with('#')).count(), 4);
    for line in dat.lines().skip(1) {
        assert_eq!(line.split_whitespace().count(), 10);
    }
}

#[test]
fn config_with_matrix_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("h.csv"), "3, -1, 0\n-1, 3, -1\n0, -1, 3\n").unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"dimension":1,"lattice":{"lengths":[3]},"hamiltonian":{"kind":"custom","matrix_file":"h.csv"},
            "region":{"kind":"sites","sites":[[0]]},"excitations":{"kind":"all"}}"#,
    )
    .unwrap();
    let config = ExperimentConfig::load(&cfg).unwrap();
    let r = run_scaling(&config, 1).unwrap().remove(0);
    assert!(r.records[0].renyi[0] > 0.0);
    assert_eq!(r.records[0].excitations.len(), 3);
    assert!(r.empirical.is_none());
}

#[test]
fn region_outside_lattice_is_rejected() {
    let bad = SCAN.replace("\"corner\": [2, 2], \"lengths\": [4, 4]", "\"corner\": [6, 6], \"lengths\": [4, 4]");
    let config = ExperimentConfig::from_json(&bad).unwrap();
    assert!(run_scaling(&config, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn scan_is_thread_independent(seed in any::<u64>(), threads in 2usize..6) {
        let mut config = ExperimentConfig::from_json(SCAN).unwrap();
        config.seed = seed;
        config.realizations = 5;
        let a = run_scaling(&config, 1).unwrap();
        let b = run_scaling(&config, threads).unwrap();
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        write_records_csv(&a, &config.eps, &mut ca).unwrap();
        write_records_csv(&b, &config.eps, &mut cb).unwrap();
        prop_assert_eq!(ca, cb);
    }

    #[test]
    fn per_record_bounds_hold(seed in any::<u64>()) {
        let mut config = ExperimentConfig::from_json(SCAN).unwrap();
        config.seed = seed;
        config.realizations = 3;
        config.eps = vec![0.25, 0.5, 0.75, 1.0];
        for r in run_scaling(&config, 1).unwrap() {
            for rec in &r.records {
                prop_assert!(rec.renyi.windows(2).all(|w| w[0] >= w[1] - 1e-12));
                prop_assert!(rec.renyi[1] <= rec.gs_correlator_bound);
                for e in &rec.excitations {
                    if let Some(t) = e.theorem_bound {
                        prop_assert!(e.computed_bound <= t);
                    }
                }
            }
        }
    }
}
