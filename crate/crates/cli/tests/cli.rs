use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;

use uacqr::data::{self, ResponseColumn, SplitFractions};
use uacqr::{ForestParams, Method};
use uacqr_cli::config::{self, Setting};
use uacqr_cli::crossval::{self, CvSettings};
use uacqr_cli::run::{self, BINS_FILE, RESOLVED_FILE, RESULTS_FILE};
use uacqr_cli::RunConfig;

fn uacqr() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_uacqr"));
    c.env_remove(config::OUT_DIR_ENV);
    c
}

fn write_table(path: &Path, n: usize) {
    let mut text = String::from("x1,x2,y\n");
    for i in 0..n {
        let a = ((i * 37) % 101) as f64 / 101.0;
        let b = ((i * 53) % 97) as f64 / 97.0;
        text.push_str(&format!("{a},{b},{}\n", 3.0 * a + (b - 0.5) * ((i * 7) % 5) as f64));
    }
    fs::write(path, text).unwrap();
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn simulate_writes_a_row_per_method_and_trial_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let run_into = |name: &str| {
        let out = tmp.path().join(name);
        let status = uacqr()
            .args(["--mode", "simulate", "--seed", "7", "--trees", "20", "--set", "trials=2", "--set", "n_test=40"])
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        out
    };
    let a = run_into("a");
    let b = run_into("b");
    let results = read(&a, RESULTS_FILE);
    let rows: Vec<&str> = results.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * Method::ALL.len());
    for m in Method::ALL {
        let trials: Vec<&str> =
            rows.iter().filter(|r| r.split(',').nth(1) == Some(&m.to_string())).map(|r| r.split(',').nth(2).unwrap()).collect();
        assert_eq!(trials, ["0", "1"], "{m}");
    }
    assert!(rows.iter().all(|r| r.split(',').nth(3) == Some("7")));
    assert_eq!(results, read(&b, RESULTS_FILE));
    assert_eq!(read(&a, BINS_FILE), read(&b, BINS_FILE));
}

#[test]
fn evaluate_records_split_sizes() {
    let tmp = tempfile::tempdir().unwrap();
    let table = tmp.path().join("t.csv");
    write_table(&table, 10);
    let out = tmp.path().join("out");
    let status = uacqr()
        .args(["--mode", "evaluate", "--trees", "10", "--min-samples-leaf", "1", "--methods", "cqr,uacqr-p"])
        .arg("--data")
        .arg(&table)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let results = read(&out, RESULTS_FILE);
    let header: Vec<&str> = results.lines().next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<&str>> = results.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!((r[col("n_train")], r[col("n_cal")], r[col("n_test")]), ("4", "4", "2"));
    }
}

#[test]
fn unknown_key_fails_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("run.conf");
    fs::write(&conf, "# comment\nmode = simulate\nnum_trees = 5\n").unwrap();
    let out = uacqr().arg("--config").arg(&conf).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("num_trees"), "{stderr}");
}

#[test]
fn flags_override_the_file_and_env_sets_the_output() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("run.conf");
    fs::write(&conf, "trials = 9\nalpha = 0.3\nout = nowhere\n").unwrap();
    let out = tmp.path().join("env-out");
    let status = uacqr()
        .arg("--config")
        .arg(&conf)
        .args(["--alpha", "0.2", "--trees", "5", "--set", "trials=1", "--set", "n_test=10", "--methods", "cqr"])
        .env(config::OUT_DIR_ENV, &out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let resolved = RunConfig::resolve(&config::read_config_file(&out.join(RESOLVED_FILE)).unwrap()).unwrap();
    assert_eq!((resolved.alpha, resolved.trials), (0.2, 1));
    assert_eq!(resolved.out, out);
}

#[test]
fn resolved_config_reruns_bit_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let table = tmp.path().join("t.csv");
    write_table(&table, 120);
    let first = tmp.path().join("first");
    let settings = vec![
        Setting::new("mode", "crossval", "test"),
        Setting::new("data", table.display().to_string(), "test"),
        Setting::new("trees", "15", "test"),
        Setting::new("cv_grid", "2,1,8", "test"),
        Setting::new("transform", "mean-abs", "test"),
        Setting::new("seed", "11", "test"),
        Setting::new("out", first.display().to_string(), "test"),
    ];
    run::run(&RunConfig::resolve(&settings).unwrap()).unwrap();

    let second = tmp.path().join("second");
    let status = uacqr()
        .arg("--config")
        .arg(first.join(RESOLVED_FILE))
        .arg("--out")
        .arg(&second)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    for name in [RESULTS_FILE, BINS_FILE, run::CV_FILE] {
        assert_eq!(read(&first, name), read(&second, name), "{name}");
    }
}

#[test]
fn crossval_only_reads_training_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let table = tmp.path().join("t.csv");
    write_table(&table, 200);
    let ds = data::load_csv(&table, &ResponseColumn::Last).unwrap();
    let split = data::split_dataset(ds.n(), SplitFractions::default(), 3).unwrap();
    let settings = CvSettings {
        alpha: 0.1,
        randomized: true,
        center: Default::default(),
        forest: ForestParams { n_trees: 10, ..Default::default() },
        seed: 5,
    };
    for method in Method::ALL {
        let touched = Mutex::new(BTreeSet::new());
        let outcome = crossval::crossval_with_access(
            |idx| {
                touched.lock().unwrap().extend(idx.iter().copied());
                ds.subset(idx)
            },
            &split,
            &[1, 5],
            method,
            &settings,
        )
        .unwrap();
        let touched = touched.into_inner().unwrap();
        let train: BTreeSet<usize> = split.train.iter().copied().collect();
        assert!(!touched.is_empty());
        assert!(touched.is_subset(&train), "{method} read rows outside the training block");
        let plain = crossval::crossval_min_samples_leaf(&ds, &split, &[1, 5], method, &settings).unwrap();
        assert_eq!(plain, outcome);
    }
}

#[test]
fn crossval_grid_edge_cases() {
    let tmp = tempfile::tempdir().unwrap();
    let table = tmp.path().join("t.csv");
    write_table(&table, 100);
    let ds = data::load_csv(&table, &ResponseColumn::Last).unwrap();
    let split = data::split_dataset(ds.n(), SplitFractions::default(), 1).unwrap();
    let settings = CvSettings {
        alpha: 0.1,
        randomized: false,
        center: Default::default(),
        forest: ForestParams { n_trees: 8, ..Default::default() },
        seed: 2,
    };
    let one = crossval::crossval_min_samples_leaf(&ds, &split, &[7], Method::Cqr, &settings).unwrap();
    assert_eq!(one.chosen, 7);
    let dup = crossval::crossval_min_samples_leaf(&ds, &split, &[3, 3], Method::Cqr, &settings).unwrap();
    assert_eq!(dup.chosen, 3);
    assert!(crossval::crossval_min_samples_leaf(&ds, &split, &[], Method::Cqr, &settings).is_err());

    let tiny = data::split_dataset(5, SplitFractions::default(), 0).unwrap();
    assert!(crossval::crossval_min_samples_leaf(&ds, &tiny, &[1], Method::Cqr, &settings).is_err());
}
