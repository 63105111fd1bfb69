mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{sha256_file, synthetic_esu, synthetic_raster};
use lai_gpr::evaluation::{cross_model_bias, load_scatter};
use lai_gpr::field::write_esu_csv;
use lai_gpr::raster::{data_path_for, Layer, PixelMask, Raster};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lai-gpr"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> BTreeMap<String, String> {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        write_esu_csv(&synthetic_esu(40, 4, 21), &root.join("esu.csv")).unwrap();
        let raster = synthetic_raster(24, 16, 3);
        let h = root.join("scene.hdr");
        raster.save(&h, &data_path_for(&h)).unwrap();
        Fixture { _dir: dir, root }
    }

    fn p(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn train(&self, out: &str, instrument: &str) -> BTreeMap<String, String> {
        ok(&[
            "train",
            "--esu",
            s(&self.p("esu.csv")),
            "--instrument",
            instrument,
            "--runs",
            "5",
            "--restarts",
            "2",
            "--out",
            s(&self.p(out)),
        ])
    }

    fn map(&self, model: &str, out: &str) -> BTreeMap<String, String> {
        ok(&[
            "predict-map",
            "--model",
            s(&self.p(model)),
            "--raster",
            s(&self.p("scene.hdr")),
            "--out",
            s(&self.p(out)),
        ])
    }
}

#[test]
fn version_names_formats() {
    let out = run(&["--version"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("gpr-lai-model/1") && text.contains("gpr-lai-raster/1"),
        "{text}"
    );
}

#[test]
fn train_writes_archive_and_reruns_identically() {
    let f = Fixture::new();
    let summary = f.train("t1", "app");
    assert_eq!(summary["runs"], "5");
    assert_eq!(summary["failed_runs"], "0");
    assert!(summary["rmse"].contains('('));
    let t1 = f.p("t1");
    for file in [
        "config.txt",
        "runs.csv",
        "predictions.csv",
        "report.txt",
        "report.csv",
        "final.model",
        "models/run_004.model",
    ] {
        assert!(t1.join(file).exists(), "{file}");
    }
    assert!(!t1.join("INCOMPLETE").exists());
    let runs = fs::read_to_string(t1.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 6);
    assert!(fs::read_to_string(t1.join("report.csv"))
        .unwrap()
        .contains("LAI_APP"));

    f.train("t2", "app");
    assert_eq!(
        sha256_file(&t1.join("runs.csv")),
        sha256_file(&f.p("t2/runs.csv"))
    );
    assert_eq!(
        sha256_file(&t1.join("final.model")),
        sha256_file(&f.p("t2/final.model"))
    );

    // the echoed config alone reproduces the run
    ok(&[
        "train",
        "--config",
        s(&t1.join("config.txt")),
        "--out",
        s(&f.p("t3")),
    ]);
    assert_eq!(
        sha256_file(&t1.join("runs.csv")),
        sha256_file(&f.p("t3/runs.csv"))
    );

    let single = ok(&[
        "train",
        "--esu",
        s(&f.p("esu.csv")),
        "--instrument",
        "lic",
        "--runs",
        "1",
        "--restarts",
        "1",
        "--out",
        s(&f.p("t4")),
    ]);
    assert_eq!(single["runs"], "1");
    assert_eq!(
        fs::read_to_string(f.p("t4/runs.csv"))
            .unwrap()
            .lines()
            .count(),
        2
    );
}

#[test]
fn overwrite_requires_force() {
    let f = Fixture::new();
    f.train("t", "app");
    let (esu, t) = (f.p("esu.csv"), f.p("t"));
    let again = [
        "train",
        "--esu",
        s(&esu),
        "--instrument",
        "app",
        "--runs",
        "2",
        "--restarts",
        "1",
        "--out",
        s(&t),
    ];
    let out = run(&again);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--force"));
    let mut forced = again.to_vec();
    forced.push("--force");
    ok(&forced);
}

#[test]
fn bad_inputs_fail_with_nonzero_exit() {
    let f = Fixture::new();
    let out = run(&[
        "train",
        "--esu",
        s(&f.p("missing.csv")),
        "--instrument",
        "app",
        "--out",
        s(&f.p("x")),
    ]);
    assert!(!out.status.success());
    assert!(!f.p("x").exists());
    let out = run(&[
        "train",
        "--esu",
        s(&f.p("esu.csv")),
        "--instrument",
        "xyz",
        "--out",
        s(&f.p("x")),
    ]);
    assert!(!out.status.success());
    let out = run(&[
        "train",
        "--esu",
        s(&f.p("esu.csv")),
        "--instrument",
        "app",
        "--runs",
        "0",
        "--out",
        s(&f.p("x")),
    ]);
    assert!(!out.status.success());
    assert!(!f.p("x").exists());
}

#[test]
fn predict_map_outputs_and_recount() {
    let f = Fixture::new();
    f.train("t", "app");
    let summary = f.map("t/final.model", "m");
    let m = f.p("m");
    for file in [
        "mean.hdr",
        "mean.bin",
        "sigma.hdr",
        "cv.bin",
        "gcos.hdr",
        "provenance.txt",
        "config.txt",
        "mean.png",
        "cv.png",
        "gcos.png",
        "mean.stretch.txt",
    ] {
        assert!(m.join(file).exists(), "{file}");
    }
    assert_eq!(summary["pixels"], "384");
    assert_eq!(summary["valid"], "384");
    let pct: f64 = summary["gcos_pass_percent"].parse().unwrap();
    assert!((0.0..=100.0).contains(&pct));

    // recount over the emitted cv layer
    let cv = Layer::load(&m.join("cv.hdr")).unwrap();
    let flagged: Vec<f64> = cv.valid_values().collect();
    let pass = flagged.iter().filter(|c| **c < 20.0).count();
    let expected = if flagged.is_empty() {
        0.0
    } else {
        100.0 * pass as f64 / flagged.len() as f64
    };
    assert_eq!(summary["gcos_pass_percent"], format!("{expected:.2}"));
    assert_eq!(summary["gcos_pass"], pass.to_string());

    // deterministic rerun
    f.map("t/final.model", "m2");
    for file in [
        "mean.bin",
        "sigma.bin",
        "cv.bin",
        "gcos.bin",
        "mean.png",
        "provenance.txt",
    ] {
        assert_eq!(
            sha256_file(&m.join(file)),
            sha256_file(&f.p("m2").join(file)),
            "{file}"
        );
    }
}

#[test]
fn predict_map_with_empty_mask_and_mismatch() {
    let f = Fixture::new();
    f.train("t", "app");
    let mh = f.p("none.hdr");
    PixelMask::from_fn(24, 16, |_, _| false)
        .save(&mh, &data_path_for(&mh))
        .unwrap();
    let summary = ok(&[
        "predict-map",
        "--model",
        s(&f.p("t/final.model")),
        "--raster",
        s(&f.p("scene.hdr")),
        "--mask",
        s(&mh),
        "--out",
        s(&f.p("m")),
    ]);
    assert_eq!(summary["valid"], "0");
    assert_eq!(summary["gcos_pass_percent"], "0.00");

    let wrong = f.p("wrong.hdr");
    PixelMask::all_valid(10, 10)
        .save(&wrong, &data_path_for(&wrong))
        .unwrap();
    let out = run(&[
        "predict-map",
        "--model",
        s(&f.p("t/final.model")),
        "--raster",
        s(&f.p("scene.hdr")),
        "--mask",
        s(&wrong),
        "--out",
        s(&f.p("bad")),
    ]);
    assert!(!out.status.success());
    assert!(!f.p("bad").exists());

    let four = f.p("four.hdr");
    Raster::new(3, 3, 4, vec![0.1; 36], -9999.0, None)
        .unwrap()
        .save(&four, &data_path_for(&four))
        .unwrap();
    let out = run(&[
        "predict-map",
        "--model",
        s(&f.p("t/final.model")),
        "--raster",
        s(&four),
        "--out",
        s(&f.p("bad")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bands"));
    assert!(!f.p("bad").exists());
}

#[test]
fn compare_products() {
    let f = Fixture::new();
    f.train("ta", "app");
    f.train("td", "dhp");
    f.train("tl", "lic");
    f.map("ta/final.model", "app");
    f.map("td/final.model", "dhp");
    f.map("tl/final.model", "lic");

    let same = ok(&[
        "compare",
        "--product",
        s(&f.p("app")),
        "--product",
        s(&f.p("app")),
        "--label",
        "x",
        "--label",
        "y",
        "--out",
        s(&f.p("c0")),
    ]);
    assert_eq!(same["x_vs_y.mean_bias"], "0.0");
    assert_eq!(same["x_vs_y.mean_r2"].parse::<f64>().unwrap(), 1.0);

    let three = ok(&[
        "compare",
        "--product",
        s(&f.p("app")),
        "--product",
        s(&f.p("dhp")),
        "--product",
        s(&f.p("lic")),
        "--out",
        s(&f.p("c")),
    ]);
    assert_eq!(three["pairs"], "3");
    let table = fs::read_to_string(f.p("c/comparison.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);

    let a = Layer::load(&f.p("app/mean.hdr")).unwrap();
    let d = Layer::load(&f.p("dhp/mean.hdr")).unwrap();
    let (va, vd): (Vec<f64>, Vec<f64>) = a.valid_values().zip(d.valid_values()).unzip();
    let bias = cross_model_bias(&va, &vd).unwrap();
    assert_eq!(three["app_vs_dhp.mean_bias"], format!("{bias:?}"));
    assert!(bias > 0.0, "app reads higher than dhp in the fixture");
    let (sa, sd) = load_scatter(&f.p("c/scatter_app_dhp_mean.csv")).unwrap();
    assert_eq!((sa, sd), (va, vd));

    let small = f.p("small");
    fs::create_dir_all(&small).unwrap();
    Layer::nodata(3, 3).save(&small.join("mean.hdr")).unwrap();
    Layer::nodata(3, 3).save(&small.join("sigma.hdr")).unwrap();
    let out = run(&[
        "compare",
        "--product",
        s(&f.p("app")),
        "--product",
        s(&small),
        "--out",
        s(&f.p("c2")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid mismatch"));
    let out = run(&[
        "compare",
        "--product",
        s(&f.p("app")),
        "--out",
        s(&f.p("c3")),
    ]);
    assert!(!out.status.success());
}

#[test]
fn render_layer() {
    let f = Fixture::new();
    let h = f.p("l.hdr");
    Layer {
        width: 2,
        height: 1,
        values: vec![Some(0.0), Some(3.5)],
    }
    .save(&h)
    .unwrap();
    let summary = ok(&[
        "render",
        "--layer",
        s(&h),
        "--palette",
        "grayscale",
        "--out",
        s(&f.p("l.png")),
    ]);
    assert_eq!(
        (summary["min"].as_str(), summary["max"].as_str()),
        ("0.0", "3.5")
    );
    let first = sha256_file(&f.p("l.png"));
    assert!(
        !run(&["render", "--layer", s(&h), "--out", s(&f.p("l.png"))])
            .status
            .success()
    );
    ok(&[
        "render",
        "--layer",
        s(&h),
        "--palette",
        "grayscale",
        "--out",
        s(&f.p("l.png")),
        "--force",
    ]);
    assert_eq!(first, sha256_file(&f.p("l.png")));
}
