use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL_MODEL: &str = "\
# small and quick
trunk_channels=4,6
trunk_strides=2,2
head_channels=4
integrated_channels=2
d_e=4
epochs=2
batch_size=8
lr=0.05
seed=3
";

fn eat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eat"))
        .args(args)
        .env("EAT_THREADS", "1")
        .output()
        .expect("run eat")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let f = Fixture { dir };
        let o = eat(&[
            "synth-gen",
            "--out",
            p(&f.data()),
            "--classes",
            "4",
            "--attrs",
            "4",
            "--per-class",
            "6",
            "--test-per-class",
            "3",
            "--image-size",
            "16",
            "--seed",
            "1",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::write(f.path("run.cfg"), SMALL_MODEL).unwrap();
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn data(&self) -> PathBuf {
        self.path("data")
    }

    fn train(&self, mode: &str, ckpt: &str) -> Output {
        eat(&[
            "train",
            "--data",
            p(&self.data()),
            "--config",
            p(&self.path("run.cfg")),
            "--mode",
            mode,
            "--out-ckpt",
            p(&self.path(ckpt)),
        ])
    }
}

#[test]
fn synth_gen_writes_layout() {
    let f = Fixture::new();
    let d = f.data();
    for name in ["labels.csv", "split.csv", "attributes.csv", "classes.csv"] {
        assert!(d.join(name).is_file(), "{name}");
    }
    assert_eq!(fs::read_dir(d.join("images")).unwrap().count(), 4 * 9);
    assert_eq!(fs::read_dir(d.join("masks")).unwrap().count(), 4 * 9);
    let attrs = fs::read_to_string(d.join("attributes.csv")).unwrap();
    assert_eq!(attrs.lines().count(), 5);
}

#[test]
fn synth_gen_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = eat(&["synth-gen", "--out", p(&out), "--classes", "many"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--classes"), "{}", stderr(&o));
    let o = eat(&["synth-gen", "--out", p(&out), "--classes", "8", "--attrs", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn train_is_deterministic_and_logs() {
    let f = Fixture::new();
    let o = f.train("eat", "a.ckpt");
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(f.train("eat", "b.ckpt").status.success());
    assert_eq!(fs::read(f.path("a.ckpt")).unwrap(), fs::read(f.path("b.ckpt")).unwrap());
    let log = fs::read_to_string(f.path("a.ckpt.log.csv")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines[0], "epoch,l_c,l_a,acc,attr_acc");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].split(',').all(|f| !f.is_empty()));

    assert!(f.train("baseline", "base.ckpt").status.success());
    let log = fs::read_to_string(f.path("base.ckpt.log.csv")).unwrap();
    for line in log.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 5);
        assert!(fields[2].is_empty() && fields[4].is_empty(), "{line}");
    }
}

#[test]
fn train_rejects_bad_config() {
    let f = Fixture::new();
    fs::write(f.path("bad.cfg"), "epochs=1\n# fine\nwidth=3\n").unwrap();
    let o = eat(&[
        "train",
        "--data",
        p(&f.data()),
        "--config",
        p(&f.path("bad.cfg")),
        "--out-ckpt",
        p(&f.path("x.ckpt")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.cfg:3: unknown key `width`"), "{}", stderr(&o));

    fs::write(f.path("mismatch.cfg"), format!("{SMALL_MODEL}n_classes=5\n")).unwrap();
    let o = eat(&[
        "train",
        "--data",
        p(&f.data()),
        "--config",
        p(&f.path("mismatch.cfg")),
        "--out-ckpt",
        p(&f.path("x.ckpt")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!f.path("x.ckpt").exists());
}

#[test]
fn non_finite_loss_exits_3() {
    let f = Fixture::new();
    fs::write(f.path("hot.cfg"), "trunk_channels=4,6\ntrunk_strides=2,2\nepochs=3\nlambda=1e38\n").unwrap();
    let o = eat(&[
        "train",
        "--data",
        p(&f.data()),
        "--config",
        p(&f.path("hot.cfg")),
        "--out-ckpt",
        p(&f.path("hot.ckpt")),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("epoch"), "{}", stderr(&o));
    assert!(!f.path("hot.ckpt").exists());
}

#[test]
fn eval_prints_metrics() {
    let f = Fixture::new();
    assert!(f.train("eat", "m.ckpt").status.success());
    let csv = f.path("pred.csv");
    let o = eat(&["eval", "--data", p(&f.data()), "--ckpt", p(&f.path("m.ckpt")), "--out", p(&csv)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("category_accuracy="));
    assert!(text.contains("mean_attribute_accuracy=0."));
    let rows = fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4 * 3);

    let other = f.path("other");
    assert!(eat(&[
        "synth-gen", "--out", p(&other), "--classes", "5", "--attrs", "4", "--per-class", "1",
        "--test-per-class", "1", "--image-size", "16",
    ])
    .status
    .success());
    let o = eat(&["eval", "--data", p(&other), "--ckpt", p(&f.path("m.ckpt"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupt_checkpoint_is_rejected() {
    let f = Fixture::new();
    assert!(f.train("eat", "m.ckpt").status.success());
    let mut bytes = fs::read(f.path("m.ckpt")).unwrap();
    bytes[40] ^= 1;
    fs::write(f.path("m.ckpt"), bytes).unwrap();
    let o = eat(&["eval", "--data", p(&f.data()), "--ckpt", p(&f.path("m.ckpt"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("checksum"), "{}", stderr(&o));
}

#[test]
fn explain_writes_json_and_maps() {
    let f = Fixture::new();
    assert!(f.train("eat", "m.ckpt").status.success());
    let run = |out: &Path| {
        eat(&[
            "explain",
            "--data",
            p(&f.data()),
            "--ckpt",
            p(&f.path("m.ckpt")),
            "--image-id",
            "test_00001",
            "--out-dir",
            p(out),
        ])
    };
    let (x, y) = (f.path("x"), f.path("y"));
    let o = run(&x);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("Classified as "));
    assert!(run(&y).status.success());

    let mut names: Vec<String> = fs::read_dir(&x)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let images = names.iter().filter(|n| n.ends_with(".ppm")).count();
    assert_eq!(images, 3 + 1);
    assert!(names.contains(&"test_00001.class.ppm".to_string()));
    for n in &names {
        assert_eq!(fs::read(x.join(n)).unwrap(), fs::read(y.join(n)).unwrap(), "{n}");
    }

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(x.join("test_00001.explain.json")).unwrap()).unwrap();
    assert_eq!(json["image_id"], "test_00001");
    assert_eq!(json["top_attributes"].as_array().unwrap().len(), 3);
    for r in json["top_attributes"].as_array().unwrap() {
        assert!(x.join(r["map_file"].as_str().unwrap()).is_file());
    }
    let scores: Vec<f64> = json["top_attributes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["score"].as_f64().unwrap())
        .collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));

    let o = eat(&[
        "explain", "--data", p(&f.data()), "--ckpt", p(&f.path("m.ckpt")), "--image-id", "nope",
        "--out-dir", p(&x),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn far_reports_and_ratio() {
    let f = Fixture::new();
    assert!(f.train("eat", "m.ckpt").status.success());
    let out = f.path("far1");
    let o = eat(&["far", "--data", p(&f.data()), "--ckpt-a", p(&f.path("m.ckpt")), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("far_a.csv").is_file());
    assert!(!out.join("far_b.csv").exists());
    let csv = fs::read_to_string(out.join("far_a.csv")).unwrap();
    assert!(csv.starts_with("image_id,far,pi_fg,pi_bg,saturated\n"));
    assert_eq!(csv.lines().count(), 1 + 4 * 3 + 1);

    let out = f.path("far2");
    let o = eat(&[
        "far", "--data", p(&f.data()), "--ckpt-a", p(&f.path("m.ckpt")), "--ckpt-b", p(&f.path("m.ckpt")),
        "--out", p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("ratio=1.000000"), "{}", stdout(&o));

    fs::remove_dir_all(f.data().join("masks")).unwrap();
    let o = eat(&["far", "--data", p(&f.data()), "--ckpt-a", p(&f.path("m.ckpt")), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
