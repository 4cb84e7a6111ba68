use std::path::Path;
use std::process::{Command, Output};

use pasm_cli::io::{load_tensor, store_tensor, TensorFormat};
use pasm_core::{QTensor, WordSpec};

fn pasm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pasm"))
        .args(args)
        .env_remove("PASM_GATE_CONSTANTS")
        .output()
        .expect("spawn pasm")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_worked_fixture() {
    let o = pasm(&["run", "--fixture", "worked"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("N=5"));
    assert!(s.lines().any(|l| l == "9876"));
    assert!(s.contains("verdict: PASS"));
}

#[test]
fn run_zero_fixture_gives_bias() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"bias":[7,-3],"relu":false}"#);
    let out = dir.path().join("out.txt");
    let o = pasm(&[
        "run",
        "--fixture",
        "zero",
        "--config",
        &cfg,
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = load_tensor(&out, None).unwrap();
    assert_eq!(t.shape(), &[2, 3, 3]);
    assert!(t.data()[..9].iter().all(|&v| v == 7));
    assert!(t.data()[9..].iter().all(|&v| v == -3));
}

#[test]
fn run_random_fixture_seed_one() {
    let o = pasm(&["run", "--fixture", "random", "--seed", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("N=135"));
    assert!(stdout(&o).contains("verdict: PASS (3 backends bit-exact)"));
}

#[test]
fn quantize_then_run_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let word = WordSpec::new(16).unwrap();
    let image = QTensor::new(vec![2, 4, 4], word, (0..32).map(|v| v * 37 - 500).collect()).unwrap();
    let kernel = QTensor::new(
        vec![3, 2, 3, 3],
        word,
        (0..54).map(|v| (v % 5) * 11 - 20).collect(),
    )
    .unwrap();
    let (ip, kp) = (dir.path().join("img.bin"), dir.path().join("k.txt"));
    store_tensor(&ip, &image, TensorFormat::BinV1).unwrap();
    store_tensor(&kp, &kernel, TensorFormat::TextV1).unwrap();
    let (dp, xp) = (dir.path().join("d.txt"), dir.path().join("x.txt"));
    let o = pasm(&[
        "quantize",
        "--weights",
        path_str(&kp),
        "--bins",
        "8",
        "--dict-out",
        path_str(&dp),
        "--indices-out",
        path_str(&xp),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("B=5 SSE=0"), "{}", stdout(&o));
    assert_eq!(
        load_tensor(&dp, None).unwrap().data(),
        &[-20, -9, 2, 13, 24]
    );

    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.bin"));
    let o = pasm(&[
        "run",
        "--image",
        path_str(&ip),
        "--kernel",
        path_str(&kp),
        "--out",
        path_str(&a),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("N=18"));
    let o = pasm(&[
        "run",
        "--image",
        path_str(&ip),
        "--dict",
        path_str(&dp),
        "--indices",
        path_str(&xp),
        "--out",
        path_str(&b),
        "--format",
        "bin-v1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (a, b) = (
        load_tensor(&a, None).unwrap(),
        load_tensor(&b, None).unwrap(),
    );
    assert_eq!(a, b);
    assert_eq!(a.shape(), &[3, 2, 2]);
}

#[test]
fn quantize_reports_oracle_centroids() {
    let dir = tempfile::tempdir().unwrap();
    let w = write(dir.path(), "w.txt", "dims 4\nwidth 8\n0 1 9 10\n");
    let o = pasm(&["quantize", "--weights", &w, "--bins", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("B=2 SSE=2"));
    assert!(stdout(&o).contains("dictionary: [1, 10]"));
    let w = write(dir.path(), "w4.txt", "dims 2 2\nwidth 8\n-5 3 3 100\n");
    let o = pasm(&["quantize", "--weights", &w, "--bins", "4"]);
    assert!(stdout(&o).contains("SSE=0"));
}

#[test]
fn validation_errors_exit_one_with_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<(Vec<String>, &str)> = vec![
        (
            vec!["quantize".into(), "--bins".into(), "300".into()],
            "bins",
        ),
        (
            vec![
                "cost".into(),
                "--config".into(),
                write(dir.path(), "a.json", r#"{"kx":4}"#),
            ],
            "kx",
        ),
        (
            vec![
                "cost".into(),
                "--config".into(),
                write(dir.path(), "b.json", r#"{"b":512}"#),
            ],
            "b:",
        ),
        (
            vec![
                "sweep".into(),
                "--config".into(),
                write(dir.path(), "c.json", r#"{"sweep":{"w":[0]}}"#),
            ],
            "sweep.w",
        ),
        (
            vec![
                "run".into(),
                "--config".into(),
                write(dir.path(), "d.json", r#"{"m":2,"bias":[1]}"#),
                "--fixture".into(),
                "zero".into(),
            ],
            "bias",
        ),
        (
            vec![
                "run".into(),
                "--image".into(),
                write(dir.path(), "e.txt", "dims 1 1\nwidth 8\n300\n"),
                "--kernel".into(),
                write(dir.path(), "f.txt", "dims 1 1 1 1\nwidth 8\n1\n"),
            ],
            "image",
        ),
        (
            vec![
                "simulate".into(),
                "--lanes".into(),
                "6".into(),
                "--macs".into(),
                "4".into(),
            ],
            "n_shared_mac",
        ),
        (vec!["frobnicate".into()], "frobnicate"),
        (vec!["run".into(), "--format".into(), "csv".into()], "csv"),
    ];
    for (args, field) in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = pasm(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        let err = stderr(&o);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
        assert!(err.contains(field), "{args:?}: {err}");
    }
}

#[test]
fn gate_constants_env_override() {
    let run = |env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_pasm"));
        cmd.arg("cost");
        match env {
            Some(v) => cmd.env("PASM_GATE_CONSTANTS", v),
            None => cmd.env_remove("PASM_GATE_CONSTANTS"),
        };
        cmd.output().unwrap()
    };
    let default = stdout(&run(None));
    assert!(default.contains(",ws-mac-array,16,0,228864,"));
    let ones = run(Some("1,1,1,1"));
    assert!(ones.status.success());
    // simple MAC at W=32 with unit constants: 32 + 1024 + 32
    assert!(stdout(&ones).contains("32,16,mac-array,16,0,17408,"));
    let bad = run(Some("1,2,3"));
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("PASM_GATE_CONSTANTS"));
}

#[test]
fn simulate_reference_cycle_counts() {
    let o = pasm(&[
        "simulate", "--lanes", "16", "--macs", "4", "--n", "1024", "--bins", "16",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("cycles=1088 expected=1088"));
    assert!(stdout(&o).contains("busy mac3 64"));
    let o = pasm(&[
        "simulate", "--lanes", "1", "--macs", "1", "--n", "1024", "--bins", "16",
    ]);
    assert!(stdout(&o).starts_with("cycles=1040 expected=1040"));
    let o = pasm(&["simulate", "--mode", "ws-mac", "--lanes", "1", "--n", "5"]);
    assert!(stdout(&o).starts_with("cycles=5 expected=5"));
}

#[test]
fn simulate_trace_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = pasm(&[
            "simulate",
            "--lanes",
            "4",
            "--macs",
            "2",
            "--n",
            "9",
            "--bins",
            "4",
            "--seed",
            "3",
            "--trace",
            path_str(p),
        ]);
        assert!(o.status.success());
    }
    let (a, b) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("cycle,unit,action,lane,bin,value\n"));
    // 4 lanes x 9 accumulates, then 2 lanes x 4 bins per MAC
    assert_eq!(text.lines().count(), 1 + 36 + 16);
}

#[test]
fn cost_rows_and_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"w":32,"b":16,"sweep":{"w":[32],"b":[16],"kinds":["ws-mac-array","pas-array-shared-mac"]}}"#,
    );
    let o = pasm(&["sweep", "--config", &cfg]);
    assert!(o.status.success());
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], pasm_cli::CSV_HEADER);
    assert_eq!(
        lines[1],
        "32,16,ws-mac-array,16,0,228864,163840,52224,135,0.0000"
    );
    assert_eq!(
        lines[2],
        "32,16,pas-array-shared-mac,16,4,127360,40960,62208,199,47.4074"
    );

    let o = pasm(&["sweep"]);
    let rows: Vec<Vec<String>> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 4 * 5 * 3);
    let key = |r: &Vec<String>| (r[0].parse::<u64>().unwrap(), r[1].parse::<u64>().unwrap());
    assert!(rows.windows(2).all(|w| key(&w[0]) <= key(&w[1])));
    let at = |w: &str, b: &str, kind: &str| -> u64 {
        rows.iter()
            .find(|r| r[0] == w && r[1] == b && r[2] == kind)
            .unwrap()[5]
            .parse()
            .unwrap()
    };
    assert!(at("32", "256", "pas-array-shared-mac") > at("32", "256", "ws-mac-array"));
    assert!(at("32", "16", "pas-array-shared-mac") < at("32", "16", "ws-mac-array"));
}

#[test]
fn sweep_to_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = pasm(&["sweep", "--seed", "5", "--out", path_str(&out)]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(
        std::fs::read(&out).unwrap(),
        pasm(&["sweep", "--seed", "5"]).stdout
    );
}

#[test]
fn selftest_bundled_and_corrupted() {
    let o = pasm(&["selftest"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let s = stdout(&o);
    assert_eq!(
        s.lines().filter(|l| l.starts_with("PASS macops/")).count(),
        12
    );
    assert!(s.contains("selftest: 26 passed, 0 failed"));

    let dir = tempfile::tempdir().unwrap();
    for name in pasm_cli::fixtures::FILES {
        let src = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("fixtures")
            .join(name);
        std::fs::copy(src, dir.path().join(name)).unwrap();
    }
    let o = pasm(&["selftest", "--fixtures", path_str(dir.path())]);
    assert!(o.status.success());

    // wrong expected value: check fails
    let t2 = dir.path().join("macops.csv");
    let text = std::fs::read_to_string(&t2)
        .unwrap()
        .replace("32,5,800", "32,5,801");
    std::fs::write(&t2, text).unwrap();
    let o = pasm(&["selftest", "--fixtures", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL macops/c32-k5"));

    // unparseable file
    std::fs::write(
        dir.path().join("worked_kernel.txt"),
        "dims 1 5 1 1\nwidth 8\n17 4 13\n",
    )
    .unwrap();
    let o = pasm(&["selftest", "--fixtures", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("worked_kernel"));
}

#[test]
fn help_exits_zero() {
    let o = pasm(&["--help"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("selftest"));
}
