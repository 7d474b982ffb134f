use std::fs;
use std::process::{Command, Output};

fn dyncc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyncc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_csv_dumps_and_configs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "run",
        "--preset",
        "scenario1",
        "--eta-hat",
        "5,max",
        "--beamformer",
        "maxmin",
        "--snr",
        "0:10:5",
        "--trials",
        "3",
        "--seed",
        "9",
        "--baseline",
        "--out",
        out,
    ];
    let o = dyncc(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let run_dir = dir.path().join("scenario1_seed9");
    let csv = fs::read_to_string(run_dir.join("rates.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "scenario,eta_hat,mode,snr_db,mean_rate_nats,stderr,trials,seed"
    );
    // three settings x three SNR points
    assert_eq!(lines.len(), 1 + 3 * 3);
    assert!(lines[1].starts_with("scenario1,5,cc,0,"));
    assert!(lines[4].starts_with("scenario1,7,cc,0,"));
    assert!(lines[7].starts_with("scenario1,-,unicast-only,0,"));
    for label in ["eta5", "eta7", "unicast"] {
        assert!(run_dir.join(format!("schedule_{label}.txt")).exists());
        assert!(run_dir.join(format!("config_{label}.toml")).exists());
    }

    // same seed, same bytes
    let again = tempfile::tempdir().unwrap();
    let mut args2 = args;
    args2[args2.len() - 1] = again.path().to_str().unwrap();
    assert_eq!(dyncc(&args2).status.code(), Some(0));
    assert_eq!(
        csv,
        fs::read_to_string(again.path().join("scenario1_seed9/rates.csv")).unwrap()
    );

    // every written dump verifies against its config
    for label in ["eta5", "eta7", "unicast"] {
        let dump = run_dir.join(format!("schedule_{label}.txt"));
        let cfg = run_dir.join(format!("config_{label}.toml"));
        let o = dyncc(&["verify", dump.to_str().unwrap(), cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{label}: {}", stdout(&o));
        assert!(stdout(&o).contains("decodable: true"));
    }
}

#[test]
fn verify_rejects_tampered_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump_path = dir.path().join("s.txt");
    let cfg_path = dir.path().join("c.toml");
    let o = dyncc(&[
        "dump-schedule",
        "--preset",
        "uniform",
        "--out",
        dump_path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = dyncc(&["dump-config", "--preset", "uniform"]);
    fs::write(&cfg_path, o.stdout).unwrap();
    let ok = dyncc(&["verify", dump_path.to_str().unwrap(), cfg_path.to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));

    // drop the last transmission
    let text = fs::read_to_string(&dump_path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.pop();
    fs::write(&dump_path, lines.join("\n")).unwrap();
    let bad = dyncc(&["verify", dump_path.to_str().unwrap(), cfg_path.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("complete: false"));

    fs::write(&dump_path, "C 1 1 | (1,2,oops,{})\n").unwrap();
    assert_eq!(
        dyncc(&["verify", dump_path.to_str().unwrap(), cfg_path.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn dump_schedule_prints_header_and_lines() {
    let o = dyncc(&["dump-schedule", "--preset", "scenario1", "--eta-hat", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "# mode=cc P=10 t=1 alpha=10 eta_hat=5 virtual_dof=2 b=0 per_packet=3"
    );
    assert!(lines.next().unwrap().starts_with("C 1 1 | "));
    assert!(text.lines().any(|l| l.starts_with("U 1 | ")));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for args in [
        vec!["run", "--preset", "scenario7", "--out", out],
        vec!["run", "--preset", "uniform", "--snr", "0:x:5", "--out", out],
        vec!["run", "--preset", "uniform", "--beamformer", "mrt", "--out", out],
        vec!["dump-schedule", "--preset", "uniform", "--eta-hat", "0"],
        vec!["dump-schedule"],
        vec!["verify", "missing.txt", "missing.toml"],
        vec!["frobnicate"],
    ] {
        assert_eq!(dyncc(&args).status.code(), Some(2), "{args:?}");
    }
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "eta = [1, 2, 3]\n").unwrap();
    assert_eq!(
        dyncc(&["dump-schedule", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}
