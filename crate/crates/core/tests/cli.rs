use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qnoise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnoise")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(qnoise(&["radiometry", "--bogus"]).status.code(), Some(2));
    assert_eq!(qnoise(&[]).status.code(), Some(2));
    let missing = qnoise(&["network", "solve", "/definitely/not/here.net"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot read"));
    assert_eq!(qnoise(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_parameters_exit_one() {
    let o = qnoise(&["radiometry", "--temperature=-1", "--lo", "1e9", "--hi", "2e9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn metadata_line_comes_first() {
    let o = qnoise(&["photonstats", "--mean", "2", "--samples", "5000", "--seed", "11"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let first = out.lines().next().unwrap();
    assert!(first.starts_with("# qnoise 0.1.0 constants=CODATA-2018"));
    assert!(first.contains("seed=11"));
    assert!(first.contains("rng=ChaCha8"));

    let det = stdout(&qnoise(&["detector", "nep", "--nep", "1e-20", "--nu0", "1e12", "--resolution", "100"]));
    assert!(!det.lines().next().unwrap().contains("seed="));
}

#[test]
fn fig7_has_all_families() {
    let o = qnoise(&["compare", "--fig7"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let header = out.lines().nth(1).unwrap();
    assert!(header.starts_with("nu_Hz,"));
    for family in ["amp_system_T=", "source_T=", "nep=", "dark="] {
        assert!(header.contains(family), "missing {family} in {header}");
    }
    let cols = header.split(',').count();
    let rows: Vec<&str> = out.lines().skip(2).collect();
    assert_eq!(rows.len(), 101);
    assert!(rows.iter().all(|r| r.split(',').count() == cols));
}

#[test]
fn unstable_netlist_names_the_loop() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(
        dir.path(),
        "loop.net",
        "freq 1e10\nnode a\nnode b\nedge a b 1.2 0\nedge b a 1.0 0\nsource a thermal 4\n",
    );
    let o = qnoise(&["network", "solve", &net]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("a -> b -> a"), "{err}");
}

#[test]
fn stable_netlist_reports_temperatures() {
    let dir = tempfile::tempdir().unwrap();
    let net = write(
        dir.path(),
        "att.net",
        "freq 1e10\nnode a\nnode b\nedge a b 0.5 0\nsource a thermal 4\n",
    );
    let out = stdout(&qnoise(&["network", "solve", &net]));
    let b_row = out.lines().find(|l| l.starts_with("b,")).unwrap();
    let t: f64 = b_row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((t - 1.0).abs() < 1e-12);
}

#[test]
fn output_file_is_written_whole() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("table.csv");
    fs::write(&target, "stale").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qnoise"))
        .args(["circuit", "materials", "-o"])
        .arg(&target)
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = fs::read_to_string(&target).unwrap();
    assert!(text.starts_with("# qnoise"));
    assert!(text.contains("NbN"));
    // no stray temporary files left beside the output
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);

    // a failing run leaves an existing file untouched
    let bad = Command::new(env!("CARGO_BIN_EXE_qnoise"))
        .args(["radiometry", "--temperature=-3", "--lo", "1e9", "--hi", "2e9", "-o"])
        .arg(&target)
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(fs::read_to_string(&target).unwrap(), text);
}

#[test]
fn kernel_modes_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let kernel = write(
        dir.path(),
        "k.txt",
        "kind field\nfreq 1e11\npoint 0 0 0 1\npoint 1 0 0 1\nvalues\n2 0 0 0\n0 0 1 0\n",
    );
    let out = stdout(&qnoise(&["detector", "modes", &kernel]));
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].starts_with("weight,"));
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with('2'));
}
