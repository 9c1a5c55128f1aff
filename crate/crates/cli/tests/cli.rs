use std::process::{Command, Output};

fn tiling(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tiling")).args(args).env_remove("TILING_CACHE").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(v: &'a serde_json::Value, path: &[&str]) -> &'a serde_json::Value {
    path.iter().fold(v, |v, k| &v[*k])
}

#[test]
fn classify_verdicts() {
    let o = tiling(&["classify", "51"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["verdict"], "certified-non-tiling");
    assert_eq!(field(&v, &["selmer", "neg", "value", "dim_mod_torsion"]), 0);
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys[0], "n");
    assert_eq!(keys.last().unwrap().as_str(), "notes");

    let v: serde_json::Value = serde_json::from_str(stdout(&tiling(&["classify", "5"])).trim()).unwrap();
    assert_eq!(v["verdict"], "rank-positive-predicted");
    let v: serde_json::Value = serde_json::from_str(stdout(&tiling(&["classify", "1"])).trim()).unwrap();
    assert_eq!(v["verdict"], "special-case");
    assert!(field(&v, &["selmer", "pos", "reason"]).is_string());
}

#[test]
fn unsupported_input_exit_code() {
    assert_eq!(tiling(&["classify", "12"]).status.code(), Some(3));
    assert_eq!(tiling(&["scan", "--from", "1", "--to", "9", "--class", "3 modulo"]).status.code(), Some(3));
    assert_eq!(tiling(&["crosscheck", "nope"]).status.code(), Some(3));
}

#[test]
fn scan_filter_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for (jobs, path) in [("1", &a), ("3", &b)] {
        let o = tiling(&["scan", "--from", "4", "--to", "100", "--class", "3 mod 24", "--jobs", jobs, "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let ns: Vec<i64> = text.lines().map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["n"].as_i64().unwrap()).collect();
    assert_eq!(ns, vec![51]);

    let o = tiling(&["scan", "--from", "1", "--to", "300", "--jobs", "1"]);
    let o2 = tiling(&["scan", "--from", "1", "--to", "300", "--jobs", "4"]);
    assert_eq!(o.stdout, o2.stdout);
    let ns: Vec<i64> = stdout(&o).lines().map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["n"].as_i64().unwrap()).collect();
    assert!(ns.windows(2).all(|w| w[0] < w[1]));

    let o = tiling(&["scan", "--from", "52", "--to", "74", "--class", "3 mod 24"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
}

#[test]
fn csv_mirrors_schema() {
    let o = tiling(&["scan", "--from", "49", "--to", "55", "--format", "csv"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("n,sigma_class,"));
    let row51 = lines.find(|l| l.starts_with("51,")).unwrap();
    assert!(row51.ends_with(",certified-non-tiling,0"));
    assert_eq!(row51.split(',').count(), header.split(',').count());
}

#[test]
fn cache_is_append_only_and_keyed() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache.jsonl");
    let c = cache.to_str().unwrap();
    let first = tiling(&["classify", "55", "--cache", c]);
    let again = tiling(&["classify", "55", "--cache", c]);
    assert_eq!(first.stdout, again.stdout);
    assert_eq!(std::fs::read_to_string(&cache).unwrap().lines().count(), 1);

    let o = Command::new(env!("CARGO_BIN_EXE_tiling"))
        .args(["scan", "--from", "50", "--to", "60"])
        .env("TILING_CACHE", &cache)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<String> = std::fs::read_to_string(&cache).unwrap().lines().map(String::from).collect();
    let keys: Vec<i64> = lines.iter().map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["n"].as_i64().unwrap()).collect();
    assert_eq!(keys.iter().filter(|&&n| n == 55).count(), 1);
    assert_eq!(keys.len(), tiling(&["scan", "--from", "50", "--to", "60"]).stdout.iter().filter(|&&b| b == b'\n').count());

    // a record under another version is ignored and recomputed
    let stale = lines[0].replacen("\"version\":1", "\"version\":0", 1).replacen("certified-non-tiling", "inconclusive", 1);
    std::fs::write(&cache, format!("{stale}\n")).unwrap();
    let o = tiling(&["classify", "55", "--cache", c]);
    assert_eq!(o.stdout, first.stdout);
    assert_eq!(std::fs::read_to_string(&cache).unwrap().lines().count(), 2);
}

#[test]
fn density_rows() {
    let o = tiling(&["density", "exact", "--k", "3", "--sigma", "-1,2,3", "--pred", "cond_q:0:2"]);
    assert_eq!(o.status.code(), Some(0));
    let row = stdout(&o);
    assert!(row.contains("p_hat=0.625000"), "{row}");
    assert!(row.contains("exact=5/2^3"));
    let args = ["density", "mc", "--k", "12", "--pred", "joint_7", "--samples", "5000", "--seed", "1"];
    assert_eq!(tiling(&args).stdout, tiling(&args).stdout);
    let o = tiling(&["density", "exact", "--k", "8", "--pred", "always", "--constraints", "none"]);
    assert_eq!(o.status.code(), Some(4));
    let o = tiling(&["density", "exact", "--k", "2", "--sigma", "-1", "--pred", "corank_eq:-1:0"]);
    assert!(stdout(&o).contains("exact=1/2^1"));
}

#[test]
fn crosscheck_suites() {
    let o = tiling(&["crosscheck", "root-table"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("36/36"));
    for (suite, bound) in [("oracle-equiv", "100"), ("theorem-A", "2000"), ("comparison-7", "2000"), ("rednei-oracle", "2000")] {
        let o = tiling(&["crosscheck", suite, "--bound", bound]);
        assert_eq!(o.status.code(), Some(0), "{suite}: {}", stdout(&o));
    }
    let o = tiling(&["crosscheck", "identities", "--bound", "500", "--samples", "50"]);
    assert_eq!(o.status.code(), Some(0));
}
