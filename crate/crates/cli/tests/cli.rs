use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stablepart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stablepart"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const CLASSIC: &str = "4\n2 3 4\n3 1 4\n1 2 4\n1 2 3\n";

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for p in [&a, &b] {
        let o = stablepart(&["gen", "--n", "4", "--seed", "42", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let odd = stablepart(&["gen", "--n", "5"]);
    assert_eq!(odd.status.code(), Some(1));
    assert!(stablepart(&["gen", "--n", "5", "--allow-odd"]).status.success());
    let json = stablepart(&["gen", "--n", "6", "--seed", "1", "--format", "json"]);
    assert!(stdout(&json).trim_start().starts_with('{'));
}

#[test]
fn solve_reports_the_odd_parties_of_the_classic_instance() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "classic.txt", CLASSIC);
    let o = stablepart(&["solve", "--in", &inst]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["solvable"], false);
    assert_eq!(v["odd_parties"], serde_json::json!([[1, 2, 3], [4]]));
    assert_eq!(v["max_matching_size"], 1);
    assert_eq!(v["partition"]["succ"], serde_json::json!([2, 3, 1, 4]));
}

#[test]
fn verify_exit_code_is_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "classic.txt", CLASSIC);
    let good = write(dir.path(), "good.txt", "(1 2 3)(4)");
    let bad = write(dir.path(), "bad.json", r#"{"n":4,"succ":[2,1,4,3]}"#);
    let o = stablepart(&["verify", "--in", &inst, "--partition", &good]);
    assert_eq!(o.status.code(), Some(0));
    let o = stablepart(&["verify", "--in", &inst, "--partition", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("witness: members 2 and 3 block"));
}

#[test]
fn exact_commands() {
    assert_eq!(stdout(&stablepart(&["exact", "prob", "--shape", "2,2"])), "233/648\n");
    assert_eq!(stdout(&stablepart(&["exact", "prob", "--shape", "3+fp"])), "1/216\n");
    assert_eq!(stdout(&stablepart(&["exact", "expected", "--n", "4"])), "233/216\n");
    let gf = stdout(&stablepart(&["exact", "gf", "--shape", "2,2"]));
    assert!(gf.starts_with("z^4\t1/81\n"));
    assert!(gf.ends_with("# at z=1: 233/648\n"));
    let json: serde_json::Value =
        serde_json::from_str(&stdout(&stablepart(&["exact", "prob", "--shape", "2,2", "--json"]))).unwrap();
    assert_eq!(json["value"], "233/648");
    let c = stdout(&stablepart(&["exact", "constants"]));
    assert!(c.contains("leading_constant\t1.04328"));
    assert!(c.contains("e_half\t1.6487212707001282"));
}

#[test]
fn exit_codes() {
    let refused = stablepart(&["exact", "prob", "--shape", "2,2,2,2,2,2"]);
    assert_eq!(refused.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("cap"));
    assert_eq!(stablepart(&["exact", "prob", "--shape", "4"]).status.code(), Some(1));
    assert_eq!(stablepart(&["solve", "--in", "/nonexistent/file"]).status.code(), Some(1));
    assert_eq!(stablepart(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(stablepart(&["gen", "--n", "4", "--bogus"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.txt");
    stablepart(&["gen", "--n", "12", "--out", big.to_str().unwrap()]);
    let o = stablepart(&["enumerate", "--in", big.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = stablepart(&["enumerate", "--in", big.to_str().unwrap(), "--cap", "13"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn enumerate_lists_partitions_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "classic.txt", CLASSIC);
    let o = stablepart(&["enumerate", "--in", &inst, "--allow-fp"]);
    assert_eq!(stdout(&o), "(1 2 3)(4)\n# 1 stable; 3+fp: 1\n");
    let o = stablepart(&["enumerate", "--in", &inst, "--allow-fp", "--csv"]);
    assert!(stdout(&o).starts_with("kind,partition,shape,count\npartition,(1 2 3)(4),\"3+fp\",\n"));
}

#[test]
fn estimates_print_json() {
    let o = stablepart(&["estimate", "stability", "--shape", "2,2", "--samples", "20000", "--seed", "3"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n_samples"], 20000);
    let mean = v["mean"].as_f64().unwrap();
    assert!((mean - 233.0 / 648.0).abs() < 5.0 * v["std_error"].as_f64().unwrap());
    let o = stablepart(&["estimate", "pair", "--first", "(1 2)(3 4)(5 6)", "--second", "(1 2 3)(4 5 6)", "--samples", "2000"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["mean"], 0.0);
}

#[test]
fn experiment_output_does_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "small.toml",
        "seed = 9\nconstants = true\n\
         [[instances]]\nn = [6, 10]\ntrials = 40\n\
         [[estimates]]\nsamples = 20000\n\
         [[estimates]]\nname = \"pair\"\nkind = \"pair\"\nsamples = 20000\n\
         [[bounds]]\nn = 20\nvectors = 5000\n\
         [[structure]]\nn = [5]\ntrials = 30\n\
         [[exact]]\nkind = \"gf\"\n",
    );
    let out1 = dir.path().join("one");
    let out2 = dir.path().join("two");
    for (out, workers) in [(&out1, "1"), (&out2, "2")] {
        let o = stablepart(&["--workers", workers, "experiment", "--config", &cfg, "--out-dir", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(&out1).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 9);
    for name in names {
        assert_eq!(fs::read(out1.join(&name)).unwrap(), fs::read(out2.join(&name)).unwrap(), "{name:?}");
    }
    let csv = fs::read_to_string(out1.join("instances_n10.csv")).unwrap();
    assert!(csv.starts_with(
        "n,trial,m,odd_parties,has_fixed_point,solvable,rank_sum,rank_ratio,r_max,max_matching_size,blocking_count,s_count,q_fraction\n"
    ));
    assert_eq!(csv.lines().count(), 41);

    let bad = write(dir.path(), "bad.toml", "[[instances]]\nn = [4]\nunknown = 1\n");
    let o = stablepart(&["experiment", "--config", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown"));
}
