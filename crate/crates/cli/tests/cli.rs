use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hyperchoreo_cli::SolutionFile;
use tempfile::TempDir;

fn asset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperchoreo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_variant(dir: &TempDir, name: &str, edit: impl FnOnce(&mut SolutionFile)) -> PathBuf {
    let mut file = SolutionFile::read(&asset("figure_eight.json")).unwrap();
    edit(&mut file);
    let path = dir.path().join(name);
    file.write(&path).unwrap();
    path
}

#[test]
fn solve_from_seed_then_verify() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("eight.json");
    let seed = asset("figure_eight_seed.json");
    let s = run(&["solve", "--seed", p(&seed), "--K2", "52", "--out", p(&out)]);
    assert_eq!(code(&s), 0, "{}", String::from_utf8_lossy(&s.stderr));
    assert!(stdout(&s).contains("Relative 2-norm of the residual"));
    let v = run(&["verify", p(&out)]);
    assert_eq!(code(&v), 0);
    assert!(stdout(&v).trim_end().ends_with("pass"));
    let file = SolutionFile::read(&out).unwrap();
    assert_eq!(file.coeffs.len(), 105);
}

#[test]
fn unresolved_solve_exits_2_without_writing() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("coarse.json");
    let seed = asset("figure_eight_seed.json");
    let s = run(&["solve", "--seed", p(&seed), "--K", "3", "--K2", "4", "--out", p(&out)]);
    assert_eq!(code(&s), 2);
    assert!(!out.exists());
}

#[test]
fn colliding_seed_exits_3() {
    let dir = TempDir::new().unwrap();
    let seed = write_variant(&dir, "still.json", |f| {
        for c in f.coeffs.iter_mut() {
            *c = [0.0, 0.0];
        }
    });
    let out = dir.path().join("out.json");
    let s = run(&["solve", "--seed", p(&seed), "--out", p(&out)]);
    assert_eq!(code(&s), 3);
    assert!(!out.exists());
}

#[test]
fn malformed_input_exits_4() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"format_version\": 1, \"config\": {}}").unwrap();
    assert_eq!(code(&run(&["verify", p(&bad)])), 4);
    assert_eq!(code(&run(&["verify", "/nonexistent/file.json"])), 4);
    assert_eq!(code(&run(&["solve", "--bogus"])), 4);
    let out = dir.path().join("out.json");
    assert_eq!(code(&run(&["solve", "--seed", p(&bad), "--out", p(&out)])), 4);
}

#[test]
fn verify_rejects_a_truncated_solution() {
    let dir = TempDir::new().unwrap();
    let cut = write_variant(&dir, "cut.json", |f| {
        let k = f.config.bandwidth;
        f.coeffs = f.coeffs[k - 8..=k + 8].to_vec();
        f.config.bandwidth = 8;
    });
    let v = run(&["verify", p(&cut)]);
    assert_eq!(code(&v), 2);
    assert!(stdout(&v).trim_end().ends_with("fail"));
    assert_eq!(code(&run(&["verify", p(&asset("figure_eight.json"))])), 0);
}

#[test]
fn planar_solve_writes_the_planar_tag() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("planar.json");
    let seed = asset("figure_eight_seed.json");
    let s = run(&["solve", "--seed", p(&seed), "--R", "inf", "--out", p(&out)]);
    assert_eq!(code(&s), 0, "{}", stdout(&s));
    assert!(fs::read_to_string(&out).unwrap().contains("\"planar\""));
    assert_eq!(code(&run(&["verify", p(&out)])), 0);
}

#[test]
fn export_orbit_and_coefficients() {
    let eight = asset("figure_eight.json");
    let e = run(&["export", p(&eight), "--samples", "300"]);
    assert_eq!(code(&e), 0);
    let text = stdout(&e);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 3 * 2 + 3 * 3);
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 300);
    let r2 = 1.5f64 * 1.5;
    for (m, row) in rows.iter().enumerate() {
        // body 1 is body 0 a third of a period later
        let later = &rows[(m + 100) % 300];
        assert!((row[3] - later[1]).abs() < 1e-12 && (row[4] - later[2]).abs() < 1e-12);
        for j in 0..3 {
            let x = &row[7 + 3 * j..10 + 3 * j];
            let sheet = x[0] * x[0] + x[1] * x[1] - x[2] * x[2];
            assert!((sheet + r2).abs() <= 1e-12 * r2, "{sheet}");
        }
    }

    let c = run(&["export", p(&eight), "--format", "coeffs"]);
    assert_eq!(code(&c), 0);
    let text = stdout(&c);
    let rows: Vec<(i64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (k, a) = l.split_once(',').unwrap();
            (k.parse().unwrap(), a.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 105);
    let tail = rows.iter().filter(|(k, _)| k.abs() == 52).map(|r| r.1).fold(0.0, f64::max);
    assert!(tail < 1e-14, "{tail}");
}

#[test]
fn export_to_file() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("orbit.csv");
    let e = run(&["export", p(&asset("figure_eight.json")), "--samples", "16", "--out", p(&out)]);
    assert_eq!(code(&e), 0);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 17);
}

#[test]
fn sweep_with_one_radius_has_no_slope() {
    let s = run(&["sweep", "--family", p(&asset("figure_eight.json")), "--R-list", "10", "--label", "eight"]);
    assert_eq!(code(&s), 0, "{}", String::from_utf8_lossy(&s.stderr));
    let text = stdout(&s);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "family,R,diff,slope");
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "eight");
    assert_eq!(fields[1], "10");
    let diff: f64 = fields[2].parse().unwrap();
    assert!(diff > 0.0 && diff < 0.1, "{diff}");
    assert_eq!(fields[3], "");
}

fn search(dir: &Path, trials: &str, rng: &str) -> Output {
    run(&[
        "search", "--n", "3", "--R", "1.5", "--K", "10", "--trials", trials, "--rng", rng, "--out-dir", p(dir),
    ])
}

fn solutions(dir: &Path) -> Vec<SolutionFile> {
    let mut names: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    names.iter().map(|n| SolutionFile::read(n).unwrap()).collect()
}

#[test]
fn search_is_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(code(&search(a.path(), "4", "11")), 0);
    assert_eq!(code(&search(b.path(), "4", "11")), 0);
    let (sa, sb) = (solutions(a.path()), solutions(b.path()));
    assert!(!sa.is_empty());
    assert_eq!(sa.len(), sb.len());
    for (x, y) in sa.iter().zip(&sb) {
        assert_eq!(x.coeffs, y.coeffs);
    }
    let actions: Vec<f64> = sa.iter().map(|s| s.diagnostics.phase2.unwrap().action).collect();
    assert!(actions.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn single_trial_search_equals_solve() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&search(dir.path(), "1", "5")), 0);
    let found = solutions(dir.path());
    let out = dir.path().join("solve.json");
    let s = run(&["solve", "--n", "3", "--R", "1.5", "--K", "10", "--seed", "5", "--out", p(&out)]);
    assert_eq!(code(&s), 0);
    let solved = SolutionFile::read(&out).unwrap();
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].coeffs, solved.coeffs);
}
