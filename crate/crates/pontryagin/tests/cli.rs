//! Exit-code contract and file-format behavior of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pontryagin")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn export_and_solve(dir: &Path) -> (String, String) {
    let problem = dir.join("p.json").display().to_string();
    let traj = dir.join("t.csv").display().to_string();
    assert_eq!(code(&run(&["catalog", "export", "lqr-scalar", &problem])), 0);
    let out = run(&["solve", &problem, "--guess", "-1", "--out", &traj]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    (problem, traj)
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["solve", "--help"])), 0);
    assert_eq!(code(&run(&["no-such-subcommand"])), 1);
    assert_eq!(code(&run(&[])), 1);
}

#[test]
fn missing_problem_file_exits_1_with_path_on_stderr() {
    let out = run(&["solve", "missing.json", "--guess", "-1", "--out", "/tmp/x.csv"]);
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("missing.json"), "stderr: {stderr}");
}

#[test]
fn solve_writes_constant_h_column() {
    let dir = tempfile::tempdir().unwrap();
    let (_, traj) = export_and_solve(dir.path());

    let text = std::fs::read_to_string(&traj).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header, "t,x1,u1,psi1,H");
    let h_vals: Vec<f64> = lines
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let max = h_vals.iter().cloned().fold(f64::MIN, f64::max);
    let min = h_vals.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max - min <= 1e-6, "H column spread {}", max - min);
}

#[test]
fn verify_exit_codes_follow_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let (problem, traj) = export_and_solve(dir.path());

    // Within integrator accuracy: pass.
    assert_eq!(code(&run(&["verify", &problem, &traj])), 0);
    // Tolerance below the discretization floor: a well-formed run that
    // fails its checks.
    let out = run(&["verify", &problem, &traj, "--tol", "1e-14"]);
    assert_eq!(code(&out), 2);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("\"pass\": false"), "{stdout}");
}

#[test]
fn reread_trajectory_gives_bit_identical_report() {
    let dir = tempfile::tempdir().unwrap();
    let (problem, traj) = export_and_solve(dir.path());

    let first = run(&["verify", &problem, &traj, "--tol", "1e-6"]);

    // Round-trip the CSV through the reader and writer: 17-significant-digit
    // printing preserves every double, so the re-written file verifies to a
    // byte-identical report.
    let entry = pontryagin::catalog::get("lqr-scalar").unwrap();
    let e = pontryagin::cli::read_trajectory(Path::new(&traj), &entry.problem, -1.0).unwrap();
    let copy = dir.path().join("copy.csv").display().to_string();
    pontryagin::cli::write_trajectory(Path::new(&copy), &entry.problem, &e).unwrap();
    assert_eq!(
        std::fs::read_to_string(&traj).unwrap(),
        std::fs::read_to_string(&copy).unwrap()
    );

    let second = run(&["verify", &problem, &copy, "--tol", "1e-6"]);
    assert_eq!(code(&first), 0);
    assert_eq!(code(&second), 0);
    // Identical up to the echoed file path in the settings block.
    let strip = |out: &Output| {
        String::from_utf8_lossy(&out.stdout)
            .lines()
            .filter(|l| !l.contains("\"trajectory\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&first), strip(&second));
}

#[test]
fn corrupted_trajectory_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (problem, traj) = export_and_solve(dir.path());

    let text = std::fs::read_to_string(&traj).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mid = lines.len() / 2;
    let mut fields: Vec<String> = lines[mid].split(',').map(String::from).collect();
    fields[3] = "0.25".to_string(); // overwrite psi1
    lines[mid] = fields.join(",");
    let bad = dir.path().join("bad.csv").display().to_string();
    std::fs::write(&bad, lines.join("\n") + "\n").unwrap();

    let out = run(&["verify", &problem, &bad]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_trajectory_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let (problem, traj) = export_and_solve(dir.path());

    let truncated = dir.path().join("trunc.csv").display().to_string();
    let text = std::fs::read_to_string(&traj).unwrap();
    let broken: String = text.lines().take(5).map(|l| format!("{l}\n")).collect::<String>()
        + "not,a,number,row,here\n";
    std::fs::write(&truncated, broken).unwrap();
    assert_eq!(code(&run(&["verify", &problem, &truncated])), 1);
}

#[test]
fn augment_check_argument_validation() {
    let dir = tempfile::tempdir().unwrap();
    let (problem, traj) = export_and_solve(dir.path());

    assert_eq!(code(&run(&["augment-check", &problem, &traj, "--vbar", "0.5"])), 0);
    assert_eq!(code(&run(&["augment-check", &problem, &traj, "--vbar", "1.5"])), 1);
    assert_eq!(code(&run(&["augment-check", &problem, &traj])), 1);
}

#[test]
fn catalog_subcommands() {
    let out = run(&["catalog", "list"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["lqr-scalar", "bang-integrator", "harmonic-action", "rest"] {
        assert!(stdout.contains(name), "missing {name}: {stdout}");
    }

    assert_eq!(code(&run(&["catalog", "show", "lqr-scalar"])), 0);
    assert_eq!(code(&run(&["catalog", "show", "no-such-entry"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("x.json").display().to_string();
    assert_eq!(code(&run(&["catalog", "export", "no-such-entry", &out_path])), 1);
}
