use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_sbheom"))
            .args(args)
            .env("SBHEOM_CACHE_DIR", self.path("cache"))
            .env("RUST_LOG", "info")
            .current_dir(self.dir.path())
            .output()
            .unwrap()
    }
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            l.split(',')
                .map(|x| x.parse().unwrap_or(f64::NAN))
                .collect()
        })
        .collect()
}

const CLOSED: &str = r#"
[bath]
s = 1.0
alpha = 0.0
omega_c_over_delta = 5.0

[fit]
n_real = 2
n_imag = 2

[hierarchy]
depth = 2

[integration]
record_dt = 0.01
substeps = 2
t_eq = 20.0
t_resp = 60.0
initial = "sigma_x_ground"

[spectrum]
omega_max = 4.0
d_omega = 0.02
"#;

const SMALL: &str = r#"
[bath]
s = 1.0
alpha = 0.1
omega_c_over_delta = 5.0

[fit]
t_max_wc = 40.0
samples = 200
n_real = 2
n_imag = 2
multistart = 2
tolerance = 1e-2
max_rate = 10.0

[hierarchy]
depth = 2

[integration]
record_dt = 0.05
t_eq = 10.0
t_resp = 10.0
"#;

#[test]
fn missing_key_exits_with_config_error() {
    let ws = Workspace::new();
    let cfg = ws.write("bad.toml", &CLOSED.replace("alpha = 0.0\n", ""));
    let o = ws.run(&["relax", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bath.alpha"), "{}", stderr(&o));
}

#[test]
fn missing_depth_is_a_config_error() {
    let ws = Workspace::new();
    let cfg = ws.write("c.toml", &CLOSED.replace("[hierarchy]\ndepth = 2\n", ""));
    let o = ws.run(&["relax", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("hierarchy.depth"));
}

#[test]
fn oversized_hierarchy_exits_with_budget_error() {
    let ws = Workspace::new();
    let cfg = ws.write(
        "c.toml",
        &SMALL.replace("depth = 2", "depth = 3\nado_budget = 20"),
    );
    let o = ws.run(&["relax", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    // C(4 + 3, 3) = 35 ADOs
    assert!(stderr(&o).contains("35") && stderr(&o).contains("20"));
}

#[test]
fn unstable_step_exits_with_divergence() {
    let ws = Workspace::new();
    let text = SMALL
        .replace("record_dt = 0.05", "record_dt = 5.0\nsubsteps = 1")
        .replace("t_eq = 10.0", "t_eq = 1000.0")
        .replace("t_resp = 10.0", "t_resp = 1000.0");
    let cfg = ws.write("c.toml", &text);
    let o = ws.run(&["relax", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn closed_system_spectrum_has_one_peak_at_two_delta() {
    let ws = Workspace::new();
    let cfg = ws.write("c.toml", CLOSED);
    let o = ws.run(&["spectrum", cfg.to_str().unwrap(), "--out", "out"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let peaks = data_rows(&ws.path("out/peaks.csv"));
    assert_eq!(peaks.len(), 1, "{peaks:?}");
    assert!((peaks[0][0] - 2.0).abs() < 0.02, "{peaks:?}");
    let header = fs::read_to_string(ws.path("out/chi2.csv")).unwrap();
    assert!(header.lines().any(|l| l == "omega,chi2"));
    // the ground state of the isolated spin is stationary
    assert!(header.contains("converged: true"));
}

#[test]
fn response_reuses_cached_equilibrium() {
    let ws = Workspace::new();
    let cfg = ws.write("c.toml", SMALL);
    let first = ws.run(&["relax", cfg.to_str().unwrap(), "--out", "out"]);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(!stderr(&first).contains("equilibrium cache hit"));
    let second = ws.run(&["respond", cfg.to_str().unwrap(), "--out", "out"]);
    assert!(second.status.success(), "{}", stderr(&second));
    assert!(
        stderr(&second).contains("equilibrium cache hit"),
        "{}",
        stderr(&second)
    );
    assert!(stderr(&second).contains("fit cache hit"));
    let chi = data_rows(&ws.path("out/chi.csv"));
    assert_eq!(chi[0][1], 0.0);
}

#[test]
fn every_output_reruns_bitwise_from_its_manifest() {
    let ws = Workspace::new();
    let cfg = ws.write("c.toml", SMALL);
    let cfg = cfg.to_str().unwrap();
    let commands = [
        (
            "fit-bath",
            vec!["fit.json", "fit_residual.csv", "fit_loglog.csv"],
        ),
        ("relax", vec!["relax_m.csv"]),
        ("respond", vec!["chi.csv"]),
        ("spectrum", vec!["chi2.csv", "chi2_raw.csv", "peaks.csv"]),
        ("kernel", vec!["kernel.csv", "delta_m.csv", "rate.json"]),
    ];
    for (command, files) in &commands {
        let o = ws.run(&[command, cfg, "--out", "a"]);
        assert!(o.status.success(), "{command}: {}", stderr(&o));
        for file in files {
            let original = ws.path(&format!("a/{file}"));
            // fresh cache, so nothing is reused
            let o = Command::new(env!("CARGO_BIN_EXE_sbheom"))
                .args([command, original.to_str().unwrap(), "--out", "b"])
                .env(
                    "SBHEOM_CACHE_DIR",
                    ws.path(&format!("cache-{command}-{file}")),
                )
                .current_dir(ws.dir.path())
                .output()
                .unwrap();
            assert!(o.status.success(), "{command} {file}: {}", stderr(&o));
            assert_eq!(
                fs::read(&original).unwrap(),
                fs::read(ws.path(&format!("b/{file}"))).unwrap(),
                "{command}: {file} differs"
            );
        }
    }
}

#[test]
fn inspect_prints_verified_manifest() {
    let ws = Workspace::new();
    let cfg = ws.write("c.toml", CLOSED);
    assert!(ws
        .run(&["relax", cfg.to_str().unwrap(), "--out", "out"])
        .status
        .success());
    let o = ws.run(&["inspect", "out/relax_m.csv"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("\"command\": \"relax\""));
    assert!(text.contains("(verified)"));

    let csv = fs::read_to_string(ws.path("out/relax_m.csv")).unwrap();
    fs::write(
        ws.path("tampered.csv"),
        csv.replace("\"alpha\":0.0", "\"alpha\":0.5"),
    )
    .unwrap();
    let o = ws.run(&["inspect", "tampered.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mismatch"));
}

#[test]
fn sweep_resumes_without_recomputing() {
    let ws = Workspace::new();
    let text = format!("{SMALL}\n[sweep]\ns = [1.0]\nalpha = [0.0, 0.1]\n");
    let cfg = ws.write("c.toml", &text);
    let first = ws.run(&["sweep", cfg.to_str().unwrap(), "--out", "out"]);
    assert!(first.status.success(), "{}", stderr(&first));
    let table = fs::read_to_string(ws.path("out/sweep.csv")).unwrap();
    // simulate an interruption after the first point
    let cut: Vec<&str> = table
        .lines()
        .take_while(|l| !l.starts_with("1,0.1,"))
        .collect();
    fs::write(ws.path("out/sweep.csv"), cut.join("\n") + "\n").unwrap();
    // a cold cache proves that only the missing point runs
    let o = Command::new(env!("CARGO_BIN_EXE_sbheom"))
        .args(["sweep", cfg.to_str().unwrap(), "--out", "out"])
        .env("SBHEOM_CACHE_DIR", ws.path("cold"))
        .env("RUST_LOG", "info")
        .current_dir(ws.dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stderr(&o).contains("resuming sweep with 1 completed points"),
        "{}",
        stderr(&o)
    );
    assert_eq!(fs::read_to_string(ws.path("out/sweep.csv")).unwrap(), table);
    let cold: Vec<_> = fs::read_dir(ws.path("cold")).unwrap().collect();
    // one fit, one checkpoint, one relax record
    assert_eq!(cold.len(), 3);
    assert!(ws.path("out/boundaries.json").exists());
}

#[test]
fn kernel_needs_relaxation_from_plus() {
    let ws = Workspace::new();
    let cfg = ws.write("c.toml", CLOSED);
    let o = ws.run(&["kernel", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("integration.initial"), "{}", stderr(&o));
}
