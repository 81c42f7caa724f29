//! Command-line behaviour, emitted file schemas and round trips.

use std::path::{Path, PathBuf};
use std::process::Command;

use hhg_coherence::cli::{parse_and_dispatch, EXIT_EVIDENCE_FAILED, EXIT_INVALID, EXIT_OK};
use hhg_coherence::config::ScenarioId;
use hhg_coherence::io::{
    read_density_csv, read_dipole_csv, read_fock_scan_csv, read_husimi_csv, read_json, read_photon_distribution_csv,
    read_spectrum_csv,
};
use hhg_coherence::quantum_state::CoherenceReport;
use hhg_coherence::scenarios::{emit_report, EvidenceSummary, ScenarioOutcome, EVIDENCE_SCHEMA};
use tempfile::TempDir;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> i32 {
    let mut argv = vec!["hhg".to_string(), sub.into(), "--config".into(), cfg.display().to_string()];
    argv.extend(["--out".to_string(), out.display().to_string()]);
    argv.extend(extra.iter().map(|s| s.to_string()));
    parse_and_dispatch(argv)
}

fn edited(name: &str, from: &str, to: &str, dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(config(name)).unwrap();
    assert!(text.contains(from), "{from} not in {name}");
    let path = dir.join(name);
    std::fs::write(&path, text.replace(from, to)).unwrap();
    path
}

#[test]
fn scenario_b_passes_and_outputs_round_trip() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run("scenario", &config("b.toml"), dir.path(), &[]), EXIT_OK);
    let base = dir.path().join("B_phase_averaged");
    let summary: EvidenceSummary = read_json(&base.join("evidence.json")).unwrap();
    assert_eq!(summary.schema, EVIDENCE_SCHEMA);
    assert_eq!(summary.scenario, Some(ScenarioId::BPhaseAveraged));
    assert!(summary.all_pass);
    assert!(summary.records.iter().any(|r| r.claim == "B.spectrum_matches_coherent"));
    assert!(summary.records.iter().all(|r| r.tolerance >= 0.0));
    let lines = read_spectrum_csv(&base.join("spectrum.csv")).unwrap();
    assert_eq!(lines.len(), 15);
    for q in [1, 3, 5] {
        let rho = read_density_csv(&base.join(format!("rho_q{q}.csv")), q).unwrap();
        assert!(rho.l1_coherence() <= 1e-12);
    }
}

#[test]
fn scenario_a_single_term_toy_has_one_line() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run("scenario", &config("a.toml"), dir.path(), &[]), EXIT_OK);
    let lines = read_spectrum_csv(&dir.path().join("A_coherent/spectrum.csv")).unwrap();
    let peak = lines.iter().map(|l| l.value).fold(0.0, f64::max);
    let nonzero: Vec<u32> = lines.iter().filter(|l| l.value > 1e-20 * peak).map(|l| l.q).collect();
    assert_eq!(nonzero, vec![3]);
}

#[test]
fn scenario_c_reports_power_law() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run("scenario", &config("c.toml"), dir.path(), &[]), EXIT_OK);
    let rows = read_fock_scan_csv(&dir.path().join("C_fock_limit/fock_scan.csv")).unwrap();
    assert_eq!(rows.len(), 3 * 2 * 4);
    for r in &rows {
        assert!(((r.value - r.closed_form) / r.closed_form).abs() <= 1e-6);
    }
    let summary: EvidenceSummary = read_json(&dir.path().join("C_fock_limit/evidence.json")).unwrap();
    let slopes: Vec<f64> = summary
        .records
        .iter()
        .filter(|r| r.claim.starts_with("C.slope"))
        .map(|r| r.measured["slope"] / r.measured["expected"])
        .collect();
    assert_eq!(slopes.len(), 6);
    assert!(slopes.iter().all(|s| (s - 1.0).abs() <= 0.01));
}

#[test]
fn scenario_d_distributions_share_support() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run("scenario", &config("d.toml"), dir.path(), &[]), EXIT_OK);
    let rows = read_photon_distribution_csv(&dir.path().join("D_indistinguishability/photon_distribution.csv")).unwrap();
    for q in [1, 3, 5] {
        let sub: Vec<_> = rows.iter().filter(|r| r.q == q).collect();
        assert!(!sub.is_empty());
        assert!(sub.iter().enumerate().all(|(i, r)| r.n == i));
        for r in sub {
            assert_eq!(r.coherent > 0.0, r.phase_averaged > 0.0);
            assert!((r.coherent - r.phase_averaged).abs() <= 1e-10);
        }
    }
}

#[test]
fn scenario_outputs_are_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(run("scenario", &config("d.toml"), a.path(), &[]), EXIT_OK);
    assert_eq!(run("scenario", &config("d.toml"), b.path(), &["--threads", "1"]), EXIT_OK);
    let sub = "D_indistinguishability";
    let mut names: Vec<_> = std::fs::read_dir(a.path().join(sub)).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 5);
    for name in names {
        let x = std::fs::read(a.path().join(sub).join(&name)).unwrap();
        let y = std::fs::read(b.path().join(sub).join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
    }
}

#[test]
fn zero_kappa_exits_one() {
    let dir = TempDir::new().unwrap();
    let cfg = edited("b.toml", "kappa = 0.01", "kappa = 0.0", dir.path());
    assert_eq!(run("scenario", &cfg, &dir.path().join("out"), &[]), EXIT_INVALID);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_key_and_missing_file_exit_one() {
    let dir = TempDir::new().unwrap();
    let cfg = edited("a.toml", "[grid]\n", "[grid]\nresolution = 3\n", dir.path());
    assert_eq!(run("spectrum", &cfg, dir.path(), &[]), EXIT_INVALID);
    assert_eq!(run("spectrum", &dir.path().join("absent.toml"), dir.path(), &[]), EXIT_INVALID);
    assert_eq!(run("spectrum", &config("a.toml"), dir.path(), &["--threads", "0"]), EXIT_INVALID);
    assert_eq!(parse_and_dispatch(["hhg", "spectrum"]), EXIT_INVALID);
}

#[test]
fn failing_evidence_exits_two() {
    let dir = TempDir::new().unwrap();
    // a finite-κ Gaussian average at |α₀| = 2.65 does not reproduce the coherent spectrum
    let cfg = edited(
        "b.toml",
        "kind = \"classical_limit\"",
        "kind = \"gaussian\"\nradial = 20\nangular = 16",
        dir.path(),
    );
    assert_eq!(run("scenario", &cfg, dir.path(), &[]), EXIT_EVIDENCE_FAILED);
    let summary: EvidenceSummary = read_json(&dir.path().join("B_phase_averaged/evidence.json")).unwrap();
    assert!(!summary.all_pass);
    let failed: Vec<_> = summary.records.iter().filter(|r| !r.pass).map(|r| r.claim.as_str()).collect();
    assert_eq!(failed, vec!["B.spectrum_matches_coherent"]);
}

#[test]
fn sfa_spectrum_has_monotone_q_column() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run("spectrum", &config("sfa.toml"), dir.path(), &[]), EXIT_OK);
    let lines = read_spectrum_csv(&dir.path().join("spectrum.csv")).unwrap();
    let qs: Vec<u32> = lines.iter().map(|l| l.q).collect();
    assert_eq!(qs, (1..=41).collect::<Vec<_>>());
    let text = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(text.starts_with("q,value\n") && !text.contains('\r'));
}

#[test]
fn dipole_and_state_outputs_round_trip() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run("dipole", &config("a.toml"), dir.path(), &[]), EXIT_OK);
    let dipole = read_dipole_csv(&dir.path().join("dipole.csv")).unwrap();
    assert_eq!(dipole.values.len(), 8 * 64 + 1);

    assert_eq!(run("state", &config("d.toml"), dir.path(), &["-v"]), EXIT_OK);
    let reports: Vec<CoherenceReport> = read_json(&dir.path().join("coherence.json")).unwrap();
    assert_eq!(reports.iter().map(|r| r.q).collect::<Vec<_>>(), vec![1, 3, 5]);
    for r in &reports {
        let rho = read_density_csv(&dir.path().join(format!("rho_q{}.csv", r.q)), r.q).unwrap();
        assert_eq!(rho.coherence_report(), *r);
        assert!(r.l1_offdiagonal <= 1e-12);
    }
    let husimi = read_husimi_csv(&dir.path().join("husimi.csv")).unwrap();
    assert_eq!(husimi.len(), 41 * 41);
    assert!(husimi.iter().all(|h| h.q >= 0.0));
}

#[test]
fn empty_report_still_has_schema_header() {
    let dir = TempDir::new().unwrap();
    let written = emit_report(&ScenarioOutcome::default(), dir.path()).unwrap();
    assert_eq!(written, vec![dir.path().join("evidence.json")]);
    let summary: EvidenceSummary = read_json(&written[0]).unwrap();
    assert_eq!(summary.schema, EVIDENCE_SCHEMA);
    assert!(summary.records.is_empty());
}

#[test]
fn binary_reports_exit_codes() {
    let dir = TempDir::new().unwrap();
    let bin = env!("CARGO_BIN_EXE_hhg");
    let ok = Command::new(bin)
        .args(["scenario", "--config"])
        .arg(config("a.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS A.spectrum_nonvanishing"));

    let cfg = edited("a.toml", "omega = 0.057", "omega = -1.0", dir.path());
    let bad = Command::new(bin).args(["spectrum", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("field.omega"));
}
