use std::fs;
use std::path::Path;

use sldg::config::{Command, RunConfig};
use sldg::{dispatch, dump};
use sldg_core::noise::NoisePath;

fn cfg(pairs: &[(&str, &str)], out: &Path) -> RunConfig {
    let out = out.to_str().unwrap();
    let mut all = pairs.to_vec();
    all.push(("out", out));
    RunConfig::from_pairs(all).unwrap()
}

fn header(file: &Path) -> String {
    fs::read_to_string(file).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn noise_dump_round_trip() {
    let path = NoisePath::sample(3, 0.01, 7, 42, 0).unwrap();
    let bytes = dump::encode(&path);
    assert_eq!(bytes.len(), 32 + 8 * 21);
    assert_eq!(u64::from_le_bytes(bytes[0..8].try_into().unwrap()), 3);
    assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 7);
    assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 0.01);
    assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 42);
    // Row-major by step: the second stored value is ξ_1 at step 0.
    assert_eq!(f64::from_le_bytes(bytes[40..48].try_into().unwrap()), path.xi(1, 0));
    let back = dump::decode(&bytes, Path::new("mem")).unwrap();
    assert_eq!(back.normals(), path.normals());
    assert_eq!((back.modes(), back.steps(), back.dt(), back.seed()), (3, 7, 0.01, 42));
    assert!(dump::decode(&bytes[..bytes.len() - 8], Path::new("mem")).is_err());
    assert!(dump::decode(&bytes[..20], Path::new("mem")).is_err());
}

#[test]
fn replayed_noise_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let base = [("cmd", "run"), ("T", "0.05"), ("seed", "3")];
    let first = dispatch(&cfg(&[&base[..], &[("dump_noise", "true")]].concat(), &a)).unwrap();
    assert!(first.bands_met);
    let b = dir.path().join("b");
    let noise = a.join("noise.bin");
    let ns = noise.to_str().unwrap();
    // A different seed is ignored because the path comes from the dump.
    dispatch(&cfg(&[("cmd", "run"), ("T", "0.05"), ("seed", "99"), ("noise_file", ns)], &b)).unwrap();
    assert_eq!(fs::read(a.join("trajectory.csv")).unwrap(), fs::read(b.join("trajectory.csv")).unwrap());

    let err = dispatch(&cfg(&[("cmd", "run"), ("T", "0.05"), ("modes", "4"), ("noise_file", ns)], &b)).unwrap_err();
    assert!(err.to_string().contains("K ="), "{err}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn csv_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    dispatch(&cfg(&[("cmd", "run"), ("T", "0.01"), ("J", "6"), ("k", "2")], &run)).unwrap();
    assert_eq!(header(&run.join("trajectory.csv")), "n,t,charge,linres");
    assert_eq!(header(&run.join("field.csv")), "cell,mode,re,im");
    assert_eq!(fs::read_to_string(run.join("field.csv")).unwrap().lines().count(), 1 + 6 * 3);

    let sp = dir.path().join("spatial");
    let out = dispatch(&cfg(&[("cmd", "spatial-order"), ("mesh", "8,16")], &sp)).unwrap();
    assert_eq!(
        header(&sp.join("spatial.csv")),
        "experiment,resolution,h,dt,M,ms_error,stderr,slope,slope_lo,slope_hi"
    );
    // Two meshes cannot be fitted: the slope columns stay empty and the band fails.
    assert!(fs::read_to_string(sp.join("spatial.csv")).unwrap().lines().nth(1).unwrap().ends_with(",,,"));
    assert_eq!(out.summary.get("slope"), Some("insufficient-points"));
    assert!(!out.bands_met);

    let nc = dir.path().join("noise");
    dispatch(&cfg(&[("cmd", "noise-check")], &nc)).unwrap();
    assert_eq!(header(&nc.join("noise_check.csv")), "dt,kappa,tail_moment,dt_sq,h1_moment");
    assert!(nc.join("plot_noise_check.py").exists());
}

#[test]
fn stochastic_spatial_writes_bound_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = [
        ("cmd", "spatial-order"),
        ("mode", "stochastic"),
        ("noise", "power"),
        ("mesh", "4,8,16"),
        ("samples", "4"),
        ("dt", "0.01"),
    ];
    let out = dispatch(&cfg(&pairs, dir.path())).unwrap();
    assert!(out.bands_met);
    let bounds = fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    assert_eq!(bounds.lines().count(), 4);
    assert!(out.summary.get("max_bound_ratio").is_some());
}

#[test]
fn regularity_writes_both_tables() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = [
        ("cmd", "regularity"),
        ("samples", "4"),
        ("levels", "5,6,7"),
        ("moment_steps", "20"),
    ];
    let out = dispatch(&cfg(&pairs, dir.path())).unwrap();
    assert_eq!(RunConfig::defaults(Command::Regularity).points, 128);
    assert_eq!(fs::read_to_string(dir.path().join("moments.csv")).unwrap().lines().count(), 22);
    assert!(dir.path().join("holder.csv").exists());
    assert!(out.summary.get("moment_ratio").is_some());
}
