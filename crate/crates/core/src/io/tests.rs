use super::*;
use crate::model::SpectralState;
use crate::spectral::ScalarField;
use proptest::prelude::*;
use std::fs;

fn small(t_end: f64) -> RunConfig {
    let mut cfg = RunConfig::example(16, 0.5, 0.01, t_end);
    cfg.initial_condition.band = [1, 4];
    cfg.initial_condition.tau_kind = TauKind::RandomSymmetric;
    cfg
}

fn bits(f: &ScalarField) -> Vec<u64> {
    f.values().iter().map(|v| v.to_bits()).collect()
}

fn state_bits(s: &crate::model::State) -> Vec<u64> {
    let mut v = bits(&s.u.components[0]);
    v.extend(bits(&s.u.components[1]));
    for c in s.tau.components() {
        v.extend(bits(c));
    }
    v
}

#[test]
fn config_round_trip_is_identity() {
    let mut cfg = small(0.5);
    cfg.initial_condition.tau_amplitude = Some(0.25);
    cfg.output.checkpoint_every = 7;
    let text = cfg.to_json();
    let back = RunConfig::from_json(&text).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.to_json(), text);
}

#[test]
fn minimal_config_fills_defaults() {
    let text = r#"{
        "grid": {"n": 32},
        "params": {"nu": 1, "gamma_u": 1, "mu": 1, "alpha": 0.5, "beta": 0, "kappa": 1, "gamma_f": 1, "eta": 1, "b": 0},
        "stepper": {"dt": 0.01, "t_end": 1},
        "initial_condition": {"kind": "taylor_green", "tau_kind": "from_Du"}
    }"#;
    let cfg = RunConfig::from_json(text).unwrap();
    assert_eq!(cfg.diagnostics, DiagnosticsConfig::default());
    assert_eq!(cfg.initial_condition.band, [1, 8]);
    assert_eq!(RunConfig::from_json(&cfg.to_json()).unwrap(), cfg);
}

#[test]
fn unknown_keys_and_bad_values_are_rejected() {
    let cfg = small(0.5);
    let mut v: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
    v["grid"]["typo"] = 1.into();
    assert!(matches!(RunConfig::from_json(&v.to_string()), Err(crate::Error::Config(_))));

    let mut bad = cfg.clone();
    bad.initial_condition.band = [1, 6];
    assert!(bad.validate().is_err());
    let mut bad = cfg.clone();
    bad.params.kappa = 0.0;
    assert!(bad.validate().is_err());
    let mut bad = cfg;
    bad.stepper.dt = -1.0;
    assert!(bad.validate().is_err());
}

#[test]
fn taylor_green_is_exact_and_solenoidal() {
    let mut cfg = small(0.5);
    cfg.initial_condition.kind = InitialKind::TaylorGreen;
    cfg.initial_condition.amplitude = 2.0;
    let s = make_initial(&cfg).unwrap();
    let want = ScalarField::from_fn(s.grid(), |x, y| 2.0 * x.sin() * y.cos());
    let d = s.u.components[0].zip_map(&want, |a, b| (a - b).abs()).max_abs();
    assert!(d < 1e-15);
    assert!(SpectralState::from_state_raw(&s).divergence_defect() < 1e-15);
}

#[test]
fn random_data_is_seeded_and_band_limited() {
    let mut cfg = RunConfig::example(32, 0.5, 0.01, 0.1);
    cfg.initial_condition.band = [2, 8];
    cfg.initial_condition.tau_kind = TauKind::RandomSymmetric;
    cfg.initial_condition.tau_amplitude = Some(0.5);
    let a = make_initial(&cfg).unwrap();
    let b = make_initial(&cfg).unwrap();
    assert_eq!(state_bits(&a), state_bits(&b));
    let spectral = SpectralState::from_state_raw(&a);
    assert!(spectral.divergence_defect() < 1e-13);
    let grid = a.grid().clone();
    for s in spectral.components() {
        for (i, c) in s.coeffs().iter().enumerate() {
            let (j1, j2) = grid.mode_index(i);
            let r = ((j1 * j1 + j2 * j2) as f64).sqrt();
            if !(2.0..=8.0).contains(&r) {
                assert!(c.norm() < 1e-15, "mode ({j1},{j2}) = {c}");
            }
        }
    }
    let n = grid.len() as f64;
    let rms_u = (a.u.components.iter().flat_map(|c| c.values()).map(|v| v * v).sum::<f64>() / n).sqrt();
    assert!((rms_u - 1.0).abs() < 1e-12);
    let fro = a.tau.frobenius();
    let rms_t = (fro.values().iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    assert!((rms_t - 0.5).abs() < 1e-12);
    cfg.initial_condition.seed = 43;
    assert_ne!(state_bits(&make_initial(&cfg).unwrap()), state_bits(&a));
}

#[test]
fn shear_layer_and_strain_stress() {
    let mut cfg = RunConfig::example(32, 0.5, 0.01, 0.1);
    cfg.initial_condition.kind = InitialKind::ShearLayer;
    cfg.initial_condition.tau_kind = TauKind::FromDu;
    let s = make_initial(&cfg).unwrap();
    assert!((s.u.components[0].max_abs() - 1.0).abs() < 1e-12);
    assert!(s.u.components[0].mean().abs() < 1e-14);
    assert!(SpectralState::from_state_raw(&s).divergence_defect() < 1e-13);
    let du = crate::model::strain_and_rotation(&s.u).0;
    assert_eq!(bits(&s.tau.xy), bits(&du.xy));
}

#[test]
fn snapshot_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(0.5);
    let mut s = make_initial(&cfg).unwrap();
    s.time = 0.3;
    let path = dir.path().join("s.bin");
    write_snapshot(&path, &s, &cfg.params).unwrap();
    let bytes = fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 48 + 5 * 16 * 16 * 8);
    assert_eq!(&bytes[..4], b"OB2D");
    let (h, back) = read_snapshot(&path).unwrap();
    assert_eq!(h.n, 16);
    assert_eq!(h.time, 0.3);
    assert_eq!(h.alpha, 0.5);
    assert_eq!(h.format_version, SNAPSHOT_VERSION);
    assert_eq!(state_bits(&back), state_bits(&s));
    assert_eq!(back.time, s.time);
}

#[test]
fn damaged_snapshots_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(0.5);
    let s = make_initial(&cfg).unwrap();
    let path = dir.path().join("s.bin");
    write_snapshot(&path, &s, &cfg.params).unwrap();
    let bytes = fs::read(&path).unwrap();
    for cut in [0, 10, 47, bytes.len() - 1] {
        fs::write(&path, &bytes[..cut]).unwrap();
        assert!(matches!(read_snapshot(&path), Err(crate::Error::Snapshot { .. })), "cut {cut}");
    }
    let mut wrong = bytes.clone();
    wrong[0] = b'X';
    fs::write(&path, &wrong).unwrap();
    assert!(read_snapshot(&path).is_err());
    assert!(matches!(read_snapshot(&dir.path().join("missing.bin")), Err(crate::Error::Io { .. })));
}

#[test]
fn empty_run_writes_header_and_initial_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_to_dir(&small(0.0), dir.path()).unwrap();
    assert_eq!(out.steps, 0);
    let ledger = Ledger::read(&dir.path().join(LEDGER_FILE)).unwrap();
    assert_eq!(ledger.rows.len(), 1);
    assert_eq!(&ledger.columns[..2], &["step".to_string(), "time".to_string()]);
    assert_eq!(ledger.columns.len() - 2, out.records[0].columns().len());
}

#[test]
fn ledger_values_round_trip_through_text() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(0.05);
    cfg.diagnostics.cadence = 2;
    let out = run_to_dir(&cfg, dir.path()).unwrap();
    let ledger = Ledger::read(&dir.path().join(LEDGER_FILE)).unwrap();
    assert_eq!(ledger.column("step").unwrap(), vec![0.0, 2.0, 4.0, 5.0]);
    for (row, rec) in ledger.rows.iter().zip(&out.records) {
        assert_eq!(row[1].to_bits(), rec.time.to_bits());
        let vals: Vec<u64> = rec.values().iter().map(|v| v.to_bits()).collect();
        assert_eq!(row[2..].iter().map(|v| v.to_bits()).collect::<Vec<_>>(), vals);
    }
}

#[test]
fn restart_reproduces_uninterrupted_ledger() {
    let full = tempfile::tempdir().unwrap();
    let part = tempfile::tempdir().unwrap();
    let mut cfg = small(0.15);
    cfg.diagnostics.cadence = 3;
    cfg.output.checkpoint_every = 10;
    run_to_dir(&cfg, full.path()).unwrap();
    run_to_dir(&cfg, part.path()).unwrap();
    // pretend the second run died after its step-10 checkpoint
    let a = resume_in_dir(&cfg, part.path()).unwrap();
    assert_eq!(a.steps, 15);
    let read = |d: &std::path::Path| fs::read_to_string(d.join(LEDGER_FILE)).unwrap();
    assert_eq!(read(full.path()), read(part.path()));

    let mut other = cfg.clone();
    other.params.eta = 0.5;
    assert!(resume_in_dir(&other, part.path()).is_err());
}

#[test]
fn restart_can_extend_the_horizon() {
    let base = tempfile::tempdir().unwrap();
    let long = tempfile::tempdir().unwrap();
    let mut cfg = small(0.1);
    cfg.diagnostics.cadence = 4;
    cfg.output.checkpoint_every = 10;
    run_to_dir(&cfg, base.path()).unwrap();
    let mut longer = cfg.clone();
    longer.stepper.t_end = 0.2;
    resume_in_dir(&longer, base.path()).unwrap();
    run_to_dir(&longer, long.path()).unwrap();
    let a = Ledger::read(&base.path().join(LEDGER_FILE)).unwrap();
    let b = Ledger::read(&long.path().join(LEDGER_FILE)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.column("step").unwrap(), vec![0.0, 4.0, 8.0, 12.0, 16.0, 20.0]);
    // nothing left to run: the final row stays
    resume_in_dir(&longer, base.path()).unwrap();
    assert_eq!(Ledger::read(&base.path().join(LEDGER_FILE)).unwrap().rows.len(), 6);
}

#[test]
fn in_memory_and_directory_runs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(0.03);
    let a = simulate(&cfg).unwrap();
    let b = run_to_dir(&cfg, dir.path()).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(state_bits(&a.final_state), state_bits(&b.final_state));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn config_round_trip_property(
        n in prop::sample::select(vec![16usize, 32, 64]),
        alpha in 0.0f64..2.0,
        eta in -2.0f64..2.0,
        b in -1.0f64..=1.0,
        dt in 1e-4f64..1e-1,
        seed in any::<u64>(),
        tau_amp in prop::option::of(0.0f64..5.0),
    ) {
        let mut cfg = RunConfig::example(n, alpha, dt, 1.0);
        cfg.params.eta = eta;
        cfg.params.b = b;
        cfg.initial_condition.seed = seed;
        cfg.initial_condition.band = [1, 4];
        cfg.initial_condition.tau_amplitude = tau_amp;
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
