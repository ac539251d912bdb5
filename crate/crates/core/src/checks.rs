//! The invariant suite behind `ob2d check` and the acceptance tests. Each
//! check builds its own data, measures one property and compares it with a
//! fixed tolerance.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use crate::diagnostics::{
    cancellation_corotation, cancellation_duality, energy, gamma_equation_residual,
    gamma_equation_residual_variant, plateau, plateau_of_running_max, positivity_check, EnergyLedger,
    ResidualVariant,
};
use crate::error::Result;
use crate::experiments::{run_twin, TwinSpec};
use crate::io::{
    make_initial, read_snapshot, resume_in_dir, run_to_dir, simulate, write_snapshot, InitialKind, RunConfig,
    RunOutcome, TauKind, LEDGER_FILE,
};
use crate::model::{strain_and_rotation, ModelParams, State};
use crate::spectral::random::{random_field, random_solenoidal, random_tensor};
use crate::spectral::{besov_norm, lp_norm, Grid, ScalarField, SymTensorField, VectorField};
use crate::timestepper::{integrate, StepStatus, StepperConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    /// Reduced sizes, seconds.
    Quick,
    /// The sizes and horizons of the acceptance criteria.
    Full,
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckReport {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

type Check = fn(Level) -> Result<(bool, String)>;

pub const CHECKS: [(usize, &str, Check); 11] = [
    (1, "energy identity", energy_identity),
    (2, "cancellation identities", cancellations),
    (3, "combined-quantity equation", combined_equation),
    (4, "positivity inequality", positivity),
    (5, "temporal order", temporal_order),
    (6, "Taylor-Green oracle", taylor_green),
    (7, "stress-dissipation regime probe", stress_regime),
    (8, "fractional-velocity regime probe", velocity_regime),
    (9, "twin-run stability", twin_stability),
    (10, "Besov embedding monitor", besov_monitor),
    (11, "restart and round trips", infrastructure),
];

pub fn run_check(id: usize, level: Level) -> CheckReport {
    let (_, name, check) = CHECKS[id - 1];
    let clock = Instant::now();
    let (passed, detail) = match check(level) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    CheckReport { id, name, passed, detail, seconds: clock.elapsed().as_secs_f64() }
}

pub fn run_all(level: Level, mut each: impl FnMut(&CheckReport)) -> Vec<CheckReport> {
    (1..=CHECKS.len())
        .map(|id| {
            let r = run_check(id, level);
            each(&r);
            r
        })
        .collect()
}

fn grid(n: usize) -> Arc<Grid> {
    Grid::new(n, 2.0 * PI).expect("valid grid")
}

fn pick<T>(level: Level, quick: T, full: T) -> T {
    match level {
        Level::Quick => quick,
        Level::Full => full,
    }
}

/// Random dealiased state with `max |u| = amp` and `max |tau|_F = amp`.
pub fn random_state(g: &Arc<Grid>, seed: u64, kmax: usize, amp: f64) -> State {
    let k = kmax.min(g.dealias_radius());
    let u = random_solenoidal(g, seed, k);
    let t = random_tensor(g, seed.wrapping_add(1), k);
    let su = amp / u.magnitude().max_abs();
    let st = amp / t.frobenius().max_abs();
    let s = |f: &ScalarField, a: f64| f.map(|v| v * a);
    State::new(
        0.0,
        VectorField::new(s(&u.components[0], su), s(&u.components[1], su)),
        SymTensorField::new(s(&t.xx, st), s(&t.xy, st), s(&t.yy, st)),
    )
}

fn random_config(n: usize, alpha: f64, dt: f64, t_end: f64) -> RunConfig {
    let mut cfg = RunConfig::example(n, alpha, dt, t_end);
    cfg.initial_condition.tau_kind = TauKind::RandomSymmetric;
    cfg
}

fn balance_defect(cfg: &RunConfig) -> Result<f64> {
    let s0 = make_initial(cfg)?;
    let mut ledger = EnergyLedger::new(energy(&s0, &cfg.params));
    let mut worst: f64 = 0.0;
    integrate(&s0, &cfg.params, &cfg.stepper, |_, r| {
        ledger.update(energy(&r.state, &cfg.params), r.dissipation);
        worst = worst.max(ledger.defect());
        Ok(())
    })?;
    Ok(worst)
}

fn energy_identity(level: Level) -> Result<(bool, String)> {
    let (n, t, dt) = pick(level, (32, 0.2, 0.01), (128, 1.0, 0.005));
    let d1 = balance_defect(&random_config(n, 0.1, dt, t))?;
    let d2 = balance_defect(&random_config(n, 0.1, 0.5 * dt, t))?;
    let ratio = d1 / d2;
    let ok = d1 <= 1e-6 && ratio >= 8.0;
    Ok((ok, format!("N={n} T={t}: defect {d1:.2e} at dt={dt}, {d2:.2e} at dt/2, ratio {ratio:.1} (need <=1e-6, >=8)")))
}

fn cancellations(level: Level) -> Result<(bool, String)> {
    let (n, count) = pick(level, (32, 5), (64, 50));
    let g = grid(n);
    let (mut dual, mut corot): (f64, f64) = (0.0, 0.0);
    for k in 0..count {
        let s = random_state(&g, 1000 + 2 * k, usize::MAX, 1.0);
        dual = dual.max(cancellation_duality(&s.u, &s.tau).abs());
        let w = strain_and_rotation(&s.u).1;
        for r in [2.0, 4.0] {
            corot = corot.max(cancellation_corotation(&s.tau, &w, r)?.abs());
        }
    }
    let ok = dual <= 1e-10 && corot <= 1e-10;
    Ok((ok, format!("{count} states at N={n}: duality {dual:.2e}, corotation {corot:.2e} (need <=1e-10)")))
}

fn combined_equation(level: Level) -> Result<(bool, String)> {
    let (n, count) = pick(level, (32, 3), (64, 20));
    let g = grid(n);
    let params = ModelParams::normalized(0.5);
    let (mut worst, mut mutated): (f64, f64) = (0.0, f64::INFINITY);
    for k in 0..count {
        let s = random_state(&g, 2000 + 2 * k, usize::MAX, 1.0);
        worst = worst.max(gamma_equation_residual(&s, &params)?);
        mutated = mutated.min(gamma_equation_residual_variant(&s, &params, ResidualVariant::WithoutCommutator)?);
    }
    let ok = worst <= 1e-10 && mutated > 1e-2;
    Ok((ok, format!("{count} states at N={n}: residual {worst:.2e} (need <=1e-10), without commutator {mutated:.2e} (need >1e-2)")))
}

fn positivity(level: Level) -> Result<(bool, String)> {
    let count = pick(level, 10, 100);
    let g = grid(32);
    let (mut slack, mut eq_any, mut eq_pos): (f64, f64, f64) = (f64::INFINITY, 0.0, 0.0);
    for k in 0..count {
        let h = random_field(&g, 3000 + k, 8);
        let shift = h.max_abs() + 0.1;
        let pos = h.map(|v| v + shift);
        for s in [0.5, 1.0, 1.6] {
            for p in [2.0, 4.0, 6.0] {
                let (lhs, rhs) = positivity_check(&h, p, s)?;
                slack = slack.min((lhs - rhs) / lhs.abs().max(f64::MIN_POSITIVE));
            }
            // p = 2: lhs is |Lambda^{s/2} h|^2 for every h, rhs equals it when h >= 0
            let (lhs, _) = positivity_check(&h, 2.0, s)?;
            let direct = crate::spectral::sobolev_norm(&h, 0.5 * s, crate::spectral::SobolevKind::Homogeneous)?.powi(2);
            eq_any = eq_any.max((lhs - direct).abs() / direct);
            let (lhs, rhs) = positivity_check(&pos, 2.0, s)?;
            eq_pos = eq_pos.max((lhs - rhs).abs() / lhs);
        }
    }
    let ok = slack >= -1e-8 && eq_any <= 1e-12 && eq_pos <= 1e-12;
    Ok((
        ok,
        format!(
            "{count} fields x p{{2,4,6}} x s{{0.5,1,1.6}}: min (lhs-rhs)/|lhs| {slack:.2e} (need >=-1e-8); p=2 equality {eq_any:.1e} / {eq_pos:.1e} on sign-definite h (need <=1e-12)"
        ),
    ))
}

fn max_diff(a: &State, b: &State) -> f64 {
    let pairs = [
        (&a.u.components[0], &b.u.components[0]),
        (&a.u.components[1], &b.u.components[1]),
        (&a.tau.xx, &b.tau.xx),
        (&a.tau.xy, &b.tau.xy),
        (&a.tau.yy, &b.tau.yy),
    ];
    pairs
        .iter()
        .flat_map(|(x, y)| x.values().iter().zip(y.values()).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

fn temporal_order(level: Level) -> Result<(bool, String)> {
    let (n, t) = pick(level, (32, 0.1), (64, 0.5));
    let g = grid(n);
    let params = ModelParams::normalized(0.5);
    let s0 = random_state(&g, 10, 6, 3.0);
    let run = |dt: f64| integrate(&s0, &params, &StepperConfig::new(dt, t), |_, _| Ok(())).map(|r| r.state);
    let (a, b, c) = (run(2e-3)?, run(1e-3)?, run(5e-4)?);
    let (e1, e2) = (max_diff(&a, &b), max_diff(&b, &c));
    let slope = (e1 / e2).log2();
    let ok = (slope - 4.0).abs() <= 0.2;
    Ok((ok, format!("N={n} T={t}: successive differences {e1:.2e}, {e2:.2e}, slope {slope:.3} (need 4 +- 0.2)")))
}

fn taylor_green(_: Level) -> Result<(bool, String)> {
    let mut cfg = RunConfig::example(32, 0.5, 0.01, 1.0);
    cfg.params.kappa = 0.0;
    cfg.initial_condition.kind = InitialKind::TaylorGreen;
    let s0 = make_initial_unchecked(&cfg)?;
    let end = integrate(&s0, &cfg.params, &cfg.stepper, |_, _| Ok(()))?;
    let a = (-2.0f64).exp();
    let g = s0.grid();
    let exact = [
        ScalarField::from_fn(g, |x, y| a * x.sin() * y.cos()),
        ScalarField::from_fn(g, |x, y| -a * x.cos() * y.sin()),
    ];
    let err = (0..2)
        .map(|i| end.state.u.components[i].zip_map(&exact[i], |p, q| (p - q).abs()).max_abs())
        .fold(0.0, f64::max);
    Ok((err <= 1e-8, format!("N=32 T=1: max velocity error {err:.2e} (need <=1e-8)")))
}

/// The decoupled oracle needs `kappa = 0`, which run configurations reject.
fn make_initial_unchecked(cfg: &RunConfig) -> Result<State> {
    let mut valid = cfg.clone();
    valid.params.kappa = 1.0;
    make_initial(&valid)
}

fn column(out: &RunOutcome, name: &str) -> (Vec<f64>, Vec<f64>) {
    let times = out.records.iter().map(|r| r.time).collect();
    let values = out.records.iter().map(|r| r.get(name).unwrap_or(f64::NAN)).collect();
    (times, values)
}

fn stress_regime(level: Level) -> Result<(bool, String)> {
    let (n, t, dt, alphas) = pick(level, (32, 2.0, 0.01, vec![0.5]), (128, 5.0, 0.005, vec![0.2, 0.5, 1.0]));
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in alphas {
        let mut cfg = random_config(n, alpha, dt, t);
        cfg.diagnostics.cadence = 10;
        let out = simulate(&cfg)?;
        let (times, grad_tau) = column(&out, "grad_tau_L2");
        let (_, acc) = column(&out, "int_grad_Gamma_L2_sq");
        let p1 = plateau(&times, &grad_tau).map_or(false, |p| p.plateaued);
        let p2 = plateau(&times, &acc).map_or(false, |p| p.plateaued);
        let finite = out.records.iter().all(|r| r.all_finite());
        let this = out.status == StepStatus::Ok && p1 && p2 && finite;
        ok &= this;
        parts.push(format!(
            "alpha={alpha}: {} grad_tau plateau {p1} int|grad Gamma|^2 plateau {p2}",
            out.status.as_str()
        ));
    }
    Ok((ok, format!("N={n} T={t}: {}", parts.join("; "))))
}

fn velocity_regime(level: Level) -> Result<(bool, String)> {
    let (n, t, dt) = pick(level, (32, 1.0, 0.01), (128, 5.0, 0.005));
    let mut ok = true;
    let mut parts = Vec::new();
    for gamma in [1.1, 1.25] {
        let mut cfg = random_config(n, 0.0, dt, t);
        cfg.params = ModelParams::fractional_velocity(gamma);
        cfg.diagnostics.cadence = 10;
        let out = simulate(&cfg)?;
        let (times, g) = column(&out, "G_L2");
        let (_, tinf) = column(&out, "tau_Linf");
        let finite = out.records.iter().all(|r| r.all_finite());
        let gmax = g.iter().copied().fold(0.0, f64::max);
        let tmax = tinf.iter().copied().fold(0.0, f64::max);
        let settled = plateau_of_running_max(&times, &tinf).map_or(false, |p| p.plateaued);
        let this = out.status == StepStatus::Ok && finite && gmax.is_finite() && tmax.is_finite();
        ok &= this;
        parts.push(format!(
            "gamma_u={gamma}: {} max|G|_2 {gmax:.3} max|tau|_inf {tmax:.3} (running max settled: {settled})",
            out.status.as_str()
        ));
    }
    Ok((ok, format!("N={n} T={t}: {}", parts.join("; "))))
}

fn twin_stability(level: Level) -> Result<(bool, String)> {
    let (n, t, dt) = pick(level, (32, 0.5, 0.01), (64, 1.0, 0.005));
    let cfg = random_config(n, 0.5, dt, t);
    let mut terminal = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for delta in [1e-6, 1e-5, 1e-4] {
        let spec = TwinSpec { perturbation_size: delta, perturbation_seed: 99, norm_cadence: 0.1 };
        let r = run_twin(&spec, &cfg, None)?;
        if r.status != StepStatus::Ok {
            return Ok((false, format!("delta={delta}: run ended {}", r.status.as_str())));
        }
        terminal.push((delta, r.terminal().v_l2));
        worst_ratio = worst_ratio.max(r.max_ratio());
    }
    let slope = least_squares_slope(&terminal);
    let ok = (slope - 1.0).abs() <= 0.1 && worst_ratio <= 10.0;
    Ok((ok, format!("N={n} T={t}: log-log slope {slope:.4} (need 1 +- 0.1), max Gronwall ratio {worst_ratio:.2e} (need <=10)")))
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn besov_monitor(level: Level) -> Result<(bool, String)> {
    let count = pick(level, 10, 50);
    let g = grid(64);
    let p = 4.0;
    let s = 1.1 * (2.0 / p);
    let mut ratios = Vec::new();
    for k in 0..count {
        let f = random_field(&g, 4000 + k, g.dealias_radius());
        ratios.push(besov_norm(&f, s, 2.0)? / lp_norm(&f, p)?);
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let ok = ratios.iter().all(|r| r.is_finite() && *r > 0.0) && hi / lo < 100.0;
    Ok((ok, format!("{count} fields, s={s:.2}, p=4: ratio in [{lo:.3e}, {hi:.3e}], spread {:.2} (need finite, <100)", hi / lo)))
}

fn infrastructure(level: Level) -> Result<(bool, String)> {
    let n = pick(level, 16, 32);
    let root = std::env::temp_dir().join(format!("ob2d-check-{}-{}", std::process::id(), n));
    let result = infrastructure_in(&root, n);
    let _ = std::fs::remove_dir_all(&root);
    result
}

fn infrastructure_in(root: &std::path::Path, n: usize) -> Result<(bool, String)> {
    let mut cfg = random_config(n, 0.5, 0.01, 0.2);
    cfg.initial_condition.band = [1, 4];
    cfg.diagnostics.cadence = 3;
    cfg.output.checkpoint_every = 10;
    let full = root.join("full");
    let part = root.join("part");
    run_to_dir(&cfg, &full)?;
    let mut half = cfg.clone();
    half.stepper.t_end = 0.1;
    run_to_dir(&half, &part)?;
    resume_in_dir(&cfg, &part)?;
    let read = |d: &std::path::Path| std::fs::read(d.join(LEDGER_FILE));
    let restart_ok = matches!((read(&full), read(&part)), (Ok(a), Ok(b)) if a == b);

    let text = cfg.to_json();
    let config_ok = RunConfig::from_json(&text).map(|c| c == cfg && c.to_json() == text).unwrap_or(false);

    let state = make_initial(&cfg)?;
    let snap = root.join("snap.bin");
    write_snapshot(&snap, &state, &cfg.params)?;
    let (_, back) = read_snapshot(&snap)?;
    let snapshot_ok = max_diff(&state, &back).to_bits() == 0 && back.time.to_bits() == state.time.to_bits();

    let ok = restart_ok && config_ok && snapshot_ok;
    Ok((ok, format!("restart at T/2 bit-exact {restart_ok}, config round trip {config_ok}, snapshot round trip {snapshot_ok}")))
}
