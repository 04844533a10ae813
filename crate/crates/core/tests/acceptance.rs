//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use metastable::harness::{compare_runs, reproduce_table, sweep_taus, CompareReport, TableReport, Velocity};
use metastable::layer_ode::{initial_velocities, integrate, l_pm, OdeParams};
use metastable::pde::{PdeParams, VelocityLift};
use metastable::profile::{alpha_beta, mass, AlphaMode, LayerVector, ProfileParams};
use metastable::{quartic_potential, Well};
use std::process::ExitCode;
use std::time::Instant;

const TABLE_REL_TOL: f64 = 0.05;
const TABLE1_SECONDS: f64 = 1.0;
const TABLES23_SECONDS: f64 = 10.0;
const TABLE4_SECONDS: f64 = 10.0;
const TABLE4_LATE_TOL: f64 = 0.10;
const TABLE4_EARLY_T: f64 = 1e2;
const TABLE4_LATE_T: f64 = 1.55e5;

const ALPHA_RATIOS: [f64; 3] = [0.1, 0.08, 0.05];
const ALPHA_TOLS: [f64; 3] = [1e-2, 3e-3, 1e-3];
const ALPHA_R0: f64 = 0.2;
const ALPHA_SECONDS: f64 = 1.0;

const CONSERVATION_FACTOR: f64 = 10.0;
const PDE_MASS_TOL: f64 = 1e-10;

const MASS_EPS: f64 = 0.01;
const MASS_LAYERS: [f64; 3] = [0.2, 0.5, 0.8];
const MASS_FD_STEP: f64 = 1e-5;
const MASS_DERIV_TOL: f64 = 1e-3;
const MASS_SECONDS: f64 = 5.0;

const LIMIT_TAUS: [f64; 3] = [1e-1, 1e-2, 1e-3];
const LIMIT_T_END: f64 = 300.0;
const LIMIT_T1: f64 = 10.0;
const LIMIT_SLOPE: (f64, f64) = (0.7, 1.3);
const LIMIT_SECONDS: f64 = 30.0;

const PDE_EPS: f64 = 0.07;
const PDE_TAU: f64 = 50.0;
const PDE_H0: [f64; 2] = [0.31, 0.66];
const PDE_N: usize = 1024;
const PDE_DT: f64 = 1e-3;
const PDE_T_END: f64 = 300.0;
const PDE_SAMPLE_EVERY: f64 = 10.0;
const PDE_GAP_TOL: f64 = 5e-3;
const PDE_SECONDS: f64 = 300.0;
const RATIO_GROWTH_MAX: f64 = 10.0;

type Verdict = (bool, String);

fn table(id: u8) -> TableReport {
    reproduce_table(id, Some(TABLE_REL_TOL)).expect("table run")
}

fn table_summary(r: &TableReport) -> String {
    let worst = r
        .entries
        .iter()
        .filter(|e| e.reference.abs() >= 1e-5)
        .map(|e| e.rel_err)
        .fold(0.0, f64::max);
    format!("table {}: {}/{} entries ok, worst rel err {worst:.3e}", r.id, r.entries.len() - r.failures().len(), r.entries.len())
}

fn criterion_1() -> Verdict {
    let r = table(1);
    let ok = r.failures().is_empty() && r.seconds < TABLE1_SECONDS;
    (ok, format!("{}, {:.3} s (limit {TABLE1_SECONDS} s)", table_summary(&r), r.seconds))
}

fn criterion_2() -> Verdict {
    let (r2, r3) = (table(2), table(3));
    let seconds = r2.seconds + r3.seconds;
    let ok = r2.failures().is_empty() && r3.failures().is_empty() && seconds < TABLES23_SECONDS;
    (ok, format!("{}; {}; {seconds:.3} s (limit {TABLES23_SECONDS} s)", table_summary(&r2), table_summary(&r3)))
}

fn criterion_3() -> Verdict {
    let (r3, r4) = (table(3), table(4));
    let tau = r4.entries[0].tau;
    let mut inverted = true;
    let mut worst_late: f64 = 0.0;
    for layer in 1..=6 {
        let early3 = r3.computed(tau, TABLE4_EARLY_T, layer).expect("table 3 entry");
        let early4 = r4.computed(tau, TABLE4_EARLY_T, layer).expect("table 4 entry");
        inverted &= early3.signum() == -early4.signum();
        let late3 = r3.computed(tau, TABLE4_LATE_T, layer).expect("table 3 entry");
        let late4 = r4.computed(tau, TABLE4_LATE_T, layer).expect("table 4 entry");
        worst_late = worst_late.max(((late4 - late3) / late3).abs());
    }
    let ok = inverted && worst_late <= TABLE4_LATE_TOL && r4.seconds < TABLE4_SECONDS;
    (
        ok,
        format!(
            "sign inversion at t = {TABLE4_EARLY_T:e}: {inverted}, worst rel diff to table 3 at t = {TABLE4_LATE_T:e}: \
             {worst_late:.3e} (limit {TABLE4_LATE_TOL}), {}, {:.3} s (limit {TABLE4_SECONDS} s)",
            table_summary(&r4),
            r4.seconds
        ),
    )
}

fn criterion_4() -> Verdict {
    let pot = quartic_potential();
    let start = Instant::now();
    let mut devs = Vec::new();
    let mut ok = true;
    for (&r, &tol) in ALPHA_RATIOS.iter().zip(&ALPHA_TOLS) {
        let (exact, _) = alpha_beta(r, Well::Plus, AlphaMode::Exact, &pot, ALPHA_R0).expect("exact alpha");
        let asym = 16.0 * (-(2f64.sqrt()) / r).exp();
        let dev = ((exact - asym) / asym).abs();
        ok &= dev <= tol;
        devs.push(dev);
    }
    let monotone = devs.windows(2).all(|w| w[1] < w[0]);
    let seconds = start.elapsed().as_secs_f64();
    ok &= monotone && seconds < ALPHA_SECONDS;
    let listed: Vec<String> = ALPHA_RATIOS.iter().zip(&devs).map(|(r, d)| format!("r = {r}: {d:.3e}")).collect();
    (ok, format!("{}, monotone: {monotone}, {seconds:.3} s (limit {ALPHA_SECONDS} s)", listed.join(", ")))
}

fn criterion_5(pde: &CompareReport) -> Verdict {
    let pot = quartic_potential();
    let mut worst_ratio: f64 = 0.0;
    let mut worst_drift: f64 = 0.0;
    let mut trajectories = 0;
    for id in 1..=4u8 {
        let t = metastable::harness::TableRef::load(id).expect("table");
        let h0 = LayerVector::new(t.h0.clone()).expect("layers");
        for run in &t.runs {
            let params = metastable::harness::tables::table_params(&t, run.tau);
            let eta0 = initial_velocities(&h0, t.velocity, &params, &pot).expect("velocities");
            let tr = integrate(params.system(), &h0, Some(&eta0), &params, &pot).expect("trajectory");
            let states = tr.states().expect("states");
            let l0 = l_pm(&states[0]);
            let drift = states
                .iter()
                .map(|s| {
                    let l = l_pm(s);
                    (l.l_minus - l0.l_minus).abs().max((l.l_plus - l0.l_plus).abs())
                })
                .fold(0.0, f64::max);
            worst_drift = worst_drift.max(drift);
            worst_ratio = worst_ratio.max(drift / (CONSERVATION_FACTOR * params.rel_tol));
            trajectories += 1;
        }
    }
    let ok = worst_ratio <= 1.0 && pde.max_mass_drift <= PDE_MASS_TOL;
    (
        ok,
        format!(
            "{trajectories} table trajectories, max |L(t) - L(0)| = {worst_drift:.3e} \
             (limit {CONSERVATION_FACTOR} x rel_tol); PDE mass drift {:.3e} (limit {PDE_MASS_TOL:e})",
            pde.max_mass_drift
        ),
    )
}

fn criterion_6() -> Verdict {
    let pot = quartic_potential();
    let start = Instant::now();
    let params = ProfileParams::new(MASS_EPS, 0.5, MASS_EPS, MASS_LAYERS.len() - 1).expect("profile params");
    let mut worst: f64 = 0.0;
    let mut derivs = Vec::new();
    for j in 0..MASS_LAYERS.len() {
        let at = |d: f64| {
            let mut h = MASS_LAYERS.to_vec();
            h[j] += d;
            mass(&LayerVector::new(h).expect("layers"), &params, &pot).expect("mass")
        };
        let fd = (at(MASS_FD_STEP) - at(-MASS_FD_STEP)) / (2.0 * MASS_FD_STEP);
        let expected = if (j + 1) % 2 == 0 { 2.0 } else { -2.0 };
        worst = worst.max((fd - expected).abs());
        derivs.push(format!("{fd:+.6}"));
    }
    let seconds = start.elapsed().as_secs_f64();
    let ok = worst <= MASS_DERIV_TOL && seconds < MASS_SECONDS;
    (
        ok,
        format!("dM/dh = [{}], max error {worst:.3e} (limit {MASS_DERIV_TOL:e}), {seconds:.3} s (limit {MASS_SECONDS} s)", derivs.join(", ")),
    )
}

fn criterion_7() -> Verdict {
    let pot = quartic_potential();
    let start = Instant::now();
    let h0 = LayerVector::new(PDE_H0.to_vec()).expect("layers");
    let params = OdeParams::new(PDE_EPS, 0.0, LIMIT_T_END);
    let r = sweep_taus(&h0, None, &LIMIT_TAUS, LIMIT_T1, &params, &pot).expect("sweep");
    let seconds = start.elapsed().as_secs_f64();
    let slope = r.slope.unwrap_or(f64::NAN);
    let ok = (LIMIT_SLOPE.0..=LIMIT_SLOPE.1).contains(&slope) && r.monotone && seconds < LIMIT_SECONDS;
    (
        ok,
        format!(
            "slope {slope:.4} (range [{}, {}]), monotone: {}, {seconds:.3} s (limit {LIMIT_SECONDS} s)",
            LIMIT_SLOPE.0, LIMIT_SLOPE.1, r.monotone
        ),
    )
}

fn pde_run() -> CompareReport {
    let pot = quartic_potential();
    let h0 = LayerVector::new(PDE_H0.to_vec()).expect("layers");
    let ode = OdeParams::new(PDE_EPS, PDE_TAU, PDE_T_END);
    let pde = PdeParams {
        stride: (PDE_SAMPLE_EVERY / PDE_DT).round() as usize,
        lift: VelocityLift::Tangent,
        ..PdeParams::new(PDE_EPS, PDE_TAU, PDE_N, PDE_DT, PDE_T_END)
    };
    compare_runs(&h0, Velocity::Forward, &ode, &pde, &pot).expect("pde run")
}

fn criterion_8(r: &CompareReport) -> Verdict {
    let first_bad = r.rows.iter().find(|row| !row.signs_agree).map(|row| row.t);
    let worst = r.rows.iter().max_by(|a, b| a.gap.total_cmp(&b.gap)).map_or(0.0, |row| row.t);
    let ok = r.passes(PDE_GAP_TOL) && r.seconds < PDE_SECONDS;
    (
        ok,
        format!(
            "sup gap {:.3e} at t = {worst} (limit {PDE_GAP_TOL:e}), signs agree: {}{}, {:.1} s (limit {PDE_SECONDS} s)",
            r.sup_gap,
            r.signs_agree,
            first_bad.map_or(String::new(), |t| format!(" (first mismatch t = {t})")),
            r.seconds
        ),
    )
}

fn criterion_9(r: &CompareReport) -> Verdict {
    let growth = r.ratio_growth();
    let ok = growth.is_some_and(|g| g <= RATIO_GROWTH_MAX);
    let later: Vec<f64> = r.rows.iter().skip(1).filter_map(|row| row.ratio).collect();
    let lo = later.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = later.iter().copied().fold(0.0, f64::max);
    (
        ok,
        format!(
            "max ratio / first ratio after t = 0: {} (limit {RATIO_GROWTH_MAX}); ratio in [{lo:.3e}, {hi:.3e}] for t > 0",
            growth.map_or("n/a".into(), |g| format!("{g:.3}"))
        ),
    )
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are not meaningful for this suite
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let pde = pde_run();
    let results = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(&pde),
        criterion_6(),
        criterion_7(),
        criterion_8(&pde),
        criterion_9(&pde),
    ];
    let mut failed = 0;
    for (k, (ok, detail)) in results.iter().enumerate() {
        println!("criterion {}: {} {detail}", k + 1, if *ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
