//! Built-in checks run by `--selftest`, one list per subcommand.

use std::f64::consts::{E, PI};

use esqpt::analysis::{
    critical_index, degeneracy_scan, fit_asymptotics_values, gap_profile, mirror_defect, order_parameter,
    order_parameter_fh, scaling_exponent, spectrum_scan, wavefunction_map, xi_derivatives, AnalysisError, FitWindow,
    ScanTable,
};
use esqpt::eigen::eig_all;
use esqpt::models::{build_hamiltonian, enumerate_block, Block, HalfInt, ModelSpec, TridiagonalOperator};
use esqpt::semiclassics::{
    esqpt_energy_estimate, esqpt_gap_at_offset, lambert_w, AsymptoticFit, Branch, ClassicalSystem, BRANCH_POINT,
};

use crate::commands::{columns, lambert_grid};
use crate::config::{parse_config, CommandName, Options, Spacing};
use crate::error::CliError;
use crate::table::Table;

type Check = (&'static str, fn() -> Result<(), String>);

fn ensure(cond: bool, detail: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(detail())
    }
}

fn close(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || format!("{what}: got {got}, expected {want} within {tol}"))
}

fn spectrum_of(spec: &ModelSpec) -> Result<Vec<f64>, String> {
    build_hamiltonian(spec)
        .map_err(|e| e.to_string())
        .and_then(|t| eig_all(&t).map_err(|e| e.to_string()))
}

fn args(line: &str) -> Vec<&str> {
    std::iter::once("esqpt-lab").chain(line.split_whitespace()).collect()
}

fn config_examples() -> Result<(), String> {
    parse_config(args("spectrum --model vibron-u3 --N 1000 --l 0 --xi 0.5")).map_err(|e| e.to_string())?;
    let e = parse_config(args("spectrum --model vibron-u3 --N 100 --xi 1.5")).err();
    ensure(e.as_ref().is_some_and(|e| e.to_string().contains("[0, 1]")), || format!("xi range error: {e:?}"))?;
    let e = parse_config(args("spectrum --model fermionic-pairing --N 300 --omega 50,50 --xi 0.5")).err();
    ensure(e.as_ref().is_some_and(|e| e.to_string().contains("Pauli")), || format!("Pauli error: {e:?}"))?;
    let e = parse_config(args("spectrum --model lipkin --N 10 --l 0 --xi 0.5")).err();
    ensure(e.is_some(), || "l with lipkin was accepted".into())
}

fn block_dimensions() -> Result<(), String> {
    let dim = |spec: ModelSpec| enumerate_block(&spec).map(|b| b.dim()).map_err(|e| e.to_string());
    ensure(dim(ModelSpec::vibron(100, 0, 0.5))? == 51, || "vibron N=100 l=0 dim".into())?;
    ensure(dim(ModelSpec::vibron(100, 25, 0.5))? == 38, || "vibron N=100 l=25 dim".into())?;
    let f = ModelSpec::fermionic_pairing(HalfInt::from_int(5), HalfInt::from_int(5), 10, 0, 0, 0.5);
    ensure(dim(f)? == 6, || "fermionic Omega=5 N=10 dim".into())?;
    let f = ModelSpec::fermionic_pairing(HalfInt::from_int(50), HalfInt::from_int(50), 100, 0, 0, 0.5);
    ensure(dim(f)? == 51, || "fermionic half filling dim".into())
}

fn small_spectra() -> Result<(), String> {
    let t = build_hamiltonian(&ModelSpec::lipkin(10, 0, 0.0)).map_err(|e| e.to_string())?;
    for (i, d) in t.diag.iter().enumerate() {
        close("lipkin xi=0 diagonal", *d, 0.2 * i as f64, 1e-14)?;
    }
    ensure(t.offdiag.iter().all(|&x| x == 0.0), || "lipkin xi=0 off-diagonal is nonzero".into())?;
    let e = eig_all(&TridiagonalOperator::new(vec![0.0, 0.0], vec![1.0])).map_err(|e| e.to_string())?;
    close("2x2 lower", e[0], -1.0, 1e-14)?;
    close("2x2 upper", e[1], 1.0, 1e-14)?;
    let e = spectrum_of(&ModelSpec::vibron(2, 0, 1.0))?;
    close("vibron N=2 lower", e[0], -1.5, 1e-12)?;
    close("vibron N=2 upper", e[1], 0.0, 1e-12)?;
    let e = spectrum_of(&ModelSpec::vibron(100, 0, 1.0))?;
    close("vibron N=100 xi=1 ground", e[0], -1.01, 1e-10)
}

fn header_layout() -> Result<(), String> {
    let t = Table::new("spectrum", columns(CommandName::Spectrum));
    let text = String::from_utf8(t.to_csv().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(text.lines().nth(1) == Some("model,N,xi,block,k,energy"), || format!("spectrum header: {text}"))?;
    let t = Table::new("gap", columns(CommandName::Gap));
    let text = String::from_utf8(t.to_csv().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure(text.lines().count() == 2, || "empty table is not header-only".into())?;
    ensure(text.lines().nth(1) == Some("model,N,xi,block,E_mid,N_delta"), || format!("gap header: {text}"))
}

fn constant_row_derivatives() -> Result<(), String> {
    let xi: Vec<f64> = (0..7).map(|i| 0.1 * f64::from(i)).collect();
    let scan = ScanTable {
        spec: ModelSpec::lipkin(4, 0, 0.0),
        energies: vec![vec![0.25, 0.5]; xi.len()],
        xi,
        solver: "fixed",
    };
    let (d1, d2) = xi_derivatives(&scan, 1).map_err(|e| e.to_string())?;
    ensure(d1.iter().chain(&d2).all(|d| d.abs() < 1e-12), || format!("nonzero derivatives {d1:?} {d2:?}"))
}

fn scan_examples() -> Result<(), String> {
    let spec = ModelSpec::vibron(100, 0, 0.5);
    let scan = spectrum_scan(&spec, &[0.5]).map_err(|e| e.to_string())?;
    ensure(scan.energies[0] == spectrum_of(&spec)?, || "single-point scan differs from eig_all".into())?;
    let scan = spectrum_scan(&spec, &[0.0, 0.2, 0.5, 1.0]).map_err(|e| e.to_string())?;
    for (k, e) in scan.energies[0].iter().enumerate() {
        close("xi=0 line", *e, 2.0 * k as f64 / 100.0, 1e-12)?;
    }
    close("xi=1 ground", scan.energies[3][0], -1.01, 1e-10)
}

fn gap_examples() -> Result<(), String> {
    let g = gap_profile(&ModelSpec::vibron(100, 0, 0.0)).map_err(|e| e.to_string())?;
    ensure(g.iter().all(|&(_, d)| (d - 2.0).abs() < 1e-10), || "xi=0 N delta is not 2".into())?;
    let g = gap_profile(&ModelSpec::vibron(100, 0, 1.0)).map_err(|e| e.to_string())?;
    let second: Vec<f64> = g.windows(3).map(|w| w[2].1 - 2.0 * w[1].1 + w[0].1).collect();
    ensure(second.iter().all(|s| s.abs() < 1e-9), || "xi=1 gaps are not linear in k".into())
}

fn order_examples() -> Result<(), String> {
    let spec = ModelSpec::vibron(40, 0, 0.0);
    let nb = order_parameter(&spec).map_err(|e| e.to_string())?;
    for (k, v) in nb.iter().enumerate() {
        close("xi=0 occupancy", *v, 2.0 * k as f64, 1e-12)?;
    }
    let spec = ModelSpec::vibron(60, 0, 0.5);
    let direct = order_parameter(&spec).map_err(|e| e.to_string())?;
    let fh = order_parameter_fh(&spec, 1e-4).map_err(|e| e.to_string())?;
    let worst = direct.iter().zip(&fh).map(|(a, b)| (a - b).abs() / a.abs().max(1.0)).fold(0.0, f64::max);
    ensure(worst < 1e-6, || format!("Feynman-Hellmann defect {worst:e}"))
}

fn critical_examples() -> Result<(), String> {
    let r = critical_index(&ModelSpec::vibron(100, 0, 0.15));
    ensure(matches!(r, Err(AnalysisError::NoEsqpt { .. })), || format!("xi=0.15 gave {r:?}"))?;
    let k = critical_index(&ModelSpec::vibron(1000, 0, 0.5)).map_err(|e| e.to_string())?;
    close("k_c/N at xi=0.5", k / 1000.0, 0.2, 0.01)?;
    let k = critical_index(&ModelSpec::vibron(400, 0, 1.0)).map_err(|e| e.to_string())?;
    close("k_c/N at xi=1", k / 400.0, 0.5, 0.01)
}

fn synthetic_fit_round_trip() -> Result<(), String> {
    let (alpha, k_c, xi, n) = (2.37, 40.3, 0.5, 1000);
    let fit = AsymptoticFit::new(xi, n, k_c, alpha).map_err(|e| e.to_string())?;
    let points: Vec<(f64, f64)> = (0..80)
        .map(f64::from)
        .filter_map(|k| esqpt_energy_estimate(&fit, n, xi, k).ok().map(|e| (k, e)))
        .collect();
    let window = FitWindow { min_offset: 2.0, max_offset: Some(30.0), per_side: false, joint: true };
    let got = fit_asymptotics_values(&points, xi, n, 40.0, window).map_err(|e| e.to_string())?;
    close("alpha", got.fit.alpha, alpha, 1e-6)?;
    close("k_c", got.fit.k_c, k_c, 1e-6)
}

fn scaling_examples() -> Result<(), String> {
    let series: Vec<(f64, f64)> = [100.0, 200.0, 400.0, 800.0].iter().map(|&n| (n, 1.0 / n)).collect();
    let fit = scaling_exponent(&series).map_err(|e| e.to_string())?;
    close("exact 1/N slope", fit.slope, -1.0, 1e-12)?;
    let a = esqpt_gap_at_offset(2.0, 1000, 0.5, 5.0).map_err(|e| e.to_string())?;
    let b = esqpt_gap_at_offset(2.0, 1000, 0.7, 5.0).map_err(|e| e.to_string())?;
    close("symmetric pair estimate", a, b, 1e-12 * a)
}

fn wavefunction_examples() -> Result<(), String> {
    let map = wavefunction_map(&ModelSpec::vibron(20, 0, 0.0)).map_err(|e| e.to_string())?;
    for (k, row) in map.probabilities.iter().enumerate() {
        for (i, p) in row.iter().enumerate() {
            close("xi=0 identity pattern", *p, if i == k { 1.0 } else { 0.0 }, 1e-12)?;
        }
    }
    let map = wavefunction_map(&ModelSpec::vibron(10, 0, 1.0)).map_err(|e| e.to_string())?;
    let defect = mirror_defect(&map);
    ensure(defect.iter().all(|d| d.is_finite() && (0.0..=1.0).contains(d)), || format!("mirror defect {defect:?}"))
}

fn degeneracy_examples() -> Result<(), String> {
    let blocks = [Block::Grading(0), Block::Grading(1)];
    let spec = ModelSpec::lipkin(100, 0, 0.5);
    let even = spectrum_of(&spec)?;
    let odd = spectrum_of(&spec.with_block(blocks[1]))?;
    let splitting = (odd[0] - even[0]).abs();
    let spacing = even[1] - even[0];
    ensure(splitting < 1e-3 * spacing, || format!("doublet splitting {splitting:e} vs spacing {spacing:e}"))?;
    let table = degeneracy_scan(&ModelSpec::lipkin(40, 0, 0.1), &blocks, None).map_err(|e| e.to_string())?;
    ensure(table.multiplets.iter().all(|m| m.members.len() == 1), || "clusters form without a barrier".into())
}

fn classical_examples() -> Result<(), String> {
    let sys = ClassicalSystem::line(0.5, 10).map_err(|e| e.to_string())?;
    close("V(1)", sys.potential(1.0), -0.25, 1e-14)?;
    close("m(0)", sys.mass(0.0), 2.0, 1e-14)?;
    let (x1, x2) = sys.turning_points(-0.1).map_err(|e| e.to_string())?;
    close("inner turning point", x1, 0.38461, 1e-5)?;
    close("outer turning point", x2, 1.16279, 1e-5)?;
    let harmonic = ClassicalSystem::line(0.0, 10).map_err(|e| e.to_string())?;
    close("harmonic action", harmonic.action(0.3).map_err(|e| e.to_string())?, 2.0 * PI * 0.3, 1e-12)?;
    let bottom = sys.energy_range().0;
    close("action at the well bottom", sys.action(bottom).map_err(|e| e.to_string())?, 0.0, 1e-12)
}

fn harmonic_levels() -> Result<(), String> {
    let sys = ClassicalSystem::line(0.0, 1000).map_err(|e| e.to_string())?;
    for k in [0usize, 3, 250] {
        let e = sys.wkb_level(k).map_err(|e| e.to_string())?;
        close("harmonic level", e, (k as f64 + 0.5) / 1000.0, 1e-12)?;
    }
    Ok(())
}

fn lambert_examples() -> Result<(), String> {
    let w = |b, x| lambert_w(b, x).map_err(|e| e.to_string());
    close("W0(0)", w(Branch::Principal, 0.0)?, 0.0, 1e-15)?;
    close("W0(e)", w(Branch::Principal, E)?, 1.0, 1e-14)?;
    close("W-1(-1/e)", w(Branch::MinusOne, BRANCH_POINT)?, -1.0, 1e-7)?;
    close("W-1(-0.1)", w(Branch::MinusOne, -0.1)?, -3.577152, 1e-6)?;
    let o = Options { branch: Branch::MinusOne, from: -0.367879, to: -1e-6, points: 100, spacing: Spacing::Linear, ..Options::default() };
    let values = lambert_grid(&o).into_iter().map(|x| w(Branch::MinusOne, x)).collect::<Result<Vec<_>, _>>()?;
    ensure(values.windows(2).all(|p| p[1] < p[0]), || "W-1 table is not monotone".into())
}

fn checks(command: CommandName) -> Vec<Check> {
    let mut list: Vec<Check> = vec![("config examples", config_examples), ("table headers", header_layout)];
    list.extend_from_slice(match command {
        CommandName::Spectrum => &[("block dimensions", block_dimensions as fn() -> _), ("small spectra", small_spectra)],
        CommandName::Scan => &[("constant row", constant_row_derivatives as fn() -> _), ("scan grid", scan_examples)],
        CommandName::Gap => &[("gap limits", gap_examples as fn() -> _)],
        CommandName::OrderParam => &[("order parameter", order_examples as fn() -> _)],
        CommandName::Critical => &[("critical index", critical_examples as fn() -> _)],
        CommandName::FitAlpha => &[("synthetic round trip", synthetic_fit_round_trip as fn() -> _)],
        CommandName::Scaling => &[("scaling limits", scaling_examples as fn() -> _)],
        CommandName::Wavefunction => &[("wavefunction maps", wavefunction_examples as fn() -> _)],
        CommandName::Degeneracy => &[("degeneracy", degeneracy_examples as fn() -> _)],
        CommandName::WkbContour => &[("harmonic levels", harmonic_levels as fn() -> _)],
        CommandName::Action => &[("classical system", classical_examples as fn() -> _)],
        CommandName::LambertW => &[("Lambert W", lambert_examples as fn() -> _)],
    });
    list
}

/// Runs the checks for `command`, printing one line each.
pub fn run_selftest(command: CommandName) -> Result<(), CliError> {
    let mut failed = 0;
    for (name, check) in checks(command) {
        match check() {
            Ok(()) => println!("ok   {command}: {name}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {command}: {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Selftest { failed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_selftest_passes() {
        for command in CommandName::ALL {
            for (name, check) in checks(command) {
                if let Err(detail) = check() {
                    panic!("{command} {name}: {detail}");
                }
            }
        }
    }
}
