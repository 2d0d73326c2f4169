use super::*;
use crate::eigen::eig_all;
use crate::models::Block;
use proptest::prelude::*;

fn grid(lo: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lo + step * i as f64).collect()
}

#[test]
fn scan_matches_single_solves() {
    let spec = ModelSpec::vibron(100, 0, 0.0);
    let scan = spectrum_scan(&spec, &[0.0, 0.2, 0.5, 1.0]).unwrap();
    assert_eq!(scan.dim(), 51);
    for (i, &xi) in scan.xi.iter().enumerate() {
        assert_eq!(scan.energies[i], eig_all(&build_hamiltonian(&spec.with_xi(xi)).unwrap()).unwrap());
        assert!(scan.energies[i].windows(2).all(|w| w[0] <= w[1]));
    }
    // Harmonic limit: N_b / N with N_b = 0, 2, 4, ...
    for (k, &e) in scan.energies[0].iter().enumerate() {
        assert!((e - 2.0 * k as f64 / 100.0).abs() < 1e-14);
    }
    // Rotor limit: -w(w+1)/N^2 with w = N - 2k.
    for (k, &e) in scan.energies[3].iter().enumerate() {
        let w = (100 - 2 * k) as f64;
        assert!((e + w * (w + 1.0) / 1e4).abs() < 1e-12, "k={k}: {e}");
    }
    assert!(spectrum_scan(&spec, &[]).is_err());
    assert!(spectrum_scan(&spec, &[0.3, 0.2]).is_err());
}

#[test]
fn lipkin_parities_interleave() {
    let even = spectrum_scan(&ModelSpec::lipkin(10, 0, 0.0), &[0.0, 0.05]).unwrap();
    let odd = spectrum_scan(&ModelSpec::lipkin(10, 1, 0.0), &[0.0, 0.05]).unwrap();
    let mut merged: Vec<(f64, u8)> = even.energies[1].iter().map(|&e| (e, 0)).chain(odd.energies[1].iter().map(|&e| (e, 1))).collect();
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert!(merged.windows(2).all(|w| w[0].1 != w[1].1));
}

#[test]
fn derivatives_of_constant_and_polynomial_rows() {
    let spec = ModelSpec::vibron(10, 0, 0.0);
    let xi = grid(0.1, 0.001, 7);
    let constant = ScanTable { spec, xi: xi.clone(), energies: vec![vec![3.0; 2]; 7], solver: "test" };
    let (d1, d2) = xi_derivatives(&constant, 1).unwrap();
    assert!(d1.iter().chain(&d2).all(|&v| v.abs() < 1e-9));
    let quad = ScanTable { spec, xi: xi.clone(), energies: xi.iter().map(|x| vec![x * x]).collect(), solver: "test" };
    let (d1, d2) = xi_derivatives(&quad, 0).unwrap();
    for (i, x) in xi.iter().enumerate() {
        assert!((d1[i] - 2.0 * x).abs() < 1e-9 && (d2[i] - 2.0).abs() < 1e-6);
    }
    let short = ScanTable { spec, xi: grid(0.1, 0.001, 4), energies: vec![vec![0.0]; 4], solver: "test" };
    assert!(matches!(xi_derivatives(&short, 0), Err(AnalysisError::TooFewPoints { .. })));
    let uneven = ScanTable { spec, xi: vec![0.0, 0.1, 0.2, 0.35, 0.4], energies: vec![vec![0.0]; 5], solver: "test" };
    assert!(xi_derivatives(&uneven, 0).is_err());
    let cubic = ScanTable { spec, xi: xi.clone(), energies: xi.iter().map(|x| vec![x.powi(4)]).collect(), solver: "test" };
    let (r1, _) = xi_derivatives_richardson(&cubic, 0).unwrap();
    assert!((r1[3] - 4.0 * xi[3].powi(3)).abs() < 1e-12);
}

#[test]
fn feynman_hellmann_matches_eigenvectors() {
    for xi in [0.3, 0.5, 0.8] {
        let spec = ModelSpec::vibron(100, 0, xi);
        let direct = order_parameter(&spec).unwrap();
        let fh = order_parameter_fh(&spec, 1e-4).unwrap();
        for (a, b) in direct.iter().zip(&fh) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "xi={xi}: {a} vs {b}");
        }
    }
    assert!(order_parameter_fh(&ModelSpec::vibron(20, 0, 0.0), 1e-4).is_err());
    // At xi = 1 the stencil turns one-sided.
    let spec = ModelSpec::vibron(40, 0, 1.0);
    let direct = order_parameter(&spec).unwrap();
    let fh = order_parameter_fh(&spec, 1e-4).unwrap();
    for (a, b) in direct.iter().zip(&fh) {
        assert!((a - b).abs() <= 1e-5 * a.abs().max(1.0));
    }
}

#[test]
fn order_parameter_in_harmonic_limit() {
    let spec = ModelSpec::vibron(30, 2, 0.0);
    let nb = order_parameter(&spec).unwrap();
    for (k, v) in nb.iter().enumerate() {
        assert!((v - (2 + 2 * k) as f64).abs() < 1e-12);
    }
}

#[test]
fn order_parameter_dips_at_crossing() {
    let depth = |n: u32| {
        let spec = ModelSpec::vibron(n, 0, 0.5);
        let nb = order_parameter(&spec).unwrap();
        let k_c = critical_index(&spec).unwrap();
        let lo = (k_c - 0.05 * n as f64) as usize;
        let hi = (k_c + 0.05 * n as f64) as usize;
        let (kmin, vmin) = (lo..=hi).map(|k| (k, nb[k] / n as f64)).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        (kmin as f64 - k_c, vmin, 0.5 * (nb[lo] + nb[hi]) / n as f64)
    };
    let (off_big, min_big, ref_big) = depth(1000);
    let (_, min_small, ref_small) = depth(100);
    assert!(off_big.abs() <= 2.0, "minimum {off_big} levels from k_c");
    assert!(ref_big - min_big > ref_small - min_small);
}

#[test]
fn gap_profile_limits() {
    let flat = gap_profile(&ModelSpec::vibron(200, 0, 0.0)).unwrap();
    assert!(flat.iter().all(|&(_, g)| (g - 2.0).abs() < 1e-12));
    let n = 100;
    let rotor = gap_profile(&ModelSpec::vibron(n, 0, 1.0)).unwrap();
    // Levels ordered from w = N upward in energy: k-th gap is between w = N - 2k and N - 2k - 2.
    for (k, &(_, g)) in rotor.iter().enumerate() {
        let w = (n - 2 * k as u32) as f64;
        let expected = (w * (w + 1.0) - (w - 2.0) * (w - 1.0)) / f64::from(n);
        assert!((g - expected).abs() < 1e-10, "k={k}: {g} vs {expected}");
    }
    let dip = gap_profile(&ModelSpec::vibron(1000, 0, 0.5)).unwrap();
    let (e_min, _) = dip.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert!(e_min.abs() < 0.02);
    assert!(gap_profile_values(&[1.0], 10).is_err());
}

#[test]
fn critical_index_cases() {
    let k_c = critical_index(&ModelSpec::vibron(1000, 0, 0.5)).unwrap();
    assert!((k_c / 1000.0 - 0.2).abs() < 0.01);
    assert!(k_c.fract() != 0.0);
    assert!(matches!(critical_index(&ModelSpec::vibron(100, 0, 0.15)), Err(AnalysisError::NoEsqpt { .. })));
    // Rotor limit: the top level w = 0 sits at E = 0, so k_c / N = 1/2.
    for n in [100, 400, 1600] {
        let r = critical_index(&ModelSpec::vibron(n, 0, 1.0)).unwrap() / f64::from(n);
        assert!((r - 0.5).abs() < 1e-9, "{r}");
    }
    let values = [-2.0, -1.0, 1.0, 3.0];
    assert_eq!(critical_index_values(&values, 0.5).unwrap(), 1.5);
    assert!(critical_index_values(&[1.0, 2.0], 0.5).is_err());
}

#[test]
fn crossing_interpolation_agrees_with_full_spectrum() {
    let spec = ModelSpec::vibron(300, 0, 0.7);
    let values = eig_all(&build_hamiltonian(&spec).unwrap()).unwrap();
    let a = critical_index_values(&values, 0.7).unwrap();
    let b = critical_index(&spec).unwrap();
    assert!((a - b).abs() < 1e-9);
}

#[test]
fn xi_crossing_consistent_with_critical_index() {
    // Level k = 0.2 N flattens near xi = 0.5, where d2E/dxi2 changes sign.
    let n = 1000;
    let spec = ModelSpec::vibron(n, 0, 0.4);
    let xi = grid(0.40, 0.002, 101);
    let scan = spectrum_scan(&spec, &xi).unwrap();
    let k = 200;
    let (_, d2) = xi_derivatives(&scan, k).unwrap();
    let flips: Vec<usize> = (1..d2.len()).filter(|&i| d2[i - 1] > 0.0 && d2[i] <= 0.0).collect();
    assert!(!flips.is_empty());
    let xi_cex = xi[flips[0]];
    assert!((xi_cex - 0.5).abs() < 0.02, "{xi_cex}");
}

#[test]
fn dip_softens_with_angular_momentum() {
    let mins: Vec<f64> = [0, 10, 25]
        .iter()
        .map(|&l| gap_profile(&ModelSpec::vibron(100, l, 0.5)).unwrap().iter().map(|p| p.1).fold(f64::INFINITY, f64::min))
        .collect();
    assert!(mins[0] < mins[1] && mins[1] < mins[2], "{mins:?}");
}

#[test]
fn second_difference_flips_once() {
    let values = eig_all(&build_hamiltonian(&ModelSpec::vibron(1000, 0, 0.5)).unwrap()).unwrap();
    let second: Vec<f64> = values.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
    let flips: Vec<usize> = (1..second.len()).filter(|&i| (second[i] > 0.0) != (second[i - 1] > 0.0)).collect();
    assert_eq!(flips.len(), 1, "{flips:?}");
    let dip = gap_profile_values(&values, 1000).unwrap();
    let kmin = (0..dip.len()).min_by(|&a, &b| dip[a].1.total_cmp(&dip[b].1)).unwrap();
    assert!((flips[0] as i64 - kmin as i64).abs() <= 1);
}

#[test]
fn alpha_at_half_coupling() {
    let fit = fit_asymptotics(&ModelSpec::vibron(1000, 0, 0.5), FitWindow::default()).unwrap();
    assert!((fit.fit.alpha - 2.49).abs() < 0.1, "{fit:?}");
    assert_eq!(fit.window_min, 5.0);
    assert_eq!(fit.window_max, 20.0);
    assert!(fit_asymptotics(&ModelSpec::vibron(1000, 0, 0.15), FitWindow::default()).is_err());
}

#[test]
fn fixed_offset_gap_interpolates() {
    let t = build_hamiltonian(&ModelSpec::vibron(400, 0, 0.0)).unwrap();
    // Uniform spacing 2/N regardless of the offset.
    for dk in [1.0, 2.5, 7.3] {
        assert!((fixed_offset_gap(&t, 30.2, dk).unwrap() - 0.005).abs() < 1e-14);
    }
    let t = build_hamiltonian(&ModelSpec::vibron(400, 0, 1.0)).unwrap();
    let values = eig_all(&t).unwrap();
    let g = fixed_offset_gap(&t, 50.0, 5.0).unwrap();
    let expected = 0.5 * ((values[55] - values[54]) + (values[56] - values[55]));
    assert!((g - expected).abs() < 1e-12);
    assert!(fixed_offset_gap(&t, 199.0, 5.0).is_err());
}

#[test]
fn scaling_study_orders_records() {
    let options = ScalingOptions::default();
    let records = scaling_study(&ModelSpec::vibron(100, 0, 0.5), &[0.5, 0.7], &[1000, 2000, 4000, 8000], options).unwrap();
    assert_eq!(records.len(), 8);
    assert!(records[..4].iter().all(|r| r.xi == 0.5) && records[4..].iter().all(|r| r.xi == 0.7));
    for pair in records.chunks(4) {
        assert!(pair.windows(2).all(|w| w[1].n_delta < w[0].n_delta));
        let exponent = pair[0].exponent.unwrap();
        assert!(exponent.slope < -1.0);
    }
    for r in records.iter().filter(|r| r.xi == 0.5) {
        assert!((r.estimate_n_delta / r.n_delta - 1.0).abs() < 0.1);
    }
    assert!(scaling_study(&ModelSpec::vibron(100, 0, 0.5), &[0.5], &[2000, 1000], options).is_err());
    let bad = ScalingOptions { dk: 0.5, ..options };
    assert!(scaling_study(&ModelSpec::vibron(100, 0, 0.5), &[0.5], &[1000], bad).is_err());
}

#[test]
fn gap_alpha_recovers_synthetic_value() {
    let options = ScalingOptions { alpha: Some(2.0), ..Default::default() };
    let mut records = scaling_study(&ModelSpec::vibron(100, 0, 0.5), &[0.5], &[1000, 10000], options).unwrap();
    for r in &mut records {
        r.n_delta = f64::from(r.n_particles) * crate::semiclassics::esqpt_gap_at_offset(1.7, r.n_particles, r.xi, r.dk).unwrap();
    }
    assert!((fit_gap_alpha(&records).unwrap() - 1.7).abs() < 1e-8);
    assert!(fit_gap_alpha(&[]).is_err());
}

#[test]
fn harmonic_gap_exponent() {
    let series: Vec<(f64, f64)> = [100u32, 200, 400, 800]
        .iter()
        .map(|&n| {
            let v = eig_all(&build_hamiltonian(&ModelSpec::vibron(n, 0, 0.0)).unwrap()).unwrap();
            (f64::from(n), v[1] - v[0])
        })
        .collect();
    assert!((scaling_exponent(&series).unwrap().slope + 1.0).abs() < 1e-12);
}

#[test]
fn wavefunction_maps() {
    let map = wavefunction_map(&ModelSpec::vibron(20, 0, 0.0)).unwrap();
    for (k, row) in map.probabilities.iter().enumerate() {
        for (i, &p) in row.iter().enumerate() {
            assert_eq!(p, if i == k { 1.0 } else { 0.0 });
        }
    }
    let map = wavefunction_map(&ModelSpec::vibron(200, 0, 0.5)).unwrap();
    for row in &map.probabilities {
        assert!(row.iter().all(|&p| p >= 0.0));
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let rotor = wavefunction_map(&ModelSpec::vibron(10, 0, 1.0)).unwrap();
    let defects = mirror_defect(&rotor);
    assert_eq!(defects.len(), 6);
    assert!(defects.iter().all(|d| (0.0..=1.0).contains(d)));
}

#[test]
fn mirror_defect_of_symmetric_rows_vanishes() {
    let map = WavefunctionMap {
        n_particles: 4,
        occupancies: vec![0, 2, 4],
        energies: vec![0.0, 1.0],
        probabilities: vec![vec![0.25, 0.5, 0.25], vec![1.0, 0.0, 0.0]],
    };
    let d = mirror_defect(&map);
    assert_eq!(d, vec![0.0, 1.0]);
}

#[test]
fn degeneracy_clusters() {
    let blocks: Vec<Block> = (0..=5).map(Block::AngularMomentum).collect();
    let table = degeneracy_scan(&ModelSpec::vibron(25, 0, 0.6), &blocks, None).unwrap();
    let total: usize = table.multiplets.iter().map(|m| m.members.len()).sum();
    let dims: usize = (0..=5).map(|l| 13 - l / 2).sum();
    assert_eq!(total, dims);
    assert!(table.multiplets.windows(2).all(|w| w[0].mean_energy < w[1].mean_energy));
    assert!(table.width > 0.0);
    // Without a barrier the composition does not change across the spectrum.
    let flat = degeneracy_scan(&ModelSpec::vibron(25, 0, 0.0), &blocks, None).unwrap();
    for m in &flat.multiplets {
        let b = m.blocks();
        assert!(b.iter().all(|&l| l % 2 == b[0] % 2), "{m:?}");
    }
    assert!(degeneracy_scan(&ModelSpec::vibron(25, 0, 0.6), &[], None).is_err());
}

#[test]
fn lipkin_parity_doublets() {
    let even = eig_all(&build_hamiltonian(&ModelSpec::lipkin(100, 0, 0.5)).unwrap()).unwrap();
    let odd = eig_all(&build_hamiltonian(&ModelSpec::lipkin(100, 1, 0.5)).unwrap()).unwrap();
    let splitting = (odd[0] - even[0]).abs();
    let spacing = even[1] - even[0];
    assert!(splitting < 1e-3 * spacing, "{splitting} vs {spacing}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn feynman_hellmann_closure(xi in 0.06f64..0.99, n in 10u32..60, l in 0i32..4) {
        let spec = ModelSpec::vibron(n, l, xi);
        let e = eig_all(&build_hamiltonian(&spec).unwrap()).unwrap();
        let nb = order_parameter(&spec).unwrap();
        let d = energy_xi_derivative(&spec, 1e-4).unwrap();
        let scale = d.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for k in 0..e.len() {
            let fh = (e[k] - nb[k] / f64::from(n)) / xi;
            prop_assert!((d[k] - fh).abs() <= 1e-6 * scale, "k={} {} vs {}", k, d[k], fh);
        }
    }

    #[test]
    fn wavefunction_rows_are_probabilities(xi in 0.0f64..1.0, n in 2u32..80) {
        let map = wavefunction_map(&ModelSpec::lipkin(n, 0, xi)).unwrap();
        for row in &map.probabilities {
            prop_assert!(row.iter().all(|&p| p >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
