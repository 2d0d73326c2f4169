//! One table-producing function per subcommand.

use std::collections::BTreeMap;

use rayon::prelude::*;

use esqpt::analysis::{
    critical_index, degeneracy_scan, fit_asymptotics, fit_gap_alpha, gap_profile, mirror_defect, order_parameter_fh,
    order_parameter_of, scaling_study, spectrum_scan, wavefunction_map, xi_derivatives, AnalysisError, ScalingOptions,
};
use esqpt::eigen::{eig_all, SpectrumBlock};
use esqpt::models::{build_hamiltonian, Block, ModelSpec};
use esqpt::semiclassics::{
    esqpt_gap_at_offset, lambert_w, wkb_contour, Branch, ClassicalSystem, SemiclassicsError,
};

use crate::config::{AlphaMode, CommandName, ModelConfig, Options, RunConfig, Spacing};
use crate::error::CliError;
use crate::table::{Cell, Table};

type Rows = Vec<Vec<Cell>>;

pub const SPECTRUM_COLUMNS: &[&str] = &["model", "N", "xi", "block", "k", "energy"];
pub const SCAN_COLUMNS: &[&str] = &["model", "N", "xi", "block", "k", "energy", "dE_dxi", "d2E_dxi2"];
pub const GAP_COLUMNS: &[&str] = &["model", "N", "xi", "block", "E_mid", "N_delta"];
pub const ORDER_COLUMNS: &[&str] = &["model", "N", "xi", "block", "k", "energy", "order_parameter", "order_parameter_fh"];
pub const CRITICAL_COLUMNS: &[&str] = &["model", "N", "xi", "block", "k_c", "k_c_over_N"];
pub const FIT_COLUMNS: &[&str] = &[
    "model", "N", "xi", "block", "k_c", "alpha", "alpha_below", "window_min", "window_max", "points", "rms_residual",
    "condition",
];
pub const SCALING_COLUMNS: &[&str] = &[
    "model", "N", "xi", "block", "k_c", "dk", "delta", "N_delta", "alpha", "estimate_N_delta",
    "log_asymptote_N_delta", "exponent", "exponent_stderr",
];
pub const WAVEFUNCTION_COLUMNS: &[&str] =
    &["model", "N", "xi", "block", "k", "energy", "N_b", "probability", "mirror_defect"];
pub const DEGENERACY_COLUMNS: &[&str] =
    &["model", "N", "xi", "multiplet", "mean_energy", "spread", "size", "blocks", "below_barrier"];
pub const CONTOUR_COLUMNS: &[&str] = &["model", "N", "xi", "block", "k", "energy", "slope"];
pub const ACTION_COLUMNS: &[&str] = &["model", "N", "xi", "block", "energy", "action", "dS_dE", "dS_dxi", "level_count"];
pub const LAMBERT_COLUMNS: &[&str] = &["branch", "x", "w", "residual"];

pub fn columns(command: CommandName) -> &'static [&'static str] {
    match command {
        CommandName::Spectrum => SPECTRUM_COLUMNS,
        CommandName::Scan => SCAN_COLUMNS,
        CommandName::Gap => GAP_COLUMNS,
        CommandName::OrderParam => ORDER_COLUMNS,
        CommandName::Critical => CRITICAL_COLUMNS,
        CommandName::FitAlpha => FIT_COLUMNS,
        CommandName::Scaling => SCALING_COLUMNS,
        CommandName::Wavefunction => WAVEFUNCTION_COLUMNS,
        CommandName::Degeneracy => DEGENERACY_COLUMNS,
        CommandName::WkbContour => CONTOUR_COLUMNS,
        CommandName::Action => ACTION_COLUMNS,
        CommandName::LambertW => LAMBERT_COLUMNS,
    }
}

/// Computes the table of a validated, non-selftest run.
pub fn run_command(config: &RunConfig) -> Result<Table, CliError> {
    let command = config.command;
    let mut table = Table::new(command.name(), columns(command));
    let o = &config.options;
    let rows = match (command, &config.model) {
        (CommandName::LambertW, _) => lambert_rows(o)?,
        (_, None) => return Err(CliError::Config(format!("{command} needs a model"))),
        (CommandName::Spectrum, Some(m)) => sweep(m, spectrum_rows)?,
        (CommandName::Scan, Some(m)) => scan_rows(m)?,
        (CommandName::Gap, Some(m)) => sweep(m, gap_rows)?,
        (CommandName::OrderParam, Some(m)) => sweep(m, |s| order_rows(s, o.dxi))?,
        (CommandName::Critical, Some(m)) => sweep(m, critical_rows)?,
        (CommandName::FitAlpha, Some(m)) => sweep(m, |s| fit_rows(s, o))?,
        (CommandName::Scaling, Some(m)) => scaling_rows(m, o)?,
        (CommandName::Wavefunction, Some(m)) => sweep(m, |s| wavefunction_rows(s, o.levels.as_deref()))?,
        (CommandName::Degeneracy, Some(m)) => degeneracy_rows(m, o)?,
        (CommandName::WkbContour, Some(m)) => contour_rows(m, o)?,
        (CommandName::Action, Some(m)) => sweep(m, |s| action_rows(s, o))?,
    };
    for row in rows {
        table.push(row);
    }
    Ok(table)
}

fn prefix(spec: &ModelSpec) -> Vec<Cell> {
    vec![spec.family.name().into(), spec.n_particles.into(), spec.xi.into(), spec.block.to_string().into()]
}

fn row(spec: &ModelSpec, rest: impl IntoIterator<Item = Cell>) -> Vec<Cell> {
    let mut r = prefix(spec);
    r.extend(rest);
    r
}

/// Runs `f` on every `(N, xi, block)` point in parallel and concatenates
/// the rows in grid order.
fn sweep<F>(m: &ModelConfig, f: F) -> Result<Rows, CliError>
where
    F: Fn(&ModelSpec) -> Result<Rows, CliError> + Sync,
{
    let jobs: Vec<ModelSpec> = m
        .n_set
        .iter()
        .flat_map(|&n| m.xi_set.iter().flat_map(move |&xi| m.blocks.iter().map(move |&b| (n, xi, b))))
        .map(|(n, xi, b)| m.spec(n, xi, b))
        .collect();
    let parts = jobs.par_iter().map(&f).collect::<Result<Vec<_>, _>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn spectrum_rows(spec: &ModelSpec) -> Result<Rows, CliError> {
    let values = eig_all(&build_hamiltonian(spec)?)?;
    Ok(values.into_iter().enumerate().map(|(k, e)| row(spec, [k.into(), e.into()])).collect())
}

fn scan_rows(m: &ModelConfig) -> Result<Rows, CliError> {
    let pairs: Vec<(u32, Block)> = m.n_set.iter().flat_map(|&n| m.blocks.iter().map(move |&b| (n, b))).collect();
    let scans = pairs
        .par_iter()
        .map(|&(n, b)| -> Result<_, CliError> {
            let scan = spectrum_scan(&m.spec(n, m.xi_set[0], b), &m.xi_set)?;
            let derivatives = (0..scan.dim()).map(|k| xi_derivatives(&scan, k)).collect::<Result<Vec<_>, _>>();
            let derivatives = match derivatives {
                Ok(d) => Some(d),
                Err(e @ (AnalysisError::TooFewPoints { .. } | AnalysisError::InvalidGrid(_))) => {
                    log::warn!("scan: derivative columns left empty ({e})");
                    None
                }
                Err(e) => return Err(e.into()),
            };
            Ok((scan, derivatives))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for per_n in scans.chunks(m.blocks.len()) {
        for i in 0..m.xi_set.len() {
            for (scan, derivatives) in per_n {
                let spec = scan.spec.with_xi(scan.xi[i]);
                for (k, &e) in scan.energies[i].iter().enumerate() {
                    let (d1, d2) = derivatives.as_ref().map_or((f64::NAN, f64::NAN), |d| (d[k].0[i], d[k].1[i]));
                    rows.push(row(&spec, [k.into(), e.into(), d1.into(), d2.into()]));
                }
            }
        }
    }
    Ok(rows)
}

fn gap_rows(spec: &ModelSpec) -> Result<Rows, CliError> {
    Ok(gap_profile(spec)?.into_iter().map(|(e, g)| row(spec, [e.into(), g.into()])).collect())
}

fn order_rows(spec: &ModelSpec, dxi: f64) -> Result<Rows, CliError> {
    let block = SpectrumBlock::solve(spec, true)?;
    let nb = order_parameter_of(&block)?;
    let n = f64::from(spec.n_particles);
    let fh = if spec.xi > 0.0 {
        order_parameter_fh(spec, dxi)?
    } else {
        vec![f64::NAN; nb.len()]
    };
    Ok((0..nb.len())
        .map(|k| row(spec, [k.into(), block.eigenvalues[k].into(), (nb[k] / n).into(), (fh[k] / n).into()]))
        .collect())
}

fn critical_rows(spec: &ModelSpec) -> Result<Rows, CliError> {
    match critical_index(spec) {
        Ok(k_c) => Ok(vec![row(spec, [k_c.into(), (k_c / f64::from(spec.n_particles)).into()])]),
        Err(e @ AnalysisError::NoEsqpt { .. }) => {
            log::warn!("critical: N={} {}: {e}", spec.n_particles, spec.block);
            Ok(Vec::new())
        }
        Err(e) => Err(e.into()),
    }
}

fn fit_rows(spec: &ModelSpec, o: &Options) -> Result<Rows, CliError> {
    let fit = match fit_asymptotics(spec, o.window) {
        Ok(f) => f,
        Err(e @ AnalysisError::NoEsqpt { .. }) => {
            log::warn!("fit-alpha: N={} {}: {e}", spec.n_particles, spec.block);
            return Ok(Vec::new());
        }
        Err(e) => return Err(e.into()),
    };
    Ok(vec![row(
        spec,
        [
            fit.fit.k_c.into(),
            fit.fit.alpha.into(),
            fit.fit.alpha_below.unwrap_or(f64::NAN).into(),
            fit.window_min.into(),
            fit.window_max.into(),
            fit.points.into(),
            fit.rms_residual.into(),
            fit.condition.into(),
        ],
    )])
}

/// Key grouping control parameters with the same `(1 - xi)(5 xi - 1)`.
fn pair_key(xi: f64) -> i64 {
    ((xi - 0.6).abs() * 1e9).round() as i64
}

fn scaling_rows(m: &ModelConfig, o: &Options) -> Result<Rows, CliError> {
    let options = ScalingOptions {
        dk: o.dk,
        fit_window: o.window,
        alpha: match o.alpha {
            AlphaMode::Fixed(a) => Some(a),
            _ => None,
        },
    };
    let mut rows = Vec::new();
    for &b in &m.blocks {
        let template = m.template.with_block(b);
        let mut records = scaling_study(&template, &m.xi_set, &m.n_set, options)?;
        if o.alpha == AlphaMode::GapMatched {
            let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
            for (i, r) in records.iter().enumerate() {
                groups.entry(pair_key(r.xi)).or_default().push(i);
            }
            for members in groups.values() {
                let subset: Vec<_> = members.iter().map(|&i| records[i]).collect();
                let alpha = fit_gap_alpha(&subset)?;
                for &i in members {
                    let r = &mut records[i];
                    r.alpha = alpha;
                    r.estimate_n_delta = f64::from(r.n_particles) * esqpt_gap_at_offset(alpha, r.n_particles, r.xi, r.dk)?;
                }
            }
        }
        for r in records {
            let spec = template.with_xi(r.xi).with_particles(r.n_particles);
            let (slope, stderr) = r.exponent.map_or((f64::NAN, f64::NAN), |e| (e.slope, e.slope_stderr));
            rows.push(row(
                &spec,
                [
                    r.k_c.into(),
                    r.dk.into(),
                    r.delta.into(),
                    r.n_delta.into(),
                    r.alpha.into(),
                    r.estimate_n_delta.into(),
                    r.log_asymptote_n_delta.into(),
                    slope.into(),
                    stderr.into(),
                ],
            ));
        }
    }
    Ok(rows)
}

fn wavefunction_rows(spec: &ModelSpec, levels: Option<&[usize]>) -> Result<Rows, CliError> {
    let map = wavefunction_map(spec)?;
    let defect = mirror_defect(&map);
    let dim = map.energies.len();
    let chosen: Vec<usize> = match levels {
        Some(l) => {
            if let Some(bad) = l.iter().find(|&&k| k >= dim) {
                log::warn!("wavefunction: level {bad} is beyond the block dimension {dim}; skipped");
            }
            l.iter().copied().filter(|&k| k < dim).collect()
        }
        None => (0..dim).collect(),
    };
    let mut rows = Vec::new();
    for k in chosen {
        for (i, &o) in map.occupancies.iter().enumerate() {
            rows.push(row(
                spec,
                [k.into(), map.energies[k].into(), o.into(), map.probabilities[k][i].into(), defect[k].into()],
            ));
        }
    }
    Ok(rows)
}

fn degeneracy_rows(m: &ModelConfig, o: &Options) -> Result<Rows, CliError> {
    let jobs: Vec<(u32, f64)> = m.n_set.iter().flat_map(|&n| m.xi_set.iter().map(move |&xi| (n, xi))).collect();
    let parts = jobs
        .par_iter()
        .map(|&(n, xi)| -> Result<Rows, CliError> {
            let spec = m.spec(n, xi, m.blocks[0]);
            let table = degeneracy_scan(&spec, &m.blocks, o.width)?;
            Ok(table
                .multiplets
                .iter()
                .enumerate()
                .map(|(i, mp)| {
                    let labels: Vec<String> = mp.blocks().iter().map(|&b| table.blocks[b].to_string()).collect();
                    vec![
                        spec.family.name().into(),
                        n.into(),
                        xi.into(),
                        i.into(),
                        mp.mean_energy.into(),
                        mp.spread.into(),
                        mp.members.len().into(),
                        labels.join(";").into(),
                        mp.below_barrier().into(),
                    ]
                })
                .collect())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn contour_rows(m: &ModelConfig, o: &Options) -> Result<Rows, CliError> {
    let levels = o.levels.as_deref().unwrap_or_default();
    let mut rows = Vec::new();
    for &n in &m.n_set {
        for &b in &m.blocks {
            let spec = m.spec(n, m.xi_set[0], b);
            let sys = ClassicalSystem::for_spec(&spec)?.with_counting(o.counting);
            let mut contours = Vec::with_capacity(levels.len());
            for &k in levels {
                contours.push(wkb_contour(&sys, k, &m.xi_set)?);
            }
            for (i, &xi) in m.xi_set.iter().enumerate() {
                let s = spec.with_xi(xi);
                for (&k, c) in levels.iter().zip(&contours) {
                    let p = c[i];
                    rows.push(row(&s, [k.into(), p.energy.into(), p.slope.unwrap_or(f64::NAN).into()]));
                }
            }
        }
    }
    Ok(rows)
}

/// Maps a divergence at the barrier top to NaN and passes other errors on.
fn finite_or_nan(value: Result<f64, SemiclassicsError>) -> Result<f64, CliError> {
    match value {
        Ok(v) => Ok(v),
        Err(SemiclassicsError::Divergent(_)) => Ok(f64::NAN),
        Err(e) => Err(e.into()),
    }
}

fn action_rows(spec: &ModelSpec, o: &Options) -> Result<Rows, CliError> {
    let sys = ClassicalSystem::for_spec(spec)?.with_counting(o.counting);
    o.energy
        .iter()
        .map(|&e| {
            Ok(row(
                spec,
                [
                    e.into(),
                    sys.action(e)?.into(),
                    finite_or_nan(sys.action_energy_derivative(e))?.into(),
                    finite_or_nan(sys.action_xi_derivative(e))?.into(),
                    sys.level_count(e)?.into(),
                ],
            ))
        })
        .collect()
}

pub fn lambert_grid(o: &Options) -> Vec<f64> {
    if o.points == 1 {
        return vec![o.from];
    }
    let last = (o.points - 1) as f64;
    (0..o.points)
        .map(|i| {
            if i == o.points - 1 {
                return o.to;
            }
            let t = i as f64 / last;
            match o.spacing {
                Spacing::Linear => o.from + t * (o.to - o.from),
                Spacing::Log => o.from.signum() * (o.from.abs().ln() + t * (o.to.abs().ln() - o.from.abs().ln())).exp(),
            }
        })
        .collect()
}

fn lambert_rows(o: &Options) -> Result<Rows, CliError> {
    let label = match o.branch {
        Branch::Principal => "0",
        Branch::MinusOne => "-1",
    };
    lambert_grid(o)
        .into_iter()
        .map(|x| {
            let w = lambert_w(o.branch, x)?;
            Ok(vec![label.into(), x.into(), w.into(), (w * w.exp() - x).into()])
        })
        .collect()
}
