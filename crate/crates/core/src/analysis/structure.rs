use rayon::prelude::*;

use crate::eigen::{eig_all, SpectrumBlock};
use crate::models::{build_hamiltonian, Block, ModelSpec};

use super::{AnalysisError, Result};

/// Squared eigenvector amplitudes over the occupancy basis.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionMap {
    pub n_particles: u32,
    pub occupancies: Vec<u32>,
    pub energies: Vec<f64>,
    /// `probabilities[k][i]` is the weight of level `k` on `occupancies[i]`.
    pub probabilities: Vec<Vec<f64>>,
}

pub fn wavefunction_map(spec: &ModelSpec) -> Result<WavefunctionMap> {
    let block = SpectrumBlock::solve(spec, true)?;
    let vectors = block.eigenvectors.expect("vectors were requested");
    let probabilities = vectors
        .into_iter()
        .map(|z| {
            let p: Vec<f64> = z.iter().map(|a| a * a).collect();
            let total: f64 = p.iter().sum();
            p.into_iter().map(|x| x / total).collect()
        })
        .collect();
    Ok(WavefunctionMap {
        n_particles: spec.n_particles,
        occupancies: block.basis.occupancies,
        energies: block.eigenvalues,
        probabilities,
    })
}

/// Per-level `max |P(N_b) - P(N - N_b)|`; occupancies whose mirror image is
/// outside the basis count with weight zero there.
pub fn mirror_defect(map: &WavefunctionMap) -> Vec<f64> {
    let n = map.n_particles;
    let index = |o: u32| map.occupancies.binary_search(&o).ok();
    map.probabilities
        .iter()
        .map(|row| {
            map.occupancies
                .iter()
                .enumerate()
                .map(|(i, &o)| {
                    let mirror = n.checked_sub(o).and_then(index).map_or(0.0, |j| row[j]);
                    (row[i] - mirror).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Levels of several blocks whose energies chain together within the
/// cluster width.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplet {
    pub mean_energy: f64,
    pub spread: f64,
    /// `(block index, level index)` of each member, ascending in energy.
    pub members: Vec<(usize, usize)>,
}

impl Multiplet {
    /// Distinct block indices, ascending.
    pub fn blocks(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.members.iter().map(|m| m.0).collect();
        b.sort_unstable();
        b.dedup();
        b
    }

    pub fn below_barrier(&self) -> bool {
        self.mean_energy < 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyTable {
    pub blocks: Vec<Block>,
    pub width: f64,
    pub multiplets: Vec<Multiplet>,
}

/// Relative cluster width used when none is given.
pub const DEFAULT_CLUSTER_FRACTION: f64 = 1e-3;

/// Merges the spectra of `blocks` and groups levels into multiplets.
/// `width` defaults to `1e-3` of the merged spectral span.
pub fn degeneracy_scan(template: &ModelSpec, blocks: &[Block], width: Option<f64>) -> Result<DegeneracyTable> {
    if blocks.is_empty() {
        return Err(AnalysisError::InvalidGrid("no blocks given".into()));
    }
    let spectra = blocks
        .par_iter()
        .map(|&b| -> Result<Vec<f64>> { Ok(eig_all(&build_hamiltonian(&template.with_block(b))?)?) })
        .collect::<Result<Vec<_>>>()?;
    let mut levels: Vec<(f64, usize, usize)> = spectra
        .iter()
        .enumerate()
        .flat_map(|(b, s)| s.iter().enumerate().map(move |(k, &e)| (e, b, k)))
        .collect();
    levels.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let span = levels[levels.len() - 1].0 - levels[0].0;
    let width = width.unwrap_or(DEFAULT_CLUSTER_FRACTION * span);
    let mut multiplets = Vec::new();
    let mut start = 0;
    for i in 1..=levels.len() {
        if i == levels.len() || levels[i].0 - levels[i - 1].0 > width {
            let group = &levels[start..i];
            let mean = group.iter().map(|l| l.0).sum::<f64>() / group.len() as f64;
            multiplets.push(Multiplet {
                mean_energy: mean,
                spread: group[group.len() - 1].0 - group[0].0,
                members: group.iter().map(|l| (l.1, l.2)).collect(),
            });
            start = i;
        }
    }
    Ok(DegeneracyTable { blocks: blocks.to_vec(), width, multiplets })
}
