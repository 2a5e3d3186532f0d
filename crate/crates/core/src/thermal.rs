//! Hamiltonians, Gibbs states, and coarse-graining of thermal populations into
//! message blocks.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::qmatrix::DensityMatrix;

/// A Hamiltonian stored in its eigenbasis, energies non-decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHamiltonian")]
pub struct Hamiltonian {
    energies: Vec<f64>,
}

#[derive(Deserialize)]
struct RawHamiltonian {
    energies: Vec<f64>,
}

impl TryFrom<RawHamiltonian> for Hamiltonian {
    type Error = Error;
    fn try_from(raw: RawHamiltonian) -> Result<Self> {
        Self::new(raw.energies)
    }
}

impl Hamiltonian {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(invalid("Hamiltonian needs at least one level"));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(invalid("energies must be finite"));
        }
        if energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("energies must be sorted in non-decreasing order"));
        }
        Ok(Self { energies })
    }

    /// Equally spaced levels `0, gap, 2·gap, …`.
    pub fn ladder(dim: usize, gap: f64) -> Result<Self> {
        Self::new((0..dim).map(|i| i as f64 * gap).collect())
    }

    /// Equally spaced levels spanning `[0, 1]` (a single level sits at 0).
    pub fn unit_window(dim: usize) -> Result<Self> {
        let gap = if dim > 1 { 1.0 / (dim - 1) as f64 } else { 0.0 };
        Self::ladder(dim, gap)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("bad Hamiltonian JSON: {e}")))
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// The lowest `k` levels as a Hamiltonian of their own.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.dim() {
            return Err(invalid(format!("cannot keep {k} of {} levels", self.dim())));
        }
        Self::new(self.energies[..k].to_vec())
    }

    pub fn mean_energy(&self, rho: &DensityMatrix) -> Result<f64> {
        crate::error::check_dim(self.dim(), rho.dim())?;
        Ok(rho.diagonal().iter().zip(&self.energies).map(|(p, e)| p * e).sum())
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() {
        return Err(Error::ThirdLaw(beta));
    }
    if beta < 0.0 {
        return Err(invalid(format!("inverse temperature must be >= 0, got {beta}")));
    }
    Ok(())
}

/// Normalized Boltzmann weights `exp(-β E_i) / Z`, shifted by the ground energy for stability.
pub fn boltzmann_weights(energies: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

pub fn partition_function(h: &Hamiltonian, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(h.energies.iter().map(|e| (-beta * e).exp()).sum())
}

pub fn gibbs_state(h: &Hamiltonian, beta: f64) -> Result<DensityMatrix> {
    DensityMatrix::from_diagonal(&boltzmann_weights(&h.energies, beta)?)
}

/// `H_S = H_0 ⊕ … ⊕ H_{n-1}` with equal block dimension `d_x = dim / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SubspacePartition {
    letters: usize,
    block_dim: usize,
}

impl SubspacePartition {
    pub fn new(dim: usize, letters: usize) -> Result<Self> {
        if letters == 0 || dim == 0 || !dim.is_multiple_of(letters) {
            return Err(Error::Indivisible { dim, letters });
        }
        Ok(Self { letters, block_dim: dim / letters })
    }

    pub fn letters(&self) -> usize {
        self.letters
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn block_dims(&self) -> Vec<usize> {
        vec![self.block_dim; self.letters]
    }

    pub fn dim(&self) -> usize {
        self.letters * self.block_dim
    }

    /// `i = x·d_x + l`.
    pub fn index_of(&self, x: usize, l: usize) -> usize {
        debug_assert!(x < self.letters && l < self.block_dim);
        x * self.block_dim + l
    }

    pub fn label_of(&self, i: usize) -> (usize, usize) {
        (i / self.block_dim, i % self.block_dim)
    }
}

/// Thermal populations `r_x^(l)` arranged by message block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockedThermalState {
    pub partition: SubspacePartition,
    /// Flattened `r_x^(l)` at position `x·d_x + l`.
    pub populations: Vec<f64>,
    /// `e_x^(l)` in the same order.
    pub level_energies: Vec<f64>,
    pub beta: f64,
    pub hamiltonian: Hamiltonian,
    pub copies: usize,
}

impl BlockedThermalState {
    pub fn population(&self, x: usize, l: usize) -> f64 {
        self.populations[self.partition.index_of(x, l)]
    }

    pub fn block(&self, x: usize) -> &[f64] {
        let d = self.partition.block_dim();
        &self.populations[x * d..(x + 1) * d]
    }

    /// `Σ_l r_x^(l)`.
    pub fn block_weight(&self, x: usize) -> f64 {
        self.block(x).iter().sum()
    }

    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        DensityMatrix::from_diagonal(&self.populations)
    }
}

pub fn coarse_grain(h: &Hamiltonian, beta: f64, n: usize) -> Result<BlockedThermalState> {
    let partition = SubspacePartition::new(h.dim(), n)?;
    Ok(BlockedThermalState {
        partition,
        populations: boltzmann_weights(&h.energies, beta)?,
        level_energies: h.energies.clone(),
        beta,
        hamiltonian: h.clone(),
        copies: 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MulticopyIndex {
    pub f: usize,
    pub x: usize,
    pub l: usize,
}

/// `f = Σ_μ k_μ d_S^{μ-1}` (first copy least significant), `x = ⌊f/d_x⌋`, `l = f mod d_x`.
pub fn multicopy_index(digits: &[usize], d_s: usize, d_x: usize) -> Result<MulticopyIndex> {
    if d_x == 0 {
        return Err(invalid("block dimension must be >= 1"));
    }
    let mut f = 0usize;
    let mut place = 1usize;
    for &k in digits {
        if k >= d_s {
            return Err(invalid(format!("digit {k} out of range for d_S = {d_s}")));
        }
        f += k * place;
        place *= d_s;
    }
    Ok(MulticopyIndex { f, x: f / d_x, l: f % d_x })
}

/// Digits `(k_1, …, k_N)` of `f` in base `d_s`, least significant first.
pub fn multicopy_digits(mut f: usize, d_s: usize, copies: usize) -> Vec<usize> {
    (0..copies)
        .map(|_| {
            let k = f % d_s;
            f /= d_s;
            k
        })
        .collect()
}

/// Blocks `γ_β^{⊗N}` through [`multicopy_index`].
pub fn multicopy_coarse_grain(
    h: &Hamiltonian,
    beta: f64,
    copies: usize,
    n: usize,
) -> Result<BlockedThermalState> {
    if copies == 0 {
        return Err(invalid("need at least one copy"));
    }
    let d_s = h.dim();
    let total = u32::try_from(copies)
        .ok()
        .and_then(|c| d_s.checked_pow(c))
        .ok_or_else(|| invalid("joint dimension overflows"))?;
    let partition = SubspacePartition::new(total, n)?;
    let single = boltzmann_weights(&h.energies, beta)?;
    let mut populations = vec![0.0; total];
    let mut level_energies = vec![0.0; total];
    for f in 0..total {
        let digits = multicopy_digits(f, d_s, copies);
        let idx = multicopy_index(&digits, d_s, partition.block_dim())?;
        let slot = partition.index_of(idx.x, idx.l);
        populations[slot] = digits.iter().map(|&k| single[k]).product();
        level_energies[slot] = digits.iter().map(|&k| h.energies[k]).sum();
    }
    Ok(BlockedThermalState { partition, populations, level_energies, beta, hamiltonian: h.clone(), copies })
}
