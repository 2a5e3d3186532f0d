//! Encoding pipeline: register preparation, block-shift unitaries, the
//! controlled interaction `Σ_x |x⟩⟨x| ⊗ U_x`, and the induced ensemble.

use rayon::prelude::*;

use crate::error::{check_dim, invalid, Result};
use crate::qmatrix::{CMatrix, DensityMatrix, Tensor, Unitary};
use crate::thermal::{BlockedThermalState, SubspacePartition};

/// Probability mass allowed on register letters that carry no message.
pub const SURPLUS_MASS_TOL: f64 = 1e-12;
pub const PROBABILITY_TOL: f64 = 1e-12;

/// A register whose computational-basis diagonal carries the message distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Register {
    state: DensityMatrix,
    probabilities: Vec<f64>,
}

impl Register {
    /// Diagonal register `Σ p_x |x⟩⟨x|` of dimension `d_r`, zero-padded past `probs.len()`.
    pub fn explicit(probs: &[f64], d_r: usize) -> Result<Self> {
        if probs.len() > d_r {
            return Err(invalid(format!(
                "{} probabilities do not fit a {d_r}-dimensional register",
                probs.len()
            )));
        }
        check_probabilities(probs)?;
        let mut diag = probs.to_vec();
        diag.resize(d_r, 0.0);
        Ok(Self::from_state(DensityMatrix::from_diagonal(&diag)?))
    }

    pub fn from_state(state: DensityMatrix) -> Self {
        let probabilities = state.diagonal();
        Self { state, probabilities }
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }
}

fn check_probabilities(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(0.0..=1.0 + PROBABILITY_TOL).contains(&x)) {
        return Err(invalid(format!("probabilities must lie in [0, 1]: {p:?}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PROBABILITY_TOL {
        return Err(invalid(format!("probabilities sum to {total}, expected 1")));
    }
    Ok(())
}

/// `ρ_R = U_R γ U_R†`; the message distribution is read off its diagonal.
pub fn prepare_register(gamma: &DensityMatrix, u_r: &Unitary) -> Result<Register> {
    Ok(Register::from_state(gamma.evolve(u_r)?))
}

/// Level-preserving cyclic block shift: `|π_y^(l)⟩ ↦ |π_{(y+x) mod n}^(l)⟩`.
pub fn shift_unitary(x: usize, partition: &SubspacePartition) -> Unitary {
    let n = partition.letters();
    let perm: Vec<usize> = (0..partition.dim())
        .map(|i| {
            let (y, l) = partition.label_of(i);
            partition.index_of((y + x) % n, l)
        })
        .collect();
    Unitary::permutation(&perm).expect("block shift is a permutation")
}

/// The shift family `U_0, …, U_{n-1}`.
pub fn shift_family(partition: &SubspacePartition) -> Vec<Unitary> {
    (0..partition.letters()).map(|x| shift_unitary(x, partition)).collect()
}

/// Block-diagonal `Σ_x |x⟩⟨x| ⊗ U_x` on a `d_r`-dimensional register; letters past
/// `unitaries.len()` act as the identity.
pub fn controlled_unitary(unitaries: &[Unitary], d_r: usize) -> Result<Unitary> {
    let first = unitaries.first().ok_or_else(|| invalid("need at least one system unitary"))?;
    if unitaries.len() > d_r {
        return Err(invalid(format!("{} letters exceed the register dimension {d_r}", unitaries.len())));
    }
    let d_s = first.dim();
    for u in unitaries {
        check_dim(d_s, u.dim())?;
    }
    let mut m = CMatrix::zeros(d_r * d_s, d_r * d_s);
    for x in 0..d_r {
        let block = match unitaries.get(x) {
            Some(u) => u.matrix().clone(),
            None => CMatrix::identity(d_s, d_s),
        };
        m.view_mut((x * d_s, x * d_s), (d_s, d_s)).copy_from(&block);
    }
    Unitary::new(m)
}

/// The list `{(p_x, ρ_x)}` carrying the message.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    items: Vec<(f64, DensityMatrix)>,
}

impl Ensemble {
    pub fn new(items: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        let first = items.first().ok_or_else(|| invalid("empty ensemble"))?;
        let d = first.1.dim();
        for (_, rho) in &items {
            check_dim(d, rho.dim())?;
        }
        let priors: Vec<f64> = items.iter().map(|(p, _)| *p).collect();
        check_probabilities(&priors)?;
        Ok(Self { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.items[0].1.dim()
    }

    pub fn items(&self) -> &[(f64, DensityMatrix)] {
        &self.items
    }

    pub fn priors(&self) -> Vec<f64> {
        self.items.iter().map(|(p, _)| *p).collect()
    }

    pub fn state(&self, x: usize) -> &DensityMatrix {
        &self.items[x].1
    }

    /// `ρ̃_S = Σ_x p_x ρ_x`.
    pub fn average_state(&self) -> DensityMatrix {
        DensityMatrix::mixture(self.items.iter().map(|(p, r)| (*p, r)))
            .expect("mixture of a validated ensemble")
    }
}

/// Output of [`encode`].
#[derive(Debug, Clone)]
pub struct Encoding {
    /// `U (ρ_R ⊗ ρ_S) U†`, coherences included.
    pub joint: DensityMatrix,
    pub ensemble: Ensemble,
    /// `(d_R, d_S)`.
    pub dims: (usize, usize),
}

/// Runs the controlled interaction on `ρ_R ⊗ ρ_S`.
///
/// The ensemble holds one item per system unitary. When the register carries
/// mass above [`SURPLUS_MASS_TOL`] on letters past the last unitary, those
/// letters are kept as additional items with `ρ_x = ρ_S`.
pub fn encode(register: &Register, system: &DensityMatrix, unitaries: &[Unitary]) -> Result<Encoding> {
    let d_r = register.dim();
    let d_s = system.dim();
    let cu = controlled_unitary(unitaries, d_r)?;
    check_dim(d_s, unitaries[0].dim())?;
    let joint = register.state().tensor(system).evolve(&cu)?;

    let probs = register.probabilities();
    let n = unitaries.len();
    let surplus: f64 = probs[n..].iter().sum();
    let letters = if surplus <= SURPLUS_MASS_TOL { n } else { d_r };
    let norm: f64 = probs[..letters].iter().sum();

    let items = (0..letters)
        .into_par_iter()
        .map(|x| {
            let rho = match unitaries.get(x) {
                Some(u) => system.evolve(u)?,
                None => system.clone(),
            };
            Ok((probs[x] / norm, rho))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Encoding { joint, ensemble: Ensemble::new(items)?, dims: (d_r, d_s) })
}

/// `Tr(Π_z ρ_x)` for every pair, indexed `[z][x]`, with `Π_z` the block projectors.
pub fn overlap_table(ensemble: &Ensemble, partition: &SubspacePartition) -> Result<Vec<Vec<f64>>> {
    check_dim(partition.dim(), ensemble.dim())?;
    let diags: Vec<Vec<f64>> = ensemble.items().iter().map(|(_, r)| r.diagonal()).collect();
    let d = partition.block_dim();
    Ok((0..partition.letters())
        .map(|z| diags.iter().map(|diag| diag[z * d..(z + 1) * d].iter().sum()).collect())
        .collect())
}

/// Closed form of [`overlap_table`] for the shift protocol: `Σ_l r_{(z-x) mod n}^(l)`.
pub fn predicted_overlap_table(blocked: &BlockedThermalState) -> Vec<Vec<f64>> {
    let n = blocked.partition.letters();
    (0..n).map(|z| (0..n).map(|x| blocked.block_weight((z + n - x) % n)).collect()).collect()
}
