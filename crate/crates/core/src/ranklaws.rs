//! Checks for the rank structure of ensembles produced with finite thermal
//! resources: the ensemble rank relation, the pure-state no-go, the full-rank
//! property of linearly dependent ensembles, and the orthogonal special case.

use serde::Serialize;

use crate::error::{check_dim, invalid, Result};
use crate::infotherm::{holevo, shannon_entropy, ProbVector, IDENTITY_TOL};
use crate::protocol::{encode, Ensemble, Register};
use crate::qmatrix::{
    dephase_register, haar_unitary_with, matrix_rank, numerical_rank, von_neumann_entropy, CMatrix, CVector,
    DensityMatrix, DEFAULT_RANK_TOL,
};
use crate::seeds::instance_rng;
use crate::thermal::{gibbs_state, Hamiltonian};

/// Orthogonality slack accepted by [`remark1_check`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Where an ensemble came from; decides how a failed inequality is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Produced by a unitary interaction on `ρ_R ⊗ ρ_S`.
    UnitaryProtocol,
    /// Supplied from outside; no law is claimed for it.
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearDependence {
    pub dependent: bool,
    pub rank: usize,
    /// Singular values of the stacked, flattened states (descending).
    pub singular_values: Vec<f64>,
    pub smallest_singular_value: f64,
}

/// Whether the states, flattened to vectors of length `d²`, span fewer than `n` dimensions.
pub fn linear_dependence(ensemble: &Ensemble, rel_tol: f64) -> LinearDependence {
    let n = ensemble.len();
    let d = ensemble.dim();
    let stacked = CMatrix::from_fn(n, d * d, |x, k| ensemble.state(x).matrix()[(k / d, k % d)]);
    let report = matrix_rank(&stacked, rel_tol);
    // rows beyond d² are zero singular values
    let smallest = if n > d * d { 0.0 } else { report.singular_values.last().copied().unwrap_or(0.0) };
    LinearDependence {
        dependent: report.value < n,
        rank: report.value,
        smallest_singular_value: smallest,
        singular_values: report.singular_values,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankLawReport {
    /// `rank(ρ_S) · rank(ρ_R)`.
    pub lhs: usize,
    /// `n · max_x rank(ρ_x)`.
    pub rhs: usize,
    pub holds: bool,
    pub register_rank: usize,
    pub system_rank: usize,
    pub per_state_ranks: Vec<usize>,
    pub linear_dependence: LinearDependence,
    pub origin: Origin,
}

impl RankLawReport {
    /// A failure only counts as a violation for ensembles of unitary origin.
    pub fn is_violation(&self) -> bool {
        !self.holds && self.origin == Origin::UnitaryProtocol
    }
}

pub fn lemma1_check(
    register: &DensityMatrix,
    system: &DensityMatrix,
    ensemble: &Ensemble,
    origin: Origin,
) -> Result<RankLawReport> {
    check_dim(system.dim(), ensemble.dim())?;
    let register_rank = numerical_rank(register, DEFAULT_RANK_TOL).value;
    let system_rank = numerical_rank(system, DEFAULT_RANK_TOL).value;
    let per_state_ranks: Vec<usize> =
        ensemble.items().iter().map(|(_, r)| numerical_rank(r, DEFAULT_RANK_TOL).value).collect();
    let lhs = register_rank * system_rank;
    let rhs = ensemble.len() * per_state_ranks.iter().copied().max().unwrap_or(0);
    Ok(RankLawReport {
        lhs,
        rhs,
        holds: lhs <= rhs,
        register_rank,
        system_rank,
        per_state_ranks,
        linear_dependence: linear_dependence(ensemble, DEFAULT_RANK_TOL),
        origin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DephasingRank {
    pub before: usize,
    pub after: usize,
}

/// Ranks of a joint state before and after dephasing the register.
pub fn dephasing_rank(joint: &DensityMatrix, dims: (usize, usize)) -> Result<DephasingRank> {
    let after = dephase_register(joint, dims)?;
    Ok(DephasingRank {
        before: numerical_rank(joint, DEFAULT_RANK_TOL).value,
        after: numerical_rank(&after, DEFAULT_RANK_TOL).value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoGoProbe {
    pub trials: usize,
    pub min_entropy: f64,
    pub min_rank: usize,
    pub max_purity: f64,
    /// No `ρ_x` reached purity `1 − 1e-9`.
    pub no_pure_states: bool,
    pub all_full_rank: bool,
}

/// Purity at or above `1 − PURITY_GAP` counts as pure.
pub const PURITY_GAP: f64 = 1e-9;

/// Random controlled-unitary protocols on `γ_β`: every letter gets an
/// independent Haar unitary, and the resulting states are searched for a pure one.
pub fn theorem1_nogo_probe(
    h: &Hamiltonian,
    n: usize,
    beta: f64,
    trials: usize,
    seed: u64,
) -> Result<NoGoProbe> {
    if n == 0 || trials == 0 {
        return Err(invalid("need at least one letter and one trial"));
    }
    let d_s = h.dim();
    let gamma = gibbs_state(h, beta)?;
    let register = Register::explicit(&vec![1.0 / n as f64; n], n)?;
    let mut probe = NoGoProbe {
        trials,
        min_entropy: f64::INFINITY,
        min_rank: usize::MAX,
        max_purity: 0.0,
        no_pure_states: true,
        all_full_rank: true,
    };
    for t in 0..trials {
        let mut rng = instance_rng(seed, t as u64);
        let unitaries: Vec<_> = (0..n).map(|_| haar_unitary_with(d_s, &mut rng)).collect();
        let enc = encode(&register, &gamma, &unitaries)?;
        for (_, rho) in enc.ensemble.items() {
            let purity = rho.purity();
            let rank = numerical_rank(rho, DEFAULT_RANK_TOL).value;
            probe.min_entropy = probe.min_entropy.min(von_neumann_entropy(rho));
            probe.min_rank = probe.min_rank.min(rank);
            probe.max_purity = probe.max_purity.max(purity);
            probe.no_pure_states &= purity < 1.0 - PURITY_GAP;
            probe.all_full_rank &= rank == d_s;
        }
    }
    Ok(probe)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Remark1Report {
    pub rank: usize,
    pub support: usize,
    pub dim: usize,
    pub holevo: f64,
    pub shannon: f64,
    pub holds: bool,
}

/// Orthogonal pure-state ensembles: `rank(ρ̃) = |supp p| ≤ d` and `χ = H(p)`.
pub fn remark1_check(p: &ProbVector, states: &[CVector]) -> Result<Remark1Report> {
    check_dim(p.len(), states.len())?;
    let d = states.first().map(|s| s.len()).ok_or_else(|| invalid("no states"))?;
    for (i, a) in states.iter().enumerate() {
        check_dim(d, a.len())?;
        for (j, b) in states.iter().enumerate() {
            let overlap = a.dotc(b);
            let target = if i == j { 1.0 } else { 0.0 };
            if (overlap.re - target).abs() > ORTHONORMAL_TOL || overlap.im.abs() > ORTHONORMAL_TOL {
                return Err(invalid(format!("states {i} and {j} are not orthonormal (overlap {overlap})")));
            }
        }
    }
    let items = p
        .as_slice()
        .iter()
        .zip(states)
        .map(|(&px, psi)| Ok((px, DensityMatrix::pure(psi)?)))
        .collect::<Result<Vec<_>>>()?;
    let ensemble = Ensemble::new(items)?;
    let rank = numerical_rank(&ensemble.average_state(), DEFAULT_RANK_TOL).value;
    let support = p.as_slice().iter().filter(|&&x| x > 0.0).count();
    let chi = holevo(&ensemble);
    let hx = shannon_entropy(p);
    Ok(Remark1Report {
        rank,
        support,
        dim: d,
        holevo: chi,
        shannon: hx,
        holds: rank == support && support <= d && (chi - hx).abs() <= IDENTITY_TOL,
    })
}
