//! Classical and quantum information quantities, decoding bounds, and the
//! heat/entropy ledger of an encoding round. Everything is in bits; terms
//! weighted by `β` are converted from nats with a factor `1 / ln 2`.

use serde::Serialize;

use crate::discriminate::ConditionalDistribution;
use crate::error::{check_dim, invalid, Result};
use crate::protocol::Ensemble;
use crate::qmatrix::{relative_entropy, von_neumann_entropy, DensityMatrix};
use crate::thermal::{boltzmann_weights, Hamiltonian};

pub const PROB_VECTOR_TOL: f64 = 1e-10;
/// Slack allowed on every inequality link and ledger identity.
pub const IDENTITY_TOL: f64 = 1e-9;
/// `system_before` may differ entrywise from `γ_β` by this much.
pub const GIBBS_MATCH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() || entries.iter().any(|p| p.is_nan() || *p < 0.0) {
            return Err(invalid(format!("not a probability vector: {entries:?}")));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > PROB_VECTOR_TOL {
            return Err(invalid(format!("probabilities sum to {total}")));
        }
        Ok(Self(entries))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn plog2p(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

pub fn shannon_entropy(p: &ProbVector) -> f64 {
    p.0.iter().copied().map(plog2p).sum::<f64>().max(0.0)
}

pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("binary entropy needs p in [0, 1], got {p}")));
    }
    Ok(plog2p(p) + plog2p(1.0 - p))
}

/// `S(Σ p_x ρ_x) − Σ p_x S(ρ_x)`.
pub fn holevo(ensemble: &Ensemble) -> f64 {
    let avg = von_neumann_entropy(&ensemble.average_state());
    let each: f64 = ensemble.items().iter().map(|(p, r)| p * von_neumann_entropy(r)).sum();
    (avg - each).max(0.0)
}

/// Entropies of a classical channel driven by `px`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelEntropies {
    pub h_y: f64,
    pub h_y_given_x: f64,
    pub mutual_information: f64,
}

pub fn channel_entropies(px: &ProbVector, cond: &ConditionalDistribution) -> Result<ChannelEntropies> {
    check_dim(cond.n_in(), px.len())?;
    let py = cond.output_distribution(px.as_slice())?;
    let h_y: f64 = py.iter().copied().map(plog2p).sum();
    let h_y_given_x: f64 = (0..cond.n_in())
        .map(|x| px.0[x] * (0..cond.n_out()).map(|y| plog2p(cond.prob(y, x))).sum::<f64>())
        .sum();
    Ok(ChannelEntropies { h_y, h_y_given_x, mutual_information: (h_y - h_y_given_x).max(0.0) })
}

/// `I(X:Y) = H(Y) − H(Y|X)`.
pub fn mutual_information(px: &ProbVector, cond: &ConditionalDistribution) -> Result<f64> {
    Ok(channel_entropies(px, cond)?.mutual_information)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FanoFloor {
    /// `H(X) − H₂(C_max) − (1 − C_max) log₂(n − 1)`, possibly negative.
    pub raw: f64,
    pub clamped: f64,
}

pub fn fano_floor(hx: f64, c_max: f64, n: usize) -> Result<FanoFloor> {
    if !(c_max > 0.0 && c_max <= 1.0) {
        return Err(invalid(format!("C_max must lie in (0, 1], got {c_max}")));
    }
    if n < 2 {
        return Err(invalid("Fano floor needs at least two letters"));
    }
    let raw = hx - binary_entropy(c_max)? - (1.0 - c_max) * ((n - 1) as f64).log2();
    Ok(FanoFloor { raw, clamped: raw.max(0.0) })
}

/// `½ Σ |p(z) − q_z|`.
pub fn l1_distance(y: &ProbVector, x: &ProbVector) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    Ok(0.5 * y.0.iter().zip(&x.0).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Heat and entropy bookkeeping for one encoding round, all in bits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermoLedger {
    pub delta_s_system: f64,
    pub delta_s_register: f64,
    /// `β Tr[H(ρ̃_S − γ_β)] / ln 2`.
    pub heat_beta_q: f64,
    /// `D(ρ̃_S ‖ γ_β)`.
    pub rel_entropy_d: f64,
    pub holevo_chi: f64,
    /// `βΔF`, equal to `D(ρ̃_S ‖ γ_β)`.
    pub free_energy_beta_delta_f: f64,
    /// `|χ − ΔS_S|`.
    pub entropy_identity_residual: f64,
    /// `|χ − (βQ − D)|`.
    pub heat_identity_residual: f64,
}

impl ThermoLedger {
    pub fn identities_hold(&self, tol: f64) -> bool {
        self.entropy_identity_residual <= tol
            && self.heat_identity_residual <= tol
            && self.rel_entropy_d >= 0.0
            && self.holevo_chi <= self.heat_beta_q + tol
    }

    pub const CSV_HEADER: [&'static str; 8] = [
        "delta_s_system",
        "delta_s_register",
        "heat_beta_q",
        "rel_entropy_d",
        "holevo_chi",
        "free_energy_beta_delta_f",
        "entropy_identity_residual",
        "heat_identity_residual",
    ];

    pub fn csv_row(&self) -> [String; 8] {
        [
            self.delta_s_system,
            self.delta_s_register,
            self.heat_beta_q,
            self.rel_entropy_d,
            self.holevo_chi,
            self.free_energy_beta_delta_f,
            self.entropy_identity_residual,
            self.heat_identity_residual,
        ]
        .map(|v| format!("{v:.12e}"))
    }
}

pub fn thermo_ledger(
    system_before: &DensityMatrix,
    system_after: &DensityMatrix,
    register_before: &DensityMatrix,
    register_after: &DensityMatrix,
    h: &Hamiltonian,
    beta: f64,
    ensemble: &Ensemble,
) -> Result<ThermoLedger> {
    thermo_ledger_diagonal(
        system_before,
        system_after,
        register_before,
        register_after,
        h.energies(),
        beta,
        ensemble,
    )
}

/// [`thermo_ledger`] for a Hamiltonian given by its diagonal in the working
/// basis, in any order (multicopy systems relabel their levels).
pub fn thermo_ledger_diagonal(
    system_before: &DensityMatrix,
    system_after: &DensityMatrix,
    register_before: &DensityMatrix,
    register_after: &DensityMatrix,
    energies: &[f64],
    beta: f64,
    ensemble: &Ensemble,
) -> Result<ThermoLedger> {
    let gamma = DensityMatrix::from_diagonal(&boltzmann_weights(energies, beta)?)?;
    check_dim(gamma.dim(), system_before.dim())?;
    check_dim(gamma.dim(), system_after.dim())?;
    let mismatch = system_before.max_abs_diff(&gamma);
    if mismatch > GIBBS_MATCH_TOL {
        return Err(invalid(format!(
            "the ledger assumes the system starts thermal; deviation from the Gibbs state is {mismatch:e}"
        )));
    }
    let s_before = von_neumann_entropy(system_before);
    let s_after = von_neumann_entropy(system_after);
    let delta_s_system = s_after - s_before;
    let delta_s_register = von_neumann_entropy(register_after) - von_neumann_entropy(register_before);
    let mean_energy =
        |rho: &DensityMatrix| -> f64 { rho.diagonal().iter().zip(energies).map(|(p, e)| p * e).sum() };
    let energy_change = mean_energy(system_after) - mean_energy(system_before);
    let heat_beta_q = beta * energy_change / std::f64::consts::LN_2;
    let d = relative_entropy(system_after, &gamma)?;
    let chi = holevo(ensemble);
    Ok(ThermoLedger {
        delta_s_system,
        delta_s_register,
        heat_beta_q,
        rel_entropy_d: d,
        holevo_chi: chi,
        free_energy_beta_delta_f: d,
        entropy_identity_residual: (chi - delta_s_system).abs(),
        heat_identity_residual: (chi - (heat_beta_q - d)).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainCheck {
    pub holds: bool,
    /// `H(X) − χ`, `χ − I(X:Y)`, `I(X:Y) − floor`.
    pub slacks: [f64; 3],
}

/// `H(X) ≥ χ ≥ I(X:Y) ≥ floor`, each link within [`IDENTITY_TOL`].
pub fn chain_inequality(hx: f64, chi: f64, ixy: f64, floor: f64) -> ChainCheck {
    let slacks = [hx - chi, chi - ixy, ixy - floor];
    ChainCheck { holds: slacks.iter().all(|s| *s >= -IDENTITY_TOL), slacks }
}
