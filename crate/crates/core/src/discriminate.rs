//! Decoding: block projective measurements, conditional statistics, success
//! probability, `C_max`, the Barnett–Croke optimality certificate, and two
//! independent discrimination oracles.

use itertools::Itertools;
use rand::distr::{weighted::WeightedIndex, Distribution};
use serde::Serialize;

use crate::error::{check_dim, invalid, Error, Result};
use crate::protocol::Ensemble;
use crate::qmatrix::{eigvalsh, max_abs_diff, trace_norm_hermitian, CMatrix, DensityMatrix, C64};
use crate::thermal::SubspacePartition;

pub const POVM_TOL: f64 = 1e-10;
pub const DEFAULT_CERTIFICATE_TOL: f64 = 1e-9;
/// Largest alphabet the permutation oracle will enumerate.
pub const MAX_PERMUTATION_LETTERS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<CMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let d = elements.first().ok_or_else(|| invalid("empty POVM"))?.nrows();
        let mut total = CMatrix::zeros(d, d);
        for (i, e) in elements.iter().enumerate() {
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: e.nrows() });
            }
            if max_abs_diff(e, &e.adjoint()) > POVM_TOL {
                return Err(invalid(format!("POVM element {i} is not Hermitian")));
            }
            let min = eigvalsh(e).last().copied().unwrap_or(0.0);
            if min < -POVM_TOL {
                return Err(invalid(format!("POVM element {i} has eigenvalue {min:e}")));
            }
            total += e;
        }
        let dev = max_abs_diff(&total, &CMatrix::identity(d, d));
        if dev > POVM_TOL {
            return Err(invalid(format!("POVM elements sum to identity only within {dev:e}")));
        }
        Ok(Self { elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// Element `x` of the result is element `labels[x]` of `self`.
    pub fn relabeled(&self, labels: &[usize]) -> Result<Self> {
        if labels.len() != self.len()
            || !labels.iter().all_unique()
            || labels.iter().any(|&l| l >= self.len())
        {
            return Err(invalid(format!("{labels:?} is not a relabeling of {} outcomes", self.len())));
        }
        Ok(Self { elements: labels.iter().map(|&l| self.elements[l].clone()).collect() })
    }
}

/// `Π_x = Σ_l |π_x^(l)⟩⟨π_x^(l)|` over the blocks of `partition`.
pub fn projective_povm(partition: &SubspacePartition) -> Povm {
    let d = partition.dim();
    let elements = (0..partition.letters())
        .map(|x| {
            CMatrix::from_fn(d, d, |i, j| {
                if i == j && partition.label_of(i).0 == x {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
        })
        .collect();
    Povm { elements }
}

/// `p(y|x)`, stored as `table[y][x]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalDistribution {
    table: Vec<Vec<f64>>,
}

impl ConditionalDistribution {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        let n_in = table.first().map(Vec::len).ok_or_else(|| invalid("empty channel"))?;
        if table.iter().any(|row| row.len() != n_in) {
            return Err(invalid("ragged conditional table"));
        }
        if table.iter().flatten().any(|&p| !(-POVM_TOL..=1.0 + POVM_TOL).contains(&p)) {
            return Err(invalid("conditional probabilities must lie in [0, 1]"));
        }
        for x in 0..n_in {
            let s: f64 = table.iter().map(|row| row[x]).sum();
            if (s - 1.0).abs() > POVM_TOL {
                return Err(invalid(format!("column {x} sums to {s}")));
            }
        }
        Ok(Self { table })
    }

    pub fn n_in(&self) -> usize {
        self.table[0].len()
    }

    pub fn n_out(&self) -> usize {
        self.table.len()
    }

    pub fn prob(&self, y: usize, x: usize) -> f64 {
        self.table[y][x]
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    /// `p(y) = Σ_x p_x p(y|x)`.
    pub fn output_distribution(&self, px: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_in(), px.len())?;
        Ok(self.table.iter().map(|row| row.iter().zip(px).map(|(c, p)| c * p).sum()).collect())
    }

    /// Largest deviation of a row sum from one; zero for a doubly stochastic square table.
    pub fn row_sum_defect(&self) -> f64 {
        if self.n_out() != self.n_in() {
            return f64::INFINITY;
        }
        self.table.iter().map(|row| (row.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Largest deviation from a table depending only on `(y - x) mod n`.
    pub fn circulant_defect(&self) -> f64 {
        let n = self.n_in();
        if self.n_out() != n {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for y in 0..n {
            for x in 0..n {
                let reference = self.table[(y + n - x) % n][0];
                worst = worst.max((self.table[y][x] - reference).abs());
            }
        }
        worst
    }

    /// Draws the receiver's outcome for a transmitted letter.
    pub fn sample<R: rand::Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        let weights: Vec<f64> = self.table.iter().map(|row| row[x].max(0.0)).collect();
        WeightedIndex::new(&weights).expect("columns are normalized").sample(rng)
    }
}

fn born(op: &CMatrix, rho: &DensityMatrix) -> f64 {
    // Tr(P ρ) for Hermitian P and ρ: Σ_ij P_ij ρ_ji
    let mut acc = 0.0;
    let m = rho.matrix();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            acc += (op[(i, j)] * m[(j, i)]).re;
        }
    }
    acc
}

pub fn conditional_distribution(ensemble: &Ensemble, povm: &Povm) -> Result<ConditionalDistribution> {
    check_dim(ensemble.dim(), povm.dim())?;
    let table = povm
        .elements
        .iter()
        .map(|p| ensemble.items().iter().map(|(_, rho)| born(p, rho)).collect())
        .collect();
    ConditionalDistribution::new(table)
}

/// `Σ_x p_x Tr(P_x ρ_x)`.
pub fn success_probability(ensemble: &Ensemble, povm: &Povm) -> Result<f64> {
    check_dim(ensemble.dim(), povm.dim())?;
    check_dim(ensemble.len(), povm.len())?;
    Ok(ensemble.items().iter().zip(&povm.elements).map(|((p, rho), e)| p * born(e, rho)).sum())
}

/// Sum of the largest `dim / d_r` eigenvalues of the system state.
pub fn c_max(system: &DensityMatrix, d_r: usize) -> Result<f64> {
    let d = system.dim();
    if d_r == 0 || !d.is_multiple_of(d_r) {
        return Err(Error::Indivisible { dim: d, letters: d_r });
    }
    Ok(system.eigenvalues().iter().take(d / d_r).sum::<f64>().min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub pass: bool,
    /// `max_{x,y} ‖P_x (p_x ρ_x − p_y ρ_y) P_y‖_F`.
    pub max_cross_residual: f64,
    /// `min_y λ_min(Herm(Σ_x p_x ρ_x P_x − p_y ρ_y))`.
    pub min_lagrange_eigenvalue: f64,
    /// Anti-Hermitian part of `Σ_x p_x ρ_x P_x`, dropped before the eigenvalue test.
    pub lagrange_skew: f64,
}

pub fn barnett_croke_certificate(ensemble: &Ensemble, povm: &Povm, tol: f64) -> Result<Certificate> {
    check_dim(ensemble.dim(), povm.dim())?;
    check_dim(ensemble.len(), povm.len())?;
    let d = ensemble.dim();
    let weighted: Vec<CMatrix> = ensemble.items().iter().map(|(p, r)| r.matrix().scale(*p)).collect();
    let p = &povm.elements;

    let mut cross: f64 = 0.0;
    for x in 0..weighted.len() {
        for y in 0..weighted.len() {
            let term = &p[x] * (&weighted[x] - &weighted[y]) * &p[y];
            cross = cross.max(term.norm());
        }
    }

    let mut lagrange = CMatrix::zeros(d, d);
    for (w, e) in weighted.iter().zip(p) {
        lagrange += w * e;
    }
    let skew = max_abs_diff(&lagrange, &lagrange.adjoint());
    let herm = (&lagrange + lagrange.adjoint()).scale(0.5);
    let min_eig = weighted
        .iter()
        .map(|w| eigvalsh(&(&herm - w)).last().copied().unwrap_or(0.0))
        .fold(f64::INFINITY, f64::min);

    Ok(Certificate {
        pass: cross <= tol && min_eig >= -tol,
        max_cross_residual: cross,
        min_lagrange_eigenvalue: min_eig,
        lagrange_skew: skew,
    })
}

/// Optimal two-state success probability `(1 + ‖p₀ρ₀ − p₁ρ₁‖₁) / 2`.
pub fn helstrom_oracle(p0: f64, rho0: &DensityMatrix, p1: f64, rho1: &DensityMatrix) -> Result<f64> {
    check_dim(rho0.dim(), rho1.dim())?;
    if (p0 + p1 - 1.0).abs() > 1e-12 || p0 < 0.0 || p1 < 0.0 {
        return Err(invalid(format!("priors {p0}, {p1} are not a distribution")));
    }
    let diff = rho0.matrix().scale(p0) - rho1.matrix().scale(p1);
    Ok(0.5 * (1.0 + trace_norm_hermitian(&diff)))
}

/// Best success probability over every assignment of POVM outcomes to letters.
pub fn exhaustive_permutation_oracle(ensemble: &Ensemble, povm: &Povm) -> Result<f64> {
    let n = ensemble.len();
    check_dim(n, povm.len())?;
    check_dim(ensemble.dim(), povm.dim())?;
    if n > MAX_PERMUTATION_LETTERS {
        return Err(invalid(format!(
            "{n} letters exceed the enumeration limit of {MAX_PERMUTATION_LETTERS}"
        )));
    }
    // score[x][k] = p_x Tr(P_k ρ_x)
    let score: Vec<Vec<f64>> = ensemble
        .items()
        .iter()
        .map(|(p, rho)| povm.elements.iter().map(|e| p * born(e, rho)).collect())
        .collect();
    Ok((0..n)
        .permutations(n)
        .map(|sigma| sigma.iter().enumerate().map(|(x, &k)| score[x][k]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Exact optimum `Σ_i max_x p_x ⟨i|ρ_x|i⟩` when every state is diagonal in the
/// computational basis; `None` otherwise.
pub fn diagonal_ensemble_optimum(ensemble: &Ensemble) -> Option<f64> {
    let d = ensemble.dim();
    for (_, rho) in ensemble.items() {
        let m = rho.matrix();
        if (0..d).any(|i| (0..d).any(|j| i != j && m[(i, j)].norm() > 0.0)) {
            return None;
        }
    }
    let diags: Vec<(f64, Vec<f64>)> = ensemble.items().iter().map(|(p, r)| (*p, r.diagonal())).collect();
    Some((0..d).map(|i| diags.iter().map(|(p, diag)| p * diag[i]).fold(f64::NEG_INFINITY, f64::max)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{encode, shift_family, Register};
    use crate::qmatrix::{haar_unitary, CVector};
    use crate::thermal::{coarse_grain, gibbs_state, Hamiltonian};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    const R0: f64 = 0.731_058_578_630_004_9;

    fn protocol(dim: usize, n: usize, beta: f64, probs: &[f64]) -> (Ensemble, Povm, f64) {
        let h = Hamiltonian::ladder(dim, 1.0).unwrap();
        let blocked = coarse_grain(&h, beta, n).unwrap();
        let sys = gibbs_state(&h, beta).unwrap();
        let reg = Register::explicit(probs, n).unwrap();
        let enc = encode(&reg, &sys, &shift_family(&blocked.partition)).unwrap();
        (enc.ensemble, projective_povm(&blocked.partition), blocked.block_weight(0))
    }

    fn orthogonal_pure(d: usize, probs: &[f64]) -> (Ensemble, Povm) {
        let u = haar_unitary(d, 17);
        let items = probs
            .iter()
            .enumerate()
            .map(|(x, &p)| {
                let col = CVector::from_iterator(d, u.matrix().column(x).iter().copied());
                (p, DensityMatrix::pure(&col).unwrap())
            })
            .collect::<Vec<_>>();
        let povm = Povm::new(items.iter().map(|(_, r)| r.matrix().clone()).collect()).unwrap();
        (Ensemble::new(items).unwrap(), povm)
    }

    #[test]
    fn projective_povm_structure() {
        let part = SubspacePartition::new(6, 3).unwrap();
        let povm = projective_povm(&part);
        assert!(Povm::new(povm.elements().to_vec()).is_ok());
        for x in 0..3 {
            for y in 0..3 {
                let prod = &povm.elements()[x] * &povm.elements()[y];
                let expected = if x == y { povm.elements()[x].clone() } else { CMatrix::zeros(6, 6) };
                assert_eq!(prod, expected);
            }
        }
        let finest = projective_povm(&SubspacePartition::new(3, 3).unwrap());
        assert!(finest.elements().iter().all(|e| e.trace().re == 1.0));
    }

    #[test]
    fn povm_validation() {
        let half = CMatrix::identity(2, 2).scale(0.5);
        assert!(Povm::new(vec![half.clone(), half.clone()]).is_ok());
        assert!(Povm::new(vec![half.clone()]).is_err());
        assert!(
            Povm::new(vec![CMatrix::identity(2, 2).scale(1.5), CMatrix::identity(2, 2).scale(-0.5)]).is_err()
        );
        let p = Povm::new(vec![half.clone(), half]).unwrap();
        assert!(p.relabeled(&[0, 0]).is_err());
    }

    #[test]
    fn perfect_channel_and_perfect_discrimination() {
        let (ens, povm) = orthogonal_pure(3, &[0.2, 0.3, 0.5]);
        let cond = conditional_distribution(&ens, &povm).unwrap();
        for y in 0..3 {
            for x in 0..3 {
                assert_abs_diff_eq!(cond.prob(y, x), if x == y { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(success_probability(&ens, &povm).unwrap(), 1.0, epsilon = 1e-12);
        let cert = barnett_croke_certificate(&ens, &povm, DEFAULT_CERTIFICATE_TOL).unwrap();
        assert!(cert.pass, "{cert:?}");
    }

    #[test]
    fn identical_states_give_no_information() {
        let rho = gibbs_state(&Hamiltonian::ladder(2, 1.0).unwrap(), 1.0).unwrap();
        let ens = Ensemble::new(vec![(0.3, rho.clone()), (0.7, rho)]).unwrap();
        let povm = projective_povm(&SubspacePartition::new(2, 2).unwrap());
        let best = exhaustive_permutation_oracle(&ens, &povm).unwrap();
        assert!(success_probability(&ens, &povm).unwrap() <= best + 1e-15);
        let trivial = Povm::new(vec![CMatrix::zeros(2, 2), CMatrix::identity(2, 2)]).unwrap();
        assert_abs_diff_eq!(exhaustive_permutation_oracle(&ens, &trivial).unwrap(), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(
            helstrom_oracle(0.3, ens.state(0), 0.7, ens.state(1)).unwrap(),
            0.7,
            epsilon = 1e-14
        );
    }

    #[test]
    fn protocol_statistics_at_infinite_temperature() {
        let (ens, povm, _) = protocol(4, 4, 0.0, &[0.1, 0.2, 0.3, 0.4]);
        let cond = conditional_distribution(&ens, &povm).unwrap();
        assert!(cond.table().iter().flatten().all(|&p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn protocol_success_equals_c_max() {
        let (ens, povm, block0) = protocol(6, 3, 1.3, &[0.5, 0.2, 0.3]);
        let cond = conditional_distribution(&ens, &povm).unwrap();
        for x in 0..3 {
            assert_abs_diff_eq!(cond.prob(x, x), block0, epsilon = 1e-15);
        }
        assert!(cond.circulant_defect() < 1e-15);
        assert!(cond.row_sum_defect() < 1e-12);
        let cm = c_max(&ens.state(0).clone(), 3).unwrap();
        assert_abs_diff_eq!(success_probability(&ens, &povm).unwrap(), cm, epsilon = 1e-12);
    }

    #[test]
    fn c_max_examples() {
        assert_abs_diff_eq!(c_max(&DensityMatrix::maximally_mixed(4), 2).unwrap(), 0.5, epsilon = 1e-15);
        let g = gibbs_state(&Hamiltonian::ladder(2, 1.0).unwrap(), 1.0).unwrap();
        assert_abs_diff_eq!(c_max(&g, 2).unwrap(), 0.731_059, epsilon = 5e-7);
        assert_abs_diff_eq!(c_max(&g, 1).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(c_max(&g, 3), Err(Error::Indivisible { .. })));
    }

    #[test]
    fn uniform_priors_are_certified_but_skewed_ones_need_not_be() {
        for (d, n) in [(4, 4), (6, 6), (8, 4), (8, 8)] {
            let (ens, povm, block0) = protocol(d, n, 1.0, &vec![1.0 / n as f64; n]);
            assert!(barnett_croke_certificate(&ens, &povm, DEFAULT_CERTIFICATE_TOL).unwrap().pass);
            assert_abs_diff_eq!(diagonal_ensemble_optimum(&ens).unwrap(), block0, epsilon = 1e-12);
        }
        let (ens, povm, block0) = protocol(4, 4, 1.0, &[0.7, 0.1, 0.1, 0.1]);
        assert!(!barnett_croke_certificate(&ens, &povm, DEFAULT_CERTIFICATE_TOL).unwrap().pass);
        assert!(diagonal_ensemble_optimum(&ens).unwrap() > block0 + 1e-3);
    }

    #[test]
    fn certificate_accepts_protocol_and_rejects_mislabeling() {
        let (ens, povm, _) = protocol(2, 2, 1.0, &[0.5, 0.5]);
        assert!(barnett_croke_certificate(&ens, &povm, DEFAULT_CERTIFICATE_TOL).unwrap().pass);
        let swapped = povm.relabeled(&[1, 0]).unwrap();
        let cert = barnett_croke_certificate(&ens, &swapped, DEFAULT_CERTIFICATE_TOL).unwrap();
        assert!(!cert.pass);
        // Σ_x p_x ρ_x P_{σ(x)} − p_y ρ_y has eigenvalue (1−R0)/2 − R0/2 on level 0
        assert_abs_diff_eq!(cert.min_lagrange_eigenvalue, 0.5 * (1.0 - R0) - 0.5 * R0, epsilon = 1e-12);
    }

    #[test]
    fn helstrom_examples() {
        let (ens, _, _) = protocol(2, 2, 1.0, &[0.5, 0.5]);
        let h = helstrom_oracle(0.5, ens.state(0), 0.5, ens.state(1)).unwrap();
        assert_abs_diff_eq!(h, R0, epsilon = 1e-12);
        let (ortho, _) = orthogonal_pure(2, &[0.5, 0.5]);
        assert_abs_diff_eq!(
            helstrom_oracle(0.5, ortho.state(0), 0.5, ortho.state(1)).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert!(helstrom_oracle(0.5, ortho.state(0), 0.6, ortho.state(1)).is_err());
    }

    #[test]
    fn permutation_oracle_cases() {
        let (ens, povm, _) = protocol(4, 4, 0.8, &[0.25; 4]);
        let best = exhaustive_permutation_oracle(&ens, &povm).unwrap();
        assert_abs_diff_eq!(best, success_probability(&ens, &povm).unwrap(), epsilon = 1e-14);
        let single = Ensemble::new(vec![(1.0, DensityMatrix::maximally_mixed(2))]).unwrap();
        let whole = Povm::new(vec![CMatrix::identity(2, 2)]).unwrap();
        assert_abs_diff_eq!(exhaustive_permutation_oracle(&single, &whole).unwrap(), 1.0, epsilon = 1e-15);
        let (big, big_povm, _) = protocol(9, 9, 1.0, &[1.0 / 9.0; 9]);
        assert!(exhaustive_permutation_oracle(&big, &big_povm).is_err());
    }

    #[test]
    fn diagonal_optimum_matches_helstrom_for_commuting_pair() {
        let (ens, _, _) = protocol(4, 2, 0.9, &[0.7, 0.3]);
        let exact = diagonal_ensemble_optimum(&ens).unwrap();
        let h = helstrom_oracle(0.7, ens.state(0), 0.3, ens.state(1)).unwrap();
        assert_abs_diff_eq!(exact, h, epsilon = 1e-12);
        let rotated = ens.state(0).evolve(&haar_unitary(4, 1)).unwrap();
        assert!(diagonal_ensemble_optimum(&Ensemble::new(vec![(1.0, rotated)]).unwrap()).is_none());
    }

    #[test]
    fn sampled_outcomes_follow_the_channel() {
        let (ens, povm, block0) = protocol(2, 2, 1.0, &[0.5, 0.5]);
        let cond = conditional_distribution(&ens, &povm).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let trials = 20_000;
        let hits = (0..trials).filter(|_| cond.sample(1, &mut rng) == 1).count();
        assert!((hits as f64 / trials as f64 - block0).abs() < 0.02);
    }
}
