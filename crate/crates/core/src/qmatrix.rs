//! Complex-matrix and quantum-state primitives.
//!
//! Every state in the simulator is a [`DensityMatrix`]; every interaction is a
//! [`Unitary`]. Joint spaces follow the Kronecker convention `A ⊗ B` with the
//! first factor most significant, so basis index `(a, b)` maps to `a * d_B + b`.
//!
//! All entropies are in bits. The Hermitian eigendecomposition is the only
//! spectral primitive.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, invalid, Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-10;
/// Relative singular-value threshold used when no tolerance is given.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues (descending) and matching eigenvectors of a Hermitian matrix.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(hermitian_part(m)).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// `f` applied to the spectrum of a Hermitian matrix: `V f(Λ) V†`.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = eigh(m);
    let diag = CMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| C64::new(f(v), 0.0)),
    ));
    &vectors * diag * vectors.adjoint()
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    eigvalsh(m).iter().map(|v| v.abs()).sum()
}

/// Kronecker product, shared by states and unitaries.
pub trait Tensor: Sized {
    fn tensor(&self, rhs: &Self) -> Self;
}

/// A Hermitian, positive semi-definite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace, and positivity.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let herm = max_abs_diff(&m, &m.adjoint());
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = eigvalsh(&m).last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { m })
    }

    /// Internal constructor for results of operations that preserve the invariants.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        Self { m: hermitian_part(&m) }
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        let diag = DVector::from_iterator(probs.len(), probs.iter().map(|&p| C64::new(p, 0.0)));
        Self::new(CMatrix::from_diagonal(&diag))
    }

    /// `|ψ⟩⟨ψ|` for a unit vector.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("state vector has norm {norm}")));
        }
        Ok(Self::from_trusted(psi * psi.adjoint()))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_trusted(CMatrix::identity(dim, dim).unscale(dim as f64))
    }

    /// Convex combination `Σ w_i ρ_i`.
    pub fn mixture<'a>(items: impl IntoIterator<Item = (f64, &'a DensityMatrix)>) -> Result<Self> {
        let mut acc: Option<CMatrix> = None;
        for (w, rho) in items {
            let term = rho.m.scale(w);
            acc = Some(match acc {
                None => term,
                Some(a) => {
                    check_dim(a.nrows(), term.nrows())?;
                    a + term
                }
            });
        }
        Self::new(acc.ok_or_else(|| invalid("empty mixture"))?)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.m.diagonal().iter().map(|z| z.re).collect()
    }

    /// Spectrum in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvalsh(&self.m)
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        self.m.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `U ρ U†`.
    pub fn evolve(&self, u: &Unitary) -> Result<Self> {
        check_dim(self.dim(), u.dim())?;
        Ok(Self::from_trusted(&u.m * &self.m * u.m.adjoint()))
    }

    /// `Tr(A ρ)` for an arbitrary operator `A`.
    pub fn expectation(&self, op: &CMatrix) -> Result<C64> {
        check_dim(self.dim(), op.nrows())?;
        Ok((op * &self.m).trace())
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        max_abs_diff(&self.m, &other.m)
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, rhs: &Self) -> Self {
        Self::from_trusted(self.m.kronecker(&rhs.m))
    }
}

/// A square matrix with `U U† = I` to within [`UNITARY_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    m: CMatrix,
}

impl Unitary {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(invalid(format!(
                "unitary must be non-empty and square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let dev = max_abs_diff(&(&m * m.adjoint()), &CMatrix::identity(m.nrows(), m.nrows()));
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { m })
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: CMatrix::identity(dim, dim) }
    }

    /// Permutation matrix sending `|j⟩` to `|perm[j]⟩`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &p in perm {
            if p >= d || std::mem::replace(&mut seen[p], true) {
                return Err(invalid(format!("{perm:?} is not a permutation")));
            }
        }
        let mut m = CMatrix::zeros(d, d);
        for (j, &i) in perm.iter().enumerate() {
            m[(i, j)] = C64::new(1.0, 0.0);
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &Unitary) -> Result<Self> {
        check_dim(self.dim(), rhs.dim())?;
        Ok(Self { m: &self.m * &rhs.m })
    }

    /// Max deviation of `U U†` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        max_abs_diff(&(&self.m * self.m.adjoint()), &CMatrix::identity(self.dim(), self.dim()))
    }
}

impl Tensor for Unitary {
    fn tensor(&self, rhs: &Self) -> Self {
        Self { m: self.m.kronecker(&rhs.m) }
    }
}

/// Which factor of a bipartite space survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

pub fn partial_trace(joint: &DensityMatrix, dims: (usize, usize), keep: Keep) -> Result<DensityMatrix> {
    let (da, db) = dims;
    check_dim(da * db, joint.dim())?;
    let m = joint.matrix();
    let out = match keep {
        Keep::A => CMatrix::from_fn(da, da, |a, a2| (0..db).map(|b| m[(a * db + b, a2 * db + b)]).sum()),
        Keep::B => CMatrix::from_fn(db, db, |b, b2| (0..da).map(|a| m[(a * db + b, a * db + b2)]).sum()),
    };
    Ok(DensityMatrix::from_trusted(out))
}

/// Zeroes every register block `⟨x|·|y⟩` with `x ≠ y` in the computational basis.
pub fn dephase_register(joint: &DensityMatrix, dims: (usize, usize)) -> Result<DensityMatrix> {
    let (dr, ds) = dims;
    check_dim(dr * ds, joint.dim())?;
    let m = joint.matrix();
    let out =
        CMatrix::from_fn(
            dr * ds,
            dr * ds,
            |i, j| {
                if i / ds == j / ds {
                    m[(i, j)]
                } else {
                    C64::new(0.0, 0.0)
                }
            },
        );
    Ok(DensityMatrix::from_trusted(out))
}

/// Dephasing in the register basis given by the columns of `basis`.
pub fn dephase_register_in(
    joint: &DensityMatrix,
    dims: (usize, usize),
    basis: &Unitary,
) -> Result<DensityMatrix> {
    check_dim(dims.0, basis.dim())?;
    let rotate = basis.tensor(&Unitary::identity(dims.1));
    let local = joint.evolve(&rotate.adjoint())?;
    dephase_register(&local, dims)?.evolve(&rotate)
}

/// Haar-distributed unitary drawn from a seeded ChaCha stream.
pub fn haar_unitary(d: usize, seed: u64) -> Unitary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_unitary_with(d, &mut rng)
}

/// QR of a complex Ginibre matrix with the diagonal of R rotated to the positive reals.
pub fn haar_unitary_with<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> Unitary {
    assert!(d >= 1, "Haar unitary needs d >= 1");
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * scale, im * scale)
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for c in 0..d {
        let rcc = r[(c, c)];
        let phase = if rcc.norm() > 0.0 { rcc / rcc.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..d {
            q[(row, c)] *= phase;
        }
    }
    Unitary { m: q }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub value: usize,
    /// Singular values, descending.
    pub singular_values: Vec<f64>,
    /// Absolute cutoff actually applied (`rel_tol · σ_max`).
    pub tolerance: f64,
}

/// Rank of an arbitrary complex matrix with a cutoff relative to its largest singular value.
pub fn matrix_rank(m: &CMatrix, rel_tol: f64) -> RankReport {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let cutoff = rel_tol * sv.first().copied().unwrap_or(0.0);
    let value = sv.iter().filter(|&&s| s > cutoff).count();
    RankReport { value, singular_values: sv, tolerance: cutoff }
}

pub fn numerical_rank(rho: &DensityMatrix, rel_tol: f64) -> RankReport {
    matrix_rank(rho.matrix(), rel_tol)
}

fn xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// `-Σ λ log₂ λ`, in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    let s: f64 = -rho.eigenvalues().into_iter().map(xlog2x).sum::<f64>();
    s.clamp(0.0, (rho.dim() as f64).log2())
}

/// Eigenvalues of `σ` below this count as outside its support.
pub const SUPPORT_TOL: f64 = 1e-12;
/// Weight of `ρ` on a null direction of `σ` above this makes `D(ρ‖σ)` infinite.
pub const LEAK_TOL: f64 = 1e-10;

/// `Tr ρ (log₂ ρ − log₂ σ)` in bits; `f64::INFINITY` when `supp ρ ⊄ supp σ`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dim(rho.dim(), sigma.dim())?;
    let neg_entropy: f64 = rho.eigenvalues().into_iter().map(xlog2x).sum();
    let (svals, svecs) = eigh(sigma.matrix());
    let mut cross = 0.0;
    for (k, &s) in svals.iter().enumerate() {
        let v = svecs.column(k);
        let weight = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
        if s < SUPPORT_TOL {
            if weight > LEAK_TOL {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross += weight * s.log2();
    }
    Ok((neg_entropy - cross).max(0.0))
}
