//! Dense complex-Hermitian linear algebra on small matrices: spectral
//! decomposition, exact unitary propagators, Heisenberg evolution,
//! commutators, and partial traces.
//!
//! Everything here is exact up to floating-point rounding: matrix
//! exponentials go through the spectral decomposition of the (Hermitian)
//! generator, never through series truncation, so downstream bound
//! verification carries no step-size error.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Maximum tolerated |X - X^dag| entry at construction, and the tolerance for
/// PSD / unit-trace checks on states.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Tolerance for structural identities of spectral data (idempotence,
/// completeness, reconstruction) and for merging degenerate eigenvalues,
/// relative to the spectral range.
pub const SPECTRAL_TOL: f64 = 1e-9;

/// Trace of a matrix product, tr{A B}, without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Largest entry magnitude of `m`.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending with the
/// matching eigenvector columns.
pub(crate) fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let se = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let values: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &se.eigenvectors.column(k));
    }
    (values, vectors)
}

/// A complex square matrix verified (and symmetrized) to be Hermitian.
///
/// Houses Hamiltonians, observables, projectors and the split operators
/// derived from them. Construction rejects inputs whose deviation from
/// Hermiticity exceeds [`HERMITICITY_TOL`]; silently symmetrizing bad input
/// would mask caller bugs.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    dim: usize,
    entries: CMatrix,
}

impl HermitianOperator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        let deviation = max_abs(&(&entries - entries.adjoint()));
        if deviation > HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                deviation,
                tol: HERMITICITY_TOL,
            });
        }
        Ok(Self::symmetrized(entries))
    }

    /// Wrap a matrix that is Hermitian by construction (products of verified
    /// operators); symmetrizes to remove rounding drift but does not reject.
    pub(crate) fn symmetrized(entries: CMatrix) -> Self {
        let dim = entries.nrows();
        let sym = (&entries + entries.adjoint()).scale(0.5);
        Self { dim, entries: sym }
    }

    /// Build from row-major real and imaginary parts.
    pub fn from_parts(dim: usize, re: &[f64], im: &[f64]) -> Result<Self> {
        let expected = dim * dim;
        if re.len() != expected {
            return Err(Error::BadMatrixData {
                len: re.len(),
                dim,
                expected,
            });
        }
        if im.len() != expected {
            return Err(Error::BadMatrixData {
                len: im.len(),
                dim,
                expected,
            });
        }
        let entries = CMatrix::from_fn(dim, dim, |i, j| C64::new(re[i * dim + j], im[i * dim + j]));
        Self::new(entries)
    }

    /// Real diagonal matrix.
    pub fn diagonal(values: &[f64]) -> Self {
        let dim = values.len();
        let entries = CMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self { dim, entries }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: CMatrix::identity(dim, dim),
        }
    }

    /// Rank-1 projector |psi><psi| onto the normalized vector.
    pub fn projector_onto(amplitudes: &[C64]) -> Result<Self> {
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::InvalidParameter {
                reason: "cannot project onto the zero vector",
            });
        }
        let dim = amplitudes.len();
        let scale = 1.0 / norm2;
        let entries = CMatrix::from_fn(dim, dim, |i, j| {
            amplitudes[i] * amplitudes[j].conj() * scale
        });
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.scale(c),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            entries: &self.entries + &other.entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            entries: &self.entries - &other.entries,
        })
    }

    /// Raw eigenvalues in ascending order (degeneracies not merged).
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.entries).0
    }

    /// Smallest and largest eigenvalue.
    pub fn eigen_range(&self) -> (f64, f64) {
        let ev = self.eigenvalues();
        (ev[0], ev[ev.len() - 1])
    }

    /// Largest entry magnitude, used as an operator-size proxy in tests and
    /// commutation checks.
    pub fn max_abs_entry(&self) -> f64 {
        max_abs(&self.entries)
    }
}

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

/// A positive-semidefinite Hermitian operator with its trace recorded.
///
/// Density operators carry `trace_scale = 1`; second-measurement projectors
/// `B_j` may be unnormalized and carry `tr{B_j}` as the scale factor, to be
/// re-applied after bound evaluation.
#[derive(Debug, Clone)]
pub struct QuantumState {
    op: HermitianOperator,
    trace_scale: f64,
}

impl QuantumState {
    /// A proper density operator: PSD with unit trace.
    pub fn density(op: HermitianOperator) -> Result<Self> {
        let state = Self::unnormalized(op)?;
        if (state.trace_scale - 1.0).abs() > HERMITICITY_TOL {
            return Err(Error::NonUnitTrace {
                trace: state.trace_scale,
            });
        }
        Ok(Self {
            op: state.op,
            trace_scale: 1.0,
        })
    }

    /// A PSD operator treated as a state up to normalization; records the
    /// trace as the scale factor.
    pub fn unnormalized(op: HermitianOperator) -> Result<Self> {
        let min = op.eigenvalues()[0];
        if min < -HERMITICITY_TOL {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min,
            });
        }
        let trace_scale = op.trace();
        Ok(Self { op, trace_scale })
    }

    /// Pure state |psi><psi| from amplitudes (normalized internally).
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let op = HermitianOperator::projector_onto(amplitudes)?;
        Ok(Self {
            op,
            trace_scale: 1.0,
        })
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim
    }

    pub fn trace_scale(&self) -> f64 {
        self.trace_scale
    }

    /// The unit-trace matrix `op / trace_scale`.
    pub fn normalized_entries(&self) -> CMatrix {
        self.op.entries.scale(1.0 / self.trace_scale)
    }

    /// The unit-trace state obtained by dividing out the scale factor.
    pub fn normalized(&self) -> QuantumState {
        QuantumState {
            op: HermitianOperator {
                dim: self.op.dim,
                entries: self.normalized_entries(),
            },
            trace_scale: 1.0,
        }
    }

    /// Expectation value tr{X rho} with respect to the *normalized* state.
    pub fn expect(&self, x: &HermitianOperator) -> Result<f64> {
        check_dims(self.dim(), x.dim)?;
        Ok(trace_product(&x.entries, &self.op.entries).re / self.trace_scale)
    }

    /// Variance <X^2> - <X>^2 with respect to the normalized state.
    pub fn variance(&self, x: &HermitianOperator) -> Result<f64> {
        check_dims(self.dim(), x.dim)?;
        let x2 = &x.entries * &x.entries;
        let mean = self.expect(x)?;
        let mean2 = trace_product(&x2, &self.op.entries).re / self.trace_scale;
        Ok(mean2 - mean * mean)
    }

    /// Schroedinger evolution U rho U^dag; preserves the trace scale.
    pub fn evolved(&self, u: &UnitaryPropagator) -> Result<Self> {
        check_dims(self.dim(), u.dim)?;
        let m = &u.entries * &self.op.entries * u.entries.adjoint();
        Ok(Self {
            op: HermitianOperator::symmetrized(m),
            trace_scale: self.trace_scale,
        })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.op.eigenvalues()[0]
    }
}

/// Spectral decomposition with degenerate eigenvalues merged into rank-
/// resolved projectors.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    dim: usize,
    eigenvalues: Vec<f64>,
    projectors: Vec<HermitianOperator>,
}

/// Decompose a Hermitian operator into ascending eigenvalues and orthogonal
/// projectors. Eigenvalues closer than [`SPECTRAL_TOL`] relative to the
/// spectral range are grouped into a single projector so that degenerate
/// subspaces stay well defined.
pub fn spectral_decompose(x: &HermitianOperator) -> SpectralDecomposition {
    let (values, vectors) = eigh(&x.entries);
    let dim = x.dim;
    let range = values[dim - 1] - values[0];
    let tol = SPECTRAL_TOL * range.max(1.0);

    let mut eigenvalues = Vec::new();
    let mut projectors = Vec::new();
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && values[end] - values[end - 1] <= tol {
            end += 1;
        }
        let mean = values[start..end].iter().sum::<f64>() / (end - start) as f64;
        let mut proj = CMatrix::zeros(dim, dim);
        for k in start..end {
            let v = vectors.column(k);
            for i in 0..dim {
                for j in 0..dim {
                    proj[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        eigenvalues.push(mean);
        projectors.push(HermitianOperator::symmetrized(proj));
        start = end;
    }
    SpectralDecomposition {
        dim,
        eigenvalues,
        projectors,
    }
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn projectors(&self) -> &[HermitianOperator] {
        &self.projectors
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// Sum lambda_k P_k, which must reproduce the decomposed operator.
    pub fn reconstruct(&self) -> HermitianOperator {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for (lambda, p) in self.eigenvalues.iter().zip(&self.projectors) {
            acc += p.entries.scale(*lambda);
        }
        HermitianOperator::symmetrized(acc)
    }
}

/// U = exp(-i H t / hbar), computed through the spectral decomposition of H.
#[derive(Debug, Clone)]
pub struct UnitaryPropagator {
    dim: usize,
    entries: CMatrix,
    hbar: f64,
    t: f64,
}

/// Propagator for a constant Hamiltonian: U = sum_k exp(-i lambda_k t / hbar) P_k.
pub fn propagator(h: &HermitianOperator, t: f64, hbar: f64) -> UnitaryPropagator {
    debug_assert!(hbar > 0.0, "hbar must be positive");
    let (values, vectors) = eigh(&h.entries);
    let dim = h.dim;
    let phases: Vec<C64> = values
        .iter()
        .map(|&lambda| (C64::new(0.0, -lambda * t / hbar)).exp())
        .collect();
    let mut scaled = vectors.clone();
    for (k, phase) in phases.iter().enumerate() {
        let col = vectors.column(k) * *phase;
        scaled.set_column(k, &col);
    }
    let entries = scaled * vectors.adjoint();
    UnitaryPropagator {
        dim,
        entries,
        hbar,
        t,
    }
}

impl UnitaryPropagator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Max-entry deviation of U U^dag from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = &self.entries * self.entries.adjoint();
        max_abs(&(prod - CMatrix::identity(self.dim, self.dim)))
    }
}

/// Heisenberg-picture evolution of an observable: U^dag B U.
pub fn heisenberg(b: &HermitianOperator, u: &UnitaryPropagator) -> Result<HermitianOperator> {
    check_dims(b.dim, u.dim)?;
    let m = u.entries.adjoint() * &b.entries * &u.entries;
    Ok(HermitianOperator::symmetrized(m))
}

/// Commutator [X, Y] = XY - YX; anti-Hermitian for Hermitian inputs, so it is
/// returned as a raw matrix.
pub fn commutator(x: &HermitianOperator, y: &HermitianOperator) -> Result<CMatrix> {
    check_dims(x.dim, y.dim)?;
    Ok(&x.entries * &y.entries - &y.entries * &x.entries)
}

/// Anticommutator {X, Y} = XY + YX, Hermitian for Hermitian inputs.
pub fn anticommutator(x: &HermitianOperator, y: &HermitianOperator) -> Result<HermitianOperator> {
    check_dims(x.dim, y.dim)?;
    Ok(HermitianOperator::symmetrized(
        &x.entries * &y.entries + &y.entries * &x.entries,
    ))
}

/// Which tensor factor [`partial_trace`] traces out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Partial trace of a state on a `d_first * d_second` space over the chosen
/// factor. Index convention: row = i_first * d_second + i_second.
pub fn partial_trace(
    state: &QuantumState,
    d_first: usize,
    d_second: usize,
    traced: Subsystem,
) -> Result<QuantumState> {
    let dim = state.dim();
    if d_first * d_second != dim {
        return Err(Error::NonFactorableDimension {
            dim,
            d_first,
            d_second,
        });
    }
    let rho = &state.op.entries;
    let reduced = match traced {
        Subsystem::Second => {
            let mut out = CMatrix::zeros(d_first, d_first);
            for i in 0..d_first {
                for j in 0..d_first {
                    for k in 0..d_second {
                        out[(i, j)] += rho[(i * d_second + k, j * d_second + k)];
                    }
                }
            }
            out
        }
        Subsystem::First => {
            let mut out = CMatrix::zeros(d_second, d_second);
            for i in 0..d_second {
                for j in 0..d_second {
                    for k in 0..d_first {
                        out[(i, j)] += rho[(k * d_second + i, k * d_second + j)];
                    }
                }
            }
            out
        }
    };
    QuantumState::unnormalized(HermitianOperator::symmetrized(reduced))
}

/// Kronecker product, first factor outermost.
pub fn kron(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator::symmetrized(a.entries.kronecker(&b.entries))
}

/// JSON wire format for complex matrices: row-major real and imaginary parts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixJson {
    pub fn to_operator(&self) -> Result<HermitianOperator> {
        HermitianOperator::from_parts(self.dim, &self.re, &self.im)
    }

    pub fn from_operator(op: &HermitianOperator) -> Self {
        let dim = op.dim;
        let mut re = Vec::with_capacity(dim * dim);
        let mut im = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                re.push(op.entries[(i, j)].re);
                im.push(op.entries[(i, j)].im);
            }
        }
        Self { dim, re, im }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> HermitianOperator {
        let g = CMatrix::from_fn(dim, dim, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        HermitianOperator::symmetrized(g)
    }

    fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> QuantumState {
        let g = CMatrix::from_fn(dim, dim, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let w = &g * g.adjoint();
        let tr: f64 = w.diagonal().iter().map(|z| z.re).sum();
        QuantumState::density(HermitianOperator::symmetrized(w.scale(1.0 / tr))).unwrap()
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.5, 0.0),
                C64::new(0.2, 0.0),
                C64::new(1.0, 0.0),
            ],
        );
        assert!(matches!(
            HermitianOperator::new(m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn spectral_decompose_diagonal() {
        let z = HermitianOperator::diagonal(&[-1.0, 1.0]);
        let dec = spectral_decompose(&z);
        assert_eq!(dec.eigenvalues(), &[-1.0, 1.0]);
        assert_abs_diff_eq!(
            dec.projectors()[0].entries()[(0, 0)].re,
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            dec.projectors()[0].entries()[(1, 1)].re,
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            dec.projectors()[1].entries()[(1, 1)].re,
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn spectral_decompose_identity_merges() {
        let id = HermitianOperator::identity(3);
        let dec = spectral_decompose(&id);
        assert_eq!(dec.len(), 1);
        assert_abs_diff_eq!(dec.eigenvalues()[0], 1.0, epsilon = 1e-12);
        let p = &dec.projectors()[0];
        assert!(max_abs(&(p.entries() - CMatrix::identity(3, 3))) < 1e-12);
    }

    #[test]
    fn spectral_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dim in 2..=8 {
            let x = random_hermitian(&mut rng, dim);
            let dec = spectral_decompose(&x);
            let recon = dec.reconstruct();
            let err = max_abs(&(recon.entries() - x.entries()));
            assert!(err < 1e-9, "dim {dim}: reconstruction error {err}");
            // projector family structure
            let mut sum = CMatrix::zeros(dim, dim);
            for p in dec.projectors() {
                let idem = max_abs(&(&(p.entries() * p.entries()) - p.entries()));
                assert!(idem < 1e-9, "idempotence defect {idem}");
                sum += p.entries();
            }
            assert!(max_abs(&(sum - CMatrix::identity(dim, dim))) < 1e-9);
        }
    }

    #[test]
    fn propagator_at_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hermitian(&mut rng, 4);
        let u = propagator(&h, 0.0, 1.0);
        assert!(max_abs(&(u.entries() - CMatrix::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn propagator_diagonal_h() {
        let h = HermitianOperator::diagonal(&[0.3, -1.2]);
        let t = 0.77;
        let u = propagator(&h, t, 1.0);
        for (k, e) in [0.3, -1.2].iter().enumerate() {
            let expected = C64::new(0.0, -e * t).exp();
            assert!((u.entries()[(k, k)] - expected).norm() < 1e-12);
        }
        assert!((u.entries()[(0, 1)]).norm() < 1e-12);
    }

    #[test]
    fn propagator_two_level_coupling() {
        // H = (hbar w / 2)(|a><b| + |b><a|) restricted to the coupled block
        // gives U = [[cos(wt/2), -i sin(wt/2)], [-i sin(wt/2), cos(wt/2)]].
        let omega = 1.7;
        let h = HermitianOperator::new(CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(omega / 2.0, 0.0),
                C64::new(omega / 2.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        ))
        .unwrap();
        let t = 0.9;
        let u = propagator(&h, t, 1.0);
        let c = (omega * t / 2.0).cos();
        let s = (omega * t / 2.0).sin();
        assert!((u.entries()[(0, 0)] - C64::new(c, 0.0)).norm() < 1e-12);
        assert!((u.entries()[(0, 1)] - C64::new(0.0, -s)).norm() < 1e-12);
        assert!((u.entries()[(1, 0)] - C64::new(0.0, -s)).norm() < 1e-12);
        assert!((u.entries()[(1, 1)] - C64::new(c, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn propagator_group_property_and_unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in 2..=6 {
            let h = random_hermitian(&mut rng, dim);
            let (t1, t2) = (0.31, 1.13);
            let u1 = propagator(&h, t1, 1.0);
            let u2 = propagator(&h, t2, 1.0);
            let u12 = propagator(&h, t1 + t2, 1.0);
            let prod = u1.entries() * u2.entries();
            assert!(max_abs(&(prod - u12.entries())) < 1e-9);
            assert!(u12.unitarity_defect() < 1e-9);
        }
    }

    #[test]
    fn heisenberg_preserves_spectrum_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let b = random_hermitian(&mut rng, 5);
        let h = random_hermitian(&mut rng, 5);
        let u = propagator(&h, 0.42, 1.0);
        let bt = heisenberg(&b, &u).unwrap();
        let ev_in = b.eigenvalues();
        let ev_out = bt.eigenvalues();
        for (a, b) in ev_in.iter().zip(&ev_out) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(b.trace(), bt.trace(), epsilon = 1e-10);

        let id = propagator(&HermitianOperator::zeros(5), 1.0, 1.0);
        let same = heisenberg(&b, &id).unwrap();
        assert!(max_abs(&(same.entries() - b.entries())) < 1e-12);
    }

    #[test]
    fn commutator_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let x = random_hermitian(&mut rng, 4);
        assert!(max_abs(&commutator(&x, &x).unwrap()) < 1e-12);

        // {P, P} = 2P for a projector
        let p = HermitianOperator::diagonal(&[1.0, 0.0, 0.0, 0.0]);
        let anti = anticommutator(&p, &p).unwrap();
        assert!(max_abs(&(anti.entries() - p.entries().scale(2.0))) < 1e-12);

        // [diag(a,b), flip] against the hand expansion:
        // [diag(a,b), [[0,1],[1,0]]] = (a-b) [[0,1],[-1,0]]
        let (a, b) = (0.8, -0.4);
        let d = HermitianOperator::diagonal(&[a, b]);
        let flip = HermitianOperator::new(CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        ))
        .unwrap();
        let c = commutator(&d, &flip).unwrap();
        assert!((c[(0, 1)] - C64::new(a - b, 0.0)).norm() < 1e-12);
        assert!((c[(1, 0)] - C64::new(b - a, 0.0)).norm() < 1e-12);
        // anti-Hermitian
        assert!(max_abs(&(&c + c.adjoint())) < 1e-12);
    }

    #[test]
    fn partial_trace_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let rho_a = random_density(&mut rng, 2);
        let rho_b = random_density(&mut rng, 3);
        let joint = QuantumState::density(kron(rho_a.op(), rho_b.op())).unwrap();
        let reduced = partial_trace(&joint, 2, 3, Subsystem::Second).unwrap();
        assert!(max_abs(&(reduced.op().entries() - rho_a.op().entries())) < 1e-10);
        assert_abs_diff_eq!(reduced.trace_scale(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn partial_trace_maximally_entangled() {
        let inv = 1.0 / 2.0_f64.sqrt();
        let bell = QuantumState::pure(&[
            C64::new(inv, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(inv, 0.0),
        ])
        .unwrap();
        for traced in [Subsystem::First, Subsystem::Second] {
            let reduced = partial_trace(&bell, 2, 2, traced).unwrap();
            let half_id = CMatrix::identity(2, 2).scale(0.5);
            assert!(max_abs(&(reduced.op().entries() - half_id)) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_fig2_target_state() {
        // |-><-| (x) |1><1| traced over the control (second factor here)
        // leaves the target reduced state |-><-|.
        let inv = 1.0 / 2.0_f64.sqrt();
        let minus = [C64::new(inv, 0.0), C64::new(-inv, 0.0)];
        let one = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let target = QuantumState::pure(&minus).unwrap();
        let control = QuantumState::pure(&one).unwrap();
        let joint = QuantumState::density(kron(target.op(), control.op())).unwrap();
        let reduced = partial_trace(&joint, 2, 2, Subsystem::Second).unwrap();
        assert!(max_abs(&(reduced.op().entries() - target.op().entries())) < 1e-12);
    }

    #[test]
    fn partial_trace_linear_and_trace_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s1 = random_density(&mut rng, 6);
        let s2 = random_density(&mut rng, 6);
        let alpha = 0.3;
        let mix = QuantumState::density(HermitianOperator::symmetrized(
            s1.op().entries().scale(alpha) + s2.op().entries().scale(1.0 - alpha),
        ))
        .unwrap();
        let r_mix = partial_trace(&mix, 2, 3, Subsystem::First).unwrap();
        let r1 = partial_trace(&s1, 2, 3, Subsystem::First).unwrap();
        let r2 = partial_trace(&s2, 2, 3, Subsystem::First).unwrap();
        let lin = r1.op().entries().scale(alpha) + r2.op().entries().scale(1.0 - alpha);
        assert!(max_abs(&(r_mix.op().entries() - lin)) < 1e-10);
        assert_abs_diff_eq!(r_mix.trace_scale(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn partial_trace_rejects_bad_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let s = random_density(&mut rng, 6);
        assert!(matches!(
            partial_trace(&s, 4, 2, Subsystem::First),
            Err(Error::NonFactorableDimension { .. })
        ));
    }

    #[test]
    fn matrix_json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let x = random_hermitian(&mut rng, 3);
        let j = MatrixJson::from_operator(&x);
        let back = j.to_operator().unwrap();
        assert!(max_abs(&(back.entries() - x.entries())) < 1e-12);
    }
}
