//! Kirkwood-Dirac quasiprobabilities and two-point-measurement statistics
//! for pairs of projective observables, with the Hermitian split operators
//! that expose their real and imaginary parts as expectation values.
//!
//! The central objects are the KDQ
//! `q_{l,j}(t) = tr{rho A_l B_j(t)}` with `B_j(t) = U^dag B_j U`, and the TPM
//! joint probability `tr{A_l rho A_l B_j(t)}`. When the state commutes with
//! the first observable the two coincide and the statistics are classical;
//! otherwise the KDQ can develop negative real parts and nonzero imaginary
//! parts, which is what the flags in [`KdqTable`] record.

use std::io::Write;

use crate::error::{Error, Result};
use crate::linop::{
    anticommutator, commutator, max_abs, propagator, trace_product, CMatrix, HermitianOperator,
    QuantumState, SpectralDecomposition, UnitaryPropagator, C64, SPECTRAL_TOL,
};

/// One outcome of a projective measurement: a label, the measured eigenvalue
/// and the projector onto its eigenspace.
#[derive(Debug, Clone)]
pub struct ProjectiveOutcome {
    pub label: usize,
    pub eigenvalue: f64,
    pub projector: HermitianOperator,
}

/// A complete orthogonal family of projectors with their eigenvalues, i.e.
/// the spectral decomposition of an observable.
#[derive(Debug, Clone)]
pub struct ProjectiveObservable {
    dim: usize,
    outcomes: Vec<ProjectiveOutcome>,
}

impl ProjectiveObservable {
    /// Validates completeness (sum of projectors = identity) and mutual
    /// orthogonality (P_l P_m = delta_{lm} P_l) before accepting the family.
    pub fn new(outcomes: Vec<ProjectiveOutcome>) -> Result<Self> {
        let dim =
            outcomes
                .first()
                .map(|o| o.projector.dim())
                .ok_or(Error::InvalidProjectorFamily {
                    what: "non-emptiness",
                    deviation: 0.0,
                })?;
        let mut sum = CMatrix::zeros(dim, dim);
        for o in &outcomes {
            if o.projector.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: o.projector.dim(),
                });
            }
            sum += o.projector.entries();
        }
        let completeness = max_abs(&(sum - CMatrix::identity(dim, dim)));
        if completeness > SPECTRAL_TOL {
            return Err(Error::InvalidProjectorFamily {
                what: "completeness",
                deviation: completeness,
            });
        }
        for (i, a) in outcomes.iter().enumerate() {
            for (k, b) in outcomes.iter().enumerate() {
                let prod = a.projector.entries() * b.projector.entries();
                let target = if i == k {
                    a.projector.entries().clone()
                } else {
                    CMatrix::zeros(dim, dim)
                };
                let defect = max_abs(&(prod - target));
                if defect > SPECTRAL_TOL {
                    return Err(Error::InvalidProjectorFamily {
                        what: "orthogonality/idempotence",
                        deviation: defect,
                    });
                }
            }
        }
        Ok(Self { dim, outcomes })
    }

    /// Spectral decomposition of an observable, labels assigned in ascending
    /// eigenvalue order.
    pub fn from_operator(x: &HermitianOperator) -> Self {
        let dec = crate::linop::spectral_decompose(x);
        Self::from_decomposition(&dec)
    }

    pub fn from_decomposition(dec: &SpectralDecomposition) -> Self {
        let outcomes = dec
            .eigenvalues()
            .iter()
            .zip(dec.projectors())
            .enumerate()
            .map(|(label, (&eigenvalue, projector))| ProjectiveOutcome {
                label,
                eigenvalue,
                projector: projector.clone(),
            })
            .collect();
        Self {
            dim: dec.dim(),
            outcomes,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[ProjectiveOutcome] {
        &self.outcomes
    }

    pub fn outcome(&self, idx: usize) -> &ProjectiveOutcome {
        &self.outcomes[idx]
    }

    /// The observable sum_l a_l P_l this family decomposes.
    pub fn observable(&self) -> HermitianOperator {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for o in &self.outcomes {
            acc += o.projector.entries().scale(o.eigenvalue);
        }
        HermitianOperator::symmetrized(acc)
    }
}

/// KDQ value q_{l,j}(t) = tr{rho A_l U^dag B_j U}.
pub fn kdq_value(
    rho: &QuantumState,
    a_ell: &HermitianOperator,
    b_j: &HermitianOperator,
    u: &UnitaryPropagator,
) -> Result<C64> {
    let dim = rho.dim();
    for d in [a_ell.dim(), b_j.dim(), u.dim()] {
        if d != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: d,
            });
        }
    }
    let b_t = u.entries().adjoint() * b_j.entries() * u.entries();
    let m = rho.op().entries() * a_ell.entries();
    Ok(trace_product(&m, &b_t))
}

/// TPM joint probability tr{A_l rho A_l B_j(t)}; real and in [0, 1].
pub fn tpm_joint(
    rho: &QuantumState,
    a_ell: &HermitianOperator,
    b_j: &HermitianOperator,
    u: &UnitaryPropagator,
) -> Result<f64> {
    let dim = rho.dim();
    for d in [a_ell.dim(), b_j.dim(), u.dim()] {
        if d != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: d,
            });
        }
    }
    let b_t = u.entries().adjoint() * b_j.entries() * u.entries();
    let collapsed = a_ell.entries() * rho.op().entries() * a_ell.entries();
    Ok(trace_product(&collapsed, &b_t).re)
}

/// The Hermitian split operators of a (state, projector) pair:
/// rho_l = {rho, A_l}/2 and sigma_l = [rho, A_l]/(2i), so that
/// Re q_{l,j}(t) = tr{rho_l B_j(t)} and Im q_{l,j}(t) = tr{sigma_l B_j(t)}.
pub fn split_operators(
    rho: &QuantumState,
    a_ell: &HermitianOperator,
) -> Result<(HermitianOperator, HermitianOperator)> {
    let rho_l = anticommutator(rho.op(), a_ell)?.scaled(0.5);
    // [rho, A]/(2i) = -i/2 [rho, A]
    let comm = commutator(rho.op(), a_ell)?;
    let sigma_l = HermitianOperator::symmetrized(comm * C64::new(0.0, -0.5));
    Ok((rho_l, sigma_l))
}

/// One (outcome pair, time) cell of a [`KdqTable`].
#[derive(Debug, Clone)]
pub struct KdqEntry {
    pub ell: usize,
    pub j: usize,
    pub t: f64,
    pub value: C64,
    pub tpm_value: f64,
    /// Criterion (i): Re q < 0, strict.
    pub re_negative: bool,
    /// Criterion (ii): |Im q| > s_th, strict.
    pub im_exceeds: bool,
}

/// KDQ and TPM statistics for every outcome pair over a time grid.
#[derive(Debug, Clone)]
pub struct KdqTable {
    times: Vec<f64>,
    n_ell: usize,
    n_j: usize,
    s_th: f64,
    entries: Vec<KdqEntry>,
}

/// Default imaginary-part threshold; reconstruction experiments report error
/// bars around 10% of the actual value, which motivates this scale.
pub const DEFAULT_S_TH: f64 = 0.2;

/// Build the full KDQ table of `rho` against observables `a` (at time 0) and
/// `b` (Heisenberg-evolved under `h`) on an ascending time grid.
///
/// Flags use strict inequalities with no tolerance offset; callers that need
/// guard bands apply them on top.
pub fn kdq_table(
    rho: &QuantumState,
    a: &ProjectiveObservable,
    b: &ProjectiveObservable,
    h: &HermitianOperator,
    grid: &[f64],
    s_th: f64,
    hbar: f64,
) -> Result<KdqTable> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid {
            reason: "empty grid",
        });
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidGrid {
            reason: "grid must be ascending",
        });
    }
    if s_th < 0.0 {
        return Err(Error::InvalidParameter {
            reason: "s_th must be nonnegative",
        });
    }
    let mut entries = Vec::with_capacity(grid.len() * a.len() * b.len());
    for &t in grid {
        let u = propagator(h, t, hbar);
        for ao in a.outcomes() {
            for bo in b.outcomes() {
                let value = kdq_value(rho, &ao.projector, &bo.projector, &u)?;
                let tpm_value = tpm_joint(rho, &ao.projector, &bo.projector, &u)?;
                entries.push(KdqEntry {
                    ell: ao.label,
                    j: bo.label,
                    t,
                    value,
                    tpm_value,
                    re_negative: value.re < 0.0,
                    im_exceeds: value.im.abs() > s_th,
                });
            }
        }
    }
    Ok(KdqTable {
        times: grid.to_vec(),
        n_ell: a.len(),
        n_j: b.len(),
        s_th,
        entries,
    })
}

impl KdqTable {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn s_th(&self) -> f64 {
        self.s_th
    }

    pub fn n_pairs(&self) -> usize {
        self.n_ell * self.n_j
    }

    pub fn entries(&self) -> &[KdqEntry] {
        &self.entries
    }

    /// All pair entries at one grid time.
    pub fn at(&self, t_idx: usize) -> &[KdqEntry] {
        let n = self.n_pairs();
        &self.entries[t_idx * n..(t_idx + 1) * n]
    }

    pub fn entry(&self, t_idx: usize, ell: usize, j: usize) -> &KdqEntry {
        &self.entries[t_idx * self.n_pairs() + ell * self.n_j + j]
    }

    /// Sum of all KDQ at one time; property (i) says this is 1.
    pub fn total(&self, t_idx: usize) -> C64 {
        self.at(t_idx).iter().map(|e| e.value).sum()
    }

    /// Marginal over j at fixed l; property (ii) says this equals tr{rho A_l}.
    pub fn marginal_ell(&self, t_idx: usize, ell: usize) -> C64 {
        self.at(t_idx)
            .iter()
            .filter(|e| e.ell == ell)
            .map(|e| e.value)
            .sum()
    }

    /// Marginal over l at fixed j; property (ii) says this equals tr{rho B_j(t)}.
    pub fn marginal_j(&self, t_idx: usize, j: usize) -> C64 {
        self.at(t_idx)
            .iter()
            .filter(|e| e.j == j)
            .map(|e| e.value)
            .sum()
    }

    /// CSV columns: t, ell, j, re_q, im_q, tpm, re_negative, im_exceeds.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "t,ell,j,re_q,im_q,tpm,re_negative,im_exceeds")?;
        for e in &self.entries {
            writeln!(
                w,
                "{:.12e},{},{},{:.12e},{:.12e},{:.12e},{},{}",
                e.t, e.ell, e.j, e.value.re, e.value.im, e.tpm_value, e.re_negative, e.im_exceeds
            )?;
        }
        Ok(())
    }
}
