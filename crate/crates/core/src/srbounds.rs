//! The bound engine: eigenvalue-interpolation functions, the symmetric
//! logarithmic derivative and its dispersion, the variance upper bound, and
//! the time-dependent bounds on expectation values and on the real/imaginary
//! parts of Kirkwood-Dirac quasiprobabilities.
//!
//! The machinery rests on the uncertainty-relation rate bound
//! `|d<X>/dt| <= DeltaL * DeltaX_t` together with the variance bound
//! `DeltaX_t^2 <= (x_1 + x_d)<X>_t - <X>_t^2 - x_1 x_d`. Integrating the
//! resulting differential inequality yields
//!
//! ```text
//! <X>_t >= E(tau_0 + DeltaL t),    <X>_t <= E(tau_0 - DeltaL t),
//! ```
//!
//! where `E` interpolates the extreme eigenvalues of X through
//! `E(tau) = x_d cos^2(tau/2) + x_1 sin^2(tau/2)` on `[0, pi]` and clamps to
//! the extremes outside of it, and `tau_0` places the initial expectation on
//! that arc. A refined lower bound applies the same construction to the rate
//! observable `Xdot = [X, H]/(i hbar)` and integrates it in closed form.
//!
//! Sign conventions: every operation here takes `h` as the generator of the
//! *state's* Schroedinger evolution, `rho(t) = U rho U^dag` with
//! `U = exp(-i H t / hbar)`. Heisenberg-evolved second projectors `B_j(t)`
//! evolve under `-H`, which is what [`kdq_bounds`] passes internally.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::kdq::split_operators;
use crate::linop::{
    commutator, eigh, max_abs, trace_product, CMatrix, HermitianOperator, QuantumState, C64,
    HERMITICITY_TOL,
};

/// Slack allowed when clamping arccos arguments that floating-point noise
/// pushes marginally past +-1; farther outside means the target value is
/// genuinely unreachable.
pub const ARCCOS_CLAMP_TOL: f64 = 1e-9;
/// Below this spread the spectrum is treated as a single point.
pub const DEGENERATE_RANGE_TOL: f64 = 1e-12;
/// Below this rate the dynamics are treated as frozen; bound curves collapse
/// to constants and crossing times become unreachable.
pub const DELTA_L_FLOOR: f64 = 1e-12;

/// E(X, tau): interpolates between the largest eigenvalue (tau <= 0) and the
/// smallest (tau >= pi) along a trigonometric arc.
pub fn e_interp(x_min: f64, x_max: f64, tau: f64) -> Result<f64> {
    if x_min > x_max {
        return Err(Error::InvalidInterval { x_min, x_max });
    }
    Ok(e_raw(x_min, x_max, tau))
}

fn e_raw(x_min: f64, x_max: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        x_max
    } else if tau >= PI {
        x_min
    } else {
        let (s, c) = (0.5 * tau).sin_cos();
        x_max * c * c + x_min * s * s
    }
}

/// Continuous antiderivative of `tau -> e_raw(x_min, x_max, tau)` with value
/// zero at tau = 0. On `[0, pi]` it is `mean*tau + half_diff*sin(tau)`;
/// outside it continues linearly with slope x_max (left) or x_min (right).
fn e_antideriv(x_min: f64, x_max: f64, tau: f64) -> f64 {
    let mean = 0.5 * (x_min + x_max);
    let half_diff = 0.5 * (x_max - x_min);
    if tau <= 0.0 {
        x_max * tau
    } else if tau <= PI {
        mean * tau + half_diff * tau.sin()
    } else {
        mean * PI + x_min * (tau - PI)
    }
}

/// tau(X, x): the interpolation angle in [0, pi] with E(X, tau) = x, i.e.
/// arccos((2x - x_min - x_max)/(x_max - x_min)).
///
/// Returns `None` when x lies outside the spectral range beyond the clamping
/// slack (the target is unreachable), including the degenerate case
/// x_min = x_max with x differing from that single point.
pub fn tau_interp(x_min: f64, x_max: f64, x: f64) -> Result<Option<f64>> {
    if x_min > x_max {
        return Err(Error::InvalidInterval { x_min, x_max });
    }
    let range = x_max - x_min;
    if range < DEGENERATE_RANGE_TOL {
        let mid = 0.5 * (x_min + x_max);
        return Ok(if (x - mid).abs() <= ARCCOS_CLAMP_TOL {
            Some(0.0)
        } else {
            None
        });
    }
    let z = (2.0 * x - x_min - x_max) / range;
    if !(-1.0 - ARCCOS_CLAMP_TOL..=1.0 + ARCCOS_CLAMP_TOL).contains(&z) {
        return Ok(None);
    }
    Ok(Some(z.clamp(-1.0, 1.0).acos()))
}

/// Upper bound on the variance of a bounded Hermitian observable given only
/// its mean: DeltaX^2 <= (x_1 + x_d)<X> - <X>^2 - x_1 x_d. This is the
/// radicand of the differential inequality; it vanishes at the eigenvalue
/// extremes.
pub fn variance_upper_bound(x_min: f64, x_max: f64, mean: f64) -> Result<f64> {
    if x_min > x_max {
        return Err(Error::InvalidInterval { x_min, x_max });
    }
    if mean < x_min - ARCCOS_CLAMP_TOL || mean > x_max + ARCCOS_CLAMP_TOL {
        return Err(Error::MeanOutOfRange { mean, x_min, x_max });
    }
    Ok((x_min + x_max) * mean - mean * mean - x_min * x_max)
}

/// Symmetric logarithmic derivative of a state evolving under `h`:
/// the Hermitian L with drho/dt = {rho, L}/2 = [H, rho]/(i hbar).
#[derive(Debug, Clone)]
pub struct SldResult {
    pub l: HermitianOperator,
    /// sqrt(tr{L^2 rho}); the square root of the quantum Fisher information.
    /// Constant in time for a constant Hamiltonian.
    pub delta_l: f64,
    pub state: QuantumState,
    pub hamiltonian: HermitianOperator,
    pub hbar: f64,
}

/// Compute the SLD in the eigenbasis of the state:
/// L_ij = (2 / i hbar) (p_j - p_i)/(p_i + p_j) H_ij, with L_ij = 0 whenever
/// p_i = p_j = 0. Negative eigenvalue noise is clipped at zero, which keeps
/// the ratio bounded by 1 in magnitude.
pub fn sld(state: &QuantumState, h: &HermitianOperator, hbar: f64) -> Result<SldResult> {
    if state.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            left: state.dim(),
            right: h.dim(),
        });
    }
    let dim = state.dim();
    let rho = state.normalized_entries();
    let (p_raw, v) = eigh(&rho);
    let p: Vec<f64> = p_raw.iter().map(|&x| x.max(0.0)).collect();
    let h_eig = v.adjoint() * h.entries() * &v;
    let mut l_eig = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let total = p[i] + p[j];
            if total > 0.0 {
                let ratio = (p[j] - p[i]) / total;
                l_eig[(i, j)] = C64::new(0.0, -2.0 / hbar) * ratio * h_eig[(i, j)];
            }
        }
    }
    let l = HermitianOperator::symmetrized(&v * l_eig * v.adjoint());
    let l_rho = l.entries() * &rho;
    let delta_l_sq = trace_product(l.entries(), &l_rho).re.max(0.0);
    Ok(SldResult {
        l,
        delta_l: delta_l_sq.sqrt(),
        state: state.clone(),
        hamiltonian: h.clone(),
        hbar,
    })
}

/// Which bound a [`BoundCurve`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    LowerDirect,
    UpperDirect,
    LowerDerivative,
    UnifiedLower,
}

impl BoundKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundKind::LowerDirect => "lower_direct",
            BoundKind::UpperDirect => "upper_direct",
            BoundKind::LowerDerivative => "lower_derivative",
            BoundKind::UnifiedLower => "unified_lower",
        }
    }
}

/// Parameters of a direct bound E(tau_0 +- DeltaL t) over the spectrum of
/// the bounded observable.
#[derive(Debug, Clone)]
pub struct DirectParams {
    pub x_min: f64,
    pub x_max: f64,
    pub tau0: f64,
    pub delta_l: f64,
    /// Trace scale of an unnormalized reference state, re-applied at
    /// evaluation; 1 for proper density operators.
    pub scale: f64,
}

/// Parameters of the derivative-refined lower bound
/// `<X>_0 + (1/DeltaL) * Int_0^{DeltaL t} E(Xdot, tau_0' + xi) dxi`.
#[derive(Debug, Clone)]
pub struct DerivativeParams {
    /// Initial expectation <X>_0.
    pub x0: f64,
    /// Extreme eigenvalues of the rate observable Xdot = [X, H]/(i hbar).
    pub dot_min: f64,
    pub dot_max: f64,
    /// tau_0' placing <Xdot>_0 on the arc of E over the Xdot spectrum.
    pub tau0: f64,
    pub delta_l: f64,
    pub scale: f64,
}

/// A piecewise-analytic bound on an expectation value as a function of time.
///
/// Lower direct curves are non-increasing toward `x_min`; upper direct
/// curves non-decreasing toward `x_max`; both clamp at the extremes. At
/// t = 0 every curve equals the initial expectation value.
#[derive(Debug, Clone)]
pub enum BoundCurve {
    LowerDirect(DirectParams),
    UpperDirect(DirectParams),
    LowerDerivative(DerivativeParams),
    UnifiedLower {
        direct: Box<BoundCurve>,
        derivative: Box<BoundCurve>,
    },
}

impl BoundCurve {
    pub fn kind(&self) -> BoundKind {
        match self {
            BoundCurve::LowerDirect(_) => BoundKind::LowerDirect,
            BoundCurve::UpperDirect(_) => BoundKind::UpperDirect,
            BoundCurve::LowerDerivative(_) => BoundKind::LowerDerivative,
            BoundCurve::UnifiedLower { .. } => BoundKind::UnifiedLower,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            BoundCurve::LowerDirect(p) => p.scale * e_raw(p.x_min, p.x_max, p.tau0 + p.delta_l * t),
            BoundCurve::UpperDirect(p) => p.scale * e_raw(p.x_min, p.x_max, p.tau0 - p.delta_l * t),
            BoundCurve::LowerDerivative(p) => p.scale * derivative_value(p, t),
            BoundCurve::UnifiedLower { direct, derivative } => {
                direct.value(t).max(derivative.value(t))
            }
        }
    }

    pub fn delta_l(&self) -> f64 {
        match self {
            BoundCurve::LowerDirect(p) | BoundCurve::UpperDirect(p) => p.delta_l,
            BoundCurve::LowerDerivative(p) => p.delta_l,
            BoundCurve::UnifiedLower { direct, .. } => direct.delta_l(),
        }
    }

    pub fn tau0(&self) -> f64 {
        match self {
            BoundCurve::LowerDirect(p) | BoundCurve::UpperDirect(p) => p.tau0,
            BoundCurve::LowerDerivative(p) => p.tau0,
            BoundCurve::UnifiedLower { direct, .. } => direct.tau0(),
        }
    }

    pub fn scale(&self) -> f64 {
        match self {
            BoundCurve::LowerDirect(p) | BoundCurve::UpperDirect(p) => p.scale,
            BoundCurve::LowerDerivative(p) => p.scale,
            BoundCurve::UnifiedLower { direct, .. } => direct.scale(),
        }
    }

    /// Re-apply an unnormalized reference-state trace to the curve.
    pub(crate) fn rescaled(mut self, factor: f64) -> Self {
        match &mut self {
            BoundCurve::LowerDirect(p) | BoundCurve::UpperDirect(p) => p.scale *= factor,
            BoundCurve::LowerDerivative(p) => p.scale *= factor,
            BoundCurve::UnifiedLower { direct, derivative } => {
                **direct = direct.as_ref().clone().rescaled(factor);
                **derivative = derivative.as_ref().clone().rescaled(factor);
            }
        }
        self
    }

    pub fn sample(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&t| self.value(t)).collect()
    }

    /// CSV columns: t, value, kind.
    pub fn write_csv<W: Write>(&self, w: &mut W, grid: &[f64]) -> std::io::Result<()> {
        writeln!(w, "t,value,kind")?;
        let kind = self.kind().as_str();
        for &t in grid {
            writeln!(w, "{:.12e},{:.12e},{}", t, self.value(t), kind)?;
        }
        Ok(())
    }
}

fn derivative_value(p: &DerivativeParams, t: f64) -> f64 {
    if p.delta_l <= DELTA_L_FLOOR {
        // Frozen-rate limit of (1/DeltaL) Int_0^{DeltaL t} E = t * E(tau_0'),
        // which covers both the single-point spectrum and the general case.
        return p.x0 + t * e_raw(p.dot_min, p.dot_max, p.tau0);
    }
    let upper = e_antideriv(p.dot_min, p.dot_max, p.tau0 + p.delta_l * t);
    let lower = e_antideriv(p.dot_min, p.dot_max, p.tau0);
    p.x0 + (upper - lower) / p.delta_l
}

/// The rate observable Xdot = [X, H]/(i hbar) driving d<X>/dt = <Xdot> for a
/// state evolving under `h`.
pub fn rate_observable(
    x: &HermitianOperator,
    h: &HermitianOperator,
    hbar: f64,
) -> Result<HermitianOperator> {
    let comm = commutator(x, h)?;
    Ok(HermitianOperator::symmetrized(
        comm * C64::new(0.0, -1.0 / hbar),
    ))
}

/// Direct lower and upper bounds on `<X>_t` for `state0` evolving under `h`:
/// `E(tau_0 + DeltaL t)` and `E(tau_0 - DeltaL t)` over the spectrum of X.
pub fn expval_bounds(
    x: &HermitianOperator,
    state0: &QuantumState,
    h: &HermitianOperator,
    hbar: f64,
) -> Result<(BoundCurve, BoundCurve)> {
    let (x_min, x_max) = x.eigen_range();
    let x0 = state0.expect(x)?;
    let tau0 = tau_interp(x_min, x_max, x0)?.ok_or(Error::OutsideSpectralRange {
        value: x0,
        x_min,
        x_max,
    })?;
    let delta_l = sld(state0, h, hbar)?.delta_l;
    let params = DirectParams {
        x_min,
        x_max,
        tau0,
        delta_l,
        scale: 1.0,
    };
    Ok((
        BoundCurve::LowerDirect(params.clone()),
        BoundCurve::UpperDirect(params),
    ))
}

/// Derivative-refined lower bound on `<X>_t`:
/// `<X>_0 + (1/DeltaL) Int_0^{DeltaL t} E(Xdot, tau_0' + xi) dxi`.
///
/// The 1/DeltaL prefactor comes from the change of variables xi = DeltaL s
/// and makes the initial slope equal `<Xdot>_0`.
pub fn derivative_refined_lower_bound(
    x: &HermitianOperator,
    state0: &QuantumState,
    h: &HermitianOperator,
    hbar: f64,
) -> Result<BoundCurve> {
    let xdot = rate_observable(x, h, hbar)?;
    let (dot_min, dot_max) = xdot.eigen_range();
    let xdot0 = state0.expect(&xdot)?;
    let tau0 = tau_interp(dot_min, dot_max, xdot0)?.ok_or(Error::OutsideSpectralRange {
        value: xdot0,
        x_min: dot_min,
        x_max: dot_max,
    })?;
    let x0 = state0.expect(x)?;
    let delta_l = sld(state0, h, hbar)?.delta_l;
    Ok(BoundCurve::LowerDerivative(DerivativeParams {
        x0,
        dot_min,
        dot_max,
        tau0,
        delta_l,
        scale: 1.0,
    }))
}

/// Pointwise maximum of the direct and derivative-refined lower bounds.
pub fn unified_lower_bound(
    x: &HermitianOperator,
    state0: &QuantumState,
    h: &HermitianOperator,
    hbar: f64,
) -> Result<BoundCurve> {
    let (lower, _) = expval_bounds(x, state0, h, hbar)?;
    let derivative = derivative_refined_lower_bound(x, state0, h, hbar)?;
    Ok(BoundCurve::UnifiedLower {
        direct: Box::new(lower),
        derivative: Box::new(derivative),
    })
}

/// The six bound curves on one KDQ component pair.
#[derive(Debug, Clone)]
pub struct KdqBounds {
    pub re_lower: BoundCurve,
    pub re_upper: BoundCurve,
    pub im_lower: BoundCurve,
    pub im_upper: BoundCurve,
    pub re_derivative: BoundCurve,
    pub im_derivative: BoundCurve,
}

impl KdqBounds {
    pub fn re_unified(&self) -> BoundCurve {
        BoundCurve::UnifiedLower {
            direct: Box::new(self.re_lower.clone()),
            derivative: Box::new(self.re_derivative.clone()),
        }
    }

    pub fn im_unified(&self) -> BoundCurve {
        BoundCurve::UnifiedLower {
            direct: Box::new(self.im_lower.clone()),
            derivative: Box::new(self.im_derivative.clone()),
        }
    }
}

/// Bounds on Re and Im of q_{l,j}(t) = tr{rho A_l B_j(t)}.
///
/// The split operators rho_l, sigma_l carry the real and imaginary parts as
/// expectation values with respect to B_j(t), which evolves in the
/// Heisenberg picture under the generator `-h`. An unnormalized `b_j` is
/// rescaled to unit trace for the bound computation and the trace factor is
/// re-applied to the returned curves.
pub fn kdq_bounds(
    rho: &QuantumState,
    a_ell: &HermitianOperator,
    b_j: &QuantumState,
    h: &HermitianOperator,
    hbar: f64,
) -> Result<KdqBounds> {
    let (rho_l, sigma_l) = split_operators(rho, a_ell)?;
    let b_norm = b_j.normalized();
    let minus_h = h.scaled(-1.0);
    let scale = b_j.trace_scale();

    let (re_lower, re_upper) = expval_bounds(&rho_l, &b_norm, &minus_h, hbar)?;
    let (im_lower, im_upper) = expval_bounds(&sigma_l, &b_norm, &minus_h, hbar)?;
    let re_derivative = derivative_refined_lower_bound(&rho_l, &b_norm, &minus_h, hbar)?;
    let im_derivative = derivative_refined_lower_bound(&sigma_l, &b_norm, &minus_h, hbar)?;

    Ok(KdqBounds {
        re_lower: re_lower.rescaled(scale),
        re_upper: re_upper.rescaled(scale),
        im_lower: im_lower.rescaled(scale),
        im_upper: im_upper.rescaled(scale),
        re_derivative: re_derivative.rescaled(scale),
        im_derivative: im_derivative.rescaled(scale),
    })
}

/// Commutative-limit bound on the TPM joint probability: for [rho, A_l] = 0
/// and A_l != I the minimum eigenvalue of rho_l = A_l rho A_l is zero, so
/// `p_TPM >= r_d cos^2((tau_0 + DeltaL t)/2)`, which never goes negative.
pub fn tpm_limit_bound(
    rho: &QuantumState,
    a_ell: &HermitianOperator,
    b_j: &QuantumState,
    h: &HermitianOperator,
    hbar: f64,
) -> Result<BoundCurve> {
    let comm_norm = max_abs(&commutator(rho.op(), a_ell)?);
    if comm_norm > HERMITICITY_TOL {
        return Err(Error::NonCommuting { norm: comm_norm });
    }
    let identity_defect = max_abs(&(a_ell.entries() - CMatrix::identity(a_ell.dim(), a_ell.dim())));
    if identity_defect <= HERMITICITY_TOL {
        return Err(Error::IdentityProjector);
    }
    let (rho_l, _) = split_operators(rho, a_ell)?;
    let (_, r_d) = rho_l.eigen_range();
    let r_d = r_d.max(0.0);
    let b_norm = b_j.normalized();
    let x0 = b_norm.expect(&rho_l)?;
    let tau0 = tau_interp(0.0, r_d, x0)?.ok_or(Error::OutsideSpectralRange {
        value: x0,
        x_min: 0.0,
        x_max: r_d,
    })?;
    let delta_l = sld(&b_norm, &h.scaled(-1.0), hbar)?.delta_l;
    Ok(BoundCurve::LowerDirect(DirectParams {
        x_min: 0.0,
        x_max: r_d,
        tau0,
        delta_l,
        scale: b_j.trace_scale(),
    }))
}

/// Slack of the Schroedinger-Robertson uncertainty relation:
/// `DX^2 DY^2 - [<{X,Y}/2> - <X><Y>]^2 - <[X,Y]/2i>^2 >= 0`.
pub fn sr_uncertainty_gap(
    x: &HermitianOperator,
    y: &HermitianOperator,
    state: &QuantumState,
) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    let var_x = state.variance(x)?;
    let var_y = state.variance(y)?;
    let mean_x = state.expect(x)?;
    let mean_y = state.expect(y)?;
    // tr{XY rho} = a + ib gives <{X,Y}/2> = a and <[X,Y]/2i> = b.
    let xy = x.entries() * y.entries();
    let c = trace_product(&xy, &state.normalized_entries());
    let covariance = c.re - mean_x * mean_y;
    Ok(var_x * var_y - covariance * covariance - c.im * c.im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::propagator;
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

    fn random_pure(rng: &mut ChaCha8Rng, dim: usize) -> QuantumState {
        let ket: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        QuantumState::pure(&ket).unwrap()
    }

    #[test]
    fn e_interp_branches() {
        assert_abs_diff_eq!(e_interp(0.0, 1.0, -1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(e_interp(0.0, 1.0, 4.0).unwrap(), 0.0);
        assert_abs_diff_eq!(e_interp(0.0, 1.0, PI / 2.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(e_interp(0.0, 1.0, PI / 3.0).unwrap(), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(e_interp(-2.0, 3.0, PI / 2.0).unwrap(), 0.5, epsilon = 1e-15);
        assert!(e_interp(1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn e_interp_monotone_on_arc() {
        let mut prev = f64::INFINITY;
        for k in 0..=1000 {
            let tau = PI * k as f64 / 1000.0;
            let v = e_interp(-0.3, 1.7, tau).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn tau_interp_endpoints_and_midpoint() {
        assert_abs_diff_eq!(tau_interp(0.0, 1.0, 1.0).unwrap().unwrap(), 0.0);
        assert_abs_diff_eq!(tau_interp(0.0, 1.0, 0.0).unwrap().unwrap(), PI);
        assert_abs_diff_eq!(tau_interp(0.0, 1.0, 0.5).unwrap().unwrap(), PI / 2.0);
    }

    #[test]
    fn tau_interp_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let a: f64 = rng.gen_range(-5.0..5.0);
            let b: f64 = a + rng.gen_range(1e-6..10.0);
            let x = rng.gen_range(a..b);
            let tau = tau_interp(a, b, x).unwrap().unwrap();
            let back = e_interp(a, b, tau).unwrap();
            assert!((back - x).abs() < 1e-12, "round trip {a} {b} {x}: {back}");
        }
    }

    #[test]
    fn tau_interp_unreachable_cases() {
        assert!(tau_interp(0.0, 1.0, 1.5).unwrap().is_none());
        assert!(tau_interp(0.0, 1.0, -0.5).unwrap().is_none());
        // degenerate spectrum
        assert_abs_diff_eq!(tau_interp(0.7, 0.7, 0.7).unwrap().unwrap(), 0.0);
        assert!(tau_interp(0.7, 0.7, 0.8).unwrap().is_none());
        // marginally outside gets clamped
        assert!(tau_interp(0.0, 1.0, 1.0 + 4e-10).unwrap().is_some());
    }

    #[test]
    fn variance_bound_endpoints_and_bernoulli() {
        assert_abs_diff_eq!(
            variance_upper_bound(-1.0, 2.0, -1.0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            variance_upper_bound(-1.0, 2.0, 2.0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let p = 0.3;
        assert_abs_diff_eq!(
            variance_upper_bound(0.0, 1.0, p).unwrap(),
            p - p * p,
            epsilon = 1e-15
        );
        assert!(variance_upper_bound(0.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn variance_bound_dominates_true_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let dim = rng.gen_range(2..=6);
            let x = random_hermitian(&mut rng, dim);
            let rho = random_density(&mut rng, dim);
            let (lo, hi) = x.eigen_range();
            let mean = rho.expect(&x).unwrap();
            let bound = variance_upper_bound(lo, hi, mean).unwrap();
            let var = rho.variance(&x).unwrap();
            assert!(var <= bound + 1e-10, "var {var} > bound {bound}");
        }
    }

    #[test]
    fn sld_pure_state_saturates_hamiltonian_dispersion() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in 2..=6 {
            let psi = random_pure(&mut rng, dim);
            let h = random_hermitian(&mut rng, dim);
            let res = sld(&psi, &h, 1.0).unwrap();
            let dh = psi.variance(&h).unwrap().max(0.0).sqrt();
            assert_abs_diff_eq!(res.delta_l, 2.0 * dh, epsilon = 1e-9);
        }
    }

    #[test]
    fn sld_maximally_mixed_vanishes() {
        let dim = 4;
        let mixed =
            QuantumState::density(HermitianOperator::identity(dim).scaled(1.0 / dim as f64))
                .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_hermitian(&mut rng, dim);
        let res = sld(&mixed, &h, 1.0).unwrap();
        assert!(res.l.max_abs_entry() < 1e-12);
        assert_abs_diff_eq!(res.delta_l, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sld_two_qubit_effective_rate() {
        // B_1 = |1><1| of the target qubit under the effective Hamiltonian
        // with omega_L = 1, omega_int = 5: DeltaH = omega_int/2, DeltaL = 5.
        let b1 = QuantumState::pure(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let h = HermitianOperator::new(CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(-0.5, 0.0),
                C64::new(2.5, 0.0),
                C64::new(2.5, 0.0),
                C64::new(0.5, 0.0),
            ],
        ))
        .unwrap();
        let res = sld(&b1, &h, 1.0).unwrap();
        assert_abs_diff_eq!(res.delta_l, 5.0, epsilon = 1e-10);
    }

    #[test]
    fn sld_defining_identity_and_zero_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dim in 2..=6 {
            let state = random_density(&mut rng, dim);
            let h = random_hermitian(&mut rng, dim);
            let res = sld(&state, &h, 1.0).unwrap();
            let rho = state.normalized_entries();
            // (1/2){rho, L} = [H, rho]/(i hbar)
            let lhs = (&rho * res.l.entries() + res.l.entries() * &rho).scale(0.5);
            let rhs = (h.entries() * &rho - &rho * h.entries()) * C64::new(0.0, -1.0);
            assert!(max_abs(&(lhs - rhs)) < 1e-9);
            // <L> = 0
            let mean = state.expect(&res.l).unwrap();
            assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-10);
            // DeltaL <= 2 DeltaH / hbar
            let dh = state.variance(&h).unwrap().max(0.0).sqrt();
            assert!(res.delta_l <= 2.0 * dh + 1e-9);
        }
    }

    #[test]
    fn sld_handles_rank_deficient_states() {
        // rank-2 state on a 4-dim space: zero-probability pairs take L_ij = 0
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = CMatrix::from_fn(4, 2, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let w = &g * g.adjoint();
        let tr: f64 = w.diagonal().iter().map(|z| z.re).sum();
        let state =
            QuantumState::unnormalized(HermitianOperator::symmetrized(w.scale(1.0 / tr))).unwrap();
        let h = random_hermitian(&mut rng, 4);
        let res = sld(&state, &h, 1.0).unwrap();
        assert!(res.delta_l.is_finite());
        let rho = state.normalized_entries();
        let lhs = (&rho * res.l.entries() + res.l.entries() * &rho).scale(0.5);
        let rhs = (h.entries() * &rho - &rho * h.entries()) * C64::new(0.0, -1.0);
        assert!(max_abs(&(lhs - rhs)) < 1e-9);
    }

    #[test]
    fn expval_bounds_frozen_dynamics() {
        // [H, state] = 0 -> DeltaL = 0 -> both curves constant at <X>_0.
        let state = QuantumState::density(HermitianOperator::diagonal(&[0.8, 0.2])).unwrap();
        let h = HermitianOperator::diagonal(&[1.0, -1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_hermitian(&mut rng, 2);
        let x0 = state.expect(&x).unwrap();
        let (lower, upper) = expval_bounds(&x, &state, &h, 1.0).unwrap();
        for &t in &[0.0, 0.5, 3.0, 10.0] {
            assert_abs_diff_eq!(lower.value(t), x0, epsilon = 1e-9);
            assert_abs_diff_eq!(upper.value(t), x0, epsilon = 1e-9);
        }
    }

    #[test]
    fn expval_bounds_contain_trajectory() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let dim = rng.gen_range(2..=6);
            let x = random_hermitian(&mut rng, dim);
            let state = random_density(&mut rng, dim);
            let h = random_hermitian(&mut rng, dim);
            let (lower, upper) = expval_bounds(&x, &state, &h, 1.0).unwrap();
            let unified = unified_lower_bound(&x, &state, &h, 1.0).unwrap();
            for k in 0..200 {
                let t = k as f64 * 0.02;
                let u = propagator(&h, t, 1.0);
                let evolved = state.evolved(&u).unwrap();
                let value = evolved.expect(&x).unwrap();
                assert!(value >= lower.value(t) - 1e-9);
                assert!(value <= upper.value(t) + 1e-9);
                assert!(value >= unified.value(t) - 1e-9);
            }
        }
    }

    #[test]
    fn curves_start_at_initial_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dim = 4;
        let x = random_hermitian(&mut rng, dim);
        let state = random_density(&mut rng, dim);
        let h = random_hermitian(&mut rng, dim);
        let x0 = state.expect(&x).unwrap();
        let (lower, upper) = expval_bounds(&x, &state, &h, 1.0).unwrap();
        let derivative = derivative_refined_lower_bound(&x, &state, &h, 1.0).unwrap();
        assert_abs_diff_eq!(lower.value(0.0), x0, epsilon = 1e-10);
        assert_abs_diff_eq!(upper.value(0.0), x0, epsilon = 1e-10);
        assert_abs_diff_eq!(derivative.value(0.0), x0, epsilon = 1e-10);
    }

    #[test]
    fn lower_direct_clamps_at_x_min() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let dim = 3;
        let x = random_hermitian(&mut rng, dim);
        let state = random_density(&mut rng, dim);
        let h = random_hermitian(&mut rng, dim);
        let (lower, _) = expval_bounds(&x, &state, &h, 1.0).unwrap();
        let (x_min, _) = x.eigen_range();
        let delta_l = lower.delta_l();
        let t_clamp = (PI - lower.tau0()) / delta_l;
        for &t in &[t_clamp, t_clamp + 0.5, t_clamp + 5.0] {
            assert_abs_diff_eq!(lower.value(t), x_min, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_bound_conserved_observable() {
        // [X, H] = 0 -> Xdot = 0 -> constant curve at <X>_0.
        let x = HermitianOperator::diagonal(&[1.0, 2.0, 3.0]);
        let h = HermitianOperator::diagonal(&[0.3, -0.1, 0.9]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let state = random_density(&mut rng, 3);
        let x0 = state.expect(&x).unwrap();
        let curve = derivative_refined_lower_bound(&x, &state, &h, 1.0).unwrap();
        for &t in &[0.0, 1.0, 7.0] {
            assert_abs_diff_eq!(curve.value(t), x0, epsilon = 1e-9);
        }
    }

    #[test]
    fn derivative_bound_below_trajectory_and_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let dim = rng.gen_range(2..=5);
            let x = random_hermitian(&mut rng, dim);
            let state = random_density(&mut rng, dim);
            let h = random_hermitian(&mut rng, dim);
            let curve = derivative_refined_lower_bound(&x, &state, &h, 1.0).unwrap();
            for k in 0..200 {
                let t = k as f64 * 0.02;
                let u = propagator(&h, t, 1.0);
                let value = state.evolved(&u).unwrap().expect(&x).unwrap();
                assert!(value >= curve.value(t) - 1e-9);
            }
            // initial slope equals <Xdot>_0 (validates the 1/DeltaL prefactor)
            let xdot = rate_observable(&x, &h, 1.0).unwrap();
            let slope_expected = state.expect(&xdot).unwrap();
            let eps = 1e-6;
            let slope = (curve.value(eps) - curve.value(0.0)) / eps;
            assert!(
                (slope - slope_expected).abs() < 1e-4,
                "slope {slope} vs <Xdot>_0 {slope_expected}"
            );
        }
    }

    #[test]
    fn unified_is_pointwise_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let dim = 4;
        let x = random_hermitian(&mut rng, dim);
        let state = random_density(&mut rng, dim);
        let h = random_hermitian(&mut rng, dim);
        let (lower, _) = expval_bounds(&x, &state, &h, 1.0).unwrap();
        let derivative = derivative_refined_lower_bound(&x, &state, &h, 1.0).unwrap();
        let unified = unified_lower_bound(&x, &state, &h, 1.0).unwrap();
        for k in 0..300 {
            let t = k as f64 * 0.01;
            let expected = lower.value(t).max(derivative.value(t));
            assert_abs_diff_eq!(unified.value(t), expected, epsilon = 1e-12);
            assert!(unified.value(t) >= lower.value(t));
            assert!(unified.value(t) >= derivative.value(t));
        }
    }

    #[test]
    fn kdq_bounds_commuting_has_zero_im_curves() {
        let rho = QuantumState::density(HermitianOperator::diagonal(&[0.6, 0.4])).unwrap();
        let a1 = HermitianOperator::diagonal(&[0.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let b = random_pure(&mut rng, 2);
        let h = random_hermitian(&mut rng, 2);
        let bounds = kdq_bounds(&rho, &a1, &b, &h, 1.0).unwrap();
        for &t in &[0.0, 0.7, 2.0] {
            assert_abs_diff_eq!(bounds.im_lower.value(t), 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(bounds.im_upper.value(t), 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(bounds.im_derivative.value(t), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn kdq_bounds_respect_scale_factor() {
        // Rank-2 B_j with trace 2: bounds start at the unscaled Re q(0).
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let rho = random_density(&mut rng, 4);
        let a = random_hermitian(&mut rng, 4);
        let a1 = crate::linop::spectral_decompose(&a).projectors()[0].clone();
        let p = HermitianOperator::diagonal(&[1.0, 1.0, 0.0, 0.0]);
        let b = QuantumState::unnormalized(p.clone()).unwrap();
        let h = random_hermitian(&mut rng, 4);
        let bounds = kdq_bounds(&rho, &a1, &b, &h, 1.0).unwrap();
        let u = crate::linop::propagator(&h, 0.0, 1.0);
        let q0 = crate::kdq::kdq_value(&rho, &a1, &p, &u).unwrap();
        assert_abs_diff_eq!(bounds.re_lower.value(0.0), q0.re, epsilon = 1e-9);
        assert_abs_diff_eq!(bounds.im_lower.value(0.0), q0.im, epsilon = 1e-9);
    }

    #[test]
    fn tpm_limit_bound_is_nonnegative_and_valid() {
        let rho = QuantumState::density(HermitianOperator::diagonal(&[0.3, 0.25, 0.45])).unwrap();
        let a1 = HermitianOperator::diagonal(&[0.0, 1.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let b = random_pure(&mut rng, 3);
        let h = random_hermitian(&mut rng, 3);
        let curve = tpm_limit_bound(&rho, &a1, &b, &h, 1.0).unwrap();
        for k in 0..400 {
            let t = k as f64 * 0.01;
            assert!(curve.value(t) >= -1e-12);
            let u = propagator(&h, t, 1.0);
            let p = crate::kdq::tpm_joint(&rho, &a1, b.op(), &u).unwrap();
            assert!(
                p >= curve.value(t) - 1e-9,
                "t={t}: p={p} < {}",
                curve.value(t)
            );
        }
    }

    #[test]
    fn tpm_limit_bound_rejects_identity_and_noncommuting() {
        let rho = QuantumState::density(HermitianOperator::diagonal(&[0.5, 0.5])).unwrap();
        let id = HermitianOperator::identity(2);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let b = random_pure(&mut rng, 2);
        let h = random_hermitian(&mut rng, 2);
        assert!(matches!(
            tpm_limit_bound(&rho, &id, &b, &h, 1.0),
            Err(Error::IdentityProjector)
        ));
        let minus = QuantumState::pure(&[
            C64::new(1.0 / 2.0_f64.sqrt(), 0.0),
            C64::new(-1.0 / 2.0_f64.sqrt(), 0.0),
        ])
        .unwrap();
        let p1 = HermitianOperator::diagonal(&[0.0, 1.0]);
        assert!(matches!(
            tpm_limit_bound(&minus, &p1, &b, &h, 1.0),
            Err(Error::NonCommuting { .. })
        ));
    }

    #[test]
    fn sr_gap_self_and_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let x = random_hermitian(&mut rng, 3);
        let rho = random_density(&mut rng, 3);
        // Y = X: Cauchy-Schwarz equality with itself
        let gap = sr_uncertainty_gap(&x, &x, &rho).unwrap();
        assert_abs_diff_eq!(gap, 0.0, epsilon = 1e-10);
        for _ in 0..100 {
            let dim = rng.gen_range(2..=5);
            let x = random_hermitian(&mut rng, dim);
            let y = random_hermitian(&mut rng, dim);
            let rho = random_density(&mut rng, dim);
            assert!(sr_uncertainty_gap(&x, &y, &rho).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn sr_gap_pauli_eigenstate() {
        // X = Z-like, state = its excited eigenstate, Y = X-Pauli-like:
        // DX = 0 and both correlation terms vanish, so the gap is 0;
        // hand-checkable 2x2 expansion.
        let z = HermitianOperator::diagonal(&[-1.0, 1.0]);
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
        let excited = QuantumState::pure(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let gap = sr_uncertainty_gap(&z, &flip, &excited).unwrap();
        assert_abs_diff_eq!(gap, 0.0, epsilon = 1e-12);
        assert!(gap >= -1e-10);
    }

    #[test]
    fn im_threshold_first_touched_by_direct_bound() {
        // Two-qubit gate numbers (omega_L = 1, omega_int = 5, s_th = 0.2):
        // the direct machinery opens the |Im q| > s_th window at
        // (pi/2 - arccos(0.8))/5, well before the derivative-refined lower
        // curve ever reaches -s_th.
        let inv = 1.0 / 2.0_f64.sqrt();
        let rho = QuantumState::pure(&[C64::new(inv, 0.0), C64::new(-inv, 0.0)]).unwrap();
        let a1 = HermitianOperator::diagonal(&[0.0, 1.0]);
        let b1 = QuantumState::pure(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let h = HermitianOperator::new(CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(-0.5, 0.0),
                C64::new(2.5, 0.0),
                C64::new(2.5, 0.0),
                C64::new(0.5, 0.0),
            ],
        ))
        .unwrap();
        let bounds = kdq_bounds(&rho, &a1, &b1, &h, 1.0).unwrap();
        let s_th = 0.2;
        let first_reach = |f: &dyn Fn(f64) -> f64, target: f64| -> f64 {
            let mut k = 0u64;
            loop {
                let t = k as f64 * 1e-5;
                assert!(t < 3.0, "curve never reaches {target}");
                if f(t) <= target {
                    return t;
                }
                k += 1;
            }
        };
        let t_direct = first_reach(&|t| bounds.im_lower.value(t), -s_th);
        let t_deriv = first_reach(&|t| bounds.im_derivative.value(t), -s_th);
        let expected = (PI / 2.0 - 0.8_f64.acos()) / 5.0;
        assert!((t_direct - expected).abs() < 1e-4);
        assert!(
            t_direct < t_deriv,
            "direct {t_direct} should open the threshold window before the derivative variant {t_deriv}"
        );
    }

    #[test]
    fn bound_curve_csv_sampling() {
        let curve = BoundCurve::LowerDirect(DirectParams {
            x_min: 0.0,
            x_max: 1.0,
            tau0: 0.5,
            delta_l: 2.0,
            scale: 1.0,
        });
        let mut buf = Vec::new();
        curve.write_csv(&mut buf, &[0.0, 0.1, 0.2]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,value,kind");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[2], "lower_direct");
        let v: f64 = row[1].parse().unwrap();
        assert_abs_diff_eq!(v, curve.value(0.0), epsilon = 1e-12);
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn rate_bound_along_trajectories() {
        // |d<X>/dt| = |<[X,H]/i hbar>| <= DeltaL * DeltaX at every grid point.
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..20 {
            let dim = rng.gen_range(2..=5);
            let x = random_hermitian(&mut rng, dim);
            let state = random_density(&mut rng, dim);
            let h = random_hermitian(&mut rng, dim);
            let delta_l = sld(&state, &h, 1.0).unwrap().delta_l;
            let xdot = rate_observable(&x, &h, 1.0).unwrap();
            for k in 0..100 {
                let t = k as f64 * 0.03;
                let u = propagator(&h, t, 1.0);
                let evolved = state.evolved(&u).unwrap();
                let rate = evolved.expect(&xdot).unwrap().abs();
                let dx = evolved.variance(&x).unwrap().max(0.0).sqrt();
                assert!(rate <= delta_l * dx + 1e-9);
            }
        }
    }
}
