//! Minimal times at which the non-classicality criteria can first be met:
//! the earliest time the lower bound on Re q reaches zero, the earliest time
//! the bounds on Im q reach a threshold, the Mandelstam-Tamm special case,
//! and the numeric zero crossing of the derivative-refined bound.
//!
//! An unreachable target is a first-class result (`time: None`), not an
//! error: parameter sweeps need it as data.

use std::f64::consts::PI;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kdq::split_operators;
use crate::linop::{HermitianOperator, QuantumState};
use crate::srbounds::{sld, tau_interp, BoundCurve, BoundKind, DELTA_L_FLOOR};

/// Which criterion a crossing time refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Re q < 0 can first be met (Eq.-of-motion bound reaches zero).
    ReNegative,
    /// |Im q| > s_th can first be met.
    ImThreshold,
    /// The derivative-refined lower bound on Re q reaches zero.
    DerivativeZero,
}

impl Criterion {
    pub fn as_str(&self) -> &'static str {
        match self {
            Criterion::ReNegative => "re_negative",
            Criterion::ImThreshold => "im_threshold",
            Criterion::DerivativeZero => "derivative_zero",
        }
    }
}

impl Serialize for Criterion {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

fn serialize_unreachable<S: Serializer>(
    value: &Option<f64>,
    serializer: S,
) -> std::result::Result<S::Ok, S::Error> {
    match value {
        Some(v) => serializer.serialize_f64(*v),
        None => serializer.serialize_str("unreachable"),
    }
}

/// A minimal-time result for one criterion and outcome pair, with the bound
/// parameters that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct CrossingTime {
    pub criterion: Criterion,
    pub ell: usize,
    pub j: usize,
    #[serde(serialize_with = "serialize_unreachable")]
    pub time: Option<f64>,
    #[serde(rename = "deltaL")]
    pub delta_l: f64,
    pub tau0: f64,
    #[serde(serialize_with = "serialize_unreachable")]
    pub tau_target: Option<f64>,
}

impl CrossingTime {
    pub fn is_reachable(&self) -> bool {
        self.time.is_some()
    }
}

/// Minimal time for Re q_{l,j} to reach zero:
/// `T = (tau(rho_l, 0) - tau_0) / DeltaL_j`.
///
/// Returns time 0 when Re q(0) < 0 already; unreachable when the spectrum of
/// rho_l stays positive or the dynamics are frozen (DeltaL = 0).
pub fn time_to_negativity(
    rho: &QuantumState,
    a_ell: &HermitianOperator,
    b_j: &QuantumState,
    h: &HermitianOperator,
    hbar: f64,
    pair: (usize, usize),
) -> Result<CrossingTime> {
    let (rho_l, _) = split_operators(rho, a_ell)?;
    let (r_min, r_max) = rho_l.eigen_range();
    let b_norm = b_j.normalized();
    let x0 = b_norm.expect(&rho_l)?;
    let delta_l = sld(&b_norm, &h.scaled(-1.0), hbar)?.delta_l;
    let tau0 = tau_interp(r_min, r_max, x0)?.ok_or(Error::OutsideSpectralRange {
        value: x0,
        x_min: r_min,
        x_max: r_max,
    })?;
    let tau_target = tau_interp(r_min, r_max, 0.0)?;

    let time = if x0 < 0.0 {
        Some(0.0)
    } else {
        match tau_target {
            Some(tt) if delta_l > DELTA_L_FLOOR => Some(((tt - tau0) / delta_l).max(0.0)),
            _ => None,
        }
    };
    Ok(CrossingTime {
        criterion: Criterion::ReNegative,
        ell: pair.0,
        j: pair.1,
        time,
        delta_l,
        tau0,
        tau_target,
    })
}

/// Minimal time for |Im q_{l,j}| to reach `s_th`, taking the earlier of the
/// +s_th target (through the upper bound) and the -s_th target (through the
/// lower bound); criterion (ii) is two-sided.
///
/// Unreachable when s_th exceeds the largest |eigenvalue| of sigma_l or the
/// dynamics are frozen.
pub fn time_to_im_threshold(
    rho: &QuantumState,
    a_ell: &HermitianOperator,
    b_j: &QuantumState,
    h: &HermitianOperator,
    hbar: f64,
    s_th: f64,
    pair: (usize, usize),
) -> Result<CrossingTime> {
    if s_th < 0.0 {
        return Err(Error::InvalidParameter {
            reason: "s_th must be nonnegative",
        });
    }
    let (_, sigma_l) = split_operators(rho, a_ell)?;
    let (s_min, s_max) = sigma_l.eigen_range();
    let b_norm = b_j.normalized();
    let y0 = b_norm.expect(&sigma_l)?;
    let delta_l = sld(&b_norm, &h.scaled(-1.0), hbar)?.delta_l;
    let tau0 = tau_interp(s_min, s_max, y0)?.ok_or(Error::OutsideSpectralRange {
        value: y0,
        x_min: s_min,
        x_max: s_max,
    })?;
    // The threshold applies to Im q = scale * <sigma_l>; fold the trace
    // scale of an unnormalized B_j into the target.
    let target = s_th / b_j.trace_scale();

    if y0.abs() > target {
        return Ok(CrossingTime {
            criterion: Criterion::ImThreshold,
            ell: pair.0,
            j: pair.1,
            time: Some(0.0),
            delta_l,
            tau0,
            tau_target: Some(tau0),
        });
    }

    let mut best: Option<(f64, f64)> = None; // (time, tau_target)
    if delta_l > DELTA_L_FLOOR {
        if let Some(tau_plus) = tau_interp(s_min, s_max, target)? {
            // upper curve E(tau0 - DeltaL t) rises to +s_th
            let t = ((tau0 - tau_plus) / delta_l).max(0.0);
            best = Some((t, tau_plus));
        }
        if let Some(tau_minus) = tau_interp(s_min, s_max, -target)? {
            // lower curve E(tau0 + DeltaL t) falls to -s_th
            let t = ((tau_minus - tau0) / delta_l).max(0.0);
            if best.is_none_or(|(tb, _)| t < tb) {
                best = Some((t, tau_minus));
            }
        }
    }
    Ok(CrossingTime {
        criterion: Criterion::ImThreshold,
        ell: pair.0,
        j: pair.1,
        time: best.map(|(t, _)| t),
        delta_l,
        tau0,
        tau_target: best.map(|(_, tau)| tau),
    })
}

/// The Mandelstam-Tamm time `hbar pi / (2 DeltaH)`, the minimal time for a
/// pure state to evolve to an orthogonal one. [`time_to_negativity`]
/// specializes to this for a pure rho, A = identity, B_j = rho.
pub fn mandelstam_tamm_time(delta_h: f64, hbar: f64) -> Result<f64> {
    if delta_h <= 0.0 {
        return Err(Error::ZeroDispersion);
    }
    Ok(hbar * PI / (2.0 * delta_h))
}

/// Smallest t >= 0 where a derivative-refined lower bound reaches zero,
/// located by a scan over the sinusoidal branch plus bisection, then exactly
/// on the terminal linear branch. Unreachable when the curve stays positive
/// and its terminal slope is nonnegative.
pub fn derivative_bound_zero_crossing(
    curve: &BoundCurve,
    pair: (usize, usize),
) -> Result<CrossingTime> {
    let BoundCurve::LowerDerivative(params) = curve else {
        return Err(Error::WrongCurveKind {
            expected: BoundKind::LowerDerivative.as_str(),
            found: curve.kind().as_str(),
        });
    };
    let delta_l = params.delta_l;
    let tau0 = params.tau0;
    let make = |time: Option<f64>| CrossingTime {
        criterion: Criterion::DerivativeZero,
        ell: pair.0,
        j: pair.1,
        time,
        delta_l,
        tau0,
        tau_target: None,
    };

    if curve.value(0.0) <= 0.0 {
        return Ok(make(Some(0.0)));
    }
    if delta_l <= DELTA_L_FLOOR {
        // constant (or purely linear) frozen-rate curve
        let slope = curve.value(1.0) - curve.value(0.0);
        if slope < 0.0 {
            return Ok(make(Some(-curve.value(0.0) / slope)));
        }
        return Ok(make(None));
    }

    // On [0, t_star] the integrand still varies (tau0 + DeltaL t <= pi) and
    // the curve is concave, so a sign scan cannot miss the first crossing.
    let t_star = (PI - tau0).max(0.0) / delta_l;
    if t_star > 0.0 {
        let n = 4096;
        let mut prev_t = 0.0;
        for k in 1..=n {
            let t = t_star * k as f64 / n as f64;
            if curve.value(t) < 0.0 {
                let mut lo = prev_t;
                let mut hi = t;
                while hi - lo > 1e-12 {
                    let mid = 0.5 * (lo + hi);
                    if curve.value(mid) < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Ok(make(Some(0.5 * (lo + hi))));
            }
            prev_t = t;
        }
    }
    // Terminal branch: linear with slope scale * dot_min.
    let v_star = curve.value(t_star);
    if v_star <= 0.0 {
        return Ok(make(Some(t_star)));
    }
    let slope = params.scale * params.dot_min;
    if slope < 0.0 {
        return Ok(make(Some(t_star + v_star / (-slope))));
    }
    Ok(make(None))
}
