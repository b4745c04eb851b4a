//! Named property checks over seeded random instances: the machinery behind
//! the `verify` CLI command and the acceptance suite. Each check sweeps
//! instances and reports case/failure counts plus its worst violation.

use std::f64::consts::PI;

use crate::error::Result;
use crate::kdq::{kdq_table, split_operators, tpm_joint};
use crate::linop::{max_abs, propagator, spectral_decompose, CMatrix, QuantumState};
use crate::oracle::{
    first_im_exceeds, first_re_negative, random_instance, saturation_instance, trajectory,
    CommutationClass, InstanceOptions, StatePurity,
};
use crate::qsltimes::{time_to_im_threshold, time_to_negativity};
use crate::srbounds::{
    derivative_refined_lower_bound, e_interp, expval_bounds, kdq_bounds, rate_observable, sld,
    sr_uncertainty_gap, tau_interp, tpm_limit_bound, unified_lower_bound, variance_upper_bound,
};

/// Result of one named check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Worst violation observed (0 when every case held with margin).
    pub worst: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

struct Recorder {
    name: &'static str,
    cases: usize,
    failures: usize,
    worst: f64,
}

impl Recorder {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            worst: 0.0,
        }
    }

    /// Record one case with its violation magnitude against a tolerance.
    fn case(&mut self, violation: f64, tol: f64) {
        self.cases += 1;
        self.worst = self.worst.max(violation);
        if violation > tol {
            self.failures += 1;
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name,
            cases: self.cases,
            failures: self.failures,
            worst: self.worst,
        }
    }
}

/// Configuration of the suite sweep.
#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub base_seed: u64,
    /// Number of random instances swept per check (spread over the dims).
    pub instances: usize,
    pub dim_min: usize,
    pub dim_max: usize,
    pub hbar: f64,
    /// Grid points per trajectory in the bound-validity sweep.
    pub grid_points: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            base_seed: 1,
            instances: 200,
            dim_min: 2,
            dim_max: 6,
            hbar: 1.0,
            grid_points: 2000,
        }
    }
}

impl SuiteConfig {
    fn dim_for(&self, k: usize) -> usize {
        self.dim_min + k % (self.dim_max - self.dim_min + 1)
    }
}

/// Bound validity: exact trajectories never cross the direct, derivative or
/// unified curves on dense grids over one characteristic period.
pub fn check_bound_validity(cfg: &SuiteConfig) -> Result<CheckOutcome> {
    let mut rec = Recorder::new("bound_validity");
    for k in 0..cfg.instances {
        let dim = cfg.dim_for(k);
        let inst = random_instance(dim, cfg.base_seed + k as u64, InstanceOptions::default())?;
        let period = inst.characteristic_period(cfg.hbar);
        let traj = trajectory(&inst, period, cfg.grid_points, cfg.hbar)?;
        for (ell, ao) in inst.a.outcomes().iter().enumerate() {
            for (j, bo) in inst.b.outcomes().iter().enumerate() {
                let b_state = QuantumState::unnormalized(bo.projector.clone())?;
                let bounds = kdq_bounds(&inst.rho, &ao.projector, &b_state, &inst.h, cfg.hbar)?;
                let re_unified = bounds.re_unified();
                for (idx, &t) in traj.times().iter().enumerate() {
                    let q = traj.value(idx, ell, j);
                    let worst = [
                        bounds.re_lower.value(t) - q.re,
                        q.re - bounds.re_upper.value(t),
                        bounds.im_lower.value(t) - q.im,
                        q.im - bounds.im_upper.value(t),
                        bounds.re_derivative.value(t) - q.re,
                        bounds.im_derivative.value(t) - q.im,
                        re_unified.value(t) - q.re,
                    ]
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max);
                    rec.case(worst.max(0.0), 1e-9);
                }
            }
        }
    }
    Ok(rec.finish())
}

/// Saturation: the two-level constructions achieve the bounds with equality
/// on the designated branch.
pub fn check_saturation(cfg: &SuiteConfig) -> Result<CheckOutcome> {
    let mut rec = Recorder::new("saturation_equality");
    let mut rng_seed = cfg.base_seed;
    for k in 0..cfg.instances.min(64) {
        // deterministic parameter sweep, no RNG needed
        rng_seed += 1;
        let x_min = -1.0 + (k as f64 * 0.37).sin();
        let x_max = x_min + 0.5 + (k as f64 * 0.11).cos().abs() * 2.0;
        let tau0 = PI * ((k as f64 * 0.619).fract());
        let omega = 0.5 + (rng_seed % 5) as f64 * 0.6;
        let (x, rho0, h) = saturation_instance(x_min, x_max, tau0, omega)?;
        let (lower, _) = expval_bounds(&x, &rho0, &h, 1.0)?;
        let t_end = (PI - tau0) / omega;
        for i in 0..50 {
            let t = t_end * i as f64 / 49.0;
            let u = propagator(&h, t, 1.0);
            let value = rho0.evolved(&u)?.expect(&x)?;
            rec.case((value - lower.value(t)).abs(), 1e-10);
        }
    }
    Ok(rec.finish())
}

/// DeltaL laws: time invariance under the evolution, the 2 DeltaH / hbar
/// ceiling, and equality for pure states.
pub fn check_delta_l_laws(cfg: &SuiteConfig) -> Result<CheckOutcome> {
    let mut rec = Recorder::new("delta_l_laws");
    for k in 0..cfg.instances {
        let dim = cfg.dim_for(k);
        let mixed = random_instance(dim, cfg.base_seed + k as u64, InstanceOptions::default())?;
        let d0 = sld(&mixed.rho, &mixed.h, cfg.hbar)?.delta_l;
        for i in 1..=5 {
            let t = mixed.characteristic_period(cfg.hbar) * i as f64 / 5.0;
            let u = propagator(&mixed.h, t, cfg.hbar);
            let evolved = mixed.rho.evolved(&u)?;
            let dt = sld(&evolved, &mixed.h, cfg.hbar)?.delta_l;
            rec.case((dt - d0).abs(), 1e-9);
        }
        let dh = mixed.rho.variance(&mixed.h)?.max(0.0).sqrt();
        rec.case(d0 - 2.0 * dh / cfg.hbar, 1e-9);

        let pure = random_instance(
            dim,
            cfg.base_seed + 10_000 + k as u64,
            InstanceOptions {
                purity: StatePurity::Pure,
                commutation: CommutationClass::NonCommuting,
            },
        )?;
        let dl = sld(&pure.rho, &pure.h, cfg.hbar)?.delta_l;
        let dh = pure.rho.variance(&pure.h)?.max(0.0).sqrt();
        rec.case((dl - 2.0 * dh / cfg.hbar).abs(), 1e-9);
    }
    Ok(rec.finish())
}

/// Rate bound |d<X>/dt| <= DeltaL DeltaX and the variance upper bound along
/// trajectories.
pub fn check_rate_and_variance_bounds(cfg: &SuiteConfig) -> Result<CheckOutcome> {
    let mut rec = Recorder::new("rate_and_variance_bounds");
    for k in 0..cfg.instances {
        let dim = cfg.dim_for(k);
        let inst = random_instance(dim, cfg.base_seed + k as u64, InstanceOptions::default())?;
        let x = inst.b.observable();
        let delta_l = sld(&inst.rho, &inst.h, cfg.hbar)?.delta_l;
        let xdot = rate_observable(&x, &inst.h, cfg.hbar)?;
        let (x_min, x_max) = x.eigen_range();
        for i in 0..25 {
            let t = inst.characteristic_period(cfg.hbar) * i as f64 / 24.0;
            let u = propagator(&inst.h, t, cfg.hbar);
            let evolved = inst.rho.evolved(&u)?;
            let rate = evolved.expect(&xdot)?.abs();
            let var = evolved.variance(&x)?.max(0.0);
            rec.case(rate - delta_l * var.sqrt(), 1e-9);
            let mean = evolved.expect(&x)?;
            let vub = variance_upper_bound(x_min, x_max, mean.clamp(x_min, x_max))?;
            rec.case(var - vub, 1e-10);
        }
    }
    Ok(rec.finish())
}

/// The E / tau round trip and the monotonicity of E on [0, pi].
pub fn check_interpolation_round_trip(cfg: &SuiteConfig) -> Result<CheckOutcome> {
    let mut rec = Recorder::new("interpolation_round_trip");
    for k in 0..cfg.instances.max(1000) {
        let a = -3.0 + 6.0 * ((k as f64 * 0.7391).fract());
        let b = a + 1e-3 + 5.0 * ((k as f64 * 0.2113).fract());
        let x = a + (b - a) * ((k as f64 * 0.5471).fract());
        let tau = tau_interp(a, b, x)?.expect("x lies inside [a, b]");
        rec.case((e_interp(a, b, tau)? - x).abs(), 1e-12);
    }
    let mut prev = f64::INFINITY;
    for i in 0..=256 {
        let v = e_interp(-1.3, 2.1, PI * i as f64 / 256.0)?;
        rec.case(v - prev, 0.0);
        prev = v;
    }
    Ok(rec.finish())
}

/// Schroedinger-Robertson gap nonnegativity over random triples.
pub fn check_sr_gap(cfg: &SuiteConfig) -> Result<CheckOutcome> {
    let mut rec = Recorder::new("sr_gap_nonnegative");
    let n = cfg.instances.max(500);
    for k in 0..n {
        let dim = cfg.dim_for(k);
        let inst = random_instance(
            dim,
            cfg.base_seed + 20_000 + k as u64,
            InstanceOptions::default(),
        )?;
        let x = inst.a.observable();
        let y = inst.b.observable();
        let gap = sr_uncertainty_gap(&x, &y, &inst.rho)?;
        rec.case(-gap, 1e-10);
    }
    Ok(rec.finish())
}

/// KDQ table structure: normalization, unperturbed marginals, linearity in
/// the state, and the split-operator identity for real and imaginary parts.
pub fn check_table_structure(cfg: &SuiteConfig) -> Result<CheckOutcome> {
    let mut rec = Recorder::new("kdq_table_structure");
    for k in 0..cfg.instances.min(100) {
        let dim = cfg.dim_for(k);
        let inst = random_instance(
            dim,
            cfg.base_seed + 30_000 + k as u64,
            InstanceOptions::default(),
        )?;
        let period = inst.characteristic_period(cfg.hbar);
        let grid: Vec<f64> = (0..16).map(|i| period * i as f64 / 15.0).collect();
        let table = kdq_table(&inst.rho, &inst.a, &inst.b, &inst.h, &grid, 0.2, cfg.hbar)?;

        // linearity in the state: table(a rho1 + (1-a) rho2) entrywise
        let other = random_instance(
            dim,
            cfg.base_seed + 31_000 + k as u64,
            InstanceOptions::default(),
        )?;
        let alpha = 0.4;
        let blended = QuantumState::density(crate::linop::HermitianOperator::symmetrized(
            inst.rho.op().entries().scale(alpha) + other.rho.op().entries().scale(1.0 - alpha),
        ))?;
        let table_other = kdq_table(&other.rho, &inst.a, &inst.b, &inst.h, &grid, 0.2, cfg.hbar)?;
        let table_blend = kdq_table(&blended, &inst.a, &inst.b, &inst.h, &grid, 0.2, cfg.hbar)?;
        for ((eb, e1), e2) in table_blend
            .entries()
            .iter()
            .zip(table.entries())
            .zip(table_other.entries())
        {
            let lin = e1.value * alpha + e2.value * (1.0 - alpha);
            rec.case((eb.value - lin).norm(), 1e-9);
        }
        for (idx, &t) in grid.iter().enumerate() {
            let total = table.total(idx);
            rec.case((total.re - 1.0).abs().max(total.im.abs()), 1e-9);
            let u = propagator(&inst.h, t, cfg.hbar);
            for (ell, ao) in inst.a.outcomes().iter().enumerate() {
                let marg = table.marginal_ell(idx, ell);
                let expected = inst.rho.expect(&ao.projector)?;
                rec.case((marg.re - expected).abs().max(marg.im.abs()), 1e-9);
                for (j, bo) in inst.b.outcomes().iter().enumerate() {
                    let e = table.entry(idx, ell, j);
                    let (rho_l, sigma_l) = split_operators(&inst.rho, &ao.projector)?;
                    let b_t = crate::linop::heisenberg(&bo.projector, &u)?;
                    let re = crate::linop::trace_product(rho_l.entries(), b_t.entries()).re;
                    let im = crate::linop::trace_product(sigma_l.entries(), b_t.entries()).re;
                    rec.case((e.value.re - re).abs().max((e.value.im - im).abs()), 1e-10);
                }
            }
            for (j, bo) in inst.b.outcomes().iter().enumerate() {
                let marg = table.marginal_j(idx, j);
                let b_t = crate::linop::heisenberg(&bo.projector, &u)?;
                let expected = inst.rho.expect(&b_t)?;
                rec.case((marg.re - expected).abs().max(marg.im.abs()), 1e-9);
            }
        }
    }
    Ok(rec.finish())
}

/// Commutative limit: KDQ = TPM entrywise, zero imaginary parts, and a
/// nonnegative TPM-limit curve below the joint probabilities.
pub fn check_commutative_limit(cfg: &SuiteConfig) -> Result<CheckOutcome> {
    let mut rec = Recorder::new("commutative_limit");
    for k in 0..cfg.instances.min(100) {
        let dim = cfg.dim_for(k);
        let inst = random_instance(
            dim,
            cfg.base_seed + 40_000 + k as u64,
            InstanceOptions {
                purity: StatePurity::Mixed,
                commutation: CommutationClass::Commuting,
            },
        )?;
        let period = inst.characteristic_period(cfg.hbar);
        let grid: Vec<f64> = (0..32).map(|i| period * i as f64 / 31.0).collect();
        for &t in &grid {
            let u = propagator(&inst.h, t, cfg.hbar);
            for ao in inst.a.outcomes() {
                for bo in inst.b.outcomes() {
                    let q = crate::kdq::kdq_value(&inst.rho, &ao.projector, &bo.projector, &u)?;
                    let p = tpm_joint(&inst.rho, &ao.projector, &bo.projector, &u)?;
                    rec.case((q.re - p).abs().max(q.im.abs()), 1e-9);
                }
            }
        }
        for ao in inst.a.outcomes() {
            let identity_like =
                max_abs(&(ao.projector.entries() - CMatrix::identity(dim, dim))) < 1e-9;
            if identity_like {
                continue;
            }
            for bo in inst.b.outcomes() {
                let b_state = QuantumState::unnormalized(bo.projector.clone())?;
                let curve = tpm_limit_bound(&inst.rho, &ao.projector, &b_state, &inst.h, cfg.hbar)?;
                for &t in &grid {
                    rec.case(-curve.value(t), 1e-12);
                    let u = propagator(&inst.h, t, cfg.hbar);
                    let p = tpm_joint(&inst.rho, &ao.projector, &bo.projector, &u)?;
                    rec.case(curve.value(t) - p, 1e-9);
                }
            }
        }
    }
    Ok(rec.finish())
}

/// Crossing times lower-bound the first true crossings found by the oracle.
pub fn check_crossing_time_lower_bounds(cfg: &SuiteConfig) -> Result<CheckOutcome> {
    let mut rec = Recorder::new("crossing_time_lower_bounds");
    let mut swept = 0usize;
    let mut seed = cfg.base_seed + 50_000;
    while swept < cfg.instances {
        seed += 1;
        let dim = cfg.dim_for(swept);
        let inst = random_instance(
            dim,
            seed,
            InstanceOptions {
                purity: StatePurity::Pure,
                commutation: CommutationClass::NonCommuting,
            },
        )?;
        let window = 1.5 * inst.characteristic_period(cfg.hbar);
        let (ell, j) = (0, 0);
        let a_p = &inst.a.outcome(ell).projector;
        let b_p = &inst.b.outcome(j).projector;
        let b_state = QuantumState::unnormalized(b_p.clone())?;

        let mut used = false;
        if let Some(t_star) = first_re_negative(&inst, ell, j, window, 800, cfg.hbar)? {
            let ct = time_to_negativity(&inst.rho, a_p, &b_state, &inst.h, cfg.hbar, (ell, j))?;
            let t_bound = ct.time.expect("observed negativity implies a finite bound");
            rec.case(t_bound - t_star, 1e-6 + window / 800.0);
            used = true;

            // the derivative-refined crossing is also a lower bound
            let bounds = kdq_bounds(&inst.rho, a_p, &b_state, &inst.h, cfg.hbar)?;
            let dct =
                crate::qsltimes::derivative_bound_zero_crossing(&bounds.re_derivative, (ell, j))?;
            if let Some(t_deriv) = dct.time {
                rec.case(t_deriv - t_star, 1e-6 + window / 800.0);
            }
        }
        let s_th = 0.15;
        if let Some(t_star) = first_im_exceeds(&inst, ell, j, s_th, window, 800, cfg.hbar)? {
            let ct =
                time_to_im_threshold(&inst.rho, a_p, &b_state, &inst.h, cfg.hbar, s_th, (ell, j))?;
            let t_bound = ct.time.expect("observed threshold implies a finite bound");
            rec.case(t_bound - t_star, 1e-6 + window / 800.0);
            used = true;
        }
        if used {
            swept += 1;
        }
        if seed > cfg.base_seed + 50_000 + 20 * cfg.instances as u64 {
            break; // enough seeds examined; negativity-rich instances are common
        }
    }
    Ok(rec.finish())
}

/// Derivative-refined bound: initial slope equals <Xdot>_0 (the 1/DeltaL
/// prefactor), and the unified lower bound dominates both constituents.
pub fn check_derivative_slope_and_unified(cfg: &SuiteConfig) -> Result<CheckOutcome> {
    let mut rec = Recorder::new("derivative_slope_and_unified");
    for k in 0..cfg.instances.min(100) {
        let dim = cfg.dim_for(k);
        let inst = random_instance(
            dim,
            cfg.base_seed + 60_000 + k as u64,
            InstanceOptions::default(),
        )?;
        let x = inst.a.observable();
        let curve = derivative_refined_lower_bound(&x, &inst.rho, &inst.h, cfg.hbar)?;
        let xdot = rate_observable(&x, &inst.h, cfg.hbar)?;
        let slope_expected = inst.rho.expect(&xdot)?;
        let eps = 1e-7;
        let slope = (curve.value(eps) - curve.value(0.0)) / eps;
        rec.case((slope - slope_expected).abs(), 1e-4);

        let unified = unified_lower_bound(&x, &inst.rho, &inst.h, cfg.hbar)?;
        let (lower, _) = expval_bounds(&x, &inst.rho, &inst.h, cfg.hbar)?;
        for i in 0..20 {
            let t = inst.characteristic_period(cfg.hbar) * i as f64 / 19.0;
            rec.case(lower.value(t) - unified.value(t), 1e-12);
            rec.case(curve.value(t) - unified.value(t), 1e-12);
        }
    }
    Ok(rec.finish())
}

/// Spectral round trips and propagator structure over random operators.
pub fn check_linear_algebra(cfg: &SuiteConfig) -> Result<CheckOutcome> {
    let mut rec = Recorder::new("linear_algebra_round_trips");
    for k in 0..cfg.instances.min(100) {
        let dim = 2 + k % 7; // dims 2..=8
        let inst = random_instance(
            dim,
            cfg.base_seed + 70_000 + k as u64,
            InstanceOptions::default(),
        )?;
        let dec = spectral_decompose(&inst.h);
        let recon = dec.reconstruct();
        rec.case(max_abs(&(recon.entries() - inst.h.entries())), 1e-9);
        let u = propagator(&inst.h, 0.73 + k as f64 * 0.01, cfg.hbar);
        rec.case(u.unitarity_defect(), 1e-9);
        let u1 = propagator(&inst.h, 0.31, cfg.hbar);
        let u2 = propagator(&inst.h, 0.42, cfg.hbar);
        let u12 = propagator(&inst.h, 0.73, cfg.hbar);
        rec.case(
            max_abs(&(u1.entries() * u2.entries() - u12.entries())),
            1e-9,
        );
    }
    Ok(rec.finish())
}

/// Run the full suite.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_linear_algebra(cfg)?,
        check_interpolation_round_trip(cfg)?,
        check_table_structure(cfg)?,
        check_commutative_limit(cfg)?,
        check_sr_gap(cfg)?,
        check_delta_l_laws(cfg)?,
        check_rate_and_variance_bounds(cfg)?,
        check_bound_validity(cfg)?,
        check_saturation(cfg)?,
        check_derivative_slope_and_unified(cfg)?,
        check_crossing_time_lower_bounds(cfg)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let cfg = SuiteConfig {
            base_seed: 7,
            instances: 12,
            dim_min: 2,
            dim_max: 4,
            hbar: 1.0,
            grid_points: 200,
        };
        for outcome in run_suite(&cfg).unwrap() {
            assert!(
                outcome.passed(),
                "{} failed {}/{} (worst {:.3e})",
                outcome.name,
                outcome.failures,
                outcome.cases,
                outcome.worst
            );
        }
    }
}
