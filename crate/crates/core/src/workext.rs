//! Two-qubit controlled-unitary work extraction: the gate Hamiltonian, the
//! KDQ work distribution of the target qubit's internal-energy changes, the
//! TPM baseline, and power reports where the time to negativity bounds the
//! time of maximum extraction.
//!
//! The gate is `H = (omega_L/2)(Z_1 + Z_2) + (omega_int/2)|1><1| (x) X` with
//! the control as the first tensor factor and `Z = |1><1| - |0><0|` so that
//! `|0>` is the local ground state. Prepared in control `|1>`, target `|->`,
//! the control population is conserved and the target evolves under the
//! effective two-level Hamiltonian `(omega_L/2) Z + (omega_int/2) X`, which
//! is what the trajectories and bounds below use; the full 4-dimensional
//! model is exposed for cross-checks.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::kdq::{kdq_value, tpm_joint};
use crate::linop::{
    commutator, kron, max_abs, propagator, CMatrix, HermitianOperator, QuantumState, C64,
};
use crate::qsltimes::derivative_bound_zero_crossing;
use crate::srbounds::kdq_bounds;

/// Reference scales used to normalize figure-style sweep output: energies by
/// `omega_L/2`, times by pi, powers by the computed maximum power at the
/// reference interaction strength `omega_int = 5 omega_L`.
pub const T_REF: f64 = PI;
/// omega_int / omega_L at the reference point of the power normalization.
pub const REFERENCE_INT_RATIO: f64 = 5.0;
/// Strict-negativity floor for classifying a pair as exhibiting negativity;
/// keeps rounding noise at exact zeros (e.g. q(0) of orthogonal outcomes)
/// from registering as non-classicality.
pub const NEGATIVITY_FLOOR: f64 = 1e-12;

/// The two-qubit controlled-unitary scenario with both the global and the
/// effective target-qubit descriptions.
#[derive(Debug, Clone)]
pub struct WorkScenario {
    omega_l: f64,
    omega_int: f64,
    hamiltonian: HermitianOperator,
    initial_state: QuantumState,
    control_state: QuantumState,
    target_state: QuantumState,
    target_energies: (f64, f64),
    effective_hamiltonian: HermitianOperator,
    target_local_hamiltonian: HermitianOperator,
    target_projectors: [HermitianOperator; 2],
}

/// Build the gate scenario. The control never flips: the Hamiltonian
/// commutes with the control-population projector `|1><1| (x) I`.
pub fn build_two_qubit_scenario(omega_l: f64, omega_int: f64) -> WorkScenario {
    let z = HermitianOperator::diagonal(&[-1.0, 1.0]);
    let x = HermitianOperator::new(CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    ))
    .expect("Pauli X is Hermitian");
    let id = HermitianOperator::identity(2);
    let p1 = HermitianOperator::diagonal(&[0.0, 1.0]);

    let h_local = kron(&z, &id)
        .add(&kron(&id, &z))
        .expect("matching dims")
        .scaled(omega_l / 2.0);
    let h_int = kron(&p1, &x).scaled(omega_int / 2.0);
    let hamiltonian = h_local.add(&h_int).expect("matching dims");

    let inv = 1.0 / 2.0_f64.sqrt();
    let target_state =
        QuantumState::pure(&[C64::new(inv, 0.0), C64::new(-inv, 0.0)]).expect("|-> is normalized");
    let control_state =
        QuantumState::pure(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).expect("|1> is normalized");
    let initial_state = QuantumState::density(kron(control_state.op(), target_state.op()))
        .expect("product of pure states is a density operator");

    let effective_hamiltonian = z
        .scaled(omega_l / 2.0)
        .add(&x.scaled(omega_int / 2.0))
        .expect("matching dims");
    let target_local_hamiltonian = z.scaled(omega_l / 2.0);

    debug_assert!(
        max_abs(&commutator(&hamiltonian, &kron(&p1, &id)).unwrap()) < 1e-10,
        "control population must be conserved"
    );

    WorkScenario {
        omega_l,
        omega_int,
        hamiltonian,
        initial_state,
        control_state,
        target_state,
        target_energies: (-omega_l / 2.0, omega_l / 2.0),
        effective_hamiltonian,
        target_local_hamiltonian,
        target_projectors: [HermitianOperator::diagonal(&[1.0, 0.0]), p1],
    }
}

impl WorkScenario {
    pub fn omega_l(&self) -> f64 {
        self.omega_l
    }

    pub fn omega_int(&self) -> f64 {
        self.omega_int
    }

    /// The 4-dimensional gate Hamiltonian, control factor first.
    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    /// The global initial state |1><1| (x) |-><-|.
    pub fn initial_state(&self) -> &QuantumState {
        &self.initial_state
    }

    pub fn control_state(&self) -> &QuantumState {
        &self.control_state
    }

    pub fn target_state(&self) -> &QuantumState {
        &self.target_state
    }

    /// Local target energies (E_0, E_1) = (-omega_L/2, +omega_L/2).
    pub fn target_energies(&self) -> (f64, f64) {
        self.target_energies
    }

    /// Effective target Hamiltonian for control in |1>.
    pub fn effective_hamiltonian(&self) -> &HermitianOperator {
        &self.effective_hamiltonian
    }

    /// The measured local target Hamiltonian (omega_L/2) Z.
    pub fn target_local_hamiltonian(&self) -> &HermitianOperator {
        &self.target_local_hamiltonian
    }

    /// Target-qubit projector |j><j|.
    pub fn target_projector(&self, j: usize) -> &HermitianOperator {
        &self.target_projectors[j]
    }

    /// Global measurement projector I (x) |j><j| (trace 2, rescaled by the
    /// bound machinery through its recorded trace).
    pub fn global_projector(&self, j: usize) -> HermitianOperator {
        kron(&HermitianOperator::identity(2), &self.target_projectors[j])
    }

    pub fn target_energy(&self, j: usize) -> f64 {
        match j {
            0 => self.target_energies.0,
            _ => self.target_energies.1,
        }
    }

    /// Stochastic work of the (l, j) outcome pair, w = E_j(t) - E_l(0);
    /// time-independent here because the Hamiltonian is constant.
    pub fn stochastic_work(&self, ell: usize, j: usize) -> f64 {
        self.target_energy(j) - self.target_energy(ell)
    }
}

/// One (l, j) cell of the work distribution at one time.
#[derive(Debug, Clone)]
pub struct WorkEntry {
    pub ell: usize,
    pub j: usize,
    pub t: f64,
    /// Stochastic work w_{l,j} = E_j(t) - E_l(0).
    pub w: f64,
    pub q: C64,
    pub tpm: f64,
}

/// KDQ work distribution over a time grid, four pairs per time.
#[derive(Debug, Clone)]
pub struct WorkDistribution {
    times: Vec<f64>,
    entries: Vec<WorkEntry>,
}

/// Compute the work distribution of the target qubit in the effective model
/// (identical to the global one; see the module tests).
pub fn work_distribution(
    scenario: &WorkScenario,
    grid: &[f64],
    hbar: f64,
) -> Result<WorkDistribution> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid {
            reason: "empty grid",
        });
    }
    let rho = &scenario.target_state;
    let mut entries = Vec::with_capacity(grid.len() * 4);
    for &t in grid {
        let u = propagator(&scenario.effective_hamiltonian, t, hbar);
        for ell in 0..2 {
            for j in 0..2 {
                let a = scenario.target_projector(ell);
                let b = scenario.target_projector(j);
                entries.push(WorkEntry {
                    ell,
                    j,
                    t,
                    w: scenario.stochastic_work(ell, j),
                    q: kdq_value(rho, a, b, &u)?,
                    tpm: tpm_joint(rho, a, b, &u)?,
                });
            }
        }
    }
    Ok(WorkDistribution {
        times: grid.to_vec(),
        entries,
    })
}

impl WorkDistribution {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn entries(&self) -> &[WorkEntry] {
        &self.entries
    }

    /// The four pair entries at one grid time.
    pub fn at(&self, t_idx: usize) -> &[WorkEntry] {
        &self.entries[t_idx * 4..(t_idx + 1) * 4]
    }

    /// Extractable work W_ext(t) = sum (E_l(0) - E_j(t)) Re q_{l,j}(t).
    pub fn extractable_work(&self, t_idx: usize) -> f64 {
        self.at(t_idx).iter().map(|e| -e.w * e.q.re).sum()
    }

    /// TPM-baseline extractable work; identically zero in this scenario.
    pub fn tpm_extractable_work(&self, t_idx: usize) -> f64 {
        self.at(t_idx).iter().map(|e| -e.w * e.tpm).sum()
    }
}

/// Sign classification of one work realization against its quasiprobability.
#[derive(Debug, Clone, Copy)]
pub struct PairAlignment {
    pub ell: usize,
    pub j: usize,
    pub w: f64,
    pub re_q: f64,
    /// Re q < 0, strict: an anomalous energy transition.
    pub re_negative: bool,
    /// Negative quasiprobability on a positive work realization boosts the
    /// extractable work.
    pub boosted: bool,
}

/// Classify every pair at one grid time; pure sign comparison with zero
/// tolerance.
pub fn negativity_work_alignment(dist: &WorkDistribution, t_idx: usize) -> Vec<PairAlignment> {
    dist.at(t_idx)
        .iter()
        .map(|e| PairAlignment {
            ell: e.ell,
            j: e.j,
            w: e.w,
            re_q: e.q.re,
            re_negative: e.q.re < 0.0,
            boosted: e.q.re < 0.0 && e.w > 0.0,
        })
        .collect()
}

/// Power analysis of the scenario: time and value of maximum extraction, and
/// the negativity-time bound on the power.
#[derive(Debug, Clone)]
pub struct PowerReport {
    /// First time of maximum extractable work in the search window.
    pub t_max: f64,
    pub w_max: f64,
    /// P_max = W_max / T_max.
    pub p_max: f64,
    /// Earliest zero of the derivative-refined Re-bound over the pairs that
    /// exhibit negativity with nonnegative stochastic work.
    pub t_neg: Option<f64>,
    /// P_neg = W_max / T_neg; an experimentally accessible upper bound on
    /// P_max since T_neg <= T_max.
    pub p_neg: Option<f64>,
    pub neg_pair: Option<(usize, usize)>,
    /// Whether any pair qualifies for the T_neg reasoning: nonnegative
    /// stochastic work, strictly positive initial quasiprobability, and a
    /// genuine dip below zero inside the window.
    pub negativity_present: bool,
    pub e_ref: f64,
    pub t_ref: f64,
    pub p_ref: f64,
}

fn extractable_work_at(scenario: &WorkScenario, t: f64, hbar: f64) -> f64 {
    let u = propagator(&scenario.effective_hamiltonian, t, hbar);
    let evolved = scenario
        .target_state
        .evolved(&u)
        .expect("dims are consistent");
    let h0 = &scenario.target_local_hamiltonian;
    scenario.target_state.expect(h0).unwrap() - evolved.expect(h0).unwrap()
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    let t = 0.5 * (lo + hi);
    (t, f(t))
}

/// Maximum power at the normalization reference point omega_int = 5 omega_L,
/// searched over one full period.
pub fn reference_power(omega_l: f64, hbar: f64) -> f64 {
    let scenario = build_two_qubit_scenario(omega_l, REFERENCE_INT_RATIO * omega_l);
    let window = 2.0 * PI * hbar / omega_l.hypot(REFERENCE_INT_RATIO * omega_l);
    let report = power_report_without_reference(&scenario, window, hbar);
    report.2
}

fn power_report_without_reference(
    scenario: &WorkScenario,
    window: f64,
    hbar: f64,
) -> (f64, f64, f64) {
    // Deterministic coarse scan (step t_ref/2000) plus golden-section
    // refinement around the first grid maximum.
    let step = T_REF / 2000.0;
    let n = ((window / step).ceil() as usize).max(2);
    let times: Vec<f64> = (0..=n).map(|k| window * k as f64 / n as f64).collect();
    let work: Vec<f64> = times
        .iter()
        .map(|&t| extractable_work_at(scenario, t, hbar))
        .collect();
    let w_best = work.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if w_best <= 1e-12 {
        return (0.0, 0.0, 0.0);
    }
    let tol = 1e-12 * w_best.abs().max(1.0);
    let first_idx = work
        .iter()
        .position(|&w| w >= w_best - tol)
        .expect("max exists");
    let lo = times[first_idx.saturating_sub(1)];
    let hi = times[(first_idx + 1).min(n)];
    let (t_max, w_max) =
        golden_section_max(|t| extractable_work_at(scenario, t, hbar), lo, hi, 1e-8);
    (t_max, w_max, w_max / t_max)
}

/// Full power report over a search window that must cover at least one
/// period of the gate.
pub fn power_report(scenario: &WorkScenario, window: f64, hbar: f64) -> Result<PowerReport> {
    if window <= 0.0 {
        return Err(Error::InvalidParameter {
            reason: "search window must be positive",
        });
    }
    let (t_max, w_max, p_max) = power_report_without_reference(scenario, window, hbar);

    // Scan the window for pairs whose MHQ attains genuine negativity. A pair
    // qualifies for the T_neg reasoning when its quasiprobability starts
    // strictly positive (so the bound has a nontrivial descent to zero), its
    // stochastic work is nonnegative (negative-MHQ weight on a negative work
    // realization would suppress, not boost, extraction), and the MHQ dips
    // below zero somewhere in the window.
    let step = T_REF / 2000.0;
    let n = ((window / step).ceil() as usize).max(2);
    let grid: Vec<f64> = (0..=n).map(|k| window * k as f64 / n as f64).collect();
    let dist = work_distribution(scenario, &grid, hbar)?;
    let mut pair_negative = [[false; 2]; 2];
    for e in dist.entries() {
        if e.q.re < -NEGATIVITY_FLOOR {
            pair_negative[e.ell][e.j] = true;
        }
    }
    let qualifies = |ell: usize, j: usize| {
        pair_negative[ell][j]
            && scenario.stochastic_work(ell, j) >= 0.0
            && dist.at(0)[ell * 2 + j].q.re > NEGATIVITY_FLOOR
    };
    let negativity_present = (0..2).any(|ell| (0..2).any(|j| qualifies(ell, j)));

    let mut t_neg: Option<f64> = None;
    let mut neg_pair = None;
    for ell in 0..2 {
        for j in 0..2 {
            if !qualifies(ell, j) {
                continue;
            }
            let b_state = QuantumState::unnormalized(scenario.target_projector(j).clone())?;
            let bounds = kdq_bounds(
                &scenario.target_state,
                scenario.target_projector(ell),
                &b_state,
                &scenario.effective_hamiltonian,
                hbar,
            )?;
            let crossing = derivative_bound_zero_crossing(&bounds.re_derivative, (ell, j))?;
            if let Some(t) = crossing.time {
                if t_neg.is_none_or(|best| t < best) {
                    t_neg = Some(t);
                    neg_pair = Some((ell, j));
                }
            }
        }
    }
    let p_neg = match t_neg {
        Some(t) if t > 1e-12 && w_max > 0.0 => Some(w_max / t),
        _ => None,
    };

    Ok(PowerReport {
        t_max,
        w_max,
        p_max,
        t_neg,
        p_neg,
        neg_pair,
        negativity_present,
        e_ref: scenario.omega_l / 2.0,
        t_ref: T_REF,
        p_ref: reference_power(scenario.omega_l, hbar),
    })
}

/// One row of the interaction-strength sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub omega_int: f64,
    pub w_max: f64,
    pub t_max: f64,
    pub t_neg: Option<f64>,
    pub p_max: f64,
    pub p_neg: Option<f64>,
    pub negativity_present: bool,
}

/// Sweep the interaction strength at fixed omega_L, searching one full gate
/// period per row.
pub fn sweep_omega_int(omega_l: f64, omega_ints: &[f64], hbar: f64) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(omega_ints.len());
    for &omega_int in omega_ints {
        let scenario = build_two_qubit_scenario(omega_l, omega_int);
        let window = 2.0 * PI * hbar / omega_l.hypot(omega_int).max(1e-9);
        let report = power_report(&scenario, window, hbar)?;
        rows.push(SweepRow {
            omega_int,
            w_max: report.w_max,
            t_max: report.t_max,
            t_neg: report.t_neg,
            p_max: report.p_max,
            p_neg: report.p_neg,
            negativity_present: report.negativity_present,
        });
    }
    Ok(rows)
}

/// Sweep CSV, all quantities normalized by the reference scales; unreachable
/// times render as empty fields.
pub fn write_sweep_csv<W: Write>(
    rows: &[SweepRow],
    e_ref: f64,
    t_ref: f64,
    p_ref: f64,
    w: &mut W,
) -> std::io::Result<()> {
    writeln!(
        w,
        "omega_int,w_max_over_e_ref,t_max_over_t_ref,t_neg_over_t_ref,p_max_over_p_ref,p_neg_over_p_ref,negativity_present"
    )?;
    let opt = |v: Option<f64>, scale: f64| match v {
        Some(x) => format!("{:.12e}", x / scale),
        None => String::new(),
    };
    for r in rows {
        writeln!(
            w,
            "{:.12e},{:.12e},{:.12e},{},{:.12e},{},{}",
            r.omega_int,
            r.w_max / e_ref,
            r.t_max / t_ref,
            opt(r.t_neg, t_ref),
            r.p_max / p_ref,
            opt(r.p_neg, p_ref),
            r.negativity_present
        )?;
    }
    Ok(())
}
