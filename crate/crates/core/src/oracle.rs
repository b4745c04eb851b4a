//! Ground-truth machinery for the property and acceptance suites: dense
//! brute-force trajectories through exact spectral propagators, the
//! saturation constructions that achieve the bounds with equality, and
//! seeded random-instance generation.
//!
//! Nothing here samples measurement shots; expectation values are treated
//! exactly, so the only error in an oracle trajectory is grid resolution.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kdq::{kdq_value, ProjectiveObservable, ProjectiveOutcome};
use crate::linop::{
    eigh, propagator, CMatrix, HermitianOperator, MatrixJson, QuantumState, UnitaryPropagator, C64,
};

/// Supported dimensions for random instances.
pub const DIM_RANGE: (usize, usize) = (2, 8);

/// A complete KDQ problem instance: state, two projective observables, and
/// the Hamiltonian, reproducible from its seed.
#[derive(Debug, Clone)]
pub struct Instance {
    pub rho: QuantumState,
    pub a: ProjectiveObservable,
    pub b: ProjectiveObservable,
    pub h: HermitianOperator,
    pub seed: u64,
}

impl Instance {
    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// 2 pi over the spectral spread of H: the natural time window for one
    /// sweep of the dynamics.
    pub fn characteristic_period(&self, hbar: f64) -> f64 {
        let (lo, hi) = self.h.eigen_range();
        let spread = (hi - lo).max(1e-6);
        2.0 * std::f64::consts::PI * hbar / spread
    }
}

/// Dense time series of every KDQ component of an instance.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    n_ell: usize,
    n_j: usize,
    values: Vec<C64>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_pairs(&self) -> usize {
        self.n_ell * self.n_j
    }

    pub fn value(&self, t_idx: usize, ell: usize, j: usize) -> C64 {
        self.values[t_idx * self.n_pairs() + ell * self.n_j + j]
    }

    /// Left endpoint of the first grid interval whose right end satisfies
    /// the predicate on q_{l,j}; `None` when the predicate never fires.
    pub fn first_crossing_bracket(
        &self,
        ell: usize,
        j: usize,
        pred: impl Fn(C64) -> bool,
    ) -> Option<(f64, f64)> {
        for (idx, &t) in self.times.iter().enumerate() {
            if pred(self.value(idx, ell, j)) {
                if idx == 0 {
                    return Some((t, t));
                }
                return Some((self.times[idx - 1], t));
            }
        }
        None
    }
}

/// Exact dense evolution of all q_{l,j}(t) on `steps` points spanning
/// [0, t_max]. Uses one eigendecomposition of H and per-time spectral
/// propagators, so there is no ODE stepping error.
pub fn trajectory(instance: &Instance, t_max: f64, steps: usize, hbar: f64) -> Result<Trajectory> {
    if steps < 2 {
        return Err(Error::InvalidGrid {
            reason: "need at least 2 steps",
        });
    }
    let times: Vec<f64> = (0..steps)
        .map(|k| t_max * k as f64 / (steps - 1) as f64)
        .collect();
    let n_ell = instance.a.len();
    let n_j = instance.b.len();
    let mut values = Vec::with_capacity(times.len() * n_ell * n_j);
    for &t in &times {
        let u = propagator(&instance.h, t, hbar);
        for ao in instance.a.outcomes() {
            for bo in instance.b.outcomes() {
                values.push(kdq_value(&instance.rho, &ao.projector, &bo.projector, &u)?);
            }
        }
    }
    Ok(Trajectory {
        times,
        n_ell,
        n_j,
        values,
    })
}

fn kdq_at(instance: &Instance, ell: usize, j: usize, t: f64, hbar: f64) -> C64 {
    let u = propagator(&instance.h, t, hbar);
    kdq_value(
        &instance.rho,
        &instance.a.outcome(ell).projector,
        &instance.b.outcome(j).projector,
        &u,
    )
    .expect("instance dims are consistent")
}

/// First time Re q_{l,j}(t) < 0 on [0, t_max]: grid scan for a bracketing
/// interval, then bisection with exact propagators down to 1e-12.
pub fn first_re_negative(
    instance: &Instance,
    ell: usize,
    j: usize,
    t_max: f64,
    steps: usize,
    hbar: f64,
) -> Result<Option<f64>> {
    first_crossing(instance, ell, j, t_max, steps, hbar, |q| q.re < 0.0)
}

/// First time |Im q_{l,j}(t)| > s_th on [0, t_max].
pub fn first_im_exceeds(
    instance: &Instance,
    ell: usize,
    j: usize,
    s_th: f64,
    t_max: f64,
    steps: usize,
    hbar: f64,
) -> Result<Option<f64>> {
    first_crossing(instance, ell, j, t_max, steps, hbar, move |q| {
        q.im.abs() > s_th
    })
}

fn first_crossing(
    instance: &Instance,
    ell: usize,
    j: usize,
    t_max: f64,
    steps: usize,
    hbar: f64,
    pred: impl Fn(C64) -> bool,
) -> Result<Option<f64>> {
    let traj = trajectory(instance, t_max, steps, hbar)?;
    let Some((mut lo, mut hi)) = traj.first_crossing_bracket(ell, j, &pred) else {
        return Ok(None);
    };
    if lo == hi {
        return Ok(Some(lo));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if pred(kdq_at(instance, ell, j, mid, hbar)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Expectation values tr{X rho(t)} of `x` along the exact Schroedinger
/// evolution of `state0` under `h`, at the given times.
pub fn expectation_series(
    x: &HermitianOperator,
    state0: &QuantumState,
    h: &HermitianOperator,
    hbar: f64,
    times: &[f64],
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let u = propagator(h, t, hbar);
        out.push(state0.evolved(&u)?.expect(x)?);
    }
    Ok(out)
}

/// The two-level construction that achieves the expectation-value bounds
/// with equality: X = diag(x_min, x_max) on the coupled subspace,
/// psi = cos(tau0/2)|x_max> - i sin(tau0/2)|x_min>, and
/// H = (omega/2)(|x_min><x_max| + |x_max><x_min|), in hbar = 1 units.
///
/// For tau0 in [0, pi] the exact <X>_t traces the lower bound's time-varying
/// branch; for tau0 in [pi, 2 pi] it traces the upper bound's.
pub fn saturation_instance(
    x_min: f64,
    x_max: f64,
    tau0: f64,
    omega: f64,
) -> Result<(HermitianOperator, QuantumState, HermitianOperator)> {
    if x_min > x_max {
        return Err(Error::InvalidInterval { x_min, x_max });
    }
    if !(0.0..=2.0 * std::f64::consts::PI).contains(&tau0) {
        return Err(Error::InvalidParameter {
            reason: "tau0 must lie in [0, 2 pi]",
        });
    }
    // basis ordering: e0 = |x_min>, e1 = |x_max>
    let x = HermitianOperator::diagonal(&[x_min, x_max]);
    let psi = [
        C64::new(0.0, -(0.5 * tau0).sin()),
        C64::new((0.5 * tau0).cos(), 0.0),
    ];
    let rho = QuantumState::pure(&psi)?;
    let h = HermitianOperator::new(CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(omega / 2.0, 0.0),
            C64::new(omega / 2.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    ))?;
    Ok((x, rho, h))
}

/// The KDQ analogue of [`saturation_instance`]: initial state (|0>+|1>)/sqrt 2,
/// A_1 = |0><0|, H = -(omega/2)(|r_min><r_max| + h.c.) built from the
/// eigenvectors of rho_1 = {rho, A_1}/2, and B_1 = |psi><psi| with
/// psi = cos(tau0/2)|r_max> - i sin(tau0/2)|r_min>.
///
/// Since B_1(t) evolves in the Heisenberg picture under -H, the pair (1, 1)
/// retraces the two-level construction and Re q_{1,1}(t) saturates the lower
/// bound on its time-varying branch.
pub fn kdq_saturation_instance(tau0: f64) -> Result<Instance> {
    kdq_saturation_instance_with(tau0, 1.0)
}

/// [`kdq_saturation_instance`] with an explicit Rabi frequency.
pub fn kdq_saturation_instance_with(tau0: f64, omega: f64) -> Result<Instance> {
    kdq_saturation_family(tau0, -0.5 * std::f64::consts::PI, omega)
}

/// The saturation construction with a free relative phase in the second
/// projector's state, psi = cos(tau0/2)|r_max> + e^{i phase} sin(tau0/2)|r_min>.
///
/// The phase -pi/2 (the literal -i) puts psi on the great circle that H
/// drives at uniform angular speed, which is exactly the fastest-path
/// geometry behind the bound; any other phase makes the trajectory leave the
/// lower bound strictly inside its time-varying branch.
pub fn kdq_saturation_family(tau0: f64, relative_phase: f64, omega: f64) -> Result<Instance> {
    if !(0.0..=std::f64::consts::PI).contains(&tau0) {
        return Err(Error::InvalidParameter {
            reason: "tau0 must lie in [0, pi] for the lower-bound construction",
        });
    }
    let inv = 1.0 / 2.0_f64.sqrt();
    let rho = QuantumState::pure(&[C64::new(inv, 0.0), C64::new(inv, 0.0)])?;
    let a1 = HermitianOperator::diagonal(&[1.0, 0.0]); // |0><0|
    let a0 = HermitianOperator::diagonal(&[0.0, 1.0]);
    let (rho_1, _) = crate::kdq::split_operators(&rho, &a1)?;
    let (_, vectors) = eigh(rho_1.entries());
    let r_min = vectors.column(0).clone_owned();
    let r_max = vectors.column(1).clone_owned();

    // H = -(omega/2)(|r_min><r_max| + |r_max><r_min|)
    let mut h = CMatrix::zeros(2, 2);
    for i in 0..2 {
        for k in 0..2 {
            h[(i, k)] = (r_min[i] * r_max[k].conj() + r_max[i] * r_min[k].conj())
                * C64::new(-omega / 2.0, 0.0);
        }
    }
    let h = HermitianOperator::new(h)?;

    let c = C64::new((0.5 * tau0).cos(), 0.0);
    let s = C64::new(0.0, relative_phase).exp() * (0.5 * tau0).sin();
    let psi = [c * r_max[0] + s * r_min[0], c * r_max[1] + s * r_min[1]];
    let b1 = HermitianOperator::projector_onto(&psi)?;
    let b0 = HermitianOperator::identity(2).sub(&b1)?;

    let a = ProjectiveObservable::new(vec![
        ProjectiveOutcome {
            label: 0,
            eigenvalue: 0.0,
            projector: a0,
        },
        ProjectiveOutcome {
            label: 1,
            eigenvalue: 1.0,
            projector: a1,
        },
    ])?;
    let b = ProjectiveObservable::new(vec![
        ProjectiveOutcome {
            label: 0,
            eigenvalue: 0.0,
            projector: b0,
        },
        ProjectiveOutcome {
            label: 1,
            eigenvalue: 1.0,
            projector: b1,
        },
    ])?;
    Ok(Instance {
        rho,
        a,
        b,
        h,
        seed: 0,
    })
}

/// State purity options for [`random_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatePurity {
    Pure,
    Mixed,
}

/// Whether the generated state shares an eigenbasis with the first
/// observable ([rho, A_l] = 0) or is generic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommutationClass {
    Commuting,
    NonCommuting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceOptions {
    pub purity: StatePurity,
    pub commutation: CommutationClass,
}

impl Default for InstanceOptions {
    fn default() -> Self {
        Self {
            purity: StatePurity::Mixed,
            commutation: CommutationClass::NonCommuting,
        }
    }
}

pub(crate) fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> HermitianOperator {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    HermitianOperator::symmetrized(g)
}

pub(crate) fn random_pure_state(rng: &mut ChaCha8Rng, dim: usize) -> QuantumState {
    let ket: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    QuantumState::pure(&ket).expect("random ket is nonzero almost surely")
}

pub(crate) fn random_mixed_state(rng: &mut ChaCha8Rng, dim: usize) -> QuantumState {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let w = &g * g.adjoint();
    let tr: f64 = w.diagonal().iter().map(|z| z.re).sum();
    QuantumState::density(HermitianOperator::symmetrized(w.scale(1.0 / tr)))
        .expect("Wishart product is PSD")
}

/// Deterministic random instance from a seed. The commuting option builds
/// rho and A from one shared eigenbasis so that [rho, A_l] = 0 up to
/// rounding; the mixed option draws a full-rank Wishart state.
pub fn random_instance(dim: usize, seed: u64, options: InstanceOptions) -> Result<Instance> {
    if dim < DIM_RANGE.0 || dim > DIM_RANGE.1 {
        return Err(Error::UnsupportedDimension {
            dim,
            min: DIM_RANGE.0,
            max: DIM_RANGE.1,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_hermitian(&mut rng, dim);
    let b = ProjectiveObservable::from_operator(&random_hermitian(&mut rng, dim));

    let (rho, a) = match options.commutation {
        CommutationClass::NonCommuting => {
            let rho = match options.purity {
                StatePurity::Pure => random_pure_state(&mut rng, dim),
                StatePurity::Mixed => random_mixed_state(&mut rng, dim),
            };
            let a = ProjectiveObservable::from_operator(&random_hermitian(&mut rng, dim));
            (rho, a)
        }
        CommutationClass::Commuting => {
            let basis_source = random_hermitian(&mut rng, dim);
            let (_, vectors) = eigh(basis_source.entries());
            // rho diagonal in the shared basis
            let rho = match options.purity {
                StatePurity::Pure => {
                    let k = rng.gen_range(0..dim);
                    let ket: Vec<C64> = (0..dim).map(|i| vectors[(i, k)]).collect();
                    QuantumState::pure(&ket)?
                }
                StatePurity::Mixed => {
                    let raw: Vec<f64> = (0..dim).map(|_| -rng.gen::<f64>().ln()).collect();
                    let total: f64 = raw.iter().sum();
                    let mut m = CMatrix::zeros(dim, dim);
                    for (k, p) in raw.iter().enumerate() {
                        let v = vectors.column(k);
                        for i in 0..dim {
                            for j in 0..dim {
                                m[(i, j)] += v[i] * v[j].conj() * (p / total);
                            }
                        }
                    }
                    QuantumState::density(HermitianOperator::symmetrized(m))?
                }
            };
            // A projectors: random partition of the shared basis
            let mut order: Vec<usize> = (0..dim).collect();
            order.shuffle(&mut rng);
            let groups = rng.gen_range(2..=dim);
            let mut outcomes = Vec::new();
            for g in 0..groups {
                let members: Vec<usize> = order
                    .iter()
                    .enumerate()
                    .filter(|(pos, _)| pos % groups == g)
                    .map(|(_, &idx)| idx)
                    .collect();
                let mut m = CMatrix::zeros(dim, dim);
                for &k in &members {
                    let v = vectors.column(k);
                    for i in 0..dim {
                        for j in 0..dim {
                            m[(i, j)] += v[i] * v[j].conj();
                        }
                    }
                }
                outcomes.push(ProjectiveOutcome {
                    label: g,
                    eigenvalue: g as f64,
                    projector: HermitianOperator::symmetrized(m),
                });
            }
            (rho, ProjectiveObservable::new(outcomes)?)
        }
    };
    Ok(Instance { rho, a, b, h, seed })
}

/// Exact propagator for an instance at one time.
pub fn instance_propagator(instance: &Instance, t: f64, hbar: f64) -> UnitaryPropagator {
    propagator(&instance.h, t, hbar)
}

/// Generation record carried alongside a serialized instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceManifest {
    pub seed: u64,
    pub dim: usize,
    pub purity: String,
    pub commutation: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeJson {
    pub label: usize,
    pub eigenvalue: f64,
    pub projector: MatrixJson,
}

/// Wire form of an [`Instance`]: the matrix JSON format for every operator
/// plus the generation manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceBundle {
    pub manifest: InstanceManifest,
    pub rho: MatrixJson,
    pub hamiltonian: MatrixJson,
    pub a: Vec<OutcomeJson>,
    pub b: Vec<OutcomeJson>,
}

fn observable_to_json(obs: &ProjectiveObservable) -> Vec<OutcomeJson> {
    obs.outcomes()
        .iter()
        .map(|o| OutcomeJson {
            label: o.label,
            eigenvalue: o.eigenvalue,
            projector: MatrixJson::from_operator(&o.projector),
        })
        .collect()
}

fn observable_from_json(json: &[OutcomeJson]) -> Result<ProjectiveObservable> {
    let outcomes = json
        .iter()
        .map(|o| {
            Ok(ProjectiveOutcome {
                label: o.label,
                eigenvalue: o.eigenvalue,
                projector: o.projector.to_operator()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ProjectiveObservable::new(outcomes)
}

impl InstanceBundle {
    pub fn from_instance(instance: &Instance, options: InstanceOptions) -> Self {
        Self {
            manifest: InstanceManifest {
                seed: instance.seed,
                dim: instance.dim(),
                purity: match options.purity {
                    StatePurity::Pure => "pure".into(),
                    StatePurity::Mixed => "mixed".into(),
                },
                commutation: match options.commutation {
                    CommutationClass::Commuting => "commuting".into(),
                    CommutationClass::NonCommuting => "non_commuting".into(),
                },
            },
            rho: MatrixJson::from_operator(instance.rho.op()),
            hamiltonian: MatrixJson::from_operator(&instance.h),
            a: observable_to_json(&instance.a),
            b: observable_to_json(&instance.b),
        }
    }

    pub fn to_instance(&self) -> Result<Instance> {
        Ok(Instance {
            rho: QuantumState::density(self.rho.to_operator()?)?,
            a: observable_from_json(&self.a)?,
            b: observable_from_json(&self.b)?,
            h: self.hamiltonian.to_operator()?,
            seed: self.manifest.seed,
        })
    }
}
