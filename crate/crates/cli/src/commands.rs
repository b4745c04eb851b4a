//! The five subcommand implementations.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use kdqsl::kdq::{kdq_value, tpm_joint, ProjectiveObservable};
use kdqsl::linop::{commutator, max_abs, propagator, HermitianOperator, QuantumState};
use kdqsl::qsltimes::{
    derivative_bound_zero_crossing, time_to_im_threshold, time_to_negativity, CrossingTime,
};
use kdqsl::srbounds::{kdq_bounds, tpm_limit_bound, BoundCurve};
use kdqsl::verify::{run_suite, SuiteConfig};
use kdqsl::workext::{
    build_two_qubit_scenario, power_report, reference_power, sweep_omega_int, write_sweep_csv,
};

use crate::Failure;

pub struct GridSpec {
    pub t_max: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<Vec<f64>, Failure> {
        if self.steps < 2 {
            return Err(Failure::Contract("steps must be at least 2".into()));
        }
        if self.t_max.is_nan() || self.t_max <= 0.0 {
            return Err(Failure::Contract("t_max must be positive".into()));
        }
        Ok((0..self.steps)
            .map(|k| self.t_max * k as f64 / (self.steps - 1) as f64)
            .collect())
    }
}

pub fn check_positive(value: f64, name: &str) -> Result<(), Failure> {
    if value.is_nan() || value <= 0.0 {
        return Err(Failure::Contract(format!("{name} must be positive")));
    }
    Ok(())
}

pub fn check_nonnegative(value: f64, name: &str) -> Result<(), Failure> {
    if value.is_nan() || value < 0.0 {
        return Err(Failure::Contract(format!("{name} must be nonnegative")));
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    let file = File::create(path)
        .map_err(|e| Failure::Contract(format!("cannot create {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.12e}"),
        None => String::new(),
    }
}

fn core_err(e: kdqsl::Error) -> Failure {
    Failure::Contract(e.to_string())
}

pub struct TwoQubitParams {
    pub omega_l: f64,
    pub omega_int: f64,
    pub s_th: f64,
    pub grid: GridSpec,
    pub hbar: f64,
    pub out_dir: PathBuf,
    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_points: usize,
}

/// Emit the Fig.-2-style trajectory+bounds CSV for the (1,1) pair and the
/// Fig.-3-style interaction sweep CSV.
pub fn cmd_two_qubit(p: &TwoQubitParams) -> Result<(), Failure> {
    check_positive(p.hbar, "hbar")?;
    check_nonnegative(p.s_th, "s_th")?;
    let grid = p.grid.validate()?;
    if p.sweep_points < 1 {
        return Err(Failure::Contract("sweep_points must be at least 1".into()));
    }
    if p.sweep_min > p.sweep_max {
        return Err(Failure::Contract(
            "sweep_min must not exceed sweep_max".into(),
        ));
    }
    std::fs::create_dir_all(&p.out_dir)
        .map_err(|e| Failure::Contract(format!("cannot create output directory: {e}")))?;

    let scenario = build_two_qubit_scenario(p.omega_l, p.omega_int);
    let rho = scenario.target_state();
    let a1 = scenario.target_projector(1);
    let b1 = QuantumState::unnormalized(scenario.target_projector(1).clone()).map_err(core_err)?;
    let h = scenario.effective_hamiltonian();

    let bounds = kdq_bounds(rho, a1, &b1, h, p.hbar).map_err(core_err)?;
    let re_unified = bounds.re_unified();
    let im_unified = bounds.im_unified();

    let traj_path = p.out_dir.join("two_qubit_bounds.csv");
    let mut w = create(&traj_path)?;
    writeln!(
        w,
        "t,re_q11,im_q11,re_lower,re_derivative,re_unified,re_upper,im_lower,im_derivative,im_unified,im_upper,re_negative,im_exceeds"
    )
    .map_err(|e| Failure::Contract(e.to_string()))?;
    for &t in &grid {
        let u = propagator(h, t, p.hbar);
        let q = kdq_value(rho, a1, scenario.target_projector(1), &u).map_err(core_err)?;
        writeln!(
            w,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{}",
            t,
            q.re,
            q.im,
            bounds.re_lower.value(t),
            bounds.re_derivative.value(t),
            re_unified.value(t),
            bounds.re_upper.value(t),
            bounds.im_lower.value(t),
            bounds.im_derivative.value(t),
            im_unified.value(t),
            bounds.im_upper.value(t),
            q.re < 0.0,
            q.im.abs() > p.s_th
        )
        .map_err(|e| Failure::Contract(e.to_string()))?;
    }
    w.flush().map_err(|e| Failure::Contract(e.to_string()))?;

    // crossing-time summary for the plotted pair
    let t_re = time_to_negativity(rho, a1, &b1, h, p.hbar, (1, 1)).map_err(core_err)?;
    let t_im = time_to_im_threshold(rho, a1, &b1, h, p.hbar, p.s_th, (1, 1)).map_err(core_err)?;
    let t_neg = derivative_bound_zero_crossing(&bounds.re_derivative, (1, 1)).map_err(core_err)?;
    let window = 2.0 * PI * p.hbar / p.omega_l.hypot(p.omega_int).max(1e-9);
    let report = power_report(&scenario, window, p.hbar).map_err(core_err)?;
    println!(
        "two-qubit gate omega_L={} omega_int={}",
        p.omega_l, p.omega_int
    );
    println!("  T_re(1,1)  = {}", fmt_time(&t_re));
    println!("  T_im(1,1)  = {} (s_th = {})", fmt_time(&t_im), p.s_th);
    println!("  T_neg(1,1) = {}", fmt_time(&t_neg));
    println!(
        "  T_max = {:.9}, W_max = {:.9}, P_max = {:.9}",
        report.t_max, report.w_max, report.p_max
    );
    match report.p_neg {
        Some(p_neg) => println!("  P_neg = {p_neg:.9} (upper bound on P_max)"),
        None => println!("  P_neg not applicable (no qualifying negativity)"),
    }
    println!(
        "  normalization: E_ref = {}, t_ref = {}, P_ref = {:.9}",
        report.e_ref, report.t_ref, report.p_ref
    );

    // interaction sweep
    let omega_ints: Vec<f64> = if p.sweep_points == 1 {
        vec![p.sweep_min]
    } else {
        (0..p.sweep_points)
            .map(|k| {
                p.sweep_min + (p.sweep_max - p.sweep_min) * k as f64 / (p.sweep_points - 1) as f64
            })
            .collect()
    };
    let rows = sweep_omega_int(p.omega_l, &omega_ints, p.hbar).map_err(core_err)?;
    let sweep_path = p.out_dir.join("two_qubit_sweep.csv");
    let mut w = create(&sweep_path)?;
    let p_ref = reference_power(p.omega_l, p.hbar);
    write_sweep_csv(&rows, p.omega_l / 2.0, PI, p_ref, &mut w)
        .map_err(|e| Failure::Contract(e.to_string()))?;
    w.flush().map_err(|e| Failure::Contract(e.to_string()))?;
    println!("wrote {} and {}", traj_path.display(), sweep_path.display());

    if !rows.iter().any(|r| r.negativity_present) {
        return Err(Failure::NoResult(
            "no sweep row exhibits boost-relevant negativity; T_neg unreachable everywhere".into(),
        ));
    }
    Ok(())
}

fn fmt_time(ct: &CrossingTime) -> String {
    match ct.time {
        Some(t) => format!("{t:.9}"),
        None => "unreachable".into(),
    }
}

pub struct BoundsParams {
    pub rho: PathBuf,
    pub a: PathBuf,
    pub b: PathBuf,
    pub h: PathBuf,
    pub s_th: f64,
    pub grid: GridSpec,
    pub hbar: f64,
    pub out_dir: PathBuf,
}

/// Per-pair trajectory plus all six bound curves as CSV, and the crossing
/// time report as JSON.
pub fn cmd_bounds(p: &BoundsParams) -> Result<(), Failure> {
    check_positive(p.hbar, "hbar")?;
    check_nonnegative(p.s_th, "s_th")?;
    let grid = p.grid.validate()?;
    let rho = crate::input::load_density(&p.rho)?;
    let a = crate::input::load_observable(&p.a, "A")?;
    let b = crate::input::load_observable(&p.b, "B")?;
    let h = crate::input::load_matrix(&p.h, "H")?;
    for (name, dim) in [("A", a.dim()), ("B", b.dim()), ("H", h.dim())] {
        if dim != rho.dim() {
            return Err(Failure::Contract(format!(
                "{name} has dimension {dim}, rho has {}",
                rho.dim()
            )));
        }
    }
    std::fs::create_dir_all(&p.out_dir)
        .map_err(|e| Failure::Contract(format!("cannot create output directory: {e}")))?;

    struct PairData {
        ell: usize,
        j: usize,
        bounds: kdqsl::srbounds::KdqBounds,
        tpm_limit: Option<BoundCurve>,
    }

    let mut pairs = Vec::new();
    for ao in a.outcomes() {
        let commuting = max_abs(&commutator(rho.op(), &ao.projector).map_err(core_err)?) <= 1e-10;
        let identity_like = (ao.projector.trace() - rho.dim() as f64).abs() <= 1e-9;
        for bo in b.outcomes() {
            let b_state = QuantumState::unnormalized(bo.projector.clone()).map_err(core_err)?;
            let bounds = kdq_bounds(&rho, &ao.projector, &b_state, &h, p.hbar).map_err(core_err)?;
            let tpm_limit = if commuting && !identity_like {
                Some(tpm_limit_bound(&rho, &ao.projector, &b_state, &h, p.hbar).map_err(core_err)?)
            } else {
                None
            };
            pairs.push(PairData {
                ell: ao.label,
                j: bo.label,
                bounds,
                tpm_limit,
            });
        }
    }

    let csv_path = p.out_dir.join("bounds.csv");
    let mut w = create(&csv_path)?;
    writeln!(
        w,
        "t,ell,j,re_q,im_q,tpm,re_lower,re_derivative,re_unified,re_upper,im_lower,im_derivative,im_unified,im_upper,tpm_limit"
    )
    .map_err(|e| Failure::Contract(e.to_string()))?;
    for &t in &grid {
        let u = propagator(&h, t, p.hbar);
        for pd in &pairs {
            let ao = &a.outcomes()[pd.ell];
            let bo = &b.outcomes()[pd.j];
            let q = kdq_value(&rho, &ao.projector, &bo.projector, &u).map_err(core_err)?;
            let tpm = tpm_joint(&rho, &ao.projector, &bo.projector, &u).map_err(core_err)?;
            let re_unified = pd.bounds.re_unified();
            let im_unified = pd.bounds.im_unified();
            writeln!(
                w,
                "{:.12e},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                t,
                pd.ell,
                pd.j,
                q.re,
                q.im,
                tpm,
                pd.bounds.re_lower.value(t),
                pd.bounds.re_derivative.value(t),
                re_unified.value(t),
                pd.bounds.re_upper.value(t),
                pd.bounds.im_lower.value(t),
                pd.bounds.im_derivative.value(t),
                im_unified.value(t),
                pd.bounds.im_upper.value(t),
                fmt_opt(pd.tpm_limit.as_ref().map(|c| c.value(t))),
            )
            .map_err(|e| Failure::Contract(e.to_string()))?;
        }
    }
    w.flush().map_err(|e| Failure::Contract(e.to_string()))?;

    let times = crossing_report(&rho, &a, &b, &h, p.hbar, p.s_th)?;
    let json_path = p.out_dir.join("times.json");
    let mut w = create(&json_path)?;
    serde_json::to_writer_pretty(&mut w, &times).map_err(|e| Failure::Contract(e.to_string()))?;
    writeln!(w).ok();
    w.flush().map_err(|e| Failure::Contract(e.to_string()))?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

pub fn crossing_report(
    rho: &QuantumState,
    a: &ProjectiveObservable,
    b: &ProjectiveObservable,
    h: &HermitianOperator,
    hbar: f64,
    s_th: f64,
) -> Result<Vec<CrossingTime>, Failure> {
    let mut out = Vec::new();
    for ao in a.outcomes() {
        for bo in b.outcomes() {
            let pair = (ao.label, bo.label);
            let b_state = QuantumState::unnormalized(bo.projector.clone()).map_err(core_err)?;
            out.push(
                time_to_negativity(rho, &ao.projector, &b_state, h, hbar, pair)
                    .map_err(core_err)?,
            );
            out.push(
                time_to_im_threshold(rho, &ao.projector, &b_state, h, hbar, s_th, pair)
                    .map_err(core_err)?,
            );
            let bounds = kdq_bounds(rho, &ao.projector, &b_state, h, hbar).map_err(core_err)?;
            out.push(
                derivative_bound_zero_crossing(&bounds.re_derivative, pair).map_err(core_err)?,
            );
        }
    }
    Ok(out)
}

pub struct QslTimesParams {
    pub rho: PathBuf,
    pub a: PathBuf,
    pub b: PathBuf,
    pub h: PathBuf,
    pub s_th: f64,
    pub hbar: f64,
    pub format: crate::OutputFormat,
    pub out: Option<PathBuf>,
}

/// Crossing-time report only, as JSON (default) or CSV.
pub fn cmd_qsl_times(p: &QslTimesParams) -> Result<(), Failure> {
    check_positive(p.hbar, "hbar")?;
    check_nonnegative(p.s_th, "s_th")?;
    let rho = crate::input::load_density(&p.rho)?;
    let a = crate::input::load_observable(&p.a, "A")?;
    let b = crate::input::load_observable(&p.b, "B")?;
    let h = crate::input::load_matrix(&p.h, "H")?;
    let times = crossing_report(&rho, &a, &b, &h, p.hbar, p.s_th)?;

    let mut text = String::new();
    match p.format {
        crate::OutputFormat::Json => {
            text.push_str(
                &serde_json::to_string_pretty(&times)
                    .map_err(|e| Failure::Contract(e.to_string()))?,
            );
            text.push('\n');
        }
        crate::OutputFormat::Csv => {
            text.push_str("criterion,ell,j,time,deltaL,tau0,tau_target\n");
            for ct in &times {
                text.push_str(&format!(
                    "{},{},{},{},{:.12e},{:.12e},{}\n",
                    ct.criterion.as_str(),
                    ct.ell,
                    ct.j,
                    fmt_opt(ct.time),
                    ct.delta_l,
                    ct.tau0,
                    fmt_opt(ct.tau_target),
                ));
            }
        }
    }
    write_text_output(p.out.as_deref(), &text)
}

fn write_text_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| Failure::Contract(format!("cannot write {}: {e}", path.display())))?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

pub struct SweepParams {
    pub omega_l: f64,
    pub hbar: f64,
    pub sweep_min: f64,
    pub sweep_max: f64,
    pub sweep_points: usize,
    pub out: Option<PathBuf>,
}

/// The interaction-strength sweep on its own.
pub fn cmd_sweep(p: &SweepParams) -> Result<(), Failure> {
    check_positive(p.hbar, "hbar")?;
    check_positive(p.omega_l, "omega_l")?;
    if p.sweep_points < 1 {
        return Err(Failure::Contract("sweep_points must be at least 1".into()));
    }
    if p.sweep_min > p.sweep_max {
        return Err(Failure::Contract(
            "sweep_min must not exceed sweep_max".into(),
        ));
    }
    let omega_ints: Vec<f64> = if p.sweep_points == 1 {
        vec![p.sweep_min]
    } else {
        (0..p.sweep_points)
            .map(|k| {
                p.sweep_min + (p.sweep_max - p.sweep_min) * k as f64 / (p.sweep_points - 1) as f64
            })
            .collect()
    };
    let rows = sweep_omega_int(p.omega_l, &omega_ints, p.hbar).map_err(core_err)?;
    let mut buf = Vec::new();
    let p_ref = reference_power(p.omega_l, p.hbar);
    write_sweep_csv(&rows, p.omega_l / 2.0, PI, p_ref, &mut buf)
        .map_err(|e| Failure::Contract(e.to_string()))?;
    let text = String::from_utf8(buf).expect("CSV is UTF-8");
    write_text_output(p.out.as_deref(), &text)?;
    if !rows.iter().any(|r| r.negativity_present) {
        return Err(Failure::NoResult(
            "no sweep row exhibits boost-relevant negativity".into(),
        ));
    }
    Ok(())
}

pub struct VerifyParams {
    pub base_seed: u64,
    pub seeds: usize,
    pub dim_min: usize,
    pub dim_max: usize,
    pub hbar: f64,
}

/// Run the named property suite and report per-check pass/fail counts.
pub fn cmd_verify(p: &VerifyParams) -> Result<(), Failure> {
    check_positive(p.hbar, "hbar")?;
    if p.dim_min < 2 || p.dim_max > 8 || p.dim_min > p.dim_max {
        return Err(Failure::Contract(
            "dims must satisfy 2 <= dim_min <= dim_max <= 8".into(),
        ));
    }
    if p.seeds == 0 {
        return Err(Failure::Contract("seeds must be at least 1".into()));
    }
    let cfg = SuiteConfig {
        base_seed: p.base_seed,
        instances: p.seeds,
        dim_min: p.dim_min,
        dim_max: p.dim_max,
        hbar: p.hbar,
        grid_points: 2000,
    };
    let outcomes = run_suite(&cfg).map_err(core_err)?;
    let mut passed = 0;
    let mut failed = 0;
    for o in &outcomes {
        let status = if o.passed() { "pass" } else { "FAIL" };
        println!(
            "check {:<32} {}  ({} cases, {} failures, worst {:.3e})",
            o.name, status, o.cases, o.failures, o.worst
        );
        if o.passed() {
            passed += 1;
        } else {
            failed += 1;
        }
    }
    println!("{passed} checks passed, {failed} failed");
    if failed > 0 {
        return Err(Failure::ChecksFailed(format!("{failed} checks failed")));
    }
    Ok(())
}
