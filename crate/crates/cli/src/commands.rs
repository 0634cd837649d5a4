use phasepos::evolution::{evolution_trace, fd_default_dt};
use phasepos::pointer::PointerFamily;
use phasepos::positivity::{
    default_probe_schedule, det_residual, factorization_threshold, forward_route_available,
    ProbeResult, ProbeStatus,
};
use phasepos::{
    cat_state, certify_theorem_p, certify_theorem_w, diffusion_matrix, evolve_wigner,
    fd_fokker_planck, fock_state, negativity, p_deconvolve, p_from_w, p_positivity_time, q_from_w,
    wigner_from_density, wigner_positivity_time, CertificationReport, DensityMatrix,
    DiffusionMatrix, GridField, Moments, NegativityReport, PhaseGrid, QGrid, SystemParams,
};
use serde::Serialize;

use crate::config::{parse_family, Config, StateKind};
use crate::output::Outputs;
use crate::CliError;

/// L1 tolerance between the propagator and the finite-difference oracle.
pub const ORACLE_TOL: f64 = 1e-3;
const TRACE_POINTS: usize = 33;

fn state_label(cfg: &Config) -> String {
    match cfg.state {
        Some(StateKind::Vacuum) => "vacuum".into(),
        Some(StateKind::Fock) => format!("fock-{}", cfg.n.unwrap_or(0)),
        Some(StateKind::Cat) => format!("cat-{}", cfg.sep.unwrap_or(0.0)),
        None => "none".into(),
    }
}

fn build_state(
    cfg: &Config,
    params: &SystemParams,
    grid: &PhaseGrid,
) -> Result<GridField, CliError> {
    let q = QGrid::matching(grid);
    let rho = match cfg.state {
        Some(StateKind::Vacuum) => DensityMatrix::pure(&fock_state(0, params, &q)?),
        Some(StateKind::Fock) => DensityMatrix::pure(&fock_state(cfg.n.unwrap_or(0), params, &q)?),
        Some(StateKind::Cat) => cat_state(
            cfg.sep.unwrap_or(0.0) * params.sigma0(),
            &PointerFamily::coherent(*params),
            &q,
        )?,
        None => return Err(CliError::Missing(vec!["state".into()])),
    };
    Ok(wigner_from_density(&rho, grid)?)
}

#[derive(Serialize)]
struct FamilyInfo {
    name: String,
    label: String,
    alpha_re: f64,
    alpha_im: f64,
    diffusion: DiffusionMatrix,
    factorization_threshold: f64,
    p_positivity_time: f64,
    det_residual: f64,
}

impl FamilyInfo {
    fn of(name: &str, params: &SystemParams, family: &PointerFamily) -> Self {
        let t_p = p_positivity_time(params, family);
        Self {
            name: name.trim().to_string(),
            label: family.label(),
            alpha_re: family.alpha_r(),
            alpha_im: family.alpha_i(),
            diffusion: diffusion_matrix(family),
            factorization_threshold: factorization_threshold(params, family),
            p_positivity_time: t_p,
            det_residual: det_residual(params, family, t_p),
        }
    }
}

#[derive(Serialize)]
struct Scales {
    m: f64,
    d: f64,
    t0: f64,
    sigma0: f64,
}

impl Scales {
    fn of(p: &SystemParams) -> Self {
        Self {
            m: p.m(),
            d: p.d(),
            t0: p.t0(),
            sigma0: p.sigma0(),
        }
    }
}

#[derive(Serialize)]
struct FieldSummary {
    negativity: NegativityReport,
    moments: Moments,
    reliable: bool,
    reason: Option<String>,
}

impl FieldSummary {
    fn of(f: &GridField) -> Self {
        Self {
            negativity: negativity(f),
            moments: f.moments(),
            reliable: f.reliability().reliable,
            reason: f.reliability().reason.clone(),
        }
    }
}

#[derive(Serialize)]
struct EvolveSummary {
    state: String,
    scales: Scales,
    t: f64,
    wigner_positivity_time: f64,
    family: FamilyInfo,
    p_route: &'static str,
    wigner: FieldSummary,
    q: FieldSummary,
    p: FieldSummary,
}

pub fn evolve(cfg: &Config, out: &mut Outputs) -> Result<(), CliError> {
    let params = cfg.params()?;
    let family = cfg.pointer_family(params)?;
    let grid = cfg.phase_grid(&params)?;
    let w0 = build_state(cfg, &params, &grid)?;
    let t = cfg.t.unwrap_or(0.0) * params.t0();

    let w = evolve_wigner(&w0, &params, t)?;
    let q = q_from_w(&w, &family)?;
    let forward = forward_route_available(&params, &family, t);
    let p = if forward {
        p_from_w(&w0, &family, &params, t)?
    } else {
        p_deconvolve(
            &w,
            &family,
            cfg.cutoff.unwrap_or(crate::config::DEFAULT_CUTOFF),
        )?
    };
    let times: Vec<f64> = (0..TRACE_POINTS)
        .map(|i| t * i as f64 / (TRACE_POINTS - 1) as f64)
        .collect();
    let trace = evolution_trace(&w0, &params, &times)?;

    let label = Some(family.label());
    out.field("wigner.csv", &w, &params, None, t)?;
    out.field("q.csv", &q, &params, label.clone(), t)?;
    out.field("p.csv", &p, &params, label, t)?;
    out.table(
        "trace.csv",
        &["t", "min_value", "norm", "p2"],
        "Wigner minimum, norm and <p^2> along the evolution",
        &trace,
    )?;
    let summary = EvolveSummary {
        state: state_label(cfg),
        scales: Scales::of(&params),
        t,
        wigner_positivity_time: wigner_positivity_time(&params),
        family: FamilyInfo::of(cfg.family.as_deref().unwrap_or("robust"), &params, &family),
        p_route: if forward { "forward" } else { "deconvolution" },
        wigner: FieldSummary::of(&w),
        q: FieldSummary::of(&q),
        p: FieldSummary::of(&p),
    };
    println!(
        "t = {:.6}: min W = {:.6e}, min Q = {:.6e}, min P = {:.6e} ({} route)",
        t,
        summary.wigner.negativity.min_value,
        summary.q.negativity.min_value,
        summary.p.negativity.min_value,
        summary.p_route
    );
    out.json("summary.json", summary)?;
    Ok(())
}

fn probe_times(cfg: &Config, params: &SystemParams) -> Vec<f64> {
    match &cfg.probes {
        Some(p) => p.iter().map(|t| t * params.t0()).collect(),
        None => default_probe_schedule(params),
    }
}

#[derive(Serialize)]
struct CurveRow {
    t: f64,
    min_value: Option<f64>,
    negative_volume: Option<f64>,
    status: &'static str,
}

fn curve(probes: &[ProbeResult]) -> Vec<CurveRow> {
    probes
        .iter()
        .map(|p| CurveRow {
            t: p.t,
            min_value: p.min_value,
            negative_volume: p.negative_volume,
            status: match p.status {
                ProbeStatus::Certified => "certified",
                ProbeStatus::Negative => "negative",
                ProbeStatus::Unavailable => "unavailable",
            },
        })
        .collect()
}

fn write_report(
    out: &mut Outputs,
    report: &CertificationReport,
    params: &SystemParams,
    bound: f64,
) -> Result<(), CliError> {
    out.table(
        "curve.csv",
        &["t", "min_value", "negative_volume", "status"],
        "minimum value and negative volume against time",
        &curve(&report.probes),
    )?;
    out.json(
        "report.json",
        ReportBody {
            scales: Scales::of(params),
            report,
        },
    )?;
    let fmt = |v: Option<f64>| v.map_or("none".to_string(), |t| format!("{t:.6}"));
    println!(
        "bound {:.6}, empirical crossing {}, last negative {}, bound respected: {}",
        bound,
        fmt(report.empirical_crossing),
        fmt(report.last_negative),
        report.bound_respected
    );
    if report.bound_respected {
        Ok(())
    } else {
        Err(CliError::Contract(format!(
            "a probe at or after the positivity bound {bound:.6} is negative beyond grid tolerance"
        )))
    }
}

#[derive(Serialize)]
struct ReportBody<'a> {
    scales: Scales,
    #[serde(flatten)]
    report: &'a CertificationReport,
}

pub fn certify_w(cfg: &Config, out: &mut Outputs) -> Result<(), CliError> {
    let params = cfg.params()?;
    let grid = cfg.phase_grid(&params)?;
    let w0 = build_state(cfg, &params, &grid)?;
    let report = certify_theorem_w(&state_label(cfg), &w0, &params, &probe_times(cfg, &params))?;
    write_report(out, &report, &params, report.thresholds.wigner)
}

pub fn certify_p(cfg: &Config, out: &mut Outputs) -> Result<(), CliError> {
    let params = cfg.params()?;
    let family = cfg.pointer_family(params)?;
    let grid = cfg.phase_grid(&params)?;
    let w0 = build_state(cfg, &params, &grid)?;
    let report = certify_theorem_p(
        &state_label(cfg),
        &w0,
        &params,
        &family,
        &probe_times(cfg, &params),
    )?;
    let bound = report.thresholds.p.unwrap_or(f64::NAN);
    write_report(out, &report, &params, bound)
}

#[derive(Serialize)]
struct Times {
    scales: Scales,
    wigner_positivity_time: f64,
    family: FamilyInfo,
}

pub fn decoherence_times(cfg: &Config, out: &mut Outputs) -> Result<(), CliError> {
    let params = cfg.params()?;
    let family = cfg.pointer_family(params)?;
    let times = Times {
        scales: Scales::of(&params),
        wigner_positivity_time: wigner_positivity_time(&params),
        family: FamilyInfo::of(cfg.family.as_deref().unwrap_or("robust"), &params, &family),
    };
    let f = &times.family;
    println!("t0 = {:.6}, sigma0 = {:.6}", params.t0(), params.sigma0());
    println!(
        "wigner positivity time: {:.6}",
        times.wigner_positivity_time
    );
    println!("p positivity time: {:.6}", f.p_positivity_time);
    println!(
        "family {} ({}): factorization threshold {:.6}, diffusion matrix {}",
        f.name,
        f.label,
        f.factorization_threshold,
        if f.diffusion.admissible {
            "admissible"
        } else {
            "indefinite"
        }
    );
    out.json("times.json", times)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepRow {
    index: usize,
    m: f64,
    d: f64,
    family: String,
    alpha: String,
    t0: f64,
    wigner_time: f64,
    p_time: f64,
    factorization_time: f64,
    admissible: bool,
    min_wigner_at_bound: Option<f64>,
    min_p_at_bound: Option<f64>,
}

fn sweep_point(
    cfg: &Config,
    index: usize,
    (m, d, spec): (f64, f64, &str),
) -> Result<SweepRow, CliError> {
    let params = SystemParams::new(m, d)?;
    let family = parse_family(spec, params)?;
    let t_w = wigner_positivity_time(&params);
    let t_p = p_positivity_time(&params, &family);
    let (mut min_w, mut min_p) = (None, None);
    if cfg.state.is_some() {
        let grid = cfg.phase_grid(&params)?;
        let w0 = build_state(cfg, &params, &grid)?;
        min_w = Some(evolve_wigner(&w0, &params, t_w)?.min());
        if forward_route_available(&params, &family, t_p) {
            min_p = Some(p_from_w(&w0, &family, &params, t_p)?.min());
        }
    }
    Ok(SweepRow {
        index,
        m,
        d,
        family: spec.trim().to_string(),
        alpha: family.label(),
        t0: params.t0(),
        wigner_time: t_w,
        p_time: t_p,
        factorization_time: factorization_threshold(&params, &family),
        admissible: diffusion_matrix(&family).admissible,
        min_wigner_at_bound: min_w,
        min_p_at_bound: min_p,
    })
}

#[derive(Serialize)]
struct SweepBody<'a> {
    columns: &'a [&'a str],
    points: &'a [SweepRow],
}

pub fn sweep(cfg: &Config, out: &mut Outputs) -> Result<(), CliError> {
    let mut points = Vec::new();
    for &m in cfg.m_list.iter().flatten() {
        for &d in cfg.d_list.iter().flatten() {
            for f in cfg.family_list.iter().flatten() {
                points.push((m, d, f.as_str()));
            }
        }
    }
    let rows: Result<Vec<SweepRow>, CliError> =
        phasepos::par::map_range(points.len(), |i| sweep_point(cfg, i, points[i]))
            .into_iter()
            .collect();
    let rows = rows?;
    let columns = [
        "index",
        "m",
        "d",
        "family",
        "alpha",
        "t0",
        "wigner_time",
        "p_time",
        "factorization_time",
        "admissible",
        "min_wigner_at_bound",
        "min_p_at_bound",
    ];
    // sweep.json doubles as the sidecar of sweep.csv
    out.table_without_sidecar("sweep.csv", &columns, &rows)?;
    out.json(
        "sweep.json",
        SweepBody {
            columns: &columns,
            points: &rows,
        },
    )?;
    for r in &rows {
        println!(
            "{:>3} m={} D={} {} ({}): t_W = {:.6}, t_P = {:.6}",
            r.index, r.m, r.d, r.family, r.alpha, r.wigner_time, r.p_time
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleBody {
    state: String,
    scales: Scales,
    t: f64,
    dt: f64,
    l1_distance: f64,
    sup_distance: f64,
    tolerance: f64,
    pass: bool,
}

pub fn oracle_compare(cfg: &Config, out: &mut Outputs) -> Result<(), CliError> {
    let params = cfg.params()?;
    let grid = cfg.phase_grid(&params)?;
    let w0 = build_state(cfg, &params, &grid)?;
    let t = cfg.t.unwrap_or(0.0) * params.t0();
    let dt = match cfg.dt {
        Some(dt) => dt * params.t0(),
        None => fd_default_dt(&w0, &params, t),
    };
    let exact = evolve_wigner(&w0, &params, t)?;
    let fd = fd_fokker_planck(&w0, &params, t, dt)?;
    let l1 = fd.l1_distance(&exact)?;
    let body = OracleBody {
        state: state_label(cfg),
        scales: Scales::of(&params),
        t,
        dt,
        l1_distance: l1,
        sup_distance: fd.sup_distance(&exact)?,
        tolerance: ORACLE_TOL,
        pass: l1 <= ORACLE_TOL,
    };
    println!(
        "L1 distance = {l1:.6e} (sup {:.6e}, dt = {dt:.3e})",
        body.sup_distance
    );
    out.json("oracle.json", body)?;
    if l1 <= ORACLE_TOL {
        Ok(())
    } else {
        Err(CliError::Contract(format!(
            "oracle L1 distance {l1:.3e} exceeds {ORACLE_TOL:e}"
        )))
    }
}
