//! Acceptance run: every criterion is evaluated and reported on its own line;
//! the process exits non-zero if any of them fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use phasepos::evolution::{fd_default_dt, fd_fokker_planck};
use phasepos::grid::FieldKind;
use phasepos::kernel::gaussian_kernel;
use phasepos::pointer::c_quarter;
use phasepos::positivity::{det_residual, log_schedule};
use phasepos::states::{pointer_state, wigner_invariance_check};
use phasepos::*;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Desk-scale grid: 512 x 512 over x in [-32, 32), p in [-12, 12).
fn desk_grid() -> PhaseGrid {
    PhaseGrid::symmetric(512, 512, 32.0, 12.0).unwrap()
}

/// Cat of two coherent packets at -3 sigma0 and +3 sigma0.
fn desk_cat(grid: &PhaseGrid) -> GridField {
    let params = SystemParams::unit();
    let fam = PointerFamily::coherent(params);
    let rho = cat_state(6.0 * params.sigma0(), &fam, &QGrid::matching(grid)).unwrap();
    wigner_from_density(&rho, grid).unwrap()
}

fn wigner_of(rho: &DensityMatrix, grid: &PhaseGrid) -> GridField {
    wigner_from_density(rho, grid).unwrap()
}

fn corpus(grid: &PhaseGrid) -> Vec<(&'static str, GridField)> {
    let params = SystemParams::unit();
    let q = QGrid::matching(grid);
    let coherent = PointerFamily::coherent(params);
    let robust = PointerFamily::robust(params);
    vec![
        (
            "vacuum",
            wigner_of(
                &DensityMatrix::pure(&fock_state(0, &params, &q).unwrap()),
                grid,
            ),
        ),
        (
            "fock-1",
            wigner_of(
                &DensityMatrix::pure(&fock_state(1, &params, &q).unwrap()),
                grid,
            ),
        ),
        (
            "cat-coherent",
            wigner_of(&cat_state(6.0, &coherent, &q).unwrap(), grid),
        ),
        (
            "cat-robust",
            wigner_of(&cat_state(6.0, &robust, &q).unwrap(), grid),
        ),
        (
            "packet-robust",
            wigner_of(&pointer_state(&robust, (1.0, -1.0), &q).unwrap(), grid),
        ),
    ]
}

fn within(elapsed: Duration, budget: f64) -> bool {
    elapsed.as_secs_f64() < budget
}

fn c1_wigner_threshold() -> Verdict {
    let start = Instant::now();
    let t = wigner_positivity_time(&SystemParams::unit());
    let el = start.elapsed();
    let ok = (t - 1.316074).abs() <= 1e-6 && within(el, 1.0);
    verdict(
        ok,
        format!(
            "t_W = {t:.9} (target 1.316074 +- 1e-6), {:.3} s",
            el.as_secs_f64()
        ),
    )
}

fn c2_p_threshold() -> Verdict {
    let start = Instant::now();
    let params = SystemParams::unit();
    let fam = PointerFamily::robust(params);
    let t = p_positivity_time(&params, &fam);
    let res = det_residual(&params, &fam, t);
    let el = start.elapsed();
    let ok = (1.96..=1.98).contains(&t) && res.abs() <= 1e-9 && within(el, 1.0);
    verdict(
        ok,
        format!(
            "t_P = {t:.9}, det residual {res:.2e}, {:.3} s",
            el.as_secs_f64()
        ),
    )
}

fn c3_theorem_w() -> Verdict {
    let start = Instant::now();
    let params = SystemParams::unit();
    let grid = desk_grid();
    let w0 = desk_cat(&grid);
    // coarse log schedule plus a fine band that resolves the sign change
    let mut probes = vec![0.0, 1.33];
    probes.extend(log_schedule(0.1, 2.0, 48));
    probes.extend((0..=40).map(|k| 1.25 + 0.0025 * k as f64));
    let r = certify_theorem_w("cat d=6", &w0, &params, &probes).unwrap();
    let el = start.elapsed();
    let at = |t: f64| r.probes.iter().find(|p| p.t == t).unwrap();
    let min0 = at(0.0).min_value.unwrap();
    let cert133 = at(1.33).certified == Some(true);
    let bound = 1.3161 + 0.01;
    let crossing = r.empirical_crossing;
    let ok = min0 < -0.1
        && cert133
        && crossing.is_some_and(|c| c <= bound)
        && r.last_negative.is_none_or(|t| t < bound)
        && within(el, 30.0);
    verdict(
        ok,
        format!(
            "min W(0) = {min0:.4}, W(1.33) certified = {cert133}, sign change in ({}, {}], {:.2} s",
            r.last_negative.map_or("-".into(), |t| t.to_string()),
            crossing.map_or("none".into(), |t| t.to_string()),
            el.as_secs_f64()
        ),
    )
}

fn c4_theorem_p() -> Verdict {
    let start = Instant::now();
    let params = SystemParams::unit();
    let fam = PointerFamily::robust(params);
    let grid = desk_grid();
    let w0 = desk_cat(&grid);
    let p2 = p_from_w(&w0, &fam, &params, 2.0).unwrap();
    let n2 = negativity(&p2);
    let p25 = p_from_w(&w0, &fam, &params, 2.5).unwrap();
    let w25 = evolve_wigner(&w0, &params, 2.5).unwrap();
    let window = QGrid::aligned_window(&grid, 20.0).unwrap();
    let rho_p = reconstruct_density(&p25, &fam, &window).unwrap();
    let rho_w = density_from_wigner(&w25, &window).unwrap();
    let dist = rho_p.trace_distance(&rho_w).unwrap();
    let el = start.elapsed();
    let ok = n2.certified_positive && dist <= 1e-3 && within(el, 60.0);
    verdict(
        ok,
        format!(
            "min P(2.0) = {:.3e} (eps {:.1e}), trace distance at 2.5 = {dist:.2e}, {:.2} s",
            n2.min_value,
            n2.epsilon,
            el.as_secs_f64()
        ),
    )
}

fn c5_oracle() -> Verdict {
    let params = SystemParams::unit();
    let grid = desk_grid();
    let w0 = desk_cat(&grid);
    let t = params.t0();
    let dt = fd_default_dt(&w0, &params, t);
    let fd = fd_fokker_planck(&w0, &params, t, dt).unwrap();
    let exact = evolve_wigner(&w0, &params, t).unwrap();
    let l1 = fd.l1_distance(&exact).unwrap();
    verdict(
        l1 <= 1e-3,
        format!("L1(analytic, finite difference) = {l1:.3e} with dt = {dt:.3e}"),
    )
}

fn c6_q_equivalence() -> Verdict {
    let params = SystemParams::unit();
    let grid = PhaseGrid::symmetric(256, 256, 16.0, 12.0).unwrap();
    let q = QGrid::matching(&grid);
    let coherent = PointerFamily::coherent(params);
    let robust = PointerFamily::robust(params);
    let states = [
        (
            "vacuum",
            DensityMatrix::pure(&fock_state(0, &params, &q).unwrap()),
        ),
        (
            "fock-1",
            DensityMatrix::pure(&fock_state(1, &params, &q).unwrap()),
        ),
        ("cat", cat_state(6.0, &coherent, &q).unwrap()),
    ];
    let mut worst = 0.0f64;
    for (_, rho) in &states {
        let w = wigner_of(rho, &grid);
        for fam in [&coherent, &robust] {
            let a = q_direct(rho, fam, &grid).unwrap();
            let b = q_from_w(&w, fam).unwrap();
            worst = worst.max(a.sup_distance(&b).unwrap());
        }
    }
    verdict(
        worst <= 1e-6,
        format!("max sup|Q_direct - Q_from_W| = {worst:.2e} over 3 states x 2 families"),
    )
}

fn c7_algebra() -> Verdict {
    let grid = PhaseGrid::symmetric(256, 256, 20.0, 20.0).unwrap();
    let c1 = CorrelationMatrix::new(0.7, 0.2, 0.4);
    let c2 = CorrelationMatrix::new(1.1, -0.3, 0.9);
    let g12 = convolve(&gaussian_kernel(&c1, &grid).unwrap(), &c2).unwrap();
    let semigroup = g12
        .sup_distance(&gaussian_kernel(&(c1 + c2), &grid).unwrap())
        .unwrap();

    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut det_err = 0.0f64;
    for _ in 0..1000 {
        let ar = 10f64.powf(rng.random_range(-1.0..1.0));
        let ai = rng.random_range(-10.0..10.0);
        det_err = det_err.max((c_quarter(ar, ai).unwrap().det() - 0.25).abs());
    }

    let params = SystemParams::unit();
    let wgrid = PhaseGrid::symmetric(256, 256, 16.0, 12.0).unwrap();
    let q = QGrid::matching(&wgrid);
    let cat = cat_state(6.0, &PointerFamily::coherent(params), &q).unwrap();
    let w = wigner_of(&cat, &wgrid);
    let round = symplectic_fourier(&w)
        .inverse()
        .unwrap()
        .sup_distance(&w)
        .unwrap();

    let vac = DensityMatrix::pure(&fock_state(0, &params, &q).unwrap());
    let mut inv = 0.0f64;
    for a in [0.5, 2.0, 3.0] {
        inv = inv.max(wigner_invariance_check(&vac, &wgrid, a).unwrap());
        inv = inv.max(wigner_invariance_check(&cat, &wgrid, a).unwrap());
    }
    let ok = semigroup <= 1e-10 && det_err <= 1e-10 && round <= 1e-10 && inv <= 1e-6;
    verdict(
        ok,
        format!(
            "semigroup {semigroup:.1e}, det C_1/4 {det_err:.1e} (1000 alpha), round trip {round:.1e}, scaling invariance {inv:.1e}"
        ),
    )
}

fn c8_moment_law() -> Verdict {
    let grid = desk_grid();
    let mut worst = 0.0f64;
    for params in [SystemParams::unit(), SystemParams::new(2.0, 0.5).unwrap()] {
        for (_, w0) in corpus(&grid) {
            let p2_0 = w0.moments().p2;
            for t in [0.5, 1.0, 2.0] {
                let p2 = evolve_wigner(&w0, &params, t).unwrap().moments().p2;
                let dt = params.d() * t;
                worst = worst.max(((p2 - p2_0) - dt).abs() / dt);
            }
        }
    }
    verdict(
        worst <= 1e-6,
        format!("max relative error in <p^2>(t) - <p^2>(0) = D t: {worst:.2e}"),
    )
}

fn c9_conservation() -> Verdict {
    let params = SystemParams::unit();
    let grid = desk_grid();
    let robust = PointerFamily::robust(params);
    let coherent = PointerFamily::coherent(params);
    let w0 = desk_cat(&grid);
    let n0 = w0.integral();
    let mut drifts = Vec::new();

    let a = evolve_wigner(&w0, &params, 1.0).unwrap();
    let a = evolve_wigner(&a, &params, 0.5).unwrap();
    let a = q_from_w(&a, &coherent).unwrap();
    let a = shear(&a, 0.3).unwrap();
    let a = convolve(&a, &CorrelationMatrix::new(0.3, 0.1, 0.2)).unwrap();
    drifts.push(("evolve-evolve-Q-shear-convolve", a.integral()));

    let b = p_from_w(&w0, &robust, &params, 2.0).unwrap();
    let b = evolve_p_function(&b, &robust, &params, 0.5).unwrap();
    let b = convolve(&b, &robust.c_quarter()).unwrap();
    let b = q_from_w(&b, &robust).unwrap();
    drifts.push(("P-evolveP-convolve-Q", b.integral()));

    let c = fd_fokker_planck(&w0, &params, 0.5, fd_default_dt(&w0, &params, 0.5)).unwrap();
    let c = evolve_wigner(&c, &params, 0.5).unwrap();
    let c = q_from_w(&c, &robust).unwrap();
    drifts.push(("fd-evolve-Q", c.integral()));

    let w1 = evolve_wigner(&w0, &params, 1.0).unwrap();
    let window = QGrid::matching(&grid);
    let rho = density_from_wigner(&w1, &window).unwrap();
    let d = wigner_from_density(&rho, &grid).unwrap();
    let d = p_deconvolve(&d, &coherent, 3.0).unwrap();
    drifts.push(("evolve-rho-W-deconvolve", d.integral()));

    let mut worst = 0.0f64;
    let mut which = "";
    for (name, n) in &drifts {
        let e = (n - n0).abs();
        if e >= worst {
            worst = e;
            which = name;
        }
    }
    verdict(
        worst <= 1e-8,
        format!(
            "max normalization drift {worst:.2e} ({which}), {} pipelines",
            drifts.len()
        ),
    )
}

fn c10_fock_anchor() -> Verdict {
    let params = SystemParams::unit();
    let grid = desk_grid();
    let rho = DensityMatrix::pure(&fock_state(1, &params, &QGrid::matching(&grid)).unwrap());
    let w = wigner_of(&rho, &grid);
    let (i, j) = (grid.nx / 2, grid.np / 2);
    assert_eq!((grid.x(i), grid.p(j)), (0.0, 0.0));
    let v = w.get(i, j);
    verdict(
        (v + 2.0).abs() <= 1e-6 && w.kind() == FieldKind::Wigner,
        format!("W_1(0, 0) = {v:.9}"),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("Wigner threshold", c1_wigner_threshold),
        ("P threshold", c2_p_threshold),
        ("Wigner theorem at desk scale", c3_theorem_w),
        ("P theorem at desk scale", c4_theorem_p),
        ("propagator vs finite-difference oracle", c5_oracle),
        ("Q equivalence", c6_q_equivalence),
        ("algebra suite", c7_algebra),
        ("moment law", c8_moment_law),
        ("conservation", c9_conservation),
        ("Fock-1 anchor", c10_fock_anchor),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} [{}] {name}: {} ({:.2} s)",
            k + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
