//! Acceptance criteria, one line each. Runs without the libtest harness so the lines are always shown.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use cvxkob::automorphism_dynamics::*;
use cvxkob::frankel_rescaling::*;
use cvxkob::kobayashi_metric::*;
use cvxkob::linalg::*;
use cvxkob::rank_one_lie::{self as lie, Group};
use cvxkob::ConvexDomain;
use rand::Rng;

type Outcome = (bool, String);

fn ball() -> ConvexDomain {
    ConvexDomain::unit_ball(2)
}

fn e12() -> ConvexDomain {
    ConvexDomain::ellipsoid(&[1, 2]).unwrap()
}

fn a_s(s: f64) -> Automorphism {
    Automorphism::ball_mobius(&ball(), dilation_matrix(2, s)).unwrap()
}

fn ball_oracle(z: &CVec, w: &CVec) -> f64 {
    let num = (1.0 - norm_sqr(z)) * (1.0 - norm_sqr(w));
    let den = (C64::new(1.0, 0.0) - inner(z, w)).norm_sqr();
    atanh_stable((1.0 - num / den).max(0.0).sqrt())
}

fn c1_ball_brackets() -> Outcome {
    const PAIRS: usize = 100;
    const MEDIAN_WIDTH: f64 = 5e-3;
    // The closed-form route, and the same ball hidden in an intersection to force the generic route.
    let exact = ball();
    let generic = ConvexDomain::intersection(vec![ball(), ConvexDomain::ball(CVec::zeros(2), 50.0).unwrap()]).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for (label, dom) in [("closed form", &exact), ("generic", &generic)] {
        let mut g = rng(0xacc1);
        let mut widths = Vec::new();
        let mut misses = 0;
        for _ in 0..PAIRS {
            let z = random_in_ball(&mut g, 2, 0.95);
            let w = random_in_ball(&mut g, 2, 0.95);
            let br = distance(dom, &z, &w).unwrap();
            if !br.encloses(ball_oracle(&z, &w)) {
                misses += 1;
            }
            widths.push(br.width());
        }
        let med = median(&widths);
        ok &= misses == 0 && med <= MEDIAN_WIDTH;
        parts.push(format!("{label}: {misses} misses, median width {med:.2e}"));
    }
    (ok, format!("{PAIRS} pairs; {}", parts.join("; ")))
}

fn c2_normal_lines() -> Outcome {
    const KAPPA_MAX: f64 = 0.5;
    const LIMIT_TOL: f64 = 0.02;
    let b = ball();
    let mut worst = 0.0f64;
    let mut lambda_ok = true;
    for x in b.boundary_sample(20, 0xacc2) {
        let curve = normal_line_curve(&b, &x, 0.9, 5.0).unwrap();
        lambda_ok &= curve.lambda == 1.0;
        let cert = almost_geodesic_certificate(&b, &curve.samples, 1.0).unwrap();
        worst = worst.max(cert.kappa_distance.max(cert.kappa_speed));
    }
    // The distance defect; the speed defect at r = 1 is ln 2 at t = 0 by construction.
    let unit = normal_line_curve(&b, &basis(2, 0), 1.0, 5.0).unwrap();
    let k1 = unit.kappa;
    let target = 0.5 * 2f64.ln();
    let ok = lambda_ok && worst <= KAPPA_MAX && (k1 - target).abs() <= LIMIT_TOL;
    (ok, format!("r=0.9 worst kappa {worst:.4}; r=1 kappa {k1:.4} vs ln2/2 = {target:.4}"))
}

fn c3_classification() -> Outcome {
    const FIXED_TOL: f64 = 1e-8;
    const ANCHOR_TOL: f64 = 1e-6;
    const FACE_TOL: f64 = 1e-4;
    const CONJUGATES: usize = 50;
    let b = ball();
    let z0 = CVec::zeros(2);
    let u = CMat::from_diagonal(&CVec::from_vec(vec![C64::from_polar(1.0, 0.7), C64::from_polar(1.0, 2.1)]));
    let rot = Automorphism::ball_mobius(&b, rotation_matrix(&u)).unwrap();
    let par = Automorphism::ball_mobius(&b, heisenberg_matrix(2, 1.0)).unwrap();
    let hyp = a_s(1.0);

    let r = classify(&b, &rot, &z0).unwrap();
    let fixed_ok = r.tag == MapType::Elliptic && norm(r.fixed_point.as_ref().unwrap()) <= FIXED_TOL;
    let r = classify(&b, &hyp, &z0).unwrap();
    let anchor_err = dist(r.x_plus().unwrap(), &basis(2, 0)).max(dist(r.x_minus().unwrap(), &-basis(2, 0)));
    let hyp_ok = r.tag == MapType::Hyperbolic && anchor_err <= ANCHOR_TOL;
    let r = classify(&b, &par, &z0).unwrap();
    let (fa, ba) = (r.diagnostics.forward_anchor.as_ref().unwrap(), r.diagnostics.backward_anchor.as_ref().unwrap());
    let par_ok = r.tag == MapType::Parabolic && b.same_complex_face(fa, ba, FACE_TOL).unwrap();

    let mut g = rng(0xacc3);
    let mut wrong = 0;
    for _ in 0..CONJUGATES {
        let k = lie::random_element(Group::Su(2), &mut g).act_on(&b).unwrap();
        for (f, want) in [(&rot, MapType::Elliptic), (&hyp, MapType::Hyperbolic), (&par, MapType::Parabolic)] {
            let c = f.conjugate_by(&k).unwrap();
            match classify(&b, &c, &z0) {
                Ok(r) if r.tag == want => {}
                _ => wrong += 1,
            }
        }
    }
    let ok = fixed_ok && hyp_ok && par_ok && wrong == 0;
    (ok, format!("base maps ok: {fixed_ok}/{hyp_ok}/{par_ok}, anchor error {anchor_err:.1e}, {wrong} of {} conjugates misclassified", 3 * CONJUGATES))
}

fn c4_gromov() -> Outcome {
    const COMMON_LOWER: f64 = 5.0;
    const ANTIPODAL_UPPER: f64 = 1.0;
    let b = ball();
    let z0 = CVec::zeros(2);
    let e1 = basis(2, 0);
    let mut best_common = 0.0f64;
    let mut worst_anti = 0.0f64;
    for n in 1..=16 {
        let r = (0.5 * n as f64).tanh();
        let th = 1.0 - r;
        let x = scale(&e1, r);
        let y = cvec_re(&[r * th.cos(), r * th.sin()]);
        let common = gromov_product(&b, &x, &y, &z0).unwrap();
        best_common = best_common.max(common.value.lower);
        let anti = gromov_product(&b, &x, &cvec_re(&[-r * th.cos(), r * th.sin()]), &z0).unwrap();
        worst_anti = worst_anti.max(anti.value.upper);
    }
    let ok = best_common > COMMON_LOWER && worst_anti < ANTIPODAL_UPPER;
    (ok, format!("common endpoint max lower {best_common:.3}; antipodal max upper {worst_anti:.3}"))
}

fn c5_rescaling() -> Outcome {
    const SAMPLES: usize = 1000;
    const X_PLUS_TOL: f64 = 1e-3;
    const GROUP_LAW_TOL: f64 = 1e-3;
    let b = ball();
    let sigma = normal_line_curve(&b, &basis(2, 0), 1.0, 12.0).unwrap();
    let lim = rescale_limit(&b, &sigma, &default_t_grid(), &RescaleOptions::from_tolerances(b.tolerances())).unwrap();
    let converged = lim.is_converged();
    // With A(x_i) = e_i the half-plane of the limit is { Re z < 1 } along e_1.
    let mut g = rng(0xacc5);
    let mut outside = 0;
    let mut literal_outside = 0;
    for _ in 0..SAMPLES {
        let x = -4.0 + (5.0 - 1e-3) * g.random::<f64>();
        let y = -4.0 + 8.0 * g.random::<f64>();
        if !lim.contains(&cvec(&[(x, y), (0.0, 0.0)])) {
            outside += 1;
        }
        if !lim.contains(&cvec(&[(y, x), (0.0, 0.0)])) {
            literal_outside += 1;
        }
    }
    let line = detect_invariant_line(&lim).unwrap();
    let fam = pullback_family(&b, &a_s(1.0)).unwrap();
    let rep = fam.report(1.0).unwrap();
    let xp_err = rep.classification.as_ref().and_then(|c| c.x_plus()).map(|x| dist(x, &basis(2, 0))).unwrap_or(f64::INFINITY);
    let law = fam.group_law_defect(1.0, 1.0);
    let ok = converged && outside == 0 && line.margin > 0.0 && rep.is_parabolic() && xp_err <= X_PLUS_TOL && law <= GROUP_LAW_TOL;
    (
        ok,
        format!(
            "converged at {:?}, {outside}/{SAMPLES} line samples outside (Im-orientation: {literal_outside}), margin {:.3}, parabolic {}, x+ error {xp_err:.1e}, group law {law:.1e}",
            lim.converged_at,
            line.margin,
            rep.is_parabolic()
        ),
    )
}

fn c6_limit_set() -> Outcome {
    const HAUSDORFF_TOL: f64 = 1e-2;
    const DEPTH: usize = 8;
    let e = e12();
    let gens = [
        Automorphism::disc_lift(&e, c(-0.6, 0.0), 0.0, identity(1)).unwrap(),
        Automorphism::disc_lift(&e, c(0.0, -0.55), 0.0, identity(1)).unwrap(),
    ];
    let ls = limit_set_sample(&e, &gens, DEPTH, &CVec::zeros(2)).unwrap();
    // Hausdorff distance to the circle { |z1| = 1, z2 = 0 }, both directions.
    let to_circle = ls.points.iter().map(|p| (p[0].norm() - 1.0).abs() + p[1].norm()).fold(0.0, f64::max);
    let coverage = (0..3600)
        .map(|k| {
            let q = cvec(&[((2.0 * PI * k as f64 / 3600.0).cos(), (2.0 * PI * k as f64 / 3600.0).sin()), (0.0, 0.0)]);
            ls.points.iter().map(|p| dist(p, &q)).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let h = to_circle.max(coverage);
    let gap = lie::dimension_gap_report(&e).unwrap();
    let ok = h <= HAUSDORFF_TOL && ls.all_singleton() && gap.holds && gap.limit_dim == 1 && gap.boundary_dim - 2 == 1;
    (
        ok,
        format!(
            "{} points, Hausdorff {h:.2e}, {} faces all singleton {}, limit dimension {} vs boundary dimension minus two {}",
            ls.points.len(),
            ls.face_count(),
            ls.all_singleton(),
            gap.limit_dim,
            gap.boundary_dim - 2
        ),
    )
}

fn c7_orbit_qi() -> Outcome {
    const ALPHA_MAX: f64 = 1.01;
    const BETA_MAX: f64 = 0.01;
    const PAIRS: usize = 1000;
    let b = ball();
    let f = orbit_qi_constants(&b, &a_s(1.0), &CVec::zeros(2), 20).unwrap();
    let e = e12();
    let lift = Automorphism::ellipsoid_lift(&e, dilation_matrix(1, 1.0), identity(1)).unwrap();
    let fe = orbit_qi_constants(&e, &lift, &CVec::zeros(2), 31).unwrap();
    let ok = f.alpha <= ALPHA_MAX && f.beta <= BETA_MAX && fe.alpha.is_finite() && fe.beta.is_finite() && fe.pairs >= PAIRS;
    (ok, format!("ball ({:.4}, {:.2e}); ellipsoid ({:.4}, {:.3}) on {} pairs", f.alpha, f.beta, fe.alpha, fe.beta, fe.pairs))
}

fn c8_shadowing() -> Outcome {
    const AXIS_TOL: f64 = 0.1;
    const A_MAX: f64 = 1.05;
    const B_MAX: f64 = 0.2;
    let b = ball();
    let h = a_s(1.0);
    let r = b.uniform_inradius().unwrap();
    let s = axis_shadow(&b, &h, r).unwrap();
    let grid: Vec<f64> = (0..21).map(|k| -5.0 + 0.5 * k as f64).collect();
    let d = shadow_parameters(&b, &h, &s.curve, 10, &grid).unwrap();
    let ok = s.hausdorff.upper <= AXIS_TOL && d.part1_holds() && d.a <= A_MAX && d.b <= B_MAX;
    (ok, format!("axis upper {:.2e}; R {:.3}, part one {}, (A, B) = ({:.4}, {:.4})", s.hausdorff.upper, d.r, d.part1_holds(), d.a, d.b))
}

fn c9_lie() -> Outcome {
    const JORDAN_TOL: f64 = 1e-8;
    const POLAR_TOL: f64 = 1e-8;
    const T_TOL: f64 = 1e-6;
    const TAU_TOL: f64 = 1e-3;
    const N: usize = 1000;
    let mut jordan = 0.0f64;
    let mut polar = 0.0f64;
    let mut t_err = 0.0f64;
    let mut disagree = 0;
    let mut total = 0;
    let mut g = rng(0xacc9);
    for grp in [Group::Su(2), Group::Sl2R] {
        let dom = ConvexDomain::unit_ball(grp.ball_dim());
        let z0 = CVec::zeros(grp.ball_dim());
        for i in 0..N {
            let x = match i % 10 {
                0 => lie::random_k0(grp, &mut g),
                1 => lie::random_m_a(grp, &mut g),
                _ => lie::random_element(grp, &mut g),
            };
            let j = lie::jordan_decompose(&x).unwrap();
            jordan = jordan.max(j.recomposition_error(&x)).max(j.commutation_error());
            let p = lie::polar_decompose(&x).unwrap();
            polar = polar.max(p.recomposition_error(&x));
            let w = x.act_on(&dom).unwrap().apply(&z0);
            t_err = t_err.max((p.t - atanh_stable(norm(&w))).abs());
            let ty = lie::classify_lie(&x).unwrap();
            let tl = lie::translation_length(&x, &z0, 1 << 20).unwrap();
            total += 1;
            if ty.is_axial() != tl.is_positive() {
                disagree += 1;
            }
        }
    }
    let mut tau_err = 0.0f64;
    for s in [0.5, 1.0, 2.0] {
        let tl = lie::translation_length(&lie::axis(Group::Su(2), s), &CVec::zeros(2), 1 << 20).unwrap();
        tau_err = tau_err.max((tl.tau - s).abs());
    }
    let ok = jordan <= JORDAN_TOL && polar <= POLAR_TOL && t_err <= T_TOL && tau_err <= TAU_TOL && disagree == 0;
    (
        ok,
        format!("Jordan {jordan:.1e}, polar {polar:.1e}, t error {t_err:.1e}, tau error {tau_err:.1e}, axial/tau agreement {}/{total}", total - disagree),
    )
}

fn c10_ping_pong() -> Outcome {
    const CAP: f64 = 0.5;
    const PROBES: usize = 1000;
    let b = ball();
    let h1 = a_s(1.0);
    let swap = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let h2 = h1.conjugate_by(&Automorphism::ball_mobius(&b, rotation_matrix(&swap)).unwrap()).unwrap();
    let cert = ping_pong_certificate(&b, &h1, &h2, CAP).unwrap();
    let cl = &cert.classification;
    let inside = cl.tag == MapType::Hyperbolic
        && dist(cl.x_plus().unwrap(), &cert.h1_points.0) < CAP
        && dist(cl.x_minus().unwrap(), &cert.h2_points.0) < CAP;
    let ok = cert.m <= 10 && cert.n <= 10 && cert.probes >= PROBES && inside;
    (ok, format!("(m, n) = ({}, {}), {} probes, product {} with anchors in caps {inside}", cert.m, cert.n, cert.probes, cl.tag))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("ball brackets enclose the closed form", c1_ball_brackets),
        ("normal lines are almost-geodesics", c2_normal_lines),
        ("trichotomy on the ball", c3_classification),
        ("Gromov product dichotomy", c4_gromov),
        ("rescaling limit and pullback flow", c5_rescaling),
        ("ellipsoid limit set", c6_limit_set),
        ("orbit quasi-isometry constants", c7_orbit_qi),
        ("axis shadowing", c8_shadowing),
        ("rank-one decompositions", c9_lie),
        ("ping-pong certificate", c10_ping_pong),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(r) => r,
            Err(e) => {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                (false, format!("panicked: {}", msg.unwrap_or_default()))
            }
        };
        if !ok {
            failed += 1;
        }
        println!("criterion {:>2} {}: {name}: {detail} [{:.1} s]", i + 1, if ok { "PASS" } else { "FAIL" }, t0.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
