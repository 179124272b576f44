use std::f64::consts::PI;

use rand::Rng;

use super::report::{PlotKind, Table};
use super::spec::{matrix_spec, AutomorphismSpec, DomainKindSpec, DomainSpec, ExperimentSpec};
use super::Ctx;
use crate::automorphism_dynamics::*;
use crate::domain_geometry::{ConvexDomain, DomainKind};
use crate::error::Error;
use crate::frankel_rescaling::{default_t_grid, detect_invariant_line, pullback_family, rescale_limit, RescaleOptions};
use crate::kobayashi_metric::{almost_geodesic_certificate, distance, gromov_product, normal_line_curve};
use crate::linalg::*;
use crate::rank_one_lie::{self as lie, Group};

pub struct Suite {
    pub name: &'static str,
    /// The result exercised, in words.
    pub header: &'static str,
    /// Number of automorphisms a spec must supply when it supplies any.
    pub automorphisms: usize,
    /// Parameter names with their defaults.
    pub parameters: &'static [(&'static str, f64)],
    pub(crate) default_domain: fn() -> DomainSpec,
    pub(crate) default_automorphisms: fn() -> Vec<AutomorphismSpec>,
    pub(crate) run: fn(&mut Ctx),
}

pub static SUITES: [Suite; 10] = [
    Suite {
        name: "ball-oracle",
        header: "Kobayashi distance brackets on the ball against the Moebius-invariant closed form",
        automorphisms: 0,
        parameters: &[("pairs", 100.0), ("radius", 0.95), ("median_width", 5e-3)],
        default_domain: ball2,
        default_automorphisms: Vec::new,
        run: run_ball_oracle,
    },
    Suite {
        name: "normal-lines",
        header: "inward normal lines are almost-geodesics with lambda equal to one",
        automorphisms: 0,
        parameters: &[("points", 20.0), ("r", 0.9), ("t_max", 5.0), ("kappa_max", 0.5), ("limit_r", 1.0), ("limit_tol", 0.02)],
        default_domain: ball2,
        default_automorphisms: Vec::new,
        run: run_normal_lines,
    },
    Suite {
        name: "wolff-denjoy",
        header: "Wolff-Denjoy trichotomy for automorphisms of a convex domain",
        automorphisms: 3,
        parameters: &[("conjugates", 50.0), ("fixed_tol", 1e-8), ("anchor_tol", 1e-6), ("face_tol", 1e-4), ("orbit_steps", 12.0)],
        default_domain: ball2,
        default_automorphisms: trichotomy_maps,
        run: run_wolff_denjoy,
    },
    Suite {
        name: "gromov",
        header: "Gromov products diverge exactly along sequences with a common boundary limit",
        automorphisms: 0,
        parameters: &[("levels", 16.0), ("common_lower", 5.0), ("antipodal_upper", 1.0)],
        default_domain: ball2,
        default_automorphisms: Vec::new,
        run: run_gromov,
    },
    Suite {
        name: "rescale-ball",
        header: "rescaling along a normal line converges to a limit with an invariant complex line and a parabolic pull-back flow",
        automorphisms: 1,
        parameters: &[("samples", 1000.0), ("r", 1.0), ("t_max", 12.0), ("x_plus_tol", 1e-3), ("group_law_tol", 1e-3)],
        default_domain: ball2,
        default_automorphisms: dilation,
        run: run_rescale,
    },
    Suite {
        name: "ellipsoid-limit-set",
        header: "limit sets of lifted ellipsoid automorphisms lie in singleton faces and miss the higher-exponent directions",
        automorphisms: 2,
        parameters: &[("depth", 8.0), ("hausdorff_tol", 1e-2), ("sphere_points", 3600.0)],
        default_domain: e12,
        default_automorphisms: disc_pair,
        run: run_limit_set,
    },
    Suite {
        name: "orbit-qi",
        header: "orbits of hyperbolic automorphisms are quasi-isometric embeddings of the integers",
        automorphisms: 1,
        parameters: &[("n_max", 20.0), ("alpha_max", 1.01), ("beta_max", 0.01), ("lift_n_max", 31.0), ("lift_pairs", 1000.0)],
        default_domain: ball2,
        default_automorphisms: dilation,
        run: run_orbit_qi,
    },
    Suite {
        name: "shadowing",
        header: "orbits of hyperbolic automorphisms shadow an almost-geodesic axis with a quasi-isometric time change",
        automorphisms: 1,
        parameters: &[("m_max", 10.0), ("grid_points", 21.0), ("t_min", -5.0), ("t_max", 5.0), ("axis_tol", 0.1), ("a_max", 1.05), ("b_max", 0.2)],
        default_domain: ball2,
        default_automorphisms: dilation,
        run: run_shadowing,
    },
    Suite {
        name: "lie-toolkit",
        header: "Jordan and polar decompositions in rank one, with translation length detecting axial elements",
        automorphisms: 0,
        parameters: &[("samples", 1000.0), ("jordan_tol", 1e-8), ("polar_tol", 1e-8), ("t_tol", 1e-6), ("tau_tol", 1e-3)],
        default_domain: ball2,
        default_automorphisms: Vec::new,
        run: run_lie,
    },
    Suite {
        name: "ping-pong",
        header: "ping-pong for hyperbolic automorphisms whose hyperplane sets are disjoint",
        automorphisms: 2,
        parameters: &[("cap", 0.5), ("max_exponent", 10.0), ("probes", 1000.0), ("orbit_steps", 16.0)],
        default_domain: ball2,
        default_automorphisms: orthogonal_pair,
        run: run_ping_pong,
    },
];

pub fn find_suite(name: &str) -> Option<&'static Suite> {
    SUITES.iter().find(|s| s.name == name)
}

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.name).collect()
}

/// The built-in spec of a suite, with its default automorphisms written out.
pub fn default_spec(name: &str) -> Option<ExperimentSpec> {
    let s = find_suite(name)?;
    Some(ExperimentSpec {
        name: s.name.into(),
        domain: (s.default_domain)(),
        automorphisms: (s.default_automorphisms)(),
        parameters: Default::default(),
        seed: 1,
        outputs: "out".into(),
    })
}

fn ball2() -> DomainSpec {
    DomainSpec {
        dim: 2,
        kind: DomainKindSpec::Ball,
        center: Some(vec![[0.0, 0.0]; 2]),
        radius: Some(1.0),
        exponents: None,
        linear: None,
        offset: None,
        base: None,
        parts: None,
    }
}

fn e12() -> DomainSpec {
    DomainSpec { kind: DomainKindSpec::Ellipsoid, center: None, radius: None, exponents: Some(vec![1, 2]), ..ball2() }
}

fn from_matrix(m: &CMat) -> AutomorphismSpec {
    AutomorphismSpec { matrix: Some(matrix_spec(m)), a: None, u: None, block_unitary: None }
}

fn dilation() -> Vec<AutomorphismSpec> {
    vec![from_matrix(&dilation_matrix(2, 1.0))]
}

fn trichotomy_maps() -> Vec<AutomorphismSpec> {
    let u = CMat::from_diagonal(&CVec::from_vec(vec![C64::from_polar(1.0, 0.7), C64::from_polar(1.0, 2.1)]));
    vec![from_matrix(&rotation_matrix(&u)), from_matrix(&dilation_matrix(2, 1.0)), from_matrix(&heisenberg_matrix(2, 1.0))]
}

fn disc_pair() -> Vec<AutomorphismSpec> {
    let d = |a: [f64; 2]| AutomorphismSpec { matrix: None, a: Some(a), u: Some([1.0, 0.0]), block_unitary: None };
    vec![d([-0.6, 0.0]), d([0.0, -0.55])]
}

fn swap() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

fn orthogonal_pair() -> Vec<AutomorphismSpec> {
    let a = dilation_matrix(2, 1.0);
    let r = rotation_matrix(&swap());
    vec![from_matrix(&a), from_matrix(&(&r * &a * group_inverse(&r)))]
}

fn coords(lead: f64, z: &CVec, trail: &[f64]) -> Vec<f64> {
    let mut row = vec![lead];
    for x in z.iter() {
        row.push(x.re);
        row.push(x.im);
    }
    row.extend_from_slice(trail);
    row
}

/// Boundary point hit by the ray from the interior point along u.
fn boundary_along(dom: &ConvexDomain, u: &CVec) -> crate::Result<CVec> {
    let o = dom.interior_point();
    let t = dom.ray_exit(o, u)?;
    Ok(o + scale(u, t))
}

fn orbit_table(dom: &ConvexDomain, name: &str, h: &Automorphism, steps: usize) -> Table {
    let mut t = Table::with_coords(PlotKind::Orbit, name, "n", dom.dim(), &["boundary_distance"]);
    let mut z = dom.interior_point().clone();
    for n in 0..=steps {
        if !dom.is_inside(&z) {
            break;
        }
        let bd = dom.boundary_distance(&z).unwrap_or(f64::NAN);
        t.push(coords(n as f64, &z, &[bd]));
        z = h.apply(&z);
    }
    t
}

/// Attracting fixed point of a hyperbolic ball matrix, by power iteration on C^{d+1}.
fn dominant_point(m: &CMat) -> CVec {
    let n = m.nrows();
    let mut v = CVec::from_element(n, c(1.0, 0.0)) + basis(n, 0).map(|x| x * 0.3);
    for _ in 0..400 {
        v = m * &v;
        v = unit(&v);
    }
    let last = v[n - 1];
    CVec::from_iterator(n - 1, v.iter().take(n - 1).map(|x| x / last))
}

/// arctanh |phi_z(w)| on the unit ball, computed independently of the metric module.
fn closed_form(z: &CVec, w: &CVec) -> f64 {
    let num = (1.0 - norm_sqr(z)) * (1.0 - norm_sqr(w));
    let den = (c(1.0, 0.0) - inner(z, w)).norm_sqr();
    atanh_stable((1.0 - num / den).max(0.0).sqrt())
}

fn run_ball_oracle(ctx: &mut Ctx) {
    const OP: &str = "kobayashi_metric::distance";
    let dom = ctx.dom.clone();
    let (pairs, radius, width) = (ctx.count("pairs"), ctx.param("radius"), ctx.param("median_width"));
    let seed = ctx.seed;
    let data = ctx.stage("brackets", OP, || {
        let DomainKind::Ball { center, radius: r } = dom.kind() else {
            return Err(Error::Precondition("the closed form needs a ball".into()));
        };
        let mut g = rng(seed);
        let mut out = Vec::new();
        for _ in 0..pairs {
            let z = random_in_ball(&mut g, dom.dim(), radius);
            let w = random_in_ball(&mut g, dom.dim(), radius);
            let b = distance(&dom, &(center + scale(&z, *r)), &(center + scale(&w, *r)))?;
            out.push((b, closed_form(&z, &w)));
        }
        Ok(out)
    });
    if let Some(d) = &data {
        let mut t = Table::new(PlotKind::Brackets, "brackets", &["id", "lower", "upper", "width", "oracle"]);
        for (i, (b, o)) in d.iter().enumerate() {
            t.push(vec![i as f64, b.lower, b.upper, b.width(), *o]);
        }
        ctx.table(t);
        ctx.constant("median_width", median(&d.iter().map(|x| x.0.width()).collect::<Vec<_>>()));
    }
    ctx.check_on(&data, "brackets enclose the closed form", OP, |d| {
        let miss = d.iter().filter(|(b, o)| !b.encloses(*o)).count();
        (miss == 0, format!("{miss} of {} pairs missed", d.len()))
    });
    ctx.check_on(&data, "median bracket width", OP, |d| {
        let m = median(&d.iter().map(|x| x.0.width()).collect::<Vec<_>>());
        (m <= width, format!("median width {m:.3e} (bound {width:.1e})"))
    });
}

fn run_normal_lines(ctx: &mut Ctx) {
    const OP: &str = "kobayashi_metric::normal_line_curve";
    let dom = ctx.dom.clone();
    let (n, r, t_max, kmax) = (ctx.count("points"), ctx.param("r"), ctx.param("t_max"), ctx.param("kappa_max"));
    let (lr, ltol) = (ctx.param("limit_r"), ctx.param("limit_tol"));
    let seed = ctx.seed;
    let certs = ctx.stage("certificates", "kobayashi_metric::almost_geodesic_certificate", || {
        let mut out = Vec::new();
        for x in dom.boundary_sample(n, seed) {
            let curve = normal_line_curve(&dom, &x, r, t_max)?;
            let cert = almost_geodesic_certificate(&dom, &curve.samples, 1.0)?;
            out.push((curve.lambda, cert.kappa_distance.max(cert.kappa_speed)));
        }
        Ok(out)
    });
    ctx.check_on(&certs, "lambda equals one", OP, |c| {
        let bad = c.iter().filter(|x| x.0 != 1.0).count();
        (bad == 0, format!("{bad} of {} curves with lambda != 1", c.len()))
    });
    ctx.check_on(&certs, "kappa bound", "kobayashi_metric::almost_geodesic_certificate", |c| {
        let k = c.iter().map(|x| x.1).fold(0.0, f64::max);
        (k <= kmax, format!("worst kappa {k:.4} (bound {kmax})"))
    });
    if let Some(c) = &certs {
        ctx.constant("kappa", c.iter().map(|x| x.1).fold(0.0, f64::max));
    }
    let line = ctx.stage("reference line", OP, || normal_line_curve(&dom, &boundary_along(&dom, &basis(dom.dim(), 0))?, lr, t_max));
    if let Some(l) = &line {
        let mut t = Table::with_coords(PlotKind::Curve, "reference-curve", "t", dom.dim(), &[]);
        for (s, z) in &l.samples {
            t.push(coords(*s, z, &[]));
        }
        ctx.table(t);
        ctx.constant("kappa_reference", l.kappa);
    }
    ctx.check_on(&line, "distance defect of the reference line", OP, |l| {
        let target = 0.5 * 2f64.ln();
        ((l.kappa - target).abs() <= ltol, format!("kappa {:.4} vs ln 2 / 2 = {target:.4} (tolerance {ltol})", l.kappa))
    });
}

fn run_wolff_denjoy(ctx: &mut Ctx) {
    const OP: &str = "automorphism_dynamics::classify";
    let dom = ctx.dom.clone();
    let (rot, hyp, par) = (ctx.autos[0].clone(), ctx.autos[1].clone(), ctx.autos[2].clone());
    let (n_conj, ftol, atol, face_tol) = (ctx.count("conjugates"), ctx.param("fixed_tol"), ctx.param("anchor_tol"), ctx.param("face_tol"));
    let z0 = dom.interior_point().clone();
    let seed = ctx.seed;

    let r = ctx.stage("elliptic", OP, || classify(&dom, &rot, &z0));
    ctx.check_on(&r, "elliptic map with fixed point", OP, |r| {
        let Some(p) = &r.fixed_point else { return (false, format!("classified {}", r.tag)) };
        let res = dist(&rot.apply(p), p);
        (r.tag == MapType::Elliptic && res <= ftol, format!("{} with fixed-point residual {res:.1e}, |p| = {:.1e}", r.tag, norm(p)))
    });
    let r = ctx.stage("hyperbolic", OP, || classify(&dom, &hyp, &z0));
    ctx.check_on(&r, "hyperbolic map with anchors", OP, |r| {
        let (Some(xp), Some(xm)) = (r.x_plus(), r.x_minus()) else { return (false, format!("classified {}", r.tag)) };
        let Some(m) = hyp.matrix() else { return (false, "anchor oracle needs a matrix".into()) };
        let err = dist(xp, &dominant_point(m)).max(dist(xm, &dominant_point(&group_inverse(m))));
        (r.tag == MapType::Hyperbolic && err <= atol, format!("{} with anchor error {err:.1e}", r.tag))
    });
    if let Some(r) = &r {
        if let (Some(xp), Some(m)) = (r.x_plus(), hyp.matrix()) {
            ctx.constant("anchor_error", dist(xp, &dominant_point(m)));
        }
    }
    let r = ctx.stage("parabolic", OP, || classify(&dom, &par, &z0));
    ctx.check_on(&r, "parabolic map with one face", OP, |r| {
        let d = &r.diagnostics;
        let (Some(a), Some(b)) = (&d.forward_anchor, &d.backward_anchor) else { return (false, format!("classified {}", r.tag)) };
        let same = dom.same_complex_face(a, b, face_tol).unwrap_or(false);
        (r.tag == MapType::Parabolic && same, format!("{} with face gap {:.1e}", r.tag, d.face_gap.unwrap_or(f64::NAN)))
    });
    let wrong = ctx.stage("conjugates", OP, || {
        let grp = Group::Su(dom.dim());
        let mut g = rng(seed);
        let mut wrong = Vec::new();
        for i in 0..n_conj {
            let k = lie::random_element(grp, &mut g).act_on(&dom)?;
            for (f, want) in [(&rot, MapType::Elliptic), (&hyp, MapType::Hyperbolic), (&par, MapType::Parabolic)] {
                match classify(&dom, &f.conjugate_by(&k)?, &z0) {
                    Ok(r) if r.tag == want => {}
                    Ok(r) => wrong.push(format!("#{i} {want} as {}", r.tag)),
                    Err(e) => wrong.push(format!("#{i} {want}: {e}")),
                }
            }
        }
        Ok(wrong)
    });
    ctx.check_on(&wrong, "conjugates keep their type", OP, |w| {
        (w.is_empty(), format!("{} of {} misclassified {}", w.len(), 3 * n_conj, w.first().cloned().unwrap_or_default()))
    });
    let steps = ctx.count("orbit_steps");
    ctx.table(orbit_table(&dom, "hyperbolic-orbit", &hyp, steps));
}

fn run_gromov(ctx: &mut Ctx) {
    const OP: &str = "kobayashi_metric::gromov_product";
    let dom = ctx.dom.clone();
    let (levels, lo, hi) = (ctx.count("levels"), ctx.param("common_lower"), ctx.param("antipodal_upper"));
    let data = ctx.stage("products", OP, || {
        if dom.dim() < 2 {
            return Err(Error::Precondition("the tilted sequences need dimension at least two".into()));
        }
        let o = dom.interior_point().clone();
        let d = dom.dim();
        let mut out = Vec::new();
        for n in 1..=levels {
            let r = (0.5 * n as f64).tanh();
            let th = 1.0 - r;
            let along = |u: CVec| -> crate::Result<CVec> { Ok(&o + scale(&(boundary_along(&dom, &u)? - &o), r)) };
            let x = along(basis(d, 0))?;
            let y = along(basis(d, 0).map(|z| z * th.cos()) + basis(d, 1).map(|z| z * th.sin()))?;
            let w = along(basis(d, 0).map(|z| z * -th.cos()) + basis(d, 1).map(|z| z * th.sin()))?;
            out.push((n, gromov_product(&dom, &x, &y, &o)?.value, gromov_product(&dom, &x, &w, &o)?.value));
        }
        Ok(out)
    });
    if let Some(d) = &data {
        let mut t = Table::new(PlotKind::Brackets, "products", &["id", "lower", "upper", "width", "level", "antipodal"]);
        for (i, (n, a, b)) in d.iter().enumerate() {
            t.push(vec![(2 * i) as f64, a.lower, a.upper, a.width(), *n as f64, 0.0]);
            t.push(vec![(2 * i + 1) as f64, b.lower, b.upper, b.width(), *n as f64, 1.0]);
        }
        ctx.table(t);
    }
    ctx.check_on(&data, "common endpoint diverges", OP, |d| {
        let m = d.iter().map(|x| x.1.lower).fold(0.0, f64::max);
        (m > lo, format!("largest lower bracket {m:.3} (must exceed {lo})"))
    });
    ctx.check_on(&data, "antipodal endpoints stay bounded", OP, |d| {
        let m = d.iter().map(|x| x.2.upper).fold(0.0, f64::max);
        (m < hi, format!("largest upper bracket {m:.3} (must stay below {hi})"))
    });
    if let Some(d) = &data {
        ctx.constant("common_max_lower", d.iter().map(|x| x.1.lower).fold(0.0, f64::max));
        ctx.constant("antipodal_max_upper", d.iter().map(|x| x.2.upper).fold(0.0, f64::max));
    }
}

fn run_rescale(ctx: &mut Ctx) {
    const OP: &str = "frankel_rescaling::rescale_limit";
    let dom = ctx.dom.clone();
    let h = ctx.autos[0].clone();
    let (samples, r, t_max, xtol, ltol) = (ctx.count("samples"), ctx.param("r"), ctx.param("t_max"), ctx.param("x_plus_tol"), ctx.param("group_law_tol"));
    let pf = ctx.preferred_first.clone();
    let seed = ctx.seed;
    let lim = ctx.stage("rescaling", OP, || {
        let x = boundary_along(&dom, &basis(dom.dim(), 0))?;
        let sigma = normal_line_curve(&dom, &x, r, t_max)?;
        let mut opts = RescaleOptions::from_tolerances(dom.tolerances());
        opts.preferred_first = pf;
        rescale_limit(&dom, &sigma, &default_t_grid(), &opts)
    });
    if let Some(l) = &lim {
        let mut t = Table::new(PlotKind::Residuals, "residuals", &["n", "R", "hausdorff"]);
        for (n, s) in l.steps.iter().enumerate() {
            for (rad, v) in l.ladder.iter().zip(&s.residuals) {
                t.push(vec![n as f64, *rad, *v]);
            }
        }
        ctx.table(t);
        ctx.constant("converged_at", l.converged_at.map(|k| k as f64).unwrap_or(f64::NAN));
    }
    ctx.check_on(&lim, "residual ladder converges", OP, |l| {
        let at = l.converged_at.map(|k| k.to_string()).unwrap_or_else(|| "none".into());
        (l.is_converged(), format!("converged at step {at}{}", l.aborted.as_ref().map(|a| format!(", aborted: {a}")).unwrap_or_default()))
    });
    ctx.check_on(&lim, "limit contains the half-plane slice", OP, |l| {
        // With A(x_i) = e_i the limit along e_1 is the half-plane { Re z < 1 }.
        let mut g = rng(seed);
        let d = l.limit.dim();
        let out = (0..samples)
            .filter(|_| {
                let x = -4.0 + (5.0 - 1e-3) * g.random::<f64>();
                let y = -4.0 + 8.0 * g.random::<f64>();
                !l.contains(&basis(d, 0).map(|z| z * c(x, y)))
            })
            .count();
        (out == 0, format!("{out} of {samples} points of {{z e1 : Re z < 1 - 1e-3}} outside"))
    });
    let line = match &lim {
        Some(l) => ctx.stage("invariant line", "frankel_rescaling::detect_invariant_line", || detect_invariant_line(l)),
        None => None,
    };
    ctx.check_on(&line, "invariant direction with positive margin", "frankel_rescaling::detect_invariant_line", |l| {
        (l.margin > 0.0, format!("margin {:.3}, runner-up {:.3}", l.margin, l.runner_up))
    });
    if let Some(l) = &line {
        ctx.constant("line_margin", l.margin);
    }
    let fam = ctx.stage("pull-back", "frankel_rescaling::pullback_family", || {
        let f = pullback_family(&dom, &h)?;
        let rep = f.report(1.0)?;
        Ok((f, rep))
    });
    ctx.check_on(&fam, "u_1 is parabolic at the attracting point", "frankel_rescaling::pullback_one_parameter", |(f, rep)| {
        let want = f.classification.x_plus().cloned().unwrap_or_else(|| CVec::zeros(dom.dim()));
        let got = rep.classification.as_ref().and_then(|c| c.x_plus().cloned());
        let err = got.map(|x| dist(&x, &want)).unwrap_or(f64::INFINITY);
        (rep.is_parabolic() && err <= xtol, format!("parabolic {}, x+ error {err:.1e}", rep.is_parabolic()))
    });
    ctx.check_on(&fam, "group law", "frankel_rescaling::pullback_family", |(f, _)| {
        let d = f.group_law_defect(1.0, 1.0);
        (d <= ltol, format!("|u_1 u_1 - u_2| = {d:.1e}"))
    });
    if let Some((f, rep)) = &fam {
        ctx.constant("exponent", f.exponent as f64);
        ctx.constant("group_law_defect", f.group_law_defect(1.0, 1.0));
        ctx.constant("fit_residual", rep.fit_residual.unwrap_or(f64::NAN));
    }
}

fn run_limit_set(ctx: &mut Ctx) {
    const OP: &str = "automorphism_dynamics::limit_set_sample";
    let dom = ctx.dom.clone();
    let gens = ctx.autos.clone();
    let (depth, htol, m) = (ctx.count("depth"), ctx.param("hausdorff_tol"), ctx.count("sphere_points"));
    let seed = ctx.seed;
    let ls = ctx.stage("limit set", OP, || limit_set_sample(&dom, &gens, depth, dom.interior_point()));
    if let Some(l) = &ls {
        let mut t = Table::with_coords(PlotKind::Orbit, "limit-points", "n", dom.dim(), &["boundary_distance"]);
        for (i, p) in l.points.iter().enumerate() {
            t.push(coords(i as f64, p, &[0.0]));
        }
        ctx.table(t);
        ctx.constant("limit_points", l.points.len() as f64);
    }
    ctx.check_on(&ls, "Hausdorff distance to the unit-block sphere", OP, |l| {
        let Some(exps) = dom.exponents() else { return (false, "needs a generalized ellipsoid".into()) };
        let unit_block: Vec<usize> = (0..exps.len()).filter(|&i| exps[i] == 1).collect();
        let k = unit_block.len();
        let split = |p: &CVec| {
            let v: f64 = unit_block.iter().map(|&i| p[i].norm_sqr()).sum::<f64>();
            (v.sqrt(), (norm_sqr(p) - v).max(0.0).sqrt())
        };
        let to_sphere = l.points.iter().map(|p| {
            let (v, w) = split(p);
            ((v - 1.0).powi(2) + w * w).sqrt()
        });
        let one = to_sphere.fold(0.0, f64::max);
        let mut g = rng(seed);
        let sphere: Vec<CVec> = (0..m)
            .map(|j| {
                let u = if k == 1 { CVec::from_element(1, C64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)) } else { random_unit(&mut g, k) };
                let mut z = CVec::zeros(dom.dim());
                for (a, &i) in unit_block.iter().enumerate() {
                    z[i] = u[a];
                }
                z
            })
            .collect();
        let cover = sphere.iter().map(|q| l.points.iter().map(|p| dist(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
        let h = one.max(cover);
        (h <= htol, format!("Hausdorff {h:.2e} (points to sphere {one:.1e}, coverage {cover:.1e})"))
    });
    ctx.check_on(&ls, "singleton faces", "automorphism_dynamics::face_clusters", |l| {
        (l.all_singleton(), format!("{} faces, all singleton: {}", l.face_count(), l.all_singleton()))
    });
    let gap = ctx.stage("dimension count", "rank_one_lie::dimension_gap_report", || lie::dimension_gap_report(&dom));
    ctx.check_on(&gap, "dimension gap", "rank_one_lie::dimension_gap_report", |g| {
        (g.holds, format!("dim L = {}, dim boundary - 2 = {}", g.limit_dim, g.boundary_dim as i64 - 2))
    });
}

fn run_orbit_qi(ctx: &mut Ctx) {
    const OP: &str = "automorphism_dynamics::orbit_qi_constants";
    let dom = ctx.dom.clone();
    let h = ctx.autos[0].clone();
    let (n_max, amax, bmax, ln, lp) = (ctx.count("n_max"), ctx.param("alpha_max"), ctx.param("beta_max"), ctx.count("lift_n_max"), ctx.count("lift_pairs"));
    let fit = ctx.stage("orbit fit", OP, || orbit_qi_constants(&dom, &h, dom.interior_point(), n_max));
    ctx.check_on(&fit, "multiplicative constant", OP, |f| (f.alpha <= amax, format!("alpha {:.6} (bound {amax})", f.alpha)));
    ctx.check_on(&fit, "additive constant", OP, |f| (f.beta <= bmax, format!("beta {:.2e} (bound {bmax}) over {} pairs", f.beta, f.pairs)));
    if let Some(f) = &fit {
        ctx.constant("alpha", f.alpha);
        ctx.constant("beta", f.beta);
    }
    // Companion: the same dilation lifted to E_{1,2}.
    let lift = ctx.stage("ellipsoid lift fit", OP, || {
        let e = ConvexDomain::ellipsoid(&[1, 2])?;
        let g = Automorphism::ellipsoid_lift(&e, dilation_matrix(1, 1.0), identity(1))?;
        orbit_qi_constants(&e, &g, e.interior_point(), ln)
    });
    ctx.check_on(&lift, "ellipsoid lift constants are finite", OP, |f| {
        (f.alpha.is_finite() && f.beta.is_finite() && f.pairs >= lp, format!("({:.4}, {:.4}) over {} pairs", f.alpha, f.beta, f.pairs))
    });
    if let Some(f) = &lift {
        ctx.constant("lift_alpha", f.alpha);
        ctx.constant("lift_beta", f.beta);
    }
    ctx.table(orbit_table(&dom, "orbit", &h, n_max));
}

fn run_shadowing(ctx: &mut Ctx) {
    const OP: &str = "automorphism_dynamics::shadow_parameters";
    let dom = ctx.dom.clone();
    let h = ctx.autos[0].clone();
    let (m_max, k, t0, t1) = (ctx.param("m_max").round() as i64, ctx.count("grid_points"), ctx.param("t_min"), ctx.param("t_max"));
    let (atol, amax, bmax) = (ctx.param("axis_tol"), ctx.param("a_max"), ctx.param("b_max"));
    let axis = ctx.stage("axis", "automorphism_dynamics::axis_shadow", || axis_shadow(&dom, &h, dom.uniform_inradius()?));
    ctx.check_on(&axis, "orbit stays near the axis", "automorphism_dynamics::axis_shadow", |a| {
        (a.hausdorff.upper <= atol, format!("Hausdorff upper {:.2e} (bound {atol})", a.hausdorff.upper))
    });
    let Some(a) = axis else {
        ctx.check_on(&None::<()>, "shadowing radius", OP, |_| (false, String::new()));
        ctx.check_on(&None::<()>, "time change constants", OP, |_| (false, String::new()));
        return;
    };
    let mut t = Table::with_coords(PlotKind::Curve, "axis", "t", dom.dim(), &[]);
    for (s, z) in &a.curve.samples {
        t.push(coords(*s, z, &[]));
    }
    ctx.table(t);
    let mut t = Table::with_coords(PlotKind::Orbit, "orbit", "n", dom.dim(), &["boundary_distance"]);
    for (n, z) in &a.orbit {
        t.push(coords(*n as f64, z, &[dom.boundary_distance(z).unwrap_or(f64::NAN)]));
    }
    ctx.table(t);
    ctx.constant("axis_hausdorff_upper", a.hausdorff.upper);
    let grid: Vec<f64> = (0..k).map(|i| if k == 1 { t0 } else { t0 + (t1 - t0) * i as f64 / (k - 1) as f64 }).collect();
    let sh = ctx.stage("time change", OP, || shadow_parameters(&dom, &h, &a.curve, m_max, &grid));
    ctx.check_on(&sh, "shadowing radius", OP, |s| {
        (s.part1_holds(), format!("max displacement {:.3e} against 2R = {:.3e} plus allowance {:.1e}", s.part1_max, 2.0 * s.r, s.grid_error))
    });
    ctx.check_on(&sh, "time change constants", OP, |s| (s.a <= amax && s.b <= bmax, format!("(A, B) = ({:.4}, {:.4}) over {} pairs", s.a, s.b, s.pairs)));
    if let Some(s) = &sh {
        ctx.constant("R", s.r);
        ctx.constant("A", s.a);
        ctx.constant("B", s.b);
    }
}

fn run_lie(ctx: &mut Ctx) {
    let (n, jt, pt, tt, taut) = (ctx.count("samples"), ctx.param("jordan_tol"), ctx.param("polar_tol"), ctx.param("t_tol"), ctx.param("tau_tol"));
    let seed = ctx.seed;
    struct Stats {
        jordan: f64,
        commute: f64,
        polar: f64,
        t_err: f64,
        disagree: usize,
        total: usize,
    }
    let stats = ctx.stage("decompositions", "rank_one_lie::jordan_decompose", || {
        let mut s = Stats { jordan: 0.0, commute: 0.0, polar: 0.0, t_err: 0.0, disagree: 0, total: 0 };
        let mut g = rng(seed);
        for grp in [Group::Su(2), Group::Sl2R] {
            let dom = ConvexDomain::unit_ball(grp.ball_dim());
            let z0 = CVec::zeros(grp.ball_dim());
            for i in 0..n {
                let x = match i % 10 {
                    0 => lie::random_k0(grp, &mut g),
                    1 => lie::random_m_a(grp, &mut g),
                    _ => lie::random_element(grp, &mut g),
                };
                let j = lie::jordan_decompose(&x)?;
                s.jordan = s.jordan.max(j.recomposition_error(&x));
                s.commute = s.commute.max(j.commutation_error());
                let p = lie::polar_decompose(&x)?;
                s.polar = s.polar.max(p.recomposition_error(&x));
                let w = x.act_on(&dom)?.apply(&z0);
                s.t_err = s.t_err.max((p.t - atanh_stable(norm(&w))).abs());
                let axial = lie::classify_lie(&x)?.is_axial();
                if axial != lie::translation_length(&x, &z0, 1 << 20)?.is_positive() {
                    s.disagree += 1;
                }
                s.total += 1;
            }
        }
        Ok(s)
    });
    ctx.check_on(&stats, "Jordan recomposition", "rank_one_lie::jordan_decompose", |s| (s.jordan <= jt, format!("{:.1e} (bound {jt:.0e})", s.jordan)));
    ctx.check_on(&stats, "Jordan parts commute", "rank_one_lie::jordan_decompose", |s| (s.commute <= jt, format!("{:.1e} (bound {jt:.0e})", s.commute)));
    ctx.check_on(&stats, "polar recomposition", "rank_one_lie::polar_decompose", |s| (s.polar <= pt, format!("{:.1e} (bound {pt:.0e})", s.polar)));
    ctx.check_on(&stats, "polar radius against the ball", "rank_one_lie::polar_decompose", |s| (s.t_err <= tt, format!("{:.1e} (bound {tt:.0e})", s.t_err)));
    ctx.check_on(&stats, "axial iff positive translation length", "rank_one_lie::translation_length", |s| {
        (s.disagree == 0, format!("{} of {} disagree", s.disagree, s.total))
    });
    let taus = ctx.stage("axis translation lengths", "rank_one_lie::translation_length", || {
        [0.5, 1.0, 2.0].iter().map(|&s| Ok((s, lie::translation_length(&lie::axis(Group::Su(2), s), &CVec::zeros(2), 1 << 20)?))).collect::<crate::Result<Vec<_>>>()
    });
    ctx.check_on(&taus, "translation length of the axis", "rank_one_lie::translation_length", |v| {
        let e = v.iter().map(|(s, t)| (t.tau - s).abs()).fold(0.0, f64::max);
        (e <= taut, format!("largest |tau(a_s) - s| = {e:.1e} (bound {taut:.0e})"))
    });
    if let Some(v) = &taus {
        let mut t = Table::new(PlotKind::Brackets, "translation-lengths", &["id", "lower", "upper", "width", "s"]);
        for (i, (s, tl)) in v.iter().enumerate() {
            t.push(vec![i as f64, tl.tau - tl.uncertainty, tl.tau + tl.uncertainty, 2.0 * tl.uncertainty, *s]);
            ctx.constant(&format!("tau_{s}"), tl.tau);
        }
        ctx.table(t);
    }
}

fn run_ping_pong(ctx: &mut Ctx) {
    const OP: &str = "automorphism_dynamics::ping_pong_certificate";
    let dom = ctx.dom.clone();
    let (h1, h2) = (ctx.autos[0].clone(), ctx.autos[1].clone());
    let (cap, emax, probes, steps) = (ctx.param("cap"), ctx.count("max_exponent"), ctx.count("probes"), ctx.count("orbit_steps"));
    let cert = ctx.stage("certificate", OP, || ping_pong_certificate(&dom, &h1, &h2, cap));
    ctx.check_on(&cert, "exponents within range", OP, |c| (c.m <= emax && c.n <= emax, format!("(m, n) = ({}, {})", c.m, c.n)));
    ctx.check_on(&cert, "inclusions checked on enough probes", OP, |c| (c.probes >= probes, format!("{} probes (need {probes})", c.probes)));
    ctx.check_on(&cert, "product hyperbolic with anchors in the caps", "automorphism_dynamics::classify", |c| {
        let r = &c.classification;
        let (Some(xp), Some(xm)) = (r.x_plus(), r.x_minus()) else { return (false, format!("classified {}", r.tag)) };
        let (d1, d2) = (dist(xp, &c.h1_points.0), dist(xm, &c.h2_points.0));
        (r.tag == MapType::Hyperbolic && d1 < cap && d2 < cap, format!("{} with cap distances {d1:.2e}, {d2:.2e} (cap {cap})", r.tag))
    });
    if let Some(c) = &cert {
        ctx.constant("m", c.m as f64);
        ctx.constant("n", c.n as f64);
        let t = orbit_table(&dom, "product-orbit", &c.product, steps);
        ctx.table(t);
    }
}
