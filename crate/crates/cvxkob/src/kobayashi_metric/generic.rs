//! Brackets on domains without a closed form.
//!
//! Upper bounds: discs inscribed in planar slices (an inscribed polygon from ray hits, then the
//! best disc inside it), summed along an optimised polyline. Lower bounds: holomorphic maps onto
//! half-planes through supporting hyperplanes, onto discs enclosing linear projections, and onto
//! the ball factor of an ellipsoid.

use super::ball::{disc_dist, half_plane_dist};
use super::MetricOptions;
use crate::domain_geometry::ConvexDomain;
use crate::linalg::*;
use std::f64::consts::PI;

const SHRINK: f64 = 1.0 - 1e-12;
const MAX_VERTICES: usize = 4096;
/// Edges this close to binding (relative) are split during refinement.
const BIND: f64 = 1e-2;

/// Convex polygon inscribed in the planar slice { base + lambda dir }.
struct SlicePolygon<'a> {
    dom: &'a ConvexDomain,
    anchor: CVec,
    dir: CVec,
    center: C64,
    verts: Vec<(f64, C64)>,
}

impl<'a> SlicePolygon<'a> {
    fn new(dom: &'a ConvexDomain, base: &CVec, dir: &CVec, center: C64, n: usize) -> Option<Self> {
        let anchor = base + dir.map(|x| x * center);
        if !dom.is_inside(&anchor) {
            return None;
        }
        let mut poly = SlicePolygon { dom, anchor, dir: dir.clone(), center, verts: Vec::with_capacity(n) };
        for k in 0..n {
            let th = 2.0 * PI * k as f64 / n as f64;
            let v = poly.hit(th);
            poly.verts.push((th, v));
        }
        Some(poly)
    }

    fn hit(&self, th: f64) -> C64 {
        let e = C64::from_polar(1.0, th);
        let t = self.dom.exit(&self.anchor, &self.dir.map(|x| x * e));
        self.center + e * (t * SHRINK)
    }

    fn edge(&self, k: usize) -> (C64, C64) {
        let n = self.verts.len();
        (self.verts[k].1, self.verts[(k + 1) % n].1)
    }

    /// Signed distance of c to the line of edge k, positive inside.
    fn edge_dist(&self, c0: C64, k: usize) -> f64 {
        let (a, b) = self.edge(k);
        let e = b - a;
        let w = c0 - a;
        (e.re * w.im - e.im * w.re) / e.norm()
    }

    fn radius_at(&self, c0: C64) -> f64 {
        (0..self.verts.len()).map(|k| self.edge_dist(c0, k)).fold(f64::INFINITY, f64::min)
    }

    /// Smooth lower bound for radius_at with temperature t.
    fn soft_radius(&self, c0: C64, t: f64) -> f64 {
        let d: Vec<f64> = (0..self.verts.len()).map(|k| self.edge_dist(c0, k)).collect();
        let m = d.iter().copied().fold(f64::INFINITY, f64::min);
        m - t * d.iter().map(|x| (-(x - m) / t).exp()).sum::<f64>().ln()
    }

    /// Splits the edges that bind the disc of centre c0 and radius r.
    fn refine(&mut self, c0: C64, r: f64) -> usize {
        let n = self.verts.len();
        let room = MAX_VERTICES.saturating_sub(n);
        let mut binding: Vec<usize> = (0..n).filter(|&k| self.edge_dist(c0, k) <= r * (1.0 + BIND) + 1e-300).collect();
        binding.truncate(room);
        let mut added = Vec::new();
        for &k in &binding {
            let a = self.verts[k].0;
            let b = if k + 1 == n { self.verts[0].0 + 2.0 * PI } else { self.verts[k + 1].0 };
            let mid = 0.5 * (a + b);
            if b - a < 1e-12 {
                continue;
            }
            let mid = if mid >= 2.0 * PI { mid - 2.0 * PI } else { mid };
            added.push((mid, self.hit(mid)));
        }
        let count = added.len();
        self.verts.extend(added);
        self.verts.sort_by(|x, y| x.0.total_cmp(&y.0));
        count
    }
}

fn c_of(x: &[f64]) -> C64 {
    c(x[0], x[1])
}

/// Minimises `cost` over disc centres inside the polygon, refining binding edges between rounds.
/// The inner searches run on a soft minimum of the edge distances, which never exceeds the true
/// inscribed radius; every reported value is re-evaluated with the exact polygon radius.
fn best_disc<F: Fn(C64, f64) -> f64>(poly: &mut SlicePolygon, start: C64, rounds: usize, cost: F) -> f64 {
    let scale0 = poly.radius_at(start).abs().max(1e-300);
    let exact = |poly: &SlicePolygon, c0: C64| -> f64 {
        let r = poly.radius_at(c0);
        if r > 0.0 { cost(c0, r) } else { f64::INFINITY }
    };
    let mut cur = start;
    let mut best = exact(poly, cur);
    let mut prev = best;
    for round in 0..=rounds {
        for tau in [1e-3, 0.0] {
            let t = tau * scale0;
            let eval = |x: &[f64]| -> f64 {
                let c0 = c_of(x);
                let r = if t > 0.0 { poly.soft_radius(c0, t) } else { poly.radius_at(c0) };
                if r > 0.0 { cost(c0, r) } else { f64::INFINITY }
            };
            let step = 0.1 * poly.radius_at(cur).max(scale0 * 1e-6);
            let (x, _) = nelder_mead(eval, &[cur.re, cur.im], step, 200, 1e-14);
            let v = exact(poly, c_of(&x));
            if v < best {
                best = v;
                cur = c_of(&x);
            }
        }
        if round == rounds {
            break;
        }
        if round > 0 && prev - best <= 1e-10 * best {
            break;
        }
        prev = best;
        let r = poly.radius_at(cur);
        if poly.refine(cur, r) == 0 {
            break;
        }
        best = best.min(exact(poly, cur));
    }
    best
}

/// Upper bound for K(p, q) from a disc inscribed in the slice of the line through p and q.
pub(crate) fn segment_upper(dom: &ConvexDomain, p: &CVec, q: &CVec, opts: &MetricOptions) -> f64 {
    let l = dist(p, q);
    if l == 0.0 {
        return 0.0;
    }
    if !dom.is_inside(p) || !dom.is_inside(q) {
        return f64::INFINITY;
    }
    let u = scale(&(q - p), 1.0 / l);
    let mid = c(0.5 * l, 0.0);
    let Some(mut poly) = SlicePolygon::new(dom, p, &u, mid, opts.polygon) else {
        return f64::INFINITY;
    };
    let cost = |c0: C64, r: f64| -> f64 {
        let x = (c(0.0, 0.0) - c0) / r;
        let y = (c(l, 0.0) - c0) / r;
        let omx = (r - c0.norm()) * (r + c0.norm()) / (r * r);
        let omy = (r - (c(l, 0.0) - c0).norm()) * (r + (c(l, 0.0) - c0).norm()) / (r * r);
        if !(omx > 0.0 && omy > 0.0) {
            return f64::INFINITY;
        }
        disc_dist(x, y, omx, omy)
    };
    // Feasible start: a centre whose inscribed disc holds both endpoints.
    let feas = |x: &[f64]| -> f64 {
        let c0 = c_of(x);
        c0.norm().max((c(l, 0.0) - c0).norm()) - poly.radius_at(c0)
    };
    let (fx, fv) = nelder_mead(feas, &[mid.re, mid.im], 0.25 * l, 600, 1e-14);
    let start = if feas(&[mid.re, mid.im]) < 0.0 { mid } else { c_of(&fx) };
    if fv >= 0.0 && feas(&[mid.re, mid.im]) >= 0.0 {
        return f64::INFINITY;
    }
    best_disc(&mut poly, start, opts.disc_rounds, cost)
}

/// Upper bound for k(z; v) from a disc inscribed in the slice z + C v.
pub(crate) fn metric_upper(dom: &ConvexDomain, z: &CVec, v: &CVec, opts: &MetricOptions) -> f64 {
    let nv = norm(v);
    let u = scale(v, 1.0 / nv);
    let Some(mut poly) = SlicePolygon::new(dom, z, &u, c(0.0, 0.0), opts.polygon) else {
        return f64::INFINITY;
    };
    let cost = |c0: C64, r: f64| -> f64 {
        let q = (r - c0.norm()) * (r + c0.norm());
        if !(q > 0.0) {
            return f64::INFINITY;
        }
        r * nv / q
    };
    best_disc(&mut poly, c(0.0, 0.0), opts.disc_rounds, cost)
}

/// Cheap settings used to rank candidate nodes during descent; kept segments are re-evaluated.
fn probe_options(opts: &MetricOptions) -> MetricOptions {
    MetricOptions { polygon: opts.polygon.min(24), disc_rounds: opts.disc_rounds.min(2), ..opts.clone() }
}

/// Polyline upper bound, refined by dyadic subdivision and coordinate descent.
/// Refinement stops once `upper - lower` drops below the target width.
pub(crate) fn path_upper(dom: &ConvexDomain, z: &CVec, w: &CVec, lower: f64, opts: &MetricOptions) -> (f64, Vec<CVec>) {
    let probe = probe_options(opts);
    let mut nodes = vec![z.clone(), w.clone()];
    let mut evals = 1usize;
    let total = |s: &[f64]| s.iter().sum::<f64>();
    let full = |nodes: &[CVec]| -> f64 { (0..nodes.len() - 1).map(|i| segment_upper(dom, &nodes[i], &nodes[i + 1], opts)).sum() };
    let d = dom.dim();
    let mut best = (full(&nodes), nodes.clone());
    for _level in 0..opts.max_levels {
        if best.0 - lower <= opts.target_width || evals >= opts.path_evaluations {
            break;
        }
        let mut nn = Vec::with_capacity(2 * nodes.len());
        for i in 0..nodes.len() - 1 {
            nn.push(nodes[i].clone());
            nn.push((&nodes[i] + &nodes[i + 1]).map(|x| x * 0.5));
        }
        nn.push(nodes[nodes.len() - 1].clone());
        nodes = nn;
        if opts.descent {
            let mut segs: Vec<f64> = (0..nodes.len() - 1).map(|i| segment_upper(dom, &nodes[i], &nodes[i + 1], &probe)).collect();
            evals += segs.len();
            let mut step = 0.25 * dist(&nodes[0], &nodes[1]);
            let floor = 1e-3 * step;
            while step > floor && evals < opts.path_evaluations {
                let before = total(&segs);
                for i in 1..nodes.len() - 1 {
                    for k in 0..2 * d {
                        let dir = if k < d { basis(d, k) } else { basis(d, k - d).map(|x| x * I) };
                        for sgn in [1.0, -1.0] {
                            let cand = &nodes[i] + scale(&dir, sgn * step);
                            if !dom.is_inside(&cand) {
                                continue;
                            }
                            let a = segment_upper(dom, &nodes[i - 1], &cand, &probe);
                            let b = segment_upper(dom, &cand, &nodes[i + 1], &probe);
                            evals += 2;
                            if a + b < segs[i - 1] + segs[i] {
                                nodes[i] = cand;
                                segs[i - 1] = a;
                                segs[i] = b;
                                break;
                            }
                        }
                    }
                }
                let gain = before - total(&segs);
                if !(gain.is_finite()) || gain < opts.path_improvement {
                    step *= 0.5;
                }
            }
        }
        let len = full(&nodes);
        evals += nodes.len() - 1;
        if len < best.0 {
            best = (len, nodes.clone());
        }
    }
    best
}

fn support_directions(dom: &ConvexDomain, pts: &[&CVec], n: usize) -> Vec<CVec> {
    let mut dirs = direction_set(dom.dim(), n, 0x5a1e);
    for p in pts {
        if let Ok(pr) = dom.boundary_projection(p) {
            dirs.push(-pr.boundary.inward_normal.clone());
        }
    }
    dirs
}

fn unpack(x: &[f64], d: usize) -> CVec {
    CVec::from_iterator(d, (0..d).map(|j| c(x[2 * j], x[2 * j + 1])))
}

fn pack(v: &CVec) -> Vec<f64> {
    v.iter().flat_map(|x| [x.re, x.im]).collect()
}

/// Half-plane lower bound through the supporting hyperplane in direction xi.
fn half_plane_bound(dom: &ConvexDomain, z: &CVec, w: &CVec, xi: &CVec) -> f64 {
    let h = dom.support_fn(xi);
    let a = c(h, 0.0) - inner(z, xi);
    let b = c(h, 0.0) - inner(w, xi);
    if !(a.re > 0.0 && b.re > 0.0) {
        return 0.0;
    }
    half_plane_dist(a, b)
}

fn half_plane_metric(dom: &ConvexDomain, z: &CVec, v: &CVec, xi: &CVec) -> f64 {
    let h = dom.support_fn(xi);
    let a = h - re_inner(z, xi);
    if !(a > 0.0) {
        return 0.0;
    }
    inner(v, xi).norm() / (2.0 * a)
}

/// Circumscribed polygon of the projection zeta = <z, xi> from support lines.
fn projection_polygon(dom: &ConvexDomain, xi: &CVec, m: usize) -> Vec<C64> {
    let th: Vec<f64> = (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect();
    let hs: Vec<f64> = th.iter().map(|&t| dom.support_fn(&xi.map(|x| x * C64::from_polar(1.0, t)))).collect();
    // line k: Re(e^{-i t_k} zeta) <= h_k
    (0..m)
        .map(|k| {
            let j = (k + 1) % m;
            let (a1, b1, h1) = (th[k].cos(), th[k].sin(), hs[k]);
            let (a2, b2, h2) = (th[j].cos(), th[j].sin(), hs[j]);
            let det = a1 * b2 - a2 * b1;
            c((h1 * b2 - h2 * b1) / det, (a1 * h2 - a2 * h1) / det)
        })
        .collect()
}

fn enclosing_radius(verts: &[C64], c0: C64) -> f64 {
    verts.iter().map(|v| (v - c0).norm()).fold(0.0, f64::max) * (1.0 + 1e-12)
}

pub(crate) fn distance_lower(dom: &ConvexDomain, z: &CVec, w: &CVec, opts: &MetricOptions) -> (f64, &'static str) {
    let d = dom.dim();
    let dirs = support_directions(dom, &[z, w], opts.directions);
    let mut scored: Vec<(f64, CVec)> = dirs.into_iter().map(|x| (half_plane_bound(dom, z, w, &x), x)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = (scored[0].0, "half-plane");
    for (_, xi) in scored.iter().take(opts.local_starts) {
        let (_, v) = nelder_mead(
            |x| {
                let xi = unpack(x, d);
                if norm(&xi) < 1e-12 { 0.0 } else { -half_plane_bound(dom, z, w, &xi) }
            },
            &pack(xi),
            0.05,
            60 * d,
            1e-12,
        );
        if -v > best.0 {
            best = (-v, "half-plane");
        }
    }
    for (_, xi) in scored.iter().take(opts.local_starts) {
        let verts = projection_polygon(dom, xi, 32);
        let fz = inner(z, xi);
        let fw = inner(w, xi);
        let bound = |x: &[f64]| -> f64 {
            let c0 = c_of(x);
            let r = enclosing_radius(&verts, c0);
            let omx = (r - (fz - c0).norm()) * (r + (fz - c0).norm()) / (r * r);
            let omy = (r - (fw - c0).norm()) * (r + (fw - c0).norm()) / (r * r);
            if !(omx > 0.0 && omy > 0.0) {
                return 0.0;
            }
            disc_dist((fz - c0) / r, (fw - c0) / r, omx, omy)
        };
        let mean = verts.iter().fold(c(0.0, 0.0), |a, b| a + b) / verts.len() as f64;
        let (_, v) = nelder_mead(|x| -bound(x), &[mean.re, mean.im], 0.1 * enclosing_radius(&verts, mean), 300, 1e-12);
        if -v > best.0 {
            best = (-v, "disc-projection");
        }
    }
    best
}

pub(crate) fn metric_lower(dom: &ConvexDomain, z: &CVec, v: &CVec, opts: &MetricOptions) -> (f64, &'static str) {
    let d = dom.dim();
    let dirs = support_directions(dom, &[z], opts.directions);
    let mut scored: Vec<(f64, CVec)> = dirs.into_iter().map(|x| (half_plane_metric(dom, z, v, &x), x)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = (scored[0].0, "half-plane");
    for (_, xi) in scored.iter().take(opts.local_starts) {
        let (_, val) = nelder_mead(
            |x| {
                let xi = unpack(x, d);
                if norm(&xi) < 1e-12 { 0.0 } else { -half_plane_metric(dom, z, v, &xi) }
            },
            &pack(xi),
            0.05,
            60 * d,
            1e-12,
        );
        if -val > best.0 {
            best = (-val, "half-plane");
        }
        let verts = projection_polygon(dom, xi, 32);
        let fz = inner(z, xi);
        let fv = inner(v, xi).norm();
        let bound = |x: &[f64]| -> f64 {
            let c0 = c_of(x);
            let r = enclosing_radius(&verts, c0);
            let q = (r - (fz - c0).norm()) * (r + (fz - c0).norm());
            if !(q > 0.0) {
                return 0.0;
            }
            r * fv / q
        };
        let mean = verts.iter().fold(c(0.0, 0.0), |a, b| a + b) / verts.len() as f64;
        let (_, val) = nelder_mead(|x| -bound(x), &[mean.re, mean.im], 0.1 * enclosing_radius(&verts, mean), 300, 1e-12);
        if -val > best.0 {
            best = (-val, "disc-projection");
        }
    }
    best
}

/// Upper bound from a polynomial disc f(l) = z + s l v/|v| + sum_{j>=2} a_j l^j.
///
/// The image of the closed disc lies in the convex hull of the boundary circle, so it suffices
/// that every sampled circle point has boundary distance above a Lipschitz bound for the gaps.
pub(crate) fn polynomial_disc_upper(dom: &ConvexDomain, z: &CVec, v: &CVec, degree: usize) -> f64 {
    let d = dom.dim();
    let nv = norm(v);
    let u = scale(v, 1.0 / nv);
    let m = 256usize;
    let circle: Vec<C64> = (0..m).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)).collect();
    let admissible = |s: f64, coef: &[CVec]| -> bool {
        let lip = s + coef.iter().enumerate().map(|(j, a)| (j + 2) as f64 * norm(a)).sum::<f64>();
        let gap = lip * PI / m as f64;
        circle.iter().all(|l| {
            let mut p = z + u.map(|x| x * (l * s));
            let mut lp = *l;
            for a in coef {
                lp *= l;
                p += a.map(|x| x * lp);
            }
            dom.is_inside(&p) && dom.boundary_distance(&p).map(|q| q > gap).unwrap_or(false)
        })
    };
    let max_s = |coef: &[CVec]| -> f64 {
        let (mut lo, mut hi) = (0.0, dom.diameter());
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if admissible(mid, coef) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let k = degree.saturating_sub(1);
    let x0 = vec![0.0; 2 * d * k];
    let to_coef = |x: &[f64]| -> Vec<CVec> { (0..k).map(|j| unpack(&x[2 * d * j..2 * d * (j + 1)], d)).collect() };
    let (x, _) = nelder_mead(|x| -max_s(&to_coef(x)), &x0, 0.02 * dom.diameter(), 40 * (k + 1), 1e-6);
    let s = max_s(&to_coef(&x)).max(max_s(&[]));
    if s > 0.0 { nv / s } else { f64::INFINITY }
}
