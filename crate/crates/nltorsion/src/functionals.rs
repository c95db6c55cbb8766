//! The functionals the trapping theory quantifies: Lp norms of the
//! solution, the total gradient `int |grad u|`, the boundary flux of the
//! inward normal derivative, the fitted boundary-growth constant, and the
//! level-set machinery (superlevel extraction, contour lengths, coarea).
//!
//! Interior integrals use midpoint quadrature with cut-cell area weights;
//! the boundary flux is reported twice: through the PDE identity
//! `flux = |Omega| + cap * int |grad u|` and independently by summing
//! one-sided normal differences at every boundary crossing.

use crate::error::{Error, Result};
use crate::geometry::{GridMask, EAST, NORTH, SOUTH, WEST};
use crate::pde2d::ScalarField;
use serde::Serialize;
use std::sync::Arc;

/// All scalar functionals of one solution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FunctionalReport {
    /// Domain volume `c` (analytic when the mask has a domain, cut-cell sum
    /// otherwise).
    pub volume: f64,
    /// Sup norm.
    pub u_max: f64,
    /// `int u`.
    pub u_l1: f64,
    /// `int u^2`.
    pub u_l2: f64,
    /// `int u^3`.
    pub u_l3: f64,
    /// `int |grad u|`.
    pub grad_l1: f64,
    /// Boundary flux via the PDE identity `volume + cap * grad_l1`.
    pub flux: f64,
    /// Boundary flux summed from one-sided normal differences.
    pub flux_boundary: f64,
    /// `min u / dist(., boundary)` over interior nodes; positive by the
    /// boundary-point lemma. None when the mask has no analytic domain.
    pub hopf_ratio: Option<f64>,
}

/// Evaluate every functional of `u`, where `cap` is the drift bound the
/// field was solved with.
pub fn evaluate(u: &ScalarField, cap: f64) -> FunctionalReport {
    let mask = u.mask();
    let weights = mask.quad_weights();
    let volume = match mask.domain() {
        Some(d) => d.area(),
        None => weights.iter().sum(),
    };
    let mut u_max = 0.0f64;
    let mut lp = [0.0f64; 3];
    for (k, &w) in weights.iter().enumerate() {
        let v = u.value(k);
        u_max = u_max.max(v);
        lp[0] += v * w;
        lp[1] += v * v * w;
        lp[2] += v * v * v * w;
    }
    let grad = u.gradient();
    let grad_l1: f64 = grad
        .iter()
        .zip(&weights)
        .map(|(&(gx, gy), &w)| gx.hypot(gy) * w)
        .sum();
    let flux = volume + cap * grad_l1;
    let flux_boundary = boundary_flux(u);
    let hopf_ratio = mask.domain().map(|d| {
        let mut worst = f64::INFINITY;
        for k in 0..mask.n_interior() {
            let (x, y) = mask.position(k);
            let dist = d.boundary_distance(x, y).max(1e-300);
            worst = worst.min(u.value(k) / dist);
        }
        worst
    });
    FunctionalReport {
        volume,
        u_max,
        u_l1: lp[0],
        u_l2: lp[1],
        u_l3: lp[2],
        grad_l1,
        flux,
        flux_boundary,
        hopf_ratio,
    }
}

/// Sum of one-sided inward normal differences over all boundary crossings.
///
/// Each crossing along a grid axis samples the boundary where it cuts that
/// grid line; a crossing carries a transverse width of one spacing, so the
/// sum is a midpoint rule for the flux integral in the projected variable.
/// The derivative at the boundary point comes from the quadratic through
/// the boundary (value 0) and the two nearest nodes on the inward ray.
fn boundary_flux(u: &ScalarField) -> f64 {
    let mask = u.mask();
    let h = mask.h;
    let opposite = [EAST, WEST, NORTH, SOUTH];
    let mut total = 0.0;
    for k in 0..mask.n_interior() {
        let nbr = mask.neighbor_indices(k);
        let cuts = mask.cuts(k);
        for dir in 0..4 {
            if nbr[dir] >= 0 {
                continue;
            }
            let a = cuts[dir] * h;
            let up = u.value(k);
            let opp = nbr[opposite[dir]];
            let deriv = if opp >= 0 {
                let hq = cuts[opposite[dir]] * h; // = h toward an interior node
                let uq = u.value(opp as usize);
                let b = a + hq;
                (up * b * b - uq * a * a) / (a * b * hq)
            } else {
                up / a
            };
            total += deriv * h;
        }
    }
    total
}

/// Extract the superlevel set `{u >= eps}` as a new mask (cut fractions
/// from linear interpolation of `u` along grid edges) together with the
/// shifted field `u - eps` on it.
pub fn superlevel_restrict(u: &ScalarField, eps: f64) -> Result<(Arc<GridMask>, ScalarField)> {
    let mask = u.mask();
    let u_max = u.max_value();
    if !(eps > 0.0 && eps < u_max) {
        return Err(Error::LevelOutOfRange { eps, u_max });
    }
    // value of an arbitrary grid node: 0 outside the original interior
    let node_value = |i: usize, j: usize| -> f64 {
        mask.interior_index(i, j).map_or(0.0, |k| u.value(k))
    };
    let new_mask = GridMask::from_indicator(
        mask.h,
        mask.nx,
        mask.ny,
        mask.origin_steps(),
        None,
        |i, j| node_value(i, j) > eps,
        |i, j, dir| {
            let vp = node_value(i, j);
            let (ni, nj) = step(i, j, dir);
            let vq = node_value(ni, nj);
            // vp > eps >= vq along this edge
            ((vp - eps) / (vp - vq)).clamp(f64::MIN_POSITIVE, 1.0)
        },
    )?;
    let new_mask = Arc::new(new_mask);
    let values = (0..new_mask.n_interior())
        .map(|k| {
            let (i, j) = new_mask.grid_indices(k);
            node_value(i, j) - eps
        })
        .collect();
    Ok((Arc::clone(&new_mask), ScalarField::new(new_mask, values)))
}

fn step(i: usize, j: usize, dir: usize) -> (usize, usize) {
    match dir {
        WEST => (i - 1, j),
        EAST => (i + 1, j),
        SOUTH => (i, j - 1),
        _ => (i, j + 1),
    }
}

/// Marching squares over the node grid with linear interpolation along
/// cell edges; `emit` receives segment endpoints in grid coordinates.
///
/// Exterior nodes adjacent to the interior carry a ghost value extrapolated
/// linearly through the boundary cut, so that the zero level interpolates to
/// the actual boundary position instead of the lattice hull; far exterior
/// nodes carry zero.
fn march_level_set<F: FnMut((f64, f64), (f64, f64))>(u: &ScalarField, t: f64, mut emit: F) {
    let mask = u.mask();
    let (nx, ny) = (mask.nx, mask.ny);
    let mut vals = vec![0.0f64; nx * ny];
    let mut ghosts = vec![0u32; nx * ny];
    for k in 0..mask.n_interior() {
        let (i, j) = mask.grid_indices(k);
        vals[j * nx + i] = u.value(k);
    }
    for k in 0..mask.n_interior() {
        let (i, j) = mask.grid_indices(k);
        let nbr = mask.neighbor_indices(k);
        let cuts = mask.cuts(k);
        for dir in 0..4 {
            if nbr[dir] >= 0 {
                continue;
            }
            let (ni, nj) = step(i, j, dir);
            let flat = nj * nx + ni;
            let implied = u.value(k) * (1.0 - 1.0 / cuts[dir]);
            let n = ghosts[flat];
            // running mean over the edges implying this ghost
            vals[flat] = (vals[flat] * n as f64 + implied) / (n + 1) as f64;
            ghosts[flat] = n + 1;
        }
    }
    let value = |i: usize, j: usize| vals[j * nx + i];
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            // corner values counterclockwise from lower-left
            let v = [
                value(i, j),
                value(i + 1, j),
                value(i + 1, j + 1),
                value(i, j + 1),
            ];
            let mut case = 0usize;
            for (bit, &cv) in v.iter().enumerate() {
                if cv > t {
                    case |= 1 << bit;
                }
            }
            if case == 0 || case == 15 {
                continue;
            }
            // crossing points on the four edges (fraction from first corner)
            let lerp = |va: f64, vb: f64| (va - t) / (va - vb);
            let bottom = (i as f64 + lerp(v[0], v[1]), j as f64);
            let right = (i as f64 + 1.0, j as f64 + lerp(v[1], v[2]));
            let top = (i as f64 + lerp(v[3], v[2]), j as f64 + 1.0);
            let left = (i as f64, j as f64 + lerp(v[0], v[3]));
            match case {
                1 | 14 => emit(bottom, left),
                2 | 13 => emit(bottom, right),
                3 | 12 => emit(left, right),
                4 | 11 => emit(right, top),
                6 | 9 => emit(bottom, top),
                7 | 8 => emit(left, top),
                5 | 10 => {
                    // saddle: resolve by the cell-center average
                    let center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
                    let same_as_first = (center > t) == (case == 5);
                    if same_as_first {
                        emit(bottom, right);
                        emit(left, top);
                    } else {
                        emit(bottom, left);
                        emit(right, top);
                    }
                }
                _ => unreachable!(),
            }
        }
    }
}

/// Total length of the level set `{u = t}`.
pub fn level_set_perimeter(u: &ScalarField, t: f64) -> f64 {
    let h = u.mask().h;
    let mut length = 0.0;
    march_level_set(u, t, |p, q| {
        length += h * (p.0 - q.0).hypot(p.1 - q.1);
    });
    length
}

/// Level-set segments in world coordinates, for plotting.
pub fn level_set_segments(u: &ScalarField, t: f64) -> Vec<((f64, f64), (f64, f64))> {
    let mask = u.mask();
    let h = mask.h;
    let (ox, oy) = mask.origin();
    let to_world = |p: (f64, f64)| (ox + p.0 * h, oy + p.1 * h);
    let mut segments = Vec::new();
    march_level_set(u, t, |p, q| {
        segments.push((to_world(p), to_world(q)));
    });
    segments
}

/// Coarea integral `int_0^{u_max} perimeter(t) dt` by the midpoint rule
/// over `n_levels` levels; equals `int |grad u|` in the continuum.
pub fn coarea_integral(u: &ScalarField, n_levels: usize) -> f64 {
    let u_max = u.max_value();
    let dt = u_max / n_levels as f64;
    (0..n_levels)
        .map(|k| level_set_perimeter(u, (k as f64 + 0.5) * dt) * dt)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mask, Domain2D};
    use crate::pde2d::{solve_linear_drift, solve_nonlinear, VectorField};
    use crate::radial::solve_radial;
    use std::f64::consts::PI;

    fn torsion_on_disk(h: f64) -> ScalarField {
        let mask = Arc::new(build_mask(&Domain2D::disk(1.0).unwrap(), h).unwrap());
        let zero = VectorField::zero(Arc::clone(&mask));
        solve_linear_drift(&mask, &zero, 1e-10).unwrap().0
    }

    #[test]
    fn torsion_functionals_match_closed_forms() {
        let u = torsion_on_disk(1.0 / 64.0);
        let rep = evaluate(&u, 0.0);
        // int u = pi/8, int |grad u| = int r/2 = pi/3, flux = |Omega| at cap 0
        assert!((rep.u_l1 - PI / 8.0).abs() < 1e-2, "u_l1 {}", rep.u_l1);
        assert!((rep.grad_l1 - PI / 3.0).abs() < 1e-2, "grad_l1 {}", rep.grad_l1);
        assert!((rep.u_max - 0.25).abs() < 1e-3);
        assert!((rep.flux - PI).abs() < 1e-12);
        assert!((rep.volume - PI).abs() < 1e-12);
        // independent boundary summation agrees with the identity route
        let rel = (rep.flux_boundary - rep.flux).abs() / rep.flux;
        assert!(rel < 0.01, "flux routes differ by {rel}");
    }

    #[test]
    fn green_identity_within_mesh_bound() {
        // |flux_a - flux_b| / flux_a <= 5 sqrt(h) across shapes and caps
        for dom in [
            Domain2D::disk(1.0).unwrap(),
            Domain2D::ellipse(1.4, 0.8).unwrap(),
        ] {
            let h = 1.0 / 48.0;
            let mask = Arc::new(build_mask(&dom, h).unwrap());
            for cap in [0.0, 1.0] {
                let (u, _) = solve_nonlinear(&mask, cap, 1e-9).unwrap();
                let rep = evaluate(&u, cap);
                let rel = (rep.flux - rep.flux_boundary).abs() / rep.flux;
                assert!(rel <= 5.0 * h.sqrt(), "{dom} cap={cap}: {rel}");
            }
        }
    }

    #[test]
    fn hopf_ratio_positive_and_near_quarter_on_disk() {
        let u = torsion_on_disk(1.0 / 64.0);
        let rep = evaluate(&u, 0.0);
        let hopf = rep.hopf_ratio.unwrap();
        // u/dist = (R + r)/4 for the exact torsion profile: minimum 0.25
        assert!(hopf > 0.0);
        assert!((hopf - 0.25).abs() < 0.01, "hopf {hopf}");
    }

    #[test]
    fn superlevel_of_tiny_eps_is_whole_mask() {
        let u = torsion_on_disk(1.0 / 32.0);
        let eps = 0.5 * u.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let (mask_eps, shifted) = superlevel_restrict(&u, eps).unwrap();
        assert_eq!(mask_eps.n_interior(), u.mask().n_interior());
        for k in 0..mask_eps.n_interior() {
            assert!((shifted.value(k) - (u.value(k) - eps)).abs() < 1e-15);
        }
    }

    #[test]
    fn superlevel_of_radial_solution_is_a_disk() {
        let u = torsion_on_disk(1.0 / 64.0);
        let eps = 0.5 * u.max_value();
        let (mask_eps, _) = superlevel_restrict(&u, eps).unwrap();
        // invert the radial profile: (R^2 - r^2)/4 = eps
        let r_eps = (1.0 - 4.0 * eps).sqrt();
        let area = mask_eps.weighted_area();
        let rel = (area - PI * r_eps * r_eps).abs() / (PI * r_eps * r_eps);
        assert!(rel < 0.01, "area error {rel}");
        // cross-check against the general radial solver
        let oracle = solve_radial(2, 0.0, 1.0, 1024).unwrap();
        let mut r_oracle = 0.0;
        for i in 0..oracle.r.len() {
            if oracle.g[i] >= eps {
                r_oracle = oracle.r[i];
            }
        }
        assert!((r_oracle - r_eps).abs() < 1e-2);
    }

    #[test]
    fn superlevel_rejects_out_of_range() {
        let u = torsion_on_disk(1.0 / 16.0);
        assert!(superlevel_restrict(&u, 0.0).is_err());
        assert!(superlevel_restrict(&u, u.max_value()).is_err());
        assert!(superlevel_restrict(&u, 1.0).is_err());
    }

    #[test]
    fn level_set_lengths_on_the_disk() {
        let u = torsion_on_disk(1.0 / 128.0);
        // t = 0: the domain boundary
        let p0 = level_set_perimeter(&u, 0.0);
        assert!((p0 - 2.0 * PI).abs() / (2.0 * PI) < 0.02, "p(0) = {p0}");
        // the level through r = 1/2 is a circle of length pi
        let t = (1.0 - 0.25) / 4.0;
        let p = level_set_perimeter(&u, t);
        assert!((p - PI).abs() / PI < 0.02, "p = {p}");
        // shrink to a point near the max
        let p_top = level_set_perimeter(&u, 0.999 * u.max_value());
        assert!(p_top < 0.3, "p_top = {p_top}");
    }

    #[test]
    fn coarea_identity() {
        let u = torsion_on_disk(1.0 / 64.0);
        let rep = evaluate(&u, 0.0);
        let coarea = coarea_integral(&u, 200);
        let rel = (coarea - rep.grad_l1).abs() / rep.grad_l1;
        assert!(rel < 0.02, "coarea defect {rel}");
    }

    #[test]
    fn gradient_integral_is_shift_invariant() {
        // grad_l1(u - eps on the superlevel set) = grad_l1(u) - coarea strip
        let u = torsion_on_disk(1.0 / 64.0);
        let rep = evaluate(&u, 0.0);
        let eps = 0.3 * u.max_value();
        let (_, shifted) = superlevel_restrict(&u, eps).unwrap();
        let rep_eps = evaluate(&shifted, 0.0);
        let n = 120;
        let dt = eps / n as f64;
        let strip: f64 = (0..n)
            .map(|k| level_set_perimeter(&u, (k as f64 + 0.5) * dt) * dt)
            .sum();
        let lhs = rep_eps.grad_l1;
        let rhs = rep.grad_l1 - strip;
        assert!((lhs - rhs).abs() / rhs < 0.02, "{lhs} vs {rhs}");
    }
}
