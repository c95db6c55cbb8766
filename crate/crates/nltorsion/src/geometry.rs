//! Analytic 2D domains of prescribed volume and their grid discretizations.
//!
//! A [`Domain2D`] knows its exact area, perimeter, inradius, an implicit
//! function (negative inside), and the exact distance to its boundary.
//! [`build_mask`] discretizes a domain on a node-centered grid and stores,
//! for every interior node next to the boundary, the fractional distance
//! along each axis to the true boundary (Shortley-Weller data), so the
//! elliptic solver can keep second-order accuracy near curved boundaries.

use crate::error::{Error, Result};
use crate::special::adaptive_simpson;
use std::f64::consts::PI;
use std::fmt;

/// Sharp planar isoperimetric constant: |dOmega| >= c_2 |Omega|^{1/2},
/// with equality exactly for disks.
pub const ISOPERIMETRIC_C2: f64 = 3.544_907_701_811_032; // 2 sqrt(pi)

/// An analytic planar domain, centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain2D {
    /// Disk of radius `radius`.
    Disk { radius: f64 },
    /// Axis-aligned ellipse with semi-axes `a` (x) and `b` (y).
    Ellipse { a: f64, b: f64 },
    /// Axis-aligned `width` x `height` rectangle.
    Rectangle { width: f64, height: f64 },
    /// Ring between radii `r_inner < r_outer`.
    Annulus { r_inner: f64, r_outer: f64 },
    /// Rectangle of length `length` capped by two half-disks of radius `radius`.
    Stadium { radius: f64, length: f64 },
}

impl Domain2D {
    pub fn disk(radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::InvalidParameter(format!("disk radius {radius} <= 0")));
        }
        Ok(Domain2D::Disk { radius })
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        if a <= 0.0 || b <= 0.0 {
            return Err(Error::InvalidParameter(format!("ellipse axes ({a}, {b}) must be positive")));
        }
        Ok(Domain2D::Ellipse { a, b })
    }

    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        if width <= 0.0 || height <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "rectangle sides ({width}, {height}) must be positive"
            )));
        }
        Ok(Domain2D::Rectangle { width, height })
    }

    pub fn annulus(r_inner: f64, r_outer: f64) -> Result<Self> {
        if r_inner <= 0.0 || r_outer <= r_inner {
            return Err(Error::InvalidParameter(format!(
                "annulus radii need 0 < {r_inner} < {r_outer}"
            )));
        }
        Ok(Domain2D::Annulus { r_inner, r_outer })
    }

    pub fn stadium(radius: f64, length: f64) -> Result<Self> {
        if radius <= 0.0 || length <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "stadium parameters ({radius}, {length}) must be positive"
            )));
        }
        Ok(Domain2D::Stadium { radius, length })
    }

    /// Exact area.
    pub fn area(&self) -> f64 {
        match *self {
            Domain2D::Disk { radius } => PI * radius * radius,
            Domain2D::Ellipse { a, b } => PI * a * b,
            Domain2D::Rectangle { width, height } => width * height,
            Domain2D::Annulus { r_inner, r_outer } => PI * (r_outer * r_outer - r_inner * r_inner),
            Domain2D::Stadium { radius, length } => PI * radius * radius + 2.0 * radius * length,
        }
    }

    /// Exact perimeter; the ellipse arc length has no closed form and is
    /// integrated adaptively to ~1e-11.
    pub fn perimeter(&self) -> f64 {
        match *self {
            Domain2D::Disk { radius } => 2.0 * PI * radius,
            Domain2D::Ellipse { a, b } => {
                let f = |t: f64| {
                    let s = t.sin();
                    let c = t.cos();
                    (a * a * s * s + b * b * c * c).sqrt()
                };
                4.0 * adaptive_simpson(&f, 0.0, PI / 2.0, 1e-12)
            }
            Domain2D::Rectangle { width, height } => 2.0 * (width + height),
            Domain2D::Annulus { r_inner, r_outer } => 2.0 * PI * (r_inner + r_outer),
            Domain2D::Stadium { radius, length } => 2.0 * PI * radius + 2.0 * length,
        }
    }

    /// Radius of the largest inscribed disk.
    pub fn inradius(&self) -> f64 {
        match *self {
            Domain2D::Disk { radius } => radius,
            Domain2D::Ellipse { a, b } => a.min(b),
            Domain2D::Rectangle { width, height } => 0.5 * width.min(height),
            Domain2D::Annulus { r_inner, r_outer } => 0.5 * (r_outer - r_inner),
            Domain2D::Stadium { radius, .. } => radius,
        }
    }

    /// Half extents of the bounding box.
    pub fn half_extents(&self) -> (f64, f64) {
        match *self {
            Domain2D::Disk { radius } => (radius, radius),
            Domain2D::Ellipse { a, b } => (a, b),
            Domain2D::Rectangle { width, height } => (0.5 * width, 0.5 * height),
            Domain2D::Annulus { r_outer, .. } => (r_outer, r_outer),
            Domain2D::Stadium { radius, length } => (0.5 * length + radius, radius),
        }
    }

    /// Implicit function: negative strictly inside, zero on the boundary,
    /// positive outside.
    pub fn implicit(&self, x: f64, y: f64) -> f64 {
        match *self {
            Domain2D::Disk { radius } => x * x + y * y - radius * radius,
            Domain2D::Ellipse { a, b } => (x / a) * (x / a) + (y / b) * (y / b) - 1.0,
            Domain2D::Rectangle { width, height } => {
                (x.abs() - 0.5 * width).max(y.abs() - 0.5 * height)
            }
            Domain2D::Annulus { r_inner, r_outer } => {
                let rho2 = x * x + y * y;
                (r_inner * r_inner - rho2).max(rho2 - r_outer * r_outer)
            }
            Domain2D::Stadium { radius, length } => {
                let cx = x.clamp(-0.5 * length, 0.5 * length);
                ((x - cx).powi(2) + y * y).sqrt() - radius
            }
        }
    }

    /// Strict interior test.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.implicit(x, y) < 0.0
    }

    /// Exact distance from an interior point to the boundary.
    ///
    /// Closed form for every shape except the ellipse, which reduces to a
    /// 1D root-find on the Lagrange-multiplier parameter.
    pub fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            Domain2D::Disk { radius } => radius - (x * x + y * y).sqrt(),
            Domain2D::Ellipse { a, b } => ellipse_boundary_distance(a, b, x, y),
            Domain2D::Rectangle { width, height } => {
                (0.5 * width - x.abs()).min(0.5 * height - y.abs())
            }
            Domain2D::Annulus { r_inner, r_outer } => {
                let rho = (x * x + y * y).sqrt();
                (rho - r_inner).min(r_outer - rho)
            }
            Domain2D::Stadium { radius, length } => {
                let cx = x.clamp(-0.5 * length, 0.5 * length);
                radius - ((x - cx).powi(2) + y * y).sqrt()
            }
        }
    }

    /// Isoperimetric ratio `perimeter / (c_2 sqrt(area))`; >= 1 with
    /// equality only for disks.
    pub fn isoperimetric_ratio(&self) -> f64 {
        self.perimeter() / (ISOPERIMETRIC_C2 * self.area().sqrt())
    }

    /// Short label used in comparison tables and CLI output.
    pub fn label(&self) -> String {
        match *self {
            Domain2D::Disk { .. } => "disk".into(),
            Domain2D::Ellipse { a, b } => {
                let ratio = a.max(b) / a.min(b);
                if (ratio - ratio.round()).abs() < 1e-9 {
                    format!("ellipse-{}x1", ratio.round() as i64)
                } else {
                    "ellipse".into()
                }
            }
            Domain2D::Rectangle { width, height } => {
                let ratio = width.max(height) / width.min(height);
                if (ratio - 1.0).abs() < 1e-12 {
                    "square".into()
                } else if (ratio - ratio.round()).abs() < 1e-9 {
                    format!("rect-{}x1", ratio.round() as i64)
                } else {
                    "rectangle".into()
                }
            }
            Domain2D::Annulus { .. } => "annulus".into(),
            Domain2D::Stadium { .. } => "stadium".into(),
        }
    }
}

impl fmt::Display for Domain2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Domain2D::Disk { radius } => write!(f, "disk(R={radius:.6})"),
            Domain2D::Ellipse { a, b } => write!(f, "ellipse(a={a:.6}, b={b:.6})"),
            Domain2D::Rectangle { width, height } => write!(f, "rectangle({width:.6} x {height:.6})"),
            Domain2D::Annulus { r_inner, r_outer } => {
                write!(f, "annulus({r_inner:.6}, {r_outer:.6})")
            }
            Domain2D::Stadium { radius, length } => {
                write!(f, "stadium(r={radius:.6}, l={length:.6})")
            }
        }
    }
}

/// Distance from an interior point of the ellipse `x^2/a^2 + y^2/b^2 = 1`
/// to the boundary. Reduces to the axis formulas where the generic
/// root-find degenerates.
fn ellipse_boundary_distance(a: f64, b: f64, x: f64, y: f64) -> f64 {
    // circle
    if (a - b).abs() < 1e-14 * a.max(b) {
        return a - (x * x + y * y).sqrt();
    }
    // normalize to a >= b by swapping axes
    let (px, py, a, b) = if a >= b {
        (x.abs(), y.abs(), a, b)
    } else {
        (y.abs(), x.abs(), b, a)
    };
    if py < 1e-12 * b {
        // on the major axis: the closest point leaves the axis inside the evolute
        let xe = (a * a - b * b) / a;
        return if px <= xe {
            b * (1.0 - px * px / (a * a - b * b)).sqrt()
        } else {
            a - px
        };
    }
    if px < 1e-12 * a {
        // on the minor axis the closest point is the co-vertex
        return b - py;
    }
    // Closest boundary point (a^2 px/(t+a^2), b^2 py/(t+b^2)) with t solving
    // F(t) = (a px/(t+a^2))^2 + (b py/(t+b^2))^2 - 1 = 0; F is decreasing on
    // t > -b^2 and the interior root lies in (-b^2, 0).
    let ff = |t: f64| {
        let u = a * px / (t + a * a);
        let v = b * py / (t + b * b);
        u * u + v * v - 1.0
    };
    let mut lo = -b * b * (1.0 - 1e-14);
    let mut hi = 0.0;
    for _ in 0..110 {
        let mid = 0.5 * (lo + hi);
        if ff(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let qx = a * a * px / (t + a * a);
    let qy = b * b * py / (t + b * b);
    ((px - qx).powi(2) + (py - qy).powi(2)).sqrt()
}

/// The fixed comparison family of equal-area shapes: disk, square,
/// 2:1 ellipse, 4:1 rectangle, stadium (length = 2 radius), and an
/// annulus with outer radius twice the inner.
pub fn equal_area_family(area: f64) -> Result<Vec<Domain2D>> {
    if area <= 0.0 {
        return Err(Error::InvalidParameter(format!("family area {area} <= 0")));
    }
    let disk = Domain2D::disk((area / PI).sqrt())?;
    let side = area.sqrt();
    let square = Domain2D::rectangle(side, side)?;
    let b = (area / (2.0 * PI)).sqrt();
    let ellipse = Domain2D::ellipse(2.0 * b, b)?;
    let rect_h = 0.5 * area.sqrt();
    let rect = Domain2D::rectangle(4.0 * rect_h, rect_h)?;
    // stadium with length = 2r: area = (pi + 4) r^2
    let sr = (area / (PI + 4.0)).sqrt();
    let stadium = Domain2D::stadium(sr, 2.0 * sr)?;
    // annulus with r_outer = 2 r_inner: area = 3 pi r_inner^2
    let r0 = (area / (3.0 * PI)).sqrt();
    let annulus = Domain2D::annulus(r0, 2.0 * r0)?;
    Ok(vec![disk, square, ellipse, rect, stadium, annulus])
}

/// Direction indices used throughout the grid code.
pub const WEST: usize = 0;
pub const EAST: usize = 1;
pub const SOUTH: usize = 2;
pub const NORTH: usize = 3;

/// A discretized domain on a node-centered uniform grid.
///
/// Interior nodes are ordered red (i+j even) first, then black, so that a
/// red-black sweep can split the value vector into two disjoint halves.
/// `cut[k][dir]` is the fractional distance (in units of `h`, in (0,1]) from
/// interior node `k` to the boundary in direction `dir`; 1 means the
/// neighbor in that direction is itself interior.
#[derive(Debug, Clone)]
pub struct GridMask {
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// Grid index offsets of the origin node: node (i, j) sits at
    /// ((i + ox) h, (j + oy) h). Positions are computed as a single
    /// product so that symmetric grids are bitwise mirror-symmetric.
    origin_steps: (i64, i64),
    interior: Vec<bool>,
    idx: Vec<i32>,
    nodes: Vec<(u32, u32)>,
    cut: Vec<[f64; 4]>,
    neighbors: Vec<[i32; 4]>,
    n_red: usize,
    domain: Option<Domain2D>,
}

impl GridMask {
    /// Number of interior nodes.
    pub fn n_interior(&self) -> usize {
        self.nodes.len()
    }

    /// Interior nodes with (i+j) even occupy indices `0..n_red()`.
    pub fn n_red(&self) -> usize {
        self.n_red
    }

    pub fn domain(&self) -> Option<&Domain2D> {
        self.domain.as_ref()
    }

    pub fn grid_indices(&self, k: usize) -> (usize, usize) {
        let (i, j) = self.nodes[k];
        (i as usize, j as usize)
    }

    pub(crate) fn origin_steps(&self) -> (i64, i64) {
        self.origin_steps
    }

    /// Position of the lower-left grid node.
    pub fn origin(&self) -> (f64, f64) {
        (
            self.origin_steps.0 as f64 * self.h,
            self.origin_steps.1 as f64 * self.h,
        )
    }

    /// Position of grid node (i, j).
    pub fn node_position(&self, i: usize, j: usize) -> (f64, f64) {
        (
            (self.origin_steps.0 + i as i64) as f64 * self.h,
            (self.origin_steps.1 + j as i64) as f64 * self.h,
        )
    }

    /// Position of interior node `k`.
    pub fn position(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.nodes[k];
        self.node_position(i as usize, j as usize)
    }

    /// Cut fractions `[W, E, S, N]` of interior node `k`.
    pub fn cuts(&self, k: usize) -> [f64; 4] {
        self.cut[k]
    }

    /// Interior indices of the four neighbors of node `k` (-1 = boundary).
    pub fn neighbor_indices(&self, k: usize) -> [i32; 4] {
        self.neighbors[k]
    }

    /// Interior index of the node nearest to `(x, y)`, if that node is interior.
    pub fn index_at(&self, x: f64, y: f64) -> Option<usize> {
        let i = (x / self.h).round() as i64 - self.origin_steps.0;
        let j = (y / self.h).round() as i64 - self.origin_steps.1;
        if i < 0 || j < 0 || i as usize >= self.nx || j as usize >= self.ny {
            return None;
        }
        let flat = j as usize * self.nx + i as usize;
        let k = self.idx[flat];
        (k >= 0).then_some(k as usize)
    }

    pub fn is_interior_node(&self, i: usize, j: usize) -> bool {
        self.interior[j * self.nx + i]
    }

    /// Interior index of grid node (i, j), or None.
    pub fn interior_index(&self, i: usize, j: usize) -> Option<usize> {
        let k = self.idx[j * self.nx + i];
        (k >= 0).then_some(k as usize)
    }

    /// Plain counting estimate of the area: (number of interior nodes) h^2.
    pub fn counting_area(&self) -> f64 {
        self.n_interior() as f64 * self.h * self.h
    }

    /// Cut-cell quadrature weights. Per axis a node's cell reaches half a
    /// spacing toward an interior neighbor and the full cut distance toward
    /// the boundary, which partitions every grid chord exactly.
    pub fn quad_weights(&self) -> Vec<f64> {
        let h2 = self.h * self.h;
        (0..self.nodes.len())
            .map(|k| {
                let side = |dir: usize| {
                    if self.neighbors[k][dir] >= 0 {
                        0.5
                    } else {
                        self.cut[k][dir]
                    }
                };
                h2 * (side(WEST) + side(EAST)) * (side(SOUTH) + side(NORTH))
            })
            .collect()
    }

    /// Area estimate from the cut-cell weights.
    pub fn weighted_area(&self) -> f64 {
        self.quad_weights().iter().sum()
    }

    /// Build a mask from an arbitrary indicator and cut-fraction resolver.
    ///
    /// `is_inside(i, j)` decides strict interiority of grid node (i, j);
    /// `cut_fraction(i, j, dir)` is called only for interior nodes whose
    /// `dir` neighbor is not interior and must return a value in (0, 1].
    pub(crate) fn from_indicator<F, G>(
        h: f64,
        nx: usize,
        ny: usize,
        origin_steps: (i64, i64),
        domain: Option<Domain2D>,
        is_inside: F,
        cut_fraction: G,
    ) -> Result<GridMask>
    where
        F: Fn(usize, usize) -> bool,
        G: Fn(usize, usize, usize) -> f64,
    {
        let mut interior = vec![false; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                interior[j * nx + i] = is_inside(i, j);
            }
        }
        // order nodes red first, then black, row-major within each color
        let mut idx = vec![-1i32; nx * ny];
        let mut nodes = Vec::new();
        for color in 0..2usize {
            for j in 0..ny {
                for i in 0..nx {
                    if interior[j * nx + i] && (i + j) % 2 == color {
                        idx[j * nx + i] = nodes.len() as i32;
                        nodes.push((i as u32, j as u32));
                    }
                }
            }
            if color == 0 && nodes.is_empty() && interior.iter().all(|&x| !x) {
                break;
            }
        }
        if nodes.is_empty() {
            return Err(Error::EmptyInterior { h });
        }
        let n_red = nodes
            .iter()
            .position(|&(i, j)| (i + j) % 2 == 1)
            .unwrap_or(nodes.len());

        let offsets: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        let mut cut = vec![[1.0f64; 4]; nodes.len()];
        let mut neighbors = vec![[-1i32; 4]; nodes.len()];
        for (k, &(i, j)) in nodes.iter().enumerate() {
            let (i, j) = (i as i64, j as i64);
            for (dir, (di, dj)) in offsets.iter().enumerate() {
                let (ni, nj) = (i + di, j + dj);
                let inside = ni >= 0
                    && nj >= 0
                    && (ni as usize) < nx
                    && (nj as usize) < ny
                    && interior[nj as usize * nx + ni as usize];
                if inside {
                    neighbors[k][dir] = idx[nj as usize * nx + ni as usize];
                } else {
                    let theta = cut_fraction(i as usize, j as usize, dir);
                    debug_assert!(theta > 0.0 && theta <= 1.0, "cut fraction {theta}");
                    cut[k][dir] = theta.clamp(1e-9, 1.0);
                }
            }
        }
        Ok(GridMask {
            h,
            nx,
            ny,
            origin_steps,
            interior,
            idx,
            nodes,
            cut,
            neighbors,
            n_red,
            domain,
        })
    }
}

/// Locate the boundary crossing along one grid edge by bisecting the
/// implicit function; the interior endpoint has f < 0, the far endpoint
/// f >= 0. Returns the fraction in (0, 1].
fn bisect_edge(domain: &Domain2D, x: f64, y: f64, dx: f64, dy: f64) -> f64 {
    let f_hi = domain.implicit(x + dx, y + dy);
    if f_hi == 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if domain.implicit(x + mid * dx, y + mid * dy) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Discretize `domain` at spacing `h`.
///
/// The grid is node-centered, symmetric about the origin (the center is
/// always a node), and padded with at least one exterior layer. Boundary
/// cut fractions are resolved from the analytic shape.
pub fn build_mask(domain: &Domain2D, h: f64) -> Result<GridMask> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("spacing h={h} must be positive")));
    }
    if h >= domain.inradius() {
        return Err(Error::InvalidParameter(format!(
            "spacing h={h} must be smaller than the inradius {}",
            domain.inradius()
        )));
    }
    let (ex, ey) = domain.half_extents();
    let nhx = (ex / h).ceil() as i64 + 1;
    let nhy = (ey / h).ceil() as i64 + 1;
    let nx = (2 * nhx + 1) as usize;
    let ny = (2 * nhy + 1) as usize;
    let origin_steps = (-nhx, -nhy);
    let pos = move |i: usize, j: usize| {
        (
            (i as i64 - nhx) as f64 * h,
            (j as i64 - nhy) as f64 * h,
        )
    };
    let dom = *domain;
    GridMask::from_indicator(
        h,
        nx,
        ny,
        origin_steps,
        Some(dom),
        |i, j| {
            let (x, y) = pos(i, j);
            dom.contains(x, y)
        },
        |i, j, dir| {
            let (x, y) = pos(i, j);
            let (dx, dy) = match dir {
                WEST => (-h, 0.0),
                EAST => (h, 0.0),
                SOUTH => (0.0, -h),
                _ => (0.0, h),
            };
            bisect_edge(&dom, x, y, dx, dy)
        },
    )
}
