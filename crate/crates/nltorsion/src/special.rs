//! Small numerical kernels shared across the crate: the Gamma function,
//! ball volume/surface constants, the entire functions
//! `phi_k(x) = (e^x - sum_{j<k} x^j/j!) / x^k`, and quadrature helpers.

use std::f64::consts::PI;

/// Lanczos approximation of the Gamma function (g = 7, 9 coefficients).
///
/// Accurate to about 1e-13 relative over the arguments used here
/// (half-integers up to ~30).
pub fn gamma(x: f64) -> f64 {
    const P: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection formula
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = P[0];
    for (i, p) in P.iter().enumerate().skip(1) {
        acc += p / (x + i as f64);
    }
    let t = x + 7.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Volume of the unit ball in dimension `d`.
pub fn unit_ball_volume(d: u32) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0),
    }
}

/// Surface measure of the unit sphere in dimension `d` (= d * |B_1|).
pub fn unit_sphere_area(d: u32) -> f64 {
    d as f64 * unit_ball_volume(d)
}

/// Radius of the ball of volume `c` in dimension `d`.
pub fn ball_radius_from_volume(d: u32, c: f64) -> f64 {
    (c / unit_ball_volume(d)).powf(1.0 / d as f64)
}

/// `phi_k(x) = sum_{j>=0} x^j / (j+k)!`, the entire functions with
/// `phi_k(0) = 1/k!` that appear when integrating `e^{bs} s^{d-1}` terms.
///
/// For x >= 0 every series term is positive, so the sum is evaluated
/// without cancellation; for moderate negative x the closed form is safe.
pub fn phi(k: u32, x: f64) -> f64 {
    debug_assert!(k >= 1);
    if x.abs() < 1.0 || x >= 0.0 {
        // series; terms positive for x >= 0, fast converging for |x| < 1
        let mut fact = 1.0f64;
        for j in 2..=k {
            fact *= j as f64;
        }
        let mut term = 1.0 / fact; // j = 0 term: 1/k!
        let mut sum = term;
        let mut j = 0u32;
        loop {
            j += 1;
            term *= x / (j + k) as f64;
            let new = sum + term;
            if new == sum && j > 4 {
                return sum;
            }
            sum = new;
            if j > 700 {
                return sum;
            }
        }
    } else {
        // x <= -1: closed form, |e^x| small so the subtraction is benign
        let mut partial = 0.0f64;
        let mut t = 1.0f64;
        for j in 0..k {
            partial += t;
            t *= x / (j + 1) as f64;
        }
        (x.exp() - partial) / x.powi(k as i32)
    }
}

const GAUSS5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GAUSS5_W: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// 5-point Gauss-Legendre quadrature of `f` on `[a, b]` (degree 9 exact).
pub fn gauss5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in GAUSS5_X.iter().zip(GAUSS5_W.iter()) {
        sum += w * f(mid + half * x);
    }
    sum * half
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}
