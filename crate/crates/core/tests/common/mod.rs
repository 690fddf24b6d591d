//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use fracollapse::ground_state::{solve_ground_state, GroundState};
use fracollapse::{Field, Grid};
use num_complex::Complex64;

/// Closed-form ground state of `-Q'' + Q = Q^{2p+1}` on the line:
/// `((p+1) sech^2(p x))^{1/(2p)}`.
pub fn line_soliton(p: f64, x: f64) -> f64 {
    let sech = 1.0 / (p * x).cosh();
    ((p + 1.0) * sech * sech).powf(0.5 / p)
}

fn townes_rhs(r: f64, y: [f64; 2]) -> [f64; 2] {
    let (q, dq) = (y[0], y[1]);
    let lap = if r == 0.0 { 0.0 } else { -dq / r };
    [dq, lap + q - q * q * q]
}

/// Integrates `Q'' + Q'/r - Q + Q^3 = 0` from `Q(0) = a`. Returns +1 if the
/// trajectory turns back up while positive, -1 if it crosses zero, and the
/// samples `(r, Q)` visited.
fn shoot(a: f64, r_max: f64, h: f64) -> (i32, Vec<(f64, f64)>) {
    // series start avoids the 1/r singularity: Q ~ a + (a - a^3) r^2 / 4
    let r0 = h;
    let c = (a - a * a * a) / 4.0;
    let mut y = [a + c * r0 * r0, 2.0 * c * r0];
    let mut r = r0;
    let mut path = vec![(0.0, a), (r, y[0])];
    while r < r_max {
        let k1 = townes_rhs(r, y);
        let k2 = townes_rhs(r + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = townes_rhs(r + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = townes_rhs(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r += h;
        path.push((r, y[0]));
        if y[0] < 0.0 {
            return (-1, path);
        }
        if y[1] > 0.0 {
            return (1, path);
        }
    }
    (0, path)
}

/// `||Q||_{L^2}^2` of the two-dimensional cubic ground state by radial shooting.
pub fn townes_mass_by_shooting() -> f64 {
    let h = 1e-3;
    let (mut lo, mut hi) = (2.0, 2.5);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match shoot(mid, 14.0, h).0 {
            -1 => hi = mid,
            _ => lo = mid,
        }
    }
    let (_, path) = shoot(0.5 * (lo + hi), 14.0, h);
    // stop where the shot separates from the decaying branch
    let mut mass = 0.0;
    for w in path.windows(2) {
        let (r0, q0) = w[0];
        let (r1, q1) = w[1];
        if r1 > 9.0 {
            break;
        }
        mass += 0.5 * (r1 - r0) * (q0 * q0 * r0 + q1 * q1 * r1);
    }
    2.0 * std::f64::consts::PI * mass
}

/// Maximizer of `alpha y^2 - beta y^e` by golden-section search, comparing
/// candidates through their exactly rearranged difference to avoid cancellation.
pub fn golden_argmax_two_term(alpha: f64, beta: f64, e: f64, hi: f64) -> f64 {
    // h(c) - h(d) = alpha (c - d)(c + d) - beta d^e expm1(e ln1p((c - d)/d))
    let diff = |c: f64, d: f64| {
        alpha * (c - d) * (c + d) - beta * d.powf(e) * (e * ((c - d) / d).ln_1p()).exp_m1()
    };
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (hi * 1e-6, hi);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    for _ in 0..400 {
        if diff(c, d) >= 0.0 {
            b = d;
        } else {
            a = c;
        }
        c = b - gr * (b - a);
        d = a + gr * (b - a);
        if b - a <= 1e-15 * b {
            break;
        }
    }
    0.5 * (a + b)
}

/// First sign change of `f` on `(0, hi]` by repeatedly zooming a dense scan.
pub fn zoom_scan_root(f: impl Fn(f64) -> f64, hi: f64) -> f64 {
    let (mut a, mut b) = (0.0, hi);
    for _ in 0..6 {
        let n = 1000;
        let h = (b - a) / n as f64;
        let mut prev = f(a);
        let mut found = false;
        for k in 1..=n {
            let y = a + k as f64 * h;
            let v = f(y);
            if prev > 0.0 && v <= 0.0 {
                a = y - h;
                b = y;
                found = true;
                break;
            }
            prev = v;
        }
        assert!(found, "no sign change on the scan interval");
    }
    0.5 * (a + b)
}

/// Windowed mass by summing `|u|^2` over the periodic ball directly.
pub fn windowed_mass_direct(f: &Field, center: &[usize], a: f64) -> f64 {
    let g = f.grid();
    let dim = g.dim();
    let n = g.n() as isize;
    let mut idx = vec![0usize; dim];
    let mut acc = 0.0;
    for (flat, v) in f.values().iter().enumerate() {
        g.unravel(flat, &mut idx);
        let mut r2 = 0.0;
        for k in 0..dim {
            let d = (idx[k] as isize - center[k] as isize).rem_euclid(n);
            let d = d.min(n - d) as f64 * g.dx();
            r2 += d * d;
        }
        if r2.sqrt() <= a * (1.0 + 1e-12) {
            acc += v.norm_sqr();
        }
    }
    acc * g.cell_volume()
}

pub fn gaussian_bump(grid: &Arc<Grid>, amp: Complex64, width: f64, center: &[f64]) -> Field {
    Field::from_fn(Arc::clone(grid), |x| {
        let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        amp * (-r2 / (width * width)).exp()
    })
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn solve(s: f64, dim: usize, p: f64, n: usize, l: f64) -> GroundState {
    let g = Grid::new(dim, n, l).unwrap();
    solve_ground_state(s, dim, p, &g, 1e-10, 5000).unwrap()
}
