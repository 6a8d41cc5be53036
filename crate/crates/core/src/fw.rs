//! The Farley-Wing function
//!
//! F(y) = -2y PV integral_0^inf x^3 / ((x^2 - y^2)(e^x - 1)) dx.
//!
//! For y > 0 the principal value is taken by pairing points symmetric about
//! the pole: with f(x) = x^3/(e^x - 1),
//!
//! F(y) = -( P + R - Q ),
//! P = integral_0^y (f(y+t) - f(y-t))/t dt,
//! Q = integral_0^{2y} f(x)/(x+y) dx,
//! R = integral_{2y}^inf 2y f(x)/(x^2-y^2) dx,
//!
//! which has a bounded integrand everywhere.  Negative arguments use oddness.

use crate::numerics::integrate_pieces;

/// Beyond this x the Planck factor makes f(x) < 1e-300.
const X_CUT: f64 = 760.0;
const TOL: f64 = 1e-15;

/// Photon-number weighted cube, x^3/(e^x - 1).
pub fn planck_cube(x: f64) -> f64 {
    if x < 1e-8 {
        x * x * (1.0 - 0.5 * x)
    } else if x > X_CUT {
        0.0
    } else {
        x * x * x / x.exp_m1()
    }
}

fn planck_cube_prime(x: f64) -> f64 {
    if x < 1e-6 {
        return 2.0 * x - 1.5 * x * x;
    }
    if x > X_CUT {
        return 0.0;
    }
    let em = x.exp_m1();
    (3.0 * x * x * em - x * x * x * (em + 1.0)) / (em * em)
}

/// Breakpoints where f changes character (the thermal peak and its decay).
fn thermal_breaks() -> [f64; 5] {
    [1.0, 3.0, 10.0, 40.0, 120.0]
}

fn positive(y: f64) -> f64 {
    let f = planck_cube;
    let two_y = 2.0 * y;
    let scale = f(y).max(1e-3) * y.min(1.0);
    let tol = TOL * scale.max(1e-300);

    let pair = |t: f64| {
        if t < 1e-7 * y {
            2.0 * planck_cube_prime(y)
        } else {
            (f(y + t) - f(y - t)) / t
        }
    };
    // the pair integrand varies on scale 1 around t = y - x for the thermal
    // features of f(y - t), and near t = 0 for those of f(y + t)
    let mut pb: Vec<f64> = thermal_breaks().iter().flat_map(|&b| [b, y - b]).collect();
    pb.push(y - X_CUT);
    let p = integrate_pieces(&pair, 0.0, y, &pb, tol);

    let q = integrate_pieces(&|x: f64| f(x) / (x + y), 0.0, two_y, &thermal_breaks(), tol);

    let r_hi = two_y.max(X_CUT);
    let mut rb: Vec<f64> = thermal_breaks().to_vec();
    rb.extend([2.5 * y, 4.0 * y]);
    let r = integrate_pieces(&|x: f64| two_y * f(x) / ((x - y) * (x + y)), two_y, r_hi, &rb, tol);

    -(p + r - q)
}

/// F(y) for any finite y.
pub fn farley_wing(y: f64) -> f64 {
    if y == 0.0 || !y.is_finite() {
        return 0.0;
    }
    let v = positive(y.abs());
    if y < 0.0 {
        -v
    } else {
        v
    }
}

/// Excised approximation used as a consistency diagnostic: the integral with
/// (y - delta, y + delta) removed, plus the leading local correction
/// 2 delta g'(y) with g(x) = f(x)/(x+y).  Converges to F(y) as delta^3.
pub fn farley_wing_excised(y: f64, delta: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let s = y.signum();
    let y = y.abs();
    let f = planck_cube;
    let g = |x: f64| f(x) / ((x - y) * (x + y));
    let tol = 1e-15;
    let lo = integrate_pieces(&g, 0.0, y - delta, &thermal_breaks(), tol);
    let hi = integrate_pieces(&g, y + delta, (y + delta).max(X_CUT), &thermal_breaks(), tol);
    let gp = (planck_cube_prime(y) * 2.0 * y - f(y)) / (4.0 * y * y);
    s * -2.0 * y * (lo + hi + 2.0 * delta * gp)
}

/// Richardson extrapolation of [`farley_wing_excised`] over the chain
/// delta = (1e-2, 1e-3, 1e-4) y, eliminating the delta^3 term.
pub fn farley_wing_richardson(y: f64) -> f64 {
    let a = y.abs();
    let f1 = farley_wing_excised(y, 1e-2 * a);
    let f2 = farley_wing_excised(y, 1e-3 * a);
    let _ = farley_wing_excised(y, 1e-4 * a);
    f2 + (f2 - f1) / 999.0
}

/// Location and value of the minimum of F on y > 0, by golden-section search.
pub fn minimum() -> (f64, f64) {
    let (mut a, mut b) = (0.5, 2.0);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (farley_wing(c), farley_wing(d));
    while b - a > 1e-7 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = farley_wing(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = farley_wing(d);
        }
    }
    let y = 0.5 * (a + b);
    (y, farley_wing(y))
}
