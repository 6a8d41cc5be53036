//! Small numerical building blocks shared by the physics modules.

use quadrature::double_exponential;

/// Neumaier-compensated sum accumulated in the order given.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = CompensatedSum::new();
    for x in it {
        s.add(x);
    }
    s.value()
}

/// Tanh-sinh quadrature of `f` over `[a, b]` split at the given interior
/// breakpoints (ignored if outside the interval).
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], abs_tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut pts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    pts.push(a);
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(|x, y| x.total_cmp(y));
    pts.extend(inner);
    pts.push(b);
    let mut acc = CompensatedSum::new();
    for w in pts.windows(2) {
        if w[1] > w[0] {
            acc.add(double_exponential::integrate(f, w[0], w[1], abs_tol).integral);
        }
    }
    acc.value()
}

/// Spherical Bessel function j0(z) = sin z / z.
pub fn j0(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// Locate a root of `f` in `[a, b]` (requires a sign change) by bisection
/// down to a coarse width followed by secant polishing that is kept inside
/// the shrinking bracket.  Returns the root with relative accuracy `rel_tol`.
pub fn bracketed_root<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64) -> Option<f64> {
    let (mut lo, mut hi) = if a < b { (a, b) } else { (b, a) };
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return None;
    }
    // bisection phase
    for _ in 0..200 {
        if (hi - lo) <= 1e-4 * hi.abs().max(lo.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    // secant polish inside the bracket (Illinois variant of regula falsi,
    // which keeps the bracket and avoids one-sided stagnation)
    let mut side = 0i8;
    for _ in 0..200 {
        if (hi - lo) <= rel_tol * hi.abs().max(lo.abs()) {
            break;
        }
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    Some(0.5 * (lo + hi))
}
