//! Wigner 6j symbols and the LS-coupling angular factor for E1 transitions.

use crate::species::SeriesLabel;

fn fact(n: i64) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Triangle coefficient Delta(abc) for doubled arguments, or `None` when the
/// triad violates the triangle rule or parity.
fn triangle(a2: i64, b2: i64, c2: i64) -> Option<f64> {
    if (a2 + b2 + c2) % 2 != 0 || c2 < (a2 - b2).abs() || c2 > a2 + b2 {
        return None;
    }
    let s = (a2 + b2 + c2) / 2;
    Some(fact(s - c2) * fact(s - b2) * fact(s - a2) / fact(s + 1))
}

/// Wigner 6j symbol {j1 j2 j3; j4 j5 j6} with every argument given as twice
/// its value, evaluated with the Racah formula.
pub fn wigner_6j_doubled(j1: i64, j2: i64, j3: i64, j4: i64, j5: i64, j6: i64) -> f64 {
    if [j1, j2, j3, j4, j5, j6].iter().any(|&j| j < 0) {
        return 0.0;
    }
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    let mut pref = 1.0;
    for &(a, b, c) in &triads {
        match triangle(a, b, c) {
            Some(d) => pref *= d,
            None => return 0.0,
        }
    }
    let sums: Vec<i64> = triads.iter().map(|&(a, b, c)| (a + b + c) / 2).collect();
    let pairs = [(j1 + j2 + j4 + j5) / 2, (j2 + j3 + j5 + j6) / 2, (j3 + j1 + j6 + j4) / 2];
    let tmin = *sums.iter().max().unwrap();
    let tmax = *pairs.iter().min().unwrap();
    let mut total = 0.0;
    for t in tmin..=tmax {
        let mut den = 1.0;
        for s in &sums {
            den *= fact(t - s);
        }
        for p in &pairs {
            den *= fact(p - t);
        }
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * fact(t + 1) / den;
    }
    pref.sqrt() * total
}

/// Wigner 6j symbol for integer arguments.
pub fn wigner_6j(j1: u32, j2: u32, j3: u32, j4: u32, j5: u32, j6: u32) -> f64 {
    let d = |j: u32| 2 * j as i64;
    wigner_6j_doubled(d(j1), d(j2), d(j3), d(j4), d(j5), d(j6))
}

/// Whether `a -> b` is an allowed E1 transition in pure LS coupling.
pub fn e1_allowed(a: SeriesLabel, b: SeriesLabel) -> bool {
    a.multiplicity == b.multiplicity
        && a.l.abs_diff(b.l) == 1
        && a.j.abs_diff(b.j) <= 1
        && !(a.j == 0 && b.j == 0)
}

/// Angular weight W such that the isotropically averaged squared dipole
/// z^2 = |<b|z|a>|^2 summed over final m equals W * R^2, where R is the
/// radial integral between the two valence orbitals:
/// W = (2J'+1) {L' J' S; J L 1}^2 max(L, L') / 3.
pub fn ls_weight(a: SeriesLabel, b: SeriesLabel) -> f64 {
    if !e1_allowed(a, b) {
        return 0.0;
    }
    let two_s = a.two_s() as i64;
    let sixj = wigner_6j_doubled(
        2 * b.l as i64,
        2 * b.j as i64,
        two_s,
        2 * a.j as i64,
        2 * a.l as i64,
        2,
    );
    (2 * b.j + 1) as f64 * sixj * sixj * a.l.max(b.l) as f64 / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn lab(s: &str) -> SeriesLabel {
        s.parse().unwrap()
    }

    #[test]
    fn tabulated_values() {
        // {1 1 1; 1 1 1} = 1/6, {1 1 0; 1 1 1} = -1/3, {2 1 1; 1 1 1} = 1/6
        assert_abs_diff_eq!(wigner_6j(1, 1, 1, 1, 1, 1), 1.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(wigner_6j(1, 1, 0, 1, 1, 1), -1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(wigner_6j(2, 1, 1, 1, 1, 1), 1.0 / 6.0, epsilon = 1e-14);
        // {2 2 2; 2 2 2} = -3/70
        assert_abs_diff_eq!(wigner_6j(2, 2, 2, 2, 2, 2), -3.0 / 70.0, epsilon = 1e-14);
        // half-integer: {1/2 1/2 1; 1/2 1/2 0} = 1/2
        assert_abs_diff_eq!(wigner_6j_doubled(1, 1, 2, 1, 1, 0), 0.5, epsilon = 1e-14);
        assert_eq!(wigner_6j(1, 1, 3, 1, 1, 1), 0.0);
    }

    #[test]
    fn singlet_weight_is_orbital() {
        // S = 0: W reduces to max(L,L')/(3(2L+1))
        assert_abs_diff_eq!(ls_weight(lab("1S0"), lab("1P1")), 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ls_weight(lab("1P1"), lab("1S0")), 1.0 / 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ls_weight(lab("1P1"), lab("1D2")), 2.0 / 9.0, epsilon = 1e-14);
    }

    #[test]
    fn triplet_weights_sum_over_fine_structure() {
        // summing over final J' recovers the spinless value max(L,L')/(3(2L+1))
        for a in ["3P0", "3P1", "3P2", "3D1", "3D2", "3D3"] {
            let a = lab(a);
            for lb in [a.l.saturating_sub(1), a.l + 1] {
                if lb == a.l {
                    continue;
                }
                let total: f64 = (0..=lb + 1)
                    .filter_map(|j| SeriesLabel::new(3, lb, j).ok())
                    .map(|b| ls_weight(a, b))
                    .sum();
                let expect = a.l.max(lb) as f64 / (3.0 * (2 * a.l + 1) as f64);
                assert_abs_diff_eq!(total, expect, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn forbidden_channels_are_zero() {
        assert!(ls_weight(lab("3P0"), lab("3S1")) > 0.0);
        assert_eq!(ls_weight(lab("3P0"), lab("3D2")), 0.0);
        assert_eq!(ls_weight(lab("3P0"), lab("1S0")), 0.0);
        assert_eq!(ls_weight(lab("3P0"), lab("3P1")), 0.0);
    }

    proptest! {
        #[test]
        fn six_j_symmetric_under_column_swap(a in 0u32..5, b in 0u32..5, c in 0u32..5,
                                             d in 0u32..5, e in 0u32..5, f in 0u32..5) {
            let x = wigner_6j(a, b, c, d, e, f);
            prop_assert!((x - wigner_6j(b, a, c, e, d, f)).abs() < 1e-12);
            prop_assert!((x - wigner_6j(a, e, f, d, b, c)).abs() < 1e-12);
        }
    }
}
