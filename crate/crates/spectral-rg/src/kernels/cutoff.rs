//! Smooth partition of unity `chi^2 + chibar^2 = 1` used by every
//! Feshbach step.
//!
//! `chi_1(r) = cos(pi/2 * theta(10 r - 9))` where `theta` is the cubic
//! smoothstep clamped to `[0, 1]`. The rescaled cutoff is
//! `chi_rho(r) = chi_1(r / rho)`, equal to one below `0.9 rho` and zero
//! from `rho` on.

use crate::scalar::Real;

fn smoothstep<T: Real>(t: T) -> T {
    if t <= T::zero() {
        T::zero()
    } else if t >= T::one() {
        T::one()
    } else {
        t * t * (T::lit(3.0) - T::lit(2.0) * t)
    }
}

fn phase<T: Real>(r: T) -> T {
    T::FRAC_PI_2() * smoothstep(T::lit(10.0) * r - T::lit(9.0))
}

/// Exact 0 and 1 outside the transition window `(0.9, 1)`.
pub fn chi1<T: Real>(r: T) -> T {
    let t = T::lit(10.0) * r - T::lit(9.0);
    if t <= T::zero() {
        T::one()
    } else if t >= T::one() {
        T::zero()
    } else {
        phase(r).cos()
    }
}

pub fn chibar1<T: Real>(r: T) -> T {
    let t = T::lit(10.0) * r - T::lit(9.0);
    if t <= T::zero() {
        T::zero()
    } else if t >= T::one() {
        T::one()
    } else {
        phase(r).sin()
    }
}

pub fn cutoff_chi<T: Real>(r: T, rho: T) -> T {
    chi1(r / rho)
}

pub fn cutoff_chibar<T: Real>(r: T, rho: T) -> T {
    chibar1(r / rho)
}

/// Derivative of `chi_1` of the given order (0, 1 or 2).
///
/// Second derivatives jump at `r = 0.9` and `r = 1`; the one-sided values
/// agree in magnitude bound, which is all the constant `C_chi` needs.
pub fn chi1_derivative<T: Real>(r: T, order: usize) -> T {
    let t = T::lit(10.0) * r - T::lit(9.0);
    if order == 0 {
        return chi1(r);
    }
    if t <= T::zero() || t >= T::one() {
        return T::zero();
    }
    let half_pi = T::FRAC_PI_2();
    let th = smoothstep(t);
    let dth = T::lit(6.0) * t * (T::one() - t) * T::lit(10.0);
    let ddth = (T::lit(6.0) - T::lit(12.0) * t) * T::lit(100.0);
    let (s, c) = (half_pi * th).sin_cos();
    match order {
        1 => -s * half_pi * dth,
        2 => -c * (half_pi * dth).powi(2) - s * half_pi * ddth,
        _ => panic!("chi1_derivative supports orders up to 2"),
    }
}

/// `sup_r |d^order chi_1 / dr^order|`, sampled on a fine grid of the
/// transition window `[0.9, 1]`.
pub fn chi1_derivative_sup<T: Real>(order: usize) -> T {
    if order == 0 {
        return T::one();
    }
    let n = 20_000;
    let mut best = T::zero();
    for i in 0..=n {
        let r = T::lit(0.9 + 0.1 * i as f64 / n as f64);
        best = best.max(chi1_derivative(r, order).abs());
    }
    best
}

/// `C_chi = 4/3 (sum_{n<=s} sup|d^n chi_1| + sup|chi_1'|^2)`.
pub fn c_chi<T: Real>(s: usize) -> T {
    assert!(s <= 2, "derivative order s must be at most 2");
    let sum = (0..=s).fold(T::zero(), |acc, n| acc + chi1_derivative_sup::<T>(n));
    let d1 = chi1_derivative_sup::<T>(1);
    T::lit(4.0 / 3.0) * (sum + d1 * d1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity() {
        for i in 0..=400 {
            let r = 1.2 * i as f64 / 400.0;
            let (c, s) = (chi1(r), chibar1(r));
            assert!((c * c + s * s - 1.0).abs() < 1e-15);
        }
        assert_eq!(cutoff_chi(0.36, 0.4), 1.0);
        assert_eq!(cutoff_chi(0.4, 0.4), 0.0);
        assert_eq!(cutoff_chibar(0.5, 0.4), 1.0);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let h = 1e-6;
        for &r in &[0.91f64, 0.93, 0.95, 0.97, 0.99] {
            let fd = (chi1(r + h) - chi1(r - h)) / (2.0 * h);
            assert!((fd - chi1_derivative(r, 1)).abs() < 1e-6);
            let fd2 = (chi1_derivative(r + h, 1) - chi1_derivative(r - h, 1)) / (2.0 * h);
            assert!((fd2 - chi1_derivative(r, 2)).abs() < 1e-4);
        }
    }

    #[test]
    fn derivative_sup_and_constant() {
        let d1: f64 = chi1_derivative_sup(1);
        assert!(d1 > 19.0 && d1 < 19.5, "{d1}");
        let c: f64 = c_chi(1);
        assert!((c - 4.0 / 3.0 * (1.0 + d1 + d1 * d1)).abs() < 1e-12);
    }

    #[test]
    fn single_precision_agrees() {
        let a: f32 = chi1(0.95f32);
        assert!((a as f64 - chi1(0.95f64)).abs() < 1e-6);
    }
}
