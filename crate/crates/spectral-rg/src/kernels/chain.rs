use std::collections::BTreeMap;

use num_complex::Complex;

use super::grid::RadialGrid;
use super::kernel::Kernel;
use crate::error::{Result, SrgError};
use crate::scalar::Real;

/// Parameters of the weighted kernel norm `||.||_{mu,s,xi}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BanachParams<T> {
    pub mu: T,
    pub s: usize,
    pub xi: T,
}

impl<T: Real> BanachParams<T> {
    pub fn new(mu: T, s: usize, xi: T) -> Result<Self> {
        if !(mu > T::zero()) {
            return Err(SrgError::InvalidArgument("mu must be positive".into()));
        }
        if !(xi > T::zero() && xi < T::one()) {
            return Err(SrgError::InvalidArgument("xi must lie in (0, 1)".into()));
        }
        Ok(Self { mu, s, xi })
    }
}

/// Kernels `w_{m,n}` for `0 <= m + n <= m_max` on a shared grid. The
/// `(0,0)` entry is always present.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelChain<T> {
    grid: RadialGrid<T>,
    m_max: usize,
    params: BanachParams<T>,
    kernels: BTreeMap<(usize, usize), Kernel<T>>,
}

/// Polydisc `D(alpha, beta, gamma)`: `|E| <= alpha`, `sup|T' - 1| <= beta`,
/// `||w_1|| <= gamma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Polydisc<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
}

/// Measured coordinates of a chain against a polydisc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolydiscStats<T> {
    pub e: Complex<T>,
    pub t_prime_dev: T,
    pub w1_norm: T,
}

impl<T: Real> Polydisc<T> {
    /// The domain `D(rho/8, 1/8, rho/8)` on which one renormalization step
    /// is defined.
    pub fn renormalization_domain(rho: T) -> Self {
        let e = T::lit(0.125);
        Self { alpha: rho * e, beta: e, gamma: rho * e }
    }

    pub fn contains(&self, s: &PolydiscStats<T>) -> bool {
        s.e.norm() <= self.alpha && s.t_prime_dev <= self.beta && s.w1_norm <= self.gamma
    }
}

impl<T: Real> KernelChain<T> {
    pub fn new(grid: RadialGrid<T>, m_max: usize, params: BanachParams<T>, w00: Kernel<T>) -> Result<Self> {
        if w00.order() != (0, 0) || !w00.fits(&grid) {
            return Err(SrgError::Shape("w00 must be a (0,0) kernel on the chain grid".into()));
        }
        let mut kernels = BTreeMap::new();
        kernels.insert((0, 0), w00);
        Ok(Self { grid, m_max, params, kernels })
    }

    pub fn insert(&mut self, w: Kernel<T>) -> Result<()> {
        let (m, n) = w.order();
        if m + n > self.m_max {
            return Err(SrgError::InvalidArgument(format!(
                "kernel ({m},{n}) exceeds chain order {}",
                self.m_max
            )));
        }
        if !w.fits(&self.grid) {
            return Err(SrgError::Shape(format!("kernel ({m},{n}) does not match the chain grid")));
        }
        self.kernels.insert((m, n), w);
        Ok(())
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn params(&self) -> &BanachParams<T> {
        &self.params
    }

    pub fn set_params(&mut self, params: BanachParams<T>) {
        self.params = params;
    }

    pub fn w00(&self) -> &Kernel<T> {
        &self.kernels[&(0, 0)]
    }

    pub fn get(&self, m: usize, n: usize) -> Option<&Kernel<T>> {
        self.kernels.get(&(m, n))
    }

    pub fn get_mut(&mut self, m: usize, n: usize) -> Option<&mut Kernel<T>> {
        self.kernels.get_mut(&(m, n))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &Kernel<T>)> {
        self.kernels.iter()
    }

    /// Kernels with `m + n >= 1`.
    pub fn iter_w1(&self) -> impl Iterator<Item = (&(usize, usize), &Kernel<T>)> {
        self.kernels.iter().filter(|(k, _)| k.0 + k.1 > 0)
    }

    /// `sum_{m+n>=1} xi^{-(m+n)} ||w_{m,n}||_{mu,s}`.
    pub fn w1_norm(&self) -> T {
        let p = self.params;
        self.iter_w1().fold(T::zero(), |acc, ((m, n), w)| {
            acc + w.norm_mu_s(&self.grid, p.mu, p.s) * p.xi.powi(-((m + n) as i32))
        })
    }

    /// Full chain norm, the `(0,0)` part included.
    pub fn chain_norm(&self) -> T {
        let p = self.params;
        self.w00().norm_mu_s(&self.grid, p.mu, p.s) + self.w1_norm()
    }

    /// `E = w00(0)`.
    pub fn energy(&self) -> Complex<T> {
        self.w00().values()[0]
    }

    /// Splits `w00 = E + T` with `T(0) = 0`.
    pub fn split_etw(&self) -> (Complex<T>, Kernel<T>) {
        let e = self.energy();
        let mut t = self.w00().clone();
        for v in t.values_mut() {
            *v = *v - e;
        }
        (e, t)
    }

    pub fn polydisc_stats(&self) -> PolydiscStats<T> {
        let d = self.w00().r_derivative(&self.grid, 1);
        let one = Complex::new(T::one(), T::zero());
        let dev = d.values().iter().fold(T::zero(), |acc, v| acc.max((*v - one).norm()));
        PolydiscStats { e: self.energy(), t_prime_dev: dev, w1_norm: self.w1_norm() }
    }

    /// `S_rho`: rescales every kernel.
    pub fn scale(&self, rho: T) -> Self {
        let kernels = self.kernels.iter().map(|(k, w)| (*k, w.scale(&self.grid, rho))).collect();
        Self { kernels, ..self.clone() }
    }

    pub fn symmetrize(&mut self) {
        for w in self.kernels.values_mut() {
            w.symmetrize();
        }
    }

    /// Adds `c` to the constant part.
    pub fn shift(&mut self, c: Complex<T>) {
        let w = self.kernels.get_mut(&(0, 0)).unwrap();
        for v in w.values_mut() {
            *v = *v + c;
        }
    }

    /// Largest entrywise difference over kernels present in either chain.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut keys: Vec<_> = self.kernels.keys().chain(other.kernels.keys()).copied().collect();
        keys.sort();
        keys.dedup();
        keys.into_iter().fold(T::zero(), |acc, k| {
            let d = match (self.kernels.get(&k), other.kernels.get(&k)) {
                (Some(a), Some(b)) => a.max_abs_diff(b),
                (Some(a), None) | (None, Some(a)) => a.max_abs(),
                _ => T::zero(),
            };
            acc.max(d)
        })
    }

    /// The same chain on every other radial node. Needs an odd node count
    /// so that `r_max` is kept.
    pub fn coarsen_r(&self) -> Result<Self> {
        let nr = self.grid.nr();
        if nr.is_multiple_of(2) || nr < 7 {
            return Err(SrgError::Shape(format!("cannot halve {nr} radial nodes")));
        }
        let r: Vec<T> = self.grid.r_nodes().iter().step_by(2).copied().collect();
        let grid = RadialGrid::new(r, self.grid.k_nodes().to_vec())?;
        let mut kernels = BTreeMap::new();
        for (&(m, n), w) in &self.kernels {
            let len = w.row_len();
            let values = (0..nr).step_by(2).flat_map(|i| w.row(i).iter().copied()).collect();
            debug_assert_eq!(len * grid.nr(), (nr / 2 + 1) * len);
            kernels.insert((m, n), Kernel::from_values(m, n, &grid, values)?);
        }
        Ok(Self { grid, m_max: self.m_max, params: self.params, kernels })
    }

    pub fn cast<U: Real>(&self) -> KernelChain<U> {
        let p = self.params;
        KernelChain {
            grid: self.grid.cast(),
            m_max: self.m_max,
            params: BanachParams { mu: U::from(p.mu).unwrap(), s: p.s, xi: U::from(p.xi).unwrap() },
            kernels: self.kernels.iter().map(|(k, w)| (*k, w.cast())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(g: f64) -> KernelChain<f64> {
        let k: Vec<f64> = (0..8).rev().map(|i| 0.4f64.powi(i)).collect();
        let grid = RadialGrid::uniform(33, 2.0, k).unwrap();
        let params = BanachParams::new(0.5, 1, 0.25).unwrap();
        let w00 = Kernel::from_fn(0, 0, &grid, |r, _| Complex::new(r, 0.0));
        let mut c = KernelChain::new(grid.clone(), 2, params, w00).unwrap();
        let f = |_: f64, k: &[f64]| Complex::new(g * k[0].sqrt(), 0.0);
        c.insert(Kernel::from_fn(1, 0, &grid, f)).unwrap();
        c.insert(Kernel::from_fn(0, 1, &grid, f)).unwrap();
        c
    }

    #[test]
    fn toy_norm_and_polydisc() {
        let c = toy(0.005);
        assert!((c.w1_norm() - 2.0 * 4.0 * 0.005).abs() < 1e-14);
        let st = c.polydisc_stats();
        assert!(st.t_prime_dev < 1e-13);
        assert!(Polydisc::renormalization_domain(0.4).contains(&st));
        assert!(!Polydisc::renormalization_domain(0.4).contains(&toy(0.01).polydisc_stats()));
    }

    #[test]
    fn scaling_fixes_free_part_and_expands_constant() {
        let mut c = toy(0.0);
        c.shift(Complex::new(0.01, 0.0));
        let s = c.scale(0.4);
        let (e, t) = s.split_etw();
        assert!((e.re - 0.025).abs() < 1e-15);
        for (i, v) in t.values().iter().enumerate() {
            assert!((v.re - s.grid().r_nodes()[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_oversized_kernel() {
        let mut c = toy(0.001);
        let g = c.grid().clone();
        assert!(c.insert(Kernel::zeros(2, 1, &g)).is_err());
    }
}
