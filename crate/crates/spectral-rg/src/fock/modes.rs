use std::f64::consts::PI;

use crate::error::{Result, SrgError};
use crate::RadialGrid;

/// Geometric set of boson modes `kappa_i = kappa_max rho^i`, each standing
/// for a spherical shell of the momentum ball.
///
/// Shell boundaries sit at geometric midpoints between neighbouring modes.
/// The first shell starts at `kappa_max`; the last one reaches down to 0.
/// Mode `i` carries the weight `v_i = 2 pi (b_i^2 - a_i^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSet {
    rho: f64,
    kappa_max: f64,
    kappa: Vec<f64>,
    upper: Vec<f64>,
    lower: Vec<f64>,
    weight: Vec<f64>,
}

impl ModeSet {
    pub fn new(g: usize, rho: f64, kappa_max: f64) -> Result<Self> {
        if g == 0 {
            return Err(SrgError::InvalidArgument("need at least one mode".into()));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(SrgError::InvalidArgument(format!("rho = {rho} is not in (0, 1)")));
        }
        if !(kappa_max > 0.0 && kappa_max.is_finite()) {
            return Err(SrgError::InvalidArgument("kappa_max must be positive".into()));
        }
        let kappa: Vec<f64> = (0..g).map(|i| kappa_max * rho.powi(i as i32)).collect();
        if kappa[g - 1] < 1e-300 {
            return Err(SrgError::Domain(format!("{g} modes underflow for rho = {rho}")));
        }
        let upper: Vec<f64> =
            (0..g).map(|i| if i == 0 { kappa_max } else { (kappa[i - 1] * kappa[i]).sqrt() }).collect();
        let lower: Vec<f64> = (0..g).map(|i| if i + 1 == g { 0.0 } else { upper[i + 1] }).collect();
        let weight = upper.iter().zip(&lower).map(|(b, a)| 2.0 * PI * (b * b - a * a)).collect();
        Ok(Self { rho, kappa_max, kappa, upper, lower, weight })
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappa_max
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    /// `(lower, upper)` boundary of shell `i`.
    pub fn shell(&self, i: usize) -> (f64, f64) {
        (self.lower[i], self.upper[i])
    }

    pub fn total_weight(&self) -> f64 {
        self.weight.iter().sum()
    }

    /// Mode moduli in ascending order, as used for kernel momentum nodes.
    pub fn k_nodes(&self) -> Vec<f64> {
        self.kappa.iter().rev().copied().collect()
    }

    /// Uniform radial grid on `[0, r_max]` with this mode set as momentum
    /// nodes.
    pub fn grid(&self, nr: usize, r_max: f64) -> Result<RadialGrid> {
        RadialGrid::uniform(nr, r_max, self.k_nodes())
    }

    /// Momentum node of every mode on `grid`.
    pub fn node_map(&self, grid: &RadialGrid) -> Result<Vec<usize>> {
        self.kappa
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                grid.k_index(k)
                    .ok_or_else(|| SrgError::Domain(format!("kernel grid has no node at kappa_{i} = {k:e}")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_is_the_whole_ball() {
        let m = ModeSet::new(1, 0.5, 1.0).unwrap();
        assert!((m.weights()[0] - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn two_modes() {
        let m = ModeSet::new(2, 0.5, 1.0).unwrap();
        assert_eq!(m.kappa(), &[1.0, 0.5]);
        assert!((m.shell(0).0 - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.shell(1).0, 0.0);
        assert!((m.total_weight() - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ModeSet::new(0, 0.5, 1.0).is_err());
        assert!(ModeSet::new(4, 1.0, 1.0).is_err());
        assert!(matches!(ModeSet::new(2000, 0.5, 1.0), Err(SrgError::Domain(_))));
    }
}
