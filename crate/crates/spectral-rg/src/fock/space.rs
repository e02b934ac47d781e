use std::collections::HashMap;

use num_complex::Complex64 as c64;

use super::ModeSet;
use crate::error::{Result, SrgError};
use crate::linalg::{c, CMatrix, CVector};

pub const DEFAULT_DIM_CAP: usize = 4096;

/// Occupation-number basis with total boson number at most `n_max`,
/// in lexicographic order (the vacuum comes first).
#[derive(Clone, Debug)]
pub struct FockSpace {
    modes: ModeSet,
    n_max: usize,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    energy: Vec<f64>,
    number: Vec<usize>,
    ann: Vec<Option<(usize, f64)>>,
    cre: Vec<Option<(usize, f64)>>,
}

fn enumerate(g: usize, budget: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() == g {
        out.push(prefix.clone());
        return;
    }
    for n in 0..=budget {
        prefix.push(n as u8);
        enumerate(g, budget - n, prefix, out);
        prefix.pop();
    }
}

/// `C(g + n_max, n_max)` without overflow for the sizes we care about.
pub fn fock_dim(g: usize, n_max: usize) -> usize {
    let mut d: u128 = 1;
    for i in 1..=n_max as u128 {
        d = d * (g as u128 + i) / i;
        if d > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    d as usize
}

impl FockSpace {
    pub fn new(modes: ModeSet, n_max: usize) -> Result<Self> {
        Self::with_cap(modes, n_max, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(modes: ModeSet, n_max: usize, cap: usize) -> Result<Self> {
        if n_max > 255 {
            return Err(SrgError::InvalidArgument("n_max above 255".into()));
        }
        let g = modes.len();
        let dim = fock_dim(g, n_max);
        if dim > cap {
            return Err(SrgError::DimensionCap { dim, cap });
        }
        let mut states = Vec::with_capacity(dim);
        enumerate(g, n_max, &mut Vec::with_capacity(g), &mut states);
        let index: HashMap<Vec<u8>, usize> = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let kappa = modes.kappa();
        let energy = states
            .iter()
            .map(|s| s.iter().zip(kappa).map(|(&n, &k)| n as f64 * k).sum())
            .collect();
        let number = states.iter().map(|s| s.iter().map(|&n| n as usize).sum()).collect();
        let mut ann = vec![None; dim * g];
        let mut cre = vec![None; dim * g];
        let mut buf = Vec::with_capacity(g);
        for (b, s) in states.iter().enumerate() {
            let total: usize = s.iter().map(|&n| n as usize).sum();
            for i in 0..g {
                if s[i] > 0 {
                    buf.clear();
                    buf.extend_from_slice(s);
                    buf[i] -= 1;
                    ann[b * g + i] = Some((index[&buf], (s[i] as f64).sqrt()));
                }
                if total < n_max {
                    buf.clear();
                    buf.extend_from_slice(s);
                    buf[i] += 1;
                    cre[b * g + i] = Some((index[&buf], (s[i] as f64 + 1.0).sqrt()));
                }
            }
        }
        Ok(Self { modes, n_max, states, index, energy, number, ann, cre })
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, b: usize) -> &[u8] {
        &self.states[b]
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// `H_f` eigenvalue of basis state `b`.
    pub fn energy(&self, b: usize) -> f64 {
        self.energy[b]
    }

    pub fn energies(&self) -> &[f64] {
        &self.energy
    }

    pub fn number(&self, b: usize) -> usize {
        self.number[b]
    }

    /// `a_i |b> = amp |b'>`, or `None` when mode `i` is empty.
    pub fn annihilate(&self, b: usize, i: usize) -> Option<(usize, f64)> {
        self.ann[b * self.modes.len() + i]
    }

    /// `a_i^* |b> = amp |b'>`, or `None` past the truncation.
    pub fn create(&self, b: usize, i: usize) -> Option<(usize, f64)> {
        self.cre[b * self.modes.len() + i]
    }

    pub fn annihilation_matrix(&self, i: usize) -> CMatrix {
        let mut m = CMatrix::zeros((self.dim(), self.dim()));
        for b in 0..self.dim() {
            if let Some((t, a)) = self.annihilate(b, i) {
                m[[t, b]] = c(a);
            }
        }
        m
    }

    pub fn creation_matrix(&self, i: usize) -> CMatrix {
        let mut m = CMatrix::zeros((self.dim(), self.dim()));
        for b in 0..self.dim() {
            if let Some((t, a)) = self.create(b, i) {
                m[[t, b]] = c(a);
            }
        }
        m
    }

    /// `(a_i, a_i^*)` for every mode.
    pub fn ladder_matrices(&self) -> Vec<(CMatrix, CMatrix)> {
        (0..self.modes.len()).map(|i| (self.annihilation_matrix(i), self.creation_matrix(i))).collect()
    }

    /// `f(H_f)` as a diagonal matrix.
    pub fn function_of_hf(&self, f: impl Fn(f64) -> c64) -> CMatrix {
        let mut m = CMatrix::zeros((self.dim(), self.dim()));
        for (b, &e) in self.energy.iter().enumerate() {
            m[[b, b]] = f(e);
        }
        m
    }

    pub fn hf(&self) -> CMatrix {
        self.function_of_hf(c)
    }

    pub fn vacuum(&self) -> CVector {
        let mut v = CVector::zeros(self.dim());
        v[0] = c(1.0);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(g: usize, n: usize) -> FockSpace {
        FockSpace::new(ModeSet::new(g, 0.5, 1.0).unwrap(), n).unwrap()
    }

    #[test]
    fn dimension_and_order() {
        let f = space(2, 2);
        assert_eq!(f.dim(), 6);
        let order: Vec<&[u8]> = (0..6).map(|b| f.state(b)).collect();
        assert_eq!(order, vec![&[0, 0][..], &[0, 1], &[0, 2], &[1, 0], &[1, 1], &[2, 0]]);
        assert_eq!(space(16, 3).dim(), 969);
        assert_eq!(fock_dim(16, 3), 969);
    }

    #[test]
    fn single_mode_ladder() {
        let f = space(1, 3);
        let a = f.annihilation_matrix(0);
        for n in 1..=3 {
            assert!((a[[n - 1, n]].re - (n as f64).sqrt()).abs() < 1e-15);
        }
        let ad = f.creation_matrix(0);
        assert_eq!(ad, crate::linalg::adjoint(&a));
    }

    #[test]
    fn dimension_cap() {
        let m = ModeSet::new(16, 0.5, 1.0).unwrap();
        assert!(matches!(FockSpace::new(m, 6), Err(SrgError::DimensionCap { .. })));
    }
}
