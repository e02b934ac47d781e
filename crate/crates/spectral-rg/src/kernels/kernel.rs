use num_complex::Complex;

use super::grid::{RStencil, RadialGrid};
use crate::error::{Result, SrgError};
use crate::scalar::Real;

/// Sampled kernel `w_{m,n}(r; k_1..k_m; kt_1..kt_n)`.
///
/// Values are stored row-major: radial node outermost, then the `m`
/// creation slots, then the `n` annihilation slots, each slot running
/// over the momentum nodes of the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<T> {
    m: usize,
    n: usize,
    nr: usize,
    nk: usize,
    values: Vec<Complex<T>>,
}

#[derive(Clone, Copy, Debug)]
enum KStencil<T> {
    Node(usize),
    Lerp(usize, T),
    /// Power-law continuation below the smallest node: exponent variable
    /// and the modulus itself.
    Power(T, T),
}

impl<T: Real> Kernel<T> {
    pub fn zeros(m: usize, n: usize, grid: &RadialGrid<T>) -> Self {
        let nk = grid.nk();
        let len = grid.nr() * nk.pow((m + n) as u32);
        Self { m, n, nr: grid.nr(), nk, values: vec![Complex::new(T::zero(), T::zero()); len] }
    }

    /// Samples `f(r, ks)` on every node; `ks` lists the creation slots first.
    pub fn from_fn<F>(m: usize, n: usize, grid: &RadialGrid<T>, f: F) -> Self
    where
        F: Fn(T, &[T]) -> Complex<T>,
    {
        let mut w = Self::zeros(m, n, grid);
        let slots = m + n;
        let mut idx = vec![0usize; slots];
        let mut ks = vec![T::zero(); slots];
        let row = w.row_len();
        for ir in 0..w.nr {
            let r = grid.r_nodes()[ir];
            for flat in 0..row {
                w.decode(flat, &mut idx);
                for (k, &i) in ks.iter_mut().zip(&idx) {
                    *k = grid.k_nodes()[i];
                }
                w.values[ir * row + flat] = f(r, &ks);
            }
        }
        w
    }

    pub fn from_values(m: usize, n: usize, grid: &RadialGrid<T>, values: Vec<Complex<T>>) -> Result<Self> {
        let w = Self::zeros(m, n, grid);
        if values.len() != w.values.len() {
            return Err(SrgError::Shape(format!(
                "kernel ({m},{n}) needs {} values, got {}",
                w.values.len(),
                values.len()
            )));
        }
        Ok(Self { values, ..w })
    }

    pub fn order(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    pub fn slots(&self) -> usize {
        self.m + self.n
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn nk(&self) -> usize {
        self.nk
    }

    /// Number of values per radial node.
    pub fn row_len(&self) -> usize {
        self.nk.pow(self.slots() as u32)
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    pub fn row(&self, ir: usize) -> &[Complex<T>] {
        let len = self.row_len();
        &self.values[ir * len..(ir + 1) * len]
    }

    pub fn flat_index(&self, slots: &[usize]) -> usize {
        slots.iter().fold(0, |acc, &i| acc * self.nk + i)
    }

    pub fn decode(&self, mut flat: usize, out: &mut [usize]) {
        for d in out.iter_mut().rev() {
            *d = flat % self.nk;
            flat /= self.nk;
        }
    }

    pub fn get(&self, ir: usize, slots: &[usize]) -> Complex<T> {
        self.values[ir * self.row_len() + self.flat_index(slots)]
    }

    pub fn set(&mut self, ir: usize, slots: &[usize], v: Complex<T>) {
        let i = ir * self.row_len() + self.flat_index(slots);
        self.values[i] = v;
    }

    pub fn fits(&self, grid: &RadialGrid<T>) -> bool {
        self.nr == grid.nr() && self.nk == grid.nk()
    }

    /// Value at radial argument `r` with every slot on a momentum node.
    pub fn eval_nodes(&self, grid: &RadialGrid<T>, r: T, slots: &[usize]) -> Complex<T> {
        let RStencil { i, t } = grid.stencil(r);
        let flat = self.flat_index(slots);
        let len = self.row_len();
        let a = self.values[i * len + flat];
        let b = self.values[(i + 1) * len + flat];
        a + (b - a) * t
    }

    /// Value at arbitrary arguments.
    ///
    /// Radial direction: piecewise linear, extended linearly past the last
    /// node. Momentum slots: piecewise linear between nodes, and a power
    /// law through the two smallest nodes below the grid, which reproduces
    /// `c |k|^mu` exactly.
    pub fn eval(&self, grid: &RadialGrid<T>, r: T, ks: &[T]) -> Complex<T> {
        assert_eq!(ks.len(), self.slots(), "kernel slot count");
        let st: Vec<KStencil<T>> = ks.iter().map(|&k| k_stencil(grid, k)).collect();
        let RStencil { i, t } = grid.stencil(r);
        let a = self.eval_row(grid, i, 0, 0, &st);
        let b = self.eval_row(grid, i + 1, 0, 0, &st);
        a + (b - a) * t
    }

    fn eval_row(&self, grid: &RadialGrid<T>, ir: usize, slot: usize, flat: usize, st: &[KStencil<T>]) -> Complex<T> {
        if slot == st.len() {
            return self.values[ir * self.row_len() + flat];
        }
        let next = |i: usize| self.eval_row(grid, ir, slot + 1, flat * self.nk + i, st);
        match st[slot] {
            KStencil::Node(i) => next(i),
            KStencil::Lerp(i, t) => {
                let a = next(i);
                let b = next(i + 1);
                a + (b - a) * t
            }
            KStencil::Power(x, k) => {
                let a = next(0);
                let b = next(1);
                let zero = Complex::new(T::zero(), T::zero());
                if a == zero {
                    zero
                } else if b == zero {
                    // No power law through a zero; fall back to a line.
                    let nodes = grid.k_nodes();
                    a + (b - a) * ((k - nodes[0]) / (nodes[1] - nodes[0]))
                } else {
                    a * (a / b).powf(x)
                }
            }
        }
    }

    /// Averages over permutations of the creation slots and of the
    /// annihilation slots.
    pub fn symmetrize(&mut self) {
        if self.m < 2 && self.n < 2 {
            return;
        }
        let pc = permutations(self.m);
        let pa = permutations(self.n);
        let scale = T::from_usize(pc.len() * pa.len()).unwrap().recip();
        let len = self.row_len();
        let slots = self.slots();
        let mut idx = vec![0usize; slots];
        let mut perm = vec![0usize; slots];
        let mut out = self.values.clone();
        for ir in 0..self.nr {
            for flat in 0..len {
                self.decode(flat, &mut idx);
                let mut acc = Complex::new(T::zero(), T::zero());
                for p in &pc {
                    for q in &pa {
                        for j in 0..self.m {
                            perm[j] = idx[p[j]];
                        }
                        for j in 0..self.n {
                            perm[self.m + j] = idx[self.m + q[j]];
                        }
                        acc = acc + self.values[ir * len + self.flat_index(&perm)];
                    }
                }
                out[ir * len + flat] = acc * scale;
            }
        }
        self.values = out;
    }

    /// Largest deviation from permutation symmetry.
    pub fn asymmetry(&self) -> T {
        let mut s = self.clone();
        s.symmetrize();
        self.max_abs_diff(&s)
    }

    /// Kernel of the adjoint monomial: `(m, n)` becomes `(n, m)` with
    /// slots swapped and values conjugated.
    pub fn adjoint(&self) -> Self {
        let mut out = Self { m: self.n, n: self.m, ..self.clone() };
        let len = self.row_len();
        let mut idx = vec![0usize; self.slots()];
        let mut sw = vec![0usize; self.slots()];
        for ir in 0..self.nr {
            for flat in 0..len {
                self.decode(flat, &mut idx);
                sw[..self.n].copy_from_slice(&idx[self.m..]);
                sw[self.n..].copy_from_slice(&idx[..self.m]);
                let j = out.flat_index(&sw);
                out.values[ir * len + j] = self.values[ir * len + flat].conj();
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm()))
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, a| acc.max(a.norm()))
    }

    /// Radial derivative of the given order by repeated second-order finite
    /// differences (central inside, one-sided at both ends).
    pub fn r_derivative(&self, grid: &RadialGrid<T>, order: usize) -> Self {
        let mut cur = self.clone();
        for _ in 0..order {
            cur = cur.first_r_derivative(grid);
        }
        cur
    }

    fn first_r_derivative(&self, grid: &RadialGrid<T>) -> Self {
        let r = grid.r_nodes();
        let nr = self.nr;
        let len = self.row_len();
        let mut out = self.clone();
        for ir in 0..nr {
            let (idx, c) = fd_weights(r, ir);
            for flat in 0..len {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (j, w) in idx.iter().zip(c.iter()) {
                    acc = acc + self.values[j * len + flat] * *w;
                }
                out.values[ir * len + flat] = acc;
            }
        }
        out
    }

    /// `max_{r in [0,1], nodes} (min_j k_j)^{-mu} |w|` for `m + n >= 1`, or
    /// `sup |w|` over every node for `m = n = 0`.
    pub fn mu_sup(&self, grid: &RadialGrid<T>, mu: T) -> T {
        if self.slots() == 0 {
            return self.max_abs();
        }
        let len = self.row_len();
        let weights = self.mu_weights(grid, mu);
        let mut best = T::zero();
        for ir in 0..grid.nr_unit().min(self.nr) {
            for (v, w) in self.values[ir * len..(ir + 1) * len].iter().zip(&weights) {
                best = best.max(v.norm() * *w);
            }
        }
        best
    }

    fn mu_weights(&self, grid: &RadialGrid<T>, mu: T) -> Vec<T> {
        let mut idx = vec![0usize; self.slots()];
        (0..self.row_len())
            .map(|flat| {
                self.decode(flat, &mut idx);
                let kmin = idx.iter().map(|&i| grid.k_nodes()[i]).fold(T::infinity(), T::min);
                kmin.powf(-mu)
            })
            .collect()
    }

    /// `||w||_{mu,s}`: sum over derivative orders `0..=s` of the weighted sup
    /// on `r in [0,1]`. For `m = n = 0` this is `|w(0)| + sum_{1<=d<=s} sup |w^(d)|`
    /// taken over all radial nodes.
    pub fn norm_mu_s(&self, grid: &RadialGrid<T>, mu: T, s: usize) -> T {
        if self.slots() == 0 {
            let mut acc = self.values[0].norm();
            for d in 1..=s {
                acc = acc + self.r_derivative(grid, d).max_abs();
            }
            return acc;
        }
        (0..=s).fold(T::zero(), |acc, d| acc + self.r_derivative(grid, d).mu_sup(grid, mu))
    }

    /// `s_rho(w)[r, k] = rho^{m+n-1} w(rho r, rho k)`.
    pub fn scale(&self, grid: &RadialGrid<T>, rho: T) -> Self {
        let p = self.slots() as i32 - 1;
        let factor = rho.powi(p);
        Self::from_fn(self.m, self.n, grid, |r, ks| {
            let scaled: Vec<T> = ks.iter().map(|&k| rho * k).collect();
            self.eval(grid, rho * r, &scaled) * factor
        })
    }

    /// Overwrites every entry with a slot on the smallest momentum node by
    /// power-law continuation from the next two nodes along that slot.
    pub fn continue_lowest_k(&mut self, grid: &RadialGrid<T>) {
        if self.slots() == 0 || self.nk < 3 {
            return;
        }
        let k = grid.k_nodes();
        let x = (k[0] / k[1]).ln() / (k[1] / k[2]).ln();
        let len = self.row_len();
        let mut idx = vec![0usize; self.slots()];
        for slot in 0..self.slots() {
            for ir in 0..self.nr {
                for flat in 0..len {
                    self.decode(flat, &mut idx);
                    if idx[slot] != 0 {
                        continue;
                    }
                    idx[slot] = 1;
                    let a = self.values[ir * len + self.flat_index(&idx)];
                    idx[slot] = 2;
                    let b = self.values[ir * len + self.flat_index(&idx)];
                    let zero = Complex::new(T::zero(), T::zero());
                    let v = if a == zero {
                        zero
                    } else if b == zero {
                        a + (a - b) * ((k[1] - k[0]) / (k[2] - k[1]))
                    } else {
                        a * (a / b).powf(x)
                    };
                    self.values[ir * len + flat] = v;
                }
            }
        }
    }

    /// Replaces the values on radial nodes above 1 by the straight line
    /// through the last two nodes inside `[0, 1]`.
    pub fn continue_beyond_unit(&mut self, grid: &RadialGrid<T>) {
        let nu = grid.nr_unit();
        if nu < 2 || nu >= self.nr {
            return;
        }
        let r = grid.r_nodes();
        let len = self.row_len();
        let (ra, rb) = (r[nu - 2], r[nu - 1]);
        for ir in nu..self.nr {
            let t = (r[ir] - ra) / (rb - ra);
            for flat in 0..len {
                let a = self.values[(nu - 2) * len + flat];
                let b = self.values[(nu - 1) * len + flat];
                self.values[ir * len + flat] = a + (b - a) * t;
            }
        }
    }

    pub fn cast<U: Real>(&self) -> Kernel<U> {
        Kernel {
            m: self.m,
            n: self.n,
            nr: self.nr,
            nk: self.nk,
            values: self
                .values
                .iter()
                .map(|v| Complex::new(U::from(v.re).unwrap(), U::from(v.im).unwrap()))
                .collect(),
        }
    }
}

fn k_stencil<T: Real>(grid: &RadialGrid<T>, k: T) -> KStencil<T> {
    let nodes = grid.k_nodes();
    if let Some(i) = grid.k_index(k) {
        return KStencil::Node(i);
    }
    let n = nodes.len();
    if n == 1 {
        return KStencil::Node(0);
    }
    if k < nodes[0] {
        return KStencil::Power((k / nodes[0]).ln() / (nodes[0] / nodes[1]).ln(), k);
    }
    let i = if k >= nodes[n - 1] { n - 2 } else { nodes.partition_point(|&x| x <= k) - 1 };
    KStencil::Lerp(i, (k - nodes[i]) / (nodes[i + 1] - nodes[i]))
}

/// Three-point first-derivative weights at node `i`.
fn fd_weights<T: Real>(r: &[T], i: usize) -> ([usize; 3], [T; 3]) {
    let n = r.len();
    let two = T::lit(2.0);
    if i == 0 {
        let (h1, h2) = (r[1] - r[0], r[2] - r[1]);
        (
            [0, 1, 2],
            [-(two * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2))],
        )
    } else if i == n - 1 {
        let (h1, h2) = (r[n - 1] - r[n - 2], r[n - 2] - r[n - 3]);
        (
            [n - 1, n - 2, n - 3],
            [(two * h1 + h2) / (h1 * (h1 + h2)), -(h1 + h2) / (h1 * h2), h1 / (h2 * (h1 + h2))],
        )
    } else {
        let (h1, h2) = (r[i] - r[i - 1], r[i + 1] - r[i]);
        (
            [i - 1, i, i + 1],
            [-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))],
        )
    }
}

/// All permutations of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> RadialGrid<f64> {
        let k: Vec<f64> = (0..6).rev().map(|i| 0.5f64.powi(i)).collect();
        RadialGrid::uniform(17, 2.0, k).unwrap()
    }

    #[test]
    fn monomial_power_law_continuation_is_exact() {
        let g = grid();
        let w = Kernel::from_fn(1, 0, &g, |_, k| Complex::new(k[0].powf(0.5), 0.0));
        let k = 0.5f64.powi(7);
        assert!((w.eval(&g, 0.3, &[k]).re - k.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn linear_functions_interpolate_exactly() {
        let g = grid();
        let w = Kernel::from_fn(1, 1, &g, |r, k| Complex::new(2.0 * r + k[0] - 3.0 * k[1], r));
        let v = w.eval(&g, 0.77, &[0.6, 0.3]);
        assert!((v.re - (1.54 + 0.6 - 0.9)).abs() < 1e-14);
        assert!((v.im - 0.77).abs() < 1e-15);
        // Past the last radial node.
        let v = w.eval_nodes(&g, 2.5, &[5, 5]);
        assert!((v.re - (5.0 + 1.0 - 3.0)).abs() < 1e-13);
    }

    #[test]
    fn symmetrize_averages_slots() {
        let g = grid();
        let mut w = Kernel::from_fn(2, 0, &g, |_, k| Complex::new(k[0], 0.0));
        w.symmetrize();
        let v = w.get(0, &[1, 4]);
        let expect = 0.5 * (g.k_nodes()[1] + g.k_nodes()[4]);
        assert!((v.re - expect).abs() < 1e-15);
        assert!(w.asymmetry() < 1e-15);
    }

    #[test]
    fn adjoint_swaps_and_conjugates() {
        let g = grid();
        let w = Kernel::from_fn(2, 1, &g, |r, k| Complex::new(k[0] + 2.0 * k[1], r * k[2]));
        let a = w.adjoint();
        assert_eq!(a.order(), (1, 2));
        let v = a.get(3, &[2, 0, 5]);
        assert_eq!(v, w.get(3, &[0, 5, 2]).conj());
        assert_eq!(a.adjoint(), w);
    }

    #[test]
    fn norms_of_simple_kernels() {
        let g = grid();
        let w00 = Kernel::from_fn(0, 0, &g, |r, _| Complex::new(r, 0.0));
        assert!((w00.norm_mu_s(&g, 0.5, 1) - 1.0).abs() < 1e-13);
        let w10 = Kernel::from_fn(1, 0, &g, |_, k| Complex::new(0.01 * k[0].sqrt(), 0.0));
        assert!((w10.norm_mu_s(&g, 0.5, 1) - 0.01).abs() < 1e-15);
        let p = permutations(3);
        assert_eq!(p.len(), 6);
    }
}
