use crate::error::{Result, SrgError};
use crate::scalar::Real;

/// Sample points for kernels: radial nodes for the `H_f` argument and
/// momentum-modulus nodes for every boson slot.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid<T> {
    r: Vec<T>,
    k: Vec<T>,
}

/// Linear stencil in the radial direction: `(1 - t) row[i] + t row[i + 1]`.
/// `t` leaves `[0, 1]` when extrapolating past the ends.
#[derive(Clone, Copy, Debug)]
pub struct RStencil<T> {
    pub i: usize,
    pub t: T,
}

impl<T: Real> RadialGrid<T> {
    pub fn new(r_nodes: Vec<T>, k_nodes: Vec<T>) -> Result<Self> {
        if r_nodes.len() < 3 {
            return Err(SrgError::InvalidArgument("need at least 3 radial nodes".into()));
        }
        if r_nodes[0] != T::zero() {
            return Err(SrgError::InvalidArgument("first radial node must be 0".into()));
        }
        if k_nodes.is_empty() {
            return Err(SrgError::InvalidArgument("need at least one momentum node".into()));
        }
        if r_nodes.windows(2).any(|w| w[1] <= w[0]) || k_nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SrgError::InvalidArgument("grid nodes must be strictly increasing".into()));
        }
        if k_nodes[0] <= T::zero() {
            return Err(SrgError::InvalidArgument("momentum nodes must be positive".into()));
        }
        Ok(Self { r: r_nodes, k: k_nodes })
    }

    /// `nr` equispaced radial nodes on `[0, r_max]`.
    pub fn uniform(nr: usize, r_max: T, k_nodes: Vec<T>) -> Result<Self> {
        if nr < 3 {
            return Err(SrgError::InvalidArgument("need at least 3 radial nodes".into()));
        }
        let h = r_max / T::from_usize(nr - 1).unwrap();
        let r = (0..nr).map(|i| T::from_usize(i).unwrap() * h).collect();
        Self::new(r, k_nodes)
    }

    pub fn r_nodes(&self) -> &[T] {
        &self.r
    }

    pub fn k_nodes(&self) -> &[T] {
        &self.k
    }

    pub fn nr(&self) -> usize {
        self.r.len()
    }

    pub fn nk(&self) -> usize {
        self.k.len()
    }

    pub fn r_max(&self) -> T {
        self.r[self.r.len() - 1]
    }

    /// Number of radial nodes inside `[0, 1]`.
    pub fn nr_unit(&self) -> usize {
        let lim = T::one() + T::lit(1e-12);
        self.r.iter().take_while(|&&r| r <= lim).count()
    }

    pub fn stencil(&self, r: T) -> RStencil<T> {
        let n = self.r.len();
        let i = if r <= self.r[0] {
            0
        } else if r >= self.r[n - 1] {
            n - 2
        } else {
            // Last node not above r.
            self.r.partition_point(|&x| x <= r).saturating_sub(1).min(n - 2)
        };
        let t = (r - self.r[i]) / (self.r[i + 1] - self.r[i]);
        RStencil { i, t }
    }

    /// Index of the momentum node equal to `k` (relative tolerance 1e-12).
    pub fn k_index(&self, k: T) -> Option<usize> {
        let tol = T::lit(1e-12);
        self.k.iter().position(|&x| (x - k).abs() <= tol * x.abs().max(k.abs()))
    }

    pub fn cast<U: Real>(&self) -> RadialGrid<U> {
        let conv = |v: &[T]| v.iter().map(|&x| U::from(x).unwrap()).collect();
        RadialGrid { r: conv(&self.r), k: conv(&self.k) }
    }
}
