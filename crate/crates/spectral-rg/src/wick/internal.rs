use std::collections::HashMap;

/// Fock space of the contracted ("internal") bosons of a Wick expansion:
/// a subset of the modes, occupation bounded by `n_int`.
pub(crate) struct InternalSpace {
    /// Original mode index of every internal mode.
    pub modes: Vec<usize>,
    pub sqrt_v: Vec<f64>,
    pub energy: Vec<f64>,
    pub number: Vec<usize>,
    ann: Vec<(u32, f64)>,
    cre: Vec<(u32, f64)>,
}

const NONE: u32 = u32::MAX;

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

impl InternalSpace {
    pub fn new(modes: Vec<usize>, kappa: &[f64], weight: &[f64], n_int: usize) -> Self {
        let g = modes.len();
        let mut states = Vec::new();
        enumerate(g, n_int, &mut Vec::new(), &mut states);
        let index: HashMap<Vec<u8>, usize> = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let energy = states
            .iter()
            .map(|s| s.iter().zip(&modes).map(|(&n, &m)| n as f64 * kappa[m]).sum())
            .collect();
        let number: Vec<usize> = states.iter().map(|s| s.iter().map(|&n| n as usize).sum()).collect();
        let dim = states.len();
        let mut ann = vec![(NONE, 0.0); dim * g];
        let mut cre = vec![(NONE, 0.0); dim * g];
        let mut buf = Vec::new();
        for (b, s) in states.iter().enumerate() {
            for i in 0..g {
                if s[i] > 0 {
                    buf.clone_from(s);
                    buf[i] -= 1;
                    ann[b * g + i] = (index[&buf] as u32, (s[i] as f64).sqrt());
                }
                if number[b] < n_int {
                    buf.clone_from(s);
                    buf[i] += 1;
                    cre[b * g + i] = (index[&buf] as u32, (s[i] as f64 + 1.0).sqrt());
                }
            }
        }
        let sqrt_v = modes.iter().map(|&m| weight[m].sqrt()).collect();
        Self { modes, sqrt_v, energy, number, ann, cre }
    }

    pub fn dim(&self) -> usize {
        self.energy.len()
    }

    #[inline]
    pub fn annihilate(&self, b: usize, i: usize) -> Option<(usize, f64)> {
        let (t, a) = self.ann[b * self.modes.len() + i];
        (t != NONE).then_some((t as usize, a))
    }

    #[inline]
    pub fn create(&self, b: usize, i: usize) -> Option<(usize, f64)> {
        let (t, a) = self.cre[b * self.modes.len() + i];
        (t != NONE).then_some((t as usize, a))
    }

    /// Visits every ordered tuple of `depth` ladder steps from `b`, passing
    /// the target state, the product of ladder amplitudes and `sqrt(v)`
    /// weights, and the internal mode indices.
    pub fn walk<F: FnMut(usize, f64, &[usize])>(&self, b: usize, depth: usize, create: bool, f: &mut F) {
        let mut tuple = [0usize; 8];
        self.walk_rec(b, 1.0, 0, depth, create, &mut tuple, f);
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_rec<F: FnMut(usize, f64, &[usize])>(
        &self,
        b: usize,
        amp: f64,
        level: usize,
        depth: usize,
        create: bool,
        tuple: &mut [usize; 8],
        f: &mut F,
    ) {
        if level == depth {
            f(b, amp, &tuple[..depth]);
            return;
        }
        for i in 0..self.modes.len() {
            let step = if create { self.create(b, i) } else { self.annihilate(b, i) };
            if let Some((t, a)) = step {
                tuple[level] = i;
                self.walk_rec(t, amp * a * self.sqrt_v[i], level + 1, depth, create, tuple, f);
            }
        }
    }

    /// Tabulates [`walk`](Self::walk) for every state. Each path carries
    /// its target, amplitude and the row-major index of its momentum nodes
    /// (first operator most significant) in base `nk`.
    pub fn paths(&self, depth: usize, create: bool, node: &[usize], nk: usize) -> PathTable {
        let mut start = Vec::with_capacity(self.dim() + 1);
        let mut entries = Vec::new();
        for b in 0..self.dim() {
            start.push(entries.len());
            self.walk(b, depth, create, &mut |t, amp, tuple| {
                let key = tuple.iter().fold(0usize, |acc, &i| acc * nk + node[self.modes[i]]);
                entries.push(Path { target: t as u32, key: key as u32, amp });
            });
        }
        start.push(entries.len());
        PathTable { start, entries }
    }
}

#[derive(Clone, Copy)]
pub(crate) struct Path {
    pub target: u32,
    pub key: u32,
    pub amp: f64,
}

pub(crate) struct PathTable {
    start: Vec<usize>,
    entries: Vec<Path>,
}

impl PathTable {
    #[inline]
    pub fn from(&self, b: usize) -> &[Path] {
        &self.entries[self.start[b]..self.start[b + 1]]
    }
}

/// Sparse-support state vector over an [`InternalSpace`].
pub(crate) struct StateVec {
    pub v: Vec<num_complex::Complex64>,
    pub support: Vec<usize>,
    mark: Vec<bool>,
}

impl StateVec {
    pub fn new(dim: usize) -> Self {
        Self { v: vec![Default::default(); dim], support: Vec::new(), mark: vec![false; dim] }
    }

    pub fn clear(&mut self) {
        for &b in &self.support {
            self.v[b] = Default::default();
            self.mark[b] = false;
        }
        self.support.clear();
    }

    #[inline]
    pub fn add(&mut self, b: usize, z: num_complex::Complex64) {
        if !self.mark[b] {
            self.mark[b] = true;
            self.support.push(b);
        }
        self.v[b] += z;
    }

    pub fn set_vacuum(&mut self, z: num_complex::Complex64) {
        self.clear();
        self.add(0, z);
    }
}
