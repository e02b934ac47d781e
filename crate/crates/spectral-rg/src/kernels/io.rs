//! Plain-text kernel chain format.
//!
//! ```text
//! kernel-chain 1
//! m_max 2
//! mu 5.00000000000000000e-1
//! s 1
//! xi 2.50000000000000000e-1
//! r_nodes 33
//! 0.0e0 ...
//! k_nodes 16
//! ...
//! kernel 0 0 33
//! <re> <im>        one line per value, row-major
//! ...
//! end
//! ```

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex;

use super::{BanachParams, Kernel, KernelChain, RadialGrid};
use crate::error::{Result, SrgError};
use crate::scalar::Real;

const MAGIC: &str = "kernel-chain";

fn f<T: Real>(x: T) -> String {
    format!("{:.17e}", x.to_f64().unwrap())
}

pub fn chain_to_string<T: Real>(chain: &KernelChain<T>) -> String {
    let mut s = String::new();
    let p = chain.params();
    let g = chain.grid();
    writeln!(s, "{MAGIC} 1").unwrap();
    writeln!(s, "m_max {}", chain.m_max()).unwrap();
    writeln!(s, "mu {}", f(p.mu)).unwrap();
    writeln!(s, "s {}", p.s).unwrap();
    writeln!(s, "xi {}", f(p.xi)).unwrap();
    for (name, nodes) in [("r_nodes", g.r_nodes()), ("k_nodes", g.k_nodes())] {
        writeln!(s, "{name} {}", nodes.len()).unwrap();
        let line: Vec<String> = nodes.iter().map(|&x| f(x)).collect();
        writeln!(s, "{}", line.join(" ")).unwrap();
    }
    for ((m, n), w) in chain.iter() {
        writeln!(s, "kernel {m} {n} {}", w.values().len()).unwrap();
        for v in w.values() {
            writeln!(s, "{} {}", f(v.re), f(v.im)).unwrap();
        }
    }
    s.push_str("end\n");
    s
}

struct Tokens<'a> {
    it: std::str::SplitWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.it.next().ok_or_else(|| SrgError::Parse("unexpected end of kernel chain".into()))
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let t = self.next()?;
        if t != word {
            return Err(SrgError::Parse(format!("expected `{word}`, found `{t}`")));
        }
        Ok(())
    }

    fn parse<V: std::str::FromStr>(&mut self) -> Result<V> {
        let t = self.next()?;
        t.parse().map_err(|_| SrgError::Parse(format!("bad number `{t}`")))
    }

    fn real<T: Real>(&mut self) -> Result<T> {
        Ok(T::from_f64(self.parse::<f64>()?).unwrap())
    }
}

pub fn chain_from_str<T: Real>(text: &str) -> Result<KernelChain<T>> {
    let mut t = Tokens { it: text.split_whitespace() };
    t.expect(MAGIC)?;
    let version: u32 = t.parse()?;
    if version != 1 {
        return Err(SrgError::Parse(format!("unsupported kernel chain version {version}")));
    }
    t.expect("m_max")?;
    let m_max: usize = t.parse()?;
    t.expect("mu")?;
    let mu = t.real()?;
    t.expect("s")?;
    let s: usize = t.parse()?;
    t.expect("xi")?;
    let xi = t.real()?;
    t.expect("r_nodes")?;
    let nr: usize = t.parse()?;
    let r = (0..nr).map(|_| t.real()).collect::<Result<Vec<T>>>()?;
    t.expect("k_nodes")?;
    let nk: usize = t.parse()?;
    let k = (0..nk).map(|_| t.real()).collect::<Result<Vec<T>>>()?;
    let grid = RadialGrid::new(r, k)?;
    let mut kernels = Vec::new();
    loop {
        match t.next()? {
            "end" => break,
            "kernel" => {
                let m: usize = t.parse()?;
                let n: usize = t.parse()?;
                let len: usize = t.parse()?;
                let mut vals = Vec::with_capacity(len);
                for _ in 0..len {
                    let re = t.real()?;
                    let im = t.real()?;
                    vals.push(Complex::new(re, im));
                }
                kernels.push(Kernel::from_values(m, n, &grid, vals)?);
            }
            other => return Err(SrgError::Parse(format!("unexpected token `{other}`"))),
        }
    }
    let pos = kernels
        .iter()
        .position(|w| w.order() == (0, 0))
        .ok_or_else(|| SrgError::Parse("kernel chain has no (0,0) kernel".into()))?;
    let w00 = kernels.remove(pos);
    let mut chain = KernelChain::new(grid, m_max, BanachParams::new(mu, s, xi)?, w00)?;
    for w in kernels {
        chain.insert(w)?;
    }
    Ok(chain)
}

pub fn write_chain<T: Real>(chain: &KernelChain<T>, path: &Path) -> Result<()> {
    std::fs::write(path, chain_to_string(chain))?;
    Ok(())
}

pub fn read_chain<T: Real>(path: &Path) -> Result<KernelChain<T>> {
    chain_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let grid = RadialGrid::<f64>::uniform(9, 2.0, vec![0.16, 0.4, 1.0]).unwrap();
        let w00 = Kernel::from_fn(0, 0, &grid, |r, _| Complex::new(r.sin(), 1.0 / 3.0));
        let mut c = KernelChain::new(grid.clone(), 2, BanachParams::new(0.5, 1, 0.25).unwrap(), w00).unwrap();
        c.insert(Kernel::from_fn(1, 1, &grid, |r, k| Complex::new(r * k[0] / 7.0, k[1].exp()))).unwrap();
        let back: KernelChain<f64> = chain_from_str(&chain_to_string(&c)).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_truncated_input() {
        let grid = RadialGrid::uniform(3, 2.0, vec![1.0]).unwrap();
        let w00 = Kernel::zeros(0, 0, &grid);
        let c = KernelChain::new(grid, 1, BanachParams::new(0.5, 1, 0.25).unwrap(), w00).unwrap();
        let s = chain_to_string(&c);
        assert!(chain_from_str::<f64>(&s[..s.len() - 5]).is_err());
    }
}
