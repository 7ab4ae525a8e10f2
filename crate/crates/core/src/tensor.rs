//! Dense tensors on R^n: full symmetrization and trace, block-pair
//! symmetric bilinear forms on symmetric tensors, and algebraic Weyl tensors.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    pub n: usize,
    pub order: usize,
    /// Row-major, first index slowest.
    pub data: Vec<f64>,
}

fn ipow(n: usize, e: usize) -> Option<usize> {
    n.checked_pow(e as u32)
}

impl SymTensor {
    pub fn new(n: usize, order: usize, data: Vec<f64>) -> Result<Self> {
        let len = ipow(n, order).ok_or_else(|| Error::Range("tensor too large".into()))?;
        if n == 0 {
            return Err(Error::Range("dimension must be positive".into()));
        }
        if data.len() != len {
            return Err(Error::Parse(format!("expected {len} entries for n={n}, order={order}, got {}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite tensor entry".into()));
        }
        Ok(SymTensor { n, order, data })
    }

    pub fn zeros(n: usize, order: usize) -> Self {
        SymTensor { n, order, data: vec![0.0; n.pow(order as u32)] }
    }

    /// Product of Kronecker deltas d_{i1 i2} d_{i3 i4} ...
    pub fn delta_power(n: usize, p: usize) -> Self {
        let mut t = SymTensor::zeros(n, 2 * p);
        for (off, idx) in t.indices().enumerate() {
            if (0..p).all(|j| idx[2 * j] == idx[2 * j + 1]) {
                t.data[off] = 1.0;
            }
        }
        t
    }

    /// e (x) e (x) ... for a vector e.
    pub fn outer_power(e: &[f64], order: usize) -> Self {
        let n = e.len();
        let mut t = SymTensor::zeros(n, order);
        for (off, idx) in t.indices().enumerate() {
            t.data[off] = idx.iter().map(|&i| e[i]).product();
        }
        t
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |o, &i| o * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn indices(&self) -> Indices {
        Indices { n: self.n, cur: vec![0; self.order], done: self.n == 0 && self.order > 0 }
    }

    /// (sigma . A)_{l1..lm} = A_{l_sigma(1) .. l_sigma(m)}.
    pub fn permute(&self, sigma: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.order];
        if sigma.len() != self.order || sigma.iter().any(|&s| s >= self.order || std::mem::replace(&mut seen[s], true)) {
            return Err(Error::Domain("not a permutation of the tensor slots".into()));
        }
        let mut out = SymTensor::zeros(self.n, self.order);
        let mut src = vec![0; self.order];
        for (off, idx) in self.indices().enumerate() {
            for (j, &s) in sigma.iter().enumerate() {
                src[j] = idx[s];
            }
            out.data[off] = self.get(&src);
        }
        Ok(out)
    }

    /// Average over all slot permutations. Each entry becomes the mean over
    /// the index tuples sharing its sorted multiset.
    pub fn symmetrize(&self) -> Self {
        let mut sums: HashMap<Vec<usize>, (f64, usize)> = HashMap::new();
        for (off, mut idx) in self.indices().enumerate() {
            idx.sort_unstable();
            let e = sums.entry(idx).or_insert((0.0, 0));
            e.0 += self.data[off];
            e.1 += 1;
        }
        let mut out = SymTensor::zeros(self.n, self.order);
        for (off, mut idx) in self.indices().enumerate() {
            idx.sort_unstable();
            let (s, c) = sums[&idx];
            out.data[off] = s / c as f64;
        }
        out
    }

    /// Contraction of the symmetrization with order/2 Kronecker deltas.
    pub fn symmetrize_and_trace(&self) -> Result<f64> {
        if self.order % 2 == 1 {
            return Err(Error::Domain(format!("trace of odd order {} tensor", self.order)));
        }
        Ok(self.symmetrize().delta_contraction())
    }

    /// Sum over i1, .., ip of A_{i1 i1 i2 i2 ...} without symmetrizing.
    pub fn delta_contraction(&self) -> f64 {
        let p = self.order / 2;
        let mut idx = vec![0; self.order];
        let mut acc = 0.0;
        for half in (Indices { n: self.n, cur: vec![0; p], done: false }) {
            for j in 0..p {
                idx[2 * j] = half[j];
                idx[2 * j + 1] = half[j];
            }
            acc += self.get(&idx);
        }
        acc
    }

    pub fn add(&self, o: &SymTensor) -> Self {
        SymTensor { n: self.n, order: self.order, data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        SymTensor { n: self.n, order: self.order, data: self.data.iter().map(|a| a * s).collect() }
    }

    /// Swap the first and second half of the slots.
    pub fn block_swap(&self) -> Self {
        let p = self.order / 2;
        let sigma: Vec<usize> = (p..2 * p).chain(0..p).collect();
        self.permute(&sigma).expect("valid permutation")
    }

    pub fn block_symmetry_defect(&self) -> f64 {
        let s = self.block_swap();
        self.data.iter().zip(&s.data).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Random tensor with A(T, S) = A(S, T), standard normal entries.
    pub fn random_block_symmetric<R: Rng>(n: usize, p: usize, rng: &mut R) -> Self {
        let mut t = SymTensor::zeros(n, 2 * p);
        for v in &mut t.data {
            *v = rng.sample(StandardNormal);
        }
        t.add(&t.block_swap()).scale(0.5)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Text form: `n N`, `order M`, then the entries in row-major order.
    pub fn to_text(&self) -> String {
        let mut s = format!("n {}\norder {}\n", self.n, self.order);
        for chunk in self.data.chunks(self.n.max(1)) {
            let row: Vec<String> = chunk.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut n = None;
        let mut order = None;
        let mut data = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap_or("");
            match head {
                "n" | "order" => {
                    let v: usize = parts
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::Parse(format!("line {}: bad {head} value", ln + 1)))?;
                    if parts.next().is_some() {
                        return Err(Error::Parse(format!("line {}: trailing tokens", ln + 1)));
                    }
                    let slot = if head == "n" { &mut n } else { &mut order };
                    if slot.replace(v).is_some() {
                        return Err(Error::Parse(format!("line {}: duplicate {head}", ln + 1)));
                    }
                }
                _ => {
                    if n.is_none() || order.is_none() {
                        return Err(Error::Parse(format!("line {}: entries before header", ln + 1)));
                    }
                    for tok in line.split_whitespace() {
                        let v: f64 = tok.parse().map_err(|_| Error::Parse(format!("line {}: bad number {tok:?}", ln + 1)))?;
                        data.push(v);
                    }
                }
            }
        }
        let n = n.ok_or_else(|| Error::Parse("missing n".into()))?;
        let order = order.ok_or_else(|| Error::Parse("missing order".into()))?;
        if n > 64 || order > 12 || ipow(n, order).map_or(true, |l| l > 1 << 24) {
            return Err(Error::Range(format!("tensor n={n}, order={order} is too large")));
        }
        SymTensor::new(n, order, data)
    }
}

pub struct Indices {
    n: usize,
    cur: Vec<usize>,
    done: bool,
}

impl Iterator for Indices {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let mut j = self.cur.len();
        loop {
            if j == 0 {
                self.done = true;
                break;
            }
            j -= 1;
            self.cur[j] += 1;
            if self.cur[j] < self.n {
                break;
            }
            self.cur[j] = 0;
        }
        Some(out)
    }
}

/// 4-tensor with the algebraic symmetries of a Weyl tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylTensor(pub SymTensor);

impl WeylTensor {
    /// Projects an arbitrary 4-tensor onto the Weyl class: antisymmetry in
    /// each pair, pair exchange, first Bianchi, then removal of all traces.
    pub fn project(t: &SymTensor) -> Result<WeylTensor> {
        // the Ricci part removed in one pass can dwarf the Weyl part; a second
        // pass takes the residual traces down to the roundoff of W itself
        let w = Self::project_once(t)?;
        Self::project_once(&w.0)
    }

    fn project_once(t: &SymTensor) -> Result<WeylTensor> {
        if t.order != 4 || t.n < 4 {
            return Err(Error::Domain(format!("Weyl tensors need order 4 and n >= 4 (got order {}, n {})", t.order, t.n)));
        }
        let n = t.n;
        let g = |i: usize, j: usize, k: usize, l: usize| t.get(&[i, j, k, l]);
        let mut r = SymTensor::zeros(n, 4);
        for idx in r.indices() {
            let [i, j, k, l] = [idx[0], idx[1], idx[2], idx[3]];
            let a = |i, j, k, l| (g(i, j, k, l) - g(j, i, k, l) - g(i, j, l, k) + g(j, i, l, k)) / 4.0;
            let off = r.offset(&idx);
            r.data[off] = (a(i, j, k, l) + a(k, l, i, j)) / 2.0;
        }
        let mut b = SymTensor::zeros(n, 4);
        for idx in b.indices() {
            let [i, j, k, l] = [idx[0], idx[1], idx[2], idx[3]];
            let off = b.offset(&idx);
            b.data[off] = r.get(&idx) - (r.get(&[i, j, k, l]) + r.get(&[i, k, l, j]) + r.get(&[i, l, j, k])) / 3.0;
        }
        // Ric_{jl} = R_{ijil}
        let mut ric = vec![0.0; n * n];
        for j in 0..n {
            for l in 0..n {
                ric[j * n + l] = (0..n).map(|i| b.get(&[i, j, i, l])).sum();
            }
        }
        let scal: f64 = (0..n).map(|i| ric[i * n + i]).sum();
        let nf = n as f64;
        let h = |i: usize, j: usize| (ric[i * n + j] - if i == j { scal / (2.0 * (nf - 1.0)) } else { 0.0 }) / (nf - 2.0);
        let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let mut w = SymTensor::zeros(n, 4);
        for idx in w.indices() {
            let [i, j, k, l] = [idx[0], idx[1], idx[2], idx[3]];
            let kn = h(i, k) * d(j, l) + h(j, l) * d(i, k) - h(i, l) * d(j, k) - h(j, k) * d(i, l);
            let off = w.offset(&idx);
            w.data[off] = b.get(&idx) - kn;
        }
        Ok(WeylTensor(w))
    }

    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Result<WeylTensor> {
        let mut t = SymTensor::zeros(n, 4);
        for v in &mut t.data {
            *v = rng.sample(StandardNormal);
        }
        WeylTensor::project(&t)
    }

    /// Uniform direction in the Weyl class: `random` scaled to unit Frobenius norm.
    pub fn random_unit<R: Rng>(n: usize, rng: &mut R) -> Result<WeylTensor> {
        let mut w = Self::random(n, rng)?;
        let norm = w.0.data.iter().map(|v| v * v).sum::<f64>().sqrt();
        w.0.data.iter_mut().for_each(|v| *v /= norm);
        Ok(w)
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0.get(&[i, j, k, l])
    }

    /// Largest violation among the defining identities.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.0.n;
        let mut worst = 0.0f64;
        for idx in self.0.indices() {
            let [i, j, k, l] = [idx[0], idx[1], idx[2], idx[3]];
            let w = self.get(i, j, k, l);
            worst = worst
                .max((w + self.get(j, i, k, l)).abs())
                .max((w + self.get(i, j, l, k)).abs())
                .max((w - self.get(k, l, i, j)).abs())
                .max((w + self.get(i, k, l, j) + self.get(i, l, j, k)).abs());
        }
        for a in 0..n {
            for b in 0..n {
                let tr: f64 = (0..n).map(|i| self.get(i, a, i, b)).sum();
                worst = worst.max(tr.abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trace_examples() {
        for n in 1..6 {
            assert_eq!(SymTensor::delta_power(n, 1).symmetrize_and_trace().unwrap(), n as f64);
        }
        let mut a = SymTensor::zeros(3, 2);
        a.data[1] = 2.0;
        a.data[3] = -2.0;
        assert_eq!(a.symmetrize_and_trace().unwrap(), 0.0);
        assert!(SymTensor::zeros(3, 3).symmetrize_and_trace().is_err());
    }

    #[test]
    fn unit_vector_power() {
        let e = [0.6, 0.0, 0.8];
        let t = SymTensor::outer_power(&e, 4);
        assert!((t.symmetrize_and_trace().unwrap() - 1.0).abs() < 1e-14);
    }

    /// Symmetrization by explicit averaging over all slot permutations.
    fn brute_symmetrize(t: &SymTensor) -> SymTensor {
        fn perms(m: usize) -> Vec<Vec<usize>> {
            if m == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(m - 1) {
                for pos in 0..m {
                    let mut q = p.clone();
                    q.insert(pos, m - 1);
                    out.push(q);
                }
            }
            out
        }
        let ps = perms(t.order);
        let mut acc = SymTensor::zeros(t.n, t.order);
        for p in &ps {
            acc = acc.add(&t.permute(p).unwrap());
        }
        acc.scale(1.0 / ps.len() as f64)
    }

    #[test]
    fn symmetrize_matches_permutation_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = SymTensor::random_block_symmetric(3, 2, &mut rng);
        let a = t.symmetrize();
        let b = brute_symmetrize(&t);
        assert!(a.data.iter().zip(&b.data).all(|(x, y)| (x - y).abs() < 1e-13));
    }

    #[test]
    fn delta_power_trace() {
        // Tr of the symmetrized d(x)d: (n^2 + 2n)/3
        for n in 2..6usize {
            let v = SymTensor::delta_power(n, 2).symmetrize_and_trace().unwrap();
            assert!((v - (n * n + 2 * n) as f64 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn weyl_projection_symmetries() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 4..8 {
            let w = WeylTensor::random(n, &mut rng).unwrap();
            assert!(w.symmetry_defect() < 1e-12, "{n}");
            assert!(w.0.max_abs() > 1e-3);
            // idempotent
            let w2 = WeylTensor::project(&w.0).unwrap();
            assert!(w.0.data.iter().zip(&w2.0.data).all(|(a, b)| (a - b).abs() < 1e-12));
        }
        assert!(WeylTensor::random(3, &mut rng).is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = SymTensor::random_block_symmetric(3, 1, &mut rng);
        let back = SymTensor::parse_text(&t.to_text()).unwrap();
        assert_eq!(t, back);
        assert!(SymTensor::parse_text("n 2\norder 2\n1 2 3").is_err());
        assert!(SymTensor::parse_text("1 2\nn 2").is_err());
        assert!(SymTensor::parse_text("n 2\nn 2\norder 1\n1 1").is_err());
    }
}
