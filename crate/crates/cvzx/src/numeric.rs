//! Shared numerical substrate: dense complex tensors, complex matrices with
//! a matrix exponential, Gauss–Hermite quadrature and Hermite functions.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

pub fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

// ---------------------------------------------------------------------------
// Dense complex tensors
// ---------------------------------------------------------------------------

/// Dense complex tensor in row-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<C64>,
}

impl Tensor {
    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Tensor {
            dims,
            data: vec![cx(0.0, 0.0); n],
        }
    }

    pub fn scalar(v: C64) -> Self {
        Tensor {
            dims: vec![],
            data: vec![v],
        }
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.data[self.flat(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: C64) {
        let f = self.flat(idx);
        self.data[f] = v;
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let strides = self.strides();
        idx.iter().zip(strides.iter()).map(|(i, s)| i * s).sum()
    }

    pub fn scale(&mut self, v: C64) {
        for x in &mut self.data {
            *x *= v;
        }
    }

    /// Contract axis `ax_a` of `self` with axis `ax_b` of `other`.
    /// Result axes: remaining axes of self, then remaining axes of other.
    pub fn contract(&self, ax_a: usize, other: &Tensor, ax_b: usize) -> Tensor {
        assert_eq!(self.dims[ax_a], other.dims[ax_b], "contraction dims");
        let d = self.dims[ax_a];
        let a_keep: Vec<usize> = (0..self.rank()).filter(|&i| i != ax_a).collect();
        let b_keep: Vec<usize> = (0..other.rank()).filter(|&i| i != ax_b).collect();
        let mut dims: Vec<usize> = a_keep.iter().map(|&i| self.dims[i]).collect();
        dims.extend(b_keep.iter().map(|&i| other.dims[i]));
        let mut out = Tensor::zeros(dims);
        let sa = self.strides();
        let sb = other.strides();
        let a_outer: usize = a_keep.iter().map(|&i| self.dims[i]).product();
        let b_outer: usize = b_keep.iter().map(|&i| other.dims[i]).product();
        let decode_base = |mut lin: usize, keep: &[usize], dims: &[usize], strides: &[usize]| {
            let mut base = 0usize;
            for j in (0..keep.len()).rev() {
                let v = lin % dims[keep[j]];
                lin /= dims[keep[j]];
                base += v * strides[keep[j]];
            }
            base
        };
        for ia in 0..a_outer {
            let a_base = decode_base(ia, &a_keep, &self.dims, &sa);
            for ib in 0..b_outer {
                let b_base = decode_base(ib, &b_keep, &other.dims, &sb);
                let mut acc = cx(0.0, 0.0);
                for k in 0..d {
                    acc += self.data[a_base + k * sa[ax_a]] * other.data[b_base + k * sb[ax_b]];
                }
                out.data[ia * b_outer + ib] = acc;
            }
        }
        out
    }

    /// Trace out axes `ax1` and `ax2` of the same tensor (self-loop).
    pub fn self_trace(&self, ax1: usize, ax2: usize) -> Tensor {
        assert!(ax1 != ax2);
        assert_eq!(self.dims[ax1], self.dims[ax2]);
        let (lo, hi) = if ax1 < ax2 { (ax1, ax2) } else { (ax2, ax1) };
        let d = self.dims[lo];
        let keep: Vec<usize> = (0..self.rank()).filter(|&i| i != lo && i != hi).collect();
        let dims: Vec<usize> = keep.iter().map(|&i| self.dims[i]).collect();
        let mut out = Tensor::zeros(dims);
        let s = self.strides();
        let outer: usize = keep.iter().map(|&i| self.dims[i]).product();
        for io in 0..outer {
            let mut lin = io;
            let mut base = 0usize;
            for j in (0..keep.len()).rev() {
                let v = lin % self.dims[keep[j]];
                lin /= self.dims[keep[j]];
                base += v * s[keep[j]];
            }
            let mut acc = cx(0.0, 0.0);
            for k in 0..d {
                acc += self.data[base + k * (s[lo] + s[hi])];
            }
            out.data[io] = acc;
        }
        out
    }

    /// Outer (tensor) product.
    pub fn outer(&self, other: &Tensor) -> Tensor {
        let mut dims = self.dims.clone();
        dims.extend(other.dims.iter());
        let mut out = Tensor::zeros(dims);
        for (i, &a) in self.data.iter().enumerate() {
            for (j, &b) in other.data.iter().enumerate() {
                out.data[i * other.data.len() + j] = a * b;
            }
        }
        out
    }

    /// Permute axes: `perm[i]` is the source axis placed at position i.
    pub fn permute(&self, perm: &[usize]) -> Tensor {
        assert_eq!(perm.len(), self.rank());
        let dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let mut out = Tensor::zeros(dims);
        let s_in = self.strides();
        let s_out = out.strides();
        for lin in 0..self.data.len() {
            let mut rem = lin;
            let mut src = 0usize;
            for j in 0..perm.len() {
                let v = rem / s_out[j];
                rem %= s_out[j];
                src += v * s_in[perm[j]];
            }
            out.data[lin] = self.data[src];
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.dims, other.dims);
        Tensor {
            dims: self.dims.clone(),
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Max-norm distance.
    pub fn dist_max(&self, other: &Tensor) -> f64 {
        self.sub(other).max_abs()
    }

    /// Distance up to a single complex proportionality factor: returns
    /// (residual, factor) where residual = max|self − factor·other|.
    pub fn dist_proportional(&self, other: &Tensor) -> (f64, C64) {
        assert_eq!(self.dims, other.dims);
        let (i, m) = other
            .data
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, v)| (i, v.norm()))
            .unwrap_or((0, 0.0));
        if m == 0.0 {
            return (self.max_abs(), cx(0.0, 0.0));
        }
        let factor = self.data[i] / other.data[i];
        let mut resid = 0.0f64;
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            resid = resid.max((a - factor * b).norm());
        }
        (resid, factor)
    }
}

// ---------------------------------------------------------------------------
// Complex matrices
// ---------------------------------------------------------------------------

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![cx(0.0, 0.0); rows * cols],
        }
    }

    pub fn eye(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cx(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows);
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scaled(&self, v: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * v).collect(),
        }
    }

    pub fn dagger(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.conj()).collect(),
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![cx(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = cx(0.0, 0.0);
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn dist_max(&self, other: &CMat) -> f64 {
        self.sub(other).max_abs()
    }

    /// 1-norm (max column sum), used for expm scaling.
    fn norm_one(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.cols {
            let s: f64 = (0..self.rows).map(|i| self[(i, j)].norm()).sum();
            best = best.max(s);
        }
        best
    }

    /// Matrix exponential by scaling and squaring with Padé(13).
    pub fn expm(&self) -> CMat {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let theta13 = 5.371920351148152;
        let nrm = self.norm_one();
        let s = if nrm > theta13 {
            (nrm / theta13).log2().ceil() as i32
        } else {
            0
        };
        let a = self.scaled(cx(0.5f64.powi(s), 0.0));
        let b: [f64; 14] = [
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ];
        let a2 = a.mul(&a);
        let a4 = a2.mul(&a2);
        let a6 = a4.mul(&a2);
        let id = CMat::eye(n);
        let u_inner = a6
            .scaled(cx(b[13], 0.0))
            .add(&a4.scaled(cx(b[11], 0.0)))
            .add(&a2.scaled(cx(b[9], 0.0)));
        let u = a.mul(
            &a6.mul(&u_inner)
                .add(&a6.scaled(cx(b[7], 0.0)))
                .add(&a4.scaled(cx(b[5], 0.0)))
                .add(&a2.scaled(cx(b[3], 0.0)))
                .add(&id.scaled(cx(b[1], 0.0))),
        );
        let v_inner = a6
            .scaled(cx(b[12], 0.0))
            .add(&a4.scaled(cx(b[10], 0.0)))
            .add(&a2.scaled(cx(b[8], 0.0)));
        let v = a6
            .mul(&v_inner)
            .add(&a6.scaled(cx(b[6], 0.0)))
            .add(&a4.scaled(cx(b[4], 0.0)))
            .add(&a2.scaled(cx(b[2], 0.0)))
            .add(&id.scaled(cx(b[0], 0.0)));
        let mut r = solve(&v.sub(&u), &v.add(&u));
        for _ in 0..s {
            r = r.mul(&r);
        }
        r
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Solve A X = B with partial-pivoted Gauss–Jordan elimination.
pub fn solve(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.rows, a.cols);
    assert_eq!(a.rows, b.rows);
    let n = a.rows;
    let mut m = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[(i, col)].norm().total_cmp(&m[(j, col)].norm()))
            .unwrap();
        assert!(m[(piv, col)].norm() >= 1e-300, "singular matrix in solve");
        if piv != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(piv, j)];
                m[(piv, j)] = tmp;
            }
            for j in 0..x.cols {
                let tmp = x[(col, j)];
                x[(col, j)] = x[(piv, j)];
                x[(piv, j)] = tmp;
            }
        }
        let d = m[(col, col)];
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = m[(i, col)] / d;
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for j in col..n {
                let v = m[(col, j)];
                m[(i, j)] -= f * v;
            }
            for j in 0..x.cols {
                let v = x[(col, j)];
                x[(i, j)] -= f * v;
            }
        }
    }
    for i in 0..n {
        let d = m[(i, i)];
        for j in 0..x.cols {
            x[(i, j)] /= d;
        }
    }
    x
}

// ---------------------------------------------------------------------------
// Gauss–Hermite quadrature and Hermite functions
// ---------------------------------------------------------------------------

/// Gauss–Hermite nodes and weights. `total_weights` fold the e^{−u²} factor
/// back in, so ∫ g(u) du ≈ Σ total_weights[i]·g(nodes[i]).
pub struct HermiteQuad {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub total_weights: Vec<f64>,
}

pub fn gauss_hermite(n: usize) -> HermiteQuad {
    use nalgebra::DMatrix;
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = (i as f64 / 2.0).sqrt();
        j[(i - 1, i)] = b;
        j[(i, i - 1)] = b;
    }
    let eig = j.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let node = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (node, PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let total_weights: Vec<f64> = pairs.iter().map(|p| (p.1.ln() + p.0 * p.0).exp()).collect();
    HermiteQuad {
        nodes,
        weights,
        total_weights,
    }
}

/// Hermite functions ψ_0..ψ_{nmax−1} at `u`:
/// ψ_n(u) = (2ⁿ n! √π)^{−1/2} H_n(u) e^{−u²/2}.
pub fn hermite_functions(nmax: usize, u: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax];
    if nmax == 0 {
        return out;
    }
    let psi0 = PI.powf(-0.25) * (-u * u / 2.0).exp();
    out[0] = psi0;
    if nmax == 1 {
        return out;
    }
    out[1] = 2.0f64.sqrt() * u * psi0;
    for n in 1..nmax - 1 {
        let nf = n as f64;
        out[n + 1] =
            u * (2.0 / (nf + 1.0)).sqrt() * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
    out
}

/// Wire-coordinate Hermite functions φ_n(x) = (2π)^{1/4}·ψ_n(√(2π)·x).
///
/// With the Fourier convention F(f)(p) = ∫ f(x) e^{−i2πxp} dx these satisfy
/// F(φ_n) = (−i)ⁿ·φ_n exactly, so the Fock spider labelled (−i)^n̂ is the
/// Fourier gate.
pub fn wire_hermite_functions(nmax: usize, x: f64) -> Vec<f64> {
    let scale = (2.0 * PI).powf(0.25);
    hermite_functions(nmax, (2.0 * PI).sqrt() * x)
        .into_iter()
        .map(|v| scale * v)
        .collect()
}

/// Physicists' Hermite polynomial coefficients H_0..H_{nmax−1}, exact in f64
/// for the sizes used here; an independent oracle for product formulas.
pub fn hermite_poly_coeffs(nmax: usize) -> Vec<Vec<f64>> {
    let mut polys: Vec<Vec<f64>> = Vec::with_capacity(nmax);
    if nmax == 0 {
        return polys;
    }
    polys.push(vec![1.0]);
    if nmax == 1 {
        return polys;
    }
    polys.push(vec![0.0, 2.0]);
    for n in 2..nmax {
        let mut p = vec![0.0; n + 1];
        for (i, &c) in polys[n - 1].iter().enumerate() {
            p[i + 1] += 2.0 * c;
        }
        for (i, &c) in polys[n - 2].iter().enumerate() {
            p[i] -= 2.0 * (n as f64 - 1.0) * c;
        }
        polys.push(p);
    }
    polys
}

/// n! as f64 (exact for n ≤ 170).
pub fn factorial(n: u64) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut v = 1.0f64;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

// ---------------------------------------------------------------------------
// Unitary decomposition into Givens rotations
// ---------------------------------------------------------------------------

/// One elementary factor of a unitary: a phase on one mode or a Givens block
/// on modes (i, j) with single-photon matrix
/// [[cosθ, −e^{−iφ}·sinθ], [e^{iφ}·sinθ, cosθ]].
#[derive(Debug, Clone)]
pub enum UnitaryFactor {
    Phase { mode: usize, phi: f64 },
    Givens { i: usize, j: usize, theta: f64, phi: f64 },
}

/// Decompose a unitary into Givens rotations and single-mode phases such that
/// applying the factors in order (each as a left-multiplication) gives U.
pub fn decompose_unitary(u: &CMat) -> Vec<UnitaryFactor> {
    assert_eq!(u.rows, u.cols);
    let n = u.rows;
    let mut m = u.clone();
    let mut left: Vec<UnitaryFactor> = Vec::new();
    for col in 0..n {
        for j in ((col + 1)..n).rev() {
            let a = m[(j - 1, col)];
            let b = m[(j, col)];
            if b.norm() < 1e-14 {
                continue;
            }
            // G on rows (j−1, j) with (G·M)[j, col] = 0: e^{iφ}·s·a + c·b = 0.
            let theta = (b.norm() / a.norm().max(1e-300)).atan();
            let phi = (-b / a).arg();
            let (c, s) = (theta.cos(), theta.sin());
            let e = C64::from_polar(1.0, phi);
            for k in 0..n {
                let x = m[(j - 1, k)];
                let y = m[(j, k)];
                m[(j - 1, k)] = cx(c, 0.0) * x - e.conj() * cx(s, 0.0) * y;
                m[(j, k)] = e * cx(s, 0.0) * x + cx(c, 0.0) * y;
            }
            left.push(UnitaryFactor::Givens {
                i: j - 1,
                j,
                theta,
                phi,
            });
        }
    }
    // m is now diagonal with unit-modulus entries:
    // U = G_1⁻¹·…·G_k⁻¹·D, with G(θ,φ)⁻¹ = G(−θ,φ).
    let mut factors: Vec<UnitaryFactor> = Vec::new();
    for i in 0..n {
        let phi = m[(i, i)].arg();
        if phi.abs() > 1e-15 {
            factors.push(UnitaryFactor::Phase { mode: i, phi });
        }
    }
    for f in left {
        match f {
            UnitaryFactor::Givens { i, j, theta, phi } => factors.push(UnitaryFactor::Givens {
                i,
                j,
                theta: -theta,
                phi,
            }),
            UnitaryFactor::Phase { .. } => unreachable!(),
        }
    }
    factors
}

/// Mode-space matrix of a factor list (product of left-multiplications).
pub fn factors_to_matrix(factors: &[UnitaryFactor], n: usize) -> CMat {
    let mut m = CMat::eye(n);
    for f in factors {
        let g = match f {
            UnitaryFactor::Phase { mode, phi } => {
                let mut g = CMat::eye(n);
                g[(*mode, *mode)] = C64::from_polar(1.0, *phi);
                g
            }
            UnitaryFactor::Givens { i, j, theta, phi } => {
                let mut g = CMat::eye(n);
                let (c, s) = (theta.cos(), theta.sin());
                let e = C64::from_polar(1.0, *phi);
                g[(*i, *i)] = cx(c, 0.0);
                g[(*i, *j)] = -e.conj() * s;
                g[(*j, *i)] = e * s;
                g[(*j, *j)] = cx(c, 0.0);
                g
            }
        };
        m = g.mul(&m);
    }
    m
}

/// Random unitary via Gram–Schmidt on a complex Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl rand::Rng) -> CMat {
    let mut q = CMat::from_fn(n, n, |_, _| cx(normal_sample(rng), normal_sample(rng)));
    for j in 0..n {
        for k in 0..j {
            let mut dot = cx(0.0, 0.0);
            for i in 0..n {
                dot += q[(i, k)].conj() * q[(i, j)];
            }
            for i in 0..n {
                let v = q[(i, k)];
                q[(i, j)] -= dot * v;
            }
        }
        let nrm: f64 = (0..n).map(|i| q[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            q[(i, j)] /= nrm;
        }
    }
    q
}

pub fn normal_sample(rng: &mut impl rand::Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0f64);
    let u2: f64 = rng.gen_range(0.0..1.0f64);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn contract_matrices() {
        let a = Tensor {
            dims: vec![2, 3],
            data: (0..6).map(|i| cx(i as f64, 0.0)).collect(),
        };
        let b = Tensor {
            dims: vec![3, 2],
            data: (0..6).map(|i| cx(i as f64, 0.0)).collect(),
        };
        let c = a.contract(1, &b, 0);
        assert_eq!(c.dims, vec![2, 2]);
        assert!((c.get(&[0, 0]) - cx(10.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn trace_identity() {
        let mut t = Tensor::zeros(vec![4, 4]);
        for i in 0..4 {
            t.set(&[i, i], cx(1.0, 0.0));
        }
        let tr = t.self_trace(0, 1);
        assert_eq!(tr.dims.len(), 0);
        assert!((tr.data[0] - cx(4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn expm_diagonal() {
        let mut a = CMat::zeros(3, 3);
        a[(0, 0)] = cx(0.0, PI);
        a[(1, 1)] = cx(1.0, 0.0);
        let e = a.expm();
        assert!((e[(0, 0)] - cx(-1.0, 0.0)).norm() < 1e-12);
        assert!((e[(1, 1)] - cx(1.0f64.exp(), 0.0)).norm() < 1e-12);
        assert!((e[(2, 2)] - cx(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn expm_rotation_block() {
        let th = 0.7f64;
        let mut a = CMat::zeros(2, 2);
        a[(0, 1)] = cx(-th, 0.0);
        a[(1, 0)] = cx(th, 0.0);
        let e = a.expm();
        assert!((e[(0, 0)] - cx(th.cos(), 0.0)).norm() < 1e-12);
        assert!((e[(1, 0)] - cx(th.sin(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gauss_hermite_integrates() {
        let q = gauss_hermite(40);
        let v: f64 = q
            .nodes
            .iter()
            .zip(q.weights.iter())
            .map(|(u, w)| w * u * u)
            .sum();
        assert!((v - PI.sqrt() / 2.0).abs() < 1e-12);
        let v2: f64 = q
            .nodes
            .iter()
            .zip(q.total_weights.iter())
            .map(|(u, w)| w * (-u * u / 2.0).exp())
            .sum();
        assert!((v2 - (2.0 * PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn hermite_orthonormal() {
        let q = gauss_hermite(80);
        let d = 12;
        let mut gram = vec![vec![0.0f64; d]; d];
        for (u, w) in q.nodes.iter().zip(q.total_weights.iter()) {
            let psi = hermite_functions(d, *u);
            for m in 0..d {
                for n in 0..d {
                    gram[m][n] += w * psi[m] * psi[n];
                }
            }
        }
        for m in 0..d {
            for n in 0..d {
                let want = if m == n { 1.0 } else { 0.0 };
                assert!(
                    (gram[m][n] - want).abs() < 1e-10,
                    "gram[{m}][{n}] = {}",
                    gram[m][n]
                );
            }
        }
    }

    #[test]
    fn wire_hermite_orthonormal() {
        let q = gauss_hermite(80);
        let scale = (2.0 * PI).sqrt();
        let mut gram = [[0.0f64; 6]; 6];
        for (u, w) in q.nodes.iter().zip(q.total_weights.iter()) {
            let x = u / scale;
            let phi = wire_hermite_functions(6, x);
            for m in 0..6 {
                for n in 0..6 {
                    gram[m][n] += (w / scale) * phi[m] * phi[n];
                }
            }
        }
        for (m, row) in gram.iter().enumerate() {
            for (n, &v) in row.iter().enumerate() {
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn unitary_decomposition_roundtrip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 2..=4 {
            let u = random_unitary(n, &mut rng);
            let uu = u.dagger().mul(&u);
            assert!(uu.dist_max(&CMat::eye(n)) < 1e-12);
            let f = decompose_unitary(&u);
            let u2 = factors_to_matrix(&f, n);
            assert!(
                u2.dist_max(&u) < 1e-10,
                "decomposition mismatch: {}",
                u2.dist_max(&u)
            );
        }
    }
}
