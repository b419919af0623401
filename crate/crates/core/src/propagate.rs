//! Sparse Hermitian matrices and `exp(-iHt)` applied to a vector.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Compressed sparse row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl CsrMatrix {
    /// Duplicate entries are summed.
    pub fn from_triplets(dim: usize, mut trip: Vec<(usize, usize, Complex64)>) -> Self {
        trip.sort_by_key(|x| (x.0, x.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(trip.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(i) => self.vals[span.start + i],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn mul_vec(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[i] * x[self.cols[i]];
            }
            *out = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// Largest `|H_ij - conj(H_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Gershgorin enclosure of the (real) spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.dim {
            let mut d = 0.0;
            let mut rad = 0.0;
            for (c, v) in self.row(r) {
                if c == r {
                    d = v.re;
                } else {
                    rad += v.norm();
                }
            }
            lo = lo.min(d - rad);
            hi = hi.max(d + rad);
        }
        if self.dim == 0 {
            (0.0, 0.0)
        } else {
            (lo, hi)
        }
    }
}

/// `J_0(x) .. J_kmax(x)` by Miller's backward recurrence.
pub fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = kmax.max(ax.ceil() as usize);
    let mut m = top + 40 + (160.0 * top as f64).sqrt() as usize;
    m += m % 2;
    let (mut jp, mut j) = (0.0f64, 1e-30f64);
    let mut sum = 0.0;
    for k in (1..=m).rev() {
        let jm = 2.0 * k as f64 / ax * j - jp;
        jp = j;
        j = jm;
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp *= 1e-250;
            sum *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
        // j now holds J_{k-1}
        if k - 1 <= kmax {
            out[k - 1] = j;
        }
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            sum += 2.0 * j;
        }
    }
    sum += j;
    for v in out.iter_mut() {
        *v /= sum;
    }
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Chebyshev expansion of the propagator on a Gershgorin-scaled spectrum.
#[derive(Debug, Clone)]
pub struct ChebyshevPropagator<'a> {
    h: &'a CsrMatrix,
    center: f64,
    radius: f64,
}

/// `radius * dt` per substep; keeps the expansion short and well conditioned.
const MAX_ARGUMENT: f64 = 40.0;

impl<'a> ChebyshevPropagator<'a> {
    pub fn new(h: &'a CsrMatrix) -> Self {
        let (lo, hi) = h.spectral_bounds();
        let radius = (0.5 * (hi - lo)).max(1e-12) * 1.01;
        ChebyshevPropagator {
            h,
            center: 0.5 * (hi + lo),
            radius,
        }
    }

    fn scaled_apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.h.mul_vec(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = (*yi - self.center * xi) / self.radius;
        }
    }

    /// One substep of length `dt` with `radius * dt <= MAX_ARGUMENT`.
    fn step(&self, psi: &[Complex64], dt: f64) -> Vec<Complex64> {
        let x = self.radius * dt;
        let kmax = (x + 10.0 * x.cbrt() + 30.0).ceil() as usize;
        let bj = bessel_j_sequence(x, kmax);
        let n = psi.len();
        let mut t_prev = psi.to_vec();
        let mut t_cur = vec![Complex64::new(0.0, 0.0); n];
        self.scaled_apply(&t_prev, &mut t_cur);
        let mut acc: Vec<Complex64> = psi.iter().map(|v| v * bj[0]).collect();
        let mut phase = Complex64::new(0.0, -1.0);
        for (a, t) in acc.iter_mut().zip(&t_cur) {
            *a += 2.0 * bj[1] * phase * t;
        }
        let mut t_next = vec![Complex64::new(0.0, 0.0); n];
        for coeff in bj.iter().skip(2) {
            self.scaled_apply(&t_cur, &mut t_next);
            for i in 0..n {
                t_next[i] = 2.0 * t_next[i] - t_prev[i];
            }
            phase *= Complex64::new(0.0, -1.0);
            let w = 2.0 * coeff * phase;
            for (a, t) in acc.iter_mut().zip(&t_next) {
                *a += w * t;
            }
            std::mem::swap(&mut t_prev, &mut t_cur);
            std::mem::swap(&mut t_cur, &mut t_next);
        }
        let rot = Complex64::from_polar(1.0, -self.center * dt);
        acc.iter().map(|v| v * rot).collect()
    }

    /// `exp(-i H t) psi`, split into substeps; `check` sees each intermediate state.
    pub fn propagate<F>(&self, psi: &[Complex64], t: f64, mut check: F) -> crate::Result<Vec<Complex64>>
    where
        F: FnMut(&[Complex64]) -> crate::Result<()>,
    {
        if t == 0.0 {
            return Ok(psi.to_vec());
        }
        let nsteps = ((self.radius * t.abs()) / MAX_ARGUMENT).ceil().max(1.0) as usize;
        let dt = t / nsteps as f64;
        let mut cur = psi.to_vec();
        for _ in 0..nsteps {
            cur = self.step(&cur, dt);
            check(&cur)?;
        }
        Ok(cur)
    }
}

/// Full eigen-decomposition, reused for any number of times.
#[derive(Debug, Clone)]
pub struct DensePropagator {
    energies: DVector<f64>,
    vectors: DMatrix<Complex64>,
}

impl DensePropagator {
    pub fn new(h: &CsrMatrix) -> Self {
        let eig = h.to_dense().symmetric_eigen();
        DensePropagator {
            energies: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    pub fn propagate(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        if t == 0.0 {
            return psi.to_vec();
        }
        let v = DVector::from_column_slice(psi);
        let mut coef = self.vectors.ad_mul(&v);
        for (c, e) in coef.iter_mut().zip(self.energies.iter()) {
            *c *= Complex64::from_polar(1.0, -e * t);
        }
        (&self.vectors * coef).as_slice().to_vec()
    }
}
