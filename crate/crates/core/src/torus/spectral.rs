//! Derivative operators on the periodic grid.
//!
//! Complex derivatives follow `d/dz^j = (d/dx^j - i d/dy^j) / 2` and
//! `d/dzbar^j = (d/dx^j + i d/dy^j) / 2`. On the Fourier mode
//! `exp(2 pi i (k x + l y))` this gives `d/dz = pi (l + i k)` and
//! `d/dzbar = pi (i k - l)`, so the flat scalar Laplacian
//! `sum_j d_j dbar_j` has eigenvalue `-pi^2 |(k, l)|^2`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use super::grid::GridSpec;

/// A first or mixed second derivative in complex coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Deriv {
    /// `d/dz^i`
    Z(usize),
    /// `d/dzbar^j`
    Zbar(usize),
    /// `d/dz^i d/dzbar^j`
    ZZbar(usize, usize),
    /// `d/dz^i d/dz^j`
    ZZ(usize, usize),
    /// `d/dzbar^i d/dzbar^j`
    ZbarZbar(usize, usize),
}

/// Supplies complex partial derivatives of periodic grid functions.
pub trait DerivativeOperator {
    fn grid(&self) -> &GridSpec;

    /// Applies each requested derivative to `f`.
    fn apply_many(&self, f: &[C64], ops: &[Deriv]) -> Vec<Vec<C64>>;

    fn apply(&self, f: &[C64], op: Deriv) -> Vec<C64> {
        self.apply_many(f, &[op]).pop().unwrap()
    }

    fn dz(&self, f: &[C64], i: usize) -> Vec<C64> {
        self.apply(f, Deriv::Z(i))
    }

    fn dzbar(&self, f: &[C64], j: usize) -> Vec<C64> {
        self.apply(f, Deriv::Zbar(j))
    }

    fn dz_dzbar(&self, f: &[C64], i: usize, j: usize) -> Vec<C64> {
        self.apply(f, Deriv::ZZbar(i, j))
    }

    /// Projection applied after nonlinear products; identity by default.
    fn dealias(&self, _f: &mut [C64]) {}
}

/// Pseudo-spectral derivatives through the FFT.
///
/// Odd derivatives zero the Nyquist bin, so all symbols commute and mixed
/// derivatives are products of first-derivative symbols.
pub struct SpectralDiff {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `i * 2 pi k` per axis bin, Nyquist zeroed.
    axis_symbol: Vec<C64>,
    dealias: bool,
}

impl std::fmt::Debug for SpectralDiff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralDiff").field("grid", &self.grid).field("dealias", &self.dealias).finish()
    }
}

impl SpectralDiff {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.points();
        let axis_symbol = (0..n)
            .map(|m| {
                if m == n / 2 {
                    C64::new(0.0, 0.0)
                } else {
                    C64::new(0.0, 2.0 * PI * grid.wavenumber(m) as f64)
                }
            })
            .collect();
        Self {
            grid: grid.clone(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            axis_symbol,
            dealias: false,
        }
    }

    /// Enables 2/3-rule truncation in [`DerivativeOperator::dealias`].
    pub fn with_dealias(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn dealias_enabled(&self) -> bool {
        self.dealias
    }

    /// In-place multidimensional FFT (unnormalized in both directions).
    pub fn transform(&self, data: &mut [C64], inverse: bool) {
        let g = &self.grid;
        assert_eq!(data.len(), g.len(), "field length does not match grid");
        let n = g.points();
        let fft = if inverse { &self.inverse } else { &self.forward };
        let mut lines = vec![C64::new(0.0, 0.0); data.len()];
        let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for axis in 0..g.axes() {
            let stride = g.stride(axis);
            let outer = data.len() / (n * stride);
            let mut w = 0;
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for m in 0..n {
                        lines[w + m] = data[base + m * stride];
                    }
                    w += n;
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            let mut r = 0;
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for m in 0..n {
                        data[base + m * stride] = lines[r + m];
                    }
                    r += n;
                }
            }
        }
    }

    pub fn forward(&self, f: &[C64]) -> Vec<C64> {
        let mut h = f.to_vec();
        self.transform(&mut h, false);
        h
    }

    pub fn backward(&self, mut h: Vec<C64>) -> Vec<C64> {
        self.transform(&mut h, true);
        let s = 1.0 / self.grid.len() as f64;
        h.iter_mut().for_each(|z| *z *= s);
        h
    }

    /// Symbol of `d/dx^axis` at spectral multi-index `m`.
    fn dx_symbol(&self, m: &[usize], axis: usize) -> C64 {
        self.axis_symbol[m[axis]]
    }

    fn dz_symbol(&self, m: &[usize], i: usize) -> C64 {
        (self.dx_symbol(m, 2 * i) - C64::i() * self.dx_symbol(m, 2 * i + 1)) * 0.5
    }

    fn dzbar_symbol(&self, m: &[usize], j: usize) -> C64 {
        (self.dx_symbol(m, 2 * j) + C64::i() * self.dx_symbol(m, 2 * j + 1)) * 0.5
    }

    fn symbol(&self, m: &[usize], op: Deriv) -> C64 {
        match op {
            Deriv::Z(i) => self.dz_symbol(m, i),
            Deriv::Zbar(j) => self.dzbar_symbol(m, j),
            Deriv::ZZbar(i, j) => self.dz_symbol(m, i) * self.dzbar_symbol(m, j),
            Deriv::ZZ(i, j) => self.dz_symbol(m, i) * self.dz_symbol(m, j),
            Deriv::ZbarZbar(i, j) => self.dzbar_symbol(m, i) * self.dzbar_symbol(m, j),
        }
    }

    /// Applies derivatives to an already transformed field.
    pub fn apply_spectral(&self, hat: &[C64], ops: &[Deriv]) -> Vec<Vec<C64>> {
        let g = &self.grid;
        let mut outs: Vec<Vec<C64>> = ops.iter().map(|_| Vec::with_capacity(hat.len())).collect();
        let mut m = vec![0usize; g.axes()];
        for (p, &v) in hat.iter().enumerate() {
            for (o, &op) in outs.iter_mut().zip(ops) {
                o.push(v * self.symbol(&m, op));
            }
            if p + 1 < hat.len() {
                increment(&mut m, g.points());
            }
        }
        outs.into_iter().map(|h| self.backward(h)).collect()
    }

    /// Largest retained wavenumber per axis: `N/3` with dealiasing, else `N/2 - 1`.
    pub fn retained_cutoff(&self) -> i64 {
        let n = self.grid.points() as i64;
        if self.dealias {
            n / 3
        } else {
            n / 2 - 1
        }
    }

    /// Sum of normalized Fourier amplitudes of `f` over the outermost retained
    /// shell `max_a |k_a| = retained_cutoff()`.
    pub fn tail_amplitude(&self, f: &[C64]) -> f64 {
        let g = &self.grid;
        let shell = self.retained_cutoff();
        let h = self.forward(f);
        let scale = 1.0 / g.len() as f64;
        let mut m = vec![0usize; g.axes()];
        let mut total = 0.0;
        for (p, v) in h.iter().enumerate() {
            if m.iter().map(|&mi| g.wavenumber(mi).abs()).max() == Some(shell) {
                total += v.norm() * scale;
            }
            if p + 1 < h.len() {
                increment(&mut m, g.points());
            }
        }
        total
    }

    /// Zeroes every Fourier mode with `|k| > N/3` on some axis.
    pub fn two_thirds_filter(&self, f: &mut [C64]) {
        let g = &self.grid;
        let cutoff = (g.points() / 3) as i64;
        let mut h = self.forward(f);
        let mut m = vec![0usize; g.axes()];
        for (p, v) in h.iter_mut().enumerate() {
            if m.iter().any(|&mi| g.wavenumber(mi).abs() > cutoff) {
                *v = C64::new(0.0, 0.0);
            }
            if p + 1 < f.len() {
                increment(&mut m, g.points());
            }
        }
        let back = self.backward(h);
        f.copy_from_slice(&back);
    }
}

fn increment(m: &mut [usize], n: usize) {
    for a in (0..m.len()).rev() {
        m[a] += 1;
        if m[a] < n {
            return;
        }
        m[a] = 0;
    }
}

impl DerivativeOperator for SpectralDiff {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn apply_many(&self, f: &[C64], ops: &[Deriv]) -> Vec<Vec<C64>> {
        let hat = self.forward(f);
        self.apply_spectral(&hat, ops)
    }

    fn dealias(&self, f: &mut [C64]) {
        if self.dealias {
            self.two_thirds_filter(f);
        }
    }
}

/// Second-order central differences; mixed derivatives compose first-order
/// stencils along each axis.
#[derive(Clone, Debug)]
pub struct FiniteDiff {
    grid: GridSpec,
}

impl FiniteDiff {
    pub fn new(grid: &GridSpec) -> Self {
        Self { grid: grid.clone() }
    }

    fn dx(&self, f: &[C64], axis: usize) -> Vec<C64> {
        let g = &self.grid;
        let n = g.points();
        let stride = g.stride(axis);
        let inv2h = 0.5 * n as f64;
        (0..f.len())
            .map(|p| {
                let m = (p / stride) % n;
                let up = if m + 1 == n { p + stride - n * stride } else { p + stride };
                let dn = if m == 0 { p + (n - 1) * stride } else { p - stride };
                (f[up] - f[dn]) * inv2h
            })
            .collect()
    }

    fn dz_(&self, f: &[C64], i: usize) -> Vec<C64> {
        let a = self.dx(f, 2 * i);
        let b = self.dx(f, 2 * i + 1);
        a.iter().zip(&b).map(|(x, y)| (x - C64::i() * y) * 0.5).collect()
    }

    fn dzbar_(&self, f: &[C64], j: usize) -> Vec<C64> {
        let a = self.dx(f, 2 * j);
        let b = self.dx(f, 2 * j + 1);
        a.iter().zip(&b).map(|(x, y)| (x + C64::i() * y) * 0.5).collect()
    }
}

impl DerivativeOperator for FiniteDiff {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn apply_many(&self, f: &[C64], ops: &[Deriv]) -> Vec<Vec<C64>> {
        ops.iter()
            .map(|&op| match op {
                Deriv::Z(i) => self.dz_(f, i),
                Deriv::Zbar(j) => self.dzbar_(f, j),
                Deriv::ZZbar(i, j) => self.dz_(&self.dzbar_(f, j), i),
                Deriv::ZZ(i, j) => self.dz_(&self.dz_(f, j), i),
                Deriv::ZbarZbar(i, j) => self.dzbar_(&self.dzbar_(f, j), i),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode(grid: &GridSpec, k: [i64; 4]) -> Vec<C64> {
        grid.sample(|x| {
            let ph: f64 = x.iter().zip(&k).map(|(xi, &ki)| xi * ki as f64).sum();
            C64::from_polar(1.0, 2.0 * PI * ph)
        })
    }

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn fourier_mode_symbols() {
        let g = GridSpec::new(2, 8).unwrap();
        let d = SpectralDiff::new(&g);
        // exp(2 pi i x^1): d/dz^1 = pi i, d/dzbar^1 = pi i
        let f = mode(&g, [1, 0, 0, 0]);
        let dz = d.dz(&f, 0);
        let want: Vec<C64> = f.iter().map(|v| v * C64::new(0.0, PI)).collect();
        assert!(max_diff(&dz, &want) < 1e-12);
        // exp(2 pi i y^2): d/dz^2 = pi, d/dzbar^2 = -pi
        let f = mode(&g, [0, 0, 0, 1]);
        let want: Vec<C64> = f.iter().map(|v| v * PI).collect();
        assert!(max_diff(&d.dz(&f, 1), &want) < 1e-12);
        let want: Vec<C64> = f.iter().map(|v| v * -PI).collect();
        assert!(max_diff(&d.dzbar(&f, 1), &want) < 1e-12);
    }

    #[test]
    fn dbar_annihilates_holomorphic_data() {
        // Periodic holomorphic functions are constants; a function of z^2
        // alone is holomorphic in the z^1 direction.
        let g = GridSpec::new(2, 8).unwrap();
        let d = SpectralDiff::new(&g);
        let c = vec![C64::new(2.5, -1.0); g.len()];
        assert!(d.dzbar(&c, 0).iter().chain(&d.dzbar(&c, 1)).all(|v| v.norm() < 1e-14));
        let f = mode(&g, [0, 0, 2, -1]);
        assert!(d.dzbar(&f, 0).iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn mixed_derivatives_commute() {
        let g = GridSpec::new(2, 8).unwrap();
        let d = SpectralDiff::new(&g);
        let f: Vec<C64> = g.sample(|x| C64::new((2.0 * PI * (x[0] + 2.0 * x[3])).sin(), (2.0 * PI * x[1]).cos() * (2.0 * PI * x[2]).sin()));
        let a = d.dz(&d.dzbar(&f, 1), 0);
        let b = d.dzbar(&d.dz(&f, 0), 1);
        let c = d.dz_dzbar(&f, 0, 1);
        assert!(max_diff(&a, &b) < 1e-12);
        assert!(max_diff(&a, &c) < 1e-12);
    }

    #[test]
    fn flat_laplacian_eigenvalue() {
        let g = GridSpec::new(2, 12).unwrap();
        let d = SpectralDiff::new(&g);
        let k = [1i64, -2, 0, 3];
        let f = mode(&g, k);
        let lap: Vec<C64> = (0..2)
            .map(|j| d.dz_dzbar(&f, j, j))
            .fold(vec![C64::new(0.0, 0.0); g.len()], |acc, v| acc.iter().zip(&v).map(|(a, b)| a + b).collect());
        let k2: f64 = k.iter().map(|&v| (v * v) as f64).sum();
        let want: Vec<C64> = f.iter().map(|v| v * (-PI * PI * k2)).collect();
        assert!(max_diff(&lap, &want) < 1e-10);
    }

    #[test]
    fn finite_difference_agrees_to_second_order() {
        let mut errs = vec![];
        for n in [8, 16] {
            let g = GridSpec::new(2, n).unwrap();
            let f = mode(&g, [1, 0, 0, 1]);
            let fd = FiniteDiff::new(&g).dz(&f, 0);
            let sp = SpectralDiff::new(&g).dz(&f, 0);
            errs.push(max_diff(&fd, &sp));
        }
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 2.0).abs() < 0.2, "observed order {order}");
    }

    #[test]
    fn two_thirds_filter_removes_high_modes() {
        let g = GridSpec::new(2, 12).unwrap();
        let d = SpectralDiff::new(&g).with_dealias(true);
        let mut f = mode(&g, [5, 0, 0, 0]);
        d.dealias(&mut f);
        assert!(f.iter().all(|v| v.norm() < 1e-13));
        let mut f = mode(&g, [4, -4, 1, 0]);
        let orig = f.clone();
        d.dealias(&mut f);
        assert!(max_diff(&f, &orig) < 1e-13);
    }
}
