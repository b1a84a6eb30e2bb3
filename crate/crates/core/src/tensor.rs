//! Pure-type complex tensor fields on a grid (or at a single point).
//!
//! Storage is component-major: component `c` occupies
//! `data[c * npts .. (c + 1) * npts]`. Component multi-indices are row-major
//! over the slots, and slots are kept in canonical order with every unbarred
//! slot before every barred slot.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SmallMat;

/// Variance and type of one tensor index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    /// Upper unbarred index (`T_{1,0}` factor).
    Up,
    /// Lower unbarred index (`T*_{1,0}` factor).
    Down,
    /// Upper barred index.
    BarUp,
    /// Lower barred index.
    BarDown,
}

impl Slot {
    pub fn is_barred(self) -> bool {
        matches!(self, Slot::BarUp | Slot::BarDown)
    }

    pub fn conj(self) -> Slot {
        match self {
            Slot::Up => Slot::BarUp,
            Slot::Down => Slot::BarDown,
            Slot::BarUp => Slot::Up,
            Slot::BarDown => Slot::Down,
        }
    }
}

/// Counts of (unbarred upper, unbarred lower, barred upper, barred lower) slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub p_up: u32,
    pub p_down: u32,
    pub q_up: u32,
    pub q_down: u32,
}

impl Signature {
    pub fn of(slots: &[Slot]) -> Self {
        let count = |s: Slot| slots.iter().filter(|&&x| x == s).count() as u32;
        Self { p_up: count(Slot::Up), p_down: count(Slot::Down), q_up: count(Slot::BarUp), q_down: count(Slot::BarDown) }
    }

    /// Canonical slot list for this signature.
    pub fn slots(&self) -> Vec<Slot> {
        let mut v = vec![Slot::Up; self.p_up as usize];
        v.extend(std::iter::repeat(Slot::Down).take(self.p_down as usize));
        v.extend(std::iter::repeat(Slot::BarUp).take(self.q_up as usize));
        v.extend(std::iter::repeat(Slot::BarDown).take(self.q_down as usize));
        v
    }

    pub fn rank(&self) -> usize {
        (self.p_up + self.p_down + self.q_up + self.q_down) as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTensorField {
    n: usize,
    npts: usize,
    slots: Vec<Slot>,
    data: Vec<C64>,
}

fn check_canonical(slots: &[Slot]) -> Result<()> {
    let first_bar = slots.iter().position(|s| s.is_barred()).unwrap_or(slots.len());
    if slots[first_bar..].iter().any(|s| !s.is_barred()) {
        return Err(Error::Signature(format!("slots {slots:?} are not in canonical (unbarred first) order")));
    }
    Ok(())
}

impl ComplexTensorField {
    pub fn zeros(n: usize, npts: usize, slots: Vec<Slot>) -> Result<Self> {
        check_canonical(&slots)?;
        let ncomp = n.pow(slots.len() as u32);
        Ok(Self { n, npts, slots, data: vec![C64::new(0.0, 0.0); ncomp * npts] })
    }

    pub fn from_data(n: usize, npts: usize, slots: Vec<Slot>, data: Vec<C64>) -> Result<Self> {
        check_canonical(&slots)?;
        let ncomp = n.pow(slots.len() as u32);
        if data.len() != ncomp * npts {
            return Err(Error::Shape(format!("expected {} values, got {}", ncomp * npts, data.len())));
        }
        Ok(Self { n, npts, slots, data })
    }

    pub fn scalar(n: usize, values: Vec<C64>) -> Self {
        Self { n, npts: values.len(), slots: vec![], data: values }
    }

    /// Constant field whose per-point components are `comps`.
    pub fn constant(n: usize, npts: usize, slots: Vec<Slot>, comps: &[C64]) -> Result<Self> {
        let mut f = Self::zeros(n, npts, slots)?;
        if comps.len() != f.ncomp() {
            return Err(Error::Shape(format!("expected {} components, got {}", f.ncomp(), comps.len())));
        }
        for (c, &v) in comps.iter().enumerate() {
            f.component_mut(c).fill(v);
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn npts(&self) -> usize {
        self.npts
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn signature(&self) -> Signature {
        Signature::of(&self.slots)
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn ncomp(&self) -> usize {
        self.n.pow(self.rank() as u32)
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[C64] {
        &self.data[c * self.npts..(c + 1) * self.npts]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [C64] {
        &mut self.data[c * self.npts..(c + 1) * self.npts]
    }

    pub fn comp_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.rank());
        multi.iter().fold(0, |acc, &m| acc * self.n + m)
    }

    pub fn comp_multi(&self, mut c: usize) -> Vec<usize> {
        let mut m = vec![0; self.rank()];
        for s in (0..self.rank()).rev() {
            m[s] = c % self.n;
            c /= self.n;
        }
        m
    }

    pub fn get(&self, multi: &[usize], p: usize) -> C64 {
        self.data[self.comp_index(multi) * self.npts + p]
    }

    /// All components at one point.
    pub fn at(&self, p: usize) -> Vec<C64> {
        (0..self.ncomp()).map(|c| self.data[c * self.npts + p]).collect()
    }

    pub fn set_at(&mut self, p: usize, comps: &[C64]) {
        for (c, &v) in comps.iter().enumerate() {
            self.data[c * self.npts + p] = v;
        }
    }

    /// Rank-2 field viewed as an `n x n` matrix at a point.
    pub fn matrix_at(&self, p: usize) -> SmallMat {
        assert_eq!(self.rank(), 2, "matrix_at needs a rank-2 field");
        SmallMat::from_fn(self.n, |i, j| self.data[(i * self.n + j) * self.npts + p])
    }

    pub fn set_matrix_at(&mut self, p: usize, m: &SmallMat) {
        for i in 0..self.n {
            for j in 0..self.n {
                self.data[(i * self.n + j) * self.npts + p] = m[(i, j)];
            }
        }
    }

    /// Complex conjugate field; barred and unbarred slots trade places.
    pub fn conj(&self) -> Self {
        let nb = self.slots.iter().filter(|s| !s.is_barred()).count();
        let mut slots: Vec<Slot> = self.slots[nb..].iter().map(|s| s.conj()).collect();
        slots.extend(self.slots[..nb].iter().map(|s| s.conj()));
        let mut out = Self::zeros(self.n, self.npts, slots).expect("conjugate slots are canonical");
        for c in 0..self.ncomp() {
            let m = self.comp_multi(c);
            let mut nm = m[nb..].to_vec();
            nm.extend_from_slice(&m[..nb]);
            let oc = out.comp_index(&nm);
            for (o, v) in out.component_mut(oc).iter_mut().zip(self.component(c)) {
                *o = v.conj();
            }
        }
        out
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.npts != other.npts || self.slots != other.slots {
            return Err(Error::Shape(format!(
                "tensor shapes differ: (n={}, pts={}, {:?}) vs (n={}, pts={}, {:?})",
                self.n, self.npts, self.slots, other.n, other.npts, other.slots
            )));
        }
        Ok(())
    }

    pub fn add_scaled(&mut self, other: &Self, s: C64) -> Result<()> {
        self.same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
        Ok(())
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut o = self.clone();
        o.data.iter_mut().for_each(|v| *v *= s);
        o
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Scalar values; panics unless rank 0.
    pub fn values(&self) -> &[C64] {
        assert_eq!(self.rank(), 0);
        &self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_noncanonical_order() {
        assert!(ComplexTensorField::zeros(2, 1, vec![Slot::BarDown, Slot::Down]).is_err());
        assert!(ComplexTensorField::zeros(2, 1, vec![Slot::Down, Slot::BarDown]).is_ok());
    }

    #[test]
    fn conjugation_swaps_types_and_is_involutive() {
        let n = 2;
        let slots = vec![Slot::Down, Slot::Up, Slot::BarDown];
        let data: Vec<C64> = (0..8 * 3).map(|k| C64::new(k as f64, -(k as f64) * 0.5)).collect();
        let t = ComplexTensorField::from_data(n, 3, slots, data).unwrap();
        let c = t.conj();
        assert_eq!(c.slots(), &[Slot::Down, Slot::BarDown, Slot::BarUp]);
        assert_eq!(c.get(&[1, 0, 1], 2), t.get(&[0, 1, 1], 2).conj());
        assert_eq!(c.conj(), t);
        assert_eq!(t.signature(), Signature { p_up: 1, p_down: 1, q_up: 0, q_down: 1 });
    }
}
