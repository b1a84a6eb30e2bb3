//! Chern covariant derivatives, Laplacians, contractions and norms of tensor fields.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::SmallMat;
use crate::metric::HermitianMetricField;
use crate::tensor::{ComplexTensorField, Slot};
use crate::torus::{Deriv, DerivativeOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `nabla_k`; the new lower index is unbarred and goes first.
    Holomorphic,
    /// `nabla_kbar`; the new lower index goes first among the barred slots.
    Antiholomorphic,
}

/// Chern covariant derivative in one type of direction.
///
/// `gamma` is the `[Up, Down, Down]` coefficient field `Gamma^l_{ij}`.
/// Unbarred slots see `Gamma` under `nabla_k` and plain derivatives under
/// `nabla_kbar`; barred slots see `conj(Gamma)` under `nabla_kbar`.
pub fn covariant_derivative(
    x: &ComplexTensorField,
    gamma: &ComplexTensorField,
    d: &dyn DerivativeOperator,
    dir: Direction,
) -> Result<ComplexTensorField> {
    let n = x.n();
    let npts = x.npts();
    if gamma.slots() != [Slot::Up, Slot::Down, Slot::Down] || gamma.n() != n || gamma.npts() != npts {
        return Err(Error::Shape("connection coefficients do not match the tensor field".into()));
    }
    if d.grid().len() != npts || d.grid().n() != n {
        return Err(Error::Shape("derivative operator grid does not match the tensor field".into()));
    }
    let slots = x.slots().to_vec();
    let nb = slots.iter().filter(|s| !s.is_barred()).count();
    let (out_slots, insert_at) = match dir {
        Direction::Holomorphic => {
            let mut s = vec![Slot::Down];
            s.extend_from_slice(&slots);
            (s, 0)
        }
        Direction::Antiholomorphic => {
            let mut s = slots[..nb].to_vec();
            s.push(Slot::BarDown);
            s.extend_from_slice(&slots[nb..]);
            (s, nb)
        }
    };
    let mut out = ComplexTensorField::zeros(n, npts, out_slots)?;
    let ops: Vec<Deriv> = match dir {
        Direction::Holomorphic => (0..n).map(Deriv::Z).collect(),
        Direction::Antiholomorphic => (0..n).map(Deriv::Zbar).collect(),
    };
    let out_index = |out: &ComplexTensorField, k: usize, multi: &[usize]| {
        let mut m = multi[..insert_at].to_vec();
        m.push(k);
        m.extend_from_slice(&multi[insert_at..]);
        out.comp_index(&m)
    };
    for c in 0..x.ncomp() {
        let multi = x.comp_multi(c);
        for (k, dv) in d.apply_many(x.component(c), &ops).into_iter().enumerate() {
            let oc = out_index(&out, k, &multi);
            out.component_mut(oc).copy_from_slice(&dv);
        }
    }
    for c in 0..x.ncomp() {
        let multi = x.comp_multi(c);
        for k in 0..n {
            let oc = out_index(&out, k, &multi);
            for (s, &slot) in slots.iter().enumerate() {
                for m in 0..n {
                    let (gidx, sign, conj) = match (dir, slot) {
                        (Direction::Holomorphic, Slot::Up) => ([multi[s], k, m], 1.0, false),
                        (Direction::Holomorphic, Slot::Down) => ([m, k, multi[s]], -1.0, false),
                        (Direction::Antiholomorphic, Slot::BarUp) => ([multi[s], k, m], 1.0, true),
                        (Direction::Antiholomorphic, Slot::BarDown) => ([m, k, multi[s]], -1.0, true),
                        _ => continue,
                    };
                    let mut src = multi.clone();
                    src[s] = m;
                    let xs = x.component(x.comp_index(&src)).to_vec();
                    let gc = gamma.component(gamma.comp_index(&gidx));
                    let o = out.component_mut(oc);
                    for p in 0..npts {
                        let gv = if conj { gc[p].conj() } else { gc[p] };
                        o[p] += gv * xs[p] * sign;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Contracts a `Down` slot with a `BarDown` slot through `g^{bbar a}`.
pub fn contract_metric(x: &ComplexTensorField, pos_down: usize, pos_bar: usize, ginv: &[SmallMat]) -> Result<ComplexTensorField> {
    let slots = x.slots();
    if slots.get(pos_down) != Some(&Slot::Down) || slots.get(pos_bar) != Some(&Slot::BarDown) {
        return Err(Error::Signature(format!("cannot metric-contract slots {pos_down} and {pos_bar} of {slots:?}")));
    }
    if ginv.len() != x.npts() {
        return Err(Error::Shape("inverse metric length differs from field".into()));
    }
    let n = x.n();
    let out_slots: Vec<Slot> =
        slots.iter().enumerate().filter(|(i, _)| *i != pos_down && *i != pos_bar).map(|(_, s)| *s).collect();
    let mut out = ComplexTensorField::zeros(n, x.npts(), out_slots)?;
    for oc in 0..out.ncomp() {
        let om = out.comp_multi(oc);
        let mut it = om.iter();
        let mut full: Vec<usize> = (0..slots.len()).map(|i| if i == pos_down || i == pos_bar { 0 } else { *it.next().unwrap() }).collect();
        for a in 0..n {
            for b in 0..n {
                full[pos_down] = a;
                full[pos_bar] = b;
                let xs = x.component(x.comp_index(&full)).to_vec();
                let o = out.component_mut(oc);
                for (p, v) in o.iter_mut().enumerate() {
                    *v += ginv[p][(b, a)] * xs[p];
                }
            }
        }
    }
    Ok(out)
}

fn laplacian_positions(x: &ComplexTensorField) -> (usize, usize) {
    let nb = x.slots().iter().filter(|s| !s.is_barred()).count();
    (0, nb + 1)
}

/// Chern Laplacian `g^{kbar l} nabla_l nabla_kbar x`.
pub fn chern_laplacian(
    x: &ComplexTensorField,
    gamma: &ComplexTensorField,
    ginv: &[SmallMat],
    d: &dyn DerivativeOperator,
) -> Result<ComplexTensorField> {
    let first = covariant_derivative(x, gamma, d, Direction::Antiholomorphic)?;
    let second = covariant_derivative(&first, gamma, d, Direction::Holomorphic)?;
    let (a, b) = laplacian_positions(x);
    contract_metric(&second, a, b, ginv)
}

/// Conjugate Laplacian `g^{kbar l} nabla_kbar nabla_l x`.
pub fn conj_chern_laplacian(
    x: &ComplexTensorField,
    gamma: &ComplexTensorField,
    ginv: &[SmallMat],
    d: &dyn DerivativeOperator,
) -> Result<ComplexTensorField> {
    let first = covariant_derivative(x, gamma, d, Direction::Holomorphic)?;
    let second = covariant_derivative(&first, gamma, d, Direction::Antiholomorphic)?;
    let (a, b) = laplacian_positions(x);
    contract_metric(&second, a, b, ginv)
}

/// Per-slot pairing matrices `M_s` with `<X, Y> = sum X_I conj(Y_J) prod_s M_s[(I_s, J_s)]`.
fn slot_pairing(slot: Slot, g: &SmallMat, ginv: &SmallMat) -> SmallMat {
    match slot {
        Slot::Up => *g,
        Slot::Down => ginv.transpose(),
        Slot::BarUp => g.transpose(),
        Slot::BarDown => *ginv,
    }
}

/// The same pairing with the metric variation replaced by `Q` in one slot.
fn slot_q_pairing(slot: Slot, q: &SmallMat, ginv: &SmallMat) -> SmallMat {
    let raised = ginv.mul(q).mul(ginv);
    match slot {
        Slot::Up => *q,
        Slot::Down => raised.transpose(),
        Slot::BarUp => q.transpose(),
        Slot::BarDown => raised,
    }
}

/// `sum_I X_I conj(Y_J) prod_s M_s[(I_s, J_s)]` for one point.
pub fn paired(n: usize, x: &[C64], y: &[C64], mats: &[SmallMat]) -> C64 {
    let r = mats.len();
    let mut z: Vec<C64> = y.iter().map(|v| v.conj()).collect();
    let mut tmp = vec![C64::new(0.0, 0.0); z.len()];
    for (s, m) in mats.iter().enumerate() {
        let stride = n.pow((r - 1 - s) as u32);
        for (c, t) in tmp.iter_mut().enumerate() {
            let i = (c / stride) % n;
            let base = c - i * stride;
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += m[(i, j)] * z[base + j * stride];
            }
            *t = acc;
        }
        std::mem::swap(&mut z, &mut tmp);
    }
    x.iter().zip(&z).map(|(a, b)| a * b).sum()
}

fn check_pair(x: &ComplexTensorField, g: &HermitianMetricField, ginv: &[SmallMat]) -> Result<()> {
    if x.n() != g.n() || x.npts() != g.npts() || ginv.len() != g.npts() {
        return Err(Error::Shape("tensor and metric live on different grids".into()));
    }
    Ok(())
}

/// Pointwise Hermitian inner product `<x, y>_g`.
pub fn inner_product(
    x: &ComplexTensorField,
    y: &ComplexTensorField,
    g: &HermitianMetricField,
    ginv: &[SmallMat],
) -> Result<Vec<C64>> {
    x.same_shape(y)?;
    check_pair(x, g, ginv)?;
    Ok((0..x.npts())
        .map(|p| {
            let gm = g.at(p);
            let mats: Vec<SmallMat> = x.slots().iter().map(|&s| slot_pairing(s, &gm, &ginv[p])).collect();
            paired(x.n(), &x.at(p), &y.at(p), &mats)
        })
        .collect())
}

/// Pointwise `|x|^2_g`.
pub fn tensor_norm_sq(x: &ComplexTensorField, g: &HermitianMetricField, ginv: &[SmallMat]) -> Result<Vec<f64>> {
    Ok(inner_product(x, x, g, ginv)?.into_iter().map(|v| v.re).collect())
}

/// `p <Q, tr_g(x (x) xbar)>`: the sum over slots of `|x|^2` with that
/// slot's metric factor replaced by `Q` (raised with `g^{-1}` on lower slots).
///
/// `x` must be pure type (every slot the same kind).
pub fn q_trace_sum(
    x: &ComplexTensorField,
    q: &ComplexTensorField,
    g: &HermitianMetricField,
    ginv: &[SmallMat],
) -> Result<Vec<f64>> {
    check_pair(x, g, ginv)?;
    let slots = x.slots();
    if slots.is_empty() || slots.iter().any(|&s| s != slots[0]) {
        return Err(Error::Signature(format!("Q-trace needs a pure-type tensor, got {slots:?}")));
    }
    if q.slots() != [Slot::Down, Slot::BarDown] || q.npts() != x.npts() || q.n() != x.n() {
        return Err(Error::Signature(format!("Q must be a [Down, BarDown] field on the same grid, got {:?}", q.slots())));
    }
    Ok((0..x.npts())
        .map(|p| {
            let gm = g.at(p);
            let qm = q.matrix_at(p);
            let base: Vec<SmallMat> = slots.iter().map(|&s| slot_pairing(s, &gm, &ginv[p])).collect();
            let xp = x.at(p);
            let mut total = 0.0;
            for r in 0..slots.len() {
                let mut mats = base.clone();
                mats[r] = slot_q_pairing(slots[r], &qm, &ginv[p]);
                total += paired(x.n(), &xp, &xp, &mats).re;
            }
            total
        })
        .collect())
}

/// `<Q, tr_g(x (x) xbar)>`, i.e. [`q_trace_sum`] divided by the rank.
pub fn ip_q_trace(
    x: &ComplexTensorField,
    q: &ComplexTensorField,
    g: &HermitianMetricField,
    ginv: &[SmallMat],
) -> Result<Vec<f64>> {
    let p = x.rank() as f64;
    Ok(q_trace_sum(x, q, g, ginv)?.into_iter().map(|v| v / p).collect())
}

/// `g^{kbar l} d_l d_kbar f` for a real scalar field.
pub fn scalar_laplacian(f: &[f64], ginv: &[SmallMat], d: &dyn DerivativeOperator) -> Vec<f64> {
    let n = d.grid().n();
    let fc: Vec<C64> = f.iter().map(|&v| C64::new(v, 0.0)).collect();
    let ops: Vec<Deriv> = (0..n).flat_map(|l| (0..n).map(move |k| Deriv::ZZbar(l, k))).collect();
    let dd = d.apply_many(&fc, &ops);
    (0..f.len())
        .map(|p| {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..n {
                for k in 0..n {
                    acc += ginv[p][(k, l)] * dd[l * n + k][p];
                }
            }
            acc.re
        })
        .collect()
}

/// `|df|^2 = g^{kbar l} d_l f d_kbar f` for a real scalar field.
pub fn scalar_gradient_norm_sq(f: &[f64], ginv: &[SmallMat], d: &dyn DerivativeOperator) -> Vec<f64> {
    let n = d.grid().n();
    let fc: Vec<C64> = f.iter().map(|&v| C64::new(v, 0.0)).collect();
    let ops: Vec<Deriv> = (0..n).map(Deriv::Z).collect();
    let df = d.apply_many(&fc, &ops);
    (0..f.len())
        .map(|p| {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..n {
                for k in 0..n {
                    acc += ginv[p][(k, l)] * df[l][p] * df[k][p].conj();
                }
            }
            acc.re
        })
        .collect()
}

/// Action of the Ricci endomorphism on every slot of a contravariant tensor:
/// `sum_r S^{i_r}_m x^{i_1 .. m .. i_p}` with `S^i_m = S_{m jbar} g^{jbar i}`.
pub fn ricci_action(x: &ComplexTensorField, s: &ComplexTensorField, ginv: &[SmallMat]) -> Result<ComplexTensorField> {
    if x.slots().iter().any(|&sl| sl != Slot::Up) {
        return Err(Error::Signature(format!("Ricci action needs a contravariant tensor, got {:?}", x.slots())));
    }
    let n = x.n();
    let r = x.rank();
    let mut out = ComplexTensorField::zeros(n, x.npts(), x.slots().to_vec())?;
    let mut buf = vec![C64::new(0.0, 0.0); x.ncomp()];
    for p in 0..x.npts() {
        let m = s.matrix_at(p).mul(&ginv[p]);
        let xp = x.at(p);
        buf.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for slot in 0..r {
            let stride = n.pow((r - 1 - slot) as u32);
            for (c, o) in buf.iter_mut().enumerate() {
                let i = (c / stride) % n;
                let base = c - i * stride;
                for k in 0..n {
                    *o += m[(k, i)] * xp[base + k * stride];
                }
            }
        }
        out.set_at(p, &buf);
    }
    Ok(out)
}
