//! Real Lie algebras with a complex structure, and their catalog format.
//!
//! Catalog files are line based; `#` starts a comment.
//!
//! ```text
//! algebra <id>
//! dim <2n>
//! bracket <i> <j> <k> <value>   # [e_i, e_j] gains value * e_k (1-based)
//! J <row> <v_1> ... <v_2n>      # row of the matrix with J e_j = sum_i J[i][j] e_i
//! ```
//!
//! A bracket listed once implies its antisymmetric partner. Listing both
//! `(i, j)` and `(j, i)` is allowed when the values are negatives.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::MAX_N;

/// Largest admitted violation of antisymmetry, Jacobi, `J^2 = -1` and integrability.
pub const STRUCTURE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebraSpec {
    pub id: String,
    dim: usize,
    /// `c[(k * dim + i) * dim + j] = c^k_{ij}`.
    c: Vec<f64>,
    /// Row-major `J[i][j]`.
    j: Vec<f64>,
}

impl LieAlgebraSpec {
    /// Builds and validates an algebra from bracket triplets `(i, j, k, value)` (0-based).
    pub fn new(id: impl Into<String>, dim: usize, brackets: &[(usize, usize, usize, f64)], j: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 || dim / 2 > MAX_N {
            return Err(Error::Algebra(format!("real dimension must be even and at most {}, got {dim}", 2 * MAX_N)));
        }
        if j.len() != dim * dim {
            return Err(Error::Algebra(format!("J needs {} entries, got {}", dim * dim, j.len())));
        }
        let idx = |k: usize, a: usize, b: usize| (k * dim + a) * dim + b;
        let mut given = vec![0.0; dim * dim * dim];
        let mut seen = vec![false; dim * dim * dim];
        for &(a, b, k, v) in brackets {
            if a >= dim || b >= dim || k >= dim {
                return Err(Error::Algebra(format!("bracket index out of range: ({a}, {b}, {k})")));
            }
            given[idx(k, a, b)] += v;
            seen[idx(k, a, b)] = true;
        }
        let mut c = vec![0.0; dim * dim * dim];
        for k in 0..dim {
            for a in 0..dim {
                for b in 0..dim {
                    let (at, partner) = (idx(k, a, b), idx(k, b, a));
                    c[at] = if seen[at] {
                        given[at]
                    } else if seen[partner] {
                        -given[partner]
                    } else {
                        0.0
                    };
                }
            }
        }
        let spec = Self { id: id.into(), dim, c, j };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Complex dimension `n`.
    pub fn n(&self) -> usize {
        self.dim / 2
    }

    /// `c^k_{ij}`.
    pub fn c(&self, k: usize, i: usize, j: usize) -> f64 {
        self.c[(k * self.dim + i) * self.dim + j]
    }

    pub fn j(&self, row: usize, col: usize) -> f64 {
        self.j[row * self.dim + col]
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0)
    }

    /// Bilinear bracket of complex vectors in the real basis.
    pub fn bracket(&self, u: &[C64], v: &[C64]) -> Vec<C64> {
        let d = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); d];
        for (k, o) in out.iter_mut().enumerate() {
            for i in 0..d {
                if u[i] == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    let c = self.c(k, i, j);
                    if c != 0.0 {
                        *o += u[i] * v[j] * c;
                    }
                }
            }
        }
        out
    }

    fn bracket_real(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let uc: Vec<C64> = u.iter().map(|&x| C64::new(x, 0.0)).collect();
        let vc: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.bracket(&uc, &vc).into_iter().map(|z| z.re).collect()
    }

    pub fn apply_j(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d).map(|i| (0..d).map(|k| self.j(i, k) * v[k]).sum()).collect()
    }

    fn basis(&self, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.dim];
        e[i] = 1.0;
        e
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    worst = worst.max((self.c(k, i, j) + self.c(k, j, i)).abs());
                }
            }
        }
        worst
    }

    /// `max |[[e_a, e_b], e_c] + [[e_b, e_c], e_a] + [[e_c, e_a], e_b]|`.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let (ea, eb, ec) = (self.basis(a), self.basis(b), self.basis(c));
                    let t1 = self.bracket_real(&self.bracket_real(&ea, &eb), &ec);
                    let t2 = self.bracket_real(&self.bracket_real(&eb, &ec), &ea);
                    let t3 = self.bracket_real(&self.bracket_real(&ec, &ea), &eb);
                    for k in 0..d {
                        worst = worst.max((t1[k] + t2[k] + t3[k]).abs());
                    }
                }
            }
        }
        worst
    }

    /// `max |J^2 + 1|`.
    pub fn complex_structure_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for k in 0..d {
                let v: f64 = (0..d).map(|m| self.j(i, m) * self.j(m, k)).sum::<f64>() + if i == k { 1.0 } else { 0.0 };
                worst = worst.max(v.abs());
            }
        }
        worst
    }

    /// `max |N(e_a, e_b)|` with `N(X, Y) = [JX, JY] - J[JX, Y] - J[X, JY] - [X, Y]`.
    pub fn nijenhuis_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                let (x, y) = (self.basis(a), self.basis(b));
                let (jx, jy) = (self.apply_j(&x), self.apply_j(&y));
                let t1 = self.bracket_real(&jx, &jy);
                let t2 = self.apply_j(&self.bracket_real(&jx, &y));
                let t3 = self.apply_j(&self.bracket_real(&x, &jy));
                let t4 = self.bracket_real(&x, &y);
                for k in 0..d {
                    worst = worst.max((t1[k] - t2[k] - t3[k] - t4[k]).abs());
                }
            }
        }
        worst
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("antisymmetry", self.antisymmetry_residual()),
            ("Jacobi identity", self.jacobi_residual()),
            ("J^2 = -1", self.complex_structure_residual()),
            ("integrability (Nijenhuis tensor)", self.nijenhuis_residual()),
        ];
        for (what, r) in checks {
            if !(r < STRUCTURE_TOL) {
                return Err(Error::Algebra(format!("{}: {what} fails with residual {r:e}", self.id)));
            }
        }
        Ok(())
    }

    /// Parses one catalog entry.
    pub fn parse(text: &str) -> Result<Self> {
        let mut id = None;
        let mut dim = None;
        let mut brackets = Vec::new();
        let mut rows: Vec<Option<Vec<f64>>> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Catalog { line, msg };
            let mut words = body.split_whitespace();
            let key = words.next().unwrap();
            let rest: Vec<&str> = words.collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("not a number: {s}")));
            let index = |s: &str| match s.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(err(format!("not a 1-based index: {s}"))),
            };
            match key {
                "algebra" => {
                    if rest.len() != 1 {
                        return Err(err("expected `algebra <id>`".into()));
                    }
                    id = Some(rest[0].to_string());
                }
                "dim" => {
                    let d = rest.first().and_then(|s| s.parse::<usize>().ok()).filter(|_| rest.len() == 1);
                    let d = d.ok_or_else(|| err("expected `dim <integer>`".into()))?;
                    dim = Some(d);
                    rows = vec![None; d];
                }
                "bracket" => {
                    if rest.len() != 4 {
                        return Err(err("expected `bracket <i> <j> <k> <value>`".into()));
                    }
                    brackets.push((index(rest[0])?, index(rest[1])?, index(rest[2])?, num(rest[3])?));
                }
                "J" => {
                    let d = dim.ok_or_else(|| err("`J` before `dim`".into()))?;
                    if rest.len() != d + 1 {
                        return Err(err(format!("expected a row index and {d} entries")));
                    }
                    let r = index(rest[0])?;
                    if r >= d || rows[r].is_some() {
                        return Err(err(format!("row {} out of range or repeated", r + 1)));
                    }
                    rows[r] = Some(rest[1..].iter().map(|s| num(s)).collect::<Result<_>>()?);
                }
                other => return Err(err(format!("unknown keyword `{other}`"))),
            }
        }
        let last = text.lines().count();
        let id = id.ok_or(Error::Catalog { line: last, msg: "missing `algebra <id>`".into() })?;
        let dim = dim.ok_or(Error::Catalog { line: last, msg: "missing `dim`".into() })?;
        if rows.iter().any(Option::is_none) {
            return Err(Error::Catalog { line: last, msg: "J matrix incomplete".into() });
        }
        let j = rows.into_iter().flatten().flatten().collect();
        Self::new(id, dim, &brackets, j)
    }

    /// Serializes back into the catalog format.
    pub fn to_catalog(&self) -> String {
        let d = self.dim;
        let mut s = format!("algebra {}\ndim {}\n", self.id, d);
        for k in 0..d {
            for i in 0..d {
                for j in (i + 1)..d {
                    let v = self.c(k, i, j);
                    if v != 0.0 {
                        s += &format!("bracket {} {} {} {}\n", i + 1, j + 1, k + 1, v);
                    }
                }
            }
        }
        for r in 0..d {
            let row: Vec<String> = (0..d).map(|c| format!("{}", self.j(r, c))).collect();
            s += &format!("J {} {}\n", r + 1, row.join(" "));
        }
        s
    }
}

/// A basis `Z_a = (f_a - i J f_a) / 2` of the `+i` eigenspace of `J`,
/// with the decomposition of complex vectors into `(1,0)` and `(0,1)` parts.
#[derive(Clone, Debug)]
pub struct ComplexFrame {
    pub n: usize,
    /// Column `a` holds `Z_a` in the real basis.
    pub z: Vec<Vec<C64>>,
    /// Inverse of `[Z | Zbar]`.
    split: DMatrix<C64>,
}

impl ComplexFrame {
    pub fn new(spec: &LieAlgebraSpec) -> Result<Self> {
        let d = spec.dim();
        let n = spec.n();
        let mut chosen: Vec<Vec<f64>> = Vec::new();
        for i in 0..d {
            let e = spec.basis(i);
            let mut trial = chosen.clone();
            trial.push(e.clone());
            trial.push(spec.apply_j(&e));
            let m = DMatrix::from_fn(d, trial.len(), |r, c| trial[c][r]);
            if m.rank(1e-10) == trial.len() {
                chosen = trial;
            }
            if chosen.len() == d {
                break;
            }
        }
        if chosen.len() != d {
            return Err(Error::Algebra(format!("{}: no complex basis adapted to J", spec.id)));
        }
        let z: Vec<Vec<C64>> = (0..n)
            .map(|a| {
                let f = &chosen[2 * a];
                let jf = &chosen[2 * a + 1];
                f.iter().zip(jf).map(|(&x, &y)| C64::new(0.5 * x, -0.5 * y)).collect()
            })
            .collect();
        let m = DMatrix::from_fn(d, d, |r, c| if c < n { z[c][r] } else { z[c - n][r].conj() });
        let split = m.try_inverse().ok_or_else(|| Error::Algebra("complex frame is singular".into()))?;
        Ok(Self { n, z, split })
    }

    pub fn zbar(&self, a: usize) -> Vec<C64> {
        self.z[a].iter().map(|v| v.conj()).collect()
    }

    /// Coefficients `(x, y)` with `v = sum x_a Z_a + sum y_a Zbar_a`.
    pub fn split(&self, v: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let d = 2 * self.n;
        let coef: Vec<C64> = (0..d).map(|r| (0..d).map(|c| self.split[(r, c)] * v[c]).sum()).collect();
        (coef[..self.n].to_vec(), coef[self.n..].to_vec())
    }
}

/// Complex structure constants in a [`ComplexFrame`]:
/// `[Z_a, Z_b] = C^c_{ab} Z_c` and `[Z_a, Zbar_b] = D^c_{ab} Z_c + E^c_{ab} Zbar_c`.
#[derive(Clone, Debug)]
pub struct ComplexBrackets {
    pub n: usize,
    /// `[c][a][b]` flattened.
    pub cc: Vec<C64>,
    pub dd: Vec<C64>,
    pub ee: Vec<C64>,
}

impl ComplexBrackets {
    pub fn new(spec: &LieAlgebraSpec, frame: &ComplexFrame) -> Result<Self> {
        let n = frame.n;
        let zero = C64::new(0.0, 0.0);
        let mut cc = vec![zero; n * n * n];
        let mut dd = cc.clone();
        let mut ee = cc.clone();
        for a in 0..n {
            for b in 0..n {
                let (x, y) = frame.split(&spec.bracket(&frame.z[a], &frame.z[b]));
                if y.iter().any(|v| v.norm() > 1e-10) {
                    return Err(Error::Algebra(format!("{}: (1,0) vectors do not close under the bracket", spec.id)));
                }
                let (xm, ym) = frame.split(&spec.bracket(&frame.z[a], &frame.zbar(b)));
                for c in 0..n {
                    cc[(c * n + a) * n + b] = x[c];
                    dd[(c * n + a) * n + b] = xm[c];
                    ee[(c * n + a) * n + b] = ym[c];
                }
            }
        }
        Ok(Self { n, cc, dd, ee })
    }

    pub fn c(&self, c: usize, a: usize, b: usize) -> C64 {
        self.cc[(c * self.n + a) * self.n + b]
    }

    pub fn d(&self, c: usize, a: usize, b: usize) -> C64 {
        self.dd[(c * self.n + a) * self.n + b]
    }

    pub fn e(&self, c: usize, a: usize, b: usize) -> C64 {
        self.ee[(c * self.n + a) * self.n + b]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard_j(dim: usize) -> Vec<f64> {
        let mut j = vec![0.0; dim * dim];
        for a in 0..dim / 2 {
            j[(2 * a + 1) * dim + 2 * a] = 1.0;
            j[(2 * a) * dim + 2 * a + 1] = -1.0;
        }
        j
    }

    #[test]
    fn rejects_jacobi_violation() {
        // [e1, e2] = e3, [e1, e3] = e1 violates Jacobi on (e1, e2, e3).
        let br = [(0, 1, 2, 1.0), (0, 2, 0, 1.0)];
        let e = LieAlgebraSpec::new("bad", 4, &br, standard_j(4)).unwrap_err();
        assert!(e.to_string().contains("Jacobi"), "{e}");
    }

    #[test]
    fn rejects_inconsistent_antisymmetry() {
        let br = [(0, 1, 3, 1.0), (1, 0, 3, 1.0)];
        assert!(LieAlgebraSpec::new("ok", 4, &[(0, 1, 3, 1.0), (1, 0, 3, -1.0)], standard_j(4)).is_ok());
        let e = LieAlgebraSpec::new("bad", 4, &br, standard_j(4)).unwrap_err();
        assert!(e.to_string().contains("antisymmetry"), "{e}");
    }

    #[test]
    fn rejects_non_integrable_structure() {
        // Heisenberg x R with J mixing the center into the bracket plane.
        let br = [(0, 1, 2, 1.0)];
        let mut j = vec![0.0; 16];
        // J e1 = e3, J e2 = e4.
        j[2 * 4] = 1.0;
        j[2] = -1.0;
        j[3 * 4 + 1] = 1.0;
        j[4 + 3] = -1.0;
        let e = LieAlgebraSpec::new("bad", 4, &br, j).unwrap_err();
        assert!(e.to_string().contains("Nijenhuis"), "{e}");
    }

    #[test]
    fn rejects_bad_complex_structure() {
        let mut j = standard_j(4);
        j[1] = -2.0;
        assert!(LieAlgebraSpec::new("bad", 4, &[], j).is_err());
    }

    #[test]
    fn catalog_roundtrip() {
        let text = "algebra heis\ndim 4\nbracket 1 2 3 -1 # [e1,e2] = -e3\nJ 1 0 -1 0 0\nJ 2 1 0 0 0\nJ 3 0 0 0 -1\nJ 4 0 0 1 0\n";
        let a = LieAlgebraSpec::parse(text).unwrap();
        assert_eq!(a.c(2, 0, 1), -1.0);
        assert_eq!(a.c(2, 1, 0), 1.0);
        assert_eq!(LieAlgebraSpec::parse(&a.to_catalog()).unwrap(), a);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let e = LieAlgebraSpec::parse("algebra x\ndim 2\nbogus 1\n").unwrap_err();
        assert!(matches!(e, Error::Catalog { line: 3, .. }), "{e}");
    }

    #[test]
    fn frame_vectors_are_j_eigenvectors() {
        let a = LieAlgebraSpec::new("ab", 4, &[], standard_j(4)).unwrap();
        let f = ComplexFrame::new(&a).unwrap();
        for z in &f.z {
            let re: Vec<f64> = z.iter().map(|v| v.re).collect();
            let im: Vec<f64> = z.iter().map(|v| v.im).collect();
            let (jre, jim) = (a.apply_j(&re), a.apply_j(&im));
            for k in 0..4 {
                assert!((jre[k] + im[k]).abs() < 1e-14 && (jim[k] - re[k]).abs() < 1e-14);
            }
        }
    }
}
