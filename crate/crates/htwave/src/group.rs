//! Heisenberg-type group algebra.
//!
//! A group is described by `d1` (even), `d2` and skew-symmetric matrices
//! `J_1 .. J_{d2}` of size `d1 x d1` with `J_i J_k + J_k J_i = -2 delta_{ik} I`.
//! Points are pairs `(x, u)` in `R^{d1} x R^{d2}` with the law
//! `(x, u)(x', u') = (x + x', u + u' + 1/2 <J x, x'>)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for the H-type identities.
pub const HTYPE_TOL: f64 = 1e-12;

/// A Heisenberg-type group `R^{d1} x R^{d2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HTypeGroup {
    d1: usize,
    d2: usize,
    j: Vec<DMatrix<f64>>,
}

/// A point `(x, u)` of the group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl GroupElement {
    pub fn new(x: Vec<f64>, u: Vec<f64>) -> Self {
        Self { x, u }
    }

    /// The identity element of a group with the given dimensions.
    pub fn identity(d1: usize, d2: usize) -> Self {
        Self { x: vec![0.0; d1], u: vec![0.0; d2] }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.u.iter()).all(|v| v.is_finite())
    }
}

/// Outcome of [`validate_htype`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// `max_i max |J_i + J_i^T|`.
    pub skew_violation: f64,
    /// `max(max_i |J_i^2 + I|, max_{i != k} |J_i J_k + J_k J_i|)`, entrywise.
    pub anticommutation_violation: f64,
    /// Human-readable list of failing identities.
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn max_violation(&self) -> f64 {
        self.skew_violation.max(self.anticommutation_violation)
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
}

/// Checks skewness and the anticommutation relations `J_i J_k + J_k J_i = -2 delta_{ik} I`.
///
/// A report is returned for any well-shaped input; shape problems are errors.
pub fn validate_htype(j: &[DMatrix<f64>]) -> Result<ValidationReport> {
    let first = j
        .first()
        .ok_or_else(|| Error::Dimension("at least one structure matrix is required".into()))?;
    let d1 = first.nrows();
    for (i, m) in j.iter().enumerate() {
        if m.nrows() != d1 || m.ncols() != d1 {
            return Err(Error::Dimension(format!(
                "J_{} is {}x{}, expected {d1}x{d1}",
                i + 1,
                m.nrows(),
                m.ncols()
            )));
        }
    }
    if d1 == 0 || d1 % 2 == 1 {
        return Err(Error::InvalidArgument(format!("d1 = {d1} must be even and positive")));
    }
    let mut failures = Vec::new();
    let mut skew = 0.0_f64;
    for (i, m) in j.iter().enumerate() {
        let v = max_abs(&(m + m.transpose()));
        if v > HTYPE_TOL {
            failures.push(format!("J_{} not skew-symmetric (violation {v:.3e})", i + 1));
        }
        skew = skew.max(v);
    }
    let mut anti = 0.0_f64;
    let id = DMatrix::<f64>::identity(d1, d1);
    for i in 0..j.len() {
        for k in i..j.len() {
            // Diagonal identities are checked in the form J_i^2 = -I.
            let s = if i == k { &j[i] * &j[i] + &id } else { &j[i] * &j[k] + &j[k] * &j[i] };
            let v = max_abs(&s);
            if v > HTYPE_TOL {
                failures.push(format!(
                    "J_{}J_{} + J_{}J_{} != {} (violation {v:.3e})",
                    i + 1,
                    k + 1,
                    k + 1,
                    i + 1,
                    if i == k { "-2I" } else { "0" }
                ));
            }
            anti = anti.max(v);
        }
    }
    Ok(ValidationReport { skew_violation: skew, anticommutation_violation: anti, failures })
}

/// The canonical symplectic matrix `[[0, I], [-I, 0]]` of size `d1`.
pub fn canonical_symplectic(d1: usize) -> DMatrix<f64> {
    let m = d1 / 2;
    let mut j = DMatrix::zeros(d1, d1);
    for i in 0..m {
        j[(i, m + i)] = 1.0;
        j[(m + i, i)] = -1.0;
    }
    j
}

/// Configuration record accepted by [`HTypeGroup::from_config`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupConfig {
    Preset {
        preset: String,
        #[serde(default)]
        m: Option<usize>,
    },
    Explicit {
        j: Vec<Vec<Vec<f64>>>,
    },
}

impl HTypeGroup {
    /// Builds a group from its structure matrices, rejecting anything that is not H-type.
    pub fn new(j: Vec<DMatrix<f64>>) -> Result<Self> {
        let report = validate_htype(&j)?;
        if !report.passes() {
            return Err(Error::InvalidArgument(format!(
                "not an H-type structure: {}",
                report.failures.join("; ")
            )));
        }
        let d1 = j[0].nrows();
        let d2 = j.len();
        Ok(Self { d1, d2, j })
    }

    /// The Heisenberg group of dimension `2m + 1`.
    pub fn heisenberg(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("Heisenberg parameter m must be >= 1".into()));
        }
        Self::new(vec![canonical_symplectic(2 * m)])
    }

    /// The quaternionic group `R^4 x R^3`, with `J_1, J_2, J_3` the left
    /// multiplications by `i`, `j`, `k` on `H = R^4` (basis `1, i, j, k`).
    pub fn quaternionic() -> Self {
        // Column c of L_q holds the coordinates of q * e_c.
        let images: [[(usize, f64); 4]; 3] = [
            [(1, 1.0), (0, -1.0), (3, 1.0), (2, -1.0)],
            [(2, 1.0), (3, -1.0), (0, -1.0), (1, 1.0)],
            [(3, 1.0), (2, 1.0), (1, -1.0), (0, -1.0)],
        ];
        let j = images
            .iter()
            .map(|cols| {
                let mut m = DMatrix::zeros(4, 4);
                for (c, &(r, s)) in cols.iter().enumerate() {
                    m[(r, c)] = s;
                }
                m
            })
            .collect();
        Self::new(j).expect("quaternionic structure is H-type")
    }

    /// Parses `{"preset": "heisenberg", "m": 1}`, `{"preset": "quaternionic"}`
    /// or `{"j": [[[..]..]..]}` (explicit matrices, row-major nested arrays).
    pub fn from_config(cfg: &GroupConfig) -> Result<Self> {
        match cfg {
            GroupConfig::Preset { preset, m } => match preset.as_str() {
                "heisenberg" => Self::heisenberg(m.unwrap_or(1)),
                "quaternionic" => Ok(Self::quaternionic()),
                other => Err(Error::InvalidArgument(format!("unknown group preset '{other}'"))),
            },
            GroupConfig::Explicit { j } => {
                let mut mats = Vec::with_capacity(j.len());
                for (i, rows) in j.iter().enumerate() {
                    let n = rows.len();
                    if rows.iter().any(|r| r.len() != n) {
                        return Err(Error::Dimension(format!("J_{} is not square", i + 1)));
                    }
                    mats.push(DMatrix::from_fn(n, n, |a, b| rows[a][b]));
                }
                Self::new(mats)
            }
        }
    }

    /// Parses a JSON configuration string, see [`HTypeGroup::from_config`].
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: GroupConfig = serde_json::from_str(s)?;
        Self::from_config(&cfg)
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    /// Topological dimension `d1 + d2`.
    pub fn dim(&self) -> usize {
        self.d1 + self.d2
    }

    /// Homogeneous dimension `d1 + 2 d2`.
    pub fn homogeneous_dim(&self) -> usize {
        self.d1 + 2 * self.d2
    }

    pub fn structure_matrices(&self) -> &[DMatrix<f64>] {
        &self.j
    }

    fn check(&self, p: &GroupElement) -> Result<()> {
        if p.x.len() != self.d1 || p.u.len() != self.d2 {
            return Err(Error::Dimension(format!(
                "element has dims ({}, {}), group has ({}, {})",
                p.x.len(),
                p.u.len(),
                self.d1,
                self.d2
            )));
        }
        Ok(())
    }

    /// The vector `(<J_i x, y>)_i`.
    pub fn jvec_pairing(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.j
            .iter()
            .map(|m| {
                let mut s = 0.0;
                for a in 0..self.d1 {
                    let mut jx = 0.0;
                    for b in 0..self.d1 {
                        jx += m[(a, b)] * x[b];
                    }
                    s += jx * y[a];
                }
                s
            })
            .collect()
    }

    /// Group law `(x + x', u + u' + 1/2 <J x, x'>)`.
    pub fn multiply(&self, p: &GroupElement, q: &GroupElement) -> Result<GroupElement> {
        self.check(p)?;
        self.check(q)?;
        let pair = self.jvec_pairing(&p.x, &q.x);
        Ok(GroupElement {
            x: p.x.iter().zip(&q.x).map(|(a, b)| a + b).collect(),
            u: (0..self.d2).map(|i| p.u[i] + q.u[i] + 0.5 * pair[i]).collect(),
        })
    }

    /// Group inverse `(-x, -u)`.
    pub fn inverse(&self, p: &GroupElement) -> Result<GroupElement> {
        self.check(p)?;
        Ok(GroupElement { x: p.x.iter().map(|v| -v).collect(), u: p.u.iter().map(|v| -v).collect() })
    }

    /// Left-invariant quasi-distance `|x - y| + |u - v + 1/2 <J x, y>|`.
    pub fn isotropic_distance(&self, p: &GroupElement, q: &GroupElement) -> Result<f64> {
        self.check(p)?;
        self.check(q)?;
        let pair = self.jvec_pairing(&p.x, &q.x);
        let dx = norm(&p.x.iter().zip(&q.x).map(|(a, b)| a - b).collect::<Vec<_>>());
        let du = norm(&(0..self.d2).map(|i| p.u[i] - q.u[i] + 0.5 * pair[i]).collect::<Vec<_>>());
        Ok(dx + du)
    }

    /// `J_mu = sum_i mu_i J_i`.
    pub fn build_jmu(&self, mu: &[f64]) -> Result<DMatrix<f64>> {
        if mu.len() != self.d2 {
            return Err(Error::Dimension(format!("mu has length {}, expected {}", mu.len(), self.d2)));
        }
        let mut m = DMatrix::zeros(self.d1, self.d1);
        for (ji, &c) in self.j.iter().zip(mu) {
            m += ji * c;
        }
        Ok(m)
    }

    /// An orthogonal `R_mu` with `J_mu = |mu| R_mu J R_mu^T`, `J` canonical.
    ///
    /// Built by symplectic Gram-Schmidt: with `S = J_mu / |mu|` (orthogonal and
    /// skew), each new unit vector `X` orthogonal to the current span is paired
    /// with `Y = -S X`; the columns of `R_mu` are `(X_1..X_m, Y_1..Y_m)`.
    pub fn symplectic_rotation(&self, mu: &[f64]) -> Result<DMatrix<f64>> {
        let n = norm(mu);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidArgument("symplectic rotation needs mu != 0".into()));
        }
        let s = self.build_jmu(mu)? / n;
        let d1 = self.d1;
        let m = d1 / 2;
        let mut xs: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(m);
        let mut ys: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(m);
        for e in 0..d1 {
            if xs.len() == m {
                break;
            }
            let mut v = nalgebra::DVector::<f64>::zeros(d1);
            v[e] = 1.0;
            // Two passes of modified Gram-Schmidt for stability.
            for _ in 0..2 {
                for b in xs.iter().chain(ys.iter()) {
                    let c = b.dot(&v);
                    v -= b * c;
                }
            }
            let vn = v.norm();
            if vn < 0.5 {
                continue;
            }
            v /= vn;
            let y = -(&s * &v);
            xs.push(v);
            ys.push(y);
        }
        if xs.len() != m {
            return Err(Error::InvalidArgument("symplectic basis construction failed".into()));
        }
        let mut r = DMatrix::zeros(d1, d1);
        for i in 0..m {
            r.set_column(i, &xs[i]);
            r.set_column(m + i, &ys[i]);
        }
        Ok(r)
    }
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Koranyi norm `(|x|^4 + |4u|^2)^{1/4}`.
pub fn koranyi_norm(p: &GroupElement) -> f64 {
    let x2: f64 = p.x.iter().map(|a| a * a).sum();
    let u2: f64 = p.u.iter().map(|a| a * a).sum();
    (x2 * x2 + 16.0 * u2).powf(0.25)
}

/// Automorphic dilation `(r x, r^2 u)`.
pub fn dilate(p: &GroupElement, r: f64) -> Result<GroupElement> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("dilation factor {r} must be positive")));
    }
    Ok(GroupElement {
        x: p.x.iter().map(|a| a * r).collect(),
        u: p.u.iter().map(|a| a * r * r).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heis() -> HTypeGroup {
        HTypeGroup::heisenberg(1).unwrap()
    }

    #[test]
    fn heisenberg_and_quaternionic_are_htype() {
        assert!(validate_htype(heis().structure_matrices()).unwrap().passes());
        let q = HTypeGroup::quaternionic();
        let rep = validate_htype(q.structure_matrices()).unwrap();
        assert!(rep.passes(), "{rep:?}");
        assert_eq!(rep.max_violation(), 0.0);
    }

    #[test]
    fn scaled_symplectic_is_rejected_with_violation_three() {
        let j = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]);
        let rep = validate_htype(&[j]).unwrap();
        assert!(!rep.passes());
        // J^2 = -4I, so |J^2 + I| = 3.
        assert!((rep.anticommutation_violation - 3.0).abs() < 1e-15);
    }

    #[test]
    fn shape_errors() {
        let odd = DMatrix::<f64>::zeros(3, 3);
        assert!(matches!(validate_htype(&[odd]), Err(Error::InvalidArgument(_))));
        let a = DMatrix::<f64>::zeros(2, 2);
        let b = DMatrix::<f64>::zeros(4, 4);
        assert!(matches!(validate_htype(&[a, b]), Err(Error::Dimension(_))));
    }

    #[test]
    fn heisenberg_product_of_basis_vectors() {
        let g = heis();
        let p = GroupElement::new(vec![1.0, 0.0], vec![0.0]);
        let q = GroupElement::new(vec![0.0, 1.0], vec![0.0]);
        let r = g.multiply(&p, &q).unwrap();
        assert_eq!(r.x, vec![1.0, 1.0]);
        // <J e1, e2> with J = [[0,1],[-1,0]]: J e1 = (0, -1), so the pairing is -1.
        assert_eq!(r.u, vec![-0.5]);
    }

    #[test]
    fn koranyi_examples() {
        let p = GroupElement::new(vec![1.0, 0.0], vec![0.25]);
        assert!((koranyi_norm(&p) - 2f64.powf(0.25)).abs() < 1e-15);
        let p = GroupElement::new(vec![0.0, 0.0], vec![4.0]);
        assert!((koranyi_norm(&p) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn dilation_example_and_error() {
        let p = GroupElement::new(vec![1.0, 0.0], vec![1.0]);
        assert_eq!(dilate(&p, 2.0).unwrap(), GroupElement::new(vec![2.0, 0.0], vec![4.0]));
        assert!(dilate(&p, 0.0).is_err());
    }

    #[test]
    fn rotation_identity_for_canonical_mu_one() {
        let g = heis();
        let r = g.symplectic_rotation(&[1.0]).unwrap();
        assert!((r - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-15);
        assert!(g.symplectic_rotation(&[0.0]).is_err());
    }

    #[test]
    fn config_parsing() {
        assert_eq!(HTypeGroup::from_json(r#"{"preset":"heisenberg","m":2}"#).unwrap().d1(), 4);
        assert_eq!(HTypeGroup::from_json(r#"{"preset":"quaternionic"}"#).unwrap().d2(), 3);
        let g = HTypeGroup::from_json(r#"{"j":[[[0,1],[-1,0]]]}"#).unwrap();
        assert_eq!(g, heis());
        assert!(HTypeGroup::from_json(r#"{"j":[[[0,2],[-2,0]]]}"#).is_err());
        assert!(HTypeGroup::from_json(r#"{"preset":"nope"}"#).is_err());
    }
}
