//! Linearization, oscillatory-mode selection, left-eigenvector
//! normalization and the map into modal coordinates.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::{compose_truncated, monomials_of_degree, PolyMap};
use crate::power::EquilibriumJet;

const PAIR_TOL: f64 = 1e-6;
const MAX_CONDITION: f64 = 1e8;
const GROUPING_MARGIN: f64 = 1e-3;

/// Retained oscillatory modes of a linearization.
///
/// `eigenvalues[2i]` has positive imaginary part and `eigenvalues[2i+1]` is
/// its conjugate. Pairs are sorted by descending frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalBasis {
    pub eigenvalues: Vec<Complex64>,
    /// Right eigenvectors as columns (`n x N`).
    pub right: DMatrix<Complex64>,
    /// Left eigenvectors as rows (`N x n`), `left * right = I`.
    pub left: DMatrix<Complex64>,
    /// Discarded real eigenvalues.
    pub dropped: Vec<Complex64>,
    /// Displacement-like states used by the normalization.
    pub displacement_states: Vec<usize>,
}

impl ModalBasis {
    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max)
    }
}

/// Null vector of a square complex matrix via its smallest singular value.
fn null_vector(m: DMatrix<Complex64>) -> Vec<Complex64> {
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, &s)| if s < best.1 { (i, s) } else { best });
    v_t.row(idx).iter().map(|c| c.conj()).collect()
}

/// Eigendecomposition of the jet's linear part, keeping conjugate pairs.
pub fn eigendecompose(jet: &EquilibriumJet) -> Result<ModalBasis> {
    let n = jet.dim();
    let a = jet.jet.linear().map(|c| c.re);
    if jet.jet.linear().iter().any(|c| c.im.abs() > 1e-12) {
        return Err(Error::InvalidArgument("jet linear part is not real".into()));
    }
    let eigs: Vec<Complex64> = Schur::new(a.clone()).complex_eigenvalues().iter().copied().collect();
    let scale = eigs.iter().map(|l| l.norm()).fold(1.0, f64::max);

    let mut used = vec![false; n];
    let mut pairs = Vec::new();
    let mut real = Vec::new();
    for i in 0..n {
        if used[i] {
            continue;
        }
        let l = eigs[i];
        if l.im.abs() <= 1e-9 * scale {
            used[i] = true;
            real.push(Complex64::new(l.re, 0.0));
            continue;
        }
        let target = l.conj();
        let partner = (0..n)
            .filter(|&j| j != i && !used[j])
            .min_by(|&x, &y| (eigs[x] - target).norm().total_cmp(&(eigs[y] - target).norm()));
        match partner {
            Some(j) if (eigs[j] - target).norm() <= PAIR_TOL * l.norm().max(1.0) => {
                used[i] = true;
                used[j] = true;
                let upper = if l.im > 0.0 { l } else { eigs[j] };
                pairs.push(upper);
            }
            _ => return Err(Error::UnpairedComplexEigenvalue { re: l.re, im: l.im }),
        }
    }
    pairs.sort_by(|x, y| y.im.total_cmp(&x.im));

    let ac = a.map(|v| Complex64::new(v, 0.0));
    let shifted = |l: Complex64| &ac - DMatrix::<Complex64>::identity(n, n) * l;
    let mut all = DMatrix::<Complex64>::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(2 * pairs.len());
    for (p, &l) in pairs.iter().enumerate() {
        let v = null_vector(shifted(l));
        for r in 0..n {
            all[(r, 2 * p)] = v[r];
            all[(r, 2 * p + 1)] = v[r].conj();
        }
        eigenvalues.push(l);
        eigenvalues.push(l.conj());
    }
    for (q, &l) in real.iter().enumerate() {
        let mut v = null_vector(shifted(l));
        // rotate to a real vector
        let big = v.iter().copied().fold(Complex64::zero(), |b, c| if c.norm() > b.norm() { c } else { b });
        if big.norm() > 0.0 {
            let phase = big.conj() / big.norm();
            for c in &mut v {
                *c = Complex64::new((*c * phase).re, 0.0);
            }
        }
        for r in 0..n {
            all[(r, 2 * pairs.len() + q)] = v[r];
        }
    }
    let inv = all.clone().try_inverse().ok_or(Error::DefectiveMatrix { condition: f64::INFINITY })?;
    let condition = all.norm() * inv.norm();
    if !(condition < MAX_CONDITION) {
        return Err(Error::DefectiveMatrix { condition });
    }
    let nk = eigenvalues.len();
    let right = all.columns(0, nk).into_owned();
    let mut left = inv.rows(0, nk).into_owned();
    for p in 0..pairs.len() {
        for c in 0..n {
            left[(2 * p + 1, c)] = left[(2 * p, c)].conj();
        }
    }
    let displacement_states = if jet.displacement_states.is_empty() { (0..n).collect() } else { jet.displacement_states.clone() };
    Ok(ModalBasis { eigenvalues, right, left, dropped: real, displacement_states })
}

/// Rescale each mode so that one group of same-signed displacement entries
/// of its left eigenvector sums to one.
///
/// The group is the one containing the machine with the largest mode-shape
/// displacement; entries are split into two half-planes relative to that
/// machine's left-eigenvector entry.
pub fn normalize_basis(basis: &ModalBasis) -> Result<ModalBasis> {
    let mut out = basis.clone();
    let n = basis.right.nrows();
    for mode in 0..basis.n_modes() {
        let row = 2 * mode;
        let disp = &basis.displacement_states;
        let reference = *disp
            .iter()
            .max_by(|&&a, &&b| basis.right[(a, row)].norm().total_cmp(&basis.right[(b, row)].norm()))
            .ok_or_else(|| Error::InvalidArgument("no displacement states".into()))?;
        let mut anchor = basis.left[(row, reference)];
        let largest = disp.iter().map(|&j| basis.left[(row, j)].norm()).fold(0.0, f64::max);
        if anchor.norm() <= 1e-9 * largest {
            // reference machine barely observes the mode; orient by the largest entry
            anchor = disp
                .iter()
                .map(|&j| basis.left[(row, j)])
                .fold(Complex64::zero(), |b, c| if c.norm() > b.norm() { c } else { b });
        }
        let mut sum = Complex64::zero();
        for &j in disp {
            let entry = basis.left[(row, j)];
            if entry.norm() <= 1e-9 * largest {
                continue;
            }
            let angle = (entry / anchor).arg().abs();
            if (angle - FRAC_PI_2).abs() < GROUPING_MARGIN {
                return Err(Error::AmbiguousGrouping { mode });
            }
            if angle < FRAC_PI_2 {
                sum += entry;
            }
        }
        if sum.norm() == 0.0 {
            return Err(Error::AmbiguousGrouping { mode });
        }
        for c in 0..n {
            out.left[(row, c)] = basis.left[(row, c)] / sum;
            out.left[(row + 1, c)] = out.left[(row, c)].conj();
            out.right[(c, row)] = basis.right[(c, row)] * sum;
            out.right[(c, row + 1)] = out.right[(c, row)].conj();
        }
    }
    Ok(out)
}

/// `V F(U z)`: the jet in modal coordinates, with the linear part set to
/// `diag(eigenvalues)` and exact conjugate-pair closure.
pub fn to_modal(jet: &EquilibriumJet, basis: &ModalBasis) -> Result<PolyMap> {
    let k = jet.jet.max_degree();
    let u = PolyMap::from_linear(basis.right.clone(), k);
    let mut modal = compose_truncated(&jet.jet, &u, k)?.left_mul(&basis.left)?;
    let nk = basis.dim();
    let diag = DMatrix::from_fn(nk, nk, |r, c| if r == c { basis.eigenvalues[r] } else { Complex64::zero() });
    *modal.linear_mut() = diag;
    let mut i = 0;
    while i + 1 < nk {
        let terms: Vec<_> = modal.nonlinear(i).iter().map(|(m, c)| (m.pair_swapped(), c.conj())).collect();
        let stale: Vec<_> = modal.nonlinear(i + 1).keys().cloned().collect();
        for m in stale {
            modal.remove_term(i + 1, &m);
        }
        for (m, c) in terms {
            modal.set_term(i + 1, m, c);
        }
        i += 2;
    }
    Ok(modal)
}

/// Largest off-diagonal entry of `V A U`, relative to the spectral radius.
pub fn diagonalization_defect(jet: &EquilibriumJet, basis: &ModalBasis) -> f64 {
    let m = &basis.left * jet.jet.linear() * &basis.right;
    let mut worst: f64 = 0.0;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if r != c {
                worst = worst.max(m[(r, c)].norm());
            }
        }
    }
    worst / basis.max_abs_eigenvalue().max(1.0)
}

/// `lambda_target = sum multipliers[j] * lambda_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Resonance {
    pub target: usize,
    pub multipliers: Vec<u8>,
    pub order: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ResonanceReport {
    /// Residual below the tolerance.
    pub exact: Vec<Resonance>,
    /// Residual below 100 times the tolerance but not exact.
    pub near: Vec<Resonance>,
}

pub fn check_resonance(eigs: &[Complex64], k: usize, tol: f64) -> ResonanceReport {
    let mut report = ResonanceReport::default();
    let n = eigs.len();
    for order in 2..=k {
        for m in monomials_of_degree(n, order) {
            let combo: Complex64 = m.exponents().iter().zip(eigs).map(|(&e, l)| l * e as f64).sum();
            for (s, l) in eigs.iter().enumerate() {
                let residual = (l - combo).norm();
                if residual < 100.0 * tol {
                    let r = Resonance { target: s, multipliers: m.exponents().to_vec(), order, residual };
                    if residual < tol {
                        report.exact.push(r);
                    } else {
                        report.near.push(r);
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_two_resonance() {
        let j = |v: f64| Complex64::new(0.0, v);
        let r = check_resonance(&[j(2.0), j(-2.0), j(4.0), j(-4.0)], 2, 1e-9);
        assert!(r.exact.iter().any(|x| x.target == 2 && x.multipliers == vec![2, 0, 0, 0] && x.order == 2));
    }

    #[test]
    fn damped_pair_has_no_self_resonance() {
        let l = Complex64::new(-0.25, 3.0);
        let r = check_resonance(&[l, l.conj()], 3, 1e-6);
        assert!(r.exact.is_empty());
    }
}
