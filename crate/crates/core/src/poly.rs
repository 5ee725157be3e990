//! Sparse multivariate polynomial maps over `Complex64`, truncated at a
//! fixed total degree.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Coefficients smaller than this are dropped after arithmetic.
pub const DROP_TOL: f64 = 1e-12;

/// Number of monomials of exactly `degree` in `n_vars` variables.
pub fn monomial_count(n_vars: usize, degree: usize) -> usize {
    binomial(n_vars + degree - 1, degree)
}

/// All monomials of exactly `degree` in `n_vars` variables, in ascending order.
pub fn monomials_of_degree(n_vars: usize, degree: usize) -> Vec<Monomial> {
    fn rec(prefix: &mut Vec<u8>, left: usize, n: usize, out: &mut Vec<Monomial>) {
        if prefix.len() + 1 == n {
            prefix.push(left as u8);
            out.push(Monomial(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in 0..=left {
            prefix.push(e as u8);
            rec(prefix, left - e, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity(monomial_count(n_vars, degree));
    if n_vars > 0 {
        rec(&mut Vec::with_capacity(n_vars), degree, n_vars, &mut out);
    }
    out
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Exponent vector of a monomial. Ordered lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<u8>);

impl Monomial {
    pub fn new(exponents: Vec<u8>) -> Self {
        Monomial(exponents)
    }

    pub fn one(n_vars: usize) -> Self {
        Monomial(vec![0; n_vars])
    }

    /// The single variable `index`.
    pub fn var(n_vars: usize, index: usize) -> Self {
        let mut e = vec![0; n_vars];
        e[index] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn n_vars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Variables with a nonzero exponent.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, _)| i)
    }

    /// Swap exponents of each adjacent pair `(2j, 2j+1)`.
    pub fn pair_swapped(&self) -> Monomial {
        let mut e = self.0.clone();
        for pair in e.chunks_mut(2) {
            if pair.len() == 2 {
                pair.swap(0, 1);
            }
        }
        Monomial(e)
    }

    pub fn eval(&self, point: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (x, &e) in point.iter().zip(&self.0) {
            for _ in 0..e {
                acc *= x;
            }
        }
        acc
    }
}

/// One polynomial: a sparse map from monomials to coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly {
    n_vars: usize,
    terms: BTreeMap<Monomial, Complex64>,
}

impl Poly {
    pub fn zero(n_vars: usize) -> Self {
        Poly { n_vars, terms: BTreeMap::new() }
    }

    pub fn constant(n_vars: usize, c: Complex64) -> Self {
        let mut p = Poly::zero(n_vars);
        p.add_term(Monomial::one(n_vars), c);
        p
    }

    /// Linear form `sum coeffs[j] * x_j`.
    pub fn linear(coeffs: &[Complex64]) -> Self {
        let n = coeffs.len();
        let mut p = Poly::zero(n);
        for (j, &c) in coeffs.iter().enumerate() {
            p.add_term(Monomial::var(n, j), c);
        }
        p
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Complex64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> Complex64 {
        self.terms.get(m).copied().unwrap_or_else(Complex64::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: Complex64) {
        debug_assert_eq!(m.n_vars(), self.n_vars);
        let entry = self.terms.entry(m).or_insert_with(Complex64::zero);
        *entry += c;
    }

    pub fn add_scaled(&mut self, other: &Poly, s: Complex64) {
        for (m, &c) in &other.terms {
            self.add_term(m.clone(), c * s);
        }
    }

    pub fn scaled(&self, s: Complex64) -> Poly {
        let mut p = Poly::zero(self.n_vars);
        p.add_scaled(self, s);
        p.prune();
        p
    }

    /// Drop near-zero coefficients.
    pub fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() >= DROP_TOL);
    }

    pub fn mul_truncated(&self, other: &Poly, k: usize) -> Poly {
        let mut out = Poly::zero(self.n_vars);
        for (ma, &ca) in &self.terms {
            let da = ma.degree();
            for (mb, &cb) in &other.terms {
                if da + mb.degree() <= k {
                    out.add_term(ma.mul(mb), ca * cb);
                }
            }
        }
        out.prune();
        out
    }

    /// Terms of exactly degree `d`.
    pub fn degree_part(&self, d: usize) -> Poly {
        Poly {
            n_vars: self.n_vars,
            terms: self.terms.iter().filter(|(m, _)| m.degree() == d).map(|(m, c)| (m.clone(), *c)).collect(),
        }
    }

    pub fn max_degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, point: &[Complex64]) -> Complex64 {
        self.terms.iter().map(|(m, c)| c * m.eval(point)).sum()
    }
}

/// A vector field whose components are polynomials truncated at `max_degree`.
///
/// Degree-one terms live in `linear` (`n_out x n_vars`); degrees `2..=max_degree`
/// live in the sparse per-component maps. There is no constant term.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMap {
    n_vars: usize,
    max_degree: usize,
    linear: DMatrix<Complex64>,
    nonlinear: Vec<BTreeMap<Monomial, Complex64>>,
}

impl PolyMap {
    pub fn zero(n_out: usize, n_vars: usize, max_degree: usize) -> Self {
        PolyMap {
            n_vars,
            max_degree,
            linear: DMatrix::zeros(n_out, n_vars),
            nonlinear: vec![BTreeMap::new(); n_out],
        }
    }

    pub fn identity(n: usize, max_degree: usize) -> Self {
        Self::from_linear(DMatrix::identity(n, n), max_degree)
    }

    pub fn from_linear(linear: DMatrix<Complex64>, max_degree: usize) -> Self {
        let mut m = Self::zero(linear.nrows(), linear.ncols(), max_degree);
        m.linear = linear;
        m
    }

    /// Assemble from one full polynomial per component. Constant terms are
    /// rejected; terms above `max_degree` are discarded.
    pub fn from_polys(polys: &[Poly], n_vars: usize, max_degree: usize) -> Result<Self> {
        let mut m = Self::zero(polys.len(), n_vars, max_degree);
        for (i, p) in polys.iter().enumerate() {
            if p.n_vars() != n_vars {
                return Err(Error::DimensionMismatch { expected: n_vars, found: p.n_vars() });
            }
            for (mono, &c) in p.terms() {
                match mono.degree() {
                    0 => {
                        if c.norm() >= DROP_TOL {
                            return Err(Error::InvalidArgument("polynomial map has a constant term".into()));
                        }
                    }
                    1 => {
                        let j = mono.support().next().unwrap_or(0);
                        m.linear[(i, j)] += c;
                    }
                    d if d <= max_degree => {
                        m.add_term(i, mono.clone(), c);
                    }
                    _ => {}
                }
            }
        }
        m.prune();
        Ok(m)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_out(&self) -> usize {
        self.nonlinear.len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn linear(&self) -> &DMatrix<Complex64> {
        &self.linear
    }

    pub fn linear_mut(&mut self) -> &mut DMatrix<Complex64> {
        &mut self.linear
    }

    pub fn nonlinear(&self, component: usize) -> &BTreeMap<Monomial, Complex64> {
        &self.nonlinear[component]
    }

    pub fn coeff(&self, component: usize, m: &Monomial) -> Complex64 {
        if m.degree() == 1 {
            let j = m.support().next().unwrap_or(0);
            return self.linear[(component, j)];
        }
        self.nonlinear[component].get(m).copied().unwrap_or_else(Complex64::zero)
    }

    /// Add `c` to the coefficient of a nonlinear monomial.
    pub fn add_term(&mut self, component: usize, m: Monomial, c: Complex64) {
        debug_assert!(m.degree() >= 2 && m.degree() <= self.max_degree);
        let entry = self.nonlinear[component].entry(m).or_insert_with(Complex64::zero);
        *entry += c;
    }

    pub fn set_term(&mut self, component: usize, m: Monomial, c: Complex64) {
        if c.norm() < DROP_TOL {
            self.nonlinear[component].remove(&m);
        } else {
            self.nonlinear[component].insert(m, c);
        }
    }

    pub fn remove_term(&mut self, component: usize, m: &Monomial) {
        self.nonlinear[component].remove(m);
    }

    pub fn prune(&mut self) {
        for comp in &mut self.nonlinear {
            comp.retain(|_, c| c.norm() >= DROP_TOL);
        }
    }

    /// True when there are no nonlinear terms.
    pub fn is_linear(&self) -> bool {
        self.nonlinear.iter().all(BTreeMap::is_empty)
    }

    /// Component `i` as one polynomial (linear plus nonlinear terms).
    pub fn component(&self, i: usize) -> Poly {
        let mut p = Poly::zero(self.n_vars);
        for j in 0..self.n_vars {
            let c = self.linear[(i, j)];
            if c.norm() >= DROP_TOL {
                p.add_term(Monomial::var(self.n_vars, j), c);
            }
        }
        for (m, &c) in &self.nonlinear[i] {
            p.add_term(m.clone(), c);
        }
        p
    }

    /// Nonlinear terms of exactly degree `d` (`d >= 2`), as a new map with a
    /// zero linear part.
    pub fn degree_part(&self, d: usize) -> PolyMap {
        let mut out = PolyMap::zero(self.n_out(), self.n_vars, self.max_degree);
        for (i, comp) in self.nonlinear.iter().enumerate() {
            for (m, &c) in comp {
                if m.degree() == d {
                    out.add_term(i, m.clone(), c);
                }
            }
        }
        out
    }

    /// Same map with a different truncation degree; terms above it are dropped.
    pub fn with_max_degree(&self, k: usize) -> PolyMap {
        let mut out = self.clone();
        out.max_degree = k;
        for comp in &mut out.nonlinear {
            comp.retain(|m, _| m.degree() <= k);
        }
        out
    }

    pub fn add(&self, other: &PolyMap) -> Result<PolyMap> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        out.linear += &other.linear;
        for (i, comp) in other.nonlinear.iter().enumerate() {
            for (m, &c) in comp {
                if m.degree() <= out.max_degree {
                    out.add_term(i, m.clone(), c);
                }
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &PolyMap) -> Result<PolyMap> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn scaled(&self, s: Complex64) -> PolyMap {
        let mut out = self.clone();
        out.linear *= s;
        for comp in &mut out.nonlinear {
            for c in comp.values_mut() {
                *c *= s;
            }
        }
        out.prune();
        out
    }

    /// Left-multiply by a constant matrix: `M * F(z)`.
    pub fn left_mul(&self, m: &DMatrix<Complex64>) -> Result<PolyMap> {
        if m.ncols() != self.n_out() {
            return Err(Error::DimensionMismatch { expected: self.n_out(), found: m.ncols() });
        }
        let mut out = PolyMap::zero(m.nrows(), self.n_vars, self.max_degree);
        out.linear = m * &self.linear;
        for r in 0..m.nrows() {
            for (i, comp) in self.nonlinear.iter().enumerate() {
                let w = m[(r, i)];
                if w.norm() == 0.0 {
                    continue;
                }
                for (mono, &c) in comp {
                    out.add_term(r, mono.clone(), w * c);
                }
            }
        }
        out.prune();
        Ok(out)
    }

    fn check_same_shape(&self, other: &PolyMap) -> Result<()> {
        if self.n_vars != other.n_vars {
            return Err(Error::DimensionMismatch { expected: self.n_vars, found: other.n_vars });
        }
        if self.n_out() != other.n_out() {
            return Err(Error::DimensionMismatch { expected: self.n_out(), found: other.n_out() });
        }
        Ok(())
    }

    pub fn eval(&self, point: &[Complex64]) -> Result<Vec<Complex64>> {
        if point.len() != self.n_vars {
            return Err(Error::DimensionMismatch { expected: self.n_vars, found: point.len() });
        }
        let mut out = vec![Complex64::zero(); self.n_out()];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::zero();
            for (j, x) in point.iter().enumerate() {
                acc += self.linear[(i, j)] * x;
            }
            for (m, c) in &self.nonlinear[i] {
                acc += c * m.eval(point);
            }
            *o = acc;
        }
        Ok(out)
    }

    /// Jacobian of the nonlinear part `Dh` as a map of polynomial entries,
    /// `jac[i][j] = d(component i)/d(var j)`, nonlinear terms only.
    pub fn nonlinear_jacobian(&self) -> Vec<Vec<Poly>> {
        let n = self.n_vars;
        let mut jac = vec![vec![Poly::zero(n); n]; self.n_out()];
        for (i, comp) in self.nonlinear.iter().enumerate() {
            for (m, &c) in comp {
                for j in m.support() {
                    let e = m.exponents()[j];
                    let mut d = m.exponents().to_vec();
                    d[j] -= 1;
                    jac[i][j].add_term(Monomial::new(d), c * e as f64);
                }
            }
        }
        jac
    }

    /// Largest coefficient magnitude among nonlinear terms selected by `pred`.
    pub fn max_coeff_where(&self, mut pred: impl FnMut(usize, &Monomial) -> bool) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, comp) in self.nonlinear.iter().enumerate() {
            for (m, c) in comp {
                if pred(i, m) {
                    worst = worst.max(c.norm());
                }
            }
        }
        worst
    }

    /// Check that component `2i+1` is the conjugate of component `2i` with
    /// paired variables swapped. Returns the largest violation.
    pub fn conjugate_closure_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let n = self.n_out();
        let mut i = 0;
        while i + 1 < n {
            for j in 0..self.n_vars {
                let jj = j ^ 1;
                if jj < self.n_vars {
                    let d = self.linear[(i + 1, jj)] - self.linear[(i, j)].conj();
                    worst = worst.max(d.norm());
                }
            }
            for (m, c) in &self.nonlinear[i] {
                let partner = self.coeff(i + 1, &m.pair_swapped());
                worst = worst.max((partner - c.conj()).norm());
            }
            for (m, c) in &self.nonlinear[i + 1] {
                let partner = self.coeff(i, &m.pair_swapped());
                worst = worst.max((partner - c.conj()).norm());
            }
            i += 2;
        }
        worst
    }

    /// Iterate over `(component, monomial, coefficient)` of the nonlinear part.
    pub fn nonlinear_terms(&self) -> impl Iterator<Item = (usize, &Monomial, &Complex64)> {
        self.nonlinear.iter().enumerate().flat_map(|(i, comp)| comp.iter().map(move |(m, c)| (i, m, c)))
    }
}

/// `outer(inner(z))`, keeping only monomials of degree `<= k`.
///
/// `inner` must not have a constant term (true for every `PolyMap`).
pub fn compose_truncated(outer: &PolyMap, inner: &PolyMap, k: usize) -> Result<PolyMap> {
    if outer.n_vars() != inner.n_out() {
        return Err(Error::DimensionMismatch { expected: outer.n_vars(), found: inner.n_out() });
    }
    let n_in = inner.n_vars();
    let inner_polys: Vec<Poly> = (0..inner.n_out()).map(|j| inner.component(j)).collect();

    // powers[j][e] = inner_j ^ e, built lazily up to the exponents we meet
    let mut powers: Vec<Vec<Poly>> = inner_polys.iter().map(|p| vec![Poly::constant(n_in, Complex64::new(1.0, 0.0)), p.clone()]).collect();
    let power = |j: usize, e: usize, powers: &mut Vec<Vec<Poly>>| -> Poly {
        while powers[j].len() <= e {
            let next = powers[j].last().unwrap().mul_truncated(&inner_polys[j], k);
            powers[j].push(next);
        }
        powers[j][e].clone()
    };

    let mut result = Vec::with_capacity(outer.n_out());
    for i in 0..outer.n_out() {
        let mut acc = Poly::zero(n_in);
        for j in 0..outer.n_vars() {
            let c = outer.linear()[(i, j)];
            if c.norm() != 0.0 {
                acc.add_scaled(&inner_polys[j], c);
            }
        }
        for (m, &c) in outer.nonlinear(i) {
            if m.degree() > k {
                continue;
            }
            let mut prod = Poly::constant(n_in, Complex64::new(1.0, 0.0));
            for j in m.support() {
                let pj = power(j, m.exponents()[j] as usize, &mut powers);
                prod = prod.mul_truncated(&pj, k);
                if prod.is_zero() {
                    break;
                }
            }
            acc.add_scaled(&prod, c);
        }
        acc.prune();
        result.push(acc);
    }
    PolyMap::from_polys(&result, n_in, k)
}

/// Power-series inverse of a near-identity map, solved degree by degree:
/// returns `S` with `S(H(u)) = u + O(|u|^(k+1))`.
pub fn invert_near_identity(map: &PolyMap, k: usize) -> Result<PolyMap> {
    let n = map.n_vars();
    if map.n_out() != n {
        return Err(Error::DimensionMismatch { expected: n, found: map.n_out() });
    }
    let id = DMatrix::<Complex64>::identity(n, n);
    if (map.linear() - &id).iter().any(|c| c.norm() > 1e-12) {
        return Err(Error::NonIdentityLinear);
    }
    let map = map.with_max_degree(k);
    let mut inverse = PolyMap::identity(n, k);
    for d in 2..=k {
        let residual = compose_truncated(&inverse, &map, k)?;
        for i in 0..n {
            for (m, &c) in residual.nonlinear(i) {
                if m.degree() == d {
                    inverse.add_term(i, m.clone(), -c);
                }
            }
        }
        inverse.prune();
    }
    Ok(inverse)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn counts() {
        assert_eq!(monomial_count(4, 2), 10);
        assert_eq!(monomial_count(4, 3), 20);
        assert_eq!(monomial_count(2, 2), 3);
        assert_eq!(monomial_count(3, 0), 1);
    }

    #[test]
    fn identity_eval() {
        let id = PolyMap::identity(3, 3);
        let p = [c(1.0), Complex64::new(0.5, -2.0), c(3.0)];
        assert_eq!(id.eval(&p).unwrap(), p.to_vec());
        let z = PolyMap::zero(3, 3, 3);
        assert!(z.eval(&p).unwrap().iter().all(|v| v.norm() == 0.0));
        assert!(z.eval(&p[..2]).is_err());
    }

    #[test]
    fn linear_composition_is_matrix_product() {
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(3.0), c(4.0)]);
        let b = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(-1.0), c(0.5)]);
        let ab = compose_truncated(&PolyMap::from_linear(a.clone(), 3), &PolyMap::from_linear(b.clone(), 3), 3).unwrap();
        assert!((ab.linear() - a * b).norm() < 1e-14);
        assert!(ab.is_linear());
    }

    #[test]
    fn compose_with_identity() {
        let mut f = PolyMap::identity(2, 3);
        f.add_term(0, Monomial::new(vec![1, 1]), c(2.0));
        f.add_term(1, Monomial::new(vec![3, 0]), Complex64::new(0.0, 1.0));
        let g = compose_truncated(&f, &PolyMap::identity(2, 3), 3).unwrap();
        assert_eq!(g, f);
    }

    #[test]
    fn truncation_drops_high_degrees() {
        // (z + z^2)^2 truncated at 3 = z^2 + 2 z^3
        let mut inner = PolyMap::identity(1, 3);
        inner.add_term(0, Monomial::new(vec![2]), c(1.0));
        let mut outer = PolyMap::zero(1, 1, 3);
        outer.add_term(0, Monomial::new(vec![2]), c(1.0));
        let r = compose_truncated(&outer, &inner, 3).unwrap();
        assert_eq!(r.coeff(0, &Monomial::new(vec![2])), c(1.0));
        assert_eq!(r.coeff(0, &Monomial::new(vec![3])), c(2.0));
        assert_eq!(r.nonlinear(0).len(), 2);
    }

    #[test]
    fn invert_single_quadratic() {
        let a = Complex64::new(0.7, -0.2);
        let mut h = PolyMap::identity(2, 3);
        h.add_term(0, Monomial::new(vec![0, 2]), a);
        let s = invert_near_identity(&h, 3).unwrap();
        assert!((s.coeff(0, &Monomial::new(vec![0, 2])) + a).norm() < 1e-15);
        assert_eq!(s.nonlinear(0).len(), 1);
        assert!(s.nonlinear(1).is_empty());
        assert_eq!(invert_near_identity(&PolyMap::identity(3, 3), 3).unwrap(), PolyMap::identity(3, 3));
    }

    #[test]
    fn invert_rejects_non_identity() {
        let m = PolyMap::from_linear(DMatrix::identity(2, 2) * c(2.0), 3);
        assert_eq!(invert_near_identity(&m, 3), Err(Error::NonIdentityLinear));
    }

    #[test]
    fn enumerates_monomials() {
        let ms = monomials_of_degree(4, 3);
        assert_eq!(ms.len(), 20);
        assert!(ms.iter().all(|m| m.degree() == 3));
        assert!(ms.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn pair_swap() {
        assert_eq!(Monomial::new(vec![2, 1, 0, 3]).pair_swapped(), Monomial::new(vec![1, 2, 3, 0]));
    }
}
