//! Dense two-phase primal simplex with Bland's rule.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive, Zero};

/// Field the tableau is computed in.
pub trait LpScalar: Clone + PartialOrd + Num + Neg<Output = Self> + Debug {
    fn from_i64(v: i64) -> Self;
    /// Magnitudes at or below this count as zero.
    fn tolerance() -> Self;
    fn to_f64(&self) -> f64;
    /// Floor as an integer and the fractional distance above it.
    fn split(&self) -> (i64, f64);
}

impl LpScalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn tolerance() -> Self {
        BigRational::zero()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn split(&self) -> (i64, f64) {
        let f = self.floor();
        let frac = ToPrimitive::to_f64(&(self - &f)).unwrap_or(0.0);
        (f.to_integer().to_i64().unwrap_or(i64::MAX), frac)
    }
}

impl LpScalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn tolerance() -> Self {
        1e-9
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn split(&self) -> (i64, f64) {
        let r = self.round();
        if (self - r).abs() <= 1e-6 {
            (r as i64, 0.0)
        } else {
            (self.floor() as i64, self - self.floor())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpStatus<T> {
    Optimal { x: Vec<T>, objective: T },
    Infeasible,
    Unbounded,
}

/// `minimise c·y  subject to  g·y ≥ h (per row), y ≥ 0`.
#[derive(Debug, Clone)]
pub struct DenseSimplex<T> {
    n: usize,
    cost: Vec<T>,
    rows: Vec<(Vec<T>, T)>,
}

pub type ExactSimplex = DenseSimplex<BigRational>;
pub type FloatSimplex = DenseSimplex<f64>;

impl<T: LpScalar> DenseSimplex<T> {
    pub fn new(num_vars: usize) -> Self {
        DenseSimplex {
            n: num_vars,
            cost: vec![T::zero(); num_vars],
            rows: Vec::new(),
        }
    }

    pub fn set_cost(&mut self, j: usize, c: T) {
        self.cost[j] = c;
    }

    /// Adds `Σ coef·y ≥ rhs`.
    pub fn add_ge(&mut self, coefs: Vec<T>, rhs: T) {
        assert_eq!(coefs.len(), self.n);
        self.rows.push((coefs, rhs));
    }

    pub fn solve(&self) -> LpStatus<T> {
        Tableau::build(self).run(self)
    }
}

fn pos<T: LpScalar>(v: &T) -> bool {
    *v > T::tolerance()
}

fn neg<T: LpScalar>(v: &T) -> bool {
    *v < -T::tolerance()
}

struct Tableau<T> {
    /// m rows of `cols` coefficients followed by the right-hand side.
    a: Vec<Vec<T>>,
    basis: Vec<usize>,
    /// Reduced costs followed by minus the objective value.
    z: Vec<T>,
    cols: usize,
    artificial_from: usize,
}

impl<T: LpScalar> Tableau<T> {
    fn build(p: &DenseSimplex<T>) -> Self {
        let m = p.rows.len();
        let needs_art: Vec<bool> = p.rows.iter().map(|(_, h)| pos(h)).collect();
        let n_art = needs_art.iter().filter(|b| **b).count();
        let cols = p.n + m + n_art;
        let artificial_from = p.n + m;
        let mut a = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut next_art = artificial_from;
        for (i, (g, h)) in p.rows.iter().enumerate() {
            let mut row = vec![T::zero(); cols + 1];
            if needs_art[i] {
                // g·y − s + r = h
                row[..p.n].clone_from_slice(&g[..p.n]);
                row[p.n + i] = -T::one();
                row[next_art] = T::one();
                row[cols] = h.clone();
                basis.push(next_art);
                next_art += 1;
            } else {
                // −g·y + s = −h ≥ 0
                for j in 0..p.n {
                    row[j] = -g[j].clone();
                }
                row[p.n + i] = T::one();
                row[cols] = -h.clone();
                basis.push(p.n + i);
            }
            a.push(row);
        }
        Tableau {
            a,
            basis,
            z: vec![T::zero(); cols + 1],
            cols,
            artificial_from,
        }
    }

    /// Reduced-cost row for the given column costs with the current basis.
    fn price(&mut self, cost: &[T]) {
        let mut z: Vec<T> = cost.to_vec();
        z.push(T::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b].clone();
            if cb.is_zero() {
                continue;
            }
            for (zj, aij) in z.iter_mut().zip(&self.a[i]) {
                if !aij.is_zero() {
                    *zj = zj.clone() - cb.clone() * aij.clone();
                }
            }
        }
        self.z = z;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let pv = self.a[r][c].clone();
        for v in self.a[r].iter_mut() {
            if !v.is_zero() {
                *v = v.clone() / pv.clone();
            }
        }
        let prow = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pj) in row.iter_mut().zip(&prow) {
                if !pj.is_zero() {
                    *v = v.clone() - f.clone() * pj.clone();
                }
            }
        }
        if !self.z[c].is_zero() {
            let f = self.z[c].clone();
            for (v, pj) in self.z.iter_mut().zip(&prow) {
                if !pj.is_zero() {
                    *v = v.clone() - f.clone() * pj.clone();
                }
            }
        }
        self.basis[r] = c;
    }

    /// Optimises the current cost row over columns below `limit`. False if unbounded.
    fn optimise(&mut self, limit: usize) -> bool {
        loop {
            let Some(c) = (0..limit).find(|&j| neg(&self.z[j])) else {
                return true;
            };
            let mut best: Option<(usize, T)> = None;
            for i in 0..self.a.len() {
                if !pos(&self.a[i][c]) {
                    continue;
                }
                let ratio = self.a[i][self.cols].clone() / self.a[i][c].clone();
                let better = match &best {
                    None => true,
                    Some((k, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*k]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }

    fn run(mut self, p: &DenseSimplex<T>) -> LpStatus<T> {
        let cols = self.cols;
        if self.artificial_from < cols {
            let mut phase1 = vec![T::zero(); cols];
            for c in phase1.iter_mut().skip(self.artificial_from) {
                *c = T::one();
            }
            self.price(&phase1);
            self.optimise(cols);
            if neg(&self.z[cols]) {
                return LpStatus::Infeasible;
            }
            // drive remaining (zero-valued) artificials out of the basis
            let mut i = 0;
            while i < self.a.len() {
                if self.basis[i] >= self.artificial_from {
                    match (0..self.artificial_from).find(|&j| pos(&self.a[i][j]) || neg(&self.a[i][j])) {
                        Some(j) => self.pivot(i, j),
                        None => {
                            self.a.remove(i);
                            self.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }
        let mut cost = vec![T::zero(); cols];
        cost[..p.n].clone_from_slice(&p.cost);
        self.price(&cost);
        if !self.optimise(self.artificial_from) {
            return LpStatus::Unbounded;
        }
        let mut x = vec![T::zero(); p.n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < p.n {
                x[b] = self.a[i][cols].clone();
            }
        }
        let objective = -self.z[cols].clone();
        LpStatus::Optimal { x, objective }
    }
}
