//! Index-set vocabulary: points of the nonnegative orthant with the
//! componentwise partial order, rate and order vectors, and the weak
//! compositions that index d-fold pmf sums.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// A point of the d-dimensional nonnegative orthant ("multiparameter time").
#[derive(Debug, Clone, PartialEq)]
pub struct IndexPoint(Vec<f64>);

impl IndexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("t", "dimension must be at least 1"));
        }
        if let Some(c) = coords.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::invalid(
                "t",
                format!("coordinate {c} is not a finite nonnegative real"),
            ));
        }
        Ok(IndexPoint(coords))
    }

    pub fn zero(d: usize) -> Self {
        assert!(d >= 1, "dimension must be at least 1");
        IndexPoint(vec![0.0; d])
    }

    /// The point `c·1`.
    pub fn diagonal(d: usize, c: f64) -> Result<Self> {
        IndexPoint::new(vec![c; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    /// `self − other`, defined when `other ⪯ self`.
    pub fn minus(&self, other: &IndexPoint) -> Result<IndexPoint> {
        if !partial_le(other, self)? {
            return Err(Error::NotOrdered(format!(
                "{other:?} is not below {self:?}"
            )));
        }
        Ok(IndexPoint(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (a - b).max(0.0))
                .collect(),
        ))
    }

    /// Componentwise minimum.
    pub fn meet(&self, other: &IndexPoint) -> Result<IndexPoint> {
        check_dims(self.dim(), other.dim())?;
        Ok(IndexPoint(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.min(*b))
                .collect(),
        ))
    }

    pub fn scaled(&self, c: f64) -> Result<IndexPoint> {
        IndexPoint::new(self.0.iter().map(|x| x * c).collect())
    }

    /// Drop trailing axes, keeping the first `d` coordinates.
    pub fn truncated(&self, d: usize) -> Result<IndexPoint> {
        if d == 0 || d > self.dim() {
            return Err(Error::invalid(
                "d",
                format!("cannot truncate dimension {} to {d}", self.dim()),
            ));
        }
        Ok(IndexPoint(self.0[..d].to_vec()))
    }

    /// Partial-order comparison; `None` for incomparable points.
    pub fn partial_cmp_order(&self, other: &IndexPoint) -> Option<Ordering> {
        if self.dim() != other.dim() {
            return None;
        }
        let le = self.0.iter().zip(&other.0).all(|(a, b)| a <= b);
        let ge = self.0.iter().zip(&other.0).all(|(a, b)| a >= b);
        match (le, ge) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => None,
        }
    }
}

/// Transition parameter Λ ≻ 0: one strictly positive rate per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector(Vec<f64>);

impl RateVector {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::invalid("lambda", "dimension must be at least 1"));
        }
        if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::invalid(
                "lambda",
                format!("rate {r} is not strictly positive"),
            ));
        }
        Ok(RateVector(rates))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn rates(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, c: f64) -> Result<RateVector> {
        RateVector::new(self.0.iter().map(|x| x * c).collect())
    }

    pub fn truncated(&self, d: usize) -> Result<RateVector> {
        if d == 0 || d > self.dim() {
            return Err(Error::invalid(
                "d",
                format!("cannot truncate dimension {} to {d}", self.dim()),
            ));
        }
        Ok(RateVector(self.0[..d].to_vec()))
    }

    /// `Λ·t` without the dimension check; callers validate once up front.
    #[inline]
    pub(crate) fn dot_unchecked(&self, t: &IndexPoint) -> f64 {
        debug_assert_eq!(self.dim(), t.dim());
        self.0.iter().zip(t.coords()).map(|(l, x)| l * x).sum()
    }
}

/// Fractional indices α ∈ (0,1]^d, or integral orders ρ ≻ 0 when built
/// with [`FracOrders::integral`].
#[derive(Debug, Clone, PartialEq)]
pub struct FracOrders {
    orders: Vec<f64>,
    relaxed: bool,
}

impl FracOrders {
    pub fn new(orders: Vec<f64>) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::invalid("alpha", "dimension must be at least 1"));
        }
        if let Some(a) = orders.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return Err(Error::invalid(
                "alpha",
                format!("order {a} is outside (0, 1]"),
            ));
        }
        Ok(FracOrders {
            orders,
            relaxed: false,
        })
    }

    /// Riemann–Liouville integral orders: only ρ_i > 0 is required.
    pub fn integral(orders: Vec<f64>) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::invalid("rho", "dimension must be at least 1"));
        }
        if let Some(r) = orders.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::invalid(
                "rho",
                format!("order {r} is not strictly positive"),
            ));
        }
        Ok(FracOrders {
            orders,
            relaxed: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.orders.len()
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    /// True for integral orders (bound relaxed to ρ > 0).
    pub fn is_relaxed(&self) -> bool {
        self.relaxed
    }

    pub fn all_one(&self) -> bool {
        self.orders.iter().all(|&a| a == 1.0)
    }
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `s ⪯ t` iff `s_i ≤ t_i` for every axis.
pub fn partial_le(s: &IndexPoint, t: &IndexPoint) -> Result<bool> {
    check_dims(s.dim(), t.dim())?;
    Ok(s.coords().iter().zip(t.coords()).all(|(a, b)| a <= b))
}

/// `Λ·t = Σ λ_i t_i`.
pub fn lambda_dot(rates: &RateVector, t: &IndexPoint) -> Result<f64> {
    check_dims(rates.dim(), t.dim())?;
    Ok(rates.dot_unchecked(t))
}

/// A weak composition of `n` into `d` nonnegative parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Composition(Vec<usize>);

impl Composition {
    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

/// Weak compositions of `n` into `d` parts in colexicographic order
/// (lexicographic on the reversed tuple), starting at `(n, 0, …, 0)`.
pub fn compositions(n: usize, d: usize) -> Compositions {
    assert!(d >= 1, "compositions need at least one part");
    // `rev` holds the parts last-axis-first; lex order on it is colex order.
    let mut rev = vec![0; d];
    rev[d - 1] = n;
    Compositions { rev: Some(rev) }
}

#[derive(Debug, Clone)]
pub struct Compositions {
    rev: Option<Vec<usize>>,
}

impl Iterator for Compositions {
    type Item = Composition;

    fn next(&mut self) -> Option<Composition> {
        let current = self.rev.take()?;
        let out = Composition(current.iter().rev().copied().collect());
        let last = current.len() - 1;
        let mut next = current;
        let mut right_mass = next[last];
        let mut j = last;
        while j > 0 {
            j -= 1;
            if right_mass > 0 {
                next[j] += 1;
                for x in next[j + 1..].iter_mut() {
                    *x = 0;
                }
                next[last] = right_mass - 1;
                self.rev = Some(next);
                return Some(out);
            }
            right_mass += next[j];
        }
        Some(out)
    }
}

/// `C(n + d − 1, d − 1)`, the number of weak compositions.
pub fn composition_count(n: usize, d: usize) -> u128 {
    let k = (d - 1) as u128;
    let top = (n + d - 1) as u128;
    (0..k).fold(1u128, |acc, i| acc * (top - i) / (i + 1))
}
