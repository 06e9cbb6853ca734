//! Firing domains as difference-bound matrices over scaled integers.
//!
//! Entry `(i, j)` bounds `x_i - x_j`, where `x_0 = 0` and `x_k` is the
//! firing delay of the k-th variable. A bound is encoded as
//! `(value << 1) | nonstrict`; [`INF`] means no constraint.

use crate::time::{scaled, TimeInterval};

pub const INF: i64 = i64::MAX;

pub fn le(v: i64) -> i64 {
    (v << 1) | 1
}

pub fn lt(v: i64) -> i64 {
    v << 1
}

pub fn value(b: i64) -> i64 {
    b >> 1
}

pub fn is_strict(b: i64) -> bool {
    b & 1 == 0
}

pub fn add(a: i64, b: i64) -> i64 {
    if a == INF || b == INF {
        INF
    } else {
        (((a >> 1) + (b >> 1)) << 1) | (a & b & 1)
    }
}

/// Bounds of a static interval: `(upper on x, upper on -x)`.
pub fn interval_bounds(i: &TimeInterval, scale: i64) -> (i64, i64) {
    let lo = scaled(i.lower, scale);
    let lower = if i.lower_strict { lt(-lo) } else { le(-lo) };
    let upper = match i.upper {
        None => INF,
        Some(u) if i.upper_strict => lt(scaled(u, scale)),
        Some(u) => le(scaled(u, scale)),
    };
    (upper, lower)
}

/// Square bound matrix of dimension `n + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dbm {
    pub dim: usize,
    pub m: Box<[i64]>,
}

impl Dbm {
    /// Domain where each variable ranges over its interval, canonical.
    pub fn boxes(bounds: &[(i64, i64)]) -> Dbm {
        let dim = bounds.len() + 1;
        let mut d = Dbm {
            dim,
            m: vec![INF; dim * dim].into_boxed_slice(),
        };
        for i in 0..dim {
            d.set(i, i, le(0));
        }
        for (k, &(up, low)) in bounds.iter().enumerate() {
            d.set(k + 1, 0, up);
            d.set(0, k + 1, low);
        }
        for a in 1..dim {
            for b in 1..dim {
                if a != b {
                    d.set(a, b, add(d.get(a, 0), d.get(0, b)));
                }
            }
        }
        d
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.m[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, b: i64) {
        self.m[i * self.dim + j] = b;
    }

    /// Full all-pairs closure; returns false when empty.
    pub fn close(&mut self) -> bool {
        let n = self.dim;
        for k in 0..n {
            for i in 0..n {
                let ik = self.get(i, k);
                if ik == INF {
                    continue;
                }
                for j in 0..n {
                    let via = add(ik, self.get(k, j));
                    if via < self.get(i, j) {
                        self.set(i, j, via);
                    }
                }
            }
        }
        (0..n).all(|i| self.get(i, i) >= le(0))
    }

    /// Adds `x_i - x_j ⋈ b` to a closed matrix, keeping it closed.
    /// Returns false when the result is empty.
    pub fn constrain(&mut self, i: usize, j: usize, b: i64) -> bool {
        if add(self.get(j, i), b) < le(0) {
            return false;
        }
        if b >= self.get(i, j) {
            return true;
        }
        self.set(i, j, b);
        let n = self.dim;
        for k in 0..n {
            let ki = self.get(k, i);
            if ki == INF {
                continue;
            }
            let kib = add(ki, b);
            for l in 0..n {
                let via = add(kib, self.get(j, l));
                if via < self.get(k, l) {
                    self.set(k, l, via);
                }
            }
        }
        true
    }

    pub fn is_empty(&self) -> bool {
        (0..self.dim).any(|i| self.get(i, i) < le(0))
    }
}
