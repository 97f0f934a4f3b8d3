//! Channel state information: the M×M×R×T tensor of real channel
//! magnitudes, entry `[i][j][r][t]` being the (r, t) coefficient of the
//! channel into receiver i from transmitter j.

use alloc::format;
use alloc::vec::Vec;

use crate::error::Error;
use crate::mat::Mat;
use crate::real::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct CsiTensor {
    m: usize,
    r: usize,
    t: usize,
    data: Vec<f64>,
}

impl CsiTensor {
    /// Validates entry count, finiteness and non-negativity (entries are
    /// magnitudes of complex draws, so negative values indicate a bug in
    /// the producer).
    pub fn new(m: usize, r: usize, t: usize, data: Vec<f64>) -> Result<Self, Error> {
        if m == 0 || r == 0 || t == 0 {
            return Err(Error::Config(format!("degenerate tensor dims ({m}, {r}, {t})")));
        }
        let expected = m * m * r * t;
        if data.len() != expected {
            return Err(Error::Dim(format!(
                "tensor with dims ({m}, {m}, {r}, {t}) needs {expected} entries, got {}",
                data.len()
            )));
        }
        for &x in &data {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::Config(format!("invalid channel entry {x}")));
            }
        }
        Ok(Self { m, r, t, data })
    }

    pub fn from_fn(
        m: usize,
        r: usize,
        t: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Result<Self, Error> {
        let mut data = Vec::with_capacity(m * m * r * t);
        for i in 0..m {
            for j in 0..m {
                for rr in 0..r {
                    for tt in 0..t {
                        data.push(f(i, j, rr, tt));
                    }
                }
            }
        }
        Self::new(m, r, t, data)
    }

    /// Number of user pairs.
    pub fn users(&self) -> usize {
        self.m
    }

    /// Receive antennas per user.
    pub fn rx(&self) -> usize {
        self.r
    }

    /// Transmit antennas per user.
    pub fn tx(&self) -> usize {
        self.t
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize, r: usize, t: usize) -> f64 {
        self.data[((i * self.m + j) * self.r + r) * self.t + t]
    }

    /// The R×T channel matrix into receiver i from transmitter j.
    pub fn block(&self, i: usize, j: usize) -> Mat<f64> {
        Mat::from_fn(self.r, self.t, |rr, tt| self.get(i, j, rr, tt))
    }

    /// Relabels users: entry (i, j) of the result is block
    /// (perm[i], perm[j]) of the original.
    pub fn permuted(&self, perm: &[usize]) -> Result<CsiTensor, Error> {
        if perm.len() != self.m {
            return Err(Error::Dim(format!(
                "permutation of length {} applied to {} users",
                perm.len(),
                self.m
            )));
        }
        let mut seen = alloc::vec![false; self.m];
        for &p in perm {
            if p >= self.m || seen[p] {
                return Err(Error::Config(format!("not a permutation: {perm:?}")));
            }
            seen[p] = true;
        }
        CsiTensor::from_fn(self.m, self.r, self.t, |i, j, rr, tt| {
            self.get(perm[i], perm[j], rr, tt)
        })
    }

    /// Copies each block into `Mat<R>` literals so the generic solver
    /// paths can consume the tensor. Channel entries are constants and
    /// never carry derivatives.
    pub fn lift<R: Real>(&self) -> LiftedCsi<R> {
        let mut blocks = Vec::with_capacity(self.m * self.m);
        for i in 0..self.m {
            for j in 0..self.m {
                blocks.push(Mat::from_fn(self.r, self.t, |rr, tt| {
                    R::lit(self.get(i, j, rr, tt))
                }));
            }
        }
        LiftedCsi { m: self.m, r: self.r, t: self.t, blocks }
    }
}

/// Block view of a [`CsiTensor`] over a chosen scalar type.
#[derive(Clone, Debug)]
pub struct LiftedCsi<R> {
    m: usize,
    r: usize,
    t: usize,
    blocks: Vec<Mat<R>>,
}

impl<R: Real> LiftedCsi<R> {
    pub fn users(&self) -> usize {
        self.m
    }

    pub fn rx(&self) -> usize {
        self.r
    }

    pub fn tx(&self) -> usize {
        self.t
    }

    /// The R×T channel matrix into receiver i from transmitter j.
    pub fn block(&self, i: usize, j: usize) -> &Mat<R> {
        &self.blocks[i * self.m + j]
    }
}
