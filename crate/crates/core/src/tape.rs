//! Minimal reverse-mode differentiation on a Wengert list.
//!
//! [`Var`] implements [`Real`], so any routine generic over the scalar can
//! be differentiated by running it on tape variables. Literal constants
//! ([`Var::Lit`]) fold eagerly: arithmetic among literals records nothing,
//! which keeps channel coefficients and other fixed data off the tape.
//! Only operations touching a leaf (or a descendant of one) allocate
//! nodes, and every node stores at most two parents with their local
//! partial derivatives.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use crate::real::Real;

#[derive(Clone, Copy, Debug)]
struct Node {
    parents: [u32; 2],
    partials: [f64; 2],
}

/// Operation recorder. One tape per differentiated computation; create
/// leaves for the inputs of interest, run the computation, then call
/// [`Tape::gradient`] on the output.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of recorded nodes, leaves included.
    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    /// Drops all nodes so the tape can be reused for the next sample.
    pub fn clear(&self) {
        self.nodes.borrow_mut().clear();
    }

    /// Registers an input variable. Leaves created in a fixed order get
    /// the first indices, so their adjoints sit at the front of the
    /// vector returned by [`Tape::gradient`].
    pub fn leaf(&self, val: f64) -> Var<'_> {
        let idx = self.push(u32::MAX, u32::MAX, 0.0, 0.0);
        // A leaf is its own parent with zero partials; the reverse sweep
        // then needs no special case.
        self.nodes.borrow_mut()[idx as usize].parents = [idx, idx];
        Var::Node { tape: self, idx, val }
    }

    fn push(&self, p0: u32, p1: u32, d0: f64, d1: f64) -> u32 {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len();
        assert!(idx < u32::MAX as usize, "tape overflow");
        nodes.push(Node { parents: [p0, p1], partials: [d0, d1] });
        idx as u32
    }

    fn push1<'t>(&'t self, parent: u32, partial: f64, val: f64) -> Var<'t> {
        let idx = self.push(parent, parent, partial, 0.0);
        Var::Node { tape: self, idx, val }
    }

    fn push2<'t>(&'t self, p0: u32, p1: u32, d0: f64, d1: f64, val: f64) -> Var<'t> {
        let idx = self.push(p0, p1, d0, d1);
        Var::Node { tape: self, idx, val }
    }

    /// Adjoints of every node with respect to `output`. The entry at a
    /// leaf's index is the derivative d output / d leaf. A literal
    /// output yields all zeros.
    pub fn gradient(&self, output: Var<'_>) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let mut adjoint = vec![0.0; nodes.len()];
        if let Var::Node { idx, .. } = output {
            adjoint[idx as usize] = 1.0;
            for i in (0..nodes.len()).rev() {
                let a = adjoint[i];
                if a != 0.0 {
                    let n = nodes[i];
                    adjoint[n.parents[0] as usize] += a * n.partials[0];
                    adjoint[n.parents[1] as usize] += a * n.partials[1];
                }
            }
        }
        adjoint
    }
}

/// Scalar tracked on a [`Tape`], or a free-floating literal.
#[derive(Clone, Copy, Debug)]
pub enum Var<'t> {
    Lit(f64),
    Node { tape: &'t Tape, idx: u32, val: f64 },
}

fn bin<'t>(a: Var<'t>, b: Var<'t>, val: f64, da: f64, db: f64) -> Var<'t> {
    match (a, b) {
        (Var::Lit(_), Var::Lit(_)) => Var::Lit(val),
        (Var::Node { tape, idx, .. }, Var::Lit(_)) => tape.push1(idx, da, val),
        (Var::Lit(_), Var::Node { tape, idx, .. }) => tape.push1(idx, db, val),
        (Var::Node { tape, idx: i, .. }, Var::Node { tape: other, idx: j, .. }) => {
            debug_assert!(core::ptr::eq(tape, other), "operands from different tapes");
            tape.push2(i, j, da, db, val)
        }
    }
}

fn un<'t>(a: Var<'t>, val: f64, da: f64) -> Var<'t> {
    match a {
        Var::Lit(_) => Var::Lit(val),
        Var::Node { tape, idx, .. } => tape.push1(idx, da, val),
    }
}

impl<'t> core::ops::Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, rhs: Self) -> Self {
        bin(self, rhs, self.value() + rhs.value(), 1.0, 1.0)
    }
}

impl<'t> core::ops::Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, rhs: Self) -> Self {
        bin(self, rhs, self.value() - rhs.value(), 1.0, -1.0)
    }
}

impl<'t> core::ops::Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, rhs: Self) -> Self {
        let (x, y) = (self.value(), rhs.value());
        bin(self, rhs, x * y, y, x)
    }
}

impl<'t> core::ops::Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, rhs: Self) -> Self {
        let (x, y) = (self.value(), rhs.value());
        bin(self, rhs, x / y, 1.0 / y, -x / (y * y))
    }
}

impl<'t> core::ops::Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Self {
        un(self, -self.value(), -1.0)
    }
}

impl<'t> Real for Var<'t> {
    fn lit(x: f64) -> Self {
        Var::Lit(x)
    }

    fn value(self) -> f64 {
        match self {
            Var::Lit(x) => x,
            Var::Node { val, .. } => val,
        }
    }

    fn sqrt(self) -> Self {
        let s = self.value().sqrt();
        un(self, s, 0.5 / s)
    }

    fn ln(self) -> Self {
        let x = self.value();
        un(self, x.ln(), 1.0 / x)
    }

    fn exp(self) -> Self {
        let e = self.value().exp();
        un(self, e, e)
    }

    fn abs(self) -> Self {
        let x = self.value();
        let sign = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        };
        un(self, x.abs(), sign)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::{log2, relu, sigmoid};

    fn f<R: Real>(x: R, y: R) -> R {
        let q = x * x + y * (x * R::lit(0.3)).exp();
        q.ln() + y.abs() * (x / y).sqrt() + sigmoid(x - y) + log2(q) + relu(y - R::lit(0.1))
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (x0, y0) = (1.3, 0.7);
        let tape = Tape::new();
        let x = tape.leaf(x0);
        let y = tape.leaf(y0);
        let out = f(x, y);
        let grad = tape.gradient(out);
        assert!((out.value() - f(x0, y0)).abs() < 1e-15);

        let h = 1e-6;
        let dx = (f(x0 + h, y0) - f(x0 - h, y0)) / (2.0 * h);
        let dy = (f(x0, y0 + h) - f(x0, y0 - h)) / (2.0 * h);
        assert!((grad[0] - dx).abs() / dx.abs() < 1e-8, "dx {} vs fd {dx}", grad[0]);
        assert!((grad[1] - dy).abs() / dy.abs() < 1e-8, "dy {} vs fd {dy}", grad[1]);
    }

    #[test]
    fn literals_record_nothing() {
        let tape = Tape::new();
        let _x = tape.leaf(2.0);
        let before = tape.len();
        let a = Var::lit(3.0);
        let b = Var::lit(4.0);
        let c = (a * b + a.sqrt()).ln();
        assert!(matches!(c, Var::Lit(_)));
        assert_eq!(tape.len(), before);
    }

    #[test]
    fn constant_output_has_zero_gradient() {
        let tape = Tape::new();
        let x = tape.leaf(5.0);
        let out = x * Var::lit(0.0) + Var::lit(7.0);
        let grad = tape.gradient(out);
        assert_eq!(grad[0], 0.0);
    }

    #[test]
    fn mixed_literal_operand_propagates() {
        let tape = Tape::new();
        let x = tape.leaf(2.0);
        let out = Var::lit(3.0) * x + Var::lit(1.0) / x;
        let grad = tape.gradient(out);
        assert!((grad[0] - (3.0 - 1.0 / 4.0)).abs() < 1e-15);
    }

    #[test]
    fn branch_derivative_follows_taken_side() {
        let tape = Tape::new();
        let x = tape.leaf(-0.5);
        let out = relu(x);
        assert_eq!(out.value(), 0.0);
        assert_eq!(tape.gradient(out)[0], 0.0);

        let y = tape.leaf(0.5);
        let out = relu(y);
        assert_eq!(tape.gradient(out)[1], 1.0);
    }
}
