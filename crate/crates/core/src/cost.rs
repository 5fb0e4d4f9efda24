//! Cost accounting: scalar operations plus weighted scalar communication.
//!
//! All methods in this crate charge work with the same table, exposed by
//! [`op_counting_conventions`]. Absolute numbers are only meaningful relative
//! to other runs of this crate.

use serde::{Deserialize, Serialize};

/// Running counters of scalar operations and scalars transmitted.
///
/// Both counters only grow; a ledger is never reset during a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub scalar_ops: u64,
    pub scalars_sent: u64,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge_ops(&mut self, ops: u64) {
        self.scalar_ops += ops;
    }

    pub fn charge_sent(&mut self, scalars: u64) {
        self.scalars_sent += scalars;
    }

    pub fn absorb(&mut self, other: &CostLedger) {
        self.scalar_ops += other.scalar_ops;
        self.scalars_sent += other.scalars_sent;
    }

    /// Difference `self - earlier`; `earlier` must be a prior snapshot.
    pub fn since(&self, earlier: &CostLedger) -> CostLedger {
        CostLedger {
            scalar_ops: self.scalar_ops - earlier.scalar_ops,
            scalars_sent: self.scalars_sent - earlier.scalars_sent,
        }
    }

    pub fn total_cost(&self, r: f64) -> f64 {
        total_cost(self, r)
    }
}

/// `computation + r * communication`.
pub fn total_cost(ledger: &CostLedger, r: f64) -> f64 {
    debug_assert!(r >= 0.0, "cost factor must be nonnegative");
    ledger.scalar_ops as f64 + r * ledger.scalars_sent as f64
}

/// Dense `n x n` matrix-vector product (one FMA per entry).
pub fn matvec_ops(n: usize) -> u64 {
    (n * n) as u64
}

/// Cholesky factorization of a local `n x n` block, `n^3 / 3` rounded.
pub fn factorization_ops(n: usize) -> u64 {
    ((n * n * n) as f64 / 3.0).round() as u64
}

/// One triangular solve with an `n x n` factor.
pub fn triangular_solve_ops(n: usize) -> u64 {
    (n * n) as u64
}

/// Neighbor combination and update work of one JOR round at a node of
/// degree `degree`: `(2 deg + 3) n` plus `n` for the diagonal scaling.
/// The local block product is charged separately with [`matvec_ops`].
pub fn jor_round_ops(degree: usize, n: usize) -> u64 {
    ((2 * degree + 3) * n + n) as u64
}

/// Vector operations of length `n` at one FMA each (axpy, norms, scaling).
pub fn vector_ops(n: usize) -> u64 {
    n as u64
}

/// Scalar bookkeeping charged per node for a step-size or acceptance decision.
pub const SCALAR_DECISION_OPS: u64 = 6;

/// One row of the counting table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OpConvention {
    pub operation: &'static str,
    pub cost: &'static str,
}

/// The counting table every method uses.
pub fn op_counting_conventions() -> Vec<OpConvention> {
    vec![
        OpConvention { operation: "fused multiply-add", cost: "1" },
        OpConvention { operation: "exp / log / log1p", cost: "1" },
        OpConvention { operation: "local n x n factorization", cost: "n^3/3 (rounded)" },
        OpConvention { operation: "triangular solve", cost: "n^2" },
        OpConvention { operation: "dense n x n matvec", cost: "n^2" },
        OpConvention { operation: "JOR round per node", cost: "(2 deg_i + 3) n + n diagonal scaling, plus the local block matvec" },
        OpConvention { operation: "vector update / inf-norm of length n", cost: "n" },
        OpConvention { operation: "step size or acceptance decision per node", cost: "6" },
        OpConvention { operation: "communication: one scalar over one directed edge", cost: "1 scalar sent" },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_cost_examples() {
        let l = CostLedger { scalar_ops: 100, scalars_sent: 10 };
        assert_eq!(total_cost(&l, 1.0), 110.0);
        assert_eq!(total_cost(&l, 0.0), 100.0);
        let l = CostLedger { scalar_ops: 0, scalars_sent: 10 };
        assert_eq!(total_cost(&l, 10.0), 100.0);
    }

    #[test]
    fn convention_examples() {
        assert_eq!(jor_round_ops(2, 10), 70 + 10);
        assert_eq!(factorization_ops(10), 333);
        assert_eq!(vector_ops(0), 0);
        assert_eq!(matvec_ops(0), 0);
        assert!(!op_counting_conventions().is_empty());
    }

    #[test]
    fn since_and_absorb() {
        let mut a = CostLedger::new();
        a.charge_ops(5);
        let snap = a;
        a.charge_ops(3);
        a.charge_sent(2);
        assert_eq!(a.since(&snap), CostLedger { scalar_ops: 3, scalars_sent: 2 });
        let mut b = CostLedger::new();
        b.absorb(&a);
        assert_eq!(b, a);
    }
}
