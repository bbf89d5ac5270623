//! Gate and oracle-call counting.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::state::GateOp;

/// Counts of elementary gates and oracle invocations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateTally {
    pub one_two_qubit_count: u64,
    pub oracle_calls: u64,
    pub inverse_oracle_calls: u64,
}

impl GateTally {
    #[must_use]
    pub fn scaled(self, times: u64) -> Self {
        Self {
            one_two_qubit_count: self.one_two_qubit_count * times,
            oracle_calls: self.oracle_calls * times,
            inverse_oracle_calls: self.inverse_oracle_calls * times,
        }
    }

    /// Oracle calls in either direction.
    #[must_use]
    pub fn total_oracle_calls(&self) -> u64 {
        self.oracle_calls + self.inverse_oracle_calls
    }

    pub fn record_gate(&mut self, gate: &GateOp, model: &CostModel) {
        self.one_two_qubit_count += model.gate_cost(gate.arity());
    }
}

impl Add for GateTally {
    type Output = GateTally;

    fn add(self, rhs: GateTally) -> GateTally {
        GateTally {
            one_two_qubit_count: self.one_two_qubit_count + rhs.one_two_qubit_count,
            oracle_calls: self.oracle_calls + rhs.oracle_calls,
            inverse_oracle_calls: self.inverse_oracle_calls + rhs.inverse_oracle_calls,
        }
    }
}

impl AddAssign for GateTally {
    fn add_assign(&mut self, rhs: GateTally) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for GateTally {
    fn sum<I: Iterator<Item = GateTally>>(iter: I) -> GateTally {
        iter.fold(GateTally::default(), Add::add)
    }
}

/// How many one- or two-qubit gates a wider gate is worth.
///
/// A gate on at most two qubits costs 1. A gate on `q > 2` qubits costs
/// `multi_qubit_cost * (q - 2)`, so a three-qubit controlled phase costs
/// `multi_qubit_cost` and every further control adds the same amount again.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub multi_qubit_cost: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self { multi_qubit_cost: 5 }
    }
}

impl CostModel {
    #[must_use]
    pub fn gate_cost(&self, qubits: usize) -> u64 {
        if qubits <= 2 {
            1
        } else {
            self.multi_qubit_cost * (qubits as u64 - 2)
        }
    }
}
