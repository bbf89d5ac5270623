//! Sparse state for gate-level arithmetic on wide registers.
//!
//! Arithmetic circuits keep basis inputs close to basis states: only the
//! register currently in the Fourier domain is spread out. A map from basis
//! index to amplitude is enough to run them on up to 128 qubits.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::BuildHasherDefault;

use num_complex::Complex64;

use crate::state::{GateOp, Register, StateError, StateVector, ZERO};

type Map = HashMap<u128, Complex64, BuildHasherDefault<DefaultHasher>>;

/// Amplitudes below this are dropped after each gate.
const PRUNE: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct SparseState {
    num_qubits: usize,
    amps: Map,
}

impl SparseState {
    pub fn basis(num_qubits: usize, index: u128) -> Result<Self, StateError> {
        if num_qubits > 128 {
            return Err(StateError::TooManyQubits(num_qubits));
        }
        let mut amps = Map::default();
        amps.insert(index, Complex64::new(1.0, 0.0));
        Ok(Self { num_qubits, amps })
    }

    pub fn from_dense(state: &StateVector) -> Self {
        let mut amps = Map::default();
        for (i, a) in state.amplitudes().iter().enumerate() {
            if a.norm() > PRUNE {
                amps.insert(i as u128, *a);
            }
        }
        Self {
            num_qubits: state.num_qubits(),
            amps,
        }
    }

    /// Dense copy; only sensible for small states.
    pub fn to_dense(&self) -> Result<StateVector, StateError> {
        let mut sv = StateVector::zero(self.num_qubits)?;
        let a = sv.amplitudes_mut();
        a[0] = ZERO;
        for (i, v) in &self.amps {
            a[*i as usize] = *v;
        }
        Ok(sv)
    }

    #[must_use]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    #[must_use]
    pub fn support_size(&self) -> usize {
        self.amps.len()
    }

    #[must_use]
    pub fn amplitude(&self, index: u128) -> Complex64 {
        self.amps.get(&index).copied().unwrap_or(ZERO)
    }

    /// Entries sorted by basis index.
    #[must_use]
    pub fn entries(&self) -> Vec<(u128, Complex64)> {
        let mut v: Vec<_> = self.amps.iter().map(|(i, a)| (*i, *a)).collect();
        v.sort_unstable_by_key(|e| e.0);
        v
    }

    #[must_use]
    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(Complex64::norm_sqr).sum()
    }

    fn bit(&self, q: usize) -> u128 {
        1u128 << (self.num_qubits - 1 - q)
    }

    pub fn apply_gate(&mut self, gate: &GateOp) -> Result<(), StateError> {
        for q in gate.qubits() {
            if q >= self.num_qubits {
                return Err(StateError::QubitOutOfRange {
                    qubit: q,
                    num_qubits: self.num_qubits,
                });
            }
        }
        let mut cmask = 0u128;
        let mut cval = 0u128;
        for c in &gate.controls {
            cmask |= self.bit(c.qubit);
            if c.polarity {
                cval |= self.bit(c.qubit);
            }
        }
        let t = gate.targets.len();
        let d = gate.dim();
        let tbits: Vec<u128> = gate.targets.iter().map(|&q| self.bit(q)).collect();
        let tmask: u128 = tbits.iter().fold(0, |a, b| a | b);
        let row_of = |idx: u128| -> usize { (0..t).fold(0, |r, i| (r << 1) | usize::from(idx & tbits[i] != 0)) };
        let offset = |r: usize| -> u128 {
            (0..t)
                .filter(|i| (r >> (t - 1 - i)) & 1 == 1)
                .fold(0, |a, i| a | tbits[i])
        };
        let m = gate.matrix();

        if gate.is_diagonal() {
            for (idx, a) in self.amps.iter_mut() {
                if idx & cmask == cval {
                    let r = row_of(*idx);
                    *a *= m[r * d + r];
                }
            }
            return Ok(());
        }

        let mut groups: HashMap<u128, Vec<Complex64>, BuildHasherDefault<DefaultHasher>> = HashMap::default();
        let mut next = Map::default();
        for (idx, a) in self.amps.drain() {
            if idx & cmask == cval {
                let r = row_of(idx);
                groups.entry(idx & !tmask).or_insert_with(|| vec![ZERO; d])[r] += a;
            } else {
                next.insert(idx, a);
            }
        }
        for (base, v) in groups {
            for r in 0..d {
                let mut acc = ZERO;
                for (c, x) in v.iter().enumerate() {
                    if *x != ZERO {
                        acc += m[r * d + c] * x;
                    }
                }
                if acc.norm() > PRUNE {
                    next.insert(base | offset(r), acc);
                }
            }
        }
        self.amps = next;
        Ok(())
    }

    /// Register value held by basis index `index`.
    #[must_use]
    pub fn extract(&self, reg: &Register, index: u128) -> u64 {
        let shift = self.num_qubits - reg.end();
        ((index >> shift) as u64) & crate::state::mask(reg.len)
    }

    fn deposit(&self, reg: &Register, index: u128, value: u64) -> u128 {
        let shift = self.num_qubits - reg.end();
        let m = u128::from(crate::state::mask(reg.len)) << shift;
        (index & !m) | (u128::from(value) << shift)
    }

    /// Sparse counterpart of [`StateVector::apply_basis_function`]; only
    /// basis states with nonzero amplitude are checked for collisions.
    pub fn apply_basis_function<F>(&mut self, inputs: &[Register], output: &Register, f: F) -> Result<(), StateError>
    where
        F: Fn(&[u64], u64) -> u64,
    {
        let mut next = Map::default();
        let mut vals = vec![0u64; inputs.len()];
        for (idx, a) in &self.amps {
            for (v, r) in vals.iter_mut().zip(inputs) {
                *v = self.extract(r, *idx);
            }
            let c2 = f(&vals, self.extract(output, *idx));
            if c2 > crate::state::mask(output.len) {
                return Err(StateError::OutputOverflow {
                    value: c2,
                    width: output.len,
                });
            }
            let j = self.deposit(output, *idx, c2);
            if next.insert(j, *a).is_some() {
                return Err(StateError::NonInjective { index: j as usize });
            }
        }
        self.amps = next;
        Ok(())
    }

    /// Value of `reg` if every basis state with weight agrees on it.
    #[must_use]
    pub fn definite_value(&self, reg: &Register, tol: f64) -> Option<u64> {
        let mut value = None;
        for (idx, a) in &self.amps {
            if a.norm_sqr() < tol {
                continue;
            }
            let v = self.extract(reg, *idx);
            match value {
                None => value = Some(v),
                Some(w) if w != v => return None,
                _ => {}
            }
        }
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Control;

    #[test]
    fn matches_dense_on_small_circuit() {
        let gates = vec![
            GateOp::h(0),
            GateOp::h(2),
            GateOp::x(1).with_control(Control::on(0)).unwrap(),
            GateOp::r(3, 2, 1).with_control(Control::off(1)).unwrap(),
            GateOp::swap(0, 2),
            GateOp::ry(1, 0.7),
        ];
        let mut dense = StateVector::zero(3).unwrap();
        let mut sparse = SparseState::basis(3, 0).unwrap();
        for g in &gates {
            dense.apply_gate_mut(g).unwrap();
            sparse.apply_gate(g).unwrap();
        }
        let back = sparse.to_dense().unwrap();
        assert!(back.max_abs_diff(&dense).unwrap() < 1e-12);
    }

    #[test]
    fn wide_indices() {
        let mut s = SparseState::basis(100, 0).unwrap();
        s.apply_gate(&GateOp::x(0)).unwrap();
        s.apply_gate(&GateOp::x(99).with_control(Control::on(0)).unwrap())
            .unwrap();
        assert_eq!(s.entries(), vec![((1u128 << 99) | 1, Complex64::new(1.0, 0.0))]);
        let r = Register::new("r", 98, 2);
        assert_eq!(s.definite_value(&r, 1e-12), Some(1));
    }
}
