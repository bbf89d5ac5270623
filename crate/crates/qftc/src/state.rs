//! Dense state vectors, gates and named registers.
//!
//! Qubit 0 is the most significant bit of a basis index. A register is a
//! contiguous run of qubits, so its value is read MSB-first as well.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

/// Tolerance used when checking that a gate matrix is unitary.
pub const UNITARY_TOL: f64 = 1e-12;
/// Probability below which a projection is treated as impossible.
pub const IMPOSSIBLE_PROB: f64 = 1e-14;
/// Largest register width handled by basis-value extraction.
pub const MAX_REGISTER_WIDTH: usize = 63;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("qubit {0} appears more than once in a gate")]
    DuplicateQubit(usize),
    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NonUnitary { deviation: f64 },
    #[error("matrix of dimension {dim} does not match {targets} target qubit(s)")]
    BadMatrixSize { dim: usize, targets: usize },
    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("amplitude array length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("basis function is not injective: two inputs map to index {index}")]
    NonInjective { index: usize },
    #[error("basis function produced {value}, which does not fit in {width} qubits")]
    OutputOverflow { value: u64, width: usize },
    #[error("impossible outcome: projection probability {probability:.3e}")]
    ImpossibleOutcome { probability: f64 },
    #[error("value {value} does not fit in register `{register}` of width {width}")]
    ValueOutOfRange { register: String, value: u64, width: usize },
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("register `{0}` overlaps an existing register")]
    OverlappingRegister(String),
    #[error("{0} qubits exceed the dense simulation limit")]
    TooManyQubits(usize),
}

/// A named, contiguous range of qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Register {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

impl Register {
    pub fn new(name: impl Into<String>, start: usize, len: usize) -> Self {
        Self {
            name: name.into(),
            start,
            len,
        }
    }

    /// Qubit index of digit `i` (0 is the most significant digit).
    #[must_use]
    pub fn qubit(&self, i: usize) -> usize {
        assert!(i < self.len, "digit {i} outside register `{}`", self.name);
        self.start + i
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.start..self.start + self.len
    }

    #[must_use]
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    /// Sub-register made of digits `from..to`.
    #[must_use]
    pub fn slice(&self, from: usize, to: usize) -> Register {
        assert!(from <= to && to <= self.len);
        Register::new(format!("{}[{from}..{to}]", self.name), self.start + from, to - from)
    }

    /// Register value stored in basis index `index` of an `n`-qubit state.
    #[must_use]
    pub fn extract(&self, index: usize, num_qubits: usize) -> u64 {
        let shift = num_qubits - self.end();
        ((index >> shift) as u64) & mask(self.len)
    }

    /// Overwrite the register bits of `index` with `value`.
    #[must_use]
    pub fn deposit(&self, index: usize, num_qubits: usize, value: u64) -> usize {
        let shift = num_qubits - self.end();
        let m = (mask(self.len) as usize) << shift;
        (index & !m) | ((value as usize) << shift)
    }
}

#[inline]
pub(crate) fn mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Ordered, disjoint registers over a fixed number of qubits.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegisterLayout {
    registers: Vec<Register>,
    num_qubits: usize,
}

impl RegisterLayout {
    #[must_use]
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a register of `len` qubits after everything allocated so far.
    pub fn add(&mut self, name: impl Into<String>, len: usize) -> Register {
        let reg = Register::new(name, self.num_qubits, len);
        self.num_qubits += len;
        self.registers.push(reg.clone());
        reg
    }

    /// Insert an explicit register; it must not overlap existing ones.
    pub fn insert(&mut self, reg: Register) -> Result<(), StateError> {
        if self
            .registers
            .iter()
            .any(|r| r.start < reg.end() && reg.start < r.end())
            || self.registers.iter().any(|r| r.name == reg.name)
        {
            return Err(StateError::OverlappingRegister(reg.name));
        }
        self.num_qubits = self.num_qubits.max(reg.end());
        self.registers.push(reg);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Register, StateError> {
        self.registers
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| StateError::UnknownRegister(name.to_string()))
    }

    #[must_use]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    #[must_use]
    pub fn registers(&self) -> &[Register] {
        &self.registers
    }
}

/// One control of a gate; `polarity` is the qubit value that enables it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Control {
    pub qubit: usize,
    pub polarity: bool,
}

impl Control {
    #[must_use]
    pub fn on(qubit: usize) -> Self {
        Self { qubit, polarity: true }
    }

    #[must_use]
    pub fn off(qubit: usize) -> Self {
        Self { qubit, polarity: false }
    }
}

/// A unitary on a few target qubits with optional controls.
///
/// The first target is the most significant bit of the matrix index.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    pub name: String,
    matrix: Vec<Complex64>,
    dim: usize,
    diagonal: bool,
    pub targets: Vec<usize>,
    pub controls: Vec<Control>,
}

impl GateOp {
    /// Build a gate, checking dimensions, qubit distinctness and unitarity.
    pub fn new(name: impl Into<String>, matrix: Vec<Complex64>, targets: Vec<usize>) -> Result<Self, StateError> {
        let dim = 1usize << targets.len();
        if matrix.len() != dim * dim {
            return Err(StateError::BadMatrixSize {
                dim: (matrix.len() as f64).sqrt() as usize,
                targets: targets.len(),
            });
        }
        let deviation = unitary_deviation(&matrix, dim);
        if deviation > UNITARY_TOL {
            return Err(StateError::NonUnitary { deviation });
        }
        let gate = Self::new_unchecked(name, matrix, targets);
        gate.check_distinct()?;
        Ok(gate)
    }

    /// Build a gate from a matrix known to be unitary by construction.
    pub(crate) fn new_unchecked(name: impl Into<String>, matrix: Vec<Complex64>, targets: Vec<usize>) -> Self {
        let dim = 1usize << targets.len();
        debug_assert_eq!(matrix.len(), dim * dim);
        let diagonal = (0..dim).all(|r| (0..dim).all(|c| r == c || matrix[r * dim + c] == ZERO));
        Self {
            name: name.into(),
            matrix,
            dim,
            diagonal,
            targets,
            controls: Vec::new(),
        }
    }

    fn check_distinct(&self) -> Result<(), StateError> {
        let mut seen: Vec<usize> = self.qubits().collect();
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(StateError::DuplicateQubit(w[0]));
            }
        }
        Ok(())
    }

    /// Diagonal gate with the given phases on the target basis states.
    #[must_use]
    pub fn diagonal(name: impl Into<String>, phases: &[Complex64], targets: Vec<usize>) -> Self {
        let dim = phases.len();
        let mut m = vec![ZERO; dim * dim];
        for (i, p) in phases.iter().enumerate() {
            m[i * dim + i] = *p;
        }
        Self::new_unchecked(name, m, targets)
    }

    #[must_use]
    pub fn h(q: usize) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new_unchecked("H", real(&[s, s, s, -s]), vec![q])
    }

    #[must_use]
    pub fn x(q: usize) -> Self {
        Self::new_unchecked("X", real(&[0.0, 1.0, 1.0, 0.0]), vec![q])
    }

    #[must_use]
    pub fn z(q: usize) -> Self {
        Self::diagonal("Z", &[ONE, -ONE], vec![q])
    }

    /// `diag(1, e^{i angle})`.
    #[must_use]
    pub fn phase(q: usize, angle: f64) -> Self {
        Self::diagonal("P", &[ONE, Complex64::from_polar(1.0, angle)], vec![q])
    }

    /// `R_l = diag(1, e^{2 pi i / 2^l})`; `sign` selects the conjugate.
    #[must_use]
    pub fn r(l: u32, q: usize, sign: i32) -> Self {
        let angle = f64::from(sign) * std::f64::consts::TAU / 2f64.powi(l as i32);
        let mut g = Self::phase(q, angle);
        g.name = if sign >= 0 { format!("R{l}") } else { format!("R{l}†") };
        g
    }

    /// Rotation about Y: `[[cos t/2, -sin t/2], [sin t/2, cos t/2]]`.
    #[must_use]
    pub fn ry(q: usize, theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Self::new_unchecked("RY", real(&[c, -s, s, c]), vec![q])
    }

    /// Multiply the whole target by `e^{i angle}`; visible only when controlled.
    #[must_use]
    pub fn global_phase(q: usize, angle: f64) -> Self {
        let p = Complex64::from_polar(1.0, angle);
        Self::diagonal("GPHASE", &[p, p], vec![q])
    }

    #[must_use]
    pub fn swap(a: usize, b: usize) -> Self {
        let mut m = vec![ZERO; 16];
        for (r, c) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            m[r * 4 + c] = ONE;
        }
        Self::new_unchecked("SWAP", m, vec![a, b])
    }

    /// Add a control; fails if the qubit is already used by the gate.
    pub fn with_control(mut self, control: Control) -> Result<Self, StateError> {
        self.controls.push(control);
        self.check_distinct()?;
        Ok(self)
    }

    pub fn with_controls(mut self, controls: &[Control]) -> Result<Self, StateError> {
        self.controls.extend_from_slice(controls);
        self.check_distinct()?;
        Ok(self)
    }

    pub(crate) fn ctrl(mut self, controls: &[Control]) -> Self {
        self.controls.extend_from_slice(controls);
        debug_assert!(self.check_distinct().is_ok(), "{self:?}");
        self
    }

    /// The conjugate transpose, with the same qubits.
    #[must_use]
    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut m = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                m[c * d + r] = self.matrix[r * d + c].conj();
            }
        }
        Self {
            name: format!("{}†", self.name),
            matrix: m,
            dim: d,
            diagonal: self.diagonal,
            targets: self.targets.clone(),
            controls: self.controls.clone(),
        }
    }

    #[must_use]
    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[must_use]
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// Every qubit the gate touches, targets first.
    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets
            .iter()
            .copied()
            .chain(self.controls.iter().map(|c| c.qubit))
    }

    #[must_use]
    pub fn arity(&self) -> usize {
        self.targets.len() + self.controls.len()
    }

    /// Renumber every qubit through `map`.
    #[must_use]
    pub fn remap(&self, map: impl Fn(usize) -> usize) -> Self {
        let mut g = self.clone();
        for t in &mut g.targets {
            *t = map(*t);
        }
        for c in &mut g.controls {
            c.qubit = map(c.qubit);
        }
        g
    }
}

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn real(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Largest entry of `|U^dagger U - I|`.
#[must_use]
pub fn unitary_deviation(m: &[Complex64], dim: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = ZERO;
            for k in 0..dim {
                acc += m[k * dim + i].conj() * m[k * dim + j];
            }
            if i == j {
                acc -= ONE;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

/// Dense vector of `2^n` complex amplitudes.
#[derive(Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateVector")
            .field("num_qubits", &self.num_qubits)
            .field("norm", &self.norm())
            .finish()
    }
}

impl StateVector {
    /// `|0...0>` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self, StateError> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self, StateError> {
        if num_qubits > 30 {
            return Err(StateError::TooManyQubits(num_qubits));
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(StateError::QubitOutOfRange {
                qubit: index,
                num_qubits,
            });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(Self { num_qubits, amps })
    }

    /// Wrap raw amplitudes; no normalization is applied.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, StateError> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(StateError::NotPowerOfTwo(len));
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    #[must_use]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    #[must_use]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    #[must_use]
    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    #[must_use]
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    #[must_use]
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Copy scaled to unit norm; the zero vector is returned unchanged.
    #[must_use]
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        let mut out = self.clone();
        if n > 0.0 {
            out.amps.iter_mut().for_each(|a| *a /= n);
        }
        out
    }

    /// `|self> (x) |other>`, with `self` on the leading qubits.
    #[must_use]
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        StateVector {
            num_qubits: self.num_qubits + other.num_qubits,
            amps,
        }
    }

    fn check_qubit(&self, q: usize) -> Result<(), StateError> {
        if q >= self.num_qubits {
            Err(StateError::QubitOutOfRange {
                qubit: q,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    fn check_register(&self, reg: &Register) -> Result<(), StateError> {
        if reg.len == 0 || reg.len > MAX_REGISTER_WIDTH {
            return Err(StateError::ValueOutOfRange {
                register: reg.name.clone(),
                value: 0,
                width: reg.len,
            });
        }
        self.check_qubit(reg.end() - 1)
    }

    /// Pure gate application.
    pub fn apply_gate(&self, gate: &GateOp) -> Result<StateVector, StateError> {
        let mut out = self.clone();
        out.apply_gate_mut(gate)?;
        Ok(out)
    }

    /// In-place gate application.
    pub fn apply_gate_mut(&mut self, gate: &GateOp) -> Result<(), StateError> {
        for q in gate.qubits() {
            self.check_qubit(q)?;
        }
        apply_gate_in_place(&mut self.amps, self.num_qubits, gate);
        Ok(())
    }

    /// Permute basis states: `|a>|c> -> |a>|f(a, c)>`.
    ///
    /// `inputs` are read but unchanged; `output` is overwritten with
    /// `f(input values, output value)`. Every basis state is checked, so a
    /// non-injective `f` is rejected regardless of the amplitudes.
    pub fn apply_basis_function<F>(
        &self,
        inputs: &[Register],
        output: &Register,
        f: F,
    ) -> Result<StateVector, StateError>
    where
        F: Fn(&[u64], u64) -> u64,
    {
        let mut out = self.clone();
        out.apply_basis_function_mut(inputs, output, f)?;
        Ok(out)
    }

    pub fn apply_basis_function_mut<F>(
        &mut self,
        inputs: &[Register],
        output: &Register,
        f: F,
    ) -> Result<(), StateError>
    where
        F: Fn(&[u64], u64) -> u64,
    {
        for r in inputs.iter().chain(std::iter::once(output)) {
            self.check_register(r)?;
        }
        for r in inputs {
            if r.start < output.end() && output.start < r.end() {
                return Err(StateError::OverlappingRegister(r.name.clone()));
            }
        }
        let n = self.num_qubits;
        let dim = self.amps.len();
        let mut next = vec![ZERO; dim];
        let mut seen = vec![false; dim];
        let mut vals = vec![0u64; inputs.len()];
        for (i, amp) in self.amps.iter().enumerate() {
            for (v, r) in vals.iter_mut().zip(inputs) {
                *v = r.extract(i, n);
            }
            let c = output.extract(i, n);
            let c2 = f(&vals, c);
            if c2 > mask(output.len) {
                return Err(StateError::OutputOverflow {
                    value: c2,
                    width: output.len,
                });
            }
            let j = output.deposit(i, n, c2);
            if seen[j] {
                return Err(StateError::NonInjective { index: j });
            }
            seen[j] = true;
            next[j] = *amp;
        }
        self.amps = next;
        Ok(())
    }

    /// Project `register` onto `value` and renormalize.
    ///
    /// Returns the projected state (same qubits) and the probability mass
    /// of the outcome before projection.
    pub fn postselect(&self, register: &Register, value: u64) -> Result<(StateVector, f64), StateError> {
        self.check_register(register)?;
        if value > mask(register.len) {
            return Err(StateError::ValueOutOfRange {
                register: register.name.clone(),
                value,
                width: register.len,
            });
        }
        let n = self.num_qubits;
        let mut out = self.clone();
        let mut prob = 0.0;
        for (i, a) in out.amps.iter_mut().enumerate() {
            if register.extract(i, n) == value {
                prob += a.norm_sqr();
            } else {
                *a = ZERO;
            }
        }
        if prob < IMPOSSIBLE_PROB {
            return Err(StateError::ImpossibleOutcome { probability: prob });
        }
        let s = prob.sqrt();
        out.amps.iter_mut().for_each(|a| *a /= s);
        Ok((out, prob))
    }

    /// Unnormalized projection of `register` onto `value`, with the register
    /// removed from the result.
    pub fn project_out(&self, register: &Register, value: u64) -> Result<StateVector, StateError> {
        self.check_register(register)?;
        let n = self.num_qubits;
        let rest = n - register.len;
        let low = n - register.end();
        let mut amps = vec![ZERO; 1usize << rest];
        for (j, a) in amps.iter_mut().enumerate() {
            let hi = j >> low;
            let lo = j & ((1usize << low) - 1);
            let i = (((hi << register.len) | value as usize) << low) | lo;
            *a = self.amps[i];
        }
        Ok(StateVector { num_qubits: rest, amps })
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &StateVector) -> Result<Complex64, StateError> {
        if self.num_qubits != other.num_qubits {
            return Err(StateError::DimensionMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    #[must_use]
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(Complex64::norm_sqr).collect()
    }

    /// Probability of each value of `register`.
    pub fn marginal(&self, register: &Register) -> Result<Vec<f64>, StateError> {
        self.check_register(register)?;
        if register.len > 24 {
            return Err(StateError::TooManyQubits(register.len));
        }
        let mut p = vec![0.0; 1usize << register.len];
        for (i, a) in self.amps.iter().enumerate() {
            p[register.extract(i, self.num_qubits) as usize] += a.norm_sqr();
        }
        Ok(p)
    }

    /// Largest `|a_i - b_i|`.
    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64, StateError> {
        if self.num_qubits != other.num_qubits {
            return Err(StateError::DimensionMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

/// Positions (bit index, LSB = 0) of each qubit.
#[inline]
fn bitpos(n: usize, q: usize) -> usize {
    n - 1 - q
}

/// Insert a zero bit at each of the ascending positions in `fixed`.
#[inline]
fn deposit_zeros(mut x: usize, fixed: &[usize]) -> usize {
    for &p in fixed {
        let low = x & ((1usize << p) - 1);
        x = low | ((x >> p) << (p + 1));
    }
    x
}

pub(crate) fn apply_gate_in_place(amps: &mut [Complex64], n: usize, gate: &GateOp) {
    let t = gate.targets.len();
    let d = gate.dim;
    let mut fixed: Vec<usize> = gate.qubits().map(|q| bitpos(n, q)).collect();
    fixed.sort_unstable();
    let mut ctrl_val = 0usize;
    for c in &gate.controls {
        if c.polarity {
            ctrl_val |= 1 << bitpos(n, c.qubit);
        }
    }
    let offsets: Vec<usize> = (0..d)
        .map(|r| {
            (0..t)
                .filter(|i| (r >> (t - 1 - i)) & 1 == 1)
                .map(|i| 1usize << bitpos(n, gate.targets[i]))
                .sum()
        })
        .collect();
    let free = n - fixed.len();
    let count = 1usize << free;
    let m = &gate.matrix;

    if gate.diagonal {
        let diag: Vec<Complex64> = (0..d).map(|r| m[r * d + r]).collect();
        let active: Vec<(usize, Complex64)> = offsets
            .iter()
            .zip(&diag)
            .filter(|(_, p)| **p != ONE)
            .map(|(o, p)| (*o, *p))
            .collect();
        for r in 0..count {
            let base = deposit_zeros(r, &fixed) | ctrl_val;
            for (o, p) in &active {
                amps[base + o] *= p;
            }
        }
        return;
    }

    if t == 1 {
        let (m00, m01, m10, m11) = (m[0], m[1], m[2], m[3]);
        let o = offsets[1];
        for r in 0..count {
            let base = deposit_zeros(r, &fixed) | ctrl_val;
            let a = amps[base];
            let b = amps[base + o];
            amps[base] = m00 * a + m01 * b;
            amps[base + o] = m10 * a + m11 * b;
        }
        return;
    }

    // Sparse rows keep permutation-like and block-diagonal matrices cheap.
    let rows: Vec<Vec<(usize, Complex64)>> = (0..d)
        .map(|r| {
            (0..d)
                .filter(|&c| m[r * d + c] != ZERO)
                .map(|c| (c, m[r * d + c]))
                .collect()
        })
        .collect();
    let mut v = vec![ZERO; d];
    for r in 0..count {
        let base = deposit_zeros(r, &fixed) | ctrl_val;
        for (k, o) in offsets.iter().enumerate() {
            v[k] = amps[base + o];
        }
        for (row, o) in rows.iter().zip(&offsets) {
            amps[base + o] = row.iter().map(|(c, x)| x * v[*c]).sum();
        }
    }
}
