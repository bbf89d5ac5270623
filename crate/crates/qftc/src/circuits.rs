//! Standard building blocks: QFT, the controlled phase network, swap test,
//! Grover operator and amplitude estimation.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::circuit::CircuitProgram;
use crate::error::{invalid, Result};
use crate::fixed::{FixedPointCode, FixedPointFormat};
use crate::state::{Control, GateOp, Register, RegisterLayout, StateVector, ONE};

/// QFT gates on `reg`, including the final qubit reversal.
///
/// Implements `F_kj = e^{2 pi i jk / N} / sqrt(N)` with the register read
/// most significant qubit first.
#[must_use]
pub fn qft_gates(reg: &Register, inverse: bool) -> Vec<GateOp> {
    let n = reg.len;
    let mut gates = Vec::with_capacity(n * (n + 1) / 2 + n / 2);
    for q in 0..n {
        gates.push(GateOp::h(reg.qubit(q)));
        for r in q + 1..n {
            gates.push(GateOp::r((r - q + 1) as u32, reg.qubit(q), 1).ctrl(&[Control::on(reg.qubit(r))]));
        }
    }
    for q in 0..n / 2 {
        gates.push(GateOp::swap(reg.qubit(q), reg.qubit(n - 1 - q)));
    }
    if inverse {
        gates.reverse();
        gates.iter().map(GateOp::adjoint).collect()
    } else {
        gates
    }
}

/// QFT (or its inverse) on an `l`-qubit register.
pub fn qft_circuit(l: usize, inverse: bool) -> Result<CircuitProgram> {
    if l == 0 {
        return Err(invalid("QFT needs at least one qubit"));
    }
    let mut layout = RegisterLayout::new();
    let reg = layout.add("x", l);
    let mut p = CircuitProgram::new(layout);
    for g in qft_gates(&reg, inverse) {
        p.gate(g);
    }
    Ok(p)
}

/// Gates applying `e^{2 pi i jk/N}` to `|k>|j>|1>` and nothing when the
/// ancilla is 0.
///
/// Digit `k_i` pairs with `j_a` only when `i + a > L`; the other pairs
/// contribute whole turns. That leaves `L(L+1)/2` controlled `R` gates.
pub fn controlled_phase_gates(k: &Register, j: &Register, anc: usize) -> Result<Vec<GateOp>> {
    if k.len != j.len || k.len == 0 {
        return Err(invalid(format!(
            "phase network needs equal nonzero widths, got {} and {}",
            k.len, j.len
        )));
    }
    let l = k.len;
    let mut gates = Vec::with_capacity(l * (l + 1) / 2);
    for i in 1..=l {
        for a in (l + 1 - i)..=l {
            gates.push(
                GateOp::r((i + a - l) as u32, j.qubit(a - 1), 1).ctrl(&[Control::on(k.qubit(i - 1)), Control::on(anc)]),
            );
        }
    }
    Ok(gates)
}

/// Program over registers `k`, `j` (each `l` qubits) and one ancilla.
pub fn controlled_phase_network(l: usize) -> Result<CircuitProgram> {
    let mut layout = RegisterLayout::new();
    let k = layout.add("k", l);
    let j = layout.add("j", l);
    let a = layout.add("anc", 1);
    let mut p = CircuitProgram::new(layout);
    for g in controlled_phase_gates(&k, &j, a.start)? {
        p.gate(g);
    }
    Ok(p)
}

/// Branch sign of the reference states `phi+` and `phi-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    #[must_use]
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    #[must_use]
    pub fn as_i32(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// Gates preparing `phi+-` on `reg`: the first `L` qubits hold `j`, the
/// last qubit is the branch flag `b`.
pub fn phi_pm_gates(reg: &Register, sign: Sign) -> Result<Vec<GateOp>> {
    if reg.len < 2 {
        return Err(invalid("phi register needs L + 1 >= 2 qubits"));
    }
    let mut gates: Vec<GateOp> = reg.qubits().map(GateOp::h).collect();
    if sign == Sign::Minus {
        gates.push(GateOp::z(reg.qubit(reg.len - 1)));
    }
    Ok(gates)
}

/// `|0^{L+1}> -> (sum_j +-|j>|1> + sum_j |j>|0>) / sqrt(2N)`.
pub fn prepare_phi_pm(l: usize, sign: Sign) -> Result<CircuitProgram> {
    let mut layout = RegisterLayout::new();
    let reg = layout.add("phi", l + 1);
    let mut p = CircuitProgram::new(layout);
    for g in phi_pm_gates(&reg, sign)? {
        p.gate(g);
    }
    Ok(p)
}

/// Swap test gates: `H`, qubit-wise controlled swaps, `H`.
pub fn swap_test_gates(anc: usize, a: &Register, b: &Register) -> Result<Vec<GateOp>> {
    if a.len != b.len {
        return Err(invalid(format!(
            "swap test needs equal widths, got {} and {}",
            a.len, b.len
        )));
    }
    let mut gates = vec![GateOp::h(anc)];
    for (qa, qb) in a.qubits().zip(b.qubits()) {
        gates.push(GateOp::swap(qa, qb).ctrl(&[Control::on(anc)]));
    }
    gates.push(GateOp::h(anc));
    Ok(gates)
}

/// Swap test on a layout `anc, A, B` with `A` and `B` of `width` qubits.
pub fn swap_test(width: usize) -> Result<CircuitProgram> {
    let mut layout = RegisterLayout::new();
    let anc = layout.add("anc", 1);
    let a = layout.add("a", width);
    let b = layout.add("b", width);
    let mut p = CircuitProgram::new(layout);
    for g in swap_test_gates(anc.start, &a, &b)? {
        p.gate(g);
    }
    Ok(p)
}

/// `Q = -A S0 A^dagger S_chi` for a preparation `A`.
///
/// The flagged qubit marks good states by the value 0. `S0` reflects about
/// the all-zero state of the work registers; registers outside `work` (such
/// as a control register) are left alone.
#[derive(Debug, Clone)]
pub struct GroverOperator {
    pub preparation: CircuitProgram,
    pub flagged: usize,
    pub work: Vec<Register>,
    pub program: CircuitProgram,
}

pub fn grover_q(prep: CircuitProgram, flagged: usize, work: Vec<Register>) -> Result<GroverOperator> {
    if !work.iter().any(|r| r.qubits().any(|q| q == flagged)) {
        return Err(invalid("flagged qubit must belong to a work register"));
    }
    let reflect = || GateOp::diagonal("S", &[-ONE, ONE], vec![flagged]);
    let zero_controls: Vec<Control> = work
        .iter()
        .flat_map(Register::qubits)
        .filter(|&q| q != flagged)
        .map(Control::off)
        .collect();
    let mut q = CircuitProgram::new(prep.layout.clone());
    q.gate(reflect());
    q.append(&prep.inverse());
    q.gate(reflect().ctrl(&zero_controls));
    q.append(&prep);
    q.gate(GateOp::global_phase(flagged, PI));
    Ok(GroverOperator {
        preparation: prep,
        flagged,
        work,
        program: q,
    })
}

/// Estimation stage: Hadamards, controlled powers of `Q`, inverse QFT.
///
/// Qubit `i` of `est` controls `Q^{2^{p-1-i}}`, so the register ends up
/// holding `M / 2^p` close to `theta / pi` or `1 - theta / pi`.
#[must_use]
pub fn amplitude_estimation_program(q: &GroverOperator, est: &Register) -> CircuitProgram {
    let p = est.len;
    let mut prog = CircuitProgram::new(q.program.layout.clone());
    for e in est.qubits() {
        prog.gate(GateOp::h(e));
    }
    for i in 0..p {
        let body = Arc::new(q.program.controlled(&[Control::on(est.qubit(i))]));
        prog.repeat(body, 1u64 << (p - 1 - i));
    }
    for g in qft_gates(est, true) {
        prog.gate(g);
    }
    prog
}

/// Run amplitude estimation on `target`, appending a fresh `p_est`-qubit
/// estimation register after the qubits of `target`.
pub fn amplitude_estimation(q: &GroverOperator, p_est: usize, target: &StateVector) -> Result<StateVector> {
    if p_est < 1 {
        return Err(invalid("estimation register needs at least one qubit"));
    }
    let n = target.num_qubits();
    let est = Register::new("est", n, p_est);
    let prog = amplitude_estimation_program(q, &est);
    let state = target.tensor(&StateVector::zero(p_est)?);
    Ok(prog.run(&state)?)
}

/// Estimation-register amplitudes of amplitude estimation, simulated in
/// the two-dimensional plane spanned by the good and bad components.
///
/// The plane qubit starts in `(sin theta, cos theta)` and `Q` acts as
/// `[[cos 2t, sin 2t], [-sin 2t, cos 2t]]`. Returns the state over the
/// `p + 1` qubits (estimation register first, plane qubit last).
pub fn semantic_ae_state(theta: f64, p: usize) -> Result<StateVector> {
    if p < 1 {
        return Err(invalid("estimation register needs at least one qubit"));
    }
    let est = Register::new("est", 0, p);
    let plane = p;
    let mut s = StateVector::zero(p + 1)?;
    s.apply_gate_mut(&GateOp::ry(plane, PI - 2.0 * theta))?;
    for e in est.qubits() {
        s.apply_gate_mut(&GateOp::h(e))?;
    }
    for i in 0..p {
        let angle = 2.0 * theta * (1u64 << (p - 1 - i)) as f64;
        s.apply_gate_mut(&GateOp::ry(plane, -2.0 * angle).ctrl(&[Control::on(est.qubit(i))]))?;
    }
    for g in qft_gates(&est, true) {
        s.apply_gate_mut(&g)?;
    }
    Ok(s)
}

/// Outcome distribution `P(M)` of amplitude estimation at angle `theta`.
pub fn ae_distribution(theta: f64, p: usize) -> Result<Vec<f64>> {
    let s = semantic_ae_state(theta, p)?;
    Ok(s.marginal(&Register::new("est", 0, p))?)
}

/// One outcome of amplitude estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeEstimate {
    pub p_est: usize,
    /// `M / 2^p` as a plain code.
    pub raw: FixedPointCode,
    /// `pi * raw`.
    pub theta: f64,
}

impl AmplitudeEstimate {
    pub fn from_outcome(m: u64, p_est: usize) -> Result<Self> {
        let raw = FixedPointCode::from_raw(FixedPointFormat::plain(p_est), m)?;
        Ok(Self {
            p_est,
            raw,
            theta: PI * raw.value(),
        })
    }

    /// The estimate mapped into `[0, pi/2]`; both eigenbranches agree here.
    #[must_use]
    pub fn folded_theta(&self) -> f64 {
        let v = self.raw.value();
        PI * v.min(1.0 - v)
    }

    /// `sin^2` of the estimate, the decoded flagged probability.
    #[must_use]
    pub fn probability(&self) -> f64 {
        self.theta.sin().powi(2)
    }
}

/// Amplitude of a basis column of the DFT matrix, used by tests.
#[must_use]
pub fn fourier_entry(k: usize, j: usize, n: usize) -> Complex64 {
    Complex64::from_polar(1.0 / (n as f64).sqrt(), 2.0 * PI * (j * k % n) as f64 / n as f64)
}
