//! The QFTC pipeline: `(1/sqrt N) sum_k |k>|y_k>` with `y_k` as a binary code.
//!
//! Each branch `+-` prepares `psi+-_k` (Hadamard on `k`, conditional oracle
//! load, phase network, reference state, swap test), runs amplitude
//! estimation of `Q+-_k`, and turns the estimate into `|<phi+-|phi_k>|^2`.
//! The difference of the two branch values, rounded to `p0` digits, is
//! written to the output register and everything else is uncomputed.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::arith::{rounded_difference, OverlapBox};
use crate::circuit::{BasisOp, CircuitProgram, Combine, ExecOptions};
use crate::circuits::{
    ae_distribution, amplitude_estimation_program, controlled_phase_gates, grover_q, phi_pm_gates, swap_test_gates,
    GroverOperator, Sign,
};
use crate::error::{invalid, QftcError, Result};
use crate::fixed::{encode_fixed, FixedPointFormat};
use crate::oracle::{oracle_call, InputVector};
use crate::reference::dft_reference;
use crate::state::{Control, GateOp, Register, RegisterLayout, StateVector, ZERO};
use crate::tally::{CostModel, GateTally};

/// Default cap on qubits simulated densely in one state.
pub const DEFAULT_MAX_QUBITS: usize = 24;

/// Largest imaginary part of a DFT coefficient accepted as real.
pub const REAL_DFT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One state over every register.
    Full,
    /// One small simulation per value of `k`.
    BlockDiagonal,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::BlockDiagonal => "block_diagonal",
        })
    }
}

impl FromStr for Mode {
    type Err = QftcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "block_diagonal" | "block" => Ok(Mode::BlockDiagonal),
            _ => Err(invalid(format!("unknown mode `{s}` (full | block_diagonal)"))),
        }
    }
}

/// `p0 + ceil(log2(2 + 1/(2 delta)))` estimation qubits.
pub fn estimation_width(p0: usize, delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta = {delta} must lie in (0, 1)")));
    }
    Ok(p0 + (2.0 + 1.0 / (2.0 * delta)).log2().ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QftcConfig {
    /// Qubits of the `k` register, `N = 2^l`.
    pub l: usize,
    /// Output fraction digits; accuracy `2^-p0`.
    pub p0: usize,
    /// Target infidelity.
    pub delta: f64,
    /// Estimation register width.
    pub p_est: usize,
    pub mode: Mode,
    /// Dense-simulation budget for full mode.
    pub max_qubits: usize,
}

impl QftcConfig {
    pub fn new(l: usize, p0: usize, delta: f64, mode: Mode) -> Result<Self> {
        if l == 0 {
            return Err(invalid("L >= 1 is required"));
        }
        if p0 == 0 || p0 > 16 {
            return Err(invalid(format!("p0 = {p0} must lie in 1..=16")));
        }
        let p_est = estimation_width(p0, delta)?;
        let cfg = Self {
            l,
            p0,
            delta,
            p_est,
            mode,
            max_qubits: DEFAULT_MAX_QUBITS,
        };
        cfg.overlap_box()?;
        Ok(cfg)
    }

    #[must_use]
    pub fn with_max_qubits(mut self, max_qubits: usize) -> Self {
        self.max_qubits = max_qubits;
        self
    }

    #[must_use]
    pub fn n(&self) -> usize {
        1 << self.l
    }

    #[must_use]
    pub fn epsilon(&self) -> f64 {
        (-(self.p0 as f64)).exp2()
    }

    /// Format of the output register, `1 + p0` qubits.
    #[must_use]
    pub fn output_format(&self) -> FixedPointFormat {
        FixedPointFormat::complemental(self.p0)
    }

    pub fn overlap_box(&self) -> Result<OverlapBox> {
        OverlapBox::new(self.p_est)
    }

    /// Qubits of the full-mode state.
    #[must_use]
    pub fn full_mode_qubits(&self) -> usize {
        self.l + 2 * (3 + 2 * self.l + self.p_est) + self.p0 + 1
    }
}

/// Registers of one branch: swap qubit, `phi_k` (j then flag), reference
/// state, estimation register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchRegisters {
    pub s: Register,
    pub phi_k: Register,
    pub phi_ref: Register,
    pub est: Option<Register>,
}

impl BranchRegisters {
    fn allocate(layout: &mut RegisterLayout, l: usize, p_est: Option<usize>, tag: &str) -> Self {
        Self {
            s: layout.add(format!("s{tag}"), 1),
            phi_k: layout.add(format!("phi_k{tag}"), l + 1),
            phi_ref: layout.add(format!("phi{tag}"), l + 1),
            est: p_est.map(|p| layout.add(format!("est{tag}"), p)),
        }
    }

    fn work(&self) -> Vec<Register> {
        vec![self.s.clone(), self.phi_k.clone(), self.phi_ref.clone()]
    }
}

/// Where the phase network reads `k` from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KSource {
    Register(Register),
    /// A fixed value, as inside one block of the block-diagonal mode.
    Classical(usize),
}

/// Appends `A+-_k` to `prog`.
fn push_preparation(
    prog: &mut CircuitProgram,
    x: &InputVector,
    sign: Sign,
    k: &KSource,
    regs: &BranchRegisters,
) -> Result<()> {
    let l = x.num_qubits();
    let j = regs.phi_k.slice(0, l);
    let b = regs.phi_k.qubit(l);
    prog.gate(GateOp::h(b));
    prog.oracle(oracle_call(x, &j, &[Control::on(b)]));
    for q in j.qubits() {
        prog.gate(GateOp::h(q).ctrl(&[Control::off(b)]));
    }
    match k {
        KSource::Register(kr) => {
            for g in controlled_phase_gates(kr, &j, b)? {
                prog.gate(g);
            }
        }
        KSource::Classical(kv) => {
            if *kv >= 1 << l {
                return Err(invalid(format!("k = {kv} exceeds N - 1")));
            }
            for i in 1..=l {
                if kv >> (l - i) & 1 == 1 {
                    for a in (l + 1 - i)..=l {
                        prog.gate(GateOp::r((i + a - l) as u32, j.qubit(a - 1), 1).ctrl(&[Control::on(b)]));
                    }
                }
            }
        }
    }
    for g in phi_pm_gates(&regs.phi_ref, sign)? {
        prog.gate(g);
    }
    for g in swap_test_gates(regs.s.start, &regs.phi_k, &regs.phi_ref)? {
        prog.gate(g);
    }
    Ok(())
}

/// `A+-_k` over registers `k`, `s`, `phi_k`, `phi+-` (in that order).
pub fn build_preparation(config: &QftcConfig, x: &InputVector, sign: Sign) -> Result<CircuitProgram> {
    if x.len() != config.n() {
        return Err(invalid(format!(
            "input has N = {} but the layout expects {}",
            x.len(),
            config.n()
        )));
    }
    let mut layout = RegisterLayout::new();
    let k = layout.add("k", config.l);
    let regs = BranchRegisters::allocate(&mut layout, config.l, None, "");
    let mut prog = CircuitProgram::new(layout);
    push_preparation(&mut prog, x, sign, &KSource::Register(k), &regs)?;
    Ok(prog)
}

/// `A+-_k` for a fixed `k` over `s`, `phi_k`, `phi+-`.
pub fn block_preparation(x: &InputVector, sign: Sign, k: usize) -> Result<(CircuitProgram, BranchRegisters)> {
    let mut layout = RegisterLayout::new();
    let regs = BranchRegisters::allocate(&mut layout, x.num_qubits(), None, "");
    let mut prog = CircuitProgram::new(layout);
    push_preparation(&mut prog, x, sign, &KSource::Classical(k), &regs)?;
    Ok((prog, regs))
}

/// Grover operator of one block.
pub fn block_grover(x: &InputVector, sign: Sign, k: usize) -> Result<GroverOperator> {
    let (prep, regs) = block_preparation(x, sign, k)?;
    grover_q(prep, regs.s.start, regs.work())
}

/// `theta` with `sin^2 theta` the probability of reading 0 on the swap
/// qubit, from a gate-level run of the block preparation.
pub fn block_theta(x: &InputVector, sign: Sign, k: usize) -> Result<f64> {
    let (prep, regs) = block_preparation(x, sign, k)?;
    let state = prep.run(&StateVector::zero(prep.num_qubits())?)?;
    let good = state.marginal(&regs.s)?[0];
    Ok(good.clamp(0.0, 1.0).sqrt().asin())
}

/// Which of the three states of the pipeline a [`PhiState`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhiKind {
    PhiK,
    PhiPlus,
    PhiMinus,
}

#[derive(Debug, Clone)]
pub struct PhiState {
    pub kind: PhiKind,
    pub k: Option<usize>,
    /// State over `L + 1` qubits: `j` then the flag.
    pub vector: StateVector,
}

impl PhiState {
    /// `phi_k = (sum_j x_j e^{2 pi i jk/N} |j>|1> + sum_j |j>|0>/sqrt N)/sqrt 2`.
    pub fn phi_k(x: &InputVector, k: usize) -> Result<Self> {
        let l = x.num_qubits();
        let mut layout = RegisterLayout::new();
        let reg = layout.add("phi_k", l + 1);
        // Only the steps that act on phi_k: flag, conditional load, phase.
        let j = reg.slice(0, l);
        let b = reg.qubit(l);
        let mut prog = CircuitProgram::new(layout);
        prog.gate(GateOp::h(b));
        prog.oracle(oracle_call(x, &j, &[Control::on(b)]));
        for q in j.qubits() {
            prog.gate(GateOp::h(q).ctrl(&[Control::off(b)]));
        }
        for i in 1..=l {
            if k >> (l - i) & 1 == 1 {
                for a in (l + 1 - i)..=l {
                    prog.gate(GateOp::r((i + a - l) as u32, j.qubit(a - 1), 1).ctrl(&[Control::on(b)]));
                }
            }
        }
        let vector = prog.run(&StateVector::zero(l + 1)?)?;
        Ok(Self {
            kind: PhiKind::PhiK,
            k: Some(k),
            vector,
        })
    }

    pub fn reference(l: usize, sign: Sign) -> Result<Self> {
        let reg = Register::new("phi", 0, l + 1);
        let mut v = StateVector::zero(l + 1)?;
        for g in phi_pm_gates(&reg, sign)? {
            v.apply_gate_mut(&g)?;
        }
        Ok(Self {
            kind: if sign == Sign::Plus {
                PhiKind::PhiPlus
            } else {
                PhiKind::PhiMinus
            },
            k: None,
            vector: v,
        })
    }
}

/// Decoded row for one `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerK {
    pub k: usize,
    pub y_exact: f64,
    /// Value of the most probable output code.
    pub y_hat: f64,
    /// Joint probability of `k` and the most probable code.
    pub prob_mass: f64,
    /// Joint probability of `k` and each output code; sums to `1/N`.
    pub distribution: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QftcResult {
    pub config: QftcConfig,
    pub per_k: Vec<PerK>,
    /// `|<Psi_final|ideal>|` with the ancillas projected on zero.
    pub fidelity: f64,
    /// Squared norm of the projected state, the population of blank ancillas.
    pub ancilla_population: f64,
    pub tally: GateTally,
}

impl QftcResult {
    #[must_use]
    pub fn max_abs_error(&self) -> f64 {
        self.per_k
            .iter()
            .map(|r| (r.y_hat - r.y_exact).abs())
            .fold(0.0, f64::max)
    }

    /// Every dominant code within `epsilon` and fidelity at least `1 - delta`.
    #[must_use]
    pub fn passes(&self) -> bool {
        self.per_k
            .iter()
            .all(|r| (r.y_hat - r.y_exact).abs() <= self.config.epsilon())
            && self.fidelity >= 1.0 - self.config.delta
    }
}

/// Exact `y_k`, after checking that they are real and leave half an output
/// ulp of headroom below 1 in magnitude.
pub fn exact_outputs(x: &InputVector, config: &QftcConfig) -> Result<Vec<f64>> {
    if x.len() != config.n() {
        return Err(invalid(format!(
            "input has N = {} but the configuration has N = {}",
            x.len(),
            config.n()
        )));
    }
    let y = dft_reference(x.components());
    let limit = 1.0 - (-(config.p0 as f64) - 1.0).exp2();
    let mut out = Vec::with_capacity(y.len());
    for (k, v) in y.iter().enumerate() {
        if v.im.abs() > REAL_DFT_TOLERANCE {
            return Err(QftcError::Unrepresentable(format!(
                "y_{k} has imaginary part {:.3e}; split the input with real_reduction first",
                v.im
            )));
        }
        if v.re.abs() >= limit {
            return Err(QftcError::Unrepresentable(format!(
                "unrepresentable y_{k} = {:.6}: |y| must stay below {limit}",
                v.re
            )));
        }
        out.push(v.re);
    }
    Ok(out)
}

/// Ideal state `(1/sqrt N) sum_k |k>|y~_k>` with `y~_k` the nearest code.
pub fn ideal_target(y: &[f64], config: &QftcConfig) -> Result<StateVector> {
    let w = config.p0 + 1;
    let scale = 1.0 / (y.len() as f64).sqrt();
    let mut amps = vec![ZERO; y.len() << w];
    for (k, &v) in y.iter().enumerate() {
        let code = encode_fixed(v, config.output_format())?;
        amps[(k << w) | code.raw() as usize] = Complex64::new(scale, 0.0);
    }
    Ok(StateVector::from_amplitudes(amps)?)
}

/// Reads the `(k, y)` state: per-`k` code distribution, dominant code and
/// fidelity against the ideal target.
pub fn decode_results(
    final_state: &StateVector,
    config: &QftcConfig,
    y_exact: &[f64],
    tally: GateTally,
) -> Result<QftcResult> {
    let w = config.p0 + 1;
    let n = config.n();
    if final_state.num_qubits() != config.l + w || y_exact.len() != n {
        return Err(invalid("final state does not match the (k, y) layout"));
    }
    let fmt = config.output_format();
    let amps = final_state.amplitudes();
    let mut per_k = Vec::with_capacity(n);
    for (k, &y) in y_exact.iter().enumerate() {
        let block: Vec<f64> = amps[k << w..(k + 1) << w].iter().map(Complex64::norm_sqr).collect();
        let total: f64 = block.iter().sum();
        let distribution: Vec<f64> = block
            .iter()
            .map(|p| if total > 0.0 { p / total / n as f64 } else { 0.0 })
            .collect();
        let (best, mass) = distribution
            .iter()
            .enumerate()
            .fold((0usize, -1.0), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
        per_k.push(PerK {
            k,
            y_exact: y,
            y_hat: fmt.value_of(best as u64),
            prob_mass: mass.max(0.0),
            distribution,
        });
    }
    let ideal = ideal_target(y_exact, config)?;
    Ok(QftcResult {
        config: *config,
        per_k,
        fidelity: ideal.overlap(final_state)?.norm(),
        ancilla_population: final_state.norm_sqr(),
        tally,
    })
}

/// Layout of the full-mode state.
#[derive(Debug, Clone)]
pub struct FullLayout {
    pub layout: RegisterLayout,
    pub k: Register,
    pub plus: BranchRegisters,
    pub minus: BranchRegisters,
    pub y: Register,
}

impl FullLayout {
    #[must_use]
    pub fn new(config: &QftcConfig) -> Self {
        let mut layout = RegisterLayout::new();
        let k = layout.add("k", config.l);
        let plus = BranchRegisters::allocate(&mut layout, config.l, Some(config.p_est), "+");
        let minus = BranchRegisters::allocate(&mut layout, config.l, Some(config.p_est), "-");
        let y = layout.add("y", config.p0 + 1);
        Self {
            layout,
            k,
            plus,
            minus,
            y,
        }
    }

    /// Registers projected on zero at the end, last first.
    fn ancillas(&self) -> Vec<Register> {
        let mut regs = Vec::new();
        for b in [&self.plus, &self.minus] {
            regs.extend([b.s.clone(), b.phi_k.clone(), b.phi_ref.clone()]);
            regs.extend(b.est.clone());
        }
        regs.sort_by_key(|r| std::cmp::Reverse(r.start));
        regs
    }
}

/// Output code for a pair of estimation outcomes.
fn output_code(values: &[u64], m_plus: u64, m_minus: u64, bx: &OverlapBox, p0: usize) -> u64 {
    rounded_difference(values[m_plus as usize], values[m_minus as usize], bx.result_digits, p0)
}

/// Box values for every estimation outcome.
#[must_use]
pub fn box_table(bx: &OverlapBox) -> Vec<u64> {
    (0..1u64 << bx.p_est).map(|m| bx.evaluate(m)).collect()
}

/// The whole algorithm as one program over [`FullLayout`].
///
/// The arithmetic from estimation outcomes to the output code is one
/// semantic step: box on each branch, rounded difference into `y`, box
/// uncompute. Its gate-level parts are checked separately.
pub fn full_program(config: &QftcConfig, x: &InputVector) -> Result<(FullLayout, CircuitProgram)> {
    if x.len() != config.n() {
        return Err(invalid(format!(
            "input has N = {} but the configuration has N = {}",
            x.len(),
            config.n()
        )));
    }
    let fl = FullLayout::new(config);
    let mut forward = CircuitProgram::new(fl.layout.clone());
    for (sign, regs) in [(Sign::Plus, &fl.plus), (Sign::Minus, &fl.minus)] {
        let mut prep = CircuitProgram::new(fl.layout.clone());
        push_preparation(&mut prep, x, sign, &KSource::Register(fl.k.clone()), regs)?;
        let q = grover_q(prep.clone(), regs.s.start, regs.work())?;
        let est = regs.est.clone().expect("full layout has estimation registers");
        forward.append(&prep);
        forward.append(&amplitude_estimation_program(&q, &est));
    }
    let bx = config.overlap_box()?;
    let table = Arc::new(box_table(&bx));
    let p0 = config.p0;
    let g = {
        let table = Arc::clone(&table);
        Arc::new(move |v: &[u64]| output_code(&table, v[0], v[1], &bx, p0))
    };
    let est_plus = fl.plus.est.clone().expect("estimation register");
    let est_minus = fl.minus.est.clone().expect("estimation register");
    let mut prog = CircuitProgram::new(fl.layout.clone());
    for q in fl.k.qubits() {
        prog.gate(GateOp::h(q));
    }
    prog.append(&forward);
    prog.basis(BasisOp::combine(
        "sigma_minus",
        vec![est_plus, est_minus],
        fl.y.clone(),
        Combine::Xor,
        g,
    ));
    prog.append(&forward.inverse());
    Ok((fl, prog))
}

/// Gate and oracle-call counts of the full algorithm.
pub fn qftc_tally(config: &QftcConfig, x: &InputVector, model: &CostModel) -> Result<GateTally> {
    Ok(full_program(config, x)?.1.tally(model))
}

/// Runs the monolithic circuit; returns the `(k, y)` state with every
/// ancilla projected on zero.
pub fn run_full(x: &InputVector, config: &QftcConfig) -> Result<(StateVector, QftcResult)> {
    let y = exact_outputs(x, config)?;
    let needed = config.full_mode_qubits();
    if needed > config.max_qubits {
        return Err(QftcError::QubitBudget {
            needed,
            limit: config.max_qubits,
        });
    }
    let (fl, prog) = full_program(config, x)?;
    let mut state = StateVector::zero(needed)?;
    prog.run_mut(&mut state, ExecOptions { compile_repeats: true })?;
    for reg in fl.ancillas() {
        state = state.project_out(&reg, 0)?;
    }
    let tally = prog.tally(&CostModel::default());
    let result = decode_results(&state, config, &y, tally)?;
    Ok((state, result))
}

/// Amplitudes of the output codes of one block with blank ancillas.
///
/// After uncomputing, the amplitude of code `c` is
/// `sum P+(m+) P-(m-)` over outcome pairs producing `c`, where `P+-` are the
/// outcome distributions of the two estimations.
pub fn block_amplitudes(x: &InputVector, k: usize, config: &QftcConfig, table: &[u64]) -> Result<Vec<f64>> {
    let bx = config.overlap_box()?;
    let dist = |sign| -> Result<Vec<f64>> { ae_distribution(block_theta(x, sign, k)?, config.p_est) };
    let plus = dist(Sign::Plus)?;
    let minus = dist(Sign::Minus)?;
    let mut out = vec![0.0; 1 << (config.p0 + 1)];
    for (mp, &pp) in plus.iter().enumerate() {
        if pp == 0.0 {
            continue;
        }
        for (mm, &pm) in minus.iter().enumerate() {
            out[output_code(table, mp as u64, mm as u64, &bx, config.p0) as usize] += pp * pm;
        }
    }
    Ok(out)
}

/// Simulates each `k` block separately and assembles the `(k, y)` state.
pub fn run_block_diagonal(x: &InputVector, config: &QftcConfig) -> Result<(StateVector, QftcResult)> {
    let y = exact_outputs(x, config)?;
    let table = box_table(&config.overlap_box()?);
    let w = config.p0 + 1;
    let scale = 1.0 / (config.n() as f64).sqrt();
    let mut amps = vec![ZERO; config.n() << w];
    for k in 0..config.n() {
        for (c, a) in block_amplitudes(x, k, config, &table)?.into_iter().enumerate() {
            amps[(k << w) | c] = Complex64::new(a * scale, 0.0);
        }
    }
    let state = StateVector::from_amplitudes(amps)?;
    let tally = qftc_tally(config, x, &CostModel::default())?;
    let result = decode_results(&state, config, &y, tally)?;
    Ok((state, result))
}

pub fn qftc_run(x: &InputVector, config: &QftcConfig) -> Result<(StateVector, QftcResult)> {
    match config.mode {
        Mode::Full => run_full(x, config),
        Mode::BlockDiagonal => run_block_diagonal(x, config),
    }
}

/// `2 sin^2(pi M / 2^p) - 1` for an outcome, as used to cross-check the box.
#[must_use]
pub fn overlap_from_outcome(m: u64, p_est: usize) -> f64 {
    2.0 * (PI * m as f64 / (1u64 << p_est) as f64).sin().powi(2) - 1.0
}

/// Output code distribution of one block, keyed by code, for diagnostics.
pub fn block_distribution(x: &InputVector, k: usize, config: &QftcConfig) -> Result<HashMap<u64, f64>> {
    let table = box_table(&config.overlap_box()?);
    Ok(block_amplitudes(x, k, config, &table)?
        .into_iter()
        .enumerate()
        .filter(|(_, a)| *a > 0.0)
        .map(|(c, a)| (c as u64, a))
        .collect())
}
