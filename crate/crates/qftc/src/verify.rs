//! Exhaustive arithmetic sweeps, Taylor-gate error scans and tally
//! benchmarks, shared by the command-line driver and the test suites.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::arith::{
    multiply_adder, quantum_adder, subtractor_sigma_minus, taylor_semantic, ArithCircuit, SineGateConfig, Trig,
};
use crate::circuits::{controlled_phase_network, Sign};
use crate::error::{invalid, QftcError, Result};
use crate::fixed::{FixedPointCode, FixedPointFormat};
use crate::oracle::InputVector;
use crate::qftc::{qftc_tally, Mode, QftcConfig};
use crate::reference::{cos_pi, fixed_point_oracle, sin_pi, FixedOp};
use crate::sparse::SparseState;
use crate::state::StateVector;
use crate::tally::CostModel;

/// Largest product of input cardinalities an exhaustive sweep may visit.
pub const SWEEP_BUDGET: u64 = 1 << 16;

/// Largest dense register an exhaustive gate-level sweep may simulate.
const SWEEP_MAX_QUBITS: usize = 20;

/// Arithmetic operation under exhaustive verification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArithOp {
    /// `c +- 2^{-l} b`: `b` plain with `n` digits, `c` complemental with
    /// `m + n` fraction digits, every shift `l` in `0..=m`, both signs.
    Adder,
    /// `c +- a b`: `a` with `m` digits, `b` with `n`, `c` with `m + n`.
    MulAdd,
    /// `alpha - beta` into a blank register; width `m`, requires `n = m`.
    SigmaMinus,
}

impl fmt::Display for ArithOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Adder => "adder",
            Self::MulAdd => "mul_add",
            Self::SigmaMinus => "sigma_minus",
        })
    }
}

impl FromStr for ArithOp {
    type Err = QftcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adder" | "add" => Ok(Self::Adder),
            "mul_add" | "multiply_adder" => Ok(Self::MulAdd),
            "sigma_minus" | "sub" => Ok(Self::SigmaMinus),
            _ => Err(invalid(format!("unknown arithmetic op {s:?}"))),
        }
    }
}

/// Which implementations a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyMode {
    Gate,
    Semantic,
    Both,
}

impl VerifyMode {
    fn gate(self) -> bool {
        matches!(self, Self::Gate | Self::Both)
    }

    fn semantic(self) -> bool {
        matches!(self, Self::Semantic | Self::Both)
    }
}

impl fmt::Display for VerifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gate => "gate",
            Self::Semantic => "semantic",
            Self::Both => "both",
        })
    }
}

impl FromStr for VerifyMode {
    type Err = QftcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gate" => Ok(Self::Gate),
            "semantic" => Ok(Self::Semantic),
            "both" => Ok(Self::Both),
            _ => Err(invalid(format!("unknown mode {s:?}; expected gate, semantic or both"))),
        }
    }
}

/// One disagreement with the classical oracle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub variant: String,
    pub implementation: String,
    /// Input register values in layout order.
    pub inputs: Vec<u64>,
    pub expected: u64,
    /// Output register value, or `None` if the result was not a basis state
    /// or disturbed an input or ancilla.
    pub got: Option<u64>,
}

/// Outcome of an exhaustive sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub op: ArithOp,
    pub m: usize,
    pub n: usize,
    pub mode: VerifyMode,
    /// Basis inputs visited, summed over variants.
    pub cases: u64,
    pub mismatches: Vec<Mismatch>,
}

impl VerifyReport {
    #[must_use]
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

struct Variant {
    name: String,
    circuit: ArithCircuit,
    op: FixedOp,
}

fn variants(op: ArithOp, m: usize, n: usize) -> Result<Vec<Variant>> {
    let signs = [Sign::Plus, Sign::Minus];
    let sym = |s: Sign| if s == Sign::Plus { "+" } else { "-" };
    Ok(match op {
        ArithOp::Adder => {
            let mut v = Vec::new();
            for l in 0..=m as i64 {
                for sign in signs {
                    v.push(Variant {
                        name: format!("l={l} sign={}", sym(sign)),
                        circuit: quantum_adder(l, n, m + n, sign)?,
                        op: FixedOp::Add { sign, l },
                    });
                }
            }
            v
        }
        ArithOp::MulAdd => signs
            .into_iter()
            .map(|sign| {
                Ok(Variant {
                    name: format!("sign={}", sym(sign)),
                    circuit: multiply_adder(m, n, sign)?,
                    op: FixedOp::MulAdd { sign, shift: 0 },
                })
            })
            .collect::<Result<_>>()?,
        ArithOp::SigmaMinus => {
            if m != n {
                return Err(invalid("sigma_minus takes equal operand widths"));
            }
            vec![Variant {
                name: format!("width={m}"),
                circuit: subtractor_sigma_minus(m)?,
                op: FixedOp::Sub,
            }]
        }
    })
}

/// Product of the input cardinalities of one sweep variant.
///
/// Checked against [`SWEEP_BUDGET`] before anything is built.
#[must_use]
pub fn sweep_cardinality(op: ArithOp, m: usize, n: usize) -> u64 {
    let bits = match op {
        ArithOp::Adder => n + m + n + 1,
        ArithOp::MulAdd => m + n + (m + n + 1),
        ArithOp::SigmaMinus => 2 * m,
    };
    if bits >= 64 {
        u64::MAX
    } else {
        1u64 << bits
    }
}

fn oracle_value(v: &Variant, inputs: &[u64]) -> Result<u64> {
    let plain = |d: usize, raw: u64| FixedPointCode::from_raw(FixedPointFormat::plain(d), raw);
    let out = v.circuit.output.len - 1;
    let f_out = FixedPointFormat::complemental(out);
    let operands = match v.op {
        // Layout b, c.
        FixedOp::Add { .. } => vec![
            FixedPointCode::from_raw(f_out, inputs[1])?,
            plain(v.circuit.inputs[0].len, inputs[0])?,
        ],
        // Layout a, b, c.
        FixedOp::MulAdd { .. } => vec![
            FixedPointCode::from_raw(f_out, inputs[2])?,
            plain(v.circuit.inputs[0].len, inputs[0])?,
            plain(v.circuit.inputs[1].len, inputs[1])?,
        ],
        // Layout alpha, beta, blank output.
        FixedOp::Sub => vec![
            plain(v.circuit.inputs[0].len, inputs[0])?,
            plain(v.circuit.inputs[1].len, inputs[1])?,
        ],
    };
    Ok(fixed_point_oracle(v.op, &operands, f_out)?.raw())
}

/// Read the output of a run that must end in a single basis state with the
/// inputs untouched.
fn read_output(c: &ArithCircuit, state: &StateVector, start: usize) -> Option<u64> {
    let n = c.num_qubits();
    let (idx, amp) = state
        .amplitudes()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))?;
    if (amp.norm_sqr() - 1.0).abs() > 1e-9 {
        return None;
    }
    for r in &c.inputs {
        if r.extract(idx, n) != r.extract(start, n) {
            return None;
        }
    }
    if c.ancillas.iter().any(|r| r.extract(idx, n) != 0) {
        return None;
    }
    Some(c.output.extract(idx, n))
}

/// Sweep every basis input of `op` at sizes `m`, `n` and compare against
/// [`fixed_point_oracle`].
pub fn verify_arith(op: ArithOp, m: usize, n: usize, mode: VerifyMode) -> Result<VerifyReport> {
    if m == 0 || n == 0 {
        return Err(invalid("digit counts must be positive"));
    }
    let card = sweep_cardinality(op, m, n);
    if card > SWEEP_BUDGET {
        return Err(QftcError::SweepBudget {
            cases: card,
            limit: SWEEP_BUDGET,
        });
    }
    let mut report = VerifyReport {
        op,
        m,
        n,
        mode,
        cases: 0,
        mismatches: Vec::new(),
    };
    for v in variants(op, m, n)? {
        let c = &v.circuit;
        let nq = c.num_qubits();
        if nq > SWEEP_MAX_QUBITS {
            return Err(QftcError::QubitBudget {
                needed: nq,
                limit: SWEEP_MAX_QUBITS,
            });
        }
        // The subtractor's output register must start blank.
        let swept: Vec<_> = match op {
            ArithOp::SigmaMinus => c.inputs.clone(),
            _ => c.layout.registers().to_vec(),
        };
        let total: u64 = swept.iter().map(|r| 1u64 << r.len).product();
        for case in 0..total {
            let mut rest = case;
            let mut idx = 0usize;
            let mut inputs = Vec::with_capacity(swept.len());
            for r in swept.iter().rev() {
                let val = rest & ((1u64 << r.len) - 1);
                rest >>= r.len;
                idx = r.deposit(idx, nq, val);
                inputs.push(val);
            }
            inputs.reverse();
            let expected = oracle_value(&v, &inputs)?;
            let basis = StateVector::basis(nq, idx)?;
            let mut runs = Vec::new();
            if mode.gate() {
                runs.push(("gate", c.gates.run(&basis)?));
            }
            if mode.semantic() {
                runs.push(("semantic", c.semantic.run(&basis)?));
            }
            for (name, out) in &runs {
                let got = read_output(c, out, idx);
                if got != Some(expected) {
                    report.mismatches.push(Mismatch {
                        variant: v.name.clone(),
                        implementation: (*name).to_string(),
                        inputs: inputs.clone(),
                        expected,
                        got,
                    });
                }
            }
            if runs.len() == 2 && runs[0].1.max_abs_diff(&runs[1].1)? > 1e-9 {
                report.mismatches.push(Mismatch {
                    variant: v.name.clone(),
                    implementation: "gate_vs_semantic".into(),
                    inputs: inputs.clone(),
                    expected,
                    got: None,
                });
            }
            report.cases += 1;
        }
    }
    Ok(report)
}

/// Largest deviation of a Taylor gate from the host `sin(pi x)` or
/// `cos(pi x)` over all `2^n` inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigError {
    pub kind: Trig,
    pub n: usize,
    pub gate_level: bool,
    pub max_error: f64,
    pub worst_input: u64,
}

impl TrigError {
    /// The error bound `2^{-n}`.
    #[must_use]
    pub fn bound(&self) -> f64 {
        (-(self.n as f64)).exp2()
    }

    #[must_use]
    pub fn within_bound(&self) -> bool {
        self.max_error <= self.bound()
    }
}

/// Scan every input of the sine or cosine gate with `n` input digits.
///
/// The gate-level scan runs the full circuit on a sparse state and also
/// requires every ancilla to return to zero.
pub fn trig_error(kind: Trig, n: usize, gate_level: bool) -> Result<TrigError> {
    let cfg = SineGateConfig::new(n)?;
    let circuit = if gate_level {
        Some(match kind {
            Trig::Sin => crate::arith::sine_gate(&cfg)?,
            Trig::Cos => crate::arith::cosine_gate(&cfg)?,
        })
    } else {
        None
    };
    let fmt = cfg.output_format(kind);
    let mut worst = TrigError {
        kind,
        n,
        gate_level,
        max_error: 0.0,
        worst_input: 0,
    };
    for x in 0..1u64 << n {
        let code = match &circuit {
            Some(c) => {
                let nq = c.num_qubits();
                let mut s = SparseState::basis(nq, u128::from(x) << (nq - n))?;
                c.gates.run_sparse(&mut s)?;
                if c.ancillas.iter().any(|a| s.definite_value(a, 1e-9) != Some(0)) {
                    return Err(invalid(format!("{} left an ancilla dirty at x = {x}", c.name)));
                }
                s.definite_value(&c.output, 1e-9)
                    .ok_or_else(|| invalid(format!("{} output is not a basis state at x = {x}", c.name)))?
            }
            None => taylor_semantic(x, &cfg, kind),
        };
        let xv = FixedPointFormat::plain(n).value_of(x);
        let exact = match kind {
            Trig::Sin => sin_pi(xv),
            Trig::Cos => cos_pi(xv),
        };
        let err = (fmt.value_of(code) - exact).abs();
        if err > worst.max_error {
            worst.max_error = err;
            worst.worst_input = x;
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Tally benchmarks

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("slope fit needs at least two paired points"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(invalid("slope fit needs positive finite values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(invalid("slope fit needs distinct abscissae"));
    }
    Ok(sxy / sxx)
}

/// Parameter swept by a benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// `L = log2 N`; fits gate count against `L`.
    L,
    /// `p0` with `epsilon = 2^{-p0}`; fits oracle calls against `epsilon`.
    Epsilon,
    /// `d` with `delta = 2^{-d}`; fits oracle calls against `delta`.
    Delta,
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::L => "L",
            Self::Epsilon => "epsilon",
            Self::Delta => "delta",
        })
    }
}

impl FromStr for SweepKind {
    type Err = QftcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" | "l" => Ok(Self::L),
            "epsilon" | "eps" => Ok(Self::Epsilon),
            "delta" => Ok(Self::Delta),
            _ => Err(invalid(format!("unknown sweep {s:?}; expected L, epsilon or delta"))),
        }
    }
}

impl SweepKind {
    /// Target slope and tolerance.
    #[must_use]
    pub fn target(self) -> (f64, f64) {
        match self {
            Self::L => (2.0, 0.2),
            Self::Epsilon | Self::Delta => (-1.0, 0.2),
        }
    }
}

/// Fixed parameters of a benchmark sweep.
pub const BENCH_L: usize = 1;
pub const BENCH_P0: usize = 3;
pub const BENCH_DELTA: f64 = 0.1;

/// One tally of the full QFTC circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchPoint {
    /// The swept integer (`L`, `p0` or `d`).
    pub param: usize,
    /// The regression abscissa (`L`, `epsilon` or `delta`).
    pub x: f64,
    pub l: usize,
    pub p0: usize,
    pub delta: f64,
    pub gate_count: u64,
    pub oracle_calls: u64,
    /// Gates in one controlled phase network on `L` qubits.
    pub phase_network_gates: u64,
}

/// Tallies over a sweep and the fitted slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub sweep: SweepKind,
    pub points: Vec<BenchPoint>,
    /// Slope of the fitted quantity: gate count for `L`, oracle calls
    /// otherwise.
    pub slope: f64,
    pub target: f64,
    pub tolerance: f64,
    /// Slope of the phase network alone (`L` sweeps only).
    pub phase_network_slope: Option<f64>,
}

impl BenchReport {
    #[must_use]
    pub fn passed(&self) -> bool {
        (self.slope - self.target).abs() <= self.tolerance
    }
}

/// Tally the QFTC circuit across `values` of the swept parameter. The
/// tally is read from the circuit construction without simulation.
pub fn bench(sweep: SweepKind, values: &[usize]) -> Result<BenchReport> {
    if values.len() < 4 {
        return Err(invalid(format!(
            "a sweep needs at least 4 points, got {}",
            values.len()
        )));
    }
    let model = CostModel::default();
    let mut points = Vec::with_capacity(values.len());
    for &v in values {
        let (l, p0, delta, x) = match sweep {
            SweepKind::L => (v, BENCH_P0, BENCH_DELTA, v as f64),
            SweepKind::Epsilon => (BENCH_L, v, BENCH_DELTA, (-(v as f64)).exp2()),
            SweepKind::Delta => {
                let d = (-(v as f64)).exp2();
                (BENCH_L, BENCH_P0, d, d)
            }
        };
        if l > 12 {
            return Err(invalid(format!("L = {l} exceeds the benchmark limit of 12")));
        }
        let config = QftcConfig::new(l, p0, delta, Mode::BlockDiagonal)?;
        let mut e0 = vec![0.0; 1usize << l];
        e0[0] = 1.0;
        let input = InputVector::from_real(&e0)?;
        let t = qftc_tally(&config, &input, &model)?;
        points.push(BenchPoint {
            param: v,
            x,
            l,
            p0,
            delta,
            gate_count: t.one_two_qubit_count,
            oracle_calls: t.total_oracle_calls(),
            phase_network_gates: controlled_phase_network(l)?.gate_count(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = points
        .iter()
        .map(|p| match sweep {
            SweepKind::L => p.gate_count as f64,
            _ => p.oracle_calls as f64,
        })
        .collect();
    let slope = log_log_slope(&xs, &ys)?;
    let phase_network_slope = match sweep {
        SweepKind::L => {
            let pn: Vec<f64> = points.iter().map(|p| p.phase_network_gates as f64).collect();
            Some(log_log_slope(&xs, &pn)?)
        }
        _ => None,
    };
    let (target, tolerance) = sweep.target();
    Ok(BenchReport {
        sweep,
        points,
        slope,
        target,
        tolerance,
        phase_network_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_laws() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        let inv: Vec<f64> = xs.iter().map(|x| 5.0 / x).collect();
        assert!((log_log_slope(&xs, &inv).unwrap() + 1.0).abs() < 1e-12);
        assert!(log_log_slope(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn budget_guard() {
        assert!(matches!(
            verify_arith(ArithOp::Adder, 10, 10, VerifyMode::Both),
            Err(QftcError::SweepBudget { .. })
        ));
        assert!(verify_arith(ArithOp::SigmaMinus, 2, 3, VerifyMode::Gate).is_err());
    }

    #[test]
    fn small_sweeps_pass() {
        let r = verify_arith(ArithOp::Adder, 1, 2, VerifyMode::Both).unwrap();
        assert!(r.passed(), "{:?}", r.mismatches.first());
        assert_eq!(r.cases, 4 * (1 << 2) * (1 << 4));
    }

    #[test]
    fn bench_needs_four_points() {
        assert!(bench(SweepKind::L, &[1, 2, 3]).is_err());
        assert!(bench(SweepKind::L, &[]).is_err());
    }
}
