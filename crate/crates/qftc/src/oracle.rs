//! Amplitude-loading oracles and the real-part input reduction.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitProgram, OracleCall};
use crate::error::{invalid, QftcError, Result};
use crate::state::{Control, GateOp, Register, RegisterLayout};

/// Tolerance on the norm of vectors read from files.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// A unit vector of dimension `N = 2^L`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputVector {
    components: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InputVectorJson {
    n: usize,
    real: Vec<f64>,
    #[serde(default)]
    imag: Vec<f64>,
}

impl InputVector {
    /// Checks the dimension and norm, then renormalizes exactly.
    pub fn new(components: Vec<Complex64>) -> Result<Self> {
        let n = components.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(QftcError::NotPowerOfTwo(n));
        }
        if components.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(invalid("non-finite component"));
        }
        let norm = components.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QftcError::NotNormalized { norm });
        }
        Ok(Self {
            components: components.into_iter().map(|c| c / norm).collect(),
        })
    }

    /// Scales a nonzero vector to unit length; returns it with its norm.
    pub fn normalize(components: Vec<Complex64>) -> Result<(Self, f64)> {
        let norm = components.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if !norm.is_finite() || norm <= 1e-300 {
            return Err(QftcError::NotNormalized { norm });
        }
        let v = Self::new(components.into_iter().map(|c| c / norm).collect())?;
        Ok((v, norm))
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Parses `{"n": N, "real": [...], "imag": [...]}`; `imag` may be omitted.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InputVectorJson =
            serde_json::from_str(text).map_err(|e| invalid(format!("malformed input JSON: {e}")))?;
        Self::from_parts(doc.n, &doc.real, &doc.imag)
    }

    pub(crate) fn from_parts(n: usize, real: &[f64], imag: &[f64]) -> Result<Self> {
        if real.len() != n || !(imag.is_empty() || imag.len() == n) {
            return Err(invalid(format!(
                "n = {n} but got {} real and {} imaginary parts",
                real.len(),
                imag.len()
            )));
        }
        if !n.is_power_of_two() || n < 2 {
            return Err(QftcError::NotPowerOfTwo(n));
        }
        let comps = (0..n)
            .map(|j| Complex64::new(real[j], imag.get(j).copied().unwrap_or(0.0)))
            .collect();
        Self::new(comps)
    }

    #[must_use]
    pub fn to_json(&self) -> String {
        let doc = InputVectorJson {
            n: self.len(),
            real: self.components.iter().map(|c| c.re).collect(),
            imag: self.components.iter().map(|c| c.im).collect(),
        };
        serde_json::to_string(&doc).expect("plain data serializes")
    }

    #[must_use]
    pub fn components(&self) -> &[Complex64] {
        &self.components
    }

    #[must_use]
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.components.len()
    }

    /// `L = log2 N`.
    #[must_use]
    pub fn num_qubits(&self) -> usize {
        self.components.len().trailing_zeros() as usize
    }
}

/// Gates loading `x` into `reg` from `|0...0>`.
///
/// Level `l` rotates qubit `l` by the split of probability between the two
/// halves below each prefix, controlled on that prefix; a final diagonal
/// gate restores the phases.
#[must_use]
pub fn prepare_oracle_gates(x: &InputVector, reg: &Register) -> Vec<GateOp> {
    let l = x.num_qubits();
    assert_eq!(reg.len, l, "register width must be log2 N");
    let probs: Vec<f64> = x.components().iter().map(Complex64::norm_sqr).collect();
    let mut gates = Vec::new();
    for level in 0..l {
        let block = 1usize << (l - level);
        for prefix in 0..(1usize << level) {
            let base = prefix * block;
            let p0: f64 = probs[base..base + block / 2].iter().sum();
            let p1: f64 = probs[base + block / 2..base + block].iter().sum();
            if p1 == 0.0 {
                continue;
            }
            let angle = 2.0 * p1.sqrt().atan2(p0.sqrt());
            let controls: Vec<Control> = (0..level)
                .map(|b| {
                    let q = reg.qubit(b);
                    if prefix >> (level - 1 - b) & 1 == 1 {
                        Control::on(q)
                    } else {
                        Control::off(q)
                    }
                })
                .collect();
            gates.push(
                GateOp::ry(reg.qubit(level), angle)
                    .with_controls(&controls)
                    .expect("prefix controls are distinct from the target"),
            );
        }
    }
    let phases: Vec<Complex64> = x
        .components()
        .iter()
        .map(|c| {
            if c.norm() > 0.0 {
                c / c.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        })
        .collect();
    if phases.iter().any(|p| (p - Complex64::new(1.0, 0.0)).norm() > 0.0) {
        gates.push(GateOp::diagonal("phase", &phases, reg.qubits().collect()));
    }
    gates
}

/// `O_x` as a program on a register `j` of `L` qubits.
#[must_use]
pub fn prepare_oracle(x: &InputVector) -> CircuitProgram {
    let mut layout = RegisterLayout::new();
    let j = layout.add("j", x.num_qubits());
    let mut p = CircuitProgram::new(layout);
    for g in prepare_oracle_gates(x, &j) {
        p.gate(g);
    }
    p
}

/// One tallied invocation of `O_x` on `reg` under `controls`.
#[must_use]
pub fn oracle_call(x: &InputVector, reg: &Register, controls: &[Control]) -> OracleCall {
    OracleCall {
        name: "O_x".into(),
        body: Arc::new(prepare_oracle_gates(x, reg)),
        controls: controls.to_vec(),
        adjoint: false,
    }
}

/// `|0><0| (x) I + |1><1| (x) O_x` on registers `ctl` (1 qubit) and `j`.
#[must_use]
pub fn controlled_oracle(x: &InputVector) -> CircuitProgram {
    let mut layout = RegisterLayout::new();
    let ctl = layout.add("ctl", 1);
    let j = layout.add("j", x.num_qubits());
    let mut p = CircuitProgram::new(layout);
    p.oracle(oracle_call(x, &j, &[Control::on(ctl.start)]));
    p
}

/// Split of `x` into vectors whose DFTs are the real and imaginary parts of
/// the DFT of `x`, each scaled to unit length.
#[derive(Debug, Clone, PartialEq)]
pub struct RealReduction {
    /// `x'_j = (x_j + conj(x_{N-j}))/2`, normalized; `None` when zero.
    pub re: Option<InputVector>,
    /// `x''_j = (x_j - conj(x_{N-j}))/(2i)`, normalized; `None` when zero.
    pub im: Option<InputVector>,
    /// Norm of `x'` before normalization.
    pub norm_re: f64,
    /// Norm of `x''` before normalization.
    pub norm_im: f64,
}

/// Below this norm a reduced part is treated as zero.
const ZERO_PART: f64 = 1e-14;

#[must_use]
pub fn real_reduction(x: &InputVector) -> RealReduction {
    let n = x.len();
    let c = x.components();
    let mirror = |j: usize| c[(n - j) % n].conj();
    let re: Vec<Complex64> = (0..n).map(|j| (c[j] + mirror(j)) / 2.0).collect();
    let im: Vec<Complex64> = (0..n).map(|j| (c[j] - mirror(j)) / Complex64::new(0.0, 2.0)).collect();
    let part = |v: Vec<Complex64>| -> (Option<InputVector>, f64) {
        let norm = v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if norm < ZERO_PART {
            (None, norm)
        } else {
            let (u, norm) = InputVector::normalize(v).expect("nonzero part normalizes");
            (Some(u), norm)
        }
    };
    let (re, norm_re) = part(re);
    let (im, norm_im) = part(im);
    RealReduction {
        re,
        im,
        norm_re,
        norm_im,
    }
}
