//! Circulant operators by post-selection and circulant Hamiltonian
//! evolution with QFTC-encoded eigenvalues.
//!
//! `C_ij = c_{(j - i) mod N}`, diagonalized as `C = F diag(Lambda) F^dagger`
//! with `F_kj = e^{2 pi i jk/N}/sqrt N` and `Lambda_k = sqrt N (F c)_k`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitProgram;
use crate::circuits::qft_gates;
use crate::error::{invalid, QftcError, Result};
use crate::oracle::{oracle_call, prepare_oracle_gates, InputVector};
use crate::qftc::{box_table, exact_outputs, qftc_tally, Mode, QftcConfig};
use crate::reference::{dft_reference, is_hermitian_row};
use crate::state::{Control, GateOp, Register, RegisterLayout, StateVector};
use crate::tally::{CostModel, GateTally};

/// Tolerance of the Hermiticity test `c_j = conj(c_{N-j})`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CirculantSpec {
    /// First row of `C`, unit norm.
    pub c: InputVector,
    pub hermitian: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CirculantJson {
    n: usize,
    c_real: Vec<f64>,
    #[serde(default)]
    c_imag: Vec<f64>,
}

impl CirculantSpec {
    #[must_use]
    pub fn new(c: InputVector) -> Self {
        let hermitian = is_hermitian_row(c.components(), HERMITIAN_TOLERANCE);
        Self { c, hermitian }
    }

    /// Parses `{"n": N, "c_real": [...], "c_imag": [...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CirculantJson =
            serde_json::from_str(text).map_err(|e| invalid(format!("malformed circulant JSON: {e}")))?;
        Ok(Self::new(InputVector::from_parts(doc.n, &doc.c_real, &doc.c_imag)?))
    }

    #[must_use]
    pub fn to_json(&self) -> String {
        let c = self.c.components();
        let doc = CirculantJson {
            n: c.len(),
            c_real: c.iter().map(|v| v.re).collect(),
            c_imag: c.iter().map(|v| v.im).collect(),
        };
        serde_json::to_string(&doc).expect("plain data serializes")
    }

    #[must_use]
    pub fn n(&self) -> usize {
        self.c.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// `F_k = (F c)_k`.
    pub f: Vec<Complex64>,
    /// `Lambda_k = sqrt N F_k`.
    pub lambda: Vec<Complex64>,
    pub hermitian: bool,
}

#[must_use]
pub fn circulant_spectrum(spec: &CirculantSpec) -> SpectrumResult {
    let f = dft_reference(spec.c.components());
    let root = (spec.n() as f64).sqrt();
    SpectrumResult {
        lambda: f.iter().map(|v| v * root).collect(),
        f,
        hermitian: spec.hermitian,
    }
}

/// Gates for `|k>|j> -> e^{2 pi i kj/N}|k>|j>`, each also conditioned on
/// `extra`.
fn product_phase_gates(k: &Register, j: &Register, extra: &[Control]) -> Vec<GateOp> {
    let l = k.len;
    let mut gates = Vec::with_capacity(l * (l + 1) / 2);
    for i in 1..=l {
        for a in (l + 1 - i)..=l {
            let mut controls = vec![Control::on(k.qubit(i - 1))];
            controls.extend_from_slice(extra);
            gates.push(GateOp::r((i + a - l) as u32, j.qubit(a - 1), 1).ctrl(&controls));
        }
    }
    gates
}

/// The post-selection circuit before the measurement: `O_s` on `k`,
/// `QFT^dagger`, `O_c` on `j`, phase `e^{2 pi i kj/N}`, `H` on `j`.
///
/// Post-selecting `j = 0` and applying the QFT to `k` leaves `C|s>`.
pub fn circulant_program(s: &InputVector, spec: &CirculantSpec) -> Result<(CircuitProgram, Register, Register)> {
    if s.len() != spec.n() {
        return Err(invalid(format!(
            "state has N = {} but the circulant has N = {}",
            s.len(),
            spec.n()
        )));
    }
    let l = s.num_qubits();
    let mut layout = RegisterLayout::new();
    let k = layout.add("k", l);
    let j = layout.add("j", l);
    let mut prog = CircuitProgram::new(layout);
    let mut load_s = oracle_call(s, &k, &[]);
    load_s.name = "O_s".into();
    prog.oracle(load_s);
    for g in qft_gates(&k, true) {
        prog.gate(g);
    }
    let mut load_c = oracle_call(&spec.c, &j, &[]);
    load_c.name = "O_c".into();
    prog.oracle(load_c);
    for g in product_phase_gates(&k, &j, &[]) {
        prog.gate(g);
    }
    for q in j.qubits() {
        prog.gate(GateOp::h(q));
    }
    Ok((prog, k, j))
}

/// `C|s>` normalized, with the post-selection probability
/// `sum_k |frak s_k F_k|^2`.
pub fn apply_circulant(s: &InputVector, spec: &CirculantSpec) -> Result<(StateVector, f64)> {
    let (prog, k, j) = circulant_program(s, spec)?;
    let state = prog.run(&StateVector::zero(2 * k.len)?)?;
    let (kept, prob) = state.postselect(&j, 0)?;
    let mut out = kept.project_out(&j, 0)?;
    for g in qft_gates(&Register::new("k", 0, k.len), false) {
        out.apply_gate_mut(&g)?;
    }
    Ok((out.normalized(), prob))
}

/// Success probability computed from the spectrum: `sum_k |frak s_k F_k|^2`
/// with `frak s = F^dagger s`.
#[must_use]
pub fn expected_success_probability(s: &InputVector, spec: &CirculantSpec) -> f64 {
    let n = s.len();
    let conj: Vec<Complex64> = s.components().iter().map(|v| v.conj()).collect();
    let s_hat: Vec<Complex64> = dft_reference(&conj).into_iter().map(|v| v.conj()).collect();
    let f = dft_reference(spec.c.components());
    (0..n).map(|k| (s_hat[k] * f[k]).norm_sqr()).sum()
}

/// Phase layer on a complemental code `f0.f1...fp0`: `e^{+i sqrt(N) t}` on
/// `f0` and `e^{-i sqrt(N) t 2^-p}` on `f_p`, so code `f` picks up
/// `e^{-i sqrt(N) t value(f)}`.
pub fn digit_phase_layer(l: usize, t: f64, p0: usize) -> Result<CircuitProgram> {
    if l == 0 || p0 == 0 {
        return Err(invalid("digit phase layer needs L >= 1 and p0 >= 1"));
    }
    let scale = ((1usize << l) as f64).sqrt() * t;
    let mut layout = RegisterLayout::new();
    let f = layout.add("f", p0 + 1);
    let mut prog = CircuitProgram::new(layout);
    prog.gate(GateOp::phase(f.qubit(0), scale));
    for p in 1..=p0 {
        prog.gate(GateOp::phase(f.qubit(p), -scale * (-(p as f64)).exp2()));
    }
    Ok(prog)
}

/// Phase the layer applies to each code, read off its action on basis states.
fn digit_phases(l: usize, t: f64, p0: usize) -> Result<Vec<Complex64>> {
    let prog = digit_phase_layer(l, t, p0)?;
    (0..1usize << (p0 + 1))
        .map(|code| {
            let out = prog.run(&StateVector::basis(p0 + 1, code)?)?;
            Ok(out.amplitudes()[code])
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub t: f64,
    pub delta: f64,
    /// Per-coefficient accuracy `sqrt(delta) / (sqrt(N) t)`.
    pub epsilon_f: f64,
    /// Output digits: the smallest with `2^-p0 <= epsilon_f`.
    pub p0: usize,
}

impl EvolutionConfig {
    pub fn new(n: usize, t: f64, delta: f64) -> Result<Self> {
        if !t.is_finite() || t < 0.0 {
            return Err(invalid(format!("evolution time {t} must be finite and nonnegative")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("delta = {delta} must lie in (0, 1)")));
        }
        let epsilon_f = delta.sqrt() / ((n as f64).sqrt() * t);
        let p0 = if epsilon_f.is_finite() {
            ((1.0 / epsilon_f).log2().ceil().max(1.0)) as usize
        } else {
            1
        };
        Ok(Self {
            t,
            delta,
            epsilon_f,
            p0,
        })
    }

    /// Same time and delta with `p0` fixed, as in accuracy sweeps.
    #[must_use]
    pub fn with_p0(mut self, p0: usize) -> Self {
        self.p0 = p0;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    /// Output over the `s` register with the ancillas projected on zero,
    /// not renormalized.
    pub projected: StateVector,
    pub qftc: QftcConfig,
    pub tally: GateTally,
}

impl Evolution {
    /// Normalized output state.
    #[must_use]
    pub fn state(&self) -> StateVector {
        self.projected.normalized()
    }

    /// `|<exact|out>|` with the ancillas required to return to zero.
    pub fn fidelity(&self, exact: &StateVector) -> Result<f64> {
        Ok(exact.overlap(&self.projected)?.norm())
    }
}

/// `e^{-iCt}|s>` through QFTC: `QFT^dagger`, encode `F_k`, digit phases,
/// undo the encoding, `QFT`.
///
/// Per `k`, encoding, phase and decoding leave the blank-ancilla amplitude
/// `sum P+(m+) P-(m-) phase(code(m+, m-))`, with `P+-` the estimation
/// outcome distributions of the QFTC run on `c`.
pub fn evolve_circulant(s: &InputVector, spec: &CirculantSpec, config: &EvolutionConfig) -> Result<Evolution> {
    if !spec.hermitian {
        return Err(QftcError::NotHermitian);
    }
    if s.len() != spec.n() {
        return Err(invalid(format!(
            "state has N = {} but the circulant has N = {}",
            s.len(),
            spec.n()
        )));
    }
    let l = s.num_qubits();
    let qcfg = QftcConfig::new(l, config.p0, config.delta, Mode::BlockDiagonal)?;
    exact_outputs(&spec.c, &qcfg)?;
    let phases = digit_phases(l, config.t, config.p0)?;
    let table = box_table(&qcfg.overlap_box()?);
    let reg = Register::new("s", 0, l);
    let mut state = StateVector::zero(l)?;
    for g in prepare_oracle_gates(s, &reg) {
        state.apply_gate_mut(&g)?;
    }
    for g in qft_gates(&reg, true) {
        state.apply_gate_mut(&g)?;
    }
    let mut amps = state.into_amplitudes();
    for (k, a) in amps.iter_mut().enumerate() {
        let dist = crate::qftc::block_amplitudes(&spec.c, k, &qcfg, &table)?;
        let g: Complex64 = dist.iter().zip(&phases).map(|(p, ph)| ph * *p).sum();
        *a *= g;
    }
    let mut out = StateVector::from_amplitudes(amps)?;
    for g in qft_gates(&reg, false) {
        out.apply_gate_mut(&g)?;
    }
    let tally = qftc_tally(&qcfg, &spec.c, &CostModel::default())?.scaled(2);
    Ok(Evolution {
        projected: out,
        qftc: qcfg,
        tally,
    })
}

/// `e^{-iCt}|s>` from the dense matrix exponential.
pub fn exact_evolution(s: &InputVector, spec: &CirculantSpec, t: f64) -> Result<StateVector> {
    let m = crate::reference::expm_circulant(spec.c.components(), t)?;
    Ok(StateVector::from_amplitudes(crate::reference::matvec(
        &m,
        s.components(),
    ))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::{circulant_dense, matvec};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn spectrum_examples() {
        let id = CirculantSpec::new(InputVector::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap());
        for v in circulant_spectrum(&id).lambda {
            assert!((v - c(1.0)).norm() < 1e-12);
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let spec = CirculantSpec::new(InputVector::from_real(&[0.0, h, 0.0, h]).unwrap());
        let r = 2f64.sqrt();
        for (v, w) in circulant_spectrum(&spec).lambda.iter().zip([r, 0.0, -r, 0.0]) {
            assert!((v - c(w)).norm() < 1e-12);
        }
        assert!(spec.hermitian);
        let shift = CirculantSpec::new(InputVector::from_real(&[0.0, 1.0, 0.0, 0.0]).unwrap());
        assert!(!shift.hermitian);
    }

    #[test]
    fn identity_circulant() {
        let s = InputVector::normalize(vec![c(0.3), Complex64::new(0.1, 0.5), c(-0.2), c(0.7)])
            .unwrap()
            .0;
        let id = CirculantSpec::new(InputVector::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap());
        let (out, p) = apply_circulant(&s, &id).unwrap();
        assert!((p - 0.25).abs() < 1e-12);
        for (a, b) in out.amplitudes().iter().zip(s.components()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn kernel_state_is_rejected() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let spec = CirculantSpec::new(InputVector::from_real(&[0.0, h, 0.0, h]).unwrap());
        // frak s supported on k = 1: s = F e_1.
        let s: Vec<Complex64> = (0..4)
            .map(|j| Complex64::from_polar(0.5, 2.0 * std::f64::consts::PI * j as f64 / 4.0))
            .collect();
        let s = InputVector::new(s).unwrap();
        assert!(apply_circulant(&s, &spec).is_err());
    }

    #[test]
    fn matches_dense_product() {
        let cv = InputVector::normalize(vec![
            c(0.2),
            Complex64::new(0.3, -0.4),
            c(0.1),
            Complex64::new(-0.5, 0.2),
        ])
        .unwrap()
        .0;
        let spec = CirculantSpec::new(cv.clone());
        let s = InputVector::normalize(vec![c(0.5), c(-0.1), Complex64::new(0.0, 0.6), c(0.3)])
            .unwrap()
            .0;
        let (out, p) = apply_circulant(&s, &spec).unwrap();
        let dense = matvec(&circulant_dense(cv.components()), s.components());
        let dense = StateVector::from_amplitudes(dense).unwrap().normalized();
        assert!((dense.overlap(&out).unwrap().norm() - 1.0).abs() < 1e-9);
        assert!((p - expected_success_probability(&s, &spec)).abs() < 1e-12);
    }

    #[test]
    fn digit_phase_examples() {
        let ph = digit_phases(2, 1.0, 3).unwrap();
        assert!((ph[0] - c(1.0)).norm() < 1e-15);
        assert!((ph[0b1000] - Complex64::from_polar(1.0, 2.0)).norm() < 1e-12);
        assert!((ph[0b0100] - Complex64::from_polar(1.0, -1.0)).norm() < 1e-12);
        assert!(digit_phase_layer(2, 1.0, 0).is_err());
    }

    #[test]
    fn evolution_trivial_cases() {
        let s = InputVector::normalize(vec![c(0.3), Complex64::new(0.1, 0.5), c(-0.2), c(0.7)])
            .unwrap()
            .0;
        let spec = CirculantSpec::new(InputVector::normalize(vec![c(0.9), c(0.1), c(0.3), c(0.1)]).unwrap().0);
        let cfg = EvolutionConfig::new(4, 0.0, 0.1).unwrap().with_p0(3);
        let ev = evolve_circulant(&s, &spec, &cfg).unwrap();
        let exact = StateVector::from_amplitudes(s.components().to_vec()).unwrap();
        assert!((ev.fidelity(&exact).unwrap() - 1.0).abs() < 1e-9);
        let shift = CirculantSpec::new(InputVector::from_real(&[0.0, 1.0, 0.0, 0.0]).unwrap());
        assert!(matches!(
            evolve_circulant(&s, &shift, &cfg),
            Err(QftcError::NotHermitian)
        ));
    }
}
