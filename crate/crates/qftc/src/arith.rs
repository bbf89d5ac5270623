//! Fixed-point quantum arithmetic.
//!
//! Every operation comes in two forms over the same register layout: a
//! gate-level circuit (QFT adders in the Fourier basis) and a semantic
//! program that permutes basis states directly. Both are exposed through
//! [`ArithCircuit`] so they can be compared state for state.
//!
//! Register values are raw codes (see [`crate::fixed`]). A target register
//! of `1 + P` qubits is a complemental code with `P` fraction digits, and
//! all additions into it are modulo `2^{P+1}`, i.e. modulo 2 in value.
//! Products are truncated bit by bit: a digit product whose weight falls
//! below the last place of the target is dropped.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::circuit::{BasisOp, CircuitProgram, Combine};
use crate::circuits::{qft_gates, Sign};
use crate::error::{invalid, QftcError, Result};
use crate::fixed::{encode_fixed, FixedPointFormat};
use crate::state::{mask, Control, GateOp, Register, RegisterLayout, MAX_REGISTER_WIDTH};

/// An arithmetic operation in gate-level and semantic form.
#[derive(Debug, Clone)]
pub struct ArithCircuit {
    pub name: String,
    pub layout: RegisterLayout,
    pub gates: CircuitProgram,
    pub semantic: CircuitProgram,
    pub inputs: Vec<Register>,
    pub output: Register,
    /// Work registers; they start and end in `|0...0>`.
    pub ancillas: Vec<Register>,
}

impl ArithCircuit {
    #[must_use]
    pub fn num_qubits(&self) -> usize {
        self.layout.num_qubits()
    }

    #[must_use]
    pub fn ancilla_qubits(&self) -> usize {
        self.ancillas.iter().map(|r| r.len).sum()
    }
}

/// Add `sign * 2^e` (in units of the target's last place) to a register
/// held in the Fourier basis, conditioned on `controls`.
///
/// Fourier qubit `r` (most significant first) picks up `R_{r+1-e}`; gates
/// with a nonpositive index are whole turns and are skipped. A negative `e`
/// lies below the last place and adds nothing (truncation).
pub fn fourier_add_power(gates: &mut Vec<GateOp>, target: &Register, e: i64, controls: &[Control], sign: Sign) {
    if e < 0 {
        return;
    }
    for r in 0..target.len {
        let idx = r as i64 + 1 - e;
        if idx >= 1 {
            gates.push(GateOp::r(idx as u32, target.qubit(r), sign.as_i32()).ctrl(controls));
        }
    }
}

/// Add a classical constant (raw units of the target) in the Fourier basis.
pub fn fourier_add_constant(gates: &mut Vec<GateOp>, target: &Register, value: u64, controls: &[Control], sign: Sign) {
    for e in 0..64 {
        if value >> e & 1 == 1 {
            fourier_add_power(gates, target, e, controls, sign);
        }
    }
}

/// Exponent of digit `j` (1-based) of a plain `n`-digit code in a target
/// with `p` fraction digits, after scaling by `2^{-l}`.
fn digit_exponent(p: usize, j: usize, l: i64) -> i64 {
    p as i64 - j as i64 - l
}

fn check_width(w: usize) -> Result<()> {
    if w == 0 || w > MAX_REGISTER_WIDTH {
        Err(invalid(format!("register width {w} unsupported")))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Semantic definitions

/// `c +- 2^{-l} b` on a `1 + p`-qubit target, `b` a plain `n`-digit code.
#[must_use]
pub fn add_semantic(c: u64, b: u64, n: usize, p: usize, l: i64, sign: Sign) -> u64 {
    let mut g: u128 = 0;
    for j in 1..=n {
        let e = digit_exponent(p, j, l);
        if (0..64).contains(&e) && b >> (n - j) & 1 == 1 {
            g += 1u128 << e;
        }
    }
    combine(c, g, p + 1, sign)
}

/// Bit-truncated product `sum a_i b_j 2^{p + s - i - j}` over pairs with a
/// nonnegative exponent, as a multiple of `2^{-p}`.
#[must_use]
pub fn truncated_product(a: u64, m: usize, b: u64, n: usize, p: usize, shift: i64) -> u128 {
    let mut g: u128 = 0;
    for i in 1..=m {
        if a >> (m - i) & 1 == 0 {
            continue;
        }
        for j in 1..=n {
            let e = p as i64 + shift - i as i64 - j as i64;
            if (0..120).contains(&e) && b >> (n - j) & 1 == 1 {
                g += 1u128 << e;
            }
        }
    }
    g
}

/// `c +- 2^s a b` with bit truncation on a `1 + p`-qubit target.
#[must_use]
#[allow(clippy::too_many_arguments)]
pub fn mul_add_semantic(c: u64, a: u64, m: usize, b: u64, n: usize, p: usize, shift: i64, sign: Sign) -> u64 {
    combine(c, truncated_product(a, m, b, n, p, shift), p + 1, sign)
}

fn combine(c: u64, g: u128, width: usize, sign: Sign) -> u64 {
    let modulus = 1u128 << width;
    let g = g % modulus;
    let c = u128::from(c);
    let r = match sign {
        Sign::Plus => (c + g) % modulus,
        Sign::Minus => (c + modulus - g) % modulus,
    };
    r as u64
}

/// Fold `x -> 1 - x` for `x >= 1/2` on a plain `p`-digit code.
#[must_use]
pub fn fold_semantic(x: u64, p: usize) -> u64 {
    if x >> (p - 1) & 1 == 1 {
        ((1u64 << p) - x) & mask(p)
    } else {
        x
    }
}

/// Difference of two complemental `1 + w` codes rounded to `1 + p0` digits
/// (nearest, ties upward), modulo 2.
#[must_use]
pub fn rounded_difference(a: u64, b: u64, w: usize, p0: usize) -> u64 {
    let m = 1u128 << (w + 1);
    let mut d = (u128::from(a) + m - u128::from(b)) % m;
    if w > p0 {
        d = (d + (1u128 << (w - p0 - 1))) % m;
        (d >> (w - p0)) as u64
    } else {
        ((d << (p0 - w)) % (1u128 << (p0 + 1))) as u64
    }
}

// ---------------------------------------------------------------------------
// Adders

fn semantic_program(layout: &RegisterLayout, ops: Vec<BasisOp>) -> CircuitProgram {
    let mut p = CircuitProgram::new(layout.clone());
    for op in ops {
        p.basis(op);
    }
    p
}

fn gate_program(layout: &RegisterLayout, gates: Vec<GateOp>) -> CircuitProgram {
    let mut p = CircuitProgram::new(layout.clone());
    for g in gates {
        p.gate(g);
    }
    p
}

/// Gates adding `+- 2^{-l} b` to a target already in the Fourier basis.
pub fn qft_adder_gates(l: i64, b: &Register, phi_c: &Register, sign: Sign, controls: &[Control]) -> Vec<GateOp> {
    let p = phi_c.len - 1;
    let mut gates = Vec::new();
    for j in 1..=b.len {
        let mut ctl = vec![Control::on(b.qubit(j - 1))];
        ctl.extend_from_slice(controls);
        fourier_add_power(&mut gates, phi_c, digit_exponent(p, j, l), &ctl, sign);
    }
    gates
}

/// `|b>|phi(c)> -> |b>|phi(c +- 2^{-l} b)>` with `b` plain (`n` digits) and
/// `c` complemental with `p` fraction digits.
pub fn qft_adder(l: i64, n: usize, p: usize, sign: Sign) -> Result<ArithCircuit> {
    check_width(n)?;
    check_width(p + 1)?;
    let mut layout = RegisterLayout::new();
    let b = layout.add("b", n);
    let c = layout.add("c", p + 1);
    let gates = qft_adder_gates(l, &b, &c, sign, &[]);
    let mut semantic = gate_program(&layout, qft_gates(&c, true));
    semantic.basis(add_op(&b, &c, l, sign));
    for g in qft_gates(&c, false) {
        semantic.gate(g);
    }
    Ok(ArithCircuit {
        name: format!("qft_adder(l={l})"),
        gates: gate_program(&layout, gates),
        semantic,
        inputs: vec![b],
        output: c,
        ancillas: vec![],
        layout,
    })
}

fn add_op(b: &Register, c: &Register, l: i64, sign: Sign) -> BasisOp {
    let (n, p) = (b.len, c.len - 1);
    BasisOp::map(
        format!("add(l={l})"),
        vec![b.clone()],
        c.clone(),
        Arc::new(move |v, cv| add_semantic(cv, v[0], n, p, l, sign)),
    )
}

/// Gates of the quantum adder `QFT^dagger . qft_adder . QFT` on `c`.
pub fn quantum_adder_gates(l: i64, b: &Register, c: &Register, sign: Sign, controls: &[Control]) -> Vec<GateOp> {
    let mut gates = qft_gates(c, false);
    gates.extend(qft_adder_gates(l, b, c, sign, controls));
    gates.extend(qft_gates(c, true));
    gates
}

/// `|b>|c> -> |b>|c +- 2^{-l} b>` in the computational basis.
pub fn quantum_adder(l: i64, n: usize, p: usize, sign: Sign) -> Result<ArithCircuit> {
    check_width(n)?;
    check_width(p + 1)?;
    let mut layout = RegisterLayout::new();
    let b = layout.add("b", n);
    let c = layout.add("c", p + 1);
    Ok(ArithCircuit {
        name: format!("quantum_adder(l={l})"),
        gates: gate_program(&layout, quantum_adder_gates(l, &b, &c, sign, &[])),
        semantic: semantic_program(&layout, vec![add_op(&b, &c, l, sign)]),
        inputs: vec![b],
        output: c,
        ancillas: vec![],
        layout,
    })
}

// ---------------------------------------------------------------------------
// Multiply-adders

/// Fourier-basis part of the multiply-adder: one digit-controlled QFT adder
/// per digit of `a`.
pub fn multiply_adder_fourier_gates(a: &Register, b: &Register, c: &Register, shift: i64, sign: Sign) -> Vec<GateOp> {
    let p = c.len - 1;
    let mut gates = Vec::new();
    for i in 1..=a.len {
        for j in 1..=b.len {
            let e = p as i64 + shift - i as i64 - j as i64;
            fourier_add_power(
                &mut gates,
                c,
                e,
                &[Control::on(a.qubit(i - 1)), Control::on(b.qubit(j - 1))],
                sign,
            );
        }
    }
    gates
}

/// Multiply-adder gates `QFT^dagger . pi . QFT` acting on `c`.
pub fn multiply_adder_gates(a: &Register, b: &Register, c: &Register, shift: i64, sign: Sign) -> Vec<GateOp> {
    let mut gates = qft_gates(c, false);
    gates.extend(multiply_adder_fourier_gates(a, b, c, shift, sign));
    gates.extend(qft_gates(c, true));
    gates
}

fn mul_op(a: &Register, b: &Register, c: &Register, shift: i64, sign: Sign) -> BasisOp {
    let (m, n, p) = (a.len, b.len, c.len - 1);
    BasisOp::map(
        "mul_add",
        vec![a.clone(), b.clone()],
        c.clone(),
        Arc::new(move |v, cv| mul_add_semantic(cv, v[0], m, v[1], n, p, shift, sign)),
    )
}

/// `|a>|b>|c> -> |a>|b>|c +- 2^s a b>` with `a` (`m` digits) and `b` (`n`
/// digits) plain and `c` complemental with `p` fraction digits.
pub fn multiply_adder_with(m: usize, n: usize, p: usize, shift: i64, sign: Sign) -> Result<ArithCircuit> {
    check_width(m)?;
    check_width(n)?;
    check_width(p + 1)?;
    let mut layout = RegisterLayout::new();
    let a = layout.add("a", m);
    let b = layout.add("b", n);
    let c = layout.add("c", p + 1);
    Ok(ArithCircuit {
        name: format!("multiply_adder(m={m},n={n},p={p},s={shift})"),
        gates: gate_program(&layout, multiply_adder_gates(&a, &b, &c, shift, sign)),
        semantic: semantic_program(&layout, vec![mul_op(&a, &b, &c, shift, sign)]),
        inputs: vec![a, b],
        output: c,
        ancillas: vec![],
        layout,
    })
}

/// Exact multiply-adder: `c` has `m + n` fraction digits.
pub fn multiply_adder(m: usize, n: usize, sign: Sign) -> Result<ArithCircuit> {
    multiply_adder_with(m, n, m + n, 0, sign)
}

// ---------------------------------------------------------------------------
// Subtractors

/// `|alpha>|beta>|0> -> |alpha>|beta>|alpha - beta>` using two quantum
/// adders. `alpha` and `beta` are plain `width`-digit codes; the output is
/// complemental with `width` fraction digits.
pub fn subtractor_sigma_minus(width: usize) -> Result<ArithCircuit> {
    check_width(width + 1)?;
    let mut layout = RegisterLayout::new();
    let a = layout.add("alpha", width);
    let b = layout.add("beta", width);
    let out = layout.add("out", width + 1);
    let mut gates = quantum_adder_gates(0, &a, &out, Sign::Plus, &[]);
    gates.extend(quantum_adder_gates(0, &b, &out, Sign::Minus, &[]));
    let ops = vec![add_op(&a, &out, 0, Sign::Plus), add_op(&b, &out, 0, Sign::Minus)];
    Ok(ArithCircuit {
        name: format!("sigma_minus({width})"),
        gates: gate_program(&layout, gates),
        semantic: semantic_program(&layout, ops),
        inputs: vec![a, b],
        output: out,
        ancillas: vec![],
        layout,
    })
}

/// Gates adding a complemental register `src` (all `1 + w` qubits, sign
/// digit included) into a Fourier-basis target with `w` fraction digits.
fn fourier_add_register(gates: &mut Vec<GateOp>, src: &Register, target: &Register, sign: Sign) {
    let w = src.len - 1;
    for q in 0..src.len {
        fourier_add_power(gates, target, (w - q) as i64, &[Control::on(src.qubit(q))], sign);
    }
}

/// Gates for `y <- round(alpha - beta)` with a scratch register that is
/// returned to zero: compute the wide difference, copy its leading digits,
/// uncompute.
pub fn rounded_difference_gates(a: &Register, b: &Register, d: &Register, y: &Register) -> Vec<GateOp> {
    let w = a.len - 1;
    let p0 = y.len - 1;
    let mut compute = qft_gates(d, false);
    fourier_add_register(&mut compute, a, d, Sign::Plus);
    fourier_add_register(&mut compute, b, d, Sign::Minus);
    if w > p0 {
        fourier_add_power(&mut compute, d, (w - p0 - 1) as i64, &[], Sign::Plus);
    }
    compute.extend(qft_gates(d, true));
    let mut gates = compute.clone();
    let copied = (w + 1).min(p0 + 1);
    for q in 0..copied {
        gates.push(GateOp::x(y.qubit(q)).ctrl(&[Control::on(d.qubit(q))]));
    }
    gates.extend(compute.iter().rev().map(GateOp::adjoint));
    gates
}

/// `|alpha>|beta>|0> -> |alpha>|beta>|round(alpha - beta)>` with `alpha`,
/// `beta` complemental (`w` fraction digits) and the result complemental
/// with `p0` fraction digits.
pub fn sigma_minus_rounded(w: usize, p0: usize) -> Result<ArithCircuit> {
    check_width(w + 1)?;
    check_width(p0 + 1)?;
    let mut layout = RegisterLayout::new();
    let a = layout.add("alpha", w + 1);
    let b = layout.add("beta", w + 1);
    let y = layout.add("y", p0 + 1);
    let d = layout.add("scratch", w + 1);
    let op = BasisOp::combine(
        "round_diff",
        vec![a.clone(), b.clone()],
        y.clone(),
        Combine::Xor,
        Arc::new(move |v| rounded_difference(v[0], v[1], w, p0)),
    );
    Ok(ArithCircuit {
        name: format!("sigma_minus_rounded(w={w},p0={p0})"),
        gates: gate_program(&layout, rounded_difference_gates(&a, &b, &d, &y)),
        semantic: semantic_program(&layout, vec![op]),
        inputs: vec![a, b],
        output: y,
        ancillas: vec![d],
        layout,
    })
}

// ---------------------------------------------------------------------------
// Fold

/// Gates writing `fold(x)` into a blank register `u`: copy, then negate
/// modulo 1 when the leading digit of `x` is set.
pub fn fold_gates(x: &Register, u: &Register) -> Vec<GateOp> {
    let mut gates: Vec<GateOp> = x
        .qubits()
        .zip(u.qubits())
        .map(|(a, b)| GateOp::x(b).ctrl(&[Control::on(a)]))
        .collect();
    let flag = [Control::on(x.qubit(0))];
    for q in u.qubits() {
        gates.push(GateOp::x(q).ctrl(&flag));
    }
    // u now holds 2^p - 1 - x; add one more unit modulo 2^p.
    gates.extend(qft_gates(u, false));
    fourier_add_power(&mut gates, u, 0, &flag, Sign::Plus);
    gates.extend(qft_gates(u, true));
    gates
}

/// `|x>|0> -> |x>|fold(x)>` on plain `p`-digit codes, where
/// `fold(x) = 1 - x` for `x >= 1/2` and `x` otherwise.
pub fn fold(p: usize) -> Result<ArithCircuit> {
    check_width(p)?;
    let mut layout = RegisterLayout::new();
    let x = layout.add("x", p);
    let u = layout.add("u", p);
    let op = BasisOp::combine(
        "fold",
        vec![x.clone()],
        u.clone(),
        Combine::Xor,
        Arc::new(move |v| fold_semantic(v[0], p)),
    );
    Ok(ArithCircuit {
        name: format!("fold({p})"),
        gates: gate_program(&layout, fold_gates(&x, &u)),
        semantic: semantic_program(&layout, vec![op]),
        inputs: vec![x],
        output: u,
        ancillas: vec![],
        layout,
    })
}

// ---------------------------------------------------------------------------
// Sine and cosine

/// Which series a Taylor gate evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trig {
    Sin,
    Cos,
}

/// Sizes of a Taylor-series gate for `sin(pi x)` or `cos(pi x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SineGateConfig {
    /// Digits of the input `x`.
    pub n: usize,
    /// Index of the last Taylor term; `t + 1` terms are kept.
    pub t_terms: usize,
    /// Fraction digits of powers and coefficients.
    pub p_prime: usize,
    /// Fraction digits of the output.
    pub out_digits: usize,
}

fn ceil_log2(n: usize) -> usize {
    (usize::BITS - (n.max(1) - 1).leading_zeros()) as usize
}

impl SineGateConfig {
    /// `t = n`, `p' = n + ceil(log2 n) + 2t`, output `n + ceil(log2 n)` digits.
    pub fn new(n: usize) -> Result<Self> {
        let cfg = Self {
            n,
            t_terms: n,
            p_prime: n + ceil_log2(n) + 2 * n,
            out_digits: n + ceil_log2(n),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(invalid("sine gate needs at least one input digit"));
        }
        if self.t_terms != n
            || self.p_prime != n + ceil_log2(n) + 2 * self.t_terms
            || self.out_digits != n + ceil_log2(n)
        {
            return Err(invalid(format!("inconsistent sine gate sizes {self:?}")));
        }
        if self.p_prime + 2 > MAX_REGISTER_WIDTH || 2 * self.p_prime + 4 > 120 {
            return Err(invalid(format!("sine gate with n = {n} is too wide")));
        }
        Ok(())
    }

    /// Highest power of `x` used by the series.
    #[must_use]
    pub fn max_power(&self, kind: Trig) -> usize {
        match kind {
            Trig::Sin => 2 * self.t_terms + 1,
            Trig::Cos => 2 * self.t_terms,
        }
    }

    /// Taylor coefficient magnitudes divided by 8, as `p'`-digit codes.
    ///
    /// Entry `i` multiplies `x^{2i+1}` (sine) or `x^{2i}` (cosine).
    #[must_use]
    pub fn coefficients(&self, kind: Trig) -> Vec<u64> {
        let f = FixedPointFormat::plain(self.p_prime);
        (0..=self.t_terms)
            .map(|i| {
                let k = match kind {
                    Trig::Sin => 2 * i + 1,
                    Trig::Cos => 2 * i,
                };
                let c = PI.powi(k as i32) / factorial(k) / 8.0;
                encode_fixed(c, f).map(|code| code.raw()).expect("coefficient below 1")
            })
            .collect()
    }

    /// Output format: plain for sine, complemental for cosine.
    #[must_use]
    pub fn output_format(&self, kind: Trig) -> FixedPointFormat {
        match kind {
            Trig::Sin => FixedPointFormat::plain(self.out_digits),
            Trig::Cos => FixedPointFormat::complemental(self.out_digits),
        }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Digit layout of a power register: `x` itself has `n` digits, higher
/// powers carry a sign digit and `p'` fraction digits.
fn power_digits(cfg: &SineGateConfig, k: usize) -> usize {
    if k == 1 {
        cfg.n
    } else {
        cfg.p_prime
    }
}

/// Accumulator exponent of half an output ulp, so that the clamp's digit
/// copy rounds to nearest instead of truncating.
fn rounding_exponent(cfg: &SineGateConfig) -> usize {
    cfg.p_prime - cfg.out_digits - 1
}

/// Raw accumulator `h = v / 2` (complemental, `p' + 1` fraction digits)
/// before clamping. Shared by the semantic gate and by tests.
#[must_use]
pub fn taylor_accumulator(x: u64, cfg: &SineGateConfig, kind: Trig) -> u64 {
    let pp = cfg.p_prime;
    let top = cfg.max_power(kind);
    let mut powers = vec![0u64; top + 1];
    powers[1] = x;
    for k in 1..top {
        let b = powers[k];
        powers[k + 1] = mul_add_semantic(0, x, cfg.n, b, power_digits(cfg, k), pp, 0, Sign::Plus);
    }
    let hp = pp + 1;
    let mut h = 0u64;
    if kind == Trig::Cos {
        h = 1u64 << (hp - 1);
    }
    for (i, kc) in cfg.coefficients(kind).into_iter().enumerate() {
        let power = match kind {
            Trig::Sin => 2 * i + 1,
            Trig::Cos => 2 * i,
        };
        if power == 0 {
            continue;
        }
        let sign = if i % 2 == 0 { Sign::Plus } else { Sign::Minus };
        h = mul_add_semantic(
            h,
            kc,
            pp,
            powers[power] & mask(power_digits(cfg, power)),
            power_digits(cfg, power),
            hp,
            2,
            sign,
        );
    }
    (h + (1u64 << rounding_exponent(cfg))) & mask(hp + 1)
}

/// Clamp the accumulator into the output code.
#[must_use]
pub fn clamp_output(h: u64, cfg: &SineGateConfig, kind: Trig) -> u64 {
    let pp = cfg.p_prime;
    let p = cfg.out_digits;
    let h0 = h >> (pp + 1) & 1 == 1;
    let h1 = h >> pp & 1 == 1;
    let digits = (h >> (pp - p)) & mask(p);
    match kind {
        Trig::Sin => match (h0, h1) {
            (false, false) => digits,
            (false, true) => mask(p),
            (true, _) => 0,
        },
        Trig::Cos => match (h0, h1) {
            (false, false) => digits,
            (false, true) => mask(p),
            (true, false) => (1u64 << p) | 1,
            (true, true) => {
                if digits == 0 {
                    (1u64 << p) | 1
                } else {
                    (1u64 << p) | digits
                }
            }
        },
    }
}

/// Output code of the sine or cosine gate for input code `x`.
#[must_use]
pub fn taylor_semantic(x: u64, cfg: &SineGateConfig, kind: Trig) -> u64 {
    clamp_output(taylor_accumulator(x, cfg, kind), cfg, kind)
}

/// Registers of a gate-level Taylor gate.
#[derive(Debug, Clone)]
pub struct TaylorRegisters {
    pub x: Register,
    pub x_copy: Register,
    /// Entry `k` holds `x^k` for `k >= 2`; entries 0 and 1 are unused.
    pub powers: Vec<Option<Register>>,
    pub coefficient: Register,
    pub accumulator: Register,
    pub out: Register,
}

impl TaylorRegisters {
    /// Allocate on `layout` after the input register `x`.
    pub fn allocate(layout: &mut RegisterLayout, x: Register, cfg: &SineGateConfig, kind: Trig) -> Self {
        let x_copy = layout.add("x_copy", cfg.n);
        let top = cfg.max_power(kind);
        let mut powers = vec![None, None];
        for k in 2..=top {
            powers.push(Some(layout.add(format!("pow{k}"), cfg.p_prime + 1)));
        }
        let coefficient = layout.add("coef", cfg.p_prime);
        let accumulator = layout.add("acc", cfg.p_prime + 2);
        let out = layout.add("out", cfg.output_format(kind).width());
        Self {
            x,
            x_copy,
            powers,
            coefficient,
            accumulator,
            out,
        }
    }

    /// Plain-code view of power `k`: `x` itself or the fraction digits.
    fn power_operand(&self, k: usize) -> Register {
        if k == 1 {
            self.x.clone()
        } else {
            let r = self.powers[k].as_ref().expect("allocated power");
            r.slice(1, r.len)
        }
    }

    fn ancillas(&self) -> Vec<Register> {
        let mut v = vec![self.x_copy.clone()];
        v.extend(self.powers.iter().flatten().cloned());
        v.push(self.coefficient.clone());
        v.push(self.accumulator.clone());
        v
    }
}

fn load_constant(reg: &Register, value: u64) -> Vec<GateOp> {
    (0..reg.len)
        .filter(|q| value >> (reg.len - 1 - q) & 1 == 1)
        .map(|q| GateOp::x(reg.qubit(q)))
        .collect()
}

/// Gates computing the accumulator (powers, then signed accumulation).
fn taylor_compute_gates(r: &TaylorRegisters, cfg: &SineGateConfig, kind: Trig) -> Vec<GateOp> {
    let mut gates: Vec<GateOp> =
        r.x.qubits()
            .zip(r.x_copy.qubits())
            .map(|(a, b)| GateOp::x(b).ctrl(&[Control::on(a)]))
            .collect();
    for k in 1..cfg.max_power(kind) {
        let b = if k == 1 { r.x_copy.clone() } else { r.power_operand(k) };
        let c = r.powers[k + 1].as_ref().expect("allocated power");
        gates.extend(multiply_adder_gates(&r.x, &b, c, 0, Sign::Plus));
    }
    let h = &r.accumulator;
    if kind == Trig::Cos {
        gates.push(GateOp::x(h.qubit(1)));
    }
    for (i, kc) in cfg.coefficients(kind).into_iter().enumerate() {
        let power = match kind {
            Trig::Sin => 2 * i + 1,
            Trig::Cos => 2 * i,
        };
        if power == 0 {
            continue;
        }
        let sign = if i % 2 == 0 { Sign::Plus } else { Sign::Minus };
        let load = load_constant(&r.coefficient, kc);
        gates.extend(load.iter().cloned());
        gates.extend(multiply_adder_gates(
            &r.coefficient,
            &r.power_operand(power),
            h,
            2,
            sign,
        ));
        gates.extend(load);
    }
    gates.extend(qft_gates(h, false));
    fourier_add_power(&mut gates, h, rounding_exponent(cfg) as i64, &[], Sign::Plus);
    gates.extend(qft_gates(h, true));
    gates
}

/// Gates writing the clamped output from the accumulator.
fn clamp_gates(r: &TaylorRegisters, cfg: &SineGateConfig, kind: Trig) -> Vec<GateOp> {
    let h = &r.accumulator;
    let out = &r.out;
    let p = cfg.out_digits;
    let h0 = h.qubit(0);
    let h1 = h.qubit(1);
    let mut gates = Vec::new();
    // Fraction digit i of the output sits at out qubit `off + i - 1`.
    let off = match kind {
        Trig::Sin => 0,
        Trig::Cos => 1,
    };
    if kind == Trig::Cos {
        gates.push(GateOp::x(out.qubit(0)).ctrl(&[Control::on(h0)]));
    }
    for i in 1..=p {
        let o = out.qubit(off + i - 1);
        let src = h.qubit(i + 1);
        gates.push(GateOp::x(o).ctrl(&[Control::on(src), Control::off(h0), Control::off(h1)]));
        if kind == Trig::Cos {
            gates.push(GateOp::x(o).ctrl(&[Control::on(src), Control::on(h0), Control::on(h1)]));
        }
        gates.push(GateOp::x(o).ctrl(&[Control::off(h0), Control::on(h1)]));
    }
    if kind == Trig::Cos {
        let last = out.qubit(off + p - 1);
        gates.push(GateOp::x(last).ctrl(&[Control::on(h0), Control::off(h1)]));
        let mut exact = vec![Control::on(h0), Control::on(h1)];
        exact.extend((2..=p + 1).map(|i| Control::off(h.qubit(i))));
        gates.push(GateOp::x(last).ctrl(&exact));
    }
    gates
}

/// Gate-level Taylor gate on allocated registers: compute, clamp into the
/// output, uncompute. All registers except `x` and `out` end blank.
#[must_use]
pub fn taylor_gates(r: &TaylorRegisters, cfg: &SineGateConfig, kind: Trig) -> Vec<GateOp> {
    let compute = taylor_compute_gates(r, cfg, kind);
    let mut gates = compute.clone();
    gates.extend(clamp_gates(r, cfg, kind));
    gates.extend(compute.iter().rev().map(GateOp::adjoint));
    gates
}

fn taylor_gate(cfg: &SineGateConfig, kind: Trig) -> Result<ArithCircuit> {
    cfg.validate()?;
    let mut layout = RegisterLayout::new();
    let x = layout.add("x", cfg.n);
    let regs = TaylorRegisters::allocate(&mut layout, x.clone(), cfg, kind);
    let c = *cfg;
    let op = BasisOp::combine(
        format!("{kind:?}"),
        vec![x.clone()],
        regs.out.clone(),
        Combine::Xor,
        Arc::new(move |v| taylor_semantic(v[0], &c, kind)),
    );
    Ok(ArithCircuit {
        name: format!("{kind:?}_gate(n={})", cfg.n).to_lowercase(),
        gates: gate_program(&layout, taylor_gates(&regs, cfg, kind)),
        semantic: semantic_program(&layout, vec![op]),
        inputs: vec![x],
        output: regs.out.clone(),
        ancillas: regs.ancillas(),
        layout,
    })
}

/// `|x>|0> -> |x>|sin(pi x)>` with `x` a plain `n`-digit code.
pub fn sine_gate(cfg: &SineGateConfig) -> Result<ArithCircuit> {
    taylor_gate(cfg, Trig::Sin)
}

/// `|x>|0> -> |x>|cos(pi x)>`, output complemental.
pub fn cosine_gate(cfg: &SineGateConfig) -> Result<ArithCircuit> {
    taylor_gate(cfg, Trig::Cos)
}

// ---------------------------------------------------------------------------
// The overlap box: estimation outcome -> 2 sin^2(pi M / 2^p) - 1

/// Sizes of the box turning an estimation outcome into `2 sin^2 - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapBox {
    pub p_est: usize,
    pub sine: SineGateConfig,
    /// Fraction digits of the result, `2 * out_digits - 1`.
    pub result_digits: usize,
}

impl OverlapBox {
    pub fn new(p_est: usize) -> Result<Self> {
        let sine = SineGateConfig::new(p_est)?;
        let result_digits = 2 * sine.out_digits - 1;
        check_width(result_digits + 1)?;
        Ok(Self {
            p_est,
            sine,
            result_digits,
        })
    }

    /// Result code (complemental, `result_digits` fraction digits) for
    /// outcome `m`: fold to `[0, 1/2]`, sine gate, square and double with
    /// one shifted multiply-adder, then subtract 1 by flipping the sign
    /// digit.
    #[must_use]
    pub fn evaluate(&self, m: u64) -> u64 {
        let u = fold_semantic(m, self.p_est);
        let s = taylor_semantic(u, &self.sine, Trig::Sin);
        let ps = self.sine.out_digits;
        let w = mul_add_semantic(0, s, ps, s, ps, self.result_digits, 1, Sign::Plus);
        w ^ (1u64 << self.result_digits)
    }

    #[must_use]
    pub fn format(&self) -> FixedPointFormat {
        FixedPointFormat::complemental(self.result_digits)
    }
}

/// Width check used by callers building wide registers.
pub fn ensure_width(w: usize) -> Result<()> {
    check_width(w).map_err(|_| QftcError::InvalidArgument(format!("width {w} exceeds 63 qubits")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseState;
    use crate::state::StateVector;

    fn run_basis(c: &ArithCircuit, values: &[(usize, u64)]) -> (StateVector, StateVector) {
        let n = c.num_qubits();
        let mut idx = 0usize;
        for (start_reg, v) in values {
            let r = &c.layout.registers()[*start_reg];
            idx = r.deposit(idx, n, *v);
        }
        let s = StateVector::basis(n, idx).unwrap();
        (c.gates.run(&s).unwrap(), c.semantic.run(&s).unwrap())
    }

    #[test]
    fn documented_adder_examples() {
        // l=0, b=0.5, c=0.75 -> 1.25, i.e. -0.75.
        let c = add_semantic(0b0110, 0b1, 1, 3, 0, Sign::Plus);
        assert_eq!(FixedPointFormat::complemental(3).value_of(c), -0.75);
        let q = quantum_adder(0, 1, 3, Sign::Plus).unwrap();
        let (g, s) = run_basis(&q, &[(0, 1), (1, 0b0110)]);
        assert!(g.max_abs_diff(&s).unwrap() < 1e-9);
        assert!((s.amplitudes()[0b1_1010].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn documented_multiply_examples() {
        let f = FixedPointFormat::complemental(4);
        // a = b = 0.5 (m = n = 2): c = 0 -> 0.25; c = 0.875 minus -> 0.625.
        let r = mul_add_semantic(0, 0b10, 2, 0b10, 2, 4, 0, Sign::Plus);
        assert_eq!(f.value_of(r), 0.25);
        let r = mul_add_semantic(0b01110, 0b10, 2, 0b10, 2, 4, 0, Sign::Minus);
        assert_eq!(f.value_of(r), 0.625);
    }

    #[test]
    fn documented_subtractor_examples() {
        let f = FixedPointFormat::complemental(2);
        let c = subtractor_sigma_minus(2).unwrap();
        for (a, b, want) in [(0b11, 0b11, 0.0), (0b11, 0b01, 0.5), (0b01, 0b11, -0.5)] {
            let (g, s) = run_basis(&c, &[(0, a), (1, b)]);
            assert!(g.max_abs_diff(&s).unwrap() < 1e-9);
            let out = s.amplitudes().iter().position(|a| a.norm() > 0.5).unwrap();
            assert_eq!(f.value_of(out as u64 & 0b111), want);
        }
        let neg = c
            .semantic
            .run(&StateVector::basis(7, (0b01 << 5) | (0b11 << 3)).unwrap())
            .unwrap();
        let out = neg.amplitudes().iter().position(|a| a.norm() > 0.5).unwrap() as u64 & 0b111;
        assert_eq!(format!("{out:03b}"), "110");
    }

    #[test]
    fn rounded_difference_cases() {
        // w = 4, p0 = 2: 0.375 - 0 rounds to 0.5; 0.3125 - 0 rounds to 0.25.
        assert_eq!(rounded_difference(0b00110, 0, 4, 2), 0b010);
        assert_eq!(rounded_difference(0b00101, 0, 4, 2), 0b001);
        // -0.375 rounds to -0.25 (ties upward).
        assert_eq!(rounded_difference(0, 0b00110, 4, 2), 0b111);
        assert_eq!(rounded_difference(0b011, 0b001, 2, 4), 0b01000);
    }

    #[test]
    fn gate_level_matches_semantic_small_cases() {
        let cases = vec![
            sigma_minus_rounded(3, 2).unwrap(),
            sigma_minus_rounded(2, 3).unwrap(),
            fold(3).unwrap(),
            qft_adder(1, 2, 3, Sign::Minus).unwrap(),
            multiply_adder_with(2, 2, 3, 1, Sign::Plus).unwrap(),
            multiply_adder_with(2, 3, 2, 0, Sign::Minus).unwrap(),
            quantum_adder(2, 3, 2, Sign::Plus).unwrap(),
        ];
        for c in &cases {
            let n = c.num_qubits();
            for idx in 0..1usize << n {
                let blank = c
                    .ancillas
                    .iter()
                    .chain(std::iter::once(&c.output))
                    .all(|r| r.extract(idx, n) == 0);
                if (c.name.starts_with("sigma_minus_rounded") || c.name.starts_with("fold")) && !blank {
                    continue;
                }
                let s = StateVector::basis(n, idx).unwrap();
                let g = c.gates.run(&s).unwrap();
                let m = c.semantic.run(&s).unwrap();
                assert!(g.max_abs_diff(&m).unwrap() < 1e-9, "{} idx={idx}", c.name);
            }
        }
    }

    #[test]
    fn config_consistency() {
        let c = SineGateConfig::new(3).unwrap();
        assert_eq!((c.t_terms, c.p_prime, c.out_digits), (3, 11, 5));
        let mut bad = c;
        bad.p_prime = 5;
        assert!(bad.validate().is_err());
        assert!(sine_gate(&bad).is_err());
    }

    #[test]
    fn sine_gate_level_matches_semantic_n2() {
        let cfg = SineGateConfig::new(2).unwrap();
        for kind in [Trig::Sin, Trig::Cos] {
            let c = taylor_gate(&cfg, kind).unwrap();
            let n = c.num_qubits();
            for x in 0..4u64 {
                let idx = u128::from(x) << (n - cfg.n);
                let mut s = SparseState::basis(n, idx).unwrap();
                c.gates.run_sparse(&mut s).unwrap();
                let want = taylor_semantic(x, &cfg, kind);
                assert_eq!(s.support_size(), 1, "{kind:?} x={x}");
                assert_eq!(s.definite_value(&c.output, 1e-12), Some(want));
                for a in &c.ancillas {
                    assert_eq!(s.definite_value(a, 1e-12), Some(0));
                }
            }
        }
    }

    #[test]
    fn overlap_box_values() {
        let b = OverlapBox::new(4).unwrap();
        let f = b.format();
        for m in 0..16u64 {
            let exact = 2.0 * (PI * m as f64 / 16.0).sin().powi(2) - 1.0;
            let got = f.value_of(b.evaluate(m));
            assert!((got - exact).abs() < 4.0 * (-(b.p_est as f64)).exp2(), "m={m}");
            let mirror = b.evaluate((16 - m) % 16);
            assert_eq!(b.evaluate(m), mirror);
        }
    }
}
