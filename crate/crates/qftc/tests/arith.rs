use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use qftc::arith::*;
use qftc::circuits::Sign;
use qftc::fixed::{encode_fixed, FixedPointFormat};
use qftc::state::StateVector;
use qftc::tally::CostModel;
use qftc::verify::{log_log_slope, trig_error, verify_arith, ArithOp, VerifyMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assert_clean(op: ArithOp, m: usize, n: usize) {
    let r = verify_arith(op, m, n, VerifyMode::Both).unwrap();
    assert!(r.cases > 0);
    assert!(
        r.passed(),
        "{op} m={m} n={n}: {:?}",
        &r.mismatches[..r.mismatches.len().min(5)]
    );
}

#[test]
fn adder_exhaustive_m3_n3() {
    assert_clean(ArithOp::Adder, 3, 3);
}

#[test]
fn multiply_adder_exhaustive_m2_n2() {
    assert_clean(ArithOp::MulAdd, 2, 2);
}

#[test]
fn sigma_minus_exhaustive_width3() {
    assert_clean(ArithOp::SigmaMinus, 3, 3);
}

#[test]
fn smaller_shapes_exhaustive() {
    for (m, n) in [(1, 1), (1, 3), (2, 1), (3, 1)] {
        assert_clean(ArithOp::Adder, m, n);
        assert_clean(ArithOp::MulAdd, m, n);
    }
    for w in 1..=2 {
        assert_clean(ArithOp::SigmaMinus, w, w);
    }
}

#[test]
fn adder_examples() {
    let c = quantum_adder(0, 3, 3, Sign::Plus).unwrap();
    // b = 0 leaves every c unchanged.
    for cv in 0..16usize {
        let s = StateVector::basis(7, cv).unwrap();
        assert!(c.gates.run(&s).unwrap().max_abs_diff(&s).unwrap() < 1e-9);
    }
}

#[test]
fn subtractor_examples() {
    let f = FixedPointFormat::complemental(2);
    let c = subtractor_sigma_minus(2).unwrap();
    for (a, b, want) in [(0b11u64, 0b11u64, 0.0), (0b11, 0b01, 0.5), (0b01, 0b11, -0.5)] {
        let s = StateVector::basis(7, ((a << 5) | (b << 3)) as usize).unwrap();
        let out = c.gates.run(&s).unwrap();
        let idx = out.amplitudes().iter().position(|v| v.norm() > 0.5).unwrap() as u64;
        assert_eq!(f.value_of(idx & 0b111), want);
    }
}

#[test]
fn sine_cosine_examples() {
    for n in 3..=5 {
        let cfg = SineGateConfig::new(n).unwrap();
        let sin = cfg.output_format(Trig::Sin);
        let cos = cfg.output_format(Trig::Cos);
        let plain = FixedPointFormat::plain(n);
        let bound = (-(n as f64)).exp2();
        assert_eq!(taylor_semantic(0, &cfg, Trig::Sin), 0);
        let half = encode_fixed(0.5, plain).unwrap().raw();
        // sin(pi/2) and cos 0 saturate at the largest code.
        assert_eq!(taylor_semantic(half, &cfg, Trig::Sin), (1u64 << cfg.out_digits) - 1);
        assert_eq!(cos.value_of(taylor_semantic(0, &cfg, Trig::Cos)), 1.0 - cos.ulp());
        assert!(cos.value_of(taylor_semantic(half, &cfg, Trig::Cos)).abs() <= bound);
        let quarter = encode_fixed(0.25, plain).unwrap().raw();
        let s = sin.value_of(taylor_semantic(quarter, &cfg, Trig::Sin));
        assert!(
            (s - std::f64::consts::FRAC_1_SQRT_2).abs() <= bound,
            "n={n} sin(pi/4)={s}"
        );
        // 1/3 is not a code; compare against cos at the encoded input.
        let third = encode_fixed(1.0 / 3.0, plain).unwrap();
        let got = cos.value_of(taylor_semantic(third.raw(), &cfg, Trig::Cos));
        assert!((got - (PI * third.value()).cos()).abs() <= bound, "n={n}");
        assert!((got - 0.5).abs() <= bound + PI * plain.ulp(), "n={n}");
    }
}

#[test]
fn trig_error_within_bound_semantic() {
    for n in 3..=5 {
        for kind in [Trig::Sin, Trig::Cos] {
            let e = trig_error(kind, n, false).unwrap();
            assert!(e.within_bound(), "{e:?}");
        }
    }
}

#[test]
fn trig_error_within_bound_gate_level() {
    for kind in [Trig::Sin, Trig::Cos] {
        let gate = trig_error(kind, 3, true).unwrap();
        let sem = trig_error(kind, 3, false).unwrap();
        assert!(gate.within_bound(), "{gate:?}");
        assert_eq!(gate.max_error, sem.max_error);
    }
}

fn random_superposition(c: &ArithCircuit, rng: &mut ChaCha8Rng) -> StateVector {
    // Inputs random, output and ancillas blank.
    let n = c.num_qubits();
    let blank: Vec<_> = c.ancillas.iter().chain(std::iter::once(&c.output)).collect();
    let amps = (0..1usize << n)
        .map(|i| {
            if blank.iter().all(|r| r.extract(i, n) == 0) {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    StateVector::from_amplitudes(amps).unwrap().normalized()
}

fn small_circuits() -> Vec<ArithCircuit> {
    vec![
        quantum_adder(1, 3, 3, Sign::Plus).unwrap(),
        quantum_adder(0, 2, 3, Sign::Minus).unwrap(),
        qft_adder(0, 2, 2, Sign::Plus).unwrap(),
        multiply_adder(2, 2, Sign::Plus).unwrap(),
        multiply_adder_with(3, 2, 3, 1, Sign::Minus).unwrap(),
        subtractor_sigma_minus(3).unwrap(),
        sigma_minus_rounded(3, 2).unwrap(),
        fold(3).unwrap(),
    ]
}

#[test]
fn gate_matches_semantic_on_random_superpositions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for c in small_circuits() {
        for _ in 0..20 {
            let s = random_superposition(&c, &mut rng);
            let g = c.gates.run(&s).unwrap();
            let m = c.semantic.run(&s).unwrap();
            assert!(g.max_abs_diff(&m).unwrap() < 1e-9, "{}", c.name);
        }
    }
}

#[test]
fn superposition_linearity() {
    // f applied to sum a_i |x_i>|0> equals sum a_i |x_i>|f(x_i)>.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for c in small_circuits() {
        let s = random_superposition(&c, &mut rng);
        let whole = c.semantic.run(&s).unwrap();
        let n = c.num_qubits();
        let mut sum = vec![Complex64::new(0.0, 0.0); 1 << n];
        for (i, a) in s.amplitudes().iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            let out = c.semantic.run(&StateVector::basis(n, i).unwrap()).unwrap();
            for (acc, v) in sum.iter_mut().zip(out.amplitudes()) {
                *acc += a * v;
            }
        }
        let sum = StateVector::from_amplitudes(sum).unwrap();
        assert!(whole.max_abs_diff(&sum).unwrap() < 1e-9, "{}", c.name);
    }
}

#[test]
fn reversibility() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for c in small_circuits() {
        let n = c.num_qubits();
        let amps = (0..1usize << n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let s = StateVector::from_amplitudes(amps).unwrap().normalized();
        for prog in [&c.gates, &c.semantic] {
            let back = prog.inverse().run(&prog.run(&s).unwrap()).unwrap();
            assert!(back.max_abs_diff(&s).unwrap() < 1e-9, "{}", c.name);
        }
    }
}

#[test]
fn multiply_adder_tally_trend() {
    // Gate count of the square multiply-adder against m = n, where the
    // bound max{m n^2, n m^2} is cubic. Below m = 8 the quadratic QFT term
    // still dominates the fit.
    let model = CostModel::default();
    let sizes = [8usize, 12, 16, 20, 24, 30];
    let counts: Vec<f64> = sizes
        .iter()
        .map(|&m| {
            multiply_adder(m, m, Sign::Plus)
                .unwrap()
                .gates
                .tally(&model)
                .one_two_qubit_count as f64
        })
        .collect();
    let xs: Vec<f64> = sizes.iter().map(|&m| m as f64).collect();
    let slope = log_log_slope(&xs, &counts).unwrap();
    let bound: Vec<f64> = xs.iter().map(|m| m * m * m).collect();
    let want = log_log_slope(&xs, &bound).unwrap();
    assert!((slope - want).abs() <= 0.3, "slope {slope} vs {want}");
}

proptest! {
    #[test]
    fn adder_group_law(l in 0i64..3, n in 1usize..4, p in 3usize..6, b in any::<u64>(), c in any::<u64>()) {
        let b = b % (1 << n);
        let c = c % (1 << (p + 1));
        let up = add_semantic(c, b, n, p, l, Sign::Plus);
        prop_assert_eq!(add_semantic(up, b, n, p, l, Sign::Minus), c);
    }

    #[test]
    fn multiply_adder_group_law(m in 1usize..4, n in 1usize..4, a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let p = m + n;
        let (a, b, c) = (a % (1 << m), b % (1 << n), c % (1 << (p + 1)));
        let up = mul_add_semantic(c, a, m, b, n, p, 0, Sign::Plus);
        prop_assert_eq!(mul_add_semantic(up, a, m, b, n, p, 0, Sign::Minus), c);
    }
}
