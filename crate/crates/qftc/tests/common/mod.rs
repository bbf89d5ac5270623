//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use qftc::circulant::CirculantSpec;
use qftc::oracle::InputVector;
use qftc::reference::dft_reference;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> InputVector {
    let v = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    InputVector::normalize(v).unwrap().0
}

/// `F^dagger y` for real `y`.
pub fn inverse_dft(y: &[f64]) -> Vec<Complex64> {
    let conj: Vec<Complex64> = y.iter().map(|v| c(*v)).collect();
    dft_reference(&conj).into_iter().map(|v| v.conj()).collect()
}

/// Unit vector with a real DFT and every `|y_k| <= bound`.
pub fn random_real_dft_input(n: usize, bound: f64, rng: &mut ChaCha8Rng) -> InputVector {
    loop {
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-3 {
            continue;
        }
        let y: Vec<f64> = y.iter().map(|v| v / norm).collect();
        if y.iter().all(|v| v.abs() <= bound) {
            return InputVector::normalize(inverse_dft(&y)).unwrap().0;
        }
    }
}

/// Hermitian first row: `c_{N-j} = conj(c_j)`, so the spectrum is real.
/// Rows with some `|F_k| > max_f` are redrawn.
pub fn random_hermitian(n: usize, max_f: f64, rng: &mut ChaCha8Rng) -> CirculantSpec {
    loop {
        let mut v = vec![c(0.0); n];
        for j in 0..=n / 2 {
            let z = if j == 0 || 2 * j == n {
                c(rng.gen_range(-1.0..1.0))
            } else {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            };
            v[j] = z;
            v[(n - j) % n] = z.conj();
        }
        let (x, _) = InputVector::normalize(v).unwrap();
        if dft_reference(x.components()).iter().all(|f| f.norm() <= max_f) {
            let spec = CirculantSpec::new(x);
            assert!(spec.hermitian);
            return spec;
        }
    }
}

pub fn random_general(n: usize, rng: &mut ChaCha8Rng) -> CirculantSpec {
    CirculantSpec::new(random_unit(n, rng))
}
