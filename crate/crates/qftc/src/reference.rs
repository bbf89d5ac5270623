//! Classical oracles the quantum pipeline is checked against.
//!
//! These routines are deliberately naive and share no code with the
//! circuits they check.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::circuits::Sign;
use crate::error::{invalid, QftcError, Result};
use crate::fixed::{FixedPointCode, FixedPointFormat};

/// `y_k = N^{-1/2} sum_j e^{2 pi i jk/N} x_j` by direct summation.
#[must_use]
pub fn dft_reference(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, xj)| Complex64::from_polar(1.0, 2.0 * PI * ((j * k) % n) as f64 / n as f64) * xj)
                .sum::<Complex64>()
                * scale
        })
        .collect()
}

/// Swap-test overlaps of `phi_k` with the two reference states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlaps {
    /// `|<phi+|phi_k>|^2 = (y^2 + 1)/4 + y/2`.
    pub plus: f64,
    /// `|<phi-|phi_k>|^2 = (y^2 + 1)/4 - y/2`.
    pub minus: f64,
    /// `arcsin(sqrt((1 + plus)/2))`, in `[0, pi/2]`.
    pub theta: f64,
}

impl Overlaps {
    /// Angle of the minus branch.
    #[must_use]
    pub fn theta_minus(&self) -> f64 {
        ((1.0 + self.minus) / 2.0).sqrt().asin()
    }

    #[must_use]
    pub fn theta_for(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.theta,
            Sign::Minus => self.theta_minus(),
        }
    }
}

pub fn expected_overlaps(y: f64) -> Result<Overlaps> {
    if y.is_nan() || y.abs() >= 1.0 {
        return Err(invalid(format!("|y| = {} must be below 1", y.abs())));
    }
    let base = (y * y + 1.0) / 4.0;
    let plus = base + y / 2.0;
    Ok(Overlaps {
        plus,
        minus: base - y / 2.0,
        theta: ((1.0 + plus) / 2.0).sqrt().asin(),
    })
}

/// Fixed-point operations mirrored by [`fixed_point_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixedOp {
    /// `c +- 2^{-l} b`; operands `[c, b]`.
    Add { sign: Sign, l: i64 },
    /// `c +- 2^s a b`; operands `[c, a, b]`.
    MulAdd { sign: Sign, shift: i64 },
    /// `alpha - beta`; operands `[alpha, beta]`.
    Sub,
}

/// `floor(v * 2^e)` for nonnegative `v`.
fn scale_floor(v: u64, e: i64) -> i128 {
    if e >= 0 {
        i128::from(v) << e
    } else if -e >= 64 {
        0
    } else {
        i128::from(v >> (-e))
    }
}

/// Result of a fixed-point operation in the output format, computed on
/// scaled integers.
///
/// Operands are plain or complemental codes; the output format must be
/// complemental and the result is reduced modulo 2. Products are truncated
/// row by row: each set digit `a_i` contributes `floor(b 2^{s-i})` in units
/// of the output's last place, which is the same as dropping every digit
/// product below that place.
pub fn fixed_point_oracle(op: FixedOp, operands: &[FixedPointCode], out: FixedPointFormat) -> Result<FixedPointCode> {
    if !out.complemental {
        return Err(invalid("output format must be complemental"));
    }
    let p = out.fraction_digits as i64;
    let modulus = 1i128 << (p + 1);
    let units = |c: &FixedPointCode| -> i128 {
        // Exact value in units of 2^{-p}, requires no more digits than p.
        let d = c.format.fraction_digits as i64;
        let s = c.format.signed(c.raw());
        i128::from(s) << (p - d).max(0)
    };
    let need = |k: usize| -> Result<()> {
        if operands.len() == k {
            Ok(())
        } else {
            Err(invalid(format!("expected {k} operands, got {}", operands.len())))
        }
    };
    let format_err = || QftcError::InvalidArgument("operand format mismatch".into());
    let total = match op {
        FixedOp::Add { sign, l } => {
            need(2)?;
            let (c, b) = (&operands[0], &operands[1]);
            if c.format != out || b.format.complemental {
                return Err(format_err());
            }
            let nb = b.format.fraction_digits as i64;
            units(c) + i128::from(sign.as_i32()) * scale_floor(b.raw(), p - nb - l)
        }
        FixedOp::MulAdd { sign, shift } => {
            need(3)?;
            let (c, a, b) = (&operands[0], &operands[1], &operands[2]);
            if c.format != out || a.format.complemental || b.format.complemental {
                return Err(format_err());
            }
            let m = a.format.fraction_digits;
            let nb = b.format.fraction_digits as i64;
            let mut prod: i128 = 0;
            for i in 1..=m {
                if a.raw() >> (m - i) & 1 == 1 {
                    prod += scale_floor(b.raw(), p + shift - i as i64 - nb);
                }
            }
            units(c) + i128::from(sign.as_i32()) * prod
        }
        FixedOp::Sub => {
            need(2)?;
            let (a, b) = (&operands[0], &operands[1]);
            if a.format.fraction_digits as i64 > p || b.format.fraction_digits as i64 > p {
                return Err(format_err());
            }
            units(a) - units(b)
        }
    };
    FixedPointCode::from_raw(out, total.rem_euclid(modulus) as u64)
}

/// `sin(pi x)` and `cos(pi x)` from the host library.
#[must_use]
pub fn sin_pi(x: f64) -> f64 {
    (PI * x).sin()
}

#[must_use]
pub fn cos_pi(x: f64) -> f64 {
    (PI * x).cos()
}

/// Dense `N x N` matrix, row-major.
pub type Matrix = Vec<Complex64>;

/// Circulant matrix with first row `c`: `C_ij = c_{(j - i) mod N}`.
#[must_use]
pub fn circulant_dense(c: &[Complex64]) -> Matrix {
    let n = c.len();
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = c[(j + n - i) % n];
        }
    }
    m
}

/// Fourier matrix `F_kj = e^{2 pi i jk/N} / sqrt(N)`.
#[must_use]
pub fn fourier_matrix(n: usize) -> Matrix {
    let s = 1.0 / (n as f64).sqrt();
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        for j in 0..n {
            m[k * n + j] = Complex64::from_polar(s, 2.0 * PI * ((j * k) % n) as f64 / n as f64);
        }
    }
    m
}

#[must_use]
pub fn matmul(a: &Matrix, b: &Matrix, n: usize) -> Matrix {
    let mut c = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                c[i * n + j] += a[i * n + k] * b[k * n + j];
            }
        }
    }
    c
}

#[must_use]
pub fn dagger(a: &Matrix, n: usize) -> Matrix {
    let mut d = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            d[j * n + i] = a[i * n + j].conj();
        }
    }
    d
}

#[must_use]
pub fn matvec(a: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| a[i * n + j] * v[j]).sum()).collect()
}

/// Whether `c_j = conj(c_{N-j})` within `tol`.
#[must_use]
pub fn is_hermitian_row(c: &[Complex64], tol: f64) -> bool {
    let n = c.len();
    (0..n).all(|j| (c[j] - c[(n - j) % n].conj()).norm() <= tol)
}

/// `e^{-iCt}` for a Hermitian circulant, as `F diag(e^{-i Lambda t}) F^dagger`.
pub fn expm_circulant(c: &[Complex64], t: f64) -> Result<Matrix> {
    if !is_hermitian_row(c, 1e-10) {
        return Err(QftcError::NotHermitian);
    }
    let n = c.len();
    let f = fourier_matrix(n);
    let lambda: Vec<f64> = dft_reference(c).iter().map(|v| v.re * (n as f64).sqrt()).collect();
    let mut d = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        d[k * n + k] = Complex64::from_polar(1.0, -lambda[k] * t);
    }
    Ok(matmul(&matmul(&f, &d, n), &dagger(&f, n), n))
}

/// A regenerable table of oracle values.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTable {
    pub columns: Vec<String>,
    pub rows: Vec<ReferenceRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRow {
    pub inputs: Vec<f64>,
    pub expected: Vec<f64>,
    /// Name of the routine that produced the row.
    pub source: String,
}

impl ReferenceTable {
    /// DFT of `x`: one row per `k` with `(k) -> (Re y_k, Im y_k)`.
    #[must_use]
    pub fn dft(x: &[Complex64]) -> Self {
        let rows = dft_reference(x)
            .into_iter()
            .enumerate()
            .map(|(k, y)| ReferenceRow {
                inputs: vec![k as f64],
                expected: vec![y.re, y.im],
                source: "dft_reference".into(),
            })
            .collect();
        Self {
            columns: vec!["k".into(), "y_re".into(), "y_im".into()],
            rows,
        }
    }

    /// Overlaps for each `y`: `(y) -> (plus, minus, theta)`.
    pub fn overlaps(ys: &[f64]) -> Result<Self> {
        let rows = ys
            .iter()
            .map(|&y| {
                let o = expected_overlaps(y)?;
                Ok(ReferenceRow {
                    inputs: vec![y],
                    expected: vec![o.plus, o.minus, o.theta],
                    source: "expected_overlaps".into(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            columns: vec!["y".into(), "plus".into(), "minus".into(), "theta".into()],
            rows,
        })
    }

    #[must_use]
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push_str(",source\n");
        for r in &self.rows {
            for v in r.inputs.iter().chain(&r.expected) {
                let _ = write!(s, "{v:.15e},");
            }
            s.push_str(&r.source);
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn dft_examples() {
        let e0 = [c(1.0), c(0.0), c(0.0), c(0.0)];
        assert!(close(&dft_reference(&e0), &[c(0.5); 4], 1e-15));
        let u = [c(0.5); 4];
        assert!(close(&dft_reference(&u), &[c(1.0), c(0.0), c(0.0), c(0.0)], 1e-15));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = [c(s), c(0.0), c(s), c(0.0)];
        assert!(close(&dft_reference(&x), &x, 1e-15));
    }

    #[test]
    fn overlap_examples() {
        let o = expected_overlaps(0.0).unwrap();
        assert_eq!((o.plus, o.minus), (0.25, 0.25));
        let o = expected_overlaps(0.5).unwrap();
        assert!((o.plus - 0.5625).abs() < 1e-15 && (o.minus - 0.0625).abs() < 1e-15);
        let o = expected_overlaps(1.0 - 1e-12).unwrap();
        assert!((o.plus - 1.0).abs() < 1e-9 && o.minus.abs() < 1e-9);
        assert!(expected_overlaps(1.0).is_err());
        assert!(expected_overlaps(f64::NAN).is_err());
    }

    #[test]
    fn fixed_examples() {
        let f = FixedPointFormat::complemental(2);
        let p2 = FixedPointFormat::plain(2);
        let code = |fmt, v: u64| FixedPointCode::from_raw(fmt, v).unwrap();
        let r = fixed_point_oracle(FixedOp::Add { sign: Sign::Plus, l: 0 }, &[code(f, 1), code(p2, 2)], f).unwrap();
        assert_eq!(r.value(), 0.75);
        let r = fixed_point_oracle(FixedOp::Sub, &[code(p2, 1), code(p2, 3)], f).unwrap();
        assert_eq!(r.value(), -0.5);
        // 0.75 * 0.75 = 0.5625, exact in four digits; truncated to two
        // digits the rows give floor(3/4) + floor(3/2) = 1, i.e. 0.25.
        let f4 = FixedPointFormat::complemental(4);
        let r = fixed_point_oracle(
            FixedOp::MulAdd {
                sign: Sign::Plus,
                shift: 0,
            },
            &[code(f4, 0), code(p2, 3), code(p2, 3)],
            f4,
        )
        .unwrap();
        assert_eq!(r.value(), 0.5625);
        let r = fixed_point_oracle(
            FixedOp::MulAdd {
                sign: Sign::Plus,
                shift: 0,
            },
            &[code(f, 0), code(p2, 3), code(p2, 3)],
            f,
        )
        .unwrap();
        assert_eq!(r.value(), 0.25);
        assert!(fixed_point_oracle(FixedOp::Sub, &[code(p2, 1)], f).is_err());
    }

    #[test]
    fn expm_examples() {
        let n = 4;
        let e0 = [c(1.0), c(0.0), c(0.0), c(0.0)];
        let id = expm_circulant(&e0, 0.0).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[i * n + j] - c(want)).norm() < 1e-12);
            }
        }
        let u = expm_circulant(&e0, 0.7).unwrap();
        assert!((u[0] - Complex64::from_polar(1.0, -0.7)).norm() < 1e-12);
        assert!(expm_circulant(&[c(0.0), c(1.0), c(0.0), c(0.0)], 1.0).is_err());
    }

    #[test]
    fn table_csv() {
        let t = ReferenceTable::dft(&[c(1.0), c(0.0)]);
        let csv = t.to_csv();
        assert!(csv.starts_with("k,y_re,y_im,source\n"));
        assert_eq!(csv.lines().count(), 3);
        assert!(ReferenceTable::overlaps(&[0.1, 0.2]).is_ok());
    }

    proptest! {
        #[test]
        fn overlap_difference_identity(y in -0.999_999f64..0.999_999) {
            let o = expected_overlaps(y).unwrap();
            prop_assert!((o.plus - o.minus - y).abs() < 1e-15);
            prop_assert!((0.0..=PI / 2.0).contains(&o.theta));
        }

        #[test]
        fn dft_parseval_and_involution(v in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..5usize)) {
            let n = 1usize << v.len();
            let x: Vec<Complex64> = (0..n).map(|j| { let (a, b) = v[j % v.len()]; Complex64::new(a + j as f64 * 0.1, b) }).collect();
            let y = dft_reference(&x);
            let nx: f64 = x.iter().map(|a| a.norm_sqr()).sum();
            let ny: f64 = y.iter().map(|a| a.norm_sqr()).sum();
            prop_assert!((nx - ny).abs() < 1e-12 * nx.max(1.0));
            let z = dft_reference(&y);
            for j in 0..n {
                prop_assert!((z[(n - j) % n] - x[j]).norm() < 1e-12);
            }
        }
    }
}
