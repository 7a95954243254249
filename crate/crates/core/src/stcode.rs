//! Linear space-time block codes described by dispersion matrices.
//!
//! A codeword over `M_T` antennas and `T` slots is
//! `X = sum_q (Re(s_q) U_q + j Im(s_q) V_q)`, and after stacking real and
//! imaginary parts row by row the code becomes a real matrix `F` with
//! `x = F s`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::{CMatrix, Error, RMatrix, RVector, Result};

/// The two supported space-time block codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StScheme {
    Alamouti,
    Golden,
}

impl StScheme {
    pub fn m_t(self) -> usize {
        2
    }

    pub fn t_slots(self) -> usize {
        2
    }

    /// Complex symbols carried by one codeword.
    pub fn q_symbols(self) -> usize {
        match self {
            StScheme::Alamouti => 2,
            StScheme::Golden => 4,
        }
    }

    /// Space-time rate `Q / T` as an exact `(numerator, denominator)` pair.
    pub fn rate_ratio(self) -> (usize, usize) {
        (self.q_symbols(), self.t_slots())
    }

    pub fn rate(self) -> f64 {
        self.q_symbols() as f64 / self.t_slots() as f64
    }

    pub fn is_orthogonal(self) -> bool {
        matches!(self, StScheme::Alamouti)
    }

    pub fn name(self) -> &'static str {
        match self {
            StScheme::Alamouti => "alamouti",
            StScheme::Golden => "golden",
        }
    }
}

impl fmt::Display for StScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alamouti" => Ok(StScheme::Alamouti),
            "golden" => Ok(StScheme::Golden),
            other => Err(Error::config(format!(
                "unsupported space-time scheme '{other}' (expected 'alamouti' or 'golden')"
            ))),
        }
    }
}

/// Dispersion matrices `U_q`, `V_q` of a linear STBC, with the transmit
/// power normalisation already applied.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionSet {
    pub scheme: StScheme,
    pub u: Vec<CMatrix>,
    pub v: Vec<CMatrix>,
    /// Overall factor folded into `u` and `v`; includes `1/sqrt(M_T)`.
    pub scale: f64,
}

impl DispersionSet {
    pub fn m_t(&self) -> usize {
        self.u[0].nrows()
    }

    pub fn t_slots(&self) -> usize {
        self.u[0].ncols()
    }

    pub fn q_symbols(&self) -> usize {
        self.u.len()
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mat2(a: Complex64, b: Complex64, cc: Complex64, d: Complex64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[a, b, cc, d])
}

/// Returns the fixed, normalised dispersion matrices of `scheme`.
pub fn dispersion_set(scheme: StScheme) -> DispersionSet {
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let m_t = scheme.m_t() as f64;
    match scheme {
        StScheme::Alamouti => {
            // X = [[s1, -s2*], [s2, s1*]]
            let scale = 1.0 / m_t.sqrt();
            let u = vec![mat2(one, zero, zero, one), mat2(zero, -one, one, zero)];
            let v = vec![mat2(one, zero, zero, -one), mat2(zero, one, one, zero)];
            scaled(scheme, u, v, scale)
        }
        StScheme::Golden => {
            // X = [[a(a + b th), a(c + d th)], [j a'(c + d th'), a'(a + b th')]] / sqrt(5)
            let theta = (1.0 + 5f64.sqrt()) / 2.0;
            let theta_bar = 1.0 - theta;
            let alpha = c(1.0, 1.0 - theta);
            let alpha_bar = c(1.0, 1.0 - theta_bar);
            let j = c(0.0, 1.0);
            let coeffs = vec![
                mat2(alpha, zero, zero, alpha_bar),
                mat2(alpha * theta, zero, zero, alpha_bar * theta_bar),
                mat2(zero, alpha, j * alpha_bar, zero),
                mat2(zero, alpha * theta, j * alpha_bar * theta_bar, zero),
            ];
            let scale = 1.0 / (5.0f64.sqrt() * m_t.sqrt());
            scaled(scheme, coeffs.clone(), coeffs, scale)
        }
    }
}

fn scaled(scheme: StScheme, u: Vec<CMatrix>, v: Vec<CMatrix>, scale: f64) -> DispersionSet {
    let s = c(scale, 0.0);
    DispersionSet {
        scheme,
        u: u.into_iter().map(|m| m * s).collect(),
        v: v.into_iter().map(|m| m * s).collect(),
        scale,
    }
}

/// Stacks a complex matrix row by row as `[re, im, re, im, ...]`.
pub fn stack_complex(m: &CMatrix) -> RVector {
    let (rows, cols) = m.shape();
    let mut out = RVector::zeros(2 * rows * cols);
    for i in 0..rows {
        for t in 0..cols {
            let z = m[(i, t)];
            out[2 * (i * cols + t)] = z.re;
            out[2 * (i * cols + t) + 1] = z.im;
        }
    }
    out
}

/// Inverse of [`stack_complex`].
pub fn unstack_complex(v: &RVector, rows: usize, cols: usize) -> Result<CMatrix> {
    if v.len() != 2 * rows * cols {
        return Err(Error::Dimension {
            expected: 2 * rows * cols,
            got: v.len(),
        });
    }
    Ok(CMatrix::from_fn(rows, cols, |i, t| {
        let k = 2 * (i * cols + t);
        c(v[k], v[k + 1])
    }))
}

/// Real map `F` (`2 M_T T x 2Q`) such that `stack(X(s)) = F s`.
pub fn build_f(ds: &DispersionSet) -> RMatrix {
    let q = ds.q_symbols();
    let rows = 2 * ds.m_t() * ds.t_slots();
    let j = c(0.0, 1.0);
    let mut f = RMatrix::zeros(rows, 2 * q);
    for k in 0..q {
        f.set_column(2 * k, &stack_complex(&ds.u[k]));
        f.set_column(2 * k + 1, &stack_complex(&(&ds.v[k] * j)));
    }
    f
}

/// Stacked real symbol vector `[Re s1, Im s1, ..., Re sQ, Im sQ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolVector(pub RVector);

impl SymbolVector {
    pub fn zeros(q: usize) -> Self {
        SymbolVector(RVector::zeros(2 * q))
    }

    pub fn from_complex(symbols: &[Complex64]) -> Self {
        SymbolVector(RVector::from_iterator(
            2 * symbols.len(),
            symbols.iter().flat_map(|z| [z.re, z.im]),
        ))
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.0.as_slice().chunks_exact(2).map(|p| c(p[0], p[1])).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Evaluates the codeword `X = sum_q (Re(s_q) U_q + j Im(s_q) V_q)`.
pub fn st_encode(s: &SymbolVector, ds: &DispersionSet) -> Result<CMatrix> {
    let q = ds.q_symbols();
    if s.len() != 2 * q {
        return Err(Error::Dimension {
            expected: 2 * q,
            got: s.len(),
        });
    }
    let j = c(0.0, 1.0);
    let mut x = CMatrix::zeros(ds.m_t(), ds.t_slots());
    for k in 0..q {
        x += &ds.u[k] * c(s.0[2 * k], 0.0);
        x += &ds.v[k] * (j * s.0[2 * k + 1]);
    }
    Ok(x)
}
