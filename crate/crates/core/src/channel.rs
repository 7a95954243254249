//! Frequency-domain MIMO channels and the real-valued equivalent channel
//! `G_eq = G B F` seen by the detector on each subcarrier.

use std::f64::consts::PI;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::numfmt::sig9;
use crate::{CMatrix, Error, RMatrix, RVector, Result};

/// COST 207 Typical Urban six-tap profile: delays in microseconds.
pub const TU6_DELAYS_US: [f64; 6] = [0.0, 0.2, 0.5, 1.6, 2.3, 5.0];
/// COST 207 Typical Urban six-tap profile: relative tap powers in dB.
pub const TU6_POWERS_DB: [f64; 6] = [-3.0, 0.0, -2.0, -6.0, -8.0, -10.0];

/// Channel family selectable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    /// Six-tap Rayleigh tapped delay line.
    Tu6,
    /// Single Rayleigh tap: frequency-flat fading.
    Flat,
    /// Deterministic unit-gain coefficients on every antenna pair.
    Awgn,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Tu6 => "tu6",
            ChannelKind::Flat => "flat",
            ChannelKind::Awgn => "awgn",
        }
    }
}

impl FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tu6" | "tu-6" => Ok(ChannelKind::Tu6),
            "flat" => Ok(ChannelKind::Flat),
            "awgn" => Ok(ChannelKind::Awgn),
            other => Err(Error::config(format!(
                "unknown channel model '{other}' (expected tu6, flat or awgn)"
            ))),
        }
    }
}

/// Tapped delay line with powers normalised to unit total power.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    pub delays_s: Vec<f64>,
    pub powers: Vec<f64>,
}

impl PowerDelayProfile {
    pub fn new(delays_s: Vec<f64>, powers_db: &[f64]) -> Result<Self> {
        if delays_s.is_empty() || delays_s.len() != powers_db.len() {
            return Err(Error::config("tap delays and powers must be nonempty and equal length"));
        }
        let lin: Vec<f64> = powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::config("tap powers must have a positive finite sum"));
        }
        Ok(Self {
            delays_s,
            powers: lin.into_iter().map(|p| p / total).collect(),
        })
    }

    pub fn tu6() -> Self {
        Self::new(TU6_DELAYS_US.iter().map(|d| d * 1e-6).collect(), &TU6_POWERS_DB).expect("static profile is valid")
    }

    pub fn single_tap() -> Self {
        Self::new(vec![0.0], &[0.0]).expect("static profile is valid")
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }
}

/// Channel coefficients `h_{j,i}[n]`, one `M_R x M_T` matrix per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyChannel {
    pub coeffs: Vec<CMatrix>,
    pub m_r: usize,
    pub m_t: usize,
}

impl FrequencyChannel {
    pub fn n_subcarriers(&self) -> usize {
        self.coeffs.len()
    }

    pub fn at(&self, n: usize) -> &CMatrix {
        &self.coeffs[n]
    }

    /// Unit coefficient on every antenna pair, all subcarriers.
    pub fn unit(n: usize, m_r: usize, m_t: usize) -> Self {
        Self {
            coeffs: vec![CMatrix::from_element(m_r, m_t, Complex64::new(1.0, 0.0)); n],
            m_r,
            m_t,
        }
    }

    /// Writes the coefficients as CSV rows `j,i,n,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "j,i,n,re,im")?;
        for j in 0..self.m_r {
            for i in 0..self.m_t {
                for (n, h) in self.coeffs.iter().enumerate() {
                    let z = h[(j, i)];
                    writeln!(w, "{j},{i},{n},{},{}", sig9(z.re), sig9(z.im))?;
                }
            }
        }
        Ok(())
    }
}

/// Draws frequency responses of a tapped delay line at subcarrier centres
/// `f_n = n * bandwidth / N`. The per-tap phasors are computed once.
#[derive(Debug, Clone)]
pub struct FadingGenerator {
    profile: PowerDelayProfile,
    /// `phasors[n * taps + k] = exp(-j 2 pi f_n tau_k)`
    phasors: Vec<Complex64>,
    n_subcarriers: usize,
}

impl FadingGenerator {
    pub fn new(profile: PowerDelayProfile, n_subcarriers: usize, bandwidth_hz: f64) -> Result<Self> {
        if n_subcarriers == 0 {
            return Err(Error::config("subcarrier count must be at least 1"));
        }
        if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
            return Err(Error::config("bandwidth must be positive"));
        }
        let spacing = bandwidth_hz / n_subcarriers as f64;
        let mut phasors = Vec::with_capacity(n_subcarriers * profile.delays_s.len());
        for n in 0..n_subcarriers {
            let f = n as f64 * spacing;
            for &tau in &profile.delays_s {
                phasors.push(Complex64::from_polar(1.0, -2.0 * PI * f * tau));
            }
        }
        Ok(Self {
            profile,
            phasors,
            n_subcarriers,
        })
    }

    pub fn profile(&self) -> &PowerDelayProfile {
        &self.profile
    }

    /// One independent realisation per antenna pair.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, m_r: usize, m_t: usize) -> FrequencyChannel {
        let taps = self.profile.powers.len();
        let mut coeffs = vec![CMatrix::zeros(m_r, m_t); self.n_subcarriers];
        let mut gains = vec![Complex64::new(0.0, 0.0); taps];
        for j in 0..m_r {
            for i in 0..m_t {
                for (g, p) in gains.iter_mut().zip(&self.profile.powers) {
                    let sd = (p / 2.0).sqrt();
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *g = Complex64::new(re * sd, im * sd);
                }
                for (n, h) in coeffs.iter_mut().enumerate() {
                    let ph = &self.phasors[n * taps..(n + 1) * taps];
                    h[(j, i)] = gains.iter().zip(ph).map(|(g, e)| g * e).sum();
                }
            }
        }
        FrequencyChannel { coeffs, m_r, m_t }
    }
}

/// Draws one TU-6 realisation over `n` subcarriers.
pub fn tu6_realization<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    bandwidth_hz: f64,
    m_r: usize,
    m_t: usize,
) -> Result<FrequencyChannel> {
    Ok(FadingGenerator::new(PowerDelayProfile::tu6(), n, bandwidth_hz)?.draw(rng, m_r, m_t))
}

/// Per-antenna transmit powers in dB (`-inf` mutes an antenna).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    pub p_db: Vec<f64>,
}

impl PowerProfile {
    pub fn new(p_db: Vec<f64>) -> Result<Self> {
        if p_db.is_empty() || p_db.iter().any(|p| p.is_nan() || *p == f64::INFINITY) {
            return Err(Error::config("power profile must be nonempty with values below +inf"));
        }
        Ok(Self { p_db })
    }

    pub fn equal(m_t: usize) -> Self {
        Self { p_db: vec![0.0; m_t] }
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.p_db.iter().map(|p| 10f64.powf(p / 10.0).sqrt()).collect()
    }
}

/// White Gaussian noise with spectral density `N0`; each real component
/// has variance `N0 / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub n0: f64,
}

impl NoiseModel {
    pub fn new(n0: f64) -> Result<Self> {
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(Error::NumericDomain(format!(
                "noise density must be positive, got {n0}"
            )));
        }
        Ok(Self { n0 })
    }

    /// Unit average received power per antenna, so `N0 = 10^(-snr/10)`.
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        Self::new(10f64.powf(-snr_db / 10.0))
    }

    pub fn sigma2_real(&self) -> f64 {
        self.n0 / 2.0
    }
}

/// Real equivalent channel of one subcarrier with its factors.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentChannel {
    pub g_eq: RMatrix,
    pub g: RMatrix,
    /// Diagonal of `B`.
    pub b_diag: RVector,
    pub subcarrier: usize,
}

impl EquivalentChannel {
    pub fn b(&self) -> RMatrix {
        RMatrix::from_diagonal(&self.b_diag)
    }

    pub fn n_outputs(&self) -> usize {
        self.g_eq.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.g_eq.ncols()
    }
}

/// Real `(2 M_R T) x (2 M_T T)` matrix realising `h` on stacked samples.
pub fn build_g(h: &CMatrix, t_slots: usize) -> RMatrix {
    let (m_r, m_t) = h.shape();
    let block = 2 * t_slots;
    let mut g = RMatrix::zeros(m_r * block, m_t * block);
    for j in 0..m_r {
        for i in 0..m_t {
            let z = h[(j, i)];
            for t in 0..t_slots {
                let r = j * block + 2 * t;
                let c = i * block + 2 * t;
                g[(r, c)] = z.re;
                g[(r, c + 1)] = -z.im;
                g[(r + 1, c)] = z.im;
                g[(r + 1, c + 1)] = z.re;
            }
        }
    }
    g
}

/// Diagonal of `B`: `sqrt(P_p)` repeated over the `2T` entries of antenna `p`.
pub fn build_b(profile: &PowerProfile, t_slots: usize) -> RVector {
    let amps = profile.amplitudes();
    RVector::from_iterator(
        amps.len() * 2 * t_slots,
        amps.iter().flat_map(|&a| std::iter::repeat_n(a, 2 * t_slots)),
    )
}

/// Forms `G_eq = G B F`.
pub fn assemble_equivalent(g: RMatrix, b_diag: RVector, f: &RMatrix, subcarrier: usize) -> Result<EquivalentChannel> {
    if g.ncols() != b_diag.len() {
        return Err(Error::Dimension {
            expected: g.ncols(),
            got: b_diag.len(),
        });
    }
    if f.nrows() != b_diag.len() {
        return Err(Error::Dimension {
            expected: b_diag.len(),
            got: f.nrows(),
        });
    }
    let mut bf = f.clone();
    for (mut row, &b) in bf.row_iter_mut().zip(b_diag.iter()) {
        row *= b;
    }
    let g_eq = &g * bf;
    Ok(EquivalentChannel {
        g_eq,
        g,
        b_diag,
        subcarrier,
    })
}

/// Equivalent channels for every subcarrier of `h`.
pub fn equivalent_channels(
    h: &FrequencyChannel,
    profile: &PowerProfile,
    f: &RMatrix,
    t_slots: usize,
) -> Result<Vec<EquivalentChannel>> {
    if profile.p_db.len() != h.m_t {
        return Err(Error::Dimension {
            expected: h.m_t,
            got: profile.p_db.len(),
        });
    }
    let b = build_b(profile, t_slots);
    h.coeffs
        .iter()
        .enumerate()
        .map(|(n, hn)| assemble_equivalent(build_g(hn, t_slots), b.clone(), f, n))
        .collect()
}

/// `y = G_eq s + w` with i.i.d. `N(0, N0/2)` noise per real component.
pub fn apply_channel<R: Rng + ?Sized>(
    ch: &EquivalentChannel,
    s: &RVector,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<RVector> {
    if s.len() != ch.n_inputs() {
        return Err(Error::Dimension {
            expected: ch.n_inputs(),
            got: s.len(),
        });
    }
    let sd = noise.sigma2_real().sqrt();
    let mut y = &ch.g_eq * s;
    for v in y.iter_mut() {
        let w: f64 = rng.sample(StandardNormal);
        *v += sd * w;
    }
    Ok(y)
}
