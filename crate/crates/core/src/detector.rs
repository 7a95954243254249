//! Iterative MIMO detection: MMSE filtering at the first iteration, parallel
//! interference cancellation (PIC) followed by inverse filtering afterwards,
//! with per-real-symbol SINR estimates at every stage.
//!
//! All filters use the conformable form `A = (G_eq G_eq^T + sigma2 I)^-1`,
//! where `sigma2 = N0 / 2` is the per-component noise variance.

use std::fmt;
use std::str::FromStr;

use nalgebra::Cholesky;

use crate::channel::{EquivalentChannel, NoiseModel};
use crate::linkchain::{LinkChain, SoftMapper};
use crate::{Error, RMatrix, RVector, Result};

/// Upper bound on any reported SINR (60 dB).
pub const SINR_MAX: f64 = 1e6;
/// SINR assigned to dimensions that carry no signal.
pub const SINR_FLOOR: f64 = 1e-6;

const ZERO_NORM: f64 = 1e-24;

/// SINR per subcarrier `n` and real-symbol index `p` for one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrGrid {
    pub n_subcarriers: usize,
    /// `2Q` real dimensions per subcarrier.
    pub dims: usize,
    /// Row-major `values[n * dims + p]`.
    pub values: Vec<f64>,
    pub iteration: usize,
}

impl SinrGrid {
    pub fn new(n_subcarriers: usize, dims: usize, values: Vec<f64>, iteration: usize) -> Result<Self> {
        if values.len() != n_subcarriers * dims {
            return Err(Error::Dimension {
                expected: n_subcarriers * dims,
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::NumericDomain(format!(
                "SINR grid entry {v} is not finite and positive"
            )));
        }
        Ok(Self {
            n_subcarriers,
            dims,
            values,
            iteration,
        })
    }

    pub fn get(&self, n: usize, p: usize) -> f64 {
        self.values[n * self.dims + p]
    }

    /// Per complex symbol `(n, q)`: mean of the linear SINRs of `p = 2q`
    /// and `p = 2q + 1`.
    pub fn per_symbol(&self) -> Vec<f64> {
        self.values.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// First-iteration decomposition of the MMSE output for one real symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceDecomposition {
    /// `g_p^T A g_p`: gain on the wanted symbol.
    pub i0: f64,
    pub i1_power: f64,
    pub i2_power: f64,
}

impl InterferenceDecomposition {
    /// `E|I0|^2 / (E|I1|^2 + E|I2|^2)` with unit-energy complex symbols.
    pub fn sinr(&self) -> f64 {
        let s = 0.5 * self.i0 * self.i0 / (self.i1_power + self.i2_power);
        if s.is_finite() {
            s.clamp(SINR_FLOOR, SINR_MAX)
        } else if self.i0 > 0.0 {
            SINR_MAX
        } else {
            SINR_FLOOR
        }
    }
}

/// Per-subcarrier precomputation shared by all codeword slots on it.
#[derive(Debug, Clone)]
pub struct SubcarrierFilter {
    pub g_eq: RMatrix,
    /// MMSE filter rows `g_p^T A`, shape `2Q x rows`.
    pub w: RMatrix,
    pub decomp: Vec<InterferenceDecomposition>,
    /// `g_p^T g_p` for the inverse filter.
    pub col_norm2: Vec<f64>,
}

impl SubcarrierFilter {
    pub fn new(ch: &EquivalentChannel, sigma2: f64) -> Result<Self> {
        check_sigma2(sigma2)?;
        let g = &ch.g_eq;
        let dims = g.ncols();
        let small = g.transpose() * g + RMatrix::identity(dims, dims) * sigma2;
        let chol = Cholesky::new(small)
            .ok_or_else(|| Error::NumericDomain("regularised Gram matrix is not positive definite".into()))?;
        // A G = G (G^T G + sigma2 I)^-1: same columns A g_p, better conditioned
        // when G has more rows than columns
        let ag = g * chol.inverse();
        let cross = g.transpose() * &ag;
        let decomp = (0..dims)
            .map(|p| {
                let i0 = cross[(p, p)];
                let i1: f64 = (0..dims)
                    .filter(|&q| q != p)
                    .map(|q| cross[(p, q)] * cross[(p, q)])
                    .sum();
                InterferenceDecomposition {
                    i0,
                    i1_power: 0.5 * i1,
                    i2_power: sigma2 * ag.column(p).norm_squared(),
                }
            })
            .collect();
        let col_norm2 = g.column_iter().map(|c| c.norm_squared()).collect();
        Ok(Self {
            g_eq: g.clone(),
            w: ag.transpose(),
            decomp,
            col_norm2,
        })
    }

    pub fn dims(&self) -> usize {
        self.g_eq.ncols()
    }

    /// Biased MMSE estimate `g_p^T A y` for every `p`.
    pub fn mmse(&self, y: &RVector) -> Result<RVector> {
        check_len(y.len(), self.g_eq.nrows())?;
        Ok(&self.w * y)
    }

    /// PIC plus inverse filtering. Muted columns return zero and are
    /// reported in the second element.
    pub fn pic(&self, y: &RVector, feedback: &[f64]) -> Result<(RVector, Vec<bool>)> {
        check_len(y.len(), self.g_eq.nrows())?;
        check_len(feedback.len(), self.dims())?;
        let s_tilde = RVector::from_column_slice(feedback);
        let residual = y - &self.g_eq * &s_tilde;
        let mut out = RVector::zeros(self.dims());
        let mut muted = vec![false; self.dims()];
        for p in 0..self.dims() {
            let n2 = self.col_norm2[p];
            if n2 <= ZERO_NORM {
                muted[p] = true;
                continue;
            }
            // y - sum_{q != p} g_q s~_q = residual + g_p s~_p
            out[p] = s_tilde[p] + self.g_eq.column(p).dot(&residual) / n2;
        }
        Ok((out, muted))
    }
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericDomain(format!(
            "noise variance must be positive, got {sigma2}"
        )))
    }
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

/// `s_hat_p = g_p^T (G_eq G_eq^T + sigma2 I)^-1 y`.
pub fn mmse_detect(y: &RVector, ch: &EquivalentChannel, sigma2: f64) -> Result<RVector> {
    SubcarrierFilter::new(ch, sigma2)?.mmse(y)
}

/// `s_hat_p = (g_p^T g_p)^-1 g_p^T (y - sum_{q != p} g_q s~_q)`.
pub fn pic_detect(y: &RVector, ch: &EquivalentChannel, feedback: &[f64]) -> Result<(RVector, Vec<bool>)> {
    check_len(y.len(), ch.n_outputs())?;
    check_len(feedback.len(), ch.n_inputs())?;
    let g = &ch.g_eq;
    let s_tilde = RVector::from_column_slice(feedback);
    let residual = y - g * &s_tilde;
    let mut out = RVector::zeros(g.ncols());
    let mut muted = vec![false; g.ncols()];
    for p in 0..g.ncols() {
        let n2 = g.column(p).norm_squared();
        if n2 <= ZERO_NORM {
            muted[p] = true;
        } else {
            out[p] = s_tilde[p] + g.column(p).dot(&residual) / n2;
        }
    }
    Ok((out, muted))
}

/// Exact first-iteration SINR of real symbol `p` and its decomposition.
pub fn sinr_analytic_first(ch: &EquivalentChannel, sigma2: f64, p: usize) -> Result<(f64, InterferenceDecomposition)> {
    let f = SubcarrierFilter::new(ch, sigma2)?;
    let d = *f.decomp.get(p).ok_or(Error::Dimension {
        expected: f.dims(),
        got: p,
    })?;
    Ok((d.sinr(), d))
}

/// `1 / (2 mean (s_hat - s~)^2)` over paired samples, capped at [`SINR_MAX`].
pub fn sinr_feedback(s_hat: &[f64], s_tilde_prev: &[f64]) -> Result<f64> {
    if s_hat.len() != s_tilde_prev.len() {
        return Err(Error::Dimension {
            expected: s_tilde_prev.len(),
            got: s_hat.len(),
        });
    }
    if s_hat.is_empty() {
        return Err(Error::config("SINR estimation window is empty"));
    }
    let mse = s_hat
        .iter()
        .zip(s_tilde_prev)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / s_hat.len() as f64;
    Ok(capped_reciprocal(mse))
}

fn capped_reciprocal(mse: f64) -> f64 {
    let s = 1.0 / (2.0 * mse);
    if s.is_nan() {
        SINR_FLOOR
    } else {
        s.clamp(SINR_FLOOR, SINR_MAX)
    }
}

/// Which decoder output drives the soft mapper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeedbackLlr {
    #[default]
    Posterior,
    Extrinsic,
}

impl fmt::Display for FeedbackLlr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedbackLlr::Posterior => "posterior",
            FeedbackLlr::Extrinsic => "extrinsic",
        })
    }
}

impl FromStr for FeedbackLlr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "posterior" => Ok(FeedbackLlr::Posterior),
            "extrinsic" => Ok(FeedbackLlr::Extrinsic),
            other => Err(Error::config(format!("unknown feedback LLR type `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverConfig {
    pub l_max: usize,
    pub soft_mapper: SoftMapper,
    pub feedback: FeedbackLlr,
    /// Feed decoder extrinsics to the demapper as priors at `l >= 2`.
    pub demapper_priors: bool,
    /// Neighbouring subcarriers on each side pooled into the feedback SINR
    /// window.
    pub sinr_window: usize,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            l_max: 4,
            soft_mapper: SoftMapper::Expectation,
            feedback: FeedbackLlr::Posterior,
            demapper_priors: false,
            sinr_window: 0,
        }
    }
}

/// Iteration state carried between detector passes.
#[derive(Debug, Clone)]
pub struct DetectorState {
    pub iteration: usize,
    pub max_iterations: usize,
    /// Soft symbols per slot from the previous iteration, absent at `l = 1`.
    pub soft_feedback: Option<Vec<Vec<f64>>>,
}

/// Per-`(n, p)` interference breakdown of one iteration. At `l = 1` these are
/// the exact MMSE terms. At `l >= 2`, `i2_power` is the inverse-filtered
/// noise `sigma2 / g_p^T g_p` and `i1_power` the measured excess over it.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationDiagnostics {
    pub iteration: usize,
    pub i1_power: Vec<f64>,
    pub i2_power: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ReceiverOutput {
    /// Decoded information bits after each iteration.
    pub hard_bits: Vec<Vec<u8>>,
    pub grids: Vec<SinrGrid>,
    pub diagnostics: Vec<IterationDiagnostics>,
}

impl ReceiverOutput {
    pub fn final_bits(&self) -> &[u8] {
        self.hard_bits.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn final_grid(&self) -> &SinrGrid {
        self.grids.last().expect("receiver runs at least one iteration")
    }
}

/// MMSE/PIC receiver bound to one channel realization. Slot `j` of a packet
/// sits on subcarrier `j % N`.
#[derive(Debug, Clone)]
pub struct IterativeReceiver {
    filters: Vec<SubcarrierFilter>,
    sigma2: f64,
    cfg: ReceiverConfig,
}

impl IterativeReceiver {
    pub fn new(channels: &[EquivalentChannel], noise: &NoiseModel, cfg: ReceiverConfig) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::config("receiver needs at least one subcarrier"));
        }
        if cfg.l_max == 0 {
            return Err(Error::config("l_max must be at least 1"));
        }
        let sigma2 = noise.sigma2_real();
        let filters = channels
            .iter()
            .map(|ch| SubcarrierFilter::new(ch, sigma2))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { filters, sigma2, cfg })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.filters.len()
    }

    pub fn filters(&self) -> &[SubcarrierFilter] {
        &self.filters
    }

    /// First-iteration analytic SINR grid. It depends only on the channel.
    pub fn analytic_grid(&self) -> SinrGrid {
        let dims = self.filters[0].dims();
        let values = self
            .filters
            .iter()
            .flat_map(|f| f.decomp.iter().map(InterferenceDecomposition::sinr))
            .collect();
        SinrGrid {
            n_subcarriers: self.filters.len(),
            dims,
            values,
            iteration: 1,
        }
    }

    pub fn run(&self, y: &[RVector], chain: &LinkChain) -> Result<ReceiverOutput> {
        let n_sc = self.filters.len();
        let dims = self.filters[0].dims();
        if dims != 2 * chain.q_symbols {
            return Err(Error::Dimension {
                expected: 2 * chain.q_symbols,
                got: dims,
            });
        }
        check_len(y.len(), chain.n_slots)?;
        if !chain.n_slots.is_multiple_of(n_sc) {
            return Err(Error::framing(format!(
                "{} slots do not tile {n_sc} subcarriers",
                chain.n_slots
            )));
        }
        let c = &chain.constellation;
        let half = c.bits_per_axis();
        let bits_per_slot = chain.q_symbols * c.bits_per_symbol();

        let mut out = ReceiverOutput {
            hard_bits: Vec::with_capacity(self.cfg.l_max),
            grids: Vec::with_capacity(self.cfg.l_max),
            diagnostics: Vec::with_capacity(self.cfg.l_max),
        };
        let mut frame_llrs = vec![0.0; chain.layout.capacity];
        let mut state = DetectorState {
            iteration: 1,
            max_iterations: self.cfg.l_max,
            soft_feedback: None,
        };
        let mut priors: Option<Vec<f64>> = None;

        while state.iteration <= state.max_iterations {
            let mut estimates: Vec<RVector> = Vec::with_capacity(y.len());
            let mut muted = vec![false; n_sc * dims];
            let (grid, diag) = match &state.soft_feedback {
                None => {
                    let grid = self.analytic_grid();
                    for (j, yj) in y.iter().enumerate() {
                        let f = &self.filters[j % n_sc];
                        let mut s = f.mmse(yj)?;
                        for (v, d) in s.iter_mut().zip(&f.decomp) {
                            *v = if d.i0 > ZERO_NORM { *v / d.i0 } else { 0.0 };
                        }
                        estimates.push(s);
                    }
                    let diag = IterationDiagnostics {
                        iteration: 1,
                        i1_power: self
                            .filters
                            .iter()
                            .flat_map(|f| f.decomp.iter().map(|d| d.i1_power))
                            .collect(),
                        i2_power: self
                            .filters
                            .iter()
                            .flat_map(|f| f.decomp.iter().map(|d| d.i2_power))
                            .collect(),
                    };
                    (grid, diag)
                }
                Some(fb) => {
                    for (j, yj) in y.iter().enumerate() {
                        let n = j % n_sc;
                        let (s, m) = self.filters[n].pic(yj, &fb[j])?;
                        for (p, &flag) in m.iter().enumerate() {
                            muted[n * dims + p] |= flag;
                        }
                        estimates.push(s);
                    }
                    self.feedback_grid(&estimates, fb, &muted, state.iteration)?
                }
            };

            for (j, s) in estimates.iter().enumerate() {
                let n = j % n_sc;
                let base = j * bits_per_slot;
                for p in 0..dims {
                    let lo = base + p * half;
                    let sl = &mut frame_llrs[lo..lo + half];
                    let pr = priors.as_ref().map(|v| &v[lo..lo + half]);
                    c.llrs_into(s[p], grid.get(n, p), pr, sl)?;
                }
            }

            let dec = chain.decode(&frame_llrs)?;
            out.hard_bits.push(dec.siso.hard_bits.clone());
            out.grids.push(grid);
            out.diagnostics.push(diag);

            if state.iteration < state.max_iterations {
                let fb_llrs = match self.cfg.feedback {
                    FeedbackLlr::Posterior => &dec.frame_posterior,
                    FeedbackLlr::Extrinsic => &dec.frame_extrinsic,
                };
                state.soft_feedback = Some(chain.soft_symbols(fb_llrs, self.cfg.soft_mapper)?);
                if self.cfg.demapper_priors {
                    priors = Some(dec.frame_extrinsic);
                }
            }
            state.iteration += 1;
        }
        Ok(out)
    }

    /// Feedback SINR per `(n, p)` pooled over all slots on subcarriers
    /// `n - w ..= n + w`.
    fn feedback_grid(
        &self,
        estimates: &[RVector],
        feedback: &[Vec<f64>],
        muted: &[bool],
        iteration: usize,
    ) -> Result<(SinrGrid, IterationDiagnostics)> {
        let n_sc = self.filters.len();
        let dims = self.filters[0].dims();
        let mut sq = vec![0.0; n_sc * dims];
        let mut count = vec![0usize; n_sc];
        for (j, (s, fb)) in estimates.iter().zip(feedback).enumerate() {
            let n = j % n_sc;
            count[n] += 1;
            for p in 0..dims {
                let e = s[p] - fb[p];
                sq[n * dims + p] += e * e;
            }
        }
        let w = self.cfg.sinr_window;
        let mut values = vec![0.0; n_sc * dims];
        let mut i1 = vec![0.0; n_sc * dims];
        let mut i2 = vec![0.0; n_sc * dims];
        for n in 0..n_sc {
            let lo = n.saturating_sub(w);
            let hi = (n + w).min(n_sc - 1);
            let samples: usize = count[lo..=hi].iter().sum();
            if samples == 0 {
                return Err(Error::config("SINR estimation window is empty"));
            }
            for p in 0..dims {
                let k = n * dims + p;
                let total: f64 = (lo..=hi).map(|m| sq[m * dims + p]).sum();
                let mse = total / samples as f64;
                let noise = self.sigma2 / self.filters[n].col_norm2[p].max(ZERO_NORM);
                if muted[k] {
                    values[k] = SINR_FLOOR;
                } else {
                    values[k] = capped_reciprocal(mse);
                }
                i2[k] = noise;
                i1[k] = (mse - noise).max(0.0);
            }
        }
        Ok((
            SinrGrid {
                n_subcarriers: n_sc,
                dims,
                values,
                iteration,
            },
            IterationDiagnostics {
                iteration,
                i1_power: i1,
                i2_power: i2,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{assemble_equivalent, build_b, build_g, PowerProfile};
    use crate::stcode::{build_f, dispersion_set, StScheme};
    use crate::CMatrix;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_channel(rng: &mut ChaCha8Rng, scheme: StScheme) -> EquivalentChannel {
        let ds = dispersion_set(scheme);
        let h = CMatrix::from_fn(2, 2, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        let t = ds.t_slots();
        assemble_equivalent(build_g(&h, t), build_b(&PowerProfile::equal(2), t), &build_f(&ds), 0).unwrap()
    }

    fn scalar_channel(g: f64) -> EquivalentChannel {
        EquivalentChannel {
            g_eq: RMatrix::from_element(1, 1, g),
            g: RMatrix::from_element(1, 1, g),
            b_diag: RVector::from_element(1, 1.0),
            subcarrier: 0,
        }
    }

    fn random_symbols(rng: &mut ChaCha8Rng, dims: usize) -> RVector {
        // unit-energy complex QPSK: +-1/sqrt(2) per real component
        RVector::from_fn(dims, |_, _| {
            if rng.random::<bool>() {
                std::f64::consts::FRAC_1_SQRT_2
            } else {
                -std::f64::consts::FRAC_1_SQRT_2
            }
        })
    }

    #[test]
    fn scalar_mmse_and_sinr() {
        let (g, n0) = (1.7, 0.3);
        let sigma2 = n0 / 2.0;
        let ch = scalar_channel(g);
        let s = RVector::from_element(1, 0.4);
        let y = &ch.g_eq * &s;
        let est = mmse_detect(&y, &ch, sigma2).unwrap();
        let expect = g * g / (g * g + sigma2) * 0.4;
        assert!((est[0] - expect).abs() < 1e-14);
        let (sinr, d) = sinr_analytic_first(&ch, sigma2, 0).unwrap();
        assert!((sinr - g * g / n0).abs() < 1e-12 * sinr);
        assert_eq!(d.i1_power, 0.0);
    }

    #[test]
    fn filter_matches_direct_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for scheme in [StScheme::Alamouti, StScheme::Golden] {
            let ch = random_channel(&mut rng, scheme);
            let sigma2 = 0.07;
            let g = &ch.g_eq;
            let rows = g.nrows();
            let a = (g * g.transpose() + RMatrix::identity(rows, rows) * sigma2)
                .try_inverse()
                .unwrap();
            let f = SubcarrierFilter::new(&ch, sigma2).unwrap();
            for p in 0..g.ncols() {
                let agp = &a * g.column(p);
                let d = f.decomp[p];
                assert!((d.i0 - g.column(p).dot(&agp)).abs() < 1e-12);
                assert!((d.i2_power - sigma2 * agp.norm_squared()).abs() < 1e-12);
                let i1: f64 = (0..g.ncols())
                    .filter(|&q| q != p)
                    .map(|q| 0.5 * agp.dot(&g.column(q)).powi(2))
                    .sum();
                assert!((d.i1_power - i1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mmse_zero_forcing_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for scheme in [StScheme::Alamouti, StScheme::Golden] {
            let ch = random_channel(&mut rng, scheme);
            let s = random_symbols(&mut rng, ch.n_inputs());
            let y = &ch.g_eq * &s;
            let est = mmse_detect(&y, &ch, 1e-12).unwrap();
            assert!((est - &s).amax() < 1e-6, "{scheme}");
        }
    }

    #[test]
    fn mmse_rejects_nonpositive_noise() {
        let ch = scalar_channel(1.0);
        let y = RVector::from_element(1, 1.0);
        assert!(matches!(mmse_detect(&y, &ch, 0.0), Err(Error::NumericDomain(_))));
    }

    #[test]
    fn alamouti_is_interference_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let ch = random_channel(&mut rng, StScheme::Alamouti);
            let f = SubcarrierFilter::new(&ch, 0.05).unwrap();
            for d in &f.decomp {
                assert!(d.i1_power <= 1e-20, "{}", d.i1_power);
            }
            let i0 = f.decomp[0].i0;
            assert!(f.decomp.iter().all(|d| (d.i0 - i0).abs() < 1e-12));
        }
        // noiseless estimate is a common scaling of every symbol
        let ch = random_channel(&mut rng, StScheme::Alamouti);
        let s = random_symbols(&mut rng, 4);
        let est = mmse_detect(&(&ch.g_eq * &s), &ch, 0.1).unwrap();
        let c = est[0] / s[0];
        for p in 1..4 {
            assert!((est[p] - c * s[p]).abs() < 1e-12);
        }
    }

    #[test]
    fn alamouti_sinr_is_channel_energy_over_noise() {
        // ||H||_F^2 / (2 N0) per real dimension, independent of p
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n0 = 0.2;
        for _ in 0..20 {
            let ch = random_channel(&mut rng, StScheme::Alamouti);
            let energy = ch.g.norm_squared() / 4.0;
            let f = SubcarrierFilter::new(&ch, n0 / 2.0).unwrap();
            for d in &f.decomp {
                let expect = energy / (2.0 * n0);
                assert!((d.sinr() - expect).abs() < 1e-9 * expect);
            }
        }
    }

    /// Monte Carlo SINR of the MMSE output: regress the estimate on the
    /// transmitted symbol, then compare signal and residual energies.
    fn empirical_sinr(rng: &mut ChaCha8Rng, ch: &EquivalentChannel, sigma2: f64, draws: usize) -> Vec<f64> {
        let dims = ch.n_inputs();
        let f = SubcarrierFilter::new(ch, sigma2).unwrap();
        let sd = sigma2.sqrt();
        let mut sxy = vec![0.0; dims];
        let mut sxx = vec![0.0; dims];
        let mut syy = vec![0.0; dims];
        for _ in 0..draws {
            let s = random_symbols(rng, dims);
            let mut y = &ch.g_eq * &s;
            for v in y.iter_mut() {
                let w: f64 = rng.sample(StandardNormal);
                *v += sd * w;
            }
            let est = f.mmse(&y).unwrap();
            for p in 0..dims {
                sxy[p] += est[p] * s[p];
                sxx[p] += s[p] * s[p];
                syy[p] += est[p] * est[p];
            }
        }
        (0..dims)
            .map(|p| {
                let beta = sxy[p] / sxx[p];
                let signal = beta * beta * sxx[p];
                let resid = syy[p] - signal;
                signal / resid
            })
            .collect()
    }

    #[test]
    fn analytic_sinr_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x51);
        for scheme in [StScheme::Alamouti, StScheme::Golden] {
            for &n0 in &[0.5, 0.1] {
                let ch = random_channel(&mut rng, scheme);
                let f = SubcarrierFilter::new(&ch, n0 / 2.0).unwrap();
                let mc = empirical_sinr(&mut rng, &ch, n0 / 2.0, 100_000);
                for (d, m) in f.decomp.iter().zip(&mc) {
                    let rel = (d.sinr() - m).abs() / m;
                    assert!(rel < 0.03, "{scheme} n0={n0}: analytic {} vs MC {m}", d.sinr());
                }
            }
        }
    }

    #[test]
    fn pic_fixed_point_and_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for scheme in [StScheme::Alamouti, StScheme::Golden] {
            let ch = random_channel(&mut rng, scheme);
            let s = random_symbols(&mut rng, ch.n_inputs());
            let y = &ch.g_eq * &s;
            let (est, muted) = pic_detect(&y, &ch, s.as_slice()).unwrap();
            assert!(muted.iter().all(|m| !m));
            assert!((est - &s).amax() < 1e-12);

            // perfect feedback plus noise: interference-free matched filter
            let w = RVector::from_fn(ch.n_outputs(), |_, _| rng.sample::<f64, _>(StandardNormal) * 0.1);
            let (est, _) = pic_detect(&(&y + &w), &ch, s.as_slice()).unwrap();
            for p in 0..s.len() {
                let g = ch.g_eq.column(p);
                let expect = s[p] + g.dot(&w) / g.norm_squared();
                assert!((est[p] - expect).abs() < 1e-12);
            }

            // zero feedback: plain matched filter
            let zeros = vec![0.0; s.len()];
            let (est, _) = pic_detect(&y, &ch, &zeros).unwrap();
            for p in 0..s.len() {
                let g = ch.g_eq.column(p);
                assert!((est[p] - g.dot(&y) / g.norm_squared()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pic_flags_muted_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let ds = dispersion_set(StScheme::Alamouti);
        let h = CMatrix::from_fn(2, 2, |_, _| Complex64::new(rng.random(), rng.random()));
        let profile = PowerProfile::new(vec![0.0, f64::NEG_INFINITY]).unwrap();
        let mut ch = assemble_equivalent(build_g(&h, 2), build_b(&profile, 2), &build_f(&ds), 0).unwrap();
        // zero out one column entirely
        ch.g_eq.column_mut(1).fill(0.0);
        let y = RVector::from_element(ch.n_outputs(), 0.3);
        let (est, muted) = pic_detect(&y, &ch, &[0.0; 4]).unwrap();
        assert!(muted[1] && !muted[0]);
        assert_eq!(est[1], 0.0);
        let f = SubcarrierFilter::new(&ch, 0.1).unwrap();
        assert_eq!(f.decomp[1].sinr(), SINR_FLOOR);
    }

    #[test]
    fn feedback_sinr_formula_and_cap() {
        let s_tilde = vec![0.0; 4];
        let s_hat = vec![0.005_f64.sqrt(); 4];
        assert!((sinr_feedback(&s_hat, &s_tilde).unwrap() - 100.0).abs() < 1e-9);
        assert_eq!(sinr_feedback(&s_tilde, &s_tilde).unwrap(), SINR_MAX);
        assert!(matches!(sinr_feedback(&[], &[]), Err(Error::Config(_))));
        assert!(sinr_feedback(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn feedback_sinr_is_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for gamma in [0.5f64, 10.0, 300.0] {
            let sd = (0.5 / gamma).sqrt();
            let s: Vec<f64> = (0..10_000).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s_hat: Vec<f64> = s
                .iter()
                .map(|v| v + sd * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let est = sinr_feedback(&s_hat, &s).unwrap();
            assert!((est - gamma).abs() / gamma < 0.05, "gamma {gamma}: {est}");
        }
    }

    #[test]
    fn grid_validation() {
        assert!(SinrGrid::new(2, 2, vec![1.0; 3], 1).is_err());
        assert!(SinrGrid::new(1, 2, vec![1.0, 0.0], 1).is_err());
        let g = SinrGrid::new(1, 4, vec![1.0, 3.0, 5.0, 5.0], 2).unwrap();
        assert_eq!(g.per_symbol(), vec![2.0, 5.0]);
    }

    #[test]
    fn feedback_llr_parse() {
        assert_eq!("Extrinsic".parse::<FeedbackLlr>().unwrap(), FeedbackLlr::Extrinsic);
        assert!("both".parse::<FeedbackLlr>().is_err());
    }
}
