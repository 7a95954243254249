//! Exact log-MAP (BCJR) decoding on the 64-state terminated trellis.

use crate::{Error, Result};

use super::clamp_llr;
use super::conv::{step_output, MEMORY, N_STATES};

/// Decoder output for one frame. Coded-bit vectors are at the mother rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SisoOutput {
    /// `posterior - intrinsic` on every coded bit.
    pub extrinsic: Vec<f64>,
    /// A posteriori LLRs of every coded bit.
    pub posterior: Vec<f64>,
    /// A posteriori LLRs of the information bits (tail excluded).
    pub info_posterior: Vec<f64>,
    /// Hard decisions on the information bits.
    pub hard_bits: Vec<u8>,
}

#[derive(Clone, Copy)]
struct Branch {
    from: usize,
    to: usize,
    input: u8,
    c1: u8,
    c2: u8,
}

fn branches() -> Vec<Branch> {
    let mut v = Vec::with_capacity(2 * N_STATES);
    for from in 0..N_STATES {
        for input in 0..2u8 {
            let reg = (u32::from(input) << MEMORY) | from as u32;
            let (c1, c2) = step_output(reg);
            v.push(Branch {
                from,
                to: (reg >> 1) as usize,
                input,
                c1,
                c2,
            });
        }
    }
    v
}

#[inline]
fn max_star(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log-sum-exp accumulator using a running maximum.
#[derive(Clone, Copy)]
struct Lse {
    max: f64,
    sum: f64,
}

impl Lse {
    const EMPTY: Lse = Lse {
        max: f64::NEG_INFINITY,
        sum: 0.0,
    };

    #[inline]
    fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

#[inline]
fn half_metric(llr: f64, bit: u8) -> f64 {
    if bit == 0 {
        0.5 * llr
    } else {
        -0.5 * llr
    }
}

fn llr_from(zero: &Lse, one: &Lse) -> f64 {
    clamp_llr(zero.value() - one.value())
}

fn check_frame(llrs: &[f64]) -> Result<(usize, usize)> {
    if !llrs.len().is_multiple_of(2) {
        return Err(Error::framing(format!(
            "mother-rate frame length {} is not a multiple of 2",
            llrs.len()
        )));
    }
    let steps = llrs.len() / 2;
    if steps <= MEMORY {
        return Err(Error::framing(format!(
            "frame of {steps} steps cannot hold a terminated codeword"
        )));
    }
    Ok((steps, steps - MEMORY))
}

fn finish(llrs: &[f64], posterior: Vec<f64>, info_posterior: Vec<f64>) -> SisoOutput {
    let extrinsic = posterior.iter().zip(llrs).map(|(p, l)| clamp_llr(p - l)).collect();
    let hard_bits = info_posterior.iter().map(|&l| u8::from(l < 0.0)).collect();
    SisoOutput {
        extrinsic,
        posterior,
        info_posterior,
        hard_bits,
    }
}

/// Decodes a depunctured mother-rate frame (LLR > 0 means bit 0 is more
/// likely). The last `K - 1` steps are the zero tail.
///
/// The forward/backward recursions run on per-step normalised probabilities,
/// which is the log-MAP recursion with the normalisation kept outside the
/// exponent; [`siso_decode_log`] is the same decoder written with `max*`.
pub fn siso_decode(llrs: &[f64]) -> Result<SisoOutput> {
    let (steps, info) = check_frame(llrs)?;
    let out = output_table();

    // per-step branch weights exp(+-L1/2 +- L2/2), normalised to max 1
    let gammas: Vec<[f64; 4]> = llrs
        .chunks_exact(2)
        .map(|p| {
            let mut g = [0.0; 4];
            for (k, gk) in g.iter_mut().enumerate() {
                *gk = half_metric(p[0], (k >> 1) as u8) + half_metric(p[1], (k & 1) as u8);
            }
            let top = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            g.map(|x| (x - top).exp())
        })
        .collect();

    let mut alpha = vec![[0.0f64; N_STATES]; steps + 1];
    alpha[0][0] = 1.0;
    for t in 0..steps {
        let reachable = if t >= info { N_STATES / 2 } else { N_STATES };
        let g = &gammas[t];
        let (cur, rest) = alpha.split_at_mut(t + 1);
        let cur = &cur[t];
        let next = &mut rest[0];
        let mut total = 0.0;
        for (s, slot) in next.iter_mut().enumerate().take(reachable) {
            let u = s >> (MEMORY - 1);
            let p0 = (s & (N_STATES / 2 - 1)) << 1;
            let p1 = p0 | 1;
            let v = cur[p0] * g[out[p0][u] as usize] + cur[p1] * g[out[p1][u] as usize];
            *slot = v;
            total += v;
        }
        let inv = total.recip();
        for v in next.iter_mut() {
            *v *= inv;
        }
    }

    let mut beta = vec![[0.0f64; N_STATES]; steps + 1];
    beta[steps][0] = 1.0;
    for t in (0..steps).rev() {
        let inputs = if t >= info { 1 } else { 2 };
        let g = &gammas[t];
        let (head, tail) = beta.split_at_mut(t + 1);
        let nb = &tail[0];
        let cur = &mut head[t];
        let mut total = 0.0;
        for (s, slot) in cur.iter_mut().enumerate() {
            let mut v = 0.0;
            for u in 0..inputs {
                let to = (s >> 1) | (u << (MEMORY - 1));
                v += nb[to] * g[out[s][u] as usize];
            }
            *slot = v;
            total += v;
        }
        let inv = total.recip();
        for v in cur.iter_mut() {
            *v *= inv;
        }
    }

    let mut posterior = Vec::with_capacity(2 * steps);
    let mut info_posterior = Vec::with_capacity(info);
    for t in 0..steps {
        let inputs = if t >= info { 1 } else { 2 };
        let g = &gammas[t];
        let (a, nb) = (&alpha[t], &beta[t + 1]);
        let mut su = [0.0f64; 2];
        let mut sc1 = [0.0f64; 2];
        let mut sc2 = [0.0f64; 2];
        for (s, &a_s) in a.iter().enumerate() {
            for u in 0..inputs {
                let to = ((s >> 1) | (u << (MEMORY - 1))) & (N_STATES - 1);
                let o = (out[s][u] & 3) as usize;
                let m = a_s * g[o] * nb[to];
                su[u] += m;
                sc1[o >> 1] += m;
                sc2[o & 1] += m;
            }
        }
        posterior.push(ratio_llr(sc1));
        posterior.push(ratio_llr(sc2));
        if inputs == 2 {
            info_posterior.push(ratio_llr(su));
        }
    }
    Ok(finish(llrs, posterior, info_posterior))
}

#[inline]
fn ratio_llr(s: [f64; 2]) -> f64 {
    clamp_llr((s[0] / s[1]).ln())
}

/// `out[state][input]` = `2 c1 + c2`.
fn output_table() -> [[u8; 2]; N_STATES] {
    let mut t = [[0u8; 2]; N_STATES];
    for (s, row) in t.iter_mut().enumerate() {
        for (u, o) in row.iter_mut().enumerate() {
            let (c1, c2) = step_output(((u as u32) << MEMORY) | s as u32);
            *o = 2 * c1 + c2;
        }
    }
    t
}

/// Log-domain reference decoder using the exact Jacobian logarithm.
pub fn siso_decode_log(llrs: &[f64]) -> Result<SisoOutput> {
    let (steps, info) = check_frame(llrs)?;
    let br = branches();

    // gamma index: 2*c1 + c2
    let gammas: Vec<[f64; 4]> = llrs
        .chunks_exact(2)
        .map(|p| {
            let mut g = [0.0; 4];
            for (k, gk) in g.iter_mut().enumerate() {
                *gk = half_metric(p[0], (k >> 1) as u8) + half_metric(p[1], (k & 1) as u8);
            }
            g
        })
        .collect();

    let mut alpha = vec![[f64::NEG_INFINITY; N_STATES]; steps + 1];
    alpha[0][0] = 0.0;
    for t in 0..steps {
        let tail = t >= info;
        let mut next = [f64::NEG_INFINITY; N_STATES];
        for b in &br {
            if tail && b.input == 1 {
                continue;
            }
            let a = alpha[t][b.from];
            if a == f64::NEG_INFINITY {
                continue;
            }
            let m = a + gammas[t][(2 * b.c1 + b.c2) as usize];
            next[b.to] = max_star(next[b.to], m);
        }
        // normalise to keep metrics bounded
        let top = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for v in next.iter_mut() {
            *v -= top;
        }
        alpha[t + 1] = next;
    }

    let mut beta = vec![[f64::NEG_INFINITY; N_STATES]; steps + 1];
    beta[steps][0] = 0.0;
    for t in (0..steps).rev() {
        let tail = t >= info;
        let mut cur = [f64::NEG_INFINITY; N_STATES];
        for b in &br {
            if tail && b.input == 1 {
                continue;
            }
            let bn = beta[t + 1][b.to];
            if bn == f64::NEG_INFINITY {
                continue;
            }
            let m = bn + gammas[t][(2 * b.c1 + b.c2) as usize];
            cur[b.from] = max_star(cur[b.from], m);
        }
        let top = cur.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for v in cur.iter_mut() {
            *v -= top;
        }
        beta[t] = cur;
    }

    let mut posterior = Vec::with_capacity(2 * steps);
    let mut info_posterior = Vec::with_capacity(info);
    for t in 0..steps {
        let tail = t >= info;
        let mut u = [Lse::EMPTY; 2];
        let mut c1 = [Lse::EMPTY; 2];
        let mut c2 = [Lse::EMPTY; 2];
        for b in &br {
            if tail && b.input == 1 {
                continue;
            }
            let m = alpha[t][b.from] + gammas[t][(2 * b.c1 + b.c2) as usize] + beta[t + 1][b.to];
            if m == f64::NEG_INFINITY {
                continue;
            }
            u[b.input as usize].push(m);
            c1[b.c1 as usize].push(m);
            c2[b.c2 as usize].push(m);
        }
        posterior.push(llr_from(&c1[0], &c1[1]));
        posterior.push(llr_from(&c2[0], &c2[1]));
        if !tail {
            info_posterior.push(llr_from(&u[0], &u[1]));
        }
    }

    Ok(finish(llrs, posterior, info_posterior))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkchain::conv::encode_mother;

    #[test]
    fn strong_zero_evidence() {
        let out = siso_decode(&vec![20.0; 2 * 30]).unwrap();
        assert!(out.hard_bits.iter().all(|&b| b == 0));
        assert_eq!(out.hard_bits.len(), 24);
        assert!(out.extrinsic.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn noiseless_codeword_is_recovered() {
        let bits: Vec<u8> = (0..200).map(|i| ((i * 7 + i / 3) % 5 == 0) as u8).collect();
        let llrs: Vec<f64> = encode_mother(&bits)
            .iter()
            .map(|&c| if c == 0 { 4.0 } else { -4.0 })
            .collect();
        assert_eq!(siso_decode(&llrs).unwrap().hard_bits, bits);
    }

    #[test]
    fn zero_input_gives_zero_extrinsic() {
        let out = siso_decode(&vec![0.0; 2 * 20]).unwrap();
        assert!(out.info_posterior.iter().all(|&l| l.abs() < 1e-12));
        assert!(out.extrinsic.iter().all(|&l| l.abs() < 1e-12));
    }

    #[test]
    fn scaled_and_log_domain_agree() {
        let llrs: Vec<f64> = (0..2 * 300)
            .map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.9 + if i % 7 == 0 { 30.0 } else { 0.0 })
            .collect();
        let a = siso_decode(&llrs).unwrap();
        let b = siso_decode_log(&llrs).unwrap();
        for (x, y) in a.posterior.iter().zip(&b.posterior) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
        for (x, y) in a.info_posterior.iter().zip(&b.info_posterior) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
        assert_eq!(a.hard_bits, b.hard_bits);
    }

    #[test]
    fn framing_errors() {
        assert!(matches!(siso_decode(&[0.0; 7]), Err(Error::Framing(_))));
        assert!(matches!(siso_decode(&[0.0; 12]), Err(Error::Framing(_))));
    }
}
