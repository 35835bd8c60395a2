//! Hartigan's dip statistic and a bootstrap test of unimodality.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::rng;

/// Scratch buffers for the dip computation, reused across bootstrap draws.
#[derive(Debug, Default)]
struct DipWorkspace {
    x: Vec<f64>,
    mn: Vec<usize>,
    mj: Vec<usize>,
    gcm: Vec<usize>,
    lcm: Vec<usize>,
}

impl DipWorkspace {
    /// Dip of ascending-sorted data.
    ///
    /// Follows the greatest-convex-minorant / least-concave-majorant cycling
    /// algorithm of Hartigan & Hartigan (1985), with 1-based indexing kept from
    /// the reference formulation to make the index arithmetic checkable.
    fn dip_sorted(&mut self, sorted: &[f64]) -> f64 {
        let n = sorted.len();
        if n < 2 || sorted[0] == sorted[n - 1] {
            return 1.0 / (2.0 * n.max(1) as f64);
        }
        self.x.clear();
        self.x.push(0.0);
        self.x.extend_from_slice(sorted);
        for buf in [&mut self.mn, &mut self.mj, &mut self.gcm, &mut self.lcm] {
            buf.clear();
            buf.resize(n + 1, 0);
        }
        let x = &self.x;
        let (mn, mj, gcm, lcm) = (&mut self.mn, &mut self.mj, &mut self.gcm, &mut self.lcm);
        let fi = |i: usize| i as f64;

        // Change-point pointers of the convex minorant.
        mn[1] = 1;
        for j in 2..=n {
            mn[j] = j - 1;
            loop {
                let a = mn[j];
                let b = mn[a];
                if a == 1 || (x[j] - x[a]) * (fi(a) - fi(b)) < (x[a] - x[b]) * (fi(j) - fi(a)) {
                    break;
                }
                mn[j] = b;
            }
        }
        // ... and of the concave majorant.
        mj[n] = n;
        for k in (1..n).rev() {
            mj[k] = k + 1;
            loop {
                let a = mj[k];
                let b = mj[a];
                if a == n || (x[k] - x[a]) * (fi(a) - fi(b)) < (x[a] - x[b]) * (fi(k) - fi(a)) {
                    break;
                }
                mj[k] = b;
            }
        }

        let mut low = 1;
        let mut high = n;
        let mut dip = 1.0_f64;
        loop {
            gcm[1] = high;
            let mut i = 1;
            while gcm[i] > low {
                gcm[i + 1] = mn[gcm[i]];
                i += 1;
            }
            let l_gcm = i;
            let mut ig = l_gcm;
            let mut ix = ig - 1;

            lcm[1] = low;
            i = 1;
            while lcm[i] < high {
                lcm[i + 1] = mj[lcm[i]];
                i += 1;
            }
            let l_lcm = i;
            let mut ih = l_lcm;
            let mut iv = 2;

            // Largest distance between minorant and majorant on [low, high].
            let mut d = 0.0;
            if l_lcm != 2 || l_gcm != 2 {
                loop {
                    let gx = gcm[ix];
                    let lv = lcm[iv];
                    if gx > lv {
                        let g1 = gcm[ix + 1];
                        let dx = (fi(lv) - fi(g1) + 1.0) - (x[lv] - x[g1]) * (fi(gx) - fi(g1)) / (x[gx] - x[g1]);
                        iv += 1;
                        if dx >= d {
                            d = dx;
                            ig = ix + 1;
                            ih = iv - 1;
                        }
                    } else {
                        let l1 = lcm[iv - 1];
                        let dx = (x[gx] - x[l1]) * (fi(lv) - fi(l1)) / (x[lv] - x[l1]) - (fi(gx) - fi(l1) - 1.0);
                        ix -= 1;
                        if dx >= d {
                            d = dx;
                            ig = ix + 1;
                            ih = iv;
                        }
                    }
                    ix = ix.max(1);
                    iv = iv.min(l_lcm);
                    if gcm[ix] == lcm[iv] {
                        break;
                    }
                }
            } else {
                d = 1.0;
            }
            if d < dip {
                break;
            }

            // Dips of the convex minorant and concave majorant pieces.
            let mut dip_l = 0.0_f64;
            for j in ig..l_gcm {
                let (jb, je) = (gcm[j + 1], gcm[j]);
                let mut max_t = 1.0_f64;
                if je - jb > 1 && x[je] != x[jb] {
                    let c = (fi(je) - fi(jb)) / (x[je] - x[jb]);
                    for jj in jb..=je {
                        max_t = max_t.max((fi(jj) - fi(jb) + 1.0) - (x[jj] - x[jb]) * c);
                    }
                }
                dip_l = dip_l.max(max_t);
            }
            let mut dip_u = 0.0_f64;
            for j in ih..l_lcm {
                let (jb, je) = (lcm[j], lcm[j + 1]);
                let mut max_t = 1.0_f64;
                if je - jb > 1 && x[je] != x[jb] {
                    let c = (fi(je) - fi(jb)) / (x[je] - x[jb]);
                    for jj in jb..=je {
                        max_t = max_t.max((x[jj] - x[jb]) * c - (fi(jj) - fi(jb) - 1.0));
                    }
                }
                dip_u = dip_u.max(max_t);
            }
            dip = dip.max(dip_l.max(dip_u));

            if low == gcm[ig] && high == lcm[ih] {
                break;
            }
            low = gcm[ig];
            high = lcm[ih];
        }
        dip / (2.0 * n as f64)
    }
}

fn sorted_copy(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

fn check_sample(x: &[f64]) -> Result<(), StatsError> {
    if x.len() < 4 {
        return Err(StatsError::TooFewPoints { n: x.len(), min: 4 });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidArgument("non-finite value".into()));
    }
    let first = x[0];
    if x.iter().all(|&v| v == first) {
        return Err(StatsError::DegenerateConstant);
    }
    Ok(())
}

/// Hartigan's dip of the empirical distribution of `x` (any order).
pub fn dip_statistic(x: &[f64]) -> Result<f64, StatsError> {
    check_sample(x)?;
    Ok(DipWorkspace::default().dip_sorted(&sorted_copy(x)))
}

/// Bootstrap null distribution of the dip for uniform samples of size `n`.
#[derive(Debug, Clone)]
pub struct UniformDipNull {
    n: usize,
    /// Ascending.
    dips: Vec<f64>,
}

impl UniformDipNull {
    const CHUNK: usize = 64;

    pub fn new(n: usize, reps: usize, seed: u64) -> Self {
        let chunks = reps.div_ceil(Self::CHUNK);
        let mut dips: Vec<f64> = rng::map_indexed(chunks, |c| {
            let mut ws = DipWorkspace::default();
            let mut sample = vec![0.0; n];
            let lo = c * Self::CHUNK;
            (lo..reps.min(lo + Self::CHUNK))
                .map(|rep| {
                    let mut r = rng::substream(seed, rep as u64);
                    sample.iter_mut().for_each(|v| *v = r.random::<f64>());
                    sample.sort_unstable_by(f64::total_cmp);
                    ws.dip_sorted(&sample)
                })
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect();
        dips.sort_unstable_by(f64::total_cmp);
        UniformDipNull { n, dips }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reps(&self) -> usize {
        self.dips.len()
    }

    /// Share of null draws with a dip at least `dip`.
    pub fn p_value(&self, dip: f64) -> f64 {
        let below = self.dips.partition_point(|&d| d < dip);
        (self.dips.len() - below) as f64 / self.dips.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DipVerdict {
    Unimodal,
    Multimodal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipResult {
    pub feature: String,
    pub dip: f64,
    pub p_value: f64,
    pub n: usize,
    pub bootstrap_reps: usize,
    /// Multimodal when p < 0.05.
    pub verdict: DipVerdict,
}

impl DipResult {
    pub fn with_feature(mut self, feature: impl Into<String>) -> Self {
        self.feature = feature.into();
        self
    }
}

pub const DIP_ALPHA: f64 = 0.05;

/// Dip test with a seeded bootstrap p-value against uniform samples of the
/// same size.
pub fn dip_test(x: &[f64], bootstrap_reps: usize, seed: u64) -> Result<DipResult, StatsError> {
    check_sample(x)?;
    if bootstrap_reps < 100 {
        return Err(StatsError::InvalidArgument(format!("bootstrap_reps must be >= 100, got {bootstrap_reps}")));
    }
    let null = UniformDipNull::new(x.len(), bootstrap_reps, seed);
    dip_test_against(x, &null)
}

/// Dip test against a precomputed null of matching size.
pub fn dip_test_against(x: &[f64], null: &UniformDipNull) -> Result<DipResult, StatsError> {
    check_sample(x)?;
    if null.n() != x.len() {
        return Err(StatsError::InvalidArgument(format!("null built for n={}, sample has {}", null.n(), x.len())));
    }
    let dip = DipWorkspace::default().dip_sorted(&sorted_copy(x));
    let p_value = null.p_value(dip);
    Ok(DipResult {
        feature: String::new(),
        dip,
        p_value,
        n: x.len(),
        bootstrap_reps: null.reps(),
        verdict: if p_value < DIP_ALPHA { DipVerdict::Multimodal } else { DipVerdict::Unimodal },
    })
}

/// Sturges' bin count, ceil(log2(n) + 1).
pub fn sturges_bins(n: usize) -> usize {
    if n <= 1 {
        1
    } else {
        ((n as f64).log2() + 1.0).ceil() as usize
    }
}

/// Equal-width histogram for external plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Histogram of `x` with `bins` equal-width bins (Sturges when `None`).
/// The last bin is closed on the right.
pub fn histogram(x: &[f64], bins: Option<usize>) -> Histogram {
    let finite: Vec<f64> = x.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Histogram { edges: vec![], counts: vec![] };
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Histogram { edges: vec![lo, hi], counts: vec![finite.len()] };
    }
    let k = bins.unwrap_or_else(|| sturges_bins(finite.len())).max(1);
    let width = (hi - lo) / k as f64;
    let mut edges: Vec<f64> = (0..k).map(|i| lo + width * i as f64).collect();
    edges.push(hi);
    let mut counts = vec![0; k];
    for v in finite {
        let b = (((v - lo) / width) as usize).min(k - 1);
        counts[b] += 1;
    }
    Histogram { edges, counts }
}
