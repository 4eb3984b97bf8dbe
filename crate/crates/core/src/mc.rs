//! Monte Carlo simulator of the dual-hop NOMA uplink.
//!
//! Draws are produced in fixed-size blocks; block `b` uses a ChaCha20 stream
//! keyed by (master seed, b). Blocks run in parallel and their statistics are
//! merged in block order, so estimates do not depend on the worker count.

use crate::channel::{BackhaulModel, ChannelDraw, ChannelSampler};
use crate::error::{Error, Result};
use crate::outage::oma_threshold;
use crate::scenario::ScenarioConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

pub const MIN_ITERATIONS: u64 = 1_000;
pub const DEFAULT_BLOCK_SIZE: u64 = 1 << 14;

#[derive(Debug, Clone)]
pub struct McRun {
    pub iterations: u64,
    pub master_seed: u64,
    pub block_size: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub scenario: ScenarioConfig,
}

impl McRun {
    pub fn new(scenario: ScenarioConfig, iterations: u64, master_seed: u64) -> Result<Self> {
        if iterations < MIN_ITERATIONS {
            return Err(Error::validation("mc.iterations", format!("must be ≥ {MIN_ITERATIONS}")));
        }
        Ok(Self {
            iterations,
            master_seed,
            block_size: DEFAULT_BLOCK_SIZE,
            threads: None,
            scenario,
        })
    }

    pub fn with_block_size(mut self, block_size: u64) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::validation("mc.block_size", "must be > 0"));
        }
        self.block_size = block_size;
        Ok(self)
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads.max(1));
        self
    }

    fn blocks(&self) -> u64 {
        self.iterations.div_ceil(self.block_size)
    }

    fn block_len(&self, b: u64) -> u64 {
        self.block_size.min(self.iterations - b * self.block_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
    pub ci95: (f64, f64),
}

impl McEstimate {
    /// |value − mean| ≤ k·σ, with σ floored at one count in n for exact 0/1 frequencies.
    pub fn agrees(&self, value: f64, k: f64) -> bool {
        let sigma = self.std_error.max(1.0 / self.n as f64);
        (value - self.mean).abs() <= k * sigma
    }
}

/// Streaming mean and variance (Welford), merged with Chan's pairwise update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64 / n as f64);
        self.n = n;
    }

    fn estimate(&self) -> McEstimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        let se = (var / self.n as f64).sqrt();
        McEstimate {
            mean: self.mean,
            std_error: se,
            n: self.n,
            ci95: (self.mean - 1.96 * se, self.mean + 1.96 * se),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeOrder {
    /// User 1 decoded first.
    Pi1,
    /// User 2 decoded first.
    Pi2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrRealization {
    pub order: DecodeOrder,
    /// SINR of the first-decoded user (other user as interference).
    pub first: f64,
    /// SINR of the second-decoded user after cancellation.
    pub second: f64,
    pub sum: f64,
    /// Full-power single-user SINRs of the OMA baseline.
    pub oma: [f64; 2],
}

impl SinrRealization {
    /// (γ⁽¹⁾, γ⁽²⁾) in user order.
    pub fn per_user(&self) -> (f64, f64) {
        match self.order {
            DecodeOrder::Pi1 => (self.first, self.second),
            DecodeOrder::Pi2 => (self.second, self.first),
        }
    }
}

/// Effective noise D of one draw.
pub fn effective_noise(draw: &ChannelDraw, sc: &ScenarioConfig) -> f64 {
    let relay: f64 = sc.interference.relay().iter().zip(&draw.relay).map(|(l, x)| l * x).sum();
    let backhaul = match &sc.backhaul {
        BackhaulModel::Fso(f) => f.c_d / (draw.backhaul * draw.backhaul),
        BackhaulModel::Rf(rf) => {
            let dest: f64 = sc.dest_terms().iter().zip(&draw.dest).map(|(l, y)| l * y).sum();
            (rf.noise + dest) / (rf.amplification() * draw.backhaul)
        }
    };
    sc.relay_noise + relay + backhaul
}

/// Decoding order and SINRs of one draw. Ties go to π₁.
pub fn sinr_realization(draw: &ChannelDraw, sc: &ScenarioConfig) -> SinrRealization {
    let d = effective_noise(draw, sc);
    let p = &sc.pair;
    let r1 = p.q1() * draw.h1;
    let r2 = p.q2() * draw.h2;
    let (order, strong, weak) = if r1 >= r2 {
        (DecodeOrder::Pi1, r1, r2)
    } else {
        (DecodeOrder::Pi2, r2, r1)
    };
    let oma = [
        p.l1 * p.tx_power_w * draw.h1 / d,
        p.l2 * p.tx_power_w * draw.h2 / d,
    ];
    SinrRealization {
        order,
        first: strong / (weak + d),
        second: weak / d,
        sum: (r1 + r2) / d,
        oma,
    }
}

/// Indicators of one draw, in [`OutageMetric::ALL`] order.
fn outage_indicators(s: &SinrRealization, sc: &ScenarioConfig) -> [bool; OutageMetric::COUNT] {
    let th = sc.thresholds;
    let (g1, g2) = s.per_user();
    let pi1 = s.order == DecodeOrder::Pi1;
    let ok1 = g1 >= th.gamma1;
    let ok2 = g2 >= th.gamma2;
    let user1_ok = ok1 && (pi1 || ok2);
    let user2_ok = ok2 && (!pi1 || ok1);
    let oma = [s.oma[0] < oma_threshold(th.gamma1), s.oma[1] < oma_threshold(th.gamma2)];
    let oma_sum = ((1.0 + s.oma[0]) * (1.0 + s.oma[1])).sqrt() - 1.0 < th.gamma_sum;
    [
        !user1_ok,
        !user2_ok,
        s.sum < th.gamma_sum,
        pi1 && !ok1,
        !pi1 && !ok2,
        !pi1 && ok1,
        pi1 && ok2,
        pi1,
        oma[0],
        oma[1],
        oma_sum,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutageMetric {
    User1,
    User2,
    Sum,
    /// Pr(γ⁽¹⁾ < γ₁, π₁).
    U1FirstJoint,
    /// Pr(γ⁽²⁾ < γ₂, π₂).
    U2FirstJoint,
    /// Pr(γ⁽¹⁾ ≥ γ₁, π₂).
    U1SecondCoverage,
    /// Pr(γ⁽²⁾ ≥ γ₂, π₁).
    U2SecondCoverage,
    /// Pr(π₁).
    OrderPi1,
    OmaUser1,
    OmaUser2,
    OmaSum,
}

impl OutageMetric {
    pub const COUNT: usize = 11;
    pub const ALL: [OutageMetric; Self::COUNT] = [
        Self::User1,
        Self::User2,
        Self::Sum,
        Self::U1FirstJoint,
        Self::U2FirstJoint,
        Self::U1SecondCoverage,
        Self::U2SecondCoverage,
        Self::OrderPi1,
        Self::OmaUser1,
        Self::OmaUser2,
        Self::OmaSum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::User1 => "outage_user1",
            Self::User2 => "outage_user2",
            Self::Sum => "outage_sum",
            Self::U1FirstJoint => "joint_u1_first",
            Self::U2FirstJoint => "joint_u2_first",
            Self::U1SecondCoverage => "cov_u1_second",
            Self::U2SecondCoverage => "cov_u2_second",
            Self::OrderPi1 => "order_pi1",
            Self::OmaUser1 => "oma_outage_user1",
            Self::OmaUser2 => "oma_outage_user2",
            Self::OmaSum => "oma_outage_sum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateMetricMc {
    User1,
    User2,
    Sum,
    OmaUser1,
    OmaUser2,
    OmaSum,
}

impl RateMetricMc {
    pub const COUNT: usize = 6;
    pub const ALL: [RateMetricMc; Self::COUNT] = [
        Self::User1,
        Self::User2,
        Self::Sum,
        Self::OmaUser1,
        Self::OmaUser2,
        Self::OmaSum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::User1 => "rate_user1",
            Self::User2 => "rate_user2",
            Self::Sum => "rate_sum",
            Self::OmaUser1 => "oma_rate_user1",
            Self::OmaUser2 => "oma_rate_user2",
            Self::OmaSum => "oma_rate_sum",
        }
    }
}

fn rates(s: &SinrRealization) -> [f64; RateMetricMc::COUNT] {
    let (g1, g2) = s.per_user();
    let o1 = 0.5 * s.oma[0].ln_1p() / std::f64::consts::LN_2;
    let o2 = 0.5 * s.oma[1].ln_1p() / std::f64::consts::LN_2;
    [
        g1.ln_1p() / std::f64::consts::LN_2,
        g2.ln_1p() / std::f64::consts::LN_2,
        s.sum.ln_1p() / std::f64::consts::LN_2,
        o1,
        o2,
        o1 + o2,
    ]
}

/// Per-metric estimates in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct McReport<M: Copy + PartialEq> {
    pub entries: Vec<(M, McEstimate)>,
}

impl<M: Copy + PartialEq> McReport<M> {
    pub fn get(&self, metric: M) -> McEstimate {
        self.entries
            .iter()
            .find(|(m, _)| *m == metric)
            .map(|(_, e)| *e)
            .expect("every metric is reported")
    }
}

fn run_blocks<const N: usize, F>(run: &McRun, per_draw: F) -> [Moments; N]
where
    F: Fn(&SinrRealization) -> [f64; N] + Sync,
{
    let sampler = ChannelSampler::new(&run.scenario.backhaul, &run.scenario.interference);
    let block = |b: u64| -> [Moments; N] {
        let mut rng = ChaCha20Rng::seed_from_u64(run.master_seed);
        rng.set_stream(b);
        let mut acc = [Moments::default(); N];
        let mut draw = ChannelDraw::default();
        for _ in 0..run.block_len(b) {
            sampler.sample_into(&mut rng, &mut draw);
            let s = sinr_realization(&draw, &run.scenario);
            for (a, x) in acc.iter_mut().zip(per_draw(&s)) {
                a.push(x);
            }
        }
        acc
    };
    let collect = || (0..run.blocks()).into_par_iter().map(block).collect::<Vec<_>>();
    let parts = match run.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(collect),
        None => collect(),
    };
    let mut total = [Moments::default(); N];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    total
}

/// Event frequencies for every outage metric.
pub fn simulate_outage(run: &McRun) -> McReport<OutageMetric> {
    let sc = &run.scenario;
    let m = run_blocks(run, |s| outage_indicators(s, sc).map(|b| if b { 1.0 } else { 0.0 }));
    McReport {
        entries: OutageMetric::ALL.iter().zip(&m).map(|(k, m)| (*k, m.estimate())).collect(),
    }
}

/// Sample means of the instantaneous NOMA and OMA rates in bits/s/Hz.
pub fn simulate_ergodic(run: &McRun) -> McReport<RateMetricMc> {
    let m = run_blocks(run, rates);
    McReport {
        entries: RateMetricMc::ALL.iter().zip(&m).map(|(k, m)| (*k, m.estimate())).collect(),
    }
}
