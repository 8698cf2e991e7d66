//! Monte Carlo simulation of the rate, intensity and firm-value dynamics.
//!
//! Per step the rate, its time integral, the firm-value Brownian increment and
//! the intensity noise are drawn jointly from their exact Gaussian law. The
//! intensity uses the exact OU transition when its variance is constant in
//! `p` and `r`, full-truncation Euler otherwise. Unexpected default occurs
//! when the compensator `∫p⁺dt` (trapezoid rule) exceeds an Exp(1) draw;
//! expected default is a grid crossing of the barrier or a Brownian-bridge
//! crossing between grid points.
//!
//! Face-value recovery pays `R·Z(τ_d, T)` at default, which has the same value
//! as paying `R` at `T`, so a defaulted path pays `R` discounted from `T`.
//! Market-price recovery is valued by the equivalent killing-rate form
//! `exp(−∫r − (1−R)∫p)`, with the signed intensity as in the pricing PDE; a
//! Gaussian intensity that dips below zero then acts as a negative killing rate.
//! Default sampling needs a nonnegative hazard and uses `p⁺`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{DbondError, Result};
use crate::models::{Barrier, FirmModel, RecoveryConvention, ShortRateModel, ValidatedScenario};

use super::rng;

/// Samples per parallel work unit; fixed so results do not depend on threads.
const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monitoring {
    /// Grid checks plus the Brownian-bridge crossing probability between nodes.
    BrownianBridge,
    /// Grid checks only (biased; for diagnosis).
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSpec {
    pub n_paths: usize,
    pub steps_per_year: usize,
    pub seed: u64,
    pub antithetic: bool,
    pub monitoring: Monitoring,
}

impl McSpec {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self {
            n_paths,
            steps_per_year: 50,
            seed,
            antithetic: false,
            monitoring: Monitoring::BrownianBridge,
        }
    }

    pub fn antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn steps_per_year(mut self, n: usize) -> Self {
        self.steps_per_year = n;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Independent samples (antithetic pairs count once).
    pub n_samples: usize,
}

impl McEstimate {
    /// `|x − mean|` in standard errors.
    pub fn z_score(&self, x: f64) -> f64 {
        if self.std_error == 0.0 {
            if x == self.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (x - self.mean).abs() / self.std_error
        }
    }

    pub fn within(&self, x: f64, k: f64) -> bool {
        self.z_score(x) <= k
    }

    fn from_sums(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        Self { mean, std_error: (var / nf).sqrt(), n_samples: n }
    }
}

/// Runs `n` samples in fixed chunks and reduces the chunk sums in order.
fn estimate(n: usize, sample: impl Fn(usize) -> f64 + Sync) -> McEstimate {
    let chunks = n.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let (mut s, mut s2) = (0.0, 0.0);
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let x = sample(i);
                s += x;
                s2 += x * x;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    McEstimate::from_sums(s, s2, n)
}

/// `(1 − e^{−kΔ})/k`, continuous at `k = 0`.
fn ek(k: f64, dt: f64) -> f64 {
    if k.abs() * dt < 1e-14 {
        dt
    } else {
        -(-k * dt).exp_m1() / k
    }
}

/// `∫_0^Δ ((1 − e^{−θs})/θ)² ds`, with a series for small `θΔ`.
fn int_b_sq(theta: f64, dt: f64) -> f64 {
    let x = theta * dt;
    if x < 1e-2 {
        let x2 = x * x;
        dt * dt * dt * (1.0 / 3.0 - x / 4.0 + 7.0 * x2 / 60.0 - x2 * x / 24.0)
    } else {
        (dt - 2.0 * ek(theta, dt) + ek(2.0 * theta, dt)) / (theta * theta)
    }
}

/// Lower-triangular `L` with `L·Lᵀ = cov`; non-positive pivots give zero columns.
fn cholesky4(cov: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut l = [[0.0; 4]; 4];
    for j in 0..4 {
        let mut d = cov[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d <= 1e-300 {
            continue;
        }
        let dj = d.sqrt();
        l[j][j] = dj;
        for i in j + 1..4 {
            let mut s = cov[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / dj;
        }
    }
    l
}

/// Closed-form `ln Z(r, t; T) = Ā − B̄·r` for a Vasicek rate.
fn vasicek_log_zcb(theta: f64, mu: f64, sigma: f64, tau: f64) -> (f64, f64) {
    let b = ek(theta, tau);
    let a = (b - tau) * (mu - sigma * sigma / (2.0 * theta * theta)) - sigma * sigma * b * b / (4.0 * theta);
    (a, b)
}

#[derive(Debug, Clone, Copy)]
enum BarrierKind {
    None,
    /// `ln V_b` fixed.
    Fixed(f64),
    /// `ln V_B − r·(T − t)` at a constant rate.
    Discounted(f64, f64),
    /// `ln V_B + ln Z(r, t; T)`.
    Zcb(f64),
}

#[derive(Debug, Clone, Copy)]
struct Step {
    dt: f64,
    chol: [[f64; 4]; 4],
    // intensity coefficients on the step
    b: f64,
    d: f64,
    beta: f64,
    eps: f64,
    // ZCB coefficients at the step end, for the proportional barrier
    za: f64,
    zb: f64,
    // variance rate of ln(V/V_b) at the step midpoint
    bridge_var: f64,
    t_end: f64,
}

struct Sim {
    steps: Vec<Step>,
    rate: ShortRateModel,
    c: f64,
    e: f64,
    exact_ou: bool,
    p0: f64,
    firm: Option<FirmModel>,
    barrier: BarrierKind,
    maturity: f64,
    monitoring: Monitoring,
}

struct PathOut {
    discount: f64,
    compensator: f64,
    /// `∫p dt` with the signed intensity.
    int_p: f64,
    hit_barrier: bool,
    exp_draw: f64,
}

impl Sim {
    fn new(v: &ValidatedScenario, spec: &McSpec) -> Result<Self> {
        if spec.n_paths == 0 || spec.steps_per_year == 0 {
            return Err(DbondError::InvalidParameter {
                name: "mc.n_paths",
                value: spec.n_paths as f64,
                constraint: "paths and steps per year must be >= 1",
            });
        }
        let m = &v.intensity;
        let tau = v.window.tau();
        let n = ((tau * spec.steps_per_year as f64).ceil() as usize).max(1);
        let dt = tau / n as f64;
        let (theta, mu, sr) = match v.rate {
            ShortRateModel::Vasicek { theta, mu, sigma, .. } => (theta, mu, sigma),
            ShortRateModel::Constant { .. } => (1.0, 0.0, 0.0),
        };
        let rho12 = v.firm.map(|f| f.rho_rate).unwrap_or(0.0);
        let rho13 = v.correlations.rate_intensity;
        let rho23 = v.correlations.firm_intensity;
        let (c, e) = (m.drift_slope_p, m.var_slope_p);
        let exact_ou = e == 0.0 && m.drift_slope_r.is_zero() && m.var_slope_r.is_zero();
        let barrier = match v.barrier() {
            Barrier::None => BarrierKind::None,
            Barrier::Constant { level } => BarrierKind::Fixed(level.ln()),
            Barrier::Discounted { level } => match v.rate {
                ShortRateModel::Constant { r } => BarrierKind::Discounted(level.ln(), r),
                ShortRateModel::Vasicek { .. } => {
                    return Err(DbondError::UnsupportedRegime(
                        "a discounted barrier needs a constant short rate".into(),
                    ))
                }
            },
            Barrier::ZcbProportional { level } => BarrierKind::Zcb(level.ln()),
        };
        let sv = v.firm.map(|f| f.volatility).unwrap_or(0.0);

        let mut steps = Vec::with_capacity(n);
        for k in 0..n {
            let t0 = v.window.t + dt * k as f64;
            let t1 = if k + 1 == n { v.window.maturity } else { t0 + dt };
            let tm = 0.5 * (t0 + t1);
            let (b, d) = (m.drift_const.eval(tm), m.var_const.eval(tm));
            let sd = d.sqrt();
            let mut cov = [[0.0; 4]; 4];
            if sr > 0.0 {
                cov[0][0] = sr * sr * ek(2.0 * theta, dt);
                cov[1][1] = sr * sr * int_b_sq(theta, dt);
                let h = -(-theta * dt).exp_m1();
                cov[0][1] = sr * sr * h * h / (2.0 * theta * theta);
                cov[0][2] = rho12 * sr * ek(theta, dt);
                cov[1][2] = rho12 * sr * (dt - ek(theta, dt)) / theta;
            }
            cov[2][2] = dt;
            if exact_ou {
                cov[3][3] = d * ek(2.0 * c, dt);
                cov[0][3] = rho13 * sr * sd * ek(theta + c, dt);
                cov[1][3] = rho13 * sr * sd * (ek(c, dt) - ek(theta + c, dt)) / theta;
                cov[2][3] = rho23 * sd * ek(c, dt);
            } else {
                cov[3][3] = dt;
                cov[0][3] = rho13 * sr * ek(theta, dt);
                cov[1][3] = rho13 * sr * (dt - ek(theta, dt)) / theta;
                cov[2][3] = rho23 * dt;
            }
            for i in 0..4 {
                for j in 0..i {
                    cov[i][j] = cov[j][i];
                }
            }
            let (za, zb) = match v.rate {
                ShortRateModel::Vasicek { theta, mu, sigma, .. } => {
                    vasicek_log_zcb(theta, mu, sigma, v.window.maturity - t1)
                }
                ShortRateModel::Constant { r } => (-r * (v.window.maturity - t1), 0.0),
            };
            let bridge_var = match (barrier, v.firm) {
                (BarrierKind::Zcb(_), Some(f)) => {
                    crate::survival::sigma_x_sq(&v.rate, &f, tm, v.window.maturity)
                }
                _ => sv * sv,
            };
            steps.push(Step {
                dt: t1 - t0,
                chol: cholesky4(&cov),
                b,
                d,
                beta: m.drift_slope_r.eval(tm),
                eps: m.var_slope_r.eval(tm),
                za,
                zb,
                bridge_var,
                t_end: t1,
            });
        }
        let _ = mu;
        Ok(Self {
            steps,
            rate: v.rate,
            c,
            e,
            exact_ou,
            p0: v.p0,
            firm: v.firm,
            barrier,
            maturity: v.window.maturity,
            monitoring: spec.monitoring,
        })
    }

    fn log_barrier(&self, step: &Step, r: f64) -> f64 {
        match self.barrier {
            BarrierKind::None => f64::NEG_INFINITY,
            BarrierKind::Fixed(l) => l,
            BarrierKind::Discounted(l, rc) => l - rc * (self.maturity - step.t_end),
            BarrierKind::Zcb(l) => l + step.za - step.zb * r,
        }
    }

    fn path(&self, rng: &mut ChaCha8Rng, sign: f64) -> PathOut {
        let flip = |u: f64| if sign > 0.0 { u } else { 1.0 - u };
        let u_exp: f64 = flip(rng.random::<f64>());
        let exp_draw = -(1.0 - u_exp).ln();

        let (theta, mu) = match self.rate {
            ShortRateModel::Vasicek { theta, mu, .. } => (theta, mu),
            ShortRateModel::Constant { .. } => (1.0, 0.0),
        };
        let vasicek = self.rate.is_vasicek();
        let mut r = self.rate.current_rate();
        let mut int_r = 0.0;
        let mut p = self.p0;
        let mut lam = 0.0;
        let mut int_p = 0.0;
        let track_firm = !matches!(self.barrier, BarrierKind::None);
        let (mut lnv, sv, div) = match self.firm {
            Some(f) => (f.value.ln(), f.volatility, f.dividend),
            None => (0.0, 0.0, 0.0),
        };
        // distance to the barrier at the start
        let mut y_prev = if track_firm {
            lnv - self.log_barrier_start(r)
        } else {
            0.0
        };
        let mut hit = false;

        for st in &self.steps {
            let dt = st.dt;
            let mut z = [0.0f64; 4];
            for zi in z.iter_mut() {
                *zi = sign * rng.sample::<f64, _>(StandardNormal);
            }
            let l = &st.chol;
            let mut n = [0.0f64; 4];
            for i in 0..4 {
                let mut s = 0.0;
                for (k, zk) in z.iter().enumerate().take(i + 1) {
                    s += l[i][k] * zk;
                }
                n[i] = s;
            }

            let r_old = r;
            let d_int = if vasicek {
                let decay = (-theta * dt).exp();
                let di = mu * dt + (r - mu) * ek(theta, dt) + n[1];
                r = mu + (r - mu) * decay + n[0];
                di
            } else {
                r * dt
            };
            int_r += d_int;

            let p_old = p;
            if self.exact_ou {
                p = p * (-self.c * dt).exp() + st.b * ek(self.c, dt) + n[3];
            } else {
                let pp = p.max(0.0);
                let var = (st.d + self.e * pp + st.eps * r_old).max(0.0);
                p = p + (st.b - self.c * pp + st.beta * r_old) * dt + var.sqrt() * n[3];
            }
            lam += 0.5 * (p_old.max(0.0) + p.max(0.0)) * dt;
            int_p += 0.5 * (p_old + p) * dt;

            if track_firm && !hit {
                lnv += d_int - (div + 0.5 * sv * sv) * dt + sv * n[2];
                let y = lnv - self.log_barrier(st, r);
                if y <= 0.0 {
                    hit = true;
                } else if self.monitoring == Monitoring::BrownianBridge {
                    let prob = (-2.0 * y_prev * y / (st.bridge_var * dt)).exp();
                    let u = flip(rng.random::<f64>());
                    if u < prob {
                        hit = true;
                    }
                }
                y_prev = y;
            } else if track_firm {
                // keep the draw count per step fixed across paths
                let _ = rng.random::<f64>();
            }
        }
        PathOut {
            discount: (-int_r).exp(),
            compensator: lam,
            int_p,
            hit_barrier: hit,
            exp_draw,
        }
    }

    fn log_barrier_start(&self, r: f64) -> f64 {
        let t0 = self.steps[0].t_end - self.steps[0].dt;
        match (self.barrier, self.rate) {
            (BarrierKind::None, _) => f64::NEG_INFINITY,
            (BarrierKind::Fixed(l), _) => l,
            (BarrierKind::Discounted(l, rc), _) => l - rc * (self.maturity - t0),
            (BarrierKind::Zcb(l), ShortRateModel::Vasicek { theta, mu, sigma, .. }) => {
                let (a, b) = vasicek_log_zcb(theta, mu, sigma, self.maturity - t0);
                l + a - b * r
            }
            (BarrierKind::Zcb(l), ShortRateModel::Constant { r: rc }) => l - rc * (self.maturity - t0),
        }
    }

    fn sample(&self, seed: u64, index: usize, antithetic: bool, payoff: &impl Fn(&PathOut) -> f64) -> f64 {
        let mut rng = rng::stream(seed, index as u64);
        let x = payoff(&self.path(&mut rng, 1.0));
        if antithetic {
            let mut rng = rng::stream(seed, index as u64);
            0.5 * (x + payoff(&self.path(&mut rng, -1.0)))
        } else {
            x
        }
    }
}

fn run(v: &ValidatedScenario, spec: &McSpec, payoff: impl Fn(&PathOut) -> f64 + Sync) -> Result<McEstimate> {
    let sim = Sim::new(v, spec)?;
    let n = if spec.antithetic { (spec.n_paths / 2).max(1) } else { spec.n_paths };
    Ok(estimate(n, |i| sim.sample(spec.seed, i, spec.antithetic, &payoff)))
}

/// Monte Carlo bond price with its standard error.
pub fn mc_price(v: &ValidatedScenario, spec: &McSpec) -> Result<McEstimate> {
    let recovery = v.recovery();
    match v.default_spec.convention {
        RecoveryConvention::FaceValue => run(v, spec, move |o| {
            let alive = !o.hit_barrier && o.compensator <= o.exp_draw;
            o.discount * if alive { 1.0 } else { recovery }
        }),
        RecoveryConvention::MarketPrice => {
            if v.barrier() != Barrier::None {
                return Err(DbondError::UnsupportedRegime(
                    "market-price recovery is simulated without a barrier".into(),
                ));
            }
            run(v, spec, move |o| o.discount * (-(1.0 - recovery) * o.int_p).exp())
        }
    }
}

/// Monte Carlo no-default probability. Under a Vasicek rate the indicator is
/// weighted by `D_T/Z(r0, t; T)`, i.e. measured under the `T`-forward measure.
pub fn mc_survival(v: &ValidatedScenario, spec: &McSpec) -> Result<McEstimate> {
    let z0 = match v.rate {
        ShortRateModel::Vasicek { theta, mu, sigma, r0 } => {
            let (a, b) = vasicek_log_zcb(theta, mu, sigma, v.window.tau());
            Some((a - b * r0).exp())
        }
        ShortRateModel::Constant { .. } => None,
    };
    run(v, spec, move |o| {
        let alive = !o.hit_barrier && o.compensator <= o.exp_draw;
        let w = if alive { 1.0 } else { 0.0 };
        match z0 {
            Some(z) => w * o.discount / z,
            None => w,
        }
    })
}

/// Variance rate of `ln(V/Z)` over `[u, u + h]`, estimated from `n` exact
/// one-step samples. The returned estimate is of `Var[Δ ln(V/Z)]/h`.
pub fn mc_log_ratio_variance_rate(
    rate: &ShortRateModel,
    firm: &FirmModel,
    u: f64,
    maturity: f64,
    h: f64,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    let ShortRateModel::Vasicek { theta, mu, sigma, r0 } = *rate else {
        return Err(DbondError::UnsupportedRegime("needs a Vasicek rate".into()));
    };
    let sv = firm.volatility;
    let h1 = -(-theta * h).exp_m1();
    let mut cov = [[0.0; 4]; 4];
    cov[0][0] = sigma * sigma * ek(2.0 * theta, h);
    cov[1][1] = sigma * sigma * int_b_sq(theta, h);
    cov[0][1] = sigma * sigma * h1 * h1 / (2.0 * theta * theta);
    cov[1][0] = cov[0][1];
    cov[2][2] = h;
    cov[0][2] = firm.rho_rate * sigma * ek(theta, h);
    cov[2][0] = cov[0][2];
    cov[1][2] = firm.rho_rate * sigma * (h - ek(theta, h)) / theta;
    cov[2][1] = cov[1][2];
    let l = cholesky4(&cov);
    let (a0, b0) = vasicek_log_zcb(theta, mu, sigma, maturity - u);
    let (a1, b1) = vasicek_log_zcb(theta, mu, sigma, maturity - u - h);
    let increment = |i: usize| {
        let mut rng = rng::stream(seed, i as u64);
        let z: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let nr = l[0][0] * z[0];
        let ni = l[1][0] * z[0] + l[1][1] * z[1];
        let nw = l[2][0] * z[0] + l[2][1] * z[1] + l[2][2] * z[2];
        let r1 = mu + (r0 - mu) * (-theta * h).exp() + nr;
        let di = mu * h + (r0 - mu) * ek(theta, h) + ni;
        let dlnv = di - 0.5 * sv * sv * h + sv * nw;
        let dlnz = (a1 - b1 * r1) - (a0 - b0 * r0);
        dlnv - dlnz
    };
    // centre with the sample mean first, then estimate the variance and its
    // standard error from the squared deviations
    let mean = estimate(n, increment).mean;
    let sq = estimate(n, |i| {
        let x = increment(i) - mean;
        x * x / h
    });
    Ok(sq)
}

/// Survival of a martingale `x` (log drift −½ per unit variance) above a
/// barrier `vb`, over total variance `effvar` split into `steps` steps, with
/// Brownian-bridge crossing correction.
pub fn mc_driftless_first_passage(
    x0_over_vb: f64,
    effvar: f64,
    steps: usize,
    n: usize,
    seed: u64,
) -> McEstimate {
    let dv = effvar / steps as f64;
    let sd = dv.sqrt();
    let y0 = x0_over_vb.ln();
    estimate(n, |i| {
        let mut rng = rng::stream(seed, i as u64);
        let mut y = y0;
        for _ in 0..steps {
            let z: f64 = rng.sample(StandardNormal);
            let y1 = y - 0.5 * dv + sd * z;
            if y1 <= 0.0 {
                return 0.0;
            }
            let u: f64 = rng.random();
            if u < (-2.0 * y * y1 / dv).exp() {
                return 0.0;
            }
            y = y1;
        }
        1.0
    })
}
