//! Exponential-affine coefficients.
//!
//! Every intensity problem here reduces to the autonomous Riccati equation
//!
//! ```text
//! dY/dτ = k − c·Y − ½·e·Y²,   Y(0) = 0,   τ = T − t
//! ```
//!
//! with `k = 1` for plain survival and `k = 1 − R` for market-price recovery.
//! Three parameter families have closed forms; anything else is integrated by
//! RK4. The `A` coefficients are always obtained by composite Simpson
//! quadrature over segments aligned to the coefficient breakpoints.

use crate::error::{DbondError, Result};
use crate::models::{IntensityModel, ShortRateModel, StepFunction, TimeWindow};

/// Default quadrature step, one day.
pub const DEFAULT_STEP: f64 = 1.0 / 365.0;

/// |Y| beyond this is treated as a finite-time explosion.
pub const BLOWUP_BOUND: f64 = 1e8;

const C_SERIES_CUTOFF: f64 = 1e-12;
const RK4_TOL: f64 = 1e-10;
const RK4_MAX_STEPS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    ClosedForm,
    NumericRiccati,
}

/// `tanh` that saturates to ±1 beyond |x| = 20.
pub fn stable_tanh(x: f64) -> f64 {
    if x > 20.0 {
        1.0
    } else if x < -20.0 {
        -1.0
    } else {
        let m = (-2.0 * x.abs()).exp_m1();
        (-m / (2.0 + m)).copysign(x)
    }
}

/// Closed-form Riccati solution `Y(τ)`, or `None` outside the solvable families.
pub fn riccati_closed(k: f64, c: f64, e: f64, tau: f64) -> Option<f64> {
    if tau == 0.0 || k == 0.0 {
        return if e == 0.0 || c == 0.0 { Some(0.0) } else { None };
    }
    if e == 0.0 {
        if c.abs() < C_SERIES_CUTOFF {
            Some(k * (tau - 0.5 * c * tau * tau))
        } else {
            Some(-k * (-c * tau).exp_m1() / c)
        }
    } else if c == 0.0 && e > 0.0 && k > 0.0 {
        let g = (0.5 * k * e).sqrt();
        Some((2.0 * k / e).sqrt() * stable_tanh(g * tau))
    } else {
        None
    }
}

/// Closed-form `B(t, T)` of the survival problem.
pub fn riccati_b_closed(model: &IntensityModel, window: &TimeWindow) -> Result<f64> {
    window.check()?;
    riccati_closed(1.0, model.drift_slope_p, model.var_slope_p, window.tau()).ok_or_else(|| {
        DbondError::UnsupportedCase(format!(
            "no closed-form Riccati solution for c = {}, e = {}; use the numeric solver",
            model.drift_slope_p, model.var_slope_p
        ))
    })
}

/// RK4 solution of the Riccati equation on a uniform τ-grid, interpolated by
/// cubic Hermite polynomials using the ODE slope at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiCurve {
    k: f64,
    c: f64,
    e: f64,
    h: f64,
    ys: Vec<f64>,
}

impl RiccatiCurve {
    fn rhs(&self, y: f64) -> f64 {
        self.k - self.c * y - 0.5 * self.e * y * y
    }

    pub fn tau_max(&self) -> f64 {
        self.h * (self.ys.len() - 1) as f64
    }

    pub fn steps(&self) -> usize {
        self.ys.len() - 1
    }

    /// `Y(τ)`; τ is clamped to the solved range.
    pub fn eval(&self, tau: f64) -> f64 {
        let n = self.ys.len() - 1;
        if n == 0 || tau <= 0.0 {
            return 0.0;
        }
        let s = (tau / self.h).min(n as f64);
        let i = (s.floor() as usize).min(n - 1);
        let u = s - i as f64;
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let (m0, m1) = (self.rhs(y0) * self.h, self.rhs(y1) * self.h);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * m0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * m1
    }
}

fn rk4_grid(k: f64, c: f64, e: f64, tau: f64, n: usize) -> Result<Vec<f64>> {
    let f = |y: f64| k - c * y - 0.5 * e * y * y;
    let h = tau / n as f64;
    let mut ys = Vec::with_capacity(n + 1);
    let mut y = 0.0;
    ys.push(y);
    for i in 0..n {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !y.is_finite() || y.abs() > BLOWUP_BOUND {
            return Err(DbondError::BlowUp {
                tau: (i + 1) as f64 * h,
                bound: BLOWUP_BOUND,
            });
        }
        ys.push(y);
    }
    Ok(ys)
}

/// Integrates the Riccati equation numerically over `[0, tau]`, halving the
/// step until two successive grids agree to 1e-10 at the common nodes.
pub fn solve_riccati(k: f64, c: f64, e: f64, tau: f64) -> Result<RiccatiCurve> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(DbondError::InvalidWindow { t: 0.0, maturity: tau });
    }
    if tau == 0.0 {
        return Ok(RiccatiCurve { k, c, e, h: 1.0, ys: vec![0.0] });
    }
    // start no coarser than 1/256 year so the Hermite interpolant is tight too
    let mut n = ((tau * 256.0).ceil() as usize).max(16);
    let mut coarse = rk4_grid(k, c, e, tau, n)?;
    loop {
        let fine = rk4_grid(k, c, e, tau, 2 * n)?;
        let diff = coarse
            .iter()
            .enumerate()
            .map(|(i, y)| (y - fine[2 * i]).abs())
            .fold(0.0, f64::max);
        n *= 2;
        if diff <= RK4_TOL {
            return Ok(RiccatiCurve { k, c, e, h: tau / n as f64, ys: fine });
        }
        if n >= RK4_MAX_STEPS {
            return Err(DbondError::NotConverged(format!(
                "Riccati RK4 still changing by {diff:e} at {n} steps"
            )));
        }
        coarse = fine;
    }
}

/// Numeric `B(·, T)` for any affine intensity model, valid on the window.
pub fn riccati_b_numeric(model: &IntensityModel, window: &TimeWindow) -> Result<RiccatiCurve> {
    window.check()?;
    solve_riccati(1.0, model.drift_slope_p, model.var_slope_p, window.tau())
}

/// A Riccati solution in whichever form was available.
#[derive(Debug, Clone, PartialEq)]
pub enum Riccati {
    Closed { k: f64, c: f64, e: f64 },
    Numeric(RiccatiCurve),
}

impl Riccati {
    /// Closed form when the family allows it, RK4 over `[0, tau_max]` otherwise.
    pub fn new(k: f64, c: f64, e: f64, tau_max: f64) -> Result<Self> {
        if riccati_closed(k, c, e, tau_max.max(1.0)).is_some() {
            Ok(Riccati::Closed { k, c, e })
        } else {
            Ok(Riccati::Numeric(solve_riccati(k, c, e, tau_max)?))
        }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        match self {
            Riccati::Closed { k, c, e } => {
                riccati_closed(*k, *c, *e, tau).expect("closed family checked at construction")
            }
            Riccati::Numeric(curve) => curve.eval(tau),
        }
    }

    pub fn method(&self) -> SolveMethod {
        match self {
            Riccati::Closed { .. } => SolveMethod::ClosedForm,
            Riccati::Numeric(_) => SolveMethod::NumericRiccati,
        }
    }
}

/// A panel of `n` (even) equal Simpson intervals on `[a, b]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Segment {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Segment {
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            self.b
        } else {
            self.a + (self.b - self.a) * i as f64 / self.n as f64
        }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn width(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn simpson(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut acc = f(self.a) + f(self.b);
        for i in 1..self.n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(self.node(i));
        }
        acc * self.width() / 3.0
    }
}

/// Splits `[a, b]` at the given breakpoints into Simpson panels with step ≤ `step`.
pub(crate) fn segments(a: f64, b: f64, breaks: &[f64], step: f64) -> Vec<Segment> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut lo = a;
    for hi in cuts.into_iter().chain(std::iter::once(b)) {
        if hi > lo {
            let mut n = ((hi - lo) / step).ceil() as usize;
            n = n.max(2);
            n += n % 2;
            out.push(Segment { a: lo, b: hi, n });
        }
        lo = hi;
    }
    out
}

fn model_breaks(fs: &[&StepFunction]) -> Vec<f64> {
    fs.iter().flat_map(|f| f.breakpoints().iter().copied()).collect()
}

/// `A(t, T) = −∫_t^T [b(s)·B(s) − ½·d(s)·B(s)²] ds` where `b_of_tau(T − s) = B(s)`.
pub fn integrate_a(
    model: &IntensityModel,
    b_of_tau: impl Fn(f64) -> f64,
    window: &TimeWindow,
    step: f64,
) -> f64 {
    let big_t = window.maturity;
    let breaks = model_breaks(&[&model.drift_const, &model.var_const]);
    let mut total = 0.0;
    for seg in segments(window.t, big_t, &breaks, step) {
        // coefficients are constant on an aligned segment
        let bv = model.drift_const.eval(seg.mid());
        let dv = model.var_const.eval(seg.mid());
        total += seg.simpson(|s| {
            let y = b_of_tau(big_t - s);
            bv * y - 0.5 * dv * y * y
        });
    }
    -total
}

/// `B̄(t, T) = (1 − e^{−θ(T−t)})/θ`.
pub fn vasicek_b(theta: f64, tau: f64) -> f64 {
    -(-theta * tau).exp_m1() / theta
}

/// `(Ā, B̄)` of the default-free Vasicek bond `Z = e^{Ā − B̄·r}`.
pub fn vasicek_zcb_affine(rate: &ShortRateModel, window: &TimeWindow) -> Result<(f64, f64)> {
    vasicek_zcb_affine_with_step(rate, window, DEFAULT_STEP)
}

pub fn vasicek_zcb_affine_with_step(
    rate: &ShortRateModel,
    window: &TimeWindow,
    step: f64,
) -> Result<(f64, f64)> {
    window.check()?;
    let ShortRateModel::Vasicek { theta, mu, sigma, .. } = *rate else {
        return Err(DbondError::UnsupportedRegime(
            "the Vasicek bond coefficients need a Vasicek short rate".into(),
        ));
    };
    let big_t = window.maturity;
    let a: f64 = segments(window.t, big_t, &[], step)
        .iter()
        .map(|seg| {
            seg.simpson(|u| {
                let bb = vasicek_b(theta, big_t - u);
                0.5 * sigma * sigma * bb * bb - theta * mu * bb
            })
        })
        .sum();
    Ok((a, vasicek_b(theta, window.tau())))
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// `(A, B)` of `e^{A − B·p}`.
    Intensity {
        model: IntensityModel,
        riccati: Riccati,
    },
    /// `(A, B, C)` of `e^{A − B·r − C·p}` under a Vasicek rate.
    Market {
        model: IntensityModel,
        riccati: Riccati,
        rate: ShortRateModel,
    },
}

/// Evaluated coefficients at one valuation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: Option<f64>,
}

/// Coefficient functions `A(t, T)`, `B(t, T)` and, for market-price recovery
/// under a stochastic rate, `C(t, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSolution {
    maturity: f64,
    quadrature_step: f64,
    repr: Repr,
}

impl AffineSolution {
    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn quadrature_step(&self) -> f64 {
        self.quadrature_step
    }

    pub fn method(&self) -> SolveMethod {
        match &self.repr {
            Repr::Intensity { riccati, .. } | Repr::Market { riccati, .. } => riccati.method(),
        }
    }

    pub fn has_c(&self) -> bool {
        matches!(self.repr, Repr::Market { .. })
    }

    pub fn coefficients(&self, t: f64) -> Coefficients {
        let window = TimeWindow { t, maturity: self.maturity };
        match &self.repr {
            Repr::Intensity { model, riccati } => Coefficients {
                a: integrate_a(model, |tau| riccati.eval(tau), &window, self.quadrature_step),
                b: riccati.eval(window.tau()),
                c: None,
            },
            Repr::Market { model, riccati, rate } => {
                let (a, b) = market_coefficients(model, riccati, rate, &window, self.quadrature_step);
                Coefficients {
                    a,
                    b,
                    c: Some(riccati.eval(window.tau())),
                }
            }
        }
    }

    pub fn a(&self, t: f64) -> f64 {
        self.coefficients(t).a
    }

    /// Coefficient of `p` for the intensity problems, of `r` for the market system.
    pub fn b(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Intensity { riccati, .. } => riccati.eval(self.maturity - t),
            Repr::Market { .. } => self.coefficients(t).b,
        }
    }

    /// Coefficient of `p` in the market system.
    pub fn c(&self, t: f64) -> Option<f64> {
        match &self.repr {
            Repr::Intensity { .. } => None,
            Repr::Market { riccati, .. } => Some(riccati.eval(self.maturity - t)),
        }
    }
}

/// `(A, B)` with `W = e^{A − B·p}` for the plain intensity survival problem.
pub fn intensity_affine(model: &IntensityModel, window: &TimeWindow) -> Result<AffineSolution> {
    intensity_affine_scaled(model, window, 1.0)
}

/// `(A, B)` with the intensity killing rate scaled by `k`; `k = 1 − R` gives the
/// constant-rate market-price recovery system.
pub fn intensity_affine_scaled(
    model: &IntensityModel,
    window: &TimeWindow,
    k: f64,
) -> Result<AffineSolution> {
    window.check()?;
    let riccati = Riccati::new(k, model.drift_slope_p, model.var_slope_p, window.tau())?;
    Ok(AffineSolution {
        maturity: window.maturity,
        quadrature_step: DEFAULT_STEP,
        repr: Repr::Intensity {
            model: model.clone(),
            riccati,
        },
    })
}

/// `(A, B, C)` with `Ĉ = e^{A − B·r − C·p}` under market-price recovery and a
/// Vasicek short rate.
pub fn market_recovery_affine(
    model: &IntensityModel,
    rate: &ShortRateModel,
    recovery: f64,
    window: &TimeWindow,
) -> Result<AffineSolution> {
    window.check()?;
    if !rate.is_vasicek() {
        return Err(DbondError::UnsupportedRegime(
            "the (A, B, C) market-recovery system needs a Vasicek short rate".into(),
        ));
    }
    if !(0.0..=1.0).contains(&recovery) {
        return Err(DbondError::BadRecovery(recovery));
    }
    let k = 1.0 - recovery;
    let riccati = Riccati::new(k, model.drift_slope_p, model.var_slope_p, window.tau())
        .map_err(|e| match e {
            DbondError::NotConverged(m) => DbondError::UnsupportedCase(m),
            other => other,
        })?;
    Ok(AffineSolution {
        maturity: window.maturity,
        quadrature_step: DEFAULT_STEP,
        repr: Repr::Market {
            model: model.clone(),
            riccati,
            rate: *rate,
        },
    })
}

// B solves dB/dτ = 1 − θB + βC − ½εC², so B = B̄ + h with h the
// exponentially weighted integral of g = βC − ½εC². A is Ā minus the
// correction terms; with C ≡ 0 both corrections vanish identically.
fn market_coefficients(
    model: &IntensityModel,
    riccati: &Riccati,
    rate: &ShortRateModel,
    window: &TimeWindow,
    step: f64,
) -> (f64, f64) {
    let ShortRateModel::Vasicek { theta, mu, sigma, .. } = *rate else {
        unreachable!("market system constructed with a Vasicek rate")
    };
    let (a_bar, b_bar) =
        vasicek_zcb_affine_with_step(rate, window, step).expect("Vasicek rate and valid window");
    let big_t = window.maturity;
    let breaks = model_breaks(&[
        &model.drift_const,
        &model.var_const,
        &model.drift_slope_r,
        &model.var_slope_r,
    ]);
    let segs = segments(window.t, big_t, &breaks, step);

    let mut h_next = 0.0; // h at the right end of the current segment
    let mut corr = 0.0;
    for seg in segs.iter().rev() {
        let m = seg.mid();
        let (bv, dv) = (model.drift_const.eval(m), model.var_const.eval(m));
        let (beta, eps) = (model.drift_slope_r.eval(m), model.var_slope_r.eval(m));
        let cc = |u: f64| riccati.eval(big_t - u);
        let g = |u: f64| {
            let c = cc(u);
            beta * c - 0.5 * eps * c * c
        };
        let w = seg.width();
        let decay = (-theta * w).exp();
        let half_decay = (-0.5 * theta * w).exp();

        let mut hs = vec![0.0; seg.n + 1];
        hs[seg.n] = h_next;
        for j in (0..seg.n).rev() {
            let (u0, u1) = (seg.node(j), seg.node(j + 1));
            let local = w / 6.0 * (g(u0) + 4.0 * half_decay * g(0.5 * (u0 + u1)) + decay * g(u1));
            hs[j] = decay * hs[j + 1] + local;
        }

        let integrand = |j: usize| {
            let u = seg.node(j);
            let bb = vasicek_b(theta, big_t - u);
            let h = hs[j];
            let c = cc(u);
            theta * mu * h - 0.5 * sigma * sigma * (2.0 * bb * h + h * h) + bv * c - 0.5 * dv * c * c
        };
        let mut acc = integrand(0) + integrand(seg.n);
        for j in 1..seg.n {
            acc += if j % 2 == 1 { 4.0 } else { 2.0 } * integrand(j);
        }
        corr += acc * w / 3.0;
        h_next = hs[0];
    }
    (a_bar - corr, b_bar + h_next)
}
