//! Finite-difference reference solvers.
//!
//! Backward pricing equations are solved in time to maturity τ: Crank–Nicolson
//! in one space dimension, the Douglas ADI scheme (θ = ½, no mixed term) in
//! two. Both begin with four implicit-Euler half steps (Rannacher start-up) so
//! the corner mismatch between a barrier and the terminal payoff is damped.
//! Far boundaries impose a vanishing second derivative; barriers are Dirichlet.
//!
//! With refinement on, each solve runs at ×1, ×2 and ×4 resolution in space
//! and time, checks that the successive differences shrink at roughly second
//! order, and returns the Richardson-extrapolated finest value.

use crate::error::{DbondError, Result};
use crate::models::{
    Barrier, FirmModel, IntensityModel, RecoveryConvention, ShortRateModel, TimeWindow,
    ValidatedScenario,
};

use super::tridiag;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    CrankNicolson,
    Adi,
}

/// Truncation bounds and resolution of a finite-difference solve.
///
/// Unset bounds take the documented defaults: the intensity range is the
/// query point ± 10 stationary standard deviations (1.0 when that is not
/// finite) plus the drift over the horizon, `V_max = 10·V0`, and the rate
/// range is `[min(μ, r0), max(μ, r0)] ± 8·s_r/√(2θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
    pub v_max: Option<f64>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub n_p: usize,
    pub n_v: usize,
    pub n_r: usize,
    /// Time steps per year at the base level.
    pub n_t: usize,
    pub scheme: Scheme,
    pub refine: bool,
}

impl GridSpec {
    pub fn one_d() -> Self {
        Self {
            p_min: None,
            p_max: None,
            v_max: None,
            r_min: None,
            r_max: None,
            n_p: 200,
            n_v: 100,
            n_r: 100,
            n_t: 50,
            scheme: Scheme::CrankNicolson,
            refine: true,
        }
    }

    pub fn two_d() -> Self {
        Self {
            n_p: 48,
            n_v: 40,
            n_r: 32,
            n_t: 24,
            scheme: Scheme::Adi,
            ..Self::one_d()
        }
    }

    pub fn scaled(mut self, f: usize) -> Self {
        self.n_p *= f;
        self.n_v *= f;
        self.n_r *= f;
        self.n_t *= f;
        self
    }

    pub fn single_level(mut self) -> Self {
        self.refine = false;
        self
    }

    fn check(&self) -> Result<()> {
        let counts = [
            ("grid.n_p", self.n_p),
            ("grid.n_v", self.n_v),
            ("grid.n_r", self.n_r),
            ("grid.n_t", self.n_t),
        ];
        for (name, n) in counts {
            if n < 3 {
                return Err(DbondError::InvalidParameter {
                    name,
                    value: n as f64,
                    constraint: "node counts must be >= 3",
                });
            }
        }
        Ok(())
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::one_d()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdTarget {
    Price,
    Survival,
}

/// Result of a (possibly refined) solve at one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub value: f64,
    /// Raw values at ×1, ×2, ×4 resolution (one entry without refinement).
    pub levels: Vec<f64>,
    /// `log2` of the ratio of successive differences, when measurable.
    pub observed_order: Option<f64>,
}

fn combine(levels: Vec<f64>) -> Result<FdReport> {
    if levels.len() < 3 {
        return Ok(FdReport { value: levels[levels.len() - 1], levels, observed_order: None });
    }
    let (u1, u2, u4) = (levels[0], levels[1], levels[2]);
    let (d1, d2) = (u1 - u2, u2 - u4);
    let scale = u4.abs().max(1e-300);
    // differences at round-off level: nothing to extrapolate
    if d1.abs() <= 1e-10 * scale.max(1.0) && d2.abs() <= 1e-10 * scale.max(1.0) {
        return Ok(FdReport { value: u4, levels, observed_order: None });
    }
    let ratio = d1 / d2;
    if !(2.0..=8.0).contains(&ratio) {
        return Err(DbondError::NotConverged(format!(
            "refinement ratio {ratio:.3} outside [2, 8] (levels {u1:.12e}, {u2:.12e}, {u4:.12e})"
        )));
    }
    Ok(FdReport {
        value: u4 - d2 / 3.0,
        levels,
        observed_order: Some(ratio.log2()),
    })
}

/// Uniform axis with nodes `lo + i·h`, `i = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Axis {
    lo: f64,
    h: f64,
    n: usize,
}

impl Axis {
    fn x(&self, i: usize) -> f64 {
        self.lo + self.h * i as f64
    }

    /// About `n` intervals over `[lo, hi]`, spaced so that `anchor` is a node.
    fn aligned(lo: f64, hi: f64, anchor: f64, n: usize) -> Axis {
        let h0 = (hi - lo) / n as f64;
        let k = ((anchor - lo) / h0 - 1e-9).ceil().max(0.0) as usize;
        let h = if k == 0 { h0 } else { (anchor - lo) / k as f64 };
        let lo = if k == 0 { anchor } else { lo };
        let m = (((hi - anchor) / h - 1e-9).ceil().max(1.0) as usize).max(3usize.saturating_sub(k));
        Axis { lo, h, n: k + m }
    }

    fn refined(&self, f: usize) -> Axis {
        Axis { lo: self.lo, h: self.h / f as f64, n: self.n * f }
    }

    /// Stencil start and Lagrange weights for cubic interpolation at `x`.
    fn stencil(&self, x: f64) -> (usize, [f64; 4]) {
        let s = (x - self.lo) / self.h;
        let near = s.round();
        if (s - near).abs() < 1e-9 && near >= 0.0 && near <= self.n as f64 {
            let i = near as usize;
            let j0 = i.saturating_sub(1).min(self.n - 3);
            let mut w = [0.0; 4];
            w[i - j0] = 1.0;
            return (j0, w);
        }
        let i = (s.floor().max(0.0) as usize).min(self.n - 1);
        let j0 = i.saturating_sub(1).min(self.n - 3);
        let mut w = [1.0; 4];
        for (a, wa) in w.iter_mut().enumerate() {
            for b in 0..4 {
                if a != b {
                    *wa *= (s - (j0 + b) as f64) / (a as f64 - b as f64);
                }
            }
        }
        (j0, w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Side {
    Extrapolate,
    Dirichlet(f64),
}

/// `(τ_next, θ)` per step: four implicit half steps, then Crank–Nicolson.
fn time_plan(tau: f64, steps_per_year: usize, mult: usize) -> Vec<(f64, f64)> {
    let n = ((tau * steps_per_year as f64).ceil() as usize).max(4) * mult;
    let dt = tau / n as f64;
    let mut plan = Vec::with_capacity(n + 2);
    for k in 1..=4 {
        plan.push((0.5 * dt * k as f64, 1.0));
    }
    for k in 3..=n {
        plan.push((if k == n { tau } else { dt * k as f64 }, 0.5));
    }
    plan
}

/// Difference-operator row `(lower, diagonal, upper)` of `a·u'' + b·u' − g·u`.
#[inline]
fn row(coef: [f64; 3], h: f64) -> [f64; 3] {
    let [a, b, g] = coef;
    let a2 = a / (h * h);
    let b2 = b / (2.0 * h);
    [a2 - b2, -2.0 * a2 - g, a2 + b2]
}

struct LineWork {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
    scratch: Vec<f64>,
}

impl LineWork {
    fn new(n: usize) -> Self {
        Self {
            a: vec![0.0; n],
            b: vec![0.0; n],
            c: vec![0.0; n],
            d: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }

    /// Solves `(I − w·L) u = rhs` on one line of `n + 1` nodes. `rows[i]` is the
    /// operator row at node `i` and `rhs` is read at interior nodes.
    fn solve(
        &mut self,
        rows: impl Fn(usize) -> [f64; 3],
        rhs: impl Fn(usize) -> f64,
        w: f64,
        n: usize,
        lower: Side,
        upper: Side,
        mut out: impl FnMut(usize, f64),
    ) {
        let m = n - 1;
        for k in 0..m {
            let [lo, di, up] = rows(k + 1);
            self.a[k] = -w * lo;
            self.b[k] = 1.0 - w * di;
            self.c[k] = -w * up;
            self.d[k] = rhs(k + 1);
        }
        let a0 = self.a[0];
        match lower {
            Side::Extrapolate => {
                self.b[0] += 2.0 * a0;
                self.c[0] -= a0;
            }
            Side::Dirichlet(g) => self.d[0] -= a0 * g,
        }
        let cm = self.c[m - 1];
        match upper {
            Side::Extrapolate => {
                self.b[m - 1] += 2.0 * cm;
                self.a[m - 1] -= cm;
            }
            Side::Dirichlet(g) => self.d[m - 1] -= cm * g,
        }
        tridiag::solve(&self.a, &self.b, &self.c, &mut self.d[..m], &mut self.scratch);
        for k in 0..m {
            out(k + 1, self.d[k]);
        }
        let first = match lower {
            Side::Extrapolate => 2.0 * self.d[0] - self.d[1],
            Side::Dirichlet(g) => g,
        };
        let last = match upper {
            Side::Extrapolate => 2.0 * self.d[m - 1] - self.d[m - 2],
            Side::Dirichlet(g) => g,
        };
        out(0, first);
        out(n, last);
    }
}

/// One-dimensional backward problem `u_τ = a·u'' + b·u' − g·u + s`.
trait Pde1 {
    fn coef(&self, x: f64, t: f64) -> [f64; 3];
    fn source(&self, _x: f64, _tau: f64) -> f64 {
        0.0
    }
    fn lower(&self, _tau: f64) -> Side {
        Side::Extrapolate
    }
    fn upper(&self, _tau: f64) -> Side {
        Side::Extrapolate
    }
    fn terminal(&self, x: f64) -> f64;
}

fn solve_1d<P: Pde1>(
    pde: &P,
    ax: Axis,
    plan: &[(f64, f64)],
    maturity: f64,
    mut record: Option<&mut Vec<Vec<f64>>>,
) -> Vec<f64> {
    let n = ax.n;
    let mut u: Vec<f64> = (0..=n).map(|i| pde.terminal(ax.x(i))).collect();
    if let Side::Dirichlet(g) = pde.lower(0.0) {
        u[0] = g;
    }
    if let Side::Dirichlet(g) = pde.upper(0.0) {
        u[n] = g;
    }
    if let Some(rec) = record.as_deref_mut() {
        rec.push(u.clone());
    }
    let mut rows = vec![[0.0; 3]; n + 1];
    let mut rhs = vec![0.0; n + 1];
    let mut next = vec![0.0; n + 1];
    let mut work = LineWork::new(n + 1);
    let mut tau = 0.0;
    for &(tau_next, theta) in plan {
        let dt = tau_next - tau;
        let t_mid = maturity - 0.5 * (tau + tau_next);
        for (i, r) in rows.iter_mut().enumerate() {
            *r = row(pde.coef(ax.x(i), t_mid), ax.h);
        }
        for i in 1..n {
            let [lo, di, up] = rows[i];
            let lu = lo * u[i - 1] + di * u[i] + up * u[i + 1];
            let x = ax.x(i);
            let s = theta * pde.source(x, tau_next) + (1.0 - theta) * pde.source(x, tau);
            rhs[i] = u[i] + (1.0 - theta) * dt * lu + dt * s;
        }
        work.solve(
            |i| rows[i],
            |i| rhs[i],
            theta * dt,
            n,
            pde.lower(tau_next),
            pde.upper(tau_next),
            |i, v| next[i] = v,
        );
        std::mem::swap(&mut u, &mut next);
        if let Some(rec) = record.as_deref_mut() {
            rec.push(u.clone());
        }
        tau = tau_next;
    }
    u
}

/// Two-dimensional backward problem with operators split along x and y.
/// Each direction's coefficients carry their share of the reaction term.
trait Pde2 {
    fn x_coef(&self, x: f64, y: f64, t: f64) -> [f64; 3];
    fn y_coef(&self, x: f64, y: f64, t: f64) -> [f64; 3];
    /// Source at x-node `i`, y-value `y`, time level `level` (τ = `tau`).
    fn source(&self, _i: usize, _y: f64, _level: usize, _tau: f64) -> f64 {
        0.0
    }
    fn x_lower(&self, _tau: f64) -> Side {
        Side::Extrapolate
    }
    fn terminal(&self, x: f64, y: f64) -> f64;
}

fn douglas_2d<P: Pde2>(pde: &P, ax: Axis, ay: Axis, plan: &[(f64, f64)], maturity: f64) -> Vec<f64> {
    let (nx, ny) = (ax.n, ay.n);
    let w = ny + 1;
    let size = (nx + 1) * w;
    let mut u = vec![0.0; size];
    for i in 0..=nx {
        for j in 0..=ny {
            u[i * w + j] = pde.terminal(ax.x(i), ay.x(j));
        }
    }
    if let Side::Dirichlet(g) = pde.x_lower(0.0) {
        u[..w].iter_mut().for_each(|v| *v = g);
    }
    let mut xr = vec![[0.0; 3]; size];
    let mut yr = vec![[0.0; 3]; size];
    let mut lxu = vec![0.0; size];
    let mut lyu = vec![0.0; size];
    let mut y0 = vec![0.0; size];
    let mut y1 = vec![0.0; size];
    let mut s_prev = vec![0.0; size];
    let mut s_next = vec![0.0; size];
    for i in 0..=nx {
        for j in 0..=ny {
            s_prev[i * w + j] = pde.source(i, ay.x(j), 0, 0.0);
        }
    }
    let mut work = LineWork::new(nx.max(ny) + 1);
    let mut tau = 0.0;
    for (step, &(tau_next, theta)) in plan.iter().enumerate() {
        let dt = tau_next - tau;
        let t_mid = maturity - 0.5 * (tau + tau_next);
        for i in 0..=nx {
            let x = ax.x(i);
            for j in 0..=ny {
                let y = ay.x(j);
                let k = i * w + j;
                xr[k] = row(pde.x_coef(x, y, t_mid), ax.h);
                yr[k] = row(pde.y_coef(x, y, t_mid), ay.h);
                s_next[k] = pde.source(i, y, step + 1, tau_next);
            }
        }
        for i in 1..nx {
            for j in 1..ny {
                let k = i * w + j;
                let [a, b, c] = xr[k];
                lxu[k] = a * u[k - w] + b * u[k] + c * u[k + w];
                let [a, b, c] = yr[k];
                lyu[k] = a * u[k - 1] + b * u[k] + c * u[k + 1];
                let s = theta * s_next[k] + (1.0 - theta) * s_prev[k];
                y0[k] = u[k] + dt * (lxu[k] + lyu[k] + s);
            }
        }
        let wdt = theta * dt;
        let lower = pde.x_lower(tau_next);
        for j in 1..ny {
            work.solve(
                |i| xr[i * w + j],
                |i| y0[i * w + j] - wdt * lxu[i * w + j],
                wdt,
                nx,
                lower,
                Side::Extrapolate,
                |i, v| y1[i * w + j] = v,
            );
        }
        for i in 1..nx {
            let base = i * w;
            work.solve(
                |j| yr[base + j],
                |j| y1[base + j] - wdt * lyu[base + j],
                wdt,
                ny,
                Side::Extrapolate,
                Side::Extrapolate,
                |j, v| u[base + j] = v,
            );
        }
        match lower {
            Side::Dirichlet(g) => u[..w].iter_mut().for_each(|v| *v = g),
            Side::Extrapolate => {
                for j in 0..=ny {
                    u[j] = 2.0 * u[w + j] - u[2 * w + j];
                }
            }
        }
        for j in 0..=ny {
            u[nx * w + j] = 2.0 * u[(nx - 1) * w + j] - u[(nx - 2) * w + j];
        }
        std::mem::swap(&mut s_prev, &mut s_next);
        tau = tau_next;
    }
    u
}

fn interp_1d(ax: &Axis, u: &[f64], x: f64) -> f64 {
    let (j0, wts) = ax.stencil(x);
    (0..4).map(|k| wts[k] * u[j0 + k]).sum()
}

fn interp_2d(ax: &Axis, ay: &Axis, u: &[f64], x: f64, y: f64) -> f64 {
    let w = ay.n + 1;
    let (i0, wx) = ax.stencil(x);
    let (j0, wy) = ay.stencil(y);
    let mut acc = 0.0;
    for a in 0..4 {
        if wx[a] == 0.0 {
            continue;
        }
        let mut line = 0.0;
        for b in 0..4 {
            line += wy[b] * u[(i0 + a) * w + j0 + b];
        }
        acc += wx[a] * line;
    }
    acc
}

fn ensure_uncorrelated(v: &ValidatedScenario) -> Result<()> {
    let c = v.correlations;
    if c.rate_intensity != 0.0 || c.firm_intensity != 0.0 {
        return Err(DbondError::UnsupportedCase(
            "the finite-difference solvers have no mixed-derivative term; use Monte Carlo".into(),
        ));
    }
    Ok(())
}

/// Default intensity range around the query points.
fn p_bounds(model: &IntensityModel, tau: f64, queries: &[f64], grid: &GridSpec) -> (f64, f64) {
    let c = model.drift_slope_p;
    let e = model.var_slope_p;
    let d_max = model.var_const.max_abs();
    let b_max = model.drift_const.max_abs();
    let std = if c > 0.0 {
        ((d_max + e * (b_max / c).max(0.0)) / (2.0 * c)).sqrt()
    } else {
        f64::NAN
    };
    let std = if std.is_finite() && std > 0.0 { std } else { 1.0 };
    let drift = b_max * tau;
    let qmin = queries.iter().copied().fold(f64::INFINITY, f64::min);
    let qmax = queries.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = qmin - 10.0 * std - drift;
    if e > 0.0 {
        // below −d/e the variance would be negative
        lo = lo.max(-model.var_const.min_value() / e);
    }
    let hi = qmax + 10.0 * std + drift;
    (grid.p_min.unwrap_or(lo), grid.p_max.unwrap_or(hi))
}

fn check_contains(name: &'static str, lo: f64, hi: f64, q: f64, allow_lo: bool) -> Result<()> {
    let ok_lo = if allow_lo { q >= lo } else { q > lo };
    if ok_lo && q < hi {
        Ok(())
    } else {
        Err(DbondError::InvalidParameter {
            name,
            value: q,
            constraint: "truncation bounds must strictly contain the query point",
        })
    }
}

fn levels(grid: &GridSpec) -> &'static [usize] {
    if grid.refine {
        &[1, 2, 4]
    } else {
        &[1]
    }
}

struct Intensity1d<'a> {
    model: &'a IntensityModel,
    r: f64,
    kill: f64,
    recovery_source: f64,
}

impl Pde1 for Intensity1d<'_> {
    fn coef(&self, p: f64, t: f64) -> [f64; 3] {
        let m = self.model;
        let var = (m.var_const.eval(t) + m.var_slope_p * p).max(0.0);
        [0.5 * var, m.drift_const.eval(t) - m.drift_slope_p * p, self.r + self.kill * p]
    }
    fn source(&self, p: f64, tau: f64) -> f64 {
        self.recovery_source * p * (-self.r * tau).exp()
    }
    fn terminal(&self, _p: f64) -> f64 {
        1.0
    }
}

/// Crank–Nicolson price in the intensity alone, at a constant short rate and
/// without a barrier, under either recovery convention.
pub fn fd_price_1d(v: &ValidatedScenario, grid: &GridSpec) -> Result<f64> {
    Ok(fd_report_1d(v, grid)?.value)
}

pub fn fd_report_1d(v: &ValidatedScenario, grid: &GridSpec) -> Result<FdReport> {
    grid.check()?;
    ensure_uncorrelated(v)?;
    let ShortRateModel::Constant { r } = v.rate else {
        return Err(DbondError::UnsupportedRegime(
            "the one-dimensional solver needs a constant short rate".into(),
        ));
    };
    if v.barrier() != Barrier::None {
        return Err(DbondError::UnsupportedRegime(
            "the one-dimensional solver takes no barrier".into(),
        ));
    }
    let recovery = v.recovery();
    let (kill, recovery_source) = match v.default_spec.convention {
        RecoveryConvention::FaceValue => (1.0, recovery),
        RecoveryConvention::MarketPrice => (1.0 - recovery, 0.0),
    };
    let tau = v.window.tau();
    if tau == 0.0 {
        return Ok(FdReport { value: 1.0, levels: vec![1.0], observed_order: None });
    }
    let pde = Intensity1d { model: &v.intensity, r, kill, recovery_source };
    let (lo, hi) = p_bounds(&v.intensity, tau, &[v.p0], grid);
    check_contains("grid.p_max", lo, hi, v.p0, v.intensity.var_slope_p > 0.0)?;
    let base = Axis::aligned(lo, hi, v.p0, grid.n_p);
    let vals = levels(grid)
        .iter()
        .map(|&f| {
            let ax = base.refined(f);
            let plan = time_plan(tau, grid.n_t, f);
            let u = solve_1d(&pde, ax, &plan, v.window.maturity, None);
            interp_1d(&ax, &u, v.p0)
        })
        .collect();
    combine(vals)
}

struct Firm1d {
    var: f64,
    drift: f64,
}

impl Pde1 for Firm1d {
    fn coef(&self, _y: f64, _t: f64) -> [f64; 3] {
        [0.5 * self.var, self.drift, 0.0]
    }
    fn lower(&self, _tau: f64) -> Side {
        Side::Dirichlet(0.0)
    }
    fn terminal(&self, y: f64) -> f64 {
        if y > 0.0 {
            1.0
        } else {
            0.0
        }
    }
}

/// Log-coordinates `(y0, drift of y)` for a constant or discounted barrier.
fn barrier_coords(firm: &FirmModel, r: f64, barrier: &Barrier, tau: f64) -> Result<(f64, f64)> {
    let s2 = firm.volatility * firm.volatility;
    match *barrier {
        Barrier::Constant { level } => Ok(((firm.value / level).ln(), r - firm.dividend - 0.5 * s2)),
        Barrier::Discounted { level } => {
            Ok(((firm.value / level).ln() + r * tau, -firm.dividend - 0.5 * s2))
        }
        _ => Err(DbondError::UnsupportedRegime(
            "the firm-value solvers take a fixed or discounted barrier".into(),
        )),
    }
}

/// Crank–Nicolson barrier survival `f(V, t)` in `y = ln(V/V_b(t))`.
pub fn fd_barrier_survival_1d(
    firm: &FirmModel,
    r: f64,
    barrier: &Barrier,
    window: &TimeWindow,
    grid: &GridSpec,
) -> Result<f64> {
    grid.check()?;
    window.check()?;
    let tau = window.tau();
    let (y0, drift) = barrier_coords(firm, r, barrier, tau)?;
    if y0 <= 0.0 {
        return Err(DbondError::AlreadyDefaulted {
            value: firm.value,
            barrier: firm.value * (-y0).exp(),
        });
    }
    if tau == 0.0 {
        return Ok(1.0);
    }
    let y_max = y0 + (grid.v_max.unwrap_or(10.0 * firm.value) / firm.value).ln();
    check_contains("grid.v_max", 0.0, y_max, y0, false)?;
    let pde = Firm1d { var: firm.volatility * firm.volatility, drift };
    let base = Axis::aligned(0.0, y_max, y0, grid.n_v);
    let vals = levels(grid)
        .iter()
        .map(|&f| {
            let ax = base.refined(f);
            let u = solve_1d(&pde, ax, &time_plan(tau, grid.n_t, f), window.maturity, None);
            interp_1d(&ax, &u, y0)
        })
        .collect();
    Ok(combine(vals)?.value)
}

struct Zcb1d {
    theta: f64,
    mu: f64,
    sigma: f64,
}

impl Pde1 for Zcb1d {
    fn coef(&self, r: f64, _t: f64) -> [f64; 3] {
        [0.5 * self.sigma * self.sigma, self.theta * (self.mu - r), r]
    }
    fn terminal(&self, _r: f64) -> f64 {
        1.0
    }
}

fn r_bounds(rate: &ShortRateModel, grid: &GridSpec) -> Result<(f64, f64, f64, f64, f64)> {
    let ShortRateModel::Vasicek { theta, mu, sigma, r0 } = *rate else {
        return Err(DbondError::UnsupportedRegime(
            "the rate-plane solvers need a Vasicek short rate".into(),
        ));
    };
    let spread = 8.0 * (sigma / (2.0 * theta).sqrt()).max(1e-3);
    let lo = grid.r_min.unwrap_or(mu.min(r0) - spread);
    let hi = grid.r_max.unwrap_or(mu.max(r0) + spread);
    Ok((theta, mu, sigma, lo, hi))
}

/// Crank–Nicolson value of the default-free Vasicek bond.
pub fn fd_zcb_1d(rate: &ShortRateModel, window: &TimeWindow, grid: &GridSpec) -> Result<f64> {
    grid.check()?;
    window.check()?;
    let (theta, mu, sigma, lo, hi) = r_bounds(rate, grid)?;
    let r0 = rate.current_rate();
    check_contains("grid.r_max", lo, hi, r0, false)?;
    let tau = window.tau();
    if tau == 0.0 {
        return Ok(1.0);
    }
    let pde = Zcb1d { theta, mu, sigma };
    let base = Axis::aligned(lo, hi, r0, grid.n_r);
    let vals = levels(grid)
        .iter()
        .map(|&f| {
            let ax = base.refined(f);
            let u = solve_1d(&pde, ax, &time_plan(tau, grid.n_t, f), window.maturity, None);
            interp_1d(&ax, &u, r0)
        })
        .collect();
    Ok(combine(vals)?.value)
}

/// `(y, p)` plane: firm value over a constant or discounted barrier plus intensity.
struct FirmIntensity<'a> {
    model: &'a IntensityModel,
    r: f64,
    var_v: f64,
    drift_y: f64,
    price: bool,
    recovery: f64,
}

impl FirmIntensity<'_> {
    fn kill(&self, p: f64) -> f64 {
        if self.price {
            self.r + p
        } else {
            p
        }
    }
}

impl Pde2 for FirmIntensity<'_> {
    fn x_coef(&self, _y: f64, p: f64, _t: f64) -> [f64; 3] {
        [0.5 * self.var_v, self.drift_y, 0.5 * self.kill(p)]
    }
    fn y_coef(&self, _y: f64, p: f64, t: f64) -> [f64; 3] {
        let m = self.model;
        let var = (m.var_const.eval(t) + m.var_slope_p * p).max(0.0);
        [0.5 * var, m.drift_const.eval(t) - m.drift_slope_p * p, 0.5 * self.kill(p)]
    }
    fn source(&self, _i: usize, p: f64, _level: usize, tau: f64) -> f64 {
        if self.price {
            self.recovery * p * (-self.r * tau).exp()
        } else {
            0.0
        }
    }
    fn x_lower(&self, tau: f64) -> Side {
        Side::Dirichlet(if self.price { self.recovery * (-self.r * tau).exp() } else { 0.0 })
    }
    fn terminal(&self, y: f64, _p: f64) -> f64 {
        if y > 0.0 {
            1.0
        } else if self.price {
            self.recovery
        } else {
            0.0
        }
    }
}

/// `(r, p)` plane under a Vasicek rate.
struct RateIntensity<'a> {
    model: &'a IntensityModel,
    theta: f64,
    mu: f64,
    sigma: f64,
    rate_kill: f64,
    p_kill: f64,
    recovery: f64,
    /// Default-free bond per time level and r-node, for the face-value source.
    zcb: Option<Vec<Vec<f64>>>,
}

impl Pde2 for RateIntensity<'_> {
    fn x_coef(&self, r: f64, p: f64, _t: f64) -> [f64; 3] {
        let g = self.rate_kill * r + self.p_kill * p;
        [0.5 * self.sigma * self.sigma, self.theta * (self.mu - r), 0.5 * g]
    }
    fn y_coef(&self, r: f64, p: f64, t: f64) -> [f64; 3] {
        let m = self.model;
        let g = self.rate_kill * r + self.p_kill * p;
        let var = (m.var_const.eval(t) + m.var_slope_p * p + m.var_slope_r.eval(t) * r).max(0.0);
        let drift = m.drift_const.eval(t) - m.drift_slope_p * p + m.drift_slope_r.eval(t) * r;
        [0.5 * var, drift, 0.5 * g]
    }
    fn source(&self, i: usize, p: f64, level: usize, _tau: f64) -> f64 {
        match &self.zcb {
            Some(z) => self.recovery * p * z[level][i],
            None => 0.0,
        }
    }
    fn terminal(&self, _r: f64, _p: f64) -> f64 {
        1.0
    }
}

/// ADI price at `(V0, p0)` or `(r0, p0)`.
pub fn fd_price_2d(v: &ValidatedScenario, grid: &GridSpec) -> Result<f64> {
    let x0 = match v.rate {
        ShortRateModel::Vasicek { r0, .. } => r0,
        ShortRateModel::Constant { .. } => v.firm.map(|f| f.value).unwrap_or(f64::NAN),
    };
    Ok(fd_2d(v, grid, FdTarget::Price, &[(x0, v.p0)])?[0].value)
}

/// ADI no-default probability at `(V0, p0)` or `(r0, p0)`.
pub fn fd_survival_2d(v: &ValidatedScenario, grid: &GridSpec) -> Result<f64> {
    let x0 = match v.rate {
        ShortRateModel::Vasicek { r0, .. } => r0,
        ShortRateModel::Constant { .. } => v.firm.map(|f| f.value).unwrap_or(f64::NAN),
    };
    Ok(fd_2d(v, grid, FdTarget::Survival, &[(x0, v.p0)])?[0].value)
}

/// ADI solve queried at several `(x, p)` points, where `x` is the firm value
/// (barrier problems) or the short rate (Vasicek problems). The grid is
/// aligned to the first point; the others are read by cubic interpolation.
pub fn fd_2d(
    v: &ValidatedScenario,
    grid: &GridSpec,
    target: FdTarget,
    points: &[(f64, f64)],
) -> Result<Vec<FdReport>> {
    grid.check()?;
    ensure_uncorrelated(v)?;
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let tau = v.window.tau();
    let maturity = v.window.maturity;
    if tau == 0.0 {
        return Ok(points
            .iter()
            .map(|_| FdReport { value: 1.0, levels: vec![1.0], observed_order: None })
            .collect());
    }
    let ps: Vec<f64> = points.iter().map(|q| q.1).collect();
    let (plo, phi) = p_bounds(&v.intensity, tau, &ps, grid);
    let sqrt_family = v.intensity.var_slope_p > 0.0;
    for &p in &ps {
        check_contains("grid.p_max", plo, phi, p, sqrt_family)?;
    }
    let ay_base = Axis::aligned(plo, phi, ps[0], grid.n_p);

    let mut per_level: Vec<Vec<f64>> = vec![Vec::new(); points.len()];
    match (v.barrier(), v.rate) {
        (b @ (Barrier::Constant { .. } | Barrier::Discounted { .. }), ShortRateModel::Constant { r }) => {
            if v.default_spec.convention != RecoveryConvention::FaceValue {
                return Err(DbondError::UnsupportedRegime(
                    "barrier problems use face-value recovery".into(),
                ));
            }
            let firm = v.firm.expect("validated barrier scenario has a firm");
            let (_, drift_y) = barrier_coords(&firm, r, &b, tau)?;
            let ys: Vec<f64> = points
                .iter()
                .map(|&(vq, _)| {
                    let f = FirmModel { value: vq, ..firm };
                    barrier_coords(&f, r, &b, tau).map(|c| c.0)
                })
                .collect::<Result<_>>()?;
            let y_max = ys[0] + (grid.v_max.unwrap_or(10.0 * firm.value) / points[0].0).ln();
            for &y in &ys {
                if y <= 0.0 {
                    return Err(DbondError::AlreadyDefaulted { value: firm.value, barrier: f64::NAN });
                }
                check_contains("grid.v_max", 0.0, y_max, y, false)?;
            }
            let pde = FirmIntensity {
                model: &v.intensity,
                r,
                var_v: firm.volatility * firm.volatility,
                drift_y,
                price: target == FdTarget::Price,
                recovery: v.recovery(),
            };
            let ax_base = Axis::aligned(0.0, y_max, ys[0], grid.n_v);
            for &f in levels(grid) {
                let (ax, ay) = (ax_base.refined(f), ay_base.refined(f));
                let u = douglas_2d(&pde, ax, ay, &time_plan(tau, grid.n_t, f), maturity);
                for (k, (&y, &p)) in ys.iter().zip(&ps).enumerate() {
                    per_level[k].push(interp_2d(&ax, &ay, &u, y, p));
                }
            }
        }
        (Barrier::None, ShortRateModel::Vasicek { .. }) => {
            let (theta, mu, sigma, rlo, rhi) = r_bounds(&v.rate, grid)?;
            for &(r, _) in points {
                check_contains("grid.r_max", rlo, rhi, r, false)?;
            }
            let ax_base = Axis::aligned(rlo, rhi, points[0].0, grid.n_r);
            let recovery = v.recovery();
            let (rate_kill, p_kill, face) = match (target, v.default_spec.convention) {
                (FdTarget::Survival, _) => (0.0, 1.0, false),
                (FdTarget::Price, RecoveryConvention::FaceValue) => (1.0, 1.0, true),
                (FdTarget::Price, RecoveryConvention::MarketPrice) => (1.0, 1.0 - recovery, false),
            };
            for &f in levels(grid) {
                let (ax, ay) = (ax_base.refined(f), ay_base.refined(f));
                let plan = time_plan(tau, grid.n_t, f);
                let zcb = face.then(|| {
                    let mut rec = Vec::with_capacity(plan.len() + 1);
                    solve_1d(&Zcb1d { theta, mu, sigma }, ax, &plan, maturity, Some(&mut rec));
                    rec
                });
                let pde = RateIntensity {
                    model: &v.intensity,
                    theta,
                    mu,
                    sigma,
                    rate_kill,
                    p_kill,
                    recovery,
                    zcb,
                };
                let u = douglas_2d(&pde, ax, ay, &plan, maturity);
                for (k, &(r, p)) in points.iter().enumerate() {
                    per_level[k].push(interp_2d(&ax, &ay, &u, r, p));
                }
            }
        }
        _ => {
            return Err(DbondError::UnsupportedRegime(
                "no two-dimensional finite-difference problem for this regime".into(),
            ))
        }
    }
    per_level.into_iter().map(combine).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned_axis_hits_anchor() {
        let ax = Axis::aligned(-1.2, 3.4, 0.3, 100);
        let k = ((0.3 - ax.lo) / ax.h).round() as usize;
        assert!((ax.x(k) - 0.3).abs() < 1e-14);
        assert!(ax.x(ax.n) >= 3.4 - 1e-12);
        let fine = ax.refined(4);
        assert!((fine.x(4 * k) - 0.3).abs() < 1e-14);
    }

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let ax = Axis { lo: 0.0, h: 0.1, n: 20 };
        let u: Vec<f64> = (0..=20).map(|i| {
            let x = ax.x(i);
            x * x * x - 2.0 * x + 1.0
        }).collect();
        for &x in &[0.03, 0.55, 1.97, 1.0] {
            let want = x * x * x - 2.0 * x + 1.0;
            assert!((interp_1d(&ax, &u, x) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn plan_covers_horizon() {
        let plan = time_plan(1.5, 10, 2);
        assert_eq!(plan.last().unwrap().0, 1.5);
        assert_eq!(plan[..4].iter().filter(|s| s.1 == 1.0).count(), 4);
        assert!(plan.windows(2).all(|w| w[1].0 > w[0].0));
    }

    #[test]
    fn ratio_test_flags_divergence() {
        assert!(matches!(combine(vec![1.0, 1.1, 1.3]), Err(DbondError::NotConverged(_))));
        let r = combine(vec![1.04, 1.01, 1.0025]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!((r.observed_order.unwrap() - 2.0).abs() < 1e-9);
    }
}
