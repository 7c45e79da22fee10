//! Mean-field theory for two random-regular competing networks.
//!
//! Each network's fraction of failed nodes `a` satisfies
//!
//! ```text
//! a_S = p*_S + p2_S (1 - p*_S) E_S(a_S, a_W)
//! a_W = p*_W + p2_W (1 - p*_W) E_W(a_W, a_S)
//! ```
//!
//! where `E_X` is the probability that a node of X has at most `t_X` active
//! neighbours when each of its own-network neighbours is failed with
//! probability `a_X` and each cross neighbour with probability `a_other`.
//! Branches of the bistable region are selected by warm start.

use crate::error::MeanFieldError;

/// Average fraction of internally failed nodes, `1 - exp(-p1 tau)`.
pub fn p_star(p1: f64, tau: f64) -> f64 {
    -(-p1 * tau).exp_m1()
}

/// Degrees above this use log-space binomial coefficients.
const EXACT_BINOMIAL_MAX: u32 = 30;

fn choose_exact(n: u32, k: u32) -> f64 {
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut c = 1u64;
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c as f64
}

fn ln_choose(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64).ln() - (i as f64).ln()).sum()
}

/// `pmf[i]` = probability that exactly `i` of `n` neighbours are active when
/// each is failed independently with probability `a`.
pub fn active_pmf(n: u32, a: f64) -> Vec<f64> {
    let q = 1.0 - a;
    if a <= 0.0 || q <= 0.0 {
        let mut pmf = vec![0.0; n as usize + 1];
        pmf[if a <= 0.0 { n as usize } else { 0 }] = 1.0;
        return pmf;
    }
    (0..=n)
        .map(|i| {
            let fail = (n - i) as i32;
            if n <= EXACT_BINOMIAL_MAX {
                choose_exact(n, i) * q.powi(i as i32) * a.powi(fail)
            } else {
                (ln_choose(n, i) + i as f64 * q.ln() + fail as f64 * a.ln()).exp()
            }
        })
        .collect()
}

/// Probability that a node with `k_self` own-network and `k_other` cross
/// neighbours has at most `t_abs` active neighbours in total.
pub fn crit_prob(a_self: f64, a_other: f64, k_self: u32, k_other: u32, t_abs: u32) -> f64 {
    let own = active_pmf(k_self, a_self);
    let cross = active_pmf(k_other, a_other);
    let mut e = 0.0;
    for j in 0..=(t_abs.min(k_self + k_other) as usize) {
        let lo = j.saturating_sub(k_other as usize);
        let hi = j.min(k_self as usize);
        for i in lo..=hi {
            e += own[i] * cross[j - i];
        }
    }
    e.min(1.0)
}

/// Probability that at most `m` of `k` neighbours are active, the
/// single-network tail used by the independent-events approximation.
pub fn tail_prob(a: f64, k: u32, m: u32) -> f64 {
    active_pmf(k, a)[..=(m.min(k) as usize)].iter().sum::<f64>().min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldSystem {
    pub k_s: u32,
    pub k_w: u32,
    /// Cross neighbours of each S node.
    pub k_ws: u32,
    /// Cross neighbours of each W node.
    pub k_sw: u32,
    /// Absolute thresholds (active-neighbour counts).
    pub t_s: u32,
    pub t_w: u32,
    pub p2_s: f64,
    pub p2_w: f64,
    pub pstar_s: f64,
    pub pstar_w: f64,
}

impl MeanFieldSystem {
    pub fn validate(&self) -> Result<(), MeanFieldError> {
        for (field, value) in [
            ("p2_s", self.p2_s),
            ("p2_w", self.p2_w),
            ("pstar_s", self.pstar_s),
            ("pstar_w", self.pstar_w),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(MeanFieldError::Param {
                    field,
                    value,
                    reason: "must lie in [0, 1]",
                });
            }
        }
        if self.t_s > self.k_s + self.k_ws {
            return Err(MeanFieldError::Param {
                field: "t_s",
                value: self.t_s as f64,
                reason: "exceeds k_s + k_ws",
            });
        }
        if self.t_w > self.k_w + self.k_sw {
            return Err(MeanFieldError::Param {
                field: "t_w",
                value: self.t_w as f64,
                reason: "exceeds k_w + k_sw",
            });
        }
        Ok(())
    }

    /// Fractional thresholds `t / total degree`.
    pub fn fractional_thresholds(&self) -> (f64, f64) {
        (
            self.t_s as f64 / (self.k_s + self.k_ws) as f64,
            self.t_w as f64 / (self.k_w + self.k_sw) as f64,
        )
    }

    pub fn e_s(&self, a_s: f64, a_w: f64) -> f64 {
        crit_prob(a_s, a_w, self.k_s, self.k_ws, self.t_s)
    }

    pub fn e_w(&self, a_s: f64, a_w: f64) -> f64 {
        crit_prob(a_w, a_s, self.k_w, self.k_sw, self.t_w)
    }

    /// Right-hand side of the self-consistency equations.
    pub fn map(&self, a_s: f64, a_w: f64) -> (f64, f64) {
        (
            self.pstar_s + self.p2_s * (1.0 - self.pstar_s) * self.e_s(a_s, a_w),
            self.pstar_w + self.p2_w * (1.0 - self.pstar_w) * self.e_w(a_s, a_w),
        )
    }

    pub fn residual(&self, a_s: f64, a_w: f64) -> f64 {
        let (m_s, m_w) = self.map(a_s, a_w);
        (m_s - a_s).abs().max((m_w - a_w).abs())
    }

    pub fn with_control(mut self, control: Control, value: f64) -> Self {
        match control {
            Control::PstarS => self.pstar_s = value,
            Control::PstarW => self.pstar_w = value,
            Control::P2S => self.p2_s = value,
            Control::P2W => self.p2_w = value,
            Control::P2 => {
                self.p2_s = value;
                self.p2_w = value;
            }
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Weight of the new iterate: `a <- (1 - damping) a + damping F(a)`.
    pub damping: f64,
    pub tolerance: f64,
    pub max_iter: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            damping: 0.5,
            tolerance: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub a_s: f64,
    pub a_w: f64,
    pub residual: f64,
    pub iterations: u64,
    pub converged: bool,
}

fn picard(
    map: impl Fn(f64, f64) -> (f64, f64),
    init: (f64, f64),
    opts: &SolverOptions,
) -> FixedPoint {
    let (mut a_s, mut a_w) = init;
    let lambda = opts.damping;
    let mut iterations = 0;
    loop {
        let (m_s, m_w) = map(a_s, a_w);
        let residual = (m_s - a_s).abs().max((m_w - a_w).abs());
        if residual < opts.tolerance || iterations >= opts.max_iter {
            return FixedPoint {
                a_s,
                a_w,
                residual,
                iterations,
                converged: residual < opts.tolerance,
            };
        }
        a_s += lambda * (m_s - a_s);
        a_w += lambda * (m_w - a_w);
        iterations += 1;
    }
}

fn check_init(init: (f64, f64)) -> Result<(), MeanFieldError> {
    for (field, value) in [("init.a_s", init.0), ("init.a_w", init.1)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(MeanFieldError::Param {
                field,
                value,
                reason: "must lie in [0, 1]",
            });
        }
    }
    Ok(())
}

/// Damped Picard iteration from `init`. Hitting `max_iter` returns the last
/// iterate with `converged = false`.
pub fn fixed_point(
    system: &MeanFieldSystem,
    init: (f64, f64),
    opts: &SolverOptions,
) -> Result<FixedPoint, MeanFieldError> {
    system.validate()?;
    check_init(init)?;
    Ok(picard(|s, w| system.map(s, w), init, opts))
}

/// Parameter swept along a hysteresis trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    PstarS,
    PstarW,
    P2S,
    P2W,
    /// Both external failure probabilities together.
    P2,
}

impl Control {
    pub fn name(self) -> &'static str {
        match self {
            Control::PstarS => "pstar_S",
            Control::PstarW => "pstar_W",
            Control::P2S => "p2_S",
            Control::P2W => "p2_W",
            Control::P2 => "p2",
        }
    }

    pub fn parse(name: &str) -> Option<Control> {
        [Control::PstarS, Control::PstarW, Control::P2S, Control::P2W, Control::P2]
            .into_iter()
            .find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveSource {
    MeanField,
    Sim,
}

impl CurveSource {
    pub fn name(self) -> &'static str {
        match self {
            CurveSource::MeanField => "meanfield",
            CurveSource::Sim => "sim",
        }
    }
}

/// One point of a hysteresis branch. Simulation curves carry tail-averaged
/// fractions and always report `converged = true` with a NaN residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub control: f64,
    pub a_s: f64,
    pub a_w: f64,
    pub converged: bool,
    pub residual: f64,
    pub iterations: u64,
}

impl CurvePoint {
    pub fn f_s(&self) -> f64 {
        1.0 - self.a_s
    }

    pub fn f_w(&self) -> f64 {
        1.0 - self.a_w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisCurve {
    pub control: String,
    pub source: CurveSource,
    /// Ordered by increasing control.
    pub ascending: Vec<CurvePoint>,
    /// Ordered by decreasing control, starting at the top of the grid.
    pub descending: Vec<CurvePoint>,
}

impl HysteresisCurve {
    pub fn all_converged(&self) -> bool {
        self.ascending.iter().chain(&self.descending).all(|p| p.converged)
    }
}

pub(crate) fn check_grid(grid: &[f64], min: usize) -> Result<(), MeanFieldError> {
    if grid.len() < min || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MeanFieldError::Grid { min });
    }
    Ok(())
}

/// Trace both branches: ascending from the all-active state with warm
/// starts, then descending from the last ascending solution.
pub fn trace_hysteresis(
    system: &MeanFieldSystem,
    control: Control,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<HysteresisCurve, MeanFieldError> {
    check_grid(grid, 1)?;
    for &value in grid {
        system.with_control(control, value).validate()?;
    }
    let solve = |value: f64, init: (f64, f64)| {
        let sys = system.with_control(control, value);
        let fp = picard(|s, w| sys.map(s, w), init, opts);
        CurvePoint {
            control: value,
            a_s: fp.a_s,
            a_w: fp.a_w,
            converged: fp.converged,
            residual: fp.residual,
            iterations: fp.iterations,
        }
    };
    let mut ascending = Vec::with_capacity(grid.len());
    let mut at = (0.0, 0.0);
    for &value in grid {
        let p = solve(value, at);
        at = (p.a_s, p.a_w);
        ascending.push(p);
    }
    let mut descending = Vec::with_capacity(grid.len());
    for &value in grid.iter().rev() {
        let p = solve(value, at);
        at = (p.a_s, p.a_w);
        descending.push(p);
    }
    Ok(HysteresisCurve {
        control: control.name().to_string(),
        source: CurveSource::MeanField,
        ascending,
        descending,
    })
}

pub const DEFAULT_JUMP_FLOOR: f64 = 0.2;

/// Control value at the largest single-step jump of one series, or `None`
/// when no jump reaches `floor`. The value reported is the control of the
/// point after the jump.
pub fn largest_jump(points: &[CurvePoint], value: impl Fn(&CurvePoint) -> f64, floor: f64) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for w in points.windows(2) {
        let jump = (value(&w[1]) - value(&w[0])).abs();
        if jump >= floor && best.is_none_or(|(b, _)| jump > b) {
            best = Some((jump, w[1].control));
        }
    }
    best.map(|(_, c)| c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSpinodals {
    pub s: Option<f64>,
    pub w: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinodals {
    pub ascending: BranchSpinodals,
    pub descending: BranchSpinodals,
}

pub fn spinodal_detect(curve: &HysteresisCurve, floor: f64) -> Result<Spinodals, MeanFieldError> {
    if curve.ascending.len() < 3 || curve.descending.len() < 3 {
        return Err(MeanFieldError::Grid { min: 3 });
    }
    let branch = |pts: &[CurvePoint]| BranchSpinodals {
        s: largest_jump(pts, |p| p.a_s, floor),
        w: largest_jump(pts, |p| p.a_w, floor),
    };
    Ok(Spinodals {
        ascending: branch(&curve.ascending),
        descending: branch(&curve.descending),
    })
}

/// Longest contiguous control interval of an ascending branch on which the
/// discrete slope `da_W / da_S` exceeds one (earliest on ties). Steps where
/// `a_S` does not increase count as outside the region.
pub fn effective_region(ascending: &[CurvePoint]) -> Option<(f64, f64)> {
    let mut best: Option<(usize, usize)> = None;
    let mut run_start: Option<usize> = None;
    let close = |start: usize, end: usize, best: &mut Option<(usize, usize)>| {
        if best.is_none_or(|(s, e)| end - start > e - s) {
            *best = Some((start, end));
        }
    };
    for (i, w) in ascending.windows(2).enumerate() {
        let da_s = w[1].a_s - w[0].a_s;
        let da_w = w[1].a_w - w[0].a_w;
        let steep = da_s > 0.0 && da_w > da_s;
        match (steep, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                close(s, i, &mut best);
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        close(s, ascending.len() - 1, &mut best);
    }
    best.map(|(s, e)| (ascending[s].control, ascending[e].control))
}

/// Independent-events variant: criticality through own-network and
/// cross-network neighbours are separate channels.
///
/// The count thresholds `m_*` are active-neighbour counts (a channel is
/// critical with at most `m` active neighbours). They are unrelated to the
/// attachment counts of the network generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependentSystem {
    pub k_s: u32,
    pub k_ws: u32,
    pub k_w: u32,
    pub k_sw: u32,
    pub m_s: u32,
    pub m_ws: u32,
    pub m_w: u32,
    pub m_sw: u32,
    pub p2: f64,
    pub pstar_s: f64,
    pub pstar_w: f64,
}

/// Inclusion-exclusion over internal failure and the two external channels,
/// written out term by term.
pub fn independent_composition(pstar: f64, p2: f64, e_own: f64, e_cross: f64) -> f64 {
    pstar + p2 * (e_own + e_cross) - pstar * p2 * (e_own + e_cross) - p2 * p2 * e_own * e_cross
        + pstar * p2 * p2 * e_own * e_cross
}

impl IndependentSystem {
    pub fn validate(&self) -> Result<(), MeanFieldError> {
        for (field, value) in [("p2", self.p2), ("pstar_s", self.pstar_s), ("pstar_w", self.pstar_w)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(MeanFieldError::Param {
                    field,
                    value,
                    reason: "must lie in [0, 1]",
                });
            }
        }
        for (field, m, k) in [
            ("m_s", self.m_s, self.k_s),
            ("m_ws", self.m_ws, self.k_ws),
            ("m_w", self.m_w, self.k_w),
            ("m_sw", self.m_sw, self.k_sw),
        ] {
            if m > k {
                return Err(MeanFieldError::Param {
                    field,
                    value: m as f64,
                    reason: "count threshold exceeds the matching degree",
                });
            }
        }
        Ok(())
    }

    pub fn map(&self, a_s: f64, a_w: f64) -> (f64, f64) {
        let s = independent_composition(
            self.pstar_s,
            self.p2,
            tail_prob(a_s, self.k_s, self.m_s),
            tail_prob(a_w, self.k_ws, self.m_ws),
        );
        let w = independent_composition(
            self.pstar_w,
            self.p2,
            tail_prob(a_w, self.k_w, self.m_w),
            tail_prob(a_s, self.k_sw, self.m_sw),
        );
        (s, w)
    }
}

pub fn fixed_point_independent(
    system: &IndependentSystem,
    init: (f64, f64),
    opts: &SolverOptions,
) -> Result<FixedPoint, MeanFieldError> {
    system.validate()?;
    check_init(init)?;
    Ok(picard(|s, w| system.map(s, w), init, opts))
}

/// Threshold after an asset perturbation `epsilon` on a node of degree
/// `k`: `k^alpha (T' - T) = -epsilon`. Unclamped; see [`clamp_threshold`].
pub fn finance_threshold_shift(k: u32, t_h: f64, epsilon: f64, alpha: f64) -> Result<f64, MeanFieldError> {
    if k < 1 {
        return Err(MeanFieldError::Param {
            field: "k",
            value: k as f64,
            reason: "must be >= 1",
        });
    }
    Ok(t_h - epsilon / (k as f64).powf(alpha))
}

/// Clamp into [0, 1]; the flag reports whether clamping happened.
pub fn clamp_threshold(t: f64) -> (f64, bool) {
    let c = t.clamp(0.0, 1.0);
    (c, c != t)
}
