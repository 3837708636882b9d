//! Hoeffding-type tail bounds and the security-error optimization.
//!
//! Every exponential is formed from its log; sums that exceed 1 are clamped
//! and the clamp is logged (a clamp makes a bound vacuous, never wrong).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid points per axis over `[0, α]` for the security optimization.
pub const DEFAULT_GRID_POINTS: usize = 256;

/// Parameters shared by the correctness, robustness and security bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub d: usize,
    pub s: usize,
    pub w: usize,
    /// Number of trap types (`n + t` for the singleton family).
    pub k: usize,
    /// Error of the underlying computation, in `[0, 1/2)`.
    pub c: f64,
    pub p_err: f64,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.c) {
            return Err(Error::InvalidParams(format!("c = {} outside [0, 1/2)", self.c)));
        }
        if self.w > self.s {
            return Err(Error::InvalidParams(format!("w = {} exceeds s = {}", self.w, self.s)));
        }
        if self.k == 0 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_err) {
            return Err(Error::InvalidParams(format!("p_err = {} outside [0, 1]", self.p_err)));
        }
        Ok(())
    }

    /// `α = (1 - 2c) / (2 - 2c)`.
    pub fn alpha(&self) -> f64 {
        (1.0 - 2.0 * self.c) / (2.0 - 2.0 * self.c)
    }

    fn w_over_s(&self) -> f64 {
        self.w as f64 / self.s as f64
    }

    /// Security margin under `convention`.
    pub fn delta(&self, convention: DeltaConvention) -> f64 {
        if self.s == 0 {
            return f64::NEG_INFINITY;
        }
        match convention {
            DeltaConvention::Range => self.alpha() - self.w_over_s() * self.k as f64,
            DeltaConvention::Quotient => self.alpha() - self.w as f64 / (self.s as f64 * self.k as f64),
        }
    }
}

/// How the security margin `Δ` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaConvention {
    /// `Δ = α - (w/s)·k`, the upper end of the feasible `χ` range.
    #[default]
    Range,
    /// `Δ = α - w/(s·k)`.
    Quotient,
}

impl std::str::FromStr for DeltaConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "range" => Ok(DeltaConvention::Range),
            "quotient" => Ok(DeltaConvention::Quotient),
            _ => Err(Error::Parse(format!("unknown delta convention {s:?} (expected range or quotient)"))),
        }
    }
}

fn clamp_exp(log_p: f64, what: &str) -> f64 {
    if log_p > 0.0 {
        log::debug!("{what}: clamped exp({log_p}) to 1");
        1.0
    } else {
        log_p.exp()
    }
}

fn clamp_sum(a: f64, b: f64, what: &str) -> f64 {
    let s = a + b;
    if s > 1.0 {
        log::debug!("{what}: clamped {s} to 1");
        1.0
    } else {
        s
    }
}

/// `P[X ≥ k] ≤ exp(-2(np - k)²/n)` for `X ~ Binomial(n, p)`, valid for `k ≥ np`.
pub fn binom_upper_tail(n: usize, p: f64, k: f64) -> Result<f64> {
    let mean = n as f64 * p;
    if k < mean {
        return Err(Error::Contract(format!("upper tail needs k >= np (k = {k}, np = {mean})")));
    }
    binom_tail(n, mean, k)
}

/// `P[X ≤ k] ≤ exp(-2(np - k)²/n)`, valid for `k ≤ np`.
pub fn binom_lower_tail(n: usize, p: f64, k: f64) -> Result<f64> {
    let mean = n as f64 * p;
    if k > mean {
        return Err(Error::Contract(format!("lower tail needs k <= np (k = {k}, np = {mean})")));
    }
    binom_tail(n, mean, k)
}

fn binom_tail(n: usize, mean: f64, k: f64) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    Ok(clamp_exp(-2.0 * (mean - k).powi(2) / n as f64, "binomial tail"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSide {
    Lower,
    Upper,
}

/// Tail of the marked count when drawing `n` of `population` items without
/// replacement, `marked` of them marked: deviation `chi·n` from `n·K/N`
/// has probability at most `exp(-2χ²n)`.
pub fn hypergeom_tail(population: usize, marked: usize, n: usize, chi: f64, side: TailSide) -> Result<f64> {
    if population == 0 || marked > population || n > population {
        return Err(Error::InvalidParams(format!(
            "bad hypergeometric parameters N = {population}, K = {marked}, n = {n}"
        )));
    }
    let frac = marked as f64 / population as f64;
    let edge = match side {
        TailSide::Lower => frac - chi,
        TailSide::Upper => frac + chi,
    };
    if chi < 0.0 || !(0.0..=1.0).contains(&edge) {
        return Err(Error::InvalidParams(format!("slack {chi} moves K/N = {frac} outside [0, 1]")));
    }
    Ok(clamp_exp(-2.0 * chi * chi * n as f64, "hypergeometric tail"))
}

/// Probability that the majority of `d` rounds with error `c` is wrong.
pub fn eps_cor(d: usize, c: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&c) {
        return Err(Error::Contract(format!("c = {c} must lie in [0, 1/2)")));
    }
    Ok(clamp_exp(-2.0 * d as f64 * (0.5 - c).powi(2), "correctness error"))
}

/// Robustness against honest noise: chance of rejecting and of a wrong majority.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessBound {
    pub reject: f64,
    pub wrong: f64,
}

pub fn eps_rob(d: usize, s: usize, w: usize, c: f64, p_err: f64) -> Result<RobustnessBound> {
    if s == 0 {
        return Err(Error::Contract("robustness bound needs s >= 1".into()));
    }
    let ws = w as f64 / s as f64;
    if p_err >= ws {
        return Err(Error::Contract(format!("noise rate {p_err} must be below w/s = {ws}")));
    }
    if p_err + c >= 0.5 {
        return Err(Error::Contract(format!("p_err + c = {} must be below 1/2", p_err + c)));
    }
    Ok(RobustnessBound {
        reject: clamp_exp(-2.0 * (p_err - ws).powi(2) * s as f64, "robustness reject"),
        wrong: clamp_exp(-2.0 * d as f64 * (0.5 - c - p_err).powi(2), "robustness wrong"),
    })
}

const FEAS_TOL: f64 = 1e-12;

fn eps_term(p: &BoundParams, phi: f64, chi: f64) -> f64 {
    let s = p.s as f64;
    let m = p.alpha() - phi - chi;
    let first = clamp_exp(-2.0 * chi * chi * s, "ε first term");
    let second = if m <= 0.0 {
        1.0
    } else {
        let inner = (m / p.k as f64 - p.w_over_s()).max(0.0);
        clamp_exp(-2.0 * inner * inner / m * s, "ε second term")
    };
    clamp_sum(first, second, "ε(φ)")
}

fn nu_term(p: &BoundParams, phi: f64, chi: f64) -> f64 {
    let d = p.d as f64;
    let m = 1.0 - p.alpha() + phi - chi;
    let first = clamp_exp(-2.0 * chi * chi * d, "ν first term");
    let inner = (m * (1.0 - p.c) - 0.5).max(0.0);
    let second = clamp_exp(-2.0 * inner * inner / m * d, "ν second term");
    clamp_sum(first, second, "ν(φ)")
}

/// `ε(φ)`: minimum over the grid of the two-term test-round bound, with
/// `χ ∈ [0, Δ - φ]` and `Δ = α - (w/s)k`.
pub fn eps_of_phi(params: &BoundParams, phi: f64, chi_grid: &[f64]) -> Result<f64> {
    params.validate()?;
    let delta = params.delta(DeltaConvention::Range);
    if phi < -FEAS_TOL || phi > delta + FEAS_TOL {
        return Err(Error::InvalidParams(format!("φ = {phi} outside [0, Δ = {delta}]")));
    }
    grid_min(chi_grid, 0.0, delta - phi, |chi| eps_term(params, phi, chi))
}

/// `ν(φ)`: minimum over the grid of the two-term computation-round bound
/// with `χ ∈ [0, φ]`.
pub fn nu_of_phi(params: &BoundParams, phi: f64, chi_grid: &[f64]) -> Result<f64> {
    params.validate()?;
    if phi < -FEAS_TOL || phi > params.alpha() + FEAS_TOL {
        return Err(Error::InvalidParams(format!("φ = {phi} outside [0, α]")));
    }
    grid_min(chi_grid, 0.0, phi, |chi| nu_term(params, phi, chi))
}

fn grid_min(grid: &[f64], lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let mut best: Option<f64> = None;
    for &chi in grid {
        if chi < lo - FEAS_TOL || chi > hi + FEAS_TOL {
            return Err(Error::InvalidParams(format!("χ = {chi} outside [{lo}, {hi}]")));
        }
        let v = f(chi.clamp(lo, hi.max(lo)));
        best = Some(best.map_or(v, |b: f64| b.min(v)));
    }
    best.ok_or_else(|| Error::InvalidParams("empty χ grid".into()))
}

/// Uniform lattice `{0, α/(m-1), …, α}`.
pub fn lattice(alpha: f64, points: usize) -> Vec<f64> {
    let m = points.max(2);
    (0..m).map(|i| alpha * i as f64 / (m - 1) as f64).collect()
}

/// Closed-form instantiation `φ = Δ/2`, `χ = Δ/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub phi: f64,
    pub chi: f64,
    pub eps_phi: f64,
    pub nu_phi: f64,
    pub p_d: f64,
}

/// Result of the security-error optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityBreakdown {
    pub params: BoundParams,
    pub convention: DeltaConvention,
    pub alpha: f64,
    pub delta: f64,
    /// Margin under the other convention, for comparison.
    pub delta_alternative: f64,
    /// `m₀/N = α - φ` at the chosen `φ`.
    pub m0_over_n: f64,
    pub phi: f64,
    pub chi_eps: f64,
    pub chi_nu: f64,
    pub eps_phi: f64,
    pub nu_phi: f64,
    /// Best grid value of `max(ν(φ), ε(φ))`.
    pub grid_p_d: f64,
    pub closed_form: Option<ClosedForm>,
    /// Tighter of the grid and closed-form values.
    pub p_d: f64,
    pub neg_log2_p_d: f64,
    pub diagnostic: Option<String>,
}

/// Options for [`security_error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridOptions {
    pub phi_points: usize,
    pub chi_points: usize,
    pub convention: DeltaConvention,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { phi_points: DEFAULT_GRID_POINTS, chi_points: DEFAULT_GRID_POINTS, convention: DeltaConvention::Range }
    }
}

/// `p_d ≤ min_φ max(ν(φ), ε(φ))` over absolute lattices in `[0, α]`
/// restricted to the feasible ranges, plus the closed-form point.
pub fn security_error(params: &BoundParams, opts: GridOptions) -> Result<SecurityBreakdown> {
    params.validate()?;
    let alpha = params.alpha();
    let delta = params.delta(opts.convention);
    let other = match opts.convention {
        DeltaConvention::Range => DeltaConvention::Quotient,
        DeltaConvention::Quotient => DeltaConvention::Range,
    };
    let mut out = SecurityBreakdown {
        params: *params,
        convention: opts.convention,
        alpha,
        delta,
        delta_alternative: params.delta(other),
        m0_over_n: alpha,
        phi: 0.0,
        chi_eps: 0.0,
        chi_nu: 0.0,
        eps_phi: 1.0,
        nu_phi: 1.0,
        grid_p_d: 1.0,
        closed_form: None,
        p_d: 1.0,
        neg_log2_p_d: 0.0,
        diagnostic: None,
    };
    if params.s == 0 || delta <= 0.0 {
        out.diagnostic = Some(format!(
            "no security margin: Δ = {delta} (w/s too large relative to α/k with α = {alpha}, k = {})",
            params.k
        ));
        return Ok(out);
    }
    // Points outside the Hoeffding range give vacuous terms, so every
    // evaluated point stays a valid bound under either convention.
    let feasible = params.delta(DeltaConvention::Range);
    let phi_hi = delta;
    let grid = lattice(alpha, opts.phi_points);
    let chis = lattice(alpha, opts.chi_points);
    let best_chi = |hi: f64, f: &dyn Fn(f64) -> f64| -> (f64, f64) {
        chis.iter()
            .copied()
            .take_while(|&c| c <= hi + FEAS_TOL)
            .map(|c| (f(c), c))
            .fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc })
    };
    for &phi in grid.iter().take_while(|&&p| p <= phi_hi + FEAS_TOL) {
        let (e, ce) = best_chi(delta - phi, &|c| eps_term(params, phi, c));
        let (v, cv) = best_chi(phi, &|c| nu_term(params, phi, c));
        let val = e.max(v);
        if val < out.grid_p_d {
            out.grid_p_d = val;
            out.phi = phi;
            out.chi_eps = ce;
            out.chi_nu = cv;
            out.eps_phi = e;
            out.nu_phi = v;
            out.m0_over_n = alpha - phi;
        }
    }
    let (phi, chi) = (phi_hi / 2.0, phi_hi / 4.0);
    let cf_eps = eps_term(params, phi, chi);
    let cf_nu = nu_term(params, phi, chi);
    let cf = ClosedForm { phi, chi, eps_phi: cf_eps, nu_phi: cf_nu, p_d: cf_eps.max(cf_nu) };
    out.closed_form = Some(cf);
    if cf.p_d < out.grid_p_d {
        out.phi = phi;
        out.chi_eps = chi;
        out.chi_nu = chi;
        out.eps_phi = cf_eps;
        out.nu_phi = cf_nu;
        out.m0_over_n = alpha - phi;
    }
    out.p_d = out.grid_p_d.min(cf.p_d);
    out.neg_log2_p_d = -out.p_d.log2();
    if opts.convention == DeltaConvention::Quotient && delta > feasible {
        out.diagnostic = Some(format!("quotient margin {delta} exceeds the Hoeffding range {feasible}; points beyond it are vacuous"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn binomial_example() {
        assert!(close(binom_upper_tail(100, 0.1, 50.0).unwrap(), (-32.0f64).exp(), 1e-12));
        assert_eq!(binom_upper_tail(10, 0.5, 5.0).unwrap(), 1.0);
        assert!(binom_upper_tail(100, 0.1, 5.0).is_err());
    }

    #[test]
    fn hypergeometric_example() {
        let v = hypergeom_tail(100, 50, 20, 0.2, TailSide::Lower).unwrap();
        assert!(close(v, (-1.6f64).exp(), 1e-12));
        assert_eq!(hypergeom_tail(100, 50, 20, 0.0, TailSide::Upper).unwrap(), 1.0);
        assert!(hypergeom_tail(100, 90, 20, 0.2, TailSide::Upper).is_err());
    }

    #[test]
    fn correctness_examples() {
        assert!(close(eps_cor(100, 0.1).unwrap(), (-32.0f64).exp(), 1e-12));
        assert!(close(eps_cor(1, 0.0).unwrap(), 0.606_530_659_712_633_4, 1e-12));
        assert!(eps_cor(10, 0.5).is_err());
    }

    #[test]
    fn robustness_examples() {
        let r = eps_rob(100, 100, 10, 0.0, 0.05).unwrap();
        assert!(close(r.reject, (-0.5f64).exp(), 1e-12));
        assert!(eps_rob(100, 100, 10, 0.0, 0.1).is_err());
    }

    #[test]
    fn nu_example() {
        let p = BoundParams { d: 100, s: 100, w: 0, k: 1, c: 0.0, p_err: 0.0 };
        // m0/N = 0.3 means φ = α - 0.3 = 0.2.
        let v = nu_of_phi(&p, 0.2, &[0.1]).unwrap();
        let expect = (-2.0 * 0.01 * 100.0f64).exp() + (-2.0 * 0.01 / 0.6 * 100.0f64).exp();
        assert!(close(v, expect, 1e-12));
    }

    #[test]
    fn no_margin_is_vacuous() {
        let p = BoundParams { d: 10, s: 10, w: 5, k: 2, c: 0.0, p_err: 0.0 };
        let b = security_error(&p, GridOptions::default()).unwrap();
        assert_eq!(b.p_d, 1.0);
        assert!(b.diagnostic.is_some());
    }
}
