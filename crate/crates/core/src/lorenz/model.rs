use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::suspension::IntervalMap;

const GRID_AUDIT_POINTS: usize = 100_000;
/// Orbits closer than this to the singular line are nudged off it.
pub const SINGULAR_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorenzParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub roof_base: f64,
    pub roof_cap: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            alpha: 0.75,
            beta: 0.25,
            gamma: 0.5,
            lambda1: -3.0,
            lambda2: -1.0,
            lambda3: 2.0,
            roof_base: 1.0,
            roof_cap: 30.0,
        }
    }
}

/// Geometric Lorenz model: quotient map `f(x) = sign(x)(2|x|^α − 1)` and
/// fiber map `H(x, y) = sign(x)(βy − γ)` on `[−1, 1]²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LorenzParams", into = "LorenzParams")]
pub struct LorenzModel {
    p: LorenzParams,
}

impl From<LorenzModel> for LorenzParams {
    fn from(m: LorenzModel) -> Self {
        m.p
    }
}

impl TryFrom<LorenzParams> for LorenzModel {
    type Error = Error;
    fn try_from(p: LorenzParams) -> Result<Self> {
        validate_model(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareState {
    pub x: f64,
    pub y: f64,
}

fn reject(clause: &'static str, detail: String) -> Error {
    Error::ParamOutOfRange { clause, detail }
}

pub fn validate_model(p: LorenzParams) -> Result<LorenzModel> {
    let all = [p.alpha, p.beta, p.gamma, p.lambda1, p.lambda2, p.lambda3, p.roof_base, p.roof_cap];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(reject("finite parameters", format!("{p:?}")));
    }
    if !(2.0 * p.alpha > std::f64::consts::SQRT_2 && p.alpha < 1.0) {
        return Err(reject(
            "f' > √2",
            format!("2α = {} must exceed √2 with α < 1", 2.0 * p.alpha),
        ));
    }
    if !(p.beta > 0.0 && p.beta < 1.0) {
        return Err(reject("sup |∂H/∂y| < 1", format!("β = {}", p.beta)));
    }
    if !(p.gamma > p.beta) {
        return Err(reject(
            "H < 0 for x > 0",
            format!("fiber range [{}, {}] touches 0", -p.gamma - p.beta, p.beta - p.gamma),
        ));
    }
    if p.beta + p.gamma > 1.0 {
        return Err(reject("H maps into Σ", format!("β + γ = {} > 1", p.beta + p.gamma)));
    }
    if !(p.lambda1 < p.lambda2 && p.lambda2 < 0.0 && 0.0 < p.lambda3) {
        return Err(reject(
            "λ1 < λ2 < 0 < λ3",
            format!("({}, {}, {})", p.lambda1, p.lambda2, p.lambda3),
        ));
    }
    if !(p.lambda1 + p.lambda3 < 0.0) {
        return Err(reject("λ1 + λ3 < 0", format!("{}", p.lambda1 + p.lambda3)));
    }
    if !(p.lambda2 + p.lambda3 > 0.0) {
        return Err(reject("λ2 + λ3 > 0", format!("{}", p.lambda2 + p.lambda3)));
    }
    if !(p.roof_base > 0.0 && p.roof_cap > 0.0) {
        return Err(reject(
            "roof > 0",
            format!("c0 = {}, M = {}", p.roof_base, p.roof_cap),
        ));
    }
    let m = LorenzModel { p };
    m.grid_audit()?;
    Ok(m)
}

impl LorenzModel {
    pub fn reference() -> Self {
        validate_model(LorenzParams::default()).expect("reference parameters are valid")
    }

    pub fn params(&self) -> &LorenzParams {
        &self.p
    }

    pub fn alpha(&self) -> f64 {
        self.p.alpha
    }

    pub fn beta(&self) -> f64 {
        self.p.beta
    }

    pub fn roof_cap(&self) -> f64 {
        self.p.roof_cap
    }

    pub fn with_roof_cap(mut self, cap: f64) -> Result<Self> {
        self.p.roof_cap = cap;
        validate_model(self.p)
    }

    fn grid_audit(&self) -> Result<()> {
        let slope = 2.0 * self.p.alpha;
        for i in 0..GRID_AUDIT_POINTS {
            let u = (i as f64 + 0.5) / GRID_AUDIT_POINTS as f64;
            for x in [u, -u] {
                let fx = self.f(x);
                if !(fx > -1.0 && fx < 1.0) {
                    return Err(reject("−1 < f < 1 on open branches", format!("f({x}) = {fx}")));
                }
                if self.f_prime(x) < slope * (1.0 - 1e-12) {
                    return Err(reject("f' > √2", format!("f'({x}) = {}", self.f_prime(x))));
                }
                let y = 2.0 * u - 1.0;
                let h = self.h(x, y);
                if x > 0.0 && !(h > -1.0 - 1e-15 && h < 0.0) || x < 0.0 && !(h > 0.0 && h < 1.0 + 1e-15) {
                    return Err(reject("H < 0 for x > 0", format!("H({x}, {y}) = {h}")));
                }
                if !(self.roof(x) >= self.p.roof_base) {
                    return Err(reject("ρ_M ≥ c0", format!("ρ({x}) = {}", self.roof(x))));
                }
            }
        }
        Ok(())
    }

    pub fn f(&self, x: f64) -> f64 {
        if x >= 0.0 {
            2.0 * x.powf(self.p.alpha) - 1.0
        } else {
            1.0 - 2.0 * (-x).powf(self.p.alpha)
        }
    }

    pub fn f_prime(&self, x: f64) -> f64 {
        2.0 * self.p.alpha * x.abs().powf(self.p.alpha - 1.0)
    }

    pub fn h(&self, x: f64, y: f64) -> f64 {
        let v = self.p.beta * y - self.p.gamma;
        if x >= 0.0 {
            v
        } else {
            -v
        }
    }

    /// `min(c0 − log|x| / λ3, M)`.
    pub fn roof(&self, x: f64) -> f64 {
        (self.p.roof_base - x.abs().ln() / self.p.lambda3).min(self.p.roof_cap)
    }

    pub fn uncapped_roof(&self, x: f64) -> f64 {
        self.p.roof_base - x.abs().ln() / self.p.lambda3
    }

    /// `e^{λ3 (c0 − M)}`: the cap is active exactly for `|x|` below this.
    pub fn cap_radius(&self) -> f64 {
        (self.p.lambda3 * (self.p.roof_base - self.p.roof_cap)).exp()
    }

    /// Inverse of the branch of `f` carrying symbol `s` (0 = L, 1 = R).
    pub fn inverse(&self, s: u8, y: f64) -> f64 {
        let inv = 1.0 / self.p.alpha;
        if s == 1 {
            ((y + 1.0) / 2.0).powf(inv)
        } else {
            -((1.0 - y) / 2.0).powf(inv)
        }
    }

    /// `y* = −γ/(1 − β)`, fiber coordinate of the fixed point `x = 1`.
    pub fn fixed_point(&self) -> PoincareState {
        PoincareState {
            x: 1.0,
            y: -self.p.gamma / (1.0 - self.p.beta),
        }
    }

    /// Positive point of the period-2 orbit `{x̂, −x̂}`: root of `2x^α + x = 1`.
    pub fn period_two_point(&self) -> f64 {
        crate::numerics::bisect(|x| 2.0 * x.powf(self.p.alpha) + x - 1.0, 0.0, 1.0, 1e-16)
            .expect("sign change on [0, 1]")
    }

    pub fn poincare_step(&self, s: PoincareState) -> Result<PoincareState> {
        if s.x == 0.0 {
            return Err(Error::HitSingularLine { step: 0 });
        }
        let x = self.f(s.x);
        if x.abs() < SINGULAR_TOL {
            return Err(Error::HitSingularLine { step: 1 });
        }
        Ok(PoincareState { x, y: self.h(s.x, s.y) })
    }
}

impl IntervalMap for LorenzModel {
    fn domain(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }
    fn cuts(&self) -> Vec<f64> {
        vec![0.0]
    }
    fn branch(&self, j: usize, x: f64) -> f64 {
        if j == 1 {
            2.0 * x.max(0.0).powf(self.p.alpha) - 1.0
        } else {
            1.0 - 2.0 * (-x).max(0.0).powf(self.p.alpha)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_valid() {
        let m = LorenzModel::reference();
        assert_eq!(m.f(1.0), 1.0);
        assert_eq!(m.f(-1.0), -1.0);
        assert!((m.roof(1e-300) - 30.0).abs() < 1e-15);
    }

    #[test]
    fn rejected_clauses() {
        let bad_alpha = LorenzParams {
            alpha: 0.5,
            ..Default::default()
        };
        assert!(matches!(validate_model(bad_alpha), Err(Error::ParamOutOfRange { clause: "f' > √2", .. })));
        let bad_gamma = LorenzParams {
            gamma: 0.25,
            ..Default::default()
        };
        assert!(matches!(
            validate_model(bad_gamma),
            Err(Error::ParamOutOfRange { clause: "H < 0 for x > 0", .. })
        ));
        let bad_eig = LorenzParams {
            lambda1: -1.5,
            lambda2: -1.0,
            ..Default::default()
        };
        assert!(matches!(validate_model(bad_eig), Err(Error::ParamOutOfRange { clause: "λ1 + λ3 < 0", .. })));
    }

    #[test]
    fn fixed_point_is_fixed() {
        let m = LorenzModel::reference();
        let p = m.fixed_point();
        assert!((p.y + 2.0 / 3.0).abs() < 1e-15);
        let q = m.poincare_step(p).unwrap();
        assert!((q.x - p.x).abs() < 1e-12 && (q.y - p.y).abs() < 1e-12);
    }

    #[test]
    fn period_two_orbit() {
        let m = LorenzModel::reference();
        let x = m.period_two_point();
        assert!((m.f(x) + x).abs() < 1e-12);
        assert!((m.f(-x) - x).abs() < 1e-12);
    }

    #[test]
    fn left_half_maps_to_upper_fiber() {
        let m = LorenzModel::reference();
        for y in [-1.0, 0.0, 1.0] {
            assert!(m.poincare_step(PoincareState { x: -0.3, y }).unwrap().y > 0.0);
        }
        assert!(matches!(
            m.poincare_step(PoincareState { x: 0.0, y: 0.0 }),
            Err(Error::HitSingularLine { .. })
        ));
        // f(x) = 0 at x = 2^{-1/α}
        let x0 = 0.5f64.powf(1.0 / 0.75);
        assert!(matches!(
            m.poincare_step(PoincareState { x: x0, y: 0.0 }),
            Err(Error::HitSingularLine { step: 1 })
        ));
    }

    #[test]
    fn inverses_invert() {
        let m = LorenzModel::reference();
        for &y in &[-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert!((m.f(m.inverse(1, y)) - y).abs() < 1e-14);
            assert!((m.branch(0, m.inverse(0, y)) - y).abs() < 1e-14);
        }
    }

    #[test]
    fn params_json_round_trip() {
        let m = LorenzModel::reference();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<LorenzModel>(&text).unwrap(), m);
        assert!(serde_json::from_str::<LorenzModel>(&text.replace("0.75", "0.5")).is_err());
    }
}
