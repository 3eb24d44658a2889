//! Physical parameters, the nonlinearity strength `c_q`, the CGL region and
//! the witness `(δ, ε)` that closes the second energy estimate.

use std::fmt;

use crate::error::{domain, PcglError, Result};
use crate::scalar::Real;

/// Coefficients of `∂t u − (λ + iα) Δ_p u + (κ + iβ)|u|^{q−2}u − γu = f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamSet<T> {
    pub lambda: T,
    pub kappa: T,
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub p: T,
    pub q: T,
    pub dim: usize,
}

impl<T: Real> ParamSet<T> {
    /// Heat-type defaults: `λ = κ = 1`, no rotation, no gain, `p = q = 2`.
    pub fn new(dim: usize) -> Self {
        Self {
            lambda: T::one(),
            kappa: T::one(),
            alpha: T::zero(),
            beta: T::zero(),
            gamma: T::zero(),
            p: T::lit(2.0),
            q: T::lit(2.0),
            dim,
        }
    }

    /// Smallest admissible (exclusive) `p`, `max{1, 2N/(N+2)}`.
    pub fn p_lower_bound(dim: usize) -> T {
        let n = T::from_usize_lossy(dim);
        T::one().max(T::lit(2.0) * n / (n + T::lit(2.0)))
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda, self.kappa, self.alpha, self.beta, self.gamma, self.p, self.q];
        if all.iter().any(|x| !x.is_finite()) {
            return domain("all parameters must be finite");
        }
        if !(self.dim == 1 || self.dim == 2) {
            return domain(format!("dimension must be 1 or 2, got {}", self.dim));
        }
        if !(self.lambda > T::zero()) {
            return domain(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.kappa > T::zero()) {
            return domain(format!("kappa must be positive, got {}", self.kappa));
        }
        if !(self.q >= T::lit(2.0)) {
            return domain(format!("q must be >= 2, got {}", self.q));
        }
        let lb = Self::p_lower_bound(self.dim);
        if !(self.p > lb) {
            return domain(format!("p must exceed {lb} in dimension {}, got {}", self.dim, self.p));
        }
        Ok(())
    }

    /// `(α/λ, β/κ)`, the point tested against the CGL region.
    pub fn region_point(&self) -> (T, T) {
        (self.alpha / self.lambda, self.beta / self.kappa)
    }

    pub fn gamma_plus(&self) -> T {
        self.gamma.max(T::zero())
    }
}

/// `c_q = (q − 2) / (2 √(q − 1))`.
pub fn strength_constant<T: Real>(q: T) -> Result<T> {
    if !(q >= T::lit(2.0)) || !q.is_finite() {
        return domain(format!("strength constant needs q >= 2, got {q}"));
    }
    Ok((q - T::lit(2.0)) / (T::lit(2.0) * (q - T::one()).sqrt()))
}

/// `1 / c_q`, infinite at `q = 2`.
pub fn region_radius<T: Real>(q: T) -> Result<T> {
    let c = strength_constant(q)?;
    Ok(if c == T::zero() { T::infinity() } else { T::one() / c })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionSet {
    /// `|x| ≤ r`
    S1,
    /// `|y| ≤ r`
    S2,
    /// `xy > 0`
    S3,
    /// `1 + xy > −r |x − y|`, the band between the two hyperbola branches.
    S4,
}

impl fmt::Display for RegionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegionSet::S1 => "S1",
            RegionSet::S2 => "S2",
            RegionSet::S3 => "S3",
            RegionSet::S4 => "S4",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionMembership {
    pub inside: bool,
    pub matched_sets: Vec<RegionSet>,
}

/// Membership of `(x, y)` in `CGL(r)`. Points on the boundary curve are outside.
pub fn cgl_region_test<T: Real>(x: T, y: T, r: T) -> RegionMembership {
    let xy = x * y;
    let inside =
        if r.is_infinite() { true } else { xy >= T::zero() || (xy.abs() - T::one()) < r * (x.abs() + y.abs()) };
    let mut matched_sets = Vec::new();
    if x.abs() <= r {
        matched_sets.push(RegionSet::S1);
    }
    if y.abs() <= r {
        matched_sets.push(RegionSet::S2);
    }
    if xy > T::zero() {
        matched_sets.push(RegionSet::S3);
    }
    let s4 = if r.is_infinite() { true } else { T::one() + xy > -r * (x - y).abs() };
    if s4 {
        matched_sets.push(RegionSet::S4);
    }
    RegionMembership { inside, matched_sets }
}

/// `D/(4λκ) = 1 + r(|x| + |y|) − |x||y|`; positive exactly inside the region
/// whenever `xy ≤ 0`.
pub fn normalized_discriminant<T: Real>(x: T, y: T, r: T) -> T {
    if r.is_infinite() {
        return T::infinity();
    }
    T::one() + r * (x.abs() + y.abs()) - x.abs() * y.abs()
}

/// `D/4 = (1 + c_q^{-2}) λκ − (c_q^{-1} κ − |β|)(c_q^{-1} λ − |α|)`.
pub fn discriminant<T: Real>(params: &ParamSet<T>) -> Result<T> {
    let r = region_radius(params.q)?;
    if r.is_infinite() {
        return Ok(T::infinity());
    }
    let (l, k) = (params.lambda, params.kappa);
    Ok((T::one() + r * r) * l * k - (r * k - params.beta.abs()) * (r * l - params.alpha.abs()))
}

/// `J(δ, ε) = 2δ √((1 + c_q^{-2})(λ − ε)(κ − ε)) + c_q^{-1}(δ²κ + λ) − |δ²β − α|`.
pub fn witness_j<T: Real>(delta: T, epsilon: T, params: &ParamSet<T>) -> Result<T> {
    let m = params.lambda.min(params.kappa);
    if !(epsilon >= T::zero() && epsilon < m) {
        return domain(format!("epsilon must lie in [0, {m}), got {epsilon}"));
    }
    if !(delta > T::zero()) {
        return domain(format!("delta must be positive, got {delta}"));
    }
    let c = strength_constant(params.q)?;
    if c == T::zero() {
        return domain("J is not defined at q = 2 (c_q = 0); the skew cross term vanishes there");
    }
    let r = T::one() / c;
    let root = ((T::one() + r * r) * (params.lambda - epsilon) * (params.kappa - epsilon)).sqrt();
    Ok(T::lit(2.0) * delta * root + r * (delta * delta * params.kappa + params.lambda)
        - (delta * delta * params.beta - params.alpha).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Witness<T> {
    pub delta: T,
    pub epsilon: T,
    /// `J(δ, ε)`; infinite when `q = 2`.
    pub j: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionVerdict<T> {
    pub inside: bool,
    pub matched_sets: Vec<RegionSet>,
    pub witness: Option<Witness<T>>,
    /// `D/4`.
    pub discriminant: T,
}

impl<T: Real> RegionVerdict<T> {
    pub fn has_witness(&self) -> bool {
        self.witness.is_some()
    }
}

const MAX_HALVINGS: usize = 200;

/// Searches `(δ, ε)` with `J(δ, ε) ≥ 0` following the case split of the
/// second energy estimate, or refuses when `(α/λ, β/κ)` lies outside the region.
pub fn find_witness<T: Real>(params: &ParamSet<T>) -> Result<RegionVerdict<T>> {
    params.validate()?;
    let r = region_radius(params.q)?;
    let (x, y) = params.region_point();
    let membership = cgl_region_test(x, y, r);
    let discriminant = discriminant(params)?;
    let m = params.lambda.min(params.kappa);

    let refuse = |inside: bool| RegionVerdict {
        inside,
        matched_sets: membership.matched_sets.clone(),
        witness: None,
        discriminant,
    };

    if r.is_infinite() {
        return Ok(RegionVerdict {
            inside: true,
            matched_sets: membership.matched_sets.clone(),
            witness: Some(Witness { delta: T::one(), epsilon: m / T::lit(2.0), j: T::infinity() }),
            discriminant,
        });
    }
    if !membership.inside {
        return Ok(refuse(false));
    }

    let (a, b) = (params.alpha, params.beta);
    let j0 = |d: T| witness_j(d, T::zero(), params);
    let delta = if a * b > T::zero() {
        (a / b).sqrt()
    } else if b.abs() / params.kappa <= r {
        // J(δ, 0) is eventually increasing in δ
        let mut d = T::one();
        let mut found = None;
        for _ in 0..MAX_HALVINGS {
            if j0(d)? > T::zero() {
                found = Some(d);
                break;
            }
            d *= T::lit(2.0);
        }
        match found {
            Some(d) => d,
            None => return Ok(refuse(true)),
        }
    } else {
        // vertex of the concave quadratic δ ↦ J(δ, 0)
        let root = ((T::one() + r * r) * params.lambda * params.kappa).sqrt();
        root / (b.abs() - r * params.kappa)
    };

    if !(j0(delta)? > T::zero()) {
        return Ok(refuse(true));
    }
    let mut eps = m / T::lit(2.0);
    for _ in 0..MAX_HALVINGS {
        let j = witness_j(delta, eps, params)?;
        if j >= T::zero() {
            return Ok(RegionVerdict {
                inside: true,
                matched_sets: membership.matched_sets,
                witness: Some(Witness { delta, epsilon: eps, j }),
                discriminant,
            });
        }
        eps /= T::lit(2.0);
    }
    Ok(refuse(true))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OkazawaYokota {
    pub holds: bool,
    /// `p ≤ 2`: the bound `2√(p−1)/(p−2)` is not finite and the condition is vacuous.
    pub degenerate: bool,
}

/// Monotonicity condition `|α|/λ < 2√(p−1)/(p−2)` used by earlier existence results.
pub fn okazawa_yokota_condition<T: Real>(params: &ParamSet<T>) -> OkazawaYokota {
    let two = T::lit(2.0);
    if params.p <= two {
        return OkazawaYokota { holds: true, degenerate: true };
    }
    let bound = two * (params.p - T::one()).sqrt() / (params.p - two);
    OkazawaYokota { holds: params.alpha.abs() / params.lambda < bound, degenerate: false }
}

impl<T: Real> TryFrom<&[(&str, T)]> for ParamSet<T> {
    type Error = PcglError;

    fn try_from(pairs: &[(&str, T)]) -> Result<Self> {
        let mut p = ParamSet::new(1);
        for &(k, v) in pairs {
            match k {
                "lambda" => p.lambda = v,
                "kappa" => p.kappa = v,
                "alpha" => p.alpha = v,
                "beta" => p.beta = v,
                "gamma" => p.gamma = v,
                "p" => p.p = v,
                "q" => p.q = v,
                other => return domain(format!("unknown parameter '{other}'")),
            }
        }
        p.validate()?;
        Ok(p)
    }
}
