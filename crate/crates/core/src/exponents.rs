//! Exact-rational algebra for the exponent relations of Theorems 1-4 and the
//! molecule machinery.
//!
//! Every threshold is compared in [`Q`] (arbitrary precision rationals) so that
//! boundary cases such as `a == alpha` cannot flip through rounding. Floating
//! point appears only where the relations themselves involve logarithms or
//! irrational constants (`epsilon_geom`, the `K` ceiling).

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

/// Exact rational number used for every exponent.
pub type Q = BigRational;

/// Builds `num/den` as an exact rational.
pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Integer as an exact rational.
pub fn qi(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Canonical `num/den` string (integers print without a denominator).
pub fn fraction_string(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {0:?} as a rational number")]
pub struct ParseRationalError(pub String);

/// Parses `"8/7"`, `"1.5"`, `"-3"`, `"1e-4"` or `"2.5e1/3"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Q, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let t = s.trim();
    if let Some((a, b)) = t.split_once('/') {
        let num = parse_decimal(a.trim()).ok_or_else(err)?;
        let den = parse_decimal(b.trim()).ok_or_else(err)?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(num / den);
    }
    parse_decimal(t).ok_or_else(err)
}

fn parse_decimal(s: &str) -> Option<Q> {
    if s.is_empty() {
        return None;
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if all.is_empty() { "0" } else { &all }).ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Q::from_integer(numer);
    if scale >= 0 {
        value *= Q::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Q::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -value } else { value })
}

/// Named admissibility constraints. The display string is the stable name used
/// in rejection messages and JSON records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Constraint {
    DimensionAtLeastTwo,
    QPositive,
    ABelowNPlusQ,
    ANonNegative,
    ABelowN,
    QLowerBoundTheorem1,
    PLowerBound,
    AlphaChainTheorem1,
    QAtLeastTwoN,
    EtaInUnitInterval,
    AlphaWindowTheorem3,
    ShiftedBesovExponentPlus,
    EtaBelowHalfOverNMinusOne,
    AlphaWindowTheorem4,
    ShiftedBesovExponentMinus,
    GammaOmegaOrder,
    DeltaWindow,
    ZetaAboveOne,
    NuOrder,
    MAboveCritical,
    PPrimeWindow,
    HolderTriple,
    EpsilonGeomPositive,
    ConcentrationCoefficient,
    NegativityExponent1,
    NegativityExponent2,
    AnnulusDecay,
    TailDecay,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        use Constraint::*;
        match self {
            DimensionAtLeastTwo => "n >= 2",
            QPositive => "q > 0",
            ABelowNPlusQ => "a < n + q",
            ANonNegative => "0 <= a",
            ABelowN => "a < n",
            QLowerBoundTheorem1 => "q >= max((n-a)(n-1), 2n)",
            PLowerBound => "p > max(n(n-1), 2n)",
            AlphaChainTheorem1 => "1 < alpha < alpha0 < 2",
            QAtLeastTwoN => "q >= 2n",
            EtaInUnitInterval => "0 < eta < 1",
            AlphaWindowTheorem3 => "1/2 < alpha < 2",
            ShiftedBesovExponentPlus => "0 < alpha/p + eta < 1",
            EtaBelowHalfOverNMinusOne => "0 < eta < 1/(2(n-1))",
            AlphaWindowTheorem4 => "1 < alpha < 2",
            ShiftedBesovExponentMinus => "0 < alpha/p - eta < 1",
            GammaOmegaOrder => "0 < gamma < omega < 1/4",
            DeltaWindow => "1/2 < delta < alpha",
            ZetaAboveOne => "zeta > 1",
            NuOrder => "0 < nu1 < nu0 < 1",
            MAboveCritical => "m > n/(1-omega)",
            PPrimeWindow => "1 < p' < n/(1-omega)",
            HolderTriple => "1/m + 1/p < 1",
            EpsilonGeomPositive => "m(omega-1) + n < 0",
            ConcentrationCoefficient => "nu1 s < nu0 (n/p' + omega - 1)",
            NegativityExponent1 => "negativity exponent 1 < 0",
            NegativityExponent2 => "negativity exponent 2 < 0",
            AnnulusDecay => "omega - 1 + (alpha + n)/p < 0",
            TailDecay => "omega - delta + n/p < 0",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A parameter tuple failed one or more named constraints.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("inadmissible exponents: violates {}", names(.violated))]
pub struct Rejection {
    pub violated: Vec<Constraint>,
}

fn names(v: &[Constraint]) -> String {
    v.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ")
}

impl Rejection {
    pub fn first(&self) -> Constraint {
        self.violated[0]
    }
}

/// Collects violated constraints, in evaluation order.
#[derive(Default)]
struct Checks(Vec<Constraint>);

impl Checks {
    fn require(&mut self, ok: bool, c: Constraint) {
        if !ok && !self.0.contains(&c) {
            self.0.push(c);
        }
    }

    fn finish(self) -> Result<(), Rejection> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(Rejection { violated: self.0 })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Theorem1,
    Theorem2,
    Theorem3,
    Theorem4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    BesovWins,
    BesovUseless,
}

/// The full exponent tuple of one admissible regime.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentSet {
    pub regime: Regime,
    pub n: u32,
    pub p: Q,
    pub q: Q,
    pub a: Q,
    pub eta: Q,
    pub alpha: Q,
    pub alpha0: Q,
    pub gamma: Q,
    pub omega: Q,
    pub sigma: Q,
    pub delta: Q,
    /// `theorem3` only: `alpha < 1`, equivalently `eta > (n-1)/p`.
    pub subcritical: bool,
}

pub const DEFAULT_GAMMA: (i64, i64) = (1, 10);
pub const DEFAULT_OMEGA: (i64, i64) = (1, 5);

impl ExponentSet {
    fn assemble(regime: Regime, n: u32, p: Q, q_: Q, a: Q, eta: Q, alpha: Q, alpha0: Q) -> Self {
        let gamma = q(DEFAULT_GAMMA.0, DEFAULT_GAMMA.1);
        let omega = q(DEFAULT_OMEGA.0, DEFAULT_OMEGA.1);
        let nq = qi(n as i64);
        let sigma = &nq / (&nq + &gamma);
        let delta = (q(1, 2) + &alpha) / qi(2);
        let subcritical = regime == Regime::Theorem3 && alpha < Q::one();
        ExponentSet { regime, n, p, q: q_, a, eta, alpha, alpha0, gamma, omega, sigma, delta, subcritical }
    }

    /// Replaces the molecule exponents; `sigma` follows from `gamma = n(1/sigma - 1)`.
    pub fn with_molecule_exponents(mut self, gamma: Q, omega: Q) -> Result<Self, Rejection> {
        let mut c = Checks::default();
        c.require(gamma.is_positive() && gamma < omega && omega < q(1, 4), Constraint::GammaOmegaOrder);
        c.finish()?;
        let nq = qi(self.n as i64);
        self.sigma = &nq / (&nq + &gamma);
        self.gamma = gamma;
        self.omega = omega;
        Ok(self)
    }

    /// Replaces the Lévy tail exponent.
    pub fn with_delta(mut self, delta: Q) -> Result<Self, Rejection> {
        let mut c = Checks::default();
        c.require(delta > q(1, 2) && delta < self.alpha, Constraint::DeltaWindow);
        c.finish()?;
        self.delta = delta;
        Ok(self)
    }

    /// Besov regularity index carried by the drift: `alpha/p`, shifted by
    /// `+eta` (`theorem3`) or `-eta` (`theorem4`).
    pub fn besov_index(&self) -> Q {
        let base = &self.alpha / &self.p;
        match self.regime {
            Regime::Theorem3 => base + &self.eta,
            Regime::Theorem4 => base - &self.eta,
            _ => base,
        }
    }
}

fn p_floor(n: &Q) -> Q {
    let a = n * (n - Q::one());
    let b = qi(2) * n;
    if a > b {
        a
    } else {
        b
    }
}

/// `alpha0 = 1 - (a - n)/q`.
pub fn alpha0_homogeneous(n: u32, q_: &Q, a: &Q) -> Result<Q, Rejection> {
    let nq = qi(n as i64);
    let mut c = Checks::default();
    c.require(n >= 2, Constraint::DimensionAtLeastTwo);
    c.require(q_.is_positive(), Constraint::QPositive);
    c.require(*a < &nq + q_, Constraint::ABelowNPlusQ);
    c.finish()?;
    Ok(Q::one() - (a - &nq) / q_)
}

/// Regime `theorem1`: `p = qn/(n-a)`, `alpha = (p+n)/(p+1)`, with `1 < alpha < alpha0 < 2`.
pub fn theorem1_plan(n: u32, q_: &Q, a: &Q) -> Result<ExponentSet, Rejection> {
    let nq = qi(n as i64);
    let mut c = Checks::default();
    c.require(n >= 2, Constraint::DimensionAtLeastTwo);
    c.require(q_.is_positive(), Constraint::QPositive);
    c.require(!a.is_negative(), Constraint::ANonNegative);
    c.require(*a < nq, Constraint::ABelowN);
    let qmin = {
        let x = (&nq - a) * (&nq - Q::one());
        let y = qi(2) * &nq;
        if x > y {
            x
        } else {
            y
        }
    };
    c.require(*q_ >= qmin, Constraint::QLowerBoundTheorem1);
    if !c.0.is_empty() {
        return Err(Rejection { violated: c.0 });
    }
    let p = q_ * &nq / (&nq - a);
    c.require(p > p_floor(&nq), Constraint::PLowerBound);
    let alpha = (&p + &nq) / (&p + Q::one());
    let alpha0 = alpha0_homogeneous(n, q_, a)?;
    c.require(Q::one() < alpha && alpha < alpha0 && alpha0 < qi(2), Constraint::AlphaChainTheorem1);
    c.finish()?;
    Ok(ExponentSet::assemble(Regime::Theorem1, n, p, q_.clone(), a.clone(), Q::zero(), alpha, alpha0))
}

/// Outcome of the Morrey-Campanato versus Besov competition.
#[derive(Debug, Clone, PartialEq)]
pub struct Competition {
    pub verdict: Verdict,
    /// Value of `a` at which the verdict flips.
    pub threshold: Q,
    pub set: ExponentSet,
}

/// Regime `theorem2`: `alpha = (p+n)/(p+1)`, `alpha0 = 1 + (n-a)/p`; Besov wins iff `a < alpha`.
pub fn theorem2_verdict(n: u32, p: &Q, a: &Q) -> Result<Competition, Rejection> {
    let nq = qi(n as i64);
    let mut c = Checks::default();
    c.require(n >= 2, Constraint::DimensionAtLeastTwo);
    c.require(*p > p_floor(&nq), Constraint::PLowerBound);
    c.require(!a.is_negative(), Constraint::ANonNegative);
    c.require(*a < nq, Constraint::ABelowN);
    c.finish()?;
    let alpha = (p + &nq) / (p + Q::one());
    let alpha0 = Q::one() + (&nq - a) / p;
    let verdict = if *a < alpha { Verdict::BesovWins } else { Verdict::BesovUseless };
    let set = ExponentSet::assemble(Regime::Theorem2, n, p.clone(), p.clone(), a.clone(), Q::zero(), alpha.clone(), alpha0);
    Ok(Competition { verdict, threshold: alpha, set })
}

/// Regime `theorem3` (smoothing drift): `alpha = (n + p(1-eta))/(p+1)`, `a = q eta + n - qn/p`.
pub fn theorem3_plan(n: u32, p: &Q, q_: &Q, eta: &Q) -> Result<ExponentSet, Rejection> {
    let nq = qi(n as i64);
    let mut c = Checks::default();
    c.require(n >= 2, Constraint::DimensionAtLeastTwo);
    c.require(*q_ >= qi(2) * &nq, Constraint::QAtLeastTwoN);
    c.require(eta.is_positive() && *eta < Q::one(), Constraint::EtaInUnitInterval);
    c.require(*p > p_floor(&nq), Constraint::PLowerBound);
    if !c.0.is_empty() {
        return Err(Rejection { violated: c.0 });
    }
    let alpha = (&nq + p * (Q::one() - eta)) / (p + Q::one());
    let a = q_ * eta + &nq - q_ * &nq / p;
    c.require(q(1, 2) < alpha && alpha < qi(2), Constraint::AlphaWindowTheorem3);
    let shifted = &alpha / p + eta;
    c.require(shifted.is_positive() && shifted < Q::one(), Constraint::ShiftedBesovExponentPlus);
    c.require(!a.is_negative(), Constraint::ANonNegative);
    c.require(a < nq, Constraint::ABelowN);
    c.finish()?;
    let alpha0 = alpha0_homogeneous(n, q_, &a)?;
    Ok(ExponentSet::assemble(Regime::Theorem3, n, p.clone(), q_.clone(), a, eta.clone(), alpha, alpha0))
}

/// Regime `theorem4` (roughening drift): `alpha = (n + p(1+eta))/(p+1)`, Besov wins iff
/// `a < (n + p(1 - p eta))/(p+1)`.
pub fn theorem4_verdict(n: u32, p: &Q, eta: &Q, a: &Q) -> Result<Competition, Rejection> {
    let nq = qi(n as i64);
    let mut c = Checks::default();
    c.require(n >= 2, Constraint::DimensionAtLeastTwo);
    c.require(
        eta.is_positive() && *eta < Q::one() / (qi(2) * (&nq - Q::one())),
        Constraint::EtaBelowHalfOverNMinusOne,
    );
    c.require(*p > p_floor(&nq), Constraint::PLowerBound);
    c.require(!a.is_negative(), Constraint::ANonNegative);
    c.require(*a < nq, Constraint::ABelowN);
    if !c.0.is_empty() {
        return Err(Rejection { violated: c.0 });
    }
    let alpha = (&nq + p * (Q::one() + eta)) / (p + Q::one());
    c.require(Q::one() < alpha && alpha < qi(2), Constraint::AlphaWindowTheorem4);
    let shifted = &alpha / p - eta;
    c.require(shifted.is_positive() && shifted < Q::one(), Constraint::ShiftedBesovExponentMinus);
    c.finish()?;
    let threshold = (&nq + p * (Q::one() - p * eta)) / (p + Q::one());
    let alpha0 = Q::one() + (&nq - a) / p;
    let verdict = if *a < threshold { Verdict::BesovWins } else { Verdict::BesovUseless };
    let set = ExponentSet::assemble(Regime::Theorem4, n, p.clone(), p.clone(), a.clone(), eta.clone(), alpha, alpha0);
    Ok(Competition { verdict, threshold, set })
}

/// Constants of the molecule-evolution argument.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoleculeParams {
    pub zeta: f64,
    pub nu0: f64,
    pub nu1: f64,
    pub beta0: f64,
    pub beta1: f64,
    pub m: f64,
    pub z: f64,
    pub pprime: f64,
    pub epsilon_geom: f64,
    /// Ceiling `alpha/(n+gamma) * cbar1 * frak_c` used as `K`.
    pub k: f64,
    pub frak_c: f64,
    pub negativity: [f64; 2],
    pub n: u32,
    pub alpha: f64,
    pub gamma: f64,
    pub omega: f64,
    pub p: f64,
}

impl MoleculeParams {
    /// `rho = zeta^beta1 r`, the mollification radius of the center ODE.
    pub fn rho(&self, r: f64) -> f64 {
        self.zeta.powf(self.beta1) * r
    }

    /// `rho0 = zeta^beta0 r`.
    pub fn rho0(&self, r: f64) -> f64 {
        self.zeta.powf(self.beta0) * r
    }
}

/// Volume of the unit ball in dimension `n`.
pub fn unit_ball_volume(n: u32) -> f64 {
    let nf = n as f64;
    std::f64::consts::PI.powf(nf / 2.0) / gamma_fn(nf / 2.0 + 1.0)
}

fn gamma_fn(x: f64) -> f64 {
    // Half-integers and integers only.
    if (x - x.round()).abs() < 1e-12 {
        (1..x.round() as i64).map(|k| k as f64).product()
    } else {
        let mut v = std::f64::consts::PI.sqrt();
        let mut t = 0.5;
        while t + 0.5 < x {
            v *= t;
            t += 1.0;
        }
        v
    }
}

/// `frak_c = (v_n (5^n - 1) - sqrt(2 v_n) 5^(n-omega)) / (2 5^(n+alpha))`.
pub fn frak_c(n: u32, omega: f64, alpha: f64) -> f64 {
    let nf = n as f64;
    let vn = unit_ball_volume(n);
    (vn * (5f64.powf(nf) - 1.0) - (2.0 * vn).sqrt() * 5f64.powf(nf - omega)) / (2.0 * 5f64.powf(nf + alpha))
}

/// Validates the molecule constants for `set` and computes `epsilon_geom`, the
/// negativity exponents and the `K` ceiling.
pub fn molecule_params(set: &ExponentSet, zeta: &Q, nu0: &Q, nu1: &Q, m: &Q, cbar1: f64) -> Result<MoleculeParams, Rejection> {
    let nq = qi(set.n as i64);
    let one = Q::one();
    let mut c = Checks::default();
    c.require(*zeta > one, Constraint::ZetaAboveOne);
    c.require(nu1.is_positive() && nu1 < nu0 && *nu0 < one, Constraint::NuOrder);
    let crit = &nq / (&one - &set.omega);
    c.require(*m > crit, Constraint::MAboveCritical);
    let pprime = &set.p / (&set.p - &one);
    c.require(one < pprime && pprime < crit, Constraint::PPrimeWindow);
    let inv_z = &one - m.recip() - set.p.recip();
    c.require(inv_z.is_positive(), Constraint::HolderTriple);
    let big_e = m * (&set.omega - &one) + &nq;
    c.require(big_e.is_negative(), Constraint::EpsilonGeomPositive);

    let s = set.besov_index();
    let conc = &nq / &pprime + &set.omega - &one;
    c.require(nu1 * &s < nu0 * &conc, Constraint::ConcentrationCoefficient);

    let beta0 = &one - nu0;
    let beta1 = &one + nu1;
    let e1 = &beta0 * (&set.omega - &one + &nq / &pprime) + &beta1 * &s - &nq - &set.omega + &set.alpha;
    c.require(e1.is_negative(), Constraint::NegativityExponent1);

    let zf = to_f64(zeta);
    let b0 = to_f64(&beta0);
    let b1 = to_f64(&beta1);
    let ef = to_f64(&big_e);
    let computable = zf > 1.0 && ef < 0.0 && b0 > 0.0 && inv_z.is_positive();
    let (eps, e2, z) = if computable {
        let eps = (1.0 - zf.powf((b1 - b0) * ef)).ln() / (ef * b0 * zf.ln());
        let z = inv_z.recip();
        let e2 = b0 * (1.0 + eps) * to_f64(&(&set.omega - &one + &nq / m)) + b1 * to_f64(&s) - to_f64(&nq)
            + to_f64(&(&nq / &z))
            - to_f64(&set.omega)
            + to_f64(&set.alpha);
        (eps, e2, z)
    } else {
        (f64::NAN, f64::NAN, Q::zero())
    };
    c.require(computable && e2 < 0.0, Constraint::NegativityExponent2);

    let annulus = &set.omega - &one + &s + &nq / &set.p;
    c.require(annulus.is_negative(), Constraint::AnnulusDecay);
    let tail = &set.omega - &set.delta + &nq / &set.p;
    c.require(tail.is_negative(), Constraint::TailDecay);
    c.finish()?;

    let alpha = to_f64(&set.alpha);
    let gamma = to_f64(&set.gamma);
    let omega = to_f64(&set.omega);
    let fc = frak_c(set.n, omega, alpha);
    let k = alpha / (set.n as f64 + gamma) * cbar1 * fc;
    Ok(MoleculeParams {
        zeta: zf,
        nu0: to_f64(nu0),
        nu1: to_f64(nu1),
        beta0: b0,
        beta1: b1,
        m: to_f64(m),
        z: to_f64(&z),
        pprime: to_f64(&pprime),
        epsilon_geom: eps,
        k,
        frak_c: fc,
        negativity: [to_f64(&e1), e2],
        n: set.n,
        alpha,
        gamma,
        omega,
        p: to_f64(&set.p),
    })
}

/// Default `nu0`, `nu1` and `m = 2n/(1-omega)`.
pub fn default_molecule_knobs(set: &ExponentSet) -> (Q, Q, Q) {
    let m = qi(2 * set.n as i64) / (Q::one() - &set.omega);
    (q(1, 20), q(1, 10_000), m)
}

/// Smallest `zeta = 10^k`, `k = 1..=12`, for which [`molecule_params`] accepts.
pub fn default_zeta(set: &ExponentSet, nu0: &Q, nu1: &Q, m: &Q, cbar1: f64) -> Result<MoleculeParams, Rejection> {
    let mut last = None;
    for k in 1..=12 {
        let zeta = Q::from_integer(num_traits::pow(BigInt::from(10), k));
        match molecule_params(set, &zeta, nu0, nu1, m, cbar1) {
            Ok(mp) => return Ok(mp),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("8/7").unwrap(), q(8, 7));
        assert_eq!(parse_rational("1.5").unwrap(), q(3, 2));
        assert_eq!(parse_rational("-0.25").unwrap(), q(-1, 4));
        assert_eq!(parse_rational("1e-4").unwrap(), q(1, 10_000));
        assert_eq!(parse_rational(" 6 ").unwrap(), qi(6));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn alpha0_examples() {
        assert_eq!(alpha0_homogeneous(2, &qi(6), &qi(0)).unwrap(), q(4, 3));
        assert_eq!(alpha0_homogeneous(2, &qi(6), &q(3, 2)).unwrap(), q(13, 12));
        for qq in [1, 3, 7, 11] {
            assert_eq!(alpha0_homogeneous(2, &qi(qq), &qi(2)).unwrap(), qi(1));
        }
        assert_eq!(alpha0_homogeneous(2, &qi(0), &qi(0)).unwrap_err().first(), Constraint::QPositive);
        assert_eq!(alpha0_homogeneous(2, &qi(6), &qi(8)).unwrap_err().first(), Constraint::ABelowNPlusQ);
    }

    #[test]
    fn theorem1_examples() {
        let s = theorem1_plan(2, &qi(6), &qi(0)).unwrap();
        assert_eq!((s.p.clone(), s.alpha.clone(), s.alpha0.clone()), (qi(6), q(8, 7), q(4, 3)));
        assert!(s.alpha < s.alpha0);
        let r = theorem1_plan(2, &qi(4), &qi(0)).unwrap_err();
        assert_eq!(r.violated, vec![Constraint::PLowerBound]);
        let mut prev = qi(2);
        for qq in [6, 12, 24, 48, 96, 1000] {
            let s = theorem1_plan(2, &qi(qq), &q(1, 2)).unwrap();
            assert!(s.alpha < prev && s.alpha > qi(1));
            prev = s.alpha;
        }
        assert!(theorem1_plan(2, &qi(6), &qi(2)).unwrap_err().violated.contains(&Constraint::ABelowN));
    }

    #[test]
    fn theorem2_examples() {
        let c = theorem2_verdict(2, &qi(6), &qi(1)).unwrap();
        assert_eq!((c.set.alpha.clone(), c.set.alpha0.clone(), c.verdict), (q(8, 7), q(7, 6), Verdict::BesovWins));
        let c = theorem2_verdict(2, &qi(6), &q(8, 7)).unwrap();
        assert_eq!(c.verdict, Verdict::BesovUseless);
        assert_eq!(c.set.alpha0, q(8, 7));
        assert!(c.set.alpha0 <= c.set.alpha);
        assert_eq!(theorem2_verdict(2, &qi(6), &qi(0)).unwrap().verdict, Verdict::BesovWins);
        assert!(theorem2_verdict(2, &qi(4), &qi(0)).is_err());
    }

    #[test]
    fn theorem3_examples() {
        let s = theorem3_plan(2, &qi(8), &qi(8), &q(1, 5)).unwrap();
        assert_eq!((s.alpha.clone(), s.a.clone()), (q(14, 15), q(8, 5)));
        assert!(s.subcritical);
        let s = theorem3_plan(2, &qi(8), &qi(8), &q(1, 8)).unwrap();
        assert_eq!(s.alpha, qi(1));
        assert!(!s.subcritical);
        let r = theorem3_plan(2, &qi(8), &qi(8), &q(3, 10)).unwrap_err();
        assert_eq!(r.violated, vec![Constraint::ABelowN]);
        assert!(theorem3_plan(2, &qi(8), &qi(3), &q(1, 5)).unwrap_err().violated.contains(&Constraint::QAtLeastTwoN));
    }

    #[test]
    fn theorem4_examples() {
        let c = theorem4_verdict(2, &qi(6), &q(1, 20), &q(1, 2)).unwrap();
        assert_eq!((c.set.alpha.clone(), c.threshold.clone()), (q(83, 70), q(31, 35)));
        assert_eq!(c.verdict, Verdict::BesovWins);
        assert_eq!(theorem4_verdict(2, &qi(6), &q(1, 20), &q(9, 10)).unwrap().verdict, Verdict::BesovUseless);
        let r = theorem4_verdict(2, &qi(6), &q(1, 2), &qi(0)).unwrap_err();
        assert_eq!(r.first(), Constraint::EtaBelowHalfOverNMinusOne);
    }

    #[test]
    fn theorem4_threshold_tends_to_theorem2_alpha() {
        let p = qi(6);
        let a2 = theorem2_verdict(2, &p, &qi(0)).unwrap().threshold;
        for k in 3..12 {
            let eta = Q::new(BigInt::from(1), num_traits::pow(BigInt::from(10), k));
            let t4 = theorem4_verdict(2, &p, &eta, &qi(0)).unwrap().threshold;
            assert_eq!(&a2 - &t4, &p * &p * &eta / (&p + qi(1)));
        }
    }

    fn thm1_default() -> ExponentSet {
        theorem1_plan(2, &qi(6), &qi(0)).unwrap()
    }

    #[test]
    fn molecule_params_rejects_large_zeta_example() {
        let s = thm1_default();
        let (nu0, nu1, m) = default_molecule_knobs(&s);
        assert_eq!(m, qi(5));
        let r = molecule_params(&s, &qi(10_000), &nu0, &nu1, &m, 1.0).unwrap_err();
        assert_eq!(r.violated, vec![Constraint::NegativityExponent2]);
    }

    #[test]
    fn molecule_params_accepts_moderate_zeta() {
        let s = thm1_default();
        let (nu0, nu1, m) = default_molecule_knobs(&s);
        for z in [10, 100, 1000] {
            let mp = molecule_params(&s, &qi(z), &nu0, &nu1, &m, 1.0).unwrap();
            assert!(mp.epsilon_geom > 0.0);
            assert!(mp.negativity.iter().all(|e| *e < 0.0));
            assert!(mp.k > 0.0 && mp.k <= mp.alpha / 2.1 * mp.frak_c + 1e-15);
        }
        let mp = default_zeta(&s, &nu0, &nu1, &m, 1.0).unwrap();
        assert_eq!(mp.zeta, 10.0);
    }

    #[test]
    fn molecule_params_rejections() {
        let s = thm1_default();
        let (nu0, _, m) = default_molecule_knobs(&s);
        // with nu1 < nu0 the coefficient condition cannot fail in this regime
        let r = molecule_params(&s, &qi(10), &q(1, 100), &q(1, 20), &m, 1.0).unwrap_err();
        assert!(r.violated.contains(&Constraint::NuOrder));
        assert!(r.violated.contains(&Constraint::ConcentrationCoefficient));
        let r = molecule_params(&s, &qi(10), &nu0, &q(1, 10_000), &q(5, 2), 1.0).unwrap_err();
        assert_eq!(r.first(), Constraint::MAboveCritical);
        let r = molecule_params(&s, &qi(1), &nu0, &q(1, 10_000), &m, 1.0).unwrap_err();
        assert_eq!(r.first(), Constraint::ZetaAboveOne);
    }

    #[test]
    fn frak_c_two_dimensions() {
        // pi*24 - sqrt(2 pi) 5^1.8, over 2 * 5^(2+alpha)
        let a: f64 = 8.0 / 7.0;
        let pi = std::f64::consts::PI;
        let expect = (24.0 * pi - (2.0 * pi).sqrt() * 5f64.powf(1.8)) / (2.0 * 5f64.powf(2.0 + a));
        assert!((frak_c(2, 0.2, a) - expect).abs() < 1e-15);
        assert!((unit_ball_volume(2) - pi).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * pi / 3.0).abs() < 1e-14);
    }

    #[test]
    fn sigma_matches_gamma() {
        let s = thm1_default();
        let nq = qi(2);
        assert_eq!(&s.gamma, &(&nq * (s.sigma.recip() - qi(1))));
        let s = s.with_molecule_exponents(q(1, 20), q(1, 8)).unwrap();
        assert_eq!(&s.gamma, &(&nq * (s.sigma.recip() - qi(1))));
        assert!(thm1_default().with_molecule_exponents(q(1, 5), q(1, 10)).is_err());
    }
}
