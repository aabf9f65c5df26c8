//! Closed-form thresholds and work bounds, plus the irrational capacity
//! augmentation constants as directed rational enclosures.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed};

use crate::model::TaskMetrics;
use crate::scalar::Scalar;
use crate::work::WorkError;
use crate::Rational;

/// G-RM utilization-tensity bound: `U <= (1-γ)(2-γ)/(4-γ)`.
pub fn rm_ut_threshold<S: Scalar>(gamma_max: &S) -> S {
    let one = S::one();
    let two = S::from_u64(2);
    let four = S::from_u64(4);
    (one - gamma_max.clone()) * (two - gamma_max.clone()) / (four - gamma_max.clone())
}

/// Straightforward G-RM bound: `U <= (1-γ)^2 / 2`.
pub fn rm_basic_threshold<S: Scalar>(gamma_max: &S) -> S {
    let slack = S::one() - gamma_max.clone();
    slack.clone() * slack / S::from_u64(2)
}

/// G-EDF utilization-tensity bound: `U <= (1-γ)^2`.
pub fn edf_ut_threshold<S: Scalar>(gamma_max: &S) -> S {
    let slack = S::one() - gamma_max.clone();
    slack.clone() * slack
}

/// Classical sequential G-RM utilization bound `(1 - u_max) m / 2 + u_max`.
/// With `γ_max` in place of `u_max` it is the light-parallel form.
pub fn sequential_rm_bound<S: Scalar>(u_max: &S, m: u32) -> S {
    (S::one() - u_max.clone()) * S::from_u64(m as u64) / S::from_u64(2) + u_max.clone()
}

/// Ceiling on `work(t, 1) / t` for every `t > 0`:
/// `(u-γ)/(1-γ)` for heavy tasks, `u` otherwise.
pub fn unit_work_bound<S: Scalar>(utilization: &S, tensity: &S) -> Result<S, WorkError> {
    if *utilization > S::one() {
        let denom = S::one() - tensity.clone();
        if denom <= S::zero() {
            return Err(WorkError::DegenerateTensity);
        }
        Ok((utilization.clone() - tensity.clone()) / denom)
    } else {
        Ok(utilization.clone())
    }
}

/// Ceiling on `work(t, 1) / t` for `t >= T`:
/// `(2u-γ)/(2-γ)` for heavy tasks, `u` otherwise.
pub fn geq_period_work_bound<S: Scalar>(utilization: &S, tensity: &S) -> Result<S, WorkError> {
    if *utilization > S::one() {
        let two = S::from_u64(2);
        let denom = two.clone() - tensity.clone();
        if denom <= S::zero() {
            return Err(WorkError::DegenerateTensity);
        }
        Ok((two * utilization.clone() - tensity.clone()) / denom)
    } else {
        Ok(utilization.clone())
    }
}

/// Ceiling on `work(t, s) / t` for `s > 1`: `(u-1)/(1-1/s)` if `u > s`, else `u`.
pub fn speed_work_bound<S: Scalar>(utilization: &S, speed: &S) -> Result<S, WorkError> {
    if *speed <= S::one() {
        return Err(WorkError::SpeedNotAboveOne);
    }
    if utilization > speed {
        Ok((utilization.clone() - S::one()) / (S::one() - S::one() / speed.clone()))
    } else {
        Ok(utilization.clone())
    }
}

pub fn bound_unit(metrics: &TaskMetrics) -> Result<Rational, WorkError> {
    unit_work_bound(&metrics.utilization, &metrics.tensity)
}

pub fn bound_geq_period(metrics: &TaskMetrics) -> Result<Rational, WorkError> {
    geq_period_work_bound(&metrics.utilization, &metrics.tensity)
}

pub fn bound_speed(metrics: &TaskMetrics, speed: &Rational) -> Result<Rational, WorkError> {
    speed_work_bound(&metrics.utilization, speed)
}

/// Closed interval `[lo, hi]` known to contain an irrational constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rational,
    pub hi: Rational,
}

/// Decimal digits kept for square-root enclosures.
const SQRT_DIGITS: usize = 20;

impl Enclosure {
    pub fn exact(value: Rational) -> Enclosure {
        Enclosure { lo: value.clone(), hi: value }
    }

    /// Encloses `√n` within `10^-20`.
    pub fn sqrt(n: u64) -> Enclosure {
        let scale = num_traits::pow(BigUint::from(10u32), SQRT_DIGITS);
        let scaled = BigUint::from(n) * &scale * &scale;
        let root = scaled.sqrt();
        let exact = &root * &root == scaled;
        let denom = BigInt::from(scale);
        let lo = Rational::new(BigInt::from(root.clone()), denom.clone());
        let hi = if exact { lo.clone() } else { Rational::new(BigInt::from(root + 1u32), denom) };
        Enclosure { lo, hi }
    }

    /// `a + b·x` for the enclosed `x`.
    pub fn affine(&self, a: &Rational, b: &Rational) -> Enclosure {
        let p = a + b * &self.lo;
        let q = a + b * &self.hi;
        if p <= q {
            Enclosure { lo: p, hi: q }
        } else {
            Enclosure { lo: q, hi: p }
        }
    }

    /// `1 / x`; the enclosure must not contain zero.
    pub fn recip(&self) -> Enclosure {
        assert!(self.lo.is_positive() || self.hi.is_negative(), "enclosure straddles zero");
        Enclosure { lo: self.hi.recip(), hi: self.lo.recip() }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, value: &Rational) -> bool {
        &self.lo <= value && value <= &self.hi
    }

    pub fn approx(&self) -> f64 {
        ((&self.lo + &self.hi) / Rational::from_u64(2)).approx_f64()
    }
}

/// Which capacity augmentation bound a CAB test uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CabConstant {
    /// G-RM, `(7 + √33) / 4 ≈ 3.186`.
    RmNew,
    /// G-RM, `2 + √3 ≈ 3.732`.
    RmLi,
    /// G-EDF, `(3 + √5) / 2 ≈ 2.618`.
    Edf,
}

#[derive(Clone, Debug)]
pub struct BoundConstants {
    pub rho_rm_new: Enclosure,
    pub rho_rm_li: Enclosure,
    pub rho_edf: Enclosure,
}

impl BoundConstants {
    pub fn get() -> &'static BoundConstants {
        static CONSTANTS: OnceLock<BoundConstants> = OnceLock::new();
        CONSTANTS.get_or_init(|| {
            let quarter = Rational::from_ratio(1, 4);
            let half = Rational::from_ratio(1, 2);
            BoundConstants {
                rho_rm_new: Enclosure::sqrt(33).affine(&Rational::from_ratio(7, 4), &quarter),
                rho_rm_li: Enclosure::sqrt(3).affine(&Rational::from_u64(2), &Rational::one()),
                rho_edf: Enclosure::sqrt(5).affine(&Rational::from_ratio(3, 2), &half),
            }
        })
    }

    pub fn rho(&self, which: CabConstant) -> &Enclosure {
        match which {
            CabConstant::RmNew => &self.rho_rm_new,
            CabConstant::RmLi => &self.rho_rm_li,
            CabConstant::Edf => &self.rho_edf,
        }
    }
}

impl CabConstant {
    pub fn rho(self) -> &'static Enclosure {
        BoundConstants::get().rho(self)
    }

    /// Lower endpoint of `1/ρ`: thresholds compared against it can only be
    /// stricter than the exact constant.
    pub fn threshold(self) -> Rational {
        self.rho().hi.recip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{fig2_task, single_vertex};
    use crate::rat;

    fn tolerance() -> Rational {
        rat(1, 1_000_000_000_000)
    }

    #[test]
    fn rm_ut_threshold_values() {
        assert_eq!(rm_ut_threshold(&rat(0, 1)), rat(1, 2));
        assert_eq!(rm_ut_threshold(&rat(1, 2)), rat(3, 14));
        assert_eq!(rm_ut_threshold(&rat(2, 3)), rat(2, 15));
        assert_eq!(rm_ut_threshold(&rat(1, 1)), rat(0, 1));
    }

    #[test]
    fn other_thresholds() {
        assert_eq!(rm_basic_threshold(&rat(0, 1)), rat(1, 2));
        assert_eq!(rm_basic_threshold(&rat(1, 1)), rat(0, 1));
        assert_eq!(edf_ut_threshold(&rat(0, 1)), rat(1, 1));
        assert_eq!(edf_ut_threshold(&rat(1, 2)), rat(1, 4));
        let edf = edf_ut_threshold(&0.9f64);
        let rm = rm_ut_threshold(&0.9f64);
        assert!((edf - 0.01).abs() < 1e-12);
        assert!((rm - 0.1 * 1.1 / 3.1).abs() < 1e-12);
        assert!(edf < rm);
    }

    #[test]
    fn rm_basic_at_two_minus_sqrt3() {
        let gamma = Enclosure::sqrt(3).affine(&rat(2, 1), &rat(-1, 1));
        let value = rm_basic_threshold(&gamma.lo);
        assert!((value - &gamma.lo).abs() < tolerance());
    }

    #[test]
    fn constants_are_tight_and_ordered() {
        let c = BoundConstants::get();
        for e in [&c.rho_rm_new, &c.rho_rm_li, &c.rho_edf] {
            assert!(e.width() < tolerance());
            assert!(e.lo <= e.hi);
        }
        assert!(c.rho_rm_new.hi < c.rho_rm_li.lo);
        assert!((c.rho_rm_new.approx() - 3.1861).abs() < 1e-4);
        assert!((c.rho_rm_li.approx() - 3.7321).abs() < 1e-4);
        assert!((c.rho_edf.approx() - 2.6180).abs() < 1e-4);
        // (7 - √33)/4 = 1/ρ
        let inv = Enclosure::sqrt(33).affine(&rat(7, 4), &rat(-1, 4));
        assert!(CabConstant::RmNew.threshold() <= inv.hi);
        assert!((CabConstant::RmNew.threshold() - &inv.lo).abs() < tolerance());
        let t = CabConstant::RmNew.threshold();
        assert!(t > rat(0, 1) && t < rat(1, 1));
    }

    #[test]
    fn sqrt_of_perfect_square_is_exact() {
        assert_eq!(Enclosure::sqrt(49), Enclosure::exact(rat(7, 1)));
    }

    #[test]
    fn work_bound_examples() {
        let m = fig2_task().metrics();
        assert_eq!(bound_unit(&m).unwrap(), rat(8, 5));
        assert_eq!(bound_geq_period(&m).unwrap(), rat(13, 10));
        assert_eq!(bound_speed(&m, &rat(2, 1)).unwrap(), rat(6, 5));
        let light = single_vertex(4, 8).metrics();
        assert_eq!(bound_unit(&light).unwrap(), rat(1, 2));
        assert_eq!(bound_geq_period(&light).unwrap(), rat(1, 2));
        assert_eq!(unit_work_bound(&rat(1, 1), &rat(1, 1)).unwrap(), rat(1, 1));
        assert_eq!(unit_work_bound(&rat(3, 2), &rat(1, 1)), Err(WorkError::DegenerateTensity));
        assert_eq!(speed_work_bound(&rat(3, 1), &rat(2, 1)).unwrap(), rat(4, 1));
        assert_eq!(speed_work_bound(&rat(3, 2), &rat(2, 1)).unwrap(), rat(3, 2));
        assert_eq!(speed_work_bound(&rat(3, 2), &rat(1, 1)), Err(WorkError::SpeedNotAboveOne));
        // γ -> 0 tightens the heavy bound towards u.
        let near_zero = geq_period_work_bound(&rat(3, 1), &rat(1, 1_000_000)).unwrap();
        assert!((near_zero - rat(3, 1)).abs() < rat(1, 100_000));
    }

    #[test]
    fn sequential_bound() {
        assert_eq!(sequential_rm_bound(&rat(1, 2), 4), rat(3, 2));
    }
}
