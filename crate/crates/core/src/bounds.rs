//! Exact integer solutions of the growth-counting inequalities that bound
//! the Natarajan dimension of tree, forest and network classes.
//!
//! Each inequality has the form `2^N <= RHS(N)` with `RHS` growing
//! polynomially in `N`, so `N - log2 RHS(N)` is convex and the feasible set
//! is an interval. The solver gallops upward, bisects to the flip point, and
//! certifies that the inequality holds at `max_N` and fails at `max_N + 1`.
//! Verdicts come from exact big-integer arithmetic whenever the numbers fit
//! under [`EXACT_BITS`]; the network inequality, which involves `e`, is
//! decided between rational enclosures of `e` that are refined until they
//! separate. Larger instances fall back to the `log2` evaluation and the
//! report is flagged `log_domain`.

use std::fmt;

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest operand, in bits, for which verdicts are computed exactly.
pub const EXACT_BITS: f64 = (1u64 << 22) as f64;
/// Upper end of the search for `max_N`.
pub const SCAN_CAP: u64 = 1_000_000_000;

/// Which counting inequality a report solves; the numeric ids are the CLI's.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum BoundKind {
    Tree = 1,
    Forest = 2,
    BinaryNetwork = 3,
    ReluNetwork = 4,
}

impl From<BoundKind> for u8 {
    fn from(k: BoundKind) -> u8 {
        k as u8
    }
}

impl TryFrom<u8> for BoundKind {
    type Error = Error;

    fn try_from(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Self::Tree),
            2 => Ok(Self::Forest),
            3 => Ok(Self::BinaryNetwork),
            4 => Ok(Self::ReluNetwork),
            _ => Err(Error::InvalidParameter(format!("unknown theorem id {id}, expected 1..=4"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundParams {
    pub p: u64,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    pub d: u64,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub trees: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: BoundKind,
    pub params: BoundParams,
    #[serde(rename = "max_N")]
    pub max_n: u64,
    pub inequality_text: String,
    /// `true` when the flip at `max_N` was decided in `log2` floating point
    /// rather than exactly.
    pub log_domain: bool,
    pub asymptotic: Vec<String>,
}

#[derive(Clone, Copy, Debug)]
enum Inequality {
    /// `2^N <= (p(N+1))^(T(2^(L-1)-1)) * d^(T 2^(L-1))`
    Trees { p: u64, depth: u32, d: u64, trees: u64 },
    /// `2^N <= (8e(p+1) N (p+d^2) 2^p / (p(1+d)))^(p(1+d))`
    Network { p: u64, d: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Verdict {
    Exact(bool),
    Log(bool),
}

impl Verdict {
    fn holds(self) -> bool {
        matches!(self, Verdict::Exact(true) | Verdict::Log(true))
    }
}

impl Inequality {
    fn query_exponent(depth: u32, trees: u64) -> u64 {
        trees * ((1u64 << (depth - 1)) - 1)
    }

    fn leaf_exponent(depth: u32, trees: u64) -> u64 {
        trees * (1u64 << (depth - 1))
    }

    /// `log2 RHS(N) - N`; the inequality holds iff this is `>= 0`.
    fn log_margin(&self, n: u64) -> f64 {
        let nf = n as f64;
        match *self {
            Inequality::Trees { p, depth, d, trees } => {
                let q = Self::query_exponent(depth, trees) as f64;
                let l = Self::leaf_exponent(depth, trees) as f64;
                q * (p as f64 * (nf + 1.0)).log2() + l * (d as f64).log2() - nf
            }
            Inequality::Network { p, d } => {
                if n == 0 {
                    return f64::NEG_INFINITY;
                }
                let (pf, df) = (p as f64, d as f64);
                let k = pf * (1.0 + df);
                let inner = 3.0 + std::f64::consts::LOG2_E + (pf + 1.0).log2() + nf.log2()
                    + (pf + df * df).log2()
                    + pf
                    - k.log2();
                k * inner - nf
            }
        }
    }

    /// Estimated size in bits of the largest operand of the exact check.
    fn exact_bits(&self, n: u64) -> f64 {
        let rhs = self.log_margin(n) + n as f64;
        let extra = match *self {
            Inequality::Trees { .. } => 0.0,
            // enclosure denominators: (B * K! * K)^k with K <= 60
            Inequality::Network { p, d } => (p * (1 + d)) as f64 * (300.0 + ((p * (1 + d)) as f64).log2()),
        };
        (n as f64).max(rhs.max(0.0)) + extra
    }

    fn exact(&self, n: u64) -> Option<bool> {
        if self.exact_bits(n) > EXACT_BITS {
            return None;
        }
        let lhs = BigUint::one() << n;
        match *self {
            Inequality::Trees { p, depth, d, trees } => {
                let q = u32::try_from(Self::query_exponent(depth, trees)).ok()?;
                let l = u32::try_from(Self::leaf_exponent(depth, trees)).ok()?;
                let base = BigUint::from(p) * BigUint::from(n + 1);
                let rhs = base.pow(q) * BigUint::from(d).pow(l);
                Some(lhs <= rhs)
            }
            Inequality::Network { p, d } => {
                if n == 0 {
                    return Some(false);
                }
                let k = u32::try_from(p * (1 + d)).ok()?;
                let a = BigUint::from(8u32)
                    * BigUint::from(p + 1)
                    * BigUint::from(n)
                    * BigUint::from(p + d * d)
                    * (BigUint::one() << p);
                let b = BigUint::from(p * (1 + d));
                let mut terms = 20;
                while terms <= 60 {
                    let (lo, hi, den) = e_enclosure(terms);
                    let scaled = &lhs * (&b * &den).pow(k);
                    if scaled <= (&lo * &a).pow(k) {
                        return Some(true);
                    }
                    if scaled > (&hi * &a).pow(k) {
                        return Some(false);
                    }
                    terms += 20;
                }
                None
            }
        }
    }

    fn verdict(&self, n: u64) -> Verdict {
        match self.exact(n) {
            Some(v) => Verdict::Exact(v),
            None => Verdict::Log(self.log_margin(n) >= 0.0),
        }
    }
}

/// `(lo, hi, den)` with `lo/den < e < hi/den`, from the first `terms + 1`
/// terms of `sum 1/j!`. The tail is below `1/(terms! * terms)`.
fn e_enclosure(terms: u32) -> (BigUint, BigUint, BigUint) {
    let mut fact = BigUint::one();
    for j in 2..=terms {
        fact *= j;
    }
    // sum_{j<=K} K!/j!
    let mut sum = BigUint::zero();
    let mut term = BigUint::one();
    for j in (0..=terms).rev() {
        sum += &term;
        if j > 0 {
            term *= j;
        }
    }
    let k = BigUint::from(terms);
    let lo = &sum * &k;
    let hi = &lo + 1u32;
    (lo, hi, fact * k)
}

fn solve(ineq: Inequality, start: u64) -> Result<(u64, bool)> {
    if !ineq.verdict(start).holds() {
        return Err(Error::Certification(format!("inequality fails at the starting point N = {start}")));
    }
    let mut lo = start;
    let mut hi = start + 1;
    while ineq.verdict(hi).holds() {
        lo = hi;
        hi = hi.saturating_mul(2);
        if hi > SCAN_CAP {
            return Err(Error::ScanCap { what: format!("{ineq:?}"), cap: SCAN_CAP });
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ineq.verdict(mid).holds() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let at = ineq.verdict(lo);
    let past = ineq.verdict(lo + 1);
    if !at.holds() || past.holds() {
        return Err(Error::Certification(format!("no flip at N = {lo} for {ineq:?}")));
    }
    let log_domain = matches!(at, Verdict::Log(_)) || matches!(past, Verdict::Log(_));
    Ok((lo, log_domain))
}

fn check_positive(name: &str, v: u64) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidParameter(format!("{name} must be >= 1")));
    }
    Ok(())
}

fn check_depth(depth: u32) -> Result<()> {
    if depth == 0 || depth > 40 {
        return Err(Error::InvalidParameter(format!("depth L = {depth} must lie in 1..=40")));
    }
    Ok(())
}

/// `log2` of the tree growth bound `(p(n+1))^(2^(L-1)-1) * d^(2^(L-1))`.
pub fn tree_growth_bound(p: u64, n: u64, depth: u32, d: u64) -> f64 {
    let ineq = Inequality::Trees { p, depth, d, trees: 1 };
    ineq.log_margin(n) + n as f64
}

/// The tree growth bound as an exact integer.
pub fn tree_growth_bound_exact(p: u64, n: u64, depth: u32, d: u64) -> BigUint {
    let v = (1u32 << (depth - 1)) - 1;
    (BigUint::from(p) * BigUint::from(n + 1)).pow(v) * BigUint::from(d).pow(1u32 << (depth - 1))
}

pub fn solve_thm1(p: u64, depth: u32, d: u64) -> Result<BoundReport> {
    check_positive("p", p)?;
    check_positive("d", d)?;
    check_depth(depth)?;
    let (max_n, log_domain) = solve(Inequality::Trees { p, depth, d, trees: 1 }, 0)?;
    Ok(BoundReport {
        theorem: BoundKind::Tree,
        params: BoundParams { p, depth: Some(depth), d, trees: None },
        max_n,
        inequality_text: format!(
            "2^N <= ({p}(N+1))^{} * {d}^{}",
            (1u64 << (depth - 1)) - 1,
            1u64 << (depth - 1)
        ),
        log_domain,
        asymptotic: vec!["O(L 2^L log(pd))".into()],
    })
}

pub fn solve_thm2(p: u64, depth: u32, trees: u64, d: u64) -> Result<BoundReport> {
    check_positive("p", p)?;
    check_positive("d", d)?;
    check_positive("T", trees)?;
    check_depth(depth)?;
    let (max_n, log_domain) = solve(Inequality::Trees { p, depth, d, trees }, 0)?;
    Ok(BoundReport {
        theorem: BoundKind::Forest,
        params: BoundParams { p, depth: Some(depth), d, trees: Some(trees) },
        max_n,
        inequality_text: format!(
            "2^N <= ({p}(N+1))^{} * {d}^{}",
            trees * ((1u64 << (depth - 1)) - 1),
            trees * (1u64 << (depth - 1))
        ),
        log_domain,
        // the two renderings disagree on whether T enters the logarithm
        asymptotic: vec!["O(L T 2^L log(pd))".into(), "O(L T 2^L log(pdT))".into()],
    })
}

/// Shared network inequality; reported under the binary/linear id.
pub fn solve_thm34(p: u64, d: u64) -> Result<BoundReport> {
    solve_network(BoundKind::BinaryNetwork, p, d)
}

pub fn solve_network(kind: BoundKind, p: u64, d: u64) -> Result<BoundReport> {
    if !matches!(kind, BoundKind::BinaryNetwork | BoundKind::ReluNetwork) {
        return Err(Error::InvalidParameter(format!("{kind:?} is not a network bound")));
    }
    check_positive("p", p)?;
    if d < 2 {
        return Err(Error::InvalidParameter("network bounds need d >= 2".into()));
    }
    let (max_n, log_domain) = solve(Inequality::Network { p, d }, 1)?;
    Ok(BoundReport {
        theorem: kind,
        params: BoundParams { p, depth: None, d, trees: None },
        max_n,
        inequality_text: format!(
            "2^N <= (8e*{}*N*{}*2^{p} / {})^{}",
            p + 1,
            p + d * d,
            p * (1 + d),
            p * (1 + d)
        ),
        log_domain,
        asymptotic: vec!["O(d p^2)".into()],
    })
}

/// Dispatches on the CLI's theorem id.
pub fn solve_theorem(id: u8, p: u64, depth: Option<u32>, d: u64, trees: Option<u64>) -> Result<BoundReport> {
    let need_depth = || depth.ok_or_else(|| Error::InvalidParameter("this bound needs L".into()));
    match BoundKind::try_from(id)? {
        BoundKind::Tree => solve_thm1(p, need_depth()?, d),
        BoundKind::Forest => solve_thm2(
            p,
            need_depth()?,
            trees.ok_or_else(|| Error::InvalidParameter("the forest bound needs T".into()))?,
            d,
        ),
        kind => solve_network(kind, p, d),
    }
}

/// Upper bound `4.67 * log2(d) * d_N` on the graph dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichBound {
    pub d_n: u64,
    pub d: u64,
}

/// `4.67` as an exact ratio.
pub const BEN_DAVID_NUM: u64 = 467;
pub const BEN_DAVID_DEN: u64 = 100;

impl SandwichBound {
    pub fn value(&self) -> f64 {
        BEN_DAVID_NUM as f64 / BEN_DAVID_DEN as f64 * (self.d as f64).log2() * self.d_n as f64
    }

    /// The bound as a ratio when `log2(d)` is an integer.
    pub fn as_ratio(&self) -> Option<Ratio<u64>> {
        self.d
            .is_power_of_two()
            .then(|| Ratio::new(BEN_DAVID_NUM * self.d_n * self.d.trailing_zeros() as u64, BEN_DAVID_DEN))
    }

    /// Exactly decides `d_G <= (467/100) log2(d) d_N`, i.e. `2^(100 d_G) <= d^(467 d_N)`.
    pub fn admits(&self, d_g: u64) -> bool {
        if self.d.is_power_of_two() {
            return BEN_DAVID_DEN * d_g <= BEN_DAVID_NUM * self.d_n * self.d.trailing_zeros() as u64;
        }
        let lhs_exp = BEN_DAVID_DEN * d_g;
        let rhs_exp = BEN_DAVID_NUM * self.d_n;
        // 2^a <= x  iff  x has more than a bits
        BigUint::from(self.d).pow(rhs_exp as u32).bits() > lhs_exp
    }
}

impl fmt::Display for SandwichBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_ratio() {
            Some(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            None => write!(f, "4.67*log2({})*{}", self.d, self.d_n),
        }
    }
}

pub fn bendavid_gap(d_n: u64, d: u64) -> Result<SandwichBound> {
    if d < 2 {
        return Err(Error::InvalidParameter("the sandwich bound needs d >= 2".into()));
    }
    if d_n > 1 << 20 {
        return Err(Error::InvalidParameter(format!("d_N = {d_n} is out of range")));
    }
    Ok(SandwichBound { d_n, d })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_bound_values() {
        assert_eq!(tree_growth_bound(1, 3, 2, 2), 4.0);
        assert_eq!(tree_growth_bound_exact(1, 3, 2, 2), BigUint::from(16u32));
        // constant trees: bound is d
        assert!((tree_growth_bound(5, 10, 1, 3) - 3f64.log2()).abs() < 1e-12);
        assert_eq!(tree_growth_bound_exact(5, 10, 1, 3), BigUint::from(3u32));
    }

    #[test]
    fn growth_bound_is_monotone() {
        let base = tree_growth_bound(2, 5, 3, 3);
        assert!(tree_growth_bound(3, 5, 3, 3) >= base);
        assert!(tree_growth_bound(2, 6, 3, 3) >= base);
        assert!(tree_growth_bound(2, 5, 4, 3) >= base);
        assert!(tree_growth_bound(2, 5, 3, 4) >= base);
    }

    #[test]
    fn stump_bound_is_four() {
        let r = solve_thm1(1, 2, 2).unwrap();
        assert_eq!(r.max_n, 4);
        assert!(!r.log_domain);
        assert_eq!(r.inequality_text, "2^N <= (1(N+1))^1 * 2^2");
    }

    #[test]
    fn single_constant_class_bound_is_zero() {
        assert_eq!(solve_thm1(1, 1, 1).unwrap().max_n, 0);
        assert_eq!(solve_thm1(7, 1, 1).unwrap().max_n, 0);
    }

    #[test]
    fn forest_bound_worked_value() {
        let r = solve_thm2(1, 2, 2, 2).unwrap();
        assert_eq!(r.max_n, 11);
        assert_eq!(r.asymptotic.len(), 2);
        assert_eq!(solve_thm2(3, 3, 1, 4).unwrap().max_n, solve_thm1(3, 3, 4).unwrap().max_n);
        let mut prev = 0;
        for t in 1..6 {
            let m = solve_thm2(2, 3, t, 3).unwrap().max_n;
            assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn network_bound_is_in_range_and_monotone() {
        let r = solve_thm34(2, 2).unwrap();
        assert!((50..=150).contains(&r.max_n), "max_N = {}", r.max_n);
        assert!(!r.log_domain);
        let ineq = Inequality::Network { p: 2, d: 2 };
        assert!(ineq.log_margin(r.max_n) >= 0.0);
        assert!(ineq.log_margin(r.max_n + 1) < 0.0);
        for p in 1..6 {
            for d in 2..5 {
                let m = solve_thm34(p, d).unwrap().max_n;
                assert!(solve_thm34(p + 1, d).unwrap().max_n >= m);
                assert!(solve_thm34(p, d + 1).unwrap().max_n >= m);
            }
        }
        assert_eq!(solve_network(BoundKind::ReluNetwork, 2, 2).unwrap().max_n, r.max_n);
        assert!(solve_thm34(2, 1).is_err());
    }

    #[test]
    fn e_enclosure_brackets_e() {
        let (lo, hi, den) = e_enclosure(20);
        let to_f = |x: &BigUint| x.to_string().parse::<f64>().unwrap();
        assert!(to_f(&lo) / to_f(&den) <= std::f64::consts::E);
        assert!(to_f(&hi) / to_f(&den) >= std::f64::consts::E);
        assert!(hi > lo);
    }

    #[test]
    fn log_and_exact_verdicts_agree() {
        for p in 1..4 {
            for depth in 1..5 {
                for d in 1..4 {
                    for t in 1..3 {
                        let ineq = Inequality::Trees { p, depth, d, trees: t };
                        for n in 0..=30 {
                            assert_eq!(ineq.exact(n).unwrap(), ineq.log_margin(n) >= 0.0, "{ineq:?} N={n}");
                        }
                    }
                }
            }
        }
        for p in 1..4 {
            for d in 2..4 {
                let ineq = Inequality::Network { p, d };
                for n in 0..=30 {
                    assert_eq!(ineq.exact(n).unwrap(), ineq.log_margin(n) >= 0.0, "{ineq:?} N={n}");
                }
            }
        }
    }

    #[test]
    fn deep_trees_fall_back_to_log_domain() {
        let r = solve_thm1(4, 24, 8).unwrap();
        assert!(r.log_domain);
        let ineq = Inequality::Trees { p: 4, depth: 24, d: 8, trees: 1 };
        assert!(ineq.log_margin(r.max_n) >= 0.0 && ineq.log_margin(r.max_n + 1) < 0.0);
    }

    #[test]
    fn sandwich_values() {
        let b = bendavid_gap(2, 2).unwrap();
        assert_eq!(b.as_ratio().unwrap(), Ratio::new(934, 100));
        assert!(b.admits(9));
        assert!(!b.admits(10));
        let zero = bendavid_gap(0, 3).unwrap();
        assert!(zero.admits(0) && !zero.admits(1));
        let b = bendavid_gap(3, 4).unwrap();
        assert_eq!(b.as_ratio().unwrap(), Ratio::new(2802, 100));
        assert!(b.admits(28) && !b.admits(29));
        // 4.67 * log2(3) * 2 = 14.80...
        let b = bendavid_gap(2, 3).unwrap();
        assert!(b.as_ratio().is_none());
        assert!(b.admits(14) && !b.admits(15));
        assert!(bendavid_gap(1, 1).is_err());
    }

    #[test]
    fn dispatch_and_json() {
        let r = solve_theorem(2, 1, Some(2), 2, Some(2)).unwrap();
        assert_eq!(r.max_n, 11);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.starts_with(r#"{"theorem":2,"params":{"p":1,"L":2,"d":2,"T":2},"max_N":11"#), "{json}");
        assert!(solve_theorem(1, 1, None, 2, None).is_err());
        assert!(solve_theorem(5, 1, Some(2), 2, None).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn scan(ineq: Inequality) -> u64 {
            let mut n = 0;
            while ineq.exact(n + 1).unwrap() {
                n += 1;
            }
            n
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn tree_solver_matches_a_linear_scan(p in 1u64..5, depth in 1u32..4, d in 1u64..5, t in 1u64..4) {
                let r = solve_thm2(p, depth, t, d).unwrap();
                prop_assert_eq!(r.max_n, scan(Inequality::Trees { p, depth, d, trees: t }));
                prop_assert!(!r.log_domain);
            }

            #[test]
            fn tree_solver_is_monotone(p in 1u64..5, depth in 1u32..5, d in 1u64..5, t in 1u64..4) {
                let m = solve_thm2(p, depth, t, d).unwrap().max_n;
                prop_assert!(solve_thm2(p + 1, depth, t, d).unwrap().max_n >= m);
                prop_assert!(solve_thm2(p, depth + 1, t, d).unwrap().max_n >= m);
                prop_assert!(solve_thm2(p, depth, t, d + 1).unwrap().max_n >= m);
                prop_assert!(solve_thm2(p, depth, t + 1, d).unwrap().max_n >= m);
                prop_assert!(tree_growth_bound(p, 5, depth, d) <= tree_growth_bound(p, 6, depth, d));
            }

            #[test]
            fn network_solver_flips_exactly(p in 1u64..6, d in 2u64..5) {
                let r = solve_thm34(p, d).unwrap();
                let ineq = Inequality::Network { p, d };
                prop_assert_eq!(ineq.exact(r.max_n), Some(true));
                prop_assert_eq!(ineq.exact(r.max_n + 1), Some(false));
            }
        }
    }
}
