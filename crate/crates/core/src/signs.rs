//! Sign configurations of polynomial families.
//!
//! A configuration is the vector of strict-positivity bits
//! `(1{P_1(w) > 0}, ..., 1{P_R(w) > 0})`; zero counts as non-positive.
//! Configurations are found by evaluating the family on a uniform grid and
//! on random points, so a count is a certified lower bound on the number of
//! realizable configurations.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grids larger than this many points are rejected.
pub const MAX_GRID_POINTS: u64 = 50_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coef: f64,
    pub exps: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    fn eval(&self, w: &[f64]) -> f64 {
        self.exps.iter().zip(w).fold(self.coef, |acc, (&e, &x)| acc * x.powi(e as i32))
    }
}

pub type Polynomial = Vec<Monomial>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyRepr")]
pub struct PolynomialFamily {
    pub vars: Vec<String>,
    pub polys: Vec<Polynomial>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyRepr {
    vars: Vec<String>,
    polys: Vec<Polynomial>,
}

impl TryFrom<FamilyRepr> for PolynomialFamily {
    type Error = Error;

    fn try_from(r: FamilyRepr) -> Result<Self> {
        PolynomialFamily::new(r.vars, r.polys)
    }
}

impl PolynomialFamily {
    pub fn new(vars: Vec<String>, polys: Vec<Polynomial>) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::InvalidParameter("a family needs at least one variable".into()));
        }
        if polys.is_empty() {
            return Err(Error::InvalidParameter("a family needs at least one polynomial".into()));
        }
        for (r, poly) in polys.iter().enumerate() {
            for m in poly {
                if m.exps.len() != vars.len() {
                    return Err(Error::InvalidParameter(format!(
                        "polynomial {r} has a monomial over {} variables, family has {}",
                        m.exps.len(),
                        vars.len()
                    )));
                }
                if !m.coef.is_finite() {
                    return Err(Error::InvalidParameter(format!("polynomial {r} has a non-finite coefficient")));
                }
            }
        }
        Ok(Self { vars, polys })
    }

    /// Number of polynomials.
    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn max_degree(&self) -> u32 {
        self.polys.iter().flatten().map(Monomial::degree).max().unwrap_or(0)
    }

    fn signs_unchecked(&self, w: &[f64]) -> Vec<bool> {
        self.polys.iter().map(|p| neumaier_sum(p.iter().map(|m| m.eval(w))) > 0.0).collect()
    }
}

/// Compensated (Neumaier) summation.
fn neumaier_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// Bit `r` is `1{P_r(assignment) > 0}`.
pub fn eval_sign_vector(family: &PolynomialFamily, assignment: &[f64]) -> Result<Vec<bool>> {
    if assignment.len() != family.num_vars() {
        return Err(Error::DimensionMismatch { index: 0, got: assignment.len(), expected: family.num_vars() });
    }
    Ok(family.signs_unchecked(assignment))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    pub low: f64,
    pub high: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignSearch {
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub random_trials: usize,
    #[serde(default = "default_random_range")]
    pub random_range: (f64, f64),
}

fn default_random_range() -> (f64, f64) {
    (-2.0, 2.0)
}

impl Default for SignSearch {
    /// 41 grid points per axis on `[-2, 2]` plus `10^4` uniform points.
    fn default() -> Self {
        Self {
            grid: Some(GridSpec { points: 41, low: -2.0, high: 2.0 }),
            random_trials: 10_000,
            random_range: default_random_range(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignConfig {
    pub signs: Vec<u8>,
    pub witness: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignCount {
    pub count: usize,
    /// Sorted by sign vector; each witness is the first point found.
    pub configs: Vec<SignConfig>,
}

/// Distinct sign configurations found by the grid and the random search.
pub fn count_sign_configs(family: &PolynomialFamily, search: &SignSearch, seed: u64) -> Result<SignCount> {
    let nvars = family.num_vars();
    let mut found: BTreeMap<Vec<bool>, Vec<f64>> = BTreeMap::new();

    if let Some(grid) = search.grid {
        if grid.points == 0 || !(grid.low <= grid.high) || !grid.low.is_finite() || !grid.high.is_finite() {
            return Err(Error::InvalidParameter(format!("invalid grid {grid:?}")));
        }
        let total = (grid.points as u64)
            .checked_pow(nvars as u32)
            .filter(|&t| t <= MAX_GRID_POINTS)
            .ok_or_else(|| Error::InvalidParameter(format!("grid of {}^{nvars} points is too large", grid.points)))?;
        let coord = |i: usize| {
            if grid.points == 1 {
                grid.low
            } else {
                grid.low + (grid.high - grid.low) * i as f64 / (grid.points - 1) as f64
            }
        };
        let mut w = vec![0.0; nvars];
        for idx in 0..total {
            let mut rest = idx;
            for x in w.iter_mut() {
                *x = coord((rest % grid.points as u64) as usize);
                rest /= grid.points as u64;
            }
            found.entry(family.signs_unchecked(&w)).or_insert_with(|| w.clone());
        }
    }

    if search.random_trials > 0 {
        let (low, high) = search.random_range;
        if !(low <= high) || !low.is_finite() || !high.is_finite() {
            return Err(Error::InvalidParameter(format!("invalid random range [{low}, {high}]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(low, high);
        for _ in 0..search.random_trials {
            let w: Vec<f64> = (0..nvars).map(|_| dist.sample(&mut rng)).collect();
            let signs = family.signs_unchecked(&w);
            found.entry(signs).or_insert(w);
        }
    }

    let configs: Vec<SignConfig> = found
        .into_iter()
        .map(|(signs, witness)| SignConfig { signs: signs.into_iter().map(u8::from).collect(), witness })
        .collect();
    Ok(SignCount { count: configs.len(), configs })
}

/// `(8e * degree * polys / vars)^vars`; requires `polys >= vars >= 1`, `degree >= 1`.
pub fn lemma1_bound(polys: u64, degree: u64, vars: u64) -> Result<f64> {
    Ok(lemma1_log2(polys, degree, vars)?.exp2())
}

/// `log2` of [`lemma1_bound`], finite for any size.
pub fn lemma1_log2(polys: u64, degree: u64, vars: u64) -> Result<f64> {
    if vars == 0 || degree == 0 {
        return Err(Error::InvalidParameter("the configuration bound needs vars >= 1 and degree >= 1".into()));
    }
    if polys < vars {
        return Err(Error::InvalidParameter(format!(
            "the configuration bound needs at least as many polynomials ({polys}) as variables ({vars})"
        )));
    }
    let base = 8.0 * std::f64::consts::E * degree as f64 * polys as f64 / vars as f64;
    Ok(vars as f64 * base.log2())
}
