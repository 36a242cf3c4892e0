//! Seeded instance generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Family, Instance, Place, PreferenceProfile, UtilityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenMode {
    Utilities,
    Preferences,
    None,
}

impl std::str::FromStr for GenMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "utilities" => Ok(Self::Utilities),
            "preferences" => Ok(Self::Preferences),
            "none" => Ok(Self::None),
            other => Err(Error::Parameter(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub n: usize,
    pub m: usize,
    pub t: usize,
    pub rmax: u64,
    pub cmax: u64,
    pub mode: GenMode,
    /// Probability that a place/service pair gets a nonzero lower quota draw.
    pub lower_quota_density: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            n: 5,
            m: 2,
            t: 1,
            rmax: 3,
            cmax: 6,
            mode: GenMode::Utilities,
            lower_quota_density: 0.0,
        }
    }
}

/// Lowest utility the generator draws.
pub const MIN_RANDOM_UTILITY: i64 = -1;
/// Highest utility the generator draws.
pub const MAX_RANDOM_UTILITY: i64 = 4;

/// Random instance, identical for identical `(seed, params)`.
///
/// Requirements are uniform in `0..=rmax`, upper quotas uniform in
/// `0..=cmax`, and each lower quota is drawn uniformly below its upper quota
/// with probability `lower_quota_density` (zero otherwise).
pub fn gen_random(seed: u64, params: &GenParams) -> Result<Instance> {
    if params.t == 0 {
        return Err(Error::Parameter("t must be positive".into()));
    }
    if !(0.0..=1.0).contains(&params.lower_quota_density) {
        return Err(Error::Parameter("lower quota density must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let families: Vec<Family> = (0..params.n)
        .map(|i| {
            let r = (0..params.t).map(|_| rng.gen_range(0..=params.rmax)).collect();
            Family::new(i as u64 + 1, r)
        })
        .collect();
    let places: Vec<Place> = (0..params.m)
        .map(|j| {
            let upper: Vec<u64> = (0..params.t).map(|_| rng.gen_range(0..=params.cmax)).collect();
            let lower = upper
                .iter()
                .map(|&c| {
                    if rng.gen_bool(params.lower_quota_density) {
                        rng.gen_range(0..=c)
                    } else {
                        0
                    }
                })
                .collect();
            Place::new(j as u64 + 1, lower, upper)
        })
        .collect();
    let (utilities, preferences) = match params.mode {
        GenMode::None => (None, None),
        GenMode::Utilities => {
            let rows = (0..params.n)
                .map(|_| {
                    (0..params.m)
                        .map(|_| rng.gen_range(MIN_RANDOM_UTILITY..=MAX_RANDOM_UTILITY))
                        .collect()
                })
                .collect();
            (Some(UtilityMatrix::new(rows)), None)
        }
        GenMode::Preferences => {
            let lists: Vec<Vec<Vec<usize>>> = (0..params.n).map(|_| random_weak_order(&mut rng, params.m)).collect();
            (None, Some(PreferenceProfile::from_groups(&lists, params.m)?))
        }
    };
    Instance::new(params.t, families, places, utilities, preferences)
}

fn random_weak_order(rng: &mut ChaCha8Rng, m: usize) -> Vec<Vec<usize>> {
    let mut acceptable: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.75)).collect();
    acceptable.shuffle(rng);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for p in acceptable {
        match groups.last_mut() {
            Some(g) if rng.gen_bool(0.3) => g.push(p),
            _ => groups.push(vec![p]),
        }
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinPackingVariant {
    /// Lower and upper quota both equal to the bin size.
    Feasibility,
    /// No lower quotas; every family finds every place acceptable and ties them all.
    Pareto,
}

/// `k` bins of size `sum(sizes) / k` as places, one family per item.
pub fn gen_binpacking(sizes: &[u64], k: usize, variant: BinPackingVariant) -> Result<Instance> {
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    let total: u64 = sizes.iter().sum();
    if !total.is_multiple_of(k as u64) {
        return Err(Error::Parameter(format!("total size {total} is not divisible by {k}")));
    }
    let bin = total / k as u64;
    let families = sizes
        .iter()
        .enumerate()
        .map(|(i, &a)| Family::new(i as u64 + 1, vec![a]))
        .collect();
    let lower = match variant {
        BinPackingVariant::Feasibility => bin,
        BinPackingVariant::Pareto => 0,
    };
    let places = (0..k).map(|j| Place::new(j as u64 + 1, vec![lower], vec![bin])).collect();
    let preferences = match variant {
        BinPackingVariant::Feasibility => None,
        BinPackingVariant::Pareto => Some(PreferenceProfile::indifferent(sizes.len(), k)),
    };
    Instance::new(1, families, places, None, preferences)
}
