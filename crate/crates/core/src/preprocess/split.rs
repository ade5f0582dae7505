use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pcz::ParkingClusterZone;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_zones: BTreeSet<String>,
    pub test_zones: BTreeSet<String>,
    pub train_fraction: f64,
}

pub fn split_by_zone(zones: &[ParkingClusterZone], fraction: f64, seed: u64) -> Result<SplitPlan> {
    let ids: Vec<String> = zones.iter().map(|z| z.zone_id.clone()).collect();
    split_ids(&ids, fraction, seed)
}

/// Shuffle zone ids with a seeded RNG and send the first `ceil(fraction * n)`
/// to training. Both sides are kept nonempty.
pub fn split_ids(ids: &[String], fraction: f64, seed: u64) -> Result<SplitPlan> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Split(format!("train fraction must be in (0, 1), got {fraction}")));
    }
    let mut sorted: Vec<String> = ids.to_vec();
    sorted.sort();
    sorted.dedup();
    let n = sorted.len();
    if n < 2 {
        return Err(Error::Split(format!("need at least 2 zones, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sorted.shuffle(&mut rng);
    // Guard against products like 0.7 * 10 = 7.000000000000001.
    let n_train = ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n - 1);
    let test_zones = sorted.split_off(n_train).into_iter().collect();
    Ok(SplitPlan {
        train_zones: sorted.into_iter().collect(),
        test_zones,
        train_fraction: fraction,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("Z{i:02}")).collect()
    }

    #[test]
    fn twenty_four_zones_three_quarters() {
        let plan = split_ids(&ids(24), 0.75, 1).unwrap();
        assert_eq!(plan.train_zones.len(), 18);
        assert_eq!(plan.test_zones.len(), 6);
    }

    #[test]
    fn two_zones_half() {
        let plan = split_ids(&ids(2), 0.5, 9).unwrap();
        assert_eq!((plan.train_zones.len(), plan.test_zones.len()), (1, 1));
    }

    #[test]
    fn rounding_noise_does_not_add_a_zone() {
        let plan = split_ids(&ids(10), 0.7, 3).unwrap();
        assert_eq!(plan.train_zones.len(), 7);
    }

    #[test]
    fn deterministic_for_seed() {
        assert_eq!(split_ids(&ids(24), 0.7, 42).unwrap(), split_ids(&ids(24), 0.7, 42).unwrap());
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(split_ids(&ids(1), 0.5, 0).is_err());
        assert!(split_ids(&ids(5), 1.0, 0).is_err());
        assert!(split_ids(&ids(5), 0.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn split_is_a_partition(n in 2usize..60, fraction in 0.01f64..0.99, seed in any::<u64>()) {
            let all = ids(n);
            let plan = split_ids(&all, fraction, seed).unwrap();
            prop_assert!(plan.train_zones.is_disjoint(&plan.test_zones));
            let union: BTreeSet<_> = plan.train_zones.union(&plan.test_zones).cloned().collect();
            prop_assert_eq!(union, all.into_iter().collect::<BTreeSet<_>>());
        }
    }
}
