use crate::dataset::{Dataset, FeedbackLevel, FeedbackRecord};
use crate::error::{Error, Result};
use crate::game::{FacilityId, JointAction};

use super::{Confidence, Estimate};

/// Per-configuration empirical means and visit counts from facility-level data.
///
/// `counts[f][n]` counts records with exactly `n` selectors of `f`, for `n` in
/// `0..=m`, so every row sums to the dataset size. Unvisited cells estimate 0.
#[derive(Clone, Debug, PartialEq)]
pub struct FacilityEstimate {
    players: usize,
    facilities: usize,
    counts: Vec<Vec<u64>>,
    means: Vec<Vec<f64>>,
    iota: f64,
    delta: f64,
    records: usize,
}

impl FacilityEstimate {
    pub fn fit(ds: &Dataset, confidence: Confidence) -> Result<Self> {
        if ds.level() != FeedbackLevel::Facility {
            return Err(Error::input(format!(
                "facility estimator needs facility-level data, got {}",
                ds.level()
            )));
        }
        let (m, nf) = (ds.players(), ds.facilities());
        let mut counts = vec![vec![0u64; m + 1]; nf];
        let mut sums = vec![vec![0.0f64; m + 1]; nf];
        for record in ds.records() {
            let loads: Vec<usize> = (0..nf).map(|f| record.action.load(FacilityId(f))).collect();
            for (f, &n) in loads.iter().enumerate() {
                counts[f][n] += 1;
            }
            let FeedbackRecord::Facility(rewards) = &record.feedback else {
                unreachable!("dataset level checked above")
            };
            for (f, r) in rewards {
                sums[f.0][loads[f.0]] += r;
            }
        }
        let means = sums
            .iter()
            .zip(&counts)
            .map(|(s, c)| {
                s.iter()
                    .zip(c)
                    .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
                    .collect()
            })
            .collect();
        Ok(FacilityEstimate {
            players: m,
            facilities: nf,
            counts,
            means,
            iota: confidence.iota(m, nf),
            delta: confidence.delta,
            records: ds.len(),
        })
    }

    pub fn count(&self, f: FacilityId, n: usize) -> u64 {
        self.counts[f.0][n]
    }

    pub fn mean(&self, f: FacilityId, n: usize) -> f64 {
        self.means[f.0][n]
    }

    pub fn iota(&self) -> f64 {
        self.iota
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn facilities(&self) -> usize {
        self.facilities
    }

    pub fn records(&self) -> usize {
        self.records
    }

    /// `r̂_i(a) = Σ_{f∈a_i} r̂^f(n^f(a))`, `b_i(a) = Σ_{f∈a_i} √(ι / max(N^f(n^f(a)), 1))`.
    pub fn reward_and_bonus(&self, a: &JointAction, i: usize) -> Estimate {
        let mut est = Estimate::default();
        for f in a.action(i).iter() {
            let n = a.load(f);
            est.reward += self.means[f.0][n];
            est.bonus += (self.iota / self.counts[f.0][n].max(1) as f64).sqrt();
        }
        est
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "# congame model v1\nlevel=facility records={} delta={} iota={}\n",
            self.records, self.delta, self.iota
        );
        for f in 0..self.facilities {
            for n in 1..=self.players {
                out.push_str(&format!(
                    "facility={f} n={n} count={} mean={}\n",
                    self.counts[f][n], self.means[f][n]
                ));
            }
        }
        out
    }
}
