//! Association degree measures over per-level cell overlaps.
//!
//! Every measure is evaluated as `Σ_l weight_l · component_l`, where the
//! component depends only on the level's overlap and set sizes. The extensible
//! measure folds its normalizer into the weights, which makes it agree exactly
//! with weighted Dice when `v = 1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::traces::{CellSequence, StCell};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LevelCounts {
    pub overlap: u32,
    pub total_a: u32,
    pub total_b: u32,
}

/// Per-level overlap durations; `levels[i]` is level `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LevelOverlap {
    pub levels: Vec<LevelCounts>,
}

fn intersection_len(a: &[StCell], b: &[StCell]) -> u32 {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

pub fn level_overlaps(a: &CellSequence, b: &CellSequence) -> Result<LevelOverlap> {
    if a.height() != b.height() {
        return Err(Error::LevelMismatch(a.height(), b.height()));
    }
    Ok(LevelOverlap {
        levels: a
            .levels()
            .zip(b.levels())
            .map(|(x, y)| LevelCounts { overlap: intersection_len(x, y), total_a: x.len() as u32, total_b: y.len() as u32 })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `(|P_ab| / (|P_a| + |P_b|))^v`, level-weighted by `l^u`.
    Adm,
    Dice,
    Jaccard,
    Cosine,
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adm" => Ok(Variant::Adm),
            "dice" => Ok(Variant::Dice),
            "jaccard" => Ok(Variant::Jaccard),
            "cosine" => Ok(Variant::Cosine),
            other => Err(Error::InvalidMeasure(format!("unknown measure `{other}`"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Adm => "adm",
            Variant::Dice => "dice",
            Variant::Jaccard => "jaccard",
            Variant::Cosine => "cosine",
        })
    }
}

/// A configured measure for a hierarchy of height `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    pub variant: Variant,
    pub u: f64,
    pub v: f64,
    /// Effective per-level weights, normalizer included.
    weights: Vec<f64>,
}

impl Measure {
    /// The extensible measure, normalized so that `d(e, e) = 1`.
    pub fn adm(m: usize, u: f64, v: f64) -> Result<Self> {
        if !(u > 0.0 && v > 0.0) || m == 0 {
            return Err(Error::InvalidMeasure(format!("need u > 0, v > 0, m >= 1 (got u={u}, v={v}, m={m})")));
        }
        let half = 0.5f64.powf(v);
        let raw: Vec<f64> = (1..=m).map(|l| (l as f64).powf(u) * half).collect();
        let max: f64 = raw.iter().sum();
        Ok(Measure { variant: Variant::Adm, u, v, weights: raw.iter().map(|w| w / max).collect() })
    }

    /// Set-similarity measure with explicit weights summing to one.
    pub fn set_similarity(variant: Variant, weights: Vec<f64>) -> Result<Self> {
        if variant == Variant::Adm {
            return Err(Error::InvalidMeasure("use Measure::adm for the extensible measure".into()));
        }
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMeasure("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMeasure(format!("weights sum to {sum}, expected 1")));
        }
        Ok(Measure { variant, u: f64::NAN, v: 1.0, weights })
    }

    /// Set-similarity measure weighted by `w_l ∝ l^u`.
    pub fn level_weighted(variant: Variant, m: usize, u: f64) -> Result<Self> {
        if variant == Variant::Adm {
            return Measure::adm(m, u, 1.0);
        }
        if !(u > 0.0) || m == 0 {
            return Err(Error::InvalidMeasure(format!("need u > 0 and m >= 1 (got u={u}, m={m})")));
        }
        let raw: Vec<f64> = (1..=m).map(|l| (l as f64).powf(u)).collect();
        let sum: f64 = raw.iter().sum();
        let mut out = Measure::set_similarity(variant, raw.iter().map(|w| w / sum).collect())?;
        out.u = u;
        Ok(out)
    }

    /// Builds a measure from command-line style options: explicit weights
    /// take precedence over `u` for the set-similarity variants.
    pub fn from_options(variant: Variant, m: usize, u: f64, v: f64, weights: Option<Vec<f64>>) -> Result<Self> {
        match (variant, weights) {
            (Variant::Adm, _) => Measure::adm(m, u, v),
            (_, Some(w)) => {
                if w.len() != m {
                    return Err(Error::InvalidMeasure(format!("{} weights given for {m} levels", w.len())));
                }
                Measure::set_similarity(variant, w)
            }
            (_, None) => Measure::level_weighted(variant, m, u),
        }
    }

    pub fn height(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The level component for overlap `o` between sets of sizes `a` and `b`.
    #[inline]
    pub fn component(&self, o: u32, a: u32, b: u32) -> f64 {
        if o == 0 {
            return 0.0;
        }
        let (o, a, b) = (o as f64, a as f64, b as f64);
        match self.variant {
            Variant::Adm => {
                let r = 2.0 * o / (a + b);
                if self.v == 1.0 {
                    r
                } else {
                    r.powf(self.v)
                }
            }
            Variant::Dice => 2.0 * o / (a + b),
            Variant::Jaccard => o / (a + b - o),
            Variant::Cosine => o / (a * b).sqrt(),
        }
    }

    pub fn score(&self, o: &LevelOverlap) -> f64 {
        debug_assert_eq!(o.levels.len(), self.weights.len());
        self.weights
            .iter()
            .zip(&o.levels)
            .map(|(w, c)| w * self.component(c.overlap, c.total_a, c.total_b))
            .sum()
    }

    pub fn degree(&self, a: &CellSequence, b: &CellSequence) -> Result<f64> {
        if a.height() != self.height() {
            return Err(Error::LevelMismatch(a.height(), self.height()));
        }
        Ok(self.score(&level_overlaps(a, b)?))
    }

    /// Largest degree any entity can reach against a query with
    /// `query_sizes[l]` cells per level when at most `shareable[l]` of them
    /// can be shared. The best case is an entity holding exactly the
    /// shareable cells.
    pub fn upper_bound(&self, query_sizes: &[u32], shareable: &[u32]) -> f64 {
        self.weights
            .iter()
            .zip(query_sizes.iter().zip(shareable))
            .map(|(w, (&q, &s))| w * self.component(s, q, s))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{load_sp_index, RootMode, SpIndex};
    use crate::traces::lift_sequence;
    use proptest::prelude::*;

    fn example() -> SpIndex {
        let edges: Vec<(String, Option<String>)> = [("L1", "L5"), ("L2", "L5"), ("L3", "L6"), ("L4", "L6"), ("L5", "R"), ("L6", "R")]
            .iter()
            .map(|(c, p)| (c.to_string(), Some(p.to_string())))
            .collect();
        load_sp_index(&edges, "t", RootMode::Virtual).unwrap()
    }

    fn seq(idx: &SpIndex, name: &str, cells: &[(u32, &str)]) -> CellSequence {
        let base: Vec<StCell> = cells.iter().map(|&(t, u)| StCell::new(t, idx.id(u).unwrap())).collect();
        lift_sequence(name, &base, idx).unwrap()
    }

    fn entities(idx: &SpIndex) -> [CellSequence; 4] {
        [
            seq(idx, "a", &[(1, "L2"), (2, "L1")]),
            seq(idx, "b", &[(1, "L1"), (2, "L2")]),
            seq(idx, "c", &[(1, "L3"), (2, "L1")]),
            seq(idx, "d", &[(1, "L4"), (2, "L4")]),
        ]
    }

    #[test]
    fn overlaps_of_a_and_c() {
        let idx = example();
        let [a, _, c, _] = entities(&idx);
        let o = level_overlaps(&a, &c).unwrap();
        assert_eq!(o.levels[1], LevelCounts { overlap: 1, total_a: 2, total_b: 2 });
        assert_eq!(o.levels[0], LevelCounts { overlap: 1, total_a: 2, total_b: 2 });
    }

    #[test]
    fn worked_dice_degree() {
        let idx = example();
        let [a, _, c, _] = entities(&idx);
        let d = Measure::set_similarity(Variant::Dice, vec![0.1, 0.9]).unwrap();
        assert!((d.degree(&c, &a).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn jaccard_level_two_only() {
        let idx = example();
        let [a, _, c, _] = entities(&idx);
        let j = Measure::set_similarity(Variant::Jaccard, vec![0.0, 1.0]).unwrap();
        assert!((j.degree(&a, &c).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn self_and_disjoint() {
        let idx = example();
        let [a, _, _, d] = entities(&idx);
        for m in [
            Measure::adm(2, 1.0, 1.0).unwrap(),
            Measure::adm(2, 2.5, 0.3).unwrap(),
            Measure::level_weighted(Variant::Dice, 2, 1.0).unwrap(),
            Measure::level_weighted(Variant::Jaccard, 2, 1.0).unwrap(),
            Measure::level_weighted(Variant::Cosine, 2, 1.0).unwrap(),
        ] {
            assert!((m.degree(&a, &a).unwrap() - 1.0).abs() < 1e-12, "{m:?}");
            assert_eq!(m.degree(&a, &d).unwrap(), 0.0);
        }
        let empty = seq(&idx, "x", &[]);
        assert_eq!(Measure::adm(2, 1.0, 1.0).unwrap().degree(&a, &empty).unwrap(), 0.0);
    }

    #[test]
    fn adm_matches_the_formula() {
        // Σ l^u (o/(a+b))^v / Σ l^u (1/2)^v, straight from the definition
        let o = LevelOverlap {
            levels: vec![
                LevelCounts { overlap: 3, total_a: 5, total_b: 4 },
                LevelCounts { overlap: 1, total_a: 7, total_b: 2 },
                LevelCounts { overlap: 0, total_a: 3, total_b: 3 },
            ],
        };
        let (u, v) = (1.7, 0.6);
        let num: f64 = o
            .levels
            .iter()
            .enumerate()
            .map(|(i, c)| ((i + 1) as f64).powf(u) * (c.overlap as f64 / (c.total_a + c.total_b) as f64).powf(v))
            .sum();
        let den: f64 = (1..=3).map(|l| (l as f64).powf(u) * 0.5f64.powf(v)).sum();
        let m = Measure::adm(3, u, v).unwrap();
        assert!((m.score(&o) - num / den).abs() < 1e-12);
    }

    #[test]
    fn adm_v1_is_bitwise_dice() {
        let adm = Measure::adm(4, 1.0, 1.0).unwrap();
        let dice = Measure::level_weighted(Variant::Dice, 4, 1.0).unwrap();
        assert_eq!(adm.weights(), dice.weights());
        let o = LevelOverlap {
            levels: (0..4).map(|i| LevelCounts { overlap: i + 1, total_a: 2 * i + 3, total_b: 7 }).collect(),
        };
        assert_eq!(adm.score(&o).to_bits(), dice.score(&o).to_bits());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Measure::adm(2, 0.0, 1.0).is_err());
        assert!(Measure::adm(2, 1.0, -1.0).is_err());
        assert!(Measure::set_similarity(Variant::Dice, vec![0.5, 0.6]).is_err());
        assert!(Measure::from_options(Variant::Cosine, 3, 1.0, 1.0, Some(vec![0.5, 0.5])).is_err());
        assert!("manhattan".parse::<Variant>().is_err());
    }

    fn counts() -> impl Strategy<Value = (u32, u32, u32)> {
        (0u32..20, 0u32..20, 0u32..20).prop_map(|(o, a, b)| (o, o + a, o + b))
    }

    fn measures() -> impl Strategy<Value = Measure> {
        prop_oneof![
            (0.1f64..4.0, 0.1f64..4.0).prop_map(|(u, v)| Measure::adm(3, u, v).unwrap()),
            (0.1f64..4.0).prop_map(|u| Measure::level_weighted(Variant::Dice, 3, u).unwrap()),
            (0.1f64..4.0).prop_map(|u| Measure::level_weighted(Variant::Jaccard, 3, u).unwrap()),
            (0.1f64..4.0).prop_map(|u| Measure::level_weighted(Variant::Cosine, 3, u).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn scores_stay_in_unit_range(m in measures(), c in prop::collection::vec(counts(), 3)) {
            let o = LevelOverlap { levels: c.iter().map(|&(o, a, b)| LevelCounts { overlap: o, total_a: a, total_b: b }).collect() };
            let s = m.score(&o);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&s));
        }

        #[test]
        fn growing_b_never_helps(m in measures(), (o, a, b) in counts(), level in 0usize..3) {
            let mut levels = vec![LevelCounts::default(); 3];
            levels[level] = LevelCounts { overlap: o, total_a: a, total_b: b };
            let before = m.score(&LevelOverlap { levels: levels.clone() });
            levels[level].total_b += 1;
            let after = m.score(&LevelOverlap { levels });
            prop_assert!(after <= before);
        }

        #[test]
        fn sharing_a_cell_never_hurts(m in measures(), (o, a, b) in counts(), level in 0usize..3) {
            prop_assume!(o < a && o < b);
            let mut levels = vec![LevelCounts::default(); 3];
            levels[level] = LevelCounts { overlap: o, total_a: a, total_b: b };
            let before = m.score(&LevelOverlap { levels: levels.clone() });
            levels[level].overlap += 1;
            let after = m.score(&LevelOverlap { levels });
            prop_assert!(after >= before);
        }

        #[test]
        fn upper_bound_is_admissible(m in measures(), c in prop::collection::vec(counts(), 3), slack in prop::collection::vec(0u32..5, 3)) {
            let o = LevelOverlap { levels: c.iter().map(|&(o, a, b)| LevelCounts { overlap: o, total_a: a, total_b: b }).collect() };
            let q: Vec<u32> = c.iter().map(|x| x.1).collect();
            let s: Vec<u32> = c.iter().zip(&slack).map(|(x, e)| (x.0 + e).min(x.1)).collect();
            prop_assert!(m.upper_bound(&q, &s) >= m.score(&o));
        }
    }
}
