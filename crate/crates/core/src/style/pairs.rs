use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Result, StyleError};
use crate::corpus::SubtreeRepository;
use crate::TokenId;

/// `(a, b, label)`: label 1 for same app, 0 for different apps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub a: TokenId,
    pub b: TokenId,
    pub label: u8,
}

/// Token ids grouped by app, training and held-out.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub train: BTreeMap<String, Vec<TokenId>>,
    pub heldout: BTreeMap<String, Vec<TokenId>>,
}

fn group_all(repo: &SubtreeRepository) -> BTreeMap<String, Vec<TokenId>> {
    repo.app_index.clone()
}

/// Balanced same-app / different-app pairs over `groups` (app → ids).
/// An odd `count` gets one extra positive.
pub fn sample_pairs<R: Rng + ?Sized>(
    groups: &BTreeMap<String, Vec<TokenId>>,
    rng: &mut R,
    count: usize,
) -> Result<Vec<Pair>> {
    let apps: Vec<&Vec<TokenId>> = groups.values().filter(|ids| !ids.is_empty()).collect();
    let multi: Vec<&Vec<TokenId>> = apps.iter().copied().filter(|ids| ids.len() >= 2).collect();
    if apps.len() < 2 || multi.len() < 2 {
        return Err(StyleError::InsufficientCorpus(format!(
            "pair sampling needs >= 2 apps with >= 2 subtrees, got {} apps ({} with >= 2)",
            apps.len(),
            multi.len()
        )));
    }
    let positives = count.div_ceil(2);
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..positives {
        let ids = multi[rng.gen_range(0..multi.len())];
        let i = rng.gen_range(0..ids.len());
        let mut j = rng.gen_range(0..ids.len() - 1);
        if j >= i {
            j += 1;
        }
        pairs.push(Pair { a: ids[i], b: ids[j], label: 1 });
    }
    for _ in positives..count {
        let i = rng.gen_range(0..apps.len());
        let mut j = rng.gen_range(0..apps.len() - 1);
        if j >= i {
            j += 1;
        }
        let a = *apps[i].choose(rng).expect("non-empty");
        let b = *apps[j].choose(rng).expect("non-empty");
        pairs.push(Pair { a, b, label: 0 });
    }
    pairs.shuffle(rng);
    Ok(pairs)
}

/// Holds out `frac` of each app's screens (at least one, never all) so no
/// screen contributes to both sides.
pub fn heldout_split<R: Rng + ?Sized>(repo: &SubtreeRepository, frac: f64, rng: &mut R) -> Split {
    if frac <= 0.0 {
        return Split { train: group_all(repo), heldout: BTreeMap::new() };
    }
    let mut screens: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for s in &repo.screens {
        screens.entry(s.app_id.as_str()).or_default().push(s.screen_id.as_str());
    }
    let mut held: BTreeSet<(&str, &str)> = BTreeSet::new();
    for (app, list) in &mut screens {
        list.sort_unstable();
        list.dedup();
        if list.len() < 2 {
            continue;
        }
        let n = ((list.len() as f64 * frac).round() as usize).clamp(1, list.len() - 1);
        list.shuffle(rng);
        for s in &list[..n] {
            held.insert((app, s));
        }
    }
    let mut split = Split { train: BTreeMap::new(), heldout: BTreeMap::new() };
    for t in &repo.subtrees {
        let side = if held.contains(&(t.app_id.as_str(), t.screen_id.as_str())) {
            &mut split.heldout
        } else {
            &mut split.train
        };
        side.entry(t.app_id.clone()).or_default().push(t.id);
    }
    split
}
