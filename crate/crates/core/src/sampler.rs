//! Nested, quota-stratified few-shot splits.
//!
//! Each split of size `n` holds `n/4` inoffensive posts, `n/4` offensive
//! posts that are not hate speech, and `n/2` hate speech posts. Hate speech
//! posts are drawn round-robin over buckets keyed by the post's primary
//! (first) group, buckets visited in lexicographic order, each bucket
//! shuffled with the seed. Sizes must double, and every split is built by
//! appending the quota delta to the previous one, so `split(s)` is an
//! ordered prefix of `split(2s)`.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{PostRecord, Split, Stratum};
use crate::error::{Error, Result};
use crate::rng::{HarnessRng, Stream};

pub const DEFAULT_SIZES: [usize; 7] = [16, 32, 64, 128, 256, 512, 1024];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quota {
    pub inoffensive: usize,
    pub offensive_non_hs: usize,
    pub hs: usize,
}

impl Quota {
    pub fn for_size(n: usize) -> Self {
        Self {
            inoffensive: n / 4,
            offensive_non_hs: n / 4,
            hs: n / 2,
        }
    }

    fn get(&self, s: Stratum) -> usize {
        match s {
            Stratum::Inoffensive => self.inoffensive,
            Stratum::OffensiveNonHs => self.offensive_non_hs,
            Stratum::Hs => self.hs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotSplit {
    pub seed: u64,
    pub size: usize,
    pub member_ids: Vec<String>,
    pub quota: Quota,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotaReport {
    pub strata: BTreeMap<Stratum, usize>,
    /// HS member count per primary-group bucket.
    pub buckets: BTreeMap<String, usize>,
    /// Buckets whose whole pool population is in the split.
    pub exhausted: Vec<String>,
    pub violations: Vec<String>,
}

impl QuotaReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A split together with the report recomputed from the pool.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitManifest {
    #[serde(flatten)]
    pub split: FewShotSplit,
    pub report: QuotaReport,
}

fn bucket_key(r: &PostRecord) -> &str {
    r.groups.first().map(|g| g.as_str()).unwrap_or("")
}

pub(crate) fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::InvalidSizes("no sizes given".into()));
    }
    if let Some(&bad) = sizes.iter().find(|&&s| s == 0 || s % 4 != 0) {
        return Err(Error::InvalidSizes(format!("{bad} is not a positive multiple of 4")));
    }
    for w in sizes.windows(2) {
        if w[1] != 2 * w[0] {
            return Err(Error::InvalidSizes(format!(
                "{} does not double {}",
                w[1], w[0]
            )));
        }
    }
    Ok(())
}

/// Seeded draw order for every stratum, consumed front to back.
struct DrawState<'a> {
    inoffensive: Vec<&'a PostRecord>,
    offensive_non_hs: Vec<&'a PostRecord>,
    /// Buckets in lexicographic key order, each internally shuffled.
    buckets: Vec<Vec<&'a PostRecord>>,
    taken: [usize; 2],
    bucket_taken: Vec<usize>,
    cursor: usize,
}

impl<'a> DrawState<'a> {
    fn new(pool: &[&'a PostRecord], rng: &mut HarnessRng) -> Self {
        let mut by_stratum: HashMap<Stratum, Vec<&PostRecord>> = HashMap::new();
        for &r in pool {
            by_stratum.entry(r.stratum()).or_default().push(r);
        }
        let mut take = |s: Stratum| {
            let mut v = by_stratum.remove(&s).unwrap_or_default();
            v.sort_by(|a, b| a.id.cmp(&b.id));
            v
        };
        let mut inoffensive = take(Stratum::Inoffensive);
        let mut offensive_non_hs = take(Stratum::OffensiveNonHs);
        let hs = take(Stratum::Hs);

        rng.shuffle(&mut inoffensive);
        rng.shuffle(&mut offensive_non_hs);
        let mut grouped: BTreeMap<&str, Vec<&PostRecord>> = BTreeMap::new();
        for r in hs {
            grouped.entry(bucket_key(r)).or_default().push(r);
        }
        let buckets: Vec<Vec<&PostRecord>> = grouped
            .into_values()
            .map(|mut b| {
                rng.shuffle(&mut b);
                b
            })
            .collect();
        let n = buckets.len();
        Self {
            inoffensive,
            offensive_non_hs,
            buckets,
            taken: [0, 0],
            bucket_taken: vec![0; n],
            cursor: 0,
        }
    }

    fn hs_available(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    fn check_population(&self, quota: Quota) -> Result<()> {
        let have = [
            (Stratum::Inoffensive, self.inoffensive.len()),
            (Stratum::OffensiveNonHs, self.offensive_non_hs.len()),
            (Stratum::Hs, self.hs_available()),
        ];
        for (s, available) in have {
            let needed = quota.get(s);
            if available < needed {
                return Err(Error::InsufficientStratum {
                    stratum: s.as_str().to_string(),
                    needed,
                    available,
                });
            }
        }
        Ok(())
    }

    fn extend(&mut self, out: &mut Vec<String>, delta: Quota) {
        for (i, (list, n)) in [
            (&self.inoffensive, delta.inoffensive),
            (&self.offensive_non_hs, delta.offensive_non_hs),
        ]
        .into_iter()
        .enumerate()
        {
            let start = self.taken[i];
            out.extend(list[start..start + n].iter().map(|r| r.id.clone()));
            self.taken[i] += n;
        }
        // Round-robin with a persistent cursor, skipping exhausted buckets.
        let mut remaining = delta.hs;
        while remaining > 0 {
            let b = self.cursor % self.buckets.len();
            self.cursor += 1;
            let k = self.bucket_taken[b];
            if let Some(r) = self.buckets[b].get(k) {
                out.push(r.id.clone());
                self.bucket_taken[b] += 1;
                remaining -= 1;
            }
        }
    }
}

fn eligible(pool: &[PostRecord], exclude: &HashSet<&str>) -> Vec<PostRecord> {
    pool.iter()
        .filter(|r| r.split != Split::Test && !exclude.contains(r.id.as_str()))
        .cloned()
        .collect()
}

fn build_nested(
    pool: &[PostRecord],
    sizes: &[usize],
    seed: u64,
    stream: Stream,
) -> Result<BTreeMap<usize, FewShotSplit>> {
    check_sizes(sizes)?;
    let refs: Vec<&PostRecord> = pool.iter().collect();
    let mut rng = HarnessRng::new(seed, stream);
    let mut state = DrawState::new(&refs, &mut rng);
    let largest = *sizes.last().expect("checked nonempty");
    state.check_population(Quota::for_size(largest))?;

    let mut members = Vec::with_capacity(largest);
    let mut prev = Quota::for_size(0);
    let mut out = BTreeMap::new();
    for &size in sizes {
        let quota = Quota::for_size(size);
        let delta = Quota {
            inoffensive: quota.inoffensive - prev.inoffensive,
            offensive_non_hs: quota.offensive_non_hs - prev.offensive_non_hs,
            hs: quota.hs - prev.hs,
        };
        state.extend(&mut members, delta);
        out.insert(
            size,
            FewShotSplit {
                seed,
                size,
                member_ids: members.clone(),
                quota,
            },
        );
        prev = quota;
    }
    Ok(out)
}

/// Builds one training split per size for `seed`. Test-split records are
/// never eligible.
pub fn build_nested_splits(
    pool: &[PostRecord],
    sizes: &[usize],
    seed: u64,
) -> Result<BTreeMap<usize, FewShotSplit>> {
    let pool = eligible(pool, &HashSet::new());
    build_nested(&pool, sizes, seed, Stream::TrainSplit)
}

/// Builds a validation split with the same stratification, disjoint from
/// `exclude` and from the test split.
pub fn build_validation(
    pool: &[PostRecord],
    size: usize,
    seed: u64,
    exclude: &FewShotSplit,
) -> Result<FewShotSplit> {
    let excluded: HashSet<&str> = exclude.member_ids.iter().map(String::as_str).collect();
    let pool = eligible(pool, &excluded);
    let mut splits = build_nested(&pool, &[size], seed, Stream::ValidationSplit)?;
    Ok(splits.remove(&size).expect("requested size present"))
}

/// Unstratified alternative to [`build_validation`]: a seeded uniform draw
/// from the eligible pool. `quota` holds the stratum counts that came out.
pub fn build_validation_uniform(
    pool: &[PostRecord],
    size: usize,
    seed: u64,
    exclude: &FewShotSplit,
) -> Result<FewShotSplit> {
    let excluded: HashSet<&str> = exclude.member_ids.iter().map(String::as_str).collect();
    let mut pool = eligible(pool, &excluded);
    if pool.len() < size {
        return Err(Error::InsufficientStratum {
            stratum: "any".into(),
            needed: size,
            available: pool.len(),
        });
    }
    pool.sort_by(|a, b| a.id.cmp(&b.id));
    HarnessRng::new(seed, Stream::ValidationSplit).shuffle(&mut pool);
    pool.truncate(size);
    let mut quota = Quota { inoffensive: 0, offensive_non_hs: 0, hs: 0 };
    for r in &pool {
        match r.stratum() {
            Stratum::Inoffensive => quota.inoffensive += 1,
            Stratum::OffensiveNonHs => quota.offensive_non_hs += 1,
            Stratum::Hs => quota.hs += 1,
        }
    }
    Ok(FewShotSplit {
        seed,
        size,
        member_ids: pool.into_iter().map(|r| r.id).collect(),
        quota,
    })
}

/// Recomputes strata and bucket balance for `split` from the pool labels.
pub fn verify_quotas(split: &FewShotSplit, pool: &[PostRecord]) -> QuotaReport {
    let by_id: HashMap<&str, &PostRecord> = pool.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut report = QuotaReport::default();
    for s in [Stratum::Inoffensive, Stratum::OffensiveNonHs, Stratum::Hs] {
        report.strata.insert(s, 0);
    }

    let mut bucket_pop: BTreeMap<&str, usize> = BTreeMap::new();
    for r in pool.iter().filter(|r| r.stratum() == Stratum::Hs && r.split != Split::Test) {
        *bucket_pop.entry(bucket_key(r)).or_default() += 1;
    }
    for k in bucket_pop.keys() {
        report.buckets.insert(k.to_string(), 0);
    }

    let mut seen = HashSet::new();
    for id in &split.member_ids {
        if !seen.insert(id.as_str()) {
            report.violations.push(format!("duplicate member {id}"));
            continue;
        }
        let Some(r) = by_id.get(id.as_str()) else {
            report.violations.push(format!("unknown member {id}"));
            continue;
        };
        if r.split == Split::Test {
            report.violations.push(format!("test-split member {id}"));
        }
        *report.strata.entry(r.stratum()).or_default() += 1;
        if r.stratum() == Stratum::Hs {
            *report.buckets.entry(bucket_key(r).to_string()).or_default() += 1;
        }
    }

    if split.member_ids.len() != split.size {
        report.violations.push(format!(
            "{} members for size {}",
            split.member_ids.len(),
            split.size
        ));
    }
    let quota = Quota::for_size(split.size);
    let off: Vec<String> = report
        .strata
        .iter()
        .filter(|(&s, &count)| count != quota.get(s))
        .map(|(&s, &count)| format!("{} {count}/{}", s.as_str(), quota.get(s)))
        .collect();
    if !off.is_empty() {
        report.violations.push(format!("quota: {}", off.join(", ")));
    }

    for (k, &pop) in &bucket_pop {
        if report.buckets.get(*k).copied().unwrap_or(0) >= pop {
            report.exhausted.push(k.to_string());
        }
    }
    let max = report.buckets.values().copied().max().unwrap_or(0);
    for (k, &count) in &report.buckets {
        let exhausted = report.exhausted.iter().any(|e| e == k);
        if !exhausted && count + 1 < max {
            report
                .violations
                .push(format!("bucket `{k}`: {count} members, max bucket has {max}"));
        }
    }
    report
}
