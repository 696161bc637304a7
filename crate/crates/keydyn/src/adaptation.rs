//! Double-threshold update decisions, gallery update policies and the
//! meta-reference that evolves several sub-references in parallel.
//!
//! A query is compared against every sub-reference of the claimant's
//! meta-reference; the centered scores are fused and the double threshold
//! decides on the aggregated score alone (no ground-truth label). When the
//! decision is accept-and-update, every sub-reference receives the query and
//! applies its own gallery policy, rebuilding its statistics from scratch.

use crate::corpus::KeystrokeSample;
use crate::error::{Error, Result};
use crate::recognizer::{
    build_reference_with, fuse, score, FusionRule, Gallery, Reference, ScoreMethod,
};

/// Gallery update policy of one sub-reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateStrategy {
    /// Keep the enrollment gallery forever.
    NoUpdate,
    /// An accepted query replaces the oldest gallery sample.
    SlidingWindow,
    /// An accepted query is appended to the gallery.
    GrowingWindow,
}

impl UpdateStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            UpdateStrategy::NoUpdate => "none",
            UpdateStrategy::SlidingWindow => "sliding",
            UpdateStrategy::GrowingWindow => "growing",
        }
    }

    /// Whether this policy can ever change its gallery.
    pub fn is_mutating(&self) -> bool {
        !matches!(self, UpdateStrategy::NoUpdate)
    }
}

/// Outcome of one verification attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Reject,
    Accept,
    AcceptAndUpdate,
}

impl Decision {
    pub fn is_accepted(&self) -> bool {
        !matches!(self, Decision::Reject)
    }

    pub fn is_update(&self) -> bool {
        matches!(self, Decision::AcceptAndUpdate)
    }
}

/// One gallery plus the reference built from it; the reference is rebuilt
/// whenever the gallery changes, so the pair is always consistent.
#[derive(Debug, Clone)]
pub struct SubReference {
    gallery: Gallery,
    strategy: UpdateStrategy,
    reference: Reference,
}

impl SubReference {
    pub fn new(gallery: Gallery, strategy: UpdateStrategy) -> Result<Self> {
        Self::with_method(gallery, strategy, ScoreMethod::default())
    }

    pub fn with_method(
        gallery: Gallery,
        strategy: UpdateStrategy,
        method: ScoreMethod,
    ) -> Result<Self> {
        let reference = build_reference_with(&gallery, method)?;
        Ok(Self {
            gallery,
            strategy,
            reference,
        })
    }

    pub fn gallery(&self) -> &Gallery {
        &self.gallery
    }

    pub fn strategy(&self) -> UpdateStrategy {
        self.strategy
    }

    pub fn reference(&self) -> &Reference {
        &self.reference
    }
}

/// The composite model of one user: parallel sub-references plus the rule
/// that fuses their scores.
#[derive(Debug, Clone)]
pub struct MetaReference {
    subs: Vec<SubReference>,
    fusion: FusionRule,
}

impl MetaReference {
    pub fn new(subs: Vec<SubReference>, fusion: FusionRule) -> Result<Self> {
        if subs.is_empty() {
            return Err(Error::Contract(
                "a meta-reference needs at least one sub-reference".into(),
            ));
        }
        let dim = subs[0].gallery().dimension();
        for sub in &subs {
            if sub.gallery().dimension() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    got: sub.gallery().dimension(),
                });
            }
        }
        Ok(Self { subs, fusion })
    }

    pub fn subs(&self) -> &[SubReference] {
        &self.subs
    }

    pub fn fusion(&self) -> FusionRule {
        self.fusion
    }

    /// True when at least one sub-reference has a mutating update policy.
    pub fn can_update(&self) -> bool {
        self.subs.iter().any(|s| s.strategy().is_mutating())
    }

    /// Fused centered score of a query against all sub-references.
    pub fn fused_score(&self, query: &KeystrokeSample) -> Result<f64> {
        let scores = self
            .subs
            .iter()
            .map(|sub| score(query, sub.reference()))
            .collect::<Result<Vec<f64>>>()?;
        fuse(&scores, self.fusion)
    }
}

/// A named meta-reference layout: which update policy each sub-reference
/// runs and how their scores are fused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSpec {
    pub name: String,
    pub sub_strategies: Vec<UpdateStrategy>,
    pub fusion: FusionRule,
}

impl MethodSpec {
    /// Build a fresh meta-reference for this method; every sub-reference
    /// starts from its own copy of the enrollment gallery.
    pub fn instantiate(&self, enrollment: &Gallery) -> Result<MetaReference> {
        self.instantiate_with(enrollment, ScoreMethod::default())
    }

    pub fn instantiate_with(
        &self,
        enrollment: &Gallery,
        method: ScoreMethod,
    ) -> Result<MetaReference> {
        let subs = self
            .sub_strategies
            .iter()
            .map(|&strategy| SubReference::with_method(enrollment.clone(), strategy, method))
            .collect::<Result<Vec<_>>>()?;
        MetaReference::new(subs, self.fusion)
    }
}

/// Apply the double threshold to a fused dissimilarity score. Equality
/// counts as satisfying a threshold.
pub fn decide(fused_score: f64, accept_threshold: f64, update_threshold: f64) -> Result<Decision> {
    if update_threshold > accept_threshold {
        return Err(Error::Config(format!(
            "update threshold {update_threshold} must not exceed accept threshold {accept_threshold}"
        )));
    }
    Ok(if fused_score <= update_threshold {
        Decision::AcceptAndUpdate
    } else if fused_score <= accept_threshold {
        Decision::Accept
    } else {
        Decision::Reject
    })
}

/// Apply one sub-reference's update policy to an accepted query. Mutating
/// policies rebuild the reference from scratch afterwards.
pub fn apply_update(sub: &mut SubReference, query: &KeystrokeSample) -> Result<()> {
    if query.features.len() != sub.gallery.dimension() {
        return Err(Error::Shape {
            expected: sub.gallery.dimension(),
            got: query.features.len(),
        });
    }
    match sub.strategy {
        UpdateStrategy::NoUpdate => Ok(()),
        UpdateStrategy::SlidingWindow => {
            sub.gallery.evict_oldest();
            sub.gallery.append(query.clone())?;
            sub.reference = build_reference_with(&sub.gallery, sub.reference.method())?;
            Ok(())
        }
        UpdateStrategy::GrowingWindow => {
            sub.gallery.append(query.clone())?;
            sub.reference = build_reference_with(&sub.gallery, sub.reference.method())?;
            Ok(())
        }
    }
}

/// Score a query, decide on the fused score, and on accept-and-update feed
/// the query to every sub-reference.
///
/// The decision sees only the query and the thresholds; ground truth is
/// never an input. A meta-reference whose sub-references are all `NoUpdate`
/// has no update process, so scores below the update threshold come back as
/// plain accepts and no query is ever consumed.
pub fn verify_and_maybe_update(
    meta: &mut MetaReference,
    query: &KeystrokeSample,
    accept_threshold: f64,
    update_threshold: f64,
) -> Result<(Decision, f64)> {
    let fused = meta.fused_score(query)?;
    let mut decision = decide(fused, accept_threshold, update_threshold)?;
    if decision == Decision::AcceptAndUpdate && !meta.can_update() {
        decision = Decision::Accept;
    }
    if decision == Decision::AcceptAndUpdate {
        for sub in &mut meta.subs {
            apply_update(sub, query)?;
        }
    }
    Ok((decision, fused))
}

/// The nine update methods compared in the experiments.
pub fn catalog_specs() -> Vec<MethodSpec> {
    use FusionRule::{Mean, Min};
    use UpdateStrategy::{GrowingWindow, NoUpdate, SlidingWindow};
    let spec = |name: &str, subs: &[UpdateStrategy], fusion| MethodSpec {
        name: name.to_string(),
        sub_strategies: subs.to_vec(),
        fusion,
    };
    vec![
        spec("None", &[NoUpdate], Mean),
        spec("Sliding", &[SlidingWindow], Mean),
        spec("Growing", &[GrowingWindow], Mean),
        spec("Parallel sliding", &[NoUpdate, SlidingWindow], Mean),
        spec("Parallel growing", &[NoUpdate, GrowingWindow], Mean),
        spec("Parallel both", &[SlidingWindow, GrowingWindow], Mean),
        spec("Parallel min sliding", &[NoUpdate, SlidingWindow], Min),
        spec("Parallel min growing", &[NoUpdate, GrowingWindow], Min),
        spec("Parallel min both", &[SlidingWindow, GrowingWindow], Min),
    ]
}

/// Look up a catalog method by its exact name.
pub fn find_method(name: &str) -> Option<MethodSpec> {
    catalog_specs().into_iter().find(|m| m.name == name)
}

/// Instantiate every catalog method on independent copies of the
/// enrollment gallery.
pub fn method_catalog(enrollment: &Gallery) -> Result<Vec<(MethodSpec, MetaReference)>> {
    catalog_specs()
        .into_iter()
        .map(|spec| {
            let meta = spec.instantiate(enrollment)?;
            Ok((spec, meta))
        })
        .collect()
}
