use rand::seq::SliceRandom;

use super::{filter_by_reference, js_divergence, pagerank, restrict_to_pairs, Sample, DEFAULT_DAMPING, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::kg::{degree_distribution, AlignmentSet, KnowledgeGraph};
use crate::rng;

fn check_size(available: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    if available < n {
        return Err(Error::Validation(format!(
            "reference alignment has {available} usable pairs; cannot sample {n}"
        )));
    }
    Ok(())
}

fn finish(
    source1: &KnowledgeGraph,
    source2: &KnowledgeGraph,
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    chosen: AlignmentSet,
) -> Result<Sample> {
    let (s1, s2, links) = restrict_to_pairs(kg1, kg2, chosen);
    let js = [
        js_divergence(&degree_distribution(source1)?, &degree_distribution(&s1)?)?,
        js_divergence(&degree_distribution(source2)?, &degree_distribution(&s2)?)?,
    ];
    Ok(Sample {
        kg1: s1,
        kg2: s2,
        links,
        js: Some(js),
        attempts: 1,
        rounds: 1,
    })
}

/// Random alignment sampling: `n` reference pairs chosen uniformly, each
/// graph keeping the triples whose ends both survive.
pub fn ras_sample(
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    reference: &AlignmentSet,
    n: usize,
    seed: u64,
) -> Result<Sample> {
    reference.check_one_to_one()?;
    let (f1, f2, links) = filter_by_reference(kg1, kg2, reference);
    check_size(links.len(), n)?;
    let mut pairs = links.into_pairs();
    pairs.shuffle(&mut rng::seeded(seed));
    pairs.truncate(n);
    finish(&f1, &f2, &f1, &f2, AlignmentSet::new(pairs))
}

/// PageRank-based sampling: `n` KG1 entities drawn without replacement in
/// proportion to their PageRank, together with their KG2 counterparts.
pub fn prs_sample(
    kg1: &KnowledgeGraph,
    kg2: &KnowledgeGraph,
    reference: &AlignmentSet,
    n: usize,
    seed: u64,
) -> Result<Sample> {
    reference.check_one_to_one()?;
    let (f1, f2, links) = filter_by_reference(kg1, kg2, reference);
    check_size(links.len(), n)?;
    let pr = pagerank(&f1, DEFAULT_DAMPING, DEFAULT_TOLERANCE)?;
    let weights: Vec<f64> = links
        .sources()
        .map(|a| pr.score[f1.entity_id(a).expect("filtered link")])
        .collect();
    let order = rng::weighted_order(&mut rng::seeded(seed), &weights);
    let pairs = links.pairs();
    let chosen = order.into_iter().take(n).map(|i| pairs[i].clone()).collect();
    finish(&f1, &f2, &f1, &f2, chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::test_graphs::from_edges;
    use crate::synthetic::{power_law_pair, SyntheticConfig};
    use std::collections::{HashMap, HashSet};

    fn identity_links(kg: &KnowledgeGraph) -> AlignmentSet {
        kg.entities().iter().map(|e| (e.clone(), e.clone())).collect()
    }

    #[test]
    fn select_all_is_identity_after_filtering() {
        let p = power_law_pair(&SyntheticConfig::default());
        let s = ras_sample(&p.kg1, &p.kg2, &p.links, 200, 1).unwrap();
        assert_eq!(s.kg1, p.kg1);
        assert_eq!(s.kg2, p.kg2);
        let s = prs_sample(&p.kg1, &p.kg2, &p.links, 200, 1).unwrap();
        assert_eq!(s.kg1, p.kg1);
        assert_eq!(s.js.unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn single_pair_keeps_only_self_loops() {
        let kg = KnowledgeGraph::from_triples(vec![
            ("a".into(), "r".into(), "a".into()),
            ("a".into(), "r".into(), "b".into()),
        ]);
        let links = AlignmentSet::new(vec![("a".into(), "a".into())]);
        let s = ras_sample(&kg, &kg, &links, 1, 0).unwrap();
        assert_eq!(s.kg1.num_entities(), 1);
        assert_eq!(s.kg1.rel_triples().len(), 1);
        let t = s.kg1.rel_triples()[0];
        assert_eq!(t.head, t.tail);
    }

    #[test]
    fn too_large_request_fails() {
        let p = power_law_pair(&SyntheticConfig::default());
        assert!(ras_sample(&p.kg1, &p.kg2, &p.links, 201, 0).is_err());
        assert!(prs_sample(&p.kg1, &p.kg2, &p.links, 201, 0).is_err());
    }

    #[test]
    fn outputs_are_subsets() {
        let p = power_law_pair(&SyntheticConfig::default());
        for s in [
            ras_sample(&p.kg1, &p.kg2, &p.links, 80, 3).unwrap(),
            prs_sample(&p.kg1, &p.kg2, &p.links, 80, 3).unwrap(),
        ] {
            assert_eq!(s.links.len(), 80);
            let input: HashSet<_> = p.kg2.named_rel_triples().collect();
            assert!(s.kg2.named_rel_triples().all(|t| input.contains(&t)));
            assert_eq!(s.kg1.num_entities(), 80);
        }
    }

    #[test]
    fn prs_uniform_on_regular_graph() {
        // Ring: every vertex has degree 2, so PageRank is uniform.
        let names: Vec<String> = (0..20).map(|i| format!("v{i:02}")).collect();
        let edges: Vec<(&str, &str)> = (0..20).map(|i| (names[i].as_str(), names[(i + 1) % 20].as_str())).collect();
        let kg = from_edges(&edges);
        let links = identity_links(&kg);
        let mut counts: HashMap<String, usize> = HashMap::new();
        let runs = 400;
        for seed in 0..runs {
            let s = prs_sample(&kg, &kg, &links, 5, seed).unwrap();
            for e in s.kg1.entities() {
                *counts.entry(e.clone()).or_default() += 1;
            }
        }
        let expected = runs as f64 * 5.0 / 20.0;
        let chi2: f64 = names
            .iter()
            .map(|n| {
                let o = *counts.get(n).unwrap_or(&0) as f64;
                (o - expected).powi(2) / expected
            })
            .sum();
        // 19 degrees of freedom, 0.1% critical value.
        assert!(chi2 < 43.82, "chi2 = {chi2}");
    }

    #[test]
    fn prs_prefers_hubs() {
        // Two stars joined at their centres.
        let mut edges = vec![("h1".to_string(), "h2".to_string())];
        for i in 0..10 {
            edges.push(("h1".into(), format!("l1_{i}")));
            edges.push(("h2".into(), format!("l2_{i}")));
        }
        let refs: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let kg = from_edges(&refs);
        let links = identity_links(&kg);
        let (mut hub, mut leaf) = (0, 0);
        for seed in 0..100 {
            let s = prs_sample(&kg, &kg, &links, 4, seed).unwrap();
            hub += usize::from(s.kg1.contains_entity("h1"));
            leaf += usize::from(s.kg1.contains_entity("l1_0"));
        }
        assert!(hub > leaf, "hub {hub} leaf {leaf}");
    }
}
