mod common;

use std::collections::BTreeSet;

use common::RawTree;
use paperassign_core::keywords::{expand_reviewer_selection, reduce_parent_child, restrict_to_closest};
use paperassign_core::similarity::{keyword_pair_similarity, set_similarity, LevelWeights};
use paperassign_core::{CompetenceLevel, KeywordId, PaperKeywordSet, ReviewerSelection};
use proptest::prelude::*;

const LEVELS: [CompetenceLevel; 3] = [CompetenceLevel::Low, CompetenceLevel::Medium, CompetenceLevel::High];

fn kid(i: usize) -> KeywordId {
    KeywordId::new(RawTree::id(i))
}

fn index(k: &KeywordId) -> usize {
    k.as_str()[1..].parse().unwrap()
}

/// A tree of 1..=50 nodes plus a random paper set and reviewer selection on it.
fn tree_case() -> impl Strategy<Value = (RawTree, BTreeSet<usize>, Vec<(usize, usize)>, usize)> {
    proptest::collection::vec(0.0f64..1.0, 0..50).prop_flat_map(|fracs| {
        let tree = RawTree::from_fractions(&fracs);
        let n = tree.len();
        (
            Just(tree),
            proptest::collection::btree_set(0..n, 1..=n.min(6)),
            proptest::collection::vec((0..n, 0..3usize), 0..=n.min(6)),
            0usize..5,
        )
    })
}

fn selection(entries: &[(usize, usize)]) -> ReviewerSelection {
    let mut sel = ReviewerSelection::new();
    for &(k, l) in entries {
        sel.insert(kid(k), LEVELS[l]);
    }
    sel
}

fn paper(set: &BTreeSet<usize>) -> PaperKeywordSet {
    PaperKeywordSet(set.iter().map(|&i| kid(i)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn expansion_properties((tree, _, entries, threshold) in tree_case()) {
        let t = tree.taxonomy();
        let sel = selection(&entries);
        let out = expand_reviewer_selection(&t, &sel, threshold).unwrap();
        // never removes or changes an original entry
        for (k, l) in sel.iter() {
            prop_assert_eq!(out.get(k), Some(l));
        }
        // every added entry is a direct child of an expandable original pick
        for (k, l) in out.iter() {
            if sel.get(k).is_some() {
                continue;
            }
            prop_assert!(out.is_derived(k));
            let parent = tree.parent[index(k)].expect("added keyword has a parent");
            let pl = sel.get(&kid(parent)).expect("parent was selected");
            prop_assert_eq!(l, pl);
            prop_assert!(pl >= CompetenceLevel::Medium);
            prop_assert!(tree.depth(parent) < threshold);
            prop_assert!(tree.children(parent).iter().all(|c| sel.get(&kid(*c)).is_none()));
        }
        // every expandable pick had all its children added
        for (k, l) in sel.iter() {
            let i = index(k);
            let kids = tree.children(i);
            if l >= CompetenceLevel::Medium && tree.depth(i) < threshold && !kids.is_empty()
                && kids.iter().all(|c| sel.get(&kid(*c)).is_none())
            {
                prop_assert!(kids.iter().all(|c| out.get(&kid(*c)).is_some()));
            }
        }
        // idempotent
        prop_assert_eq!(expand_reviewer_selection(&t, &out, threshold).unwrap(), out);
    }

    #[test]
    fn reduction_properties((tree, set, _, _) in tree_case()) {
        let t = tree.taxonomy();
        let input = paper(&set);
        let out = reduce_parent_child(&t, &input).unwrap();
        let kept: BTreeSet<usize> = out.iter().map(index).collect();
        prop_assert!(kept.is_subset(&set));
        for &a in &kept {
            for &b in &kept {
                prop_assert_ne!(tree.parent[b], Some(a));
            }
        }
        // exactly the keywords with a selected direct child are removed
        for &a in &set {
            let has_child = set.iter().any(|&b| tree.parent[b] == Some(a));
            prop_assert_eq!(kept.contains(&a), !has_child);
        }
        prop_assert!(!out.is_empty());
        prop_assert_eq!(reduce_parent_child(&t, &out).unwrap(), out.clone());
        // independent of the order in which keywords were listed
        let mut shuffled: Vec<usize> = set.iter().copied().collect();
        shuffled.reverse();
        let again = PaperKeywordSet(shuffled.into_iter().map(kid).collect());
        prop_assert_eq!(reduce_parent_child(&t, &again).unwrap(), out);
    }

    #[test]
    fn restriction_properties((tree, set, entries, _) in tree_case()) {
        let t = tree.taxonomy();
        let sel = selection(&entries);
        let p = paper(&set);
        let out = restrict_to_closest(&t, &p, &sel).unwrap();
        for (k, l) in out.iter() {
            prop_assert_eq!(sel.get(k), Some(l));
        }
        // each paper keyword keeps every reviewer keyword at maximal similarity
        for &pk in &set {
            let best = sel.iter().map(|(k, _)| tree.similarity(pk, index(k))).fold(f64::NEG_INFINITY, f64::max);
            for (k, _) in sel.iter() {
                if tree.similarity(pk, index(k)) == best {
                    prop_assert!(out.get(k).is_some());
                }
            }
        }
        prop_assert_eq!(sel.is_empty(), out.is_empty());
        prop_assert_eq!(restrict_to_closest(&t, &p, &out).unwrap(), out);
    }

    #[test]
    fn pair_similarity_matches_definition((tree, _, _, _) in tree_case(), a in 0usize..50, b in 0usize..50) {
        let t = tree.taxonomy();
        let (a, b) = (a % tree.len(), b % tree.len());
        let s = keyword_pair_similarity(&t, &kid(a), &kid(b)).unwrap();
        prop_assert_eq!(s, tree.similarity(a, b));
        prop_assert_eq!(s, keyword_pair_similarity(&t, &kid(b), &kid(a)).unwrap());
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s == 1.0, a == b);
    }

    #[test]
    fn similarity_to_ancestors_is_monotone((tree, _, _, _) in tree_case(), a in 0usize..50) {
        let t = tree.taxonomy();
        let a = a % tree.len();
        let sims: Vec<f64> = tree
            .ancestors(a)
            .iter()
            .map(|&x| keyword_pair_similarity(&t, &kid(a), &kid(x)).unwrap())
            .collect();
        prop_assert!(sims.windows(2).all(|w| w[0] >= w[1]), "{:?}", sims);
    }

    #[test]
    fn set_similarity_matches_definition((tree, set, entries, _) in tree_case()) {
        let t = tree.taxonomy();
        let sel = selection(&entries);
        let w = LevelWeights::default();
        let got = set_similarity(&t, &paper(&set), &sel, &w).unwrap();
        let want = set
            .iter()
            .map(|&pk| {
                sel.iter()
                    .map(|(k, l)| tree.similarity(pk, index(k)) * w.level_weight(l))
                    .fold(0.0, f64::max)
            })
            .sum::<f64>()
            / set.len() as f64;
        prop_assert!((got - want).abs() < 1e-12, "{} vs {}", got, want);
    }

    /// Disjoint sibling leaves under a parent at depth >= 1 still score above zero.
    #[test]
    fn sibling_leaves_have_nonzero_similarity((tree, _, _, _) in tree_case(), level in 0usize..3) {
        let t = tree.taxonomy();
        let w = LevelWeights::default();
        for a in 0..tree.len() {
            for b in 0..tree.len() {
                let siblings = a != b && tree.parent[a].is_some() && tree.parent[a] == tree.parent[b];
                if !(siblings && tree.is_leaf(a) && tree.is_leaf(b) && tree.depth(a) >= 2) {
                    continue;
                }
                let p = PaperKeywordSet(BTreeSet::from([kid(a)]));
                let sel = ReviewerSelection::new().with(&RawTree::id(b), LEVELS[level]);
                prop_assert!(set_similarity(&t, &p, &sel, &w).unwrap() > 0.0);
            }
        }
    }
}

#[test]
fn documented_examples() {
    let t = paperassign_core::Taxonomy::from_xml(common::fixture("taxonomy.xml").as_bytes()).unwrap();
    let sel = ReviewerSelection::new().with("IS", CompetenceLevel::High);
    let expanded = expand_reviewer_selection(&t, &sel, 3).unwrap();
    let keys: Vec<&str> = expanded.iter().map(|(k, _)| k.as_str()).collect();
    assert_eq!(keys, ["CMS", "DL", "IS"]);
    assert_eq!(expand_reviewer_selection(&t, &sel, 2).unwrap(), sel);

    // A pick at the root adds its children once; the added SW does not expand.
    let root = ReviewerSelection::new().with("CS", CompetenceLevel::High);
    let once = expand_reviewer_selection(&t, &root, 2).unwrap();
    let keys: Vec<&str> = once.iter().map(|(k, _)| k.as_str()).collect();
    assert_eq!(keys, ["CS", "HW", "SW"]);
    assert_eq!(expand_reviewer_selection(&t, &once, 2).unwrap(), once);

    let reduced = reduce_parent_child(&t, &PaperKeywordSet::of(&["SW", "IS", "CMS"])).unwrap();
    assert_eq!(reduced, PaperKeywordSet::of(&["CMS"]));

    let wide = ReviewerSelection::new()
        .with("CMS", CompetenceLevel::High)
        .with("HW", CompetenceLevel::High)
        .with("PL", CompetenceLevel::Medium);
    let narrowed = restrict_to_closest(&t, &PaperKeywordSet::of(&["DL"]), &wide).unwrap();
    assert_eq!(narrowed, ReviewerSelection::new().with("CMS", CompetenceLevel::High));

    let s = |a: &str, b: &str| keyword_pair_similarity(&t, &KeywordId::new(a), &KeywordId::new(b)).unwrap();
    assert_eq!(s("CMS", "CMS"), 1.0);
    assert!((s("CMS", "DL") - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(s("CMS", "HW"), 0.0);
    assert!((s("CMS", "PL") - 0.4).abs() < 1e-12);
}
